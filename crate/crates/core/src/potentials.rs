//! Forcing terms `g(t, z)` and their growth data.
//!
//! Every built-in family is `T`-periodic in `t`, subcubic in `z`, and carries
//! closed-form values for the threshold radius `R*` and the disk supremum `M`
//! used by the existence certificate. User-supplied potentials built with
//! [`Potential::custom`] carry neither; the certificate then falls back to
//! grid scans and the solver to finite-difference derivatives.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::lattice::LatticeError;

/// Real 2x2 Jacobian of `(x, y) -> (Re g, Im g)`, rows `(Re, Im)`, columns `(x, y)`.
pub type Jacobian2 = [[f64; 2]; 2];

type EvalFn = dyn Fn(usize, Complex64) -> Complex64 + Send + Sync;
type DerivFn = dyn Fn(usize, Complex64) -> Jacobian2 + Send + Sync;

/// Phases used by every polar-grid scan over `|z| = rho`.
pub const PHASE_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("exponent r = {0} is outside the subcubic range (0, 3)")]
    InvalidExponent(f64),
    #[error("coefficient list is empty")]
    EmptyCoefficients,
    #[error("coefficient {index} is not finite")]
    NonFiniteCoefficient { index: usize },
}

/// Closed-form `(R*, M)` for a given threshold coefficient `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormBounds {
    pub rstar: f64,
    pub m: f64,
}

#[derive(Clone)]
enum Kind {
    Zero,
    /// `f(t) |z|^(r-1) z`
    PowerLaw {
        coeffs: Vec<Complex64>,
        exponent: f64,
    },
    /// `f(t) z / (1 + |z|^2)`
    Bounded {
        coeffs: Vec<Complex64>,
    },
    /// `f(t)`, independent of `z`
    Constant {
        coeffs: Vec<Complex64>,
    },
    Custom {
        label: String,
        eval: Arc<EvalFn>,
        derivative: Option<Arc<DerivFn>>,
    },
}

/// A forcing term `g(t, z)`, periodic in `t` with period [`Potential::period`].
#[derive(Clone)]
pub struct Potential {
    period: usize,
    kind: Kind,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Potential");
        s.field("kind", &self.kind_name())
            .field("period", &self.period);
        match &self.kind {
            Kind::PowerLaw { coeffs, exponent } => {
                s.field("coeffs", coeffs).field("exponent", exponent);
            }
            Kind::Bounded { coeffs } | Kind::Constant { coeffs } => {
                s.field("coeffs", coeffs);
            }
            Kind::Custom { label, .. } => {
                s.field("label", label);
            }
            Kind::Zero => {}
        }
        s.finish()
    }
}

fn check_coeffs(coeffs: &[Complex64]) -> Result<(), PotentialError> {
    if coeffs.is_empty() {
        return Err(PotentialError::EmptyCoefficients);
    }
    if let Some(index) = coeffs.iter().position(|z| !z.is_finite()) {
        return Err(PotentialError::NonFiniteCoefficient { index });
    }
    Ok(())
}

impl Potential {
    /// `g = 0`.
    pub fn zero() -> Self {
        Self {
            period: 1,
            kind: Kind::Zero,
        }
    }

    /// `g(t, z) = f(t) |z|^(r-1) z` with `0 < r < 3`; the period is `f.len()`.
    pub fn power_law(coeffs: Vec<Complex64>, exponent: f64) -> Result<Self, PotentialError> {
        if !(exponent > 0.0 && exponent < 3.0) {
            return Err(PotentialError::InvalidExponent(exponent));
        }
        Self::power_law_unchecked(coeffs, exponent)
    }

    /// Power law without the subcubic restriction on `r` (only `r > 0` is
    /// required). For `r >= 3` the growth hypothesis fails; no closed-form
    /// bounds are attached, so certification has to scan and is expected to
    /// report `NoThresholdFound`. Intended for negative testing.
    pub fn power_law_unchecked(
        coeffs: Vec<Complex64>,
        exponent: f64,
    ) -> Result<Self, PotentialError> {
        check_coeffs(&coeffs)?;
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(PotentialError::InvalidExponent(exponent));
        }
        Ok(Self {
            period: coeffs.len(),
            kind: Kind::PowerLaw { coeffs, exponent },
        })
    }

    /// `g(t, z) = f(t) z / (1 + |z|^2)`, bounded by `|f(t)| / 2`.
    pub fn bounded(coeffs: Vec<Complex64>) -> Result<Self, PotentialError> {
        check_coeffs(&coeffs)?;
        Ok(Self {
            period: coeffs.len(),
            kind: Kind::Bounded { coeffs },
        })
    }

    /// `g(t, z) = f(t)`.
    pub fn constant(coeffs: Vec<Complex64>) -> Result<Self, PotentialError> {
        check_coeffs(&coeffs)?;
        Ok(Self {
            period: coeffs.len(),
            kind: Kind::Constant { coeffs },
        })
    }

    /// Arbitrary continuous forcing. `eval` receives `t` already reduced mod `period`.
    pub fn custom(
        label: impl Into<String>,
        period: usize,
        eval: impl Fn(usize, Complex64) -> Complex64 + Send + Sync + 'static,
        derivative: Option<Arc<DerivFn>>,
    ) -> Self {
        assert!(period >= 1, "period must be positive");
        Self {
            period,
            kind: Kind::Custom {
                label: label.into(),
                eval: Arc::new(eval),
                derivative,
            },
        }
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn kind_name(&self) -> &str {
        match &self.kind {
            Kind::Zero => "zero",
            Kind::PowerLaw { .. } => "power_law",
            Kind::Bounded { .. } => "bounded",
            Kind::Constant { .. } => "constant",
            Kind::Custom { label, .. } => label,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    pub fn growth_exponent(&self) -> Option<f64> {
        match &self.kind {
            Kind::PowerLaw { exponent, .. } => Some(*exponent),
            _ => None,
        }
    }

    fn coeffs(&self) -> Option<&[Complex64]> {
        match &self.kind {
            Kind::PowerLaw { coeffs, .. }
            | Kind::Bounded { coeffs }
            | Kind::Constant { coeffs } => Some(coeffs),
            _ => None,
        }
    }

    /// `max_t |f(t)|` for the coefficient families, zero for `g = 0`.
    pub fn max_coefficient(&self) -> Option<f64> {
        match &self.kind {
            Kind::Zero => Some(0.0),
            _ => self
                .coeffs()
                .map(|c| c.iter().map(|z| z.norm()).fold(0.0, f64::max)),
        }
    }

    /// `min_t |f(t)|` for the coefficient families, zero for `g = 0`.
    pub fn min_coefficient(&self) -> Option<f64> {
        match &self.kind {
            Kind::Zero => Some(0.0),
            _ => self
                .coeffs()
                .map(|c| c.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)),
        }
    }

    pub fn check_period(&self, t_period: usize) -> Result<(), LatticeError> {
        if t_period.is_multiple_of(self.period) {
            Ok(())
        } else {
            Err(LatticeError::PeriodMismatch {
                period: self.period,
                t_period,
            })
        }
    }

    pub fn evaluate(&self, t: usize, z: Complex64) -> Complex64 {
        let t = t % self.period;
        match &self.kind {
            Kind::Zero => Complex64::new(0.0, 0.0),
            Kind::PowerLaw { coeffs, exponent } => {
                let rho = z.norm();
                if rho == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    coeffs[t] * (rho.powf(exponent - 1.0) * z)
                }
            }
            Kind::Bounded { coeffs } => coeffs[t] * z / (1.0 + z.norm_sqr()),
            Kind::Constant { coeffs } => coeffs[t],
            Kind::Custom { eval, .. } => eval(t, z),
        }
    }

    pub fn has_derivative(&self) -> bool {
        !matches!(
            self.kind,
            Kind::Custom {
                derivative: None,
                ..
            }
        )
    }

    /// Analytic realified Jacobian of `z -> g(t, z)`, when available.
    pub fn derivative(&self, t: usize, z: Complex64) -> Option<Jacobian2> {
        let t = t % self.period;
        let zero = [[0.0; 2]; 2];
        let jac = match &self.kind {
            Kind::Zero | Kind::Constant { .. } => zero,
            Kind::PowerLaw { coeffs, exponent } => {
                let rho = z.norm();
                if rho == 0.0 {
                    // Differentiable at 0 only for r >= 1; for r < 1 the zero block is returned.
                    if *exponent == 1.0 {
                        complex_multiplication(coeffs[t])
                    } else {
                        zero
                    }
                } else {
                    let q = rho.powf(exponent - 1.0);
                    let dq = (exponent - 1.0) * rho.powf(exponent - 3.0);
                    let dx = q + dq * z.re * z;
                    let dy = Complex64::new(0.0, q) + dq * z.im * z;
                    partials_to_block(coeffs[t] * dx, coeffs[t] * dy)
                }
            }
            Kind::Bounded { coeffs } => {
                let denom = 1.0 + z.norm_sqr();
                let dx = 1.0 / denom - 2.0 * z.re * z / (denom * denom);
                let dy = Complex64::new(0.0, 1.0 / denom) - 2.0 * z.im * z / (denom * denom);
                partials_to_block(coeffs[t] * dx, coeffs[t] * dy)
            }
            Kind::Custom { derivative, .. } => return derivative.as_ref().map(|d| d(t, z)),
        };
        Some(jac)
    }

    /// Central finite-difference Jacobian with step `1e-6 (1 + |z|)`.
    pub fn finite_difference_derivative(&self, t: usize, z: Complex64) -> Jacobian2 {
        let h = 1e-6 * (1.0 + z.norm());
        let dx = (self.evaluate(t, z + h) - self.evaluate(t, z - h)) / (2.0 * h);
        let ih = Complex64::new(0.0, h);
        let dy = (self.evaluate(t, z + ih) - self.evaluate(t, z - ih)) / (2.0 * h);
        partials_to_block(dx, dy)
    }

    /// Analytic Jacobian if present, otherwise finite differences.
    pub fn derivative_or_fd(&self, t: usize, z: Complex64) -> Jacobian2 {
        self.derivative(t, z)
            .unwrap_or_else(|| self.finite_difference_derivative(t, z))
    }

    /// Closed-form `R*` and `M` for the threshold `|g(t,z)| < c |z|^3`.
    ///
    /// Returns `None` for custom potentials and for power laws with `r >= 3`.
    pub fn bounds(&self, c: f64) -> Option<ClosedFormBounds> {
        assert!(c > 0.0, "threshold coefficient must be positive");
        let fmax = self.max_coefficient()?;
        let rstar = if fmax == 0.0 {
            1.0
        } else {
            match &self.kind {
                Kind::PowerLaw { exponent, .. } => {
                    if *exponent >= 3.0 {
                        return None;
                    }
                    // |f| rho^r < c rho^3  <=>  rho > (|f|/c)^(1/(3-r))
                    (fmax / c).powf(1.0 / (3.0 - exponent))
                }
                Kind::Bounded { .. } => {
                    // |f| rho/(1+rho^2) < c rho^3  <=>  c w^2 + c w - |f| > 0, w = rho^2
                    (0.5 * (-1.0 + (1.0 + 4.0 * fmax / c).sqrt())).sqrt()
                }
                Kind::Constant { .. } => (fmax / c).cbrt(),
                Kind::Zero | Kind::Custom { .. } => unreachable!("no coefficients"),
            }
        };
        Some(ClosedFormBounds {
            rstar,
            m: self.disk_sup(rstar)?,
        })
    }

    /// Closed-form `sup { |g(t,z)| : t, |z| <= radius }` for the built-in families.
    pub fn disk_sup(&self, radius: f64) -> Option<f64> {
        let fmax = self.max_coefficient()?;
        let sup = match &self.kind {
            Kind::Zero => 0.0,
            Kind::PowerLaw { exponent, .. } => fmax * radius.powf(*exponent),
            Kind::Bounded { .. } => {
                let peak = radius.min(1.0);
                fmax * peak / (1.0 + peak * peak)
            }
            Kind::Constant { .. } => fmax,
            Kind::Custom { .. } => return None,
        };
        Some(sup)
    }

    /// `max_t max_{|z| = rho} |g(t, z)|` over [`PHASE_SAMPLES`] phases.
    pub fn sampled_circle_max(&self, rho: f64) -> f64 {
        let mut best = 0.0f64;
        for t in 0..self.period {
            for j in 0..PHASE_SAMPLES {
                let theta = std::f64::consts::TAU * j as f64 / PHASE_SAMPLES as f64;
                best = best.max(self.evaluate(t, Complex64::from_polar(rho, theta)).norm());
            }
        }
        best
    }
}

fn partials_to_block(dx: Complex64, dy: Complex64) -> Jacobian2 {
    [[dx.re, dy.re], [dx.im, dy.im]]
}

fn complex_multiplication(a: Complex64) -> Jacobian2 {
    [[a.re, -a.im], [a.im, a.re]]
}

/// Sampled ratios `max_t max_{|z|=rho} |g(t,z)| / rho^3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Whether the second half of the ratio sequence is strictly decreasing.
    pub monotone_decay: bool,
}

/// Diagnostic scan of the subcubic growth ratio. Sampling cannot prove the limit.
pub fn growth_check(g: &Potential, radii: &[f64]) -> GrowthReport {
    assert!(
        radii.iter().all(|&r| r > 0.0) && radii.windows(2).all(|w| w[0] < w[1]),
        "radii must be positive and increasing"
    );
    let ratios: Vec<f64> = radii
        .iter()
        .map(|&rho| g.sampled_circle_max(rho) / rho.powi(3))
        .collect();
    let tail = &ratios[ratios.len() / 2..];
    let monotone_decay = tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0] * (1.0 - 1e-9));
    GrowthReport {
        radii: radii.to_vec(),
        ratios,
        monotone_decay,
    }
}
