//! Lattice-periodic fields and the pointwise operators of the DNLS.
//!
//! A [`LatticeField`] is one element of the space of `(T,K)`-periodic complex
//! functions on `Z x Z`. It is stored densely over one fundamental period in
//! row-major order (`idx = t*K + k`), which fixes the identification of the
//! field space with `C^{TK}` used by the matrix code in [`crate::operator`].

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::potentials::Potential;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("invalid lattice parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("potential period {period} does not divide the time period T = {t_period}")]
    PeriodMismatch { period: usize, t_period: usize },
    #[error("field shape {actual_t}x{actual_k} does not match lattice {expected_t}x{expected_k}")]
    ShapeMismatch {
        expected_t: usize,
        expected_k: usize,
        actual_t: usize,
        actual_k: usize,
    },
}

/// Problem constants `beta`, `epsilon`, `gamma` and the lattice periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    #[serde(rename = "T")]
    pub t_period: usize,
    #[serde(rename = "K")]
    pub k_period: usize,
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl LatticeParams {
    pub fn new(
        t_period: usize,
        k_period: usize,
        beta: f64,
        epsilon: f64,
        gamma: f64,
    ) -> Result<Self, LatticeError> {
        let params = Self {
            t_period,
            k_period,
            beta,
            epsilon,
            gamma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let invalid = |field: &'static str, reason: &str| {
            Err(LatticeError::InvalidParams {
                field,
                reason: reason.to_string(),
            })
        };
        if self.t_period < 1 {
            return invalid("T", "time period must be at least 1");
        }
        if self.k_period < 2 {
            return invalid("K", "spatial period must be at least 2");
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return invalid("beta", "must be a finite positive number");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return invalid("epsilon", "must be a finite positive number");
        }
        if !(self.gamma.is_finite() && self.gamma != 0.0) {
            return invalid("gamma", "must be a finite nonzero number");
        }
        Ok(())
    }

    /// Number of lattice nodes in one period, `T*K`.
    pub fn nodes(&self) -> usize {
        self.t_period * self.k_period
    }
}

/// A `(T,K)`-periodic complex lattice function.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    t_period: usize,
    k_period: usize,
    values: Vec<Complex64>,
}

impl LatticeField {
    pub fn zeros(t_period: usize, k_period: usize) -> Self {
        Self::constant(t_period, k_period, Complex64::new(0.0, 0.0))
    }

    pub fn constant(t_period: usize, k_period: usize, value: Complex64) -> Self {
        assert!(t_period >= 1 && k_period >= 1, "empty lattice");
        Self {
            t_period,
            k_period,
            values: vec![value; t_period * k_period],
        }
    }

    pub fn from_fn(
        t_period: usize,
        k_period: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        assert!(t_period >= 1 && k_period >= 1, "empty lattice");
        let mut values = Vec::with_capacity(t_period * k_period);
        for t in 0..t_period {
            for k in 0..k_period {
                values.push(f(t, k));
            }
        }
        Self {
            t_period,
            k_period,
            values,
        }
    }

    /// Builds a field from row-major values (`idx = t*K + k`).
    pub fn from_flat(t_period: usize, k_period: usize, values: Vec<Complex64>) -> Self {
        assert!(t_period >= 1 && k_period >= 1, "empty lattice");
        assert_eq!(values.len(), t_period * k_period, "flat length mismatch");
        Self {
            t_period,
            k_period,
            values,
        }
    }

    /// Builds a field from interleaved `(re, im)` pairs.
    pub fn from_realified(t_period: usize, k_period: usize, data: &[f64]) -> Self {
        assert_eq!(
            data.len(),
            2 * t_period * k_period,
            "realified length mismatch"
        );
        let values = data
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        Self::from_flat(t_period, k_period, values)
    }

    /// Draws each entry uniformly from the closed disk of the given radius.
    pub fn random_in_ball<R: Rng + ?Sized>(
        t_period: usize,
        k_period: usize,
        radius: f64,
        rng: &mut R,
    ) -> Self {
        Self::from_fn(t_period, k_period, |_, _| {
            let modulus = radius * rng.random::<f64>().sqrt();
            let phase = std::f64::consts::TAU * rng.random::<f64>();
            Complex64::from_polar(modulus, phase)
        })
    }

    pub fn t_period(&self) -> usize {
        self.t_period
    }

    pub fn k_period(&self) -> usize {
        self.k_period
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_flat(self) -> Vec<Complex64> {
        self.values
    }

    /// Interleaved `(re, im)` coordinates of the realified field.
    pub fn realified(&self) -> Vec<f64> {
        self.values.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    #[inline]
    pub fn index(&self, t: i64, k: i64) -> usize {
        let t = t.rem_euclid(self.t_period as i64) as usize;
        let k = k.rem_euclid(self.k_period as i64) as usize;
        t * self.k_period + k
    }

    /// Reads the field at any integer node; both coordinates wrap around.
    #[inline]
    pub fn at(&self, t: i64, k: i64) -> Complex64 {
        self.values[self.index(t, k)]
    }

    pub fn set(&mut self, t: i64, k: i64, value: Complex64) {
        let idx = self.index(t, k);
        self.values[idx] = value;
    }

    /// `max |phi(t,k)|` over one period.
    pub fn sup_norm(&self) -> f64 {
        sup_norm_slice(&self.values)
    }

    pub fn same_shape(&self, other: &LatticeField) -> bool {
        self.t_period == other.t_period && self.k_period == other.k_period
    }

    pub fn check_shape(&self, params: &LatticeParams) -> Result<(), LatticeError> {
        if self.t_period == params.t_period && self.k_period == params.k_period {
            Ok(())
        } else {
            Err(LatticeError::ShapeMismatch {
                expected_t: params.t_period,
                expected_k: params.k_period,
                actual_t: self.t_period,
                actual_k: self.k_period,
            })
        }
    }

    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        Self {
            t_period: self.t_period,
            k_period: self.k_period,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|z| factor * z)
    }

    pub fn add(&self, other: &LatticeField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &LatticeField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &LatticeField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Self {
        assert!(self.same_shape(other), "lattice shape mismatch");
        Self {
            t_period: self.t_period,
            k_period: self.k_period,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `sup_norm(self - other)`.
    pub fn sup_distance(&self, other: &LatticeField) -> f64 {
        assert!(self.same_shape(other), "lattice shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn sup_norm_slice(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `sup_norm(phi)`.
pub fn sup_norm(phi: &LatticeField) -> f64 {
    phi.sup_norm()
}

/// `(Delta_t + nabla_t) phi`, i.e. `phi(t+1,k) - phi(t-1,k)`.
pub fn central_time_diff(phi: &LatticeField) -> LatticeField {
    LatticeField::from_fn(phi.t_period, phi.k_period, |t, k| {
        let (t, k) = (t as i64, k as i64);
        phi.at(t + 1, k) - phi.at(t - 1, k)
    })
}

/// Second spatial difference `phi(t,k+1) - 2 phi(t,k) + phi(t,k-1)`.
pub fn spatial_laplacian(phi: &LatticeField) -> LatticeField {
    LatticeField::from_fn(phi.t_period, phi.k_period, |t, k| {
        let (t, k) = (t as i64, k as i64);
        phi.at(t, k + 1) - 2.0 * phi.at(t, k) + phi.at(t, k - 1)
    })
}

/// The linear part `i beta (Delta_t + nabla_t) phi + epsilon Delta_k^2 phi(., k-1)`.
pub fn apply_l(phi: &LatticeField, params: &LatticeParams) -> LatticeField {
    let time = central_time_diff(phi);
    let space = spatial_laplacian(phi);
    let ib = Complex64::new(0.0, params.beta);
    time.zip_with(&space, |a, b| ib * a + params.epsilon * b)
}

/// On-site cubic term `-gamma |phi|^2 phi`.
pub fn apply_f(phi: &LatticeField, params: &LatticeParams) -> LatticeField {
    phi.map(|z| cubic(z, params.gamma))
}

#[inline]
pub(crate) fn cubic(z: Complex64, gamma: f64) -> Complex64 {
    -gamma * z.norm_sqr() * z
}

/// Nemytskii operator `(G phi)(t,k) = g(t, phi(t,k))`.
pub fn apply_g(phi: &LatticeField, g: &Potential) -> Result<LatticeField, LatticeError> {
    g.check_period(phi.t_period)?;
    Ok(apply_g_unchecked(phi, g))
}

pub(crate) fn apply_g_unchecked(phi: &LatticeField, g: &Potential) -> LatticeField {
    let k_period = phi.k_period;
    let values = phi
        .values
        .iter()
        .enumerate()
        .map(|(idx, &z)| g.evaluate(idx / k_period, z))
        .collect();
    LatticeField::from_flat(phi.t_period, k_period, values)
}
