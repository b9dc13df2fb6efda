//! Existence certificates: the constants `s, R*, M, B, C, D` and the ball
//! radius `R`, plus sampled evidence that `||H(phi)|| < ||S(phi)||` holds on
//! the sup-norm sphere `||phi|| = R`, where
//!
//! ```text
//! S(phi) = phi - A^{-1} F(phi)        H(phi) = A^{-1} (G(phi) - s phi)
//! ```
//!
//! The radius satisfies `2 D R^3 - R >= (1 + slack) (B + C R + D R^3)`, which
//! is the analytic lower bound of `||S||` beating the analytic upper bound of
//! `||H||` on the sphere.

use std::hash::{DefaultHasher, Hash, Hasher};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::lattice::{apply_f, apply_g_unchecked, LatticeError, LatticeField};
use crate::operator::ShiftedOperator;
use crate::potentials::{Potential, PHASE_SAMPLES};

pub const DEFAULT_SLACK: f64 = 0.1;
/// Safety factor applied to a scanned `R*`.
pub const RSTAR_SAFETY: f64 = 1.25;
/// Safety factor applied to a grid estimate of `M`.
pub const M_SAFETY: f64 = 1.05;

const SCAN_MIN_RADIUS: f64 = 1e-3;
const SCAN_MAX_RADIUS: f64 = 1e8;
const SCAN_PER_DECADE: usize = 40;
const DISK_RADIAL_POINTS: usize = 256;
const REFINE_POINTS: usize = 21;
const INEQUALITY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertificateError {
    #[error(
        "no threshold radius found up to |z| = {max_radius:e}: |g(t,z)|/|z|^3 stays above c = {c}; \
         the potential violates the subcubic growth hypothesis"
    )]
    NoThresholdFound { c: f64, max_radius: f64 },
    #[error("slack must lie in [0, 1), got {0}")]
    InvalidSlack(f64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rigor {
    /// `R*` and `M` come from exact formulas for the potential family.
    ClosedForm,
    /// `R*` and `M` come from polar-grid scans with safety factors.
    Sampled,
}

/// Summary of the sphere sampling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEvidence {
    pub count: usize,
    /// `min (||S(phi)|| - ||H(phi)||)` over the samples; `+inf` when `count = 0`.
    pub min_gap: f64,
    pub argmin_index: Option<usize>,
    pub argmin_hash: Option<String>,
    pub sublin_violations: usize,
    pub suplin_violations: usize,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceCertificate {
    pub s: f64,
    pub norm_l: f64,
    pub norm_a: f64,
    pub norm_a_inv: f64,
    /// `|gamma| / (2 ||A|| ||A^{-1}||)`, the subcubic threshold coefficient.
    #[serde(rename = "c")]
    pub threshold: f64,
    #[serde(rename = "Rstar")]
    pub rstar: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "B")]
    pub const_b: f64,
    #[serde(rename = "C")]
    pub const_c: f64,
    #[serde(rename = "D")]
    pub const_d: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub slack: f64,
    /// Realized relative slack `(2DR^3 - R) / (B + CR + DR^3) - 1`.
    pub margin: f64,
    pub rigor: Rigor,
    pub evidence: Option<BoundaryEvidence>,
}

impl ExistenceCertificate {
    /// True once boundary sampling has been run and found a positive gap.
    pub fn is_valid(&self) -> bool {
        self.evidence.as_ref().is_some_and(|e| e.valid)
    }

    /// Upper bound `B + C p + D p^3` for `||H(phi)||` at `||phi|| = p`.
    pub fn upper_bound_h(&self, p: f64) -> f64 {
        self.const_b + self.const_c * p + self.const_d * p.powi(3)
    }

    /// Lower bound `2 D p^3 - p` for `||S(phi)||` at `||phi|| = p`.
    pub fn lower_bound_s(&self, p: f64) -> f64 {
        2.0 * self.const_d * p.powi(3) - p
    }
}

/// Threshold radius `R*` with `|g(t,z)| < c |z|^3` for all `t` and `|z| >= R*`.
pub fn compute_rstar(g: &Potential, c: f64) -> Result<(f64, Rigor), CertificateError> {
    assert!(c > 0.0, "threshold coefficient must be positive");
    if let Some(bounds) = g.bounds(c) {
        return Ok((bounds.rstar, Rigor::ClosedForm));
    }
    let radii = scan_radii();
    // smallest grid radius from which every larger grid radius passes
    let mut threshold = None;
    for &rho in radii.iter().rev() {
        if g.sampled_circle_max(rho) < c * rho.powi(3) {
            threshold = Some(rho);
        } else {
            break;
        }
    }
    match threshold {
        Some(rho) => Ok((RSTAR_SAFETY * rho, Rigor::Sampled)),
        None => Err(CertificateError::NoThresholdFound {
            c,
            max_radius: SCAN_MAX_RADIUS,
        }),
    }
}

fn scan_radii() -> Vec<f64> {
    let decades = (SCAN_MAX_RADIUS / SCAN_MIN_RADIUS).log10().round() as usize;
    (0..=decades * SCAN_PER_DECADE)
        .map(|i| SCAN_MIN_RADIUS * 10f64.powf(i as f64 / SCAN_PER_DECADE as f64))
        .collect()
}

/// `M = sup { |g(t,z)| : t, |z| <= R* }`.
pub fn compute_m(g: &Potential, rstar: f64) -> f64 {
    assert!(rstar > 0.0, "R* must be positive");
    if let Some(sup) = g.disk_sup(rstar) {
        return sup;
    }
    let dr = rstar / DISK_RADIAL_POINTS as f64;
    let dtheta = std::f64::consts::TAU / PHASE_SAMPLES as f64;
    let mut best = (0.0f64, 0, 0.0, 0.0);
    for t in 0..g.period() {
        for i in 0..=DISK_RADIAL_POINTS {
            let rho = i as f64 * dr;
            for j in 0..PHASE_SAMPLES {
                let theta = j as f64 * dtheta;
                let v = g.evaluate(t, Complex64::from_polar(rho, theta)).norm();
                if v > best.0 {
                    best = (v, t, rho, theta);
                }
            }
        }
    }
    // one refinement pass around the running maximum
    let (mut sup, t, rho0, theta0) = best;
    let half = (REFINE_POINTS / 2) as f64;
    for i in 0..REFINE_POINTS {
        let rho = (rho0 + (i as f64 - half) / half * dr).clamp(0.0, rstar);
        for j in 0..REFINE_POINTS {
            let theta = theta0 + (j as f64 - half) / half * dtheta;
            sup = sup.max(g.evaluate(t, Complex64::from_polar(rho, theta)).norm());
        }
    }
    M_SAFETY * sup
}

/// Smallest `R` (to `1e-9`) with `2DR^3 - R >= (1 + slack)(B + CR + DR^3)`.
pub fn compute_radius(b: f64, c: f64, d: f64, slack: f64) -> Result<f64, CertificateError> {
    if !(0.0..1.0).contains(&slack) {
        return Err(CertificateError::InvalidSlack(slack));
    }
    assert!(
        d > 0.0 && c >= 0.0 && b >= 0.0,
        "need D > 0, C >= 0, B >= 0"
    );
    // q(R) = (1-slack) D R^3 - (1 + (1+slack) C) R - (1+slack) B has exactly one
    // positive root and is negative to its left.
    let q = |r: f64| 2.0 * d * r.powi(3) - r - (1.0 + slack) * (b + c * r + d * r.powi(3));
    let mut hi = 1.0;
    while q(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if q(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Computes every certificate constant; boundary evidence is left empty.
pub fn certify(
    op: &ShiftedOperator,
    g: &Potential,
    slack: f64,
) -> Result<ExistenceCertificate, CertificateError> {
    let params = op.params();
    g.check_period(params.t_period)?;
    let gamma = params.gamma.abs();
    let threshold = gamma / (2.0 * op.norm_a() * op.norm_a_inv());
    let (rstar, rigor) = compute_rstar(g, threshold)?;
    let m = compute_m(g, rstar);
    let const_b = op.norm_a_inv() * m;
    let const_c = op.norm_a_inv() * op.s();
    let const_d = gamma / (2.0 * op.norm_a());
    let radius = compute_radius(const_b, const_c, const_d, slack)?;
    let mut cert = ExistenceCertificate {
        s: op.s(),
        norm_l: op.norm_l(),
        norm_a: op.norm_a(),
        norm_a_inv: op.norm_a_inv(),
        threshold,
        rstar,
        m,
        const_b,
        const_c,
        const_d,
        radius,
        slack,
        margin: 0.0,
        rigor,
        evidence: None,
    };
    cert.margin = cert.lower_bound_s(radius) / cert.upper_bound_h(radius) - 1.0;
    Ok(cert)
}

/// The norm inequalities behind the existence argument, evaluated at a single field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub norm_phi: f64,
    /// `||S(phi)||`
    pub norm_s: f64,
    /// `||H(phi)||`
    pub norm_h: f64,
    /// `||F(phi)|| <= ||A|| ||A^{-1} F(phi)||`
    pub bounded_below: bool,
    /// `||G(phi)|| <= M + c ||phi||^3`
    pub subop: bool,
    /// `||H(phi)|| <= B + C ||phi|| + D ||phi||^3`
    pub sublin: bool,
    /// `||S(phi)|| >= 2 D ||phi||^3 - ||phi||`
    pub suplin: bool,
}

impl InequalityCheck {
    pub fn gap(&self) -> f64 {
        self.norm_s - self.norm_h
    }

    pub fn all_hold(&self) -> bool {
        self.bounded_below && self.subop && self.sublin && self.suplin
    }
}

/// Evaluates `S`, `H` and the bounds chained in the existence argument.
/// The potential's period must already be compatible with the lattice.
pub fn check_inequalities(
    cert: &ExistenceCertificate,
    op: &ShiftedOperator,
    g: &Potential,
    phi: &LatticeField,
) -> InequalityCheck {
    let params = op.params();
    let norm_phi = phi.sup_norm();
    let f_phi = apply_f(phi, params);
    let ainv_f = op.solve(&f_phi);
    let g_phi = apply_g_unchecked(phi, g);
    let h = op.solve(&g_phi.sub(&phi.scale(Complex64::new(op.s(), 0.0))));
    let norm_s = phi.sub(&ainv_f).sup_norm();
    let norm_h = h.sup_norm();

    let f_norm = f_phi.sup_norm();
    let bounded_below = f_norm <= op.norm_a() * ainv_f.sup_norm() * (1.0 + INEQUALITY_RTOL);
    let subop_rhs = cert.m + cert.threshold * norm_phi.powi(3);
    let subop = g_phi.sup_norm() <= subop_rhs * (1.0 + INEQUALITY_RTOL);
    let sublin_rhs = cert.upper_bound_h(norm_phi);
    let sublin = norm_h <= sublin_rhs * (1.0 + INEQUALITY_RTOL);
    let suplin_rhs = cert.lower_bound_s(norm_phi);
    let suplin =
        norm_s >= suplin_rhs - INEQUALITY_RTOL * (2.0 * cert.const_d * norm_phi.powi(3) + norm_phi);
    InequalityCheck {
        norm_phi,
        norm_s,
        norm_h,
        bounded_below,
        subop,
        sublin,
        suplin,
    }
}

/// Draws a field on the sphere `||phi|| = radius`: entry moduli uniform on
/// `[0, radius]`, uniform phases, one uniformly chosen entry at full modulus.
pub fn sample_sphere<R: Rng + ?Sized>(
    t_period: usize,
    k_period: usize,
    radius: f64,
    rng: &mut R,
) -> LatticeField {
    let n = t_period * k_period;
    let mut values: Vec<Complex64> = (0..n)
        .map(|_| {
            let modulus = radius * rng.random::<f64>();
            Complex64::from_polar(modulus, std::f64::consts::TAU * rng.random::<f64>())
        })
        .collect();
    let pick = rng.random_range(0..n);
    values[pick] = Complex64::from_polar(radius, values[pick].arg());
    LatticeField::from_flat(t_period, k_period, values)
}

/// Independent RNG substream for sample `index` under `seed`.
pub(crate) fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn field_hash(phi: &LatticeField) -> String {
    let mut hasher = DefaultHasher::new();
    for z in phi.as_slice() {
        z.re.to_bits().hash(&mut hasher);
        z.im.to_bits().hash(&mut hasher);
    }
    format!("{:016x}", hasher.finish())
}

#[derive(Clone, Copy)]
struct Partial {
    count: usize,
    min_gap: f64,
    argmin: Option<usize>,
    sublin_violations: usize,
    suplin_violations: usize,
}

impl Partial {
    const EMPTY: Partial = Partial {
        count: 0,
        min_gap: f64::INFINITY,
        argmin: None,
        sublin_violations: 0,
        suplin_violations: 0,
    };

    fn merge(self, other: Partial) -> Partial {
        let take_other = match (self.argmin, other.argmin) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(b)) => {
                other.min_gap < self.min_gap || (other.min_gap == self.min_gap && b < a)
            }
        };
        let (min_gap, argmin) = if take_other {
            (other.min_gap, other.argmin)
        } else {
            (self.min_gap, self.argmin)
        };
        Partial {
            count: self.count + other.count,
            min_gap,
            argmin,
            sublin_violations: self.sublin_violations + other.sublin_violations,
            suplin_violations: self.suplin_violations + other.suplin_violations,
        }
    }
}

/// Samples the sphere `||phi|| = cert.radius` and records the smallest gap
/// `||S(phi)|| - ||H(phi)||`. Sample `i` uses substream `i` of `seed`, so the
/// result does not depend on how the work is split across threads.
pub fn verify_boundary(
    cert: &ExistenceCertificate,
    op: &ShiftedOperator,
    g: &Potential,
    samples: usize,
    seed: u64,
) -> Result<BoundaryEvidence, CertificateError> {
    assert!(cert.radius > 0.0, "certificate radius must be positive");
    let params = op.params();
    g.check_period(params.t_period)?;
    let draw = |i: usize| {
        let mut rng = substream(seed, i as u64);
        sample_sphere(params.t_period, params.k_period, cert.radius, &mut rng)
    };
    let total = (0..samples)
        .into_par_iter()
        .map(|i| {
            let phi = draw(i);
            let check = check_inequalities(cert, op, g, &phi);
            let gap = check.gap();
            Partial {
                count: 1,
                // a NaN gap must never look like a pass
                min_gap: if gap.is_nan() { f64::NEG_INFINITY } else { gap },
                argmin: Some(i),
                sublin_violations: usize::from(!check.sublin),
                suplin_violations: usize::from(!check.suplin),
            }
        })
        .reduce(|| Partial::EMPTY, Partial::merge);
    Ok(BoundaryEvidence {
        count: total.count,
        min_gap: total.min_gap,
        argmin_index: total.argmin,
        argmin_hash: total.argmin.map(|i| field_hash(&draw(i))),
        sublin_violations: total.sublin_violations,
        suplin_violations: total.suplin_violations,
        valid: total.count > 0 && total.min_gap > 0.0,
    })
}

/// [`certify`] followed by [`verify_boundary`].
pub fn certify_and_verify(
    op: &ShiftedOperator,
    g: &Potential,
    slack: f64,
    samples: usize,
    seed: u64,
) -> Result<ExistenceCertificate, CertificateError> {
    let mut cert = certify(op, g, slack)?;
    cert.evidence = Some(verify_boundary(&cert, op, g, samples, seed)?);
    Ok(cert)
}
