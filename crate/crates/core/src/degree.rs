//! Brouwer degree of `S` and `Q` on the certified ball, estimated by locating
//! zeros and summing the signs of their Jacobian determinants.
//!
//! Every built-in potential commutes with phase rotation, so nonzero zeros of
//! `S` and `Q` come in circles and are never regular. The maps are therefore
//! replaced by `map(phi) - A^{-1} P phi` with a small random real-linear `P`.
//! This keeps both maps odd and breaks the phase symmetry. On the sphere
//! `||phi|| = R` the certificate constants give
//! `||S(phi)|| - ||H(phi)|| >= D R^3 - (1 + C) R - B`, and `P` is sized to half
//! of that, so the degree does not change.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{substream, ExistenceCertificate};
use crate::lattice::{apply_f, apply_g_unchecked, LatticeField};
use crate::operator::{mat_vec, ShiftedOperator};
use crate::potentials::Potential;
use crate::solver::{
    dedup, newton_core, newton_direction, polish, step, JacobianMode, Slice, SolveStatus,
    SolverError, SolverOptions, MAX_HALVINGS,
};

/// Largest realified dimension `2TK` accepted.
pub const MAX_REAL_DIM: usize = 64;
/// Independent residual bound a located zero must meet.
pub const ZERO_TOLERANCE: f64 = 1e-9;
/// `|det J| / sigma_max^n` below which a zero counts as degenerate.
pub const DEGENERATE_RTOL: f64 = 1e-12;
/// Fraction of the boundary gap used by `P`.
const PERTURBATION_SHARE: f64 = 0.5;
/// Start batches with no new zero before the search stops.
const QUIET_BATCHES: usize = 3;
const MAX_BATCHES: usize = 64;
const ORBIT_ROTATIONS: usize = 32;
/// Restarts drawn around each known zero in a deflation pass.
const DEFLATION_STARTS: usize = 16;
const STREAM_OFFSET: u64 = 1 << 40;
/// Below this modulus a power law with `r < 1` has no derivative.
const NONSMOOTH_RADIUS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DegreeError {
    #[error("realified dimension {dim} exceeds the limit of {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("need at least one start")]
    NoStarts,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegreeTarget {
    #[serde(rename = "S_map")]
    SMap,
    #[serde(rename = "Q_map")]
    QMap,
}

impl DegreeTarget {
    fn tau(self) -> f64 {
        match self {
            DegreeTarget::SMap => 0.0,
            DegreeTarget::QMap => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    /// Zeros were searched for, not enumerated exhaustively.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocatedZero {
    /// Row-major `[re, im]` node values.
    pub field: Vec<[f64; 2]>,
    pub sup_norm: f64,
    /// Sup norm of the perturbed map, evaluated independently of Newton.
    pub residual: f64,
    pub det_sign: i8,
    /// `|det J| / sigma_max^n`, or 1 for the non-smooth origin of a
    /// power law with `r < 1` when its index is known.
    pub scaled_det: f64,
    #[serde(skip)]
    pub solution: LatticeField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeReport {
    pub target: DegreeTarget,
    pub radius: f64,
    /// Row-sum norm of the real-linear perturbation `P`.
    pub perturbation: f64,
    /// Upper bound of `||A^{-1} P phi||` on the sphere `||phi|| = R`.
    pub perturbation_bound: f64,
    pub zeros: Vec<LocatedZero>,
    /// Zeros whose determinant is too small to sign; left out of the sum.
    pub degenerate_zeros: Vec<LocatedZero>,
    pub degree_estimate: i64,
    /// Both maps share the degree of `S`, which is odd.
    pub parity_ok: bool,
    /// For `S`: every nonzero zero has its negative among the zeros, with the
    /// same determinant sign.
    pub symmetry_ok: Option<bool>,
    pub completeness: Completeness,
    pub batches: usize,
    pub newton_runs: usize,
}

impl DegreeReport {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_zeros.is_empty()
    }
}

/// The perturbation matrix for `seed`, scaled to row-sum norm `size`.
fn perturbation_matrix(dim: usize, size: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = substream(seed, STREAM_OFFSET - 1);
    let raw = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let norm = raw
        .row_iter()
        .map(|r| r.iter().map(|v: &f64| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    raw * (size / norm)
}

/// Starts at mixed scales: half uniform in the ball, half in balls shrunk by
/// up to four decades, since perturbed zeros can sit very close to the origin.
fn random_start(op: &ShiftedOperator, radius: f64, seed: u64, index: usize) -> LatticeField {
    let params = op.params();
    let mut rng = substream(seed, STREAM_OFFSET + index as u64);
    let scale = if index.is_multiple_of(2) {
        1.0
    } else {
        10f64.powf(-4.0 * rng.random::<f64>())
    };
    LatticeField::random_in_ball(params.t_period, params.k_period, radius * scale, &mut rng)
}

/// Perturbed target map built from the explicit inverse rather than the LU
/// factors Newton used.
fn independent_residual(
    target: DegreeTarget,
    op: &ShiftedOperator,
    g: &Potential,
    p: &DMatrix<f64>,
    phi: &LatticeField,
) -> f64 {
    let params = op.params();
    let pv = p * nalgebra::DVector::from_vec(phi.realified());
    let mut rhs = apply_f(phi, params).add(&LatticeField::from_realified(
        phi.t_period(),
        phi.k_period(),
        pv.as_slice(),
    ));
    if target == DegreeTarget::QMap {
        rhs = rhs
            .add(&apply_g_unchecked(phi, g))
            .sub(&phi.scale(Complex64::new(op.s(), 0.0)));
    }
    let r = phi.sub(&mat_vec(op.a_inverse(), &rhs)).sup_norm();
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// `eta(phi) = prod_i (1 / |phi - phi_i|^2 + 1)` over the known zeros.
fn deflation(x: &[f64], known: &[Vec<f64>]) -> f64 {
    known
        .iter()
        .map(|k| 1.0 / squared_distance(x, k) + 1.0)
        .product()
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Newton on `eta(phi) * map(phi)`, which cannot converge to a known zero.
/// The deflated step is the plain Newton step `d` scaled by
/// `1 / (1 - grad(eta) . d / eta)`.
fn deflated_newton(
    slice: &Slice,
    start: LatticeField,
    known: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Option<LatticeField> {
    let mut phi = start;
    let mut merit = slice.merit(&phi);
    for _ in 0..max_iter {
        if merit <= tol {
            return Some(phi);
        }
        let delta = newton_direction(slice, &phi)?;
        let x = phi.realified();
        let slope: f64 = known
            .iter()
            .map(|k| {
                let d2 = squared_distance(&x, k);
                let dot: f64 = x
                    .iter()
                    .zip(k)
                    .zip(&delta)
                    .map(|((a, b), d)| (a - b) * d)
                    .sum();
                -2.0 * dot / (d2 * (1.0 + d2))
            })
            .sum();
        let alpha = 1.0 / (1.0 - slope);
        if !alpha.is_finite() {
            return None;
        }
        let deflated = deflation(&x, known) * merit;
        let mut lambda = alpha;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = step(&phi, &delta, lambda);
            let trial_merit = slice.merit(&trial);
            if deflation(&trial.realified(), known) * trial_merit < deflated {
                accepted = Some((trial, trial_merit));
                break;
            }
            lambda *= 0.5;
        }
        (phi, merit) = accepted?;
    }
    (merit <= tol).then_some(phi)
}

fn classify(slice: &Slice, phi: &LatticeField) -> (i8, f64) {
    let jac = slice.jacobian(phi, JacobianMode::Analytic);
    let n = jac.nrows();
    let sv = jac.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let scaled = if smax > 0.0 {
        sv.iter().map(|s| s / smax).product()
    } else {
        0.0
    };
    let det = jac.lu().determinant();
    debug_assert_eq!(sv.len(), n);
    let sign = if det < 0.0 { -1 } else { 1 };
    let nonsmooth = slice.tau > 0.0
        && slice.g.growth_exponent().is_some_and(|r| r < 1.0)
        && phi.as_slice().iter().any(|z| z.norm() < NONSMOOTH_RADIUS);
    if !nonsmooth {
        return (sign, scaled);
    }
    // Near the origin Q is dominated by -A^{-1} G. With every f(t) nonzero that
    // is a complex-linear map after orientation-preserving radial rescalings
    // of each node, so the index is +1. Partial cancellations are not handled.
    let at_origin = phi.sup_norm() < NONSMOOTH_RADIUS;
    if at_origin && slice.g.min_coefficient().is_some_and(|m| m > 0.0) {
        (1, 1.0)
    } else {
        (sign, 0.0)
    }
}

/// Locates zeros of the perturbed `S` or `Q` inside `B_R`. Starts are drawn
/// in batches of `n_starts`, every new zero is also tried under phase
/// rotations, and the search ends after three batches that find nothing new.
pub fn estimate_degree(
    target: DegreeTarget,
    op: &ShiftedOperator,
    g: &Potential,
    cert: &ExistenceCertificate,
    n_starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<DegreeReport, DegreeError> {
    let dim = 2 * op.dim();
    if dim > MAX_REAL_DIM {
        return Err(DegreeError::DimensionTooLarge {
            dim,
            max: MAX_REAL_DIM,
        });
    }
    if n_starts == 0 {
        return Err(DegreeError::NoStarts);
    }
    g.check_period(op.params().t_period)
        .map_err(SolverError::from)?;
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(SolverError::InvalidTolerance(opts.tol).into());
    }
    if !cert.is_valid() {
        return Err(SolverError::InvalidCertificate.into());
    }
    let radius = cert.radius;
    let gap = cert.const_d * radius.powi(3) - (1.0 + cert.const_c) * radius - cert.const_b;
    // a complex entry of P phi has modulus at most sqrt(2) * rowsum * ||phi||
    let gain = std::f64::consts::SQRT_2 * op.norm_a_inv() * radius;
    let size = PERTURBATION_SHARE * gap.max(0.0) / gain;
    let p = perturbation_matrix(dim, size, seed);
    let slice = Slice::new(op, g, target.tau()).with_linear(&p);

    let accept = |phi: LatticeField| -> Option<LatticeField> {
        let phi = polish(&slice, phi);
        let ok = phi.sup_norm() < radius
            && independent_residual(target, op, g, &p, &phi) <= ZERO_TOLERANCE;
        ok.then_some(phi)
    };
    let run = |start: LatticeField| -> Option<LatticeField> {
        let out = newton_core(&slice, start, opts.tol, opts.max_iter);
        if out.status != SolveStatus::Converged {
            return None;
        }
        accept(out.phi)
    };

    let run_all = |starts: Vec<LatticeField>| -> Vec<LatticeField> {
        starts
            .into_par_iter()
            .map(run)
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let deflate_all = |starts: Vec<LatticeField>, known: &[LatticeField]| -> Vec<LatticeField> {
        let known: Vec<Vec<f64>> = known.iter().map(LatticeField::realified).collect();
        starts
            .into_par_iter()
            .map(|start| {
                deflated_newton(&slice, start, &known, opts.tol, opts.max_iter).and_then(accept)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let params = op.params();
    let mut found = vec![];
    let mut seeded = 0;
    let mut newton_runs = 0;
    let mut quiet = 0;
    let mut batches = 0;
    while quiet < QUIET_BATCHES && batches < MAX_BATCHES {
        let before = found.len();
        let mut starts: Vec<LatticeField> = (batches * n_starts..(batches + 1) * n_starts)
            .map(|i| random_start(op, radius, seed, i))
            .collect();
        if batches == 0 {
            starts.insert(0, LatticeField::zeros(params.t_period, params.k_period));
        }
        batches += 1;
        newton_runs += starts.len();
        found.extend(run_all(starts));
        found = dedup(found, |phi| phi, |phi| slice.merit(phi));
        // phase rotations and deflated restarts around new zeros, until they
        // stop producing more
        while seeded < found.len() {
            let orbit: Vec<LatticeField> = found[seeded..]
                .iter()
                .flat_map(|phi| {
                    (1..ORBIT_ROTATIONS).map(move |m| {
                        let angle = std::f64::consts::TAU * m as f64 / ORBIT_ROTATIONS as f64;
                        phi.scale(Complex64::from_polar(1.0, angle))
                    })
                })
                .collect();
            let mut rng = substream(seed, 2 * STREAM_OFFSET + seeded as u64);
            let nearby: Vec<LatticeField> = found[seeded..]
                .iter()
                .flat_map(|phi| {
                    let scale = phi.sup_norm().max(0.01 * radius);
                    (0..DEFLATION_STARTS)
                        .map(|_| {
                            let spread = scale * 10f64.powf(-1.5 * rng.random::<f64>());
                            let offset = LatticeField::random_in_ball(
                                params.t_period,
                                params.k_period,
                                spread,
                                &mut rng,
                            );
                            phi.add(&offset)
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            seeded = found.len();
            newton_runs += orbit.len() + nearby.len();
            found.extend(run_all(orbit));
            let known = found.clone();
            found.extend(deflate_all(nearby, &known));
            found = dedup(found, |phi| phi, |phi| slice.merit(phi));
        }
        quiet = if found.len() == before { quiet + 1 } else { 0 };
    }

    let located: Vec<LocatedZero> = found
        .into_iter()
        .map(|phi| {
            let (det_sign, scaled_det) = classify(&slice, &phi);
            LocatedZero {
                field: phi.as_slice().iter().map(|z| [z.re, z.im]).collect(),
                sup_norm: phi.sup_norm(),
                residual: independent_residual(target, op, g, &p, &phi),
                det_sign,
                scaled_det,
                solution: phi,
            }
        })
        .collect();
    let (zeros, degenerate_zeros): (Vec<_>, Vec<_>) = located
        .into_iter()
        .partition(|z| z.scaled_det >= DEGENERATE_RTOL);
    let degree_estimate: i64 = zeros.iter().map(|z| i64::from(z.det_sign)).sum();
    let symmetry_ok = (target == DegreeTarget::SMap).then(|| {
        zeros.iter().all(|z| {
            if z.sup_norm <= crate::solver::DEDUP_RADIUS {
                return true;
            }
            let neg = z.solution.scale(Complex64::new(-1.0, 0.0));
            independent_residual(target, op, g, &p, &neg) <= ZERO_TOLERANCE
                && zeros.iter().any(|w| {
                    w.solution.sup_distance(&neg) < crate::solver::DEDUP_RADIUS
                        && w.det_sign == z.det_sign
                })
        })
    });
    Ok(DegreeReport {
        target,
        radius,
        perturbation: size,
        perturbation_bound: size * gain,
        zeros,
        degenerate_zeros,
        degree_estimate,
        parity_ok: degree_estimate.rem_euclid(2) == 1,
        symmetry_ok,
        completeness: Completeness::Heuristic,
        batches,
        newton_runs,
    })
}
