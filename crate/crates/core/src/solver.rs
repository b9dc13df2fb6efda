//! Newton and homotopy solvers for `L phi = F(phi) + G(phi)`.
//!
//! Everything runs on the family of maps
//!
//! ```text
//! H_tau(phi) = phi - A^{-1} F(phi) - tau A^{-1} (G(phi) - s phi)
//! ```
//!
//! with `H_0 = S` and `H_1 = Q`. Multiplying by `A` gives the direct form
//! `L phi - F(phi) - tau G(phi) - (1 - tau) s phi`, which at `tau = 1` is the
//! DNLS residual itself. Newton directions are computed for `H_tau` on the
//! realified space `R^{2TK}` (interleaved `re, im`); step acceptance and
//! convergence use the sup norm of the direct form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{certify_and_verify, substream, CertificateError, ExistenceCertificate};
use crate::lattice::{
    apply_f, apply_g_unchecked, apply_l, cubic, LatticeError, LatticeField, LatticeParams,
};
use crate::operator::{realify, OperatorError, ShiftedOperator};
use crate::potentials::{Jacobian2, Potential};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const MAX_HALVINGS: usize = 30;
/// Sup-distance below which two solutions are the same.
pub const DEDUP_RADIUS: f64 = 1e-6;
const STEP_FLOOR: f64 = 1e-6;
const POLISH_ITERATIONS: usize = 5;
const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("analytic Jacobian requested but the potential has no derivative")]
    MissingDerivative,
    #[error("certificate has no positive boundary evidence")]
    InvalidCertificate,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    Diverged,
    LeftBall,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveRoute {
    Newton,
    Homotopy,
    MultiStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    FiniteDiff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Sup-norm tolerance on the direct residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial homotopy step in `tau`.
    pub step0: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
            step0: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: LatticeField,
    pub solution_sup_norm: f64,
    /// `||L phi - F(phi) - G(phi)||`
    pub residual_direct: f64,
    /// `||Q(phi)||`
    pub residual_q: f64,
    pub newton_iterations: usize,
    pub homotopy_steps: usize,
    /// `(tau, ||phi||)` at every accepted homotopy point.
    pub path: Option<Vec<(f64, f64)>>,
    pub status: SolveStatus,
    pub route: SolveRoute,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// `L phi - F(phi) - G(phi)`; zero exactly at periodic solutions.
pub fn residual_direct(
    phi: &LatticeField,
    params: &LatticeParams,
    g: &Potential,
) -> Result<LatticeField, SolverError> {
    phi.check_shape(params)?;
    g.check_period(params.t_period)?;
    Ok(direct_unchecked(phi, params, g))
}

fn direct_unchecked(phi: &LatticeField, params: &LatticeParams, g: &Potential) -> LatticeField {
    apply_l(phi, params)
        .sub(&apply_f(phi, params))
        .sub(&apply_g_unchecked(phi, g))
}

/// `Q(phi) = phi - A^{-1} F(phi) - A^{-1} (G(phi) - s phi)`.
pub fn residual_q(
    phi: &LatticeField,
    op: &ShiftedOperator,
    g: &Potential,
) -> Result<LatticeField, SolverError> {
    let params = op.params();
    phi.check_shape(params)?;
    g.check_period(params.t_period)?;
    Ok(Slice::new(op, g, 1.0).map_value(phi))
}

/// Realified Jacobian of `Q` at `phi`.
pub fn realified_jacobian(
    phi: &LatticeField,
    op: &ShiftedOperator,
    g: &Potential,
    mode: JacobianMode,
) -> Result<DMatrix<f64>, SolverError> {
    let params = op.params();
    phi.check_shape(params)?;
    g.check_period(params.t_period)?;
    if mode == JacobianMode::Analytic && !g.has_derivative() {
        return Err(SolverError::MissingDerivative);
    }
    Ok(Slice::new(op, g, 1.0).jacobian(phi, mode))
}

/// The map `H_tau`, optionally minus a real-linear term `A^{-1} P phi`
/// (direct form minus `P phi`), where `P` acts on the realified field.
#[derive(Clone, Copy)]
pub(crate) struct Slice<'a> {
    op: &'a ShiftedOperator,
    pub(crate) g: &'a Potential,
    pub(crate) tau: f64,
    linear: Option<&'a DMatrix<f64>>,
}

impl<'a> Slice<'a> {
    pub(crate) fn new(op: &'a ShiftedOperator, g: &'a Potential, tau: f64) -> Self {
        Self {
            op,
            g,
            tau,
            linear: None,
        }
    }

    pub(crate) fn with_linear(mut self, linear: &'a DMatrix<f64>) -> Self {
        self.linear = Some(linear);
        self
    }

    fn linear_term(&self, phi: &LatticeField) -> Option<LatticeField> {
        self.linear.map(|p| {
            let v = p * DVector::from_vec(phi.realified());
            LatticeField::from_realified(phi.t_period(), phi.k_period(), v.as_slice())
        })
    }

    fn shift(&self) -> Complex64 {
        Complex64::new(self.op.s(), 0.0)
    }

    /// `L phi - F(phi) - tau G(phi) - (1 - tau) s phi - p`.
    pub(crate) fn direct(&self, phi: &LatticeField) -> LatticeField {
        let params = self.op.params();
        let mut out = apply_l(phi, params).sub(&apply_f(phi, params));
        if self.tau != 0.0 {
            out = out.sub(&apply_g_unchecked(phi, self.g).scale(Complex64::new(self.tau, 0.0)));
        }
        if self.tau != 1.0 {
            out = out.sub(&phi.scale(self.shift() * (1.0 - self.tau)));
        }
        if let Some(p) = self.linear_term(phi) {
            out = out.sub(&p);
        }
        out
    }

    /// `H_tau(phi) - A^{-1} p`, built term by term from its definition.
    pub(crate) fn map_value(&self, phi: &LatticeField) -> LatticeField {
        let params = self.op.params();
        let p_term = self.op.solve(&apply_f(phi, params));
        let mut out = phi.sub(&p_term);
        if self.tau != 0.0 {
            let forcing = apply_g_unchecked(phi, self.g).sub(&phi.scale(self.shift()));
            out = out.sub(&self.op.solve(&forcing).scale(Complex64::new(self.tau, 0.0)));
        }
        if let Some(p) = self.linear_term(phi) {
            out = out.sub(&self.op.solve(&p));
        }
        out
    }

    pub(crate) fn merit(&self, phi: &LatticeField) -> f64 {
        let m = self.direct(phi).sup_norm();
        if m.is_nan() {
            f64::INFINITY
        } else {
            m
        }
    }

    /// `I - A^{-1}_R (diag(F'(phi_j) + tau (G'(phi_j) - s I)) + P)`.
    pub(crate) fn jacobian(&self, phi: &LatticeField, mode: JacobianMode) -> DMatrix<f64> {
        let params = self.op.params();
        let kp = params.k_period;
        let s = self.op.s();
        let blocks: Vec<Jacobian2> = phi
            .as_slice()
            .iter()
            .enumerate()
            .map(|(idx, &z)| {
                let mut d = cubic_jacobian(z, params.gamma);
                if self.tau != 0.0 {
                    let t = idx / kp;
                    let gd = match mode {
                        JacobianMode::Analytic => self.g.derivative_or_fd(t, z),
                        JacobianMode::FiniteDiff => self.g.finite_difference_derivative(t, z),
                    };
                    for r in 0..2 {
                        for c in 0..2 {
                            let shift = if r == c { s } else { 0.0 };
                            d[r][c] += self.tau * (gd[r][c] - shift);
                        }
                    }
                }
                d
            })
            .collect();
        let ainv = self.op.a_inverse();
        let n = phi.len();
        let mut jac = DMatrix::<f64>::identity(2 * n, 2 * n);
        for i in 0..n {
            for (j, d) in blocks.iter().enumerate() {
                let a = ainv[(i, j)];
                let ar = [[a.re, -a.im], [a.im, a.re]];
                for r in 0..2 {
                    for c in 0..2 {
                        let v = ar[r][0] * d[0][c] + ar[r][1] * d[1][c];
                        jac[(2 * i + r, 2 * j + c)] -= v;
                    }
                }
            }
        }
        if let Some(p) = self.linear {
            jac -= realify(ainv) * p;
        }
        jac
    }
}

/// Realified derivative of `z -> -gamma |z|^2 z`.
pub fn cubic_jacobian(z: Complex64, gamma: f64) -> Jacobian2 {
    let (x, y) = (z.re, z.im);
    [
        [-gamma * (3.0 * x * x + y * y), -gamma * 2.0 * x * y],
        [-gamma * 2.0 * x * y, -gamma * (x * x + 3.0 * y * y)],
    ]
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub(crate) phi: LatticeField,
    pub(crate) iterations: usize,
    pub(crate) status: SolveStatus,
}

pub(crate) fn newton_direction(slice: &Slice, phi: &LatticeField) -> Option<Vec<f64>> {
    let jac = slice.jacobian(phi, JacobianMode::Analytic);
    let rhs = DVector::from_vec(
        slice
            .map_value(phi)
            .realified()
            .iter()
            .map(|v| -v)
            .collect(),
    );
    let delta = solve_linear(jac, &rhs)?;
    delta
        .iter()
        .all(|v| v.is_finite())
        .then(|| delta.as_slice().to_vec())
}

/// LU solve, or a minimum-norm least-squares solve when the pivots show the
/// matrix is numerically singular (e.g. `Q'(0) = A^{-1} L` has the constants in
/// its kernel).
fn solve_linear(jac: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = jac.clone().lu();
    let pivots = lu.u().diagonal().map(f64::abs);
    if pivots.min() > SINGULAR_PIVOT_RTOL * pivots.max() {
        return lu.solve(rhs);
    }
    let svd = jac.svd(true, true);
    let cutoff = SINGULAR_PIVOT_RTOL * svd.singular_values.max();
    svd.solve(rhs, cutoff).ok()
}

pub(crate) fn step(phi: &LatticeField, delta: &[f64], lambda: f64) -> LatticeField {
    let values = phi
        .as_slice()
        .iter()
        .zip(delta.chunks_exact(2))
        .map(|(z, d)| z + lambda * Complex64::new(d[0], d[1]))
        .collect();
    LatticeField::from_flat(phi.t_period(), phi.k_period(), values)
}

/// Damped Newton: full step first, then up to [`MAX_HALVINGS`] halvings until
/// the direct-form sup norm decreases.
pub(crate) fn newton_core(
    slice: &Slice,
    initial: LatticeField,
    tol: f64,
    max_iter: usize,
) -> NewtonOutcome {
    let mut phi = initial;
    let mut merit = slice.merit(&phi);
    for iteration in 0..max_iter {
        if merit <= tol {
            return NewtonOutcome {
                phi,
                iterations: iteration,
                status: SolveStatus::Converged,
            };
        }
        let diverged = |phi: LatticeField| NewtonOutcome {
            phi,
            iterations: iteration,
            status: SolveStatus::Diverged,
        };
        if !merit.is_finite() {
            return diverged(phi);
        }
        let Some(delta) = newton_direction(slice, &phi) else {
            return diverged(phi);
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = step(&phi, &delta, lambda);
            let trial_merit = slice.merit(&trial);
            if trial_merit < merit {
                accepted = Some((trial, trial_merit));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((next, next_merit)) => {
                phi = next;
                merit = next_merit;
            }
            None => return diverged(phi),
        }
    }
    let status = if merit <= tol {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIter
    };
    NewtonOutcome {
        phi,
        iterations: max_iter,
        status,
    }
}

/// Extra full Newton steps, kept only while the residual keeps dropping.
pub(crate) fn polish(slice: &Slice, mut phi: LatticeField) -> LatticeField {
    let mut merit = slice.merit(&phi);
    for _ in 0..POLISH_ITERATIONS {
        if merit == 0.0 {
            break;
        }
        let Some(delta) = newton_direction(slice, &phi) else {
            break;
        };
        let trial = step(&phi, &delta, 1.0);
        let trial_merit = slice.merit(&trial);
        if trial_merit < merit {
            phi = trial;
            merit = trial_merit;
        } else {
            break;
        }
    }
    phi
}

fn check_inputs(op: &ShiftedOperator, g: &Potential, tol: f64) -> Result<(), SolverError> {
    g.check_period(op.params().t_period)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(SolverError::InvalidTolerance(tol));
    }
    Ok(())
}

fn report(
    op: &ShiftedOperator,
    g: &Potential,
    solution: LatticeField,
    status: SolveStatus,
    route: SolveRoute,
) -> SolveReport {
    let residual_direct = direct_unchecked(&solution, op.params(), g).sup_norm();
    let residual_q = Slice::new(op, g, 1.0).map_value(&solution).sup_norm();
    SolveReport {
        solution_sup_norm: solution.sup_norm(),
        solution,
        residual_direct,
        residual_q,
        newton_iterations: 0,
        homotopy_steps: 0,
        path: None,
        status,
        route,
    }
}

/// Damped Newton on `Q` from `initial`.
pub fn newton_solve(
    initial: LatticeField,
    op: &ShiftedOperator,
    g: &Potential,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport, SolverError> {
    check_inputs(op, g, tol)?;
    initial.check_shape(op.params())?;
    let outcome = newton_core(&Slice::new(op, g, 1.0), initial, tol, max_iter);
    let mut rep = report(op, g, outcome.phi, outcome.status, SolveRoute::Newton);
    rep.newton_iterations = outcome.iterations;
    Ok(rep)
}

/// Tracks the zero of `S - tau H` from `(tau, phi) = (0, 0)` to `tau = 1`
/// with a secant predictor and a Newton corrector.
pub fn homotopy_solve(
    op: &ShiftedOperator,
    g: &Potential,
    cert: &ExistenceCertificate,
    opts: &SolverOptions,
) -> Result<SolveReport, SolverError> {
    check_inputs(op, g, opts.tol)?;
    if !cert.is_valid() {
        return Err(SolverError::InvalidCertificate);
    }
    let params = op.params();
    let mut tau = 0.0;
    let mut phi = LatticeField::zeros(params.t_period, params.k_period);
    let mut previous: Option<(f64, LatticeField)> = None;
    let mut dtau = opts.step0.clamp(STEP_FLOOR, 1.0);
    let mut successes = 0;
    let mut steps = 0;
    let mut iterations = 0;
    let mut path = vec![(0.0, 0.0)];

    let finish = |phi: LatticeField, status, iterations, steps, path| {
        let mut rep = report(op, g, phi, status, SolveRoute::Homotopy);
        rep.newton_iterations = iterations;
        rep.homotopy_steps = steps;
        rep.path = Some(path);
        Ok(rep)
    };

    while tau < 1.0 {
        let next_tau = (tau + dtau).min(1.0);
        let predictor = match &previous {
            None => phi.clone(),
            Some((prev_tau, prev_phi)) => {
                let ratio = (next_tau - tau) / (tau - prev_tau);
                phi.add(&phi.sub(prev_phi).scale(Complex64::new(ratio, 0.0)))
            }
        };
        let slice = Slice::new(op, g, next_tau);
        let outcome = newton_core(&slice, predictor, opts.tol, opts.max_iter);
        iterations += outcome.iterations;
        if outcome.status == SolveStatus::Converged {
            let norm = outcome.phi.sup_norm();
            if norm > cert.radius {
                return finish(outcome.phi, SolveStatus::LeftBall, iterations, steps, path);
            }
            previous = Some((tau, std::mem::replace(&mut phi, outcome.phi)));
            tau = next_tau;
            steps += 1;
            path.push((tau, norm));
            successes += 1;
            if successes >= 2 {
                dtau *= 1.5;
                successes = 0;
            }
        } else {
            successes = 0;
            dtau *= 0.5;
            if dtau < STEP_FLOOR {
                return finish(phi, SolveStatus::Diverged, iterations, steps, path);
            }
        }
    }
    finish(phi, SolveStatus::Converged, iterations, steps, path)
}

/// Merges converged outcomes in index order, collapsing solutions closer than
/// [`DEDUP_RADIUS`] and keeping the one with the smaller residual.
pub(crate) fn dedup<T>(
    items: Vec<T>,
    field: impl Fn(&T) -> &LatticeField,
    residual: impl Fn(&T) -> f64,
) -> Vec<T> {
    let mut kept: Vec<T> = Vec::new();
    for item in items {
        match kept
            .iter()
            .position(|k| field(k).sup_distance(field(&item)) < DEDUP_RADIUS)
        {
            Some(pos) => {
                if residual(&item) < residual(&kept[pos]) {
                    kept[pos] = item;
                }
            }
            None => kept.push(item),
        }
    }
    kept
}

/// Newton on `Q` from `n_starts` fields drawn uniformly in `||phi|| <= R` plus
/// the homotopy endpoint. Returns the distinct converged solutions.
pub fn multi_start(
    op: &ShiftedOperator,
    g: &Potential,
    cert: &ExistenceCertificate,
    n_starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<SolveReport>, SolverError> {
    assert!(n_starts >= 1, "need at least one start");
    check_inputs(op, g, opts.tol)?;
    let params = op.params();
    let mut starts = Vec::with_capacity(n_starts + 1);
    if let Ok(h) = homotopy_solve(op, g, cert, opts) {
        starts.push(h.solution);
    }
    starts.extend((0..n_starts).map(|i| {
        LatticeField::random_in_ball(
            params.t_period,
            params.k_period,
            cert.radius,
            &mut substream(seed, i as u64),
        )
    }));
    let slice = Slice::new(op, g, 1.0);
    let reports: Vec<SolveReport> = starts
        .into_par_iter()
        .map(|start| {
            let outcome = newton_core(&slice, start, opts.tol, opts.max_iter);
            let mut rep = report(op, g, outcome.phi, outcome.status, SolveRoute::MultiStart);
            rep.newton_iterations = outcome.iterations;
            rep
        })
        .collect();
    let converged = reports.into_iter().filter(|r| r.converged()).collect();
    Ok(dedup(converged, |r| &r.solution, |r| r.residual_direct))
}

/// Everything the end-to-end pipeline needs beyond the lattice and potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub shift_factor: f64,
    pub slack: f64,
    pub samples: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            shift_factor: crate::operator::DEFAULT_SHIFT_FACTOR,
            slack: crate::certificate::DEFAULT_SLACK,
            samples: 10_000,
            n_starts: 32,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

/// Homotopy from the origin, then a Newton polish. If the tracked branch does
/// not reach `tau = 1`, falls back to [`multi_start`] and returns the best
/// converged solution (inside the ball first, then smallest residual).
pub fn solve(
    op: &ShiftedOperator,
    g: &Potential,
    cert: &ExistenceCertificate,
    n_starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<SolveReport, SolverError> {
    let tracked = homotopy_solve(op, g, cert, opts)?;
    if tracked.converged() {
        let polished = polish(&Slice::new(op, g, 1.0), tracked.solution.clone());
        let mut rep = report(
            op,
            g,
            polished,
            SolveStatus::Converged,
            SolveRoute::Homotopy,
        );
        if rep.residual_direct > tracked.residual_direct {
            return Ok(tracked);
        }
        rep.newton_iterations = tracked.newton_iterations;
        rep.homotopy_steps = tracked.homotopy_steps;
        rep.path = tracked.path;
        return Ok(rep);
    }
    let candidates = multi_start(op, g, cert, n_starts.max(1), seed, opts)?;
    let best = candidates.into_iter().min_by(|a, b| {
        let outside = |r: &SolveReport| r.solution_sup_norm >= cert.radius;
        outside(a)
            .cmp(&outside(b))
            .then(a.residual_direct.total_cmp(&b.residual_direct))
    });
    Ok(match best {
        Some(mut rep) => {
            rep.homotopy_steps = tracked.homotopy_steps;
            rep.path = tracked.path;
            rep
        }
        None => tracked,
    })
}

/// Certifies and solves in one go.
pub fn certify_and_solve(
    params: &LatticeParams,
    g: &Potential,
    cfg: &PipelineConfig,
) -> Result<(ExistenceCertificate, SolveReport), SolverError> {
    let op = ShiftedOperator::build(params, cfg.shift_factor)?;
    let cert = certify_and_verify(&op, g, cfg.slack, cfg.samples, cfg.seed)?;
    if !cert.is_valid() {
        return Err(SolverError::InvalidCertificate);
    }
    let rep = solve(&op, g, &cert, cfg.n_starts, cfg.seed, &cfg.solver)?;
    Ok((cert, rep))
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    /// `u(k)` for `k = 0..K`.
    pub profile: Vec<Complex64>,
    pub certificate: ExistenceCertificate,
    pub report: SolveReport,
}

impl SteadyState {
    /// The profile as a `t`-independent field with time period `t_period`.
    pub fn lift(&self, t_period: usize) -> LatticeField {
        lift_profile(&self.profile, t_period)
    }
}

pub fn lift_profile(profile: &[Complex64], t_period: usize) -> LatticeField {
    LatticeField::from_fn(t_period, profile.len(), |_, k| profile[k])
}

/// `epsilon (u(k+1) - 2u(k) + u(k-1)) + gamma |u(k)|^2 u(k) - h(u(k))` per `k`.
pub fn steady_residual(
    profile: &[Complex64],
    epsilon: f64,
    gamma: f64,
    h: &Potential,
) -> Vec<Complex64> {
    let k_period = profile.len() as i64;
    let at = |k: i64| profile[k.rem_euclid(k_period) as usize];
    (0..k_period)
        .map(|k| {
            let u = at(k);
            epsilon * (at(k + 1) - 2.0 * u + at(k - 1)) - cubic(u, gamma) - h.evaluate(0, u)
        })
        .collect()
}

/// Solves the time-independent equation by running the full pipeline at `T = 1`.
pub fn steady_state_solve(
    k_period: usize,
    epsilon: f64,
    gamma: f64,
    h: &Potential,
    cfg: &PipelineConfig,
) -> Result<SteadyState, SolverError> {
    // beta is irrelevant at T = 1: the time difference vanishes identically
    let params = LatticeParams::new(1, k_period, 1.0, epsilon, gamma)?;
    h.check_period(1)?;
    let (certificate, report) = certify_and_solve(&params, h, cfg)?;
    Ok(SteadyState {
        profile: report.solution.as_slice().to_vec(),
        certificate,
        report,
    })
}
