//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dnls::certificate::{certify, certify_and_verify, check_inequalities, CertificateError};
use dnls::cli::{self, PotentialConfig, PotentialKind, RunConfig};
use dnls::degree::{estimate_degree, DegreeTarget};
use dnls::lattice::{apply_f, apply_l, central_time_diff, spatial_laplacian};
use dnls::operator::{assemble_l, mat_vec, operator_norm_sup};
use dnls::solver::{
    realified_jacobian, residual_q, steady_residual, steady_state_solve, JacobianMode,
    PipelineConfig,
};
use dnls::{LatticeField, LatticeParams, Potential, ShiftedOperator, SolverOptions};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn params(t: usize, k: usize) -> LatticeParams {
    LatticeParams::new(t, k, 1.0, 1.0, 1.0).unwrap()
}

fn random_field(t: usize, k: usize, r: &mut ChaCha8Rng) -> LatticeField {
    LatticeField::from_fn(t, k, |_, _| {
        c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    })
}

fn rel(a: &LatticeField, b: &LatticeField) -> f64 {
    a.sup_distance(b) / b.sup_norm().max(a.sup_norm()).max(1e-300)
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

/// Built-in potentials with `|f| <= 1`, period 1.
fn builtin_potentials() -> Vec<(&'static str, Potential)> {
    let f = vec![c(0.6, 0.8)];
    vec![
        (
            "power_law r=0.5",
            Potential::power_law(f.clone(), 0.5).unwrap(),
        ),
        (
            "power_law r=1",
            Potential::power_law(f.clone(), 1.0).unwrap(),
        ),
        (
            "power_law r=2",
            Potential::power_law(f.clone(), 2.0).unwrap(),
        ),
        ("bounded", Potential::bounded(f).unwrap()),
        ("zero", Potential::zero()),
    ]
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let p = LatticeParams::new(8, 8, 0.7, 1.3, -2.1).unwrap();
    let op = ShiftedOperator::build(&p, 1.5).unwrap();
    let l = assemble_l(&p);
    let mut r = rng(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let phi = random_field(8, 8, &mut r);
        let psi = random_field(8, 8, &mut r);
        let a = c(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let b = c(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));

        let lphi = apply_l(&phi, &p);
        let stencil = central_time_diff(&phi)
            .scale(c(0.0, p.beta))
            .add(&spatial_laplacian(&phi).scale(c(p.epsilon, 0.0)));
        worst = worst
            .max(rel(&lphi, &stencil))
            .max(rel(&mat_vec(&l, &phi), &lphi));
        let constant = LatticeField::constant(8, 8, a);
        ensure(
            apply_l(&constant, &p).sup_norm() <= 1e-12 * a.norm(),
            || "L kills constants".into(),
        )?;

        let combo = apply_l(&phi.scale(a).add(&psi.scale(b)), &p);
        let split = lphi.scale(a).add(&apply_l(&psi, &p).scale(b));
        worst = worst.max(rel(&combo, &split));

        let neg = phi.scale(c(-1.0, 0.0));
        let f = apply_f(&phi, &p);
        ensure(apply_f(&neg, &p) == f.scale(c(-1.0, 0.0)), || {
            "F not odd".into()
        })?;
        let s = |x: &LatticeField| x.sub(&op.solve(&apply_f(x, &p)));
        worst = worst.max(rel(&s(&neg), &s(&phi).scale(c(-1.0, 0.0))));

        let law = p.gamma.abs() * phi.sup_norm().powi(3);
        worst = worst.max((f.sup_norm() - law).abs() / law);
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || format!("max relative error {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "100 fields at 8x8, max rel err {worst:.1e}, {elapsed:.2?}"
    ))
}

fn brute_row_sum(m: &dnls::operator::ComplexMatrix) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..m.nrows() {
        let mut row = 0.0;
        for j in 0..m.ncols() {
            row += m[(i, j)].norm();
        }
        best = best.max(row);
    }
    best
}

fn criterion_2() -> Verdict {
    let mut r = rng(2);
    for t in 1..=8 {
        for k in 2..=8 {
            let p = params(t, k);
            let l = assemble_l(&p);
            let norm = operator_norm_sup(&l);
            ensure(norm == brute_row_sum(&l), || {
                format!("row-sum mismatch at {t}x{k}")
            })?;
            let expected = if t >= 3 { 2.0 + 4.0 } else { 4.0 };
            ensure((norm - expected).abs() <= 1e-12, || {
                format!("||L|| = {norm} at {t}x{k}, expected {expected}")
            })?;
        }
    }
    let p = LatticeParams::new(4, 4, 0.9, 1.7, 1.0).unwrap();
    let l = assemble_l(&p);
    let norm = operator_norm_sup(&l);
    let mut largest = 0.0_f64;
    for _ in 0..10_000 {
        let phi = random_field(4, 4, &mut r);
        let unit = phi.scale(c(1.0 / phi.sup_norm(), 0.0));
        largest = largest.max(apply_l(&unit, &p).sup_norm());
    }
    ensure(largest <= norm * (1.0 + 1e-12), || {
        format!("sampled {largest} exceeds {norm}")
    })?;
    Ok(format!(
        "56 lattices exact, 1e4 unit fields max ratio {:.4}",
        largest / norm
    ))
}

fn criterion_3() -> Verdict {
    let p = params(4, 4);
    let op = ShiftedOperator::build(&p, 1.5).unwrap();
    let mut potentials = builtin_potentials();
    potentials.push((
        "constant",
        Potential::constant(vec![c(0.3, -0.1), c(0.0, 0.5), c(-0.2, 0.2), c(0.1, 0.0)]).unwrap(),
    ));
    let mut r = rng(3);
    let mut checked = 0;
    for (name, g) in &potentials {
        let cert = certify(&op, g, 0.1).unwrap();
        for _ in 0..1000 {
            // radii from 1e-2 R to 1e2 R
            let scale = cert.radius * 10f64.powf(r.random_range(-2.0..2.0));
            let phi = LatticeField::random_in_ball(4, 4, scale, &mut r);
            let check = check_inequalities(&cert, &op, g, &phi);
            ensure(check.all_hold(), || {
                format!(
                    "{name}: violation at ||phi|| = {}: {check:?}",
                    check.norm_phi
                )
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} samples over {} potentials, zero violations",
        potentials.len()
    ))
}

fn run_config(
    t: usize,
    k: usize,
    kind: PotentialKind,
    coefficients: Vec<[f64; 2]>,
    exponent: Option<f64>,
) -> RunConfig {
    RunConfig {
        t_period: t,
        k_period: k,
        beta: 1.0,
        epsilon: 1.0,
        gamma: 1.0,
        potential: PotentialConfig {
            kind,
            coefficients,
            exponent,
        },
        shift_factor: 1.5,
        slack: 0.1,
        tolerance: 1e-10,
        max_iter: 100,
        samples: 10_000,
        n_starts: 32,
        seed: 0,
    }
}

fn criterion_4() -> Verdict {
    let f = vec![[0.6, 0.8]];
    let kinds = [
        (PotentialKind::PowerLaw, f.clone(), Some(0.5)),
        (PotentialKind::PowerLaw, f.clone(), Some(1.0)),
        (PotentialKind::PowerLaw, f.clone(), Some(2.0)),
        (PotentialKind::Bounded, f.clone(), None),
        (PotentialKind::Zero, vec![], None),
    ];
    let mut slowest = Duration::ZERO;
    let mut smallest_gap = f64::INFINITY;
    let mut count = 0;
    for (t, k) in [(1, 2), (2, 3), (4, 4), (8, 8)] {
        for (kind, coeffs, exponent) in &kinds {
            let config = run_config(t, k, *kind, coeffs.clone(), *exponent);
            let start = Instant::now();
            let outcome =
                cli::cmd_certify(&config).map_err(|e| format!("{t}x{k} {kind:?}: {e}"))?;
            let elapsed = start.elapsed();
            slowest = slowest.max(elapsed);
            ensure(outcome.exit_code == 0, || {
                format!("{t}x{k} {kind:?} {exponent:?}: not valid")
            })?;
            let report: serde_json::Value = serde_json::from_str(&outcome.report).unwrap();
            let evidence = &report["certificate"]["evidence"];
            let gap = evidence["min_gap"].as_f64().unwrap();
            ensure(
                report["valid"] == true && gap > 0.0 && evidence["count"] == 10_000,
                || format!("{t}x{k} {kind:?}: gap {gap}"),
            )?;
            ensure(elapsed < Duration::from_secs(30), || {
                format!("{t}x{k} {kind:?} took {elapsed:?}")
            })?;
            smallest_gap = smallest_gap.min(gap);
            count += 1;
        }
    }
    let violator = run_config(4, 4, PotentialKind::PowerLaw, vec![[1.0, 0.0]], Some(3.0));
    match cli::cmd_certify(&violator) {
        Err(e @ cli::CliError::Certificate(CertificateError::NoThresholdFound { .. }))
            if e.exit_code() == 2 => {}
        other => return Err(format!("r=3 not rejected: {other:?}")),
    }
    Ok(format!(
        "{count} instances VALID, min gap {smallest_gap:.3e}, slowest {slowest:.2?}; r=3 rejected"
    ))
}

fn criterion_5() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        run_config(
            4,
            4,
            PotentialKind::Constant,
            vec![[0.1, -0.05], [0.02, 0.08], [-0.07, 0.01], [0.03, 0.02]],
            None,
        ),
        run_config(
            2,
            3,
            PotentialKind::Bounded,
            vec![[0.5, 0.5], [-0.3, 0.2]],
            None,
        ),
        run_config(4, 3, PotentialKind::Constant, vec![[2.0, 1.0]], None),
        run_config(1, 5, PotentialKind::Constant, vec![[8.0, 0.0]], None),
        run_config(3, 4, PotentialKind::PowerLaw, vec![[0.7, 0.0]], Some(2.0)),
    ];
    let mut worst = 0.0_f64;
    let mut homotopy_runs = 0;
    for (i, config) in cases.iter().enumerate() {
        let outcome = cli::cmd_solve(config).map_err(|e| format!("case {i}: {e}"))?;
        ensure(outcome.exit_code == 0, || {
            format!("case {i}: not converged")
        })?;
        let path = dir.path().join(format!("case{i}.csv"));
        std::fs::write(&path, &outcome.files[0].1).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let check = cli::verify_solution(config, &text).map_err(|e| e.to_string())?;
        ensure(check.ok && check.max_residual <= 1e-10, || {
            format!("case {i}: residual {}", check.max_residual)
        })?;
        worst = worst.max(check.max_residual);

        let report: serde_json::Value = serde_json::from_str(&outcome.report).unwrap();
        let radius = report["certificate"]["R"].as_f64().unwrap();
        let solve = &report["solve"];
        ensure(
            solve["solution_sup_norm"].as_f64().unwrap() < radius,
            || format!("case {i}: solution outside the ball"),
        )?;
        if solve["route"] == "homotopy" {
            homotopy_runs += 1;
            let inside = solve["path"]
                .as_array()
                .unwrap()
                .iter()
                .all(|point| point[1].as_f64().unwrap() < radius);
            ensure(inside, || {
                format!("case {i}: homotopy path leaves the ball")
            })?;
        }
    }
    ensure(homotopy_runs > 0, || {
        "no solve took the homotopy route".into()
    })?;
    Ok(format!(
        "{} solves re-verified from CSV, max residual {worst:.1e}, {homotopy_runs} homotopy paths inside the ball",
        cases.len()
    ))
}

fn criterion_6() -> Verdict {
    let h = Potential::constant(vec![c(8.0, 0.0)]).unwrap();
    let mut worst = 0.0_f64;
    for k in [2, 3, 5, 8] {
        let cfg = PipelineConfig {
            samples: 1000,
            ..PipelineConfig::default()
        };
        let steady = steady_state_solve(k, 1.0, 1.0, &h, &cfg).map_err(|e| e.to_string())?;
        let err = steady_residual(&steady.profile, 1.0, 1.0, &h)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        ensure(steady.report.converged() && err <= 1e-10, || {
            format!("K={k}: substitution error {err:e}")
        })?;
        worst = worst.max(err);

        let config = run_config(1, k, PotentialKind::Constant, vec![[8.0, 0.0]], None);
        let twos = cli::profile_csv(&vec![c(2.0, 0.0); k]);
        let check = cli::verify_solution(&config, &twos).map_err(|e| e.to_string())?;
        ensure(check.ok && check.max_residual == 0.0, || {
            format!("K={k}: u=2 rejected, {}", check.max_residual)
        })?;
    }
    Ok(format!(
        "K in {{2,3,5,8}} max substitution error {worst:.1e}; u=2 verified"
    ))
}

fn criterion_7() -> Verdict {
    let mut r = rng(7);
    let mut worst = 0.0_f64;
    for i in 0..20 {
        let (t, k) = [(1, 2), (2, 3), (3, 3), (4, 2)][i % 4];
        let p = LatticeParams::new(
            t,
            k,
            r.random_range(0.2..2.0),
            r.random_range(0.2..2.0),
            r.random_range(-2.0..2.0),
        )
        .unwrap();
        let f: Vec<Complex64> = (0..t)
            .map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
            .collect();
        let g = match i % 5 {
            0 => Potential::power_law(f, 2.0).unwrap(),
            1 => Potential::power_law(f, 1.0).unwrap(),
            2 => Potential::power_law(f, 0.5).unwrap(),
            3 => Potential::bounded(f).unwrap(),
            _ => Potential::constant(f).unwrap(),
        };
        let op = ShiftedOperator::build(&p, 1.5).unwrap();
        let phi = LatticeField::from_fn(t, k, |_, _| {
            Complex64::from_polar(
                r.random_range(0.3..2.0),
                r.random_range(0.0..std::f64::consts::TAU),
            )
        });
        let analytic =
            realified_jacobian(&phi, &op, &g, JacobianMode::Analytic).map_err(|e| e.to_string())?;
        let x = phi.realified();
        let h = 1e-6;
        let mut fd = analytic.clone() * 0.0;
        for j in 0..x.len() {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[j] += h;
            minus[j] -= h;
            let qp = residual_q(&LatticeField::from_realified(t, k, &plus), &op, &g)
                .unwrap()
                .realified();
            let qm = residual_q(&LatticeField::from_realified(t, k, &minus), &op, &g)
                .unwrap()
                .realified();
            for row in 0..x.len() {
                fd[(row, j)] = (qp[row] - qm[row]) / (2.0 * h);
            }
        }
        let err = (&analytic - &fd).amax() / analytic.amax();
        ensure(err <= 1e-6, || {
            format!("pair {i} ({}): relative error {err:e}", g.kind_name())
        })?;
        worst = worst.max(err);
    }
    Ok(format!("20 pairs, max relative error {worst:.1e}"))
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let p = params(1, 2);
    let op = ShiftedOperator::build(&p, 1.5).unwrap();
    let cases = [
        ("zero", Potential::zero()),
        (
            "power_law r=2",
            Potential::power_law(vec![c(0.5, 0.0)], 2.0).unwrap(),
        ),
        (
            "power_law r=0.5",
            Potential::power_law(vec![c(0.6, 0.8)], 0.5).unwrap(),
        ),
    ];
    let mut summary = vec![];
    for (name, g) in &cases {
        let cert = certify_and_verify(&op, g, 0.1, 1000, 0).unwrap();
        let mut estimates = vec![];
        for seed in 0..3 {
            let opts = SolverOptions::default();
            let s = estimate_degree(DegreeTarget::SMap, &op, g, &cert, 64, seed, &opts)
                .map_err(|e| e.to_string())?;
            let q = estimate_degree(DegreeTarget::QMap, &op, g, &cert, 64, seed, &opts)
                .map_err(|e| e.to_string())?;
            ensure(s.parity_ok && s.degree_estimate % 2 != 0, || {
                format!("{name} seed {seed}: deg S = {}", s.degree_estimate)
            })?;
            ensure(s.degree_estimate == q.degree_estimate, || {
                format!(
                    "{name} seed {seed}: deg S = {} but deg Q = {}",
                    s.degree_estimate, q.degree_estimate
                )
            })?;
            estimates.push(s.degree_estimate);
        }
        ensure(estimates.iter().all(|&d| d == estimates[0]), || {
            format!("{name}: unstable {estimates:?}")
        })?;
        summary.push(format!("{name} deg {}", estimates[0]));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{}, 3 seeds each, {elapsed:.2?}",
        summary.join(", ")
    ))
}

fn run_binary(args: &[&str], out: &Path) -> (Vec<u8>, i32) {
    let output = Command::new(env!("CARGO_BIN_EXE_dnls"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    (output.stdout, output.status.code().unwrap_or(-1))
}

fn criterion_9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, config: &RunConfig| {
        let path = dir.path().join(name);
        std::fs::write(&path, serde_json::to_string(config).unwrap()).unwrap();
        path.display().to_string()
    };
    let mut solve_cfg = run_config(
        4,
        4,
        PotentialKind::Constant,
        vec![[0.1, -0.05], [0.02, 0.08], [-0.07, 0.01], [0.03, 0.02]],
        None,
    );
    solve_cfg.samples = 2000;
    let mut steady_cfg = run_config(1, 5, PotentialKind::Constant, vec![[8.0, 0.0]], None);
    steady_cfg.samples = 2000;
    let mut degree_cfg = run_config(1, 2, PotentialKind::PowerLaw, vec![[0.5, 0.0]], Some(2.0));
    degree_cfg.samples = 1000;
    let solve_path = write("solve.json", &solve_cfg);
    let steady_path = write("steady.json", &steady_cfg);
    let degree_path = write("degree.json", &degree_cfg);

    let mut runs = 0;
    for (command, config, files) in [
        ("certify", &solve_path, vec![]),
        ("solve", &solve_path, vec![cli::SOLUTION_FILE]),
        ("steady", &steady_path, vec![cli::STEADY_FILE]),
        ("degree", &degree_path, vec![]),
    ] {
        let a = dir.path().join(format!("{command}-a"));
        let b = dir.path().join(format!("{command}-b"));
        let args = [command, "--config", config.as_str(), "--seed", "11"];
        let (out_a, code_a) = run_binary(&args, &a);
        let (out_b, code_b) = run_binary(&args, &b);
        ensure(code_a == 0 && code_a == code_b && out_a == out_b, || {
            format!("{command}: stdout or exit differs")
        })?;
        for name in files.iter().chain([&cli::REPORT_FILE]) {
            let fa = std::fs::read(a.join(name)).map_err(|e| format!("{command}: {name}: {e}"))?;
            let fb = std::fs::read(b.join(name)).map_err(|e| format!("{command}: {name}: {e}"))?;
            ensure(fa == fb, || format!("{command}: {name} differs"))?;
        }
        runs += 1;
    }
    let solution = dir.path().join("solve-a").join(cli::SOLUTION_FILE);
    let solution = solution.display().to_string();
    let args = [
        "verify",
        "--config",
        solve_path.as_str(),
        "--solution",
        solution.as_str(),
    ];
    let (out_a, code_a) = run_binary(&args, &dir.path().join("verify-a"));
    let (out_b, code_b) = run_binary(&args, &dir.path().join("verify-b"));
    ensure(code_a == 0 && code_b == 0 && out_a == out_b, || {
        "verify: output differs".into()
    })?;
    Ok(format!(
        "{} commands run twice, byte-identical JSON and CSV",
        runs + 1
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("operator identities", criterion_1),
        ("norm correctness", criterion_2),
        ("norm inequalities", criterion_3),
        ("certificate validity", criterion_4),
        ("solver soundness", criterion_5),
        ("steady state", criterion_6),
        ("Jacobian check", criterion_7),
        ("degree parity", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
