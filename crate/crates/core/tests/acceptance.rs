//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.
//!
//! Oracles here are written independently of the library: dense Laplacians
//! built edge by edge, path sums over ancestor chains, bisection for the
//! ℓ₁ projection, normal equations for least squares.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use gridtopo::estimator::{project_l1_ball, relative_error, solve_lasso_values, SolverConfig};
use gridtopo::experiments::sweep::NetworkSource;
use gridtopo::experiments::{
    calibrate_and_overlay, coverage, generate_voltage_data, median, read_results, run_sweep, synthetic_feeder,
    SweepConfig, SweepRecord, VoltageNoise,
};
use gridtopo::graph::{random_spanning_tree, tree_incidence, tree_incidence_inverse, LineParameterVector};
use gridtopo::lcpf::{equivalent_impedance, ground_truth_parameters, scaled_impedance, PowerFactorModel, ScaledImpedanceVector};
use gridtopo::quantizer::{indexed_dither, quantize, quantize_measurements, QuantizerConfig};
use gridtopo::sensing::{build_sensing_operator, LinearOperator, VoltageBasis, VoltageData};

// tolerances and limits
const OPERATOR_TOL: f64 = 1e-12;
const PATH_SUM_TOL: f64 = 1e-10;
const UNBIAS_TOL: f64 = 1e-6;
const PROJECTION_TOL: f64 = 1e-9;
const VI_TOL: f64 = 1e-9;
const NOISELESS_REL_TOL: f64 = 1e-4;
const LS_REL_TOL: f64 = 1e-6;
const SLOPE_RANGE: (f64, f64) = (-0.6, -0.4);
const DELTA_RATIO_RANGE: (f64, f64) = (1.5, 2.5);
const C_RANGE: (f64, f64) = (1.0, 50.0);
const REPLAY_COVERAGE: f64 = 0.99;
const TOPO_INVERSIONS_ALLOWED: usize = 1;

const SWEEP_S: [usize; 6] = [25, 50, 100, 200, 400, 800];
const SWEEP_PCTS: [f64; 3] = [1.0, 5.0, 10.0];
const SWEEP_TRIALS: usize = 20;
const SWEEP_SEED: u64 = 20_240_601;
const REPLAY_SEED: u64 = 77_000_001;
const SWEEP_LIMIT: Duration = Duration::from_secs(600);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Reduced Laplacian assembled edge by edge from the lexicographic edge list.
fn oracle_reduced_laplacian(n: usize, w: &[f64]) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(n + 1, n + 1);
    let mut k = 0;
    for i in 0..=n {
        for j in i + 1..=n {
            y[(i, i)] += w[k];
            y[(j, j)] += w[k];
            y[(i, j)] -= w[k];
            y[(j, i)] -= w[k];
            k += 1;
        }
    }
    y.view((1, 1), (n, n)).into_owned()
}

fn operator_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=10);
        let s = rng.random_range(1..=10);
        let d = n * (n + 1) / 2;
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..2.0)).collect();
        let u = DMatrix::from_fn(n, s, |_, _| normal(&mut rng));
        let expected = oracle_reduced_laplacian(n, &w) * &u;
        let op = build_sensing_operator(&VoltageData::from_deviations(u).unwrap(), n, VoltageBasis::Deviation).unwrap();
        let free = op.apply(&LineParameterVector::new(n, w.clone()).unwrap()).unwrap();
        let dense = op.materialize().apply_vec(&w);
        for (idx, e) in expected.as_slice().iter().enumerate() {
            worst = worst.max((free[idx] - e).abs()).max((dense[idx] - e).abs());
        }
    }
    outcome(worst <= OPERATOR_TOL, format!("max |Aw - vec(Y U)| = {worst:.2e}"))
}

fn incidence_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut identity_ok = true;
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = rng.random_range(1..=64);
        let tree = random_spanning_tree(n, 1000 + case).unwrap();
        let c = tree_incidence(&tree);
        let c_inv = tree_incidence_inverse(&tree);
        identity_ok &= c.order == c_inv.order && &c.matrix * &c_inv.matrix == DMatrix::<i64>::identity(n, n);

        let n_small = rng.random_range(1..=12);
        let small = random_spanning_tree(n_small, 5000 + case).unwrap();
        let z: Vec<f64> = (0..n_small).map(|_| rng.random_range(0.01..1.0)).collect();
        let zmat = equivalent_impedance(&small, &ScaledImpedanceVector::new(z.clone()).unwrap()).unwrap();
        let chain = |mut v: usize| {
            let mut out = Vec::new();
            while v != 0 {
                out.push(v);
                v = small.parents()[v - 1];
            }
            out
        };
        for i in 1..=n_small {
            let ci = chain(i);
            for j in 1..=n_small {
                let path: f64 = chain(j).iter().filter(|v| ci.contains(v)).map(|&v| z[v - 1]).sum();
                worst = worst.max((zmat[(i - 1, j - 1)] - path).abs());
            }
        }
    }
    outcome(
        identity_ok && worst <= PATH_SUM_TOL,
        format!("C C^-1 = I exactly: {identity_ok}; max path-sum error {worst:.2e}"),
    )
}

fn quantizer_contract() -> Outcome {
    let delta = 0.1;
    let mut worst: f64 = 0.0;
    for g in 0..=20_000 {
        let x = -1.0 + 2.0 * g as f64 / 20_000.0;
        for k in 0..100 {
            let tau = indexed_dither(3, g * 100 + k, delta);
            worst = worst.max((quantize(x, tau, delta) - x).abs());
        }
    }
    let m = 1_000_000;
    let mut bias: f64 = 0.0;
    for g in 0..11 {
        let x = -0.37 + 0.0731 * g as f64;
        let mean = (0..m)
            .map(|k| quantize(x, -delta / 2.0 + (k as f64 + 0.5) * delta / m as f64, delta))
            .sum::<f64>()
            / m as f64;
        bias = bias.max((mean - x).abs());
    }
    outcome(
        worst <= delta && bias <= UNBIAS_TOL * delta,
        format!("max |Q - x| = {:.3} delta; max bias = {:.2e} delta", worst / delta, bias / delta),
    )
}

fn bisection_projection(v: &[f64], r: f64) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= r {
        return v.to_vec();
    }
    let mass = |t: f64| v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| x.signum() * (x.abs() - t).max(0.0)).collect()
}

fn projection_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut worst_vi): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let d = rng.random_range(1..=20);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let v: Vec<f64> = (0..d).map(|_| scale * normal(&mut rng)).collect();
        let r = rng.random_range(0.05..1.5) * v.iter().map(|x| x.abs()).sum::<f64>();
        let p = project_l1_ball(&v, r).unwrap();
        let q = bisection_projection(&v, r);
        worst = worst.max(p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale.max(1.0));
        for _ in 0..100 {
            let raw: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
            let norm: f64 = raw.iter().map(|x| x.abs()).sum();
            let radius = r * rng.random_range(0.0..=1.0);
            let u: Vec<f64> = raw.iter().map(|x| x * radius / norm).collect();
            let ip: f64 = (0..d).map(|i| (v[i] - p[i]) * (u[i] - p[i])).sum();
            worst_vi = worst_vi.max(ip / (scale * scale).max(1.0));
        }
    }
    outcome(
        worst <= PROJECTION_TOL && worst_vi <= VI_TOL,
        format!("max diff vs bisection {worst:.2e}; max <v-p, u-p> = {worst_vi:.2e}"),
    )
}

fn normal_equations(a: &DMatrix<f64>, p: &[f64]) -> Vec<f64> {
    let ata = a.transpose() * a;
    let atp = a.transpose() * nalgebra::DVector::from_column_slice(p);
    ata.cholesky().expect("positive definite normal matrix").solve(&atp).as_slice().to_vec()
}

fn solver_consistency() -> Outcome {
    let cfg = SolverConfig::default();
    let (mut worst_rel, mut worst_ls): (f64, f64) = (0.0, 0.0);
    for case in 0..20 {
        let feeder = synthetic_feeder(4, 300 + case).unwrap();
        let pf = PowerFactorModel::unity();
        let z = scaled_impedance(&feeder, &pf).unwrap();
        let w_star = ground_truth_parameters(feeder.tree(), &z).unwrap();
        let zmat = equivalent_impedance(feeder.tree(), &z).unwrap();
        let v_base: Vec<f64> = (0..4).map(|i| 1.0 + zmat.row(i).sum() * -0.01).collect();
        let v = generate_voltage_data(&v_base, 50, &VoltageNoise::default(), 400 + case).unwrap();
        let op = build_sensing_operator(&v, 4, VoltageBasis::Deviation).unwrap();
        let clean = op.apply(&w_star).unwrap();
        let ms = quantize_measurements(&clean, &QuantizerConfig::new(1e-12, case).unwrap());
        let est = solve_lasso_values(&op, &ms.p, w_star.l1_norm(), &cfg).unwrap();
        worst_rel = worst_rel.max(relative_error(&est.w_hat, w_star.as_slice()).unwrap().rel);

        let mut rng = ChaCha8Rng::seed_from_u64(500 + case);
        let noisy: Vec<f64> = clean.iter().map(|x| x + 0.5 * normal(&mut rng)).collect();
        let ls = normal_equations(op.materialize().matrix(), &noisy);
        let radius = 10.0 * ls.iter().map(|x| x.abs()).sum::<f64>();
        let est = solve_lasso_values(&op, &noisy, radius, &cfg).unwrap();
        worst_ls = worst_ls.max(relative_error(&est.w_hat, &ls).unwrap().rel);
    }
    outcome(
        worst_rel <= NOISELESS_REL_TOL && worst_ls <= LS_REL_TOL,
        format!("max noiseless rel_err {worst_rel:.2e}; max rel gap to least squares {worst_ls:.2e}"),
    )
}

fn sweep_config(seed: u64, dir: &std::path::Path) -> SweepConfig {
    SweepConfig {
        network: NetworkSource::Synthetic { n: 32, seed: 1 },
        s_grid: SWEEP_S.to_vec(),
        delta_pcts: SWEEP_PCTS.to_vec(),
        trials: SWEEP_TRIALS,
        master_seed: seed,
        out_dir: dir.to_path_buf(),
        emit_chart: false,
        ..SweepConfig::default()
    }
}

fn cell_median(records: &[SweepRecord], s: usize, pct: f64) -> f64 {
    median(records.iter().filter(|r| r.s == s && r.delta_pct == pct).map(|r| r.rel_err)).unwrap_or(f64::NAN)
}

fn scaling(records: &[SweepRecord]) -> Outcome {
    let pts: Vec<(f64, f64)> = SWEEP_S
        .iter()
        .map(|&s| ((s as f64).ln(), cell_median(records, s, 5.0).ln()))
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    outcome(
        (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&slope),
        format!("log-log slope of median rel_err at 5% = {slope:.4}"),
    )
}

fn delta_linearity(records: &[SweepRecord]) -> Outcome {
    let ratio = cell_median(records, 200, 10.0) / cell_median(records, 200, 5.0);
    outcome(
        (DELTA_RATIO_RANGE.0..=DELTA_RATIO_RANGE.1).contains(&ratio),
        format!("median rel_err ratio 10% / 5% at s = 200: {ratio:.4}"),
    )
}

fn calibration(records: &[SweepRecord], replay: &[SweepRecord]) -> Outcome {
    let report = match calibrate_and_overlay(records) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("calibration failed: {e}")),
    };
    let own = coverage(report.c, records);
    let fresh = coverage(report.c, replay);
    let failed = records.iter().chain(replay).filter(|r| !r.succeeded()).count();
    outcome(
        (C_RANGE.0..=C_RANGE.1).contains(&report.c) && own == 1.0 && fresh >= REPLAY_COVERAGE && failed == 0,
        format!(
            "C = {:.3}; coverage {:.4} on the sweep, {:.4} on the replay; {failed} failed solves",
            report.c, own, fresh
        ),
    )
}

fn topology_trend(records: &[SweepRecord]) -> Outcome {
    let fracs: Vec<f64> = SWEEP_S
        .iter()
        .map(|&s| {
            let cell: Vec<&SweepRecord> = records.iter().filter(|r| r.s == s && r.delta_pct == 1.0).collect();
            cell.iter().filter(|r| r.topo_exact).count() as f64 / cell.len() as f64
        })
        .collect();
    let inversions = fracs.windows(2).filter(|w| w[1] < w[0]).count();
    outcome(
        inversions <= TOPO_INVERSIONS_ALLOWED,
        format!("exact-recovery fraction at 1% by s: {fracs:?}; {inversions} inversions"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Duration, Option<Duration>, Outcome)> = Vec::new();
    let mut run = |id: usize, name: &'static str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        report_line(id, name, elapsed, limit, &out);
        results.push((id, name, elapsed, limit, out));
    };

    run(1, "operator identity", Some(Duration::from_secs(5)), &mut operator_identity);
    run(2, "incidence algebra", Some(Duration::from_secs(10)), &mut incidence_algebra);
    run(3, "quantizer contract", Some(Duration::from_secs(5)), &mut quantizer_contract);
    run(4, "projection oracle", Some(Duration::from_secs(10)), &mut projection_oracle);
    run(5, "solver consistency", Some(Duration::from_secs(30)), &mut solver_consistency);

    let dir = tempfile::tempdir().expect("temporary directory");
    let first_cfg = sweep_config(SWEEP_SEED, &dir.path().join("first"));
    let start = Instant::now();
    let sweep = run_sweep(&first_cfg).expect("acceptance sweep");
    let sweep_time = start.elapsed();
    let from_file = read_results(&first_cfg.results_path()).expect("results file");
    let replay = run_sweep(&sweep_config(REPLAY_SEED, &dir.path().join("replay"))).expect("replay sweep");

    run(6, "scaling law", None, &mut || {
        let mut o = scaling(&from_file);
        o.detail.push_str(&format!(
            "; {} records, sweep {:.1} s / limit {} s",
            sweep.len(),
            sweep_time.as_secs_f64(),
            SWEEP_LIMIT.as_secs()
        ));
        o.pass &= from_file == sweep && sweep.len() == SWEEP_S.len() * SWEEP_PCTS.len() * SWEEP_TRIALS;
        o.pass &= sweep_time <= SWEEP_LIMIT;
        o
    });
    run(7, "delta linearity", None, &mut || delta_linearity(&from_file));
    run(8, "calibration", None, &mut || calibration(&from_file, &replay));
    run(9, "topology trend", None, &mut || topology_trend(&from_file));
    run(10, "determinism", None, &mut || {
        let second_cfg = sweep_config(SWEEP_SEED, &dir.path().join("second"));
        if let Err(e) = run_sweep(&second_cfg) {
            return outcome(false, format!("rerun failed: {e}"));
        }
        let a = std::fs::read(first_cfg.results_path()).unwrap_or_default();
        let b = std::fs::read(second_cfg.results_path()).unwrap_or_default();
        outcome(!a.is_empty() && a == b, format!("results files of {} bytes identical: {}", a.len(), a == b))
    });

    let failed: Vec<usize> = results
        .iter()
        .filter(|(_, _, t, limit, o)| !o.pass || limit.is_some_and(|l| *t > l))
        .map(|r| r.0)
        .collect();
    println!(
        "\nacceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn report_line(id: usize, name: &str, elapsed: Duration, limit: Option<Duration>, out: &Outcome) {
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let verdict = if out.pass && in_time { "PASS" } else { "FAIL" };
    let budget = limit.map_or(String::new(), |l| format!(" / limit {} s", l.as_secs()));
    println!(
        "[{verdict}] {id:>2} {name}: {} ({:.2} s{budget})",
        out.detail,
        elapsed.as_secs_f64()
    );
}
