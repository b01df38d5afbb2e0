//! End-to-end checks across modules on exact LCPF data.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridtopo::estimator::{recover_topology, relative_error, solve_lasso, SolverConfig};
use gridtopo::experiments::{parse_feeder, synthetic_feeder, write_feeder};
use gridtopo::graph::{is_radial, reduced_laplacian, DEFAULT_TOL_LAMBDA, DEFAULT_TOL_ZERO};
use gridtopo::lcpf::{
    equivalent_impedance, ground_truth_parameters, scaled_impedance, voltages_from_injections, LoadKind,
    PowerFactorModel,
};
use gridtopo::quantizer::QuantizerConfig;
use gridtopo::sensing::{build_sensing_operator, generate_measurements, VoltageBasis, VoltageData};

fn injections(n: usize, s: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, s, |_, _| rng.random_range(-0.05..0.02))
}

#[test]
fn operator_reproduces_injections_from_lcpf_voltages() {
    for (n, seed) in [(3, 1), (8, 2), (20, 3)] {
        let feeder = synthetic_feeder(n, seed).unwrap();
        let pf = PowerFactorModel::new(0.9, LoadKind::Inductive).unwrap();
        let z = scaled_impedance(&feeder, &pf).unwrap();
        let zmat = equivalent_impedance(feeder.tree(), &z).unwrap();
        let w_star = ground_truth_parameters(feeder.tree(), &z).unwrap();
        assert!(is_radial(&w_star, DEFAULT_TOL_ZERO, DEFAULT_TOL_LAMBDA));
        let y = reduced_laplacian(&w_star);
        assert!((&y * &zmat - DMatrix::identity(n, n)).amax() < 1e-9);

        let p = injections(n, 15, seed + 10);
        let v = voltages_from_injections(&zmat, &p).unwrap();
        let op = build_sensing_operator(&VoltageData::new(v).unwrap(), n, VoltageBasis::Deviation).unwrap();
        let back = op.apply(&w_star).unwrap();
        let scale = p.amax();
        for (a, b) in back.iter().zip(p.as_slice()) {
            assert!((a - b).abs() <= 1e-9 * scale, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn fine_quantization_recovers_the_tree() {
    let feeder = synthetic_feeder(10, 42).unwrap();
    let z = scaled_impedance(&feeder, &PowerFactorModel::unity()).unwrap();
    let zmat = equivalent_impedance(feeder.tree(), &z).unwrap();
    let w_star = ground_truth_parameters(feeder.tree(), &z).unwrap();
    let p = injections(10, 120, 43);
    let v = voltages_from_injections(&zmat, &p).unwrap();
    let op = build_sensing_operator(&VoltageData::new(v).unwrap(), 10, VoltageBasis::Deviation).unwrap();
    let ms = generate_measurements(&op, &w_star, &QuantizerConfig::new(1e-5, 44).unwrap()).unwrap();
    let est = solve_lasso(&op, &ms, w_star.l1_norm(), &SolverConfig::default()).unwrap();
    assert!(relative_error(&est.w_hat, w_star.as_slice()).unwrap().rel < 1e-2);
    let tree = recover_topology(&est.to_line_parameters(10).unwrap()).unwrap();
    assert_eq!(&tree, feeder.tree());
}

#[test]
fn feeder_text_round_trip_keeps_the_model() {
    let feeder = synthetic_feeder(16, 8).unwrap();
    let back = parse_feeder(&write_feeder(&feeder), std::path::Path::new("f.csv")).unwrap();
    let pf = PowerFactorModel::new(0.95, LoadKind::Inductive).unwrap();
    let a = ground_truth_parameters(feeder.tree(), &scaled_impedance(&feeder, &pf).unwrap()).unwrap();
    let b = ground_truth_parameters(back.tree(), &scaled_impedance(&back, &pf).unwrap()).unwrap();
    assert_eq!(a, b);
}
