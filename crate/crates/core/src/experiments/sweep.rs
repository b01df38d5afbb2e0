//! The (s, Δ) sweep.
//!
//! Work is split into groups, one per (s, trial). A group draws one voltage
//! matrix, builds one sensing operator and then solves once per bin-width
//! percentage. Groups run on worker threads; records are written in
//! canonical order (s, then trial, then percentage) as soon as every earlier
//! group has finished.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::error_bound;
use crate::error::{Error, Result};
use crate::estimator::{recover_topology, relative_error, Lasso, SolverConfig};
use crate::graph::{LineParameterVector, TreeTopology};
use crate::lcpf::{
    equivalent_impedance, ground_truth_parameters, scaled_impedance, FeederSpec, LoadKind, PowerFactorModel,
};
use crate::quantizer::{bin_width_from_percentage, quantize_measurements, QuantizerConfig};
use crate::sensing::{build_sensing_operator, VoltageBasis};

use super::feeder::{load_feeder, synthetic_feeder};
use super::results::{ResultsWriter, SweepRecord};
use super::voltage::{baseline_voltage, generate_voltage_data, VoltageNoise};

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSource {
    Feeder(PathBuf),
    Synthetic { n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaseInjection {
    /// The same injection at every node.
    Uniform(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub network: NetworkSource,
    pub power_factor: PowerFactorModel,
    pub s_grid: Vec<usize>,
    /// Bin widths in percent of the mean absolute clean measurement.
    pub delta_pcts: Vec<f64>,
    pub trials: usize,
    pub p_base: BaseInjection,
    /// Replaces `1 + Z p_base` as the voltage mean when set.
    pub v_base: Option<Vec<f64>>,
    pub noise: VoltageNoise,
    pub basis: VoltageBasis,
    pub master_seed: u64,
    pub solver: SolverConfig,
    /// Measure solve time. Off by default so reruns give identical files.
    pub record_timing: bool,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
    pub out_dir: PathBuf,
    pub emit_chart: bool,
}

pub const DEFAULT_SYNTHETIC_N: usize = 32;
pub const DEFAULT_DELTA_PCTS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];

/// `count` integers spread uniformly over `[lo, hi]`.
pub fn uniform_s_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) as f64 / (count - 1) as f64;
            let mut grid: Vec<usize> = (0..count).map(|k| (lo as f64 + step * k as f64).round() as usize).collect();
            grid.dedup();
            grid
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            network: NetworkSource::Synthetic {
                n: DEFAULT_SYNTHETIC_N,
                seed: 1,
            },
            power_factor: PowerFactorModel::new(0.95, LoadKind::Inductive).expect("valid power factor"),
            s_grid: uniform_s_grid(10, 800, 100),
            delta_pcts: DEFAULT_DELTA_PCTS.to_vec(),
            trials: 1,
            p_base: BaseInjection::Uniform(-0.01),
            v_base: None,
            noise: VoltageNoise::default(),
            basis: VoltageBasis::Deviation,
            master_seed: 2024,
            solver: SolverConfig::default(),
            record_timing: false,
            threads: 0,
            out_dir: PathBuf::from("out"),
            emit_chart: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.s_grid.is_empty() {
            return bad("s_grid is empty".into());
        }
        if self.s_grid[0] == 0 || self.s_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("s_grid must be positive and strictly ascending: {:?}", self.s_grid));
        }
        if self.delta_pcts.is_empty() || self.delta_pcts.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return bad(format!("delta_pcts must be nonempty and positive: {:?}", self.delta_pcts));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let NetworkSource::Synthetic { n, .. } = self.network {
            if n < 2 {
                return bad(format!("synthetic feeder needs at least 2 nodes, got {n}"));
            }
        }
        Ok(())
    }

    pub fn results_path(&self) -> PathBuf {
        self.out_dir.join("results.csv")
    }

    pub fn chart_path(&self) -> PathBuf {
        self.out_dir.join("chart.svg")
    }

    pub fn record_count(&self) -> usize {
        self.s_grid.len() * self.delta_pcts.len() * self.trials
    }
}

/// Everything about the network that stays fixed across the sweep.
#[derive(Debug, Clone)]
pub struct PreparedNetwork {
    pub feeder: FeederSpec,
    pub impedance: DMatrix<f64>,
    pub w_star: LineParameterVector,
    pub v_base: Vec<f64>,
}

impl PreparedNetwork {
    pub fn n(&self) -> usize {
        self.feeder.n()
    }

    pub fn tree(&self) -> &TreeTopology {
        self.feeder.tree()
    }
}

pub fn prepare_network(config: &SweepConfig) -> Result<PreparedNetwork> {
    let feeder = match &config.network {
        NetworkSource::Feeder(path) => load_feeder(path)?,
        NetworkSource::Synthetic { n, seed } => synthetic_feeder(*n, *seed)?,
    };
    prepare_feeder(feeder, config)
}

pub fn prepare_feeder(feeder: FeederSpec, config: &SweepConfig) -> Result<PreparedNetwork> {
    let n = feeder.n();
    if n < 2 {
        return Err(Error::Domain(format!("the sweep needs at least 2 non-slack nodes, got {n}")));
    }
    let z = scaled_impedance(&feeder, &config.power_factor)?;
    let impedance = equivalent_impedance(feeder.tree(), &z)?;
    let w_star = ground_truth_parameters(feeder.tree(), &z)?;
    let v_base = match &config.v_base {
        Some(v) if v.len() != n => return Err(Error::dim(n, v.len())),
        Some(v) => v.clone(),
        None => {
            let p = match &config.p_base {
                BaseInjection::Uniform(p) => vec![*p; n],
                BaseInjection::PerNode(p) => p.clone(),
            };
            baseline_voltage(&impedance, &p)?
        }
    };
    Ok(PreparedNetwork {
        feeder,
        impedance,
        w_star,
        v_base,
    })
}

/// Seed number `stream` of the family rooted at `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Runs the sweep and streams rows to `config.results_path()`.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let network = prepare_network(config)?;
    let mut writer = ResultsWriter::create(&config.results_path())?;
    let path = config.results_path();
    run_sweep_with(config, &network, |r| writer.append(r).map_err(|e| Error::io(&path, e)))
}

/// Runs the sweep on a prepared network, handing each record to `sink` in
/// canonical order.
pub fn run_sweep_with<F>(config: &SweepConfig, network: &PreparedNetwork, mut sink: F) -> Result<Vec<SweepRecord>>
where
    F: FnMut(&SweepRecord) -> Result<()>,
{
    config.validate()?;
    let groups = config.s_grid.len() * config.trials;
    let workers = match config.threads {
        0 => thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .min(groups)
    .max(1);

    let mut records = Vec::with_capacity(config.record_count());
    if workers == 1 {
        for g in 0..groups {
            for r in run_group(config, network, g) {
                sink(&r)?;
                records.push(r);
            }
        }
        return Ok(records);
    }

    let next = AtomicUsize::new(0);
    thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let g = next.fetch_add(1, Ordering::Relaxed);
                if g >= groups || tx.send((g, run_group(config, network, g))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut emitted = 0;
        for (g, group) in rx {
            pending.insert(g, group);
            while let Some(group) = pending.remove(&emitted) {
                for r in group {
                    // on a sink error, stop handing out work and drain
                    if let Err(e) = sink(&r) {
                        next.store(groups, Ordering::Relaxed);
                        return Err(e);
                    }
                    records.push(r);
                }
                emitted += 1;
            }
        }
        Ok(())
    })?;
    Ok(records)
}

fn run_group(config: &SweepConfig, network: &PreparedNetwork, group: usize) -> Vec<SweepRecord> {
    let s = config.s_grid[group / config.trials];
    let trial_seed = derive_seed(config.master_seed, group as u64);
    let n = network.n();
    let failed = |pct: f64, delta: f64| SweepRecord {
        n,
        s,
        delta,
        delta_pct: pct,
        trial_seed,
        abs_err: f64::NAN,
        rel_err: f64::NAN,
        bound_c1: error_bound(1.0, delta, n, s).unwrap_or(f64::NAN),
        iters: 0,
        wall_ms: 0.0,
        topo_exact: false,
    };

    let prepared = (|| {
        let voltages = generate_voltage_data(&network.v_base, s, &config.noise, trial_seed)?;
        let op = build_sensing_operator(&voltages, n, config.basis)?;
        let clean = op.apply(&network.w_star)?;
        Ok::<_, Error>((op, clean))
    })();
    let (op, clean) = match prepared {
        Ok(p) => p,
        Err(_) => return config.delta_pcts.iter().map(|&p| failed(p, f64::NAN)).collect(),
    };
    let lasso = Lasso::new(&op, &config.solver);
    let radius = network.w_star.l1_norm();

    config
        .delta_pcts
        .iter()
        .enumerate()
        .map(|(j, &pct)| {
            let delta = match bin_width_from_percentage(&clean, pct / 100.0) {
                Ok(d) => d,
                Err(_) => return failed(pct, f64::NAN),
            };
            let Ok(lasso) = lasso.as_ref() else {
                return failed(pct, delta);
            };
            let solved = (|| {
                let qconfig = QuantizerConfig::new(delta, derive_seed(trial_seed, j as u64 + 1))?;
                let measurements = quantize_measurements(&clean, &qconfig);
                let start = Instant::now();
                let est = lasso.solve(&measurements.p, radius)?;
                let wall_ms = if config.record_timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                let err = relative_error(&est.w_hat, network.w_star.as_slice())?;
                let topo = recover_topology(&est.to_line_parameters(n)?)?;
                Ok::<_, Error>(SweepRecord {
                    n,
                    s,
                    delta,
                    delta_pct: pct,
                    trial_seed,
                    abs_err: err.abs,
                    rel_err: err.rel,
                    bound_c1: error_bound(1.0, delta, n, s)?,
                    iters: est.iterations,
                    wall_ms,
                    topo_exact: topo == *network.tree(),
                })
            })();
            solved.unwrap_or_else(|_| failed(pct, delta))
        })
        .collect()
}

/// Convenience for callers that only want records: runs without touching
/// the filesystem.
pub fn run_sweep_in_memory(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let network = prepare_network(config)?;
    run_sweep_with(config, &network, |_| Ok(()))
}

/// Writes records to a results file in the given order.
pub fn write_results(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut w = ResultsWriter::create(path)?;
    for r in records {
        w.append(r).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
