//! Flat `key = value` sweep configuration.
//!
//! Recognised keys:
//!
//! | key | value |
//! |---|---|
//! | `feeder` | feeder file path |
//! | `synthetic_n`, `synthetic_seed` | synthetic feeder size and seed |
//! | `pf` | power factor in (0, 1] |
//! | `load` | `inductive` or `capacitive` |
//! | `s_grid` | `25,50,100` or `lo..hi/count` for evenly spread values |
//! | `delta_pcts` | bin widths in percent, comma-separated |
//! | `trials` | trials per cell |
//! | `p_base` | one injection for every node, or one per node |
//! | `v_base` | baseline voltages, one per node |
//! | `noise` | `magnitude_variance` or `deviation_fraction` |
//! | `noise_frac`, `noise_floor` | noise parameters |
//! | `basis` | `deviation` or `raw` |
//! | `seed` | master seed |
//! | `threads` | worker threads, 0 for all cores |
//! | `timing` | record solve times (`true`/`false`) |
//! | `out_dir` | output directory |
//! | `emit_chart` | write `chart.svg` (`true`/`false`) |
//! | `max_iters`, `rel_tol` | solver limits |
//!
//! `#` starts a comment.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lcpf::{LoadKind, PowerFactorModel};
use crate::sensing::VoltageBasis;

use super::sweep::{uniform_s_grid, BaseInjection, NetworkSource, SweepConfig};
use super::voltage::VoltageNoise;

pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = SweepConfig::default();
    apply_config_text(&mut config, &text, path)?;
    Ok(config)
}

pub fn apply_config_text(config: &mut SweepConfig, text: &str, path: &Path) -> Result<()> {
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{}:{}: expected `key = value`", path.display(), idx + 1)))?;
        apply_setting(config, key.trim(), value.trim())
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), idx + 1)))?;
    }
    Ok(())
}

/// Applies one setting; the CLI routes its flags through here as well.
pub fn apply_setting(config: &mut SweepConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "feeder" => config.network = NetworkSource::Feeder(PathBuf::from(value)),
        "synthetic_n" => {
            let n = parse(value, key)?;
            let seed = match config.network {
                NetworkSource::Synthetic { seed, .. } => seed,
                NetworkSource::Feeder(_) => 1,
            };
            config.network = NetworkSource::Synthetic { n, seed };
        }
        "synthetic_seed" => match &mut config.network {
            NetworkSource::Synthetic { seed, .. } => *seed = parse(value, key)?,
            NetworkSource::Feeder(_) => return Err("synthetic_seed given for a feeder file".into()),
        },
        "pf" => {
            config.power_factor =
                PowerFactorModel::new(parse(value, key)?, config.power_factor.kind).map_err(|e| e.to_string())?
        }
        "load" => {
            let kind = match value {
                "inductive" => LoadKind::Inductive,
                "capacitive" => LoadKind::Capacitive,
                _ => return Err(format!("load must be inductive or capacitive, got `{value}`")),
            };
            config.power_factor = PowerFactorModel::new(config.power_factor.phi, kind).map_err(|e| e.to_string())?;
        }
        "s_grid" => config.s_grid = parse_s_grid(value)?,
        "delta_pcts" => config.delta_pcts = parse_list(value, key)?,
        "trials" => config.trials = parse(value, key)?,
        "p_base" => {
            let v: Vec<f64> = parse_list(value, key)?;
            config.p_base = if v.len() == 1 {
                BaseInjection::Uniform(v[0])
            } else {
                BaseInjection::PerNode(v)
            };
        }
        "v_base" => config.v_base = Some(parse_list(value, key)?),
        "noise" => {
            let frac = match config.noise {
                VoltageNoise::DeviationFraction { frac, .. } | VoltageNoise::MagnitudeVariance { frac } => frac,
            };
            config.noise = match value {
                "magnitude_variance" => VoltageNoise::MagnitudeVariance { frac },
                "deviation_fraction" => VoltageNoise::DeviationFraction { frac, floor: 1e-4 },
                _ => return Err(format!("unknown noise model `{value}`")),
            };
        }
        "noise_frac" => match &mut config.noise {
            VoltageNoise::DeviationFraction { frac, .. } | VoltageNoise::MagnitudeVariance { frac } => {
                *frac = parse(value, key)?
            }
        },
        "noise_floor" => match &mut config.noise {
            VoltageNoise::DeviationFraction { floor, .. } => *floor = parse(value, key)?,
            VoltageNoise::MagnitudeVariance { .. } => {
                return Err("noise_floor only applies to deviation_fraction noise".into())
            }
        },
        "basis" => {
            config.basis = match value {
                "deviation" => VoltageBasis::Deviation,
                "raw" => VoltageBasis::Raw,
                _ => return Err(format!("basis must be deviation or raw, got `{value}`")),
            }
        }
        "seed" => config.master_seed = parse(value, key)?,
        "threads" => config.threads = parse(value, key)?,
        "timing" => config.record_timing = parse(value, key)?,
        "out_dir" => config.out_dir = PathBuf::from(value),
        "emit_chart" => config.emit_chart = parse(value, key)?,
        "max_iters" => config.solver.max_iters = parse(value, key)?,
        "rel_tol" => config.solver.rel_tol = parse(value, key)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(value: &str, key: &str) -> std::result::Result<T, String> {
    value.trim().parse().map_err(|_| format!("invalid value `{value}` for {key}"))
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> std::result::Result<Vec<T>, String> {
    value.split(',').map(|v| parse(v, key)).collect()
}

/// `25,50,100` or `lo..hi/count`.
pub fn parse_s_grid(value: &str) -> std::result::Result<Vec<usize>, String> {
    if let Some((range, count)) = value.split_once('/') {
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| format!("expected `lo..hi/count`, got `{value}`"))?;
        let (lo, hi, count): (usize, usize, usize) = (parse(lo, "s_grid")?, parse(hi, "s_grid")?, parse(count, "s_grid")?);
        if hi < lo {
            return Err(format!("empty s range `{value}`"));
        }
        Ok(uniform_s_grid(lo, hi, count))
    } else {
        parse_list(value, "s_grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let text = "\
# sweep
synthetic_n = 12
synthetic_seed = 5
pf = 0.9
load = capacitive
s_grid = 10..100/4
delta_pcts = 1, 5
trials = 3
p_base = -0.02
noise = deviation_fraction
noise_frac = 0.2
seed = 99   # master
timing = true
emit_chart = false
out_dir = results/run1
";
        let mut c = SweepConfig::default();
        apply_config_text(&mut c, text, Path::new("sweep.conf")).unwrap();
        assert_eq!(c.network, NetworkSource::Synthetic { n: 12, seed: 5 });
        assert_eq!(c.power_factor.kind, LoadKind::Capacitive);
        assert!(c.power_factor.kappa < 0.0);
        assert_eq!(c.s_grid, vec![10, 40, 70, 100]);
        assert_eq!(c.delta_pcts, vec![1.0, 5.0]);
        assert_eq!(c.p_base, BaseInjection::Uniform(-0.02));
        assert_eq!(c.noise, VoltageNoise::DeviationFraction { frac: 0.2, floor: 1e-4 });
        assert_eq!((c.master_seed, c.record_timing, c.emit_chart), (99, true, false));
        assert_eq!(c.out_dir, PathBuf::from("results/run1"));
        c.validate().unwrap();
    }

    #[test]
    fn errors_name_the_line() {
        let mut c = SweepConfig::default();
        let err = apply_config_text(&mut c, "trials = 2\ncolour = red\n", Path::new("x.conf")).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("x.conf:2") && m.contains("colour")), "{err}");
        let err = apply_config_text(&mut c, "trials 2\n", Path::new("x.conf")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(apply_setting(&mut c, "pf", "1.5").is_err());
        assert!(apply_setting(&mut c, "s_grid", "10..5/3").is_err());
    }

    #[test]
    fn explicit_grids() {
        assert_eq!(parse_s_grid("25,50,100").unwrap(), vec![25, 50, 100]);
        assert_eq!(parse_s_grid("10..800/100").unwrap().len(), 100);
    }
}
