//! Feeder files and synthetic feeders.
//!
//! A feeder file is comma-separated text with the header `from,to,r_pu,x_pu`
//! and one branch per line. Node 0 is the slack. Blank lines and lines
//! starting with `#` are skipped.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::random_spanning_tree;
use crate::lcpf::{FeederSpec, Line};

pub const FEEDER_HEADER: &str = "from,to,r_pu,x_pu";

pub fn load_feeder(path: &Path) -> Result<FeederSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_feeder(&text, path)
}

pub fn parse_feeder(text: &str, path: &Path) -> Result<FeederSpec> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        if !header_seen {
            let normalized: String = row.split(',').map(str::trim).collect::<Vec<_>>().join(",");
            if normalized != FEEDER_HEADER {
                return Err(parse_err(lineno, format!("expected header `{FEEDER_HEADER}`, found `{row}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(lineno, format!("expected 4 fields, found {}", fields.len())));
        }
        let node = |s: &str, name: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(lineno, format!("invalid {name} node `{s}`")))
        };
        let real = |s: &str, name: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(lineno, format!("invalid {name} `{s}`")))
        };
        let line = Line {
            from: node(fields[0], "from")?,
            to: node(fields[1], "to")?,
            r: real(fields[2], "r_pu")?,
            x: real(fields[3], "x_pu")?,
        };
        if !(line.r > 0.0) {
            return Err(parse_err(lineno, format!("resistance must be positive, found {}", line.r)));
        }
        lines.push(line);
    }
    if !header_seen {
        return Err(parse_err(1, format!("missing header `{FEEDER_HEADER}`")));
    }
    if lines.is_empty() {
        return Err(parse_err(1, "feeder has no branches".into()));
    }
    let n = lines.iter().map(|l| l.from.max(l.to)).max().unwrap_or(0);
    FeederSpec::new(n, lines)
}

pub fn write_feeder(feeder: &FeederSpec) -> String {
    let mut out = String::from(FEEDER_HEADER);
    out.push('\n');
    for l in feeder.lines() {
        out.push_str(&format!("{},{},{:.16e},{:.16e}\n", l.from, l.to, l.r, l.x));
    }
    out
}

/// Per-unit ranges of the synthetic line parameters.
pub const SYNTHETIC_R_RANGE: (f64, f64) = (0.005, 0.05);
pub const SYNTHETIC_X_RANGE: (f64, f64) = (0.005, 0.05);

/// A uniformly random tree over `n + 1` nodes with resistances and
/// reactances drawn uniformly from [`SYNTHETIC_R_RANGE`] and
/// [`SYNTHETIC_X_RANGE`].
pub fn synthetic_feeder(n: usize, seed: u64) -> Result<FeederSpec> {
    let tree = random_spanning_tree(n, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let lines = tree
        .parents()
        .iter()
        .enumerate()
        .map(|(idx, &p)| Line {
            from: p,
            to: idx + 1,
            r: rng.random_range(SYNTHETIC_R_RANGE.0..SYNTHETIC_R_RANGE.1),
            x: rng.random_range(SYNTHETIC_X_RANGE.0..SYNTHETIC_X_RANGE.1),
        })
        .collect();
    FeederSpec::new(n, lines)
}
