//! Sweep records and the results file.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bounds::Observation;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str = "n,s,delta,delta_pct,trial_seed,abs_err,rel_err,bound_c1,iters,wall_ms,topo_exact";

/// Outcome of one solve. A failed solve carries `NaN` errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub n: usize,
    pub s: usize,
    pub delta: f64,
    /// Bin width as a percentage of the mean absolute clean measurement.
    pub delta_pct: f64,
    pub trial_seed: u64,
    pub abs_err: f64,
    pub rel_err: f64,
    /// Error bound with `C = 1`.
    pub bound_c1: f64,
    pub iters: usize,
    pub wall_ms: f64,
    pub topo_exact: bool,
}

impl SweepRecord {
    pub fn succeeded(&self) -> bool {
        self.abs_err.is_finite()
    }

    pub fn observation(&self) -> Observation {
        Observation {
            n: self.n,
            s: self.s,
            delta: self.delta,
            abs_err: self.abs_err,
        }
    }

    /// One results-file row; floats carry 17 significant digits.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{:.3},{}",
            self.n,
            self.s,
            self.delta,
            self.delta_pct,
            self.trial_seed,
            self.abs_err,
            self.rel_err,
            self.bound_c1,
            self.iters,
            self.wall_ms,
            u8::from(self.topo_exact)
        )
    }

    pub fn from_csv_row(row: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = row.split(',').map(str::trim).collect();
        if f.len() != 11 {
            return Err(format!("expected 11 fields, found {}", f.len()));
        }
        fn int<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("invalid {name} `{s}`"))
        }
        fn real(s: &str, name: &str) -> std::result::Result<f64, String> {
            s.parse().map_err(|_| format!("invalid {name} `{s}`"))
        }
        Ok(Self {
            n: int(f[0], "n")?,
            s: int(f[1], "s")?,
            delta: real(f[2], "delta")?,
            delta_pct: real(f[3], "delta_pct")?,
            trial_seed: int(f[4], "trial_seed")?,
            abs_err: real(f[5], "abs_err")?,
            rel_err: real(f[6], "rel_err")?,
            bound_c1: real(f[7], "bound_c1")?,
            iters: int(f[8], "iters")?,
            wall_ms: real(f[9], "wall_ms")?,
            topo_exact: match f[10] {
                "1" => true,
                "0" => false,
                other => return Err(format!("invalid topo_exact `{other}`")),
            },
        })
    }
}

/// Append-only writer: header first, then one flushed row per record.
pub struct ResultsWriter<W: Write> {
    out: W,
}

impl ResultsWriter<fs::File> {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Self::new(file).map_err(|e| Error::io(path, e))
    }
}

impl<W: Write> ResultsWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{RESULTS_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn append(&mut self, record: &SweepRecord) -> std::io::Result<()> {
        writeln!(self.out, "{}", record.to_csv_row())?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn read_results(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results(&text, path)
}

pub fn parse_results(text: &str, path: &Path) -> Result<Vec<SweepRecord>> {
    let mut rows = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match rows.next() {
        Some((_, header)) if header.trim() == RESULTS_HEADER => {}
        other => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: other.map_or(1, |(idx, _)| idx + 1),
                msg: format!("expected header `{RESULTS_HEADER}`"),
            })
        }
    }
    rows.map(|(idx, row)| {
        SweepRecord::from_csv_row(row).map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        })
    })
    .collect()
}
