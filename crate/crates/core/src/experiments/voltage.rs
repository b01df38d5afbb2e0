//! Random voltage samples around a baseline operating point.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sensing::VoltageData;

/// Spread of the Gaussian voltage samples around the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VoltageNoise {
    /// Standard deviation `frac · |v_base − 1|`, at least `floor` when
    /// `frac > 0`.
    DeviationFraction { frac: f64, floor: f64 },
    /// Variance `frac · v_base`.
    MagnitudeVariance { frac: f64 },
}

impl Default for VoltageNoise {
    fn default() -> Self {
        VoltageNoise::MagnitudeVariance { frac: 0.10 }
    }
}

impl VoltageNoise {
    pub fn std_dev(&self, v_base: f64) -> f64 {
        match *self {
            VoltageNoise::DeviationFraction { frac, floor } => {
                if frac == 0.0 {
                    0.0
                } else {
                    (frac * (v_base - 1.0).abs()).max(floor)
                }
            }
            VoltageNoise::MagnitudeVariance { frac } => (frac * v_base.abs()).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            VoltageNoise::DeviationFraction { frac, floor } => frac >= 0.0 && floor >= 0.0,
            VoltageNoise::MagnitudeVariance { frac } => frac >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("negative voltage noise parameter in {self:?}")))
        }
    }
}

/// LCPF operating point `1 + Z p_base`.
pub fn baseline_voltage(z: &DMatrix<f64>, p_base: &[f64]) -> Result<Vec<f64>> {
    if z.ncols() != p_base.len() {
        return Err(Error::dim(z.ncols(), p_base.len()));
    }
    let v = z * DVector::from_column_slice(p_base);
    Ok(v.iter().map(|x| 1.0 + x).collect())
}

/// `s` independent Gaussian voltage samples with column mean `v_base`.
pub fn generate_voltage_data(v_base: &[f64], s: usize, noise: &VoltageNoise, seed: u64) -> Result<VoltageData> {
    noise.validate()?;
    if s == 0 {
        return Err(Error::Domain("need at least one voltage sample".into()));
    }
    let n = v_base.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists = v_base
        .iter()
        .map(|&v| {
            Normal::new(v, noise.std_dev(v)).map_err(|e| Error::Domain(format!("voltage distribution: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(n * s);
    for _ in 0..s {
        data.extend(dists.iter().map(|d| d.sample(&mut rng)));
    }
    VoltageData::new(DMatrix::from_vec(n, s, data))
}
