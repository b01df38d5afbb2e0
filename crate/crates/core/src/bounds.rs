//! Sample-complexity calculators.
//!
//! The squared Gaussian width of the tangent cone of the ℓ₁ ball at an
//! `n`-sparse point in `ℝ^{(n+1 choose 2)}` is at most
//! `2n ln((n+1)/2) + 3n/2`. Dividing by `m = sn` measurements gives the
//! error bound `C Δ √((2 ln((n+1)/2) + 3/2) / s)`. All logarithms are
//! natural.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::num_edges;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub n: usize,
    pub s: usize,
    pub delta: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
}

impl BoundParams {
    pub fn error_bound(&self) -> Result<f64> {
        error_bound(self.c, self.delta, self.n, self.s)
    }

    pub fn min_samples_per_node(&self) -> Result<u64> {
        min_samples_per_node(self.n, self.c1, self.c2)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "the width bound needs n >= 2 so that ln((n+1)/2) > 0, got n = {n}"
        )));
    }
    Ok(())
}

/// `2 ln((n+1)/2) + 3/2`, the per-node effective dimension.
fn per_node_dimension(n: usize) -> f64 {
    2.0 * ((n as f64 + 1.0) / 2.0).ln() + 1.5
}

pub fn gaussian_width_sq_bound(n: usize) -> Result<f64> {
    check_n(n)?;
    Ok(n as f64 * per_node_dimension(n))
}

pub fn error_bound(c: f64, delta: f64, n: usize, s: usize) -> Result<f64> {
    check_n(n)?;
    if !(c > 0.0) || !(delta > 0.0) || s == 0 {
        return Err(Error::Domain(format!(
            "error bound needs C > 0, Δ > 0, s >= 1 (got C = {c}, Δ = {delta}, s = {s})"
        )));
    }
    Ok(c * delta * (per_node_dimension(n) / s as f64).sqrt())
}

/// `⌈c₁ (2 ln((n+1)/2) + 3/2) + c₂⌉`.
pub fn min_samples_per_node(n: usize, c1: f64, c2: f64) -> Result<u64> {
    check_n(n)?;
    if !(c1 > 0.0) || !(c2 >= 0.0) {
        return Err(Error::Domain(format!(
            "sample requirement needs c1 > 0 and c2 >= 0 (got {c1}, {c2})"
        )));
    }
    Ok((c1 * per_node_dimension(n) + c2).ceil() as u64)
}

/// One measured error together with the inputs of its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub n: usize,
    pub s: usize,
    pub delta: f64,
    pub abs_err: f64,
}

/// Smallest `C` for which the bound dominates every observation:
/// `max abs_err / error_bound(1, Δ, n, s)`.
pub fn calibrate_constant<I>(observations: I) -> Result<f64>
where
    I: IntoIterator<Item = Observation>,
{
    let observations: Vec<Observation> = observations.into_iter().collect();
    let mut c: Option<f64> = None;
    for obs in &observations {
        let ratio = obs.abs_err / error_bound(1.0, obs.delta, obs.n, obs.s)?;
        c = Some(c.map_or(ratio, |b: f64| b.max(ratio)));
    }
    let mut c = c.ok_or_else(|| Error::DegenerateInput("no observations to calibrate against".into()))?;
    if !(c > 0.0) {
        return Err(Error::DegenerateInput(format!("calibrated constant {c} is not positive")));
    }
    // absorb rounding so that the bound dominates every observation exactly
    for obs in &observations {
        while error_bound(c, obs.delta, obs.n, obs.s)? < obs.abs_err {
            c = c.next_up();
        }
    }
    Ok(c)
}

/// Monte Carlo estimate of a Gaussian width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthEstimate {
    /// `(mean sup ⟨u, g⟩)²`, the squared Gaussian width.
    pub width_sq: f64,
    pub width_sq_stderr: f64,
    /// `mean (sup ⟨u, g⟩)²`, the statistical dimension.
    pub stat_dim: f64,
    pub stat_dim_stderr: f64,
    pub trials: usize,
}

impl WidthEstimate {
    fn from_samples(sups: &[f64]) -> Self {
        let t = sups.len() as f64;
        let (mean, se) = mean_and_stderr(sups.iter().copied(), t);
        let (msq, msq_se) = mean_and_stderr(sups.iter().map(|v| v * v), t);
        Self {
            width_sq: mean * mean,
            width_sq_stderr: 2.0 * mean.abs() * se,
            stat_dim: msq,
            stat_dim_stderr: msq_se,
            trials: sups.len(),
        }
    }
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, count: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / count;
    if count < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// `sup_{u ∈ D ∩ S^{d−1}} ⟨u, g⟩` for the ℓ₁-ball tangent cone `D` at a
/// point supported on the first `k` coordinates with positive signs.
///
/// By Moreau's decomposition the supremum is the distance from `g` to the
/// normal cone `{t z : t ≥ 0, z_S = 1, |z_{S^c}| ≤ 1}`, which is minimized
/// over the scalar `t`.
pub fn l1_descent_sup(g: &[f64], k: usize) -> f64 {
    let (on, off) = g.split_at(k);
    let slope = |t: f64| -> f64 {
        -on.iter().map(|gi| gi - t).sum::<f64>() - off.iter().map(|gi| (gi.abs() - t).max(0.0)).sum::<f64>()
    };
    let dist_sq = |t: f64| -> f64 {
        on.iter().map(|gi| (gi - t).powi(2)).sum::<f64>()
            + off.iter().map(|gi| (gi.abs() - t).max(0.0).powi(2)).sum::<f64>()
    };
    let t_star = if slope(0.0) >= 0.0 {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = g.iter().fold(0.0f64, |a, v| a.max(v.abs())) + 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    dist_sq(t_star).max(0.0).sqrt()
}

/// Width of the ℓ₁-ball tangent cone shell at a `k`-sparse point of `ℝ^d`.
pub fn estimate_l1_descent_width_sq(d: usize, k: usize, trials: usize, seed: u64) -> Result<WidthEstimate> {
    if trials == 0 || k == 0 || k > d {
        return Err(Error::Domain(format!(
            "width estimate needs trials >= 1 and 1 <= k <= d (got trials = {trials}, k = {k}, d = {d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; d];
    let sups: Vec<f64> = (0..trials)
        .map(|_| {
            g.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            l1_descent_sup(&g, k)
        })
        .collect();
    Ok(WidthEstimate::from_samples(&sups))
}

/// Width of the tree-set relaxation for an `n`-node network: `k = n`
/// nonzeros among `d = (n+1 choose 2)` coordinates.
pub fn estimate_gaussian_width_sq(n: usize, trials: usize, seed: u64) -> Result<WidthEstimate> {
    estimate_l1_descent_width_sq(num_edges(n), n, trials, seed)
}

/// Width of the whole unit sphere of `ℝ^d` (sup is `‖g‖`); its statistical
/// dimension is exactly `d`.
pub fn estimate_sphere_width_sq(d: usize, trials: usize, seed: u64) -> Result<WidthEstimate> {
    if trials == 0 || d == 0 {
        return Err(Error::Domain("sphere width needs d >= 1 and trials >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sups: Vec<f64> = (0..trials)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    v * v
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(WidthEstimate::from_samples(&sups))
}
