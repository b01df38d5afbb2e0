//! Generalized LASSO over the ℓ₁ ball,
//!
//! ```text
//! ŵ = argmin_{‖w‖₁ ≤ R} (1/2m) ‖A w − p‖²,
//! ```
//!
//! solved by accelerated projected gradient with function-value restart.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{max_weight_spanning_tree, LineParameterVector, TreeTopology};
use crate::quantizer::MeasurementSet;
use crate::sensing::{operator_norm_sq, LinearOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once the objective decreases by less than this fraction over
    /// `window` accepted iterations.
    pub rel_tol: f64,
    pub window: usize,
    pub acceleration: bool,
    pub restart: bool,
    /// Relative tolerance of the power iteration that sizes the step.
    pub norm_tol: f64,
    /// Keep the best objective after every iteration in [`Estimate::trace`].
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            rel_tol: 1e-10,
            window: 10,
            acceleration: true,
            restart: true,
            norm_tol: 1e-6,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 || self.window < 1 {
            return Err(Error::Config("max_iters and window must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.norm_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub w_hat: Vec<f64>,
    pub iterations: usize,
    pub final_objective: f64,
    pub converged: bool,
    /// `L‖w − P(w − ∇f(w)/L)‖` at the returned point.
    pub gradient_mapping_norm: f64,
    pub lipschitz: f64,
    pub trace: Vec<f64>,
}

impl Estimate {
    pub fn to_line_parameters(&self, n: usize) -> Result<LineParameterVector> {
        LineParameterVector::new(n, self.w_hat.clone())
    }
}

/// Euclidean projection onto `{u : ‖u‖₁ ≤ radius}` by soft-thresholding at
/// the threshold found from the sorted magnitudes.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!("ℓ₁ radius must be positive, got {radius}")));
    }
    let mut out = v.to_vec();
    project_in_place(&mut out, radius, &mut Vec::with_capacity(v.len()));
    Ok(out)
}

fn project_in_place(v: &mut [f64], radius: f64, scratch: &mut Vec<f64>) {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return;
    }
    scratch.clear();
    scratch.extend(v.iter().map(|x| x.abs()));
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (idx, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (idx + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * (x.abs() - theta).max(0.0);
    }
}

fn objective(ax: &[f64], p: &[f64]) -> f64 {
    let m = p.len() as f64;
    ax.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * m)
}

fn gradient<A: LinearOperator + ?Sized>(op: &A, ax: &[f64], p: &[f64], resid: &mut [f64], grad: &mut [f64]) {
    let m = p.len() as f64;
    for ((r, a), b) in resid.iter_mut().zip(ax).zip(p) {
        *r = (a - b) / m;
    }
    op.adjoint_into(resid, grad);
}

pub fn solve_lasso<A: LinearOperator + ?Sized>(
    op: &A,
    measurements: &MeasurementSet,
    radius: f64,
    config: &SolverConfig,
) -> Result<Estimate> {
    Lasso::new(op, config)?.solve(&measurements.p, radius)
}

/// [`solve_lasso`] on a plain measurement vector.
pub fn solve_lasso_values<A: LinearOperator + ?Sized>(
    op: &A,
    p: &[f64],
    radius: f64,
    config: &SolverConfig,
) -> Result<Estimate> {
    Lasso::new(op, config)?.solve(p, radius)
}

/// A LASSO solver bound to one operator. The Lipschitz constant
/// `σ_max(A)²/m` is computed once and reused across measurement vectors.
#[derive(Debug)]
pub struct Lasso<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    config: SolverConfig,
    lipschitz: f64,
}

impl<'a, A: LinearOperator + ?Sized> Lasso<'a, A> {
    pub fn new(op: &'a A, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let m = op.nrows();
        if m == 0 {
            return Err(Error::DegenerateInput("no measurements".into()));
        }
        let lipschitz = operator_norm_sq(op, config.norm_tol)? / m as f64;
        Ok(Self {
            op,
            config: config.clone(),
            lipschitz,
        })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn solve(&self, p: &[f64], radius: f64) -> Result<Estimate> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("ℓ₁ radius must be positive, got {radius}")));
        }
        let (op, config, lipschitz) = (self.op, &self.config, self.lipschitz);
        let (m, d) = (op.nrows(), op.ncols());
        if p.len() != m {
            return Err(Error::dim(m, p.len()));
        }

        let mut x = vec![0.0; d];
        let mut ax = vec![0.0; m];
        let mut fx = objective(&ax, p);
        let mut trace = Vec::new();
        if lipschitz == 0.0 {
            return Ok(Estimate {
                w_hat: x,
                iterations: 0,
                final_objective: fx,
                converged: true,
                gradient_mapping_norm: 0.0,
                lipschitz,
                trace,
            });
        }
        let step = 1.0 / lipschitz;

        let mut y = x.clone();
        let mut ay = ax.clone();
        let mut x_new = vec![0.0; d];
        let mut ax_new = vec![0.0; m];
        let mut resid = vec![0.0; m];
        let mut grad = vec![0.0; d];
        let mut scratch = Vec::with_capacity(d);
        let mut momentum = 1.0f64;
        let mut plain_step = true;
        let mut history: VecDeque<f64> = VecDeque::with_capacity(config.window + 1);
        history.push_back(fx);
        // best iterate, used only when restarts are off
        let mut best = (fx, x.clone());
        let mut converged = false;
        let mut iterations = 0;

        while iterations < config.max_iters {
            iterations += 1;
            gradient(op, &ay, p, &mut resid, &mut grad);
            for ((xn, yi), gi) in x_new.iter_mut().zip(&y).zip(&grad) {
                *xn = yi - step * gi;
            }
            project_in_place(&mut x_new, radius, &mut scratch);
            op.apply_into(&x_new, &mut ax_new);
            let f_new = objective(&ax_new, p);

            if config.restart && f_new > fx {
                if plain_step {
                    // a plain projected step from x cannot increase f beyond round-off
                    converged = true;
                    break;
                }
                momentum = 1.0;
                y.copy_from_slice(&x);
                ay.copy_from_slice(&ax);
                plain_step = true;
                if config.record_trace {
                    trace.push(best.0);
                }
                continue;
            }

            let beta = if config.acceleration {
                let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                let beta = (momentum - 1.0) / next;
                momentum = next;
                beta
            } else {
                0.0
            };
            plain_step = beta == 0.0;
            for i in 0..d {
                y[i] = x_new[i] + beta * (x_new[i] - x[i]);
            }
            for i in 0..m {
                ay[i] = ax_new[i] + beta * (ax_new[i] - ax[i]);
            }
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut ax, &mut ax_new);
            fx = f_new;
            if fx < best.0 {
                best.0 = fx;
                if !config.restart {
                    best.1.copy_from_slice(&x);
                }
            }
            if config.record_trace {
                trace.push(best.0);
            }

            history.push_back(fx);
            if history.len() > config.window {
                let old = history.pop_front().expect("window is non-empty");
                if old - fx <= config.rel_tol * old {
                    converged = true;
                    break;
                }
            }
        }

        let (final_objective, w_hat) = if config.restart { (fx, x) } else { best };
        let gradient_mapping_norm = gradient_mapping(op, &w_hat, p, radius, lipschitz);
        Ok(Estimate {
            w_hat,
            iterations,
            final_objective,
            converged,
            gradient_mapping_norm,
            lipschitz,
            trace,
        })
    }
}

fn gradient_mapping<A: LinearOperator + ?Sized>(op: &A, w: &[f64], p: &[f64], radius: f64, lipschitz: f64) -> f64 {
    let aw = op.apply_vec(w);
    let mut resid = vec![0.0; p.len()];
    let mut grad = vec![0.0; w.len()];
    gradient(op, &aw, p, &mut resid, &mut grad);
    let mut stepped: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a - g / lipschitz).collect();
    project_in_place(&mut stepped, radius, &mut Vec::new());
    lipschitz * w.iter().zip(&stepped).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Rounds an estimate to the spanning tree carrying the most admittance
/// magnitude.
pub fn recover_topology(w_hat: &LineParameterVector) -> Result<TreeTopology> {
    let scores: Vec<f64> = w_hat.as_slice().iter().map(|v| v.abs()).collect();
    max_weight_spanning_tree(&scores, w_hat.n())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    pub abs: f64,
    pub rel: f64,
}

pub fn relative_error(w_hat: &[f64], w_star: &[f64]) -> Result<ErrorPair> {
    if w_hat.len() != w_star.len() {
        return Err(Error::dim(w_star.len(), w_hat.len()));
    }
    let norm_star = w_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_star == 0.0 {
        return Err(Error::DegenerateInput("ground truth is the zero vector".into()));
    }
    let abs = w_hat
        .iter()
        .zip(w_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(ErrorPair {
        abs,
        rel: abs / norm_star,
    })
}
