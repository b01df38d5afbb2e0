//! The Khatri-Rao structured sensing operator.
//!
//! Column `k` of `A` is `(Uᵀ c̃_k) ⊗ c̃_k`, where `c̃_k` is the slack-reduced
//! incidence vector of edge `k` of `K_{n+1}` and `U` holds one voltage sample
//! per column. Equivalently `A w = vec(Ỹ_red(w) U)` with columns stacked
//! sample by sample: measurement `t·n + (i − 1)` is node `i` at sample `t`.
//!
//! [`SensingOperator`] applies `A` and `Aᵀ` without materializing the
//! `sn × d` matrix; [`DenseOperator`] holds an explicit matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{complete_edges, LineParameterVector};
use crate::quantizer::{quantize_measurements, MeasurementSet, QuantizerConfig};

/// A real linear map `ℝ^ncols → ℝ^nrows` with its adjoint.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `out = A x`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    /// `out = Aᵀ r`.
    fn adjoint_into(&self, r: &[f64], out: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        self.apply_into(x, &mut out);
        out
    }

    fn adjoint_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        self.adjoint_into(r, &mut out);
        out
    }
}

/// Which voltage matrix feeds the Khatri-Rao product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoltageBasis {
    /// `U = V − 1`, consistent with the LCPF relation `P = Y (V − 1)`.
    #[default]
    Deviation,
    /// Raw magnitudes `V`.
    Raw,
}

/// Per-unit voltage magnitudes, one row per non-slack node and one column
/// per time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageData {
    v: DMatrix<f64>,
}

impl VoltageData {
    pub fn new(v: DMatrix<f64>) -> Result<Self> {
        if v.ncols() == 0 || v.nrows() == 0 {
            return Err(Error::dim("at least one node and one sample", format!("{}x{}", v.nrows(), v.ncols())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("voltage data contains non-finite entries".into()));
        }
        Ok(Self { v })
    }

    /// Builds voltages from deviations `U`, i.e. `V = 1 + U`.
    pub fn from_deviations(u: DMatrix<f64>) -> Result<Self> {
        Self::new(u.add_scalar(1.0))
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn s(&self) -> usize {
        self.v.ncols()
    }

    pub fn magnitudes(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn deviations(&self) -> DMatrix<f64> {
        self.v.add_scalar(-1.0)
    }

    fn basis_matrix(&self, basis: VoltageBasis) -> DMatrix<f64> {
        match basis {
            VoltageBasis::Deviation => self.deviations(),
            VoltageBasis::Raw => self.v.clone(),
        }
    }
}

/// Matrix-free sensing operator.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    n: usize,
    s: usize,
    edges: Vec<(usize, usize)>,
    /// `diffs[t·d + k] = c̃_kᵀ u_t`, the voltage difference across edge `k`
    /// at sample `t` (slack entry taken as zero).
    diffs: Vec<f64>,
}

pub fn build_sensing_operator(voltages: &VoltageData, n: usize, basis: VoltageBasis) -> Result<SensingOperator> {
    if voltages.n() != n {
        return Err(Error::dim(format!("{n} voltage rows"), voltages.n()));
    }
    let u = voltages.basis_matrix(basis);
    let s = voltages.s();
    let edges = complete_edges(n);
    let d = edges.len();
    let mut diffs = vec![0.0; s * d];
    for t in 0..s {
        let col = u.column(t);
        let node = |i: usize| if i == 0 { 0.0 } else { col[i - 1] };
        for (k, &(i, j)) in edges.iter().enumerate() {
            diffs[t * d + k] = node(i) - node(j);
        }
    }
    Ok(SensingOperator { n, s, edges, diffs })
}

impl SensingOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn d(&self) -> usize {
        self.edges.len()
    }

    pub fn m(&self) -> usize {
        self.n * self.s
    }

    pub fn apply(&self, w: &LineParameterVector) -> Result<Vec<f64>> {
        self.check_cols(w.len())?;
        Ok(self.apply_vec(w.as_slice()))
    }

    pub fn apply_adjoint(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.m() {
            return Err(Error::dim(self.m(), r.len()));
        }
        Ok(self.adjoint_vec(r))
    }

    /// The explicit `sn × d` matrix.
    pub fn materialize(&self) -> DenseOperator {
        let (n, d) = (self.n, self.d());
        let mut a = DMatrix::zeros(self.m(), d);
        for t in 0..self.s {
            for (k, &(i, j)) in self.edges.iter().enumerate() {
                let diff = self.diffs[t * d + k];
                if i > 0 {
                    a[(t * n + i - 1, k)] = diff;
                }
                a[(t * n + j - 1, k)] = -diff;
            }
        }
        DenseOperator::new(a)
    }

    fn check_cols(&self, len: usize) -> Result<()> {
        if len != self.d() {
            return Err(Error::dim(self.d(), len));
        }
        Ok(())
    }
}

impl LinearOperator for SensingOperator {
    fn nrows(&self) -> usize {
        self.m()
    }

    fn ncols(&self) -> usize {
        self.d()
    }

    fn apply_into(&self, w: &[f64], out: &mut [f64]) {
        let (n, d) = (self.n, self.d());
        debug_assert_eq!(w.len(), d);
        debug_assert_eq!(out.len(), self.m());
        out.fill(0.0);
        for (block, diffs) in out.chunks_exact_mut(n).zip(self.diffs.chunks_exact(d)) {
            for ((&(i, j), &diff), &wk) in self.edges.iter().zip(diffs).zip(w) {
                let flow = wk * diff;
                if i > 0 {
                    block[i - 1] += flow;
                }
                block[j - 1] -= flow;
            }
        }
    }

    fn adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        let (n, d) = (self.n, self.d());
        debug_assert_eq!(r.len(), self.m());
        debug_assert_eq!(out.len(), d);
        out.fill(0.0);
        for (block, diffs) in r.chunks_exact(n).zip(self.diffs.chunks_exact(d)) {
            for ((&(i, j), &diff), g) in self.edges.iter().zip(diffs).zip(out.iter_mut()) {
                let ri = if i > 0 { block[i - 1] } else { 0.0 };
                *g += (ri - block[j - 1]) * diff;
            }
        }
    }
}

/// An explicit dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    a: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(a: DMatrix<f64>) -> Self {
        Self { a }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl LinearOperator for DenseOperator {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }

    fn ncols(&self) -> usize {
        self.a.ncols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let y = &self.a * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }

    fn adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        let y = self.a.tr_mul(&DVector::from_column_slice(r));
        out.copy_from_slice(y.as_slice());
    }
}

const POWER_ITERATION_CAP: usize = 10_000;

/// `σ_max(A)²` by power iteration on `AᵀA`, stopping when the Rayleigh
/// quotient changes by less than `tol` relative.
pub fn operator_norm_sq<A: LinearOperator + ?Sized>(op: &A, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let d = op.ncols();
    if d == 0 || op.nrows() == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
    normalize(&mut x);
    let mut ax = vec![0.0; op.nrows()];
    let mut y = vec![0.0; d];
    let mut lambda = 0.0;
    for iter in 0..POWER_ITERATION_CAP {
        op.apply_into(&x, &mut ax);
        op.adjoint_into(&ax, &mut y);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        if iter > 0 && (next - lambda).abs() <= tol * next.abs() {
            return Ok(next);
        }
        lambda = next;
        x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi = yi / norm);
    }
    Err(Error::Numeric(format!(
        "power iteration did not reach relative tolerance {tol:e} in {POWER_ITERATION_CAP} \
         iterations (last Rayleigh quotient {lambda:e})"
    )))
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

/// Quantized measurements `Q(A w⋆)`.
pub fn generate_measurements(
    op: &SensingOperator,
    w_star: &LineParameterVector,
    qconfig: &QuantizerConfig,
) -> Result<MeasurementSet> {
    let clean = op.apply(w_star)?;
    Ok(quantize_measurements(&clean, qconfig))
}
