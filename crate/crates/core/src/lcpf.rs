//! Linear coupled power flow under a fixed power factor.
//!
//! With reactive injections `q = κ p`, voltage magnitudes obey
//! `v - 1 = Z p` where `Z = C⁻¹ diag(r + κx) C⁻ᵀ` is the inverse of the
//! reduced, real-valued equivalent admittance matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{tree_incidence_inverse, LineParameterVector, NodeId, TreeTopology};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from: NodeId,
    pub to: NodeId,
    /// Per-unit resistance.
    pub r: f64,
    /// Per-unit reactance.
    pub x: f64,
}

/// A radial feeder: `n` non-slack nodes and one line per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederSpec {
    n: usize,
    lines: Vec<Line>,
    tree: TreeTopology,
}

impl FeederSpec {
    pub fn new(n: usize, lines: Vec<Line>) -> Result<Self> {
        let pairs: Vec<_> = lines.iter().map(|l| (l.from, l.to)).collect();
        let tree = TreeTopology::from_edges(n, &pairs)?;
        for l in &lines {
            if !(l.r > 0.0) || !l.r.is_finite() {
                return Err(Error::ModelViolation(format!(
                    "line ({}, {}) has non-positive resistance {}",
                    l.from, l.to, l.r
                )));
            }
            if !l.x.is_finite() {
                return Err(Error::ModelViolation(format!(
                    "line ({}, {}) has non-finite reactance",
                    l.from, l.to
                )));
            }
        }
        Ok(Self { n, lines, tree })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn tree(&self) -> &TreeTopology {
        &self.tree
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadKind {
    Inductive,
    Capacitive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFactorModel {
    pub phi: f64,
    pub kind: LoadKind,
    pub kappa: f64,
}

impl PowerFactorModel {
    pub fn new(phi: f64, kind: LoadKind) -> Result<Self> {
        let sign = match kind {
            LoadKind::Inductive => 1.0,
            LoadKind::Capacitive => -1.0,
        };
        Ok(Self {
            phi,
            kind,
            kappa: kappa_from_power_factor(phi, sign)?,
        })
    }

    pub fn unity() -> Self {
        Self {
            phi: 1.0,
            kind: LoadKind::Inductive,
            kappa: 0.0,
        }
    }
}

/// `κ = sign · √(1 − φ²) / φ`.
pub fn kappa_from_power_factor(phi: f64, sign: f64) -> Result<f64> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::Domain(format!("power factor {phi} outside (0, 1]")));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::Domain(format!("power factor sign must be ±1, got {sign}")));
    }
    Ok(sign * (1.0 - phi * phi).sqrt() / phi)
}

/// Scaled line impedances `z = r + κx`; entry `i - 1` belongs to the line
/// joining node `i` to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledImpedanceVector(Vec<f64>);

impl ScaledImpedanceVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = z.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::ModelViolation(format!(
                "scaled impedance of the line feeding node {} is {v}, must be positive",
                i + 1
            )));
        }
        Ok(Self(z))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn scaled_impedance(feeder: &FeederSpec, pf: &PowerFactorModel) -> Result<ScaledImpedanceVector> {
    let tree = feeder.tree();
    let mut z = vec![0.0; feeder.n()];
    for l in feeder.lines() {
        let child = if l.to != 0 && tree.parent(l.to) == l.from {
            l.to
        } else {
            l.from
        };
        z[child - 1] = l.r + pf.kappa * l.x;
    }
    ScaledImpedanceVector::new(z)
}

/// `Z = C⁻¹ diag(z) C⁻ᵀ`, returned in natural node labelling (row `i - 1`
/// for node `i`).
pub fn equivalent_impedance(tree: &TreeTopology, z: &ScaledImpedanceVector) -> Result<DMatrix<f64>> {
    let n = tree.n();
    if z.len() != n {
        return Err(Error::dim(n, z.len()));
    }
    let cinv = tree_incidence_inverse(tree);
    let cinv_f = cinv.matrix.map(|v| v as f64);
    let dz = DVector::from_iterator(n, cinv.order.iter().map(|&node| z.as_slice()[node - 1]));
    let zp = &cinv_f * DMatrix::from_diagonal(&dz) * cinv_f.transpose();
    let mut out = DMatrix::zeros(n, n);
    for (r, &a) in cinv.order.iter().enumerate() {
        for (c, &b) in cinv.order.iter().enumerate() {
            out[(a - 1, b - 1)] = zp[(r, c)];
        }
    }
    Ok(out)
}

/// Column `t` of the result is `1 + Z p_t`.
pub fn voltages_from_injections(z: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !z.is_square() || z.ncols() != p.nrows() {
        return Err(Error::dim(
            format!("{}x{} impedance matching {} injection rows", z.nrows(), z.nrows(), p.nrows()),
            format!("{}x{}", z.nrows(), z.ncols()),
        ));
    }
    Ok((z * p).add_scalar(1.0))
}

/// `w⋆` over the complete graph: `1/z` on tree lines, zero elsewhere.
pub fn ground_truth_parameters(tree: &TreeTopology, z: &ScaledImpedanceVector) -> Result<LineParameterVector> {
    let n = tree.n();
    if z.len() != n {
        return Err(Error::dim(n, z.len()));
    }
    let mut w = LineParameterVector::zeros(n);
    for (e, zk) in tree.edges().iter().zip(z.as_slice()) {
        w.as_mut_slice()[e.k] = 1.0 / zk;
    }
    Ok(w)
}
