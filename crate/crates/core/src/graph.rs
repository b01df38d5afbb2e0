//! Complete-graph edge indexing, incidence matrices, Laplacians and
//! spanning-tree utilities.
//!
//! Nodes are labelled `0..=n` with node 0 the slack. Edges of the complete
//! graph `K_{n+1}` are ordered lexicographically by `(i, j)` with `i < j`,
//! which fixes the layout of every [`LineParameterVector`].

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use petgraph::unionfind::UnionFind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Entries below this magnitude are treated as absent lines.
pub const DEFAULT_TOL_ZERO: f64 = 1e-8;
/// Algebraic connectivity at or below this value counts as disconnected.
pub const DEFAULT_TOL_LAMBDA: f64 = 1e-10;

/// An edge `(i, j)` of `K_{n+1}` together with its lexicographic rank `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId {
    pub i: NodeId,
    pub j: NodeId,
    pub k: usize,
}

/// Number of edges of the complete graph on `n + 1` nodes.
pub fn num_edges(n: usize) -> usize {
    n * (n + 1) / 2
}

pub fn edge_index(i: NodeId, j: NodeId, n: usize) -> Result<EdgeId> {
    if i >= j || j > n {
        return Err(Error::InvalidEdge { i, j, n });
    }
    let nodes = n + 1;
    let k = i * nodes - i * (i + 1) / 2 + (j - i - 1);
    Ok(EdgeId { i, j, k })
}

pub fn edge_pair(k: usize, n: usize) -> Result<EdgeId> {
    if k >= num_edges(n) {
        return Err(Error::Domain(format!(
            "edge index {k} out of range for n = {n}"
        )));
    }
    let mut rest = k;
    let mut i = 0;
    loop {
        let row = n - i;
        if rest < row {
            return Ok(EdgeId {
                i,
                j: i + 1 + rest,
                k,
            });
        }
        rest -= row;
        i += 1;
    }
}

/// All edges of `K_{n+1}` in rank order.
pub fn complete_edges(n: usize) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::with_capacity(num_edges(n));
    for i in 0..=n {
        for j in (i + 1)..=n {
            out.push((i, j));
        }
    }
    out
}

/// Line parameters (admittances) indexed by the edges of `K_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineParameterVector {
    n: usize,
    values: Vec<f64>,
}

impl LineParameterVector {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_edges(n) {
            return Err(Error::dim(
                format!("{} line parameters for n = {n}", num_edges(n)),
                values.len(),
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "line parameter {pos} is not finite"
            )));
        }
        Ok(Self { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; num_edges(n)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> Result<f64> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        Ok(self.values[edge_index(a, b, self.n)?.k])
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Edges whose magnitude exceeds `tol_zero`.
    pub fn support(&self, tol_zero: f64) -> Vec<EdgeId> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > tol_zero)
            .map(|(k, _)| edge_pair(k, self.n).expect("index in range"))
            .collect()
    }
}

/// Incidence matrix with rows indexed by edges and columns by nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    entries: DMatrix<i32>,
    slack_dropped: bool,
}

impl IncidenceMatrix {
    pub fn entries(&self) -> &DMatrix<i32> {
        &self.entries
    }

    pub fn slack_dropped(&self) -> bool {
        self.slack_dropped
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.entries.map(f64::from)
    }
}

/// Incidence matrix of `K_{n+1}`: row `k` has `+1` at the smaller endpoint
/// and `-1` at the larger. With `drop_slack` the column of node 0 is removed.
pub fn complete_incidence(n: usize, drop_slack: bool) -> Result<IncidenceMatrix> {
    if n < 1 {
        return Err(Error::Domain("complete incidence needs n >= 1".into()));
    }
    let offset = usize::from(drop_slack);
    let mut entries = DMatrix::<i32>::zeros(num_edges(n), n + 1 - offset);
    for (k, (i, j)) in complete_edges(n).into_iter().enumerate() {
        if i >= offset {
            entries[(k, i - offset)] = 1;
        }
        entries[(k, j - offset)] = -1;
    }
    Ok(IncidenceMatrix {
        entries,
        slack_dropped: drop_slack,
    })
}

/// Admittance operator `C̃ᵀ diag(w) C̃`: the weighted Laplacian on all
/// `n + 1` nodes.
pub fn laplacian_from_weights(w: &LineParameterVector) -> DMatrix<f64> {
    let n = w.n();
    let mut y = DMatrix::<f64>::zeros(n + 1, n + 1);
    for ((i, j), &wk) in complete_edges(n).into_iter().zip(w.as_slice()) {
        if wk == 0.0 {
            continue;
        }
        y[(i, i)] += wk;
        y[(j, j)] += wk;
        y[(i, j)] -= wk;
        y[(j, i)] -= wk;
    }
    y
}

/// Laplacian with the slack row and column removed.
pub fn reduced_laplacian(w: &LineParameterVector) -> DMatrix<f64> {
    let full = laplacian_from_weights(w);
    let n = w.n();
    full.view((1, 1), (n, n)).into_owned()
}

/// Second-smallest eigenvalue of a (non-reduced) Laplacian.
pub fn algebraic_connectivity(y: &DMatrix<f64>) -> Result<f64> {
    if !y.is_square() || y.nrows() < 2 {
        return Err(Error::Contract(format!(
            "expected a square matrix of order >= 2, got {}x{}",
            y.nrows(),
            y.ncols()
        )));
    }
    let scale = y.amax().max(1.0);
    let asym = (y - y.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::Contract(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(y.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig[1])
}

/// Membership test for the set of radial networks: exactly `n` lines and a
/// connected Laplacian.
pub fn is_radial(w: &LineParameterVector, tol_zero: f64, tol_lambda: f64) -> bool {
    if w.support(tol_zero).len() != w.n() {
        return false;
    }
    match algebraic_connectivity(&laplacian_from_weights(w)) {
        Ok(lambda2) => lambda2 > tol_lambda,
        Err(_) => false,
    }
}

/// A spanning tree of `K_{n+1}` rooted at the slack node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeTopology {
    /// `parent[i - 1]` is the parent of node `i`.
    parent: Vec<NodeId>,
    /// `edges[i - 1]` joins node `i` to its parent.
    edges: Vec<EdgeId>,
}

impl TreeTopology {
    pub fn from_parents(parent: Vec<NodeId>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidTopology("tree needs at least one line".into()));
        }
        for (idx, &p) in parent.iter().enumerate() {
            let node = idx + 1;
            if p > n || p == node {
                return Err(Error::InvalidTopology(format!(
                    "node {node} has invalid parent {p}"
                )));
            }
        }
        // every node must reach the slack within n steps
        for start in 1..=n {
            let mut cur = start;
            let mut steps = 0;
            while cur != 0 {
                cur = parent[cur - 1];
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidTopology(format!(
                        "node {start} lies on a cycle and does not reach the slack"
                    )));
                }
            }
        }
        let edges = parent
            .iter()
            .enumerate()
            .map(|(idx, &p)| {
                let c = idx + 1;
                edge_index(p.min(c), p.max(c), n)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { parent, edges })
    }

    /// Builds the rooted tree from an undirected edge list over nodes `0..=n`.
    pub fn from_edges(n: usize, lines: &[(NodeId, NodeId)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("tree needs at least one line".into()));
        }
        let mut adj = vec![Vec::new(); n + 1];
        let mut seen = BTreeSet::new();
        for &(a, b) in lines {
            if a == b || a > n || b > n {
                return Err(Error::InvalidTopology(format!("invalid line ({a}, {b})")));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::InvalidTopology(format!(
                    "duplicate line ({}, {}) forms a cycle",
                    key.0, key.1
                )));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut parent = vec![usize::MAX; n + 1];
        parent[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if v == parent[u] && u != 0 {
                    continue;
                }
                if parent[v] != usize::MAX {
                    if v != parent[u] {
                        return Err(Error::InvalidTopology(format!(
                            "lines close a cycle through ({u}, {v})"
                        )));
                    }
                    continue;
                }
                parent[v] = u;
                queue.push_back(v);
            }
        }
        if let Some(orphan) = (1..=n).find(|&v| parent[v] == usize::MAX) {
            return Err(Error::InvalidTopology(format!(
                "node {orphan} is disconnected from the slack"
            )));
        }
        if lines.len() != n {
            return Err(Error::InvalidTopology(format!(
                "expected {n} lines for a spanning tree, got {}",
                lines.len()
            )));
        }
        Self::from_parents(parent[1..].to_vec())
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, node: NodeId) -> NodeId {
        self.parent[node - 1]
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parent
    }

    /// Tree edges; entry `i - 1` joins node `i` to its parent.
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn edge_set(&self) -> BTreeSet<usize> {
        self.edges.iter().map(|e| e.k).collect()
    }

    pub fn children(&self) -> Vec<Vec<NodeId>> {
        let mut ch = vec![Vec::new(); self.n() + 1];
        for (idx, &p) in self.parent.iter().enumerate() {
            ch[p].push(idx + 1);
        }
        ch
    }

    /// Non-slack nodes in depth-first preorder from the slack, children
    /// visited in increasing label order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let children = self.children();
        let mut order = Vec::with_capacity(self.n());
        let mut stack: Vec<NodeId> = children[0].iter().rev().copied().collect();
        while let Some(u) = stack.pop() {
            order.push(u);
            stack.extend(children[u].iter().rev());
        }
        order
    }

    /// Nodes from `node` up to, but excluding, the slack.
    pub fn ancestors_inclusive(&self, node: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = node;
        while cur != 0 {
            out.push(cur);
            cur = self.parent(cur);
        }
        out
    }

    pub fn is_descendant(&self, node: NodeId, of: NodeId) -> bool {
        node != of && self.ancestors_inclusive(node).contains(&of)
    }
}

/// Reduced tree incidence (or its inverse) in depth-first preorder.
///
/// Row and column `r` both refer to node `order[r]`; for the incidence
/// matrix the row is the line joining `order[r]` to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeIncidence {
    pub matrix: DMatrix<i64>,
    pub order: Vec<NodeId>,
}

impl TreeIncidence {
    /// Converts to natural labelling: row/column `i - 1` for node `i`.
    pub fn to_natural_f64(&self) -> DMatrix<f64> {
        let n = self.order.len();
        let mut out = DMatrix::zeros(n, n);
        for (r, &a) in self.order.iter().enumerate() {
            for (c, &b) in self.order.iter().enumerate() {
                out[(a - 1, b - 1)] = self.matrix[(r, c)] as f64;
            }
        }
        out
    }
}

fn positions(order: &[NodeId]) -> Vec<usize> {
    let mut pos = vec![0; order.len() + 1];
    for (r, &v) in order.iter().enumerate() {
        pos[v] = r;
    }
    pos
}

/// Reduced branch-to-node incidence `C`, lines oriented parent → child
/// (`+1` at the parent, `-1` at the child, slack column removed).
pub fn tree_incidence(tree: &TreeTopology) -> TreeIncidence {
    let n = tree.n();
    let order = tree.preorder();
    let pos = positions(&order);
    let mut m = DMatrix::<i64>::zeros(n, n);
    for (r, &child) in order.iter().enumerate() {
        m[(r, pos[child])] = -1;
        let p = tree.parent(child);
        if p != 0 {
            m[(r, pos[p])] = 1;
        }
    }
    TreeIncidence { matrix: m, order }
}

/// `C⁻¹` from descendant sets: entry `(i, j)` is `-1` when `i == j` or `i`
/// descends from `j`. Lower triangular in preorder.
pub fn tree_incidence_inverse(tree: &TreeTopology) -> TreeIncidence {
    let n = tree.n();
    let order = tree.preorder();
    let pos = positions(&order);
    let mut m = DMatrix::<i64>::zeros(n, n);
    for &node in &order {
        for anc in tree.ancestors_inclusive(node) {
            m[(pos[node], pos[anc])] = -1;
        }
    }
    TreeIncidence { matrix: m, order }
}

/// Uniform labelled spanning tree of `K_{n+1}` from a random Prüfer sequence.
pub fn random_spanning_tree(n: usize, seed: u64) -> Result<TreeTopology> {
    if n < 1 {
        return Err(Error::Domain("random tree needs n >= 1".into()));
    }
    let nodes = n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let code: Vec<usize> = (0..nodes - 2).map(|_| rng.random_range(0..nodes)).collect();
    TreeTopology::from_edges(n, &prufer_decode(&code, nodes))
}

fn prufer_decode(code: &[usize], nodes: usize) -> Vec<(NodeId, NodeId)> {
    let mut degree = vec![1usize; nodes];
    for &c in code {
        degree[c] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(nodes - 1);
    for &c in code {
        let leaf = leaves.pop_first().expect("a Prüfer code always leaves a leaf");
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.insert(c);
        }
    }
    let a = leaves.pop_first().expect("two leaves remain");
    let b = leaves.pop_first().expect("two leaves remain");
    edges.push((a, b));
    edges
}

/// Kruskal maximum-score spanning tree of `K_{n+1}`; ties go to the lower
/// edge index.
pub fn max_weight_spanning_tree(scores: &[f64], n: usize) -> Result<TreeTopology> {
    if scores.len() != num_edges(n) {
        return Err(Error::dim(num_edges(n), scores.len()));
    }
    let mut ranked: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps lower indices first among equal scores
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut uf = UnionFind::<usize>::new(n + 1);
    let mut lines = Vec::with_capacity(n);
    for k in ranked {
        let e = edge_pair(k, n)?;
        if uf.union(e.i, e.j) {
            lines.push((e.i, e.j));
            if lines.len() == n {
                break;
            }
        }
    }
    TreeTopology::from_edges(n, &lines)
}
