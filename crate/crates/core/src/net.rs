//! Symmetric, row-stochastic interaction networks.
//!
//! A [`Network`] holds the matrix of meeting probabilities `g_ij`. Every
//! constructor returns a matrix that is symmetric, has unit row sums and a
//! zero diagonal; arbitrary weighted graphs are brought into that class by
//! symmetric Sinkhorn scaling.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const ROW_SUM_TOL: f64 = 1e-10;
pub const DIAGONAL_TOL: f64 = 1e-12;

pub const SINKHORN_MAX_ITERS: usize = 10_000;
pub const SINKHORN_TOL: f64 = 1e-10;
const POLISH_TOL: f64 = 4.0 * f64::EPSILON;
const POLISH_ITERS: usize = 200;

const MAX_RESAMPLES: usize = 10_000;

/// One violated network invariant, reported at its worst offender.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotSquare { rows: usize, cols: usize },
    Empty,
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize, value: f64 },
    Asymmetric { i: usize, j: usize, residual: f64 },
    RowSum { rows: Vec<usize>, worst_row: usize, residual: f64 },
    Diagonal { i: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Violation::Empty => write!(f, "network has no nodes"),
            Violation::NonFinite { i, j } => write!(f, "entry ({i}, {j}) is not finite"),
            Violation::Negative { i, j, value } => write!(f, "entry ({i}, {j}) is negative ({value})"),
            Violation::Asymmetric { i, j, residual } => {
                write!(f, "asymmetric at ({i}, {j}), residual {residual:e}")
            }
            Violation::RowSum { rows, worst_row, residual } => write!(
                f,
                "row sums differ from 1 in rows {rows:?} (worst row {worst_row}, residual {residual:e})"
            ),
            Violation::Diagonal { i, value } => write!(f, "diagonal entry ({i}, {i}) is {value}"),
        }
    }
}

/// Checks a raw weight matrix against the network invariants. Empty iff valid.
pub fn validate(weights: &DMatrix<f64>) -> Vec<Violation> {
    let (rows, cols) = weights.shape();
    if rows != cols {
        return vec![Violation::NotSquare { rows, cols }];
    }
    if rows == 0 {
        return vec![Violation::Empty];
    }
    let n = rows;
    let mut out = Vec::new();

    if let Some((i, j)) = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| !weights[(i, j)].is_finite())
    {
        // Nothing else is meaningful on non-finite input.
        return vec![Violation::NonFinite { i, j }];
    }

    let mut most_negative: Option<(usize, usize, f64)> = None;
    let mut worst_asym: Option<(usize, usize, f64)> = None;
    let mut worst_diag: Option<(usize, f64)> = None;
    for i in 0..n {
        for j in 0..n {
            let w = weights[(i, j)];
            if w < 0.0 && most_negative.is_none_or(|(_, _, v)| w < v) {
                most_negative = Some((i, j, w));
            }
            if j > i {
                let r = (w - weights[(j, i)]).abs();
                if r > SYMMETRY_TOL && worst_asym.is_none_or(|(_, _, v)| r > v) {
                    worst_asym = Some((i, j, r));
                }
            }
        }
        let d = weights[(i, i)];
        if d.abs() > DIAGONAL_TOL && worst_diag.is_none_or(|(_, v)| d.abs() > v.abs()) {
            worst_diag = Some((i, d));
        }
    }
    if let Some((i, j, value)) = most_negative {
        out.push(Violation::Negative { i, j, value });
    }
    if let Some((i, j, residual)) = worst_asym {
        out.push(Violation::Asymmetric { i, j, residual });
    }

    let mut bad_rows = Vec::new();
    let mut worst: Option<(usize, f64)> = None;
    for i in 0..n {
        let r = (weights.row(i).sum() - 1.0).abs();
        if r > ROW_SUM_TOL {
            bad_rows.push(i);
            if worst.is_none_or(|(_, v)| r > v) {
                worst = Some((i, r));
            }
        }
    }
    if let Some((worst_row, residual)) = worst {
        out.push(Violation::RowSum {
            rows: bad_rows,
            worst_row,
            residual,
        });
    }
    if let Some((i, value)) = worst_diag {
        out.push(Violation::Diagonal { i, value });
    }
    out
}

/// Symmetric, row-stochastic matrix of meeting probabilities with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    weights: DMatrix<f64>,
}

impl Network {
    /// Wraps a matrix that already satisfies every invariant.
    pub fn from_matrix(weights: DMatrix<f64>) -> Result<Self> {
        let violations = validate(&weights);
        if violations.is_empty() {
            Ok(Self { weights })
        } else {
            Err(Error::InvalidNetwork(violations))
        }
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Undirected edges `(i, j, w)` with `i < j` and `w > 0`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(&self.weights)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| self.weights[(i, j)] > 0.0).collect())
            .collect();
        connected(&adj)
    }
}

/// The `n`-cycle with weight 1/2 on each of a node's two neighbors.
pub fn make_circle(n: usize) -> Result<Network> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("a circle needs at least 3 nodes, got {n}")));
    }
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let next = (i + 1) % n;
        w[(i, next)] = 0.5;
        w[(next, i)] = 0.5;
    }
    Ok(Network { weights: w })
}

/// Builds a network from undirected weighted edges and scales it to be
/// doubly stochastic.
pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Network> {
    if n == 0 {
        return Err(Error::InvalidSize("a network needs at least one node".into()));
    }
    let mut seen = HashSet::with_capacity(edges.len());
    let mut w = DMatrix::zeros(n, n);
    for &(i, j, weight) in edges {
        if i >= n || j >= n {
            return Err(Error::InvalidEdge {
                i,
                j,
                reason: format!("endpoint out of range for {n} nodes"),
            });
        }
        if i == j {
            return Err(Error::InvalidEdge { i, j, reason: "self-loop".into() });
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidEdge {
                i,
                j,
                reason: format!("weight must be positive and finite, got {weight}"),
            });
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(Error::InvalidEdge { i, j, reason: "duplicate undirected edge".into() });
        }
        w[(i, j)] = weight;
        w[(j, i)] = weight;
    }
    sinkhorn_symmetric(&mut w, SINKHORN_MAX_ITERS, SINKHORN_TOL, |_, _| {})?;
    Network::from_matrix(w)
}

/// Symmetric Sinkhorn scaling `A ← D^{-1/2} A D^{-1/2}` until every row sum is
/// within `tol` of 1. Returns the number of scaling steps applied.
///
/// Only the upper triangle is computed and then mirrored, so the iterate is
/// exactly symmetric after every step. `observe` sees each iterate.
pub(crate) fn sinkhorn_symmetric(
    a: &mut DMatrix<f64>,
    max_iters: usize,
    tol: f64,
    mut observe: impl FnMut(usize, &DMatrix<f64>),
) -> Result<usize> {
    let n = a.nrows();
    let mut scale = vec![0.0; n];
    let mut residual = f64::INFINITY;
    // Once within `tol`, keep scaling while it still helps so the constant
    // vector is an eigenvector to near machine precision.
    let mut reached: Option<(usize, f64)> = None;
    for it in 0..=max_iters {
        residual = 0.0;
        for i in 0..n {
            let r = a.row(i).sum();
            if r <= 0.0 {
                return Err(Error::NormalizationImpossible { node: i });
            }
            residual = f64::max(residual, (r - 1.0).abs());
            scale[i] = 1.0 / r.sqrt();
        }
        if let Some((first, prev)) = reached {
            if residual >= prev || residual <= POLISH_TOL || it - first >= POLISH_ITERS {
                return Ok(it);
            }
            reached = Some((first, residual));
        } else if residual <= tol {
            reached = Some((it, residual));
        }
        if it == max_iters {
            if reached.is_some() {
                return Ok(it);
            }
            break;
        }
        for i in 0..n {
            for j in i..n {
                let v = a[(i, j)] * (scale[i] * scale[j]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        observe(it + 1, a);
    }
    Err(Error::Convergence {
        what: "symmetric Sinkhorn scaling",
        iterations: max_iters,
        residual,
    })
}

/// Two-or-more-block homophilous network: within-block edges appear with
/// probability `p_in`, cross-block edges with `p_out`. Resamples until the
/// graph is connected and admits a doubly stochastic scaling, then
/// normalizes with unit edge weights.
pub fn make_homophilous_blocks(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> Result<Network> {
    if sizes.is_empty() {
        return Err(Error::InvalidSize("at least one block is required".into()));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s < 2) {
        return Err(Error::InvalidSize(format!("every block needs at least 2 nodes, got {s}")));
    }
    if !(p_in > 0.0 && p_in <= 1.0) || !(0.0..=1.0).contains(&p_out) {
        return Err(Error::InvalidParameter(format!(
            "need p_in in (0, 1] and p_out in [0, 1], got p_in={p_in}, p_out={p_out}"
        )));
    }
    if p_in < p_out {
        return Err(Error::InvalidParameter(format!(
            "homophily requires p_in >= p_out, got p_in={p_in}, p_out={p_out}"
        )));
    }
    let n: usize = sizes.iter().sum();
    let block: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLES {
        let mut edges = Vec::new();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let p = if block[i] == block[j] { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    edges.push((i, j, 1.0));
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        // A degree-1 node forces its only edge to weight 1, which no
        // scaling can reconcile with the neighbor's other edges.
        if !connected(&adj) || adj.iter().any(|a| a.len() < 2) {
            continue;
        }
        match from_weighted_edges(n, &edges) {
            Ok(net) => return Ok(net),
            Err(Error::Convergence { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Convergence {
        what: "connected block-graph sampling",
        iterations: MAX_RESAMPLES,
        residual: f64::NAN,
    })
}

/// Random connected network with generic edge weights: each pair is linked
/// with probability `density` and weight drawn uniformly from `[0.1, 1)`.
/// Graphs that cannot be scaled to doubly stochastic form are resampled.
pub fn make_random_weighted(n: usize, density: f64, seed: u64) -> Result<Network> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("need at least 3 nodes, got {n}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!("density must lie in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLES {
        let mut edges = Vec::new();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < density {
                    edges.push((i, j, rng.random_range(0.1..1.0)));
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        if !connected(&adj) || adj.iter().any(|a| a.len() < 2) {
            continue;
        }
        match from_weighted_edges(n, &edges) {
            Ok(net) => return Ok(net),
            Err(Error::Convergence { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Convergence {
        what: "random weighted network sampling",
        iterations: MAX_RESAMPLES,
        residual: f64::NAN,
    })
}

fn connected(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(net: &Network, i: usize) -> Vec<f64> {
        net.weights().row(i).iter().copied().collect()
    }

    #[test]
    fn circle_of_four() {
        let net = make_circle(4).unwrap();
        assert_eq!(row(&net, 0), vec![0.0, 0.5, 0.0, 0.5]);
        assert_eq!(row(&net, 1), vec![0.5, 0.0, 0.5, 0.0]);
        assert_eq!(row(&net, 2), vec![0.0, 0.5, 0.0, 0.5]);
        assert_eq!(row(&net, 3), vec![0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn circle_of_three_is_complete() {
        let net = make_circle(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(net.weight(i, j), if i == j { 0.0 } else { 0.5 });
            }
        }
    }

    #[test]
    fn large_circle_is_valid() {
        assert!(make_circle(100).unwrap().validate().is_empty());
    }

    #[test]
    fn circle_rejects_small_sizes() {
        assert!(matches!(make_circle(2), Err(Error::InvalidSize(_))));
        assert!(matches!(make_circle(0), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn cycle_edges_match_circle() {
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)];
        let net = from_weighted_edges(4, &edges).unwrap();
        assert!((net.weights() - make_circle(4).unwrap().weights()).amax() < 1e-15);
    }

    #[test]
    fn triangle_edges() {
        let net = from_weighted_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 0.5 };
                assert!((net.weight(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn star_cannot_be_normalized() {
        let edges: Vec<_> = (1..5).map(|j| (0, j, 1.0)).collect();
        match from_weighted_edges(5, &edges) {
            Err(Error::Convergence { residual, .. }) => assert!(residual > SINKHORN_TOL),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn isolated_node_is_impossible() {
        let err = from_weighted_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NormalizationImpossible { node: 3 }));
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(
            from_weighted_edges(3, &[(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::InvalidEdge { .. })
        ));
        assert!(matches!(from_weighted_edges(3, &[(0, 0, 1.0)]), Err(Error::InvalidEdge { .. })));
        assert!(matches!(from_weighted_edges(3, &[(0, 3, 1.0)]), Err(Error::InvalidEdge { .. })));
        assert!(matches!(from_weighted_edges(3, &[(0, 1, -1.0)]), Err(Error::InvalidEdge { .. })));
        assert!(matches!(from_weighted_edges(3, &[(0, 1, 0.0)]), Err(Error::InvalidEdge { .. })));
    }

    #[test]
    fn sinkhorn_iterates_are_exactly_symmetric() {
        let net = make_random_weighted(9, 0.7, 3).unwrap();
        let mut raw = net.weights().map(|w| if w > 0.0 { w * (1.0 + w) } else { 0.0 });
        let mut steps = 0;
        sinkhorn_symmetric(&mut raw, SINKHORN_MAX_ITERS, SINKHORN_TOL, |_, a| {
            steps += 1;
            assert_eq!(a, &a.transpose());
        })
        .unwrap();
        assert!(steps > 0);
        assert!(validate(&raw).is_empty());
    }

    #[test]
    fn renormalizing_a_valid_network_changes_nothing() {
        for net in [make_circle(7).unwrap(), make_random_weighted(8, 0.6, 11).unwrap()] {
            let again = from_weighted_edges(net.n(), &net.edges()).unwrap();
            let diff = (again.weights() - net.weights()).abs().max();
            assert!(diff <= 1e-10, "diff {diff}");
        }
    }

    #[test]
    fn validate_reports_asymmetry() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 0.6;
        m[(1, 0)] = 0.4;
        let v = validate(&m);
        let asym = v
            .iter()
            .find_map(|x| match x {
                Violation::Asymmetric { i, j, residual } => Some((*i, *j, *residual)),
                _ => None,
            })
            .expect("asymmetry reported");
        assert_eq!((asym.0, asym.1), (0, 1));
        assert!((asym.2 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn validate_reports_row_sums() {
        let mut m = make_circle(4).unwrap().weights().clone();
        m[(2, 1)] = 0.45;
        m[(2, 3)] = 0.45;
        m[(1, 2)] = 0.45;
        m[(3, 2)] = 0.45;
        let v = validate(&m);
        let rows = v
            .iter()
            .find_map(|x| match x {
                Violation::RowSum { rows, .. } => Some(rows.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!(rows, vec![1, 2, 3]);
        assert!(validate(make_circle(6).unwrap().weights()).is_empty());
    }

    #[test]
    fn validate_reports_diagonal_and_negative() {
        let mut m = DMatrix::from_element(2, 2, 0.5);
        let v = validate(&m);
        assert!(v.iter().any(|x| matches!(x, Violation::Diagonal { .. })));
        m[(0, 1)] = -0.5;
        assert!(validate(&m).iter().any(|x| matches!(x, Violation::Negative { i: 0, j: 1, .. })));
        assert_eq!(validate(&DMatrix::zeros(2, 3)), vec![Violation::NotSquare { rows: 2, cols: 3 }]);
    }

    #[test]
    fn blocks_are_deterministic_and_valid() {
        let a = make_homophilous_blocks(&[20, 20], 0.5, 0.01, 7).unwrap();
        let b = make_homophilous_blocks(&[20, 20], 0.5, 0.01, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.validate().is_empty());
        assert!(a.is_connected());
    }

    #[test]
    fn complete_blocks() {
        let net = make_homophilous_blocks(&[5, 5], 1.0, 1.0, 0).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let expected = if i == j { 0.0 } else { 1.0 / 9.0 };
                assert!((net.weight(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn block_parameter_errors() {
        assert!(make_homophilous_blocks(&[1, 5], 0.5, 0.1, 0).is_err());
        assert!(make_homophilous_blocks(&[5, 5], 0.1, 0.5, 0).is_err());
        assert!(make_homophilous_blocks(&[5, 5], 0.0, 0.0, 0).is_err());
        assert!(make_homophilous_blocks(&[], 0.5, 0.1, 0).is_err());
    }

    #[test]
    fn random_weighted_is_valid() {
        for seed in 0..20 {
            let net = make_random_weighted(3 + (seed as usize % 10), 0.6, seed).unwrap();
            assert!(net.validate().is_empty());
            assert!(net.is_connected());
        }
    }
}
