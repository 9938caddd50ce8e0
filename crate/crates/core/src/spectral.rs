//! Eigendecomposition of a network and the principal-component basis.
//!
//! `G = U Λ Uᵀ` with eigenvalues sorted in descending order. Column `ℓ` of `U`
//! is the ℓ-th principal component; [`Spectrum::to_pc_basis`] maps a profile
//! `z` to `Uᵀ z`.
//!
//! The eigensolver is the cyclic Jacobi method. Eigenvectors are sign
//! canonicalized (largest-magnitude entry positive, lowest index on ties) so
//! that per-eigenvector outputs are reproducible.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::net::Network;
use crate::profile::Profile;

pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius threshold, multiplied by `n`.
pub const JACOBI_TOL: f64 = 1e-12;

/// Entries within this of the largest magnitude count as tied for sign
/// canonicalization.
const SIGN_TIE_TOL: f64 = 1e-12;
/// Eigenvalues within this of the top eigenvalue share its eigenspace.
const TOP_CLUSTER_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Spectrum in its JSON export layout.
#[derive(Serialize)]
pub struct SpectrumExport {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[ℓ]` is `u^{ℓ+1}`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `U`, one eigenvector per column.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// λ of the 0-based component `l` (λ_1 is `eigenvalue(0)`).
    pub fn eigenvalue(&self, l: usize) -> f64 {
        self.eigenvalues[l]
    }

    pub fn eigenvector(&self, l: usize) -> Profile {
        Profile::from_vector(self.eigenvectors.column(l).into_owned())
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .as_slice()
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// True iff every consecutive eigenvalue gap exceeds `tol`.
    pub fn check_distinct(&self, tol: f64) -> bool {
        self.min_gap() > tol
    }

    /// Indices of components whose eigenvalue is within `tol` of a neighbor's.
    pub fn degenerate_components(&self, tol: f64) -> Vec<usize> {
        let n = self.n();
        (0..n)
            .filter(|&l| {
                (l > 0 && self.eigenvalues[l - 1] - self.eigenvalues[l] <= tol)
                    || (l + 1 < n && self.eigenvalues[l] - self.eigenvalues[l + 1] <= tol)
            })
            .collect()
    }

    /// `Uᵀ z`.
    pub fn to_pc_basis(&self, z: &Profile) -> Result<Profile> {
        z.check_len(self.n())?;
        Ok(Profile::from_vector(self.eigenvectors.tr_mul(z.vector())))
    }

    /// `U zbar`.
    pub fn from_pc_basis(&self, zbar: &Profile) -> Result<Profile> {
        zbar.check_len(self.n())?;
        Ok(Profile::from_vector(&self.eigenvectors * zbar.vector()))
    }

    /// `U Λ Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.n(), self.n(), |i, j| {
            self.eigenvectors[(i, j)] * self.eigenvalues[j]
        });
        scaled * self.eigenvectors.transpose()
    }

    pub fn export(&self) -> SpectrumExport {
        SpectrumExport {
            eigenvalues: self.eigenvalues.iter().copied().collect(),
            eigenvectors: self
                .eigenvectors
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
        }
    }
}

/// Eigendecomposition of `net`'s weight matrix.
pub fn decompose(net: &Network) -> Result<Spectrum> {
    let n = net.n();
    let (values, vectors) = jacobi_eigen(net.weights())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| values[k]));
    let mut eigenvectors = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);

    align_top_eigenspace(&eigenvalues, &mut eigenvectors);
    for mut col in eigenvectors.column_iter_mut() {
        let max = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let lead = col
            .iter()
            .position(|v| v.abs() >= max - SIGN_TIE_TOL)
            .unwrap_or(0);
        if col[lead] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// When λ = 1 has multiplicity above one (a disconnected network), rotate
/// its eigenspace so that the first vector is the constant vector.
fn align_top_eigenspace(values: &DVector<f64>, vectors: &mut DMatrix<f64>) {
    let n = values.len();
    if n == 0 || (values[0] - 1.0).abs() > TOP_CLUSTER_TOL {
        return;
    }
    let k = values
        .iter()
        .take_while(|&&v| (v - values[0]).abs() <= TOP_CLUSTER_TOL)
        .count();
    if k < 2 {
        return;
    }
    let mut candidates = vec![DVector::from_element(n, 1.0 / (n as f64).sqrt())];
    candidates.extend((0..k).map(|j| vectors.column(j).into_owned()));

    // Modified Gram-Schmidt starting from the constant vector; the one
    // eigenvector it makes redundant collapses and is skipped.
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    for mut v in candidates {
        if basis.len() == k {
            break;
        }
        for b in &basis {
            let p = b.dot(&v);
            v.axpy(-p, b, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / norm);
        }
    }
    for (j, v) in basis.into_iter().enumerate() {
        vectors.set_column(j, &v);
    }
}

/// Cyclic Jacobi eigenvalue iteration on a symmetric matrix.
///
/// Returns the (unsorted) eigenvalues and the matrix whose columns are the
/// matching eigenvectors. Works on a row-major copy for speed.
pub(crate) fn jacobi_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let mut a: Vec<f64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = JACOBI_TOL * n as f64;

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut off = off_norm(&a);
    let mut sweeps = 0;
    while off > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence {
                what: "cyclic Jacobi eigensolver",
                iterations: sweeps,
                residual: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A ← A J
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                // A ← Jᵀ A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                // V ← V J
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        off = off_norm(&a);
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Ok((values, DMatrix::from_row_slice(n, n, &v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{make_circle, make_homophilous_blocks, make_random_weighted};
    use std::f64::consts::PI;

    fn complete(n: usize) -> Network {
        let w = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 / (n as f64 - 1.0) });
        Network::from_matrix(w).unwrap()
    }

    fn assert_invariants(net: &Network, s: &Spectrum) {
        let n = net.n();
        assert!((s.eigenvalue(0) - 1.0).abs() <= 1e-9);
        let c = 1.0 / (n as f64).sqrt();
        for i in 0..n {
            assert!((s.eigenvectors()[(i, 0)] - c).abs() <= 1e-8);
        }
        let gram = s.eigenvectors().tr_mul(s.eigenvectors());
        assert!((gram - DMatrix::identity(n, n)).abs().max() <= 1e-9);
        for l in 0..n {
            let u = s.eigenvector(l);
            let r = (net.weights() * u.vector() - u.vector() * s.eigenvalue(l)).norm();
            assert!(r <= 1e-8, "residual {r} at component {l}");
            assert!(s.eigenvalue(l).abs() <= 1.0 + 1e-9);
            let max = u.max_abs();
            let lead = u.iter().position(|v| v.abs() >= max - SIGN_TIE_TOL).unwrap();
            assert!(u[lead] > 0.0);
        }
        for w in s.eigenvalues().as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!((s.reconstruct() - net.weights()).abs().max() <= 1e-8);
        assert!(s.eigenvalues().sum().abs() <= 1e-8);
    }

    #[test]
    fn circle_four_spectrum() {
        let net = make_circle(4).unwrap();
        let s = decompose(&net).unwrap();
        let expected = [1.0, 0.0, 0.0, -1.0];
        for (l, e) in expected.iter().enumerate() {
            assert!((s.eigenvalue(l) - e).abs() < 1e-12);
        }
        let last = s.eigenvector(3);
        let alt = [0.5, -0.5, 0.5, -0.5];
        for i in 0..4 {
            assert!((last[i] - alt[i]).abs() < 1e-12);
        }
        assert_invariants(&net, &s);
        assert!(!s.check_distinct(1e-8));
    }

    #[test]
    fn circle_spectrum_matches_cosines() {
        for n in [5, 6, 9, 20] {
            let net = make_circle(n).unwrap();
            let s = decompose(&net).unwrap();
            let mut expected: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).cos()).collect();
            expected.sort_by(|a, b| b.total_cmp(a));
            for l in 0..n {
                assert!((s.eigenvalue(l) - expected[l]).abs() < 1e-10);
            }
            assert_invariants(&net, &s);
            assert!(!s.check_distinct(1e-8));
        }
    }

    #[test]
    fn complete_graph_spectrum() {
        let net = complete(4);
        let s = decompose(&net).unwrap();
        assert!((s.eigenvalue(0) - 1.0).abs() < 1e-12);
        for l in 1..4 {
            assert!((s.eigenvalue(l) + 1.0 / 3.0).abs() < 1e-12);
        }
        assert_invariants(&net, &s);
    }

    #[test]
    fn block_and_random_networks() {
        let blocks = make_homophilous_blocks(&[20, 20], 0.5, 0.01, 3).unwrap();
        let s = decompose(&blocks).unwrap();
        assert_invariants(&blocks, &s);
        assert!(s.eigenvalue(1) > s.eigenvalue(2));
        assert!(s.eigenvalue(1) > 0.5);

        let complete_blocks = make_homophilous_blocks(&[5, 5], 1.0, 1.0, 0).unwrap();
        let s = decompose(&complete_blocks).unwrap();
        assert!((s.eigenvalue(1) + 1.0 / 9.0).abs() < 1e-12);
        assert!((s.eigenvalue(9) + 1.0 / 9.0).abs() < 1e-12);

        for seed in 0..10 {
            let net = make_random_weighted(8, 0.7, seed).unwrap();
            let s = decompose(&net).unwrap();
            assert_invariants(&net, &s);
            assert!(s.check_distinct(1e-8));
        }
    }

    #[test]
    fn disconnected_network_keeps_constant_first_component() {
        // Two triangles: λ = 1 twice.
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)];
        let net = crate::net::from_weighted_edges(6, &edges).unwrap();
        let s = decompose(&net).unwrap();
        assert!((s.eigenvalue(1) - 1.0).abs() < 1e-12);
        assert_invariants(&net, &s);
        let u2 = s.eigenvector(1);
        assert!(u2.sum().abs() < 1e-12);
    }

    #[test]
    fn decomposition_is_deterministic() {
        let net = make_random_weighted(12, 0.5, 5).unwrap();
        assert_eq!(decompose(&net).unwrap(), decompose(&net).unwrap());
    }

    #[test]
    fn basis_transforms() {
        let net = make_random_weighted(6, 0.8, 2).unwrap();
        let s = decompose(&net).unwrap();
        for l in 0..6 {
            let e = s.to_pc_basis(&s.eigenvector(l)).unwrap();
            assert!((e.vector() - Profile::basis(6, l).vector()).abs().max() < 1e-12);
        }
        let ones = s.to_pc_basis(&Profile::constant(6, 1.0)).unwrap();
        assert!((ones[0] - 6f64.sqrt()).abs() < 1e-12);
        assert!(ones.iter().skip(1).all(|v| v.abs() < 1e-12));

        let back = s.from_pc_basis(&Profile::basis(6, 5)).unwrap();
        assert!((back.vector() - s.eigenvector(5).vector()).abs().max() < 1e-15);
        let mut e1 = Profile::basis(6, 0).into_vector();
        e1 *= 6f64.sqrt();
        let back = s.from_pc_basis(&Profile::from_vector(e1)).unwrap();
        assert!(back.iter().all(|v| (v - 1.0).abs() < 1e-12));

        assert!(matches!(
            s.to_pc_basis(&Profile::zeros(5)),
            Err(Error::LengthMismatch { expected: 6, got: 5 })
        ));
        assert!(s.from_pc_basis(&Profile::zeros(7)).is_err());
    }
}
