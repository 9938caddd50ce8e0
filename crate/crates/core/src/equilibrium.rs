//! Nash equilibrium of the coordination game, payoffs and utilitarian welfare.
//!
//! Agent `i` meets `j` with probability `g_ij` and earns
//! `−β(a_i − a_j)² − (1 − β)(a_i − f_i)²` from the meeting. The unique
//! equilibrium solves `(I − βG) a* = (1 − β) f`.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::net::Network;
use crate::profile::{GameParams, Profile};
use crate::spectral::Spectrum;

/// Pivots below this magnitude are reported as singular.
pub const MIN_PIVOT: f64 = 1e-14;

/// LU factorization of `I − βG`, reusable across many ideal-point profiles.
pub struct EquilibriumSolver {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    beta: f64,
    n: usize,
}

impl EquilibriumSolver {
    pub fn new(net: &Network, params: &GameParams) -> Result<Self> {
        let n = net.n();
        let beta = params.beta();
        let system = DMatrix::identity(n, n) - net.weights() * beta;
        let lu = system.lu();
        let pivot = lu
            .u()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if pivot < MIN_PIVOT {
            return Err(Error::Singular { pivot });
        }
        Ok(Self { lu, beta, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(I − βG)⁻¹ v`.
    pub fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        self.lu
            .solve(v)
            .expect("factorization was checked to be nonsingular")
    }

    /// Equilibrium actions for ideal points `f`.
    pub fn solve(&self, f: &Profile) -> Result<Profile> {
        f.check_len(self.n)?;
        let rhs = f.vector() * (1.0 - self.beta);
        Ok(Profile::from_vector(self.apply_inverse(&rhs)))
    }
}

/// `a* = (1 − β)(I − βG)⁻¹ f` by LU with partial pivoting.
pub fn solve_equilibrium(net: &Network, params: &GameParams, f: &Profile) -> Result<Profile> {
    EquilibriumSolver::new(net, params)?.solve(f)
}

/// `‖(I − βG) a − (1 − β) f‖_∞`.
pub fn equilibrium_residual(net: &Network, params: &GameParams, a: &Profile, f: &Profile) -> f64 {
    let beta = params.beta();
    let lhs = a.vector() - (net.weights() * a.vector()) * beta;
    (lhs - f.vector() * (1.0 - beta)).amax()
}

/// Truncated series `Σ_t (1 − β) βᵗ Gᵗ f`, stopped once the tail bound
/// `β^{T+1} ‖f‖_∞` drops below `tol`.
pub fn solve_equilibrium_neumann(
    net: &Network,
    params: &GameParams,
    f: &Profile,
    tol: f64,
) -> Result<Profile> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    f.check_len(net.n())?;
    let beta = params.beta();
    let scale = f.max_abs();
    let mut term = f.vector().clone();
    let mut sum = &term * (1.0 - beta);
    let mut weight = 1.0 - beta;
    let mut tail = beta * scale;
    while tail >= tol {
        term = net.weights() * term;
        weight *= beta;
        sum.axpy(weight, &term, 1.0);
        tail *= beta;
    }
    Ok(Profile::from_vector(sum))
}

/// Equilibrium in the principal-component basis: each component of `fbar` is
/// attenuated by `(1 − β) / (1 − βλ_ℓ)`.
pub fn equilibrium_pc(spec: &Spectrum, params: &GameParams, fbar: &Profile) -> Result<Profile> {
    fbar.check_len(spec.n())?;
    let beta = params.beta();
    Ok(Profile::from_vector(DVector::from_fn(spec.n(), |l, _| {
        attenuation(beta, spec.eigenvalue(l)) * fbar[l]
    })))
}

/// `(1 − β) / (1 − βλ)`.
pub fn attenuation(beta: f64, lambda: f64) -> f64 {
    (1.0 - beta) / (1.0 - beta * lambda)
}

/// Expected payoff of agent `i` at actions `a` and ideal points `f`.
pub fn agent_payoff(net: &Network, params: &GameParams, a: &Profile, f: &Profile, i: usize) -> Result<f64> {
    let n = net.n();
    a.check_len(n)?;
    f.check_len(n)?;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    Ok(payoff_unchecked(net, params.beta(), a, f, i))
}

fn payoff_unchecked(net: &Network, beta: f64, a: &Profile, f: &Profile, i: usize) -> f64 {
    let own = (1.0 - beta) * (a[i] - f[i]).powi(2);
    (0..net.n())
        .map(|j| {
            let g = net.weight(i, j);
            if g == 0.0 {
                0.0
            } else {
                g * (-beta * (a[i] - a[j]).powi(2) - own)
            }
        })
        .sum()
}

/// Utilitarian welfare `Σ_i V_i`, summed directly from the payoffs.
pub fn welfare(net: &Network, params: &GameParams, a: &Profile, f: &Profile) -> Result<f64> {
    let n = net.n();
    a.check_len(n)?;
    f.check_len(n)?;
    Ok((0..n).map(|i| payoff_unchecked(net, params.beta(), a, f, i)).sum())
}
