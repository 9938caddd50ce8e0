//! Spectral scalar functions and disagreement statistics.
//!
//! With `f̲ = Uᵀ f` and `a* = a*(f)`:
//!
//! ```text
//! welfare                    Σ_ℓ ζ(λ_ℓ) f̲_ℓ²
//! covariance of neighbors    (1/n) ⟨a*, G a*⟩        = Σ_ℓ η(λ_ℓ) f̲_ℓ²
//! covariance of random pair  −(1/n²) ⟨a*, a*⟩        = Σ_ℓ ν(λ_ℓ) f̲_ℓ²
//! ```
//!
//! Each statistic is available in a direct form (over the network) and a
//! spectral form (over the eigenvalues), which are checked against each other.
//! The random-pair covariance uses the `1/n²` normalization; the uniform
//! distribution over ordered pairs `i ≠ j` gives the same value times `n/(n−1)`.

use serde::Serialize;

use crate::equilibrium::{solve_equilibrium, welfare};
use crate::error::{Error, Result};
use crate::net::Network;
use crate::profile::{GameParams, Profile};
use crate::spectral::Spectrum;

/// Welfare weight of a unit-norm ideal-point profile loaded on eigenvalue λ.
pub fn zeta(beta: f64, lambda: f64) -> f64 {
    let d = 1.0 - beta * lambda;
    -beta * (1.0 - beta) * (1.0 - lambda) * (2.0 - beta * (1.0 + lambda)) / (d * d)
}

/// Covariance-of-neighbors weight.
pub fn eta(beta: f64, lambda: f64, n: usize) -> f64 {
    let d = 1.0 - beta * lambda;
    (1.0 - beta).powi(2) * lambda / (d * d * n as f64)
}

/// Covariance-of-random-pair weight.
pub fn nu(beta: f64, lambda: f64, n: usize) -> f64 {
    let d = 1.0 - beta * lambda;
    let n = n as f64;
    -(1.0 - beta).powi(2) / (d * d * n * n)
}

fn spectral_sum(spec: &Spectrum, f: &Profile, weight: impl Fn(f64) -> f64) -> Result<f64> {
    let fbar = spec.to_pc_basis(f)?;
    Ok((0..spec.n())
        .map(|l| weight(spec.eigenvalue(l)) * fbar[l] * fbar[l])
        .sum())
}

/// Equilibrium welfare `Σ ζ(λ_ℓ) f̲_ℓ²`.
pub fn welfare_spectral(spec: &Spectrum, params: &GameParams, f: &Profile) -> Result<f64> {
    let beta = params.beta();
    spectral_sum(spec, f, |l| zeta(beta, l))
}

/// `(1/n) Σ_ij g_ij z_i z_j` for a mean-zero `z`.
pub fn cov_neighbors(net: &Network, z: &Profile) -> Result<f64> {
    z.check_len(net.n())?;
    z.require_mean_zero()?;
    let n = net.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += net.weight(i, j) * z[i] * z[j];
        }
    }
    Ok(s / n as f64)
}

/// Covariance of neighbors of `a*(f)` from the spectrum.
pub fn cov_neighbors_spectral(spec: &Spectrum, params: &GameParams, f: &Profile) -> Result<f64> {
    f.check_len(spec.n())?;
    f.require_mean_zero()?;
    let (beta, n) = (params.beta(), spec.n());
    spectral_sum(spec, f, |l| eta(beta, l, n))
}

/// `(1/n²)(Σ_ij z_i z_j − Σ_i z_i²)` for a mean-zero `z`; the cross sum
/// vanishes, leaving `−‖z‖²/n²`.
pub fn cov_random_pair(z: &Profile) -> Result<f64> {
    z.require_mean_zero()?;
    let n = z.len() as f64;
    Ok(-z.norm_squared() / (n * n))
}

/// Covariance of a random pair of `a*(f)` from the spectrum.
pub fn cov_random_pair_spectral(spec: &Spectrum, params: &GameParams, f: &Profile) -> Result<f64> {
    f.check_len(spec.n())?;
    f.require_mean_zero()?;
    let (beta, n) = (params.beta(), spec.n());
    spectral_sum(spec, f, |l| nu(beta, l, n))
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Relative tolerance for direct-vs-spectral agreement wherever welfare is consumed.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Direct and spectral welfare of the equilibrium at `f`, with an error if
/// they disagree beyond [`CONSISTENCY_TOL`].
///
/// The comparison carries an absolute floor proportional to `‖f‖²·ε` so that
/// welfare values at rounding level (e.g. constant `f`) do not trip it.
pub fn checked_welfare(net: &Network, spec: &Spectrum, params: &GameParams, f: &Profile) -> Result<WelfarePair> {
    let a = solve_equilibrium(net, params, f)?;
    let direct = welfare(net, params, &a, f)?;
    let spectral = welfare_spectral(spec, params, f)?;
    let floor = 1e-14 * (1.0 + f.norm_squared());
    let pair = WelfarePair {
        direct,
        spectral,
        relative_gap: relative_gap(direct, spectral),
    };
    if (direct - spectral).abs() > CONSISTENCY_TOL * direct.abs().max(spectral.abs()) + floor {
        return Err(Error::Inconsistent(format!(
            "welfare direct {direct:e} vs spectral {spectral:e} (relative gap {:e}, beta {}, n {})",
            pair.relative_gap,
            params.beta(),
            net.n()
        )));
    }
    Ok(pair)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WelfarePair {
    pub direct: f64,
    pub spectral: f64,
    pub relative_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentScalars {
    /// 1-based principal-component number.
    pub component: usize,
    pub lambda: f64,
    pub zeta: f64,
    pub eta: f64,
    pub nu: f64,
    pub loading: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StatPair {
    pub direct: f64,
    pub spectral: f64,
    pub relative_gap: f64,
}

impl StatPair {
    fn new(direct: f64, spectral: f64) -> Self {
        Self {
            direct,
            spectral,
            relative_gap: relative_gap(direct, spectral),
        }
    }
}

/// Per-eigenvalue scalars and both forms of every statistic for one profile.
#[derive(Clone, Debug, Serialize)]
pub struct StatsReport {
    pub n: usize,
    pub beta: f64,
    pub components: Vec<ComponentScalars>,
    pub welfare: StatPair,
    pub cov_neighbors: StatPair,
    pub cov_random_pair: StatPair,
}

/// Builds the full statistics report. `f` must be mean-zero.
pub fn report(net: &Network, spec: &Spectrum, params: &GameParams, f: &Profile) -> Result<StatsReport> {
    f.check_len(net.n())?;
    f.require_mean_zero()?;
    let beta = params.beta();
    let n = net.n();
    let fbar = spec.to_pc_basis(f)?;
    let components = (0..n)
        .map(|l| {
            let lambda = spec.eigenvalue(l);
            ComponentScalars {
                component: l + 1,
                lambda,
                zeta: zeta(beta, lambda),
                eta: eta(beta, lambda, n),
                nu: nu(beta, lambda, n),
                loading: fbar[l],
            }
        })
        .collect();
    let a = solve_equilibrium(net, params, f)?;
    let w = checked_welfare(net, spec, params, f)?;
    Ok(StatsReport {
        n,
        beta,
        components,
        welfare: StatPair::new(w.direct, w.spectral),
        cov_neighbors: StatPair::new(cov_neighbors(net, &a)?, cov_neighbors_spectral(spec, params, f)?),
        cov_random_pair: StatPair::new(cov_random_pair(&a)?, cov_random_pair_spectral(spec, params, f)?),
    })
}
