//! Welfare-optimal and welfare-minimizing interventions on ideal points.
//!
//! A planner with direction γ (+1 benevolent, −1 malevolent) perturbs the
//! status quo `f̂` by `δ` to maximize `γ·V(a*(f̂ + δ))` subject to
//! `‖δ‖² ≤ C`. In the principal-component basis welfare is separable,
//! `V = Σ_ℓ ζ(λ_ℓ)(1 + x_ℓ)² f̲̂_ℓ²` with `δ̲_ℓ = x_ℓ f̲̂_ℓ`, and the KKT
//! stationarity condition `γζ_ℓ(1 + x_ℓ) = μ x_ℓ` gives
//!
//! ```text
//! x_ℓ = γζ_ℓ / (μ − γζ_ℓ)
//! ```
//!
//! with the multiplier `μ` fixed by `Σ_ℓ f̲̂_ℓ² x_ℓ(μ)² = C`. On the bracket
//! `μ > max(0, max_ℓ γζ_ℓ)` every denominator is positive and the budget
//! function is strictly decreasing, so bisection finds the unique root.

use serde::Serialize;

use crate::equilibrium::solve_equilibrium;
use crate::error::{Error, Result};
use crate::net::Network;
use crate::profile::{Direction, GameParams, Profile};
use crate::spectral::Spectrum;
use crate::stats::{checked_welfare, relative_gap, zeta, WelfarePair};

/// Loadings with `|f̲̂_ℓ| ≤ ZERO_LOADING_TOL·‖f̂‖` are treated as absent.
pub const ZERO_LOADING_TOL: f64 = 1e-12;
/// Eigenvalue gap below which components are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Offset added to the lower end of the multiplier bracket.
pub const MU_OFFSET: f64 = 1e-15;
/// Bisection stops once `|budget − C| ≤ BUDGET_TOL·C`, or the bracket
/// cannot be split further.
pub const BUDGET_TOL: f64 = 1e-13;
const BISECTION_MAX_ITERS: usize = 2_000;

/// How the optimization terminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// The budget constraint binds at the returned multiplier.
    BudgetBinding,
    /// Benevolent planner reaches zero miscoordination (`allow_bliss`).
    Bliss,
    /// No welfare-relevant component is loaded; `δ* = 0`.
    NothingToImprove,
    /// Every loaded component has `ζ = 0` (e.g. `β = 0`): welfare is flat and
    /// any feasible `δ` is optimal; `δ* = 0` is returned.
    FlatObjective,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterventionResult {
    pub direction: Direction,
    pub beta: f64,
    pub budget: f64,
    pub outcome: Outcome,
    pub delta_star: Profile,
    pub f_star: Profile,
    pub a_star: Profile,
    /// Per-component relative change `x_ℓ = δ̲_ℓ / f̲̂_ℓ` (0 where undefined).
    pub x: Vec<f64>,
    pub mu: f64,
    pub welfare_before: f64,
    pub welfare_after: f64,
    pub welfare_check_before: WelfarePair,
    pub welfare_check_after: WelfarePair,
    /// `ρ(δ*, u^ℓ)` per component; empty when `δ* = 0`.
    pub similarities: Vec<f64>,
    pub budget_used: f64,
    /// 1-based components with `ℓ ≥ 2` whose status-quo loading is zero.
    pub zero_loaded_components: Vec<usize>,
    /// 1-based components sharing an eigenvalue with a neighbor.
    pub degenerate_components: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Solves the budget-constrained planner problem with quadratic cost `‖δ‖²`.
///
/// For a benevolent planner whose budget covers the whole bliss intervention
/// the call fails with [`Error::BlissFeasible`] unless `allow_bliss` is set, in
/// which case the exact bliss intervention is returned.
pub fn optimal_intervention(
    net: &Network,
    spec: &Spectrum,
    params: &GameParams,
    f_hat: &Profile,
    budget: f64,
    allow_bliss: bool,
) -> Result<InterventionResult> {
    let n = spec.n();
    if net.n() != n {
        return Err(Error::LengthMismatch { expected: n, got: net.n() });
    }
    f_hat.check_len(n)?;
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::InvalidParameter(format!("budget must be positive, got {budget}")));
    }
    let beta = params.beta();
    let gamma = params.gamma().sign();
    let fbar = spec.to_pc_basis(f_hat)?;
    let cutoff = ZERO_LOADING_TOL * f_hat.norm();

    let mut zero_loaded = Vec::new();
    // (component, f̲̂_ℓ, γζ_ℓ) for the components the planner can act on.
    let mut active: Vec<(usize, f64, f64)> = Vec::new();
    for l in 1..n {
        if fbar[l].abs() <= cutoff {
            zero_loaded.push(l + 1);
            continue;
        }
        let gz = gamma * zeta(beta, spec.eigenvalue(l));
        if gz != 0.0 {
            active.push((l, fbar[l], gz));
        }
    }

    let mut warnings = Vec::new();
    let degenerate: Vec<usize> = spec
        .degenerate_components(DEGENERACY_TOL)
        .into_iter()
        .map(|l| l + 1)
        .collect();
    if !degenerate.is_empty() {
        warnings.push(format!(
            "repeated eigenvalues at components {degenerate:?}: per-eigenvector similarities depend on the chosen eigenbasis"
        ));
    }
    if !zero_loaded.is_empty() {
        warnings.push(format!(
            "status quo has no loading on components {zero_loaded:?}; they receive no intervention"
        ));
    }

    let mut x = vec![0.0; n];
    let (outcome, mu) = if active.is_empty() {
        let outcome = match params.gamma() {
            Direction::Benevolent => Outcome::NothingToImprove,
            Direction::Malevolent if f_hat.centered().norm() <= cutoff => Outcome::NothingToImprove,
            Direction::Malevolent => Outcome::FlatObjective,
        };
        (outcome, 0.0)
    } else {
        let bliss_cost: f64 = active.iter().map(|&(_, f, _)| f * f).sum();
        if params.gamma() == Direction::Benevolent && budget >= bliss_cost {
            let mut bliss = vec![0.0; n];
            for &(l, f, _) in &active {
                bliss[l] = -f;
            }
            if !allow_bliss {
                let delta = spec.from_pc_basis(&Profile::from_vector(bliss.into()))?;
                return Err(Error::BlissFeasible {
                    budget,
                    bliss_cost,
                    delta: delta.to_vec(),
                });
            }
            for &(l, _, _) in &active {
                x[l] = -1.0;
            }
            (Outcome::Bliss, 0.0)
        } else {
            let mu = solve_multiplier(&active, budget);
            for &(l, _, gz) in &active {
                x[l] = gz / (mu - gz);
            }
            (Outcome::BudgetBinding, mu)
        }
    };

    let delta_bar: Vec<f64> = (0..n).map(|l| x[l] * fbar[l]).collect();
    let delta_star = spec.from_pc_basis(&Profile::from_vector(delta_bar.into()))?;
    let f_star = Profile::from_vector(f_hat.vector() + delta_star.vector());
    let a_star = solve_equilibrium(net, params, &f_star)?;
    let before = checked_welfare(net, spec, params, f_hat)?;
    let after = checked_welfare(net, spec, params, &f_star)?;

    let similarities = if delta_star.norm() > 0.0 {
        (0..n)
            .map(|l| cosine_similarity(&delta_star, &spec.eigenvector(l)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    Ok(InterventionResult {
        direction: params.gamma(),
        beta,
        budget,
        outcome,
        budget_used: delta_star.norm_squared(),
        delta_star,
        f_star,
        a_star,
        x,
        mu,
        welfare_before: before.direct,
        welfare_after: after.direct,
        welfare_check_before: before,
        welfare_check_after: after,
        similarities,
        zero_loaded_components: zero_loaded,
        degenerate_components: degenerate,
        warnings,
    })
}

/// `Σ f̲̂_ℓ² x_ℓ(μ)²` over the active components.
fn budget_at(active: &[(usize, f64, f64)], mu: f64) -> f64 {
    active
        .iter()
        .map(|&(_, f, gz)| {
            let x = gz / (mu - gz);
            f * f * x * x
        })
        .sum()
}

/// Root of `budget_at(μ) = C` on `(max(0, max γζ) + offset, ∞)`.
fn solve_multiplier(active: &[(usize, f64, f64)], budget: f64) -> f64 {
    let floor = active.iter().fold(0.0_f64, |m, &(_, _, gz)| m.max(gz));
    let mut lo = floor + MU_OFFSET;
    let mut hi = (2.0 * lo).max(1.0);
    while budget_at(active, hi) > budget {
        lo = hi;
        hi *= 2.0;
    }
    let mut best = (hi, (budget_at(active, hi) - budget).abs());
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let b = budget_at(active, mid);
        let err = (b - budget).abs();
        if err < best.1 {
            best = (mid, err);
        }
        if err <= BUDGET_TOL * budget {
            break;
        }
        if b > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.0
}

/// `y·z / (‖y‖‖z‖)`.
pub fn cosine_similarity(y: &Profile, z: &Profile) -> Result<f64> {
    y.check_len(z.len())?;
    let (ny, nz) = (y.norm(), z.norm());
    if ny == 0.0 || nz == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((y.dot(z.vector()) / (ny * nz)).clamp(-1.0, 1.0))
}

/// Optimum of the unit-sphere problem over mean-zero ideal points.
#[derive(Clone, Debug, Serialize)]
pub struct SimpleOptimum {
    pub f_star: Profile,
    /// Welfare attained, `ζ(λ)` of the chosen component.
    pub value: f64,
    /// 1-based component used.
    pub component: usize,
    /// True when the optimizer is not unique (tied eigenvalue or `β = 0`).
    pub degenerate: bool,
}

/// Malevolent: `(u^n, ζ(λ_n))`. Benevolent: `(u^2, ζ(λ_2))`.
pub fn simple_optimal_f(spec: &Spectrum, params: &GameParams) -> Result<SimpleOptimum> {
    let n = spec.n();
    if n < 2 {
        return Err(Error::InvalidSize("the sphere problem needs at least 2 nodes".into()));
    }
    let beta = params.beta();
    let (l, tied) = match params.gamma() {
        Direction::Malevolent => (n - 1, spec.eigenvalue(n - 2) - spec.eigenvalue(n - 1) <= DEGENERACY_TOL),
        Direction::Benevolent => (1, n > 2 && spec.eigenvalue(1) - spec.eigenvalue(2) <= DEGENERACY_TOL),
    };
    Ok(SimpleOptimum {
        f_star: spec.eigenvector(l),
        value: zeta(beta, spec.eigenvalue(l)),
        component: l + 1,
        degenerate: tied || beta == 0.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SimilarityRow {
    pub component: usize,
    pub lambda: f64,
    pub rho_delta: f64,
    pub rho_f_hat: Option<f64>,
    /// `ρ(δ*, u^ℓ) / ρ(f̂, u^ℓ)`, defined for `ℓ ≥ 2` with nonzero status-quo loading.
    pub multiplier: Option<f64>,
}

/// Per-component similarities of `δ*` and `f̂` and their ratio `m_ℓ`.
pub fn similarity_profile(
    result: &InterventionResult,
    spec: &Spectrum,
    f_hat: &Profile,
) -> Result<Vec<SimilarityRow>> {
    let delta = &result.delta_star;
    if delta.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let f_norm = f_hat.norm();
    (0..spec.n())
        .map(|l| {
            let u = spec.eigenvector(l);
            let rho_delta = cosine_similarity(delta, &u)?;
            let rho_f_hat = if f_norm > 0.0 {
                Some(cosine_similarity(f_hat, &u)?)
            } else {
                None
            };
            let multiplier = match rho_f_hat {
                Some(r) if l > 0 && r.abs() > ZERO_LOADING_TOL => Some(rho_delta / r),
                _ => None,
            };
            Ok(SimilarityRow {
                component: l + 1,
                lambda: spec.eigenvalue(l),
                rho_delta,
                rho_f_hat,
                multiplier,
            })
        })
        .collect()
}

/// Limiting direction of the optimal intervention as the budget shrinks:
/// `δ̲_ℓ ∝ γ ζ(λ_ℓ) f̲̂_ℓ`, normalized.
pub fn small_budget_direction(spec: &Spectrum, params: &GameParams, f_hat: &Profile) -> Result<Profile> {
    let fbar = spec.to_pc_basis(f_hat)?;
    let gamma = params.gamma().sign();
    let mut dir = vec![0.0; spec.n()];
    for l in 1..spec.n() {
        dir[l] = gamma * zeta(params.beta(), spec.eigenvalue(l)) * fbar[l];
    }
    let v = spec.from_pc_basis(&Profile::from_vector(dir.into()))?;
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(Profile::from_vector(v.into_vector() / norm))
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioRow {
    pub component: usize,
    pub other: usize,
    pub m_ratio: f64,
    pub zeta_ratio: f64,
    pub relative_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallBudgetTable {
    pub budget: f64,
    pub mu: f64,
    /// Pairs `(ℓ, ℓ')` with `ℓ ≤ ℓ'` among eligible components.
    pub pairs: Vec<RatioRow>,
    /// 1-based components left out (zero loading or `ζ = 0`).
    pub excluded: Vec<usize>,
}

/// Multiplier ratios `m(λ_ℓ)/m(λ_ℓ')` at budget `C` next to their small-budget
/// limits `ζ(λ_ℓ)/ζ(λ_ℓ')`.
pub fn small_budget_ratios(
    net: &Network,
    spec: &Spectrum,
    params: &GameParams,
    f_hat: &Profile,
    budget: f64,
) -> Result<SmallBudgetTable> {
    let result = optimal_intervention(net, spec, params, f_hat, budget, false)?;
    let beta = params.beta();
    let mut eligible = Vec::new();
    let mut excluded = Vec::new();
    let rows = if result.delta_star.norm() > 0.0 {
        similarity_profile(&result, spec, f_hat)?
    } else {
        Vec::new()
    };
    for l in 1..spec.n() {
        let m = rows.get(l).and_then(|r| r.multiplier);
        let z = zeta(beta, spec.eigenvalue(l));
        match m {
            Some(m) if z != 0.0 && m != 0.0 => eligible.push((l, m, z)),
            _ => excluded.push(l + 1),
        }
    }
    let mut pairs = Vec::new();
    for (i, &(l, m, z)) in eligible.iter().enumerate() {
        for &(l2, m2, z2) in &eligible[i..] {
            let (m_ratio, zeta_ratio) = (m / m2, z / z2);
            pairs.push(RatioRow {
                component: l + 1,
                other: l2 + 1,
                m_ratio,
                zeta_ratio,
                relative_gap: relative_gap(m_ratio, zeta_ratio),
            });
        }
    }
    Ok(SmallBudgetTable {
        budget,
        mu: result.mu,
        pairs,
        excluded,
    })
}
