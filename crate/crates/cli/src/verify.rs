//! Oracle suite behind `discord verify`.

use clap::ValueEnum;
use discord_core::net::Network;
use discord_core::oracle::{constrained_search, gradient_check, sphere_search, verify_extremum_table, SearchConfig};
use discord_core::planner::{cosine_similarity, optimal_intervention, simple_optimal_f};
use discord_core::profile::{Direction, GameParams, Profile};
use discord_core::spectral::decompose;
use discord_core::stats::{
    checked_welfare, cov_neighbors, cov_neighbors_spectral, cov_random_pair, cov_random_pair_spectral,
    relative_gap,
};
use discord_core::{solve_equilibrium, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Identities,
    Sphere,
    Table,
    Planner,
    Gradient,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub network: String,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Direction>,
    pub passed: bool,
    pub detail: Value,
}

pub struct Settings {
    pub suite: Suite,
    pub betas: Vec<f64>,
    pub samples: usize,
    pub restarts: usize,
    pub seed: u64,
}

const DIRECTIONS: [Direction; 2] = [Direction::Malevolent, Direction::Benevolent];
/// Oracle searches are only run up to this size.
const SEARCH_MAX_N: usize = 20;

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Profile {
    Profile::new((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).expect("finite samples")
}

pub fn run(networks: &[(String, Network)], s: &Settings) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let cfg = SearchConfig {
        restarts: s.restarts,
        seed: s.seed,
        ..SearchConfig::default()
    };
    for (name, net) in networks {
        let spec = decompose(net)?;
        let n = net.n();
        for &beta in &s.betas {
            let check = |suite, gamma, passed, detail| Check {
                suite,
                network: name.clone(),
                beta,
                gamma,
                passed,
                detail,
            };

            if s.suite.includes(Suite::Identities) {
                let p = GameParams::with_beta(beta)?;
                let f = gaussian(n, &mut rng).centered();
                let w = checked_welfare(net, &spec, &p, &f)?;
                let a = solve_equilibrium(net, &p, &f)?.centered();
                let nb = relative_gap(cov_neighbors(net, &a)?, cov_neighbors_spectral(&spec, &p, &f)?);
                let rp = relative_gap(cov_random_pair(&a)?, cov_random_pair_spectral(&spec, &p, &f)?);
                let passed = w.relative_gap <= 1e-9 && nb <= 1e-9 && rp <= 1e-9;
                checks.push(check(
                    Suite::Identities,
                    None,
                    passed,
                    json!({"welfare_gap": w.relative_gap, "cov_neighbors_gap": nb, "cov_random_pair_gap": rp, "tol": 1e-9}),
                ));
            }

            if s.suite.includes(Suite::Gradient) {
                let p = GameParams::with_beta(beta)?;
                let err = gradient_check(net, &p, 100, 1e-6, rng.random())?;
                checks.push(check(Suite::Gradient, None, err <= 1e-5, json!({"max_relative_error": err, "tol": 1e-5})));
            }

            if s.suite.includes(Suite::Table) {
                let p = GameParams::with_beta(beta)?;
                let report = verify_extremum_table(net, &p, s.samples, rng.random())?;
                checks.push(check(Suite::Table, None, report.passed, serde_json::to_value(&report)?));
            }

            if n > SEARCH_MAX_N {
                continue;
            }

            if s.suite.includes(Suite::Sphere) {
                for g in DIRECTIONS {
                    let p = GameParams::new(beta, g)?;
                    let predicted = simple_optimal_f(&spec, &p)?;
                    let found = sphere_search(net, &p, &cfg)?;
                    let gap = relative_gap(found.value, predicted.value);
                    let cosine = if predicted.degenerate {
                        None
                    } else {
                        Some(cosine_similarity(&found.point, &predicted.f_star)?.abs())
                    };
                    let passed = gap <= 1e-6 && cosine.is_none_or(|c| c >= 1.0 - 1e-5);
                    checks.push(check(
                        Suite::Sphere,
                        Some(g),
                        passed,
                        json!({
                            "component": predicted.component,
                            "predicted": predicted.value,
                            "found": found.value,
                            "relative_gap": gap,
                            "abs_cosine": cosine,
                            "degenerate": predicted.degenerate,
                        }),
                    ));
                }
            }

            if s.suite.includes(Suite::Planner) && beta > 0.0 {
                let f_hat = gaussian(n, &mut rng);
                let budget = 0.3 * f_hat.centered().norm_squared();
                for g in DIRECTIONS {
                    let p = GameParams::new(beta, g)?;
                    let plan = optimal_intervention(net, &spec, &p, &f_hat, budget, false)?;
                    let found = constrained_search(net, &p, &f_hat, budget, &cfg)?;
                    let gap = relative_gap(plan.welfare_after, found.value);
                    let not_beaten = g.sign() * (plan.welfare_after - found.value) >= -1e-6 * plan.welfare_after.abs();
                    checks.push(check(
                        Suite::Planner,
                        Some(g),
                        gap <= 1e-6 && not_beaten,
                        json!({
                            "budget": budget,
                            "planner_welfare": plan.welfare_after,
                            "search_welfare": found.value,
                            "relative_gap": gap,
                            "tol": 1e-6,
                        }),
                    ));
                }
            }
        }
    }
    Ok(checks)
}
