use discord_core::equilibrium::{agent_payoff, solve_equilibrium, welfare};
use discord_core::net::{from_weighted_edges, make_homophilous_blocks, make_random_weighted, Network};
use discord_core::oracle::gradient_check;
use discord_core::planner::{optimal_intervention, Outcome};
use discord_core::profile::{Direction, GameParams, Profile};
use discord_core::spectral::decompose;
use discord_core::stats::{eta, nu, zeta};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn network() -> impl Strategy<Value = Network> {
    (3usize..14, 0.3f64..1.0, any::<u64>()).prop_map(|(n, d, seed)| make_random_weighted(n, d, seed).unwrap())
}

fn network_and_profile() -> impl Strategy<Value = (Network, Profile)> {
    network().prop_flat_map(|net| {
        let n = net.n();
        (Just(net), prop::collection::vec(-10.0f64..10.0, n).prop_map(|v| Profile::new(v).unwrap()))
    })
}

fn beta() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.0f64..0.99]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructed_networks_are_valid(net in network()) {
        prop_assert!(net.validate().is_empty());
        prop_assert!(net.is_connected());
    }

    #[test]
    fn block_networks_are_valid(a in 2usize..8, b in 2usize..8, p_in in 0.5f64..1.0, seed in any::<u64>()) {
        let net = make_homophilous_blocks(&[a, b], p_in, 0.2, seed).unwrap();
        prop_assert!(net.validate().is_empty());
        prop_assert_eq!(&net, &make_homophilous_blocks(&[a, b], p_in, 0.2, seed).unwrap());
    }

    #[test]
    fn normalization_is_idempotent(net in network()) {
        let again = from_weighted_edges(net.n(), &net.edges()).unwrap();
        prop_assert!((again.weights() - net.weights()).amax() <= 1e-10);
    }

    #[test]
    fn spectrum_invariants(net in network()) {
        let s = decompose(&net).unwrap();
        let n = s.n();
        prop_assert!((s.eigenvalue(0) - 1.0).abs() <= 1e-9);
        let c = 1.0 / (n as f64).sqrt();
        prop_assert!(s.eigenvector(0).iter().all(|v| (v - c).abs() <= 1e-8));
        let u = s.eigenvectors();
        prop_assert!((u.transpose() * u - DMatrix::<f64>::identity(n, n)).amax() <= 1e-9);
        for l in 0..n {
            let v = s.eigenvector(l);
            let residual = (net.weights() * v.vector() - v.vector() * s.eigenvalue(l)).norm();
            prop_assert!(residual <= 1e-8);
            prop_assert!(s.eigenvalue(l).abs() <= 1.0 + 1e-9);
            if l > 0 {
                prop_assert!(s.eigenvalue(l) <= s.eigenvalue(l - 1));
            }
            let (imax, vmax) = v.iter().enumerate().fold((0, 0.0_f64), |(bi, bv), (i, x)| {
                if x.abs() > bv.abs() + 1e-12 { (i, *x) } else { (bi, bv) }
            });
            prop_assert!(vmax > 0.0, "component {l} max entry {imax} is negative");
        }
        prop_assert!(s.eigenvalues().sum().abs() <= 1e-8);
        prop_assert!((s.reconstruct() - net.weights()).amax() <= 1e-8);
    }

    #[test]
    fn basis_change_round_trips((net, f) in network_and_profile(), a in -3.0f64..3.0) {
        let s = decompose(&net).unwrap();
        let fbar = s.to_pc_basis(&f).unwrap();
        prop_assert!((fbar.norm() - f.norm()).abs() <= 1e-10 * (1.0 + f.norm()));
        let back = s.from_pc_basis(&fbar).unwrap();
        prop_assert!((back.vector() - f.vector()).amax() <= 1e-10 * (1.0 + f.max_abs()));
        let y = Profile::from_vector(DVector::from_fn(net.n(), |i, _| i as f64));
        let lhs = s.from_pc_basis(&Profile::from_vector(fbar.vector() * a + y.vector())).unwrap();
        let rhs = s.from_pc_basis(&fbar).unwrap().into_vector() * a + s.from_pc_basis(&y).unwrap().into_vector();
        prop_assert!((lhs.vector() - rhs).amax() <= 1e-10 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn equilibrium_averages_ideal_points((net, f) in network_and_profile(), b in beta()) {
        let p = GameParams::with_beta(b).unwrap();
        let a = solve_equilibrium(&net, &p, &f).unwrap();
        let (lo, hi) = (f.min(), f.max());
        prop_assert!(a.iter().all(|&v| v >= lo - 1e-10 && v <= hi + 1e-10));
        prop_assert!((a.mean() - f.mean()).abs() <= 1e-10);
        let fc = f.centered();
        let ac = solve_equilibrium(&net, &p, &fc).unwrap();
        prop_assert!(ac.norm() <= fc.norm() * (1.0 + 1e-12));
        if b > 0.0 && fc.norm() > 1e-6 {
            prop_assert!(ac.norm() < fc.norm());
        }
    }

    #[test]
    fn payoffs_are_nonpositive((net, f) in network_and_profile(), b in beta()) {
        let p = GameParams::with_beta(b).unwrap();
        let a = solve_equilibrium(&net, &p, &f).unwrap();
        for i in 0..net.n() {
            prop_assert!(agent_payoff(&net, &p, &a, &f, i).unwrap() <= 0.0);
        }
        prop_assert!(welfare(&net, &p, &a, &f).unwrap() <= 0.0);
    }

    #[test]
    fn scalar_functions_are_monotone(b in 0.0f64..0.99, l1 in -1.0f64..1.0, l2 in -1.0f64..1.0, n in 1usize..50) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        prop_assert!(zeta(b, lo) <= zeta(b, hi) + 1e-15);
        prop_assert!(eta(b, lo, n) <= eta(b, hi, n) + 1e-15);
        prop_assert!(nu(b, lo, n) >= nu(b, hi, n) - 1e-15);
        prop_assert!(zeta(b, lo) <= 0.0);
        prop_assert!(nu(b, lo, n) < 0.0);
    }

    #[test]
    fn planner_invariants((net, f) in network_and_profile(), b in 0.05f64..0.95, malevolent in any::<bool>(), frac in 0.01f64..0.95) {
        let g = if malevolent { Direction::Malevolent } else { Direction::Benevolent };
        let p = GameParams::new(b, g).unwrap();
        let s = decompose(&net).unwrap();
        let budget = frac * f.centered().norm_squared();
        prop_assume!(budget > 1e-6);
        let r = optimal_intervention(&net, &s, &p, &f, budget, false).unwrap();
        prop_assert_eq!(r.outcome, Outcome::BudgetBinding);
        prop_assert!((r.budget_used - budget).abs() <= 1e-9 * budget.max(1.0));
        prop_assert!(r.budget_used <= budget + 1e-9);
        let dbar = s.to_pc_basis(&r.delta_star).unwrap();
        prop_assert!(dbar[0].abs() <= 1e-10 * (1.0 + budget.sqrt()));
        let slack = 1e-12 * (1.0 + r.welfare_before.abs());
        match g {
            Direction::Malevolent => prop_assert!(r.welfare_after <= r.welfare_before + slack),
            Direction::Benevolent => prop_assert!(r.welfare_after >= r.welfare_before - slack),
        }
        let loaded: Vec<usize> = (1..net.n()).filter(|l| !r.zero_loaded_components.contains(&(l + 1))).collect();
        for w in loaded.windows(2) {
            prop_assert!(r.x[w[1]].abs() >= r.x[w[0]].abs() * (1.0 - 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn analytic_gradient_matches_finite_differences(net in network(), b in beta(), seed in any::<u64>()) {
        let p = GameParams::with_beta(b).unwrap();
        prop_assert!(gradient_check(&net, &p, 100, 1e-6, seed).unwrap() <= 1e-5);
    }
}
