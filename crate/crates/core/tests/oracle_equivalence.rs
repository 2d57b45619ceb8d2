use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use transit_equity::fixtures::{random_instance, InstanceParams};
use transit_equity::graph::is_circulation;
use transit_equity::milp::{build_model, certify, solve};
use transit_equity::oracle::{evaluate_all, EnumerationBudget};
use transit_equity::utility::{welfare_tradeoff, welfare_utilitarian};
use transit_equity::{evaluate_utility_profile, Solver, SolverConfig, WelfareSpec};

fn solver() -> Solver {
    Solver::highs(SolverConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn utilitarian_and_tradeoff_match_enumeration(seed in any::<u64>(), gamma in 0.01f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_instance(&mut rng, &InstanceParams::default());
        let all = evaluate_all(&problem, &EnumerationBudget::default()).unwrap();
        for spec in [WelfareSpec::utilitarian(), WelfareSpec::tradeoff(gamma)] {
            let model = build_model(&problem, &spec, &Default::default()).unwrap();
            let design = solve(&model, &solver(), None).unwrap();
            certify(&model, &design).unwrap();
            let best = all
                .optimum(&BTreeMap::new(), |u| {
                    if spec.gamma >= 1.0 {
                        welfare_utilitarian(u, problem.demand(), problem.priority())
                    } else {
                        welfare_tradeoff(u, problem.demand(), problem.priority(), spec.gamma, None)
                    }
                })
                .unwrap();
            prop_assert!((design.objective - best.value).abs() <= 1e-6 + 1e-4 * best.value.abs());
        }
    }

    #[test]
    fn optimal_designs_are_circulations_with_shortest_routes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_instance(&mut rng, &InstanceParams::default());
        let model = build_model(&problem, &WelfareSpec::utilitarian(), &Default::default()).unwrap();
        let design = solve(&model, &solver(), None).unwrap();
        prop_assert!(is_circulation(problem.network(), &design.installed));
        prop_assert!(problem.network().cost_of(&design.installed) <= problem.budget() + 1e-9);
        let u = evaluate_utility_profile(&problem, &design.installed).unwrap();
        for (pair, value) in u.iter() {
            prop_assert!((design.solver_utilities.get(pair).unwrap() - value).abs() <= 1e-6);
        }
    }
}
