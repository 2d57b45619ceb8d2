//! Passenger utility and the solver-free welfare evaluators.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph;
use crate::network::{ArcSet, DemandProfile, DesignProblem, OdPair, PriorityProfile, UtilityProfile, EPS};

/// Piecewise-linear utility of travelling `path_length` when the shortest
/// possible trip is `shortest_length`: 1 at the shortest length, falling
/// linearly to 0 at `alpha * shortest_length` and staying 0 beyond (including
/// the `f64::INFINITY` sentinel for unreachable pairs).
pub fn utility(path_length: f64, shortest_length: f64, alpha: f64) -> Result<f64> {
    if !(shortest_length.is_finite() && shortest_length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shortest length must be positive and finite, got {shortest_length}"
        )));
    }
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be > 1, got {alpha}"
        )));
    }
    if path_length.is_nan() || path_length < shortest_length - EPS * shortest_length.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "path length {path_length} is shorter than the shortest length {shortest_length}"
        )));
    }
    let ratio = (path_length / shortest_length).max(1.0);
    if ratio >= alpha {
        return Ok(0.0);
    }
    // (alpha - ratio) / (alpha - 1) is the same line as
    // -l / (l* (alpha - 1)) + alpha / (alpha - 1), and is exactly 1 at ratio 1.
    Ok(((alpha - ratio) / (alpha - 1.0)).clamp(0.0, 1.0))
}

/// Utilities induced by an arbitrary installed arc set (not necessarily a
/// circulation), using shortest paths restricted to the installed arcs.
pub fn evaluate_utility_profile(problem: &DesignProblem, installed: &ArcSet) -> Result<UtilityProfile> {
    let network = problem.network();
    if installed.capacity() != network.arc_count() {
        return Err(Error::InvalidArgument(format!(
            "arc set sized for {} arcs, network has {}",
            installed.capacity(),
            network.arc_count()
        )));
    }
    let dist = graph::all_pairs_shortest(network, Some(installed));
    let mut values = BTreeMap::new();
    for &pair in problem.pairs() {
        let length = dist.get(pair.origin, pair.destination);
        let u = utility(length, problem.shortest_length(pair), problem.alpha())?;
        values.insert(pair, u);
    }
    Ok(UtilityProfile::new(values).expect("utility() stays in [0, 1]"))
}

fn priority_of(p: &PriorityProfile, pair: OdPair) -> Result<f64> {
    p.get(pair).ok_or(Error::MismatchedPairs)
}

/// Demand- and priority-weighted total utility, `sum b * p * u`.
pub fn welfare_utilitarian(u: &UtilityProfile, b: &DemandProfile, p: &PriorityProfile) -> Result<f64> {
    let mut total = 0.0;
    for (pair, value) in u.iter() {
        total += b.get(pair) as f64 * priority_of(p, pair)? * value;
    }
    Ok(total)
}

/// Worst priority-adjusted utility `min (1 - p) * u` over `restrict` (all
/// pairs of `u` when `None`).
pub fn welfare_maxmin(u: &UtilityProfile, p: &PriorityProfile, restrict: Option<&[OdPair]>) -> Result<f64> {
    let pairs: Vec<OdPair> = match restrict {
        Some(r) => r.to_vec(),
        None => u.pairs().collect(),
    };
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("max-min over an empty OD set".into()));
    }
    let mut floor = f64::INFINITY;
    for pair in pairs {
        let value = u.get(pair).ok_or(Error::UnknownPair(pair))?;
        floor = floor.min((1.0 - priority_of(p, pair)?) * value);
    }
    Ok(floor)
}

/// `gamma * utilitarian + (1 - gamma) * maxmin`.
pub fn welfare_tradeoff(
    u: &UtilityProfile,
    b: &DemandProfile,
    p: &PriorityProfile,
    gamma: f64,
    restrict: Option<&[OdPair]>,
) -> Result<f64> {
    check_gamma(gamma)?;
    let util = welfare_utilitarian(u, b, p)?;
    if gamma == 1.0 {
        return Ok(util);
    }
    Ok(gamma * util + (1.0 - gamma) * welfare_maxmin(u, p, restrict)?)
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cycle3, cycle3_problem};
    use crate::network::ArcId;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn utility_examples() {
        assert_eq!(utility(5.0, 5.0, 2.0).unwrap(), 1.0);
        assert_eq!(utility(10.0, 5.0, 2.0).unwrap(), 0.0);
        assert!(close(utility(7.5, 5.0, 2.0).unwrap(), 0.5));
        assert_eq!(utility(f64::INFINITY, 5.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn utility_rejects_bad_inputs() {
        assert!(utility(5.0, 0.0, 2.0).is_err());
        assert!(utility(5.0, -1.0, 2.0).is_err());
        assert!(utility(5.0, 5.0, 1.0).is_err());
        assert!(utility(5.0, 5.0, 0.5).is_err());
        assert!(utility(4.0, 5.0, 2.0).is_err());
        assert!(utility(f64::NAN, 5.0, 2.0).is_err());
    }

    #[test]
    fn empty_and_full_installations() {
        let problem = cycle3_problem(&[], 2.0, 0.0);
        let none = evaluate_utility_profile(&problem, &ArcSet::empty(6)).unwrap();
        assert!(none.iter().all(|(_, u)| u == 0.0));
        let all = evaluate_utility_profile(&problem, &ArcSet::full(6)).unwrap();
        assert!(all.iter().all(|(_, u)| u == 1.0));
    }

    #[test]
    fn forward_cycle_utilities() {
        let problem = cycle3_problem(&[], 2.0, 0.0);
        let cycle = ArcSet::from_ids(6, [ArcId(0), ArcId(1), ArcId(2)]);
        let u = evaluate_utility_profile(&problem, &cycle).unwrap();
        // nodes "1","2","3" are indices 0,1,2
        assert_eq!(u.get(OdPair::new(0, 2)), Some(1.0));
        assert_eq!(u.get(OdPair::new(2, 0)), Some(1.0));
        assert_eq!(u.get(OdPair::new(1, 0)), Some(0.0));
        assert_eq!(cycle3().arc_count(), 6);
    }

    fn profiles(rows: &[(u64, f64, f64)]) -> (UtilityProfile, DemandProfile, PriorityProfile) {
        let pairs: Vec<OdPair> = (0..rows.len()).map(|i| OdPair::new(i, i + 1)).collect();
        let u = UtilityProfile::new(pairs.iter().zip(rows).map(|(&p, r)| (p, r.2)).collect()).unwrap();
        let b = DemandProfile::new(pairs.iter().zip(rows).map(|(&p, r)| (p, r.0))).unwrap();
        let p = PriorityProfile::new(pairs.iter().zip(rows).map(|(&p, r)| (p, r.1)).collect(), 1).unwrap();
        (u, b, p)
    }

    #[test]
    fn utilitarian_examples() {
        let (u, b, p) = profiles(&[(10, 0.5, 0.0), (4, 0.3, 0.0)]);
        assert_eq!(welfare_utilitarian(&u, &b, &p).unwrap(), 0.0);
        let (u, b, p) = profiles(&[(10, 0.5, 1.0), (0, 0.3, 0.7)]);
        assert!(close(welfare_utilitarian(&u, &b, &p).unwrap(), 5.0));
        let (u, b, p) = profiles(&[(10, 0.9, 0.5), (4, 0.3, 1.0)]);
        assert!(close(welfare_utilitarian(&u, &b, &p).unwrap(), 5.7));
    }

    #[test]
    fn maxmin_examples() {
        let (u, _, p) = profiles(&[(1, 0.3, 0.0), (1, 0.5, 1.0)]);
        assert_eq!(welfare_maxmin(&u, &p, None).unwrap(), 0.0);
        let (u, _, p) = profiles(&[(1, 0.9, 1.0), (1, 0.1, 0.5)]);
        assert!(close(welfare_maxmin(&u, &p, None).unwrap(), 0.1));
        let (u, _, p) = profiles(&[(1, 0.5, 1.0), (1, 0.5, 1.0), (1, 0.5, 1.0)]);
        assert!(close(welfare_maxmin(&u, &p, None).unwrap(), 0.5));
        assert!(welfare_maxmin(&u, &p, Some(&[])).is_err());
        // restriction to the second pair only
        let (u, _, p) = profiles(&[(1, 0.9, 1.0), (1, 0.1, 0.5)]);
        assert!(close(welfare_maxmin(&u, &p, Some(&[OdPair::new(1, 2)])).unwrap(), 0.45));
    }

    #[test]
    fn tradeoff_examples() {
        let (u, b, p) = profiles(&[(10, 0.9, 0.5), (4, 0.3, 1.0)]);
        assert_eq!(
            welfare_tradeoff(&u, &b, &p, 1.0, None).unwrap(),
            welfare_utilitarian(&u, &b, &p).unwrap()
        );
        // utilitarian 5.7, max-min min(0.1*0.5, 0.7*1.0) = 0.05
        let v = welfare_tradeoff(&u, &b, &p, 0.01, None).unwrap();
        assert!(close(v, 0.01 * 5.7 + 0.99 * 0.05));
        // the combination quoted with a max-min part of 0.1
        assert!(close(0.01 * 5.7 + 0.99 * 0.1, 0.156));
        let (u, b, p) = profiles(&[(10, 0.9, 0.0), (4, 0.3, 0.0)]);
        for g in [0.01, 0.5, 1.0] {
            assert_eq!(welfare_tradeoff(&u, &b, &p, g, None).unwrap(), 0.0);
        }
        assert!(welfare_tradeoff(&u, &b, &p, 0.0, None).is_err());
        assert!(welfare_tradeoff(&u, &b, &p, 1.5, None).is_err());
    }

    #[test]
    fn mismatched_profiles_are_rejected() {
        let (u, b, _) = profiles(&[(10, 0.9, 0.5)]);
        let other = PriorityProfile::uniform(&[OdPair::new(5, 6)], 0.5).unwrap();
        assert!(matches!(welfare_utilitarian(&u, &b, &other), Err(Error::MismatchedPairs)));
    }

    proptest! {
        #[test]
        fn utility_is_bounded_and_monotone(
            shortest in 0.01f64..100.0,
            alpha in 1.01f64..5.0,
            r1 in 1.0f64..6.0,
            r2 in 1.0f64..6.0,
        ) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let a = utility(lo * shortest, shortest, alpha).unwrap();
            let b = utility(hi * shortest, shortest, alpha).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(a + 1e-12 >= b);
            if hi >= alpha + 1e-9 {
                prop_assert_eq!(b, 0.0);
            }
            if hi <= alpha - 1e-9 {
                prop_assert!(b > 0.0);
            }
            prop_assert_eq!(utility(shortest, shortest, alpha).unwrap(), 1.0);
        }

        #[test]
        fn utility_is_scale_invariant(
            shortest in 0.01f64..100.0,
            alpha in 1.01f64..5.0,
            ratio in 1.0f64..6.0,
            scale in prop_oneof![Just(1e-3), Just(1.0), Just(1e3), 0.01f64..100.0],
        ) {
            let base = utility(ratio * shortest, shortest, alpha).unwrap();
            let scaled = utility(scale * ratio * shortest, scale * shortest, alpha).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-12);
        }

        #[test]
        fn utility_is_continuous(shortest in 0.1f64..100.0, alpha in 1.01f64..5.0, ratio in 1.0f64..6.0) {
            let h = 1e-9 * shortest;
            let a = utility(ratio * shortest, shortest, alpha).unwrap();
            let b = utility(ratio * shortest + h, shortest, alpha).unwrap();
            prop_assert!((a - b).abs() <= 1e-6);
        }

        #[test]
        fn evaluation_is_monotone_in_installed_set(small in 0u64..64, extra in 0u64..64) {
            let problem = cycle3_problem(&[], 2.0, 0.0);
            let s = ArcSet::from_mask(6, small);
            let t = ArcSet::from_mask(6, small | extra);
            let us = evaluate_utility_profile(&problem, &s).unwrap();
            let ut = evaluate_utility_profile(&problem, &t).unwrap();
            for (pair, v) in us.iter() {
                prop_assert!(v <= ut.get(pair).unwrap() + 1e-12);
            }
        }

        #[test]
        fn welfare_is_monotone_in_utilities(
            base in proptest::collection::vec(0.0f64..1.0, 4),
            bump in 0usize..4,
            delta in 0.001f64..0.5,
            gamma in 0.001f64..=1.0,
        ) {
            let rows: Vec<(u64, f64, f64)> = base.iter().enumerate().map(|(i, &u)| (i as u64 + 1, 0.2 + 0.15 * i as f64, u)).collect();
            let (u, b, p) = profiles(&rows);
            let mut raised = rows.clone();
            raised[bump].2 = (raised[bump].2 + delta).min(1.0);
            let (u2, _, _) = profiles(&raised);
            prop_assert!(welfare_utilitarian(&u2, &b, &p).unwrap() >= welfare_utilitarian(&u, &b, &p).unwrap());
            prop_assert!(welfare_tradeoff(&u2, &b, &p, gamma, None).unwrap() >= welfare_tradeoff(&u, &b, &p, gamma, None).unwrap());
        }
    }
}
