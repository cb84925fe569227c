use itertools::Itertools;
use proptest::prelude::*;

use rank_min::audit::{
    self, k_star, replay, sweep, unanimous_profile, witness_part_i, witness_part_ii, AgentScope,
    AuditConfig,
};
use rank_min::mechanisms::{boston, deferred_acceptance, run_mechanism};
use rank_min::model::{enumerate_feasible, rank_total, Allocation};
use rank_min::solver::{assignment_solve, min_rank_exhaustive, rm_set, solve_min_rank};
use rank_min::{Instance, Mechanism, Preference, PriorityProfile, Profile};

const LIMIT: usize = 8;

fn arb_instance(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n, 1..=max_m)
        .prop_flat_map(move |(n, m)| (Just(n), proptest::collection::vec(1..=n, m)))
        .prop_filter_map("total capacity below N", |(n, q)| Instance::new(n, q).ok())
}

fn arb_pref(m: usize) -> impl Strategy<Value = Preference> {
    Just((0..m).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|r| Preference::new(r).unwrap())
}

fn arb_case(max_n: usize, max_m: usize) -> impl Strategy<Value = (Instance, Profile)> {
    arb_instance(max_n, max_m).prop_flat_map(|inst| {
        let n = inst.n_agents();
        let m = inst.n_objects();
        (Just(inst), proptest::collection::vec(arb_pref(m), n)).prop_map(|(inst, prefs)| {
            let p = Profile::new(&inst, prefs).unwrap();
            (inst, p)
        })
    })
}

/// Counts capacity-respecting total assignments by recursion over agents,
/// independently of the enumeration iterator.
fn count_assignments(remaining_agents: usize, caps: &mut Vec<usize>) -> usize {
    if remaining_agents == 0 {
        return 1;
    }
    let mut total = 0;
    for o in 0..caps.len() {
        if caps[o] > 0 {
            caps[o] -= 1;
            total += count_assignments(remaining_agents - 1, caps);
            caps[o] += 1;
        }
    }
    total
}

proptest! {
    #[test]
    fn ranks_form_a_bijection(p in (1usize..7).prop_flat_map(arb_pref)) {
        let m = p.num_objects();
        let ranks: Vec<usize> = (0..m).map(|o| p.rank(o).unwrap()).collect();
        prop_assert_eq!(ranks.iter().sum::<usize>(), m * (m + 1) / 2);
        prop_assert!(ranks.iter().all_unique());
    }

    #[test]
    fn enumeration_matches_recursive_count((inst, profile) in arb_case(5, 4)) {
        let all: Vec<Allocation> = enumerate_feasible(&inst, LIMIT).unwrap().collect();
        let mut caps = inst.capacities().to_vec();
        prop_assert_eq!(all.len(), count_assignments(inst.n_agents(), &mut caps));
        prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
        let n = inst.n_agents();
        for a in &all {
            let t = rank_total(&inst, &profile, a).unwrap().total();
            prop_assert!(n <= t && t <= n * inst.n_objects());
        }
    }

    #[test]
    fn rm_set_is_exactly_the_optima((inst, profile) in arb_case(5, 4)) {
        let set = rm_set(&inst, &profile, LIMIT).unwrap();
        prop_assert!(!set.is_empty());
        let (canonical, total) = solve_min_rank(&inst, &profile).unwrap();
        prop_assert_eq!(set.optimal_total(), total);
        prop_assert_eq!(&set.members()[0], &canonical);
        for a in enumerate_feasible(&inst, LIMIT).unwrap() {
            let t = rank_total(&inst, &profile, &a).unwrap().total();
            if set.contains(&a) {
                prop_assert_eq!(t, total.total());
            } else {
                prop_assert!(t > total.total());
            }
        }
        let (raw, raw_total) = assignment_solve(&inst, &profile).unwrap();
        prop_assert_eq!(raw_total, total);
        prop_assert!(set.contains(&raw));
    }

    #[test]
    fn best_case_never_exceeds_worst_case(
        (inst, profile) in arb_case(4, 4),
        seed in any::<u64>(),
    ) {
        let set = rm_set(&inst, &profile, LIMIT).unwrap();
        let perms = Preference::all(inst.n_objects());
        let t = &perms[(seed as usize) % perms.len()];
        for agent in 0..inst.n_agents() {
            prop_assert!(set.rho_under(agent, t) <= set.rho_bar(agent, t));
        }
    }

    #[test]
    fn mechanisms_return_feasible_nonempty_sets((inst, profile) in arb_case(5, 4)) {
        let pr = PriorityProfile::by_index(&inst);
        for mech in [
            Mechanism::RankMinimizing,
            Mechanism::Boston(pr.clone()),
            Mechanism::DeferredAcceptance(pr.clone()),
        ] {
            let set = run_mechanism(&mech, &inst, &profile, LIMIT).unwrap();
            prop_assert!(!set.is_empty());
            if !matches!(mech, Mechanism::RankMinimizing) {
                prop_assert_eq!(set.len(), 1);
            }
            for a in set.members() {
                prop_assert!(Allocation::new(&inst, a.assigned().to_vec()).is_ok());
            }
        }
    }

    #[test]
    fn boston_first_round_priority((inst, profile) in arb_case(5, 4), rot in 0usize..5) {
        let n = inst.n_agents();
        let orders: Vec<Vec<usize>> = (0..inst.n_objects())
            .map(|o| (0..n).map(|k| (k + rot + o) % n).collect())
            .collect();
        let pr = PriorityProfile::new(&inst, orders).unwrap();
        let out = boston(&inst, &profile, &pr).unwrap();
        let alloc = &out.members()[0];
        for agent in 0..n {
            let first = profile.pref(agent).top();
            let ahead = (0..n)
                .filter(|&j| profile.pref(j).top() == first)
                .filter(|&j| pr.position(first, j) < pr.position(first, agent))
                .count();
            if ahead < inst.capacity(first) {
                prop_assert_eq!(alloc.object_of(agent), first);
            }
        }
    }

    #[test]
    fn solver_agrees_with_brute_force_at_larger_sizes((inst, profile) in arb_case(7, 3)) {
        let (a, t) = solve_min_rank(&inst, &profile).unwrap();
        let (b, u) = min_rank_exhaustive(&inst, &profile, LIMIT).unwrap();
        prop_assert_eq!(t, u);
        prop_assert_eq!(a, b);
    }
}

fn is_stable(inst: &Instance, profile: &Profile, pr: &PriorityProfile, alloc: &Allocation) -> bool {
    let loads = alloc.loads(inst.n_objects());
    for agent in 0..inst.n_agents() {
        let p = profile.pref(agent);
        let mine = p.rank(alloc.object_of(agent)).unwrap();
        for o in (0..inst.n_objects()).filter(|&o| p.rank(o).unwrap() < mine) {
            if loads[o] < inst.capacity(o) {
                return false;
            }
            let displaces = (0..inst.n_agents())
                .filter(|&j| alloc.object_of(j) == o)
                .any(|j| pr.position(o, agent) < pr.position(o, j));
            if displaces {
                return false;
            }
        }
    }
    true
}

fn all_profiles(inst: &Instance) -> Vec<Profile> {
    let perms = Preference::all(inst.n_objects());
    (0..inst.n_agents())
        .map(|_| perms.iter().cloned())
        .multi_cartesian_product()
        .map(|prefs| Profile::new(inst, prefs).unwrap())
        .collect()
}

fn capacity_vectors(n: usize, m: usize) -> Vec<Instance> {
    (0..m)
        .map(|_| 1..=n)
        .multi_cartesian_product()
        .filter_map(|q| Instance::new(n, q).ok())
        .collect()
}

#[test]
fn deferred_acceptance_is_stable_exhaustively() {
    for (n, m) in [(2, 2), (3, 2), (3, 3), (4, 2)] {
        for inst in capacity_vectors(n, m) {
            let by_index = PriorityProfile::by_index(&inst);
            let reversed = PriorityProfile::new(
                &inst,
                (0..m)
                    .map(|o| {
                        let mut v: Vec<usize> = (0..n).collect();
                        v.rotate_left(o % n);
                        v
                    })
                    .collect(),
            )
            .unwrap();
            for pr in [by_index, reversed] {
                for profile in all_profiles(&inst) {
                    let out = deferred_acceptance(&inst, &profile, &pr).unwrap();
                    assert!(is_stable(&inst, &profile, &pr, &out.members()[0]));
                }
            }
        }
    }
}

#[test]
fn rm_sweeps_are_symmetric_across_agents() {
    let cfg = AuditConfig::default();
    for (n, m) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        for inst in capacity_vectors(n, m) {
            for truth in Preference::all(m) {
                for report in Preference::all(m) {
                    let first =
                        sweep(&Mechanism::RankMinimizing, 0, &truth, &report, &inst, &cfg).unwrap();
                    for agent in 1..n {
                        let other = sweep(
                            &Mechanism::RankMinimizing,
                            agent,
                            &truth,
                            &report,
                            &inst,
                            &cfg,
                        )
                        .unwrap();
                        assert_eq!(first.worst.rank, other.worst.rank);
                        assert_eq!(first.best.rank, other.best.rank);
                    }
                }
            }
        }
    }
}

#[test]
fn truthful_extremes_match_constructions_up_to_four_agents() {
    let cfg = AuditConfig::default();
    let rm = Mechanism::RankMinimizing;
    for (n, m) in [(1, 2), (2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (4, 3)] {
        for inst in capacity_vectors(n, m) {
            for truth in Preference::all(m) {
                let r = sweep(&rm, 0, &truth, &truth, &inst, &cfg).unwrap();
                assert_eq!(r.worst.rank, k_star(&truth, &inst), "{inst:?} {truth}");
                assert_eq!(r.best.rank, 1);

                let worst_witness = witness_part_i(0, &truth, &inst).unwrap();
                let set = replay(&rm, &inst, &worst_witness, &truth, LIMIT).unwrap();
                assert_eq!(set.rho_bar(0, &truth), r.worst.rank);

                let best_witness = witness_part_ii(0, &truth, &inst).unwrap();
                let set = replay(&rm, &inst, &best_witness, &truth, LIMIT).unwrap();
                assert_eq!(set.len(), 1);
                assert_eq!(set.rho_under(0, &truth), 1);
            }
        }
    }
}

#[test]
fn no_obvious_manipulation_across_default_family() {
    let cfg = AuditConfig {
        workers: 4,
        ..AuditConfig::default()
    };
    for (n, m) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2), (4, 3)] {
        for inst in capacity_vectors(n, m) {
            let scope = if n == 4 {
                AgentScope::One(0)
            } else {
                AgentScope::All
            };
            let report = audit::audit(&Mechanism::RankMinimizing, &inst, scope, &cfg).unwrap();
            assert!(!report.obviously_manipulable, "{inst:?}");
            for c in &report.checks {
                // a misreport's worst case is never better than the critical index
                assert!(c.worst_misreport >= k_star(&c.true_pref, &inst));
                assert_eq!(c.worst_truth, k_star(&c.true_pref, &inst));
                assert_eq!(c.best_truth, 1);
            }
        }
    }
}

#[test]
fn boston_witnesses_replay_to_recorded_ranks() {
    let inst = Instance::new(3, vec![1, 1, 1]).unwrap();
    let pr =
        PriorityProfile::new(&inst, vec![vec![1, 2, 0], vec![0, 1, 2], vec![1, 2, 0]]).unwrap();
    let mech = Mechanism::Boston(pr);
    let report = audit::audit(&mech, &inst, AgentScope::All, &AuditConfig::default()).unwrap();
    assert!(report.obviously_manipulable);
    let mut replayed = 0;
    for c in report.violations() {
        if let Some(w) = &c.witness_i {
            let t = replay(&mech, &inst, &w.truth, &c.true_pref, LIMIT).unwrap();
            let l = replay(&mech, &inst, &w.misreport, &c.misreport, LIMIT).unwrap();
            assert_eq!(t.rho_bar(c.agent, &c.true_pref), c.worst_truth);
            assert_eq!(l.rho_bar(c.agent, &c.true_pref), c.worst_misreport);
            replayed += 1;
        }
        if let Some(w) = &c.witness_ii {
            let t = replay(&mech, &inst, &w.truth, &c.true_pref, LIMIT).unwrap();
            let l = replay(&mech, &inst, &w.misreport, &c.misreport, LIMIT).unwrap();
            assert_eq!(t.rho_under(c.agent, &c.true_pref), c.best_truth);
            assert_eq!(l.rho_under(c.agent, &c.true_pref), c.best_misreport);
            replayed += 1;
        }
    }
    assert!(replayed > 0);
}

#[test]
fn deferred_acceptance_is_never_obviously_manipulable() {
    let cfg = AuditConfig::default();
    for inst in capacity_vectors(3, 3) {
        let pr =
            PriorityProfile::new(&inst, vec![vec![2, 0, 1], vec![0, 1, 2], vec![1, 2, 0]]).unwrap();
        let report = audit::audit(
            &Mechanism::DeferredAcceptance(pr),
            &inst,
            AgentScope::All,
            &cfg,
        )
        .unwrap();
        assert!(!report.obviously_manipulable, "{inst:?}");
    }
}

#[test]
fn unanimous_profile_has_worst_truthful_outcome() {
    let inst = Instance::new(3, vec![1, 1, 1]).unwrap();
    let p = Preference::from_one_based(&[1, 2, 3]).unwrap();
    let set = rm_set(&inst, &unanimous_profile(&p, 3), LIMIT).unwrap();
    assert_eq!(set.rho_bar(0, &p), 3);
}
