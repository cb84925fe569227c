//! Rank-minimizing allocations: the optimal value, a canonical optimum, and
//! the full set of optima.

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::model::{
    enumerate_feasible, rank_total_unchecked, Allocation, Instance, Preference, Profile, RankTotal,
};

/// Non-empty set of allocations in canonical order, all sharing one rank
/// total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationSet {
    members: Vec<Allocation>,
    optimal_total: RankTotal,
}

impl AllocationSet {
    pub(crate) fn from_sorted(members: Vec<Allocation>, optimal_total: RankTotal) -> Self {
        debug_assert!(!members.is_empty());
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Self {
            members,
            optimal_total,
        }
    }

    pub fn singleton(alloc: Allocation, total: RankTotal) -> Self {
        Self {
            members: vec![alloc],
            optimal_total: total,
        }
    }

    pub fn members(&self) -> &[Allocation] {
        &self.members
    }

    pub fn optimal_total(&self) -> RankTotal {
        self.optimal_total
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, alloc: &Allocation) -> bool {
        self.members.binary_search(alloc).is_ok()
    }

    /// Rank, under `true_pref`, of the worst object `agent` receives across
    /// the set.
    pub fn rho_bar(&self, agent: usize, true_pref: &Preference) -> usize {
        self.members
            .iter()
            .map(|a| true_pref.rank_unchecked(a.object_of(agent)))
            .max()
            .expect("allocation sets are non-empty")
    }

    /// Rank, under `true_pref`, of the best object `agent` receives across
    /// the set.
    pub fn rho_under(&self, agent: usize, true_pref: &Preference) -> usize {
        self.members
            .iter()
            .map(|a| true_pref.rank_unchecked(a.object_of(agent)))
            .min()
            .expect("allocation sets are non-empty")
    }
}

/// Worst-case rank of `agent` over `set`, judged by `true_pref`.
pub fn rho_bar(agent: usize, true_pref: &Preference, set: &AllocationSet) -> usize {
    set.rho_bar(agent, true_pref)
}

/// Best-case rank of `agent` over `set`, judged by `true_pref`.
pub fn rho_under(agent: usize, true_pref: &Preference, set: &AllocationSet) -> usize {
    set.rho_under(agent, true_pref)
}

/// Expands objects into unit slots and solves the rank-cost assignment.
///
/// `agents` restricts the problem to a subset of agents and `capacities` may
/// be any residual capacity vector that still covers them. Returns the object
/// for each listed agent and the optimal rank sum.
fn assignment_optimum(
    profile: &Profile,
    agents: &[usize],
    capacities: &[usize],
) -> (Vec<usize>, usize) {
    if agents.is_empty() {
        return (Vec::new(), 0);
    }
    let slots: Vec<usize> = capacities
        .iter()
        .enumerate()
        .flat_map(|(o, &q)| std::iter::repeat_n(o, q.min(agents.len())))
        .collect();
    let cost: Vec<Vec<i64>> = agents
        .iter()
        .map(|&a| {
            let p = profile.pref(a);
            slots.iter().map(|&o| p.rank_unchecked(o) as i64).collect()
        })
        .collect();
    let (choice, total) = min_cost_assignment(&cost);
    (
        choice.into_iter().map(|s| slots[s]).collect(),
        total as usize,
    )
}

fn check_inputs(instance: &Instance, profile: &Profile) -> Result<()> {
    if profile.len() != instance.n_agents() {
        return Err(Error::WrongLength {
            expected: instance.n_agents(),
            found: profile.len(),
        });
    }
    for p in profile.prefs() {
        instance.check_preference(p)?;
    }
    Ok(())
}

/// Optimal allocation straight from the assignment solver, without
/// canonicalization. Works at any size.
pub fn assignment_solve(instance: &Instance, profile: &Profile) -> Result<(Allocation, RankTotal)> {
    check_inputs(instance, profile)?;
    let agents: Vec<usize> = (0..instance.n_agents()).collect();
    let (objects, total) = assignment_optimum(profile, &agents, instance.capacities());
    Ok((
        Allocation::from_vec_unchecked(objects),
        RankTotal::new(total, instance.n_agents()),
    ))
}

/// Canonically smallest rank-minimizing allocation and its rank total.
///
/// The optimum is found with the assignment solver; agents are then fixed in
/// index order to the lowest object that keeps the residual optimum equal to
/// the global one. The result equals the first optimum in lexicographic
/// enumeration order at every size.
pub fn solve_min_rank(instance: &Instance, profile: &Profile) -> Result<(Allocation, RankTotal)> {
    let (_, optimum) = assignment_solve(instance, profile)?;
    let n = instance.n_agents();
    let mut residual = instance.capacities().to_vec();
    let mut fixed_cost = 0usize;
    let mut assigned = Vec::with_capacity(n);
    for agent in 0..n {
        let rest: Vec<usize> = (agent + 1..n).collect();
        let pref = profile.pref(agent);
        let choice = (0..instance.n_objects())
            .find(|&o| {
                if residual[o] == 0 {
                    return false;
                }
                residual[o] -= 1;
                let (_, sub) = assignment_optimum(profile, &rest, &residual);
                residual[o] += 1;
                fixed_cost + pref.rank_unchecked(o) + sub == optimum.total()
            })
            .expect("some object extends an optimal prefix");
        residual[choice] -= 1;
        fixed_cost += pref.rank_unchecked(choice);
        assigned.push(choice);
    }
    Ok((Allocation::from_vec_unchecked(assigned), optimum))
}

/// First minimum-total allocation in enumeration order, by brute force.
pub fn min_rank_exhaustive(
    instance: &Instance,
    profile: &Profile,
    limit: usize,
) -> Result<(Allocation, RankTotal)> {
    check_inputs(instance, profile)?;
    let mut best: Option<(Allocation, RankTotal)> = None;
    for alloc in enumerate_feasible(instance, limit)? {
        let t = rank_total_unchecked(profile, &alloc);
        if best.as_ref().is_none_or(|(_, b)| t.total() < b.total()) {
            best = Some((alloc, t));
        }
    }
    Ok(best.expect("at least one feasible allocation"))
}

/// Every allocation of minimum total rank, materialized by enumeration.
pub fn rm_set(instance: &Instance, profile: &Profile, limit: usize) -> Result<AllocationSet> {
    check_inputs(instance, profile)?;
    let mut best = usize::MAX;
    let mut members = Vec::new();
    for alloc in enumerate_feasible(instance, limit)? {
        let t = rank_total_unchecked(profile, &alloc).total();
        if t < best {
            best = t;
            members.clear();
        }
        if t == best {
            members.push(alloc);
        }
    }
    Ok(AllocationSet::from_sorted(
        members,
        RankTotal::new(best, instance.n_agents()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_EXHAUSTIVE_LIMIT as LIMIT;

    fn pref(r: &[usize]) -> Preference {
        Preference::from_one_based(r).unwrap()
    }

    fn setup(n: usize, q: &[usize], prefs: &[&[usize]]) -> (Instance, Profile) {
        let inst = Instance::new(n, q.to_vec()).unwrap();
        let prof = Profile::new(&inst, prefs.iter().map(|r| pref(r)).collect()).unwrap();
        (inst, prof)
    }

    #[test]
    fn distinct_favorites() {
        let (i, p) = setup(3, &[1, 1, 1], &[&[1, 2, 3], &[2, 3, 1], &[3, 1, 2]]);
        let (a, t) = solve_min_rank(&i, &p).unwrap();
        assert_eq!(t.total(), 3);
        assert_eq!(a.assigned(), &[0, 1, 2]);
    }

    #[test]
    fn unanimous_three() {
        let (i, p) = setup(3, &[1, 1, 1], &[&[1, 2, 3][..]; 3]);
        let (a, t) = solve_min_rank(&i, &p).unwrap();
        assert_eq!(t.total(), 6);
        assert_eq!(a.assigned(), &[0, 1, 2]);
        let set = rm_set(&i, &p, LIMIT).unwrap();
        assert_eq!(set.len(), 6);
        assert!(set.contains(&a));
    }

    #[test]
    fn two_agents() {
        let (i, p) = setup(2, &[1, 1], &[&[1, 2], &[2, 1]]);
        let (a, t) = solve_min_rank(&i, &p).unwrap();
        assert_eq!((a.assigned(), t.total()), (&[0usize, 1][..], 2));
        assert_eq!(rm_set(&i, &p, LIMIT).unwrap().len(), 1);

        let (i, p) = setup(2, &[1, 1], &[&[1, 2], &[1, 2]]);
        let set = rm_set(&i, &p, LIMIT).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.optimal_total().to_string(), "3/2");
        assert_eq!(set.members()[0].object_of(0), 0);
        assert_eq!(set.members()[1].object_of(1), 0);
    }

    #[test]
    fn rho_examples() {
        let (i, p) = setup(3, &[1, 1, 1], &[&[1, 2, 3][..]; 3]);
        let set = rm_set(&i, &p, LIMIT).unwrap();
        assert_eq!(rho_bar(0, &pref(&[1, 2, 3]), &set), 3);
        assert_eq!(rho_under(0, &pref(&[1, 2, 3]), &set), 1);

        let single = AllocationSet::singleton(
            Allocation::new(&i, vec![0, 1, 2]).unwrap(),
            RankTotal::new(3, 3),
        );
        assert_eq!(rho_bar(0, &pref(&[1, 2, 3]), &single), 1);
        assert_eq!(rho_under(0, &pref(&[1, 2, 3]), &single), 1);

        // agent 0 gets o1 in one member and o2 in the other
        let two = AllocationSet::from_sorted(
            vec![
                Allocation::new(&i, vec![0, 1, 2]).unwrap(),
                Allocation::new(&i, vec![1, 0, 2]).unwrap(),
            ],
            RankTotal::new(6, 3),
        );
        assert_eq!(rho_bar(0, &pref(&[2, 1, 3]), &two), 2);
        let later = AllocationSet::from_sorted(
            vec![
                Allocation::new(&i, vec![1, 0, 2]).unwrap(),
                Allocation::new(&i, vec![2, 0, 1]).unwrap(),
            ],
            RankTotal::new(6, 3),
        );
        assert_eq!(rho_under(0, &pref(&[1, 2, 3]), &later), 2);
    }

    #[test]
    fn rm_set_limit() {
        let (i, p) = setup(3, &[3], &[&[1][..]; 3]);
        assert!(matches!(
            rm_set(&i, &p, 2),
            Err(Error::ExhaustiveLimit {
                agents: 3,
                limit: 2
            })
        ));
        // the solver has no limit
        assert_eq!(solve_min_rank(&i, &p).unwrap().1.total(), 3);
    }

    #[test]
    fn solver_beyond_enumeration_limit() {
        let n = 12;
        let inst = Instance::new(n, vec![4, 4, 4]).unwrap();
        let prof = Profile::new(&inst, vec![pref(&[1, 2, 3]); n]).unwrap();
        let (a, t) = solve_min_rank(&inst, &prof).unwrap();
        assert_eq!(t.total(), 4 + 8 + 12);
        assert_eq!(a.assigned()[..4], [0, 0, 0, 0]);
    }

    #[test]
    fn profile_length_mismatch() {
        let inst = Instance::new(2, vec![1, 1]).unwrap();
        let other = Instance::new(1, vec![1, 1]).unwrap();
        let p = Profile::new(&other, vec![pref(&[1, 2])]).unwrap();
        assert!(rm_set(&inst, &p, LIMIT).is_err());
        assert!(solve_min_rank(&inst, &p).is_err());
    }
}
