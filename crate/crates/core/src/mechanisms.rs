//! Set-valued mechanisms: rank-minimizing, Boston (immediate acceptance) and
//! agent-proposing deferred acceptance.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{rank_total_unchecked, Allocation, Instance, Profile};
use crate::solver::{rm_set, AllocationSet};

/// Strict priority order over all agents at every object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityProfile {
    orders: Vec<Vec<usize>>,
    // position[o][agent]: 0 is highest priority
    position: Vec<Vec<usize>>,
}

impl PriorityProfile {
    /// `orders[o]` lists 0-based agents, highest priority first.
    pub fn new(instance: &Instance, orders: Vec<Vec<usize>>) -> Result<Self> {
        let n = instance.n_agents();
        if orders.len() != instance.n_objects() {
            return Err(Error::WrongLength {
                expected: instance.n_objects(),
                found: orders.len(),
            });
        }
        let mut position = Vec::with_capacity(orders.len());
        for order in &orders {
            if order.len() != n {
                return Err(Error::WrongLength {
                    expected: n,
                    found: order.len(),
                });
            }
            let mut pos = vec![usize::MAX; n];
            for (k, &agent) in order.iter().enumerate() {
                if agent >= n {
                    return Err(Error::AgentOutOfRange {
                        agent: agent + 1,
                        agents: n,
                    });
                }
                if pos[agent] != usize::MAX {
                    return Err(Error::NotAPermutation {
                        objects: n,
                        reason: format!("agent {} listed twice in a priority order", agent + 1),
                    });
                }
                pos[agent] = k;
            }
            position.push(pos);
        }
        Ok(Self { orders, position })
    }

    /// Every object ranks agents by index.
    pub fn by_index(instance: &Instance) -> Self {
        let order: Vec<usize> = (0..instance.n_agents()).collect();
        Self::new(instance, vec![order; instance.n_objects()]).expect("identity priorities")
    }

    pub fn orders(&self) -> &[Vec<usize>] {
        &self.orders
    }

    /// 0-based priority position of `agent` at `object`.
    pub fn position(&self, object: usize, agent: usize) -> usize {
        self.position[object][agent]
    }

    fn check(&self, instance: &Instance) -> Result<()> {
        if self.orders.len() != instance.n_objects() {
            return Err(Error::WrongLength {
                expected: instance.n_objects(),
                found: self.orders.len(),
            });
        }
        if let Some(order) = self.orders.iter().find(|o| o.len() != instance.n_agents()) {
            return Err(Error::WrongLength {
                expected: instance.n_agents(),
                found: order.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mechanism {
    RankMinimizing,
    Boston(PriorityProfile),
    DeferredAcceptance(PriorityProfile),
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::RankMinimizing => "rm",
            Mechanism::Boston(_) => "boston",
            Mechanism::DeferredAcceptance(_) => "da",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_profile(instance: &Instance, profile: &Profile) -> Result<()> {
    if profile.len() != instance.n_agents() {
        return Err(Error::WrongLength {
            expected: instance.n_agents(),
            found: profile.len(),
        });
    }
    profile
        .prefs()
        .iter()
        .try_for_each(|p| instance.check_preference(p))
}

/// Immediate acceptance: in round `k` every unassigned agent applies to its
/// `k`-th reported choice and objects accept permanently by priority.
pub fn boston(
    instance: &Instance,
    profile: &Profile,
    priorities: &PriorityProfile,
) -> Result<AllocationSet> {
    check_profile(instance, profile)?;
    priorities.check(instance)?;
    let n = instance.n_agents();
    let m = instance.n_objects();
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut remaining = instance.capacities().to_vec();
    let mut applicants: Vec<Vec<usize>> = vec![Vec::new(); m];

    for round in 1..=m {
        for list in applicants.iter_mut() {
            list.clear();
        }
        for agent in (0..n).filter(|&a| assigned[a].is_none()) {
            applicants[profile.pref(agent).object_at(round)].push(agent);
        }
        for (o, list) in applicants.iter_mut().enumerate() {
            list.sort_by_key(|&a| priorities.position(o, a));
            for &agent in list.iter().take(remaining[o]) {
                assigned[agent] = Some(o);
            }
            remaining[o] -= list.len().min(remaining[o]);
        }
        if assigned.iter().all(Option::is_some) {
            break;
        }
    }
    let alloc = Allocation::from_vec_unchecked(
        assigned
            .into_iter()
            .map(|o| o.expect("total capacity covers every agent within M rounds"))
            .collect(),
    );
    let total = rank_total_unchecked(profile, &alloc);
    Ok(AllocationSet::singleton(alloc, total))
}

/// Agent-proposing deferred acceptance.
pub fn deferred_acceptance(
    instance: &Instance,
    profile: &Profile,
    priorities: &PriorityProfile,
) -> Result<AllocationSet> {
    check_profile(instance, profile)?;
    priorities.check(instance)?;
    let n = instance.n_agents();
    let m = instance.n_objects();
    // next[a]: 1-based rank of the next object agent a will propose to
    let mut next = vec![1usize; n];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut free: Vec<usize> = (0..n).rev().collect();

    while let Some(agent) = free.pop() {
        let o = profile.pref(agent).object_at(next[agent]);
        next[agent] += 1;
        let hold = &mut held[o];
        hold.push(agent);
        if hold.len() > instance.capacity(o) {
            let (worst_idx, _) = hold
                .iter()
                .enumerate()
                .max_by_key(|(_, &a)| priorities.position(o, a))
                .expect("non-empty hold list");
            let rejected = hold.swap_remove(worst_idx);
            free.push(rejected);
        }
    }

    let mut assigned = vec![0usize; n];
    for (o, hold) in held.iter().enumerate() {
        for &a in hold {
            assigned[a] = o;
        }
    }
    let alloc = Allocation::from_vec_unchecked(assigned);
    let total = rank_total_unchecked(profile, &alloc);
    Ok(AllocationSet::singleton(alloc, total))
}

/// Runs `mech` on the reported profile. `limit` bounds the enumeration used
/// by the rank-minimizing mechanism.
pub fn run_mechanism(
    mech: &Mechanism,
    instance: &Instance,
    profile: &Profile,
    limit: usize,
) -> Result<AllocationSet> {
    match mech {
        Mechanism::RankMinimizing => rm_set(instance, profile, limit),
        Mechanism::Boston(p) => boston(instance, profile, p),
        Mechanism::DeferredAcceptance(p) => deferred_acceptance(instance, profile, p),
    }
}
