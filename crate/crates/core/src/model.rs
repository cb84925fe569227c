//! Domain types: preferences, instances, profiles, allocations and exact rank
//! totals.
//!
//! Internally agents and objects are 0-based. Every `Display` impl and every
//! parser in [`crate::format`] uses 1-based numbers.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Default bound on the number of agents for which allocations are enumerated.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 8;

/// One agent's strict ranking of all objects, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Preference {
    ranking: Vec<usize>,
    // rank_of[o] is the 1-based rank of object o
    rank_of: Vec<usize>,
}

impl Preference {
    /// Builds a preference from 0-based object indices.
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let m = ranking.len();
        if m == 0 {
            return Err(Error::NotAPermutation {
                objects: 0,
                reason: "empty ranking".into(),
            });
        }
        let mut rank_of = vec![0; m];
        for (pos, &o) in ranking.iter().enumerate() {
            if o >= m {
                return Err(Error::NotAPermutation {
                    objects: m,
                    reason: format!("object {} out of range", o + 1),
                });
            }
            if rank_of[o] != 0 {
                return Err(Error::NotAPermutation {
                    objects: m,
                    reason: format!("object {} listed twice", o + 1),
                });
            }
            rank_of[o] = pos + 1;
        }
        Ok(Self { ranking, rank_of })
    }

    /// Builds a preference from 1-based object numbers.
    pub fn from_one_based(ranking: &[usize]) -> Result<Self> {
        let m = ranking.len();
        let zero = ranking
            .iter()
            .map(|&o| {
                if o == 0 || o > m {
                    Err(Error::NotAPermutation {
                        objects: m,
                        reason: format!("object {o} out of range"),
                    })
                } else {
                    Ok(o - 1)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(zero)
    }

    /// The identity ranking `o1, o2, ..., oM`.
    pub fn identity(m: usize) -> Self {
        Self {
            ranking: (0..m).collect(),
            rank_of: (1..=m).collect(),
        }
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn num_objects(&self) -> usize {
        self.ranking.len()
    }

    /// 1-based rank of `object`; the favorite has rank 1.
    pub fn rank(&self, object: usize) -> Result<usize> {
        self.rank_of
            .get(object)
            .copied()
            .ok_or(Error::ObjectOutOfRange {
                object: object + 1,
                objects: self.ranking.len(),
            })
    }

    /// Unchecked variant of [`Preference::rank`] for hot loops.
    #[inline]
    pub(crate) fn rank_unchecked(&self, object: usize) -> usize {
        self.rank_of[object]
    }

    /// Object at 1-based position `rank`.
    pub fn object_at(&self, rank: usize) -> usize {
        self.ranking[rank - 1]
    }

    pub fn top(&self) -> usize {
        self.ranking[0]
    }

    /// Rotates the ranking left until `object` is first, keeping the cyclic
    /// order of the rest.
    pub fn rotated_to_front(&self, object: usize) -> Self {
        let pos = self.rank_of[object] - 1;
        let mut ranking = self.ranking.clone();
        ranking.rotate_left(pos);
        Self::new(ranking).expect("rotation of a permutation is a permutation")
    }

    /// Every strict ranking of `m` objects in lexicographic order.
    pub fn all(m: usize) -> Vec<Preference> {
        use itertools::Itertools;
        (0..m)
            .permutations(m)
            .map(|p| Preference::new(p).expect("permutation"))
            .collect()
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, o) in self.ranking.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", o + 1)?;
        }
        Ok(())
    }
}

/// Agent count and per-object capacities, with total capacity covering every
/// agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    n_agents: usize,
    capacities: Vec<usize>,
}

impl Instance {
    pub fn new(n_agents: usize, capacities: Vec<usize>) -> Result<Self> {
        if n_agents == 0 || capacities.is_empty() {
            return Err(Error::EmptyInstance);
        }
        if let Some(pos) = capacities.iter().position(|&q| q == 0) {
            return Err(Error::ZeroCapacity { object: pos + 1 });
        }
        let total: usize = capacities.iter().sum();
        if total < n_agents {
            return Err(Error::InsufficientCapacity {
                total,
                agents: n_agents,
            });
        }
        Ok(Self {
            n_agents,
            capacities,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_objects(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn capacity(&self, object: usize) -> usize {
        self.capacities[object]
    }

    pub(crate) fn check_agent(&self, agent: usize) -> Result<()> {
        if agent < self.n_agents {
            Ok(())
        } else {
            Err(Error::AgentOutOfRange {
                agent: agent + 1,
                agents: self.n_agents,
            })
        }
    }

    pub(crate) fn check_preference(&self, pref: &Preference) -> Result<()> {
        if pref.num_objects() == self.n_objects() {
            Ok(())
        } else {
            Err(Error::WrongLength {
                expected: self.n_objects(),
                found: pref.num_objects(),
            })
        }
    }
}

/// One preference per agent, indexed by agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile {
    prefs: Vec<Preference>,
}

impl Profile {
    pub fn new(instance: &Instance, prefs: Vec<Preference>) -> Result<Self> {
        if prefs.len() != instance.n_agents() {
            return Err(Error::WrongLength {
                expected: instance.n_agents(),
                found: prefs.len(),
            });
        }
        for p in &prefs {
            instance.check_preference(p)?;
        }
        Ok(Self { prefs })
    }

    /// Builds a profile without checking it against an instance.
    pub(crate) fn from_prefs(prefs: Vec<Preference>) -> Self {
        Self { prefs }
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    pub fn pref(&self, agent: usize) -> &Preference {
        &self.prefs[agent]
    }

    pub fn len(&self) -> usize {
        self.prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefs.is_empty()
    }
}

/// Total map from agents to objects that respects capacities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    assigned: Vec<usize>,
}

impl Allocation {
    /// Validates `assigned` (0-based objects) against the instance.
    pub fn new(instance: &Instance, assigned: Vec<usize>) -> Result<Self> {
        if assigned.len() != instance.n_agents() {
            return Err(Error::WrongLength {
                expected: instance.n_agents(),
                found: assigned.len(),
            });
        }
        let mut load = vec![0usize; instance.n_objects()];
        for &o in &assigned {
            if o >= instance.n_objects() {
                return Err(Error::ObjectOutOfRange {
                    object: o + 1,
                    objects: instance.n_objects(),
                });
            }
            load[o] += 1;
        }
        for (o, (&l, &q)) in load.iter().zip(instance.capacities()).enumerate() {
            if l > q {
                return Err(Error::OverCapacity {
                    object: o + 1,
                    assigned: l,
                    capacity: q,
                });
            }
        }
        Ok(Self { assigned })
    }

    pub(crate) fn from_vec_unchecked(assigned: Vec<usize>) -> Self {
        Self { assigned }
    }

    pub fn assigned(&self) -> &[usize] {
        &self.assigned
    }

    pub fn object_of(&self, agent: usize) -> usize {
        self.assigned[agent]
    }

    pub fn n_agents(&self) -> usize {
        self.assigned.len()
    }

    /// Number of agents on each object.
    pub fn loads(&self, n_objects: usize) -> Vec<usize> {
        let mut load = vec![0; n_objects];
        for &o in &self.assigned {
            load[o] += 1;
        }
        load
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, o) in self.assigned.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", o + 1)?;
        }
        Ok(())
    }
}

/// Exact sum of ranks over `n` agents. The average rank is `total / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RankTotal {
    total: usize,
    n: usize,
}

impl RankTotal {
    pub fn new(total: usize, n: usize) -> Self {
        assert!(n > 0, "rank total over zero agents");
        Self { total, n }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Average rank rendered to four decimal places. Display only.
    pub fn decimal(&self) -> String {
        // round half up on the exact fraction
        let scaled = (self.total * 20_000 / self.n).div_ceil(2);
        format!("{}.{:04}", scaled / 10_000, scaled % 10_000)
    }
}

impl PartialOrd for RankTotal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RankTotal {
    /// Cross-multiplied comparison of the averages.
    fn cmp(&self, other: &Self) -> Ordering {
        (self.total * other.n)
            .cmp(&(other.total * self.n))
            .then(self.n.cmp(&other.n))
    }
}

impl fmt::Display for RankTotal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.total, self.n)
    }
}

/// Sum of each agent's rank of its assigned object.
pub fn rank_total(instance: &Instance, profile: &Profile, alloc: &Allocation) -> Result<RankTotal> {
    if profile.len() != instance.n_agents() {
        return Err(Error::WrongLength {
            expected: instance.n_agents(),
            found: profile.len(),
        });
    }
    // re-validate feasibility
    Allocation::new(instance, alloc.assigned.clone())?;
    Ok(rank_total_unchecked(profile, alloc))
}

#[inline]
pub(crate) fn rank_total_unchecked(profile: &Profile, alloc: &Allocation) -> RankTotal {
    let total = alloc
        .assigned
        .iter()
        .zip(profile.prefs())
        .map(|(&o, p)| p.rank_unchecked(o))
        .sum();
    RankTotal::new(total, alloc.assigned.len())
}

/// Counts how many agents received each rank `1..=M`.
pub fn rank_histogram(profile: &Profile, alloc: &Allocation) -> Vec<usize> {
    let m = profile.pref(0).num_objects();
    let mut hist = vec![0; m];
    for (agent, &o) in alloc.assigned.iter().enumerate() {
        hist[profile.pref(agent).rank_unchecked(o) - 1] += 1;
    }
    hist
}

/// Every feasible allocation, in lexicographic order of the assigned list.
pub fn enumerate_feasible(instance: &Instance, limit: usize) -> Result<FeasibleAllocations> {
    if instance.n_agents() > limit {
        return Err(Error::ExhaustiveLimit {
            agents: instance.n_agents(),
            limit,
        });
    }
    Ok(FeasibleAllocations {
        capacities: instance.capacities().to_vec(),
        assigned: vec![0; instance.n_agents()],
        load: vec![0; instance.n_objects()],
        started: false,
        done: false,
    })
}

/// Lazy lexicographic stream of feasible allocations.
///
/// Any capacity-respecting prefix extends to a full allocation because total
/// capacity covers every agent, so the greedy completion never fails.
#[derive(Debug, Clone)]
pub struct FeasibleAllocations {
    capacities: Vec<usize>,
    assigned: Vec<usize>,
    load: Vec<usize>,
    started: bool,
    done: bool,
}

impl FeasibleAllocations {
    fn fill_from(&mut self, start: usize) {
        for agent in start..self.assigned.len() {
            let o = (0..self.capacities.len())
                .find(|&o| self.load[o] < self.capacities[o])
                .expect("spare capacity");
            self.assigned[agent] = o;
            self.load[o] += 1;
        }
    }
}

impl Iterator for FeasibleAllocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill_from(0);
            return Some(Allocation::from_vec_unchecked(self.assigned.clone()));
        }
        for pos in (0..self.assigned.len()).rev() {
            let cur = self.assigned[pos];
            self.load[cur] -= 1;
            if let Some(o) =
                (cur + 1..self.capacities.len()).find(|&o| self.load[o] < self.capacities[o])
            {
                self.assigned[pos] = o;
                self.load[o] += 1;
                self.fill_from(pos + 1);
                return Some(Allocation::from_vec_unchecked(self.assigned.clone()));
            }
        }
        self.done = true;
        None
    }
}
