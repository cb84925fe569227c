//! Exhaustive obvious-manipulability audits.
//!
//! A misreport is an obvious manipulation when, over every possible profile of
//! the other agents, its worst case is strictly better than the worst case of
//! truth-telling, or its best case is strictly better than the best case of
//! truth-telling. Ranks are always judged by the agent's true preference while
//! the mechanism runs on the report. Sweeps cover the full strict domain for
//! every opponent; nothing is sampled, so a clean report is a certificate for
//! the audited instance only.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mechanisms::{run_mechanism, Mechanism};
use crate::model::{
    enumerate_feasible, Allocation, Instance, Preference, Profile, DEFAULT_EXHAUSTIVE_LIMIT,
};
use crate::solver::{rm_set, AllocationSet};

/// Default cap on mechanism evaluations per sweep, check or audit.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditConfig {
    /// Largest agent count for which the rank-minimizing set is enumerated.
    pub limit: usize,
    /// Maximum number of mechanism evaluations.
    pub budget: u128,
    /// Worker threads for the opponent sweep. Results do not depend on it.
    pub workers: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            limit: DEFAULT_EXHAUSTIVE_LIMIT,
            budget: DEFAULT_BUDGET,
            workers: 1,
        }
    }
}

/// Critical index: the smallest `k` whose top-`k` objects under `true_pref`
/// hold every agent.
pub fn k_star(true_pref: &Preference, instance: &Instance) -> usize {
    let mut covered = 0;
    for k in 1..=instance.n_objects() {
        covered += instance.capacity(true_pref.object_at(k));
        if covered >= instance.n_agents() {
            return k;
        }
    }
    unreachable!("instances always have enough capacity")
}

/// Profile in which all `n` agents report `pref`.
pub fn unanimous_profile(pref: &Preference, n: usize) -> Profile {
    Profile::from_prefs(vec![pref.clone(); n])
}

/// Reports of every agent except `agent`, in agent order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpponentProfile {
    agent: usize,
    prefs: Vec<Preference>,
}

impl OpponentProfile {
    pub fn new(instance: &Instance, agent: usize, prefs: Vec<Preference>) -> Result<Self> {
        instance.check_agent(agent)?;
        if prefs.len() + 1 != instance.n_agents() {
            return Err(Error::WrongLength {
                expected: instance.n_agents() - 1,
                found: prefs.len(),
            });
        }
        for p in &prefs {
            instance.check_preference(p)?;
        }
        Ok(Self { agent, prefs })
    }

    /// The designated agent (0-based).
    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    /// Full profile with `report` inserted at the designated agent.
    pub fn with_report(&self, report: &Preference) -> Profile {
        let mut prefs = Vec::with_capacity(self.prefs.len() + 1);
        prefs.extend_from_slice(&self.prefs[..self.agent]);
        prefs.push(report.clone());
        prefs.extend_from_slice(&self.prefs[self.agent..]);
        Profile::from_prefs(prefs)
    }

    /// Pairs of (0-based agent, preference) for every opponent.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Preference)> {
        let agent = self.agent;
        self.prefs
            .iter()
            .enumerate()
            .map(move |(k, p)| (if k < agent { k } else { k + 1 }, p))
    }
}

impl fmt::Display for OpponentProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prefs.is_empty() {
            return f.write_str("(no opponents)");
        }
        for (k, (j, p)) in self.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "agent {}: {}", j + 1, p)?;
        }
        Ok(())
    }
}

/// Extreme rank over the opponent domain and the lexicographically smallest
/// opponent profile attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extremum {
    pub rank: usize,
    pub witness: OpponentProfile,
}

/// Worst case (max of the worst rank) and best case (min of the best rank)
/// of one report, judged by one true preference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepResult {
    pub worst: Extremum,
    pub best: Extremum,
}

/// Opponent profiles addressed by mixed-radix index over the lexicographic
/// list of strict rankings; the first opponent is the most significant digit,
/// so index order is lexicographic order of the opponent list.
struct OpponentSpace {
    agent: usize,
    opponents: usize,
    perms: Vec<Preference>,
    count: u128,
}

impl OpponentSpace {
    fn new(instance: &Instance, agent: usize) -> Self {
        let perms = Preference::all(instance.n_objects());
        let opponents = instance.n_agents() - 1;
        let count = pow_saturating(perms.len() as u128, opponents);
        Self {
            agent,
            opponents,
            perms,
            count,
        }
    }

    fn decode(&self, mut index: u128) -> OpponentProfile {
        let base = self.perms.len() as u128;
        let mut digits = vec![0usize; self.opponents];
        for d in digits.iter_mut().rev() {
            *d = (index % base) as usize;
            index /= base;
        }
        OpponentProfile {
            agent: self.agent,
            prefs: digits.into_iter().map(|d| self.perms[d].clone()).collect(),
        }
    }
}

fn pow_saturating(base: u128, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base))
}

fn factorial(m: usize) -> u128 {
    (1..=m as u128).fold(1u128, |acc, k| acc.saturating_mul(k))
}

fn check_budget(required: u128, budget: u128) -> Result<()> {
    if required > budget {
        Err(Error::BudgetExceeded { required, budget })
    } else {
        Ok(())
    }
}

fn check_limit(mech: &Mechanism, instance: &Instance, limit: usize) -> Result<()> {
    if matches!(mech, Mechanism::RankMinimizing) && instance.n_agents() > limit {
        return Err(Error::ExhaustiveLimit {
            agents: instance.n_agents(),
            limit,
        });
    }
    Ok(())
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

// Running extremes per true type: (worst rank, index, best rank, index).
type Extremes = Vec<(usize, u128, usize, u128)>;

fn merge(mut a: Extremes, b: Extremes) -> Extremes {
    for (x, y) in a.iter_mut().zip(b) {
        if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
            x.0 = y.0;
            x.1 = y.1;
        }
        if y.2 < x.2 || (y.2 == x.2 && y.3 < x.3) {
            x.2 = y.2;
            x.3 = y.3;
        }
    }
    a
}

/// Sweeps every opponent profile with `report` inserted for `agent` and
/// evaluates the outcome under each of `true_prefs`. The reduction is
/// associative and commutative with index tie-breaks, so any worker count
/// yields identical results.
fn sweep_report(
    mech: &Mechanism,
    instance: &Instance,
    space: &OpponentSpace,
    report: &Preference,
    true_prefs: &[Preference],
    limit: usize,
    pool: &rayon::ThreadPool,
) -> Result<Vec<SweepResult>> {
    let agent = space.agent;
    let identity: Extremes = vec![(0, u128::MAX, usize::MAX, u128::MAX); true_prefs.len()];
    let eval = |index: u128| -> Result<Extremes> {
        let profile = space.decode(index).with_report(report);
        let set = run_mechanism(mech, instance, &profile, limit)?;
        Ok(true_prefs
            .iter()
            .map(|t| (set.rho_bar(agent, t), index, set.rho_under(agent, t), index))
            .collect())
    };
    let count = space.count;
    let extremes = if count <= u64::MAX as u128 {
        pool.install(|| {
            (0..count as u64)
                .into_par_iter()
                .map(|i| eval(i as u128))
                .try_reduce(|| identity.clone(), |a, b| Ok(merge(a, b)))
        })?
    } else {
        unreachable!("budget guard rejects sweeps this large")
    };
    Ok(extremes
        .into_iter()
        .map(|(w, wi, b, bi)| SweepResult {
            worst: Extremum {
                rank: w,
                witness: space.decode(wi),
            },
            best: Extremum {
                rank: b,
                witness: space.decode(bi),
            },
        })
        .collect())
}

fn check_sweep_inputs(
    mech: &Mechanism,
    agent: usize,
    prefs: &[&Preference],
    instance: &Instance,
    cfg: &AuditConfig,
) -> Result<()> {
    instance.check_agent(agent)?;
    for p in prefs {
        instance.check_preference(p)?;
    }
    check_limit(mech, instance, cfg.limit)
}

/// Both extremes of one report, judged by `true_pref`, over all opponent
/// profiles. Costs `(M!)^(N-1)` mechanism evaluations.
pub fn sweep(
    mech: &Mechanism,
    agent: usize,
    true_pref: &Preference,
    report: &Preference,
    instance: &Instance,
    cfg: &AuditConfig,
) -> Result<SweepResult> {
    check_sweep_inputs(mech, agent, &[true_pref, report], instance, cfg)?;
    let space = OpponentSpace::new(instance, agent);
    check_budget(space.count, cfg.budget)?;
    let mut out = sweep_report(
        mech,
        instance,
        &space,
        report,
        std::slice::from_ref(true_pref),
        cfg.limit,
        &pool(cfg.workers),
    )?;
    Ok(out.pop().expect("one true type"))
}

/// Maximum over opponent profiles of the agent's worst rank, with the
/// smallest maximizing opponent profile.
pub fn sweep_worst_case(
    mech: &Mechanism,
    agent: usize,
    true_pref: &Preference,
    report: &Preference,
    instance: &Instance,
    cfg: &AuditConfig,
) -> Result<(usize, OpponentProfile)> {
    let r = sweep(mech, agent, true_pref, report, instance, cfg)?;
    Ok((r.worst.rank, r.worst.witness))
}

/// Minimum over opponent profiles of the agent's best rank, with the
/// smallest minimizing opponent profile.
pub fn sweep_best_case(
    mech: &Mechanism,
    agent: usize,
    true_pref: &Preference,
    report: &Preference,
    instance: &Instance,
    cfg: &AuditConfig,
) -> Result<(usize, OpponentProfile)> {
    let r = sweep(mech, agent, true_pref, report, instance, cfg)?;
    Ok((r.best.rank, r.best.witness))
}

/// Opponent profiles supporting a flagged comparison: `truth` attains the
/// truthful rank and `misreport` attains the misreport's rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub truth: OpponentProfile,
    pub misreport: OpponentProfile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManipulationCheck {
    pub agent: usize,
    pub true_pref: Preference,
    pub misreport: Preference,
    pub worst_truth: usize,
    pub worst_misreport: usize,
    pub best_truth: usize,
    pub best_misreport: usize,
    /// Misreport has a strictly better worst case.
    pub violates_i: bool,
    /// Misreport has a strictly better best case.
    pub violates_ii: bool,
    pub witness_i: Option<Witness>,
    pub witness_ii: Option<Witness>,
}

impl ManipulationCheck {
    fn from_sweeps(
        agent: usize,
        true_pref: &Preference,
        misreport: &Preference,
        truth: &SweepResult,
        lie: &SweepResult,
    ) -> Self {
        let violates_i = truth.worst.rank > lie.worst.rank;
        let violates_ii = truth.best.rank > lie.best.rank;
        Self {
            agent,
            true_pref: true_pref.clone(),
            misreport: misreport.clone(),
            worst_truth: truth.worst.rank,
            worst_misreport: lie.worst.rank,
            best_truth: truth.best.rank,
            best_misreport: lie.best.rank,
            violates_i,
            violates_ii,
            witness_i: violates_i.then(|| Witness {
                truth: truth.worst.witness.clone(),
                misreport: lie.worst.witness.clone(),
            }),
            witness_ii: violates_ii.then(|| Witness {
                truth: truth.best.witness.clone(),
                misreport: lie.best.witness.clone(),
            }),
        }
    }

    pub fn is_obvious_manipulation(&self) -> bool {
        self.violates_i || self.violates_ii
    }
}

/// Compares truth-telling against one misreport for one agent.
pub fn check_manipulation(
    mech: &Mechanism,
    agent: usize,
    true_pref: &Preference,
    misreport: &Preference,
    instance: &Instance,
    cfg: &AuditConfig,
) -> Result<ManipulationCheck> {
    if true_pref == misreport {
        return Err(Error::MisreportEqualsTruth);
    }
    check_sweep_inputs(mech, agent, &[true_pref, misreport], instance, cfg)?;
    let space = OpponentSpace::new(instance, agent);
    check_budget(space.count.saturating_mul(2), cfg.budget)?;
    let pool = pool(cfg.workers);
    let truths = std::slice::from_ref(true_pref);
    let truth = sweep_report(mech, instance, &space, true_pref, truths, cfg.limit, &pool)?;
    let lie = sweep_report(mech, instance, &space, misreport, truths, cfg.limit, &pool)?;
    Ok(ManipulationCheck::from_sweeps(
        agent, true_pref, misreport, &truth[0], &lie[0],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentScope {
    One(usize),
    All,
}

impl AgentScope {
    fn agents(&self, instance: &Instance) -> Result<Vec<usize>> {
        match *self {
            AgentScope::One(a) => {
                instance.check_agent(a)?;
                Ok(vec![a])
            }
            AgentScope::All => Ok((0..instance.n_agents()).collect()),
        }
    }
}

/// Outcome of an audit. `obviously_manipulable` holds exactly when some check
/// is flagged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub mechanism: String,
    pub instance: Instance,
    pub scope: AgentScope,
    pub checks: Vec<ManipulationCheck>,
    pub obviously_manipulable: bool,
}

impl AuditReport {
    pub fn violations(&self) -> impl Iterator<Item = &ManipulationCheck> {
        self.checks.iter().filter(|c| c.is_obvious_manipulation())
    }
}

/// Number of mechanism evaluations [`audit`] performs: one sweep per agent in
/// scope and per report, shared across all true types.
pub fn audit_cost(instance: &Instance, scope: AgentScope) -> u128 {
    let agents = match scope {
        AgentScope::One(_) => 1,
        AgentScope::All => instance.n_agents() as u128,
    };
    let types = factorial(instance.n_objects());
    agents
        .saturating_mul(types)
        .saturating_mul(pow_saturating(types, instance.n_agents() - 1))
}

/// Checks every (true type, misreport) pair for every agent in scope.
///
/// Checks are ordered by agent, then true type, then misreport, each in
/// lexicographic order.
pub fn audit(
    mech: &Mechanism,
    instance: &Instance,
    scope: AgentScope,
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    let agents = scope.agents(instance)?;
    check_limit(mech, instance, cfg.limit)?;
    check_budget(audit_cost(instance, scope), cfg.budget)?;
    let types = Preference::all(instance.n_objects());
    let pool = pool(cfg.workers);
    let mut checks = Vec::new();
    for &agent in &agents {
        let space = OpponentSpace::new(instance, agent);
        // by_report[r][t]: sweep of report r judged by true type t
        let by_report = types
            .iter()
            .map(|r| sweep_report(mech, instance, &space, r, &types, cfg.limit, &pool))
            .collect::<Result<Vec<_>>>()?;
        for (t, truth) in types.iter().enumerate() {
            for (r, report) in types.iter().enumerate() {
                if r == t {
                    continue;
                }
                checks.push(ManipulationCheck::from_sweeps(
                    agent,
                    truth,
                    report,
                    &by_report[t][t],
                    &by_report[r][t],
                ));
            }
        }
    }
    let obviously_manipulable = checks
        .iter()
        .any(ManipulationCheck::is_obvious_manipulation);
    Ok(AuditReport {
        mechanism: mech.name().to_string(),
        instance: instance.clone(),
        scope,
        checks,
        obviously_manipulable,
    })
}

/// Runs `mech` on `opponents` with `report` inserted for the designated agent.
pub fn replay(
    mech: &Mechanism,
    instance: &Instance,
    opponents: &OpponentProfile,
    report: &Preference,
    limit: usize,
) -> Result<AllocationSet> {
    run_mechanism(mech, instance, &opponents.with_report(report), limit)
}

/// Opponents who all copy `true_pref`; the worst-case construction for a
/// truthful agent under the rank-minimizing mechanism.
pub fn witness_part_i(
    agent: usize,
    true_pref: &Preference,
    instance: &Instance,
) -> Result<OpponentProfile> {
    OpponentProfile::new(
        instance,
        agent,
        vec![true_pref.clone(); instance.n_agents() - 1],
    )
}

/// Opponents whose first choices, together with the agent's own, fill the
/// agent's top `k* - 1` objects exactly to capacity and put the remaining
/// agents on the critical object. At the resulting profile the only
/// rank-minimizing allocation gives everyone their first choice.
///
/// Opponents take first choices in agent order, most preferred object first.
/// Each opponent's ranking is `true_pref` rotated so that its first choice
/// leads.
pub fn witness_part_ii(
    agent: usize,
    true_pref: &Preference,
    instance: &Instance,
) -> Result<OpponentProfile> {
    instance.check_agent(agent)?;
    instance.check_preference(true_pref)?;
    let critical = k_star(true_pref, instance);
    let mut placed = 0;
    let mut counts = Vec::with_capacity(critical);
    for k in 1..=critical {
        let q = instance.capacity(true_pref.object_at(k));
        let c = if k < critical {
            q
        } else {
            instance.n_agents() - placed
        };
        counts.push(c);
        placed += c;
    }
    // the agent's own first choice takes one seat at the top object
    counts[0] -= 1;
    let prefs = counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| {
            std::iter::repeat_n(true_pref.rotated_to_front(true_pref.object_at(k + 1)), c)
        })
        .collect();
    OpponentProfile::new(instance, agent, prefs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lemma1Failure {
    /// A rank-minimizing allocation leaves a top object below capacity.
    UnderFilled {
        allocation: Allocation,
        object: usize,
    },
    /// A rank-minimizing allocation puts the wrong number of agents on the
    /// critical object.
    CriticalCount {
        allocation: Allocation,
        expected: usize,
        found: usize,
    },
    /// An allocation with the characterizing loads is not rank-minimizing.
    MissingMember { allocation: Allocation },
    /// No rank-minimizing allocation gives `agent` the object.
    Unreachable { agent: usize, object: usize },
}

impl fmt::Display for Lemma1Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lemma1Failure::UnderFilled { allocation, object } => write!(
                f,
                "allocation [{allocation}] does not fill object {} to capacity",
                object + 1
            ),
            Lemma1Failure::CriticalCount {
                allocation,
                expected,
                found,
            } => write!(
                f,
                "allocation [{allocation}] puts {found} agents on the critical object, expected {expected}"
            ),
            Lemma1Failure::MissingMember { allocation } => write!(
                f,
                "allocation [{allocation}] has the characterizing loads but is not rank-minimizing"
            ),
            Lemma1Failure::Unreachable { agent, object } => write!(
                f,
                "no rank-minimizing allocation gives agent {} object {}",
                agent + 1,
                object + 1
            ),
        }
    }
}

/// Outcome of checking the unanimous-profile characterization for one
/// preference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma1Verdict {
    pub k_star: usize,
    pub set_size: usize,
    pub characterized_size: usize,
    pub failure: Option<Lemma1Failure>,
}

impl Lemma1Verdict {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks that when every agent reports `pref`, the rank-minimizing set is
/// exactly the allocations filling the top `k* - 1` objects to capacity with
/// everyone else on the critical object, and that every agent reaches every
/// object among the top `k*` in some member.
pub fn verify_lemma1(
    pref: &Preference,
    instance: &Instance,
    limit: usize,
) -> Result<Lemma1Verdict> {
    instance.check_preference(pref)?;
    let n = instance.n_agents();
    let m = instance.n_objects();
    let critical = k_star(pref, instance);
    let above: usize = (1..critical)
        .map(|k| instance.capacity(pref.object_at(k)))
        .sum();
    let critical_object = pref.object_at(critical);
    let critical_load = n - above;

    let set = rm_set(instance, &unanimous_profile(pref, n), limit)?;

    let characterize = |alloc: &Allocation| -> Option<Lemma1Failure> {
        let loads = alloc.loads(m);
        if let Some(k) = (1..critical).find(|&k| {
            let o = pref.object_at(k);
            loads[o] != instance.capacity(o)
        }) {
            return Some(Lemma1Failure::UnderFilled {
                allocation: alloc.clone(),
                object: pref.object_at(k),
            });
        }
        if loads[critical_object] != critical_load {
            return Some(Lemma1Failure::CriticalCount {
                allocation: alloc.clone(),
                expected: critical_load,
                found: loads[critical_object],
            });
        }
        None
    };

    let mut verdict = Lemma1Verdict {
        k_star: critical,
        set_size: set.len(),
        characterized_size: 0,
        failure: None,
    };

    // (I) and (II) for every member
    if let Some(f) = set.members().iter().find_map(&characterize) {
        verdict.failure = Some(f);
    }
    // nothing outside the set satisfies (I) and (II)
    for alloc in enumerate_feasible(instance, limit)? {
        if characterize(&alloc).is_none() {
            verdict.characterized_size += 1;
            if verdict.failure.is_none() && !set.contains(&alloc) {
                verdict.failure = Some(Lemma1Failure::MissingMember { allocation: alloc });
            }
        }
    }
    // every top-k* object is reachable by every agent
    if verdict.failure.is_none() {
        'outer: for k in 1..=critical {
            let o = pref.object_at(k);
            for agent in 0..n {
                if !set.members().iter().any(|a| a.object_of(agent) == o) {
                    verdict.failure = Some(Lemma1Failure::Unreachable { agent, object: o });
                    break 'outer;
                }
            }
        }
    }
    Ok(verdict)
}
