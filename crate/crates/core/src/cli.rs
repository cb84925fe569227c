//! Command-line front end.
//!
//! Exit codes: 0 success or no obvious manipulation, 2 obvious manipulation
//! found (or a failed characterization check), 1 error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::audit::{self, AgentScope, AuditConfig, DEFAULT_BUDGET};
use crate::format::{parse_instance, InstanceFile};
use crate::mechanisms::Mechanism;
use crate::model::{rank_histogram, Instance, Preference, DEFAULT_EXHAUSTIVE_LIMIT};
use crate::report;
use crate::solver::{rm_set, solve_min_rank};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FOUND: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "rankmin",
    version,
    about = "Rank-minimizing assignment and obvious-manipulability audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the canonical rank-minimizing allocation and its exact average rank
    Solve { file: PathBuf },
    /// Print every rank-minimizing allocation
    Enumerate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
        limit: usize,
    },
    /// Exhaustively search for obvious manipulations
    Audit(AuditArgs),
    /// Build a worst-case (i) or best-case (ii) opponent profile and replay it
    Witness {
        #[arg(long, value_enum)]
        part: Part,
        /// True preference, e.g. 1,2,3
        #[arg(long)]
        pref: String,
        /// Designated agent (1-based)
        #[arg(long, default_value_t = 1)]
        agent: usize,
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
        limit: usize,
    },
    /// Check the unanimous-profile characterization of the optimal set
    Lemma1 {
        /// Preference to check; every preference when omitted
        #[arg(long)]
        pref: Option<String>,
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
        limit: usize,
    },
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, value_enum, default_value_t = MechanismArg::Rm)]
    mechanism: MechanismArg,
    /// Agent number (1-based) or `all`
    #[arg(long, default_value = "all")]
    agent: String,
    #[command(flatten)]
    source: InstanceSource,
    /// Maximum number of mechanism evaluations
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the report here instead of stdout
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
    limit: usize,
}

#[derive(Args, Debug)]
struct InstanceSource {
    /// Instance file
    #[arg(long, conflicts_with_all = ["n", "m", "capacities"])]
    file: Option<PathBuf>,
    /// Number of agents for a generated instance
    #[arg(long)]
    n: Option<usize>,
    /// Number of objects for a generated instance
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated capacities for a generated instance
    #[arg(long)]
    capacities: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MechanismArg {
    Rm,
    Boston,
    Da,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Part {
    I,
    Ii,
}

enum Source {
    File(InstanceFile),
    Generated(Instance),
}

impl Source {
    fn instance(&self) -> &Instance {
        match self {
            Source::File(f) => &f.instance,
            Source::Generated(i) => i,
        }
    }
}

fn list(text: &str) -> anyhow::Result<Vec<usize>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .with_context(|| format!("invalid number {s:?}"))
        })
        .collect()
}

fn read_file(path: &PathBuf) -> anyhow::Result<InstanceFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

impl InstanceSource {
    fn load(&self) -> anyhow::Result<Source> {
        if let Some(path) = &self.file {
            return Ok(Source::File(read_file(path)?));
        }
        let (Some(n), Some(caps)) = (self.n, &self.capacities) else {
            bail!("give --file, or --n and --capacities");
        };
        let caps = list(caps)?;
        if let Some(m) = self.m {
            if m != caps.len() {
                bail!("--m {m} does not match {} capacities", caps.len());
            }
        }
        Ok(Source::Generated(Instance::new(n, caps)?))
    }
}

fn parse_pref(text: &str, instance: &Instance) -> anyhow::Result<Preference> {
    let p = Preference::from_one_based(&list(text)?)?;
    if p.num_objects() != instance.n_objects() {
        bail!(
            "preference lists {} objects, instance has {}",
            p.num_objects(),
            instance.n_objects()
        );
    }
    Ok(p)
}

fn agent_index(agent: usize, instance: &Instance) -> anyhow::Result<usize> {
    if agent == 0 || agent > instance.n_agents() {
        bail!("agent {agent} out of range 1..={}", instance.n_agents());
    }
    Ok(agent - 1)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Solve { file } => {
            let f = read_file(&file)?;
            out.write_all(solve_text(&f)?.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Enumerate { file, limit } => {
            let f = read_file(&file)?;
            let set = rm_set(&f.instance, &f.profile, limit)?;
            let mut s = String::new();
            writeln!(s, "optimal total rank: {}", set.optimal_total().total())?;
            writeln!(
                s,
                "average rank: {} ({})",
                set.optimal_total(),
                set.optimal_total().decimal()
            )?;
            writeln!(s, "set size: {}", set.len())?;
            for a in set.members() {
                writeln!(s, "{a}")?;
            }
            out.write_all(s.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Audit(args) => run_audit(args, out),
        Command::Witness {
            part,
            pref,
            agent,
            source,
            limit,
        } => {
            let source = source.load()?;
            let inst = source.instance();
            let pref = parse_pref(&pref, inst)?;
            let agent = agent_index(agent, inst)?;
            let opponents = match part {
                Part::I => audit::witness_part_i(agent, &pref, inst)?,
                Part::Ii => audit::witness_part_ii(agent, &pref, inst)?,
            };
            let profile = opponents.with_report(&pref);
            let set = rm_set(inst, &profile, limit)?;
            let mut s = String::new();
            writeln!(s, "k*: {}", audit::k_star(&pref, inst))?;
            writeln!(s, "profile:")?;
            for (j, p) in profile.prefs().iter().enumerate() {
                let tag = if j == agent { "  (designated)" } else { "" };
                writeln!(s, "  agent {}: {p}{tag}", j + 1)?;
            }
            writeln!(
                s,
                "optimal set ({} members, total {}):",
                set.len(),
                set.optimal_total().total()
            )?;
            for a in set.members() {
                writeln!(s, "  {a}")?;
            }
            match part {
                Part::I => writeln!(s, "rho_bar: {}", set.rho_bar(agent, &pref))?,
                Part::Ii => writeln!(s, "rho_under: {}", set.rho_under(agent, &pref))?,
            }
            out.write_all(s.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Lemma1 {
            pref,
            source,
            limit,
        } => {
            let source = source.load()?;
            let inst = source.instance();
            let prefs = match pref {
                Some(p) => vec![parse_pref(&p, inst)?],
                None => Preference::all(inst.n_objects()),
            };
            let mut s = String::new();
            let mut failed = false;
            for p in &prefs {
                let v = audit::verify_lemma1(p, inst, limit)?;
                match &v.failure {
                    None => writeln!(
                        s,
                        "[{p}] pass: k*={} optimal set size {}",
                        v.k_star, v.set_size
                    )?,
                    Some(f) => {
                        failed = true;
                        writeln!(s, "[{p}] FAIL: k*={} {f}", v.k_star)?
                    }
                }
            }
            out.write_all(s.as_bytes())?;
            Ok(if failed { EXIT_FOUND } else { EXIT_OK })
        }
    }
}

fn solve_text(f: &InstanceFile) -> anyhow::Result<String> {
    let (alloc, total) = solve_min_rank(&f.instance, &f.profile)?;
    let mut s = String::new();
    for (agent, &o) in alloc.assigned().iter().enumerate() {
        writeln!(
            s,
            "agent {} -> object {} (rank {})",
            agent + 1,
            o + 1,
            f.profile.pref(agent).rank(o)?
        )?;
    }
    writeln!(s, "total rank: {}", total.total())?;
    writeln!(s, "average rank: {} ({})", total, total.decimal())?;
    let hist: Vec<String> = rank_histogram(&f.profile, &alloc)
        .iter()
        .map(|c| c.to_string())
        .collect();
    writeln!(s, "rank histogram: {}", hist.join(" "))?;
    Ok(s)
}

fn run_audit(args: AuditArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let source = args.source.load()?;
    let inst = source.instance();
    let priorities = match &source {
        Source::File(f) => f.priorities.clone(),
        Source::Generated(_) => None,
    };
    let mech = match args.mechanism {
        MechanismArg::Rm => Mechanism::RankMinimizing,
        MechanismArg::Boston => Mechanism::Boston(
            priorities.ok_or_else(|| anyhow!("boston needs a priorities section in --file"))?,
        ),
        MechanismArg::Da => Mechanism::DeferredAcceptance(
            priorities.ok_or_else(|| anyhow!("da needs a priorities section in --file"))?,
        ),
    };
    let scope = if args.agent.eq_ignore_ascii_case("all") {
        AgentScope::All
    } else {
        let a: usize = args
            .agent
            .parse()
            .with_context(|| format!("--agent expects a number or `all`, got {:?}", args.agent))?;
        AgentScope::One(agent_index(a, inst)?)
    };
    let cfg = AuditConfig {
        limit: args.limit,
        budget: args.budget,
        workers: args.workers,
    };
    let report = audit::audit(&mech, inst, scope, &cfg)?;
    let rendered = match args.format {
        Format::Text => report::to_text(&report),
        Format::Csv => report::to_csv(&report),
    };
    match &args.report {
        Some(path) => {
            std::fs::write(path, &rendered)
                .with_context(|| format!("writing {}", path.display()))?;
            if args.format == Format::Text {
                out.write_all(rendered.as_bytes())?;
            } else {
                out.write_all(report::to_text(&report).as_bytes())?;
            }
        }
        None => out.write_all(rendered.as_bytes())?,
    }
    Ok(if report.obviously_manipulable {
        EXIT_FOUND
    } else {
        EXIT_OK
    })
}
