//! The `mpst` command line.
//!
//! Exit status: 0 when the property holds or a derivation/solution is
//! found, 1 when it fails or nothing is found, 2 on usage or input errors.

use crate::analysis::{bounded, deadlock_free_on, depth, lock_free_on};
use crate::frontend::{parse, print_global, SpecFile};
use crate::inference::{infer, infer_minimal, Budget, InferError, Outcome};
use crate::json::{self, AnalyzeParts};
use crate::metatheory::{check_file, MetaConfig};
use crate::random::{rng, DEFAULT_SEED};
use crate::semantics::explore_with_limit;
use crate::terms::GlobalGraph;
use crate::typing::typecheck;
use crate::{Participant, ParticipantSet, Session};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Debug, Parser)]
#[command(name = "mpst", version, about = "Partial multiparty session types")]
pub struct RunConfig {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Selectors {
    /// A `.mpst` file; without one only `End` and `Empty` are defined.
    pub file: Option<PathBuf>,
    /// Name of a global type (`End` is built in).
    #[arg(long, default_value = "G")]
    pub global: String,
    /// Name of a session (`Empty` is built in).
    #[arg(long, default_value = "M")]
    pub session: String,
    /// Name of an ignored set in the file, or participants separated by
    /// commas; `""` is the empty set.
    #[arg(long, default_value = "")]
    pub ignored: String,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Maximum derivation size (defaults to four times the goal count).
    #[arg(long)]
    pub max_size: Option<usize>,
    #[arg(long)]
    pub max_outcomes: Option<usize>,
    #[arg(long)]
    pub state_cap: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide `G ⊢_P M` and print the derivation or the rejection.
    Check(Selectors),
    /// Infer global types and ignored sets for a session.
    Infer {
        #[command(flatten)]
        sel: Selectors,
        /// Print only the solution with the smallest ignored set.
        #[arg(long)]
        minimal: bool,
        /// Print the type equations, p-set equations and conditions.
        #[arg(long)]
        show_equations: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Boundedness, depth, excluded lock/deadlock-freedom, state graphs.
    Analyze {
        #[command(flatten)]
        sel: Selectors,
        #[arg(long)]
        bounded: bool,
        /// Depth of this participant in the global type.
        #[arg(long, value_name = "PARTICIPANT")]
        depth: Option<String>,
        #[arg(long)]
        lockfree: bool,
        #[arg(long)]
        deadlockfree: bool,
        #[arg(long)]
        stategraph: bool,
        #[arg(long)]
        state_cap: Option<usize>,
    },
    /// Check the metatheory on every derivable combination in a file.
    Meta {
        file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Triples visited per starting triple.
        #[arg(long)]
        max_triples: Option<usize>,
    },
}

/// A failure that maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<T: std::fmt::Display> From<T> for UsageError {
    fn from(e: T) -> Self {
        UsageError(e.to_string())
    }
}

type CmdResult = Result<i32, UsageError>;

struct Inputs {
    spec: SpecFile,
}

impl Inputs {
    fn load(file: &Option<PathBuf>) -> Result<Self, UsageError> {
        let text = match file {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| UsageError(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let spec = parse(&text).map_err(|e| match file {
            Some(p) => UsageError(format!("{}: {e}", p.display())),
            None => UsageError(e.to_string()),
        })?;
        Ok(Inputs { spec })
    }

    fn global(&self, name: &str) -> Result<GlobalGraph, UsageError> {
        Ok(self.spec.resolve_global(name)?)
    }

    fn session(&self, name: &str) -> Result<Session, UsageError> {
        Ok(self.spec.resolve_session(name)?)
    }

    fn ignored(&self, text: &str) -> Result<ParticipantSet, UsageError> {
        Ok(self.spec.resolve_ignored(text)?)
    }
}

fn set_text(s: &ParticipantSet) -> String {
    let v: Vec<&str> = s.iter().map(|p| p.as_str()).collect();
    format!("{{{}}}", v.join(", "))
}

/// Parses `args` (program name first) and runs the command, writing the
/// report to `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_HOLDS
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&config, out) {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

pub fn execute(config: &RunConfig, out: &mut dyn Write) -> CmdResult {
    if config.format == Format::Dot
        && !matches!(
            config.command,
            Command::Analyze {
                stategraph: true,
                ..
            }
        )
    {
        return Err(UsageError(
            "--format dot is only available for analyze --stategraph".into(),
        ));
    }
    match &config.command {
        Command::Check(sel) => cmd_check(config.format, sel, out),
        Command::Infer {
            sel,
            minimal,
            show_equations,
            budget,
        } => cmd_infer(config.format, sel, *minimal, *show_equations, budget, out),
        Command::Analyze {
            sel,
            bounded,
            depth,
            lockfree,
            deadlockfree,
            stategraph,
            state_cap,
        } => {
            let want = Wanted {
                bounded: *bounded,
                depth: depth.clone(),
                lockfree: *lockfree,
                deadlockfree: *deadlockfree,
                stategraph: *stategraph,
            };
            cmd_analyze(
                config.format,
                sel,
                want,
                state_cap.unwrap_or(crate::semantics::DEFAULT_STATE_LIMIT),
                out,
            )
        }
        Command::Meta {
            file,
            seed,
            max_triples,
        } => cmd_meta(config.format, file, *seed, *max_triples, out),
    }
}

pub fn cmd_check(format: Format, sel: &Selectors, out: &mut dyn Write) -> CmdResult {
    let inp = Inputs::load(&sel.file)?;
    let g = inp.global(&sel.global)?;
    let m = inp.session(&sel.session)?;
    let ignored = inp.ignored(&sel.ignored)?;
    let result = typecheck(&g, &m, &ignored);
    match format {
        Format::Json => {
            let v = json::check_report(&sel.global, &sel.session, &ignored, &result);
            out.write_all(json::render(&v).as_bytes())?;
        }
        _ => match &result {
            Ok(d) => {
                writeln!(
                    out,
                    "accepted: {} ⊢_{} {}",
                    sel.global,
                    set_text(&ignored),
                    sel.session
                )?;
                writeln!(out, "{}", print_global(&d.global).trim_end())?;
                out.write_all(d.to_text().as_bytes())?;
            }
            Err(r) => {
                writeln!(
                    out,
                    "rejected: {} ⊢_{} {}",
                    sel.global,
                    set_text(&ignored),
                    sel.session
                )?;
                writeln!(out, "{r}")?;
            }
        },
    }
    Ok(if result.is_ok() {
        EXIT_HOLDS
    } else {
        EXIT_FAILS
    })
}

fn budget_from(args: &BudgetArgs) -> Result<Budget, UsageError> {
    let mut b = Budget::from_env().map_err(|e| UsageError(format!("MPST_BUDGET: {e}")))?;
    let positive = |what: &str, n: usize| {
        if n == 0 {
            Err(UsageError(format!("--{what} must be positive")))
        } else {
            Ok(n)
        }
    };
    if let Some(n) = args.max_size {
        b.max_size = Some(positive("max-size", n)?);
    }
    if let Some(n) = args.max_outcomes {
        b.max_outcomes = positive("max-outcomes", n)?;
    }
    if let Some(n) = args.state_cap {
        b.state_cap = positive("state-cap", n)?;
    }
    Ok(b)
}

fn write_outcome(
    out: &mut dyn Write,
    global: &GlobalGraph,
    ignored: &ParticipantSet,
    o: &Outcome,
    equations: bool,
) -> std::io::Result<()> {
    writeln!(out, "{}", print_global(global).trim_end())?;
    writeln!(out, "ignored = {}", set_text(ignored))?;
    if equations {
        writeln!(out, "-- equations (size {}, weak {})", o.size, o.weak)?;
        out.write_all(o.equations_text().as_bytes())?;
    }
    Ok(())
}

pub fn cmd_infer(
    format: Format,
    sel: &Selectors,
    minimal: bool,
    equations: bool,
    budget: &BudgetArgs,
    out: &mut dyn Write,
) -> CmdResult {
    let inp = Inputs::load(&sel.file)?;
    let m = inp.session(&sel.session)?;
    let budget = budget_from(budget)?;
    if minimal {
        let res = infer_minimal(&m, &budget);
        match format {
            Format::Json => out.write_all(
                json::render(&json::minimal_report(&sel.session, &res, equations)).as_bytes(),
            )?,
            _ => {
                match &res {
                    Ok(min) => {
                        write_outcome(out, &min.global, &min.ignored, &min.outcome, equations)?;
                        if min.stats.truncated {
                            writeln!(out, "(search truncated: smaller ignored sets may exist beyond the budget)")?;
                        }
                    }
                    Err(InferError::NoSolutionWithinBudget { .. }) => {
                        writeln!(out, "{}", res.as_ref().expect_err("error branch"))?;
                    }
                }
            }
        }
        return Ok(if res.is_ok() { EXIT_HOLDS } else { EXIT_FAILS });
    }
    let inf = infer(&m, &budget);
    match format {
        Format::Json => out.write_all(
            json::render(&json::infer_report(&sel.session, &inf, equations)).as_bytes(),
        )?,
        _ => {
            for (i, o) in inf.outcomes.iter().enumerate() {
                writeln!(out, "== solution {}", i + 1)?;
                write_outcome(out, &o.global(), o.ignored(), &o.outcome, equations)?;
            }
            if inf.outcomes.is_empty() {
                writeln!(out, "no solution within the budget")?;
            }
            if inf.stats.truncated {
                writeln!(out, "(search truncated)")?;
            }
        }
    }
    Ok(if inf.outcomes.is_empty() {
        EXIT_FAILS
    } else {
        EXIT_HOLDS
    })
}

struct Wanted {
    bounded: bool,
    depth: Option<String>,
    lockfree: bool,
    deadlockfree: bool,
    stategraph: bool,
}

fn cmd_analyze(
    format: Format,
    sel: &Selectors,
    mut want: Wanted,
    cap: usize,
    out: &mut dyn Write,
) -> CmdResult {
    if !(want.bounded
        || want.depth.is_some()
        || want.lockfree
        || want.deadlockfree
        || want.stategraph)
    {
        return Err(UsageError(
            "nothing to analyze: pass --bounded, --depth, --lockfree, --deadlockfree or --stategraph".into(),
        ));
    }
    if format == Format::Dot
        && (want.bounded || want.depth.is_some() || want.lockfree || want.deadlockfree)
    {
        return Err(UsageError(
            "--format dot prints only the state graph".into(),
        ));
    }
    let inp = Inputs::load(&sel.file)?;
    let mut parts = AnalyzeParts::default();
    let mut holds = true;
    let mut text = String::new();
    if want.bounded || want.depth.is_some() {
        let g = inp.global(&sel.global)?;
        parts.global = Some(sel.global.clone());
        if want.bounded {
            let b = bounded(&g);
            holds &= b.holds;
            text.push_str(&format!("bounded: {}", b.holds));
            if let Some((n, p)) = &b.witness {
                text.push_str(&format!(
                    " (depth of {p} at {} is infinite)",
                    crate::typing::global_name(&g, *n)
                ));
            }
            text.push('\n');
            parts.bounded = Some(json::bounded_json(&g, &b));
        }
        if let Some(p) = want.depth.take() {
            let p = Participant::try_new(&p)?;
            let d = depth(&g, &p);
            text.push_str(&format!("depth of {p}: {d}\n"));
            parts.depth = Some(serde_json::json!({ "participant": p, "value": d }));
        }
    }
    if want.lockfree || want.deadlockfree || want.stategraph {
        let m = inp.session(&sel.session)?;
        let ignored = inp.ignored(&sel.ignored)?;
        parts.session = Some(sel.session.clone());
        let sg = explore_with_limit(&m, cap)?;
        if want.lockfree {
            let v = lock_free_on(&sg, &ignored);
            holds &= v.holds;
            text.push_str(&verdict_text("lock-freedom", &v));
            parts.lock_freedom = Some(json::liveness_json(&v));
        }
        if want.deadlockfree {
            let v = deadlock_free_on(&sg, &ignored);
            holds &= v.holds;
            text.push_str(&verdict_text("deadlock-freedom", &v));
            parts.deadlock_freedom = Some(json::liveness_json(&v));
        }
        if want.stategraph {
            if format == Format::Dot {
                out.write_all(sg.to_dot().as_bytes())?;
                return Ok(EXIT_HOLDS);
            }
            text.push_str(&format!("{} states, {} edges\n", sg.len(), sg.edges.len()));
            for (i, s) in sg.states.iter().enumerate() {
                text.push_str(&format!("  s{i}: {s}\n"));
            }
            for (a, l, b) in &sg.edges {
                text.push_str(&format!("  s{a} --{l}--> s{b}\n"));
            }
            parts.state_graph = Some(json::state_graph_json(&sg));
        }
    }
    match format {
        Format::Json => out.write_all(json::render(&json::analyze_report(parts)).as_bytes())?,
        _ => out.write_all(text.as_bytes())?,
    }
    Ok(if holds { EXIT_HOLDS } else { EXIT_FAILS })
}

fn verdict_text(name: &str, v: &crate::analysis::LivenessVerdict) -> String {
    let mut s = format!(
        "{name} ignoring {}: {}\n",
        set_text(&v.ignored),
        if v.holds { "holds" } else { "fails" }
    );
    if let Some(w) = &v.witness {
        s.push_str(&format!(
            "  {} is stuck in state {}: {}\n",
            w.participant, w.state, w.session
        ));
    }
    if let Some(n) = &v.note {
        s.push_str(&format!("  note: {n}\n"));
    }
    s
}

fn cmd_meta(
    format: Format,
    file: &Option<PathBuf>,
    seed: u64,
    max_triples: Option<usize>,
    out: &mut dyn Write,
) -> CmdResult {
    let inp = Inputs::load(file)?;
    let mut cfg = MetaConfig::default();
    if let Some(n) = max_triples {
        cfg.max_triples = n;
    }
    let entries = check_file(&inp.spec, &mut rng(seed), &cfg);
    let passed = entries.iter().all(|e| e.report.passed());
    match format {
        Format::Json => {
            out.write_all(json::render(&json::meta_report(seed, &entries)).as_bytes())?
        }
        _ => {
            for e in &entries {
                let r = &e.report;
                write!(out, "{} ⊢_{} {}: ", e.global, e.ignored, e.session)?;
                if !r.accepted {
                    match &e.rejection {
                        Some(rej) => {
                            writeln!(out, "not derivable ({:?}), nothing to check", rej.kind)?
                        }
                        None => writeln!(out, "not derivable, nothing to check")?,
                    }
                    continue;
                }
                writeln!(
                    out,
                    "{} ({} triples, {} session steps, {} global steps, {} replacements{})",
                    if r.passed() { "ok" } else { "VIOLATED" },
                    r.triples,
                    r.session_steps,
                    r.global_steps,
                    r.replacements,
                    if r.truncated { ", truncated" } else { "" }
                )?;
                for v in &r.violations {
                    writeln!(out, "  {:?}: {}", v.obligation, v.detail)?;
                }
            }
            if entries.is_empty() {
                writeln!(out, "nothing to check")?;
            }
        }
    }
    Ok(if passed { EXIT_HOLDS } else { EXIT_FAILS })
}
