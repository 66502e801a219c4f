//! Command-line front end: `check`, `test`, `run` and `soundness`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::checker::{check_program, CheckConfig, FunctionVerdict, Mutation, Verdict, VerdictJson};
use crate::oracle::{
    enumerate_initial_pairs, frame_vars, test_program, Counterexample, EnumerationBudget, Frame, ProgramReport,
    StateJson,
};
use crate::parser::parse;
use crate::program::SourceProgram;
use crate::semantics::RunOutcome;
use crate::types::{Continuation, MachineState, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "vstflow", version, about = "Information-flow checker, interpreter and two-run tester")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,
    /// Step budget per run.
    #[arg(long, global = true)]
    pub fuel: Option<usize>,
    /// Steps compared by the sync check.
    #[arg(long, global = true)]
    pub sync_bound: Option<usize>,
    /// Integer range `0..k` for unconstrained values.
    #[arg(long, global = true, value_parser = parse_domain)]
    pub domain: Option<Domain>,
    /// Cap on enumerated state pairs.
    #[arg(long, global = true)]
    pub max_pairs: Option<usize>,
    /// Selects among candidate initial states for `run`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every function against its specification.
    Check { files: Vec<PathBuf> },
    /// Search for non-interference counterexamples by two-run testing.
    Test {
        files: Vec<PathBuf>,
        /// Only run the direct-style tester.
        #[arg(long)]
        direct_only: bool,
    },
    /// Interpret one function and print its step trace.
    Run {
        file: PathBuf,
        #[arg(long)]
        function: Option<String>,
        /// Counterexample (or test report) JSON to take the initial state from.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Which state of the counterexample pair to run.
        #[arg(long, value_enum, default_value_t = Side::Left)]
        side: Side,
    },
    /// Check the checker against the tester over a corpus directory.
    Soundness {
        #[arg(env = "VSTFLOW_CORPUS")]
        corpus: Option<PathBuf>,
        #[arg(long, hide = true)]
        mutate: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Left,
    Right,
}

/// Values of an inclusive integer range given as `lo..hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain(pub Vec<Value>);

fn parse_domain(s: &str) -> Result<Domain, String> {
    let (lo, hi) = s.split_once("..").ok_or("expected a range like 0..3")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if hi < lo || hi - lo > 64 {
        return Err(format!("range {lo}..{hi} is empty or too large"));
    }
    Ok(Domain((lo..=hi).map(Value::Int).collect()))
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;

impl Cli {
    pub fn budget(&self) -> EnumerationBudget {
        let mut b = EnumerationBudget::default();
        if let Some(d) = &self.domain {
            b.value_domain = d.0.clone();
        }
        if let Some(f) = self.fuel {
            b.fuel = f;
        }
        if let Some(s) = self.sync_bound {
            b.sync_bound = s;
        }
        if let Some(m) = self.max_pairs {
            b.max_pairs = m;
        }
        b
    }

    fn check_config(&self, mutation: Option<Mutation>) -> CheckConfig {
        let mut cfg = CheckConfig { mutation, ..Default::default() };
        if let Some(d) = &self.domain {
            cfg.value_domain = d.0.clone();
        }
        cfg
    }
}

/// Result of a subcommand: the text to print and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

fn load(path: &Path) -> anyhow::Result<SourceProgram> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn run(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Check { files } => cmd_check(cli, files),
        Command::Test { files, direct_only } => cmd_test(cli, files, !direct_only),
        Command::Run { file, function, replay, side } => cmd_run(cli, file, function.as_deref(), replay.as_deref(), *side),
        Command::Soundness { corpus, mutate } => cmd_soundness(cli, corpus.as_deref(), mutate.as_deref()),
    };
    result.unwrap_or_else(|e| Outcome { stdout: String::new(), stderr: format!("error: {e:#}\n"), code: EXIT_INPUT })
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = run(&cli);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    ExitCode::from(out.code)
}

#[derive(Serialize)]
struct FileVerdict<'a> {
    file: String,
    #[serde(flatten)]
    verdict: &'a VerdictJson,
}

fn check_file(path: &Path, cfg: &CheckConfig) -> anyhow::Result<Vec<FunctionVerdict>> {
    let p = load(path)?;
    Ok(check_program(&p, &p.specs(), cfg)?)
}

fn cmd_check(cli: &Cli, files: &[PathBuf]) -> anyhow::Result<Outcome> {
    if files.is_empty() {
        bail!("no input files");
    }
    let cfg = cli.check_config(None);
    let mut all = Vec::new();
    for f in files {
        all.push((f.display().to_string(), check_file(f, &cfg)?));
    }
    let accepted = all.iter().all(|(_, vs)| vs.iter().all(|v| v.verdict.is_accepted()));
    let stdout = match cli.format {
        Format::Json => {
            let js: Vec<(String, VerdictJson)> =
                all.iter().flat_map(|(f, vs)| vs.iter().map(move |v| (f.clone(), v.to_json()))).collect();
            json(&js.iter().map(|(file, v)| FileVerdict { file: file.clone(), verdict: v }).collect::<Vec<_>>())
        }
        Format::Human => {
            let mut s = String::new();
            for (file, vs) in &all {
                for v in vs {
                    match &v.verdict {
                        Verdict::Accepted(d) => {
                            let _ = writeln!(s, "{file}: {}: accepted ({} rule applications)", v.function, d.size());
                        }
                        Verdict::Rejected(r) => {
                            let _ = writeln!(s, "{file}: {}: rejected: {r}", v.function);
                        }
                    }
                }
            }
            s
        }
    };
    Ok(Outcome { stdout, stderr: String::new(), code: if accepted { EXIT_OK } else { EXIT_FAIL } })
}

fn report_code(r: &ProgramReport) -> u8 {
    match r.verdict {
        "pass" => EXIT_OK,
        "counterexample" => EXIT_FAIL,
        _ => EXIT_INCONCLUSIVE,
    }
}

fn human_report(r: &ProgramReport) -> String {
    let mut s = format!("{}: {} ({} pairs", r.program, r.verdict, r.pairs_checked);
    if r.truncated {
        s.push_str(", truncated");
    }
    s.push_str(")\n");
    if r.pairs_checked == 0 && r.verdict == "pass" {
        s.push_str("  warning: no low-equivalent initial pairs; the verdict is vacuous\n");
    }
    if let Some(why) = &r.inconclusive {
        let _ = writeln!(s, "  {why}");
    }
    if let Some(c) = &r.counterexample {
        let f = c.function.as_ref().map(|f| f.to_string()).unwrap_or_default();
        let _ = writeln!(s, "  function {f}: {}", c.divergence_point.detail);
        let _ = writeln!(s, "  x  = {}", serde_json::to_string(&c.x).unwrap_or_default());
        let _ = writeln!(s, "  x' = {}", serde_json::to_string(&c.x_prime).unwrap_or_default());
        let _ = writeln!(s, "  s1  = {}", serde_json::to_string(&c.s1).unwrap_or_default());
        let _ = writeln!(s, "  s1' = {}", serde_json::to_string(&c.s1_prime).unwrap_or_default());
    }
    s
}

fn cmd_test(cli: &Cli, files: &[PathBuf], guard_style: bool) -> anyhow::Result<Outcome> {
    if files.is_empty() {
        bail!("no input files");
    }
    let budget = cli.budget();
    let mut reports = Vec::new();
    for f in files {
        let p = load(f)?;
        reports.push(test_program(&f.display().to_string(), &p, &budget, guard_style));
    }
    let code = if reports.iter().any(|r| report_code(r) == EXIT_FAIL) {
        EXIT_FAIL
    } else if reports.iter().any(|r| report_code(r) == EXIT_INCONCLUSIVE) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    let stdout = match (cli.format, reports.as_slice()) {
        (Format::Json, [one]) => json(one),
        (Format::Json, many) => json(&many),
        (Format::Human, rs) => rs.iter().map(human_report).collect(),
    };
    Ok(Outcome { stdout, stderr: String::new(), code })
}

fn replay_state(path: &Path, side: Side) -> anyhow::Result<(Option<String>, StateJson)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let cx = v.get("counterexample").cloned().unwrap_or(v);
    let cx: Counterexample = serde_json::from_value(cx).context("not a counterexample")?;
    let state = match side {
        Side::Left => cx.s1,
        Side::Right => cx.s1_prime,
    };
    Ok((cx.function.map(|f| f.to_string()), state))
}

fn cmd_run(
    cli: &Cli,
    file: &Path,
    function: Option<&str>,
    replay: Option<&Path>,
    side: Side,
) -> anyhow::Result<Outcome> {
    let p = load(file)?;
    let (replayed_fn, state) = match replay {
        Some(r) => {
            let (f, s) = replay_state(r, side)?;
            (f, Some(s))
        }
        None => (None, None),
    };
    let name = function.map(str::to_string).or(replayed_fn);
    let f = match &name {
        Some(n) => p.function(n).ok_or_else(|| anyhow!("no function `{n}`"))?,
        None => p.functions.first().ok_or_else(|| anyhow!("no functions"))?,
    };
    let machine = p.machine();
    let budget = cli.budget();
    let state = match state {
        Some(s) => s,
        None => {
            let (vars, init) = frame_vars(f);
            let frame = Frame { machine: &machine, vars: &vars, initialized: &init, heap_size: p.heap.size };
            let pairs = enumerate_initial_pairs(&f.spec.logicals, &f.spec.pre, &frame, &budget);
            if pairs.witnesses.is_empty() {
                bail!("precondition of `{}` has no witness state", f.name);
            }
            let i = (cli.seed % pairs.witnesses.len() as u64) as usize;
            StateJson::of(&pairs.witnesses[i].state)
        }
    };
    let start = MachineState::new(state.env, vec![Continuation::seq(f.body.clone())], state.mem);
    let (trace, outcome) = machine.trace(&start, budget.fuel);
    let (code, summary) = match &outcome {
        RunOutcome::Done { state, steps } => {
            (EXIT_OK, format!("done after {steps} steps: {}", serde_json::to_string(&StateJson::of(state))?))
        }
        RunOutcome::Stuck { steps, reason, .. } => (EXIT_FAIL, format!("stuck after {steps} steps: {reason}")),
        RunOutcome::FuelExhausted { .. } => (EXIT_INCONCLUSIVE, format!("fuel {} exhausted", budget.fuel)),
    };
    let stdout = match cli.format {
        Format::Json => json(&trace),
        Format::Human => {
            let mut s = String::new();
            for t in &trace {
                let _ = writeln!(
                    s,
                    "{:>5} {:<9} env {} mem {}",
                    t.step_index,
                    t.head_continuation_kind,
                    serde_json::to_string(&t.env_delta)?,
                    serde_json::to_string(&t.mem_delta)?
                );
            }
            s + &summary + "\n"
        }
    };
    let stderr = if cli.format == Format::Json { summary + "\n" } else { String::new() };
    Ok(Outcome { stdout, stderr, code })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SoundnessRow {
    pub file: String,
    pub checker_verdict: &'static str,
    pub oracle_verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<&'static str>,
    pub pairs_checked: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundnessReport {
    pub matrix: Vec<SoundnessRow>,
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Corpus files (`*.c`) in name order.
pub fn corpus_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read corpus {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn soundness(files: &[PathBuf], cfg: &CheckConfig, budget: &EnumerationBudget) -> anyhow::Result<SoundnessReport> {
    let rows: Vec<anyhow::Result<SoundnessRow>> = files
        .par_iter()
        .map(|path| {
            let p = load(path)?;
            let vs = check_program(&p, &p.specs(), cfg)?;
            let rule = vs.iter().find_map(|v| match &v.verdict {
                Verdict::Rejected(r) => Some(r.rule),
                Verdict::Accepted(_) => None,
            });
            let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into());
            let r = test_program(&name, &p, budget, true);
            Ok(SoundnessRow {
                file: name,
                checker_verdict: if rule.is_none() { "accepted" } else { "rejected" },
                oracle_verdict: r.verdict,
                rule,
                pairs_checked: r.pairs_checked,
            })
        })
        .collect();
    let matrix = rows.into_iter().collect::<anyhow::Result<Vec<_>>>()?;
    let violations = matrix
        .iter()
        .filter(|r| r.checker_verdict == "accepted" && r.oracle_verdict == "counterexample")
        .map(|r| r.file.clone())
        .collect();
    let warning = files.is_empty().then(|| "corpus is empty; nothing was checked".to_string());
    Ok(SoundnessReport { matrix, violations, warning })
}

fn cmd_soundness(cli: &Cli, corpus: Option<&Path>, mutate: Option<&str>) -> anyhow::Result<Outcome> {
    let dir = corpus.ok_or_else(|| anyhow!("no corpus directory (argument or VSTFLOW_CORPUS)"))?;
    let mutation = match mutate {
        Some(m) => Some(Mutation::from_name(m).ok_or_else(|| anyhow!("unknown mutation `{m}`"))?),
        None => None,
    };
    let files = corpus_files(dir)?;
    let report = soundness(&files, &cli.check_config(mutation), &cli.budget())?;
    let code = if report.violations.is_empty() { EXIT_OK } else { EXIT_FAIL };
    let stderr = report.warning.as_ref().map(|w| format!("warning: {w}\n")).unwrap_or_default();
    let stdout = match cli.format {
        Format::Json => json(&report),
        Format::Human => {
            let mut s = String::new();
            for r in &report.matrix {
                let _ = writeln!(
                    s,
                    "{:<40} {:<9} {:<15} {}",
                    r.file,
                    r.checker_verdict,
                    r.oracle_verdict,
                    r.rule.unwrap_or("")
                );
            }
            for v in &report.violations {
                let _ = writeln!(s, "VIOLATION: {v} is accepted but refuted");
            }
            s
        }
    };
    Ok(Outcome { stdout, stderr, code })
}
