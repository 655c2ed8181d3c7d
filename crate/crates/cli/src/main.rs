use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use webnav::mockweb::load_scenario;
use webnav::runner::{
    compile_plan, eval_suite, load_suite, parse_reward_spec, replay_trace, run_task, PolicySpec,
    ReplayOutcome, TaskRef,
};
use webnav::search::SearchConfig;
use webnav::trace::Trace;

#[derive(Parser)]
#[command(name = "webnav", version, about = "Action-aware tree search over a simulated web")]
struct Cli {
    /// Base directory for relative paths.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one task.
    Run(RunArgs),
    /// Re-execute a trace and check every observation digest.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run a suite and print its report.
    Eval(EvalArgs),
    /// Turn a plan file into scripted policy and reward tables.
    CompilePlan {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        policy_out: PathBuf,
        #[arg(long)]
        reward_out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SearchFlags {
    #[arg(long, default_value_t = 20)]
    step_budget: usize,
    #[arg(long, default_value_t = 4)]
    frontier_budget: usize,
    #[arg(long, default_value_t = 3)]
    branching: usize,
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    #[arg(long, default_value_t = 2)]
    kt: u32,
    #[arg(long, default_value_t = 1)]
    kd: u32,
    #[arg(long, default_value_t = 2)]
    min_queue: usize,
    #[arg(long, default_value_t = 5)]
    max_retry: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only execute from the current node; never backtrack.
    #[arg(long)]
    no_backtrack: bool,
    /// Store full observation text in traces.
    #[arg(long)]
    trace_full: bool,
}

impl SearchFlags {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            step_budget: self.step_budget,
            frontier_budget: self.frontier_budget,
            branching: self.branching,
            max_depth: self.max_depth,
            k_t: self.kt,
            k_d: self.kd,
            min_queue: self.min_queue,
            max_retry: self.max_retry,
            seed: self.seed,
            backtracking: !self.no_backtrack,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    task: String,
    /// `scripted:PATH` or `random`.
    #[arg(long)]
    policy: String,
    /// `scripted:PATH`.
    #[arg(long)]
    reward: String,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    search: SearchFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Suite directory holding suite.json, or the manifest itself.
    #[arg(long)]
    suite: PathBuf,
    /// Also solve at step budgets 5, 10, 15 and 20.
    #[arg(long)]
    sweep: bool,
    /// Write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one trace per task into this directory.
    #[arg(long)]
    traces: Option<PathBuf>,
    #[command(flatten)]
    search: SearchFlags,
}

fn under(workdir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        workdir.join(p)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(workdir: &Path, a: RunArgs) -> Result<ExitCode> {
    let policy = match a.policy.parse::<PolicySpec>()? {
        PolicySpec::Scripted(p) => PolicySpec::Scripted(under(workdir, &p)),
        PolicySpec::Random => PolicySpec::Random,
    };
    let task = TaskRef {
        id: a.task.clone(),
        scenario: under(workdir, &a.scenario),
        task: a.task,
        policy,
        reward: under(workdir, &parse_reward_spec(&a.reward)?),
    };
    let out = run_task(&task, &a.search.config(), a.search.trace_full)?;
    if let Some(path) = a.trace {
        write(&under(workdir, &path), &out.trace.to_jsonl())?;
    }
    let r = &out.result;
    println!(
        "task={} success={} steps={} backtracks={} answer={}",
        task.id,
        r.success,
        r.counters.steps,
        r.counters.backtracks_committed,
        r.answer.as_deref().unwrap_or("-")
    );
    Ok(if r.success { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn replay(workdir: &Path, trace: &Path, scenario: &Path) -> Result<ExitCode> {
    let path = under(workdir, trace);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let events = Trace::parse_jsonl(&text).context("parsing trace")?;
    let scenario = Arc::new(load_scenario(under(workdir, scenario))?);
    match replay_trace(&events, scenario) {
        ReplayOutcome::Verified { executes } => {
            println!("verified {executes} executions");
            Ok(ExitCode::SUCCESS)
        }
        ReplayOutcome::Diverged { seq, reason } => {
            println!("diverged at seq {seq}: {reason}");
            Ok(ExitCode::from(1))
        }
        ReplayOutcome::Truncated(reason) => {
            eprintln!("invalid trace: {reason}");
            Ok(ExitCode::from(2))
        }
    }
}

fn eval(workdir: &Path, a: EvalArgs) -> Result<ExitCode> {
    let mut manifest = under(workdir, &a.suite);
    if manifest.is_dir() {
        manifest.push("suite.json");
    }
    let tasks = load_suite(&manifest)?;
    let run = eval_suite(&tasks, &a.search.config(), a.sweep, a.search.trace_full)?;
    print!("{}", run.report.render_table());
    if let Some(out) = a.out {
        write(&under(workdir, &out), &serde_json::to_string_pretty(&run.report)?)?;
    }
    if let Some(dir) = a.traces {
        let dir = under(workdir, &dir);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (id, trace) in &run.traces {
            write(&dir.join(format!("{}.jsonl", id.replace('/', "_"))), &trace.to_jsonl())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn compile(workdir: &Path, plan: &Path, policy_out: &Path, reward_out: &Path) -> Result<ExitCode> {
    let compiled = compile_plan(&under(workdir, plan))?;
    write(&under(workdir, policy_out), &compiled.policy_json())?;
    write(&under(workdir, reward_out), &compiled.reward_json())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let w = &cli.workdir;
    let result = match cli.command {
        Command::Run(a) => run(w, a),
        Command::Replay { trace, scenario } => replay(w, &trace, &scenario),
        Command::Eval(a) => eval(w, a),
        Command::CompilePlan {
            plan,
            policy_out,
            reward_out,
        } => compile(w, &plan, &policy_out, &reward_out),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
