//! Task runs, trace replay, suite evaluation, and plan compilation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::parse_action;
use crate::backtrack::reapply_committed;
use crate::digest::{obs_digest, trajectory_digest};
use crate::generator::{GenProvider, PolicyError, RandomPolicy, ScriptedPolicy};
use crate::mockweb::{load_scenario, EnvHandle, MockWebError, Scenario};
use crate::reward::{make_scripted_provider, ChecklistProbs, RewardError, ScriptedReward};
use crate::search::{run_search, ConfigError, FailureReason, SearchConfig, SearchResult};
use crate::trace::{BacktrackOutcomeKind, EventKind, Trace, TraceEvent};

pub const SWEEP_BUDGETS: [usize; 4] = [5, 10, 15, 20];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] MockWebError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Spec(String),
    #[error("suite error: {0}")]
    Suite(String),
    #[error("plan error: {0}")]
    Plan(String),
    #[error("{path}: {error}")]
    Io { path: PathBuf, error: String },
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        error: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Scripted(PathBuf),
    Random,
}

impl FromStr for PolicySpec {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            _ if s == "random" => Ok(PolicySpec::Random),
            Some(("scripted", path)) if !path.is_empty() => Ok(PolicySpec::Scripted(path.into())),
            _ => Err(RunError::Spec(format!(
                "policy must be 'random' or 'scripted:PATH', got '{s}'"
            ))),
        }
    }
}

/// `scripted:PATH` for the reward table.
pub fn parse_reward_spec(s: &str) -> Result<PathBuf, RunError> {
    match s.split_once(':') {
        Some(("scripted", path)) if !path.is_empty() => Ok(path.into()),
        _ => Err(RunError::Spec(format!("reward must be 'scripted:PATH', got '{s}'"))),
    }
}

/// Everything needed to run one task.
#[derive(Debug, Clone)]
pub struct TaskRef {
    pub id: String,
    pub scenario: PathBuf,
    pub task: String,
    pub policy: PolicySpec,
    pub reward: PathBuf,
}

pub struct RunOutput {
    pub result: SearchResult,
    pub trace: Trace,
}

pub fn run_task(task_ref: &TaskRef, cfg: &SearchConfig, full_trace: bool) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let scenario = Arc::new(load_scenario(&task_ref.scenario)?);
    let reward = make_scripted_provider(&task_ref.reward)?;
    let mut policy: Box<dyn GenProvider> = match &task_ref.policy {
        PolicySpec::Scripted(p) => Box::new(ScriptedPolicy::load(p)?),
        PolicySpec::Random => Box::new(RandomPolicy::new(cfg.seed)),
    };
    let task = scenario
        .task(&task_ref.task)
        .cloned()
        .ok_or_else(|| MockWebError::NoSuchTask(task_ref.task.clone()))?;
    let (mut env, obs) = EnvHandle::reset(scenario, &task.id, cfg.seed)?;
    let mut trace = Trace::new(full_trace);
    let result = run_search(&mut env, obs, &task, cfg, policy.as_mut(), &reward, &mut trace);
    Ok(RunOutput { result, trace })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayOutcome {
    Verified { executes: usize },
    Diverged { seq: u64, reason: String },
    Truncated(String),
}

/// Re-execute a trace against a fresh environment and check every recorded
/// observation digest.
pub fn replay_trace(events: &[TraceEvent], scenario: Arc<Scenario>) -> ReplayOutcome {
    let Some(TraceEvent {
        event: EventKind::Result { task, seed, .. },
        ..
    }) = events.last()
    else {
        return ReplayOutcome::Truncated("trace has no final result event".into());
    };
    if events.windows(2).any(|w| w[1].seq <= w[0].seq) {
        return ReplayOutcome::Truncated("sequence numbers are not increasing".into());
    }
    if events[..events.len() - 1]
        .iter()
        .any(|e| matches!(e.event, EventKind::Result { .. }))
    {
        return ReplayOutcome::Truncated("result event is not last".into());
    }
    let mut env = match EnvHandle::reset(scenario, task, *seed) {
        Ok((env, _)) => env,
        Err(e) => return ReplayOutcome::Truncated(e.to_string()),
    };

    let mut executes = 0;
    for ev in events {
        let diverged = |reason: String| ReplayOutcome::Diverged { seq: ev.seq, reason };
        match &ev.event {
            EventKind::Execute {
                action,
                rng,
                network,
                obs_digest: digest,
                error,
                ..
            } => {
                executes += 1;
                let Ok(action) = parse_action(action) else {
                    return diverged(format!("unparseable action '{action}'"));
                };
                env.set_rng_position(*rng);
                match (env.execute(&action), error) {
                    (Ok(step), None) => {
                        if &step.network != network {
                            return diverged("network log differs".into());
                        }
                        if digest.as_deref() != Some(obs_digest(&step.observation).as_str()) {
                            return diverged("observation digest differs".into());
                        }
                    }
                    (Err(e), Some(expected)) if &e.0 == expected => {}
                    (Err(e), _) => return diverged(format!("execution error: {e}")),
                    (Ok(_), Some(expected)) => {
                        return diverged(format!("expected error '{expected}' did not occur"))
                    }
                }
            }
            EventKind::Backtrack {
                outcome: BacktrackOutcomeKind::Committed,
                fork_tabs,
                active,
                replay,
                rng,
                obs_digest: digest,
                ..
            } => {
                let actions: Result<Vec<_>, _> = replay.iter().map(|a| parse_action(a)).collect();
                let Ok(actions) = actions else {
                    return diverged("unparseable replay action".into());
                };
                env.set_rng_position(*rng);
                if let Err(e) = reapply_committed(&mut env, fork_tabs, *active, &actions) {
                    return diverged(format!("backtrack replay failed: {e}"));
                }
                if digest.as_deref() != Some(obs_digest(&env.observe()).as_str()) {
                    return diverged("post-backtrack observation differs".into());
                }
            }
            _ => {}
        }
    }
    ReplayOutcome::Verified { executes }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteEntry {
    #[serde(default)]
    pub id: Option<String>,
    pub scenario: String,
    pub task: String,
    pub policy: String,
    pub reward: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub tasks: Vec<SuiteEntry>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_suite(manifest: &Path) -> Result<Vec<TaskRef>, RunError> {
    let text = read(manifest)?;
    let m: SuiteManifest =
        serde_json::from_str(&text).map_err(|e| RunError::Suite(format!("{}: {e}", manifest.display())))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    m.tasks
        .into_iter()
        .map(|e| {
            let policy = match e.policy.parse::<PolicySpec>()? {
                PolicySpec::Scripted(p) => PolicySpec::Scripted(resolve(base, &p)),
                PolicySpec::Random => PolicySpec::Random,
            };
            let scenario = resolve(base, Path::new(&e.scenario));
            let stem = scenario
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("scenario")
                .trim_end_matches(".scenario")
                .to_string();
            Ok(TaskRef {
                id: e.id.unwrap_or_else(|| format!("{stem}/{}", e.task)),
                scenario,
                task: e.task,
                policy,
                reward: resolve(base, &parse_reward_spec(&e.reward)?),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub id: String,
    pub success: bool,
    pub steps: usize,
    pub backtracks_attempted: usize,
    pub backtracks_committed: usize,
    pub backtracks_aborted: usize,
    pub destructive_executions: usize,
    pub preflagged: usize,
    pub confirmed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureReason>,
}

impl TaskOutcome {
    fn new(id: &str, r: &SearchResult) -> Self {
        let c = &r.counters;
        TaskOutcome {
            id: id.to_string(),
            success: r.success,
            steps: c.steps,
            backtracks_attempted: c.backtracks_attempted,
            backtracks_committed: c.backtracks_committed,
            backtracks_aborted: c.backtracks_aborted,
            destructive_executions: c.destructive_executions,
            preflagged: c.preflagged_executions,
            confirmed: c.preflagged_confirmed,
            failure: r.failure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub step_budget: usize,
    pub solved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub tasks: Vec<TaskOutcome>,
    pub total: usize,
    pub solved: usize,
    pub success_rate: f64,
    /// Tasks by committed backtracks: 0, 1, 2, 3, 4, 5+.
    pub backtrack_histogram: [usize; 6],
    pub solved_with_backtrack: usize,
    pub preflagged: usize,
    pub confirmed: usize,
    pub confirmation_ratio: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
}

impl SuiteReport {
    pub fn from_outcomes(mut tasks: Vec<TaskOutcome>) -> Self {
        tasks.sort_by(|a, b| a.id.cmp(&b.id));
        let total = tasks.len();
        let solved = tasks.iter().filter(|t| t.success).count();
        let mut backtrack_histogram = [0; 6];
        for t in &tasks {
            backtrack_histogram[t.backtracks_committed.min(5)] += 1;
        }
        let preflagged = tasks.iter().map(|t| t.preflagged).sum();
        let confirmed = tasks.iter().map(|t| t.confirmed).sum();
        SuiteReport {
            total,
            solved,
            success_rate: if total == 0 { 0.0 } else { solved as f64 / total as f64 },
            backtrack_histogram,
            solved_with_backtrack: tasks
                .iter()
                .filter(|t| t.success && t.backtracks_committed > 0)
                .count(),
            preflagged,
            confirmed,
            confirmation_ratio: if preflagged == 0 {
                0.0
            } else {
                confirmed as f64 / preflagged as f64
            },
            tasks,
            sweep: Vec::new(),
        }
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<28} {:>7} {:>5} {:>10} {:>8} {:>9}",
            "task", "result", "steps", "backtracks", "flagged", "confirmed"
        );
        for t in &self.tasks {
            let _ = writeln!(
                s,
                "{:<28} {:>7} {:>5} {:>10} {:>8} {:>9}",
                t.id,
                if t.success { "pass" } else { "fail" },
                t.steps,
                format!("{}/{}", t.backtracks_committed, t.backtracks_attempted),
                t.preflagged,
                t.confirmed
            );
        }
        let _ = writeln!(
            s,
            "solved {}/{} ({:.1}%), solved with backtrack {}",
            self.solved,
            self.total,
            100.0 * self.success_rate,
            self.solved_with_backtrack
        );
        let _ = writeln!(s, "backtrack histogram [0,1,2,3,4,5+]: {:?}", self.backtrack_histogram);
        let _ = writeln!(
            s,
            "pre-flagged {} confirmed {} ratio {:.3}",
            self.preflagged, self.confirmed, self.confirmation_ratio
        );
        for p in &self.sweep {
            let _ = writeln!(s, "step budget {:>2}: solved {}", p.step_budget, p.solved);
        }
        s
    }
}

pub struct SuiteRun {
    pub report: SuiteReport,
    /// Traces of the main configuration, by task id.
    pub traces: Vec<(String, Trace)>,
}

/// Run every task in parallel. With `sweep`, also count solves at each of
/// [`SWEEP_BUDGETS`].
pub fn eval_suite(tasks: &[TaskRef], cfg: &SearchConfig, sweep: bool, full_trace: bool) -> Result<SuiteRun, RunError> {
    cfg.validate()?;
    let runs: Vec<(String, RunOutput)> = tasks
        .par_iter()
        .map(|t| run_task(t, cfg, full_trace).map(|out| (t.id.clone(), out)))
        .collect::<Result<_, _>>()?;
    let outcomes = runs
        .iter()
        .map(|(id, out)| TaskOutcome::new(id, &out.result))
        .collect();
    let mut report = SuiteReport::from_outcomes(outcomes);
    if sweep {
        for budget in SWEEP_BUDGETS {
            let c = SearchConfig {
                step_budget: budget,
                ..cfg.clone()
            };
            let solved: Vec<bool> = tasks
                .par_iter()
                .map(|t| run_task(t, &c, false).map(|o| o.result.success))
                .collect::<Result<_, _>>()?;
            report.sweep.push(SweepPoint {
                step_budget: budget,
                solved: solved.iter().filter(|&&s| s).count(),
            });
        }
    }
    let mut traces: Vec<(String, Trace)> = runs.into_iter().map(|(id, o)| (id, o.trace)).collect();
    traces.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(SuiteRun { report, traces })
}

/// An authored search plan: for each state reached by `path`, what each
/// variation proposes and how candidate actions are scored.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub scenario: String,
    pub task: String,
    #[serde(default)]
    pub seed: u64,
    pub default_reward: ChecklistProbs,
    pub states: Vec<PlanState>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanState {
    #[serde(default)]
    pub path: Vec<String>,
    /// One list of attempts per variation.
    #[serde(default)]
    pub proposals: Vec<Vec<String>>,
    #[serde(default)]
    pub rewards: BTreeMap<String, ChecklistProbs>,
}

pub struct CompiledPlan {
    pub policy: BTreeMap<String, String>,
    pub reward: BTreeMap<String, ChecklistProbs>,
}

impl CompiledPlan {
    pub fn policy_json(&self) -> String {
        serde_json::to_string_pretty(&self.policy).expect("string map") + "\n"
    }

    pub fn reward_json(&self) -> String {
        serde_json::to_string_pretty(&self.reward).expect("string map") + "\n"
    }

    /// Check that the reward table loads.
    pub fn reward_provider(&self) -> Result<ScriptedReward, RewardError> {
        ScriptedReward::from_json(&self.reward_json())
    }
}

/// Replay each plan state's path in a fresh environment and key its proposals
/// and rewards by the digests the search will see there.
pub fn compile_plan(plan_path: &Path) -> Result<CompiledPlan, RunError> {
    let text = read(plan_path)?;
    let plan: Plan = serde_json::from_str(&text)
        .map_err(|e| RunError::Plan(format!("{}: {e}", plan_path.display())))?;
    let base = plan_path.parent().unwrap_or(Path::new("."));
    let scenario = Arc::new(load_scenario(resolve(base, Path::new(&plan.scenario)))?);
    let goal = scenario
        .task(&plan.task)
        .ok_or_else(|| MockWebError::NoSuchTask(plan.task.clone()))?
        .goal
        .clone();

    let mut policy = BTreeMap::new();
    let mut reward = BTreeMap::new();
    reward.insert("default".to_string(), plan.default_reward.clone());
    for (i, state) in plan.states.iter().enumerate() {
        let fail = |msg: String| RunError::Plan(format!("state {i}: {msg}"));
        let (mut env, mut obs) = EnvHandle::reset(scenario.clone(), &plan.task, plan.seed)?;
        let mut path = Vec::new();
        for text in &state.path {
            let a = parse_action(text).map_err(|e| fail(format!("'{text}': {e}")))?;
            obs = env
                .execute(&a)
                .map_err(|e| fail(format!("'{text}' failed: {e}")))?
                .observation;
            path.push(a);
        }
        let od = obs_digest(&obs);
        for (v, attempts) in state.proposals.iter().enumerate() {
            let entries: Vec<(String, &String)> = if attempts.len() == 1 {
                vec![(format!("{od}:{v}"), &attempts[0])]
            } else {
                attempts
                    .iter()
                    .enumerate()
                    .map(|(k, a)| (format!("{od}:{v}:{k}"), a))
                    .collect()
            };
            for (key, action) in entries {
                if let Some(prev) = policy.insert(key.clone(), action.clone()) {
                    if &prev != action {
                        return Err(fail(format!("conflicting proposals for {key}")));
                    }
                }
            }
        }
        let td = trajectory_digest(&goal, &path, &obs);
        for (action, probs) in &state.rewards {
            let a = parse_action(action).map_err(|e| fail(format!("reward key '{action}': {e}")))?;
            reward.insert(ScriptedReward::key(&td, &a), probs.clone());
        }
    }
    Ok(CompiledPlan { policy, reward })
}
