//! One function per acceptance criterion. Each prints a single PASS/FAIL line
//! with its measurements; the process exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use common::reference::{self, Item, TreeShape};
use common::sites;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use webnav::actions::{merge_actions, ActionClass, Candidate, WebAction};
use webnav::axtree::{compare_observation, compare_whole, AXTree};
use webnav::backtrack::{backtrack, BacktrackOutcome};
use webnav::mockweb::{load_scenario, TabSnapshot};
use webnav::reward::{combine_checklist, ChecklistProbs};
use webnav::runner::{eval_suite, replay_trace, run_task, ReplayOutcome};
use webnav::search::{
    prune_queue, select_action, Frontier, FrontierEntry, NodeState, SearchConfig, SearchTree,
};
use webnav::trace::{EventKind, Trace};

static FAILED: AtomicUsize = AtomicUsize::new(0);

fn report(n: u32, title: &str, ok: bool, detail: String) {
    println!(
        "criterion {n:>2} {} {title}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    if !ok {
        FAILED.fetch_add(1, Ordering::SeqCst);
    }
}

fn class_of(code: u8) -> ActionClass {
    match code {
        1 => ActionClass::Terminating,
        2 => ActionClass::Destructive,
        _ => ActionClass::Safe,
    }
}

fn code_of(class: ActionClass) -> u8 {
    class.code()
}

fn random_items(rng: &mut ChaCha8Rng, max_len: usize, nodes: usize) -> Vec<Item> {
    let len = rng.gen_range(0..=max_len);
    (0..len as u64)
        .map(|seq| Item {
            node: rng.gen_range(0..nodes),
            reward: rng.gen_range(0..=64) as f64 / 64.0,
            class: rng.gen_range(1..=3),
            seq,
        })
        .collect()
}

fn frontier_of(items: &[Item]) -> Frontier {
    let mut f = Frontier::new();
    for it in items {
        let seq = f.push(
            it.node,
            Candidate::new(
                WebAction::Click {
                    bid: it.seq.to_string(),
                },
                it.reward,
                class_of(it.class),
            ),
        );
        assert_eq!(seq, it.seq);
    }
    f
}

fn item_of(e: &FrontierEntry) -> Item {
    Item {
        node: e.origin,
        reward: e.reward,
        class: code_of(e.class),
        seq: e.seq,
    }
}

fn contents(f: &Frontier) -> Vec<Item> {
    let mut v: Vec<Item> = f.iter().map(item_of).collect();
    v.sort_by_key(|i| i.seq);
    v
}

fn c01_selection_matches_reference() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1ec7);
    let mut mismatches = 0;
    let mut branches = BTreeSet::new();
    for _ in 0..1000 {
        let items = random_items(&mut rng, 10, 1);
        let (tc, dc) = (rng.gen_range(0..=3), rng.gen_range(0..=3));
        let b = rng.gen_range(1..=8);
        let (kt, kd) = (rng.gen_range(0..=3), rng.gen_range(0..=3));

        let mut q = items.clone();
        let expected = reference::select(&mut q, tc, dc, b, kt, kd);
        let mut f = frontier_of(&items);
        let got = select_action(&mut f, tc, dc, b, kt, kd);

        let got_item = got.as_ref().map(item_of);
        let mut rest = items.clone();
        if let Some(e) = &expected {
            rest.retain(|i| i.seq != e.seq);
        }
        if got_item != expected || contents(&f) != rest {
            mismatches += 1;
        }
        branches.insert((items.len() > b, expected.map(|e| e.class)));
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "selection policy vs reference transcription",
        mismatches == 0 && secs < 10.0,
        format!(
            "1000 frontiers, {mismatches} mismatches, {} outcome kinds, {secs:.3} s",
            branches.len()
        ),
    );
}

fn random_shape(rng: &mut ChaCha8Rng, nodes: usize) -> (SearchTree, TreeShape) {
    let state = || NodeState {
        observation: AXTree::parse("RootWebArea 'n'\n").unwrap(),
        url: "http://x/".into(),
        tabs: Vec::<TabSnapshot>::new(),
        active_tab: 0,
    };
    let mut tree = SearchTree::new(state());
    let mut parent = vec![None];
    for i in 1..nodes {
        let p = rng.gen_range(0..i);
        tree.add_child(p, WebAction::Noop, state());
        parent.push(Some(p));
    }
    let mut valid = Vec::new();
    let mut checkpoint = Vec::new();
    for i in 0..nodes {
        let v = rng.gen_bool(0.8);
        let c = rng.gen_bool(0.4);
        tree.node_mut(i).valid = v;
        tree.node_mut(i).checkpoint = c;
        valid.push(v);
        checkpoint.push(c);
    }
    (
        tree,
        TreeShape {
            parent,
            valid,
            checkpoint,
        },
    )
}

fn c02_pruning_matches_reference() {
    let worked = [(3, 0.7), (3, 0.3), (2, 0.5), (2, 0.6), (1, 0.4)];
    let items: Vec<Item> = worked
        .iter()
        .enumerate()
        .map(|(i, &(class, reward))| Item {
            node: 0,
            reward,
            class,
            seq: i as u64,
        })
        .collect();
    let mut tree = SearchTree::new(NodeState {
        observation: AXTree::parse("RootWebArea 'n'\n").unwrap(),
        url: "http://x/".into(),
        tabs: vec![],
        active_tab: 0,
    });
    tree.node_mut(0).checkpoint = true;
    let mut f = frontier_of(&items);
    prune_queue(&mut f, 2, &tree, 0);
    let example: Vec<(u8, f64)> = contents(&f).iter().map(|i| (i.class, i.reward)).collect();
    let example_ok = example == vec![(3, 0.7), (2, 0.6)];

    let mut rng = ChaCha8Rng::seed_from_u64(0xbadc0de);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let nodes = rng.gen_range(1..=6);
        let (tree, shape) = random_shape(&mut rng, nodes);
        let current = rng.gen_range(0..nodes);
        let items = random_items(&mut rng, 10, nodes);
        let b = rng.gen_range(1..=6);
        let mut expected = items.clone();
        reference::prune(&mut expected, b, &shape, current);
        let mut f = frontier_of(&items);
        prune_queue(&mut f, b, &tree, current);
        if contents(&f) != expected {
            mismatches += 1;
        }
    }
    report(
        2,
        "pruning vs reference transcription",
        example_ok && mismatches == 0,
        format!("worked example -> {example:?}; 1000 frontiers, {mismatches} mismatches"),
    );
}

fn c03_merging() {
    let click5 = WebAction::Click { bid: "5".into() };
    let stop = WebAction::Stop { answer: "x".into() };
    let merged = merge_actions(vec![
        Candidate::new(click5.clone(), 0.4, ActionClass::Safe),
        Candidate::new(stop.clone(), 0.5, ActionClass::Terminating),
        Candidate::new(click5.clone(), 0.4, ActionClass::Safe),
    ]);
    let pairs: Vec<(String, f64)> = merged.iter().map(|c| (c.action.to_string(), c.reward)).collect();
    let example_ok = merged.len() == 2
        && merged[0].action == click5
        && (merged[0].reward - 0.8).abs() < 1e-12
        && merged[1].action == stop
        && merged[1].reward == 0.5;

    let mut rng = ChaCha8Rng::seed_from_u64(0x3e7);
    let (mut conservation, mut idempotence) = (0, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(0..12);
        let cands: Vec<Candidate> = (0..n)
            .map(|_| {
                let action = match rng.gen_range(0..4) {
                    0 => WebAction::Click {
                        bid: rng.gen_range(0..4).to_string(),
                    },
                    1 => WebAction::Fill {
                        bid: "7".into(),
                        value: ["Leg injury", " leg  INJURY ", "other"][rng.gen_range(0..3)].into(),
                        press_enter: rng.gen_bool(0.5),
                    },
                    2 => WebAction::Stop {
                        answer: rng.gen_range(0..3).to_string(),
                    },
                    _ => WebAction::Scroll {
                        direction: webnav::actions::ScrollDirection::Down,
                    },
                };
                Candidate::new(action, rng.gen_range(0..=64) as f64 / 64.0, ActionClass::Safe)
            })
            .collect();
        let before: f64 = cands.iter().map(|c| c.reward).sum();
        let once = merge_actions(cands);
        let after: f64 = once.iter().map(|c| c.reward).sum();
        if before != after {
            conservation += 1;
        }
        if merge_actions(once.clone()) != once {
            idempotence += 1;
        }
    }
    report(
        3,
        "action merging",
        example_ok && conservation == 0 && idempotence == 0,
        format!(
            "example -> {pairs:?}; 1000 sets, {conservation} sum violations, {idempotence} idempotence violations"
        ),
    );
}

fn c04_reward_combiner() {
    let value = |items: Vec<(f64, f64)>| combine_checklist(&ChecklistProbs::new(items).unwrap());
    let a = value(vec![(1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]);
    let b = value(vec![(0.6, 0.2), (0.4, 0.4)]);
    let values_ok = (a - 0.5).abs() < 1e-9 && (b - 0.65).abs() < 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(0xe91);
    let mut violations = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=6);
        let items: Vec<(f64, f64)> = (0..k)
            .map(|_| {
                let y: f64 = rng.gen_range(0.0..=1.0);
                (y, rng.gen_range(0.0..=1.0 - y))
            })
            .collect();
        let i = rng.gen_range(0..k);
        let (y, p) = items[i];
        let mut raised = items.clone();
        raised[i].0 = rng.gen_range(y..=1.0 - p);
        if value(raised) < value(items) {
            violations += 1;
        }
    }
    report(
        4,
        "checklist reward combiner",
        values_ok && violations == 0,
        format!("{a} and {b}; 1000 perturbations, {violations} monotonicity violations"),
    );
}

struct Soundness {
    committed: usize,
    aborted: usize,
    no_plan: usize,
    violations: Vec<String>,
}

fn check_backtracks(seed: u64, drift: bool, trials: usize, out: &mut Soundness) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = sites::generate(seed, drift, &mut rng);
    let tree = sites::build_tree(&scenario, 12, &mut rng);
    let targets: Vec<usize> = (0..tree.len()).filter(|&n| !drift || n != tree.root()).collect();
    if targets.is_empty() {
        out.violations.push(format!("site {seed}: no targets"));
        return;
    }
    for _ in 0..trials {
        let current = rng.gen_range(0..tree.len());
        let target = targets[rng.gen_range(0..targets.len())];
        let pending = sites::pending_action(&tree, target, &mut rng);
        let mut env = sites::env_at(&scenario, &tree, current, sites::RECORD_SEED + 1);
        let before = (
            env.observe().serialize(),
            env.store().clone(),
            env.tab_count(),
            env.history_len(),
        );
        let report = backtrack(&mut env, &tree, target, &pending);
        let live = env.observe();
        let stored = tree.node(target).observation();
        let tag = format!("site {seed} target {target} from {current}");
        match &report.outcome {
            BacktrackOutcome::Committed => {
                out.committed += 1;
                let faithful = match pending.target_bid() {
                    Some(bid) => compare_observation(stored, &live, bid).unwrap_or(false),
                    None => compare_whole(stored, &live),
                };
                if !faithful {
                    out.violations.push(format!("{tag}: committed onto a different page"));
                }
                if drift {
                    out.violations.push(format!("{tag}: committed despite drift"));
                } else if &live != stored {
                    out.violations.push(format!("{tag}: live page differs from snapshot"));
                }
            }
            BacktrackOutcome::Aborted { reason, .. } => {
                out.aborted += 1;
                let after = (live.serialize(), env.store().clone(), env.tab_count(), env.history_len());
                if after != before {
                    out.violations.push(format!("{tag}: abort was not neutral"));
                }
                if !drift {
                    out.violations.push(format!("{tag}: deterministic site aborted ({reason})"));
                }
            }
            BacktrackOutcome::NoPlan => {
                out.no_plan += 1;
                out.violations.push(format!("{tag}: no checkpoint on path"));
            }
        }
    }
}

fn c05_backtracking_soundness() {
    let mut det = Soundness {
        committed: 0,
        aborted: 0,
        no_plan: 0,
        violations: vec![],
    };
    for seed in 0..50 {
        check_backtracks(seed, false, 6, &mut det);
    }
    let mut drift = Soundness {
        committed: 0,
        aborted: 0,
        no_plan: 0,
        violations: vec![],
    };
    for seed in 1000..1010 {
        check_backtracks(seed, true, 6, &mut drift);
    }
    let drift_total = drift.committed + drift.aborted + drift.no_plan;
    let abort_rate = drift.aborted as f64 / drift_total as f64;
    let mut violations = det.violations.clone();
    violations.extend(drift.violations.iter().cloned());
    report(
        5,
        "backtracking soundness",
        violations.is_empty() && abort_rate == 1.0,
        format!(
            "50 sites: {} committed, {} aborted; 10 drift sites: abort rate {:.0}% of {drift_total}; violations {:?}",
            det.committed,
            det.aborted,
            100.0 * abort_rate,
            violations.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

fn desk_task(id: &str) -> webnav::runner::TaskRef {
    common::desk_tasks()
        .into_iter()
        .find(|t| t.id == id)
        .expect("desk task exists")
}

struct RerootCheck {
    ok: bool,
    detail: String,
}

fn check_reroot(cfg: &SearchConfig) -> RerootCheck {
    let out = run_task(&desk_task("d09/t1"), cfg, false).unwrap();
    let events = out.trace.events();
    let Some(pos) = events
        .iter()
        .position(|e| matches!(e.event, EventKind::DestructiveReroot { .. }))
    else {
        return RerootCheck {
            ok: false,
            detail: "no re-root happened".into(),
        };
    };
    let EventKind::DestructiveReroot {
        node,
        budget,
        valid_nodes,
        frontier_size,
        ..
    } = &events[pos].event
    else {
        unreachable!()
    };
    let expected_budget = (cfg.frontier_budget - 1).max(cfg.min_queue.min(cfg.frontier_budget));
    let later_origins: Vec<usize> = events[pos..]
        .iter()
        .filter_map(|e| match &e.event {
            EventKind::Select { entry, .. } => Some(entry.origin),
            EventKind::Backtrack { target, .. } => Some(*target),
            _ => None,
        })
        .collect();
    let stale = later_origins.iter().filter(|&&o| o < *node).count();
    let ok = out.result.success
        && *frontier_size == 0
        && *valid_nodes == 1
        && *budget == expected_budget
        && stale == 0
        && !later_origins.is_empty();
    RerootCheck {
        ok,
        detail: format!(
            "B {} -> {budget} (expected {expected_budget}), frontier {frontier_size}, valid nodes {valid_nodes}, {} later selections, {stale} from before",
            cfg.frontier_budget,
            later_origins.len()
        ),
    }
}

fn c06_destructive_rerooting() {
    let normal = check_reroot(&SearchConfig::default());
    let floored = check_reroot(&SearchConfig {
        frontier_budget: 2,
        min_queue: 2,
        ..SearchConfig::default()
    });
    report(
        6,
        "destructive re-rooting",
        normal.ok && floored.ok,
        format!("{}; at the floor: {}", normal.detail, floored.detail),
    );
}

fn c07_desk_suite() {
    let start = Instant::now();
    let tasks = common::desk_tasks();
    let full = eval_suite(&tasks, &SearchConfig::default(), false, false).unwrap().report;
    let greedy_cfg = SearchConfig {
        frontier_budget: 1,
        backtracking: false,
        ..SearchConfig::default()
    };
    let greedy = eval_suite(&tasks, &greedy_cfg, false, false).unwrap().report;
    let secs = start.elapsed().as_secs_f64();
    let needs_backtrack = full.tasks.iter().filter(|t| t.success && t.backtracks_committed > 0).count();
    report(
        7,
        "desk suite end to end",
        tasks.len() == 12 && full.solved >= 11 && greedy.solved <= 6 && secs < 60.0,
        format!(
            "full {}/12 ({needs_backtrack} with backtracks), greedy {}/12, {secs:.2} s",
            full.solved, greedy.solved
        ),
    );
}

fn c08_heuristic_precision() {
    let r = eval_suite(&common::precision_tasks(), &SearchConfig::default(), false, false)
        .unwrap()
        .report;
    report(
        8,
        "pre-flag confirmation ratio",
        r.preflagged == 8 && r.confirmed == 3 && r.confirmation_ratio == 0.375,
        format!("{} flagged, {} confirmed, ratio {}", r.preflagged, r.confirmed, r.confirmation_ratio),
    );
}

fn c09_budget_sweep() {
    let r = eval_suite(&common::desk_tasks(), &SearchConfig::default(), true, false)
        .unwrap()
        .report;
    let solved: Vec<(usize, usize)> = r.sweep.iter().map(|p| (p.step_budget, p.solved)).collect();
    let monotone = r.sweep.windows(2).all(|w| w[0].solved <= w[1].solved);
    report(
        9,
        "budget sweep",
        solved.len() == 4 && monotone,
        format!("(budget, solved) {solved:?}"),
    );
}

fn c10_determinism_and_replay() {
    let cfg = SearchConfig::default();
    let mut identical = 0;
    let mut verified = 0;
    let mut problems = Vec::new();
    let tasks = common::desk_tasks();
    for t in &tasks {
        let a = run_task(t, &cfg, false).unwrap().trace.to_jsonl();
        let b = run_task(t, &cfg, false).unwrap().trace.to_jsonl();
        if a == b {
            identical += 1;
        } else {
            problems.push(format!("{}: traces differ", t.id));
        }
        let scenario = Arc::new(load_scenario(&t.scenario).unwrap());
        match replay_trace(&Trace::parse_jsonl(&a).unwrap(), scenario) {
            ReplayOutcome::Verified { .. } => verified += 1,
            other => problems.push(format!("{}: {other:?}", t.id)),
        }
    }
    report(
        10,
        "trace determinism and replay",
        identical == tasks.len() && verified == tasks.len(),
        format!(
            "{identical}/{} byte-identical, {verified}/{} replays verified {problems:?}",
            tasks.len(),
            tasks.len()
        ),
    );
}

fn main() -> ExitCode {
    let criteria: [(u32, fn()); 10] = [
        (1, c01_selection_matches_reference),
        (2, c02_pruning_matches_reference),
        (3, c03_merging),
        (4, c04_reward_combiner),
        (5, c05_backtracking_soundness),
        (6, c06_destructive_rerooting),
        (7, c07_desk_suite),
        (8, c08_heuristic_precision),
        (9, c09_budget_sweep),
        (10, c10_determinism_and_replay),
    ];
    for (n, check) in criteria {
        if catch_unwind(AssertUnwindSafe(check)).is_err() {
            println!("criterion {n:>2} FAIL: panicked");
            FAILED.fetch_add(1, Ordering::SeqCst);
        }
    }
    let failed = FAILED.load(Ordering::SeqCst);
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
