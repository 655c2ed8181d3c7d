use serde::Serialize;

use super::{ActionClass, WebAction};

/// A scored, classified candidate awaiting merging or insertion into the frontier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub action: WebAction,
    pub reward: f64,
    pub class: ActionClass,
}

impl Candidate {
    pub fn new(action: WebAction, reward: f64, class: ActionClass) -> Self {
        Candidate {
            action,
            reward,
            class,
        }
    }
}

/// Trim, collapse whitespace runs to one space, and case-fold.
pub fn normalize_fill_text(value: &str) -> String {
    value
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(PartialEq, Eq)]
enum MergeKey {
    Stop,
    Fill { bid: String, norm: String, press_enter: bool },
    Exact(String),
}

fn merge_key(action: &WebAction) -> MergeKey {
    match action {
        WebAction::Stop { .. } => MergeKey::Stop,
        WebAction::Fill {
            bid,
            value,
            press_enter,
        } => MergeKey::Fill {
            bid: bid.clone(),
            norm: normalize_fill_text(value),
            press_enter: *press_enter,
        },
        other => MergeKey::Exact(other.to_string()),
    }
}

/// Collapse equivalent candidates, summing their rewards.
///
/// Equivalent means identical kind and arguments, any two `stop`s, or two
/// `fill`s on one element whose values normalize equally (same `press_enter`).
/// The group keeps the literal text of its highest-rewarded member (earliest on
/// ties). Output is ordered by merged reward, descending; equal rewards keep
/// first-appearance order.
pub fn merge_actions(candidates: Vec<Candidate>) -> Vec<Candidate> {
    let mut groups: Vec<(MergeKey, Candidate, f64)> = Vec::new();
    for c in candidates {
        let key = merge_key(&c.action);
        match groups.iter_mut().find(|(k, _, _)| *k == key) {
            Some((_, rep, total)) => {
                *total += c.reward;
                if c.reward > rep.reward {
                    *rep = c;
                }
            }
            None => {
                let r = c.reward;
                groups.push((key, c, r));
            }
        }
    }
    let mut out: Vec<Candidate> = groups
        .into_iter()
        .map(|(_, rep, total)| Candidate {
            reward: total,
            ..rep
        })
        .collect();
    out.sort_by(|a, b| b.reward.total_cmp(&a.reward));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::parse_action;

    fn c(text: &str, r: f64, class: ActionClass) -> Candidate {
        Candidate::new(parse_action(text).unwrap(), r, class)
    }

    fn safe(text: &str, r: f64) -> Candidate {
        c(text, r, ActionClass::Safe)
    }

    fn stop(text: &str, r: f64) -> Candidate {
        c(text, r, ActionClass::Terminating)
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_fill_text("  Hello   World "), "hello world");
        assert_eq!(normalize_fill_text("hello world"), "hello world");
        assert_eq!(normalize_fill_text(""), "");
        assert_eq!(normalize_fill_text("a\t\nb"), "a b");
    }

    #[test]
    fn identical_clicks_sum() {
        let out = merge_actions(vec![
            safe("click('5')", 0.4),
            stop("stop('x')", 0.5),
            safe("click('5')", 0.4),
        ]);
        assert_eq!(out, vec![safe("click('5')", 0.8), stop("stop('x')", 0.5)]);
    }

    #[test]
    fn stops_keep_best_text() {
        let out = merge_actions(vec![stop("stop('A')", 0.6), stop("stop('B')", 0.3)]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].action.to_string(), "stop('A')");
        assert!((out[0].reward - 0.9).abs() < 1e-12);

        // representative follows the best member even when it comes later
        let out = merge_actions(vec![stop("stop('B')", 0.3), stop("stop('A')", 0.6)]);
        assert_eq!(out[0].action.to_string(), "stop('A')");
    }

    #[test]
    fn normalized_fills_merge() {
        let out = merge_actions(vec![
            safe("fill('24', 'Hello World', False)", 0.3),
            safe("fill('24', '  hello   world ', False)", 0.2),
        ]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].action.to_string(), "fill('24', 'Hello World', False)");
        assert!((out[0].reward - 0.5).abs() < 1e-12);
    }

    #[test]
    fn distinct_fills_stay_apart() {
        let out = merge_actions(vec![
            safe("fill('24', 'a', False)", 0.3),
            c("fill('24', 'a', True)", 0.2, ActionClass::Destructive),
            safe("fill('25', 'a', False)", 0.2),
        ]);
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn ties_keep_first_appearance() {
        let out = merge_actions(vec![safe("click('1')", 0.5), safe("click('2')", 0.5)]);
        assert_eq!(out[0].action.to_string(), "click('1')");
    }
}
