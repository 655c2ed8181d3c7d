//! Line-by-line transcriptions of the selection and pruning pseudocode over a
//! plain list, sharing no code with the library.

/// Class codes: 1 terminating, 2 destructive, 3 safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub node: usize,
    pub reward: f64,
    pub class: u8,
    pub seq: u64,
}

/// Index of the highest reward, earliest on ties.
fn best_index(q: &[Item], class: Option<u8>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in q.iter().enumerate() {
        if class.is_some_and(|c| c != e.class) {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &q[b];
                if e.reward > cur.reward || (e.reward == cur.reward && e.seq < cur.seq) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Index of the lowest reward, latest on ties.
fn worst_index(q: &[Item]) -> Option<usize> {
    let mut worst: Option<usize> = None;
    for (i, e) in q.iter().enumerate() {
        worst = match worst {
            None => Some(i),
            Some(w) => {
                let cur = &q[w];
                if e.reward < cur.reward || (e.reward == cur.reward && e.seq > cur.seq) {
                    Some(i)
                } else {
                    Some(w)
                }
            }
        };
    }
    worst
}

fn pop(q: &mut Vec<Item>) -> Option<Item> {
    best_index(q, None).map(|i| q.remove(i))
}

fn exists(q: &[Item], class: u8) -> bool {
    q.iter().any(|e| e.class == class)
}

/// Returns the chosen entry. `q` is consumed the way the pseudocode consumes
/// its queue, so callers should only rely on the return value.
#[allow(clippy::if_same_then_else)]
pub fn select(q: &mut Vec<Item>, tc: u32, dc: u32, b: usize, kt: u32, kd: u32) -> Option<Item> {
    let mut deferred: Vec<Item> = Vec::new();

    if q.len() > b || q.iter().filter(|e| e.class == 2).count() > 1 {
        while !q.is_empty() {
            let x = pop(q).unwrap();
            if x.class == 1 && tc < kt {
                deferred.push(x);
            } else if x.class == 2 {
                q.append(&mut deferred);
                if exists(q, 1) && dc >= kd {
                    let i = best_index(q, Some(1)).unwrap();
                    return Some(q.remove(i));
                }
                return Some(x);
            } else {
                q.append(&mut deferred);
                return Some(x);
            }
        }
    }

    while !q.is_empty() {
        let x = pop(q).unwrap();
        if x.class == 3 {
            return Some(x);
        } else if x.class == 1 && tc >= kt {
            return Some(x);
        } else {
            deferred.push(x);
        }
    }

    if deferred.is_empty() {
        return None;
    }

    *q = deferred;
    if exists(q, 1) && dc >= kd {
        let i = best_index(q, Some(1)).unwrap();
        return Some(q.remove(i));
    }
    if exists(q, 2) {
        let i = best_index(q, Some(2)).unwrap();
        return Some(q.remove(i));
    }
    pop(q)
}

/// Parent links, validity and checkpoint flags of a search tree.
pub struct TreeShape {
    pub parent: Vec<Option<usize>>,
    pub valid: Vec<bool>,
    pub checkpoint: Vec<bool>,
}

impl TreeShape {
    fn has_checkpoint_on_path(&self, mut n: usize) -> bool {
        loop {
            if self.checkpoint[n] {
                return true;
            }
            match self.parent[n] {
                Some(p) => n = p,
                None => return false,
            }
        }
    }

    /// Executable now, or restorable from a checkpoint.
    pub fn reachable(&self, n: usize, current: usize) -> bool {
        self.valid[n] && (n == current || self.has_checkpoint_on_path(n))
    }
}

pub fn prune(q: &mut Vec<Item>, b: usize, tree: &TreeShape, current: usize) {
    q.retain(|e| tree.reachable(e.node, current));

    if q.len() <= b {
        return;
    }
    for class in [1u8, 2] {
        if let Some(keep) = best_index(q, Some(class)) {
            let keep_seq = q[keep].seq;
            q.retain(|e| e.class != class || e.seq == keep_seq);
        }
    }
    while q.len() > b {
        let i = worst_index(q).unwrap();
        q.remove(i);
    }
}
