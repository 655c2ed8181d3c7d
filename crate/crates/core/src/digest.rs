use sha2::{Digest, Sha256};

use crate::actions::WebAction;
use crate::axtree::AXTree;

fn short(hasher: Sha256) -> String {
    hex::encode(hasher.finalize())[..16].to_string()
}

/// Short content hash of a serialized observation.
pub fn obs_digest(obs: &AXTree) -> String {
    let mut h = Sha256::new();
    h.update(obs.serialize().as_bytes());
    short(h)
}

/// Key for reward lookups: goal, actions from the root, and the current observation.
pub fn trajectory_digest(goal: &str, actions: &[WebAction], obs: &AXTree) -> String {
    let mut h = Sha256::new();
    h.update(goal.as_bytes());
    h.update([0]);
    for a in actions {
        h.update(a.to_string().as_bytes());
        h.update([0]);
    }
    h.update([1]);
    h.update(obs.serialize().as_bytes());
    short(h)
}
