use std::collections::HashSet;

use crate::model::{ModSnapshot, ModTenure};

pub const DEFAULT_BOTS: [&str; 1] = ["automoderator"];

pub fn default_botlist() -> HashSet<String> {
    DEFAULT_BOTS.iter().map(|s| s.to_string()).collect()
}

fn is_bot(name: &str, botlist: &HashSet<String>) -> bool {
    !botlist.is_empty() && botlist.contains(&name.to_lowercase())
}

/// Removes listed bots (case-insensitively) from every roster and re-ranks
/// the survivors. Returns the number of roster entries removed.
pub fn filter_bots_snapshots(snapshots: &mut [ModSnapshot], botlist: &HashSet<String>) -> usize {
    let mut removed = 0;
    for snap in snapshots.iter_mut() {
        let before = snap.roster.len();
        snap.roster.retain(|e| !is_bot(&e.username, botlist));
        removed += before - snap.roster.len();
        snap.rerank();
    }
    removed
}

pub fn filter_bots_tenures(tenures: &mut Vec<ModTenure>, botlist: &HashSet<String>) -> usize {
    let before = tenures.len();
    tenures.retain(|t| !is_bot(&t.username, botlist));
    before - tenures.len()
}
