//! Exhaustive TER: breadth-first search over every sequence reachable by
//! block moves from a given inventory, cost = moves + Levenshtein distance.

use std::collections::{HashMap, VecDeque};

fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Whether a block may move: `None` allows any block, otherwise it must occur
/// contiguously in the reference and be at most `max_len` long.
#[derive(Clone, Copy)]
pub struct Inventory<'a> {
    pub reference: Option<&'a [String]>,
    pub max_len: usize,
}

impl Inventory<'_> {
    fn allows(&self, block: &[String]) -> bool {
        if block.len() > self.max_len {
            return false;
        }
        match self.reference {
            None => true,
            Some(r) => r.windows(block.len()).any(|w| w == block),
        }
    }
}

fn moves(seq: &[String], inv: Inventory) -> Vec<Vec<String>> {
    let n = seq.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..=n {
            let block: Vec<String> = seq[i..j].to_vec();
            if !inv.allows(&block) {
                continue;
            }
            let rest: Vec<String> = seq[..i].iter().chain(&seq[j..]).cloned().collect();
            for k in 0..=rest.len() {
                if k == i {
                    continue;
                }
                let mut v = rest[..k].to_vec();
                v.extend(block.iter().cloned());
                v.extend(rest[k..].iter().cloned());
                out.push(v);
            }
        }
    }
    out
}

/// Minimal number of moves plus edits turning `cand` into `refr`.
pub fn exact_edits(cand: &[String], refr: &[String], inv: Inventory) -> usize {
    let mut best = levenshtein(cand, refr);
    let mut seen: HashMap<Vec<String>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(cand.to_vec(), 0);
    queue.push_back((cand.to_vec(), 0usize));
    while let Some((seq, depth)) = queue.pop_front() {
        best = best.min(depth + levenshtein(&seq, refr));
        if depth + 1 >= best {
            continue;
        }
        for next in moves(&seq, inv) {
            if !seen.contains_key(&next) {
                seen.insert(next.clone(), depth + 1);
                queue.push_back((next, depth + 1));
            }
        }
    }
    best
}
