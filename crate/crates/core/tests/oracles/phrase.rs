//! Phrase pairs by checking every box against the consistency predicate.

use std::collections::BTreeSet;

/// `((s1, s2), (t1, t2))`, inclusive.
pub type SpanPair = ((usize, usize), (usize, usize));

pub fn consistent_boxes(links: &[(usize, usize)], src_len: usize, tgt_len: usize, max_len: usize) -> BTreeSet<SpanPair> {
    let mut out = BTreeSet::new();
    for s1 in 0..src_len {
        for s2 in s1..src_len.min(s1 + max_len) {
            for t1 in 0..tgt_len {
                for t2 in t1..tgt_len.min(t1 + max_len) {
                    let in_s = |i: usize| s1 <= i && i <= s2;
                    let in_t = |j: usize| t1 <= j && j <= t2;
                    let inside = links.iter().any(|&(i, j)| in_s(i) && in_t(j));
                    let leaks = links.iter().any(|&(i, j)| in_s(i) != in_t(j));
                    if inside && !leaks {
                        out.insert(((s1, s2), (t1, t2)));
                    }
                }
            }
        }
    }
    out
}
