//! NIST by direct scanning: no maps, every count found by walking the token lists.

fn occurrences(hay: &[String], needle: &[String]) -> usize {
    if needle.len() > hay.len() {
        return 0;
    }
    hay.windows(needle.len()).filter(|w| *w == needle).count()
}

/// Score with `max_order` orders over candidates and their reference sets.
pub fn nist(cands: &[Vec<String>], refs: &[Vec<Vec<String>>], max_order: usize) -> f64 {
    let all_refs: Vec<&Vec<String>> = refs.iter().flatten().collect();
    let pooled = |g: &[String]| -> usize { all_refs.iter().map(|r| occurrences(r, g)).sum() };
    let words: usize = all_refs.iter().map(|r| r.len()).sum();

    let mut total = 0.0;
    for n in 1..=max_order {
        let mut gained = 0.0;
        let mut count = 0usize;
        for (cand, rs) in cands.iter().zip(refs) {
            if cand.len() < n {
                continue;
            }
            count += cand.len() + 1 - n;
            // each distinct n-gram once, with its clipped count
            let mut done: Vec<&[String]> = Vec::new();
            for g in cand.windows(n) {
                if done.contains(&g) {
                    continue;
                }
                done.push(g);
                let k = occurrences(cand, g);
                let cap = rs.iter().map(|r| occurrences(r, g)).max().unwrap_or(0);
                let m = k.min(cap);
                if m == 0 {
                    continue;
                }
                let denom = if n == 1 { words } else { pooled(&g[..n - 1]) };
                gained += m as f64 * (denom as f64 / pooled(g) as f64).log2();
            }
        }
        if count > 0 {
            total += gained / count as f64;
        }
    }

    let c: usize = cands.iter().map(Vec::len).sum();
    let r: f64 = refs
        .iter()
        .map(|rs| rs.iter().map(|x| x.len() as f64).sum::<f64>() / rs.len() as f64)
        .sum();
    let beta = -(2f64.ln()) / 1.5f64.ln().powi(2);
    let x = if r <= 0.0 { 1.0 } else { (c as f64 / r).min(1.0) };
    let bf = if x <= 0.0 { 0.0 } else { (beta * x.ln().powi(2)).exp() };
    total * bf
}
