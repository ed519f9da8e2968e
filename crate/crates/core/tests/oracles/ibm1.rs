//! IBM Model 1 EM on dense matrices indexed by word position in sorted vocabularies.

use std::collections::BTreeMap;

pub struct Dense {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    /// `t[s][e]`; row 0 is NULL when enabled.
    pub t: Vec<Vec<f64>>,
    pub log_likelihood: Vec<f64>,
}

impl Dense {
    pub fn prob(&self, s: &str, e: &str) -> f64 {
        let si = self.src.iter().position(|w| w == s);
        let ei = self.tgt.iter().position(|w| w == e);
        match (si, ei) {
            (Some(a), Some(b)) => self.t[a][b],
            _ => 0.0,
        }
    }
}

pub fn train(pairs: &[(Vec<String>, Vec<String>)], iterations: usize, null: Option<&str>) -> Dense {
    let mut sv: BTreeMap<String, usize> = BTreeMap::new();
    let mut tv: BTreeMap<String, usize> = BTreeMap::new();
    for (s, t) in pairs {
        s.iter().for_each(|w| {
            sv.insert(w.clone(), 0);
        });
        t.iter().for_each(|w| {
            tv.insert(w.clone(), 0);
        });
    }
    let mut src: Vec<String> = null.map(str::to_string).into_iter().collect();
    src.extend(sv.keys().cloned());
    let tgt: Vec<String> = tv.keys().cloned().collect();
    let si = |w: &str| src.iter().position(|x| x == w).unwrap();
    let ti = |w: &str| tgt.iter().position(|x| x == w).unwrap();
    let sents: Vec<(Vec<usize>, Vec<usize>)> = pairs
        .iter()
        .filter(|(s, t)| !s.is_empty() && !t.is_empty())
        .map(|(s, t)| {
            let mut a: Vec<usize> = if null.is_some() { vec![0] } else { vec![] };
            a.extend(s.iter().map(|w| si(w)));
            (a, t.iter().map(|w| ti(w)).collect())
        })
        .collect();

    let (ns, nt) = (src.len(), tgt.len());
    let mut seen = vec![vec![false; nt]; ns];
    for (s, t) in &sents {
        for &a in s {
            for &b in t {
                seen[a][b] = true;
            }
        }
    }
    let mut t: Vec<Vec<f64>> = seen
        .iter()
        .map(|row| {
            let k = row.iter().filter(|&&x| x).count() as f64;
            row.iter().map(|&x| if x { 1.0 / k } else { 0.0 }).collect()
        })
        .collect();

    let ll = |t: &Vec<Vec<f64>>| -> f64 {
        sents
            .iter()
            .map(|(s, e)| {
                e.iter()
                    .map(|&b| (s.iter().map(|&a| t[a][b]).sum::<f64>() / s.len() as f64).ln())
                    .sum::<f64>()
            })
            .sum()
    };
    let mut trace = vec![ll(&t)];
    for _ in 0..iterations {
        let mut c = vec![vec![0.0; nt]; ns];
        for (s, e) in &sents {
            for &b in e {
                let z: f64 = s.iter().map(|&a| t[a][b]).sum();
                for &a in s {
                    c[a][b] += t[a][b] / z;
                }
            }
        }
        for a in 0..ns {
            let total: f64 = c[a].iter().sum();
            for b in 0..nt {
                t[a][b] = if total > 0.0 { c[a][b] / total } else { 0.0 };
            }
        }
        trace.push(ll(&t));
    }
    Dense {
        src,
        tgt,
        t,
        log_likelihood: trace,
    }
}
