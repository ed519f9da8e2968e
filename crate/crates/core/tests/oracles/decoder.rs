//! Exhaustive enumeration over segmentations x permutations x phrase options,
//! scored by a from-scratch reimplementation of the feature functions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use smtkit::decoder::{FeatureWeights, Models};
use smtkit::lm::{train_kn, NGramModel, TrainConfig};
use smtkit::phrase::{Direction, Orientation, PhraseScores, PhraseTable, ReorderingModel};

const OOV_COST: f64 = -23.025850929940457;

pub struct Instance {
    pub phrases: PhraseTable,
    pub reordering: ReorderingModel,
    pub lm: NGramModel<f64>,
    pub input: Vec<String>,
}

impl Instance {
    pub fn models(&self) -> Models<'_> {
        Models {
            phrases: &self.phrases,
            reordering: &self.reordering,
            lm: Some(&self.lm),
        }
    }
}

fn prob(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.05..1.0)
}

fn dist3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let raw = [prob(rng), prob(rng), prob(rng)];
    let z: f64 = raw.iter().sum();
    raw.map(|x| x / z)
}

/// Random phrase table over a 4-word source vocabulary with an unknown word
/// thrown in, random reordering distributions and a trigram LM.
pub fn random_instance(rng: &mut ChaCha8Rng, max_len: usize) -> Instance {
    let src_vocab = ["a", "b", "c", "d"];
    let tgt_vocab = ["w", "x", "y", "z"];
    let mut phrases = PhraseTable::default();
    let mut reordering = ReorderingModel::default();
    for _ in 0..rng.gen_range(4..12) {
        let slen = rng.gen_range(1..=3);
        let tlen = rng.gen_range(1..=3);
        let s: Vec<&str> = (0..slen).map(|_| src_vocab[rng.gen_range(0..4)]).collect();
        let t: Vec<&str> = (0..tlen).map(|_| tgt_vocab[rng.gen_range(0..4)]).collect();
        let (s, t) = (s.join(" "), t.join(" "));
        let scores = PhraseScores {
            phi_t_given_s: prob(rng),
            phi_s_given_t: prob(rng),
            lex_t_given_s: prob(rng),
            lex_s_given_t: prob(rng),
        };
        phrases.entries.entry(s.clone()).or_default().insert(t.clone(), scores);
        if rng.gen_bool(0.7) {
            let (f, b) = (dist3(rng), dist3(rng));
            reordering.entries.insert((s, t), [f[0], f[1], f[2], b[0], b[1], b[2]]);
        }
    }
    let lm_data: Vec<Vec<&str>> = (0..12)
        .map(|_| (0..rng.gen_range(1..=5)).map(|_| tgt_vocab[rng.gen_range(0..4)]).collect())
        .collect();
    let lm = train_kn::<f64, _>(&lm_data, &TrainConfig::with_order(3)).unwrap();
    let len = rng.gen_range(1..=max_len);
    let input = (0..len)
        .map(|_| if rng.gen_bool(0.1) { "q".to_string() } else { src_vocab[rng.gen_range(0..4)].to_string() })
        .collect();
    Instance {
        phrases,
        reordering,
        lm,
        input,
    }
}

pub struct Piece {
    pub start: usize,
    pub end: usize,
    pub tgt: String,
    pub scores: Option<PhraseScores>,
}

fn orient(prev: Option<&Piece>, cur: &Piece) -> Orientation {
    match prev {
        None if cur.start == 0 => Orientation::Monotone,
        None => Orientation::Discontinuous,
        Some(p) if cur.start == p.end + 1 => Orientation::Monotone,
        Some(p) if cur.end + 1 == p.start => Orientation::Swap,
        Some(_) => Orientation::Discontinuous,
    }
}

fn slot(o: Orientation) -> usize {
    match o {
        Orientation::Monotone => 0,
        Orientation::Swap => 1,
        Orientation::Discontinuous => 2,
    }
}

pub fn features(inst: &Instance, seq: &[Piece]) -> [f64; 14] {
    let src = |p: &Piece| inst.input[p.start..=p.end].join(" ");
    let ro = |p: &Piece, d: Direction, o: Orientation| inst.reordering.prob(&src(p), &p.tgt, d, o).ln();
    let mut h = [0.0; 14];
    let mut words: Vec<&str> = Vec::new();
    let mut prev_end = -1isize;
    for (k, p) in seq.iter().enumerate() {
        match &p.scores {
            Some(sc) => {
                h[0] += sc.phi_t_given_s.ln();
                h[1] += sc.phi_s_given_t.ln();
                h[2] += sc.lex_t_given_s.ln();
                h[3] += sc.lex_s_given_t.ln();
            }
            None => h[13] += OOV_COST * (p.end - p.start + 1) as f64,
        }
        let prev = if k == 0 { None } else { Some(&seq[k - 1]) };
        let o = orient(prev, p);
        h[5 + slot(o)] += ro(p, Direction::Forward, o);
        if let Some(q) = prev {
            h[8 + slot(o)] += ro(q, Direction::Backward, o);
        }
        h[11] -= (p.start as isize - prev_end - 1).abs() as f64;
        prev_end = p.end as isize;
        let t: Vec<&str> = p.tgt.split(' ').collect();
        h[12] -= t.len() as f64;
        words.extend(t);
    }
    if let Some(last) = seq.last() {
        let o = if last.end + 1 == inst.input.len() {
            Orientation::Monotone
        } else {
            Orientation::Discontinuous
        };
        h[8 + slot(o)] += ro(last, Direction::Backward, o);
    }
    h[4] = inst.lm.sentence_logprob(&words) * std::f64::consts::LN_10;
    h
}

/// Candidate pieces for each source span, including the copy option for an
/// untranslatable single word.
fn pieces(inst: &Instance) -> Vec<(usize, usize, String, Option<PhraseScores>)> {
    let n = inst.input.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let s = inst.input[i..=j].join(" ");
            match inst.phrases.options(&s) {
                Some(row) => {
                    for (t, sc) in row {
                        out.push((i, j, t.clone(), Some(*sc)));
                    }
                }
                None if i == j => out.push((i, i, s, None)),
                None => {}
            }
        }
    }
    out
}

/// Best weighted score over every complete derivation.
pub fn brute_force_best(inst: &Instance, w: &FeatureWeights) -> f64 {
    let all = pieces(inst);
    let n = inst.input.len();
    let mut best = f64::NEG_INFINITY;
    let mut covered = vec![false; n];
    let mut seq: Vec<Piece> = Vec::new();
    fn rec(
        inst: &Instance,
        w: &FeatureWeights,
        all: &[(usize, usize, String, Option<PhraseScores>)],
        covered: &mut Vec<bool>,
        seq: &mut Vec<Piece>,
        best: &mut f64,
    ) {
        if covered.iter().all(|&c| c) {
            let h = features(inst, seq);
            let s: f64 = h.iter().zip(w.0.iter()).map(|(a, b)| a * b).sum();
            if s > *best {
                *best = s;
            }
            return;
        }
        for (i, j, t, sc) in all {
            if (*i..=*j).any(|k| covered[k]) {
                continue;
            }
            for k in *i..=*j {
                covered[k] = true;
            }
            seq.push(Piece {
                start: *i,
                end: *j,
                tgt: t.clone(),
                scores: *sc,
            });
            rec(inst, w, all, covered, seq, best);
            seq.pop();
            for k in *i..=*j {
                covered[k] = false;
            }
        }
    }
    rec(inst, w, &all, &mut covered, &mut seq, &mut best);
    best
}
