//! Synthetic Polish-like/English-like parallel data with tagger annotations.
//!
//! Sentences are transitive clauses (optionally negated) with inflected
//! nouns and adjectives and a free constituent order on the Polish side.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::morpho::{Analysis, AnnotatedSentence, AnnotatedToken, CTag};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Gender {
    M1,
    M2,
    M3,
    F,
    N,
}

impl Gender {
    fn tag(self) -> &'static str {
        match self {
            Gender::M1 => "m1",
            Gender::M2 => "m2",
            Gender::M3 => "m3",
            Gender::F => "f",
            Gender::N => "n",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Case {
    Nom,
    Acc,
    Gen,
}

impl Case {
    fn tag(self) -> &'static str {
        match self {
            Case::Nom => "nom",
            Case::Acc => "acc",
            Case::Gen => "gen",
        }
    }
}

struct Noun {
    lemma: &'static str,
    gender: Gender,
    /// nom, acc, gen singular then nom, acc, gen plural
    forms: [&'static str; 6],
    en: (&'static str, &'static str),
}

const NOUNS: &[Noun] = &[
    Noun { lemma: "kot", gender: Gender::M2, forms: ["kot", "kota", "kota", "koty", "koty", "kotów"], en: ("cat", "cats") },
    Noun { lemma: "pies", gender: Gender::M2, forms: ["pies", "psa", "psa", "psy", "psy", "psów"], en: ("dog", "dogs") },
    Noun { lemma: "chłopiec", gender: Gender::M1, forms: ["chłopiec", "chłopca", "chłopca", "chłopcy", "chłopców", "chłopców"], en: ("boy", "boys") },
    Noun { lemma: "człowiek", gender: Gender::M1, forms: ["człowiek", "człowieka", "człowieka", "ludzie", "ludzi", "ludzi"], en: ("man", "people") },
    Noun { lemma: "dom", gender: Gender::M3, forms: ["dom", "dom", "domu", "domy", "domy", "domów"], en: ("house", "houses") },
    Noun { lemma: "list", gender: Gender::M3, forms: ["list", "list", "listu", "listy", "listy", "listów"], en: ("letter", "letters") },
    Noun { lemma: "kobieta", gender: Gender::F, forms: ["kobieta", "kobietę", "kobiety", "kobiety", "kobiety", "kobiet"], en: ("woman", "women") },
    Noun { lemma: "dziewczyna", gender: Gender::F, forms: ["dziewczyna", "dziewczynę", "dziewczyny", "dziewczyny", "dziewczyny", "dziewczyn"], en: ("girl", "girls") },
    Noun { lemma: "książka", gender: Gender::F, forms: ["książka", "książkę", "książki", "książki", "książki", "książek"], en: ("book", "books") },
    Noun { lemma: "jabłko", gender: Gender::N, forms: ["jabłko", "jabłko", "jabłka", "jabłka", "jabłka", "jabłek"], en: ("apple", "apples") },
];

struct Adjective {
    lemma: &'static str,
    stem: &'static str,
    m1_plural: &'static str,
    en: &'static str,
}

const ADJECTIVES: &[Adjective] = &[
    Adjective { lemma: "mały", stem: "mał", m1_plural: "mali", en: "small" },
    Adjective { lemma: "nowy", stem: "now", m1_plural: "nowi", en: "new" },
    Adjective { lemma: "stary", stem: "star", m1_plural: "starzy", en: "old" },
    Adjective { lemma: "duży", stem: "duż", m1_plural: "duzi", en: "big" },
];

struct Verb {
    lemma: &'static str,
    /// third person singular, plural
    forms: [&'static str; 2],
    en: (&'static str, &'static str),
    /// Animals may act as subjects; otherwise only people.
    animate_subject: bool,
}

const VERBS: &[Verb] = &[
    Verb { lemma: "widzieć", forms: ["widzi", "widzą"], en: ("sees", "see"), animate_subject: true },
    Verb { lemma: "lubić", forms: ["lubi", "lubią"], en: ("likes", "like"), animate_subject: true },
    Verb { lemma: "mieć", forms: ["ma", "mają"], en: ("has", "have"), animate_subject: true },
    Verb { lemma: "czytać", forms: ["czyta", "czytają"], en: ("reads", "read"), animate_subject: false },
    Verb { lemma: "pisać", forms: ["pisze", "piszą"], en: ("writes", "write"), animate_subject: false },
    Verb { lemma: "kupować", forms: ["kupuje", "kupują"], en: ("buys", "buy"), animate_subject: false },
];

fn is_animate(g: Gender) -> bool {
    matches!(g, Gender::M1 | Gender::M2)
}

fn human(n: &Noun) -> bool {
    matches!(n.lemma, "chłopiec" | "człowiek" | "kobieta" | "dziewczyna")
}

fn adjective_form(a: &Adjective, g: Gender, plural: bool, case: Case) -> String {
    let ending = match (plural, case, g) {
        (false, Case::Nom, Gender::M1 | Gender::M2 | Gender::M3) => "y",
        (false, Case::Nom, Gender::F) => "a",
        (false, Case::Nom | Case::Acc, Gender::N) => "e",
        (false, Case::Acc, Gender::M1 | Gender::M2) => "ego",
        (false, Case::Acc, Gender::M3) => "y",
        (false, Case::Acc, Gender::F) => "ą",
        (false, Case::Gen, Gender::F) => "ej",
        (false, Case::Gen, _) => "ego",
        (true, Case::Nom, Gender::M1) => return a.m1_plural.to_string(),
        (true, Case::Acc, Gender::M1) | (true, Case::Gen, _) => "ych",
        (true, _, _) => "e",
    };
    format!("{}{}", a.stem, ending)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToySentence {
    pub annotated: AnnotatedSentence,
    pub english: Vec<String>,
}

impl ToySentence {
    pub fn polish(&self) -> Vec<String> {
        self.annotated.tokens.iter().map(|t| t.orth.clone()).collect()
    }
}

fn token(orth: &str, base: &str, ctag: &str) -> AnnotatedToken {
    AnnotatedToken {
        orth: orth.to_string(),
        analyses: vec![Analysis {
            base: base.to_string(),
            ctag: ctag.parse::<CTag>().expect("well-formed tag"),
            disamb: true,
        }],
    }
}

struct Phrase {
    pl: Vec<AnnotatedToken>,
    en: Vec<String>,
}

fn noun_phrase(rng: &mut ChaCha8Rng, noun: &Noun, case: Case) -> Phrase {
    let plural = rng.gen_bool(0.3);
    let number = if plural { "pl" } else { "sg" };
    let mut pl = Vec::new();
    let mut en = vec!["the".to_string()];
    if rng.gen_bool(0.35) {
        let a = &ADJECTIVES[rng.gen_range(0..ADJECTIVES.len())];
        let form = adjective_form(a, noun.gender, plural, case);
        pl.push(token(&form, a.lemma, &format!("adj:{number}:{}:{}:pos", case.tag(), noun.gender.tag())));
        en.push(a.en.to_string());
    }
    let idx = if plural { 3 } else { 0 } + case as usize;
    pl.push(token(
        noun.forms[idx],
        noun.lemma,
        &format!("subst:{number}:{}:{}", case.tag(), noun.gender.tag()),
    ));
    en.push(if plural { noun.en.1 } else { noun.en.0 }.to_string());
    Phrase { pl, en }
}

fn capitalize(tokens: &mut [String]) {
    if let Some(first) = tokens.first_mut() {
        let mut c = first.chars();
        if let Some(h) = c.next() {
            *first = h.to_uppercase().chain(c).collect();
        }
    }
}

pub fn sentence(rng: &mut ChaCha8Rng) -> ToySentence {
    let verb = &VERBS[rng.gen_range(0..VERBS.len())];
    let subjects: Vec<&Noun> = NOUNS
        .iter()
        .filter(|n| if verb.animate_subject { is_animate(n.gender) || human(n) } else { human(n) })
        .collect();
    let subj_noun = subjects[rng.gen_range(0..subjects.len())];
    let obj_noun = &NOUNS[rng.gen_range(0..NOUNS.len())];
    let negated = rng.gen_bool(0.2);

    let subj = noun_phrase(rng, subj_noun, Case::Nom);
    let obj = noun_phrase(rng, obj_noun, if negated { Case::Gen } else { Case::Acc });
    let subj_plural = subj.en.last().map(String::as_str) == Some(subj_noun.en.1);
    let number = if subj_plural { "pl" } else { "sg" };

    let mut vp = Vec::new();
    let mut vp_en = Vec::new();
    if negated {
        vp.push(token("nie", "nie", "qub"));
        vp_en.push(if subj_plural { "do" } else { "does" }.to_string());
        vp_en.push("not".to_string());
        vp_en.push(verb.en.1.to_string());
    } else {
        vp_en.push(if subj_plural { verb.en.1 } else { verb.en.0 }.to_string());
    }
    vp.push(token(
        verb.forms[usize::from(subj_plural)],
        verb.lemma,
        &format!("fin:{number}:ter:imperf"),
    ));

    // constituent order on the Polish side: S V O, O V S, S O V or V S O
    let order: [usize; 3] = match rng.gen_range(0..10) {
        0..=5 => [0, 1, 2],
        6 | 7 => [2, 1, 0],
        8 => [0, 2, 1],
        _ => [1, 0, 2],
    };
    let parts = [subj.pl, vp, obj.pl];
    let mut tokens: Vec<AnnotatedToken> = order.iter().flat_map(|&k| parts[k].clone()).collect();
    tokens.push(token(".", ".", "interp"));
    let mut english: Vec<String> = subj.en.into_iter().chain(vp_en).chain(obj.en).collect();
    english.push(".".to_string());

    let mut orths: Vec<String> = tokens.iter().map(|t| t.orth.clone()).collect();
    capitalize(&mut orths);
    for (t, o) in tokens.iter_mut().zip(orths) {
        t.orth = o;
    }
    capitalize(&mut english);
    ToySentence {
        annotated: AnnotatedSentence {
            tokens,
            end_marker: false,
        },
        english,
    }
}

/// Source lines, target lines and the annotation of each source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyCorpus {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub annotations: Vec<AnnotatedSentence>,
}

/// `n` sentence pairs with a little noise for the cleaning stage to remove:
/// occasional markup, doubled pairs and stuttered tokens.
pub fn generate(n: usize, seed: u64) -> ToyCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ToyCorpus {
        src: Vec::with_capacity(n),
        tgt: Vec::with_capacity(n),
        annotations: Vec::with_capacity(n),
    };
    while out.src.len() < n {
        let s = sentence(&mut rng);
        let mut src = s.polish().join(" ");
        let mut tgt = s.english.join(" ");
        match rng.gen_range(0..100) {
            0..=2 => {
                src = format!("<p>{src}</p>");
                tgt = format!("<p>{tgt}</p>");
            }
            3 => {
                let w = s.english.choose(&mut rng).cloned().unwrap_or_default();
                tgt = format!("{tgt} {w} {w} {w}");
            }
            _ => {}
        }
        let copies = if rng.gen_range(0..100) < 2 { 2 } else { 1 };
        for _ in 0..copies.min(n - out.src.len()) {
            out.src.push(src.clone());
            out.tgt.push(tgt.clone());
            out.annotations.push(s.annotated.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morpho::{make_variant, parse_annotations, to_xml, VariantKind, VariantOptions};

    #[test]
    fn generation_is_seeded() {
        assert_eq!(generate(50, 3), generate(50, 3));
        assert_ne!(generate(50, 3).src, generate(50, 4).src);
    }

    #[test]
    fn annotations_match_source_tokens() {
        let c = generate(200, 1);
        let parsed = parse_annotations(to_xml(&c.annotations).as_bytes()).unwrap();
        assert_eq!(parsed, c.annotations);
        for (line, ann) in c.src.iter().zip(&c.annotations) {
            let orths: Vec<&str> = ann.tokens.iter().map(|t| t.orth.as_str()).collect();
            assert!(line.contains(&orths.join(" ")));
        }
    }

    #[test]
    fn svo_variant_puts_subject_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let s = sentence(&mut rng);
            let line = &make_variant(std::slice::from_ref(&s.annotated), VariantKind::Svo, VariantOptions::default())[0];
            let first = line.split(' ').next().unwrap();
            let subject_first = s
                .annotated
                .tokens
                .iter()
                .find(|t| t.analyses[0].ctag.case() == Some("nom"))
                .map(|t| t.orth.as_str());
            assert_eq!(Some(first.to_lowercase()), subject_first.map(str::to_lowercase));
        }
    }

    #[test]
    fn adjective_agreement() {
        let a = &ADJECTIVES[3];
        assert_eq!(adjective_form(a, Gender::F, false, Case::Acc), "dużą");
        assert_eq!(adjective_form(a, Gender::M1, true, Case::Nom), "duzi");
        assert_eq!(adjective_form(a, Gender::M2, false, Case::Acc), "dużego");
        assert_eq!(adjective_form(a, Gender::M3, true, Case::Gen), "dużych");
    }
}
