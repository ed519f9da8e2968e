//! Morphosyntactic annotations: tagger XML parsing, lemma selection,
//! infinitive/SVO corpus variants and Windows-1250 conversion.
//!
//! The XML vocabulary is the one emitted by the Wrocław tagger chain:
//!
//! ```xml
//! <chunkList><chunk><sentence>
//!   <tok><orth>ludzi</orth>
//!     <lex disamb="1"><base>człowiek</base><ctag>subst:pl:gen:m1</ctag></lex>
//!   </tok>
//! </sentence></chunk></chunkList>
//! ```
//!
//! Sentences come from `sentence` elements; top-level `tok`s outside any
//! sentence are separated by blank lines. Input lines that were protected by
//! an end-of-line marker token ([`MARKER`]) are re-segmented on the marker, so
//! the output stays line-aligned with the other side of a parallel corpus even
//! when the tagger re-splits sentences.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

/// Reserved end-of-line marker token.
pub const MARKER: &str = "_EOL_";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MorphoError {
    #[error("malformed XML at byte {position}: {message}")]
    MalformedXml { position: u64, message: String },
    #[error("token {tok} is missing `{field}`")]
    MissingField { tok: usize, field: &'static str },
    #[error("token {tok} has an invalid tag `{tag}`")]
    InvalidTag { tok: usize, tag: String },
    #[error("unknown variant kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("character U+{codepoint:04X} at byte {offset} has no mapping")]
    UnmappableChar { offset: usize, codepoint: u32 },
    #[error("invalid UTF-8 at byte {offset}")]
    InvalidUtf8 { offset: usize },
}

/// A colon-separated morphosyntactic tag, e.g. `subst:pl:gen:m1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CTag {
    pub word_class: String,
    pub attributes: Vec<String>,
}

impl FromStr for CTag {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let mut parts = s.split(':');
        let word_class = parts.next().unwrap_or_default();
        if word_class.is_empty() {
            return Err(());
        }
        Ok(CTag {
            word_class: word_class.to_string(),
            attributes: parts.map(str::to_string).collect(),
        })
    }
}

impl fmt::Display for CTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.word_class)?;
        for a in &self.attributes {
            write!(f, ":{a}")?;
        }
        Ok(())
    }
}

const CASES: [&str; 7] = ["nom", "gen", "dat", "acc", "inst", "loc", "voc"];
const FINITE_VERB: [&str; 8] = ["fin", "praet", "impt", "imps", "bedzie", "winien", "pred", "verb"];
const OTHER_VERBAL: [&str; 7] = ["inf", "ger", "pact", "ppas", "pcon", "pant", "aglt"];
const NOMINAL: [&str; 4] = ["subst", "depr", "ppron12", "ppron3"];
const ADJECTIVAL: [&str; 6] = ["adj", "adjc", "pact", "ppas", "num", "numcol"];
const CLAUSE_BOUNDARY: [&str; 3] = ["interp", "conj", "comp"];

impl CTag {
    pub fn case(&self) -> Option<&str> {
        self.attributes
            .iter()
            .map(String::as_str)
            .find(|a| CASES.contains(a))
    }

    pub fn is_finite_verb(&self) -> bool {
        FINITE_VERB.contains(&self.word_class.as_str())
    }

    pub fn is_verbal(&self) -> bool {
        self.is_finite_verb() || OTHER_VERBAL.contains(&self.word_class.as_str())
    }

    fn is_nominal(&self) -> bool {
        NOMINAL.contains(&self.word_class.as_str())
    }

    fn is_adjectival(&self) -> bool {
        ADJECTIVAL.contains(&self.word_class.as_str())
    }

    fn is_clause_boundary(&self) -> bool {
        CLAUSE_BOUNDARY.contains(&self.word_class.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub base: String,
    pub ctag: CTag,
    pub disamb: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub orth: String,
    /// Never empty.
    pub analyses: Vec<Analysis>,
}

impl AnnotatedToken {
    pub fn disamb_count(&self) -> usize {
        self.analyses.iter().filter(|a| a.disamb).count()
    }

    /// First disambiguated analysis, or the first one when none is marked.
    pub fn selected(&self) -> &Analysis {
        self.analyses
            .iter()
            .find(|a| a.disamb)
            .unwrap_or(&self.analyses[0])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotatedSentence {
    pub tokens: Vec<AnnotatedToken>,
    pub end_marker: bool,
}

pub fn select_stem(tok: &AnnotatedToken) -> &str {
    &tok.selected().base
}

#[derive(Default)]
struct TokBuilder {
    orth: Option<String>,
    lexes: Vec<Analysis>,
}

#[derive(Default)]
struct LexBuilder {
    disamb: bool,
    base: Option<String>,
    ctag: Option<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Capture {
    Orth,
    Base,
    CTag,
}

struct Parser {
    sentences: Vec<AnnotatedSentence>,
    loose: Vec<AnnotatedToken>,
    sentence: Option<Vec<AnnotatedToken>>,
    tok: Option<TokBuilder>,
    lex: Option<LexBuilder>,
    capture: Option<(Capture, String)>,
    tok_index: usize,
}

impl Parser {
    fn new() -> Self {
        Parser {
            sentences: Vec::new(),
            loose: Vec::new(),
            sentence: None,
            tok: None,
            lex: None,
            capture: None,
            tok_index: 0,
        }
    }

    fn flush_loose(&mut self) {
        if !self.loose.is_empty() {
            self.sentences.push(AnnotatedSentence {
                tokens: std::mem::take(&mut self.loose),
                end_marker: false,
            });
        }
    }

    fn start(&mut self, e: &BytesStart) -> Result<(), MorphoError> {
        match e.local_name().as_ref() {
            b"sentence" => {
                self.flush_loose();
                self.sentence = Some(Vec::new());
            }
            b"tok" => self.tok = Some(TokBuilder::default()),
            b"lex" if self.tok.is_some() => {
                let disamb = e
                    .try_get_attribute("disamb")
                    .ok()
                    .flatten()
                    .is_some_and(|a| a.value.as_ref() == b"1");
                self.lex = Some(LexBuilder {
                    disamb,
                    ..LexBuilder::default()
                });
            }
            b"orth" if self.tok.is_some() => self.capture = Some((Capture::Orth, String::new())),
            b"base" if self.lex.is_some() => self.capture = Some((Capture::Base, String::new())),
            b"ctag" if self.lex.is_some() => self.capture = Some((Capture::CTag, String::new())),
            _ => {}
        }
        Ok(())
    }

    fn end(&mut self, name: &[u8]) -> Result<(), MorphoError> {
        match name {
            b"orth" | b"base" | b"ctag" => {
                if let Some((kind, text)) = self.capture.take() {
                    let text = text.trim().to_string();
                    match kind {
                        Capture::Orth => {
                            if let Some(t) = self.tok.as_mut() {
                                t.orth = Some(text)
                            }
                        }
                        Capture::Base => {
                            if let Some(l) = self.lex.as_mut() {
                                l.base = Some(text)
                            }
                        }
                        Capture::CTag => {
                            if let Some(l) = self.lex.as_mut() {
                                l.ctag = Some(text)
                            }
                        }
                    }
                }
            }
            b"lex" => {
                if let Some(lex) = self.lex.take() {
                    let tok = self.tok_index;
                    let base = lex.base.ok_or(MorphoError::MissingField { tok, field: "base" })?;
                    let tag = lex.ctag.ok_or(MorphoError::MissingField { tok, field: "ctag" })?;
                    let ctag = tag
                        .parse()
                        .map_err(|_| MorphoError::InvalidTag { tok, tag: tag.clone() })?;
                    if let Some(t) = self.tok.as_mut() {
                        t.lexes.push(Analysis {
                            base,
                            ctag,
                            disamb: lex.disamb,
                        });
                    }
                }
            }
            b"tok" => {
                if let Some(builder) = self.tok.take() {
                    let tok = self.tok_index;
                    let orth = builder.orth.ok_or(MorphoError::MissingField { tok, field: "orth" })?;
                    if builder.lexes.is_empty() {
                        return Err(MorphoError::MissingField { tok, field: "lex" });
                    }
                    self.tok_index += 1;
                    let token = AnnotatedToken {
                        orth,
                        analyses: builder.lexes,
                    };
                    match self.sentence.as_mut() {
                        Some(s) => s.push(token),
                        None => self.loose.push(token),
                    }
                }
            }
            b"sentence" => {
                if let Some(tokens) = self.sentence.take() {
                    self.sentences.push(AnnotatedSentence {
                        tokens,
                        end_marker: false,
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn text(&mut self, text: &str) {
        if let Some((_, buf)) = self.capture.as_mut() {
            buf.push_str(text);
        } else if self.sentence.is_none() && self.tok.is_none() && is_blank_separator(text) {
            self.flush_loose();
        }
    }

    fn finish(mut self) -> Vec<AnnotatedSentence> {
        self.flush_loose();
        resegment_on_markers(self.sentences)
    }
}

fn is_blank_separator(text: &str) -> bool {
    text.trim().is_empty() && text.matches('\n').count() >= 2
}

fn resegment_on_markers(sentences: Vec<AnnotatedSentence>) -> Vec<AnnotatedSentence> {
    let has_marker = sentences
        .iter()
        .any(|s| s.tokens.iter().any(|t| t.orth == MARKER));
    if !has_marker {
        return sentences;
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    for tok in sentences.into_iter().flat_map(|s| s.tokens) {
        if tok.orth == MARKER {
            out.push(AnnotatedSentence {
                tokens: std::mem::take(&mut current),
                end_marker: true,
            });
        } else {
            current.push(tok);
        }
    }
    if !current.is_empty() {
        out.push(AnnotatedSentence {
            tokens: current,
            end_marker: false,
        });
    }
    out
}

/// Parses tagger XML into annotated sentences, preserving analysis order and `disamb` flags.
pub fn parse_annotations<R: BufRead>(input: R) -> Result<Vec<AnnotatedSentence>, MorphoError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().check_end_names = true;
    let mut parser = Parser::new();
    let mut depth: Vec<Vec<u8>> = Vec::new();
    let mut buf = Vec::new();
    let malformed = |reader: &Reader<R>, message: String| MorphoError::MalformedXml {
        position: reader.buffer_position(),
        message,
    };
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) => {
                depth.push(e.local_name().as_ref().to_vec());
                parser.start(&e)?;
            }
            Ok(Event::Empty(e)) => {
                parser.start(&e)?;
                parser.end(e.local_name().as_ref())?;
            }
            Ok(Event::End(e)) => {
                depth.pop();
                parser.end(e.local_name().as_ref())?;
            }
            Ok(Event::Text(t)) => {
                let text = t.unescape().map_err(|e| malformed(&reader, e.to_string()))?;
                parser.text(&text);
            }
            Ok(Event::CData(t)) => {
                let text = String::from_utf8_lossy(&t).into_owned();
                parser.text(&text);
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(e) => return Err(malformed(&reader, e.to_string())),
        }
        buf.clear();
    }
    if let Some(open) = depth.last() {
        return Err(malformed(
            &reader,
            format!("unclosed element `{}`", String::from_utf8_lossy(open)),
        ));
    }
    Ok(parser.finish())
}

fn escape(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

/// Serializes sentences back into the tagger XML vocabulary, one `sentence`
/// per input sentence; sentences with `end_marker` get a trailing marker token.
pub fn to_xml(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<chunkList>\n<chunk>\n");
    for s in sentences {
        out.push_str("<sentence>\n");
        for t in &s.tokens {
            out.push_str(&format!("<tok><orth>{}</orth>", escape(&t.orth)));
            for a in &t.analyses {
                out.push_str(&format!(
                    "<lex{}><base>{}</base><ctag>{}</ctag></lex>",
                    if a.disamb { " disamb=\"1\"" } else { "" },
                    escape(&a.base),
                    escape(&a.ctag.to_string())
                ));
            }
            out.push_str("</tok>\n");
        }
        if s.end_marker {
            out.push_str(&format!(
                "<tok><orth>{MARKER}</orth><lex disamb=\"1\"><base>{MARKER}</base><ctag>interp</ctag></lex></tok>\n"
            ));
        }
        out.push_str("</sentence>\n");
    }
    out.push_str("</chunk>\n</chunkList>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Inf,
    Svo,
    InfSvo,
}

impl FromStr for VariantKind {
    type Err = MorphoError;

    fn from_str(s: &str) -> Result<Self, MorphoError> {
        match s.to_ascii_lowercase().as_str() {
            "inf" => Ok(VariantKind::Inf),
            "svo" => Ok(VariantKind::Svo),
            "inf+svo" | "svo+inf" => Ok(VariantKind::InfSvo),
            _ => Err(MorphoError::UnknownKind(s.to_string())),
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariantKind::Inf => "inf",
            VariantKind::Svo => "svo",
            VariantKind::InfSvo => "inf+svo",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VariantOptions {
    /// Append [`MARKER`] to sentences that carried one.
    pub marker: bool,
    /// Lemmatize verbs only instead of every word class.
    pub verbs_only: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Bucket {
    Subject,
    Verb,
    Object,
    Trailing,
}

/// S, V, O ordering of one clause; returns a permutation of `0..tokens.len()`.
fn svo_order(tokens: &[AnnotatedToken]) -> Vec<usize> {
    let identity: Vec<usize> = (0..tokens.len()).collect();
    let tags: Vec<&CTag> = tokens.iter().map(|t| &t.selected().ctag).collect();
    let Some(verb) = tags.iter().position(|t| t.is_finite_verb()) else {
        return identity;
    };

    // maximal runs of nominal/adjectival tokens sharing one case, keeping those with a nominal head
    let mut chunks: Vec<(usize, usize, &str)> = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        let case = match tags[i].case() {
            Some(c) if tags[i].is_nominal() || tags[i].is_adjectival() => c,
            _ => {
                i += 1;
                continue;
            }
        };
        let mut j = i + 1;
        while j < tags.len()
            && (tags[j].is_nominal() || tags[j].is_adjectival())
            && tags[j].case() == Some(case)
        {
            j += 1;
        }
        if tags[i..j].iter().any(|t| t.is_nominal()) {
            chunks.push((i, j, case));
        }
        i = j;
    }

    let mut bucket: Vec<Option<Bucket>> = vec![None; tokens.len()];
    bucket[verb] = Some(Bucket::Verb);
    if let Some(&(s, e, _)) = chunks.iter().find(|c| c.2 == "nom") {
        bucket[s..e].fill(Some(Bucket::Subject));
    }
    if let Some(&(s, e, _)) = chunks.iter().find(|c| c.2 == "acc" || c.2 == "gen") {
        bucket[s..e].fill(Some(Bucket::Object));
    }

    // unclassified tokens travel with the next classified one
    let mut keys = vec![Bucket::Trailing; tokens.len()];
    let mut next = Bucket::Trailing;
    for k in (0..tokens.len()).rev() {
        if let Some(b) = bucket[k] {
            next = b;
        }
        keys[k] = next;
    }
    let mut order = identity;
    order.sort_by_key(|&k| keys[k]);
    order
}

fn svo_sentence(tokens: &[AnnotatedToken]) -> Vec<usize> {
    let mut order = Vec::with_capacity(tokens.len());
    let mut start = 0;
    for (k, tok) in tokens.iter().enumerate() {
        if tok.selected().ctag.is_clause_boundary() {
            order.extend(svo_order(&tokens[start..k]).into_iter().map(|i| i + start));
            order.push(k);
            start = k + 1;
        }
    }
    order.extend(svo_order(&tokens[start..]).into_iter().map(|i| i + start));
    order
}

fn inf_form(tok: &AnnotatedToken, verbs_only: bool) -> String {
    let chosen = tok.selected();
    if verbs_only && !chosen.ctag.is_verbal() {
        tok.orth.clone()
    } else {
        chosen.base.clone()
    }
}

/// Renders one sentence of the requested variant as a token sequence.
pub fn variant_tokens(sentence: &AnnotatedSentence, kind: VariantKind, opts: VariantOptions) -> Vec<String> {
    let order: Vec<usize> = match kind {
        VariantKind::Inf => (0..sentence.tokens.len()).collect(),
        VariantKind::Svo | VariantKind::InfSvo => svo_sentence(&sentence.tokens),
    };
    let mut out: Vec<String> = order
        .into_iter()
        .map(|i| {
            let tok = &sentence.tokens[i];
            match kind {
                VariantKind::Svo => tok.orth.clone(),
                VariantKind::Inf | VariantKind::InfSvo => inf_form(tok, opts.verbs_only),
            }
        })
        .collect();
    if opts.marker && sentence.end_marker {
        out.push(MARKER.to_string());
    }
    out
}

/// One output line per sentence.
pub fn make_variant(sentences: &[AnnotatedSentence], kind: VariantKind, opts: VariantOptions) -> Vec<String> {
    sentences
        .iter()
        .map(|s| variant_tokens(s, kind, opts).join(" "))
        .collect()
}

/// Code points for bytes 0x80..=0xFF; 0 marks the five undefined bytes.
const CP1250_HIGH: [u16; 128] = [
    0x20AC, 0, 0x201A, 0, 0x201E, 0x2026, 0x2020, 0x2021,
    0, 0x2030, 0x0160, 0x2039, 0x015A, 0x0164, 0x017D, 0x0179,
    0, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
    0, 0x2122, 0x0161, 0x203A, 0x015B, 0x0165, 0x017E, 0x017A,
    0x00A0, 0x02C7, 0x02D8, 0x0141, 0x00A4, 0x0104, 0x00A6, 0x00A7,
    0x00A8, 0x00A9, 0x015E, 0x00AB, 0x00AC, 0x00AD, 0x00AE, 0x017B,
    0x00B0, 0x00B1, 0x02DB, 0x0142, 0x00B4, 0x00B5, 0x00B6, 0x00B7,
    0x00B8, 0x0105, 0x015F, 0x00BB, 0x013D, 0x02DD, 0x013E, 0x017C,
    0x0154, 0x00C1, 0x00C2, 0x0102, 0x00C4, 0x0139, 0x0106, 0x00C7,
    0x010C, 0x00C9, 0x0118, 0x00CB, 0x011A, 0x00CD, 0x00CE, 0x010E,
    0x0110, 0x0143, 0x0147, 0x00D3, 0x00D4, 0x0150, 0x00D6, 0x00D7,
    0x0158, 0x016E, 0x00DA, 0x0170, 0x00DC, 0x00DD, 0x0162, 0x00DF,
    0x0155, 0x00E1, 0x00E2, 0x0103, 0x00E4, 0x013A, 0x0107, 0x00E7,
    0x010D, 0x00E9, 0x0119, 0x00EB, 0x011B, 0x00ED, 0x00EE, 0x010F,
    0x0111, 0x0144, 0x0148, 0x00F3, 0x00F4, 0x0151, 0x00F6, 0x00F7,
    0x0159, 0x016F, 0x00FA, 0x0171, 0x00FC, 0x00FD, 0x0163, 0x02D9,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingDirection {
    Cp1250ToUtf8,
    Utf8ToCp1250,
}

fn cp1250_byte(c: char) -> Option<u8> {
    let cp = c as u32;
    if cp < 0x80 {
        return Some(cp as u8);
    }
    CP1250_HIGH
        .iter()
        .position(|&x| x != 0 && u32::from(x) == cp)
        .map(|i| 0x80 + i as u8)
}

pub fn convert_encoding(bytes: &[u8], direction: EncodingDirection) -> Result<Vec<u8>, EncodingError> {
    match direction {
        EncodingDirection::Cp1250ToUtf8 => {
            let mut out = String::with_capacity(bytes.len());
            for (offset, &b) in bytes.iter().enumerate() {
                if b < 0x80 {
                    out.push(b as char);
                    continue;
                }
                let cp = CP1250_HIGH[usize::from(b - 0x80)];
                let c = char::from_u32(u32::from(cp)).filter(|_| cp != 0).ok_or(
                    EncodingError::UnmappableChar {
                        offset,
                        codepoint: u32::from(b),
                    },
                )?;
                out.push(c);
            }
            Ok(out.into_bytes())
        }
        EncodingDirection::Utf8ToCp1250 => {
            let text = std::str::from_utf8(bytes).map_err(|e| EncodingError::InvalidUtf8 {
                offset: e.valid_up_to(),
            })?;
            text.char_indices()
                .map(|(offset, c)| {
                    cp1250_byte(c).ok_or(EncodingError::UnmappableChar {
                        offset,
                        codepoint: c as u32,
                    })
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const LUDZI: &str = r#"<tok>
<orth>ludzi</orth>
<lex disamb="1"> <base>człowiek</base>
<ctag>subst:pl:gen:m1</ctag></lex>
<lex disamb="1"> <base>ludzie</base>
<ctag>subst:pl:gen:m1</ctag></lex>
</tok>"#;

    fn tok(orth: &str, analyses: &[(&str, &str, bool)]) -> AnnotatedToken {
        AnnotatedToken {
            orth: orth.to_string(),
            analyses: analyses
                .iter()
                .map(|&(b, t, d)| Analysis {
                    base: b.to_string(),
                    ctag: t.parse().unwrap(),
                    disamb: d,
                })
                .collect(),
        }
    }

    fn sentence(toks: Vec<AnnotatedToken>) -> AnnotatedSentence {
        AnnotatedSentence {
            tokens: toks,
            end_marker: false,
        }
    }

    #[test]
    fn ludzi_fragment() {
        let s = parse_annotations(LUDZI.as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
        let t = &s[0].tokens[0];
        assert_eq!(t.orth, "ludzi");
        assert_eq!(t.analyses.len(), 2);
        assert_eq!(t.analyses[0].base, "człowiek");
        assert_eq!(t.analyses[1].base, "ludzie");
        assert_eq!(t.analyses[0].ctag.to_string(), "subst:pl:gen:m1");
        assert_eq!(t.analyses[0].ctag.case(), Some("gen"));
        assert_eq!(t.disamb_count(), 2);
        assert_eq!(select_stem(t), "człowiek");
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_annotations("<tok><orth>a</orth></tok>".as_bytes()),
            Err(MorphoError::MissingField { tok: 0, field: "lex" })
        );
        assert_eq!(
            parse_annotations("<tok><lex><base>a</base><ctag>x</ctag></lex></tok>".as_bytes()),
            Err(MorphoError::MissingField { tok: 0, field: "orth" })
        );
        assert!(matches!(
            parse_annotations("<sentence><tok><orth>a</orth></sentence>".as_bytes()),
            Err(MorphoError::MalformedXml { .. })
        ));
        assert!(matches!(
            parse_annotations("<chunkList><sentence>".as_bytes()),
            Err(MorphoError::MalformedXml { .. })
        ));
        assert!(parse_annotations("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn sentence_boundaries() {
        let t = "<tok><orth>a</orth><lex><base>a</base><ctag>qub</ctag></lex></tok>";
        let xml = format!("<chunkList><chunk><sentence>{t}{t}</sentence><sentence>{t}</sentence></chunk></chunkList>");
        let s = parse_annotations(xml.as_bytes()).unwrap();
        assert_eq!(s.iter().map(|s| s.tokens.len()).collect::<Vec<_>>(), vec![2, 1]);

        let loose = format!("{t}\n{t}\n\n{t}\n");
        let s = parse_annotations(loose.as_bytes()).unwrap();
        assert_eq!(s.iter().map(|s| s.tokens.len()).collect::<Vec<_>>(), vec![2, 1]);
    }

    #[test]
    fn markers_resegment() {
        let t = "<tok><orth>a</orth><lex><base>a</base><ctag>qub</ctag></lex></tok>";
        let m = format!("<tok><orth>{MARKER}</orth><lex><base>{MARKER}</base><ctag>interp</ctag></lex></tok>");
        // the tagger glued two lines into one sentence and split a third
        let xml = format!("<chunk><sentence>{t}{m}{t}</sentence><sentence>{t}{m}</sentence></chunk>");
        let s = parse_annotations(xml.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|s| s.end_marker));
        assert_eq!(s[1].tokens.len(), 2);
        assert_eq!(
            make_variant(&s, VariantKind::Inf, VariantOptions { marker: true, verbs_only: false }),
            vec![format!("a {MARKER}"), format!("a a {MARKER}")]
        );
    }

    #[test]
    fn stem_selection() {
        assert_eq!(select_stem(&tok("kot", &[("kot", "subst:sg:nom:m2", false)])), "kot");
        let t = tok(
            "kota",
            &[("kot", "subst:sg:gen:m2", false), ("kota", "subst:sg:nom:f", true)],
        );
        assert_eq!(select_stem(&t), "kota");
    }

    fn jan_kupil() -> AnnotatedSentence {
        sentence(vec![
            tok("samochód", &[("samochód", "subst:sg:acc:m3", true)]),
            tok("nowy", &[("nowy", "adj:sg:acc:m3:pos", true)]),
            tok("kupił", &[("kupić", "praet:sg:m1:perf", true)]),
            tok("Jan", &[("Jan", "subst:sg:nom:m1", true)]),
        ])
    }

    #[test]
    fn svo_reorders_clause() {
        let s = jan_kupil();
        let opts = VariantOptions::default();
        assert_eq!(make_variant(std::slice::from_ref(&s), VariantKind::Svo, opts), vec!["Jan kupił samochód nowy"]);
        assert_eq!(make_variant(std::slice::from_ref(&s), VariantKind::InfSvo, opts), vec!["Jan kupić samochód nowy"]);
        assert_eq!(make_variant(&[s], VariantKind::Inf, opts), vec!["samochód nowy kupić Jan"]);
    }

    #[test]
    fn svo_keeps_clause_boundaries_and_attaches_free_tokens() {
        let s = sentence(vec![
            tok("Kupiłem", &[("kupić", "praet:sg:m1:perf", true)]),
            tok("sobie", &[("siebie", "siebie:dat", true)]),
            tok("nowy", &[("nowy", "adj:sg:acc:m3:pos", true)]),
            tok("samochód", &[("samochód", "subst:sg:acc:m3", true)]),
            tok(",", &[(",", "interp", true)]),
            tok("psa", &[("pies", "subst:sg:acc:m2", true)]),
            tok("widzi", &[("widzieć", "fin:sg:ter:imperf", true)]),
            tok("kot", &[("kot", "subst:sg:nom:m2", true)]),
        ]);
        assert_eq!(
            make_variant(&[s], VariantKind::Svo, VariantOptions::default()),
            vec!["Kupiłem sobie nowy samochód , kot widzi psa"]
        );
    }

    #[test]
    fn verbless_and_verbs_only() {
        let s = sentence(vec![
            tok("dobrzy", &[("dobry", "adj:pl:nom:m1:pos", true)]),
            tok("ludzie", &[("człowiek", "subst:pl:nom:m1", true)]),
        ]);
        let opts = VariantOptions::default();
        assert_eq!(make_variant(std::slice::from_ref(&s), VariantKind::Svo, opts), vec!["dobrzy ludzie"]);
        let verbs = VariantOptions { verbs_only: true, ..opts };
        assert_eq!(make_variant(&[s], VariantKind::Inf, verbs), vec!["dobrzy ludzie"]);
        assert_eq!(
            make_variant(&[jan_kupil()], VariantKind::Inf, verbs),
            vec!["samochód nowy kupić Jan"]
        );
    }

    #[test]
    fn cp1250_table_points() {
        let d = EncodingDirection::Cp1250ToUtf8;
        assert_eq!(convert_encoding(&[0xF3], d).unwrap(), vec![0xC3, 0xB3]);
        assert_eq!(convert_encoding(b"plain ascii", d).unwrap(), b"plain ascii");
        assert_eq!(
            convert_encoding(&[0x41, 0x81], d),
            Err(EncodingError::UnmappableChar { offset: 1, codepoint: 0x81 })
        );
        let e = EncodingDirection::Utf8ToCp1250;
        assert_eq!(convert_encoding("€".as_bytes(), e).unwrap(), vec![0x80]);
        assert_eq!(convert_encoding("zażółć".as_bytes(), e).unwrap(), vec![b'z', b'a', 0xBF, 0xF3, 0xB3, 0xE6]);
        assert_eq!(
            convert_encoding("a☺".as_bytes(), e),
            Err(EncodingError::UnmappableChar { offset: 1, codepoint: 0x263A })
        );
        assert_eq!(convert_encoding(&[0x61, 0xFF], e), Err(EncodingError::InvalidUtf8 { offset: 1 }));
    }

    #[test]
    fn cp1250_matches_encoding_rs() {
        for b in 0x80u8..=0xFF {
            let ours = convert_encoding(&[b], EncodingDirection::Cp1250ToUtf8);
            let byte = [b];
            let (theirs, _, _) = encoding_rs::WINDOWS_1250.decode(&byte);
            match ours {
                Ok(bytes) => assert_eq!(String::from_utf8(bytes).unwrap(), theirs),
                // undefined in the Microsoft table; WHATWG maps these to C1 controls
                Err(_) => assert_eq!(theirs.chars().next().unwrap() as u32, u32::from(b)),
            }
        }
    }

    fn arb_token() -> impl Strategy<Value = AnnotatedToken> {
        let tags = prop_oneof![
            Just("subst:sg:nom:m1"),
            Just("subst:sg:acc:m3"),
            Just("subst:pl:gen:f"),
            Just("adj:sg:nom:m1:pos"),
            Just("adj:sg:acc:m3:pos"),
            Just("fin:sg:ter:imperf"),
            Just("praet:sg:f:perf"),
            Just("interp"),
            Just("qub"),
            Just("conj"),
        ];
        (
            "[a-zł]{1,4}",
            proptest::collection::vec(("[a-z]{1,3}", tags, any::<bool>()), 1..3),
        )
            .prop_map(|(orth, an)| AnnotatedToken {
                orth,
                analyses: an
                    .into_iter()
                    .map(|(b, t, d)| Analysis {
                        base: b,
                        ctag: t.parse().unwrap(),
                        disamb: d,
                    })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn stem_is_one_of_the_bases(t in arb_token()) {
            let stem = select_stem(&t);
            prop_assert!(t.analyses.iter().any(|a| a.base == stem));
        }

        #[test]
        fn variants_preserve_tokens(toks in proptest::collection::vec(arb_token(), 0..10)) {
            let s = sentence(toks);
            let opts = VariantOptions::default();
            let inf = variant_tokens(&s, VariantKind::Inf, opts);
            prop_assert_eq!(inf.len(), s.tokens.len());
            let mut svo = variant_tokens(&s, VariantKind::Svo, opts);
            let mut orig: Vec<String> = s.tokens.iter().map(|t| t.orth.clone()).collect();
            svo.sort();
            orig.sort();
            prop_assert_eq!(svo, orig);
        }

        #[test]
        fn xml_round_trip(sents in proptest::collection::vec(proptest::collection::vec(arb_token(), 1..5), 0..4)) {
            let sents: Vec<AnnotatedSentence> = sents.into_iter().map(sentence).collect();
            prop_assert_eq!(parse_annotations(to_xml(&sents).as_bytes()).unwrap(), sents);
        }

        #[test]
        fn cp1250_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let valid: Vec<u8> = bytes.into_iter().filter(|b| ![0x81, 0x83, 0x88, 0x90, 0x98].contains(b)).collect();
            let utf8 = convert_encoding(&valid, EncodingDirection::Cp1250ToUtf8).unwrap();
            prop_assert_eq!(convert_encoding(&utf8, EncodingDirection::Utf8ToCp1250).unwrap(), valid);
        }
    }
}
