//! Result tables: an aligned text table and a tab-separated file that parses back.

use std::fmt::Write;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub training: String,
    pub lm: String,
    pub tuning: String,
    pub test: String,
    /// Raw metric values on their natural scale; `None` when not requested.
    pub bleu: Option<f64>,
    pub nist: Option<f64>,
    pub meteor: Option<f64>,
    pub ter: Option<f64>,
}

impl ReportRow {
    fn metrics(&self) -> [Option<f64>; 4] {
        [self.bleu, self.nist, self.meteor, self.ter]
    }
}

const TEXT_HEADER: [&str; 9] = ["Id", "Training", "Lang. Model", "Tuning", "Test", "BLEU", "NIST", "MET", "TER"];
const TSV_HEADER: &str = "id\ttraining\tlm\ttuning\ttest\tbleu\tnist\tmeteor\tter";

/// BLEU, METEOR and TER as percentages, NIST as is; two decimals.
pub fn format_metric(index: usize, value: Option<f64>) -> String {
    match value {
        None => "-".to_string(),
        Some(v) if index == 1 => format!("{v:.2}"),
        Some(v) => format!("{:.2}", v * 100.0),
    }
}

pub fn render_text(rows: &[ReportRow]) -> Result<String, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![r.id.clone(), r.training.clone(), r.lm.clone(), r.tuning.clone(), r.test.clone()];
            c.extend(r.metrics().into_iter().enumerate().map(|(i, v)| format_metric(i, v)));
            c
        })
        .collect();
    let widths: Vec<usize> = (0..TEXT_HEADER.len())
        .map(|k| {
            cells
                .iter()
                .map(|c| c[k].chars().count())
                .chain([TEXT_HEADER[k].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, cols: &[String]| {
        let mut parts = Vec::new();
        for (k, c) in cols.iter().enumerate() {
            let pad = widths[k] - c.chars().count();
            // text columns left-aligned, numbers right-aligned
            if k < 5 {
                parts.push(format!("{c}{}", " ".repeat(pad)));
            } else {
                parts.push(format!("{}{c}", " ".repeat(pad)));
            }
        }
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &TEXT_HEADER.map(String::from));
    for c in &cells {
        line(&mut out, c);
    }
    out.push_str("BLEU, MET and TER are percentages; lower TER is better.\n");
    Ok(out)
}

fn raw(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:?}"))
}

/// Full-precision values so that parsing returns exactly the rows given.
pub fn render_tsv(rows: &[ReportRow]) -> Result<String, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let mut out = format!("{TSV_HEADER}\n");
    for r in rows {
        for field in [&r.id, &r.training, &r.lm, &r.tuning, &r.test] {
            if field.contains(['\t', '\n']) {
                return Err(HarnessError::Invalid(format!("report field `{field}` contains a tab or newline")));
            }
        }
        let m = r.metrics().map(raw);
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", r.id, r.training, r.lm, r.tuning, r.test, m.join("\t"));
    }
    Ok(out)
}

/// Text table and delimited file.
pub fn render_report(rows: &[ReportRow]) -> Result<(String, String), HarnessError> {
    Ok((render_text(rows)?, render_tsv(rows)?))
}

pub fn parse_tsv(text: &str) -> Result<Vec<ReportRow>, HarnessError> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() || line == TSV_HEADER {
            continue;
        }
        let bad = |message: &str| HarnessError::BadReport {
            line: n + 1,
            message: message.to_string(),
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(bad("expected 9 tab-separated fields"));
        }
        let num = |s: &str| -> Result<Option<f64>, HarnessError> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad("bad number"))
            }
        };
        rows.push(ReportRow {
            id: f[0].into(),
            training: f[1].into(),
            lm: f[2].into(),
            tuning: f[3].into(),
            test: f[4].into(),
            bleu: num(f[5])?,
            nist: num(f[6])?,
            meteor: num(f[7])?,
            ter: num(f[8])?,
        });
    }
    Ok(rows)
}
