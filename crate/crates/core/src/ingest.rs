//! Reading and writing score files.
//!
//! JSONL holds one object per line:
//! `{"id": "q1", "label": 1, "scores": {"entropy": 0.42}, "token_logprobs": [...], "step_entropies": [...]}`.
//! Only `label` is required. CSV has a header row with a required `label`
//! column, an optional `id` column, and any number of score columns.
//! Log-probabilities are natural-log throughout.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{LabeledDataset, ScoreRecord};

/// Score name of the calibrated probability in written files.
pub const TAC_PROB: &str = "tac_prob";
pub const LOG_MSP: &str = "log_msp";
pub const PERPLEXITY: &str = "perplexity";
pub const MEAN_ENTROPY: &str = "mean_entropy";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// `.csv` is CSV, anything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Jsonl,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}` (expected jsonl or csv)"))),
        }
    }
}

fn check_logprobs(lp: &[f64]) -> Result<()> {
    if lp.is_empty() {
        return Err(Error::EmptyInput("token log-probabilities are empty"));
    }
    if let Some(v) = lp.iter().find(|v| !(**v <= 0.0) || !v.is_finite()) {
        return Err(Error::OutOfRange { what: "token log-probability (must be finite and <= 0)", value: *v });
    }
    Ok(())
}

/// Sequence log-probability, the sum of token log-probabilities.
pub fn derive_log_msp(token_logprobs: &[f64]) -> Result<f64> {
    check_logprobs(token_logprobs)?;
    Ok(token_logprobs.iter().sum())
}

/// `exp(−mean(logprobs))`.
pub fn derive_perplexity(token_logprobs: &[f64]) -> Result<f64> {
    check_logprobs(token_logprobs)?;
    let mean = token_logprobs.iter().sum::<f64>() / token_logprobs.len() as f64;
    Ok((-mean).exp())
}

pub fn derive_mean_entropy(step_entropies: &[f64]) -> Result<f64> {
    if step_entropies.is_empty() {
        return Err(Error::EmptyInput("step entropies are empty"));
    }
    if let Some(v) = step_entropies.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::OutOfRange { what: "step entropy (must be finite and >= 0)", value: *v });
    }
    Ok(step_entropies.iter().sum::<f64>() / step_entropies.len() as f64)
}

/// Adds `log_msp`, `perplexity` and `mean_entropy` from the raw arrays when
/// the record does not already carry them.
pub fn add_derived_scores(rec: &mut ScoreRecord) -> Result<()> {
    if let Some(lp) = &rec.token_logprobs {
        if !rec.scores.contains_key(LOG_MSP) {
            rec.scores.insert(LOG_MSP.into(), derive_log_msp(lp)?);
        }
        if !rec.scores.contains_key(PERPLEXITY) {
            rec.scores.insert(PERPLEXITY.into(), derive_perplexity(lp)?);
        }
    }
    if let Some(h) = &rec.step_entropies {
        if !rec.scores.contains_key(MEAN_ENTROPY) {
            rec.scores.insert(MEAN_ENTROPY.into(), derive_mean_entropy(h)?);
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct JsonLine {
    id: Option<Value>,
    label: Option<Value>,
    #[serde(default)]
    scores: BTreeMap<String, f64>,
    token_logprobs: Option<Vec<f64>>,
    step_entropies: Option<Vec<f64>>,
    meta: Option<BTreeMap<String, String>>,
    tac_prob: Option<f64>,
}

fn parse_label(v: Option<&Value>) -> std::result::Result<bool, String> {
    match v {
        None | Some(Value::Null) => Err("missing label".into()),
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::Number(n)) if n.as_f64() == Some(0.0) => Ok(false),
        Some(Value::Number(n)) if n.as_f64() == Some(1.0) => Ok(true),
        Some(other) => Err(format!("label must be 0 or 1, got {other}")),
    }
}

fn parse_label_str(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "1" | "1.0" | "true" => Ok(true),
        "0" | "0.0" | "false" => Ok(false),
        "" => Err("missing label".into()),
        other => Err(format!("label must be 0 or 1, got `{other}`")),
    }
}

/// Finishes a parsed record: derived scores, invariants, id uniqueness.
fn finish(mut rec: ScoreRecord, line: usize, seen: &mut HashSet<String>) -> Result<ScoreRecord> {
    let parse_err = |message: String| Error::Parse { line, message };
    add_derived_scores(&mut rec).map_err(|e| parse_err(e.to_string()))?;
    rec.validate().map_err(|e| parse_err(e.to_string()))?;
    if !seen.insert(rec.id.clone()) {
        return Err(parse_err(format!("duplicate id `{}`", rec.id)));
    }
    Ok(rec)
}

/// Parses JSONL. Blank lines are skipped; ids default to the zero-based
/// record index.
pub fn read_jsonl<R: BufRead>(reader: R, source_tag: &str, seed: u64) -> Result<LabeledDataset> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let raw: JsonLine = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        let label = parse_label(raw.label.as_ref()).map_err(parse_err)?;
        let id = match raw.id {
            None | Some(Value::Null) => records.len().to_string(),
            Some(Value::String(s)) => s,
            Some(Value::Number(n)) => n.to_string(),
            Some(other) => return Err(parse_err(format!("id must be a string or number, got {other}"))),
        };
        let mut scores = raw.scores;
        if let Some(p) = raw.tac_prob {
            scores.insert(TAC_PROB.into(), p);
        }
        let rec = ScoreRecord {
            id,
            scores,
            label,
            token_logprobs: raw.token_logprobs,
            step_entropies: raw.step_entropies,
            meta: raw.meta,
        };
        records.push(finish(rec, line_no, &mut seen)?);
    }
    LabeledDataset::new(records, source_tag, seed)
}

/// Parses CSV. Columns whose non-empty cells all parse as finite numbers
/// become scores; the rest go to `meta`. Empty cells are absent values.
pub fn read_csv<R: Read>(reader: R, source_tag: &str, seed: u64) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Parse { line, message: e.to_string() }
    };
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_string()).collect();
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::Parse { line: 1, message: "missing `label` column".into() })?;
    let id_col = headers.iter().position(|h| h == "id");
    let mut rows = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        rows.push((line, row));
    }
    let value_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_col && Some(c) != id_col).collect();
    let numeric: Vec<bool> = value_cols
        .iter()
        .map(|&c| {
            rows.iter().all(|(_, r)| {
                let cell = r.get(c).unwrap_or("").trim();
                cell.is_empty() || cell.parse::<f64>().is_ok_and(f64::is_finite)
            })
        })
        .collect();

    let mut records = Vec::with_capacity(rows.len());
    let mut seen = HashSet::new();
    for (index, (line, row)) in rows.iter().enumerate() {
        let parse_err = |message: String| Error::Parse { line: *line, message };
        let label = parse_label_str(row.get(label_col).unwrap_or("")).map_err(parse_err)?;
        let id = id_col
            .and_then(|c| row.get(c))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map_or_else(|| index.to_string(), str::to_string);
        let mut rec = ScoreRecord::new(id, label);
        let mut meta = BTreeMap::new();
        for (&c, &is_num) in value_cols.iter().zip(&numeric) {
            let cell = row.get(c).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            if is_num {
                rec.scores.insert(headers[c].clone(), cell.parse().expect("checked numeric"));
            } else {
                meta.insert(headers[c].clone(), cell.to_string());
            }
        }
        if !meta.is_empty() {
            rec.meta = Some(meta);
        }
        records.push(finish(rec, *line, &mut seen)?);
    }
    LabeledDataset::new(records, source_tag, seed)
}

/// Loads a score file. The dataset's source tag is the path and its seed 0.
pub fn load_records(path: &Path, format: Format) -> Result<LabeledDataset> {
    let file = File::open(path)?;
    let tag = path.display().to_string();
    match format {
        Format::Jsonl => read_jsonl(BufReader::new(file), &tag, 0),
        Format::Csv => read_csv(file, &tag, 0),
    }
}

#[derive(Serialize)]
struct OutLine<'a> {
    id: &'a str,
    label: u8,
    scores: BTreeMap<&'a str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    token_logprobs: Option<&'a Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_entropies: Option<&'a Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<&'a BTreeMap<String, String>>,
    tac_prob: f64,
}

/// Writes records with their calibrated probabilities as JSONL. A stale
/// `tac_prob` score on the input is replaced by the new one.
pub fn write_calibrated_to<W: Write>(out: W, ds: &LabeledDataset, probs: &[f64]) -> Result<()> {
    if probs.len() != ds.len() {
        return Err(Error::LengthMismatch { left: ds.len(), right: probs.len() });
    }
    if let Some((index, p)) = probs.iter().enumerate().find(|(_, p)| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::UnnormalizedPrediction { index, value: *p });
    }
    let mut w = BufWriter::new(out);
    for (rec, &p) in ds.records().iter().zip(probs) {
        let line = OutLine {
            id: &rec.id,
            label: u8::from(rec.label),
            scores: rec.scores.iter().filter(|(k, _)| k.as_str() != TAC_PROB).map(|(k, v)| (k.as_str(), *v)).collect(),
            token_logprobs: rec.token_logprobs.as_ref(),
            step_entropies: rec.step_entropies.as_ref(),
            meta: rec.meta.as_ref(),
            tac_prob: p,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::Serialization(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_calibrated(path: &Path, ds: &LabeledDataset, probs: &[f64]) -> Result<()> {
    write_calibrated_to(File::create(path)?, ds, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn jsonl(text: &str) -> Result<LabeledDataset> {
        read_jsonl(text.as_bytes(), "mem", 0)
    }

    #[test]
    fn derived_scores() {
        assert_eq!(derive_log_msp(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(derive_log_msp(&[-LN_2, -LN_2]).unwrap(), -2.0 * LN_2);
        assert_eq!(derive_log_msp(&[-1.0, -3.0]).unwrap(), -4.0);
        assert_eq!(derive_perplexity(&[0.0, 0.0]).unwrap(), 1.0);
        assert!((derive_perplexity(&[-LN_2, -LN_2]).unwrap() - 2.0).abs() < 1e-15);
        assert!((derive_perplexity(&[-1.0, -3.0]).unwrap() - 7.389056).abs() < 1e-6);
        assert_eq!(derive_mean_entropy(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(derive_mean_entropy(&[LN_2]).unwrap(), LN_2);
        assert!((derive_mean_entropy(&[0.2, 0.4, 0.6]).unwrap() - 0.4).abs() < 1e-15);
        assert!(derive_log_msp(&[]).is_err());
        assert!(derive_perplexity(&[0.1]).is_err());
        assert!(derive_mean_entropy(&[]).is_err());
        assert!(derive_mean_entropy(&[-0.1]).is_err());
    }

    #[test]
    fn jsonl_basic() {
        let ds = jsonl("{\"label\":1,\"scores\":{\"entropy\":0.42}}\n").unwrap();
        assert_eq!(ds.len(), 1);
        let r = &ds.records()[0];
        assert_eq!((r.id.as_str(), r.label, r.scores["entropy"]), ("0", true, 0.42));
    }

    #[test]
    fn jsonl_derives_missing_scores() {
        let ds = jsonl(
            "{\"id\":\"a\",\"label\":0,\"token_logprobs\":[-1,-3],\"step_entropies\":[0.2,0.4,0.6]}\n\
             {\"id\":\"b\",\"label\":1,\"token_logprobs\":[-1],\"scores\":{\"log_msp\":-9}}\n",
        )
        .unwrap();
        let a = &ds.records()[0].scores;
        assert_eq!(a[LOG_MSP], -4.0);
        assert!((a[PERPLEXITY] - 2f64.exp()).abs() < 1e-12);
        assert!((a[MEAN_ENTROPY] - 0.4).abs() < 1e-15);
        assert_eq!(ds.records()[1].scores[LOG_MSP], -9.0);
    }

    #[test]
    fn jsonl_errors_name_the_line() {
        let err = jsonl("{\"label\":1,\"scores\":{\"s\":1}}\n\n{\"label\":2,\"scores\":{\"s\":1}}\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(matches!(jsonl("{\"scores\":{\"s\":1}}\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(jsonl("{\"label\":1,\"scores\":{\"s\":1}\n"), Err(Error::Parse { line: 1, .. })));
        let dup = jsonl("{\"id\":\"x\",\"label\":1,\"scores\":{\"s\":1}}\n{\"id\":\"x\",\"label\":0,\"scores\":{\"s\":2}}\n");
        assert!(matches!(dup, Err(Error::Parse { line: 2, .. })));
        assert!(matches!(jsonl("{\"label\":1,\"token_logprobs\":[0.5]}\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_basic() {
        let ds = read_csv("label,msp\n1,-0.3\n".as_bytes(), "mem", 0).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.records()[0].scores["msp"], -0.3);
        assert!(ds.records()[0].label);
    }

    #[test]
    fn csv_columns_and_gaps() {
        let text = "id,label,entropy,model,vc\nq1,1,0.5,llama,\nq2,0,1.5,mistral,0.25\n";
        let ds = read_csv(text.as_bytes(), "mem", 0).unwrap();
        let q1 = &ds.records()[0];
        assert_eq!(q1.id, "q1");
        assert!(!q1.scores.contains_key("vc"));
        assert_eq!(q1.meta.as_ref().unwrap()["model"], "llama");
        assert_eq!(ds.records()[1].scores["vc"], 0.25);
        let err = read_csv("label,s\n1,0\n2,1\n".as_bytes(), "mem", 0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(matches!(read_csv("s\n1\n".as_bytes(), "mem", 0), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn write_then_load_round_trips() {
        let src = "{\"id\":\"a\",\"label\":1,\"scores\":{\"s\":0.1234567890123456789},\"token_logprobs\":[-0.1,-2.5]}\n\
                   {\"id\":\"b\",\"label\":0,\"scores\":{\"s\":-3e-300},\"meta\":{\"k\":\"v\"}}\n";
        let ds = jsonl(src).unwrap();
        let probs = [0.3, 1.0 / 3.0];
        let mut first = Vec::new();
        write_calibrated_to(&mut first, &ds, &probs).unwrap();
        let back = read_jsonl(first.as_slice(), "mem", 0).unwrap();
        for ((orig, got), p) in ds.records().iter().zip(back.records()).zip(probs) {
            let mut want = orig.clone();
            want.scores.insert(TAC_PROB.into(), p);
            assert_eq!(&want, got);
        }
        let mut second = Vec::new();
        write_calibrated_to(&mut second, &back, &probs).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn write_contract() {
        let ds = jsonl("{\"label\":1,\"scores\":{\"s\":1}}\n").unwrap();
        assert!(matches!(write_calibrated_to(Vec::new(), &ds, &[1.0]), Err(Error::UnnormalizedPrediction { .. })));
        assert!(matches!(write_calibrated_to(Vec::new(), &ds, &[0.5, 0.5]), Err(Error::LengthMismatch { .. })));
        let empty = jsonl("").unwrap();
        let mut buf = Vec::new();
        write_calibrated_to(&mut buf, &empty, &[]).unwrap();
        assert!(buf.is_empty());
        assert!(jsonl(std::str::from_utf8(&buf).unwrap()).unwrap().is_empty());
    }
}
