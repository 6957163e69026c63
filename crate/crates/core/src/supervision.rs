//! Label-budget, label-noise, transfer and concatenated-score protocols.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapper::MapperConfig;
use crate::metrics::ReliabilityReport;
use crate::model::{extract_score_column, LabeledDataset, Orientation};
use crate::pipeline::{fit, mapper_inputs, tac_report, vanilla_report};
use crate::rng::{stream_rng, Stream};
use crate::split::stratified_split;

pub const FEWSHOT_SIZES: [usize; 5] = [8, 16, 32, 64, 128];
pub const CORRUPTION_RATES: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

const FEWSHOT_ATTEMPTS: usize = 100;

/// Which protocol to run, carrying exactly the parameters it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Protocol {
    FewShot { k_labels: usize },
    Corrupt { corrupt_rate: f64 },
    Transfer,
    Pairwise { pair: (String, String) },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    #[serde(flatten)]
    pub protocol: Protocol,
    pub seed: u64,
}

impl ProtocolSpec {
    pub fn new(protocol: Protocol, seed: u64) -> Self {
        Self { protocol, seed }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.protocol {
            Protocol::FewShot { k_labels } if *k_labels == 0 => {
                Err(Error::InvalidConfig("few-shot label count must be positive".into()))
            }
            Protocol::Corrupt { corrupt_rate } if !(0.0..=1.0).contains(corrupt_rate) => {
                Err(Error::OutOfRange { what: "corruption rate", value: *corrupt_rate })
            }
            Protocol::Pairwise { pair } if pair.0.is_empty() || pair.1.is_empty() => {
                Err(Error::InvalidConfig("pairwise protocol needs two score names".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.protocol {
            Protocol::FewShot { .. } => "fewshot",
            Protocol::Corrupt { .. } => "corrupt",
            Protocol::Transfer => "transfer",
            Protocol::Pairwise { .. } => "pairwise",
        }
    }
}

/// Draws `k` records uniformly without replacement, redrawing (up to 100
/// times) until both classes are present. Records keep their original
/// relative order.
pub fn fewshot_subsample(ds: &LabeledDataset, k: usize, seed: u64) -> Result<LabeledDataset> {
    let n = ds.len();
    if k == 0 {
        return Err(Error::InvalidConfig("few-shot label count must be positive".into()));
    }
    if k > n {
        return Err(Error::SampleTooLarge { k, n });
    }
    let records = ds.records();
    let mut rng = stream_rng(seed, Stream::FewShot);
    for _ in 0..FEWSHOT_ATTEMPTS {
        let mut idx = sample(&mut rng, n, k).into_vec();
        idx.sort_unstable();
        let positives = idx.iter().filter(|&&i| records[i].label).count();
        if positives > 0 && positives < k {
            return ds.with_records(idx.into_iter().map(|i| records[i].clone()).collect());
        }
    }
    Err(Error::BothClassesUnattainable { k, attempts: FEWSHOT_ATTEMPTS })
}

/// Number of labels flipped at `rate` over `n` records: `floor(rate · n)`.
///
/// The product is nudged by a relative 1e-12 before flooring so that rates
/// such as 0.29 at n = 100 give 29, not 28.
pub fn corruption_count(rate: f64, n: usize) -> usize {
    let x = rate * n as f64;
    ((x + x.abs() * 1e-12).floor() as usize).min(n)
}

/// Flips the labels of exactly `floor(rate · n)` records chosen uniformly
/// without replacement. The chosen set depends only on `(seed, n, rate)`, so
/// applying the same call twice restores the original labels.
pub fn corrupt_labels(ds: &LabeledDataset, rate: f64, seed: u64) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::OutOfRange { what: "corruption rate", value: rate });
    }
    let n = ds.len();
    let mut records = ds.records().to_vec();
    let flips = corruption_count(rate, n);
    if flips > 0 {
        for i in sample(&mut stream_rng(seed, Stream::Corruption), n, flips) {
            records[i].label = !records[i].label;
        }
    }
    ds.with_records(records)
}

/// Per-record `(a, b)` confidence vectors, orientation applied per name.
pub fn pairwise_concat(ds: &LabeledDataset, name_a: &str, name_b: &str, orient: &Orientation) -> Result<Vec<(Vec<f64>, bool)>> {
    let a = extract_score_column(ds, name_a, orient)?;
    let b = extract_score_column(ds, name_b, orient)?;
    Ok(a.into_iter().zip(b).map(|((x, c), (y, _))| (vec![x, y], c)).collect())
}

/// Stratified split into `(train, eval)` with `eval_fraction` held out.
pub fn train_eval_split(ds: &LabeledDataset, eval_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let (kept, held) = stratified_split(&ds.labels(), eval_fraction, &mut stream_rng(seed, Stream::EvaluationSplit))?;
    let pick = |idx: Vec<usize>| ds.with_records(idx.into_iter().map(|i| ds.records()[i].clone()).collect());
    Ok((pick(kept)?, pick(held)?))
}

/// Trains on `train_ds` alone (its own validation split drives early
/// stopping) and reports on `test_ds`.
pub fn transfer_run(
    train_ds: &LabeledDataset,
    test_ds: &LabeledDataset,
    score_name: &str,
    orient: &Orientation,
    cfg: &MapperConfig,
    m_bins: usize,
) -> Result<ReliabilityReport<f64>> {
    let (doc, _) = fit(train_ds, mapper_inputs(&[score_name], orient), cfg)?;
    tac_report(&doc, test_ds, m_bins)
}

/// Vanilla and calibrated metrics on the same evaluation records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRow {
    pub protocol: String,
    pub setting: String,
    pub train_size: usize,
    pub eval_size: usize,
    pub vanilla_ece: f64,
    pub vanilla_auroc: f64,
    pub tac_ece: f64,
    pub tac_auroc: f64,
}

impl ProtocolRow {
    pub const HEADER: [&'static str; 8] =
        ["protocol", "setting", "train_size", "eval_size", "vanilla_ece", "vanilla_auroc", "tac_ece", "tac_auroc"];

    pub fn fields(&self) -> [String; 8] {
        [
            self.protocol.clone(),
            self.setting.clone(),
            self.train_size.to_string(),
            self.eval_size.to_string(),
            self.vanilla_ece.to_string(),
            self.vanilla_auroc.to_string(),
            self.tac_ece.to_string(),
            self.tac_auroc.to_string(),
        ]
    }
}

/// Runs one protocol.
///
/// For few-shot and corruption `train` is the pool the constrained labels
/// come from and `eval` is scored with its clean labels. For transfer
/// `train` is the source and `eval` the target. For pairwise both score
/// names are concatenated; `score_name` is the one used for the vanilla
/// columns.
#[allow(clippy::too_many_arguments)]
pub fn run_protocol(
    spec: &ProtocolSpec,
    train: &LabeledDataset,
    eval: &LabeledDataset,
    score_name: &str,
    orient: &Orientation,
    cfg: &MapperConfig,
    m_bins: usize,
) -> Result<ProtocolRow> {
    spec.validate()?;
    let cfg = cfg.clone().with_seed(spec.seed);
    let (train_ds, names, setting) = match &spec.protocol {
        Protocol::FewShot { k_labels } => {
            (fewshot_subsample(train, *k_labels, spec.seed)?, vec![score_name.to_string()], k_labels.to_string())
        }
        Protocol::Corrupt { corrupt_rate } => {
            (corrupt_labels(train, *corrupt_rate, spec.seed)?, vec![score_name.to_string()], corrupt_rate.to_string())
        }
        Protocol::Transfer => (train.clone(), vec![score_name.to_string()], train.source_tag().to_string()),
        Protocol::Pairwise { pair } => (train.clone(), vec![pair.0.clone(), pair.1.clone()], format!("{}+{}", pair.0, pair.1)),
    };
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let (doc, _) = fit(&train_ds, mapper_inputs(&refs, orient), &cfg)?;
    let tac = tac_report(&doc, eval, m_bins)?;
    let vanilla = vanilla_report(eval, score_name, orient, m_bins)?;
    Ok(ProtocolRow {
        protocol: spec.kind().to_string(),
        setting,
        train_size: train_ds.len(),
        eval_size: eval.len(),
        vanilla_ece: vanilla.ece,
        vanilla_auroc: vanilla.auroc,
        tac_ece: tac.ece,
        tac_auroc: tac.auroc,
    })
}
