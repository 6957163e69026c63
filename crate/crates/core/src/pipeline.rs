//! Glue between datasets and the mapper: pull score columns, fit, predict,
//! and report.

use crate::error::{Error, Result};
use crate::mapper::{train, MapperConfig, MapperDocument, MapperInput, MapperParams, TrainHistory};
use crate::metrics::{min_max_normalize, reliability_bins, ReliabilityReport};
use crate::model::{extract_score_column, LabeledDataset, Orientation};

/// Resolves score names to mapper inputs under `orient`.
pub fn mapper_inputs(names: &[&str], orient: &Orientation) -> Vec<MapperInput> {
    names.iter().map(|n| MapperInput { name: n.to_string(), direction: orient.direction(n) }).collect()
}

/// One confidence-direction feature vector per record, in `inputs` order.
pub fn features(ds: &LabeledDataset, inputs: &[MapperInput]) -> Result<Vec<(Vec<f64>, bool)>> {
    if inputs.is_empty() {
        return Err(Error::InvalidConfig("no score columns selected".into()));
    }
    let columns = inputs
        .iter()
        .map(|i| extract_score_column(ds, &i.name, &Orientation::new().with(i.name.clone(), i.direction)))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..ds.len())
        .map(|r| (columns.iter().map(|c| c[r].0).collect(), columns[0][r].1))
        .collect())
}

/// Trains a mapper on the named score columns of `ds`.
pub fn fit(ds: &LabeledDataset, inputs: Vec<MapperInput>, cfg: &MapperConfig) -> Result<(MapperDocument<f64>, TrainHistory<f64>)> {
    let cfg = MapperConfig { input_dim: inputs.len(), ..cfg.clone() };
    let data = features(ds, &inputs)?;
    let (params, history): (MapperParams<f64>, _) = train(&data, &cfg)?;
    Ok((MapperDocument::new(params, cfg, inputs), history))
}

/// Calibrated probabilities for every record of `ds`.
pub fn predict(doc: &MapperDocument<f64>, ds: &LabeledDataset) -> Result<Vec<f64>> {
    if doc.inputs.is_empty() {
        return Err(Error::InvalidConfig("mapper document names no input scores".into()));
    }
    let rows: Vec<Vec<f64>> = features(ds, &doc.inputs)?.into_iter().map(|r| r.0).collect();
    doc.params.apply(&rows)
}

/// Metrics of the raw score used directly as confidence: orientation flip,
/// then min–max normalization over `ds`.
pub fn vanilla_report(ds: &LabeledDataset, name: &str, orient: &Orientation, m_bins: usize) -> Result<ReliabilityReport<f64>> {
    let (values, labels): (Vec<f64>, Vec<bool>) = extract_score_column(ds, name, orient)?.into_iter().unzip();
    reliability_bins(&min_max_normalize(&values)?, &labels, m_bins)
}

/// Metrics of a mapper's probabilities on `ds`.
pub fn tac_report(doc: &MapperDocument<f64>, ds: &LabeledDataset, m_bins: usize) -> Result<ReliabilityReport<f64>> {
    reliability_bins(&predict(doc, ds)?, &ds.labels(), m_bins)
}
