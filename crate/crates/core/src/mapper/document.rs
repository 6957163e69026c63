//! Versioned JSON file format for trained mappers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::MapperConfig;
use super::network::MapperParams;
use crate::error::{Error, Result};
use crate::model::Direction;
use crate::scalar::Scalar;

pub const MAPPER_FORMAT_VERSION: u32 = 1;

/// A score column the mapper consumes, with the direction it was read in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapperInput {
    pub name: String,
    pub direction: Direction,
}

/// Everything needed to re-apply a trained mapper: layer shapes and
/// row-major weights, standardization constants, the training config and
/// the score columns it reads (in input order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MapperDocument<T> {
    pub version: u32,
    pub inputs: Vec<MapperInput>,
    pub config: MapperConfig,
    pub params: MapperParams<T>,
}

impl<T: Scalar> MapperDocument<T> {
    pub fn new(params: MapperParams<T>, config: MapperConfig, inputs: Vec<MapperInput>) -> Self {
        Self { version: MAPPER_FORMAT_VERSION, inputs, config, params }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Parses and validates a document, rejecting other format versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        let found = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Serialization("mapper document has no numeric `version`".into()))?;
        if found != u64::from(MAPPER_FORMAT_VERSION) {
            return Err(Error::VersionMismatch { expected: MAPPER_FORMAT_VERSION, found: found.min(u64::from(u32::MAX)) as u32 });
        }
        let doc: Self = serde_json::from_value(value).map_err(|e| Error::Serialization(e.to_string()))?;
        doc.params.validate()?;
        let d = doc.params.input_dim();
        if doc.config.input_dim != d {
            return Err(Error::InvalidConfig(format!("config input_dim {} but network takes {d}", doc.config.input_dim)));
        }
        if !doc.inputs.is_empty() && doc.inputs.len() != d {
            return Err(Error::InvalidConfig(format!("{} named inputs for a {d}-input network", doc.inputs.len())));
        }
        Ok(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn doc() -> MapperDocument<f64> {
        let cfg = MapperConfig::default();
        let mut params: MapperParams<f64> = MapperParams::init(&cfg, &mut stream_rng(1, Stream::WeightInit));
        params.input_mean = vec![0.25];
        params.input_scale = vec![1.5];
        MapperDocument::new(params, cfg, vec![MapperInput { name: "entropy".into(), direction: Direction::Uncertainty }])
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = doc();
        let back = MapperDocument::<f64>::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.params.forward(&[0.3]).unwrap(), d.params.forward(&[0.3]).unwrap());
    }

    #[test]
    fn other_versions_rejected() {
        let text = doc().to_json().unwrap().replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(MapperDocument::<f64>::from_json(&text), Err(Error::VersionMismatch { expected: 1, found: 2 })));
    }

    #[test]
    fn inconsistent_shapes_rejected() {
        let mut d = doc();
        d.params.layers[1].bias.pop();
        assert!(MapperDocument::<f64>::from_json(&d.to_json().unwrap()).is_err());
        let mut d = doc();
        d.config.input_dim = 2;
        assert!(MapperDocument::<f64>::from_json(&d.to_json().unwrap()).is_err());
    }
}
