use std::path::Path;

use huepath_core::colorspace::LabColor;
use huepath_core::preference::{PreferenceModel, Weights};
use huepath_core::reward::FEATURE_DIM;
use huepath_core::Error as CoreError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Serialize, Deserialize)]
pub struct StateSpaceDocument {
    pub seed_rng: u64,
    pub states: Vec<LabColor>,
}

/// A trained model plus what it was trained for.
#[derive(Serialize, Deserialize)]
pub struct ModelDocument {
    pub seed_color: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_theta: Option<Weights>,
    #[serde(flatten)]
    pub model: PreferenceModel,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ThetaFile {
    Bare(Vec<f64>),
    Wrapped { theta: Vec<f64> },
}

/// Benchmark inputs: a trained model (its mean is used) or explicit weights.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum WeightSource {
    Model(ModelDocument),
    Weights { seed_color: String, theta: Vec<f64> },
}

impl WeightSource {
    pub fn seed_color(&self) -> &str {
        match self {
            WeightSource::Model(m) => &m.seed_color,
            WeightSource::Weights { seed_color, .. } => seed_color,
        }
    }

    pub fn weights(&self) -> CliResult<Weights> {
        match self {
            WeightSource::Model(m) => Ok(m.model.mean()),
            WeightSource::Weights { theta, .. } => to_weights(theta),
        }
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn to_weights(v: &[f64]) -> CliResult<Weights> {
    let w: Weights = v
        .try_into()
        .map_err(|_| CliError::from(CoreError::Dimension { expected: FEATURE_DIM, got: v.len() }))?;
    if w.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Validation("weights must be finite".into()));
    }
    Ok(w)
}

/// Reads a weight file and rescales it to unit norm.
pub fn read_theta(path: &Path) -> CliResult<Weights> {
    let raw = match read_json::<ThetaFile>(path)? {
        ThetaFile::Bare(v) | ThetaFile::Wrapped { theta: v } => v,
    };
    let mut w = to_weights(&raw)?;
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(CliError::Validation(format!("{}: weight vector is zero", path.display())));
    }
    w.iter_mut().for_each(|x| *x /= norm);
    Ok(w)
}

pub fn cosine(a: &Weights, b: &Weights) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
