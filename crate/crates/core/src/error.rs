use thiserror::Error;

use crate::colorspace::LabColor;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid color {input:?}: {reason}")]
    ColorParse { input: String, reason: &'static str },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("colormap {id:?}: {reason}")]
    InvalidColormap { id: String, reason: String },

    #[error("duplicate colormap id {0:?}")]
    DuplicateId(String),

    #[error("corpus parse error: {0}")]
    CorpusParse(#[source] serde_json::Error),

    #[error("need at least {needed} colors, got {got}")]
    TooFewColors { needed: usize, got: usize },

    #[error("seed color unsupported: no aligned colormap stays in gamut (try {})", format_suggestions(.suggestions))]
    SeedUnsupported { seed: LabColor, suggestions: Vec<LabColor> },

    #[error("trajectory has no interior states")]
    NoInteriorStates,

    #[error("chroma slope undefined: interior lightness values are identical")]
    DegenerateSlope,

    #[error("weight vector must have {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("need at least {needed} candidates, got {got}")]
    TooFewCandidates { needed: usize, got: usize },

    #[error("curve has zero length")]
    ZeroLengthCurve,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_suggestions(s: &[LabColor]) -> String {
    if s.is_empty() {
        return "a less saturated seed".to_string();
    }
    s.iter().map(|c| c.to_hex()).collect::<Vec<_>>().join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
