//! Learns a user's aesthetic utility over sequential colormaps from pairwise
//! comparisons, ranks a corpus of expert colormaps with it, and plans novel
//! perceptually uniform colormaps through a quantized CIELAB graph.

pub mod colorspace;
pub mod colormap;
pub mod corpus;
pub mod environment;
pub mod error;
pub mod planner;
pub mod preference;
pub mod reward;
pub mod session;

pub use error::{Error, Result};
