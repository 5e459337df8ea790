//! Everything derived from a seed color before any preference is collected:
//! the aligned graph, its candidate trajectories and their features.

use std::sync::Arc;

use rayon::prelude::*;

use crate::colormap::{finalize, ContinuousColormap};
use crate::colorspace::LabColor;
use crate::corpus::Corpus;
use crate::environment::{build_graph, Candidate, ColorGraph, StateSpace};
use crate::error::Result;
use crate::planner::{search, QLearningConfig, SearchResult};
use crate::preference::{rank_corpus, PreferenceModel, Weights};
use crate::reward::{featurize, FeatureVector, RewardConfig, RewardContext};

#[derive(Clone, Debug)]
pub struct Workbench {
    pub seed: LabColor,
    pub graph: ColorGraph,
    pub candidates: Vec<Candidate>,
    pub features: Vec<FeatureVector>,
    pub context: RewardContext,
}

impl Workbench {
    pub fn prepare(corpus: &Corpus, seed: LabColor, space: Arc<StateSpace>, config: RewardConfig) -> Result<Self> {
        let (graph, candidates) = build_graph(corpus, seed, space)?;
        let context = RewardContext::for_candidates(config, &candidates)?;
        let features = candidates
            .iter()
            .map(|c| featurize(&c.trajectory, &context))
            .collect::<Result<Vec<_>>>()?;
        Ok(Workbench { seed, graph, candidates, features, context })
    }

    /// Uses the starter corpus, the default reward config and the cached
    /// state space for `space_seed`.
    pub fn with_defaults(seed: LabColor, space_seed: u64) -> Result<Self> {
        Workbench::prepare(&Corpus::starter(), seed, StateSpace::shared(space_seed), RewardConfig::default())
    }

    pub fn ids(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.id == id)
    }
}

/// A ranked candidate with its display-ready colormap.
#[derive(Clone, Debug)]
pub struct RankedColormap {
    pub id: String,
    pub score: f64,
    pub colormap: ContinuousColormap,
}

impl Workbench {
    /// Ranks every candidate under the model mean and finalizes each one.
    pub fn rank(&self, model: &PreferenceModel) -> Result<Vec<RankedColormap>> {
        let ids = self.ids();
        rank_corpus(model, &ids, &self.features)
            .into_par_iter()
            .map(|r| {
                let cm = finalize(&self.candidates[r.index].trajectory, self.graph.seed_state(), self.seed)?;
                Ok(RankedColormap { id: r.id, score: r.score, colormap: cm })
            })
            .collect()
    }

    /// Plans a novel colormap for the given weights.
    pub fn synthesize(&self, theta: &Weights, config: &QLearningConfig, rng_seed: u64) -> Result<SearchResult> {
        search(&self.graph, &self.candidates, theta, &self.context, config, rng_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_line_up_with_candidates() {
        let seed = LabColor::from_hex("#186E8D").unwrap();
        let wb = Workbench::with_defaults(seed, 0).unwrap();
        assert!(wb.candidates.len() >= 2);
        assert_eq!(wb.features.len(), wb.candidates.len());
        let first = &wb.candidates[0].id;
        assert_eq!(wb.index_of(first), Some(0));
        for f in &wb.features {
            assert!(f.slope().abs() <= 1.0 + 1e-12);
            assert!(f.perimeter().iter().all(|k| (0.0..=1.0).contains(k)));
        }
    }
}
