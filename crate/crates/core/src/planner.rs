//! Q-learning search for a novel high-utility white-to-black path, and the
//! harness that compares optimistic, random and traditional agents.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colormap::{finalize, ContinuousColormap};
use crate::colorspace::LabColor;
use crate::environment::{Candidate, ColorGraph, Provenance, StateId, Trajectory};
use crate::error::{Error, Result};
use crate::preference::Weights;
use crate::reward::{chroma_slope_of, perimeter_distances_of, FeatureVector, RewardContext, ANCHOR_COUNT, FEATURE_DIM, SLOPE_INDEX};

/// Reward given to an episode that runs into a dead end.
pub const DEAD_END_REWARD: f64 = -1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QLearningConfig {
    pub q0: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    /// Probability that the intended successor is the one reached.
    pub transition_success: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        QLearningConfig { q0: 100.0, epsilon: 0.1, alpha: 0.1, gamma: 1.0, episodes: 10_000, transition_success: 0.95 }
    }
}

impl QLearningConfig {
    pub fn optimistic() -> Self {
        QLearningConfig::default()
    }

    pub fn random() -> Self {
        QLearningConfig { q0: 0.0, epsilon: 1.0, ..QLearningConfig::default() }
    }

    pub fn traditional() -> Self {
        QLearningConfig { q0: 0.0, ..QLearningConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if self.gamma != 1.0 {
            return Err(Error::InvalidParameter(format!("gamma must be 1.0, got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.transition_success) {
            return Err(Error::InvalidParameter(format!(
                "transition success {} outside [0, 1]",
                self.transition_success
            )));
        }
        Ok(())
    }
}

/// Action values stored alongside the graph's adjacency lists:
/// `values[s][i]` is `Q(s, successors(s)[i])`.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    values: Vec<Vec<f64>>,
}

impl QTable {
    pub fn new(graph: &ColorGraph, q0: f64) -> QTable {
        let values = (0..graph.node_count())
            .map(|i| vec![q0; graph.successors(StateId(i as u32)).len()])
            .collect();
        QTable { values }
    }

    pub fn get(&self, s: StateId, action: usize) -> f64 {
        self.values[s.index()][action]
    }

    pub fn set(&mut self, s: StateId, action: usize, v: f64) {
        self.values[s.index()][action] = v;
    }

    pub fn actions(&self, s: StateId) -> &[f64] {
        &self.values[s.index()]
    }

    /// `max_a Q(s, a)`, zero when `s` has no actions.
    pub fn max_value(&self, s: StateId) -> f64 {
        let values = &self.values[s.index()];
        if values.is_empty() {
            return 0.0;
        }
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn remove(&mut self, s: StateId, action: usize) {
        self.values[s.index()].remove(action);
    }
}

/// `(1 − α)·q + α·(r + γ·max_next)`.
pub fn q_update(q: f64, reward: f64, max_next: f64, alpha: f64, gamma: f64) -> f64 {
    (1.0 - alpha) * q + alpha * (reward + gamma * max_next)
}

/// Features of a path's interior. A single interior state has no defined
/// chroma slope; it contributes zero.
pub fn path_features(interior: &[LabColor], ctx: &RewardContext) -> Result<FeatureVector> {
    let k = perimeter_distances_of(interior, &ctx.config.anchors)?;
    let m = if interior.len() >= 2 {
        (chroma_slope_of(interior)? / ctx.slope_norm).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let mut phi = [0.0; FEATURE_DIM];
    phi[..ANCHOR_COUNT].copy_from_slice(&k);
    phi[SLOPE_INDEX] = m;
    Ok(FeatureVector(phi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub ids: Vec<StateId>,
    /// Sum of step penalties plus, on reaching black, `ℓ + θ·Φ`.
    pub reward: f64,
    pub completed: bool,
}

/// Mutable learning state for one search: the graph (edges into dead ends
/// get pruned) and its Q table.
pub struct Learner {
    pub graph: ColorGraph,
    pub q: QTable,
    pub config: QLearningConfig,
}

impl Learner {
    pub fn new(graph: ColorGraph, config: QLearningConfig) -> Result<Learner> {
        config.validate()?;
        let q = QTable::new(&graph, config.q0);
        Ok(Learner { graph, q, config })
    }

    fn choose(&self, s: StateId, rng: &mut impl Rng) -> usize {
        let values = self.q.actions(s);
        if rng.gen::<f64>() < self.config.epsilon {
            return rng.gen_range(0..values.len());
        }
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
        *ties.choose(rng).expect("at least one action")
    }

    /// One ε-greedy episode from white, updating Q after every step.
    pub fn run_episode(&mut self, theta: &Weights, ctx: &RewardContext, rng: &mut impl Rng) -> Result<Episode> {
        let white = self.graph.white();
        let black = self.graph.black();
        let step = ctx.config.step_penalty;
        let mut s = white;
        let mut ids = vec![white];
        let mut total = 0.0;
        loop {
            let n_actions = self.graph.successors(s).len();
            if n_actions == 0 {
                if ids.len() >= 2 {
                    let prev = ids[ids.len() - 2];
                    let pos = self.graph.successors(prev).binary_search(&s).expect("edge taken");
                    self.graph.remove_edge(prev, s);
                    self.q.remove(prev, pos);
                }
                return Ok(Episode { ids, reward: DEAD_END_REWARD, completed: false });
            }
            let intended = self.choose(s, rng);
            let mut action = intended;
            if n_actions > 1 && rng.gen::<f64>() >= self.config.transition_success {
                let other = rng.gen_range(0..n_actions - 1);
                action = if other >= intended { other + 1 } else { other };
            }
            let next = self.graph.successors(s)[action];
            ids.push(next);
            let mut r = step;
            let max_next = if next == black {
                let interior: Vec<LabColor> = ids[1..ids.len() - 1].iter().map(|&i| self.graph.color(i)).collect();
                r += ctx.config.landing_reward + path_features(&interior, ctx)?.dot(theta);
                0.0
            } else {
                self.q.max_value(next)
            };
            let updated = q_update(self.q.get(s, action), r, max_next, self.config.alpha, self.config.gamma);
            self.q.set(s, action, updated);
            total += r;
            if next == black {
                return Ok(Episode { ids, reward: total, completed: true });
            }
            s = next;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Option<Trajectory>,
    pub best_reward: Option<f64>,
    pub colormap: Option<ContinuousColormap>,
    /// Reward of every episode, in order.
    pub episode_rewards: Vec<f64>,
    /// Running best qualifying reward after each episode (`None` before the
    /// first qualifying trajectory).
    pub best_trace: Vec<Option<f64>>,
    /// Best reward over all completed episodes, qualifying or not.
    pub best_any_reward: Option<f64>,
}

/// Outcome of the four acceptance criteria for one trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub valid_path: bool,
    pub novel: bool,
    pub through_seed: bool,
    pub in_gamut: bool,
}

impl CriteriaReport {
    pub fn passed(&self) -> bool {
        self.valid_path && self.novel && self.through_seed && self.in_gamut
    }
}

/// Checks a trajectory against the graph, the corpus paths and the seed.
pub fn check_criteria(
    graph: &ColorGraph,
    corpus: &[Candidate],
    ids: &[StateId],
    seed: LabColor,
) -> Result<(CriteriaReport, Option<ContinuousColormap>)> {
    let valid_path = ids.first() == Some(&graph.white())
        && ids.last() == Some(&graph.black())
        && graph.contains_path(ids)
        && ids.windows(2).all(|w| graph.color(w[1]).l < graph.color(w[0]).l);
    let novel = !corpus.iter().any(|c| c.trajectory.ids == ids);
    let interior = if ids.len() > 2 { &ids[1..ids.len() - 1] } else { &[][..] };
    let through_seed = interior.len() >= 2 && interior.contains(&graph.seed_state());
    let mut report = CriteriaReport { valid_path, novel, through_seed, in_gamut: false };
    if !(valid_path && through_seed) {
        return Ok((report, None));
    }
    let t = Trajectory::from_ids(graph.space(), ids.to_vec(), Provenance::Synthesized);
    let cm = finalize(&t, graph.seed_state(), seed)?;
    report.in_gamut = cm.report.out_of_gamut == 0;
    Ok((report, Some(cm)))
}

/// Runs `config.episodes` episodes and keeps the best trajectory that is
/// novel, passes through the seed with at least two interior states, and
/// whose interpolated curve stays in gamut. The gamut check only runs for
/// trajectories that would improve on the current best.
pub fn search(
    graph: &ColorGraph,
    corpus: &[Candidate],
    theta: &Weights,
    ctx: &RewardContext,
    config: &QLearningConfig,
    rng_seed: u64,
) -> Result<SearchResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut learner = Learner::new(graph.clone(), config.clone())?;
    let corpus_paths: HashSet<&[StateId]> = corpus.iter().map(|c| c.trajectory.ids.as_slice()).collect();
    let seed_state = graph.seed_state();
    let mut gamut_cache: HashMap<Vec<StateId>, Option<ContinuousColormap>> = HashMap::new();

    let mut best: Option<(Vec<StateId>, f64, ContinuousColormap)> = None;
    let mut episode_rewards = Vec::with_capacity(config.episodes);
    let mut best_trace = Vec::with_capacity(config.episodes);
    let mut best_any: Option<f64> = None;
    for _ in 0..config.episodes {
        let ep = learner.run_episode(theta, ctx, &mut rng)?;
        episode_rewards.push(ep.reward);
        if ep.completed {
            best_any = Some(best_any.map_or(ep.reward, |b| b.max(ep.reward)));
            let improves = best.as_ref().is_none_or(|b| ep.reward > b.1);
            let interior = &ep.ids[1..ep.ids.len() - 1];
            if improves
                && interior.len() >= 2
                && interior.contains(&seed_state)
                && !corpus_paths.contains(ep.ids.as_slice())
            {
                let cm = match gamut_cache.get(&ep.ids) {
                    Some(cached) => cached.clone(),
                    None => {
                        let t = Trajectory::from_ids(graph.space(), ep.ids.clone(), Provenance::Synthesized);
                        let cm = finalize(&t, seed_state, graph.seed_color())?;
                        let ok = (cm.report.out_of_gamut == 0).then_some(cm);
                        gamut_cache.insert(ep.ids.clone(), ok.clone());
                        ok
                    }
                };
                if let Some(cm) = cm {
                    best = Some((ep.ids.clone(), ep.reward, cm));
                }
            }
        }
        best_trace.push(best.as_ref().map(|b| b.1));
    }
    let (best, best_reward, colormap) = match best {
        Some((ids, r, cm)) => {
            (Some(Trajectory::from_ids(graph.space(), ids, Provenance::Synthesized)), Some(r), Some(cm))
        }
        None => (None, None, None),
    };
    Ok(SearchResult { best, best_reward, colormap, episode_rewards, best_trace, best_any_reward: best_any })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Optimistic,
    Random,
    Traditional,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Optimistic, Variant::Random, Variant::Traditional];

    pub fn config(self, episodes: usize) -> QLearningConfig {
        let base = match self {
            Variant::Optimistic => QLearningConfig::optimistic(),
            Variant::Random => QLearningConfig::random(),
            Variant::Traditional => QLearningConfig::traditional(),
        };
        QLearningConfig { episodes, ..base }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Optimistic => "optimistic",
            Variant::Random => "random",
            Variant::Traditional => "traditional",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub variant: Variant,
    pub theta_id: String,
    pub repetition: usize,
    pub rng_seed: u64,
    /// Reward of the best qualifying trajectory minus the landing reward
    /// (−∞ when the search found none).
    pub best_reward: f64,
    pub episode_rewards: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub runs: Vec<BenchmarkRun>,
}

impl BenchmarkReport {
    pub fn mean(&self, variant: Variant) -> f64 {
        let v: Vec<f64> = self.runs.iter().filter(|r| r.variant == variant).map(|r| r.best_reward).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    pub fn mean_for(&self, variant: Variant, theta_id: &str, repetition: usize) -> Option<f64> {
        self.runs
            .iter()
            .find(|r| r.variant == variant && r.theta_id == theta_id && r.repetition == repetition)
            .map(|r| r.best_reward)
    }

    /// Delimited `variant,theta,repetition,best_reward` table.
    pub fn to_table(&self) -> String {
        let mut out = String::from("variant,theta,repetition,best_reward\n");
        for r in &self.runs {
            out.push_str(&format!("{},{},{},{:.6}\n", r.variant.name(), r.theta_id, r.repetition, r.best_reward));
        }
        out
    }
}

/// Seed for one repetition, shared by all variants so they see the same
/// stream position.
pub fn repetition_seed(base: u64, theta_index: usize, repetition: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((theta_index as u64) << 32)
        .wrapping_add(repetition as u64)
}

/// Runs every variant `repetitions` times per θ, in parallel.
pub fn benchmark_variants(
    graph: &ColorGraph,
    corpus: &[Candidate],
    thetas: &[(String, Weights)],
    ctx: &RewardContext,
    repetitions: usize,
    episodes: usize,
    base_seed: u64,
) -> Result<BenchmarkReport> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("benchmark needs at least one weight vector".into()));
    }
    let jobs: Vec<(Variant, usize, usize)> = thetas
        .iter()
        .enumerate()
        .flat_map(|(ti, _)| (0..repetitions).flat_map(move |rep| Variant::ALL.map(|v| (v, ti, rep))))
        .collect();
    let landing = ctx.config.landing_reward;
    let runs = jobs
        .par_iter()
        .map(|&(variant, ti, rep)| {
            let seed = repetition_seed(base_seed, ti, rep);
            let result = search(graph, corpus, &thetas[ti].1, ctx, &variant.config(episodes), seed)?;
            Ok(BenchmarkRun {
                variant,
                theta_id: thetas[ti].0.clone(),
                repetition: rep,
                rng_seed: seed,
                best_reward: result.best_reward.unwrap_or(f64::NEG_INFINITY) - landing,
                episode_rewards: result.episode_rewards,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport { runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{StateSpace, Trajectory};
    use crate::reward::RewardConfig;
    use std::sync::Arc;

    fn ctx() -> RewardContext {
        RewardContext::new(RewardConfig::default(), 1.0).unwrap()
    }

    /// Four interior states in decreasing L, wired as white → {a, b} → c → d → black.
    fn diamond() -> (ColorGraph, Vec<StateId>) {
        let states = vec![
            LabColor::new(80.0, 10.0, 0.0),
            LabColor::new(75.0, -10.0, 5.0),
            LabColor::new(50.0, 20.0, -20.0),
            LabColor::new(30.0, 5.0, 5.0),
        ];
        let space = Arc::new(StateSpace::from_states(states));
        let (w, k) = (space.white(), space.black());
        let ids = (0..4).map(|i| StateId(i)).collect::<Vec<_>>();
        let paths = vec![
            vec![w, ids[0], ids[2], ids[3], k],
            vec![w, ids[1], ids[2], ids[3], k],
        ];
        (ColorGraph::from_paths(space, &paths, LabColor::new(50.0, 20.0, -20.0)), ids)
    }

    fn chain() -> ColorGraph {
        let (g, ids) = diamond();
        let w = g.white();
        let k = g.black();
        ColorGraph::from_paths(g.shared_space(), &[vec![w, ids[0], ids[2], ids[3], k]], g.seed_color())
    }

    #[test]
    fn q_update_examples() {
        assert_eq!(q_update(3.5, 7.0, 100.0, 0.0, 1.0), 3.5);
        assert!((q_update(0.0, -0.01, 100.0, 0.1, 1.0) - 9.999).abs() < 1e-12);
        assert_eq!(q_update(42.0, 10.25, 0.0, 1.0, 1.0), 10.25);
    }

    #[test]
    fn config_validation() {
        assert!(QLearningConfig::default().validate().is_ok());
        assert!(QLearningConfig { epsilon: 1.5, ..Default::default() }.validate().is_err());
        assert!(QLearningConfig { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(QLearningConfig { gamma: 0.9, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn q_table_matches_edges() {
        let (g, _) = diamond();
        let q = QTable::new(&g, 100.0);
        assert_eq!(q.len(), g.edge_count());
        assert_eq!(q.max_value(g.black()), 0.0);
    }

    #[test]
    fn single_chain_is_followed_regardless_of_epsilon() {
        let g = chain();
        let expected: Vec<StateId> = vec![g.white(), StateId(0), StateId(2), StateId(3), g.black()];
        for eps in [0.0, 0.5, 1.0] {
            let config = QLearningConfig { epsilon: eps, ..Default::default() };
            let mut learner = Learner::new(g.clone(), config).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..20 {
                let ep = learner.run_episode(&[0.0; 9], &ctx(), &mut rng).unwrap();
                assert_eq!(ep.ids, expected);
            }
        }
    }

    #[test]
    fn episode_reward_is_landing_plus_utility_minus_steps() {
        let g = chain();
        let mut theta = [0.0; 9];
        theta[1] = 0.7;
        theta[8] = -0.3;
        let mut learner = Learner::new(g.clone(), QLearningConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ep = learner.run_episode(&theta, &ctx(), &mut rng).unwrap();
        let interior: Vec<LabColor> = ep.ids[1..ep.ids.len() - 1].iter().map(|&i| g.color(i)).collect();
        let phi = path_features(&interior, &ctx()).unwrap();
        let actions = (ep.ids.len() - 1) as f64;
        let expected = 10.0 + phi.dot(&theta) - 0.01 * actions;
        assert!((ep.reward - expected).abs() < 1e-12);
    }

    #[test]
    fn uniform_exploration_passes_chi_square() {
        // White has two successors; with ε=1 and no noise each is taken
        // half the time.
        let (g, _) = diamond();
        let config = QLearningConfig { epsilon: 1.0, transition_success: 1.0, ..Default::default() };
        let mut learner = Learner::new(g.clone(), config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 2];
        for _ in 0..10_000 {
            let ep = learner.run_episode(&[0.0; 9], &ctx(), &mut rng).unwrap();
            counts[ep.ids[1].index()] += 1;
        }
        let e = 5_000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // One degree of freedom: p > 0.01 ⇔ χ² < 6.635.
        assert!(chi2 < 6.635, "{counts:?} χ²={chi2}");
    }

    #[test]
    fn dead_end_is_pruned() {
        let (g, ids) = diamond();
        let w = g.white();
        // A graph where ids[1] has no way forward.
        let mut g2 = ColorGraph::from_paths(
            g.shared_space(),
            &[vec![w, ids[0], ids[2], ids[3], g.black()], vec![w, ids[1]]],
            g.seed_color(),
        );
        g2.remove_edge(ids[1], g.black());
        let config = QLearningConfig { epsilon: 1.0, transition_success: 1.0, ..Default::default() };
        let mut learner = Learner::new(g2, config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut saw_dead_end = false;
        for _ in 0..50 {
            let ep = learner.run_episode(&[0.0; 9], &ctx(), &mut rng).unwrap();
            if !ep.completed {
                saw_dead_end = true;
                assert_eq!(ep.reward, DEAD_END_REWARD);
            }
        }
        assert!(saw_dead_end);
        assert!(!learner.graph.has_edge(w, ids[1]));
        assert_eq!(learner.q.len(), learner.graph.edge_count());
    }

    #[test]
    fn corpus_only_graph_gives_empty_result() {
        let (g, ids) = diamond();
        let space = g.shared_space();
        let corpus: Vec<Candidate> = [
            vec![g.white(), ids[0], ids[2], ids[3], g.black()],
            vec![g.white(), ids[1], ids[2], ids[3], g.black()],
        ]
        .into_iter()
        .enumerate()
        .map(|(i, p)| Candidate { id: format!("c{i}"), trajectory: Trajectory::from_ids(&space, p, Provenance::CorpusAligned) })
        .collect();
        let config = QLearningConfig { episodes: 200, ..Default::default() };
        let r = search(&g, &corpus, &[0.1; 9], &ctx(), &config, 9).unwrap();
        assert!(r.best.is_none() && r.best_reward.is_none() && r.colormap.is_none());
        assert_eq!(r.episode_rewards.len(), 200);
    }

    #[test]
    fn search_finds_a_novel_path_and_is_deterministic() {
        let (g, ids) = diamond();
        let space = g.shared_space();
        let corpus = vec![Candidate {
            id: "c0".into(),
            trajectory: Trajectory::from_ids(&space, vec![g.white(), ids[0], ids[2], ids[3], g.black()], Provenance::CorpusAligned),
        }];
        let config = QLearningConfig { episodes: 300, ..Default::default() };
        let a = search(&g, &corpus, &[0.1; 9], &ctx(), &config, 5).unwrap();
        let b = search(&g, &corpus, &[0.1; 9], &ctx(), &config, 5).unwrap();
        assert_eq!(a, b);
        let best = a.best.expect("novel path exists");
        assert_eq!(best.ids, vec![g.white(), ids[1], ids[2], ids[3], g.black()]);
        let (report, _) = check_criteria(&g, &corpus, &best.ids, g.seed_color()).unwrap();
        assert!(report.passed(), "{report:?}");
        let trace: Vec<f64> = a.best_trace.iter().flatten().copied().collect();
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
    }
}
