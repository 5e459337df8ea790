//! Active preference learning over the reward weights θ.
//!
//! The belief over θ is a set of unit-norm posterior samples drawn by
//! Metropolis-Hastings. Queries are chosen by disagreement between two
//! plausible, mutually distant samples; responses update the belief through
//! a softmax likelihood with a minimum perceivable difference δ.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::environment::Candidate;
use crate::error::{Error, Result};
use crate::reward::{FeatureVector, FEATURE_DIM};

pub type Weights = [f64; FEATURE_DIM];

pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_LAMBDA: f64 = 500.0;
pub const DEFAULT_QUERIES: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Response {
    Indifferent = 0,
    Left = 1,
    Right = 2,
}

impl From<Response> for u8 {
    fn from(r: Response) -> u8 {
        r as u8
    }
}

impl TryFrom<u8> for Response {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Response::Indifferent),
            1 => Ok(Response::Left),
            2 => Ok(Response::Right),
            other => Err(Error::InvalidParameter(format!("choice must be 0, 1 or 2, got {other}"))),
        }
    }
}

/// A pair of candidate indices shown side by side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub left: usize,
    pub right: usize,
}

/// An answered query, self-contained so the model can be re-sampled
/// without the candidate set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub left_id: String,
    pub right_id: String,
    pub left: FeatureVector,
    pub right: FeatureVector,
    pub response: Response,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `P(y = k)` for a strict choice: `(1 + exp(δ + R_other − R_chosen))⁻¹`.
pub fn choice_probability(chosen: f64, other: f64, delta: f64) -> f64 {
    1.0 / (1.0 + (delta + other - chosen).exp())
}

/// The plain softmax choice probability `exp(R_k) / Σ exp(R)`.
pub fn softmax_probability(chosen: f64, other: f64) -> f64 {
    let m = chosen.max(other);
    let a = (chosen - m).exp();
    a / (a + (other - m).exp())
}

/// Likelihood of `response` given the rewards of the left and right options.
pub fn likelihood(response: Response, reward_left: f64, reward_right: f64, delta: f64) -> f64 {
    match response {
        Response::Left => choice_probability(reward_left, reward_right, delta),
        Response::Right => choice_probability(reward_right, reward_left, delta),
        Response::Indifferent => {
            (2.0 * delta).exp_m1()
                * choice_probability(reward_left, reward_right, delta)
                * choice_probability(reward_right, reward_left, delta)
        }
    }
}

/// Numerically stable `ln likelihood(...)`.
pub fn log_likelihood(response: Response, reward_left: f64, reward_right: f64, delta: f64) -> f64 {
    let log_left = -softplus(delta + reward_right - reward_left);
    let log_right = -softplus(delta + reward_left - reward_right);
    match response {
        Response::Left => log_left,
        Response::Right => log_right,
        Response::Indifferent => {
            if delta <= 0.0 {
                f64::NEG_INFINITY
            } else {
                (2.0 * delta).exp_m1().ln() + log_left + log_right
            }
        }
    }
}

fn dot(w: &Weights, phi: &FeatureVector) -> f64 {
    phi.dot(w)
}

fn normalize(v: &mut Weights) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 && n.is_finite() {
        v.iter_mut().for_each(|x| *x /= n);
        true
    } else {
        false
    }
}

/// Uniform sample from the unit hypersphere.
pub fn sample_unit_sphere(rng: &mut impl Rng) -> Weights {
    loop {
        let mut v: Weights = std::array::from_fn(|_| StandardNormal.sample(rng));
        if normalize(&mut v) {
            return v;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub samples: usize,
    pub burn_in: usize,
    /// Chain steps between retained samples.
    pub thin: usize,
    pub proposal_sd: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { samples: 100, burn_in: 200, thin: 50, proposal_sd: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceModel {
    pub samples: Vec<Weights>,
    pub delta: f64,
    pub lambda: f64,
    pub sampler: SamplerConfig,
    pub history: Vec<Observation>,
}

impl PreferenceModel {
    /// Non-informative prior: samples uniform on the unit hypersphere.
    pub fn prior(sampler: SamplerConfig, rng: &mut impl Rng) -> Self {
        let samples = (0..sampler.samples).map(|_| sample_unit_sphere(rng)).collect();
        PreferenceModel { samples, delta: DEFAULT_DELTA, lambda: DEFAULT_LAMBDA, sampler, history: Vec::new() }
    }

    pub fn with_defaults(rng: &mut impl Rng) -> Self {
        PreferenceModel::prior(SamplerConfig::default(), rng)
    }

    pub fn mean(&self) -> Weights {
        let mut m = [0.0; FEATURE_DIM];
        for s in &self.samples {
            for (acc, x) in m.iter_mut().zip(s) {
                *acc += x;
            }
        }
        let n = self.samples.len().max(1) as f64;
        m.iter_mut().for_each(|x| *x /= n);
        m
    }

    /// Mean of the samples, rescaled to unit norm when possible.
    pub fn mean_direction(&self) -> Weights {
        let mut m = self.mean();
        normalize(&mut m);
        m
    }

    /// Log of the unnormalized posterior (uniform prior on the sphere).
    pub fn log_posterior(&self, w: &Weights) -> f64 {
        self.history
            .iter()
            .map(|o| log_likelihood(o.response, dot(w, &o.left), dot(w, &o.right), self.delta))
            .sum()
    }

    /// Answered queries as unordered id pairs.
    pub fn answered_pairs(&self) -> HashSet<(String, String)> {
        self.history.iter().map(|o| unordered(&o.left_id, &o.right_id)).collect()
    }

    /// Records a response and redraws the posterior samples.
    pub fn update_belief(&mut self, observation: Observation, rng: &mut impl Rng) {
        self.history.push(observation);
        self.resample(rng);
    }

    /// Runs a fresh Metropolis-Hastings chain started at the current sample
    /// mean. Proposals are Gaussian perturbations re-projected onto the
    /// sphere, which is a symmetric kernel on the sphere.
    pub fn resample(&mut self, rng: &mut impl Rng) {
        let cfg = self.sampler.clone();
        let mut current = self.mean();
        if !normalize(&mut current) {
            current = sample_unit_sphere(rng);
        }
        let mut current_lp = self.log_posterior(&current);
        let total = cfg.burn_in + cfg.samples * cfg.thin.max(1);
        let mut out = Vec::with_capacity(cfg.samples);
        for step in 1..=total {
            let mut proposal: Weights = std::array::from_fn(|i| {
                let z: f64 = StandardNormal.sample(rng);
                current[i] + cfg.proposal_sd * z
            });
            if normalize(&mut proposal) {
                let lp = self.log_posterior(&proposal);
                let accept = lp >= current_lp || rng.gen::<f64>().ln() < lp - current_lp;
                if accept {
                    current = proposal;
                    current_lp = lp;
                }
            }
            if step > cfg.burn_in && (step - cfg.burn_in).is_multiple_of(cfg.thin.max(1)) {
                out.push(current);
            }
        }
        self.samples = out;
    }
}

fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Gaussian kernel density estimate with Scott's-rule bandwidth.
pub struct GaussianKde {
    points: Vec<DVector<f64>>,
    /// Inverse Cholesky factor of the kernel covariance.
    whitening: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianKde {
    pub fn new(samples: &[Weights]) -> Self {
        let n = samples.len().max(1);
        let d = FEATURE_DIM;
        let points: Vec<DVector<f64>> = samples.iter().map(|s| DVector::from_row_slice(s)).collect();
        let factor = (n as f64).powf(-1.0 / (d as f64 + 4.0));
        let mean = points.iter().fold(DVector::zeros(d), |acc, p| acc + p) / n as f64;
        let mut cov = DMatrix::zeros(d, d);
        for p in &points {
            let c = p - &mean;
            cov += &c * c.transpose();
        }
        cov /= (n.saturating_sub(1)).max(1) as f64;
        let kernel = &cov * (factor * factor);

        let chol = if n > d { kernel.clone().cholesky() } else { None };
        let lower = match chol {
            Some(c) => c.l(),
            None => {
                // Too few samples (or collinear): per-dimension bandwidth.
                let diag = DVector::from_fn(d, |i, _| (kernel[(i, i)].max(1e-6)).sqrt());
                DMatrix::from_diagonal(&diag)
            }
        };
        let log_det: f64 = (0..d).map(|i| lower[(i, i)].ln()).sum::<f64>() * 2.0;
        let whitening = lower.try_inverse().expect("triangular factor with positive diagonal");
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det) - (n as f64).ln();
        GaussianKde { points, whitening, log_norm }
    }

    pub fn log_density(&self, x: &Weights) -> f64 {
        let x = DVector::from_row_slice(x);
        let terms: Vec<f64> = self
            .points
            .iter()
            .map(|p| {
                let z = &self.whitening * (&x - p);
                -0.5 * z.norm_squared()
            })
            .collect();
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
        self.log_norm + m + s.ln()
    }

    pub fn density(&self, x: &Weights) -> f64 {
        self.log_density(x).exp()
    }
}

fn euclid(a: &Weights, b: &Weights) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Scores every sample pair `i < j` by `P̂(Wᵢ)·P̂(Wⱼ) + λ‖Wᵢ − Wⱼ‖` and
/// returns them best first.
pub fn score_sample_pairs(samples: &[Weights], lambda: f64) -> Vec<((usize, usize), f64)> {
    let kde = GaussianKde::new(samples);
    let density: Vec<f64> = samples.iter().map(|s| kde.density(s)).collect();
    let mut pairs = Vec::with_capacity(samples.len() * samples.len() / 2);
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let score = density[i] * density[j] + lambda * euclid(&samples[i], &samples[j]);
            pairs.push(((i, j), score));
        }
    }
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    pairs
}

/// Candidate indices sorted by `w · Φ`, best first, ties by index.
fn ranking_under(w: &Weights, features: &[FeatureVector]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..features.len()).collect();
    idx.sort_by(|&a, &b| dot(w, &features[b]).total_cmp(&dot(w, &features[a])).then(a.cmp(&b)));
    idx
}

/// Query by disagreement. `ids` name the candidates behind `features`.
pub fn acquire_query(model: &PreferenceModel, ids: &[&str], features: &[FeatureVector]) -> Result<Query> {
    if features.len() < 2 || ids.len() != features.len() {
        return Err(Error::TooFewCandidates { needed: 2, got: features.len().min(ids.len()) });
    }
    if features.len() == 2 {
        return Ok(Query { left: 0, right: 1 });
    }
    if model.samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two posterior samples".into()));
    }
    let answered = model.answered_pairs();
    let is_new = |q: &Query| !answered.contains(&unordered(ids[q.left], ids[q.right]));
    let pairs = score_sample_pairs(&model.samples, model.lambda);

    let mut first = None;
    // Preferred query for each sample pair, in score order.
    for &((i, j), _) in &pairs {
        let left = ranking_under(&model.samples[i], features)[0];
        let right_rank = ranking_under(&model.samples[j], features);
        let right = if right_rank[0] != left { right_rank[0] } else { right_rank[1] };
        let q = Query { left, right };
        if first.is_none() {
            first = Some(q);
        }
        if is_new(&q) {
            return Ok(q);
        }
    }
    // Every preferred query was answered: walk further down each ranking.
    for &((i, j), _) in &pairs {
        let left = ranking_under(&model.samples[i], features)[0];
        for right in ranking_under(&model.samples[j], features) {
            let q = Query { left, right };
            if right != left && is_new(&q) {
                return Ok(q);
            }
        }
    }
    for left in 0..features.len() {
        for right in left + 1..features.len() {
            let q = Query { left, right };
            if is_new(&q) {
                return Ok(q);
            }
        }
    }
    Ok(first.expect("at least one sample pair"))
}

/// One ranked candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub index: usize,
    pub id: String,
    pub score: f64,
}

/// Scores candidates by `mean(W) · Φ`, best first; ties broken by id.
pub fn rank_corpus(model: &PreferenceModel, ids: &[&str], features: &[FeatureVector]) -> Vec<RankedCandidate> {
    rank_by_weights(&model.mean(), ids, features)
}

pub fn rank_by_weights(w: &Weights, ids: &[&str], features: &[FeatureVector]) -> Vec<RankedCandidate> {
    let mut out: Vec<RankedCandidate> = features
        .iter()
        .enumerate()
        .map(|(i, f)| RankedCandidate { index: i, id: ids[i].to_string(), score: dot(w, f) })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    out
}

/// Supplies answers to queries. Returning `None` aborts the loop.
pub trait ResponseSource {
    fn respond(&mut self, left: &Candidate, right: &Candidate, left_phi: &FeatureVector, right_phi: &FeatureVector) -> Option<Response>;
}

/// Answers from a hidden weight vector.
pub struct SimulatedOracle<R> {
    pub theta: Weights,
    pub delta: f64,
    /// Deterministic argmax answers (indifferent when the gap is below δ);
    /// otherwise responses are sampled from the likelihood.
    pub noiseless: bool,
    pub rng: R,
}

impl<R: Rng> ResponseSource for SimulatedOracle<R> {
    fn respond(&mut self, _: &Candidate, _: &Candidate, left_phi: &FeatureVector, right_phi: &FeatureVector) -> Option<Response> {
        let rl = left_phi.dot(&self.theta);
        let rr = right_phi.dot(&self.theta);
        if self.noiseless {
            let gap = rl - rr;
            return Some(if gap.abs() < self.delta {
                Response::Indifferent
            } else if gap > 0.0 {
                Response::Left
            } else {
                Response::Right
            });
        }
        let weights = [
            likelihood(Response::Indifferent, rl, rr, self.delta),
            likelihood(Response::Left, rl, rr, self.delta),
            likelihood(Response::Right, rl, rr, self.delta),
        ];
        let total: f64 = weights.iter().sum();
        let mut u = self.rng.gen::<f64>() * total;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                return Some(Response::try_from(k as u8).expect("0..3"));
            }
            u -= w;
        }
        Some(Response::Right)
    }
}

/// Runs `rounds` iterations of acquire, ask, update. Stops early (keeping
/// the partial model) when the source aborts.
pub fn teach_loop(
    mut model: PreferenceModel,
    candidates: &[Candidate],
    features: &[FeatureVector],
    rounds: usize,
    source: &mut dyn ResponseSource,
    rng: &mut impl Rng,
) -> Result<PreferenceModel> {
    let ids: Vec<&str> = candidates.iter().map(|c| c.id.as_str()).collect();
    for _ in 0..rounds {
        let q = acquire_query(&model, &ids, features)?;
        let Some(response) =
            source.respond(&candidates[q.left], &candidates[q.right], &features[q.left], &features[q.right])
        else {
            break;
        };
        let obs = Observation {
            left_id: ids[q.left].to_string(),
            right_id: ids[q.right].to_string(),
            left: features[q.left],
            right: features[q.right],
            response,
        };
        model.update_belief(obs, rng);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn phi(v: [f64; 9]) -> FeatureVector {
        FeatureVector(v)
    }

    #[test]
    fn equal_rewards_without_threshold_are_a_coin_flip() {
        assert_eq!(likelihood(Response::Left, 0.3, 0.3, 0.0), 0.5);
        assert_eq!(likelihood(Response::Right, 0.3, 0.3, 0.0), 0.5);
    }

    #[test]
    fn indifference_probability_at_equal_rewards() {
        let expected = (0.02f64.exp() - 1.0) / (1.0 + 0.01f64.exp()).powi(2);
        let got = likelihood(Response::Indifferent, 1.0, 1.0, 0.01);
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.005000).abs() < 1e-6);
    }

    #[test]
    fn unit_gap_matches_softmax() {
        let e = std::f64::consts::E;
        let p = likelihood(Response::Left, 1.0, 0.0, 0.0);
        assert!((p - e / (1.0 + e)).abs() < 1e-12);
        assert!((p - 0.7311).abs() < 1e-4);
        assert!((p - softmax_probability(1.0, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_agrees_with_likelihood() {
        for &(rl, rr, d) in &[(0.2, -0.4, 0.01), (3.0, 3.5, 0.0), (-1.0, 2.0, 0.1)] {
            for r in [Response::Left, Response::Right, Response::Indifferent] {
                let p = likelihood(r, rl, rr, d);
                if p > 0.0 {
                    assert!((log_likelihood(r, rl, rr, d) - p.ln()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn three_way_probabilities_are_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let rl: f64 = rng.gen_range(-3.0..3.0);
            let rr: f64 = rng.gen_range(-3.0..3.0);
            let ps = [Response::Left, Response::Right, Response::Indifferent].map(|r| likelihood(r, rl, rr, 0.01));
            assert!(ps.iter().all(|&p| p > 0.0 && p < 1.0));
            let total: f64 = ps.iter().sum();
            assert!(total > 0.0 && total <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn response_codes() {
        assert_eq!(Response::try_from(0).unwrap(), Response::Indifferent);
        assert_eq!(Response::try_from(2).unwrap(), Response::Right);
        assert!(Response::try_from(3).is_err());
        assert_eq!(serde_json::to_string(&Response::Left).unwrap(), "1");
    }

    #[test]
    fn prior_samples_look_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = PreferenceModel::with_defaults(&mut rng);
        assert_eq!(model.samples.len(), 100);
        for s in &model.samples {
            assert!((s.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let m = model.mean();
        let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 0.3, "norm of mean {norm}");
    }

    #[test]
    fn resampled_chain_stays_on_the_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = PreferenceModel::with_defaults(&mut rng);
        let obs = Observation {
            left_id: "a".into(),
            right_id: "b".into(),
            left: phi([0.9, 0.1, 0.2, 0.3, 0.1, 0.5, 0.6, 0.7, 1.0]),
            right: phi([0.1, 0.8, 0.2, 0.3, 0.4, 0.5, 0.2, 0.1, -1.0]),
            response: Response::Left,
        };
        model.update_belief(obs, &mut rng);
        assert_eq!(model.samples.len(), 100);
        for s in &model.samples {
            assert!((s.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_candidates_force_the_query() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = PreferenceModel::with_defaults(&mut rng);
        let f = [phi([0.1; 9]), phi([0.2; 9])];
        let q = acquire_query(&model, &["x", "y"], &f).unwrap();
        assert_eq!((q.left.min(q.right), q.left.max(q.right)), (0, 1));
        assert!(acquire_query(&model, &["x"], &f[..1]).is_err());
    }

    #[test]
    fn sample_pair_selection_matches_exhaustive_scoring() {
        let mut samples: Vec<Weights> = vec![[0.0; 9]; 3];
        samples[0][0] = 1.0;
        samples[1][0] = 0.8;
        samples[1][1] = 0.6;
        samples[2][2] = -1.0;
        let kde = GaussianKde::new(&samples);
        let lambda = 500.0;
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let s = kde.density(&samples[i]) * kde.density(&samples[j]) + lambda * euclid(&samples[i], &samples[j]);
                if s > best.1 {
                    best = ((i.min(j), i.max(j)), s);
                }
            }
        }
        let pairs = score_sample_pairs(&samples, lambda);
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].0, best.0);
    }

    #[test]
    fn answered_pairs_are_not_repeated() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut model = PreferenceModel::with_defaults(&mut rng);
        let features: Vec<FeatureVector> = (0..6)
            .map(|_| phi(std::array::from_fn(|_| rng.gen_range(0.0..1.0))))
            .collect();
        let ids = ["a", "b", "c", "d", "e", "f"];
        let total_pairs = 15;
        for _ in 0..total_pairs {
            let q = acquire_query(&model, &ids, &features).unwrap();
            assert_ne!(q.left, q.right);
            let pair = unordered(ids[q.left], ids[q.right]);
            assert!(!model.answered_pairs().contains(&pair), "repeated {pair:?}");
            model.history.push(Observation {
                left_id: ids[q.left].into(),
                right_id: ids[q.right].into(),
                left: features[q.left],
                right: features[q.right],
                response: Response::Left,
            });
        }
        assert_eq!(model.answered_pairs().len(), total_pairs);
    }

    #[test]
    fn ranking_matches_brute_force_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let theta = sample_unit_sphere(&mut rng);
        let model = PreferenceModel {
            samples: vec![theta],
            delta: DEFAULT_DELTA,
            lambda: DEFAULT_LAMBDA,
            sampler: SamplerConfig::default(),
            history: vec![],
        };
        let features: Vec<FeatureVector> = (0..40)
            .map(|_| phi(std::array::from_fn(|_| rng.gen_range(-1.0..1.0))))
            .collect();
        let names: Vec<String> = (0..40).map(|i| format!("c{i:02}")).collect();
        let ids: Vec<&str> = names.iter().map(String::as_str).collect();
        let ranked = rank_corpus(&model, &ids, &features);

        let mut brute: Vec<(f64, usize)> = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.0.iter().zip(&theta).map(|(a, b)| a * b).sum(), i))
            .collect();
        brute.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let order: Vec<usize> = ranked.iter().map(|r| r.index).collect();
        assert_eq!(order, brute.iter().map(|b| b.1).collect::<Vec<_>>());

        let mut scaled = model.clone();
        scaled.samples[0].iter_mut().for_each(|x| *x *= 3.7);
        let order2: Vec<usize> = rank_corpus(&scaled, &ids, &features).iter().map(|r| r.index).collect();
        assert_eq!(order, order2);
    }

    #[test]
    fn ties_are_broken_by_id() {
        let model = PreferenceModel {
            samples: vec![[0.0; 9]],
            delta: DEFAULT_DELTA,
            lambda: DEFAULT_LAMBDA,
            sampler: SamplerConfig::default(),
            history: vec![],
        };
        let f = vec![phi([0.5; 9]); 3];
        let ranked = rank_corpus(&model, &["zeta", "alpha", "mid"], &f);
        let ids: Vec<&str> = ranked.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["alpha", "mid", "zeta"]);
    }

    #[test]
    fn noiseless_oracle_reports_indifference_below_delta() {
        let mut theta = [0.0; 9];
        theta[0] = 1.0;
        let mut oracle = SimulatedOracle { theta, delta: 0.01, noiseless: true, rng: ChaCha8Rng::seed_from_u64(0) };
        let c = Candidate {
            id: "x".into(),
            trajectory: crate::environment::Trajectory {
                ids: vec![],
                colors: vec![],
                provenance: crate::environment::Provenance::CorpusAligned,
            },
        };
        let a = phi([0.500, 0., 0., 0., 0., 0., 0., 0., 0.]);
        let b = phi([0.505, 0., 0., 0., 0., 0., 0., 0., 0.]);
        let d = phi([0.9, 0., 0., 0., 0., 0., 0., 0., 0.]);
        assert_eq!(oracle.respond(&c, &c, &a, &b), Some(Response::Indifferent));
        assert_eq!(oracle.respond(&c, &c, &d, &a), Some(Response::Left));
        assert_eq!(oracle.respond(&c, &c, &a, &d), Some(Response::Right));
    }
}
