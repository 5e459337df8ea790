//! Trajectory features and the linear utility `R = θ · Φ`.
//!
//! Φ has nine entries: eight normalized distances from the trajectory to
//! perimeter anchors in the a*–b* plane, then the normalized slope of C*
//! regressed on L*.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::colorspace::{max_chroma, srgb_to_lab, LabColor, RgbColor};
use crate::environment::{Candidate, Trajectory};
use crate::error::{Error, Result};

pub const FEATURE_DIM: usize = 9;
pub const ANCHOR_COUNT: usize = 8;
pub const SLOPE_INDEX: usize = 8;

pub const DEFAULT_LANDING_REWARD: f64 = 10.0;
pub const DEFAULT_STEP_PENALTY: f64 = -0.01;

/// A perimeter point and the largest in-gamut distance from it, used to
/// normalize distances into `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerimeterAnchor {
    pub color: LabColor,
    pub max_distance: f64,
}

impl PerimeterAnchor {
    pub fn new(color: LabColor) -> Self {
        PerimeterAnchor { color, max_distance: max_gamut_distance(color) }
    }
}

fn gamut_surface() -> &'static [LabColor] {
    static SURFACE: OnceLock<Vec<LabColor>> = OnceLock::new();
    SURFACE.get_or_init(|| {
        const STEPS: usize = 64;
        let mut pts = Vec::new();
        for i in 0..=STEPS {
            for j in 0..=STEPS {
                let u = i as f64 / STEPS as f64;
                let v = j as f64 / STEPS as f64;
                for fixed in [0.0, 1.0] {
                    pts.push(srgb_to_lab(RgbColor::new(fixed, u, v)));
                    pts.push(srgb_to_lab(RgbColor::new(u, fixed, v)));
                    pts.push(srgb_to_lab(RgbColor::new(u, v, fixed)));
                }
            }
        }
        pts
    })
}

/// Largest Euclidean distance from `c` to any displayable color. The maximum
/// is attained on the gamut surface, sampled over the sRGB cube faces.
pub fn max_gamut_distance(c: LabColor) -> f64 {
    gamut_surface().iter().map(|p| p.distance(&c)).fold(0.0, f64::max)
}

/// Anchors at hue angles 0°, 45°, …, 315°, each at the maximum in-gamut
/// chroma for that hue at L* = 50.
pub fn default_anchors() -> [PerimeterAnchor; ANCHOR_COUNT] {
    static ANCHORS: OnceLock<[PerimeterAnchor; ANCHOR_COUNT]> = OnceLock::new();
    *ANCHORS.get_or_init(|| {
        std::array::from_fn(|i| {
            let hue = i as f64 * PI / 4.0;
            PerimeterAnchor::new(LabColor::from_lch(50.0, max_chroma(50.0, hue), hue))
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub landing_reward: f64,
    pub step_penalty: f64,
    pub anchors: [PerimeterAnchor; ANCHOR_COUNT],
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            landing_reward: DEFAULT_LANDING_REWARD,
            step_penalty: DEFAULT_STEP_PENALTY,
            anchors: default_anchors(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.landing_reward > 0.0) {
            return Err(Error::InvalidParameter("landing reward must be positive".into()));
        }
        if !(self.step_penalty < 0.0) {
            return Err(Error::InvalidParameter("step penalty must be negative".into()));
        }
        Ok(())
    }
}

/// Φ(Υ): `k₁..k₈` then `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn perimeter(&self) -> &[f64] {
        &self.0[..ANCHOR_COUNT]
    }

    pub fn slope(&self) -> f64 {
        self.0[SLOPE_INDEX]
    }

    pub fn dot(&self, theta: &[f64; FEATURE_DIM]) -> f64 {
        self.0.iter().zip(theta).map(|(x, w)| x * w).sum()
    }
}

/// Per-session reward parameters: the fixed config plus the slope
/// normalizer computed over that session's aligned corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardContext {
    pub config: RewardConfig,
    pub slope_norm: f64,
}

impl RewardContext {
    pub fn new(config: RewardConfig, slope_norm: f64) -> Result<Self> {
        config.validate()?;
        if !(slope_norm > 0.0 && slope_norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("slope normalizer {slope_norm} must be positive")));
        }
        Ok(RewardContext { config, slope_norm })
    }

    /// Normalizes slopes so the steepest candidate has `|m| = 1`.
    pub fn for_candidates(config: RewardConfig, candidates: &[Candidate]) -> Result<Self> {
        let mut norm: f64 = 0.0;
        for c in candidates {
            norm = norm.max(chroma_slope(&c.trajectory)?.abs());
        }
        RewardContext::new(config, if norm > 0.0 { norm } else { 1.0 })
    }
}

pub fn perimeter_distances(t: &Trajectory, anchors: &[PerimeterAnchor; ANCHOR_COUNT]) -> Result<[f64; ANCHOR_COUNT]> {
    perimeter_distances_of(t.interior(), anchors)
}

/// Minimum distance from any of `colors` to each anchor, normalized by the
/// anchor's maximum in-gamut distance.
pub fn perimeter_distances_of(
    colors: &[LabColor],
    anchors: &[PerimeterAnchor; ANCHOR_COUNT],
) -> Result<[f64; ANCHOR_COUNT]> {
    if colors.is_empty() {
        return Err(Error::NoInteriorStates);
    }
    Ok(std::array::from_fn(|i| {
        let a = &anchors[i];
        let d = colors.iter().map(|c| c.distance(&a.color)).fold(f64::INFINITY, f64::min);
        (d / a.max_distance).clamp(0.0, 1.0)
    }))
}

pub fn chroma_slope(t: &Trajectory) -> Result<f64> {
    chroma_slope_of(t.interior())
}

/// Least-squares slope of C* against L*.
pub fn chroma_slope_of(colors: &[LabColor]) -> Result<f64> {
    if colors.len() < 2 {
        return Err(Error::NoInteriorStates);
    }
    let n = colors.len() as f64;
    let mean_l = colors.iter().map(|c| c.l).sum::<f64>() / n;
    let mean_c = colors.iter().map(LabColor::chroma).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for c in colors {
        let dl = c.l - mean_l;
        sxx += dl * dl;
        sxy += dl * (c.chroma() - mean_c);
    }
    if sxx <= f64::EPSILON * n {
        return Err(Error::DegenerateSlope);
    }
    Ok(sxy / sxx)
}

pub fn featurize(t: &Trajectory, ctx: &RewardContext) -> Result<FeatureVector> {
    featurize_colors(t.interior(), ctx)
}

pub fn featurize_colors(interior: &[LabColor], ctx: &RewardContext) -> Result<FeatureVector> {
    let k = perimeter_distances_of(interior, &ctx.config.anchors)?;
    let m = (chroma_slope_of(interior)? / ctx.slope_norm).clamp(-1.0, 1.0);
    let mut phi = [0.0; FEATURE_DIM];
    phi[..ANCHOR_COUNT].copy_from_slice(&k);
    phi[SLOPE_INDEX] = m;
    Ok(FeatureVector(phi))
}

pub fn as_weights(theta: &[f64]) -> Result<[f64; FEATURE_DIM]> {
    theta
        .try_into()
        .map_err(|_| Error::Dimension { expected: FEATURE_DIM, got: theta.len() })
}

/// `θ · Φ(Υ)`. Landing reward and step penalties are not included.
pub fn trajectory_reward(t: &Trajectory, theta: &[f64], ctx: &RewardContext) -> Result<f64> {
    let w = as_weights(theta)?;
    Ok(featurize(t, ctx)?.dot(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{Provenance, StateId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn traj(interior: &[LabColor]) -> Trajectory {
        let mut colors = vec![LabColor::WHITE];
        colors.extend_from_slice(interior);
        colors.push(LabColor::BLACK);
        let ids = (0..colors.len() as u32).map(StateId).collect();
        Trajectory { ids, colors, provenance: Provenance::Synthesized }
    }

    fn ctx() -> RewardContext {
        RewardContext::new(RewardConfig::default(), 1.0).unwrap()
    }

    #[test]
    fn anchor_at_a_state_gives_zero_distance() {
        let anchors = default_anchors();
        let t = traj(&[LabColor::new(80.0, 0.0, 0.0), anchors[2].color, LabColor::new(20.0, 0.0, 0.0)]);
        let k = perimeter_distances(&t, &anchors).unwrap();
        assert_eq!(k[2], 0.0);
        assert!(k.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn neutral_trajectory_is_equidistant_from_symmetric_anchors() {
        // Equal-chroma anchors with a shared normalizer.
        let anchors: [PerimeterAnchor; 8] = std::array::from_fn(|i| PerimeterAnchor {
            color: LabColor::from_lch(50.0, 40.0, i as f64 * PI / 4.0),
            max_distance: 150.0,
        });
        let t = traj(&[LabColor::new(75.0, 0.0, 0.0), LabColor::new(50.0, 0.0, 0.0), LabColor::new(25.0, 0.0, 0.0)]);
        let k = perimeter_distances(&t, &anchors).unwrap();
        for x in k {
            assert!((x - k[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn perimeter_distances_match_exhaustive_scan() {
        let anchors = default_anchors();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..10);
            let interior: Vec<LabColor> = (0..n)
                .map(|_| LabColor::new(rng.gen_range(10.0..90.0), rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)))
                .collect();
            let k = perimeter_distances(&traj(&interior), &anchors).unwrap();
            for (i, a) in anchors.iter().enumerate() {
                let mut best = f64::INFINITY;
                for c in &interior {
                    let d = ((c.l - a.color.l).powi(2) + (c.a - a.color.a).powi(2) + (c.b - a.color.b).powi(2)).sqrt();
                    if d < best {
                        best = d;
                    }
                }
                assert!((k[i] - best / a.max_distance).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_interior_is_an_error() {
        let t = traj(&[]);
        assert!(matches!(perimeter_distances(&t, &default_anchors()), Err(Error::NoInteriorStates)));
    }

    #[test]
    fn slope_examples() {
        let flat = traj(&[LabColor::from_lch(80.0, 20.0, 1.0), LabColor::from_lch(50.0, 20.0, 2.0), LabColor::from_lch(30.0, 20.0, 3.0)]);
        assert!(chroma_slope(&flat).unwrap().abs() < 1e-9);

        let two = traj(&[LabColor::new(80.0, 10.0, 0.0), LabColor::new(20.0, 0.0, 70.0)]);
        assert!((chroma_slope(&two).unwrap() + 1.0).abs() < 1e-12);

        let same_l = traj(&[LabColor::new(50.0, 10.0, 0.0), LabColor::new(50.0, 20.0, 0.0)]);
        assert!(matches!(chroma_slope(&same_l), Err(Error::DegenerateSlope)));
    }

    #[test]
    fn slope_is_invariant_under_hue_rotation() {
        let base = [LabColor::new(85.0, 5.0, 12.0), LabColor::new(60.0, -30.0, 22.0), LabColor::new(35.0, 14.0, -40.0)];
        let s0 = chroma_slope(&traj(&base)).unwrap();
        for angle in [0.3, 1.7, 4.0] {
            let (sin, cos) = f64::sin_cos(angle);
            let rotated: Vec<LabColor> = base.iter().map(|c| LabColor::new(c.l, c.a * cos - c.b * sin, c.a * sin + c.b * cos)).collect();
            assert!((chroma_slope(&traj(&rotated)).unwrap() - s0).abs() < 1e-9);
        }
    }

    #[test]
    fn slope_feature_is_clamped_and_scaled() {
        let ctx = RewardContext::new(RewardConfig::default(), 0.5).unwrap();
        let t = traj(&[LabColor::new(80.0, 10.0, 0.0), LabColor::new(20.0, 0.0, 70.0)]);
        assert_eq!(featurize(&t, &ctx).unwrap().slope(), -1.0);
        let ctx = RewardContext::new(RewardConfig::default(), 2.0).unwrap();
        assert!((featurize(&t, &ctx).unwrap().slope() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn reward_is_linear_in_theta() {
        let t = traj(&[LabColor::new(70.0, 20.0, -10.0), LabColor::new(40.0, -15.0, 30.0)]);
        let c = ctx();
        assert_eq!(trajectory_reward(&t, &[0.0; 9], &c).unwrap(), 0.0);
        let phi = featurize(&t, &c).unwrap();
        let mut e2 = [0.0; 9];
        e2[1] = 1.0;
        assert_eq!(trajectory_reward(&t, &e2, &c).unwrap(), phi.0[1]);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t1: [f64; 9] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let t2: [f64; 9] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let (a, b) = (0.7, -2.3);
        let mix: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| a * x + b * y).collect();
        let lhs = trajectory_reward(&t, &mix, &c).unwrap();
        let rhs = a * trajectory_reward(&t, &t1, &c).unwrap() + b * trajectory_reward(&t, &t2, &c).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn theta_dimension_is_checked() {
        let t = traj(&[LabColor::new(70.0, 20.0, -10.0), LabColor::new(40.0, -15.0, 30.0)]);
        assert!(matches!(
            trajectory_reward(&t, &[1.0; 8], &ctx()),
            Err(Error::Dimension { expected: 9, got: 8 })
        ));
    }

    #[test]
    fn default_config_values() {
        let cfg = RewardConfig::default();
        assert_eq!(cfg.landing_reward, 10.0);
        assert_eq!(cfg.step_penalty, -0.01);
        for a in cfg.anchors {
            assert!((a.color.l - 50.0).abs() < 1e-12);
            assert!(crate::colorspace::in_gamut(a.color));
            assert!(a.max_distance > a.color.chroma());
        }
    }
}
