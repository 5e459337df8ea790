//! Turns a trajectory into a display-ready continuous colormap.
//!
//! The control points are fitted with clamped B-splines (cubic where enough
//! points exist), split at the seed so the curve passes through it exactly.
//! The curve is cut where L* reaches the truncation floor, resampled at equal
//! ΔE2000 arc length, repaired for lightness monotonicity and clipped to the
//! sRGB gamut.

use serde::{Deserialize, Serialize};

use crate::colorspace::{delta_e_2000, gamut_clip, in_gamut, lab_to_srgb, LabColor};
use crate::environment::{StateId, Trajectory};
use crate::error::{Error, Result};

pub const OUTPUT_SAMPLES: usize = 256;
pub const ARC_GRID: usize = 1024;
pub const TRUNCATE_L: f64 = 10.0;

/// One clamped B-spline on a uniform open knot vector.
#[derive(Clone, Debug, PartialEq)]
struct BSpline {
    degree: usize,
    knots: Vec<f64>,
    points: Vec<LabColor>,
}

impl BSpline {
    fn new(points: &[LabColor]) -> BSpline {
        let n = points.len();
        let degree = (n - 1).min(3);
        let interior = n - degree - 1;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..=interior).map(|j| j as f64 / (interior + 1) as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        BSpline { degree, knots, points: points.to_vec() }
    }

    /// de Boor evaluation at `u ∈ [0, 1]`.
    fn eval(&self, u: f64) -> LabColor {
        let p = self.degree;
        let u = u.clamp(0.0, 1.0);
        let n = self.points.len();
        let mut k = p;
        while k + 1 < n && self.knots[k + 1] <= u {
            k += 1;
        }
        let mut d: Vec<[f64; 3]> = (0..=p).map(|j| self.points[j + k - p].to_array()).collect();
        for r in 1..=p {
            for j in (r..=p).rev() {
                let i = j + k - p;
                let denom = self.knots[i + 1 + p - r] - self.knots[i];
                let alpha = if denom > 0.0 { (u - self.knots[i]) / denom } else { 0.0 };
                for c in 0..3 {
                    d[j][c] = (1.0 - alpha) * d[j - 1][c] + alpha * d[j][c];
                }
            }
        }
        LabColor::from(d[p])
    }
}

/// A parametric curve on `t ∈ [0, 1]` made of clamped B-spline pieces joined
/// at shared control points.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pieces: Vec<BSpline>,
    /// Parameter at which each piece starts, plus a final 1.0.
    breaks: Vec<f64>,
}

impl Curve {
    pub fn eval(&self, t: f64) -> LabColor {
        let t = t.clamp(0.0, 1.0);
        let i = self.breaks[1..self.pieces.len()].iter().take_while(|&&b| b <= t).count();
        let (t0, t1) = (self.breaks[i], self.breaks[i + 1]);
        let u = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        self.pieces[i].eval(u)
    }
}

/// Clamped B-spline through the first and last points, approximating the
/// rest. Two or three points give a line or a quadratic.
pub fn fit_spline(points: &[LabColor]) -> Result<Curve> {
    fit_spline_through(points, None)
}

/// As [`fit_spline`], and additionally passes exactly through
/// `points[knot]` by fitting the two sides separately. The join sits at the
/// knot's chord-length parameter.
pub fn fit_spline_through(points: &[LabColor], knot: Option<usize>) -> Result<Curve> {
    if points.len() < 2 {
        return Err(Error::TooFewColors { needed: 2, got: points.len() });
    }
    let knot = knot.filter(|&k| k > 0 && k + 1 < points.len());
    let Some(k) = knot else {
        return Ok(Curve { pieces: vec![BSpline::new(points)], breaks: vec![0.0, 1.0] });
    };
    let chord: Vec<f64> = points.windows(2).map(|w| w[0].distance(&w[1])).collect();
    let total: f64 = chord.iter().sum();
    let split = if total > 0.0 { chord[..k].iter().sum::<f64>() / total } else { k as f64 / (points.len() - 1) as f64 };
    Ok(Curve {
        pieces: vec![BSpline::new(&points[..=k]), BSpline::new(&points[k..])],
        breaks: vec![0.0, split, 1.0],
    })
}

/// Largest `t` with `L(t) ≥ floor`, by bisection. Assumes L decreases
/// along the curve; returns 1.0 when the curve never drops below `floor`.
pub fn truncation_parameter(curve: &Curve, floor: f64) -> Result<f64> {
    if curve.eval(0.0).l < floor {
        return Err(Error::InvalidParameter(format!("curve starts below L*={floor}")));
    }
    if curve.eval(1.0).l >= floor {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if curve.eval(mid).l >= floor {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Resamples `curve` restricted to `[t0, t1]` at `n_out` points equally
/// spaced in cumulative ΔE2000 arc length, measured on a grid of `grid`
/// intervals and inverted by piecewise-linear interpolation.
pub fn uniformize_range(curve: &Curve, t0: f64, t1: f64, n_out: usize, grid: usize) -> Result<Vec<LabColor>> {
    if n_out < 2 || grid < 1 {
        return Err(Error::InvalidParameter(format!("cannot uniformize to {n_out} samples on {grid} intervals")));
    }
    let ts: Vec<f64> = (0..=grid).map(|i| t0 + (t1 - t0) * i as f64 / grid as f64).collect();
    let pts: Vec<LabColor> = ts.iter().map(|&t| curve.eval(t)).collect();
    let mut s = Vec::with_capacity(pts.len());
    s.push(0.0);
    for w in pts.windows(2) {
        let last = *s.last().unwrap();
        s.push(last + delta_e_2000(w[0], w[1]));
    }
    let total = *s.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::ZeroLengthCurve);
    }
    let mut out = Vec::with_capacity(n_out);
    let mut seg = 0;
    for j in 0..n_out {
        let target = total * j as f64 / (n_out - 1) as f64;
        while seg + 1 < grid && s[seg + 1] < target {
            seg += 1;
        }
        let len = s[seg + 1] - s[seg];
        let frac = if len > 0.0 { ((target - s[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(curve.eval(ts[seg] + frac * (ts[seg + 1] - ts[seg])));
    }
    Ok(out)
}

pub fn uniformize(curve: &Curve, n_out: usize) -> Result<Vec<LabColor>> {
    uniformize_range(curve, 0.0, 1.0, n_out, ARC_GRID)
}

/// Least-squares non-increasing fit (pool adjacent violators).
pub fn isotonic_decreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a >= b {
                break;
            }
            blocks.pop();
            let n = na + nb;
            *blocks.last_mut().unwrap() = ((a * na as f64 + b * nb as f64) / n as f64, n);
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

/// Replaces runs of equal values by a linear ramp towards the next distinct
/// value so the sequence becomes strictly decreasing. Assumes the input is
/// already non-increasing.
fn break_ties(values: &mut [f64]) {
    let n = values.len();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] >= values[i] {
            j += 1;
        }
        if j > i {
            let hi = values[i];
            let lo = if j + 1 < n { values[j + 1] } else { hi - 1e-3 };
            let step = ((hi - lo) / (j - i + 1) as f64).min(1e-3);
            for (k, v) in values[i..=j].iter_mut().enumerate() {
                *v = hi - step * k as f64;
            }
        }
        i = j + 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityProfile {
    pub gaps: Vec<f64>,
    pub total_length: f64,
    pub flatness: f64,
    pub lightness: Vec<f64>,
}

/// Adjacent ΔE2000 gaps, their sum, `1 − std(gaps)/total` (population
/// standard deviation) and the L* series.
pub fn profile_colors(colors: &[LabColor]) -> UniformityProfile {
    let gaps: Vec<f64> = colors.windows(2).map(|w| delta_e_2000(w[0], w[1])).collect();
    let total_length: f64 = gaps.iter().sum();
    let flatness = if gaps.is_empty() || total_length <= 0.0 {
        if gaps.is_empty() { 1.0 } else { f64::NEG_INFINITY }
    } else {
        let mean = total_length / gaps.len() as f64;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64;
        1.0 - var.sqrt() / total_length
    };
    UniformityProfile { gaps, total_length, flatness, lightness: colors.iter().map(|c| c.l).collect() }
}

/// What finalization had to repair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FinalizeReport {
    /// Samples of the uniformized curve outside the gamut before clipping.
    pub out_of_gamut: usize,
    pub isotonic_applied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousColormap {
    pub colors: Vec<LabColor>,
    /// Control points the curve was fitted to (seed substituted).
    pub control_points: Vec<LabColor>,
    pub profile: UniformityProfile,
    pub report: FinalizeReport,
}

impl ContinuousColormap {
    pub fn to_hex_list(&self) -> Vec<String> {
        self.colors.iter().map(LabColor::to_hex).collect()
    }

    pub fn hex_document(&self) -> HexListDocument {
        HexListDocument { colors: self.to_hex_list(), lab: Some(self.colors.clone()) }
    }

    /// `index,L,a,b,r,g,b` with 8-bit sRGB.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,L,a,b,r,g,b\n");
        for (i, c) in self.colors.iter().enumerate() {
            let [r, g, b] = lab_to_srgb(gamut_clip(*c)).color().to_u8();
            out.push_str(&format!("{i},{:.6},{:.6},{:.6},{r},{g},{b}\n", c.l, c.a, c.b));
        }
        out
    }

    pub fn profile_document(&self) -> ProfileDocument {
        ProfileDocument::from_colors(&self.colors)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HexListDocument {
    pub colors: Vec<String>,
    /// Unrounded samples. 8-bit rounding can reorder nearly equal
    /// lightness values, so invariant checks prefer these when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lab: Option<Vec<LabColor>>,
}

impl HexListDocument {
    pub fn from_hex(colors: Vec<String>) -> Self {
        HexListDocument { colors, lab: None }
    }

    /// The Lab samples if stored, otherwise the decoded hex colors.
    pub fn to_lab(&self) -> Result<Vec<LabColor>> {
        match &self.lab {
            Some(lab) => Ok(lab.clone()),
            None => self.colors.iter().map(|h| LabColor::from_hex(h)).collect(),
        }
    }
}

/// Everything needed to draw the four profile panels: a*–b* projection,
/// swatch, lightness series and gap series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub ab: Vec<[f64; 2]>,
    pub swatch: Vec<String>,
    pub lightness: Vec<f64>,
    pub gaps: Vec<f64>,
    pub total_length: f64,
    pub flatness: f64,
}

impl ProfileDocument {
    pub fn from_colors(colors: &[LabColor]) -> ProfileDocument {
        let p = profile_colors(colors);
        ProfileDocument {
            ab: colors.iter().map(|c| [c.a, c.b]).collect(),
            swatch: colors.iter().map(LabColor::to_hex).collect(),
            lightness: p.lightness,
            gaps: p.gaps,
            total_length: p.total_length,
            flatness: p.flatness,
        }
    }
}

/// Fits, truncates at L* = 10, uniformizes to 256 samples, repairs L
/// monotonicity and clips to the gamut. `seed_index` marks a control point
/// the curve must pass through exactly.
pub fn finalize_points(points: &[LabColor], seed_index: Option<usize>) -> Result<ContinuousColormap> {
    let curve = fit_spline_through(points, seed_index)?;
    let t_cut = truncation_parameter(&curve, TRUNCATE_L)?;
    let raw = uniformize_range(&curve, 0.0, t_cut, OUTPUT_SAMPLES, ARC_GRID)?;
    let out_of_gamut = raw.iter().filter(|c| !in_gamut(**c)).count();

    let mut lightness: Vec<f64> = raw.iter().map(|c| c.l).collect();
    let isotonic_applied = lightness.windows(2).any(|w| w[1] >= w[0]);
    if isotonic_applied {
        lightness = isotonic_decreasing(&lightness);
        break_ties(&mut lightness);
        tracing::debug!("lightness repaired by isotonic projection");
    }
    let colors: Vec<LabColor> = raw
        .iter()
        .zip(&lightness)
        .map(|(c, &l)| gamut_clip(LabColor::new(l, c.a, c.b)))
        .collect();
    Ok(ContinuousColormap {
        profile: profile_colors(&colors),
        colors,
        control_points: points.to_vec(),
        report: FinalizeReport { out_of_gamut, isotonic_applied },
    })
}

/// Substitutes the exact seed color for `seed_state` and finalizes.
pub fn finalize(trajectory: &Trajectory, seed_state: StateId, seed: LabColor) -> Result<ContinuousColormap> {
    let mut points = trajectory.colors.clone();
    let seed_index = trajectory.ids.iter().position(|&id| id == seed_state);
    if let Some(i) = seed_index {
        points[i] = seed;
    }
    finalize_points(&points, seed_index)
}

/// Invariant violations of a finished colormap, empty when it is valid.
pub fn check_invariants(colors: &[LabColor], seed: Option<LabColor>) -> Vec<String> {
    let mut problems = Vec::new();
    if colors.len() != OUTPUT_SAMPLES {
        problems.push(format!("expected {OUTPUT_SAMPLES} samples, found {}", colors.len()));
    }
    if let Some(i) = colors.windows(2).position(|w| w[1].l >= w[0].l) {
        problems.push(format!(
            "lightness not strictly decreasing at index {} ({:.4} -> {:.4})",
            i + 1,
            colors[i].l,
            colors[i + 1].l
        ));
    }
    if let Some(i) = colors.iter().position(|c| !in_gamut(*c)) {
        problems.push(format!("sample {i} out of gamut"));
    }
    let flatness = profile_colors(colors).flatness;
    if !(flatness >= 0.99) {
        problems.push(format!("flatness {flatness:.5} below 0.99"));
    }
    if let Some(last) = colors.last() {
        if !(TRUNCATE_L..=12.0).contains(&last.l) {
            problems.push(format!("last lightness {:.3} outside [10, 12]", last.l));
        }
    }
    if let Some(seed) = seed {
        let nearest = colors.iter().map(|c| delta_e_2000(*c, seed)).fold(f64::INFINITY, f64::min);
        if !(nearest <= 1.0) {
            problems.push(format!("seed is {nearest:.3} ΔE2000 from the nearest sample"));
        }
    }
    problems
}
