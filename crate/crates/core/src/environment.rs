//! The quantized CIELAB environment: 512 gamut states, corpus alignment to a
//! seed color, and the lightness-ordered color graph trajectories live in.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::{delta_e_2000, gamut_clip, in_gamut, LabColor};
use crate::corpus::{Corpus, ExpertColormap, CONTROL_POINTS};
use crate::error::{Error, Result};

pub const STATE_COUNT: usize = 512;

const HALTON_BASES: [u64; 3] = [2, 3, 5];
const LLOYD_CLOUD: usize = 40_000;
const LLOYD_MAX_ITERS: usize = 100;
const LLOYD_TOLERANCE: f64 = 0.5;

/// Radical inverse of `index` in `base`: the `index`-th Halton value.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Index of a graph node. Quantized states are `0..n`; white and black are
/// `n` and `n + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateSpace {
    states: Vec<LabColor>,
}

impl StateSpace {
    pub fn from_states(states: Vec<LabColor>) -> StateSpace {
        StateSpace { states }
    }

    /// Quantized states, excluding white and black.
    pub fn states(&self) -> &[LabColor] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn white(&self) -> StateId {
        StateId(self.states.len() as u32)
    }

    pub fn black(&self) -> StateId {
        StateId(self.states.len() as u32 + 1)
    }

    /// Total node count including white and black.
    pub fn node_count(&self) -> usize {
        self.states.len() + 2
    }

    pub fn color(&self, id: StateId) -> LabColor {
        let i = id.index();
        match i.cmp(&self.states.len()) {
            std::cmp::Ordering::Less => self.states[i],
            std::cmp::Ordering::Equal => LabColor::WHITE,
            std::cmp::Ordering::Greater => LabColor::BLACK,
        }
    }

    /// Nearest quantized state by Euclidean Lab distance. Ties go to the
    /// lower index.
    pub fn nearest(&self, c: LabColor) -> StateId {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.states.iter().enumerate() {
            let d = s.distance(&c);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        StateId(best as u32)
    }

    /// Mean over states of the distance to the nearest other state.
    pub fn mean_nearest_neighbor(&self, metric: impl Fn(LabColor, LabColor) -> f64 + Sync) -> f64 {
        let n = self.states.len();
        if n < 2 {
            return 0.0;
        }
        let total: f64 = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| metric(self.states[i], self.states[j]))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        total / n as f64
    }

    /// Process-wide cache of [`quantize_gamut`] results.
    pub fn shared(seed: u64) -> Arc<StateSpace> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<StateSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(space) = cache.lock().unwrap().get(&seed) {
            return space.clone();
        }
        let space = Arc::new(quantize_gamut(seed));
        cache.lock().unwrap().entry(seed).or_insert(space).clone()
    }
}

fn random_in_gamut(rng: &mut impl Rng) -> LabColor {
    loop {
        let c = LabColor::new(
            rng.gen_range(0.0..100.0),
            rng.gen_range(-128.0..128.0),
            rng.gen_range(-128.0..128.0),
        );
        if in_gamut(c) {
            return c;
        }
    }
}

/// Builds the 512-color state space: Halton points (bases 2, 3, 5) over the
/// Lab bounding box with gamut rejection, relaxed by Lloyd iteration against
/// a dense in-gamut cloud.
pub fn quantize_gamut(seed: u64) -> StateSpace {
    let skip = seed.wrapping_mul(0x9E37_79B9) % 65_536;
    let mut states = Vec::with_capacity(STATE_COUNT);
    let mut index = 1 + skip;
    while states.len() < STATE_COUNT {
        let c = LabColor::new(
            100.0 * halton(index, HALTON_BASES[0]),
            -128.0 + 256.0 * halton(index, HALTON_BASES[1]),
            -128.0 + 256.0 * halton(index, HALTON_BASES[2]),
        );
        index += 1;
        if in_gamut(c) {
            states.push(c);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cloud: Vec<LabColor> = (0..LLOYD_CLOUD).map(|_| random_in_gamut(&mut rng)).collect();

    for iter in 0..LLOYD_MAX_ITERS {
        let assignment: Vec<usize> = cloud
            .par_iter()
            .map(|p| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, s) in states.iter().enumerate() {
                    let dl = s.l - p.l;
                    let da = s.a - p.a;
                    let db = s.b - p.b;
                    let d = dl * dl + da * da + db * db;
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                best
            })
            .collect();
        let mut sums = vec![[0.0f64; 3]; states.len()];
        let mut counts = vec![0usize; states.len()];
        for (p, &k) in cloud.iter().zip(&assignment) {
            sums[k][0] += p.l;
            sums[k][1] += p.a;
            sums[k][2] += p.b;
            counts[k] += 1;
        }
        let mut max_move: f64 = 0.0;
        for (k, state) in states.iter_mut().enumerate() {
            if counts[k] == 0 {
                continue;
            }
            let n = counts[k] as f64;
            let centroid = gamut_clip(LabColor::new(sums[k][0] / n, sums[k][1] / n, sums[k][2] / n));
            max_move = max_move.max(delta_e_2000(*state, centroid));
            *state = centroid;
        }
        tracing::debug!(iter, max_move, "lloyd iteration");
        if max_move < LLOYD_TOLERANCE {
            break;
        }
    }
    StateSpace { states }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentVariant {
    /// Rotated about the neutral axis, then translated.
    Rotate,
    /// Translated only.
    Shift,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedColormap {
    pub source_id: String,
    pub variant: AlignmentVariant,
    pub points: [LabColor; CONTROL_POINTS],
    /// Index of the control point that was moved onto the seed.
    pub seed_index: usize,
}

impl AlignedColormap {
    pub fn id(&self) -> String {
        match self.variant {
            AlignmentVariant::Rotate => format!("{}:rotate", self.source_id),
            AlignmentVariant::Shift => format!("{}:shift", self.source_id),
        }
    }
}

/// Aligns a colormap to pass through `seed`. Produces up to two variants;
/// variants with any control point out of gamut are discarded.
pub fn align_colormap(cm: &ExpertColormap, seed: LabColor) -> Vec<AlignedColormap> {
    let pts = &cm.control_points;
    let idx = pts
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| (x.l - seed.l).abs().total_cmp(&(y.l - seed.l).abs()))
        .map(|(i, _)| i)
        .expect("nine control points");
    let anchor = pts[idx];

    let rotation = if anchor.chroma() > 1e-9 && seed.chroma() > 1e-9 {
        seed.hue_radians() - anchor.hue_radians()
    } else {
        0.0
    };
    let (dl, dc) = (seed.l - anchor.l, seed.chroma() - anchor.chroma());
    // Translation in (L*, C*) keeps each point's own hue.
    let transform = |turn: f64| {
        let mut moved = pts.map(|c| {
            if c.chroma() > 1e-9 {
                LabColor::from_lch(c.l + dl, (c.chroma() + dc).max(0.0), c.hue_radians() + turn)
            } else {
                LabColor::from_lch(c.l + dl, dc.max(0.0), seed.hue_radians())
            }
        });
        moved[idx] = seed;
        moved
    };

    let rotated = transform(rotation);
    let shifted = transform(0.0);

    let mut out = Vec::with_capacity(2);
    for (variant, points) in [(AlignmentVariant::Rotate, rotated), (AlignmentVariant::Shift, shifted)] {
        if !points.iter().all(|&c| in_gamut(c)) {
            continue;
        }
        if out
            .iter()
            .any(|o: &AlignedColormap| o.points.iter().zip(&points).all(|(p, q)| p.distance(q) < 1e-9))
        {
            continue;
        }
        out.push(AlignedColormap { source_id: cm.id.clone(), variant, points, seed_index: idx });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    CorpusAligned,
    Synthesized,
}

/// A white-to-black path through the graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub ids: Vec<StateId>,
    pub colors: Vec<LabColor>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn from_ids(space: &StateSpace, ids: Vec<StateId>, provenance: Provenance) -> Trajectory {
        let colors = ids.iter().map(|&id| space.color(id)).collect();
        Trajectory { ids, colors, provenance }
    }

    /// States strictly between white and black.
    pub fn interior(&self) -> &[LabColor] {
        if self.colors.len() <= 2 {
            return &[];
        }
        &self.colors[1..self.colors.len() - 1]
    }

    pub fn interior_ids(&self) -> &[StateId] {
        if self.ids.len() <= 2 {
            return &[];
        }
        &self.ids[1..self.ids.len() - 1]
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.colors.windows(2).all(|w| w[1].l < w[0].l)
    }

    pub fn action_count(&self) -> usize {
        self.ids.len().saturating_sub(1)
    }
}

/// A ranking candidate: a snapped corpus trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug)]
pub struct ColorGraph {
    space: Arc<StateSpace>,
    successors: Vec<Vec<StateId>>,
    seed_state: StateId,
    seed_color: LabColor,
}

#[derive(Serialize)]
pub struct GraphDocument {
    pub seed: LabColor,
    pub seed_state: StateId,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(StateId, StateId)>,
}

#[derive(Serialize)]
pub struct GraphNode {
    pub id: StateId,
    pub lab: LabColor,
    pub hex: String,
    pub out_degree: usize,
}

impl ColorGraph {
    /// Builds a graph directly from white-to-black id paths.
    pub fn from_paths(space: Arc<StateSpace>, paths: &[Vec<StateId>], seed_color: LabColor) -> ColorGraph {
        let seed_state = space.nearest(seed_color);
        let mut sets: Vec<BTreeSet<StateId>> = vec![BTreeSet::new(); space.node_count()];
        for path in paths {
            for w in path.windows(2) {
                sets[w[0].index()].insert(w[1]);
            }
        }
        let successors = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        ColorGraph { space, successors, seed_state, seed_color }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn shared_space(&self) -> Arc<StateSpace> {
        self.space.clone()
    }

    pub fn white(&self) -> StateId {
        self.space.white()
    }

    pub fn black(&self) -> StateId {
        self.space.black()
    }

    pub fn seed_state(&self) -> StateId {
        self.seed_state
    }

    /// The exact user seed (not its snapped state).
    pub fn seed_color(&self) -> LabColor {
        self.seed_color
    }

    pub fn color(&self, id: StateId) -> LabColor {
        self.space.color(id)
    }

    pub fn successors(&self, id: StateId) -> &[StateId] {
        &self.successors[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.successors.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(i, succ)| succ.iter().map(move |&s| (StateId(i as u32), s)))
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, from: StateId, to: StateId) -> bool {
        self.successors[from.index()].binary_search(&to).is_ok()
    }

    /// Nodes that have at least one incident edge.
    pub fn active_nodes(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.successors.len()];
        for (a, b) in self.edges() {
            seen[a.index()] = true;
            seen[b.index()] = true;
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| StateId(i as u32))
            .collect()
    }

    /// Kahn's algorithm over active nodes; `None` if a cycle exists.
    pub fn topological_order(&self) -> Option<Vec<StateId>> {
        let nodes = self.active_nodes();
        let mut indegree = vec![0usize; self.successors.len()];
        for (_, b) in self.edges() {
            indegree[b.index()] += 1;
        }
        let mut queue: std::collections::VecDeque<StateId> =
            nodes.iter().copied().filter(|n| indegree[n.index()] == 0).collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for &s in &self.successors[n.index()] {
                indegree[s.index()] -= 1;
                if indegree[s.index()] == 0 {
                    queue.push_back(s);
                }
            }
        }
        (order.len() == nodes.len()).then_some(order)
    }

    pub fn contains_path(&self, ids: &[StateId]) -> bool {
        ids.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }

    /// Removes the edge `from -> to`. Returns whether it existed.
    pub fn remove_edge(&mut self, from: StateId, to: StateId) -> bool {
        let succ = &mut self.successors[from.index()];
        match succ.binary_search(&to) {
            Ok(pos) => {
                succ.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            seed: self.seed_color,
            seed_state: self.seed_state,
            nodes: self
                .active_nodes()
                .into_iter()
                .map(|id| GraphNode {
                    id,
                    lab: self.color(id),
                    hex: self.color(id).to_hex(),
                    out_degree: self.successors(id).len(),
                })
                .collect(),
            edges: self.edges().collect(),
        }
    }
}

/// Snaps an aligned colormap onto the state space. Consecutive duplicates
/// merge. A snapped state that does not lie strictly below its predecessor
/// in L is dropped (its inbound edge would break the DAG), except the seed
/// state, which instead evicts the predecessors it conflicts with. Returns
/// `None` when fewer than two interior states remain.
fn snap(space: &StateSpace, aligned: &AlignedColormap, seed_state: StateId) -> Option<Vec<StateId>> {
    let mut ids = vec![space.white()];
    for p in &aligned.points {
        let s = space.nearest(*p);
        let l = space.color(s).l;
        if s == seed_state {
            while ids.len() > 1 && space.color(*ids.last().unwrap()).l <= l {
                ids.pop();
            }
            ids.push(s);
        } else if l < space.color(*ids.last().unwrap()).l {
            ids.push(s);
        }
    }
    ids.push(space.black());
    let valid = ids.windows(2).all(|w| space.color(w[1]).l < space.color(w[0]).l);
    if !valid || ids.len() < 4 || !ids.contains(&seed_state) {
        tracing::debug!(id = %aligned.id(), "snapped trajectory rejected");
        return None;
    }
    Some(ids)
}

/// Aligns the corpus to `seed`, snaps every surviving variant to the state
/// space and assembles the graph. Returns the graph and the snapped corpus
/// trajectories (duplicates removed, first id wins).
pub fn build_graph(corpus: &Corpus, seed: LabColor, space: Arc<StateSpace>) -> Result<(ColorGraph, Vec<Candidate>)> {
    let candidates = snapped_candidates(corpus, seed, &space);
    if candidates.is_empty() {
        return Err(Error::SeedUnsupported { seed, suggestions: suggest_seeds(corpus, seed, &space, 3) });
    }
    let paths: Vec<Vec<StateId>> = candidates.iter().map(|c| c.trajectory.ids.clone()).collect();
    let graph = ColorGraph::from_paths(space, &paths, seed);
    Ok((graph, candidates))
}

fn snapped_candidates(corpus: &Corpus, seed: LabColor, space: &Arc<StateSpace>) -> Vec<Candidate> {
    let seed_state = space.nearest(seed);
    let mut seen: HashSet<Vec<StateId>> = HashSet::new();
    let mut out = Vec::new();
    for cm in &corpus.colormaps {
        for aligned in align_colormap(cm, seed) {
            let Some(ids) = snap(space, &aligned, seed_state) else { continue };
            if !seen.insert(ids.clone()) {
                continue;
            }
            out.push(Candidate {
                id: aligned.id(),
                trajectory: Trajectory::from_ids(space, ids, Provenance::CorpusAligned),
            });
        }
    }
    out
}

/// Nearby seeds (same hue family, lower chroma or shifted lightness) for
/// which at least two corpus trajectories survive, nearest first.
pub fn suggest_seeds(corpus: &Corpus, seed: LabColor, space: &Arc<StateSpace>, limit: usize) -> Vec<LabColor> {
    let hue = seed.hue_radians();
    let chroma = seed.chroma();
    let mut probes = Vec::new();
    for factor in [0.85, 0.7, 0.55, 0.4, 0.25, 0.1] {
        for dl in [0.0, 10.0, -10.0, 20.0, -20.0] {
            let l = (seed.l + dl).clamp(15.0, 90.0);
            let c = gamut_clip(LabColor::from_lch(l, chroma * factor, hue));
            probes.push(c);
        }
    }
    probes.sort_by(|x, y| delta_e_2000(seed, *x).total_cmp(&delta_e_2000(seed, *y)));
    let mut out: Vec<LabColor> = Vec::new();
    for p in probes {
        if out.len() >= limit {
            break;
        }
        if out.iter().any(|q| delta_e_2000(*q, p) < 1.0) {
            continue;
        }
        if snapped_candidates(corpus, p, space).len() >= 2 {
            out.push(p);
        }
    }
    out
}
