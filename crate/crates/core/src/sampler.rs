//! Edge sampling over a marked configuration.
//!
//! The naive sampler compares one keyed uniform per pair with the connection
//! probability. The layered sampler produces the same distribution in
//! expected near-linear time: marks are bucketed into dyadic layers
//! `(2^{-a-1}, 2^{-a}]`, and for every vertex and every layer the candidates
//! to its right are visited with geometric skips under the envelope
//! `rho(g(lower_a, lower_b) d / beta)`, then thinned by `p / envelope`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{domain, param, Error, Result};
use crate::kernels::ModelParams;
use crate::point_process::{MarkedConfiguration, Source, Vertex};
use crate::rng::{uniform, CounterStream, Domain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Naive,
    Layered,
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Naive => "naive",
            SamplerKind::Layered => "layered",
        }
    }
}

/// Which pairs a sample was drawn over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeScope {
    All,
    /// Only pairs with one endpoint left of the root and one at or right of it.
    CrossingOrigin,
}

#[derive(Clone, Debug)]
pub struct GraphSample {
    config: Arc<MarkedConfiguration>,
    params: ModelParams,
    seed: u64,
    sampler: SamplerKind,
    scope: EdgeScope,
    edges: Vec<(i64, i64)>,
}

impl GraphSample {
    /// Wraps an explicit edge list; pairs are normalised and sorted.
    pub fn from_edges(
        config: Arc<MarkedConfiguration>,
        params: ModelParams,
        seed: u64,
        sampler: SamplerKind,
        edges: impl IntoIterator<Item = (i64, i64)>,
    ) -> Result<Self> {
        let mut list = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(domain(format!("self-loop at vertex {a}")));
            }
            config.position_of(a)?;
            config.position_of(b)?;
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self {
            config,
            params,
            seed,
            sampler,
            scope: EdgeScope::All,
            edges: list,
        })
    }

    pub fn config(&self) -> &MarkedConfiguration {
        &self.config
    }

    pub fn config_arc(&self) -> &Arc<MarkedConfiguration> {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    pub fn scope(&self) -> EdgeScope {
        self.scope
    }

    /// Sorted pairs `(i, j)` of vertex indices with `i < j`.
    pub fn edges(&self) -> &[(i64, i64)] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.config.len()
    }

    /// Edges as positions into the configuration's vertex list.
    pub fn edge_positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let base = self.config.min_index();
        self.edges
            .iter()
            .map(move |&(a, b)| ((a - base) as usize, (b - base) as usize))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.config.len()];
        for (a, b) in self.edge_positions() {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn contains_edge(&self, a: i64, b: i64) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "params": self.params,
            "seed": self.seed,
            "sampler": self.sampler,
            "n_vertices": self.config.len(),
            "edges": self.edges.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    /// Reads a sample document written by [`to_json`](Self::to_json) back
    /// onto the configuration it was drawn over.
    pub fn from_json(config: Arc<MarkedConfiguration>, text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            params: ModelParams,
            seed: u64,
            sampler: SamplerKind,
            n_vertices: usize,
            edges: Vec<(i64, i64)>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        if doc.n_vertices != config.len() {
            return Err(Error::Format(format!(
                "sample has {} vertices but the configuration has {}",
                doc.n_vertices,
                config.len()
            )));
        }
        if doc.edges.iter().any(|&(a, b)| a >= b) {
            return Err(Error::Format("edges must be listed as [i, j] with i < j".into()));
        }
        Self::from_edges(config, doc.params, doc.seed, doc.sampler, doc.edges)
    }
}

/// The edge mark `U_{i,j}`: symmetric, deterministic, Uniform(0, 1).
pub fn pair_uniform(seed: u64, i: i64, j: i64) -> Result<f64> {
    if i == j {
        return Err(domain(format!("pair uniform requested for identical indices {i}")));
    }
    Ok(pair_uniform_unchecked(seed, i, j))
}

#[inline]
fn pair_uniform_unchecked(seed: u64, i: i64, j: i64) -> f64 {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    uniform(seed, Domain::Pair, lo as u64, hi as u64)
}

/// Examines all pairs; edge iff `U_{i,j} <= p_{i,j}`.
pub fn sample_edges_naive(cfg: Arc<MarkedConfiguration>, m: &ModelParams, seed: u64) -> Result<GraphSample> {
    m.validate()?;
    let vs = cfg.vertices();
    let mut edges = Vec::new();
    for (p, a) in vs.iter().enumerate() {
        for b in &vs[p + 1..] {
            let prob = m.probability(a.mark, b.mark, b.location - a.location);
            if pair_uniform_unchecked(seed, a.index, b.index) <= prob {
                edges.push((a.index, b.index));
            }
        }
    }
    Ok(GraphSample {
        config: cfg,
        params: *m,
        seed,
        sampler: SamplerKind::Naive,
        scope: EdgeScope::All,
        edges,
    })
}

/// Layer count; the last layer collects every mark below `2^{-(LAYERS-1)}`.
const LAYERS: usize = 64;
/// Work truncation: stop once the envelope mass left is below this.
const NEGLIGIBLE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53

#[inline]
fn layer_of(mark: f64) -> usize {
    let a = (-mark.log2()).floor();
    let mut a = if a >= (LAYERS - 1) as f64 {
        LAYERS - 1
    } else if a <= 0.0 {
        0
    } else {
        a as usize
    };
    // Guard against log2 rounding so the mark is always above the lower end.
    while a < LAYERS - 1 && mark <= layer_lower(a) {
        a += 1;
    }
    a
}

#[inline]
fn layer_lower(a: usize) -> f64 {
    if a == LAYERS - 1 {
        0.0
    } else {
        (-(a as f64) - 1.0).exp2()
    }
}

struct Layers {
    /// Vertex positions in each layer, in location order.
    members: Vec<Vec<usize>>,
    of: Vec<usize>,
}

impl Layers {
    fn build(vs: &[Vertex]) -> Self {
        let mut members = vec![Vec::new(); LAYERS];
        let mut of = Vec::with_capacity(vs.len());
        for (p, v) in vs.iter().enumerate() {
            let a = layer_of(v.mark);
            members[a].push(p);
            of.push(a);
        }
        Self { members, of }
    }
}

/// Visits candidates `members[start..end]` of one layer for the vertex at
/// position `p`, pushing accepted pairs.
#[allow(clippy::too_many_arguments)]
fn walk_layer(
    vs: &[Vertex],
    m: &ModelParams,
    envelope_g: f64,
    p: usize,
    cands: &[usize],
    rng: &mut CounterStream,
    edges: &mut Vec<(i64, i64)>,
) {
    let a = &vs[p];
    let scale = envelope_g / m.beta;
    let mut k = 0usize;
    while k < cands.len() {
        let d = (vs[cands[k]].location - a.location).abs();
        let q = m.profile.eval_unchecked(scale * d);
        if q <= 0.0 || q * ((cands.len() - k) as f64) < NEGLIGIBLE {
            break;
        }
        if q < 1.0 {
            // Failures before the next proposal under a constant bound q.
            let skip = (rng.next_unit().ln() / (-q).ln_1p()).floor();
            if skip >= (cands.len() - k) as f64 {
                break;
            }
            k += skip as usize;
        }
        let b = &vs[cands[k]];
        let prob = m.probability(a.mark, b.mark, (b.location - a.location).abs());
        if rng.next_unit() * q <= prob {
            edges.push((a.index.min(b.index), a.index.max(b.index)));
        }
        k += 1;
    }
}

fn layered_edges(cfg: &MarkedConfiguration, m: &ModelParams, seed: u64) -> Vec<(i64, i64)> {
    let vs = cfg.vertices();
    let layers = Layers::build(vs);
    let envelope = EnvelopeTable::new(m);
    let mut edges = Vec::new();
    for p in 0..vs.len() {
        let a = layers.of[p];
        for (b, members) in layers.members.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let start = members.partition_point(|&q| q <= p);
            if start < members.len() {
                let mut rng = CounterStream::new(seed, Domain::Layered, vs[p].index as u64, b as u64);
                walk_layer(vs, m, envelope.get(a, b), p, &members[start..], &mut rng, &mut edges);
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// `g(lower_a, lower_b)` for every pair of layers.
struct EnvelopeTable(Vec<f64>);

impl EnvelopeTable {
    fn new(m: &ModelParams) -> Self {
        let mut t = vec![0.0; LAYERS * LAYERS];
        for a in 0..LAYERS {
            for b in 0..LAYERS {
                t[a * LAYERS + b] = m.kernel.eval_unchecked(layer_lower(a), layer_lower(b));
            }
        }
        Self(t)
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> f64 {
        self.0[a * LAYERS + b]
    }
}

/// Distance block of `|x|`: block 0 is `[0, 1)`, block `i` is `[2^{i-1}, 2^i)`.
#[inline]
fn distance_block(x: f64) -> usize {
    let x = x.abs();
    if x < 1.0 {
        0
    } else {
        (x.log2().floor() as usize + 1).min(1100)
    }
}

#[inline]
fn block_lower(i: usize) -> f64 {
    if i == 0 {
        0.0
    } else {
        ((i - 1) as f64).exp2()
    }
}

/// Vertices on one side of the root grouped by (mark layer, distance block).
fn side_groups(vs: &[Vertex], range: std::ops::Range<usize>) -> Vec<((usize, usize), Vec<usize>)> {
    let mut groups: std::collections::BTreeMap<(usize, usize), Vec<usize>> = std::collections::BTreeMap::new();
    for p in range {
        let v = &vs[p];
        groups
            .entry((layer_of(v.mark), distance_block(v.location)))
            .or_default()
            .push(p);
    }
    groups.into_iter().collect()
}

/// Edges joining a vertex left of the root to one at or right of it.
///
/// Pairs are grouped into rectangles (left group × right group), where a
/// group shares a mark layer and a dyadic distance block. Every pair of a
/// rectangle is at distance at least the sum of the block lower ends, which
/// gives one envelope per rectangle; proposals are drawn over the pair index
/// with geometric skips and thinned to the exact probability.
fn crossing_edges(cfg: &MarkedConfiguration, m: &ModelParams, seed: u64, root: usize) -> Vec<(i64, i64)> {
    let vs = cfg.vertices();
    let envelope = EnvelopeTable::new(m);
    let left = side_groups(vs, 0..root);
    let right = side_groups(vs, root..vs.len());
    let mut edges = Vec::new();
    for ((la, li), ls) in &left {
        for ((rb, rj), rs) in &right {
            let dmin = block_lower(*li) + block_lower(*rj);
            let q = m.profile.eval_unchecked(envelope.get(*la, *rb) * dmin / m.beta);
            let total = ls.len() * rs.len();
            if q <= 0.0 || q * (total as f64) < NEGLIGIBLE {
                continue;
            }
            let key_a = (*la * LAYERS + *rb) as u64;
            let key_b = ((*li as u64) << 32) | *rj as u64;
            let mut rng = CounterStream::new(seed, Domain::Crossing, key_a, key_b);
            let log_fail = (-q).ln_1p();
            let mut k = 0usize;
            loop {
                if q < 1.0 {
                    let skip = (rng.next_unit().ln() / log_fail).floor();
                    if skip >= (total - k) as f64 {
                        break;
                    }
                    k += skip as usize;
                }
                if k >= total {
                    break;
                }
                let (x, y) = (&vs[ls[k / rs.len()]], &vs[rs[k % rs.len()]]);
                let prob = m.probability(x.mark, y.mark, y.location - x.location);
                if rng.next_unit() * q <= prob {
                    edges.push((x.index, y.index));
                }
                k += 1;
            }
        }
    }
    edges.sort_unstable();
    edges
}

pub fn sample_edges_layered(cfg: Arc<MarkedConfiguration>, m: &ModelParams, seed: u64) -> Result<GraphSample> {
    m.validate()?;
    let edges = layered_edges(&cfg, m, seed);
    Ok(GraphSample {
        config: cfg,
        params: *m,
        seed,
        sampler: SamplerKind::Layered,
        scope: EdgeScope::All,
        edges,
    })
}

/// Samples only the pairs with one endpoint left of the root and the other
/// at or right of it. Same per-pair law as the other samplers.
pub fn sample_crossing_edges(cfg: Arc<MarkedConfiguration>, m: &ModelParams, seed: u64) -> Result<GraphSample> {
    m.validate()?;
    let root = cfg
        .root_position()
        .ok_or_else(|| param("crossing edges need a configuration with a root"))?;
    let edges = crossing_edges(&cfg, m, seed, root);
    Ok(GraphSample {
        config: cfg,
        params: *m,
        seed,
        sampler: SamplerKind::Layered,
        scope: EdgeScope::CrossingOrigin,
        edges,
    })
}

pub fn sample_edges(cfg: Arc<MarkedConfiguration>, m: &ModelParams, seed: u64, sampler: SamplerKind) -> Result<GraphSample> {
    match sampler {
        SamplerKind::Naive => sample_edges_naive(cfg, m, seed),
        SamplerKind::Layered => sample_edges_layered(cfg, m, seed),
    }
}

/// `n` uniform vertices on (-1/2, 1/2), stored scaled by `n` so that the
/// pairwise probability `rho(g n |x - y| / beta)` is the usual one.
pub fn finite_configuration(n: usize, seed: u64) -> Result<MarkedConfiguration> {
    if n == 0 {
        return Err(param("a finite graph needs at least one vertex"));
    }
    let mut pts: Vec<(f64, f64)> = (0..n as u64)
        .map(|i| {
            let x = uniform(seed, Domain::FiniteLocation, i, 0) - 0.5;
            let t = uniform(seed, Domain::FiniteMark, i, 0);
            (x * n as f64, t)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() != n {
        return Err(Error::Numeric {
            message: "coincident uniform locations".into(),
            achieved: 0.0,
        });
    }
    let vertices = pts
        .into_iter()
        .enumerate()
        .map(|(i, (location, mark))| Vertex {
            index: i as i64,
            location,
            mark,
        })
        .collect();
    MarkedConfiguration::from_vertices(Source::FiniteUniform { n }, seed, n as f64 / 2.0, vertices)
}

pub fn sample_finite_graph(n: usize, m: &ModelParams, seed: u64, sampler: SamplerKind) -> Result<GraphSample> {
    let cfg = Arc::new(finite_configuration(n, seed)?);
    sample_edges(cfg, m, seed, sampler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelSpec, KernelVariant, ProfileSpec, ProfileVariant};
    use crate::point_process::{sample_deterministic_lattice, sample_poisson_palm};

    fn model(variant: KernelVariant, gamma: f64, delta: f64, beta: f64) -> ModelParams {
        ModelParams::new(KernelSpec::new(variant, gamma).unwrap(), ProfileSpec::hard(delta), beta).unwrap()
    }

    #[test]
    fn pair_uniform_is_symmetric_and_stable() {
        assert_eq!(pair_uniform(5, 3, 7).unwrap(), pair_uniform(5, 7, 3).unwrap());
        assert_eq!(pair_uniform(5, 3, 7).unwrap(), pair_uniform(5, 3, 7).unwrap());
        assert!(pair_uniform(5, 4, 4).is_err());
    }

    #[test]
    fn tiny_beta_gives_no_edges() {
        let cfg = Arc::new(sample_deterministic_lattice(200, 1).unwrap());
        let m = model(KernelVariant::Min, 0.5, 3.0, 1e-12);
        assert!(sample_edges_naive(cfg.clone(), &m, 9).unwrap().edges().is_empty());
        assert!(sample_edges_layered(cfg, &m, 9).unwrap().edges().is_empty());
    }

    #[test]
    fn single_vertex_finite_graph_has_no_edges() {
        let m = model(KernelVariant::Min, 0.5, 3.0, 10.0);
        for sampler in [SamplerKind::Naive, SamplerKind::Layered] {
            let g = sample_finite_graph(1, &m, 3, sampler).unwrap();
            assert_eq!(g.n_vertices(), 1);
            assert!(g.edges().is_empty());
        }
        assert!(sample_finite_graph(0, &m, 3, SamplerKind::Naive).is_err());
    }

    #[test]
    fn layer_boundaries_are_half_open() {
        assert_eq!(layer_of(1.0 - 1e-16), 0);
        assert_eq!(layer_of(0.5 + 1e-16), 0);
        assert_eq!(layer_of(0.5), 1);
        assert_eq!(layer_of(0.25 + 1e-16), 1);
        assert_eq!(layer_of(0.25), 2);
        for a in 0..LAYERS - 1 {
            let t = layer_lower(a).next_up();
            assert!(t > layer_lower(layer_of(t)));
        }
        assert_eq!(layer_of(1e-300), LAYERS - 1);
    }

    #[test]
    fn sample_json_round_trip() {
        let cfg = Arc::new(sample_poisson_palm(1.0, 30.0, 4).unwrap());
        let m = model(KernelVariant::Product, 0.3, 2.5, 1.5);
        let g = sample_edges_naive(cfg.clone(), &m, 8).unwrap();
        let back = GraphSample::from_json(cfg, &g.to_json()).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.params(), g.params());
    }

    #[test]
    fn edge_lists_are_sorted_without_loops() {
        let cfg = Arc::new(sample_poisson_palm(1.0, 100.0, 2).unwrap());
        let m = ModelParams::new(
            KernelSpec::new(KernelVariant::PreferentialAttachment, 0.4).unwrap(),
            ProfileSpec::new(ProfileVariant::ExponentialPolynomial, 2.5, None).unwrap(),
            3.0,
        )
        .unwrap();
        for g in [
            sample_edges_naive(cfg.clone(), &m, 1).unwrap(),
            sample_edges_layered(cfg.clone(), &m, 1).unwrap(),
        ] {
            assert!(g.edges().windows(2).all(|w| w[0] < w[1]));
            assert!(g.edges().iter().all(|&(a, b)| a < b));
        }
    }
}
