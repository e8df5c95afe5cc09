//! Connected components, degree statistics and the percolation proxy.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::kernels::ModelParams;
use crate::point_process::PointProcessSpec;
use crate::rng::derive_seed;
use crate::sampler::{sample_edges, GraphSample, SamplerKind};
use crate::stats::{hill_estimator, Proportion};

/// Fraction of the half-width beyond which a vertex counts as "at the boundary".
pub const BOUNDARY_FRACTION: f64 = 0.95;

/// Disjoint-set forest with union by size and path compression. The
/// smallest element of each set is tracked so representatives are stable.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    least: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize);
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            least: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Returns true when the two sets were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.least[ra] = self.least[ra].min(self.least[rb]);
        true
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }

    /// Smallest element in the set containing `x`.
    pub fn representative(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.least[r] as usize
    }

    /// Sizes of all sets, largest first.
    pub fn sizes(&mut self) -> Vec<usize> {
        let mut out = Vec::new();
        for x in 0..self.len() {
            if self.find(x) == x {
                out.push(self.size[x] as usize);
            }
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Component sizes, largest first.
    pub component_sizes: Vec<usize>,
    pub largest: usize,
    pub largest_fraction: f64,
    /// Size of the component of index 0, when the configuration has a root.
    pub root_component_size: Option<usize>,
    pub root_reaches_boundary: bool,
}

impl ClusterReport {
    /// Secondary proxy: the root component has at least `threshold` vertices.
    pub fn root_component_at_least(&self, threshold: usize) -> bool {
        self.root_component_size.is_some_and(|s| s >= threshold)
    }
}

pub fn union_find(g: &GraphSample) -> UnionFind {
    let mut uf = UnionFind::new(g.n_vertices());
    for (a, b) in g.edge_positions() {
        uf.union(a, b);
    }
    uf
}

/// For each vertex position, the position of the smallest vertex in its component.
pub fn component_labels(g: &GraphSample) -> Vec<usize> {
    let mut uf = union_find(g);
    (0..g.n_vertices()).map(|x| uf.representative(x)).collect()
}

pub fn components(g: &GraphSample) -> ClusterReport {
    let mut uf = union_find(g);
    let sizes = uf.sizes();
    let n = g.n_vertices();
    let cfg = g.config();
    let (root_component_size, root_reaches_boundary) = match cfg.root_position() {
        Some(r) => {
            let root = uf.find(r);
            let edge = BOUNDARY_FRACTION * cfg.half_width();
            let reaches = cfg
                .vertices()
                .iter()
                .enumerate()
                .any(|(p, v)| v.location.abs() >= edge && uf.find(p) == root);
            (Some(uf.set_size(r)), reaches)
        }
        None => (None, false),
    };
    let largest = sizes.first().copied().unwrap_or(0);
    ClusterReport {
        largest,
        largest_fraction: if n == 0 { 0.0 } else { largest as f64 / n as f64 },
        component_sizes: sizes,
        root_component_size,
        root_reaches_boundary,
    }
}

/// Replica estimate of the probability that the root reaches the boundary.
pub fn theta_estimate(
    m: &ModelParams,
    pp: &PointProcessSpec,
    half_width: f64,
    replicas: usize,
    master_seed: u64,
) -> Result<Proportion> {
    theta_estimate_with(m, pp, half_width, replicas, master_seed, SamplerKind::Layered)
}

pub fn theta_estimate_with(
    m: &ModelParams,
    pp: &PointProcessSpec,
    half_width: f64,
    replicas: usize,
    master_seed: u64,
    sampler: SamplerKind,
) -> Result<Proportion> {
    m.validate()?;
    pp.validate()?;
    if replicas == 0 {
        return Err(param("replicas must be at least 1"));
    }
    let hits: Vec<bool> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(master_seed, 0, r);
            let cfg = Arc::new(pp.sample_window(half_width, seed)?);
            let g = sample_edges(cfg, m, seed, sampler)?;
            Ok(components(&g).root_reaches_boundary)
        })
        .collect::<Result<_>>()?;
    Ok(Proportion::new(hits.iter().filter(|&&h| h).count() as u64, replicas as u64))
}

/// Below this many tail points the Hill estimate is flagged unreliable.
pub const MIN_TAIL_POINTS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub histogram: BTreeMap<usize, usize>,
    pub mean_degree: f64,
    /// Hill estimate of the index of `P(D > k)`; NaN when undefined.
    pub tail_index_estimate: f64,
    pub tail_points: usize,
    pub reliable: bool,
    pub tau_target: Option<f64>,
}

pub fn degree_report(g: &GraphSample, tail_fraction: f64) -> Result<DegreeReport> {
    let deg = g.degrees();
    let mut report = report_from_degrees(&deg, tail_fraction, g)?;
    // Over the whole sample the identity is exact.
    report.mean_degree = 2.0 * g.edges().len() as f64 / deg.len().max(1) as f64;
    Ok(report)
}

/// As [`degree_report`] but only over vertices with `|x| <= radius`, which
/// removes the deficit of vertices near the window edge.
pub fn degree_report_within(g: &GraphSample, tail_fraction: f64, radius: f64) -> Result<DegreeReport> {
    let deg = g.degrees();
    let inner: Vec<usize> = g
        .config()
        .vertices()
        .iter()
        .zip(&deg)
        .filter(|(v, _)| v.location.abs() <= radius)
        .map(|(_, &d)| d)
        .collect();
    if inner.is_empty() {
        return Err(param(format!("no vertices within radius {radius}")));
    }
    report_from_degrees(&inner, tail_fraction, g)
}

fn report_from_degrees(deg: &[usize], tail_fraction: f64, g: &GraphSample) -> Result<DegreeReport> {
    if !(tail_fraction > 0.0 && tail_fraction <= 0.2) {
        return Err(param(format!("tail fraction must lie in (0, 0.2], got {tail_fraction}")));
    }
    let mut histogram = BTreeMap::new();
    for &d in deg {
        *histogram.entry(d).or_insert(0) += 1;
    }
    let k = (tail_fraction * deg.len() as f64).floor() as usize;
    let values: Vec<f64> = deg.iter().map(|&d| d as f64).collect();
    let hill = hill_estimator(&values, k);
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    Ok(DegreeReport {
        histogram,
        mean_degree: mean,
        tail_index_estimate: hill.unwrap_or(f64::NAN),
        tail_points: k,
        reliable: hill.is_some_and(f64::is_finite) && k >= MIN_TAIL_POINTS,
        tau_target: g.params().kernel.tau(),
    })
}
