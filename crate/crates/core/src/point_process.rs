//! Marked vertex configurations seen from a root at the origin.
//!
//! Vertices are stored in location order. Index 0 is the root at location 0;
//! negative indices lie to its left. Marks are i.i.d. Uniform(0, 1) and are
//! keyed on `(seed, index)`, so two windows sampled with the same seed agree
//! on every index they have in common.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{domain, param, Error, Result};
use crate::multiscale::scale_k;
use crate::rng::{uniform, Domain};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PointProcessSpec {
    Poisson { intensity: f64 },
    LatticeBernoulli { retention: f64 },
    DeterministicLattice,
}

impl PointProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PointProcessSpec::Poisson { intensity } => {
                if !(intensity > 0.0 && intensity.is_finite()) {
                    return Err(param(format!("poisson intensity must be positive, got {intensity}")));
                }
            }
            PointProcessSpec::LatticeBernoulli { retention } => {
                if !(retention > 0.0 && retention <= 1.0) {
                    return Err(param(format!("retention probability must lie in (0, 1], got {retention}")));
                }
            }
            PointProcessSpec::DeterministicLattice => {}
        }
        Ok(())
    }

    /// Mean number of points per unit length.
    pub fn intensity(&self) -> f64 {
        match *self {
            PointProcessSpec::Poisson { intensity } => intensity,
            PointProcessSpec::LatticeBernoulli { retention } => retention,
            PointProcessSpec::DeterministicLattice => 1.0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PointProcessSpec::Poisson { .. } => "poisson",
            PointProcessSpec::LatticeBernoulli { .. } => "lattice-bernoulli",
            PointProcessSpec::DeterministicLattice => "deterministic-lattice",
        }
    }

    /// Samples every point in the window `[-half_width, half_width]`.
    pub fn sample_window(&self, half_width: f64, seed: u64) -> Result<MarkedConfiguration> {
        self.validate()?;
        match *self {
            PointProcessSpec::Poisson { intensity } => sample_poisson_palm(intensity, half_width, seed),
            PointProcessSpec::LatticeBernoulli { retention } => {
                lattice(*self, retention, Extent::Window(window_sites(half_width)?), seed)
            }
            PointProcessSpec::DeterministicLattice => {
                lattice(*self, 1.0, Extent::Window(window_sites(half_width)?), seed)
            }
        }
    }

    /// Samples a configuration that contains at least the indices `lo..=hi`.
    pub fn sample_indices(&self, lo: i64, hi: i64, seed: u64) -> Result<MarkedConfiguration> {
        self.validate()?;
        if lo > 0 || hi < 0 {
            return Err(param(format!("index range {lo}..={hi} must contain the root")));
        }
        let left = lo.unsigned_abs();
        let right = hi as u64;
        match *self {
            PointProcessSpec::Poisson { intensity } => {
                let right_pts = poisson_side(intensity, seed, 1, Stop::Count(right));
                let left_pts = poisson_side(intensity, seed, -1, Stop::Count(left));
                let half_width = right_pts
                    .last()
                    .copied()
                    .unwrap_or(0.0)
                    .max(left_pts.last().map(|x| -x).unwrap_or(0.0));
                // Fill the shorter side out to the symmetric window.
                let right_pts = poisson_side(intensity, seed, 1, Stop::Window(half_width));
                let left_pts = poisson_side(intensity, seed, -1, Stop::Window(half_width));
                Ok(assemble(Source::Process(*self), seed, half_width, left_pts, right_pts))
            }
            PointProcessSpec::LatticeBernoulli { retention } => {
                lattice(*self, retention, Extent::Counts(left, right), seed)
            }
            PointProcessSpec::DeterministicLattice => lattice(*self, 1.0, Extent::Counts(left, right), seed),
        }
    }
}

fn window_sites(half_width: f64) -> Result<u64> {
    if !(half_width >= 0.0 && half_width.is_finite()) {
        return Err(param(format!("window half-width must be non-negative, got {half_width}")));
    }
    Ok(half_width.floor() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub index: i64,
    pub location: f64,
    pub mark: f64,
}

/// Where a configuration came from; recorded for serialization and replay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    Process(PointProcessSpec),
    /// `n` i.i.d. uniform points on (-1/2, 1/2), stored scaled by `n`.
    FiniteUniform { n: usize },
}

impl Source {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Source::Process(spec) => spec.kind_name(),
            Source::FiniteUniform { .. } => "finite-uniform",
        }
    }

    fn params(&self) -> Value {
        match *self {
            Source::Process(PointProcessSpec::Poisson { intensity }) => json!({ "intensity": intensity }),
            Source::Process(PointProcessSpec::LatticeBernoulli { retention }) => json!({ "retention": retention }),
            Source::Process(PointProcessSpec::DeterministicLattice) => json!({}),
            Source::FiniteUniform { n } => json!({ "n": n }),
        }
    }

    fn from_parts(kind: &str, params: &Value) -> Result<Self> {
        let number = |key: &str| {
            params
                .get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Format(format!("missing numeric parameter `{key}` for kind `{kind}`")))
        };
        Ok(match kind {
            "poisson" => Source::Process(PointProcessSpec::Poisson { intensity: number("intensity")? }),
            "lattice-bernoulli" => Source::Process(PointProcessSpec::LatticeBernoulli { retention: number("retention")? }),
            "deterministic-lattice" => Source::Process(PointProcessSpec::DeterministicLattice),
            "finite-uniform" => Source::FiniteUniform { n: number("n")? as usize },
            other => return Err(Error::Format(format!("unknown configuration kind `{other}`"))),
        })
    }
}

/// An ordered, immutable set of marked vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedConfiguration {
    source: Source,
    seed: u64,
    half_width: f64,
    first_index: i64,
    vertices: Vec<Vertex>,
    root: Option<usize>,
}

impl MarkedConfiguration {
    /// Builds a configuration from vertices with consecutive indices.
    ///
    /// Locations must be strictly increasing and marks must lie in (0, 1).
    /// Palm sources require index 0 at location 0.
    pub fn from_vertices(source: Source, seed: u64, half_width: f64, vertices: Vec<Vertex>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| param("a configuration needs at least one vertex"))?;
        let first_index = first.index;
        for (pos, v) in vertices.iter().enumerate() {
            if v.index != first_index + pos as i64 {
                return Err(domain(format!("vertex indices must be consecutive, found {} at position {pos}", v.index)));
            }
            if !(v.mark > 0.0 && v.mark < 1.0) {
                return Err(domain(format!("mark {} of vertex {} is outside (0, 1)", v.mark, v.index)));
            }
            if !v.location.is_finite() {
                return Err(domain(format!("vertex {} has a non-finite location", v.index)));
            }
        }
        if let Some(w) = vertices.windows(2).find(|w| w[0].location >= w[1].location) {
            return Err(domain(format!(
                "locations must increase strictly with the index (vertex {} at {} vs {})",
                w[1].index, w[1].location, w[0].location
            )));
        }
        let root = match source {
            Source::Process(_) => {
                if first_index > 0 || first_index + (vertices.len() as i64) <= 0 {
                    return Err(domain("palm configuration lacks a root at index 0"));
                }
                let pos = (-first_index) as usize;
                if vertices[pos].location != 0.0 {
                    return Err(domain("the root must sit at location 0"));
                }
                Some(pos)
            }
            Source::FiniteUniform { .. } => None,
        };
        Ok(Self {
            source,
            seed,
            half_width,
            first_index,
            vertices,
            root,
        })
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Position of the root in [`vertices`](Self::vertices), if there is one.
    pub fn root_position(&self) -> Option<usize> {
        self.root
    }

    pub fn min_index(&self) -> i64 {
        self.first_index
    }

    pub fn max_index(&self) -> i64 {
        self.first_index + self.vertices.len() as i64 - 1
    }

    pub fn position_of(&self, index: i64) -> Result<usize> {
        if index < self.min_index() || index > self.max_index() {
            return Err(Error::Range {
                index,
                min: self.min_index(),
                max: self.max_index(),
            });
        }
        Ok((index - self.first_index) as usize)
    }

    pub fn vertex(&self, index: i64) -> Result<&Vertex> {
        Ok(&self.vertices[self.position_of(index)?])
    }

    /// The sub-configuration on indices `lo..=hi`.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<Self> {
        let a = self.position_of(lo)?;
        let b = self.position_of(hi)?;
        if a > b {
            return Err(param(format!("empty index range {lo}..={hi}")));
        }
        let vertices = self.vertices[a..=b].to_vec();
        let half_width = vertices
            .iter()
            .map(|v| v.location.abs())
            .fold(0.0, f64::max);
        Self::from_vertices(self.source, self.seed, half_width, vertices)
    }

    pub fn to_json_value(&self) -> Value {
        let vertices: Vec<Value> = self
            .vertices
            .iter()
            .map(|v| json!([v.index, format!("{:?}", v.location), format!("{:?}", v.mark)]))
            .collect();
        json!({
            "kind": self.source.kind_name(),
            "params": self.source.params(),
            "seed": self.seed,
            "L": self.half_width,
            "vertices": vertices,
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)?;
        let field = |key: &str| doc.get(key).ok_or_else(|| Error::Format(format!("missing field `{key}`")));
        let kind = field("kind")?
            .as_str()
            .ok_or_else(|| Error::Format("`kind` must be a string".into()))?;
        let source = Source::from_parts(kind, field("params")?)?;
        let seed = field("seed")?
            .as_u64()
            .ok_or_else(|| Error::Format("`seed` must be an unsigned integer".into()))?;
        let half_width = field("L")?
            .as_f64()
            .ok_or_else(|| Error::Format("`L` must be a number".into()))?;
        let rows = field("vertices")?
            .as_array()
            .ok_or_else(|| Error::Format("`vertices` must be an array".into()))?;
        let mut vertices = Vec::with_capacity(rows.len());
        for row in rows {
            let parse = |v: Option<&Value>| -> Result<f64> {
                v.and_then(Value::as_str)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Format(format!("bad vertex row {row}")))
            };
            let index = row
                .get(0)
                .and_then(Value::as_i64)
                .ok_or_else(|| Error::Format(format!("bad vertex row {row}")))?;
            vertices.push(Vertex {
                index,
                location: parse(row.get(1))?,
                mark: parse(row.get(2))?,
            });
        }
        Self::from_vertices(source, seed, half_width, vertices)
    }
}

#[inline]
pub(crate) fn mark_for(seed: u64, index: i64) -> f64 {
    uniform(seed, Domain::Mark, index as u64, 0)
}

enum Stop {
    Count(u64),
    Window(f64),
}

/// Locations on one side of the root, ordered by distance from it.
fn poisson_side(intensity: f64, seed: u64, dir: i64, stop: Stop) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = 0.0f64;
    let mut j: i64 = dir;
    loop {
        if let Stop::Count(c) = stop {
            if out.len() as u64 >= c {
                break;
            }
        }
        let gap = -uniform(seed, Domain::Gap, j as u64, 0).ln() / intensity;
        x += dir as f64 * gap;
        if let Stop::Window(l) = stop {
            if x.abs() > l {
                break;
            }
        }
        out.push(x);
        j += dir;
    }
    out
}

fn assemble(source: Source, seed: u64, half_width: f64, left: Vec<f64>, right: Vec<f64>) -> MarkedConfiguration {
    let first_index = -(left.len() as i64);
    let mut vertices = Vec::with_capacity(left.len() + right.len() + 1);
    let locations = left.iter().rev().copied().chain(std::iter::once(0.0)).chain(right);
    for (pos, location) in locations.enumerate() {
        let index = first_index + pos as i64;
        vertices.push(Vertex {
            index,
            location,
            mark: mark_for(seed, index),
        });
    }
    MarkedConfiguration {
        source,
        seed,
        half_width,
        first_index,
        root: Some(left.len()),
        vertices,
    }
}

/// Homogeneous Poisson points on `[-half_width, half_width]` plus a root at 0.
pub fn sample_poisson_palm(intensity: f64, half_width: f64, seed: u64) -> Result<MarkedConfiguration> {
    let spec = PointProcessSpec::Poisson { intensity };
    spec.validate()?;
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(param(format!("window half-width must be positive, got {half_width}")));
    }
    let right = poisson_side(intensity, seed, 1, Stop::Window(half_width));
    let left = poisson_side(intensity, seed, -1, Stop::Window(half_width));
    Ok(assemble(Source::Process(spec), seed, half_width, left, right))
}

enum Extent {
    /// Keep scanning until this many sites survive on each side.
    Counts(u64, u64),
    Window(u64),
}

fn lattice_side(retention: f64, seed: u64, dir: i64, stop: &Stop) -> Vec<f64> {
    let mut out = Vec::new();
    let mut site: i64 = 0;
    loop {
        match *stop {
            Stop::Count(c) if out.len() as u64 >= c => break,
            Stop::Window(l) if (site + dir).unsigned_abs() as f64 > l => break,
            _ => {}
        }
        site += dir;
        if retention >= 1.0 || uniform(seed, Domain::Site, site as u64, 0) <= retention {
            out.push(site as f64);
        }
    }
    out
}

fn lattice(spec: PointProcessSpec, retention: f64, extent: Extent, seed: u64) -> Result<MarkedConfiguration> {
    let sites = match extent {
        Extent::Counts(left, right) => {
            let r = lattice_side(retention, seed, 1, &Stop::Count(right));
            let l = lattice_side(retention, seed, -1, &Stop::Count(left));
            let reach = r.last().copied().unwrap_or(0.0).max(l.last().map(|x| -x).unwrap_or(0.0));
            reach as u64
        }
        Extent::Window(m) => m,
    };
    // Every site of Z in [-M, M] is examined so the window is symmetric.
    let right = lattice_side(retention, seed, 1, &Stop::Window(sites as f64));
    let left = lattice_side(retention, seed, -1, &Stop::Window(sites as f64));
    Ok(assemble(Source::Process(spec), seed, sites as f64, left, right))
}

/// Bernoulli(p) site percolation on Z with the root kept at site 0.
pub fn sample_lattice_bernoulli(retention: f64, count: u64, seed: u64) -> Result<MarkedConfiguration> {
    let spec = PointProcessSpec::LatticeBernoulli { retention };
    spec.validate()?;
    if count == 0 {
        return Err(param("count must be at least 1"));
    }
    lattice(spec, retention, Extent::Counts(count, count), seed)
}

/// The integers `-count..=count` with random marks.
pub fn sample_deterministic_lattice(count: u64, seed: u64) -> Result<MarkedConfiguration> {
    if count == 0 {
        return Err(param("count must be at least 1"));
    }
    lattice(PointProcessSpec::DeterministicLattice, 1.0, Extent::Window(count), seed)
}

/// For each `n = 1..=n_max`: `|X_{-K_n} - X_{K_n - 1}| <= a1 * K_n`.
pub fn check_evenly_spaced_a(cfg: &MarkedConfiguration, a1: f64, base: u64, n_max: u32) -> Result<Vec<bool>> {
    if !(a1 > 0.0) {
        return Err(param("a1 must be positive"));
    }
    (1..=n_max)
        .map(|n| {
            let k_n = scale_k(base, n)?;
            let k = i64::try_from(k_n).map_err(|_| param("scale K_n overflows"))?;
            let left = cfg.vertex(-k)?.location;
            let right = cfg.vertex(k - 1)?.location;
            Ok((left - right).abs() <= a1 * k_n as f64)
        })
        .collect()
}

/// For each `n = 1..=n_max`: `|X_{-2^{n+1}} - X_{2^n}| >= a2 * 2^n`.
pub fn check_evenly_spaced_b(cfg: &MarkedConfiguration, a2: f64, n_max: u32) -> Result<Vec<bool>> {
    if !(a2 > 0.0) {
        return Err(param("a2 must be positive"));
    }
    if n_max > 60 {
        return Err(param("n_max must be at most 60"));
    }
    (1..=n_max)
        .map(|n| {
            let p = 1i64 << n;
            let left = cfg.vertex(-2 * p)?.location;
            let right = cfg.vertex(p)?.location;
            Ok((left - right).abs() >= a2 * p as f64)
        })
        .collect()
}
