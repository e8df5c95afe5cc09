//! Empirical measurements of the multiscale objects: scale schedules,
//! crossings of the origin, overlapping blocks and their goodness, and the
//! two notions of mark regularity.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clusters::UnionFind;
use crate::error::{domain, param, Result};
use crate::kernels::ModelParams;
use crate::point_process::{MarkedConfiguration, PointProcessSpec};
use crate::rng::derive_seed;
use crate::sampler::{sample_crossing_edges, sample_edges, GraphSample, SamplerKind};
use crate::stats::{fit_binomial_log_link, Proportion};

/// Largest crossing stage accepted by [`crossing_sweep`].
pub const MAX_STAGE: u32 = 22;

/// `K_n = (n!)³ Kⁿ`, with `K_0 = 1`.
pub fn scale_k(base: u64, n: u32) -> Result<u64> {
    let mut k: u64 = 1;
    for j in 1..=n as u64 {
        k = j
            .checked_pow(3)
            .and_then(|c| c.checked_mul(base))
            .and_then(|step| k.checked_mul(step))
            .ok_or_else(|| param(format!("K_{n} overflows 64 bits for K = {base}")))?;
    }
    Ok(k)
}

/// `C_n = n³ K`.
pub fn scale_c(base: u64, n: u32) -> Result<u64> {
    (n as u64)
        .checked_pow(3)
        .and_then(|c| c.checked_mul(base))
        .ok_or_else(|| param(format!("C_{n} overflows 64 bits")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub base: u64,
    pub a1: f64,
    pub a2: f64,
    pub mu: f64,
    pub theta: f64,
    pub theta_star: f64,
}

impl Default for ScaleSchedule {
    fn default() -> Self {
        Self {
            base: 4,
            a1: 3.0,
            a2: 1.0,
            mu: 0.25,
            theta: 0.75,
            theta_star: 0.8,
        }
    }
}

impl ScaleSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.base < 1 {
            return Err(param("K must be at least 1"));
        }
        if !(self.a1 > 0.0 && self.a2 > 0.0) {
            return Err(param("spacing constants must be positive"));
        }
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(param(format!("mu must lie in (0, 1/2), got {}", self.mu)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(param(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.theta_star > 0.75 && self.theta_star < 1.0) {
            return Err(param(format!("theta_star must lie in (3/4, 1), got {}", self.theta_star)));
        }
        Ok(())
    }

    pub fn k(&self, n: u32) -> Result<u64> {
        scale_k(self.base, n)
    }

    pub fn c(&self, n: u32) -> Result<u64> {
        scale_c(self.base, n)
    }
}

/// The stage at which a crossing edge is examined, or `None` if both
/// endpoints lie on the same side of the root.
///
/// Stage 1 covers edges between `{-4..-1}` and `{0..3}`. For `k >= 2` an
/// edge counts at stage `k` when it joins `Γ_k^ℓℓ = {-2^{k+1}..-2^k-1}` to
/// `Γ_k^r ∪ Γ_k^rr = {0..2^{k+1}-1}`, or `Γ_k^ℓ = {-2^k..-1}` to
/// `Γ_k^rr = {2^k..2^{k+1}-1}`. Every crossing edge has exactly one stage.
pub fn crossing_stage(a: i64, b: i64) -> Option<u32> {
    let (a, b) = (a.min(b), a.max(b));
    if !(a < 0 && b >= 0) {
        return None;
    }
    let left = a.unsigned_abs();
    // Smallest k with left <= 2^{k+1}, and with b < 2^{k+1}.
    let kl = left.next_power_of_two().trailing_zeros() as i64 - 1;
    let kr = (b as u64 + 1).next_power_of_two().trailing_zeros() as i64 - 1;
    Some(kl.max(kr).max(1) as u32)
}

fn check_stage_window(cfg: &MarkedConfiguration, k: u32) -> Result<()> {
    if k == 0 || k > 61 {
        return Err(param(format!("stage must lie in 1..=61, got {k}")));
    }
    let reach = 1i64 << (k + 1);
    cfg.position_of(-reach)?;
    cfg.position_of(reach - 1)?;
    Ok(())
}

/// `χ(k)`.
pub fn crossing_stage_indicator(g: &GraphSample, k: u32) -> Result<bool> {
    check_stage_window(g.config(), k)?;
    Ok(g.edges().iter().any(|&(a, b)| crossing_stage(a, b) == Some(k)))
}

/// `χ(1), …, χ(k_max)` in one pass over the edges.
pub fn crossing_stages(g: &GraphSample, k_max: u32) -> Result<Vec<bool>> {
    check_stage_window(g.config(), k_max)?;
    let mut chi = vec![false; k_max as usize];
    for &(a, b) in g.edges() {
        if let Some(k) = crossing_stage(a, b) {
            if k <= k_max {
                chi[k as usize - 1] = true;
            }
        }
    }
    Ok(chi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub k_max: u32,
    pub replicas: usize,
    /// `stages[k-1]` summarises `χ(k)` across replicas.
    pub stages: Vec<Proportion>,
    /// Replicas in which no stage up to `k_max` saw a crossing.
    pub no_crossing: Proportion,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRate {
    pub k_lo: u32,
    pub k_hi: u32,
    /// Fitted `-log2` slope of `P{χ(k) = 1}` in `k`.
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CrossingReport {
    pub fn frequencies(&self) -> Vec<f64> {
        self.stages.iter().map(|p| p.estimate).collect()
    }

    /// Binomial log-link fit of the stage probabilities over `k_lo..=k_hi`.
    pub fn decay_rate(&self, k_lo: u32, k_hi: u32) -> Result<DecayRate> {
        if !(1 <= k_lo && k_lo < k_hi && k_hi <= self.k_max) {
            return Err(param(format!("stage range {k_lo}..={k_hi} is not inside 1..={}", self.k_max)));
        }
        let data: Vec<(f64, u64, u64)> = (k_lo..=k_hi)
            .map(|k| {
                let p = &self.stages[k as usize - 1];
                (k as f64, p.successes, p.trials)
            })
            .collect();
        let fit = fit_binomial_log_link(&data).ok_or_else(|| crate::error::Error::Numeric {
            message: "decay fit did not converge".into(),
            achieved: f64::NAN,
        })?;
        let (rate, ci_low, ci_high) = fit.decay_rate_log2();
        Ok(DecayRate {
            k_lo,
            k_hi,
            rate,
            ci_low,
            ci_high,
        })
    }
}

/// Per-replica `χ(1..=k_max)`, drawn with the crossing-only sampler.
pub fn crossing_replicas(
    m: &ModelParams,
    pp: &PointProcessSpec,
    k_max: u32,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    m.validate()?;
    pp.validate()?;
    if k_max == 0 || k_max > MAX_STAGE {
        return Err(param(format!("k_max must lie in 1..={MAX_STAGE}, got {k_max}")));
    }
    if replicas == 0 {
        return Err(param("replicas must be at least 1"));
    }
    let reach = 1i64 << (k_max + 1);
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, 0, r);
            let cfg = Arc::new(pp.sample_indices(-reach, reach - 1, s)?);
            let g = sample_crossing_edges(cfg, m, s)?;
            crossing_stages(&g, k_max)
        })
        .collect()
}

pub fn crossing_sweep(
    m: &ModelParams,
    pp: &PointProcessSpec,
    k_max: u32,
    replicas: usize,
    seed: u64,
) -> Result<CrossingReport> {
    let chi = crossing_replicas(m, pp, k_max, replicas, seed)?;
    Ok(summarise_crossings(&chi, k_max))
}

pub fn summarise_crossings(chi: &[Vec<bool>], k_max: u32) -> CrossingReport {
    let n = chi.len() as u64;
    let stages = (0..k_max as usize)
        .map(|k| Proportion::new(chi.iter().filter(|c| c[k]).count() as u64, n))
        .collect();
    let none = chi.iter().filter(|c| c.iter().all(|x| !x)).count() as u64;
    CrossingReport {
        k_max,
        replicas: chi.len(),
        stages,
        no_crossing: Proportion::new(none, n),
    }
}

/// `B_N^i`: the `2N` consecutive indices `N(i-1) .. N(i+1)-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub i: i64,
    pub first: i64,
    pub last: i64,
}

impl Block {
    pub fn new(n: u64, i: i64) -> Result<Self> {
        let n = i64::try_from(n).map_err(|_| param("block scale too large"))?;
        if n < 1 {
            return Err(param("block scale N must be at least 1"));
        }
        let first = n.checked_mul(i - 1).ok_or_else(|| param("block index overflow"))?;
        let last = n.checked_mul(i + 1).ok_or_else(|| param("block index overflow"))? - 1;
        Ok(Self { i, first, last })
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: i64) -> bool {
        self.first <= index && index <= self.last
    }
}

pub fn block_partition(cfg: &MarkedConfiguration, n: u64, i_range: std::ops::RangeInclusive<i64>) -> Result<Vec<Block>> {
    i_range
        .map(|i| {
            let b = Block::new(n, i)?;
            cfg.position_of(b.first)?;
            cfg.position_of(b.last)?;
            Ok(b)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStat {
    pub block: Block,
    /// Largest component of the subgraph induced on the block.
    pub largest: usize,
    pub is_good: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub scale: u64,
    pub theta: f64,
    pub blocks: Vec<BlockStat>,
    pub bad_fraction: f64,
}

/// Largest component of the subgraph of `g` induced on `block`, with the
/// component's members as indices.
pub fn induced_largest_component(g: &GraphSample, block: &Block) -> (usize, Vec<i64>) {
    let len = block.len();
    let mut uf = UnionFind::new(len);
    let edges = g.edges();
    let start = edges.partition_point(|&(a, _)| a < block.first);
    for &(a, b) in &edges[start..] {
        if a > block.last {
            break;
        }
        if b <= block.last {
            uf.union((a - block.first) as usize, (b - block.first) as usize);
        }
    }
    let mut best = (0usize, usize::MAX);
    for x in 0..len {
        let s = uf.set_size(x);
        let rep = uf.representative(x);
        if s > best.0 || (s == best.0 && rep < best.1) {
            best = (s, rep);
        }
    }
    let members = (0..len)
        .filter(|&x| uf.representative(x) == best.1)
        .map(|x| block.first + x as i64)
        .collect();
    (best.0, members)
}

pub fn block_goodness(
    g: &GraphSample,
    n: u64,
    theta: f64,
    i_range: std::ops::RangeInclusive<i64>,
) -> Result<BlockReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(param(format!("theta must lie in (0, 1), got {theta}")));
    }
    let blocks = block_partition(g.config(), n, i_range)?;
    let need = 2.0 * theta * n as f64;
    let stats: Vec<BlockStat> = blocks
        .iter()
        .map(|b| {
            let (largest, _) = induced_largest_component(g, b);
            BlockStat {
                block: *b,
                largest,
                is_good: largest as f64 >= need,
            }
        })
        .collect();
    let bad = stats.iter().filter(|s| !s.is_good).count();
    Ok(BlockReport {
        scale: n,
        theta,
        bad_fraction: bad as f64 / stats.len().max(1) as f64,
        blocks: stats,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSweep {
    pub scale: u64,
    pub theta: f64,
    pub reports: Vec<BlockReport>,
    /// Fraction of (replica, block) pairs that are bad.
    pub empirical_p_bad: Proportion,
}

/// Goodness of `B_N^i`, `i` in `i_range`, across independent replicas.
#[allow(clippy::too_many_arguments)]
pub fn block_sweep(
    m: &ModelParams,
    pp: &PointProcessSpec,
    n: u64,
    theta: f64,
    i_range: std::ops::RangeInclusive<i64>,
    replicas: usize,
    seed: u64,
    sampler: SamplerKind,
) -> Result<BlockSweep> {
    m.validate()?;
    pp.validate()?;
    if replicas == 0 {
        return Err(param("replicas must be at least 1"));
    }
    let first = Block::new(n, *i_range.start())?.first;
    let last = Block::new(n, *i_range.end())?.last;
    let reports: Vec<BlockReport> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, 0, r);
            let cfg = pp.sample_indices(first.min(0), last.max(0), s)?;
            let cfg = Arc::new(cfg.restrict(first.min(0), last.max(0))?);
            let g = sample_edges(cfg, m, s, sampler)?;
            block_goodness(&g, n, theta, i_range.clone())
        })
        .collect::<Result<_>>()?;
    let total: usize = reports.iter().map(|r| r.blocks.len()).sum();
    let bad: usize = reports
        .iter()
        .map(|r| r.blocks.iter().filter(|b| !b.is_good).count())
        .sum();
    Ok(BlockSweep {
        scale: n,
        theta,
        reports,
        empirical_p_bad: Proportion::new(bad as u64, total as u64),
    })
}

/// Marks of `V_ℓ^n` and `V_r^n`, the leftmost and rightmost
/// `⌊ϑ* K_{n-1}⌋` vertices of `B_{K_n}`.
pub fn boundary_marks(cfg: &MarkedConfiguration, schedule: &ScaleSchedule, n: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    schedule.validate()?;
    if n < 2 {
        return Err(param("boundary sets are defined for n >= 2"));
    }
    let k_n = i64::try_from(schedule.k(n)?).map_err(|_| param("K_n too large"))?;
    let v = (schedule.theta_star * schedule.k(n - 1)? as f64).floor() as i64;
    let left = (-k_n..-k_n + v)
        .map(|j| cfg.vertex(j).map(|x| x.mark))
        .collect::<Result<_>>()?;
    let right = (k_n - v..k_n)
        .map(|j| cfg.vertex(j).map(|x| x.mark))
        .collect::<Result<_>>()?;
    Ok((left, right))
}

/// `N(i) = #{marks <= i/h}` for `i = 1..=h`.
pub fn level_counts(marks: &[f64], h: usize) -> Vec<usize> {
    let mut buckets = vec![0usize; h + 1];
    for &t in marks {
        // Smallest i with t <= i/h.
        let mut i = (t * h as f64).ceil().max(0.0) as usize;
        while i > 0 && t <= (i - 1) as f64 / h as f64 {
            i -= 1;
        }
        while i <= h && t > i as f64 / h as f64 {
            i += 1;
        }
        if i <= h {
            buckets[i] += 1;
        }
    }
    let mut acc = buckets[0];
    (1..=h)
        .map(|i| {
            acc += buckets[i];
            acc
        })
        .collect()
}

/// Lower regularity of a boundary set of `⌊ϑ* K_prev⌋` marks.
pub fn mu_regular_lower(marks: &[f64], mu: f64, theta_star: f64, k_prev: u64) -> Result<bool> {
    if !(mu > 0.0 && mu < 0.5) {
        return Err(param(format!("mu must lie in (0, 1/2), got {mu}")));
    }
    if !(theta_star > 0.0 && theta_star < 1.0) {
        return Err(param(format!("theta_star must lie in (0, 1), got {theta_star}")));
    }
    let v = theta_star * k_prev as f64;
    if marks.len() != v.floor() as usize {
        return Err(domain(format!(
            "expected {} marks, got {}",
            v.floor() as usize,
            marks.len()
        )));
    }
    let h = v.powf(1.0 - mu).floor() as usize;
    if h == 0 {
        return Ok(true);
    }
    let counts = level_counts(marks, h);
    Ok(counts
        .iter()
        .enumerate()
        .all(|(i, &c)| c as f64 >= (i + 1) as f64 * v / (2.0 * h as f64)))
}

/// Upper regularity of a set of `2^k` marks: nothing below `2^{-(1+μ)k}`
/// and `#{marks <= i/h} <= i 2^{k+1}/h` with `h = ⌈2^{(1-μ)k}⌉`.
pub fn mu_regular_upper(marks: &[f64], mu: f64, k: u32) -> Result<bool> {
    if !(mu > 0.0 && mu < 0.5) {
        return Err(param(format!("mu must lie in (0, 1/2), got {mu}")));
    }
    if k > MAX_STAGE {
        return Err(param(format!("k must be at most {MAX_STAGE}")));
    }
    let size = 1usize << k;
    if marks.len() != size {
        return Err(domain(format!("expected {size} marks, got {}", marks.len())));
    }
    let floor = (-(1.0 + mu) * k as f64).exp2();
    if marks.iter().any(|&t| t < floor) {
        return Ok(false);
    }
    let h = ((1.0 - mu) * k as f64).exp2().ceil() as usize;
    let counts = level_counts(marks, h);
    let cap = (1u64 << (k + 1)) as f64 / h as f64;
    Ok(counts.iter().enumerate().all(|(i, &c)| c as f64 <= (i + 1) as f64 * cap))
}

/// Measured sides of `p(K_n, ϑ - 2/C_n) <= p(K_{n-1}, ϑ)/100 + 2 C_n² p(K_{n-1}, ϑ)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionSides {
    pub n: u32,
    pub p_current: Proportion,
    pub p_previous: Proportion,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn recursion_sides(
    m: &ModelParams,
    pp: &PointProcessSpec,
    schedule: &ScaleSchedule,
    n: u32,
    replicas: usize,
    seed: u64,
) -> Result<RecursionSides> {
    schedule.validate()?;
    if !(1..=2).contains(&n) {
        return Err(param("recursion sides are measured for n = 1 or 2 only"));
    }
    let k_n = schedule.k(n)?;
    let k_prev = schedule.k(n - 1)?;
    let c_n = schedule.c(n)? as f64;
    let theta_n = schedule.theta - 2.0 / c_n;
    if !(theta_n > 0.0) {
        return Err(param("theta - 2/C_n must be positive"));
    }
    let current = block_sweep(m, pp, k_n, theta_n, 0..=0, replicas, seed, SamplerKind::Layered)?;
    let previous = block_sweep(
        m,
        pp,
        k_prev,
        schedule.theta,
        0..=0,
        replicas,
        seed ^ 0x5bd1_e995,
        SamplerKind::Layered,
    )?;
    let pp_ = previous.empirical_p_bad.estimate;
    Ok(RecursionSides {
        n,
        p_current: current.empirical_p_bad,
        p_previous: previous.empirical_p_bad,
        lhs: current.empirical_p_bad.estimate,
        rhs: pp_ / 100.0 + 2.0 * c_n * c_n * pp_ * pp_,
    })
}
