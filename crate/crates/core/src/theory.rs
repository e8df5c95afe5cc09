//! Numerical side of the model: the restricted double integral `I(n)`, the
//! effective decay exponent, the closed-form table, the regime classifier,
//! the two summability conditions, the edge marginal and its tail exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::kernels::{KernelSpec, KernelVariant, ProfileSpec, ProfileVariant};
use crate::multiscale::scale_k;
use crate::quadrature::{integrate, Integral};
use crate::rng::{CounterStream, Domain};
use crate::stats::fit_line;

const OUTER_TOL: f64 = 1e-9;
const INNER_TOL: f64 = 1e-11;
const MAX_PIECES: usize = 4000;

/// Smallest mark used when a square reaches down to 0.
const MARK_FLOOR: f64 = 1e-40;

/// Root of an increasing function on `[a, b]` by bisection, if it changes sign.
fn bisect(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Option<f64> {
    let (fa, fb) = (f(a), f(b));
    if !(fa < 0.0 && fb > 0.0) {
        return None;
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `∫∫_{[lo, hi]²} ρ(g(s, t) scale) ds dt`.
///
/// Works in logarithmic coordinates, integrates over `s >= t` and doubles.
/// The kink where `g(s, t) scale = 1` is passed to the integrator as a
/// breakpoint in both directions.
pub fn integrate_square(k: &KernelSpec, p: &ProfileSpec, scale: f64, lo: f64, hi: f64) -> Result<Integral> {
    if !(hi > lo) {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (ulo, uhi) = (lo.ln(), hi.ln());
    let ln_scale = scale.ln();
    let lg = |s: f64, t: f64| k.eval_unchecked(s, t).ln() + ln_scale;

    let mut inner_failure: Option<Error> = None;
    let mut evaluations = 0usize;
    let mut outer_points = vec![ulo];
    for root in [
        bisect(|v| lg(v.exp(), v.exp()), ulo, uhi),
        bisect(|v| lg(hi, v.exp()), ulo, uhi),
    ]
    .into_iter()
    .flatten()
    {
        outer_points.push(root);
    }
    outer_points.push(uhi);
    outer_points.sort_by(f64::total_cmp);

    let outer = integrate(
        |v| {
            let t = v.exp();
            let mut points = vec![v];
            if let Some(r) = bisect(|u| lg(u.exp(), t), v, uhi) {
                points.push(r);
            }
            points.push(uhi);
            let inner = integrate(
                |u| {
                    let s = u.exp();
                    s * p.eval_unchecked(k.eval_unchecked(s, t) * scale)
                },
                &points,
                INNER_TOL,
                0.0,
                MAX_PIECES,
            );
            match inner {
                Ok(r) => {
                    evaluations += r.evaluations;
                    t * r.value
                }
                Err(e) => {
                    inner_failure.get_or_insert(e);
                    0.0
                }
            }
        },
        &outer_points,
        OUTER_TOL,
        0.0,
        MAX_PIECES,
    )?;
    if let Some(e) = inner_failure {
        return Err(e);
    }
    Ok(Integral {
        value: 2.0 * outer.value,
        error: 2.0 * outer.error,
        evaluations,
    })
}

/// `I(n) = ∫∫_{[1/n, 1]²} ρ(g(s, t) n) ds dt`.
pub fn integral_i(k: &KernelSpec, p: &ProfileSpec, n: f64) -> Result<f64> {
    k.validate()?;
    p.validate()?;
    if !(n >= 1.0 && n.is_finite()) {
        return Err(param(format!("n must be a finite number >= 1, got {n}")));
    }
    Ok(integrate_square(k, p, n, 1.0 / n, 1.0)?.value)
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEffReport {
    pub n_grid: Vec<f64>,
    pub i_values: Vec<f64>,
    pub fitted_slope: f64,
    pub delta_eff: f64,
    pub closed_form: Option<f64>,
    pub residual: f64,
    /// Index of the first grid point used by the fit.
    pub fit_from: usize,
    /// Set when the grid was cut short because `I(n)` underflowed.
    pub truncated: bool,
}

pub fn delta_eff_estimate(k: &KernelSpec, p: &ProfileSpec, n_grid: &[f64]) -> Result<DeltaEffReport> {
    k.validate()?;
    p.validate()?;
    if n_grid.len() < 8 {
        return Err(param(format!("n grid needs at least 8 points, got {}", n_grid.len())));
    }
    if n_grid.iter().any(|&n| !(n >= 1.0 && n.is_finite())) || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("n grid must be strictly increasing and >= 1"));
    }
    let steps: Vec<f64> = n_grid.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    if steps.iter().any(|s| (s - steps[0]).abs() > 1e-6 * steps[0].max(1.0)) {
        return Err(param("n grid must be log-spaced"));
    }
    if *n_grid.last().unwrap() < 1e6 {
        return Err(param("n grid must reach at least 1e6"));
    }
    let values: Vec<f64> = n_grid
        .par_iter()
        .map(|&n| integral_i(k, p, n))
        .collect::<Result<_>>()?;
    let kept = values
        .iter()
        .position(|&v| !(v >= f64::MIN_POSITIVE))
        .unwrap_or(values.len());
    let truncated = kept < values.len();
    if truncated {
        log::warn!(
            "I(n) underflows beyond n = {}; fitting {} of {} grid points",
            n_grid[kept.saturating_sub(1)],
            kept,
            n_grid.len()
        );
    }
    if kept < 4 {
        return Err(Error::Numeric {
            message: "I(n) underflows on most of the grid".into(),
            achieved: 0.0,
        });
    }
    let fit_from = kept / 2;
    let xs: Vec<f64> = n_grid[fit_from..kept].iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = values[fit_from..kept].iter().map(|v| v.ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(DeltaEffReport {
        n_grid: n_grid[..kept].to_vec(),
        i_values: values[..kept].to_vec(),
        fitted_slope: fit.slope,
        delta_eff: -fit.slope,
        closed_form: delta_eff_closed_form(k.variant, p.delta, k.gamma),
        residual: fit.residual,
        fit_from,
        truncated,
    })
}

/// Asymptotic value of `δ_eff` where one is known; `None` on boundaries
/// where no formula is available.
pub fn delta_eff_closed_form(variant: KernelVariant, delta: f64, gamma: f64) -> Option<f64> {
    if !(delta > 1.0) || !(0.0..1.0).contains(&gamma) {
        return None;
    }
    match variant {
        KernelVariant::Constant => Some(delta),
        KernelVariant::Min | KernelVariant::Sum => {
            if gamma <= 1.0 / delta {
                Some(delta)
            } else {
                Some(delta * (1.0 - gamma) + 1.0)
            }
        }
        KernelVariant::Product => {
            if gamma <= 1.0 / delta {
                Some(delta)
            } else if gamma < 0.5 {
                Some(delta * (1.0 - 2.0 * gamma) + 2.0)
            } else if gamma > 0.5 {
                Some(1.0 / gamma)
            } else {
                None
            }
        }
        KernelVariant::PreferentialAttachment => {
            let edge = 1.0 - 1.0 / delta;
            if gamma < edge {
                Some(2.0)
            } else if gamma > edge {
                Some(delta * (1.0 - gamma) + 1.0)
            } else {
                None
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BetaCZero,
    BetaCFinitePositive,
    BetaCInfinite,
    ScaleInvariantUnknown,
    DeltaLe2Finite,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::BetaCZero => "beta_c_zero",
            Regime::BetaCFinitePositive => "beta_c_finite_positive",
            Regime::BetaCInfinite => "beta_c_infinite",
            Regime::ScaleInvariantUnknown => "scale_invariant_unknown",
            Regime::DeltaLe2Finite => "delta_le_2_finite",
        }
    }

    /// Whether the label asserts `β_c < ∞`.
    pub fn is_finite(&self) -> bool {
        matches!(self, Regime::BetaCZero | Regime::BetaCFinitePositive | Regime::DeltaLe2Finite)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub label: Regime,
    pub provenance: String,
}

fn label(label: Regime, provenance: &str) -> RegimeLabel {
    RegimeLabel {
        label,
        provenance: provenance.to_string(),
    }
}

pub fn classify_regime(k: &KernelSpec, delta: f64) -> Result<RegimeLabel> {
    k.validate()?;
    if !(delta > 1.0) {
        return Err(param(format!("delta must exceed 1, got {delta}")));
    }
    let g = k.gamma;
    if delta <= 2.0 {
        return Ok(label(
            Regime::DeltaLe2Finite,
            "delta <= 2: delta_eff <= delta <= 2, and beta_c < infinity for every kernel",
        ));
    }
    let lower = (delta - 1.0) / delta;
    let upper = delta / (delta + 1.0);
    Ok(match k.variant {
        KernelVariant::Constant => label(
            Regime::BetaCInfinite,
            "constant kernel: delta_eff = delta > 2, so beta_c = infinity",
        ),
        KernelVariant::Min | KernelVariant::Sum => {
            if g > upper {
                label(Regime::BetaCZero, "gamma > delta/(delta+1): beta_c = 0")
            } else if g > lower && g < upper {
                label(
                    Regime::BetaCFinitePositive,
                    "(delta-1)/delta < gamma < delta/(delta+1): delta_eff < 2 gives beta_c < infinity, beta_c > 0 below delta/(delta+1)",
                )
            } else if g < lower {
                label(
                    Regime::BetaCInfinite,
                    "gamma < (delta-1)/delta: delta_eff > 2, so beta_c = infinity",
                )
            } else if g == lower {
                label(
                    Regime::ScaleInvariantUnknown,
                    "gamma = (delta-1)/delta: delta_eff = 2, behaviour of beta_c open",
                )
            } else {
                label(
                    Regime::ScaleInvariantUnknown,
                    "gamma = delta/(delta+1): boundary between beta_c = 0 and beta_c > 0, not resolved",
                )
            }
        }
        KernelVariant::Product => {
            if g > 0.5 {
                label(Regime::BetaCZero, "product kernel, gamma > 1/2: beta_c = 0")
            } else if g < 0.5 {
                label(
                    Regime::BetaCInfinite,
                    "product kernel, gamma < 1/2: delta_eff > 2, so beta_c = infinity",
                )
            } else {
                label(
                    Regime::ScaleInvariantUnknown,
                    "product kernel, gamma = 1/2: behaviour of beta_c open",
                )
            }
        }
        KernelVariant::PreferentialAttachment => {
            if g > upper {
                label(Regime::BetaCZero, "preferential attachment, gamma > delta/(delta+1): beta_c = 0")
            } else if g > lower && g < upper {
                label(
                    Regime::BetaCFinitePositive,
                    "preferential attachment, (delta-1)/delta < gamma < delta/(delta+1): delta_eff < 2, 0 < beta_c < infinity",
                )
            } else if g <= lower {
                label(
                    Regime::ScaleInvariantUnknown,
                    "preferential attachment, gamma <= (delta-1)/delta: delta_eff = 2, finiteness of beta_c unknown",
                )
            } else {
                label(
                    Regime::ScaleInvariantUnknown,
                    "preferential attachment, gamma = delta/(delta+1): boundary between beta_c = 0 and beta_c > 0, not resolved",
                )
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A1Term {
    pub n: u32,
    pub k_n: f64,
    /// The restricted double integral at scale `K_n`.
    pub integral: f64,
    /// `ln(n³K) - K_{n-1}² ∫∫ ρ(g K_n)`.
    pub log_value: f64,
    pub value: f64,
    /// `value` underflowed to 0 although `log_value` is finite.
    pub underflow: bool,
}

/// `n³K exp(-K_{n-1}² ∫∫_{[K_{n-1}^{μ-1}, 1-K_{n-1}^{μ-1}]²} ρ(g K_n))`
/// for `n = 2..=n_max`.
pub fn condition_a1_sequence(k: &KernelSpec, p: &ProfileSpec, base: u64, mu: f64, n_max: u32) -> Result<Vec<A1Term>> {
    k.validate()?;
    p.validate()?;
    if !(mu > 0.0 && mu < 0.5) {
        return Err(param(format!("mu must lie in (0, 1/2), got {mu}")));
    }
    if base < 2 {
        return Err(param("K must be at least 2"));
    }
    if !(2..=6).contains(&n_max) {
        return Err(param(format!("n_max must lie in 2..=6, got {n_max}")));
    }
    (2..=n_max)
        .map(|n| {
            let k_prev = scale_k(base, n - 1)? as f64;
            let k_n = scale_k(base, n)? as f64;
            let lo = k_prev.powf(mu - 1.0);
            let integral = integrate_square(k, p, k_n, lo, 1.0 - lo)?.value;
            let log_value = ((n as f64).powi(3) * base as f64).ln() - k_prev * k_prev * integral;
            let value = log_value.exp();
            Ok(A1Term {
                n,
                k_n,
                integral,
                log_value,
                value,
                underflow: value == 0.0 && log_value.is_finite(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Diverging,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Geometric-mean ratio of consecutive terms over the last decade.
    pub tail_ratio: f64,
    pub verdict: Verdict,
}

/// Partial sums of `2^{2n} ∫∫_{[2^{-(1+μ)n}, 1]²} ρ(g 2^n)` for `n = 1..=n_max`.
pub fn condition_a2_partial_sums(k: &KernelSpec, p: &ProfileSpec, mu: f64, n_max: u32) -> Result<A2Report> {
    k.validate()?;
    p.validate()?;
    if !(mu > 0.0 && mu < 0.5) {
        return Err(param(format!("mu must lie in (0, 1/2), got {mu}")));
    }
    if !(2..=60).contains(&n_max) {
        return Err(param(format!("n_max must lie in 2..=60, got {n_max}")));
    }
    let terms: Vec<f64> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let scale = (n as f64).exp2();
            let lo = (-(1.0 + mu) * n as f64).exp2();
            Ok(scale * scale * integrate_square(k, p, scale, lo, 1.0)?.value)
        })
        .collect::<Result<_>>()?;
    let partial_sums = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let last = terms.len() - 1;
    let span = last.min(10);
    let tail_ratio = (terms[last] / terms[last - span]).powf(1.0 / span as f64);
    Ok(A2Report {
        terms,
        partial_sums,
        tail_ratio,
        verdict: if tail_ratio < 0.95 { Verdict::Converging } else { Verdict::Diverging },
    })
}

/// `P_z = 1 - E exp(-g(T, S)^{-δ} (z/β)^{-δ})` over independent uniform marks.
pub fn edge_marginal(z: f64, k: &KernelSpec, delta: f64, beta: f64) -> Result<f64> {
    k.validate()?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(param(format!("z must be positive, got {z}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(param(format!("beta must be positive, got {beta}")));
    }
    let p = ProfileSpec::new(ProfileVariant::ExponentialPolynomial, delta, None)?;
    Ok(integrate_square(k, &p, z / beta, MARK_FLOOR, 1.0)?.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMarginalReport {
    pub z_grid: Vec<f64>,
    pub p_values: Vec<f64>,
    /// `-d log P_z / d log z` fitted over the upper half of the grid.
    pub alpha_delta_fit: f64,
    pub alpha: f64,
}

pub fn edge_marginal_report(k: &KernelSpec, delta: f64, beta: f64, z_grid: &[f64]) -> Result<EdgeMarginalReport> {
    if z_grid.len() < 2 {
        return Err(param("z grid needs at least 2 points"));
    }
    let p_values: Vec<f64> = z_grid
        .par_iter()
        .map(|&z| edge_marginal(z, k, delta, beta))
        .collect::<Result<_>>()?;
    let from = (z_grid.len() / 2).min(z_grid.len() - 2);
    let xs: Vec<f64> = z_grid[from..].iter().map(|z| z.ln()).collect();
    let ys: Vec<f64> = p_values[from..].iter().map(|p| p.ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(EdgeMarginalReport {
        z_grid: z_grid.to_vec(),
        p_values,
        alpha_delta_fit: -fit.slope,
        alpha: -fit.slope / delta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Tail index of `Y = g(T, S)^{-δ}`.
    pub alpha: f64,
    /// Decay exponent of `P_z`, equal to `alpha * δ`.
    pub alpha_delta: f64,
    pub tail_probabilities: Vec<f64>,
    pub log_thresholds: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TailEstimate {
    Polynomial(TailFit),
    NoPolynomialTail,
}

pub const DEFAULT_TAIL_SAMPLES: usize = 10_000_000;

pub fn quenched_tail_alpha(k: &KernelSpec, delta: f64) -> Result<TailEstimate> {
    quenched_tail_alpha_with(k, delta, DEFAULT_TAIL_SAMPLES, 0)
}

/// Regression of `log P{Y > y}` on `log y` for tail probabilities between
/// `1e-2` and `1e-5`, with `Y = g(T, S)^{-δ}` sampled `samples` times.
pub fn quenched_tail_alpha_with(k: &KernelSpec, delta: f64, samples: usize, seed: u64) -> Result<TailEstimate> {
    k.validate()?;
    if !(delta > 1.0) {
        return Err(param(format!("delta must exceed 1, got {delta}")));
    }
    if samples < 1_000_000 {
        return Err(param("tail fit needs at least 1e6 samples"));
    }
    let mut rng = CounterStream::new(seed, Domain::MonteCarlo, 0, 0);
    // log Y = -δ log g, kept in logs to avoid overflow.
    let mut log_y: Vec<f64> = (0..samples)
        .map(|_| {
            let t = rng.next_unit();
            let s = rng.next_unit();
            -delta * k.eval_unchecked(s, t).ln()
        })
        .collect();
    let probs = log_grid(1e-2, 1e-5, 13);
    let mut thresholds = Vec::with_capacity(probs.len());
    let mut lower = 0;
    for &p in &probs {
        // The m-th largest value has m values strictly above it (ties aside).
        let m = (p * samples as f64).round() as usize;
        let idx = samples - 1 - m;
        let (_, v, _) = log_y[lower..].select_nth_unstable_by(idx - lower, f64::total_cmp);
        thresholds.push(*v);
        lower = idx;
    }
    if thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return Ok(TailEstimate::NoPolynomialTail);
    }
    let ys: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
    let fit = fit_line(&thresholds, &ys);
    let alpha = -fit.slope;
    if k.variant == KernelVariant::Min && k.gamma > 0.5 {
        log::debug!(
            "min kernel, gamma = {}: fitted tail index {alpha:.4}, alternative closed form 2/gamma = {:.4}",
            k.gamma,
            2.0 / k.gamma
        );
    }
    Ok(TailEstimate::Polynomial(TailFit {
        alpha,
        alpha_delta: alpha * delta,
        tail_probabilities: probs,
        log_thresholds: thresholds,
        residual: fit.residual,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(v: KernelVariant, g: f64) -> KernelSpec {
        KernelSpec::new(v, g).unwrap()
    }

    #[test]
    fn constant_kernel_integral_is_exact() {
        let v = integral_i(&kernel(KernelVariant::Constant, 0.0), &ProfileSpec::hard(3.0), 10.0).unwrap();
        assert!((v - 8.1e-4).abs() < 1e-12);
        assert_eq!(integral_i(&kernel(KernelVariant::Min, 0.5), &ProfileSpec::hard(3.0), 1.0).unwrap(), 0.0);
        assert!(integral_i(&kernel(KernelVariant::Min, 0.5), &ProfileSpec::hard(3.0), 0.5).is_err());
    }

    #[test]
    fn closed_form_table() {
        let cf = delta_eff_closed_form;
        assert!((cf(KernelVariant::Min, 3.0, 0.9).unwrap() - 1.3).abs() < 1e-12);
        assert!((cf(KernelVariant::Product, 3.0, 0.75).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(cf(KernelVariant::Min, 3.0, 0.2), Some(3.0));
        assert_eq!(cf(KernelVariant::Product, 3.0, 0.5), None);
        assert_eq!(cf(KernelVariant::PreferentialAttachment, 3.0, 0.2), Some(2.0));
        assert_eq!(cf(KernelVariant::Constant, 1.5, 0.7), Some(1.5));
    }

    #[test]
    fn classifier_examples() {
        let c = |v, g, d| classify_regime(&kernel(v, g), d).unwrap().label;
        assert_eq!(c(KernelVariant::Min, 0.9, 3.0), Regime::BetaCZero);
        assert_eq!(c(KernelVariant::Min, 0.7, 3.0), Regime::BetaCFinitePositive);
        assert_eq!(c(KernelVariant::Product, 0.4, 3.0), Regime::BetaCInfinite);
        assert_eq!(c(KernelVariant::PreferentialAttachment, 0.3, 3.0), Regime::ScaleInvariantUnknown);
        assert_eq!(c(KernelVariant::Min, 2.0 / 3.0, 3.0), Regime::ScaleInvariantUnknown);
        assert_eq!(c(KernelVariant::Min, 0.75, 3.0), Regime::ScaleInvariantUnknown);
        assert_eq!(c(KernelVariant::Sum, 0.1, 1.8), Regime::DeltaLe2Finite);
        assert!(!classify_regime(&kernel(KernelVariant::Min, 0.5), 3.0).unwrap().provenance.is_empty());
    }

    #[test]
    fn edge_marginal_trivial_cases() {
        let c = kernel(KernelVariant::Constant, 0.0);
        let v = edge_marginal(1.0, &c, 3.0, 1.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
        let far = edge_marginal(1e12, &c, 3.0, 1.0).unwrap();
        assert!(far <= 1e-36 * (1.0 + 1e-6));
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e2, 1e10, 16);
        assert_eq!(g.len(), 16);
        assert!((g[0] - 100.0).abs() < 1e-9);
        assert_eq!(g[15], 1e10);
    }
}
