use std::sync::Arc;

use statrs::distribution::{Binomial, Discrete};
use wdrcm::multiscale::{
    block_goodness, block_sweep, crossing_replicas, crossing_stages, induced_largest_component, mu_regular_lower,
    mu_regular_upper, summarise_crossings, Block,
};
use wdrcm::rng::{CounterStream, Domain};
use wdrcm::*;

fn model(variant: KernelVariant, gamma: f64, delta: f64, beta: f64) -> ModelParams {
    ModelParams::new(KernelSpec::new(variant, gamma).unwrap(), ProfileSpec::hard(delta), beta).unwrap()
}

fn band(p: f64, n: usize) -> f64 {
    4.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn no_crossings_without_edges() {
    let m = model(KernelVariant::Min, 0.9, 3.0, 1e-12);
    let pp = PointProcessSpec::Poisson { intensity: 1.0 };
    let r = crossing_sweep(&m, &pp, 10, 50, 3).unwrap();
    assert!(r.frequencies().iter().all(|&f| f == 0.0));
    assert_eq!(r.no_crossing.estimate, 1.0);
}

#[test]
fn crossing_sampler_and_full_sampler_agree_on_stage_frequencies() {
    let m = model(KernelVariant::Min, 0.7, 3.0, 1.0);
    let pp = PointProcessSpec::Poisson { intensity: 1.0 };
    let k_max = 6;
    let replicas = 2000;
    let fast = summarise_crossings(&crossing_replicas(&m, &pp, k_max, replicas, 10).unwrap(), k_max);
    let reach = 1i64 << (k_max + 1);
    let full: Vec<Vec<bool>> = (0..replicas as u64)
        .map(|r| {
            let s = derive_seed(99, 0, r);
            let cfg = Arc::new(pp.sample_indices(-reach, reach - 1, s).unwrap());
            crossing_stages(&sample_edges_layered(cfg, &m, s).unwrap(), k_max).unwrap()
        })
        .collect();
    let full = summarise_crossings(&full, k_max);
    for (a, b) in fast.stages.iter().zip(&full.stages) {
        let p = 0.5 * (a.estimate + b.estimate);
        let tol = 4.0 * (2.0 * p * (1.0 - p) / replicas as f64).sqrt();
        assert!((a.estimate - b.estimate).abs() <= tol.max(1e-9), "{a:?} vs {b:?}");
    }
}

#[test]
fn absent_crossings_leave_no_edge_across_the_origin() {
    let m = model(KernelVariant::Product, 0.4, 3.0, 0.5);
    let pp = PointProcessSpec::Poisson { intensity: 1.0 };
    let k_max = 5;
    let reach = 1i64 << (k_max + 1);
    let mut quiet = 0;
    for s in 0..400 {
        let cfg = Arc::new(pp.sample_indices(-reach, reach - 1, s).unwrap());
        let g = sample_edges_layered(cfg, &m, s).unwrap();
        let chi = crossing_stages(&g, k_max).unwrap();
        for k in 1..=k_max {
            assert_eq!(chi[k as usize - 1], crossing_stage_indicator(&g, k).unwrap());
        }
        if chi.iter().all(|c| !c) {
            quiet += 1;
            let across = g.edges().iter().any(|&(a, b)| a < 0 && b >= 0 && a >= -reach && b < reach);
            assert!(!across, "seed {s}");
        }
    }
    assert!(quiet > 0);
}

#[test]
fn crossings_are_monotone_in_beta() {
    let m = model(KernelVariant::Sum, 0.5, 2.5, 1.0);
    let pp = PointProcessSpec::Poisson { intensity: 1.0 };
    for s in 0..100 {
        let cfg = Arc::new(pp.sample_indices(-32, 31, s).unwrap());
        let mut prev = vec![false; 4];
        for beta in [0.1, 0.3, 1.0, 3.0] {
            let g = sample_edges_naive(cfg.clone(), &m.with_beta(beta), s).unwrap();
            let chi = crossing_stages(&g, 4).unwrap();
            assert!(prev.iter().zip(&chi).all(|(&a, &b)| !a || b));
            prev = chi;
        }
    }
}

#[test]
fn product_kernel_crossings_decay() {
    let m = model(KernelVariant::Product, 0.4, 3.0, 1.0);
    let r = crossing_sweep(&m, &PointProcessSpec::DeterministicLattice, 16, 300, 1).unwrap();
    let d = r.decay_rate(8, 16).unwrap();
    assert!(d.ci_low > 0.0, "{d:?}");
    assert!(d.ci_high >= 0.3, "{d:?}");
}

#[test]
fn min_kernel_crossings_persist() {
    let m = model(KernelVariant::Min, 0.9, 3.0, 1.0);
    let r = crossing_sweep(&m, &PointProcessSpec::Poisson { intensity: 1.0 }, 16, 200, 2).unwrap();
    assert!(r.frequencies().iter().all(|&f| f >= 0.05), "{:?}", r.frequencies());
}

#[test]
fn block_properties_on_samples() {
    let m = model(KernelVariant::Min, 0.8, 3.0, 4.0);
    let pp = PointProcessSpec::Poisson { intensity: 1.0 };
    let n = 32u64;
    let mut pairs = 0;
    for s in 0..40 {
        let cfg = Arc::new(pp.sample_indices(-200, 200, s).unwrap());
        let g = sample_edges_layered(cfg, &m, s).unwrap();
        let strict = block_goodness(&g, n, 0.8, -4..=4).unwrap();
        let loose = block_goodness(&g, n, 0.5, -4..=4).unwrap();
        for (a, b) in strict.blocks.iter().zip(&loose.blocks) {
            assert_eq!(a.block.len(), 2 * n as usize);
            assert!(!a.is_good || b.is_good);
        }
        for w in strict.blocks.windows(2) {
            assert_eq!(w[1].block.first - w[0].block.first, n as i64);
            if w[0].is_good && w[1].is_good {
                let (_, x) = induced_largest_component(&g, &w[0].block);
                let (_, y) = induced_largest_component(&g, &w[1].block);
                assert!(x.iter().any(|v| y.contains(v)));
                pairs += 1;
            }
        }
    }
    assert!(pairs > 0);
}

#[test]
fn blocks_are_mostly_good_when_beta_c_is_finite() {
    let m = model(KernelVariant::Min, 0.8, 3.0, 10.0);
    let pp = PointProcessSpec::Poisson { intensity: 1.0 };
    let sweep = block_sweep(&m, &pp, 256, 0.75, 0..=0, 200, 4, SamplerKind::Layered).unwrap();
    assert!(sweep.empirical_p_bad.estimate <= 0.5, "{:?}", sweep.empirical_p_bad);
    assert_eq!(Block::new(2, 0).unwrap(), Block { i: 0, first: -2, last: 1 });
}

fn uniform_marks(rng: &mut CounterStream, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.next_unit()).collect()
}

/// Exact failure probability of the lower regularity check for `v` uniform
/// marks on `h` levels, following the cumulative count level by level.
/// Levels beyond `levels` and counts above the largest threshold there are
/// treated as safe.
fn lower_failure_oracle(v: usize, h: usize, levels: usize) -> f64 {
    let need = |i: usize| i as f64 * v as f64 / (2.0 * h as f64);
    let cap = need(levels).ceil() as usize + 1;
    // dist[c] = P(cumulative count c and no failure so far); counts >= cap are absorbed.
    let mut dist = vec![0.0; cap];
    dist[0] = 1.0;
    let mut safe = 0.0;
    for i in 1..=levels {
        let p = 1.0 / (h - i + 1) as f64;
        let mut next = vec![0.0; cap];
        for (c, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let bin = Binomial::new(p, (v - c) as u64).unwrap();
            let mut absorbed = w;
            for add in 0..cap - c {
                let q = w * bin.pmf(add as u64);
                next[c + add] += q;
                absorbed -= q;
            }
            safe += absorbed.max(0.0);
        }
        for (c, x) in next.iter_mut().enumerate() {
            if (c as f64) < need(i) {
                *x = 0.0;
            }
        }
        dist = next;
    }
    1.0 - safe - dist.iter().sum::<f64>()
}

#[test]
fn lower_regularity_failure_rate() {
    let (theta_star, k_prev, mu) = (0.8, 10_000u64, 0.25);
    let v = (theta_star * k_prev as f64).floor() as usize;
    let h = (v as f64).powf(1.0 - mu).floor() as usize;
    let oracle = lower_failure_oracle(v, h, 80);
    let replicas = 1000;
    let mut rng = CounterStream::new(6, Domain::MonteCarlo, 40, 0);
    let failures = (0..replicas)
        .filter(|_| !mu_regular_lower(&uniform_marks(&mut rng, v), mu, theta_star, k_prev).unwrap())
        .count();
    let freq = failures as f64 / replicas as f64;
    assert!((freq - oracle).abs() < band(oracle, replicas), "{freq} vs {oracle}");
    assert!(mu_regular_lower(&vec![1e-9; v], mu, theta_star, k_prev).unwrap());
    assert!(!mu_regular_lower(&vec![1.0 - 1e-9; v], mu, theta_star, k_prev).unwrap());
}

#[test]
fn upper_regularity_failure_rate() {
    let (k, mu) = (14u32, 0.25);
    let size = 1usize << k;
    let floor = (-(1.0 + mu) * k as f64).exp2();
    let replicas = 1000;
    let mut rng = CounterStream::new(7, Domain::MonteCarlo, 41, 0);
    let (mut failures, mut low) = (0usize, 0usize);
    for _ in 0..replicas {
        let marks = uniform_marks(&mut rng, size);
        failures += usize::from(!mu_regular_upper(&marks, mu, k).unwrap());
        low += usize::from(marks.iter().any(|&t| t < floor));
    }
    let analytic = 1.0 - (1.0 - floor).powi(size as i32);
    let freq = low as f64 / replicas as f64;
    assert!((freq - analytic).abs() < band(analytic, replicas), "{freq} vs {analytic}");
    // Condition (ii) adds only rare failures on top of condition (i).
    assert!(failures >= low && failures - low <= 10, "{failures} vs {low}");
    assert!(mu_regular_upper(&vec![0.99; size], mu, k).unwrap());
}
