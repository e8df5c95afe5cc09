use statrs::distribution::{ContinuousCDF, Gamma};
use wdrcm::stats::{ks_critical_1pct, ks_statistic};
use wdrcm::*;

/// Half-width of a binomial band at four standard deviations.
fn band(p: f64, n: usize) -> f64 {
    4.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn poisson_vertex_count_matches_mean() {
    let seeds = 2000;
    let counts: Vec<f64> = (0..seeds)
        .map(|s| sample_poisson_palm(1.0, 100.0, s).unwrap().len() as f64)
        .collect();
    let mean = stats::mean(&counts);
    let se = (stats::variance(&counts) / seeds as f64).sqrt();
    assert!((mean - 201.0).abs() < 4.0 * se, "mean {mean} se {se}");
}

#[test]
fn poisson_configuration_is_reproducible() {
    let a = sample_poisson_palm(1.0, 10.0, 42).unwrap();
    let b = sample_poisson_palm(1.0, 10.0, 42).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn poisson_gaps_are_exponential() {
    // One gap per seed keeps the sample independent.
    let gaps: Vec<f64> = (0..10_000)
        .map(|s| {
            let cfg = sample_poisson_palm(2.0, 50.0, s).unwrap();
            cfg.vertex(1).unwrap().location - cfg.vertex(0).unwrap().location
        })
        .collect();
    let d = ks_statistic(&gaps, |x| 1.0 - (-2.0 * x).exp());
    assert!(d < ks_critical_1pct(gaps.len()), "KS {d}");

    // Gaps pooled inside one long window.
    let cfg = sample_poisson_palm(2.0, 5_000.0, 9).unwrap();
    let v = cfg.vertices();
    let pooled: Vec<f64> = v.windows(2).map(|w| w[1].location - w[0].location).collect();
    let d = ks_statistic(&pooled, |x| 1.0 - (-2.0 * x).exp());
    assert!(d < ks_critical_1pct(pooled.len()), "pooled KS {d}");
}

#[test]
fn poisson_counts_in_disjoint_intervals_are_uncorrelated() {
    let replicas = 4000;
    let pairs: Vec<(f64, f64)> = (0..replicas)
        .map(|s| {
            let cfg = sample_poisson_palm(1.0, 10.0, 1000 + s).unwrap();
            let count = |lo: f64, hi: f64| {
                cfg.vertices()
                    .iter()
                    .filter(|v| v.location >= lo && v.location < hi && v.index != 0)
                    .count() as f64
            };
            (count(2.0, 3.0), count(3.0, 4.0))
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (mx, my) = (stats::mean(&xs), stats::mean(&ys));
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (replicas as f64 - 1.0);
    let corr = cov / (stats::variance(&xs) * stats::variance(&ys)).sqrt();
    assert!(corr.abs() < 4.0 / (replicas as f64).sqrt(), "correlation {corr}");
}

#[test]
fn bernoulli_lattice_mean_gap() {
    let gaps: Vec<f64> = (0..10_000)
        .map(|s| {
            let cfg = sample_lattice_bernoulli(0.5, 1, s).unwrap();
            cfg.vertex(1).unwrap().location - cfg.vertex(0).unwrap().location
        })
        .collect();
    let mean = stats::mean(&gaps);
    let se = (stats::variance(&gaps) / gaps.len() as f64).sqrt();
    assert!((mean - 2.0).abs() < 4.0 * se, "mean gap {mean}");
}

#[test]
fn bernoulli_lattice_gaps_are_geometric() {
    let p = 0.25;
    let n = 20_000;
    let gaps: Vec<usize> = (0..n)
        .map(|s| {
            let cfg = sample_lattice_bernoulli(p, 1, s as u64).unwrap();
            (cfg.vertex(1).unwrap().location - cfg.vertex(0).unwrap().location) as usize
        })
        .collect();
    for k in 1..=12 {
        let pmf = p * (1.0 - p).powi(k as i32 - 1);
        let freq = gaps.iter().filter(|&&g| g == k).count() as f64 / n as f64;
        assert!((freq - pmf).abs() < band(pmf, n), "gap {k}: {freq} vs {pmf}");
    }
}

#[test]
fn evenly_spaced_a_on_the_lattice_and_a_tight_constant() {
    let lattice = sample_deterministic_lattice(200, 1).unwrap();
    for k in [2, 3, 4] {
        assert!(check_evenly_spaced_a(&lattice, 3.0, k, 2).unwrap().iter().all(|&b| b));
    }
    let cfg = sample_poisson_palm(1.0, 300.0, 5).unwrap();
    assert!(check_evenly_spaced_a(&cfg, 0.1, 4, 2).unwrap().iter().all(|&b| !b));
}

#[test]
fn evenly_spaced_a_failure_rate_matches_gamma_tail() {
    // |X_{-K_n} - X_{K_n-1}| is a sum of 2K_n - 1 unit exponential gaps.
    let seeds = 1000;
    let pp = PointProcessSpec::Poisson { intensity: 1.0 };
    let failures = (0..seeds)
        .filter(|&s| {
            let cfg = pp.sample_indices(-128, 127, s).unwrap();
            !check_evenly_spaced_a(&cfg, 3.0, 4, 2).unwrap().iter().all(|&b| b)
        })
        .count();
    let pass = |k: f64| Gamma::new(2.0 * k - 1.0, 1.0).unwrap().cdf(3.0 * k);
    let expected = 1.0 - pass(4.0) * pass(128.0);
    let freq = failures as f64 / seeds as f64;
    assert!((freq - expected).abs() < band(expected, seeds as usize), "{freq} vs {expected}");
}

#[test]
fn evenly_spaced_b_on_the_lattice() {
    let lattice = sample_deterministic_lattice(4096, 1).unwrap();
    assert!(check_evenly_spaced_b(&lattice, 1.0, 10).unwrap().iter().all(|&b| b));
    assert!(check_evenly_spaced_b(&lattice, 10.0, 10).unwrap().iter().all(|&b| !b));
    assert!(check_evenly_spaced_b(&lattice, 1.0, 12).is_err());
}

#[test]
fn evenly_spaced_b_failures_vanish_with_n() {
    let seeds = 1000;
    let pp = PointProcessSpec::Poisson { intensity: 1.0 };
    let mut failures = [0usize; 10];
    for s in 0..seeds {
        let cfg = pp.sample_indices(-2048, 1024, s).unwrap();
        for (n, ok) in check_evenly_spaced_b(&cfg, 1.0, 10).unwrap().into_iter().enumerate() {
            failures[n] += usize::from(!ok);
        }
    }
    for (i, &f) in failures.iter().enumerate() {
        // The spacing is a sum of 3·2^n unit exponential gaps.
        let n = (i + 1) as i32;
        let expected = Gamma::new(3.0 * 2f64.powi(n), 1.0).unwrap().cdf(2f64.powi(n));
        let freq = f as f64 / seeds as f64;
        assert!((freq - expected).abs() < band(expected, seeds as usize) + 1e-12, "n={n}: {freq} vs {expected}");
    }
    assert!(failures[9] <= failures[0]);
    assert_eq!(failures[9], 0);
}

#[test]
fn sampled_configurations_satisfy_the_invariants() {
    let specs = [
        PointProcessSpec::Poisson { intensity: 0.7 },
        PointProcessSpec::LatticeBernoulli { retention: 0.3 },
        PointProcessSpec::DeterministicLattice,
    ];
    for spec in specs {
        for seed in 0..20 {
            let cfg = spec.sample_window(60.0, seed).unwrap();
            let v = cfg.vertices();
            assert!(v.windows(2).all(|w| w[0].location < w[1].location && w[1].index == w[0].index + 1));
            assert_eq!(cfg.vertex(0).unwrap().location, 0.0);
            assert!(v.iter().all(|x| x.mark > 0.0 && x.mark < 1.0));
            let back = MarkedConfiguration::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back.to_json(), cfg.to_json());
        }
    }
}
