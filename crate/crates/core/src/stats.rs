//! Small statistical helpers shared by the estimators.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

/// A binomial proportion with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// One-sided 95% Wilson upper bound.
    pub upper: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, Z95);
        let upper = wilson_interval(successes, trials, Z95_ONE_SIDED).1;
        Self {
            successes,
            trials,
            estimate: if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 },
            ci_low,
            ci_high,
            upper,
        }
    }
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares line through `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub slope_std_err: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_std_err = if n > 2.0 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    LineFit {
        slope,
        intercept,
        residual: (sse / n).sqrt(),
        slope_std_err,
    }
}

/// Hill estimate of the tail index from the top `k` order statistics.
///
/// Returns `None` when `k` is zero or the `(k+1)`-th largest value is not
/// positive.
pub fn hill_estimator(values: &[f64], k: usize) -> Option<f64> {
    if k == 0 || k >= values.len() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let threshold = v[k];
    if !(threshold > 0.0) {
        return None;
    }
    let s: f64 = v[..k].iter().map(|x| (x / threshold).ln()).sum();
    Some(k as f64 / s)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Fit of `P_k = exp(a + b k)` to binomial counts by maximum likelihood.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_std_err: f64,
}

impl LogLinearFit {
    /// Decay rate in base 2, `-b / ln 2`, with its 95% interval.
    pub fn decay_rate_log2(&self) -> (f64, f64, f64) {
        let l2 = std::f64::consts::LN_2;
        let r = -self.slope / l2;
        let h = Z95 * self.slope_std_err / l2;
        (r, r - h, r + h)
    }
}

/// Newton iteration for the binomial log-link model. `data` holds
/// `(k, successes, trials)`.
pub fn fit_binomial_log_link(data: &[(f64, u64, u64)]) -> Option<LogLinearFit> {
    if data.len() < 2 {
        return None;
    }
    let loglik = |a: f64, b: f64| -> f64 {
        let mut l = 0.0;
        for &(k, x, n) in data {
            let eta = a + b * k;
            if eta >= 0.0 {
                return f64::NEG_INFINITY;
            }
            let p = eta.exp();
            l += x as f64 * eta + (n - x) as f64 * (-p).ln_1p();
        }
        l
    };
    // Start from a weighted log-linear regression on smoothed frequencies.
    let xs: Vec<f64> = data.iter().map(|d| d.0).collect();
    let ys: Vec<f64> = data
        .iter()
        .map(|&(_, x, n)| ((x as f64 + 0.5) / (n as f64 + 1.0)).ln())
        .collect();
    let start = fit_line(&xs, &ys);
    let (mut a, mut b) = (start.intercept, start.slope);
    let max_eta = data.iter().map(|d| a + b * d.0).fold(f64::NEG_INFINITY, f64::max);
    if max_eta >= 0.0 {
        a -= max_eta + 0.01;
    }
    let mut ll = loglik(a, b);
    let mut info = [[0.0; 2]; 2];
    for _ in 0..200 {
        let (mut ga, mut gb) = (0.0, 0.0);
        info = [[0.0; 2]; 2];
        for &(k, x, n) in data {
            let p = (a + b * k).exp();
            let (x, n) = (x as f64, n as f64);
            // d/deta of the log-likelihood and its expected curvature.
            let score = x - (n - x) * p / (1.0 - p);
            let w = n * p / (1.0 - p);
            ga += score;
            gb += score * k;
            info[0][0] += w;
            info[0][1] += w * k;
            info[1][1] += w * k * k;
        }
        info[1][0] = info[0][1];
        let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
        if !(det > 0.0) {
            return None;
        }
        let da = (info[1][1] * ga - info[0][1] * gb) / det;
        let db = (info[0][0] * gb - info[1][0] * ga) / det;
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nl = loglik(na, nb);
            if nl >= ll - 1e-12 {
                a = na;
                b = nb;
                let change = nl - ll;
                ll = nl;
                accepted = true;
                if change.abs() < 1e-12 && (step * da).abs() < 1e-10 && (step * db).abs() < 1e-10 {
                    step = 0.0;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || step == 0.0 {
            break;
        }
    }
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    Some(LogLinearFit {
        intercept: a,
        slope: b,
        slope_std_err: (info[0][0] / det).sqrt(),
    })
}
