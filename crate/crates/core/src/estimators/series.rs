use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One point of an estimate series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Abscissa: a time, a distance or a size.
    pub x: f64,
    pub estimate: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// `|estimate − value| ≤ k · σ`, where `σ` is the standard error.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.se
    }

    /// Distance from `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = self.estimate - value;
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub label: String,
    pub points: Vec<Estimate>,
}

impl EstimateSeries {
    pub fn new(label: impl Into<String>) -> Self {
        EstimateSeries {
            label: label.into(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, e: Estimate) {
        self.points.push(e);
    }

    pub fn at(&self, x: f64) -> Option<&Estimate> {
        self.points.iter().find(|p| p.x == x)
    }
}

/// Sample mean with `se = sd/√n`, the sample standard deviation taken with
/// the `n − 1` denominator.
pub fn mean_estimate(x: f64, values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate { x, estimate: f64::NAN, se: f64::NAN, n };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Estimate { x, estimate: mean, se, n }
}

/// Proportion `k/n` with the binomial standard error `√(p̂(1−p̂)/n)`.
pub fn bernoulli(x: f64, successes: usize, n: usize) -> Estimate {
    let p = successes as f64 / n as f64;
    Estimate {
        x,
        estimate: p,
        se: (p * (1.0 - p) / n as f64).sqrt(),
        n,
    }
}

/// Unbiased estimate of `Var(f)` style quantity `E[Z] − |E g|²` from
/// per-replica values `z_i` and `g_i`, with the delta-method standard error
/// built from the influence terms `z_i − 2 Re(conj(ḡ) g_i)`.
pub fn centred_second_moment(x: f64, z: &[f64], g: &[Complex64]) -> Estimate {
    let n = z.len();
    assert_eq!(n, g.len());
    if n < 2 {
        return Estimate { x, estimate: f64::NAN, se: f64::NAN, n };
    }
    let nf = n as f64;
    let zbar = z.iter().sum::<f64>() / nf;
    let gsum: Complex64 = g.iter().sum();
    let gbar = gsum / nf;
    let sq: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    // U-statistic for |E g|²
    let u = (gsum.norm_sqr() - sq) / (nf * (nf - 1.0));
    let infl: Vec<f64> = z
        .iter()
        .zip(g)
        .map(|(&zi, gi)| zi - 2.0 * (gbar.conj() * gi).re)
        .collect();
    let se = mean_estimate(x, &infl).se;
    Estimate { x, estimate: zbar - u, se, n }
}

/// Empirical `p`-quantile (the `⌈np⌉`-th order statistic) with a
/// distribution-free standard error from the binomial order-statistic
/// interval `np ± 1.96 √(np(1−p))`.
pub fn quantile_estimate(x: f64, values: &[f64], p: f64) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate { x, estimate: f64::NAN, se: f64::NAN, n };
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let nf = n as f64;
    let idx = |r: f64| (r.ceil() as isize - 1).clamp(0, n as isize - 1) as usize;
    let q = v[idx(nf * p)];
    let half = 1.96 * (nf * p * (1.0 - p)).sqrt();
    let lo = v[idx(nf * p - half)];
    let hi = v[idx(nf * p + half)];
    Estimate {
        x,
        estimate: q,
        se: (hi - lo) / (2.0 * 1.96),
        n,
    }
}
