use num_complex::Complex64;

use super::generator::{Flavor, RateMatrix};
use crate::error::{Error, Result};

/// Poisson tail mass tolerated when truncating the uniformization series.
pub const TAIL_TOL: f64 = 1e-12;
/// Upper limit on the number of series terms.
pub const MAX_TERMS: usize = 5_000_000;

/// Result of a semigroup application with its certified truncation bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub values: Vec<f64>,
    /// Upper bound on the discarded Poisson mass; the sup-norm error is at
    /// most this times `‖f‖_∞`.
    pub tail_bound: f64,
    pub terms: usize,
}

/// `e^{tQ} f` by uniformization: with `Λ = max |Q(s,s)|` and `P = I + Q/Λ`,
/// `e^{tQ} = Σ_k Pois(k; Λt) P^k`. Weights are built in log space so large
/// `Λt` does not underflow, and the series stops once the remaining mass is
/// provably below [`TAIL_TOL`].
pub fn semigroup_apply_bounded(q: &RateMatrix, f: &[f64], t: f64) -> Result<Propagated> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    if f.len() != q.size() {
        return Err(Error::GeometryMismatch(format!(
            "vector has {} entries, generator has {} states",
            f.len(),
            q.size()
        )));
    }
    let rate = q.max_exit_rate();
    let mt = rate * t;
    if mt == 0.0 {
        return Ok(Propagated {
            values: f.to_vec(),
            tail_bound: 0.0,
            terms: 0,
        });
    }
    let n = f.len();
    let mut v = f.to_vec();
    let mut qv = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let ln_mt = mt.ln();
    let mut ln_w = -mt;
    let mut k = 0usize;
    loop {
        let w = ln_w.exp();
        if w > 0.0 {
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
        }
        // Beyond the mode the weight ratio Λt/(j+1) shrinks, so the tail
        // after term k is at most w_{k+1} / (1 - Λt/(k+2)).
        let ln_next = ln_w + ln_mt - ((k + 1) as f64).ln();
        let ratio = mt / (k + 2) as f64;
        if ratio < 1.0 {
            let bound = ln_next.exp() / (1.0 - ratio);
            if bound <= TAIL_TOL {
                return Ok(Propagated {
                    values: acc,
                    tail_bound: bound,
                    terms: k + 1,
                });
            }
        }
        if k + 1 >= MAX_TERMS {
            let bound = if ratio < 1.0 { ln_next.exp() / (1.0 - ratio) } else { 1.0 };
            return Err(Error::TruncationBudget { bound });
        }
        q.apply(&v, &mut qv);
        for (x, d) in v.iter_mut().zip(&qv) {
            *x += d / rate;
        }
        ln_w = ln_next;
        k += 1;
    }
}

/// `e^{tQ} f` for a real vector.
pub fn semigroup_apply(q: &RateMatrix, f: &[f64], t: f64) -> Result<Vec<f64>> {
    Ok(semigroup_apply_bounded(q, f, t)?.values)
}

/// `e^{tQ} f` for a complex vector; real and imaginary parts propagate
/// separately because `Q` is real.
pub fn semigroup_apply_complex(q: &RateMatrix, f: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let re: Vec<f64> = f.iter().map(|z| z.re).collect();
    let re = semigroup_apply(q, &re, t)?;
    if f.iter().all(|z| z.im == 0.0) {
        return Ok(re.into_iter().map(|r| Complex64::new(r, 0.0)).collect());
    }
    let im: Vec<f64> = f.iter().map(|z| z.im).collect();
    let im = semigroup_apply(q, &im, t)?;
    Ok(re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect())
}

/// Probability that the chain started from `initial` sits in the empty
/// configuration at time `t`. Under `Absorbing` this is `P(τ ≤ t)`; under
/// `StoppedOnGuard` it is `P(τ ≤ t, τ < σ)` since guard states are frozen.
pub fn exact_extinction(q: &RateMatrix, initial: u64, t: f64) -> Result<f64> {
    if q.flavor() == Flavor::InfectedBoundary {
        return Err(Error::FlavorMismatch {
            expected: "absorbing or stopped-on-guard",
        });
    }
    let s = initial as usize;
    if s >= q.size() {
        return Err(Error::SiteIndex(s));
    }
    let mut ind = vec![0.0; q.size()];
    ind[0] = 1.0;
    Ok(semigroup_apply(q, &ind, t)?[s].clamp(0.0, 1.0))
}
