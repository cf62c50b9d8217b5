use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::generator::{Flavor, RateMatrix, DENSE_CAP};
use crate::error::{Error, Result};

/// Residual tolerance `‖μQ‖_∞` accepted for a stationary vector.
pub const STATIONARY_TOL: f64 = 1e-10;

/// Invariant probability vector of an irreducible finite-volume chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryVector {
    pub probabilities: Vec<f64>,
    pub residual: f64,
}

impl StationaryVector {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// `∫ f dμ_N` for a real vector.
    pub fn expect(&self, f: &[f64]) -> f64 {
        self.probabilities.iter().zip(f).map(|(p, v)| p * v).sum()
    }
}

fn residual(q: &RateMatrix, mu: &[f64]) -> f64 {
    let mut out = vec![0.0; mu.len()];
    q.apply_left(mu, &mut out);
    out.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn require_irreducible(q: &RateMatrix) -> Result<()> {
    if q.flavor() != Flavor::InfectedBoundary {
        return Err(Error::FlavorMismatch {
            expected: "infected-boundary",
        });
    }
    Ok(())
}

/// Stationary vector by a direct LU solve of `Q^T μ = 0` with one equation
/// replaced by the normalisation `Σ μ = 1`. Falls back to power iteration
/// above the dense cap.
pub fn stationary(q: &RateMatrix) -> Result<StationaryVector> {
    require_irreducible(q)?;
    let n = q.size();
    if n > DENSE_CAP {
        return stationary_power(q, 10_000_000);
    }
    let dense = q.to_dense()?;
    // a(i, j) = Q(j, i), last row replaced by ones
    let mut a = DMatrix::from_fn(n, n, |i, j| dense[j * n + i]);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or(Error::NonConvergence { residual: f64::INFINITY })?;
    // tiny negative round-off is clipped before renormalising
    let mut mu: Vec<f64> = sol.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|v| *v /= total);
    let r = residual(q, &mu);
    if r > STATIONARY_TOL {
        return Err(Error::NonConvergence { residual: r });
    }
    Ok(StationaryVector {
        probabilities: mu,
        residual: r,
    })
}

/// Stationary vector by power iteration on the uniformized chain
/// `P = I + Q/Λ`, with `Λ` slightly above the largest exit rate so that
/// every state keeps a self-loop and the chain is aperiodic.
pub fn stationary_power(q: &RateMatrix, max_iter: usize) -> Result<StationaryVector> {
    require_irreducible(q)?;
    let n = q.size();
    let rate = 1.1 * q.max_exit_rate();
    let mut mu = vec![1.0 / n as f64; n];
    let mut qmu = vec![0.0; n];
    let mut r = f64::INFINITY;
    for it in 0..max_iter {
        q.apply_left(&mu, &mut qmu);
        if it % 16 == 0 {
            r = qmu.iter().fold(0.0, |m, v| m.max(v.abs()));
            if r <= STATIONARY_TOL * 1e-2 {
                break;
            }
        }
        for (m, d) in mu.iter_mut().zip(&qmu) {
            *m += d / rate;
        }
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|v| *v /= total);
    let r_final = residual(q, &mu);
    if r_final > STATIONARY_TOL {
        return Err(Error::NonConvergence { residual: r_final.max(r) });
    }
    Ok(StationaryVector {
        probabilities: mu,
        residual: r_final,
    })
}

/// `Var_μ(f) = Σ μ(s) |f(s) − μ(f)|²`.
pub fn variance(mu: &StationaryVector, f: &[num_complex::Complex64]) -> Result<f64> {
    if f.len() != mu.len() {
        return Err(Error::GeometryMismatch(format!(
            "function has {} entries, measure has {}",
            f.len(),
            mu.len()
        )));
    }
    let p = &mu.probabilities;
    let mean: num_complex::Complex64 = p.iter().zip(f).map(|(&w, &v)| v * w).sum();
    Ok(p.iter().zip(f).map(|(&w, &v)| w * (v - mean).norm_sqr()).sum())
}

/// Real-valued convenience wrapper around [`variance`].
pub fn variance_real(mu: &StationaryVector, f: &[f64]) -> Result<f64> {
    let fc: Vec<_> = f.iter().map(|&v| num_complex::Complex64::new(v, 0.0)).collect();
    variance(mu, &fc)
}
