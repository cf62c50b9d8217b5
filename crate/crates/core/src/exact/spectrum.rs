use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::eigenvalues;
use super::generator::RateMatrix;
use crate::error::{Error, Result};

/// Full complex spectrum of a generator, sorted by decreasing real part
/// (ties by imaginary part).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub dim: usize,
    pub radius: usize,
    pub lambda: f64,
    pub eigenvalues: Vec<Complex64>,
    /// Entries with `|z|` at most this are treated as zero.
    pub zero_tol: f64,
}

/// Wire form of a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub eigenvalues: Vec<[f64; 2]>,
    pub gap: f64,
}

pub fn spectrum(q: &RateMatrix) -> Result<Spectrum> {
    let n = q.size();
    let mut eig = eigenvalues(n, q.to_dense()?)?;
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(Spectrum {
        dim: q.dim(),
        radius: q.radius(),
        lambda: q.lambda(),
        eigenvalues: eig,
        zero_tol: 1e-9 * q.max_exit_rate().max(1.0),
    })
}

/// `min { -Re z : z ≠ 0 }`; infinite for a one-point spectrum.
pub fn spectral_gap(s: &Spectrum) -> f64 {
    s.nonzero().map(|z| -z.re).fold(f64::INFINITY, f64::min)
}

impl Spectrum {
    pub fn nonzero(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.eigenvalues.iter().copied().filter(|z| z.norm() > self.zero_tol)
    }

    pub fn zero_multiplicity(&self) -> usize {
        self.eigenvalues.len() - self.nonzero().count()
    }

    /// Every eigenvalue has a partner within `tol` of its conjugate, matched
    /// one to one.
    pub fn is_conjugation_closed(&self, tol: f64) -> bool {
        let mut used = vec![false; self.eigenvalues.len()];
        for z in &self.eigenvalues {
            let target = z.conj();
            let best = self
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()));
            match best {
                Some((j, w)) if (w - target).norm() <= tol => used[j] = true,
                _ => return false,
            }
        }
        true
    }

    pub fn sum(&self) -> Complex64 {
        self.eigenvalues.iter().sum()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> SpectrumJson {
        SpectrumJson {
            d: self.dim,
            n: self.radius,
            lambda: self.lambda,
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            gap: spectral_gap(self),
        }
    }
}

fn shifted(q: &RateMatrix, z: Complex64, transpose: bool) -> Result<DMatrix<Complex64>> {
    let n = q.size();
    let a = q.to_dense()?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let v = if transpose { a[j * n + i] } else { a[i * n + j] };
        let v = Complex64::new(v, 0.0);
        if i == j {
            v - z
        } else {
            v
        }
    }))
}

/// Orthonormal basis (length `count`) of the approximate null space of
/// `Q − zI` (right vectors) or of `(Q − zI)^T` (left vectors), taken from
/// the smallest singular values.
pub fn null_vectors(q: &RateMatrix, z: Complex64, count: usize, left: bool) -> Result<Vec<Vec<Complex64>>> {
    let m = shifted(q, z, left)?;
    let svd = m.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Eigensolve("singular value decomposition failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    Ok(order
        .into_iter()
        .take(count)
        .map(|k| vt.row(k).iter().map(|c| c.conj()).collect())
        .collect())
}

/// Right eigenvector for an eigenvalue, normalised to unit sup-norm.
pub fn eigenvector(q: &RateMatrix, z: Complex64) -> Result<Vec<Complex64>> {
    let mut v = null_vectors(q, z, 1, false)?.remove(0);
    let (scale, _) = v
        .iter()
        .map(|c| (c.norm(), *c))
        .fold((0.0, Complex64::new(0.0, 0.0)), |acc, x| if x.0 > acc.0 { x } else { acc });
    let pivot = v.iter().copied().find(|c| c.norm() == scale).unwrap_or(Complex64::new(1.0, 0.0));
    v.iter_mut().for_each(|c| *c /= pivot);
    Ok(v)
}

/// Eigenvalue clusters `(representative, multiplicity)`, merging values
/// closer than `tol`.
pub fn clusters(s: &Spectrum, tol: f64) -> Vec<(Complex64, usize)> {
    let mut out: Vec<(Complex64, usize, Complex64)> = Vec::new();
    for &z in &s.eigenvalues {
        match out.iter_mut().find(|(rep, m, _)| (*rep / *m as f64 - z).norm() <= tol) {
            Some((rep, m, _)) => {
                *rep += z;
                *m += 1;
            }
            None => out.push((z, 1, z)),
        }
    }
    out.into_iter().map(|(sum, m, _)| (sum / m as f64, m)).collect()
}

/// Slowest mode present in the expansion of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapMode {
    /// `-2 Re z`, the decay rate of `Var_μ(P_t f)` contributed by this mode.
    pub variance_rate: f64,
    pub re: f64,
    pub im: f64,
    pub overlap: f64,
}

/// Among nonzero eigenvalues whose left eigenspace is not orthogonal to `f`
/// (relative overlap above `overlap_tol`), the one with the largest real
/// part. Since `P_t f − μf = Σ c_z e^{zt} v_z` with `c_z` proportional to
/// `⟨u_z, f⟩`, this mode sets the asymptotic decay of `Var_μ(P_t f)`.
pub fn slowest_overlapping_mode(
    q: &RateMatrix,
    s: &Spectrum,
    f: &[Complex64],
    overlap_tol: f64,
) -> Result<Option<OverlapMode>> {
    if f.len() != q.size() {
        return Err(Error::GeometryMismatch("function length differs from state count".into()));
    }
    let fnorm = f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if fnorm == 0.0 {
        return Ok(None);
    }
    let mut cl = clusters(s, 1e-6 * q.max_exit_rate().max(1.0));
    cl.retain(|(z, _)| z.norm() > s.zero_tol);
    cl.sort_by(|a, b| b.0.re.total_cmp(&a.0.re));
    for (z, m) in cl {
        let basis = null_vectors(q, z, m, true)?;
        let overlap = basis
            .iter()
            .map(|u| {
                let dot: Complex64 = u.iter().zip(f).map(|(a, b)| a * b).sum();
                dot.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
            / fnorm;
        if overlap > overlap_tol {
            return Ok(Some(OverlapMode {
                variance_rate: -2.0 * z.re,
                re: z.re,
                im: z.im,
                overlap,
            }));
        }
    }
    Ok(None)
}
