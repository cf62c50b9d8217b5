//! Dense real non-symmetric eigenvalues: balancing, reduction to upper
//! Hessenberg form by stabilized elimination, then the Francis double-shift
//! QR iteration on the Hessenberg matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major square matrix with 1-based accessors, which keeps the QR sweep
/// readable against its textbook statement.
struct Square {
    n: usize,
    a: Vec<f64>,
}

impl Square {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[(i - 1) * self.n + (j - 1)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[(i - 1) * self.n + (j - 1)]
    }
}

const RADIX: f64 = 2.0;

/// Diagonal similarity making row and column norms comparable.
fn balance(m: &mut Square) {
    let n = m.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 1..=n {
                if j != i {
                    c += m.at(j, i).abs();
                    r += m.at(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        *m.at_mut(i, j) *= g;
                    }
                    for j in 1..=n {
                        *m.at_mut(j, i) *= f;
                    }
                }
            }
        }
    }
}

/// Similarity reduction to upper Hessenberg form by Gaussian elimination
/// with partial pivoting. Entries below the subdiagonal are zeroed.
fn hessenberg(m: &mut Square) {
    let n = m.n;
    for k in 2..n {
        // pivot in column k-1, rows k..n
        let mut x: f64 = 0.0;
        let mut piv = k;
        for j in k..=n {
            if m.at(j, k - 1).abs() > x.abs() {
                x = m.at(j, k - 1);
                piv = j;
            }
        }
        if piv != k {
            for j in (k - 1)..=n {
                let tmp = m.at(piv, j);
                *m.at_mut(piv, j) = m.at(k, j);
                *m.at_mut(k, j) = tmp;
            }
            for j in 1..=n {
                let tmp = m.at(j, piv);
                *m.at_mut(j, piv) = m.at(j, k);
                *m.at_mut(j, k) = tmp;
            }
        }
        if x != 0.0 {
            for i in (k + 1)..=n {
                let mut y = m.at(i, k - 1);
                if y != 0.0 {
                    y /= x;
                    *m.at_mut(i, k - 1) = 0.0;
                    for j in k..=n {
                        let v = m.at(k, j);
                        *m.at_mut(i, j) -= y * v;
                    }
                    for j in 1..=n {
                        let v = m.at(j, i);
                        *m.at_mut(j, k) += y * v;
                    }
                }
            }
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// All eigenvalues of an upper Hessenberg matrix (destroyed on return).
fn hessenberg_qr(m: &mut Square) -> Result<Vec<Complex64>> {
    let n = m.n;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += m.at(i, j).abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 2 {
                let mut s = m.at(l - 1, l - 1).abs() + m.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if m.at(l, l - 1).abs() + s == s {
                    *m.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = m.at(nn, nn);
            if l == nn {
                // one root found
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            y = m.at(nn - 1, nn - 1);
            w = m.at(nn, nn - 1) * m.at(nn - 1, nn);
            if l == nn - 1 {
                // two roots found
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            if its == 60 {
                return Err(Error::Eigensolve(format!(
                    "no convergence after {its} QR sweeps at row {nn}"
                )));
            }
            if its % 10 == 0 && its > 0 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    *m.at_mut(i, i) -= x;
                }
                let s = m.at(nn, nn - 1).abs() + m.at(nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            // form shift and look for two consecutive small subdiagonal elements
            let mut mm = nn - 2;
            loop {
                z = m.at(mm, mm);
                r = x - z;
                let s = y - z;
                p = (r * s - w) / m.at(mm + 1, mm) + m.at(mm, mm + 1);
                q = m.at(mm + 1, mm + 1) - z - r - s;
                r = m.at(mm + 2, mm + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mm == l {
                    break;
                }
                let u = m.at(mm, mm - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (m.at(mm - 1, mm - 1).abs() + z.abs() + m.at(mm + 1, mm + 1).abs());
                if u + v == v {
                    break;
                }
                mm -= 1;
            }
            for i in (mm + 2)..=nn {
                *m.at_mut(i, i - 2) = 0.0;
                if i != mm + 2 {
                    *m.at_mut(i, i - 3) = 0.0;
                }
            }
            // double QR step on rows l..nn and columns mm..nn
            let mut k = mm;
            while k < nn {
                if k != mm {
                    p = m.at(k, k - 1);
                    q = m.at(k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = m.at(k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == mm {
                        if l != mm {
                            *m.at_mut(k, k - 1) = -m.at(k, k - 1);
                        }
                    } else {
                        *m.at_mut(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = m.at(k, j) + q * m.at(k + 1, j);
                        if k != nn - 1 {
                            p += r * m.at(k + 2, j);
                            *m.at_mut(k + 2, j) -= p * z;
                        }
                        *m.at_mut(k + 1, j) -= p * y;
                        *m.at_mut(k, j) -= p * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        p = x * m.at(i, k) + y * m.at(i, k + 1);
                        if k != nn - 1 {
                            p += z * m.at(i, k + 2);
                            *m.at_mut(i, k + 2) -= p * r;
                        }
                        *m.at_mut(i, k + 1) -= p * q;
                        *m.at_mut(i, k) -= p;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Eigenvalues of a dense real `n × n` matrix given row-major.
pub fn eigenvalues(n: usize, row_major: Vec<f64>) -> Result<Vec<Complex64>> {
    assert_eq!(row_major.len(), n * n);
    if n == 0 {
        return Ok(vec![]);
    }
    if row_major.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolve("matrix has non-finite entries".into()));
    }
    let mut m = Square { n, a: row_major };
    balance(&mut m);
    hessenberg(&mut m);
    hessenberg_qr(&mut m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    /// Characteristic polynomial by the Faddeev–LeVerrier recursion:
    /// returns `c` with `det(zI − A) = Σ c[k] z^k`, `c[n] = 1`.
    fn char_poly(n: usize, a: &[f64]) -> Vec<f64> {
        let mul = |x: &[f64], y: &[f64]| {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..n {
                    for j in 0..n {
                        out[i * n + j] += x[i * n + k] * y[k * n + j];
                    }
                }
            }
            out
        };
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        let mut mk = vec![0.0; n * n];
        for k in 1..=n {
            let mut next = mul(a, &mk);
            for i in 0..n {
                next[i * n + i] += c[n - k + 1];
            }
            mk = next;
            let am = mul(a, &mk);
            let tr: f64 = (0..n).map(|i| am[i * n + i]).sum();
            c[n - k] = -tr / k as f64;
        }
        c
    }

    /// Polynomial roots by simultaneous Durand–Kerner iteration.
    fn roots(c: &[f64]) -> Vec<Complex64> {
        let n = c.len() - 1;
        let eval = |z: Complex64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k);
        let seed = Complex64::new(0.4, 0.9);
        let scale = 1.0 + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * scale).collect();
        for _ in 0..5000 {
            for i in 0..n {
                let mut den = Complex64::new(1.0, 0.0);
                for j in 0..n {
                    if j != i {
                        den *= z[i] - z[j];
                    }
                }
                let zi = z[i];
                z[i] = zi - eval(zi) / den;
            }
        }
        // Newton polish
        for zi in z.iter_mut() {
            for _ in 0..5 {
                let h = 1e-7;
                let d = (eval(*zi + h) - eval(*zi - h)) / (2.0 * h);
                if d.norm() > 0.0 {
                    *zi -= eval(*zi) / d;
                }
            }
        }
        z
    }

    #[test]
    fn two_by_two_generator() {
        let ev = sorted(eigenvalues(2, vec![-2.0, 2.0, 1.0, -1.0]).unwrap());
        assert!((ev[0] - Complex64::new(-3.0, 0.0)).norm() < 1e-12);
        assert!(ev[1].norm() < 1e-12);
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let ev = sorted(eigenvalues(2, vec![0.0, -1.0, 1.0, 0.0]).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn triangular_and_diagonal() {
        let ev = sorted(eigenvalues(3, vec![1.0, 5.0, 7.0, 0.0, -2.0, 3.0, 0.0, 0.0, 4.0]).unwrap());
        let expect = [-2.0, 1.0, 4.0];
        for (z, e) in ev.iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn matches_characteristic_polynomial_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=8 {
            for _ in 0..10 {
                let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let ev = eigenvalues(n, a.clone()).unwrap();
                let oracle = roots(&char_poly(n, &a));
                // match each oracle root to its nearest eigenvalue
                let mut used = vec![false; n];
                for r in &oracle {
                    let (j, d) = ev
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| !used[*j])
                        .map(|(j, z)| (j, (z - r).norm()))
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .unwrap();
                    used[j] = true;
                    assert!(d < 1e-6, "n={n}: root {r} vs nearest eigenvalue at distance {d}");
                }
                let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
                let sum: Complex64 = ev.iter().sum();
                assert!((sum.re - tr).abs() < 1e-10 && sum.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn larger_random_matrix_trace_and_conjugates() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 60;
        let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ev = eigenvalues(n, a.clone()).unwrap();
        let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let sum: Complex64 = ev.iter().sum();
        assert!((sum.re - tr).abs() < 1e-9 && sum.im.abs() < 1e-9);
        for z in &ev {
            assert!(ev.iter().any(|w| (w - z.conj()).norm() < 1e-9));
        }
    }
}
