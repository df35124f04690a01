//! Small dense complex Hermitian linear algebra.

use crate::error::{Error, Result};
use crate::C64;

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Mat {
    pub n: usize,
    pub a: Vec<C64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn adjoint(&self) -> Mat {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    /// `(A + Aᴴ)/2`.
    pub fn hermitize(&mut self) {
        for i in 0..self.n {
            self[(i, i)] = C64::new(self[(i, i)].re, 0.0);
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)].conj());
                self[(i, j)] = v;
                self[(j, i)] = v.conj();
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * self.n + j]
    }
}

/// Lower factor `L` with `L Lᴴ = A`.
pub(crate) fn cholesky(a: &Mat) -> Result<Mat> {
    let n = a.n;
    let mut l = Mat::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::IllConditioned { condition: f64::INFINITY });
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L X = B` column by column.
pub(crate) fn forward_solve(l: &Mat, b: &Mat) -> Mat {
    let n = l.n;
    let mut x = b.clone();
    for c in 0..n {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `Lᴴ X = B` column by column.
pub(crate) fn adjoint_back_solve(l: &Mat, b: &Mat) -> Mat {
    let n = l.n;
    let mut x = b.clone();
    for c in 0..n {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)].conj();
        }
    }
    x
}

/// Eigen-decomposition `A = V diag(λ) Vᴴ` of a Hermitian matrix by cyclic
/// Jacobi rotations. An off-diagonal entry is rotated away while
/// `|a_pq| > tol·sqrt(|a_pp a_qq|)`, which keeps small eigenvalues of graded
/// matrices to high relative accuracy.
pub(crate) fn jacobi_hermitian(a: &Mat, tol: f64) -> Result<(Vec<f64>, Mat)> {
    let n = a.n;
    let mut a = a.clone();
    a.hermitize();
    let mut v = Mat::identity(n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if mag == 0.0 || mag <= tol * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let e = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 { 1.0 } else { -1.0 } / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A ← A J with J_pp = J_qq = c, J_pq = s e, J_qp = −s ē.
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * c - akq * s * e.conj();
                    a[(k, q)] = akp * s * e + akq * c;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c - vkq * s * e.conj();
                    v[(k, q)] = vkp * s * e + vkq * c;
                }
                // A ← Jᴴ A.
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * c - aqk * s * e;
                    a[(q, k)] = apk * s * e.conj() + aqk * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(app - t * mag, 0.0);
                a[(q, q)] = C64::new(aqq + t * mag, 0.0);
            }
        }
        if !rotated {
            return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
        }
    }
    Err(Error::NotConverged { iterations: 100, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Mat {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = C64::new(1.0 / (1.0 + i as f64 + j as f64), (i as f64 - j as f64) * 0.1);
            }
            m[(i, i)] += C64::new(n as f64, 0.0);
        }
        m.hermitize();
        m
    }

    fn mul(a: &Mat, b: &Mat) -> Mat {
        let mut c = Mat::zeros(a.n);
        for i in 0..a.n {
            for j in 0..a.n {
                c[(i, j)] = (0..a.n).map(|k| a[(i, k)] * b[(k, j)]).sum();
            }
        }
        c
    }

    fn max_diff(a: &Mat, b: &Mat) -> f64 {
        a.a.iter().zip(&b.a).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn cholesky_and_solves() {
        let a = sample(7);
        let l = cholesky(&a).unwrap();
        assert!(max_diff(&mul(&l, &l.adjoint()), &a) < 1e-13);
        let x = forward_solve(&l, &a);
        assert!(max_diff(&mul(&l, &x), &a) < 1e-12);
        let y = adjoint_back_solve(&l, &a);
        assert!(max_diff(&mul(&l.adjoint(), &y), &a) < 1e-12);
        let mut neg = a.clone();
        neg[(3, 3)] = C64::new(-1.0, 0.0);
        assert!(cholesky(&neg).is_err());
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = sample(9);
        let (lam, v) = jacobi_hermitian(&a, 1e-15).unwrap();
        assert!(max_diff(&mul(&v.adjoint(), &v), &Mat::identity(9)) < 1e-13);
        let mut d = Mat::zeros(9);
        for (i, l) in lam.iter().enumerate() {
            d[(i, i)] = C64::new(*l, 0.0);
        }
        assert!(max_diff(&mul(&mul(&v, &d), &v.adjoint()), &a) < 1e-12);
    }

    #[test]
    fn graded_eigenvalues_keep_relative_accuracy() {
        // Diagonal 4^{-k} with a small coupling; the exact eigenvalues of each
        // 2×2 block are known.
        let n = 30;
        let mut a = Mat::zeros(n);
        for k in 0..n {
            a[(k, k)] = C64::new(0.25f64.powi(k as i32), 0.0);
        }
        let c = 1e-3 * 0.25f64.powi(n as i32 - 1);
        a[(n - 2, n - 1)] = C64::new(0.0, c);
        a[(n - 1, n - 2)] = C64::new(0.0, -c);
        let (lam, _) = jacobi_hermitian(&a, 1e-15).unwrap();
        let (p, q) = (0.25f64.powi(n as i32 - 2), 0.25f64.powi(n as i32 - 1));
        let mid = 0.5 * (p + q);
        let rad = (0.25 * (p - q) * (p - q) + c * c).sqrt();
        let mut got = lam.clone();
        got.sort_by(f64::total_cmp);
        assert!(((got[0] - (mid - rad)) / (mid - rad)).abs() < 1e-12);
        assert!(((got[1] - (mid + rad)) / (mid + rad)).abs() < 1e-12);
    }
}
