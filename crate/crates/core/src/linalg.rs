//! Dense complex linear algebra used by the detector.
//!
//! Factorisations go through nalgebra. The per-coordinate kernels work on raw
//! column-major slices because they run millions of times per trial.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Complex vector stored as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl SplitVec {
    pub fn zeros(n: usize) -> Self {
        SplitVec { re: vec![0.0; n], im: vec![0.0; n] }
    }

    pub fn from_complex(x: &[Complex64]) -> Self {
        SplitVec { re: x.iter().map(|z| z.re).collect(), im: x.iter().map(|z| z.im).collect() }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    /// `Re(a^H self)` for an interleaved `a`.
    #[inline]
    pub fn real_dot(&self, a: &[Complex64]) -> f64 {
        a.iter().zip(self.re.iter().zip(&self.im)).map(|(z, (r, i))| z.re * r + z.im * i).sum()
    }
}

/// Column-major complex matrix with split real and imaginary planes, which
/// vectorises far better than interleaved `Complex64` in the hot loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMatrix {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SplitMatrix {
    pub fn from_cmatrix(m: &CMatrix) -> Self {
        SplitMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            re: m.iter().map(|z| z.re).collect(),
            im: m.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix::from_iterator(
            self.rows,
            self.cols,
            self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `out = A x`.
    #[inline]
    pub fn matvec(&self, x: &[Complex64], out: &mut SplitVec) {
        debug_assert_eq!(x.len(), self.cols);
        let n = self.rows;
        let (or, oi) = (&mut out.re[..n], &mut out.im[..n]);
        or.fill(0.0);
        oi.fill(0.0);
        for ((cr, ci), z) in self.re.chunks_exact(n).zip(self.im.chunks_exact(n)).zip(x) {
            let (xr, xi) = (z.re, z.im);
            for i in 0..n {
                or[i] += cr[i] * xr - ci[i] * xi;
                oi[i] += cr[i] * xi + ci[i] * xr;
            }
        }
    }

    /// `A -= c u u^H` for real `c`.
    #[inline]
    pub fn rank_one_sub(&mut self, c: f64, u: &SplitVec) {
        let n = self.rows;
        let (ur, ui) = (&u.re[..n], &u.im[..n]);
        for (j, (cr, ci)) in self.re.chunks_exact_mut(n).zip(self.im.chunks_exact_mut(n)).enumerate() {
            // s = c * conj(u_j)
            let (sr, si) = (c * ur[j], -c * ui[j]);
            for i in 0..n {
                cr[i] -= ur[i] * sr - ui[i] * si;
                ci[i] -= ur[i] * si + ui[i] * sr;
            }
        }
    }

    /// `u^H A u` for Hermitian `A`.
    #[inline]
    pub fn hermitian_form(&self, u: &SplitVec) -> f64 {
        let n = self.rows;
        let (ur, ui) = (&u.re[..n], &u.im[..n]);
        let mut total = 0.0;
        for (j, (cr, ci)) in self.re.chunks_exact(n).zip(self.im.chunks_exact(n)).enumerate() {
            // d = u^H col_j
            let (mut dr, mut di) = (0.0, 0.0);
            for i in 0..n {
                dr += ur[i] * cr[i] + ui[i] * ci[i];
                di += ur[i] * ci[i] - ui[i] * cr[i];
            }
            total += dr * ur[j] - di * ui[j];
        }
        total
    }

    /// `||A^H u||^2` for a tall factor `A`.
    #[inline]
    pub fn factor_form(&self, u: &SplitVec) -> f64 {
        let n = self.rows;
        let (ur, ui) = (&u.re[..n], &u.im[..n]);
        let mut total = 0.0;
        for (fr, fi) in self.re.chunks_exact(n).zip(self.im.chunks_exact(n)) {
            let (mut dr, mut di) = (0.0, 0.0);
            for i in 0..n {
                dr += fr[i] * ur[i] + fi[i] * ui[i];
                di += fr[i] * ui[i] - fi[i] * ur[i];
            }
            total += dr * dr + di * di;
        }
        total
    }
}

/// `A -= c * u u^H` for an interleaved column-major `n x n` matrix and real `c`.
pub fn rank_one_sub(a: &mut [Complex64], n: usize, c: f64, u: &[Complex64]) {
    for (col, &uj) in a.chunks_exact_mut(n).zip(u) {
        let s = uj.conj() * c;
        for (x, &ui) in col.iter_mut().zip(u) {
            *x -= ui * s;
        }
    }
}

pub fn identity(n: usize, scale: f64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, Complex64::new(scale, 0.0))
}

/// Cholesky factorisation that rejects matrices which are not numerically
/// positive definite. nalgebra's complex variant happily takes square roots of
/// negative pivots, so the factor's diagonal is checked explicitly.
pub fn hpd_cholesky(m: &CMatrix) -> Result<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !d.re.is_finite() || d.re <= 0.0 || d.im.abs() > 1e-8 * d.re {
            return Err(Error::NumericalFailure(format!("non-positive Cholesky pivot {d} at {i}")));
        }
    }
    Ok(chol)
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn hpd_inverse(m: &CMatrix) -> Result<CMatrix> {
    let chol = hpd_cholesky(m)?;
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// `log det` of a Hermitian positive-definite matrix via Cholesky.
pub fn hpd_log_det(m: &CMatrix) -> Result<f64> {
    let chol = hpd_cholesky(m)?;
    let l = chol.l_dirty();
    Ok((0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// Replaces `m` with `(m + m^H) / 2`.
pub fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)].im = 0.0;
        for i in j + 1..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// `||a - b||_F / ||b||_F`.
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMatrix {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, crate::rng::Domain::Channel, &[]);
        let x = CMatrix::from_fn(n, n + 2, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        &x * x.adjoint() + identity(n, 0.5)
    }

    #[test]
    fn kernels_agree_with_nalgebra() {
        let n = 7;
        let a = sample(n, 1);
        let u: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let uv = nalgebra::DVector::from_column_slice(&u);
        let us = SplitVec::from_complex(&u);
        let split = SplitMatrix::from_cmatrix(&a);
        assert_eq!(split.to_cmatrix(), a);

        let mut out = SplitVec::zeros(n);
        split.matvec(&u, &mut out);
        let expected = &a * &uv;
        for i in 0..n {
            assert!((out.get(i) - expected[i]).norm() < 1e-12);
        }

        let form = split.hermitian_form(&us);
        let expected = (uv.adjoint() * &a * &uv)[(0, 0)];
        assert!((form - expected.re).abs() < 1e-9 * expected.norm());

        let dot = (uv.adjoint() * &uv)[(0, 0)].re;
        assert!((us.real_dot(&u) - dot).abs() < 1e-12);

        let f = CMatrix::from_fn(n, 3, |i, j| Complex64::new((i * j) as f64, i as f64 - j as f64));
        let ff = SplitMatrix::from_cmatrix(&(&f * f.adjoint()));
        let fs = SplitMatrix::from_cmatrix(&f);
        assert!((fs.factor_form(&us) - ff.hermitian_form(&us)).abs() < 1e-9);

        let expected = &a - (&uv * uv.adjoint()) * Complex64::new(0.25, 0.0);
        let mut b = split.clone();
        b.rank_one_sub(0.25, &us);
        assert!(relative_frobenius(&b.to_cmatrix(), &expected) < 1e-14);
        let mut c = a.clone();
        rank_one_sub(c.as_mut_slice(), n, 0.25, &u);
        assert!(relative_frobenius(&c, &expected) < 1e-14);
    }

    #[test]
    fn inverse_and_log_det() {
        let a = sample(6, 2);
        let inv = hpd_inverse(&a).unwrap();
        assert!(relative_frobenius(&(&a * &inv), &identity(6, 1.0)) < 1e-12);
        let det = a.clone().lu().determinant();
        assert!((hpd_log_det(&a).unwrap() - det.re.ln()).abs() < 1e-10);
        assert!(hpd_inverse(&identity(3, -1.0)).is_err());
        assert!(hpd_log_det(&identity(3, 0.0)).is_err());
    }
}
