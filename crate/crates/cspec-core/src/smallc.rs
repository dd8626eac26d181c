//! Fixed-capacity complex vectors and matrices for ODE systems of dimension 2 to 4.
//!
//! The per-mode systems in this crate are 2x2, 3x3 or 4x4; stack-allocated
//! storage with a runtime `dim` keeps the integrator monomorphic and free of
//! heap traffic in the step loop.

use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub const MAX_DIM: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CVec {
    dim: usize,
    data: [Complex64; MAX_DIM],
}

impl CVec {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dim must be in 1..=4");
        CVec { dim, data: [ZERO; MAX_DIM] }
    }

    pub fn from_slice(v: &[Complex64]) -> Self {
        let mut out = CVec::zeros(v.len());
        out.data[..v.len()].copy_from_slice(v);
        out
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut out = CVec::zeros(dim);
        out[i] = Complex64::new(1.0, 0.0);
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.data[..self.dim].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.data[..self.dim].iter()
    }

    /// self += scale * other. Operates on all lanes; lanes beyond `dim` are
    /// zero by construction, which keeps the loop branch-free.
    pub fn axpy(&mut self, scale: f64, other: &CVec) {
        debug_assert_eq!(self.dim, other.dim);
        for i in 0..MAX_DIM {
            self.data[i] += scale * other.data[i];
        }
    }
}

impl Index<usize> for CVec {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        debug_assert!(i < self.dim);
        &self.data[i]
    }
}

impl IndexMut<usize> for CVec {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        debug_assert!(i < self.dim);
        &mut self.data[i]
    }
}

impl Add for CVec {
    type Output = CVec;
    fn add(mut self, rhs: CVec) -> CVec {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.data[i] += rhs.data[i];
        }
        self
    }
}

impl Sub for CVec {
    type Output = CVec;
    fn sub(mut self, rhs: CVec) -> CVec {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.data[i] -= rhs.data[i];
        }
        self
    }
}

impl Mul<f64> for CVec {
    type Output = CVec;
    fn mul(mut self, s: f64) -> CVec {
        for i in 0..MAX_DIM {
            self.data[i] *= s;
        }
        self
    }
}

impl Mul<Complex64> for CVec {
    type Output = CVec;
    fn mul(mut self, s: Complex64) -> CVec {
        for i in 0..self.dim {
            self.data[i] *= s;
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat {
    dim: usize,
    data: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dim must be in 1..=4");
        CMat { dim, data: [[ZERO; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMat::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from row-major real entries.
    pub fn from_rows_real(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut m = CMat::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            debug_assert_eq!(row.len(), dim);
            for (j, &x) in row.iter().enumerate() {
                m.data[i][j] = Complex64::new(x, 0.0);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul_vec(&self, v: &CVec) -> CVec {
        debug_assert_eq!(self.dim, v.dim);
        let mut out = CVec::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = ZERO;
            for j in 0..self.dim {
                acc += self.data[i][j] * v.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    pub fn mul_mat(&self, other: &CMat) -> CMat {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = CMat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = ZERO;
                for k in 0..self.dim {
                    acc += self.data[i][k] * other.data[k][j];
                }
                out.data[i][j] = acc;
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.data[i][j].norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn det2(&self) -> Complex64 {
        debug_assert_eq!(self.dim, 2);
        self.data[0][0] * self.data[1][1] - self.data[0][1] * self.data[1][0]
    }

    /// 2x2 inverse computed as adjugate/det. Exact up to roundoff when det = 1.
    pub fn inv2(&self) -> CMat {
        debug_assert_eq!(self.dim, 2);
        let det = self.det2();
        let mut m = CMat::zeros(2);
        m.data[0][0] = self.data[1][1] / det;
        m.data[0][1] = -self.data[0][1] / det;
        m.data[1][0] = -self.data[1][0] / det;
        m.data[1][1] = self.data[0][0] / det;
        m
    }

    pub fn column(&self, j: usize) -> CVec {
        let mut v = CVec::zeros(self.dim);
        for i in 0..self.dim {
            v.data[i] = self.data[i][j];
        }
        v
    }

    pub fn set_column(&mut self, j: usize, v: &CVec) {
        debug_assert_eq!(self.dim, v.dim);
        for i in 0..self.dim {
            self.data[i][j] = v.data[i];
        }
    }

    /// self += scale * other
    pub fn axpy(&mut self, scale: f64, other: &CMat) {
        debug_assert_eq!(self.dim, other.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] += scale * other.data[i][j];
            }
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i][j]
    }
}

impl Add for CMat {
    type Output = CMat;
    fn add(mut self, rhs: CMat) -> CMat {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] += rhs.data[i][j];
            }
        }
        self
    }
}

impl Sub for CMat {
    type Output = CMat;
    fn sub(mut self, rhs: CMat) -> CMat {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] -= rhs.data[i][j];
            }
        }
        self
    }
}

impl Mul<f64> for CMat {
    type Output = CMat;
    fn mul(mut self, s: f64) -> CMat {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] *= s;
            }
        }
        self
    }
}
