//! Fixed-capacity Euclidean vectors.
//!
//! Phase-space dimensions are small (d = 3..=8) and chosen at run time, so
//! vectors live inline on the stack instead of in a heap `Vec`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    data: [f64; MAX_DIM],
    dim: usize,
}

impl Vector {
    /// The zero vector of dimension `dim`.
    ///
    /// Panics if `dim` exceeds [`MAX_DIM`].
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "dimension {dim} exceeds MAX_DIM = {MAX_DIM}");
        Vector {
            data: [0.0; MAX_DIM],
            dim,
        }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut v = Vector::zeros(xs.len());
        v.data[..xs.len()].copy_from_slice(xs);
        v
    }

    /// Unit vector along axis `k`.
    pub fn axis(dim: usize, k: usize) -> Self {
        let mut v = Vector::zeros(dim);
        v.data[k] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.dim]
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.as_slice().iter().all(|&x| x == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Vector) -> Vector {
        let mut out = *self;
        for (o, b) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *o += s * b;
        }
        out
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        (*self - *other).norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.as_slice()[k]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.as_mut_slice()[k]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(mut self, rhs: Vector) -> Vector {
        self += rhs;
        self
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.as_mut_slice().iter_mut().zip(rhs.as_slice()) {
            *a += b;
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(mut self, rhs: Vector) -> Vector {
        self -= rhs;
        self
    }
}

impl SubAssign for Vector {
    fn sub_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.as_mut_slice().iter_mut().zip(rhs.as_slice()) {
            *a -= b;
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(mut self, s: f64) -> Vector {
        for a in self.as_mut_slice() {
            *a *= s;
        }
        self
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    fn mul(self, v: Vector) -> Vector {
        v * self
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self * -1.0
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}
