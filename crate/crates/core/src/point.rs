//! Points of the state space S = R^d.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point of the state space, stored as a coordinate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T>(pub Vec<T>);

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point must have dimension >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("point coordinates must be finite".into()));
        }
        Ok(Point(coords))
    }

    /// One-dimensional point.
    pub fn scalar(x: T) -> Self {
        Point(vec![x])
    }

    /// The origin of R^d.
    pub fn origin(dim: usize) -> Self {
        Point(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn norm_sq(&self) -> T {
        self.0.iter().map(|&c| c * c).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    pub fn scale(&self, s: T) -> Self {
        Point(self.0.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(&a, &b)| a - b).collect())
    }

    /// Rescales to unit norm. Errors on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(Error::InvalidParameter("cannot normalize the zero vector".into()));
        }
        Ok(self.scale(T::one() / n))
    }

    /// Stable 64-bit fingerprint of the coordinates, used to derive
    /// deterministic per-point Monte Carlo seeds.
    pub fn seed_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &c in &self.0 {
            let bits = c.as_f64().to_bits();
            h ^= bits;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        h
    }
}
