//! Floating-point abstraction used throughout the crate.
//!
//! All numeric code is generic over [`Scalar`], which is `f32` or `f64`.
//! The acceptance-mass and rate-function tolerances shipped with the default
//! configurations assume `f64`; `f32` instantiations compile and run but the
//! tight tolerances (1e-10 and below) are only meaningful in double precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Floating-point scalar: `f32` or `f64`.
///
/// Base random draws are trait methods so that generic code never has to
/// restate `rand_distr` bounds.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Shorthand for converting an `f64` literal into `Self`.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("literal representable in scalar type")
    }

    /// Lossy view as `f64` (used for hashing, printing and diagnostics).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// One standard normal draw.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw on [0, 1).
    fn sample_uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One Gamma(shape, 1) draw.
    fn sample_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        StandardNormal.sample(rng)
    }

    fn sample_uniform_01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.random()
    }

    fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
        Gamma::new(shape, 1.0).expect("valid gamma shape").sample(rng)
    }
}

impl Scalar for f32 {
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f32 {
        StandardNormal.sample(rng)
    }

    fn sample_uniform_01<R: Rng + ?Sized>(rng: &mut R) -> f32 {
        rng.random()
    }

    fn sample_gamma<R: Rng + ?Sized>(shape: f32, rng: &mut R) -> f32 {
        Gamma::new(shape, 1.0f32).expect("valid gamma shape").sample(rng)
    }
}
