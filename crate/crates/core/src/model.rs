//! Target and proposal density families.
//!
//! The target is always of the exponential-power form
//! `pi(x) ∝ exp(-eta |x|^alpha)`. Three proposal mechanisms are provided:
//! an independence proposal with density `f(y) ∝ exp(-gamma |y|^beta)`, a
//! random-walk proposal with a symmetric increment density, and a Langevin
//! proposal whose Gaussian mean is drifted by the target's log-gradient.
//!
//! The Langevin case reuses the target's `(eta, alpha)` parameters as the
//! tail coefficient/exponent pair; configuration and reports use that naming
//! everywhere rather than a second symbol set.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{gaussian_tail_z, ln_gamma, reg_gamma_lower, reg_gamma_upper};
use crate::point::Point;
use crate::scalar::Scalar;

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Normalized exponential-power density `exp(-coeff |x|^exponent) / Z` on R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPowerDensity<T> {
    coeff: T,
    exponent: T,
    dim: usize,
    log_normalizer: T,
}

impl<T: Scalar> ExpPowerDensity<T> {
    pub fn new(coeff: T, exponent: T, dim: usize) -> Result<Self> {
        if coeff <= T::zero() || !coeff.is_finite() {
            return Err(Error::InvalidParameter(format!("tail coefficient must be positive, got {coeff}")));
        }
        if exponent <= T::zero() || !exponent.is_finite() {
            return Err(Error::InvalidParameter(format!("tail exponent must be positive, got {exponent}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        let log_normalizer = Self::log_normalizer_for(coeff, exponent, dim);
        Ok(ExpPowerDensity { coeff, exponent, dim, log_normalizer })
    }

    /// ln of Z = \int exp(-c |x|^p) dx over R^d, by the radial formula
    /// Z = (2 pi^{d/2} / Gamma(d/2)) * Gamma(d/p) / (p c^{d/p}).
    fn log_normalizer_for(coeff: T, exponent: T, dim: usize) -> T {
        let d = T::of(dim as f64);
        let half_d = d / T::of(2.0);
        T::of(std::f64::consts::LN_2) + half_d * T::of(LN_PI) - ln_gamma(half_d)
            + ln_gamma(d / exponent)
            - exponent.ln()
            - (d / exponent) * coeff.ln()
    }

    pub fn coeff(&self) -> T {
        self.coeff
    }

    pub fn exponent(&self) -> T {
        self.exponent
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cached ln Z.
    pub fn log_normalizer(&self) -> T {
        self.log_normalizer
    }

    pub fn log_density_unnorm(&self, x: &Point<T>) -> T {
        -self.coeff * x.norm().powf(self.exponent)
    }

    pub fn log_density(&self, x: &Point<T>) -> T {
        self.log_density_unnorm(x) - self.log_normalizer
    }

    /// P(|X| > r) for X distributed with this density.
    pub fn radial_tail_mass(&self, r: T) -> T {
        if r <= T::zero() {
            return T::one();
        }
        let shape = T::of(self.dim as f64) / self.exponent;
        reg_gamma_upper(shape, self.coeff * r.powf(self.exponent))
    }

    /// Smallest radius whose tail mass is at most `tail`, by bisection on the
    /// monotone radial tail.
    pub fn radius_for_tail(&self, tail: T) -> T {
        debug_assert!(tail > T::zero() && tail < T::one());
        let mut hi = T::one();
        while self.radial_tail_mass(hi) > tail {
            hi *= T::of(2.0);
            if hi > T::of(1e12) {
                return hi;
            }
        }
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) * T::of(0.5);
            if self.radial_tail_mass(mid) > tail {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) < hi * T::of(1e-12) {
                break;
            }
        }
        hi
    }

    /// CDF in one dimension (the density is symmetric about the origin).
    pub fn cdf_1d(&self, y: T) -> T {
        debug_assert_eq!(self.dim, 1);
        let shape = T::one() / self.exponent;
        let half = T::of(0.5);
        let p = reg_gamma_lower(shape, self.coeff * y.abs().powf(self.exponent));
        if y >= T::zero() {
            half + half * p
        } else {
            half - half * p
        }
    }

    /// Draws from the normalized density: radius via a gamma variate,
    /// direction uniform on the sphere.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point<T> {
        let shape = T::of(self.dim as f64) / self.exponent;
        let g = T::sample_gamma(shape, rng);
        let radius = (g / self.coeff).powf(T::one() / self.exponent);
        let dir = sample_unit_direction(self.dim, rng);
        dir.scale(radius)
    }
}

/// Uniform direction on the unit sphere in R^d.
pub fn sample_unit_direction<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Point<T> {
    loop {
        let coords: Vec<T> = (0..dim).map(|_| T::sample_standard_normal(rng)).collect();
        let p = Point(coords);
        let n = p.norm();
        if n > T::of(1e-12) {
            return p.scale(T::one() / n);
        }
    }
}

/// Exponential-power target `pi(x) ∝ exp(-eta |x|^alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec<T> {
    density: ExpPowerDensity<T>,
}

impl<T: Scalar> TargetSpec<T> {
    pub fn new(eta: T, alpha: T, dim: usize) -> Result<Self> {
        Ok(TargetSpec { density: ExpPowerDensity::new(eta, alpha, dim)? })
    }

    pub fn eta(&self) -> T {
        self.density.coeff()
    }

    pub fn alpha(&self) -> T {
        self.density.exponent()
    }

    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    pub fn density(&self) -> &ExpPowerDensity<T> {
        &self.density
    }

    /// ln pi(x) up to the additive normalizing constant: -eta |x|^alpha.
    pub fn log_density_unnorm(&self, x: &Point<T>) -> T {
        self.density.log_density_unnorm(x)
    }

    /// Gradient of ln pi: -eta alpha |x|^{alpha-2} x.
    ///
    /// At the origin the continuous extension (zero vector) is used when
    /// alpha > 1; for alpha <= 1 the gradient is undefined there and a domain
    /// error is returned.
    pub fn grad_log_density(&self, x: &Point<T>) -> Result<Point<T>> {
        let n = x.norm();
        if n == T::zero() {
            if self.alpha() > T::one() {
                return Ok(Point::origin(self.dim()));
            }
            return Err(Error::GradientUndefined { alpha: self.alpha().as_f64() });
        }
        let factor = -self.eta() * self.alpha() * n.powf(self.alpha() - T::of(2.0));
        Ok(x.scale(factor))
    }
}

/// Symmetric increment density for the random-walk proposal.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementDensity<T> {
    /// Mean-zero Gaussian with covariance scale^2 * I.
    Gaussian { scale: T },
    /// Uniform on the ball of the given radius.
    UniformBall { radius: T },
}

impl<T: Scalar> IncrementDensity<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            IncrementDensity::Gaussian { scale } if *scale > T::zero() => Ok(()),
            IncrementDensity::UniformBall { radius } if *radius > T::zero() => Ok(()),
            _ => Err(Error::InvalidParameter("increment scale/radius must be positive".into())),
        }
    }

    /// ln of the increment density at t (normalized). -inf outside the ball.
    pub fn log_density(&self, t: &Point<T>, dim: usize) -> T {
        match self {
            IncrementDensity::Gaussian { scale } => {
                let d = T::of(dim as f64);
                let var = *scale * *scale;
                -d * T::of(0.5) * (T::of(LN_2PI) + var.ln()) - t.norm_sq() / (T::of(2.0) * var)
            }
            IncrementDensity::UniformBall { radius } => {
                if t.norm() <= *radius {
                    -log_ball_volume::<T>(dim, *radius)
                } else {
                    T::neg_infinity()
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Point<T> {
        match self {
            IncrementDensity::Gaussian { scale } => {
                let coords = (0..dim).map(|_| T::sample_standard_normal(rng) * *scale);
                Point(coords.collect())
            }
            IncrementDensity::UniformBall { radius } => {
                let dir = sample_unit_direction(dim, rng);
                let u = T::sample_uniform_01(rng);
                let r = *radius * u.powf(T::one() / T::of(dim as f64));
                dir.scale(r)
            }
        }
    }

    /// Half-width h such that P(|T| > h) <= tail.
    pub fn half_width_for_tail(&self, dim: usize, tail: T) -> T {
        match self {
            IncrementDensity::Gaussian { scale } => {
                // Per-coordinate bound plus a union over dimensions.
                let per = tail / T::of(dim as f64);
                gaussian_tail_z(per) * *scale
            }
            IncrementDensity::UniformBall { radius } => *radius,
        }
    }

    /// One-dimensional CDF of the increment.
    pub fn cdf_1d(&self, t: T) -> T {
        match self {
            IncrementDensity::Gaussian { scale } => crate::numeric::std_normal_cdf(t / *scale),
            IncrementDensity::UniformBall { radius } => {
                let r = *radius;
                if t <= -r {
                    T::zero()
                } else if t >= r {
                    T::one()
                } else {
                    (t + r) / (T::of(2.0) * r)
                }
            }
        }
    }
}

fn log_ball_volume<T: Scalar>(dim: usize, radius: T) -> T {
    let d = T::of(dim as f64);
    let half_d = d / T::of(2.0);
    half_d * T::of(LN_PI) - ln_gamma(half_d + T::one()) + d * radius.ln()
}

/// Proposal mechanism paired with a dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum ProposalVariant<T> {
    /// State-independent draws from an exponential-power density.
    Independent(ExpPowerDensity<T>),
    /// Symmetric random-walk increments.
    RandomWalk(IncrementDensity<T>),
    /// Langevin proposal: Gaussian centered at the drifted current state.
    Langevin { epsilon: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSpec<T> {
    dim: usize,
    variant: ProposalVariant<T>,
}

impl<T: Scalar> ProposalSpec<T> {
    pub fn independent(gamma: T, beta: T, dim: usize) -> Result<Self> {
        Ok(ProposalSpec { dim, variant: ProposalVariant::Independent(ExpPowerDensity::new(gamma, beta, dim)?) })
    }

    pub fn random_walk(increment: IncrementDensity<T>, dim: usize) -> Result<Self> {
        increment.validate()?;
        Ok(ProposalSpec { dim, variant: ProposalVariant::RandomWalk(increment) })
    }

    pub fn langevin(epsilon: T, dim: usize) -> Result<Self> {
        if epsilon <= T::zero() || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {epsilon}")));
        }
        Ok(ProposalSpec { dim, variant: ProposalVariant::Langevin { epsilon } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> &ProposalVariant<T> {
        &self.variant
    }

    pub fn is_langevin(&self) -> bool {
        matches!(self.variant, ProposalVariant::Langevin { .. })
    }

    pub fn is_random_walk(&self) -> bool {
        matches!(self.variant, ProposalVariant::RandomWalk(_))
    }

    /// Mean of the Langevin proposal: x + (epsilon/2) grad ln pi(x).
    pub fn langevin_mean(&self, target: &TargetSpec<T>, x: &Point<T>) -> Result<Point<T>> {
        match &self.variant {
            ProposalVariant::Langevin { epsilon } => {
                let grad = target.grad_log_density(x)?;
                Ok(x.add(&grad.scale(*epsilon / T::of(2.0))))
            }
            _ => Err(Error::WrongProposalVariant { expected: "langevin" }),
        }
    }

    /// ln J(y | x), including the normalization constant.
    pub fn log_density(&self, target: &TargetSpec<T>, x: &Point<T>, y: &Point<T>) -> Result<T> {
        match &self.variant {
            ProposalVariant::Independent(f) => Ok(f.log_density(y)),
            ProposalVariant::RandomWalk(inc) => Ok(inc.log_density(&y.sub(x), self.dim)),
            ProposalVariant::Langevin { epsilon } => {
                let mean = self.langevin_mean(target, x)?;
                let d = T::of(self.dim as f64);
                let dev = y.sub(&mean);
                Ok(-d * T::of(0.5) * (T::of(LN_2PI) + epsilon.ln())
                    - dev.norm_sq() / (T::of(2.0) * *epsilon))
            }
        }
    }

    /// Draws Y ~ J(. | x).
    pub fn sample<R: Rng + ?Sized>(
        &self,
        target: &TargetSpec<T>,
        x: &Point<T>,
        rng: &mut R,
    ) -> Result<Point<T>> {
        match &self.variant {
            ProposalVariant::Independent(f) => Ok(f.sample(rng)),
            ProposalVariant::RandomWalk(inc) => Ok(x.add(&inc.sample(self.dim, rng))),
            ProposalVariant::Langevin { epsilon } => {
                let mean = self.langevin_mean(target, x)?;
                let sd = epsilon.sqrt();
                let coords = (0..self.dim)
                    .map(|i| mean.coords()[i] + T::sample_standard_normal(rng) * sd);
                Ok(Point(coords.collect()))
            }
        }
    }

    /// Center and scale of J(. | x), used to seed quadrature domains.
    pub fn location_scale(&self, target: &TargetSpec<T>, x: &Point<T>) -> Result<(Point<T>, T)> {
        match &self.variant {
            ProposalVariant::Independent(f) => {
                let scale = (T::one() / f.coeff()).powf(T::one() / f.exponent());
                Ok((Point::origin(self.dim), scale))
            }
            ProposalVariant::RandomWalk(inc) => {
                let scale = match inc {
                    IncrementDensity::Gaussian { scale } => *scale,
                    IncrementDensity::UniformBall { radius } => *radius,
                };
                Ok((x.clone(), scale))
            }
            ProposalVariant::Langevin { epsilon } => {
                Ok((self.langevin_mean(target, x)?, epsilon.sqrt()))
            }
        }
    }

    /// Half-width h around the proposal center with tail mass <= `tail`.
    pub fn half_width_for_tail(&self, tail: T) -> T {
        match &self.variant {
            ProposalVariant::Independent(f) => f.radius_for_tail(tail),
            ProposalVariant::RandomWalk(inc) => inc.half_width_for_tail(self.dim, tail),
            ProposalVariant::Langevin { epsilon } => {
                let per = tail / T::of(self.dim as f64);
                gaussian_tail_z(per) * epsilon.sqrt()
            }
        }
    }

    /// One-dimensional CDF of J(. | x) at y, for sampler/density agreement
    /// checks. Only defined for dim = 1.
    pub fn cdf_1d(&self, target: &TargetSpec<T>, x: &Point<T>, y: T) -> Result<T> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch("cdf_1d requires dim = 1".into()));
        }
        match &self.variant {
            ProposalVariant::Independent(f) => Ok(f.cdf_1d(y)),
            ProposalVariant::RandomWalk(inc) => Ok(inc.cdf_1d(y - x.coords()[0])),
            ProposalVariant::Langevin { epsilon } => {
                let mean = self.langevin_mean(target, x)?;
                Ok(crate::numeric::std_normal_cdf((y - mean.coords()[0]) / epsilon.sqrt()))
            }
        }
    }

    /// Short tag used to match probe reports against analytic verdicts.
    pub fn tag(&self, target: &TargetSpec<T>) -> String {
        let t = format!("target(eta={},alpha={})", target.eta(), target.alpha());
        let d = target.dim();
        match &self.variant {
            ProposalVariant::Independent(f) => {
                format!("imh(gamma={},beta={}) {t} d={d}", f.coeff(), f.exponent())
            }
            ProposalVariant::RandomWalk(inc) => match inc {
                IncrementDensity::Gaussian { scale } => format!("rwm gaussian(scale={scale}) {t} d={d}"),
                IncrementDensity::UniformBall { radius } => format!("rwm ball(radius={radius}) {t} d={d}"),
            },
            ProposalVariant::Langevin { epsilon } => format!("mala(epsilon={epsilon}) {t} d={d}"),
        }
    }
}
