//! The Metropolis-Hastings transition kernel
//! `K(x, dy) = a(x, y) dy + r(x) delta_x(dy)`
//! with `a(x, y) = varpi(x, y) J(y | x)` and `r(x) = 1 - \int a(x, y) dy`,
//! plus chain simulation and empirical measures.
//!
//! All acceptance quantities are computed in log space:
//! `varpi = exp(min(0, Delta))` where `Delta` is a sum of log terms, so
//! underflow maps to zero acceptance, never to NaN.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{ProposalSpec, ProposalVariant, TargetSpec};
use crate::point::Point;
use crate::quad::{graded_breakpoints, integrate_adaptive, Quadrature};
use crate::scalar::Scalar;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Controls for the acceptance-mass integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig<T> {
    /// Absolute error target for one-dimensional adaptive quadrature.
    pub abs_tol: T,
    /// Relative error target for log-scaled integrals.
    pub rel_tol: T,
    /// Proposal tail mass allowed outside the integration domain.
    pub truncation_mass: T,
    /// Subdivision budget for the adaptive pass.
    pub max_subdivisions: usize,
    /// Sample count for the Monte Carlo path used when dim > 1.
    pub mc_samples: usize,
    /// Base seed for the deterministic Monte Carlo path.
    pub mc_seed: u64,
}

impl<T: Scalar> Default for QuadratureConfig<T> {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: T::of(1e-10),
            rel_tol: T::of(1e-8),
            truncation_mass: T::of(1e-12),
            max_subdivisions: 400,
            mc_samples: 200_000,
            mc_seed: 0,
        }
    }
}

impl<T: Scalar> QuadratureConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.abs_tol <= T::zero() || self.rel_tol <= T::zero() {
            return Err(Error::InvalidParameter("quadrature tolerances must be positive".into()));
        }
        if self.truncation_mass <= T::zero() || self.truncation_mass > T::of(1e-6) {
            return Err(Error::InvalidParameter(
                "truncation mass must lie in (0, 1e-6]".into(),
            ));
        }
        if self.max_subdivisions == 0 || self.mc_samples == 0 {
            return Err(Error::InvalidParameter("subdivision and sample budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Target + proposal + quadrature controls.
#[derive(Debug, Clone, PartialEq)]
pub struct MhKernel<T> {
    target: TargetSpec<T>,
    proposal: ProposalSpec<T>,
    quad: QuadratureConfig<T>,
}

impl<T: Scalar> MhKernel<T> {
    pub fn new(target: TargetSpec<T>, proposal: ProposalSpec<T>, quad: QuadratureConfig<T>) -> Result<Self> {
        if target.dim() != proposal.dim() {
            return Err(Error::DimensionMismatch(format!(
                "target dim {} != proposal dim {}",
                target.dim(),
                proposal.dim()
            )));
        }
        quad.validate()?;
        Ok(MhKernel { target, proposal, quad })
    }

    pub fn target(&self) -> &TargetSpec<T> {
        &self.target
    }

    pub fn proposal(&self) -> &ProposalSpec<T> {
        &self.proposal
    }

    pub fn quad(&self) -> &QuadratureConfig<T> {
        &self.quad
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// Identifier used to match probe reports against analytic verdicts.
    pub fn tag(&self) -> String {
        self.proposal.tag(&self.target)
    }

    /// Log acceptance odds:
    /// `Delta = ln pi(y) + ln J(x|y) - ln pi(x) - ln J(y|x)`.
    ///
    /// Errors if `J(y|x) = 0` (ratio undefined) or a Langevin drift is
    /// undefined at `x` or `y`.
    pub fn log_hastings_delta(&self, x: &Point<T>, y: &Point<T>) -> Result<T> {
        let log_forward = self.proposal.log_density(&self.target, x, y)?;
        if log_forward == T::neg_infinity() {
            return Err(Error::ZeroProposalDensity);
        }
        let log_backward = self.proposal.log_density(&self.target, y, x)?;
        // Grouped so that a symmetric proposal cancels exactly in floating
        // point and an uphill move yields ratio 1 with no round-off.
        Ok((self.target.log_density_unnorm(y) - self.target.log_density_unnorm(x))
            + (log_backward - log_forward))
    }

    /// Acceptance probability `varpi(x, y) = min(1, exp(Delta))`.
    pub fn hastings_ratio(&self, x: &Point<T>, y: &Point<T>) -> Result<T> {
        let delta = self.log_hastings_delta(x, y)?;
        Ok(delta.min(T::zero()).exp())
    }

    /// Density of the accepted-move part: `a(x, y) = varpi(x, y) J(y|x)`.
    pub fn acceptance_density(&self, x: &Point<T>, y: &Point<T>) -> Result<T> {
        let delta = self.log_hastings_delta(x, y)?;
        let log_forward = self.proposal.log_density(&self.target, x, y)?;
        Ok((delta.min(T::zero()) + log_forward).exp())
    }

    /// `ln a(x, y)`, with `-inf` where the proposal has no mass. Intended for
    /// integrands: per-point domain errors map to zero contribution.
    pub fn log_acceptance_density_raw(&self, x: &Point<T>, y: &Point<T>) -> T {
        let log_forward = match self.proposal.log_density(&self.target, x, y) {
            Ok(v) => v,
            Err(_) => return T::neg_infinity(),
        };
        if log_forward == T::neg_infinity() {
            return T::neg_infinity();
        }
        let log_backward = match self.proposal.log_density(&self.target, y, x) {
            Ok(v) => v,
            Err(_) => return T::neg_infinity(),
        };
        let delta = (self.target.log_density_unnorm(y) - self.target.log_density_unnorm(x))
            + (log_backward - log_forward);
        delta.min(T::zero()) + log_forward
    }

    /// Integration interval and breakpoints covering all but
    /// `truncation_mass` of `J(. | x)`, for the one-dimensional quadratures.
    pub(crate) fn integration_breakpoints(&self, x: &Point<T>, widen: T) -> Result<Vec<T>> {
        debug_assert_eq!(self.dim(), 1);
        let (center, scale) = self.proposal.location_scale(&self.target, x)?;
        let c = center.coords()[0];
        let half = self.proposal.half_width_for_tail(self.quad.truncation_mass) * widen;
        let xc = x.coords()[0];
        let anchors = [T::zero(), xc, -xc];
        Ok(graded_breakpoints(c, scale, c - half, c + half, &anchors))
    }

    /// Total acceptance probability from `x`:
    /// `\int a(x, y) dy`, clamped to [0, 1].
    pub fn acceptance_mass(&self, x: &Point<T>) -> Result<T> {
        let (raw, _err) = self.acceptance_mass_detail(x)?;
        Ok(raw.max(T::zero()).min(T::one()))
    }

    /// Unclamped acceptance mass together with the reported error estimate
    /// (quadrature estimate in d = 1, Monte Carlo standard error otherwise).
    pub fn acceptance_mass_detail(&self, x: &Point<T>) -> Result<(T, T)> {
        // Validate drift upfront so integrand errors cannot hide it.
        self.proposal.location_scale(&self.target, x)?;
        if self.dim() == 1 {
            let bps = self.integration_breakpoints(x, T::one())?;
            let f = |y: T| {
                let ld = self.log_acceptance_density_raw(x, &Point::scalar(y));
                if ld == T::neg_infinity() {
                    T::zero()
                } else {
                    ld.exp()
                }
            };
            let q: Quadrature<T> =
                integrate_adaptive(f, &bps, self.quad.abs_tol, T::zero(), self.quad.max_subdivisions)?;
            Ok((q.value, q.error))
        } else {
            Ok(self.acceptance_mass_mc(x))
        }
    }

    /// Monte Carlo estimate of the acceptance mass as the proposal-average of
    /// `varpi(x, Y)`. Deterministic: the RNG seed is derived from the
    /// configured base seed and the coordinates of `x`.
    fn acceptance_mass_mc(&self, x: &Point<T>) -> (T, T) {
        let mut rng = self.mc_rng(x);
        let n = self.quad.mc_samples;
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        for _ in 0..n {
            let y = match self.proposal.sample(&self.target, x, &mut rng) {
                Ok(y) => y,
                Err(_) => continue,
            };
            let w = match self.log_hastings_delta(x, &y) {
                Ok(delta) => delta.min(T::zero()).exp(),
                Err(_) => T::zero(),
            };
            sum += w;
            sum_sq += w * w;
        }
        let nf = T::of(n as f64);
        let mean = sum / nf;
        let var = ((sum_sq / nf) - mean * mean).max(T::zero());
        let se = (var / nf).sqrt();
        (mean, se)
    }

    pub(crate) fn mc_rng(&self, x: &Point<T>) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.quad.mc_seed ^ x.seed_fingerprint())
    }

    /// Rejection probability `r(x) = 1 - \int a(x, y) dy`.
    pub fn rejection_prob(&self, x: &Point<T>) -> Result<T> {
        Ok(T::one() - self.acceptance_mass(x)?)
    }

    // ------------------------------------------------------------------
    // Langevin increment frame.
    //
    // With the Gaussian proposal centered at the drifted state, the change
    // of variables t = y - x + (eps eta alpha / 2) |x|^{alpha-2} x turns the
    // acceptance integral into \int min(1, e^{g(x,t)}) Jhat(t) dt with Jhat
    // a centered Gaussian. These entry points expose g and the transformed
    // integrand for cross-checking the direct quadrature.
    // ------------------------------------------------------------------

    fn langevin_epsilon(&self) -> Result<T> {
        match self.proposal.variant() {
            ProposalVariant::Langevin { epsilon } => Ok(*epsilon),
            _ => Err(Error::WrongProposalVariant { expected: "langevin" }),
        }
    }

    /// The proposed state reached from `x` by the noise increment `t`.
    pub fn state_from_increment(&self, x: &Point<T>, t: &Point<T>) -> Result<Point<T>> {
        let mean = self.proposal.langevin_mean(&self.target, x)?;
        Ok(mean.add(t))
    }

    /// Log acceptance odds in the increment frame.
    ///
    /// `g(x,t) = -c (1 - p/2)(|y|^p - |x|^p)
    ///           - (eps/8)(c p)^2 (|y|^{2p-2} - |x|^{2p-2})
    ///           - (c p / 2)(|y|^{p-2} - |x|^{p-2}) <x, y>`
    /// with `y = y(x,t)`, `c = eta`, `p = alpha`, and the inner product
    /// expanded as `<x,y> = |x|^2 - (eps c p / 2) |x|^p + <t, x>`.
    pub fn log_accept_ratio_increment(&self, x: &Point<T>, t: &Point<T>) -> Result<T> {
        let eps = self.langevin_epsilon()?;
        let c = self.target.eta();
        let p = self.target.alpha();
        let y = self.state_from_increment(x, t)?;
        let xn = x.norm();
        let yn = y.norm();
        let two = T::of(2.0);

        // <x, y> via the drift identity; exact up to round-off.
        let ip = xn * xn - eps * c * p / two * xn.powf(p) + t.dot(x);

        let term1 = -c * (T::one() - p / two) * (yn.powf(p) - xn.powf(p));
        let term2 = -eps / T::of(8.0) * (c * p) * (c * p)
            * (yn.powf(two * p - two) - xn.powf(two * p - two));
        // |y|^{p-2} <x,y> -> 0 as |y| -> 0 for p > 1; guard the 0 * inf case.
        let pow_y = if yn == T::zero() { T::zero() } else { yn.powf(p - two) * ip };
        let pow_x = if xn == T::zero() { T::zero() } else { xn.powf(p - two) * ip };
        let term3 = -c * p / two * (pow_y - pow_x);
        Ok(term1 + term2 + term3)
    }

    /// ln of the centered Gaussian noise density `Jhat(t)`.
    pub fn log_noise_density(&self, t: &Point<T>) -> Result<T> {
        let eps = self.langevin_epsilon()?;
        let d = T::of(self.dim() as f64);
        Ok(-d * T::of(0.5) * (T::of(LN_2PI) + eps.ln()) - t.norm_sq() / (T::of(2.0) * eps))
    }

    /// Acceptance density in the increment frame:
    /// `min(1, exp(g(x,t))) Jhat(t)`.
    pub fn acceptance_density_increment(&self, x: &Point<T>, t: &Point<T>) -> Result<T> {
        let g = self.log_accept_ratio_increment(x, t)?;
        let log_noise = self.log_noise_density(t)?;
        Ok((g.min(T::zero()) + log_noise).exp())
    }

    /// Acceptance mass computed in the increment frame (d = 1), for
    /// cross-validation against `acceptance_mass`.
    pub fn acceptance_mass_increment_frame(&self, x: &Point<T>) -> Result<T> {
        let eps = self.langevin_epsilon()?;
        if self.dim() != 1 {
            return Err(Error::DimensionMismatch("increment-frame quadrature requires dim = 1".into()));
        }
        let sd = eps.sqrt();
        let half = crate::numeric::gaussian_tail_z(self.quad.truncation_mass) * sd;
        // The acceptance kink sits where |y(x,t)| = |x|.
        let mean = self.proposal.langevin_mean(&self.target, x)?.coords()[0];
        let xc = x.coords()[0];
        let anchors = [xc - mean, -xc - mean];
        let bps = graded_breakpoints(T::zero(), sd, -half, half, &anchors);
        let f = |tv: T| {
            self.acceptance_density_increment(x, &Point::scalar(tv)).unwrap_or(T::zero())
        };
        let q = integrate_adaptive(f, &bps, self.quad.abs_tol, T::zero(), self.quad.max_subdivisions)?;
        Ok(q.value.max(T::zero()).min(T::one()))
    }

    /// Runs the chain for `n` steps from `x0`. Deterministic in `seed`.
    pub fn simulate(&self, x0: &Point<T>, n: usize, seed: u64) -> Result<ChainTrace<T>> {
        if x0.dim() != self.dim() {
            return Err(Error::DimensionMismatch("initial state has wrong dimension".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("simulation needs n >= 1 steps".into()));
        }
        if self.target.log_density_unnorm(x0) == T::neg_infinity() {
            return Err(Error::ZeroTargetDensity);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut states = Vec::with_capacity(n + 1);
        let mut accepted = Vec::with_capacity(n);
        states.push(x0.clone());
        let mut current = x0.clone();
        for _ in 0..n {
            let proposal = self.proposal.sample(&self.target, &current, &mut rng)?;
            let delta = self.log_hastings_delta(&current, &proposal)?;
            let u = T::sample_uniform_01(&mut rng);
            let accept = if delta >= T::zero() { true } else { u.ln() < delta };
            if accept {
                current = proposal;
            }
            accepted.push(accept);
            states.push(current.clone());
        }
        Ok(ChainTrace { states, accepted, seed })
    }
}

/// A realized chain path with its accept/reject flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace<T> {
    /// Visited states; `states.len() = accepted.len() + 1`.
    pub states: Vec<Point<T>>,
    /// Whether step i accepted its proposal.
    pub accepted: Vec<bool>,
    /// Seed the path was generated from.
    pub seed: u64,
}

impl<T: Scalar> ChainTrace<T> {
    /// Structural invariants: length bookkeeping and frozen states on
    /// rejected steps.
    pub fn validate(&self) -> Result<()> {
        if self.states.len() != self.accepted.len() + 1 {
            return Err(Error::InvalidParameter("trace length mismatch".into()));
        }
        for (i, &acc) in self.accepted.iter().enumerate() {
            if !acc && self.states[i + 1] != self.states[i] {
                return Err(Error::InvalidParameter(format!("state moved on rejected step {i}")));
            }
        }
        Ok(())
    }

    pub fn acceptance_rate(&self) -> T {
        let total = self.accepted.len().max(1);
        let acc = self.accepted.iter().filter(|&&a| a).count();
        T::of(acc as f64) / T::of(total as f64)
    }
}

/// Support of an empirical measure: raw points or grid cells.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSupport<T> {
    Points(Vec<Point<T>>),
    GridCells { spec: GridSpec<T>, indices: Vec<usize> },
}

/// `L^n = (1/n) sum of point masses at the first n states`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<T> {
    pub support: MeasureSupport<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> EmpiricalMeasure<T> {
    /// Dense weight vector over all grid cells (grid-binned measures only).
    pub fn dense_weights(&self) -> Option<Vec<T>> {
        match &self.support {
            MeasureSupport::GridCells { spec, indices } => {
                let mut w = vec![T::zero(); spec.n_cells()];
                for (i, &cell) in indices.iter().enumerate() {
                    w[cell] += self.weights[i];
                }
                Some(w)
            }
            MeasureSupport::Points(_) => None,
        }
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// Builds the empirical measure of a trace over its first `len - 1` states
/// (a trace of `n` steps carries `n + 1` states and induces `L^n`).
/// With a grid, mass is accumulated per cell; otherwise equal atoms are
/// merged per distinct state.
pub fn empirical_measure<T: Scalar>(
    trace: &ChainTrace<T>,
    grid: Option<&GridSpec<T>>,
) -> EmpiricalMeasure<T> {
    let n = if trace.states.len() > 1 { trace.states.len() - 1 } else { 1 };
    let states = &trace.states[..n];
    let unit = T::one() / T::of(n as f64);
    match grid {
        Some(spec) => {
            let mut mass = std::collections::BTreeMap::new();
            for s in states {
                *mass.entry(spec.cell_index(s)).or_insert(T::zero()) += unit;
            }
            let (indices, weights): (Vec<_>, Vec<_>) = mass.into_iter().unzip();
            EmpiricalMeasure { support: MeasureSupport::GridCells { spec: spec.clone(), indices }, weights }
        }
        None => {
            let mut support: Vec<Point<T>> = Vec::new();
            let mut weights: Vec<T> = Vec::new();
            for s in states {
                match support.iter().position(|p| p == s) {
                    Some(i) => weights[i] += unit,
                    None => {
                        support.push(s.clone());
                        weights.push(unit);
                    }
                }
            }
            EmpiricalMeasure { support: MeasureSupport::Points(support), weights }
        }
    }
}
