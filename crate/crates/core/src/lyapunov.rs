//! Drift-functional evaluation and tail-limit probes.
//!
//! For a candidate function `U >= 0` and an MH kernel `K`, the central object
//! is the functional
//!
//! `F_U(x) = -ln( \int e^{U(y) - U(x)} a(x, y) dy + r(x) )`.
//!
//! `F_U` diverging at infinity is equivalent to the pair of tail limits
//! `\int a(x, y) dy -> 1` and `\int e^{U(y)-U(x)} a(x, y) dy -> 0`; the probe
//! in this module evaluates both along a radius/direction schedule and turns
//! the trends into holds/fails/inconclusive verdicts. The analytic
//! classifier for the three sampler families lives here too, so numeric
//! probes can be cross-checked against the closed-form regime map.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::MhKernel;
use crate::model::ExpPowerDensity;
use crate::numeric::log_add_exp;
use crate::point::Point;
use crate::quad::integrate_log_adaptive;
use crate::scalar::Scalar;

/// Evaluator type for user-supplied candidates.
pub type CandidateEval<T> = Arc<dyn Fn(&Point<T>) -> T + Send + Sync>;

/// Candidate function `U : S -> [0, inf)`.
///
/// The built-in forms are continuous, hence bounded on compact sets; the
/// boundedness property a candidate must satisfy on compacts therefore
/// holds structurally and is not probed numerically. `Custom` evaluators
/// are trusted to be continuous and nonnegative.
#[derive(Clone)]
pub enum LyapunovCandidate<T> {
    /// U identically zero.
    Zero,
    /// `U(x) = coeff * |x|^power` with positive coefficients.
    RadialPower { coeff: T, power: T },
    /// Arbitrary nonnegative evaluator with a label for reports.
    Custom { label: String, eval: CandidateEval<T> },
}

impl<T: Scalar> LyapunovCandidate<T> {
    pub fn radial_power(coeff: T, power: T) -> Result<Self> {
        if coeff <= T::zero() || power <= T::zero() {
            return Err(Error::InvalidParameter("radial power candidate needs positive coeff and power".into()));
        }
        Ok(LyapunovCandidate::RadialPower { coeff, power })
    }

    /// `U(x) = ln(1 + |x|^2)`, one of the slowly growing probes.
    pub fn log_one_plus_square() -> Self {
        LyapunovCandidate::Custom {
            label: "log1p_square".into(),
            eval: Arc::new(|x: &Point<T>| x.norm_sq().ln_1p()),
        }
    }

    /// The shipped candidate for an independence kernel with proposal
    /// coefficients `(gamma, beta)`: `U(x) = (gamma/2) |x|^beta`.
    pub fn for_independence(gamma: T, beta: T) -> Result<Self> {
        Self::radial_power(gamma / T::of(2.0), beta)
    }

    /// The shipped candidate for a Langevin kernel with step `epsilon`:
    /// `U(x) = |x|^2 / (4 epsilon)`.
    pub fn for_langevin(epsilon: T) -> Result<Self> {
        Self::radial_power(T::one() / (T::of(4.0) * epsilon), T::of(2.0))
    }

    pub fn value(&self, x: &Point<T>) -> T {
        match self {
            LyapunovCandidate::Zero => T::zero(),
            LyapunovCandidate::RadialPower { coeff, power } => *coeff * x.norm().powf(*power),
            LyapunovCandidate::Custom { eval, .. } => (eval)(x),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LyapunovCandidate::Zero => "zero".into(),
            LyapunovCandidate::RadialPower { coeff, power } => {
                format!("radial_power(coeff={coeff};power={power})")
            }
            LyapunovCandidate::Custom { label, .. } => label.clone(),
        }
    }
}

impl<T: Scalar> std::fmt::Debug for LyapunovCandidate<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LyapunovCandidate({})", self.label())
    }
}

/// Log-scale value of `\int e^{U(y) - U(x)} a(x, y) dy` with its relative
/// error estimate. `log_value = +inf` marks a detected divergence.
#[derive(Debug, Clone, Copy)]
pub struct TiltedAcceptance<T> {
    pub log_value: T,
    pub rel_error: T,
}

/// Evaluates the exponentially tilted acceptance integral.
///
/// In one dimension the integration domain starts from the proposal's
/// truncation interval and is widened geometrically until the log-integrand
/// is both negligible and decreasing at the boundary; if it keeps rising the
/// integral is reported divergent instead of silently truncated. Higher
/// dimensions use the deterministic Monte Carlo path.
pub fn tilted_acceptance<T: Scalar>(
    k: &MhKernel<T>,
    u: &LyapunovCandidate<T>,
    x: &Point<T>,
) -> Result<TiltedAcceptance<T>> {
    if k.dim() == 1 {
        tilted_acceptance_quadrature(k, u, x)
    } else {
        tilted_acceptance_mc(k, u, x)
    }
}

fn tilted_acceptance_quadrature<T: Scalar>(
    k: &MhKernel<T>,
    u: &LyapunovCandidate<T>,
    x: &Point<T>,
) -> Result<TiltedAcceptance<T>> {
    let u_x = u.value(x);
    let log_integrand = |y: T| {
        let yp = Point::scalar(y);
        let la = k.log_acceptance_density_raw(x, &yp);
        if la == T::neg_infinity() {
            T::neg_infinity()
        } else {
            u.value(&yp) - u_x + la
        }
    };

    let mut widen = T::one();
    let margin = T::of(45.0);
    for _ in 0..48 {
        let bps = k.integration_breakpoints(x, widen)?;
        let lo = bps[0];
        let hi = *bps.last().unwrap();
        // Coarse peak scan over the mesh.
        let mut peak = T::neg_infinity();
        for w in bps.windows(2) {
            for j in 0..4 {
                let y = w[0] + (w[1] - w[0]) * T::of(j as f64 / 4.0);
                peak = peak.max(log_integrand(y));
            }
        }
        peak = peak.max(log_integrand(hi));
        let mut settled = true;
        for end in [hi, lo] {
            let v_end = log_integrand(end);
            if v_end == T::infinity() {
                return Err(Error::DivergentIntegral { boundary: end.as_f64() });
            }
            // Any boundary carrying non-negligible weight forces a wider
            // domain, whether the integrand is still rising there or just
            // decaying too slowly for the margin.
            if v_end > peak - margin {
                settled = false;
            }
        }
        if !settled {
            widen *= T::of(1.8);
            continue;
        }
        let q = integrate_log_adaptive(log_integrand, &bps, k.quad().rel_tol, k.quad().max_subdivisions)?;
        return Ok(TiltedAcceptance { log_value: q.log_value, rel_error: q.rel_error });
    }
    let bound = k.integration_breakpoints(x, widen)?.last().unwrap().as_f64();
    Err(Error::DivergentIntegral { boundary: bound })
}

fn tilted_acceptance_mc<T: Scalar>(
    k: &MhKernel<T>,
    u: &LyapunovCandidate<T>,
    x: &Point<T>,
) -> Result<TiltedAcceptance<T>> {
    let u_x = u.value(x);
    let mut rng = k.mc_rng(x);
    let n = k.quad().mc_samples;
    let mut log_w = Vec::with_capacity(n);
    for _ in 0..n {
        let y = k.proposal().sample(k.target(), x, &mut rng)?;
        let lw = match k.log_hastings_delta(x, &y) {
            Ok(delta) => u.value(&y) - u_x + delta.min(T::zero()),
            Err(_) => T::neg_infinity(),
        };
        log_w.push(lw);
    }
    let m = log_w.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return Ok(TiltedAcceptance { log_value: T::neg_infinity(), rel_error: T::zero() });
    }
    if m == T::infinity() {
        return Ok(TiltedAcceptance { log_value: T::infinity(), rel_error: T::infinity() });
    }
    let nf = T::of(n as f64);
    let mut sum = T::zero();
    let mut sum_sq = T::zero();
    for lw in &log_w {
        let w = (*lw - m).exp();
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / nf;
    let var = ((sum_sq / nf) - mean * mean).max(T::zero());
    let se = (var / nf).sqrt();
    Ok(TiltedAcceptance { log_value: m + mean.ln(), rel_error: se / mean })
}

/// `F_U(x)` value with a propagated confidence band.
#[derive(Debug, Clone, Copy)]
pub struct FunctionalValue<T> {
    pub value: T,
    pub lower: T,
    pub upper: T,
}

/// The drift functional
/// `F_U(x) = -ln( \int e^{U(y)-U(x)} a(x,y) dy + r(x) )`.
pub fn drift_functional<T: Scalar>(
    k: &MhKernel<T>,
    u: &LyapunovCandidate<T>,
    x: &Point<T>,
) -> Result<FunctionalValue<T>> {
    let tilted = tilted_acceptance(k, u, x)?;
    if tilted.log_value == T::infinity() {
        return Err(Error::DivergentIntegral { boundary: f64::INFINITY });
    }
    let (mass_raw, mass_err) = k.acceptance_mass_detail(x)?;
    let r = (T::one() - mass_raw).max(T::zero());
    let log_total = log_add_exp(tilted.log_value, r.ln());
    let value = -log_total;
    // Error of the sum, expressed through exp of log differences so that
    // extreme scales stay finite.
    let tilted_term = (tilted.log_value - log_total).exp() * tilted.rel_error;
    let r_term = mass_err * (-log_total).exp();
    let band = tilted_term + r_term;
    Ok(FunctionalValue { value, lower: value - band, upper: value + band })
}

/// Outcome of a numeric limit probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitVerdict {
    Holds,
    Fails,
    Inconclusive,
}

impl std::fmt::Display for LimitVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LimitVerdict::Holds => "holds",
            LimitVerdict::Fails => "fails",
            LimitVerdict::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}

/// Thresholds turning finite-radius trends into verdicts. The defaults
/// (proximity 0.02, separation 0.05, trend slack 0.005, stall fraction 0.25)
/// are the shipped operationalization of limits that are only defined
/// asymptotically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeThresholds<T> {
    /// A sequence "reaches" its limit when the last value is this close.
    pub proximity: T,
    /// A sequence is "bounded away" when the gap exceeds this.
    pub separation: T,
    /// Slack allowed when judging monotone trends.
    pub trend_slack: T,
    /// A bounded-away sequence "fails" once its gap to the limit shrank by
    /// less than this fraction over the final radius step.
    pub stall_fraction: T,
}

impl<T: Scalar> Default for ProbeThresholds<T> {
    fn default() -> Self {
        ProbeThresholds {
            proximity: T::of(0.02),
            separation: T::of(0.05),
            trend_slack: T::of(0.005),
            stall_fraction: T::of(0.25),
        }
    }
}

/// Probe data along a radius/direction schedule, with verdicts for the two
/// tail conditions.
#[derive(Debug, Clone)]
pub struct LimitProbeReport<T> {
    pub kernel_tag: String,
    pub candidate_label: String,
    pub radii: Vec<T>,
    pub directions: Vec<Point<T>>,
    /// `acceptance_mass[i][j]`: mass at radius i, direction j.
    pub acceptance_mass: Vec<Vec<T>>,
    pub acceptance_error: Vec<Vec<T>>,
    /// ln of the tilted acceptance integral; `+inf` marks divergence.
    pub exp_integral_log: Vec<Vec<T>>,
    pub exp_integral_error: Vec<Vec<T>>,
    pub verdict_acceptance_to_one: LimitVerdict,
    pub verdict_exp_integral_to_zero: LimitVerdict,
}

impl<T: Scalar> LimitProbeReport<T> {
    /// Linear-scale exp-integral values (may overflow to +inf).
    pub fn exp_integral_values(&self) -> Vec<Vec<T>> {
        self.exp_integral_log
            .iter()
            .map(|row| row.iter().map(|&lv| lv.exp()).collect())
            .collect()
    }
}

/// Evaluates acceptance mass and the tilted integral at `x = radius * v`
/// for every radius/direction pair, in parallel, and assembles verdicts.
pub fn probe_limits<T: Scalar>(
    k: &MhKernel<T>,
    u: &LyapunovCandidate<T>,
    radii: &[T],
    directions: &[Point<T>],
    thresholds: &ProbeThresholds<T>,
) -> Result<LimitProbeReport<T>> {
    if radii.len() < 3 {
        return Err(Error::InvalidProbe("need at least 3 radii".into()));
    }
    if !radii.windows(2).all(|w| w[0] < w[1]) || radii[0] <= T::zero() {
        return Err(Error::InvalidProbe("radii must be positive and strictly increasing".into()));
    }
    if directions.is_empty() {
        return Err(Error::InvalidProbe("need at least one direction".into()));
    }
    for d in directions {
        if d.dim() != k.dim() {
            return Err(Error::DimensionMismatch("direction dimension != kernel dimension".into()));
        }
        if (d.norm() - T::one()).abs() > T::of(1e-12) {
            return Err(Error::InvalidProbe("directions must have unit norm".into()));
        }
    }

    let grid: Vec<(usize, usize)> = (0..radii.len())
        .flat_map(|i| (0..directions.len()).map(move |j| (i, j)))
        .collect();
    type ProbeCell<T> = (usize, usize, T, T, T, T);
    let cells: Vec<Result<ProbeCell<T>>> = grid
        .par_iter()
        .map(|&(i, j)| {
            let x = directions[j].scale(radii[i]);
            let (mass, mass_err) = match k.acceptance_mass_detail(&x) {
                Ok((raw, err)) => (raw.max(T::zero()).min(T::one()), err),
                // Record the failed point; NaN keeps the verdict inconclusive.
                Err(Error::QuadratureNonconvergence { .. }) => (T::nan(), T::nan()),
                Err(e) => return Err(e),
            };
            let (log_e, e_err) = match tilted_acceptance(k, u, &x) {
                Ok(t) => (t.log_value, t.rel_error),
                // A diverging integral is decisive for the probe: record +inf.
                Err(Error::DivergentIntegral { .. }) => (T::infinity(), T::infinity()),
                Err(Error::QuadratureNonconvergence { .. }) => (T::nan(), T::nan()),
                Err(e) => return Err(e),
            };
            Ok((i, j, mass, mass_err, log_e, e_err))
        })
        .collect();

    let nr = radii.len();
    let nd = directions.len();
    let mut acceptance_mass = vec![vec![T::zero(); nd]; nr];
    let mut acceptance_error = vec![vec![T::zero(); nd]; nr];
    let mut exp_integral_log = vec![vec![T::zero(); nd]; nr];
    let mut exp_integral_error = vec![vec![T::zero(); nd]; nr];
    for cell in cells {
        let (i, j, mass, mass_err, log_e, e_err) = cell?;
        acceptance_mass[i][j] = mass;
        acceptance_error[i][j] = mass_err;
        exp_integral_log[i][j] = log_e;
        exp_integral_error[i][j] = e_err;
    }

    let verdict_acceptance_to_one =
        verdict_towards_one(&acceptance_mass, thresholds);
    let exp_linear: Vec<Vec<T>> = exp_integral_log
        .iter()
        .map(|row| row.iter().map(|&lv| lv.exp()).collect())
        .collect();
    let verdict_exp_integral_to_zero = verdict_towards_zero(&exp_linear, thresholds);

    Ok(LimitProbeReport {
        kernel_tag: k.tag(),
        candidate_label: u.label(),
        radii: radii.to_vec(),
        directions: directions.to_vec(),
        acceptance_mass,
        acceptance_error,
        exp_integral_log,
        exp_integral_error,
        verdict_acceptance_to_one,
        verdict_exp_integral_to_zero,
    })
}

/// Verdict for a family of sequences expected to approach a limit.
///
/// Per direction, with `gap_i` the distance from value i to the limit:
/// - holds: the final gap is within `proximity` and the values move toward
///   the limit beyond the median radius (within `trend_slack`);
/// - fails: the final gap exceeds `separation` and the gap shrank by less
///   than `stall_fraction` over the final radius step, i.e. the sequence has
///   visibly stopped converging (this covers flat, stalled-decreasing and
///   outright diverging tails, including +inf from detected divergences);
/// - otherwise inconclusive.
fn verdict_towards_limit<T: Scalar>(
    gaps: &[Vec<T>],
    toward_limit_ok: impl Fn(&[T]) -> bool,
    th: &ProbeThresholds<T>,
) -> LimitVerdict {
    let nr = gaps.len();
    let per_direction: Vec<(bool, bool)> = (0..gaps[0].len())
        .map(|j| {
            let series: Vec<T> = gaps.iter().map(|row| row[j]).collect();
            let last = series[nr - 1];
            let prev = series[nr - 2];
            let close = last.abs() <= th.proximity;
            let monotone = toward_limit_ok(&series);
            let away = last > th.separation;
            // Negated on purpose: a NaN gap must count as stalled, and the
            // NaN-false `away` above already forces the inconclusive path.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            let stalled = !(last < prev * (T::one() - th.stall_fraction));
            (close && monotone, away && stalled)
        })
        .collect();
    if per_direction.iter().all(|&(h, _)| h) {
        LimitVerdict::Holds
    } else if per_direction.iter().all(|&(_, f)| f) {
        LimitVerdict::Fails
    } else {
        LimitVerdict::Inconclusive
    }
}

fn verdict_towards_one<T: Scalar>(values: &[Vec<T>], th: &ProbeThresholds<T>) -> LimitVerdict {
    let gaps: Vec<Vec<T>> = values
        .iter()
        .map(|row| row.iter().map(|&v| T::one() - v).collect())
        .collect();
    let slack = th.trend_slack;
    // Values must be nondecreasing beyond the median radius for "holds".
    let mid = values.len() / 2;
    verdict_towards_limit(
        &gaps,
        move |gap_series: &[T]| gap_series[mid..].windows(2).all(|w| w[1] <= w[0] + slack),
        th,
    )
}

fn verdict_towards_zero<T: Scalar>(values: &[Vec<T>], th: &ProbeThresholds<T>) -> LimitVerdict {
    let slack = th.trend_slack;
    let mid = values.len() / 2;
    verdict_towards_limit(
        values,
        move |series: &[T]| series[mid..].windows(2).all(|w| w[1] <= w[0] + slack),
        th,
    )
}

/// Acceptance mass restricted to increments pointing weakly inward:
/// `\int_{<t, x> <= 0} varpi(x, x + t) Jhat(t) dt` for a random-walk kernel.
///
/// By increment symmetry the inward half carries at most 1/2, and when the
/// total acceptance mass tends to one both halves are forced to 1/2, which
/// is the mass the impossibility argument plays against any candidate U.
pub fn half_space_acceptance<T: Scalar>(k: &MhKernel<T>, x: &Point<T>) -> Result<T> {
    if !k.proposal().is_random_walk() {
        return Err(Error::WrongProposalVariant { expected: "random_walk" });
    }
    if k.dim() == 1 {
        let xc = x.coords()[0];
        let half = k.proposal().half_width_for_tail(k.quad().truncation_mass);
        let (lo, hi) = if xc >= T::zero() { (-half, T::zero()) } else { (T::zero(), half) };
        let (_, scale) = k.proposal().location_scale(k.target(), x)?;
        // The noise density is centered at the increment origin.
        let bps = crate::quad::graded_breakpoints(
            T::zero(),
            scale,
            lo,
            hi,
            &[-xc - xc], // increment reaching the reflected state
        );
        let f = |t: T| {
            let y = Point::scalar(xc + t);
            match k.log_hastings_delta(x, &y) {
                Ok(delta) => {
                    let log_j = k
                        .proposal()
                        .log_density(k.target(), x, &y)
                        .unwrap_or(T::neg_infinity());
                    (delta.min(T::zero()) + log_j).exp()
                }
                Err(_) => T::zero(),
            }
        };
        let q = crate::quad::integrate_adaptive(
            f,
            &bps,
            k.quad().abs_tol,
            T::zero(),
            k.quad().max_subdivisions,
        )?;
        Ok(q.value.max(T::zero()).min(T::one()))
    } else {
        // Monte Carlo over increments with the inward indicator.
        let mut rng = k.mc_rng(x);
        let n = k.quad().mc_samples;
        let mut sum = T::zero();
        for _ in 0..n {
            let y = k.proposal().sample(k.target(), x, &mut rng)?;
            let t = y.sub(x);
            if t.dot(x) > T::zero() {
                continue;
            }
            if let Ok(delta) = k.log_hastings_delta(x, &y) {
                sum += delta.min(T::zero()).exp();
            }
        }
        Ok(sum / T::of(n as f64))
    }
}

/// Lower bound on `inf_x F_U` for an independence kernel with the shipped
/// radial-power candidate: `-ln(1 + C_f)` where `C_f` is the normalized mass
/// of the half-tempered proposal density.
pub fn independence_functional_lower_bound<T: Scalar>(
    proposal_gamma: T,
    proposal_beta: T,
    dim: usize,
) -> Result<T> {
    let full = ExpPowerDensity::new(proposal_gamma, proposal_beta, dim)?;
    let half = ExpPowerDensity::new(proposal_gamma / T::of(2.0), proposal_beta, dim)?;
    let c_f = (half.log_normalizer() - full.log_normalizer()).exp();
    Ok(-(T::one() + c_f).ln())
}

// ---------------------------------------------------------------------------
// Analytic regime classification.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerFamily {
    Imh,
    Mala,
    Rwm,
}

impl std::fmt::Display for SamplerFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SamplerFamily::Imh => "imh",
            SamplerFamily::Mala => "mala",
            SamplerFamily::Rwm => "rwm",
        };
        write!(f, "{s}")
    }
}

/// Parameters the classifier needs per family. The Langevin target reuses
/// the `(eta, alpha)` naming of [`crate::model::TargetSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeParams<T> {
    Imh { eta: T, alpha: T, gamma: T, beta: T },
    Mala { eta: T, alpha: T, epsilon: T },
    Rwm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovExistence {
    Yes,
    No,
    Boundary,
}

impl std::fmt::Display for LyapunovExistence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LyapunovExistence::Yes => "yes",
            LyapunovExistence::No => "no",
            LyapunovExistence::Boundary => "boundary",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdpConclusion {
    Holds,
    Unknown,
}

impl std::fmt::Display for LdpConclusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LdpConclusion::Holds => "ldp_holds",
            LdpConclusion::Unknown => "unknown",
        };
        write!(f, "{s}")
    }
}

/// Outcome of the analytic classification.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeVerdict<T> {
    pub family: SamplerFamily,
    pub existence: LyapunovExistence,
    /// Which analytic criterion fired, in words.
    pub clause: String,
    pub ldp: LdpConclusion,
    /// Dimension-free kernel tag prefix used to match probe reports.
    pub params_tag: String,
    pub params: RegimeParams<T>,
}

/// Decides whether a Lyapunov-type candidate exists for the given family and
/// parameters, and whether the empirical-measure LDP follows.
pub fn classify_regime<T: Scalar>(params: RegimeParams<T>) -> Result<RegimeVerdict<T>> {
    let (family, existence, clause) = match params {
        RegimeParams::Imh { eta, alpha, gamma, beta } => {
            require_positive(&[("eta", eta), ("alpha", alpha), ("gamma", gamma), ("beta", beta)])?;
            let (existence, clause) = if alpha > beta {
                (
                    LyapunovExistence::Yes,
                    "target tail strictly lighter than proposal (alpha > beta): acceptance mass tends to one and the half-tempered radial candidate works".to_string(),
                )
            } else if alpha == beta && eta > gamma {
                (
                    LyapunovExistence::Yes,
                    "equal exponents with eta > gamma: acceptance mass tends to one and the half-tempered radial candidate works".to_string(),
                )
            } else if alpha == beta && eta == gamma {
                (
                    LyapunovExistence::Boundary,
                    "equal exponents and coefficients: the pointwise acceptance limit is one but the strict-inequality criterion excludes it; classified as boundary".to_string(),
                )
            } else {
                (
                    LyapunovExistence::No,
                    "proposal tail lighter than target: acceptance mass tends to zero, no candidate exists".to_string(),
                )
            };
            (SamplerFamily::Imh, existence, clause)
        }
        RegimeParams::Mala { eta, alpha, epsilon } => {
            require_positive(&[("eta", eta), ("alpha", alpha), ("epsilon", epsilon)])?;
            let two = T::of(2.0);
            let product = epsilon * eta;
            let (existence, clause) = if alpha > two {
                (
                    LyapunovExistence::No,
                    "tail exponent above two: the drift overshoots and the acceptance mass limit falls below one".to_string(),
                )
            } else if alpha == two {
                if product < two {
                    (
                        LyapunovExistence::Yes,
                        "quadratic tail with epsilon*eta < 2: acceptance mass tends to one and U = |x|^2/(4 epsilon) works".to_string(),
                    )
                } else if product == two {
                    (
                        LyapunovExistence::No,
                        "quadratic tail at the critical step epsilon*eta = 2 (boundary): acceptance mass tends to 1/2, no candidate exists".to_string(),
                    )
                } else {
                    (
                        LyapunovExistence::No,
                        "quadratic tail with epsilon*eta > 2: acceptance mass tends to zero, no candidate exists".to_string(),
                    )
                }
            } else if alpha > T::one() {
                (
                    LyapunovExistence::Yes,
                    "tail exponent in (1, 2): acceptance mass tends to one and U = |x|^2/(4 epsilon) works".to_string(),
                )
            } else if alpha == T::one() {
                (
                    LyapunovExistence::No,
                    "linear tail (boundary): acceptance mass tends to one yet no candidate satisfies the vanishing tilted integral; geometric ergodicity may still hold".to_string(),
                )
            } else {
                (
                    LyapunovExistence::No,
                    "tail exponent below one: acceptance mass tends to one yet no candidate satisfies the vanishing tilted integral".to_string(),
                )
            };
            (SamplerFamily::Mala, existence, clause)
        }
        RegimeParams::Rwm => (
            SamplerFamily::Rwm,
            LyapunovExistence::No,
            "symmetric-increment proposal: the inward half-space keeps constant-order tilted mass, so no candidate exists for any target".to_string(),
        ),
    };
    let ldp = if existence == LyapunovExistence::Yes { LdpConclusion::Holds } else { LdpConclusion::Unknown };
    Ok(RegimeVerdict { family, existence, clause, ldp, params_tag: params_tag(&params), params })
}

fn params_tag<T: Scalar>(params: &RegimeParams<T>) -> String {
    match params {
        RegimeParams::Imh { eta, alpha, gamma, beta } => {
            format!("imh(gamma={gamma},beta={beta}) target(eta={eta},alpha={alpha})")
        }
        RegimeParams::Mala { eta, alpha, epsilon } => {
            format!("mala(epsilon={epsilon}) target(eta={eta},alpha={alpha})")
        }
        RegimeParams::Rwm => "rwm".to_string(),
    }
}

fn require_positive<T: Scalar>(named: &[(&str, T)]) -> Result<()> {
    for (name, v) in named {
        // Negated on purpose so NaN parameters are rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(*v > T::zero()) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

/// Agreement between the analytic verdict and a numeric probe report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CrossValidation {
    Consistent,
    Inconsistent,
    Inconclusive(String),
}

/// Checks an analytic verdict against a probe report for the same kernel:
/// `yes` must see both numeric verdicts hold; `no` is confirmed by either
/// numeric condition failing; anything inconclusive (or a kernel mismatch,
/// or an analytic boundary) stays inconclusive.
pub fn cross_validate<T: Scalar>(
    verdict: &RegimeVerdict<T>,
    report: &LimitProbeReport<T>,
) -> CrossValidation {
    if !report.kernel_tag.starts_with(&verdict.params_tag) {
        return CrossValidation::Inconclusive(format!(
            "kernel mismatch: verdict for '{}', report for '{}'",
            verdict.params_tag, report.kernel_tag
        ));
    }
    let a = report.verdict_acceptance_to_one;
    let e = report.verdict_exp_integral_to_zero;
    if a == LimitVerdict::Inconclusive || e == LimitVerdict::Inconclusive {
        return CrossValidation::Inconclusive("a probe verdict is inconclusive".into());
    }
    match verdict.existence {
        LyapunovExistence::Yes => {
            if a == LimitVerdict::Holds && e == LimitVerdict::Holds {
                CrossValidation::Consistent
            } else {
                CrossValidation::Inconsistent
            }
        }
        LyapunovExistence::No => {
            if a == LimitVerdict::Fails || e == LimitVerdict::Fails {
                CrossValidation::Consistent
            } else {
                CrossValidation::Inconsistent
            }
        }
        LyapunovExistence::Boundary => {
            CrossValidation::Inconclusive("analytic verdict is a boundary case".into())
        }
    }
}
