//! Total-variation decay and drift/minorization diagnostics on finite
//! chains, plus the bridge from a verified drift certificate to a lower
//! bound on the drift functional of the corresponding kernel.

use crate::error::{Error, Result};
use crate::kernel::MhKernel;
use crate::linalg::second_eigenvalue_modulus;
use crate::lyapunov::{drift_functional, LyapunovCandidate};
use crate::point::Point;
use crate::rate::GridChain;
use crate::scalar::Scalar;

/// `(1/2) sum |p_i - q_i|`; on finite spaces this equals the supremum over
/// sets of the measure difference.
pub fn tv_distance<T: Scalar>(p: &[T], q: &[T]) -> T {
    debug_assert_eq!(p.len(), q.len());
    let half = T::of(0.5);
    p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<T>() * half
}

/// Total-variation decay of `q^i(x0, .)` toward the stationary vector, with
/// a geometric fit `tv_i ~ R r^{-i}` over the tail half of the iterates.
#[derive(Debug, Clone)]
pub struct TvDecayReport<T> {
    pub iterates: Vec<usize>,
    pub tv: Vec<T>,
    /// Fitted geometric rate r (> 1 means decay).
    pub fitted_rate: T,
    /// Fitted prefactor R.
    pub fitted_prefactor: T,
    /// ln-scale residuals of the fit, NaN where tv underflowed the floor.
    pub fit_residuals: Vec<T>,
}

const TV_FLOOR: f64 = 1e-12;
const GAP_REQUIRED: f64 = 1e-10;

/// Runs the decay diagnostic. Requires a unique stationary vector, checked
/// through the spectral gap estimate `1 - |lambda_2| > 1e-10`.
pub fn tv_decay<T: Scalar>(chain: &GridChain<T>, x0: usize, i_max: usize) -> Result<TvDecayReport<T>> {
    let m = chain.n_states();
    if x0 >= m {
        return Err(Error::InvalidParameter("initial state out of range".into()));
    }
    if i_max < 4 {
        return Err(Error::InvalidParameter("need i_max >= 4 iterates".into()));
    }
    // A singular stationary solve means several invariant vectors exist.
    let pi = chain.stationary().map_err(|_| Error::NonUniqueStationary {
        gap: 0.0,
        required: GAP_REQUIRED,
    })?;
    let lam2 = second_eigenvalue_modulus(chain.matrix(), &pi);
    let gap = T::one() - lam2;
    if gap <= T::of(GAP_REQUIRED) {
        return Err(Error::NonUniqueStationary {
            gap: gap.as_f64(),
            required: GAP_REQUIRED,
        });
    }

    let mut dist = vec![T::zero(); m];
    dist[x0] = T::one();
    let mut iterates = Vec::with_capacity(i_max + 1);
    let mut tv = Vec::with_capacity(i_max + 1);
    iterates.push(0);
    tv.push(tv_distance(&dist, &pi));
    for i in 1..=i_max {
        dist = chain.matrix().left_mul(&dist);
        iterates.push(i);
        tv.push(tv_distance(&dist, &pi));
    }

    // Least-squares fit of ln tv against i over the tail half, skipping
    // values at the floating-point floor.
    let start = iterates.len() / 2;
    let pts: Vec<(T, T)> = (start..iterates.len())
        .filter(|&idx| tv[idx] > T::of(TV_FLOOR))
        .map(|idx| (T::of(iterates[idx] as f64), tv[idx].ln()))
        .collect();
    let (fitted_rate, fitted_prefactor) = if pts.len() >= 2 {
        let n = T::of(pts.len() as f64);
        let sx: T = pts.iter().map(|p| p.0).sum();
        let sy: T = pts.iter().map(|p| p.1).sum();
        let sxx: T = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: T = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        let slope = (n * sxy - sx * sy) / denom;
        let intercept = (sy - slope * sx) / n;
        ((-slope).exp(), intercept.exp())
    } else {
        // Mixing hit the floor before the window: decay faster than
        // resolvable.
        (T::infinity(), T::one())
    };

    let fit_residuals = iterates
        .iter()
        .zip(&tv)
        .map(|(&i, &t)| {
            if t > T::of(TV_FLOOR) && fitted_rate.is_finite() {
                t.ln() - (fitted_prefactor.ln() - T::of(i as f64) * fitted_rate.ln())
            } else {
                T::nan()
            }
        })
        .collect();

    Ok(TvDecayReport { iterates, tv, fitted_rate, fitted_prefactor, fit_residuals })
}

/// The function `V >= 1` of a drift certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftFunction<T> {
    /// Constant `V = c >= 1`.
    Const(T),
    /// `V(x) = exp(coeff |x|^power)`.
    ExpRadialPower { coeff: T, power: T },
    /// State-indexed values for finite chains.
    Grid(Vec<T>),
}

impl<T: Scalar> DriftFunction<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DriftFunction::Const(c) => *c >= T::one(),
            DriftFunction::ExpRadialPower { coeff, power } => *coeff > T::zero() && *power > T::zero(),
            DriftFunction::Grid(v) => !v.is_empty() && v.iter().all(|&x| x >= T::one()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("drift function must satisfy V >= 1".into()))
        }
    }

    pub fn eval(&self, x: &Point<T>) -> T {
        match self {
            DriftFunction::Const(c) => *c,
            DriftFunction::ExpRadialPower { coeff, power } => (*coeff * x.norm().powf(*power)).exp(),
            DriftFunction::Grid(_) => panic!("grid drift function evaluated at a continuous point"),
        }
    }

    /// `U = ln V` as a candidate for the drift functional.
    pub fn log_candidate(&self) -> Result<LyapunovCandidate<T>> {
        match self {
            DriftFunction::Const(c) => {
                if *c == T::one() {
                    Ok(LyapunovCandidate::Zero)
                } else {
                    let c = *c;
                    Ok(LyapunovCandidate::Custom {
                        label: format!("const({c})"),
                        eval: std::sync::Arc::new(move |_x: &Point<T>| c.ln()),
                    })
                }
            }
            DriftFunction::ExpRadialPower { coeff, power } => {
                LyapunovCandidate::radial_power(*coeff, *power)
            }
            DriftFunction::Grid(_) => Err(Error::InvalidParameter(
                "grid drift function has no continuous candidate".into(),
            )),
        }
    }
}

/// Membership test for the small-set candidate C.
#[derive(Debug, Clone, PartialEq)]
pub enum SmallSet<T> {
    /// `{ |x| <= radius }` for continuous kernels.
    Ball { radius: T },
    /// Explicit states of a finite chain.
    States(Vec<usize>),
}

impl<T: Scalar> SmallSet<T> {
    pub fn contains_point(&self, x: &Point<T>) -> bool {
        match self {
            SmallSet::Ball { radius } => x.norm() <= *radius,
            SmallSet::States(_) => false,
        }
    }

    pub fn contains_state(&self, i: usize) -> bool {
        match self {
            SmallSet::Ball { .. } => false,
            SmallSet::States(s) => s.contains(&i),
        }
    }
}

/// Candidate drift condition `\int V dK <= lambda V + b 1_C`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCertificate<T> {
    pub v: DriftFunction<T>,
    pub lambda: T,
    pub b: T,
    pub small_set: SmallSet<T>,
}

impl<T: Scalar> DriftCertificate<T> {
    pub fn new(v: DriftFunction<T>, lambda: T, b: T, small_set: SmallSet<T>) -> Result<Self> {
        v.validate()?;
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(Error::InvalidParameter("lambda must lie in (0, 1)".into()));
        }
        if b < T::zero() {
            return Err(Error::InvalidParameter("b must be nonnegative".into()));
        }
        Ok(DriftCertificate { v, lambda, b, small_set })
    }
}

/// Result of checking a drift inequality at probe locations.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftCheck<T> {
    Verified,
    Violated { at: String, lhs: T, rhs: T },
}

/// Verifies the drift inequality for a continuous kernel at each probe
/// point, through `\int V dK = exp(U(x) - F_U(x))` with `U = ln V`.
pub fn check_drift<T: Scalar>(
    k: &MhKernel<T>,
    cert: &DriftCertificate<T>,
    probe_points: &[Point<T>],
) -> Result<DriftCheck<T>> {
    let u = cert.v.log_candidate()?;
    for x in probe_points {
        let f = drift_functional(k, &u, x)?;
        let u_x = u.value(x);
        let lhs = (u_x - f.value).exp();
        let lhs_upper = (u_x - f.lower).exp();
        let tol = (lhs_upper - lhs).abs() + T::of(1e-9) * lhs.max(T::one());
        let indicator = if cert.small_set.contains_point(x) { T::one() } else { T::zero() };
        let rhs = cert.lambda * cert.v.eval(x) + cert.b * indicator;
        if lhs > rhs + tol {
            return Ok(DriftCheck::Violated { at: format!("{:?}", x.coords()), lhs, rhs });
        }
    }
    Ok(DriftCheck::Verified)
}

/// Verifies the drift inequality on a finite chain (all states probed).
pub fn check_drift_grid<T: Scalar>(
    chain: &GridChain<T>,
    cert: &DriftCertificate<T>,
) -> Result<DriftCheck<T>> {
    let v = match &cert.v {
        DriftFunction::Grid(v) => {
            if v.len() != chain.n_states() {
                return Err(Error::DimensionMismatch("drift vector length != states".into()));
            }
            v.clone()
        }
        _ => {
            cert.v.validate()?;
            chain.centers().iter().map(|c| cert.v.eval(c)).collect()
        }
    };
    if v.iter().any(|&x| x < T::one()) {
        return Err(Error::InvalidParameter("drift function must satisfy V >= 1".into()));
    }
    for i in 0..chain.n_states() {
        let lhs: T = (0..chain.n_states()).map(|j| chain.transition(i, j) * v[j]).sum();
        let indicator = if cert.small_set.contains_state(i) { T::one() } else { T::zero() };
        let rhs = cert.lambda * v[i] + cert.b * indicator;
        if lhs > rhs + T::of(1e-12) * rhs.max(T::one()) {
            return Ok(DriftCheck::Violated { at: format!("state {i}"), lhs, rhs });
        }
    }
    Ok(DriftCheck::Verified)
}

/// Minorization outcome: the common component of the j-step rows over C.
#[derive(Debug, Clone, PartialEq)]
pub enum Minorization<T> {
    Found { epsilon: T, nu: Vec<T> },
    None,
}

/// Computes `epsilon = sum_y min_{x in C} P^j(x, y)` and the normalized
/// common component `nu`.
pub fn check_minorization<T: Scalar>(
    chain: &GridChain<T>,
    c_states: &[usize],
    j: usize,
) -> Result<Minorization<T>> {
    if j == 0 {
        return Err(Error::InvalidParameter("minorization step j must be >= 1".into()));
    }
    let m = chain.n_states();
    if c_states.is_empty() || c_states.iter().any(|&i| i >= m) {
        return Err(Error::InvalidParameter("small-set states out of range".into()));
    }
    let mut power = chain.matrix().clone();
    for _ in 1..j {
        power = power.matmul(chain.matrix());
    }
    let mut nu = vec![T::infinity(); m];
    for &x in c_states {
        for (y, entry) in nu.iter_mut().enumerate() {
            *entry = entry.min(power.get(x, y));
        }
    }
    let epsilon: T = nu.iter().copied().sum();
    if epsilon > T::zero() {
        for w in &mut nu {
            *w /= epsilon;
        }
        Ok(Minorization::Found { epsilon, nu })
    } else {
        Ok(Minorization::None)
    }
}

/// Outcome of the drift-certificate functional bound.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalBound<T> {
    /// Every probed `F_U` value stayed above `-ln(lambda + b)`.
    BoundHolds { bound: T, min_functional: T },
    Violated { at: String, functional: T, bound: T },
}

/// A verified drift certificate lower-bounds the drift functional of the
/// kernel: with `U = ln V`, `inf_x F_U(x) >= -ln(lambda + b)`. The
/// certificate is re-verified on the probe points first; an unverified
/// certificate is refused.
pub fn functional_bound_from_drift<T: Scalar>(
    k: &MhKernel<T>,
    cert: &DriftCertificate<T>,
    probe_points: &[Point<T>],
) -> Result<FunctionalBound<T>> {
    match check_drift(k, cert, probe_points)? {
        DriftCheck::Verified => {}
        DriftCheck::Violated { at, lhs, rhs } => {
            return Err(Error::CertificateUnverified(format!(
                "drift inequality fails at {at}: lhs {lhs} > rhs {rhs}"
            )));
        }
    }
    let u = cert.v.log_candidate()?;
    let bound = -(cert.lambda + cert.b).ln();
    let mut min_functional = T::infinity();
    for x in probe_points {
        let f = drift_functional(k, &u, x)?;
        let tol = (f.value - f.lower).abs() + T::of(1e-9);
        if f.value < bound - tol {
            return Ok(FunctionalBound::Violated {
                at: format!("{:?}", x.coords()),
                functional: f.value,
                bound,
            });
        }
        min_functional = min_functional.min(f.value);
    }
    Ok(FunctionalBound::BoundHolds { bound, min_functional })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::QuadratureConfig;
    use crate::model::{ProposalSpec, TargetSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn two_state() -> GridChain<f64> {
        GridChain::from_transitions(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    fn matched_imh_std_normal() -> MhKernel<f64> {
        let target = TargetSpec::new(0.5, 2.0, 1).unwrap();
        let proposal = ProposalSpec::independent(0.5, 2.0, 1).unwrap();
        MhKernel::new(target, proposal, QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn tv_distance_examples() {
        assert_eq!(tv_distance(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_relative_eq!(tv_distance(&[1.0, 0.0], &[0.5, 0.5]), 0.5);
    }

    #[test]
    fn tv_decay_two_state_matches_eigenvalue() {
        let chain = two_state();
        let report = tv_decay(&chain, 0, 60).unwrap();
        assert!(report.tv[0] <= 1.0);
        // Second eigenvalue is 0.7, so the decay rate is 1/0.7.
        assert_relative_eq!(report.fitted_rate, 1.0 / 0.7, max_relative = 0.01);
        // Residuals in the fit window are tiny: the decay is exactly
        // geometric for a two-state chain.
        for (&i, &r) in report.iterates.iter().zip(&report.fit_residuals) {
            if i >= 30 && !r.is_nan() {
                assert!(r.abs() < 1e-5, "residual {r} at iterate {i}");
            }
        }
    }

    #[test]
    fn tv_decay_requires_unique_stationary() {
        // Disconnected: the stationary solve is singular.
        let chain =
            GridChain::from_transitions(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            tv_decay(&chain, 0, 10),
            Err(Error::NonUniqueStationary { .. })
        ));
        // Nearly disconnected: unique stationary but a spectral gap below
        // the required threshold.
        let chain = GridChain::from_transitions(vec![
            vec![1.0 - 1e-12, 1e-12],
            vec![1e-12, 1.0 - 1e-12],
        ])
        .unwrap();
        assert!(matches!(
            tv_decay(&chain, 0, 10),
            Err(Error::NonUniqueStationary { .. })
        ));
    }

    #[test]
    fn constant_drift_function_fails_off_small_set() {
        // V = 1: off C the inequality reads 1 <= lambda < 1.
        let k = matched_imh_std_normal();
        let cert = DriftCertificate::new(
            DriftFunction::Const(1.0),
            0.5,
            5.0,
            SmallSet::Ball { radius: 1.0 },
        )
        .unwrap();
        let probes = vec![Point::scalar(0.5), Point::scalar(3.0)];
        match check_drift(&k, &cert, &probes).unwrap() {
            DriftCheck::Violated { lhs, rhs, .. } => {
                assert_relative_eq!(lhs, 1.0, epsilon = 1e-6);
                assert_relative_eq!(rhs, 0.5, epsilon = 1e-12);
            }
            DriftCheck::Verified => panic!("expected a violation off the small set"),
        }
    }

    #[test]
    fn exponential_drift_verified_for_matched_imh() {
        // \int V dK = E[e^{|Y|}] for a standard normal proposal, a constant
        // ~2.7744 independent of x.
        let k = matched_imh_std_normal();
        let cert = DriftCertificate::new(
            DriftFunction::ExpRadialPower { coeff: 1.0, power: 1.0 },
            0.5,
            3.0,
            SmallSet::Ball { radius: 2.0 },
        )
        .unwrap();
        let probes: Vec<Point<f64>> =
            [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0].iter().map(|&x| Point::scalar(x)).collect();
        assert_eq!(check_drift(&k, &cert, &probes).unwrap(), DriftCheck::Verified);
    }

    #[test]
    fn grid_drift_closed_form_two_state() {
        let chain = two_state();
        // V = (1, 2): row sums of V against P are (1.1, 1.8).
        let cert = DriftCertificate::new(
            DriftFunction::Grid(vec![1.0, 2.0]),
            0.8,
            0.5,
            SmallSet::States(vec![0, 1]),
        )
        .unwrap();
        assert_eq!(check_drift_grid(&chain, &cert).unwrap(), DriftCheck::Verified);

        // Shrinking C to state 0 leaves the second row exposed:
        // 1.8 > 0.8 * 2.
        let tight = DriftCertificate::new(
            DriftFunction::Grid(vec![1.0, 2.0]),
            0.8,
            0.5,
            SmallSet::States(vec![0]),
        )
        .unwrap();
        match check_drift_grid(&chain, &tight).unwrap() {
            DriftCheck::Violated { lhs, rhs, .. } => {
                assert_relative_eq!(lhs, 1.8);
                assert_relative_eq!(rhs, 1.6);
            }
            DriftCheck::Verified => panic!("expected violation"),
        }
    }

    #[test]
    fn minorization_single_state_is_total() {
        let chain = two_state();
        match check_minorization(&chain, &[0], 1).unwrap() {
            Minorization::Found { epsilon, nu } => {
                assert_relative_eq!(epsilon, 1.0);
                assert_relative_eq!(nu[0], 0.9);
                assert_relative_eq!(nu[1], 0.1);
            }
            Minorization::None => panic!("single-state set is always small"),
        }
    }

    #[test]
    fn minorization_improves_with_more_steps() {
        // Column 1 vanishes over C at j = 1 but fills in at j = 2.
        let chain = GridChain::from_transitions(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap();
        let c = vec![0, 1];
        let e1 = match check_minorization(&chain, &c, 1).unwrap() {
            Minorization::Found { epsilon, .. } => epsilon,
            Minorization::None => 0.0,
        };
        let e2 = match check_minorization(&chain, &c, 2).unwrap() {
            Minorization::Found { epsilon, .. } => epsilon,
            Minorization::None => 0.0,
        };
        assert_relative_eq!(e1, 0.5);
        assert!(e2 > e1, "j=2 overlap {e2} not larger than j=1 overlap {e1}");
    }

    #[test]
    fn minorization_matched_imh_discretized_full_space() {
        use crate::grid::GridSpec;
        use crate::rate::discretize;
        let k = matched_imh_std_normal();
        let grid = GridSpec::new(vec![-5.0], vec![5.0], vec![12]).unwrap();
        let chain = discretize(&k, &grid).unwrap();
        let all: Vec<usize> = (0..chain.n_states()).collect();
        match check_minorization(&chain, &all, 1).unwrap() {
            Minorization::Found { epsilon, .. } => {
                assert!(epsilon > 0.5, "rows share the proposal component, epsilon = {epsilon}");
            }
            Minorization::None => panic!("matched IMH rows overlap"),
        }
    }

    #[test]
    fn functional_bound_trivial_arithmetic() {
        // lambda + b = 1 makes the bound zero; V = 1 on a full-space ball
        // verifies trivially and F_0 = 0 >= 0 - tol.
        let k = matched_imh_std_normal();
        let cert = DriftCertificate::new(
            DriftFunction::Const(1.0),
            0.5,
            0.5,
            SmallSet::Ball { radius: 1e12 },
        )
        .unwrap();
        let probes = vec![Point::scalar(0.5), Point::scalar(4.0)];
        match functional_bound_from_drift(&k, &cert, &probes).unwrap() {
            FunctionalBound::BoundHolds { bound, min_functional } => {
                assert_abs_diff_eq!(bound, 0.0, epsilon = 1e-14);
                assert!(min_functional >= -1e-9);
            }
            FunctionalBound::Violated { .. } => panic!("trivial bound must hold"),
        }
    }

    #[test]
    fn functional_bound_verified_imh_certificate() {
        let k = matched_imh_std_normal();
        let cert = DriftCertificate::new(
            DriftFunction::ExpRadialPower { coeff: 1.0, power: 1.0 },
            0.5,
            3.0,
            SmallSet::Ball { radius: 2.0 },
        )
        .unwrap();
        let probes: Vec<Point<f64>> =
            (1..=20).map(|i| Point::scalar(i as f64)).collect();
        match functional_bound_from_drift(&k, &cert, &probes).unwrap() {
            FunctionalBound::BoundHolds { bound, min_functional } => {
                assert_relative_eq!(bound, -(3.5f64.ln()), epsilon = 1e-12);
                assert!(min_functional >= bound);
            }
            FunctionalBound::Violated { at, functional, bound } => {
                panic!("bound {bound} violated at {at}: {functional}")
            }
        }
    }

    #[test]
    fn functional_bound_refuses_broken_certificate() {
        let k = matched_imh_std_normal();
        // lambda far too small for the constant integral \int V dK ~ 2.77.
        let cert = DriftCertificate::new(
            DriftFunction::ExpRadialPower { coeff: 1.0, power: 1.0 },
            0.01,
            0.1,
            SmallSet::Ball { radius: 1.0 },
        )
        .unwrap();
        let probes = vec![Point::scalar(3.0)];
        assert!(matches!(
            functional_bound_from_drift(&k, &cert, &probes),
            Err(Error::CertificateUnverified(_))
        ));
    }

    #[test]
    fn certificate_validation() {
        assert!(DriftCertificate::new(
            DriftFunction::Const(0.5),
            0.5,
            1.0,
            SmallSet::Ball { radius: 1.0 }
        )
        .is_err());
        assert!(DriftCertificate::new(
            DriftFunction::Const(2.0),
            1.0,
            1.0,
            SmallSet::Ball { radius: 1.0 }
        )
        .is_err());
        assert!(DriftCertificate::new(
            DriftFunction::Grid(vec![1.0, 0.9]),
            0.5,
            1.0,
            SmallSet::States(vec![0])
        )
        .is_err());
    }
}
