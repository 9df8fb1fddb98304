//! Empirical-measure rate function on finite chains.
//!
//! For a row-stochastic kernel `K` on m states, the rate of the empirical
//! measure at `mu` is
//!
//! `I(mu) = inf { R(gamma || mu (x) K) : both marginals of gamma equal mu }`.
//!
//! The primal infimum is computed by alternating KL projections onto the two
//! marginal constraints (each projection is a closed-form row or column
//! rescaling of the coupling, starting from the product reference
//! `mu (x) K`). A concave dual
//! `sup_{u > 0} sum_i mu_i ln(u_i / (K u)_i)`
//! is maximized by a damped Newton ascent; weak duality holds for every `u`,
//! so the reported gap certifies the primal value.
//!
//! Finite chains are produced from continuous kernels by [`discretize`]:
//! off-diagonal entries are cell integrals of the acceptance density and the
//! diagonal collects the rejection mass `r(x_i)` plus the own-cell integral.
//! The module also carries an exact occupancy-distribution dynamic program
//! for cross-checking large-deviation decay rates on small chains.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernel::MhKernel;
use crate::linalg::{solve, stationary_distribution, SquareMatrix};
use crate::point::Point;
use crate::quad::integrate_adaptive;
use crate::scalar::Scalar;

/// Where a finite chain came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainSource {
    Discretized { kernel_tag: String },
    Explicit,
}

/// Finite-state chain: cell centers plus a row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GridChain<T> {
    centers: Vec<Point<T>>,
    trans: SquareMatrix<T>,
    source: ChainSource,
}

impl<T: Scalar> GridChain<T> {
    /// Wraps an explicit transition matrix; rows must sum to 1 within 1e-12
    /// and are then renormalized exactly.
    pub fn from_transitions(rows: Vec<Vec<T>>) -> Result<Self> {
        let m = rows.len();
        let centers = (0..m).map(|i| Point::scalar(T::of(i as f64))).collect();
        let trans = validate_and_normalize(rows, T::of(1e-12))?;
        Ok(GridChain { centers, trans, source: ChainSource::Explicit })
    }

    pub fn n_states(&self) -> usize {
        self.trans.n()
    }

    pub fn transition(&self, i: usize, j: usize) -> T {
        self.trans.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.trans
    }

    pub fn centers(&self) -> &[Point<T>] {
        &self.centers
    }

    pub fn source(&self) -> &ChainSource {
        &self.source
    }

    /// Unique stationary row vector.
    pub fn stationary(&self) -> Result<Vec<T>> {
        stationary_distribution(&self.trans)
    }
}

fn validate_and_normalize<T: Scalar>(rows: Vec<Vec<T>>, tol: T) -> Result<SquareMatrix<T>> {
    let m = rows.len();
    let mut normalized = Vec::with_capacity(m);
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != m {
            return Err(Error::DimensionMismatch(format!("row {i} has length {}", row.len())));
        }
        if row.iter().any(|&p| p < T::zero() || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("row {i} has negative or non-finite entries")));
        }
        let sum: T = row.iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(Error::NotRowStochastic { row: i, sum: sum.as_f64() });
        }
        normalized.push(row.into_iter().map(|p| p / sum).collect::<Vec<_>>());
    }
    SquareMatrix::from_rows(normalized)
}

/// Discretizes an MH kernel onto a grid.
///
/// Row i: `trans[i][j] = \int_{cell j} a(x_i, y) dy` for `j != i`, and the
/// diagonal receives the own-cell integral, the full-space rejection mass
/// `r(x_i)`, and the acceptance mass escaping the grid (off-grid proposals
/// are moves the finite chain cannot represent; counting them as rejections
/// preserves detailed balance against the binned target, so the stationary
/// vector stays aligned with it). Rows are then renormalized; a factor
/// outside `1 +/- 1e-3` aborts, which catches dropped rejection mass and
/// quadrature failures.
pub fn discretize<T: Scalar>(k: &MhKernel<T>, grid: &GridSpec<T>) -> Result<GridChain<T>> {
    if grid.dim() != k.dim() {
        return Err(Error::DimensionMismatch("grid dimension != kernel dimension".into()));
    }
    let coverage_req = T::one() - T::of(1e-6);
    let coverage = if k.dim() == 1 {
        let cdf_lo = target_cdf(k, grid.lower()[0]);
        let cdf_hi = target_cdf(k, grid.upper()[0]);
        cdf_hi - cdf_lo
    } else {
        // Conservative bound: the mass of the inscribed origin-centered ball.
        let r = grid.inscribed_radius();
        T::one() - k.target().density().radial_tail_mass(r)
    };
    if coverage < coverage_req {
        return Err(Error::InsufficientCoverage {
            mass: coverage.as_f64(),
            required: coverage_req.as_f64(),
        });
    }

    let m = grid.n_cells();
    let centers: Vec<Point<T>> = (0..m).map(|i| grid.cell_center(i)).collect();
    let renorm_tol = T::of(1e-3);
    let rows: Vec<Result<Vec<T>>> = centers
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut row = if k.dim() == 1 {
                discretize_row_quadrature(k, grid, x)?
            } else {
                discretize_row_mc(k, grid, x)
            };
            let mass = k.acceptance_mass(x)?;
            let rejection = (T::one() - mass).max(T::zero());
            let in_grid: T = row.iter().copied().sum();
            let escaped = (mass - in_grid).max(T::zero());
            row[i] += rejection + escaped;
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > renorm_tol {
                return Err(Error::RenormalizationOutOfRange {
                    row: i,
                    factor: sum.as_f64(),
                    tolerance: renorm_tol.as_f64(),
                });
            }
            for p in &mut row {
                *p /= sum;
            }
            Ok(row)
        })
        .collect();
    let rows: Result<Vec<Vec<T>>> = rows.into_iter().collect();
    let trans = SquareMatrix::from_rows(rows?)?;
    Ok(GridChain { centers, trans, source: ChainSource::Discretized { kernel_tag: k.tag() } })
}

fn target_cdf<T: Scalar>(k: &MhKernel<T>, y: T) -> T {
    k.target().density().cdf_1d(y)
}

fn discretize_row_quadrature<T: Scalar>(
    k: &MhKernel<T>,
    grid: &GridSpec<T>,
    x: &Point<T>,
) -> Result<Vec<T>> {
    let m = grid.n_cells();
    let mut row = vec![T::zero(); m];
    for (j, entry) in row.iter_mut().enumerate() {
        let (lo, hi) = grid.cell_bounds_1d(j);
        let f = |y: T| {
            let ld = k.log_acceptance_density_raw(x, &Point::scalar(y));
            if ld == T::neg_infinity() {
                T::zero()
            } else {
                ld.exp()
            }
        };
        let mid = (lo + hi) * T::of(0.5);
        let q = integrate_adaptive(
            f,
            &[lo, mid, hi],
            k.quad().abs_tol,
            T::zero(),
            k.quad().max_subdivisions,
        )?;
        *entry = q.value.max(T::zero());
    }
    Ok(row)
}

fn discretize_row_mc<T: Scalar>(k: &MhKernel<T>, grid: &GridSpec<T>, x: &Point<T>) -> Vec<T> {
    let m = grid.n_cells();
    let mut row = vec![T::zero(); m];
    let mut rng = k.mc_rng(x);
    let n = k.quad().mc_samples;
    let unit = T::one() / T::of(n as f64);
    for _ in 0..n {
        let y = match k.proposal().sample(k.target(), x, &mut rng) {
            Ok(y) => y,
            Err(_) => continue,
        };
        let inside = (0..grid.dim())
            .all(|d| y.coords()[d] >= grid.lower()[d] && y.coords()[d] <= grid.upper()[d]);
        if !inside {
            continue;
        }
        if let Ok(delta) = k.log_hastings_delta(x, &y) {
            row[grid.cell_index(&y)] += delta.min(T::zero()).exp() * unit;
        }
    }
    row
}

/// `sum p_i ln(p_i / q_i)` with `0 ln 0 = 0`; `+inf` when `p` charges a
/// `q`-null cell.
pub fn relative_entropy<T: Scalar>(p: &[T], q: &[T]) -> T {
    debug_assert_eq!(p.len(), q.len());
    let mut acc = T::zero();
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == T::zero() {
            continue;
        }
        if qi == T::zero() {
            return T::infinity();
        }
        acc += pi * (pi / qi).ln();
    }
    acc
}

/// Outcome of the rate-function solve at one measure.
#[derive(Debug, Clone)]
pub struct RateResult<T> {
    /// Primal value `R(gamma || mu (x) K)`; `+inf` when infeasible.
    pub value: T,
    /// Optimal coupling (row-major m x m), absent when infeasible.
    pub coupling: Option<SquareMatrix<T>>,
    /// Best dual value found; never exceeds `value` beyond solver tolerance.
    pub dual_value: T,
    /// `value - dual_value`.
    pub gap: T,
    /// IPF iterations consumed.
    pub iterations: usize,
    /// Total-variation violation of the worse marginal at exit.
    pub marginal_violation: T,
    /// Certificate naming the violated marginal when the problem is
    /// infeasible.
    pub infeasibility: Option<String>,
}

const IPF_TOL: f64 = 1e-9;
const IPF_MAX_ITER: usize = 100_000;

/// Computes `I(mu)` for a finite chain.
pub fn rate_function<T: Scalar>(chain: &GridChain<T>, mu: &[T]) -> Result<RateResult<T>> {
    let m = chain.n_states();
    if mu.len() != m {
        return Err(Error::DimensionMismatch("measure length != number of states".into()));
    }
    if mu.iter().any(|&w| w < T::zero() || !w.is_finite()) {
        return Err(Error::InvalidParameter("measure has negative or non-finite entries".into()));
    }
    let total: T = mu.iter().copied().sum();
    if (total - T::one()).abs() > T::of(1e-9) {
        return Err(Error::InvalidParameter(format!("measure sums to {total}, expected 1")));
    }
    let mu: Vec<T> = mu.iter().map(|&w| w / total).collect();

    // One-step support feasibility: mass leaving supp(mu) must be placeable,
    // and every charged state must be reachable from supp(mu).
    let support: Vec<usize> = (0..m).filter(|&i| mu[i] > T::zero()).collect();
    for &i in &support {
        if !support.iter().any(|&j| chain.transition(i, j) > T::zero()) {
            return Ok(infeasible_result(format!(
                "first marginal violated: state {i} has no transition into the support of mu"
            )));
        }
    }
    for &j in &support {
        if !support.iter().any(|&i| chain.transition(i, j) > T::zero()) {
            return Ok(infeasible_result(format!(
                "second marginal violated: state {j} is unreachable in one step from the support of mu"
            )));
        }
    }

    // Reference coupling nu = mu (x) K; IPF never leaves its support.
    let mut gamma = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            gamma.set(i, j, mu[i] * chain.transition(i, j));
        }
    }
    let reference = gamma.clone();

    let tol = T::of(IPF_TOL);
    let mut iterations = 0;
    let mut violation = T::infinity();
    while iterations < IPF_MAX_ITER {
        iterations += 1;
        // Project onto the first-marginal constraint: rescale rows.
        for i in 0..m {
            let row_sum: T = (0..m).map(|j| gamma.get(i, j)).sum();
            if row_sum == T::zero() {
                if mu[i] > T::zero() {
                    return Ok(infeasible_result(format!(
                        "first marginal violated: row {i} lost all admissible mass"
                    )));
                }
                continue;
            }
            let f = mu[i] / row_sum;
            for j in 0..m {
                gamma.set(i, j, gamma.get(i, j) * f);
            }
        }
        // Project onto the second-marginal constraint: rescale columns.
        let mut col_sums = vec![T::zero(); m];
        for i in 0..m {
            for j in 0..m {
                col_sums[j] += gamma.get(i, j);
            }
        }
        for j in 0..m {
            if col_sums[j] == T::zero() {
                if mu[j] > T::zero() {
                    return Ok(infeasible_result(format!(
                        "second marginal violated: column {j} lost all admissible mass"
                    )));
                }
                continue;
            }
            let f = mu[j] / col_sums[j];
            for i in 0..m {
                gamma.set(i, j, gamma.get(i, j) * f);
            }
        }
        // Row marginals were disturbed by the column pass; measure both.
        let mut row_tv = T::zero();
        let mut col_tv = T::zero();
        let mut col_now = vec![T::zero(); m];
        for i in 0..m {
            let row_sum: T = (0..m).map(|j| gamma.get(i, j)).sum();
            row_tv += (row_sum - mu[i]).abs();
            for j in 0..m {
                col_now[j] += gamma.get(i, j);
            }
        }
        for j in 0..m {
            col_tv += (col_now[j] - mu[j]).abs();
        }
        violation = (row_tv.max(col_tv)) * T::of(0.5);
        if violation < tol {
            break;
        }
    }

    let mut value = T::zero();
    for i in 0..m {
        for j in 0..m {
            let g = gamma.get(i, j);
            if g > T::zero() {
                value += g * (g / reference.get(i, j)).ln();
            }
        }
    }
    value = value.max(T::zero());

    let dual_value = dual_ascent(chain, &mu);
    Ok(RateResult {
        value,
        coupling: Some(gamma),
        dual_value,
        gap: value - dual_value,
        iterations,
        marginal_violation: violation,
        infeasibility: None,
    })
}

fn infeasible_result<T: Scalar>(certificate: String) -> RateResult<T> {
    RateResult {
        value: T::infinity(),
        coupling: None,
        dual_value: T::infinity(),
        gap: T::zero(),
        iterations: 0,
        marginal_violation: T::zero(),
        infeasibility: Some(certificate),
    }
}

/// Maximizes `D(v) = sum_i mu_i (v_i - ln (K e^v)_i)` over `v` with
/// `v_0 = 0`, by damped Newton with a ridge fallback. `D` is concave, and
/// every iterate is a valid weak-duality certificate.
fn dual_ascent<T: Scalar>(chain: &GridChain<T>, mu: &[T]) -> T {
    let m = chain.n_states();
    if m == 1 {
        return T::zero();
    }
    let mut v = vec![T::zero(); m];
    let objective = |v: &[T]| -> T {
        let mut acc = T::zero();
        for i in 0..m {
            if mu[i] == T::zero() {
                continue;
            }
            let mut lse = T::neg_infinity();
            for j in 0..m {
                let k = chain.transition(i, j);
                if k > T::zero() {
                    lse = crate::numeric::log_add_exp(lse, k.ln() + v[j]);
                }
            }
            acc += mu[i] * (v[i] - lse);
        }
        acc
    };
    let mut best = objective(&v);
    for _ in 0..200 {
        // Softmax rows p_i. = K_ij e^{v_j} / (K e^v)_i.
        let mut p = SquareMatrix::zeros(m);
        for i in 0..m {
            let mut lse = T::neg_infinity();
            for j in 0..m {
                let k = chain.transition(i, j);
                if k > T::zero() {
                    lse = crate::numeric::log_add_exp(lse, k.ln() + v[j]);
                }
            }
            for j in 0..m {
                let k = chain.transition(i, j);
                if k > T::zero() {
                    p.set(i, j, (k.ln() + v[j] - lse).exp());
                }
            }
        }
        // Gradient and Hessian of D restricted to coordinates 1..m.
        let mut grad = vec![T::zero(); m];
        for (k, g) in grad.iter_mut().enumerate() {
            let mut acc = mu[k];
            for i in 0..m {
                acc -= mu[i] * p.get(i, k);
            }
            *g = acc;
        }
        let grad_norm = grad.iter().skip(1).map(|g| g.abs()).fold(T::zero(), T::max);
        if grad_norm < T::of(1e-13) {
            break;
        }
        let r = m - 1;
        let mut hess = SquareMatrix::zeros(r);
        for a in 1..m {
            for b in 1..m {
                let mut acc = T::zero();
                for i in 0..m {
                    let pa = p.get(i, a);
                    let pb = p.get(i, b);
                    let diag = if a == b { pa } else { T::zero() };
                    acc += mu[i] * (diag - pa * pb);
                }
                // Negated Hessian of the concave objective.
                hess.set(a - 1, b - 1, acc);
            }
        }
        for a in 0..r {
            hess.set(a, a, hess.get(a, a) + T::of(1e-12));
        }
        let rhs: Vec<T> = grad[1..].to_vec();
        let direction = match solve(&hess, &rhs) {
            Ok(d) => d,
            Err(_) => rhs.clone(),
        };
        // Backtracking line search on the ascent direction.
        let mut step = T::one();
        let mut advanced = false;
        for _ in 0..60 {
            let mut cand = v.clone();
            for a in 1..m {
                cand[a] = v[a] + step * direction[a - 1];
            }
            let val = objective(&cand);
            if val > best {
                v = cand;
                best = val;
                advanced = true;
                break;
            }
            step *= T::of(0.5);
        }
        if !advanced {
            break;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Exact occupancy distribution on small chains.
// ---------------------------------------------------------------------------

/// Conjunction of half-space constraints `coeffs . mu >= bound` on the
/// occupancy measure; an empty list is the whole simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyEvent<T> {
    constraints: Vec<(Vec<T>, T)>,
}

impl<T: Scalar> OccupancyEvent<T> {
    pub fn whole_simplex() -> Self {
        OccupancyEvent { constraints: Vec::new() }
    }

    pub fn new(constraints: Vec<(Vec<T>, T)>) -> Self {
        OccupancyEvent { constraints }
    }

    /// `mass on state `state` at least `fraction``.
    pub fn min_occupancy(m: usize, state: usize, fraction: T) -> Self {
        let mut coeffs = vec![T::zero(); m];
        coeffs[state] = T::one();
        OccupancyEvent { constraints: vec![(coeffs, fraction)] }
    }

    pub fn constraints(&self) -> &[(Vec<T>, T)] {
        &self.constraints
    }

    /// Membership for a probability vector. Constraint boundaries carry a
    /// 1e-9 slack so that integer counts hitting the bound exactly (e.g.
    /// 14/20 vs 0.7) are not lost to rounding in `bound * n`.
    pub fn contains_measure(&self, mu: &[T]) -> bool {
        self.constraints.iter().all(|(coeffs, bound)| {
            let dot: T = coeffs.iter().zip(mu).map(|(&c, &w)| c * w).sum();
            dot >= *bound - T::of(1e-9) * (T::one() + bound.abs())
        })
    }

    fn contains_counts(&self, counts: &[u16], n: usize) -> bool {
        let nf = T::of(n as f64);
        let mu: Vec<T> = counts.iter().map(|&c| T::of(c as f64) / nf).collect();
        self.contains_measure(&mu)
    }
}

const DP_KEY_STATES: usize = 8;
const DP_DEFAULT_BUDGET: f64 = 5e8;

type CountsKey = (usize, [u16; DP_KEY_STATES]);

/// `ln P(L^n in A)` computed exactly by dynamic programming over
/// (current state, visit-count vector). Cost grows like `n^m m^2`; a size
/// error is returned when that exceeds the budget.
pub fn exact_log_probability<T: Scalar>(
    chain: &GridChain<T>,
    x0: usize,
    n: usize,
    event: &OccupancyEvent<T>,
) -> Result<T> {
    exact_log_probability_with_budget(chain, x0, n, event, DP_DEFAULT_BUDGET)
}

pub fn exact_log_probability_with_budget<T: Scalar>(
    chain: &GridChain<T>,
    x0: usize,
    n: usize,
    event: &OccupancyEvent<T>,
    budget: f64,
) -> Result<T> {
    let m = chain.n_states();
    if m > DP_KEY_STATES {
        return Err(Error::DpBudgetExceeded { cost: f64::INFINITY, budget });
    }
    if x0 >= m {
        return Err(Error::InvalidParameter("initial state out of range".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("occupancy DP needs n >= 1".into()));
    }
    for (coeffs, _) in event.constraints() {
        if coeffs.len() != m {
            return Err(Error::DimensionMismatch("event coefficients length != states".into()));
        }
    }
    let cost = (n as f64).powi(m as i32) * (m * m) as f64;
    if cost > budget {
        return Err(Error::DpBudgetExceeded { cost, budget });
    }

    // Forward DP over the states visited at times 0..n-1.
    let mut layer: HashMap<CountsKey, T> = HashMap::new();
    let mut key0 = [0u16; DP_KEY_STATES];
    key0[x0] = 1;
    layer.insert((x0, key0), T::one());
    for _ in 1..n {
        let mut next: HashMap<CountsKey, T> = HashMap::with_capacity(layer.len() * m);
        for ((state, counts), prob) in layer {
            for j in 0..m {
                let p = chain.transition(state, j);
                if p == T::zero() {
                    continue;
                }
                let mut c = counts;
                c[j] += 1;
                *next.entry((j, c)).or_insert(T::zero()) += prob * p;
            }
        }
        layer = next;
    }

    let mut total = T::zero();
    for ((_, counts), prob) in layer {
        if event.contains_counts(&counts[..m], n) {
            total += prob;
        }
    }
    Ok(total.ln())
}

/// Decay-rate experiment: exact `s_n = -(1/n) ln P(L^n in A)` for each n,
/// juxtaposed with the rate-function infimum over a simplex mesh of A.
#[derive(Debug, Clone)]
pub struct SlopeReport<T> {
    pub n_values: Vec<usize>,
    pub log_probs: Vec<T>,
    pub slopes: Vec<T>,
    /// `inf { I(mu) : mu in A }` over the mesh.
    pub rate_infimum: T,
    /// Mesh point attaining the infimum (when finite).
    pub infimum_measure: Option<Vec<T>>,
    /// Mesh resolution used.
    pub mesh_step: T,
}

pub fn slope_experiment<T: Scalar>(
    chain: &GridChain<T>,
    event: &OccupancyEvent<T>,
    x0: usize,
    n_values: &[usize],
    mesh_step: T,
) -> Result<SlopeReport<T>> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("need at least one n value".into()));
    }
    if mesh_step <= T::zero() || mesh_step >= T::one() {
        return Err(Error::InvalidParameter("mesh step must lie in (0, 1)".into()));
    }
    let mut log_probs = Vec::with_capacity(n_values.len());
    let mut slopes = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let lp = exact_log_probability(chain, x0, n, event)?;
        log_probs.push(lp);
        slopes.push(-lp / T::of(n as f64));
    }

    let (rate_infimum, infimum_measure) = event_rate_infimum(chain, event, mesh_step)?;
    Ok(SlopeReport {
        n_values: n_values.to_vec(),
        log_probs,
        slopes,
        rate_infimum,
        infimum_measure,
        mesh_step,
    })
}

/// Minimizes the rate function over the event's intersection with a simplex
/// mesh of the given step. The stationary vector is added to the mesh when
/// it lies in the event, pinning the known zero of the rate function.
pub fn event_rate_infimum<T: Scalar>(
    chain: &GridChain<T>,
    event: &OccupancyEvent<T>,
    mesh_step: T,
) -> Result<(T, Option<Vec<T>>)> {
    let m = chain.n_states();
    let k = (T::one() / mesh_step).round().as_f64() as usize;
    let k = k.max(1);
    let mut mesh: Vec<Vec<T>> = Vec::new();
    let mut counts = vec![0usize; m];
    enumerate_compositions(k, m, 0, &mut counts, &mut mesh);
    if let Ok(pi) = chain.stationary() {
        mesh.push(pi);
    }
    let candidates: Vec<Vec<T>> =
        mesh.into_iter().filter(|mu| event.contains_measure(mu)).collect();
    let results: Vec<(T, Vec<T>)> = candidates
        .into_par_iter()
        .map(|mu| {
            let value = rate_function(chain, &mu).map(|r| r.value).unwrap_or(T::infinity());
            (value, mu)
        })
        .collect();
    let mut best = T::infinity();
    let mut arg = None;
    for (value, mu) in results {
        if value < best {
            best = value;
            arg = Some(mu);
        }
    }
    Ok((best, arg))
}

fn enumerate_compositions<T: Scalar>(
    remaining: usize,
    m: usize,
    idx: usize,
    counts: &mut Vec<usize>,
    out: &mut Vec<Vec<T>>,
) {
    if idx == m - 1 {
        counts[idx] = remaining;
        let total: T = T::of(counts.iter().sum::<usize>() as f64);
        out.push(counts.iter().map(|&c| T::of(c as f64) / total).collect());
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        enumerate_compositions::<T>(remaining - c, m, idx + 1, counts, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::QuadratureConfig;
    use crate::model::{IncrementDensity, ProposalSpec, TargetSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn two_state() -> GridChain<f64> {
        GridChain::from_transitions(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    fn random_chain(m: usize, rng: &mut ChaCha12Rng) -> GridChain<f64> {
        let rows = (0..m)
            .map(|_| {
                let mut row: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.05).collect();
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= s);
                row
            })
            .collect();
        GridChain::from_transitions(rows).unwrap()
    }

    fn random_measure(m: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let mut mu: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|w| *w /= s);
        mu
    }

    #[test]
    fn relative_entropy_examples() {
        assert_eq!(relative_entropy(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(relative_entropy(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
        let v = relative_entropy(&[0.5, 0.5], &[0.25, 0.75]);
        assert_relative_eq!(v, 0.14384103622589045, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_transition_matrices() {
        assert!(GridChain::from_transitions(vec![vec![0.9, 0.2], vec![0.2, 0.8]]).is_err());
        assert!(GridChain::from_transitions(vec![vec![1.1, -0.1], vec![0.2, 0.8]]).is_err());
        assert!(GridChain::from_transitions(vec![vec![1.0], vec![0.2, 0.8]]).is_err());
    }

    #[test]
    fn rate_zero_at_stationary() {
        let chain = two_state();
        let pi = chain.stationary().unwrap();
        let r = rate_function(&chain, &pi).unwrap();
        assert!(r.value <= 1e-6, "I(pi) = {}", r.value);
        assert!(r.marginal_violation <= 1e-9);
        assert!(r.gap.abs() <= 1e-6);
    }

    #[test]
    fn rate_point_mass_closed_form() {
        let chain = two_state();
        let r = rate_function(&chain, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(r.value, -(0.9f64.ln()), epsilon = 1e-8);
        let r = rate_function(&chain, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(r.value, -(0.8f64.ln()), epsilon = 1e-8);
    }

    #[test]
    fn rate_point_mass_infeasible_on_periodic_chain() {
        let chain = GridChain::from_transitions(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = rate_function(&chain, &[1.0, 0.0]).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        assert!(r.infeasibility.is_some());
        assert!(r.coupling.is_none());
    }

    #[test]
    fn rate_marginals_feasible() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..5 {
            let chain = random_chain(4, &mut rng);
            let mu = random_measure(4, &mut rng);
            let r = rate_function(&chain, &mu).unwrap();
            let gamma = r.coupling.unwrap();
            let mut row_tv = 0.0;
            let mut col = vec![0.0; 4];
            for i in 0..4 {
                let rs: f64 = (0..4).map(|j| gamma.get(i, j)).sum();
                row_tv += (rs - mu[i]).abs();
                for j in 0..4 {
                    col[j] += gamma.get(i, j);
                }
            }
            let col_tv: f64 = col.iter().zip(&mu).map(|(c, w)| (c - w).abs()).sum();
            assert!(row_tv * 0.5 <= 1e-8, "row TV {row_tv}");
            assert!(col_tv * 0.5 <= 1e-8, "col TV {col_tv}");
        }
    }

    #[test]
    fn weak_duality_and_small_gap_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for &m in &[2usize, 3, 5, 10] {
            for _ in 0..4 {
                let chain = random_chain(m, &mut rng);
                let mu = random_measure(m, &mut rng);
                let r = rate_function(&chain, &mu).unwrap();
                assert!(
                    r.dual_value <= r.value + 1e-6,
                    "weak duality violated: dual {} > primal {}",
                    r.dual_value,
                    r.value
                );
                assert!(r.gap.abs() <= 1e-6, "gap {} at m={m}", r.gap);
            }
        }
    }

    /// Independent 1-parameter oracle for 2-state chains: the feasible
    /// couplings with both marginals (q, 1-q) form a segment; ternary-search
    /// the convex objective along it.
    fn two_state_rate_oracle(chain: &GridChain<f64>, q: f64) -> f64 {
        let nu = |i: usize, j: usize, mu: &[f64; 2]| mu[i] * chain.transition(i, j);
        let mu = [q, 1.0 - q];
        let lo_a = (2.0 * q - 1.0).max(0.0);
        let hi_a = q;
        let f = |a: f64| {
            let g = [[a, q - a], [q - a, 1.0 - 2.0 * q + a]];
            let mut acc = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let gij: f64 = g[i][j];
                    if gij > 0.0 {
                        let nij = nu(i, j, &mu);
                        if nij == 0.0 {
                            return f64::INFINITY;
                        }
                        acc += gij * (gij / nij).ln();
                    }
                }
            }
            acc
        };
        let (mut lo, mut hi) = (lo_a, hi_a);
        for _ in 0..300 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) <= f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        f(0.5 * (lo + hi))
    }

    #[test]
    fn two_state_grid_matches_exhaustive_search() {
        for &p00 in &[0.1, 0.5, 0.9] {
            for &p11 in &[0.2, 0.8] {
                let chain = GridChain::from_transitions(vec![
                    vec![p00, 1.0 - p00],
                    vec![1.0 - p11, p11],
                ])
                .unwrap();
                for &q in &[0.05, 0.3, 0.5, 0.7, 0.95] {
                    let got = rate_function(&chain, &[q, 1.0 - q]).unwrap().value;
                    let want = two_state_rate_oracle(&chain, q);
                    assert_abs_diff_eq!(got, want, epsilon = 1e-4);
                }
            }
        }
    }

    /// Independent oracle for 3-state chains: the coupling is pinned by its
    /// 2x2 free block; minimize the convex closed-form objective by cyclic
    /// ternary search per coordinate, starting from the product coupling.
    fn three_state_rate_oracle(chain: &GridChain<f64>, mu: &[f64]) -> f64 {
        let nu = |i: usize, j: usize| mu[i] * chain.transition(i, j);
        let entries = |f: &[f64; 4]| -> [[f64; 3]; 3] {
            let mut g = [[0.0f64; 3]; 3];
            g[0][0] = f[0];
            g[0][1] = f[1];
            g[1][0] = f[2];
            g[1][1] = f[3];
            g[0][2] = mu[0] - g[0][0] - g[0][1];
            g[1][2] = mu[1] - g[1][0] - g[1][1];
            g[2][0] = mu[0] - g[0][0] - g[1][0];
            g[2][1] = mu[1] - g[0][1] - g[1][1];
            g[2][2] = mu[2] - g[2][0] - g[2][1];
            g
        };
        let eval = |f: &[f64; 4]| -> f64 {
            let g = entries(f);
            let mut acc = 0.0;
            for (i, row) in g.iter().enumerate() {
                for (j, &gij) in row.iter().enumerate() {
                    if gij < -1e-13 {
                        return f64::INFINITY;
                    }
                    if gij > 0.0 {
                        let nij = nu(i, j);
                        if nij == 0.0 {
                            return f64::INFINITY;
                        }
                        acc += gij * (gij / nij).ln();
                    }
                }
            }
            acc
        };
        // Product coupling mu (x) mu is strictly feasible for positive mu.
        let mut f = [mu[0] * mu[0], mu[0] * mu[1], mu[1] * mu[0], mu[1] * mu[1]];
        for _sweep in 0..400 {
            for c in 0..4 {
                // The nine entries are affine in coordinate c: recover the
                // feasible interval from slopes and intercepts.
                let mut at0 = f;
                at0[c] = 0.0;
                let mut at1 = f;
                at1[c] = 1.0;
                let g0 = entries(&at0);
                let g1 = entries(&at1);
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..3 {
                    for j in 0..3 {
                        let slope = g1[i][j] - g0[i][j];
                        let icpt = g0[i][j];
                        if slope.abs() < 1e-15 {
                            continue;
                        }
                        let root = -icpt / slope;
                        if slope > 0.0 {
                            lo = lo.max(root);
                        } else {
                            hi = hi.min(root);
                        }
                    }
                }
                for _ in 0..200 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    let mut fa = f;
                    fa[c] = m1;
                    let mut fb = f;
                    fb[c] = m2;
                    if eval(&fa) <= eval(&fb) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                f[c] = 0.5 * (lo + hi);
            }
        }
        eval(&f)
    }

    #[test]
    fn three_state_matches_brute_force_mesh() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..3 {
            let chain = random_chain(3, &mut rng);
            let mu = random_measure(3, &mut rng);
            let got = rate_function(&chain, &mu).unwrap().value;
            let want = three_state_rate_oracle(&chain, &mu);
            assert_abs_diff_eq!(got, want, epsilon = 1e-3);
        }
    }

    #[test]
    fn dp_whole_simplex_is_certain() {
        let chain = two_state();
        let lp = exact_log_probability(&chain, 0, 25, &OccupancyEvent::whole_simplex()).unwrap();
        assert_abs_diff_eq!(lp, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dp_single_step_point_mass() {
        let chain = two_state();
        let hit = OccupancyEvent::min_occupancy(2, 0, 1.0);
        assert_eq!(exact_log_probability(&chain, 0, 1, &hit).unwrap(), 0.0);
        let miss = OccupancyEvent::min_occupancy(2, 1, 0.5);
        assert_eq!(exact_log_probability(&chain, 0, 1, &miss).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn dp_two_step_closed_form() {
        // From state 0, counts over (X_0, X_1): (2,0) w.p. 0.9, (1,1) w.p. 0.1.
        let chain = two_state();
        let event = OccupancyEvent::min_occupancy(2, 0, 0.7);
        let lp = exact_log_probability(&chain, 0, 2, &event).unwrap();
        assert_relative_eq!(lp, 0.9f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn dp_matches_monte_carlo() {
        let chain = two_state();
        let event = OccupancyEvent::min_occupancy(2, 0, 0.7);
        let n = 20;
        let lp = exact_log_probability(&chain, 0, n, &event).unwrap();
        let p = lp.exp();

        let runs = 200_000;
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut hits = 0usize;
        for _ in 0..runs {
            let mut state = 0usize;
            let mut count0 = 0usize;
            for step in 0..n {
                if step > 0 {
                    let u: f64 = rng.random();
                    state = if u < chain.transition(state, 0) { 0 } else { 1 };
                }
                if state == 0 {
                    count0 += 1;
                }
            }
            if count0 as f64 >= 0.7 * n as f64 - 1e-9 {
                hits += 1;
            }
        }
        let phat = hits as f64 / runs as f64;
        let se = (phat * (1.0 - phat) / runs as f64).sqrt();
        assert!(
            (p - phat).abs() <= 3.0 * se,
            "DP {p} vs MC {phat} +/- {se}"
        );
    }

    #[test]
    fn dp_budget_error() {
        let chain = random_chain(4, &mut ChaCha12Rng::seed_from_u64(1));
        let err = exact_log_probability_with_budget(
            &chain,
            0,
            200,
            &OccupancyEvent::whole_simplex(),
            1e6,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DpBudgetExceeded { .. }));
    }

    #[test]
    fn slope_whole_simplex_is_flat_zero() {
        let chain = two_state();
        let report = slope_experiment(
            &chain,
            &OccupancyEvent::whole_simplex(),
            0,
            &[5, 10, 15],
            0.01,
        )
        .unwrap();
        for &s in &report.slopes {
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
        // The stationary vector lies in the event, so the infimum is ~0.
        assert!(report.rate_infimum <= 1e-6, "inf = {}", report.rate_infimum);
    }

    #[test]
    fn slope_shrinking_event_infimum_vanishes() {
        // As the threshold approaches the stationary mass from above, the
        // constrained infimum of the rate function tends to zero.
        let chain = two_state();
        let pi0 = chain.stationary().unwrap()[0];
        let mut prev = f64::INFINITY;
        for &c in &[0.9, 0.8, 0.72, pi0 + 0.01] {
            let event = OccupancyEvent::min_occupancy(2, 0, c);
            let (inf, _) = event_rate_infimum(&chain, &event, 0.002).unwrap();
            assert!(inf <= prev + 1e-12, "not decreasing at c={c}");
            prev = inf;
        }
        assert!(prev < 1e-3, "infimum near stationarity is {prev}");
    }

    #[test]
    fn discretized_matched_imh_rows_are_binned_proposal() {
        let target = TargetSpec::new(1.0, 2.0, 1).unwrap();
        let proposal = ProposalSpec::independent(1.0, 2.0, 1).unwrap();
        let k = MhKernel::new(target, proposal, QuadratureConfig::default()).unwrap();
        let grid = GridSpec::new(vec![-4.0], vec![4.0], vec![16]).unwrap();
        let chain = discretize(&k, &grid).unwrap();
        // Every row equals the binned proposal up to the off-grid leak that
        // each row's diagonal absorbs (the proposal tail outside the box,
        // ~1.5e-8 here).
        let f = k.proposal();
        let t = k.target();
        let x = Point::scalar(0.0);
        for i in 0..chain.n_states() {
            for j in 0..chain.n_states() {
                let (lo, hi) = grid.cell_bounds_1d(j);
                let want = f.cdf_1d(t, &x, hi).unwrap() - f.cdf_1d(t, &x, lo).unwrap();
                let slack = if i == j { 1e-6 } else { 1e-8 };
                assert_abs_diff_eq!(chain.transition(i, j), want, epsilon = slack);
            }
        }
    }

    #[test]
    fn discretized_rows_sum_to_one() {
        let target = TargetSpec::new(0.5, 2.0, 1).unwrap();
        let proposal =
            ProposalSpec::random_walk(IncrementDensity::Gaussian { scale: 1.0 }, 1).unwrap();
        let k = MhKernel::new(target, proposal, QuadratureConfig::default()).unwrap();
        let grid = GridSpec::new(vec![-5.0], vec![5.0], vec![20]).unwrap();
        let chain = discretize(&k, &grid).unwrap();
        for i in 0..chain.n_states() {
            let s: f64 = (0..chain.n_states()).map(|j| chain.transition(i, j)).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        assert!(matches!(chain.source(), ChainSource::Discretized { .. }));
    }

    #[test]
    fn discretized_rwm_stationary_close_to_binned_target() {
        let target = TargetSpec::new(0.5f64, 2.0, 1).unwrap();
        let proposal =
            ProposalSpec::random_walk(IncrementDensity::Gaussian { scale: 1.0 }, 1).unwrap();
        let k = MhKernel::new(target, proposal, QuadratureConfig::default()).unwrap();
        let grid = GridSpec::new(vec![-5.0], vec![5.0], vec![50]).unwrap();
        let chain = discretize(&k, &grid).unwrap();
        let pi = chain.stationary().unwrap();
        let mut tv = 0.0f64;
        for j in 0..50 {
            let (lo, hi) = grid.cell_bounds_1d(j);
            let want = k.target().density().cdf_1d(hi) - k.target().density().cdf_1d(lo);
            tv += (pi[j] - want).abs();
        }
        tv *= 0.5;
        assert!(tv <= 0.02, "TV(stationary, binned target) = {tv}");
    }

    #[test]
    fn discretize_rejects_insufficient_coverage() {
        let target = TargetSpec::new(0.5, 2.0, 1).unwrap();
        let proposal =
            ProposalSpec::random_walk(IncrementDensity::Gaussian { scale: 1.0 }, 1).unwrap();
        let k = MhKernel::new(target, proposal, QuadratureConfig::default()).unwrap();
        let grid = GridSpec::new(vec![-1.0], vec![1.0], vec![10]).unwrap();
        assert!(matches!(
            discretize(&k, &grid),
            Err(Error::InsufficientCoverage { .. })
        ));
    }
}
