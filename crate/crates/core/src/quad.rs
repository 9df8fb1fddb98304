//! One-dimensional adaptive quadrature (Gauss-Kronrod 7-15) with an
//! embedded error estimate, plus a log-scaled variant for integrands that
//! span hundreds of orders of magnitude.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Kronrod abscissae on [-1, 1] (non-negative half; the rule is symmetric).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss-7 weights for the odd-indexed abscissae (and the center point).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Quadrature outcome with its achieved error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
    pub subdivisions: usize,
}

/// Log-scaled quadrature outcome: the integral equals `exp(log_value)`.
#[derive(Debug, Clone, Copy)]
pub struct LogQuadrature<T> {
    pub log_value: T,
    /// Relative error estimate of the (linear-scale) integral.
    pub rel_error: T,
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Scalar>(f: &mut dyn FnMut(T) -> T, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::of(0.5);
    let center = (a + b) * T::of(0.5);
    let mut kronrod = T::zero();
    let mut gauss = T::zero();
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let dx = half * T::of(x);
        let (fl, fr) = if x == 0.0 {
            let v = f(center);
            (v, T::zero())
        } else {
            (f(center - dx), f(center + dx))
        };
        let pair = fl + fr;
        kronrod += T::of(wk) * pair;
        // Gauss-7 nodes are the odd-indexed Kronrod abscissae plus the center.
        if i % 2 == 1 {
            gauss += T::of(WG[i / 2]) * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Integrates `f` over the union of `[breakpoints[i], breakpoints[i+1]]`,
/// adaptively bisecting the segment with the largest error estimate until the
/// total estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_adaptive<T: Scalar>(
    mut f: impl FnMut(T) -> T,
    breakpoints: &[T],
    abs_tol: T,
    rel_tol: T,
    max_subdivisions: usize,
) -> Result<Quadrature<T>> {
    assert!(breakpoints.len() >= 2, "need at least one segment");
    let mut segments: Vec<Segment<T>> = Vec::with_capacity(breakpoints.len() * 2);
    let mut evaluations = 0usize;
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        segments.push(Segment { a: w[0], b: w[1], value, error });
    }
    if segments.is_empty() {
        return Err(Error::InvalidParameter("empty integration domain".into()));
    }

    let mut subdivisions = 0usize;
    loop {
        let total: T = segments.iter().map(|s| s.value).sum();
        let err: T = segments.iter().map(|s| s.error).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            return Ok(Quadrature { value: total, error: err, evaluations, subdivisions });
        }
        if subdivisions >= max_subdivisions {
            return Err(Error::QuadratureNonconvergence {
                achieved: err.as_f64(),
                required: tol.as_f64(),
            });
        }
        // Split the worst segment.
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.partial_cmp(&b.1.error).unwrap())
            .unwrap();
        let seg = segments.swap_remove(worst);
        let mid = (seg.a + seg.b) * T::of(0.5);
        if mid <= seg.a || mid >= seg.b {
            // Interval at floating-point resolution; accept its estimate as is.
            segments.push(Segment { error: T::zero(), ..seg });
            continue;
        }
        let (lv, le) = gk15(&mut f, seg.a, mid);
        let (rv, re) = gk15(&mut f, mid, seg.b);
        evaluations += 30;
        segments.push(Segment { a: seg.a, b: mid, value: lv, error: le });
        segments.push(Segment { a: mid, b: seg.b, value: rv, error: re });
        subdivisions += 1;
    }
}

/// Integrates `exp(log_f)` and returns the result in log scale.
///
/// The integrand is first probed on a refinement of the breakpoints to find
/// the peak `M` of `log_f`; the scaled integrand `exp(log_f - M)` is then
/// integrated adaptively. If refinement uncovers values far above the probed
/// peak the pass restarts with the improved shift (at most a few times).
pub fn integrate_log_adaptive<T: Scalar>(
    log_f: impl Fn(T) -> T,
    breakpoints: &[T],
    rel_tol: T,
    max_subdivisions: usize,
) -> Result<LogQuadrature<T>> {
    let mut shift = probe_peak(&log_f, breakpoints);
    if shift == T::neg_infinity() {
        return Ok(LogQuadrature { log_value: T::neg_infinity(), rel_error: T::zero() });
    }
    for _ in 0..4 {
        let observed_max = std::cell::Cell::new(T::neg_infinity());
        let result = {
            let f = |y: T| {
                let lv = log_f(y);
                if lv > observed_max.get() {
                    observed_max.set(lv);
                }
                (lv - shift).exp()
            };
            integrate_adaptive(f, breakpoints, T::of(1e-300), rel_tol, max_subdivisions)
        };
        // If the adaptive pass discovered a much higher peak, rescale and redo.
        if observed_max.get() > shift + T::of(30.0) {
            shift = observed_max.get();
            continue;
        }
        let q = result?;
        if q.value <= T::zero() {
            return Ok(LogQuadrature { log_value: T::neg_infinity(), rel_error: T::zero() });
        }
        return Ok(LogQuadrature {
            log_value: shift + q.value.ln(),
            rel_error: q.error / q.value,
        });
    }
    Err(Error::QuadratureNonconvergence { achieved: f64::INFINITY, required: rel_tol.as_f64() })
}

/// Coarse scan for the maximum of `log_f` over the breakpoint mesh.
fn probe_peak<T: Scalar>(log_f: &impl Fn(T) -> T, breakpoints: &[T]) -> T {
    let mut best = T::neg_infinity();
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let span = w[1] - w[0];
        for k in 0..=16 {
            let y = w[0] + span * T::of(k as f64 / 16.0);
            let v = log_f(y);
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// Builds a graded breakpoint mesh around a center with the given scale,
/// clipped to [lo, hi]; extra anchors are merged in sorted order.
pub fn graded_breakpoints<T: Scalar>(
    center: T,
    scale: T,
    lo: T,
    hi: T,
    anchors: &[T],
) -> Vec<T> {
    let mut pts = vec![lo, hi];
    for &k in &[0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let off = scale * T::of(k);
        pts.push(center + off);
        pts.push(center - off);
    }
    pts.extend_from_slice(anchors);
    pts.retain(|p| p.is_finite() && *p >= lo && *p <= hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= (a.abs() + b.abs() + T::one()) * T::of(1e-14));
    if pts.len() < 2 {
        vec![lo, hi]
    } else {
        pts
    }
}
