//! CSV and one-line record writers.
//!
//! Floating-point fields are printed with 17 significant digits so that
//! repeated runs diff cleanly. Non-finite values print as `inf`, `-inf`
//! and `nan`.

use std::io::{self, Write};

use crate::ergodicity::TvDecayReport;
use crate::kernel::{ChainTrace, EmpiricalMeasure, MeasureSupport};
use crate::lyapunov::{LimitProbeReport, RegimeVerdict};
use crate::rate::{GridChain, RateResult, SlopeReport};
use crate::scalar::Scalar;

/// 17 significant digits, scientific notation.
pub fn fmt_float<T: Scalar>(x: T) -> String {
    let v = x.as_f64();
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// Header: `step,accepted,x0..x{d-1}`; `accepted` is empty on the first row.
pub fn write_trace_csv<T: Scalar, W: Write>(trace: &ChainTrace<T>, out: &mut W) -> io::Result<()> {
    let dim = trace.states.first().map(|s| s.dim()).unwrap_or(0);
    write!(out, "step,accepted")?;
    for d in 0..dim {
        write!(out, ",x{d}")?;
    }
    writeln!(out)?;
    for (i, state) in trace.states.iter().enumerate() {
        let flag = if i == 0 {
            String::new()
        } else {
            trace.accepted[i - 1].to_string()
        };
        write!(out, "{i},{flag}")?;
        for &c in state.coords() {
            write!(out, ",{}", fmt_float(c))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Point support: `atom,weight,x0..`; grid support: `cell,weight,center0..`.
pub fn write_empirical_csv<T: Scalar, W: Write>(
    mu: &EmpiricalMeasure<T>,
    out: &mut W,
) -> io::Result<()> {
    match &mu.support {
        MeasureSupport::Points(points) => {
            let dim = points.first().map(|p| p.dim()).unwrap_or(0);
            write!(out, "atom,weight")?;
            for d in 0..dim {
                write!(out, ",x{d}")?;
            }
            writeln!(out)?;
            for (i, (p, &w)) in points.iter().zip(&mu.weights).enumerate() {
                write!(out, "{i},{}", fmt_float(w))?;
                for &c in p.coords() {
                    write!(out, ",{}", fmt_float(c))?;
                }
                writeln!(out)?;
            }
        }
        MeasureSupport::GridCells { spec, indices } => {
            let dim = spec.dim();
            write!(out, "cell,weight")?;
            for d in 0..dim {
                write!(out, ",center{d}")?;
            }
            writeln!(out)?;
            for (&cell, &w) in indices.iter().zip(&mu.weights) {
                write!(out, "{cell},{}", fmt_float(w))?;
                for &c in spec.cell_center(cell).coords() {
                    write!(out, ",{}", fmt_float(c))?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

/// One row per (radius, direction):
/// `candidate,radius,direction,acceptance_mass,acceptance_error,exp_integral,exp_integral_log,exp_integral_rel_error`.
pub fn write_probe_csv<T: Scalar, W: Write>(
    report: &LimitProbeReport<T>,
    out: &mut W,
) -> io::Result<()> {
    writeln!(
        out,
        "candidate,radius,direction,acceptance_mass,acceptance_error,exp_integral,exp_integral_log,exp_integral_rel_error"
    )?;
    for (i, &radius) in report.radii.iter().enumerate() {
        for j in 0..report.directions.len() {
            let log_e = report.exp_integral_log[i][j];
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                report.candidate_label,
                fmt_float(radius),
                j,
                fmt_float(report.acceptance_mass[i][j]),
                fmt_float(report.acceptance_error[i][j]),
                fmt_float(log_e.exp()),
                fmt_float(log_e),
                fmt_float(report.exp_integral_error[i][j]),
            )?;
        }
    }
    Ok(())
}

/// Dense transition matrix: `state,p0,...,p{m-1}`.
pub fn write_chain_csv<T: Scalar, W: Write>(chain: &GridChain<T>, out: &mut W) -> io::Result<()> {
    let m = chain.n_states();
    write!(out, "state")?;
    for j in 0..m {
        write!(out, ",p{j}")?;
    }
    writeln!(out)?;
    for i in 0..m {
        write!(out, "{i}")?;
        for j in 0..m {
            write!(out, ",{}", fmt_float(chain.transition(i, j)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Single row: `value,dual_value,gap,iterations,marginal_violation,infeasible`.
pub fn write_rate_csv<T: Scalar, W: Write>(result: &RateResult<T>, out: &mut W) -> io::Result<()> {
    writeln!(out, "value,dual_value,gap,iterations,marginal_violation,infeasible")?;
    writeln!(
        out,
        "{},{},{},{},{},{}",
        fmt_float(result.value),
        fmt_float(result.dual_value),
        fmt_float(result.gap),
        result.iterations,
        fmt_float(result.marginal_violation),
        result.infeasibility.as_deref().unwrap_or(""),
    )
}

/// The optimal coupling as a dense matrix: `row,g0,...,g{m-1}`.
pub fn write_coupling_csv<T: Scalar, W: Write>(
    result: &RateResult<T>,
    out: &mut W,
) -> io::Result<()> {
    let Some(gamma) = &result.coupling else {
        return Ok(());
    };
    let m = gamma.n();
    write!(out, "row")?;
    for j in 0..m {
        write!(out, ",g{j}")?;
    }
    writeln!(out)?;
    for i in 0..m {
        write!(out, "{i}")?;
        for j in 0..m {
            write!(out, ",{}", fmt_float(gamma.get(i, j)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One row per n: `n,log_prob,slope,rate_infimum` (the infimum column is the
/// same mesh minimum repeated for diff-friendliness).
pub fn write_slope_csv<T: Scalar, W: Write>(report: &SlopeReport<T>, out: &mut W) -> io::Result<()> {
    writeln!(out, "n,log_prob,slope,rate_infimum")?;
    for i in 0..report.n_values.len() {
        writeln!(
            out,
            "{},{},{},{}",
            report.n_values[i],
            fmt_float(report.log_probs[i]),
            fmt_float(report.slopes[i]),
            fmt_float(report.rate_infimum),
        )?;
    }
    Ok(())
}

/// One row per iterate: `iterate,tv,fit_residual`.
pub fn write_tv_csv<T: Scalar, W: Write>(report: &TvDecayReport<T>, out: &mut W) -> io::Result<()> {
    writeln!(out, "iterate,tv,fit_residual")?;
    for i in 0..report.iterates.len() {
        writeln!(
            out,
            "{},{},{}",
            report.iterates[i],
            fmt_float(report.tv[i]),
            fmt_float(report.fit_residuals[i]),
        )?;
    }
    Ok(())
}

fn json_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One-line JSON record of a classification verdict.
pub fn verdict_record<T: Scalar>(label: &str, v: &RegimeVerdict<T>) -> String {
    format!(
        "{{\"label\":\"{}\",\"family\":\"{}\",\"exists_lyapunov\":\"{}\",\"ldp\":\"{}\",\"params\":\"{}\",\"clause\":\"{}\"}}",
        json_escape(label),
        v.family,
        v.existence,
        v.ldp,
        json_escape(&v.params_tag),
        json_escape(&v.clause),
    )
}
