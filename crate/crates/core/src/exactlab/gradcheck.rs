//! Derivative checks: supplied gradients and Jacobians against central
//! differences, and step-size consistency of the penalty's FD gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{fd_gradient, fd_jacobian, ConstrainedProblem};
use crate::sampling::ScrambledHalton;
use crate::separating::SeparatingFunction;

/// Relative tolerance for analytic-versus-FD agreement.
pub const ANALYTIC_TOL: f64 = 1e-5;
/// Relative tolerance between FD gradients at steps `h` and `h/2`.
pub const STEP_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub problem: String,
    pub penalty: String,
    pub c: f64,
    pub points: usize,
    /// Worst relative error per supplied derivative (`None` when not supplied).
    pub objective_rel_err: Option<f64>,
    pub soc_jacobian_rel_err: Option<f64>,
    pub sdp_partials_rel_err: Option<f64>,
    pub eq_jacobian_rel_err: Option<f64>,
    /// Worst relative gap between FD gradients of `F(·, c)` at two steps.
    pub penalty_step_rel_diff: Option<f64>,
    /// Points where `F(·, c)` was finite around the point.
    pub penalty_points_used: usize,
    /// Whether the step gap gates `passed` (smooth families only).
    pub penalty_gated: bool,
    pub passed: bool,
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = 1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn worst(acc: &mut Option<f64>, v: f64) {
    *acc = Some(acc.map_or(v, |a| a.max(v)));
}

/// Checks `n_points` Halton points of the box. `smooth` marks penalties
/// that are `C¹`, for which FD step consistency is part of the verdict.
pub fn gradient_check(
    sf: &dyn SeparatingFunction<f64>,
    c: f64,
    n_points: usize,
    seed: u64,
    smooth: bool,
) -> Result<GradCheckReport> {
    let p: &ConstrainedProblem<f64> = sf.problem();
    if !p.bounds.is_bounded() {
        return Err(Error::InvalidInput(format!(
            "{}: gradient check needs a bounded box",
            p.name
        )));
    }
    if n_points == 0 {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    let mut halton = ScrambledHalton::new(p.dim, seed);
    let mut report = GradCheckReport {
        problem: p.name.clone(),
        penalty: sf.label(),
        c,
        points: n_points,
        objective_rel_err: None,
        soc_jacobian_rel_err: None,
        sdp_partials_rel_err: None,
        eq_jacobian_rel_err: None,
        penalty_step_rel_diff: None,
        penalty_points_used: 0,
        penalty_gated: smooth,
        passed: true,
    };
    for _ in 0..n_points {
        let x = halton.next_in_box(&p.bounds.lower, &p.bounds.upper);
        if let Some(g) = &p.gradient {
            let fd = fd_gradient(|z| p.f(z), &x, None)?;
            worst(&mut report.objective_rel_err, rel_err(&g(&x), &fd));
        }
        for b in &p.soc_blocks {
            if let Some(j) = &b.jacobian {
                let fd = fd_jacobian(|z| (b.map)(z), &x, None)?;
                let e = j(&x).iter().zip(&fd).map(|(a, b)| rel_err(a, b)).fold(0.0, f64::max);
                worst(&mut report.soc_jacobian_rel_err, e);
            }
        }
        if let Some(s) = &p.sdp {
            if let Some(part) = &s.partials {
                let fd = fd_jacobian(|z| (s.map)(z).upper(), &x, None)?;
                let e = part(&x)
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let col: Vec<f64> = fd.iter().map(|row| row[k]).collect();
                        rel_err(&m.upper(), &col)
                    })
                    .fold(0.0, f64::max);
                worst(&mut report.sdp_partials_rel_err, e);
            }
        }
        if let Some(eq) = &p.eq {
            if let Some(j) = &eq.jacobian {
                let fd = fd_jacobian(|z| (eq.map)(z), &x, None)?;
                let e = j(&x).iter().zip(&fd).map(|(a, b)| rel_err(a, b)).fold(0.0, f64::max);
                worst(&mut report.eq_jacobian_rel_err, e);
            }
        }
        let h = 1e-5 * (1.0 + crate::numerics::norm(&x));
        let f = |z: &[f64]| sf.eval(z, c).unwrap_or(f64::NAN);
        if let (Ok(g1), Ok(g2)) = (fd_gradient(f, &x, Some(h)), fd_gradient(f, &x, Some(h / 2.0))) {
            report.penalty_points_used += 1;
            worst(&mut report.penalty_step_rel_diff, rel_err(&g2, &g1));
        }
    }
    let analytic_ok = [
        report.objective_rel_err,
        report.soc_jacobian_rel_err,
        report.sdp_partials_rel_err,
        report.eq_jacobian_rel_err,
    ]
    .iter()
    .all(|e| e.is_none_or(|v| v <= ANALYTIC_TOL));
    let step_ok = !smooth || report.penalty_step_rel_diff.is_none_or(|v| v <= STEP_TOL);
    report.passed = analytic_ok && step_ok;
    Ok(report)
}
