//! Benchmark problems with analytic solutions and multipliers.

use std::sync::Arc;

use super::{BoxSet, ConstrainedProblem, KnownSolution, Multipliers};
use crate::cones::proj_lorentz;
use crate::error::{Error, Result};
use crate::numerics::SymMat;
use crate::scalar::Real;

pub const REGISTRY_NAMES: [&str; 5] = ["toy-lin-1", "toy-eq-1", "toy-socp-1", "toy-socp-2", "toy-sdp-1"];

/// All benchmark problems, in `REGISTRY_NAMES` order.
pub fn registry<T: Real>() -> Vec<ConstrainedProblem<T>> {
    REGISTRY_NAMES
        .iter()
        .map(|n| lookup(n).expect("registry entries are valid"))
        .collect()
}

/// Looks a problem up by name (case-insensitive) and validates its certificate.
pub fn lookup<T: Real>(name: &str) -> Result<ConstrainedProblem<T>> {
    let p = match name.to_ascii_lowercase().as_str() {
        "toy-lin-1" => toy_lin_1(),
        "toy-eq-1" => toy_eq_1(),
        "toy-socp-1" => toy_socp_1(),
        "toy-socp-2" => toy_socp_2(),
        "toy-sdp-1" => toy_sdp_1(),
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    p.validate_certificate()?;
    Ok(p)
}

fn lit<T: Real>(v: f64) -> T {
    T::lit(v)
}

/// min −x s.t. x ≤ 0 on [−2, 2]. The constraint is the degenerate Lorentz
/// block `(−x, 0) ∈ Q_2`, whose distance is exactly `max(0, x)`.
fn toy_lin_1<T: Real>() -> ConstrainedProblem<T> {
    ConstrainedProblem::new("toy-lin-1", 1, Arc::new(|x: &[T]| -x[0]))
        .with_gradient(Arc::new(|_: &[T]| vec![-T::one()]))
        .with_soc_block(
            2,
            Arc::new(|x: &[T]| vec![-x[0], T::zero()]),
            Some(Arc::new(|_: &[T]| vec![vec![-T::one()], vec![T::zero()]])),
        )
        .with_bounds(BoxSet::uniform(1, lit(-2.0), lit(2.0)))
        .with_certificate(KnownSolution {
            x_star: vec![T::zero()],
            f_star: T::zero(),
            multipliers: Some(Multipliers {
                soc: vec![vec![-T::one(), T::zero()]],
                sdp: None,
                eq: vec![],
            }),
        })
        .with_omega_projection(Arc::new(|x: &[T]| vec![x[0].max(lit(-2.0)).min(T::zero())]))
}

fn eq_line_projection<T: Real>(x: &[T], t_lo: T, t_hi: T) -> Vec<T> {
    // Closest point (t, 2 − t) on x1 + x2 = 2, clamped to the admissible range.
    let t = ((x[0] - x[1] + lit(2.0)) / lit(2.0)).max(t_lo).min(t_hi);
    vec![t, lit::<T>(2.0) - t]
}

/// min x1² + x2² s.t. x1 + x2 = 2.
fn toy_eq_1<T: Real>() -> ConstrainedProblem<T> {
    ConstrainedProblem::new("toy-eq-1", 2, Arc::new(|x: &[T]| x[0] * x[0] + x[1] * x[1]))
        .with_gradient(Arc::new(|x: &[T]| vec![x[0] + x[0], x[1] + x[1]]))
        .with_eq(
            1,
            Arc::new(|x: &[T]| vec![x[0] + x[1] - lit(2.0)]),
            Some(Arc::new(|_: &[T]| vec![vec![T::one(), T::one()]])),
        )
        .with_bounds(BoxSet::uniform(2, lit(-3.0), lit(3.0)))
        .with_certificate(KnownSolution {
            x_star: vec![T::one(), T::one()],
            f_star: lit(2.0),
            multipliers: Some(Multipliers {
                soc: vec![],
                sdp: None,
                eq: vec![lit(-2.0)],
            }),
        })
        .with_omega_projection(Arc::new(|x: &[T]| eq_line_projection(x, lit(-1.0), lit(3.0))))
        .with_nonnegative_objective(true)
}

fn socp_objective<T: Real>(x: &[T]) -> T {
    let d = x[1] - lit(2.0);
    x[0] * x[0] + d * d
}

/// min x1² + (x2 − 2)² s.t. (x1, x2) ∈ Q_2.
fn toy_socp_1<T: Real>() -> ConstrainedProblem<T> {
    ConstrainedProblem::new("toy-socp-1", 2, Arc::new(socp_objective::<T>))
        .with_gradient(Arc::new(|x: &[T]| vec![x[0] + x[0], lit::<T>(2.0) * (x[1] - lit(2.0))]))
        .with_soc_block(
            2,
            Arc::new(|x: &[T]| x.to_vec()),
            Some(Arc::new(|_: &[T]| {
                vec![vec![T::one(), T::zero()], vec![T::zero(), T::one()]]
            })),
        )
        .with_bounds(BoxSet::uniform(2, lit(-3.0), lit(3.0)))
        .with_certificate(KnownSolution {
            x_star: vec![T::one(), T::one()],
            f_star: lit(2.0),
            multipliers: Some(Multipliers {
                soc: vec![vec![lit(-2.0), lit(2.0)]],
                sdp: None,
                eq: vec![],
            }),
        })
        // Projections of box points onto Q_2 stay inside the box.
        .with_omega_projection(Arc::new(|x: &[T]| proj_lorentz(x)))
        .with_nonnegative_objective(true)
}

/// Toy-SOCP-1 plus the equality x1 + x2 = 2, which passes through the same
/// optimum. The optimum stays nondegenerate, so the multipliers are unique
/// (`μ* = 0`).
fn toy_socp_2<T: Real>() -> ConstrainedProblem<T> {
    let mut p = toy_socp_1::<T>()
        .with_eq(
            1,
            Arc::new(|x: &[T]| vec![x[0] + x[1] - lit(2.0)]),
            Some(Arc::new(|_: &[T]| vec![vec![T::one(), T::one()]])),
        )
        // Ω = {(t, 2 − t) : 1 ≤ t ≤ 3} inside the box.
        .with_omega_projection(Arc::new(|x: &[T]| eq_line_projection(x, T::one(), lit(3.0))));
    p.name = "toy-socp-2".into();
    if let Some(c) = p.certificate.as_mut() {
        if let Some(m) = c.multipliers.as_mut() {
            m.eq = vec![T::zero()];
        }
    }
    p
}

/// min (x1 − 1)² + (x2 − 1)² s.t. diag(x1 − 0.5, −x2) ⪯ 0.
fn toy_sdp_1<T: Real>() -> ConstrainedProblem<T> {
    ConstrainedProblem::new(
        "toy-sdp-1",
        2,
        Arc::new(|x: &[T]| {
            let (a, b) = (x[0] - T::one(), x[1] - T::one());
            a * a + b * b
        }),
    )
    .with_gradient(Arc::new(|x: &[T]| {
        vec![lit::<T>(2.0) * (x[0] - T::one()), lit::<T>(2.0) * (x[1] - T::one())]
    }))
    .with_sdp(
        2,
        Arc::new(|x: &[T]| SymMat::from_diag(&[x[0] - lit(0.5), -x[1]])),
        Some(Arc::new(|_: &[T]| {
            vec![
                SymMat::from_diag(&[T::one(), T::zero()]),
                SymMat::from_diag(&[T::zero(), -T::one()]),
            ]
        })),
    )
    .with_bounds(BoxSet::uniform(2, lit(-3.0), lit(3.0)))
    .with_certificate(KnownSolution {
        x_star: vec![lit(0.5), T::one()],
        f_star: lit(0.25),
        multipliers: Some(Multipliers {
            soc: vec![],
            sdp: Some(SymMat::from_diag(&[T::one(), T::zero()])),
            eq: vec![],
        }),
    })
    .with_omega_projection(Arc::new(|x: &[T]| {
        vec![x[0].max(lit(-3.0)).min(lit(0.5)), x[1].max(T::zero()).min(lit(3.0))]
    }))
    .with_nonnegative_objective(true)
}
