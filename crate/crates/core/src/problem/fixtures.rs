//! Problems outside the benchmark registry, used to exercise failure modes
//! of the probes and the estimators.

use std::sync::Arc;

use super::{BoxSet, ConstrainedProblem, KnownSolution, Multipliers};
use crate::numerics::norm;
use crate::scalar::Real;

/// min x + 1 s.t. x ≥ 0 on [−1, 1]; `φ = max(0, −x)` through the block `(x, 0) ∈ Q_2`.
pub fn q_toy<T: Real>() -> ConstrainedProblem<T> {
    ConstrainedProblem::new("fixture-q-toy", 1, Arc::new(|x: &[T]| x[0] + T::one()))
        .with_gradient(Arc::new(|_: &[T]| vec![T::one()]))
        .with_soc_block(
            2,
            Arc::new(|x: &[T]| vec![x[0], T::zero()]),
            Some(Arc::new(|_: &[T]| vec![vec![T::one()], vec![T::zero()]])),
        )
        .with_bounds(BoxSet::uniform(1, -T::one(), T::one()))
        .with_certificate(KnownSolution {
            x_star: vec![T::zero()],
            f_star: T::one(),
            multipliers: Some(Multipliers {
                soc: vec![vec![-T::one(), T::zero()]],
                sdp: None,
                eq: vec![],
            }),
        })
        .with_omega_projection(Arc::new(|x: &[T]| vec![x[0].max(T::zero()).min(T::one())]))
        .with_nonnegative_objective(true)
}

/// Toy-SOCP-1 plus x1 − x2 = 0: the equality is tangent to the cone at the
/// optimum, multipliers are not unique and the estimate subproblem is singular.
pub fn degenerate_socp<T: Real>() -> ConstrainedProblem<T> {
    let mut p = super::lookup::<T>("toy-socp-1").expect("registry entry").with_eq(
        1,
        Arc::new(|x: &[T]| vec![x[0] - x[1]]),
        Some(Arc::new(|_: &[T]| vec![vec![T::one(), -T::one()]])),
    );
    p.name = "fixture-degenerate-socp".into();
    p.omega_projection = None;
    if let Some(m) = p.certificate.as_mut().and_then(|c| c.multipliers.as_mut()) {
        m.eq = vec![T::zero()];
    }
    p
}

/// min −‖x‖ s.t. ‖x‖ ≤ 1, i.e. `(1, x) ∈ Q_3`, on [−4, 4]². The objective is
/// not coercive, so a loose penalty has points below `f*` far from `Ω`.
pub fn noncoercive<T: Real>() -> ConstrainedProblem<T> {
    ConstrainedProblem::new("fixture-noncoercive", 2, Arc::new(|x: &[T]| -norm(x)))
        .with_soc_block(3, Arc::new(|x: &[T]| vec![T::one(), x[0], x[1]]), None)
        .with_bounds(BoxSet::uniform(2, T::lit(-4.0), T::lit(4.0)))
        .with_certificate(KnownSolution {
            x_star: vec![T::one(), T::zero()],
            f_star: -T::one(),
            multipliers: None,
        })
}

/// min −x s.t. x ≤ 0 on a wide box: for `c < 1` the penalized minimizer
/// runs to the far edge of the box.
pub fn escaping<T: Real>() -> ConstrainedProblem<T> {
    let mut p = super::lookup::<T>("toy-lin-1").expect("registry entry");
    p.name = "fixture-escaping".into();
    p.bounds = BoxSet::uniform(1, T::lit(-1.0e3), T::lit(1.0e3));
    p.omega_projection = Some(Arc::new(|x: &[T]| vec![x[0].max(T::lit(-1.0e3)).min(T::zero())]));
    p
}
