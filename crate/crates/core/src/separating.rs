use crate::error::Result;
use crate::problem::ConstrainedProblem;
use crate::scalar::Real;

/// A separating function `F(x, c)` absorbing the constraints of a problem.
///
/// Any extra tuning parameter (multipliers of an augmented Lagrangian) is
/// fixed at construction. Points outside the effective domain evaluate to
/// `+∞` rather than an error.
pub trait SeparatingFunction<T: Real>: Send + Sync {
    fn label(&self) -> String;

    fn problem(&self) -> &ConstrainedProblem<T>;

    fn eval(&self, x: &[T], c: T) -> Result<T>;

    /// Target value at a constrained optimum (`f*` in the units of `F`).
    fn optimal_value(&self) -> Option<T> {
        self.problem().certificate.as_ref().map(|c| c.f_star)
    }
}
