//! Classic separating functions: the linear penalty `f + cφ` and the
//! nonlinear penalty `Q(f, cφ)`, plus sufficient-condition checkers for
//! their local exactness.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::ConstrainedProblem;
use crate::sampling::{rng, uniform_in_ball, ScrambledHalton};
use crate::scalar::Real;
use crate::separating::SeparatingFunction;

/// Infeasibility measure `φ ≥ 0`, zero exactly on the constraint set.
pub type PhiFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// `φ(x) = ` total feasibility gap of the problem.
pub fn default_phi<T: Real>(p: &ConstrainedProblem<T>) -> PhiFn<T> {
    let p = p.clone();
    Arc::new(move |x: &[T]| p.feasibility_gap(x).map(|g| g.total()).unwrap_or_else(|_| T::nan()))
}

fn check_c<T: Real>(c: T) -> Result<()> {
    if !(c > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "penalty parameter must be positive, got {c}"
        )));
    }
    Ok(())
}

/// `F(x, c) = f(x) + c φ(x)`.
#[derive(Clone)]
pub struct LinearPenalty<T> {
    problem: ConstrainedProblem<T>,
    phi: PhiFn<T>,
}

impl<T: Real> LinearPenalty<T> {
    pub fn new(problem: ConstrainedProblem<T>) -> Self {
        let phi = default_phi(&problem);
        Self { problem, phi }
    }

    pub fn with_phi(problem: ConstrainedProblem<T>, phi: PhiFn<T>) -> Self {
        Self { problem, phi }
    }

    pub fn phi(&self, x: &[T]) -> T {
        (self.phi)(x)
    }

    pub fn linear_eval(&self, x: &[T], c: T) -> Result<T> {
        check_c(c)?;
        let f = self.problem.f(x);
        let v = if f == T::infinity() { f } else { f + c * self.phi(x) };
        if v.is_nan() {
            return Err(Error::NonFiniteEvaluation("linear penalty".into()));
        }
        Ok(v)
    }
}

impl<T: Real> SeparatingFunction<T> for LinearPenalty<T> {
    fn label(&self) -> String {
        "linear".into()
    }

    fn problem(&self) -> &ConstrainedProblem<T> {
        &self.problem
    }

    fn eval(&self, x: &[T], c: T) -> Result<T> {
        self.linear_eval(x, c)
    }
}

/// A function `Q : [0, +∞]² → (−∞, +∞]`, strictly monotone on `[0, +∞)²`
/// with `Q(+∞, ·) = Q(·, +∞) = +∞`.
pub trait QFunction<T: Real>: Send + Sync {
    fn eval(&self, t: T, s: T) -> T;
}

/// `Q(t, s) = (t^q + s^q)^{1/q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QOrder<T> {
    pub q: T,
}

impl<T: Real> QOrder<T> {
    pub fn new(q: T) -> Result<Self> {
        if !(q > T::zero()) || !q.is_finite() {
            return Err(Error::InvalidInput(format!("q must be positive, got {q}")));
        }
        Ok(Self { q })
    }
}

impl<T: Real> QFunction<T> for QOrder<T> {
    fn eval(&self, t: T, s: T) -> T {
        if t == T::infinity() || s == T::infinity() {
            return T::infinity();
        }
        if self.q == T::one() {
            return t + s;
        }
        (t.powf(self.q) + s.powf(self.q)).powf(self.q.recip())
    }
}

/// Strict monotonicity of `Q` on an `n × n` grid of `[0, t_max]²`: every pair of
/// comparable, distinct grid points is strictly ordered.
pub fn check_strict_monotone<T: Real>(q: &dyn QFunction<T>, t_max: T, n: usize) -> bool {
    let pts: Vec<T> = (0..n)
        .map(|i| t_max * T::lit(i as f64) / T::lit((n - 1).max(1) as f64))
        .collect();
    let vals: Vec<Vec<T>> = pts
        .iter()
        .map(|&t| pts.iter().map(|&s| q.eval(t, s)).collect())
        .collect();
    // Comparable pairs are ordered iff each step right or up increases strictly.
    for i in 0..n {
        for j in 0..n {
            if i + 1 < n && !(vals[i + 1][j] > vals[i][j]) {
                return false;
            }
            if j + 1 < n && !(vals[i][j + 1] > vals[i][j]) {
                return false;
            }
        }
    }
    true
}

/// `F(x, c) = Q(f(x), c φ(x))` for a non-negative objective.
#[derive(Clone)]
pub struct QPenalty<T, Q> {
    problem: ConstrainedProblem<T>,
    q: Q,
    phi: PhiFn<T>,
}

impl<T: Real, Q: QFunction<T>> QPenalty<T, Q> {
    pub fn new(problem: ConstrainedProblem<T>, q: Q) -> Self {
        let phi = default_phi(&problem);
        Self { problem, q, phi }
    }

    pub fn with_phi(problem: ConstrainedProblem<T>, q: Q, phi: PhiFn<T>) -> Self {
        Self { problem, q, phi }
    }

    pub fn qpen_eval(&self, x: &[T], c: T) -> Result<T> {
        check_c(c)?;
        let f = self.problem.f(x);
        if f < -T::tol(1e-12) {
            return Err(Error::NegativeObjective { value: f.as_f64() });
        }
        let phi = (self.phi)(x);
        let v = self.q.eval(f.max(T::zero()), c * phi);
        if v.is_nan() {
            return Err(Error::NonFiniteEvaluation("nonlinear penalty".into()));
        }
        Ok(v)
    }
}

impl<T: Real, Q: QFunction<T>> SeparatingFunction<T> for QPenalty<T, Q> {
    fn label(&self) -> String {
        "qorder".into()
    }

    fn problem(&self) -> &ConstrainedProblem<T> {
        &self.problem
    }

    fn eval(&self, x: &[T], c: T) -> Result<T> {
        self.qpen_eval(x, c)
    }

    fn optimal_value(&self) -> Option<T> {
        let f = self.problem.certificate.as_ref()?.f_star;
        Some(self.q.eval(f, T::zero()))
    }
}

/// Checks `Q(f* − t, c0 t) ≥ Q(f*, 0)` on `n_grid` points `t ∈ [0, t0)`.
///
/// A relative slack of `1e-12` absorbs rounding in cases of exact equality
/// (such as `q = 1`).
pub fn check_q_local_condition<T: Real>(q: &dyn QFunction<T>, f_star: T, c0: T, t0: T, n_grid: usize) -> Result<bool> {
    if !(f_star > T::zero()) || !(t0 > T::zero() && t0 < f_star) {
        return Err(Error::InvalidInput("need f* > 0 and 0 < t0 < f*".into()));
    }
    let base = q.eval(f_star, T::zero());
    let slack = T::tol(1e-12) * (T::one() + base.abs());
    Ok((0..n_grid).all(|k| {
        let t = t0 * T::lit(k as f64) / T::lit(n_grid as f64);
        q.eval(f_star - t, c0 * t) >= base - slack
    }))
}

/// Empirical error-bound modulus `τ` in `φ(x) ≥ τ dist(x, Ω)^α` near a feasible point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundEstimate<T> {
    /// Minimum sampled ratio; `+∞` when no infeasible sample was drawn.
    pub tau: T,
    pub alpha_holder: T,
    pub radius: T,
    pub sample_count: usize,
}

const FALLBACK_SAMPLES: usize = 100_000;
const NEAREST_REFINED: usize = 16;

type DistFn<'a, T> = Box<dyn Fn(&[T]) -> T + 'a>;

/// Distance to `Ω`: the registered projection, or else the minimum distance
/// over quasi-random feasible samples of the box (an over-estimate of the
/// true distance, so `τ` is under-estimated only up to sampling density).
fn omega_distance<T: Real>(p: &ConstrainedProblem<T>) -> Result<DistFn<'_, T>> {
    if p.omega_projection.is_some() {
        return Ok(Box::new(move |x: &[T]| p.dist_to_omega(x).unwrap()));
    }
    if !p.bounds.is_bounded() {
        return Err(Error::NoFeasibleDistanceOracle);
    }
    let lo: Vec<f64> = p.bounds.lower.iter().map(|v| v.as_f64()).collect();
    let hi: Vec<f64> = p.bounds.upper.iter().map(|v| v.as_f64()).collect();
    let mut h = ScrambledHalton::new(p.dim, 0);
    let feasible: Vec<Vec<T>> = (0..FALLBACK_SAMPLES)
        .map(|_| h.next_in_box(&lo, &hi).into_iter().map(T::lit).collect::<Vec<T>>())
        .filter(|x| {
            p.feasibility_gap(x)
                .map(|g| g.total() <= T::tol(1e-12))
                .unwrap_or(false)
        })
        .collect();
    if feasible.is_empty() {
        return Err(Error::NoFeasibleDistanceOracle);
    }
    let is_feasible = move |z: &[T]| {
        p.feasibility_gap(z)
            .map(|g| g.total() <= T::tol(1e-12))
            .unwrap_or(false)
    };
    Ok(Box::new(move |x: &[T]| {
        if is_feasible(x) {
            return T::zero();
        }
        let mut near: Vec<(T, &Vec<T>)> = feasible.iter().map(|y| (crate::numerics::dist(x, y), y)).collect();
        near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        // Tighten with the first feasible point on the segment towards each of
        // the nearest samples.
        near.iter()
            .take(NEAREST_REFINED)
            .map(|&(d, y)| {
                let (mut lo, mut hi) = (T::zero(), T::one());
                for _ in 0..48 {
                    let mid = (lo + hi) / T::lit(2.0);
                    let z: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a + mid * (b - a)).collect();
                    if is_feasible(&z) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                d * hi
            })
            .fold(T::infinity(), T::min)
    }))
}

/// Samples `n_samples` uniform points of `B(x_center, r) ∩ A` and returns the
/// minimum of `φ(x) / dist(x, Ω)^α` over those with `dist(x, Ω) > 1e-9`.
pub fn estimate_error_bound<T: Real>(
    p: &ConstrainedProblem<T>,
    phi: &dyn Fn(&[T]) -> T,
    x_center: &[T],
    r: T,
    alpha: T,
    n_samples: usize,
    seed: u64,
) -> Result<ErrorBoundEstimate<T>> {
    if !(r > T::zero()) || !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::InvalidInput("need r > 0 and alpha in (0, 1]".into()));
    }
    if p.feasibility_gap(x_center)?.total() > T::tol(1e-9) {
        return Err(Error::InvalidInput("error-bound centre must be feasible".into()));
    }
    let dist = omega_distance(p)?;
    let centre: Vec<f64> = x_center.iter().map(|v| v.as_f64()).collect();
    let mut rng = rng(seed);
    let mut tau = T::infinity();
    let mut drawn = 0;
    let mut attempts = 0usize;
    while drawn < n_samples && attempts < 1000 * n_samples.max(1) {
        attempts += 1;
        let x: Vec<T> = uniform_in_ball(&mut rng, &centre, r.as_f64())
            .into_iter()
            .map(T::lit)
            .collect();
        if !p.bounds.contains(&x) {
            continue;
        }
        drawn += 1;
        let d = dist(&x);
        if d > T::lit(1e-9) {
            tau = tau.min(phi(&x) / d.powf(alpha));
        }
    }
    Ok(ErrorBoundEstimate {
        tau,
        alpha_holder: alpha,
        radius: r,
        sample_count: drawn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{fixtures, lookup};

    fn lin() -> LinearPenalty<f64> {
        LinearPenalty::new(lookup("toy-lin-1").unwrap())
    }

    /// Brute-force minimizer of a 1-D function on `[lo, hi]`.
    fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .map(|x| (x, f(x)))
            .fold((f64::NAN, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
    }

    #[test]
    fn linear_examples() {
        let lp = lin();
        for c in [0.1, 1.0, 50.0] {
            assert_eq!(lp.linear_eval(&[0.0], c).unwrap(), 0.0);
        }
        assert!((lp.linear_eval(&[1.0], 3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((lp.linear_eval(&[-2.0], 5.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(lp.linear_eval(&[0.0], 0.0).is_err());
    }

    #[test]
    fn linear_grid_oracle_locates_kink() {
        let lp = lin();
        let (x, _) = grid_argmin(|x| lp.linear_eval(&[x], 3.0).unwrap(), -2.0, 2.0, 4000);
        assert!(x.abs() < 1e-12);
        let (x, _) = grid_argmin(|x| lp.linear_eval(&[x], 0.5).unwrap(), -2.0, 2.0, 4000);
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_is_affine_in_c() {
        let lp = lin();
        let (a, b, c) = (
            lp.linear_eval(&[0.7], 1.0).unwrap(),
            lp.linear_eval(&[0.7], 2.0).unwrap(),
            lp.linear_eval(&[0.7], 3.0).unwrap(),
        );
        assert!(b > a && ((c - b) - (b - a)).abs() < 1e-14);
        assert_eq!(
            lp.linear_eval(&[-0.7], 1.0).unwrap(),
            lp.linear_eval(&[-0.7], 9.0).unwrap()
        );
    }

    #[test]
    fn linear_propagates_infinity_and_rejects_nan() {
        let mut p = lookup::<f64>("toy-lin-1").unwrap();
        p.objective = Arc::new(|x: &[f64]| if x[0] > 1.0 { f64::INFINITY } else { f64::NAN });
        let lp = LinearPenalty::new(p);
        assert_eq!(lp.linear_eval(&[1.5], 2.0).unwrap(), f64::INFINITY);
        assert!(matches!(
            lp.linear_eval(&[0.5], 2.0),
            Err(Error::NonFiniteEvaluation(_))
        ));
    }

    #[test]
    fn q_examples() {
        let p = fixtures::q_toy::<f64>();
        let q1 = QPenalty::new(p.clone(), QOrder::new(1.0).unwrap());
        assert!((q1.qpen_eval(&[0.0], 2.0).unwrap() - 1.0).abs() < 1e-15);
        let q2 = QPenalty::new(p.clone(), QOrder::new(2.0).unwrap());
        assert!((q2.qpen_eval(&[-1.0], 2.0).unwrap() - 2.0).abs() < 1e-15);
        // Feasible points reduce to Q(f, 0) = f.
        assert!((q2.qpen_eval(&[0.4], 7.0).unwrap() - 1.4).abs() < 1e-15);
        assert_eq!(QOrder::new(0.5).unwrap().eval(f64::INFINITY, 0.0), f64::INFINITY);
        assert!(QOrder::new(0.0f64).is_err());
    }

    #[test]
    fn q_grid_oracle_confirms_exact_threshold() {
        let q1 = QPenalty::new(fixtures::q_toy::<f64>(), QOrder::new(1.0).unwrap());
        for c in [1.5, 3.0] {
            let (x, _) = grid_argmin(|x| q1.qpen_eval(&[x], c).unwrap(), -1.0, 1.0, 2000);
            assert!(x.abs() < 1e-12, "c = {c}: {x}");
        }
    }

    #[test]
    fn negative_objective_is_rejected() {
        let qp = QPenalty::new(lookup::<f64>("toy-lin-1").unwrap(), QOrder::new(1.0).unwrap());
        assert!(matches!(
            qp.qpen_eval(&[1.0], 2.0),
            Err(Error::NegativeObjective { .. })
        ));
        let qp = QPenalty::new(
            lookup::<f64>("toy-lin-1").unwrap().exp_transformed(),
            QOrder::new(1.0).unwrap(),
        );
        assert!((qp.qpen_eval(&[1.0], 2.0).unwrap() - ((-1.0f64).exp() + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn q_order_is_strictly_monotone() {
        for q in [0.5, 1.0, 2.0, 3.0] {
            assert!(check_strict_monotone(&QOrder::new(q).unwrap(), 5.0, 20));
        }
        struct Flat;
        impl QFunction<f64> for Flat {
            fn eval(&self, t: f64, s: f64) -> f64 {
                t.max(s)
            }
        }
        assert!(!check_strict_monotone(&Flat, 5.0, 20));
    }

    #[test]
    fn q_local_condition() {
        let cond = |q: f64, t0: f64| check_q_local_condition(&QOrder::new(q).unwrap(), 1.0, 1.0, t0, 1000).unwrap();
        assert!(cond(1.0, 0.9));
        assert!(cond(0.5, 0.9));
        assert!(!cond(2.0, 0.9));
        assert!(!cond(2.0, 0.01));
        assert!(check_q_local_condition(&QOrder::new(1.0).unwrap(), 1.0, 1.0, 1.5, 10).is_err());
    }

    #[test]
    fn error_bound_examples() {
        let p = lookup::<f64>("toy-lin-1").unwrap();
        let phi = |x: &[f64]| x[0].max(0.0);
        let e = estimate_error_bound(&p, &phi, &[0.0], 0.5, 1.0, 2000, 3).unwrap();
        assert!(e.tau >= 0.999 && e.tau <= 1.001, "{e:?}");
        let phi2 = |x: &[f64]| 2.0 * x[0].max(0.0);
        let e2 = estimate_error_bound(&p, &phi2, &[0.0], 0.5, 1.0, 2000, 3).unwrap();
        assert!((e2.tau / e.tau - 2.0).abs() < 0.02);
        let phi_sq = |x: &[f64]| x[0].max(0.0).powi(2);
        let e3 = estimate_error_bound(&p, &phi_sq, &[0.0], 0.5, 1.0, 2000, 3).unwrap();
        assert!(e3.tau < 0.01);
    }

    #[test]
    fn error_bound_without_infeasible_samples_is_infinite() {
        let p = lookup::<f64>("toy-lin-1").unwrap();
        let e = estimate_error_bound(&p, &|x: &[f64]| x[0].max(0.0), &[-1.5], 0.2, 1.0, 100, 1).unwrap();
        assert_eq!(e.tau, f64::INFINITY);
    }

    #[test]
    fn error_bound_distance_fallback() {
        let mut p = lookup::<f64>("toy-socp-1").unwrap();
        p.omega_projection = None;
        let phi = default_phi(&p);
        let e = estimate_error_bound(&p, &*phi, &[1.0, 1.0], 0.3, 1.0, 200, 5).unwrap();
        // φ = dist exactly here; the sampled distance over-estimates, so τ ≤ 1.
        assert!(e.tau <= 1.0 + 1e-12 && e.tau > 0.3, "{e:?}");

        let mut p = lookup::<f64>("toy-eq-1").unwrap();
        p.omega_projection = None;
        let phi = default_phi(&p);
        assert!(matches!(
            estimate_error_bound(&p, &*phi, &[1.0, 1.0], 0.3, 1.0, 10, 5),
            Err(Error::NoFeasibleDistanceOracle)
        ));
    }
}
