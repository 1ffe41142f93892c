//! Rockafellar–Wets augmented Lagrangians
//! `𝓛(x, λ, c) = inf_p Φ(x, p) − ⟨λ, p⟩ + c σ(p)`.
//!
//! The inner infimum has a closed form for the Hestenes–Powell–Rockafellar
//! instance (constraint-shift parameterization with `σ = ½‖p‖²`); a nested
//! grid search evaluates it numerically for up to three free perturbation
//! coordinates and serves as the oracle for the closed form.

use std::sync::Arc;

use rand::Rng;

use crate::cones::{dist_lorentz, proj_lorentz, proj_nsd, proj_psd};
use crate::error::{Error, Result};
use crate::exactlab::{minimize, SolverConfig};
use crate::numerics::{dot, norm, norm_sq, SymMat};
use crate::problem::{ConstrainedProblem, Multipliers, ScalarFn, VecFn};
use crate::sampling::rng;
use crate::scalar::Real;
use crate::separating::SeparatingFunction;

/// A dualizing parameterization `Φ(x, p)` with `Φ(x, 0) = f(x)` on the feasible set.
pub trait DualizingParam<T: Real>: Send + Sync {
    fn perturbation_dim(&self) -> usize;

    /// `Φ(x, p)`, `+∞` where the perturbed problem is infeasible.
    fn eval(&self, x: &[T], p: &[T]) -> T;

    /// Coordinates of `p` that are forced by `x` (e.g. `p = −h(x)` for an
    /// equality); `Φ` is `+∞` at any other value of them.
    fn pinned(&self, x: &[T]) -> Vec<Option<T>> {
        let _ = x;
        vec![None; self.perturbation_dim()]
    }

    /// A point near which the inner infimum is sought.
    fn anchor(&self, x: &[T]) -> Vec<T> {
        let _ = x;
        vec![T::zero(); self.perturbation_dim()]
    }

    /// Maps any `p` onto a point where `Φ(x, ·)` is finite, fixing such
    /// points. The grid searches over the preimage, which keeps the inner
    /// objective continuous. Identity by default.
    fn retract(&self, x: &[T], p: Vec<T>) -> Vec<T> {
        let _ = x;
        p
    }

    fn objective(&self, x: &[T]) -> T;
}

/// Shifts every constraint of a problem: `g_i(x) + p_i ∈ Q`, `G(x) + P ⪯ 0`,
/// `h(x) + p_h = 0`, and `Φ(x, p) = f(x)` when all hold.
///
/// The matrix block uses the isometric coordinates of `S^l`: the diagonal,
/// then `√2 ·` each strict upper entry, so that `⟨·,·⟩` and `‖·‖` on `p` are
/// the Frobenius ones. The box of the problem is not part of `Φ`.
#[derive(Clone)]
pub struct ConstraintPerturbation<T> {
    problem: ConstrainedProblem<T>,
}

/// Isometric coordinates of a symmetric matrix.
pub fn svec<T: Real>(m: &SymMat<T>) -> Vec<T> {
    let l = m.order();
    let r2 = T::lit(2.0).sqrt();
    let mut v: Vec<T> = (0..l).map(|i| m.get(i, i)).collect();
    for i in 0..l {
        for j in i + 1..l {
            v.push(r2 * m.get(i, j));
        }
    }
    v
}

/// Inverse of [`svec`].
pub fn smat<T: Real>(l: usize, v: &[T]) -> Result<SymMat<T>> {
    if v.len() != l * (l + 1) / 2 {
        return Err(Error::DimensionMismatch {
            expected: l * (l + 1) / 2,
            got: v.len(),
        });
    }
    let r2 = T::lit(2.0).sqrt();
    let mut m = SymMat::zeros(l);
    for (i, &d) in v[..l].iter().enumerate() {
        m.set(i, i, d);
    }
    let mut k = l;
    for i in 0..l {
        for j in i + 1..l {
            m.set(i, j, v[k] / r2);
            k += 1;
        }
    }
    Ok(m)
}

impl<T: Real> ConstraintPerturbation<T> {
    pub fn new(problem: ConstrainedProblem<T>) -> Self {
        Self { problem }
    }

    fn sdp_len(&self) -> usize {
        self.problem.sdp.as_ref().map_or(0, |s| s.order * (s.order + 1) / 2)
    }

    fn soc_len(&self) -> usize {
        self.problem.soc_blocks.iter().map(|b| b.dim).sum()
    }

    /// Multipliers in the coordinates of `p`.
    pub fn lambda_coords(&self, m: &Multipliers<T>) -> Vec<T> {
        let mut v: Vec<T> = m.soc.iter().flatten().copied().collect();
        if let Some(l) = &m.sdp {
            v.extend(svec(l));
        }
        v.extend_from_slice(&m.eq);
        v
    }
}

impl<T: Real> DualizingParam<T> for ConstraintPerturbation<T> {
    fn perturbation_dim(&self) -> usize {
        self.soc_len() + self.sdp_len() + self.problem.eq_dim()
    }

    fn eval(&self, x: &[T], p: &[T]) -> T {
        let slack = T::tol(1e-12);
        let mut off = 0;
        for g in self.problem.soc_values(x) {
            let shifted: Vec<T> = g.iter().zip(&p[off..]).map(|(&a, &b)| a + b).collect();
            // Inside the cone up to rounding of the boundary.
            if dist_lorentz(&shifted) > slack * (T::one() + norm(&shifted)) {
                return T::infinity();
            }
            off += g.len();
        }
        if let Some(g) = self.problem.sdp_value(x) {
            let n = self.sdp_len();
            let shifted = match smat(g.order(), &p[off..off + n]) {
                Ok(pm) => g.add(&pm),
                Err(_) => return T::nan(),
            };
            match proj_psd(&shifted) {
                Ok(pp) if pp.frobenius_norm() <= slack * (T::one() + shifted.frobenius_norm()) => {}
                Ok(_) => return T::infinity(),
                Err(_) => return T::nan(),
            }
            off += n;
        }
        for (&h, &ph) in self.problem.eq_value(x).iter().zip(&p[off..]) {
            if (h + ph).abs() > slack * (T::one() + h.abs()) {
                return T::infinity();
            }
        }
        self.problem.f(x)
    }

    fn pinned(&self, x: &[T]) -> Vec<Option<T>> {
        let mut v = vec![None; self.soc_len() + self.sdp_len()];
        v.extend(self.problem.eq_value(x).into_iter().map(|h| Some(-h)));
        v
    }

    /// Smallest shift making each cone constraint hold: `P_Q(g) − g`.
    fn anchor(&self, x: &[T]) -> Vec<T> {
        let mut v = Vec::new();
        for g in self.problem.soc_values(x) {
            v.extend(proj_lorentz(&g).iter().zip(&g).map(|(&a, &b)| a - b));
        }
        if let Some(g) = self.problem.sdp_value(x) {
            let shift = proj_psd(&g)
                .map(|pp| pp.scaled(-T::one()))
                .unwrap_or_else(|_| SymMat::zeros(g.order()));
            v.extend(svec(&shift));
        }
        v.extend(self.problem.eq_value(x).into_iter().map(|h| -h));
        v
    }

    /// `p ↦ P_K(g + p) − g` block by block.
    fn retract(&self, x: &[T], mut p: Vec<T>) -> Vec<T> {
        let mut off = 0;
        for g in self.problem.soc_values(x) {
            let shifted: Vec<T> = g.iter().zip(&p[off..]).map(|(&a, &b)| a + b).collect();
            for (k, (&a, &b)) in proj_lorentz(&shifted).iter().zip(&g).enumerate() {
                p[off + k] = a - b;
            }
            off += g.len();
        }
        if let Some(g) = self.problem.sdp_value(x) {
            let n = self.sdp_len();
            if let Ok(pm) = smat(g.order(), &p[off..off + n]) {
                if let Ok(y) = proj_nsd(&g.add(&pm)) {
                    p[off..off + n].copy_from_slice(&svec(&y.sub(&g)));
                }
            }
        }
        p
    }

    fn objective(&self, x: &[T]) -> T {
        self.problem.f(x)
    }
}

/// Scalar inequalities `g_j(x) ≤ 0` shifted to `g_j(x) + p_j ≤ 0`.
#[derive(Clone)]
pub struct InequalityPerturbation<T> {
    objective: ScalarFn<T>,
    constraints: VecFn<T>,
    count: usize,
}

impl<T: Real> InequalityPerturbation<T> {
    pub fn new(objective: ScalarFn<T>, constraints: VecFn<T>, count: usize) -> Self {
        Self {
            objective,
            constraints,
            count,
        }
    }

    pub fn constraint_values(&self, x: &[T]) -> Vec<T> {
        (self.constraints)(x)
    }
}

impl<T: Real> DualizingParam<T> for InequalityPerturbation<T> {
    fn perturbation_dim(&self) -> usize {
        self.count
    }

    fn eval(&self, x: &[T], p: &[T]) -> T {
        let ok = (self.constraints)(x).iter().zip(p).all(|(&g, &pj)| g + pj <= T::zero());
        if ok {
            (self.objective)(x)
        } else {
            T::infinity()
        }
    }

    fn anchor(&self, x: &[T]) -> Vec<T> {
        (self.constraints)(x).into_iter().map(|g| (-g).min(T::zero())).collect()
    }

    fn objective(&self, x: &[T]) -> T {
        (self.objective)(x)
    }
}

/// `Φ(x, p) = f(x) + max(−1, −‖p‖)` on the feasible set, `+∞` off it. With
/// `σ = ‖p‖²` the Lagrangian stays strictly below `f` on the feasible set for
/// every `λ` and `c`: exact, but never strictly exact.
#[derive(Clone)]
pub struct CappedDipParam<T> {
    problem: ConstrainedProblem<T>,
    dim: usize,
}

impl<T: Real> CappedDipParam<T> {
    pub fn new(problem: ConstrainedProblem<T>, dim: usize) -> Self {
        Self { problem, dim }
    }
}

impl<T: Real> DualizingParam<T> for CappedDipParam<T> {
    fn perturbation_dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[T], p: &[T]) -> T {
        let feasible = self
            .problem
            .feasibility_gap(x)
            .map(|g| g.total() <= T::tol(1e-12))
            .unwrap_or(false);
        if feasible {
            self.problem.f(x) + (-norm(p)).max(-T::one())
        } else {
            T::infinity()
        }
    }

    fn objective(&self, x: &[T]) -> T {
        self.problem.f(x)
    }
}

type SigmaFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// An augmenting function `σ ≥ 0` with `σ(0) = 0`.
#[derive(Clone)]
pub struct AugmentingFn<T> {
    pub label: String,
    sigma: SigmaFn<T>,
    /// Set once [`valley_check`] has passed.
    pub valley_checked: bool,
}

impl<T: Real> AugmentingFn<T> {
    /// `½‖p‖²`; the factor ½ is the convention behind every closed form here.
    pub fn half_sq_norm() -> Self {
        Self::custom("half-sq-norm", Arc::new(|p: &[T]| norm_sq(p) / T::lit(2.0)))
    }

    pub fn sq_norm() -> Self {
        Self::custom("sq-norm", Arc::new(|p: &[T]| norm_sq(p)))
    }

    pub fn norm() -> Self {
        Self::custom("norm", Arc::new(|p: &[T]| norm(p)))
    }

    pub fn custom(label: impl Into<String>, sigma: SigmaFn<T>) -> Self {
        Self {
            label: label.into(),
            sigma,
            valley_checked: false,
        }
    }

    pub fn eval(&self, p: &[T]) -> T {
        (self.sigma)(p)
    }

    /// Runs [`valley_check`] in dimension `dim` and records the outcome.
    pub fn checked(mut self, dim: usize, radii: &[T], n_samples: usize, seed: u64) -> Self {
        self.valley_checked = valley_check(&self, dim, radii, n_samples, seed);
        self
    }
}

/// Samples `‖p‖ ∈ [r, max(10, 4 r_max)]` along random directions and reports
/// whether `min σ > 0` over each annulus, for every radius `r`.
pub fn valley_check<T: Real>(sigma: &AugmentingFn<T>, dim: usize, radii: &[T], n_samples: usize, seed: u64) -> bool {
    if dim == 0 || radii.is_empty() || !sigma.eval(&vec![T::zero(); dim]).is_finite() {
        return false;
    }
    let r_max = radii.iter().fold(T::zero(), |a, &b| a.max(b));
    let outer = (4.0 * r_max.as_f64()).max(10.0);
    let mut g = rng(seed);
    radii.iter().all(|&r| {
        let r = r.as_f64();
        let mut delta = f64::INFINITY;
        for _ in 0..n_samples {
            let dir: Vec<f64> = (0..dim).map(|_| g.gen_range(-1.0..1.0)).collect();
            let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n < 1e-12 {
                continue;
            }
            let rad = g.gen_range(r..=outer);
            let p: Vec<T> = dir.iter().map(|&v| T::lit(v * rad / n)).collect();
            delta = delta.min(sigma.eval(&p).as_f64());
        }
        delta > 0.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ALMethod {
    ClosedForm,
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ALValue<T> {
    pub value: T,
    pub inner_argmin: Option<Vec<T>>,
    pub method: ALMethod,
}

/// Search box and resolution of [`al_eval_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    /// Half-width of the initial box around the anchor.
    pub half_width: T,
    /// Points per free axis; `None` picks 201, 41, 15 for 1, 2, 3 free axes.
    pub points_per_axis: Option<usize>,
    /// Doublings of the box allowed while the best point sits on its edge.
    pub max_expansions: usize,
    /// Zooming stops once the grid spacing falls below this.
    pub min_spacing: T,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        Self {
            half_width: T::lit(4.0),
            points_per_axis: None,
            max_expansions: 8,
            min_spacing: T::lit(1e-10),
        }
    }
}

const MAX_GRID_DIMS: usize = 3;
const MAX_SLIDES: usize = 400;

/// Numerical inner infimum by nested zoom grids and a final golden-section
/// pass per axis.
///
/// Fails with `UnboundedBelow` when the best point stays on the edge of the
/// box after every expansion and one more step outward still decreases the
/// objective.
pub fn al_eval_grid<T: Real>(
    phi: &dyn DualizingParam<T>,
    sigma: &AugmentingFn<T>,
    x: &[T],
    lambda: &[T],
    c: T,
    spec: &GridSpec<T>,
) -> Result<ALValue<T>> {
    let m = phi.perturbation_dim();
    if lambda.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: lambda.len(),
        });
    }
    if !(c > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "penalty parameter must be positive, got {c}"
        )));
    }
    let pinned = phi.pinned(x);
    let anchor = phi.anchor(x);
    let free: Vec<usize> = (0..m).filter(|&k| pinned[k].is_none()).collect();
    if free.len() > MAX_GRID_DIMS {
        return Err(Error::InvalidInput(format!(
            "grid inner minimization supports at most {MAX_GRID_DIMS} free perturbation coordinates, got {}",
            free.len()
        )));
    }
    let base: Vec<T> = (0..m).map(|k| pinned[k].unwrap_or(anchor[k])).collect();
    let assemble = |u: &[T]| -> Vec<T> {
        let mut p = base.clone();
        for (&k, &v) in free.iter().zip(u) {
            p[k] = v;
        }
        phi.retract(x, p)
    };
    let objective = |u: &[T]| -> T {
        let p = assemble(u);
        let v = phi.eval(x, &p) - dot(lambda, &p) + c * sigma.eval(&p);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    let k = free.len();
    if k == 0 {
        let v = objective(&[]);
        return Ok(ALValue {
            value: v,
            inner_argmin: v.is_finite().then(|| assemble(&[])),
            method: ALMethod::Grid,
        });
    }
    let n = spec
        .points_per_axis
        .unwrap_or(match k {
            1 => 201,
            2 => 41,
            _ => 15,
        })
        .max(5)
        | 1;
    let centre0: Vec<T> = free.iter().map(|&i| base[i]).collect();

    // Coarse search, expanding while the best point lies on the edge.
    let mut w = spec.half_width;
    let mut best;
    let mut expansions = 0;
    loop {
        best = grid_min(&objective, &centre0, w, n);
        let Some((bv, bu)) = &best else {
            if expansions >= spec.max_expansions {
                break;
            }
            w *= T::lit(2.0);
            expansions += 1;
            continue;
        };
        let edge = edge_axes(bu, &centre0, w);
        if edge.is_empty() {
            break;
        }
        if expansions >= spec.max_expansions {
            let step = T::lit(2.0) * w / T::lit((n - 1) as f64);
            for (axis, dir) in edge {
                let mut u = bu.clone();
                u[axis] += dir * step;
                if objective(&u) < *bv {
                    return Err(Error::UnboundedBelow);
                }
            }
            break;
        }
        w *= T::lit(2.0);
        expansions += 1;
    }
    let Some((mut bv, mut bu)) = best else {
        return Ok(ALValue {
            value: T::infinity(),
            inner_argmin: None,
            method: ALMethod::Grid,
        });
    };

    // Zoom: recentre and shrink to two grid spacings; a best point on the
    // edge of the zoom box is recentred on without shrinking.
    let mut spacing = T::lit(2.0) * w / T::lit((n - 1) as f64);
    let mut slides = 0;
    while spacing > spec.min_spacing {
        let hw = T::lit(2.0) * spacing;
        if let Some((v, u)) = grid_min(&objective, &bu, hw, n) {
            if v < bv {
                let on_edge = !edge_axes(&u, &bu, hw).is_empty();
                bv = v;
                bu = u;
                if on_edge && slides < MAX_SLIDES {
                    slides += 1;
                    continue;
                }
            }
        }
        spacing = T::lit(2.0) * hw / T::lit((n - 1) as f64);
    }

    // Golden-section polish per axis over ± one spacing.
    for axis in 0..k {
        let (a0, b0) = (bu[axis] - spacing, bu[axis] + spacing);
        let (v, t) = golden(
            |t| {
                let mut u = bu.clone();
                u[axis] = t;
                objective(&u)
            },
            a0,
            b0,
        );
        if v < bv {
            bv = v;
            bu[axis] = t;
        }
    }
    Ok(ALValue {
        value: bv,
        inner_argmin: Some(assemble(&bu)),
        method: ALMethod::Grid,
    })
}

/// Minimum over a tensor grid of `n^k` points in `centre ± w`.
fn grid_min<T: Real>(f: &dyn Fn(&[T]) -> T, centre: &[T], w: T, n: usize) -> Option<(T, Vec<T>)> {
    let k = centre.len();
    let total = n.pow(k as u32);
    let mut best: Option<(T, Vec<T>)> = None;
    let mut u = vec![T::zero(); k];
    for idx in 0..total {
        let mut r = idx;
        for (j, uj) in u.iter_mut().enumerate() {
            let i = r % n;
            r /= n;
            *uj = centre[j] - w + T::lit(2.0) * w * T::lit(i as f64) / T::lit((n - 1) as f64);
        }
        let v = f(&u);
        if v.is_finite() && best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, u.clone()));
        }
    }
    best
}

/// Axes on which `u` lies on the box edge, with the outward direction.
fn edge_axes<T: Real>(u: &[T], centre: &[T], w: T) -> Vec<(usize, T)> {
    let eps = w * T::lit(1e-9);
    u.iter()
        .zip(centre)
        .enumerate()
        .filter_map(|(j, (&a, &c))| {
            if a >= c + w - eps {
                Some((j, T::one()))
            } else if a <= c - w + eps {
                Some((j, -T::one()))
            } else {
                None
            }
        })
        .collect()
}

fn golden<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> (T, T) {
    let r = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (f1, x1)
    } else {
        (f2, x2)
    }
}

/// Hestenes–Powell–Rockafellar closed form of the inner infimum for
/// [`ConstraintPerturbation`] with `σ = ½‖p‖²`:
/// `f + Σ (1/2c)[dist²(cg_i + λ_i, Q) − ‖λ_i‖²] + (1/2c)[trace([cG + λ]₊²) − trace λ²]
///  + ⟨μ, h⟩ + (c/2)‖h‖²`.
pub fn hpr_closed_form<T: Real>(p: &ConstrainedProblem<T>, x: &[T], m: &Multipliers<T>, c: T) -> Result<T> {
    if !(c > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "penalty parameter must be positive, got {c}"
        )));
    }
    let two_c = T::lit(2.0) * c;
    let mut v = p.f(x);
    for (g, l) in p.soc_values(x).iter().zip(&m.soc) {
        let s: Vec<T> = g.iter().zip(l).map(|(&gi, &li)| c * gi + li).collect();
        v += (dist_lorentz(&s).powi(2) - norm_sq(l)) / two_c;
    }
    if let (Some(g), Some(l)) = (p.sdp_value(x), &m.sdp) {
        let t = proj_psd(&g.scaled(c).add(l))?.frobenius_norm().powi(2);
        v += (t - l.frobenius_norm().powi(2)) / two_c;
    }
    let h = p.eq_value(x);
    v += dot(&m.eq, &h) + c / T::lit(2.0) * norm_sq(&h);
    if v.is_nan() {
        return Err(Error::NonFiniteEvaluation("augmented Lagrangian".into()));
    }
    Ok(v)
}

/// Closed form for scalar inequalities `g ≤ 0`, `λ ≥ 0`:
/// `f + (1/2c)(‖[λ + c g]₊‖² − ‖λ‖²)`.
pub fn hpr_inequality<T: Real>(f: T, g: &[T], lambda: &[T], c: T) -> T {
    let s: T = g
        .iter()
        .zip(lambda)
        .map(|(&gi, &li)| (li + c * gi).max(T::zero()).powi(2) - li * li)
        .sum();
    f + s / (T::lit(2.0) * c)
}

/// The HPR augmented Lagrangian at a fixed multiplier, as a [`SeparatingFunction`].
#[derive(Clone)]
pub struct HprLagrangian<T> {
    problem: ConstrainedProblem<T>,
    lambda: Multipliers<T>,
}

impl<T: Real> HprLagrangian<T> {
    pub fn new(problem: ConstrainedProblem<T>, lambda: Multipliers<T>) -> Result<Self> {
        let want = problem.multiplier_dim();
        let got = lambda.flatten().len();
        if want != got || lambda.soc.len() != problem.soc_blocks.len() {
            return Err(Error::DimensionMismatch { expected: want, got });
        }
        Ok(Self { problem, lambda })
    }

    /// Uses the certified multiplier of the problem.
    pub fn at_certified(problem: ConstrainedProblem<T>) -> Result<Self> {
        let m = problem
            .certificate
            .as_ref()
            .and_then(|c| c.multipliers.clone())
            .ok_or_else(|| Error::InvalidInput(format!("{}: no certified multiplier", problem.name)))?;
        Self::new(problem, m)
    }

    pub fn lambda(&self) -> &Multipliers<T> {
        &self.lambda
    }
}

impl<T: Real> SeparatingFunction<T> for HprLagrangian<T> {
    fn label(&self) -> String {
        "al-hpr".into()
    }

    fn problem(&self) -> &ConstrainedProblem<T> {
        &self.problem
    }

    fn eval(&self, x: &[T], c: T) -> Result<T> {
        hpr_closed_form(&self.problem, x, &self.lambda, c)
    }
}

/// Outcome of [`strict_exactness_probe`] at one `c`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StrictExactnessPoint {
    pub c: f64,
    pub min_value: Option<f64>,
    pub argmin: Vec<f64>,
    pub dist_to_xstar: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StrictExactnessVerdict {
    pub points: Vec<StrictExactnessPoint>,
    pub smallest_passing_c: Option<f64>,
}

/// Multistart-minimizes `𝓛(·, λ, c)` over the box for each `c` and checks
/// `|min − f*| ≤ tol (1 + |f*|)` together with `‖argmin − x*‖ ≤ tol`.
pub fn strict_exactness_probe(
    sf: &dyn SeparatingFunction<f64>,
    c_list: &[f64],
    tol: f64,
    cfg: &SolverConfig,
) -> Result<StrictExactnessVerdict> {
    let cert = sf
        .problem()
        .certificate
        .clone()
        .ok_or_else(|| Error::InvalidInput("strict exactness needs a certified optimum".into()))?;
    let target = sf.optimal_value().unwrap_or(cert.f_star);
    let mut points = Vec::with_capacity(c_list.len());
    for &c in c_list {
        let point = match minimize(sf, c, cfg) {
            Ok(r) => {
                let d = crate::numerics::dist(&r.x, &cert.x_star);
                StrictExactnessPoint {
                    c,
                    min_value: Some(r.value),
                    passed: (r.value - target).abs() <= tol * (1.0 + target.abs()) && d <= tol,
                    argmin: r.x,
                    dist_to_xstar: Some(d),
                }
            }
            Err(Error::AllStartsFailed) => StrictExactnessPoint {
                c,
                min_value: None,
                argmin: Vec::new(),
                dist_to_xstar: None,
                passed: false,
            },
            Err(e) => return Err(e),
        };
        points.push(point);
    }
    let smallest_passing_c = points.iter().filter(|p| p.passed).map(|p| p.c).reduce(f64::min);
    Ok(StrictExactnessVerdict {
        points,
        smallest_passing_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::lookup;

    fn eq1() -> ConstrainedProblem<f64> {
        lookup("toy-eq-1").unwrap()
    }

    fn mult_eq(mu: f64) -> Multipliers<f64> {
        Multipliers {
            soc: vec![],
            sdp: None,
            eq: vec![mu],
        }
    }

    #[test]
    fn eq1_examples() {
        let p = eq1();
        let phi = ConstraintPerturbation::new(p.clone());
        let s = AugmentingFn::half_sq_norm();
        let g = al_eval_grid(&phi, &s, &[1.0, 1.0], &[-2.0], 4.0, &GridSpec::default()).unwrap();
        assert!((g.value - 2.0).abs() < 1e-12);
        assert_eq!(g.inner_argmin, Some(vec![0.0]));
        let g = al_eval_grid(&phi, &s, &[0.0, 0.0], &[-2.0], 4.0, &GridSpec::default()).unwrap();
        assert!((g.value - 12.0).abs() < 1e-12);
        assert!((hpr_closed_form(&p, &[0.0, 0.0], &mult_eq(-2.0), 4.0).unwrap() - 12.0).abs() < 1e-12);
        for c in [0.1, 1.0, 50.0] {
            assert!((hpr_closed_form(&p, &[1.0, 1.0], &mult_eq(-2.0), c).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_inequality_matches_grid() {
        // f = 0, g(x) = x ≤ 0.
        let ineq = InequalityPerturbation::new(Arc::new(|_: &[f64]| 0.0), Arc::new(|x: &[f64]| vec![x[0]]), 1);
        let s = AugmentingFn::half_sq_norm();
        let closed: f64 = hpr_inequality(0.0, &[1.0], &[0.0], 2.0);
        assert!((closed - 1.0).abs() < 1e-15);
        let g = al_eval_grid(&ineq, &s, &[1.0], &[0.0], 2.0, &GridSpec::default()).unwrap();
        assert!((g.value - closed).abs() < 1e-9, "{}", g.value);
        for (x, l, c) in [(-0.5, 0.3, 1.0), (0.2, 1.5, 3.0), (-2.0, 0.0, 0.5)] {
            let closed = hpr_inequality(0.0, &[x], &[l], c);
            let g = al_eval_grid(&ineq, &s, &[x], &[l], c, &GridSpec::default()).unwrap();
            assert!((g.value - closed).abs() <= 1e-6 * (1.0 + closed.abs()), "{x} {l} {c}");
        }
    }

    #[test]
    fn soc_block_matches_grid() {
        let p = lookup::<f64>("toy-socp-1").unwrap();
        let phi = ConstraintPerturbation::new(p.clone());
        let s = AugmentingFn::half_sq_norm();
        for (x, l, c) in [
            ([0.3, 1.7], [-1.0, 0.5], 2.0),
            ([1.0, 1.0], [-2.0, 2.0], 1.0),
            ([-0.5, 0.2], [0.4, -0.1], 0.7),
        ] {
            let m = Multipliers {
                soc: vec![l.to_vec()],
                sdp: None,
                eq: vec![],
            };
            let closed = hpr_closed_form(&p, &x, &m, c).unwrap();
            let g = al_eval_grid(&phi, &s, &x, &l, c, &GridSpec::default()).unwrap();
            assert!(
                (g.value - closed).abs() <= 1e-6 * (1.0 + closed.abs()),
                "{x:?}: {} vs {closed}",
                g.value
            );
        }
    }

    #[test]
    fn sdp_block_matches_grid() {
        let p = lookup::<f64>("toy-sdp-1").unwrap();
        let phi = ConstraintPerturbation::new(p.clone());
        let s = AugmentingFn::half_sq_norm();
        let lam = SymMat::from_rows(&[vec![0.8, 0.1], vec![0.1, 0.3]]).unwrap();
        let m = Multipliers {
            soc: vec![],
            sdp: Some(lam.clone()),
            eq: vec![],
        };
        let x = [0.9, 0.4];
        let closed = hpr_closed_form(&p, &x, &m, 1.5).unwrap();
        let g = al_eval_grid(&phi, &s, &x, &phi.lambda_coords(&m), 1.5, &GridSpec::default()).unwrap();
        assert!(
            (g.value - closed).abs() <= 1e-6 * (1.0 + closed.abs()),
            "{} vs {closed}",
            g.value
        );
    }

    #[test]
    fn svec_is_an_isometry() {
        let a = SymMat::<f64>::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, -1.0, 0.5], vec![3.0, 0.5, 4.0]]).unwrap();
        let b = SymMat::from_rows(&[vec![0.2, -1.0, 0.0], vec![-1.0, 2.0, 1.5], vec![0.0, 1.5, -3.0]]).unwrap();
        assert!((dot(&svec(&a), &svec(&b)) - a.inner(&b)).abs() < 1e-12);
        assert!(smat(3, &svec(&a)).unwrap().sub(&a).frobenius_norm() < 1e-14);
    }

    #[test]
    fn unbounded_inner_problem_is_detected() {
        // Φ = −‖p‖² with σ = ½‖p‖² and c = 1 leaves −½‖p‖², unbounded below.
        struct Concave;
        impl DualizingParam<f64> for Concave {
            fn perturbation_dim(&self) -> usize {
                1
            }
            fn eval(&self, _: &[f64], p: &[f64]) -> f64 {
                -p[0] * p[0]
            }
            fn objective(&self, _: &[f64]) -> f64 {
                0.0
            }
        }
        let r = al_eval_grid(
            &Concave,
            &AugmentingFn::half_sq_norm(),
            &[0.0],
            &[0.0],
            1.0,
            &GridSpec::default(),
        );
        assert_eq!(r, Err(Error::UnboundedBelow));
        // A far but finite minimizer is found by expanding the box.
        let ineq = InequalityPerturbation::new(Arc::new(|_: &[f64]| 0.0), Arc::new(|x: &[f64]| vec![x[0]]), 1);
        let g = al_eval_grid(
            &ineq,
            &AugmentingFn::half_sq_norm(),
            &[-50.0],
            &[30.0],
            1.0,
            &GridSpec::default(),
        )
        .unwrap();
        let closed = hpr_inequality(0.0, &[-50.0], &[30.0], 1.0);
        assert!((g.value - closed).abs() < 1e-6 * (1.0 + closed.abs()));
    }

    #[test]
    fn grid_rejects_too_many_free_axes() {
        struct Wide;
        impl DualizingParam<f64> for Wide {
            fn perturbation_dim(&self) -> usize {
                4
            }
            fn eval(&self, _: &[f64], _: &[f64]) -> f64 {
                0.0
            }
            fn objective(&self, _: &[f64]) -> f64 {
                0.0
            }
        }
        let r = al_eval_grid(
            &Wide,
            &AugmentingFn::half_sq_norm(),
            &[0.0],
            &[0.0; 4],
            1.0,
            &GridSpec::default(),
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn valley_examples() {
        let radii = [0.1, 0.5, 1.0];
        assert!(valley_check(&AugmentingFn::<f64>::half_sq_norm(), 2, &radii, 2000, 1));
        assert!(valley_check(&AugmentingFn::<f64>::norm(), 2, &radii, 2000, 1));
        let bad = AugmentingFn::<f64>::custom(
            "notch",
            Arc::new(|p: &[f64]| {
                let n = norm(p);
                n.min((2.0 - n).max(0.0))
            }),
        );
        assert!(!valley_check(&bad, 2, &radii, 2000, 1));
        let clipped = AugmentingFn::<f64>::custom(
            "clipped",
            Arc::new(|p: &[f64]| if norm(p) <= 1.0 { norm_sq(p) } else { 0.0 }),
        );
        assert!(!clipped.checked(1, &radii, 2000, 1).valley_checked);
    }

    #[test]
    fn capped_dip_is_never_strictly_exact() {
        let p = lookup::<f64>("toy-socp-1").unwrap();
        let phi = CappedDipParam::new(p.clone(), 1);
        let s = AugmentingFn::sq_norm();
        for c in [0.5, 10.0, 1e3] {
            let g = al_eval_grid(&phi, &s, &[1.0, 1.0], &[0.0], c, &GridSpec::default()).unwrap();
            assert!(g.value < p.f(&[1.0, 1.0]), "c = {c}: {}", g.value);
            // The dip is min over t ≥ 0 of −t + c t², i.e. −1/(4c) for c ≥ 1/2.
            assert!((g.value - (2.0 - 1.0 / (4.0 * c))).abs() < 1e-8);
        }
    }

    #[test]
    fn lagrangian_is_monotone_in_c_and_below_f_on_feasible_points() {
        let p = lookup::<f64>("toy-socp-2").unwrap();
        let m = Multipliers {
            soc: vec![vec![-0.5, 0.3]],
            sdp: None,
            eq: vec![1.2],
        };
        for x in [[0.3, 0.2], [2.0, 0.0], [1.5, 0.5]] {
            let mut prev = f64::NEG_INFINITY;
            for c in [0.1, 1.0, 10.0] {
                let v = hpr_closed_form(&p, &x, &m, c).unwrap();
                assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
        // (2, 0) and (1.5, 0.5) are feasible.
        for x in [[2.0, 0.0], [1.5, 0.5]] {
            assert!(hpr_closed_form(&p, &x, &m, 3.0).unwrap() <= p.f(&x) + 1e-12);
        }
    }

    #[test]
    fn strict_exactness_examples() {
        let cfg = SolverConfig {
            n_starts: 8,
            ..SolverConfig::default()
        };
        let at_mu = HprLagrangian::new(eq1(), mult_eq(-2.0)).unwrap();
        let v = strict_exactness_probe(&at_mu, &[1.0, 4.0, 16.0], 1e-4, &cfg).unwrap();
        assert!(v.points.iter().all(|p| p.passed), "{v:?}");
        assert_eq!(v.smallest_passing_c, Some(1.0));

        let at_zero = HprLagrangian::new(eq1(), mult_eq(0.0)).unwrap();
        let v = strict_exactness_probe(&at_zero, &[1.0, 4.0], 1e-4, &cfg).unwrap();
        // min of x₁² + x₂² + (c/2)(x₁ + x₂ − 2)² is 2c/(1 + c) < 2.
        for p in &v.points {
            assert!(!p.passed);
            let want = 2.0 * p.c / (1.0 + p.c);
            assert!((p.min_value.unwrap() - want).abs() < 1e-6);
        }
        assert_eq!(v.smallest_passing_c, None);
    }
}
