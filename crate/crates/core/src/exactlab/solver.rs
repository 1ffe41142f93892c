//! Derivative-free and projected-gradient local minimizers with seeded
//! quasi-random multistart over a box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{fd_gradient, BoxSet};
use crate::sampling::ScrambledHalton;
use crate::separating::SeparatingFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    NelderMead,
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub max_iters: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::NelderMead,
            max_iters: 4000,
            x_tol: 1e-11,
            f_tol: 1e-13,
            n_starts: 32,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 || self.max_iters == 0 || !(self.x_tol > 0.0) || !(self.f_tol > 0.0) {
            return Err(Error::InvalidInput(
                "solver needs n_starts >= 1, max_iters >= 1 and positive tolerances".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Finite local results, in start order.
    pub starts: Vec<LocalResult>,
}

impl MinimizeResult {
    /// Starts whose value is within `1e-6 (1 + |best|)` of the best one.
    pub fn agreeing(&self) -> usize {
        let tol = 1e-6 * (1.0 + self.value.abs());
        self.starts.iter().filter(|s| s.value - self.value <= tol).count()
    }
}

/// Half-width used to place starts along unbounded coordinates.
const UNBOUNDED_START_RADIUS: f64 = 10.0;
/// Draws allowed per requested start when searching for finite start values.
const START_DRAWS_PER_START: usize = 16;
const NM_RESTARTS: usize = 6;

fn start_box(bounds: &BoxSet<f64>) -> (Vec<f64>, Vec<f64>) {
    let lo = bounds
        .lower
        .iter()
        .map(|&v| if v.is_finite() { v } else { -UNBOUNDED_START_RADIUS })
        .collect();
    let hi = bounds
        .upper
        .iter()
        .map(|&v| if v.is_finite() { v } else { UNBOUNDED_START_RADIUS })
        .collect();
    (lo, hi)
}

/// `F(·, c)` with errors, NaN and out-of-box points mapped to `+∞`.
pub fn guarded<'a>(sf: &'a dyn SeparatingFunction<f64>, c: f64) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    let bounds = sf.problem().bounds.clone();
    move |x: &[f64]| {
        if !bounds.contains(x) {
            return f64::INFINITY;
        }
        match sf.eval(x, c) {
            Ok(v) if !v.is_nan() => v,
            _ => f64::INFINITY,
        }
    }
}

/// Multistart minimization of `F(·, c)` over the problem's box.
pub fn minimize(sf: &dyn SeparatingFunction<f64>, c: f64, cfg: &SolverConfig) -> Result<MinimizeResult> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "penalty parameter must be positive, got {c}"
        )));
    }
    let f = guarded(sf, c);
    minimize_fn(&f, &sf.problem().bounds, cfg)
}

/// Multistart minimization of an arbitrary function (`+∞` = rejected) over a box.
pub fn minimize_fn(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    bounds: &BoxSet<f64>,
    cfg: &SolverConfig,
) -> Result<MinimizeResult> {
    cfg.validate()?;
    let dim = bounds.lower.len();
    let (lo, hi) = start_box(bounds);
    let mut halton = ScrambledHalton::new(dim, cfg.seed);
    let mut starts = Vec::with_capacity(cfg.n_starts);
    for _ in 0..cfg.n_starts * START_DRAWS_PER_START {
        let x = halton.next_in_box(&lo, &hi);
        if f(&x).is_finite() {
            starts.push(x);
            if starts.len() == cfg.n_starts {
                break;
            }
        }
    }
    if starts.is_empty() {
        return Err(Error::AllStartsFailed);
    }
    let results: Vec<LocalResult> = starts
        .par_iter()
        .map(|x0| match cfg.method {
            SolverMethod::NelderMead => nelder_mead_restarted(f, x0, bounds, &lo, &hi, cfg),
            SolverMethod::GradientDescent => projected_gradient(f, x0, bounds, cfg),
        })
        .filter(|r| r.value.is_finite())
        .collect();
    // First minimal entry in start order: independent of scheduling.
    let best = results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r.clone())
        .ok_or(Error::AllStartsFailed)?;
    Ok(MinimizeResult {
        x: best.x,
        value: best.value,
        starts: results,
    })
}

fn nelder_mead_restarted(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    bounds: &BoxSet<f64>,
    lo: &[f64],
    hi: &[f64],
    cfg: &SolverConfig,
) -> LocalResult {
    let mut step: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.05 * (b - a)).collect();
    let mut best = LocalResult {
        x: x0.to_vec(),
        value: f(x0),
    };
    for _ in 0..NM_RESTARTS {
        let r = nelder_mead(f, &best.x, &step, bounds, cfg);
        let improved = r.value < best.value - cfg.f_tol * (1.0 + best.value.abs());
        if r.value <= best.value {
            best = r;
        }
        if !improved {
            break;
        }
        for s in &mut step {
            *s *= 0.25;
        }
    }
    // One small-simplex polish to leave kinks the simplex collapsed onto.
    let small: Vec<f64> = step.iter().map(|s| s * 1e-3).collect();
    let r = nelder_mead(f, &best.x, &small, bounds, cfg);
    if r.value <= best.value {
        best = r;
    }
    best
}

/// Classic Nelder–Mead with coefficients (1, 2, ½, ½). Out-of-box points are `+∞`.
pub fn nelder_mead(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    step: &[f64],
    bounds: &BoxSet<f64>,
    cfg: &SolverConfig,
) -> LocalResult {
    let n = x0.len();
    let eval = |x: &[f64]| if bounds.contains(x) { f(x) } else { f64::INFINITY };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        // Step inward when the outward vertex would leave the box.
        x[i] += step[i];
        if !bounds.contains(&x) {
            x[i] = x0[i] - step[i];
        }
        let v = eval(&x);
        simplex.push((x, v));
    }
    for _ in 0..cfg.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let fbest = simplex[0].1;
        let fworst = simplex[n].1;
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let spread_ok = fworst.is_finite() && (fworst - fbest) <= cfg.f_tol * (1.0 + fbest.abs());
        if diam <= cfg.x_tol || (spread_ok && diam <= cfg.x_tol.sqrt()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].0.clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < fbest {
            let xe = along(2.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < fworst {
            let x = along(0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x);
            (x, v)
        };
        if fc < fworst.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x0 = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&x0) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    LocalResult { x, value }
}

/// Projected gradient descent with central-difference gradients and
/// Armijo backtracking; iterates are clipped to the box.
pub fn projected_gradient(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    bounds: &BoxSet<f64>,
    cfg: &SolverConfig,
) -> LocalResult {
    let mut x = bounds.clip(x0);
    let mut fx = f(&x);
    let mut t: f64 = 1.0;
    for _ in 0..cfg.max_iters {
        if !fx.is_finite() {
            break;
        }
        let Ok(g) = fd_gradient(|z: &[f64]| f(&bounds.clip(z)), &x, None) else {
            break;
        };
        if !g.iter().all(|v| v.is_finite()) {
            break;
        }
        let mut accepted = false;
        t = (t * 2.0).min(1e3);
        while t > 1e-16 {
            let y: Vec<f64> = bounds.clip(&x.iter().zip(&g).map(|(a, b)| a - t * b).collect::<Vec<_>>());
            let fy = f(&y);
            let moved: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum();
            if fy.is_finite() && fy <= fx - 1e-4 / t * moved {
                let dx = moved.sqrt();
                let df = fx - fy;
                x = y;
                fx = fy;
                accepted = true;
                if dx <= cfg.x_tol || df <= cfg.f_tol * (1.0 + fx.abs()) {
                    return LocalResult { x, value: fx };
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    LocalResult { x, value: fx }
}
