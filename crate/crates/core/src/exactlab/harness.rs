//! Penalty-parameter sweeps and the empirical localization probes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::{guarded, minimize, SolverConfig};
use crate::error::{Error, Result};
use crate::numerics::{dist, norm};
use crate::sampling::{rng, uniform_in_ball, ScrambledHalton};
use crate::separating::SeparatingFunction;

/// Best multistart result of `F(·, c)` at one `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub c: f64,
    pub best_x: Vec<f64>,
    /// `None` when every start failed.
    pub best_f: Option<f64>,
    pub feasibility_gap_total: Option<f64>,
    pub dist_to_xstar: Option<f64>,
    pub n_starts_agreeing: usize,
    /// Solver failure at this `c`, if any.
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn attained(&self) -> bool {
        self.best_f.is_some_and(f64::is_finite)
    }
}

/// `n ≥ 2` geometrically spaced values from `c_min` to `c_max`.
pub fn geometric_grid(c_min: f64, c_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(c_min > 0.0 && c_max > c_min) || n < 2 {
        return Err(Error::InvalidInput(format!(
            "need 0 < c_min < c_max and at least two steps, got ({c_min}, {c_max}, {n})"
        )));
    }
    let r = (c_max / c_min).powf(1.0 / (n - 1) as f64);
    let mut v: Vec<f64> = (0..n).map(|k| c_min * r.powi(k as i32)).collect();
    v[n - 1] = c_max;
    Ok(v)
}

fn record_at(sf: &dyn SeparatingFunction<f64>, c: f64, cfg: &SolverConfig) -> Result<SweepRecord> {
    let p = sf.problem();
    match minimize(sf, c, cfg) {
        Ok(r) => Ok(SweepRecord {
            c,
            feasibility_gap_total: Some(p.feasibility_gap(&r.x)?.total()),
            dist_to_xstar: p.dist_to_optimum(&r.x),
            n_starts_agreeing: r.agreeing(),
            best_f: Some(r.value),
            best_x: r.x,
            error: None,
        }),
        Err(e @ (Error::AllStartsFailed | Error::NonFiniteEvaluation(_))) => Ok(SweepRecord {
            c,
            best_x: Vec::new(),
            best_f: None,
            feasibility_gap_total: None,
            dist_to_xstar: None,
            n_starts_agreeing: 0,
            error: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

/// One record per `c`; solver failures are recorded rather than returned.
pub fn c_sweep(sf: &dyn SeparatingFunction<f64>, c_grid: &[f64], cfg: &SolverConfig) -> Result<Vec<SweepRecord>> {
    if c_grid.windows(2).any(|w| !(w[1] > w[0])) || c_grid.first().is_some_and(|&c| !(c > 0.0)) {
        return Err(Error::InvalidInput("c grid must be positive and increasing".into()));
    }
    c_grid.iter().map(|&c| record_at(sf, c, cfg)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTypeVerdict {
    pub passed: bool,
    pub final_gap: Option<f64>,
    pub cluster_point: Vec<f64>,
    pub cluster_dist_to_xstar: Option<f64>,
    pub reason: String,
}

const GAP_FINAL_TOL: f64 = 1e-6;
const GAP_NOISE_REL: f64 = 0.10;
// Gaps below the feasibility tolerance are solver noise.
const GAP_NOISE_ABS: f64 = GAP_FINAL_TOL;

/// The last record is (nearly) feasible and the infeasibility of the best
/// points does not grow along the sweep, up to 10% relative noise and an
/// absolute floor equal to the final-gap tolerance.
pub fn penalty_type_probe(records: &[SweepRecord]) -> PenaltyTypeVerdict {
    let fail = |reason: &str, last: Option<&SweepRecord>| PenaltyTypeVerdict {
        passed: false,
        final_gap: last.and_then(|r| r.feasibility_gap_total),
        cluster_point: last.map(|r| r.best_x.clone()).unwrap_or_default(),
        cluster_dist_to_xstar: last.and_then(|r| r.dist_to_xstar),
        reason: reason.into(),
    };
    if records.len() < 4 {
        return fail("fewer than four records", records.last());
    }
    if records.windows(2).any(|w| !(w[1].c > w[0].c)) {
        return fail("c values not increasing", records.last());
    }
    let gaps: Option<Vec<f64>> = records.iter().map(|r| r.feasibility_gap_total).collect();
    let Some(gaps) = gaps else {
        return fail("a record has no minimizer", records.last());
    };
    let last = records.last().unwrap();
    if gaps[gaps.len() - 1] > GAP_FINAL_TOL {
        return fail("final record infeasible", Some(last));
    }
    if let Some(k) = gaps
        .windows(2)
        .position(|w| w[1] > (1.0 + GAP_NOISE_REL) * w[0] + GAP_NOISE_ABS)
    {
        return fail(
            &format!(
                "gap increases between c = {} and c = {}",
                records[k].c,
                records[k + 1].c
            ),
            Some(last),
        );
    }
    PenaltyTypeVerdict {
        passed: true,
        final_gap: Some(gaps[gaps.len() - 1]),
        cluster_point: last.best_x.clone(),
        cluster_dist_to_xstar: last.dist_to_xstar,
        reason: "ok".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyVerdict {
    pub passed: bool,
    pub radius: f64,
    pub max_norm: Option<f64>,
}

/// Every record attained a finite minimum at a point of norm at most `radius`.
pub fn nondegeneracy_probe(records: &[SweepRecord], radius: f64) -> NondegeneracyVerdict {
    let all_attained = !records.is_empty() && records.iter().all(SweepRecord::attained);
    let max_norm = records
        .iter()
        .filter(|r| r.attained())
        .map(|r| norm(&r.best_x))
        .reduce(f64::max);
    NondegeneracyVerdict {
        passed: all_attained && max_norm.is_some_and(|m| m <= radius),
        radius,
        max_norm,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCheck {
    pub c: f64,
    pub passed: bool,
    /// `min F(x) − F(x*)` over the samples.
    pub worst_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExactnessVerdict {
    pub x_star: Vec<f64>,
    pub passed: bool,
    /// Smallest `c` from which every listed value passes.
    pub from_c: Option<f64>,
    pub checks: Vec<LocalCheck>,
}

const LOCAL_SLACK: f64 = 1e-9;

/// `F(x, c) ≥ F(x*, c) − 1e-9` on `n_samples` points of `B(x*, radius) ∩ A`,
/// for some `c` of the list and all larger ones.
pub fn local_exactness_probe(
    sf: &dyn SeparatingFunction<f64>,
    x_star: &[f64],
    c_list: &[f64],
    radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<LocalExactnessVerdict> {
    if !(radius > 0.0) || n_samples == 0 {
        return Err(Error::InvalidInput("need radius > 0 and n_samples >= 1".into()));
    }
    let bounds = &sf.problem().bounds;
    let mut g = rng(seed);
    let mut samples = Vec::with_capacity(n_samples);
    let mut tries = 0;
    while samples.len() < n_samples && tries < 1000 * n_samples {
        tries += 1;
        let x = uniform_in_ball(&mut g, x_star, radius);
        if bounds.contains(&x) {
            samples.push(x);
        }
    }
    let checks: Vec<LocalCheck> = c_list
        .iter()
        .map(|&c| {
            let f = guarded(sf, c);
            let base = f(x_star);
            if !base.is_finite() {
                return LocalCheck {
                    c,
                    passed: false,
                    worst_margin: None,
                };
            }
            let worst = samples
                .par_iter()
                .map(|x| f(x) - base)
                .reduce(|| f64::INFINITY, f64::min);
            LocalCheck {
                c,
                passed: worst >= -LOCAL_SLACK,
                worst_margin: Some(worst),
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..checks.len()).collect();
    order.sort_by(|&a, &b| checks[a].c.total_cmp(&checks[b].c));
    let mut from_c = None;
    for &i in order.iter().rev() {
        if !checks[i].passed {
            break;
        }
        from_c = Some(checks[i].c);
    }
    Ok(LocalExactnessVerdict {
        x_star: x_star.to_vec(),
        passed: from_c.is_some(),
        from_c,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelVerdict {
    pub passed: bool,
    pub c0: f64,
    pub expansion: f64,
    pub shell_samples: usize,
    pub min_shell_value: Option<f64>,
    pub min_box_value: Option<f64>,
    /// Always "evidence, not proof": only a bounded region is sampled.
    pub note: String,
}

const SHELL_SAMPLES: usize = 4096;

/// Samples `F(·, c0)` on the box and on the shell between the box and its
/// `expansion`-fold enlargement; passes iff no shell value is below `f* − 1e-9`.
pub fn sublevel_bounded_probe(
    sf: &dyn SeparatingFunction<f64>,
    c0: f64,
    f_star: f64,
    expansion: f64,
    seed: u64,
) -> Result<SublevelVerdict> {
    let p = sf.problem();
    if !p.bounds.is_bounded() || !(expansion > 1.0) || !(c0 > 0.0) {
        return Err(Error::InvalidInput(
            "sublevel probe needs a bounded box, expansion > 1, c0 > 0".into(),
        ));
    }
    let outer = p.bounds.expanded(expansion);
    let eval = |x: &[f64]| match sf.eval(x, c0) {
        Ok(v) if !v.is_nan() => v,
        _ => f64::INFINITY,
    };
    let mut h = ScrambledHalton::new(p.dim, seed);
    let mut shell = Vec::with_capacity(SHELL_SAMPLES);
    let mut inner = Vec::with_capacity(SHELL_SAMPLES);
    let mut draws = 0;
    while shell.len() < SHELL_SAMPLES && draws < 64 * SHELL_SAMPLES {
        draws += 1;
        let x = h.next_in_box(&outer.lower, &outer.upper);
        if p.bounds.contains(&x) {
            if inner.len() < SHELL_SAMPLES {
                inner.push(x);
            }
        } else {
            shell.push(x);
        }
    }
    let min_of = |pts: &[Vec<f64>]| {
        pts.par_iter()
            .map(|x| eval(x))
            .filter(|v| v.is_finite())
            .reduce_with(f64::min)
    };
    let min_shell_value = min_of(&shell);
    Ok(SublevelVerdict {
        passed: min_shell_value.is_none_or(|v| v >= f_star - 1e-9),
        c0,
        expansion,
        shell_samples: shell.len(),
        min_shell_value,
        min_box_value: min_of(&inner),
        note: "evidence, not proof".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredicateProbe {
    pub c: f64,
    pub passed: bool,
    pub min_value: Option<f64>,
    pub dist_to_xstar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CStarEstimate {
    /// `None` when the predicate fails at `c_hi`.
    pub c_star: Option<f64>,
    pub strict: bool,
    pub probes: Vec<PredicateProbe>,
}

/// Argmin and value tolerance of the exactness predicate.
pub const ARGMIN_TOL: f64 = 1e-4;

/// Multistart argmin within `1e-4` of `x*`, and for the strict variant
/// also `|min F − f*| ≤ 1e-4`.
pub fn exactness_predicate(
    sf: &dyn SeparatingFunction<f64>,
    c: f64,
    strict: bool,
    cfg: &SolverConfig,
) -> Result<PredicateProbe> {
    let p = sf.problem();
    let cert = p
        .certificate
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("{}: no certified optimum", p.name)))?;
    let target = sf.optimal_value().unwrap_or(cert.f_star);
    match minimize(sf, c, cfg) {
        Ok(r) => {
            let d = dist(&r.x, &cert.x_star);
            let value_ok = !strict || (r.value - target).abs() <= ARGMIN_TOL;
            Ok(PredicateProbe {
                c,
                passed: d <= ARGMIN_TOL && value_ok,
                min_value: Some(r.value),
                dist_to_xstar: Some(d),
            })
        }
        Err(Error::AllStartsFailed) => Ok(PredicateProbe {
            c,
            passed: false,
            min_value: None,
            dist_to_xstar: None,
        }),
        Err(e) => Err(e),
    }
}

/// Bisection for the least `c` passing [`exactness_predicate`], assuming
/// passing values form an up-set of `[c_lo, c_hi]`.
///
/// Returns `c_lo` when it already passes, the bracket midpoint once
/// `(hi − lo)/hi ≤ tol_rel`, and `c_star = None` when `c_hi` fails.
pub fn estimate_c_star(
    sf: &dyn SeparatingFunction<f64>,
    c_lo: f64,
    c_hi: f64,
    tol_rel: f64,
    strict: bool,
    cfg: &SolverConfig,
) -> Result<CStarEstimate> {
    if !(c_lo > 0.0 && c_hi > c_lo) || !(tol_rel > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < c_lo < c_hi and tol_rel > 0, got ({c_lo}, {c_hi}, {tol_rel})"
        )));
    }
    let mut probes = Vec::new();
    let run = |c: f64, probes: &mut Vec<PredicateProbe>| -> Result<bool> {
        let pr = exactness_predicate(sf, c, strict, cfg)?;
        probes.push(pr);
        check_monotone(probes)?;
        Ok(pr.passed)
    };
    if !run(c_hi, &mut probes)? {
        return Ok(CStarEstimate {
            c_star: None,
            strict,
            probes,
        });
    }
    if run(c_lo, &mut probes)? {
        return Ok(CStarEstimate {
            c_star: Some(c_lo),
            strict,
            probes,
        });
    }
    let (mut lo, mut hi) = (c_lo, c_hi);
    while (hi - lo) / hi > tol_rel {
        // Geometric midpoint while the bracket spans decades.
        let mid = if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if run(mid, &mut probes)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CStarEstimate {
        c_star: Some(0.5 * (lo + hi)),
        strict,
        probes,
    })
}

/// A failing `c` above a passing one breaks the up-set assumption.
fn check_monotone(probes: &[PredicateProbe]) -> Result<()> {
    let mut sorted: Vec<PredicateProbe> = probes.to_vec();
    sorted.sort_by(|a, b| a.c.total_cmp(&b.c));
    for i in 0..sorted.len() {
        if !sorted[i].passed {
            continue;
        }
        if let Some(j) = (i + 1..sorted.len()).find(|&j| !sorted[j].passed) {
            let k = (j + 1..sorted.len())
                .find(|&k| sorted[k].passed)
                .unwrap_or(sorted.len() - 1);
            let t = |p: &PredicateProbe| (p.c, p.passed);
            return Err(Error::NonMonotonePredicate([
                t(&sorted[i]),
                t(&sorted[j]),
                t(&sorted[k]),
            ]));
        }
    }
    Ok(())
}
