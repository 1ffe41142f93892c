//! The localization battery, its JSON report and the sweep CSV.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::config::{PenaltySpec, RunConfig};
use super::harness::{
    c_sweep, estimate_c_star, geometric_grid, local_exactness_probe, nondegeneracy_probe, penalty_type_probe,
    sublevel_bounded_probe, CStarEstimate, LocalExactnessVerdict, NondegeneracyVerdict, PenaltyTypeVerdict,
    SublevelVerdict, SweepRecord,
};
use crate::error::{Error, Result};
use crate::problem::ConstrainedProblem;
use crate::separating::SeparatingFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub penalty_type: bool,
    pub nondegenerate: bool,
    pub local_exact: bool,
    pub sublevel_bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub problem: String,
    pub penalty: String,
    pub seed: u64,
    /// `None` when no `c ≤ c_hi` passed the exactness predicate.
    pub c_star: Option<f64>,
    pub verdicts: Verdicts,
    pub penalty_type: PenaltyTypeVerdict,
    pub nondegeneracy: NondegeneracyVerdict,
    pub local_exactness: Vec<LocalExactnessVerdict>,
    pub sublevel: SublevelVerdict,
    pub c_star_search: CStarEstimate,
    pub evidence: Vec<SweepRecord>,
}

/// Runs sweep, penalty-type, nondegeneracy, local-exactness (at the certified
/// optimum), sublevel and `c*` probes.
pub fn localize(sf: &dyn SeparatingFunction<f64>, cfg: &RunConfig) -> Result<ExactnessReport> {
    let p = sf.problem();
    let cert = p
        .certificate
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("{}: localization needs a certified optimum", p.name)))?;
    let grid = geometric_grid(cfg.c_min, cfg.c_max, cfg.c_steps)?;
    let evidence = c_sweep(sf, &grid, &cfg.solver)?;
    let penalty_type = penalty_type_probe(&evidence);
    let nondegeneracy = nondegeneracy_probe(&evidence, cfg.radius);
    let local = local_exactness_probe(
        sf,
        &cert.x_star,
        &cfg.local_c_list,
        cfg.local_radius,
        cfg.local_samples,
        cfg.solver.seed,
    )?;
    let f_star = sf.optimal_value().unwrap_or(cert.f_star);
    let sublevel = sublevel_bounded_probe(
        sf,
        cfg.sublevel_c0.unwrap_or(cfg.c_max),
        f_star,
        cfg.sublevel_expansion,
        cfg.solver.seed,
    )?;
    let c_star_search = estimate_c_star(sf, cfg.c_lo, cfg.c_hi, cfg.tol_rel, cfg.strict, &cfg.solver)?;
    Ok(ExactnessReport {
        problem: p.name.clone(),
        penalty: sf.label(),
        seed: cfg.solver.seed,
        c_star: c_star_search.c_star,
        verdicts: Verdicts {
            penalty_type: penalty_type.passed,
            nondegenerate: nondegeneracy.passed,
            local_exact: local.passed,
            sublevel_bounded: sublevel.passed,
        },
        penalty_type,
        nondegeneracy,
        local_exactness: vec![local],
        sublevel,
        c_star_search,
        evidence,
    })
}

/// Builds the penalty from `spec` and runs [`localize`].
pub fn localize_spec(
    problem: &ConstrainedProblem<f64>,
    spec: &PenaltySpec,
    cfg: &RunConfig,
) -> Result<ExactnessReport> {
    localize(spec.build(problem)?.as_ref(), cfg)
}

/// Compact JSON whose floats carry 17 significant digits.
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", f64::from(value))
    }
}

/// Serializes with 17 significant digits per float.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn report_from_json(text: &str) -> Result<ExactnessReport> {
    Ok(serde_json::from_str(text)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Header `c,best_F,best_x1..best_xd,feas_gap,dist_to_xstar,starts_agreeing`.
pub fn csv_header(dim: usize) -> Vec<String> {
    let mut h = vec!["c".to_string(), "best_F".to_string()];
    h.extend((1..=dim).map(|i| format!("best_x{i}")));
    h.extend(["feas_gap", "dist_to_xstar", "starts_agreeing"].map(String::from));
    h
}

/// Writes sweep records; failed records leave the numeric cells empty.
pub fn write_sweep_csv<W: Write>(out: W, dim: usize, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(dim))?;
    for r in records {
        let mut row = vec![format!("{:.16e}", r.c), fmt_opt(r.best_f)];
        if r.best_x.len() == dim {
            row.extend(r.best_x.iter().map(|v| format!("{v:.16e}")));
        } else {
            row.extend(std::iter::repeat_n(String::new(), dim));
        }
        row.push(fmt_opt(r.feasibility_gap_total));
        row.push(fmt_opt(r.dist_to_xstar));
        row.push(r.n_starts_agreeing.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
