//! Penalty selection and run parameters, with JSON overrides.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::solver::SolverConfig;
use crate::auglag::HprLagrangian;
use crate::error::{Error, Result};
use crate::penalties::{LinearPenalty, QOrder, QPenalty};
use crate::problem::{ConstrainedProblem, Multipliers};
use crate::separating::SeparatingFunction;
use crate::smoothpen::{C1Penalty, EstimatorConfig, SmoothPenaltyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    Linear,
    Qorder,
    C1Socp,
    C1Sdp,
    AlHpr,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 5] = [
        PenaltyKind::Linear,
        PenaltyKind::Qorder,
        PenaltyKind::C1Socp,
        PenaltyKind::C1Sdp,
        PenaltyKind::AlHpr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Linear => "linear",
            PenaltyKind::Qorder => "qorder",
            PenaltyKind::C1Socp => "c1-socp",
            PenaltyKind::C1Sdp => "c1-sdp",
            PenaltyKind::AlHpr => "al-hpr",
        }
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown penalty '{s}'")))
    }
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A penalty family and its parameters. Unset `alpha`/`kappa` take the
/// defaults of the cone type; an unset `lambda` takes the certified multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub q: f64,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub zeta1: f64,
    pub zeta2: f64,
    /// Flat multiplier: Lorentz blocks, matrix upper triangle, then `μ`.
    pub lambda: Option<Vec<f64>>,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        Self {
            kind: PenaltyKind::Linear,
            q: 1.0,
            alpha: None,
            kappa: None,
            zeta1: 1.0,
            zeta2: 1.0,
            lambda: None,
        }
    }
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    /// Builds the separating function. The nonlinear penalty needs `f ≥ 0`;
    /// problems without that guarantee are run on `exp(f)`.
    pub fn build(&self, problem: &ConstrainedProblem<f64>) -> Result<Box<dyn SeparatingFunction<f64>>> {
        Ok(match self.kind {
            PenaltyKind::Linear => Box::new(LinearPenalty::new(problem.clone())),
            PenaltyKind::Qorder => {
                let p = if problem.objective_nonnegative {
                    problem.clone()
                } else {
                    problem.exp_transformed()
                };
                Box::new(QPenalty::new(p, QOrder::new(self.q)?))
            }
            PenaltyKind::C1Socp | PenaltyKind::C1Sdp => {
                let sdp = self.kind == PenaltyKind::C1Sdp;
                let base = if sdp {
                    SmoothPenaltyParams::sdp_default()
                } else {
                    SmoothPenaltyParams::soc_default()
                };
                let params = SmoothPenaltyParams {
                    alpha: self.alpha.unwrap_or(base.alpha),
                    kappa: self.kappa.unwrap_or(base.kappa),
                    estimator: EstimatorConfig::new(self.zeta1, self.zeta2)?,
                };
                if sdp {
                    Box::new(C1Penalty::sdp_with(problem.clone(), params)?)
                } else {
                    Box::new(C1Penalty::soc_with(problem.clone(), params)?)
                }
            }
            PenaltyKind::AlHpr => match &self.lambda {
                Some(flat) => Box::new(HprLagrangian::new(
                    problem.clone(),
                    Multipliers::unflatten(problem, flat)?,
                )?),
                None => Box::new(HprLagrangian::at_certified(problem.clone())?),
            },
        })
    }

    /// Whether the family is defined for the problem's constraint structure
    /// and nondegenerate at its certified optimum (for the smooth penalties).
    pub fn applicable(kind: PenaltyKind, problem: &ConstrainedProblem<f64>) -> bool {
        match kind {
            PenaltyKind::Linear | PenaltyKind::Qorder => true,
            PenaltyKind::AlHpr => problem.certificate.as_ref().is_some_and(|c| c.multipliers.is_some()),
            PenaltyKind::C1Socp | PenaltyKind::C1Sdp => {
                let structure = match kind {
                    PenaltyKind::C1Socp => problem.sdp.is_none(),
                    _ => problem.sdp.is_some() && problem.soc_blocks.is_empty(),
                };
                structure
                    && problem.certificate.as_ref().is_some_and(|c| {
                        crate::smoothpen::estimate_multipliers_soc(problem, &c.x_star, &EstimatorConfig::default())
                            .or_else(|_| {
                                crate::smoothpen::estimate_multipliers_sdp(
                                    problem,
                                    &c.x_star,
                                    &EstimatorConfig::default(),
                                )
                            })
                            .is_ok()
                    })
            }
        }
    }
}

/// Parameters of the localization battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub solver: SolverConfig,
    /// Sweep grid `c_min → c_max` in `c_steps` geometric steps.
    pub c_min: f64,
    pub c_max: f64,
    pub c_steps: usize,
    /// Bound `R` of the nondegeneracy probe.
    pub radius: f64,
    pub local_radius: f64,
    pub local_samples: usize,
    pub local_c_list: Vec<f64>,
    /// `c0` of the sublevel probe; `None` uses `c_max`.
    pub sublevel_c0: Option<f64>,
    pub sublevel_expansion: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub tol_rel: f64,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            c_min: 1.0,
            c_max: 1024.0,
            c_steps: 11,
            radius: 10.0,
            local_radius: 0.25,
            local_samples: 2000,
            local_c_list: vec![0.25, 1.0, 4.0, 16.0, 64.0, 256.0, 1024.0],
            sublevel_c0: None,
            sublevel_expansion: 2.0,
            c_lo: 0.01,
            c_hi: 1000.0,
            tol_rel: 0.01,
            strict: true,
        }
    }
}

impl RunConfig {
    /// Reads a JSON object whose keys override the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Parses `"1, -2.5,3"`.
pub fn parse_csv_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("not a number: '{t}'")))
        })
        .collect()
}
