//! Numerical harness for exactness: multistart solvers, `c`-sweeps, the
//! localization probes, `c*` bisection and reporting. Runs in `f64`.

pub mod config;
pub mod gradcheck;
pub mod harness;
pub mod report;
pub mod solver;

pub use config::{parse_csv_floats, PenaltyKind, PenaltySpec, RunConfig};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use harness::{
    c_sweep, estimate_c_star, exactness_predicate, geometric_grid, local_exactness_probe, nondegeneracy_probe,
    penalty_type_probe, sublevel_bounded_probe, CStarEstimate, LocalCheck, LocalExactnessVerdict, NondegeneracyVerdict,
    PenaltyTypeVerdict, PredicateProbe, SublevelVerdict, SweepRecord, ARGMIN_TOL,
};
pub use report::{
    csv_header, localize, localize_spec, report_from_json, to_json, write_sweep_csv, ExactnessReport, Verdicts,
};
pub use solver::{minimize, minimize_fn, LocalResult, MinimizeResult, SolverConfig, SolverMethod};
