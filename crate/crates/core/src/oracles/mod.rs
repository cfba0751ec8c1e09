//! Verification drivers: manufactured solutions, refinement and contraction
//! studies, and the audit of the discrete forms.

mod audit;
mod mms;
mod studies;

pub use audit::{
    check_forms, continuity_constant, AuditCheck, AuditOptions, FormAudit, ANTISYMMETRY_TOLERANCE,
    CALIBRATION_SAMPLES, COERCIVITY_SLACK, SKEW_TOLERANCE, TRIPLES_PER_TRIAL,
};
pub use mms::{central_difference, make_mms_problem, MmsProblem, FD_STEP, MMS_GAMMA1};
pub use studies::{
    cauchy_study, contraction_study, convergence_study, interpolation_study, mms_errors, nested_meshes,
    observed_rates, CauchyReport, ContractionOptions, ContractionReport, LevelErrors, MmsStudy, StudyReport,
    CAUCHY_RATIO, ERROR_NAMES, GRONWALL_SLACK, RATE_TARGETS,
};
