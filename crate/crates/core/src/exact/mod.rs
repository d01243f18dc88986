//! Ground truth for small instances: exhaustive enumeration, the MIP model
//! in MPS form, and cross-checking of external solver output.

mod enumerate;
mod mip;
mod verify;

pub use enumerate::{enumerate_optimal, search_estimate, EnumerationBounds, ExactOutcome};
pub use mip::{
    build_mip, column_count, export_mps, BatteryRows, ColumnKind, MipColumn, MipExportConfig, MipModel, MipRow, RowSense,
    RowViolation,
};
pub use verify::{
    assignment_from_plan, parse_solution, plan_from_assignment, verify_against_mps, VerifyReport,
};

/// Relative gap `(value - bound) / bound`, defined for positive bounds.
pub fn optimality_gap(value: f64, bound: f64) -> Option<f64> {
    (bound > 0.0).then(|| (value - bound) / bound)
}
