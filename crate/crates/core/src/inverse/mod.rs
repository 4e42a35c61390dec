//! The coefficient, its a-priori band, and the fixed-point solver.

mod band;
mod coefficient;
mod picard;

pub use band::{apriori_band, apriori_band_on, compute_h, h_limit, h_values, BandProfile};
pub use coefficient::Coefficient;
pub use picard::{
    picard_solve, picard_step, uniqueness_probe, ConvergenceLog, IterationRecord, PicardOptions, PicardSolution,
    ProbeResult, BAND_SLACK,
};
