//! Statistics of simulated flows and Monte Carlo checks of the Gaussian
//! comparison and concentration inequalities they rely on.

pub mod comparison;
pub mod concentration;
pub mod series;
pub mod stats;
mod test_function;

pub use comparison::{
    interpolation_residual, slepian_check, submodularity_check, ComparisonReport, InterpolationReport,
    INTERPOLATION_NODES, STDERR_SLACK,
};
pub use concentration::{concentration_check, ConcentrationReport};
pub use series::{
    cluster_count_series, coupling_gap_series, estimate_e, expected_sup_on_grid, inversions, lil_series,
    rescale_factor, rescaled_grid, scale_lil, scale_tloglogt, scale_tlogt, subgaussian_max_bound, sup_deviation,
    CouplingPoint, CouplingSeries, DeviationPoint, DeviationSeries,
};
pub use stats::Summary;
pub use test_function::{TestFunction, DEFAULT_SMOOTHING};
