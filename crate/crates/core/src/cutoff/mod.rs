//! Concave cut-offs and the approximating metrics `h_n` of a complete metric on a domain.

pub mod approx;
pub mod function;

pub use approx::{
    build_hn, curvature_report, curvature_report_with, disk_datum, disk_datum_log_density, disk_datum_window,
    gradient_bound, kmax_estimate, region_decomposition, ApproxMetric, ApproxMetricSequence, CurvatureReport,
    RegionDecomposition, RegionStats, ReportOptions,
};
pub use function::{build_cutoff, CertificationReport, CutoffFunction, DEFAULT_STEP};
