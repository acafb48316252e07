//! Conformal metrics `h = e^{2u} c₁` on the sphere and their diagnostics.

pub mod atlas;
pub mod chart;
pub mod curvature;
pub mod decomposition;
pub mod field;
pub mod io;
pub mod loops;
pub mod registry;

pub use atlas::{FnDensity, GaussBonnetSummary, Reduction, SphereAtlas, SphereDensity};
pub use chart::{Chart, Extent, Grid};
pub use curvature::{curvature, gradient_norm, CurvatureField};
pub use decomposition::{factor_decomposition, BoundsReport, FactorDecomposition};
pub use field::{interior_mask, ConformalDomain, ConformalMetricField, MaskedGrid, MetricKind, COLLAR_CELLS};
pub use loops::{fibonacci_sphere, isoperimetric_check, short_loop_search, ClosedLoop, IsoperimetricReport, LoopSearchOptions};
pub use registry::{AnalyticField, ConvergenceStudy, FieldError, REGISTERED_FIELDS};
