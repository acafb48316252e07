//! Convex surfaces in hyperbolic space: fundamental forms, Gauss map and boundary data.
//!
//! The Gauss equation is used as `det B = K + 1`. A horosphere has `B = Id` and is
//! intrinsically flat, which fixes the sign; the form `det B = K - 1` fails there.

pub mod assembly;
pub mod forms;
pub mod gauss;
pub mod io;
pub mod patch;

pub use assembly::{boundary_data_assembly, BoundaryData, IdealRegion, FOLD_TOLERANCE};
pub use forms::{
    brioschi, codazzi, forms_at, fundamental_forms, gauss_codazzi_residual, intrinsic_curvature, principal_curvatures,
    FormDerivatives, FormSample, FundamentalForms, GaussCodazzi, MIN_METRIC_DET,
};
pub use gauss::{
    curvature_window_check, gauss_map, offset_curvature, parallel_area_factor, GaussMapField, UmbilicStats, WindowMode,
    WindowReport,
};
pub use patch::{AnalyticSurface, Jets, PatchSource, Scalar, SurfacePatch};
