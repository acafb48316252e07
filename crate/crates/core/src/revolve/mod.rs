//! Surfaces of revolution realizing rotationally symmetric metrics.

mod profile;
mod surface;

pub use profile::{ProfileMetric, ADMISSIBILITY_SLACK};
pub use surface::{
    classify, convexity_monitor, realize, round_trip_check, round_trip_refinement, Classification, ConvexityReport,
    RefinementReport, RevolutionSurface, RoundTripReport, SurfaceClass, ISOMETRY_TOLERANCE, PLANAR_CONTACT_SLACK,
};
