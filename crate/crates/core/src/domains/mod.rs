//! Domains of the sphere at infinity, their hyperbolic and Thurston metrics,
//! and ideal convex hulls of their complements.

pub mod cap;
pub mod export;
pub mod hull;
pub mod points;
pub mod quasidisk;
pub mod visual;

pub use cap::SphericalCap;
pub use export::{export_hull, import_hull};
pub use hull::{base_point, hull_projection, ideal_hull, Contact, ConvexHullBoundary, HullEdge, HullFace, HullKind, Projection};
pub use points::{IdealPointSet, PointComplement, PunctureDisk};
pub use quasidisk::{ConformalMap, MaximalDisk, QuasidiskDomain, BOUNDARY_SAMPLES};
pub use visual::{thurston_visual_check, HullDomain, VisualCheck};
