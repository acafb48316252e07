use nalgebra::Vector4;
use serde::Serialize;

use super::cap::SphericalCap;
use super::hull::{hull_projection, ideal_hull, ConvexHullBoundary};
use super::points::{IdealPointSet, PointComplement};
use crate::error::{Error, Result};
use crate::hyp::{mink, visual_log_density_from_origin, HIsometry, HPoint, IdealPoint};

/// A domain whose complement has a computable convex hull.
#[derive(Debug, Clone)]
pub enum HullDomain {
    /// A round disk; the hull of its complement is the half-space behind its plane.
    RoundDisk(SphericalCap),
    /// The sphere minus finitely many points.
    Punctured { complement: PointComplement, hull: ConvexHullBoundary },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VisualCheck {
    /// `log h_Th / c₁` at `ξ`.
    pub thurston: f64,
    /// `log c_m / c₁` at `ξ` for the projection `m`.
    pub visual: f64,
    pub residual: f64,
    #[serde(skip)]
    pub projection: HPoint,
}

impl HullDomain {
    pub fn punctured(set: IdealPointSet) -> Result<Self> {
        let hull = ideal_hull(&set)?;
        Ok(HullDomain::Punctured { complement: PointComplement::new(set), hull })
    }

    pub fn transform(&self, g: &HIsometry) -> Result<Self> {
        match self {
            HullDomain::RoundDisk(cap) => Ok(HullDomain::RoundDisk(cap.transform(g)?)),
            HullDomain::Punctured { complement, .. } => HullDomain::punctured(complement.set.transform(g)),
        }
    }

    /// Projection of `ξ` onto the boundary of the hull of the complement.
    pub fn projection(&self, xi: &IdealPoint) -> Result<HPoint> {
        match self {
            HullDomain::RoundDisk(cap) => {
                let l = xi.light_vector();
                let n = cap.plane();
                let c = mink(&l, &n);
                if !(c > 0.0) {
                    return Err(Error::OutsideDomain([xi.dir().x, xi.dir().y]));
                }
                let m: Vector4<f64> = (l - n * c) / c;
                HPoint::normalize(m)
            }
            HullDomain::Punctured { hull, .. } => Ok(hull_projection(hull, xi)?.point),
        }
    }

    pub fn thurston_log_density(&self, xi: &IdealPoint) -> Result<f64> {
        match self {
            HullDomain::RoundDisk(cap) => cap.hyperbolic_log_density(xi.dir()),
            HullDomain::Punctured { complement, .. } => complement.thurston_log_density_at(xi),
        }
    }
}

/// `|log h_Th(ξ) - log c_m(ξ)|` with `m` the projection of `ξ` onto the hull boundary.
pub fn thurston_visual_check(domain: &HullDomain, xi: &IdealPoint) -> Result<VisualCheck> {
    let thurston = domain.thurston_log_density(xi)?;
    let m = domain.projection(xi)?;
    let visual = visual_log_density_from_origin(xi, &m);
    Ok(VisualCheck { thurston, visual, residual: (thurston - visual).abs(), projection: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn round_disk_identity_is_exact() {
        let cap = SphericalCap::new(Vector3::new(0.1, 0.7, -0.3), 1.1).unwrap();
        let dom = HullDomain::RoundDisk(cap);
        for v in [cap.center, (cap.center + Vector3::new(0.3, 0.0, 0.1)).normalize()] {
            let r = thurston_visual_check(&dom, &IdealPoint::new(v).unwrap()).unwrap();
            assert!(r.residual < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn tetrahedron_identity_at_a_face_center() {
        let dom = HullDomain::punctured(IdealPointSet::regular_tetrahedron()).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let xi = IdealPoint::new(-Vector3::new(s, s, s)).unwrap();
        let r = thurston_visual_check(&dom, &xi).unwrap();
        assert!(r.residual < 1e-12, "{r:?}");
    }
}
