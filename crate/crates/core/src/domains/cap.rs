use nalgebra::{Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::ConformalDomain;
use crate::error::{Error, Result};
use crate::hyp::{mink, ChartKind, HIsometry, IdealPoint};

/// A round disk of the sphere: the open cap of angular radius `radius` around `center`.
///
/// Its boundary circle bounds a hyperbolic plane with unit spacelike normal
/// `N = (cos R, c) / sin R`; a point `v` lies in the cap iff `<(1,v), N> > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCap {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl SphericalCap {
    pub fn new(center: Vector3<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!("cap radius {radius} outside (0, pi)")));
        }
        let n = center.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::InvalidArgument("cap center must be a nonzero finite vector".into()));
        }
        Ok(SphericalCap { center: center / n, radius })
    }

    /// Chart disk `|z - z0| < r` as a cap.
    pub fn from_chart_disk(kind: ChartKind, z0: Complex64, r: f64) -> Result<Self> {
        let on = |k: f64| kind.to_sphere(z0 + Complex64::from_polar(r, std::f64::consts::TAU * k / 3.0));
        let (a, b, c) = (on(0.0), on(1.0), on(2.0));
        let n = (b - a).cross(&(c - a)).normalize();
        let h = n.dot(&a);
        let inside = kind.to_sphere(z0);
        let (n, h) = if n.dot(&inside) > h { (n, h) } else { (-n, -h) };
        SphericalCap::new(n, h.clamp(-1.0, 1.0).acos())
    }

    /// Cap with the given unit spacelike plane normal (the side where `<ℓ, N> > 0`).
    pub fn from_plane(n: &Vector4<f64>) -> Result<Self> {
        let q = mink(n, n);
        if !(q > 0.0) {
            return Err(Error::Degenerate("plane normal is not spacelike".into()));
        }
        let n = n / q.sqrt();
        let sp = Vector3::new(n[1], n[2], n[3]);
        let s = sp.norm();
        // N = (cos R, c)/sin R with |c| = 1 gives |sp| = 1/sin R and n0 = cot R.
        let radius = (1.0 / s).atan2(n[0] / s);
        SphericalCap::new(sp / s, radius)
    }

    pub fn plane(&self) -> Vector4<f64> {
        let (s, c) = self.radius.sin_cos();
        Vector4::new(c, self.center.x, self.center.y, self.center.z) / s
    }

    /// `<ℓ, N>`; positive inside the cap, equal to `(cos d - cos R) / sin R`.
    pub fn support(&self, v: &Vector3<f64>) -> f64 {
        let l = Vector4::new(1.0, v.x, v.y, v.z);
        mink(&l, &self.plane())
    }

    pub fn contains(&self, v: &Vector3<f64>) -> bool {
        self.support(v) > 0.0
    }

    /// Angle from the center.
    pub fn angle_to(&self, v: &Vector3<f64>) -> f64 {
        self.center.cross(v).norm().atan2(self.center.dot(v))
    }

    /// Log-density against `c₁` of the complete hyperbolic metric of the cap.
    pub fn hyperbolic_log_density(&self, v: &Vector3<f64>) -> Result<f64> {
        let d = self.angle_to(v);
        let s = (d.cos() - self.radius.cos()) / self.radius.sin();
        if !(s > 0.0) {
            return Err(Error::OutsideDomain([v.x, v.y]));
        }
        // cos d - cos R = 2 sin((R+d)/2) sin((R-d)/2) avoids cancellation near the rim.
        let a = 2.0 * (0.5 * (self.radius + d)).sin() * (0.5 * (self.radius - d)).sin();
        Ok(self.radius.sin().ln() - a.ln())
    }

    pub fn transform(&self, g: &HIsometry) -> Result<Self> {
        SphericalCap::from_plane(&g.apply_plane(&self.plane()))
    }

    pub fn ideal_center(&self) -> IdealPoint {
        IdealPoint::new(self.center).expect("unit center")
    }
}

impl ConformalDomain for SphericalCap {
    fn hyperbolic_log_density(&self, kind: ChartKind, z: Complex64) -> Result<f64> {
        SphericalCap::hyperbolic_log_density(self, &kind.to_sphere(z))
    }

    /// A round disk is its own maximal disk.
    fn thurston_log_density(&self, kind: ChartKind, z: Complex64) -> Result<f64> {
        SphericalCap::hyperbolic_log_density(self, &kind.to_sphere(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_normal_is_unit_and_round_trips() {
        let cap = SphericalCap::new(Vector3::new(0.2, -0.3, 0.9), 0.7).unwrap();
        let n = cap.plane();
        assert!((mink(&n, &n) - 1.0).abs() < 1e-14);
        let back = SphericalCap::from_plane(&n).unwrap();
        assert!((back.radius - 0.7).abs() < 1e-14);
        assert!((back.center - cap.center).norm() < 1e-14);
    }

    #[test]
    fn hemisphere_density_is_secant() {
        let cap = SphericalCap::new(Vector3::z(), std::f64::consts::FRAC_PI_2).unwrap();
        let d: f64 = 0.4;
        let v = Vector3::new(d.sin(), 0.0, d.cos());
        assert!((cap.hyperbolic_log_density(&v).unwrap() + d.cos().ln()).abs() < 1e-14);
        assert!(cap.hyperbolic_log_density(&-Vector3::z()).is_err());
    }

    #[test]
    fn chart_disk_matches_unit_disk_density() {
        // |z| < 1 in the north chart is the southern hemisphere, where the
        // Poincaré density 2/(1-|z|²) equals the round density times sec d.
        let cap = SphericalCap::from_chart_disk(ChartKind::North, Complex64::new(0.0, 0.0), 1.0).unwrap();
        assert!((cap.radius - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let z = Complex64::new(0.3, 0.2);
        let chart = (2.0 / (1.0 - z.norm_sqr())).ln() - ChartKind::round_log_density(z);
        let got = ConformalDomain::hyperbolic_log_density(&cap, ChartKind::North, z).unwrap();
        assert!((got - chart).abs() < 1e-13);
    }
}
