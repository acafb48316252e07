use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector4;
use num_dual::{DualNum, HyperDual64};

use crate::error::{Error, Result};
use crate::hyp::{mink, mink_cross, HIsometry, HPoint};
use crate::revolve::RevolutionSurface;

/// Scalar type usable in analytic immersions: plain floats and hyper-dual numbers.
pub trait Scalar: DualNum<Primitive = f64> + Copy {}
impl<T: DualNum<Primitive = f64> + Copy> Scalar for T {}

/// Registered surfaces with closed-form immersions into the hyperboloid.
#[derive(Debug, Clone)]
pub enum AnalyticSurface {
    /// Geodesic sphere of the given radius around the image of the origin; `(θ, φ)` polar angles.
    Sphere { radius: f64 },
    /// Horosphere `{height = 1}` of the upper half-space, in its flat coordinates `(x, y)`.
    Horosphere,
    /// Equidistant surface at distance `d` from the plane `x₃ = 0`; `(u, v)` Lorentz coordinates on the plane.
    Equidistant { distance: f64 },
    /// Radial graph `ρ = r(1 + a sin²θ cos 2φ)` over the sphere of radius `r`.
    PerturbedSphere { radius: f64, amplitude: f64 },
    /// Surface of revolution in Fermi coordinates; `(s, θ)` arclength along the profile and angle.
    Revolution(Arc<RevolutionSurface>),
}

impl AnalyticSurface {
    fn eval_local<D: Scalar>(&self, u: D, v: D) -> [D; 4] {
        match self {
            AnalyticSurface::Sphere { radius } => {
                let (ch, sh) = (radius.cosh(), radius.sinh());
                let (st, ct) = (u.sin(), u.cos());
                [D::from(ch), st * v.cos() * sh, st * v.sin() * sh, ct * sh]
            }
            AnalyticSurface::Horosphere => {
                let a = u * u + v * v;
                [(a + 2.0) * 0.5, u, v, a * 0.5]
            }
            AnalyticSurface::Equidistant { distance } => {
                let (ch, sh) = (distance.cosh(), distance.sinh());
                [u.cosh() * v.cosh() * ch, u.sinh() * ch, u.cosh() * v.sinh() * ch, D::from(sh)]
            }
            AnalyticSurface::PerturbedSphere { radius, amplitude } => {
                let st = u.sin();
                let rho = (st * st * (v * 2.0).cos() * *amplitude + 1.0) * *radius;
                let sh = rho.sinh();
                [rho.cosh(), st * v.cos() * sh, st * v.sin() * sh, u.cos() * sh]
            }
            AnalyticSurface::Revolution(rev) => rev.eval(u, v),
        }
    }

    /// Period of the second parameter, if it is an angle.
    pub fn period_v(&self) -> Option<f64> {
        match self {
            AnalyticSurface::Sphere { .. } | AnalyticSurface::PerturbedSphere { .. } | AnalyticSurface::Revolution(_) => {
                Some(2.0 * PI)
            }
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticSurface::Sphere { .. } => "sphere",
            AnalyticSurface::Horosphere => "horosphere",
            AnalyticSurface::Equidistant { .. } => "equidistant",
            AnalyticSurface::PerturbedSphere { .. } => "perturbed-sphere",
            AnalyticSurface::Revolution(_) => "revolution",
        }
    }
}

/// Immersion and its first two parameter derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jets {
    pub x: Vector4<f64>,
    pub xu: Vector4<f64>,
    pub xv: Vector4<f64>,
    pub xuu: Vector4<f64>,
    pub xuv: Vector4<f64>,
    pub xvv: Vector4<f64>,
}

#[derive(Debug, Clone)]
pub enum PatchSource {
    Analytic { surface: AnalyticSurface, transform: HIsometry },
    /// Row-major samples, `u` fastest.
    Sampled(Vec<Vector4<f64>>),
}

/// A parameterized surface sampled on an `nu × nv` node grid over a parameter rectangle.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    pub source: PatchSource,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub nu: usize,
    pub nv: usize,
    /// `±1`: sign applied to the Minkowski cross-product normal so that it is the exterior normal.
    pub orientation: f64,
}

fn hd(re: f64, e1: f64, e2: f64) -> HyperDual64 {
    HyperDual64::new(re, e1, e2, 0.0)
}

impl SurfacePatch {
    /// An analytic patch, oriented so that the mean curvature at the central sample is non-negative.
    pub fn analytic(surface: AnalyticSurface, u_range: (f64, f64), v_range: (f64, f64), nu: usize, nv: usize) -> Result<Self> {
        Self::analytic_transformed(surface, HIsometry::identity(), u_range, v_range, nu, nv)
    }

    pub fn analytic_transformed(
        surface: AnalyticSurface,
        transform: HIsometry,
        u_range: (f64, f64),
        v_range: (f64, f64),
        nu: usize,
        nv: usize,
    ) -> Result<Self> {
        check_grid(u_range, v_range, nu, nv)?;
        let mut p = SurfacePatch { source: PatchSource::Analytic { surface, transform }, u_range, v_range, nu, nv, orientation: 1.0 };
        p.orient_convex();
        Ok(p)
    }

    /// A sampled patch; derivatives come from centered differences.
    pub fn sampled(points: Vec<HPoint>, u_range: (f64, f64), v_range: (f64, f64), nu: usize, nv: usize) -> Result<Self> {
        check_grid(u_range, v_range, nu, nv)?;
        if points.len() != nu * nv {
            return Err(Error::InvalidArgument(format!("expected {} samples, found {}", nu * nv, points.len())));
        }
        let pts = points.iter().map(|p| *p.coords()).collect();
        let mut p = SurfacePatch { source: PatchSource::Sampled(pts), u_range, v_range, nu, nv, orientation: 1.0 };
        p.orient_convex();
        Ok(p)
    }

    pub fn sphere(radius: f64, n: usize) -> Result<Self> {
        positive(radius, "sphere radius")?;
        SurfacePatch::analytic(AnalyticSurface::Sphere { radius }, (0.0, PI), (0.0, 2.0 * PI), n, 2 * n)
    }

    pub fn horosphere(half: f64, n: usize) -> Result<Self> {
        SurfacePatch::analytic(AnalyticSurface::Horosphere, (-half, half), (-half, half), n, n)
    }

    pub fn equidistant(distance: f64, half: f64, n: usize) -> Result<Self> {
        positive(distance, "equidistant distance")?;
        SurfacePatch::analytic(AnalyticSurface::Equidistant { distance }, (-half, half), (-half, half), n, n)
    }

    pub fn perturbed_sphere(radius: f64, amplitude: f64, n: usize) -> Result<Self> {
        positive(radius, "sphere radius")?;
        if !(amplitude.abs() < 0.5) {
            return Err(Error::InvalidArgument(format!("perturbation amplitude {amplitude} too large")));
        }
        SurfacePatch::analytic(AnalyticSurface::PerturbedSphere { radius, amplitude }, (0.0, PI), (0.0, 2.0 * PI), n, 2 * n)
    }

    pub fn with_orientation(mut self, sign: f64) -> Self {
        self.orientation = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.source, PatchSource::Analytic { .. })
    }

    pub fn family(&self) -> Option<&AnalyticSurface> {
        match &self.source {
            PatchSource::Analytic { surface, .. } => Some(surface),
            PatchSource::Sampled(_) => None,
        }
    }

    pub fn hu(&self) -> f64 {
        (self.u_range.1 - self.u_range.0) / (self.nu - 1) as f64
    }

    pub fn hv(&self) -> f64 {
        (self.v_range.1 - self.v_range.0) / (self.nv - 1) as f64
    }

    pub fn param(&self, i: usize, j: usize) -> (f64, f64) {
        (self.u_range.0 + i as f64 * self.hu(), self.v_range.0 + j as f64 * self.hv())
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nu + i
    }

    pub fn period_v(&self) -> Option<f64> {
        self.family().and_then(|f| f.period_v())
    }

    /// Point of an analytic patch at arbitrary parameters.
    pub fn point_at(&self, u: f64, v: f64) -> Result<Vector4<f64>> {
        match &self.source {
            PatchSource::Analytic { surface, transform } => {
                let x = surface.eval_local(u, v);
                Ok(transform.apply_vector(&Vector4::new(x[0], x[1], x[2], x[3])))
            }
            PatchSource::Sampled(_) => Err(Error::InvalidArgument("sampled patches are only defined at their nodes".into())),
        }
    }

    pub fn sample_point(&self, i: usize, j: usize) -> Vector4<f64> {
        match &self.source {
            PatchSource::Sampled(p) => p[self.index(i, j)],
            PatchSource::Analytic { .. } => {
                let (u, v) = self.param(i, j);
                self.point_at(u, v).expect("analytic")
            }
        }
    }

    /// Exact jets of an analytic patch at arbitrary parameters.
    pub fn jets_at(&self, u: f64, v: f64) -> Result<Jets> {
        let PatchSource::Analytic { surface, transform } = &self.source else {
            return Err(Error::InvalidArgument("exact jets need an analytic patch".into()));
        };
        let m = transform.matrix();
        let lift = |x: [HyperDual64; 4], part: fn(&HyperDual64) -> f64| m * Vector4::new(part(&x[0]), part(&x[1]), part(&x[2]), part(&x[3]));
        let a = surface.eval_local(hd(u, 1.0, 1.0), hd(v, 0.0, 0.0));
        let b = surface.eval_local(hd(u, 1.0, 0.0), hd(v, 0.0, 1.0));
        let c = surface.eval_local(hd(u, 0.0, 0.0), hd(v, 1.0, 1.0));
        Ok(Jets {
            x: lift(b, |d| d.re),
            xu: lift(b, |d| d.eps1),
            xv: lift(b, |d| d.eps2),
            xuu: lift(a, |d| d.eps1eps2),
            xuv: lift(b, |d| d.eps1eps2),
            xvv: lift(c, |d| d.eps1eps2),
        })
    }

    /// Jets at a node: exact for analytic patches, centered differences otherwise.
    pub fn jets(&self, i: usize, j: usize) -> Option<Jets> {
        match &self.source {
            PatchSource::Analytic { .. } => {
                let (u, v) = self.param(i, j);
                self.jets_at(u, v).ok()
            }
            PatchSource::Sampled(p) => {
                if i == 0 || j == 0 || i + 1 >= self.nu || j + 1 >= self.nv {
                    return None;
                }
                let at = |a: usize, b: usize| p[self.index(a, b)];
                let (hu, hv) = (self.hu(), self.hv());
                let x = at(i, j);
                Some(Jets {
                    x,
                    xu: (at(i + 1, j) - at(i - 1, j)) / (2.0 * hu),
                    xv: (at(i, j + 1) - at(i, j - 1)) / (2.0 * hv),
                    xuu: (at(i + 1, j) - x * 2.0 + at(i - 1, j)) / (hu * hu),
                    xvv: (at(i, j + 1) - x * 2.0 + at(i, j - 1)) / (hv * hv),
                    xuv: (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * hu * hv),
                })
            }
        }
    }

    /// Exterior unit normal from jets, if the immersion is regular there.
    pub fn normal(&self, jets: &Jets) -> Option<Vector4<f64>> {
        let n = mink_cross(&jets.x, &jets.xu, &jets.xv);
        let q = mink(&n, &n);
        (q > 1e-20 && q.is_finite()).then(|| n * (self.orientation / q.sqrt()))
    }

    fn orient_convex(&mut self) {
        let (i, j) = (self.nu / 2, self.nv / 2);
        let Some(jt) = self.jets(i, j) else { return };
        let Some(n) = self.normal(&jt) else { return };
        let (e, f, g) = (mink(&jt.xu, &jt.xu), mink(&jt.xu, &jt.xv), mink(&jt.xv, &jt.xv));
        let (l, m, nn) = (-mink(&n, &jt.xuu), -mink(&n, &jt.xuv), -mink(&n, &jt.xvv));
        // Trace of I⁻¹ II up to the positive factor det I.
        let tr = g * l - 2.0 * f * m + e * nn;
        if tr < -1e-12 {
            self.orientation = -self.orientation;
        }
    }

    /// Normal offset `cosh(t) X + sinh(t) n` at arbitrary parameters of an analytic patch.
    pub fn offset_point(&self, u: f64, v: f64, t: f64) -> Result<Vector4<f64>> {
        let jt = self.jets_at(u, v)?;
        let n = self.normal(&jt).ok_or_else(|| Error::Degenerate("singular immersion".into()))?;
        Ok(jt.x * t.cosh() + n * t.sinh())
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive, got {x}")))
    }
}

fn check_grid(u: (f64, f64), v: (f64, f64), nu: usize, nv: usize) -> Result<()> {
    if nu < 5 || nv < 5 {
        return Err(Error::InvalidArgument(format!("patch grid {nu}x{nv} below 5x5")));
    }
    if !(u.1 > u.0 && v.1 > v.0 && u.0.is_finite() && u.1.is_finite() && v.0.is_finite() && v.1.is_finite()) {
        return Err(Error::InvalidArgument("parameter rectangle must have positive area".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_are_on_the_hyperboloid_at_distance_r() {
        let p = SurfacePatch::sphere(0.7, 9).unwrap();
        for j in 0..p.nv {
            for i in 0..p.nu {
                let x = p.sample_point(i, j);
                assert!((mink(&x, &x) + 1.0).abs() < 1e-12);
                assert!((x[0] - 0.7f64.cosh()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_jets_match_differences() {
        let p = SurfacePatch::perturbed_sphere(1.0, 0.05, 9).unwrap();
        let (u, v, h) = (0.8, 1.3, 1e-5);
        let jt = p.jets_at(u, v).unwrap();
        let f = |a: f64, b: f64| p.point_at(a, b).unwrap();
        let xu = (f(u + h, v) - f(u - h, v)) / (2.0 * h);
        let xvv = (f(u, v + h) - f(u, v) * 2.0 + f(u, v - h)) / (h * h);
        let xuv = (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4.0 * h * h);
        assert!((xu - jt.xu).norm() < 1e-8);
        assert!((xvv - jt.xvv).norm() < 1e-4);
        assert!((xuv - jt.xuv).norm() < 1e-4);
    }

    #[test]
    fn sphere_normal_points_outward() {
        let p = SurfacePatch::sphere(1.0, 9).unwrap();
        let jt = p.jets_at(1.0, 0.5).unwrap();
        let n = p.normal(&jt).unwrap();
        // Outward means the distance to the origin grows along n: d/dt cosh(dist) = -<origin, n> > 0.
        assert!(n[0] > 0.0);
    }
}
