use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector4;
use serde::Serialize;

use super::profile::{derivative, ProfileMetric};
use crate::error::{Error, Result};
use crate::hyp::{HIsometry, HPoint};
use crate::surfaces::{fundamental_forms, AnalyticSurface, Scalar, SurfacePatch};

/// Largest tolerated `|r'² + cosh²r · z'² - 1|` at the knots.
pub const ISOMETRY_TOLERANCE: f64 = 1e-8;

/// Relative slack in `f'² ≤ 1 + f²` under which a knot is reported as a planar contact.
pub const PLANAR_CONTACT_SLACK: f64 = 1e-9;

/// Surface of revolution around a geodesic, in Fermi coordinates `(r, z)` along the axis.
///
/// The profile curve is stored at the knots with two derivatives and interpolated by quintic Hermite
/// polynomials in arclength `s`.
#[derive(Debug, Clone, Serialize)]
pub struct RevolutionSurface {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub dr: Vec<f64>,
    pub ddr: Vec<f64>,
    pub z: Vec<f64>,
    pub dz: Vec<f64>,
    pub ddz: Vec<f64>,
    pub planar_contact: Vec<bool>,
    pub isometry_residual: f64,
}

fn z_rate(f: f64, d: f64) -> f64 {
    let q = 1.0 + f * f;
    let slack = q - d * d;
    // Below roundoff the profile is tangent to a totally geodesic plane.
    if slack <= 1e-12 * q {
        return 0.0;
    }
    slack.sqrt() / q
}

/// Builds the Fermi profile `r = asinh f`, `z = ∫ √(1 + f² - f'²) / (1 + f²)` realizing the metric.
pub fn realize(profile: &ProfileMetric) -> Result<RevolutionSurface> {
    profile.validate()?;
    let n = profile.len();
    let h = profile.step();
    let (f, d) = (&profile.f, &profile.fprime);
    let dd = profile.fsecond();
    let mut r = Vec::with_capacity(n);
    let mut dr = Vec::with_capacity(n);
    let mut ddr = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    for k in 0..n {
        let q = 1.0 + f[k] * f[k];
        let sq = q.sqrt();
        r.push(f[k].asinh());
        dr.push(d[k] / sq);
        ddr.push(dd[k] / sq - f[k] * d[k] * d[k] / (q * sq));
        dz.push(z_rate(f[k], d[k]));
    }
    let mut z = vec![0.0; n];
    let mids = profile.midpoints();
    for k in 0..n - 1 {
        let (fm, dm) = mids[k];
        // A segment between two planar contacts stays in the plane.
        let mid = if dz[k] == 0.0 && dz[k + 1] == 0.0 { 0.0 } else { z_rate(fm, dm) };
        z[k + 1] = z[k] + h / 6.0 * (dz[k] + 4.0 * mid + dz[k + 1]);
    }
    let ddz = derivative(&dz, h);
    let planar_contact = (0..n).map(|k| profile.slack(k) <= PLANAR_CONTACT_SLACK * (1.0 + f[k] * f[k])).collect();
    let isometry_residual = (0..n)
        .map(|k| (dr[k] * dr[k] + r[k].cosh().powi(2) * dz[k] * dz[k] - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(RevolutionSurface { s: profile.rho.clone(), r, dr, ddr, z, dz, ddz, planar_contact, isometry_residual })
}

fn hermite<D: Scalar>(t: D, h: f64, a: [f64; 3], b: [f64; 3]) -> D {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h00 = t3 * (-10.0) + t4 * 15.0 - t5 * 6.0 + 1.0;
    let h10 = t - t3 * 6.0 + t4 * 8.0 - t5 * 3.0;
    let h20 = (t2 - t3 * 3.0 + t4 * 3.0 - t5) * 0.5;
    let h01 = t3 * 10.0 - t4 * 15.0 + t5 * 6.0;
    let h11 = t3 * (-4.0) + t4 * 7.0 - t5 * 3.0;
    let h21 = (t3 - t4 * 2.0 + t5) * 0.5;
    h00 * a[0] + h10 * (a[1] * h) + h20 * (a[2] * h * h) + h01 * b[0] + h11 * (b[1] * h) + h21 * (b[2] * h * h)
}

impl RevolutionSurface {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.s[self.len() - 1] - self.s[0]) / (self.len() - 1) as f64
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.s[0], self.s[self.len() - 1])
    }

    /// Fermi coordinates `(r, z)` at arclength `s`.
    pub fn fermi<D: Scalar>(&self, s: D) -> (D, D) {
        let h = self.step();
        let k = (((s.re() - self.s[0]) / h).floor().max(0.0) as usize).min(self.len() - 2);
        let t = (s - self.s[k]) / h;
        let r = hermite(t, h, [self.r[k], self.dr[k], self.ddr[k]], [self.r[k + 1], self.dr[k + 1], self.ddr[k + 1]]);
        let z = hermite(t, h, [self.z[k], self.dz[k], self.ddz[k]], [self.z[k + 1], self.dz[k + 1], self.ddz[k + 1]]);
        (r, z)
    }

    /// `cosh r (cosh z, 0, 0, sinh z) + sinh r (0, cos θ, sin θ, 0)`.
    pub fn eval<D: Scalar>(&self, s: D, theta: D) -> [D; 4] {
        let (r, z) = self.fermi(s);
        let (cr, sr) = (r.cosh(), r.sinh());
        [cr * z.cosh(), sr * theta.cos(), sr * theta.sin(), cr * z.sinh()]
    }

    /// Analytic patch over `[s₀, s₁] × [0, 2π]` with one `s`-node per knot.
    pub fn patch(self: &Arc<Self>, n_theta: usize) -> Result<SurfacePatch> {
        self.patch_transformed(n_theta, HIsometry::identity())
    }

    /// As [`RevolutionSurface::patch`], moved by an isometry.
    pub fn patch_transformed(self: &Arc<Self>, n_theta: usize, transform: HIsometry) -> Result<SurfacePatch> {
        let surface = AnalyticSurface::Revolution(self.clone());
        SurfacePatch::analytic_transformed(surface, transform, self.s_range(), (0.0, 2.0 * PI), self.len(), n_theta)
    }

    /// The point at signed distance `z` along the axis of revolution.
    pub fn axis_point(z: f64) -> HPoint {
        HPoint::normalize(Vector4::new(z.cosh(), 0.0, 0.0, z.sinh())).expect("on the hyperboloid")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub samples: usize,
    /// Sup over interval midpoints of `max(|E - 1|, |F|, |√G - f|)`.
    pub sup: f64,
    /// Root mean square of the same residual.
    pub l2: f64,
}

/// Compares the induced metric of the realization with the profile metric between knots.
pub fn round_trip_check(profile: &ProfileMetric, surface: &Arc<RevolutionSurface>) -> Result<RoundTripReport> {
    if profile.len() != surface.len() {
        return Err(Error::InvalidArgument("profile and surface have different knots".into()));
    }
    let patch = surface.patch(5)?;
    let h = profile.step();
    let thetas = [0.3, 1.9, 4.0];
    let mut res = Vec::with_capacity(thetas.len() * (profile.len() - 1));
    let mids = profile.midpoints();
    for k in 0..profile.len() - 1 {
        let (fm, _) = mids[k];
        let s = profile.rho[k] + 0.5 * h;
        for &th in &thetas {
            let j = patch.jets_at(s, th)?;
            let e = crate::hyp::mink(&j.xu, &j.xu);
            let f = crate::hyp::mink(&j.xu, &j.xv);
            let g = crate::hyp::mink(&j.xv, &j.xv);
            res.push((e - 1.0).abs().max(f.abs()).max((g.max(0.0).sqrt() - fm).abs()));
        }
    }
    let sup = res.iter().copied().fold(0.0, f64::max);
    let l2 = (res.iter().map(|x| x * x).sum::<f64>() / res.len() as f64).sqrt();
    Ok(RoundTripReport { samples: res.len(), sup, l2 })
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub coarse: RoundTripReport,
    pub fine: RoundTripReport,
    pub order_sup: f64,
    pub order_l2: f64,
}

/// Round trip at `n` and `2n - 1` knots; the observed convergence orders are `log₂` of the residual ratios.
pub fn round_trip_refinement(build: impl Fn(usize) -> Result<ProfileMetric>, n: usize) -> Result<RefinementReport> {
    let run = |m: usize| -> Result<RoundTripReport> {
        let p = build(m)?;
        let s = Arc::new(realize(&p)?);
        round_trip_check(&p, &s)
    };
    let coarse = run(n)?;
    let fine = run(2 * n - 1)?;
    Ok(RefinementReport {
        order_sup: (coarse.sup / fine.sup).log2(),
        order_l2: (coarse.l2 / fine.l2).log2(),
        coarse,
        fine,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum SurfaceClass {
    Sphere { radius: f64 },
    Horosphere,
    Equidistant { distance: f64 },
    Plane,
    Generic,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub class: SurfaceClass,
    pub samples: usize,
    pub kappa_mean: f64,
    /// `max κ - min κ` over all valid samples and both principal directions.
    pub kappa_spread: f64,
}

/// Recognizes the totally umbilic surfaces by their constant principal curvature.
pub fn classify(surface: &Arc<RevolutionSurface>, tol: f64) -> Result<Classification> {
    let forms = fundamental_forms(&surface.patch(8)?);
    let ks: Vec<f64> = forms.samples.iter().flatten().flat_map(|s| s.kappa).collect();
    if ks.is_empty() {
        return Err(Error::Degenerate("no regular samples on the surface".into()));
    }
    let lo = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = ks.iter().sum::<f64>() / ks.len() as f64;
    let class = if hi - lo > tol {
        SurfaceClass::Generic
    } else if k.abs() <= tol {
        SurfaceClass::Plane
    } else if (k - 1.0).abs() <= tol {
        SurfaceClass::Horosphere
    } else if k > 1.0 {
        SurfaceClass::Sphere { radius: (1.0 / k).atanh() }
    } else if k > 0.0 {
        SurfaceClass::Equidistant { distance: k.atanh() }
    } else {
        SurfaceClass::Generic
    };
    Ok(Classification { class, samples: forms.valid().count(), kappa_mean: k, kappa_spread: hi - lo })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    /// Knots where the profile curvature lies in `[-1, 0]` and `f'² < 1 + f²`.
    pub monitored: usize,
    /// Arclengths of monitored knots with a principal curvature below `-tol`.
    pub violations: Vec<f64>,
    pub min_kappa: f64,
}

/// Checks local convexity of the realization wherever the profile metric has curvature in `[-1, 0]`.
pub fn convexity_monitor(profile: &ProfileMetric, surface: &Arc<RevolutionSurface>, tol: f64) -> Result<ConvexityReport> {
    let forms = fundamental_forms(&surface.patch(8)?);
    let curv = profile.curvature();
    let mut monitored = 0;
    let mut violations = Vec::new();
    let mut min_kappa = f64::INFINITY;
    for i in 0..forms.nu {
        let Some(k) = curv[i] else { continue };
        if !(-1.0 - 1e-9..=1e-9).contains(&k) || surface.planar_contact[i] {
            continue;
        }
        let row: Vec<f64> = (0..forms.nv).filter_map(|j| forms.get(i, j)).map(|s| s.kappa[1]).collect();
        if row.is_empty() {
            continue;
        }
        monitored += 1;
        let m = row.iter().copied().fold(f64::INFINITY, f64::min);
        min_kappa = min_kappa.min(m);
        if m < -tol {
            violations.push(profile.rho[i]);
        }
    }
    Ok(ConvexityReport { monitored, violations, min_kappa })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_hermite_reproduces_quintics() {
        let p = |x: f64| 1.0 + x - 2.0 * x.powi(3) + 0.5 * x.powi(5);
        let dp = |x: f64| 1.0 - 6.0 * x * x + 2.5 * x.powi(4);
        let ddp = |x: f64| -12.0 * x + 10.0 * x.powi(3);
        let (a, h) = (0.3, 0.7);
        for t in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let v: f64 = hermite(t, h, [p(a), dp(a), ddp(a)], [p(a + h), dp(a + h), ddp(a + h)]);
            assert!((v - p(a + t * h)).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_realizes_with_constant_axis_position() {
        let p = ProfileMetric::plane(1.5, 31).unwrap();
        let s = realize(&p).unwrap();
        assert!(s.isometry_residual < 1e-12);
        assert!(s.z.iter().all(|z| z.abs() < 1e-12));
        assert!(s.planar_contact.iter().all(|&c| c));
    }

    #[test]
    fn sphere_profile_is_recognized() {
        let p = ProfileMetric::sphere(1.0, 201).unwrap();
        let s = Arc::new(realize(&p).unwrap());
        let c = classify(&s, 1e-4).unwrap();
        match c.class {
            SurfaceClass::Sphere { radius } => assert!((radius - 1.0).abs() < 1e-4, "{radius}"),
            other => panic!("{other:?} {c:?}"),
        }
    }
}
