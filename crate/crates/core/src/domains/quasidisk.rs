use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cap::SphericalCap;
use crate::conformal::ConformalDomain;
use crate::error::{Error, Result};
use crate::hyp::ChartKind;
use crate::optim::{golden_section, nelder_mead};

/// Number of boundary samples used by the clearance oracle.
pub const BOUNDARY_SAMPLES: usize = 1024;
/// Near-minimal boundary samples refined per clearance query; a round disk ties them all.
const MAX_REFINED_CONTACTS: usize = 12;

/// Injective holomorphic map from the unit disk into a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConformalMap {
    /// `f(z) = Σ a_k z^k`.
    PowerSeries { coefficients: Vec<Complex64> },
    /// `f(z) = (a z + b) / (c z + d)`; the image is a round disk or half-plane of the chart.
    Mobius { a: Complex64, b: Complex64, c: Complex64, d: Complex64 },
}

impl ConformalMap {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            ConformalMap::PowerSeries { coefficients } => {
                coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a)
            }
            ConformalMap::Mobius { a, b, c, d } => (a * z + b) / (c * z + d),
        }
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        match self {
            ConformalMap::PowerSeries { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, a)| acc * z + a * k as f64),
            ConformalMap::Mobius { a, b, c, d } => {
                let q = c * z + d;
                (a * d - b * c) / (q * q)
            }
        }
    }

    /// Boundary point `f(e^{iθ})` on the sphere, well defined when the image passes through the chart's infinity.
    fn boundary_sphere(&self, kind: ChartKind, theta: f64) -> Vector3<f64> {
        let z = Complex64::from_polar(1.0, theta);
        match self {
            ConformalMap::Mobius { a, b, c, d } => {
                let num = a * z + b;
                let den = c * z + d;
                if den.norm() <= 1e-9 * num.norm() {
                    sphere_point_recip(kind, den / num)
                } else {
                    sphere_point(kind, num / den)
                }
            }
            ConformalMap::PowerSeries { .. } => sphere_point(kind, self.eval(z)),
        }
    }
}

fn other(kind: ChartKind) -> ChartKind {
    match kind {
        ChartKind::North => ChartKind::South,
        ChartKind::South => ChartKind::North,
    }
}

/// Sphere point of a chart coordinate, switching charts for large values.
pub(crate) fn sphere_point(kind: ChartKind, w: Complex64) -> Vector3<f64> {
    if w.norm() > 1.0 {
        sphere_point_recip(kind, w.inv())
    } else {
        kind.to_sphere(w)
    }
}

/// Sphere point whose coordinate in `kind` is `1 / r`.
fn sphere_point_recip(kind: ChartKind, r: Complex64) -> Vector3<f64> {
    other(kind).to_sphere(r)
}

/// A simply connected domain of the sphere, the image of the unit disk under `map` in the chart `chart`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasidiskDomain {
    pub map: ConformalMap,
    pub chart: ChartKind,
    /// Declared quasiconformal constant, for reporting only.
    pub qc_constant_hint: f64,
    #[serde(skip)]
    boundary: Vec<Vector3<f64>>,
}

/// A round disk inside the domain, maximal for inclusion.
#[derive(Debug, Clone, Serialize)]
pub struct MaximalDisk {
    pub center_chart: Complex64,
    pub center: [f64; 3],
    pub spherical_radius: f64,
    pub tangency_count: usize,
    /// Every boundary sample is within `1e-5` of the rim.
    pub saturated: bool,
    pub tangency_points: Vec<[f64; 3]>,
}

impl MaximalDisk {
    pub fn cap(&self) -> SphericalCap {
        SphericalCap::new(Vector3::from(self.center), self.spherical_radius).expect("valid cap")
    }
}

impl QuasidiskDomain {
    pub fn new(map: ConformalMap, chart: ChartKind, qc_constant_hint: f64) -> Result<Self> {
        if !(qc_constant_hint >= 1.0) {
            return Err(Error::InvalidArgument(format!("quasiconformal constant {qc_constant_hint} < 1")));
        }
        match &map {
            ConformalMap::PowerSeries { coefficients } => {
                if coefficients.len() < 2 || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument("power series needs finite coefficients up to degree >= 1".into()));
                }
            }
            ConformalMap::Mobius { a, b, c, d } => {
                if (a * d - b * c).norm() < 1e-14 {
                    return Err(Error::Degenerate("Möbius map has zero determinant".into()));
                }
                if c.norm() > 0.0 && (d / c).norm() < 1.0 {
                    return Err(Error::InvalidArgument("Möbius pole inside the unit disk".into()));
                }
            }
        }
        let mut dom = QuasidiskDomain { map, chart, qc_constant_hint, boundary: Vec::new() };
        dom.check_injective()?;
        dom.boundary = (0..BOUNDARY_SAMPLES).map(|k| dom.boundary_point(dom.theta(k))).collect();
        Ok(dom)
    }

    /// Rebuilds cached boundary samples after deserialization.
    pub fn validated(self) -> Result<Self> {
        QuasidiskDomain::new(self.map, self.chart, self.qc_constant_hint)
    }

    /// Chart disk `|z| < r` in the north chart.
    pub fn round_disk(r: f64) -> Result<Self> {
        let coefficients = vec![Complex64::new(0.0, 0.0), Complex64::new(r, 0.0)];
        QuasidiskDomain::new(ConformalMap::PowerSeries { coefficients }, ChartKind::North, 1.0)
    }

    /// Half-plane `Re w < 1/(2 scale)`, the image of `z / (scale (1 + z))`.
    pub fn half_plane(scale: f64) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        let s = Complex64::new(scale, 0.0);
        QuasidiskDomain::new(
            ConformalMap::Mobius { a: one, b: Complex64::new(0.0, 0.0), c: s, d: s },
            ChartKind::North,
            1.0,
        )
    }

    fn theta(&self, k: usize) -> f64 {
        std::f64::consts::TAU * k as f64 / BOUNDARY_SAMPLES as f64
    }

    fn check_injective(&self) -> Result<()> {
        let n = 64;
        let mut pts: Vec<(Complex64, Complex64)> = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let z = Complex64::new(2.0 * (i as f64 + 0.5) / n as f64 - 1.0, 2.0 * (j as f64 + 0.5) / n as f64 - 1.0);
                if z.norm() >= 1.0 {
                    continue;
                }
                let w = self.map.eval(z);
                let dw = self.map.derivative(z);
                if !w.is_finite() || !dw.is_finite() {
                    return Err(Error::Degenerate(format!("map not finite at {z}")));
                }
                if dw.norm() < 1e-12 {
                    return Err(Error::Degenerate(format!("derivative vanishes near {z}")));
                }
                pts.push((w, z));
            }
        }
        pts.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
        for k in 0..pts.len() {
            for m in k + 1..pts.len() {
                if pts[m].0.re - pts[k].0.re > 1e-9 {
                    break;
                }
                if (pts[m].0 - pts[k].0).norm() < 1e-9 {
                    return Err(Error::Degenerate(format!("map not injective: {} and {} collide", pts[k].1, pts[m].1)));
                }
            }
        }
        Ok(())
    }

    pub fn boundary_point(&self, theta: f64) -> Vector3<f64> {
        self.map.boundary_sphere(self.chart, theta)
    }

    pub fn boundary_samples(&self) -> &[Vector3<f64>] {
        &self.boundary
    }

    /// Coordinate of a chart point in the domain's own chart.
    pub fn to_domain_chart(&self, kind: ChartKind, z: Complex64) -> Complex64 {
        if kind == self.chart {
            z
        } else {
            z.inv()
        }
    }

    /// Preimage in the unit disk by Newton iteration (closed form for Möbius maps).
    pub fn invert(&self, w: Complex64) -> Result<Complex64> {
        let outside = || Error::OutsideDomain([w.re, w.im]);
        if !w.is_finite() {
            return Err(outside());
        }
        match &self.map {
            ConformalMap::Mobius { a, b, c, d } => {
                let z = (d * w - b) / (a - c * w);
                if z.is_finite() && z.norm() < 1.0 {
                    Ok(z)
                } else {
                    Err(outside())
                }
            }
            ConformalMap::PowerSeries { .. } => {
                let mut seeds: Vec<(f64, Complex64)> = Vec::new();
                for a in 0..24 {
                    let r = (a as f64 + 0.5) / 24.0;
                    for b in 0..48 {
                        let z = Complex64::from_polar(r, std::f64::consts::TAU * b as f64 / 48.0);
                        seeds.push(((self.map.eval(z) - w).norm(), z));
                    }
                }
                seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
                let tol = 1e-13 * (1.0 + w.norm());
                for &(_, z0) in seeds.iter().take(6) {
                    let mut z = z0;
                    for _ in 0..100 {
                        let r = self.map.eval(z) - w;
                        if r.norm() <= tol {
                            break;
                        }
                        let mut step = r / self.map.derivative(z);
                        if step.norm() > 0.25 {
                            step *= 0.25 / step.norm();
                        }
                        z -= step;
                    }
                    if (self.map.eval(z) - w).norm() <= tol * 10.0 {
                        return if z.norm() < 1.0 { Ok(z) } else { Err(outside()) };
                    }
                }
                Err(outside())
            }
        }
    }

    pub fn contains(&self, kind: ChartKind, z: Complex64) -> bool {
        self.invert(self.to_domain_chart(kind, z)).is_ok()
    }

    /// Log-density against `c₁` of the pushforward of `2|dz|/(1-|z|²)`.
    pub fn hyperbolic_metric(&self, kind: ChartKind, xi: Complex64) -> Result<f64> {
        let w = self.to_domain_chart(kind, xi);
        let z = self.invert(w)?;
        let dens = 2.0 / ((1.0 - z.norm_sqr()) * self.map.derivative(z).norm());
        Ok(dens.ln() - ChartKind::round_log_density(w))
    }

    /// Smallest angle from `v` to the boundary, with the contact points of near-minimal samples refined.
    ///
    /// Returns the refined clearance and every refined local minimum within `1e-7` of it.
    pub fn clearance(&self, v: &Vector3<f64>) -> (f64, Vec<Vector3<f64>>) {
        let m = self.boundary.len();
        let ang = |b: &Vector3<f64>| v.cross(b).norm().atan2(v.dot(b));
        let a: Vec<f64> = self.boundary.iter().map(ang).collect();
        let min = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let spacing = (0..m).map(|k| ang_between(&self.boundary[k], &self.boundary[(k + 1) % m])).fold(0.0, f64::max);
        let h = std::f64::consts::TAU / m as f64;
        let mut candidates: Vec<usize> = (0..m)
            .filter(|&k| a[k] <= a[(k + m - 1) % m] && a[k] <= a[(k + 1) % m] && a[k] <= min + 2.0 * spacing)
            .collect();
        candidates.sort_by(|&x, &y| a[x].total_cmp(&a[y]));
        candidates.truncate(MAX_REFINED_CONTACTS);
        let mut refined: Vec<(f64, Vector3<f64>)> = Vec::new();
        for k in candidates {
            let t0 = self.theta(k);
            let (t, val) = golden_section(|t| ang(&self.boundary_point(t)), t0 - h, t0 + h, 1e-13);
            refined.push((val.min(a[k]), if val <= a[k] { self.boundary_point(t) } else { self.boundary[k] }));
        }
        let best = refined.iter().map(|r| r.0).fold(min, f64::min);
        let mut contacts: Vec<Vector3<f64>> = Vec::new();
        for (val, p) in refined {
            if val <= best + 1e-7 && contacts.iter().all(|q| (q - p).norm() > 1e-6) {
                contacts.push(p);
            }
        }
        (best, contacts)
    }

    fn checked_point(&self, kind: ChartKind, xi: Complex64) -> Result<Vector3<f64>> {
        let w = self.to_domain_chart(kind, xi);
        self.invert(w)?;
        let v = sphere_point(self.chart, w);
        let (clear, _) = self.clearance(&v);
        if clear < 1e-6 {
            return Err(Error::IllConditioned(format!("point {xi} within {clear:e} of the boundary")));
        }
        Ok(v)
    }

    fn disk_report(&self, center: Vector3<f64>, radius: f64, contacts: Vec<Vector3<f64>>) -> MaximalDisk {
        let ang = |b: &Vector3<f64>| center.cross(b).norm().atan2(center.dot(b));
        let near = self.boundary.iter().filter(|b| ang(b) - radius < 1e-5).count();
        let saturated = near == self.boundary.len();
        MaximalDisk {
            center_chart: self.chart.from_sphere(&center),
            center: [center.x, center.y, center.z],
            spherical_radius: radius,
            tangency_count: if saturated { near } else { contacts.len().max(1) },
            saturated,
            tangency_points: contacts.iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }

    /// The largest round disk centered at `ξ`; it touches the boundary at its nearest points.
    pub fn largest_centered_disk(&self, kind: ChartKind, xi: Complex64) -> Result<MaximalDisk> {
        let v = self.checked_point(kind, xi)?;
        let (r, contacts) = self.clearance(&v);
        Ok(self.disk_report(v, r, contacts))
    }

    /// The maximal disk through `ξ` with the smallest hyperbolic density at `ξ`.
    ///
    /// For a fixed center the density decreases with the radius, so each
    /// center uses its full clearance; the center is then optimized.
    pub fn maximal_disk(&self, kind: ChartKind, xi: Complex64) -> Result<MaximalDisk> {
        let v = self.checked_point(kind, xi)?;
        let (r0, _) = self.clearance(&v);
        let a = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = (a - v * a.dot(&v)).normalize();
        let e2 = v.cross(&e1);
        let center = |p: &[f64]| {
            let t = p[0].hypot(p[1]);
            if t < 1e-300 {
                v
            } else {
                v * t.cos() + (e1 * p[0] + e2 * p[1]) * (t.sin() / t)
            }
        };
        let fast_clear = |c: &Vector3<f64>| {
            self.boundary.iter().map(|b| c.dot(b)).fold(f64::NEG_INFINITY, f64::max).clamp(-1.0, 1.0).acos()
        };
        let objective = |p: &[f64], clear: &dyn Fn(&Vector3<f64>) -> f64| {
            let c = center(p);
            let r = clear(&c);
            let d = c.cross(&v).norm().atan2(c.dot(&v));
            if d >= r {
                return 1e3 + d - r;
            }
            let s = 2.0 * (0.5 * (r + d)).sin() * (0.5 * (r - d)).sin() / r.sin();
            -s.ln()
        };
        let coarse = |p: &[f64]| objective(p, &fast_clear);
        let mut best = (vec![0.0, 0.0], coarse(&[0.0, 0.0]));
        for k in 0..6 {
            let ang = std::f64::consts::PI * k as f64 / 3.0;
            let start = [0.5 * r0 * ang.cos(), 0.5 * r0 * ang.sin()];
            let cand = nelder_mead(&coarse, &start, 0.25 * r0, 1e-7, 1e-12, 600);
            if cand.1 < best.1 {
                best = cand;
            }
        }
        let refined_clear = |c: &Vector3<f64>| self.clearance(c).0;
        let fine = |p: &[f64]| objective(p, &refined_clear);
        let mut val = fine(&best.0);
        let mut step = 0.05 * r0;
        for _ in 0..2 {
            let cand = nelder_mead(&fine, &best.0, step, 1e-9, 1e-14, 300);
            if cand.1 < val {
                best.0 = cand.0;
                val = cand.1;
            }
            step *= 0.1;
        }
        let c = center(&best.0);
        let (r, contacts) = self.clearance(&c);
        Ok(self.disk_report(c, r, contacts))
    }

    /// Log-density against `c₁` of the Poincaré metric of the optimal maximal disk at `ξ`.
    pub fn thurston_metric(&self, kind: ChartKind, xi: Complex64) -> Result<f64> {
        let disk = self.maximal_disk(kind, xi)?;
        let v = sphere_point(kind, xi);
        let centered = self.largest_centered_disk(kind, xi)?;
        let via = |d: &MaximalDisk| d.cap().hyperbolic_log_density(&v);
        let a = via(&disk)?;
        // The centered disk is always admissible, so the result can only improve on it.
        Ok(a.min(via(&centered)?))
    }
}

fn ang_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

impl ConformalDomain for QuasidiskDomain {
    fn hyperbolic_log_density(&self, kind: ChartKind, z: Complex64) -> Result<f64> {
        self.hyperbolic_metric(kind, z)
    }

    fn thurston_log_density(&self, kind: ChartKind, z: Complex64) -> Result<f64> {
        self.thurston_metric(kind, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_disk_center_density() {
        let d = QuasidiskDomain::round_disk(1.0).unwrap();
        let z0 = Complex64::new(0.0, 0.0);
        let got = d.hyperbolic_metric(ChartKind::North, z0).unwrap();
        assert!((got - (2.0f64.ln() - 2.0f64.ln())).abs() < 1e-14);
        let r = 0.5;
        let d = QuasidiskDomain::round_disk(r).unwrap();
        let got = d.hyperbolic_metric(ChartKind::North, z0).unwrap();
        assert!((got - ((2.0 / r).ln() - 2.0f64.ln())).abs() < 1e-13);
    }

    #[test]
    fn outside_points_are_rejected() {
        let d = QuasidiskDomain::round_disk(0.5).unwrap();
        assert!(matches!(d.hyperbolic_metric(ChartKind::North, Complex64::new(0.7, 0.0)), Err(Error::OutsideDomain(_))));
        let h = QuasidiskDomain::half_plane(1.0).unwrap();
        assert!(h.contains(ChartKind::North, Complex64::new(0.0, 5.0)));
        assert!(!h.contains(ChartKind::North, Complex64::new(0.6, 0.0)));
    }

    #[test]
    fn noninjective_maps_are_rejected() {
        let coefficients = vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(QuasidiskDomain::new(ConformalMap::PowerSeries { coefficients }, ChartKind::North, 1.0).is_err());
    }

    #[test]
    fn newton_inversion_round_trips() {
        let coefficients = vec![Complex64::new(0.1, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.1)];
        let d = QuasidiskDomain::new(ConformalMap::PowerSeries { coefficients }, ChartKind::North, 1.5).unwrap();
        let z = Complex64::new(0.3, -0.6);
        let back = d.invert(d.map.eval(z)).unwrap();
        assert!((back - z).norm() < 1e-12);
    }

    #[test]
    fn round_disk_thurston_equals_hyperbolic() {
        let d = QuasidiskDomain::round_disk(0.8).unwrap();
        for z in [Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.4)] {
            let h = d.hyperbolic_metric(ChartKind::North, z).unwrap();
            let t = d.thurston_metric(ChartKind::North, z).unwrap();
            assert!((h - t).abs() < 1e-6, "{z}: {h} vs {t}");
        }
        let center = d.maximal_disk(ChartKind::North, Complex64::new(0.0, 0.0)).unwrap();
        assert!(center.saturated);
        let off = d.largest_centered_disk(ChartKind::North, Complex64::new(0.3, 0.0)).unwrap();
        assert_eq!(off.tangency_count, 1);
    }
}
