//! Hyperbolic 3-space in the hyperboloid model.
//!
//! Points live on the upper sheet of `<x,x> = -1` in Minkowski space with
//! signature `(-,+,+,+)`; the time coordinate is index 0. The Poincaré and
//! Klein balls are views computed on demand. Ideal points are unit vectors of
//! the sphere at infinity, seen from the origin.

use nalgebra::{Matrix4, Rotation3, Unit, Vector3, Vector4};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for geometric checks.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Minkowski form diag(-1, 1, 1, 1).
pub fn j() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

/// Minkowski inner product `-a0 b0 + a1 b1 + a2 b2 + a3 b3`.
#[inline]
pub fn mink(a: &Vector4<f64>, b: &Vector4<f64>) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Minkowski-orthogonal complement of three vectors (generalized cross product).
///
/// The result `n` satisfies `<n, a> = <n, b> = <n, c> = 0`.
pub fn mink_cross(a: &Vector4<f64>, b: &Vector4<f64>, c: &Vector4<f64>) -> Vector4<f64> {
    let m = |r0: usize, r1: usize, r2: usize| -> f64 {
        let (a0, a1, a2) = (a[r0], a[r1], a[r2]);
        let (b0, b1, b2) = (b[r0], b[r1], b[r2]);
        let (c0, c1, c2) = (c[r0], c[r1], c[r2]);
        a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0)
    };
    // Euclidean generalized cross product w, then raise the index with J.
    let w = Vector4::new(m(1, 2, 3), -m(0, 2, 3), m(0, 1, 3), -m(0, 1, 2));
    Vector4::new(-w[0], w[1], w[2], w[3])
}

fn check_finite4(v: &Vector4<f64>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// A point of H³ on the upper sheet of the hyperboloid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint(Vector4<f64>);

impl HPoint {
    pub fn origin() -> Self {
        HPoint(Vector4::new(1.0, 0.0, 0.0, 0.0))
    }

    /// Checked constructor; `<x,x> = -1` must hold to `1e-9` relative to `x0²`.
    pub fn new(x: Vector4<f64>) -> Result<Self> {
        Self::with_tolerance(x, 1e-9)
    }

    pub fn with_tolerance(x: Vector4<f64>, tol: f64) -> Result<Self> {
        check_finite4(&x, "hyperboloid point")?;
        let q = mink(&x, &x);
        if (q + 1.0).abs() > tol * x[0].abs().max(1.0).powi(2) || x[0] <= 0.0 {
            return Err(Error::OffHyperboloid(q));
        }
        Ok(HPoint(x))
    }

    /// Projects any future timelike vector onto the hyperboloid.
    pub fn normalize(x: Vector4<f64>) -> Result<Self> {
        check_finite4(&x, "timelike vector")?;
        let q = mink(&x, &x);
        if q >= 0.0 || x[0] <= 0.0 {
            return Err(Error::Degenerate(format!("vector is not future timelike (<x,x> = {q})")));
        }
        Ok(HPoint(x / (-q).sqrt()))
    }

    pub(crate) fn from_raw(x: Vector4<f64>) -> Self {
        HPoint(x)
    }

    pub fn coords(&self) -> &Vector4<f64> {
        &self.0
    }

    pub fn from_poincare(p: Vector3<f64>) -> Result<Self> {
        let r2 = p.norm_squared();
        if !r2.is_finite() {
            return Err(Error::NonFinite("poincare point"));
        }
        if r2 >= 1.0 {
            return Err(Error::InvalidArgument("Poincaré point outside the unit ball".into()));
        }
        let s = 1.0 / (1.0 - r2);
        Ok(HPoint(Vector4::new((1.0 + r2) * s, 2.0 * p.x * s, 2.0 * p.y * s, 2.0 * p.z * s)))
    }

    pub fn to_poincare(&self) -> Vector3<f64> {
        let x = &self.0;
        Vector3::new(x[1], x[2], x[3]) / (1.0 + x[0])
    }

    pub fn from_klein(k: Vector3<f64>) -> Result<Self> {
        let r2 = k.norm_squared();
        if !r2.is_finite() {
            return Err(Error::NonFinite("klein point"));
        }
        if r2 >= 1.0 {
            return Err(Error::InvalidArgument("Klein point outside the unit ball".into()));
        }
        let s = 1.0 / (1.0 - r2).sqrt();
        Ok(HPoint(Vector4::new(s, k.x * s, k.y * s, k.z * s)))
    }

    pub fn to_klein(&self) -> Vector3<f64> {
        let x = &self.0;
        Vector3::new(x[1], x[2], x[3]) / x[0]
    }

    /// Unit tangent vector at `self` pointing along the geodesic to `q`.
    pub fn direction_to(&self, q: &HPoint) -> Option<Vector4<f64>> {
        let w = q.0 + mink(&q.0, &self.0) * self.0;
        let n = mink(&w, &w);
        (n > 1e-300).then(|| w / n.sqrt())
    }

    /// Unit tangent vector at `self` pointing toward the ideal point `xi`.
    pub fn direction_to_ideal(&self, xi: &IdealPoint) -> Vector4<f64> {
        let l = xi.light_vector();
        let w = l + mink(&l, &self.0) * self.0;
        w / mink(&w, &w).sqrt()
    }

    /// Point at distance `t` along the unit tangent `dir`.
    pub fn exp(&self, dir: &Vector4<f64>, t: f64) -> HPoint {
        HPoint(t.cosh() * self.0 + t.sinh() * dir)
    }
}

/// Hyperbolic distance `arcosh(-<p,q>)`.
///
/// Short distances go through the chordal form `2 asinh(|p - q| / 2)`, which
/// avoids the cancellation of `arcosh` near 1; far apart points use `arcosh`
/// directly, since `<p - q, p - q>` cancels terms of size `|p|² |q|²`.
pub fn distance(p: &HPoint, q: &HPoint) -> Result<f64> {
    check_finite4(&p.0, "distance argument")?;
    check_finite4(&q.0, "distance argument")?;
    let c = -mink(&p.0, &q.0);
    if c > 2.0 {
        return Ok(c.acosh());
    }
    let d = p.0 - q.0;
    let chord = mink(&d, &d).max(0.0);
    Ok(2.0 * (chord.sqrt() / 2.0).asinh())
}

/// Stereographic charts of the sphere at infinity.
///
/// `North` projects from the north pole, `z = (v1 + i v2) / (1 - v3)`;
/// `South` projects from the south pole with the conjugate orientation so that
/// the transition map is `w = 1 / z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    North,
    South,
}

impl ChartKind {
    pub fn to_sphere(self, z: Complex64) -> Vector3<f64> {
        let r2 = z.norm_sqr();
        let s = 1.0 / (1.0 + r2);
        match self {
            ChartKind::North => Vector3::new(2.0 * z.re * s, 2.0 * z.im * s, (r2 - 1.0) * s),
            ChartKind::South => Vector3::new(2.0 * z.re * s, -2.0 * z.im * s, (1.0 - r2) * s),
        }
    }

    pub fn from_sphere(self, v: &Vector3<f64>) -> Complex64 {
        match self {
            ChartKind::North => Complex64::new(v.x, v.y) / (1.0 - v.z),
            ChartKind::South => Complex64::new(v.x, -v.y) / (1.0 + v.z),
        }
    }

    /// Log of the density of the unit round metric in this chart: `log(2 / (1 + |z|²))`.
    pub fn round_log_density(z: Complex64) -> f64 {
        (2.0 / (1.0 + z.norm_sqr())).ln()
    }
}

/// A point of the sphere at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealPoint {
    v: Vector3<f64>,
}

impl IdealPoint {
    /// Normalizes a nonzero direction.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("ideal point"));
        }
        let n = v.norm();
        if n < 1e-300 {
            return Err(Error::Degenerate("zero direction".into()));
        }
        Ok(IdealPoint { v: v / n })
    }

    pub fn from_chart(kind: ChartKind, z: Complex64) -> Self {
        IdealPoint { v: kind.to_sphere(z) }
    }

    pub fn chart_coords(&self, kind: ChartKind) -> Complex64 {
        kind.from_sphere(&self.v)
    }

    pub fn dir(&self) -> &Vector3<f64> {
        &self.v
    }

    /// Null vector `(1, v)`, normalized against the origin.
    pub fn light_vector(&self) -> Vector4<f64> {
        Vector4::new(1.0, self.v.x, self.v.y, self.v.z)
    }

    /// Projective class of a future null vector.
    pub fn from_light_vector(l: &Vector4<f64>) -> Result<Self> {
        if l[0] <= 0.0 {
            return Err(Error::Degenerate("null vector is not future pointing".into()));
        }
        IdealPoint::new(Vector3::new(l[1], l[2], l[3]))
    }

    /// Chordal distance on the unit sphere.
    pub fn chordal(&self, other: &IdealPoint) -> f64 {
        (self.v - other.v).norm()
    }

    /// Angle between the two directions (distance for the round metric).
    pub fn angle(&self, other: &IdealPoint) -> f64 {
        let c = self.v.cross(&other.v).norm();
        let d = self.v.dot(&other.v);
        c.atan2(d)
    }
}

/// An orientation-preserving isometry as a 4×4 Lorentz matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HIsometry {
    m: Matrix4<f64>,
}

impl HIsometry {
    pub fn identity() -> Self {
        HIsometry { m: Matrix4::identity() }
    }

    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        Self::with_tolerance(m, DEFAULT_TOL)
    }

    /// Checks `LᵀJL = J` and `L00 > 0` (relative to the size of `L`).
    pub fn with_tolerance(m: Matrix4<f64>, tol: f64) -> Result<Self> {
        if !m.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("isometry matrix"));
        }
        let jm = j();
        let res = (m.transpose() * jm * m - jm).abs().max();
        let scale = m.abs().max().powi(2).max(1.0);
        if res > tol * scale || m[(0, 0)] <= 0.0 {
            return Err(Error::NotIsometry(res));
        }
        Ok(HIsometry { m })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn rotation(r: &Rotation3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(r.matrix());
        HIsometry { m }
    }

    /// Pure boost with the given rapidity along a unit spatial axis.
    pub fn boost(axis: &Unit<Vector3<f64>>, rapidity: f64) -> Self {
        let (c, s) = (rapidity.cosh(), rapidity.sinh());
        let a = axis.into_inner();
        let mut m = Matrix4::identity();
        m[(0, 0)] = c;
        for i in 0..3 {
            m[(0, i + 1)] = s * a[i];
            m[(i + 1, 0)] = s * a[i];
            for k in 0..3 {
                m[(i + 1, k + 1)] += (c - 1.0) * a[i] * a[k];
            }
        }
        HIsometry { m }
    }

    /// The boost taking the origin to `p`.
    pub fn translation_to(p: &HPoint) -> Self {
        let x = p.coords();
        let spatial = Vector3::new(x[1], x[2], x[3]);
        let n = spatial.norm();
        if n < 1e-300 {
            return HIsometry::identity();
        }
        HIsometry::boost(&Unit::new_unchecked(spatial / n), x[0].acosh())
    }

    /// Random isometry: uniform rotation composed with a boost of bounded rapidity.
    pub fn random<R: Rng>(rng: &mut R, max_rapidity: f64) -> Self {
        let axis = random_unit(rng);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(axis), angle);
        let baxis = random_unit(rng);
        let rap = rng.gen_range(0.0..max_rapidity);
        HIsometry::boost(&Unit::new_unchecked(baxis), rap).compose(&HIsometry::rotation(&rot))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &HIsometry) -> Self {
        HIsometry { m: self.m * other.m }
    }

    pub fn inverse(&self) -> Self {
        let jm = j();
        HIsometry { m: jm * self.m.transpose() * jm }
    }

    pub fn apply(&self, p: &HPoint) -> HPoint {
        HPoint(self.m * p.0)
    }

    pub fn apply_vector(&self, v: &Vector4<f64>) -> Vector4<f64> {
        self.m * v
    }

    /// Boundary (Möbius) action on the sphere at infinity.
    pub fn apply_ideal(&self, xi: &IdealPoint) -> IdealPoint {
        let l = self.m * xi.light_vector();
        IdealPoint { v: Vector3::new(l[1], l[2], l[3]) / l[0] }
    }

    /// Action on a spacelike plane normal.
    pub fn apply_plane(&self, n: &Vector4<f64>) -> Vector4<f64> {
        self.m * n
    }
}

pub(crate) fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Conversions between the models; only carries the round-trip tolerance.
#[derive(Debug, Clone, Copy)]
pub struct ModelMap {
    pub tolerance: f64,
}

impl Default for ModelMap {
    fn default() -> Self {
        ModelMap { tolerance: DEFAULT_TOL }
    }
}

impl ModelMap {
    /// Hyperboloid → Poincaré → hyperboloid; returns the coordinate residual.
    pub fn poincare_round_trip(&self, p: &HPoint) -> Result<f64> {
        let back = HPoint::from_poincare(p.to_poincare())?;
        let res = (back.0 - p.0).abs().max() / p.0[0];
        if res > self.tolerance {
            return Err(Error::IllConditioned(format!("Poincaré round trip residual {res:e}")));
        }
        Ok(res)
    }

    pub fn klein_round_trip(&self, p: &HPoint) -> Result<f64> {
        let back = HPoint::from_klein(p.to_klein())?;
        let res = (back.0 - p.0).abs().max() / p.0[0];
        if res > self.tolerance {
            return Err(Error::IllConditioned(format!("Klein round trip residual {res:e}")));
        }
        Ok(res)
    }
}

/// `cosh δ - cos θ sinh δ`, written without cancellation.
fn horo_factor(theta: f64, delta: f64) -> f64 {
    let (ep, em) = (delta.exp(), (-delta).exp());
    // 1 - cos θ = 2 sin²(θ/2), 1 + cos θ = 2 cos²(θ/2)
    let s = (theta / 2.0).sin();
    let c = (theta / 2.0).cos();
    ep * s * s + em * c * c
}

/// `y = -log(cosh δ - cos θ sinh δ)`, the log-ratio of two visual metrics.
pub fn visual_log_density_closed(theta: f64, delta: f64) -> f64 {
    -horo_factor(theta, delta).ln()
}

/// The function `y` with `c_{m1} = e^{2y} c_{m0}` at the ideal point `xi`.
pub fn visual_log_density(xi: &IdealPoint, m0: &HPoint, m1: &HPoint) -> Result<f64> {
    let delta = distance(m0, m1)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let to_xi = m0.direction_to_ideal(xi);
    let theta = match m0.direction_to(m1) {
        Some(to_m1) => mink(&to_xi, &to_m1).clamp(-1.0, 1.0).acos(),
        None => return Ok(0.0),
    };
    Ok(visual_log_density_closed(theta, delta))
}

/// Derivative of `y` along the angle θ: `-sin θ / (coth δ - cos θ)`.
pub fn visual_log_density_dtheta(theta: f64, delta: f64) -> Result<f64> {
    if !theta.is_finite() || !delta.is_finite() {
        return Err(Error::NonFinite("angle or length"));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    Ok(-theta.sin() / (1.0 / delta.tanh() - theta.cos()))
}

/// `e^{l(t) - t}` with `l(t)` the distance from `m1` to the point at distance
/// `t` from `m0` on the ray toward `xi`.
pub fn busemann_rate(m1: &HPoint, m0: &HPoint, xi: &IdealPoint, t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("ray parameter must be >= 0, got {t}")));
    }
    let dir = m0.direction_to_ideal(xi);
    let mt = m0.exp(&dir, t);
    let l = distance(m1, &mt)?;
    Ok((l - t).exp())
}

/// Log-density of the visual metric `c_m` against `c_origin` at `xi`.
///
/// Equals `-log(-<ℓ, m>)` with `ℓ = (1, ξ)`.
pub fn visual_log_density_from_origin(xi: &IdealPoint, m: &HPoint) -> f64 {
    -(-mink(&xi.light_vector(), m.coords())).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distance_identity_and_radial() {
        let o = HPoint::origin();
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
        let p = HPoint::from_poincare(Vector3::new(0.0, 0.0, 0.5)).unwrap();
        let d = distance(&o, &p).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-12, "{d}");
        assert!((d - 2.0 * 0.5f64.atanh()).abs() < 1e-12);
    }

    #[test]
    fn distance_stays_accurate_far_out() {
        let o = HPoint::origin();
        let m1 = o.exp(&Vector4::new(0.0, 0.0, 1.0, 0.0), 0.7);
        let dir = Vector4::new(0.0, 1.0, 0.0, 0.0);
        for t in [3.0, 15.0, 30.0, 40.0] {
            let far = o.exp(&dir, t);
            assert!((distance(&o, &far).unwrap() - t).abs() < 1e-12 * t);
            let expected = (t.cosh() * 0.7f64.cosh()).acosh();
            assert!((distance(&m1, &far).unwrap() - expected).abs() < 1e-12 * t, "t = {t}");
        }
    }

    #[test]
    fn distance_rejects_nan() {
        let bad = HPoint::from_raw(Vector4::new(f64::NAN, 0.0, 0.0, 0.0));
        assert!(matches!(distance(&bad, &HPoint::origin()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn isometries_preserve_form_and_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let jm = j();
        for _ in 0..50 {
            let l = HIsometry::random(&mut rng, 2.0);
            let li = l.inverse();
            let prod = l.compose(&li);
            assert!((prod.matrix() - Matrix4::identity()).abs().max() < 1e-9);
            assert!((l.matrix().transpose() * jm * l.matrix() - jm).abs().max() < 1e-8);
            assert!(HIsometry::new(*l.matrix()).is_ok());
            let p = HPoint::from_poincare(Vector3::new(0.1, -0.3, 0.2)).unwrap();
            let q = HPoint::from_poincare(Vector3::new(-0.4, 0.2, 0.5)).unwrap();
            let d0 = distance(&p, &q).unwrap();
            let d1 = distance(&l.apply(&p), &l.apply(&q)).unwrap();
            assert!((d0 - d1).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_non_isometry() {
        let mut m = Matrix4::identity();
        m[(1, 2)] = 0.3;
        assert!(matches!(HIsometry::new(m), Err(Error::NotIsometry(_))));
    }

    #[test]
    fn translation_moves_origin() {
        let p = HPoint::from_poincare(Vector3::new(0.3, 0.1, -0.2)).unwrap();
        let t = HIsometry::translation_to(&p);
        let q = t.apply(&HPoint::origin());
        assert!((q.coords() - p.coords()).abs().max() < 1e-12);
    }

    #[test]
    fn model_round_trips() {
        let mm = ModelMap::default();
        let p = HPoint::from_poincare(Vector3::new(0.6, -0.2, 0.1)).unwrap();
        assert!(mm.poincare_round_trip(&p).unwrap() < 1e-12);
        assert!(mm.klein_round_trip(&p).unwrap() < 1e-12);
    }

    #[test]
    fn charts_invert_and_transition() {
        let z = Complex64::new(0.3, -1.7);
        for kind in [ChartKind::North, ChartKind::South] {
            let v = kind.to_sphere(z);
            assert!((v.norm() - 1.0).abs() < 1e-14);
            assert!((kind.from_sphere(&v) - z).norm() < 1e-13);
        }
        let v = ChartKind::North.to_sphere(z);
        let w = ChartKind::South.from_sphere(&v);
        assert!((w - 1.0 / z).norm() < 1e-13);
    }

    #[test]
    fn visual_closed_form_values() {
        assert_eq!(visual_log_density_closed(0.7, 0.0), 0.0);
        assert!((visual_log_density_closed(0.0, 1.3) - 1.3).abs() < 1e-14);
        assert!((visual_log_density_closed(std::f64::consts::FRAC_PI_2, 1.0) + 0.433_780_830_483_027).abs() < 1e-12);
        let d = visual_log_density_dtheta(std::f64::consts::FRAC_PI_2, 1.0).unwrap();
        assert!((d + 1f64.tanh()).abs() < 1e-14);
        assert_eq!(visual_log_density_dtheta(0.0, 1.0).unwrap(), 0.0);
        assert!(visual_log_density_dtheta(0.3, 0.0).is_err());
    }

    #[test]
    fn visual_from_points_matches_null_vector_route() {
        let m0 = HPoint::from_poincare(Vector3::new(0.2, 0.1, 0.0)).unwrap();
        let m1 = HPoint::from_poincare(Vector3::new(-0.3, 0.4, 0.2)).unwrap();
        let xi = IdealPoint::new(Vector3::new(0.3, -0.5, 0.8)).unwrap();
        let y = visual_log_density(&xi, &m0, &m1).unwrap();
        let via_null = visual_log_density_from_origin(&xi, &m1) - visual_log_density_from_origin(&xi, &m0);
        assert!((y - via_null).abs() < 1e-12, "{y} {via_null}");
    }

    #[test]
    fn busemann_rate_limits() {
        let m0 = HPoint::origin();
        let xi = IdealPoint::new(Vector3::new(1.0, 0.0, 0.0)).unwrap();
        for t in [0.0, 1.0, 5.0] {
            assert!((busemann_rate(&m0, &m0, &xi, t).unwrap() - 1.0).abs() < 1e-12);
        }
        let m1 = m0.exp(&Vector4::new(0.0, 0.0, 1.0, 0.0), 1.0);
        assert!((busemann_rate(&m1, &m0, &xi, 0.0).unwrap() - 1f64.exp()).abs() < 1e-12);
        let r = busemann_rate(&m1, &m0, &xi, 20.0).unwrap();
        assert!((r - 1f64.cosh()).abs() < 1e-6);
        assert!(busemann_rate(&m1, &m0, &xi, -1.0).is_err());
    }
}
