//! Short closed loop search by seeded curve shortening.
//!
//! This is a falsifier for injectivity-radius lower bounds: it can exhibit a
//! short closed geodesic but an empty result proves nothing.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::atlas::SphereDensity;
use crate::error::{Error, Result};
use crate::hyp::random_unit;

#[derive(Debug, Clone)]
pub struct LoopSearchOptions {
    /// Points per discrete loop.
    pub points: usize,
    /// Number of great-circle seeds (besides the three coordinate circles).
    pub seeds: usize,
    pub max_iterations: usize,
    /// Relative length change per check interval that counts as converged.
    pub tolerance: f64,
    pub rng_seed: u64,
}

impl Default for LoopSearchOptions {
    fn default() -> Self {
        LoopSearchOptions { points: 64, seeds: 8, max_iterations: 20_000, tolerance: 1e-11, rng_seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedLoop {
    pub points: Vec<[f64; 3]>,
    pub length: f64,
    pub iterations: usize,
}

impl ClosedLoop {
    pub fn vectors(&self) -> Vec<Vector3<f64>> {
        self.points.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect()
    }
}

fn arc(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

fn segment(d: &dyn SphereDensity, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let mid = (a + b).normalize();
    d.log_density(&mid).exp() * arc(a, b)
}

/// Length of a closed polygonal loop, midpoint rule for the density.
pub fn loop_length(d: &dyn SphereDensity, pts: &[Vector3<f64>]) -> f64 {
    let n = pts.len();
    (0..n).map(|k| segment(d, &pts[k], &pts[(k + 1) % n])).sum()
}

fn tangent_frame(p: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = if p.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (a - p * a.dot(p)).normalize();
    let e2 = p.cross(&e1);
    (e1, e2)
}

fn great_circle(normal: &Vector3<f64>, n: usize) -> Vec<Vector3<f64>> {
    let (e1, e2) = tangent_frame(normal);
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            e1 * t.cos() + e2 * t.sin()
        })
        .collect()
}

/// Redistributes points uniformly in metric length along the loop.
fn resample(d: &dyn SphereDensity, pts: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let n = pts.len();
    let seg: Vec<f64> = (0..n).map(|k| segment(d, &pts[k], &pts[(k + 1) % n])).collect();
    let total: f64 = seg.iter().sum();
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    let mut acc = 0.0;
    for m in 0..n {
        let target = total * m as f64 / n as f64;
        while k < n - 1 && acc + seg[k] < target {
            acc += seg[k];
            k += 1;
        }
        let t = if seg[k] > 0.0 { ((target - acc) / seg[k]).clamp(0.0, 1.0) } else { 0.0 };
        let a = pts[k];
        let b = pts[(k + 1) % n];
        out.push((a * (1.0 - t) + b * t).normalize());
    }
    out
}

/// Gradient descent on the discrete length; returns `None` if the loop collapses
/// or fails to converge.
fn relax(d: &dyn SphereDensity, seed: Vec<Vector3<f64>>, opts: &LoopSearchOptions) -> Option<ClosedLoop> {
    let n = seed.len();
    let mut pts = resample(d, &seed);
    let initial = loop_length(d, &pts);
    let mut last = initial;
    let eta = 1e-6;
    let check = 100;
    for it in 1..=opts.max_iterations {
        let mut next = pts.clone();
        for k in 0..n {
            let prev = pts[(k + n - 1) % n];
            let nxt = pts[(k + 1) % n];
            let p = pts[k];
            let local = |q: &Vector3<f64>| segment(d, &prev, q) + segment(d, q, &nxt);
            let (e1, e2) = tangent_frame(&p);
            let g1 = (local(&(p + e1 * eta).normalize()) - local(&(p - e1 * eta).normalize())) / (2.0 * eta);
            let g2 = (local(&(p + e2 * eta).normalize()) - local(&(p - e2 * eta).normalize())) / (2.0 * eta);
            let ds = 0.5 * (arc(&prev, &p) + arc(&p, &nxt));
            let rho = d.log_density(&p).exp();
            let step = 0.3 * ds / rho;
            next[k] = (p - (e1 * g1 + e2 * g2) * step).normalize();
        }
        pts = next;
        if it % 20 == 0 {
            pts = resample(d, &pts);
        }
        if it % check == 0 {
            let len = loop_length(d, &pts);
            if !len.is_finite() || len < 1e-3 * initial {
                return None;
            }
            if (last - len).abs() <= opts.tolerance * len {
                return Some(ClosedLoop {
                    points: pts.iter().map(|p| [p.x, p.y, p.z]).collect(),
                    length: len,
                    iterations: it,
                });
            }
            last = len;
        }
    }
    None
}

/// Seeded relaxation of great circles; returns converged loops shorter than `length_budget`.
///
/// A falsifier only: a returned loop proves that a short loop exists, while an
/// empty result certifies nothing about the shortest loop length.
pub fn short_loop_search(
    density: &dyn SphereDensity,
    length_budget: f64,
    opts: &LoopSearchOptions,
) -> Result<Vec<ClosedLoop>> {
    if !(length_budget > 0.0) {
        return Err(Error::InvalidArgument(format!("length budget must be positive, got {length_budget}")));
    }
    if opts.points < 8 {
        return Err(Error::InvalidArgument("loops need at least 8 points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut normals = vec![Vector3::z(), Vector3::x(), Vector3::y()];
    normals.extend((0..opts.seeds).map(|_| random_unit(&mut rng)));
    let mut found: Vec<ClosedLoop> = Vec::new();
    for nrm in normals {
        if let Some(lp) = relax(density, great_circle(&nrm, opts.points), opts) {
            if lp.length < length_budget {
                found.push(lp);
            }
        }
    }
    found.sort_by(|a, b| a.length.total_cmp(&b.length));
    // Drop near-duplicates (same loop reached from several seeds).
    let mut unique: Vec<ClosedLoop> = Vec::new();
    for lp in found {
        let dup = unique.iter().any(|u| {
            (u.length - lp.length).abs() < 1e-6 * lp.length && hausdorff(&u.vectors(), &lp.vectors()) < 1e-3
        });
        if !dup {
            unique.push(lp);
        }
    }
    Ok(unique)
}

fn hausdorff(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let one = |x: &[Vector3<f64>], y: &[Vector3<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Area check for the two disks bounded by a loop against `π / K_max`.
#[derive(Debug, Clone, Serialize)]
pub struct IsoperimetricReport {
    pub area_inside: f64,
    pub area_outside: f64,
    pub k_max: f64,
    pub lower_bound: f64,
    pub holds: bool,
}

/// Maximum of the pointwise curvature over a Fibonacci sample of the sphere.
pub fn sampled_max_curvature(density: &dyn SphereDensity, samples: usize) -> f64 {
    fibonacci_sphere(samples).iter().map(|v| density.curvature_at(v)).fold(f64::NEG_INFINITY, f64::max)
}

pub fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            Vector3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

/// Integrates `e^{2u}` over both sides of the loop (midpoint rule on a latitude grid).
pub fn isoperimetric_check(density: &dyn SphereDensity, lp: &ClosedLoop, k_max: f64, nlat: usize) -> IsoperimetricReport {
    let pts = lp.vectors();
    // Project from the sphere point farthest from the loop among a few candidates.
    let mean: Vector3<f64> = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
    let mut candidates = vec![Vector3::x(), -Vector3::x(), Vector3::y(), -Vector3::y(), Vector3::z(), -Vector3::z()];
    if mean.norm() > 1e-6 {
        candidates.push(-mean.normalize());
    }
    let pole = candidates
        .into_iter()
        .max_by(|a, b| {
            let da = pts.iter().map(|p| (p - a).norm()).fold(f64::INFINITY, f64::min);
            let db = pts.iter().map(|p| (p - b).norm()).fold(f64::INFINITY, f64::min);
            da.total_cmp(&db)
        })
        .unwrap();
    let (e1, e2) = tangent_frame(&pole);
    let proj = |v: &Vector3<f64>| {
        let s = 1.0 - v.dot(&pole);
        (v.dot(&e1) / s, v.dot(&e2) / s)
    };
    let poly: Vec<(f64, f64)> = pts.iter().map(proj).collect();
    let inside = |v: &Vector3<f64>| {
        let (x, y) = proj(v);
        let mut c = false;
        let n = poly.len();
        for k in 0..n {
            let (xa, ya) = poly[k];
            let (xb, yb) = poly[(k + 1) % n];
            if (ya > y) != (yb > y) && x < (xb - xa) * (y - ya) / (yb - ya) + xa {
                c = !c;
            }
        }
        c
    };
    let nlon = 2 * nlat;
    let dth = std::f64::consts::PI / nlat as f64;
    let dph = std::f64::consts::TAU / nlon as f64;
    let (mut a_in, mut a_out) = (0.0, 0.0);
    for a in 0..nlat {
        let th = (a as f64 + 0.5) * dth;
        let w = th.sin() * dth * dph;
        for b in 0..nlon {
            let ph = (b as f64 + 0.5) * dph;
            let v = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let dens = (2.0 * density.log_density(&v)).exp() * w;
            if inside(&v) {
                a_in += dens;
            } else {
                a_out += dens;
            }
        }
    }
    let lower = std::f64::consts::PI / k_max;
    IsoperimetricReport { area_inside: a_in, area_outside: a_out, k_max, lower_bound: lower, holds: a_in.min(a_out) >= lower }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::atlas::FnDensity;

    #[test]
    fn round_sphere_has_no_short_loops() {
        let d = FnDensity(|_: &Vector3<f64>| 0.0);
        let opts = LoopSearchOptions { seeds: 3, ..Default::default() };
        assert!(short_loop_search(&d, 1.0, &opts).unwrap().is_empty());
        assert!(short_loop_search(&d, 0.0, &opts).is_err());
    }

    #[test]
    fn great_circle_length_is_two_pi() {
        let d = FnDensity(|_: &Vector3<f64>| 0.0);
        let c = great_circle(&Vector3::new(0.3, 0.4, 0.2).normalize(), 50);
        assert!((loop_length(&d, &c) - std::f64::consts::TAU).abs() < 1e-12);
    }
}
