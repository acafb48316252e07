use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forms::{forms_at, fundamental_forms, FormSample};
use super::gauss::gauss_map;
use super::patch::SurfacePatch;
use crate::conformal::loops::fibonacci_sphere;
use crate::conformal::{Chart, ConformalMetricField, Grid};
use crate::domains::SphericalCap;
use crate::error::{Error, Result};
use crate::hyp::{HPoint, IdealPoint};

/// Chordal distance below which two Gauss images count as the same point.
pub const FOLD_TOLERANCE: f64 = 1e-7;

/// The ideal boundary `∂∞Ω` of the convex region bounded by the patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IdealRegion {
    /// Bounded region: the Gauss image should cover the whole sphere.
    Empty,
    /// A single ideal point, as for a horosphere.
    Point { point: Vector3<f64> },
    /// A closed round cap.
    Cap { cap: SphericalCap },
}

impl IdealRegion {
    fn contains(&self, v: &Vector3<f64>) -> bool {
        match self {
            IdealRegion::Empty => false,
            IdealRegion::Point { point } => (v - point.normalize()).norm() < 1e-9,
            IdealRegion::Cap { cap } => cap.support(v) >= -1e-12,
        }
    }
}

/// Candidate boundary data `(U, h)`: Gauss images of the nodes and the pushed-forward density.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub nu: usize,
    pub nv: usize,
    pub ideal: Vec<Option<IdealPoint>>,
    /// `w` with `e^{2w} c₁` of the same area as `I` under the Gauss map.
    pub log_density: Vec<Option<f64>>,
    pub dilatation: Vec<Option<f64>>,
    pub max_dilatation: f64,
    pub region: IdealRegion,
    /// Valid Gauss images that fall into the ideal region.
    pub in_ideal_region: usize,
    /// Fraction of the sphere outside the ideal region within sampling distance of a Gauss image (bounded case).
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Push {
    v: Vector3<f64>,
    vu: Vector3<f64>,
    vv: Vector3<f64>,
    w: f64,
}

/// Direction of the Gauss image and its parameter derivatives, from `dL = (Id + B) dX` with `L = X + n`.
fn push(s: &FormSample) -> Option<Push> {
    let l = s.point + s.normal;
    let b = &s.shape;
    let lu = s.xu + s.xu * b[(0, 0)] + s.xv * b[(1, 0)];
    let lv = s.xv + s.xu * b[(0, 1)] + s.xv * b[(1, 1)];
    if !(l[0] > 0.0) {
        return None;
    }
    let sp = |x: &nalgebra::Vector4<f64>| Vector3::new(x[1], x[2], x[3]);
    let v = sp(&l) / l[0];
    let vu = (sp(&lu) - v * lu[0]) / l[0];
    let vv = (sp(&lv) - v * lv[0]) / l[0];
    let area = v.dot(&vu.cross(&vv)).abs();
    let det = s.first.determinant();
    if !(area > 0.0 && det > 0.0) {
        return None;
    }
    Some(Push { v, vu, vv, w: 0.5 * (0.5 * det.ln() - area.ln()) })
}

pub fn boundary_data_assembly(patch: &SurfacePatch, region: IdealRegion) -> Result<BoundaryData> {
    let forms = fundamental_forms(patch);
    let g = gauss_map(&forms)?;
    let pushes: Vec<Option<Push>> = forms.samples.par_iter().map(|s| s.as_ref().and_then(push)).collect();
    check_folds(&forms.samples, &g.ideal)?;
    let in_ideal_region = g.ideal.iter().flatten().filter(|p| region.contains(p.dir())).count();
    let coverage = match region {
        IdealRegion::Empty => Some(coverage(patch, &g.ideal)),
        IdealRegion::Point { .. } | IdealRegion::Cap { .. } => None,
    };
    Ok(BoundaryData {
        nu: patch.nu,
        nv: patch.nv,
        ideal: g.ideal,
        log_density: pushes.iter().map(|p| p.map(|p| p.w)).collect(),
        dilatation: g.dilatation,
        max_dilatation: g.max_dilatation,
        region,
        in_ideal_region,
        coverage,
    })
}

fn check_folds(samples: &[Option<FormSample>], ideal: &[Option<IdealPoint>]) -> Result<()> {
    let mut idx: Vec<usize> = (0..ideal.len()).filter(|&k| ideal[k].is_some()).collect();
    idx.sort_by(|&a, &b| ideal[a].unwrap().dir().x.total_cmp(&ideal[b].unwrap().dir().x));
    for (p, &a) in idx.iter().enumerate() {
        let ga = ideal[a].unwrap();
        for &b in &idx[p + 1..] {
            let gb = ideal[b].unwrap();
            if gb.dir().x - ga.dir().x > FOLD_TOLERANCE {
                break;
            }
            if ga.chordal(&gb) < FOLD_TOLERANCE {
                let (xa, xb) = (samples[a].as_ref().unwrap().point, samples[b].as_ref().unwrap().point);
                if (xa - xb).norm() > 1e-9 {
                    return Err(Error::GaussMapFold(a.min(b), a.max(b)));
                }
            }
        }
    }
    Ok(())
}

fn coverage(patch: &SurfacePatch, ideal: &[Option<IdealPoint>]) -> f64 {
    let (nu, nv) = (patch.nu, patch.nv);
    let mut gap: f64 = 0.0;
    for j in 0..nv {
        for i in 0..nu {
            let Some(a) = ideal[j * nu + i] else { continue };
            for (di, dj) in [(1, 0), (0, 1)] {
                if i + di < nu && j + dj < nv {
                    if let Some(b) = ideal[(j + dj) * nu + i + di] {
                        gap = gap.max(a.angle(&b));
                    }
                }
            }
        }
    }
    let pts: Vec<Vector3<f64>> = ideal.iter().flatten().map(|p| *p.dir()).collect();
    let probes = fibonacci_sphere(4000);
    let tol = 2.0 * gap;
    let covered = probes
        .par_iter()
        .filter(|q| pts.iter().any(|p| q.cross(p).norm().atan2(q.dot(p)) <= tol))
        .count();
    covered as f64 / probes.len() as f64
}

impl BoundaryData {
    /// Resamples the pushed-forward density on a chart by inverting the Gauss map of an analytic patch.
    ///
    /// Chart nodes outside the Gauss image, or where the inversion fails, are unmasked.
    pub fn to_chart_field(&self, patch: &SurfacePatch, chart: Chart) -> Result<ConformalMetricField> {
        let seeds = self.seeds(patch)?;
        let rows: Vec<Vec<Option<f64>>> = (0..chart.ny)
            .into_par_iter()
            .map(|j| {
                let mut prev: Option<(f64, f64)> = None;
                (0..chart.nx)
                    .map(|i| {
                        let target = IdealPoint::from_chart(chart.kind, chart.point(i, j));
                        let t = *target.dir();
                        let hit = prev.and_then(|s| invert(patch, &t, s)).or_else(|| {
                            let s = nearest(&seeds, &t);
                            invert(patch, &t, s)
                        });
                        prev = hit.map(|h| h.0);
                        hit.map(|h| h.1)
                    })
                    .collect()
            })
            .collect();
        let u = Grid::from_fn(chart.nx, chart.ny, |i, j| rows[j][i].unwrap_or(f64::NAN));
        let mask = Grid::from_fn(chart.nx, chart.ny, |i, j| rows[j][i].is_some());
        ConformalMetricField::new(chart, u, mask, HPoint::origin())
    }
}

impl BoundaryData {
    fn seeds(&self, patch: &SurfacePatch) -> Result<Vec<(Vector3<f64>, (f64, f64))>> {
        if !patch.is_analytic() {
            return Err(Error::InvalidArgument("resampling needs an analytic patch".into()));
        }
        let seeds: Vec<_> = (0..self.ideal.len())
            .filter_map(|k| self.ideal[k].map(|p| (*p.dir(), patch.param(k % self.nu, k / self.nu))))
            .collect();
        if seeds.is_empty() {
            return Err(Error::Degenerate("no valid Gauss images".into()));
        }
        Ok(seeds)
    }

    /// Pushed-forward log-density at an ideal point of the Gauss image, `None` outside it.
    pub fn log_density_at(&self, patch: &SurfacePatch, target: &IdealPoint) -> Result<Option<f64>> {
        let seeds = self.seeds(patch)?;
        let t = *target.dir();
        Ok(invert(patch, &t, nearest(&seeds, &t)).map(|h| h.1))
    }
}

fn nearest(seeds: &[(Vector3<f64>, (f64, f64))], t: &Vector3<f64>) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, seeds[0].1);
    for (v, p) in seeds {
        let d = v.dot(t);
        if d > best.0 {
            best = (d, *p);
        }
    }
    best.1
}

/// Gauss–Newton solve of `G(u, v) = t`; returns the parameters and the log-density there.
fn invert(patch: &SurfacePatch, t: &Vector3<f64>, start: (f64, f64)) -> Option<((f64, f64), f64)> {
    let (mut u, mut v) = start;
    let period = patch.period_v();
    let (u0, u1) = patch.u_range;
    let (v0, v1) = patch.v_range;
    for _ in 0..40 {
        let s = forms_at(patch, u, v)?;
        let p = push(&s)?;
        let r = t - p.v;
        if r.norm() < 1e-13 {
            return Some(((u, v), p.w));
        }
        let jt = nalgebra::Matrix3x2::from_columns(&[p.vu, p.vv]);
        let jtj: Matrix2<f64> = jt.transpose() * jt;
        let step: Vector2<f64> = jtj.try_inverse()? * (jt.transpose() * r);
        let scale = (0.25 / step.norm()).min(1.0);
        u = (u + scale * step[0]).clamp(u0, u1);
        v += scale * step[1];
        match period {
            Some(per) => v = v0 + (v - v0).rem_euclid(per),
            None => v = v.clamp(v0, v1),
        }
    }
    let s = forms_at(patch, u, v)?;
    let p = push(&s)?;
    ((t - p.v).norm() < 1e-11).then_some(((u, v), p.w))
}
