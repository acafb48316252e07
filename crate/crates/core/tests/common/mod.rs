//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::sync::Arc;

use hyperweyl::conformal::{curvature, Chart, Extent};
use hyperweyl::hyp::{mink, ChartKind, HIsometry, HPoint};
use hyperweyl::revolve::{realize, ProfileMetric, RevolutionSurface};
use hyperweyl::surfaces::{boundary_data_assembly, IdealRegion, SurfacePatch};
use nalgebra::{Matrix2, Vector3, Vector4};

fn lorentz_cross(a: &Vector4<f64>, b: &Vector4<f64>, c: &Vector4<f64>) -> Vector4<f64> {
    // Minkowski-orthogonal vector via the cofactor expansion with the metric applied.
    let m = nalgebra::Matrix3x4::from_rows(&[a.transpose(), b.transpose(), c.transpose()]);
    let mut out = Vector4::zeros();
    for k in 0..4 {
        let cols: Vec<usize> = (0..4).filter(|&c| c != k).collect();
        let minor = nalgebra::Matrix3::from_fn(|i, j| m[(i, cols[j])]);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out[k] = sign * minor.determinant();
    }
    out[0] = -out[0];
    out
}

/// Gauss image of an analytic patch from positions only: finite-difference tangents, outward normal
/// (pointing away from `center`), endpoint of the normal ray.
pub fn fd_gauss_image(patch: &SurfacePatch, u: f64, v: f64, center: &Vector4<f64>) -> Vector3<f64> {
    let d = 1e-5;
    let x = patch.point_at(u, v).unwrap();
    let xu = (patch.point_at(u + d, v).unwrap() - patch.point_at(u - d, v).unwrap()) / (2.0 * d);
    let xv = (patch.point_at(u, v + d).unwrap() - patch.point_at(u, v - d).unwrap()) / (2.0 * d);
    let mut n = lorentz_cross(&x, &xu, &xv);
    n /= mink(&n, &n).sqrt();
    // Outward: the normal decreases the Minkowski pairing with the center (moves away from it).
    if mink(&n, center) > 0.0 {
        n = -n;
    }
    let l = x + n;
    Vector3::new(l[1], l[2], l[3]) / l[0]
}

/// Conformal distortion of the Gauss map by finite differences: singular-value ratio of `dG` between
/// the induced metric and the round metric, both estimated from positions.
pub fn fd_dilatation(patch: &SurfacePatch, u: f64, v: f64, center: &Vector4<f64>) -> f64 {
    let d = 1e-5;
    let h = 1e-3;
    let xu = (patch.point_at(u + d, v).unwrap() - patch.point_at(u - d, v).unwrap()) / (2.0 * d);
    let xv = (patch.point_at(u, v + d).unwrap() - patch.point_at(u, v - d).unwrap()) / (2.0 * d);
    let first = Matrix2::new(mink(&xu, &xu), mink(&xu, &xv), mink(&xu, &xv), mink(&xv, &xv));
    let g = |a: f64, b: f64| fd_gauss_image(patch, u + a, v + b, center);
    let d4 = |f: &dyn Fn(f64) -> Vector3<f64>| (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) / (12.0 * h);
    let gu = d4(&|t| g(t, 0.0));
    let gv = d4(&|t| g(0.0, t));
    let m = Matrix2::new(gu.dot(&gu), gu.dot(&gv), gu.dot(&gv), gv.dot(&gv));
    let a = first.try_inverse().unwrap() * m;
    let tr = a.trace();
    let det = a.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    ((0.5 * tr + disc) / (0.5 * tr - disc)).sqrt()
}

/// Area-element ratio of the distance-`t` offset by finite differences of offset points.
pub fn fd_offset_area_ratio(patch: &SurfacePatch, u: f64, v: f64, t: f64) -> f64 {
    let d = 1e-5;
    let area = |s: f64| {
        let xu = (patch.offset_point(u + d, v, s).unwrap() - patch.offset_point(u - d, v, s).unwrap()) / (2.0 * d);
        let xv = (patch.offset_point(u, v + d, s).unwrap() - patch.offset_point(u, v - d, s).unwrap()) / (2.0 * d);
        (mink(&xu, &xu) * mink(&xv, &xv) - mink(&xu, &xv).powi(2)).sqrt()
    };
    area(t) / area(0.0)
}

/// Realizes a closed-form profile, moves the point at unit distance along the axis to the origin,
/// assembles boundary data and returns the largest curvature deviation on a chart inside the image.
pub fn assembled_curvature_deviation(profile: &ProfileMetric, chart_half: f64, chart_n: usize, expected_k: f64) -> (f64, usize) {
    let surface = Arc::new(realize(profile).unwrap());
    let recenter = HIsometry::translation_to(&RevolutionSurface::axis_point(1.0)).inverse();
    let patch = surface.patch_transformed(16, recenter).unwrap();
    let data = boundary_data_assembly(&patch, IdealRegion::Empty).unwrap();
    let near_pole = data.ideal[patch.index(1, 0)].unwrap();
    let kind = if near_pole.dir().z < 0.0 { ChartKind::North } else { ChartKind::South };
    let chart = Chart::new(kind, chart_n, chart_n, Extent::square(chart_half)).unwrap();
    let field = data.to_chart_field(&patch, chart).unwrap();
    let k = curvature(&field);
    let values: Vec<f64> = k.as_masked().valid_values().collect();
    (values.iter().map(|x| (x - expected_k).abs()).fold(0.0, f64::max), values.len())
}

pub fn origin() -> Vector4<f64> {
    *HPoint::origin().coords()
}
