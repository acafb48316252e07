mod common;

use std::f64::consts::PI;

use hyperweyl::conformal::{curvature, Chart, Extent};
use hyperweyl::domains::SphericalCap;
use hyperweyl::hyp::{ChartKind, HIsometry, HPoint};
use hyperweyl::surfaces::io::{read_obj, write_forms_csv, write_meta, write_obj};
use hyperweyl::surfaces::*;
use nalgebra::{Matrix2, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn umbilic_families() -> Vec<(String, SurfacePatch, f64)> {
    let mut out = Vec::new();
    for r in [0.5, 1.0, 3.0] {
        out.push((format!("sphere r={r}"), SurfacePatch::sphere(r, 17).unwrap(), 1.0 / r.tanh()));
    }
    out.push(("horosphere".into(), SurfacePatch::horosphere(1.5, 17).unwrap(), 1.0));
    for d in [0.5, 1.0] {
        out.push((format!("equidistant d={d}"), SurfacePatch::equidistant(d, 1.0, 17).unwrap(), d.tanh()));
    }
    out
}

#[test]
fn closed_form_principal_curvatures() {
    for (name, patch, kappa) in umbilic_families() {
        let forms = fundamental_forms(&patch);
        assert!(forms.valid().count() > 0, "{name}");
        assert!(forms.consistency() < 1e-7, "{name}");
        for s in forms.valid() {
            assert!((s.kappa[0] - kappa).abs() < 1e-9 && (s.kappa[1] - kappa).abs() < 1e-9, "{name}: {:?}", s.kappa);
        }
    }
    let horo = fundamental_forms(&SurfacePatch::horosphere(1.0, 9).unwrap());
    for s in horo.valid() {
        assert!((s.second - s.first).abs().max() < 1e-12);
    }
}

#[test]
fn gauss_and_codazzi_residuals_on_umbilic_families() {
    for (name, patch, _) in umbilic_families() {
        let forms = fundamental_forms(&patch);
        let k = intrinsic_curvature(&forms);
        let r = gauss_codazzi_residual(&forms, &k);
        assert!(r.checked > 0, "{name}");
        assert!(r.max_gauss <= 1e-5, "{name}: gauss {}", r.max_gauss);
        assert!(r.max_codazzi < 1e-6, "{name}: codazzi {}", r.max_codazzi);
    }
}

#[test]
fn horosphere_fixes_the_sign_of_the_gauss_equation() {
    let forms = fundamental_forms(&SurfacePatch::horosphere(1.0, 11).unwrap());
    let k = intrinsic_curvature(&forms);
    for (s, k) in forms.samples.iter().zip(&k) {
        let (Some(s), Some(k)) = (s, k) else { continue };
        assert!((s.shape.determinant() - 1.0).abs() < 1e-12);
        assert!(k.abs() < 1e-7, "intrinsic curvature {k}");
    }
    let sphere = fundamental_forms(&SurfacePatch::sphere(1.0, 17).unwrap());
    let k = intrinsic_curvature(&sphere);
    for (s, k) in sphere.samples.iter().zip(&k) {
        let (Some(s), Some(k)) = (s, k) else { continue };
        assert!((s.shape.determinant() - 1.724061).abs() < 1e-6);
        assert!((k - 0.724063).abs() < 1e-5);
    }
}

fn sampled_copy(patch: &SurfacePatch) -> SurfacePatch {
    let pts: Vec<HPoint> = (0..patch.nv)
        .flat_map(|j| (0..patch.nu).map(move |i| (i, j)))
        .map(|(i, j)| HPoint::normalize(patch.sample_point(i, j)).unwrap())
        .collect();
    SurfacePatch::sampled(pts, patch.u_range, patch.v_range, patch.nu, patch.nv).unwrap().with_orientation(patch.orientation)
}

#[test]
fn sampled_gauss_residual_is_second_order() {
    let make = |n: usize| {
        let p = SurfacePatch::analytic(
            AnalyticSurface::PerturbedSphere { radius: 1.0, amplitude: 0.05 },
            (0.6, 2.5),
            (0.3, 2.8),
            n,
            n,
        )
        .unwrap();
        let s = sampled_copy(&p);
        let forms = fundamental_forms(&s);
        let k = intrinsic_curvature(&forms);
        let r = gauss_codazzi_residual(&forms, &k);
        (r.gauss.iter().flatten().map(|x| x * x).sum::<f64>() / r.checked as f64).sqrt()
    };
    let (coarse, fine) = (make(41), make(81));
    let order = (coarse / fine).log2();
    assert!(order > 1.8, "rms residuals {coarse:e} -> {fine:e}, order {order}");
}

#[test]
fn analytic_gauss_residual_on_perturbed_sphere() {
    let p = SurfacePatch::perturbed_sphere(1.0, 0.05, 21).unwrap();
    let forms = fundamental_forms(&p);
    let k = intrinsic_curvature(&forms);
    let r = gauss_codazzi_residual(&forms, &k);
    assert!(r.max_gauss < 1e-5 && r.max_codazzi < 1e-5, "{} {}", r.max_gauss, r.max_codazzi);
}

#[test]
fn gauss_map_is_conformal_on_umbilic_families() {
    for (name, patch, _) in umbilic_families() {
        let g = gauss_map(&fundamental_forms(&patch)).unwrap();
        for d in g.dilatation.iter().flatten() {
            assert!((d - 1.0).abs() <= 1e-8, "{name}: {d}");
        }
    }
}

#[test]
fn sphere_gauss_map_is_radial() {
    let patch = SurfacePatch::sphere(0.8, 13).unwrap();
    let g = gauss_map(&fundamental_forms(&patch)).unwrap();
    for j in 0..patch.nv {
        for i in 0..patch.nu {
            let Some(p) = g.ideal[patch.index(i, j)] else { continue };
            let x = patch.sample_point(i, j);
            let radial = Vector3::new(x[1], x[2], x[3]).normalize();
            assert!((p.dir() - radial).norm() < 1e-12);
        }
    }
}

#[test]
fn perturbed_sphere_dilatation_matches_distortion_oracle() {
    let patch = SurfacePatch::perturbed_sphere(1.0, 0.05, 13).unwrap();
    let forms = fundamental_forms(&patch);
    let g = gauss_map(&forms).unwrap();
    let o = common::origin();
    let mut checked = 0;
    for j in 1..patch.nv - 1 {
        for i in 2..patch.nu - 2 {
            let Some(d) = g.dilatation[patch.index(i, j)] else { continue };
            let (u, v) = patch.param(i, j);
            let s = forms.get(i, j).unwrap();
            assert!((d - (1.0 + s.kappa[0]) / (1.0 + s.kappa[1])).abs() < 1e-12);
            let oracle = common::fd_dilatation(&patch, u, v, &o);
            assert!((d - oracle).abs() < 1e-3, "({i},{j}): {d} vs {oracle}");
            checked += 1;
        }
    }
    assert!(checked > 50);
    assert!(g.max_dilatation > 1.01, "perturbation should be visible, got {}", g.max_dilatation);
}

#[test]
fn tube_formula_matches_offset_areas() {
    for r in [0.5, 1.0, 2.0] {
        let patch = SurfacePatch::sphere(r, 9).unwrap();
        let forms = fundamental_forms(&patch);
        for t in [0.5, 1.0] {
            let exact = ((r + t).sinh() / r.sinh()).powi(2);
            for (i, j) in [(2, 3), (4, 8), (6, 13)] {
                let s = forms.get(i, j).unwrap();
                let factor = parallel_area_factor(&s.shape, t);
                let (u, v) = patch.param(i, j);
                let oracle = common::fd_offset_area_ratio(&patch, u, v, t);
                assert!((factor - exact).abs() < 1e-9 * exact, "r={r} t={t}");
                assert!((factor - oracle).abs() < 1e-6 * exact, "r={r} t={t}: {factor} vs {oracle}");
            }
        }
    }
    for t in [0.0, 0.5, 1.0, 3.0] {
        let f = parallel_area_factor(&Matrix2::identity(), t);
        assert!((f - (2.0 * t).exp()).abs() < 1e-10 * f.max(1.0));
    }
    assert!((parallel_area_factor(&Matrix2::identity(), 1.0) - 7.389056).abs() < 1e-6);
}

proptest! {
    #[test]
    fn tube_factor_is_multiplicative_for_umbilic_operators(kappa in 0.0f64..3.0, s in 0.0f64..1.5, t in 0.0f64..1.5) {
        let b = Matrix2::identity() * kappa;
        let bs = Matrix2::identity() * offset_curvature(kappa, s);
        let lhs = parallel_area_factor(&b, s + t);
        let rhs = parallel_area_factor(&b, s) * parallel_area_factor(&bs, t);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1.0));
    }

    #[test]
    fn sphere_curvatures_are_isometry_invariant(seed in 0u64..1000, r in 0.3f64..2.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = HIsometry::random(&mut rng, 1.5);
        let patch = SurfacePatch::analytic_transformed(AnalyticSurface::Sphere { radius: r }, m, (0.3, 2.8), (0.0, 2.0 * PI), 7, 9).unwrap();
        let forms = fundamental_forms(&patch);
        for s in forms.valid() {
            prop_assert!((s.kappa[0] - 1.0 / r.tanh()).abs() < 1e-8);
            prop_assert!((s.kappa[1] - 1.0 / r.tanh()).abs() < 1e-8);
        }
    }
}

#[test]
fn curvature_windows() {
    let horo = fundamental_forms(&SurfacePatch::horosphere(1.0, 9).unwrap());
    for k0 in [1e-6, 0.01, 0.5] {
        assert!(curvature_window_check(&horo, WindowMode::NearUmbilic { k0, k_bound: 1.0 }, None).unwrap().all_pass);
    }
    let big = fundamental_forms(&SurfacePatch::sphere(3.0, 17).unwrap());
    let r = curvature_window_check(&big, WindowMode::NearUmbilic { k0: 0.01, k_bound: 1.0 }, None).unwrap();
    assert!(r.all_pass && (r.kappa_max - 1.004970).abs() < 1e-6);
    let thin = fundamental_forms(&SurfacePatch::equidistant(0.1, 1.0, 9).unwrap());
    let r = curvature_window_check(&thin, WindowMode::ConvexWindow { k0: 0.5 }, None).unwrap();
    assert!(!r.all_pass && (r.kappa_min - 0.099668).abs() < 1e-6);

    let bumpy = fundamental_forms(&SurfacePatch::perturbed_sphere(1.0, 0.05, 17).unwrap());
    let k = intrinsic_curvature(&bumpy);
    let r = curvature_window_check(&bumpy, WindowMode::NearUmbilic { k0: 0.5, k_bound: 2.0 }, Some(&k)).unwrap();
    let g = gauss_map(&bumpy).unwrap();
    assert!(g.max_dilatation <= r.dilatation_bound + 1e-12);
    assert!(r.umbilic.unwrap().samples > 0);
}

#[test]
fn sphere_boundary_data_is_round() {
    let r = 1.0;
    let patch = SurfacePatch::sphere(r, 33).unwrap();
    let data = boundary_data_assembly(&patch, IdealRegion::Empty).unwrap();
    assert!(data.coverage.unwrap() > 0.999);
    let chart = Chart::new(ChartKind::North, 65, 65, Extent { x0: 0.1, x1: 0.9, y0: -0.4, y1: 0.4 }).unwrap();
    let k = curvature(&data.to_chart_field(&patch, chart).unwrap());
    for x in k.as_masked().valid_values() {
        assert!((x - 0.724063).abs() < 1e-5, "{x}");
    }
}

#[test]
fn equidistant_disk_side_has_constant_negative_curvature() {
    let d = 0.5;
    let patch = SurfacePatch::equidistant(d, 1.5, 41).unwrap();
    // The plane x₃ = 0 bounds the hemisphere v₃ ≤ 0 on the far side from the surface.
    let cap = SphericalCap::new(Vector3::new(0.0, 0.0, -1.0), PI / 2.0).unwrap();
    let data = boundary_data_assembly(&patch, IdealRegion::Cap { cap }).unwrap();
    assert_eq!(data.in_ideal_region, 0);
    let center = data.ideal[patch.index(20, 20)].unwrap();
    let kind = if center.dir().z < 0.0 { ChartKind::North } else { ChartKind::South };
    // The image is the open hemisphere; stay well inside it so the chart stencil resolves the density.
    let chart = Chart::square(kind, 65, 0.3).unwrap();
    let field = data.to_chart_field(&patch, chart).unwrap();
    let k = curvature(&field);
    let expected = -1.0 / d.cosh().powi(2);
    let vals: Vec<f64> = k.as_masked().valid_values().collect();
    assert!(vals.len() > 1000);
    for x in vals {
        assert!((x - expected).abs() < 1e-4, "{x} vs {expected}");
    }
}

#[test]
fn strongly_concave_patches_are_rejected() {
    // The inner side of a small sphere has principal curvatures -coth r < -1.
    let patch = SurfacePatch::sphere(0.5, 9).unwrap();
    let patch = patch.clone().with_orientation(-patch.orientation);
    assert!(matches!(gauss_map(&fundamental_forms(&patch)), Err(hyperweyl::Error::NotConvex(_))));
}

#[test]
fn obj_export_round_trip_and_forms_csv() {
    let dir = tempfile::tempdir().unwrap();
    let patch = SurfacePatch::perturbed_sphere(1.0, 0.05, 9).unwrap();
    let obj = dir.path().join("p.obj");
    let meta = dir.path().join("p.json");
    write_obj(&patch, std::fs::File::create(&obj).unwrap()).unwrap();
    write_meta(&patch, std::fs::File::create(&meta).unwrap()).unwrap();
    let back = read_obj(std::fs::File::open(&obj).unwrap(), std::fs::File::open(&meta).unwrap()).unwrap();
    for j in 0..patch.nv {
        for i in 0..patch.nu {
            assert!((back.sample_point(i, j) - patch.sample_point(i, j)).norm() < 1e-12);
        }
    }
    assert_eq!((back.nu, back.nv, back.orientation, back.u_range, back.v_range), (patch.nu, patch.nv, patch.orientation, patch.u_range, patch.v_range));

    let forms = fundamental_forms(&patch);
    let mut csv = Vec::new();
    write_forms_csv(&patch, &forms, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("i,j,u,v,E,F,G,L,M,N,k1,k2\n"));
    assert_eq!(text.lines().count(), 1 + forms.valid().count());
}
