use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::*;
use crate::conformal::io::{read_field, write_curvature_csv, write_field};
use crate::conformal::{
    curvature, factor_decomposition, fibonacci_sphere, AnalyticField, Chart, ConformalDomain, ConformalMetricField,
    CurvatureField, Extent, FnDensity, Reduction, SphereAtlas,
};
use crate::cutoff::{
    build_cutoff, curvature_report, disk_datum, disk_datum_window, gradient_bound, ApproxMetricSequence, CutoffFunction,
    ReportOptions,
};
use crate::domains::{
    export_hull, ideal_hull, import_hull, thurston_visual_check, ConformalMap, HullDomain, IdealPointSet, QuasidiskDomain,
};
use crate::error::{Error, Result};
use crate::hyp::{ChartKind, HIsometry, IdealPoint};
use crate::report::{InputDigest, Verdict};
use crate::revolve::{classify, convexity_monitor, realize, round_trip_check, ProfileMetric, RevolutionSurface, ISOMETRY_TOLERANCE};
use crate::surfaces::io::{read_obj, write_forms_csv, write_meta, write_obj};
use crate::surfaces::{
    boundary_data_assembly, curvature_window_check, fundamental_forms, gauss_codazzi_residual, gauss_map, intrinsic_curvature,
    parallel_area_factor, SurfacePatch, WindowMode,
};

/// Inputs, outputs and flags of one pipeline run.
pub struct Context {
    pub config: PipelineConfig,
    pub base: PathBuf,
    pub out: PathBuf,
    pub inputs: Vec<InputDigest>,
    pub artifacts: Vec<String>,
}

impl Context {
    pub fn reduction(&self) -> Reduction {
        if self.config.deterministic {
            Reduction::Sequential
        } else {
            Reduction::Parallel
        }
    }

    /// Reads an input file and records its digest under its path relative to the configuration.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let shown = path.strip_prefix(&self.base).unwrap_or(path);
        self.inputs.push(InputDigest::of_bytes(shown.display().to_string(), &bytes));
        Ok(bytes)
    }

    pub fn write_artifact(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    }
}

fn curvature_csv(chart: &Chart, k: &CurvatureField) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_curvature_csv(chart, k, &mut buf)?;
    Ok(buf)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY, 0), |(lo, hi, n), v| (lo.min(v), hi.max(v), n + 1))
}

fn deviation(values: impl Iterator<Item = f64>, target: f64) -> f64 {
    values.map(|v| (v - target).abs()).fold(0.0, f64::max)
}

pub fn curvature_cmd(ctx: &mut Context, v: &mut Verdict) -> Result<Value> {
    let c = ctx.config.curvature.clone();
    match &c.source {
        CurvatureSource::Sphere { density } => {
            let family = *density;
            let u = move |p: &Vector3<f64>| match family {
                SphereFamily::Round => 0.0,
                SphereFamily::Shift { c } => c,
                SphereFamily::Ellipsoidal { amplitude } => amplitude * (p.z * p.z - 1.0 / 3.0),
            };
            let atlas = SphereAtlas::from_density(&FnDensity(u), c.resolution, c.half_extent)?;
            let (kn, ks) = atlas.curvature();
            ctx.write_artifact("curvature_north.csv", &curvature_csv(&atlas.north.chart, &kn)?)?;
            ctx.write_artifact("curvature_south.csv", &curvature_csv(&atlas.south.chart, &ks)?)?;
            let gb = atlas.gauss_bonnet(ctx.reduction());
            v.at_most("gauss_bonnet.relative_error", gb.relative_error, c.gauss_bonnet_tolerance);
            let all = || kn.as_masked().valid_values().chain(ks.as_masked().valid_values()).collect::<Vec<_>>();
            let (k_min, k_max, cells) = range(all().into_iter());
            let expected = match family {
                SphereFamily::Round => Some(1.0),
                SphereFamily::Shift { c } => Some((-2.0 * c).exp()),
                SphereFamily::Ellipsoidal { .. } => None,
            };
            let max_deviation = expected.map(|k| deviation(all().into_iter(), k));
            if let Some(d) = max_deviation {
                v.at_most("curvature deviation from the closed form", d, c.tolerance);
            }
            Ok(json!({
                "source": "sphere",
                "gauss_bonnet": {
                    "total_curvature": gb.total_curvature,
                    "target": gb.target,
                    "relative_error": gb.relative_error,
                    "area": gb.area,
                },
                "overlap_discrepancy": atlas.overlap_discrepancy(),
                "valid_cells": cells,
                "k_min": k_min,
                "k_max": k_max,
                "expected_k": expected,
                "max_deviation": max_deviation,
            }))
        }
        CurvatureSource::Registered { name } => {
            let field = AnalyticField::by_name(name)?;
            let sampled = field.sample(c.resolution)?;
            let k = curvature(&sampled);
            ctx.write_artifact("curvature.csv", &curvature_csv(&sampled.chart, &k)?)?;
            let study = field.convergence(c.resolution, 2 * c.resolution - 1)?;
            v.at_most("max curvature error", study.coarse.max_error, c.tolerance);
            Ok(json!({ "source": "registered", "field": name, "study": study }))
        }
        CurvatureSource::File { path } => {
            let bytes = ctx.read_input(path)?;
            let field = read_field(bytes.as_slice()).map_err(|e| with_path(e, path))?;
            let k = curvature(&field);
            ctx.write_artifact("curvature.csv", &curvature_csv(&field.chart, &k)?)?;
            let (k_min, k_max, cells) = range(k.as_masked().valid_values());
            v.check(cells > 0, || "no cell has a full stencil".into());
            Ok(json!({
                "source": "file",
                "chart": field.chart,
                "masked_cells": field.mask.count(),
                "valid_cells": cells,
                "k_min": k_min,
                "k_max": k_max,
            }))
        }
    }
}

fn build_domain(d: &DomainConfig) -> Result<QuasidiskDomain> {
    match d {
        DomainConfig::RoundDisk { radius } => QuasidiskDomain::round_disk(*radius),
        DomainConfig::HalfPlane { scale } => QuasidiskDomain::half_plane(*scale),
        DomainConfig::PowerSeries { coefficients, qc_constant_hint } => {
            let coefficients = coefficients.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
            QuasidiskDomain::new(ConformalMap::PowerSeries { coefficients }, ChartKind::North, *qc_constant_hint)
        }
    }
}

pub fn decompose_cmd(ctx: &mut Context, v: &mut Verdict) -> Result<Value> {
    let c = ctx.config.decompose.clone();
    let domain = build_domain(&c.domain)?;
    let field = match &c.field {
        Some(path) => {
            let bytes = ctx.read_input(path)?;
            read_field(bytes.as_slice()).map_err(|e| with_path(e, path))?
        }
        None => {
            if !(c.scale > 0.0) {
                return Err(Error::InvalidArgument(format!("decompose.scale must be positive, got {}", c.scale)));
            }
            let chart = Chart::square(ChartKind::North, c.resolution, c.half_extent)?;
            let shift = c.scale.ln();
            ConformalMetricField::from_fn(chart, |z| domain.hyperbolic_log_density(ChartKind::North, z).ok().map(|h| h + shift))?
        }
    };
    let dec = factor_decomposition(&field, &domain)?;
    let consistency = dec.consistency(&field);
    v.at_most("v + w + x - u", consistency, c.tolerance);
    v.check(dec.bounds.signs_hold(c.tolerance), || {
        format!("sign pattern violated: min v = {:e}, max w = {:e}", dec.bounds.min_v, dec.bounds.max_w)
    });
    let mut csv = String::from("i,j,chart_x,chart_y,u,v,w,x\n");
    for j in 0..field.chart.ny {
        for i in 0..field.chart.nx {
            if *dec.valid.get(i, j) {
                let z = field.chart.point(i, j);
                csv.push_str(&format!(
                    "{i},{j},{},{},{},{},{},{}\n",
                    z.re,
                    z.im,
                    field.u.get(i, j),
                    dec.v.get(i, j),
                    dec.w.get(i, j),
                    dec.x.get(i, j)
                ));
            }
        }
    }
    ctx.write_artifact("decomposition.csv", csv.as_bytes())?;
    Ok(json!({
        "domain": domain,
        "bounds": dec.bounds,
        "consistency": consistency,
        "excluded_cells": dec.excluded,
        "valid_cells": dec.valid.count(),
    }))
}

/// `count` independent uniform points on the sphere.
pub fn random_sphere_points(rng: &mut impl Rng, count: usize) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = p.norm();
        if r > 0.1 && r <= 1.0 {
            out.push(p / r);
        }
    }
    out
}

pub fn hull_cmd(ctx: &mut Context, v: &mut Verdict) -> Result<Value> {
    let c = ctx.config.hull.clone();
    let set = match &c.points {
        PointsConfig::Tetrahedron => IdealPointSet::regular_tetrahedron(),
        PointsConfig::Octahedron => {
            let vs = [Vector3::x(), -Vector3::x(), Vector3::y(), -Vector3::y(), Vector3::z(), -Vector3::z()];
            IdealPointSet::from_vectors(&vs)?
        }
        PointsConfig::Random { count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
            IdealPointSet::from_vectors(&random_sphere_points(&mut rng, *count))?
        }
        PointsConfig::List { points } => {
            IdealPointSet::from_vectors(&points.iter().map(|p| Vector3::from(*p)).collect::<Vec<_>>())?
        }
    };
    let hull = ideal_hull(&set)?;
    let (obj, sidecar) = export_hull(&hull)?;
    ctx.write_artifact("hull.obj", obj.as_bytes())?;
    ctx.write_artifact("hull.json", sidecar.as_bytes())?;
    let reloaded = import_hull(&obj, &sidecar)?;
    v.check(reloaded == hull, || "re-imported hull differs from the exported one".into());
    let convexity = hull.convexity_violation();
    v.at_most("convexity violation", convexity, c.convexity_tolerance);
    let dihedrals: Vec<Option<f64>> = (0..hull.edges.len()).map(|e| hull.interior_dihedral(e)).collect();
    let mut visual = Value::Null;
    if c.visual_samples > 0 {
        let domain = HullDomain::punctured(set.clone())?;
        let (mut worst, mut checked, mut skipped): (f64, usize, usize) = (0.0, 0, 0);
        for p in fibonacci_sphere(c.visual_samples) {
            match thurston_visual_check(&domain, &IdealPoint::new(p)?) {
                Ok(r) => {
                    worst = worst.max(r.residual);
                    checked += 1;
                }
                Err(Error::IllConditioned(_)) | Err(Error::OutsideDomain(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        v.at_most("Thurston/visual residual", worst, c.visual_tolerance);
        visual = json!({ "samples": checked, "skipped": skipped, "max_residual": worst });
    }
    Ok(json!({
        "kind": hull.kind,
        "points": set.len(),
        "faces": hull.faces.len(),
        "edges": hull.edges.len(),
        "interior_dihedrals": dihedrals,
        "convexity_violation": convexity,
        "planarity_residual": hull.planarity_residual(),
        "reimport_identical": reloaded == hull,
        "visual_identity": visual,
    }))
}

pub fn cutoff_cmd(ctx: &mut Context, v: &mut Verdict) -> Result<Value> {
    let c = ctx.config.cutoff.clone();
    let f = CutoffFunction::with_step(c.bridge_epsilon, c.step)?;
    let cert = f.certify()?;
    let stability = f.refinement_stability()?;
    v.check(cert.min_margin >= 0.0, || format!("negative knot margin {:e}", cert.min_margin));
    v.check(cert.min_midpoint_margin >= 0.0, || format!("negative midpoint margin {:e}", cert.min_midpoint_margin));
    v.at_most("margin change under step halving", stability, c.stability_tolerance);
    let mut csv = Vec::new();
    f.write_csv(&mut csv)?;
    ctx.write_artifact("cutoff.csv", &csv)?;
    Ok(json!({ "certification": cert, "refinement_stability": stability }))
}

pub fn approx_cmd(ctx: &mut Context, v: &mut Verdict) -> Result<Value> {
    let c = ctx.config.approx.clone();
    let cutoff = match &c.cutoff {
        Some(path) => {
            let bytes = ctx.read_input(path)?;
            CutoffFunction::read_csv(bytes.as_slice()).map_err(|e| with_path(e, path))?
        }
        None => build_cutoff(c.bridge_epsilon)?,
    };
    let base_file = match &c.base {
        Some(path) => {
            let bytes = ctx.read_input(path)?;
            Some(read_field(bytes.as_slice()).map_err(|e| with_path(e, path))?)
        }
        None => None,
    };
    let disk_k = -1.0 / 1f64.cosh().powi(2);
    let mut reports = Vec::new();
    for n in c.n_min..=c.n_max {
        let (base, reference_k, grad) = match &base_file {
            Some(b) => (b.clone(), None, gradient_bound(b, n as f64, n as f64 + 2.0)),
            None => (disk_datum(disk_datum_window(n, c.resolution)?)?, Some(disk_k), 1.0 / 1f64.cosh()),
        };
        let seq = ApproxMetricSequence::new(base, cutoff.clone());
        let opts = ReportOptions { eps: c.eps, gradient_bound: grad, reference_k, tolerance: c.tolerance };
        let r = curvature_report(&seq, n, opts)?;
        v.check(r.holds, || format!("n = {n}: curvature regimes not verified"));
        v.at_most(&format!("n = {n}: complement deviation"), r.constant.max_deviation, c.complement_tolerance);
        v.check(r.collar_flags == 0, || format!("n = {n}: {} collar cells flagged", r.collar_flags));
        let stationary = seq.stationary_mask(n).count();
        let entry = json!({ "report": r, "stationary_cells": stationary, "domain_cells": seq.base.mask.count() });
        ctx.write_artifact(&format!("approx_n{n}.json"), format!("{}\n", serde_json::to_string_pretty(&entry)?).as_bytes())?;
        reports.push(entry);
    }
    Ok(json!({ "per_n": reports }))
}

fn build_patch(ctx: &mut Context, family: &SurfaceFamily, n: usize) -> Result<SurfacePatch> {
    match family {
        SurfaceFamily::Sphere { radius } => SurfacePatch::sphere(*radius, n),
        SurfaceFamily::Horosphere { half } => SurfacePatch::horosphere(*half, n),
        SurfaceFamily::Equidistant { distance, half } => SurfacePatch::equidistant(*distance, *half, n),
        SurfaceFamily::PerturbedSphere { radius, amplitude } => SurfacePatch::perturbed_sphere(*radius, *amplitude, n),
        SurfaceFamily::Obj { obj, meta } => {
            let o = ctx.read_input(obj)?;
            let m = ctx.read_input(meta)?;
            read_obj(o.as_slice(), m.as_slice()).map_err(|e| with_path(e, obj))
        }
    }
}

fn patch_files(ctx: &mut Context, stem: &str, patch: &SurfacePatch) -> Result<f64> {
    let mut obj = Vec::new();
    write_obj(patch, &mut obj)?;
    let mut meta = Vec::new();
    write_meta(patch, &mut meta)?;
    meta.push(b'\n');
    ctx.write_artifact(&format!("{stem}.obj"), &obj)?;
    ctx.write_artifact(&format!("{stem}.json"), &meta)?;
    let back = read_obj(obj.as_slice(), meta.as_slice())?;
    let mut worst: f64 = 0.0;
    for j in 0..patch.nv {
        for i in 0..patch.nu {
            worst = worst.max((back.sample_point(i, j) - patch.sample_point(i, j)).abs().max());
        }
    }
    Ok(worst)
}

pub fn surface_cmd(ctx: &mut Context, v: &mut Verdict) -> Result<Value> {
    let c = ctx.config.surface.clone();
    let patch = build_patch(ctx, &c.family, c.resolution)?;
    let forms = fundamental_forms(&patch);
    let ks = intrinsic_curvature(&forms);
    let gc = gauss_codazzi_residual(&forms, &ks);
    if patch.is_analytic() {
        v.at_most("Gauss residual", gc.max_gauss, c.gauss_tolerance);
        v.at_most("Codazzi residual", gc.max_codazzi, c.codazzi_tolerance);
    }
    let g = gauss_map(&forms)?;
    let split = forms.valid().map(|s| s.kappa[0] - s.kappa[1]).fold(0.0, f64::max);
    let (k1_min, k1_max, _) = range(forms.valid().map(|s| s.kappa[0]));
    let (k2_min, k2_max, samples) = range(forms.valid().map(|s| s.kappa[1]));
    let (kint_min, kint_max, _) = range(ks.iter().flatten().copied());
    let tube: Vec<Value> = c
        .offsets
        .iter()
        .map(|&t| {
            let (lo, hi, _) = range(forms.valid().map(|s| parallel_area_factor(&s.shape, t)));
            json!({ "t": t, "min": lo, "max": hi })
        })
        .collect();
    let window = match c.window {
        Some(mode) => {
            let intrinsic = matches!(mode, WindowMode::NearUmbilic { .. }).then_some(ks.as_slice());
            let mut r = curvature_window_check(&forms, mode, intrinsic)?;
            r.membership.clear();
            Some(r)
        }
        None => None,
    };
    let mut csv = Vec::new();
    write_forms_csv(&patch, &forms, &mut csv)?;
    ctx.write_artifact("forms.csv", &csv)?;
    let reload = patch_files(ctx, "surface", &patch)?;
    v.at_most("OBJ reload node difference", reload, 1e-12);
    Ok(json!({
        "family": patch.family().map(|f| f.name()),
        "nodes": [patch.nu, patch.nv],
        "samples": samples,
        "excluded": forms.excluded.len(),
        "kappa1": [k1_min, k1_max],
        "kappa2": [k2_min, k2_max],
        "umbilic_split": split,
        "intrinsic_curvature": [kint_min, kint_max],
        "gauss_residual": gc.max_gauss,
        "codazzi_residual": gc.max_codazzi,
        "residuals_checked": gc.checked,
        "gauss_map": { "max_dilatation": g.max_dilatation, "max_deviation_from_conformal": g.max_dilatation - 1.0 },
        "tube_area_factor": tube,
        "window": window,
        "obj_reload_max_difference": reload,
    }))
}

fn build_profile(ctx: &mut Context, p: &ProfileConfig, samples: usize) -> Result<(ProfileMetric, Option<f64>)> {
    Ok(match p {
        ProfileConfig::Sphere { radius } => (ProfileMetric::sphere(*radius, samples)?, Some(1.0 / radius.tanh())),
        ProfileConfig::Flat { length } => (ProfileMetric::flat(*length, samples)?, Some(1.0)),
        ProfileConfig::Plane { length } => (ProfileMetric::plane(*length, samples)?, Some(0.0)),
        ProfileConfig::Equidistant { distance, length } => {
            (ProfileMetric::equidistant(*distance, *length, samples)?, Some(distance.tanh()))
        }
        ProfileConfig::File { path } => {
            let bytes = ctx.read_input(path)?;
            (ProfileMetric::read_csv(bytes.as_slice()).map_err(|e| with_path(e, path))?, None)
        }
    })
}

pub fn revolve_cmd(ctx: &mut Context, v: &mut Verdict) -> Result<Value> {
    let c = ctx.config.revolve.clone();
    let (profile, expected_kappa) = build_profile(ctx, &c.profile, c.samples)?;
    let surface = Arc::new(realize(&profile)?);
    v.at_most("isometry residual", surface.isometry_residual, ISOMETRY_TOLERANCE);
    let rt = round_trip_check(&profile, &surface)?;
    v.at_most("round-trip sup residual", rt.sup, c.tolerance);
    let class = classify(&surface, c.kappa_tolerance)?;
    let convexity = convexity_monitor(&profile, &surface, 1e-7)?;
    let patch = surface.patch(c.angular_samples)?;
    let forms = fundamental_forms(&patch);
    let kappa_error = expected_kappa.map(|k| deviation(forms.valid().flat_map(|s| s.kappa), k));
    if let Some(e) = kappa_error {
        v.at_most("principal curvature error", e, c.kappa_tolerance);
    }
    let mut csv = Vec::new();
    profile.write_csv(&mut csv)?;
    ctx.write_artifact("profile.csv", &csv)?;
    patch_files(ctx, "revolution", &patch)?;
    let (z0, z1) = (surface.z[0], surface.z[surface.len() - 1]);
    Ok(json!({
        "knots": profile.len(),
        "length": profile.length(),
        "isometry_residual": surface.isometry_residual,
        "round_trip": rt,
        "classification": class,
        "expected_kappa": expected_kappa,
        "kappa_error": kappa_error,
        "convexity": convexity,
        "planar_contacts": surface.planar_contact.iter().filter(|&&b| b).count(),
        "axis_extent": [z0, z1],
    }))
}

pub fn assemble_cmd(ctx: &mut Context, v: &mut Verdict) -> Result<Value> {
    let c = ctx.config.assemble.clone();
    let patch = match &c.source {
        AssembleSource::Surface { family, resolution } => build_patch(ctx, family, *resolution)?,
        AssembleSource::Revolve { profile, samples } => {
            let (profile, _) = build_profile(ctx, profile, *samples)?;
            let surface = Arc::new(realize(&profile)?);
            let recenter = HIsometry::translation_to(&RevolutionSurface::axis_point(1.0)).inverse();
            surface.patch_transformed(16, recenter)?
        }
    };
    let data = boundary_data_assembly(&patch, c.region)?;
    let kind = match c.chart.fixed() {
        Some(k) => k,
        None => {
            let probe = data.ideal[patch.index(1, 0)].ok_or_else(|| Error::Degenerate("no Gauss image next to the first row".into()))?;
            if probe.dir().z < 0.0 {
                ChartKind::North
            } else {
                ChartKind::South
            }
        }
    };
    let chart = Chart::new(kind, c.resolution, c.resolution, Extent::square(c.half_extent))?;
    let field = data.to_chart_field(&patch, chart)?;
    let mut buf = Vec::new();
    write_field(&field, &mut buf)?;
    ctx.write_artifact("boundary_field.txt", &buf)?;
    let k = curvature(&field);
    ctx.write_artifact("curvature.csv", &curvature_csv(&chart, &k)?)?;
    let (k_min, k_max, cells) = range(k.as_masked().valid_values());
    v.check(cells > 0, || "no chart cell has a full stencil inside the Gauss image".into());
    let max_deviation = c.expected_curvature.map(|e| deviation(k.as_masked().valid_values(), e));
    if let Some(d) = max_deviation {
        v.at_most("assembled curvature deviation", d, c.tolerance);
    }
    Ok(json!({
        "chart": chart,
        "gauss_images": data.ideal.iter().flatten().count(),
        "in_ideal_region": data.in_ideal_region,
        "coverage": data.coverage,
        "max_dilatation": data.max_dilatation,
        "masked_cells": field.mask.count(),
        "valid_cells": cells,
        "k_min": k_min,
        "k_max": k_max,
        "expected_curvature": c.expected_curvature,
        "max_deviation": max_deviation,
    }))
}
