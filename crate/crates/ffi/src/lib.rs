//! C ABI over the hyperweyl toolkit.
//!
//! Objects cross the boundary as opaque handles created by `hw_*_new`-style
//! constructors and released with the matching `hw_*_free`. Every fallible
//! call returns an [`HwStatus`]; on failure a message for the calling thread
//! is available from [`hw_last_error`]. Panics never unwind into C: they are
//! caught and reported as `HW_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;
use std::sync::Arc;

use hyperweyl::cli::{self, Command, RunOptions};
use hyperweyl::conformal::{curvature, AnalyticField, ConformalMetricField};
use hyperweyl::cutoff::{build_cutoff, CutoffFunction};
use hyperweyl::domains::{ideal_hull, ConvexHullBoundary, IdealPointSet};
use hyperweyl::hyp::{self, HPoint};
use hyperweyl::revolve::{classify, realize, round_trip_check, ProfileMetric, RevolutionSurface, SurfaceClass};
use hyperweyl::Error;
use nalgebra::{Vector3, Vector4};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    /// A point or query outside the domain of the operation.
    Domain = 5,
    /// A checked property failed (certification, convexity, a pipeline verdict).
    InvariantViolation = 6,
    Panic = 7,
}

/// Classes reported by [`hw_revolution_classify`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwSurfaceClass {
    Sphere = 0,
    Horosphere = 1,
    Equidistant = 2,
    Plane = 3,
    Generic = 4,
}

/// Sampled profile metric `dρ² + f(ρ)² dθ²`.
pub struct HwProfile(ProfileMetric);

/// Surface of revolution realizing a profile.
pub struct HwRevolution(Arc<RevolutionSurface>);

/// Conformal metric field on a chart.
pub struct HwField(ConformalMetricField);

/// Certified cut-off function.
pub struct HwCutoff(CutoffFunction);

/// Ideal convex hull of finitely many points at infinity.
pub struct HwHull(ConvexHullBoundary);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HwStatus {
    match e {
        Error::Parse { .. } => HwStatus::Parse,
        Error::Io(_) => HwStatus::Io,
        Error::OutsideDomain(_) | Error::IllConditioned(_) | Error::OffHyperboloid(_) => HwStatus::Domain,
        Error::Certification { .. } | Error::GaussMapFold(..) | Error::NotConvex(_) => HwStatus::InvariantViolation,
        _ => HwStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (HwStatus, String)>) -> HwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HwStatus::Panic
        }
    }
}

fn lib(e: Error) -> (HwStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HwStatus, String) {
    (HwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HwStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (HwStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str(p: *const c_char, what: &str) -> Result<String, (HwStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (HwStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn doubles<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], (HwStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn hw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Hyperbolic distance between two hyperboloid points `(x₀, x₁, x₂, x₃)`.
///
/// # Safety
/// `a` and `b` point to four doubles; `result` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_distance(a: *const f64, b: *const f64, result: *mut f64) -> HwStatus {
    guard(|| {
        let a = doubles(a, 4, "a")?;
        let b = doubles(b, 4, "b")?;
        let p = HPoint::new(Vector4::from_column_slice(a)).map_err(lib)?;
        let q = HPoint::new(Vector4::from_column_slice(b)).map_err(lib)?;
        *out(result, "result")? = hyp::distance(&p, &q).map_err(lib)?;
        Ok(())
    })
}

/// `log(c_m / c_{m₀})` at angle `theta` for base points at distance `delta`.
#[no_mangle]
pub extern "C" fn hw_visual_log_density(theta: f64, delta: f64) -> f64 {
    hyp::visual_log_density_closed(theta, delta)
}

/// Profile from `n` uniform samples of `f` and `f'` on `[0, length]`.
///
/// # Safety
/// `f` and `fprime` point to `n` doubles; `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_profile_new(
    f: *const f64,
    fprime: *const f64,
    n: usize,
    length: f64,
    handle: *mut *mut HwProfile,
) -> HwStatus {
    guard(|| {
        let fs = doubles(f, n, "f")?.to_vec();
        let ds = doubles(fprime, n, "fprime")?.to_vec();
        let slot = out(handle, "handle")?;
        if n < 2 || !(length > 0.0) {
            return Err((HwStatus::InvalidArgument, format!("need n >= 2 and length > 0, got {n}, {length}")));
        }
        let rho = (0..n).map(|k| length * k as f64 / (n - 1) as f64).collect();
        *slot = boxed(HwProfile(ProfileMetric::new(rho, fs, ds).map_err(lib)?));
        Ok(())
    })
}

/// Profile of the geodesic sphere of radius `radius`, with `n` samples.
///
/// # Safety
/// `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_profile_sphere(radius: f64, n: usize, handle: *mut *mut HwProfile) -> HwStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        *slot = boxed(HwProfile(ProfileMetric::sphere(radius, n).map_err(lib)?));
        Ok(())
    })
}

/// Reads a `rho,f,fprime` CSV file.
///
/// # Safety
/// `path` is NUL-terminated; `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_profile_read_csv(path: *const c_char, handle: *mut *mut HwProfile) -> HwStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let slot = out(handle, "handle")?;
        let file = std::fs::File::open(&path).map_err(|e| (HwStatus::Io, format!("{path}: {e}")))?;
        *slot = boxed(HwProfile(ProfileMetric::read_csv(file).map_err(lib)?));
        Ok(())
    })
}

/// # Safety
/// `handle` is NULL or came from a profile constructor and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hw_profile_free(handle: *mut HwProfile) {
    free(handle)
}

/// Realizes a profile as a surface of revolution.
///
/// # Safety
/// `profile` is a live handle; `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_revolve(profile: *const HwProfile, handle: *mut *mut HwRevolution) -> HwStatus {
    guard(|| {
        let p = as_ref(profile, "profile")?;
        let slot = out(handle, "handle")?;
        *slot = boxed(HwRevolution(Arc::new(realize(&p.0).map_err(lib)?)));
        Ok(())
    })
}

/// Sup and L² residuals of the induced metric against the profile.
///
/// # Safety
/// Both handles are live and were built from each other; `sup` and `l2` are writable.
#[no_mangle]
pub unsafe extern "C" fn hw_revolution_round_trip(
    surface: *const HwRevolution,
    profile: *const HwProfile,
    sup: *mut f64,
    l2: *mut f64,
) -> HwStatus {
    guard(|| {
        let s = as_ref(surface, "surface")?;
        let p = as_ref(profile, "profile")?;
        let r = round_trip_check(&p.0, &s.0).map_err(lib)?;
        *out(sup, "sup")? = r.sup;
        *out(l2, "l2")? = r.l2;
        Ok(())
    })
}

/// Class of the surface; `parameter` receives the radius or distance, or 0.
///
/// # Safety
/// `surface` is live; `class` and `parameter` are writable.
#[no_mangle]
pub unsafe extern "C" fn hw_revolution_classify(
    surface: *const HwRevolution,
    tolerance: f64,
    class: *mut HwSurfaceClass,
    parameter: *mut f64,
) -> HwStatus {
    guard(|| {
        let s = as_ref(surface, "surface")?;
        let c = classify(&s.0, tolerance).map_err(lib)?;
        let (k, x) = match c.class {
            SurfaceClass::Sphere { radius } => (HwSurfaceClass::Sphere, radius),
            SurfaceClass::Horosphere => (HwSurfaceClass::Horosphere, 0.0),
            SurfaceClass::Equidistant { distance } => (HwSurfaceClass::Equidistant, distance),
            SurfaceClass::Plane => (HwSurfaceClass::Plane, 0.0),
            SurfaceClass::Generic => (HwSurfaceClass::Generic, 0.0),
        };
        *out(class, "class")? = k;
        *out(parameter, "parameter")? = x;
        Ok(())
    })
}

/// # Safety
/// `handle` is NULL or came from [`hw_revolve`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hw_revolution_free(handle: *mut HwRevolution) {
    free(handle)
}

/// Samples a registered closed-form field by name on an `n × n` grid.
///
/// # Safety
/// `name` is NUL-terminated; `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_field_registered(name: *const c_char, n: usize, handle: *mut *mut HwField) -> HwStatus {
    guard(|| {
        let name = c_str(name, "name")?;
        let slot = out(handle, "handle")?;
        let field = AnalyticField::by_name(&name).map_err(lib)?.sample(n).map_err(lib)?;
        *slot = boxed(HwField(field));
        Ok(())
    })
}

/// Reads a field file.
///
/// # Safety
/// `path` is NUL-terminated; `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_field_read(path: *const c_char, handle: *mut *mut HwField) -> HwStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let slot = out(handle, "handle")?;
        let file = std::fs::File::open(&path).map_err(|e| (HwStatus::Io, format!("{path}: {e}")))?;
        *slot = boxed(HwField(hyperweyl::conformal::io::read_field(file).map_err(lib)?));
        Ok(())
    })
}

/// Grid dimensions of a field.
///
/// # Safety
/// `field` is live; `nx` and `ny` are writable.
#[no_mangle]
pub unsafe extern "C" fn hw_field_dims(field: *const HwField, nx: *mut usize, ny: *mut usize) -> HwStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        *out(nx, "nx")? = f.0.chart.nx;
        *out(ny, "ny")? = f.0.chart.ny;
        Ok(())
    })
}

/// Curvature on the grid, row-major with `x` fastest; invalid cells get NaN and `valid = 0`.
///
/// # Safety
/// `field` is live; `k` and `valid` point to `len` writable elements, `len = nx·ny`.
#[no_mangle]
pub unsafe extern "C" fn hw_field_curvature(field: *const HwField, k: *mut f64, valid: *mut u8, len: usize) -> HwStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        let (nx, ny) = (f.0.chart.nx, f.0.chart.ny);
        if len != nx * ny {
            return Err((HwStatus::InvalidArgument, format!("buffer length {len} != {}", nx * ny)));
        }
        if k.is_null() || valid.is_null() {
            return Err(null("output buffer"));
        }
        let ks = slice::from_raw_parts_mut(k, len);
        let vs = slice::from_raw_parts_mut(valid, len);
        let c = curvature(&f.0);
        for j in 0..ny {
            for i in 0..nx {
                let ok = *c.valid.get(i, j);
                ks[j * nx + i] = if ok { *c.k.get(i, j) } else { f64::NAN };
                vs[j * nx + i] = u8::from(ok);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `handle` is NULL or came from a field constructor and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hw_field_free(handle: *mut HwField) {
    free(handle)
}

/// Builds and certifies the cut-off with bridge half-width `epsilon`.
///
/// # Safety
/// `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_cutoff_new(epsilon: f64, handle: *mut *mut HwCutoff) -> HwStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        *slot = boxed(HwCutoff(build_cutoff(epsilon).map_err(lib)?));
        Ok(())
    })
}

/// `φ_n(x)` and its first two derivatives.
///
/// # Safety
/// `cutoff` is live; `values` points to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hw_cutoff_eval(cutoff: *const HwCutoff, n: i32, x: f64, values: *mut f64) -> HwStatus {
    guard(|| {
        let c = as_ref(cutoff, "cutoff")?;
        if values.is_null() {
            return Err(null("values"));
        }
        let (p, d, dd) = c.0.phi_n3(n, x);
        slice::from_raw_parts_mut(values, 3).copy_from_slice(&[p, d, dd]);
        Ok(())
    })
}

/// Smallest certification margin over the knots.
///
/// # Safety
/// `cutoff` is live; `margin` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_cutoff_min_margin(cutoff: *const HwCutoff, margin: *mut f64) -> HwStatus {
    guard(|| {
        let c = as_ref(cutoff, "cutoff")?;
        *out(margin, "margin")? = c.0.certify().map_err(lib)?.min_margin;
        Ok(())
    })
}

/// # Safety
/// `handle` is NULL or came from [`hw_cutoff_new`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hw_cutoff_free(handle: *mut HwCutoff) {
    free(handle)
}

/// Hull of `n` points at infinity given as `3n` coordinates (normalized on input).
///
/// # Safety
/// `xyz` points to `3n` doubles; `handle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_hull_new(xyz: *const f64, n: usize, handle: *mut *mut HwHull) -> HwStatus {
    guard(|| {
        let c = doubles(xyz, 3 * n, "xyz")?;
        let slot = out(handle, "handle")?;
        let vs: Vec<Vector3<f64>> = c.chunks_exact(3).map(Vector3::from_column_slice).collect();
        let set = IdealPointSet::from_vectors(&vs).map_err(lib)?;
        *slot = boxed(HwHull(ideal_hull(&set).map_err(lib)?));
        Ok(())
    })
}

/// Face and edge counts.
///
/// # Safety
/// `hull` is live; `faces` and `edges` are writable.
#[no_mangle]
pub unsafe extern "C" fn hw_hull_counts(hull: *const HwHull, faces: *mut usize, edges: *mut usize) -> HwStatus {
    guard(|| {
        let h = as_ref(hull, "hull")?;
        *out(faces, "faces")? = h.0.faces.len();
        *out(edges, "edges")? = h.0.edges.len();
        Ok(())
    })
}

/// Interior dihedral angle at a bending line; NaN for an edge with a single face.
///
/// # Safety
/// `hull` is live; `angle` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_hull_dihedral(hull: *const HwHull, edge: usize, angle: *mut f64) -> HwStatus {
    guard(|| {
        let h = as_ref(hull, "hull")?;
        if edge >= h.0.edges.len() {
            return Err((HwStatus::InvalidArgument, format!("edge {edge} out of range")));
        }
        *out(angle, "angle")? = h.0.interior_dihedral(edge).unwrap_or(f64::NAN);
        Ok(())
    })
}

/// # Safety
/// `handle` is NULL or came from [`hw_hull_new`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hw_hull_free(handle: *mut HwHull) {
    free(handle)
}

/// Runs a pipeline as the command-line tool would; `config` may be NULL for defaults.
///
/// `passed` receives 1 when every check held. A failed verdict is not an error status.
///
/// # Safety
/// `command` and `out_dir` are NUL-terminated; `config` is NULL or NUL-terminated; `passed` is writable.
#[no_mangle]
pub unsafe extern "C" fn hw_run_pipeline(
    command: *const c_char,
    config: *const c_char,
    out_dir: *const c_char,
    deterministic: bool,
    passed: *mut u8,
) -> HwStatus {
    guard(|| {
        let name = c_str(command, "command")?;
        let out_dir = c_str(out_dir, "out_dir")?;
        let config = if config.is_null() { None } else { Some(PathBuf::from(c_str(config, "config")?)) };
        let slot = out(passed, "passed")?;
        let cmd = COMMANDS
            .iter()
            .find(|c| c.name() == name)
            .copied()
            .ok_or_else(|| (HwStatus::InvalidArgument, format!("unknown command '{name}'")))?;
        let opts = RunOptions { config, out: out_dir.into(), deterministic, seed: None, resolution: None };
        let report = cli::run(cmd, &opts).map_err(lib)?;
        *slot = u8::from(report.passed);
        Ok(())
    })
}

const COMMANDS: [Command; 8] = [
    Command::Curvature,
    Command::Decompose,
    Command::Hull,
    Command::Cutoff,
    Command::Approx,
    Command::Surface,
    Command::Revolve,
    Command::Assemble,
];
