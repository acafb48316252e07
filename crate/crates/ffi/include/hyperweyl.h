#ifndef HYPERWEYL_H
#define HYPERWEYL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum HwStatus {
  HW_STATUS_OK = 0,
  HW_STATUS_NULL_POINTER = 1,
  HW_STATUS_INVALID_ARGUMENT = 2,
  HW_STATUS_PARSE = 3,
  HW_STATUS_IO = 4,
  /*
   A point or query outside the domain of the operation.
   */
  HW_STATUS_DOMAIN = 5,
  /*
   A checked property failed (certification, convexity, a pipeline verdict).
   */
  HW_STATUS_INVARIANT_VIOLATION = 6,
  HW_STATUS_PANIC = 7,
} HwStatus;

/*
 Classes reported by [`hw_revolution_classify`].
 */
typedef enum HwSurfaceClass {
  HW_SURFACE_CLASS_SPHERE = 0,
  HW_SURFACE_CLASS_HOROSPHERE = 1,
  HW_SURFACE_CLASS_EQUIDISTANT = 2,
  HW_SURFACE_CLASS_PLANE = 3,
  HW_SURFACE_CLASS_GENERIC = 4,
} HwSurfaceClass;

/*
 Certified cut-off function.
 */
typedef struct HwCutoff HwCutoff;

/*
 Conformal metric field on a chart.
 */
typedef struct HwField HwField;

/*
 Ideal convex hull of finitely many points at infinity.
 */
typedef struct HwHull HwHull;

/*
 Sampled profile metric `dρ² + f(ρ)² dθ²`.
 */
typedef struct HwProfile HwProfile;

/*
 Surface of revolution realizing a profile.
 */
typedef struct HwRevolution HwRevolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the next failing call.
 */
const char *hw_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *hw_version(void);

/*
 Hyperbolic distance between two hyperboloid points `(x₀, x₁, x₂, x₃)`.

 # Safety
 `a` and `b` point to four doubles; `result` is writable.
 */
enum HwStatus hw_distance(const double *a, const double *b, double *result);

/*
 `log(c_m / c_{m₀})` at angle `theta` for base points at distance `delta`.
 */
double hw_visual_log_density(double theta, double delta);

/*
 Profile from `n` uniform samples of `f` and `f'` on `[0, length]`.

 # Safety
 `f` and `fprime` point to `n` doubles; `handle` is writable.
 */
enum HwStatus hw_profile_new(const double *f,
                             const double *fprime,
                             size_t n,
                             double length,
                             struct HwProfile **handle);

/*
 Profile of the geodesic sphere of radius `radius`, with `n` samples.

 # Safety
 `handle` is writable.
 */
enum HwStatus hw_profile_sphere(double radius, size_t n, struct HwProfile **handle);

/*
 Reads a `rho,f,fprime` CSV file.

 # Safety
 `path` is NUL-terminated; `handle` is writable.
 */
enum HwStatus hw_profile_read_csv(const char *path, struct HwProfile **handle);

/*
 # Safety
 `handle` is NULL or came from a profile constructor and is not used afterwards.
 */
void hw_profile_free(struct HwProfile *handle);

/*
 Realizes a profile as a surface of revolution.

 # Safety
 `profile` is a live handle; `handle` is writable.
 */
enum HwStatus hw_revolve(const struct HwProfile *profile, struct HwRevolution **handle);

/*
 Sup and L² residuals of the induced metric against the profile.

 # Safety
 Both handles are live and were built from each other; `sup` and `l2` are writable.
 */
enum HwStatus hw_revolution_round_trip(const struct HwRevolution *surface,
                                       const struct HwProfile *profile,
                                       double *sup,
                                       double *l2);

/*
 Class of the surface; `parameter` receives the radius or distance, or 0.

 # Safety
 `surface` is live; `class` and `parameter` are writable.
 */
enum HwStatus hw_revolution_classify(const struct HwRevolution *surface,
                                     double tolerance,
                                     enum HwSurfaceClass *class_,
                                     double *parameter);

/*
 # Safety
 `handle` is NULL or came from [`hw_revolve`] and is not used afterwards.
 */
void hw_revolution_free(struct HwRevolution *handle);

/*
 Samples a registered closed-form field by name on an `n × n` grid.

 # Safety
 `name` is NUL-terminated; `handle` is writable.
 */
enum HwStatus hw_field_registered(const char *name, size_t n, struct HwField **handle);

/*
 Reads a field file.

 # Safety
 `path` is NUL-terminated; `handle` is writable.
 */
enum HwStatus hw_field_read(const char *path, struct HwField **handle);

/*
 Grid dimensions of a field.

 # Safety
 `field` is live; `nx` and `ny` are writable.
 */
enum HwStatus hw_field_dims(const struct HwField *field, size_t *nx, size_t *ny);

/*
 Curvature on the grid, row-major with `x` fastest; invalid cells get NaN and `valid = 0`.

 # Safety
 `field` is live; `k` and `valid` point to `len` writable elements, `len = nx·ny`.
 */
enum HwStatus hw_field_curvature(const struct HwField *field,
                                 double *k,
                                 uint8_t *valid,
                                 size_t len);

/*
 # Safety
 `handle` is NULL or came from a field constructor and is not used afterwards.
 */
void hw_field_free(struct HwField *handle);

/*
 Builds and certifies the cut-off with bridge half-width `epsilon`.

 # Safety
 `handle` is writable.
 */
enum HwStatus hw_cutoff_new(double epsilon, struct HwCutoff **handle);

/*
 `φ_n(x)` and its first two derivatives.

 # Safety
 `cutoff` is live; `values` points to three writable doubles.
 */
enum HwStatus hw_cutoff_eval(const struct HwCutoff *cutoff, int32_t n, double x, double *values);

/*
 Smallest certification margin over the knots.

 # Safety
 `cutoff` is live; `margin` is writable.
 */
enum HwStatus hw_cutoff_min_margin(const struct HwCutoff *cutoff, double *margin);

/*
 # Safety
 `handle` is NULL or came from [`hw_cutoff_new`] and is not used afterwards.
 */
void hw_cutoff_free(struct HwCutoff *handle);

/*
 Hull of `n` points at infinity given as `3n` coordinates (normalized on input).

 # Safety
 `xyz` points to `3n` doubles; `handle` is writable.
 */
enum HwStatus hw_hull_new(const double *xyz, size_t n, struct HwHull **handle);

/*
 Face and edge counts.

 # Safety
 `hull` is live; `faces` and `edges` are writable.
 */
enum HwStatus hw_hull_counts(const struct HwHull *hull, size_t *faces, size_t *edges);

/*
 Interior dihedral angle at a bending line; NaN for an edge with a single face.

 # Safety
 `hull` is live; `angle` is writable.
 */
enum HwStatus hw_hull_dihedral(const struct HwHull *hull, size_t edge, double *angle);

/*
 # Safety
 `handle` is NULL or came from [`hw_hull_new`] and is not used afterwards.
 */
void hw_hull_free(struct HwHull *handle);

/*
 Runs a pipeline as the command-line tool would; `config` may be NULL for defaults.

 `passed` receives 1 when every check held. A failed verdict is not an error status.

 # Safety
 `command` and `out_dir` are NUL-terminated; `config` is NULL or NUL-terminated; `passed` is writable.
 */
enum HwStatus hw_run_pipeline(const char *command,
                              const char *config,
                              const char *out_dir,
                              bool deterministic,
                              uint8_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERWEYL_H */
