#ifndef MESOSCATTER_H
#define MESOSCATTER_H

/* Generated by cbindgen from mesoscatter-ffi; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum MsStatus {
  /**
   * Success.
   */
  MS_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  MS_STATUS_NULL_POINTER = 1,
  /**
   * An argument violated a documented precondition.
   */
  MS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The iterative solver stalled before reaching its tolerance.
   */
  MS_STATUS_SOLVER_FAILED = 3,
  /**
   * An internal invariant failed; the library state is still valid.
   */
  MS_STATUS_INTERNAL = 4,
} MsStatus;

/**
 * A rigid cluster of particle centers. Create with `ms_cluster_lattice` or
 * `ms_cluster_from_centers`, release with `ms_cluster_free`.
 */
typedef struct MsCluster MsCluster;

/**
 * The electric/magnetic polarization tensor pair of one particle species.
 */
typedef struct MsPolarization MsPolarization;

/**
 * A solved multiple-scattering system together with everything needed to
 * evaluate its far field.
 */
typedef struct MsSolution MsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; never free it.
 */
const char *ms_version(void);

/**
 * Copy the calling thread's last error message into `buf` (truncated to
 * `cap` - 1 bytes, always NUL-terminated when `cap` > 0). Returns the full
 * message length in bytes, so a second call with a larger buffer can
 * retrieve a truncated message.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be NULL (then only the
 * required length is returned).
 */
size_t ms_last_error_message(char *buf, size_t cap);

/**
 * Build the n x n x n lattice cluster in the unit cube with dilution
 * parameter `c_r` >= 2 (particle radius a = c_r^-1 / n).
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MsStatus ms_cluster_lattice(size_t n, double c_r, struct MsCluster **out);

/**
 * Build a cluster from `count` explicit centers (x0,y0,z0, x1,y1,z1, ...)
 * inside a cube of the given edge `size`, with dilution `c_r`.
 *
 * # Safety
 * `centers` must point to `3 * count` doubles; `out` must be valid.
 */
enum MsStatus ms_cluster_from_centers(const double *centers,
                                      size_t count,
                                      double size,
                                      double c_r,
                                      struct MsCluster **out);

/**
 * Number of particles in the cluster; 0 if `cluster` is NULL.
 *
 * # Safety
 * `cluster` must be NULL or a live handle from a `ms_cluster_*` constructor.
 */
size_t ms_cluster_len(const struct MsCluster *cluster);

/**
 * Release a cluster handle. NULL is a no-op.
 *
 * # Safety
 * `cluster` must be NULL or a live handle; it must not be used afterwards.
 */
void ms_cluster_free(struct MsCluster *cluster);

/**
 * Polarization pair of a unit-ball particle with permittivity `eps` and
 * permeability `mu` (both >= 1).
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MsStatus ms_polarization_sphere(double eps, double mu, struct MsPolarization **out);

/**
 * Polarization pair of an axis-aligned ellipsoid with the given semi-axes.
 *
 * # Safety
 * `semi_axes` must point to 3 doubles; `out` must be valid.
 */
enum MsStatus ms_polarization_ellipsoid(const double *semi_axes,
                                        double eps,
                                        double mu,
                                        struct MsPolarization **out);

/**
 * Release a polarization handle. NULL is a no-op.
 *
 * # Safety
 * `pair` must be NULL or a live handle; it must not be used afterwards.
 */
void ms_polarization_free(struct MsPolarization *pair);

/**
 * Solve the multiple-scattering system for a plane wave with wavenumber
 * `k` > 0, unit propagation direction `theta`, and polarization `p_vec`
 * orthogonal to `theta`. `tol` > 0 is the relative residual target. The
 * solver switches between a dense factorization and a restarted iterative
 * method by system size.
 *
 * # Safety
 * `theta` and `p_vec` must each point to 3 doubles; `cluster` and `pair`
 * must be live handles; `out` must be valid.
 */
enum MsStatus ms_solve(const struct MsCluster *cluster,
                       const struct MsPolarization *pair,
                       double k,
                       const double *theta,
                       const double *p_vec,
                       double tol,
                       struct MsSolution **out);

/**
 * Final relative residual of the solve.
 *
 * # Safety
 * `solution` must be a live handle; `out` must point to one double.
 */
enum MsStatus ms_solution_residual(const struct MsSolution *solution, double *out);

/**
 * Iteration count of the solve (0 for the dense path).
 *
 * # Safety
 * `solution` must be a live handle; `out` must point to one size_t.
 */
enum MsStatus ms_solution_iterations(const struct MsSolution *solution, size_t *out);

/**
 * Release a solution handle. NULL is a no-op.
 *
 * # Safety
 * `solution` must be NULL or a live handle; it must not be used afterwards.
 */
void ms_solution_free(struct MsSolution *solution);

/**
 * Evaluate the scattered far field at `n_directions` unit directions
 * (x0,y0,z0, x1,y1,z1, ...). `out` receives 6 doubles per direction:
 * Re Ex, Im Ex, Re Ey, Im Ey, Re Ez, Im Ez.
 *
 * # Safety
 * `directions` must point to `3 * n_directions` doubles and `out` to
 * `6 * n_directions` writable doubles; `solution` must be a live handle.
 */
enum MsStatus ms_far_field(const struct MsSolution *solution,
                           const double *directions,
                           size_t n_directions,
                           double *out);

/**
 * Effective permittivity and permeability tensors of the medium the cluster
 * homogenizes into, written row-major into `eps_out` and `mu_out` (9 doubles
 * each). `k0_order` is the quadrature order for the averaging tensor; 12 is
 * a good default.
 *
 * # Safety
 * `pair` must be a live handle; `eps_out` and `mu_out` must each point to 9
 * writable doubles.
 */
enum MsStatus ms_effective_tensors(const struct MsPolarization *pair,
                                   double c_r,
                                   size_t k0_order,
                                   double *eps_out,
                                   double *mu_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MESOSCATTER_H */
