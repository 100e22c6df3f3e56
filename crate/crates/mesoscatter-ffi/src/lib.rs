//! C ABI for the scattering library.
//!
//! Everything crosses the boundary as an opaque handle plus plain scalars
//! and arrays. Each constructor has a matching `_free`; passing NULL to a
//! `_free` is a no-op. Functions that can fail return [`MsStatus`]; on any
//! non-OK status a human-readable message is stored per thread and can be
//! fetched with [`ms_last_error_message`]. Panics never unwind across the
//! boundary — they are caught and reported as `MS_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use mesoscatter::cluster::Cluster;
use mesoscatter::effective::{compute_c_tensors, compute_k0, effective_parameters};
use mesoscatter::foldy_lax::{discrete_far_field, solve_with, FoldyLaxSolution, SolveMethod};
use mesoscatter::kernels::{PlaneWave, Vec3, Wavenumber};
use mesoscatter::polarization::{PolarizationPair, Shape};
use mesoscatter::solver::GmresConfig;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument violated a documented precondition.
    InvalidArgument = 2,
    /// The iterative solver stalled before reaching its tolerance.
    SolverFailed = 3,
    /// An internal invariant failed; the library state is still valid.
    Internal = 4,
}

/// A rigid cluster of particle centers. Create with `ms_cluster_lattice` or
/// `ms_cluster_from_centers`, release with `ms_cluster_free`.
pub struct MsCluster(Cluster);

/// The electric/magnetic polarization tensor pair of one particle species.
pub struct MsPolarization(PolarizationPair);

/// A solved multiple-scattering system together with everything needed to
/// evaluate its far field.
pub struct MsSolution {
    cluster: Cluster,
    pair: PolarizationPair,
    k: Wavenumber,
    solution: FoldyLaxSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(message: impl AsRef<str>) {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = message.as_ref().as_bytes().to_vec();
    });
}

fn fail(status: MsStatus, message: impl AsRef<str>) -> MsStatus {
    set_error(message);
    status
}

// Wraps a function body so a panic surfaces as a status code instead of
// unwinding into the caller.
fn guarded(body: impl FnOnce() -> MsStatus) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(MsStatus::Internal, format!("internal panic: {msg}"))
        }
    }
}

// NULL checks for output parameters; reads of `out` happen only after this.
macro_rules! require {
    ($ptr:expr, $name:literal) => {
        if $ptr.is_null() {
            return fail(MsStatus::NullPointer, concat!($name, " is NULL"));
        }
    };
}

/// Library version as a static NUL-terminated string; never free it.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the calling thread's last error message into `buf` (truncated to
/// `cap` - 1 bytes, always NUL-terminated when `cap` > 0). Returns the full
/// message length in bytes, so a second call with a larger buffer can
/// retrieve a truncated message.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be NULL (then only the
/// required length is returned).
#[no_mangle]
pub unsafe extern "C" fn ms_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Build the n x n x n lattice cluster in the unit cube with dilution
/// parameter `c_r` >= 2 (particle radius a = c_r^-1 / n).
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn ms_cluster_lattice(
    n: usize,
    c_r: f64,
    out: *mut *mut MsCluster,
) -> MsStatus {
    guarded(|| {
        require!(out, "out");
        match Cluster::lattice(n, c_r) {
            Ok(cluster) => {
                unsafe { *out = Box::into_raw(Box::new(MsCluster(cluster))) };
                MsStatus::Ok
            }
            Err(e) => fail(MsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Build a cluster from `count` explicit centers (x0,y0,z0, x1,y1,z1, ...)
/// inside a cube of the given edge `size`, with dilution `c_r`.
///
/// # Safety
/// `centers` must point to `3 * count` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ms_cluster_from_centers(
    centers: *const f64,
    count: usize,
    size: f64,
    c_r: f64,
    out: *mut *mut MsCluster,
) -> MsStatus {
    guarded(|| {
        require!(out, "out");
        require!(centers, "centers");
        let flat = unsafe { slice::from_raw_parts(centers, 3 * count) };
        let points: Vec<Vec3> = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        match Cluster::from_centers(points, size, c_r) {
            Ok(cluster) => {
                unsafe { *out = Box::into_raw(Box::new(MsCluster(cluster))) };
                MsStatus::Ok
            }
            Err(e) => fail(MsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Number of particles in the cluster; 0 if `cluster` is NULL.
///
/// # Safety
/// `cluster` must be NULL or a live handle from a `ms_cluster_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn ms_cluster_len(cluster: *const MsCluster) -> usize {
    if cluster.is_null() {
        return 0;
    }
    unsafe { (*cluster).0.len() }
}

/// Release a cluster handle. NULL is a no-op.
///
/// # Safety
/// `cluster` must be NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ms_cluster_free(cluster: *mut MsCluster) {
    if !cluster.is_null() {
        drop(unsafe { Box::from_raw(cluster) });
    }
}

/// Polarization pair of a unit-ball particle with permittivity `eps` and
/// permeability `mu` (both >= 1).
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn ms_polarization_sphere(
    eps: f64,
    mu: f64,
    out: *mut *mut MsPolarization,
) -> MsStatus {
    guarded(|| {
        require!(out, "out");
        match PolarizationPair::for_shape(&Shape::Sphere, eps, mu) {
            Ok(pair) => {
                unsafe { *out = Box::into_raw(Box::new(MsPolarization(pair))) };
                MsStatus::Ok
            }
            Err(e) => fail(MsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Polarization pair of an axis-aligned ellipsoid with the given semi-axes.
///
/// # Safety
/// `semi_axes` must point to 3 doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ms_polarization_ellipsoid(
    semi_axes: *const f64,
    eps: f64,
    mu: f64,
    out: *mut *mut MsPolarization,
) -> MsStatus {
    guarded(|| {
        require!(out, "out");
        require!(semi_axes, "semi_axes");
        let axes = unsafe { slice::from_raw_parts(semi_axes, 3) };
        let shape = Shape::Ellipsoid {
            semi_axes: [axes[0], axes[1], axes[2]],
        };
        match PolarizationPair::for_shape(&shape, eps, mu) {
            Ok(pair) => {
                unsafe { *out = Box::into_raw(Box::new(MsPolarization(pair))) };
                MsStatus::Ok
            }
            Err(e) => fail(MsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Release a polarization handle. NULL is a no-op.
///
/// # Safety
/// `pair` must be NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ms_polarization_free(pair: *mut MsPolarization) {
    if !pair.is_null() {
        drop(unsafe { Box::from_raw(pair) });
    }
}

/// Solve the multiple-scattering system for a plane wave with wavenumber
/// `k` > 0, unit propagation direction `theta`, and polarization `p_vec`
/// orthogonal to `theta`. `tol` > 0 is the relative residual target. The
/// solver switches between a dense factorization and a restarted iterative
/// method by system size.
///
/// # Safety
/// `theta` and `p_vec` must each point to 3 doubles; `cluster` and `pair`
/// must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ms_solve(
    cluster: *const MsCluster,
    pair: *const MsPolarization,
    k: f64,
    theta: *const f64,
    p_vec: *const f64,
    tol: f64,
    out: *mut *mut MsSolution,
) -> MsStatus {
    guarded(|| {
        require!(out, "out");
        require!(cluster, "cluster");
        require!(pair, "pair");
        require!(theta, "theta");
        require!(p_vec, "p_vec");
        if !(tol > 0.0) {
            return fail(MsStatus::InvalidArgument, "tol must be positive");
        }
        let cluster = unsafe { &(*cluster).0 };
        let pair = unsafe { (*pair).0 };
        let theta = unsafe { slice::from_raw_parts(theta, 3) };
        let p_vec = unsafe { slice::from_raw_parts(p_vec, 3) };
        let wavenumber = match Wavenumber::new(k) {
            Ok(w) => w,
            Err(e) => return fail(MsStatus::InvalidArgument, e.to_string()),
        };
        let pw = match PlaneWave::new(
            wavenumber,
            [theta[0], theta[1], theta[2]],
            [p_vec[0], p_vec[1], p_vec[2]],
        ) {
            Ok(pw) => pw,
            Err(e) => return fail(MsStatus::InvalidArgument, e.to_string()),
        };
        let gmres = GmresConfig {
            tol,
            ..GmresConfig::default()
        };
        match solve_with(cluster, &pair, &pw, SolveMethod::Auto, &gmres) {
            Ok(solution) => {
                let handle = MsSolution {
                    cluster: cluster.clone(),
                    pair,
                    k: wavenumber,
                    solution,
                };
                unsafe { *out = Box::into_raw(Box::new(handle)) };
                MsStatus::Ok
            }
            Err(e) => fail(MsStatus::SolverFailed, e.to_string()),
        }
    })
}

/// Final relative residual of the solve.
///
/// # Safety
/// `solution` must be a live handle; `out` must point to one double.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_residual(
    solution: *const MsSolution,
    out: *mut f64,
) -> MsStatus {
    guarded(|| {
        require!(solution, "solution");
        require!(out, "out");
        unsafe { *out = (*solution).solution.residual_norm };
        MsStatus::Ok
    })
}

/// Iteration count of the solve (0 for the dense path).
///
/// # Safety
/// `solution` must be a live handle; `out` must point to one size_t.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_iterations(
    solution: *const MsSolution,
    out: *mut usize,
) -> MsStatus {
    guarded(|| {
        require!(solution, "solution");
        require!(out, "out");
        unsafe { *out = (*solution).solution.solver_iterations };
        MsStatus::Ok
    })
}

/// Release a solution handle. NULL is a no-op.
///
/// # Safety
/// `solution` must be NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_free(solution: *mut MsSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// Evaluate the scattered far field at `n_directions` unit directions
/// (x0,y0,z0, x1,y1,z1, ...). `out` receives 6 doubles per direction:
/// Re Ex, Im Ex, Re Ey, Im Ey, Re Ez, Im Ez.
///
/// # Safety
/// `directions` must point to `3 * n_directions` doubles and `out` to
/// `6 * n_directions` writable doubles; `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_far_field(
    solution: *const MsSolution,
    directions: *const f64,
    n_directions: usize,
    out: *mut f64,
) -> MsStatus {
    guarded(|| {
        require!(solution, "solution");
        require!(directions, "directions");
        require!(out, "out");
        let handle = unsafe { &*solution };
        let flat = unsafe { slice::from_raw_parts(directions, 3 * n_directions) };
        let dirs: Vec<Vec3> = flat.chunks_exact(3).map(|d| [d[0], d[1], d[2]]).collect();
        let far = match discrete_far_field(
            &handle.solution,
            &handle.cluster,
            &handle.pair,
            handle.k,
            &dirs,
        ) {
            Ok(far) => far,
            Err(e) => return fail(MsStatus::InvalidArgument, e.to_string()),
        };
        let out = unsafe { slice::from_raw_parts_mut(out, 6 * n_directions) };
        for (i, value) in far.values.iter().enumerate() {
            for c in 0..3 {
                out[6 * i + 2 * c] = value[c].re;
                out[6 * i + 2 * c + 1] = value[c].im;
            }
        }
        MsStatus::Ok
    })
}

/// Effective permittivity and permeability tensors of the medium the cluster
/// homogenizes into, written row-major into `eps_out` and `mu_out` (9 doubles
/// each). `k0_order` is the quadrature order for the averaging tensor; 12 is
/// a good default.
///
/// # Safety
/// `pair` must be a live handle; `eps_out` and `mu_out` must each point to 9
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ms_effective_tensors(
    pair: *const MsPolarization,
    c_r: f64,
    k0_order: usize,
    eps_out: *mut f64,
    mu_out: *mut f64,
) -> MsStatus {
    guarded(|| {
        require!(pair, "pair");
        require!(eps_out, "eps_out");
        require!(mu_out, "mu_out");
        if k0_order == 0 {
            return fail(MsStatus::InvalidArgument, "k0_order must be positive");
        }
        let pair = unsafe { &(*pair).0 };
        let k0 = compute_k0(k0_order);
        let tensors = match compute_c_tensors(pair, c_r, &k0) {
            Ok(t) => t,
            Err(e) => return fail(MsStatus::InvalidArgument, e.to_string()),
        };
        let params = effective_parameters(&tensors, pair, c_r);
        let eps_out = unsafe { slice::from_raw_parts_mut(eps_out, 9) };
        let mu_out = unsafe { slice::from_raw_parts_mut(mu_out, 9) };
        for i in 0..3 {
            for j in 0..3 {
                eps_out[3 * i + j] = params.eps_ring[i][j];
                mu_out[3 * i + j] = params.mu_ring[i][j];
            }
        }
        MsStatus::Ok
    })
}
