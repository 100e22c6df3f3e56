//! Helmholtz kernels and incident plane waves.
//!
//! Everything downstream is built from the outgoing scalar Green's function
//!
//! ```text
//! Φ_k(x, z) = exp(ik|x − z|) / (4π|x − z|),
//! ```
//!
//! its gradient in the first argument, and the dyadic (electric) kernel
//!
//! ```text
//! Π_k(x, z) = k² Φ_k(x, z) I + ∇_x ∇_x Φ_k(x, z),
//! ```
//!
//! which away from x = z satisfies ∇×∇×(Π_k p) = k² Π_k p for every constant
//! vector p. With w = x − z, r = |w|, ŵ = w/r the closed forms used here are
//!
//! ```text
//! ∇_x Φ_k = Φ_k (ik − 1/r) ŵ,
//! Π_k     = Φ_k [(k² + ik/r − 1/r²) I + (−k² − 3ik/r + 3/r²) ŵŵᵀ],
//! ```
//!
//! so trace Π_k = 2k²Φ_k and Π_k is complex-symmetric. At k = 0 the dyadic
//! kernel degenerates to the static dipole field (3ŵŵᵀ − I)/(4πr³), which is
//! what the averaging operator in [`crate::effective`] integrates.
//!
//! Incident illumination is the plane-wave pair
//!
//! ```text
//! E^in(x) = P exp(ik θ·x),      H^in(x) = (θ × P) exp(ik θ·x),
//! ```
//!
//! with unit propagation direction θ and a real polarization P ⊥ θ; the pair
//! solves curl E = ik H, curl H = −ik E exactly.

use num_complex::Complex64;
use thiserror::Error;

use crate::la::{cross3, dot3, norm3, scale3, sub3};

/// Real 3-vector (points, directions, polarizations).
pub type Vec3 = [f64; 3];
/// Complex 3-vector (fields, dipole moments).
pub type CVec3 = [Complex64; 3];
/// Real 3×3 tensor.
pub type Tensor3 = [[f64; 3]; 3];
/// Complex 3×3 tensor.
pub type CTensor3 = [[Complex64; 3]; 3];

/// Two evaluation points closer than this are treated as coincident.
pub const MIN_SEPARATION: f64 = 1e-14;

/// Unit-vector / orthogonality slack accepted by [`PlaneWave::new`].
pub const PLANE_WAVE_TOL: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("wavenumber must be finite and positive, got {0}")]
    InvalidWavenumber(f64),
    #[error(
        "propagation direction must be a unit vector (|θ| = {0}, tolerance {PLANE_WAVE_TOL:e})"
    )]
    DirectionNotUnit(f64),
    #[error("polarization must be orthogonal to the propagation direction (P·θ = {0:e})")]
    PolarizationNotTransverse(f64),
    #[error("polarization vector must be nonzero")]
    ZeroPolarization,
}

/// Positive wavenumber k = 2π/λ of the background medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumber(f64);

impl Wavenumber {
    pub fn new(k: f64) -> Result<Self, KernelError> {
        if !k.is_finite() || k <= 0.0 {
            return Err(KernelError::InvalidWavenumber(k));
        }
        Ok(Self(k))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Incident plane wave: direction θ, polarization P with P·θ = 0.
///
/// Fields are private so the transversality and unit-direction invariants
/// established by [`PlaneWave::new`] cannot be broken after construction.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave {
    k: Wavenumber,
    theta: Vec3,
    polarization: Vec3,
}

impl PlaneWave {
    /// Validates |θ| = 1 and P·θ = 0 (both to [`PLANE_WAVE_TOL`]) and P ≠ 0.
    pub fn new(k: Wavenumber, theta: Vec3, polarization: Vec3) -> Result<Self, KernelError> {
        let theta_norm = norm3(theta);
        if (theta_norm - 1.0).abs() > PLANE_WAVE_TOL {
            return Err(KernelError::DirectionNotUnit(theta_norm));
        }
        let p_norm = norm3(polarization);
        if p_norm == 0.0 {
            return Err(KernelError::ZeroPolarization);
        }
        // Scale-invariant transversality check: a millimeter-long P should not
        // pass just because its absolute projection is small.
        let proj = dot3(polarization, theta) / p_norm;
        if proj.abs() > PLANE_WAVE_TOL {
            return Err(KernelError::PolarizationNotTransverse(proj));
        }
        Ok(Self {
            k,
            theta,
            polarization,
        })
    }

    #[inline]
    pub fn wavenumber(&self) -> Wavenumber {
        self.k
    }

    #[inline]
    pub fn theta(&self) -> Vec3 {
        self.theta
    }

    #[inline]
    pub fn polarization(&self) -> Vec3 {
        self.polarization
    }

    /// (E^in, H^in) at `x`: `P e^{ikθ·x}` and `(θ×P) e^{ikθ·x}`.
    pub fn fields_at(&self, x: Vec3) -> (CVec3, CVec3) {
        let phase = Complex64::new(0.0, self.k.value() * dot3(self.theta, x)).exp();
        let h0 = cross3(self.theta, self.polarization);
        let e = [
            phase * self.polarization[0],
            phase * self.polarization[1],
            phase * self.polarization[2],
        ];
        let h = [phase * h0[0], phase * h0[1], phase * h0[2]];
        (e, h)
    }
}

#[inline]
fn separation(x: Vec3, z: Vec3) -> (Vec3, f64) {
    let w = sub3(x, z);
    let r = norm3(w);
    assert!(
        r > MIN_SEPARATION,
        "kernel evaluated at coincident points: |x - z| = {r:e}"
    );
    (w, r)
}

/// Scalar kernel Φ_k(x, z) = e^{ik|x−z|} / (4π|x−z|).
///
/// `k = 0` is allowed and gives the Laplace kernel 1/(4π|x−z|).
///
/// # Panics
/// If |x − z| ≤ [`MIN_SEPARATION`].
pub fn phi(k: f64, x: Vec3, z: Vec3) -> Complex64 {
    let (_, r) = separation(x, z);
    Complex64::new(0.0, k * r).exp() / (4.0 * std::f64::consts::PI * r)
}

/// Gradient ∇_x Φ_k(x, z) = Φ_k (ik − 1/r) (x − z)/r.
///
/// # Panics
/// If |x − z| ≤ [`MIN_SEPARATION`].
pub fn grad_phi(k: f64, x: Vec3, z: Vec3) -> CVec3 {
    let (w, r) = separation(x, z);
    let phi = Complex64::new(0.0, k * r).exp() / (4.0 * std::f64::consts::PI * r);
    let radial = phi * Complex64::new(-1.0 / r, k);
    let unit = scale3(1.0 / r, w);
    [radial * unit[0], radial * unit[1], radial * unit[2]]
}

/// Dyadic kernel Π_k(x, z) = k² Φ_k I + ∇_x∇_x Φ_k.
///
/// Assembled from the closed form in the module docs; the two scalar
/// coefficients multiply I and ŵŵᵀ respectively, so the result is symmetric
/// by construction and satisfies trace Π_k = 2k²Φ_k.
///
/// # Panics
/// If |x − z| ≤ [`MIN_SEPARATION`].
pub fn pi(k: f64, x: Vec3, z: Vec3) -> CTensor3 {
    let (w, r) = separation(x, z);
    let phi = Complex64::new(0.0, k * r).exp() / (4.0 * std::f64::consts::PI * r);
    let inv_r = 1.0 / r;
    let inv_r2 = inv_r * inv_r;
    // k²Φ I + ∇∇Φ = Φ [(k² − 1/r² + ik/r) I + (3/r² − k² − 3ik/r) ŵŵᵀ]
    let c_iso = phi * Complex64::new(k * k - inv_r2, k * inv_r);
    let c_dir = phi * Complex64::new(3.0 * inv_r2 - k * k, -3.0 * k * inv_r);
    let unit = scale3(inv_r, w);
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // Real product first so out[i][j] == out[j][i] to the last bit.
            out[i][j] = c_dir * (unit[i] * unit[j]);
            if i == j {
                out[i][j] += c_iso;
            }
        }
    }
    out
}
