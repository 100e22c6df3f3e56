//! Polarization tensors of the reference particle shape.
//!
//! A particle occupying a·B (B the reference shape, here a ball or an
//! ellipsoid of semi-axes O(1)) responds to a locally constant field through
//! its polarization tensor. For an ellipsoid with semi-axes (a₁, a₂, a₃) and
//! scalar contrast τ > 1 the tensor is diagonal in the axis frame,
//!
//! ```text
//! P_ii = |B| (τ − 1) / (1 + L_i (τ − 1)),     |B| = (4π/3) a₁a₂a₃,
//! ```
//!
//! with the depolarization factors
//!
//! ```text
//! L_i = (a₁a₂a₃ / 2) ∫₀^∞ ds / [(s + a_i²) √((s+a₁²)(s+a₂²)(s+a₃²))],
//! ```
//!
//! which satisfy L₁ + L₂ + L₃ = 1. The ball specializes to L_i = 1/3 and
//! P = 3|B|(τ−1)/(τ+2)·I — the Clausius-Mossotti form. The same formulas
//! serve the electric tensor (τ = relative permittivity) and the magnetic
//! one (τ = relative permeability).
//!
//! Contrasts are restricted to τ ≥ 1: for τ > 1 every tensor produced here
//! is symmetric positive-definite (which the interaction bounds downstream
//! assume), and τ = 1 degenerates to the zero tensor — no scatterer.

use thiserror::Error;

use crate::kernels::Tensor3;
use crate::la::{asym3, mat_scale, mat_sub, spectral_norm3, sym_eigenvalues, IDENTITY3};
use crate::quad::adaptive_simpson;

#[derive(Debug, Error, PartialEq)]
pub enum PolarizationError {
    #[error("contrast must be finite and at least 1, got {0}")]
    InvalidContrast(f64),
    #[error("semi-axes must be finite and positive, got {0:?}")]
    InvalidAxes([f64; 3]),
    #[error("{0} tensor is not symmetric positive definite")]
    NotSpd(&'static str),
    #[error("contrast metadata inconsistent: {0}")]
    InconsistentBounds(&'static str),
}

/// Reference particle shape, scaled by the particle size a downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Unit ball (|B| = 4π/3).
    Sphere,
    /// Ellipsoid with the given semi-axes, aligned with the lattice axes.
    Ellipsoid { semi_axes: [f64; 3] },
}

/// Depolarization factors L of an ellipsoid, in axis order.
///
/// Evaluated by mapping s = u/(1−u) onto the unit interval and integrating
/// adaptively; the result satisfies ΣL_i = 1 to the quadrature tolerance.
pub fn depolarization_factors(semi_axes: [f64; 3]) -> Result<[f64; 3], PolarizationError> {
    if semi_axes.iter().any(|&a| !a.is_finite() || a <= 0.0) {
        return Err(PolarizationError::InvalidAxes(semi_axes));
    }
    let [a1, a2, a3] = semi_axes;
    let front = a1 * a2 * a3 / 2.0;
    let mut out = [0.0; 3];
    for (i, li) in out.iter_mut().enumerate() {
        let ai2 = semi_axes[i] * semi_axes[i];
        // u → 1 sends s → ∞; the integrand decays like (1−u)^{1/2} there.
        let f = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let s = u / (1.0 - u);
            let jac = 1.0 / ((1.0 - u) * (1.0 - u));
            let root = ((s + a1 * a1) * (s + a2 * a2) * (s + a3 * a3)).sqrt();
            jac / ((s + ai2) * root)
        };
        *li = front * adaptive_simpson(&f, 0.0, 1.0, 1e-13);
    }
    Ok(out)
}

/// Polarization tensor of the unit ball at contrast τ: 3|B|(τ−1)/(τ+2)·I.
pub fn sphere_polarization(contrast: f64) -> Result<Tensor3, PolarizationError> {
    check_contrast(contrast)?;
    let b = 4.0 * std::f64::consts::PI / 3.0;
    Ok(mat_scale(
        3.0 * b * (contrast - 1.0) / (contrast + 2.0),
        &IDENTITY3,
    ))
}

/// Polarization tensor of an axis-aligned ellipsoid at contrast τ.
pub fn ellipsoid_polarization(
    semi_axes: [f64; 3],
    contrast: f64,
) -> Result<Tensor3, PolarizationError> {
    check_contrast(contrast)?;
    let l = depolarization_factors(semi_axes)?;
    let vol = 4.0 * std::f64::consts::PI / 3.0 * semi_axes[0] * semi_axes[1] * semi_axes[2];
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        t[i][i] = vol * (contrast - 1.0) / (1.0 + l[i] * (contrast - 1.0));
    }
    Ok(t)
}

/// Polarization tensor of `shape` at contrast τ.
pub fn polarization_tensor(shape: &Shape, contrast: f64) -> Result<Tensor3, PolarizationError> {
    match *shape {
        Shape::Sphere => sphere_polarization(contrast),
        Shape::Ellipsoid { semi_axes } => ellipsoid_polarization(semi_axes, contrast),
    }
}

fn check_contrast(contrast: f64) -> Result<(), PolarizationError> {
    if !contrast.is_finite() || contrast < 1.0 {
        return Err(PolarizationError::InvalidContrast(contrast));
    }
    Ok(())
}

/// Rescale a reference-shape tensor to a particle of size a: [P_D] = a³[P₀].
pub fn scale_to_particle(p0: &Tensor3, a: f64) -> Tensor3 {
    assert!(a > 0.0 && a.is_finite(), "particle size must be positive");
    mat_scale(a * a * a, p0)
}

/// Extreme eigenvalues (λ⁻, λ⁺) of a symmetric tensor.
pub fn spectral_bounds(t: &Tensor3) -> (f64, f64) {
    let ev = sym_eigenvalues(t);
    (ev[0], ev[2])
}

/// The electric/magnetic polarization tensor pair of one particle species.
#[derive(Debug, Clone, Copy)]
pub struct PolarizationPair {
    pub electric: Tensor3,
    pub magnetic: Tensor3,
}

/// Symmetric (to 1e-12, relative) with strictly positive eigenvalues.
fn check_spd(t: &Tensor3, label: &'static str) -> Result<(), PolarizationError> {
    let scale = spectral_norm3(t).max(1e-300);
    if asym3(t) > 1e-12 * scale || sym_eigenvalues(t)[0] <= 0.0 {
        return Err(PolarizationError::NotSpd(label));
    }
    Ok(())
}

impl PolarizationPair {
    /// Both tensors for one shape: τ_ε the permittivity contrast, τ_μ the
    /// permeability contrast.
    pub fn for_shape(
        shape: &Shape,
        eps_contrast: f64,
        mu_contrast: f64,
    ) -> Result<Self, PolarizationError> {
        Ok(Self {
            electric: polarization_tensor(shape, eps_contrast)?,
            magnetic: polarization_tensor(shape, mu_contrast)?,
        })
    }

    /// User-supplied tensors (e.g. anisotropic contrasts on a shape without
    /// a closed form). Validated for symmetry and positive definiteness
    /// only — there is no shape to check them against.
    pub fn custom(electric: Tensor3, magnetic: Tensor3) -> Result<Self, PolarizationError> {
        check_spd(&electric, "electric polarization")?;
        check_spd(&magnetic, "magnetic polarization")?;
        Ok(Self { electric, magnetic })
    }

    /// λ⁺ = largest eigenvalue across both tensors; the interaction bounds
    /// are phrased in terms of this single number.
    pub fn lambda_plus(&self) -> f64 {
        spectral_bounds(&self.electric)
            .1
            .max(spectral_bounds(&self.magnetic).1)
    }

    /// λ⁻ = smallest eigenvalue across both tensors.
    pub fn lambda_minus(&self) -> f64 {
        spectral_bounds(&self.electric)
            .0
            .min(spectral_bounds(&self.magnetic).0)
    }
}

/// Material contrasts ε_r, μ_r together with their declared a-priori
/// bounds: c_inf caps ‖K − I‖ for both materials, while c_eps_minus and
/// c_mu_minus floor the smallest eigenvalue of K − I.
///
/// The bounds are user-declared metadata, not computed quantities;
/// [`ContrastSpec::validate`] checks that the declaration is consistent
/// with the supplied tensors.
#[derive(Debug, Clone, Copy)]
pub struct ContrastSpec {
    pub eps_r: Tensor3,
    pub mu_r: Tensor3,
    pub c_inf: f64,
    pub c_eps_minus: f64,
    pub c_mu_minus: f64,
}

impl ContrastSpec {
    pub fn validate(&self) -> Result<(), PolarizationError> {
        check_spd(&self.eps_r, "eps_r")?;
        check_spd(&self.mu_r, "mu_r")?;
        if !(self.c_eps_minus > 0.0) || !(self.c_mu_minus > 0.0) {
            return Err(PolarizationError::InconsistentBounds(
                "coercivity constants must be positive",
            ));
        }
        let eps_c = mat_sub(&self.eps_r, &IDENTITY3);
        let mu_c = mat_sub(&self.mu_r, &IDENTITY3);
        if spectral_norm3(&eps_c) > self.c_inf || spectral_norm3(&mu_c) > self.c_inf {
            return Err(PolarizationError::InconsistentBounds(
                "a contrast exceeds the declared sup-norm bound c_inf",
            ));
        }
        if sym_eigenvalues(&eps_c)[0] < self.c_eps_minus {
            return Err(PolarizationError::InconsistentBounds(
                "eps_r - I falls below the declared coercivity floor",
            ));
        }
        if sym_eigenvalues(&mu_c)[0] < self.c_mu_minus {
            return Err(PolarizationError::InconsistentBounds(
                "mu_r - I falls below the declared coercivity floor",
            ));
        }
        Ok(())
    }
}
