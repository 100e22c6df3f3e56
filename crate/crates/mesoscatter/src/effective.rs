//! Averaging operator, corrected polarization tensors, effective parameters.
//!
//! When the cluster is replaced by a homogeneous medium, each particle feels
//! its neighbours through the cube it owns. The averaging operator on
//! constant fields,
//!
//! ```text
//! K⁰ = (1/|S|) ∫_Ω ∫_S Π₀(x, z) dx dz,
//! ```
//!
//! with Ω the origin-centered cube of edge 2 and S its inscribed unit ball,
//! is scale-invariant (both regions dilate together against the −3-homogeneous
//! static kernel) and cubic symmetry forces K⁰ = −I/3. The corrected tensors
//!
//! ```text
//! [Cᵀ] = (I − c_r⁻³ [P₀] K⁰)⁻¹ [P₀]
//! ```
//!
//! then fold the first self-consistent interaction into the bare polarization
//! — with K⁰ = −I/3 this is exactly the Clausius-Mossotti/Maxwell-Garnett
//! correction — and the effective medium parameters are
//!
//! ```text
//! ε̊ = I + c_r⁻³ [Cᵀ_ε]   (corrected),    ε̊ = I + c_r⁻³ [P₀^ε]   (leading),
//! ```
//!
//! identically for μ̊. The two differ by O(c_r⁻⁶).

use thiserror::Error;

use crate::kernels::Tensor3;
use crate::la::{
    frob3, inverse3, mat_add, mat_scale, mat_sub, matmul3, spectral_norm3, sym_eigenvalues,
    sym_sqrt3, IDENTITY3,
};
use crate::polarization::PolarizationPair;
use crate::quad::gauss_legendre;

#[derive(Debug, Error, PartialEq)]
pub enum EffectiveError {
    #[error("dilution ratio c_r must be >= 1 and finite, got {0}")]
    InvalidRatio(f64),
    #[error(
        "interaction series does not contract: spectral radius of c_r⁻³[P₀]K⁰ is {0} (need < 1)"
    )]
    NotContractive(f64),
}

/// Spectral radius of scale·[P₀]K⁰ for symmetric PSD [P₀]. The product is
/// similar to the symmetric matrix √P₀ K⁰ √P₀, so the reliable symmetric
/// eigensolver applies (the nonsymmetric Schur reduction stalls on exactly
/// structured matrices such as the zero tensor of a zero-contrast pair).
fn product_radius(p0: &Tensor3, k0: &Tensor3, scale: f64) -> f64 {
    let s = sym_sqrt3(p0);
    let c = mat_scale(scale, &matmul3(&matmul3(&s, k0), &s));
    let ev = sym_eigenvalues(&c);
    ev[0].abs().max(ev[2].abs())
}

/// The averaging operator K⁰ as a 3×3 matrix, by quadrature.
///
/// The inner ball integral is analytic: ∫_S Π₀(x, z) dx equals −I/3 for z
/// inside S and the point-dipole field (|S|/4π)(3ẑẑᵀ − I)/|z|³ outside. The
/// z ∈ S sub-region therefore contributes exactly −I/3, and the exterior
/// remainder reduces in spherical coordinates to
///
/// ```text
/// (1/4π) ∫_{S²} (3ωωᵀ − I) ln R_Ω(ω) dω,
/// ```
///
/// with R_Ω(ω) the exit radius of the cube. That sphere integral is done
/// with tensor Gauss-Legendre of the given order on the six gnomonic faces
/// ω = (u, v, ±1)/√(u²+v²+1) — the integrand is analytic there, so the rule
/// converges geometrically toward the symmetry-forced zero.
pub fn compute_k0(quadrature_order: usize) -> Tensor3 {
    assert!(quadrature_order >= 2, "quadrature order too small");
    let (nodes, weights) = gauss_legendre(quadrature_order);
    let mut exterior = [[0.0; 3]; 3];
    // Six faces: normal axis 0..3, sign ±1.
    for axis in 0..3 {
        for &sign in &[-1.0, 1.0] {
            for (iu, &u) in nodes.iter().enumerate() {
                for (iv, &v) in nodes.iter().enumerate() {
                    let s2 = u * u + v * v + 1.0;
                    let s = s2.sqrt();
                    let mut omega = [0.0; 3];
                    omega[axis] = sign / s;
                    omega[(axis + 1) % 3] = u / s;
                    omega[(axis + 2) % 3] = v / s;
                    // dω = du dv / s³ on the gnomonic face; the radial
                    // integral ∫₁^{R} dr/r collapsed to ln R with R(ω) = s.
                    let w = weights[iu] * weights[iv] * s.ln() / (s2 * s);
                    for i in 0..3 {
                        for j in 0..3 {
                            let t = 3.0 * omega[i] * omega[j] - if i == j { 1.0 } else { 0.0 };
                            exterior[i][j] += w * t;
                        }
                    }
                }
            }
        }
    }
    let quarter_pi = 1.0 / (4.0 * std::f64::consts::PI);
    let mut k0 = mat_scale(quarter_pi, &exterior);
    for i in 0..3 {
        k0[i][i] -= 1.0 / 3.0;
    }
    k0
}

/// Corrected tensors and the contraction operators built on one K⁰.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveTensors {
    pub k0: Tensor3,
    pub c_t_eps: Tensor3,
    pub c_t_mu: Tensor3,
    /// K^ε = −c_r⁻³ K⁰ [Cᵀ_ε]; satisfies [Cᵀ_ε](I − K^ε)⁻¹ = [P₀^ε].
    pub k_eps: Tensor3,
    pub k_mu: Tensor3,
    /// Larger of the two spectral radii of c_r⁻³[P₀]K⁰.
    pub spectral_radius: f64,
}

/// Corrected tensors [Cᵀ] by direct 3×3 solve.
///
/// Fails with [`EffectiveError::NotContractive`] when the spectral radius of
/// c_r⁻³[P₀]K⁰ reaches 1 — the regime where the interaction series and the
/// formulas built on it lose their meaning.
pub fn compute_c_tensors(
    pair: &PolarizationPair,
    c_r: f64,
    k0: &Tensor3,
) -> Result<EffectiveTensors, EffectiveError> {
    if !c_r.is_finite() || c_r < 1.0 {
        return Err(EffectiveError::InvalidRatio(c_r));
    }
    let scale = c_r.powi(-3);
    let b_eps = mat_scale(scale, &matmul3(&pair.electric, k0));
    let b_mu = mat_scale(scale, &matmul3(&pair.magnetic, k0));
    let rho =
        product_radius(&pair.electric, k0, scale).max(product_radius(&pair.magnetic, k0, scale));
    if rho >= 1.0 {
        return Err(EffectiveError::NotContractive(rho));
    }

    let c_t_eps = matmul3(&inverse3(&mat_sub(&IDENTITY3, &b_eps)), &pair.electric);
    let c_t_mu = matmul3(&inverse3(&mat_sub(&IDENTITY3, &b_mu)), &pair.magnetic);
    let k_eps = mat_scale(-scale, &matmul3(k0, &c_t_eps));
    let k_mu = mat_scale(-scale, &matmul3(k0, &c_t_mu));

    // Both defining conditions of the contraction pair: ‖K‖ < 1, and the
    // corrected tensor reproduces [P₀] through (I − K)⁻¹.
    for (c_t, k, p0) in [
        (&c_t_eps, &k_eps, &pair.electric),
        (&c_t_mu, &k_mu, &pair.magnetic),
    ] {
        assert!(
            spectral_norm3(k) < 1.0,
            "contraction operator has norm {} >= 1",
            spectral_norm3(k)
        );
        let recovered = matmul3(c_t, &inverse3(&mat_sub(&IDENTITY3, k)));
        // Relative to [P₀] when it has any size, absolute for the
        // zero-contrast tensor.
        let defect = frob3(&mat_sub(&recovered, p0)) / frob3(p0).max(1.0);
        assert!(defect < 1e-12, "[Cᵀ](I−K)⁻¹ ≠ [P₀]: defect {defect:e}");
    }

    Ok(EffectiveTensors {
        k0: *k0,
        c_t_eps,
        c_t_mu,
        k_eps,
        k_mu,
        spectral_radius: rho,
    })
}

/// Truncated Born (Neumann) series for the corrected tensors:
/// [Cᵀ] ≈ Σ_{n=0}^{terms} (c_r⁻³[P₀]K⁰)ⁿ [P₀].
///
/// `terms = 0` returns the bare [P₀]. Converges geometrically (ratio = the
/// spectral radius) to the direct solve of [`compute_c_tensors`].
pub fn born_series_tensors(
    pair: &PolarizationPair,
    c_r: f64,
    k0: &Tensor3,
    terms: usize,
) -> Result<(Tensor3, Tensor3), EffectiveError> {
    if !c_r.is_finite() || c_r < 1.0 {
        return Err(EffectiveError::InvalidRatio(c_r));
    }
    let scale = c_r.powi(-3);
    let mut out = Vec::with_capacity(2);
    for p0 in [&pair.electric, &pair.magnetic] {
        let b = mat_scale(scale, &matmul3(p0, k0));
        let rho = product_radius(p0, k0, scale);
        if rho >= 1.0 {
            return Err(EffectiveError::NotContractive(rho));
        }
        let mut sum = *p0;
        let mut term = *p0;
        for _ in 0..terms {
            term = matmul3(&b, &term);
            sum = mat_add(&sum, &term);
        }
        out.push(sum);
    }
    Ok((out[0], out[1]))
}

/// Effective permittivity/permeability, corrected and leading-order.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveParameters {
    pub eps_ring: Tensor3,
    pub mu_ring: Tensor3,
    pub eps_ring_leading: Tensor3,
    pub mu_ring_leading: Tensor3,
}

pub fn effective_parameters(
    tensors: &EffectiveTensors,
    pair: &PolarizationPair,
    c_r: f64,
) -> EffectiveParameters {
    let scale = c_r.powi(-3);
    EffectiveParameters {
        eps_ring: mat_add(&IDENTITY3, &mat_scale(scale, &tensors.c_t_eps)),
        mu_ring: mat_add(&IDENTITY3, &mat_scale(scale, &tensors.c_t_mu)),
        eps_ring_leading: mat_add(&IDENTITY3, &mat_scale(scale, &pair.electric)),
        mu_ring_leading: mat_add(&IDENTITY3, &mat_scale(scale, &pair.magnetic)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::asym3;
    use crate::polarization::{ellipsoid_polarization, Shape};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    const MINUS_THIRD_I: Tensor3 = [
        [-1.0 / 3.0, 0.0, 0.0],
        [0.0, -1.0 / 3.0, 0.0],
        [0.0, 0.0, -1.0 / 3.0],
    ];

    #[test]
    fn k0_matches_symmetry_forced_value() {
        let k0 = compute_k0(8);
        assert!(frob3(&mat_sub(&k0, &MINUS_THIRD_I)) < 1e-6);
        // Higher order only sharpens it.
        let k0 = compute_k0(16);
        assert!(frob3(&mat_sub(&k0, &MINUS_THIRD_I)) < 1e-9);
    }

    #[test]
    fn k0_is_symmetric_with_unit_negative_trace() {
        let k0 = compute_k0(12);
        assert!(asym3(&k0) < 1e-14);
        let trace = k0[0][0] + k0[1][1] + k0[2][2];
        assert_abs_diff_eq!(trace, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn k0_quadrature_order_does_not_shift_the_value() {
        // The operator is scale-invariant, so the only order dependence is
        // quadrature error on the exterior log integral.
        let a = compute_k0(10);
        let b = compute_k0(20);
        assert!(frob3(&mat_sub(&a, &b)) < 1e-7);
    }

    #[test]
    fn isotropic_corrected_tensor_closed_form() {
        // P₀ = pI with K⁰ = −I/3 gives C_T = p/(1 + p c_r⁻³/3)·I — the
        // Clausius-Mossotti correction.
        let k0 = compute_k0(16);
        let pair = PolarizationPair::for_shape(&Shape::Sphere, 2.0, 1.5).unwrap();
        for &c_r in &[2.0, 4.0, 8.0] {
            let t = compute_c_tensors(&pair, c_r, &k0).unwrap();
            let p = PI; // sphere at permittivity contrast 2
            let want = p / (1.0 + p * c_r.powi(-3) / 3.0);
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { want } else { 0.0 };
                    assert_abs_diff_eq!(t.c_t_eps[i][j], expect, epsilon = 1e-12 * want);
                }
            }
        }
    }

    #[test]
    fn anisotropic_case_reduces_to_per_axis_scalars() {
        // Diagonal P₀ diagonalizes everything, so each axis obeys the scalar
        // formula with its own p_i.
        let k0 = compute_k0(16);
        let p0 = ellipsoid_polarization([0.5, 0.5, 1.0], 2.0).unwrap();
        let pair = PolarizationPair {
            electric: p0,
            magnetic: p0,
        };
        let c_r = 3.0;
        let t = compute_c_tensors(&pair, c_r, &k0).unwrap();
        for i in 0..3 {
            let want = p0[i][i] / (1.0 + p0[i][i] * c_r.powi(-3) / 3.0);
            assert_relative_eq!(t.c_t_eps[i][i], want, max_relative = 1e-12);
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_abs_diff_eq!(t.c_t_eps[i][j], 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn contraction_operators_are_small_and_consistent() {
        let k0 = compute_k0(16);
        let pair = PolarizationPair::for_shape(&Shape::Sphere, 2.0, 1.5).unwrap();
        let t = compute_c_tensors(&pair, 2.0, &k0).unwrap();
        // K = −c_r⁻³K⁰[Cᵀ] ≈ (c_r⁻³/3)[Cᵀ]: positive, small.
        let norm = spectral_norm3(&t.k_eps);
        assert!(norm > 0.0 && norm < 1.0);
        // Isotropic closed form: ‖K‖ = q/(1+q) with q = p c_r⁻³/3.
        let q = PI * 2.0_f64.powi(-3) / 3.0;
        assert_relative_eq!(norm, q / (1.0 + q), max_relative = 1e-9);
        assert!(t.spectral_radius < 1.0);
    }

    #[test]
    fn dense_contrast_is_rejected() {
        // c_r = 1 with a sphere at contrast 2: spectral radius π/3 > 1.
        let k0 = compute_k0(16);
        let pair = PolarizationPair::for_shape(&Shape::Sphere, 2.0, 2.0).unwrap();
        match compute_c_tensors(&pair, 1.0, &k0) {
            Err(EffectiveError::NotContractive(rho)) => {
                assert_relative_eq!(rho, PI / 3.0, max_relative = 1e-9);
            }
            other => panic!("expected NotContractive, got {other:?}"),
        }
        assert!(matches!(
            compute_c_tensors(&pair, 0.5, &k0),
            Err(EffectiveError::InvalidRatio(_))
        ));
    }

    #[test]
    fn born_series_truncations_converge_geometrically() {
        let k0 = compute_k0(16);
        let pair = PolarizationPair::for_shape(&Shape::Sphere, 2.0, 1.5).unwrap();
        let c_r = 2.0;
        let exact = compute_c_tensors(&pair, c_r, &k0).unwrap().c_t_eps;
        let (zeroth, _) = born_series_tensors(&pair, c_r, &k0, 0).unwrap();
        assert_relative_eq!(zeroth[0][0], PI, max_relative = 1e-14);

        let errs: Vec<f64> = (0..4)
            .map(|terms| {
                let (c, _) = born_series_tensors(&pair, c_r, &k0, terms).unwrap();
                frob3(&mat_sub(&c, &exact))
            })
            .collect();
        let rho = PI * c_r.powi(-3) / 3.0;
        for w in errs.windows(2) {
            assert_relative_eq!(w[1] / w[0], rho, max_relative = 1e-6);
        }
    }

    #[test]
    fn born_series_rejects_divergent_regime() {
        let k0 = compute_k0(16);
        let pair = PolarizationPair::for_shape(&Shape::Sphere, 2.0, 2.0).unwrap();
        assert!(matches!(
            born_series_tensors(&pair, 1.0, &k0, 5),
            Err(EffectiveError::NotContractive(_))
        ));
    }

    #[test]
    fn corrected_and_leading_parameters_differ_at_sixth_order() {
        let k0 = compute_k0(16);
        let pair = PolarizationPair::for_shape(&Shape::Sphere, 2.0, 1.5).unwrap();
        let gap = |c_r: f64| {
            let t = compute_c_tensors(&pair, c_r, &k0).unwrap();
            let p = effective_parameters(&t, &pair, c_r);
            frob3(&mat_sub(&p.eps_ring, &p.eps_ring_leading))
        };
        // ‖ε̊_corr − ε̊_lead‖ = c_r⁻³‖C_T − P₀‖ = O(c_r⁻⁶): doubling c_r
        // divides the gap by ≈64.
        let ratio = gap(2.0) / gap(4.0);
        assert!((50.0..80.0).contains(&ratio), "gap ratio {ratio}");
    }

    #[test]
    fn effective_parameters_shapes() {
        let k0 = compute_k0(16);
        let pair = PolarizationPair::for_shape(&Shape::Sphere, 2.0, 1.5).unwrap();
        let c_r = 2.0;
        let t = compute_c_tensors(&pair, c_r, &k0).unwrap();
        let p = effective_parameters(&t, &pair, c_r);
        // Leading-order: ε̊ = 1 + c_r⁻³ p.
        assert_relative_eq!(
            p.eps_ring_leading[0][0],
            1.0 + c_r.powi(-3) * PI,
            max_relative = 1e-14
        );
        // Corrected sits strictly between vacuum and leading (K⁰ < 0 damps).
        assert!(p.eps_ring[0][0] > 1.0);
        assert!(p.eps_ring[0][0] < p.eps_ring_leading[0][0]);
        // μ uses its own contrast.
        assert!(p.mu_ring[1][1] < p.eps_ring[1][1]);
    }
}
