//! Small fixed-size vector/tensor helpers shared across the crate.
//!
//! Everything operates on plain `[f64; 3]` / `[[f64; 3]; 3]` (and their
//! `Complex64` counterparts) so the hot loops stay allocation-free; we only
//! round-trip through `nalgebra` for the few spots that need a factorization
//! or an eigendecomposition.

use nalgebra::Matrix3;
use num_complex::Complex64;

pub(crate) type C64 = Complex64;

// ---------------------------------------------------------------------------
// real 3-vectors
// ---------------------------------------------------------------------------

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn scale3(s: f64, a: [f64; 3]) -> [f64; 3] {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

// ---------------------------------------------------------------------------
// complex 3-vectors
// ---------------------------------------------------------------------------

#[inline]
pub(crate) fn czero3() -> [C64; 3] {
    [C64::new(0.0, 0.0); 3]
}

#[cfg(test)]
#[inline]
pub(crate) fn cadd3(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn csub3(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
#[inline]
pub(crate) fn cscale3(s: C64, a: [C64; 3]) -> [C64; 3] {
    [s * a[0], s * a[1], s * a[2]]
}

/// Cross product of a real vector with a complex vector.
#[inline]
pub(crate) fn cross3_rc(a: [f64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Euclidean norm of a complex 3-vector.
#[inline]
pub(crate) fn cnorm3(a: [C64; 3]) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

// ---------------------------------------------------------------------------
// real 3x3 tensors
// ---------------------------------------------------------------------------

pub(crate) const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[cfg(test)]
#[inline]
pub(crate) fn matvec3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [dot3(m[0], v), dot3(m[1], v), dot3(m[2], v)]
}

/// Real tensor applied to a complex vector (entrywise real × complex).
#[inline]
pub(crate) fn matvec3_rc(m: &[[f64; 3]; 3], v: [C64; 3]) -> [C64; 3] {
    let mut out = czero3();
    for i in 0..3 {
        for j in 0..3 {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

#[inline]
pub(crate) fn matmul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, bk) in b.iter().enumerate() {
                c[i][j] += a[i][k] * bk[j];
            }
        }
    }
    c
}

#[inline]
pub(crate) fn mat_add(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][j] + b[i][j];
        }
    }
    c
}

#[inline]
pub(crate) fn mat_sub(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][j] - b[i][j];
        }
    }
    c
}

#[inline]
pub(crate) fn mat_scale(s: f64, a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = s * a[i][j];
        }
    }
    c
}

/// Frobenius norm of a real 3×3 tensor.
#[inline]
pub(crate) fn frob3(a: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for row in a {
        for &x in row {
            s += x * x;
        }
    }
    s.sqrt()
}

/// Inverse via the adjugate; panics if the determinant vanishes.
pub(crate) fn inverse3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    assert!(
        det.abs() > 1e-300,
        "inverse3: singular tensor (det = {det:e})"
    );
    let inv_det = 1.0 / det;
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // cofactor expansion, transposed
            let (r0, r1) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c0, c1) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[i][j] = sign * minor * inv_det;
        }
    }
    inv
}

/// Eigenvalues of a symmetric 3×3 tensor, ascending.
pub(crate) fn sym_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let m = Matrix3::from_fn(|i, j| a[i][j]);
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    [ev[0], ev[1], ev[2]]
}

/// Spectral (operator 2-) norm of a general real 3×3 tensor, as the square
/// root of the largest eigenvalue of AᵀA.
pub(crate) fn spectral_norm3(a: &[[f64; 3]; 3]) -> f64 {
    let mut ata = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                ata[i][j] += a[k][i] * a[k][j];
            }
        }
    }
    sym_eigenvalues(&ata)[2].max(0.0).sqrt()
}

/// Symmetric square root of a symmetric positive semi-definite 3×3 tensor.
/// Negative eigenvalues from roundoff are clamped to zero.
pub(crate) fn sym_sqrt3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let m = Matrix3::from_fn(|i, j| a[i][j]);
    let eig = m.symmetric_eigen();
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        let s = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += s * v[i] * v[j];
            }
        }
    }
    out
}

/// Max |a_ij − a_ji| — symmetry defect.
pub(crate) fn asym3(a: &[[f64; 3]; 3]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            d = d.max((a[i][j] - a[j][i]).abs());
        }
    }
    d
}

// ---------------------------------------------------------------------------
// complex 3x3 tensors
// ---------------------------------------------------------------------------

#[cfg(test)]
#[inline]
pub(crate) fn cmatvec3(m: &[[C64; 3]; 3], v: [C64; 3]) -> [C64; 3] {
    let mut out = czero3();
    for i in 0..3 {
        for j in 0..3 {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse3_recovers_identity() {
        let a = [[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 3.0]];
        let inv = inverse3(&a);
        let prod = matmul3(&a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(prod[i][j], want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn sym_eigenvalues_diagonal() {
        let a = [[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        let ev = sym_eigenvalues(&a);
        assert_relative_eq!(ev[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(ev[2], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn cross3_right_handed() {
        let e = cross3([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert_eq!(e, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn spectral_norm_of_scaled_identity() {
        let a = mat_scale(2.5, &IDENTITY3);
        assert_relative_eq!(spectral_norm3(&a), 2.5, epsilon = 1e-13);
    }

    #[test]
    fn sym_sqrt_squares_back() {
        // Exactly structured input must work: zero and scaled identity.
        assert_eq!(sym_sqrt3(&[[0.0; 3]; 3]), [[0.0; 3]; 3]);
        let s = sym_sqrt3(&mat_scale(4.0, &IDENTITY3));
        assert_relative_eq!(
            frob3(&mat_sub(&s, &mat_scale(2.0, &IDENTITY3))),
            0.0,
            epsilon = 1e-14
        );
        // Generic SPD tensor: the square of the root recovers it.
        let a = [[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 0.9]];
        let r = sym_sqrt3(&a);
        assert!(frob3(&mat_sub(&matmul3(&r, &r), &a)) < 1e-13);
        assert!(asym3(&r) < 1e-14);
    }
}
