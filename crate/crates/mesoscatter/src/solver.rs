//! Linear solvers for the discrete scattering systems.
//!
//! Both the 6M-unknown point-interaction system and the voxel
//! Lippmann-Schwinger system are complex, non-Hermitian, and dense-but-
//! structured, so the workhorses are
//!
//! * restarted GMRES with modified Gram-Schmidt and Givens rotations,
//!   driven through the matrix-free [`ComplexOperator`] trait, and
//! * a dense LU fallback (via `nalgebra`) for systems small enough that
//!   O(n³) is cheaper than tuning an iteration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type C64 = Complex64;

/// A complex linear operator y = A·x exposed matrix-free.
pub trait ComplexOperator {
    /// Dimension of the (square) operator.
    fn dim(&self) -> usize;
    /// Compute `y = A·x`. Both slices have length [`ComplexOperator::dim`].
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

#[derive(Debug, Clone)]
pub struct GmresConfig {
    /// Krylov subspace size before a restart.
    pub restart: usize,
    /// Cap on total inner iterations across restarts.
    pub max_iter: usize,
    /// Convergence threshold on ‖b − Ax‖ / ‖b‖.
    pub tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 50,
            max_iter: 2000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    pub x: Vec<C64>,
    /// Total inner iterations performed.
    pub iterations: usize,
    /// Final relative residual ‖b − Ax‖ / ‖b‖ (recomputed, not the Givens estimate).
    pub residual: f64,
    pub converged: bool,
    /// Relative residual estimate after each inner iteration.
    pub residual_history: Vec<f64>,
}

#[inline]
fn cdot(a: &[C64], b: &[C64]) -> C64 {
    // Conjugate-linear in the first argument.
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
fn cnorm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Givens rotation zeroing the second component of (a, b)ᵀ.
fn givens(a: C64, b: C64) -> (C64, C64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (a / r, b / r)
    }
}

/// Restarted GMRES for a complex non-Hermitian system A x = b.
///
/// Starts from x = 0 (pass the residual equation yourself if you have a
/// warm start). Returns whatever iterate it reached even on failure, with
/// `converged = false` and the full residual history for diagnostics.
pub fn gmres<Op: ComplexOperator + ?Sized>(op: &Op, b: &[C64], cfg: &GmresConfig) -> GmresResult {
    let n = op.dim();
    assert_eq!(
        b.len(),
        n,
        "rhs length {} does not match operator dim {n}",
        b.len()
    );
    assert!(cfg.restart >= 1, "restart must be at least 1");

    let bnorm = cnorm(b);
    if bnorm == 0.0 {
        return GmresResult {
            x: vec![C64::new(0.0, 0.0); n],
            iterations: 0,
            residual: 0.0,
            converged: true,
            residual_history: Vec::new(),
        };
    }

    let m = cfg.restart;
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut history = Vec::new();
    let mut total_iters = 0usize;
    let mut work = vec![C64::new(0.0, 0.0); n];

    'outer: loop {
        // r = b − A x
        op.apply(&x, &mut work);
        let mut r: Vec<C64> = b.iter().zip(&work).map(|(bi, wi)| bi - wi).collect();
        let beta = cnorm(&r);
        if beta / bnorm <= cfg.tol {
            break;
        }
        for ri in &mut r {
            *ri /= beta;
        }

        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        basis.push(r);
        // Column-major Hessenberg: h[j] holds column j (length j + 2).
        let mut h: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut cs: Vec<C64> = Vec::with_capacity(m);
        let mut sn: Vec<C64> = Vec::with_capacity(m);
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);

        let mut cols = 0usize;
        for j in 0..m {
            op.apply(&basis[j], &mut work);
            let mut col = vec![C64::new(0.0, 0.0); j + 2];
            // Modified Gram-Schmidt against the current basis.
            for (i, v) in basis.iter().enumerate() {
                let hij = cdot(v, &work);
                col[i] = hij;
                for (wk, vk) in work.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let wnorm = cnorm(&work);
            col[j + 1] = C64::new(wnorm, 0.0);
            let lucky = wnorm < 1e-300;
            if !lucky {
                basis.push(work.iter().map(|wk| wk / wnorm).collect());
            }

            // Apply accumulated rotations, then generate the new one.
            for i in 0..j {
                let t = cs[i].conj() * col[i] + sn[i].conj() * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            let t = c.conj() * col[j] + s.conj() * col[j + 1];
            col[j] = t;
            col[j + 1] = C64::new(0.0, 0.0);
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c.conj() * gj;
            g[j + 1] = -s * gj;
            h.push(col);

            cols = j + 1;
            total_iters += 1;
            let rel = g[j + 1].norm() / bnorm;
            history.push(rel);
            if rel <= cfg.tol || lucky || total_iters >= cfg.max_iter {
                // Back-substitute y from the triangularized Hessenberg.
                let mut y = vec![C64::new(0.0, 0.0); cols];
                for i in (0..cols).rev() {
                    let mut s = g[i];
                    for l in (i + 1)..cols {
                        s -= h[l][i] * y[l];
                    }
                    y[i] = s / h[i][i];
                }
                for (l, yl) in y.iter().enumerate() {
                    for (xi, vi) in x.iter_mut().zip(&basis[l]) {
                        *xi += yl * vi;
                    }
                }
                if rel <= cfg.tol || lucky {
                    break 'outer;
                }
                if total_iters >= cfg.max_iter {
                    break 'outer;
                }
                break;
            }
        }
        // Restart: fold the cycle's correction into x.
        if cols == m && total_iters < cfg.max_iter {
            let mut y = vec![C64::new(0.0, 0.0); cols];
            for i in (0..cols).rev() {
                let mut s = g[i];
                for l in (i + 1)..cols {
                    s -= h[l][i] * y[l];
                }
                y[i] = s / h[i][i];
            }
            for (l, yl) in y.iter().enumerate() {
                for (xi, vi) in x.iter_mut().zip(&basis[l]) {
                    *xi += yl * vi;
                }
            }
        }
    }

    op.apply(&x, &mut work);
    let true_res: f64 = b
        .iter()
        .zip(&work)
        .map(|(bi, wi)| (bi - wi).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / bnorm;
    GmresResult {
        x,
        iterations: total_iters,
        residual: true_res,
        converged: true_res <= cfg.tol,
        residual_history: history,
    }
}

/// Dense LU solve; `None` if the factorization detects a singular matrix.
pub fn lu_solve(a: DMatrix<C64>, b: &[C64]) -> Option<Vec<C64>> {
    assert_eq!(a.nrows(), b.len());
    assert_eq!(a.nrows(), a.ncols());
    let rhs = DVector::from_column_slice(b);
    a.lu().solve(&rhs).map(|v| v.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct DiagOp(Vec<C64>);

    impl ComplexOperator for DiagOp {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            for i in 0..x.len() {
                y[i] = self.0[i] * x[i];
            }
        }
    }

    struct DenseOp(DMatrix<C64>);

    impl ComplexOperator for DenseOp {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            let v = DVector::from_column_slice(x);
            let out = &self.0 * v;
            y.copy_from_slice(out.as_slice());
        }
    }

    fn random_well_conditioned(n: usize, seed: u64) -> DMatrix<C64> {
        // Identity plus a small random perturbation keeps the spectrum away
        // from zero, so GMRES converges without preconditioning.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { 1.0 } else { 0.0 };
            C64::new(
                diag + 0.1 * rng.gen_range(-1.0..1.0),
                0.1 * rng.gen_range(-1.0..1.0),
            )
        })
    }

    #[test]
    fn diagonal_system_solves_in_one_iteration_per_eigvalue_cluster() {
        let op = DiagOp(vec![C64::new(2.0, 1.0); 40]);
        let b: Vec<C64> = (0..40).map(|i| C64::new(i as f64, -1.0)).collect();
        let res = gmres(&op, &b, &GmresConfig::default());
        assert!(res.converged);
        // A single distinct eigenvalue is killed by one Krylov step.
        assert_eq!(res.iterations, 1);
        for (xi, bi) in res.x.iter().zip(&b) {
            let want = bi / C64::new(2.0, 1.0);
            assert!((xi - want).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_returns_zero_immediately() {
        let op = DiagOp(vec![C64::new(3.0, 0.0); 8]);
        let res = gmres(&op, &vec![C64::new(0.0, 0.0); 8], &GmresConfig::default());
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert!(res.x.iter().all(|xi| xi.norm() == 0.0));
    }

    #[test]
    fn dense_system_matches_lu() {
        let a = random_well_conditioned(60, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let b: Vec<C64> = (0..60)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let direct = lu_solve(a.clone(), &b).expect("well-conditioned");
        let iterative = gmres(&DenseOp(a), &b, &GmresConfig::default());
        assert!(iterative.converged, "residual {}", iterative.residual);
        let err: f64 = direct
            .iter()
            .zip(&iterative.x)
            .map(|(d, g)| (d - g).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-8, "LU vs GMRES mismatch {err:e}");
    }

    #[test]
    fn restarts_still_converge() {
        let a = random_well_conditioned(50, 23);
        let b: Vec<C64> = (0..50)
            .map(|i| C64::new(1.0 / (1.0 + i as f64), 0.5))
            .collect();
        let cfg = GmresConfig {
            restart: 5,
            ..GmresConfig::default()
        };
        let res = gmres(&DenseOp(a), &b, &cfg);
        assert!(
            res.converged,
            "residual {} after {} iters",
            res.residual, res.iterations
        );
        assert!(
            res.iterations > 5,
            "should have needed at least one restart"
        );
    }

    #[test]
    fn iteration_cap_reports_failure_with_history() {
        let a = random_well_conditioned(40, 24);
        let b: Vec<C64> = (0..40).map(|_| C64::new(1.0, 0.0)).collect();
        let cfg = GmresConfig {
            restart: 3,
            max_iter: 3,
            tol: 1e-14,
        };
        let res = gmres(&DenseOp(a), &b, &cfg);
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
        assert_eq!(res.residual_history.len(), 3);
        // The partial iterate must still beat the zero initial guess.
        assert!(res.residual < 1.0);
    }

    #[test]
    fn residual_history_never_increases() {
        let a = random_well_conditioned(45, 25);
        let b: Vec<C64> = (0..45)
            .map(|i| C64::new((i % 7) as f64 - 3.0, 1.0))
            .collect();
        let res = gmres(&DenseOp(a), &b, &GmresConfig::default());
        assert!(res.converged);
        for pair in res.residual_history.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-12),
                "GMRES residual increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn lu_detects_singular_matrix() {
        let a = DMatrix::from_fn(4, 4, |i, _| C64::new(i as f64, 0.0));
        assert!(lu_solve(a, &vec![C64::new(1.0, 0.0); 4]).is_none());
    }
}
