//! The point-interaction (Foldy-Lax) system and its discrete far-field.
//!
//! Each particle m carries an electric moment proxy U_m and a magnetic one
//! V_m (both C³); mutual coupling happens through the dyadic kernel and the
//! gradient cross-term:
//!
//! ```text
//! U_m − a³ Σ_{j≠m} [ Π_k(z_m,z_j)[P₀^ε]U_j + ik ∇Φ_k(z_m,z_j)×([P₀^μ]V_j) ] = E^in(z_m)
//! V_m − a³ Σ_{j≠m} [ Π_k(z_m,z_j)[P₀^μ]V_j − ik ∇Φ_k(z_m,z_j)×([P₀^ε]U_j) ] = H^in(z_m)
//! ```
//!
//! Unknowns are stored as M electric 3-vectors followed by M magnetic ones.
//! The physical moments are R_m = a³[P₀^ε]U_m and Q_m = a³[P₀^μ]V_m, and the
//! far-field they radiate is
//!
//! ```text
//! E∞(x̂) = Σ_m e^{−ik x̂·z_m} [ (k²/4π) x̂×(R_m×x̂) + (ik/4π) x̂×Q_m ],
//! ```
//!
//! which is tangential to x̂ term by term.
//!
//! On lattice clusters the coupling sums are discrete convolutions, so the
//! operator can be applied through zero-padded 3D FFTs in O(M log M); the
//! direct O(M²) summation stays available as the cross-check oracle and as
//! the fallback for free-form center lists.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::cluster::Cluster;
use crate::fft3d::Fft3;
use crate::kernels::{grad_phi, pi, CVec3, PlaneWave, Tensor3, Vec3, Wavenumber};
use crate::la::{cnorm3, cross3_rc, czero3, dot3, matvec3_rc};
use crate::polarization::PolarizationPair;
use crate::solver::{gmres, lu_solve, ComplexOperator, GmresConfig, GmresResult};

type C64 = Complex64;

#[derive(Debug, Error)]
pub enum FoldyLaxError {
    #[error("solver stalled at relative residual {residual:e} after {} iterations", history.len())]
    NotConverged { residual: f64, history: Vec<f64> },
    #[error("dense system is singular")]
    SingularSystem,
    #[error("far-field direction {0:?} is not a unit vector")]
    NonUnitDirection(Vec3),
}

/// How [`solve`] factorizes the 6M-unknown system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Dense LU when 6M ≤ 12000, restarted GMRES beyond that.
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone)]
pub struct FoldyLaxSolution {
    pub u: Vec<CVec3>,
    pub v: Vec<CVec3>,
    /// ‖(I − A)(U,V) − RHS‖₂ / ‖RHS‖₂, recomputed after the solve.
    pub residual_norm: f64,
    pub solver_iterations: usize,
}

// ---------------------------------------------------------------------------
// operator
// ---------------------------------------------------------------------------

/// Lattice embedding of a cluster: grid resolution and per-particle site.
struct LatticeMap {
    n: usize,
    /// Particle → (ix, iy, iz) on the n³ grid.
    sites: Vec<[usize; 3]>,
}

/// Try to recognize the cluster as a subset of the canonical n³ lattice.
fn lattice_map(cluster: &Cluster) -> Option<LatticeMap> {
    let delta = cluster.delta();
    let n_f = 1.0 / delta;
    let n = n_f.round() as usize;
    if n == 0 || (n_f - n as f64).abs() > 1e-9 {
        return None;
    }
    let mut sites = Vec::with_capacity(cluster.len());
    for &z in cluster.centers() {
        let mut site = [0usize; 3];
        for (c, s) in z.iter().zip(site.iter_mut()) {
            let idx = (c / delta - 0.5).round();
            if idx < 0.0 || idx >= n as f64 || (c - (idx + 0.5) * delta).abs() > 1e-9 * delta {
                return None;
            }
            *s = idx as usize;
        }
        sites.push(site);
    }
    Some(LatticeMap { n, sites })
}

/// FFT workspace: kernel spectra on the zero-padded 2n grid.
struct FftCoupling {
    fft: Fft3,
    map: LatticeMap,
    /// Π_k spectra, components (00, 01, 02, 11, 12, 22).
    pi_hat: Vec<Vec<C64>>,
    /// Spectra of g = ik∇Φ_k.
    g_hat: Vec<Vec<C64>>,
}

impl FftCoupling {
    fn new(cluster: &Cluster, k: f64, map: LatticeMap) -> Self {
        let n = map.n;
        let p = 2 * n;
        let fft = Fft3::new([p, p, p]);
        let delta = cluster.delta();
        let mut pi_hat = vec![vec![C64::new(0.0, 0.0); fft.len()]; 6];
        let mut g_hat = vec![vec![C64::new(0.0, 0.0); fft.len()]; 3];
        let ik = C64::new(0.0, k);
        let wrap = |d: isize| -> usize { d.rem_euclid(p as isize) as usize };
        let span = n as isize - 1;
        for dx in -span..=span {
            for dy in -span..=span {
                for dz in -span..=span {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue; // self-interaction excluded
                    }
                    let w = [delta * dx as f64, delta * dy as f64, delta * dz as f64];
                    let idx = fft.index(wrap(dx), wrap(dy), wrap(dz));
                    let t = pi(k, w, [0.0; 3]);
                    pi_hat[0][idx] = t[0][0];
                    pi_hat[1][idx] = t[0][1];
                    pi_hat[2][idx] = t[0][2];
                    pi_hat[3][idx] = t[1][1];
                    pi_hat[4][idx] = t[1][2];
                    pi_hat[5][idx] = t[2][2];
                    let g = grad_phi(k, w, [0.0; 3]);
                    g_hat[0][idx] = ik * g[0];
                    g_hat[1][idx] = ik * g[1];
                    g_hat[2][idx] = ik * g[2];
                }
            }
        }
        for field in pi_hat.iter_mut().chain(g_hat.iter_mut()) {
            fft.forward(field);
        }
        Self {
            fft,
            map,
            pi_hat,
            g_hat,
        }
    }

    /// coupling(U, V) for all particles; `out_e`/`out_h` hold the sums.
    fn couple(&self, we: &[CVec3], wh: &[CVec3], out_e: &mut [CVec3], out_h: &mut [CVec3]) {
        let len = self.fft.len();
        let mut fields: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); len]; 6];
        for (p, site) in self.map.sites.iter().enumerate() {
            let idx = self.fft.index(site[0], site[1], site[2]);
            for c in 0..3 {
                fields[c][idx] = we[p][c];
                fields[3 + c][idx] = wh[p][c];
            }
        }
        // Six forward transforms (the fields are independent, so the
        // parallel iteration stays deterministic).
        fields.par_iter_mut().for_each(|f| self.fft.forward(f));

        let mut out: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); len]; 6];
        {
            let (oe, oh) = out.split_at_mut(3);
            for q in 0..len {
                let e = [fields[0][q], fields[1][q], fields[2][q]];
                let h = [fields[3][q], fields[4][q], fields[5][q]];
                let t = [
                    [self.pi_hat[0][q], self.pi_hat[1][q], self.pi_hat[2][q]],
                    [self.pi_hat[1][q], self.pi_hat[3][q], self.pi_hat[4][q]],
                    [self.pi_hat[2][q], self.pi_hat[4][q], self.pi_hat[5][q]],
                ];
                let g = [self.g_hat[0][q], self.g_hat[1][q], self.g_hat[2][q]];
                for i in 0..3 {
                    let pi_e = t[i][0] * e[0] + t[i][1] * e[1] + t[i][2] * e[2];
                    let pi_h = t[i][0] * h[0] + t[i][1] * h[1] + t[i][2] * h[2];
                    let (j, l) = ((i + 1) % 3, (i + 2) % 3);
                    let g_cross_h = g[j] * h[l] - g[l] * h[j];
                    let g_cross_e = g[j] * e[l] - g[l] * e[j];
                    oe[i][q] = pi_e + g_cross_h;
                    oh[i][q] = pi_h - g_cross_e;
                }
            }
        }
        out.par_iter_mut().for_each(|f| self.fft.inverse(f));

        for (p, site) in self.map.sites.iter().enumerate() {
            let idx = self.fft.index(site[0], site[1], site[2]);
            for c in 0..3 {
                out_e[p][c] = out[c][idx];
                out_h[p][c] = out[3 + c][idx];
            }
        }
    }
}

enum ApplyPath {
    Direct,
    Fft(Box<FftCoupling>),
}

/// Matrix-free application of the Foldy-Lax operator I − (coupling).
pub struct FoldyLaxOperator<'a> {
    cluster: &'a Cluster,
    /// a³[P₀^ε] and a³[P₀^μ].
    scaled_eps: Tensor3,
    scaled_mu: Tensor3,
    k: f64,
    path: ApplyPath,
}

impl<'a> FoldyLaxOperator<'a> {
    /// FFT-accelerated on lattice clusters, direct summation otherwise.
    pub fn new(cluster: &'a Cluster, pair: &PolarizationPair, k: Wavenumber) -> Self {
        let path = match lattice_map(cluster) {
            Some(map) => ApplyPath::Fft(Box::new(FftCoupling::new(cluster, k.value(), map))),
            None => ApplyPath::Direct,
        };
        Self::with_path(cluster, pair, k, path)
    }

    /// Direct O(M²) summation regardless of cluster structure.
    pub fn direct(cluster: &'a Cluster, pair: &PolarizationPair, k: Wavenumber) -> Self {
        Self::with_path(cluster, pair, k, ApplyPath::Direct)
    }

    fn with_path(
        cluster: &'a Cluster,
        pair: &PolarizationPair,
        k: Wavenumber,
        path: ApplyPath,
    ) -> Self {
        let a3 = cluster.size().powi(3);
        let scale = |t: &Tensor3| {
            let mut s = *t;
            for row in &mut s {
                for v in row {
                    *v *= a3;
                }
            }
            s
        };
        Self {
            cluster,
            scaled_eps: scale(&pair.electric),
            scaled_mu: scale(&pair.magnetic),
            k: k.value(),
            path,
        }
    }

    pub fn uses_fft(&self) -> bool {
        matches!(self.path, ApplyPath::Fft(_))
    }

    fn m(&self) -> usize {
        self.cluster.len()
    }

    /// Weighted moments (a³[P₀^ε]U_j, a³[P₀^μ]V_j) from a packed vector.
    fn weighted(&self, x: &[C64]) -> (Vec<CVec3>, Vec<CVec3>) {
        let m = self.m();
        let mut we = Vec::with_capacity(m);
        let mut wh = Vec::with_capacity(m);
        for p in 0..m {
            let u = [x[3 * p], x[3 * p + 1], x[3 * p + 2]];
            let v = [x[3 * (m + p)], x[3 * (m + p) + 1], x[3 * (m + p) + 2]];
            we.push(matvec3_rc(&self.scaled_eps, u));
            wh.push(matvec3_rc(&self.scaled_mu, v));
        }
        (we, wh)
    }

    fn couple_direct(&self, we: &[CVec3], wh: &[CVec3], out_e: &mut [CVec3], out_h: &mut [CVec3]) {
        let centers = self.cluster.centers();
        let k = self.k;
        let ik = C64::new(0.0, k);
        out_e
            .par_iter_mut()
            .zip(out_h.par_iter_mut())
            .enumerate()
            .for_each(|(m, (oe, oh))| {
                let zm = centers[m];
                let mut acc_e = czero3();
                let mut acc_h = czero3();
                for (j, &zj) in centers.iter().enumerate() {
                    if j == m {
                        continue;
                    }
                    let t = pi(k, zm, zj);
                    let g = grad_phi(k, zm, zj);
                    let ig = [ik * g[0], ik * g[1], ik * g[2]];
                    for i in 0..3 {
                        let (p, q) = ((i + 1) % 3, (i + 2) % 3);
                        acc_e[i] += t[i][0] * we[j][0]
                            + t[i][1] * we[j][1]
                            + t[i][2] * we[j][2]
                            + ig[p] * wh[j][q]
                            - ig[q] * wh[j][p];
                        acc_h[i] += t[i][0] * wh[j][0] + t[i][1] * wh[j][1] + t[i][2] * wh[j][2]
                            - (ig[p] * we[j][q] - ig[q] * we[j][p]);
                    }
                }
                *oe = acc_e;
                *oh = acc_h;
            });
    }
}

impl ComplexOperator for FoldyLaxOperator<'_> {
    fn dim(&self) -> usize {
        6 * self.m()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let m = self.m();
        let (we, wh) = self.weighted(x);
        let mut out_e = vec![czero3(); m];
        let mut out_h = vec![czero3(); m];
        match &self.path {
            ApplyPath::Direct => self.couple_direct(&we, &wh, &mut out_e, &mut out_h),
            ApplyPath::Fft(c) => c.couple(&we, &wh, &mut out_e, &mut out_h),
        }
        for p in 0..m {
            for c in 0..3 {
                y[3 * p + c] = x[3 * p + c] - out_e[p][c];
                y[3 * (m + p) + c] = x[3 * (m + p) + c] - out_h[p][c];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// Eq. (I − A)(U,V) = (E^in, H^in) right-hand side, packed.
fn incident_rhs(cluster: &Cluster, pw: &PlaneWave) -> Vec<C64> {
    let m = cluster.len();
    let mut rhs = vec![C64::new(0.0, 0.0); 6 * m];
    for (p, &z) in cluster.centers().iter().enumerate() {
        let (e, h) = pw.fields_at(z);
        for c in 0..3 {
            rhs[3 * p + c] = e[c];
            rhs[3 * (m + p) + c] = h[c];
        }
    }
    rhs
}

fn assemble_dense(op: &FoldyLaxOperator) -> DMatrix<C64> {
    let m = op.cluster.len();
    let dim = 6 * m;
    let centers = op.cluster.centers();
    let ik = C64::new(0.0, op.k);
    let mut a = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for d in 0..dim {
        a[(d, d)] = C64::new(1.0, 0.0);
    }
    for row in 0..m {
        for col in 0..m {
            if row == col {
                continue;
            }
            let t = pi(op.k, centers[row], centers[col]);
            let g = grad_phi(op.k, centers[row], centers[col]);
            // Cross product as the antisymmetric matrix of ik∇Φ.
            let gx = [
                [C64::new(0.0, 0.0), -ik * g[2], ik * g[1]],
                [ik * g[2], C64::new(0.0, 0.0), -ik * g[0]],
                [-ik * g[1], ik * g[0], C64::new(0.0, 0.0)],
            ];
            for i in 0..3 {
                for j in 0..3 {
                    let mut ee = C64::new(0.0, 0.0);
                    let mut ev = C64::new(0.0, 0.0);
                    let mut vu = C64::new(0.0, 0.0);
                    let mut vv = C64::new(0.0, 0.0);
                    for l in 0..3 {
                        ee += t[i][l] * op.scaled_eps[l][j];
                        ev += gx[i][l] * op.scaled_mu[l][j];
                        vu += gx[i][l] * op.scaled_eps[l][j];
                        vv += t[i][l] * op.scaled_mu[l][j];
                    }
                    a[(3 * row + i, 3 * col + j)] = -ee;
                    a[(3 * row + i, 3 * (m + col) + j)] = -ev;
                    a[(3 * (m + row) + i, 3 * col + j)] = vu;
                    a[(3 * (m + row) + i, 3 * (m + col) + j)] = -vv;
                }
            }
        }
    }
    a
}

/// Largest system the dense LU path takes on under [`SolveMethod::Auto`].
pub const DIRECT_SOLVE_LIMIT: usize = 12000;

/// Solve the 6M system for the given incident wave.
///
/// Emits a warning on stderr when the dilution falls below the a-priori
/// invertibility regime c_r ≥ 3kλ⁺ (the solve still proceeds — the bound is
/// sufficient, not necessary).
pub fn solve(
    cluster: &Cluster,
    pair: &PolarizationPair,
    pw: &PlaneWave,
    method: SolveMethod,
    tol: f64,
) -> Result<FoldyLaxSolution, FoldyLaxError> {
    let gmres_cfg = GmresConfig {
        tol,
        ..GmresConfig::default()
    };
    solve_with(cluster, pair, pw, method, &gmres_cfg)
}

/// [`solve`] with full control over the iterative-solver parameters; the
/// tolerance also bounds the relative residual accepted from the dense path.
pub fn solve_with(
    cluster: &Cluster,
    pair: &PolarizationPair,
    pw: &PlaneWave,
    method: SolveMethod,
    gmres_cfg: &GmresConfig,
) -> Result<FoldyLaxSolution, FoldyLaxError> {
    let tol = gmres_cfg.tol;
    let k = pw.wavenumber().value();
    let regime = 3.0 * k * pair.lambda_plus();
    if cluster.c_r() < regime {
        eprintln!(
            "warning: c_r = {} is below the a-priori invertibility regime 3kλ⁺ = {:.4}; \
             proceeding anyway",
            cluster.c_r(),
            regime
        );
    }

    let op = FoldyLaxOperator::new(cluster, pair, pw.wavenumber());
    let rhs = incident_rhs(cluster, pw);
    let rhs_norm = rhs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let dim = op.dim();
    let use_direct = match method {
        SolveMethod::Direct => true,
        SolveMethod::Iterative => false,
        SolveMethod::Auto => dim <= DIRECT_SOLVE_LIMIT,
    };

    let (x, iterations) = if use_direct {
        let a = assemble_dense(&op);
        let x = lu_solve(a, &rhs).ok_or(FoldyLaxError::SingularSystem)?;
        (x, 0)
    } else {
        let GmresResult {
            x,
            iterations,
            residual,
            converged,
            residual_history,
        } = gmres(&op, &rhs, gmres_cfg);
        if !converged {
            return Err(FoldyLaxError::NotConverged {
                residual,
                history: residual_history,
            });
        }
        (x, iterations)
    };

    // Definitional post-condition, checked against the matrix-free operator
    // whichever path produced x.
    let mut work = vec![C64::new(0.0, 0.0); dim];
    op.apply(&x, &mut work);
    let residual_norm = rhs
        .iter()
        .zip(&work)
        .map(|(b, w)| (b - w).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / rhs_norm;
    if residual_norm > tol {
        return Err(FoldyLaxError::NotConverged {
            residual: residual_norm,
            history: Vec::new(),
        });
    }

    let m = cluster.len();
    let mut u = Vec::with_capacity(m);
    let mut v = Vec::with_capacity(m);
    for p in 0..m {
        u.push([x[3 * p], x[3 * p + 1], x[3 * p + 2]]);
        v.push([x[3 * (m + p)], x[3 * (m + p) + 1], x[3 * (m + p) + 2]]);
    }
    Ok(FoldyLaxSolution {
        u,
        v,
        residual_norm,
        solver_iterations: iterations,
    })
}

/// Physical moments (R_m, Q_m) = (a³[P₀^ε]U_m, a³[P₀^μ]V_m).
pub fn moments(
    sol: &FoldyLaxSolution,
    cluster: &Cluster,
    pair: &PolarizationPair,
) -> (Vec<CVec3>, Vec<CVec3>) {
    let a3 = cluster.size().powi(3);
    let r = sol
        .u
        .iter()
        .map(|&u| {
            let w = matvec3_rc(&pair.electric, u);
            [a3 * w[0], a3 * w[1], a3 * w[2]]
        })
        .collect();
    let q = sol
        .v
        .iter()
        .map(|&v| {
            let w = matvec3_rc(&pair.magnetic, v);
            [a3 * w[0], a3 * w[1], a3 * w[2]]
        })
        .collect();
    (r, q)
}

// ---------------------------------------------------------------------------
// far-field
// ---------------------------------------------------------------------------

/// Far-field samples over a direction set.
#[derive(Debug, Clone)]
pub struct FarFieldSamples {
    pub directions: Vec<Vec3>,
    pub values: Vec<CVec3>,
}

impl FarFieldSamples {
    /// sup over directions of |E∞(x̂)|.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| cnorm3(*v)).fold(0.0, f64::max)
    }

    /// max over directions of |x̂·E∞| / ‖E∞‖ — should vanish.
    pub fn transversality_defect(&self) -> f64 {
        let scale = self.sup_norm();
        if scale == 0.0 {
            return 0.0;
        }
        self.directions
            .iter()
            .zip(&self.values)
            .map(|(d, v)| (d[0] * v[0] + d[1] * v[1] + d[2] * v[2]).norm() / scale)
            .fold(0.0, f64::max)
    }
}

/// Reject any direction that is not unit length.
pub(crate) fn check_unit_directions(directions: &[Vec3]) -> Result<(), FoldyLaxError> {
    for &d in directions {
        if (dot3(d, d).sqrt() - 1.0).abs() > 1e-12 {
            return Err(FoldyLaxError::NonUnitDirection(d));
        }
    }
    Ok(())
}

/// Radiated far-field of a set of point moments (R_p at z_p electric,
/// Q_p magnetic):
///
/// ```text
/// E∞(x̂) = Σ_p e^{−ik x̂·z_p} [ (k²/4π) x̂×(R_p×x̂) + (ik/4π) x̂×Q_p ].
/// ```
///
/// Shared by the discrete cluster and the volume (voxel-moment) far fields.
pub(crate) fn radiate_moments(
    centers: &[Vec3],
    r_m: &[CVec3],
    q_m: &[CVec3],
    kv: f64,
    directions: &[Vec3],
) -> FarFieldSamples {
    let pref_e = kv * kv / (4.0 * std::f64::consts::PI);
    let pref_h = kv / (4.0 * std::f64::consts::PI); // carries the extra i
    let values: Vec<CVec3> = directions
        .par_iter()
        .map(|&xhat| {
            let mut acc = czero3();
            for (p, &z) in centers.iter().enumerate() {
                let phase = C64::new(0.0, -kv * dot3(xhat, z)).exp();
                // x̂×(R×x̂) = R − x̂(x̂·R)
                let r = r_m[p];
                let rdot = xhat[0] * r[0] + xhat[1] * r[1] + xhat[2] * r[2];
                let cross_q = cross3_rc(xhat, q_m[p]);
                for i in 0..3 {
                    let tangential = r[i] - rdot * xhat[i];
                    acc[i] += phase * (pref_e * tangential + C64::new(0.0, pref_h) * cross_q[i]);
                }
            }
            acc
        })
        .collect();
    FarFieldSamples {
        directions: directions.to_vec(),
        values,
    }
}

/// Discrete far-field pattern of a solved cluster at the given directions.
pub fn discrete_far_field(
    sol: &FoldyLaxSolution,
    cluster: &Cluster,
    pair: &PolarizationPair,
    k: Wavenumber,
    directions: &[Vec3],
) -> Result<FarFieldSamples, FoldyLaxError> {
    check_unit_directions(directions)?;
    let (r_m, q_m) = moments(sol, cluster, pair);
    Ok(radiate_moments(
        cluster.centers(),
        &r_m,
        &q_m,
        k.value(),
        directions,
    ))
}

// ---------------------------------------------------------------------------
// a-priori moment bounds
// ---------------------------------------------------------------------------

/// Both sides of the ℓ₂ a-priori moment estimates.
#[derive(Debug, Clone, Copy)]
pub struct MomentBounds {
    pub electric_lhs: f64,
    pub electric_rhs: f64,
    pub magnetic_lhs: f64,
    pub magnetic_rhs: f64,
    /// Whether c_r ≥ 3kλ⁺, the regime in which the estimates are proved.
    pub regime_ok: bool,
}

impl MomentBounds {
    pub fn hold(&self) -> bool {
        self.electric_lhs <= self.electric_rhs && self.magnetic_lhs <= self.magnetic_rhs
    }
}

/// Evaluate the a-priori bounds
///
/// ```text
/// (Σ|R_m|²)^½ ≤ (9λ⁺a³/8) [ ⅓(Σ|H^in(z_m)|²)^½ + (Σ|E^in(z_m)|²)^½ ]
/// ```
///
/// and its mirror with (Q, E↔H).
pub fn moment_l2_bounds(
    sol: &FoldyLaxSolution,
    cluster: &Cluster,
    pair: &PolarizationPair,
    pw: &PlaneWave,
) -> MomentBounds {
    let (r_m, q_m) = moments(sol, cluster, pair);
    let sq = |vs: &[CVec3]| vs.iter().map(|v| cnorm3(*v).powi(2)).sum::<f64>().sqrt();
    let electric_lhs = sq(&r_m);
    let magnetic_lhs = sq(&q_m);

    let mut e_sq = 0.0;
    let mut h_sq = 0.0;
    for &z in cluster.centers() {
        let (e, h) = pw.fields_at(z);
        e_sq += cnorm3(e).powi(2);
        h_sq += cnorm3(h).powi(2);
    }
    let (e_norm, h_norm) = (e_sq.sqrt(), h_sq.sqrt());

    let lambda_plus = pair.lambda_plus();
    let factor = 9.0 * lambda_plus * cluster.size().powi(3) / 8.0;
    let k = pw.wavenumber().value();
    MomentBounds {
        electric_lhs,
        electric_rhs: factor * (h_norm / 3.0 + e_norm),
        magnetic_lhs,
        magnetic_rhs: factor * (e_norm / 3.0 + h_norm),
        regime_ok: cluster.c_r() >= 3.0 * k * lambda_plus,
    }
}
