//! Lippmann-Schwinger volume solver for the homogenized medium.
//!
//! The effective scatterer fills Ω = (0,1)³ with constant contrast tensors
//! C_ε = c_r⁻³[Cᵀ_ε] and C_μ = c_r⁻³[Cᵀ_μ]; the fields satisfy
//!
//! ```text
//! U(x) − ∫_Ω [ Π_k(x,z) C_ε U(z) + ik ∇Φ_k(x,z)×(C_μ V(z)) ] dz = E^in(x)
//! V(x) − ∫_Ω [ Π_k(x,z) C_μ V(z) − ik ∇Φ_k(x,z)×(C_ε U(z)) ] dz = H^in(x)
//! ```
//!
//! Discretization is midpoint collocation on an N³ voxel grid with
//! voxel-constant densities, so both integrals become discrete convolutions
//! with kernels tabulated once per offset (h³ Π_k(h·d) and ik h³ ∇Φ_k(h·d))
//! and applied through zero-padded FFTs; a direct O(N⁶) summation backs the
//! FFT path as the cross-check oracle.
//!
//! The Π_k kernel is strongly singular, so the self-voxel entry cannot be a
//! point sample. Writing Π_k = (k²I + ∇∇)Φ_k, the ∇∇ part of the operator
//! evaluated at the center of a small ball of uniform density contributes
//! exactly −U/3 in the static limit, and the full integral over the
//! volume-equivalent ball (radius r = h·(3/(4π))^{1/3}) has the closed form
//!
//! ```text
//! ∫_{B_r} Π_k dz = [ (2/3)e^{ikr}(1 − ikr) − 1 ] · I,
//! ```
//!
//! which the tabulation uses at offset zero (the odd ∇Φ_k integrates to zero
//! there). A quadrature oracle over the actual cubic voxel pins the
//! shape-mismatch error in the tests.

use num_complex::Complex64;
use thiserror::Error;

use crate::effective::EffectiveTensors;
use crate::fft3d::Fft3;
use crate::foldy_lax::{check_unit_directions, radiate_moments, FarFieldSamples, FoldyLaxError};
use crate::kernels::{grad_phi, pi, CVec3, PlaneWave, Tensor3, Vec3};
use crate::la::{czero3, mat_scale, matvec3_rc};
use crate::polarization::PolarizationPair;
use crate::solver::{gmres, ComplexOperator, GmresConfig, GmresResult};

type C64 = Complex64;

#[derive(Debug, Error)]
pub enum LsError {
    #[error("grid resolution must be at least 1, got {0}")]
    InvalidGrid(usize),
    #[error("solver stalled at relative residual {residual:e} after {} iterations", history.len())]
    NotConverged { residual: f64, history: Vec<f64> },
    #[error(transparent)]
    BadDirection(#[from] FoldyLaxError),
}

/// The (already c_r⁻³-scaled) constant contrast tensors of the effective
/// medium, ε̊ − I and μ̊ − I.
#[derive(Debug, Clone, Copy)]
pub struct LsContrasts {
    pub electric: Tensor3,
    pub magnetic: Tensor3,
}

impl LsContrasts {
    /// Corrected-tensor contrasts c_r⁻³[Cᵀ].
    pub fn corrected(ops: &EffectiveTensors, c_r: f64) -> Self {
        let s = c_r.powi(-3);
        Self {
            electric: mat_scale(s, &ops.c_t_eps),
            magnetic: mat_scale(s, &ops.c_t_mu),
        }
    }

    /// Leading-order contrasts c_r⁻³[P₀].
    pub fn leading(pair: &PolarizationPair, c_r: f64) -> Self {
        let s = c_r.powi(-3);
        Self {
            electric: mat_scale(s, &pair.electric),
            magnetic: mat_scale(s, &pair.magnetic),
        }
    }

    pub fn zero() -> Self {
        Self {
            electric: [[0.0; 3]; 3],
            magnetic: [[0.0; 3]; 3],
        }
    }
}

/// ∫_{B_r} Π_k dz over the volume-equivalent ball of a voxel with edge h,
/// divided by the identity: (2/3)e^{ikr}(1 − ikr) − 1, r = h(3/(4π))^{1/3}.
///
/// Static limit −1/3; the deviation is the smooth O((kr)²) remainder.
pub fn self_ball_coefficient(k: f64, h: f64) -> C64 {
    let r = h * (3.0 / (4.0 * std::f64::consts::PI)).cbrt();
    let e = C64::new(0.0, k * r).exp();
    2.0 / 3.0 * e * C64::new(1.0, -k * r) - 1.0
}

/// Regularity diagnostic g(α,k) = k^{3+α} + k³ + k² + k + 1 from the
/// well-posedness condition; the full product g·c_r⁻³·c_∞ is reported with
/// the unknown regularity constant treated as 1.
pub fn g_alpha_k(alpha: f64, k: f64) -> f64 {
    k.powf(3.0 + alpha) + k.powi(3) + k.powi(2) + k + 1.0
}

// ---------------------------------------------------------------------------
// operator
// ---------------------------------------------------------------------------

enum Path {
    Fft {
        fft: Fft3,
        /// Π kernel spectra: components (00, 01, 02, 11, 12, 22).
        pi_hat: Vec<Vec<C64>>,
        /// Spectra of ik h³ ∇Φ.
        g_hat: Vec<Vec<C64>>,
    },
    Direct,
}

/// Matrix-free discretized LS operator I − (volume coupling).
pub struct LsOperator {
    n: usize,
    h: f64,
    ce: Tensor3,
    cm: Tensor3,
    k: f64,
    path: Path,
}

impl LsOperator {
    pub fn new(n: usize, contrasts: &LsContrasts, k: f64) -> Result<Self, LsError> {
        Self::with_fft(n, contrasts, k, true)
    }

    /// Direct-summation variant, the oracle for the FFT path.
    pub fn direct(n: usize, contrasts: &LsContrasts, k: f64) -> Result<Self, LsError> {
        Self::with_fft(n, contrasts, k, false)
    }

    fn with_fft(n: usize, contrasts: &LsContrasts, k: f64, use_fft: bool) -> Result<Self, LsError> {
        if n == 0 {
            return Err(LsError::InvalidGrid(n));
        }
        let h = 1.0 / n as f64;
        let path = if use_fft {
            let p = 2 * n;
            let fft = Fft3::new([p, p, p]);
            let mut pi_hat = vec![vec![C64::new(0.0, 0.0); fft.len()]; 6];
            let mut g_hat = vec![vec![C64::new(0.0, 0.0); fft.len()]; 3];
            let wrap = |d: isize| -> usize { d.rem_euclid(p as isize) as usize };
            let span = n as isize - 1;
            for dx in -span..=span {
                for dy in -span..=span {
                    for dz in -span..=span {
                        let idx = fft.index(wrap(dx), wrap(dy), wrap(dz));
                        let (t, g) = voxel_kernel(k, h, [dx, dy, dz]);
                        pi_hat[0][idx] = t[0][0];
                        pi_hat[1][idx] = t[0][1];
                        pi_hat[2][idx] = t[0][2];
                        pi_hat[3][idx] = t[1][1];
                        pi_hat[4][idx] = t[1][2];
                        pi_hat[5][idx] = t[2][2];
                        g_hat[0][idx] = g[0];
                        g_hat[1][idx] = g[1];
                        g_hat[2][idx] = g[2];
                    }
                }
            }
            for field in pi_hat.iter_mut().chain(g_hat.iter_mut()) {
                fft.forward(field);
            }
            Path::Fft { fft, pi_hat, g_hat }
        } else {
            Path::Direct
        };
        Ok(Self {
            n,
            h,
            ce: contrasts.electric,
            cm: contrasts.magnetic,
            k,
            path,
        })
    }

    pub fn grid_resolution(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn uses_fft(&self) -> bool {
        matches!(self.path, Path::Fft { .. })
    }

    fn voxels(&self) -> usize {
        self.n * self.n * self.n
    }

    fn voxel_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    fn apply_fft(&self, we: &[CVec3], wh: &[CVec3], out_e: &mut [CVec3], out_h: &mut [CVec3]) {
        let Path::Fft { fft, pi_hat, g_hat } = &self.path else {
            unreachable!("apply_fft on direct path");
        };
        let len = fft.len();
        let n = self.n;
        let mut fields: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); len]; 6];
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let v = self.voxel_index(ix, iy, iz);
                    let q = fft.index(ix, iy, iz);
                    for c in 0..3 {
                        fields[c][q] = we[v][c];
                        fields[3 + c][q] = wh[v][c];
                    }
                }
            }
        }
        for f in fields.iter_mut() {
            fft.forward(f);
        }
        let mut out: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); len]; 6];
        {
            let (oe, oh) = out.split_at_mut(3);
            for q in 0..len {
                let e = [fields[0][q], fields[1][q], fields[2][q]];
                let h = [fields[3][q], fields[4][q], fields[5][q]];
                let t = [
                    [pi_hat[0][q], pi_hat[1][q], pi_hat[2][q]],
                    [pi_hat[1][q], pi_hat[3][q], pi_hat[4][q]],
                    [pi_hat[2][q], pi_hat[4][q], pi_hat[5][q]],
                ];
                let g = [g_hat[0][q], g_hat[1][q], g_hat[2][q]];
                for i in 0..3 {
                    let pi_e = t[i][0] * e[0] + t[i][1] * e[1] + t[i][2] * e[2];
                    let pi_h = t[i][0] * h[0] + t[i][1] * h[1] + t[i][2] * h[2];
                    let (j, l) = ((i + 1) % 3, (i + 2) % 3);
                    oe[i][q] = pi_e + g[j] * h[l] - g[l] * h[j];
                    oh[i][q] = pi_h - (g[j] * e[l] - g[l] * e[j]);
                }
            }
        }
        for f in out.iter_mut() {
            fft.inverse(f);
        }
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let v = self.voxel_index(ix, iy, iz);
                    let q = fft.index(ix, iy, iz);
                    for c in 0..3 {
                        out_e[v][c] = out[c][q];
                        out_h[v][c] = out[3 + c][q];
                    }
                }
            }
        }
    }

    fn apply_direct(&self, we: &[CVec3], wh: &[CVec3], out_e: &mut [CVec3], out_h: &mut [CVec3]) {
        use rayon::prelude::*;
        let n = self.n as isize;
        let coords = |v: usize| -> [isize; 3] {
            let nz = self.n;
            [
                (v / (nz * nz)) as isize,
                ((v / nz) % nz) as isize,
                (v % nz) as isize,
            ]
        };
        out_e
            .par_iter_mut()
            .zip(out_h.par_iter_mut())
            .enumerate()
            .for_each(|(v, (oe, oh))| {
                let [ix, iy, iz] = coords(v);
                let mut acc_e = czero3();
                let mut acc_h = czero3();
                for jx in 0..n {
                    for jy in 0..n {
                        for jz in 0..n {
                            let j = ((jx * n + jy) * n + jz) as usize;
                            let (t, g) = voxel_kernel(self.k, self.h, [ix - jx, iy - jy, iz - jz]);
                            for i in 0..3 {
                                let (p, q) = ((i + 1) % 3, (i + 2) % 3);
                                acc_e[i] += t[i][0] * we[j][0]
                                    + t[i][1] * we[j][1]
                                    + t[i][2] * we[j][2]
                                    + g[p] * wh[j][q]
                                    - g[q] * wh[j][p];
                                acc_h[i] +=
                                    t[i][0] * wh[j][0] + t[i][1] * wh[j][1] + t[i][2] * wh[j][2]
                                        - (g[p] * we[j][q] - g[q] * we[j][p]);
                            }
                        }
                    }
                }
                *oe = acc_e;
                *oh = acc_h;
            });
    }
}

/// Tabulated voxel kernels at lattice offset d: midpoint rule h³Π_k(h·d) and
/// ik h³ ∇Φ_k(h·d) off the diagonal, the equivalent-ball value and zero at
/// d = 0.
fn voxel_kernel(k: f64, h: f64, d: [isize; 3]) -> ([[C64; 3]; 3], [C64; 3]) {
    if d == [0, 0, 0] {
        let s = self_ball_coefficient(k, h);
        let mut t = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            row[i] = s;
        }
        return (t, [C64::new(0.0, 0.0); 3]);
    }
    let w = [h * d[0] as f64, h * d[1] as f64, h * d[2] as f64];
    let vol = h * h * h;
    let mut t = pi(k, w, [0.0; 3]);
    for row in &mut t {
        for v in row {
            *v *= vol;
        }
    }
    let gp = grad_phi(k, w, [0.0; 3]);
    let ikv = C64::new(0.0, k * vol);
    (t, [ikv * gp[0], ikv * gp[1], ikv * gp[2]])
}

impl ComplexOperator for LsOperator {
    fn dim(&self) -> usize {
        6 * self.voxels()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let nv = self.voxels();
        let mut we = Vec::with_capacity(nv);
        let mut wh = Vec::with_capacity(nv);
        for v in 0..nv {
            let u = [x[3 * v], x[3 * v + 1], x[3 * v + 2]];
            let vv = [x[3 * (nv + v)], x[3 * (nv + v) + 1], x[3 * (nv + v) + 2]];
            we.push(matvec3_rc(&self.ce, u));
            wh.push(matvec3_rc(&self.cm, vv));
        }
        let mut out_e = vec![czero3(); nv];
        let mut out_h = vec![czero3(); nv];
        match self.path {
            Path::Fft { .. } => self.apply_fft(&we, &wh, &mut out_e, &mut out_h),
            Path::Direct => self.apply_direct(&we, &wh, &mut out_e, &mut out_h),
        }
        for v in 0..nv {
            for c in 0..3 {
                y[3 * v + c] = x[3 * v + c] - out_e[v][c];
                y[3 * (nv + v) + c] = x[3 * (nv + v) + c] - out_h[v][c];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// Voxel-collocated solution fields on the N³ grid over Ω.
#[derive(Debug, Clone)]
pub struct VolumeField {
    pub n: usize,
    /// Voxel edge h = 1/N.
    pub spacing: f64,
    /// U at voxel centers, index (ix·N + iy)·N + iz.
    pub u: Vec<CVec3>,
    pub v: Vec<CVec3>,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl VolumeField {
    pub fn voxel_center(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        [
            (ix as f64 + 0.5) * self.spacing,
            (iy as f64 + 0.5) * self.spacing,
            (iz as f64 + 0.5) * self.spacing,
        ]
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    /// Trilinear interpolation of U at a point of Ω (cell-centered grid,
    /// clamped at the boundary layer).
    pub fn sample_u(&self, x: Vec3) -> CVec3 {
        self.sample(&self.u, x)
    }

    pub fn sample_v(&self, x: Vec3) -> CVec3 {
        self.sample(&self.v, x)
    }

    fn sample(&self, field: &[CVec3], x: Vec3) -> CVec3 {
        let mut i0 = [0usize; 3];
        let mut t = [0.0f64; 3];
        for c in 0..3 {
            let g = x[c] / self.spacing - 0.5;
            let base = if self.n == 1 {
                0.0
            } else {
                g.floor().clamp(0.0, (self.n - 2) as f64)
            };
            i0[c] = base as usize;
            t[c] = (g - base).clamp(0.0, 1.0);
        }
        let mut acc = czero3();
        for dx in 0..2usize.min(self.n) {
            for dy in 0..2usize.min(self.n) {
                for dz in 0..2usize.min(self.n) {
                    let w = (if dx == 0 { 1.0 - t[0] } else { t[0] })
                        * (if dy == 0 { 1.0 - t[1] } else { t[1] })
                        * (if dz == 0 { 1.0 - t[2] } else { t[2] });
                    if w == 0.0 {
                        continue;
                    }
                    let v = field[self.index(i0[0] + dx, i0[1] + dy, i0[2] + dz)];
                    for c in 0..3 {
                        acc[c] += w * v[c];
                    }
                }
            }
        }
        acc
    }

    /// ℓ₂ norm of the U samples (no volume weight).
    pub fn u_norm(&self) -> f64 {
        self.u
            .iter()
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Incident fields at the voxel centers, packed U-block-then-V-block.
fn incident_rhs(n: usize, pw: &PlaneWave) -> Vec<C64> {
    let h = 1.0 / n as f64;
    let nv = n * n * n;
    let mut rhs = vec![C64::new(0.0, 0.0); 6 * nv];
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let v = (ix * n + iy) * n + iz;
                let x = [
                    (ix as f64 + 0.5) * h,
                    (iy as f64 + 0.5) * h,
                    (iz as f64 + 0.5) * h,
                ];
                let (e, hf) = pw.fields_at(x);
                for c in 0..3 {
                    rhs[3 * v + c] = e[c];
                    rhs[3 * (nv + v) + c] = hf[c];
                }
            }
        }
    }
    rhs
}

/// Solve the discretized LS system on an N³ grid with restarted GMRES.
pub fn ls_solve(
    n: usize,
    contrasts: &LsContrasts,
    pw: &PlaneWave,
    tol: f64,
) -> Result<VolumeField, LsError> {
    let cfg = GmresConfig {
        tol,
        ..GmresConfig::default()
    };
    ls_solve_with(n, contrasts, pw, &cfg)
}

/// [`ls_solve`] with full control over the iterative-solver parameters.
pub fn ls_solve_with(
    n: usize,
    contrasts: &LsContrasts,
    pw: &PlaneWave,
    gmres_cfg: &GmresConfig,
) -> Result<VolumeField, LsError> {
    let op = LsOperator::new(n, contrasts, pw.wavenumber().value())?;
    let rhs = incident_rhs(n, pw);
    let GmresResult {
        x,
        iterations,
        residual,
        converged,
        residual_history,
    } = gmres(&op, &rhs, gmres_cfg);
    if !converged {
        return Err(LsError::NotConverged {
            residual,
            history: residual_history,
        });
    }
    let nv = n * n * n;
    let mut u = Vec::with_capacity(nv);
    let mut v = Vec::with_capacity(nv);
    for p in 0..nv {
        u.push([x[3 * p], x[3 * p + 1], x[3 * p + 2]]);
        v.push([x[3 * (nv + p)], x[3 * (nv + p) + 1], x[3 * (nv + p) + 2]]);
    }
    Ok(VolumeField {
        n,
        spacing: 1.0 / n as f64,
        u,
        v,
        residual_norm: residual,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// far field
// ---------------------------------------------------------------------------

/// Far-field of the effective medium by voxel midpoint quadrature:
///
/// ```text
/// E∞(x̂) = ∫_Ω e^{−ik x̂·z} [ (k²/4π) x̂×((C_ε U)×x̂) + (ik/4π) x̂×(C_μ V) ] dz.
/// ```
///
/// The contrast argument selects the corrected ([Cᵀ]) or leading ([P₀])
/// far-field form; both integrate the same solved field.
pub fn effective_far_field(
    field: &VolumeField,
    contrasts: &LsContrasts,
    k: f64,
    directions: &[Vec3],
) -> Result<FarFieldSamples, LsError> {
    check_unit_directions(directions)?;
    let nv = field.n * field.n * field.n;
    let vol = field.spacing.powi(3);
    let mut centers = Vec::with_capacity(nv);
    let mut r_m = Vec::with_capacity(nv);
    let mut q_m = Vec::with_capacity(nv);
    for ix in 0..field.n {
        for iy in 0..field.n {
            for iz in 0..field.n {
                let v = field.index(ix, iy, iz);
                centers.push(field.voxel_center(ix, iy, iz));
                let r = matvec3_rc(&contrasts.electric, field.u[v]);
                let q = matvec3_rc(&contrasts.magnetic, field.v[v]);
                r_m.push([vol * r[0], vol * r[1], vol * r[2]]);
                q_m.push([vol * q[0], vol * q[1], vol * q[2]]);
            }
        }
    }
    Ok(radiate_moments(&centers, &r_m, &q_m, k, directions))
}
