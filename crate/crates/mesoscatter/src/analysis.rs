//! Cross-module verification: the discrete cluster against its effective
//! medium.
//!
//! The headline quantity is the far-field gap sup_{x̂}|E∞(x̂) − E∞_eff(x̂)|
//! over a spherical direction design, swept over the dilution c_r at fixed
//! lattice resolution; the relative gap should decay like c_r⁻³ (both fields
//! scale like c_r⁻³ while their difference is O(c_r⁻⁶)).
//!
//! The pointwise diagnostic behind that decay compares the Foldy-Lax moments
//! with ball averages of the volume solution: for each particle ball S_m,
//!
//! ```text
//! d_m = (I − K^ε) · (1/|S_m|) ∫_{S_m} U^{ε̊} dx − U_m,
//! ```
//!
//! and (Σ_m |d_m|²)^{1/2} should stay bounded once compensated by
//! c_r^{9/2} a^{3/2} (and likewise for the magnetic pair). Ball averages use
//! exact voxel-in-ball volume weights (adaptive octree) when the LS grid
//! resolves each ball, trilinear interpolation otherwise — the result says
//! which.

use rayon::prelude::*;
use thiserror::Error;

use crate::cluster::Cluster;
use crate::effective::{compute_c_tensors, compute_k0, EffectiveError, EffectiveTensors};
use crate::foldy_lax::{
    discrete_far_field, solve_with, FarFieldSamples, FoldyLaxError, FoldyLaxSolution, SolveMethod,
};
use crate::kernels::{PlaneWave, Vec3};
use crate::la::{cnorm3, csub3, dot3, mat_sub, matvec3_rc, IDENTITY3};
use crate::ls_solver::{effective_far_field, ls_solve_with, LsContrasts, LsError, VolumeField};
use crate::polarization::PolarizationPair;
use crate::solver::GmresConfig;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("far-field samples use different direction sets")]
    DirectionSetMismatch,
    #[error("ball average around particle {index} sampled no voxels")]
    EmptyBallSampling { index: usize },
    #[error(transparent)]
    Effective(#[from] EffectiveError),
    #[error(transparent)]
    FoldyLax(#[from] FoldyLaxError),
    #[error(transparent)]
    Ls(#[from] LsError),
}

// ---------------------------------------------------------------------------
// direction design and slope fits
// ---------------------------------------------------------------------------

/// Deterministic golden-angle spiral design on the unit sphere.
///
/// Near-uniform coverage with no stored tables, which keeps sup-norm
/// estimates stable under rerun — the default far-field direction set.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let v = [r * phi.cos(), r * phi.sin(), z];
            let n = dot3(v, v).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        })
        .collect()
}

/// Least-squares slope of ln(y) against ln(x). Needs at least three
/// positive samples — the callers' sweeps guarantee that.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    assert!(points.len() >= 3, "slope fit needs at least 3 points");
    assert!(
        points.iter().all(|&(x, y)| x > 0.0 && y > 0.0),
        "slope fit needs positive data"
    );
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

// ---------------------------------------------------------------------------
// far-field comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct FarFieldComparison {
    /// sup over directions of |E∞ − E∞_eff|.
    pub abs_err: f64,
    /// abs_err normalized by sup|E∞_eff|; +∞ when the reference vanishes
    /// but the discrete field does not.
    pub rel_err: f64,
}

/// Sup-norm comparison of two far-field sample sets over one direction set.
pub fn compare_far_fields(
    disc: &FarFieldSamples,
    eff: &FarFieldSamples,
) -> Result<FarFieldComparison, AnalysisError> {
    if disc.directions.len() != eff.directions.len()
        || disc
            .directions
            .iter()
            .zip(&eff.directions)
            .any(|(a, b)| a != b)
    {
        return Err(AnalysisError::DirectionSetMismatch);
    }
    let abs_err = disc
        .values
        .iter()
        .zip(&eff.values)
        .map(|(a, b)| cnorm3(csub3(*a, *b)))
        .fold(0.0, f64::max);
    let scale = eff.sup_norm();
    let rel_err = if scale > 0.0 {
        abs_err / scale
    } else if abs_err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(FarFieldComparison { abs_err, rel_err })
}

// ---------------------------------------------------------------------------
// ℓ₂ comparison vectors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct L2Comparison {
    pub eps_norm: f64,
    pub mu_norm: f64,
    /// True when the grid was too coarse for volume weights and the ball
    /// averages fell back to trilinear interpolation at the centers.
    pub interpolated: bool,
}

/// Volume of the overlap between an axis-aligned cube and a ball, by
/// adaptive octree subdivision (midpoint rule at the leaf level).
fn cube_ball_overlap(lo: Vec3, edge: f64, center: Vec3, radius: f64, depth: u32) -> f64 {
    let mut near = 0.0;
    let mut far = 0.0;
    for c in 0..3 {
        let hi = lo[c] + edge;
        let d_lo = center[c] - lo[c];
        let d_hi = center[c] - hi;
        // Nearest point of the box per axis.
        let n = if center[c] < lo[c] {
            d_lo
        } else if center[c] > hi {
            d_hi
        } else {
            0.0
        };
        near += n * n;
        far += d_lo.abs().max(d_hi.abs()).powi(2);
    }
    let r2 = radius * radius;
    if near >= r2 {
        return 0.0;
    }
    let vol = edge * edge * edge;
    if far <= r2 {
        return vol;
    }
    if depth == 0 {
        let mid = [lo[0] + edge / 2.0, lo[1] + edge / 2.0, lo[2] + edge / 2.0];
        let d2: f64 = (0..3).map(|c| (mid[c] - center[c]).powi(2)).sum();
        return if d2 <= r2 { vol } else { 0.0 };
    }
    let half = edge / 2.0;
    let mut sum = 0.0;
    for dx in 0..2 {
        for dy in 0..2 {
            for dz in 0..2 {
                let child = [
                    lo[0] + dx as f64 * half,
                    lo[1] + dy as f64 * half,
                    lo[2] + dz as f64 * half,
                ];
                sum += cube_ball_overlap(child, half, center, radius, depth - 1);
            }
        }
    }
    sum
}

/// Ball average of both solution fields over |x − center| < radius using
/// voxel-in-ball volume weights.
fn ball_average_exact(
    field: &VolumeField,
    center: Vec3,
    radius: f64,
) -> Option<([num_complex::Complex64; 3], [num_complex::Complex64; 3])> {
    let h = field.spacing;
    let n = field.n as isize;
    let clamp = |v: isize| v.clamp(0, n - 1) as usize;
    let lo_i: Vec<usize> = (0..3)
        .map(|c| clamp(((center[c] - radius) / h).floor() as isize))
        .collect();
    let hi_i: Vec<usize> = (0..3)
        .map(|c| clamp(((center[c] + radius) / h).floor() as isize))
        .collect();
    let mut weight = 0.0;
    let mut u = crate::la::czero3();
    let mut v = crate::la::czero3();
    for ix in lo_i[0]..=hi_i[0] {
        for iy in lo_i[1]..=hi_i[1] {
            for iz in lo_i[2]..=hi_i[2] {
                let corner = [ix as f64 * h, iy as f64 * h, iz as f64 * h];
                let w = cube_ball_overlap(corner, h, center, radius, 6);
                if w == 0.0 {
                    continue;
                }
                let idx = field.index(ix, iy, iz);
                for c in 0..3 {
                    u[c] += w * field.u[idx][c];
                    v[c] += w * field.v[idx][c];
                }
                weight += w;
            }
        }
    }
    if weight == 0.0 {
        return None;
    }
    for c in 0..3 {
        u[c] /= weight;
        v[c] /= weight;
    }
    Some((u, v))
}

/// ℓ₂ norms of the moment comparison vectors
/// (I − K^{ε})·avg_{S_m}(U^{ε̊}) − U_m and its magnetic mirror.
pub fn l2_comparison_vectors(
    sol: &FoldyLaxSolution,
    field: &VolumeField,
    cluster: &Cluster,
    ops: &EffectiveTensors,
) -> Result<L2Comparison, AnalysisError> {
    let radius = cluster.size();
    // Volume weights need the grid to resolve each ball: N·δ ≥ 4 voxels per
    // lattice cell.
    let exact = field.n as f64 * cluster.delta() >= 4.0 - 1e-9;
    let i_minus_ke = mat_sub(&IDENTITY3, &ops.k_eps);
    let i_minus_km = mat_sub(&IDENTITY3, &ops.k_mu);

    let per_particle: Result<Vec<(f64, f64)>, AnalysisError> = cluster
        .centers()
        .par_iter()
        .enumerate()
        .map(|(m, &z)| {
            let (u_avg, v_avg) = if exact {
                ball_average_exact(field, z, radius)
                    .ok_or(AnalysisError::EmptyBallSampling { index: m })?
            } else {
                (field.sample_u(z), field.sample_v(z))
            };
            let de = csub3(matvec3_rc(&i_minus_ke, u_avg), sol.u[m]);
            let dm = csub3(matvec3_rc(&i_minus_km, v_avg), sol.v[m]);
            Ok((cnorm3(de).powi(2), cnorm3(dm).powi(2)))
        })
        .collect();
    let per_particle = per_particle?;
    // Sequential reduction in particle order keeps the result reproducible.
    let (eps_sq, mu_sq) = per_particle
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    Ok(L2Comparison {
        eps_norm: eps_sq.sqrt(),
        mu_norm: mu_sq.sqrt(),
        interpolated: !exact,
    })
}

// ---------------------------------------------------------------------------
// sweep driver
// ---------------------------------------------------------------------------

/// One full discrete-vs-effective pipeline configuration.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    /// Lattice resolution n (δ = 1/n, M = n³).
    pub lattice_n: usize,
    /// LS voxel grid resolution N.
    pub ls_grid: usize,
    pub pw: PlaneWave,
    pub pair: PolarizationPair,
    /// Dilution sweep, typically {2, 4, 8}.
    pub c_r_values: Vec<f64>,
    /// Unit far-field directions the sup norm is taken over.
    pub directions: Vec<Vec3>,
    pub method: SolveMethod,
    pub tol: f64,
    /// Iteration cap shared by both iterative solvers.
    pub max_iter: usize,
    /// Gauss-Legendre order for the K⁰ quadrature.
    pub k0_order: usize,
}

/// Results of one sweep point.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub c_r: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub l2_eps: f64,
    pub l2_mu: f64,
    pub transversality_disc: f64,
    pub transversality_eff: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub sweep: Vec<SweepPoint>,
    /// Slope of ln(rel_err) vs ln(c_r); NaN when fewer than three positive
    /// errors are available.
    pub fitted_slope: f64,
}

/// Run the full pipeline for each c_r and fit the far-field decay slope.
pub fn convergence_study(cfg: &StudyConfig) -> Result<ComparisonReport, AnalysisError> {
    let gmres = GmresConfig {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..GmresConfig::default()
    };
    let k0 = compute_k0(cfg.k0_order);
    let kv = cfg.pw.wavenumber().value();
    let mut sweep = Vec::with_capacity(cfg.c_r_values.len());
    for &c_r in &cfg.c_r_values {
        let cluster = Cluster::lattice(cfg.lattice_n, c_r).expect("valid sweep lattice");
        let ops = compute_c_tensors(&cfg.pair, c_r, &k0)?;
        let sol = solve_with(&cluster, &cfg.pair, &cfg.pw, cfg.method, &gmres)?;
        let e_disc = discrete_far_field(
            &sol,
            &cluster,
            &cfg.pair,
            cfg.pw.wavenumber(),
            &cfg.directions,
        )?;
        let contrasts = LsContrasts::corrected(&ops, c_r);
        let volume = ls_solve_with(cfg.ls_grid, &contrasts, &cfg.pw, &gmres)?;
        let e_eff = effective_far_field(&volume, &contrasts, kv, &cfg.directions)?;
        let cmp = compare_far_fields(&e_disc, &e_eff)?;
        let l2 = l2_comparison_vectors(&sol, &volume, &cluster, &ops)?;
        sweep.push(SweepPoint {
            c_r,
            abs_err: cmp.abs_err,
            rel_err: cmp.rel_err,
            l2_eps: l2.eps_norm,
            l2_mu: l2.mu_norm,
            transversality_disc: e_disc.transversality_defect(),
            transversality_eff: e_eff.transversality_defect(),
        });
    }
    let positive: Vec<(f64, f64)> = sweep
        .iter()
        .filter(|p| p.rel_err > 0.0 && p.rel_err.is_finite())
        .map(|p| (p.c_r, p.rel_err))
        .collect();
    let fitted_slope = if positive.len() >= 3 {
        fit_loglog_slope(&positive)
    } else {
        f64::NAN
    };
    Ok(ComparisonReport {
        sweep,
        fitted_slope,
    })
}
