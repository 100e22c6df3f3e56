//! Deterministic artifact writers.
//!
//! Reports are built as strings with a fixed field order and floats printed
//! at 17 significant digits (`{:.16e}`), so identical inputs yield
//! byte-identical files. Non-finite values serialize as `null` — JSON has
//! no spelling for them.

use std::fmt::Write as _;

use crate::analysis::{ComparisonReport, SweepPoint};
use crate::effective::{EffectiveParameters, EffectiveTensors};
use crate::foldy_lax::{FarFieldSamples, FoldyLaxSolution, MomentBounds};
use crate::kernels::Tensor3;
use crate::ls_solver::VolumeField;

/// One float at full precision, or `null` when not representable.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn mat(m: &Tensor3) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| format!("[{},{},{}]", num(r[0]), num(r[1]), num(r[2])))
        .collect();
    format!("[{}]", rows.join(","))
}

// ---------------------------------------------------------------------------
// far-field CSV
// ---------------------------------------------------------------------------

/// CSV with one row per direction: the direction followed by the complex
/// components of E∞.
pub fn far_field_csv(samples: &FarFieldSamples) -> String {
    let mut out = String::with_capacity(32 + samples.directions.len() * 220);
    out.push_str("dir_x,dir_y,dir_z,ReEx,ImEx,ReEy,ImEy,ReEz,ImEz\n");
    for (d, e) in samples.directions.iter().zip(&samples.values) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(d[0]),
            num(d[1]),
            num(d[2]),
            num(e[0].re),
            num(e[0].im),
            num(e[1].re),
            num(e[1].im),
            num(e[2].re),
            num(e[2].im),
        );
    }
    out
}

// ---------------------------------------------------------------------------
// JSON reports
// ---------------------------------------------------------------------------

pub fn k0_report(k0: &Tensor3, deviation_from_minus_third: f64) -> String {
    format!(
        "{{\"K0\":{},\"deviation_from_minus_third\":{}}}\n",
        mat(k0),
        num(deviation_from_minus_third)
    )
}

pub fn effective_report(
    c_r: f64,
    tensors: &EffectiveTensors,
    params: &EffectiveParameters,
) -> String {
    format!(
        "{{\"c_r\":{},\"K0\":{},\"C_T_eps\":{},\"C_T_mu\":{},\"eps_ring\":{},\"mu_ring\":{},\"eps_ring_leading\":{},\"mu_ring_leading\":{},\"spectral_radius\":{}}}\n",
        num(c_r),
        mat(&tensors.k0),
        mat(&tensors.c_t_eps),
        mat(&tensors.c_t_mu),
        mat(&params.eps_ring),
        mat(&params.mu_ring),
        mat(&params.eps_ring_leading),
        mat(&params.mu_ring_leading),
        num(tensors.spectral_radius),
    )
}

pub fn foldy_lax_report(
    particles: usize,
    sol: &FoldyLaxSolution,
    far: &FarFieldSamples,
    bounds: &MomentBounds,
) -> String {
    format!(
        "{{\"particles\":{},\"unknowns\":{},\"iterations\":{},\"residual_norm\":{},\"moment_bounds\":{{\"electric_lhs\":{},\"electric_rhs\":{},\"magnetic_lhs\":{},\"magnetic_rhs\":{},\"regime_ok\":{},\"hold\":{}}},\"far_field\":{{\"directions\":{},\"sup_norm\":{},\"transversality\":{}}}}}\n",
        particles,
        6 * particles,
        sol.solver_iterations,
        num(sol.residual_norm),
        num(bounds.electric_lhs),
        num(bounds.electric_rhs),
        num(bounds.magnetic_lhs),
        num(bounds.magnetic_rhs),
        bounds.regime_ok,
        bounds.hold(),
        far.directions.len(),
        num(far.sup_norm()),
        num(far.transversality_defect()),
    )
}

/// Grid solution dump: flattened complex arrays in voxel order
/// (ix·N + iy)·N + iz, each entry `[Re, Im]` per component.
pub fn volume_field_json(field: &VolumeField, g_alpha_k: f64) -> String {
    let nv = field.u.len();
    let mut out = String::with_capacity(200 + nv * 320);
    let _ = write!(
        out,
        "{{\"N\":{},\"spacing\":{},\"iterations\":{},\"residual_norm\":{},\"g_alpha_k\":{},\"u\":[",
        field.n,
        num(field.spacing),
        field.iterations,
        num(field.residual_norm),
        num(g_alpha_k),
    );
    for (p, val) in field.u.iter().enumerate() {
        if p > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "[{},{},{},{},{},{}]",
            num(val[0].re),
            num(val[0].im),
            num(val[1].re),
            num(val[1].im),
            num(val[2].re),
            num(val[2].im)
        );
    }
    out.push_str("],\"v\":[");
    for (p, val) in field.v.iter().enumerate() {
        if p > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "[{},{},{},{},{},{}]",
            num(val[0].re),
            num(val[0].im),
            num(val[1].re),
            num(val[1].im),
            num(val[2].re),
            num(val[2].im)
        );
    }
    out.push_str("]}\n");
    out
}

#[derive(Debug, Clone)]
pub struct CountingPoint {
    pub n: usize,
    pub delta: f64,
    pub max_sum: f64,
    pub mean_sum: f64,
}

#[derive(Debug, Clone)]
pub struct CountingEntry {
    pub exponent: f64,
    pub points: Vec<CountingPoint>,
    /// Slope of log(max_sum) against log(δ).
    pub fitted_slope: f64,
}

pub fn counting_report(entries: &[CountingEntry]) -> String {
    let mut out = String::from("{\"counting\":[");
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{{\"exponent\":{},\"points\":[", num(e.exponent));
        for (j, p) in e.points.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(
                out,
                "{{\"n\":{},\"delta\":{},\"max_sum\":{},\"mean_sum\":{}}}",
                p.n,
                num(p.delta),
                num(p.max_sum),
                num(p.mean_sum)
            );
        }
        let _ = write!(out, "],\"fitted_slope\":{}}}", num(e.fitted_slope));
    }
    out.push_str("]}\n");
    out
}

fn sweep_point(p: &SweepPoint) -> String {
    format!(
        "{{\"c_r\":{},\"abs_err\":{},\"rel_err\":{},\"l2_eps\":{},\"l2_mu\":{},\"transversality_disc\":{},\"transversality_eff\":{}}}",
        num(p.c_r),
        num(p.abs_err),
        num(p.rel_err),
        num(p.l2_eps),
        num(p.l2_mu),
        num(p.transversality_disc),
        num(p.transversality_eff),
    )
}

/// Single-point discrete-vs-effective comparison.
pub fn compare_report(point: &SweepPoint, config_echo: &str) -> String {
    format!(
        "{{\"comparison\":{},\"config_echo\":{}}}\n",
        sweep_point(point),
        config_echo.trim()
    )
}

/// Full sweep report. `config_echo` must already be canonical JSON; it is
/// embedded verbatim.
pub fn sweep_report(report: &ComparisonReport, config_echo: &str) -> String {
    let points: Vec<String> = report.sweep.iter().map(sweep_point).collect();
    format!(
        "{{\"sweep\":[{}],\"fitted_slope\":{},\"config_echo\":{}}}\n",
        points.join(","),
        num(report.fitted_slope),
        config_echo.trim()
    )
}
