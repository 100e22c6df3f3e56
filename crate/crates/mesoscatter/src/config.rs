//! JSON experiment configuration: schema, validation, and construction of
//! the domain objects the pipeline runs on.
//!
//! Validation errors name the offending field by path (`wave.P`,
//! `sweep.c_r[1]`, …) so batch runs fail with actionable diagnostics.
//! Physical invariants beyond the schema (SPD tensors, separation bounds)
//! stay with the module constructors; this layer only rejects what the
//! schema itself promises.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::fibonacci_sphere;
use crate::cluster::{Cluster, ClusterError, ShapeMask};
use crate::foldy_lax::SolveMethod;
use crate::kernels::{KernelError, PlaneWave, Vec3, Wavenumber};
use crate::la::{dot3, norm3};
use crate::polarization::{PolarizationError, PolarizationPair, Shape};
use crate::solver::GmresConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub k: f64,
    pub theta: [f64; 3],
    #[serde(rename = "P")]
    pub polarization: [f64; 3],
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum MaskConfig {
    Cube,
    Ball {
        #[serde(default = "default_mask_center")]
        center: [f64; 3],
        #[serde(default = "default_mask_radius")]
        radius: f64,
    },
}

fn default_mask_center() -> [f64; 3] {
    [0.5, 0.5, 0.5]
}

/// Radius giving the unit-volume ball.
fn default_mask_radius() -> f64 {
    (3.0 / (4.0 * std::f64::consts::PI)).cbrt()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClusterConfig {
    Lattice {
        n: usize,
        c_r: f64,
    },
    Clipped {
        n: usize,
        c_r: f64,
        mask: MaskConfig,
    },
    /// Explicit center list for non-periodic distributions.
    Centers {
        centers: Vec<[f64; 3]>,
        size: f64,
        c_r: f64,
    },
}

impl ClusterConfig {
    pub fn c_r(&self) -> f64 {
        match self {
            ClusterConfig::Lattice { c_r, .. }
            | ClusterConfig::Clipped { c_r, .. }
            | ClusterConfig::Centers { c_r, .. } => *c_r,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeConfig {
    Sphere {
        eps: f64,
        mu: f64,
    },
    Ellipsoid {
        axes: [f64; 3],
        eps: f64,
        mu: f64,
    },
    Custom {
        #[serde(rename = "P0_eps")]
        p0_eps: [[f64; 3]; 3],
        #[serde(rename = "P0_mu")]
        p0_mu: [[f64; 3]; 3],
    },
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MethodConfig {
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_method")]
    pub method: MethodConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_method() -> MethodConfig {
    MethodConfig::Auto
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    2000
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: default_method(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LsConfig {
    #[serde(rename = "N", default = "default_ls_n")]
    pub n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Hölder exponent fed to the regularity diagnostic g(α,k).
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_ls_n() -> usize {
    16
}
fn default_alpha() -> f64 {
    1.0
}

impl Default for LsConfig {
    fn default() -> Self {
        LsConfig {
            n: default_ls_n(),
            tol: default_tol(),
            alpha: default_alpha(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub c_r: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub far_field_csv: Option<PathBuf>,
    #[serde(default)]
    pub report_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CountingConfig {
    #[serde(default = "default_exponents")]
    pub exponents: Vec<f64>,
    #[serde(default = "default_counting_n")]
    pub n: Vec<usize>,
}

fn default_exponents() -> Vec<f64> {
    vec![2.0, 4.0]
}
fn default_counting_n() -> Vec<usize> {
    vec![4, 6, 8, 12, 16]
}

impl Default for CountingConfig {
    fn default() -> Self {
        CountingConfig {
            exponents: default_exponents(),
            n: default_counting_n(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub wave: WaveConfig,
    pub cluster: ClusterConfig,
    pub shape: ShapeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub ls: LsConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub counting: Option<CountingConfig>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    /// Far-field direction design size (golden-angle spiral).
    #[serde(default = "default_direction_count")]
    pub direction_count: usize,
    /// Explicit far-field directions; overrides `direction_count`.
    #[serde(default)]
    pub directions: Option<Vec<[f64; 3]>>,
    /// Gauss-Legendre order for the K⁰ quadrature.
    #[serde(default = "default_k0_order")]
    pub k0_order: usize,
    /// Seed for any sampled design. The shipped direction designs are
    /// deterministic, so this only pins future sampling extensions.
    #[serde(default)]
    pub seed: u64,
}

fn default_direction_count() -> usize {
    86
}
fn default_k0_order() -> usize {
    12
}

// ---------------------------------------------------------------------------
// loading and validation
// ---------------------------------------------------------------------------

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn check_unit(path: &str, v: [f64; 3]) -> Result<(), ConfigError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(path, "components must be finite"));
    }
    if (norm3(v) - 1.0).abs() > 1e-12 {
        return Err(invalid(
            path,
            format!("must be a unit vector (|v| = {})", norm3(v)),
        ));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.wave.k.is_finite() && self.wave.k > 0.0) {
            return Err(invalid("wave.k", "wavenumber must be positive and finite"));
        }
        check_unit("wave.theta", self.wave.theta)?;
        check_unit("wave.P", self.wave.polarization)?;
        if dot3(self.wave.theta, self.wave.polarization).abs() > 1e-12 {
            return Err(invalid(
                "wave.P",
                "polarization must satisfy P·theta = 0 (transverse wave)",
            ));
        }

        match &self.cluster {
            ClusterConfig::Lattice { n, c_r } | ClusterConfig::Clipped { n, c_r, .. } => {
                if *n == 0 {
                    return Err(invalid("cluster.n", "lattice resolution must be >= 1"));
                }
                if !(c_r.is_finite() && *c_r >= 1.0) {
                    return Err(invalid("cluster.c_r", "dilution ratio must be >= 1"));
                }
            }
            ClusterConfig::Centers { centers, size, c_r } => {
                if centers.is_empty() {
                    return Err(invalid("cluster.centers", "at least one center required"));
                }
                if !(size.is_finite() && *size > 0.0) {
                    return Err(invalid("cluster.size", "particle size must be positive"));
                }
                if !(c_r.is_finite() && *c_r >= 1.0) {
                    return Err(invalid("cluster.c_r", "dilution ratio must be >= 1"));
                }
            }
        }
        if let ClusterConfig::Clipped {
            mask: MaskConfig::Ball { radius, .. },
            ..
        } = &self.cluster
        {
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(invalid("cluster.mask.radius", "radius must be positive"));
            }
        }

        match &self.shape {
            ShapeConfig::Sphere { eps, mu } | ShapeConfig::Ellipsoid { eps, mu, .. } => {
                if !(eps.is_finite() && *eps >= 1.0) {
                    return Err(invalid("shape.eps", "relative permittivity must be >= 1"));
                }
                if !(mu.is_finite() && *mu >= 1.0) {
                    return Err(invalid("shape.mu", "relative permeability must be >= 1"));
                }
            }
            ShapeConfig::Custom { .. } => {
                // SPD checks live in PolarizationPair::custom.
            }
        }
        if let ShapeConfig::Ellipsoid { axes, .. } = &self.shape {
            if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(invalid("shape.axes", "semi-axes must be positive"));
            }
        }

        if !(self.solver.tol.is_finite() && self.solver.tol > 0.0) {
            return Err(invalid("solver.tol", "tolerance must be positive"));
        }
        if self.solver.max_iter == 0 {
            return Err(invalid("solver.max_iter", "iteration budget must be >= 1"));
        }
        if self.ls.n == 0 {
            return Err(invalid("ls.N", "grid resolution must be >= 1"));
        }
        if !(self.ls.tol.is_finite() && self.ls.tol > 0.0) {
            return Err(invalid("ls.tol", "tolerance must be positive"));
        }
        if !(self.ls.alpha.is_finite() && self.ls.alpha > 0.0 && self.ls.alpha <= 1.0) {
            return Err(invalid("ls.alpha", "Hölder exponent must lie in (0, 1]"));
        }

        if let Some(sweep) = &self.sweep {
            if sweep.c_r.is_empty() {
                return Err(invalid("sweep.c_r", "sweep needs at least one value"));
            }
            for (i, c) in sweep.c_r.iter().enumerate() {
                if !(c.is_finite() && *c >= 1.0) {
                    return Err(invalid(
                        &format!("sweep.c_r[{i}]"),
                        "dilution ratio must be >= 1",
                    ));
                }
            }
        }

        if let Some(counting) = &self.counting {
            for (i, e) in counting.exponents.iter().enumerate() {
                if !(e.is_finite() && *e > 0.0) {
                    return Err(invalid(
                        &format!("counting.exponents[{i}]"),
                        "exponent must be positive",
                    ));
                }
            }
            if counting.n.len() < 3 {
                return Err(invalid("counting.n", "slope fit needs >= 3 lattice sizes"));
            }
            for (i, n) in counting.n.iter().enumerate() {
                if *n < 2 {
                    return Err(invalid(
                        &format!("counting.n[{i}]"),
                        "lattice size must be >= 2 so that M >= 2",
                    ));
                }
            }
        }

        if self.directions.is_none() && self.direction_count == 0 {
            return Err(invalid("direction_count", "need at least one direction"));
        }
        if let Some(dirs) = &self.directions {
            if dirs.is_empty() {
                return Err(invalid("directions", "need at least one direction"));
            }
            for (i, d) in dirs.iter().enumerate() {
                check_unit(&format!("directions[{i}]"), *d)?;
            }
        }
        if self.k0_order == 0 {
            return Err(invalid("k0_order", "quadrature order must be >= 1"));
        }
        Ok(())
    }

    // -- builders ----------------------------------------------------------

    pub fn plane_wave(&self) -> Result<PlaneWave, KernelError> {
        let k = Wavenumber::new(self.wave.k)?;
        PlaneWave::new(k, self.wave.theta, self.wave.polarization)
    }

    /// Cluster plus boundary-layer volume when a clipping mask was used.
    pub fn build_cluster(&self) -> Result<(Cluster, Option<f64>), ClusterError> {
        match &self.cluster {
            ClusterConfig::Lattice { n, c_r } => Ok((Cluster::lattice(*n, *c_r)?, None)),
            ClusterConfig::Clipped { n, c_r, mask } => {
                let mask = match mask {
                    MaskConfig::Cube => ShapeMask::UnitCube,
                    MaskConfig::Ball { center, radius } => ShapeMask::Ball {
                        center: *center,
                        radius: *radius,
                    },
                };
                let clipped = Cluster::clipped(*n, *c_r, mask)?;
                Ok((clipped.cluster, Some(clipped.layer_volume)))
            }
            ClusterConfig::Centers { centers, size, c_r } => {
                Ok((Cluster::from_centers(centers.clone(), *size, *c_r)?, None))
            }
        }
    }

    pub fn polarization_pair(&self) -> Result<PolarizationPair, PolarizationError> {
        match &self.shape {
            ShapeConfig::Sphere { eps, mu } => {
                PolarizationPair::for_shape(&Shape::Sphere, *eps, *mu)
            }
            ShapeConfig::Ellipsoid { axes, eps, mu } => {
                PolarizationPair::for_shape(&Shape::Ellipsoid { semi_axes: *axes }, *eps, *mu)
            }
            ShapeConfig::Custom { p0_eps, p0_mu } => PolarizationPair::custom(*p0_eps, *p0_mu),
        }
    }

    pub fn build_directions(&self) -> Vec<Vec3> {
        match &self.directions {
            Some(list) => list.clone(),
            None => fibonacci_sphere(self.direction_count),
        }
    }

    pub fn solve_method(&self) -> SolveMethod {
        match self.solver.method {
            MethodConfig::Auto => SolveMethod::Auto,
            MethodConfig::Direct => SolveMethod::Direct,
            MethodConfig::Iterative => SolveMethod::Iterative,
        }
    }

    pub fn gmres(&self) -> GmresConfig {
        GmresConfig {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            ..GmresConfig::default()
        }
    }

    pub fn ls_gmres(&self) -> GmresConfig {
        GmresConfig {
            tol: self.ls.tol,
            max_iter: self.solver.max_iter,
            ..GmresConfig::default()
        }
    }

    /// Canonical JSON echo of the parsed config (sorted object keys), used
    /// to stamp reports with the exact inputs they came from.
    pub fn echo_json(&self) -> String {
        serde_json::to_string(&serde_json::to_value(self).expect("config serializes"))
            .expect("canonical config echo")
    }
}
