//! Particle clusters on periodic partitions of the unit cube.
//!
//! The domain Ω = (0,1)³ is split into n³ little cubes of side δ = 1/n and
//! one particle of diameter `a` sits at each cube center, with the dilution
//! ratio c_r = δ/a ≥ 1 controlling how much empty space separates
//! neighbours. Masked (clipped) clusters keep only the cubes lying entirely
//! inside a sub-region, which leaves an O(δ)-volume boundary layer between
//! the kept cubes and the region itself — the bookkeeping the homogenization
//! error estimates need.

use thiserror::Error;

use crate::kernels::Vec3;
use crate::la::{norm3, sub3};
use rayon::prelude::*;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("lattice resolution must be at least 1, got {0}")]
    InvalidResolution(usize),
    #[error("dilution ratio c_r must be >= 1 and finite, got {0}")]
    InvalidRatio(f64),
    #[error("particle size must be positive and finite, got {0}")]
    InvalidSize(f64),
    #[error("mask keeps no cube at resolution n = {0}")]
    EmptyMask(usize),
    #[error("cluster has no particles")]
    Empty,
    #[error("centers {i} and {j} are {dist:e} apart, below the minimum spacing {min:e}")]
    TooClose {
        i: usize,
        j: usize,
        dist: f64,
        min: f64,
    },
    #[error("{count} particles exceed the packing capacity {capacity} at spacing {delta:e}")]
    Overpacked {
        count: usize,
        capacity: usize,
        delta: f64,
    },
    #[error("center {index} at {point:?} lies outside the open unit cube")]
    OutsideDomain { index: usize, point: Vec3 },
}

/// Sub-region of the unit cube used to clip a lattice cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeMask {
    /// The whole domain — clipping keeps every cube.
    UnitCube,
    /// Ball of given center and radius (both in unit-cube coordinates).
    Ball { center: Vec3, radius: f64 },
}

impl ShapeMask {
    /// Volume of the masked region (clamped to the unit cube for the ball
    /// only in the sense that callers are expected to keep it inside).
    pub fn volume(&self) -> f64 {
        match *self {
            ShapeMask::UnitCube => 1.0,
            ShapeMask::Ball { radius, .. } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
        }
    }

    /// Is the axis-aligned cube [lo, lo + side]³ entirely inside the region?
    fn contains_cube(&self, lo: Vec3, side: f64) -> bool {
        match *self {
            ShapeMask::UnitCube => true,
            ShapeMask::Ball { center, radius } => {
                // A convex region contains the cube iff it contains all corners.
                for dx in 0..2 {
                    for dy in 0..2 {
                        for dz in 0..2 {
                            let corner = [
                                lo[0] + side * dx as f64,
                                lo[1] + side * dy as f64,
                                lo[2] + side * dz as f64,
                            ];
                            if norm3(sub3(corner, center)) >= radius {
                                return false;
                            }
                        }
                    }
                }
                true
            }
        }
    }
}

/// A cluster of M identical particles: centers z_m, size a, spacing δ = c_r·a.
///
/// Construction validates the packing invariants, and the fields stay
/// private so they hold for the life of the value:
/// * c_r ≥ 1 and δ = c_r·a to relative 1e-14,
/// * every center interior to the open unit cube,
/// * pairwise separations ≥ δ·(1 − 1e-12),
/// * M ≤ ⌈δ⁻³⌉ (one particle per δ-cube of unit volume).
#[derive(Debug, Clone)]
pub struct Cluster {
    centers: Vec<Vec3>,
    size: f64,
    c_r: f64,
    delta: f64,
}

/// Relative slack on the pairwise-distance and δ = c_r·a checks.
const SPACING_SLACK: f64 = 1e-12;
const DELTA_REL_TOL: f64 = 1e-14;

impl Cluster {
    /// Full lattice cluster: n³ particles at the δ-cube centers, δ = 1/n.
    pub fn lattice(n: usize, c_r: f64) -> Result<Self, ClusterError> {
        if n == 0 {
            return Err(ClusterError::InvalidResolution(n));
        }
        Self::clipped(n, c_r, ShapeMask::UnitCube).map(|c| c.cluster)
    }

    /// Lattice cluster clipped to `mask`: keeps exactly the cubes that lie
    /// entirely inside the masked region.
    pub fn clipped(n: usize, c_r: f64, mask: ShapeMask) -> Result<ClippedCluster, ClusterError> {
        if n == 0 {
            return Err(ClusterError::InvalidResolution(n));
        }
        if !c_r.is_finite() || c_r < 1.0 {
            return Err(ClusterError::InvalidRatio(c_r));
        }
        let delta = 1.0 / n as f64;
        let mut centers = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lo = [i as f64 * delta, j as f64 * delta, k as f64 * delta];
                    if mask.contains_cube(lo, delta) {
                        centers.push([
                            (i as f64 + 0.5) * delta,
                            (j as f64 + 0.5) * delta,
                            (k as f64 + 0.5) * delta,
                        ]);
                    }
                }
            }
        }
        if centers.is_empty() {
            return Err(ClusterError::EmptyMask(n));
        }
        let kept_volume = centers.len() as f64 * delta.powi(3);
        let layer_volume = mask.volume() - kept_volume;
        let cluster = Self {
            centers,
            size: delta / c_r,
            c_r,
            delta,
        };
        debug_assert!(cluster.validate().is_ok());
        Ok(ClippedCluster {
            cluster,
            layer_volume,
            mask_volume: mask.volume(),
        })
    }

    /// Cluster from explicit centers; validates every invariant up front.
    pub fn from_centers(centers: Vec<Vec3>, size: f64, c_r: f64) -> Result<Self, ClusterError> {
        if !size.is_finite() || size <= 0.0 {
            return Err(ClusterError::InvalidSize(size));
        }
        if !c_r.is_finite() || c_r < 1.0 {
            return Err(ClusterError::InvalidRatio(c_r));
        }
        let cluster = Self {
            centers,
            size,
            c_r,
            delta: c_r * size,
        };
        cluster.validate()?;
        Ok(cluster)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.centers.is_empty() {
            return Err(ClusterError::Empty);
        }
        if (self.delta - self.c_r * self.size).abs() > DELTA_REL_TOL * self.delta {
            // Unreachable through the public constructors; kept as a guard
            // for by-hand construction paths (e.g. over FFI).
            return Err(ClusterError::InvalidSize(self.size));
        }
        for (index, &z) in self.centers.iter().enumerate() {
            if z.iter().any(|&c| c <= 0.0 || c >= 1.0) {
                return Err(ClusterError::OutsideDomain { index, point: z });
            }
        }
        let capacity = (1.0 / self.delta.powi(3)).ceil() as usize;
        if self.centers.len() > capacity {
            return Err(ClusterError::Overpacked {
                count: self.centers.len(),
                capacity,
                delta: self.delta,
            });
        }
        let min_allowed = self.delta * (1.0 - SPACING_SLACK);
        for i in 0..self.centers.len() {
            for j in (i + 1)..self.centers.len() {
                let dist = norm3(sub3(self.centers[i], self.centers[j]));
                if dist < min_allowed {
                    return Err(ClusterError::TooClose {
                        i,
                        j,
                        dist,
                        min: min_allowed,
                    });
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    /// Number of particles M.
    #[inline]
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Particle size a.
    #[inline]
    pub fn size(&self) -> f64 {
        self.size
    }

    /// Dilution ratio c_r = δ/a.
    #[inline]
    pub fn c_r(&self) -> f64 {
        self.c_r
    }

    /// Lattice spacing δ.
    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Smallest center-to-center distance (O(M²); intended for diagnostics).
    pub fn min_separation(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.centers.len() {
            for j in (i + 1)..self.centers.len() {
                min = min.min(norm3(sub3(self.centers[i], self.centers[j])));
            }
        }
        min
    }
}

/// A clipped cluster plus the volume bookkeeping of the boundary layer.
#[derive(Debug, Clone)]
pub struct ClippedCluster {
    pub cluster: Cluster,
    /// |mask| − M·δ³: volume of the masked region not covered by kept cubes.
    pub layer_volume: f64,
    /// Volume of the masked region itself.
    pub mask_volume: f64,
}

impl ClippedCluster {
    /// layer_volume / δ — should stay O(1) as the lattice refines.
    pub fn layer_coefficient(&self) -> f64 {
        self.layer_volume / self.cluster.delta()
    }
}

/// Interaction counting sums S_m = Σ_{j≠m} |z_j − z_m|^{−κ}.
///
/// These control how strongly the point-interaction system couples; on a
/// δ-lattice the maximum scales like δ^{−3} for κ < 3 and δ^{−κ} for κ > 3.
#[derive(Debug, Clone)]
pub struct CountingSums {
    pub per_particle: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

pub fn counting_sums(cluster: &Cluster, kappa: f64) -> CountingSums {
    assert!(kappa > 0.0, "counting exponent must be positive");
    let centers = cluster.centers();
    // Each particle's sum is accumulated sequentially, so the parallel map
    // over particles is bitwise deterministic regardless of thread count.
    let per_particle: Vec<f64> = centers
        .par_iter()
        .enumerate()
        .map(|(m, &zm)| {
            let mut s = 0.0;
            for (j, &zj) in centers.iter().enumerate() {
                if j != m {
                    s += norm3(sub3(zj, zm)).powf(-kappa);
                }
            }
            s
        })
        .collect();
    let max = per_particle.iter().cloned().fold(0.0, f64::max);
    let mean = per_particle.iter().sum::<f64>() / per_particle.len() as f64;
    CountingSums {
        per_particle,
        max,
        mean,
    }
}
