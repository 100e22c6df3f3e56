//! Electromagnetic scattering by clusters of small anisotropic particles.
//!
//! The model: M identical small scatterers of diameter `a` sit at centers
//! `z_m` inside a unit-volume domain Ω, one per cube of side δ = c_r·a.
//! At dipole (point-interaction) order the scattered field is governed by a
//! 6M-unknown linear system for electric/magnetic moments — the Foldy-Lax
//! approximation — while the homogenized limit replaces the cluster by an
//! effective anisotropic medium (ε̊, μ̊) whose response solves a
//! Lippmann-Schwinger volume integral equation. The crate computes both
//! sides and quantifies how fast their far-field patterns agree as the
//! cluster dilutes (c_r → ∞).
//!
//! Pipeline modules, in dependency order:
//!
//! * [`kernels`] — Helmholtz Green's functions Φ_k, ∇Φ_k, the dyadic Π_k,
//!   and incident plane waves.
//! * [`cluster`] — periodic partitions of Ω, particle centers, dilution
//!   bookkeeping, lattice counting sums.
//! * [`polarization`] — electric/magnetic polarization tensors of the
//!   reference shape and their spectral bounds.
//! * [`foldy_lax`] — the discrete 6M×6M system, its matrix-free/FFT
//!   application, solvers, and the discrete far-field pattern.
//! * [`effective`] — the averaging operator K⁰, corrected tensors [Cᵀ],
//!   and effective medium parameters.
//! * [`ls_solver`] — voxel-collocation Lippmann-Schwinger solver and the
//!   effective far-field.
//! * [`analysis`] — discrete-vs-effective comparisons, ℓ₂ comparison
//!   vectors, scaling fits, sweep drivers.
//! * [`config`] / [`report`] — JSON experiment configs and deterministic
//!   report/CSV artifacts for the `mesoscatter` binary.

pub mod analysis;
pub mod cluster;
pub mod config;
pub mod effective;
pub mod foldy_lax;
pub mod kernels;
pub mod ls_solver;
pub mod polarization;
pub mod report;
pub mod solver;

mod fft3d;
mod la;
mod quad;
