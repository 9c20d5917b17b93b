//! Fidelity zeros of two-band lattice models with a complexified driving
//! parameter.
//!
//! The pipeline is: a model produces a d-vector per momentum ([`models`]),
//! [`linalg2`] diagonalizes the non-Hermitian two-band block in a biorthogonal
//! basis, [`fidelity`] multiplies ground-state overlaps over the momentum grid,
//! [`spectrum`] tracks where the real part of the gap closes, and [`scan`] and
//! [`zeros`] sweep and analyse the complex parameter plane.

pub mod cli;
pub mod error;
pub mod fidelity;
pub mod linalg2;
pub mod models;
pub mod par;
pub mod scan;
pub mod spectrum;
pub mod zeros;

pub use error::{Error, Result};
pub use fidelity::{f_min, total_fidelity, FidelityFlags, FidelityKernel, FidelityResult};
pub use linalg2::{eig2x2, DVector, Degeneracy, ModeSolution, Strictness};
pub use models::{momentum_grid, ModelKind, ModelSpec, Momentum, MomentumGrid};
pub use par::Execution;
pub use scan::{
    run_convergence_study, run_path_scan, run_plane_scan, ConvergenceTable, PathSpec, Quantities, ScanConfig,
    ScanResult, Window,
};
pub use spectrum::{e_min, re_gap, zero_region_membership, EminOptions, GapResult};
pub use zeros::{analytic_zero_lines, boundary_estimate, extract_zeros, BoundaryEstimate, ZeroLine};
