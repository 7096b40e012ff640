//! Homogenization and time integration for poroelastic Kirchhoff plates.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`microcell`] — voxelized periodic unit cells and the plate-scale
//!    piecewise-constant phase layout,
//! 2. [`cellsolve`] — periodic cell problems (elasticity correctors, the
//!    pressure corrector and Stokes permeability problems) discretized with
//!    trilinear hexahedral elements,
//! 3. [`effective`] — assembly of the effective plate tensors (stiffness,
//!    pressure coupling, storage, permeability, density) and structural
//!    verification of their properties,
//! 4. [`plate`] — quasi-static and inertial time integration of the limit
//!    plate system with per-step energy accounting,
//! 5. [`kinematics`] — plate displacement decomposition utilities used as
//!    test instrumentation,
//! 6. [`config`] / [`cli`] — configuration-driven command front end.

pub mod cellsolve;
pub mod cli;
pub mod config;
pub mod effective;
pub mod io;
pub mod kinematics;
pub mod linalg;
pub mod mandel;
pub mod microcell;
pub mod plate;
pub mod suite;

/// Relative tolerance used by the iterative linear solvers.
pub const SOLVER_TOL: f64 = 1e-10;

/// Execution mode for the data-parallel kernels.
///
/// The `parallel` crate feature enables rayon-backed implementations; the
/// sequential path is always available so the two can be benchmarked against
/// each other in a single build. With the feature disabled, `Parallel`
/// silently degrades to the sequential path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}
