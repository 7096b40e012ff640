//! Discretization and time integration of the effective plate system.
//!
//! The unknowns are the in-plane displacement `𝔞` (bilinear periodic vector
//! elements), the deflection `𝔟` (Bogner–Fox–Schmit bicubic Hermite periodic
//! elements) and the pore pressure `p` (piecewise constant in-plane tensored
//! with continuous linears through the thickness). Mean constraints are
//! enforced with Lagrange multipliers so every linear system stays symmetric.
//!
//! Two evolution modes are provided: the quasi-static system advanced with
//! backward Euler on a monolithic symmetric saddle point per step, and the
//! inertial system advanced with the implicit midpoint rule (backward Euler
//! as a robustness fallback) in the first-order variables `(𝔟, ∂ₜ𝔟, p)` with
//! `𝔞` slaved elliptically. Both integrators certify a discrete energy
//! identity per step.

mod assemble;
mod dynamics;
pub mod elements;
mod qs;

pub use assemble::{assemble, assemble_inertial, DiscreteOperators};
pub use dynamics::{
    energy_ledger_inertial, initial_state_inertial, solve_trajectory_inertial, step_inertial,
    uniqueness_probe, InertialState, UniquenessReport,
};
pub use qs::{
    initial_state, reconstruct_fields, solve_trajectory, step, EnergyLedger, LedgerRow,
    MicroReconstruction,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlateError {
    #[error("grid too small: need Nx, Ny >= 2 and Nz >= 1, got ({0}, {1}, {2})")]
    MinimumGrid(usize, usize, usize),
    #[error("plate layout is not aligned with the grid: {0}")]
    Alignment(String),
    #[error("linear system is singular")]
    SingularSystem,
    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),
    #[error("load samples are too sparse for a time derivative")]
    MissingTimeDerivative,
    #[error("operator set was assembled for a different mode")]
    ModeMismatch,
}

/// Evolution mode selecting the function spaces and the integrator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    QuasiStatic,
    Inertial,
}

/// Time scheme for the inertial system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitMidpoint,
    BackwardEuler,
}

/// Uniform periodic in-plane grid with `Nz` thickness intervals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlateGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl PlateGrid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self, PlateError> {
        if nx < 2 || ny < 2 || nz < 1 {
            return Err(PlateError::MinimumGrid(nx, ny, nz));
        }
        Ok(PlateGrid { nx, ny, nz })
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn hz(&self) -> f64 {
        1.0 / self.nz as f64
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Thickness coordinate of pressure node `k` (0 ..= Nz).
    pub fn z_node(&self, k: usize) -> f64 {
        -0.5 + k as f64 * self.hz()
    }
}

/// Degree-of-freedom layout of the three fields.
#[derive(Debug, Clone)]
pub struct DiscreteSpaces {
    pub grid: PlateGrid,
    pub mode: SimMode,
}

impl DiscreteSpaces {
    pub fn n_a(&self) -> usize {
        2 * self.grid.cell_count()
    }

    pub fn n_b(&self) -> usize {
        4 * self.grid.cell_count()
    }

    /// Displacement dofs `(𝔞, 𝔟)` without multipliers.
    pub fn n_u(&self) -> usize {
        self.n_a() + self.n_b()
    }

    /// Mean-constraint multipliers: two for `𝔞`, one for `𝔟` in the
    /// quasi-static mode only (the inertial deflection space carries no mean
    /// constraint).
    pub fn n_constraints(&self) -> usize {
        match self.mode {
            SimMode::QuasiStatic => 3,
            SimMode::Inertial => 2,
        }
    }

    /// Pressure dofs before degenerate-column removal.
    pub fn n_p_full(&self) -> usize {
        self.grid.cell_count() * (self.grid.nz + 1)
    }

    pub fn a_dof(&self, ix: usize, iy: usize, comp: usize) -> usize {
        2 * (ix % self.grid.nx + self.grid.nx * (iy % self.grid.ny)) + comp
    }

    pub fn b_dof(&self, ix: usize, iy: usize, kind: usize) -> usize {
        self.n_a() + 4 * (ix % self.grid.nx + self.grid.nx * (iy % self.grid.ny)) + kind
    }

    pub fn p_dof_full(&self, ix: usize, iy: usize, k: usize) -> usize {
        (ix + self.grid.nx * iy) * (self.grid.nz + 1) + k
    }
}

/// Builds the discrete spaces for a grid and mode.
pub fn build_spaces(grid: PlateGrid, mode: SimMode) -> DiscreteSpaces {
    DiscreteSpaces { grid, mode }
}

/// Time-sampled loads. Samples are uniform with spacing `dt_sample` starting
/// at `t = 0` and are interpolated linearly; the time derivative used by the
/// energy ledger is the exact derivative of the interpolant.
#[derive(Debug, Clone)]
pub struct LoadSpec {
    pub dt_sample: f64,
    /// dual vectors on the `(𝔞, 𝔟)` layout (`n_u` entries per sample)
    pub f: Vec<DVector<f64>>,
    /// dual vectors on the live pressure layout
    pub g: Vec<DVector<f64>>,
    /// initial datum as a dual vector on the live pressure layout
    pub t0: DVector<f64>,
    /// initial deflection (inertial mode), `n_b` coefficients
    pub b0: DVector<f64>,
    /// initial deflection velocity (inertial mode), `n_b` coefficients
    pub b1: DVector<f64>,
}

impl LoadSpec {
    pub fn zero(ops: &DiscreteOperators) -> Self {
        LoadSpec {
            dt_sample: 1.0,
            f: vec![DVector::zeros(ops.n_u())],
            g: vec![DVector::zeros(ops.n_p())],
            t0: DVector::zeros(ops.n_p()),
            b0: DVector::zeros(ops.spaces.n_b()),
            b1: DVector::zeros(ops.spaces.n_b()),
        }
    }

    fn sample(&self, series: &[DVector<f64>], t: f64) -> DVector<f64> {
        if series.len() == 1 {
            return series[0].clone();
        }
        let s = (t / self.dt_sample).max(0.0);
        let i = (s.floor() as usize).min(series.len() - 2);
        let w = (s - i as f64).clamp(0.0, 1.0);
        &series[i] * (1.0 - w) + &series[i + 1] * w
    }

    fn slope(&self, series: &[DVector<f64>], t: f64) -> DVector<f64> {
        if series.len() == 1 {
            return DVector::zeros(series[0].len());
        }
        let s = (t / self.dt_sample).max(0.0);
        let i = (s.floor() as usize).min(series.len() - 2);
        (&series[i + 1] - &series[i]) / self.dt_sample
    }

    pub fn f_at(&self, t: f64) -> DVector<f64> {
        self.sample(&self.f, t)
    }

    pub fn df_at(&self, t: f64) -> DVector<f64> {
        self.slope(&self.f, t)
    }

    pub fn g_at(&self, t: f64) -> DVector<f64> {
        self.sample(&self.g, t)
    }
}

/// One time level of the coupled fields.
#[derive(Debug, Clone)]
pub struct PlateState {
    /// `(𝔞, 𝔟)` coefficients, `n_u` entries
    pub u: DVector<f64>,
    /// live pressure coefficients
    pub p: DVector<f64>,
    pub t: f64,
}

impl PlateState {
    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite()) && self.p.iter().all(|v| v.is_finite())
    }
}
