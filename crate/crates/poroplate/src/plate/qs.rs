//! Quasi-static evolution: backward Euler on the monolithic symmetric
//! saddle-point system, with a discrete energy ledger and reconstruction of
//! the through-thickness micro fields.

use super::assemble::DiscreteOperators;
use super::elements::pair_matrix;
use super::{LoadSpec, PlateError, PlateState, SimMode};
use nalgebra::{DVector, SVector};

/// One row of the per-step energy bookkeeping.
#[derive(Debug, Clone)]
pub struct LedgerRow {
    pub step: usize,
    pub time: f64,
    pub e_elastic: f64,
    /// zero in the quasi-static mode
    pub e_kinetic: f64,
    pub e_pressure: f64,
    pub d_cumulative: f64,
    pub w_loads: f64,
    pub residual: f64,
}

/// Discrete energy identity evaluated along a trajectory.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    pub mode: SimMode,
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn max_residual(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.residual.abs())
            .fold(0.0, f64::max)
    }
}

/// Dense factorization type shared with the inertial integrator.
pub(super) type DenseLu = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

pub(super) fn solve_lu(lu: &DenseLu, rhs: &DVector<f64>) -> Result<DVector<f64>, PlateError> {
    lu.solve(rhs).ok_or(PlateError::SingularSystem)
}

fn split_state(
    ops: &DiscreteOperators,
    sol: &DVector<f64>,
    t: f64,
) -> Result<PlateState, PlateError> {
    let (nu, nc, np) = (ops.n_u(), ops.n_constraints(), ops.n_p());
    let state = PlateState {
        u: sol.rows(0, nu).into_owned(),
        p: sol.rows(nu + nc, np).into_owned(),
        t,
    };
    if state.is_finite() {
        Ok(state)
    } else {
        Err(PlateError::NonFiniteState(t))
    }
}

/// Solves the stationary system at `t = 0`: equilibrium against `F(0)` with
/// the pressure determined by the initial datum `t0` through the storage
/// pairing `M p + Cᵀ u = t0`.
pub fn initial_state(
    ops: &DiscreteOperators,
    loads: &LoadSpec,
) -> Result<PlateState, PlateError> {
    let lu = ops.saddle_matrix(0.0, 0.0).lu();
    let (nu, nc, np) = (ops.n_u(), ops.n_constraints(), ops.n_p());
    let mut rhs = DVector::zeros(nu + nc + np);
    rhs.rows_mut(0, nu).copy_from(&loads.f_at(0.0));
    rhs.rows_mut(nu + nc, np).copy_from(&(-&loads.t0));
    let sol = solve_lu(&lu, &rhs)?;
    split_state(ops, &sol, 0.0)
}

fn step_with(
    ops: &DiscreteOperators,
    lu: &DenseLu,
    state: &PlateState,
    loads: &LoadSpec,
    dt: f64,
) -> Result<PlateState, PlateError> {
    let t_next = state.t + dt;
    let (nu, nc, np) = (ops.n_u(), ops.n_constraints(), ops.n_p());
    let mut rhs = DVector::zeros(nu + nc + np);
    rhs.rows_mut(0, nu).copy_from(&loads.f_at(t_next));
    if np > 0 {
        let hist = &ops.m_mat * &state.p + ops.c_mat.transpose() * &state.u;
        rhs.rows_mut(nu + nc, np)
            .copy_from(&(-hist - dt * loads.g_at(t_next)));
    }
    let sol = solve_lu(lu, &rhs)?;
    split_state(ops, &sol, t_next)
}

/// One backward Euler step of length `dt`.
pub fn step(
    ops: &DiscreteOperators,
    state: &PlateState,
    loads: &LoadSpec,
    dt: f64,
) -> Result<PlateState, PlateError> {
    let lu = ops.saddle_matrix(dt, 0.0).lu();
    step_with(ops, &lu, state, loads, dt)
}

/// Integrates from the consistent initial state to `t_end` with uniform steps
/// and evaluates the energy ledger along the way. The step matrix is factored
/// once and reused.
pub fn solve_trajectory(
    ops: &DiscreteOperators,
    loads: &LoadSpec,
    dt: f64,
    t_end: f64,
) -> Result<(Vec<PlateState>, EnergyLedger), PlateError> {
    assert!(dt > 0.0 && t_end >= 0.0, "need dt > 0 and t_end >= 0");
    let n_steps = (t_end / dt).round() as usize;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(initial_state(ops, loads)?);
    let lu = ops.saddle_matrix(dt, 0.0).lu();
    for _ in 0..n_steps {
        let next = step_with(ops, &lu, states.last().unwrap(), loads, dt)?;
        states.push(next);
    }
    let ledger = energy_ledger_qs(ops, &states, loads, dt);
    Ok((states, ledger))
}

/// Right-endpoint discrete energy identity of the backward Euler trajectory:
///
/// `E_el + E_p + D_cum = E(0) + F(t)·u(t) − F(0)·u(0) − Σ dt ∂ₜF·u + Σ dt G·p`
///
/// The residual collects the scheme's numerical dissipation and is first
/// order in `dt`.
fn energy_ledger_qs(
    ops: &DiscreteOperators,
    states: &[PlateState],
    loads: &LoadSpec,
    dt: f64,
) -> EnergyLedger {
    let mut rows = Vec::with_capacity(states.len());
    let e0 = ops.e_elastic(&states[0].u) + ops.e_pressure(&states[0].p);
    let f0u0 = loads.f_at(0.0).dot(&states[0].u);
    let mut d_cum = 0.0;
    let mut w_df = 0.0;
    let mut w_g = 0.0;
    for (n, s) in states.iter().enumerate() {
        if n > 0 {
            d_cum += dt * ops.dissipation_rate(&s.p);
            w_df += dt * loads.df_at(s.t).dot(&s.u);
            if !s.p.is_empty() {
                w_g += dt * loads.g_at(s.t).dot(&s.p);
            }
        }
        let e_elastic = ops.e_elastic(&s.u);
        let e_pressure = ops.e_pressure(&s.p);
        let w_loads = e0 + loads.f_at(s.t).dot(&s.u) - f0u0 - w_df + w_g;
        rows.push(LedgerRow {
            step: n,
            time: s.t,
            e_elastic,
            e_kinetic: 0.0,
            e_pressure,
            d_cumulative: d_cum,
            w_loads,
            residual: e_elastic + e_pressure + d_cum - w_loads,
        });
    }
    EnergyLedger {
        mode: SimMode::QuasiStatic,
        rows,
    }
}

/// Through-thickness micro fields reconstructed from one time level: the
/// corrector coefficients (membrane strain, curvature, element pressures) and
/// the transverse Darcy flux.
#[derive(Debug, Clone)]
pub struct MicroReconstruction {
    /// per in-plane cell: membrane strain at the cell center, Mandel 3-vector
    pub membrane_strain: Vec<SVector<f64, 3>>,
    /// per in-plane cell: curvature at the cell center, Mandel 3-vector
    pub curvature: Vec<SVector<f64, 3>>,
    /// per (cell, thickness element): pressure at the element midpoint
    pub pressure: Vec<Vec<f64>>,
    /// per (cell, thickness element): transverse Darcy flux `−K₃₃ ∂₃p` with
    /// the element-averaged permeability
    pub darcy_flux: Vec<Vec<f64>>,
}

/// Evaluates the micro reconstruction of a state.
pub fn reconstruct_fields(ops: &DiscreteOperators, state: &PlateState) -> MicroReconstruction {
    let spaces = &ops.spaces;
    let grid = spaces.grid;
    let (hx, hy, hz) = (grid.hx(), grid.hy(), grid.hz());

    // element-averaged transverse permeability per region
    let k33_elem: Vec<Vec<f64>> = ops
        .model
        .regions
        .iter()
        .map(|region| {
            (0..grid.nz)
                .map(|k| {
                    let z0 = grid.z_node(k);
                    let z1 = grid.z_node(k + 1);
                    region
                        .layers
                        .iter()
                        .map(|l| {
                            let lo = l.interval[0].max(z0);
                            let hi = l.interval[1].min(z1);
                            if hi > lo {
                                l.permeability[(2, 2)] * (hi - lo)
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>()
                        / hz
                })
                .collect()
        })
        .collect();

    // expand the live pressure vector to the full layout
    let mut p_full = DVector::zeros(spaces.n_p_full());
    for (j, &pj) in ops.p_live.iter().enumerate() {
        p_full[pj] = state.p[j];
    }

    let b_center = pair_matrix(0.5, 0.5, hx, hy);
    let mut membrane_strain = Vec::with_capacity(grid.cell_count());
    let mut curvature = Vec::with_capacity(grid.cell_count());
    let mut pressure = Vec::with_capacity(grid.cell_count());
    let mut darcy_flux = Vec::with_capacity(grid.cell_count());
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let cell = ix + grid.nx * iy;
            let mut local = SVector::<f64, 24>::zeros();
            for (c, &(ax, ay)) in super::elements::CORNERS.iter().enumerate() {
                for comp in 0..2 {
                    local[2 * c + comp] = state.u[spaces.a_dof(ix + ax, iy + ay, comp)];
                }
                for kind in 0..4 {
                    local[8 + 4 * c + kind] = state.u[spaces.b_dof(ix + ax, iy + ay, kind)];
                }
            }
            let strains = b_center * local;
            membrane_strain.push(strains.fixed_rows::<3>(0).into_owned());
            curvature.push(strains.fixed_rows::<3>(3).into_owned());

            let k33 = &k33_elem[ops.cell_region[cell]];
            let mut p_mid = Vec::with_capacity(grid.nz);
            let mut flux = Vec::with_capacity(grid.nz);
            for k in 0..grid.nz {
                let p_lo = p_full[spaces.p_dof_full(ix, iy, k)];
                let p_hi = p_full[spaces.p_dof_full(ix, iy, k + 1)];
                p_mid.push(0.5 * (p_lo + p_hi));
                flux.push(-k33[k] * (p_hi - p_lo) / hz);
            }
            pressure.push(p_mid);
            darcy_flux.push(flux);
        }
    }
    MicroReconstruction {
        membrane_strain,
        curvature,
        pressure,
        darcy_flux,
    }
}
