//! Oracles for the plate discretization and the two time integrators.
//!
//! The effective coefficients are hand-built so every expected value has a
//! closed form: a homogeneous column admits an exact discrete decay mode, the
//! coupled system must reproduce constant pressure data exactly, and both
//! integrators are checked against their energy identities and a heavily
//! refined reference trajectory.

use approx::assert_relative_eq;
use nalgebra::{DVector, Matrix3, SMatrix};
use poroplate::effective::{EffectiveModel, LayerCoefficients, RegionModel};
use poroplate::plate::{
    assemble, assemble_inertial, build_spaces, initial_state, initial_state_inertial,
    solve_trajectory, solve_trajectory_inertial, step, uniqueness_probe, DiscreteOperators,
    LoadSpec, PlateError, PlateGrid, Scheme, SimMode,
};
use std::f64::consts::PI;

fn iso_membrane(lambda: f64, mu: f64) -> Matrix3<f64> {
    Matrix3::new(
        lambda + 2.0 * mu,
        lambda,
        0.0,
        lambda,
        lambda + 2.0 * mu,
        0.0,
        0.0,
        0.0,
        2.0 * mu,
    )
}

/// Plate tensor of a stack of membrane laws: zeroth/first/second thickness
/// moments populate the four 3×3 blocks.
fn ahom_from_layers(stack: &[([f64; 2], Matrix3<f64>)]) -> SMatrix<f64, 6, 6> {
    let mut out = SMatrix::zeros();
    for (iv, a) in stack {
        let (z0, z1) = (iv[0], iv[1]);
        let m0 = z1 - z0;
        let m1 = (z1 * z1 - z0 * z0) / 2.0;
        let m2 = (z1.powi(3) - z0.powi(3)) / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                out[(i, j)] += m0 * a[(i, j)];
                out[(i, j + 3)] -= m1 * a[(i, j)];
                out[(i + 3, j)] -= m1 * a[(i, j)];
                out[(i + 3, j + 3)] += m2 * a[(i, j)];
            }
        }
    }
    out
}

fn solid_layer(interval: [f64; 2]) -> LayerCoefficients {
    LayerCoefficients {
        interval,
        phase: 0,
        fluid_fraction: 0.0,
        theta: Matrix3::zeros(),
        m0: 0.0,
        permeability: Matrix3::zeros(),
        b_tensor: Matrix3::zeros(),
        c_tensor: Matrix3::zeros(),
        viscous_energy: Matrix3::zeros(),
    }
}

fn poro_layer(interval: [f64; 2], theta: f64, m0: f64, k33: f64) -> LayerCoefficients {
    LayerCoefficients {
        interval,
        phase: 1,
        fluid_fraction: 0.3,
        theta: Matrix3::new(theta, 0.0, 0.0, 0.0, theta, 0.0, 0.0, 0.0, 0.0),
        m0,
        permeability: Matrix3::from_diagonal(&nalgebra::Vector3::new(0.0, 0.0, k33)),
        b_tensor: Matrix3::zeros(),
        c_tensor: Matrix3::zeros(),
        viscous_energy: Matrix3::zeros(),
    }
}

fn one_region(layers: Vec<LayerCoefficients>, mem: Matrix3<f64>) -> EffectiveModel {
    let stack: Vec<_> = layers.iter().map(|l| (l.interval, mem)).collect();
    EffectiveModel {
        regions: vec![RegionModel {
            rect: [0.0, 0.0, 1.0, 1.0],
            ahom: ahom_from_layers(&stack),
            layers,
            kappa_bar: 1.0,
        }],
    }
}

/// Homogeneous poroelastic plate: one fluid-bearing layer spanning the
/// thickness with isotropic coupling.
fn poro_model(theta: f64, m0: f64, k33: f64) -> EffectiveModel {
    one_region(
        vec![poro_layer([-0.5, 0.5], theta, m0, k33)],
        iso_membrane(1.0, 1.0),
    )
}

fn solid_model() -> EffectiveModel {
    one_region(vec![solid_layer([-0.5, 0.5])], iso_membrane(1.0, 1.0))
}

fn lcg_vector(n: usize, seed: u64, scale: f64) -> DVector<f64> {
    let mut s = seed;
    DVector::from_iterator(n, (0..n).map(|_| {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        scale * ((s >> 33) as f64 / (1u64 << 31) as f64 - 1.0)
    }))
}

/// Live pressure vector with the same through-thickness profile in every
/// column.
fn live_profile(ops: &DiscreteOperators, f: impl Fn(f64) -> f64) -> DVector<f64> {
    let grid = ops.spaces.grid;
    let mut full = vec![0.0; ops.spaces.n_p_full()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            for k in 0..=grid.nz {
                full[ops.spaces.p_dof_full(ix, iy, k)] = f(grid.z_node(k));
            }
        }
    }
    DVector::from_iterator(ops.n_p(), ops.p_live.iter().map(|&i| full[i]))
}

/// Removes the components of `r` along the (mutually orthogonal) constraint
/// vectors, leaving the part that must vanish at a constrained stationary
/// point.
fn project_out_constraints(ops: &DiscreteOperators, r: &DVector<f64>) -> DVector<f64> {
    let mut out = r.clone();
    for g in &ops.constraints {
        let coeff = out.dot(g) / g.dot(g);
        out -= coeff * g;
    }
    out
}

#[test]
fn grid_rejects_degenerate_sizes() {
    assert!(matches!(
        PlateGrid::new(1, 4, 2),
        Err(PlateError::MinimumGrid(1, 4, 2))
    ));
    assert!(PlateGrid::new(2, 2, 1).is_ok());
}

#[test]
fn misaligned_region_boundary_is_rejected() {
    let mem = iso_membrane(1.0, 1.0);
    let mut model = poro_model(0.5, 0.2, 0.01);
    model.regions[0].rect = [0.0, 0.0, 0.3, 1.0];
    model.regions.push(RegionModel {
        rect: [0.3, 0.0, 1.0, 1.0],
        ahom: ahom_from_layers(&[([-0.5, 0.5], mem)]),
        layers: vec![solid_layer([-0.5, 0.5])],
        kappa_bar: 1.0,
    });
    let spaces = build_spaces(PlateGrid::new(2, 2, 2).unwrap(), SimMode::QuasiStatic);
    assert!(matches!(
        assemble(&model, &spaces),
        Err(PlateError::Alignment(_))
    ));
}

#[test]
fn saddle_matrix_is_symmetric_and_dead_dofs_are_removed() {
    // fluid only in the upper half: the two bottom-most pressure nodes of
    // every column carry no storage and are dropped
    let model = one_region(
        vec![
            solid_layer([-0.5, 0.0]),
            poro_layer([0.0, 0.5], 0.5, 0.2, 0.01),
        ],
        iso_membrane(1.0, 1.0),
    );
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::QuasiStatic);
    let ops = assemble(&model, &spaces).unwrap();
    assert_eq!(ops.removed_pressure_dofs, 2 * 4);
    assert_eq!(ops.n_p(), 3 * 4);
    let s = ops.saddle_matrix(0.1, 0.0);
    assert!((&s - s.transpose()).norm() <= 1e-12 * s.norm());
}

#[test]
fn zero_data_trajectories_stay_at_zero() {
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::QuasiStatic);
    let ops = assemble(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let report = uniqueness_probe(&ops, 0.05, 0.5).unwrap();
    assert!(report.passed, "qs terminal norms {report:?}");

    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::Inertial);
    let ops = assemble_inertial(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let report = uniqueness_probe(&ops, 0.05, 0.5).unwrap();
    assert!(report.passed, "inertial terminal norms {report:?}");
}

/// A spatially constant initial datum `t0 = c·M·1` must produce the constant
/// initial pressure `c`, and by periodicity the coupling is exactly inert:
/// the fields stay frozen under the evolution with zero loads.
#[test]
fn constant_pressure_datum_is_reproduced_and_inert() {
    let spaces = build_spaces(PlateGrid::new(3, 2, 4).unwrap(), SimMode::QuasiStatic);
    let ops = assemble(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let c = 0.7;
    let ones = live_profile(&ops, |_| 1.0);
    let mut loads = LoadSpec::zero(&ops);
    loads.t0 = c * (&ops.m_mat * &ones);
    let (states, _) = solve_trajectory(&ops, &loads, 0.05, 0.25).unwrap();
    for s in &states {
        assert!(s.u.norm() <= 1e-10, "u drifted to {}", s.u.norm());
        for v in s.p.iter() {
            assert_relative_eq!(*v, c, epsilon = 1e-10);
        }
    }
}

/// The nodal interpolant of `cos(2π x₃)` is an exact generalized eigenvector
/// of the discrete column pair `(D, M)` (even node count, Neumann ends), and
/// its coupling to the plate vanishes identically. Backward Euler therefore
/// scales it by exactly `1/(1 + λ_h dt)` per step, and the discrete rate
/// converges to `4π² K₃₃ / M₀` at second order.
#[test]
fn cosine_column_mode_decays_at_the_exact_discrete_rate() {
    let (m0, k33) = (0.2, 0.01);
    let spaces = build_spaces(PlateGrid::new(2, 2, 24).unwrap(), SimMode::QuasiStatic);
    let ops = assemble(&poro_model(0.5, m0, k33), &spaces).unwrap();
    assert_eq!(ops.removed_pressure_dofs, 0);
    let p0 = live_profile(&ops, |z| (2.0 * PI * z).cos());
    let lambda = p0.dot(&(&ops.d_mat * &p0)) / p0.dot(&(&ops.m_mat * &p0));
    assert_relative_eq!(lambda, 4.0 * PI * PI * k33 / m0, max_relative = 1e-2);

    let mut loads = LoadSpec::zero(&ops);
    loads.t0 = &ops.m_mat * &p0;
    let dt = 0.05;
    let (states, _) = solve_trajectory(&ops, &loads, dt, 3.0 * dt).unwrap();
    for (n, s) in states.iter().enumerate() {
        assert!(s.u.norm() <= 1e-10, "coupling not inert: {}", s.u.norm());
        let factor = (1.0 + lambda * dt).powi(-(n as i32));
        for (a, b) in s.p.iter().zip(p0.iter()) {
            assert_relative_eq!(*a, factor * b, epsilon = 1e-10);
        }
    }
}

fn ramp_loads(ops: &DiscreteOperators, t_end: f64) -> LoadSpec {
    let mut loads = LoadSpec::zero(ops);
    loads.dt_sample = t_end;
    loads.f = vec![
        DVector::zeros(ops.n_u()),
        lcg_vector(ops.n_u(), 7, 1.0),
    ];
    loads.g = vec![
        DVector::zeros(ops.n_p()),
        lcg_vector(ops.n_p(), 11, 0.5),
    ];
    loads
}

#[test]
fn backward_euler_converges_to_a_fine_reference() {
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::QuasiStatic);
    let ops = assemble(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let t_end = 0.5;
    let loads = ramp_loads(&ops, t_end);
    let (coarse, _) = solve_trajectory(&ops, &loads, 0.00625, t_end).unwrap();
    let (fine, _) = solve_trajectory(&ops, &loads, 0.000125, t_end).unwrap();
    let (uc, uf) = (&coarse.last().unwrap().u, &fine.last().unwrap().u);
    let (pc, pf) = (&coarse.last().unwrap().p, &fine.last().unwrap().p);
    assert!((uc - uf).norm() <= 2e-2 * uf.norm(), "u error too large");
    assert!((pc - pf).norm() <= 2e-2 * pf.norm(), "p error too large");
}

#[test]
fn quasi_static_energy_residual_is_first_order() {
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::QuasiStatic);
    let ops = assemble(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let t_end = 0.4;
    let loads = ramp_loads(&ops, t_end);
    let mut residuals = Vec::new();
    let mut dt = 0.05;
    for _ in 0..4 {
        let (_, ledger) = solve_trajectory(&ops, &loads, dt, t_end).unwrap();
        residuals.push(ledger.max_residual());
        dt /= 2.0;
    }
    let rate = (residuals[0] / residuals[3]).log2() / 3.0;
    assert!(rate >= 0.9, "rate {rate}, residuals {residuals:?}");
}

/// Asymmetric stack: a stiff solid bottom and a compliant poroelastic top
/// produce membrane-bending coupling. The consistent initial state must
/// satisfy both stationary equations to round-off.
#[test]
fn initial_state_satisfies_the_stationary_system() {
    let mem_bot = iso_membrane(2.0, 1.5);
    let mem_top = iso_membrane(1.0, 1.0);
    let layers = vec![
        solid_layer([-0.5, 0.0]),
        poro_layer([0.0, 0.5], 0.5, 0.2, 0.01),
    ];
    let model = EffectiveModel {
        regions: vec![RegionModel {
            rect: [0.0, 0.0, 1.0, 1.0],
            ahom: ahom_from_layers(&[([-0.5, 0.0], mem_bot), ([0.0, 0.5], mem_top)]),
            layers,
            kappa_bar: 1.0,
        }],
    };
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::QuasiStatic);
    let ops = assemble(&model, &spaces).unwrap();
    let mut loads = LoadSpec::zero(&ops);
    loads.f = vec![lcg_vector(ops.n_u(), 3, 1.0)];
    loads.t0 = lcg_vector(ops.n_p(), 5, 1.0);
    let s = initial_state(&ops, &loads).unwrap();

    let r_u = &ops.a_mat * &s.u - &ops.c_mat * &s.p - loads.f_at(0.0);
    let r_free = project_out_constraints(&ops, &r_u);
    assert!(r_free.norm() <= 1e-9, "stationarity defect {}", r_free.norm());
    let r_p = &ops.m_mat * &s.p + ops.c_mat.transpose() * &s.u - &loads.t0;
    assert!(r_p.norm() <= 1e-9, "storage defect {}", r_p.norm());
}

/// Each implicit step is the stationary point of a convex functional: the
/// displacement equation holds up to constraint multipliers and the pressure
/// update equation holds exactly.
#[test]
fn implicit_step_is_a_stationary_point() {
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::QuasiStatic);
    let ops = assemble(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let t_end = 0.5;
    let loads = ramp_loads(&ops, t_end);
    let s0 = initial_state(&ops, &loads).unwrap();
    let dt = 0.1;
    let s1 = step(&ops, &s0, &loads, dt).unwrap();

    let r_u = &ops.a_mat * &s1.u - &ops.c_mat * &s1.p - loads.f_at(dt);
    let r_free = project_out_constraints(&ops, &r_u);
    assert!(r_free.norm() <= 1e-9, "stationarity defect {}", r_free.norm());
    let r_p = ops.c_mat.transpose() * (&s1.u - &s0.u)
        + &ops.m_mat * (&s1.p - &s0.p)
        + dt * (&ops.d_mat * &s1.p)
        - dt * loads.g_at(dt);
    assert!(r_p.norm() <= 1e-9, "pressure update defect {}", r_p.norm());
}

/// Without fluid and without loads the midpoint rule conserves the discrete
/// energy exactly, including the elliptically slaved in-plane field.
#[test]
fn midpoint_rule_conserves_energy_without_fluid() {
    let spaces = build_spaces(PlateGrid::new(2, 2, 1).unwrap(), SimMode::Inertial);
    let ops = assemble_inertial(&solid_model(), &spaces).unwrap();
    assert_eq!(ops.n_p(), 0);
    let mut loads = LoadSpec::zero(&ops);
    loads.b0 = lcg_vector(ops.spaces.n_b(), 21, 0.5);
    loads.b1 = lcg_vector(ops.spaces.n_b(), 23, 0.5);
    let (states, ledger) =
        solve_trajectory_inertial(&ops, &loads, 0.02, 1.0, Scheme::ImplicitMidpoint).unwrap();
    let e0 = ops.e_kinetic(&states[0].v) + ops.e_elastic(&states[0].u);
    for s in &states {
        let e = ops.e_kinetic(&s.v) + ops.e_elastic(&s.u);
        assert_relative_eq!(e, e0, max_relative = 1e-10);
    }
    assert!(ledger.max_residual() <= 1e-9 * e0.max(1.0));
}

/// The in-plane equilibrium holds at every stored level (not just at the
/// midpoints) when the loads are interpolated linearly in time.
#[test]
fn membrane_equilibrium_holds_at_every_level() {
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::Inertial);
    let ops = assemble_inertial(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let t_end = 0.4;
    let mut loads = ramp_loads(&ops, t_end);
    loads.b0 = lcg_vector(ops.spaces.n_b(), 31, 0.3);
    loads.b1 = lcg_vector(ops.spaces.n_b(), 33, 0.3);
    let (states, _) =
        solve_trajectory_inertial(&ops, &loads, 0.05, t_end, Scheme::ImplicitMidpoint).unwrap();
    let na = ops.spaces.n_a();
    for s in &states {
        let r = &ops.a_mat * &s.u - &ops.c_mat * &s.p - loads.f_at(s.t);
        let r_free = project_out_constraints(&ops, &r);
        let r_a = r_free.rows(0, na).norm();
        assert!(r_a <= 1e-9, "membrane defect {r_a} at t = {}", s.t);
    }
}

fn smooth_loads(ops: &DiscreteOperators, t_end: f64) -> LoadSpec {
    let dt_sample = 2e-5;
    let n_samples = (t_end / dt_sample).ceil() as usize + 2;
    let f_hat = lcg_vector(ops.n_u(), 41, 1.0);
    let g_hat = lcg_vector(ops.n_p(), 43, 0.5);
    let mut loads = LoadSpec::zero(ops);
    loads.dt_sample = dt_sample;
    loads.f = (0..n_samples)
        .map(|i| (3.0 * i as f64 * dt_sample).sin() * &f_hat)
        .collect();
    loads.g = (0..n_samples)
        .map(|i| (2.0 * i as f64 * dt_sample).cos() * &g_hat)
        .collect();
    loads
}

#[test]
fn midpoint_energy_residual_is_second_order_with_smooth_loads() {
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::Inertial);
    let ops = assemble_inertial(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let t_end = 0.4;
    let loads = smooth_loads(&ops, t_end);
    let mut residuals = Vec::new();
    let mut dt = 0.04;
    for _ in 0..3 {
        let (_, ledger) =
            solve_trajectory_inertial(&ops, &loads, dt, t_end, Scheme::ImplicitMidpoint).unwrap();
        residuals.push(ledger.max_residual());
        dt /= 2.0;
    }
    let rate = (residuals[0] / residuals[2]).log2() / 2.0;
    assert!(rate >= 1.8, "rate {rate}, residuals {residuals:?}");
}

/// Both inertial schemes integrate the analytic column decay mode with their
/// exact scalar amplification factors — `(1 − λdt/2)/(1 + λdt/2)` for the
/// midpoint rule, `1/(1 + λdt)` for backward Euler — and their gap halves
/// with the step, so they converge to the same continuum limit.
#[test]
fn inertial_schemes_agree_on_the_column_decay_mode() {
    let (m0, k33) = (0.2, 0.01);
    let spaces = build_spaces(PlateGrid::new(2, 2, 8).unwrap(), SimMode::Inertial);
    let ops = assemble_inertial(&poro_model(0.5, m0, k33), &spaces).unwrap();
    let p0 = live_profile(&ops, |z| (2.0 * PI * z).cos());
    let lambda = p0.dot(&(&ops.d_mat * &p0)) / p0.dot(&(&ops.m_mat * &p0));
    let mut loads = LoadSpec::zero(&ops);
    loads.t0 = &ops.m_mat * &p0;
    let t_end = 0.4;
    let mut gaps = Vec::new();
    for dt in [0.05f64, 0.025] {
        let n = (t_end / dt).round() as i32;
        let (mid, _) =
            solve_trajectory_inertial(&ops, &loads, dt, t_end, Scheme::ImplicitMidpoint).unwrap();
        let (be, _) =
            solve_trajectory_inertial(&ops, &loads, dt, t_end, Scheme::BackwardEuler).unwrap();
        let (m, b) = (mid.last().unwrap(), be.last().unwrap());
        assert!(m.u.norm() <= 1e-10 && b.u.norm() <= 1e-10);
        let f_mid = ((1.0 - 0.5 * lambda * dt) / (1.0 + 0.5 * lambda * dt)).powi(n);
        let f_be = (1.0 + lambda * dt).powi(-n);
        for ((pm, pb), p) in m.p.iter().zip(b.p.iter()).zip(p0.iter()) {
            assert_relative_eq!(*pm, f_mid * p, epsilon = 1e-10);
            assert_relative_eq!(*pb, f_be * p, epsilon = 1e-10);
        }
        gaps.push((f_mid - f_be).abs());
    }
    assert!(gaps[1] <= 0.6 * gaps[0], "gap not first order: {gaps:?}");
}

/// The consistent inertial initial state: prescribed deflection data, the
/// membrane equilibrium and the storage pairing both satisfied to round-off.
#[test]
fn inertial_initial_state_is_consistent() {
    let spaces = build_spaces(PlateGrid::new(2, 2, 4).unwrap(), SimMode::Inertial);
    let ops = assemble_inertial(&poro_model(0.5, 0.2, 0.01), &spaces).unwrap();
    let mut loads = LoadSpec::zero(&ops);
    loads.f = vec![lcg_vector(ops.n_u(), 61, 1.0)];
    loads.t0 = lcg_vector(ops.n_p(), 63, 1.0);
    loads.b0 = lcg_vector(ops.spaces.n_b(), 65, 0.5);
    loads.b1 = lcg_vector(ops.spaces.n_b(), 67, 0.5);
    let s = initial_state_inertial(&ops, &loads).unwrap();

    let na = ops.spaces.n_a();
    let nb = ops.spaces.n_b();
    assert_relative_eq!((s.u.rows(na, nb) - &loads.b0).norm(), 0.0, epsilon = 1e-13);
    assert_relative_eq!((&s.v - &loads.b1).norm(), 0.0, epsilon = 1e-13);
    let r = &ops.a_mat * &s.u - &ops.c_mat * &s.p - loads.f_at(0.0);
    let r_free = project_out_constraints(&ops, &r);
    assert!(r_free.rows(0, na).norm() <= 1e-9);
    let r_p = &ops.m_mat * &s.p + ops.c_mat.transpose() * &s.u - &loads.t0;
    assert!(r_p.norm() <= 1e-9);
}

