//! Assembly of the discrete plate operators from an effective model.

use super::elements::{
    bfs_cell_integral, bfs_values, hat_moments, pair_matrix, CORNERS, GAUSS3,
};
use super::{DiscreteSpaces, PlateError, SimMode};
use crate::effective::EffectiveModel;
use crate::mandel::sym2_to_vec;
use nalgebra::{DMatrix, DVector, Matrix2, SMatrix, SVector};

/// Assembled bilinear forms of the coupled system.
///
/// `a_mat` is the plate stiffness on `(𝔞, 𝔟)`, `c_mat` the pressure-to-plate
/// coupling (appearing as `A u − C p = F` and transposed in the pressure
/// equation), `m_mat` the storage mass and `d_mat` the transverse Darcy
/// stiffness, both restricted to the live pressure dofs. Pressure dofs whose
/// storage row vanishes (purely elastic columns) are removed.
pub struct DiscreteOperators {
    pub spaces: DiscreteSpaces,
    pub model: EffectiveModel,
    pub a_mat: DMatrix<f64>,
    /// mean-constraint vectors on the `(𝔞, 𝔟)` layout
    pub constraints: Vec<DVector<f64>>,
    pub c_mat: DMatrix<f64>,
    pub m_mat: DMatrix<f64>,
    pub d_mat: DMatrix<f64>,
    /// κ̄-weighted deflection mass (inertial mode)
    pub mass_b: Option<DMatrix<f64>>,
    /// live pressure dof → full-layout index
    pub p_live: Vec<usize>,
    /// region index per in-plane cell
    pub cell_region: Vec<usize>,
    pub removed_pressure_dofs: usize,
}

impl DiscreteOperators {
    pub fn n_u(&self) -> usize {
        self.spaces.n_u()
    }

    pub fn n_p(&self) -> usize {
        self.p_live.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Total unknowns of the monolithic systems.
    pub fn n_sys(&self) -> usize {
        self.n_u() + self.n_constraints() + self.n_p()
    }

    pub fn e_elastic(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.a_mat * u))
    }

    pub fn e_pressure(&self, p: &DVector<f64>) -> f64 {
        if p.is_empty() {
            0.0
        } else {
            0.5 * p.dot(&(&self.m_mat * p))
        }
    }

    pub fn dissipation_rate(&self, p: &DVector<f64>) -> f64 {
        if p.is_empty() {
            0.0
        } else {
            p.dot(&(&self.d_mat * p))
        }
    }

    pub fn e_kinetic(&self, v: &DVector<f64>) -> f64 {
        match &self.mass_b {
            Some(mb) => 0.5 * v.dot(&(mb * v)),
            None => 0.0,
        }
    }

    /// Monolithic symmetric system matrix on `(u, λ, p)`:
    ///
    /// ```text
    /// [ A + c_m M_b   Gᵀ   −C              ]
    /// [ G             0    0               ]
    /// [ −Cᵀ           0    −(M + c_d D)    ]
    /// ```
    ///
    /// with the deflection mass scaled into the `𝔟` block when present.
    pub fn saddle_matrix(&self, c_d: f64, c_m: f64) -> DMatrix<f64> {
        let (nu, nc, np) = (self.n_u(), self.n_constraints(), self.n_p());
        let n = nu + nc + np;
        let mut s = DMatrix::zeros(n, n);
        s.view_mut((0, 0), (nu, nu)).copy_from(&self.a_mat);
        if c_m != 0.0 {
            if let Some(mb) = &self.mass_b {
                let na = self.spaces.n_a();
                let nb = self.spaces.n_b();
                for j in 0..nb {
                    for i in 0..nb {
                        s[(na + i, na + j)] += c_m * mb[(i, j)];
                    }
                }
            }
        }
        for (k, g) in self.constraints.iter().enumerate() {
            for i in 0..nu {
                s[(i, nu + k)] = g[i];
                s[(nu + k, i)] = g[i];
            }
        }
        for j in 0..np {
            for i in 0..nu {
                s[(i, nu + nc + j)] = -self.c_mat[(i, j)];
                s[(nu + nc + j, i)] = -self.c_mat[(i, j)];
            }
            for i in 0..np {
                s[(nu + nc + i, nu + nc + j)] = -(self.m_mat[(i, j)] + c_d * self.d_mat[(i, j)]);
            }
        }
        s
    }
}

fn locate_regions(
    model: &EffectiveModel,
    spaces: &DiscreteSpaces,
) -> Result<Vec<usize>, PlateError> {
    let grid = spaces.grid;
    for (r, region) in model.regions.iter().enumerate() {
        let [x0, y0, x1, y1] = region.rect;
        for (v, n, name) in [
            (x0, grid.nx, "x0"),
            (x1, grid.nx, "x1"),
            (y0, grid.ny, "y0"),
            (y1, grid.ny, "y1"),
        ] {
            let scaled = v * n as f64;
            if (scaled - scaled.round()).abs() > 1e-9 {
                return Err(PlateError::Alignment(format!(
                    "region {r} boundary {name} = {v} does not lie on a grid line"
                )));
            }
        }
    }
    let mut cell_region = Vec::with_capacity(grid.cell_count());
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let cx = (ix as f64 + 0.5) * grid.hx();
            let cy = (iy as f64 + 0.5) * grid.hy();
            let r = model
                .regions
                .iter()
                .position(|reg| {
                    let [x0, y0, x1, y1] = reg.rect;
                    cx >= x0 && cx < x1 && cy >= y0 && cy < y1
                })
                .ok_or_else(|| {
                    PlateError::Alignment(format!("cell ({ix}, {iy}) lies in no region"))
                })?;
            cell_region.push(r);
        }
    }
    Ok(cell_region)
}

/// Local-to-global dof map of one cell: 8 in-plane then 16 deflection dofs.
fn cell_dofs(spaces: &DiscreteSpaces, ix: usize, iy: usize) -> [usize; 24] {
    let mut dofs = [0usize; 24];
    for (c, &(ax, ay)) in CORNERS.iter().enumerate() {
        for comp in 0..2 {
            dofs[2 * c + comp] = spaces.a_dof(ix + ax, iy + ay, comp);
        }
        for kind in 0..4 {
            dofs[8 + 4 * c + kind] = spaces.b_dof(ix + ax, iy + ay, kind);
        }
    }
    dofs
}

/// Per-node thickness profiles of the coupling: `(∫ Θ̂ ψ_k dx₃, ∫ Θ̂ x₃ ψ_k dx₃)`
/// for every pressure node of a column, plus the storage and Darcy tridiagonal
/// weights of the column.
struct ColumnProfile {
    theta0: Vec<Matrix2<f64>>,
    theta1: Vec<Matrix2<f64>>,
    mass: DMatrix<f64>,
    darcy: DMatrix<f64>,
}

fn column_profile(region: &crate::effective::RegionModel, grid: &super::PlateGrid) -> ColumnProfile {
    let np = grid.nz + 1;
    let mut theta0 = vec![Matrix2::zeros(); np];
    let mut theta1 = vec![Matrix2::zeros(); np];
    let mut mass = DMatrix::zeros(np, np);
    let mut darcy = DMatrix::zeros(np, np);
    let hz = grid.hz();
    for k in 0..grid.nz {
        let z0 = grid.z_node(k);
        let z1 = grid.z_node(k + 1);
        for layer in &region.layers {
            let lo = layer.interval[0].max(z0);
            let hi = layer.interval[1].min(z1);
            if hi <= lo + 1e-14 {
                continue;
            }
            let th = layer.theta.fixed_view::<2, 2>(0, 0).into_owned();
            let (m0_lo, m1_lo) = hat_moments(lo, hi, z0, z1, false);
            let (m0_hi, m1_hi) = hat_moments(lo, hi, z0, z1, true);
            theta0[k] += th * m0_lo;
            theta1[k] += th * m1_lo;
            theta0[k + 1] += th * m0_hi;
            theta1[k + 1] += th * m1_hi;
            // storage mass on the overlap: exact for products of two hats
            let gp = [0.5 - 0.5 / 3.0_f64.sqrt(), 0.5 + 0.5 / 3.0_f64.sqrt()];
            for &g in &gp {
                let x = lo + (hi - lo) * g;
                let w = 0.5 * (hi - lo) * layer.m0;
                let psi = [(z1 - x) / hz, (x - z0) / hz];
                for a in 0..2 {
                    for b in 0..2 {
                        mass[(k + a, k + b)] += w * psi[a] * psi[b];
                    }
                }
            }
            let k33 = layer.permeability[(2, 2)];
            let dlen = hi - lo;
            let stiff = k33 * dlen / (hz * hz);
            darcy[(k, k)] += stiff;
            darcy[(k + 1, k + 1)] += stiff;
            darcy[(k, k + 1)] -= stiff;
            darcy[(k + 1, k)] -= stiff;
        }
    }
    ColumnProfile {
        theta0,
        theta1,
        mass,
        darcy,
    }
}

/// Assembles the quasi-static operators.
pub fn assemble(
    model: &EffectiveModel,
    spaces: &DiscreteSpaces,
) -> Result<DiscreteOperators, PlateError> {
    assemble_with_mass(model, spaces, false)
}

/// Assembles the inertial operators (adds the κ̄-weighted deflection mass).
pub fn assemble_inertial(
    model: &EffectiveModel,
    spaces: &DiscreteSpaces,
) -> Result<DiscreteOperators, PlateError> {
    assemble_with_mass(model, spaces, true)
}

fn assemble_with_mass(
    model: &EffectiveModel,
    spaces: &DiscreteSpaces,
    with_mass: bool,
) -> Result<DiscreteOperators, PlateError> {
    let grid = spaces.grid;
    let cell_region = locate_regions(model, spaces)?;
    let (hx, hy) = (grid.hx(), grid.hy());
    let n_u = spaces.n_u();
    let n_p_full = spaces.n_p_full();

    let mut a_mat = DMatrix::zeros(n_u, n_u);
    let mut c_full = DMatrix::zeros(n_u, n_p_full);
    let mut m_full = DMatrix::zeros(n_p_full, n_p_full);
    let mut d_full = DMatrix::zeros(n_p_full, n_p_full);
    let mut mean_a1 = DVector::zeros(n_u);
    let mut mean_a2 = DVector::zeros(n_u);
    let mut mean_b = DVector::zeros(n_u);
    let mut mass_b = if with_mass {
        Some(DMatrix::zeros(spaces.n_b(), spaces.n_b()))
    } else {
        None
    };

    let profiles: Vec<ColumnProfile> = model
        .regions
        .iter()
        .map(|r| column_profile(r, &grid))
        .collect();

    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let cell = ix + grid.nx * iy;
            let r = cell_region[cell];
            let region = &model.regions[r];
            let dofs = cell_dofs(spaces, ix, iy);

            // plate stiffness and integrated strain operators
            let mut k_cell = SMatrix::<f64, 24, 24>::zeros();
            let mut int_b = SMatrix::<f64, 6, 24>::zeros();
            for &(gx, wx) in &GAUSS3 {
                for &(gy, wy) in &GAUSS3 {
                    let w = wx * wy * hx * hy;
                    let b = pair_matrix(gx, gy, hx, hy);
                    k_cell += w * b.transpose() * region.ahom * b;
                    int_b += w * b;
                }
            }
            for l in 0..24 {
                for m in 0..24 {
                    a_mat[(dofs[l], dofs[m])] += k_cell[(l, m)];
                }
            }

            // coupling: pressure node k pairs +Θ̂-moment with e(𝔞) and
            // −(x₃ Θ̂)-moment with ∇²𝔟
            let profile = &profiles[r];
            for k in 0..=grid.nz {
                let pf = spaces.p_dof_full(ix, iy, k);
                let w_a = sym2_to_vec(&profile.theta0[k]);
                let w_b = sym2_to_vec(&profile.theta1[k]);
                for l in 0..24 {
                    let mut v = 0.0;
                    for row in 0..3 {
                        v += w_a[row] * int_b[(row, l)];
                        v -= w_b[row] * int_b[(row + 3, l)];
                    }
                    c_full[(dofs[l], pf)] += v;
                }
            }

            // pressure mass and Darcy blocks, scaled by the cell area
            let area = hx * hy;
            for ka in 0..=grid.nz {
                for kb in 0..=grid.nz {
                    let pa = spaces.p_dof_full(ix, iy, ka);
                    let pb = spaces.p_dof_full(ix, iy, kb);
                    m_full[(pa, pb)] += area * profile.mass[(ka, kb)];
                    d_full[(pa, pb)] += area * profile.darcy[(ka, kb)];
                }
            }

            // mean constraints
            let q_int = hx * hy / 4.0;
            let b_int = bfs_cell_integral(hx, hy);
            for (c, &(ax, ay)) in CORNERS.iter().enumerate() {
                mean_a1[spaces.a_dof(ix + ax, iy + ay, 0)] += q_int;
                mean_a2[spaces.a_dof(ix + ax, iy + ay, 1)] += q_int;
                for kind in 0..4 {
                    mean_b[spaces.b_dof(ix + ax, iy + ay, kind)] += b_int[4 * c + kind];
                }
            }

            // κ̄-weighted deflection mass with a 4×4 rule (value products of
            // bicubics exceed the degree of the 3×3 rule)
            if let Some(mb) = mass_b.as_mut() {
                let gauss4: [(f64, f64); 4] = {
                    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
                    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
                    let wa = (18.0 + 30.0f64.sqrt()) / 72.0;
                    let wb = (18.0 - 30.0f64.sqrt()) / 72.0;
                    [
                        (0.5 * (1.0 - b), wb),
                        (0.5 * (1.0 - a), wa),
                        (0.5 * (1.0 + a), wa),
                        (0.5 * (1.0 + b), wb),
                    ]
                };
                let kappa = region.kappa_bar;
                let mut m_cell = SMatrix::<f64, 16, 16>::zeros();
                for &(gx, wx) in &gauss4 {
                    for &(gy, wy) in &gauss4 {
                        let w = wx * wy * hx * hy * kappa;
                        let vals = bfs_values(gx, gy, hx, hy);
                        let v = SVector::<f64, 16>::from_row_slice(&vals);
                        m_cell += w * v * v.transpose();
                    }
                }
                for l in 0..16 {
                    for m in 0..16 {
                        mb[(dofs[8 + l] - spaces.n_a(), dofs[8 + m] - spaces.n_a())] +=
                            m_cell[(l, m)];
                    }
                }
            }
        }
    }

    // symmetrize against quadrature round-off
    let a_mat = 0.5 * (&a_mat + a_mat.transpose());

    // live pressure dofs: storage mass on the diagonal (fluid-bearing nodes)
    let p_live: Vec<usize> = (0..n_p_full).filter(|&j| m_full[(j, j)] > 0.0).collect();
    let removed = n_p_full - p_live.len();
    let n_p = p_live.len();
    let mut c_mat = DMatrix::zeros(n_u, n_p);
    let mut m_mat = DMatrix::zeros(n_p, n_p);
    let mut d_mat = DMatrix::zeros(n_p, n_p);
    for (j, &pj) in p_live.iter().enumerate() {
        for i in 0..n_u {
            c_mat[(i, j)] = c_full[(i, pj)];
        }
        for (i, &pi) in p_live.iter().enumerate() {
            m_mat[(i, j)] = m_full[(pi, pj)];
            d_mat[(i, j)] = d_full[(pi, pj)];
        }
    }

    let mut constraints = vec![mean_a1, mean_a2];
    if spaces.mode == SimMode::QuasiStatic {
        constraints.push(mean_b);
    }

    Ok(DiscreteOperators {
        spaces: spaces.clone(),
        model: model.clone(),
        a_mat,
        constraints,
        c_mat,
        m_mat,
        d_mat,
        mass_b,
        p_live,
        cell_region,
        removed_pressure_dofs: removed,
    })
}
