//! Periodic cell problems on voxel microstructures.
//!
//! Four families of problems are solved on a [`CellMicrostructure`]:
//!
//! * six elasticity correctors, one per symmetric unit prestrain `eⁱ⊙eʲ`,
//! * one pressure corrector driven by the fluid boundary functional,
//! * up to three Stokes problems, one per flow direction.
//!
//! All solid problems share one assembled operator; the extended strain
//! `𝔠(w, g) = e(w) + sym(0|0|g)` couples the nodal displacement to three
//! global degrees of freedom `g`.
//!
//! A geometric degeneracy deserves a note: when the fluid phase disconnects
//! the solid along the thickness axis (a fluid layer normal to `y₃`), the
//! pressure corrector problem becomes singular with an incompatible
//! right-hand side — the cell can swallow fluid volume at no elastic cost, so
//! the storage compliance is unbounded. [`solve_biot_corrector`] detects this
//! by pairing the load with the enlarged operator kernel and returns
//! [`CellSolveError::DegenerateStorage`] instead of a garbage field.

mod elastic;
pub mod hex;
mod stokes;

pub use elastic::{strain_sample, SolidAssembly};
pub use stokes::StokesAssembly;

use crate::linalg::LinalgError;
use crate::mandel::{sym_col3, unit_load, vec_to_sym3};
use crate::microcell::CellMicrostructure;
use crate::Parallelism;
use hex::{corner_bits, QuadratureTable};
use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The six symmetric load pairs in canonical order (1-based).
pub const LOAD_PAIRS: [(usize, usize); 6] = [(1, 1), (2, 2), (3, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Error)]
pub enum CellSolveError {
    #[error("cell has no fluid phase")]
    NoFluid,
    #[error(
        "fluid phase is too thin for this resolution: every fluid node touches \
         the solid, so the no-slip velocity space is empty"
    )]
    UnresolvedFluid,
    #[error("cell problem solve failed: {0}")]
    Solver(#[from] LinalgError),
    #[error(
        "pressure corrector is degenerate: the fluid load pairs with the operator kernel \
         (defect {defect:.3e}); the solid phase does not wrap the thickness axis, so the \
         storage compliance is unbounded on this geometry"
    )]
    DegenerateStorage { defect: f64 },
}

/// Options shared by the cell solvers.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Pressure stabilization constant (scaled by `h²`).
    pub beta: f64,
    pub parallelism: Parallelism,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            beta: 0.05,
            parallelism: Parallelism::default(),
        }
    }
}

/// Solved elasticity corrector for one unit prestrain.
#[derive(Debug, Clone)]
pub struct ElasticCorrector {
    /// 1-based symmetric pair (i, j)
    pub load_index: (usize, usize),
    /// nodal displacement, 3 components per solid-adjacent node
    pub w: Vec<f64>,
    pub g: Vector3<f64>,
    /// `∫_solid 𝔸[eⁱ⊙eʲ + 𝔠(w, g)] dy`
    pub avg_stress: Matrix3<f64>,
    /// `∫_fluid tr 𝔠(w, g) dy` (an interface-trace quantity)
    pub fluid_trace: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solved pressure corrector.
#[derive(Debug, Clone)]
pub struct BiotCorrector {
    pub w2: Vec<f64>,
    pub g2: Vector3<f64>,
    /// `∫_solid 𝔸 𝔠(w̃₂, g̃₂) dy`
    pub b_tensor: Matrix3<f64>,
    /// `∫_fluid tr 𝔠(w̃₂, g̃₂) dy`, equal to the corrector's elastic energy
    pub m0: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solved Stokes problem for one flow direction.
#[derive(Debug, Clone)]
pub struct StokesCellSolution {
    /// 1-based driving direction
    pub direction: usize,
    /// velocity, 3 components per interior fluid node
    pub q: Vec<f64>,
    /// pressure per fluid-adjacent node, zero fluid mean
    pub pi: Vec<f64>,
    /// `∫_fluid q dy`
    pub mean_flux: Vector3<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// The Stokes block of a corrector set.
#[derive(Debug, Clone)]
pub struct StokesBlock {
    pub solutions: Vec<StokesCellSolution>,
    /// `𝕂ᵢⱼ = ∫_fluid qⁱⱼ dy` (unsymmetrized)
    pub permeability: Matrix3<f64>,
    /// discrete energy pairings `∫∇qⁱ:∇qʲ` + stabilization
    pub energy: Matrix3<f64>,
    /// interior fluid nodes (velocity layout)
    pub vel_nodes: Vec<u32>,
    /// fluid-adjacent nodes (pressure layout)
    pub p_nodes: Vec<u32>,
}

/// All cell solutions of one phase.
#[derive(Debug, Clone)]
pub struct CorrectorSet {
    pub phase_id: usize,
    pub resolution: usize,
    pub fluid_fraction: f64,
    pub elastic: Vec<ElasticCorrector>,
    pub biot: BiotCorrector,
    pub stokes: Option<StokesBlock>,
    /// solid-adjacent nodes (displacement layout)
    pub solid_nodes: Vec<u32>,
}

impl CorrectorSet {
    pub fn elastic_for(&self, i: usize, j: usize) -> Option<&ElasticCorrector> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.elastic.iter().find(|c| c.load_index == key)
    }
}

/// Evaluates the extended strain `𝔠(w, g) = e(w) + sym(0|0|g)` of a global
/// trilinear field at the 2×2×2 Gauss points of every voxel.
///
/// `w` holds 3 components per node of the full `N³` periodic lattice,
/// row-major; the result is voxel-major with the 8 Gauss points inner.
pub fn strain_operator(resolution: usize, w: &[f64], g: &Vector3<f64>) -> Vec<Matrix3<f64>> {
    let n = resolution;
    assert_eq!(w.len(), 3 * n * n * n);
    let h = 1.0 / n as f64;
    let quad = QuadratureTable::new(h);
    let gmat = sym_col3(g);
    let mut out = Vec::with_capacity(8 * n * n * n);
    let mut u = SVector::<f64, 24>::zeros();
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                for a in 0..8 {
                    let b = corner_bits(a);
                    let node = (ix + b[0]) % n + n * ((iy + b[1]) % n + n * ((iz + b[2]) % n));
                    for d in 0..3 {
                        u[3 * a + d] = w[3 * node + d];
                    }
                }
                for gp in 0..8 {
                    let strain = quad.strain_matrix(gp) * u;
                    out.push(vec_to_sym3(&strain) + gmat);
                }
            }
        }
    }
    out
}

fn elastic_from_solution(
    assembly: &SolidAssembly,
    load: (usize, usize),
    x: Vec<f64>,
    iterations: usize,
    rhs_residual: f64,
) -> ElasticCorrector {
    let nw = 3 * assembly.nodes.len();
    let prestrain = unit_load(load.0 - 1, load.1 - 1);
    let avg_stress = assembly.average_stress(&x, &prestrain);
    let fluid_trace = assembly.fluid_pairing(&x);
    let g = Vector3::new(x[nw], x[nw + 1], x[nw + 2]);
    ElasticCorrector {
        load_index: load,
        w: x[..nw].to_vec(),
        g,
        avg_stress,
        fluid_trace,
        iterations,
        residual: rhs_residual,
    }
}

/// Solves one elasticity corrector problem.
pub fn solve_elastic_corrector(
    cell: &CellMicrostructure,
    load: (usize, usize),
) -> Result<ElasticCorrector, CellSolveError> {
    let assembly = SolidAssembly::new(cell, Parallelism::default());
    solve_elastic_on(&assembly, load)
}

fn solve_elastic_on(
    assembly: &SolidAssembly,
    load: (usize, usize),
) -> Result<ElasticCorrector, CellSolveError> {
    let key = if load.0 <= load.1 {
        load
    } else {
        (load.1, load.0)
    };
    let prestrain = unit_load(key.0 - 1, key.1 - 1);
    let (x, stats) = assembly.solve_prestrain(&prestrain)?;
    Ok(elastic_from_solution(
        assembly,
        key,
        x,
        stats.iterations,
        stats.rel_residual,
    ))
}

/// Solves the pressure corrector problem.
pub fn solve_biot_corrector(cell: &CellMicrostructure) -> Result<BiotCorrector, CellSolveError> {
    let assembly = SolidAssembly::new(cell, Parallelism::default());
    solve_biot_on(&assembly)
}

fn solve_biot_on(assembly: &SolidAssembly) -> Result<BiotCorrector, CellSolveError> {
    let (x, stats) = assembly.solve_fluid_load()?;
    let nw = 3 * assembly.nodes.len();
    let b_tensor = assembly.average_stress(&x, &Matrix3::zeros());
    let m0 = assembly.fluid_pairing(&x);
    Ok(BiotCorrector {
        w2: x[..nw].to_vec(),
        g2: Vector3::new(x[nw], x[nw + 1], x[nw + 2]),
        b_tensor,
        m0,
        iterations: stats.iterations,
        residual: stats.rel_residual,
    })
}

/// Solves one Stokes cell problem (1-based direction).
pub fn solve_stokes_cell(
    cell: &CellMicrostructure,
    direction: usize,
) -> Result<StokesCellSolution, CellSolveError> {
    let opts = SolveOptions::default();
    let assembly = StokesAssembly::new(cell, opts.beta, opts.parallelism)?;
    solve_stokes_on(&assembly, direction)
}

fn solve_stokes_on(
    assembly: &StokesAssembly,
    direction: usize,
) -> Result<StokesCellSolution, CellSolveError> {
    assert!((1..=3).contains(&direction));
    let (q, pi, stats) = assembly.solve_direction(direction - 1)?;
    let mean_flux = assembly.mean_flux(&q);
    let residual = assembly.relative_residual(&q, &pi, direction - 1);
    Ok(StokesCellSolution {
        direction,
        q,
        pi,
        mean_flux,
        iterations: stats.iterations,
        residual,
    })
}

/// Solves every cell problem of one microstructure.
pub fn solve_all(
    cell: &CellMicrostructure,
    options: &SolveOptions,
) -> Result<CorrectorSet, CellSolveError> {
    let assembly = SolidAssembly::new(cell, options.parallelism);

    let solve_loads = |loads: &[(usize, usize)]| -> Result<Vec<ElasticCorrector>, CellSolveError> {
        #[cfg(feature = "parallel")]
        if options.parallelism == Parallelism::Parallel {
            return loads
                .par_iter()
                .map(|&l| solve_elastic_on(&assembly, l))
                .collect();
        }
        loads.iter().map(|&l| solve_elastic_on(&assembly, l)).collect()
    };
    let elastic = solve_loads(&LOAD_PAIRS)?;
    let biot = solve_biot_on(&assembly)?;

    let stokes = if cell.has_fluid() {
        let sa = StokesAssembly::new(cell, options.beta, options.parallelism)?;
        let dirs = [1usize, 2, 3];
        let solutions: Vec<StokesCellSolution> = {
            #[cfg(feature = "parallel")]
            {
                if options.parallelism == Parallelism::Parallel {
                    dirs.par_iter()
                        .map(|&d| solve_stokes_on(&sa, d))
                        .collect::<Result<_, _>>()?
                } else {
                    dirs.iter()
                        .map(|&d| solve_stokes_on(&sa, d))
                        .collect::<Result<Vec<_>, _>>()?
                }
            }
            #[cfg(not(feature = "parallel"))]
            {
                dirs.iter()
                    .map(|&d| solve_stokes_on(&sa, d))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        let mut permeability = Matrix3::zeros();
        let mut energy = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                permeability[(i, j)] = solutions[i].mean_flux[j];
                energy[(i, j)] = sa.energy_pairing(
                    &solutions[i].q,
                    &solutions[i].pi,
                    &solutions[j].q,
                    &solutions[j].pi,
                );
            }
        }
        Some(StokesBlock {
            solutions,
            permeability,
            energy,
            vel_nodes: sa.vel_nodes.clone(),
            p_nodes: sa.p_nodes.clone(),
        })
    } else {
        None
    };

    Ok(CorrectorSet {
        phase_id: cell.phase().id,
        resolution: cell.resolution(),
        fluid_fraction: cell.fluid_fraction(),
        elastic,
        biot,
        stokes,
        solid_nodes: assembly.nodes.clone(),
    })
}

/// Builds a full-lattice field (3 per node of `N³`) from a corrector's
/// solid-node layout, zero elsewhere. Convenience for [`strain_operator`].
pub fn expand_to_lattice(resolution: usize, solid_nodes: &[u32], w: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; 3 * resolution * resolution * resolution];
    for (slot, &node) in solid_nodes.iter().enumerate() {
        for d in 0..3 {
            full[3 * node as usize + d] = w[3 * slot + d];
        }
    }
    full
}

/// The 24-column strain matrix bundle used by tests that need raw element
/// data.
pub fn element_tables(h: f64) -> (QuadratureTable, SMatrix<f64, 6, 3>) {
    (QuadratureTable::new(h), hex::g_coupling_matrix())
}
