//! Stabilized Stokes cell problems on the fluid sub-lattice.
//!
//! Equal-order trilinear velocity/pressure with a local-projection variant of
//! the Brezzi–Pitkäranta pressure stabilization: the `β h²` term acts on the
//! fluctuation of the pressure gradient about its elementwise mean. This
//! keeps elementwise-linear pressures exactly stable states, so a plugged
//! direction (no through-flow) yields a zero velocity and a linear pressure
//! without any spurious stabilization flux.
//!
//! Velocity unknowns live on interior fluid nodes only; nodes touching any
//! solid voxel are constrained to zero (no-slip on the interface). The saddle
//! system `[[A, Bᵀ], [B, −C]]` is solved by MINRES with a block-diagonal
//! Jacobi/lumped-mass preconditioner, projecting out the constant-pressure
//! kernel.

use super::hex::{corner_bits, QuadratureTable, StokesElement};
use super::CellSolveError;
use crate::linalg::{dot, minres, norm, Csr, IterStats, KernelBasis, Triplets};
use crate::microcell::CellMicrostructure;
use crate::{Parallelism, SOLVER_TOL};
use nalgebra::Vector3;

pub struct StokesAssembly {
    pub n: usize,
    pub h: f64,
    /// node → velocity slot (interior fluid nodes), −1 otherwise
    pub vel_slot: Vec<i64>,
    pub vel_nodes: Vec<u32>,
    /// node → pressure slot (fluid-adjacent nodes), −1 otherwise
    pub p_slot: Vec<i64>,
    pub p_nodes: Vec<u32>,
    pub fluid_elems: Vec<u32>,
    saddle: Csr,
    /// scalar velocity Laplacian (one component)
    laplace: Csr,
    /// pressure stabilization matrix
    stab: Csr,
    precond_diag: Vec<f64>,
    kernel: KernelBasis,
    /// lumped fluid mass per pressure node
    lumped_mass: Vec<f64>,
    pub fluid_volume: f64,
    mode: Parallelism,
}

impl StokesAssembly {
    pub fn new(cell: &CellMicrostructure, beta: f64, mode: Parallelism) -> Result<Self, CellSolveError> {
        let n = cell.resolution();
        let h = cell.voxel_size();
        let total = n * n * n;
        if !cell.has_fluid() {
            return Err(CellSolveError::NoFluid);
        }
        let quad = QuadratureTable::new(h);
        let element = StokesElement::new(&quad, beta);

        // classify nodes: touches_fluid / touches_solid
        let mut touches_fluid = vec![false; total];
        let mut touches_solid = vec![false; total];
        let mut fluid_elems = Vec::new();
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let fluid = cell.is_fluid(ix, iy, iz);
                    if fluid {
                        fluid_elems.push(cell.voxel_index(ix, iy, iz) as u32);
                    }
                    for a in 0..8 {
                        let b = corner_bits(a);
                        let node = (ix + b[0]) % n + n * ((iy + b[1]) % n + n * ((iz + b[2]) % n));
                        if fluid {
                            touches_fluid[node] = true;
                        } else {
                            touches_solid[node] = true;
                        }
                    }
                }
            }
        }
        let mut vel_slot = vec![-1i64; total];
        let mut vel_nodes = Vec::new();
        let mut p_slot = vec![-1i64; total];
        let mut p_nodes = Vec::new();
        for node in 0..total {
            if touches_fluid[node] {
                p_slot[node] = p_nodes.len() as i64;
                p_nodes.push(node as u32);
                if !touches_solid[node] {
                    vel_slot[node] = vel_nodes.len() as i64;
                    vel_nodes.push(node as u32);
                }
            }
        }
        let nv = vel_nodes.len();
        let np = p_nodes.len();
        if nv == 0 {
            // every fluid node touches the solid: the no-slip condition
            // kills the whole velocity space at this resolution
            return Err(CellSolveError::UnresolvedFluid);
        }
        let ndof = 3 * nv + np;

        let elem_slots = |e: u32| -> ([i64; 8], [i64; 8]) {
            let (ix, iy, iz) = (e as usize % n, (e as usize / n) % n, e as usize / (n * n));
            let mut vs = [0i64; 8];
            let mut ps = [0i64; 8];
            for a in 0..8 {
                let b = corner_bits(a);
                let node = (ix + b[0]) % n + n * ((iy + b[1]) % n + n * ((iz + b[2]) % n));
                vs[a] = vel_slot[node];
                ps[a] = p_slot[node];
            }
            (vs, ps)
        };

        let mut trip = Triplets::new(ndof);
        let mut lap_trip = Triplets::new(nv.max(1));
        let mut stab_trip = Triplets::new(np);
        let mut lumped_mass = vec![0.0; np];
        for &e in &fluid_elems {
            let (vs, ps) = elem_slots(e);
            for a in 0..8 {
                lumped_mass[ps[a] as usize] += element.corner_volume;
                for b in 0..8 {
                    if vs[a] >= 0 && vs[b] >= 0 {
                        let l = element.laplace[(a, b)];
                        lap_trip.push(vs[a] as usize, vs[b] as usize, l);
                        for d in 0..3 {
                            trip.push(3 * vs[a] as usize + d, 3 * vs[b] as usize + d, l);
                        }
                    }
                    if vs[b] >= 0 {
                        for d in 0..3 {
                            let v = element.div[(a, 3 * b + d)];
                            trip.push(3 * nv + ps[a] as usize, 3 * vs[b] as usize + d, v);
                            trip.push(3 * vs[b] as usize + d, 3 * nv + ps[a] as usize, v);
                        }
                    }
                    let s = element.stab[(a, b)];
                    stab_trip.push(ps[a] as usize, ps[b] as usize, s);
                    trip.push(3 * nv + ps[a] as usize, 3 * nv + ps[b] as usize, -s);
                }
            }
        }
        let saddle = trip.into_csr();
        let laplace = lap_trip.into_csr();
        let stab = stab_trip.into_csr();

        let mut precond_diag = vec![0.0; ndof];
        let lap_diag = laplace.diagonal();
        for s in 0..nv {
            for d in 0..3 {
                precond_diag[3 * s + d] = lap_diag[s];
            }
        }
        for s in 0..np {
            precond_diag[3 * nv + s] = lumped_mass[s];
        }

        let mut kernel = KernelBasis::empty();
        let mut const_p = vec![0.0; ndof];
        for s in 0..np {
            const_p[3 * nv + s] = 1.0;
        }
        kernel.push(const_p);

        Ok(StokesAssembly {
            n,
            h,
            vel_slot,
            vel_nodes,
            p_slot,
            p_nodes,
            fluid_volume: fluid_elems.len() as f64 * h * h * h,
            fluid_elems,
            saddle,
            laplace,
            stab,
            precond_diag,
            kernel,
            lumped_mass,
            mode,
        })
    }

    pub fn ndof(&self) -> usize {
        3 * self.vel_nodes.len() + self.p_nodes.len()
    }

    /// Solves the cell problem driven by the unit vector `e_direction`
    /// (zero-based axis). Returns `(q, π, stats)` with `π` of zero fluid mean.
    pub fn solve_direction(
        &self,
        direction: usize,
    ) -> Result<(Vec<f64>, Vec<f64>, IterStats), CellSolveError> {
        let nv = self.vel_nodes.len();
        let np = self.p_nodes.len();
        let rhs = self.load_vector(direction);
        let max_iter = 500 + 60 * self.ndof();
        let (x, stats) = minres(
            |p, ap| self.saddle.mul(p, ap, self.mode),
            |r, z| {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.precond_diag) {
                    *zi = if *di > 0.0 { ri / di } else { *ri };
                }
            },
            &rhs,
            &self.kernel,
            SOLVER_TOL,
            max_iter,
        )
        .map_err(CellSolveError::Solver)?;
        let q = x[..3 * nv].to_vec();
        let mut pi = x[3 * nv..].to_vec();
        // enforce zero fluid-weighted mean pressure
        let mean = dot(&pi, &self.lumped_mass) / self.fluid_volume;
        pi.iter_mut().for_each(|p| *p -= mean);
        let _ = np;
        Ok((q, pi, stats))
    }

    /// Mean fluid flux `∫ q dy` (the permeability column for this solution).
    pub fn mean_flux(&self, q: &[f64]) -> Vector3<f64> {
        let mut flux = Vector3::zeros();
        let w = self.h * self.h * self.h / 8.0;
        for &e in &self.fluid_elems {
            let (ix, iy, iz) = (
                e as usize % self.n,
                (e as usize / self.n) % self.n,
                e as usize / (self.n * self.n),
            );
            for a in 0..8 {
                let b = corner_bits(a);
                let node = (ix + b[0]) % self.n
                    + self.n * ((iy + b[1]) % self.n + self.n * ((iz + b[2]) % self.n));
                let vs = self.vel_slot[node];
                if vs >= 0 {
                    for d in 0..3 {
                        flux[d] += w * q[3 * vs as usize + d];
                    }
                }
            }
        }
        flux
    }

    /// Discrete viscous energy pairing `∫∇qⁱ:∇qʲ` plus the stabilization
    /// pairing of the two pressures — the exact discrete counterpart of the
    /// permeability entry.
    pub fn energy_pairing(&self, qi: &[f64], pii: &[f64], qj: &[f64], pij: &[f64]) -> f64 {
        let nv = self.vel_nodes.len();
        let mut total = 0.0;
        let mut tmp = vec![0.0; nv];
        let mut comp_i = vec![0.0; nv];
        for d in 0..3 {
            for s in 0..nv {
                comp_i[s] = qi[3 * s + d];
            }
            self.laplace.mul(&comp_i, &mut tmp, self.mode);
            for s in 0..nv {
                total += tmp[s] * qj[3 * s + d];
            }
        }
        let mut sp = vec![0.0; pii.len()];
        self.stab.mul(pii, &mut sp, self.mode);
        total + dot(&sp, pij)
    }

    /// Applies the assembled saddle operator to a raw dof vector
    /// (velocity block first, then pressure). Exposed for cross-checks
    /// against dense factorizations.
    pub fn apply_saddle(&self, x: &[f64], y: &mut [f64]) {
        self.saddle.mul(x, y, self.mode);
    }

    /// Driving load vector for a direction (zero-based axis).
    pub fn load_vector(&self, direction: usize) -> Vec<f64> {
        let mut rhs = vec![0.0; self.ndof()];
        for &e in &self.fluid_elems {
            let (ix, iy, iz) = (
                e as usize % self.n,
                (e as usize / self.n) % self.n,
                e as usize / (self.n * self.n),
            );
            for a in 0..8 {
                let b = corner_bits(a);
                let node = (ix + b[0]) % self.n
                    + self.n * ((iy + b[1]) % self.n + self.n * ((iz + b[2]) % self.n));
                let vs = self.vel_slot[node];
                if vs >= 0 {
                    rhs[3 * vs as usize + direction] += self.h * self.h * self.h / 8.0;
                }
            }
        }
        rhs
    }

    /// Relative residual of the saddle system for a computed solution.
    pub fn relative_residual(&self, q: &[f64], pi: &[f64], direction: usize) -> f64 {
        let nv = self.vel_nodes.len();
        let mut x = vec![0.0; self.ndof()];
        x[..3 * nv].copy_from_slice(q);
        x[3 * nv..].copy_from_slice(pi);
        let mut ax = vec![0.0; self.ndof()];
        self.saddle.mul(&x, &mut ax, self.mode);
        let rhs = self.load_vector(direction);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        self.kernel.project_out(&mut r);
        norm(&r) / norm(&rhs).max(1e-300)
    }
}
