//! Assembly and solution of the solid-phase cell problems.
//!
//! Unknowns are the nodal displacement `w` on solid-adjacent nodes plus the
//! constant extension vector `g ∈ ℝ³`, appended as three global degrees of
//! freedom. The assembled operator is symmetric positive semidefinite; its
//! kernel always contains the three rigid translations and, when the solid
//! phase does not wrap the torus along some axis, additional affine fields
//! (built from unwrapped coordinates) that the extended strain annihilates.
//! The conjugate-gradient solve projects this kernel out every iteration.

use super::hex::{corner_bits, corner_sign, ElasticElement, QuadratureTable};
use super::CellSolveError;
use crate::linalg::{dot, norm, pcg, Csr, IterStats, KernelBasis, Triplets};
use crate::mandel::{sym3_to_vec, vec_to_sym3};
use crate::microcell::CellMicrostructure;
use crate::{Parallelism, SOLVER_TOL};
use nalgebra::{Matrix3, SMatrix, SVector};

/// Relative inconsistency above which a right-hand side is treated as
/// incompatible with the singular operator (degenerate cell geometry).
const CONSISTENCY_TOL: f64 = 1e-8;

pub struct SolidAssembly {
    pub n: usize,
    pub h: f64,
    /// node index (N³, row-major) → dof slot, −1 if not solid-adjacent
    pub node_slot: Vec<i64>,
    /// slot → node index
    pub nodes: Vec<u32>,
    /// solid voxel indices
    pub solid_elems: Vec<u32>,
    /// per solid voxel: the 8 corner slots
    pub elem_slots: Vec<[u32; 8]>,
    pub element: ElasticElement,
    k_ww: Csr,
    /// 3·ns × 3 coupling block, column-major
    k_wg: Vec<[f64; 3]>,
    k_gg: Matrix3<f64>,
    pub kernel: KernelBasis,
    /// fluid boundary functional `ℓ(ζ, r) = ∫_fluid div ζ + r₃·|fluid|`
    /// as a vector over the (w, g) dofs
    pub rhs_fluid: Vec<f64>,
    pub solid_volume: f64,
    pub fluid_volume: f64,
    /// per-axis periodic percolation of the solid phase
    pub solid_percolates: [bool; 3],
    tensor: crate::mandel::ElasticityTensor,
    mode: Parallelism,
}

impl SolidAssembly {
    pub fn new(cell: &CellMicrostructure, mode: Parallelism) -> Self {
        let n = cell.resolution();
        let h = cell.voxel_size();
        let total = n * n * n;
        let quad = QuadratureTable::new(h);
        let element = ElasticElement::new(&quad, &cell.phase().elasticity);

        // Solid-adjacent nodes
        let mut node_slot = vec![-1i64; total];
        let mut nodes = Vec::new();
        let mut solid_elems = Vec::new();
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    if cell.is_fluid(ix, iy, iz) {
                        continue;
                    }
                    solid_elems.push(cell.voxel_index(ix, iy, iz) as u32);
                    for a in 0..8 {
                        let b = corner_bits(a);
                        let node = (ix + b[0]) % n + n * ((iy + b[1]) % n + n * ((iz + b[2]) % n));
                        if node_slot[node] < 0 {
                            node_slot[node] = nodes.len() as i64;
                            nodes.push(node as u32);
                        }
                    }
                }
            }
        }
        let ns = nodes.len();
        let mut elem_slots = Vec::with_capacity(solid_elems.len());
        for &e in &solid_elems {
            let (ix, iy, iz) = (
                e as usize % n,
                (e as usize / n) % n,
                e as usize / (n * n),
            );
            let mut slots = [0u32; 8];
            for (a, slot) in slots.iter_mut().enumerate() {
                let b = corner_bits(a);
                let node = (ix + b[0]) % n + n * ((iy + b[1]) % n + n * ((iz + b[2]) % n));
                *slot = node_slot[node] as u32;
            }
            elem_slots.push(slots);
        }

        // Global stiffness blocks
        let mut trip = Triplets::new(3 * ns);
        let mut k_wg = vec![[0.0; 3]; 3 * ns];
        for slots in &elem_slots {
            for a in 0..8 {
                let ra = 3 * slots[a] as usize;
                for (b, &slot_b) in slots.iter().enumerate() {
                    let cb = 3 * slot_b as usize;
                    for i in 0..3 {
                        for j in 0..3 {
                            trip.push(ra + i, cb + j, element.k_ww[(3 * a + i, 3 * b + j)]);
                        }
                    }
                }
                for i in 0..3 {
                    for (j, v) in k_wg[ra + i].iter_mut().enumerate() {
                        *v += element.k_wg[(3 * a + i, j)];
                    }
                }
            }
        }
        let k_ww = trip.into_csr();
        let k_gg = element.k_gg * solid_elems.len() as f64;
        let solid_volume = element.volume * solid_elems.len() as f64;
        let fluid_volume = 1.0 - solid_volume;

        // Kernel of the extended strain operator
        let topo = cell.topology(false);
        let ndof = 3 * ns + 3;
        let mut kernel = KernelBasis::empty();
        for d in 0..3 {
            let mut v = vec![0.0; ndof];
            for s in 0..ns {
                v[3 * s + d] = 1.0;
            }
            kernel.push(v);
        }
        // Unwrapped node coordinates along each non-wrapping axis
        let mut unwrapped: [Option<Vec<f64>>; 3] = [None, None, None];
        for axis in 0..3 {
            if topo.percolates[axis] {
                continue;
            }
            let mut coord = vec![0.0; ns];
            for (&e, slots) in solid_elems.iter().zip(&elem_slots) {
                let idx = [
                    e as usize % n,
                    (e as usize / n) % n,
                    e as usize / (n * n),
                ];
                let off = topo.offsets[e as usize][axis];
                for a in 0..8 {
                    let b = corner_bits(a);
                    let pos = idx[axis] as i64 + b[axis] as i64 + n as i64 * off;
                    coord[slots[a] as usize] = h * pos as f64;
                }
            }
            unwrapped[axis] = Some(coord);
        }
        // w = −eᵢ·ỹ₃ with g = eᵢ (solid not wrapping the thickness axis)
        if let Some(y3) = &unwrapped[2] {
            for i in 0..3 {
                let mut v = vec![0.0; ndof];
                for s in 0..ns {
                    v[3 * s + i] = -y3[s];
                }
                v[3 * ns + i] = 1.0;
                kernel.push(v);
            }
        }
        // w = −e₃·ỹ_α with g = e_α (in-plane non-wrapping axes)
        for alpha in 0..2 {
            if let Some(ya) = &unwrapped[alpha] {
                let mut v = vec![0.0; ndof];
                for s in 0..ns {
                    v[3 * s + 2] = -ya[s];
                }
                v[3 * ns + alpha] = 1.0;
                kernel.push(v);
            }
        }
        // rotations in planes spanned by two non-wrapping axes
        for alpha in 0..3 {
            for beta in alpha + 1..3 {
                if let (Some(ya), Some(yb)) = (&unwrapped[alpha], &unwrapped[beta]) {
                    let mut v = vec![0.0; ndof];
                    for s in 0..ns {
                        v[3 * s + beta] = ya[s];
                        v[3 * s + alpha] = -yb[s];
                    }
                    kernel.push(v);
                }
            }
        }

        // Fluid boundary functional: elementwise ∫ div over fluid voxels
        // picks up only traces on solid-adjacent nodes, plus the r₃ term.
        let mut rhs_fluid = vec![0.0; ndof];
        let quarter = h * h / 4.0;
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    if !cell.is_fluid(ix, iy, iz) {
                        continue;
                    }
                    for a in 0..8 {
                        let b = corner_bits(a);
                        let node = (ix + b[0]) % n + n * ((iy + b[1]) % n + n * ((iz + b[2]) % n));
                        let slot = node_slot[node];
                        if slot >= 0 {
                            let s = corner_sign(a);
                            for d in 0..3 {
                                rhs_fluid[3 * slot as usize + d] += s[d] * quarter;
                            }
                        }
                    }
                }
            }
        }
        rhs_fluid[3 * ns + 2] += fluid_volume;

        SolidAssembly {
            n,
            h,
            node_slot,
            nodes,
            solid_elems,
            elem_slots,
            element,
            k_ww,
            k_wg,
            k_gg,
            kernel,
            rhs_fluid,
            solid_volume,
            fluid_volume,
            solid_percolates: topo.percolates,
            tensor: cell.phase().elasticity.clone(),
            mode,
        }
    }

    pub fn ndof(&self) -> usize {
        3 * self.nodes.len() + 3
    }

    /// `y = K·x` for the full (w, g) vector.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nw = 3 * self.nodes.len();
        self.k_ww.mul(&x[..nw], &mut y[..nw], self.mode);
        let g = SVector::<f64, 3>::new(x[nw], x[nw + 1], x[nw + 2]);
        let mut yg = self.k_gg * g;
        for (row, kw) in self.k_wg.iter().enumerate() {
            y[row] += kw[0] * g[0] + kw[1] * g[1] + kw[2] * g[2];
            yg[0] += kw[0] * x[row];
            yg[1] += kw[1] * x[row];
            yg[2] += kw[2] * x[row];
        }
        y[nw] = yg[0];
        y[nw + 1] = yg[1];
        y[nw + 2] = yg[2];
    }

    fn jacobi_diagonal(&self) -> Vec<f64> {
        let nw = 3 * self.nodes.len();
        let mut d = self.k_ww.diagonal();
        d.resize(nw + 3, 0.0);
        for i in 0..3 {
            d[nw + i] = self.k_gg[(i, i)];
        }
        d
    }

    fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, IterStats), CellSolveError> {
        let diag = self.jacobi_diagonal();
        let max_iter = 400 + 40 * self.ndof();
        pcg(
            |x, y| self.apply(x, y),
            rhs,
            Some(&diag),
            &self.kernel,
            SOLVER_TOL,
            max_iter,
        )
        .map_err(CellSolveError::Solver)
    }

    /// Right-hand side of the corrector problem for a constant prestrain `E`.
    pub fn prestrain_rhs(&self, prestrain: &Matrix3<f64>) -> Vec<f64> {
        let (rw, rg) = self.element.load_rhs(&self.tensor, prestrain);
        let mut rhs = vec![0.0; self.ndof()];
        let nw = 3 * self.nodes.len();
        for slots in &self.elem_slots {
            for a in 0..8 {
                let r = 3 * slots[a] as usize;
                for d in 0..3 {
                    rhs[r + d] += rw[3 * a + d];
                }
            }
        }
        for d in 0..3 {
            rhs[nw + d] = rg[d] * self.solid_elems.len() as f64;
        }
        rhs
    }

    /// Solves the corrector problem for a constant prestrain `E`.
    pub fn solve_prestrain(
        &self,
        prestrain: &Matrix3<f64>,
    ) -> Result<(Vec<f64>, IterStats), CellSolveError> {
        self.solve(&self.prestrain_rhs(prestrain))
    }

    /// Solves the pressure (Biot) corrector problem against the fluid
    /// boundary functional.
    pub fn solve_fluid_load(&self) -> Result<(Vec<f64>, IterStats), CellSolveError> {
        let scale = norm(&self.rhs_fluid).max(1.0);
        let incons = self.kernel.max_component(&self.rhs_fluid);
        if incons > CONSISTENCY_TOL * scale {
            return Err(CellSolveError::DegenerateStorage { defect: incons });
        }
        self.solve(&self.rhs_fluid)
    }

    /// Average solid stress `∫_solid 𝔸[E + 𝔠(w, g)] dy` for the solution `x`
    /// of the prestrain problem with constant prestrain `E`.
    pub fn average_stress(&self, x: &[f64], prestrain: &Matrix3<f64>) -> Matrix3<f64> {
        let nw = 3 * self.nodes.len();
        let mut strain_int = sym3_to_vec(prestrain) * self.solid_volume;
        let g = SVector::<f64, 3>::new(x[nw], x[nw + 1], x[nw + 2]);
        strain_int += super::hex::g_coupling_matrix() * g * self.solid_volume;
        let mut we = SVector::<f64, 24>::zeros();
        for slots in &self.elem_slots {
            for a in 0..8 {
                for d in 0..3 {
                    we[3 * a + d] = x[3 * slots[a] as usize + d];
                }
            }
            strain_int += self.element.p_int * we;
        }
        vec_to_sym3(&(self.tensor.mandel() * strain_int))
    }

    /// Evaluates the fluid boundary functional on a solution vector.
    pub fn fluid_pairing(&self, x: &[f64]) -> f64 {
        dot(&self.rhs_fluid, x)
    }

    /// Energy product `xᵀK y`.
    pub fn energy_product(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut kx = vec![0.0; x.len()];
        self.apply(x, &mut kx);
        dot(&kx, y)
    }

    /// Residual norm of `K x = rhs` relative to `‖rhs‖` (after kernel
    /// projection), for diagnostics and tests.
    pub fn relative_residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let mut r = vec![0.0; x.len()];
        self.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        self.kernel.project_out(&mut r);
        let mut b = rhs.to_vec();
        self.kernel.project_out(&mut b);
        let scale = norm(&b).max(1e-300);
        norm(&r) / scale
    }
}

/// Element-averaged element matrix `∫_e B` reused by field evaluation.
pub fn strain_sample(
    quad: &QuadratureTable,
    corner_values: &SMatrix<f64, 3, 8>,
    g: &SVector<f64, 3>,
    gauss_point: usize,
) -> Matrix3<f64> {
    let mut u = SVector::<f64, 24>::zeros();
    for a in 0..8 {
        for d in 0..3 {
            u[3 * a + d] = corner_values[(d, a)];
        }
    }
    let strain = quad.strain_matrix(gauss_point) * u;
    vec_to_sym3(&strain) + crate::mandel::sym_col3(g)
}
