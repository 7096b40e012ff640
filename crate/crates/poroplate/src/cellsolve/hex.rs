//! Trilinear (8-node) hexahedral element matrices on cubic voxels.
//!
//! All voxels of a cell share the same edge length and material tensor, so
//! every element matrix is computed once and scattered many times. Corners
//! and Gauss points are indexed by the bit pattern `(dx, dy, dz) = (a & 1,
//! a >> 1 & 1, a >> 2 & 1)`. Quadrature is 2×2×2 Gauss, exact for trilinear
//! stiffness on axis-aligned cubes.

use crate::mandel::{sym3_to_vec, sym_col3_vec, ElasticityTensor};
use nalgebra::{Matrix3, SMatrix, SVector};

/// Corner bit pattern.
#[inline]
pub fn corner_bits(a: usize) -> [usize; 3] {
    [a & 1, (a >> 1) & 1, (a >> 2) & 1]
}

/// Corner sign vector: `+1` where the corner bit is set, `−1` otherwise.
/// `∫_e ∂_d φ_a = s_d(a)·h²/4`.
#[inline]
pub fn corner_sign(a: usize) -> [f64; 3] {
    let b = corner_bits(a);
    [
        if b[0] == 1 { 1.0 } else { -1.0 },
        if b[1] == 1 { 1.0 } else { -1.0 },
        if b[2] == 1 { 1.0 } else { -1.0 },
    ]
}

/// Values and physical gradients of the 8 shape functions at the 8 Gauss
/// points of a voxel with edge `h`.
pub struct QuadratureTable {
    /// `value[g][a]`
    pub value: [[f64; 8]; 8],
    /// `grad[g][a]` — physical gradient (scaled by 1/h)
    pub grad: [[SVector<f64, 3>; 8]; 8],
    /// quadrature weight per point (`h³/8`)
    pub weight: f64,
    pub h: f64,
}

impl QuadratureTable {
    pub fn new(h: f64) -> Self {
        let lo = 0.5 - 0.5 / 3.0_f64.sqrt();
        let hi = 0.5 + 0.5 / 3.0_f64.sqrt();
        let mut value = [[0.0; 8]; 8];
        let mut grad = [[SVector::<f64, 3>::zeros(); 8]; 8];
        for g in 0..8 {
            let gb = corner_bits(g);
            let xi = [
                if gb[0] == 1 { hi } else { lo },
                if gb[1] == 1 { hi } else { lo },
                if gb[2] == 1 { hi } else { lo },
            ];
            for a in 0..8 {
                let ab = corner_bits(a);
                // 1D factors and their reference derivatives
                let mut f = [0.0; 3];
                let mut df = [0.0; 3];
                for d in 0..3 {
                    if ab[d] == 1 {
                        f[d] = xi[d];
                        df[d] = 1.0;
                    } else {
                        f[d] = 1.0 - xi[d];
                        df[d] = -1.0;
                    }
                }
                value[g][a] = f[0] * f[1] * f[2];
                grad[g][a] = SVector::<f64, 3>::new(
                    df[0] * f[1] * f[2] / h,
                    f[0] * df[1] * f[2] / h,
                    f[0] * f[1] * df[2] / h,
                );
            }
        }
        QuadratureTable {
            value,
            grad,
            weight: h * h * h / 8.0,
            h,
        }
    }

    /// Strain–displacement matrix (Mandel rows, corner-major columns
    /// `[u_x^0, u_y^0, u_z^0, u_x^1, …]`) at Gauss point `g`.
    pub fn strain_matrix(&self, g: usize) -> SMatrix<f64, 6, 24> {
        let mut b = SMatrix::<f64, 6, 24>::zeros();
        let s = 1.0 / std::f64::consts::SQRT_2;
        for a in 0..8 {
            let gr = self.grad[g][a];
            let c = 3 * a;
            b[(0, c)] = gr[0];
            b[(1, c + 1)] = gr[1];
            b[(2, c + 2)] = gr[2];
            // √2·e_23, √2·e_13, √2·e_12
            b[(3, c + 1)] = s * gr[2];
            b[(3, c + 2)] = s * gr[1];
            b[(4, c)] = s * gr[2];
            b[(4, c + 2)] = s * gr[0];
            b[(5, c)] = s * gr[1];
            b[(5, c + 1)] = s * gr[0];
        }
        b
    }
}

/// Mandel matrix whose columns are `sym(0|0|eᵢ)`, coupling the constant
/// extension vector `g` into the strain.
pub fn g_coupling_matrix() -> SMatrix<f64, 6, 3> {
    let mut m = SMatrix::<f64, 6, 3>::zeros();
    for i in 0..3 {
        let mut e = SVector::<f64, 3>::zeros();
        e[i] = 1.0;
        m.set_column(i, &sym_col3_vec(&e));
    }
    m
}

/// Precomputed per-element matrices for the solid elasticity problems.
pub struct ElasticElement {
    /// 24×24 stiffness `∫ Bᵀ𝔸B`
    pub k_ww: SMatrix<f64, 24, 24>,
    /// 24×3 coupling `∫ Bᵀ𝔸M`
    pub k_wg: SMatrix<f64, 24, 3>,
    /// 3×3 block `|e|·Mᵀ𝔸M`
    pub k_gg: Matrix3<f64>,
    /// 6×24 integrated strain matrix `∫ B`
    pub p_int: SMatrix<f64, 6, 24>,
    /// element volume
    pub volume: f64,
}

impl ElasticElement {
    pub fn new(quad: &QuadratureTable, tensor: &ElasticityTensor) -> Self {
        let a = tensor.mandel();
        let m = g_coupling_matrix();
        let mut k_ww = SMatrix::<f64, 24, 24>::zeros();
        let mut p_int = SMatrix::<f64, 6, 24>::zeros();
        for g in 0..8 {
            let b = quad.strain_matrix(g);
            k_ww += quad.weight * b.transpose() * a * b;
            p_int += quad.weight * b;
        }
        let volume = 8.0 * quad.weight;
        let k_wg = p_int.transpose() * a * m;
        let k_gg = volume * m.transpose() * a * m;
        ElasticElement {
            k_ww,
            k_wg,
            k_gg,
            p_int,
            volume,
        }
    }

    /// Right-hand side blocks for a constant prestrain `E`:
    /// `(−∫Bᵀ𝔸 vec(E), −|e|·Mᵀ𝔸 vec(E))`.
    pub fn load_rhs(
        &self,
        tensor: &ElasticityTensor,
        prestrain: &Matrix3<f64>,
    ) -> (SVector<f64, 24>, SVector<f64, 3>) {
        let ae = tensor.mandel() * sym3_to_vec(prestrain);
        let m = g_coupling_matrix();
        (
            -self.p_int.transpose() * ae,
            -self.volume * m.transpose() * ae,
        )
    }
}

/// Precomputed per-element matrices for the stabilized Stokes problem.
pub struct StokesElement {
    /// 8×8 scalar Laplacian `∫ ∇φ·∇φ`
    pub laplace: SMatrix<f64, 8, 8>,
    /// 8×24 divergence coupling `−∫ ψ_a ∂_d φ_b` (pressure row, velocity col)
    pub div: SMatrix<f64, 8, 24>,
    /// 8×8 pressure stabilization `β h² ∫ κ(∇ψ_a)·κ(∇ψ_b)` where `κ` removes
    /// the elementwise mean gradient (local-projection form)
    pub stab: SMatrix<f64, 8, 8>,
    /// lumped corner volume `h³/8`
    pub corner_volume: f64,
}

impl StokesElement {
    pub fn new(quad: &QuadratureTable, beta: f64) -> Self {
        let mut laplace = SMatrix::<f64, 8, 8>::zeros();
        let mut div = SMatrix::<f64, 8, 24>::zeros();
        for g in 0..8 {
            for a in 0..8 {
                for b in 0..8 {
                    laplace[(a, b)] += quad.weight * quad.grad[g][a].dot(&quad.grad[g][b]);
                    for d in 0..3 {
                        div[(a, 3 * b + d)] -= quad.weight * quad.value[g][a] * quad.grad[g][b][d];
                    }
                }
            }
        }
        // mean gradients: ∫∇φ_a / |e| = s(a)/(4h)
        let h = quad.h;
        let vol = 8.0 * quad.weight;
        let mut stab = SMatrix::<f64, 8, 8>::zeros();
        for a in 0..8 {
            let sa = corner_sign(a);
            for b in 0..8 {
                let sb = corner_sign(b);
                let mean_dot =
                    (sa[0] * sb[0] + sa[1] * sb[1] + sa[2] * sb[2]) / (16.0 * h * h) * vol;
                stab[(a, b)] = beta * h * h * (laplace[(a, b)] - mean_dot);
            }
        }
        StokesElement {
            laplace,
            div,
            stab,
            corner_volume: quad.weight,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shape_functions_partition_unity() {
        let q = QuadratureTable::new(0.25);
        for g in 0..8 {
            let sum: f64 = q.value[g].iter().sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-14);
            let gsum: SVector<f64, 3> = q.grad[g].iter().sum();
            assert_relative_eq!(gsum.norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn strain_matrix_reproduces_constant_strain() {
        // nodal displacement u = E·x gives strain E at every Gauss point
        let h = 0.5;
        let q = QuadratureTable::new(h);
        let e = Matrix3::new(1.0, 0.5, -0.25, 0.5, 2.0, 0.75, -0.25, 0.75, 3.0);
        let mut u = SVector::<f64, 24>::zeros();
        for a in 0..8 {
            let b = corner_bits(a);
            let x = SVector::<f64, 3>::new(b[0] as f64 * h, b[1] as f64 * h, b[2] as f64 * h);
            let ux = e * x;
            for d in 0..3 {
                u[3 * a + d] = ux[d];
            }
        }
        let target = sym3_to_vec(&e);
        for g in 0..8 {
            let strain = q.strain_matrix(g) * u;
            assert_relative_eq!((strain - target).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stiffness_annihilates_rigid_motions() {
        let q = QuadratureTable::new(0.1);
        let t = ElasticityTensor::isotropic(1.3, 0.8);
        let el = ElasticElement::new(&q, &t);
        // translation
        let mut u = SVector::<f64, 24>::zeros();
        for a in 0..8 {
            u[3 * a] = 1.0;
        }
        assert_relative_eq!((el.k_ww * u).norm(), 0.0, epsilon = 1e-13);
        // infinitesimal rotation about z: u = (−y, x, 0)
        let mut r = SVector::<f64, 24>::zeros();
        for a in 0..8 {
            let b = corner_bits(a);
            r[3 * a] = -(b[1] as f64) * 0.1;
            r[3 * a + 1] = b[0] as f64 * 0.1;
        }
        assert_relative_eq!((el.k_ww * r).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn integrated_gradient_matches_corner_signs() {
        let h = 0.2;
        let q = QuadratureTable::new(h);
        for a in 0..8 {
            let s = corner_sign(a);
            let mut integral = SVector::<f64, 3>::zeros();
            for g in 0..8 {
                integral += q.weight * q.grad[g][a];
            }
            for d in 0..3 {
                assert_relative_eq!(integral[d], s[d] * h * h / 4.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn stabilization_vanishes_on_linear_pressure() {
        // ∇(x) is elementwise constant, so the fluctuation term must kill it
        let h = 0.25;
        let q = QuadratureTable::new(h);
        let el = StokesElement::new(&q, 0.05);
        let mut p = SVector::<f64, 8>::zeros();
        for a in 0..8 {
            let b = corner_bits(a);
            p[a] = 2.0 * b[0] as f64 * h - 0.7 * b[2] as f64 * h;
        }
        assert_relative_eq!((el.stab * p).norm(), 0.0, epsilon = 1e-14);
        // but not on a genuinely trilinear field
        let mut p2 = SVector::<f64, 8>::zeros();
        p2[7] = 1.0;
        assert!((el.stab * p2).norm() > 1e-6);
    }
}
