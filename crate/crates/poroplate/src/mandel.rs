//! Mandel (orthonormal) vector representation of symmetric matrices.
//!
//! Symmetric 3×3 matrices map to 6-vectors `(m11, m22, m33, √2·m23, √2·m13,
//! √2·m12)` and symmetric 2×2 matrices to 3-vectors `(m11, m22, √2·m12)`.
//! Both maps are isometries for the Frobenius inner product, so fourth-order
//! tensors become plain symmetric matrices and every positivity check reduces
//! to an ordinary eigenvalue computation.

use nalgebra::{Matrix2, Matrix3, SMatrix, SVector};
use serde::{Deserialize, Serialize};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Off-diagonal index pairs of a symmetric 3×3 matrix in Mandel order.
pub const OFF_DIAG: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];

/// Maps a symmetric 3×3 matrix to its Mandel 6-vector.
pub fn sym3_to_vec(m: &Matrix3<f64>) -> SVector<f64, 6> {
    SVector::<f64, 6>::from([
        m[(0, 0)],
        m[(1, 1)],
        m[(2, 2)],
        SQRT2 * m[(1, 2)],
        SQRT2 * m[(0, 2)],
        SQRT2 * m[(0, 1)],
    ])
}

/// Inverse of [`sym3_to_vec`].
pub fn vec_to_sym3(v: &SVector<f64, 6>) -> Matrix3<f64> {
    let s = 1.0 / SQRT2;
    Matrix3::new(
        v[0],
        s * v[5],
        s * v[4],
        s * v[5],
        v[1],
        s * v[3],
        s * v[4],
        s * v[3],
        v[2],
    )
}

/// Maps a symmetric 2×2 matrix to its Mandel 3-vector.
pub fn sym2_to_vec(m: &Matrix2<f64>) -> SVector<f64, 3> {
    SVector::<f64, 3>::from([m[(0, 0)], m[(1, 1)], SQRT2 * m[(0, 1)]])
}

/// Inverse of [`sym2_to_vec`].
pub fn vec_to_sym2(v: &SVector<f64, 3>) -> Matrix2<f64> {
    let s = 1.0 / SQRT2;
    Matrix2::new(v[0], s * v[2], s * v[2], v[1])
}

/// Natural inclusion of a symmetric 2×2 matrix into 3×3 (upper-left block).
pub fn include_2x2(m: &Matrix2<f64>) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    out[(0, 0)] = m[(0, 0)];
    out[(0, 1)] = m[(0, 1)];
    out[(1, 0)] = m[(1, 0)];
    out[(1, 1)] = m[(1, 1)];
    out
}

/// The symmetric matrix `sym(0|0|g)`, i.e. the symmetric part of the matrix
/// whose third column is `g` and whose other columns vanish.
pub fn sym_col3(g: &SVector<f64, 3>) -> Matrix3<f64> {
    Matrix3::new(
        0.0,
        0.0,
        0.5 * g[0],
        0.0,
        0.0,
        0.5 * g[1],
        0.5 * g[0],
        0.5 * g[1],
        g[2],
    )
}

/// Mandel 6-vector of `sym(0|0|g)`.
pub fn sym_col3_vec(g: &SVector<f64, 3>) -> SVector<f64, 6> {
    SVector::<f64, 6>::from([0.0, 0.0, g[2], g[1] / SQRT2, g[0] / SQRT2, 0.0])
}

/// Symmetrized unit load `eⁱ⊙eʲ = (eⁱ⊗eʲ + eʲ⊗eⁱ)/2` (zero-based indices).
pub fn unit_load(i: usize, j: usize) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    if i == j {
        m[(i, i)] = 1.0;
    } else {
        m[(i, j)] = 0.5;
        m[(j, i)] = 0.5;
    }
    m
}

/// Fourth-order elasticity tensor stored as a symmetric 6×6 Mandel matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityTensor {
    mandel: SMatrix<f64, 6, 6>,
}

impl ElasticityTensor {
    /// Builds the tensor from its Mandel matrix, symmetrizing the input.
    pub fn from_mandel(m: SMatrix<f64, 6, 6>) -> Self {
        ElasticityTensor {
            mandel: 0.5 * (m + m.transpose()),
        }
    }

    /// Isotropic tensor with Lamé parameters `lambda`, `mu`.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let mut m = SMatrix::<f64, 6, 6>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = lambda;
            }
            m[(i, i)] += 2.0 * mu;
            m[(i + 3, i + 3)] = 2.0 * mu;
        }
        ElasticityTensor { mandel: m }
    }

    /// Builds the tensor from the 21 upper-triangle entries of its Mandel
    /// matrix, row by row.
    pub fn from_upper_triangle(c: &[f64; 21]) -> Self {
        let mut m = SMatrix::<f64, 6, 6>::zeros();
        let mut k = 0;
        for i in 0..6 {
            for j in i..6 {
                m[(i, j)] = c[k];
                m[(j, i)] = c[k];
                k += 1;
            }
        }
        ElasticityTensor { mandel: m }
    }

    /// The Mandel 6×6 matrix.
    pub fn mandel(&self) -> &SMatrix<f64, 6, 6> {
        &self.mandel
    }

    /// Applies the tensor to a symmetric 3×3 strain.
    pub fn apply(&self, strain: &Matrix3<f64>) -> Matrix3<f64> {
        vec_to_sym3(&(self.mandel * sym3_to_vec(strain)))
    }

    /// Smallest eigenvalue of the Mandel matrix; positive for a physically
    /// admissible tensor.
    pub fn smallest_eigenvalue(&self) -> f64 {
        self.mandel
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}
