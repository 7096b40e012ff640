//! Reference-element machinery for the plate discretization: bilinear
//! in-plane elements, Bogner–Fox–Schmit bicubic Hermite elements and the
//! 3×3 Gauss rule used for all in-plane integrals.

use nalgebra::{SMatrix, SVector};

/// 3-point Gauss rule on [0, 1].
pub const GAUSS3: [(f64, f64); 3] = [
    (0.112701665379258, 0.277777777777778),
    (0.5, 0.444444444444444),
    (0.887298334620742, 0.277777777777778),
];

/// 1D cubic Hermite values on [0, h]: `[v0, d0, v1, d1]` at `x = ξ·h`.
pub fn hermite(xi: f64, h: f64) -> [f64; 4] {
    let xi2 = xi * xi;
    let xi3 = xi2 * xi;
    [
        1.0 - 3.0 * xi2 + 2.0 * xi3,
        h * (xi - 2.0 * xi2 + xi3),
        3.0 * xi2 - 2.0 * xi3,
        h * (xi3 - xi2),
    ]
}

/// First derivatives of [`hermite`] with respect to the physical coordinate.
pub fn hermite_d1(xi: f64, h: f64) -> [f64; 4] {
    let xi2 = xi * xi;
    [
        (6.0 * xi2 - 6.0 * xi) / h,
        1.0 - 4.0 * xi + 3.0 * xi2,
        (6.0 * xi - 6.0 * xi2) / h,
        3.0 * xi2 - 2.0 * xi,
    ]
}

/// Second derivatives of [`hermite`] with respect to the physical coordinate.
pub fn hermite_d2(xi: f64, h: f64) -> [f64; 4] {
    [
        (12.0 * xi - 6.0) / h / h,
        (6.0 * xi - 4.0) / h,
        (6.0 - 12.0 * xi) / h / h,
        (6.0 * xi - 2.0) / h,
    ]
}

/// Local corner order shared by all element types: (0,0), (1,0), (0,1), (1,1).
pub const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// Per-corner Hermite dof kinds: value, ∂x, ∂y, ∂xy.
const BFS_KINDS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// Evaluates the 16 BFS shape-function second derivatives `(∂xx, ∂yy, ∂xy)`
/// at `(ξ, η)` on a cell of size `hx × hy`. Local dof order: corner-major,
/// kind-minor.
pub fn bfs_second_derivatives(xi: f64, eta: f64, hx: f64, hy: f64) -> [[f64; 3]; 16] {
    let vx = hermite(xi, hx);
    let dx = hermite_d1(xi, hx);
    let ddx = hermite_d2(xi, hx);
    let vy = hermite(eta, hy);
    let dy = hermite_d1(eta, hy);
    let ddy = hermite_d2(eta, hy);
    let mut out = [[0.0; 3]; 16];
    for (c, &(ax, ay)) in CORNERS.iter().enumerate() {
        for (k, &(tx, ty)) in BFS_KINDS.iter().enumerate() {
            let ix = 2 * ax + tx;
            let iy = 2 * ay + ty;
            out[4 * c + k] = [
                ddx[ix] * vy[iy],
                vx[ix] * ddy[iy],
                dx[ix] * dy[iy],
            ];
        }
    }
    out
}

/// Evaluates the 16 BFS shape-function values at `(ξ, η)`.
pub fn bfs_values(xi: f64, eta: f64, hx: f64, hy: f64) -> [f64; 16] {
    let vx = hermite(xi, hx);
    let vy = hermite(eta, hy);
    let mut out = [0.0; 16];
    for (c, &(ax, ay)) in CORNERS.iter().enumerate() {
        for (k, &(tx, ty)) in BFS_KINDS.iter().enumerate() {
            out[4 * c + k] = vx[2 * ax + tx] * vy[2 * ay + ty];
        }
    }
    out
}

/// Bilinear shape values and gradients at `(ξ, η)`; corner order [`CORNERS`].
pub fn q1_basis(xi: f64, eta: f64, hx: f64, hy: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let lx = [1.0 - xi, xi];
    let dlx = [-1.0 / hx, 1.0 / hx];
    let ly = [1.0 - eta, eta];
    let dly = [-1.0 / hy, 1.0 / hy];
    let mut vals = [0.0; 4];
    let mut grads = [[0.0; 2]; 4];
    for (c, &(ax, ay)) in CORNERS.iter().enumerate() {
        vals[c] = lx[ax] * ly[ay];
        grads[c] = [dlx[ax] * ly[ay], lx[ax] * dly[ay]];
    }
    (vals, grads)
}

/// Strain-curvature matrix at one quadrature point: maps the 24 local dofs
/// (8 in-plane, 16 deflection) to the Mandel pair
/// `(e₁₁, e₂₂, √2 e₁₂, κ₁₁, κ₂₂, √2 κ₁₂)`.
pub fn pair_matrix(xi: f64, eta: f64, hx: f64, hy: f64) -> SMatrix<f64, 6, 24> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let (_, grads) = q1_basis(xi, eta, hx, hy);
    let dd = bfs_second_derivatives(xi, eta, hx, hy);
    let mut b = SMatrix::<f64, 6, 24>::zeros();
    for c in 0..4 {
        let [gx, gy] = grads[c];
        // components (a₁, a₂) of corner c
        b[(0, 2 * c)] = gx;
        b[(1, 2 * c + 1)] = gy;
        b[(2, 2 * c)] = sqrt2 * 0.5 * gy;
        b[(2, 2 * c + 1)] = sqrt2 * 0.5 * gx;
    }
    for l in 0..16 {
        let [bxx, byy, bxy] = dd[l];
        b[(3, 8 + l)] = bxx;
        b[(4, 8 + l)] = byy;
        b[(5, 8 + l)] = sqrt2 * bxy;
    }
    b
}

/// Integral of `∫ x dx` type moments of a linear hat function over a
/// subinterval: returns `(∫ ψ, ∫ x ψ)` over `[a, b] ⊂ [z0, z1]` for the hat
/// that is 1 at `node` and 0 at the other end of `[z0, z1]`.
pub fn hat_moments(a: f64, b: f64, z0: f64, z1: f64, node_at_z1: bool) -> (f64, f64) {
    let h = z1 - z0;
    // 2-point Gauss is exact for the quadratic integrand x·ψ(x)
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let gp = [0.5 - 0.5 / 3.0_f64.sqrt(), 0.5 + 0.5 / 3.0_f64.sqrt()];
    for &g in &gp {
        let x = a + (b - a) * g;
        let psi = if node_at_z1 {
            (x - z0) / h
        } else {
            (z1 - x) / h
        };
        m0 += 0.5 * (b - a) * psi;
        m1 += 0.5 * (b - a) * x * psi;
    }
    (m0, m1)
}

/// Elementwise-integrated BFS value vector (`∫ N dx̂` over the cell), used by
/// the deflection mean constraint.
pub fn bfs_cell_integral(hx: f64, hy: f64) -> SVector<f64, 16> {
    let mut out = SVector::<f64, 16>::zeros();
    for &(gx, wx) in &GAUSS3 {
        for &(gy, wy) in &GAUSS3 {
            let vals = bfs_values(gx, gy, hx, hy);
            for l in 0..16 {
                out[l] += wx * wy * hx * hy * vals[l];
            }
        }
    }
    out
}
