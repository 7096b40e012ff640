//! Sparse symmetric linear algebra: CSR storage, conjugate gradients and
//! MINRES, both with optional diagonal preconditioning and projection onto
//! the orthogonal complement of a known (small) kernel.
//!
//! The cell problems produce symmetric systems that are singular but
//! consistent: rigid translations (and, on non-wrapping phases, a handful of
//! extra affine fields) for elasticity, the constant pressure for Stokes.
//! Rather than pinning degrees of freedom, the solvers orthogonalize against
//! an explicit kernel basis every iteration, which keeps the systems symmetric
//! and lets the residual check certify consistency.

use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::Parallelism;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("iterative solver stalled: relative residual {residual:.3e} after {iterations} iterations (tolerance {tol:.1e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },
    #[error("linear system is singular or inconsistent: {0}")]
    Singular(String),
}

/// Triplet accumulator for symmetric CSR assembly. Duplicate entries are
/// summed.
pub struct Triplets {
    n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets {
            n,
            entries: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        if val != 0.0 {
            self.entries.push((row as u32, col as u32, val));
        }
    }

    pub fn into_csr(mut self) -> Csr {
        self.entries
            .sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col = Vec::new();
        let mut val = Vec::new();
        let mut i = 0;
        let ents = &self.entries;
        while i < ents.len() {
            let (r, c, mut v) = ents[i];
            let mut j = i + 1;
            while j < ents.len() && ents[j].0 == r && ents[j].1 == c {
                v += ents[j].2;
                j += 1;
            }
            col.push(c);
            val.push(v);
            row_ptr[r as usize + 1] += 1;
            i = j;
        }
        for k in 0..self.n {
            row_ptr[k + 1] += row_ptr[k];
        }
        Csr {
            n: self.n,
            row_ptr,
            col,
            val,
        }
    }
}

/// Square sparse matrix in compressed sparse row format.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl Csr {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// Diagonal entries (zeros where absent).
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (r, dr) in d.iter_mut().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col[k] as usize == r {
                    *dr = self.val[k];
                }
            }
        }
        d
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += self.val[k] * x[self.col[k] as usize];
        }
        acc
    }

    /// `y = A·x`. Row-parallel under `Parallelism::Parallel`, which is
    /// deterministic: each row is reduced sequentially.
    pub fn mul(&self, x: &[f64], y: &mut [f64], mode: Parallelism) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        match mode {
            #[cfg(feature = "parallel")]
            Parallelism::Parallel => {
                y.par_iter_mut()
                    .enumerate()
                    .for_each(|(r, yr)| *yr = self.row_dot(r, x));
            }
            _ => {
                for (r, yr) in y.iter_mut().enumerate() {
                    *yr = self.row_dot(r, x);
                }
            }
        }
    }

    /// Maximum absolute symmetry defect `|A - Aᵀ|`, for diagnostics.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col[k] as usize;
                let mut t = 0.0;
                for k2 in self.row_ptr[c]..self.row_ptr[c + 1] {
                    if self.col[k2] as usize == r {
                        t = self.val[k2];
                    }
                }
                defect = defect.max((self.val[k] - t).abs());
            }
        }
        defect
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthonormal kernel basis used to project iterates onto `ker(A)⊥`.
#[derive(Debug, Clone, Default)]
pub struct KernelBasis {
    vectors: Vec<Vec<f64>>,
}

impl KernelBasis {
    pub fn empty() -> Self {
        KernelBasis::default()
    }

    /// Gram–Schmidt append; near-dependent vectors are dropped.
    pub fn push(&mut self, mut v: Vec<f64>) {
        for q in &self.vectors {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
        let n = norm(&v);
        if n > 1e-10 {
            v.iter_mut().for_each(|x| *x /= n);
            self.vectors.push(v);
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Removes the kernel component of `v` in place.
    pub fn project_out(&self, v: &mut [f64]) {
        for q in &self.vectors {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }

    /// Largest |⟨qᵢ, v⟩| — the inconsistency of a right-hand side.
    pub fn max_component(&self, v: &[f64]) -> f64 {
        self.vectors
            .iter()
            .map(|q| dot(q, v).abs())
            .fold(0.0, f64::max)
    }
}

/// Statistics returned by the iterative solvers.
#[derive(Debug, Clone, Copy)]
pub struct IterStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive semidefinite
/// operator, restricted to the orthogonal complement of `kernel`.
///
/// The right-hand side is projected before the solve; callers that need to
/// certify consistency should check [`KernelBasis::max_component`] themselves.
pub fn pcg<F>(
    apply: F,
    b: &[f64],
    diag: Option<&[f64]>,
    kernel: &KernelBasis,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, IterStats), LinalgError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut r = b.to_vec();
    kernel.project_out(&mut r);
    let b_norm = norm(&r);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((
            x,
            IterStats {
                iterations: 0,
                rel_residual: 0.0,
            },
        ));
    }
    let precond = |r: &[f64], z: &mut Vec<f64>| {
        z.clear();
        match diag {
            Some(d) => z.extend(r.iter().zip(d).map(|(ri, di)| {
                if di.abs() > 0.0 {
                    ri / di
                } else {
                    *ri
                }
            })),
            None => z.extend_from_slice(r),
        }
    };
    let mut z = Vec::with_capacity(n);
    precond(&r, &mut z);
    kernel.project_out(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        kernel.project_out(&mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(LinalgError::Singular(format!(
                "conjugate gradients hit a non-positive curvature direction (pᵀAp = {pap:.3e})"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        kernel.project_out(&mut r);
        let res = norm(&r) / b_norm;
        if res <= tol {
            return Ok((
                x,
                IterStats {
                    iterations: it,
                    rel_residual: res,
                },
            ));
        }
        precond(&r, &mut z);
        kernel.project_out(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let mut rfinal = vec![0.0; n];
    apply(&x, &mut rfinal);
    for (ri, bi) in rfinal.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    kernel.project_out(&mut rfinal);
    Err(LinalgError::NotConverged {
        iterations: max_iter,
        residual: norm(&rfinal) / b_norm,
        tol,
    })
}

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator,
/// restricted to the orthogonal complement of `kernel`. The preconditioner is
/// given by its inverse action `m_inv` and must be positive definite on the
/// complement.
pub fn minres<F, M>(
    apply: F,
    m_inv: M,
    b: &[f64],
    kernel: &KernelBasis,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, IterStats), LinalgError>
where
    F: Fn(&[f64], &mut [f64]),
    M: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    kernel.project_out(&mut r1);
    let mut y = vec![0.0; n];
    m_inv(&r1, &mut y);
    kernel.project_out(&mut y);
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < 0.0 {
        return Err(LinalgError::Singular(
            "preconditioner is not positive definite".into(),
        ));
    }
    let beta1 = beta1_sq.sqrt();
    if beta1 == 0.0 {
        return Ok((
            x,
            IterStats {
                iterations: 0,
                rel_residual: 0.0,
            },
        ));
    }

    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0f64, beta1);
    let (mut dbar, mut epsln) = (0.0f64, 0.0f64);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];

    for it in 1..=max_iter {
        // Lanczos step
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi / beta;
        }
        apply(&v, &mut av);
        kernel.project_out(&mut av);
        if it >= 2 {
            let c = beta / oldb;
            for (a, r) in av.iter_mut().zip(&r1) {
                *a -= c * r;
            }
        }
        let alfa = dot(&v, &av);
        let c = alfa / beta;
        for (a, r) in av.iter_mut().zip(&r2) {
            *a -= c * r;
        }
        r1.copy_from_slice(&r2);
        r2.copy_from_slice(&av);
        m_inv(&r2, &mut y);
        kernel.project_out(&mut y);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(LinalgError::Singular(
                "preconditioner is not positive definite".into(),
            ));
        }
        beta = beta_sq.sqrt();

        // Plane rotations of the tridiagonal factorization
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        // Solution update
        let denom = 1.0 / gamma;
        std::mem::swap(&mut w2, &mut w);
        // now w2 holds previous w; old w2 is in w and will be overwritten
        for i in 0..n {
            let w1i = w[i]; // w from two iterations ago
            w[i] = (v[i] - oldeps * w1i - delta * w2[i]) * denom;
        }
        axpy(phi, &w, &mut x);

        if phibar / beta1 <= tol {
            return Ok((
                x,
                IterStats {
                    iterations: it,
                    rel_residual: phibar / beta1,
                },
            ));
        }
    }
    Err(LinalgError::NotConverged {
        iterations: max_iter,
        residual: phibar / beta1,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Parallelism;
    use approx::assert_relative_eq;

    fn laplacian_1d(n: usize) -> Csr {
        // periodic 1D Laplacian: singular with constant kernel
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 2.0);
            t.push(i, (i + 1) % n, -1.0);
            t.push(i, (i + n - 1) % n, -1.0);
        }
        t.into_csr()
    }

    #[test]
    fn csr_accumulates_duplicates() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 0, -1.0);
        let a = t.into_csr();
        assert_eq!(a.nnz(), 2);
        let mut y = vec![0.0; 2];
        a.mul(&[1.0, 1.0], &mut y, Parallelism::Sequential);
        assert_eq!(y, vec![3.0, -1.0]);
    }

    #[test]
    fn parallel_and_sequential_matvec_agree() {
        let a = laplacian_1d(101);
        let x: Vec<f64> = (0..101).map(|i| (i as f64).sin()).collect();
        let mut y1 = vec![0.0; 101];
        let mut y2 = vec![0.0; 101];
        a.mul(&x, &mut y1, Parallelism::Sequential);
        a.mul(&x, &mut y2, Parallelism::Parallel);
        assert_eq!(y1, y2);
    }

    #[test]
    fn cg_solves_singular_consistent_system() {
        let n = 64;
        let a = laplacian_1d(n);
        let mut kernel = KernelBasis::empty();
        kernel.push(vec![1.0; n]);
        let b: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        let diag = a.diagonal();
        let (x, stats) = pcg(
            |p, ap| a.mul(p, ap, Parallelism::Sequential),
            &b,
            Some(&diag),
            &kernel,
            1e-12,
            1000,
        )
        .unwrap();
        let mut ax = vec![0.0; n];
        a.mul(&x, &mut ax, Parallelism::Sequential);
        for (axi, bi) in ax.iter().zip(&b) {
            assert_relative_eq!(axi, bi, epsilon = 1e-9);
        }
        assert!(stats.rel_residual <= 1e-12);
        // solution stays orthogonal to the kernel
        assert!(kernel.max_component(&x) < 1e-10);
    }

    #[test]
    fn minres_solves_saddle_point_system() {
        // [[L, c],[cᵀ, 0]] with L SPD tridiagonal and c a coupling vector
        let n = 20;
        let m = n + 1;
        let mut t = Triplets::new(m);
        for i in 0..n {
            t.push(i, i, 4.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
            let c = 1.0 + i as f64 / n as f64;
            t.push(i, n, c);
            t.push(n, i, c);
        }
        let a = t.into_csr();
        assert_eq!(a.symmetry_defect(), 0.0);
        let b: Vec<f64> = (0..m).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        let (x, _) = minres(
            |p, ap| a.mul(p, ap, Parallelism::Sequential),
            |r, z| z.copy_from_slice(r),
            &b,
            &KernelBasis::empty(),
            1e-12,
            10_000,
        )
        .unwrap();
        let mut ax = vec![0.0; m];
        a.mul(&x, &mut ax, Parallelism::Sequential);
        for (axi, bi) in ax.iter().zip(&b) {
            assert_relative_eq!(axi, bi, epsilon = 1e-8);
        }
    }

    #[test]
    fn cg_reports_nonconvergence() {
        let n = 32;
        let a = laplacian_1d(n);
        let mut kernel = KernelBasis::empty();
        kernel.push(vec![1.0; n]);
        let b: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let err = pcg(
            |p, ap| a.mul(p, ap, Parallelism::Sequential),
            &b,
            None,
            &kernel,
            1e-14,
            2,
        )
        .unwrap_err();
        assert!(matches!(err, LinalgError::NotConverged { .. }));
    }

    #[test]
    fn kernel_basis_orthonormalizes() {
        let mut k = KernelBasis::empty();
        k.push(vec![1.0, 1.0, 0.0]);
        k.push(vec![1.0, 0.0, 1.0]);
        k.push(vec![0.0, 1.0, -1.0]); // dependent on the first two
        assert_eq!(k.dim(), 2);
        let mut v = vec![3.0, 1.0, 2.0];
        k.project_out(&mut v);
        for q in k.vectors() {
            assert!(dot(q, &v).abs() < 1e-12);
        }
    }
}
