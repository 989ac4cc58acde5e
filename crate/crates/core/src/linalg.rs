//! Dense complex linear algebra helpers shared by every module.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>`. The heavy lifting
//! (Schur form, Hermitian eigensolver, SVD, LU) comes from nalgebra; this file
//! adds the pieces nalgebra does not ship: reordering of a complex Schur form,
//! Kronecker products, block assembly and a few residual measures.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

/// Shorthand for a complex scalar.
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c64(x, 0.0))
}

/// Real part of a matrix whose imaginary part is known to be negligible.
pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn max_imag(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn rkron(a: &RMat, b: &RMat) -> RMat {
    real_part(&kron(&to_complex(a), &to_complex(b)))
}

/// Assemble `[[a, b], [c, d]]`.
pub fn block2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let (r0, c0) = a.shape();
    let (r1, c1) = d.shape();
    let mut out = CMat::zeros(r0 + r1, c0 + c1);
    out.view_mut((0, 0), (r0, c0)).copy_from(a);
    out.view_mut((0, c0), (r0, c1)).copy_from(b);
    out.view_mut((r0, 0), (r1, c0)).copy_from(c);
    out.view_mut((r0, c0), (r1, c1)).copy_from(d);
    out
}

pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let z_ab = CMat::zeros(a.nrows(), b.ncols());
    let z_ba = CMat::zeros(b.nrows(), a.ncols());
    block2(a, &z_ab, &z_ba, b)
}

pub fn rdirect_sum(a: &RMat, b: &RMat) -> RMat {
    real_part(&direct_sum(&to_complex(a), &to_complex(b)))
}

/// Horizontal concatenation of column blocks with equal row count.
pub fn hcat(blocks: &[CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

pub fn rhcat(blocks: &[RMat]) -> RMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Frobenius norm of `a - b`.
pub fn dist(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

/// Frobenius distance scaled by the size of the reference matrix (at least one).
pub fn rel_dist(a: &CMat, b: &CMat) -> f64 {
    dist(a, b) / b.norm().max(1.0)
}

/// Singular values, largest first.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

pub fn smallest_singular_value(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Inverse via LU; `None` if the smallest singular value falls below `sv_min`
/// relative to the largest.
pub fn inverse_checked(m: &CMat, sv_min: f64) -> Option<CMat> {
    let sv = singular_values(m);
    let hi = sv.first().copied().unwrap_or(0.0);
    let lo = sv.last().copied().unwrap_or(0.0);
    if hi == 0.0 || lo < sv_min * hi.max(1.0) {
        return None;
    }
    m.clone().lu().try_inverse()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(h: &CMat) -> (Vec<f64>, CMat) {
    let sym = (h + h.adjoint()) * c64(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eig(s: &RMat) -> (Vec<f64>, RMat) {
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = RMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Counts of (positive, negative, near-zero) eigenvalues of a Hermitian matrix.
pub fn hermitian_inertia(h: &CMat, tol: f64) -> (usize, usize, usize) {
    let (vals, _) = hermitian_eig(h);
    let mut out = (0, 0, 0);
    for v in vals {
        if v > tol {
            out.0 += 1;
        } else if v < -tol {
            out.1 += 1;
        } else {
            out.2 += 1;
        }
    }
    out
}

/// Complex Schur form `M = Q T Q*` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: CMat,
    pub t: CMat,
}

impl SchurForm {
    /// Returns `None` when the QR iteration does not converge.
    pub fn new(m: &CMat) -> Option<Self> {
        let n = m.nrows();
        if n == 0 {
            return Some(Self { q: CMat::zeros(0, 0), t: CMat::zeros(0, 0) });
        }
        let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000 * n)?;
        let (q, mut t) = schur.unpack();
        for i in 0..n {
            for j in 0..i {
                t[(i, j)] = ZERO;
            }
        }
        Some(Self { q, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Swap diagonal entries `k` and `k + 1` with a unitary rotation.
    fn swap_adjacent(&mut self, k: usize) {
        let n = self.t.nrows();
        let a = self.t[(k, k)];
        let b = self.t[(k, k + 1)];
        let d = self.t[(k + 1, k + 1)];
        // Eigenvector of the 2x2 block for the eigenvalue `d`.
        let x0 = b;
        let x1 = d - a;
        let nrm = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
        if nrm == 0.0 {
            return;
        }
        let (g0, g1) = (x0 / nrm, x1 / nrm);
        // Columns of the rotation: (g0, g1) and (-conj(g1), conj(g0)).
        let rot = |u: Complex64, v: Complex64| (g0 * u + g1 * v, -g1.conj() * u + g0.conj() * v);
        // T <- G* T G; rows first (G* from the left).
        for j in 0..n {
            let (u, v) = (self.t[(k, j)], self.t[(k + 1, j)]);
            self.t[(k, j)] = g0.conj() * u + g1.conj() * v;
            self.t[(k + 1, j)] = -g1 * u + g0 * v;
        }
        for i in 0..n {
            let (u, v) = (self.t[(i, k)], self.t[(i, k + 1)]);
            let (nu, nv) = rot(u, v);
            self.t[(i, k)] = nu;
            self.t[(i, k + 1)] = nv;
        }
        for i in 0..n {
            let (u, v) = (self.q[(i, k)], self.q[(i, k + 1)]);
            let (nu, nv) = rot(u, v);
            self.q[(i, k)] = nu;
            self.q[(i, k + 1)] = nv;
        }
        self.t[(k + 1, k)] = ZERO;
        self.t[(k, k)] = d;
        self.t[(k + 1, k + 1)] = a;
    }

    /// Move the diagonal entries flagged by `select` to the leading block,
    /// preserving the relative order inside both groups. Returns the size
    /// of the leading block.
    pub fn reorder<F: Fn(Complex64) -> bool>(&mut self, select: F) -> usize {
        let mask: Vec<bool> = (0..self.t.nrows()).map(|i| select(self.t[(i, i)])).collect();
        self.reorder_mask(&mask)
    }

    /// Same as [`SchurForm::reorder`] with the selection given by position.
    pub fn reorder_mask(&mut self, mask: &[bool]) -> usize {
        let mut mask = mask.to_vec();
        let mut placed = 0;
        for i in 0..mask.len() {
            if mask[i] {
                let mut j = i;
                while j > placed {
                    self.swap_adjacent(j - 1);
                    mask.swap(j - 1, j);
                    j -= 1;
                }
                placed += 1;
            }
        }
        placed
    }

    /// Orthonormal basis of the invariant subspace of the selected eigenvalues.
    pub fn invariant_frame<F: Fn(Complex64) -> bool>(&self, select: F) -> CMat {
        let mut work = self.clone();
        let k = work.reorder(select);
        work.q.columns(0, k).into_owned()
    }
}

/// Modified Gram-Schmidt, run twice, dropping columns whose residual norm is
/// below `tol`. Columns are processed left to right.
pub fn orthonormalize(m: &CMat, tol: f64) -> CMat {
    let mut kept: Vec<DVector<Complex64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        let scale = v.norm().max(1.0);
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let nv = v.norm();
        if nv > tol * scale {
            kept.push(v / c64(nv, 0.0));
        }
    }
    let mut out = CMat::zeros(m.nrows(), kept.len());
    for (j, q) in kept.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Real counterpart of [`orthonormalize`].
pub fn orthonormalize_real(m: &RMat, tol: f64) -> RMat {
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        let scale = v.norm().max(1.0);
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        let nv = v.norm();
        if nv > tol * scale {
            kept.push(v / nv);
        }
    }
    let mut out = RMat::zeros(m.nrows(), kept.len());
    for (j, q) in kept.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Eigenvalues of a general square matrix via the Schur form.
pub fn eigenvalues(m: &CMat) -> Option<Vec<Complex64>> {
    SchurForm::new(m).map(|s| s.eigenvalues())
}
