//! Real orthogonal basis changes that bring fundamental, Real and chiral
//! symmetries into block normal form, and membership tests for the classical
//! groups they define.
//!
//! The building blocks are
//!
//! ```text
//! I = [[0, -1], [1, 0]],   K = [[0, 1], [1, 0]],   J = [[1, 0], [0, -1]],
//! C = [[1, -i], [1, i]] / sqrt 2,   R = [[1, 1], [1, -1]] / sqrt 2,
//! ```
//!
//! with square blocks of equal size, except for `J` whose two blocks may
//! differ. A [`NormalForm`] holds a real orthogonal `U` and the targets it
//! produces, so that `U^t J_F U` equals the target fundamental symmetry and
//! likewise for the Real and chiral symmetries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krein::{check_symmetries, KreinError, Sign, Symmetries};
use crate::linalg::{
    block2, c64, eye, hcat, hermitian_eig, inverse_checked, max_imag, orthonormalize_real, rdirect_sum, real_part,
    rhcat, rkron, symmetric_eig, to_complex, CMat, RMat, I_UNIT,
};
use crate::spectral::{cayley, symplectic_unit};
use crate::tolerance::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("blocks of sizes {n_plus} and {n_minus} must be equal")]
    OddDimension { n_plus: usize, n_minus: usize },
    #[error("inconsistent symmetry signs: {0}")]
    InconsistentSigns(String),
    #[error("sign pattern {0} is not covered by the triple normal forms")]
    UnsupportedSigns(String),
    #[error("no phase in {{1, i, -1, -i}} makes the transformed Real symmetry real")]
    NoRealPhase,
    #[error("reduced block is singular")]
    SingularBlock,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis change failed to be real (imaginary part {0:.3e})")]
    NotReal(f64),
    #[error(transparent)]
    Krein(#[from] KreinError),
}

/// Threshold for eigenvalue and residual tests on unit-size symmetry matrices.
const STRUCT_TOL: f64 = 1e-8;

/// `diag(1_p, -1_m)`.
pub fn j_form(n_plus: usize, n_minus: usize) -> RMat {
    let mut d = RMat::identity(n_plus + n_minus, n_plus + n_minus);
    for i in n_plus..n_plus + n_minus {
        d[(i, i)] = -1.0;
    }
    d
}

/// `[[0, -1], [1, 0]]` with `n x n` blocks.
pub fn i_form(n: usize) -> RMat {
    symplectic_unit(n)
}

/// `[[0, 1], [1, 0]]` with `n x n` blocks.
pub fn k_form(n: usize) -> RMat {
    let id = RMat::identity(n, n);
    let z = RMat::zeros(n, n);
    rblock2(&z, &id, &id, &z)
}

/// Rotation by a quarter of pi combined with a reflection, `R^t J R = K`.
pub fn reflection(n: usize) -> RMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let id = RMat::identity(n, n) * s;
    rblock2(&id, &id, &id, &(-&id))
}

fn rblock2(a: &RMat, b: &RMat, c: &RMat, d: &RMat) -> RMat {
    let (n, m) = (a.nrows(), a.ncols());
    let mut out = RMat::zeros(n + c.nrows(), m + b.ncols());
    out.view_mut((0, 0), (n, m)).copy_from(a);
    out.view_mut((0, m), (n, b.ncols())).copy_from(b);
    out.view_mut((n, 0), (c.nrows(), m)).copy_from(c);
    out.view_mut((n, m), (d.nrows(), d.ncols())).copy_from(d);
    out
}

/// The constant matrices built from `n x n` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalBlocks {
    pub i: RMat,
    pub j: RMat,
    pub k: RMat,
    pub c: CMat,
    pub r: RMat,
}

/// `I`, `J`, `K`, `C` and `R` with blocks of sizes `n_plus` and `n_minus`.
/// All but `J` need equal blocks; use [`j_form`] for unequal ones.
pub fn canonical_blocks(n_plus: usize, n_minus: usize) -> Result<CanonicalBlocks, NormalFormError> {
    if n_plus != n_minus {
        return Err(NormalFormError::OddDimension { n_plus, n_minus });
    }
    let n = n_plus;
    Ok(CanonicalBlocks { i: i_form(n), j: j_form(n, n), k: k_form(n), c: cayley(n), r: reflection(n) })
}

/// Which normal form a [`NormalForm`] realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalCase {
    Fundamental,
    /// Fundamental and Real symmetry of kind `(eta_F, eta_R, eta_FR)`.
    Pair(i32, i32, i32),
    /// Anticommuting triple with squares `(eta_F, eta_R, eta_C)`.
    Triple(i32, i32, i32),
}

/// Orthogonal basis change and the normal forms it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub u: RMat,
    pub target_f: RMat,
    pub target_r: Option<RMat>,
    pub target_c: Option<RMat>,
    pub case: NormalCase,
    /// Block sizes of the targets, in the order the case defines them.
    pub blocks: Vec<usize>,
}

impl NormalForm {
    /// Largest deviation of `U^t M U` from the targets and of `U` from
    /// orthogonality.
    pub fn residual(&self, j_f: &RMat, j_r: Option<&RMat>, j_c: Option<&RMat>) -> f64 {
        let n = self.u.nrows();
        let conj = |m: &RMat| self.u.transpose() * m * &self.u;
        let mut worst = (self.u.transpose() * &self.u - RMat::identity(n, n)).amax();
        worst = worst.max((conj(j_f) - &self.target_f).amax());
        if let (Some(m), Some(t)) = (j_r, &self.target_r) {
            worst = worst.max((conj(m) - t).amax());
        }
        if let (Some(m), Some(t)) = (j_c, &self.target_c) {
            worst = worst.max((conj(m) - t).amax());
        }
        worst
    }

    /// Inputs reconstructed as `U T U^t` from the targets.
    pub fn reconstruct(&self) -> (RMat, Option<RMat>, Option<RMat>) {
        let back = |t: &RMat| &self.u * t * self.u.transpose();
        (back(&self.target_f), self.target_r.as_ref().map(back), self.target_c.as_ref().map(back))
    }
}

/// Orthonormal real basis of the eigenspace of the symmetric matrix `m` for
/// the eigenvalue closest to `value`, restricted to the range of `within`.
fn eigenspace(m: &RMat, value: f64, within: &RMat) -> RMat {
    if within.ncols() == 0 {
        return RMat::zeros(m.nrows(), 0);
    }
    let restricted = within.transpose() * m * within;
    let (vals, vecs) = symmetric_eig(&restricted);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| (vals[i] - value).abs() < 0.5).collect();
    let mut out = RMat::zeros(m.nrows(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        out.set_column(dst, &(within * vecs.column(src)));
    }
    canonical_real_columns(out)
}

/// Basis-independent orthonormal basis of the range of `m` (orthonormal
/// columns). Gram-Schmidt runs over the columns of the orthogonal projector,
/// picking at each step the column with the largest residual (lowest index
/// on ties), so the result depends only on the subspace. Each vector has a
/// positive entry at its pivot, and coordinate subspaces give coordinate
/// vectors.
fn canonical_columns(m: CMat) -> CMat {
    let (n, k) = (m.nrows(), m.ncols());
    let projector = &m * m.adjoint();
    let mut basis: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let residuals: Vec<nalgebra::DVector<Complex64>> = (0..n)
            .map(|j| {
                let mut r = projector.column(j).into_owned();
                for b in &basis {
                    let overlap = b.dotc(&r);
                    r -= b * overlap;
                }
                r
            })
            .collect();
        let norms: Vec<f64> = residuals.iter().map(|r| r.norm()).collect();
        let top = norms.iter().cloned().fold(0.0, f64::max);
        let pivot = norms.iter().position(|x| *x > top - STRUCT_TOL).unwrap_or(0);
        let r = &residuals[pivot];
        let phase = if r[pivot].norm() > 0.0 { r[pivot].conj() / r[pivot].norm() } else { c64(1.0, 0.0) };
        basis.push(r * (phase / norms[pivot]));
    }
    let mut out = CMat::zeros(n, k);
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Real counterpart of [`canonical_columns`].
fn canonical_real_columns(m: RMat) -> RMat {
    real_part(&canonical_columns(to_complex(&m)))
}

fn sign_of(m: &RMat, what: &str) -> Result<Sign, NormalFormError> {
    Ok(Symmetries::new(m.clone())
        .map_err(|e| match e {
            KreinError::SymmetryViolated(s) => NormalFormError::InconsistentSigns(format!("{what}: {s}")),
            other => other.into(),
        })?
        .eta_f)
}

fn relation(a: &RMat, b: &RMat) -> Option<i32> {
    let (ab, ba) = (a * b, b * a);
    if (&ab - &ba).amax() < STRUCT_TOL {
        Some(1)
    } else if (&ab + &ba).amax() < STRUCT_TOL {
        Some(-1)
    } else {
        None
    }
}

fn check_square(m: &RMat) -> Result<(), NormalFormError> {
    if m.nrows() != m.ncols() {
        return Err(NormalFormError::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    Ok(())
}

fn same_dim(a: &RMat, b: &RMat) -> Result<(), NormalFormError> {
    if a.nrows() != b.nrows() {
        return Err(NormalFormError::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    check_square(b)
}

/// `V C` with `V = (conj v, v)`, which is real when `v` spans an eigenspace
/// whose conjugate is the complementary one.
fn cayley_realify(v: &CMat) -> Result<RMat, NormalFormError> {
    let vv = hcat(&[v.conjugate(), v.clone()]);
    let u = vv * cayley(v.ncols());
    let imag = max_imag(&u);
    if imag > STRUCT_TOL {
        return Err(NormalFormError::NotReal(imag));
    }
    Ok(real_part(&u))
}

/// Basis of the `+i` eigenspace of a real orthogonal `m` with `m^2 = -1`,
/// restricted to the range of `within`.
fn plus_i_space(m: &RMat, within: &CMat) -> CMat {
    let h = within.adjoint() * to_complex(m) * I_UNIT * within;
    let (vals, vecs) = hermitian_eig(&h);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < 0.0).collect();
    let mut out = CMat::zeros(m.nrows(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        out.set_column(dst, &(within * vecs.column(src)));
    }
    canonical_columns(out)
}

/// Normal form of a single fundamental symmetry: `J` with blocks the
/// dimensions of the eigenspaces for `eta_F = 1`, and `I` for `eta_F = -1`.
pub fn normalize_fundamental(j_f: &RMat) -> Result<NormalForm, NormalFormError> {
    check_square(j_f)?;
    let n = j_f.nrows();
    match sign_of(j_f, "fundamental symmetry")? {
        Sign::Plus => {
            let all = RMat::identity(n, n);
            let plus = eigenspace(j_f, 1.0, &all);
            let minus = eigenspace(j_f, -1.0, &all);
            let (a, b) = (plus.ncols(), minus.ncols());
            Ok(NormalForm {
                u: rhcat(&[plus, minus]),
                target_f: j_form(a, b),
                target_r: None,
                target_c: None,
                case: NormalCase::Fundamental,
                blocks: vec![a, b],
            })
        }
        Sign::Minus => {
            let v = plus_i_space(j_f, &eye(n));
            let half = v.ncols();
            Ok(NormalForm {
                u: cayley_realify(&v)?,
                target_f: i_form(half),
                target_r: None,
                target_c: None,
                case: NormalCase::Fundamental,
                blocks: vec![half],
            })
        }
    }
}

/// Simultaneous normal form of a fundamental symmetry and a Real symmetry
/// that commute or anticommute with it.
pub fn normalize_pair(j_f: &RMat, j_r: &RMat) -> Result<NormalForm, NormalFormError> {
    check_square(j_f)?;
    same_dim(j_f, j_r)?;
    let eta_f = sign_of(j_f, "fundamental symmetry")?.value();
    let eta_r = sign_of(j_r, "Real symmetry")?.value();
    let eta_fr = relation(j_f, j_r)
        .ok_or_else(|| NormalFormError::InconsistentSigns("symmetries neither commute nor anticommute".into()))?;
    let n = j_f.nrows();
    let all = RMat::identity(n, n);
    let case = NormalCase::Pair(eta_f, eta_r, eta_fr);
    let form = |u: RMat, f: RMat, r: RMat, blocks: Vec<usize>| NormalForm {
        u,
        target_f: f,
        target_r: Some(r),
        target_c: None,
        case,
        blocks,
    };
    match (eta_f, eta_r, eta_fr) {
        (1, 1, 1) => {
            let plus = eigenspace(j_f, 1.0, &all);
            let minus = eigenspace(j_f, -1.0, &all);
            let (pp, pm) = (eigenspace(j_r, 1.0, &plus), eigenspace(j_r, -1.0, &plus));
            let (mp, mm) = (eigenspace(j_r, 1.0, &minus), eigenspace(j_r, -1.0, &minus));
            let sizes = vec![pp.ncols(), pm.ncols(), mp.ncols(), mm.ncols()];
            let target_r = rdirect_sum(&j_form(sizes[0], sizes[1]), &j_form(sizes[2], sizes[3]));
            let target_f = j_form(sizes[0] + sizes[1], sizes[2] + sizes[3]);
            Ok(form(rhcat(&[pp, pm, mp, mm]), target_f, target_r, sizes))
        }
        (1, -1, 1) => {
            let (u, a, b) = commuting_odd_pair(j_f, j_r)?;
            Ok(form(u, j_form(2 * a, 2 * b), rdirect_sum(&i_form(a), &i_form(b)), vec![a, b]))
        }
        (-1, 1, 1) => {
            // Exchange the roles, then interleave the halves so that the
            // fundamental symmetry becomes a single `I`.
            let (u, a, b) = commuting_odd_pair(j_r, j_f)?;
            let cols = |start: usize, len: usize| u.columns(start, len).into_owned();
            let u = rhcat(&[cols(0, a), cols(2 * a, b), cols(a, a), cols(2 * a + b, b)]);
            let jp = j_form(a, b);
            Ok(form(u, i_form(a + b), rdirect_sum(&jp, &jp), vec![a, b]))
        }
        (-1, -1, 1) => {
            let e_i = plus_i_space(j_f, &eye(n));
            let h = e_i.adjoint() * to_complex(j_r) * I_UNIT * &e_i;
            let (vals, vecs) = hermitian_eig(&h);
            let s_plus = vals.iter().filter(|v| **v < 0.0).count();
            let s_minus = vals.len() - s_plus;
            let v = canonical_columns_by_groups(&e_i * vecs, s_plus);
            let jp = j_form(s_plus, s_minus);
            let z = RMat::zeros(jp.nrows(), jp.nrows());
            let target_r = rblock2(&z, &(-&jp), &jp, &z);
            Ok(form(cayley_realify(&v)?, i_form(s_plus + s_minus), target_r, vec![s_plus, s_minus]))
        }
        (1, 1, -1) | (1, -1, -1) => {
            let u = eigenspace(j_f, 1.0, &all);
            let m = u.ncols();
            if 2 * m != n {
                return Err(NormalFormError::OddDimension { n_plus: m, n_minus: n - m });
            }
            let ju = j_r * &u;
            let target_r = if eta_r == 1 { k_form(m) } else { i_form(m) };
            Ok(form(rhcat(&[u, ju]), j_form(m, m), target_r, vec![m]))
        }
        (-1, 1, -1) => {
            let u = eigenspace(j_r, 1.0, &all);
            let m = u.ncols();
            if 2 * m != n {
                return Err(NormalFormError::OddDimension { n_plus: m, n_minus: n - m });
            }
            let fu = j_f * &u;
            Ok(form(rhcat(&[u, fu]), i_form(m), j_form(m, m), vec![m]))
        }
        (-1, -1, -1) => {
            let groups =
                orbit_basis(RMat::identity(n, n), |u| vec![u.clone(), j_r * u, j_f * u, j_f * (j_r * u)], None)?;
            let m = groups[0].ncols();
            let im = i_form(m);
            Ok(form(rhcat(&groups), i_form(2 * m), rdirect_sum(&im, &(-&im)), vec![m]))
        }
        _ => unreachable!("signs are +-1"),
    }
}

/// Orders the columns of `v` canonically within the first `split` columns
/// and within the rest, keeping the two groups apart.
fn canonical_columns_by_groups(v: CMat, split: usize) -> CMat {
    let first = canonical_columns(v.columns(0, split).into_owned());
    let second = canonical_columns(v.columns(split, v.ncols() - split).into_owned());
    hcat(&[first, second])
}

/// Case `(1, -1, 1)`: `U` with `U^t J_F U = J(2a, 2b)` and
/// `U^t J_R U = I(a) + I(b)`.
fn commuting_odd_pair(j_f: &RMat, j_r: &RMat) -> Result<(RMat, usize, usize), NormalFormError> {
    let n = j_f.nrows();
    let all = RMat::identity(n, n);
    let mut parts = Vec::new();
    let mut halves = Vec::new();
    for value in [1.0, -1.0] {
        let space = eigenspace(j_f, value, &all);
        if space.ncols() == 0 {
            parts.push(space);
            halves.push(0);
            continue;
        }
        let restricted = space.transpose() * j_r * &space;
        let inner = normalize_fundamental(&restricted)?;
        halves.push(inner.blocks[0]);
        parts.push(space * inner.u);
    }
    Ok((rhcat(&parts), halves[0], halves[1]))
}

/// Orthonormal groups `(g_1(u), g_2(u), ...)` built from unit vectors `u`
/// chosen one at a time in the part of `start` orthogonal to all earlier
/// orbits. When `seed_space` is given, `u` is taken from it (intersected with
/// that remainder); otherwise any vector of the remainder is used.
fn orbit_basis(
    start: RMat,
    orbit: impl Fn(&RMat) -> Vec<RMat>,
    seed_space: Option<&dyn Fn(&RMat) -> RMat>,
) -> Result<Vec<RMat>, NormalFormError> {
    let mut complement = start;
    let mut groups: Vec<Vec<RMat>> = Vec::new();
    while complement.ncols() > 0 {
        let candidates = match seed_space {
            Some(f) => f(&complement),
            None => complement.clone(),
        };
        if candidates.ncols() == 0 {
            return Err(NormalFormError::InconsistentSigns("orbit construction ran out of seed vectors".into()));
        }
        let u = candidates.columns(0, 1).into_owned();
        let members = orbit(&u);
        let block = rhcat(&members);
        let gram = block.transpose() * &block;
        if (&gram - RMat::identity(members.len(), members.len())).amax() > STRUCT_TOL {
            return Err(NormalFormError::InconsistentSigns("orbit vectors are not orthonormal".into()));
        }
        let projected = &complement - &block * (block.transpose() * &complement);
        complement = orthonormalize_real(&projected, 1e-6);
        if groups.is_empty() {
            groups = members.into_iter().map(|m| vec![m]).collect();
        } else {
            for (g, m) in groups.iter_mut().zip(members) {
                g.push(m);
            }
        }
    }
    Ok(groups.into_iter().map(|g| rhcat(&g)).collect())
}

/// Simultaneous normal form of three pairwise anticommuting real unitaries.
///
/// Covered sign patterns `(eta_F, eta_R, eta_C)` are `(-1, -1, -1)`,
/// `(1, -1, -1)`, `(1, 1, -1)` and `(1, 1, 1)`. For `(-1, -1, -1)` and
/// `(1, 1, -1)` the result splits along the eigenvalues `+1` and `-1` of the
/// central element `J_F J_R J_C`, whose multiplicities (divided by the orbit
/// size) are reported in `blocks`.
pub fn normalize_triple(j_f: &RMat, j_r: &RMat, j_c: &RMat) -> Result<NormalForm, NormalFormError> {
    check_square(j_f)?;
    same_dim(j_f, j_r)?;
    same_dim(j_f, j_c)?;
    let signs = (
        sign_of(j_f, "fundamental symmetry")?.value(),
        sign_of(j_r, "Real symmetry")?.value(),
        sign_of(j_c, "chiral symmetry")?.value(),
    );
    for (a, b, what) in [(j_f, j_r, "J_F, J_R"), (j_f, j_c, "J_F, J_C"), (j_r, j_c, "J_R, J_C")] {
        if relation(a, b) != Some(-1) {
            return Err(NormalFormError::InconsistentSigns(format!("{what} do not anticommute")));
        }
    }
    let n = j_f.nrows();
    let case = NormalCase::Triple(signs.0, signs.1, signs.2);
    let i2 = i_form(1);
    let j2 = j_form(1, 1);
    let k2 = k_form(1);
    let one2 = RMat::identity(2, 2);
    // Pattern `a (x) b` with `m x m` blocks inside.
    let tensor = |a: &RMat, b: &RMat, m: usize| rkron(&rkron(a, b), &RMat::identity(m, m));
    let central = j_f * j_r * j_c;
    match signs {
        (-1, -1, -1) => {
            let mut us = Vec::new();
            let mut sizes = Vec::new();
            for sigma in [1.0, -1.0] {
                let space = eigenspace(&central, sigma, &RMat::identity(n, n));
                let groups = if space.ncols() == 0 {
                    vec![RMat::zeros(n, 0); 4]
                } else {
                    orbit_basis(space, |u| vec![u.clone(), j_r * u, j_f * u, j_c * u], None)?
                };
                sizes.push(groups[0].ncols());
                us.push(rhcat(&groups));
            }
            let (a, b) = (sizes[0], sizes[1]);
            Ok(NormalForm {
                u: rhcat(&us),
                target_f: rdirect_sum(&tensor(&i2, &j2, a), &tensor(&i2, &one2, b)),
                target_r: Some(rdirect_sum(&tensor(&one2, &i2, a), &tensor(&j2, &i2, b))),
                target_c: Some(rdirect_sum(&tensor(&i2, &k2, a), &tensor(&k2, &i2, b))),
                case,
                blocks: sizes,
            })
        }
        (1, -1, -1) | (1, 1, 1) => {
            let seed = |c: &RMat| eigenspace(j_f, 1.0, c);
            let groups = if signs.1 == -1 {
                orbit_basis(RMat::identity(n, n), |u| vec![u.clone(), j_r * (j_c * u), j_c * u, j_r * u], Some(&seed))?
            } else {
                orbit_basis(RMat::identity(n, n), |u| vec![u.clone(), j_r * (j_c * u), j_r * u, j_c * u], Some(&seed))?
            };
            let m = groups[0].ncols();
            let (target_r, target_c) = if signs.1 == -1 {
                (tensor(&k2, &i2, m), tensor(&i2, &one2, m))
            } else {
                (tensor(&k2, &one2, m), tensor(&i2, &i2, m))
            };
            Ok(NormalForm {
                u: rhcat(&groups),
                target_f: tensor(&j2, &one2, m),
                target_r: Some(target_r),
                target_c: Some(target_c),
                case,
                blocks: vec![m],
            })
        }
        (1, 1, -1) => {
            let mut parts = Vec::new();
            let mut sizes = Vec::new();
            for sigma in [1.0, -1.0] {
                let space = eigenspace(&central, sigma, &RMat::identity(n, n));
                let u = eigenspace(j_f, 1.0, &space);
                sizes.push(u.ncols());
                let ju = j_r * &u;
                parts.push(rhcat(&[u, ju]));
            }
            let (a, b) = (sizes[0], sizes[1]);
            Ok(NormalForm {
                u: rhcat(&parts),
                target_f: rdirect_sum(&j_form(a, a), &j_form(b, b)),
                target_r: Some(rdirect_sum(&k_form(a), &k_form(b))),
                target_c: Some(rdirect_sum(&i_form(a), &(-i_form(b)))),
                case,
                blocks: sizes,
            })
        }
        (a, b, c) => Err(NormalFormError::UnsupportedSigns(format!("({a},{b},{c})"))),
    }
}

/// Fundamental and Real symmetries after a Cayley transform,
/// `J_F' = -i C* J_F C` and `J_R' = kappa C^t J_R C`, with the phase `kappa`
/// from `{1, i, -1, -i}` that makes `J_R'` real. The commutation sign between
/// the two flips.
pub fn cayley_switch(j_f: &RMat, j_r: &RMat) -> Result<(RMat, RMat, Complex64), NormalFormError> {
    check_square(j_f)?;
    same_dim(j_f, j_r)?;
    let n = j_f.nrows();
    if !n.is_multiple_of(2) {
        return Err(NormalFormError::OddDimension { n_plus: n / 2 + 1, n_minus: n / 2 });
    }
    let c = cayley(n / 2);
    let f = c.adjoint() * to_complex(j_f) * &c * (-I_UNIT);
    if max_imag(&f) > STRUCT_TOL {
        return Err(NormalFormError::NotReal(max_imag(&f)));
    }
    let r = c.transpose() * to_complex(j_r) * &c;
    for kappa in [c64(1.0, 0.0), I_UNIT, c64(-1.0, 0.0), -I_UNIT] {
        let candidate = &r * kappa;
        if max_imag(&candidate) < STRUCT_TOL {
            return Ok((real_part(&f), real_part(&candidate), kappa));
        }
    }
    Err(NormalFormError::NoRealPhase)
}

/// Reduced fundamental symmetries of a chiral reduction.
#[derive(Debug, Clone, PartialEq)]
pub enum ReducedForms {
    /// `J_F` commutes with `J_C`: `V* J_F V = diag(first, second)`.
    Commuting { first: CMat, second: CMat },
    /// `J_F` anticommutes with `J_C`: `V* J_F V = [[0, eta_F v], [v*, 0]]`.
    AntiCommuting { coupling: CMat, eta_f: i32 },
}

/// Block decomposition of a J-unitary with chiral symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralReduction {
    /// Unitary with `V* J_C V = sqrt(eta_C) J`.
    pub basis: CMat,
    pub first: CMat,
    pub second: CMat,
    pub forms: ReducedForms,
}

impl ChiralReduction {
    /// `V diag(first, second) V*`.
    pub fn assemble(&self) -> CMat {
        let (a, b) = (self.first.nrows(), self.second.nrows());
        let z1 = CMat::zeros(a, b);
        let z2 = CMat::zeros(b, a);
        &self.basis * block2(&self.first, &z1, &z2, &self.second) * self.basis.adjoint()
    }
}

/// Splits `t` along the eigenspaces of its chiral symmetry.
///
/// For anticommuting `J_F` and `J_C` the second block is determined by the
/// first, `second = v* (first*)^{-1} v`, and this relation is checked.
pub fn chiral_reduce(t: &CMat, j_f: &RMat, j_c: &RMat, tol: &Tolerances) -> Result<ChiralReduction, NormalFormError> {
    let sym = Symmetries::new(j_f.clone())?.with_chiral(j_c.clone())?;
    let report = check_symmetries(t, &sym, tol)?;
    if !report.all_hold() {
        return Err(KreinError::SymmetryViolated("input is not a chiral J-unitary".into()).into());
    }
    let chiral = sym.chiral.as_ref().expect("chiral symmetry was set");
    let n = t.nrows();
    let h = match chiral.eta_c {
        Sign::Plus => to_complex(j_c),
        Sign::Minus => to_complex(j_c) * (-I_UNIT),
    };
    let (vals, vecs) = hermitian_eig(&h);
    let a = vals.iter().filter(|v| **v > 0.0).count();
    // Eigenvalue +1 first.
    let plus = canonical_columns(vecs.columns(n - a, a).into_owned());
    let minus = canonical_columns(vecs.columns(0, n - a).into_owned());
    let basis = hcat(&[plus, minus]);
    let m = basis.adjoint() * t * &basis;
    let first = m.view((0, 0), (a, a)).into_owned();
    let second = m.view((a, a), (n - a, n - a)).into_owned();
    let f = basis.adjoint() * to_complex(j_f) * &basis;
    let forms = match chiral.eta_fc {
        Sign::Plus => ReducedForms::Commuting {
            first: f.view((0, 0), (a, a)).into_owned(),
            second: f.view((a, a), (n - a, n - a)).into_owned(),
        },
        Sign::Minus => {
            if 2 * a != n {
                return Err(NormalFormError::OddDimension { n_plus: a, n_minus: n - a });
            }
            let coupling = f.view((a, 0), (a, a)).adjoint();
            let first_inv = inverse_checked(&first.adjoint(), tol.sv_min).ok_or(NormalFormError::SingularBlock)?;
            let predicted = coupling.adjoint() * first_inv * &coupling;
            if (&predicted - &second).norm() > 1e-8 * second.norm().max(1.0) {
                return Err(
                    KreinError::SymmetryViolated("second chiral block is not the dual of the first".into()).into()
                );
            }
            ReducedForms::AntiCommuting { coupling, eta_f: sym.eta_f.value() }
        }
    };
    Ok(ChiralReduction { basis, first, second, forms })
}

/// Classical groups realized as J-unitaries with Real and chiral symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "group", rename_all = "snake_case")]
pub enum ClassicalGroup {
    /// `U(N, M)`: fundamental symmetry `J`.
    Unitary { n: usize, m: usize },
    /// `O(N, M)`: `J` and Real symmetry `1`.
    Orthogonal { n: usize, m: usize },
    /// `SP(2N, R)`: `I` and `1`.
    RealSymplectic { n: usize },
    /// `SO*(2N)`: `I` and `I`.
    SoStar { n: usize },
    /// `SP(2N, 2N)`: `J (x) 1` and `J (x) I`.
    SymplecticUnitary { n: usize },
    /// `GL(N, R)`: `I`, `1` and chiral `J`.
    RealGeneral { n: usize },
    /// `O(N, C)`: `I`, `I` and chiral `J`.
    ComplexOrthogonal { n: usize },
    /// `U*(2N)`: `K (x) 1`, `J (x) I` and chiral `I (x) 1`.
    UStar { n: usize },
    /// `SP(2N, C)`: `J (x) 1`, `I (x) I` and chiral `K (x) 1`.
    ComplexSymplectic { n: usize },
}

impl ClassicalGroup {
    /// Matrix size of the group elements.
    pub fn dim(&self) -> usize {
        match *self {
            Self::Unitary { n, m } | Self::Orthogonal { n, m } => n + m,
            Self::RealSymplectic { n }
            | Self::SoStar { n }
            | Self::RealGeneral { n }
            | Self::ComplexOrthogonal { n } => 2 * n,
            Self::SymplecticUnitary { n } | Self::UStar { n } | Self::ComplexSymplectic { n } => 4 * n,
        }
    }

    /// The defining symmetries.
    pub fn symmetries(&self) -> Symmetries {
        let one = |k: usize| RMat::identity(k, k);
        let (f, r, c): (RMat, Option<RMat>, Option<RMat>) = match *self {
            Self::Unitary { n, m } => (j_form(n, m), None, None),
            Self::Orthogonal { n, m } => (j_form(n, m), Some(one(n + m)), None),
            Self::RealSymplectic { n } => (i_form(n), Some(one(2 * n)), None),
            Self::SoStar { n } => (i_form(n), Some(i_form(n)), None),
            Self::SymplecticUnitary { n } => {
                (rkron(&j_form(n, n), &one(2)), Some(rkron(&j_form(n, n), &i_form(1))), None)
            }
            Self::RealGeneral { n } => (i_form(n), Some(one(2 * n)), Some(j_form(n, n))),
            Self::ComplexOrthogonal { n } => (i_form(n), Some(i_form(n)), Some(j_form(n, n))),
            Self::UStar { n } => {
                (rkron(&k_form(n), &one(2)), Some(rkron(&j_form(n, n), &i_form(1))), Some(rkron(&i_form(n), &one(2))))
            }
            Self::ComplexSymplectic { n } => {
                (rkron(&j_form(n, n), &one(2)), Some(rkron(&i_form(n), &i_form(1))), Some(rkron(&k_form(n), &one(2))))
            }
        };
        let mut sym = Symmetries::new(f).expect("normal forms are fundamental symmetries");
        if let Some(r) = r {
            sym = sym.with_real(r).expect("normal forms are Real symmetries");
        }
        if let Some(c) = c {
            sym = sym.with_chiral(c).expect("normal forms are chiral symmetries");
        }
        sym
    }
}

impl std::str::FromStr for ClassicalGroup {
    type Err = String;

    /// Parses labels such as `U(2,1)`, `O(1,1)`, `SP(4,R)`, `SO*(4)`,
    /// `SP(2,2)`, `GL(3,R)`, `O(2,C)`, `U*(4)` and `SP(4,C)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_uppercase();
        let open = s.find('(').ok_or_else(|| format!("malformed group label {s}"))?;
        let name = &s[..open];
        let args: Vec<&str> = s[open + 1..].trim_end_matches(')').split(',').collect();
        let num = |x: &str| x.parse::<usize>().map_err(|_| format!("bad size {x} in {s}"));
        let half = |x: &str| -> Result<usize, String> {
            let v = num(x)?;
            if v % 2 == 0 && v > 0 {
                Ok(v / 2)
            } else {
                Err(format!("size {v} in {s} must be even"))
            }
        };
        match (name, args.as_slice()) {
            ("U", [a, b]) => Ok(Self::Unitary { n: num(a)?, m: num(b)? }),
            ("O", [a, "C"]) => Ok(Self::ComplexOrthogonal { n: num(a)? }),
            ("O", [a, b]) => Ok(Self::Orthogonal { n: num(a)?, m: num(b)? }),
            ("SP", [a, "R"]) => Ok(Self::RealSymplectic { n: half(a)? }),
            ("SP", [a, "C"]) => Ok(Self::ComplexSymplectic { n: half(a)? }),
            ("SP", [a, b]) if a == b => Ok(Self::SymplecticUnitary { n: half(a)? }),
            ("SO*", [a]) => Ok(Self::SoStar { n: half(a)? }),
            ("GL", [a, "R"]) => Ok(Self::RealGeneral { n: num(a)? }),
            ("U*", [a]) => Ok(Self::UStar { n: half(a)? }),
            _ => Err(format!("unknown group label {s}")),
        }
    }
}

/// Whether `t` is J-unitary with the Real and chiral symmetries of `group`.
pub fn group_membership(t: &CMat, group: ClassicalGroup, tol: &Tolerances) -> Result<bool, NormalFormError> {
    if t.nrows() != group.dim() || t.ncols() != group.dim() {
        return Err(NormalFormError::DimensionMismatch { expected: group.dim(), found: t.nrows() });
    }
    match check_symmetries(t, &group.symmetries(), tol) {
        Ok(report) => Ok(report.all_hold()),
        Err(KreinError::SingularInput) => Ok(false),
        Err(e) => Err(e.into()),
    }
}

/// Lifts a `k x k` matrix `t` to the chiral J-unitary `diag(t, (t*)^{-1})` for
/// the fundamental symmetry `I` and chiral symmetry `J`.
pub fn chiral_embedding(t: &CMat) -> Option<CMat> {
    let k = t.nrows();
    let dual = inverse_checked(&t.adjoint(), 1e-12)?;
    Some(block2(t, &CMat::zeros(k, k), &CMat::zeros(k, k), &dual))
}
