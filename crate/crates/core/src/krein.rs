//! Krein inertia of unimodular eigenvalues and the invariants built from it.
//!
//! A fundamental symmetry is a real orthogonal matrix `J_F` with
//! `J_F^2 = eta_F`. It defines the Hermitian form `sqrt(eta_F) J_F`, which is
//! `J_F` itself for `eta_F = 1` and `i J_F` for `eta_F = -1`. A matrix `T` is
//! `J_F`-unitary when `T* J_F T = J_F`. For an isolated group of eigenvalues
//! of `T` on the unit circle the form is non-degenerate on the associated
//! spectral subspace, and its signature `(nu_plus, nu_minus)` is the Krein
//! inertia of the group.
//!
//! Optional extra structure:
//!
//! * a Real symmetry `J_R` with `J_R* conj(T) J_R = T`, `J_R^2 = eta_R` and
//!   `J_F J_R = eta_FR J_R J_F`;
//! * a chiral symmetry `J_C` with `J_C* T J_C = T`.
//!
//! Which combinations of inertias are homotopy invariant depends on the triple
//! `(eta_F, eta_R, eta_FR)`; see [`invariants_for_kind`].

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c64, hermitian_eig, to_complex, CMat, RMat};
use crate::spectral::{decompose, riesz_projection, unit_circle_spectrum, SpectralError};
use crate::tolerance::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KreinError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input matrix is singular")]
    SingularInput,
    #[error("Krein form is degenerate on the spectral subspace (smallest |eigenvalue| {0:.3e})")]
    DegenerateForm(f64),
    #[error("eigenvalue cluster is not isolated: {0}")]
    NotIsolated(String),
    #[error("symmetry violated: {0}")]
    SymmetryViolated(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// A sign `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i32) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// The triple `(eta_F, eta_R, eta_FR)` of a fundamental plus Real symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetryKind {
    pub eta_f: Sign,
    pub eta_r: Sign,
    pub eta_fr: Sign,
}

impl SymmetryKind {
    pub fn new(eta_f: i32, eta_r: i32, eta_fr: i32) -> Option<Self> {
        Some(Self {
            eta_f: Sign::from_value(eta_f)?,
            eta_r: Sign::from_value(eta_r)?,
            eta_fr: Sign::from_value(eta_fr)?,
        })
    }

    pub fn all() -> [SymmetryKind; 8] {
        let mut out = [SymmetryKind { eta_f: Sign::Plus, eta_r: Sign::Plus, eta_fr: Sign::Plus }; 8];
        let signs = [Sign::Plus, Sign::Minus];
        let mut i = 0;
        for &eta_f in &signs {
            for &eta_r in &signs {
                for &eta_fr in &signs {
                    out[i] = SymmetryKind { eta_f, eta_r, eta_fr };
                    i += 1;
                }
            }
        }
        out
    }

    /// Whether inertias at `lambda` and `conj(lambda)` agree (`true`) or are
    /// exchanged (`false`).
    pub fn reflection_preserves_inertia(self) -> bool {
        self.eta_f.times(self.eta_fr) == Sign::Plus
    }
}

impl fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.eta_f, self.eta_r, self.eta_fr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealSymmetry {
    pub matrix: RMat,
    pub eta_r: Sign,
    pub eta_fr: Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiralSymmetry {
    pub matrix: RMat,
    pub eta_c: Sign,
    pub eta_fc: Sign,
}

/// Fundamental symmetry with optional Real and chiral symmetries.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetries {
    pub fundamental: RMat,
    pub eta_f: Sign,
    pub real: Option<RealSymmetry>,
    pub chiral: Option<ChiralSymmetry>,
}

const STRUCTURE_TOL: f64 = 1e-10;

/// `eta` with `m^2 = eta`, after checking that `m` is square and orthogonal.
fn involution_sign(m: &RMat, what: &str) -> Result<Sign, KreinError> {
    if m.nrows() != m.ncols() {
        return Err(KreinError::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let n = m.nrows();
    let id = RMat::identity(n, n);
    if (m.transpose() * m - &id).norm() > STRUCTURE_TOL * (n as f64).max(1.0) {
        return Err(KreinError::SymmetryViolated(format!("{what} is not orthogonal")));
    }
    let sq = m * m;
    if (&sq - &id).norm() < STRUCTURE_TOL * (n as f64).max(1.0) {
        Ok(Sign::Plus)
    } else if (&sq + &id).norm() < STRUCTURE_TOL * (n as f64).max(1.0) {
        Ok(Sign::Minus)
    } else {
        Err(KreinError::SymmetryViolated(format!("{what} does not square to +1 or -1")))
    }
}

/// `eta` with `a b = eta b a`.
fn commutation_sign(a: &RMat, b: &RMat, what: &str) -> Result<Sign, KreinError> {
    let ab = a * b;
    let ba = b * a;
    let scale = (a.nrows() as f64).max(1.0);
    if (&ab - &ba).norm() < STRUCTURE_TOL * scale {
        Ok(Sign::Plus)
    } else if (&ab + &ba).norm() < STRUCTURE_TOL * scale {
        Ok(Sign::Minus)
    } else {
        Err(KreinError::SymmetryViolated(format!("{what} neither commute nor anticommute")))
    }
}

impl Symmetries {
    pub fn new(fundamental: RMat) -> Result<Self, KreinError> {
        let eta_f = involution_sign(&fundamental, "fundamental symmetry")?;
        Ok(Self { fundamental, eta_f, real: None, chiral: None })
    }

    pub fn with_real(mut self, matrix: RMat) -> Result<Self, KreinError> {
        self.check_dim(matrix.nrows())?;
        let eta_r = involution_sign(&matrix, "Real symmetry")?;
        let eta_fr = commutation_sign(&self.fundamental, &matrix, "fundamental and Real symmetry")?;
        self.real = Some(RealSymmetry { matrix, eta_r, eta_fr });
        Ok(self)
    }

    pub fn with_chiral(mut self, matrix: RMat) -> Result<Self, KreinError> {
        self.check_dim(matrix.nrows())?;
        let eta_c = involution_sign(&matrix, "chiral symmetry")?;
        let eta_fc = commutation_sign(&self.fundamental, &matrix, "fundamental and chiral symmetry")?;
        self.chiral = Some(ChiralSymmetry { matrix, eta_c, eta_fc });
        Ok(self)
    }

    fn check_dim(&self, n: usize) -> Result<(), KreinError> {
        if n != self.dim() {
            return Err(KreinError::DimensionMismatch { expected: self.dim(), found: n });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.fundamental.nrows()
    }

    pub fn kind(&self) -> Option<SymmetryKind> {
        self.real.as_ref().map(|r| SymmetryKind { eta_f: self.eta_f, eta_r: r.eta_r, eta_fr: r.eta_fr })
    }

    /// The Hermitian form `sqrt(eta_F) J_F`.
    pub fn form(&self) -> CMat {
        let j = to_complex(&self.fundamental);
        match self.eta_f {
            Sign::Plus => j,
            Sign::Minus => j * c64(0.0, 1.0),
        }
    }
}

/// Outcome of [`check_symmetries`]: residuals of each relation and verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub j_unitary: bool,
    pub j_unitary_residual: f64,
    pub real: Option<bool>,
    pub real_residual: Option<f64>,
    pub chiral: Option<bool>,
    pub chiral_residual: Option<f64>,
}

impl SymmetryReport {
    pub fn all_hold(&self) -> bool {
        self.j_unitary && self.real.unwrap_or(true) && self.chiral.unwrap_or(true)
    }
}

/// Residual of `T* J T = J`, relative to `|T|^2`.
pub fn unitarity_residual(t: &CMat, form: &CMat) -> f64 {
    let lhs = t.adjoint() * form * t;
    (lhs - form).norm() / t.norm_squared().max(1.0)
}

/// Tests J-unitarity and the optional Real and chiral relations of `t`.
pub fn check_symmetries(t: &CMat, sym: &Symmetries, tol: &Tolerances) -> Result<SymmetryReport, KreinError> {
    if t.nrows() != t.ncols() {
        return Err(KreinError::DimensionMismatch { expected: t.nrows(), found: t.ncols() });
    }
    sym.check_dim(t.nrows())?;
    if crate::linalg::smallest_singular_value(t) < tol.sv_min * t.norm().max(1.0) {
        return Err(KreinError::SingularInput);
    }
    let j = to_complex(&sym.fundamental);
    let ju = unitarity_residual(t, &j);
    let scale = t.norm().max(1.0);
    let real_res = sym.real.as_ref().map(|r| {
        let jr = to_complex(&r.matrix);
        (jr.adjoint() * t.conjugate() * &jr - t).norm() / scale
    });
    let chiral_res = sym.chiral.as_ref().map(|c| {
        let jc = to_complex(&c.matrix);
        (jc.adjoint() * t * &jc - t).norm() / scale
    });
    Ok(SymmetryReport {
        j_unitary: ju < tol.unitary,
        j_unitary_residual: ju,
        real: real_res.map(|r| r < tol.unitary),
        real_residual: real_res,
        chiral: chiral_res.map(|r| r < tol.unitary),
        chiral_residual: chiral_res,
    })
}

/// A unimodular eigenvalue (or cluster) with its Krein inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KreinEigenvalue {
    pub lambda: Complex64,
    pub multiplicity: usize,
    pub nu_plus: usize,
    pub nu_minus: usize,
}

impl KreinEigenvalue {
    pub fn signature(&self) -> i64 {
        self.nu_plus as i64 - self.nu_minus as i64
    }
}

/// Inertia of the form restricted to the range of an orthonormal frame.
fn frame_inertia(frame: &CMat, form: &CMat, tol: &Tolerances) -> Result<(usize, usize), KreinError> {
    let restricted = frame.adjoint() * form * frame;
    let (vals, _) = hermitian_eig(&restricted);
    let smallest = vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if smallest < tol.form {
        return Err(KreinError::DegenerateForm(smallest));
    }
    let plus = vals.iter().filter(|v| **v > 0.0).count();
    Ok((plus, vals.len() - plus))
}

/// Krein inertia of the group of eigenvalues of `t` matching `cluster`.
///
/// Every entry of `cluster` must lie within the clustering radius of an
/// eigenvalue of `t`, all of them must fall into one spectral cluster, and
/// that cluster must contain nothing else.
pub fn inertia_of_cluster(
    t: &CMat,
    sym: &Symmetries,
    cluster: &[Complex64],
    tol: &Tolerances,
) -> Result<KreinEigenvalue, KreinError> {
    if t.nrows() != t.ncols() {
        return Err(KreinError::DimensionMismatch { expected: t.nrows(), found: t.ncols() });
    }
    sym.check_dim(t.nrows())?;
    if cluster.is_empty() {
        return Err(KreinError::NotIsolated("empty eigenvalue set".into()));
    }
    let dec = decompose(t, tol.cluster_gap)?;
    let mut index = None;
    for z in cluster {
        let near = dec.eigenvalues.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min);
        if near >= tol.cluster_gap {
            return Err(KreinError::NotIsolated(format!("{z} is not an eigenvalue")));
        }
        let idx = dec.cluster_near(*z).expect("non-empty spectrum");
        match index {
            None => index = Some(idx),
            Some(prev) if prev != idx => {
                return Err(KreinError::NotIsolated("values belong to different clusters".into()))
            }
            _ => {}
        }
    }
    let idx = index.expect("non-empty cluster");
    let members = &dec.clusters[idx].members;
    for &m in members {
        let e = dec.eigenvalues[m];
        let near = cluster.iter().map(|z| (e - z).norm()).fold(f64::INFINITY, f64::min);
        if near >= tol.cluster_gap {
            return Err(KreinError::NotIsolated(format!("eigenvalue {e} coalesces with the requested set")));
        }
    }
    let proj = riesz_projection(&dec, idx, tol)?;
    let (nu_plus, nu_minus) = frame_inertia(&proj.right_frame, &sym.form(), tol)?;
    Ok(KreinEigenvalue { lambda: dec.clusters[idx].center, multiplicity: members.len(), nu_plus, nu_minus })
}

/// Unimodular spectrum of `t` with inertias and the clustering radius used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSpectrum {
    pub eigenvalues: Vec<KreinEigenvalue>,
    pub cluster_gap: f64,
}

/// Inertias of all clusters on the unit circle.
///
/// Starts with `tol.cluster_gap` and widens it tenfold whenever the form looks
/// degenerate or a projection is ill-conditioned, up to `tol.cluster_gap_max`.
pub fn unit_inertias(t: &CMat, sym: &Symmetries, tol: &Tolerances) -> Result<UnitSpectrum, KreinError> {
    if t.nrows() != t.ncols() {
        return Err(KreinError::DimensionMismatch { expected: t.nrows(), found: t.ncols() });
    }
    sym.check_dim(t.nrows())?;
    let form = sym.form();
    let mut gap = tol.cluster_gap;
    loop {
        let attempt = (|| -> Result<Vec<KreinEigenvalue>, KreinError> {
            let dec = decompose(t, gap)?;
            let mut out = Vec::new();
            for (idx, cluster) in unit_circle_spectrum(&dec, tol) {
                let proj = riesz_projection(&dec, idx, tol)?;
                let (nu_plus, nu_minus) = frame_inertia(&proj.right_frame, &form, tol)?;
                out.push(KreinEigenvalue {
                    lambda: cluster.center,
                    multiplicity: cluster.multiplicity(),
                    nu_plus,
                    nu_minus,
                });
            }
            out.sort_by(|a, b| a.lambda.arg().partial_cmp(&b.lambda.arg()).unwrap());
            Ok(out)
        })();
        match attempt {
            Ok(eigenvalues) => return Ok(UnitSpectrum { eigenvalues, cluster_gap: gap }),
            Err(KreinError::DegenerateForm(_)) | Err(KreinError::Spectral(SpectralError::IllConditioned { .. }))
                if gap * 10.0 <= tol.cluster_gap_max * (1.0 + 1e-12) =>
            {
                gap *= 10.0;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Sum of `nu_plus - nu_minus` over all unimodular eigenvalues.
pub fn global_signature(eigs: &[KreinEigenvalue]) -> i64 {
    eigs.iter().map(KreinEigenvalue::signature).sum()
}

/// Tolerance for deciding that an eigenvalue sits at `+1`, `-1`, or that two
/// eigenvalues are complex conjugates of each other.
pub const COINCIDENCE_TOL: f64 = 1e-6;

/// `nu_plus - nu_minus` summed over eigenvalues within [`COINCIDENCE_TOL`] of `point`.
pub fn signature_at(eigs: &[KreinEigenvalue], point: Complex64) -> i64 {
    eigs.iter().filter(|e| (e.lambda - point).norm() < COINCIDENCE_TOL).map(KreinEigenvalue::signature).sum()
}

fn is_real_point(z: Complex64) -> bool {
    (z - 1.0).norm() < COINCIDENCE_TOL || (z + 1.0).norm() < COINCIDENCE_TOL
}

/// Check `nu_pm(lambda) = nu_pm(conj lambda)` (`preserve = true`) or
/// `nu_pm(lambda) = nu_mp(conj lambda)` (`preserve = false`).
pub fn check_reflection(eigs: &[KreinEigenvalue], preserve: bool) -> Result<(), KreinError> {
    let sum_near = |z: Complex64| -> (usize, usize) {
        eigs.iter()
            .filter(|e| (e.lambda - z).norm() < COINCIDENCE_TOL)
            .fold((0, 0), |acc, e| (acc.0 + e.nu_plus, acc.1 + e.nu_minus))
    };
    for e in eigs {
        let here = sum_near(e.lambda);
        let there = sum_near(e.lambda.conj());
        let expected = if preserve { here } else { (here.1, here.0) };
        if there != expected {
            return Err(KreinError::SymmetryViolated(format!(
                "inertia at {} is {:?} but at its conjugate {:?}",
                e.lambda, here, there
            )));
        }
    }
    Ok(())
}

/// `Sig(1) mod 2`, cross-checked against `(Sig(-1) + Sig) mod 2`.
pub fn secondary_invariant(eigs: &[KreinEigenvalue]) -> Result<u8, KreinError> {
    let at_one = signature_at(eigs, c64(1.0, 0.0)).rem_euclid(2) as u8;
    let other = (signature_at(eigs, c64(-1.0, 0.0)) + global_signature(eigs)).rem_euclid(2) as u8;
    if at_one != other {
        return Err(KreinError::SymmetryViolated(
            "signatures off the real axis do not pair up; Sec is inconsistent".into(),
        ));
    }
    Ok(at_one)
}

/// Half signature: sum of `nu_plus - nu_minus` over the closed upper half
/// circle, with eigenvalues at `+1` and `-1` counted with weight one half.
pub fn half_signature(eigs: &[KreinEigenvalue]) -> Result<i64, KreinError> {
    check_reflection(eigs, true)?;
    let twice: i64 = eigs
        .iter()
        .map(|e| {
            if is_real_point(e.lambda) {
                e.signature()
            } else if e.lambda.im > 0.0 {
                2 * e.signature()
            } else {
                0
            }
        })
        .sum();
    if twice % 2 != 0 {
        return Err(KreinError::SymmetryViolated("odd inertia at +1 or -1 where even multiplicity is required".into()));
    }
    Ok(twice / 2)
}

/// `Z_2` signature: half the number of unimodular eigenvalues, modulo two.
pub fn z2_signature(eigs: &[KreinEigenvalue]) -> Result<u8, KreinError> {
    let total: usize = eigs.iter().map(|e| e.nu_plus + e.nu_minus).sum();
    if !total.is_multiple_of(2) {
        return Err(KreinError::SymmetryViolated("odd number of unimodular eigenvalues".into()));
    }
    Ok(((total / 2) % 2) as u8)
}

/// The invariants that are defined for a symmetry kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InvariantSet {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sig: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sec: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_sig: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sig2: Option<u8>,
}

/// Which invariants a kind carries, without computing them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantClass {
    Signature,
    SignatureAndSecondary,
    HalfSignature,
    Z2Signature,
    Trivial,
}

pub fn invariant_class(kind: Option<SymmetryKind>) -> InvariantClass {
    match kind {
        None => InvariantClass::Signature,
        Some(k) => match (k.eta_f.times(k.eta_fr), k.eta_r) {
            (Sign::Plus, Sign::Plus) => InvariantClass::SignatureAndSecondary,
            (Sign::Plus, Sign::Minus) => InvariantClass::HalfSignature,
            (Sign::Minus, Sign::Plus) => InvariantClass::Trivial,
            (Sign::Minus, Sign::Minus) => InvariantClass::Z2Signature,
        },
    }
}

/// Compute the invariants that are well defined for `kind`. Without a Real
/// symmetry only the signature is returned.
pub fn invariants_for_kind(eigs: &[KreinEigenvalue], kind: Option<SymmetryKind>) -> Result<InvariantSet, KreinError> {
    let mut out = InvariantSet::default();
    if let Some(k) = kind {
        check_reflection(eigs, k.reflection_preserves_inertia())?;
    }
    match invariant_class(kind) {
        InvariantClass::Signature => out.sig = Some(global_signature(eigs)),
        InvariantClass::SignatureAndSecondary => {
            out.sig = Some(global_signature(eigs));
            out.sec = Some(secondary_invariant(eigs)?);
        }
        InvariantClass::HalfSignature => out.half_sig = Some(half_signature(eigs)?),
        InvariantClass::Z2Signature => out.sig2 = Some(z2_signature(eigs)?),
        InvariantClass::Trivial => {}
    }
    Ok(out)
}
