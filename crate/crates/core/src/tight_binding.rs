//! Periodic tight-binding Hamiltonians on `l2(Z^2) (x) C^L` in a Landau gauge.
//!
//! A model is given by four hopping matrices `W1..W4`, an on-site matrix `V`
//! and a rational flux `phi = 2 pi q / p`. Along direction 1 the Hamiltonian
//! is a Jacobi operator `A S1* + B + A* S1` whose coefficients act on the
//! vertical coordinate `n2` and are `p`-periodic in it. Their nonzero blocks:
//!
//! ```text
//! A[n, n]   = W1  o Phase(n)        B[n, n]   = V
//! A[n, n+1] = W3  o Phase(n)        B[n, n+1] = W2*
//! A[n, n-1] = W4* o Phase(n+1)      B[n, n-1] = W2
//! ```
//!
//! where `Phase(n)[i][j] = exp(i phi n (c_i + c_j) / 2)` and `c` is a vector of
//! integer charges (all `1` unless the model says otherwise; Bogoliubov-de
//! Gennes models use `+1` for particles and `-1` for holes). With unit charges
//! the Bloch-Floquet fibers reproduce the familiar magnetic Bloch blocks
//!
//! ```text
//! <m|A(k2)|l> = W1 e^{i phi m} d(m,l) + W3 e^{i(phi m - k2)} d(m,l-1) + W4* e^{i(phi m + phi + k2)} d(m,l+1)
//! <m|B(k2)|l> = W2* e^{-i k2} d(m,l-1) + W2 e^{i k2} d(m,l+1) + V d(m,l)
//! ```
//!
//! with indices modulo `p` and `k2` in `(-pi/p, pi/p]`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krein::{Sign, Symmetries};
use crate::linalg::{
    block2, c64, eigenvalues, eye, hermitian_eig, inverse_checked, kron, singular_values, to_complex, CMat, RMat,
};
use crate::spectral::{distance_to_circle, symplectic_unit};
use crate::tolerance::Tolerances;

#[derive(Debug, Error)]
pub enum TightBindingError {
    #[error("A(k2) is not invertible at k2 = {k2} (smallest singular value {sv:.3e})")]
    StrongHypothesisFailed { k2: f64, sv: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("Schur iteration did not converge")]
    ConvergenceFailure,
}

/// A real orthogonal `L x L` matrix implementing an anti-unitary symmetry
/// fiberwise, together with its parity (the sign of its square).
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSymmetry {
    pub matrix: RMat,
    pub parity: Sign,
}

impl FiberSymmetry {
    pub fn new(matrix: RMat) -> Result<Self, TightBindingError> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(TightBindingError::InvalidModel("symmetry block must be square".into()));
        }
        let id = RMat::identity(n, n);
        if (matrix.transpose() * &matrix - &id).norm() > 1e-12 * n as f64 {
            return Err(TightBindingError::InvalidModel("symmetry block must be orthogonal".into()));
        }
        let sq = &matrix * &matrix;
        let parity = if (&sq - &id).norm() < 1e-12 * n as f64 {
            Sign::Plus
        } else if (&sq + &id).norm() < 1e-12 * n as f64 {
            Sign::Minus
        } else {
            return Err(TightBindingError::InvalidModel("symmetry block must square to +1 or -1".into()));
        };
        Ok(Self { matrix, parity })
    }
}

/// Symmetry metadata attached to a model. Nothing here is trusted: see
/// [`HoppingModel::verify_symmetries`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelSymmetries {
    /// Time reversal: `I* conj(H) I = H`.
    pub trs: Option<FiberSymmetry>,
    /// Particle-hole: `K* conj(H) K = -H`.
    pub phs: Option<FiberSymmetry>,
    /// Sublattice: `K* H K = -H`.
    pub chiral: Option<FiberSymmetry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingModel {
    pub name: String,
    pub l: usize,
    pub q: i64,
    pub p: usize,
    pub w: [CMat; 4],
    pub v: CMat,
    pub charges: Vec<i32>,
    pub symmetries: ModelSymmetries,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl HoppingModel {
    /// Builds and validates a model. The flux `q / p` is reduced to lowest terms.
    pub fn new(name: &str, q: i64, p: usize, w: [CMat; 4], v: CMat) -> Result<Self, TightBindingError> {
        if p == 0 {
            return Err(TightBindingError::InvalidModel("flux denominator must be positive".into()));
        }
        let l = v.nrows();
        if l == 0 {
            return Err(TightBindingError::InvalidModel("fiber dimension must be positive".into()));
        }
        for (i, m) in w.iter().chain(std::iter::once(&v)).enumerate() {
            if m.shape() != (l, l) {
                return Err(TightBindingError::InvalidModel(format!(
                    "coefficient {} has shape {:?}, expected ({l}, {l})",
                    if i < 4 { format!("W{}", i + 1) } else { "V".to_string() },
                    m.shape()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(TightBindingError::InvalidModel("coefficients must be finite".into()));
            }
        }
        if (&v - v.adjoint()).norm() > 1e-12 * v.norm().max(1.0) {
            return Err(TightBindingError::InvalidModel("V must be Hermitian".into()));
        }
        let g = gcd(q.unsigned_abs(), p as u64).max(1);
        Ok(Self {
            name: name.to_string(),
            l,
            q: q / g as i64,
            p: p / g as usize,
            w,
            v,
            charges: vec![1; l],
            symmetries: ModelSymmetries::default(),
        })
    }

    pub fn with_charges(mut self, charges: Vec<i32>) -> Result<Self, TightBindingError> {
        if charges.len() != self.l {
            return Err(TightBindingError::InvalidModel("one charge per fiber component required".into()));
        }
        if charges.iter().any(|c| (c - charges[0]) % 2 != 0) {
            return Err(TightBindingError::InvalidModel("charges must share their parity".into()));
        }
        self.charges = charges;
        Ok(self)
    }

    pub fn with_symmetries(mut self, symmetries: ModelSymmetries) -> Result<Self, TightBindingError> {
        for s in [&symmetries.trs, &symmetries.phs, &symmetries.chiral].into_iter().flatten() {
            if s.matrix.nrows() != self.l {
                return Err(TightBindingError::InvalidModel("symmetry block has wrong size".into()));
            }
        }
        self.symmetries = symmetries;
        Ok(self)
    }

    pub fn flux(&self) -> f64 {
        2.0 * PI * self.q as f64 / self.p as f64
    }

    /// Dimension of a Bloch-Floquet fiber, `L p`.
    pub fn fiber_dim(&self) -> usize {
        self.l * self.p
    }

    /// Entrywise Peierls phase for row `n`.
    fn phase(&self, n: i64) -> CMat {
        let phi = self.flux();
        CMat::from_fn(self.l, self.l, |i, j| {
            let charge = (self.charges[i] + self.charges[j]) / 2;
            Complex64::from_polar(1.0, phi * (n * charge as i64) as f64)
        })
    }

    /// `A[n, n]`, `A[n, n+1]` and `A[n, n-1]`.
    pub fn a_blocks(&self, n: i64) -> [CMat; 3] {
        let here = self.phase(n);
        let next = self.phase(n + 1);
        [self.w[0].component_mul(&here), self.w[2].component_mul(&here), self.w[3].adjoint().component_mul(&next)]
    }

    /// `B[n, n]`, `B[n, n+1]` and `B[n, n-1]`.
    pub fn b_blocks(&self) -> [CMat; 3] {
        [self.v.clone(), self.w[1].adjoint(), self.w[1].clone()]
    }
}

/// Hamiltonian on the `n1 x n2` patch of the lattice with open boundaries.
/// Site `(x, y)` with fiber index `i` is the basis vector
/// `(x n2 + y) L + i`, and `y` is the row used by the Landau gauge.
pub fn lattice_hamiltonian(model: &HoppingModel, n1: usize, n2: usize) -> CMat {
    let l = model.l;
    let index = |x: usize, y: usize| (x * n2 + y) * l;
    let mut h = CMat::zeros(n1 * n2 * l, n1 * n2 * l);
    let [b_diag, b_up, _] = model.b_blocks();
    let mut put = |from: usize, to: usize, block: &CMat| {
        h.view_mut((from, to), (l, l)).copy_from(block);
        if from != to {
            h.view_mut((to, from), (l, l)).copy_from(&block.adjoint());
        }
    };
    for x in 0..n1 {
        for y in 0..n2 {
            let [a_nn, a_up, a_down] = model.a_blocks(y as i64);
            put(index(x, y), index(x, y), &b_diag);
            if y + 1 < n2 {
                put(index(x, y), index(x, y + 1), &b_up);
            }
            if x + 1 < n1 {
                put(index(x, y), index(x + 1, y), &a_nn);
                if y + 1 < n2 {
                    put(index(x, y), index(x + 1, y + 1), &a_up);
                }
                if y >= 1 {
                    put(index(x, y), index(x + 1, y - 1), &a_down);
                }
            }
        }
    }
    h
}

/// Bloch-Floquet fibers `(A(k2), B(k2))`, each `L p x L p`.
pub fn fiber_ab(model: &HoppingModel, k2: f64) -> (CMat, CMat) {
    let (l, p) = (model.l, model.p);
    let dim = l * p;
    let mut a = CMat::zeros(dim, dim);
    let mut b = CMat::zeros(dim, dim);
    let b_blocks = model.b_blocks();
    for m in 0..p {
        let a_blocks = model.a_blocks(m as i64);
        for (offset, slot) in [(0i64, 0usize), (1, 1), (-1, 2)] {
            let col = (m as i64 + offset).rem_euclid(p as i64) as usize;
            let phase = Complex64::from_polar(1.0, -(offset as f64) * k2);
            let mut va = a.view_mut((m * l, col * l), (l, l));
            va += &a_blocks[slot] * phase;
            let mut vb = b.view_mut((m * l, col * l), (l, l));
            vb += &b_blocks[slot] * phase;
        }
    }
    (a, b)
}

/// `H(k1, k2) = A(k2) e^{-i k1} + B(k2) + A(k2)* e^{i k1}`.
pub fn bloch_hamiltonian(model: &HoppingModel, k1: f64, k2: f64) -> CMat {
    let (a, b) = fiber_ab(model, k2);
    let e = Complex64::from_polar(1.0, -k1);
    &a * e + b + a.adjoint() * e.conj()
}

/// Bloch-Floquet gauge relating fibers at `k2` and `k2 + 2 pi / p`:
/// `H(k1, k2 + 2 pi / p) = D H(k1, k2) D*`.
pub fn floquet_gauge(model: &HoppingModel) -> CMat {
    let (l, p) = (model.l, model.p);
    let mut d = CMat::zeros(l * p, l * p);
    for m in 0..p {
        let z = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / p as f64);
        for a in 0..l {
            d[(m * l + a, m * l + a)] = z;
        }
    }
    d
}

/// Transfer matrix `[[(E - B) A^{-1}, -A*], [A^{-1}, 0]]` over one column.
pub fn bulk_transfer_fiber(
    model: &HoppingModel,
    energy: f64,
    k2: f64,
    tol: &Tolerances,
) -> Result<CMat, TightBindingError> {
    let (a, b) = fiber_ab(model, k2);
    transfer_from_blocks(&a, &b, energy, tol.sv_min).ok_or_else(|| TightBindingError::StrongHypothesisFailed {
        k2,
        sv: singular_values(&a).last().copied().unwrap_or(0.0),
    })
}

/// `[[(E - B) A^{-1}, -A*], [A^{-1}, 0]]`, or `None` if `A` is singular.
pub(crate) fn transfer_from_blocks(a: &CMat, b: &CMat, energy: f64, sv_min: f64) -> Option<CMat> {
    let n = a.nrows();
    let a_inv = inverse_checked(a, sv_min)?;
    let shifted = eye(n) * c64(energy, 0.0) - b;
    Some(block2(&(shifted * &a_inv), &(-a.adjoint()), &a_inv, &CMat::zeros(n, n)))
}

/// Symplectic unit `I` of size `2n`, the fundamental symmetry of every transfer matrix.
pub fn transfer_form(n: usize) -> RMat {
    symplectic_unit(n)
}

/// Sampled bulk transfer spectrum over the reduced zone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BulkSpectrum {
    pub energy: f64,
    pub k2: Vec<f64>,
    pub eigenvalues: Vec<Vec<Complex64>>,
    /// Smallest distance of any sampled eigenvalue to the unit circle.
    pub min_distance: f64,
}

/// Uniform grid of `n` points over `(-pi/p, pi/p]`.
pub fn k2_grid(p: usize, n: usize) -> Vec<f64> {
    let width = 2.0 * PI / p as f64;
    (1..=n).map(|j| -PI / p as f64 + width * j as f64 / n as f64).collect()
}

pub fn bulk_transfer_spectrum(
    model: &HoppingModel,
    energy: f64,
    n_k2: usize,
    tol: &Tolerances,
) -> Result<BulkSpectrum, TightBindingError> {
    let grid = k2_grid(model.p, n_k2);
    let mut eigs = Vec::with_capacity(grid.len());
    let mut min_distance = f64::INFINITY;
    for &k2 in &grid {
        let t = bulk_transfer_fiber(model, energy, k2, tol)?;
        let ev = eigenvalues(&t).ok_or(TightBindingError::ConvergenceFailure)?;
        min_distance = min_distance.min(distance_to_circle(&ev));
        eigs.push(ev);
    }
    Ok(BulkSpectrum { energy, k2: grid, eigenvalues: eigs, min_distance })
}

/// Verdict on whether an energy lies in a bulk gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub transfer_distance: f64,
    pub band_distance: f64,
    pub in_gap: bool,
}

/// Margin on the transfer spectrum and the Bloch bands for [`energy_in_gap`].
pub const GAP_MARGIN_TRANSFER: f64 = 1e-3;
pub const GAP_MARGIN_BANDS: f64 = 1e-6;

/// `E` is in a gap when the transfer spectrum stays `1e-3` away from the unit
/// circle and no sampled Bloch eigenvalue comes within `1e-6` of `E`.
pub fn energy_in_gap(
    model: &HoppingModel,
    energy: f64,
    n_k2: usize,
    n_k1: usize,
    tol: &Tolerances,
) -> Result<GapReport, TightBindingError> {
    let spectrum = bulk_transfer_spectrum(model, energy, n_k2, tol)?;
    let band_distance = min_band_distance(model, energy, n_k1, n_k2);
    Ok(GapReport {
        transfer_distance: spectrum.min_distance,
        band_distance,
        in_gap: spectrum.min_distance > GAP_MARGIN_TRANSFER && band_distance > GAP_MARGIN_BANDS,
    })
}

/// Smallest `|e - E|` over Bloch eigenvalues `e` sampled on an `n_k1 x n_k2` grid.
pub fn min_band_distance(model: &HoppingModel, energy: f64, n_k1: usize, n_k2: usize) -> f64 {
    let k1s: Vec<f64> = (0..n_k1).map(|i| -PI + 2.0 * PI * i as f64 / n_k1 as f64).collect();
    let mut best = f64::INFINITY;
    for &k2 in &k2_grid(model.p, n_k2) {
        for &k1 in &k1s {
            let (vals, _) = hermitian_eig(&bloch_hamiltonian(model, k1, k2));
            for v in vals {
                best = best.min((v - energy).abs());
            }
        }
    }
    best
}

/// Result of checking the declared symmetries on the model coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryVerdict {
    pub trs: Option<bool>,
    pub phs: Option<bool>,
    pub chiral: Option<bool>,
}

const SAMPLE_MOMENTA: [f64; 5] = [0.0, 0.37, -1.21, 2.03, PI];

impl HoppingModel {
    /// `1_p (x) S` acting on a fiber.
    fn lift(&self, s: &RMat) -> CMat {
        kron(&eye(self.p), &to_complex(s))
    }

    /// Checks each declared symmetry on the Bloch fibers `A(k2)`, `B(k2)` at
    /// a handful of momenta, where an anti-unitary symmetry maps `k2` to `-k2`.
    pub fn verify_symmetries(&self, tol: f64) -> SymmetryVerdict {
        let anti = |s: &FiberSymmetry, sign: f64| -> bool {
            let u = self.lift(&s.matrix);
            SAMPLE_MOMENTA.iter().all(|&k| {
                let (a, b) = fiber_ab(self, k);
                let (am, bm) = fiber_ab(self, -k);
                let lhs_a = u.adjoint() * a.conjugate() * &u;
                let lhs_b = u.adjoint() * b.conjugate() * &u;
                (lhs_a - am * c64(sign, 0.0)).norm() < tol * a.norm().max(1.0)
                    && (lhs_b - bm * c64(sign, 0.0)).norm() < tol * b.norm().max(1.0)
            })
        };
        let chiral = |s: &FiberSymmetry| -> bool {
            let u = self.lift(&s.matrix);
            SAMPLE_MOMENTA.iter().all(|&k| {
                let (a, b) = fiber_ab(self, k);
                (u.adjoint() * &a * &u + &a).norm() < tol * a.norm().max(1.0)
                    && (u.adjoint() * &b * &u + &b).norm() < tol * b.norm().max(1.0)
            })
        };
        SymmetryVerdict {
            trs: self.symmetries.trs.as_ref().map(|s| anti(s, 1.0)),
            phs: self.symmetries.phs.as_ref().map(|s| anti(s, -1.0)),
            chiral: self.symmetries.chiral.as_ref().map(chiral),
        }
    }

    /// Symmetries of a `2 L' x 2 L'` transfer matrix at `energy`, where
    /// `L' = L * copies` (`copies = p` for bulk fibers, `1` for the vertical
    /// cell transfer). Only symmetries that pass [`Self::verify_symmetries`]
    /// are used; particle-hole and chiral symmetries need `energy = 0`.
    pub fn transfer_symmetries(&self, energy: f64, copies: usize) -> Symmetries {
        let verdict = self.verify_symmetries(1e-10);
        let n = self.l * copies;
        let lift = |m: &RMat| crate::linalg::rkron(&RMat::identity(copies, copies), m);
        let mut sym = Symmetries::new(transfer_form(n)).expect("symplectic unit is a fundamental symmetry");
        let at_zero = energy.abs() < 1e-12;
        let j2 = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        if let (Some(s), Some(true)) = (&self.symmetries.trs, verdict.trs) {
            let jr = crate::linalg::rkron(&RMat::identity(2, 2), &lift(&s.matrix));
            sym = sym.with_real(jr).expect("time reversal lifts to a Real symmetry");
        } else if let (Some(s), Some(true), true) = (&self.symmetries.phs, verdict.phs, at_zero) {
            let jr = crate::linalg::rkron(&j2, &lift(&s.matrix));
            sym = sym.with_real(jr).expect("particle-hole symmetry lifts to a Real symmetry");
        }
        if let (Some(s), Some(true), true) = (&self.symmetries.chiral, verdict.chiral, at_zero) {
            let jc = crate::linalg::rkron(&j2, &lift(&s.matrix));
            sym = sym.with_chiral(jc).expect("chiral symmetry lifts to the transfer matrix");
        }
        sym
    }
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

type Rows = Vec<Vec<[f64; 2]>>;
type RealRows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SymmetryFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trs: Option<RealRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phs: Option<RealRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chiral: Option<RealRows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema: u32,
    name: String,
    #[serde(rename = "L")]
    l: usize,
    p: usize,
    q: i64,
    #[serde(rename = "W1")]
    w1: Rows,
    #[serde(rename = "W2")]
    w2: Rows,
    #[serde(rename = "W3")]
    w3: Rows,
    #[serde(rename = "W4")]
    w4: Rows,
    #[serde(rename = "V")]
    v: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    charges: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symmetries: Option<SymmetryFile>,
}

fn to_rows(m: &CMat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn to_real_rows(m: &RMat) -> RealRows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(rows: &Rows, l: usize, what: &str) -> Result<CMat, TightBindingError> {
    if rows.len() != l || rows.iter().any(|r| r.len() != l) {
        return Err(TightBindingError::InvalidModel(format!("{what} must be {l}x{l}")));
    }
    Ok(CMat::from_fn(l, l, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

fn from_real_rows(rows: &RealRows, l: usize, what: &str) -> Result<RMat, TightBindingError> {
    if rows.len() != l || rows.iter().any(|r| r.len() != l) {
        return Err(TightBindingError::InvalidModel(format!("{what} must be {l}x{l}")));
    }
    Ok(RMat::from_fn(l, l, |i, j| rows[i][j]))
}

pub const MODEL_SCHEMA: u32 = 1;

impl HoppingModel {
    pub fn to_json(&self) -> String {
        let sym = &self.symmetries;
        let symmetries = if sym.trs.is_none() && sym.phs.is_none() && sym.chiral.is_none() {
            None
        } else {
            Some(SymmetryFile {
                trs: sym.trs.as_ref().map(|s| to_real_rows(&s.matrix)),
                phs: sym.phs.as_ref().map(|s| to_real_rows(&s.matrix)),
                chiral: sym.chiral.as_ref().map(|s| to_real_rows(&s.matrix)),
            })
        };
        let file = ModelFile {
            schema: MODEL_SCHEMA,
            name: self.name.clone(),
            l: self.l,
            p: self.p,
            q: self.q,
            w1: to_rows(&self.w[0]),
            w2: to_rows(&self.w[1]),
            w3: to_rows(&self.w[2]),
            w4: to_rows(&self.w[3]),
            v: to_rows(&self.v),
            charges: if self.charges.iter().all(|&c| c == 1) { None } else { Some(self.charges.clone()) },
            symmetries,
        };
        let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, TightBindingError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema != MODEL_SCHEMA {
            return Err(TightBindingError::InvalidModel(format!("unsupported schema {}", file.schema)));
        }
        let l = file.l;
        let w = [
            from_rows(&file.w1, l, "W1")?,
            from_rows(&file.w2, l, "W2")?,
            from_rows(&file.w3, l, "W3")?,
            from_rows(&file.w4, l, "W4")?,
        ];
        let v = from_rows(&file.v, l, "V")?;
        let mut model = HoppingModel::new(&file.name, file.q, file.p, w, v)?;
        if let Some(c) = file.charges {
            model = model.with_charges(c)?;
        }
        if let Some(s) = file.symmetries {
            let get = |rows: &Option<RealRows>, what: &str| -> Result<Option<FiberSymmetry>, TightBindingError> {
                rows.as_ref().map(|r| from_real_rows(r, l, what).and_then(FiberSymmetry::new)).transpose()
            };
            model = model.with_symmetries(ModelSymmetries {
                trs: get(&s.trs, "trs")?,
                phs: get(&s.phs, "phs")?,
                chiral: get(&s.chiral, "chiral")?,
            })?;
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, TightBindingError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), TightBindingError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, ONE};

    fn harper(q: i64, p: usize) -> HoppingModel {
        let one = CMat::from_element(1, 1, ONE);
        let zero = CMat::zeros(1, 1);
        HoppingModel::new("harper", q, p, [one.clone(), one, zero.clone(), zero.clone()], zero).unwrap()
    }

    /// Literal transcription of the magnetic Bloch blocks with unit charges.
    fn literal_ab(m: &HoppingModel, k2: f64) -> (CMat, CMat) {
        let (l, p) = (m.l, m.p);
        let phi = m.flux();
        let mut a = CMat::zeros(l * p, l * p);
        let mut b = CMat::zeros(l * p, l * p);
        let e = |x: f64| Complex64::from_polar(1.0, x);
        for mm in 0..p {
            for ll in 0..p {
                let d = |x: i64| (mm as i64 - ll as i64 - x).rem_euclid(p as i64) == 0;
                let mut blk_a = CMat::zeros(l, l);
                let mut blk_b = CMat::zeros(l, l);
                let mf = mm as f64;
                if d(0) {
                    blk_a += &m.w[0] * e(phi * mf);
                    blk_b += &m.v;
                }
                if d(-1) {
                    blk_a += &m.w[2] * e(phi * mf - k2);
                    blk_b += m.w[1].adjoint() * e(-k2);
                }
                if d(1) {
                    blk_a += m.w[3].adjoint() * e(phi * mf + phi + k2);
                    blk_b += &m.w[1] * e(k2);
                }
                a.view_mut((mm * l, ll * l), (l, l)).copy_from(&blk_a);
                b.view_mut((mm * l, ll * l), (l, l)).copy_from(&blk_b);
            }
        }
        (a, b)
    }

    fn generic(l: usize, q: i64, p: usize, seed: u64) -> HoppingModel {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5
        };
        let mut mat = || CMat::from_fn(l, l, |_, _| c64(next(), next()));
        let w = [mat() + eye(l) * c64(2.0, 0.0), mat(), mat(), mat()];
        let v0 = mat();
        let v = &v0 + v0.adjoint();
        HoppingModel::new("generic", q, p, w, v).unwrap()
    }

    #[test]
    fn fibers_match_literal_blocks() {
        for (q, p) in [(0, 1), (1, 2), (2, 5), (3, 7)] {
            let m = generic(2, q, p, 7 + p as u64);
            for k2 in [-0.3, 0.1, 0.4] {
                let (a, b) = fiber_ab(&m, k2);
                let (la, lb) = literal_ab(&m, k2);
                assert!(dist(&a, &la) < 1e-13, "A mismatch for p = {p}");
                assert!(dist(&b, &lb) < 1e-13, "B mismatch for p = {p}");
            }
        }
    }

    #[test]
    fn flux_is_reduced() {
        let m = harper(6, 14);
        assert_eq!((m.q, m.p), (3, 7));
        let m = harper(0, 5);
        assert_eq!((m.q, m.p), (0, 1));
    }

    #[test]
    fn bloch_hamiltonian_is_hermitian_and_floquet_covariant() {
        let m = generic(2, 2, 3, 5);
        let d = floquet_gauge(&m);
        let h = bloch_hamiltonian(&m, 0.3, -0.2);
        assert!(dist(&h, &h.adjoint()) < 1e-13);
        let shifted = bloch_hamiltonian(&m, 0.3, -0.2 + 2.0 * PI / 3.0);
        assert!(dist(&shifted, &(&d * &h * d.adjoint())) < 1e-12);
    }

    #[test]
    fn harper_single_band_formula() {
        // Zero flux: H(k) = 2 cos k1 + 2 cos k2.
        let m = harper(0, 1);
        let h = bloch_hamiltonian(&m, 0.4, 1.1);
        assert!((h[(0, 0)].re - 2.0 * (0.4f64.cos() + 1.1f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn transfer_is_symplectic() {
        let m = generic(2, 1, 3, 9);
        let tol = Tolerances::default();
        let t = bulk_transfer_fiber(&m, 0.3, 0.2, &tol).unwrap();
        let form = to_complex(&transfer_form(6));
        assert!(crate::krein::unitarity_residual(&t, &form) < 1e-12);
    }

    #[test]
    fn singular_a_is_reported() {
        let one = CMat::from_element(1, 1, ONE);
        let zero = CMat::zeros(1, 1);
        let m = HoppingModel::new("bad", 0, 1, [zero.clone(), one, zero.clone(), zero.clone()], zero).unwrap();
        let err = bulk_transfer_fiber(&m, 0.0, 0.0, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, TightBindingError::StrongHypothesisFailed { .. }));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = generic(3, 2, 5, 21).with_charges(vec![1, -1, 1]).unwrap();
        let text = m.to_json();
        let back = HoppingModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_bad_shapes() {
        let one = CMat::from_element(1, 1, ONE);
        let res = HoppingModel::new("bad", 0, 1, [one.clone(), one.clone(), one.clone(), eye(2)], one);
        assert!(matches!(res, Err(TightBindingError::InvalidModel(_))));
    }
}
