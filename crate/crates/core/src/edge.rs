//! Edge states of the half-plane `n2 >= 0` with a Dirichlet boundary.
//!
//! For fixed `k1` the half-plane operator is a one-sided Jacobi matrix in
//! `n2`,
//!
//! ```text
//! (H psi)_n = a_{n+1} psi_{n+1} + b_n psi_n + a_n* psi_{n-1},      n >= 0,  psi_{-1} = 0,
//! ```
//!
//! whose `L x L` coefficients are read off the Landau-gauge coefficients of
//! the model. The vertical transfer matrix
//!
//! ```text
//! T_n = [[(E - b_n) a_n^{-1}, -a_n*], [a_n^{-1}, 0]]
//! ```
//!
//! maps `(a_n psi_n, psi_{n-1})` to `(a_{n+1} psi_{n+1}, psi_n)`, and one period
//! of rows `0..p` gives the cell transfer matrix `T_{p-1} ... T_0`. When `E` is
//! in a bulk gap its contracting subspace is Lagrangian for the symplectic
//! form and is encoded by the unitary
//!
//! ```text
//! U(k1) = (Phi_top - i Phi_bot) (Phi_top + i Phi_bot)^{-1}.
//! ```
//!
//! Since the Dirichlet condition asks for a vanishing lower component, `E` is
//! an eigenvalue of the half-plane operator at `k1` exactly when `U(k1)` has
//! the eigenvalue one. Each crossing of an eigenphase of `U` through zero
//! contributes its direction of crossing to the Krein inertia of the
//! corresponding unimodular eigenvalue `e^{i k1}` of the half-plane transfer
//! operator: an increasing eigenphase marks a positive definite eigenvector.
//!
//! The edge momentum is defined through plane waves `psi_{n1} = e^{i k1 n1} phi`
//! along the boundary, so the half-plane fiber at `k1` carries `A e^{i k1}`.
//! This is the opposite sign to the bulk Bloch variable of
//! [`bloch_hamiltonian`], whose spectrum is symmetric under the exchange.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krein::{invariants_for_kind, InvariantSet, KreinEigenvalue, KreinError, SymmetryKind};
use crate::linalg::{
    block2, c64, eye, hermitian_eig, inverse_checked, singular_values, to_complex, wrap_angle, CMat, SchurForm, I_UNIT,
};
use crate::tight_binding::{bloch_hamiltonian, floquet_gauge, k2_grid, transfer_form, HoppingModel};
use crate::tolerance::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdgeError {
    #[error("vertical hopping a_{site}(k1) is singular at k1 = {k1} (smallest singular value {sv:.3e})")]
    VerticalHypothesisFailed { site: usize, k1: f64, sv: f64 },
    #[error("energy is not in a bulk gap (transfer eigenvalue {distance:.3e} from the unit circle at k1 = {k1})")]
    NotInGap { k1: f64, distance: f64 },
    #[error("contracting subspace has dimension {found}, expected {expected}")]
    WrongDimension { expected: usize, found: usize },
    #[error("contracting frame is not Lagrangian (residual {0:.3e})")]
    NotLagrangian(f64),
    #[error("eigenphase tracking stayed ambiguous after {refinements} grid refinements")]
    PhaseTrackingAmbiguous { refinements: usize },
    #[error("an edge band is flat at this energy near k1 = {0}")]
    FlatBandDetected(f64),
    #[error("Chern number is not integral (raw value {raw})")]
    NonIntegral { raw: f64 },
    #[error("Schur iteration did not converge")]
    ConvergenceFailure,
    #[error(transparent)]
    Krein(#[from] KreinError),
}

/// Coefficients `(b_n, c_n)` of the half-plane Jacobi matrix for rows
/// `n = 0..p`, where `c_n` couples `psi_{n+1}` into row `n`.
pub fn vertical_coefficients(model: &HoppingModel, k1: f64) -> (Vec<CMat>, Vec<CMat>) {
    let e = Complex64::from_polar(1.0, k1);
    let [b_diag, b_up, _] = model.b_blocks();
    let mut diag = Vec::with_capacity(model.p);
    let mut up = Vec::with_capacity(model.p);
    for n in 0..model.p as i64 {
        let [a_nn, a_up, _] = model.a_blocks(n);
        let [_, _, a_down_next] = model.a_blocks(n + 1);
        diag.push(&a_nn * e + &b_diag + a_nn.adjoint() * e.conj());
        up.push(&a_up * e + &b_up + a_down_next.adjoint() * e.conj());
    }
    (diag, up)
}

/// Truncated half-plane Hamiltonian on rows `0..rows`.
pub fn half_space_hamiltonian(model: &HoppingModel, k1: f64, rows: usize) -> CMat {
    let l = model.l;
    let (diag, up) = vertical_coefficients(model, k1);
    let mut h = CMat::zeros(rows * l, rows * l);
    for n in 0..rows {
        h.view_mut((n * l, n * l), (l, l)).copy_from(&diag[n % model.p]);
        if n + 1 < rows {
            let c = &up[n % model.p];
            h.view_mut((n * l, (n + 1) * l), (l, l)).copy_from(c);
            h.view_mut(((n + 1) * l, n * l), (l, l)).copy_from(&c.adjoint());
        }
    }
    h
}

/// Transfer matrix `T_{p-1} ... T_0` across one period of rows.
pub fn vertical_cell_transfer(model: &HoppingModel, energy: f64, k1: f64, tol: &Tolerances) -> Result<CMat, EdgeError> {
    let l = model.l;
    let p = model.p;
    let (diag, up) = vertical_coefficients(model, k1);
    let mut cell = eye(2 * l);
    for n in 0..p {
        // a_n couples psi_n into row n - 1.
        let a = &up[(n + p - 1) % p];
        let a_inv = inverse_checked(a, tol.sv_min).ok_or_else(|| EdgeError::VerticalHypothesisFailed {
            site: n,
            k1,
            sv: singular_values(a).last().copied().unwrap_or(0.0),
        })?;
        let shifted = eye(l) * c64(energy, 0.0) - &diag[n];
        let step = block2(&(shifted * &a_inv), &(-a.adjoint()), &a_inv, &CMat::zeros(l, l));
        cell = step * cell;
    }
    Ok(cell)
}

/// Orthonormal `2L x L` basis of the contracting subspace of `t`.
pub fn contracting_frame(t: &CMat, tol: &Tolerances) -> Result<CMat, EdgeError> {
    let n = t.nrows();
    let schur = SchurForm::new(t).ok_or(EdgeError::ConvergenceFailure)?;
    let eig = schur.eigenvalues();
    let worst = eig.iter().map(|z| (z.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    if worst < tol.cluster_gap {
        return Err(EdgeError::NotInGap { k1: f64::NAN, distance: worst });
    }
    let frame = schur.invariant_frame(|z| z.norm() < 1.0);
    if 2 * frame.ncols() != n {
        return Err(EdgeError::WrongDimension { expected: n / 2, found: frame.ncols() });
    }
    Ok(frame)
}

/// `U = (Phi_top - i Phi_bot)(Phi_top + i Phi_bot)^{-1}` for a Lagrangian frame.
pub fn edge_unitary(frame: &CMat) -> Result<CMat, EdgeError> {
    let l = frame.ncols();
    let form = to_complex(&transfer_form(l));
    let residual = (frame.adjoint() * form * frame).norm() / (frame.adjoint() * frame).norm().max(1.0);
    if residual > 1e-8 {
        return Err(EdgeError::NotLagrangian(residual));
    }
    let top = frame.rows(0, l).into_owned();
    let bottom = frame.rows(l, l).into_owned();
    let plus = &top + &bottom * I_UNIT;
    let minus = &top - &bottom * I_UNIT;
    let inv = inverse_checked(&plus, 1e-12).ok_or(EdgeError::NotLagrangian(f64::INFINITY))?;
    Ok(minus * inv)
}

/// Edge unitary at `(E, k1)`.
pub fn edge_unitary_at(model: &HoppingModel, energy: f64, k1: f64, tol: &Tolerances) -> Result<CMat, EdgeError> {
    let t = vertical_cell_transfer(model, energy, k1, tol)?;
    let frame = contracting_frame(&t, tol).map_err(|e| match e {
        EdgeError::NotInGap { distance, .. } => EdgeError::NotInGap { k1, distance },
        other => other,
    })?;
    edge_unitary(&frame)
}

/// Eigenphases in `(-pi, pi]` of the edge unitary at `(E, k1)`.
pub fn eigenphases(model: &HoppingModel, energy: f64, k1: f64, tol: &Tolerances) -> Result<Vec<f64>, EdgeError> {
    let u = edge_unitary_at(model, energy, k1, tol)?;
    let schur = SchurForm::new(&u).ok_or(EdgeError::ConvergenceFailure)?;
    Ok(schur.eigenvalues().iter().map(|z| z.arg()).collect())
}

/// A zero of an eigenphase of the edge unitary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCrossing {
    pub k1: f64,
    /// Net direction of crossing: `nu_plus - nu_minus`, clamped to `{-1, 0, 1}`
    /// for degenerate crossings with cancelling branches.
    pub slope_sign: i32,
    pub multiplicity: usize,
    /// Derivative of the eigenphase at the crossing (mean over branches).
    pub theta_slope: f64,
    pub nu_plus: usize,
    pub nu_minus: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingOptions {
    pub n_k1: usize,
    pub max_refinements: usize,
    pub refine_tol: f64,
    /// Largest admissible eigenphase change between neighbouring grid points.
    pub max_jump: f64,
    /// Crossings closer than this in `k1` are merged.
    pub merge_tol: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self { n_k1: 629, max_refinements: 3, refine_tol: 1e-10, max_jump: PI / 4.0, merge_tol: 1e-7 }
    }
}

/// Greedy matching of two sets of phases by circular distance.
fn match_phases(from: &[f64], to: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(from.len() * to.len());
    for (i, a) in from.iter().enumerate() {
        for (j, b) in to.iter().enumerate() {
            pairs.push((i, j, wrap_angle(b - a)));
        }
    }
    pairs.sort_by(|x, y| x.2.abs().partial_cmp(&y.2.abs()).unwrap());
    let mut used_from = vec![false; from.len()];
    let mut used_to = vec![false; to.len()];
    let mut out = Vec::with_capacity(from.len());
    for (i, j, d) in pairs {
        if !used_from[i] && !used_to[j] {
            used_from[i] = true;
            used_to[j] = true;
            out.push((i, j, d));
        }
    }
    out.sort_by_key(|x| x.0);
    out
}

/// Branch value near `target`: the eigenphase closest to it on the circle.
fn nearest_phase(phases: &[f64], target: f64) -> f64 {
    *phases
        .iter()
        .min_by(|a, b| wrap_angle(**a - target).abs().partial_cmp(&wrap_angle(**b - target).abs()).unwrap())
        .expect("non-empty phase list")
}

struct Bracket {
    lo: f64,
    hi: f64,
    theta_lo: f64,
    theta_hi: f64,
}

fn refine_crossing(
    model: &HoppingModel,
    energy: f64,
    mut br: Bracket,
    opts: &CrossingOptions,
    tol: &Tolerances,
) -> Result<(f64, f64), EdgeError> {
    let upward = br.theta_lo < 0.0;
    while br.hi - br.lo > opts.refine_tol {
        let mid = 0.5 * (br.lo + br.hi);
        let phases = eigenphases(model, energy, mid, tol)?;
        let guess = 0.5 * (br.theta_lo + br.theta_hi);
        let theta = nearest_phase(&phases, guess);
        if (theta < 0.0) == upward {
            br.lo = mid;
            br.theta_lo = theta;
        } else {
            br.hi = mid;
            br.theta_hi = theta;
        }
    }
    let k = 0.5 * (br.lo + br.hi);
    let h = 10.0 * opts.refine_tol;
    let plus = nearest_phase(&eigenphases(model, energy, k + h, tol)?, 0.0);
    let minus = nearest_phase(&eigenphases(model, energy, k - h, tol)?, 0.0);
    let slope = wrap_angle(plus - minus) / (2.0 * h);
    Ok((k, slope))
}

/// Grid scan for eigenphase zeros followed by bisection.
pub fn edge_crossings(
    model: &HoppingModel,
    energy: f64,
    opts: &CrossingOptions,
    tol: &Tolerances,
) -> Result<Vec<EdgeCrossing>, EdgeError> {
    // `n_k1` counts the points of the closed interval [-pi, pi]. The scan uses
    // the same number of periodic windows, made even and offset by half a
    // step, so that the symmetric momenta 0 and pi fall strictly inside one.
    let mut n = (opts.n_k1.max(9) - 1).next_multiple_of(2);
    let mut refinements = 0;
    let scan = loop {
        let step = 2.0 * PI / n as f64;
        let grid: Vec<f64> = (0..n).map(|j| -PI + step * (j as f64 + 0.5)).collect();
        let phases: Vec<Vec<f64>> =
            grid.par_iter().map(|&k| eigenphases(model, energy, k, tol)).collect::<Result<_, _>>()?;
        let matched: Vec<Vec<(usize, usize, f64)>> =
            (0..n).map(|j| match_phases(&phases[j], &phases[(j + 1) % n])).collect();
        let ambiguous = matched.iter().flatten().any(|m| m.2.abs() > opts.max_jump);
        if !ambiguous {
            break (grid, phases, matched, step);
        }
        if refinements == opts.max_refinements {
            return Err(EdgeError::PhaseTrackingAmbiguous { refinements });
        }
        refinements += 1;
        n *= 2;
    };
    let (grid, phases, matched, step) = scan;
    let at_zero: Vec<bool> = phases.iter().map(|ph| ph.iter().any(|t| t.abs() < 1e-9)).collect();
    if let Some(j) = (0..n).find(|&j| (0..3).all(|d| at_zero[(j + d) % n])) {
        return Err(EdgeError::FlatBandDetected(grid[j]));
    }
    let mut brackets: Vec<(Bracket, i32)> = Vec::new();
    for (j, pairs) in matched.iter().enumerate() {
        let next = (j + 1) % n;
        for &(a, b, delta) in pairs {
            let start = phases[j][a];
            let end = start + delta;
            let up = start < 0.0 && end >= 0.0;
            let down = start >= 0.0 && end < 0.0;
            if up || down {
                let br = Bracket { lo: grid[j], hi: grid[j] + step, theta_lo: start, theta_hi: phases[next][b] };
                brackets.push((br, if up { 1 } else { -1 }));
            }
        }
    }
    let mut raw: Vec<(f64, i32, f64)> = brackets
        .into_par_iter()
        .map(|(br, dir)| refine_crossing(model, energy, br, opts, tol).map(|(k, slope)| (wrap_angle(k), dir, slope)))
        .collect::<Result<_, _>>()?;
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(Vec<(f64, i32, f64)>,)> = Vec::new();
    for item in raw {
        match out.last_mut() {
            Some((group,)) if wrap_angle(item.0 - group[0].0).abs() < opts.merge_tol => group.push(item),
            _ => out.push((vec![item],)),
        }
    }
    // Merge across the seam at k1 = pi.
    if out.len() > 1 {
        let first_k = out[0].0[0].0;
        let last_k = out.last().unwrap().0[0].0;
        if wrap_angle(first_k - last_k).abs() < opts.merge_tol {
            let (tail,) = out.pop().unwrap();
            out[0].0.extend(tail);
        }
    }
    Ok(out
        .into_iter()
        .map(|(group,)| {
            let nu_plus = group.iter().filter(|g| g.1 > 0).count();
            let nu_minus = group.len() - nu_plus;
            let base = group[0].0;
            let shift = group.iter().map(|g| wrap_angle(g.0 - base)).sum::<f64>() / group.len() as f64;
            let k1 = wrap_angle(base + shift);
            let theta_slope = group.iter().map(|g| g.2).sum::<f64>() / group.len() as f64;
            EdgeCrossing {
                k1,
                slope_sign: (nu_plus as i32 - nu_minus as i32).signum(),
                multiplicity: group.len(),
                theta_slope,
                nu_plus,
                nu_minus,
            }
        })
        .collect())
}

/// Edge crossings, the induced unimodular spectrum and its invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeInvariants {
    pub energy: f64,
    pub crossings: Vec<EdgeCrossing>,
    pub eigenvalues: Vec<KreinEigenvalue>,
    pub kind: Option<SymmetryKind>,
    pub invariants: InvariantSet,
}

/// Unimodular eigenvalues `e^{i k1}` of the half-plane transfer operator.
pub fn crossings_to_eigenvalues(crossings: &[EdgeCrossing]) -> Vec<KreinEigenvalue> {
    crossings
        .iter()
        .map(|c| KreinEigenvalue {
            lambda: Complex64::from_polar(1.0, c.k1),
            multiplicity: c.multiplicity,
            nu_plus: c.nu_plus,
            nu_minus: c.nu_minus,
        })
        .collect()
}

pub fn edge_invariants(
    model: &HoppingModel,
    energy: f64,
    opts: &CrossingOptions,
    tol: &Tolerances,
) -> Result<EdgeInvariants, EdgeError> {
    let crossings = edge_crossings(model, energy, opts, tol)?;
    let eigenvalues = crossings_to_eigenvalues(&crossings);
    let kind = model.transfer_symmetries(energy, 1).kind();
    let invariants = invariants_for_kind(&eigenvalues, kind)?;
    Ok(EdgeInvariants { energy, crossings, eigenvalues, kind, invariants })
}

/// Chern number of the Fermi projection below `E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernNumber {
    pub value: i64,
    pub raw: f64,
    pub residual: f64,
    pub occupied: usize,
}

/// Lattice field strength method on an `n1 x n2` grid of the reduced zone
/// `(-pi, pi] x (-pi/p, pi/p]`, glued along `k2` with the Floquet gauge.
pub fn chern_number(model: &HoppingModel, energy: f64, n1: usize, n2: usize) -> Result<ChernNumber, EdgeError> {
    let p = model.p;
    let gauge = floquet_gauge(model);
    let k1s: Vec<f64> = (0..n1).map(|i| -PI + 2.0 * PI * i as f64 / n1 as f64).collect();
    let k2s: Vec<f64> = (0..n2).map(|j| -PI / p as f64 + 2.0 * PI / p as f64 * j as f64 / n2 as f64).collect();
    let rows: Vec<Vec<(CMat, usize, f64)>> = k1s
        .par_iter()
        .map(|&k1| {
            k2s.iter()
                .map(|&k2| {
                    let (vals, vecs) = hermitian_eig(&bloch_hamiltonian(model, k1, k2));
                    let gap = vals.iter().map(|v| (v - energy).abs()).fold(f64::INFINITY, f64::min);
                    let m = vals.iter().filter(|v| **v < energy).count();
                    (vecs.columns(0, m).into_owned(), m, gap)
                })
                .collect()
        })
        .collect();
    let occupied = rows[0][0].1;
    for (i, row) in rows.iter().enumerate() {
        for (_, m, gap) in row {
            if *gap < crate::tight_binding::GAP_MARGIN_BANDS || *m != occupied {
                return Err(EdgeError::NotInGap { k1: k1s[i], distance: *gap });
            }
        }
    }
    let frames: Vec<Vec<CMat>> = rows.into_iter().map(|r| r.into_iter().map(|f| f.0).collect()).collect();
    let link = |a: &CMat, b: &CMat| -> Complex64 {
        let d = (a.adjoint() * b).determinant();
        if d.norm() == 0.0 {
            c64(1.0, 0.0)
        } else {
            d / d.norm()
        }
    };
    let frame_at = |i: usize, j: usize| -> CMat {
        let i = i % n1;
        if j < n2 {
            frames[i][j].clone()
        } else {
            &gauge * &frames[i][j - n2]
        }
    };
    let mut total = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let f00 = frame_at(i, j);
            let f10 = frame_at(i + 1, j);
            let f11 = frame_at(i + 1, j + 1);
            let f01 = frame_at(i, j + 1);
            let w = link(&f00, &f10) * link(&f10, &f11) * link(&f11, &f01) * link(&f01, &f00);
            total += w.arg();
        }
    }
    let raw = total / (2.0 * PI);
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual > 0.01 {
        return Err(EdgeError::NonIntegral { raw });
    }
    Ok(ChernNumber { value: value as i64, raw, residual, occupied })
}

/// Sign of the drift of each crossing momentum with the energy, from
/// crossings recomputed at `E - delta` and `E + delta` and matched to the
/// nearest one.
pub fn crossing_drift(
    model: &HoppingModel,
    energy: f64,
    delta: f64,
    crossings: &[EdgeCrossing],
    opts: &CrossingOptions,
    tol: &Tolerances,
) -> Result<Vec<f64>, EdgeError> {
    let below = edge_crossings(model, energy - delta, opts, tol)?;
    let above = edge_crossings(model, energy + delta, opts, tol)?;
    let nearest = |list: &[EdgeCrossing], k: f64| -> Option<f64> {
        list.iter().map(|c| c.k1).min_by(|a, b| wrap_angle(a - k).abs().partial_cmp(&wrap_angle(b - k).abs()).unwrap())
    };
    Ok(crossings
        .iter()
        .map(|c| match (nearest(&below, c.k1), nearest(&above, c.k1)) {
            (Some(lo), Some(hi)) => wrap_angle(hi - lo) / (2.0 * delta),
            _ => f64::NAN,
        })
        .collect())
}

/// Row-to-row hopping of the half-plane restricted to rows `0..rows`.
fn half_space_hopping(model: &HoppingModel, rows: usize) -> CMat {
    let l = model.l;
    let mut a = CMat::zeros(rows * l, rows * l);
    for n in 0..rows {
        let [diag, up, down] = model.a_blocks(n as i64);
        a.view_mut((n * l, n * l), (l, l)).copy_from(&diag);
        if n + 1 < rows {
            a.view_mut((n * l, (n + 1) * l), (l, l)).copy_from(&up);
        }
        if n >= 1 {
            a.view_mut((n * l, (n - 1) * l), (l, l)).copy_from(&down);
        }
    }
    a
}

/// Krein form `i <v, I v>` of the unimodular transfer eigenvector
/// `v = (e^{i k1} A phi, phi)` built from the eigenvector `phi` of the
/// half-plane operator truncated to `rows` rows whose eigenvalue is closest
/// to `E`. Its sign is the inertia of the crossing, independently of any
/// eigenphase slope. Returns the form value and the eigenvalue distance.
pub fn edge_state_form(model: &HoppingModel, energy: f64, k1: f64, rows: usize) -> (f64, f64) {
    let h = half_space_hamiltonian(model, k1, rows);
    let (vals, vecs) = hermitian_eig(&h);
    let (idx, distance) = vals
        .iter()
        .map(|v| (v - energy).abs())
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("non-empty half-plane spectrum");
    let phi = vecs.column(idx).into_owned();
    let top = half_space_hopping(model, rows) * &phi * Complex64::from_polar(1.0, k1);
    // i <v, I v> with I = [[0, -1], [1, 0]] equals 2 Im <top, phi>.
    let cross = top.dotc(&phi);
    (2.0 * cross.im, distance)
}

/// Edge crossings at one energy of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySlice {
    pub energy: f64,
    /// `None` when the energy is not in a bulk gap.
    pub crossings: Option<Vec<EdgeCrossing>>,
    pub status: String,
}

/// Edge crossings for `n_e` equidistant energies in `[e_min, e_max]`.
/// Energies in a band, or where the scan fails, keep their error message.
pub fn edge_bands(
    model: &HoppingModel,
    e_min: f64,
    e_max: f64,
    n_e: usize,
    opts: &CrossingOptions,
    tol: &Tolerances,
) -> Vec<EnergySlice> {
    let energies: Vec<f64> = match n_e {
        0 => Vec::new(),
        1 => vec![e_min],
        _ => (0..n_e).map(|i| e_min + (e_max - e_min) * i as f64 / (n_e - 1) as f64).collect(),
    };
    energies
        .par_iter()
        .map(|&energy| match edge_crossings(model, energy, opts, tol) {
            Ok(c) => EnergySlice { energy, crossings: Some(c), status: "gap".into() },
            Err(e) => EnergySlice { energy, crossings: None, status: e.to_string() },
        })
        .collect()
}

/// Spectrum of the truncated half-plane operator on `cells` periods of rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfSpaceBands {
    pub k1: Vec<f64>,
    pub energies: Vec<Vec<f64>>,
}

pub fn half_space_bands(model: &HoppingModel, cells: usize, n_k1: usize) -> HalfSpaceBands {
    let rows = cells * model.p;
    let k1: Vec<f64> = (0..n_k1).map(|i| -PI + 2.0 * PI * i as f64 / n_k1 as f64).collect();
    let energies = k1.par_iter().map(|&k| hermitian_eig(&half_space_hamiltonian(model, k, rows)).0).collect();
    HalfSpaceBands { k1, energies }
}

/// Bulk band energies along `k1` for every sampled `k2`, for overlays.
pub fn projected_bulk_bands(model: &HoppingModel, n_k1: usize, n_k2: usize) -> Vec<(f64, Vec<f64>)> {
    let k1: Vec<f64> = (0..n_k1).map(|i| -PI + 2.0 * PI * i as f64 / n_k1 as f64).collect();
    let k2 = k2_grid(model.p, n_k2);
    k1.par_iter()
        .map(|&a| {
            let mut all: Vec<f64> = k2.iter().flat_map(|&b| hermitian_eig(&bloch_hamiltonian(model, a, b)).0).collect();
            all.sort_by(|x, y| x.partial_cmp(y).unwrap());
            (a, all)
        })
        .collect()
}
