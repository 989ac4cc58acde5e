//! Eigenvalue clustering, Riesz projections and model collision paths.
//!
//! A [`Decomposition`] holds the complex Schur form of a matrix together with
//! its eigenvalues grouped into clusters. Two eigenvalues share a cluster when
//! they are linked by a chain of steps shorter than the clustering radius, so
//! distinct clusters are always at least that radius apart.
//!
//! Spectral projections are built from ordered Schur frames: the right frame
//! `F` spans the invariant subspace of the cluster and the left frame `G`
//! spans the invariant subspace of `T*` for the conjugate eigenvalues. The
//! projection is then `F (G* F)^{-1} G*`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krein::{Sign, Symmetries};
use crate::linalg::{block2, c64, condition_number, eye, real_part, CMat, RMat, SchurForm, I_UNIT};
use crate::tolerance::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("Schur iteration did not converge for a {0}x{0} matrix")]
    ConvergenceFailure(usize),
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("cluster index {index} out of range ({count} clusters)")]
    NoSuchCluster { index: usize, count: usize },
    #[error("spectral projection is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("invalid scenario parameters: {0}")]
    BadParams(String),
}

/// A group of numerically coalescing eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Arithmetic mean of the member eigenvalues.
    pub center: Complex64,
    /// Positions of the members in [`Decomposition::eigenvalues`].
    pub members: Vec<usize>,
    /// Distance from the cluster to the nearest eigenvalue outside it.
    pub isolation: f64,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub matrix: CMat,
    pub schur: SchurForm,
    pub eigenvalues: Vec<Complex64>,
    pub clusters: Vec<Cluster>,
    /// Clustering radius used to build `clusters`.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct RieszProjection {
    pub projection: CMat,
    /// Orthonormal basis of the range.
    pub right_frame: CMat,
    /// Orthonormal basis of the range of the adjoint projection.
    pub left_frame: CMat,
    pub condition: f64,
}

fn ensure_square(m: &CMat) -> Result<(), SpectralError> {
    if m.nrows() != m.ncols() {
        return Err(SpectralError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

/// Single-linkage grouping of points closer than `gap`.
pub fn cluster_points(points: &[Complex64], gap: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() < gap {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(slot) => groups[slot].push(i),
            None => {
                root_slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Schur form, eigenvalues and clusters of `t` using clustering radius `gap`.
pub fn decompose(t: &CMat, gap: f64) -> Result<Decomposition, SpectralError> {
    ensure_square(t)?;
    let schur = SchurForm::new(t).ok_or(SpectralError::ConvergenceFailure(t.nrows()))?;
    let eigenvalues = schur.eigenvalues();
    let groups = cluster_points(&eigenvalues, gap);
    let clusters = groups
        .into_iter()
        .map(|members| {
            let sum: Complex64 = members.iter().map(|&i| eigenvalues[i]).sum();
            let center = sum / members.len() as f64;
            let mut isolation = f64::INFINITY;
            for (i, z) in eigenvalues.iter().enumerate() {
                if !members.contains(&i) {
                    for &m in &members {
                        isolation = isolation.min((z - eigenvalues[m]).norm());
                    }
                }
            }
            Cluster { center, members, isolation }
        })
        .collect();
    Ok(Decomposition { matrix: t.clone(), schur, eigenvalues, clusters, gap })
}

impl Decomposition {
    fn cluster(&self, index: usize) -> Result<&Cluster, SpectralError> {
        self.clusters.get(index).ok_or(SpectralError::NoSuchCluster { index, count: self.clusters.len() })
    }

    /// Orthonormal basis of the invariant subspace belonging to a cluster.
    pub fn right_frame(&self, index: usize) -> Result<CMat, SpectralError> {
        let cluster = self.cluster(index)?;
        let values: Vec<Complex64> = cluster.members.iter().map(|&i| self.eigenvalues[i]).collect();
        let radius = self.gap * 0.5;
        Ok(self.schur.invariant_frame(|z| values.iter().any(|v| (z - v).norm() < radius)))
    }

    /// Index of the cluster containing the eigenvalue closest to `z`.
    pub fn cluster_near(&self, z: Complex64) -> Option<usize> {
        let nearest = self
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - z).norm().partial_cmp(&(b.1 - z).norm()).unwrap())?
            .0;
        self.clusters.iter().position(|c| c.members.contains(&nearest))
    }
}

/// Spectral projection onto the invariant subspace of one cluster.
pub fn riesz_projection(dec: &Decomposition, index: usize, tol: &Tolerances) -> Result<RieszProjection, SpectralError> {
    let cluster = dec.cluster(index)?;
    let right = dec.right_frame(index)?;
    let adjoint = dec.matrix.adjoint();
    let mut left_work = SchurForm::new(&adjoint).ok_or(SpectralError::ConvergenceFailure(adjoint.nrows()))?;
    let targets: Vec<Complex64> = cluster.members.iter().map(|&i| dec.eigenvalues[i].conj()).collect();
    let k = targets.len();
    // Pick the k eigenvalues of T* nearest to the conjugated cluster.
    let left_vals = left_work.eigenvalues();
    let mut ranked: Vec<(usize, f64)> = left_vals
        .iter()
        .enumerate()
        .map(|(i, z)| (i, targets.iter().map(|t| (z - t).norm()).fold(f64::INFINITY, f64::min)))
        .collect();
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut mask = vec![false; left_vals.len()];
    for &(i, _) in ranked.iter().take(k) {
        mask[i] = true;
    }
    let placed = left_work.reorder_mask(&mask);
    let left = left_work.q.columns(0, placed).into_owned();
    let overlap = left.adjoint() * &right;
    let condition = condition_number(&overlap);
    if !condition.is_finite() || condition > tol.max_condition {
        return Err(SpectralError::IllConditioned { condition });
    }
    let inv = overlap.clone().lu().try_inverse().ok_or(SpectralError::IllConditioned { condition: f64::INFINITY })?;
    let projection = &right * inv * left.adjoint();
    Ok(RieszProjection { projection, right_frame: right, left_frame: left, condition })
}

/// Clusters whose center lies within `tol.circle` of the unit circle.
pub fn unit_circle_spectrum<'a>(dec: &'a Decomposition, tol: &Tolerances) -> Vec<(usize, &'a Cluster)> {
    dec.clusters.iter().enumerate().filter(|(_, c)| (c.center.norm() - 1.0).abs() < tol.circle).collect()
}

/// Smallest distance from any eigenvalue to the unit circle.
pub fn distance_to_circle(eigenvalues: &[Complex64]) -> f64 {
    eigenvalues.iter().map(|z| (z.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min)
}

/// One-parameter families of Krein-unitary matrices illustrating how
/// unimodular eigenvalues can or cannot leave the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    /// Collision of two eigenvalues of opposite inertia at `lambda`. The shear
    /// `a` makes the collision point a Jordan block. With `fundamental = Minus`
    /// the family is conjugated into the symplectic normal form.
    #[serde(rename = "krein_2x2")]
    Krein2x2 { lambda: Complex64, a: f64, fundamental: Sign },
    /// Real `O(1,1)` block with eigenvalues `lambda` and `-lambda`.
    O11Block { sigma: f64, kappa: f64, lambda: f64 },
    /// Realification of the two-by-two collision at `exp(i alpha)`: four
    /// eigenvalues meet pairwise at `exp(+-i alpha)` and leave together.
    Quadruple { alpha: f64, a: f64 },
    /// Three-by-three real family in `O(2,1)`. A pair `exp(+-i w)` of positive
    /// inertia meets the negative eigenvalue at `orientation` (+1 or -1), after
    /// which the eigenvalue left on the circle carries the opposite inertia.
    Mediated { orientation: f64 },
}

/// Family member at parameter `t`, together with its symmetries.
pub fn collision_path(scenario: &Scenario, t: f64) -> Result<(CMat, Symmetries), SpectralError> {
    let bad = |msg: &str| SpectralError::BadParams(msg.to_string());
    if !t.is_finite() {
        return Err(bad("parameter must be finite"));
    }
    match *scenario {
        Scenario::Krein2x2 { lambda, a, fundamental } => {
            if (lambda.norm() - 1.0).abs() > 1e-12 || !a.is_finite() {
                return Err(bad("krein_2x2 needs |lambda| = 1 and finite shear"));
            }
            let core = krein_core_block(a, t) * lambda;
            match fundamental {
                Sign::Plus => {
                    let sym = Symmetries::new(diag_real(&[1.0, -1.0])).expect("valid form");
                    Ok((core, sym))
                }
                Sign::Minus => {
                    // C* J C = iI, so conjugating by the Cayley transform moves
                    // the family into the symplectic normal form.
                    let cayley = cayley(1);
                    let m = cayley.adjoint() * core * &cayley;
                    let sym = Symmetries::new(symplectic_unit(1)).expect("valid form");
                    Ok((m, sym))
                }
            }
        }
        Scenario::O11Block { sigma, kappa, lambda } => {
            if sigma.abs() != 1.0 || kappa.abs() != 1.0 || lambda.abs() != 1.0 {
                return Err(bad("o11_block needs sigma, kappa, lambda in {1, -1}"));
            }
            let (ch, sh) = (t.cosh(), t.sinh());
            let m = RMat::from_row_slice(2, 2, &[sigma * ch, kappa * sh, -kappa * sh, -sigma * ch]) * lambda;
            let sym = Symmetries::new(diag_real(&[1.0, -1.0]))
                .and_then(|s| s.with_real(RMat::identity(2, 2)))
                .expect("valid symmetries");
            Ok((m.map(|x| c64(x, 0.0)), sym))
        }
        Scenario::Quadruple { alpha, a } => {
            if alpha.sin().abs() <= 1e-6 || alpha.is_nan() || !a.is_finite() {
                return Err(bad("quadruple needs alpha away from 0 and pi"));
            }
            let core = krein_core_block(a, t) * Complex64::from_polar(1.0, alpha);
            let x = real_part(&core);
            let y = core.map(|z| z.im);
            let m = RMat::from_fn(4, 4, |i, j| match (i / 2, j / 2) {
                (0, 0) | (1, 1) => x[(i % 2, j % 2)],
                (0, 1) => -y[(i % 2, j % 2)],
                _ => y[(i % 2, j % 2)],
            });
            let sym = Symmetries::new(diag_real(&[1.0, -1.0, 1.0, -1.0]))
                .and_then(|s| s.with_real(RMat::identity(4, 4)))
                .expect("valid symmetries");
            Ok((m.map(|x| c64(x, 0.0)), sym))
        }
        Scenario::Mediated { orientation } => {
            if orientation.abs() != 1.0 {
                return Err(bad("mediated needs orientation in {1, -1}"));
            }
            // Rotation in the positive plane plus a boost of strength t; the
            // family is elliptic for |t| < 1 and hyperbolic for |t| > 1.
            let gen = RMat::from_row_slice(3, 3, &[0.0, -1.0, t, 1.0, 0.0, 0.0, t, 0.0, 0.0]);
            let m = gen.exp() * orientation;
            let sym = Symmetries::new(diag_real(&[1.0, 1.0, -1.0]))
                .and_then(|s| s.with_real(RMat::identity(3, 3)))
                .expect("valid symmetries");
            Ok((m.map(|x| c64(x, 0.0)), sym))
        }
    }
}

/// `M(a) B(t)` with a nilpotent shear `M(a)` and a boost `B(t)`, both
/// unitary for the form `diag(1, -1)`.
fn krein_core_block(a: f64, t: f64) -> CMat {
    let shear = CMat::from_row_slice(2, 2, &[c64(1.0, -a), c64(0.0, a), c64(0.0, -a), c64(1.0, a)]);
    let (ch, sh) = (c64(t.cosh(), 0.0), c64(t.sinh(), 0.0));
    let boost = CMat::from_row_slice(2, 2, &[ch, sh, sh, ch]);
    shear * boost
}

fn diag_real(d: &[f64]) -> RMat {
    RMat::from_diagonal(&nalgebra::DVector::from_row_slice(d))
}

/// `[[0, -1], [1, 0]]` with `n x n` blocks.
pub fn symplectic_unit(n: usize) -> RMat {
    let mut m = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = -1.0;
        m[(n + i, i)] = 1.0;
    }
    m
}

/// Cayley transform `(1/sqrt 2) [[1, -i], [1, i]]` with `n x n` blocks.
pub fn cayley(n: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let id = eye(n) * c64(s, 0.0);
    block2(&id, &(&id * (-I_UNIT)), &id, &(&id * I_UNIT))
}

/// Whether `p` is idempotent up to `tol` relative to its size.
pub fn is_projection(p: &CMat, tol: f64) -> bool {
    (p * p - p).norm() <= tol * p.norm().max(1.0)
}
