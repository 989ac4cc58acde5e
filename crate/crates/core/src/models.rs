//! Constructors for the four example models.
//!
//! Hopping data is assembled from bonds: `H_{(n, i), (n + d, j)} = t` for a
//! lattice displacement `d` and fiber indices `i`, `j`. The bond list is then
//! folded into the coefficient matrices of [`HoppingModel`]: `W1` hops along
//! `+e1`, `W2*` along `+e2`, `W3` along `e1 + e2`, `W4` along `e2 - e1`, and
//! `V` is on site.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{c64, CMat, RMat};
use crate::tight_binding::{FiberSymmetry, HoppingModel, ModelSymmetries, TightBindingError};

/// Accumulates Hermitian hopping terms by lattice displacement.
#[derive(Debug, Clone)]
pub struct BondList {
    l: usize,
    blocks: BTreeMap<(i32, i32), CMat>,
}

impl BondList {
    pub fn new(l: usize) -> Self {
        Self { l, blocks: BTreeMap::new() }
    }

    fn block(&mut self, d: (i32, i32)) -> &mut CMat {
        let l = self.l;
        self.blocks.entry(d).or_insert_with(|| CMat::zeros(l, l))
    }

    /// Adds `t` to `H_{(n, i), (n + d, j)}` and its Hermitian partner.
    pub fn hop(&mut self, d: (i32, i32), i: usize, j: usize, t: Complex64) -> &mut Self {
        self.block(d)[(i, j)] += t;
        self.block((-d.0, -d.1))[(j, i)] += t.conj();
        self
    }

    /// Adds `v` to the on-site entry `(i, i)`.
    pub fn onsite(&mut self, i: usize, v: f64) -> &mut Self {
        self.block((0, 0))[(i, i)] += c64(v, 0.0);
        self
    }

    /// `W1..W4` and `V`, or an error if a bond is not representable.
    pub fn coefficients(&self) -> Result<([CMat; 4], CMat), TightBindingError> {
        let allowed = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (-1, 1), (1, -1)];
        if let Some(d) = self.blocks.keys().find(|d| !allowed.contains(d)) {
            return Err(TightBindingError::InvalidModel(format!("bond displacement {d:?} is not supported")));
        }
        let get = |d| self.blocks.get(&d).cloned().unwrap_or_else(|| CMat::zeros(self.l, self.l));
        let w = [get((1, 0)), get((0, 1)).adjoint(), get((1, 1)), get((-1, 1))];
        Ok((w, get((0, 0))))
    }

    pub fn into_model(self, name: &str, q: i64, p: usize) -> Result<HoppingModel, TightBindingError> {
        let (w, v) = self.coefficients()?;
        HoppingModel::new(name, q, p, w, v)
    }
}

/// Parameters of the built-in models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Harper { q: i64, p: usize },
    KaneMele { lambda_so: f64, lambda_ra: f64, lambda_st: f64 },
    PIp { delta: f64, mu: f64, q: i64, p: usize, chirality: i8 },
    DId { delta: f64, mu: f64, q: i64, p: usize, chirality: i8 },
}

impl ModelParams {
    pub fn build(&self) -> Result<HoppingModel, TightBindingError> {
        match *self {
            Self::Harper { q, p } => harper(q, p),
            Self::KaneMele { lambda_so, lambda_ra, lambda_st } => kane_mele(lambda_so, lambda_ra, lambda_st),
            Self::PIp { delta, mu, q, p, chirality } => p_ip(delta, mu, q, p, chirality_sign(chirality)?),
            Self::DId { delta, mu, q, p, chirality } => d_id(delta, mu, q, p, chirality_sign(chirality)?),
        }
    }
}

fn chirality_sign(c: i8) -> Result<f64, TightBindingError> {
    match c {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(TightBindingError::InvalidModel(format!("chirality must be +1 or -1, got {c}"))),
    }
}

fn real(rows: usize, data: &[f64]) -> RMat {
    RMat::from_row_slice(rows, rows, data)
}

/// Magnetic Laplacian on the square lattice at flux `2 pi q / p`.
pub fn harper(q: i64, p: usize) -> Result<HoppingModel, TightBindingError> {
    let mut bonds = BondList::new(1);
    bonds.hop((1, 0), 0, 0, c64(1.0, 0.0)).hop((0, 1), 0, 0, c64(1.0, 0.0));
    bonds.into_model("harper", q, p)
}

/// Kane-Mele model on the honeycomb lattice with spin one half, without flux.
///
/// The fiber is `sublattice (x) spin`, index `2 s + sigma` with `A = 0`,
/// `B = 1` and `sigma = 0` for spin up. In Cartesian coordinates
/// `a1 = (1, 0)`, `a2 = (1/2, sqrt 3 / 2)` and the `B` site of a cell sits at
/// `(a1 + a2) / 3`. The terms are
///
/// * nearest neighbour hopping `1`,
/// * intrinsic spin-orbit coupling `i (lambda_so / 6) nu_ij sigma_z` between
///   next nearest neighbours, with `nu_ij = +1` for a left turn,
/// * Rashba coupling `i (lambda_ra / 3) (sigma x d_ij)_z` on nearest neighbour
///   bonds with unit bond vector `d_ij`,
/// * staggered potential `+lambda_st` on `A` and `-lambda_st` on `B`.
///
/// Each coupling is shared out over the bonds of a site: six next nearest
/// and three nearest neighbours.
///
/// In this embedding the hopping between consecutive columns is singular at
/// `k2 = 0` and the hopping between consecutive rows at `k1 = 0`, so momentum
/// grids for this model must avoid these points.
pub fn kane_mele(lambda_so: f64, lambda_ra: f64, lambda_st: f64) -> Result<HoppingModel, TightBindingError> {
    kane_mele_amplitudes(lambda_so / 6.0, lambda_ra / 3.0, lambda_st)
}

/// Kane-Mele model from the raw bond amplitudes: spin-orbit `so` on next
/// nearest neighbour bonds, Rashba `ra` on nearest neighbour bonds and the
/// staggered potential `st`.
pub fn kane_mele_amplitudes(so: f64, ra: f64, st: f64) -> Result<HoppingModel, TightBindingError> {
    let (lambda_ra, lambda_st) = (ra, st);
    let a1 = [1.0, 0.0];
    let a2 = [0.5, 3f64.sqrt() / 2.0];
    let basis = [[0.0, 0.0], [(a1[0] + a2[0]) / 3.0, (a1[1] + a2[1]) / 3.0]];
    let pos = |cell: (i32, i32), s: usize| -> [f64; 2] {
        [
            cell.0 as f64 * a1[0] + cell.1 as f64 * a2[0] + basis[s][0],
            cell.0 as f64 * a1[1] + cell.1 as f64 * a2[1] + basis[s][1],
        ]
    };
    let idx = |s: usize, sigma: usize| 2 * s + sigma;
    let cells: Vec<(i32, i32)> = (-1..=1).flat_map(|i| (-1..=1).map(move |j| (i, j))).collect();
    let nn_len = 1.0 / 3f64.sqrt();
    let near = |x: f64, y: f64| (x - y).abs() < 1e-9;
    let dist = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();

    let mut bonds = BondList::new(4);
    for sigma in 0..2 {
        let v = lambda_st;
        bonds.onsite(idx(0, sigma), v).onsite(idx(1, sigma), -v);
    }
    // Each bond is visited from the A site of cell 0 (nearest neighbours) or
    // from either sublattice in cell 0 towards half of the displacements
    // (next nearest neighbours), so every bond is added exactly once.
    for &cell in &cells {
        let target = pos(cell, 1);
        let origin = pos((0, 0), 0);
        if near(dist(origin, target), nn_len) {
            let d = [(target[0] - origin[0]) / nn_len, (target[1] - origin[1]) / nn_len];
            for sigma in 0..2 {
                bonds.hop(cell, idx(0, sigma), idx(1, sigma), c64(1.0, 0.0));
            }
            // i lambda (sigma_x d_y - sigma_y d_x)
            let up_down = c64(0.0, lambda_ra) * (c64(d[1], 0.0) - c64(0.0, -1.0) * d[0]);
            let down_up = c64(0.0, lambda_ra) * (c64(d[1], 0.0) - c64(0.0, 1.0) * d[0]);
            bonds.hop(cell, idx(0, 0), idx(1, 1), up_down);
            bonds.hop(cell, idx(0, 1), idx(1, 0), down_up);
        }
    }
    for s in 0..2 {
        for &cell in &cells {
            if cell <= (0, 0) {
                continue;
            }
            let origin = pos((0, 0), s);
            let target = pos(cell, s);
            if !near(dist(origin, target), 1.0) {
                continue;
            }
            // The intermediate site is the common nearest neighbour on the
            // other sublattice; nu is the orientation of the two legs.
            let mid = cells
                .iter()
                .flat_map(|&c| [(-1i32, 0i32), (0, 0), (1, 0)].into_iter().map(move |o| (c.0 + o.0, c.1)))
                .map(|c| pos(c, 1 - s))
                .find(|&m| near(dist(origin, m), nn_len) && near(dist(m, target), nn_len))
                .expect("next nearest neighbours share a nearest neighbour");
            let leg1 = [mid[0] - origin[0], mid[1] - origin[1]];
            let leg2 = [target[0] - mid[0], target[1] - mid[1]];
            let nu = (leg1[0] * leg2[1] - leg1[1] * leg2[0]).signum();
            for (sigma, sz) in [(0, 1.0), (1, -1.0)] {
                bonds.hop(cell, idx(s, sigma), idx(s, sigma), c64(0.0, so * nu * sz));
            }
        }
    }
    let is = real(2, &[0.0, 1.0, -1.0, 0.0]);
    let trs = FiberSymmetry::new(crate::linalg::rkron(&RMat::identity(2, 2), &is))?;
    bonds.into_model("kane_mele", 0, 1)?.with_symmetries(ModelSymmetries { trs: Some(trs), ..Default::default() })
}

/// Particle-hole fiber with the hole component carrying the opposite charge.
/// The model is the negative of the operator collected in `bonds`.
fn bdg_model(name: &str, bonds: BondList, q: i64, p: usize, k_ph: RMat) -> Result<HoppingModel, TightBindingError> {
    let (w, v) = bonds.coefficients()?;
    let w = w.map(|m| -m);
    HoppingModel::new(name, q, p, w, -v)?
        .with_charges(vec![1, -1])?
        .with_symmetries(ModelSymmetries { phs: Some(FiberSymmetry::new(k_ph)?), ..Default::default() })
}

/// Normal-state part of a BdG operator: hopping `+1` for particles and `-1`
/// for holes, with on-site energy `-mu` for particles and `+mu` for holes.
fn bdg_kinetic(mu: f64) -> BondList {
    let mut bonds = BondList::new(2);
    for d in [(1, 0), (0, 1)] {
        bonds.hop(d, 0, 0, c64(1.0, 0.0)).hop(d, 1, 1, c64(-1.0, 0.0));
    }
    bonds.onsite(0, -mu).onsite(1, mu);
    bonds
}

/// BdG model of a `p +- i p` superconductor with pairing strength `delta`.
///
/// The operator collected here has the kinetic block
/// `U1 + U1* + U2 + U2* - mu` for particles, its negated conjugate for holes,
/// and the pairing `delta (S1 - S1* + chirality i (S2 - S2*))` in the
/// particle-hole entry. The model is its negative, so that the Fermi
/// projection below zero is the one whose invariants are tabulated in the
/// crate documentation. Negation keeps the particle-hole symmetry.
pub fn p_ip(delta: f64, mu: f64, q: i64, p: usize, chirality: f64) -> Result<HoppingModel, TightBindingError> {
    let mut bonds = bdg_kinetic(mu);
    // S1* moves by +e1 and S2* by +e2. The lower-left entry is the adjoint
    // of the upper-right one and comes with each bond.
    bonds.hop((1, 0), 0, 1, c64(-delta, 0.0));
    bonds.hop((-1, 0), 0, 1, c64(delta, 0.0));
    bonds.hop((0, 1), 0, 1, c64(0.0, -chirality * delta));
    bonds.hop((0, -1), 0, 1, c64(0.0, chirality * delta));
    bdg_model("p_ip", bonds, q, p, real(2, &[0.0, 1.0, 1.0, 0.0]))
}

/// BdG model of a `d +- i d` superconductor with pairing strength `delta`.
///
/// Built as in [`p_ip`] with the pairing operator
/// `delta (S1 + S1* - S2 - S2* + chirality i (S1 - S1*)(S2 - S2*))`, and
/// negated in the same way.
pub fn d_id(delta: f64, mu: f64, q: i64, p: usize, chirality: f64) -> Result<HoppingModel, TightBindingError> {
    let mut bonds = bdg_kinetic(mu);
    for d in [(1, 0), (-1, 0)] {
        bonds.hop(d, 0, 1, c64(delta, 0.0));
    }
    for d in [(0, 1), (0, -1)] {
        bonds.hop(d, 0, 1, c64(-delta, 0.0));
    }
    // (S1 - S1*)(S2 - S2*) = S1 S2 - S1 S2* - S1* S2 + S1* S2*, and S1 moves
    // by -e1.
    let i_delta = c64(0.0, chirality * delta);
    for (d, sign) in [((-1, -1), 1.0), ((-1, 1), -1.0), ((1, -1), -1.0), ((1, 1), 1.0)] {
        bonds.hop(d, 0, 1, i_delta * sign);
    }
    bdg_model("d_id", bonds, q, p, real(2, &[0.0, -1.0, 1.0, 0.0]))
}

/// Flux `2 pi q / p` as an angle.
pub fn flux_angle(q: i64, p: usize) -> f64 {
    2.0 * PI * q as f64 / p as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, hermitian_eig, I_UNIT, ONE, ZERO};
    use crate::tight_binding::{bloch_hamiltonian, lattice_hamiltonian};

    const SIDE: usize = 15;

    fn site(x: usize, y: usize) -> usize {
        x * SIDE + y
    }

    /// Scalar operator on the patch with entries `(x, y) -> (x + dx, y + dy)`
    /// weighted by `weight(y)`.
    fn hop_operator(dx: i64, dy: i64, weight: impl Fn(usize) -> Complex64) -> CMat {
        let n = SIDE * SIDE;
        let mut m = CMat::zeros(n, n);
        for x in 0..SIDE {
            for y in 0..SIDE {
                let (tx, ty) = (x as i64 + dx, y as i64 + dy);
                if (0..SIDE as i64).contains(&tx) && (0..SIDE as i64).contains(&ty) {
                    m[(site(x, y), site(tx as usize, ty as usize))] = weight(y);
                }
            }
        }
        m
    }

    /// `S1 psi(x, y) = psi(x - 1, y)` and `S2 psi(x, y) = psi(x, y - 1)`.
    fn shifts() -> (CMat, CMat) {
        (hop_operator(-1, 0, |_| ONE), hop_operator(0, -1, |_| ONE))
    }

    /// `U1* + U2*` for the Landau gauge of the model with flux `phi`.
    fn magnetic_forward(phi: f64) -> CMat {
        hop_operator(1, 0, |y| Complex64::from_polar(1.0, phi * y as f64)) + hop_operator(0, 1, |_| ONE)
    }

    /// `[[k, delta], [delta*, -conj(k)]]` with fiber index innermost.
    fn bdg_display(kinetic: &CMat, pairing: &CMat) -> CMat {
        let n = kinetic.nrows();
        let hole = -kinetic.conjugate();
        let lower = pairing.adjoint();
        CMat::from_fn(2 * n, 2 * n, |r, c| {
            let (a, i) = (r / 2, r % 2);
            let (b, j) = (c / 2, c % 2);
            match (i, j) {
                (0, 0) => kinetic[(a, b)],
                (0, 1) => pairing[(a, b)],
                (1, 0) => lower[(a, b)],
                _ => hole[(a, b)],
            }
        })
    }

    fn kinetic(phi: f64, mu: f64) -> CMat {
        let forward = magnetic_forward(phi);
        &forward + forward.adjoint() - CMat::identity(SIDE * SIDE, SIDE * SIDE) * c64(mu, 0.0)
    }

    fn interior_distance(a: &CMat, b: &CMat, l: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 1..SIDE - 1 {
            for y in 1..SIDE - 1 {
                for i in 0..l {
                    let r = site(x, y) * l + i;
                    worst = worst.max((a.row(r) - b.row(r)).norm());
                }
            }
        }
        worst
    }

    #[test]
    fn p_ip_matches_displayed_operator() {
        let (s1, s2) = shifts();
        for (q, p, chirality) in [(0, 1, 1.0), (1, 3, 1.0), (1, 3, -1.0), (2, 5, -1.0)] {
            let (delta, mu) = (0.2, 1.3);
            let model = p_ip(delta, mu, q, p, chirality).unwrap();
            let pairing = (&s1 - s1.adjoint() + (&s2 - s2.adjoint()) * (I_UNIT * chirality)) * c64(delta, 0.0);
            let display = bdg_display(&kinetic(model.flux(), mu), &pairing);
            let lattice = lattice_hamiltonian(&model, SIDE, SIDE);
            assert!(interior_distance(&lattice, &(-display), 2) < 1e-13, "q = {q}, p = {p}");
        }
    }

    #[test]
    fn d_id_matches_displayed_operator() {
        let (s1, s2) = shifts();
        for (q, p, chirality) in [(0, 1, 1.0), (0, 1, -1.0), (1, 4, 1.0)] {
            let (delta, mu) = (0.2, -0.4);
            let model = d_id(delta, mu, q, p, chirality).unwrap();
            let d1 = &s1 - s1.adjoint();
            let d2 = &s2 - s2.adjoint();
            let pairing = (&s1 + s1.adjoint() - &s2 - s2.adjoint() + d1 * d2 * (I_UNIT * chirality)) * c64(delta, 0.0);
            let display = bdg_display(&kinetic(model.flux(), mu), &pairing);
            let lattice = lattice_hamiltonian(&model, SIDE, SIDE);
            assert!(interior_distance(&lattice, &(-display), 2) < 1e-13, "q = {q}, p = {p}");
        }
    }

    #[test]
    fn harper_is_the_magnetic_laplacian() {
        let model = harper(3, 7).unwrap();
        let forward = magnetic_forward(model.flux());
        let display = &forward + forward.adjoint();
        let lattice = lattice_hamiltonian(&model, SIDE, SIDE);
        assert!(dist(&lattice, &display) < 1e-13);
    }

    #[test]
    fn harper_without_flux_has_cosine_bands() {
        let model = harper(0, 1).unwrap();
        for (k1, k2) in [(0.3, -1.1), (2.9, 0.4), (-3.0, 3.1)] {
            let h = bloch_hamiltonian(&model, k1, k2);
            assert!((h[(0, 0)] - c64(2.0 * f64::cos(k1) + 2.0 * f64::cos(k2), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn half_flux_bands_are_symmetric() {
        let model = harper(1, 2).unwrap();
        for (k1, k2) in [(0.3, -1.1), (2.9, 0.4), (-1.7, 1.5)] {
            let (vals, _) = hermitian_eig(&bloch_hamiltonian(&model, k1, k2));
            let e = 2.0 * (f64::cos(k1).powi(2) + f64::cos(k2).powi(2)).sqrt();
            assert!((vals[0] + e).abs() < 1e-12 && (vals[1] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn constructed_models_pass_their_symmetries() {
        let km = kane_mele(1.0, 0.45, 0.3).unwrap();
        assert_eq!(km.verify_symmetries(1e-12).trs, Some(true));
        for chirality in [1.0, -1.0] {
            for (q, p) in [(0, 1), (1, 3)] {
                assert_eq!(p_ip(0.2, 0.7, q, p, chirality).unwrap().verify_symmetries(1e-12).phs, Some(true));
                assert_eq!(d_id(0.2, 0.7, q, p, chirality).unwrap().verify_symmetries(1e-12).phs, Some(true));
            }
        }
        let kinds = |m: &HoppingModel| m.transfer_symmetries(0.0, 1).kind().map(|k| k.to_string());
        assert_eq!(kinds(&p_ip(0.2, 0.2, 1, 3, 1.0).unwrap()).as_deref(), Some("(-1,1,-1)"));
        assert_eq!(kinds(&d_id(0.2, 0.0, 0, 1, 1.0).unwrap()).as_deref(), Some("(-1,-1,-1)"));
        assert_eq!(kinds(&km).as_deref(), Some("(-1,-1,1)"));
    }

    #[test]
    fn bloch_hamiltonians_are_hermitian() {
        let models = [
            harper(3, 7).unwrap(),
            kane_mele(1.0, 0.45, 0.3).unwrap(),
            p_ip(0.2, 2.5, 1, 3, 1.0).unwrap(),
            d_id(0.2, 0.0, 0, 1, -1.0).unwrap(),
        ];
        for m in &models {
            for (k1, k2) in [(0.1, 0.2), (-2.5, 0.9), (3.0, -0.05)] {
                let h = bloch_hamiltonian(m, k1, k2);
                assert!(dist(&h, &h.adjoint()) < 1e-12, "{}", m.name);
            }
        }
    }

    #[test]
    fn staggered_graphene_gap() {
        let m = kane_mele(0.0, 0.0, 0.3).unwrap();
        let n = 301;
        let mut lowest = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let k1 = -PI + 2.0 * PI * i as f64 / n as f64;
                let k2 = -PI + 2.0 * PI * j as f64 / n as f64;
                let (vals, _) = hermitian_eig(&bloch_hamiltonian(&m, k1, k2));
                lowest = lowest.min(vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min));
            }
        }
        assert!((0.3 - 1e-12..0.3 + 1e-3).contains(&lowest), "{lowest}");
    }

    #[test]
    fn bond_list_rejects_long_bonds() {
        let mut bonds = BondList::new(1);
        bonds.hop((2, 0), 0, 0, ONE);
        assert!(bonds.coefficients().is_err());
        let mut bonds = BondList::new(1);
        bonds.hop((0, 1), 0, 0, c64(0.0, 1.0));
        let (w, v) = bonds.coefficients().unwrap();
        assert_eq!(w[1][(0, 0)], c64(0.0, -1.0));
        assert_eq!(v[(0, 0)], ZERO);
    }

    #[test]
    fn params_round_trip() {
        let p = ModelParams::PIp { delta: 0.2, mu: 2.5, q: 1, p: 3, chirality: 1 };
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"model\":\"p_ip\""));
        assert_eq!(serde_json::from_str::<ModelParams>(&text).unwrap(), p);
        assert!(ModelParams::DId { delta: 0.2, mu: 0.0, q: 0, p: 1, chirality: 0 }.build().is_err());
    }
}
