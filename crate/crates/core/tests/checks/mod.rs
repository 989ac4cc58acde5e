//! Seed-driven property checks shared by the proptest suite and the
//! acceptance binary. Each check draws all of its parameters from the seed
//! and returns `Ok(true)` when it ran, `Ok(false)` when the drawn case did
//! not meet its precondition, and `Err` with a message on failure.

use std::f64::consts::PI;

use krein_topo::krein::{check_symmetries, unit_inertias, unitarity_residual, Sign, Symmetries, SymmetryKind};
use krein_topo::linalg::{c64, direct_sum, eigenvalues, eye, rdirect_sum, rkron, to_complex, CMat, RMat};
use krein_topo::normal_forms::{
    chiral_embedding, chiral_reduce, i_form, j_form, k_form, normalize_fundamental, normalize_pair, normalize_triple,
    NormalCase,
};
use krein_topo::spectral::{decompose, riesz_projection};
use krein_topo::tight_binding::{bulk_transfer_fiber, transfer_form, HoppingModel};
use krein_topo::Tolerances;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Outcome = Result<bool, String>;

pub type Check = fn(u64) -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

macro_rules! ensure_eq {
    ($a:expr, $b:expr, $($msg:tt)+) => {{
        let (a, b) = (&$a, &$b);
        if a != b {
            return Err(format!("{:?} != {:?}: {}", a, b, format!($($msg)+)));
        }
    }};
}

/// Every check with its name.
pub const ALL: [(&str, Check); 10] = [
    ("transfer fibers are I-unitary", transfer_fibers_are_symplectic),
    ("transfer spectrum is reflected", transfer_spectrum_is_reflected),
    ("inertia reflection follows the kind", inertia_reflection_follows_the_kind),
    ("inertia adds up to multiplicity", inertia_adds_up_to_multiplicity),
    ("Riesz projection matches contour integral", riesz_projection_matches_contour_integral),
    ("fundamental normal form round trip", fundamental_normal_form_round_trip),
    ("pair normal form round trip", pair_normal_form_round_trip),
    ("triple normal form round trip", triple_normal_form_round_trip),
    ("anticommuting chiral reduction round trip", anticommuting_chiral_reduction_round_trip),
    ("commuting chiral reduction round trip", commuting_chiral_reduction_round_trip),
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex(r: &mut ChaCha8Rng, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

fn random_hermitian(r: &mut ChaCha8Rng, n: usize) -> CMat {
    let m = random_complex(r, n, n);
    (&m + m.adjoint()) * c64(0.5, 0.0)
}

fn random_orthogonal(r: &mut ChaCha8Rng, n: usize) -> RMat {
    let m = RMat::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    m.qr().q()
}

fn conj(q: &RMat, m: &RMat) -> RMat {
    q * m * q.transpose()
}

fn max_diff(a: &RMat, b: &RMat) -> f64 {
    (a - b).amax()
}

/// Canonical pair of the given kind with block sizes `a`, `b` (and for the
/// kind `(1, 1, 1)` also `c`, `d`).
fn canonical_pair(kind: (i32, i32, i32), a: usize, b: usize, c: usize, d: usize) -> (RMat, RMat) {
    match kind {
        (1, 1, 1) => (j_form(a + b, c + d), rdirect_sum(&j_form(a, b), &j_form(c, d))),
        (1, -1, 1) => (j_form(2 * a, 2 * b), rdirect_sum(&i_form(a), &i_form(b))),
        (-1, 1, 1) => (i_form(a + b), rdirect_sum(&j_form(a, b), &j_form(a, b))),
        (-1, -1, 1) => {
            let jp = j_form(a, b);
            let z = RMat::zeros(a + b, a + b);
            let mut r = RMat::zeros(2 * (a + b), 2 * (a + b));
            r.view_mut((0, 0), (a + b, a + b)).copy_from(&z);
            r.view_mut((0, a + b), (a + b, a + b)).copy_from(&(-&jp));
            r.view_mut((a + b, 0), (a + b, a + b)).copy_from(&jp);
            (i_form(a + b), r)
        }
        (1, 1, -1) => (j_form(a, a), k_form(a)),
        (1, -1, -1) => (j_form(a, a), i_form(a)),
        (-1, 1, -1) => (i_form(a), j_form(a, a)),
        (-1, -1, -1) => (i_form(2 * a), rdirect_sum(&i_form(a), &(-i_form(a)))),
        _ => unreachable!(),
    }
}

fn kind_tuple(k: SymmetryKind) -> (i32, i32, i32) {
    (k.eta_f.value(), k.eta_r.value(), k.eta_fr.value())
}

/// Sizes `(a, b, c, d)` for `canonical_pair` that keep the dimension in `2..=max_dim`.
fn sizes_for(kind: (i32, i32, i32), r: &mut ChaCha8Rng, max_dim: usize) -> (usize, usize, usize, usize) {
    loop {
        let s: [usize; 4] = std::array::from_fn(|_| r.random_range(0..=3));
        let dim = match kind {
            (1, 1, 1) => s[0] + s[1] + s[2] + s[3],
            (1, -1, 1) | (-1, 1, 1) | (-1, -1, 1) => 2 * (s[0] + s[1]),
            (1, 1, -1) | (1, -1, -1) | (-1, 1, -1) => 2 * s[0],
            _ => 4 * s[0],
        };
        if (2..=max_dim).contains(&dim) {
            return (s[0], s[1], s[2], s[3]);
        }
    }
}

/// `exp(X)` for a random `X` in the Lie algebra of the symmetries, which
/// therefore satisfies them.
fn random_group_element(r: &mut ChaCha8Rng, sym: &Symmetries, scale: f64) -> CMat {
    let n = sym.dim();
    let form = sym.form();
    let inv = form.clone().try_inverse().expect("forms are invertible");
    let mut x = inv * random_hermitian(r, n) * c64(0.0, scale);
    if let Some(real) = &sym.real {
        let jr = to_complex(&real.matrix);
        x = (&x + jr.adjoint() * x.conjugate() * &jr) * c64(0.5, 0.0);
    }
    x.exp()
}

fn random_model(r: &mut ChaCha8Rng) -> HoppingModel {
    let l = r.random_range(1..=3);
    let p = r.random_range(1..=2);
    let q = r.random_range(0..p as i64);
    let w = std::array::from_fn(|_| random_complex(r, l, l));
    HoppingModel::new("random", q, p, w, random_hermitian(r, l)).unwrap()
}

/// Spectral projection by 256-point trapezoidal quadrature of the resolvent.
fn contour_projection(t: &CMat, center: Complex64, radius: f64) -> CMat {
    let n = t.nrows();
    let points = 256;
    let mut sum = CMat::zeros(n, n);
    for j in 0..points {
        let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / points as f64);
        let z = center + w * radius;
        let resolvent = (eye(n) * z - t).try_inverse().expect("contour avoids the spectrum");
        // dz / (2 pi i) = radius w dtheta / (2 pi)
        sum += resolvent * (w * radius / points as f64);
    }
    sum
}

fn skip_unless(cond: bool) -> Result<(), Outcome> {
    if cond {
        Ok(())
    } else {
        Err(Ok(false))
    }
}

macro_rules! assume {
    ($cond:expr) => {
        if let Err(skip) = skip_unless($cond) {
            return skip;
        }
    };
}

pub fn transfer_fibers_are_symplectic(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let energy = r.random_range(-3.0..3.0);
    let k2 = r.random_range(-PI..PI);
    let model = random_model(&mut r);
    let Ok(t) = bulk_transfer_fiber(&model, energy, k2, &Tolerances::default()) else {
        return Ok(false);
    };
    ensure!(t.nrows() <= 12, "dimension {}", t.nrows());
    let form = to_complex(&transfer_form(t.nrows() / 2));
    let res = unitarity_residual(&t, &form);
    ensure!(res < 1e-10, "residual {res}");
    Ok(true)
}

pub fn transfer_spectrum_is_reflected(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let energy = r.random_range(-3.0..3.0);
    let k2 = r.random_range(-PI..PI);
    let model = random_model(&mut r);
    let Ok(t) = bulk_transfer_fiber(&model, energy, k2, &Tolerances::default()) else {
        return Ok(false);
    };
    let ev = eigenvalues(&t).ok_or("eigenvalues did not converge")?;
    let mut reflected: Vec<Option<Complex64>> = ev.iter().map(|z| Some(z.conj().inv())).collect();
    for z in &ev {
        let (j, d) = reflected
            .iter()
            .enumerate()
            .filter_map(|(j, w)| w.map(|w| (j, (w - z).norm() / z.norm().max(1.0))))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        ensure!(d < 1e-7, "eigenvalue {z} has no reflected partner (distance {d})");
        reflected[j] = None;
    }
    Ok(true)
}

pub fn inertia_reflection_follows_the_kind(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let kind = SymmetryKind::all()[r.random_range(0..8usize)];
    let scale = r.random_range(0.2..2.0);
    let k = kind_tuple(kind);
    let (a, b, c, d) = sizes_for(k, &mut r, 12);
    let (jf, jr) = canonical_pair(k, a, b, c, d);
    let q = random_orthogonal(&mut r, jf.nrows());
    let sym = Symmetries::new(conj(&q, &jf)).unwrap().with_real(conj(&q, &jr)).unwrap();
    ensure_eq!(sym.kind(), Some(kind), "kind of the conjugated pair");
    let t = random_group_element(&mut r, &sym, scale);
    let tol = Tolerances::default();
    let rel = check_symmetries(&t, &sym, &tol).map_err(|e| e.to_string())?;
    ensure!(rel.all_hold(), "constructed operator breaks its symmetries: {rel:?}");
    let eigs = unit_inertias(&t, &sym, &tol).map_err(|e| e.to_string())?.eigenvalues;
    let preserve = kind.eta_f.times(kind.eta_fr) == Sign::Plus;
    for e in &eigs {
        let partner = eigs
            .iter()
            .find(|f| (f.lambda - e.lambda.conj()).norm() < 1e-6)
            .ok_or_else(|| format!("no conjugate partner of {}", e.lambda))?;
        let expected = if preserve { (e.nu_plus, e.nu_minus) } else { (e.nu_minus, e.nu_plus) };
        ensure_eq!((partner.nu_plus, partner.nu_minus), expected, "kind {kind}");
    }
    Ok(true)
}

pub fn inertia_adds_up_to_multiplicity(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let k = kind_tuple(SymmetryKind::all()[r.random_range(0..8usize)]);
    let doubled = r.random_bool(0.5);
    let (a, b, c, d) = sizes_for(k, &mut r, if doubled { 6 } else { 12 });
    let (jf, jr) = canonical_pair(k, a, b, c, d);
    let mut sym = Symmetries::new(jf.clone()).unwrap().with_real(jr.clone()).unwrap();
    let mut t = random_group_element(&mut r, &sym, 1.0);
    if doubled {
        t = direct_sum(&t, &t);
        sym = Symmetries::new(rdirect_sum(&jf, &jf)).unwrap().with_real(rdirect_sum(&jr, &jr)).unwrap();
    }
    let tol = Tolerances::default();
    let spectrum = unit_inertias(&t, &sym, &tol).map_err(|e| e.to_string())?;
    let on_circle =
        eigenvalues(&t).ok_or("eigenvalues did not converge")?.iter().filter(|z| (z.norm() - 1.0).abs() < 1e-6).count();
    let mut total = 0;
    for e in &spectrum.eigenvalues {
        ensure_eq!(e.nu_plus + e.nu_minus, e.multiplicity, "at {}", e.lambda);
        if doubled {
            ensure!(e.multiplicity % 2 == 0, "odd multiplicity {} in a doubled operator", e.multiplicity);
        }
        total += e.multiplicity;
    }
    ensure_eq!(total, on_circle, "unimodular eigenvalue count");
    Ok(true)
}

pub fn riesz_projection_matches_contour_integral(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let n = r.random_range(2..=12usize);
    let t = random_complex(&mut r, n, n);
    let tol = Tolerances::default();
    let dec = decompose(&t, tol.cluster_gap).map_err(|e| e.to_string())?;
    let index = r.random_range(0..dec.clusters.len());
    let cluster = dec.clusters[index].clone();
    assume!(cluster.isolation > 1e-2);
    let Ok(p) = riesz_projection(&dec, index, &tol) else {
        return Ok(false);
    };
    let p = p.projection;
    let oracle = contour_projection(&t, cluster.center, cluster.isolation / 2.0);
    let err = (&p - &oracle).norm() / p.norm().max(1.0);
    ensure!(err < 1e-6, "projection differs from contour oracle by {err}");
    Ok(true)
}

pub fn fundamental_normal_form_round_trip(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let plus = r.random_range(0..=6usize);
    let minus = r.random_range(0..=6usize);
    let odd = r.random_bool(0.5);
    let (jf, expected_blocks) = if odd {
        assume!(plus >= 1);
        (i_form(plus), vec![plus])
    } else {
        assume!(plus + minus >= 1);
        (j_form(plus, minus), vec![plus, minus])
    };
    let q = random_orthogonal(&mut r, jf.nrows());
    let input = conj(&q, &jf);
    let nf = normalize_fundamental(&input).map_err(|e| e.to_string())?;
    ensure_eq!(nf.blocks, expected_blocks, "block sizes");
    ensure!(max_diff(&nf.target_f, &jf) < 1e-12, "target differs from the canonical form");
    ensure!(nf.residual(&input, None, None) < 2e-10, "residual {}", nf.residual(&input, None, None));
    ensure!(max_diff(&nf.reconstruct().0, &input) < 2e-10, "reconstruction differs");
    Ok(true)
}

pub fn pair_normal_form_round_trip(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let k = kind_tuple(SymmetryKind::all()[r.random_range(0..8usize)]);
    let (a, b, c, d) = sizes_for(k, &mut r, 12);
    let (jf, jr) = canonical_pair(k, a, b, c, d);
    let q = random_orthogonal(&mut r, jf.nrows());
    let (f, g) = (conj(&q, &jf), conj(&q, &jr));
    let nf = normalize_pair(&f, &g).map_err(|e| format!("case {k:?}: {e}"))?;
    ensure_eq!(nf.case, NormalCase::Pair(k.0, k.1, k.2), "normal case");
    ensure!(max_diff(&nf.target_f, &jf) < 1e-12, "case {k:?}: fundamental target");
    ensure!(max_diff(nf.target_r.as_ref().unwrap(), &jr) < 1e-12, "case {k:?}: real target");
    ensure!(nf.residual(&f, Some(&g), None) < 2e-10, "case {k:?}: residual");
    let (f2, g2, _) = nf.reconstruct();
    ensure!(max_diff(&f2, &f) < 2e-10 && max_diff(&g2.unwrap(), &g) < 2e-10, "case {k:?}: reconstruction differs");
    Ok(true)
}

pub fn triple_normal_form_round_trip(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let case = r.random_range(0..4usize);
    let n = r.random_range(1..=3usize);
    let split = r.random_range(0..=3usize);
    let one = RMat::identity(2, 2);
    let (i2, j2, k2) = (i_form(1), j_form(1, 1), k_form(1));
    let t3 = |a: &RMat, b: &RMat, m: usize| rkron(&rkron(a, b), &RMat::identity(m, m));
    let (jf, jr, jc) = match case {
        0 => {
            let (a, b) = (split.min(n), n - split.min(n));
            (
                rdirect_sum(&t3(&i2, &j2, a), &t3(&i2, &one, b)),
                rdirect_sum(&t3(&one, &i2, a), &t3(&j2, &i2, b)),
                rdirect_sum(&t3(&i2, &k2, a), &t3(&k2, &i2, b)),
            )
        }
        1 => (t3(&j2, &one, n), t3(&k2, &i2, n), t3(&i2, &one, n)),
        2 => {
            let (a, b) = (split.min(2 * n), 2 * n - split.min(2 * n));
            (
                rdirect_sum(&j_form(a, a), &j_form(b, b)),
                rdirect_sum(&k_form(a), &k_form(b)),
                rdirect_sum(&i_form(a), &(-i_form(b))),
            )
        }
        _ => (t3(&j2, &one, n), t3(&k2, &one, n), t3(&i2, &i2, n)),
    };
    ensure!(jf.nrows() <= 12, "dimension {}", jf.nrows());
    let q = random_orthogonal(&mut r, jf.nrows());
    let (f, g, h) = (conj(&q, &jf), conj(&q, &jr), conj(&q, &jc));
    let nf = normalize_triple(&f, &g, &h).map_err(|e| format!("case {case}: {e}"))?;
    ensure!(max_diff(&nf.target_f, &jf) < 1e-12, "case {case}: fundamental target");
    ensure!(max_diff(nf.target_r.as_ref().unwrap(), &jr) < 1e-12, "case {case}: real target");
    ensure!(max_diff(nf.target_c.as_ref().unwrap(), &jc) < 1e-12, "case {case}: chiral target");
    ensure!(nf.residual(&f, Some(&g), Some(&h)) < 2e-10, "case {case}: residual");
    let (f2, g2, h2) = nf.reconstruct();
    ensure!(max_diff(&f2, &f) < 2e-10, "case {case}: fundamental reconstruction");
    ensure!(max_diff(&g2.unwrap(), &g) < 2e-10, "case {case}: real reconstruction");
    ensure!(max_diff(&h2.unwrap(), &h) < 2e-10, "case {case}: chiral reconstruction");
    Ok(true)
}

pub fn anticommuting_chiral_reduction_round_trip(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let k = r.random_range(1..=6usize);
    let rotate = r.random_bool(0.5);
    let unimodular = r.random_range(0..=6usize);
    // t = S diag(d) S^{-1} with some eigenvalues on the unit circle.
    let s = random_complex(&mut r, k, k) + eye(k) * c64(2.0, 0.0);
    let d: Vec<Complex64> = (0..k)
        .map(|i| {
            let modulus = if i < unimodular { 1.0 } else { r.random_range(0.3..3.0) };
            Complex64::from_polar(modulus, r.random_range(-PI..PI))
        })
        .collect();
    let s_inv = s.clone().try_inverse().ok_or("conjugator is singular")?;
    let t = &s * CMat::from_fn(k, k, |i, j| if i == j { d[i] } else { c64(0.0, 0.0) }) * s_inv;
    let embedded = chiral_embedding(&t).ok_or("embedding of an invertible matrix failed")?;
    let (mut jf, mut jc) = (i_form(k), j_form(k, k));
    let mut big = embedded;
    if rotate {
        let q = random_orthogonal(&mut r, 2 * k);
        let qc = to_complex(&q);
        big = &qc * &big * qc.transpose();
        jf = conj(&q, &jf);
        jc = conj(&q, &jc);
    }
    let tol = Tolerances::default();
    let red = chiral_reduce(&big, &jf, &jc, &tol).map_err(|e| e.to_string())?;
    let err = (red.assemble() - &big).norm() / big.norm();
    ensure!(err < 1e-9, "round trip error {err}");
    if !rotate {
        let err = (&red.first - &t).norm() / t.norm();
        ensure!(err < 1e-9, "first block differs from the input by {err}");
    }
    let sym = Symmetries::new(jf).unwrap().with_chiral(jc).unwrap();
    let spectrum = unit_inertias(&big, &sym, &tol).map_err(|e| e.to_string())?;
    for e in &spectrum.eigenvalues {
        ensure_eq!(e.nu_plus, e.nu_minus, "inertia at {}", e.lambda);
    }
    Ok(true)
}

pub fn commuting_chiral_reduction_round_trip(seed: u64) -> Outcome {
    let mut r = rng(seed);
    let [a, b, c, d]: [usize; 4] = std::array::from_fn(|_| r.random_range(0..=3));
    assume!(a + b >= 1 && c + d >= 1);
    let first_sym = Symmetries::new(j_form(a, b)).unwrap();
    let second_sym = Symmetries::new(j_form(c, d)).unwrap();
    let t1 = random_group_element(&mut r, &first_sym, 1.0);
    let t2 = random_group_element(&mut r, &second_sym, 1.0);
    let t = direct_sum(&t1, &t2);
    let jf = rdirect_sum(&j_form(a, b), &j_form(c, d));
    let jc = j_form(a + b, c + d);
    let q = random_orthogonal(&mut r, jf.nrows());
    let qc = to_complex(&q);
    let big = &qc * &t * qc.transpose();
    let tol = Tolerances::default();
    let red = chiral_reduce(&big, &conj(&q, &jf), &conj(&q, &jc), &tol).map_err(|e| e.to_string())?;
    let err = (red.assemble() - &big).norm() / big.norm();
    ensure!(err < 1e-9, "round trip error {err}");
    ensure_eq!(red.first.nrows(), a + b, "size of the first block");
    Ok(true)
}
