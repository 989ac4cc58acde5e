use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use krein_topo::edge::{
    chern_number, edge_bands, edge_crossings, edge_invariants, eigenphases, CrossingOptions, EdgeCrossing, EdgeError,
};
use krein_topo::krein::{
    check_symmetries, global_signature, invariant_class, invariants_for_kind, unit_inertias, InvariantClass,
    InvariantSet, KreinError, Sign, Symmetries,
};
use krein_topo::linalg::{c64, eigenvalues, CMat, RMat};
use krein_topo::models::{d_id, harper, kane_mele, p_ip};
use krein_topo::spectral::{collision_path, Scenario, SpectralError};
use krein_topo::tight_binding::{bulk_transfer_spectrum, HoppingModel, TightBindingError, GAP_MARGIN_TRANSFER};
use krein_topo::Tolerances;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::args::{BuiltIn, GridArgs, ModelArgs, OutputArgs, ScenarioArgs, ScenarioName};
use crate::output::{to_json, write_file, Cell, Csv, Formats, Num, SCHEMA};
use crate::svg::Plot;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("invertibility hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("{0}")]
    NotInGap(String),
    #[error("{0}")]
    FlatBand(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) | CliError::Io(_) => 1,
            CliError::Hypothesis(_) => 2,
            CliError::Config(_) => 3,
            CliError::NotInGap(_) => 4,
            CliError::FlatBand(_) => 5,
        }
    }
}

impl From<TightBindingError> for CliError {
    fn from(e: TightBindingError) -> Self {
        match e {
            TightBindingError::StrongHypothesisFailed { .. } => CliError::Hypothesis(e.to_string()),
            TightBindingError::ConvergenceFailure => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EdgeError> for CliError {
    fn from(e: EdgeError) -> Self {
        match e {
            EdgeError::NotInGap { .. } => CliError::NotInGap(e.to_string()),
            EdgeError::FlatBandDetected(_) => CliError::FlatBand(e.to_string()),
            EdgeError::VerticalHypothesisFailed { .. } => CliError::Hypothesis(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<KreinError> for CliError {
    fn from(e: KreinError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::BadParams(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn reject(given: bool, flag: &str, model: &str) -> Result<()> {
    if given {
        Err(config(format!("--{flag} does not apply to the {model} model")))
    } else {
        Ok(())
    }
}

fn chirality(value: Option<i32>) -> Result<f64> {
    match value.unwrap_or(1) {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        other => Err(config(format!("chirality must be 1 or -1, got {other}"))),
    }
}

/// Builds the model named on the command line, or loads it from a file.
pub fn load_model(args: &ModelArgs) -> Result<HoppingModel> {
    let a = args;
    if let Some(path) = &a.model_file {
        let flags = a.q.is_some()
            || a.p.is_some()
            || a.delta.is_some()
            || a.mu.is_some()
            || a.chirality.is_some()
            || a.lambda_so.is_some()
            || a.lambda_ra.is_some()
            || a.lambda_st.is_some();
        reject(flags, "model parameter", "file")?;
        return Ok(HoppingModel::load(path)?);
    }
    let Some(which) = a.model else {
        return Err(config("give a built-in model (harper, kanemele, pip, did) or --model-file"));
    };
    let lambdas = a.lambda_so.is_some() || a.lambda_ra.is_some() || a.lambda_st.is_some();
    if a.p == Some(0) {
        return Err(config("--p must be positive"));
    }
    let model = match which {
        BuiltIn::Harper => {
            reject(a.delta.is_some(), "delta", "harper")?;
            reject(a.mu.is_some(), "mu", "harper")?;
            reject(a.chirality.is_some(), "chirality", "harper")?;
            reject(lambdas, "lambda-*", "harper")?;
            harper(a.q.unwrap_or(3), a.p.unwrap_or(7))?
        }
        BuiltIn::KaneMele => {
            reject(a.q.is_some() || a.p.is_some(), "q/--p", "kanemele")?;
            reject(a.delta.is_some() || a.mu.is_some(), "delta/--mu", "kanemele")?;
            reject(a.chirality.is_some(), "chirality", "kanemele")?;
            kane_mele(a.lambda_so.unwrap_or(1.0), a.lambda_ra.unwrap_or(0.45), a.lambda_st.unwrap_or(0.3))?
        }
        BuiltIn::Pip => {
            reject(lambdas, "lambda-*", "pip")?;
            let c = chirality(a.chirality)?;
            p_ip(a.delta.unwrap_or(0.2), a.mu.unwrap_or(0.2), a.q.unwrap_or(1), a.p.unwrap_or(3), c)?
        }
        BuiltIn::Did => {
            reject(lambdas, "lambda-*", "did")?;
            let c = chirality(a.chirality)?;
            d_id(a.delta.unwrap_or(0.2), a.mu.unwrap_or(0.0), a.q.unwrap_or(0), a.p.unwrap_or(1), c)?
        }
    };
    Ok(model)
}

fn formats(out: &OutputArgs) -> Result<Formats> {
    Formats::parse(&out.format).map_err(CliError::Config)
}

fn crossing_options(grid: &GridArgs) -> Result<CrossingOptions> {
    if !(grid.refine_tol > 0.0 && grid.refine_tol < 1e-2) {
        return Err(config("--refine-tol must lie in (0, 0.01)"));
    }
    if grid.n_k1 < 9 || grid.n_k2 == 0 || grid.chern_grid < 4 {
        return Err(config("grids are too small (need n-k1 >= 9, n-k2 >= 1, chern-grid >= 4)"));
    }
    Ok(CrossingOptions { n_k1: grid.n_k1, refine_tol: grid.refine_tol, ..CrossingOptions::default() })
}

/// Files written by a command, for the summary on stdout.
struct Written(Vec<PathBuf>);

impl Written {
    fn new() -> Self {
        Written(Vec::new())
    }

    fn put(&mut self, dir: &Path, name: &str, contents: &str) -> Result<()> {
        self.0.push(write_file(dir, name, contents)?);
        Ok(())
    }

    fn report(&self) {
        for p in &self.0 {
            eprintln!("wrote {}", p.display());
        }
    }
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    schema: u32,
    command: &'static str,
    model: &'a str,
    energy: Num,
    n_k2: usize,
    eigenvalue_count: usize,
    min_distance_to_circle: Num,
    in_gap: bool,
}

pub fn spectrum(model: &ModelArgs, energy: f64, grid: &GridArgs, out: &OutputArgs) -> Result<()> {
    let fmt = formats(out)?;
    crossing_options(grid)?;
    let model = load_model(model)?;
    let tol = Tolerances::default();
    let spec = bulk_transfer_spectrum(&model, energy, grid.n_k2, &tol)?;
    let mut csv = Csv::new(&["k2", "re", "im"]);
    let mut points = Vec::new();
    for (k2, ev) in spec.k2.iter().zip(&spec.eigenvalues) {
        let mut ev = ev.clone();
        ev.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        for z in ev {
            csv.row(&[Cell::F(*k2), Cell::F(z.re), Cell::F(z.im)]);
            points.push((z.re, z.im));
        }
    }
    let report = SpectrumReport {
        schema: SCHEMA,
        command: "spectrum",
        model: &model.name,
        energy: Num(energy),
        n_k2: grid.n_k2,
        eigenvalue_count: points.len(),
        min_distance_to_circle: Num(spec.min_distance),
        in_gap: spec.min_distance > GAP_MARGIN_TRANSFER,
    };
    let mut written = Written::new();
    if fmt.csv {
        written.put(&out.out, "spectrum.csv", &csv.finish())?;
    }
    if fmt.json {
        written.put(&out.out, "spectrum.json", &to_json(&report))?;
    }
    if fmt.svg {
        let mut plot =
            Plot::complex_plane(&format!("transfer spectrum of {} at E = {energy}", model.name), &points, 3.0);
        plot.points(&points, "#1f4e9c");
        written.put(&out.out, "spectrum.svg", &plot.render())?;
    }
    print!("{}", to_json(&report));
    written.report();
    Ok(())
}

#[derive(Serialize)]
struct CrossingRow {
    k1: Num,
    slope: i32,
    multiplicity: usize,
    nu_plus: usize,
    nu_minus: usize,
    theta_slope: Num,
}

impl From<&EdgeCrossing> for CrossingRow {
    fn from(c: &EdgeCrossing) -> Self {
        CrossingRow {
            k1: Num(c.k1),
            slope: c.slope_sign,
            multiplicity: c.multiplicity,
            nu_plus: c.nu_plus,
            nu_minus: c.nu_minus,
            theta_slope: Num(c.theta_slope),
        }
    }
}

#[derive(Serialize)]
struct InvariantReport<'a> {
    schema: u32,
    command: &'static str,
    model: &'a str,
    energy: Num,
    kind: Option<String>,
    invariant_class: InvariantClass,
    crossings: Vec<CrossingRow>,
    #[serde(flatten)]
    invariants: InvariantSet,
    signature_sum: i64,
    chern: i64,
    chern_residual: Num,
    agree: bool,
}

fn crossing_csv(crossings: &[EdgeCrossing]) -> String {
    let mut csv = Csv::new(&["k1", "slope", "multiplicity", "nu_plus", "nu_minus", "theta_slope"]);
    for c in crossings {
        csv.row(&[
            Cell::F(c.k1),
            Cell::I(c.slope_sign as i64),
            Cell::I(c.multiplicity as i64),
            Cell::I(c.nu_plus as i64),
            Cell::I(c.nu_minus as i64),
            Cell::F(c.theta_slope),
        ]);
    }
    csv.finish()
}

pub fn invariants(model: &ModelArgs, energy: f64, grid: &GridArgs, out: &OutputArgs) -> Result<()> {
    let fmt = formats(out)?;
    let opts = crossing_options(grid)?;
    let model = load_model(model)?;
    let tol = Tolerances::default();
    let inv = edge_invariants(&model, energy, &opts, &tol)?;
    let chern = chern_number(&model, energy, grid.chern_grid, grid.chern_grid)?;
    let signature_sum = global_signature(&inv.eigenvalues);
    let report = InvariantReport {
        schema: SCHEMA,
        command: "invariants",
        model: &model.name,
        energy: Num(energy),
        kind: inv.kind.map(|k| k.to_string()),
        invariant_class: invariant_class(inv.kind),
        crossings: inv.crossings.iter().map(CrossingRow::from).collect(),
        invariants: inv.invariants,
        signature_sum,
        chern: chern.value,
        chern_residual: Num(chern.residual),
        agree: chern.value == signature_sum,
    };
    let mut written = Written::new();
    if fmt.csv {
        written.put(&out.out, "crossings.csv", &crossing_csv(&inv.crossings))?;
    }
    if fmt.json {
        written.put(&out.out, "invariants.json", &to_json(&report))?;
    }
    print!("{}", to_json(&report));
    written.report();
    Ok(())
}

#[derive(Serialize)]
struct PhaseReport {
    energy: Num,
    k1_points: usize,
    crossings: Vec<CrossingRow>,
}

#[derive(Serialize)]
struct SliceRow {
    energy: Num,
    status: String,
    crossings: Option<Vec<CrossingRow>>,
}

#[derive(Serialize)]
struct EdgeBandReport<'a> {
    schema: u32,
    command: &'static str,
    model: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    phases: Option<PhaseReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SliceRow>>,
}

#[allow(clippy::too_many_arguments)]
pub fn edge_bands_cmd(
    model: &ModelArgs,
    energy: Option<f64>,
    e_min: Option<f64>,
    e_max: Option<f64>,
    n_e: usize,
    grid: &GridArgs,
    out: &OutputArgs,
) -> Result<()> {
    let fmt = formats(out)?;
    let opts = crossing_options(grid)?;
    if energy.is_none() && e_min.is_none() {
        return Err(config("give --energy, or --e-min and --e-max"));
    }
    let model = load_model(model)?;
    let tol = Tolerances::default();
    let mut written = Written::new();
    let mut phases = None;
    if let Some(energy) = energy {
        // Same half-offset periodic grid as the crossing scan, which avoids
        // the symmetric momenta 0 and pi.
        let n = (opts.n_k1 - 1).next_multiple_of(2);
        let ks: Vec<f64> = (0..n).map(|j| -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64).collect();
        let sampled: Vec<Vec<f64>> = ks
            .par_iter()
            .map(|&k| {
                let mut th = eigenphases(&model, energy, k, &tol)?;
                th.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Ok(th)
            })
            .collect::<std::result::Result<_, EdgeError>>()?;
        let mut csv = Csv::new(&["k1", "index", "phase"]);
        let mut pts = Vec::new();
        for (&k, th) in ks.iter().zip(&sampled) {
            for (i, t) in th.iter().enumerate() {
                csv.row(&[Cell::F(k), Cell::I(i as i64), Cell::F(*t)]);
                pts.push((k, *t));
            }
        }
        let crossings = edge_crossings(&model, energy, &opts, &tol)?;
        if fmt.csv {
            written.put(&out.out, "edge_phases.csv", &csv.finish())?;
        }
        if fmt.svg {
            let title = format!("eigenphases of the edge unitary of {} at E = {energy}", model.name);
            let mut plot = Plot::new(&title, "k1", "phase", (-PI, PI), (-PI, PI));
            plot.horizontal_line(0.0, "#888");
            plot.points(&pts, "#1f4e9c");
            let zeros: Vec<(f64, f64)> = crossings.iter().map(|c| (c.k1, 0.0)).collect();
            plot.points(&zeros, "#c0392b");
            written.put(&out.out, "edge_phases.svg", &plot.render())?;
        }
        phases = Some(PhaseReport {
            energy: Num(energy),
            k1_points: ks.len(),
            crossings: crossings.iter().map(CrossingRow::from).collect(),
        });
    }
    let mut sweep = None;
    if let (Some(lo), Some(hi)) = (e_min, e_max) {
        if hi < lo || hi.is_nan() || lo.is_nan() || n_e == 0 {
            return Err(config("need e-min <= e-max and n-e >= 1"));
        }
        let slices = edge_bands(&model, lo, hi, n_e, &opts, &tol);
        let mut csv = Csv::new(&["energy", "status", "k1", "slope", "multiplicity"]);
        let mut up = Vec::new();
        let mut down = Vec::new();
        for s in &slices {
            match &s.crossings {
                Some(cs) if !cs.is_empty() => {
                    for c in cs {
                        csv.row(&[
                            Cell::F(s.energy),
                            Cell::S("gap".into()),
                            Cell::F(c.k1),
                            Cell::I(c.slope_sign as i64),
                            Cell::I(c.multiplicity as i64),
                        ]);
                        if c.slope_sign >= 0 { &mut up } else { &mut down }.push((c.k1, s.energy));
                    }
                }
                Some(_) => {
                    csv.row(&[Cell::F(s.energy), Cell::S("gap".into()), Cell::F(f64::NAN), Cell::I(0), Cell::I(0)])
                }
                None => {
                    csv.row(&[Cell::F(s.energy), Cell::S(s.status.clone()), Cell::F(f64::NAN), Cell::I(0), Cell::I(0)])
                }
            }
        }
        if fmt.csv {
            written.put(&out.out, "edge_bands.csv", &csv.finish())?;
        }
        if fmt.svg {
            let title = format!("edge bands of {}", model.name);
            let mut plot = Plot::new(&title, "k1", "E", (-PI, PI), (lo, hi));
            plot.points(&up, "#1f4e9c");
            plot.points(&down, "#c0392b");
            written.put(&out.out, "edge_bands.svg", &plot.render())?;
        }
        sweep = Some(
            slices
                .iter()
                .map(|s| SliceRow {
                    energy: Num(s.energy),
                    status: s.status.clone(),
                    crossings: s.crossings.as_ref().map(|cs| cs.iter().map(CrossingRow::from).collect()),
                })
                .collect(),
        );
    }
    let report = EdgeBandReport { schema: SCHEMA, command: "edge-bands", model: &model.name, phases, sweep };
    if fmt.json {
        written.put(&out.out, "edge_bands.json", &to_json(&report))?;
    }
    print!("{}", to_json(&report));
    written.report();
    Ok(())
}

/// Matrix file for `classify`: complex entries as `[re, im]` pairs, real
/// symmetries as plain rows.
#[derive(Debug, Deserialize)]
pub struct MatrixFile {
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub fundamental: Vec<Vec<f64>>,
    #[serde(default)]
    pub real: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub chiral: Option<Vec<Vec<f64>>>,
}

fn real_rows(rows: &[Vec<f64>], what: &str) -> Result<RMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(config(format!("{what} must be a non-empty square matrix")));
    }
    Ok(RMat::from_fn(n, n, |i, j| rows[i][j]))
}

fn complex_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(config("matrix must be a non-empty square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

#[derive(Serialize)]
struct UnitRow {
    re: Num,
    im: Num,
    multiplicity: usize,
    nu_plus: usize,
    nu_minus: usize,
}

#[derive(Serialize)]
struct ClassifyReport {
    schema: u32,
    command: &'static str,
    source: String,
    kind: Option<String>,
    invariant_class: InvariantClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    chiral: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_symmetries: Option<ModelVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relations: Option<Relations>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unit_spectrum: Option<Vec<UnitRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    invariants: Option<InvariantSet>,
}

#[derive(Serialize)]
struct ModelVerdict {
    energy: Num,
    time_reversal: Option<bool>,
    particle_hole: Option<bool>,
    chiral: Option<bool>,
}

#[derive(Serialize)]
struct Relations {
    j_unitary: bool,
    j_unitary_residual: Num,
    real: Option<bool>,
    chiral: Option<bool>,
}

fn symmetries_from(file: &MatrixFile) -> Result<Symmetries> {
    let bad = |e: KreinError| config(e.to_string());
    let mut sym = Symmetries::new(real_rows(&file.fundamental, "fundamental")?).map_err(bad)?;
    if let Some(r) = &file.real {
        sym = sym.with_real(real_rows(r, "real")?).map_err(bad)?;
    }
    if let Some(c) = &file.chiral {
        sym = sym.with_chiral(real_rows(c, "chiral")?).map_err(bad)?;
    }
    Ok(sym)
}

pub fn classify(model: &ModelArgs, matrix_file: Option<&Path>, energy: f64, out: &OutputArgs) -> Result<()> {
    let fmt = formats(out)?;
    let tol = Tolerances::default();
    let report = if let Some(path) = matrix_file {
        if model.model.is_some() {
            return Err(config("give either a model or --matrix-file"));
        }
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        let file: MatrixFile = serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))?;
        let t = complex_rows(&file.matrix)?;
        let sym = symmetries_from(&file)?;
        if sym.dim() != t.nrows() {
            return Err(config("matrix and symmetries differ in size"));
        }
        let rel = check_symmetries(&t, &sym, &tol)?;
        let kind = sym.kind();
        let (unit, invariants) = if rel.all_hold() {
            let eigs = unit_inertias(&t, &sym, &tol)?.eigenvalues;
            let inv = invariants_for_kind(&eigs, kind).ok();
            let rows = eigs
                .iter()
                .map(|e| UnitRow {
                    re: Num(e.lambda.re),
                    im: Num(e.lambda.im),
                    multiplicity: e.multiplicity,
                    nu_plus: e.nu_plus,
                    nu_minus: e.nu_minus,
                })
                .collect();
            (Some(rows), inv)
        } else {
            (None, None)
        };
        ClassifyReport {
            schema: SCHEMA,
            command: "classify",
            source: path.display().to_string(),
            kind: kind.map(|k| k.to_string()),
            invariant_class: invariant_class(kind),
            chiral: Some(sym.chiral.is_some()),
            model_symmetries: None,
            relations: Some(Relations {
                j_unitary: rel.j_unitary,
                j_unitary_residual: Num(rel.j_unitary_residual),
                real: rel.real,
                chiral: rel.chiral,
            }),
            unit_spectrum: unit,
            invariants,
        }
    } else {
        let m = load_model(model)?;
        let verdict = m.verify_symmetries(1e-10);
        let sym = m.transfer_symmetries(energy, 1);
        let kind = sym.kind();
        ClassifyReport {
            schema: SCHEMA,
            command: "classify",
            source: m.name.clone(),
            kind: kind.map(|k| k.to_string()),
            invariant_class: invariant_class(kind),
            chiral: Some(sym.chiral.is_some()),
            model_symmetries: Some(ModelVerdict {
                energy: Num(energy),
                time_reversal: verdict.trs,
                particle_hole: verdict.phs,
                chiral: verdict.chiral,
            }),
            relations: None,
            unit_spectrum: None,
            invariants: None,
        }
    };
    let mut written = Written::new();
    if fmt.json {
        written.put(&out.out, "classify.json", &to_json(&report))?;
    }
    print!("{}", to_json(&report));
    written.report();
    Ok(())
}

#[derive(Serialize)]
struct CollideStep {
    t: Num,
    eigenvalues: Vec<[Num; 2]>,
    unit: Vec<UnitRow>,
    signature: i64,
    min_distance_to_circle: Num,
}

#[derive(Serialize)]
struct CollideReport {
    schema: u32,
    command: &'static str,
    scenario: Scenario,
    steps: Vec<CollideStep>,
}

fn scenario_from(name: ScenarioName, p: &ScenarioArgs) -> Result<Scenario> {
    Ok(match name {
        ScenarioName::Krein2x2 => Scenario::Krein2x2 {
            lambda: Complex64::from_polar(1.0, p.lambda_arg),
            a: p.a,
            fundamental: Sign::from_value(p.fundamental).ok_or_else(|| config("--fundamental must be 1 or -1"))?,
        },
        ScenarioName::O11Block => Scenario::O11Block { sigma: p.sigma, kappa: p.kappa, lambda: p.lambda },
        ScenarioName::Quadruple => Scenario::Quadruple { alpha: p.alpha, a: p.a },
        ScenarioName::Mediated => Scenario::Mediated { orientation: p.orientation },
    })
}

pub fn collide(
    name: ScenarioName,
    params: &ScenarioArgs,
    t_min: f64,
    t_max: f64,
    steps: usize,
    out: &OutputArgs,
) -> Result<()> {
    let fmt = formats(out)?;
    if !t_min.is_finite() || !t_max.is_finite() || t_min > t_max || steps == 0 {
        return Err(config("need finite t-min <= t-max and steps >= 1"));
    }
    let scenario = scenario_from(name, params)?;
    let tol = Tolerances::default();
    let ts: Vec<f64> = if steps == 1 {
        vec![t_min]
    } else {
        (0..steps).map(|i| t_min + (t_max - t_min) * i as f64 / (steps - 1) as f64).collect()
    };
    let mut csv = Csv::new(&["t", "index", "re", "im", "distance_to_circle"]);
    let mut rows = Vec::new();
    let mut trace = Vec::new();
    for &t in &ts {
        let (m, sym) = collision_path(&scenario, t)?;
        let mut ev = eigenvalues(&m).ok_or_else(|| CliError::Numerical("eigenvalues did not converge".into()))?;
        ev.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        let eigs = unit_inertias(&m, &sym, &tol)?.eigenvalues;
        let mut min_d = f64::INFINITY;
        for (i, z) in ev.iter().enumerate() {
            let d = (z.norm() - 1.0).abs();
            min_d = min_d.min(d);
            csv.row(&[Cell::F(t), Cell::I(i as i64), Cell::F(z.re), Cell::F(z.im), Cell::F(d)]);
            trace.push((z.re, z.im));
        }
        rows.push(CollideStep {
            t: Num(t),
            eigenvalues: ev.iter().map(|z| [Num(z.re), Num(z.im)]).collect(),
            unit: eigs
                .iter()
                .map(|e| UnitRow {
                    re: Num(e.lambda.re),
                    im: Num(e.lambda.im),
                    multiplicity: e.multiplicity,
                    nu_plus: e.nu_plus,
                    nu_minus: e.nu_minus,
                })
                .collect(),
            signature: global_signature(&eigs),
            min_distance_to_circle: Num(min_d),
        });
    }
    let report = CollideReport { schema: SCHEMA, command: "collide", scenario, steps: rows };
    let mut written = Written::new();
    if fmt.csv {
        written.put(&out.out, "collide.csv", &csv.finish())?;
    }
    if fmt.json {
        written.put(&out.out, "collide.json", &to_json(&report))?;
    }
    if fmt.svg {
        let mut plot = Plot::complex_plane("eigenvalue traces along the collision path", &trace, 4.0);
        plot.points(&trace, "#1f4e9c");
        written.put(&out.out, "collide.svg", &plot.render())?;
    }
    print!("{}", to_json(&report));
    written.report();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(model: Option<BuiltIn>) -> ModelArgs {
        ModelArgs {
            model,
            model_file: None,
            q: None,
            p: None,
            delta: None,
            mu: None,
            chirality: None,
            lambda_so: None,
            lambda_ra: None,
            lambda_st: None,
        }
    }

    #[test]
    fn built_in_defaults() {
        let m = load_model(&args(Some(BuiltIn::Harper))).unwrap();
        assert_eq!((m.q, m.p), (3, 7));
        let m = load_model(&args(Some(BuiltIn::Pip))).unwrap();
        assert_eq!((m.q, m.p), (1, 3));
        let m = load_model(&args(Some(BuiltIn::Did))).unwrap();
        assert_eq!((m.q, m.p), (0, 1));
    }

    #[test]
    fn foreign_parameters_are_rejected() {
        let mut a = args(Some(BuiltIn::KaneMele));
        a.mu = Some(0.1);
        assert_eq!(load_model(&a).unwrap_err().exit_code(), 3);
        let mut a = args(Some(BuiltIn::Harper));
        a.lambda_so = Some(1.0);
        assert_eq!(load_model(&a).unwrap_err().exit_code(), 3);
        assert_eq!(load_model(&args(None)).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn chirality_must_be_a_sign() {
        assert_eq!(chirality(None).unwrap(), 1.0);
        assert_eq!(chirality(Some(-1)).unwrap(), -1.0);
        assert!(chirality(Some(0)).is_err());
    }

    #[test]
    fn error_exit_codes() {
        let gap: CliError = EdgeError::NotInGap { k1: 0.0, distance: 0.0 }.into();
        assert_eq!(gap.exit_code(), 4);
        let flat: CliError = EdgeError::FlatBandDetected(0.0).into();
        assert_eq!(flat.exit_code(), 5);
        let strong: CliError = TightBindingError::StrongHypothesisFailed { k2: 0.0, sv: 0.0 }.into();
        assert_eq!(strong.exit_code(), 2);
        let vertical: CliError = EdgeError::VerticalHypothesisFailed { site: 0, k1: 0.0, sv: 0.0 }.into();
        assert_eq!(vertical.exit_code(), 2);
        let tracking: CliError = EdgeError::PhaseTrackingAmbiguous { refinements: 3 }.into();
        assert_eq!(tracking.exit_code(), 1);
    }

    #[test]
    fn grid_options_are_validated() {
        let grid = GridArgs { n_k1: 629, n_k2: 101, chern_grid: 60, refine_tol: 0.0 };
        assert!(crossing_options(&grid).is_err());
        let grid = GridArgs { n_k1: 4, n_k2: 101, chern_grid: 60, refine_tol: 1e-10 };
        assert!(crossing_options(&grid).is_err());
    }

    #[test]
    fn matrix_file_shapes() {
        assert!(real_rows(&[vec![1.0, 0.0], vec![0.0]], "fundamental").is_err());
        assert!(complex_rows(&[]).is_err());
        let m = complex_rows(&[vec![[1.0, 2.0]]]).unwrap();
        assert_eq!(m[(0, 0)], c64(1.0, 2.0));
    }
}
