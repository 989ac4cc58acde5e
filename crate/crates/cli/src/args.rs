use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "krein-topo",
    version,
    about = "Krein inertia invariants of transfer operators for periodic tight-binding models",
    after_help = "Exit codes: 0 success, 1 numerical failure, 2 invertibility hypothesis failed, \
                  3 bad configuration, 4 energy not in a bulk gap, 5 flat edge band.\n\
                  KREIN_TOPO_THREADS caps the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum of the bulk transfer matrices over the reduced k2 zone.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Edge crossings, Krein inertia invariants and the Chern number cross-check.
    Invariants {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Eigenphases of the edge unitary along k1, and crossings over an energy sweep.
    EdgeBands {
        #[command(flatten)]
        model: ModelArgs,
        /// Energy at which the eigenphase curves are computed.
        #[arg(long, allow_hyphen_values = true)]
        energy: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "e_max")]
        e_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "e_min")]
        e_max: Option<f64>,
        #[arg(long, default_value_t = 21)]
        n_e: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Symmetry kind of a model's transfer matrices or of a matrix file.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        /// JSON file with "matrix" and "fundamental" (optionally "real", "chiral").
        #[arg(long, conflicts_with = "model_file")]
        matrix_file: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        energy: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Eigenvalue traces and inertias along a model collision path.
    Collide {
        #[arg(value_enum)]
        scenario: ScenarioName,
        #[command(flatten)]
        params: ScenarioArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
        t_min: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
        t_max: f64,
        #[arg(long, default_value_t = 81)]
        steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltIn {
    Harper,
    #[value(name = "kanemele")]
    KaneMele,
    Pip,
    Did,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Built-in model.
    #[arg(value_enum)]
    pub model: Option<BuiltIn>,
    /// Model file in the JSON model format.
    #[arg(long, conflicts_with = "model")]
    pub model_file: Option<PathBuf>,
    /// Flux numerator.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<i64>,
    /// Flux denominator.
    #[arg(long)]
    pub p: Option<usize>,
    /// Pairing strength of the superconducting models.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Chemical potential of the superconducting models.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Orientation of the pairing, +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    pub chirality: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_so: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_ra: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_st: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Points of the k1 grid over [-pi, pi].
    #[arg(long, default_value_t = 629)]
    pub n_k1: usize,
    /// Points of the k2 grid over the reduced zone; odd values avoid k2 = 0.
    #[arg(long, default_value_t = 101)]
    pub n_k2: usize,
    /// Side of the grid used by the Chern number.
    #[arg(long, default_value_t = 60)]
    pub chern_grid: usize,
    /// Bisection tolerance in k1 for edge crossings.
    #[arg(long, default_value_t = 1e-10)]
    pub refine_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Comma-separated subset of csv, json, svg.
    #[arg(long, default_value = "csv,json,svg")]
    pub format: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    #[value(name = "krein_2x2")]
    Krein2x2,
    #[value(name = "o11_block")]
    O11Block,
    Quadruple,
    Mediated,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Shear of the two-by-two collision.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub a: f64,
    /// Argument of the collision point on the unit circle.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda_arg: f64,
    /// Sign of the square of the fundamental symmetry.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
    pub fundamental: i32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub kappa: f64,
    /// Overall sign of the real block.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub lambda: f64,
    /// Collision angle of the quadruple.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub orientation: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults_and_negative_energies() {
        let cli = Cli::try_parse_from(["krein-topo", "invariants", "harper", "--energy", "-1.9"]).unwrap();
        let Command::Invariants { model, energy, grid, output } = cli.command else { panic!() };
        assert_eq!(model.model, Some(BuiltIn::Harper));
        assert_eq!(energy, -1.9);
        assert_eq!((grid.n_k1, grid.n_k2, grid.chern_grid), (629, 101, 60));
        assert_eq!(output.format, "csv,json,svg");
    }

    #[test]
    fn model_and_model_file_conflict() {
        let parsed =
            Cli::try_parse_from(["krein-topo", "spectrum", "harper", "--model-file", "m.json", "--energy", "0"]);
        assert!(parsed.is_err());
    }

    #[test]
    fn scenario_names() {
        let cli = Cli::try_parse_from(["krein-topo", "collide", "krein_2x2", "--a", "0"]).unwrap();
        let Command::Collide { scenario, params, .. } = cli.command else { panic!() };
        assert_eq!(scenario, ScenarioName::Krein2x2);
        assert_eq!(params.a, 0.0);
    }
}
