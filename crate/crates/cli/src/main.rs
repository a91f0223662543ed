mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trisk_lts::Error;

#[derive(Parser)]
#[command(name = "trisk-lts", version, about = "TRiSK shallow-water model with local time stepping")]
#[command(allow_negative_numbers = true)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a quasi-uniform or locally refined icosahedral mesh.
    Mesh(MeshArgs),
    /// Label fine, interface and coarse cells.
    Regions(RegionsArgs),
    /// Build the region-aware decomposition and its METIS inputs.
    Partition(PartitionArgs),
    /// Run test case 5 from a config file.
    Run(RunArgs),
    /// Measure convergence slopes against an RK4 reference.
    Converge(ConvergeArgs),
    /// Derived metrics: optimal ratio, gain, solution and work comparisons.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct MeshArgs {
    /// Icosahedron subdivision level (cells = 10·4^level + 2).
    #[arg(long)]
    pub level: u32,
    /// Refinement center `LON,LAT` in degrees.
    #[arg(long, value_delimiter = ',', value_name = "LON,LAT")]
    pub refine_center: Option<Vec<f64>>,
    /// Refined cap radius in degrees.
    #[arg(long)]
    pub refine_radius: Option<f64>,
    /// Coarse over fine cell diameter.
    #[arg(long, default_value_t = 1)]
    pub refine_factor: u32,
    #[arg(long, default_value_t = 0)]
    pub lloyd: u32,
    /// Sphere radius in meters.
    #[arg(long, default_value_t = trisk_lts::mesh::DEFAULT_RADIUS)]
    pub radius: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RegionsArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Fine cap center `LON,LAT` in degrees.
    #[arg(long, value_delimiter = ',', value_name = "LON,LAT", requires = "cap_radius")]
    pub cap_center: Option<Vec<f64>>,
    /// Fine cap radius in degrees.
    #[arg(long, requires = "cap_center")]
    pub cap_radius: Option<f64>,
    /// Fine where the cell diameter is below this fraction of the largest.
    #[arg(long, conflicts_with_all = ["cap_center", "cap_radius"])]
    pub fine_size_ratio: Option<f64>,
    /// Interface width in cell layers.
    #[arg(long, default_value_t = 1)]
    pub width: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub regions: PathBuf,
    #[arg(long)]
    pub ranks: usize,
    /// A and B use the balanced decomposition; C moves every interface cell to rank 0.
    #[arg(long, default_value = "A", value_parser = ["A", "B", "C", "a", "b", "c"])]
    pub case: String,
    /// Per-cell rank labels (one per line) instead of the built-in partitioner.
    #[arg(long)]
    pub import_part: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Run config file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Command-line values that replace entries of the config file.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Fine substeps per coarse step.
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub dt_coarse: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub ranks: Option<usize>,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Coarse time steps, e.g. `40,20,10,5`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dts: Vec<f64>,
    /// Reference RK4 step; defaults to min(dts)/20.
    #[arg(long)]
    pub dt_ref: Option<f64>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// `N_TOTAL N_COARSE_DT N_FINE_DT M`.
    #[arg(long, num_args = 4, value_names = ["N_TOTAL", "N_COARSE_DT", "N_FINE_DT", "M"])]
    pub optimal_ratio: Option<Vec<u64>>,
    /// Reference and LTS times.
    #[arg(long, num_args = 2, value_names = ["T_REF", "T_LTS"])]
    pub gain: Option<Vec<f64>>,
    /// Two run directories (or `fields_final.csv` files) to compare.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub compare: Option<Vec<PathBuf>>,
    /// Two `ledger.csv` files (or run directories); prints the ratio of their cell evaluations.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub work: Option<Vec<PathBuf>>,
    /// Mesh and region file for A_ls and C_cf.
    #[arg(long, requires = "regions")]
    pub mesh: Option<PathBuf>,
    #[arg(long, requires = "mesh")]
    pub regions: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Mesh(a) => commands::mesh(a),
        Command::Regions(a) => commands::regions(a),
        Command::Partition(a) => commands::partition(a),
        Command::Run(a) => commands::run(a),
        Command::Converge(a) => commands::converge(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
