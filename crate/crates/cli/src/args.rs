use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use otlab::measures::Norm;

#[derive(Debug, Parser)]
#[command(name = "ot", version, about = "Exact discrete optimal transport from the command line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Kantorovich problem and write plan, potentials and values.
    Solve(SolveArgs),
    /// Select an optimal plan for a distance cost by perturbation.
    Select(SelectArgs),
    /// Monotone coupling of two measures on the line.
    Rearrange1d(RearrangeArgs),
    /// Cyclical monotonicity and graph checks for a given plan.
    Certify(CertifyArgs),
    /// Transport density of a plan on a grid.
    Density(DensityArgs),
    /// p-Laplacian continuation and limit potential.
    Pde(PdeArgs),
    /// Reference solvers used for testing.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Args)]
pub struct Pair {
    /// Source measure (JSON).
    #[arg(long)]
    pub mu: PathBuf,
    /// Target measure (JSON).
    #[arg(long)]
    pub nu: PathBuf,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// euclidean, l1, linf or p=<q> for the l_q norm.
    #[arg(long, default_value = "euclidean", value_parser = parse_norm)]
    pub cost: Norm<f64>,
    /// Exponent applied to the norm.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub pow: f64,
    /// Crystalline perturbation `eps` (exponent must be 1).
    #[arg(long)]
    pub crystalline: Option<f64>,
}

pub fn parse_norm(s: &str) -> Result<Norm<f64>, String> {
    match s {
        "euclidean" | "l2" => Ok(Norm::Euclidean),
        "l1" => Ok(Norm::L1),
        "linf" => Ok(Norm::Linf),
        _ => {
            let q = s
                .strip_prefix("p=")
                .ok_or_else(|| format!("unknown norm {s:?}; expected euclidean, l1, linf or p=<q>"))?;
            q.parse::<f64>().map(Norm::P).map_err(|e| format!("bad norm exponent {q:?}: {e}"))
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[command(flatten)]
    pub cost: CostArgs,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub pair: Pair,
    /// euclidean, l1, linf or p=<q>; l1 and linf use the crystalline family.
    #[arg(long, default_value = "euclidean", value_parser = parse_norm)]
    pub norm: Norm<f64>,
    /// Decreasing perturbation schedule, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub eps: Option<Vec<f64>>,
    /// Also write the plan at every level of the schedule.
    #[arg(long)]
    pub include_plans: bool,
    #[arg(long, default_value = "selection.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RearrangeArgs {
    #[command(flatten)]
    pub pair: Pair,
    /// Exponent of `|x - y|` for the reported cost.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub pow: f64,
    #[arg(long, default_value = "rearrangement.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub pair: Pair,
    /// Plan (JSON) between the two measures.
    #[arg(long)]
    pub plan: PathBuf,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Longest cycle examined.
    #[arg(long, default_value_t = otlab::optimality::DEFAULT_MAX_CYCLE)]
    pub max_cycle: usize,
    #[arg(long, default_value = "certificate.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Lower-left corner of the grid.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
    pub origin: Option<Vec<f64>>,
    /// Side length of a cell.
    #[arg(long)]
    pub cell: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long)]
    pub plan: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// JSON envelope; the CSV is written next to it.
    #[arg(long, default_value = "density.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[command(flatten)]
    pub pair: Pair,
    /// Increasing p schedule, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "4,8,16,32,64")]
    pub p: Vec<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Cells per side of the default grid, used when no grid flags are given.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = otlab::pde::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = otlab::pde::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Smoothing passes applied to the rasterized measures.
    #[arg(long, default_value_t = 1)]
    pub smoothing: usize,
    /// Also write the potential of every k-th level.
    #[arg(long)]
    pub dump_every: Option<usize>,
    #[arg(long, default_value = "pde")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Optimal value by exhaustive enumeration (small instances).
    Brute(BruteArgs),
    /// Entropy-minimal plan on the optimal face of a distance cost.
    Secondary(SecondaryArgs),
}

#[derive(Debug, Args)]
pub struct BruteArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[command(flatten)]
    pub cost: CostArgs,
    #[arg(long, default_value = "oracle.json")]
    pub out: PathBuf,
}


#[derive(Debug, Args)]
pub struct SecondaryArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long, default_value = "euclidean", value_parser = parse_norm)]
    pub norm: Norm<f64>,
    #[arg(long, default_value = "oracle.json")]
    pub out: PathBuf,
}
