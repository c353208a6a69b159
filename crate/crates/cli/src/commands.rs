use std::path::{Path, PathBuf};

use otlab::grid::{FieldEnvelope, GridField, GridSpec};
use otlab::kantorovich::SolveReportFile;
use otlab::measures::{CostSpec, DiscreteMeasure, Norm, PlanFile};
use otlab::optimality::MonotonicityReport;
use otlab::pde::{default_grid, evans_gangbo_limit_with, EgOptions, EgReport, LevelReport};
use otlab::selection::{default_schedule, secondary_gap, SelectionReportFile};
use otlab::{
    brute_force_optimum, check_cyclical_monotonicity, check_quadratic_monotone_support, duality_gap,
    exact_secondary_oracle, is_graph, monotone_rearrangement, select_crystalline, select_monge_plan,
    solve_kantorovich, transport_density_field, SolveError,
};
use serde::Serialize;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::io::{csv_path, read_measure, read_plan, write_json, write_text};

fn read_pair(pair: &Pair) -> CliResult<(DiscreteMeasure<f64>, DiscreteMeasure<f64>)> {
    Ok((read_measure(&pair.mu)?, read_measure(&pair.nu)?))
}

fn cost_spec(args: &CostArgs) -> CliResult<CostSpec<f64>> {
    Ok(match args.crystalline {
        Some(eps) => {
            if args.pow != 1.0 {
                return Err(CliError::Validation("--crystalline requires --pow 1".into()));
            }
            CostSpec::crystalline(args.cost, eps)?
        }
        None => CostSpec::new(args.cost, args.pow)?,
    })
}

fn grid_spec(args: &GridArgs) -> CliResult<Option<GridSpec<f64>>> {
    match (&args.origin, args.cell, args.nx, args.ny) {
        (None, None, None, None) => Ok(None),
        (Some(o), Some(h), Some(nx), Some(ny)) => Ok(Some(GridSpec::new([o[0], o[1]], h, nx, ny)?)),
        _ => Err(CliError::Validation(
            "grid needs all of --origin X Y, --cell, --nx and --ny".into(),
        )),
    }
}

#[derive(Serialize)]
struct SolveOutput {
    cost: CostSpec<f64>,
    duality_gap: f64,
    #[serde(flatten)]
    report: SolveReportFile<f64>,
}

pub fn solve(args: &SolveArgs) -> CliResult<PathBuf> {
    let spec = cost_spec(&args.cost)?;
    let (mu, nu) = read_pair(&args.pair)?;
    let report = solve_kantorovich(&mu, &nu, &spec)?;
    let out = SolveOutput {
        cost: spec,
        duality_gap: duality_gap(&report, &spec)?,
        report: report.to_file(),
    };
    write_json(&args.out, &out)?;
    Ok(args.out.clone())
}

#[derive(Serialize)]
struct SelectOutput {
    norm: Norm<f64>,
    family: &'static str,
    #[serde(flatten)]
    report: SelectionReportFile<f64>,
}

pub fn select(args: &SelectArgs) -> CliResult<PathBuf> {
    let (mu, nu) = read_pair(&args.pair)?;
    let eps = args.eps.clone().unwrap_or_else(default_schedule);
    let (family, report) = match args.norm {
        Norm::L1 | Norm::Linf => ("crystalline", select_crystalline(&mu, &nu, args.norm, &eps)?),
        norm => ("power", select_monge_plan(&mu, &nu, norm, &eps)?),
    };
    let out = SelectOutput {
        norm: args.norm,
        family,
        report: report.to_file(args.include_plans),
    };
    write_json(&args.out, &out)?;
    Ok(args.out.clone())
}

#[derive(Serialize)]
struct RearrangeOutput {
    pow: f64,
    cost: f64,
    plan: PlanFile<f64>,
}

pub fn rearrange1d(args: &RearrangeArgs) -> CliResult<PathBuf> {
    let spec = CostSpec::new(Norm::Euclidean, args.pow)?;
    let (mu, nu) = read_pair(&args.pair)?;
    let plan = monotone_rearrangement(&mu, &nu)?;
    let out = RearrangeOutput {
        pow: args.pow,
        cost: plan.cost(&spec),
        plan: plan.to_file(),
    };
    write_json(&args.out, &out)?;
    Ok(args.out.clone())
}

#[derive(Serialize)]
struct CertifyOutput {
    cost: CostSpec<f64>,
    plan_cost: f64,
    monotonicity: MonotonicityReport<f64>,
    is_graph: bool,
    split_mass: f64,
    quadratic_monotone_support: bool,
}

pub fn certify(args: &CertifyArgs) -> CliResult<PathBuf> {
    let spec = cost_spec(&args.cost)?;
    let (mu, nu) = read_pair(&args.pair)?;
    let plan = read_plan(&args.plan, &mu, &nu)?;
    let (graph, split_mass) = is_graph(&plan);
    let out = CertifyOutput {
        cost: spec,
        plan_cost: plan.cost(&spec),
        monotonicity: check_cyclical_monotonicity(&plan, &spec, args.max_cycle)?,
        is_graph: graph,
        split_mass,
        quadratic_monotone_support: check_quadratic_monotone_support(&plan),
    };
    write_json(&args.out, &out)?;
    Ok(args.out.clone())
}

#[derive(Serialize)]
struct DensityOutput {
    total: f64,
    plan_cost: f64,
    #[serde(flatten)]
    field: FieldEnvelope<f64>,
}

pub fn density(args: &DensityArgs) -> CliResult<PathBuf> {
    let spec = grid_spec(&args.grid)?
        .ok_or_else(|| CliError::Validation("density needs --origin X Y, --cell, --nx and --ny".into()))?;
    let (mu, nu) = read_pair(&args.pair)?;
    let plan = read_plan(&args.plan, &mu, &nu)?;
    let (field, outside) = transport_density_field(&plan, &spec)?;
    if outside > 0.0 {
        eprintln!("warning: the grid does not cover the plan; {outside} of the transport length lies outside");
    }
    let out = DensityOutput {
        total: field.sum(),
        plan_cost: plan.cost(&CostSpec::distance(Norm::Euclidean)),
        field: field.envelope(Some(outside)),
    };
    write_text(&csv_path(&args.out), &field.to_csv())?;
    write_json(&args.out, &out)?;
    Ok(args.out.clone())
}

#[derive(Serialize)]
struct PdeOutput<'a> {
    grid: GridSpec<f64>,
    p_schedule: &'a [f64],
    converged: bool,
    p_final: f64,
    residual: f64,
    grad_sup: f64,
    scale: f64,
    eikonal_fraction: f64,
    dual_value: f64,
    a_total: f64,
    levels: &'a [LevelReport<f64>],
}

fn write_field(dir: &Path, name: &str, field: &GridField<f64>) -> CliResult<()> {
    write_text(&dir.join(format!("{name}.csv")), &field.to_csv())?;
    write_json(&dir.join(format!("{name}.json")), &field.envelope(None))
}

pub fn pde(args: &PdeArgs) -> CliResult<PathBuf> {
    let (mu, nu) = read_pair(&args.pair)?;
    let spec = match grid_spec(&args.grid)? {
        Some(s) => s,
        None => default_grid(&mu, &nu, args.n)?,
    };
    if args.dump_every == Some(0) {
        return Err(CliError::Validation("--dump-every must be positive".into()));
    }
    let opts = EgOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        smoothing_passes: args.smoothing,
        ..EgOptions::default()
    };
    let (report, failure): (EgReport<f64>, Option<String>) =
        match evans_gangbo_limit_with(&mu, &nu, &spec, &args.p, &opts) {
            Ok(r) => (r, None),
            Err(SolveError::Invalid(e)) => return Err(e.into()),
            Err(e @ SolveError::NonConvergence { .. }) => {
                let message = e.to_string();
                let SolveError::NonConvergence { partial, .. } = e else { unreachable!() };
                (*partial, Some(message))
            }
        };

    let dir = &args.out_dir;
    write_field(dir, "u", &report.u)?;
    write_field(dir, "a", &report.a)?;
    if let Some(k) = args.dump_every {
        for (idx, level) in report.levels.iter().enumerate() {
            if (idx + 1) % k == 0 {
                let field = GridField::from_values(spec, level.u.clone())?;
                write_field(dir, &format!("u_p{}", level.p), &field)?;
            }
        }
    }
    let primary = dir.join("pde.json");
    let out = PdeOutput {
        grid: spec,
        p_schedule: &args.p,
        converged: failure.is_none(),
        p_final: report.p_final,
        residual: report.residual,
        grad_sup: report.grad_sup,
        scale: report.scale,
        eikonal_fraction: report.eikonal_fraction,
        dual_value: report.dual_value,
        a_total: report.a.integral(),
        levels: &report.levels,
    };
    write_json(&primary, &out)?;
    match failure {
        None => Ok(primary),
        Some(message) => Err(CliError::NonConvergence { message, primary }),
    }
}

#[derive(Serialize)]
struct BruteOutput {
    cost: CostSpec<f64>,
    optimum: f64,
}

#[derive(Serialize)]
struct SecondaryOutput {
    norm: Norm<f64>,
    secondary_value: f64,
    /// Absent when the optimal face has a single vertex.
    gap: Option<f64>,
    plan: PlanFile<f64>,
}

pub fn oracle(cmd: &OracleCommand) -> CliResult<PathBuf> {
    match cmd {
        OracleCommand::Brute(args) => {
            let spec = cost_spec(&args.cost)?;
            let (mu, nu) = read_pair(&args.pair)?;
            let out = BruteOutput {
                cost: spec,
                optimum: brute_force_optimum(&mu, &nu, &spec)?,
            };
            write_json(&args.out, &out)?;
            Ok(args.out.clone())
        }
        OracleCommand::Secondary(args) => {
            let (mu, nu) = read_pair(&args.pair)?;
            let (plan, value) = exact_secondary_oracle(&mu, &nu, args.norm)?;
            let gap = secondary_gap(&mu, &nu, args.norm)?;
            let out = SecondaryOutput {
                norm: args.norm,
                secondary_value: value,
                gap: gap.is_finite().then_some(gap),
                plan: plan.to_file(),
            };
            write_json(&args.out, &out)?;
            Ok(args.out.clone())
        }
    }
}
