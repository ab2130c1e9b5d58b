use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use mppc::io::{self, CsvOptions, Projection, SvgOptions};
use mppc::{oracle, MppcError, MultiCurve, Params};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mppc", version, about = "Fit multiple penalized principal curves to point clouds", allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit curves and isolated points to a CSV point cloud.
    Fit(FitArgs),
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Evaluate closed-form length scales and thresholds.
    Oracle {
        #[command(subcommand)]
        query: OracleQuery,
    },
    /// Render data and a fitted result as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Header name or zero-based index of a weight column.
    #[arg(long = "weights-col")]
    weights_col: Option<String>,
    /// Keep the weights as given instead of rescaling to unit mass.
    #[arg(long)]
    no_normalize: bool,
    /// The first row holds data, not column names.
    #[arg(long)]
    no_header: bool,
}

impl InputArgs {
    fn load(&self) -> anyhow::Result<mppc::PointCloud> {
        let opts = CsvOptions {
            has_header: !self.no_header,
            weight_column: self.weights_col.clone(),
            normalize: !self.no_normalize,
        };
        io::load_csv(&self.input, &opts).with_context(|| format!("reading {}", self.input.display()))
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Critical density; with --hstar or --lambda2 it determines the weights.
    #[arg(long = "alpha-star")]
    alpha_star: Option<f64>,
    #[arg(long, requires = "alpha_star")]
    hstar: Option<f64>,
    #[arg(long)]
    ppc_only: bool,
    #[arg(long)]
    fix_endpoints: bool,
    /// Move every vertex to its center of mass after each relaxation
    #[arg(long)]
    centroid_all: bool,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// `singletons` or `file:PATH` naming a result document.
    #[arg(long, default_value = "singletons")]
    init: String,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Worker threads for data-parallel sections; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    /// segment, rectangle, spiral, oscillation, parallel_lines or grid_clutter.
    kind: String,
    /// Generator options as key=value.
    options: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// first2 or pca2; needed above two dimensions.
    #[arg(long)]
    proj: Option<String>,
}

#[derive(Subcommand)]
enum OracleQuery {
    Smoothing {
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        alpha: f64,
    },
    ProjectionDistance {
        #[arg(long)]
        curvature: f64,
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        alpha: f64,
    },
    CriticalLambda1 {
        #[arg(long)]
        alpha: f64,
        /// Root mean squared transverse spread.
        #[arg(long)]
        h: f64,
    },
    CriticalDensity {
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        lambda2: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    Gap {
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        lambda2: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    SegmentMinimizer {
        #[arg(long)]
        length: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        lambda2: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    SelectParams {
        #[arg(long = "alpha-star")]
        alpha_star: f64,
        #[arg(long, conflicts_with = "lambda2", required_unless_present = "lambda2")]
        hstar: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
    },
}

/// Fit finished but did not meet the stopping rule.
#[derive(Debug)]
struct NotConverged(usize);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no convergence after {} iterations; result written", self.0)
    }
}

impl std::error::Error for NotConverged {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<NotConverged>().is_some() {
        return 2;
    }
    for cause in e.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
        if let Some(m) = cause.downcast_ref::<MppcError>() {
            return if matches!(m, MppcError::Io(_)) { 3 } else { 1 };
        }
    }
    1
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Fit(args) => fit(args),
        Command::Generate(args) => generate(args),
        Command::Oracle { query } => {
            println!("{}", serde_json::to_string_pretty(&oracle_query(query)?)?);
            Ok(())
        }
        Command::Plot(args) => plot(args),
    }
}

fn weights(args: &FitArgs) -> anyhow::Result<(f64, f64)> {
    match (args.alpha_star, args.lambda1) {
        (Some(_), Some(_)) => bail!(MppcError::InvalidOption("--lambda1 conflicts with --alpha-star".into())),
        (Some(a), None) => match (args.hstar, args.lambda2) {
            (Some(h), None) => Ok(oracle::select_params(a, h)?),
            (None, Some(l2)) => Ok((oracle::lambda1_for_density(a, l2)?, l2)),
            _ => bail!(MppcError::InvalidOption("--alpha-star needs exactly one of --hstar, --lambda2".into())),
        },
        (None, Some(l1)) => match args.lambda2 {
            Some(l2) => Ok((l1, l2)),
            None => bail!(MppcError::InvalidOption("--lambda2 is required".into())),
        },
        (None, None) => bail!(MppcError::InvalidOption("give --lambda1 and --lambda2, or --alpha-star".into())),
    }
}

fn fit(args: FitArgs) -> anyhow::Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!(MppcError::InvalidOption(format!("--threads: {e}"))))?;
    }
    let (lambda1, lambda2) = weights(&args)?;
    let mut params = Params::new(lambda1, lambda2);
    params.ppc_only = args.ppc_only;
    params.fix_endpoints = args.fix_endpoints;
    params.centroid_all_vertices = args.centroid_all;
    params.rho = args.rho;
    params.seed = args.seed;
    if let Some(n) = args.max_iter {
        params.max_outer_iters = n;
    }
    let cloud = args.input.load()?;
    let initial = initial_curves(&args.init)?;
    let (curves, report) = mppc::fit(&cloud, &params, initial)?;
    io::save_result(&curves, &report, &params, &args.output).with_context(|| format!("writing {}", args.output.display()))?;
    if let Some(svg) = &args.svg {
        let opts = SvgOptions {
            projection: (cloud.dim() > 2).then_some(Projection::Pca2),
            ..SvgOptions::default()
        };
        io::write_svg(&cloud, &curves, svg, &opts).with_context(|| format!("writing {}", svg.display()))?;
    }
    eprintln!(
        "energy {:.6e}  components {}  singletons {}  iterations {}",
        report.energy.total,
        curves.component_count(),
        curves.singleton_count(),
        report.iterations
    );
    if !report.converged {
        bail!(NotConverged(report.iterations));
    }
    Ok(())
}

fn initial_curves(init: &str) -> anyhow::Result<Option<MultiCurve>> {
    if init == "singletons" {
        return Ok(None);
    }
    let Some(path) = init.strip_prefix("file:") else {
        bail!(MppcError::InvalidOption(format!("--init `{init}`: expected singletons or file:PATH")));
    };
    let (curves, _, _) = io::load_result(Path::new(path)).with_context(|| format!("reading {path}"))?;
    Ok(Some(curves))
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let mut options = BTreeMap::new();
    for pair in &args.options {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| MppcError::InvalidOption(format!("`{pair}` is not key=value")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| MppcError::InvalidOption(format!("`{key}`: `{value}` is not a number")))?;
        options.insert(key.to_owned(), value);
    }
    let cloud = io::generate(&args.kind, &options, args.seed)?;
    let file = std::fs::File::create(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    io::write_csv(&cloud, std::io::BufWriter::new(file), false)?;
    Ok(())
}

fn plot(args: PlotArgs) -> anyhow::Result<()> {
    let cloud = args.input.load()?;
    let (curves, _, _) = io::load_result(&args.result).with_context(|| format!("reading {}", args.result.display()))?;
    let opts = SvgOptions {
        projection: args.proj.as_deref().map(str::parse).transpose()?,
        ..SvgOptions::default()
    };
    io::write_svg(&cloud, &curves, &args.output, &opts).with_context(|| format!("writing {}", args.output.display()))?;
    Ok(())
}

fn oracle_query(query: OracleQuery) -> anyhow::Result<serde_json::Value> {
    Ok(match query {
        OracleQuery::Smoothing { lambda1, alpha } => json!({ "smoothing_length": oracle::smoothing_length(lambda1, alpha)? }),
        OracleQuery::ProjectionDistance { curvature, lambda1, alpha } => {
            json!({ "projection_distance": oracle::projection_distance(curvature, lambda1, alpha)? })
        }
        OracleQuery::CriticalLambda1 { alpha, h } => json!({ "critical_lambda1": oracle::critical_lambda1(alpha, h)? }),
        OracleQuery::CriticalDensity { lambda1, lambda2, p } => {
            json!({ "critical_density": oracle::critical_density(lambda1, lambda2, p)? })
        }
        OracleQuery::Gap { lambda1, lambda2, alpha, p } => json!({ "gap": oracle::typical_gap(lambda1, lambda2, alpha, p)? }),
        OracleQuery::SegmentMinimizer { length, alpha, lambda1, lambda2, p } => {
            serde_json::to_value(oracle::segment_minimizer(length, alpha, lambda1, lambda2, p)?)?
        }
        OracleQuery::SelectParams { alpha_star, hstar, lambda2 } => {
            let (l1, l2) = match (hstar, lambda2) {
                (Some(h), _) => oracle::select_params(alpha_star, h)?,
                (None, Some(l2)) => (oracle::lambda1_for_density(alpha_star, l2)?, l2),
                (None, None) => unreachable!("clap requires one of the two"),
            };
            json!({ "lambda1": l1, "lambda2": l2 })
        }
    })
}
