use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use otdepth::breakdown::{trace_csv, Harness, Strategy};
use otdepth::depth::{lexicographic_first, lower_tukey_depth, tukey_depth};
use otdepth::io::{cloud_to_csv, read_cloud_file};
use otdepth::reference::generate;
use otdepth::{BreakdownEstimate, ContourSet, DepthMode, DepthValue, Point, RefKind, RefSpec, TransportQuantileFn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_list, BreakdownConfig, Estimand};
use crate::output::Outputs;
use crate::Status;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Args, Debug, Serialize)]
pub struct DepthArgs {
    /// CSV point cloud.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Query point as comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "all", conflicts_with = "all")]
    pub query: Option<String>,
    /// Report every cloud point.
    #[arg(long)]
    pub all: bool,
    /// `exact` or `approx:M` (M random directions).
    #[arg(long, default_value = "exact")]
    pub mode: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Output directory for the report and manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DepthRow {
    point: Point,
    depth: DepthValue,
    lower_depth: DepthValue,
    min_direction: Vec<f64>,
}

pub fn depth(args: DepthArgs) -> Result<Status> {
    let cloud = read_cloud_file(&args.reference).with_context(|| format!("reading {}", args.reference.display()))?;
    let mode = DepthMode::parse(&args.mode, args.seed)?;
    let queries: Vec<Point> = match &args.query {
        Some(q) => vec![Point::new(parse_list(q)?)?],
        None => cloud.points().to_vec(),
    };
    let rows = queries
        .into_par_iter()
        .map(|x| {
            let td = tukey_depth(&x, &cloud, mode)?;
            let lower = lower_tukey_depth(&x, &cloud, mode)?;
            let min_direction = lexicographic_first(&td.directions).unwrap_or_default();
            Ok(DepthRow { point: x, depth: td.depth, lower_depth: lower.depth, min_direction })
        })
        .collect::<otdepth::Result<Vec<_>>>()?;

    let (name, body) = match args.format {
        Format::Text if args.query.is_some() => ("depth.txt", format!("{}, {}\n", rows[0].depth, rows[0].lower_depth)),
        Format::Text => {
            ("depth.txt", rows.iter().map(|r| format!("{}: {}, {}\n", r.point, r.depth, r.lower_depth)).collect())
        }
        Format::Json => ("depth.json", serde_json::to_string_pretty(&rows)? + "\n"),
        Format::Csv => {
            let mut out = (0..cloud.dim()).map(|k| format!("x{k},")).collect::<String>();
            out.push_str("depth,lower_depth\n");
            for r in &rows {
                for c in r.point.coords() {
                    write!(out, "{c:?},")?;
                }
                writeln!(out, "{},{}", r.depth, r.lower_depth)?;
            }
            ("depth.csv", out)
        }
    };
    print!("{body}");
    let mut outputs = Outputs::new(args.out.clone());
    outputs.add(name, body);
    outputs.finish("depth", &args, args.seed)?;
    Ok(Status::Ok)
}

#[derive(Args, Debug, Serialize)]
pub struct TransportArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TargetDepth {
    target_index: usize,
    ref_index: usize,
    depth: DepthValue,
}

#[derive(Serialize)]
struct TransportReport<'a> {
    sigma: &'a [usize],
    cost: f64,
    depths: Vec<TargetDepth>,
    contours: Vec<ContourSet>,
    median: ContourSet,
}

pub fn transport(args: TransportArgs) -> Result<Status> {
    let reference =
        read_cloud_file(&args.reference).with_context(|| format!("reading {}", args.reference.display()))?;
    let target = read_cloud_file(&args.target).with_context(|| format!("reading {}", args.target.display()))?;
    if reference.len() != target.len() {
        bail!("reference has {} points but target has {}", reference.len(), target.len());
    }
    let q = TransportQuantileFn::fit(reference, target)?;
    let depths: Vec<TargetDepth> = (0..q.len())
        .map(|j| Ok(TargetDepth { target_index: j, ref_index: q.distribution(j)?, depth: q.transport_depth(j)? }))
        .collect::<otdepth::Result<_>>()?;
    let report = TransportReport {
        sigma: &q.matching().sigma,
        cost: q.matching().total_cost,
        contours: q.depth_levels().into_iter().map(|t| q.transport_contour(t)).collect(),
        median: q.transport_median(),
        depths,
    };

    let mut table = String::from("target_index,ref_index,depth\n");
    for d in &report.depths {
        writeln!(table, "{},{},{}", d.target_index, d.ref_index, d.depth)?;
    }
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Csv => print!("{table}"),
        Format::Text => {
            println!("cost {:?}", report.cost);
            println!("sigma {:?}", report.sigma);
            for c in &report.contours {
                println!("depth {}: {}", c.tau, c.points.iter().map(Point::to_string).collect::<Vec<_>>().join(" "));
            }
            println!("median: {}", report.median.points.iter().map(Point::to_string).collect::<Vec<_>>().join(" "));
        }
    }
    let mut outputs = Outputs::new(args.out.clone());
    outputs.add_json("matching.json", q.matching())?;
    outputs.add_json("transport.json", &report)?;
    outputs.add("depths.csv", table);
    outputs.finish("transport", &args, 0)?;
    Ok(Status::Ok)
}

#[derive(Args, Debug, Serialize)]
pub struct BreakdownArgs {
    /// Config JSON path, or a packaged config name (`figure1`, `quantile1d`).
    pub config: String,
    /// Estimate the map at this reference index (overrides the config).
    #[arg(long, conflicts_with_all = ["tau", "median"])]
    pub index: Option<usize>,
    /// Estimate the contour at this depth, e.g. `1/5`.
    #[arg(long, conflicts_with = "median")]
    pub tau: Option<DepthValue>,
    /// Estimate the median set.
    #[arg(long)]
    pub median: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Magnitudes in units of the data diameter, e.g. `1e2,1e3,1e4`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Comma-separated strategy names.
    #[arg(long)]
    pub strategies: Option<String>,
    /// Inclusive contamination range `lo,hi`.
    #[arg(long)]
    pub ell_range: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Applies command-line overrides to a config.
pub fn apply_overrides(config: &mut BreakdownConfig, args: &BreakdownArgs) -> Result<()> {
    if args.index.is_some() || args.tau.is_some() || args.median {
        config.index = args.index;
        config.tau = args.tau;
        config.median = args.median;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(s) = &args.schedule {
        config.schedule = Some(parse_list(s)?);
    }
    if let Some(s) = &args.strategies {
        config.strategies = Some(parse_list::<Strategy>(s)?);
    }
    if let Some(s) = &args.ell_range {
        match parse_list::<usize>(s)?[..] {
            [lo, hi] => config.ell_range = Some((lo, hi)),
            _ => bail!("--ell-range expects lo,hi"),
        }
    }
    Ok(())
}

pub fn run_config(config: &BreakdownConfig, base: &std::path::Path) -> Result<BreakdownEstimate> {
    let estimand = config.estimand()?;
    let (reference, target) = config.clouds(base)?;
    let mut harness = Harness::new(&reference, &target, config.options())?;
    Ok(match estimand {
        Estimand::Map(i) => harness.estimate_bp_map(i)?,
        Estimand::Contour(tau) => harness.estimate_bp_contour(tau)?,
        Estimand::Median => harness.estimate_bp_median()?,
    })
}

pub fn breakdown(args: BreakdownArgs) -> Result<Status> {
    let (mut config, base) = BreakdownConfig::locate(&args.config)?;
    apply_overrides(&mut config, &args)?;
    let est = run_config(&config, &base)?;
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&est)?),
        Format::Csv => print!("{}", trace_csv(&est.trace)),
        Format::Text => println!("{est}"),
    }
    let mut outputs = Outputs::new(args.out.clone());
    outputs.add_json("result.json", &est)?;
    outputs.add("trace.csv", trace_csv(&est.trace));
    outputs.finish("breakdown", &config, config.seed)?;
    Ok(if est.within_bracket { Status::Ok } else { Status::BracketViolation })
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KindArg {
    SphericalUniform,
    HaltonCube,
    SphericalGrid,
    Gaussian,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Number of points; derived from the grid shape for `spherical_grid`.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturb into general position with noise of this magnitude.
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub radii: usize,
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    #[arg(long)]
    pub center: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn generate_cmd(args: GenerateArgs) -> Result<Status> {
    let kind = match args.kind {
        KindArg::SphericalUniform => RefKind::SphericalUniform,
        KindArg::HaltonCube => RefKind::HaltonCube,
        KindArg::Gaussian => RefKind::Gaussian,
        KindArg::SphericalGrid => {
            RefKind::SphericalGrid { radii: args.radii, directions: args.directions, center: args.center }
        }
    };
    let n = match (args.n, &kind) {
        (Some(n), _) => n,
        (None, RefKind::SphericalGrid { radii, directions, center }) => radii * directions + *center as usize,
        (None, _) => bail!("--n is required for {}", kind.name()),
    };
    let mut spec = RefSpec::new(kind, n, args.dim, args.seed);
    spec.jitter = args.jitter;
    let csv = cloud_to_csv(&generate(&spec)?);
    print!("{csv}");
    let mut outputs = Outputs::new(args.out.clone());
    outputs.add("reference.csv", csv);
    outputs.finish("generate", &spec, args.seed)?;
    Ok(Status::Ok)
}
