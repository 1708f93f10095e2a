//! End-to-end reproduction of the worked examples and the randomized bracket sweep.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, ValueEnum};
use otdepth::breakdown::{trace_csv, Harness, HarnessOptions};
use otdepth::depth::{lower_tukey_depth, tukey_depth};
use otdepth::reference::sweep_instance;
use otdepth::{rng, BreakdownEstimate, DepthMode, DepthValue, PointCloud};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::run_config;
use crate::config::BreakdownConfig;
use crate::output::Outputs;
use crate::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    Figure1,
    Quantile1d,
    BracketSweep,
}

#[derive(Args, Debug, Serialize)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub name: Example,
    /// Report directory; defaults to `otdepth-repro/<name>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed of the bracket sweep; instance `s` uses a seed split from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random instances in the bracket sweep.
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub instance: String,
    pub n: usize,
    pub dim: usize,
    pub index: usize,
    pub td: DepthValue,
    pub td_lower: DepthValue,
    pub bp: Option<DepthValue>,
    pub bracket_lo: DepthValue,
    pub bracket_hi: DepthValue,
    pub within_bracket: bool,
    /// `[TD - (d-1)/n, TD]`, when the reference is in general position.
    pub within_general_position: Option<bool>,
}

impl Row {
    fn new(instance: String, reference: &PointCloud, index: usize, est: &BreakdownEstimate) -> Result<Self> {
        let u = &reference[index];
        let gp = est.extra_brackets.iter().find(|b| b.name == "general_position");
        Ok(Row {
            instance,
            n: reference.len(),
            dim: reference.dim(),
            index,
            td: tukey_depth(u, reference, DepthMode::Exact)?.depth,
            td_lower: lower_tukey_depth(u, reference, DepthMode::Exact)?.depth,
            bp: est.bp_estimate,
            bracket_lo: est.bracket_lo,
            bracket_hi: est.bracket_hi,
            within_bracket: est.within_bracket,
            within_general_position: gp.and_then(|b| b.contains_estimate),
        })
    }

    fn ok(&self) -> bool {
        self.within_bracket && self.within_general_position != Some(false)
    }
}

const COLUMNS: [&str; 11] =
    ["instance", "n", "dim", "index", "TD", "TD-", "BP", "bracket_lo", "bracket_hi", "within_bracket", "within_gp"];

fn cells(r: &Row) -> [String; 11] {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    [
        r.instance.clone(),
        r.n.to_string(),
        r.dim.to_string(),
        r.index.to_string(),
        r.td.to_string(),
        r.td_lower.to_string(),
        opt(r.bp.map(|b| b.to_string())),
        r.bracket_lo.to_string(),
        r.bracket_hi.to_string(),
        r.within_bracket.to_string(),
        opt(r.within_general_position.map(|b| b.to_string())),
    ]
}

pub fn summary_csv(rows: &[Row]) -> String {
    let mut out = COLUMNS.join(",") + "\n";
    for r in rows {
        out.push_str(&cells(r).join(","));
        out.push('\n');
    }
    out
}

pub fn summary_markdown(rows: &[Row]) -> String {
    let mut out = format!("| {} |\n|{}\n", COLUMNS.join(" | "), "---|".repeat(COLUMNS.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", cells(r).join(" | "));
    }
    out
}

fn worked_example(name: &str, outputs: &mut Outputs) -> Result<Vec<Row>> {
    let (config, base) = BreakdownConfig::locate(name)?;
    let est = run_config(&config, &base)?;
    let (reference, _) = config.clouds(&base)?;
    outputs.add_json("result.json", &est)?;
    outputs.add("trace.csv", trace_csv(&est.trace));
    Ok(vec![Row::new(name.to_string(), &reference, config.index.unwrap_or(0), &est)?])
}

fn sweep_seed(base: u64, s: usize) -> u64 {
    rng::split(base, s as u64)
}

fn bracket_sweep(args: &ReproArgs) -> Result<Vec<Row>> {
    let per_instance = (0..args.instances)
        .into_par_iter()
        .map(|s| {
            let n = if s < args.instances / 2 { 10 } else { 20 };
            let seed = sweep_seed(args.seed, s);
            let (reference, target) = sweep_instance(seed, n, 2)?;
            let options = HarnessOptions { seed, ..HarnessOptions::default() };
            let mut harness = Harness::new(&reference, &target, options)?;
            (0..n)
                .map(|i| {
                    let est = harness.estimate_bp_map(i)?;
                    Row::new(format!("sweep-{s}"), &reference, i, &est)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

pub fn repro(args: ReproArgs) -> Result<Status> {
    let dir = args.out.clone().unwrap_or_else(|| {
        let name = args.name.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        Path::new("otdepth-repro").join(name)
    });
    let mut outputs = Outputs::new(Some(dir.clone()));
    let rows = match args.name {
        Example::Figure1 => worked_example("figure1", &mut outputs)?,
        Example::Quantile1d => worked_example("quantile1d", &mut outputs)?,
        Example::BracketSweep => bracket_sweep(&args)?,
    };
    let passed = rows.iter().filter(|r| r.ok()).count();
    if args.name == Example::BracketSweep {
        let gp = rows.iter().filter(|r| r.within_general_position == Some(true)).count();
        let lower = rows.iter().filter(|r| r.within_bracket).count();
        println!("bracket-sweep: {} estimates over {} instances", rows.len(), args.instances);
        println!("  within [TD-, TD]: {lower}/{}", rows.len());
        println!("  within [TD - (d-1)/n, TD]: {gp}/{}", rows.len());
        for r in rows.iter().filter(|r| !r.ok()) {
            println!("  outside: {}", cells(r).join(" "));
        }
    } else {
        print!("{}", summary_markdown(&rows));
    }
    outputs.add("summary.csv", summary_csv(&rows));
    outputs.add("summary.md", summary_markdown(&rows));
    outputs.add_json("rows.json", &rows)?;
    outputs.finish("repro", &args, args.seed)?;
    println!("report written to {}", dir.display());
    Ok(if passed == rows.len() { Status::Ok } else { Status::BracketViolation })
}
