//! The `blab` command-line front end.
//!
//! Every subcommand writes a CSV and a JSON [`RunSummary`] into `--out`.
//! Exit codes: 0 on success, 2 for usage and validation errors, 3 for
//! numerical failures. `BLAB_THREADS` caps the worker pool.

mod config;
mod output;
mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use config::config_tokens;
pub use output::{csv_bytes, read_summary, write_atomic, RunSummary, SCHEMA_VERSION};
pub use plot::{emit_plot, PlotKind};

use crate::bilinear::{
    build_case1, case1_ratios, case2_inequality_ratio, harmonic_sequence, sweep_case1, Counterexample1Spec,
};
use crate::bourgain::{apply_time_cutoff, hs_norm, xsb_norm, BourgainIndex, SpaceTimeField, SpaceTimeGrid};
use crate::dispersion::{identity_errors, resonance_floor, random_params, DispersionParams};
use crate::dyadic::{applicable_case, block_bound, block_norm_lower_with, regression_triples, MaximizeOptions};
use crate::error::{Error, Result};
use crate::grid::{forward, RealField, SpatialGrid};
use crate::illposed::{growth_fit, theta_identity_error};
use crate::rng::SplitMix64;
use crate::snapshot::Snapshot;
use crate::solver::{kdv_soliton, solve, SolverConfig};

/// A comma-separated list of reals, such as `64,128,256`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NumList(pub Vec<f64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(NumList)
    }
}

#[derive(Debug, Parser)]
#[command(name = "blab", version, about = "Numerical experiments for the Benjamin equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// key=value file; flags given on the command line take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "blab-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma: f64,
    /// Also render the CSV as SVG.
    #[arg(long)]
    plot: bool,
    /// Do not list the written files.
    #[arg(long)]
    #[serde(skip)]
    quiet: bool,
}

impl Common {
    fn params(&self) -> Result<DispersionParams> {
        DispersionParams::new(self.alpha, self.beta, self.gamma)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form versus direct resonance identities.
    Resonance(ResonanceArgs),
    /// Dyadic block bounds against numerical lower bounds.
    Blocks(BlocksArgs),
    /// Ratio sweep of the first counterexample family.
    BilinearSweep(SweepArgs),
    /// A single counterexample evaluation (first family) or the sequence inequality (second).
    Counterexample(CounterexampleArgs),
    /// Growth of the third Picard iterate.
    PicardGrowth(GrowthArgs),
    /// Time integration with snapshots and conservation diagnostics.
    Solve(SolveArgs),
    /// H^s and X^{s,b} norms of a datum and its cut-off free evolution.
    Norms(NormsArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct ResonanceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Parameter sets; the first is the one given, the rest are random.
    #[arg(long, default_value_t = 1)]
    param_sets: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
struct BlocksArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 32)]
    resolution: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    #[arg(long, default_value_t = crate::bilinear::DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value = "64,128,256,512,1024")]
    n_list: NumList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Family {
    First,
    Second,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CounterexampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "first")]
    family: Family,
    /// Frequency scale of the first family.
    #[arg(long, default_value_t = 256.0)]
    n: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    #[arg(long, default_value_t = crate::bilinear::DEFAULT_EPS)]
    eps: f64,
    /// Sequence lengths of the second family.
    #[arg(long, default_value = "25,100,400")]
    m_list: NumList,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GrowthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, default_value = "256,512,1024,2048,4096")]
    n_list: NumList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum InitialData {
    Soliton,
    Gaussian,
    File,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long = "box", default_value_t = 40.0)]
    box_length: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    tfinal: f64,
    #[arg(long, value_enum, default_value = "soliton")]
    ic: InitialData,
    /// BLAB1 snapshot used by `--ic file`.
    #[arg(long)]
    ic_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    amplitude: f64,
    /// Steps between snapshots.
    #[arg(long, default_value_t = 100)]
    stride: usize,
    /// Apply the two-thirds rule to the nonlinearity.
    #[arg(long)]
    dealias: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
struct NormsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// BLAB1 snapshot; a Gaussian of `--amplitude` is used when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    amplitude: f64,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long = "box", default_value_t = 20.0)]
    box_length: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, default_value_t = 0.55)]
    b: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 128)]
    nt: usize,
}

/// What a subcommand hands back for the summary.
struct Outcome {
    results: serde_json::Value,
    csv: PathBuf,
    plot: Option<PlotKind>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match config::expand(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    // config values come first on the line, so a repeated flag must win
    let cmd = Cli::command().mut_subcommands(|c| c.args_override_self(true));
    let cli = match cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match worker_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("BLAB_THREADS={v:?} is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn dispatch(cmd: Command) -> Result<()> {
    let start = Instant::now();
    let (name, common, config, outcome) = match cmd {
        Command::Resonance(a) => ("resonance", a.common.clone(), to_value(&a)?, resonance(&a)?),
        Command::Blocks(a) => ("blocks", a.common.clone(), to_value(&a)?, blocks(&a)?),
        Command::BilinearSweep(a) => ("bilinear-sweep", a.common.clone(), to_value(&a)?, bilinear_sweep(&a)?),
        Command::Counterexample(a) => ("counterexample", a.common.clone(), to_value(&a)?, counterexample(&a)?),
        Command::PicardGrowth(a) => ("picard-growth", a.common.clone(), to_value(&a)?, picard_growth(&a)?),
        Command::Solve(a) => ("solve", a.common.clone(), to_value(&a)?, solve_cmd(&a)?),
        Command::Norms(a) => ("norms", a.common.clone(), to_value(&a)?, norms(&a)?),
    };
    let mut results = outcome.results;
    if common.plot {
        if let Some(kind) = outcome.plot {
            let svg = emit_plot(&outcome.csv, kind)?;
            results["plot"] = json!(svg.display().to_string());
        }
    }
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        config,
        wall_time_s: start.elapsed().as_secs_f64(),
        results,
    };
    let path = common.out.join(format!("{name}.json"));
    output::write_json(&path, &summary)?;
    if !common.quiet {
        println!("{}", outcome.csv.display());
        println!("{}", path.display());
    }
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Format(e.to_string()))
}

fn csv_path(common: &Common, name: &str) -> PathBuf {
    common.out.join(format!("{name}.csv"))
}

#[derive(Serialize)]
struct ResonanceRow {
    set: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    h_max_err: f64,
    q_max_err: f64,
    theta_max_err: f64,
}

fn resonance(a: &ResonanceArgs) -> Result<Outcome> {
    let first = a.common.params()?;
    if a.samples == 0 || a.param_sets == 0 {
        return Err(Error::InvalidParameter("samples and param-sets must be positive".into()));
    }
    let mut rng = SplitMix64::fork(a.common.seed, u64::MAX);
    let sets: Vec<DispersionParams> =
        std::iter::once(first).chain((1..a.param_sets).map(|_| random_params(&mut rng))).collect();
    let seed = a.common.seed;
    let rows: Vec<ResonanceRow> = sets
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let e = identity_errors(p, a.samples, SplitMix64::at(seed, 2 * k as u64));
            ResonanceRow {
                set: k,
                alpha: p.alpha(),
                beta: p.beta(),
                gamma: p.gamma(),
                h_max_err: e.h,
                q_max_err: e.q,
                theta_max_err: theta_identity_error(p, a.samples, SplitMix64::at(seed, 2 * k as u64 + 1)),
            }
        })
        .collect();
    let path = csv_path(&a.common, "resonance");
    output::write_csv(&path, &rows)?;
    let worst = |f: fn(&ResonanceRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let floor = resonance_floor(&first, 10, 4).ok();
    Ok(Outcome {
        results: json!({
            "h_max_err": worst(|r| r.h_max_err),
            "q_max_err": worst(|r| r.q_max_err),
            "theta_max_err": worst(|r| r.theta_max_err),
            "resonance_floor": floor,
        }),
        csv: path,
        plot: None,
    })
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct BlockRow {
    N1: f64,
    N2: f64,
    N3: f64,
    H: f64,
    L1: f64,
    L2: f64,
    L3: f64,
    case: &'static str,
    bound: f64,
    numeric_lower: f64,
    ratio: f64,
}

fn blocks(a: &BlocksArgs) -> Result<Outcome> {
    let p = a.common.params()?;
    let opts = MaximizeOptions { seed: a.common.seed, ..MaximizeOptions::default() };
    let triples = regression_triples(&p, a.count, a.common.seed);
    let rows = triples
        .par_iter()
        .map(|t| {
            let case = applicable_case(t);
            let bound = block_bound(t, case)?.value;
            let lower = block_norm_lower_with(t, &p, a.resolution, opts)?;
            Ok(BlockRow {
                N1: t.n[0].value(),
                N2: t.n[1].value(),
                N3: t.n[2].value(),
                H: t.h.value(),
                L1: t.l[0].value(),
                L2: t.l[1].value(),
                L3: t.l[2].value(),
                case: case.tag(),
                bound,
                numeric_lower: lower,
                ratio: lower / bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let path = csv_path(&a.common, "blocks");
    output::write_csv(&path, &rows)?;
    let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(Outcome { results: json!({"blocks": rows.len(), "max_ratio": worst}), csv: path, plot: None })
}

#[derive(Serialize)]
struct RatioRow {
    #[serde(rename = "N")]
    n: f64,
    ratio: f64,
}

fn bilinear_sweep(a: &SweepArgs) -> Result<Outcome> {
    let p = a.common.params()?;
    let r = sweep_case1(a.s, a.b, a.eps, &p, &a.n_list.0)?;
    let mut rows: Vec<RatioRow> = r.points.iter().map(|q| RatioRow { n: q.n, ratio: q.ratio }).collect();
    rows.sort_by(|x, y| x.n.total_cmp(&y.n));
    let path = csv_path(&a.common, "bilinear-sweep");
    output::write_csv(&path, &rows)?;
    Ok(Outcome {
        results: json!({
            "slope": r.fit.map(|f| f.slope),
            "residual": r.fit.map(|f| f.residual),
            "spread": r.spread(),
            "s": a.s, "b": a.b, "eps": a.eps,
            "params": p,
            "points": r.points,
        }),
        csv: path,
        plot: (rows.len() >= 2).then_some(PlotKind::LogLog),
    })
}

#[derive(Serialize)]
struct SequenceRow {
    m: u64,
    lhs: f64,
    rhs: f64,
    ratio: f64,
}

fn counterexample(a: &CounterexampleArgs) -> Result<Outcome> {
    let p = a.common.params()?;
    match a.family {
        Family::First => {
            let spec = Counterexample1Spec::new(a.n, p)?;
            let lattice = spec.default_lattice();
            let r = case1_ratios(&spec, lattice, a.s, a.b, a.eps)?;
            let cells = build_case1(&spec, lattice)?.len();
            let path = csv_path(&a.common, "counterexample");
            output::write_csv(&path, &[RatioRow { n: a.n, ratio: r.ratio() }])?;
            Ok(Outcome {
                results: json!({
                    "family": "first", "N": a.n, "ratio": r.ratio(), "primal": r.primal, "dual": r.dual,
                    "cells": cells, "s": a.s, "b": a.b, "eps": a.eps, "params": p,
                }),
                csv: path,
                plot: Some(PlotKind::Point),
            })
        }
        Family::Second => {
            let mut ms: Vec<u64> = Vec::new();
            for &m in &a.m_list.0 {
                if !(m >= 1.0 && m.fract() == 0.0) {
                    return Err(Error::InvalidParameter(format!("sequence length {m} must be a positive integer")));
                }
                ms.push(m as u64);
            }
            ms.sort_unstable();
            ms.dedup();
            let rows = ms
                .iter()
                .map(|&m| {
                    let (lhs, rhs) = case2_inequality_ratio(&harmonic_sequence(m as usize))?;
                    Ok(SequenceRow { m, lhs, rhs, ratio: lhs / rhs })
                })
                .collect::<Result<Vec<_>>>()?;
            let path = csv_path(&a.common, "counterexample");
            output::write_csv(&path, &rows)?;
            let increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
            Ok(Outcome {
                results: json!({"family": "second", "strictly_increasing": increasing, "params": p}),
                csv: path,
                plot: (rows.len() >= 2).then_some(PlotKind::LogLog),
            })
        }
    }
}

#[derive(Serialize)]
struct GrowthCsvRow {
    #[serde(rename = "N")]
    n: f64,
    a3_norm: f64,
    #[serde(rename = "a3_norm_times_logN")]
    a3_norm_times_log_n: f64,
}

fn picard_growth(a: &GrowthArgs) -> Result<Outcome> {
    let p = a.common.params()?;
    let g = growth_fit(a.s, &a.n_list.0, &p)?;
    let rows: Vec<GrowthCsvRow> = g
        .rows
        .iter()
        .map(|r| GrowthCsvRow { n: r.n, a3_norm: r.a3_norm, a3_norm_times_log_n: r.a3_norm_times_log_n })
        .collect();
    let path = csv_path(&a.common, "picard-growth");
    output::write_csv(&path, &rows)?;
    Ok(Outcome {
        results: json!({
            "s": g.s, "slope": g.fit.slope, "intercept": g.fit.intercept, "residual": g.fit.residual,
            "expected_slope": g.expected_slope, "params": p,
        }),
        csv: path,
        plot: Some(PlotKind::LogLog),
    })
}

fn load_real(path: &Path) -> Result<RealField> {
    let bytes = std::fs::read(path)?;
    Ok(match Snapshot::from_bytes(&bytes)? {
        Snapshot::Real(f) => f,
        Snapshot::Spectral(f) => crate::grid::inverse(&f),
    })
}

#[derive(Serialize)]
struct ConservationRow {
    t: f64,
    mass: f64,
    l2: f64,
    mass_drift: f64,
    l2_drift: f64,
}

fn solve_cmd(a: &SolveArgs) -> Result<Outcome> {
    let p = a.common.params()?;
    let u0 = match a.ic {
        InitialData::Soliton => SpatialGrid::new(a.n, a.box_length)?.sample(kdv_soliton(a.kappa, 0.0, 0.0)),
        InitialData::Gaussian => {
            let amp = a.amplitude;
            SpatialGrid::new(a.n, a.box_length)?.sample(move |x| amp * (-x * x).exp())
        }
        InitialData::File => {
            let f = a.ic_file.as_ref().ok_or_else(|| Error::InvalidParameter("--ic file needs --ic-file".into()))?;
            load_real(f)?
        }
    };
    let cfg = SolverConfig::new(u0.grid().clone(), a.dt, a.tfinal)?.with_dealias(a.dealias).with_stride(a.stride)?;
    let warning = cfg.phase_warning(&p);
    if let Some(w) = &warning {
        eprintln!("warning: {w}");
    }
    let traj = solve(&u0, &cfg, &p)?;
    let dir = a.common.out.join("snapshots");
    let mut files = Vec::new();
    for (k, f) in traj.fields.iter().enumerate() {
        let path = dir.join(format!("u_{k:05}.blab"));
        write_atomic(&path, &Snapshot::Real(f.clone()).to_bytes())?;
        files.push(path.display().to_string());
    }
    let c0 = traj.conservation[0];
    let rows: Vec<ConservationRow> = traj
        .times
        .iter()
        .zip(&traj.conservation)
        .map(|(&t, c)| ConservationRow {
            t,
            mass: c.mass,
            l2: c.l2,
            mass_drift: (c.mass - c0.mass).abs(),
            l2_drift: if c0.l2 == 0.0 { 0.0 } else { (c.l2 - c0.l2).abs() / c0.l2 },
        })
        .collect();
    let path = csv_path(&a.common, "conservation");
    output::write_csv(&path, &rows)?;
    let sidecar = json!({
        "params": p,
        "cfg": {"n": cfg.grid.n(), "box": cfg.grid.box_length(), "dt": cfg.effective_dt(), "t_final": cfg.t_final,
                "dealias": cfg.dealias, "snapshot_stride": cfg.snapshot_stride},
        "times": traj.times,
        "conservation": traj.conservation,
    });
    output::write_json(&dir.join("series.json"), &sidecar)?;
    Ok(Outcome {
        results: json!({
            "snapshots": files, "mass_drift": traj.mass_drift(), "l2_drift": traj.l2_drift(),
            "max_abs_final": traj.last().max_abs(), "phase_warning": warning,
        }),
        csv: path,
        plot: Some(PlotKind::Drift),
    })
}

#[derive(Serialize)]
struct NormsRow {
    s: f64,
    b: f64,
    delta: f64,
    hs_norm: f64,
    xsb_norm: f64,
}

fn norms(a: &NormsArgs) -> Result<Outcome> {
    let p = a.common.params()?;
    let u0 = match &a.input {
        Some(f) => load_real(f)?,
        None => {
            let amp = a.amplitude;
            SpatialGrid::new(a.n, a.box_length)?.sample(move |x| amp * (-x * x).exp())
        }
    };
    let st = SpaceTimeGrid::new(u0.grid().clone(), a.nt, 2.0 * a.delta)?;
    let free = SpaceTimeField::free_evolution(&st, &forward(&u0), &p);
    let cut = apply_time_cutoff(&free, a.delta)?;
    let row = NormsRow {
        s: a.s,
        b: a.b,
        delta: a.delta,
        hs_norm: hs_norm(&u0, a.s),
        xsb_norm: xsb_norm(&cut, BourgainIndex::new(a.s, a.b), &p),
    };
    let path = csv_path(&a.common, "norms");
    output::write_csv(&path, std::slice::from_ref(&row))?;
    Ok(Outcome {
        results: json!({"hs_norm": row.hs_norm, "xsb_norm": row.xsb_norm, "params": p}),
        csv: path,
        plot: None,
    })
}
