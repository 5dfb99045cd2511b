//! Command-line front end. Every subcommand emits data (CSV or JSON) only.
//!
//! Exit status: 0 on success, 2 on usage errors (reported by clap), 1 on
//! runtime errors.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::{json, Value};

use crate::beta_series::{BetaSeries, CriticalStructure, T_CAP};
use crate::chain::{self, ReplicaRow};
use crate::error::{Error, Result};
use crate::fluid::{self, sample_z};
use crate::hypergraph::Hypergraph;
use crate::io::{fmt_f64, json_f64, json_f64_array, read_hypergraph, write_hypergraph};
use crate::montecarlo::{
    critical_alpha, fraction_below, run_replicas, BetaSpec, ExperimentConfig, OutputPaths, PowerFamily,
};
use crate::quadrature::GaussLegendre;
use crate::rng::{derive_seed, stream};

#[derive(Debug, Parser)]
#[command(name = "hypercollapse", version, about = "Poisson random hypergraph collapse: analytics and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the fluid path and report z*, ζ and the limit fractions.
    Analyze(AnalyzeArgs),
    /// Draw a Poisson(β) hypergraph and write it in hypergraph file format.
    Sample(SampleArgs),
    /// Collapse a hypergraph file and report the identifiable set.
    Collapse(CollapseArgs),
    /// Run replicas of the reduced chain at one system size.
    Chain(ChainArgs),
    /// Replica sweep over several system sizes.
    Sweep(SweepArgs),
    /// Locate the tangency α for the family α(a + b t)^k.
    Critical(CriticalArgs),
    /// Sample the limiting law of |V*|/N.
    Zdist(ZdistArgs),
}

/// Generating function: explicit coefficients, the random-graph shorthand
/// `(p, alpha)`, or the power family `alpha (a + b t)^k`.
#[derive(Debug, Clone, Args)]
pub struct BetaArgs {
    /// Comma-separated coefficients β_0,β_1,...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["p", "k"])]
    pub beta: Option<Vec<f64>>,
    /// Patch probability of the random-graph shorthand.
    #[arg(long, conflicts_with = "k")]
    pub p: Option<f64>,
    /// Edge density (random graph) or family scale (power family).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub a: f64,
    #[arg(long, default_value_t = 0.9)]
    pub b: f64,
    /// Exponent of the power family; selects `alpha (a + b t)^k`.
    #[arg(long)]
    pub k: Option<u32>,
}

impl BetaArgs {
    fn spec(&self) -> Option<BetaSpec> {
        if let Some(c) = &self.beta {
            return Some(BetaSpec::Coeffs(c.clone()));
        }
        if let Some(k) = self.k {
            return Some(BetaSpec::Power { alpha: self.alpha?, a: self.a, b: self.b, k });
        }
        self.p.map(|p| BetaSpec::Graph { p, alpha: self.alpha.unwrap_or(0.0) })
    }

    fn require(&self) -> BetaSpec {
        self.spec().unwrap_or_else(|| {
            usage_error("specify β with --beta, with --p [--alpha], or with --k --alpha [--a --b]")
        })
    }

    fn series(&self) -> Result<BetaSeries> {
        self.require().series()
    }
}

fn usage_error(msg: &str) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub beta: BetaArgs,
    /// Number of grid points of the curve CSV.
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    /// Right end of the curve grid (clamped below 1).
    #[arg(long = "t-max", default_value_t = 0.999)]
    pub t_max: f64,
    /// Curve CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub beta: BetaArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hypergraph file destination (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    /// Hypergraph file to read (stdin if absent).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outcome JSON destination (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-step CSV `n,Y,Z`.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub beta: BetaArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trajectory CSV of replica 0.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Experiment config JSON; flags below are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub beta: BetaArgs,
    /// Comma-separated system sizes.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sup-norm threshold for the deviation frequency.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Result CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Aggregate JSON destination.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    #[arg(long, default_value_t = 0.1)]
    pub a: f64,
    #[arg(long, default_value_t = 0.9)]
    pub b: f64,
    #[arg(long, default_value_t = 7)]
    pub k: u32,
    #[arg(long = "alpha-lo")]
    pub alpha_lo: f64,
    #[arg(long = "alpha-hi")]
    pub alpha_hi: f64,
    /// System size for an optional Monte Carlo check at the critical α.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub replicas: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ZdistArgs {
    #[command(flatten)]
    pub beta: BetaArgs,
    /// Explicit tangential zeros (overrides the ones computed from β).
    #[arg(long, value_delimiter = ',', requires = "z_star")]
    pub zeta: Option<Vec<f64>>,
    #[arg(long = "z-star")]
    pub z_star: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Histogram CSV `z,count,freq`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `std::env::args`, runs, and exits with the documented status.
pub fn main() -> ! {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::exit(0),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::Sample(a) => sample(&a),
        Command::Collapse(a) => collapse(&a),
        Command::Chain(a) => chain_cmd(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Critical(a) => critical(&a),
        Command::Zdist(a) => zdist(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn emit_json(value: &Value, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn critical_json(c: &CriticalStructure) -> Value {
    json!({
        "z_star": json_f64(c.z_star),
        "zeta": json_f64_array(&c.zeta),
        "tangency_tolerance": json_f64(c.tangency_tolerance),
    })
}

/// `10 ∫_{0.9}^{1} f(t) dt`, the mean deficiency over the last tenth of the
/// vertex range; in the fluid limit `f(t)` is the expected number of other
/// patches on the selected vertex.
pub fn avg_patch_overlap(series: &BetaSeries) -> f64 {
    let gl = GaussLegendre::new(20);
    10.0 * gl.integrate_graded_right(|t| series.deficiency_unchecked(t), 0.9, 1.0, 1e-15)
}

/// Summary JSON of `analyze`.
pub fn analysis_summary(series: &BetaSeries) -> Result<Value> {
    let critical = series.critical()?;
    let limits = fluid::limit_fractions_from(series, &critical);
    let sigma_at_zeta: Vec<f64> = critical
        .zeta
        .iter()
        .map(|&z| fluid::sigma_sq(z, series))
        .collect::<Result<_>>()?;
    Ok(json!({
        "beta": json_f64_array(series.coeffs()),
        "z_star": json_f64(critical.z_star),
        "zeta": json_f64_array(&critical.zeta),
        "sigma_sq_at_zeta": json_f64_array(&sigma_at_zeta),
        "limits": {
            "v_frac": json_f64(limits.v_frac),
            "edge_frac": json_f64(limits.edge_frac),
            "hypothesis_holds": limits.hypothesis_holds,
        },
        "avg_patch_overlap": json_f64(avg_patch_overlap(series)),
    }))
}

/// Curve CSV `t,x1,x2,x3,f,sigma_sq` on a uniform grid of `[0, t_max]`.
pub fn write_curve_csv<W: Write>(mut out: W, series: &BetaSeries, grid: usize, t_max: f64) -> Result<()> {
    if grid < 2 {
        return Err(Error::domain("curve grid needs at least 2 points"));
    }
    let t_max = t_max.clamp(0.0, T_CAP);
    writeln!(out, "t,x1,x2,x3,f,sigma_sq")?;
    for i in 0..grid {
        let t = t_max * i as f64 / (grid - 1) as f64;
        let x = fluid::path(t, series)?;
        let f = series.deficiency(t)?;
        let s = fluid::sigma_sq(t, series)?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(x[0]),
            fmt_f64(x[1]),
            fmt_f64(x[2]),
            fmt_f64(f),
            fmt_f64(s)
        )?;
    }
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let series = args.beta.series()?;
    let summary = analysis_summary(&series)?;
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        write_curve_csv(&mut w, &series, args.grid, args.t_max)?;
        w.flush()?;
    }
    emit_json(&summary, None)
}

fn sample(args: &SampleArgs) -> Result<()> {
    let series = args.beta.series()?;
    let h = Hypergraph::sample_poisson(args.n, &series, &mut stream(args.seed))?;
    match &args.out {
        Some(p) => {
            let mut w = create(p)?;
            write_hypergraph(&mut w, &h)?;
            w.flush()?;
        }
        None => write_hypergraph(io::stdout().lock(), &h)?,
    }
    Ok(())
}

/// Outcome JSON of `collapse`.
pub fn collapse_json(h: &Hypergraph, seed: u64) -> (Value, crate::hypergraph::CollapseOutcome) {
    let out = h.collapse_all(&mut stream(seed), true);
    let n = h.n_vertices() as f64;
    let stable = out.stable.stats();
    let value = json!({
        "N": h.n_vertices(),
        "seed": seed,
        "identified": out.identified,
        "identified_count": out.identified.len(),
        "identified_fraction": json_f64(out.identified.len() as f64 / n),
        "identifiable_edge_count": out.identifiable_edge_count,
        "final_debris": out.final_debris,
        "final_debris_fraction": json_f64(out.final_debris as f64 / n),
        "stable_total_edges": stable.total,
    });
    (value, out)
}

fn collapse(args: &CollapseArgs) -> Result<()> {
    let h = match &args.input {
        Some(p) => read_hypergraph(BufReader::new(File::open(p)?))?,
        None => read_hypergraph(io::stdin().lock())?,
    };
    let (value, outcome) = collapse_json(&h, args.seed);
    if let Some(p) = &args.trajectory {
        let mut w = create(p)?;
        let start = h.stats();
        writeln!(w, "n,Y,Z")?;
        writeln!(w, "0,{},{}", start.patches, start.debris)?;
        for (i, s) in outcome.trajectory.iter().flatten().enumerate() {
            writeln!(w, "{},{},{}", i + 1, s.patches, s.debris)?;
        }
        w.flush()?;
    }
    emit_json(&value, args.out.as_deref())
}

fn chain_cmd(args: &ChainArgs) -> Result<()> {
    let spec = args.beta.require();
    let config = ExperimentConfig {
        beta: spec,
        n_values: vec![args.n],
        replicas: args.replicas,
        master_seed: args.seed,
        delta: None,
        outputs: OutputPaths::default(),
        threads: args.threads,
    };
    let series = config.validate()?;
    let result = run_replicas(&config)?;
    if let Some(p) = &args.out {
        let rows: Vec<ReplicaRow> = result
            .records
            .iter()
            .map(|r| ReplicaRow {
                replica: r.replica,
                seed: r.seed,
                v_star_frac: r.v_star_frac,
                debris_frac: r.debris_frac,
                stop_step: r.stop_step,
            })
            .collect();
        let mut w = create(p)?;
        chain::write_result_csv(&mut w, &rows)?;
        w.flush()?;
    }
    if let Some(p) = &args.trajectory {
        let seed = derive_seed(args.seed, args.n, 0);
        let run = chain::run(args.n, &series, &mut stream(seed), true);
        let mut w = create(p)?;
        chain::write_trajectory_csv(&mut w, run.trajectory.as_deref().unwrap_or_default())?;
        w.flush()?;
    }
    let agg = result.aggregates[0];
    let critical = series.critical()?;
    let limits = fluid::limit_fractions_from(&series, &critical);
    emit_json(
        &json!({
            "N": args.n,
            "replicas": args.replicas,
            "mean_v_star_frac": json_f64(agg.mean_v),
            "var_v_star_frac": json_f64(agg.var_v),
            "mean_debris_frac": json_f64(agg.mean_debris),
            "z_star": json_f64(critical.z_star),
            "limit_edge_frac": json_f64(limits.edge_frac),
        }),
        None,
    )
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let config = match &args.config {
        Some(p) => ExperimentConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => {
            if args.n.is_empty() {
                usage_error("sweep needs --config or --n");
            }
            ExperimentConfig {
                beta: args.beta.require(),
                n_values: args.n.clone(),
                replicas: args.replicas,
                master_seed: args.seed,
                delta: args.delta,
                outputs: OutputPaths {
                    results: args.out.clone(),
                    aggregate: args.summary.clone(),
                },
                threads: args.threads,
            }
        }
    };
    let result = run_replicas(&config)?;
    emit_json(&result.aggregate_json(), None)
}

fn critical(args: &CriticalArgs) -> Result<()> {
    let family = PowerFamily { a: args.a, b: args.b, k: args.k };
    let c = critical_alpha(&family, args.alpha_lo, args.alpha_hi)?;
    let series = BetaSeries::power_family(c.alpha_c, args.a, args.b, args.k)?;
    let structure = series.critical()?;
    let mut value = json!({
        "alpha_c": json_f64(c.alpha_c),
        "zeta_0": json_f64(c.zeta_0),
        "dip_value": json_f64(c.dip_value),
        "critical": critical_json(&structure),
    });
    if let Some(n) = args.n {
        let config = ExperimentConfig {
            beta: BetaSpec::Power { alpha: c.alpha_c, a: args.a, b: args.b, k: args.k },
            n_values: vec![n],
            replicas: args.replicas,
            master_seed: args.seed,
            delta: None,
            outputs: OutputPaths::default(),
            threads: args.threads,
        };
        let result = run_replicas(&config)?;
        let threshold = 0.5 * (c.zeta_0 + structure.z_star);
        value["monte_carlo"] = json!({
            "N": n,
            "replicas": args.replicas,
            "threshold": json_f64(threshold),
            "early_absorption_fraction": json_f64(fraction_below(&result.records, threshold)),
        });
    }
    emit_json(&value, None)
}

/// Histogram of `samples` draws of the limit `Z`: `(z, count)` pairs in
/// increasing `z`.
pub fn z_histogram(critical: &CriticalStructure, samples: u64, seed: u64) -> Vec<(f64, u64)> {
    let mut bins: Vec<(f64, u64)> = critical
        .zeta
        .iter()
        .copied()
        .chain(std::iter::once(critical.z_star))
        .map(|z| (z, 0))
        .collect();
    let mut rng = stream(seed);
    for _ in 0..samples {
        let z = sample_z(critical, &mut rng).z_value;
        if let Some(bin) = bins.iter_mut().find(|b| b.0 == z) {
            bin.1 += 1;
        }
    }
    bins
}

fn zdist(args: &ZdistArgs) -> Result<()> {
    let critical = match (&args.zeta, args.z_star) {
        (Some(zeta), Some(z_star)) => {
            let mut zeta = zeta.clone();
            zeta.sort_by(f64::total_cmp);
            if zeta.iter().any(|&z| !(0.0..z_star).contains(&z)) || !(0.0..=1.0).contains(&z_star) {
                return Err(Error::domain("need 0 <= ζ < z* <= 1"));
            }
            CriticalStructure { z_star, zeta, tangency_tolerance: 0.0 }
        }
        _ => args.beta.series()?.critical()?,
    };
    let hist = z_histogram(&critical, args.samples, args.seed);
    let total = args.samples.max(1) as f64;
    if let Some(p) = &args.out {
        let mut w = create(p)?;
        writeln!(w, "z,count,freq")?;
        for (z, c) in &hist {
            writeln!(w, "{},{},{}", fmt_f64(*z), c, fmt_f64(*c as f64 / total))?;
        }
        w.flush()?;
    }
    let bins: Vec<Value> = hist
        .iter()
        .map(|(z, c)| json!({"z": json_f64(*z), "count": c, "freq": json_f64(*c as f64 / total)}))
        .collect();
    emit_json(
        &json!({
            "critical": critical_json(&critical),
            "samples": args.samples,
            "histogram": bins,
        }),
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn beta_flag_forms() {
        let cli = Cli::try_parse_from(["hc", "analyze", "--beta", "0,0.5,0.25"]).unwrap();
        let Command::Analyze(a) = cli.command else { panic!() };
        assert_eq!(a.beta.spec(), Some(BetaSpec::Coeffs(vec![0.0, 0.5, 0.25])));

        let cli = Cli::try_parse_from(["hc", "analyze", "--p", "0.1", "--alpha", "0.5"]).unwrap();
        let Command::Analyze(a) = cli.command else { panic!() };
        assert_eq!(a.beta.spec(), Some(BetaSpec::Graph { p: 0.1, alpha: 0.5 }));

        let cli = Cli::try_parse_from(["hc", "analyze", "--k", "7", "--alpha", "1185"]).unwrap();
        let Command::Analyze(a) = cli.command else { panic!() };
        assert_eq!(a.beta.spec(), Some(BetaSpec::Power { alpha: 1185.0, a: 0.1, b: 0.9, k: 7 }));
    }

    #[test]
    fn malformed_coefficients_are_usage_errors() {
        let err = Cli::try_parse_from(["hc", "analyze", "--beta", "0,x"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = Cli::try_parse_from(["hc", "analyze", "--beta", "0,1", "--p", "0.1"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overlap_patches_only() {
        // β' constant: 10 ∫_{0.9}^1 (c + ln(1-t)) dt = c + ln(0.1) - 1
        let s = BetaSeries::new(vec![0.0, 2.0]).unwrap();
        let want = 2.0 + 0.1f64.ln() - 1.0;
        assert!((avg_patch_overlap(&s) - want).abs() < 1e-10);
    }

    #[test]
    fn curve_csv_shape() {
        let s = BetaSeries::new(vec![0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &s, 5, 2.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,x3,f,sigma_sq");
        assert_eq!(lines.len(), 6);
        assert!(lines[5].starts_with("9.9999999900000"));
    }
}
