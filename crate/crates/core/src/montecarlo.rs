//! Seeded replica sweeps over the reduced chain, concentration estimates and
//! the critical-α search.
//!
//! Replica `r` at size `N` always uses the stream seeded by
//! [`derive_seed`]`(master_seed, N, r)`, and results are reported sorted by
//! `(N, r)`, so output is independent of scheduling and thread count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::beta_series::{BetaSeries, DEFAULT_GRID_POINTS, DEFAULT_TANGENCY_TOLERANCE, T_CAP};
use crate::chain::{self, ChainState};
use crate::error::{Error, Result};
use crate::fluid::path_unchecked;
use crate::io::{fmt_f64, json_f64};
use crate::rng::{derive_seed, stream};
use crate::roots::golden_section_min;

/// How the generating function is specified in a config document: a
/// coefficient array, `{"p", "alpha"}`, or `{"alpha", "a", "b", "k"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "Value")]
pub enum BetaSpec {
    Coeffs(Vec<f64>),
    Graph { p: f64, alpha: f64 },
    Power { alpha: f64, a: f64, b: f64, k: u32 },
}

// Untagged enums buffer numbers in a way that breaks under serde_json's
// arbitrary_precision feature, so variants are picked from a parsed Value.
impl TryFrom<Value> for BetaSpec {
    type Error = String;

    fn try_from(v: Value) -> std::result::Result<Self, String> {
        #[derive(Deserialize)]
        struct Graph {
            p: f64,
            alpha: f64,
        }
        #[derive(Deserialize)]
        struct Power {
            alpha: f64,
            a: f64,
            b: f64,
            k: u32,
        }
        match &v {
            Value::Array(_) => serde_json::from_value(v).map(BetaSpec::Coeffs),
            Value::Object(m) if m.contains_key("k") => serde_json::from_value::<Power>(v)
                .map(|p| BetaSpec::Power { alpha: p.alpha, a: p.a, b: p.b, k: p.k }),
            _ => serde_json::from_value::<Graph>(v).map(|g| BetaSpec::Graph { p: g.p, alpha: g.alpha }),
        }
        .map_err(|e| format!("invalid beta: {e}"))
    }
}

impl BetaSpec {
    pub fn series(&self) -> Result<BetaSeries> {
        match self {
            BetaSpec::Coeffs(c) => BetaSeries::new(c.clone()),
            BetaSpec::Graph { p, alpha } => BetaSeries::from_graph_params(*p, *alpha),
            BetaSpec::Power { alpha, a, b, k } => BetaSeries::power_family(*alpha, *a, *b, *k),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub results: Option<PathBuf>,
    #[serde(default)]
    pub aggregate: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub beta: BetaSpec,
    #[serde(rename = "N_values")]
    pub n_values: Vec<u64>,
    pub replicas: u64,
    pub master_seed: u64,
    /// Sup-norm deviation threshold; enables trajectory tracking when set.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub outputs: OutputPaths,
    /// Worker cap; `None` uses rayon's default pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<BetaSeries> {
        if self.replicas < 1 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::Config("N_values is empty".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 10) {
            return Err(Error::Config(format!("N = {n} is below 10")));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(Error::Config("delta must be positive".into()));
            }
        }
        let series = self.beta.series().map_err(|e| Error::Config(e.to_string()))?;
        if !(series.coeff(1) > 0.0) {
            return Err(Error::Config("β_1 = 0 is degenerate: no initial patches".into()));
        }
        Ok(series)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaRecord {
    #[serde(rename = "N")]
    pub n_vertices: u64,
    pub replica: u64,
    pub seed: u64,
    pub v_star_frac: f64,
    pub debris_frac: f64,
    pub stop_step: u64,
    /// Sup-norm distance to the fluid path up to absorption, when tracked.
    pub max_deviation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    #[serde(rename = "N")]
    pub n_vertices: u64,
    pub mean_v: f64,
    /// Unbiased sample variance; 0 for a single replica.
    pub var_v: f64,
    pub mean_debris: f64,
    pub dev_freq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub records: Vec<ReplicaRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResult {
    pub fn records_for(&self, n_vertices: u64) -> impl Iterator<Item = &ReplicaRecord> {
        self.records.iter().filter(move |r| r.n_vertices == n_vertices)
    }

    pub fn aggregate_for(&self, n_vertices: u64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n_vertices == n_vertices)
    }

    pub fn write_results_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "N,replica,seed,v_star_frac,debris_frac,stop_step")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.n_vertices,
                r.replica,
                r.seed,
                fmt_f64(r.v_star_frac),
                fmt_f64(r.debris_frac),
                r.stop_step
            )?;
        }
        Ok(())
    }

    pub fn aggregate_json(&self) -> Value {
        Value::Array(
            self.aggregates
                .iter()
                .map(|a| {
                    json!({
                        "N": a.n_vertices,
                        "mean_v": json_f64(a.mean_v),
                        "var_v": json_f64(a.var_v),
                        "mean_debris": json_f64(a.mean_debris),
                        "dev_freq": a.dev_freq.map_or(Value::Null, json_f64),
                    })
                })
                .collect(),
        )
    }
}

/// Sup-norm distance between a chain trajectory, read at `t = n / N`, and the
/// fluid path.
pub fn max_deviation(trajectory: &[ChainState], series: &BetaSeries) -> f64 {
    trajectory
        .iter()
        .map(|s| {
            let big = s.n_vertices as f64;
            let t = (s.n as f64 / big).min(T_CAP);
            let x = path_unchecked(t, series);
            let y = s.patches as f64 / big - x[1];
            let z = s.debris as f64 / big - x[2];
            y.abs().max(z.abs())
        })
        .fold(0.0, f64::max)
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Runs every `(N, replica)` pair of the config and aggregates per `N`.
/// Output files named in the config are written before returning.
pub fn run_replicas(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let series = config.validate()?;
    let delta = config.delta;
    let jobs: Vec<(u64, u64)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.replicas).map(move |r| (n, r)))
        .collect();

    let records: Vec<ReplicaRecord> = in_pool(config.threads, || {
        jobs.par_iter()
            .map(|&(n, replica)| {
                let seed = derive_seed(config.master_seed, n, replica);
                let run = chain::run(n, &series, &mut stream(seed), delta.is_some());
                let max_dev = run.trajectory.as_deref().map(|t| max_deviation(t, &series));
                ReplicaRecord {
                    n_vertices: n,
                    replica,
                    seed,
                    v_star_frac: run.v_star as f64 / n as f64,
                    debris_frac: run.debris as f64 / n as f64,
                    stop_step: run.v_star,
                    max_deviation: max_dev,
                }
            })
            .collect()
    })?;

    let mut records = records;
    records.sort_by_key(|r| (r.n_vertices, r.replica));
    let mut sizes: Vec<u64> = config.n_values.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let aggregates = sizes
        .iter()
        .map(|&n| aggregate(n, records.iter().filter(|r| r.n_vertices == n), delta))
        .collect();
    let result = ExperimentResult { records, aggregates };

    if let Some(path) = &config.outputs.results {
        let mut w = BufWriter::new(File::create(path)?);
        result.write_results_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &config.outputs.aggregate {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &result.aggregate_json())?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(result)
}

fn aggregate<'a>(
    n_vertices: u64,
    records: impl Iterator<Item = &'a ReplicaRecord>,
    delta: Option<f64>,
) -> Aggregate {
    let rs: Vec<&ReplicaRecord> = records.collect();
    let k = rs.len() as f64;
    let mean_v = rs.iter().map(|r| r.v_star_frac).sum::<f64>() / k;
    let var_v = if rs.len() > 1 {
        rs.iter().map(|r| (r.v_star_frac - mean_v).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let mean_debris = rs.iter().map(|r| r.debris_frac).sum::<f64>() / k;
    let dev_freq = delta.map(|d| {
        rs.iter()
            .filter(|r| r.max_deviation.is_some_and(|m| m > d))
            .count() as f64
            / k
    });
    Aggregate {
        n_vertices,
        mean_v,
        var_v,
        mean_debris,
        dev_freq,
    }
}

/// Fraction of replicas, per `N`, whose trajectory strays more than `delta`
/// from the fluid path before absorption.
pub fn concentration_curve(config: &ExperimentConfig, delta: f64) -> Result<Vec<(u64, f64)>> {
    let mut cfg = config.clone();
    cfg.delta = Some(delta);
    let result = run_replicas(&cfg)?;
    Ok(result
        .aggregates
        .iter()
        .map(|a| (a.n_vertices, a.dev_freq.unwrap_or(0.0)))
        .collect())
}

/// A one-parameter family `α ↦ β(·; α)`.
pub trait BetaFamily: Sync {
    fn at(&self, alpha: f64) -> Result<BetaSeries>;
}

/// `α (a + b t)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFamily {
    pub a: f64,
    pub b: f64,
    pub k: u32,
}

impl BetaFamily for PowerFamily {
    fn at(&self, alpha: f64) -> Result<BetaSeries> {
        BetaSeries::power_family(alpha, self.a, self.b, self.k)
    }
}

/// `α · β` for a fixed base series.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledFamily(pub BetaSeries);

impl BetaFamily for ScaledFamily {
    fn at(&self, alpha: f64) -> Result<BetaSeries> {
        self.0.scaled(alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalAlpha {
    pub alpha_c: f64,
    /// Location of the tangential zero at `alpha_c`.
    pub zeta_0: f64,
    /// Deficiency at the dip minimum for `alpha_c` (>= 0, near zero).
    pub dip_value: f64,
}

/// First interior local minimum of the deficiency on `[0, T_CAP]`, refined by
/// golden-section search.
pub fn dip_minimum(series: &BetaSeries) -> Option<(f64, f64)> {
    let f = |t: f64| series.deficiency_unchecked(t);
    let points = DEFAULT_GRID_POINTS;
    let step = T_CAP / (points - 1) as f64;
    let mut prev = f(0.0);
    let mut cur = f(step);
    for k in 1..points - 1 {
        let next = f((k + 1) as f64 * step);
        if cur <= prev && cur < next {
            let lo = (k - 1) as f64 * step;
            let hi = (k + 1) as f64 * step;
            return Some(golden_section_min(f, lo, hi, 1e-13));
        }
        prev = cur;
        cur = next;
    }
    None
}

/// Bisects on `α` for tangency of the deficiency at its first dip.
///
/// `alpha_lo` must put the dip below zero and `alpha_hi` above. The returned
/// `alpha_c` is the upper end of the final bracket, so the dip value there is
/// non-negative and a [`BetaSeries::critical_structure`] call reports the
/// tangential zero.
pub fn critical_alpha<F: BetaFamily + ?Sized>(family: &F, alpha_lo: f64, alpha_hi: f64) -> Result<CriticalAlpha> {
    let dip = |alpha: f64| -> Result<(f64, f64)> {
        let series = family.at(alpha)?;
        dip_minimum(&series).ok_or_else(|| Error::Bracket(format!("no dip in the deficiency at α = {alpha}")))
    };
    if !(alpha_lo <= alpha_hi) {
        return Err(Error::Bracket(format!("alpha_lo = {alpha_lo} > alpha_hi = {alpha_hi}")));
    }
    if alpha_lo == alpha_hi {
        let (t, m) = dip(alpha_lo)?;
        if m.abs() <= DEFAULT_TANGENCY_TOLERANCE {
            return Ok(CriticalAlpha { alpha_c: alpha_lo, zeta_0: t, dip_value: m });
        }
        return Err(Error::Bracket(format!("α = {alpha_lo} is not tangent (dip value {m:e})")));
    }
    let (_, m_lo) = dip(alpha_lo)?;
    let (mut t_hi, mut m_hi) = dip(alpha_hi)?;
    if m_lo >= 0.0 {
        return Err(Error::Bracket(format!("dip at α = {alpha_lo} is not below zero")));
    }
    if m_hi <= 0.0 {
        return Err(Error::Bracket(format!("dip at α = {alpha_hi} is not above zero")));
    }
    let (mut lo, mut hi, mut m_lo) = (alpha_lo, alpha_hi, m_lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi.abs() {
            break;
        }
        let (t, m) = dip(mid)?;
        if !(m_lo <= m && m <= m_hi) {
            return Err(Error::Bracket("dip value is not monotone in α".into()));
        }
        if m < 0.0 {
            lo = mid;
            m_lo = m;
        } else {
            hi = mid;
            m_hi = m;
            t_hi = t;
        }
    }
    Ok(CriticalAlpha { alpha_c: hi, zeta_0: t_hi, dip_value: m_hi })
}

/// Fraction of records with `v_star_frac` below `threshold`.
pub fn fraction_below<'a>(records: impl IntoIterator<Item = &'a ReplicaRecord>, threshold: f64) -> f64 {
    let (mut below, mut total) = (0usize, 0usize);
    for r in records {
        total += 1;
        if r.v_star_frac < threshold {
            below += 1;
        }
    }
    below as f64 / total.max(1) as f64
}
