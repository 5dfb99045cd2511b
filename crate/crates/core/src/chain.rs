//! The reduced patch/debris chain.
//!
//! Under the uniform-patch collapse rule the pair (patches, debris) of a
//! Poisson(β) hypergraph evolves as a Markov chain: removing the `n+1`-th
//! vertex turns `W ~ Bin(Y-1, 1/(N-n))` sibling patches into debris and
//! promotes `U ~ Poisson((N-n-1) λ₂(N, n))` two-edges into patches. The
//! absorption time has the law of the number of identifiable vertices.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::beta_series::BetaSeries;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainState {
    /// Vertices removed so far.
    pub n: u64,
    pub patches: u64,
    pub debris: u64,
    pub n_vertices: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    /// Absorption step; equal in law to the number of identifiable vertices.
    pub v_star: u64,
    /// Final debris count.
    pub debris: u64,
    pub trajectory: Option<Vec<ChainState>>,
}

impl ChainState {
    pub fn is_absorbed(&self) -> bool {
        self.patches == 0
    }
}

/// Poisson mean of the number of hyperedges sitting on one fixed `j`-subset
/// of the surviving vertices after `removed` vertices have been deleted:
/// `N Σ_i β_{j+i} C(removed, i) / C(N, i+j)`.
pub fn lambda_j(n_vertices: u64, removed: u64, j: usize, series: &BetaSeries) -> Result<f64> {
    if removed >= n_vertices {
        return Err(Error::domain(format!(
            "removed = {removed} must be below N = {n_vertices}"
        )));
    }
    Ok(lambda_j_unchecked(n_vertices, removed, j, series))
}

fn lambda_j_unchecked(n_vertices: u64, removed: u64, j: usize, series: &BetaSeries) -> f64 {
    let coeffs = series.coeffs();
    if j >= coeffs.len() {
        return 0.0;
    }
    let big = n_vertices as f64;
    let n = removed as f64;
    let max_i = (coeffs.len() - 1 - j).min(removed as usize);
    // falling = C(n, i) / C(N, i), tail = C(N, i) / C(N, i + j)
    let mut falling = 1.0;
    let mut sum = 0.0;
    for i in 0..=max_i {
        if i > 0 {
            let r = (i - 1) as f64;
            falling *= (n - r) / (big - r);
        }
        let beta = coeffs[j + i];
        if beta == 0.0 {
            continue;
        }
        if i + j > n_vertices as usize {
            break;
        }
        let tail: f64 = (0..j)
            .map(|s| (i + s + 1) as f64 / (big - (i + s) as f64))
            .product();
        sum += beta * falling * tail;
    }
    big * sum
}

/// One removal step from a state with at least one patch.
pub fn step<R: Rng + ?Sized>(state: &ChainState, series: &BetaSeries, rng: &mut R) -> Result<ChainState> {
    step_with_draws(state, series, rng).map(|(next, _)| next)
}

/// The two random counts drawn in a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepDraws {
    /// Other patches on the removed vertex (`W`), which become debris.
    pub siblings: u64,
    /// Two-edges through the removed vertex (`U`), which become patches.
    pub promoted: u64,
}

/// Like [`step`], also returning the underlying draws.
pub fn step_with_draws<R: Rng + ?Sized>(
    state: &ChainState,
    series: &BetaSeries,
    rng: &mut R,
) -> Result<(ChainState, StepDraws)> {
    if state.n >= state.n_vertices {
        return Err(Error::Exhausted(state.n_vertices));
    }
    if state.patches == 0 {
        return Err(Error::Absorbed);
    }
    Ok(step_unchecked(state, series, rng))
}

fn step_unchecked<R: Rng + ?Sized>(
    state: &ChainState,
    series: &BetaSeries,
    rng: &mut R,
) -> (ChainState, StepDraws) {
    let remaining = state.n_vertices - state.n;
    let siblings = rng::binomial(rng, state.patches - 1, 1.0 / remaining as f64);
    let lambda2 = lambda_j_unchecked(state.n_vertices, state.n, 2, series);
    let promoted = rng::poisson(rng, (remaining - 1) as f64 * lambda2);
    let next = ChainState {
        n: state.n + 1,
        patches: state.patches - 1 - siblings + promoted,
        debris: state.debris + 1 + siblings,
        n_vertices: state.n_vertices,
    };
    (next, StepDraws { siblings, promoted })
}

/// Runs the chain from a Poisson(β) start until absorption.
pub fn run<R: Rng + ?Sized>(
    n_vertices: u64,
    series: &BetaSeries,
    rng: &mut R,
    record_trajectory: bool,
) -> ChainRun {
    let big = n_vertices as f64;
    let mut state = ChainState {
        n: 0,
        patches: rng::poisson(rng, big * series.coeff(1)),
        debris: rng::poisson(rng, big * series.coeff(0)),
        n_vertices,
    };
    let mut trajectory = record_trajectory.then(|| vec![state]);
    while state.patches > 0 && state.n < n_vertices {
        state = step_unchecked(&state, series, rng).0;
        if let Some(t) = trajectory.as_mut() {
            t.push(state);
        }
    }
    ChainRun {
        v_star: state.n,
        debris: state.debris,
        trajectory,
    }
}

/// `sup_{n <= frac N} |N λ₂(N, n) - β''(n / N)|`.
pub fn lambda2_sup_error(n_vertices: u64, series: &BetaSeries, frac: f64) -> f64 {
    let big = n_vertices as f64;
    let last = ((frac * big).floor() as u64).min(n_vertices - 1);
    (0..=last)
        .map(|n| {
            let scaled = big * lambda_j_unchecked(n_vertices, n, 2, series);
            (scaled - series.horner(n as f64 / big, 2)).abs()
        })
        .fold(0.0, f64::max)
}

/// Trajectory CSV: header `n,Y,Z`.
pub fn write_trajectory_csv<W: Write>(mut out: W, trajectory: &[ChainState]) -> std::io::Result<()> {
    writeln!(out, "n,Y,Z")?;
    for s in trajectory {
        writeln!(out, "{},{},{}", s.n, s.patches, s.debris)?;
    }
    Ok(())
}

/// One row of the chain result CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaRow {
    pub replica: u64,
    pub seed: u64,
    pub v_star_frac: f64,
    pub debris_frac: f64,
    pub stop_step: u64,
}

/// Result CSV: header `replica,seed,v_star_frac,debris_frac,stop_step`.
pub fn write_result_csv<W: Write>(mut out: W, rows: &[ReplicaRow]) -> std::io::Result<()> {
    writeln!(out, "replica,seed,v_star_frac,debris_frac,stop_step")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.replica,
            r.seed,
            fmt_f64(r.v_star_frac),
            fmt_f64(r.debris_frac),
            r.stop_step
        )?;
    }
    Ok(())
}
