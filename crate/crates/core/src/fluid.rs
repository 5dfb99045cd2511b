//! Deterministic and Gaussian limits of the rescaled chain
//! `X = (removed, patches, debris) / N`.
//!
//! Each step has jump `J = (1, -1 - W + U, 1 + W)` with, in the limit,
//! `W ~ Poisson(x²/(1-x¹))` and `U ~ Poisson((1-x¹) β''(x¹))`. The drift is
//! `b = E[J]`, the diffusion `a = E[J ⊗ J]`, and the fluid path solving
//! `ẋ = b(x)` from `(0, β₁, β₀)` has the closed form
//! `x_t = (t, (1-t) f(t), β(t) - (1-t) log(1-t))` with `f` the deficiency.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::beta_series::{BetaSeries, CriticalStructure, T_CAP};
use crate::error::{Error, Result};

pub type State = [f64; 3];
pub type Matrix3 = [[f64; 3]; 3];

/// Analytic summary of a series: its critical structure and a horizon `t0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidModel {
    pub series: BetaSeries,
    pub critical: CriticalStructure,
    pub t0: f64,
}

impl FluidModel {
    pub fn new(series: BetaSeries) -> Result<Self> {
        let critical = series.critical()?;
        let t0 = (critical.z_star + 0.1).min(0.999);
        Ok(Self { series, critical, t0 })
    }

    /// `τ = z* ∧ t0`.
    pub fn tau(&self) -> f64 {
        self.critical.z_star.min(self.t0)
    }
}

/// Realisation of the limit of `|V*| / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluctuationSample {
    pub z_value: f64,
    /// True when a tangential zero stopped the process before `z*`.
    pub hit_zero: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitFractions {
    pub v_frac: f64,
    pub edge_frac: f64,
    /// False when tangential zeros exist, in which case the limit is random.
    pub hypothesis_holds: bool,
}

fn check_state(x: &State) -> Result<()> {
    if x[0] < 1.0 {
        Ok(())
    } else {
        Err(Error::Singularity(format!("x¹ = {} must be below 1", x[0])))
    }
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain(format!("t = {t} outside [0, 1)")))
    }
}

/// `b(x) = E[J] = (1, -1 - x²/(1-x¹) + (1-x¹) β''(x¹), 1 + x²/(1-x¹))`.
pub fn drift(x: &State, series: &BetaSeries) -> Result<State> {
    check_state(x)?;
    let room = 1.0 - x[0];
    let w = x[1] / room;
    Ok([1.0, -1.0 - w + room * series.horner(x[0], 2), 1.0 + w])
}

/// Closed-form Jacobian of [`drift`]; rows index components of `b`.
pub fn drift_jacobian(x: &State, series: &BetaSeries) -> Result<Matrix3> {
    check_state(x)?;
    let room = 1.0 - x[0];
    let w_x1 = x[1] / (room * room);
    Ok([
        [0.0, 0.0, 0.0],
        [
            -w_x1 - series.horner(x[0], 2) + room * series.horner(x[0], 3),
            -1.0 / room,
            0.0,
        ],
        [w_x1, 1.0 / room, 0.0],
    ])
}

/// Columns `V₁, V₂, V₃` with `Σ Vᵢ Vᵢᵀ = a(x)`.
pub fn diffusion_factors(x: &State, series: &BetaSeries) -> Result<[State; 3]> {
    check_state(x)?;
    if x[1] < 0.0 {
        return Err(Error::domain(format!("x² = {} is negative", x[1])));
    }
    let room = 1.0 - x[0];
    let promote = room * series.horner(x[0], 2);
    if promote < 0.0 {
        return Err(Error::domain("(1 - x¹) β''(x¹) is negative"));
    }
    let s1 = (x[1] / room).sqrt();
    let s2 = promote.sqrt();
    Ok([[0.0, s1, -s1], [0.0, s2, 0.0], drift(x, series)?])
}

/// `σ σᵀ` from [`diffusion_factors`].
pub fn diffusion_matrix(x: &State, series: &BetaSeries) -> Result<Matrix3> {
    let cols = diffusion_factors(x, series)?;
    let mut a = [[0.0; 3]; 3];
    for v in &cols {
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += v[i] * v[j];
            }
        }
    }
    Ok(a)
}

/// The fluid path at `t ∈ [0, 1)`.
pub fn path(t: f64, series: &BetaSeries) -> Result<State> {
    check_unit(t)?;
    Ok(path_unchecked(t.min(T_CAP), series))
}

pub(crate) fn path_unchecked(t: f64, series: &BetaSeries) -> State {
    let log_room = (-t).ln_1p();
    let room = 1.0 - t;
    [
        t,
        room * (series.horner(t, 1) + log_room),
        series.horner(t, 0) - room * log_room,
    ]
}

/// Limits of `|V*|/N` and `|Λ*|/N` when no tangential zero exists.
pub fn limit_fractions(series: &BetaSeries) -> Result<LimitFractions> {
    let critical = series.critical()?;
    Ok(limit_fractions_from(series, &critical))
}

pub fn limit_fractions_from(series: &BetaSeries, critical: &CriticalStructure) -> LimitFractions {
    if critical.has_zeta() {
        log::warn!(
            "deficiency has tangential zeros at {:?}; |V*|/N has a random limit",
            critical.zeta
        );
    }
    LimitFractions {
        v_frac: critical.z_star,
        edge_frac: limit_edge_fraction(series, critical.z_star),
        hypothesis_holds: !critical.has_zeta(),
    }
}

/// `β(z) - (1-z) log(1-z)`, continuous at `z = 1`.
pub fn limit_edge_fraction(series: &BetaSeries, z: f64) -> f64 {
    let room = 1.0 - z;
    let tail = if room > 0.0 { room * room.ln() } else { 0.0 };
    series.horner(z, 0) - tail
}

/// Variance of the normalised patch fluctuation:
/// `σ²_t = (β'(t) + log(1-t) + t) / (1-t)`.
pub fn sigma_sq(t: f64, series: &BetaSeries) -> Result<f64> {
    check_unit(t)?;
    Ok((series.deficiency_unchecked(t) + t) / (1.0 - t))
}

/// Draws the limit `Z = min{z ∈ ζ : W(z/(1-z)) < 0} ∧ z*` for a standard
/// Brownian motion `W`.
pub fn sample_z<R: Rng + ?Sized>(critical: &CriticalStructure, rng: &mut R) -> FluctuationSample {
    let mut w = 0.0;
    let mut clock = 0.0;
    for &z in &critical.zeta {
        let time = z / (1.0 - z);
        let dt = (time - clock).max(0.0);
        let g: f64 = StandardNormal.sample(rng);
        w += dt.sqrt() * g;
        clock = time;
        if w < 0.0 {
            return FluctuationSample { z_value: z, hit_zero: true };
        }
    }
    FluctuationSample {
        z_value: critical.z_star,
        hit_zero: false,
    }
}

/// A sampled fluctuation path on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationPath {
    pub times: Vec<f64>,
    pub gamma: Vec<State>,
}

impl FluctuationPath {
    /// `α_t = γ²_t / (1 - t)` at grid index `i`.
    pub fn alpha(&self, i: usize) -> f64 {
        self.gamma[i][1] / (1.0 - self.times[i])
    }
}

/// Euler–Maruyama integration of
/// `dγ = V₁(x_t) dB¹ + V₂(x_t) dB² + ∇b(x_t) γ dt`
/// from `γ₀ = (0, N(0, β₁), N(0, β₀))`. The time-change column `V₃` is left
/// out since the discrete-time chain has no Poisson clock.
pub fn simulate_fluctuation<R: Rng + ?Sized>(
    series: &BetaSeries,
    t_end: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<FluctuationPath> {
    let critical = series.critical()?;
    if !(t_end > 0.0 && t_end < critical.z_star.min(1.0)) {
        return Err(Error::domain(format!(
            "t_end = {t_end} must lie in (0, z* = {})",
            critical.z_star
        )));
    }
    let min_steps = (100.0 * t_end / (1.0 - t_end)).ceil() as usize;
    if n_steps < 1000 || n_steps < min_steps {
        return Err(Error::StepSize(format!(
            "{n_steps} steps; need at least max(1000, {min_steps})"
        )));
    }
    let dt = t_end / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let normal = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };

    let mut gamma: State = [
        0.0,
        series.coeff(1).sqrt() * normal(rng),
        series.coeff(0).sqrt() * normal(rng),
    ];
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut out = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    out.push(gamma);
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let x = path_unchecked(t, series);
        let jac = drift_jacobian(&x, series)?;
        let [v1, v2, _] = diffusion_factors(&[x[0], x[1].max(0.0), x[2]], series)?;
        let db1 = sqrt_dt * normal(rng);
        let db2 = sqrt_dt * normal(rng);
        let mut next = gamma;
        for i in 0..3 {
            let lin: f64 = (0..3).map(|j| jac[i][j] * gamma[j]).sum();
            next[i] += lin * dt + v1[i] * db1 + v2[i] * db2;
        }
        gamma = next;
        times.push((k + 1) as f64 * dt);
        out.push(gamma);
    }
    Ok(FluctuationPath { times, gamma: out })
}
