//! The edge-density generating function `β(t) = Σ β_j t^j` and the scalar
//! analytics derived from it.
//!
//! Only polynomials are supported, so the radius of convergence is infinite
//! and every series here has a threshold `z* < 1` or `z* = 1` decided on the
//! capped interval `[0, 1 - 1e-9]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::{bisect_sign_change, golden_section_min};

/// Largest `t` at which the logarithmic terms are evaluated.
pub const T_CAP: f64 = 1.0 - 1e-9;
pub const DEFAULT_GRID_POINTS: usize = 100_000;
pub const DEFAULT_TANGENCY_TOLERANCE: f64 = 1e-9;
const ROOT_REL_TOL: f64 = 1e-12;
const MIN_REL_TOL: f64 = 1e-13;

/// Polynomial generating function with non-negative coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaSeries {
    coeffs: Vec<f64>,
}

/// Threshold `z*` and the tangential zeros `ζ` of the deficiency function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalStructure {
    pub z_star: f64,
    pub zeta: Vec<f64>,
    pub tangency_tolerance: f64,
}

impl BetaSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some((j, c)) = coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
        {
            return Err(Error::domain(format!(
                "coefficient β_{j} = {c} must be finite and non-negative"
            )));
        }
        let mut coeffs = coeffs;
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Ok(Self { coeffs })
    }

    /// Random graph with distinguished vertices: each vertex carries a patch
    /// with probability `p` and each pair an edge at density `alpha / N`.
    pub fn from_graph_params(p: f64, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::domain(format!("p = {p} must lie in [0, 1)")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha = {alpha} must be non-negative")));
        }
        Self::new(vec![0.0, -(1.0 - p).ln(), alpha / 2.0])
    }

    /// `alpha * (a + b t)^k`, expanded binomially.
    pub fn power_family(alpha: f64, a: f64, b: f64, k: u32) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && alpha >= 0.0) {
            return Err(Error::domain("power family needs alpha, a, b >= 0"));
        }
        let k_us = k as usize;
        let mut coeffs = vec![0.0; k_us + 1];
        let mut binom = 1.0f64;
        for (j, c) in coeffs.iter_mut().enumerate() {
            if j > 0 {
                binom *= (k_us + 1 - j) as f64 / j as f64;
            }
            *c = alpha * binom * a.powi((k_us - j) as i32) * b.powi(j as i32);
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    /// Index of the highest non-zero coefficient (0 for the zero series).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// `order`-th derivative at `t ∈ [0, 1)`, `order ≤ 3`.
    pub fn eval(&self, t: f64, order: u32) -> Result<f64> {
        check_unit(t)?;
        if order > 3 {
            return Err(Error::domain(format!("derivative order {order} > 3")));
        }
        Ok(self.horner(t, order))
    }

    /// Horner evaluation of the `order`-th derivative with no domain checks.
    pub fn horner(&self, t: f64, order: u32) -> f64 {
        let k = order as usize;
        if self.coeffs.len() <= k {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in (k..self.coeffs.len()).rev() {
            acc = acc * t + self.coeffs[j] * falling_factorial(j, k);
        }
        acc
    }

    /// `f(t) = β'(t) + log(1 - t)`.
    pub fn deficiency(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        Ok(self.deficiency_unchecked(t))
    }

    pub(crate) fn deficiency_unchecked(&self, t: f64) -> f64 {
        self.horner(t, 1) + (-t).ln_1p()
    }

    /// Locates `z*` and the tangential zeros of the deficiency function.
    ///
    /// The deficiency is tabulated on `grid_points` uniform points of
    /// `[0, T_CAP]`. A sign change from `>= 0` to `< 0` is refined by
    /// bisection; a local minimum is refined by golden-section search and
    /// reported as a tangency when its refined value lies within
    /// `tangency_tolerance` of zero. A negative excursion whose refined
    /// minimum stays above `-tangency_tolerance` is treated as a tangency
    /// too, not as the threshold.
    pub fn critical_structure(
        &self,
        grid_points: usize,
        tangency_tolerance: f64,
    ) -> Result<CriticalStructure> {
        if grid_points < 1000 {
            return Err(Error::domain(format!("grid_points = {grid_points} < 1000")));
        }
        if !(tangency_tolerance > 0.0) {
            return Err(Error::domain("tangency tolerance must be positive"));
        }
        if !(self.coeff(1) > 0.0) {
            return Err(Error::Degenerate(
                "β_1 = 0: no patches at time zero, nothing is identifiable".into(),
            ));
        }

        let f = |t: f64| self.deficiency_unchecked(t);
        let step = T_CAP / (grid_points - 1) as f64;
        let grid: Vec<f64> = (0..grid_points).map(|k| k as f64 * step).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
        let x_tol = MIN_REL_TOL.max(step * 1e-8);

        let mut zeta = Vec::new();
        let mut z_star = 1.0;
        let mut k = 1;
        while k < grid_points {
            if vals[k] < 0.0 && vals[k - 1] >= 0.0 {
                // negative excursion on [grid[k-1], grid[end]]
                let end = (k..grid_points).find(|&i| vals[i] >= 0.0);
                let shallow = end.and_then(|e| {
                    let (tm, fm) = golden_section_min(f, grid[k - 1], grid[e], x_tol);
                    (fm >= -tangency_tolerance && is_single_dip(&vals[k - 1..=e]))
                        .then_some((tm, e))
                });
                match shallow {
                    Some((tm, e)) => {
                        zeta.push(tm);
                        k = e + 1;
                        continue;
                    }
                    None => {
                        z_star = bisect_sign_change(f, grid[k - 1], grid[k], ROOT_REL_TOL);
                        break;
                    }
                }
            }
            if k + 1 < grid_points && vals[k] <= vals[k - 1] && vals[k] < vals[k + 1] {
                let (tm, fm) = golden_section_min(f, grid[k - 1], grid[k + 1], x_tol);
                if fm < -tangency_tolerance {
                    // a crossing the grid stepped over
                    z_star = bisect_sign_change(f, grid[k - 1], tm, ROOT_REL_TOL);
                    break;
                }
                if fm <= tangency_tolerance {
                    zeta.push(tm);
                }
            }
            k += 1;
        }
        zeta.retain(|&z| z < z_star);
        zeta.sort_by(f64::total_cmp);
        zeta.dedup_by(|a, b| (*a - *b).abs() <= 2.0 * step);

        Ok(CriticalStructure {
            z_star,
            zeta,
            tangency_tolerance,
        })
    }

    /// [`Self::critical_structure`] with the default grid and tolerance.
    pub fn critical(&self) -> Result<CriticalStructure> {
        self.critical_structure(DEFAULT_GRID_POINTS, DEFAULT_TANGENCY_TOLERANCE)
    }
}

impl CriticalStructure {
    pub fn has_zeta(&self) -> bool {
        !self.zeta.is_empty()
    }
}

// A shallow excursion is only a tangency if the tabulated values fall and then
// rise once; anything else means two separate crossings.
fn is_single_dip(vals: &[f64]) -> bool {
    let Some(imin) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    else {
        return false;
    };
    vals[..=imin].windows(2).all(|w| w[1] <= w[0]) && vals[imin..].windows(2).all(|w| w[1] >= w[0])
}

fn falling_factorial(j: usize, k: usize) -> f64 {
    (0..k).map(|r| (j - r) as f64).product()
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain(format!("t = {t} outside [0, 1)")))
    }
}
