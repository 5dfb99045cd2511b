//! Composite Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// Gauss–Legendre rule of fixed order on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `order`-point rule by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal subintervals.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.panel(&f, lo, lo + h)
            })
            .sum()
    }

    /// Integrates `f` over `[a, b]` when `f` has an integrable singularity at
    /// `b`. Panels shrink geometrically towards `b` (ratio 1/2) until their
    /// width drops below `min_width`; the leftover sliver is ignored.
    pub fn integrate_graded_right<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        min_width: f64,
    ) -> f64 {
        let mut total = 0.0;
        let mut lo = a;
        loop {
            let width = b - lo;
            if width <= min_width {
                break;
            }
            let hi = lo + 0.5 * width;
            total += self.panel(&f, lo, hi);
            lo = hi;
        }
        total
    }

    fn panel<F: Fn(f64) -> f64>(&self, f: &F, lo: f64, hi: f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    if order == 1 {
        (x, 1.0)
    } else {
        (p1, dp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        let gl = GaussLegendre::new(10);
        // degree 19 is integrated exactly by a 10-point rule
        let v = gl.integrate(|x| x.powi(19) + 3.0 * x.powi(4), 0.0, 1.0, 1);
        assert!((v - (1.0 / 20.0 + 3.0 / 5.0)).abs() < 1e-14);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_singularity() {
        let gl = GaussLegendre::new(20);
        // ∫_0^1 ln(1-t) dt = -1
        let v = gl.integrate_graded_right(|t| (1.0 - t).ln(), 0.0, 1.0, 1e-15);
        assert!((v + 1.0).abs() < 1e-12, "{v}");
    }
}
