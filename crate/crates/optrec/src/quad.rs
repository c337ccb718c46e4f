//! Gauss–Legendre quadrature on [-1, 1].
//!
//! Rules are computed once per node count (Newton iteration on the Legendre
//! recurrence, machine-precision nodes) and cached; integration is then a dot
//! product. All densities in scope are smooth, so a fixed rule with a declared
//! error budget is preferred over adaptive schemes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi-style initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule for `n` nodes.
    pub fn rule(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap();
        map.entry(n).or_insert_with(|| Arc::new(Self::compute(n))).clone()
    }

    /// ∫_{-1}^{1} f.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// ∫_{lo}^{hi} f by affine change of variables.
    pub fn integrate_on(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        half * self.integrate(|t| f(mid + half * t))
    }
}

/// `(P_n(x), P_n'(x))` by the Legendre three-term recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Convenience: integrate with the shared `n`-node rule.
pub fn integrate(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    GaussLegendre::rule(n).integrate(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::rule(5);
        for deg in 0..=9usize {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert_abs_diff_eq!(rule.integrate(|x| x.powi(deg as i32)), exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 3, 8, 64, 256] {
            let rule = GaussLegendre::rule(n);
            let s: f64 = rule.weights.iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
            assert!(rule.nodes.iter().all(|x| (-1.0..=1.0).contains(x)));
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn smooth_integrands_at_default_node_count() {
        // ∫ sin(πx) = 0, ∫ cos(πx) = 0, ∫ e^x = e - 1/e, ∫ |x| by two half-range rules.
        let rule = GaussLegendre::rule(256);
        assert_abs_diff_eq!(rule.integrate(|x| (std::f64::consts::PI * x).sin()), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            rule.integrate(f64::exp),
            std::f64::consts::E - (-1.0f64).exp(),
            epsilon = 1e-13
        );
        let halves = rule.integrate_on(-1.0, 0.0, |x| -x) + rule.integrate_on(0.0, 1.0, |x| x);
        assert_abs_diff_eq!(halves, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sin_pi_abs_integral() {
        // ∫_{-1}^{1} |sin(πx)| dx = 4/π, integrating each smooth half separately.
        let rule = GaussLegendre::rule(128);
        let v = rule.integrate_on(-1.0, 0.0, |x| -(std::f64::consts::PI * x).sin())
            + rule.integrate_on(0.0, 1.0, |x| (std::f64::consts::PI * x).sin());
        assert_abs_diff_eq!(v, 4.0 / std::f64::consts::PI, epsilon = 1e-13);
    }
}
