//! Chebyshev polynomials of the first kind, Chebyshev grids, and symmetric
//! Toeplitz matrices — the basis everything else is written in.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Evaluate the Chebyshev polynomial `T_j` at `x ∈ [-1, 1]` by the three-term
/// recurrence `T_{j+1} = 2x T_j - T_{j-1}`. Extrapolation outside the interval
/// is refused rather than silently computed.
pub fn cheb_eval(j: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("cheb_eval: x = {x} outside [-1, 1]")));
    }
    Ok(cheb_eval_unchecked(j, x))
}

/// Recurrence evaluation without the domain check, for inner loops that already
/// guarantee `x ∈ [-1, 1]`.
pub fn cheb_eval_unchecked(j: usize, x: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..j {
                (prev, cur) = (cur, 2.0 * x * cur - prev);
            }
            cur
        }
    }
}

/// Evaluate `Σ_k coeffs[k] T_k(x)` by Clenshaw's algorithm.
pub fn cheb_series_eval(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().rev() {
        (b1, b2) = (2.0 * x * b1 - b2 + c, b1);
    }
    // Clenshaw downward pass leaves the value as b1 - x*b2 after absorbing T_0.
    b1 - x * b2
}

/// Symmetric Toeplitz matrix with first column `x`: `result[r][c] = x[|r-c|]`.
/// Equivalently `Σ_j x[j] D_j` where `D_j` carries ones on the j-th sub- and
/// superdiagonal (`D_0 = I`).
pub fn toeplitz(x: &[f64]) -> Result<DMatrix<f64>> {
    if x.is_empty() {
        return Err(Error::invalid("toeplitz: empty sequence"));
    }
    let d = x.len();
    Ok(DMatrix::from_fn(d, d, |r, c| x[r.abs_diff(c)]))
}

/// The diagonal-pattern matrix `D_j` of dimension `d`: ones on the j-th sub- and
/// superdiagonal, identity for `j = 0`.
pub fn diag_pair(d: usize, j: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |r, c| if r.abs_diff(c) == j { 1.0 } else { 0.0 })
}

/// `n` Chebyshev points of the second kind on `[-1, 1]`, ordered increasingly:
/// `cos(iπ/(n-1))`, the extrema of `T_{n-1}`, endpoints included. For `n = 1`
/// the single node is 0.
pub fn cheb_points_second_kind(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -((i as f64) * std::f64::consts::PI / ((n - 1) as f64)).cos())
        .collect()
}

/// A Chebyshev-distributed evaluation grid of `g` points (endpoints included),
/// clustered where sup norms of polynomials and Lebesgue functions peak.
pub fn cheb_grid(g: usize) -> Vec<f64> {
    cheb_points_second_kind(g.max(2))
}

/// Max of `|f|` over a Chebyshev-distributed grid of `g` points.
pub fn grid_sup(f: impl Fn(f64) -> f64, g: usize) -> f64 {
    cheb_grid(g).into_iter().map(|x| f(x).abs()).fold(0.0, f64::max)
}

/// Coefficient vector of a polynomial in the Chebyshev basis, wrapped for reuse.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebPoly {
    pub coeffs: DVector<f64>,
}

impl ChebPoly {
    pub fn new(coeffs: impl Into<DVector<f64>>) -> Self {
        ChebPoly { coeffs: coeffs.into() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        cheb_series_eval(self.coeffs.as_slice(), x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_degree_values() {
        assert_abs_diff_eq!(cheb_eval(0, 0.37).unwrap(), 1.0);
        assert_abs_diff_eq!(cheb_eval(1, 0.5).unwrap(), 0.5);
        assert_abs_diff_eq!(cheb_eval(2, 0.3).unwrap(), -0.82, epsilon = 1e-15);
        assert_abs_diff_eq!(cheb_eval(3, -0.2).unwrap(), 4.0 * (-0.2f64).powi(3) - 3.0 * (-0.2), epsilon = 1e-15);
    }

    #[test]
    fn refuses_extrapolation() {
        assert!(cheb_eval(2, 1.0001).is_err());
        assert!(cheb_eval(2, -2.0).is_err());
    }

    #[test]
    fn bounded_on_grid_up_to_degree_64() {
        for j in 0..=64 {
            let sup = grid_sup(|x| cheb_eval_unchecked(j, x), 10_000);
            assert!(sup <= 1.0 + 1e-12, "T_{j} exceeded 1: {sup}");
            assert_abs_diff_eq!(cheb_eval_unchecked(j, 1.0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn clenshaw_matches_recurrence() {
        let coeffs = [0.3, -1.2, 0.0, 2.5, -0.7];
        for &x in &[-1.0, -0.63, 0.0, 0.21, 0.99, 1.0] {
            let direct: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * cheb_eval_unchecked(j, x))
                .sum();
            assert_abs_diff_eq!(cheb_series_eval(&coeffs, x), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn toeplitz_patterns() {
        let id = toeplitz(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(id, DMatrix::identity(3, 3));

        let d1 = toeplitz(&[0.0, 1.0]).unwrap();
        assert_eq!(d1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let t = toeplitz(&[2.0, 1.0, -1.0]).unwrap();
        assert_eq!(
            t,
            DMatrix::from_row_slice(3, 3, &[2.0, 1.0, -1.0, 1.0, 2.0, 1.0, -1.0, 1.0, 2.0])
        );
        assert!(toeplitz(&[]).is_err());
    }

    #[test]
    fn toeplitz_equals_diag_pair_expansion() {
        let x = [0.7, -0.3, 0.1, 2.0];
        let t = toeplitz(&x).unwrap();
        let mut sum = DMatrix::zeros(4, 4);
        for (j, &xj) in x.iter().enumerate() {
            sum += diag_pair(4, j) * xj;
        }
        assert_abs_diff_eq!((t - sum).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn second_kind_points() {
        assert_eq!(cheb_points_second_kind(1), vec![0.0]);
        let p2 = cheb_points_second_kind(2);
        assert_abs_diff_eq!(p2[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p2[1], 1.0, epsilon = 1e-15);
        let p5 = cheb_points_second_kind(5);
        assert_abs_diff_eq!(p5[2], 0.0, epsilon = 1e-15);
        assert!(p5.windows(2).all(|w| w[0] < w[1]));
    }
}
