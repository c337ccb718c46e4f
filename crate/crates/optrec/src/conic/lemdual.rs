//! Matched primal/dual encodings of the split-trace SDP pair
//!
//! ```text
//! value  =  max  tr[C(P−M)]
//!          s.t.  tr[B_j(P+M)] = β_j   (j = 1..n)
//!                tr[A_i(P−M)] ≤ α_i  (i = 1..m)
//!                P ⪰ 0,  M ⪰ 0
//!
//!        =  min  ⟨β,x⟩ + ⟨α,u⟩
//!          s.t.  Σ_j x_j B_j ⪰ ±(C − Σ_i u_i A_i),   u ≥ 0.
//! ```
//!
//! Both directions are returned as standard-form minimization programs; in
//! each case the common optimal value above equals **minus** the standard-form
//! minimum, so agreement of the two returned programs' optima is a two-sided
//! certificate for it.

use super::build::{Builder, LinExpr};
use super::cone::{svec, svec_len, Cone};
use super::ConeProgram;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Build the (primal, dual) standard-form pair for the split-trace SDP.
///
/// Inputs are treated as symmetric (only the symmetric part of each matrix
/// enters). `a_mats`/`alpha` give the inequality data (may be empty),
/// `b_mats`/`beta` the equality data, `c_mat` the objective matrix.
///
/// The shared optimal value of the pair is `−primal_objective` of either
/// returned program at optimality.
pub fn split_sdp_pair(
    a_mats: &[DMatrix<f64>],
    b_mats: &[DMatrix<f64>],
    c_mat: &DMatrix<f64>,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
) -> Result<(ConeProgram, ConeProgram)> {
    let d = c_mat.nrows();
    if d == 0 || c_mat.ncols() != d {
        return Err(Error::invalid("split_sdp_pair: C must be square and nonempty"));
    }
    if a_mats.len() != alpha.len() || b_mats.len() != beta.len() {
        return Err(Error::invalid(format!(
            "split_sdp_pair: {} inequality matrices with {} bounds, {} equality matrices with {} values",
            a_mats.len(),
            alpha.len(),
            b_mats.len(),
            beta.len()
        )));
    }
    for mat in a_mats.iter().chain(b_mats.iter()) {
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::invalid(format!(
                "split_sdp_pair: all matrices must be {d}×{d}"
            )));
        }
    }
    let m = a_mats.len();
    let n = b_mats.len();
    let sl = svec_len(d);

    // Primal, assembled directly in standard form over (svec P, svec M, s):
    //   min −tr[C(P−M)] s.t. equality and slacked inequality rows.
    let sc = svec(c_mat);
    let mut c_std = DVector::zeros(2 * sl + m);
    for k in 0..sl {
        c_std[k] = -sc[k];
        c_std[sl + k] = sc[k];
    }
    let mut a_std = DMatrix::zeros(n + m, 2 * sl + m);
    let mut b_std = DVector::zeros(n + m);
    for (j, bj) in b_mats.iter().enumerate() {
        let sb = svec(bj);
        for k in 0..sl {
            a_std[(j, k)] = sb[k];
            a_std[(j, sl + k)] = sb[k];
        }
        b_std[j] = beta[j];
    }
    for (i, ai) in a_mats.iter().enumerate() {
        let sa = svec(ai);
        for k in 0..sl {
            a_std[(n + i, k)] = sa[k];
            a_std[(n + i, sl + k)] = -sa[k];
        }
        a_std[(n + i, 2 * sl + i)] = 1.0;
        b_std[n + i] = alpha[i];
    }
    let mut cones = vec![Cone::Psd(d), Cone::Psd(d)];
    if m > 0 {
        cones.push(Cone::NonNeg(m));
    }
    let primal = ConeProgram { c: c_std, a: a_std, b: b_std, cones };

    // Dual, through the geometric builder: variables (x, u), u ≥ 0, and the
    // two one-sided linear matrix inequalities.
    let mut bld = Builder::new();
    let xv = bld.vars(n);
    let uv = bld.vars(m);
    for &u in &uv {
        bld.nonneg(LinExpr::of(u));
    }
    let sym = |mat: &DMatrix<f64>, i: usize, j: usize| 0.5 * (mat[(i, j)] + mat[(j, i)]);
    for sign in [1.0f64, -1.0] {
        // Σ x_j B_j + sign·(Σ u_i A_i − C) ⪰ 0
        let mut entries = Vec::with_capacity(sl);
        for j in 0..d {
            for i in 0..=j {
                let mut e = LinExpr::constant(-sign * sym(c_mat, i, j));
                for (k, bk) in b_mats.iter().enumerate() {
                    e = e.term(sym(bk, i, j), xv[k]);
                }
                for (k, ak) in a_mats.iter().enumerate() {
                    e = e.term(sign * sym(ak, i, j), uv[k]);
                }
                entries.push(e);
            }
        }
        bld.psd(d, entries);
    }
    let mut obj = LinExpr::new();
    for (k, &x) in xv.iter().enumerate() {
        obj = obj.term(-beta[k], x);
    }
    for (k, &u) in uv.iter().enumerate() {
        obj = obj.term(-alpha[k], u);
    }
    bld.maximize(obj);
    let dual = bld.build()?.program().clone();

    Ok((primal, dual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::Tolerances;
    use crate::conic::SolveStatus;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn pair_values(
        a_mats: &[DMatrix<f64>],
        b_mats: &[DMatrix<f64>],
        c_mat: &DMatrix<f64>,
        alpha: &DVector<f64>,
        beta: &DVector<f64>,
    ) -> (f64, f64) {
        let (p, d) = split_sdp_pair(a_mats, b_mats, c_mat, alpha, beta).unwrap();
        let sp = p.solve(&Tolerances::default()).unwrap();
        let sd = d.solve(&Tolerances::default()).unwrap();
        assert_eq!(sp.status, SolveStatus::Optimal, "primal status");
        assert_eq!(sd.status, SolveStatus::Optimal, "dual status");
        (-sp.primal_objective, -sd.primal_objective)
    }

    #[test]
    fn scalar_pair_recovers_absolute_value() {
        for &c in &[0.7, -0.3, 0.0] {
            let (vp, vd) = pair_values(
                &[],
                &[DMatrix::from_element(1, 1, 1.0)],
                &DMatrix::from_element(1, 1, c),
                &DVector::zeros(0),
                &DVector::from_vec(vec![1.0]),
            );
            assert_abs_diff_eq!(vp, c.abs(), epsilon = 1e-7);
            assert_abs_diff_eq!(vd, c.abs(), epsilon = 1e-7);
        }
    }

    #[test]
    fn zero_objective_matrix_gives_zero() {
        let (vp, vd) = pair_values(
            &[DMatrix::identity(2, 2)],
            &[DMatrix::identity(2, 2)],
            &DMatrix::zeros(2, 2),
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![1.0]),
        );
        assert_abs_diff_eq!(vp, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(vd, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn random_pairs_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for trial in 0..12 {
            let d = rng.gen_range(2..=3usize);
            let n_extra = rng.gen_range(0..=1usize);
            let m = rng.gen_range(0..=2usize);
            let rand_sym = |rng: &mut rand_chacha::ChaCha8Rng| {
                let g = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
                (&g + g.transpose()) * 0.5
            };
            // Normalization row keeps the primal bounded and strictly feasible;
            // extra equality values are chosen consistent with P = M = I/(2d).
            let mut b_mats = vec![DMatrix::identity(d, d)];
            let mut beta = vec![1.0];
            for _ in 0..n_extra {
                let bj = rand_sym(&mut rng);
                beta.push(bj.trace() / d as f64);
                b_mats.push(bj);
            }
            let a_mats: Vec<_> = (0..m).map(|_| rand_sym(&mut rng)).collect();
            let alpha = DVector::from_fn(m, |_, _| rng.gen_range(0.1..1.0));
            let c_mat = rand_sym(&mut rng);
            let (vp, vd) =
                pair_values(&a_mats, &b_mats, &c_mat, &alpha, &DVector::from_vec(beta));
            assert_abs_diff_eq!(vp, vd, epsilon = 1e-6);
            assert!(vp.is_finite(), "trial {trial}");
        }
    }

    #[test]
    fn dimension_mismatch_is_invalid() {
        let bad = split_sdp_pair(
            &[DMatrix::identity(3, 3)],
            &[DMatrix::identity(2, 2)],
            &DMatrix::identity(2, 2),
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![1.0]),
        );
        assert!(bad.is_err());
        let bad = split_sdp_pair(
            &[],
            &[DMatrix::identity(2, 2)],
            &DMatrix::identity(2, 2),
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![1.0]),
        );
        assert!(bad.is_err());
    }
}
