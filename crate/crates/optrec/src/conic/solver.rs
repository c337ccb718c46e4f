//! Homogeneous self-dual interior-point iteration with Nesterov–Todd scaling
//! and a Mehrotra-style predictor-corrector, on dense normal equations.

use super::cone::{ConeLayout, Scalings};
use super::{SolveStatus, Tolerances};
use nalgebra::{DMatrix, DVector};

pub(crate) struct IpmOutcome {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
}

/// ∞-norm that tolerates empty vectors (p = 0 programs).
fn vmax(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.amax()
    }
}

/// Solve min ⟨c,x⟩ s.t. Ax = b, x in the cone product (no zero blocks; A full
/// row rank up to regularization). Returns normalized points: at `Optimal`
/// (x,y,z) approximate a primal-dual pair; at an infeasibility status they
/// hold the corresponding certificate.
pub(crate) fn solve_ipm(
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    layout: &ConeLayout,
    tol: &Tolerances,
) -> IpmOutcome {
    let (p, n) = (a.nrows(), a.ncols());
    debug_assert_eq!(n, layout.total);

    // Ruiz equilibration. Column scales are uniform within each cone block so
    // the scaled cone equals the original one; row/column scalings cancel in
    // both objectives, and certificates unscale by the same diagonal maps.
    let mut a = a.clone();
    let mut dr = DVector::from_element(p, 1.0);
    let mut dc = DVector::from_element(n, 1.0);
    for _ in 0..3 {
        for i in 0..p {
            let m = a.row(i).amax();
            if m > 0.0 {
                let s = 1.0 / m.sqrt();
                a.row_mut(i).scale_mut(s);
                dr[i] *= s;
            }
        }
        for (cone, &off) in layout.cones.iter().zip(&layout.offsets) {
            let d = cone.dim();
            if d == 0 || p == 0 {
                continue;
            }
            let m = a.view((0, off), (p, d)).amax();
            if m > 0.0 {
                let s = 1.0 / m.sqrt();
                a.view_mut((0, off), (p, d)).scale_mut(s);
                for j in off..off + d {
                    dc[j] *= s;
                }
            }
        }
    }
    let b = DVector::from_fn(p, |i, _| dr[i] * b[i]);
    let c = DVector::from_fn(n, |j, _| dc[j] * c[j]);
    let (a, b, c) = (&a, &b, &c);

    let at = a.transpose();
    let nu = layout.degree() as f64;
    let e = layout.identity();

    let mut x = e.clone();
    let mut z = e.clone();
    let mut y: DVector<f64> = DVector::zeros(p);
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;
    let (bnorm, cnorm) = (vmax(b), vmax(c));
    let mut stalls = 0usize;
    let trace = std::env::var_os("OPTREC_IPM_TRACE").is_some();

    let finish = |x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, den: f64, status, it| {
        IpmOutcome {
            x: DVector::from_fn(n, |j, _| dc[j] * x[j] / den),
            y: DVector::from_fn(p, |i, _| dr[i] * y[i] / den),
            z: DVector::from_fn(n, |j, _| z[j] / (dc[j] * den)),
            status,
            iterations: it,
        }
    };

    for iter in 0..=tol.max_iter {
        let rx = &at * &y + &z - c * tau;
        let ry = a * &x - b * tau;
        let rt = -c.dot(&x) + b.dot(&y) - kappa;
        let pobj = c.dot(&x) / tau;
        let dobj = b.dot(&y) / tau;
        let pres = vmax(&ry) / (tau * (1.0 + bnorm));
        let dres = vmax(&rx) / (tau * (1.0 + cnorm));
        let gap = (pobj - dobj).abs();
        let mu = (x.dot(&z) + tau * kappa) / (nu + 1.0);

        if trace {
            eprintln!(
                "ipm iter {iter:3}: mu {mu:9.2e} pres {pres:9.2e} dres {dres:9.2e} gap {gap:9.2e} tau {tau:9.2e} kappa {kappa:9.2e}"
            );
        }
        if pres <= tol.feas_tol
            && dres <= tol.feas_tol
            && gap <= tol.gap_tol * (1.0 + pobj.abs().min(dobj.abs()))
        {
            return finish(&x, &y, &z, tau, SolveStatus::Optimal, iter);
        }
        let bty = b.dot(&y);
        if bty > 1e-10 {
            let pinf = vmax(&(&at * &y + &z)) / (bty * (1.0 + cnorm));
            if pinf <= tol.feas_tol {
                return finish(&x, &y, &z, bty, SolveStatus::PrimalInfeasible, iter);
            }
        }
        let mctx = -c.dot(&x);
        if mctx > 1e-10 {
            let dinf = vmax(&(a * &x)) / (mctx * (1.0 + bnorm));
            if dinf <= tol.feas_tol {
                return finish(&x, &y, &z, mctx, SolveStatus::DualInfeasible, iter);
            }
        }
        let relaxed_ok = pres <= 50.0 * tol.feas_tol
            && dres <= 50.0 * tol.feas_tol
            && gap <= 50.0 * tol.gap_tol * (1.0 + pobj.abs().min(dobj.abs()));
        if iter == tol.max_iter {
            if relaxed_ok {
                return finish(&x, &y, &z, tau, SolveStatus::Optimal, iter);
            }
            break;
        }

        let sc = match Scalings::compute(layout, &x, &z) {
            Ok(s) => s,
            Err(_) => return finish(&x, &y, &z, tau, SolveStatus::NumericalFailure, iter),
        };

        // Factor the (sx, sy) KKT subsystem
        //     [ −H⁻¹  Aᵀ ] [sx]   [ f ]
        //     [  A     0 ] [sy] = [ h ].
        // Small problems take a dense LU of this augmented matrix: it keeps
        // the conditioning of the KKT system itself, which matters once the
        // scalings degenerate near the boundary. Larger problems (the moment
        // relaxations, whose PSD blocks make n large while p stays small)
        // use Cholesky on the normal equations G = A·H·Aᵀ instead; G is only
        // p×p, at the price of squared conditioning, which the refinement
        // passes below absorb on interior-friendly instances.
        let use_aug = n + p <= 500;
        let mut aug: Option<(DMatrix<f64>, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)> =
            None;
        let mut normal: Option<(DMatrix<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>)> = None;
        if use_aug {
            let mut k0 = DMatrix::zeros(n + p, n + p);
            let mut unit = DVector::zeros(n);
            for j in 0..n {
                unit[j] = 1.0;
                let col = sc.apply_hinv(&unit);
                k0.view_mut((0, j), (n, 1)).copy_from(&(-col));
                unit[j] = 0.0;
            }
            k0.view_mut((0, n), (n, p)).copy_from(&at);
            k0.view_mut((n, 0), (p, n)).copy_from(a);
            let kscale = k0.amax().max(1.0);
            let mut reg = 0.0f64;
            let lu = loop {
                let mut kreg = k0.clone();
                for j in 0..n {
                    kreg[(j, j)] -= reg;
                }
                for i in 0..p {
                    kreg[(n + i, n + i)] += reg;
                }
                let lu = nalgebra::LU::new(kreg);
                let probe = DVector::from_element(n + p, 1.0);
                let ok = lu
                    .solve(&probe)
                    .is_some_and(|s| s.iter().all(|v| v.is_finite()));
                if ok {
                    break lu;
                }
                reg = if reg == 0.0 { 1e-12 * kscale } else { reg * 100.0 };
                if reg > kscale {
                    return finish(&x, &y, &z, tau, SolveStatus::NumericalFailure, iter);
                }
            };
            aug = Some((k0, lu));
        } else {
            // Normal-equations matrix G = A·H·Aᵀ, factored once per iteration.
            let mut ah = DMatrix::zeros(p, n);
            for i in 0..p {
                let hi = sc.apply_h(&at.column(i).into_owned());
                ah.row_mut(i).copy_from(&hi.transpose());
            }
            let g = &ah * &at;
            let gscale = if p > 0 { g.diagonal().amax().max(1e-12) } else { 1.0 };
            let mut reg = 1e-12 * gscale;
            let chol = loop {
                let greg = &g + DMatrix::identity(p, p) * reg;
                match nalgebra::Cholesky::new(greg) {
                    Some(ch) => break ch,
                    None => {
                        reg *= 100.0;
                        if reg > gscale {
                            return finish(&x, &y, &z, tau, SolveStatus::NumericalFailure, iter);
                        }
                    }
                }
            };
            normal = Some((g, chol));
        }

        // Solve the KKT subsystem above for (sx, sy) given (f, h).
        let kkt_solve = |fx: &DVector<f64>, h: &DVector<f64>| {
            if let Some((k0, lu)) = &aug {
                let mut rhs = DVector::zeros(n + p);
                rhs.rows_mut(0, n).copy_from(fx);
                rhs.rows_mut(n, p).copy_from(h);
                let mut s = lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(n + p));
                for _ in 0..2 {
                    let r = &rhs - k0 * &s;
                    if r.amax() <= 1e-14 * (1.0 + rhs.amax()) {
                        break;
                    }
                    match lu.solve(&r) {
                        Some(cor) => s += cor,
                        None => break,
                    }
                }
                (s.rows(0, n).into_owned(), s.rows(n, p).into_owned())
            } else {
                let (g, chol) = normal.as_ref().expect("one factorization path is set");
                let hf = sc.apply_h(fx);
                let rhs = h + a * &hf;
                let mut sy = chol.solve(&rhs);
                for _ in 0..2 {
                    let r = &rhs - g * &sy;
                    if r.amax() <= 1e-14 * (1.0 + rhs.amax()) {
                        break;
                    }
                    sy += chol.solve(&r);
                }
                let sx = sc.apply_h(&(&at * &sy - fx));
                (sx, sy)
            }
        };

        let (qx, v) = kkt_solve(c, b);
        let denom = kappa / tau + b.dot(&v) - c.dot(&qx);

        let direction = |brx: &DVector<f64>, bry: &DVector<f64>, brt: f64, ds: &DVector<f64>, dk: f64| {
            let gvec = sc.lambda_solve(ds);
            let fx = brx - sc.apply_winv(&gvec);
            let (px, u) = kkt_solve(&fx, bry);
            let dtau = (brt + c.dot(&px) - b.dot(&u) + dk / tau) / denom;
            let dy = &u + &v * dtau;
            let dx = &px + &qx * dtau;
            let dkappa = (dk - kappa * dtau) / tau;
            let dz = brx + c * dtau - &at * &dy;
            (dx, dy, dz, dtau, dkappa)
        };

        let max_step = |dx: &DVector<f64>, dz: &DVector<f64>, dtau: f64, dkappa: f64| {
            let mut alpha = layout
                .step_to_boundary(&x, dx)
                .min(layout.step_to_boundary(&z, dz));
            if dtau < 0.0 {
                alpha = alpha.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                alpha = alpha.min(-kappa / dkappa);
            }
            alpha
        };

        // Predictor (affine direction).
        let ds_aff = -layout.jordan(&sc.lambda, &sc.lambda);
        let dk_aff = -tau * kappa;
        let (dxa, _dya, dza, dta, dka) =
            direction(&(-&rx), &(-&ry), -rt, &ds_aff, dk_aff);
        let alpha_aff = max_step(&dxa, &dza, dta, dka).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // Corrector (combined direction).
        let corr = layout.jordan(&sc.apply_winvt(&dxa), &sc.apply_w(&dza));
        let ds = &ds_aff + &e * (sigma * mu) - corr;
        let dk = dk_aff + sigma * mu - dta * dka;
        let f = 1.0 - sigma;
        let (brx_c, bry_c, brt_c) = (&rx * -f, &ry * -f, -f * rt);
        let (mut dx, mut dy, mut dz, mut dtau, mut dkappa) =
            direction(&brx_c, &bry_c, brt_c, &ds, dk);

        // Iterative refinement against the full linear subsystem: the normal-
        // equations solve leaks error into the primal and complementarity rows
        // once the scalings are ill-conditioned, and one or two correction
        // solves restore the attainable accuracy.
        for _ in 0..2 {
            let r_rx = &brx_c - (&at * &dy + &dz - c * dtau);
            let r_ry = &bry_c - (a * &dx - b * dtau);
            let r_rt = brt_c - (-c.dot(&dx) + b.dot(&dy) - dkappa);
            let r_ds =
                &ds - layout.jordan(&sc.lambda, &(sc.apply_w(&dz) + sc.apply_winvt(&dx)));
            let r_dk = dk - (tau * dkappa + kappa * dtau);
            let metric = vmax(&r_rx)
                .max(vmax(&r_ry))
                .max(vmax(&r_ds))
                .max(r_rt.abs())
                .max(r_dk.abs());
            if metric <= 1e-13 * (1.0 + mu) {
                break;
            }
            let (cx, cy, cz, ctau, ckappa) = direction(&r_rx, &r_ry, r_rt, &r_ds, r_dk);
            dx += cx;
            dy += cy;
            dz += cz;
            dtau += ctau;
            dkappa += ckappa;
        }

        let alpha = (0.99 * max_step(&dx, &dz, dtau, dkappa)).min(1.0);
        if trace {
            eprintln!("          alpha_aff {alpha_aff:9.2e} sigma {sigma:9.2e} alpha {alpha:9.2e}");
        }
        if !alpha.is_finite() || alpha <= 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                // Progress has died. If the iterate already sits within a
                // small multiple of the requested tolerances, report it as
                // the solution rather than failing outright.
                let status = if relaxed_ok {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::NumericalFailure
                };
                return finish(&x, &y, &z, tau, status, iter);
            }
        } else {
            stalls = 0;
        }
        x += &dx * alpha;
        y += &dy * alpha;
        z += &dz * alpha;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if !(tau > 0.0) || !tau.is_finite() {
            return finish(&x, &y, &z, tau.max(1e-300), SolveStatus::NumericalFailure, iter);
        }
    }
    finish(&x, &y, &z, tau, SolveStatus::MaxIterations, tol.max_iter)
}
