//! Locally optimal recovery: Chebyshev centers (in `ℓ∞`) of the set of
//! quantity values consistent with observed data.
//!
//! Two model sets are supported. For a polytope `{f ∈ ℝⁿ : Af ≤ b}` the
//! center is the solution of a linear program over the data-consistent
//! polytope `{f : Ãf ≤ b̃}`; for the sup-norm unit ball of the space of
//! polynomials of degree `< n` on `[−1,1]` it is the solution of a
//! semidefinite program built from Toeplitz matrices of Chebyshev
//! functional values. In both cases the radius `r` is the local
//! worst-case error of the returned center `z`.

use crate::cheb::toeplitz;
use crate::conic::build::{Builder, GeoSolution, GeoStatus, LinExpr, Var};
use crate::conic::{SolveStatus, Tolerances};
use crate::error::{Error, Result};
use crate::measure::SignedMeasure;
use nalgebra::{DMatrix, DVector};

/// Bounded nonempty polytope model `{f ∈ ℝⁿ : Af ≤ b}`.
///
/// Construction verifies nonemptiness and boundedness (the latter by
/// maximizing `±f_j` for every coordinate); an unbounded or empty model
/// is rejected up front because the recovery programs are only meaningful
/// on compact model sets.
#[derive(Debug, Clone)]
pub struct PolytopeModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl PolytopeModel {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let (nn, n) = (a.nrows(), a.ncols());
        if nn == 0 || n == 0 || b.len() != nn {
            return Err(Error::invalid("polytope model: A must be N×n with b of length N"));
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("polytope model: entries must be finite"));
        }
        let model = PolytopeModel { a, b };
        model.check_nonempty()?;
        model.check_bounded()?;
        Ok(model)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn check_nonempty(&self) -> Result<()> {
        let t = min_violation_lp(&self.a, &self.b)?;
        let tol = 1e-7 * (1.0 + self.b.amax());
        if t > tol {
            return Err(Error::invalid("polytope model: the set {Af ≤ b} is empty"));
        }
        Ok(())
    }

    fn check_bounded(&self) -> Result<()> {
        let n = self.dim();
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut bld = Builder::new();
                let f = bld.vars(n);
                add_polytope_rows(&mut bld, &self.a, &self.b, &f);
                bld.maximize(LinExpr::of(f[j]).term(sign - 1.0, f[j]));
                let sol = bld.build()?.solve(&Tolerances::default())?;
                match sol.status {
                    GeoStatus::Optimal => {}
                    GeoStatus::Unbounded => {
                        return Err(Error::invalid(
                            "polytope model: the set {Af ≤ b} is unbounded",
                        ));
                    }
                    GeoStatus::Infeasible => {
                        return Err(Error::invalid("polytope model: the set {Af ≤ b} is empty"));
                    }
                    st => return Err(solver_failed(st, "polytope boundedness check")),
                }
            }
        }
        Ok(())
    }
}

/// Unit ball of the polynomials of degree `< n` under the sup norm on `[−1,1]`.
#[derive(Debug, Clone, Copy)]
pub struct PolynomialBallModel {
    n: usize,
}

impl PolynomialBallModel {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("polynomial ball model: dimension must be ≥ 1"));
        }
        Ok(PolynomialBallModel { n })
    }

    /// Dimension of the polynomial space (degree < n).
    pub fn dim(&self) -> usize {
        self.n
    }
}

/// The observation operator `f ↦ [ℓ_1(f); …; ℓ_m(f)]`, stored as the matrix
/// of functional coefficients: row `i` lists the action of `ℓ_i` on the
/// coordinates of the model space (standard basis of `ℝⁿ` for polytopes,
/// Chebyshev basis `T_0..T_{n−1}` for polynomial models).
#[derive(Debug, Clone)]
pub struct LinearObservations {
    rows: DMatrix<f64>,
}

impl LinearObservations {
    /// Functionals on `ℝⁿ` given directly by the rows of `L`.
    pub fn from_matrix(l: DMatrix<f64>) -> Result<Self> {
        if l.ncols() == 0 {
            return Err(Error::invalid("observations: L must have at least one column"));
        }
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observations: entries must be finite"));
        }
        Ok(LinearObservations { rows: l })
    }

    /// Functionals on polynomials of degree `< n`, integration against
    /// signed measures; rows are the precomputed values `ℓ_i(T_j)`.
    pub fn from_measures(measures: &[SignedMeasure], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("observations: polynomial dimension must be ≥ 1"));
        }
        let mut rows = DMatrix::zeros(measures.len(), n);
        for (i, nu) in measures.iter().enumerate() {
            let m = nu.moments(n)?;
            rows.row_mut(i).copy_from(&m.entries.transpose());
        }
        Ok(LinearObservations { rows })
    }

    /// m × n matrix of functional coefficients.
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Number of observation functionals m.
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

/// The quantity of interest `f ↦ [Q_1(f); …; Q_K(f)]`, stored like
/// [`LinearObservations`] as a K × n coefficient matrix.
#[derive(Debug, Clone)]
pub struct QuantityRows {
    rows: DMatrix<f64>,
}

impl QuantityRows {
    pub fn from_vectors(q: &[DVector<f64>]) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::invalid("quantity: need at least one functional"));
        }
        let n = q[0].len();
        if n == 0 || q.iter().any(|v| v.len() != n) {
            return Err(Error::invalid("quantity: rows must share a positive length"));
        }
        let mut rows = DMatrix::zeros(q.len(), n);
        for (k, v) in q.iter().enumerate() {
            rows.row_mut(k).copy_from(&v.transpose());
        }
        Ok(QuantityRows { rows })
    }

    pub fn from_measures(qs: &[SignedMeasure], n: usize) -> Result<Self> {
        if qs.is_empty() {
            return Err(Error::invalid("quantity: need at least one functional"));
        }
        if n == 0 {
            return Err(Error::invalid("quantity: polynomial dimension must be ≥ 1"));
        }
        let mut rows = DMatrix::zeros(qs.len(), n);
        for (k, nu) in qs.iter().enumerate() {
            let m = nu.moments(n)?;
            rows.row_mut(k).copy_from(&m.entries.transpose());
        }
        Ok(QuantityRows { rows })
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Number of quantity coordinates K.
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

/// Solver-side facts about a center computation.
#[derive(Debug, Clone, Copy)]
pub struct CenterDiagnostics {
    /// Scalar variables in the assembled program.
    pub variables: usize,
    /// Scalar equality constraints in the assembled program.
    pub equalities: usize,
    /// Scalar rows across all cone constraints (for the polytope LP these are
    /// exactly its inequality constraints).
    pub inequalities: usize,
    /// Interior-point iterations across all solves (feasibility phase, main
    /// program, and the perturbed re-solve).
    pub iterations: usize,
    /// `false` when a re-solve under a tiny generic objective perturbation
    /// moved the center by more than 1e−5 — a heuristic sign that the
    /// Chebyshev center is not unique.
    pub center_unique: bool,
}

/// A Chebyshev center `z` with its radius `r` — the locally optimal estimate
/// of the quantity of interest and its local worst-case error.
#[derive(Debug, Clone)]
pub struct CenterResult {
    pub z: DVector<f64>,
    pub r: f64,
    pub diagnostics: CenterDiagnostics,
}

/// Stack the model and data constraints of the consistent set
/// `{f : Af ≤ b, ‖Lf − y‖∞ ≤ η}` into one inequality system `Ãf ≤ b̃` with
/// `Ã = [A; L; −L]` and `b̃ = [b; y+η; −y+η]`.
pub fn augment_polytope(
    model: &PolytopeModel,
    observations: &LinearObservations,
    y: &DVector<f64>,
    eta: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::invalid("augment_polytope: noise level η must be ≥ 0"));
    }
    let n = model.dim();
    let m = observations.len();
    if observations.rows().ncols() != n {
        return Err(Error::invalid("augment_polytope: observation rows must have length n"));
    }
    if y.len() != m {
        return Err(Error::invalid("augment_polytope: data vector length must equal m"));
    }
    let nn = model.a.nrows();
    let mut at = DMatrix::zeros(nn + 2 * m, n);
    let mut bt = DVector::zeros(nn + 2 * m);
    at.rows_mut(0, nn).copy_from(&model.a);
    bt.rows_mut(0, nn).copy_from(&model.b);
    at.rows_mut(nn, m).copy_from(observations.rows());
    at.rows_mut(nn + m, m).copy_from(&(-observations.rows()));
    for i in 0..m {
        bt[nn + i] = y[i] + eta;
        bt[nn + m + i] = -y[i] + eta;
    }
    Ok((at, bt))
}

/// Chebyshev center of `Q(K_E(y))` for the polytope model: the locally
/// optimal estimate under `ℓ∞`-bounded noise, computed by one linear
/// program whose blocks dualize the per-coordinate max constraints.
pub fn center_polytope(
    model: &PolytopeModel,
    observations: &LinearObservations,
    quantity: &QuantityRows,
    y: &DVector<f64>,
    eta: f64,
) -> Result<CenterResult> {
    let n = model.dim();
    if quantity.rows().ncols() != n {
        return Err(Error::invalid("center_polytope: quantity rows must have length n"));
    }
    let (at, bt) = augment_polytope(model, observations, y, eta)?;

    // Feasibility phase: the data must be explainable by some model element.
    let viol = min_violation_lp(&at, &bt)?;
    if viol > 1e-7 * (1.0 + bt.amax()) {
        return Err(Error::infeasible(
            "center_polytope: no model element is consistent with the data",
        ));
    }

    let (z, r, iters, counts) = polytope_center_lp(&at, &bt, quantity.rows(), None)?;
    let perturb = perturbation_direction(quantity.len());
    let (zp, _, iters_p, _) = polytope_center_lp(&at, &bt, quantity.rows(), Some(&perturb))?;
    let center_unique = (&zp - &z).amax() <= 1e-5;
    let mut iters = iters + iters_p;

    // The joint program pins only the coordinates whose half-width attains r;
    // the rest may sit anywhere inside their slack interval. Canonicalize to
    // the per-coordinate midrange — itself an optimal center — by re-solving
    // each coordinate alone, where the optimum is unique.
    let mut z = z;
    let mut r = r;
    if quantity.len() > 1 {
        let mut r_joint: f64 = 0.0;
        for k in 0..quantity.len() {
            let qk = quantity.rows().rows(k, 1).into_owned();
            let (zk, rk, it_k, _) = polytope_center_lp(&at, &bt, &qk, None)?;
            z[k] = zk[0];
            r_joint = r_joint.max(rk);
            iters += it_k;
        }
        if (r_joint - r).abs() > 1e-6 * (1.0 + r.abs()) {
            return Err(Error::inconsistent(
                "center_polytope: joint and per-coordinate radii disagree",
            ));
        }
        r = r_joint;
    }
    Ok(CenterResult {
        z,
        r,
        diagnostics: CenterDiagnostics {
            variables: counts[0],
            equalities: counts[1],
            inequalities: counts[2],
            iterations: iters,
            center_unique,
        },
    })
}

/// Toeplitz data matrices for the polynomial-ball programs:
/// `C_k = Toep[Q_k(T_0); …; Q_k(T_{n−1})]` for each quantity coordinate and
/// `A_i = Toep[ℓ_i(T_0); …; ℓ_i(T_{n−1})]` for each observation functional.
pub fn build_polyball_data(
    n: usize,
    observations: &LinearObservations,
    quantity: &QuantityRows,
) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    if n == 0 {
        return Err(Error::invalid("build_polyball_data: dimension must be ≥ 1"));
    }
    if observations.rows().ncols() != n || quantity.rows().ncols() != n {
        return Err(Error::invalid("build_polyball_data: rows must have length n"));
    }
    let c_mats = (0..quantity.len())
        .map(|k| {
            let row: Vec<f64> = quantity.rows().row(k).iter().copied().collect();
            toeplitz(&row)
        })
        .collect::<Result<Vec<_>>>()?;
    let a_mats = (0..observations.len())
        .map(|i| {
            let row: Vec<f64> = observations.rows().row(i).iter().copied().collect();
            toeplitz(&row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((c_mats, a_mats))
}

/// Chebyshev center of `Q(K_E(y))` for the polynomial-ball model: the
/// locally optimal estimate under `ℓ∞`-bounded noise, computed by one
/// semidefinite program with two Toeplitz dominations per coordinate and
/// sign.
pub fn center_polyball(
    model: &PolynomialBallModel,
    observations: &LinearObservations,
    quantity: &QuantityRows,
    y: &DVector<f64>,
    eta: f64,
) -> Result<CenterResult> {
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::invalid("center_polyball: noise level η must be ≥ 0"));
    }
    let n = model.dim();
    let m = observations.len();
    if y.len() != m {
        return Err(Error::invalid("center_polyball: data vector length must equal m"));
    }
    let (c_mats, a_mats) = build_polyball_data(n, observations, quantity)?;

    // Feasibility phase on the semidefinite ball description.
    let mut phase_iters = 0;
    if m > 0 {
        let (viol, it) = polyball_min_violation(n, &a_mats, y, eta)?;
        phase_iters = it;
        if viol > 1e-7 * (1.0 + y.amax() + eta) {
            return Err(Error::infeasible(
                "center_polyball: no polynomial in the unit ball is consistent with the data",
            ));
        }
    }

    let (z, r, iters, counts) = polyball_center_sdp(&c_mats, &a_mats, y, eta, None)?;
    let perturb = perturbation_direction(quantity.len());
    let (zp, _, iters_p, _) = polyball_center_sdp(&c_mats, &a_mats, y, eta, Some(&perturb))?;
    let center_unique = (&zp - &z).amax() <= 1e-5;
    Ok(CenterResult {
        z,
        r,
        diagnostics: CenterDiagnostics {
            variables: counts[0],
            equalities: counts[1],
            inequalities: counts[2],
            iterations: phase_iters + iters + iters_p,
            center_unique,
        },
    })
}

/// Tiny deterministic generic direction for the uniqueness probe.
fn perturbation_direction(k: usize) -> DVector<f64> {
    DVector::from_fn(k, |i, _| (1.0 + i as f64).cos())
}

fn solver_failed(status: GeoStatus, what: &str) -> Error {
    let st = match status {
        GeoStatus::MaxIterations => SolveStatus::MaxIterations,
        _ => SolveStatus::NumericalFailure,
    };
    Error::SolverFailure { status: st, detail: what.to_string() }
}

fn add_polytope_rows(bld: &mut Builder, a: &DMatrix<f64>, b: &DVector<f64>, f: &[Var]) {
    for i in 0..a.nrows() {
        let mut e = LinExpr::constant(b[i]);
        for (j, fj) in f.iter().enumerate() {
            e = e.term(-a[(i, j)], *fj);
        }
        bld.nonneg(e);
    }
}

/// Smallest uniform relaxation `t` making `{Af ≤ b + t}` nonempty; the set
/// itself is nonempty iff the optimum is ≤ 0 (solver tolerance aside).
fn min_violation_lp(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<f64> {
    let n = a.ncols();
    let mut bld = Builder::new();
    let f = bld.vars(n);
    let t = bld.var();
    for i in 0..a.nrows() {
        let mut e = LinExpr::of(t).plus(b[i]);
        for (j, fj) in f.iter().enumerate() {
            e = e.term(-a[(i, j)], *fj);
        }
        bld.nonneg(e);
    }
    bld.minimize(LinExpr::of(t));
    let sol = bld.build()?.solve(&Tolerances::default())?;
    match sol.status {
        GeoStatus::Optimal => Ok(sol.value),
        GeoStatus::Unbounded => Ok(f64::NEG_INFINITY),
        st => Err(solver_failed(st, "polytope feasibility phase")),
    }
}

fn finish_center(
    sol: &GeoSolution,
    zv: &[Var],
    what: &str,
) -> Result<(DVector<f64>, f64, usize)> {
    match sol.status {
        GeoStatus::Optimal => {}
        GeoStatus::Unbounded => {
            return Err(Error::infeasible(
                "the consistent set is empty (the center program is unbounded below)",
            ));
        }
        st => return Err(solver_failed(st, what)),
    }
    let z = DVector::from_fn(zv.len(), |k, _| sol.value_of(zv[k]));
    let r = sol.value;
    if r < -1e-6 {
        return Err(Error::inconsistent(format!(
            "{what}: Chebyshev radius came out negative ({r:.3e})"
        )));
    }
    Ok((z, r.max(0.0), sol.iterations()))
}

/// Assemble and solve the polytope-center linear program
///
/// ```text
///   minimize r   over  z ∈ ℝ^K, r ∈ ℝ, x^{±,k} ∈ ℝ^{N+2m}
///   s.t.  Ãᵀ x^{±,k} = ±q_k,   x^{±,k} ≥ 0,   ⟨b̃, x^{±,k}⟩ ≤ r ± z_k
/// ```
///
/// optionally adding a tiny generic tilt to the objective for the
/// uniqueness probe. Returns `(z, r, iterations, [vars, eqs, ineqs])`.
fn polytope_center_lp(
    at: &DMatrix<f64>,
    bt: &DVector<f64>,
    q: &DMatrix<f64>,
    perturb: Option<&DVector<f64>>,
) -> Result<(DVector<f64>, f64, usize, [usize; 3])> {
    let n = at.ncols();
    let rows = at.nrows();
    let kk = q.nrows();
    let mut bld = Builder::new();
    let zv = bld.vars(kk);
    let rv = bld.var();
    for k in 0..kk {
        for sign in [1.0f64, -1.0] {
            let x = bld.vars(rows);
            for &xi in &x {
                bld.nonneg(LinExpr::of(xi));
            }
            for j in 0..n {
                let mut e = LinExpr::constant(-sign * q[(k, j)]);
                for (i, xi) in x.iter().enumerate() {
                    e = e.term(at[(i, j)], *xi);
                }
                bld.eq(e);
            }
            let mut row = LinExpr::of(rv).term(sign, zv[k]);
            for (i, xi) in x.iter().enumerate() {
                row = row.term(-bt[i], *xi);
            }
            bld.nonneg(row);
        }
    }
    let counts = [bld.n_vars(), bld.n_equalities(), bld.n_cone_rows()];
    let mut obj = LinExpr::of(rv);
    if let Some(xi) = perturb {
        for k in 0..kk {
            obj = obj.term(1e-7 * xi[k], zv[k]);
        }
    }
    bld.minimize(obj);
    let sol = bld.build()?.solve(&Tolerances::default())?;
    let (z, r, iters) = finish_center(&sol, &zv, "polytope center program")?;
    Ok((z, r, iters, counts))
}

/// Smallest uniform relaxation `t` of the data band constraints for which
/// some unit-ball polynomial is consistent, via the semidefinite ball
/// description (`P, M ⪰ 0`, `tr[D_j(P+M)] = δ_{0j}`, coefficient `j` of the
/// member is `tr[D_j(P−M)]`).
fn polyball_min_violation(
    n: usize,
    a_mats: &[DMatrix<f64>],
    y: &DVector<f64>,
    eta: f64,
) -> Result<(f64, usize)> {
    let mut bld = Builder::new();
    let p = bld.psd_var(n);
    let mm = bld.psd_var(n);
    let t = bld.var();
    for j in 0..n {
        let dj = crate::cheb::diag_pair(n, j);
        let mut e = p.trace_with(&dj);
        e.add_expr(1.0, &mm.trace_with(&dj));
        let delta = if j == 0 { 1.0 } else { 0.0 };
        bld.eq(e.plus(-delta));
    }
    for (i, ai) in a_mats.iter().enumerate() {
        let mut s = p.trace_with(ai);
        s.add_expr(-1.0, &mm.trace_with(ai));
        let mut upper = LinExpr::of(t).plus(y[i] + eta);
        upper.add_expr(-1.0, &s);
        bld.nonneg(upper);
        let mut lower = LinExpr::of(t).plus(eta - y[i]);
        lower.add_expr(1.0, &s);
        bld.nonneg(lower);
    }
    bld.minimize(LinExpr::of(t));
    let sol = bld.build()?.solve(&Tolerances::default())?;
    match sol.status {
        GeoStatus::Optimal => Ok((sol.value, sol.iterations())),
        st => Err(solver_failed(st, "polynomial-ball feasibility phase")),
    }
}

/// Assemble and solve the polynomial-ball center semidefinite program
///
/// ```text
///   minimize r   over  z ∈ ℝ^K, r ∈ ℝ, x^{±,k} ∈ ℝⁿ, u^{±,k}, v^{±,k} ∈ ℝ^m
///   s.t.  x₁^{±,k} + ⟨u^{±,k}, y+η⟩ − ⟨v^{±,k}, y−η⟩ ≤ r ± z_k,
///         u^{±,k} ≥ 0,  v^{±,k} ≥ 0,
///         Toep(x^{±,k}) ⪰ ±( ±C_k + Σ_i (v_i^{±,k} − u_i^{±,k}) A_i )
/// ```
///
/// with the same optional uniqueness tilt as the polytope path.
fn polyball_center_sdp(
    c_mats: &[DMatrix<f64>],
    a_mats: &[DMatrix<f64>],
    y: &DVector<f64>,
    eta: f64,
    perturb: Option<&DVector<f64>>,
) -> Result<(DVector<f64>, f64, usize, [usize; 3])> {
    let kk = c_mats.len();
    let n = c_mats[0].nrows();
    let m = a_mats.len();
    let mut bld = Builder::new();
    let zv = bld.vars(kk);
    let rv = bld.var();
    for (k, ck) in c_mats.iter().enumerate() {
        for s in [1.0f64, -1.0] {
            let x = bld.vars(n);
            let u = bld.vars(m);
            let v = bld.vars(m);
            for &ui in u.iter().chain(v.iter()) {
                bld.nonneg(LinExpr::of(ui));
            }
            let mut row = LinExpr::of(rv).term(s, zv[k]).term(-1.0, x[0]);
            for i in 0..m {
                row = row.term(-(y[i] + eta), u[i]).term(y[i] - eta, v[i]);
            }
            bld.nonneg(row);
            for outer in [1.0f64, -1.0] {
                let mut entries = Vec::new();
                for jcol in 0..n {
                    for irow in 0..=jcol {
                        let mut e = LinExpr::new()
                            .term(1.0, x[jcol - irow])
                            .plus(-outer * s * ck[(irow, jcol)]);
                        for (i, ai) in a_mats.iter().enumerate() {
                            let aij = ai[(irow, jcol)];
                            if aij != 0.0 {
                                e = e.term(-outer * aij, v[i]).term(outer * aij, u[i]);
                            }
                        }
                        entries.push(e);
                    }
                }
                bld.psd(n, entries);
            }
        }
    }
    let counts = [bld.n_vars(), bld.n_equalities(), bld.n_cone_rows()];
    let mut obj = LinExpr::of(rv);
    if let Some(xi) = perturb {
        for k in 0..kk {
            obj = obj.term(1e-7 * xi[k], zv[k]);
        }
    }
    bld.minimize(obj);
    let sol = bld.build()?.solve(&Tolerances::default())?;
    let (z, r, iters) = finish_center(&sol, &zv, "polynomial-ball center program")?;
    Ok((z, r, iters, counts))
}
