//! Globally optimal linear estimation of a scalar quantity of interest from
//! noisy integral observations, for functions within sup-norm distance `ε`
//! of a fixed finite-dimensional space `V ⊂ C[−1,1]`.
//!
//! Writing the quantity as integration against a signed measure `ρ` and the
//! observations against measures `λ_1..λ_m`, the best linear weights minimize
//! the total-variation norm of the residual functional `ρ − Σ a_i λ_i` plus a
//! scaled conjugate norm of `a`, subject to the weights reproducing the
//! quantity on `V`. Replacing the residual's nonnegative parts by truncated
//! Chebyshev-moment vectors whose Toeplitz matrices must be positive
//! semidefinite turns this into a finite semidefinite program per truncation
//! level `N`: its value `α^(N)` is a lower bound on the untruncated optimum,
//! evaluating the exact objective at the returned weights gives the upper
//! bound `α^(N) + δ^(N)`, and the gap `δ^(N)` clusters to zero as `N` grows.

use crate::cheb::ChebPoly;
use crate::conic::build::{Builder, GeoStatus, LinExpr};
use crate::conic::{SolveStatus, Tolerances};
use crate::error::{Error, Result};
use crate::measure::SignedMeasure;
use crate::oracles::{
    noise_corner_candidates, sample_model, worst_case_error_oracle, SampleBudget, SetDescriptor,
};
use crate::quad;
use nalgebra::{DMatrix, DVector};

/// Default cap on the moment truncation level used by [`solve_weights`].
pub const DEFAULT_LEVEL_CAP: usize = 512;

/// Model set: all functions within sup-norm distance `epsilon` of the span of
/// a polynomial basis (possibly empty, for the zero space).
///
/// The basis must be numerically independent; construction computes the
/// `L²(−1,1)` Gram matrix and rejects condition numbers above `1e12`.
#[derive(Debug, Clone)]
pub struct ApproximabilityModel {
    basis: Vec<ChebPoly>,
    epsilon: f64,
    gram_condition: f64,
}

impl ApproximabilityModel {
    pub fn new(basis: Vec<ChebPoly>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::invalid("approximability model: epsilon must be positive"));
        }
        if basis.iter().any(|v| v.coeffs.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid("approximability model: basis coefficients must be finite"));
        }
        let gram_condition = gram_condition(&basis)?;
        Ok(ApproximabilityModel { basis, epsilon, gram_condition })
    }

    /// Dimension n of the approximating space.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ChebPoly] {
        &self.basis
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Condition number of the basis Gram matrix (1 for the empty basis).
    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }
}

fn gram_condition(basis: &[ChebPoly]) -> Result<f64> {
    let n = basis.len();
    if n == 0 {
        return Ok(1.0);
    }
    let maxdeg = basis.iter().map(|v| v.coeffs.len().saturating_sub(1)).max().unwrap_or(0);
    let nodes = maxdeg + 1;
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let e = quad::integrate(nodes, |x| basis[j].eval(x) * basis[k].eval(x));
            g[(j, k)] = e;
            g[(k, j)] = e;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(g);
    let lmax = eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l));
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &l| m.min(l));
    if !(lmin > 0.0) || !lmax.is_finite() {
        return Err(Error::invalid(
            "approximability model: basis is numerically dependent (singular Gram matrix)",
        ));
    }
    let cond = lmax / lmin;
    if cond > 1e12 {
        return Err(Error::invalid(format!(
            "approximability model: basis is numerically dependent (Gram condition {cond:.3e})"
        )));
    }
    Ok(cond)
}

/// Noise set `{e ∈ ℝᵐ : ‖e‖_p ≤ eta}` with `p ∈ {1, 2, ∞}`.
#[derive(Debug, Clone, Copy)]
pub struct UncertaintySet {
    p: f64,
    eta: f64,
}

impl UncertaintySet {
    pub fn new(p: f64, eta: f64) -> Result<Self> {
        let supported = p == 1.0 || p == 2.0 || (p.is_infinite() && p > 0.0);
        if !supported {
            return Err(Error::invalid(
                "uncertainty set: only p ∈ {1, 2, ∞} has an exactly conic-representable conjugate norm",
            ));
        }
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::invalid("uncertainty set: eta must be finite and ≥ 0"));
        }
        Ok(UncertaintySet { p, eta })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// The conjugate exponent p' = p/(p−1).
    pub fn conjugate(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else if self.p == 2.0 {
            2.0
        } else {
            1.0
        }
    }
}

/// A fully assembled estimation task: quantity measure, observation measures,
/// model set, and noise set, together with the reproduction constraint data
/// `M a = b` (`M_{j,i} = ℓ_i(v_j)`, `b_j = Q(v_j)`).
#[derive(Debug, Clone)]
pub struct EstimationProblem {
    quantity: SignedMeasure,
    observations: Vec<SignedMeasure>,
    model: ApproximabilityModel,
    noise: UncertaintySet,
    m_mat: DMatrix<f64>,
    b_vec: DVector<f64>,
}

impl EstimationProblem {
    pub fn new(
        quantity: SignedMeasure,
        observations: Vec<SignedMeasure>,
        model: ApproximabilityModel,
        noise: UncertaintySet,
    ) -> Result<Self> {
        let m = observations.len();
        let n = model.dim();
        if m == 0 {
            return Err(Error::invalid("estimation problem: need at least one observation"));
        }
        if n > m {
            return Err(Error::invalid(format!(
                "estimation problem: the approximating space must not out-dimension the observations (n = {n} > m = {m})"
            )));
        }
        let (m_mat, b_vec) = constraint_system(&model, &quantity, &observations)?;
        if n > 0 {
            let sv = m_mat.clone().svd(false, false).singular_values;
            let smax = sv.amax();
            let smin = sv.min();
            if !(smin > 1e-10 * smax.max(1e-300)) {
                let listed: Vec<String> = sv.iter().map(|s| format!("{s:.6e}")).collect();
                return Err(Error::invalid(format!(
                    "estimation problem: reproduction constraints are rank-deficient; singular values [{}]",
                    listed.join(", ")
                )));
            }
        }
        Ok(EstimationProblem { quantity, observations, model, noise, m_mat, b_vec })
    }

    pub fn quantity(&self) -> &SignedMeasure {
        &self.quantity
    }

    pub fn observations(&self) -> &[SignedMeasure] {
        &self.observations
    }

    pub fn model(&self) -> &ApproximabilityModel {
        &self.model
    }

    pub fn noise(&self) -> &UncertaintySet {
        &self.noise
    }

    /// Reproduction constraint matrix `M ∈ ℝ^{n×m}`.
    pub fn m_matrix(&self) -> &DMatrix<f64> {
        &self.m_mat
    }

    /// Reproduction right-hand side `b ∈ ℝⁿ`.
    pub fn b_vector(&self) -> &DVector<f64> {
        &self.b_vec
    }

    /// Number of observation functionals m.
    pub fn m(&self) -> usize {
        self.observations.len()
    }

    /// Dimension n of the approximating space.
    pub fn n(&self) -> usize {
        self.model.dim()
    }

    /// The noise-to-model ratio η/ε weighting the conjugate norm.
    pub fn noise_ratio(&self) -> f64 {
        self.noise.eta / self.model.epsilon
    }
}

/// Reproduction constraint data: `M_{j,i} = ℓ_i(v_j)` and `b_j = Q(v_j)`.
pub fn constraint_system(
    model: &ApproximabilityModel,
    quantity: &SignedMeasure,
    observations: &[SignedMeasure],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = model.dim();
    let m = observations.len();
    let mut m_mat = DMatrix::zeros(n, m);
    let mut b_vec = DVector::zeros(n);
    for (j, v) in model.basis().iter().enumerate() {
        for (i, lam) in observations.iter().enumerate() {
            m_mat[(j, i)] = lam.apply(|x| v.eval(x));
        }
        b_vec[j] = quantity.apply(|x| v.eval(x));
    }
    if m_mat.iter().any(|v| !v.is_finite()) || b_vec.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("constraint system: non-finite functional values"));
    }
    Ok((m_mat, b_vec))
}

/// Weights returned by the truncated program, with their optimality
/// certificate: `alpha ≤ optimum ≤ alpha + delta = certified_value`.
#[derive(Debug, Clone)]
pub struct WeightSolution {
    /// Estimator weights.
    pub a: DVector<f64>,
    /// Truncation level the weights were computed at.
    pub level: usize,
    /// Optimal value of the truncated program (lower bound on the optimum).
    pub alpha: f64,
    /// A-posteriori gap (upper bound minus lower bound), ≥ 0 after clamping.
    pub delta: f64,
    /// `alpha + delta`, the certified upper bound on the optimum.
    pub certified_value: f64,
    /// Whether the gap met the requested tolerance before the level cap.
    pub certified: bool,
}

/// Solve the truncated moment program at level `level`, returning the weights
/// and the program's optimal value `α^(level)`.
///
/// The program minimizes `z⁺₁ + z⁻₁ + (η/ε)·‖a‖_{p'}` over weights `a` with
/// `Ma = b` and moment vectors `z⁺, z⁻ ∈ ℝ^level` with PSD Toeplitz matrices
/// and `z⁺ − z⁻` equal to the truncated Chebyshev moments of the residual
/// `ρ − Σ a_i λ_i` (affine in `a` via precomputed moments). Moment accuracy
/// inherits the quadrature resolution of the measures' densities, so supply
/// node counts comfortably above the truncation level.
pub fn solve_truncated(problem: &EstimationProblem, level: usize) -> Result<(DVector<f64>, f64)> {
    if level == 0 {
        return Err(Error::invalid("solve_truncated: truncation level must be ≥ 1"));
    }
    let m = problem.m();
    let rho_mom = problem.quantity().moments(level)?.entries;
    let lam_mom: Vec<DVector<f64>> = problem
        .observations()
        .iter()
        .map(|l| l.moments(level).map(|mv| mv.entries))
        .collect::<Result<_>>()?;
    let ratio = problem.noise_ratio();

    let mut bld = Builder::new();
    let a = bld.vars(m);
    let zp = bld.vars(level);
    for j in 0..problem.n() {
        let mut e = LinExpr::constant(-problem.b_vector()[j]);
        for i in 0..m {
            e = e.term(problem.m_matrix()[(j, i)], a[i]);
        }
        bld.eq(e);
    }
    // z⁻ is eliminated: z⁻_d = z⁺_d − ρ_d + Σ_i λ_{i,d} a_i.
    let zm: Vec<LinExpr> = (0..level)
        .map(|d| {
            let mut e = LinExpr::of(zp[d]).plus(-rho_mom[d]);
            for i in 0..m {
                let c = lam_mom[i][d];
                if c != 0.0 {
                    e = e.term(c, a[i]);
                }
            }
            e
        })
        .collect();
    let mut up = Vec::with_capacity(level * (level + 1) / 2);
    let mut um = Vec::with_capacity(level * (level + 1) / 2);
    for c in 0..level {
        for r in 0..=c {
            up.push(LinExpr::of(zp[c - r]));
            um.push(zm[c - r].clone());
        }
    }
    bld.psd(level, up);
    bld.psd(level, um);

    // Objective z⁺₁ + z⁻₁ + (η/ε)‖a‖_{p'} with z⁻₁ expanded.
    let mut obj = LinExpr::new().term(2.0, zp[0]).plus(-rho_mom[0]);
    for i in 0..m {
        let c = lam_mom[i][0];
        if c != 0.0 {
            obj = obj.term(c, a[i]);
        }
    }
    if ratio > 0.0 {
        let pc = problem.noise().conjugate();
        if pc == 1.0 {
            let t = bld.vars(m);
            for i in 0..m {
                bld.nonneg(LinExpr::of(t[i]).term(-1.0, a[i]));
                bld.nonneg(LinExpr::of(t[i]).term(1.0, a[i]));
                obj = obj.term(ratio, t[i]);
            }
        } else if pc == 2.0 {
            let s = bld.var();
            let mut cone = vec![LinExpr::of(s)];
            cone.extend(a.iter().map(|&ai| LinExpr::of(ai)));
            bld.soc(cone);
            obj = obj.term(ratio, s);
        } else {
            let s = bld.var();
            for i in 0..m {
                bld.nonneg(LinExpr::of(s).term(-1.0, a[i]));
                bld.nonneg(LinExpr::of(s).term(1.0, a[i]));
            }
            obj = obj.term(ratio, s);
        }
    }
    bld.minimize(obj);

    let sol = bld.build()?.solve(&Tolerances::default())?;
    if sol.status != GeoStatus::Optimal {
        return Err(solver_failed(sol.status, "truncated moment program"));
    }
    let weights = DVector::from_iterator(m, a.iter().map(|&v| sol.value_of(v)));
    let alpha = sol.value;
    if alpha < -1e-6 {
        return Err(Error::inconsistent(format!(
            "truncated moment program value strongly negative ({alpha:.3e})"
        )));
    }
    Ok((weights, alpha.max(0.0)))
}

/// The exact objective at weights `a`: total-variation norm of the residual
/// functional plus `(η/ε)·‖a‖_{p'}`. This is the worst-case estimation error
/// of the linear map `y ↦ ⟨a, y⟩` over the model and noise sets, divided by
/// `ε`; the residual's quadrature budget is added so the value stays an upper
/// bound.
pub fn dual_objective(problem: &EstimationProblem, a: &DVector<f64>) -> Result<f64> {
    if a.len() != problem.m() {
        return Err(Error::invalid("dual_objective: weight length mismatch"));
    }
    let residual = residual_measure(problem, a)?;
    let tv = residual.tv_norm();
    Ok(tv.value + tv.budget + problem.noise_ratio() * conjugate_norm(a, problem.noise().conjugate()))
}

/// A-posteriori optimality gap `δ = dual_objective(a) − alpha` for weights
/// produced at some truncation level. Small negative values (quadrature and
/// solver noise) are clamped to zero; anything below `−1e−6` indicates a
/// defect and errors out.
pub fn posterior_gap(problem: &EstimationProblem, a: &DVector<f64>, alpha: f64) -> Result<f64> {
    if a.len() != problem.m() {
        return Err(Error::invalid("posterior_gap: weight length mismatch"));
    }
    let feas = (problem.m_matrix() * a - problem.b_vector()).amax();
    if feas > 1e-7 * (1.0 + problem.b_vector().amax()) {
        return Err(Error::invalid(format!(
            "posterior_gap: weights violate the reproduction constraints (residual {feas:.3e})"
        )));
    }
    let delta = dual_objective(problem, a)? - alpha;
    if delta < -1e-6 {
        return Err(Error::inconsistent(format!(
            "a-posteriori gap strongly negative ({delta:.3e}): solver or quadrature defect"
        )));
    }
    Ok(delta.max(0.0))
}

/// Solve with an increasing truncation schedule: start at `max(n+1, 8)` and
/// double the level until the a-posteriori gap is at most `gap_tol` or the
/// next level would exceed `level_cap`. The lower bounds `α^(N)` must be
/// nondecreasing along the schedule (up to `1e−9`); a decrease is reported as
/// an internal inconsistency. A level where the interior-point method fails
/// numerically is skipped — the next level is attempted — and the failure
/// only propagates if no level solves at all. If the cap is hit, the iterate
/// with the best certified value is returned with `certified = false`.
pub fn solve_weights(
    problem: &EstimationProblem,
    gap_tol: f64,
    level_cap: usize,
) -> Result<WeightSolution> {
    if !(gap_tol > 0.0) {
        return Err(Error::invalid("solve_weights: gap tolerance must be positive"));
    }
    let start = (problem.n() + 1).max(8);
    if level_cap < start {
        return Err(Error::invalid(format!(
            "solve_weights: level cap {level_cap} is below the starting level {start}"
        )));
    }
    let mut best: Option<WeightSolution> = None;
    let mut prev_alpha = f64::NEG_INFINITY;
    let mut level = start;
    loop {
        let (a, alpha) = match solve_truncated(problem, level) {
            Ok(pair) => pair,
            Err(err @ Error::SolverFailure { .. }) => {
                // An occasional relaxation level is numerically marginal; the
                // schedule can continue past it. Only a schedule with no
                // solvable level at all is a hard failure.
                if level * 2 > level_cap {
                    return best.ok_or(err);
                }
                level *= 2;
                continue;
            }
            Err(err) => return Err(err),
        };
        if alpha + 1e-9 < prev_alpha {
            return Err(Error::inconsistent(format!(
                "lower bounds decreased along the truncation schedule ({prev_alpha:.12e} → {alpha:.12e} at level {level})"
            )));
        }
        prev_alpha = prev_alpha.max(alpha);
        let delta = posterior_gap(problem, &a, alpha)?;
        let cand = WeightSolution {
            a,
            level,
            alpha,
            delta,
            certified_value: alpha + delta,
            certified: delta <= gap_tol,
        };
        if cand.certified {
            return Ok(cand);
        }
        if best.as_ref().is_none_or(|b| cand.certified_value < b.certified_value) {
            best = Some(cand);
        }
        if level * 2 > level_cap {
            return Ok(best.expect("at least one level was solved"));
        }
        level *= 2;
    }
}

/// Apply the estimator: `⟨a, y⟩`.
pub fn estimate(weights: &WeightSolution, y: &DVector<f64>) -> Result<f64> {
    if y.len() != weights.a.len() {
        return Err(Error::invalid("estimate: data length mismatch"));
    }
    Ok(weights.a.dot(y))
}

/// Two-sided bracket `(α^(N), α^(N) + δ^(N))` around the intrinsic-error
/// constant of the estimation task: the minimal worst-case error of any
/// estimator equals that constant times `ε` (up to the bracket width).
pub fn compatibility_indicator(
    problem: &EstimationProblem,
    gap_tol: f64,
    level_cap: usize,
) -> Result<(f64, f64)> {
    let w = solve_weights(problem, gap_tol, level_cap)?;
    Ok((w.alpha, w.certified_value))
}

/// Sampled lower bound on the worst-case estimation error of the weight
/// vector `a` over members `f = ε·g` with `‖g‖∞ ≤ 1` (certified model-set
/// members with no subspace component, represented by Chebyshev coefficients
/// of degree < `member_deg`) and noises `‖e‖_p ≤ η`:
/// `max |Q(f) − ⟨a, L(f) + e⟩|`. Because the subspace component of the error
/// cancels only for reproducing weights, this is the part of the worst case
/// that `ε·dual_objective(a)` bounds for **every** `a`, so
/// `sampled_worst_error / ε ≤ dual_objective(a)` up to quadrature budgets.
/// The sample sets are enriched with the deterministic extremes `±ε T_d` and
/// the ℓp-ball corner candidates, so on purely atomic configurations the
/// supremum is attained exactly. Deterministic in the budget's seed.
pub fn sampled_worst_error(
    problem: &EstimationProblem,
    a: &DVector<f64>,
    member_deg: usize,
    budget: &SampleBudget,
) -> Result<f64> {
    if a.len() != problem.m() {
        return Err(Error::invalid("sampled_worst_error: weight length mismatch"));
    }
    if member_deg == 0 {
        return Err(Error::invalid("sampled_worst_error: member degree must be ≥ 1"));
    }
    let m = problem.m();
    let eps = problem.model().epsilon();
    let noise = problem.noise();

    let mut members = sample_model(&SetDescriptor::PolynomialBall { n: member_deg }, budget)?;
    for d in 0..member_deg {
        for s in [1.0, -1.0] {
            let mut v = DVector::zeros(member_deg);
            v[d] = s;
            members.push(v);
        }
    }
    for g in &mut members {
        *g *= eps;
    }
    let mut noises = noise_corner_candidates(m, noise.p(), noise.eta());
    if noise.eta() > 0.0 {
        let noise_budget =
            SampleBudget::new(budget.count.clamp(8, 64), budget.seed ^ 0x9E37_79B9_7F4A_7C15);
        noises.extend(sample_model(
            &SetDescriptor::NoiseLp { m, p: noise.p(), eta: noise.eta() },
            &noise_budget,
        )?);
    }

    let rho_mom = problem.quantity().moments(member_deg)?.entries;
    let lam_mom: Vec<DVector<f64>> = problem
        .observations()
        .iter()
        .map(|l| l.moments(member_deg).map(|mv| mv.entries))
        .collect::<Result<_>>()?;
    let quantity = move |s: &DVector<f64>| DVector::from_element(1, rho_mom.dot(s));
    let observe =
        move |s: &DVector<f64>| DVector::from_fn(m, |i, _| lam_mom[i].dot(s));
    let aw = a.clone();
    let recover = move |y: &DVector<f64>| DVector::from_element(1, aw.dot(y));
    let pairs = members.len().saturating_mul(noises.len());
    Ok(worst_case_error_oracle(&recover, &quantity, &observe, &members, &noises, pairs))
}

/// The residual functional `ρ − Σ a_i λ_i` as a signed measure.
fn residual_measure(problem: &EstimationProblem, a: &DVector<f64>) -> Result<SignedMeasure> {
    let mut terms: Vec<(f64, &SignedMeasure)> = vec![(1.0, problem.quantity())];
    for (i, lam) in problem.observations().iter().enumerate() {
        terms.push((-a[i], lam));
    }
    SignedMeasure::linear_combination(&terms)
}

/// `‖a‖_{p'}` for p' ∈ {1, 2, ∞}.
fn conjugate_norm(a: &DVector<f64>, p_conj: f64) -> f64 {
    if p_conj == 1.0 {
        a.iter().map(|x| x.abs()).sum()
    } else if p_conj == 2.0 {
        a.norm()
    } else {
        if a.is_empty() {
            return 0.0;
        }
        a.amax()
    }
}

fn solver_failed(status: GeoStatus, what: &str) -> Error {
    let st = match status {
        GeoStatus::MaxIterations => SolveStatus::MaxIterations,
        _ => SolveStatus::NumericalFailure,
    };
    Error::SolverFailure { status: st, detail: what.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{sample_lp_ball, SampleBudget};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cheb_unit(j: usize) -> ChebPoly {
        let mut c = vec![0.0; j + 1];
        c[j] = 1.0;
        ChebPoly::new(c)
    }

    fn point_eval_problem(eta: f64, p: f64) -> EstimationProblem {
        let xs = [-0.5, 0.1, 0.7];
        let obs: Vec<SignedMeasure> =
            xs.iter().map(|&x| SignedMeasure::dirac(x, 1.0).unwrap()).collect();
        let quantity = SignedMeasure::dirac(0.1, 1.0).unwrap();
        let model = ApproximabilityModel::new(vec![cheb_unit(0)], 1.0).unwrap();
        let noise = UncertaintySet::new(p, eta).unwrap();
        EstimationProblem::new(quantity, obs, model, noise).unwrap()
    }

    fn sine_observations(m_obs: usize) -> Vec<SignedMeasure> {
        let pi = std::f64::consts::PI;
        (1..=m_obs)
            .map(|i| {
                let w = i as f64 * pi;
                SignedMeasure::from_density(move |x| (w * x).sin(), 192, None).unwrap()
            })
            .collect()
    }

    /// The reference Fourier configuration: odd polynomials of degree < 4,
    /// four sine-density observations, a quantity density that is a span
    /// combination plus a small cubic remainder, ℓ∞ noise.
    fn guiding_problem(eta: f64) -> EstimationProblem {
        let pi = std::f64::consts::PI;
        let basis = vec![cheb_unit(1), cheb_unit(3)];
        let quantity = SignedMeasure::from_density(
            move |x| 0.7 * (pi * x).sin() - 0.3 * (2.0 * pi * x).sin() + 0.002 * x * x * x,
            192,
            None,
        )
        .unwrap();
        let model = ApproximabilityModel::new(basis, 0.1).unwrap();
        let noise = UncertaintySet::new(f64::INFINITY, eta).unwrap();
        EstimationProblem::new(quantity, sine_observations(4), model, noise).unwrap()
    }

    #[test]
    fn model_reports_gram_condition_and_rejects_dependence() {
        let m = ApproximabilityModel::new(vec![cheb_unit(0), cheb_unit(1)], 0.5).unwrap();
        assert!(m.gram_condition() >= 1.0 && m.gram_condition() < 10.0);
        assert!(ApproximabilityModel::new(vec![cheb_unit(1), cheb_unit(1)], 0.5).is_err());
        assert!(ApproximabilityModel::new(vec![cheb_unit(0)], 0.0).is_err());
        // Empty basis = zero space, condition 1.
        let z = ApproximabilityModel::new(Vec::new(), 1.0).unwrap();
        assert_eq!(z.dim(), 0);
        assert_abs_diff_eq!(z.gram_condition(), 1.0);
    }

    #[test]
    fn uncertainty_set_conjugates_and_rejections() {
        let pc = UncertaintySet::new(1.0, 0.1).unwrap().conjugate();
        assert!(pc.is_infinite() && pc > 0.0);
        assert_abs_diff_eq!(UncertaintySet::new(2.0, 0.1).unwrap().conjugate(), 2.0);
        assert_abs_diff_eq!(UncertaintySet::new(f64::INFINITY, 0.1).unwrap().conjugate(), 1.0);
        assert!(UncertaintySet::new(1.5, 0.1).is_err());
        assert!(UncertaintySet::new(2.0, -0.1).is_err());
    }

    #[test]
    fn constraint_matrix_for_point_evaluations() {
        let problem = point_eval_problem(0.0, f64::INFINITY);
        let m = problem.m_matrix();
        assert_eq!((m.nrows(), m.ncols()), (1, 3));
        for i in 0..3 {
            assert_abs_diff_eq!(m[(0, i)], 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(problem.b_vector()[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn odd_basis_against_even_densities_vanishes() {
        let pi = std::f64::consts::PI;
        let model =
            ApproximabilityModel::new(vec![cheb_unit(1), cheb_unit(3)], 1.0).unwrap();
        let even = SignedMeasure::from_density(move |x| (pi * x).cos(), 160, None).unwrap();
        let q = SignedMeasure::dirac(0.0, 1.0).unwrap();
        let (m, _) = constraint_system(&model, &q, std::slice::from_ref(&even)).unwrap();
        assert!(m.amax() <= 1e-12, "odd basis × even density must integrate to zero");
    }

    #[test]
    fn constraint_entries_match_refined_quadrature() {
        let pi = std::f64::consts::PI;
        let problem = guiding_problem(0.005);
        for (j, v) in problem.model().basis().iter().enumerate() {
            for i in 0..4 {
                let w = (i + 1) as f64 * pi;
                let refined = quad::integrate(400, |x| v.eval(x) * (w * x).sin());
                assert_abs_diff_eq!(problem.m_matrix()[(j, i)], refined, epsilon = 1e-10);
            }
            let refined_b = quad::integrate(400, |x| {
                v.eval(x) * (0.7 * (pi * x).sin() - 0.3 * (2.0 * pi * x).sin() + 0.002 * x * x * x)
            });
            assert_abs_diff_eq!(problem.b_vector()[j], refined_b, epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_deficient_constraints_are_rejected_with_singular_values() {
        let d = SignedMeasure::dirac(0.3, 1.0).unwrap();
        let model = ApproximabilityModel::new(vec![cheb_unit(0), cheb_unit(1)], 1.0).unwrap();
        let noise = UncertaintySet::new(f64::INFINITY, 0.1).unwrap();
        let err = EstimationProblem::new(d.clone(), vec![d.clone(), d], model, noise)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("singular values"), "message was: {msg}");
    }

    #[test]
    fn point_evaluation_weights_are_the_matching_unit_vector() {
        // Quantity = evaluation at an observation point, constants in the
        // space, η ≤ ε: picking out that observation exactly is optimal.
        let problem = point_eval_problem(0.4, f64::INFINITY);
        let (a, alpha) = solve_truncated(&problem, 8).unwrap();
        assert_abs_diff_eq!(a[1], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(a[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(a[2], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(alpha, 0.4, epsilon = 1e-6);
        let delta = posterior_gap(&problem, &a, alpha).unwrap();
        assert!(delta <= 1e-6, "gap should be tiny, got {delta}");

        let w = solve_weights(&problem, 1e-6, DEFAULT_LEVEL_CAP).unwrap();
        assert!(w.certified);
        assert_eq!(w.level, 8);
        assert_abs_diff_eq!(w.certified_value, 0.4, epsilon = 1e-6);
        // Same conclusion for the other conjugate norms.
        for p in [1.0, 2.0] {
            let pr = point_eval_problem(0.4, p);
            let (ap, al) = solve_truncated(&pr, 8).unwrap();
            assert_abs_diff_eq!(ap[1], 1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(al, 0.4, epsilon = 1e-6);
        }
    }

    #[test]
    fn zero_space_exact_observation_recovers_unit_weight() {
        let d = SignedMeasure::dirac(0.3, 1.0).unwrap();
        let model = ApproximabilityModel::new(Vec::new(), 1.0).unwrap();
        let noise = UncertaintySet::new(f64::INFINITY, 0.0).unwrap();
        let problem = EstimationProblem::new(d.clone(), vec![d], model, noise).unwrap();
        let (a, alpha) = solve_truncated(&problem, 4).unwrap();
        assert_abs_diff_eq!(a[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(alpha, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(posterior_gap(&problem, &a, alpha).unwrap(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_space_noisy_observation_keeps_unit_weight() {
        // Objective |1−a|·tv(Q) + (η/ε)|a| with tv(Q) = 1 > η/ε = 0.25:
        // piecewise linear with minimum at a = 1.
        let d = SignedMeasure::dirac(0.3, 1.0).unwrap();
        let model = ApproximabilityModel::new(Vec::new(), 1.0).unwrap();
        let noise = UncertaintySet::new(f64::INFINITY, 0.25).unwrap();
        let problem = EstimationProblem::new(d.clone(), vec![d], model, noise).unwrap();
        let (a, alpha) = solve_truncated(&problem, 8).unwrap();
        assert_abs_diff_eq!(a[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(alpha, 0.25, epsilon = 1e-6);
        let (lo, hi) = compatibility_indicator(&problem, 1e-6, 64).unwrap();
        assert_abs_diff_eq!(lo, 0.25, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.25, epsilon = 1e-5);
    }

    #[test]
    fn lower_bounds_sandwich_along_levels() {
        let problem = guiding_problem(0.005);
        let levels = [8usize, 16, 32];
        let mut sols = Vec::new();
        for &nl in &levels {
            let (a, alpha) = solve_truncated(&problem, nl).unwrap();
            let delta = posterior_gap(&problem, &a, alpha).unwrap();
            sols.push((alpha, delta));
        }
        for w in sols.windows(2) {
            assert!(w[1].0 + 1e-9 >= w[0].0, "alpha must be nondecreasing: {sols:?}");
            assert!(w[1].1 <= w[0].1, "gap should shrink with the level here: {sols:?}");
        }
        let last = sols.last().unwrap();
        for s in &sols {
            assert!(
                s.0 + s.1 + 1e-9 >= last.0,
                "upper bounds must dominate later lower bounds: {sols:?}"
            );
        }
        assert!(last.1 < 1e-4, "gap at level 32 should be small, got {}", last.1);
    }

    #[test]
    fn weights_satisfy_constraints_and_norm_recomputation() {
        let problem = guiding_problem(0.02);
        let w = solve_weights(&problem, 1e-4, 128).unwrap();
        assert!((problem.m_matrix() * &w.a - problem.b_vector()).amax() <= 1e-8);
        // Independent conjugate-norm recomputation (p' = 1 here).
        let manual: f64 = w.a.iter().map(|x| x.abs()).sum();
        assert_abs_diff_eq!(conjugate_norm(&w.a, 1.0), manual, epsilon = 1e-12);
        assert!(w.delta >= 0.0 && w.certified_value >= w.alpha);
    }

    #[test]
    fn dual_objective_dominates_sampled_worst_cases() {
        // For any weights a (feasible or not), tv(ρ − Σ a_i λ_i) + (η/ε)‖a‖_{p'}
        // bounds |Q(f) − Σ a_i(ℓ_i(f) + e_i)| over ‖f‖∞ ≤ 1, ‖e‖_p ≤ η/ε.
        let problem = point_eval_problem(0.3, f64::INFINITY);
        let ratio = problem.noise_ratio();
        let qmom = problem.quantity().moments(6).unwrap().entries;
        let omom: Vec<DVector<f64>> = problem
            .observations()
            .iter()
            .map(|l| l.moments(6).unwrap().entries)
            .collect();
        let members = crate::oracles::sample_cheb_ball(6, 1.0, &SampleBudget::new(400, 7));
        let noises = sample_lp_ball(3, f64::INFINITY, ratio, &SampleBudget::new(50, 8));
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..3 {
            let a = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let bound = dual_objective(&problem, &a).unwrap();
            let mut worst = 0.0f64;
            for f in &members {
                let qf = qmom.dot(f);
                let lf: Vec<f64> = omom.iter().map(|mo| mo.dot(f)).collect();
                for e in &noises {
                    let est: f64 = (0..3).map(|i| a[i] * (lf[i] + e[i])).sum();
                    worst = worst.max((qf - est).abs());
                }
            }
            assert!(
                bound + 1e-9 >= worst,
                "dual objective {bound} must dominate sampled worst case {worst}"
            );
        }
    }

    #[test]
    fn dual_objective_trivial_values() {
        let problem = point_eval_problem(0.4, f64::INFINITY);
        // a = 0 → tv of the quantity measure (an atom of weight 1).
        let z = DVector::zeros(3);
        assert_abs_diff_eq!(dual_objective(&problem, &z).unwrap(), 1.0, epsilon = 1e-12);
        // a = e_k → η/ε exactly (all measures atomic, residual cancels).
        let ek = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(dual_objective(&problem, &ek).unwrap(), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn sampled_worst_error_is_dominated_by_dual_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for (pi, problem) in [
            point_eval_problem(0.3, 1.0),
            point_eval_problem(0.2, 2.0),
            guiding_problem(0.01),
        ]
        .iter()
        .enumerate()
        {
            for t in 0..4 {
                let a = DVector::from_fn(problem.m(), |_, _| rng.gen_range(-1.5..1.5));
                let bound = dual_objective(problem, &a).unwrap();
                let sampled =
                    sampled_worst_error(problem, &a, 7, &SampleBudget::new(400, 70 + t)).unwrap();
                let scaled = sampled / problem.model().epsilon();
                assert!(
                    scaled <= bound + 1e-9,
                    "problem {pi}: sampled {scaled} exceeded the bound {bound}"
                );
                assert!(scaled > 0.2 * bound, "problem {pi}: sampler far too weak ({scaled} vs {bound})");
            }
        }
    }

    #[test]
    fn sampled_worst_error_is_exact_on_atomic_configurations() {
        // All measures share one atom and V = {0}: the worst case is attained
        // by the constant members ±ε and a noise corner, both of which the
        // enriched sample sets contain, so oracle and bound agree exactly.
        let obs = vec![
            SignedMeasure::dirac(0.3, 1.0).unwrap(),
            SignedMeasure::dirac(0.3, 2.0).unwrap(),
        ];
        let model = ApproximabilityModel::new(Vec::new(), 0.5).unwrap();
        let noise = UncertaintySet::new(f64::INFINITY, 0.1).unwrap();
        let problem = EstimationProblem::new(
            SignedMeasure::dirac(0.3, 1.0).unwrap(),
            obs,
            model,
            noise,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..6 {
            let a = DVector::from_fn(2, |_, _| rng.gen_range(-2.0..2.0));
            let bound = dual_objective(&problem, &a).unwrap();
            let sampled =
                sampled_worst_error(&problem, &a, 3, &SampleBudget::new(16, 5)).unwrap();
            assert_abs_diff_eq!(sampled / 0.5, bound, epsilon = 1e-9);
        }
    }

    #[test]
    fn returned_weights_beat_nullspace_perturbations() {
        let problem = guiding_problem(0.01);
        let w = solve_weights(&problem, 1e-4, 128).unwrap();
        let base = dual_objective(&problem, &w.a).unwrap();
        // Project random directions onto the null space of M, so the
        // perturbed weights stay feasible.
        let m_mat = problem.m_matrix();
        let mmt_inv = (m_mat * m_mat.transpose())
            .try_inverse()
            .expect("M has full row rank by construction");
        let mut rng = ChaCha8Rng::seed_from_u64(1207);
        for _ in 0..20 {
            let r = DVector::from_fn(problem.m(), |_, _| rng.gen_range(-0.5..0.5));
            let d = &r - m_mat.transpose() * (&mmt_inv * (m_mat * &r));
            let cand = &w.a + &d;
            assert!((m_mat * &cand - problem.b_vector()).amax() <= 1e-7);
            let val = dual_objective(&problem, &cand).unwrap();
            assert!(
                val >= base - w.delta - 1e-6,
                "perturbation beat the returned weights: {val} < {base} − {}",
                w.delta
            );
        }
    }

    #[test]
    fn scaling_the_quantity_scales_the_certificates() {
        // The whole program is positively homogeneous in the quantity, so a
        // rescaled ρ rescales weights, bounds, and gaps alike. A tiny gap
        // tolerance forces both runs through the same level schedule.
        let problem = guiding_problem(0.01);
        let t = 3.0;
        let scaled = EstimationProblem::new(
            problem.quantity().scaled(t).unwrap(),
            problem.observations().to_vec(),
            problem.model().clone(),
            *problem.noise(),
        )
        .unwrap();
        let w1 = solve_weights(&problem, 1e-9, 64).unwrap();
        let w2 = solve_weights(&scaled, 1e-9, 64).unwrap();
        assert_eq!(w1.level, w2.level);
        assert_abs_diff_eq!(w2.alpha, t * w1.alpha, epsilon = 1e-6);
        assert_abs_diff_eq!(w2.certified_value, t * w1.certified_value, epsilon = 1e-5);
        assert_abs_diff_eq!((&w2.a - &w1.a * t).amax(), 0.0, epsilon = 1e-5);
    }

    #[test]
    fn estimate_is_the_inner_product() {
        let problem = point_eval_problem(0.2, f64::INFINITY);
        let w = solve_weights(&problem, 1e-6, 64).unwrap();
        let y = DVector::from_vec(vec![0.3, -0.7, 0.9]);
        assert_abs_diff_eq!(estimate(&w, &y).unwrap(), -0.7, epsilon = 1e-5);
        assert_abs_diff_eq!(estimate(&w, &DVector::zeros(3)).unwrap(), 0.0, epsilon = 1e-9);
        assert!(estimate(&w, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn estimation_error_is_within_the_certificate_on_samples() {
        let problem = guiding_problem(0.005);
        let w = solve_weights(&problem, 1e-3, 128).unwrap();
        assert!(w.certified);
        let eps = problem.model().epsilon();
        let deg = 8usize;
        let qmom = problem.quantity().moments(deg).unwrap().entries;
        let omom: Vec<DVector<f64>> = problem
            .observations()
            .iter()
            .map(|l| l.moments(deg).unwrap().entries)
            .collect();
        let perts = crate::oracles::sample_cheb_ball(deg, eps, &SampleBudget::new(300, 5));
        let noises =
            sample_lp_ball(4, f64::INFINITY, problem.noise().eta(), &SampleBudget::new(40, 6));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for g in perts.iter().take(120) {
            // v = c₁T₁ + c₃T₃ with box coefficients.
            let mut fw = g.clone();
            fw[1] += rng.gen_range(-1.0..1.0);
            fw[3] += rng.gen_range(-1.0..1.0);
            let qf = qmom.dot(&fw);
            let lf = DVector::from_iterator(4, omom.iter().map(|mo| mo.dot(&fw)));
            for e in noises.iter().take(10) {
                let est = estimate(&w, &(&lf + e)).unwrap();
                assert!(
                    (qf - est).abs() <= w.certified_value * eps + 1e-6,
                    "sampled error exceeded the certificate"
                );
            }
        }
    }

    #[test]
    fn noisier_bracket_dominates_quieter_bracket() {
        // The intrinsic error constant is nondecreasing in the noise level.
        let quiet = guiding_problem(0.005);
        let loud = guiding_problem(0.02);
        let tol = 1e-4;
        let (_, hi0) = compatibility_indicator(&quiet, tol, 128).unwrap();
        let (lo1, _) = compatibility_indicator(&loud, tol, 128).unwrap();
        assert!(
            lo1 >= hi0 - 2.0 * tol,
            "more noise must not shrink the indicator: {lo1} < {hi0} − 2·{tol}"
        );
    }

    #[test]
    fn level_cap_returns_uncertified_best_iterate() {
        let problem = guiding_problem(0.005);
        let w = solve_weights(&problem, 1e-12, 8).unwrap();
        assert!(!w.certified);
        assert_eq!(w.level, 8);
        assert!(w.delta > 1e-12);
    }
}
