//! Near-optimal recovery of a whole function in `C[−1,1]` from finitely many
//! noisy integral observations.
//!
//! The construction composes the per-functional optimal weights of
//! [`crate::functional`] with a quasi-interpolant `P = Σ_j δ_{x̄_j}(·) u_j`:
//! for each interpolation node `x̄_j`, weights `a^(j)` optimally estimate the
//! point value `f(x̄_j)`, and the recovered function is
//! `x ↦ Σ_j (a^(j)·y) u_j(x)`. When the model space is reproduced by `P` and
//! each column reproduces point evaluation on the model space, the map
//! recovers model elements exactly and its worst-case error is within an
//! explicit factor `1 + 2γ (+ max_j δ_j)` of optimal, where `γ` bounds the
//! Lebesgue function `Σ_j |u_j|`.
//!
//! Truly optimal full recovery is deliberately not attempted: the optimal
//! weights for point evaluation are in general a discontinuous function of
//! the evaluation point, a phenomenon [`discontinuity_probe`] quantifies.

use crate::cheb::{cheb_grid, cheb_points_second_kind};
use crate::conic::build::{Builder, GeoStatus, LinExpr};
use crate::conic::{SolveStatus, Tolerances};
use crate::error::{Error, Result};
use crate::functional::{
    posterior_gap, solve_weights, ApproximabilityModel, EstimationProblem, UncertaintySet,
    WeightSolution,
};
use crate::measure::SignedMeasure;
use crate::oracles::{worst_case_error_oracle, SampleBudget};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Largest polynomial dimension accepted for interpolation nodes.
pub const MAX_INTERPOLATION_DIM: usize = 64;

/// Evaluation grid size used to certify `γ`.
const GAMMA_GRID: usize = 4096;

/// Lagrange interpolation at Chebyshev points of the second kind: nodes
/// `x̄_1..x̄_n`, cardinal basis functions `u_j` (`u_j(x̄_k) = δ_{jk}`), and a
/// certified grid bound `γ ≥ max_x Σ_j |u_j(x)|` on the Lebesgue function.
/// Reproduces every polynomial of degree < n exactly.
#[derive(Debug, Clone)]
pub struct QuasiInterpolant {
    nodes: DVector<f64>,
    bary_w: DVector<f64>,
    gamma: f64,
}

impl QuasiInterpolant {
    /// Interpolation nodes, increasing.
    pub fn nodes(&self) -> &DVector<f64> {
        &self.nodes
    }

    /// Number of nodes n̄.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Certified bound on the Lebesgue function `Σ_j |u_j|` over `[−1,1]`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// All cardinal basis values `u_j(x)` via the barycentric formula.
    pub fn basis_values(&self, x: f64) -> DVector<f64> {
        let n = self.len();
        if n == 1 {
            return DVector::from_element(1, 1.0);
        }
        // An (almost) exact node hit makes the barycentric quotient unstable;
        // the cardinal property gives the value directly.
        for j in 0..n {
            if (x - self.nodes[j]).abs() <= 1e-14 * (1.0 + x.abs()) {
                let mut u = DVector::zeros(n);
                u[j] = 1.0;
                return u;
            }
        }
        let terms = DVector::from_fn(n, |j, _| self.bary_w[j] / (x - self.nodes[j]));
        let denom: f64 = terms.sum();
        terms / denom
    }

    /// The Lebesgue function `Σ_j |u_j(x)|`.
    pub fn lebesgue(&self, x: f64) -> f64 {
        self.basis_values(x).iter().map(|u| u.abs()).sum()
    }

    /// Maximum of the Lebesgue function over a Chebyshev-distributed grid of
    /// `grid_points` points (at least 1, by the partition-of-unity property
    /// at the nodes).
    pub fn gamma_on_grid(&self, grid_points: usize) -> f64 {
        cheb_grid(grid_points)
            .into_iter()
            .map(|x| self.lebesgue(x))
            .fold(1.0, f64::max)
    }

    /// Interpolate the node values `d` at `x`: `Σ_j d_j u_j(x)`.
    pub fn interpolate(&self, d: &DVector<f64>, x: f64) -> f64 {
        self.basis_values(x).dot(d)
    }
}

/// Build the quasi-interpolant for a full polynomial space: Lagrange
/// interpolation at `n` Chebyshev points of the second kind, where `n` is the
/// model dimension. The model basis must span all polynomials of degree < n;
/// `γ` is the certified grid bound of the Lebesgue constant of the node set.
pub fn build_quasi_interpolant(model: &ApproximabilityModel) -> Result<QuasiInterpolant> {
    let n = model.dim();
    if n == 0 {
        return Err(Error::invalid("quasi-interpolant: the model space must not be trivial"));
    }
    if n > MAX_INTERPOLATION_DIM {
        return Err(Error::invalid(format!(
            "quasi-interpolant: dimension {n} exceeds the stable limit {MAX_INTERPOLATION_DIM}"
        )));
    }
    // The map reproduces exactly the polynomials of degree < n, so the model
    // basis must span that space and nothing larger.
    let mut coeffs = DMatrix::zeros(n, n);
    for (l, v) in model.basis().iter().enumerate() {
        let eff = v.coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |d| d + 1);
        if eff > n {
            return Err(Error::invalid(format!(
                "quasi-interpolant: basis element {l} has degree {} ≥ the model dimension {n}",
                eff - 1
            )));
        }
        for (d, &c) in v.coeffs.iter().enumerate().take(n) {
            coeffs[(d, l)] = c;
        }
    }
    let sv = coeffs.svd(false, false).singular_values;
    if !(sv.min() > 1e-10 * sv.amax().max(1e-300)) {
        return Err(Error::invalid(
            "quasi-interpolant: the model basis must span the full polynomial space of its dimension",
        ));
    }

    let nodes = DVector::from_vec(cheb_points_second_kind(n));
    let bary_w = DVector::from_fn(n, |j, _| {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let halved = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        sign * halved
    });
    let mut interp = QuasiInterpolant { nodes, bary_w, gamma: 1.0 };
    interp.gamma = interp.gamma_on_grid(GAMMA_GRID);
    Ok(interp)
}

/// A linear full-recovery map `y ↦ Σ_j (a^(j)·y) u_j` with per-node
/// certificates: column `a^(j)` optimally estimates the point value at node
/// `x̄_j`, bracketed by `alpha_j ≤ optimum ≤ alpha_j + delta_j`.
#[derive(Debug, Clone)]
pub struct NearOptimalMap {
    coeffs: DMatrix<f64>,
    interpolant: QuasiInterpolant,
    node_solutions: Vec<WeightSolution>,
    certified: bool,
    epsilon: f64,
    eta: f64,
    p: f64,
}

impl NearOptimalMap {
    /// Coefficient matrix, one column per interpolation node.
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn interpolant(&self) -> &QuasiInterpolant {
        &self.interpolant
    }

    /// Per-node weight solutions, in node order.
    pub fn node_solutions(&self) -> &[WeightSolution] {
        &self.node_solutions
    }

    /// Whether every per-node solve met the requested gap tolerance.
    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Number of observations m.
    pub fn m(&self) -> usize {
        self.coeffs.nrows()
    }

    /// `μ̄ = max_j (α_j + δ_j)`, the worst certified point-value bracket.
    pub fn mu_bar(&self) -> f64 {
        self.node_solutions.iter().map(|w| w.certified_value).fold(0.0, f64::max)
    }

    /// `max_j δ_j`, the loosest per-node bracket width.
    pub fn max_gap(&self) -> f64 {
        self.node_solutions.iter().map(|w| w.delta).fold(0.0, f64::max)
    }

    /// The certificate constant `1 + 2γ + max_j δ_j`.
    pub fn certificate_constant(&self) -> f64 {
        1.0 + 2.0 * self.interpolant.gamma() + self.max_gap()
    }
}

/// Solve for the near-optimal map: one optimal-weight problem per
/// interpolation node, with the quantity set to point evaluation there. The
/// node solves run in parallel. Columns are re-projected onto the
/// reproduction constraints (their gaps recomputed) so the map reproduces
/// the model space to machine precision times `γ`. If some node misses
/// `gap_tol` before `level_cap`, the map is returned flagged uncertified.
pub fn build_near_optimal_map(
    observations: &[SignedMeasure],
    model: &ApproximabilityModel,
    noise: &UncertaintySet,
    interpolant: &QuasiInterpolant,
    gap_tol: f64,
    level_cap: usize,
) -> Result<NearOptimalMap> {
    // The interpolant must reproduce the model space: cardinal interpolation
    // of each basis element's node values must return the element.
    let grid = cheb_grid(2048);
    for (l, v) in model.basis().iter().enumerate() {
        let node_vals =
            DVector::from_fn(interpolant.len(), |j, _| v.eval(interpolant.nodes()[j]));
        let worst = grid
            .iter()
            .map(|&x| (interpolant.interpolate(&node_vals, x) - v.eval(x)).abs())
            .fold(0.0, f64::max);
        if worst > 1e-9 {
            return Err(Error::invalid(format!(
                "near-optimal map: interpolant fails to reproduce basis element {l} (error {worst:.3e})"
            )));
        }
    }

    let nodes: Vec<f64> = interpolant.nodes().iter().copied().collect();
    let solutions: Result<Vec<(WeightSolution, DVector<f64>, DVector<f64>)>> = nodes
        .par_iter()
        .map(|&x| {
            let quantity = SignedMeasure::dirac(x, 1.0)?;
            let problem = EstimationProblem::new(
                quantity,
                observations.to_vec(),
                model.clone(),
                *noise,
            )?;
            let mut w = solve_weights(&problem, gap_tol, level_cap)?;
            // Exact projection onto Ma = b: the solver meets its feasibility
            // tolerance, but the reproduction identity needs machine-level
            // residuals. The gap is recomputed at the projected weights so
            // the stored certificate matches the stored column.
            let m_mat = problem.m_matrix();
            let resid = problem.b_vector() - m_mat * &w.a;
            if resid.amax() > 0.0 {
                let mmt = m_mat * m_mat.transpose();
                let corr = mmt
                    .lu()
                    .solve(&resid)
                    .ok_or_else(|| Error::inconsistent("near-optimal map: singular M·Mᵀ"))?;
                w.a += m_mat.transpose() * corr;
                w.delta = posterior_gap(&problem, &w.a, w.alpha)?;
                w.certified_value = w.alpha + w.delta;
                w.certified = w.delta <= gap_tol;
            }
            let bvec = problem.b_vector().clone();
            let mrow = m_mat * &w.a;
            Ok((w, mrow, bvec))
        })
        .collect();
    let solutions = solutions?;

    let m = observations.len();
    let mut coeffs = DMatrix::zeros(m, nodes.len());
    let mut node_solutions = Vec::with_capacity(nodes.len());
    for (j, (w, mrow, bvec)) in solutions.into_iter().enumerate() {
        let viol = (&mrow - &bvec).amax();
        if viol > 1e-8 {
            return Err(Error::inconsistent(format!(
                "near-optimal map: column {j} violates its reproduction constraints ({viol:.3e})"
            )));
        }
        coeffs.column_mut(j).copy_from(&w.a);
        node_solutions.push(w);
    }
    let certified = node_solutions.iter().all(|w| w.certified);
    Ok(NearOptimalMap {
        coeffs,
        interpolant: interpolant.clone(),
        node_solutions,
        certified,
        epsilon: model.epsilon(),
        eta: noise.eta(),
        p: noise.p(),
    })
}

/// Apply the map to data `y` on an evaluation grid inside `[−1,1]`.
pub fn recover(map: &NearOptimalMap, y: &DVector<f64>, eval_grid: &[f64]) -> Result<DVector<f64>> {
    if y.len() != map.m() {
        return Err(Error::invalid("recover: data length mismatch"));
    }
    if eval_grid.iter().any(|x| !x.is_finite() || x.abs() > 1.0 + 1e-12) {
        return Err(Error::invalid("recover: evaluation points must lie in [−1, 1]"));
    }
    let node_estimates = map.coeffs.tr_mul(y);
    Ok(DVector::from_iterator(
        eval_grid.len(),
        eval_grid.iter().map(|&x| map.interpolant.interpolate(&node_estimates, x)),
    ))
}

/// Certified upper bound on the map's worst-case sup-norm recovery error over
/// the model and noise sets: `(1 + 2γ + max_j δ_j) · μ̄ · ε` with
/// `μ̄ = max_j (α_j + δ_j)`. This bounds the map's error, not the intrinsic
/// error of the problem. Refuses uncertified maps and model/noise data that
/// disagree with what the map was built from.
pub fn error_certificate(
    map: &NearOptimalMap,
    model: &ApproximabilityModel,
    noise: &UncertaintySet,
) -> Result<f64> {
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs()) || a == b;
    if !same(model.epsilon(), map.epsilon) || !same(noise.eta(), map.eta) || noise.p() != map.p {
        return Err(Error::invalid(
            "error_certificate: model/noise differ from those the map was built with",
        ));
    }
    if !map.certified {
        return Err(Error::invalid(
            "error_certificate: map is uncertified (some node missed its gap tolerance)",
        ));
    }
    Ok(map.certificate_constant() * map.mu_bar() * map.epsilon)
}

/// Sampled lower bound on the worst-case sup-norm recovery error of the map
/// over the approximability and noise sets: `max_x |f(x) − R(L(f)+e)(x)|`
/// on `eval_grid`, maximized over certified members (perturbations of degree
/// < `perturb_deg`) and noises. Always ≤ the true worst case, hence ≤ any
/// sound [`error_certificate`]. Deterministic in the budget's seed.
pub fn sampled_worst_error(
    map: &NearOptimalMap,
    observations: &[SignedMeasure],
    model: &ApproximabilityModel,
    noise: &UncertaintySet,
    eval_grid: &[f64],
    perturb_deg: usize,
    budget: &SampleBudget,
) -> Result<f64> {
    if observations.len() != map.m() {
        return Err(Error::invalid("sampled_worst_error: observation count mismatch"));
    }
    if perturb_deg == 0 {
        return Err(Error::invalid("sampled_worst_error: perturbation degree must be ≥ 1"));
    }
    if eval_grid.is_empty() || eval_grid.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
        return Err(Error::invalid("sampled_worst_error: evaluation grid must lie in [−1, 1]"));
    }
    let n = model.dim();
    let m = observations.len();
    let (members, noises) =
        approximability_sample_sets(n, model.epsilon(), m, noise.p(), noise.eta(), perturb_deg, budget)?;
    let basis_at = DMatrix::from_fn(eval_grid.len(), n, |t, l| model.basis()[l].eval(eval_grid[t]));
    let cheb_at = DMatrix::from_fn(eval_grid.len(), perturb_deg, |t, d| {
        crate::cheb::cheb_eval_unchecked(d, eval_grid[t])
    });
    let (m_mat, _) = crate::functional::constraint_system(model, &SignedMeasure::zero(), observations)?;
    let obs_mom: Vec<DVector<f64>> = observations
        .iter()
        .map(|l| l.moments(perturb_deg).map(|mv| mv.entries))
        .collect::<Result<_>>()?;

    let quantity = move |s: &DVector<f64>| {
        &basis_at * s.rows(0, n).into_owned() + &cheb_at * s.rows(n, perturb_deg).into_owned()
    };
    let observe = move |s: &DVector<f64>| {
        let mut y = m_mat.tr_mul(&s.rows(0, n).into_owned());
        let g = s.rows(n, perturb_deg).into_owned();
        for i in 0..m {
            y[i] += obs_mom[i].dot(&g);
        }
        y
    };
    let recover_fn =
        move |y: &DVector<f64>| recover(map, y, eval_grid).expect("validated dimensions");
    let pairs = members.len().saturating_mul(noises.len());
    Ok(worst_case_error_oracle(&recover_fn, &quantity, &observe, &members, &noises, pairs))
}

/// Report of [`discontinuity_probe`]: the minimal mixed-norm objective over
/// the reproduction constraints at node `k`, the value `1 + η/ε` attained by
/// the matching unit weight vector, and their difference. A clearly positive
/// gap shows the unit vector is suboptimal at its own node — the premise of
/// the discontinuity of optimal weights under point evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ProbeReport {
    /// Probed observation index.
    pub node: usize,
    /// `min{‖a‖₁ + (η/ε)‖a‖_{p'} : Ma = b(x_k)}`.
    pub m_star: f64,
    /// `1 + η/ε`, the objective of `a = e_k`.
    pub threshold: f64,
    /// `threshold − m_star` (≥ 0 up to solver tolerance).
    pub gap: f64,
}

/// Probe the discontinuity premise at observation `k`: with point-evaluation
/// observations at distinct points and `Q = δ_{x_k}`, compare the best mixed
/// objective over the constraint set against the unit vector's `1 + η/ε`.
/// Requires `η ≤ ε` and `p ∈ (1, ∞)`; only `p = 2` is conic-exact here.
pub fn discontinuity_probe(
    problem: &EstimationProblem,
    k: usize,
    p: f64,
) -> Result<ProbeReport> {
    let m = problem.m();
    if k >= m {
        return Err(Error::invalid(format!(
            "discontinuity_probe: node {k} out of range (m = {m})"
        )));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::invalid("discontinuity_probe: p must lie in (1, ∞)"));
    }
    if p != 2.0 {
        return Err(Error::invalid(
            "discontinuity_probe: only p = 2 has an exactly conic-representable conjugate norm",
        ));
    }
    let eta = problem.noise().eta();
    let eps = problem.model().epsilon();
    if eta > eps {
        return Err(Error::invalid("discontinuity_probe: requires η ≤ ε"));
    }
    let mut xs = Vec::with_capacity(m);
    for (i, lam) in problem.observations().iter().enumerate() {
        let atoms = lam.atoms();
        if lam.density().is_some() || atoms.len() != 1 || (atoms[0].1 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "discontinuity_probe: observation {i} is not a unit point evaluation"
            )));
        }
        xs.push(atoms[0].0);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if (xs[i] - xs[j]).abs() <= 1e-12 {
                return Err(Error::invalid(
                    "discontinuity_probe: evaluation points must be distinct",
                ));
            }
        }
    }
    let ratio = eta / eps;
    let threshold = 1.0 + ratio;

    let n = problem.n();
    let m_star = if n == 0 {
        // No reproduction constraints: the zero weight vector is optimal.
        0.0
    } else {
        let mut bld = Builder::new();
        let a = bld.vars(m);
        let t = bld.vars(m);
        for j in 0..n {
            let mut e = LinExpr::constant(-problem.model().basis()[j].eval(xs[k]));
            for i in 0..m {
                e = e.term(problem.m_matrix()[(j, i)], a[i]);
            }
            bld.eq(e);
        }
        let mut obj = LinExpr::new();
        for i in 0..m {
            bld.nonneg(LinExpr::of(t[i]).term(-1.0, a[i]));
            bld.nonneg(LinExpr::of(t[i]).term(1.0, a[i]));
            obj = obj.term(1.0, t[i]);
        }
        if ratio > 0.0 {
            let s = bld.var();
            let mut cone = vec![LinExpr::of(s)];
            cone.extend(a.iter().map(|&ai| LinExpr::of(ai)));
            bld.soc(cone);
            obj = obj.term(ratio, s);
        }
        bld.minimize(obj);
        let sol = bld.build()?.solve(&Tolerances::default())?;
        if sol.status != GeoStatus::Optimal {
            return Err(solver_failed(sol.status, "discontinuity probe"));
        }
        sol.value.max(0.0)
    };
    Ok(ProbeReport { node: k, m_star, threshold, gap: threshold - m_star })
}

/// Certified members of the approximability set (as concatenated
/// [subspace coefficients | perturbation Chebyshev coefficients]) enriched
/// with the deterministic extremes `±ε T_d`, and noises enriched with the
/// ℓp-ball corner candidates (including zero).
fn approximability_sample_sets(
    n: usize,
    eps: f64,
    m: usize,
    p: f64,
    eta: f64,
    perturb_deg: usize,
    budget: &SampleBudget,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    use crate::oracles::{noise_corner_candidates, sample_model, SetDescriptor};
    let mut members =
        sample_model(&SetDescriptor::Approximability { v_dim: n, perturb_deg, eps }, budget)?;
    for d in 0..perturb_deg {
        for s in [1.0, -1.0] {
            let mut v = DVector::zeros(n + perturb_deg);
            v[n + d] = s * eps;
            members.push(v);
        }
    }
    let mut noises = noise_corner_candidates(m, p, eta);
    if eta > 0.0 {
        let noise_budget =
            SampleBudget::new(budget.count.clamp(8, 64), budget.seed ^ 0x9E37_79B9_7F4A_7C15);
        noises.extend(sample_model(&SetDescriptor::NoiseLp { m, p, eta }, &noise_budget)?);
    }
    Ok((members, noises))
}

fn solver_failed(status: GeoStatus, what: &str) -> Error {
    let st = match status {
        GeoStatus::MaxIterations => SolveStatus::MaxIterations,
        _ => SolveStatus::NumericalFailure,
    };
    Error::SolverFailure { status: st, detail: what.to_string() }
}
