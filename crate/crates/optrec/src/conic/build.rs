//! Geometric front end for the conic solver: free scalar variables, linear
//! equalities, and cone memberships of affine expressions. Equalities are
//! eliminated through an orthonormal null-space parameterization, after which
//! the problem max ⟨d,y⟩ s.t. f − Fy ∈ K lowers to the standard form whose
//! conic dual it is.

use super::cone::{svec_len, Cone, ConeLayout, SQRT2};
use super::{ConeProgram, ConeSolution, SolveStatus, Tolerances};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Affine expression `constant + Σ coef·var`.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        LinExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn of(v: Var) -> Self {
        LinExpr { terms: vec![(v.0, 1.0)], constant: 0.0 }
    }

    /// Chainable: add `coef·v`.
    pub fn term(mut self, coef: f64, v: Var) -> Self {
        if coef != 0.0 {
            self.terms.push((v.0, coef));
        }
        self
    }

    /// Chainable: add a constant.
    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    /// Add `coef · other` in place.
    pub fn add_expr(&mut self, coef: f64, other: &LinExpr) {
        self.constant += coef * other.constant;
        for &(ix, c) in &other.terms {
            self.terms.push((ix, coef * c));
        }
    }
}

/// A symmetric-matrix variable block: its scaled-vectorized coordinates are
/// ordinary scalar variables; positive semidefiniteness is registered as a
/// cone membership of those coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PsdVar {
    pub d: usize,
    start: usize,
}

impl PsdVar {
    /// Matrix entry (i, j) as an expression.
    pub fn entry(&self, i: usize, j: usize) -> LinExpr {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = svec_len(hi) + lo;
        let coef = if lo == hi { 1.0 } else { 1.0 / SQRT2 };
        LinExpr { terms: vec![(self.start + k, coef)], constant: 0.0 }
    }

    /// tr(B · S) as an expression (B symmetric).
    pub fn trace_with(&self, b: &DMatrix<f64>) -> LinExpr {
        let sb = super::cone::svec(b);
        LinExpr {
            terms: (0..sb.len()).filter(|&k| sb[k] != 0.0).map(|k| (self.start + k, sb[k])).collect(),
            constant: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Sense {
    Minimize,
    Maximize,
}

/// Incremental problem builder.
#[derive(Debug, Default)]
pub struct Builder {
    nvar: usize,
    objective: Option<(Sense, LinExpr)>,
    eqs: Vec<LinExpr>,
    blocks: Vec<(Cone, Vec<LinExpr>)>,
}

impl Builder {
    pub fn new() -> Self {
        Builder::default()
    }

    pub fn var(&mut self) -> Var {
        let v = Var(self.nvar);
        self.nvar += 1;
        v
    }

    pub fn vars(&mut self, k: usize) -> Vec<Var> {
        (0..k).map(|_| self.var()).collect()
    }

    /// d×d symmetric PSD matrix variable.
    pub fn psd_var(&mut self, d: usize) -> PsdVar {
        let start = self.nvar;
        self.nvar += svec_len(d);
        let pv = PsdVar { d, start };
        let entries: Vec<LinExpr> = (0..d)
            .flat_map(|j| (0..=j).map(move |i| (i, j)))
            .map(|(i, j)| pv.entry(i, j))
            .collect();
        self.psd(d, entries);
        pv
    }

    /// Constrain e = 0.
    pub fn eq(&mut self, e: LinExpr) {
        self.eqs.push(e);
    }

    /// Constrain e ≥ 0.
    pub fn nonneg(&mut self, e: LinExpr) {
        self.blocks.push((Cone::NonNeg(1), vec![e]));
    }

    /// Constrain (e₀, e₁, …) to the second-order cone e₀ ≥ ‖(e₁,…)‖₂.
    pub fn soc(&mut self, exprs: Vec<LinExpr>) {
        let k = exprs.len();
        self.blocks.push((Cone::Soc(k), exprs));
    }

    /// Constrain the symmetric matrix with the given upper-triangle entries
    /// (column-major: (0,0), (0,1), (1,1), (0,2), …) to be PSD.
    pub fn psd(&mut self, d: usize, upper_colmajor: Vec<LinExpr>) {
        assert_eq!(upper_colmajor.len(), svec_len(d), "psd block entry count");
        self.blocks.push((Cone::Psd(d), upper_colmajor));
    }

    /// Number of scalar variables declared so far.
    pub fn n_vars(&self) -> usize {
        self.nvar
    }

    /// Number of scalar equality constraints added so far.
    pub fn n_equalities(&self) -> usize {
        self.eqs.len()
    }

    /// Total scalar rows across all cone constraints added so far.
    pub fn n_cone_rows(&self) -> usize {
        self.blocks.iter().map(|(_, e)| e.len()).sum()
    }

    pub fn minimize(&mut self, e: LinExpr) {
        self.objective = Some((Sense::Minimize, e));
    }

    pub fn maximize(&mut self, e: LinExpr) {
        self.objective = Some((Sense::Maximize, e));
    }

    pub fn build(self) -> Result<GeoProblem> {
        let p = self.nvar;
        let Some((sense, obj)) = self.objective else {
            return Err(Error::invalid("builder: objective not set"));
        };
        let negate = matches!(sense, Sense::Minimize);
        let osign = if negate { -1.0 } else { 1.0 };
        let mut d_geo = DVector::zeros(p);
        for &(ix, c) in &obj.terms {
            d_geo[ix] += osign * c;
        }
        let obj_const = osign * obj.constant;

        // Cone rows f − F y ∈ K, with √2 scaling on PSD off-diagonal entries.
        let mut cones = Vec::new();
        let mut rows: Vec<&LinExpr> = Vec::new();
        let mut scales: Vec<f64> = Vec::new();
        for (cone, exprs) in &self.blocks {
            cones.push(*cone);
            match cone {
                Cone::Psd(d) => {
                    let mut k = 0;
                    for j in 0..*d {
                        for i in 0..=j {
                            rows.push(&exprs[k]);
                            scales.push(if i == j { 1.0 } else { SQRT2 });
                            k += 1;
                        }
                    }
                }
                _ => {
                    for e in exprs {
                        rows.push(e);
                        scales.push(1.0);
                    }
                }
            }
        }
        let nrows = rows.len();
        let mut f = DVector::zeros(nrows);
        let mut fmat = DMatrix::zeros(nrows, p);
        for (r, (expr, s)) in rows.iter().zip(&scales).enumerate() {
            f[r] = s * expr.constant;
            for &(ix, c) in &expr.terms {
                fmat[(r, ix)] -= s * c;
            }
        }

        // Equality elimination y = y₀ + Z ŷ.
        let (y0, zbasis) = if self.eqs.is_empty() {
            (DVector::zeros(p), DMatrix::identity(p, p))
        } else {
            let k = self.eqs.len();
            let mut emat = DMatrix::zeros(k, p);
            let mut g = DVector::zeros(k);
            for (r, e) in self.eqs.iter().enumerate() {
                g[r] = -e.constant;
                for &(ix, c) in &e.terms {
                    emat[(r, ix)] += c;
                }
            }
            let ete = emat.transpose() * &emat;
            let eig = nalgebra::SymmetricEigen::new(ete);
            let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
            let tol = 1e-12 * lmax.max(1e-30);
            let etg = emat.transpose() * &g;
            let mut y0 = DVector::zeros(p);
            let mut null_cols = Vec::new();
            for i in 0..p {
                let v = eig.eigenvectors.column(i);
                if eig.eigenvalues[i] > tol {
                    y0 += v * (v.dot(&etg) / eig.eigenvalues[i]);
                } else {
                    null_cols.push(i);
                }
            }
            let resid = (&emat * &y0 - &g).amax();
            if resid > 1e-8 * (1.0 + g.amax()) {
                return Err(Error::infeasible(format!(
                    "equality constraints are inconsistent (residual {resid:.3e})"
                )));
            }
            (y0, eig.eigenvectors.select_columns(null_cols.iter()))
        };

        let fhat = &f - &fmat * &y0;
        let fz = &fmat * &zbasis;
        let dhat = zbasis.transpose() * &d_geo;
        let value_const = d_geo.dot(&y0) + obj_const;

        // Degenerate shapes resolved without the solver.
        if zbasis.ncols() == 0 || nrows == 0 {
            let feasible = nrows == 0 || ConeLayout::new(&cones).distance(&fhat) <= 1e-9;
            let unbounded = dhat.iter().any(|&v| v.abs() > 1e-12);
            let status = if !feasible {
                GeoStatus::Infeasible
            } else if unbounded {
                GeoStatus::Unbounded
            } else {
                GeoStatus::Optimal
            };
            return Ok(GeoProblem {
                program: ConeProgram {
                    c: fhat,
                    a: fz.transpose(),
                    b: dhat,
                    cones,
                },
                y0,
                zbasis,
                negate,
                value_const,
                resolved: Some(status),
            });
        }

        Ok(GeoProblem {
            program: ConeProgram { c: fhat, a: fz.transpose(), b: dhat, cones },
            y0,
            zbasis,
            negate,
            value_const,
            resolved: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeoStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

/// Lowered problem plus the data needed to map solver output back to the
/// builder's variables.
#[derive(Debug, Clone)]
pub struct GeoProblem {
    program: ConeProgram,
    y0: DVector<f64>,
    zbasis: DMatrix<f64>,
    negate: bool,
    value_const: f64,
    resolved: Option<GeoStatus>,
}

#[derive(Debug, Clone)]
pub struct GeoSolution {
    /// Values of the builder's variables (meaningful at Optimal/MaxIterations).
    pub y: DVector<f64>,
    /// Objective value in the caller's sense.
    pub value: f64,
    pub status: GeoStatus,
    pub solver: Option<ConeSolution>,
}

impl GeoSolution {
    /// Value of one builder variable.
    pub fn value_of(&self, v: Var) -> f64 {
        self.y[v.0]
    }

    /// Interior-point iterations spent (0 when the problem was resolved
    /// during lowering).
    pub fn iterations(&self) -> usize {
        self.solver.as_ref().map_or(0, |s| s.iterations)
    }
}

impl GeoProblem {
    /// The lowered standard-form program.
    pub fn program(&self) -> &ConeProgram {
        &self.program
    }

    pub fn solve(&self, tol: &Tolerances) -> Result<GeoSolution> {
        let sign = if self.negate { -1.0 } else { 1.0 };
        if let Some(status) = self.resolved {
            return Ok(GeoSolution {
                y: self.y0.clone(),
                value: sign * self.value_const,
                status,
                solver: None,
            });
        }
        let sol = self.program.solve(tol)?;
        let status = match sol.status {
            SolveStatus::Optimal => GeoStatus::Optimal,
            SolveStatus::PrimalInfeasible => GeoStatus::Unbounded,
            SolveStatus::DualInfeasible => GeoStatus::Infeasible,
            SolveStatus::MaxIterations => GeoStatus::MaxIterations,
            SolveStatus::NumericalFailure => GeoStatus::NumericalFailure,
        };
        let y = &self.y0 + &self.zbasis * &sol.y;
        let value = sign * (sol.dual_objective + self.value_const);
        Ok(GeoSolution { y, value, status, solver: Some(sol) })
    }
}
