//! Dense conic programming over products of zero, nonnegative, second-order,
//! and PSD cones: standard form min ⟨c,x⟩ s.t. Ax = b, x ∈ K, solved by a
//! built-in homogeneous self-dual interior-point method.
//!
//! [`build::Builder`] offers a geometric front end (free variables, equality
//! constraints, cone memberships) that eliminates equalities and lowers to
//! standard form; [`split_sdp_pair`] emits matched primal/dual SDP encodings
//! of the trace-form pair used by the polynomial-ball recovery programs.

pub mod build;
pub mod cone;
mod lemdual;
mod solver;

pub use cone::{smat, svec, svec_len, Cone, ConeLayout};
pub use lemdual::split_sdp_pair;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Standard-form conic program: minimize ⟨c,x⟩ subject to Ax = b and x in the
/// ordered product of cone blocks.
#[derive(Debug, Clone)]
pub struct ConeProgram {
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub cones: Vec<Cone>,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub dist_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { gap_tol: 1e-8, feas_tol: 1e-8, dist_tol: 1e-8, max_iter: 200 }
    }
}

impl Tolerances {
    /// Tightened tolerances for certificate-grade solves.
    pub fn tight() -> Self {
        Tolerances { gap_tol: 1e-11, feas_tol: 1e-11, dist_tol: 1e-9, max_iter: 300 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::PrimalInfeasible => "primal-infeasible",
            SolveStatus::DualInfeasible => "dual-infeasible",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

/// Solver output. At `Optimal`, (x, y, z) is an approximate primal-dual pair;
/// at `PrimalInfeasible`, (y, z) is a normalized infeasibility certificate
/// (⟨b,y⟩ = 1, Aᵀy + z ≈ 0, z ∈ K); at `DualInfeasible`, x is a normalized
/// unboundedness certificate (⟨c,x⟩ = −1, Ax ≈ 0, x ∈ K).
#[derive(Debug, Clone)]
pub struct ConeSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl ConeProgram {
    pub fn validate(&self) -> Result<()> {
        let n: usize = self.cones.iter().map(Cone::dim).sum();
        if n != self.c.len() || n != self.a.ncols() || self.b.len() != self.a.nrows() {
            return Err(Error::invalid(format!(
                "cone program dimension mismatch: cones {}, c {}, A {}×{}, b {}",
                n,
                self.c.len(),
                self.a.nrows(),
                self.a.ncols(),
                self.b.len()
            )));
        }
        let finite = self.c.iter().chain(self.b.iter()).chain(self.a.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("cone program contains non-finite data"));
        }
        Ok(())
    }

    /// Solve the program. Infeasibility and iteration exhaustion are reported
    /// through [`ConeSolution::status`], never as errors; only malformed input
    /// errors out.
    pub fn solve(&self, tol: &Tolerances) -> Result<ConeSolution> {
        self.validate()?;

        // Presolve 1: zero-cone coordinates are fixed at 0 — drop their columns.
        let mut keep_cols = Vec::with_capacity(self.c.len());
        let mut reduced_cones = Vec::new();
        let mut off = 0;
        for cone in &self.cones {
            let d = cone.dim();
            if !matches!(cone, Cone::Zero(_)) {
                keep_cols.extend(off..off + d);
                if d > 0 {
                    // merge adjacent nonnegative blocks to keep the block list short
                    if let (Cone::NonNeg(k), Some(Cone::NonNeg(prev))) =
                        (cone, reduced_cones.last_mut())
                    {
                        *prev += k;
                    } else {
                        reduced_cones.push(*cone);
                    }
                }
            }
            off += d;
        }
        let a1 = self.a.select_columns(keep_cols.iter());
        let c1 = DVector::from_iterator(keep_cols.len(), keep_cols.iter().map(|&j| self.c[j]));
        let p0 = a1.nrows();

        if keep_cols.is_empty() {
            // Everything is pinned at 0; feasibility is just b = 0.
            let feasible = p0 == 0 || self.b.amax() <= tol.feas_tol;
            let status =
                if feasible { SolveStatus::Optimal } else { SolveStatus::PrimalInfeasible };
            let y = if feasible || p0 == 0 {
                DVector::zeros(p0)
            } else {
                &self.b / self.b.norm_squared()
            };
            let x = DVector::zeros(self.c.len());
            let aty = self.a.transpose() * &y;
            let z = &self.c - &aty;
            return Ok(self.finalize(x, y, z, status, 0));
        }

        // Presolve 2: row-rank reduction. An orthonormal row basis (from the
        // SVD) replaces A when rows are dependent; inconsistent dependent rows
        // yield a primal infeasibility certificate directly.
        let (keep_sv, u_full) = if p0 == 0 {
            (Vec::new(), None)
        } else {
            let svd = nalgebra::SVD::new(a1.clone(), true, false);
            let sv = &svd.singular_values;
            let smax = sv.iter().fold(0.0f64, |m, &s| m.max(s));
            let rank_tol = 1e-12 * smax.max(1.0) * (p0.max(a1.ncols()) as f64);
            let keep: Vec<usize> =
                (0..sv.len()).filter(|&i| sv[i] > rank_tol).collect();
            (keep, Some(svd.u.expect("svd with u")))
        };
        let rank = keep_sv.len();
        let (a2, b2, u_r) = if rank == p0 {
            (a1.clone(), self.b.clone(), None)
        } else {
            let ur = u_full.as_ref().expect("p0 > 0 here").select_columns(keep_sv.iter());
            let proj = &ur * (ur.transpose() * &self.b);
            let resid = &self.b - &proj;
            if resid.amax() > 1e-9 * (1.0 + self.b.amax()) {
                // b has a component outside range(A): certificate y ∝ resid.
                let scale = self.b.dot(&resid);
                let y = &resid / scale;
                let z = DVector::zeros(self.c.len());
                return Ok(self.finalize(
                    DVector::zeros(self.c.len()),
                    y,
                    z,
                    SolveStatus::PrimalInfeasible,
                    0,
                ));
            }
            (ur.transpose() * &a1, ur.transpose() * &self.b, Some(ur))
        };

        let layout = ConeLayout::new(&reduced_cones);
        let out = solver::solve_ipm(&c1, &a2, &b2, &layout, tol);

        // Re-inflate to the original coordinates.
        let y1 = match &u_r {
            Some(ur) => ur * &out.y,
            None => out.y,
        };
        let mut x_full = DVector::zeros(self.c.len());
        let mut z_full = DVector::zeros(self.c.len());
        for (r, &j) in keep_cols.iter().enumerate() {
            x_full[j] = out.x[r];
            z_full[j] = out.z[r];
        }
        let aty = self.a.transpose() * &y1;
        let mut off = 0;
        for cone in &self.cones {
            if let Cone::Zero(k) = cone {
                for j in off..off + k {
                    z_full[j] = self.c[j] - aty[j];
                }
            }
            off += cone.dim();
        }
        Ok(self.finalize(x_full, y1, z_full, out.status, out.iterations))
    }

    fn finalize(
        &self,
        x: DVector<f64>,
        y: DVector<f64>,
        z: DVector<f64>,
        status: SolveStatus,
        iterations: usize,
    ) -> ConeSolution {
        let primal_objective = self.c.dot(&x);
        let dual_objective = self.b.dot(&y);
        let gap = (primal_objective - dual_objective).abs();
        ConeSolution { x, y, z, status, primal_objective, dual_objective, gap, iterations }
    }
}

/// Free-function spelling of [`ConeProgram::solve`].
pub fn solve(program: &ConeProgram, tol: &Tolerances) -> Result<ConeSolution> {
    program.solve(tol)
}
