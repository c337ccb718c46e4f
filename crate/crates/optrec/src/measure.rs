//! Signed measures on [-1, 1]: finitely many atoms plus an optional density
//! integrated by a fixed Gauss–Legendre rule with a declared error budget.
//!
//! One type represents every functional in the toolkit — observation
//! functionals, quantities of interest, and the signed residuals whose total
//! variation drives the optimality certificates.

use crate::cheb::{cheb_eval_unchecked, cheb_series_eval};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const DEFAULT_QUAD_NODES: usize = 256;

/// Atom-merge tolerance: two atom locations closer than this are the same point.
const ATOM_MERGE_TOL: f64 = 1e-12;

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Density part of a signed measure: a scalar function on [-1, 1] paired with a
/// fixed quadrature rule and a declared error budget. The budget bounds the
/// quadrature error of `∫ f·density` for smooth test functions with sup ≤ 1.
#[derive(Clone)]
pub struct Density {
    f: DensityFn,
    spec: Option<DensitySpec>,
    pub quad_nodes: usize,
    pub budget: f64,
}

impl std::fmt::Debug for Density {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("Density")
            .field("spec", &self.spec)
            .field("quad_nodes", &self.quad_nodes)
            .field("budget", &self.budget)
            .finish()
    }
}

impl Density {
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// A signed Borel measure on [-1, 1] in atoms-plus-density form.
///
/// Invariants established at construction: atom locations lie in [-1, 1] and are
/// pairwise distinct (coincident locations are merged by summing weights), and
/// the total variation is finite.
#[derive(Debug, Clone)]
pub struct SignedMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<Density>,
}

impl SignedMeasure {
    pub fn zero() -> Self {
        SignedMeasure { atoms: Vec::new(), density: None }
    }

    /// A single atom of weight `w` at `x`.
    pub fn dirac(x: f64, w: f64) -> Result<Self> {
        Self::from_atoms(vec![(x, w)])
    }

    pub fn from_atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let mut m = SignedMeasure { atoms: Vec::new(), density: None };
        m.extend_atoms(atoms)?;
        Ok(m)
    }

    /// Pure density measure. With `budget = None` the budget is estimated by
    /// comparing the declared rule against a doubled rule on a few bounded test
    /// integrands.
    pub fn from_density(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        quad_nodes: usize,
        budget: Option<f64>,
    ) -> Result<Self> {
        Self::from_density_arc(Arc::new(f), None, quad_nodes, budget)
    }

    fn from_density_arc(
        f: DensityFn,
        spec: Option<DensitySpec>,
        quad_nodes: usize,
        budget: Option<f64>,
    ) -> Result<Self> {
        if quad_nodes == 0 {
            return Err(Error::invalid("density: quadrature rule needs at least one node"));
        }
        let budget = budget.unwrap_or_else(|| estimate_budget(&f, quad_nodes));
        if !budget.is_finite() {
            return Err(Error::invalid("density: non-finite quadrature budget"));
        }
        Ok(SignedMeasure {
            atoms: Vec::new(),
            density: Some(Density { f, spec, quad_nodes, budget }),
        })
    }

    /// Lebesgue measure on [-1, 1] (density ≡ 1).
    pub fn lebesgue() -> Self {
        Self::from_density_arc(
            Arc::new(|_| 1.0),
            Some(DensitySpec { kind: "poly".into(), params: vec![1.0] }),
            DEFAULT_QUAD_NODES,
            Some(1e-14),
        )
        .expect("constant density is valid")
    }

    pub fn with_atoms(mut self, atoms: Vec<(f64, f64)>) -> Result<Self> {
        self.extend_atoms(atoms)?;
        Ok(self)
    }

    fn extend_atoms(&mut self, atoms: Vec<(f64, f64)>) -> Result<()> {
        for (x, w) in atoms {
            if !(-1.0..=1.0).contains(&x) {
                return Err(Error::invalid(format!("atom location {x} outside [-1, 1]")));
            }
            if !w.is_finite() {
                return Err(Error::invalid("atom weight not finite"));
            }
            match self.atoms.iter_mut().find(|(loc, _)| (loc - x).abs() <= ATOM_MERGE_TOL) {
                Some((_, weight)) => *weight += w,
                None => self.atoms.push((x, w)),
            }
        }
        self.atoms.retain(|&(_, w)| w != 0.0);
        self.atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn is_purely_atomic(&self) -> bool {
        self.density.is_none()
    }

    /// `Σ coef_t · ν_t` as a new measure. Atoms at coincident locations merge;
    /// densities combine into a closure over the term list. The combined rule
    /// uses the largest node count; budgets add with |coef| scaling.
    pub fn linear_combination(terms: &[(f64, &SignedMeasure)]) -> Result<Self> {
        let mut out = SignedMeasure::zero();
        let atom_terms: Vec<(f64, f64)> = terms
            .iter()
            .flat_map(|(c, m)| m.atoms.iter().map(move |&(x, w)| (x, c * w)))
            .collect();
        out.extend_atoms(atom_terms)?;

        let dens: Vec<(f64, Density)> = terms
            .iter()
            .filter_map(|(c, m)| m.density.clone().map(|d| (*c, d)))
            .collect();
        if !dens.is_empty() {
            let quad_nodes = dens.iter().map(|(_, d)| d.quad_nodes).max().unwrap();
            let budget = dens.iter().map(|(c, d)| c.abs() * d.budget).sum::<f64>();
            let parts: Vec<(f64, DensityFn)> = dens.into_iter().map(|(c, d)| (c, d.f)).collect();
            out.density = Some(Density {
                f: Arc::new(move |x| parts.iter().map(|(c, f)| c * f(x)).sum()),
                spec: None,
                quad_nodes,
                budget,
            });
        }
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::linear_combination(&[(c, self)])
    }

    /// Atom sum plus quadrature of `f · density`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        let atom_part: f64 = self.atoms.iter().map(|&(x, w)| w * f(x)).sum();
        let dens_part = match &self.density {
            Some(d) => GaussLegendre::rule(d.quad_nodes).integrate(|x| f(x) * d.eval(x)),
            None => 0.0,
        };
        atom_part + dens_part
    }

    /// Chebyshev moments `∫ T_{k-1} dν` for `k = 1..=n`.
    pub fn moments(&self, n: usize) -> Result<MomentVector> {
        if n == 0 {
            return Err(Error::invalid("moments: truncation level must be ≥ 1"));
        }
        let mut entries = DVector::zeros(n);
        for &(x, w) in &self.atoms {
            for k in 0..n {
                entries[k] += w * cheb_eval_unchecked(k, x);
            }
        }
        if let Some(d) = &self.density {
            let rule = GaussLegendre::rule(d.quad_nodes);
            // One density sweep; Chebyshev recurrence advanced per node.
            let mut t_prev = vec![1.0; rule.nodes.len()];
            let mut t_cur: Vec<f64> = rule.nodes.clone();
            let g: Vec<f64> = rule.nodes.iter().map(|&x| d.eval(x)).collect();
            for k in 0..n {
                let mut acc = 0.0;
                for (i, (&w, &gv)) in rule.weights.iter().zip(&g).enumerate() {
                    acc += w * gv * t_prev[i];
                }
                entries[k] += acc;
                for i in 0..rule.nodes.len() {
                    let next = 2.0 * rule.nodes[i] * t_cur[i] - t_prev[i];
                    t_prev[i] = t_cur[i];
                    t_cur[i] = next;
                }
            }
        }
        Ok(MomentVector { entries, budget: self.density.as_ref().map_or(0.0, |d| d.budget) })
    }

    /// Total variation `Σ|atom weights| + ∫|density|`, reported with a quadrature
    /// error budget. The density integral is split at detected sign changes so
    /// each piece is smooth for the Gauss rule; the budget is the coarse/fine
    /// refinement discrepancy plus a floating-point floor.
    pub fn tv_norm(&self) -> TvNorm {
        let atom_part: f64 = self.atoms.iter().map(|&(_, w)| w.abs()).sum();
        let Some(d) = &self.density else {
            return TvNorm { value: atom_part, budget: 0.0 };
        };
        let cuts = sign_change_points(|x| d.eval(x), 4 * d.quad_nodes.max(128));
        let coarse_rule = GaussLegendre::rule(d.quad_nodes);
        let fine_rule = GaussLegendre::rule(2 * d.quad_nodes);
        let mut coarse = 0.0;
        let mut fine = 0.0;
        let mut lo = -1.0;
        for &hi in cuts.iter().chain(std::iter::once(&1.0)) {
            if hi > lo {
                coarse += coarse_rule.integrate_on(lo, hi, |x| d.eval(x).abs());
                fine += fine_rule.integrate_on(lo, hi, |x| d.eval(x).abs());
                lo = hi;
            }
        }
        let value = atom_part + fine;
        let budget = (fine - coarse).abs() + 1e-15 * (1.0 + value) + cuts.len() as f64 * 1e-16;
        TvNorm { value, budget }
    }

    /// Serializable description, available when every part was built from specs.
    pub fn to_spec(&self) -> Result<MeasureSpec> {
        let density = match &self.density {
            None => None,
            Some(d) => Some(
                d.spec
                    .clone()
                    .ok_or_else(|| Error::invalid("measure density has no serializable form"))?,
            ),
        };
        Ok(MeasureSpec {
            atoms: self.atoms.clone(),
            density,
            quad_nodes: self.density.as_ref().map(|d| d.quad_nodes),
        })
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        let mut m = match &spec.density {
            None => SignedMeasure::zero(),
            Some(ds) => {
                let f = ds.build()?;
                Self::from_density_arc(
                    f,
                    Some(ds.clone()),
                    spec.quad_nodes.unwrap_or(DEFAULT_QUAD_NODES),
                    None,
                )?
            }
        };
        m.extend_atoms(spec.atoms.clone())?;
        Ok(m)
    }
}

/// Moments `∫ T_{k-1} dν`, `k = 1..=N`, in the Chebyshev basis of the first kind.
#[derive(Debug, Clone)]
pub struct MomentVector {
    pub entries: DVector<f64>,
    /// Per-entry quadrature error bound inherited from the measure.
    pub budget: f64,
}

/// Total-variation value with its quadrature error budget.
#[derive(Debug, Clone, Copy)]
pub struct TvNorm {
    pub value: f64,
    pub budget: f64,
}

/// Spec-level operations (free-function spellings of the method API).
pub fn moments(nu: &SignedMeasure, n: usize) -> Result<MomentVector> {
    nu.moments(n)
}

pub fn tv_norm(nu: &SignedMeasure) -> TvNorm {
    nu.tv_norm()
}

pub fn apply_functional(nu: &SignedMeasure, f: impl Fn(f64) -> f64) -> f64 {
    nu.apply(f)
}

/// Locations where the density changes sign, found by bracketing on a uniform
/// grid and bisection. Returned sorted, strictly inside (-1, 1).
fn sign_change_points(g: impl Fn(f64) -> f64, grid: usize) -> Vec<f64> {
    let n = grid.max(8);
    let xs: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut cuts = Vec::new();
    for i in 0..n {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            if xs[i] > -1.0 {
                cuts.push(xs[i]);
            }
            continue;
        }
        if a * b < 0.0 {
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            let mut flo = a;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = g(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    cuts
}

/// Budget heuristic: refinement discrepancy over a few bounded test integrands.
fn estimate_budget(f: &DensityFn, quad_nodes: usize) -> f64 {
    let coarse = GaussLegendre::rule(quad_nodes);
    let fine = GaussLegendre::rule(2 * quad_nodes);
    let tests: [fn(f64) -> f64; 4] = [
        |_| 1.0,
        |x| x,
        |x| cheb_eval_unchecked(8, x),
        |x| cheb_eval_unchecked(17, x),
    ];
    let mut worst = 0.0f64;
    for t in tests {
        let a = coarse.integrate(|x| t(x) * f(x));
        let b = fine.integrate(|x| t(x) * f(x));
        worst = worst.max((a - b).abs());
    }
    let scale = fine.integrate(|x| f(x).abs());
    4.0 * worst + 1e-14 * (1.0 + scale.abs())
}

/// JSON form of a signed measure:
/// `{"atoms":[[x,w],...], "density":{"kind":...,"params":[...]}, "quad_nodes":n}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_nodes: Option<usize>,
}

/// Density taxonomy:
/// - `"sin"`, params `[ω]` / `[ω, A]` / `[ω, A, φ]`: `A·sin(ωπx + φ)`;
/// - `"cos"`: same parameters with cosine;
/// - `"poly"`, params = Chebyshev coefficients `[c_0, c_1, ...]`: `Σ c_k T_k(x)`;
/// - `"samples"`, params = K ≥ 2 values at equispaced points, linear in between.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DensitySpec {
    pub kind: String,
    pub params: Vec<f64>,
}

impl DensitySpec {
    pub fn sin(omega: f64) -> Self {
        DensitySpec { kind: "sin".into(), params: vec![omega] }
    }

    pub fn cheb_coeffs(coeffs: Vec<f64>) -> Self {
        DensitySpec { kind: "poly".into(), params: coeffs }
    }

    pub fn build(&self) -> Result<DensityFn> {
        let p = self.params.clone();
        match self.kind.as_str() {
            "sin" | "cos" => {
                if p.is_empty() {
                    return Err(Error::invalid(format!("density kind {:?} needs params [omega]", self.kind)));
                }
                let omega = p[0];
                let amp = p.get(1).copied().unwrap_or(1.0);
                let phase = p.get(2).copied().unwrap_or(0.0);
                let is_sin = self.kind == "sin";
                Ok(Arc::new(move |x| {
                    let t = omega * std::f64::consts::PI * x + phase;
                    amp * if is_sin { t.sin() } else { t.cos() }
                }))
            }
            "poly" => {
                if p.is_empty() {
                    return Err(Error::invalid("density kind \"poly\" needs Chebyshev coefficients"));
                }
                Ok(Arc::new(move |x| cheb_series_eval(&p, x)))
            }
            "samples" => {
                if p.len() < 2 {
                    return Err(Error::invalid("density kind \"samples\" needs at least two values"));
                }
                Ok(Arc::new(move |x| {
                    let k = p.len() - 1;
                    let t = (x + 1.0) / 2.0 * k as f64;
                    let i = (t.floor() as usize).min(k - 1);
                    let frac = t - i as f64;
                    p[i] * (1.0 - frac) + p[i + 1] * frac
                }))
            }
            other => Err(Error::invalid(format!("unknown density kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::toeplitz;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn sin_density(omega: f64) -> SignedMeasure {
        SignedMeasure::from_spec(&MeasureSpec {
            atoms: vec![],
            density: Some(DensitySpec::sin(omega)),
            quad_nodes: Some(DEFAULT_QUAD_NODES),
        })
        .unwrap()
    }

    #[test]
    fn dirac_moments() {
        let x0 = 0.37;
        let m = SignedMeasure::dirac(x0, 1.0).unwrap().moments(3).unwrap();
        assert_abs_diff_eq!(m.entries[0], 1.0);
        assert_abs_diff_eq!(m.entries[1], x0);
        assert_abs_diff_eq!(m.entries[2], 2.0 * x0 * x0 - 1.0, epsilon = 1e-15);
        assert_eq!(m.budget, 0.0);
    }

    #[test]
    fn lebesgue_moments() {
        let m = SignedMeasure::lebesgue().moments(3).unwrap();
        assert_abs_diff_eq!(m.entries[0], 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m.entries[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.entries[2], -2.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn sin_moments_match_refined_quadrature_oracle() {
        // Independent oracle: the same integrals at 10× the node count.
        let nu = sin_density(1.0);
        let m = nu.moments(8).unwrap();
        let oracle = GaussLegendre::rule(10 * DEFAULT_QUAD_NODES);
        for k in 0..8 {
            let want = oracle
                .integrate(|x| cheb_eval_unchecked(k, x) * (std::f64::consts::PI * x).sin());
            assert_abs_diff_eq!(m.entries[k], want, epsilon = 1e-10);
            assert!(m.entries[k].abs() <= nu.tv_norm().value + 1e-12);
        }
    }

    #[test]
    fn tv_norm_atoms() {
        let one = SignedMeasure::dirac(0.3, 1.0).unwrap();
        assert_abs_diff_eq!(one.tv_norm().value, 1.0);
        let two = SignedMeasure::from_atoms(vec![(0.3, 1.0), (-0.5, -1.0)]).unwrap();
        assert_abs_diff_eq!(two.tv_norm().value, 2.0);
        assert_eq!(two.atoms().len(), 2);
    }

    #[test]
    fn tv_norm_sin_density_is_four_over_pi() {
        let tv = sin_density(1.0).tv_norm();
        assert_abs_diff_eq!(tv.value, 4.0 / std::f64::consts::PI, epsilon = 1e-12);
        assert!(tv.budget < 1e-10, "budget too loose: {}", tv.budget);
    }

    #[test]
    fn tv_norm_handles_many_kinks() {
        // |sin(5πx)| integrates to 10·(2/(5π)) = 4/π as well.
        let tv = sin_density(5.0).tv_norm();
        assert_abs_diff_eq!(tv.value, 4.0 / std::f64::consts::PI, epsilon = 1e-11);
    }

    #[test]
    fn apply_functional_values() {
        let d = SignedMeasure::dirac(0.2, 1.0).unwrap();
        assert_abs_diff_eq!(d.apply(|x| x), 0.2);
        assert_abs_diff_eq!(SignedMeasure::lebesgue().apply(|_| 1.0), 2.0, epsilon = 1e-13);

        // Refined-quadrature oracle for a smooth density × polynomial pair.
        let nu = sin_density(2.0);
        let got = nu.apply(|x| cheb_eval_unchecked(3, x));
        let want = GaussLegendre::rule(10 * DEFAULT_QUAD_NODES)
            .integrate(|x| cheb_eval_unchecked(3, x) * (2.0 * std::f64::consts::PI * x).sin());
        assert_abs_diff_eq!(got, want, epsilon = 1e-11);
    }

    #[test]
    fn moments_linear_on_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = SignedMeasure::from_atoms(vec![
                (rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0)),
                (rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0)),
            ])
            .unwrap();
            let b = sin_density(rng.gen_range(0.5..3.0));
            let sum = SignedMeasure::linear_combination(&[(1.0, &a), (1.0, &b)]).unwrap();
            let (ma, mb, ms) =
                (a.moments(9).unwrap(), b.moments(9).unwrap(), sum.moments(9).unwrap());
            for k in 0..9 {
                assert_abs_diff_eq!(ms.entries[k], ma.entries[k] + mb.entries[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn nonneg_measure_has_psd_toeplitz_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let atoms: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0)))
                .collect();
            let shift: f64 = rng.gen_range(1.1..2.0);
            let nu = SignedMeasure::from_density(move |x| shift + (3.1 * x).sin(), 256, None)
                .unwrap()
                .with_atoms(atoms)
                .unwrap();
            let m = nu.moments(32).unwrap();
            let t = toeplitz(m.entries.as_slice()).unwrap();
            let eig = t.symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l >= -1e-9), "min eig {:?}", eig.min());
        }
    }

    #[test]
    fn atoms_merge_and_validate() {
        let m = SignedMeasure::from_atoms(vec![(0.5, 1.0), (0.5, 2.0), (-0.25, 1.0)]).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert_abs_diff_eq!(m.tv_norm().value, 4.0);
        assert!(SignedMeasure::dirac(1.5, 1.0).is_err());
        // exact cancellation drops the atom
        let z = SignedMeasure::from_atoms(vec![(0.1, 1.0), (0.1, -1.0)]).unwrap();
        assert!(z.atoms().is_empty());
    }

    #[test]
    fn linear_combination_residual() {
        // ρ − 1·ρ = 0 for a mixed measure.
        let rho = sin_density(1.5).with_atoms(vec![(0.4, 2.0)]).unwrap();
        let resid = SignedMeasure::linear_combination(&[(1.0, &rho), (-1.0, &rho)]).unwrap();
        let tv = resid.tv_norm();
        assert!(tv.value <= 1e-13, "tv of cancelled measure: {}", tv.value);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"atoms":[[0.25,1.5]],"density":{"kind":"sin","params":[2.0]},"quad_nodes":128}"#;
        let spec: MeasureSpec = serde_json::from_str(text).unwrap();
        let m = SignedMeasure::from_spec(&spec).unwrap();
        assert_eq!(m.density().unwrap().quad_nodes, 128);
        let back = m.to_spec().unwrap();
        assert_eq!(back, spec);
        assert!(DensitySpec { kind: "fourier".into(), params: vec![] }.build().is_err());
    }

    #[test]
    fn samples_density_interpolates() {
        let ds = DensitySpec { kind: "samples".into(), params: vec![0.0, 1.0, 0.0] };
        let f = ds.build().unwrap();
        assert_abs_diff_eq!(f(-1.0), 0.0);
        assert_abs_diff_eq!(f(0.0), 1.0);
        assert_abs_diff_eq!(f(-0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f(1.0), 0.0);
    }
}
