//! Independent brute-force verification at desk scale: exact ℓ∞ Chebyshev
//! centers of polytopes by vertex enumeration, membership samplers for every
//! model set, and sampling-based lower bounds for worst-case errors and dual
//! norms.
//!
//! Everything here is sound one-sided evidence by construction: centers are
//! exact (per-coordinate midrange over an exhaustive vertex list), all other
//! outputs are certified lower bounds — samplers only ever emit certified
//! members of their sets, so maxima over samples can never exceed the true
//! suprema they estimate. Identical seeds give identical outputs bit-for-bit
//! regardless of thread count: work is split into fixed-size chunks with
//! per-chunk derived seeds and merged in chunk order.

use crate::cheb::{cheb_grid, cheb_series_eval};
use crate::error::{Error, Result};
use crate::measure::SignedMeasure;
use crate::quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Sampling effort descriptor: how many samples, from which seed.
#[derive(Debug, Clone, Copy)]
pub struct SampleBudget {
    pub count: usize,
    pub seed: u64,
}

impl SampleBudget {
    pub fn new(count: usize, seed: u64) -> Self {
        SampleBudget { count: count.max(1), seed }
    }
}

const CHUNK: usize = 256;

fn chunk_rng(seed: u64, chunk_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (chunk_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Generate `count` items in fixed-size chunks, one derived RNG per chunk,
/// evaluated in parallel and concatenated in chunk order (deterministic).
fn chunked_samples<T, F>(count: usize, seed: u64, gen: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let size = CHUNK.min(count - ci * CHUNK);
            let mut rng = chunk_rng(seed, ci);
            gen(&mut rng, size)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn unit_direction(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    // Box–Muller; retry the (measure-zero) degenerate draw.
    loop {
        let v = DVector::from_fn(d, |_, _| {
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        });
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

// ---------------------------------------------------------------------------
// Exact polytope oracles
// ---------------------------------------------------------------------------

/// All vertices of {f : Gf ≤ h} by exhaustive basis enumeration: every
/// invertible n-row subsystem is solved and kept if feasible (slack ≥ −1e−9).
/// Exact for bounded polytopes at desk scale; an empty result means the
/// polytope is empty or has no vertex.
pub fn vertex_enumerate(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let (rows, n) = (g.nrows(), g.ncols());
    if n == 0 {
        return Err(Error::invalid("vertex_enumerate: zero-dimensional space"));
    }
    if h.len() != rows {
        return Err(Error::invalid("vertex_enumerate: G and h row counts differ"));
    }
    let mut verts: Vec<DVector<f64>> = Vec::new();
    if rows < n {
        return Ok(verts);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let sub = g.select_rows(idx.iter());
        let rhs = DVector::from_iterator(n, idx.iter().map(|&i| h[i]));
        if let Some(x) = sub.clone().lu().solve(&rhs) {
            let exact = (&sub * &x - &rhs).amax() <= 1e-8 * (1.0 + rhs.amax());
            let feasible = exact && {
                let gx = g * &x;
                (0..rows).all(|i| gx[i] <= h[i] + 1e-9)
            };
            if feasible {
                verts.push(x);
            }
        }
        // advance to the next n-combination of row indices
        let mut i = n;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if idx[i] != i + rows - n {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break true;
            }
        };
        if !advanced {
            break;
        }
    }
    Ok(verts)
}

/// Exact Chebyshev center of {Qf : Gf ≤ h} in ℓ∞: the smallest enclosing
/// ℓ∞ ball of a bounded set has the per-coordinate midrange as center, so two
/// exact extreme values per coordinate (over the vertex list) suffice.
/// Requires a bounded, nonempty polytope with at least one vertex.
pub fn midrange_center_oracle(
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    q_rows: &[DVector<f64>],
) -> Result<(DVector<f64>, f64)> {
    if q_rows.is_empty() {
        return Err(Error::invalid("midrange_center_oracle: no quantity rows"));
    }
    for q in q_rows {
        if q.len() != g.ncols() {
            return Err(Error::invalid("midrange_center_oracle: quantity row length mismatch"));
        }
    }
    let verts = vertex_enumerate(g, h)?;
    if verts.is_empty() {
        return Err(Error::infeasible("midrange_center_oracle: polytope empty or vertex-free"));
    }
    let mut z = DVector::zeros(q_rows.len());
    let mut r = 0.0f64;
    for (k, q) in q_rows.iter().enumerate() {
        let vals: Vec<f64> = verts.iter().map(|v| q.dot(v)).collect();
        let hi = vals.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lo = vals.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        z[k] = 0.5 * (hi + lo);
        r = r.max(0.5 * (hi - lo));
    }
    Ok((z, r))
}

// ---------------------------------------------------------------------------
// Membership samplers
// ---------------------------------------------------------------------------

/// Hit-and-run sampler over {f : Gf ≤ h}. Rows that are tight at the start
/// point (implicit equalities, e.g. exact observations) restrict the walk to
/// their common null space. The polytope must be bounded along every sampled
/// direction.
#[derive(Debug, Clone)]
pub struct PolytopeSampler {
    g: DMatrix<f64>,
    h: DVector<f64>,
    start: DVector<f64>,
    dirs: DMatrix<f64>,
}

const BURN_IN: usize = 100;

impl PolytopeSampler {
    /// `start = None` derives a feasible interior point as the vertex average
    /// (exhaustive enumeration — desk-scale inputs only). A supplied start is
    /// checked for feasibility.
    pub fn new(
        g: DMatrix<f64>,
        h: DVector<f64>,
        start: Option<DVector<f64>>,
    ) -> Result<Self> {
        if g.nrows() != h.len() || g.ncols() == 0 {
            return Err(Error::invalid("polytope sampler: dimension mismatch"));
        }
        let start = match start {
            Some(x0) => {
                if x0.len() != g.ncols() {
                    return Err(Error::invalid("polytope sampler: start length mismatch"));
                }
                if (&g * &x0 - &h).max() > 1e-9 {
                    return Err(Error::infeasible("polytope sampler: start point infeasible"));
                }
                x0
            }
            None => {
                let verts = vertex_enumerate(&g, &h)?;
                if verts.is_empty() {
                    return Err(Error::infeasible("polytope sampler: no feasible start found"));
                }
                let mut avg = DVector::zeros(g.ncols());
                for v in &verts {
                    avg += v;
                }
                avg / verts.len() as f64
            }
        };
        // Directions span the null space of the rows that are (numerically)
        // tight at the start; those rows hold with equality on the whole set.
        let slack = &h - &g * &start;
        let hscale = 1.0 + h.amax();
        let tight: Vec<usize> =
            (0..g.nrows()).filter(|&i| slack[i] <= 1e-10 * hscale).collect();
        let dirs = if tight.is_empty() {
            DMatrix::identity(g.ncols(), g.ncols())
        } else {
            let e = g.select_rows(tight.iter());
            let ete = e.transpose() * &e;
            let eig = nalgebra::SymmetricEigen::new(ete);
            let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
            let null: Vec<usize> = (0..g.ncols())
                .filter(|&i| eig.eigenvalues[i] <= 1e-10 * lmax.max(1e-30))
                .collect();
            eig.eigenvectors.select_columns(null.iter())
        };
        Ok(PolytopeSampler { g, h, start, dirs })
    }

    pub fn start_point(&self) -> &DVector<f64> {
        &self.start
    }

    fn step(&self, x: &mut DVector<f64>, rng: &mut ChaCha8Rng) {
        if self.dirs.ncols() == 0 {
            return;
        }
        let dir = &self.dirs * unit_direction(rng, self.dirs.ncols());
        let (tmin, tmax) = self.feasible_range(x, &dir);
        if tmax <= tmin {
            return;
        }
        let u: f64 = rng.gen_range(1e-9..(1.0 - 1e-9));
        *x += dir * (tmin + u * (tmax - tmin));
    }

    /// Step range [tmin, tmax] keeping x + t·dir feasible; unbounded rays are
    /// clamped defensively (callers guarantee boundedness).
    fn feasible_range(&self, x: &DVector<f64>, dir: &DVector<f64>) -> (f64, f64) {
        let ad = &self.g * dir;
        let slack = &self.h - &self.g * x;
        let (mut tmin, mut tmax) = (-1e9f64, 1e9f64);
        for i in 0..ad.len() {
            if ad[i] > 1e-14 {
                tmax = tmax.min(slack[i] / ad[i]);
            } else if ad[i] < -1e-14 {
                tmin = tmin.max(slack[i] / ad[i]);
            }
        }
        (tmin.min(0.0), tmax.max(0.0))
    }

    /// Draw `budget.count` points. Each chunk runs an independent chain from
    /// the start point with a fixed burn-in.
    pub fn sample(&self, budget: &SampleBudget) -> Vec<DVector<f64>> {
        chunked_samples(budget.count, budget.seed, |rng, size| {
            let mut x = self.start.clone();
            for _ in 0..BURN_IN {
                self.step(&mut x, rng);
            }
            (0..size)
                .map(|_| {
                    self.step(&mut x, rng);
                    x.clone()
                })
                .collect()
        })
    }

    /// Push `from` to the boundary along the feasible projection of `dir`
    /// (a deterministic line maximization — sharpens sampled extremes).
    pub fn extremize(&self, from: &DVector<f64>, dir: &DVector<f64>) -> DVector<f64> {
        let proj = &self.dirs * (self.dirs.transpose() * dir);
        let n = proj.norm();
        if n <= 1e-12 {
            return from.clone();
        }
        let d = proj / n;
        let (_, tmax) = self.feasible_range(from, &d);
        from + d * (tmax * (1.0 - 1e-12))
    }
}

/// Grid-to-sup inflation constant for polynomials of degree ≤ `deg` sampled on
/// a Chebyshev-extrema grid of `grid_points` points: the true sup on [−1,1] is
/// at most the grid max times this factor.
pub fn cheb_grid_factor(deg: usize, grid_points: usize) -> f64 {
    assert!(grid_points >= deg + 2, "grid too coarse for certified sup bound");
    1.0 / (std::f64::consts::PI * deg as f64 / (2.0 * (grid_points - 1) as f64)).cos()
}

/// Inequality rows of a certified inner approximation of the coefficient set
/// {c : ‖Σ_j c_j T_{j−1}‖∞ ≤ bound}: |p(x_t)| ≤ bound/κ on a Chebyshev grid,
/// with κ the grid-to-sup factor, so every feasible c certifiably satisfies
/// the true sup bound.
pub fn poly_ball_rows(n: usize, grid: usize, bound: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if n == 0 || bound <= 0.0 {
        return Err(Error::invalid("poly_ball_rows: need n ≥ 1 and bound > 0"));
    }
    let kappa = cheb_grid_factor(n - 1, grid);
    let xs = cheb_grid(grid);
    let gpts = xs.len();
    let mut g = DMatrix::zeros(2 * gpts, n);
    let h = DVector::from_element(2 * gpts, bound / kappa);
    for (t, &x) in xs.iter().enumerate() {
        let mut tj_prev = 1.0;
        let mut tj = x;
        for j in 0..n {
            let v = if j == 0 {
                1.0
            } else if j == 1 {
                x
            } else {
                let next = 2.0 * x * tj - tj_prev;
                tj_prev = tj;
                tj = next;
                next
            };
            g[(t, j)] = v;
            g[(gpts + t, j)] = -v;
        }
    }
    Ok((g, h))
}

/// Sample Chebyshev-coefficient vectors of length `n` whose polynomials have
/// certified sup norm ≤ `bound`: random coefficients rescaled by the grid sup
/// times the grid-to-sup factor. Radii are biased toward the boundary, where
/// worst cases live.
pub fn sample_cheb_ball(n: usize, bound: f64, budget: &SampleBudget) -> Vec<DVector<f64>> {
    let grid = 4096;
    let kappa = cheb_grid_factor(n.saturating_sub(1), grid);
    let xs = cheb_grid(grid);
    chunked_samples(budget.count, budget.seed, |rng, size| {
        (0..size)
            .map(|_| {
                let c = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                let sup = xs
                    .iter()
                    .map(|&x| cheb_series_eval(c.as_slice(), x).abs())
                    .fold(0.0f64, f64::max);
                if sup == 0.0 {
                    return c;
                }
                let radius: f64 = rng.gen::<f64>().powf(0.25);
                c * (bound * radius / (sup * kappa))
            })
            .collect()
    })
}

/// Maximize `⟨q, x⟩` over `{x : Gx ≤ h}` by active-set projected ascent from a
/// feasible `start`: repeatedly project the objective onto the null space of
/// the tight rows, walk to the nearest blocking face, and drop working rows
/// whose multiplier turns negative. Every iterate stays feasible, so the final
/// objective value is always a valid lower bound on the maximum; at a clean
/// multiplier certificate it is the maximum.
pub fn polytope_climb(
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    q: &DVector<f64>,
    start: &DVector<f64>,
) -> DVector<f64> {
    let hscale = 1.0 + h.amax();
    let qnorm = q.norm();
    if qnorm <= 1e-300 {
        return start.clone();
    }
    let mut x = start.clone();
    for _ in 0..200 {
        let slack = h - g * &x;
        let tight: Vec<usize> =
            (0..g.nrows()).filter(|&i| slack[i] <= 1e-9 * hscale).collect();
        let mut work = tight;
        let d = 'ascent: loop {
            if work.is_empty() {
                break q.clone();
            }
            let e = g.select_rows(work.iter());
            let svd = nalgebra::SVD::new(e, true, true);
            let u = svd.u.as_ref().expect("svd requested u");
            let vt = svd.v_t.as_ref().expect("svd requested v_t");
            let smax = svd.singular_values.amax().max(1e-300);
            let mut d = q.clone();
            let mut lam: DVector<f64> = DVector::zeros(work.len());
            for i in 0..svd.singular_values.len() {
                let s = svd.singular_values[i];
                if s > 1e-12 * smax {
                    let vi = vt.row(i).transpose();
                    let coef = vi.dot(q);
                    d -= &vi * coef;
                    lam += u.column(i) * (coef / s);
                }
            }
            if d.norm() > 1e-9 * qnorm {
                break 'ascent d;
            }
            let mut jmin = 0;
            let mut lmin = f64::INFINITY;
            for (j, &l) in lam.iter().enumerate() {
                if l < lmin {
                    lmin = l;
                    jmin = j;
                }
            }
            if lmin >= -1e-9 * (1.0 + lam.amax()) {
                // q lies in the cone of the tight rows: KKT point.
                return x;
            }
            work.remove(jmin);
        };
        let dn = d.normalize();
        let gd = g * &dn;
        let mut t = f64::INFINITY;
        for i in 0..g.nrows() {
            if gd[i] > 1e-12 {
                t = t.min(slack[i].max(0.0) / gd[i]);
            }
        }
        if !t.is_finite() {
            t = 1e9 * hscale; // bounded sets never get here
        }
        x += dn * t;
    }
    x
}

/// Midrange oracle for the image of a data-consistent polynomial ball: build
/// the certified inner polytope of the coefficient ball (grid rows) stacked
/// with the observation bands, seed with consistent samples, and sharpen each
/// quantity coordinate's extremes with [`polytope_climb`]. Both ingredients
/// err low, so the returned radius is a valid lower bound on the exact
/// Chebyshev radius; with the 4096-point grid its slack is ~1e−6 at
/// desk-scale degrees.
pub fn polyball_midrange_oracle(
    n: usize,
    obs_rows: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: f64,
    q_rows: &DMatrix<f64>,
    budget: &SampleBudget,
) -> Result<(DVector<f64>, f64)> {
    if n == 0 || obs_rows.ncols() != n || q_rows.ncols() != n || q_rows.nrows() == 0 {
        return Err(Error::invalid("polyball_midrange_oracle: dimension mismatch"));
    }
    if obs_rows.nrows() != y.len() || !eta.is_finite() || eta < 0.0 {
        return Err(Error::invalid("polyball_midrange_oracle: bad observation data"));
    }
    let (gb, hb) = poly_ball_rows(n, 4096, 1.0)?;
    let m = obs_rows.nrows();
    let nb = gb.nrows();
    let mut g = DMatrix::zeros(nb + 2 * m, n);
    let mut h = DVector::zeros(nb + 2 * m);
    g.view_mut((0, 0), (nb, n)).copy_from(&gb);
    h.rows_mut(0, nb).copy_from(&hb);
    for i in 0..m {
        for j in 0..n {
            g[(nb + i, j)] = obs_rows[(i, j)];
            g[(nb + m + i, j)] = -obs_rows[(i, j)];
        }
        h[nb + i] = y[i] + eta;
        h[nb + m + i] = -y[i] + eta;
    }

    let pts: Vec<DVector<f64>> = sample_cheb_ball(n, 1.0, budget)
        .into_iter()
        .filter(|p| m == 0 || (obs_rows * p - y).amax() <= eta)
        .collect();
    if pts.is_empty() {
        return Err(Error::infeasible(
            "polyball_midrange_oracle: no sampled polynomial is consistent with the data",
        ));
    }

    let kq = q_rows.nrows();
    let mut z = DVector::zeros(kq);
    let mut r: f64 = 0.0;
    for k in 0..kq {
        let qk = q_rows.row(k).transpose();
        let mut extreme = [f64::NEG_INFINITY; 2];
        for (s, ext) in extreme.iter_mut().enumerate() {
            let dir = if s == 0 { qk.clone() } else { -&qk };
            // Climb from the few best sampled starts for this direction.
            let mut order: Vec<usize> = (0..pts.len()).collect();
            order.sort_by(|&a, &b| {
                dir.dot(&pts[b]).partial_cmp(&dir.dot(&pts[a])).expect("finite objectives")
            });
            for &idx in order.iter().take(3) {
                let top = polytope_climb(&g, &h, &dir, &pts[idx]);
                *ext = ext.max(dir.dot(&top));
            }
        }
        let (hi, lo) = (extreme[0], -extreme[1]);
        z[k] = 0.5 * (hi + lo);
        r = r.max(0.5 * (hi - lo));
    }
    Ok((z, r))
}

/// Sample noise vectors with ‖e‖_p ≤ eta for p ∈ {1, 2, ∞}.
pub fn sample_lp_ball(m: usize, p: f64, eta: f64, budget: &SampleBudget) -> Vec<DVector<f64>> {
    chunked_samples(budget.count, budget.seed, |rng, size| {
        (0..size)
            .map(|_| {
                let u = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0_f64));
                if eta == 0.0 {
                    return DVector::zeros(m);
                }
                if p.is_infinite() {
                    return u * eta;
                }
                let nrm = lp_norm(&u, p);
                if nrm == 0.0 {
                    return DVector::zeros(m);
                }
                let radial: f64 = rng.gen::<f64>().powf(1.0 / m as f64);
                u * (eta * radial / nrm)
            })
            .collect()
    })
}

fn lp_norm(v: &DVector<f64>, p: f64) -> f64 {
    if p.is_infinite() {
        v.amax()
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else {
        v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Deterministic adversarial candidates on the ℓp sphere of radius eta: sign
/// corners for p = ∞, scaled basis vectors for p = 1, both families (norm-
/// corrected) for p = 2, plus the zero vector.
pub fn noise_corner_candidates(m: usize, p: f64, eta: f64) -> Vec<DVector<f64>> {
    let mut out = vec![DVector::zeros(m)];
    if eta == 0.0 || m == 0 {
        return out;
    }
    let sign_patterns: Vec<DVector<f64>> = if m <= 10 {
        (0..(1usize << m))
            .map(|bits| {
                DVector::from_fn(m, |i, _| if bits >> i & 1 == 1 { 1.0 } else { -1.0 })
            })
            .collect()
    } else {
        (0..128usize)
            .map(|bits| {
                DVector::from_fn(m, |i, _| if bits >> (i % 7) & 1 == 1 { 1.0 } else { -1.0 })
            })
            .collect()
    };
    if p.is_infinite() {
        out.extend(sign_patterns.into_iter().map(|s| s * eta));
    } else {
        for i in 0..m {
            let mut e = DVector::zeros(m);
            e[i] = eta;
            out.push(e.clone());
            e[i] = -eta;
            out.push(e);
        }
        if p == 2.0 {
            let scale = eta / (m as f64).sqrt();
            out.extend(sign_patterns.into_iter().map(|s| s * scale));
        }
    }
    out
}

/// Model-set descriptors accepted by [`sample_model`].
pub enum SetDescriptor<'a> {
    /// {f : Gf ≤ h}, hit-and-run from `start` (or the vertex average).
    Polytope {
        g: &'a DMatrix<f64>,
        h: &'a DVector<f64>,
        start: Option<&'a DVector<f64>>,
    },
    /// Unit sup-norm ball of polynomials of degree < n (Chebyshev coefficients).
    PolynomialBall { n: usize },
    /// v + g with v-coefficients in [−1,1]^v_dim and perturbation g of degree
    /// < perturb_deg with certified sup ≤ eps; samples are the concatenation
    /// [v-coefficients | perturbation Chebyshev coefficients].
    Approximability { v_dim: usize, perturb_deg: usize, eps: f64 },
    /// ℓp-ball noise {e : ‖e‖_p ≤ eta}.
    NoiseLp { m: usize, p: f64, eta: f64 },
}

/// Draw certified members of the described set.
pub fn sample_model(desc: &SetDescriptor<'_>, budget: &SampleBudget) -> Result<Vec<DVector<f64>>> {
    match desc {
        SetDescriptor::Polytope { g, h, start } => {
            let sampler = PolytopeSampler::new((*g).clone(), (*h).clone(), start.cloned())?;
            Ok(sampler.sample(budget))
        }
        SetDescriptor::PolynomialBall { n } => {
            if *n == 0 {
                return Err(Error::invalid("sample_model: polynomial ball needs n ≥ 1"));
            }
            Ok(sample_cheb_ball(*n, 1.0, budget))
        }
        SetDescriptor::Approximability { v_dim, perturb_deg, eps } => {
            if *eps < 0.0 {
                return Err(Error::invalid("sample_model: eps must be ≥ 0"));
            }
            let perts = if *perturb_deg == 0 {
                Vec::new()
            } else {
                sample_cheb_ball(*perturb_deg, (*eps).max(0.0), budget)
            };
            let vs = chunked_samples(budget.count, budget.seed ^ 0x5151_5151, |rng, size| {
                (0..size)
                    .map(|_| DVector::from_fn(*v_dim, |_, _| rng.gen_range(-1.0..1.0_f64)))
                    .collect::<Vec<_>>()
            });
            Ok(vs
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut s = DVector::zeros(v_dim + perturb_deg);
                    s.rows_mut(0, *v_dim).copy_from(&v);
                    if *perturb_deg > 0 {
                        s.rows_mut(*v_dim, *perturb_deg).copy_from(&perts[i]);
                    }
                    s
                })
                .collect())
        }
        SetDescriptor::NoiseLp { m, p, eta } => {
            if *eta < 0.0 || !(*p == 1.0 || *p == 2.0 || p.is_infinite()) {
                return Err(Error::invalid("sample_model: noise needs eta ≥ 0, p ∈ {1,2,∞}"));
            }
            Ok(sample_lp_ball(*m, *p, *eta, budget))
        }
    }
}

// ---------------------------------------------------------------------------
// Sampling lower bounds
// ---------------------------------------------------------------------------

/// Lower bound on sup over (f, e) of ‖Q(f) − R(L(f)+e)‖∞ by evaluating at
/// most `max_pairs` member/noise pairs (full cross product when it fits,
/// a deterministic interleaved sweep otherwise). A certified lower bound:
/// every evaluated pair lies in the sets the samples came from.
pub fn worst_case_error_oracle(
    recover: &(dyn Fn(&DVector<f64>) -> DVector<f64> + Sync),
    quantity: &(dyn Fn(&DVector<f64>) -> DVector<f64> + Sync),
    observe: &(dyn Fn(&DVector<f64>) -> DVector<f64> + Sync),
    members: &[DVector<f64>],
    noises: &[DVector<f64>],
    max_pairs: usize,
) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let zero_noise = [DVector::zeros(observe(&members[0]).len())];
    let noises: &[DVector<f64>] = if noises.is_empty() { &zero_noise } else { noises };
    let me = noises.len();
    let per_member = (max_pairs / members.len()).clamp(1, me);
    members
        .par_chunks(64)
        .enumerate()
        .map(|(chunk_ix, chunk)| {
            let mut worst = 0.0f64;
            for (off, f) in chunk.iter().enumerate() {
                let i = chunk_ix * 64 + off;
                let qf = quantity(f);
                let lf = observe(f);
                for t in 0..per_member {
                    // interleaved deterministic sweep over the noise list
                    let e = &noises[(i * 31 + t * 97) % me];
                    let err = (&qf - recover(&(&lf + e))).amax();
                    worst = worst.max(err);
                }
            }
            worst
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Lower bound on the total variation of ν: exact for purely atomic measures
/// (the sign-matching test function attains Σ|wᵢ|), otherwise the best of a
/// sign-matching piecewise-linear candidate (sup ≤ 1 exactly, integrated
/// segment-by-segment) and `budget.count` random rescaled polynomials. The
/// measure's quadrature budget is subtracted from polynomial candidates so the
/// bound stays one-sided.
pub fn dual_norm_oracle(nu: &SignedMeasure, budget: &SampleBudget) -> f64 {
    let atom_sum: f64 = nu.atoms().iter().map(|&(_, w)| w.abs()).sum();
    let Some(dens) = nu.density() else {
        return atom_sum;
    };

    // Candidate 1: piecewise-linear interpolation of the density's sign on a
    // fine uniform grid, with a narrow spike of the matching sign at every
    // atom. |candidate| ≤ 1 holds exactly (node values are in [−1, 1]).
    let segs = 2048usize;
    let mut nodes: Vec<f64> = (0..=segs).map(|i| -1.0 + 2.0 * i as f64 / segs as f64).collect();
    let spike = 1e-6;
    for &(x, _) in nu.atoms() {
        for cand in [x - spike, x, x + spike] {
            if (-1.0..=1.0).contains(&cand) {
                nodes.push(cand);
            }
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let sgn = |v: f64| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let vals: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            match nu.atoms().iter().find(|&&(ax, _)| (ax - x).abs() <= spike * 0.5) {
                Some(&(_, w)) => sgn(w),
                None => sgn(dens.eval(x)),
            }
        })
        .collect();
    let pl = |x: f64| -> f64 {
        match nodes.binary_search_by(|n| n.total_cmp(&x)) {
            Ok(i) => vals[i],
            Err(i) => {
                if i == 0 {
                    vals[0]
                } else if i >= nodes.len() {
                    vals[nodes.len() - 1]
                } else {
                    let t = (x - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
                    vals[i - 1] + t * (vals[i] - vals[i - 1])
                }
            }
        }
    };
    // Segment-wise quadrature: the integrand is (linear) × (smooth density),
    // so a fixed low-order rule per segment is accurate; a flat safety margin
    // keeps the bound one-sided.
    let rule = GaussLegendre::rule(8);
    let mut pl_integral: f64 = nu.atoms().iter().map(|&(x, w)| w * pl(x)).sum();
    for w in nodes.windows(2) {
        if w[1] > w[0] {
            pl_integral += rule.integrate_on(w[0], w[1], |x| pl(x) * dens.eval(x));
        }
    }
    let mut best = pl_integral.abs() - 1e-10;

    // Candidate family 2: random Chebyshev polynomials with certified sup ≤ 1.
    let deg = 24usize;
    let polys = sample_cheb_ball(deg, 1.0, budget);
    let poly_best = polys
        .par_iter()
        .map(|c| nu.apply(|x| cheb_series_eval(c.as_slice(), x)).abs())
        .reduce(|| 0.0, f64::max);
    best = best.max(poly_best - dens.budget);
    best.max(0.0)
}
