//! Cone blocks, scaled-vectorized symmetric matrices, Jordan algebra, and
//! Nesterov–Todd scalings — the per-block machinery of the interior-point
//! solver.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// One block of the cone product. `Psd(d)` stands for d×d symmetric matrices
/// in scaled-vectorized form and occupies d(d+1)/2 coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    NonNeg(usize),
    Soc(usize),
    Psd(usize),
}

impl Cone {
    /// Number of coordinates the block occupies.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(k) | Cone::NonNeg(k) | Cone::Soc(k) => k,
            Cone::Psd(d) => svec_len(d),
        }
    }

    /// Barrier degree of the block.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Zero(_) => 0,
            Cone::NonNeg(k) => k,
            Cone::Soc(k) => usize::from(k > 0),
            Cone::Psd(d) => d,
        }
    }
}

pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Matrix side length for a scaled-vectorized length, if one exists.
pub fn svec_side(len: usize) -> Option<usize> {
    let mut d = 0;
    while svec_len(d) < len {
        d += 1;
    }
    (svec_len(d) == len).then_some(d)
}

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Scaled vectorization: column-major upper triangle with off-diagonal
/// entries multiplied by √2, so that ⟨svec(U), svec(V)⟩ = tr(UV).
pub fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "svec needs a square matrix");
    let mut out = DVector::zeros(svec_len(d));
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            out[k] = if i == j { m[(i, j)] } else { SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]) };
            k += 1;
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64]) -> DMatrix<f64> {
    let d = svec_side(v.len()).expect("smat: length is not d(d+1)/2");
    let mut out = DMatrix::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            if i == j {
                out[(i, j)] = v[k];
            } else {
                let t = v[k] / SQRT2;
                out[(i, j)] = t;
                out[(j, i)] = t;
            }
            k += 1;
        }
    }
    out
}

/// Cone product layout: blocks plus their coordinate offsets.
#[derive(Debug, Clone)]
pub struct ConeLayout {
    pub cones: Vec<Cone>,
    pub offsets: Vec<usize>,
    pub total: usize,
}

impl ConeLayout {
    pub fn new(cones: &[Cone]) -> Self {
        let mut offsets = Vec::with_capacity(cones.len());
        let mut total = 0;
        for c in cones {
            offsets.push(total);
            total += c.dim();
        }
        ConeLayout { cones: cones.to_vec(), offsets, total }
    }

    pub fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    /// Interior point e (block identity elements).
    pub fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.total);
        for (c, &off) in self.cones.iter().zip(&self.offsets) {
            match *c {
                Cone::Zero(_) => {}
                Cone::NonNeg(k) => e.rows_mut(off, k).fill(1.0),
                Cone::Soc(k) => {
                    if k > 0 {
                        e[off] = 1.0;
                    }
                }
                Cone::Psd(d) => {
                    let mut k = 0;
                    for j in 0..d {
                        for i in 0..=j {
                            if i == j {
                                e[off + k] = 1.0;
                            }
                            k += 1;
                        }
                    }
                }
            }
        }
        e
    }

    /// Euclidean-ish distance from v to the cone product, for certificates:
    /// per block the worst constraint violation, maximized over blocks.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        for (c, &off) in self.cones.iter().zip(&self.offsets) {
            let s = v.rows(off, c.dim());
            let d = match *c {
                Cone::Zero(_) => s.amax(),
                Cone::NonNeg(_) => s.iter().fold(0.0f64, |m, &x| m.max(-x)),
                Cone::Soc(k) => {
                    if k == 0 {
                        0.0
                    } else {
                        (s.rows(1, k - 1).norm() - s[0]).max(0.0)
                    }
                }
                Cone::Psd(_) => {
                    let m = smat(s.as_slice());
                    let eig = m.symmetric_eigenvalues();
                    eig.iter().fold(0.0f64, |w, &l| w.max(-l))
                }
            };
            worst = worst.max(d);
        }
        worst
    }

    /// Largest α with pt + α·dir in the cone product, pt strictly interior.
    pub fn step_to_boundary(&self, pt: &DVector<f64>, dir: &DVector<f64>) -> f64 {
        let mut alpha = f64::INFINITY;
        for (c, &off) in self.cones.iter().zip(&self.offsets) {
            let p = pt.rows(off, c.dim());
            let d = dir.rows(off, c.dim());
            let a = match *c {
                Cone::Zero(_) => f64::INFINITY,
                Cone::NonNeg(_) => {
                    let mut m = f64::INFINITY;
                    for (pi, di) in p.iter().zip(d.iter()) {
                        if *di < 0.0 {
                            m = m.min(-pi / di);
                        }
                    }
                    m
                }
                Cone::Soc(_) => soc_step(p.as_slice(), d.as_slice()),
                Cone::Psd(_) => psd_step(p.as_slice(), d.as_slice()),
            };
            alpha = alpha.min(a);
        }
        alpha
    }

    /// Block-wise Jordan product a∘b.
    pub fn jordan(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.total);
        for (c, &off) in self.cones.iter().zip(&self.offsets) {
            let u = a.rows(off, c.dim());
            let v = b.rows(off, c.dim());
            match *c {
                Cone::Zero(_) => {}
                Cone::NonNeg(k) => {
                    for i in 0..k {
                        out[off + i] = u[i] * v[i];
                    }
                }
                Cone::Soc(k) => {
                    if k > 0 {
                        out[off] = u.dot(&v);
                        for i in 1..k {
                            out[off + i] = u[0] * v[i] + v[0] * u[i];
                        }
                    }
                }
                Cone::Psd(_) => {
                    let (mu, mv) = (smat(u.as_slice()), smat(v.as_slice()));
                    let prod = 0.5 * (&mu * &mv + &mv * &mu);
                    out.rows_mut(off, c.dim()).copy_from(&svec(&prod));
                }
            }
        }
        out
    }
}

/// First positive root of (p₀+αd₀)² − ‖p₁+αd₁‖² with p strictly interior;
/// +∞ when the ray never reaches the boundary.
fn soc_step(p: &[f64], d: &[f64]) -> f64 {
    if p.is_empty() {
        return f64::INFINITY;
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let qa = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let qb = 2.0 * (p[0] * d[0] - dot(&p[1..], &d[1..]));
    let qc = p[0] * p[0] - dot(&p[1..], &p[1..]);
    let scale = qa.abs().max(qb.abs()).max(1.0);
    if qa.abs() <= 1e-16 * scale {
        return if qb < 0.0 { -qc / qb } else { f64::INFINITY };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (qb + qb.signum() * sq);
    let (r1, r2) = (q / qa, if q == 0.0 { f64::INFINITY } else { qc / q });
    let mut best = f64::INFINITY;
    for r in [r1, r2] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    best
}

fn psd_step(p: &[f64], d: &[f64]) -> f64 {
    let x = smat(p);
    let dm = smat(d);
    let Some(chol) = nalgebra::Cholesky::new(x) else {
        return 0.0;
    };
    let l = chol.l();
    let m1 = l
        .solve_lower_triangular(&dm)
        .expect("triangular solve with positive diagonal");
    let m2 = l
        .solve_lower_triangular(&m1.transpose())
        .expect("triangular solve with positive diagonal");
    let eig = m2.symmetric_eigenvalues();
    let lmin = eig.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (-lmin)
    }
}

/// Nesterov–Todd scaling of one block, with the scaled point λ.
#[derive(Debug, Clone)]
pub enum BlockScaling {
    Zero,
    NonNeg { w: DVector<f64> },
    Soc { wbar: DVector<f64>, eta: f64 },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64>, sigma: DVector<f64> },
}

/// NT scalings for every block, satisfying W^{-T}x = Wz = λ.
#[derive(Debug, Clone)]
pub struct Scalings {
    pub layout: ConeLayout,
    pub blocks: Vec<BlockScaling>,
    pub lambda: DVector<f64>,
}

impl Scalings {
    pub fn compute(layout: &ConeLayout, x: &DVector<f64>, z: &DVector<f64>) -> Result<Self> {
        let mut blocks = Vec::with_capacity(layout.cones.len());
        let mut lambda = DVector::zeros(layout.total);
        for (c, &off) in layout.cones.iter().zip(&layout.offsets) {
            let xb = x.rows(off, c.dim());
            let zb = z.rows(off, c.dim());
            match *c {
                Cone::Zero(_) => blocks.push(BlockScaling::Zero),
                Cone::NonNeg(k) => {
                    let mut w = DVector::zeros(k);
                    for i in 0..k {
                        if xb[i] <= 0.0 || zb[i] <= 0.0 {
                            return Err(Error::inconsistent("NT scaling: iterate left the cone"));
                        }
                        w[i] = (xb[i] / zb[i]).sqrt();
                        lambda[off + i] = (xb[i] * zb[i]).sqrt();
                    }
                    blocks.push(BlockScaling::NonNeg { w });
                }
                Cone::Soc(k) => {
                    let jdot = |v: nalgebra::DVectorView<f64>| {
                        v[0] * v[0] - v.rows(1, k - 1).norm_squared()
                    };
                    let (a2, b2) = (jdot(xb), jdot(zb));
                    if a2 <= 0.0 || b2 <= 0.0 || xb[0] <= 0.0 || zb[0] <= 0.0 {
                        return Err(Error::inconsistent("NT scaling: iterate left the cone"));
                    }
                    let (abar, bbar) = (a2.sqrt(), b2.sqrt());
                    let xt = xb / abar;
                    let zt = zb / bbar;
                    let gamma = ((1.0 + xt.dot(&zt)) / 2.0).sqrt();
                    let mut wbar = DVector::zeros(k);
                    wbar[0] = (xt[0] + zt[0]) / (2.0 * gamma);
                    for i in 1..k {
                        wbar[i] = (xt[i] - zt[i]) / (2.0 * gamma);
                    }
                    let eta = (abar / bbar).sqrt();
                    // λ = W z for this block
                    let sc = BlockScaling::Soc { wbar, eta };
                    let lam = apply_soc(&sc, &zb.into_owned(), false);
                    lambda.rows_mut(off, k).copy_from(&lam);
                    blocks.push(sc);
                }
                Cone::Psd(d) => {
                    let xm = smat(xb.as_slice());
                    let zm = smat(zb.as_slice());
                    let lx = nalgebra::Cholesky::new(xm)
                        .ok_or_else(|| Error::inconsistent("NT scaling: PSD iterate not positive"))?
                        .l();
                    let lz = nalgebra::Cholesky::new(zm)
                        .ok_or_else(|| Error::inconsistent("NT scaling: PSD iterate not positive"))?
                        .l();
                    let prod = lz.transpose() * &lx;
                    let svd = nalgebra::SVD::new(prod, true, true);
                    let u = svd.u.as_ref().expect("svd with u");
                    let vt = svd.v_t.as_ref().expect("svd with vt");
                    let sigma = svd.singular_values.clone();
                    if sigma.iter().any(|&s| s <= 0.0) {
                        return Err(Error::inconsistent("NT scaling: singular scaled point"));
                    }
                    let sqrt_inv = DMatrix::from_diagonal(&sigma.map(|s| 1.0 / s.sqrt()));
                    let r = &lx * vt.transpose() * &sqrt_inv;
                    let rinv = &sqrt_inv * u.transpose() * lz.transpose();
                    let mut k2 = 0;
                    for j in 0..d {
                        for i in 0..=j {
                            if i == j {
                                lambda[off + k2] = sigma[j];
                            }
                            k2 += 1;
                        }
                    }
                    blocks.push(BlockScaling::Psd { r, rinv, sigma });
                }
            }
        }
        Ok(Scalings { layout: layout.clone(), blocks, lambda })
    }

    /// W v (λ = Wz convention).
    pub fn apply_w(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply(v, Mode::W)
    }

    /// Wᵀ v.
    pub fn apply_wt(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply(v, Mode::Wt)
    }

    /// W⁻¹ v.
    pub fn apply_winv(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply(v, Mode::Winv)
    }

    /// W⁻ᵀ v (λ = W⁻ᵀx convention).
    pub fn apply_winvt(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply(v, Mode::Winvt)
    }

    /// H v = Wᵀ(W v); satisfies H z = x.
    pub fn apply_h(&self, v: &DVector<f64>) -> DVector<f64> {
        let t = self.apply_w(v);
        self.apply_wt(&t)
    }

    /// H⁻¹ v = W⁻¹(W⁻ᵀ v).
    pub fn apply_hinv(&self, v: &DVector<f64>) -> DVector<f64> {
        let t = self.apply_winvt(v);
        self.apply_winv(&t)
    }

    /// Solve λ ∘ u = d block-wise.
    pub fn lambda_solve(&self, d: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.layout.total);
        for ((c, &off), blk) in
            self.layout.cones.iter().zip(&self.layout.offsets).zip(&self.blocks)
        {
            let db = d.rows(off, c.dim());
            match (c, blk) {
                (Cone::Zero(_), _) => {}
                (Cone::NonNeg(k), _) => {
                    for i in 0..*k {
                        out[off + i] = db[i] / self.lambda[off + i];
                    }
                }
                (Cone::Soc(k), _) => {
                    let lam = self.lambda.rows(off, *k);
                    let det = lam[0] * lam[0] - lam.rows(1, k - 1).norm_squared();
                    let l1d1 =
                        lam.rows(1, k - 1).dot(&db.rows(1, k - 1));
                    let u0 = (lam[0] * db[0] - l1d1) / det;
                    out[off] = u0;
                    for i in 1..*k {
                        out[off + i] = (db[i] - u0 * lam[i]) / lam[0];
                    }
                }
                (Cone::Psd(_), BlockScaling::Psd { sigma, .. }) => {
                    let dm = smat(db.as_slice());
                    let um = DMatrix::from_fn(dm.nrows(), dm.ncols(), |i, j| {
                        2.0 * dm[(i, j)] / (sigma[i] + sigma[j])
                    });
                    out.rows_mut(off, c.dim()).copy_from(&svec(&um));
                }
                _ => unreachable!("block/scaling mismatch"),
            }
        }
        out
    }

    fn apply(&self, v: &DVector<f64>, mode: Mode) -> DVector<f64> {
        let mut out = DVector::zeros(self.layout.total);
        for ((c, &off), blk) in
            self.layout.cones.iter().zip(&self.layout.offsets).zip(&self.blocks)
        {
            let vb = v.rows(off, c.dim()).into_owned();
            let res = match blk {
                BlockScaling::Zero => vb,
                BlockScaling::NonNeg { w } => match mode {
                    Mode::W | Mode::Wt => vb.component_mul(w),
                    Mode::Winv | Mode::Winvt => vb.component_div(w),
                },
                sc @ BlockScaling::Soc { .. } => {
                    apply_soc(sc, &vb, matches!(mode, Mode::Winv | Mode::Winvt))
                }
                BlockScaling::Psd { r, rinv, .. } => {
                    let m = smat(vb.as_slice());
                    let res = match mode {
                        Mode::W => r.transpose() * &m * r,
                        Mode::Wt => r * &m * r.transpose(),
                        Mode::Winv => rinv.transpose() * &m * rinv,
                        Mode::Winvt => rinv * &m * rinv.transpose(),
                    };
                    svec(&res)
                }
            };
            out.rows_mut(off, c.dim()).copy_from(&res);
        }
        out
    }
}

#[derive(Clone, Copy)]
enum Mode {
    W,
    Wt,
    Winv,
    Winvt,
}

/// Second-order-cone scaling application: the hyperbolic rotation
/// W = η·[[w̄₀, w̄₁ᵀ], [w̄₁, I + w̄₁w̄₁ᵀ/(1+w̄₀)]] with w̄ᵀJw̄ = 1, which
/// satisfies W²z = x; its inverse is W⁻¹ = η⁻¹·J W J/η-part (flip the sign
/// of w̄₁).
fn apply_soc(sc: &BlockScaling, v: &DVector<f64>, inverse: bool) -> DVector<f64> {
    let BlockScaling::Soc { wbar, eta } = sc else {
        unreachable!()
    };
    let k = wbar.len();
    let sign = if inverse { -1.0 } else { 1.0 };
    let w0 = wbar[0];
    let w1 = wbar.rows(1, k - 1) * sign;
    let v0 = v[0];
    let v1 = v.rows(1, k - 1);
    let s = w1.dot(&v1);
    let mut out = DVector::zeros(k);
    out[0] = w0 * v0 + s;
    let tail = &w1 * (v0 + s / (1.0 + w0)) + v1;
    out.rows_mut(1, k - 1).copy_from(&tail);
    if inverse {
        out / *eta
    } else {
        out * *eta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_interior(
        layout: &ConeLayout,
        rng: &mut impl Rng,
    ) -> DVector<f64> {
        let mut v = DVector::zeros(layout.total);
        for (c, &off) in layout.cones.iter().zip(&layout.offsets) {
            match *c {
                Cone::Zero(k) => {
                    for i in 0..k {
                        v[off + i] = 0.0;
                    }
                }
                Cone::NonNeg(k) => {
                    for i in 0..k {
                        v[off + i] = rng.gen_range(0.1..2.0);
                    }
                }
                Cone::Soc(k) => {
                    let mut tail_sq = 0.0;
                    for i in 1..k {
                        let t: f64 = rng.gen_range(-1.0..1.0);
                        v[off + i] = t;
                        tail_sq += t * t;
                    }
                    v[off] = tail_sq.sqrt() + rng.gen_range(0.1..1.5);
                }
                Cone::Psd(d) => {
                    let g = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
                    let m = &g * g.transpose() + DMatrix::identity(d, d) * 0.2;
                    v.rows_mut(off, c.dim()).copy_from(&svec(&m));
                }
            }
        }
        v
    }

    #[test]
    fn svec_smat_round_trip_preserves_inner_products() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for d in 1..=5usize {
            let a = {
                let g = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
                &g + g.transpose()
            };
            let b = {
                let g = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
                &g + g.transpose()
            };
            let (sa, sb) = (svec(&a), svec(&b));
            assert_eq!(sa.len(), d * (d + 1) / 2);
            assert_abs_diff_eq!(sa.dot(&sb), (&a * &b).trace(), epsilon = 1e-12);
            let back = smat(sa.as_slice());
            assert_abs_diff_eq!((back - &a).amax(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn svec_ordering_is_column_major_upper() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 2.0]);
        let v = svec(&m);
        assert_abs_diff_eq!(v[0], 1.0);
        assert_abs_diff_eq!(v[1], 3.0 * SQRT2, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 2.0);
    }

    #[test]
    fn scaling_identities_on_random_interior_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let layout = ConeLayout::new(&[Cone::NonNeg(4), Cone::Soc(3), Cone::Psd(3)]);
        for _ in 0..25 {
            let x = random_interior(&layout, &mut rng);
            let z = random_interior(&layout, &mut rng);
            let sc = Scalings::compute(&layout, &x, &z).unwrap();
            // λ = Wz = W⁻ᵀx
            let wz = sc.apply_w(&z);
            let wix = sc.apply_winvt(&x);
            assert_abs_diff_eq!((&wz - &sc.lambda).amax(), 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!((&wix - &sc.lambda).amax(), 0.0, epsilon = 1e-9);
            // Hz = x and H⁻¹ inverts H
            let hz = sc.apply_h(&z);
            assert_abs_diff_eq!((&hz - &x).amax(), 0.0, epsilon = 1e-9);
            let v = random_interior(&layout, &mut rng);
            let hhv = sc.apply_hinv(&sc.apply_h(&v));
            assert_abs_diff_eq!((&hhv - &v).amax(), 0.0, epsilon = 1e-9);
            // W⁻¹W = id and λ∘solve(d) = d
            let wiv = sc.apply_winv(&sc.apply_w(&v));
            assert_abs_diff_eq!((&wiv - &v).amax(), 0.0, epsilon = 1e-10);
            let d = random_interior(&layout, &mut rng);
            let u = sc.lambda_solve(&d);
            let lu = layout.jordan(&sc.lambda, &u);
            assert_abs_diff_eq!((&lu - &d).amax(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn step_to_boundary_is_exact_on_each_block() {
        let layout = ConeLayout::new(&[Cone::NonNeg(2)]);
        let p = DVector::from_vec(vec![1.0, 2.0]);
        let d = DVector::from_vec(vec![-0.5, 1.0]);
        assert_abs_diff_eq!(layout.step_to_boundary(&p, &d), 2.0);

        let soc = ConeLayout::new(&[Cone::Soc(2)]);
        let p = DVector::from_vec(vec![1.0, 0.0]);
        let d = DVector::from_vec(vec![0.0, 1.0]);
        // (1, α) hits the boundary at α = 1
        assert_abs_diff_eq!(soc.step_to_boundary(&p, &d), 1.0, epsilon = 1e-12);

        let psd = ConeLayout::new(&[Cone::Psd(2)]);
        let p = svec(&DMatrix::identity(2, 2));
        let dm = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -0.25]);
        let d = svec(&dm);
        assert_abs_diff_eq!(psd.step_to_boundary(&p, &d), 1.0, epsilon = 1e-12);

        // moving deeper inside never exits
        let inward = svec(&DMatrix::identity(2, 2));
        assert!(psd.step_to_boundary(&p, &inward).is_infinite());
    }

    #[test]
    fn identity_and_degree() {
        let layout = ConeLayout::new(&[Cone::NonNeg(2), Cone::Soc(3), Cone::Psd(2)]);
        assert_eq!(layout.degree(), 2 + 1 + 2);
        let e = layout.identity();
        assert_eq!(e.len(), 2 + 3 + 3);
        assert_abs_diff_eq!(e[0], 1.0);
        assert_abs_diff_eq!(e[2], 1.0); // SOC head
        assert_abs_diff_eq!(e[3], 0.0);
        let m = smat(e.rows(5, 3).as_slice());
        assert_abs_diff_eq!((m - DMatrix::identity(2, 2)).amax(), 0.0);
        // e ∘ v = v
        let v = DVector::from_fn(8, |i, _| 0.1 * i as f64 - 0.3);
        let ev = layout.jordan(&e, &v);
        assert_abs_diff_eq!((&ev - &v).amax(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cone_distance_detects_violations() {
        let layout = ConeLayout::new(&[Cone::NonNeg(2)]);
        assert_abs_diff_eq!(layout.distance(&DVector::from_vec(vec![1.0, -0.5])), 0.5);
        assert_abs_diff_eq!(layout.distance(&DVector::from_vec(vec![1.0, 0.0])), 0.0);
        let psd = ConeLayout::new(&[Cone::Psd(2)]);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_abs_diff_eq!(psd.distance(&svec(&m)), 1.0, epsilon = 1e-12);
    }
}
