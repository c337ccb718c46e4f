//! End-to-end drive of the public solvers, used by the verify recipe.

use nalgebra::{DMatrix, DVector};
use optrec::cheb::ChebPoly;
use optrec::full::{build_near_optimal_map, build_quasi_interpolant, error_certificate, recover};
use optrec::functional::{
    estimate, solve_weights, ApproximabilityModel, EstimationProblem, UncertaintySet,
};
use optrec::local::{
    center_polyball, center_polytope, LinearObservations, PolynomialBallModel, PolytopeModel,
    QuantityRows,
};
use optrec::measure::SignedMeasure;

fn cheb_unit(j: usize) -> ChebPoly {
    let mut c = vec![0.0; j + 1];
    c[j] = 1.0;
    ChebPoly::new(c)
}

fn main() {
    // 1. Chebyshev center of a box sliced by a pinning observation.
    let g = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
    let h = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
    let model = PolytopeModel::new(g, h).unwrap();
    let obs = LinearObservations::from_matrix(DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
    let q = QuantityRows::from_vectors(&[DVector::from_vec(vec![1.0, 0.0])]).unwrap();
    let y = DVector::from_vec(vec![0.5]);
    let res = center_polytope(&model, &obs, &q, &y, 0.0).unwrap();
    println!("polytope: z = {:.12}, r = {:.3e}", res.z[0], res.r);
    assert!((res.z[0] - 0.5).abs() < 1e-6 && res.r < 1e-6);

    // 2. Chebyshev center over a polynomial sup-norm ball pinned by a Dirac.
    let model = PolynomialBallModel::new(3).unwrap();
    let dirac = SignedMeasure::dirac(0.7, 1.0).unwrap();
    let obs = LinearObservations::from_measures(std::slice::from_ref(&dirac), 3).unwrap();
    let q = QuantityRows::from_measures(std::slice::from_ref(&dirac), 3).unwrap();
    let y = DVector::from_vec(vec![0.3]);
    let res = center_polyball(&model, &obs, &q, &y, 0.0).unwrap();
    println!("polyball: z = {:.12}, r = {:.3e}", res.z[0], res.r);
    assert!((res.z[0] - 0.3).abs() < 1e-6 && res.r < 1e-6);

    // 3. Optimal weights for the guiding Fourier estimation configuration.
    let pi = std::f64::consts::PI;
    let basis = vec![cheb_unit(1), cheb_unit(3)];
    let observations: Vec<SignedMeasure> = (1..=4)
        .map(|i| {
            let w = i as f64 * pi;
            SignedMeasure::from_density(move |x| (w * x).sin(), 192, None).unwrap()
        })
        .collect();
    let quantity = SignedMeasure::from_density(
        move |x| 0.7 * (pi * x).sin() - 0.3 * (2.0 * pi * x).sin() + 0.002 * x * x * x,
        192,
        None,
    )
    .unwrap();
    let problem = EstimationProblem::new(
        quantity,
        observations,
        ApproximabilityModel::new(basis, 0.1).unwrap(),
        UncertaintySet::new(f64::INFINITY, 0.005).unwrap(),
    )
    .unwrap();
    let w = solve_weights(&problem, 1e-4, 512).unwrap();
    println!(
        "fourier: level = {}, alpha = {:.10}, delta = {:.3e}, certified = {}",
        w.level, w.alpha, w.delta, w.certified
    );
    assert!(w.certified && w.level <= 64);
    let y = DVector::from_vec(vec![0.35, -0.15, 0.01, 0.0]);
    println!("fourier: estimate(y) = {:.10}", estimate(&w, &y).unwrap());

    // 4. Near-optimal full recovery from mixed Fourier observations.
    let model = ApproximabilityModel::new((0..4).map(cheb_unit).collect(), 0.1).unwrap();
    let noise = UncertaintySet::new(f64::INFINITY, 0.005).unwrap();
    let observations: Vec<SignedMeasure> = (0..6)
        .map(|i| {
            if i == 0 {
                SignedMeasure::from_density(|_| 1.0, 192, None).unwrap()
            } else {
                let freq = ((i + 1) / 2) as f64 * pi;
                if i % 2 == 1 {
                    SignedMeasure::from_density(move |x| (freq * x).sin(), 192, None).unwrap()
                } else {
                    SignedMeasure::from_density(move |x| (freq * x).cos(), 192, None).unwrap()
                }
            }
        })
        .collect();
    let interp = build_quasi_interpolant(&model).unwrap();
    let map =
        build_near_optimal_map(&observations, &model, &noise, &interp, 0.9, 64).unwrap();
    let cert = error_certificate(&map, &model, &noise).unwrap();
    println!(
        "full: gamma = {:.6}, mu_bar = {:.6}, certificate = {:.6}, certified = {}",
        interp.gamma(),
        map.mu_bar(),
        cert,
        map.is_certified()
    );
    assert!(map.is_certified() && (interp.gamma() - 5.0 / 3.0).abs() < 1e-6);
    // Exact data from the model element T_2 comes back as T_2.
    let t2 = cheb_unit(2);
    let y = DVector::from_fn(6, |i, _| {
        let mom = observations[i].moments(3).unwrap().entries;
        mom[2]
    });
    let grid: Vec<f64> = (0..9).map(|t| -1.0 + 0.25 * t as f64).collect();
    let rec = recover(&map, &y, &grid).unwrap();
    let worst = grid
        .iter()
        .enumerate()
        .map(|(t, &x)| (rec[t] - t2.eval(x)).abs())
        .fold(0.0, f64::max);
    println!("full: reproduction error on T_2 = {worst:.3e}");
    assert!(worst < 1e-8);

    println!("drive ok");
}
