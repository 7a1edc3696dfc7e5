use std::f64::consts::{PI, TAU};

use geostoch::feynman_kac::{circle_function, circle_potential, fki_grid_circle, fki_mc, fki_spectral_circle};
use geostoch::forms::form;
use geostoch::integrals::{approx_a, classical_rate, line_integral, ParametricCurve};
use geostoch::semigroup::{build_magnetic_h, build_magnetic_h_links, link_phases, CMatrix, Grid1D, Spectral};
use geostoch::stats::mean_se;
use geostoch::{IntervalMeasure, ManifoldId, ManifoldPoint, PathEnsemble, ScalarField};
use num_complex::Complex64;

// Taylor with scaling and squaring, no eigendecomposition.
fn expm_taylor(a: &CMatrix) -> CMatrix {
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    let s = norm.log2().ceil().max(0.0) as i32 + 1;
    let b = a.scale(0.5f64.powi(s));
    let n = a.nrows();
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for j in 1..=30 {
        term = &term * &b / Complex64::from(j as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn spectral_exponential_matches_taylor() {
    for g in [Grid1D::circle(TAU, 16).unwrap(), Grid1D::interval(2.0, 12).unwrap()] {
        let alpha: Vec<f64> = g.nodes().iter().map(|x| 0.4 + (2.0 * x).sin()).collect();
        let v: Vec<f64> = g.nodes().iter().map(|x| x.cos()).collect();
        let h = build_magnetic_h(&g, &alpha, &v).unwrap();
        let t = 0.05;
        let want = expm_taylor(&h.scale(-t));
        let got = Spectral::new(&h).unwrap().expm_neg(t);
        assert!(max_diff(&got, &want) < 1e-10, "{}", max_diff(&got, &want));
    }
}

// Link phases that are differences of node values φ are a pure gauge: H_θ = U H₀ U†, U = diag(e^{−iφ}).
#[test]
fn discrete_gauge_covariance() {
    for g in [Grid1D::circle(TAU, 24).unwrap(), Grid1D::interval(3.0, 20).unwrap()] {
        let n = g.n();
        let phi: Vec<f64> = g.nodes().iter().map(|x| 1.3 * x.sin() + 0.2 * x * x).collect();
        let theta: Vec<f64> = if g.is_circle() {
            (0..n).map(|j| phi[(j + 1) % n] - phi[j]).collect()
        } else {
            let mut th = vec![0.3];
            th.extend((0..n - 1).map(|j| phi[j + 1] - phi[j]));
            th.push(-0.8);
            th
        };
        let v: Vec<f64> = g.nodes().iter().map(|x| 0.5 * x.cos()).collect();
        let h0 = build_magnetic_h_links(&g, &vec![0.0; theta.len()], &v).unwrap();
        let ha = build_magnetic_h_links(&g, &theta, &v).unwrap();
        let u = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            phi.iter().map(|p| Complex64::from_polar(1.0, -p)),
        ));
        let t = 0.2;
        let lhs = Spectral::new(&ha).unwrap().expm_neg(t);
        let rhs = &u * Spectral::new(&h0).unwrap().expm_neg(t) * u.adjoint();
        assert!(max_diff(&lhs, &rhs) < 1e-9, "{}", max_diff(&lhs, &rhs));
    }
}

#[test]
fn constant_field_link_phases() {
    let g = Grid1D::circle(TAU, 32).unwrap();
    let th = link_phases(&g, &vec![0.7; 32]).unwrap();
    assert!(th.iter().all(|t| (t - 0.7 * g.dx()).abs() < 1e-15));
}

// x dx on ℝ¹: Stratonovich telescopes to ½(B_t² − x₀²); Itô has the extra −t.
#[test]
fn x_dx_closed_forms() {
    let m = ManifoldId::euclidean(1).unwrap();
    let alpha = form(&m, "x_dx").unwrap();
    let x0 = 0.4;
    let t = 1.0;
    let ens = PathEnsemble::new(m, ManifoldPoint::new(&[x0]), t, 10, 21, 4000).unwrap();
    let leb = IntervalMeasure::lebesgue();
    let d0 = IntervalMeasure::dirac(0.0).unwrap();
    let res: Vec<(f64, f64)> = ens
        .map(|p| {
            let b = p.end().coords[0];
            let closed = 0.5 * (b * b - x0 * x0);
            Ok((approx_a(&leb, &alpha, p) - closed, approx_a(&d0, &alpha, p) - (closed - t)))
        })
        .unwrap();
    let strat = res.iter().map(|r| r.0.abs()).fold(0.0, f64::max);
    assert!(strat < 1e-12, "{strat}");
    let ito: Vec<f64> = res.iter().map(|r| r.1).collect();
    let (mean, se) = mean_se(&ito);
    assert!(mean.abs() <= 3.0 * se, "{mean} ± {se}");
    // Σ(ΔB)² − 2t has sd 2√2·t/2^{k/2}; halved in the approximant.
    let sd = (ito.iter().map(|x| x * x).sum::<f64>() / ito.len() as f64).sqrt();
    let want = 2f64.sqrt() * t / 32.0;
    assert!((sd / want - 1.0).abs() < 0.1, "{sd} vs {want}");
}

#[test]
fn circle_line_integral_against_closed_form() {
    let curve = ParametricCurve::registered("circle").unwrap();
    let alpha = form(curve.manifold(), "x_dy").unwrap();
    assert!((line_integral(&alpha, &curve, 64) - PI).abs() < 1e-12);
    let r = classical_rate(&IntervalMeasure::lebesgue(), &alpha, &curve, &[4, 6, 8]).unwrap();
    assert!(r.slope.unwrap() < -1.8, "{:?}", r.slope);
    assert!(r.row(8).unwrap().median_abs < 1e-3);
}

#[test]
fn fki_free_circle_closed_form() {
    let (f, f_hat) = circle_function("exp_i:2").unwrap();
    let (v, v_hat) = circle_potential("zero").unwrap();
    let (a, x, t): (f64, f64, f64) = (0.3, PI / 4.0, 0.5);
    let want = Complex64::from_polar((-t * (2.0 + a) * (2.0 + a)).exp(), 2.0 * x);
    let s = fki_spectral_circle(a, &v_hat, &f_hat, x, t, 16).unwrap();
    assert!((s - want).norm() < 1e-13);
    let g = fki_grid_circle(a, &v, &f, x, t, 256).unwrap();
    assert!((g - want).norm() < 1e-6, "{}", (g - want).norm());
}

#[test]
fn fki_spectral_gauge_shift() {
    let (_, v_hat) = circle_potential("one_plus_cos").unwrap();
    let (_, f_hat) = circle_function("cos").unwrap();
    let shifted: Vec<_> = f_hat.iter().map(|&(n, c)| (n - 1, c)).collect();
    let (a, x, t) = (0.3, 1.1, 0.4);
    let lhs = fki_spectral_circle(a + 1.0, &v_hat, &shifted, x, t, 24).unwrap();
    let rhs = Complex64::from_polar(1.0, -x) * fki_spectral_circle(a, &v_hat, &f_hat, x, t, 24).unwrap();
    assert!((lhs - rhs).norm() < 1e-12);
}

// An integer winding dθ is a gauge on the circle; it holds path by path, so the
// two estimates agree to roundoff on shared seeds.
#[test]
fn fki_mc_gauge_shift() {
    let m = ManifoldId::circle();
    let (f, _) = circle_function("cos").unwrap();
    let (v, _) = circle_potential("cos").unwrap();
    let x = ManifoldPoint::new(&[1.1]);
    let a0 = form(&m, "a_dtheta:0.3").unwrap();
    let a1 = form(&m, "a_dtheta:1.3").unwrap();
    let phase = ScalarField::new("minus_theta", |p| -p.coords[0]);
    let e0 = fki_mc(&m, &a0, &v, &f, &x, 0.4, 500, 6, 5).unwrap();
    let e1 = fki_mc(&m, &a1, &v, &f.with_phase(&phase), &x, 0.4, 500, 6, 5).unwrap();
    let rhs = Complex64::from_polar(1.0, -1.1) * e0.value;
    assert!((e1.value - rhs).norm() < 1e-10, "{}", (e1.value - rhs).norm());
}
