//! Acceptance criteria 1–9. Run with `cargo test -p geostoch --test acceptance`.
//!
//! Criteria run sequentially so the runtime limits are measured without
//! interference; the process exits non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use geostoch::feynman_kac::{circle_function, circle_potential, fki_mc_levels, fki_spectral_circle};
use geostoch::forms::{codifferential_fd, field, form, sample_form_keys};
use geostoch::integrals::{
    approx_a, ito_lemma_check, ito_strat_gap, ito_strat_gaps, pairwise_measure_differences, strat_exactness,
    ParametricCurve,
};
use geostoch::manifold::Radius;
use geostoch::semigroup::{chernoff_power_test, diamagnetic_cases, max_terminal_discrepancy, run_diamagnetic_case, Grid1D};
use geostoch::stats::ls_slope;
use geostoch::{IntervalMeasure, ManifoldId, ManifoldPoint, PathEnsemble, TangentVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = (bool, String);
type Entry = (u32, &'static str, u64, fn() -> Check);

fn c1_classical_rate() -> Check {
    let curve = ParametricCurve::registered("circle").unwrap();
    let alpha = form(curve.manifold(), "x_dy").unwrap();
    let leb = IntervalMeasure::lebesgue();
    let ks: Vec<u32> = (4..=12).collect();
    // ∫₀^{2π} cos²s ds = π.
    let errs: Vec<f64> = ks
        .iter()
        .map(|&k| (approx_a(&leb, &alpha, &curve.dyadic(k).unwrap()) - PI).abs())
        .collect();
    let x: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.log2()).collect();
    let slope = ls_slope(&x, &y).unwrap();
    let last = *errs.last().unwrap();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    (
        decreasing && slope <= -0.75 && last <= 1e-3,
        format!("slope {slope:.3} (≤ -0.75), error at k=12 {last:.2e} (≤ 1e-3), decreasing {decreasing}"),
    )
}

fn c2_strat_exactness() -> Check {
    let cases = [
        ("euclidean:2", "sq", 16, 1e-7),
        ("torus:2", "sincos", 16, 1e-7),
        ("sphere2", "coord:0", 32, 1e-6),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, (m, f, q, tol)) in cases.into_iter().enumerate() {
        let m: ManifoldId = m.parse().unwrap();
        let x0 = match m {
            ManifoldId::Sphere2 { .. } => ManifoldPoint::new(&[0.0, 0.6, 0.8]),
            _ => ManifoldPoint::new(&[0.3, 1.1]),
        };
        let ens = PathEnsemble::new(m.clone(), x0, 1.0, 10, 7 + i as u64, 1000).unwrap();
        let leb = IntervalMeasure::lebesgue().with_quadrature_order(q).unwrap();
        let r = strat_exactness(&field(&m, f).unwrap(), &leb, &ens, 10).unwrap();
        let pass = r.max_residual <= tol && r.n_paths == 1000;
        ok &= pass;
        detail.push(format!("{m}: {:.1e} (≤ {tol:.0e}, {} excluded)", r.max_residual, r.n_excluded));
    }
    (ok, detail.join("; "))
}

fn c3_ito_strat_gap() -> Check {
    let r1 = ManifoldId::euclidean(1).unwrap();
    let ens = PathEnsemble::new(r1.clone(), ManifoldPoint::new(&[0.0]), 1.0, 12, 31, 10_000).unwrap();
    // A_δ₀ − A_Leb + t with d*α = −1, so the reported gap is A_δ₀ − A_Leb − (−t).
    let gap = ito_strat_gap(&form(&r1, "x_dx").unwrap(), &ens, &[12], 0.05).unwrap();
    let tail = gap.rows[0].tail_frac.unwrap();
    let r2 = ManifoldId::euclidean(2).unwrap();
    let keys = ["dx:0", "x_dy", "rot", "sin_dy"];
    let zforms: Vec<_> = keys.iter().map(|k| form(&r2, k).unwrap()).collect();
    let zens = PathEnsemble::new(r2, ManifoldPoint::new(&[0.0, 0.0]), 1.0, 12, 32, 10_000).unwrap();
    let zr = ito_strat_gaps(&zforms, &zens, &[12], 0.02).unwrap();
    let ztails: Vec<f64> = zr.iter().map(|r| r.rows[0].tail_frac.unwrap()).collect();
    let zworst = ztails.iter().copied().fold(0.0, f64::max);
    (
        tail < 0.02 && zworst < 0.02,
        format!(
            "x dx: P(|gap| > 0.05) = {tail:.4} (< 0.02); d*α = 0 forms {}: P(|gap| > 0.02) = {:?} (< 0.02)",
            keys.join(","),
            ztails
        ),
    )
}

fn c4_moment_classification() -> Check {
    let m = ManifoldId::euclidean(2).unwrap();
    let ms: Vec<IntervalMeasure> = ["dirac:0.5", "mix:0.5@0+0.5@1", "lebesgue"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let ens = PathEnsemble::new(m.clone(), ManifoldPoint::new(&[0.0, 0.0]), 1.0, 12, 41, 10_000).unwrap();
    let rows = pairwise_measure_differences(&ms, &form(&m, "x_dy").unwrap(), &ens, 0.05).unwrap();
    let worst = rows.iter().map(|(_, _, r)| r.tail_frac.unwrap()).fold(0.0, f64::max);
    let med = rows.iter().map(|(_, _, r)| r.median_abs).fold(0.0, f64::max);
    (worst < 0.01, format!("worst pairwise tail {worst} (< 0.01), worst median |A_P - A_Q| {med:.1e}"))
}

fn c5_ito_lemma() -> Check {
    let m = ManifoldId::euclidean(1).unwrap();
    let ens = PathEnsemble::new(m.clone(), ManifoldPoint::new(&[0.5]), 1.0, 12, 51, 10_000).unwrap();
    let r = ito_lemma_check(&field(&m, "x_sq").unwrap(), &ens, &[12]).unwrap();
    let row = &r.rows[0];
    let mean_ok = row.mean.abs() <= 3.0 * row.se;
    // E[B_t²] − x₀² = 2t for the generator Δ.
    let moment_ok = (r.endpoint_mean - 2.0).abs() <= 3.0 * r.endpoint_se;
    (
        mean_ok && moment_ok,
        format!(
            "mean residual {:.2e} ± {:.2e}; mean f(B_t) - f(x0) = {:.4} ± {:.4} vs 2",
            row.mean, row.se, r.endpoint_mean, r.endpoint_se
        ),
    )
}

fn c6_chernoff() -> Check {
    let g = Grid1D::circle(TAU, 128).unwrap();
    let gm = g.manifold();
    let ks: Vec<u32> = (3..=8).collect();
    let mut reports = Vec::new();
    for a in ["zero", "a_dtheta:0.5"] {
        for p in ["dirac:0", "lebesgue"] {
            let p: IntervalMeasure = p.parse().unwrap();
            reports.push(chernoff_power_test(&g, &form(&gm, a).unwrap(), &p, 0.5, &ks).unwrap());
        }
    }
    let monotone = reports
        .iter()
        .filter(|r| r.alpha_tag != "zero")
        .all(|r| r.strictly_decreasing);
    let largest = reports.iter().map(|r| r.terminal_error()).fold(0.0, f64::max);
    let disc = max_terminal_discrepancy(&reports);
    let errs: Vec<String> = reports[2].rows.iter().map(|r| format!("{:.1e}", r.sup_error)).collect();
    (
        monotone && disc <= 2.0 * largest,
        format!(
            "α=0.5, δ₀ errors k=3..8: [{}]; strictly decreasing {monotone}; terminal discrepancy {disc:.1e} vs 2×{largest:.1e}",
            errs.join(", ")
        ),
    )
}

fn c7_diamagnetic() -> Check {
    let cases = diamagnetic_cases().unwrap();
    let v: Vec<f64> = cases.iter().map(|c| run_diamagnetic_case(c).unwrap()).collect();
    let worst = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (cases.len() == 6 && worst <= 1e-10, format!("{} cases, worst |h_α| - h = {worst:.1e}", cases.len()))
}

fn c8_fki() -> Check {
    let m = ManifoldId::circle();
    let a = 0.3;
    let th0 = PI / 4.0;
    let alpha = form(&m, "a_dtheta:0.3").unwrap();
    let (f, f_hat) = circle_function("exp_i:1").unwrap();
    let x = ManifoldPoint::new(&[th0]);
    let mut ok = true;
    let mut detail = Vec::new();
    for (key, seed) in [("zero", 81u64), ("cos", 82)] {
        let (v, v_hat) = circle_potential(key).unwrap();
        let est = fki_mc_levels(&m, &alpha, &v, &f, &x, 0.5, 20_000, &[10, 12], seed).unwrap();
        let oracle = if key == "zero" {
            // Eigenvalue (1 + a)² for the mode e^{iθ}.
            Complex64::from_polar((-0.5f64 * (1.0 + a) * (1.0 + a)).exp(), th0)
        } else {
            fki_spectral_circle(a, &v_hat, &f_hat, th0, 0.5, 32).unwrap()
        };
        let bias = (est[1].value - est[0].value).norm();
        let dev = (est[0].value - oracle).norm();
        let pass = dev <= 3.0 * est[0].stderr + bias && dev <= 0.02;
        ok &= pass;
        detail.push(format!("V={key}: |MC - oracle| = {dev:.2e} (3 SE {:.2e}, bias {bias:.1e})", 3.0 * est[0].stderr));
    }
    (ok, detail.join("; "))
}

fn c9_geometry() -> Check {
    let manifolds: Vec<ManifoldId> = ["euclidean:2", "euclidean:3", "torus:2", "sphere2", "sphere2:2.5", "hyperbolic2"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = [0.0f64; 5];
    let mut fails = Vec::new();
    for m in &manifolds {
        let forms: Vec<_> = sample_form_keys(m).iter().map(|k| form(m, k).unwrap()).collect();
        let max_len = match m.injectivity_radius(&m.random_point(&mut rng)) {
            Radius::Finite(r) => 0.95 * r,
            Radius::Unbounded => 3.0,
        };
        let mut fd_fail = 0usize;
        for i in 0..10_000 {
            let x = m.random_point(&mut rng);
            let v = m.random_tangent(&mut rng, &x, max_len);
            let y = m.exp_map(&x, &v).unwrap();
            let back = m.log_map(&x, &y).unwrap();
            let diff = TangentVector::new(
                &back.components.iter().zip(&v.components).map(|(a, b)| a - b).collect::<Vec<_>>(),
            );
            worst[0] = worst[0].max(m.norm(&x, &diff));

            let z = m.random_point(&mut rng);
            if let Ok(l) = m.log_map(&x, &z) {
                let d = m.dist(&x, &z);
                worst[1] = worst[1].max(m.dist(&m.exp_map(&x, &l).unwrap(), &z));
                worst[1] = worst[1].max((m.norm(&x, &l) - d).abs());
                for tau in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let (p, u) = m.geodesic_point(&x, &z, tau).unwrap();
                    worst[2] = worst[2].max((m.norm(&p, &u) - d).abs());
                }
            }

            let w = m.random_tangent(&mut rng, &x, 2.0);
            let (a, b) = (1.7, -0.6);
            let comb = v.scaled(a).add(&w.scaled(b));
            for alpha in &forms {
                let lhs = alpha.eval(&x, &comb);
                let rhs = a * alpha.eval(&x, &v) + b * alpha.eval(&x, &w);
                worst[3] = worst[3].max((lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs())));
            }

            // Second-order FD convergence, on a subsample (three steps per form).
            if i % 10 == 0 {
                for alpha in &forms {
                    let exact = alpha.codifferential(&x);
                    let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
                        .iter()
                        .map(|&h| (codifferential_fd(m, alpha, &x, h).unwrap() - exact).abs())
                        .collect();
                    let k_fit = errs[0] / 1e-4;
                    let scale = 1.0 + exact.abs();
                    for (e, h) in errs.iter().zip([1e-2, 5e-3, 2.5e-3]) {
                        if *e > 1.25 * k_fit * h * h + 1e-7 * scale {
                            fd_fail += 1;
                        }
                    }
                    worst[4] = worst[4].max(errs[2] / scale);
                }
            }
        }
        if fd_fail > 0 {
            fails.push(format!("{m}: {fd_fail} FD convergence failures"));
        }
    }
    let tol_ok = worst[0] <= 1e-9 && worst[1] <= 1e-9 && worst[2] <= 1e-9 && worst[3] <= 1e-12 && worst[4] <= 1e-3;
    (
        tol_ok && fails.is_empty(),
        format!(
            "{} manifolds x 1e4: log∘exp {:.1e}, exp∘log/|log| {:.1e}, speed {:.1e}, linearity {:.1e}, d* FD(h=2.5e-3) {:.1e}{}",
            manifolds.len(),
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            worst[4],
            if fails.is_empty() { String::new() } else { format!("; {}", fails.join("; ")) }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Entry; 9] = [
        (1, "classical rate", 5, c1_classical_rate),
        (2, "Stratonovich exactness", 30, c2_strat_exactness),
        (3, "Ito-Stratonovich gap", 60, c3_ito_strat_gap),
        (4, "moment classification", 60, c4_moment_classification),
        (5, "Ito's lemma", 30, c5_ito_lemma),
        (6, "Chernoff convergence", 20, c6_chernoff),
        (7, "diamagnetic inequality", 5, c7_diamagnetic),
        (8, "Feynman-Kac-Ito", 120, c8_fki),
        (9, "geometry kernel", 5, c9_geometry),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {detail} [{:.2} s, limit {limit} s{}]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", exceeded" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
