use geostoch::stats::mean_se;
use geostoch::{sample_bm, ManifoldId, ManifoldPoint, PathEnsemble};

fn var_with_se(xs: &[f64]) -> (f64, f64) {
    let (m, _) = mean_se(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    mean_se(&sq)
}

#[test]
fn first_increment_variance_is_2h() {
    let m = ManifoldId::euclidean(1).unwrap();
    let ens = PathEnsemble::new(m, ManifoldPoint::new(&[0.0]), 1.0, 6, 11, 100_000).unwrap();
    let d: Vec<f64> = ens
        .map(|p| Ok(p.points()[1].coords[0] - p.points()[0].coords[0]))
        .unwrap();
    let (v, se) = var_with_se(&d);
    let want = 2.0 / 64.0;
    assert!((v - want).abs() <= 3.0 * se, "var {v} ± {se}, want {want}");
}

#[test]
fn torus_increments_match_flat_law() {
    let m = ManifoldId::torus(vec![1.0, 1.0]).unwrap();
    let ens = PathEnsemble::new(m.clone(), ManifoldPoint::new(&[0.5, 0.5]), 1e-3, 2, 12, 20_000).unwrap();
    let d: Vec<f64> = ens
        .map(|p| Ok(m.log_map(&p.points()[0], &p.points()[1])?.components[1]))
        .unwrap();
    let (v, se) = var_with_se(&d);
    let want = 2.0 * 1e-3 / 4.0;
    assert!((v - want).abs() <= 3.0 * se, "var {v} ± {se}, want {want}");
}

#[test]
fn bridge_midpoint_variance_is_half_spacing() {
    let m = ManifoldId::euclidean(2).unwrap();
    let ens = PathEnsemble::new(m, ManifoldPoint::new(&[0.0, 0.0]), 1.0, 3, 13, 40_000).unwrap();
    let h = 1.0 / 8.0;
    let dev: Vec<f64> = ens
        .map(|p| {
            let r = p.bridge_refine(4, 99)?;
            assert_eq!(r.subsample(3)?.points(), p.points());
            let (a, mid, b) = (&r.points()[4], &r.points()[5], &r.points()[6]);
            Ok(mid.coords[1] - 0.5 * (a.coords[1] + b.coords[1]))
        })
        .unwrap();
    let (mean, mse) = mean_se(&dev);
    assert!(mean.abs() <= 3.0 * mse);
    let (v, se) = var_with_se(&dev);
    assert!((v - h / 2.0).abs() <= 3.0 * se, "var {v} ± {se}, want {}", h / 2.0);
}

#[test]
fn bridge_refine_rejects_curved() {
    let m = ManifoldId::sphere2(1.0).unwrap();
    let p = sample_bm(&m, &ManifoldPoint::new(&[0.0, 0.0, 1.0]), 0.5, 3, 1, 0).unwrap();
    assert!(p.bridge_refine(4, 1).is_err());
}

// The coarse view of a fine path has the law of a path sampled at the coarse level.
#[test]
fn subsample_law_matches_direct_sampling() {
    let m = ManifoldId::euclidean(1).unwrap();
    let x0 = ManifoldPoint::new(&[0.0]);
    let n = 20_000;
    let fine = PathEnsemble::new(m.clone(), x0.clone(), 1.0, 8, 14, n).unwrap();
    let coarse = PathEnsemble::new(m, x0, 1.0, 3, 15, n).unwrap();
    let stat = |p: &geostoch::DyadicPath| {
        let pts = p.points();
        (pts[1].coords[0] - pts[0].coords[0], pts[8].coords[0])
    };
    let a: Vec<(f64, f64)> = fine.map(|p| Ok(stat(&p.subsample(3)?))).unwrap();
    let b: Vec<(f64, f64)> = coarse.map(|p| Ok(stat(p))).unwrap();
    for (sel, want) in [(0usize, 0.25), (1, 2.0)] {
        let pick = |v: &[(f64, f64)]| -> Vec<f64> { v.iter().map(|x| if sel == 0 { x.0 } else { x.1 }).collect() };
        let (va, sa) = var_with_se(&pick(&a));
        let (vb, sb) = var_with_se(&pick(&b));
        assert!((va - want).abs() <= 3.0 * sa, "fine var {va}, want {want}");
        assert!((va - vb).abs() <= 3.0 * (sa * sa + sb * sb).sqrt(), "{va} vs {vb}");
    }
}

#[test]
fn sphere_paths_stay_on_sphere() {
    let m = ManifoldId::sphere2(2.0).unwrap();
    let p = sample_bm(&m, &ManifoldPoint::new(&[0.0, 0.0, 2.0]), 1.0, 10, 3, 7).unwrap();
    for x in p.points() {
        let r: f64 = x.coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((r - 2.0).abs() < 1e-12);
    }
}
