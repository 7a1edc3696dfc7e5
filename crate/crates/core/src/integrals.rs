//! Dyadic approximants of stochastic integrals of 1-forms, plus the estimators
//! and diagnostics built on them.
//!
//! For a path sampled at c_j = c(jt/2^k),
//!
//! ```text
//! A_{P,t,k}(α)(c) = Σ_j I_P(α)(c_j, c_{j+1})
//! S_{P,t,k}(α)(c) = A_{P,t,k}(α)(c) + (t/2^k)·(2M₁(P) − 1)·Σ_j (d*α)(c_j)
//! ```
//!
//! A_{Leb} is the Stratonovich approximant and A_{δ₀} the Itô one; in the limit
//! Int_P = Strat − (2M₁(P) − 1)·∫₀ᵗ (d*α)(c(s)) ds.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{contract, Error, Result};
use crate::forms::{laplace_beltrami_fd, OneForm, ScalarField};
use crate::manifold::{ManifoldId, ManifoldPoint, TangentVector};
use crate::measure::IntervalMeasure;
use crate::paths::{DyadicPath, PathEnsemble};
use crate::stats::{ls_slope, mean_se, median, tail_fraction};

/// Errors below this are treated as exact when fitting convergence slopes.
pub const SLOPE_FLOOR: f64 = 1e-12;

/// An approximant value together with the number of consecutive pairs that
/// fell on the cut locus (and so contributed 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approx {
    pub value: f64,
    pub n_cutlocus: usize,
}

/// A_{P} over an explicit list of consecutive points.
pub fn approx_a_points(p: &IntervalMeasure, alpha: &OneForm, manifold: &ManifoldId, points: &[ManifoldPoint]) -> Approx {
    let mut value = 0.0;
    let mut n_cutlocus = 0;
    for pair in points.windows(2) {
        match p.try_i_p(manifold, alpha, &pair[0], &pair[1]) {
            Some(v) => value += v,
            None => n_cutlocus += 1,
        }
    }
    Approx { value, n_cutlocus }
}

pub fn approx_a_counted(p: &IntervalMeasure, alpha: &OneForm, path: &DyadicPath) -> Approx {
    approx_a_points(p, alpha, path.manifold(), path.points())
}

pub fn approx_a(p: &IntervalMeasure, alpha: &OneForm, path: &DyadicPath) -> f64 {
    approx_a_counted(p, alpha, path).value
}

pub fn approx_s(p: &IntervalMeasure, alpha: &OneForm, path: &DyadicPath) -> f64 {
    let a = approx_a(p, alpha, path);
    let skew = p.skew();
    if skew == 0.0 {
        return a;
    }
    a + skew * time_integral_along_path(|x| alpha.codifferential(x), path)
}

/// Left-endpoint Riemann sum (t/2^k)·Σ_{j<2^k} g(c_j).
pub fn time_integral_along_path(g: impl Fn(&ManifoldPoint) -> f64, path: &DyadicPath) -> f64 {
    let pts = path.points();
    path.step() * pts[..pts.len() - 1].iter().map(g).sum::<f64>()
}

/// Re-expresses an estimate of Int_P as an estimate of Int_Q on the same path:
/// Int_Q = Int_P + 2(M₁(P) − M₁(Q))·∫₀ᵗ (d*α)(c(s)) ds.
pub fn convert(value_p: f64, p: &IntervalMeasure, q: &IntervalMeasure, alpha: &OneForm, path: &DyadicPath) -> f64 {
    let coeff = 2.0 * (p.first_moment() - q.first_moment());
    if coeff == 0.0 {
        return value_p;
    }
    value_p + coeff * time_integral_along_path(|x| alpha.codifferential(x), path)
}

type CurveFn = Arc<dyn Fn(f64) -> (ManifoldPoint, TangentVector) + Send + Sync>;

/// A C² curve s ↦ c(s) on [0, t] with analytic velocity.
#[derive(Clone)]
pub struct ParametricCurve {
    name: String,
    manifold: ManifoldId,
    t_total: f64,
    eval: CurveFn,
}

impl fmt::Debug for ParametricCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricCurve")
            .field("name", &self.name)
            .field("manifold", &self.manifold)
            .field("t_total", &self.t_total)
            .finish()
    }
}

pub const CURVE_KEYS: &[&str] = &["circle", "segment", "constant", "torus_line", "great_circle", "hyperbolic_arc"];

impl ParametricCurve {
    pub fn new(
        name: impl Into<String>,
        manifold: ManifoldId,
        t_total: f64,
        eval: impl Fn(f64) -> (ManifoldPoint, TangentVector) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            manifold,
            t_total,
            eval: Arc::new(eval),
        }
    }

    /// Registered curves, each tied to its own manifold.
    pub fn registered(key: &str) -> Result<Self> {
        let c = match key {
            "circle" => Self::new("circle", ManifoldId::euclidean(2)?, TAU, |s| {
                (ManifoldPoint::new(&[s.cos(), s.sin()]), TangentVector::new(&[-s.sin(), s.cos()]))
            }),
            "segment" => Self::new("segment", ManifoldId::euclidean(2)?, 1.0, |s| {
                (ManifoldPoint::new(&[0.5 + s, -1.0 + 2.0 * s]), TangentVector::new(&[1.0, 2.0]))
            }),
            "constant" => Self::new("constant", ManifoldId::euclidean(2)?, 1.0, |_| {
                (ManifoldPoint::new(&[0.3, 0.4]), TangentVector::new(&[0.0, 0.0]))
            }),
            "torus_line" => Self::new("torus_line", ManifoldId::torus(vec![TAU, TAU])?, TAU, |s| {
                let m = ManifoldId::torus(vec![TAU, TAU]).expect("valid torus");
                (
                    m.normalize(ManifoldPoint::new(&[0.2 + s, 0.1 + 0.5 * s])),
                    TangentVector::new(&[1.0, 0.5]),
                )
            }),
            "great_circle" => Self::new("great_circle", ManifoldId::sphere2(1.0)?, TAU, |s| {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let (sn, cs) = s.sin_cos();
                (
                    ManifoldPoint::new(&[h * cs, sn, h * cs]),
                    TangentVector::new(&[-h * sn, cs, -h * sn]),
                )
            }),
            "hyperbolic_arc" => Self::new("hyperbolic_arc", ManifoldId::Hyperbolic2, 1.0, |s| {
                (ManifoldPoint::new(&[s, 1.0 + 0.5 * s * s]), TangentVector::new(&[1.0, s]))
            }),
            _ => {
                return Err(Error::UnknownKey {
                    kind: "curve",
                    key: key.to_string(),
                    valid: CURVE_KEYS.iter().map(|k| k.to_string()).collect(),
                })
            }
        };
        Ok(c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn manifold(&self) -> &ManifoldId {
        &self.manifold
    }

    pub fn t_total(&self) -> f64 {
        self.t_total
    }

    pub fn point(&self, s: f64) -> ManifoldPoint {
        (self.eval)(s).0
    }

    pub fn velocity(&self, s: f64) -> TangentVector {
        (self.eval)(s).1
    }

    pub fn dyadic(&self, k: u32) -> Result<DyadicPath> {
        DyadicPath::from_curve(self.manifold.clone(), self.t_total, k, |s| self.point(s))
    }
}

/// ∫_c α by composite 16-point Gauss-Legendre over `n_panels` equal panels.
pub fn line_integral(alpha: &OneForm, curve: &ParametricCurve, n_panels: usize) -> f64 {
    let rule = GaussLegendre::new(std::num::NonZeroUsize::new(16).expect("nonzero"));
    let nodes = rule.as_node_weight_pairs();
    let n_panels = n_panels.max(1);
    let width = curve.t_total / n_panels as f64;
    let mut acc = 0.0;
    for p in 0..n_panels {
        let a = p as f64 * width;
        let panel: f64 = nodes
            .iter()
            .map(|&(x, w)| {
                let (pt, v) = (curve.eval)(a + 0.5 * width * (x + 1.0));
                w * alpha.eval(&pt, &v)
            })
            .sum();
        acc += 0.5 * width * panel;
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRow {
    pub k: u32,
    pub median_abs: f64,
    pub tail_frac: Option<f64>,
    pub n_cutlocus: usize,
}

/// Per-level error statistics and the fitted log₂ slope of median |Δ| vs k.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<LevelRow>,
    pub epsilon: Option<f64>,
    pub slope: Option<f64>,
}

impl ConvergenceReport {
    fn from_rows(rows: Vec<LevelRow>, epsilon: Option<f64>) -> Self {
        let fit: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.median_abs > SLOPE_FLOOR)
            .map(|r| (r.k as f64, r.median_abs.log2()))
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
        Self {
            slope: ls_slope(&x, &y),
            rows,
            epsilon,
        }
    }

    pub fn row(&self, k: u32) -> Option<&LevelRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn total_cutlocus(&self) -> usize {
        self.rows.iter().map(|r| r.n_cutlocus).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,median_abs,tail_frac,n_cutlocus\n");
        for r in &self.rows {
            let tail = r.tail_frac.map_or(String::new(), |t| t.to_string());
            s.push_str(&format!("{},{},{},{}\n", r.k, r.median_abs, tail, r.n_cutlocus));
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_levels(k_range: &[u32]) -> Result<()> {
    if k_range.is_empty() || k_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(contract("levels must be non-empty and strictly increasing"));
    }
    Ok(())
}

/// |A_{P,t,k} − ∫_c α| on dyadic samples of a deterministic curve.
pub fn classical_rate(p: &IntervalMeasure, alpha: &OneForm, curve: &ParametricCurve, k_range: &[u32]) -> Result<ConvergenceReport> {
    check_levels(k_range)?;
    let exact = line_integral(alpha, curve, 256);
    let rows = k_range
        .iter()
        .map(|&k| {
            let a = approx_a_counted(p, alpha, &curve.dyadic(k)?);
            Ok(LevelRow {
                k,
                median_abs: (a.value - exact).abs(),
                tail_frac: None,
                n_cutlocus: a.n_cutlocus,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::from_rows(rows, None))
}

/// Runs `f(path at level k)` for every path and every k (via subsampling from the
/// ensemble level) and summarizes |Δ| per k.
pub fn tail_report<F>(ensemble: &PathEnsemble, k_range: &[u32], eps: f64, f: F) -> Result<ConvergenceReport>
where
    F: Fn(&DyadicPath) -> Approx + Sync,
{
    Ok(tail_reports(ensemble, k_range, eps, 1, |p| vec![f(p)])?.remove(0))
}

/// Like [`tail_report`] for `f` returning `n_out` quantities per path; one report each.
pub fn tail_reports<F>(ensemble: &PathEnsemble, k_range: &[u32], eps: f64, n_out: usize, f: F) -> Result<Vec<ConvergenceReport>>
where
    F: Fn(&DyadicPath) -> Vec<Approx> + Sync,
{
    check_levels(k_range)?;
    if *k_range.last().expect("non-empty") > ensemble.level {
        return Err(contract(format!("levels exceed ensemble level {}", ensemble.level)));
    }
    let per_path: Vec<Vec<Vec<Approx>>> = ensemble.map(|path| {
        k_range
            .iter()
            .map(|&k| {
                let v = f(&path.subsample(k)?);
                if v.len() != n_out {
                    return Err(contract(format!("expected {n_out} outputs, got {}", v.len())));
                }
                Ok(v)
            })
            .collect()
    })?;
    Ok((0..n_out)
        .map(|o| {
            let rows = k_range
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let d: Vec<f64> = per_path.iter().map(|v| v[i][o].value).collect();
                    LevelRow {
                        k,
                        median_abs: median(&d.iter().map(|x| x.abs()).collect::<Vec<_>>()),
                        tail_frac: Some(tail_fraction(&d, eps)),
                        n_cutlocus: per_path.iter().map(|v| v[i][o].n_cutlocus).sum(),
                    }
                })
                .collect();
            ConvergenceReport::from_rows(rows, Some(eps))
        })
        .collect())
}

/// Cauchy-in-measure check: Δ_k = A_{P,k} − A_{P,k_ref} on the same path.
pub fn estimate_in_measure(
    p: &IntervalMeasure,
    alpha: &OneForm,
    ensemble: &PathEnsemble,
    k_ref: u32,
    k_range: &[u32],
    eps: f64,
) -> Result<ConvergenceReport> {
    if k_ref != ensemble.level {
        return Err(contract("k_ref must equal the ensemble level"));
    }
    check_levels(k_range)?;
    if *k_range.last().expect("non-empty") >= k_ref {
        return Err(contract("k_range must lie below k_ref"));
    }
    let mut levels = k_range.to_vec();
    levels.push(k_ref);
    let per_path: Vec<Vec<Approx>> = ensemble.map(|path| {
        levels
            .iter()
            .map(|&k| Ok(approx_a_counted(p, alpha, &path.subsample(k)?)))
            .collect()
    })?;
    let last = levels.len() - 1;
    let rows = k_range
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let d: Vec<f64> = per_path.iter().map(|v| v[i].value - v[last].value).collect();
            LevelRow {
                k,
                median_abs: median(&d.iter().map(|x| x.abs()).collect::<Vec<_>>()),
                tail_frac: Some(tail_fraction(&d, eps)),
                n_cutlocus: per_path.iter().map(|v| v[i].n_cutlocus + v[last].n_cutlocus).sum(),
            }
        })
        .collect();
    Ok(ConvergenceReport::from_rows(rows, Some(eps)))
}

/// A_{δ₀,k} − A_{Leb,k} − ∫ d*α per level; should vanish in measure.
pub fn ito_strat_gap(alpha: &OneForm, ensemble: &PathEnsemble, k_range: &[u32], eps: f64) -> Result<ConvergenceReport> {
    Ok(ito_strat_gaps(std::slice::from_ref(alpha), ensemble, k_range, eps)?.remove(0))
}

/// [`ito_strat_gap`] for several forms on one pass over the ensemble.
pub fn ito_strat_gaps(alphas: &[OneForm], ensemble: &PathEnsemble, k_range: &[u32], eps: f64) -> Result<Vec<ConvergenceReport>> {
    let ito = IntervalMeasure::dirac(0.0)?;
    let strat = IntervalMeasure::lebesgue();
    tail_reports(ensemble, k_range, eps, alphas.len(), |path| {
        alphas
            .iter()
            .map(|alpha| {
                let a = approx_a_counted(&ito, alpha, path);
                let b = approx_a_counted(&strat, alpha, path);
                let t = time_integral_along_path(|x| alpha.codifferential(x), path);
                Approx {
                    value: a.value - b.value - t,
                    n_cutlocus: a.n_cutlocus + b.n_cutlocus,
                }
            })
            .collect()
    })
}

/// A_{P,k} − A_{Q,k} per level.
pub fn measure_difference(
    p: &IntervalMeasure,
    q: &IntervalMeasure,
    alpha: &OneForm,
    ensemble: &PathEnsemble,
    k_range: &[u32],
    eps: f64,
) -> Result<ConvergenceReport> {
    tail_report(ensemble, k_range, eps, |path| {
        let a = approx_a_counted(p, alpha, path);
        let b = approx_a_counted(q, alpha, path);
        Approx {
            value: a.value - b.value,
            n_cutlocus: a.n_cutlocus + b.n_cutlocus,
        }
    })
}

/// A_{P_i,k} − A_{P_j,k} summarized for every pair i < j, evaluating each
/// measure once per path.
pub fn pairwise_measure_differences(
    measures: &[IntervalMeasure],
    alpha: &OneForm,
    ensemble: &PathEnsemble,
    eps: f64,
) -> Result<Vec<(usize, usize, LevelRow)>> {
    let per_path: Vec<Vec<Approx>> =
        ensemble.map(|path| Ok(measures.iter().map(|p| approx_a_counted(p, alpha, path)).collect()))?;
    let mut out = Vec::new();
    for i in 0..measures.len() {
        for j in i + 1..measures.len() {
            let d: Vec<f64> = per_path.iter().map(|v| v[i].value - v[j].value).collect();
            out.push((
                i,
                j,
                LevelRow {
                    k: ensemble.level,
                    median_abs: median(&d.iter().map(|x| x.abs()).collect::<Vec<_>>()),
                    tail_frac: Some(tail_fraction(&d, eps)),
                    n_cutlocus: per_path.iter().map(|v| v[i].n_cutlocus + v[j].n_cutlocus).sum(),
                },
            ));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StratReport {
    pub max_residual: f64,
    pub n_paths: usize,
    pub n_excluded: usize,
}

/// Residual A_{Leb}(df) − [f(end) − f(start)] on every path at level k.
///
/// `p` should be a Lebesgue measure; its quadrature order controls accuracy on
/// curved manifolds. Paths with a pair on the cut locus are excluded and counted.
pub fn strat_exactness(f: &ScalarField, p: &IntervalMeasure, ensemble: &PathEnsemble, k: u32) -> Result<StratReport> {
    let m = &ensemble.manifold;
    let df = OneForm::exact(m, f)?;
    let res: Vec<Option<f64>> = ensemble.map(|path| {
        let path = path.subsample(k)?;
        let a = approx_a_counted(p, &df, &path);
        Ok((a.n_cutlocus == 0).then(|| a.value - (f.eval(path.end()) - f.eval(path.start()))))
    })?;
    let kept: Vec<f64> = res.iter().flatten().map(|r| r.abs()).collect();
    Ok(StratReport {
        max_residual: kept.iter().copied().fold(0.0, f64::max),
        n_paths: kept.len(),
        n_excluded: res.len() - kept.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItoRow {
    pub k: u32,
    pub mean: f64,
    pub se: f64,
    pub median_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItoReport {
    pub rows: Vec<ItoRow>,
    /// Mean and SE of f(end) − f(start).
    pub endpoint_mean: f64,
    pub endpoint_se: f64,
    pub n_excluded: usize,
}

/// Residual f(end) − f(start) − A_{δ₀}(df) − ∫(Δf) per path, per level.
pub fn ito_lemma_check(f: &ScalarField, ensemble: &PathEnsemble, k_range: &[u32]) -> Result<ItoReport> {
    check_levels(k_range)?;
    let m = ensemble.manifold.clone();
    let df = OneForm::exact(&m, f)?;
    let ito = IntervalMeasure::dirac(0.0)?;
    let lap = |x: &ManifoldPoint| match f.laplacian(x) {
        Some(v) => v,
        None => laplace_beltrami_fd(&m, f, x, 1e-4).unwrap_or(f64::NAN),
    };
    let per_path: Vec<(Vec<Option<f64>>, f64)> = ensemble.map(|path| {
        let jump = f.eval(path.end()) - f.eval(path.start());
        let rs = k_range
            .iter()
            .map(|&k| {
                let sub = path.subsample(k)?;
                let a = approx_a_counted(&ito, &df, &sub);
                Ok((a.n_cutlocus == 0).then(|| jump - a.value - time_integral_along_path(lap, &sub)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((rs, jump))
    })?;
    let mut n_excluded = 0;
    let rows = k_range
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let r: Vec<f64> = per_path.iter().filter_map(|(v, _)| v[i]).collect();
            n_excluded += per_path.len() - r.len();
            let (mean, se) = mean_se(&r);
            ItoRow {
                k,
                mean,
                se,
                median_abs: median(&r.iter().map(|x| x.abs()).collect::<Vec<_>>()),
            }
        })
        .collect();
    let jumps: Vec<f64> = per_path.iter().map(|(_, j)| *j).collect();
    let (endpoint_mean, endpoint_se) = mean_se(&jumps);
    Ok(ItoReport {
        rows,
        endpoint_mean,
        endpoint_se,
        n_excluded,
    })
}

/// Mean of min(|a − b|, 1) over paired samples, with its standard error.
pub fn levy_distance_with_se(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(contract(format!("sample lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(contract("no samples"));
    }
    let phi: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs().min(1.0)).collect();
    Ok(mean_se(&phi))
}

pub fn levy_distance_estimate(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(levy_distance_with_se(a, b)?.0)
}

fn grid_index(t: f64, h: f64, n: usize) -> Result<usize> {
    let m = t / h;
    let r = m.round();
    if !(t > 0.0) || (m - r).abs() > 1e-9 * m.max(1.0) || r as usize > n {
        return Err(contract(format!("time {t} is not a grid time of spacing {h}")));
    }
    Ok(r as usize)
}

/// Lévy distance between A_P restricted to [0, t₁] and to [0, t₂] on the same paths.
///
/// Returns (distance, standard error). Both times must be grid times m·t/2^k.
pub fn t_continuity_diagnostic(
    p: &IntervalMeasure,
    alpha: &OneForm,
    ensemble: &PathEnsemble,
    t1: f64,
    t2: f64,
) -> Result<(f64, f64)> {
    let n = 1usize << ensemble.level;
    let h = ensemble.t / n as f64;
    let m1 = grid_index(t1, h, n)?;
    let m2 = grid_index(t2, h, n)?;
    let vals: Vec<(f64, f64)> = ensemble.map(|path| {
        let a = approx_a_points(p, alpha, path.manifold(), path.prefix(m1)).value;
        let b = approx_a_points(p, alpha, path.manifold(), path.prefix(m2)).value;
        Ok((a, b))
    })?;
    let (a, b): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
    levy_distance_with_se(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{field, form};
    use crate::paths::sample_bm;
    use std::f64::consts::PI;

    fn r2() -> ManifoldId {
        ManifoldId::euclidean(2).unwrap()
    }

    fn bm2(seed: u64, k: u32) -> DyadicPath {
        sample_bm(&r2(), &ManifoldPoint::new(&[0.1, -0.2]), 1.0, k, seed, 0).unwrap()
    }

    #[test]
    fn zero_form_gives_zero() {
        let p = bm2(1, 6);
        for m in [IntervalMeasure::lebesgue(), IntervalMeasure::dirac(0.0).unwrap()] {
            assert_eq!(approx_a(&m, &OneForm::zero(), &p), 0.0);
            assert_eq!(approx_s(&m, &OneForm::zero(), &p), 0.0);
        }
    }

    #[test]
    fn exact_coordinate_form_telescopes() {
        let p = bm2(2, 8);
        let dx = form(&r2(), "dx:0").unwrap();
        let want = p.end().coords[0] - p.start().coords[0];
        for m in [IntervalMeasure::lebesgue(), IntervalMeasure::dirac(0.3).unwrap()] {
            assert!((approx_a(&m, &dx, &p) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_approximant_tends_to_pi() {
        let c = ParametricCurve::registered("circle").unwrap();
        let xdy = form(&r2(), "x_dy").unwrap();
        let a = approx_a(&IntervalMeasure::lebesgue(), &xdy, &c.dyadic(12).unwrap());
        assert!((a - PI).abs() < 1e-5);
    }

    #[test]
    fn s_equals_a_for_lebesgue_and_shifts_by_t_for_ito() {
        let m = ManifoldId::euclidean(1).unwrap();
        let p = sample_bm(&m, &ManifoldPoint::new(&[0.0]), 0.7, 5, 3, 0).unwrap();
        let xdx = form(&m, "x_dx").unwrap();
        let leb = IntervalMeasure::lebesgue();
        assert_eq!(approx_s(&leb, &xdx, &p), approx_a(&leb, &xdx, &p));
        let ito = IntervalMeasure::dirac(0.0).unwrap();
        let d = approx_s(&ito, &xdx, &p) - approx_a(&ito, &xdx, &p);
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn line_integral_examples() {
        let circle = ParametricCurve::registered("circle").unwrap();
        assert!((line_integral(&form(&r2(), "x_dy").unwrap(), &circle, 64) - PI).abs() < 1e-12);
        let seg = ParametricCurve::registered("segment").unwrap();
        let f = field(&r2(), "sq").unwrap();
        let df = OneForm::exact(&r2(), &f).unwrap();
        let want = f.eval(&seg.point(1.0)) - f.eval(&seg.point(0.0));
        assert!((line_integral(&df, &seg, 8) - want).abs() < 1e-10);
        let cst = ParametricCurve::registered("constant").unwrap();
        assert_eq!(line_integral(&form(&r2(), "rot").unwrap(), &cst, 4), 0.0);
    }

    #[test]
    fn time_integral_examples() {
        let m = ManifoldId::euclidean(1).unwrap();
        let p = sample_bm(&m, &ManifoldPoint::new(&[0.0]), 1.3, 4, 3, 0).unwrap();
        assert!((time_integral_along_path(|_| 1.0, &p) - 1.3).abs() < 1e-15);
        assert_eq!(time_integral_along_path(|_| 0.0, &p), 0.0);
        let k = 10;
        let lin = DyadicPath::from_curve(m, 1.0, k, |s| ManifoldPoint::new(&[s])).unwrap();
        let v = time_integral_along_path(|x| x.coords[0], &lin);
        assert!((v - 0.5).abs() <= 1.0 / (1u64 << k) as f64);
    }

    #[test]
    fn convert_identity_cases() {
        let p = bm2(5, 6);
        let leb = IntervalMeasure::lebesgue();
        let ito = IntervalMeasure::dirac(0.0).unwrap();
        let xdy = form(&r2(), "x_dy").unwrap();
        assert_eq!(convert(1.25, &leb, &leb, &xdy, &p), 1.25);
        assert_eq!(convert(1.25, &ito, &leb, &xdy, &p), 1.25);
    }

    #[test]
    fn classical_rate_skips_slope_for_exact_form() {
        let seg = ParametricCurve::registered("segment").unwrap();
        let r = classical_rate(&IntervalMeasure::lebesgue(), &form(&r2(), "dx:1").unwrap(), &seg, &[2, 3, 4]).unwrap();
        assert!(r.slope.is_none());
        assert!(r.rows.iter().all(|row| row.median_abs < 1e-13));
        assert!(classical_rate(&IntervalMeasure::lebesgue(), &OneForm::zero(), &seg, &[3, 2]).is_err());
    }

    #[test]
    fn levy_distance_examples() {
        let a = [0.0, 1.0, -2.0];
        assert_eq!(levy_distance_estimate(&a, &a).unwrap(), 0.0);
        let b2: Vec<f64> = a.iter().map(|x| x + 2.0).collect();
        assert_eq!(levy_distance_estimate(&a, &b2).unwrap(), 1.0);
        let b3: Vec<f64> = a.iter().map(|x| x - 0.25).collect();
        assert!((levy_distance_estimate(&a, &b3).unwrap() - 0.25).abs() < 1e-15);
        assert!(levy_distance_estimate(&a, &a[..2]).is_err());
    }

    #[test]
    fn t_continuity_rejects_off_grid_times() {
        let e = PathEnsemble::new(r2(), ManifoldPoint::new(&[0.0, 0.0]), 1.0, 4, 1, 8).unwrap();
        let leb = IntervalMeasure::lebesgue();
        let dx = form(&r2(), "dx:0").unwrap();
        assert!(t_continuity_diagnostic(&leb, &dx, &e, 0.3, 0.5).is_err());
        let (d, _) = t_continuity_diagnostic(&leb, &dx, &e, 0.5, 0.5).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn report_csv_shape() {
        let e = PathEnsemble::new(r2(), ManifoldPoint::new(&[0.0, 0.0]), 1.0, 6, 1, 16).unwrap();
        let r = estimate_in_measure(&IntervalMeasure::lebesgue(), &form(&r2(), "dx:0").unwrap(), &e, 6, &[2, 4], 0.05)
            .unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("k,median_abs,tail_frac,n_cutlocus\n2,"));
        assert_eq!(csv.lines().count(), 3);
        assert!(r.rows.iter().all(|row| row.median_abs < 1e-14 && row.tail_frac == Some(0.0)));
        assert!(r.to_json().unwrap().contains("\"slope\": null"));
    }
}
