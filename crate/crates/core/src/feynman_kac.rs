//! Monte Carlo magnetic Feynman–Kac estimates and a Fourier oracle on the circle.
//!
//! The estimator averages `exp(i·A_{Leb,t,k}(α) − Σ V(c_j)·t/2^k)·f(c(t))` over
//! Brownian paths started at x, which approximates `(e^{−tH} f)(x)` for
//! `H = (d + iα)*(d + iα) + V`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{contract, Error, Result};
use crate::forms::{self, OneForm, ScalarField};
use crate::integrals::{approx_a, time_integral_along_path};
use crate::manifold::{ManifoldId, ManifoldPoint};
use crate::measure::IntervalMeasure;
use crate::paths::PathEnsemble;
use crate::semigroup::{build_magnetic_h, CMatrix, Grid1D, Spectral};
use crate::stats::complex_mean_se;

/// Sparse Fourier coefficients (n, ĉ_n) of a function on the circle of period 2π.
pub type Fourier = Vec<(i64, Complex64)>;

type ComplexFn = Arc<dyn Fn(&ManifoldPoint) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct ComplexField {
    name: String,
    eval: ComplexFn,
}

impl fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexField({})", self.name)
    }
}

impl ComplexField {
    pub fn new(name: impl Into<String>, eval: impl Fn(&ManifoldPoint) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &ManifoldPoint) -> Complex64 {
        (self.eval)(x)
    }

    /// Pointwise product with e^{iφ}.
    pub fn with_phase(&self, phi: &ScalarField) -> Self {
        let f = self.clone();
        let phi = phi.clone();
        Self::new(format!("exp(i·{})·{}", phi.name(), f.name), move |x| {
            f.eval(x) * Complex64::from_polar(1.0, phi.eval(x))
        })
    }
}

pub const CIRCLE_FUNCTION_KEYS: &[&str] = &["one", "exp_i:<n>", "cos"];
pub const CIRCLE_POTENTIAL_KEYS: &[&str] = &["zero", "const:<c>", "cos", "one_plus_cos"];

fn unknown(kind: &'static str, key: &str, valid: &[&str]) -> Error {
    Error::UnknownKey {
        kind,
        key: key.to_string(),
        valid: valid.iter().map(|k| k.to_string()).collect(),
    }
}

/// Registered test functions on the 2π circle with their Fourier coefficients.
pub fn circle_function(key: &str) -> Result<(ComplexField, Fourier)> {
    let (kind, arg) = key.split_once(':').map_or((key, None), |(a, b)| (a, Some(b)));
    Ok(match kind {
        "one" => (ComplexField::new("one", |_| Complex64::new(1.0, 0.0)), vec![(0, 1.0.into())]),
        "exp_i" => {
            let n: i64 = match arg {
                None => 1,
                Some(a) => a.parse().map_err(|_| unknown("function", key, CIRCLE_FUNCTION_KEYS))?,
            };
            (
                ComplexField::new(key, move |x| Complex64::from_polar(1.0, n as f64 * x.coords[0])),
                vec![(n, 1.0.into())],
            )
        }
        "cos" => (
            ComplexField::new("cos", |x| x.coords[0].cos().into()),
            vec![(-1, 0.5.into()), (1, 0.5.into())],
        ),
        _ => return Err(unknown("function", key, CIRCLE_FUNCTION_KEYS)),
    })
}

/// Registered potentials on the 2π circle with their Fourier coefficients.
pub fn circle_potential(key: &str) -> Result<(ScalarField, Fourier)> {
    let m = ManifoldId::circle();
    let (kind, arg) = key.split_once(':').map_or((key, None), |(a, b)| (a, Some(b)));
    Ok(match kind {
        "zero" => (ScalarField::constant(0.0), vec![]),
        "const" => {
            let c: f64 = arg
                .unwrap_or("1")
                .parse()
                .map_err(|_| unknown("potential", key, CIRCLE_POTENTIAL_KEYS))?;
            (ScalarField::constant(c), vec![(0, c.into())])
        }
        "cos" => (forms::field(&m, "cos:0")?, vec![(-1, 0.5.into()), (1, 0.5.into())]),
        "one_plus_cos" => (
            ScalarField::new("one_plus_cos", |x| 1.0 + x.coords[0].cos()),
            vec![(-1, 0.5.into()), (0, 1.0.into()), (1, 0.5.into())],
        ),
        _ => return Err(unknown("potential", key, CIRCLE_POTENTIAL_KEYS)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FkiParams {
    pub alpha: String,
    pub v: String,
    pub f: String,
    pub x: Vec<f64>,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FkiEstimate {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    /// max of the real and imaginary standard errors.
    pub stderr: f64,
    pub n_paths: usize,
    pub k: u32,
    pub params: FkiParams,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

/// Path-wise integrand exp(i·A_{Leb}(α) − ∫V)·f(end), for each level in `levels`.
///
/// Paths are drawn once at the finest level and subsampled, so the estimates at
/// different levels share their randomness.
#[allow(clippy::too_many_arguments)]
pub fn fki_mc_levels(
    manifold: &ManifoldId,
    alpha: &OneForm,
    v: &ScalarField,
    f: &ComplexField,
    x: &ManifoldPoint,
    t: f64,
    n_paths: usize,
    levels: &[u32],
    seed: u64,
) -> Result<Vec<FkiEstimate>> {
    let k_max = *levels.iter().max().ok_or_else(|| contract("no levels"))?;
    let ens = PathEnsemble::new(manifold.clone(), x.clone(), t, k_max, seed, n_paths)?;
    let leb = IntervalMeasure::lebesgue();
    let per_path: Vec<Vec<Complex64>> = ens.map(|path| {
        levels
            .iter()
            .map(|&k| {
                let p = path.subsample(k)?;
                let a = approx_a(&leb, alpha, &p);
                let w = time_integral_along_path(|y| v.eval(y), &p);
                Ok(Complex64::from_polar((-w).exp(), a) * f.eval(p.end()))
            })
            .collect()
    })?;
    let params = FkiParams {
        alpha: alpha.name().to_string(),
        v: v.name().to_string(),
        f: f.name().to_string(),
        x: x.coords.to_vec(),
        t,
    };
    Ok(levels
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let zs: Vec<Complex64> = per_path.iter().map(|row| row[i]).collect();
            let (value, stderr) = complex_mean_se(&zs);
            FkiEstimate {
                value,
                stderr,
                n_paths,
                k,
                params: params.clone(),
            }
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
pub fn fki_mc(
    manifold: &ManifoldId,
    alpha: &OneForm,
    v: &ScalarField,
    f: &ComplexField,
    x: &ManifoldPoint,
    t: f64,
    n_paths: usize,
    k: u32,
    seed: u64,
) -> Result<FkiEstimate> {
    Ok(fki_mc_levels(manifold, alpha, v, f, x, t, n_paths, &[k], seed)?.remove(0))
}

/// (e^{−tH} f)(x) on the 2π circle for α = a dθ, using Fourier modes −n_modes..=n_modes.
pub fn fki_spectral_circle(a: f64, v: &[(i64, Complex64)], f: &[(i64, Complex64)], x: f64, t: f64, n_modes: usize) -> Result<Complex64> {
    if n_modes < 16 {
        return Err(contract(format!("n_modes must be ≥ 16, got {n_modes}")));
    }
    if t < 0.0 {
        return Err(contract("t must be ≥ 0"));
    }
    let m = n_modes as i64;
    let dim = 2 * n_modes + 1;
    let idx = |n: i64| (n + m) as usize;
    let mut h = CMatrix::zeros(dim, dim);
    for n in -m..=m {
        h[(idx(n), idx(n))] += Complex64::new((n as f64 + a).powi(2), 0.0);
        for &(l, c) in v {
            let row = n + l;
            if (-m..=m).contains(&row) {
                h[(idx(row), idx(n))] += c;
            }
        }
    }
    let mut fv = DVector::<Complex64>::zeros(dim);
    for &(n, c) in f {
        if n.abs() > m {
            return Err(contract(format!("mode {n} outside truncation {m}")));
        }
        fv[idx(n)] += c;
    }
    let u = Spectral::new(&h)?.expm_neg(t) * fv;
    Ok((-m..=m)
        .map(|n| u[idx(n)] * Complex64::from_polar(1.0, n as f64 * x))
        .sum())
}

/// Grid cross-check on the 2π circle: (e^{−tH} f)(x) from the finite-difference
/// H at n and 2n nodes, Richardson-extrapolated. `x` must be a node of the
/// coarse grid.
pub fn fki_grid_circle(a: f64, v: &ScalarField, f: &ComplexField, x: f64, t: f64, n: usize) -> Result<Complex64> {
    let solve = |n: usize| -> Result<Complex64> {
        let g = Grid1D::circle(TAU, n)?;
        let j = (x / g.dx()).round();
        if (j * g.dx() - x).abs() > 1e-9 {
            return Err(contract(format!("x = {x} is not a grid node")));
        }
        let vs: Vec<f64> = (0..n).map(|i| v.eval(&g.point(i))).collect();
        let h = build_magnetic_h(&g, &vec![a; n], &vs)?;
        let fv = DVector::from_iterator(n, (0..n).map(|i| f.eval(&g.point(i))));
        let u = Spectral::new(&h)?.expm_neg(t) * fv;
        Ok(u[j as usize % n])
    };
    let coarse = solve(n)?;
    let fine = solve(2 * n)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_trivial_cases() {
        let one = fki_spectral_circle(0.0, &[], &[(0, 1.0.into())], 0.7, 0.5, 16).unwrap();
        assert!((one - 1.0).norm() < 1e-14);
        let th = 0.4;
        let z = fki_spectral_circle(0.3, &[], &[(1, 1.0.into())], th, 0.5, 16).unwrap();
        let want = Complex64::from_polar((-0.5f64 * 1.3 * 1.3).exp(), th);
        assert!((z - want).norm() < 1e-13);
        assert!(fki_spectral_circle(0.0, &[], &[], 0.0, 0.5, 8).is_err());
    }

    #[test]
    fn spectral_mode_doubling_is_stable() {
        let (_, v) = circle_potential("cos").unwrap();
        let (_, f) = circle_function("exp_i:1").unwrap();
        let a = fki_spectral_circle(0.3, &v, &f, 0.2, 0.5, 16).unwrap();
        let b = fki_spectral_circle(0.3, &v, &f, 0.2, 0.5, 32).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn constant_potential_factorizes_pathwise() {
        let m = ManifoldId::circle();
        let (f, _) = circle_function("exp_i:1").unwrap();
        let x = ManifoldPoint::new(&[0.5]);
        let a = OneForm::zero();
        let base = fki_mc(&m, &a, &ScalarField::constant(0.0), &f, &x, 0.4, 200, 6, 3).unwrap();
        let with_v = fki_mc(&m, &a, &ScalarField::constant(1.5), &f, &x, 0.4, 200, 6, 3).unwrap();
        let want = base.value * (-0.4f64 * 1.5).exp();
        assert!((with_v.value - want).norm() < 1e-12);
    }

    #[test]
    fn mass_conservation_without_field() {
        let m = ManifoldId::circle();
        let (f, _) = circle_function("one").unwrap();
        let e = fki_mc(&m, &OneForm::zero(), &ScalarField::constant(0.0), &f, &ManifoldPoint::new(&[1.0]), 0.5, 100, 5, 1)
            .unwrap();
        assert!((e.value - 1.0).norm() < 1e-12);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn registries_reject_unknown_keys() {
        assert!(circle_function("nope").is_err());
        assert!(circle_potential("nope").is_err());
    }
}
