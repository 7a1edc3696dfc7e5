//! Borel probabilities on [0,1] (atoms plus a Lebesgue part) and the geodesic
//! P-average I_P(α)(x, y).

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::forms::OneForm;
use crate::manifold::{ManifoldId, ManifoldPoint};

pub const DEFAULT_QUADRATURE_ORDER: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMeasure {
    atoms: Vec<(f64, f64)>,
    lebesgue_weight: f64,
    quadrature_order: usize,
    // (node, weight) on [0,1], weights summing to 1
    rule: Arc<[(f64, f64)]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSummary {
    pub m1: f64,
    pub skew: f64,
}

fn legendre_unit(order: usize) -> Arc<[(f64, f64)]> {
    let n = NonZeroUsize::new(order).expect("order ≥ 2");
    GaussLegendre::new(n)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

impl IntervalMeasure {
    /// General constructor: atoms (τᵢ, wᵢ) plus a Lebesgue component of the given weight.
    pub fn new(atoms: Vec<(f64, f64)>, lebesgue_weight: f64, quadrature_order: usize) -> Result<Self> {
        let invalid = |reason: String| Error::Contract(format!("invalid interval measure: {reason}"));
        if quadrature_order < 2 {
            return Err(invalid(format!("quadrature order {quadrature_order} < 2")));
        }
        if !(lebesgue_weight >= 0.0) {
            return Err(invalid(format!("negative lebesgue weight {lebesgue_weight}")));
        }
        for &(tau, w) in &atoms {
            if !(0.0..=1.0).contains(&tau) {
                return Err(invalid(format!("atom location {tau} outside [0,1]")));
            }
            if !(w > 0.0) {
                return Err(invalid(format!("atom weight {w} not positive")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum::<f64>() + lebesgue_weight;
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("total mass {total} ≠ 1")));
        }
        Ok(Self {
            atoms,
            lebesgue_weight,
            quadrature_order,
            rule: legendre_unit(quadrature_order),
        })
    }

    pub fn dirac(tau: f64) -> Result<Self> {
        Self::new(vec![(tau, 1.0)], 0.0, DEFAULT_QUADRATURE_ORDER)
    }

    pub fn lebesgue() -> Self {
        Self::new(Vec::new(), 1.0, DEFAULT_QUADRATURE_ORDER).expect("lebesgue is valid")
    }

    /// ½(δ₀ + δ₁).
    pub fn trapezoid() -> Self {
        Self::new(vec![(0.0, 0.5), (1.0, 0.5)], 0.0, DEFAULT_QUADRATURE_ORDER).expect("valid")
    }

    pub fn with_quadrature_order(&self, order: usize) -> Result<Self> {
        Self::new(self.atoms.clone(), self.lebesgue_weight, order)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn lebesgue_weight(&self) -> f64 {
        self.lebesgue_weight
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    /// M₁(P) = ∫ τ dP(τ).
    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().map(|(t, w)| t * w).sum::<f64>() + 0.5 * self.lebesgue_weight
    }

    /// ∫ (2τ − 1) dP(τ) = 2M₁(P) − 1.
    pub fn skew(&self) -> f64 {
        2.0 * self.first_moment() - 1.0
    }

    pub fn moments(&self) -> MomentSummary {
        MomentSummary {
            m1: self.first_moment(),
            skew: self.skew(),
        }
    }

    /// ∫ g dP, with the Lebesgue part by the fixed Gauss-Legendre rule.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for &(tau, w) in &self.atoms {
            acc += w * g(tau);
        }
        if self.lebesgue_weight > 0.0 {
            let leb: f64 = self.rule.iter().map(|&(tau, w)| w * g(tau)).sum();
            acc += self.lebesgue_weight * leb;
        }
        acc
    }

    /// I_P(α)(x, y), or `None` when x and y are not joined by a unique
    /// minimizing geodesic.
    ///
    /// # Panics
    /// On a point/manifold dimension mismatch.
    pub fn try_i_p(&self, manifold: &ManifoldId, alpha: &OneForm, x: &ManifoldPoint, y: &ManifoldPoint) -> Option<f64> {
        let v = match manifold.log_map(x, y) {
            Ok(v) => v,
            Err(Error::CutLocus) => return None,
            Err(e) => panic!("i_p: {e}"),
        };
        let run = |nodes: &[(f64, f64)]| {
            manifold
                .integrate_along_geodesic(x, &v, nodes.iter().copied(), |p, w| alpha.eval(p, w))
                .unwrap_or_else(|e| panic!("i_p: {e}"))
        };
        let mut acc = 0.0;
        if !self.atoms.is_empty() {
            acc += run(&self.atoms);
        }
        if self.lebesgue_weight > 0.0 {
            acc += self.lebesgue_weight * run(&self.rule);
        }
        Some(acc)
    }

    /// I_P(α)(x, y), zero off the unique-geodesic domain.
    pub fn i_p(&self, manifold: &ManifoldId, alpha: &OneForm, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        self.try_i_p(manifold, alpha, x, y).unwrap_or(0.0)
    }
}

impl fmt::Display for IntervalMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order_suffix = |f: &mut fmt::Formatter<'_>| {
            if self.quadrature_order != DEFAULT_QUADRATURE_ORDER {
                write!(f, ";q={}", self.quadrature_order)
            } else {
                Ok(())
            }
        };
        if self.atoms.is_empty() {
            write!(f, "lebesgue")?;
            return order_suffix(f);
        }
        if self.atoms.len() == 1 && self.lebesgue_weight == 0.0 {
            return write!(f, "dirac:{}", self.atoms[0].0);
        }
        let mut terms: Vec<String> = self.atoms.iter().map(|(t, w)| format!("{w}@{t}")).collect();
        if self.lebesgue_weight > 0.0 {
            terms.push(format!("{}@leb", self.lebesgue_weight));
        }
        write!(f, "mix:{}", terms.join("+"))?;
        order_suffix(f)
    }
}

/// Config syntax: `dirac:<τ>`, `lebesgue`, `mix:<w>@<τ>+…` (a term `<w>@leb`
/// adds a Lebesgue part). A trailing `;q=<order>` sets the quadrature order.
impl FromStr for IntervalMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::Parse {
            what: "measure",
            input: s.to_string(),
            reason,
        };
        let (body, order) = match s.trim().split_once(";q=") {
            Some((b, q)) => (b, q.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            None => (s.trim(), DEFAULT_QUADRATURE_ORDER),
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}")));
        let (kind, arg) = match body.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (body, None),
        };
        match (kind, arg) {
            ("lebesgue", None) => Self::new(Vec::new(), 1.0, order),
            ("dirac", Some(a)) => Self::new(vec![(num(a)?, 1.0)], 0.0, order),
            ("mix", Some(a)) => {
                let mut atoms = Vec::new();
                let mut leb = 0.0;
                for term in a.split('+') {
                    let (w, loc) = term.split_once('@').ok_or_else(|| bad(format!("term {term:?} lacks '@'")))?;
                    if loc.trim() == "leb" {
                        leb += num(w)?;
                    } else {
                        atoms.push((num(loc)?, num(w)?));
                    }
                }
                Self::new(atoms, leb, order)
            }
            _ => Err(Error::UnknownKey {
                kind: "measure",
                key: s.to_string(),
                valid: MEASURE_KEYS.iter().map(|k| k.to_string()).collect(),
            }),
        }
        .map_err(|e| match e {
            Error::Contract(m) => bad(m),
            other => other,
        })
    }
}

pub const MEASURE_KEYS: &[&str] = &["dirac:<tau>", "lebesgue", "mix:<w>@<tau>+...", "<measure>;q=<order>"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms;

    #[test]
    fn moments_of_registered_measures() {
        assert_eq!(IntervalMeasure::dirac(0.0).unwrap().first_moment(), 0.0);
        assert_eq!(IntervalMeasure::lebesgue().first_moment(), 0.5);
        assert_eq!(IntervalMeasure::trapezoid().first_moment(), 0.5);
        assert_eq!(IntervalMeasure::dirac(0.0).unwrap().skew(), -1.0);
        assert_eq!(IntervalMeasure::lebesgue().skew(), 0.0);
        assert_eq!(IntervalMeasure::dirac(0.75).unwrap().skew(), 0.5);
        let m = IntervalMeasure::dirac(0.3).unwrap().moments();
        assert!((m.skew - (2.0 * m.m1 - 1.0)).abs() <= 1e-15);
    }

    #[test]
    fn invalid_measures_are_rejected() {
        assert!(IntervalMeasure::new(vec![(1.0, 0.5)], 0.0, 16).is_err());
        assert!(IntervalMeasure::new(vec![(1.5, 1.0)], 0.0, 16).is_err());
        assert!(IntervalMeasure::new(vec![], 1.0, 1).is_err());
        assert!("mix:0.5@1".parse::<IntervalMeasure>().is_err());
        assert!(matches!("uniform".parse::<IntervalMeasure>(), Err(Error::UnknownKey { .. })));
    }

    #[test]
    fn config_syntax() {
        assert_eq!("dirac:0.0".parse::<IntervalMeasure>().unwrap(), IntervalMeasure::dirac(0.0).unwrap());
        assert_eq!("lebesgue".parse::<IntervalMeasure>().unwrap(), IntervalMeasure::lebesgue());
        assert_eq!("mix:0.5@0+0.5@1".parse::<IntervalMeasure>().unwrap(), IntervalMeasure::trapezoid());
        let q = "lebesgue;q=32".parse::<IntervalMeasure>().unwrap();
        assert_eq!(q.quadrature_order(), 32);
        let m = "mix:0.25@0.2+0.75@leb".parse::<IntervalMeasure>().unwrap();
        assert!((m.first_moment() - (0.05 + 0.375)).abs() < 1e-15);
        for s in ["dirac:0.5", "lebesgue", "mix:0.5@0+0.5@1", "lebesgue;q=32", "mix:0.25@0.2+0.75@leb"] {
            let m: IntervalMeasure = s.parse().unwrap();
            assert_eq!(m.to_string().parse::<IntervalMeasure>().unwrap(), m);
        }
    }

    #[test]
    fn i_p_examples() {
        let r2 = ManifoldId::euclidean(2).unwrap();
        let dx = forms::form(&r2, "dx:0").unwrap();
        let x = ManifoldPoint::new(&[0.0, 0.0]);
        let y = ManifoldPoint::new(&[3.0, 4.0]);
        for p in [IntervalMeasure::dirac(0.0).unwrap(), IntervalMeasure::lebesgue(), IntervalMeasure::trapezoid()] {
            assert!((p.i_p(&r2, &dx, &x, &y) - 3.0).abs() < 1e-14);
        }
        // δ₀ is the left-point Riemann weight α_x(y − x).
        let rot = forms::form(&r2, "rot").unwrap();
        let x = ManifoldPoint::new(&[1.0, 2.0]);
        let v = crate::manifold::TangentVector::new(&[2.0, 2.0]);
        let ito = IntervalMeasure::dirac(0.0).unwrap().i_p(&r2, &rot, &x, &y);
        assert!((ito - rot.eval(&x, &v)).abs() < 1e-14);

        let s2 = ManifoldId::sphere2(1.0).unwrap();
        let a = forms::form(&s2, "x_dz").unwrap();
        let n = ManifoldPoint::new(&[0.0, 0.0, 1.0]);
        let s = ManifoldPoint::new(&[0.0, 0.0, -1.0]);
        assert_eq!(IntervalMeasure::lebesgue().i_p(&s2, &a, &n, &s), 0.0);
        assert!(IntervalMeasure::lebesgue().try_i_p(&s2, &a, &n, &s).is_none());
    }

    #[test]
    fn exact_forms_integrate_to_differences() {
        let s2 = ManifoldId::sphere2(1.0).unwrap();
        let f = forms::field(&s2, "xy").unwrap();
        let df = forms::OneForm::exact(&s2, &f).unwrap();
        let x = ManifoldPoint::new(&[0.6, 0.0, 0.8]);
        let y = ManifoldPoint::new(&[0.0, 0.6, -0.8]);
        let v = IntervalMeasure::lebesgue().i_p(&s2, &df, &x, &y);
        assert!((v - (f.eval(&y) - f.eval(&x))).abs() < 1e-8);
    }
}
