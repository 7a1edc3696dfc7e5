//! Closed-form Riemannian geometry on four model manifolds.
//!
//! | manifold        | chart coordinates                          | metric            |
//! |-----------------|--------------------------------------------|-------------------|
//! | `Euclidean(n)`  | ℝⁿ                                         | δ                 |
//! | `Torus(L₁..Lₙ)` | angles θᵢ ∈ [0, Lᵢ)                        | δ                 |
//! | `Sphere2(r)`    | ambient ℝ³ vector with ‖p‖ = r             | induced           |
//! | `Hyperbolic2`   | upper half-plane (x, y), y > 0             | (dx² + dy²) / y²  |
//!
//! Tangent vectors are stored as components in the chart frame (ambient components
//! orthogonal to `p` on the sphere). The hyperbolic plane is handled through the
//! hyperboloid model, where exp and log are trigonometric-hyperbolic closed forms.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Angular tolerance for declaring two points cut-locus related.
pub const CUT_LOCUS_TOL: f64 = 1e-12;

pub type Coords = SmallVec<[f64; 3]>;

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint {
    pub coords: Coords,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub components: Coords,
}

impl ManifoldPoint {
    pub fn new(coords: &[f64]) -> Self {
        Self {
            coords: SmallVec::from_slice(coords),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl TangentVector {
    pub fn new(components: &[f64]) -> Self {
        Self {
            components: SmallVec::from_slice(components),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            components: smallvec![0.0; len],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &TangentVector) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Injectivity radius, with `Unbounded` standing in for +∞.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius {
    Finite(f64),
    Unbounded,
}

impl Radius {
    pub fn as_f64(self) -> f64 {
        match self {
            Radius::Finite(r) => r,
            Radius::Unbounded => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldId {
    Euclidean { n: usize },
    Torus { periods: Vec<f64> },
    Sphere2 { radius: f64 },
    Hyperbolic2,
}

impl ManifoldId {
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPoint("euclidean dimension must be ≥ 1".into()));
        }
        Ok(Self::Euclidean { n })
    }

    pub fn torus(periods: Vec<f64>) -> Result<Self> {
        if periods.is_empty() || periods.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidPoint(format!(
                "torus periods must be positive, got {periods:?}"
            )));
        }
        Ok(Self::Torus { periods })
    }

    /// The circle of circumference 2π.
    pub fn circle() -> Self {
        Self::Torus { periods: vec![TAU] }
    }

    pub fn sphere2(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidPoint(format!("sphere radius must be > 0, got {radius}")));
        }
        Ok(Self::Sphere2 { radius })
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            Self::Euclidean { n } => *n,
            Self::Torus { periods } => periods.len(),
            Self::Sphere2 { .. } | Self::Hyperbolic2 => 2,
        }
    }

    /// Number of chart coordinates stored per point (3 on the embedded sphere).
    pub fn coord_len(&self) -> usize {
        match self {
            Self::Sphere2 { .. } => 3,
            _ => self.dim(),
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, Self::Euclidean { .. } | Self::Torus { .. })
    }

    fn check_point(&self, x: &ManifoldPoint) -> Result<()> {
        if x.coords.len() != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: x.coords.len(),
            });
        }
        Ok(())
    }

    fn check_vector(&self, v: &TangentVector) -> Result<()> {
        if v.components.len() != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: v.components.len(),
            });
        }
        Ok(())
    }

    /// Validates chart membership of `x`.
    pub fn validate_point(&self, x: &ManifoldPoint) -> Result<()> {
        self.check_point(x)?;
        if x.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        match self {
            Self::Euclidean { .. } => Ok(()),
            Self::Torus { periods } => {
                for (c, l) in x.coords.iter().zip(periods) {
                    if *c < 0.0 || *c >= *l {
                        return Err(Error::InvalidPoint(format!("torus angle {c} outside [0, {l})")));
                    }
                }
                Ok(())
            }
            Self::Sphere2 { radius } => {
                let n = norm3(&x.coords);
                if (n - radius).abs() > 1e-9 * radius.max(1.0) {
                    return Err(Error::InvalidPoint(format!(
                        "sphere point has norm {n}, expected {radius}"
                    )));
                }
                Ok(())
            }
            Self::Hyperbolic2 => {
                if x.coords[1] <= 0.0 {
                    return Err(Error::InvalidPoint("half-plane point needs y > 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Brings a chart point back into canonical form (wraps torus angles,
    /// renormalizes sphere points).
    pub fn normalize(&self, mut x: ManifoldPoint) -> ManifoldPoint {
        match self {
            Self::Torus { periods } => {
                for (c, l) in x.coords.iter_mut().zip(periods) {
                    *c = wrap(*c, *l);
                }
            }
            Self::Sphere2 { radius } => {
                let n = norm3(&x.coords);
                for c in x.coords.iter_mut() {
                    *c *= radius / n;
                }
            }
            _ => {}
        }
        x
    }

    pub fn inner(&self, x: &ManifoldPoint, v: &TangentVector, w: &TangentVector) -> f64 {
        let e = dot(&v.components, &w.components);
        match self {
            Self::Hyperbolic2 => e / (x.coords[1] * x.coords[1]),
            _ => e,
        }
    }

    pub fn norm(&self, x: &ManifoldPoint, v: &TangentVector) -> f64 {
        self.inner(x, v, v).sqrt()
    }

    /// Orthonormal basis of the tangent space at `x`, in chart components.
    pub fn orthonormal_frame(&self, x: &ManifoldPoint) -> Vec<TangentVector> {
        match self {
            Self::Euclidean { .. } | Self::Torus { .. } => {
                let n = self.dim();
                (0..n)
                    .map(|i| {
                        let mut e = TangentVector::zeros(n);
                        e.components[i] = 1.0;
                        e
                    })
                    .collect()
            }
            Self::Sphere2 { radius } => {
                let a = unit3(&x.coords, *radius);
                let (e1, e2) = sphere_frame(&a);
                vec![TangentVector::new(&e1), TangentVector::new(&e2)]
            }
            Self::Hyperbolic2 => {
                let y = x.coords[1];
                vec![TangentVector::new(&[y, 0.0]), TangentVector::new(&[0.0, y])]
            }
        }
    }

    /// Riemannian exponential map: γ(1) for the geodesic with γ(0) = x, γ̇(0) = v.
    pub fn exp_map(&self, x: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
        Ok(self.geodesic_flow(x, v, 1.0)?.0)
    }

    /// Position and velocity of s ↦ exp_x(s·v) at s = τ.
    pub fn geodesic_flow(
        &self,
        x: &ManifoldPoint,
        v: &TangentVector,
        tau: f64,
    ) -> Result<(ManifoldPoint, TangentVector)> {
        self.check_point(x)?;
        self.check_vector(v)?;
        Ok(match self {
            Self::Euclidean { .. } => {
                let p = x
                    .coords
                    .iter()
                    .zip(&v.components)
                    .map(|(a, b)| a + tau * b)
                    .collect();
                (ManifoldPoint { coords: p }, v.clone())
            }
            Self::Torus { periods } => {
                let p = x
                    .coords
                    .iter()
                    .zip(&v.components)
                    .zip(periods)
                    .map(|((a, b), l)| wrap(a + tau * b, *l))
                    .collect();
                (ManifoldPoint { coords: p }, v.clone())
            }
            Self::Sphere2 { radius } => sphere_flow(*radius, x, v, tau),
            Self::Hyperbolic2 => hyperbolic_flow(x, v, tau),
        })
    }

    /// Integrates `g(γ(τ), γ̇(τ))` against `nodes` (τ, weight) along s ↦ exp_x(s·v).
    ///
    /// Flat manifolds reuse one point buffer; curved ones go through
    /// [`geodesic_flow`](Self::geodesic_flow).
    pub fn integrate_along_geodesic(
        &self,
        x: &ManifoldPoint,
        v: &TangentVector,
        nodes: impl IntoIterator<Item = (f64, f64)>,
        mut g: impl FnMut(&ManifoldPoint, &TangentVector) -> f64,
    ) -> Result<f64> {
        self.check_point(x)?;
        self.check_vector(v)?;
        let mut acc = 0.0;
        match self {
            Self::Euclidean { .. } => {
                let mut p = x.clone();
                for (tau, w) in nodes {
                    for ((c, a), b) in p.coords.iter_mut().zip(&x.coords).zip(&v.components) {
                        *c = a + tau * b;
                    }
                    acc += w * g(&p, v);
                }
            }
            Self::Torus { periods } => {
                let mut p = x.clone();
                for (tau, w) in nodes {
                    for (((c, a), b), l) in p.coords.iter_mut().zip(&x.coords).zip(&v.components).zip(periods) {
                        *c = wrap(a + tau * b, *l);
                    }
                    acc += w * g(&p, v);
                }
            }
            _ => {
                for (tau, w) in nodes {
                    let (p, u) = self.geodesic_flow(x, v, tau)?;
                    acc += w * g(&p, &u);
                }
            }
        }
        Ok(acc)
    }

    /// Inverse of the exponential map inside the injectivity domain.
    pub fn log_map(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
        self.check_point(x)?;
        self.check_point(y)?;
        match self {
            Self::Euclidean { .. } => Ok(TangentVector {
                components: y.coords.iter().zip(&x.coords).map(|(b, a)| b - a).collect(),
            }),
            Self::Torus { periods } => {
                let mut comps = Coords::new();
                for ((a, b), l) in x.coords.iter().zip(&y.coords).zip(periods) {
                    let d = wrap(b - a + 0.5 * l, *l) - 0.5 * l;
                    if (d.abs() - 0.5 * l).abs() <= CUT_LOCUS_TOL * l.max(1.0) {
                        return Err(Error::CutLocus);
                    }
                    comps.push(d);
                }
                Ok(TangentVector { components: comps })
            }
            Self::Sphere2 { radius } => sphere_log(*radius, x, y),
            Self::Hyperbolic2 => Ok(hyperbolic_log(x, y)),
        }
    }

    pub fn dist(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        match self {
            Self::Euclidean { .. } => x
                .coords
                .iter()
                .zip(&y.coords)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Self::Torus { periods } => x
                .coords
                .iter()
                .zip(&y.coords)
                .zip(periods)
                .map(|((a, b), l)| {
                    let d = wrap(b - a + 0.5 * l, *l) - 0.5 * l;
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            Self::Sphere2 { radius } => {
                let a = unit3(&x.coords, *radius);
                let b = unit3(&y.coords, *radius);
                radius * angle3(&a, &b)
            }
            Self::Hyperbolic2 => {
                let dx = x.coords[0] - y.coords[0];
                let dy = x.coords[1] - y.coords[1];
                let chord = (dx * dx + dy * dy).sqrt();
                2.0 * (chord / (2.0 * (x.coords[1] * y.coords[1]).sqrt())).asinh()
            }
        }
    }

    /// (γ_{x,y}(τ), γ̇_{x,y}(τ)) along the unique minimizing geodesic from x to y.
    pub fn geodesic_point(
        &self,
        x: &ManifoldPoint,
        y: &ManifoldPoint,
        tau: f64,
    ) -> Result<(ManifoldPoint, TangentVector)> {
        let v = self.log_map(x, y)?;
        self.geodesic_flow(x, &v, tau)
    }

    pub fn injectivity_radius(&self, _x: &ManifoldPoint) -> Radius {
        match self {
            Self::Euclidean { .. } | Self::Hyperbolic2 => Radius::Unbounded,
            Self::Torus { periods } => {
                Radius::Finite(0.5 * periods.iter().cloned().fold(f64::INFINITY, f64::min))
            }
            Self::Sphere2 { radius } => Radius::Finite(PI * radius),
        }
    }

    /// A local chart around `x`, used by the finite-difference operators.
    pub fn chart_at(&self, x: &ManifoldPoint) -> LocalChart {
        match self {
            Self::Sphere2 { radius } => {
                let n = unit3(&x.coords, *radius);
                let (e1, e2) = sphere_frame(&n);
                LocalChart {
                    manifold: self.clone(),
                    center: x.clone(),
                    sphere_frame: Some([n, e1, e2]),
                }
            }
            _ => LocalChart {
                manifold: self.clone(),
                center: x.clone(),
                sphere_frame: None,
            },
        }
    }

    /// Uniform-ish random point for property tests: Gaussian on ℝⁿ, uniform on
    /// torus and sphere, log-uniform height on the half-plane.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ManifoldPoint {
        match self {
            Self::Euclidean { n } => ManifoldPoint {
                coords: (0..*n).map(|_| 2.0 * gauss(rng)).collect(),
            },
            Self::Torus { periods } => ManifoldPoint {
                coords: periods.iter().map(|l| rng.random::<f64>() * l).collect(),
            },
            Self::Sphere2 { radius } => {
                let g = [gauss(rng), gauss(rng), gauss(rng)];
                let n = norm3(&g);
                ManifoldPoint::new(&[radius * g[0] / n, radius * g[1] / n, radius * g[2] / n])
            }
            Self::Hyperbolic2 => {
                ManifoldPoint::new(&[4.0 * rng.random::<f64>() - 2.0, (3.0 * rng.random::<f64>() - 1.5).exp()])
            }
        }
    }

    /// Random tangent vector at `x` with Riemannian length drawn uniformly in [0, max_len).
    pub fn random_tangent<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        x: &ManifoldPoint,
        max_len: f64,
    ) -> TangentVector {
        let frame = self.orthonormal_frame(x);
        let coeffs: Vec<f64> = frame.iter().map(|_| gauss(rng)).collect();
        let n = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
        let len = max_len * rng.random::<f64>();
        let mut v = TangentVector::zeros(self.coord_len());
        for (e, c) in frame.iter().zip(&coeffs) {
            v = v.add(&e.scaled(c * len / n));
        }
        v
    }
}

impl fmt::Display for ManifoldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean { n } => write!(f, "euclidean:{n}"),
            Self::Torus { periods } => {
                if periods.iter().all(|p| *p == TAU) {
                    write!(f, "torus:{}", periods.len())
                } else {
                    let ps: Vec<String> = periods.iter().map(|p| p.to_string()).collect();
                    write!(f, "torus:{}:{}", periods.len(), ps.join(","))
                }
            }
            Self::Sphere2 { radius } => write!(f, "sphere2:{radius}"),
            Self::Hyperbolic2 => write!(f, "hyperbolic2"),
        }
    }
}

/// Registry syntax: `euclidean:<n>`, `torus:<n>[:<p1>,…]`, `circle`,
/// `sphere2[:<radius>]`, `hyperbolic2`.
impl FromStr for ManifoldId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            what: "manifold",
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let mut parts = s.trim().splitn(3, ':');
        let kind = parts.next().unwrap_or_default();
        let arg = parts.next();
        let extra = parts.next();
        match kind {
            "euclidean" => {
                let n = arg
                    .ok_or_else(|| bad("missing dimension"))?
                    .parse::<usize>()
                    .map_err(|e| bad(&e.to_string()))?;
                Self::euclidean(n).map_err(|e| bad(&e.to_string()))
            }
            "torus" => {
                let n = arg
                    .ok_or_else(|| bad("missing dimension"))?
                    .parse::<usize>()
                    .map_err(|e| bad(&e.to_string()))?;
                let periods = match extra {
                    None => vec![TAU; n],
                    Some(list) => list
                        .split(',')
                        .map(|p| p.trim().parse::<f64>().map_err(|e| bad(&e.to_string())))
                        .collect::<Result<Vec<_>>>()?,
                };
                if periods.len() != n {
                    return Err(bad("period count does not match dimension"));
                }
                Self::torus(periods).map_err(|e| bad(&e.to_string()))
            }
            "circle" => Ok(Self::circle()),
            "sphere2" => {
                let r = match arg {
                    None => 1.0,
                    Some(a) => a.parse::<f64>().map_err(|e| bad(&e.to_string()))?,
                };
                Self::sphere2(r).map_err(|e| bad(&e.to_string()))
            }
            "hyperbolic2" => Ok(Self::Hyperbolic2),
            _ => Err(Error::UnknownKey {
                kind: "manifold",
                key: s.to_string(),
                valid: MANIFOLD_KEYS.iter().map(|k| k.to_string()).collect(),
            }),
        }
    }
}

pub const MANIFOLD_KEYS: &[&str] = &[
    "euclidean:<n>",
    "torus:<n>[:<p1>,...]",
    "circle",
    "sphere2[:<radius>]",
    "hyperbolic2",
];

/// Local coordinates u ↦ φ(u) centered at a point (φ(0) = center).
///
/// Flat manifolds and the half-plane use translated chart coordinates; the
/// sphere uses the orthographic chart φ(u) = √(r² − |u|²)·n + u₁e₁ + u₂e₂.
#[derive(Clone, Debug)]
pub struct LocalChart {
    manifold: ManifoldId,
    center: ManifoldPoint,
    sphere_frame: Option<[[f64; 3]; 3]>,
}

impl LocalChart {
    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn point(&self, u: &[f64]) -> ManifoldPoint {
        match (&self.manifold, &self.sphere_frame) {
            (ManifoldId::Sphere2 { radius }, Some([n, e1, e2])) => {
                let h = (radius * radius - u[0] * u[0] - u[1] * u[1]).sqrt();
                ManifoldPoint::new(&[
                    h * n[0] + u[0] * e1[0] + u[1] * e2[0],
                    h * n[1] + u[0] * e1[1] + u[1] * e2[1],
                    h * n[2] + u[0] * e1[2] + u[1] * e2[2],
                ])
            }
            _ => {
                let p = ManifoldPoint {
                    coords: self.center.coords.iter().zip(u).map(|(c, d)| c + d).collect(),
                };
                self.manifold.normalize(p)
            }
        }
    }

    /// ∂φ/∂uᵢ at u.
    pub fn coord_vector(&self, u: &[f64], i: usize) -> TangentVector {
        match (&self.manifold, &self.sphere_frame) {
            (ManifoldId::Sphere2 { radius }, Some([n, e1, e2])) => {
                let h = (radius * radius - u[0] * u[0] - u[1] * u[1]).sqrt();
                let e = if i == 0 { e1 } else { e2 };
                let s = u[i] / h;
                TangentVector::new(&[e[0] - s * n[0], e[1] - s * n[1], e[2] - s * n[2]])
            }
            _ => {
                let mut e = TangentVector::zeros(self.dim());
                e.components[i] = 1.0;
                e
            }
        }
    }

    /// Metric coefficients g_ij at u, row-major.
    pub fn metric(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut g = vec![0.0; d * d];
        match &self.manifold {
            ManifoldId::Sphere2 { radius } => {
                let q = radius * radius - u[0] * u[0] - u[1] * u[1];
                for i in 0..2 {
                    for j in 0..2 {
                        g[i * 2 + j] = f64::from(u8::from(i == j)) + u[i] * u[j] / q;
                    }
                }
            }
            ManifoldId::Hyperbolic2 => {
                let y = self.center.coords[1] + u[1];
                g[0] = 1.0 / (y * y);
                g[3] = 1.0 / (y * y);
            }
            _ => {
                for i in 0..d {
                    g[i * d + i] = 1.0;
                }
            }
        }
        g
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Representative of `a` modulo `l` in [0, l).
pub fn wrap(a: f64, l: f64) -> f64 {
    let r = a.rem_euclid(l);
    if r >= l {
        0.0
    } else {
        r
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm3(a: &[f64]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit3(p: &[f64], radius: f64) -> [f64; 3] {
    [p[0] / radius, p[1] / radius, p[2] / radius]
}

fn angle3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let c = cross(a, b);
    norm3(&c).atan2(dot(a, b))
}

fn sphere_frame(a: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    // Least-aligned axis keeps the Gram-Schmidt step well conditioned.
    let k = (0..3)
        .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
        .unwrap_or(0);
    let mut axis = [0.0; 3];
    axis[k] = 1.0;
    let d = dot(&axis, a);
    let mut e1 = [axis[0] - d * a[0], axis[1] - d * a[1], axis[2] - d * a[2]];
    let n = norm3(&e1);
    for c in e1.iter_mut() {
        *c /= n;
    }
    let e2 = cross(a, &e1);
    (e1, e2)
}

fn sphere_flow(
    radius: f64,
    x: &ManifoldPoint,
    v: &TangentVector,
    tau: f64,
) -> (ManifoldPoint, TangentVector) {
    let a = unit3(&x.coords, radius);
    let s = norm3(&v.components);
    if s == 0.0 {
        return (x.clone(), v.clone());
    }
    let u = [v.components[0] / s, v.components[1] / s, v.components[2] / s];
    let phi = tau * s / radius;
    let (sn, cs) = phi.sin_cos();
    let p = [
        radius * (a[0] * cs + u[0] * sn),
        radius * (a[1] * cs + u[1] * sn),
        radius * (a[2] * cs + u[2] * sn),
    ];
    let w = [
        s * (u[0] * cs - a[0] * sn),
        s * (u[1] * cs - a[1] * sn),
        s * (u[2] * cs - a[2] * sn),
    ];
    (ManifoldPoint::new(&p), TangentVector::new(&w))
}

fn sphere_log(radius: f64, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
    let a = unit3(&x.coords, radius);
    let b = unit3(&y.coords, radius);
    let theta = angle3(&a, &b);
    if PI - theta <= CUT_LOCUS_TOL {
        return Err(Error::CutLocus);
    }
    let d = dot(&a, &b);
    let w = [b[0] - d * a[0], b[1] - d * a[1], b[2] - d * a[2]];
    let n = norm3(&w);
    if n == 0.0 {
        return Ok(TangentVector::zeros(3));
    }
    let s = radius * theta / n;
    Ok(TangentVector::new(&[s * w[0], s * w[1], s * w[2]]))
}

// Hyperboloid model {X : −X₀² + X₁² + X₂² = −1, X₀ > 0}.

fn minkowski(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn to_hyperboloid(x: f64, y: f64) -> [f64; 3] {
    let r2 = x * x + y * y;
    [(1.0 + r2) / (2.0 * y), x / y, (r2 - 1.0) / (2.0 * y)]
}

fn push_to_hyperboloid(x: f64, y: f64, v: &[f64]) -> [f64; 3] {
    let y2 = y * y;
    let (vx, vy) = (v[0], v[1]);
    [
        x / y * vx + (y2 - x * x - 1.0) / (2.0 * y2) * vy,
        vx / y - x / y2 * vy,
        x / y * vx + (y2 - x * x + 1.0) / (2.0 * y2) * vy,
    ]
}

fn from_hyperboloid(p: &[f64; 3]) -> (f64, f64) {
    let y = 1.0 / (p[0] - p[2]);
    (p[1] * y, y)
}

fn pull_from_hyperboloid(p: &[f64; 3], w: &[f64; 3]) -> [f64; 2] {
    let (_, y) = from_hyperboloid(p);
    let dy = -y * y * (w[0] - w[2]);
    let dx = w[1] * y + p[1] * dy;
    [dx, dy]
}

fn hyperbolic_flow(x: &ManifoldPoint, v: &TangentVector, tau: f64) -> (ManifoldPoint, TangentVector) {
    let (px, py) = (x.coords[0], x.coords[1]);
    let big_x = to_hyperboloid(px, py);
    let big_v = push_to_hyperboloid(px, py, &v.components);
    let n = minkowski(&big_v, &big_v).max(0.0).sqrt();
    if n == 0.0 {
        return (x.clone(), v.clone());
    }
    let s = tau * n;
    let (ch, sh) = (s.cosh(), s.sinh());
    let p = [
        ch * big_x[0] + sh * big_v[0] / n,
        ch * big_x[1] + sh * big_v[1] / n,
        ch * big_x[2] + sh * big_v[2] / n,
    ];
    let w = [
        n * sh * big_x[0] + ch * big_v[0],
        n * sh * big_x[1] + ch * big_v[1],
        n * sh * big_x[2] + ch * big_v[2],
    ];
    let (qx, qy) = from_hyperboloid(&p);
    let vel = pull_from_hyperboloid(&p, &w);
    (ManifoldPoint::new(&[qx, qy]), TangentVector::new(&vel))
}

fn hyperbolic_log(x: &ManifoldPoint, y: &ManifoldPoint) -> TangentVector {
    let d = ManifoldId::Hyperbolic2.dist(x, y);
    if d == 0.0 {
        return TangentVector::zeros(2);
    }
    let a = to_hyperboloid(x.coords[0], x.coords[1]);
    let b = to_hyperboloid(y.coords[0], y.coords[1]);
    let ch = d.cosh();
    let w = [b[0] - ch * a[0], b[1] - ch * a[1], b[2] - ch * a[2]];
    let s = d / d.sinh();
    let tangent = [s * w[0], s * w[1], s * w[2]];
    TangentVector::new(&pull_from_hyperboloid(&a, &tangent))
}
