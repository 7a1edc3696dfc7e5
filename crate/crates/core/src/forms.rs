//! Analytic 1-forms and scalar fields on the model manifolds, their registries,
//! and chart-based finite-difference codifferential / Laplace-Beltrami operators.
//!
//! Sign conventions: d*α = −div α♯ and Δ = −d*d, so Δ(x²) = 2 on ℝ¹.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldId, ManifoldPoint, TangentVector};

pub type FormFn = Arc<dyn Fn(&ManifoldPoint, &TangentVector) -> f64 + Send + Sync>;
pub type PointFn = Arc<dyn Fn(&ManifoldPoint) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&ManifoldPoint) -> TangentVector + Send + Sync>;

/// A smooth real 1-form α with its analytic codifferential d*α.
#[derive(Clone)]
pub struct OneForm {
    name: String,
    eval: FormFn,
    codiff: PointFn,
}

impl fmt::Debug for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OneForm").field("name", &self.name).finish()
    }
}

impl OneForm {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&ManifoldPoint, &TangentVector) -> f64 + Send + Sync + 'static,
        codiff: impl Fn(&ManifoldPoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            codiff: Arc::new(codiff),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_, _| 0.0, |_| 0.0)
    }

    /// df for a field with analytic gradient and Laplacian.
    pub fn exact(manifold: &ManifoldId, field: &ScalarField) -> Result<Self> {
        let grad = field.gradient.clone().ok_or_else(|| {
            Error::Unsupported(format!("field {} has no analytic gradient", field.name))
        })?;
        let lap = field.laplacian.clone().ok_or_else(|| {
            Error::Unsupported(format!("field {} has no analytic laplacian", field.name))
        })?;
        let m = manifold.clone();
        Ok(Self::new(
            format!("grad:{}", field.name),
            move |x, v| m.inner(x, &grad(x), v),
            move |x| -lap(x),
        ))
    }

    /// a·α + b·β.
    pub fn combine(a: f64, alpha: &OneForm, b: f64, beta: &OneForm) -> Self {
        let (ea, eb) = (alpha.eval.clone(), beta.eval.clone());
        let (ca, cb) = (alpha.codiff.clone(), beta.codiff.clone());
        Self::new(
            format!("{a}*{}+{b}*{}", alpha.name, beta.name),
            move |x, v| a * ea(x, v) + b * eb(x, v),
            move |x| a * ca(x) + b * cb(x),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// α_x(v).
    pub fn eval(&self, x: &ManifoldPoint, v: &TangentVector) -> f64 {
        (self.eval)(x, v)
    }

    /// Analytic (d*α)(x).
    pub fn codifferential(&self, x: &ManifoldPoint) -> f64 {
        (self.codiff)(x)
    }
}

/// A real scalar field with optional analytic gradient (chart components) and Laplacian.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    eval: PointFn,
    gradient: Option<VectorFn>,
    laplacian: Option<PointFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("name", &self.name).finish()
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, eval: impl Fn(&ManifoldPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            gradient: None,
            laplacian: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&ManifoldPoint) -> TangentVector + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_laplacian(mut self, laplacian: impl Fn(&ManifoldPoint) -> f64 + Send + Sync + 'static) -> Self {
        self.laplacian = Some(Arc::new(laplacian));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const:{c}"), move |_| c)
            .with_gradient(|x| TangentVector::zeros(x.dim()))
            .with_laplacian(|_| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &ManifoldPoint) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &ManifoldPoint) -> Option<TangentVector> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn laplacian(&self, x: &ManifoldPoint) -> Option<f64> {
        self.laplacian.as_ref().map(|l| l(x))
    }

    pub fn has_laplacian(&self) -> bool {
        self.laplacian.is_some()
    }
}

/// −div α♯ at x via central differences of √g g^{ij} α_j in a local chart.
pub fn codifferential_fd(manifold: &ManifoldId, alpha: &OneForm, x: &ManifoldPoint, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(crate::error::contract("finite-difference step must be > 0"));
    }
    let chart = manifold.chart_at(x);
    let d = chart.dim();
    let flux = |u: &[f64], i: usize| -> f64 {
        let (sqrt_g, ginv) = metric_data(&chart.metric(u), d);
        let p = chart.point(u);
        (0..d)
            .map(|j| ginv[(i, j)] * alpha.eval(&p, &chart.coord_vector(u, j)))
            .sum::<f64>()
            * sqrt_g
    };
    let (sqrt_g0, _) = metric_data(&chart.metric(&vec![0.0; d]), d);
    let mut div = 0.0;
    for i in 0..d {
        let mut up = vec![0.0; d];
        let mut dn = vec![0.0; d];
        up[i] = h;
        dn[i] = -h;
        div += (flux(&up, i) - flux(&dn, i)) / (2.0 * h);
    }
    Ok(-div / sqrt_g0)
}

/// Δf = (1/√g) ∂_i(√g g^{ij} ∂_j f) at x via nested central differences (half-step fluxes).
pub fn laplace_beltrami_fd(manifold: &ManifoldId, f: &ScalarField, x: &ManifoldPoint, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(crate::error::contract("finite-difference step must be > 0"));
    }
    let chart = manifold.chart_at(x);
    let d = chart.dim();
    let fu = |u: &[f64]| f.eval(&chart.point(u));
    let partial = |u: &[f64], j: usize| -> f64 {
        let mut a = u.to_vec();
        let mut b = u.to_vec();
        a[j] += 0.5 * h;
        b[j] -= 0.5 * h;
        (fu(&a) - fu(&b)) / h
    };
    let flux = |u: &[f64], i: usize| -> f64 {
        let (sqrt_g, ginv) = metric_data(&chart.metric(u), d);
        (0..d).map(|j| ginv[(i, j)] * partial(u, j)).sum::<f64>() * sqrt_g
    };
    let (sqrt_g0, _) = metric_data(&chart.metric(&vec![0.0; d]), d);
    let mut acc = 0.0;
    for i in 0..d {
        let mut up = vec![0.0; d];
        let mut dn = vec![0.0; d];
        up[i] = 0.5 * h;
        dn[i] = -0.5 * h;
        acc += (flux(&up, i) - flux(&dn, i)) / h;
    }
    Ok(acc / sqrt_g0)
}

fn metric_data(g: &[f64], d: usize) -> (f64, DMatrix<f64>) {
    let m = DMatrix::from_row_slice(d, d, g);
    let det = m.determinant();
    let inv = m.try_inverse().expect("chart metric is positive definite");
    (det.sqrt(), inv)
}

fn parse_f64(what: &'static str, key: &str, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Parse {
        what,
        input: key.to_string(),
        reason: e.to_string(),
    })
}

fn parse_index(what: &'static str, key: &str, s: &str, dim: usize) -> Result<usize> {
    let i = s.parse::<usize>().map_err(|e| Error::Parse {
        what,
        input: key.to_string(),
        reason: e.to_string(),
    })?;
    if i >= dim {
        return Err(Error::Parse {
            what,
            input: key.to_string(),
            reason: format!("index {i} out of range for dimension {dim}"),
        });
    }
    Ok(i)
}

fn split_key(key: &str) -> (&str, Option<&str>) {
    match key.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (key, None),
    }
}

/// Valid scalar-field keys for a manifold.
pub fn field_keys(manifold: &ManifoldId) -> Vec<&'static str> {
    match manifold {
        ManifoldId::Euclidean { .. } => vec!["const:<c>", "coord:<i>", "sq", "x_sq", "sin:<i>", "gauss"],
        ManifoldId::Torus { .. } => vec!["const:<c>", "cos:<i>", "sin:<i>", "sincos"],
        ManifoldId::Sphere2 { .. } => vec!["const:<c>", "coord:<i>", "cos_polar", "xy"],
        ManifoldId::Hyperbolic2 => vec!["const:<c>", "x", "y", "log_y", "x_sq"],
    }
}

/// Valid 1-form keys for a manifold.
pub fn form_keys(manifold: &ManifoldId) -> Vec<&'static str> {
    let mut keys = match manifold {
        ManifoldId::Euclidean { .. } => vec!["zero", "dx:<i>", "x_dx", "x_dy", "rot", "sin_dy", "xy_dx"],
        ManifoldId::Torus { .. } => vec!["zero", "dx:<i>", "a_dtheta:<a>", "cos_dtheta:<a>"],
        ManifoldId::Sphere2 { .. } => vec!["zero", "rot_z:<a>", "z_rot", "x_dz"],
        ManifoldId::Hyperbolic2 => vec!["zero", "dx", "dy", "x_dy", "x_dx"],
    };
    keys.push("grad:<field>");
    keys
}

fn unknown_field(manifold: &ManifoldId, key: &str) -> Error {
    Error::UnknownKey {
        kind: "field",
        key: key.to_string(),
        valid: field_keys(manifold).iter().map(|k| k.to_string()).collect(),
    }
}

fn unknown_form(manifold: &ManifoldId, key: &str) -> Error {
    Error::UnknownKey {
        kind: "form",
        key: key.to_string(),
        valid: form_keys(manifold).iter().map(|k| k.to_string()).collect(),
    }
}

fn unit(dim: usize, i: usize, scale: f64) -> TangentVector {
    let mut v = TangentVector::zeros(dim);
    v.components[i] = scale;
    v
}

/// Looks up a registered scalar field by key (e.g. `"x_sq"`, `"cos:0"`, `"coord:2"`).
pub fn field(manifold: &ManifoldId, key: &str) -> Result<ScalarField> {
    let (kind, arg) = split_key(key.trim());
    if kind == "const" {
        let c = parse_f64("field", key, arg.unwrap_or("1"))?;
        return Ok(ScalarField::constant(c));
    }
    let dim = manifold.coord_len();
    let name = key.trim().to_string();
    let f = match (manifold, kind) {
        (ManifoldId::Euclidean { .. }, "coord") => {
            let i = parse_index("field", key, arg.unwrap_or("0"), dim)?;
            ScalarField::new(name, move |x| x.coords[i])
                .with_gradient(move |_| unit(dim, i, 1.0))
                .with_laplacian(|_| 0.0)
        }
        (ManifoldId::Euclidean { n }, "sq") => {
            let n = *n as f64;
            ScalarField::new(name, |x| x.coords.iter().map(|c| c * c).sum())
                .with_gradient(|x| TangentVector {
                    components: x.coords.iter().map(|c| 2.0 * c).collect(),
                })
                .with_laplacian(move |_| 2.0 * n)
        }
        (ManifoldId::Euclidean { .. }, "x_sq") => ScalarField::new(name, |x| x.coords[0] * x.coords[0])
            .with_gradient(move |x| unit(dim, 0, 2.0 * x.coords[0]))
            .with_laplacian(|_| 2.0),
        (ManifoldId::Euclidean { .. }, "sin") => {
            let i = parse_index("field", key, arg.unwrap_or("0"), dim)?;
            ScalarField::new(name, move |x| x.coords[i].sin())
                .with_gradient(move |x| unit(dim, i, x.coords[i].cos()))
                .with_laplacian(move |x| -x.coords[i].sin())
        }
        (ManifoldId::Euclidean { n }, "gauss") => {
            let n = *n as f64;
            let g = |x: &ManifoldPoint| (-0.5 * x.coords.iter().map(|c| c * c).sum::<f64>()).exp();
            ScalarField::new(name, g)
                .with_gradient(move |x| {
                    let e = g(x);
                    TangentVector {
                        components: x.coords.iter().map(|c| -c * e).collect(),
                    }
                })
                .with_laplacian(move |x| {
                    let r2: f64 = x.coords.iter().map(|c| c * c).sum();
                    (r2 - n) * g(x)
                })
        }
        (ManifoldId::Torus { periods }, "cos" | "sin") => {
            let i = parse_index("field", key, arg.unwrap_or("0"), dim)?;
            let k = TAU / periods[i];
            if kind == "cos" {
                ScalarField::new(name, move |x| (k * x.coords[i]).cos())
                    .with_gradient(move |x| unit(dim, i, -k * (k * x.coords[i]).sin()))
                    .with_laplacian(move |x| -k * k * (k * x.coords[i]).cos())
            } else {
                ScalarField::new(name, move |x| (k * x.coords[i]).sin())
                    .with_gradient(move |x| unit(dim, i, k * (k * x.coords[i]).cos()))
                    .with_laplacian(move |x| -k * k * (k * x.coords[i]).sin())
            }
        }
        (ManifoldId::Torus { periods }, "sincos") if periods.len() >= 2 => {
            let (k0, k1) = (TAU / periods[0], TAU / periods[1]);
            let f = move |x: &ManifoldPoint| (k0 * x.coords[0]).sin() * (k1 * x.coords[1]).cos();
            ScalarField::new(name, f)
                .with_gradient(move |x| {
                    let mut v = TangentVector::zeros(dim);
                    v.components[0] = k0 * (k0 * x.coords[0]).cos() * (k1 * x.coords[1]).cos();
                    v.components[1] = -k1 * (k0 * x.coords[0]).sin() * (k1 * x.coords[1]).sin();
                    v
                })
                .with_laplacian(move |x| -(k0 * k0 + k1 * k1) * f(x))
        }
        (ManifoldId::Sphere2 { radius }, "coord") => {
            let r = *radius;
            let i = parse_index("field", key, arg.unwrap_or("0"), 3)?;
            ScalarField::new(name, move |x| x.coords[i])
                .with_gradient(move |x| sphere_project(x, r, unit(3, i, 1.0)))
                .with_laplacian(move |x| -2.0 * x.coords[i] / (r * r))
        }
        (ManifoldId::Sphere2 { radius }, "cos_polar") => {
            let r = *radius;
            ScalarField::new(name, move |x| x.coords[2] / r)
                .with_gradient(move |x| sphere_project(x, r, unit(3, 2, 1.0 / r)))
                .with_laplacian(move |x| -2.0 * x.coords[2] / (r * r * r))
        }
        (ManifoldId::Sphere2 { radius }, "xy") => {
            let r = *radius;
            ScalarField::new(name, |x| x.coords[0] * x.coords[1])
                .with_gradient(move |x| {
                    sphere_project(x, r, TangentVector::new(&[x.coords[1], x.coords[0], 0.0]))
                })
                .with_laplacian(move |x| -6.0 * x.coords[0] * x.coords[1] / (r * r))
        }
        (ManifoldId::Hyperbolic2, "x") => ScalarField::new(name, |x| x.coords[0])
            .with_gradient(|x| TangentVector::new(&[x.coords[1] * x.coords[1], 0.0]))
            .with_laplacian(|_| 0.0),
        (ManifoldId::Hyperbolic2, "y") => ScalarField::new(name, |x| x.coords[1])
            .with_gradient(|x| TangentVector::new(&[0.0, x.coords[1] * x.coords[1]]))
            .with_laplacian(|_| 0.0),
        (ManifoldId::Hyperbolic2, "log_y") => ScalarField::new(name, |x| x.coords[1].ln())
            .with_gradient(|x| TangentVector::new(&[0.0, x.coords[1]]))
            .with_laplacian(|_| -1.0),
        (ManifoldId::Hyperbolic2, "x_sq") => ScalarField::new(name, |x| x.coords[0] * x.coords[0])
            .with_gradient(|x| TangentVector::new(&[2.0 * x.coords[0] * x.coords[1] * x.coords[1], 0.0]))
            .with_laplacian(|x| 2.0 * x.coords[1] * x.coords[1]),
        _ => return Err(unknown_field(manifold, key)),
    };
    Ok(f)
}

fn sphere_project(x: &ManifoldPoint, r: f64, v: TangentVector) -> TangentVector {
    let d: f64 = x.coords.iter().zip(&v.components).map(|(a, b)| a * b).sum::<f64>() / (r * r);
    TangentVector {
        components: v.components.iter().zip(&x.coords).map(|(a, p)| a - d * p).collect(),
    }
}

/// Looks up a registered 1-form by key (e.g. `"x_dy"`, `"a_dtheta:0.3"`, `"grad:x_sq"`).
pub fn form(manifold: &ManifoldId, key: &str) -> Result<OneForm> {
    let key = key.trim();
    let (kind, arg) = split_key(key);
    if kind == "zero" {
        return Ok(OneForm::zero());
    }
    if kind == "grad" {
        let fkey = arg.ok_or_else(|| unknown_form(manifold, key))?;
        let f = field(manifold, fkey)?;
        return OneForm::exact(manifold, &f);
    }
    let dim = manifold.coord_len();
    let name = key.to_string();
    let form = match (manifold, kind) {
        (ManifoldId::Euclidean { .. } | ManifoldId::Torus { .. }, "dx") => {
            let i = parse_index("form", key, arg.unwrap_or("0"), dim)?;
            OneForm::new(name, move |_, v| v.components[i], |_| 0.0)
        }
        (ManifoldId::Euclidean { .. }, "x_dx") => {
            OneForm::new(name, |x, v| x.coords[0] * v.components[0], |_| -1.0)
        }
        (ManifoldId::Euclidean { n }, "x_dy") if *n >= 2 => {
            OneForm::new(name, |x, v| x.coords[0] * v.components[1], |_| 0.0)
        }
        (ManifoldId::Euclidean { n }, "rot") if *n >= 2 => OneForm::new(
            name,
            |x, v| -x.coords[1] * v.components[0] + x.coords[0] * v.components[1],
            |_| 0.0,
        ),
        (ManifoldId::Euclidean { n }, "sin_dy") if *n >= 2 => {
            OneForm::new(name, |x, v| x.coords[0].sin() * v.components[1], |_| 0.0)
        }
        (ManifoldId::Euclidean { n }, "xy_dx") if *n >= 2 => OneForm::new(
            name,
            |x, v| x.coords[0] * x.coords[1] * v.components[0],
            |x| -x.coords[1],
        ),
        (ManifoldId::Torus { .. }, "a_dtheta") => {
            let a = parse_f64("form", key, arg.unwrap_or("1"))?;
            OneForm::new(name, move |_, v| a * v.components[0], |_| 0.0)
        }
        (ManifoldId::Torus { periods }, "cos_dtheta") => {
            let a = parse_f64("form", key, arg.unwrap_or("1"))?;
            let k = TAU / periods[0];
            OneForm::new(
                name,
                move |x, v| a * (k * x.coords[0]).cos() * v.components[0],
                move |x| a * k * (k * x.coords[0]).sin(),
            )
        }
        (ManifoldId::Sphere2 { .. }, "rot_z") => {
            let a = parse_f64("form", key, arg.unwrap_or("1"))?;
            OneForm::new(
                name,
                move |x, v| a * (-x.coords[1] * v.components[0] + x.coords[0] * v.components[1]),
                |_| 0.0,
            )
        }
        (ManifoldId::Sphere2 { .. }, "z_rot") => OneForm::new(
            name,
            |x, v| x.coords[2] * (-x.coords[1] * v.components[0] + x.coords[0] * v.components[1]),
            |_| 0.0,
        ),
        (ManifoldId::Sphere2 { radius }, "x_dz") => {
            let r2 = radius * radius;
            OneForm::new(
                name,
                |x, v| x.coords[0] * v.components[2],
                move |x| 3.0 * x.coords[0] * x.coords[2] / r2,
            )
        }
        (ManifoldId::Hyperbolic2, "dx") => OneForm::new(name, |_, v| v.components[0], |_| 0.0),
        (ManifoldId::Hyperbolic2, "dy") => OneForm::new(name, |_, v| v.components[1], |_| 0.0),
        (ManifoldId::Hyperbolic2, "x_dy") => {
            OneForm::new(name, |x, v| x.coords[0] * v.components[1], |_| 0.0)
        }
        (ManifoldId::Hyperbolic2, "x_dx") => OneForm::new(
            name,
            |x, v| x.coords[0] * v.components[0],
            |x| -x.coords[1] * x.coords[1],
        ),
        _ => return Err(unknown_form(manifold, key)),
    };
    Ok(form)
}

/// Concrete registry keys usable for sweeping tests (placeholders instantiated).
pub fn sample_form_keys(manifold: &ManifoldId) -> Vec<String> {
    let mut keys: Vec<String> = form_keys(manifold)
        .into_iter()
        .filter(|k| !k.starts_with("grad"))
        .map(|k| k.replace("<i>", "0").replace("<a>", "0.7"))
        .collect();
    for f in sample_field_keys(manifold) {
        if !f.starts_with("const") {
            keys.push(format!("grad:{f}"));
        }
    }
    keys
}

pub fn sample_field_keys(manifold: &ManifoldId) -> Vec<String> {
    field_keys(manifold)
        .into_iter()
        .filter(|k| manifold.dim() >= 2 || *k != "sincos")
        .map(|k| k.replace("<i>", "0").replace("<c>", "1.5"))
        .collect()
}
