//! One-dimensional grid models of magnetic heat semigroups.
//!
//! `H = (d + iα)*(d + iα) + V` is discretized on a periodic grid (circle) or on
//! the interior nodes of an interval with Dirichlet ends. The covariant
//! difference on the link j → j+1 uses the Peierls phase θ_j = Δx(α_j + α_{j+1})/2:
//!
//! ```text
//! (D f)_j = (e^{iθ_j/2} f_{j+1} − e^{−iθ_j/2} f_j) / Δx
//! ```
//!
//! and `H = D†D + diag(V)`. Kernels carry the 1/Δx normalization, so
//! `(K f)_i = Σ_j K_ij f_j Δx`.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{contract, Error, Result};
use crate::forms::OneForm;
use crate::manifold::{ManifoldId, ManifoldPoint, TangentVector};
use crate::measure::IntervalMeasure;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Domain {
    Circle { period: f64 },
    Interval { length: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    domain: Domain,
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub fn circle(period: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(contract(format!("grid needs n ≥ 8, got {n}")));
        }
        if !(period > 0.0) {
            return Err(contract("period must be > 0"));
        }
        Ok(Self {
            domain: Domain::Circle { period },
            n,
            dx: period / n as f64,
        })
    }

    pub fn interval(length: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(contract(format!("grid needs n ≥ 8, got {n}")));
        }
        if !(length > 0.0) {
            return Err(contract("length must be > 0"));
        }
        Ok(Self {
            domain: Domain::Interval { length },
            n,
            dx: length / (n + 1) as f64,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.domain, Domain::Circle { .. })
    }

    pub fn node(&self, j: usize) -> f64 {
        match self.domain {
            Domain::Circle { .. } => j as f64 * self.dx,
            Domain::Interval { .. } => (j + 1) as f64 * self.dx,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// The 1-D manifold the grid discretizes.
    pub fn manifold(&self) -> ManifoldId {
        match self.domain {
            Domain::Circle { period } => ManifoldId::Torus { periods: vec![period] },
            Domain::Interval { .. } => ManifoldId::Euclidean { n: 1 },
        }
    }

    pub fn point(&self, j: usize) -> ManifoldPoint {
        ManifoldPoint::new(&[self.node(j)])
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let d = (self.node(i) - self.node(j)).abs();
        match self.domain {
            Domain::Circle { period } => d.min(period - d),
            Domain::Interval { .. } => d,
        }
    }

    /// Injectivity bound at node j: half the period, or the distance to the boundary.
    pub fn injectivity_bound(&self, j: usize) -> f64 {
        match self.domain {
            Domain::Circle { period } => 0.5 * period,
            Domain::Interval { length } => {
                let x = self.node(j);
                x.min(length - x)
            }
        }
    }

    /// Node values a(x_j) of α = a dx.
    pub fn sample_form(&self, alpha: &OneForm) -> Vec<f64> {
        let e = TangentVector::new(&[1.0]);
        (0..self.n).map(|j| alpha.eval(&self.point(j), &e)).collect()
    }

    pub fn tag(&self) -> String {
        match self.domain {
            Domain::Circle { period } => format!("circle({period},n={})", self.n),
            Domain::Interval { length } => format!("interval({length},n={})", self.n),
        }
    }
}

/// Peierls phases θ_j for the links of the grid (n on the circle, n + 1 on the interval).
pub fn link_phases(grid: &Grid1D, alpha: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n;
    if alpha.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
    }
    let dx = grid.dx;
    Ok(if grid.is_circle() {
        (0..n).map(|j| 0.5 * dx * (alpha[j] + alpha[(j + 1) % n])).collect()
    } else {
        let mut th = Vec::with_capacity(n + 1);
        th.push(dx * alpha[0]);
        th.extend((0..n - 1).map(|j| 0.5 * dx * (alpha[j] + alpha[j + 1])));
        th.push(dx * alpha[n - 1]);
        th
    })
}

/// H from explicit link phases (see [`link_phases`] for the layout).
pub fn build_magnetic_h_links(grid: &Grid1D, theta: &[f64], v: &[f64]) -> Result<CMatrix> {
    let n = grid.n;
    let n_links = if grid.is_circle() { n } else { n + 1 };
    if theta.len() != n_links {
        return Err(Error::DimensionMismatch { expected: n_links, got: theta.len() });
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    let w = 1.0 / (grid.dx * grid.dx);
    let mut h = CMatrix::zeros(n, n);
    // Each link l contributes |e^{iθ/2} f_b − e^{−iθ/2} f_a|²/Δx² to ⟨f, Hf⟩.
    let mut add_link = |a: Option<usize>, b: Option<usize>, th: f64| {
        if let Some(a) = a {
            h[(a, a)] += w;
        }
        if let Some(b) = b {
            h[(b, b)] += w;
        }
        if let (Some(a), Some(b)) = (a, b) {
            let hop = Complex64::from_polar(w, th);
            h[(a, b)] -= hop;
            h[(b, a)] -= hop.conj();
        }
    };
    if grid.is_circle() {
        for (j, &th) in theta.iter().enumerate() {
            add_link(Some(j), Some((j + 1) % n), th);
        }
    } else {
        for (l, &th) in theta.iter().enumerate() {
            let a = l.checked_sub(1);
            let b = (l < n).then_some(l);
            add_link(a, b, th);
        }
    }
    for (j, &vj) in v.iter().enumerate() {
        h[(j, j)] += vj;
    }
    Ok(h)
}

/// H = D†D + diag(V) from node values of α and V.
pub fn build_magnetic_h(grid: &Grid1D, alpha: &[f64], v: &[f64]) -> Result<CMatrix> {
    build_magnetic_h_links(grid, &link_phases(grid, alpha)?, v)
}

/// max |H − H†|.
pub fn hermitian_defect(h: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian eigendecomposition of H, reusable for many times t.
#[derive(Clone, Debug)]
pub struct Spectral {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectral {
    pub fn new(h: &CMatrix) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), got: h.ncols() });
        }
        let defect = hermitian_defect(h);
        if defect > 1e-9 * (1.0 + h.norm()) {
            return Err(contract(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        let eig = h.clone().symmetric_eigen();
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    /// V·diag(g(λ))·V†.
    pub fn apply_fn(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (c, &lam) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(c).scale_mut(g(lam));
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn expm_neg(&self, t: f64) -> CMatrix {
        self.apply_fn(|lam| (-t * lam).exp())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum KernelTag {
    Free,
    Magnetic { alpha: String, v: String },
    ChernoffStep { alpha: String, measure: String },
}

/// An n×n kernel on a grid, normalized so that (K f)_i = Σ_j K_ij f_j Δx.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub entries: CMatrix,
    pub t: f64,
    pub dx: f64,
    pub tag: KernelTag,
}

impl KernelMatrix {
    pub fn apply(&self, f: &CVector) -> CVector {
        (&self.entries * f) * Complex64::new(self.dx, 0.0)
    }

    /// max_i Σ_j |K_ij| Δx.
    pub fn max_abs_row_sum(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>() * self.dx)
            .fold(0.0, f64::max)
    }

    /// Row sums Σ_j K_ij Δx.
    pub fn row_sums(&self) -> Vec<Complex64> {
        self.entries
            .row_iter()
            .map(|r| r.iter().sum::<Complex64>() * self.dx)
            .collect()
    }
}

/// e^{−tH}/Δx.
pub fn heat_kernel(grid: &Grid1D, spectral: &Spectral, t: f64, tag: KernelTag) -> Result<KernelMatrix> {
    if t < 0.0 {
        return Err(contract(format!("t must be ≥ 0, got {t}")));
    }
    if spectral.eigenvectors.nrows() != grid.n {
        return Err(Error::DimensionMismatch {
            expected: grid.n,
            got: spectral.eigenvectors.nrows(),
        });
    }
    let entries = if t == 0.0 {
        CMatrix::identity(grid.n, grid.n)
    } else {
        spectral.expm_neg(t)
    };
    Ok(KernelMatrix {
        entries: entries / Complex64::new(grid.dx, 0.0),
        t,
        dx: grid.dx,
        tag,
    })
}

/// max_{ij} (|h_α| − h); the diamagnetic inequality holds iff this is ≤ 0 up to roundoff.
pub fn diamagnetic_check(h_alpha: &KernelMatrix, h_free: &KernelMatrix) -> Result<f64> {
    if h_alpha.entries.shape() != h_free.entries.shape() {
        return Err(Error::DimensionMismatch {
            expected: h_free.entries.nrows(),
            got: h_alpha.entries.nrows(),
        });
    }
    if h_alpha.t != h_free.t {
        return Err(contract("kernels at different times"));
    }
    Ok(h_alpha
        .entries
        .iter()
        .zip(h_free.entries.iter())
        .map(|(a, f)| a.norm() - f.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// C² cut-off: 1 on [0, 1/3], 0 on [1/2, ∞), quintic smoothstep between.
pub fn kappa(s: f64) -> f64 {
    const A: f64 = 1.0 / 3.0;
    const B: f64 = 0.5;
    if s <= A {
        1.0
    } else if s >= B {
        0.0
    } else {
        let u = (s - A) / (B - A);
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// Fixed fraction of the injectivity bound used as cut-off radius.
pub const CUTOFF_FRACTION: f64 = 0.9;

/// One step R_{α,t}: h_α(t)·χ·exp(−i I_P(α)(x, y) − i t (d*α)(x)·(2M₁(P) − 1)).
pub fn chernoff_step(grid: &Grid1D, alpha: &OneForm, p: &IntervalMeasure, t_step: f64) -> Result<KernelMatrix> {
    if !(t_step > 0.0) {
        return Err(contract("t_step must be > 0"));
    }
    let a = grid.sample_form(alpha);
    let spectral = Spectral::new(&build_magnetic_h(grid, &a, &vec![0.0; grid.n])?)?;
    chernoff_step_with(grid, &spectral, alpha, p, t_step)
}

fn chernoff_step_with(
    grid: &Grid1D,
    spectral: &Spectral,
    alpha: &OneForm,
    p: &IntervalMeasure,
    t_step: f64,
) -> Result<KernelMatrix> {
    let mut k = heat_kernel(
        grid,
        spectral,
        t_step,
        KernelTag::ChernoffStep {
            alpha: alpha.name().to_string(),
            measure: p.to_string(),
        },
    )?;
    let m = grid.manifold();
    let skew = p.skew();
    for i in 0..grid.n {
        let xi = grid.point(i);
        let r = CUTOFF_FRACTION * grid.injectivity_bound(i);
        let drift = t_step * alpha.codifferential(&xi) * skew;
        for j in 0..grid.n {
            let d = grid.dist(i, j);
            let chi = kappa(d * d / (r * r));
            if chi == 0.0 {
                k.entries[(i, j)] = Complex64::new(0.0, 0.0);
                continue;
            }
            let phase = p.i_p(&m, alpha, &xi, &grid.point(j)) + drift;
            k.entries[(i, j)] *= (-I * phase).exp() * chi;
        }
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChernoffRow {
    pub k: u32,
    pub sup_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChernoffReport {
    pub grid: String,
    pub alpha_tag: String,
    pub p_tag: String,
    pub t: f64,
    pub rows: Vec<ChernoffRow>,
    pub strictly_decreasing: bool,
    /// (R_{t/2^k})^{2^k}·1 at the last k.
    #[serde(skip)]
    pub terminal: CVector,
    /// Nodes compared (boundary-adjacent nodes are dropped on the interval).
    #[serde(skip)]
    pub compared: Vec<usize>,
}

impl ChernoffReport {
    pub fn terminal_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.sup_error)
    }

    pub fn csv_rows(&self) -> String {
        self.rows
            .iter()
            .map(|r| format!("{},{},{},{}\n", r.k, r.sup_error, self.alpha_tag, self.p_tag))
            .collect()
    }
}

pub const CHERNOFF_CSV_HEADER: &str = "k,sup_error,alpha_tag,P_tag\n";

fn compared_nodes(grid: &Grid1D) -> Vec<usize> {
    if grid.is_circle() {
        (0..grid.n).collect()
    } else {
        (1..grid.n - 1).collect()
    }
}

/// ‖(R_{α,t/2^k})^{2^k}·1 − e^{−tH₀}·1‖∞ for each k in `k_list`.
pub fn chernoff_power_test(grid: &Grid1D, alpha: &OneForm, p: &IntervalMeasure, t: f64, k_list: &[u32]) -> Result<ChernoffReport> {
    if !(t > 0.0) {
        return Err(contract("t must be > 0"));
    }
    if k_list.is_empty() || k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(contract("k_list must be non-empty and strictly increasing"));
    }
    let n = grid.n;
    let zero = vec![0.0; n];
    let free = Spectral::new(&build_magnetic_h(grid, &zero, &zero)?)?;
    let ones = CVector::from_element(n, Complex64::new(1.0, 0.0));
    let reference = heat_kernel(grid, &free, t, KernelTag::Free)?.apply(&ones);
    let mag = Spectral::new(&build_magnetic_h(grid, &grid.sample_form(alpha), &zero)?)?;
    let compared = compared_nodes(grid);
    let mut rows = Vec::with_capacity(k_list.len());
    let mut terminal = ones.clone();
    for &k in k_list {
        let steps = 1usize << k;
        let r = chernoff_step_with(grid, &mag, alpha, p, t / steps as f64)?;
        let mut u = ones.clone();
        for _ in 0..steps {
            u = r.apply(&u);
        }
        let sup_error = compared
            .iter()
            .map(|&j| (u[j] - reference[j]).norm())
            .fold(0.0, f64::max);
        rows.push(ChernoffRow { k, sup_error });
        terminal = u;
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    Ok(ChernoffReport {
        grid: grid.tag(),
        alpha_tag: alpha.name().to_string(),
        p_tag: p.to_string(),
        t,
        rows,
        strictly_decreasing,
        terminal,
        compared,
    })
}

/// Largest sup-distance between the terminal vectors of any two reports.
pub fn max_terminal_discrepancy(reports: &[ChernoffReport]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            for &j in &a.compared {
                worst = worst.max((a.terminal[j] - b.terminal[j]).norm());
            }
        }
    }
    worst
}

/// A registered grid case for the diamagnetic inequality.
pub struct DiamagneticCase {
    pub name: &'static str,
    pub grid: Grid1D,
    pub alpha: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl fmt::Debug for DiamagneticCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiamagneticCase({}, {}, t={})", self.name, self.grid.tag(), self.t)
    }
}

pub fn diamagnetic_cases() -> Result<Vec<DiamagneticCase>> {
    let c = Grid1D::circle(TAU, 128)?;
    let c1 = Grid1D::circle(1.0, 64)?;
    let iv = Grid1D::interval(1.0, 100)?;
    let on = |g: &Grid1D, f: &dyn Fn(f64) -> f64| g.nodes().into_iter().map(f).collect::<Vec<_>>();
    Ok(vec![
        DiamagneticCase {
            name: "circle-const",
            alpha: on(&c, &|_| 0.7),
            v: on(&c, &|_| 0.0),
            t: 0.3,
            grid: c.clone(),
        },
        DiamagneticCase {
            name: "circle-cos",
            alpha: on(&c, &|x| 0.5 + 0.8 * x.cos()),
            v: on(&c, &|_| 0.0),
            t: 0.1,
            grid: c.clone(),
        },
        DiamagneticCase {
            name: "circle-sin2-potential",
            alpha: on(&c, &|x| 1.5 * (2.0 * x).sin()),
            v: on(&c, &|x| 1.0 + x.cos()),
            t: 0.5,
            grid: c,
        },
        DiamagneticCase {
            name: "interval-oscillatory",
            alpha: on(&iv, &|x| 3.0 * (6.0 * std::f64::consts::PI * x).sin()),
            v: on(&iv, &|_| 0.0),
            t: 0.01,
            grid: iv.clone(),
        },
        DiamagneticCase {
            name: "interval-linear-potential",
            alpha: on(&iv, &|x| 2.0 * x),
            v: on(&iv, &|x| x * x),
            t: 0.05,
            grid: iv,
        },
        DiamagneticCase {
            name: "unit-circle-strong",
            alpha: on(&c1, &|_| 4.0),
            v: on(&c1, &|_| 0.0),
            t: 1.0,
            grid: c1,
        },
    ])
}

/// max(|h_{α,V}| − h_{0,V}) for a case.
pub fn run_diamagnetic_case(case: &DiamagneticCase) -> Result<f64> {
    let zero = vec![0.0; case.grid.n];
    let ha = Spectral::new(&build_magnetic_h(&case.grid, &case.alpha, &case.v)?)?;
    let h0 = Spectral::new(&build_magnetic_h(&case.grid, &zero, &case.v)?)?;
    let tag = KernelTag::Magnetic {
        alpha: case.name.to_string(),
        v: case.name.to_string(),
    };
    diamagnetic_check(
        &heat_kernel(&case.grid, &ha, case.t, tag)?,
        &heat_kernel(&case.grid, &h0, case.t, KernelTag::Free)?,
    )
}
