//! Brownian paths sampled at dyadic times jt/2^k.
//!
//! The generator is Δ (heat operator ∂t − Δ), so every coordinate of an increment
//! over a time step h has variance **2h**, not h.
//!
//! Flat manifolds get exact Gaussian increments (wrapped on the torus). The sphere
//! and the hyperbolic plane use a geodesic random walk: a tangent Gaussian with
//! covariance 2h·Id in an orthonormal frame, pushed through exp.
//!
//! Randomness for path `i` comes from a ChaCha stream selected by `(seed, i)`, so
//! any path can be regenerated in isolation and ensembles do not depend on
//! scheduling.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{contract, Error, Result};
use crate::manifold::{ManifoldId, ManifoldPoint, TangentVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedInfo {
    pub seed: u64,
    pub path_index: u64,
}

#[derive(Clone, Debug)]
pub struct DyadicPath {
    manifold: ManifoldId,
    t_total: f64,
    level: u32,
    points: Vec<ManifoldPoint>,
    seed_info: Option<SeedInfo>,
}

impl DyadicPath {
    /// Wraps precomputed points; `points.len()` must be 2^k + 1.
    pub fn from_points(manifold: ManifoldId, t_total: f64, points: Vec<ManifoldPoint>) -> Result<Self> {
        let n = points.len();
        if n < 2 || !(n - 1).is_power_of_two() {
            return Err(contract(format!("dyadic path needs 2^k + 1 points, got {n}")));
        }
        if !(t_total > 0.0) {
            return Err(contract("t_total must be > 0"));
        }
        for p in &points {
            manifold.validate_point(p)?;
        }
        Ok(Self {
            manifold,
            t_total,
            level: (n - 1).trailing_zeros(),
            points,
            seed_info: None,
        })
    }

    /// Samples a deterministic curve s ↦ c(s) at the dyadic times of level k.
    pub fn from_curve(
        manifold: ManifoldId,
        t_total: f64,
        level: u32,
        curve: impl Fn(f64) -> ManifoldPoint,
    ) -> Result<Self> {
        let n = 1usize << level;
        let points = (0..=n)
            .map(|j| manifold.normalize(curve(t_total * j as f64 / n as f64)))
            .collect();
        Self::from_points(manifold, t_total, points)
    }

    pub fn manifold(&self) -> &ManifoldId {
        &self.manifold
    }

    pub fn t_total(&self) -> f64 {
        self.t_total
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// t / 2^k.
    pub fn step(&self) -> f64 {
        self.t_total / (1u64 << self.level) as f64
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    pub fn start(&self) -> &ManifoldPoint {
        &self.points[0]
    }

    pub fn end(&self) -> &ManifoldPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn seed_info(&self) -> Option<SeedInfo> {
        self.seed_info
    }

    /// π_{k'} of the same curve: every 2^{k − k'}-th point.
    pub fn subsample(&self, k_coarse: u32) -> Result<DyadicPath> {
        if k_coarse > self.level {
            return Err(contract(format!(
                "cannot subsample level {} path to finer level {k_coarse}",
                self.level
            )));
        }
        let stride = 1usize << (self.level - k_coarse);
        Ok(DyadicPath {
            manifold: self.manifold.clone(),
            t_total: self.t_total,
            level: k_coarse,
            points: self.points.iter().step_by(stride).cloned().collect(),
            seed_info: self.seed_info,
        })
    }

    /// Brownian-bridge midpoint insertion up to level `k_fine` (flat manifolds only).
    ///
    /// Given neighbours a, b at time spacing h, the midpoint is drawn with mean
    /// (a + b)/2 and per-coordinate variance h/2; existing points are kept
    /// bit-exact, so `subsample(self.level)` of the result returns `self`.
    pub fn bridge_refine(&self, k_fine: u32, seed: u64) -> Result<DyadicPath> {
        if !self.manifold.is_flat() {
            return Err(Error::Unsupported(format!(
                "bridge refinement needs a flat manifold, got {}",
                self.manifold
            )));
        }
        if k_fine < self.level {
            return Err(contract(format!("k_fine {k_fine} below path level {}", self.level)));
        }
        let stream = self.seed_info.map_or(0, |s| s.path_index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut points = self.points.clone();
        let mut spacing = self.step();
        for _ in self.level..k_fine {
            let sd = (0.5 * spacing).sqrt();
            let mut refined = Vec::with_capacity(2 * points.len() - 1);
            for pair in points.windows(2) {
                refined.push(pair[0].clone());
                let d = self.manifold.log_map(&pair[0], &pair[1])?;
                let mut v = d.scaled(0.5);
                for c in v.components.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *c += sd * z;
                }
                refined.push(self.manifold.exp_map(&pair[0], &v)?);
            }
            refined.push(points[points.len() - 1].clone());
            points = refined;
            spacing *= 0.5;
        }
        Ok(DyadicPath {
            manifold: self.manifold.clone(),
            t_total: self.t_total,
            level: k_fine,
            points,
            seed_info: self.seed_info,
        })
    }

    /// Restriction to the first `m` steps, i.e. to [0, m·t/2^k], as a plain point list.
    pub fn prefix(&self, m: usize) -> &[ManifoldPoint] {
        &self.points[..=m]
    }
}

/// Samples π_k of a Brownian path started at `x0`, fully determined by `(seed, path_index)`.
pub fn sample_bm(
    manifold: &ManifoldId,
    x0: &ManifoldPoint,
    t: f64,
    k: u32,
    seed: u64,
    path_index: u64,
) -> Result<DyadicPath> {
    if !(t > 0.0) {
        return Err(contract("t must be > 0"));
    }
    manifold.validate_point(x0)?;
    let n = 1usize << k;
    let h = t / n as f64;
    let sd = (2.0 * h).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    let mut points = Vec::with_capacity(n + 1);
    points.push(x0.clone());
    let mut cur = x0.clone();
    let dim = manifold.dim();
    for _ in 0..n {
        let next = if manifold.is_flat() {
            let mut p = cur.clone();
            for c in p.coords.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c += sd * z;
            }
            manifold.normalize(p)
        } else {
            let frame = manifold.orthonormal_frame(&cur);
            let mut v = TangentVector::zeros(manifold.coord_len());
            for e in frame.iter().take(dim) {
                let z: f64 = StandardNormal.sample(&mut rng);
                v = v.add(&e.scaled(sd * z));
            }
            manifold.normalize(manifold.exp_map(&cur, &v)?)
        };
        points.push(next.clone());
        cur = next;
    }
    Ok(DyadicPath {
        manifold: manifold.clone(),
        t_total: t,
        level: k,
        points,
        seed_info: Some(SeedInfo { seed, path_index }),
    })
}

/// A lazily generated family of paths sharing (manifold, x₀, t, k).
///
/// Path `i` is `sample_bm(…, seed, i)`; per-path results are collected in index
/// order, so any reduction over them is independent of the worker count.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    pub manifold: ManifoldId,
    pub x0: ManifoldPoint,
    pub t: f64,
    pub level: u32,
    pub seed: u64,
    pub count: usize,
}

impl PathEnsemble {
    pub fn new(manifold: ManifoldId, x0: ManifoldPoint, t: f64, level: u32, seed: u64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(contract("ensemble needs at least one path"));
        }
        if !(t > 0.0) {
            return Err(contract("t must be > 0"));
        }
        manifold.validate_point(&x0)?;
        Ok(Self {
            manifold,
            x0,
            t,
            level,
            seed,
            count,
        })
    }

    pub fn path(&self, i: usize) -> Result<DyadicPath> {
        sample_bm(&self.manifold, &self.x0, self.t, self.level, self.seed, i as u64)
    }

    /// Applies `f` to every path in parallel, returning results in path order.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&DyadicPath) -> Result<T> + Sync,
    {
        (0..self.count)
            .into_par_iter()
            .map(|i| self.path(i).and_then(|p| f(&p)))
            .collect()
    }

    pub fn materialize(&self) -> Result<Vec<DyadicPath>> {
        self.map(|p| Ok(p.clone()))
    }
}

/// CSV dump: `path_index,j,time,coord_0,…,coord_{d−1}`.
pub fn write_paths_csv<W: Write>(out: &mut W, paths: &[DyadicPath]) -> Result<()> {
    let d = paths.first().map_or(0, |p| p.manifold.coord_len());
    let mut header = String::from("path_index,j,time");
    for i in 0..d {
        header.push_str(&format!(",coord_{i}"));
    }
    writeln!(out, "{header}")?;
    for (idx, p) in paths.iter().enumerate() {
        let id = p.seed_info.map_or(idx as u64, |s| s.path_index);
        let h = p.step();
        for (j, x) in p.points.iter().enumerate() {
            write!(out, "{id},{j},{}", h * j as f64)?;
            for c in &x.coords {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
