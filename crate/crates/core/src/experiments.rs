//! Named, config-driven experiments writing `results.csv` and `manifest.json`.
//!
//! A config is flat `key=value` text (`#` starts a comment). Every experiment
//! has defaults for all of its keys, so `experiment=<name>` alone is a valid
//! config. Keys an experiment does not know are rejected.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::feynman_kac::{circle_function, circle_potential, fki_grid_circle, fki_mc_levels, fki_spectral_circle};
use crate::forms::{self, OneForm};
use crate::integrals::{
    classical_rate, estimate_in_measure, ito_lemma_check, ito_strat_gap, ito_strat_gaps, pairwise_measure_differences, strat_exactness,
    t_continuity_diagnostic, ConvergenceReport, ParametricCurve,
};
use crate::manifold::{ManifoldId, ManifoldPoint};
use crate::measure::IntervalMeasure;
use crate::paths::PathEnsemble;
use crate::semigroup::{
    chernoff_power_test, diamagnetic_cases, max_terminal_discrepancy, run_diamagnetic_case, Grid1D, CHERNOFF_CSV_HEADER,
};

pub struct CatalogEntry {
    pub name: &'static str,
    pub verifies: &'static str,
    pub keys: &'static [&'static str],
}

const COMMON_KEYS: &[&str] = &["experiment", "seed", "output_dir", "chunk_size"];

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "classical-rate",
        verifies: "classical limit: dyadic approximants of a C² curve converge to the line integral at rate 2^-k",
        keys: &["curve", "form", "measure", "k_min", "k_max", "slope_max", "err_max"],
    },
    CatalogEntry {
        name: "in-measure",
        verifies: "definition of the stochastic integral as a limit in measure (Cauchy tail decay on shared paths)",
        keys: &["manifold", "form", "measure", "x0", "t", "n", "k_min", "k_max", "epsilon"],
    },
    CatalogEntry {
        name: "ito-strat-gap",
        verifies: "Ito minus Stratonovich equals the time integral of the codifferential; equal iff the codifferential vanishes",
        keys: &["manifold", "form", "x0", "t", "n", "k", "epsilon", "tail_max", "zero_manifold", "zero_forms", "zero_epsilon"],
    },
    CatalogEntry {
        name: "moment-equivalence",
        verifies: "the integral depends on the measure P only through its first moment",
        keys: &["manifold", "form", "measures", "x0", "t", "n", "k", "epsilon", "tail_max"],
    },
    CatalogEntry {
        name: "strat-exactness",
        verifies: "Stratonovich integral of df equals f(end) - f(start)",
        keys: &["manifold", "field", "x0", "t", "n", "k", "quad_order", "tolerance"],
    },
    CatalogEntry {
        name: "ito-lemma",
        verifies: "Ito's lemma with the Laplace-Beltrami operator (heat operator d/dt - Laplacian)",
        keys: &["manifold", "field", "x0", "t", "n", "k_min", "k_max"],
    },
    CatalogEntry {
        name: "t-continuity",
        verifies: "continuity in t of the integral, measured by a Levy distance",
        keys: &["manifold", "form", "measure", "x0", "t", "n", "k", "t1"],
    },
    CatalogEntry {
        name: "chernoff",
        verifies: "Chernoff product formula: powers of the cut-off magnetic step converge to the free heat semigroup",
        keys: &["domain", "length", "grid_n", "t", "forms", "measures", "k_min", "k_max"],
    },
    CatalogEntry {
        name: "diamagnetic",
        verifies: "diamagnetic inequality |h_alpha| <= h for magnetic heat kernels",
        keys: &["tolerance"],
    },
    CatalogEntry {
        name: "fki",
        verifies: "Feynman-Kac-Ito formula for the magnetic Schrodinger semigroup on the circle",
        keys: &["a", "potentials", "function", "x", "t", "n", "k", "k_bias", "max_deviation", "grid_n"],
    },
];

pub fn list_experiments() -> String {
    let mut s = String::new();
    for e in CATALOG {
        let _ = writeln!(s, "{}\n  verifies: {}\n  keys: {}", e.name, e.verifies, e.keys.join(", "));
    }
    s
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Flat key=value configuration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            c.set(line)
                .map_err(|_| config_err(&format!("line {}", lineno + 1), format!("expected key=value, got {line:?}")))?;
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| config_err(kv, "expected key=value"))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(config_err(kv, "empty key"));
        }
        self.values.insert(k.to_string(), v.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn experiment(&self) -> Result<&'static CatalogEntry> {
        let name = self.get("experiment").ok_or_else(|| config_err("experiment", "missing"))?;
        CATALOG.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownKey {
            kind: "experiment",
            key: name.to_string(),
            valid: CATALOG.iter().map(|e| e.name.to_string()).collect(),
        })
    }

    /// Canonical text, one sorted `key=value` per line.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Typed access to config values with defaults; records what was used.
struct Params<'a> {
    cfg: &'a ExperimentConfig,
    used: BTreeMap<String, String>,
}

impl<'a> Params<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Self {
            cfg,
            used: BTreeMap::new(),
        }
    }

    fn str(&mut self, key: &str, default: &str) -> String {
        let v = self.cfg.get(key).unwrap_or(default).to_string();
        self.used.insert(key.to_string(), v.clone());
        v
    }

    fn parse<T: FromStr>(&mut self, key: &str, default: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.str(key, default);
        s.parse::<T>().map_err(|e| config_err(key, format!("{s:?}: {e}")))
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        self.parse(key, &default.to_string())
    }

    fn u32(&mut self, key: &str, default: u32) -> Result<u32> {
        self.parse(key, &default.to_string())
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize> {
        let n: usize = self.parse(key, &default.to_string())?;
        if n == 0 {
            return Err(config_err(key, "must be ≥ 1"));
        }
        Ok(n)
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if !(v > 0.0) {
            return Err(config_err(key, "must be > 0"));
        }
        Ok(v)
    }

    fn list(&mut self, key: &str, default: &str) -> Vec<String> {
        self.str(key, default)
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    }

    fn manifold(&mut self, key: &str, default: &str) -> Result<ManifoldId> {
        let s = self.str(key, default);
        s.parse().map_err(|e: Error| config_err(key, e.to_string()))
    }

    fn measure(&mut self, key: &str, default: &str) -> Result<IntervalMeasure> {
        let s = self.str(key, default);
        s.parse().map_err(|e: Error| config_err(key, e.to_string()))
    }

    fn form(&mut self, m: &ManifoldId, key: &str, default: &str) -> Result<OneForm> {
        let s = self.str(key, default);
        forms::form(m, &s).map_err(|e| config_err(key, e.to_string()))
    }

    fn point(&mut self, m: &ManifoldId, key: &str) -> Result<ManifoldPoint> {
        let default = default_point(m)
            .coords
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let coords = self
            .list(key, &default)
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| config_err(key, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let x = ManifoldPoint::new(&coords);
        m.validate_point(&x).map_err(|e| config_err(key, e.to_string()))?;
        Ok(x)
    }

    fn levels(&mut self, default_min: u32, default_max: u32) -> Result<(u32, u32)> {
        let lo = self.u32("k_min", default_min)?;
        let hi = self.u32("k_max", default_max)?;
        if lo > hi {
            return Err(config_err("k_min", format!("k_min {lo} exceeds k_max {hi}")));
        }
        if hi > 20 {
            return Err(config_err("k_max", "levels above 20 are not supported"));
        }
        Ok((lo, hi))
    }
}

pub fn default_point(m: &ManifoldId) -> ManifoldPoint {
    match m {
        ManifoldId::Sphere2 { radius } => ManifoldPoint::new(&[0.0, 0.0, *radius]),
        ManifoldId::Hyperbolic2 => ManifoldPoint::new(&[0.0, 1.0]),
        _ => ManifoldPoint::new(&vec![0.0; m.coord_len()]),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn criterion(name: &str, passed: bool, detail: String) -> Criterion {
    Criterion {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// What an experiment produces before it is written to disk.
pub struct Outcome {
    pub csv: String,
    pub summary: serde_json::Value,
    pub criteria: Vec<Criterion>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub version: String,
    pub criteria: Vec<Criterion>,
    pub passed: bool,
    pub timings_ms: BTreeMap<String, f64>,
    pub artifacts: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

fn validate_keys(cfg: &ExperimentConfig, entry: &CatalogEntry) -> Result<()> {
    for k in cfg.values.keys() {
        if !COMMON_KEYS.contains(&k.as_str()) && !entry.keys.contains(&k.as_str()) {
            let mut valid: Vec<&str> = COMMON_KEYS.to_vec();
            valid.extend(entry.keys);
            return Err(config_err(k, format!("not a key of {}; valid keys: {}", entry.name, valid.join(", "))));
        }
    }
    Ok(())
}

/// Runs the experiment without touching the filesystem.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<(Outcome, BTreeMap<String, String>)> {
    let entry = cfg.experiment()?;
    validate_keys(cfg, entry)?;
    let mut p = Params::new(cfg);
    p.str("experiment", entry.name);
    let seed: u64 = p.parse("seed", "20240601")?;
    let _chunk: usize = p.count("chunk_size", 1024)?;
    let out = match entry.name {
        "classical-rate" => run_classical_rate(&mut p)?,
        "in-measure" => run_in_measure(&mut p, seed)?,
        "ito-strat-gap" => run_ito_strat_gap(&mut p, seed)?,
        "moment-equivalence" => run_moment_equivalence(&mut p, seed)?,
        "strat-exactness" => run_strat_exactness(&mut p, seed)?,
        "ito-lemma" => run_ito_lemma(&mut p, seed)?,
        "t-continuity" => run_t_continuity(&mut p, seed)?,
        "chernoff" => run_chernoff(&mut p)?,
        "diamagnetic" => run_diamagnetic(&mut p)?,
        "fki" => run_fki(&mut p, seed)?,
        other => unreachable!("catalog entry {other} has no runner"),
    };
    Ok((out, p.used))
}

/// Runs the experiment and writes `results.csv` and `manifest.json` under
/// `output_dir` (default `out/<experiment>`).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let (out, used) = evaluate(cfg)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let name = used["experiment"].clone();
    let dir = PathBuf::from(cfg.get("output_dir").map_or_else(|| format!("out/{name}"), str::to_string));
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join("results.csv");
    std::fs::write(&csv_path, &out.csv)?;
    let mut effective = used;
    // Where results go does not change them.
    let canonical: String = effective
        .iter()
        .filter(|(k, _)| k.as_str() != "output_dir")
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect();
    effective.insert("output_dir".into(), dir.display().to_string());
    let mut hasher = Sha256::new();
    hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
    hasher.update(b"\n");
    hasher.update(canonical.as_bytes());
    let config_hash = format!("{:x}", hasher.finalize());
    let manifest_path = dir.join("manifest.json");
    let manifest = RunManifest {
        experiment: name,
        config: effective,
        config_hash,
        version: env!("CARGO_PKG_VERSION").to_string(),
        passed: out.criteria.iter().all(|c| c.passed),
        criteria: out.criteria,
        timings_ms: BTreeMap::from([("total".to_string(), elapsed)]),
        artifacts: vec![csv_path, manifest_path.clone()],
        summary: out.summary,
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

fn report_json(r: &ConvergenceReport) -> serde_json::Value {
    serde_json::to_value(r).unwrap_or(serde_json::Value::Null)
}

fn run_classical_rate(p: &mut Params) -> Result<Outcome> {
    let curve_key = p.str("curve", "circle");
    let curve = ParametricCurve::registered(&curve_key).map_err(|e| config_err("curve", e.to_string()))?;
    let m = curve.manifold().clone();
    let alpha = p.form(&m, "form", "x_dy")?;
    let measure = p.measure("measure", "lebesgue")?;
    let (lo, hi) = p.levels(4, 12)?;
    let slope_max = p.f64("slope_max", -0.75)?;
    let err_max = p.f64("err_max", 1e-3)?;
    let ks: Vec<u32> = (lo..=hi).collect();
    let r = classical_rate(&measure, &alpha, &curve, &ks)?;
    let last = r.rows.last().map_or(f64::NAN, |x| x.median_abs);
    let slope_ok = match r.slope {
        Some(s) => s <= slope_max,
        None => last <= 1e-10,
    };
    Ok(Outcome {
        csv: r.to_csv(),
        summary: report_json(&r),
        criteria: vec![
            criterion("slope", slope_ok, format!("fitted slope {:?} vs bound {slope_max}", r.slope)),
            criterion("terminal_error", last <= err_max, format!("error {last:e} at k={hi} vs {err_max:e}")),
        ],
    })
}

fn ensemble(p: &mut Params, m: ManifoldId, level: u32, seed: u64, default_n: usize) -> Result<PathEnsemble> {
    let x0 = p.point(&m, "x0")?;
    let t = p.positive("t", 1.0)?;
    let n = p.count("n", default_n)?;
    PathEnsemble::new(m, x0, t, level, seed, n)
}

fn run_in_measure(p: &mut Params, seed: u64) -> Result<Outcome> {
    let m = p.manifold("manifold", "euclidean:2")?;
    let alpha = p.form(&m, "form", "x_dy")?;
    let measure = p.measure("measure", "lebesgue")?;
    let (lo, hi) = p.levels(4, 12)?;
    if lo >= hi {
        return Err(config_err("k_min", "needs k_min < k_max"));
    }
    let eps = p.positive("epsilon", 0.05)?;
    let ens = ensemble(p, m, hi, seed, 10_000)?;
    let ks: Vec<u32> = (lo..hi).collect();
    let r = estimate_in_measure(&measure, &alpha, &ens, hi, &ks, eps)?;
    let first = &r.rows[0];
    let last = &r.rows[r.rows.len() - 1];
    let decays = last.tail_frac <= first.tail_frac && last.median_abs < first.median_abs;
    Ok(Outcome {
        csv: r.to_csv(),
        summary: report_json(&r),
        criteria: vec![criterion(
            "cauchy_tail_decay",
            decays,
            format!(
                "tail {:?} -> {:?}, median {:e} -> {:e}",
                first.tail_frac, last.tail_frac, first.median_abs, last.median_abs
            ),
        )],
    })
}

fn run_ito_strat_gap(p: &mut Params, seed: u64) -> Result<Outcome> {
    let m = p.manifold("manifold", "euclidean:1")?;
    let alpha = p.form(&m, "form", "x_dx")?;
    let k = p.u32("k", 12)?;
    let eps = p.positive("epsilon", 0.05)?;
    let tail_max = p.f64("tail_max", 0.02)?;
    let ens = ensemble(p, m, k, seed, 10_000)?;
    let main = ito_strat_gap(&alpha, &ens, &[k], eps)?;
    let mut csv = String::from("form,k,median_abs,tail_frac,n_cutlocus\n");
    let mut criteria = Vec::new();
    let row = &main.rows[0];
    let _ = writeln!(csv, "{},{},{},{},{}", alpha.name(), k, row.median_abs, row.tail_frac.unwrap_or(f64::NAN), row.n_cutlocus);
    let tail = row.tail_frac.unwrap_or(1.0);
    criteria.push(criterion(
        "gap_tail",
        tail < tail_max,
        format!("P(|A_ito - A_strat - T| > {eps}) = {tail} at k={k} vs {tail_max}"),
    ));
    let zm = p.manifold("zero_manifold", "euclidean:2")?;
    let zero_eps = p.positive("zero_epsilon", 0.02)?;
    let zero_keys = p.list("zero_forms", "dx:0,x_dy,rot,sin_dy");
    let zens = PathEnsemble::new(zm.clone(), default_point(&zm), ens.t, k, seed ^ 0x5a5a, ens.count)?;
    let mut worst: f64 = 0.0;
    let mut summary = serde_json::Map::new();
    summary.insert(alpha.name().to_string(), report_json(&main));
    let betas = zero_keys
        .iter()
        .map(|key| forms::form(&zm, key).map_err(|e| config_err("zero_forms", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    for (key, r) in zero_keys.iter().zip(ito_strat_gaps(&betas, &zens, &[k], zero_eps)?) {
        let row = &r.rows[0];
        let tf = row.tail_frac.unwrap_or(1.0);
        worst = worst.max(tf);
        let _ = writeln!(csv, "{},{},{},{},{}", key, k, row.median_abs, tf, row.n_cutlocus);
        summary.insert(key.clone(), report_json(&r));
    }
    criteria.push(criterion(
        "zero_codifferential_tail",
        worst < tail_max,
        format!("worst P(|A_ito - A_strat| > {zero_eps}) over {} forms = {worst} vs {tail_max}", zero_keys.len()),
    ));
    Ok(Outcome {
        csv,
        summary: serde_json::Value::Object(summary),
        criteria,
    })
}

fn run_moment_equivalence(p: &mut Params, seed: u64) -> Result<Outcome> {
    let m = p.manifold("manifold", "euclidean:2")?;
    let alpha = p.form(&m, "form", "x_dy")?;
    let keys = p.list("measures", "dirac:0.5,mix:0.5@0+0.5@1,lebesgue");
    let measures = keys
        .iter()
        .map(|s| s.parse::<IntervalMeasure>().map_err(|e| config_err("measures", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if measures.len() < 2 {
        return Err(config_err("measures", "need at least two measures"));
    }
    let m1 = measures[0].first_moment();
    if measures.iter().any(|q| (q.first_moment() - m1).abs() > 1e-12) {
        return Err(config_err("measures", "measures must share their first moment"));
    }
    let k = p.u32("k", 12)?;
    let eps = p.positive("epsilon", 0.05)?;
    let tail_max = p.f64("tail_max", 0.01)?;
    let ens = ensemble(p, m, k, seed, 10_000)?;
    let mut csv = String::from("P,Q,k,median_abs,tail_frac,n_cutlocus\n");
    let mut worst: f64 = 0.0;
    for (i, j, row) in pairwise_measure_differences(&measures, &alpha, &ens, eps)? {
        let tf = row.tail_frac.unwrap_or(1.0);
        worst = worst.max(tf);
        let _ = writeln!(csv, "{},{},{},{},{},{}", measures[i], measures[j], k, row.median_abs, tf, row.n_cutlocus);
    }
    Ok(Outcome {
        csv,
        summary: serde_json::json!({ "worst_tail_frac": worst, "first_moment": m1 }),
        criteria: vec![criterion(
            "pairwise_tail",
            worst < tail_max,
            format!("worst pairwise P(|A_P - A_Q| > {eps}) = {worst} vs {tail_max}"),
        )],
    })
}

fn run_strat_exactness(p: &mut Params, seed: u64) -> Result<Outcome> {
    let m = p.manifold("manifold", "euclidean:2")?;
    let default_field = match m {
        ManifoldId::Euclidean { .. } => "sq",
        ManifoldId::Torus { .. } => "cos:0",
        ManifoldId::Sphere2 { .. } => "coord:0",
        ManifoldId::Hyperbolic2 => "log_y",
    };
    let fkey = p.str("field", default_field);
    let f = forms::field(&m, &fkey).map_err(|e| config_err("field", e.to_string()))?;
    let k = p.u32("k", 10)?;
    let flat = m.is_flat();
    let q = p.count("quad_order", if flat { 16 } else { 32 })?;
    let tol = p.f64("tolerance", if flat { 1e-7 } else { 1e-6 })?;
    let leb = IntervalMeasure::lebesgue()
        .with_quadrature_order(q)
        .map_err(|e| config_err("quad_order", e.to_string()))?;
    let ens = ensemble(p, m.clone(), k, seed, 1000)?;
    let r = strat_exactness(&f, &leb, &ens, k)?;
    let csv = format!(
        "manifold,field,k,quad_order,n_paths,n_excluded,max_residual\n{m},{fkey},{k},{q},{},{},{}\n",
        r.n_paths, r.n_excluded, r.max_residual
    );
    Ok(Outcome {
        csv,
        summary: serde_json::json!({ "max_residual": r.max_residual, "n_paths": r.n_paths, "n_excluded": r.n_excluded }),
        criteria: vec![criterion(
            "max_residual",
            r.max_residual <= tol && r.n_paths > 0,
            format!("max residual {:e} vs {tol:e} ({} paths, {} excluded)", r.max_residual, r.n_paths, r.n_excluded),
        )],
    })
}

fn run_ito_lemma(p: &mut Params, seed: u64) -> Result<Outcome> {
    let m = p.manifold("manifold", "euclidean:1")?;
    let fkey = p.str("field", "x_sq");
    let f = forms::field(&m, &fkey).map_err(|e| config_err("field", e.to_string()))?;
    let (lo, hi) = p.levels(6, 12)?;
    let ens = ensemble(p, m, hi, seed, 10_000)?;
    let ks: Vec<u32> = (lo..=hi).collect();
    let r = ito_lemma_check(&f, &ens, &ks)?;
    let mut csv = String::from("k,mean,se,median_abs\n");
    for row in &r.rows {
        let _ = writeln!(csv, "{},{},{},{}", row.k, row.mean, row.se, row.median_abs);
    }
    let first = &r.rows[0];
    let last = &r.rows[r.rows.len() - 1];
    let mut criteria = vec![
        criterion(
            "mean_residual",
            last.mean.abs() <= 3.0 * last.se,
            format!("mean residual {:e} vs 3 SE = {:e} at k={hi}", last.mean, 3.0 * last.se),
        ),
        criterion(
            "median_decay",
            last.median_abs < first.median_abs,
            format!("median |residual| {:e} at k={lo} -> {:e} at k={hi}", first.median_abs, last.median_abs),
        ),
    ];
    // For x² on the line the expected endpoint gain is E[B_t²] − x₀² = 2t.
    if fkey == "x_sq" && matches!(ens.manifold, ManifoldId::Euclidean { n: 1 }) {
        let want = 2.0 * ens.t;
        criteria.push(criterion(
            "endpoint_second_moment",
            (r.endpoint_mean - want).abs() <= 3.0 * r.endpoint_se,
            format!("mean f(end) - f(x0) = {} vs {want} (3 SE = {:e})", r.endpoint_mean, 3.0 * r.endpoint_se),
        ));
    }
    Ok(Outcome {
        csv,
        summary: serde_json::to_value(&r)?,
        criteria,
    })
}

/// E[min(σ|Z|, 1)] for a standard normal Z.
pub fn folded_normal_levy(sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let c = 1.0 / sigma;
    erfc(c / 2f64.sqrt()) + 2.0 * sigma / (2.0 * PI).sqrt() * (1.0 - (-0.5 * c * c).exp())
}

fn run_t_continuity(p: &mut Params, seed: u64) -> Result<Outcome> {
    let m = p.manifold("manifold", "euclidean:2")?;
    let alpha = p.form(&m, "form", "dx:0")?;
    let measure = p.measure("measure", "lebesgue")?;
    let k = p.u32("k", 10)?;
    let ens = ensemble(p, m.clone(), k, seed, 10_000)?;
    let t = ens.t;
    let t1 = p.f64("t1", 0.25 * t)?;
    let spacings = [t / 2.0, t / 4.0, t / 8.0, t / 16.0];
    let mut csv = String::from("t1,t2,distance,se,oracle\n");
    let mut dists = Vec::new();
    let gaussian = alpha.name() == "dx:0" && m.is_flat() && !matches!(m, ManifoldId::Torus { .. });
    let mut oracle_ok = true;
    let mut oracle_detail = String::new();
    for s in spacings {
        let t2 = t1 + s;
        if t2 > t + 1e-12 {
            continue;
        }
        let (d, se) = t_continuity_diagnostic(&measure, &alpha, &ens, t1, t2)?;
        let oracle = if gaussian { folded_normal_levy((2.0 * s).sqrt()) } else { f64::NAN };
        if gaussian && (d - oracle).abs() > 3.0 * se {
            oracle_ok = false;
            let _ = write!(oracle_detail, "spacing {s}: {d} vs {oracle} (3 SE {:e}); ", 3.0 * se);
        }
        let _ = writeln!(csv, "{t1},{t2},{d},{se},{oracle}");
        dists.push((s, d));
    }
    let (t0, d0) = *dists.first().ok_or_else(|| config_err("t1", "no admissible t2 = t1 + t/2^j within [0, t]"))?;
    let (_, dl) = *dists.last().expect("non-empty");
    let mut criteria = vec![criterion(
        "shrinks",
        dists.windows(2).all(|w| w[1].1 < w[0].1),
        format!("distance {d0} at spacing {t0} -> {dl}"),
    )];
    if gaussian {
        criteria.push(criterion(
            "gaussian_oracle",
            oracle_ok,
            if oracle_ok { "all spacings within 3 SE".into() } else { oracle_detail },
        ));
    }
    Ok(Outcome {
        csv,
        summary: serde_json::json!({ "distances": dists }),
        criteria,
    })
}

fn run_chernoff(p: &mut Params) -> Result<Outcome> {
    let domain = p.str("domain", "circle");
    let grid_n = p.parse::<usize>("grid_n", "128")?;
    let grid = match domain.as_str() {
        "circle" => Grid1D::circle(p.positive("length", TAU)?, grid_n),
        "interval" => Grid1D::interval(p.positive("length", 1.0)?, grid_n),
        _ => return Err(config_err("domain", "expected circle or interval")),
    }
    .map_err(|e| config_err("grid_n", e.to_string()))?;
    let t = p.positive("t", 0.5)?;
    let gm = grid.manifold();
    let default_forms = if grid.is_circle() { "zero,a_dtheta:0.5" } else { "zero,dx:0" };
    let form_keys = p.list("forms", default_forms);
    let alphas = form_keys
        .iter()
        .map(|k| forms::form(&gm, k).map_err(|e| config_err("forms", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let measures = p
        .list("measures", "dirac:0,lebesgue")
        .iter()
        .map(|s| s.parse::<IntervalMeasure>().map_err(|e| config_err("measures", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = p.levels(3, 8)?;
    let ks: Vec<u32> = (lo..=hi).collect();
    let mut reports = Vec::new();
    for a in &alphas {
        for q in &measures {
            reports.push(chernoff_power_test(&grid, a, q, t, &ks)?);
        }
    }
    let mut csv = String::from(CHERNOFF_CSV_HEADER);
    for r in &reports {
        csv.push_str(&r.csv_rows());
    }
    let largest = reports.iter().map(|r| r.terminal_error()).fold(0.0, f64::max);
    let disc = max_terminal_discrepancy(&reports);
    let not_monotone: Vec<String> = reports
        .iter()
        .filter(|r| !r.strictly_decreasing)
        .map(|r| format!("{}/{}", r.alpha_tag, r.p_tag))
        .collect();
    Ok(Outcome {
        csv,
        summary: serde_json::json!({
            "grid": grid.tag(),
            "reports": reports,
            "largest_terminal_error": largest,
            "max_terminal_discrepancy": disc,
        }),
        criteria: vec![
            criterion(
                "strictly_decreasing",
                not_monotone.is_empty(),
                if not_monotone.is_empty() {
                    "all cases strictly decreasing".into()
                } else {
                    format!("not strictly decreasing: {}", not_monotone.join(", "))
                },
            ),
            criterion(
                "alpha_p_independence",
                disc <= 2.0 * largest,
                format!("max terminal discrepancy {disc:e} vs 2 x largest terminal error {:e}", 2.0 * largest),
            ),
        ],
    })
}

fn run_diamagnetic(p: &mut Params) -> Result<Outcome> {
    let tol = p.f64("tolerance", 1e-10)?;
    let mut csv = String::from("case,grid,t,max_violation,pass\n");
    let mut worst = f64::NEG_INFINITY;
    let cases = diamagnetic_cases()?;
    for c in &cases {
        let v = run_diamagnetic_case(c)?;
        worst = worst.max(v);
        let _ = writeln!(csv, "{},{},{},{},{}", c.name, c.grid.tag(), c.t, v, v <= tol);
    }
    Ok(Outcome {
        csv,
        summary: serde_json::json!({ "cases": cases.len(), "worst_violation": worst }),
        criteria: vec![criterion(
            "entrywise",
            worst <= tol,
            format!("worst |h_alpha| - h = {worst:e} over {} cases vs {tol:e}", cases.len()),
        )],
    })
}

fn run_fki(p: &mut Params, seed: u64) -> Result<Outcome> {
    let m = ManifoldId::circle();
    let a = p.f64("a", 0.3)?;
    let pot_keys = p.list("potentials", "zero,cos");
    let fkey = p.str("function", "exp_i:1");
    let (f, f_hat) = circle_function(&fkey).map_err(|e| config_err("function", e.to_string()))?;
    let x = p.f64("x", PI / 4.0)?;
    let t = p.positive("t", 0.5)?;
    let n = p.count("n", 20_000)?;
    let k = p.u32("k", 10)?;
    let k_bias = p.u32("k_bias", 12)?;
    if k_bias <= k {
        return Err(config_err("k_bias", "must exceed k"));
    }
    let max_dev = p.f64("max_deviation", 0.02)?;
    let grid_n = p.parse::<usize>("grid_n", "256")?;
    let alpha = forms::form(&m, &format!("a_dtheta:{a}"))?;
    let x0 = ManifoldPoint::new(&[x]);
    let mut csv = String::from("case,re_mc,im_mc,stderr,re_oracle,im_oracle,pass\n");
    let mut criteria = Vec::new();
    let mut summary = serde_json::Map::new();
    for key in &pot_keys {
        let (v, v_hat) = circle_potential(key).map_err(|e| config_err("potentials", e.to_string()))?;
        let est = fki_mc_levels(&m, &alpha, &v, &f, &x0, t, n, &[k, k_bias], seed)?;
        let (mc, fine) = (&est[0], &est[1]);
        let oracle = fki_spectral_circle(a, &v_hat, &f_hat, x, t, 32)?;
        let bias = (fine.value - mc.value).norm();
        let dev = (mc.value - oracle).norm();
        let pass = dev <= 3.0 * mc.stderr + bias && dev <= max_dev;
        let _ = writeln!(
            csv,
            "{key},{},{},{},{},{},{pass}",
            mc.value.re, mc.value.im, mc.stderr, oracle.re, oracle.im
        );
        criteria.push(criterion(
            &format!("mc_vs_oracle[{key}]"),
            pass,
            format!("|MC - oracle| = {dev:e} vs 3 SE + bias = {:e} (bias {bias:e}), cap {max_dev}", 3.0 * mc.stderr + bias),
        ));
        if !v_hat.is_empty() {
            let step = TAU / grid_n as f64;
            let xg = (x / step).round() * step;
            let spec = fki_spectral_circle(a, &v_hat, &f_hat, xg, t, 32)?;
            let grid = fki_grid_circle(a, &v, &f, xg, t, grid_n)?;
            let gap = (spec - grid).norm();
            criteria.push(criterion(
                &format!("spectral_vs_grid[{key}]"),
                gap <= 1e-6,
                format!("|spectral - grid| = {gap:e} at x = {xg}"),
            ));
        }
        summary.insert(
            key.clone(),
            serde_json::json!({ "mc": mc, "mc_bias_level": fine, "oracle": [oracle.re, oracle.im], "deviation": dev, "bias": bias }),
        );
    }
    Ok(Outcome {
        csv,
        summary: serde_json::Value::Object(summary),
        criteria,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_ten_distinct_entries() {
        assert_eq!(CATALOG.len(), 10);
        let mut names: Vec<_> = CATALOG.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 10);
        assert!(CATALOG.iter().all(|e| !e.verifies.is_empty()));
        assert_eq!(list_experiments(), list_experiments());
    }

    #[test]
    fn parse_and_override() {
        let mut c = ExperimentConfig::parse("# comment\nexperiment = fki\n\nn=10 # trailing\n").unwrap();
        assert_eq!(c.get("n"), Some("10"));
        c.set("n=20").unwrap();
        assert_eq!(c.get("n"), Some("20"));
        assert!(ExperimentConfig::parse("novalue").is_err());
    }

    #[test]
    fn unknown_manifold_names_field() {
        let c = ExperimentConfig::parse("experiment=strat-exactness\nmanifold=klein").unwrap();
        match evaluate(&c) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "manifold"),
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn unknown_experiment_lists_valid_names() {
        let c = ExperimentConfig::parse("experiment=nope").unwrap();
        let msg = evaluate(&c).err().unwrap().to_string();
        assert!(msg.contains("chernoff") && msg.contains("fki"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let c = ExperimentConfig::parse("experiment=diamagnetic\nfoo=1").unwrap();
        assert!(matches!(evaluate(&c), Err(Error::Config { field, .. }) if field == "foo"));
    }

    #[test]
    fn zero_paths_rejected() {
        let c = ExperimentConfig::parse("experiment=ito-lemma\nn=0").unwrap();
        assert!(matches!(evaluate(&c), Err(Error::Config { field, .. }) if field == "n"));
    }

    #[test]
    fn folded_normal_limits() {
        assert_eq!(folded_normal_levy(0.0), 0.0);
        // Small σ: E|σZ| = σ·√(2/π).
        let s = 1e-3;
        assert!((folded_normal_levy(s) - s * (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!((folded_normal_levy(1e6) - 1.0).abs() < 1e-5);
    }
}
