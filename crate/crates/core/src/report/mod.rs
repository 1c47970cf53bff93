//! Command runner: dispatch a [`RunConfig`], render CSV tables and a JSON
//! summary, and write them atomically.

pub mod cli;
pub mod config;
pub mod csv;

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::branch::{dominant_data, find_critical, solve_characteristic, ContinuationOptions, DominantData};
use crate::hessian::admissibility;
use crate::error::{Error, Result};
use crate::growth::{detect_thresholds, spectral_approach, GrowthOptions, TrajectoryState};
use crate::leaves::{gamma_c_solve, phase_diagram, GridSpec, LeafKind};
use crate::series::{functional_residual, powers_table, taylor_branch, ParamPoint};
use crate::spectral::{block_spectrum, fit_log_scaling, log_grid, scan_path, ScanOptions, ScanRecord};

pub use config::{Command, RunConfig};
use csv::{num, Table};

pub const SCHEMA_VERSION: u32 = 1;

/// Status of one grid point or block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointStatus {
    pub index: usize,
    pub label: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl PointStatus {
    fn from_result<T>(index: usize, label: String, r: &Result<T>) -> PointStatus {
        PointStatus {
            index,
            label,
            status: csv::status(r),
            message: r.as_ref().err().map(|e| e.to_string()),
        }
    }
}

/// Everything a command produces, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    /// `(file name, contents)`, written in this order.
    pub files: Vec<(String, String)>,
    pub points: Vec<PointStatus>,
    pub results: Value,
}

impl Artifacts {
    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| p.status != "ok").count()
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    /// 0 when every point succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failed() == 0 {
            0
        } else {
            2
        }
    }
}

/// Git-style content hash of the run inputs (output location and thread
/// count excluded): `sha256("blob <len>\0" + canonical JSON)`.
pub fn input_hash(cfg: &RunConfig) -> String {
    let canonical = RunConfig { out: None, threads: None, ..cfg.clone() };
    let body = serde_json::to_string(&canonical).expect("config serializes");
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    format!("sha256:{}", hex::encode(h.finalize()))
}

pub fn summary_json(cfg: &RunConfig, art: &Artifacts) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "tool": "toda-spectra",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "config": cfg,
        "input_hash": input_hash(cfg),
        "files": art.files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "failed_points": art.failed(),
        "points": art.points,
        "results": art.results,
    })
}

/// Run the command on the thread count of `cfg.threads` (the ambient rayon
/// pool when absent).
pub fn compute(cfg: &RunConfig) -> Result<Artifacts> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| dispatch(cfg)),
        None => dispatch(cfg),
    }
}

fn dispatch(cfg: &RunConfig) -> Result<Artifacts> {
    match cfg.command {
        Command::Series => run_series(cfg),
        Command::Char => run_char(cfg),
        Command::Spectrum => run_spectrum(cfg),
        Command::Scan => run_scan(cfg),
        Command::Lg => run_lg(cfg),
        Command::Leaves => run_leaves(cfg),
    }
}

/// Write every artifact plus `summary.json` into `out`, each through a
/// temporary file renamed into place.
pub fn write_artifacts(out: &Path, cfg: &RunConfig, art: &Artifacts) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let summary = serde_json::to_string_pretty(&summary_json(cfg, art)).expect("summary serializes") + "\n";
    for (name, body) in art.files.iter().map(|(n, b)| (n.as_str(), b.as_str())).chain([("summary.json", summary.as_str())]) {
        let mut tmp = tempfile::NamedTempFile::new_in(out)?;
        tmp.write_all(body.as_bytes())?;
        tmp.flush()?;
        let path = out.join(name);
        tmp.persist(&path).map_err(|e| Error::Io(e.to_string()))?;
        written.push(path);
    }
    Ok(written)
}

/// Compute and write; returns the process exit code (0 or 2).
pub fn run(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let art = compute(cfg)?;
    write_artifacts(out, cfg, &art)?;
    Ok(art.exit_code())
}

fn point(cfg: &RunConfig) -> Result<ParamPoint> {
    ParamPoint::real(cfg.leaf()?, &cfg.zeta)
}

fn c_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn run_series(cfg: &RunConfig) -> Result<Artifacts> {
    let p = point(cfg)?;
    let u = taylor_branch(&p, cfg.order);
    let table = powers_table(&u, cfg.series.p_max, 1.0)?;
    let mut t = Table::new(["p", "m", "re", "im"]);
    for (i, ps) in table.iter().enumerate() {
        for m in 0..=cfg.series.m_max {
            let c = ps.unscaled(m);
            t.push(vec![(i + 1).to_string(), m.to_string(), num(c.re), num(c.im)]);
        }
    }
    let residual = functional_residual(&p, &u).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(Artifacts {
        files: vec![("series.csv".into(), t.render())],
        points: vec![],
        results: json!({ "s": p.leaf.s(), "order": cfg.order, "functional_residual": residual }),
    })
}

fn dominant_json(d: &DominantData) -> Value {
    json!({
        "rho_star": d.rho_star,
        "x_star": c_pair(d.x_star()),
        "lambda": c_pair(d.lambda()),
        "kappa": c_pair(d.kappa),
        "orbit_size": d.orbit_size,
        "separation": d.separation,
        "phi": d.phi,
        "rho_hat": d.rho_hat,
        "exponent_hat": d.exponent_hat,
        "amplitudes": d.amplitudes.iter().map(|(p, a)| (p.to_string(), json!(c_pair(*a)))).collect::<serde_json::Map<_, _>>(),
    })
}

fn run_char(cfg: &RunConfig) -> Result<Artifacts> {
    let p = point(cfg)?;
    let chars = solve_characteristic(&p)?;
    let mut t = Table::new([
        "index", "x_re", "x_im", "lambda_re", "lambda_im", "modulus", "kappa_re", "kappa_im", "simple", "fold_ok", "residual",
    ]);
    for (i, c) in chars.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            num(c.x_star.re),
            num(c.x_star.im),
            num(c.lambda.re),
            num(c.lambda.im),
            num(c.modulus),
            num(c.kappa.re),
            num(c.kappa.im),
            c.simple.to_string(),
            c.fold_ok.to_string(),
            num(c.residual(&p)),
        ]);
    }
    let dom = dominant_data(&p, cfg.order);
    let points = vec![PointStatus::from_result(0, "dominant".into(), &dom)];
    let results = match &dom {
        Ok(d) => json!({ "dominant": dominant_json(d) }),
        Err(e) => json!({ "dominant": null, "error": e.to_string() }),
    };
    Ok(Artifacts { files: vec![("char.csv".into(), t.render())], points, results })
}

/// `α > max(M_0, L_0)` check; a violation is a warning, not an error.
fn admissibility_json(p: &ParamPoint, dom: &DominantData, alpha: f64, warnings: &mut Vec<String>) -> Value {
    match admissibility(p, dom, alpha) {
        Ok(a) => {
            if !a.ok {
                warnings.push(format!(
                    "alpha = {alpha} does not exceed max(M_0, L_0) = {:.6} (M_0 = {:.6}, L_0 = {:.6})",
                    a.m0.max(a.l0),
                    a.m0,
                    a.l0
                ));
            }
            serde_json::to_value(a).expect("admissibility serializes")
        }
        Err(e) => {
            warnings.push(format!("admissibility estimate failed: {e}"));
            Value::Null
        }
    }
}

fn run_spectrum(cfg: &RunConfig) -> Result<Artifacts> {
    let p = point(cfg)?;
    let dom = dominant_data(&p, cfg.order);
    let mut warnings = Vec::new();
    let adm = match &dom {
        Ok(d) => admissibility_json(&p, d, cfg.renorm.alpha, &mut warnings),
        Err(_) => Value::Null,
    };
    let outcome = dom.and_then(|dom| block_spectrum(&p, &dom, &cfg.renorm, None, f64::NAN, cfg.scan.k_max));
    let rec = ScanRecord { index: 0, delta: f64::NAN, q: cfg.renorm.q, outcome };
    let points = vec![PointStatus::from_result(0, format!("q={}", rec.q), &rec.outcome)];
    let mut results = match &rec.outcome {
        Ok(b) => serde_json::to_value(b).expect("spectrum serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    results["admissibility"] = adm;
    results["warnings"] = json!(warnings);
    let table = csv::spectra_table(std::slice::from_ref(&rec));
    Ok(Artifacts { files: vec![("spectrum.csv".into(), table.render())], points, results })
}

fn scan_points(records: &[ScanRecord], key: &str) -> Vec<PointStatus> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| PointStatus::from_result(i, format!("{key}={:e},q={}", r.delta, r.q), &r.outcome))
        .collect()
}

fn fits_json(records: &[ScanRecord], q_list: &[u32]) -> Value {
    q_list
        .iter()
        .map(|&q| {
            let v = match fit_log_scaling(records, q, 0.1) {
                Ok(rep) => serde_json::to_value(rep).expect("fit serializes"),
                Err(e) => json!({ "error": e.to_string() }),
            };
            (q.to_string(), v)
        })
        .collect::<serde_json::Map<_, _>>()
        .into()
}

/// The scan path `ζ_vary = ζ_c (1 - δ)` for a validated scan config.
pub fn scan_critical(cfg: &RunConfig) -> Result<f64> {
    let leaf = cfg.leaf()?;
    if let Some(c) = cfg.scan.critical {
        return Ok(c);
    }
    let [lo, hi] = cfg.scan.bracket.expect("validated");
    let (zeta, vary) = (cfg.zeta.clone(), cfg.scan.vary);
    let path = move |t: f64| {
        let mut z = zeta.clone();
        z[vary] = t;
        ParamPoint::real(leaf.clone(), &z)
    };
    Ok(find_critical(path, lo, hi, &ContinuationOptions::default())?.t_c)
}

fn run_scan(cfg: &RunConfig) -> Result<Artifacts> {
    let leaf = cfg.leaf()?;
    let crit = scan_critical(cfg)?;
    let grid = log_grid(cfg.scan.delta_hi, cfg.scan.delta_lo, cfg.scan.points);
    let (zeta, vary) = (cfg.zeta.clone(), cfg.scan.vary);
    let path = move |d: f64| {
        let mut z = zeta.clone();
        z[vary] = crit * (1.0 - d);
        ParamPoint::real(leaf.clone(), &z)
    };
    let opts = ScanOptions { order: cfg.order, k_max: cfg.scan.k_max, ..ScanOptions::default() };
    let records = scan_path(&path, &grid, &cfg.renorm, &cfg.scan.q, &opts);
    // M_0 grows towards criticality, so the closest grid point is the binding one.
    let mut warnings = Vec::new();
    let adm = match grid.iter().cloned().fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d)))) {
        Some(d) => match path(d).and_then(|p| dominant_data(&p, cfg.order).map(|dom| (p, dom))) {
            Ok((p, dom)) => admissibility_json(&p, &dom, cfg.renorm.alpha, &mut warnings),
            Err(_) => Value::Null,
        },
        None => Value::Null,
    };
    Ok(Artifacts {
        files: vec![("spectra.csv".into(), csv::spectra_table(&records).render())],
        points: scan_points(&records, "delta"),
        results: json!({
            "critical": crit,
            "fits": fits_json(&records, &cfg.scan.q),
            "admissibility_at_delta_min": adm,
            "warnings": warnings,
        }),
    })
}

fn growth_options(cfg: &RunConfig) -> GrowthOptions {
    GrowthOptions { n_quad: cfg.lg.n_quad, cons_tol: cfg.lg.cons_tol, ..GrowthOptions::default() }
}

fn run_lg(cfg: &RunConfig) -> Result<Artifacts> {
    let leaf = cfg.leaf()?;
    let opts = growth_options(cfg);
    let a0 = cfg.lg.a0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let init = TrajectoryState::new(&leaf, cfg.lg.r0, a0, &opts)?;
    let th = detect_thresholds(&leaf, &init, cfg.lg.dt, cfg.lg.t_max, &opts)?;
    let traj = csv::trajectory_table(leaf.exponents(), &th.states, &th.samples);
    let thresholds = serde_json::to_string_pretty(&th).expect("thresholds serialize") + "\n";
    let mut files = vec![("trajectory.csv".into(), traj.render()), ("thresholds.json".into(), thresholds)];
    let mut points = Vec::new();
    let mut results = json!({ "thresholds": th, "steps": th.states.len() });
    if let (Some(ap), Some(tc)) = (&cfg.lg.approach, th.t_c) {
        let taus = log_grid(ap.tau_hi, ap.tau_lo, ap.points);
        let scan = ScanOptions { order: cfg.order, k_max: cfg.scan.k_max, ..ScanOptions::default() };
        let records = spectral_approach(&leaf, &init, tc, &taus, cfg.lg.dt, &cfg.renorm, &ap.q, &opts, &scan)?;
        files.push(("approach.csv".into(), csv::spectra_table(&records).render()));
        points = scan_points(&records, "tau");
        results["approach_fits"] = fits_json(&records, &ap.q);
    }
    Ok(Artifacts { files, points, results })
}

fn run_leaves(cfg: &RunConfig) -> Result<Artifacts> {
    let lv = &cfg.leaves;
    let spec = GridSpec { kind: lv.kind, b: lv.b.values(), y: lv.y.values() };
    let d = phase_diagram(&spec);
    let points = d
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| PointStatus {
            index: i,
            label: format!("b={:e},y={:e}", c.b, c.y),
            status: c.error_code.unwrap_or("ok").into(),
            message: None,
        })
        .collect();
    let mut results = json!({ "kind": lv.kind, "contour_points": d.contour.iter().filter(|c| c.y.is_some()).count() });
    if lv.gamma_c && lv.kind == LeafKind::Log {
        results["gamma_c"] = match gamma_c_solve(lv.gamma_c_tol) {
            Ok(g) => serde_json::to_value(g).expect("gamma_c serializes"),
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    Ok(Artifacts {
        files: vec![
            ("phase.csv".into(), csv::phase_table(&d).render()),
            ("contour.csv".into(), csv::contour_table(&d.contour).render()),
        ],
        points,
        results,
    })
}
