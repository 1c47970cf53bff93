//! Mode-indexed Hessian blocks, tail-indexed Gram blocks and their weighted
//! renormalization.
//!
//! For block `q` the modes are `p_j = q + j s`, `j = 0..=J`, with weights
//! `w_j = p_j^{3/2+β} α^{p_j}`.

pub mod matrix;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branch::sheet::equation;
use crate::branch::{dominant_data, sheet_on_arc, DominantData};
use crate::error::{Error, Result};
use crate::series::{taylor_branch, taylor_branch_full, ParamPoint, PowerSeries};

pub use matrix::{eigen, eigenvalues, hs_norm, Eigen, HermitianMatrix};

/// How Gram entries are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GramMethod {
    /// Truncated tail sums over the coefficient tables.
    TailSum,
    /// Trapezoid rule on `|x| = 1` (Parseval form of the same sums).
    Contour,
    /// `TailSum` when the tail policy asks for at most 1024 terms, else `Contour`.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormConfig {
    pub beta: f64,
    pub alpha: f64,
    /// Block truncation: `j = 0..=J`.
    #[serde(rename = "J")]
    pub j_max: usize,
    /// Fixed `M_tail`; `None` uses `max(64, ceil(log(tail_tol)/log η))`.
    #[serde(default)]
    pub tail_cutoff: Option<usize>,
    pub q: u32,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default)]
    pub method: GramMethod,
}

fn default_tail_tol() -> f64 {
    1e-12
}

impl Default for RenormConfig {
    /// `β = 1`, `α = 2`, `J = 70`, `q = 1`.
    fn default() -> Self {
        RenormConfig { beta: 1.0, alpha: 2.0, j_max: 70, tail_cutoff: None, q: 1, tail_tol: 1e-12, method: GramMethod::Auto }
    }
}

/// Tail lengths above this switch `Auto` to the contour route.
pub const AUTO_TAIL_LIMIT: usize = 1024;

impl RenormConfig {
    pub fn new(beta: f64, alpha: f64, j_max: usize, q: u32) -> Result<RenormConfig> {
        let cfg = RenormConfig { beta, alpha, j_max, tail_cutoff: None, q, tail_tol: 1e-12, method: GramMethod::Auto };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_q(mut self, q: u32) -> Self {
        self.q = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, e: &str| Err(Error::Config { key: k.into(), expected: e.into() });
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return bad("alpha", "a finite number > 1");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta", "a finite number > 0");
        }
        if self.j_max < 1 {
            return bad("J", "an integer >= 1");
        }
        if self.tail_cutoff == Some(0) {
            return bad("tail_cutoff", "an integer >= 1");
        }
        if self.q < 1 {
            return bad("q", "an integer >= 1");
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return bad("tail_tol", "a number in (0, 1)");
        }
        Ok(())
    }

    /// Check the block against a leaf (`q <= s`, finite weights).
    pub fn validate_for(&self, s: u32) -> Result<()> {
        self.validate()?;
        if self.q > s {
            return Err(Error::Config { key: "q".into(), expected: format!("an integer in 1..={s}") });
        }
        let plast = self.p(self.j_max, s);
        if !self.log_weight(plast).is_finite() || self.log_weight(plast) > 709.0 {
            return Err(Error::Config {
                key: "J".into(),
                expected: format!("a truncation whose weight w_J = p^(3/2+β) α^p fits in f64 (p = {plast})"),
            });
        }
        Ok(())
    }

    pub fn p(&self, j: usize, s: u32) -> u32 {
        self.q + j as u32 * s
    }

    /// `ln w_j` for mode `p`.
    pub fn log_weight(&self, p: u32) -> f64 {
        (1.5 + self.beta) * (p as f64).ln() + p as f64 * self.alpha.ln()
    }

    /// Tail length from the policy for decay rate `η = ρ_*^{-2s}`.
    pub fn tail_length(&self, rho_star: f64, s: u32) -> usize {
        if let Some(m) = self.tail_cutoff {
            return m;
        }
        let ln_eta = -2.0 * s as f64 * rho_star.ln();
        if !(ln_eta < 0.0) {
            return usize::MAX;
        }
        let need = (self.tail_tol.ln() / ln_eta).ceil();
        if need > 1e9 {
            usize::MAX
        } else {
            (need as usize).max(64)
        }
    }
}

/// `H_{mn} = -mn [x^m][x̄'^n] log(1 - x x̄' U(x) conj(U)(x̄'))` for `1 <= m, n <= m_max`,
/// by bivariate series arithmetic on the uncollapsed `x` grid.
///
/// Row/column `k` of the result is index `m = k + 1`.
pub fn kernel_hessian_oracle(p: &ParamPoint, m_max: usize) -> HermitianMatrix {
    let n = m_max + 1;
    let u = taylor_branch_full(p, m_max);
    // W[a][b] = [x^a y^b] x y U(x) Ū(y)
    let mut w = vec![vec![Complex64::default(); n]; n];
    for a in 1..n {
        for b in 1..n {
            w[a][b] = u[a - 1] * u[b - 1].conj();
        }
    }
    let mul = |f: &Vec<Vec<Complex64>>, g: &Vec<Vec<Complex64>>| {
        let mut out = vec![vec![Complex64::default(); n]; n];
        for a1 in 0..n {
            for b1 in 0..n {
                let fv = f[a1][b1];
                if fv == Complex64::default() {
                    continue;
                }
                for a2 in 0..n - a1 {
                    for b2 in 0..n - b1 {
                        out[a1 + a2][b1 + b2] += fv * g[a2][b2];
                    }
                }
            }
        }
        out
    };
    // log(1 - W) = -Σ_k W^k / k; W^k starts at degree k in each variable.
    let mut k_series = vec![vec![Complex64::default(); n]; n];
    let mut wk = w.clone();
    for k in 1..n {
        for a in 0..n {
            for b in 0..n {
                k_series[a][b] -= wk[a][b] / k as f64;
            }
        }
        if k + 1 < n {
            wk = mul(&wk, &w);
        }
    }
    HermitianMatrix::from_upper(m_max, |i, j| {
        let (m, nn) = (i + 1, j + 1);
        -((m * nn) as f64) * k_series[m][nn]
    })
}

/// Vectors `v^{(p)}_j = (p_j/√p) R_p((p_j - p)/s)` for `p = q + i s`, `i < p_count`,
/// over `j = 0..=j_max`. Then `H_{p_{j1} p_{j2}} = Σ_p v^{(p)}_{j1} conj(v^{(p)}_{j2})`.
pub fn mode_gram_vectors(p: &ParamPoint, q: u32, j_max: usize, p_count: usize) -> Vec<Vec<Complex64>> {
    let s = p.leaf.s();
    let u = taylor_branch(p, j_max);
    let mut out = Vec::with_capacity(p_count);
    let mut pw = PowerSeries::new(vec![Complex64::new(1.0, 0.0)]);
    pw.coeffs.resize(j_max + 1, Complex64::default());
    // U^q, then multiply by U^s for each next p.
    for _ in 0..q {
        pw = pw.mul_truncated(&u);
    }
    let mut us = PowerSeries::new(pw.coeffs.iter().map(|_| Complex64::default()).collect());
    us.coeffs[0] = Complex64::new(1.0, 0.0);
    for _ in 0..s {
        us = us.mul_truncated(&u);
    }
    for i in 0..p_count {
        let pp = q + i as u32 * s;
        let v = (0..=j_max)
            .map(|j| {
                let pj = q + j as u32 * s;
                if j < i {
                    Complex64::default()
                } else {
                    pw.coeff(j - i) * (pj as f64 / (pp as f64).sqrt())
                }
            })
            .collect();
        out.push(v);
        pw = pw.mul_truncated(&us);
    }
    out
}

/// Bounds entering the admissibility condition `α > max(M_0, L_0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    /// `max |U|` on the midpoint circle `|x| = (1 + ρ_*)/2`.
    pub m0: f64,
    /// `|λ|`.
    pub l0: f64,
    pub alpha: f64,
    pub ok: bool,
}

pub fn admissibility(p: &ParamPoint, dom: &DominantData, alpha: f64) -> Result<Admissibility> {
    let s = p.leaf.s();
    let radius = 0.5 * (1.0 + dom.rho_star);
    let n = 2048;
    let vals = sheet_on_arc(p, radius, 0.0, 2.0 * PI / (s as f64 * n as f64), n + 1)?;
    let m0 = vals.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let l0 = dom.lambda().norm();
    Ok(Admissibility { m0, l0, alpha, ok: alpha > m0.max(l0) })
}

/// Gram block with the dominant data computed here (order 400).
pub fn gram_block(p: &ParamPoint, cfg: &RenormConfig, use_weights: bool) -> Result<HermitianMatrix> {
    let dom = dominant_data(p, 400)?;
    gram_block_with(p, &dom, cfg, use_weights)
}

/// Resolve `Auto` for the given dominant data.
pub fn resolve_method(cfg: &RenormConfig, rho_star: f64, s: u32) -> GramMethod {
    match cfg.method {
        GramMethod::Auto => {
            if cfg.tail_length(rho_star, s) <= AUTO_TAIL_LIMIT {
                GramMethod::TailSum
            } else {
                GramMethod::Contour
            }
        }
        m => m,
    }
}

pub fn gram_block_with(p: &ParamPoint, dom: &DominantData, cfg: &RenormConfig, use_weights: bool) -> Result<HermitianMatrix> {
    let s = p.leaf.s();
    cfg.validate_for(s)?;
    let contour = || -> Result<HermitianMatrix> {
        let samples = ContourSamples::new(p, dom.rho_star, cfg.tail_tol)?;
        Ok(samples.gram(cfg, use_weights))
    };
    match resolve_method(cfg, dom.rho_star, s) {
        GramMethod::Contour => contour(),
        _ => match gram_tail_sum(p, dom.rho_star, cfg, use_weights) {
            Err(Error::TailNotConverged { .. }) if cfg.method == GramMethod::Auto => contour(),
            r => r,
        },
    }
}

/// Longest tail the doubling retry in [`GramMethod::TailSum`] will try.
pub const MAX_TAIL: usize = 4096;

/// Coefficient factor `(p_{j1} p_{j2})^{-(2+β)}` (weighted) or `(p_{j1} p_{j2})^{-1/2}`.
fn entry_factor(cfg: &RenormConfig, p1: u32, p2: u32, use_weights: bool) -> f64 {
    let prod = p1 as f64 * p2 as f64;
    if use_weights {
        prod.powf(-(2.0 + cfg.beta))
    } else {
        prod.powf(-0.5)
    }
}

/// Tail sums, doubling `M_tail` (policy value first) until the last term of
/// every entry is below `tail_tol` times the entry, up to [`MAX_TAIL`].
fn gram_tail_sum(p: &ParamPoint, rho_star: f64, cfg: &RenormConfig, use_weights: bool) -> Result<HermitianMatrix> {
    let s = p.leaf.s();
    let mut m_tail = cfg.tail_length(rho_star, s);
    if m_tail == usize::MAX {
        return Err(Error::TailNotConverged { used: 0, required: usize::MAX });
    }
    loop {
        match gram_tail_sum_fixed(p, rho_star, cfg, use_weights, m_tail) {
            Err(Error::TailNotConverged { required, .. }) if cfg.tail_cutoff.is_none() && 2 * m_tail <= MAX_TAIL.max(m_tail) => {
                m_tail = (2 * m_tail).max(required.min(MAX_TAIL));
            }
            r => return r,
        }
    }
}

fn gram_tail_sum_fixed(p: &ParamPoint, rho_star: f64, cfg: &RenormConfig, use_weights: bool, m_tail: usize) -> Result<HermitianMatrix> {
    let s = p.leaf.s();
    let jn = cfg.j_max + 1;
    let order = m_tail + cfg.j_max;
    let alpha = if use_weights { cfg.alpha } else { 1.0 };
    let u = taylor_branch(p, order);
    let base = PowerSeries::new(u.coeffs.iter().map(|c| c / alpha).collect());
    let mut step = PowerSeries::new(vec![Complex64::default(); order + 1]);
    step.coeffs[0] = Complex64::new(1.0, 0.0);
    for _ in 0..s {
        step = step.mul_truncated(&base);
    }
    let mut cur = step.clone();
    cur.coeffs.iter_mut().for_each(|c| *c = Complex64::default());
    cur.coeffs[0] = Complex64::new(1.0, 0.0);
    for _ in 0..cfg.q {
        cur = cur.mul_truncated(&base);
    }
    let mut tables = Vec::with_capacity(jn);
    for _ in 0..jn {
        tables.push(cur.coeffs.clone());
        cur = cur.mul_truncated(&step);
    }

    let pairs: Vec<(usize, usize)> = (0..jn).flat_map(|i| (i..jn).map(move |j| (i, j))).collect();
    let entries: Vec<(Complex64, bool)> = pairs
        .par_iter()
        .map(|&(j1, j2)| {
            let (p1, p2) = (cfg.p(j1, s), cfg.p(j2, s));
            let delta = j2 - j1;
            let mut acc = Complex64::default();
            let mut last = Complex64::default();
            for m in 0..=m_tail {
                let w = (p2 as f64 + (s as usize * m) as f64).powi(2);
                last = tables[j1][m + delta].conj() * tables[j2][m] * w;
                acc += last;
            }
            let f = entry_factor(cfg, p1, p2, use_weights);
            (acc * f, last.norm() > cfg.tail_tol * acc.norm())
        })
        .collect();
    if entries.iter().any(|e| e.1) {
        let ln_eta = -2.0 * s as f64 * rho_star.ln();
        let required = if ln_eta < 0.0 { (cfg.tail_tol.ln() / ln_eta).ceil() as usize } else { usize::MAX };
        return Err(Error::TailNotConverged { used: m_tail, required: required.max(2 * m_tail) });
    }
    let mut h = HermitianMatrix::zeros(jn);
    for (&(i, j), e) in pairs.iter().zip(entries) {
        h.set(i, j, e.0);
    }
    Ok(h)
}

/// Taylor-sheet samples on the first symmetry sector of `|x| = 1`,
/// reusable across blocks `q` of one parameter point.
#[derive(Debug, Clone)]
pub struct ContourSamples {
    s: u32,
    /// `(x V'(x), V(x))` at the nodes.
    nodes: Vec<(Complex64, Complex64)>,
}

const CHUNK: usize = 2048;

impl ContourSamples {
    /// Node count per sector `ceil(ln(1/tol) / (s ln ρ_*)) + 64`.
    pub fn new(p: &ParamPoint, rho_star: f64, tol: f64) -> Result<ContourSamples> {
        if !(rho_star > 1.0) {
            return Err(Error::InvalidParameter(format!("contour Gram needs ρ_* > 1, got {rho_star}")));
        }
        let s = p.leaf.s();
        let per_sector = ((1.0 / tol).ln() / (s as f64 * rho_star.ln())).ceil() as usize + 64;
        let n_full = per_sector * s as usize;
        let dtheta = 2.0 * PI / n_full as f64;
        let us = sheet_on_arc(p, 1.0, 0.0, dtheta, per_sector)?;
        let nodes = us
            .iter()
            .enumerate()
            .map(|(n, &u)| {
                let x = Complex64::from_polar(1.0, n as f64 * dtheta);
                let (_, gu, gx) = equation(p, x, u);
                let du = -gx / gu;
                (x * (u + x * du), x * u)
            })
            .collect();
        Ok(ContourSamples { s, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gram block from `g_j(x) = c_j x V'(x) V(x)^{p_j - 1}`, averaged over the sector.
    pub fn gram(&self, cfg: &RenormConfig, use_weights: bool) -> HermitianMatrix {
        let s = self.s;
        let jn = cfg.j_max + 1;
        let alpha = if use_weights { cfg.alpha } else { 1.0 };
        let coef: Vec<f64> = (0..jn)
            .map(|j| {
                let pj = cfg.p(j, s) as f64;
                if use_weights {
                    pj.powf(-1.0 - cfg.beta)
                } else {
                    pj.sqrt()
                }
            })
            .collect();
        let tri = jn * (jn + 1) / 2;
        let partials: Vec<Vec<Complex64>> = self
            .nodes
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![Complex64::default(); tri];
                let mut g = vec![Complex64::default(); jn];
                for &(xdv, v) in chunk {
                    let b = v / alpha;
                    let bs = b.powu(s);
                    let mut cur = xdv / alpha * b.powu(cfg.q - 1);
                    for j in 0..jn {
                        g[j] = cur * coef[j];
                        cur *= bs;
                    }
                    let mut k = 0;
                    for i in 0..jn {
                        let gi = g[i].conj();
                        for gj in &g[i..] {
                            acc[k] += gi * gj;
                            k += 1;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![Complex64::default(); tri];
        for part in &partials {
            for (t, v) in total.iter_mut().zip(part) {
                *t += v;
            }
        }
        let inv = 1.0 / self.nodes.len() as f64;
        let mut h = HermitianMatrix::zeros(jn);
        let mut k = 0;
        for i in 0..jn {
            for j in i..jn {
                h.set(i, j, total[k] * inv);
                k += 1;
            }
        }
        h
    }
}
