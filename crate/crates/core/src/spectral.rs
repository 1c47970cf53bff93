//! Approach scans towards the critical locus: `L(ε)`, spike vectors,
//! eigenvalue trajectories and the rank-one remainder.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::branch::{dominant_data_with, DominanceConfig, DominantData};
use crate::error::{Error, Result};
use crate::hessian::{eigen, gram_block_with, resolve_method, ContourSamples, GramMethod, HermitianMatrix, RenormConfig};
use crate::series::ParamPoint;

/// `L = -log(1-η)/η`, with the `η → 0` limit handled by the series.
pub fn l_from_eta(eta: f64) -> f64 {
    if eta < 1e-8 {
        1.0 + eta / 2.0 + eta * eta / 3.0
    } else {
        -(-eta).ln_1p() / eta
    }
}

/// `(η, L)` with `ρ = (1 + ρ_*)/2` and `η = (ρ ρ_*)^{-2s}`.
pub fn log_scale(rho_star: f64, s: u32) -> Result<(f64, f64)> {
    if !(rho_star > 1.0) {
        return Err(Error::InvalidParameter(format!("log scale needs ρ_* > 1, got {rho_star}")));
    }
    let rho = 0.5 * (1.0 + rho_star);
    let eta = (-2.0 * s as f64 * (rho * rho_star).ln()).exp();
    Ok((eta, l_from_eta(eta)))
}

/// `d̃(j) = e^{-ijφ} (s/√p_j) conj(A_{p_j}) / w_j` and `Γ = ‖d̃‖²`.
pub fn spike_vector(dom: &DominantData, cfg: &RenormConfig) -> (Vec<Complex64>, f64) {
    let s = dom.s;
    let d: Vec<Complex64> = (0..=cfg.j_max)
        .map(|j| {
            let p = cfg.p(j, s);
            let pf = p as f64;
            let phase = Complex64::from_polar(1.0, -(j as f64) * dom.phi);
            phase * (s as f64) * pf.powf(-2.0 - cfg.beta) * dom.amplitude_scaled(p, cfg.alpha).conj()
        })
        .collect();
    let gamma = d.iter().map(|z| z.norm_sqr()).sum();
    (d, gamma)
}

/// Spectral data of one renormalized block at one scan point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSpectrum {
    pub q: u32,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// Top eigenvalues, descending.
    pub mu: Vec<f64>,
    #[serde(skip)]
    pub spike: Vec<Complex64>,
    pub gamma: f64,
    /// `max |eig(C̃)|` with `C̃ = G̃ - L d̃ d̃*`.
    pub c_norm: f64,
    pub c_hs: f64,
    /// `⟨d̂, C̃ d̂⟩` for the unit spike direction.
    pub c_spike: f64,
    pub method: GramMethod,
}

impl BlockSpectrum {
    /// `L Γ - c_norm <= μ_1 <= L Γ + c_norm`.
    pub fn sandwich_holds(&self) -> bool {
        let centre = self.l * self.gamma;
        let slack = 1e-12 * (centre.abs() + self.c_norm);
        (self.mu[0] - centre).abs() <= self.c_norm + slack
    }
}

/// Assemble `G̃`, its spectrum, the spike and the remainder for one block.
pub fn block_spectrum(
    p: &ParamPoint,
    dom: &DominantData,
    cfg: &RenormConfig,
    samples: Option<&ContourSamples>,
    delta: f64,
    k_max: usize,
) -> Result<BlockSpectrum> {
    let s = p.leaf.s();
    cfg.validate_for(s)?;
    let method = resolve_method(cfg, dom.rho_star, s);
    let g = match (method, samples) {
        (GramMethod::Contour, Some(smp)) => smp.gram(cfg, true),
        _ => gram_block_with(p, dom, &RenormConfig { method, ..*cfg }, true)?,
    };
    let (_, l) = log_scale(dom.rho_star, s)?;
    let (d, gamma) = spike_vector(dom, cfg);
    spectrum_from_gram(&g, &d, gamma, l, cfg.q, dom.rho_star - 1.0, delta, k_max, method)
}

#[allow(clippy::too_many_arguments)]
fn spectrum_from_gram(
    g: &HermitianMatrix,
    d: &[Complex64],
    gamma: f64,
    l: f64,
    q: u32,
    epsilon: f64,
    delta: f64,
    k_max: usize,
    method: GramMethod,
) -> Result<BlockSpectrum> {
    let mu: Vec<f64> = eigen(g)?.values.into_iter().take(k_max).collect();
    let c = g.minus_rank_one(l, d);
    let ce = eigen(&c)?;
    let c_norm = ce.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let c_spike = if gamma > 0.0 {
        let dn: Vec<Complex64> = d.iter().map(|z| z / gamma.sqrt()).collect();
        c.quadratic_form(&dn)
    } else {
        0.0
    };
    Ok(BlockSpectrum {
        q,
        epsilon,
        delta,
        l,
        mu,
        spike: d.to_vec(),
        gamma,
        c_norm,
        c_hs: c.frobenius(),
        c_spike,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Series order used to certify dominance.
    pub order: usize,
    pub k_max: usize,
    pub dominance: DominanceConfig,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { order: 400, k_max: 8, dominance: DominanceConfig::default() }
    }
}

/// One `(δ, q)` outcome of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub index: usize,
    pub delta: f64,
    pub q: u32,
    pub outcome: Result<BlockSpectrum>,
}

/// Evaluate every block `q` at every grid point of the path `ζ(δ)`.
/// Failed points keep their error; records are ordered by grid index, then by `q_list`.
pub fn scan_path<F>(path: F, delta_grid: &[f64], cfg: &RenormConfig, q_list: &[u32], opts: &ScanOptions) -> Vec<ScanRecord>
where
    F: Fn(f64) -> Result<ParamPoint> + Sync,
{
    let per_point: Vec<Vec<ScanRecord>> = delta_grid
        .par_iter()
        .enumerate()
        .map(|(index, &delta)| {
            let fail = |e: Error| {
                q_list
                    .iter()
                    .map(|&q| ScanRecord { index, delta, q, outcome: Err(e.clone()) })
                    .collect::<Vec<_>>()
            };
            let p = match path(delta) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let dom = match dominant_data_with(&p, opts.order, &opts.dominance, &[]) {
                Ok(d) => d,
                Err(e) => return fail(e),
            };
            let s = p.leaf.s();
            let needs_contour = q_list
                .iter()
                .any(|&q| resolve_method(&cfg.with_q(q), dom.rho_star, s) == GramMethod::Contour);
            let samples = if needs_contour {
                match ContourSamples::new(&p, dom.rho_star, cfg.tail_tol) {
                    Ok(smp) => Some(smp),
                    Err(e) => return fail(e),
                }
            } else {
                None
            };
            q_list
                .iter()
                .map(|&q| ScanRecord {
                    index,
                    delta,
                    q,
                    outcome: block_spectrum(&p, &dom, &cfg.with_q(q), samples.as_ref(), delta, opts.k_max),
                })
                .collect()
        })
        .collect();
    per_point.into_iter().flatten().collect()
}

/// Ordinary least squares with coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points for a line fit", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// Log-scaling summary of one block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub q: u32,
    /// `μ_1` against `L(ε)` over all successful points.
    pub fit_l: LinearFit,
    /// `μ_1` against `log(1/δ)` over the last decade of `δ`.
    pub fit_last_decade: LinearFit,
    /// `Γ` at the smallest `δ`.
    pub gamma_limit: f64,
    /// `μ_1 / L` in grid order.
    pub mu1_over_l: Vec<f64>,
    /// Relative variation of `μ_k`, `k = 2..=k_max`, over the last decade.
    pub last_decade_variation: Vec<f64>,
    /// `last_decade_variation[k] < bounded_tol`.
    pub bounded: Vec<bool>,
    pub points: usize,
}

/// Fit `μ_1 = slope · L + intercept` for block `q`.
pub fn fit_log_scaling(records: &[ScanRecord], q: u32, bounded_tol: f64) -> Result<ScalingReport> {
    let mut pts: Vec<&BlockSpectrum> = records
        .iter()
        .filter(|r| r.q == q)
        .filter_map(|r| r.outcome.as_ref().ok())
        .collect();
    pts.sort_by(|a, b| b.delta.partial_cmp(&a.delta).unwrap());
    if pts.len() < 6 {
        return Err(Error::InsufficientData(format!("{} successful points for q = {q}", pts.len())));
    }
    let dmax = pts.first().unwrap().delta;
    let dmin = pts.last().unwrap().delta;
    if !(dmax / dmin >= 100.0) {
        return Err(Error::InsufficientData(format!("δ spans {:.2} decades, need 2", (dmax / dmin).log10())));
    }
    let ls: Vec<f64> = pts.iter().map(|b| b.l).collect();
    let mu1: Vec<f64> = pts.iter().map(|b| b.mu[0]).collect();
    let fit_l = linear_fit(&ls, &mu1)?;
    let last: Vec<&&BlockSpectrum> = pts.iter().filter(|b| b.delta <= 10.0 * dmin * (1.0 + 1e-12)).collect();
    let xs: Vec<f64> = last.iter().map(|b| (1.0 / b.delta).ln()).collect();
    let ys: Vec<f64> = last.iter().map(|b| b.mu[0]).collect();
    let fit_last_decade = linear_fit(&xs, &ys)?;
    let k_max = pts.iter().map(|b| b.mu.len()).min().unwrap_or(0);
    let mut var = Vec::new();
    for k in 1..k_max {
        let vals: Vec<f64> = last.iter().map(|b| b.mu[k]).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        var.push(if hi.abs() > 0.0 { (hi - lo) / hi.abs() } else { 0.0 });
    }
    Ok(ScalingReport {
        q,
        fit_l,
        fit_last_decade,
        gamma_limit: pts.last().unwrap().gamma,
        mu1_over_l: pts.iter().map(|b| b.mu[0] / b.l).collect(),
        bounded: var.iter().map(|&v| v < bounded_tol).collect(),
        last_decade_variation: var,
        points: pts.len(),
    })
}

/// `n` points log-spaced from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
