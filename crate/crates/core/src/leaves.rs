//! Explicit infinite leaves: the single-pole and single-log maps, where the
//! characteristic values are available in closed form.
//!
//! Both leaves are written as `u = x (1 + Ψ(u))`. For the pole leaf
//! `Ψ(u) = c u² / (1 - b u)`, for the log leaf `Ψ(u) = γ u log(1 - b u)` on
//! the principal sheet.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branch::{radius_estimate, radius_estimate_pair};
use crate::error::{Error, Result};
use crate::series::PowerSeries;

const PILOT_ORDER: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleLeafPoint {
    pub b: Complex64,
    pub c: f64,
}

impl PoleLeafPoint {
    pub fn new(b: Complex64, c: f64) -> Result<Self> {
        if !(b.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!("pole leaf needs |b| < 1, got {b}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("pole leaf needs c > 0, got {c}")));
        }
        Ok(PoleLeafPoint { b, c })
    }

    pub fn real(b: f64, c: f64) -> Result<Self> {
        PoleLeafPoint::new(Complex64::new(b, 0.0), c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleChar {
    pub rho: f64,
    pub x_plus: Complex64,
    pub x_minus: Complex64,
}

/// `x_*^± = 1/(b ± 2√c)` and their minimal modulus.
pub fn pole_rho_char(p: &PoleLeafPoint) -> Result<PoleChar> {
    let two_sqrt_c = 2.0 * p.c.sqrt();
    let dp = p.b + two_sqrt_c;
    let dm = p.b - two_sqrt_c;
    let tiny = 1e-15 * (1.0 + two_sqrt_c);
    if dp.norm() <= tiny || dm.norm() <= tiny {
        return Err(Error::Degenerate(format!("characteristic value at infinity for b = {}, c = {}", p.b, p.c)));
    }
    let (x_plus, x_minus) = (dp.inv(), dm.inv());
    Ok(PoleChar { rho: x_plus.norm().min(x_minus.norm()), x_plus, x_minus })
}

/// Discriminant `1 - 2bx + (b² - 4c)x²` of the quadratic inverse relation.
pub fn pole_discriminant(p: &PoleLeafPoint, x: Complex64) -> Complex64 {
    1.0 - 2.0 * p.b * x + (p.b * p.b - 4.0 * p.c) * x * x
}

/// Coefficients of `u(scale·y)` in `y` for the pole germ, through `y^order`.
pub fn pole_germ(p: &PoleLeafPoint, order: usize, scale: f64) -> Vec<Complex64> {
    // h = u²/(1-bu) obeys h = u² + b u h
    let mut u = vec![Complex64::default(); order + 1];
    let mut h = vec![Complex64::default(); order + 1];
    if order >= 1 {
        u[1] = Complex64::new(scale, 0.0);
    }
    for n in 2..=order {
        let mut sq = Complex64::default();
        let mut uh = Complex64::default();
        for k in 1..n {
            sq += u[k] * u[n - k];
            uh += u[k] * h[n - k];
        }
        h[n] = sq + p.b * uh;
        if n < order {
            u[n + 1] = scale * p.c * h[n];
        }
    }
    u
}

/// Odd-index coefficients as a series in `y²`; the pair `x_*^±` has opposite
/// signs on the real slice, so the even coefficients can cancel.
fn odd_radius(u: &[Complex64]) -> Result<f64> {
    let odd: Vec<Complex64> = u.iter().skip(1).step_by(2).copied().collect();
    Ok(radius_estimate(&PowerSeries::new(odd), 2)?.rho)
}

/// Radius of the pole germ from its coefficients alone.
pub fn pole_germ_radius(p: &PoleLeafPoint, order: usize) -> Result<f64> {
    if order < 100 {
        return Err(Error::InvalidParameter(format!("pole germ radius needs order >= 100, got {order}")));
    }
    let scale = odd_radius(&pole_germ(p, PILOT_ORDER.min(order), 1.0)).unwrap_or(1.0);
    Ok(scale * odd_radius(&pole_germ(p, order, scale))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLeafPoint {
    pub b: f64,
    pub gamma: f64,
}

impl LogLeafPoint {
    pub fn new(b: f64, gamma: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter(format!("log leaf needs 0 < b < 1, got {b}")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("log leaf needs gamma > 0, got {gamma}")));
        }
        Ok(LogLeafPoint { b, gamma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogChar {
    pub rho: f64,
    pub u_plus: Complex64,
    pub u_minus: Complex64,
    pub x_plus: Complex64,
    pub x_minus: Complex64,
    pub conjugate_pair: bool,
    /// `1 - b u_±` lies on the negative real axis; the logarithm is then taken
    /// from the upper side of the cut.
    pub on_cut: bool,
}

/// Principal `log(1 - b u)`. On the cut the upper-side value is returned
/// together with a flag.
pub fn principal_log(b: f64, u: Complex64) -> Result<(Complex64, bool)> {
    let w = 1.0 - b * u;
    if w.norm() <= 1e-12 {
        return Err(Error::LogBranchCut { u: format!("{u}") });
    }
    if w.re < 0.0 && w.im.abs() <= 1e-12 * w.norm() {
        return Ok((Complex64::new((-w.re).ln(), std::f64::consts::PI), true));
    }
    Ok((w.ln(), false))
}

/// `X(u) = u / (1 + γ u log(1 - b u))` on the principal sheet.
pub fn log_x_of_u(p: &LogLeafPoint, u: Complex64) -> Result<(Complex64, bool)> {
    let (l, on_cut) = principal_log(p.b, u)?;
    let den = 1.0 + p.gamma * u * l;
    if den.norm() <= 1e-300 {
        return Err(Error::Degenerate(format!("X(u) has a pole at u = {u}")));
    }
    Ok((u / den, on_cut))
}

/// Roots of `γ b u² - b u + 1 = 0` and their principal-sheet values.
pub fn log_rho_char(p: &LogLeafPoint) -> Result<LogChar> {
    let (b, g) = (p.b, p.gamma);
    let disc = b * b - 4.0 * g * b;
    let root = Complex64::new(disc, 0.0).sqrt();
    let u_plus = (b + root) / (2.0 * g * b);
    let u_minus = (b - root) / (2.0 * g * b);
    let (x_plus, c1) = log_x_of_u(p, u_plus)?;
    let (x_minus, c2) = log_x_of_u(p, u_minus)?;
    Ok(LogChar {
        rho: x_plus.norm().min(x_minus.norm()),
        u_plus,
        u_minus,
        x_plus,
        x_minus,
        conjugate_pair: b < 4.0 * g,
        on_cut: c1 || c2,
    })
}

/// Coefficients of `u(scale·y)` in `y` for the log germ, with the logarithm
/// expanded as a series.
pub fn log_germ(p: &LogLeafPoint, order: usize, scale: f64) -> Vec<f64> {
    // lg = log(1 - b u):  n lg_n = -b n u_n + b Σ u_k (n-k) lg_{n-k}
    let mut u = vec![0.0; order + 1];
    let mut lg = vec![0.0; order + 1];
    if order >= 1 {
        u[1] = scale;
    }
    for n in 1..=order {
        let mut acc = 0.0;
        for k in 1..n {
            acc += u[k] * (n - k) as f64 * lg[n - k];
        }
        lg[n] = -p.b * u[n] + p.b * acc / n as f64;
        if n < order {
            let mut ul = 0.0;
            for k in 1..n {
                ul += u[k] * lg[n - k];
            }
            u[n + 1] = scale * p.gamma * ul;
        }
    }
    u
}

/// Radius of the log germ from its coefficients, assuming the nearest
/// singularities form a conjugate pair.
pub fn log_germ_radius(p: &LogLeafPoint, order: usize) -> Result<f64> {
    if order < 100 {
        return Err(Error::InvalidParameter(format!("log germ radius needs order >= 100, got {order}")));
    }
    let scale = radius_estimate_pair(&log_germ(p, PILOT_ORDER.min(order), 1.0)).unwrap_or(1.0);
    Ok(scale * radius_estimate_pair(&log_germ(p, order, scale))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafKind {
    Pole,
    Log,
}

/// Rectangular grid over `b` and the second parameter (`c` or `γ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: LeafKind,
    pub b: Vec<f64>,
    pub y: Vec<f64>,
}

impl GridSpec {
    pub fn linspace(kind: LeafKind, b: (f64, f64, usize), y: (f64, f64, usize)) -> GridSpec {
        GridSpec { kind, b: linspace(b.0, b.1, b.2), y: linspace(y.0, y.1, y.2) }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub b: f64,
    pub y: f64,
    pub rho_char: Option<f64>,
    pub x_plus_abs: Option<f64>,
    pub x_minus_abs: Option<f64>,
    pub conjugate_pair: Option<bool>,
    pub error_code: Option<&'static str>,
}

/// Point of the `ρ_char = 1` contour in one grid column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourPoint {
    pub b: f64,
    pub y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub kind: LeafKind,
    pub cells: Vec<PhaseCell>,
    pub contour: Vec<ContourPoint>,
}

struct CellValue {
    rho: f64,
    plus: f64,
    minus: f64,
    pair: bool,
}

fn evaluate(kind: LeafKind, b: f64, y: f64) -> Result<CellValue> {
    match kind {
        LeafKind::Pole => {
            let pc = pole_rho_char(&PoleLeafPoint::real(b, y)?)?;
            Ok(CellValue { rho: pc.rho, plus: pc.x_plus.norm(), minus: pc.x_minus.norm(), pair: false })
        }
        LeafKind::Log => {
            let lc = log_rho_char(&LogLeafPoint::new(b, y)?)?;
            Ok(CellValue { rho: lc.rho, plus: lc.x_plus.norm(), minus: lc.x_minus.norm(), pair: lc.conjugate_pair })
        }
    }
}

/// `ρ_char` on a grid plus the `ρ_char = 1` contour, one bisection per column.
/// Cell failures are recorded, never propagated.
pub fn phase_diagram(spec: &GridSpec) -> PhaseDiagram {
    let cells = spec
        .b
        .par_iter()
        .flat_map_iter(|&b| {
            spec.y.iter().map(move |&y| match evaluate(spec.kind, b, y) {
                Ok(v) => PhaseCell {
                    b,
                    y,
                    rho_char: Some(v.rho),
                    x_plus_abs: Some(v.plus),
                    x_minus_abs: Some(v.minus),
                    conjugate_pair: Some(v.pair),
                    error_code: None,
                },
                Err(e) => PhaseCell {
                    b,
                    y,
                    rho_char: None,
                    x_plus_abs: None,
                    x_minus_abs: None,
                    conjugate_pair: None,
                    error_code: Some(e.code()),
                },
            })
        })
        .collect();
    let contour = spec.b.par_iter().map(|&b| ContourPoint { b, y: column_crossing(spec.kind, b, &spec.y) }).collect();
    PhaseDiagram { kind: spec.kind, cells, contour }
}

fn column_crossing(kind: LeafKind, b: f64, ys: &[f64]) -> Option<f64> {
    let f = |y: f64| evaluate(kind, b, y).map(|v| v.rho - 1.0).ok();
    let mut prev: Option<(f64, f64)> = None;
    for &y in ys {
        let Some(fy) = f(y) else {
            prev = None;
            continue;
        };
        if fy == 0.0 {
            return Some(y);
        }
        if let Some((y0, f0)) = prev {
            if f0.signum() != fy.signum() {
                return bisect(&f, y0, y, f0).ok();
            }
        }
        prev = Some((y, fy));
    }
    None
}

fn bisect<F: Fn(f64) -> Option<f64>>(f: &F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let Some(fm) = f(mid) else {
            // A degenerate point inside a collapsed bracket is the crossing itself
            // (e.g. |b| = 1/2 on the pole leaf, where c = b²/4 meets the curve).
            if hi - lo <= 1e-9 * (1.0 + mid.abs()) {
                return Ok(mid);
            }
            return Err(Error::NotBracketed(format!("evaluation failed at {mid}")));
        };
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Log-leaf `ρ_char(b, γ)` with failures mapped to `+∞`.
fn log_rho(b: f64, gamma: f64) -> f64 {
    LogLeafPoint::new(b, gamma).and_then(|p| log_rho_char(&p)).map(|c| c.rho).unwrap_or(f64::INFINITY)
}

/// `lim_{b→1⁻} ρ_char(b, γ)` by polynomial extrapolation from `b = 1 - 10^{-k}`, `k = 2..6`.
pub fn log_boundary_limit(gamma: f64) -> f64 {
    let hs: Vec<f64> = (2..=6).map(|k| 10f64.powi(-k)).collect();
    let mut t: Vec<f64> = hs.iter().map(|&h| log_rho(1.0 - h, gamma)).collect();
    // Neville at h = 0
    let n = t.len();
    for level in 1..n {
        for i in (level..n).rev() {
            let (hi, hj) = (hs[i], hs[i - level]);
            t[i] = (hj * t[i] - hi * t[i - 1]) / (hj - hi);
        }
    }
    t[n - 1]
}

/// Minimum of the active envelope over `b ∈ (0, 1)`: grid bracketing then
/// golden section. Returns `(b, ρ)`.
pub fn log_interior_min(gamma: f64) -> (f64, f64) {
    const N: usize = 400;
    let b_hi = 1.0 - 1e-6;
    let grid: Vec<f64> = (1..=N).map(|i| b_hi * i as f64 / N as f64).collect();
    let (mut best, mut best_v) = (0, f64::INFINITY);
    for (i, &b) in grid.iter().enumerate() {
        let v = log_rho(b, gamma);
        if v < best_v {
            best = i;
            best_v = v;
        }
    }
    let mut lo = if best == 0 { 1e-9 } else { grid[best - 1] };
    let mut hi = if best + 1 < N { grid[best + 1] } else { b_hi };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (log_rho(x1, gamma), log_rho(x2, gamma));
    for _ in 0..100 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = log_rho(x1, gamma);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = log_rho(x2, gamma);
        }
    }
    let (b, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if v < best_v {
        (b, v)
    } else {
        (grid[best], best_v)
    }
}

/// Interior point `b_c(γ) < 1` where the active envelope first reaches 1.
pub fn log_level_crossing(gamma: f64) -> Option<f64> {
    let f = |b: f64| {
        let v = log_rho(b, gamma);
        v.is_finite().then_some(v - 1.0)
    };
    let grid = linspace(1e-3, 1.0 - 1e-6, 1000);
    column_crossing_fn(&f, &grid)
}

fn column_crossing_fn<F: Fn(f64) -> Option<f64>>(f: &F, grid: &[f64]) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let Some(fx) = f(x) else {
            prev = None;
            continue;
        };
        if let Some((x0, f0)) = prev {
            if f0.signum() != fx.signum() {
                return bisect(f, x0, x, f0).ok();
            }
        }
        prev = Some((x, fx));
    }
    None
}

/// Principal-sheet threshold. The value is an empirical guide derived from
/// the characteristic formula, not a proven phase boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaC {
    pub gamma_c: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub status: &'static str,
}

/// `inf γ` with `min_{b∈(0,1)} ρ_char(b, γ) ≤ 1`, by bisection over `[0.1, 0.5]`.
pub fn gamma_c_solve(tol: f64) -> Result<GammaC> {
    gamma_c_solve_in(0.1, 0.5, tol)
}

pub fn gamma_c_solve_in(lo: f64, hi: f64, tol: f64) -> Result<GammaC> {
    if !(tol >= 1e-6) {
        return Err(Error::InvalidParameter(format!("gamma_c tolerance must be >= 1e-6, got {tol}")));
    }
    let reached = |g: f64| log_interior_min(g).1.min(log_boundary_limit(g)) <= 1.0;
    let (mut a, mut b) = (lo, hi);
    if reached(a) || !reached(b) {
        return Err(Error::NotBracketed(format!("level rho_char = 1 does not change behaviour on [{lo}, {hi}]")));
    }
    // the reported midpoint is accurate to well below `tol`
    let mut iterations = 0;
    while b - a > 1e-3 * tol {
        let m = 0.5 * (a + b);
        if reached(m) {
            b = m;
        } else {
            a = m;
        }
        iterations += 1;
    }
    Ok(GammaC { gamma_c: 0.5 * (a + b), bracket: (lo, hi), iterations, status: "empirical principal-sheet threshold" })
}

/// Maps `f(w) = r w + Σ A_k/(w - b_k)` and `f(w) = r w + Σ c_k log(1 - b_k/w)`.
/// Only residuals of the characteristic equations are provided.
#[derive(Debug, Clone, PartialEq)]
pub enum ExplicitMap {
    MultiPole { r: f64, terms: Vec<(Complex64, Complex64)> },
    MultiLog { r: f64, terms: Vec<(Complex64, Complex64)> },
}

impl ExplicitMap {
    pub fn psi(&self, u: Complex64) -> Complex64 {
        match self {
            ExplicitMap::MultiPole { r, terms } => {
                u * u / *r * terms.iter().map(|(a, b)| a / (1.0 - b * u)).sum::<Complex64>()
            }
            ExplicitMap::MultiLog { r, terms } => u / *r * terms.iter().map(|(c, b)| c * (1.0 - b * u).ln()).sum::<Complex64>(),
        }
    }

    pub fn dpsi(&self, u: Complex64) -> Complex64 {
        match self {
            ExplicitMap::MultiPole { r, terms } => {
                terms
                    .iter()
                    .map(|(a, b)| {
                        let d = 1.0 - b * u;
                        a * (2.0 * u / d + b * u * u / (d * d))
                    })
                    .sum::<Complex64>()
                    / *r
            }
            ExplicitMap::MultiLog { r, terms } => {
                terms
                    .iter()
                    .map(|(c, b)| {
                        let d = 1.0 - b * u;
                        c * (d.ln() - b * u / d)
                    })
                    .sum::<Complex64>()
                    / *r
            }
        }
    }

    /// `1 + Ψ(u) - u Ψ'(u)`.
    pub fn char_residual(&self, u: Complex64) -> Complex64 {
        1.0 + self.psi(u) - u * self.dpsi(u)
    }

    /// `r - u² Σ A_k/(1 - b_k u)²` or `r + u² Σ c_k b_k/(1 - b_k u)`.
    pub fn reduced_residual(&self, u: Complex64) -> Complex64 {
        match self {
            ExplicitMap::MultiPole { r, terms } => {
                *r - u * u * terms.iter().map(|(a, b)| a / ((1.0 - b * u) * (1.0 - b * u))).sum::<Complex64>()
            }
            ExplicitMap::MultiLog { r, terms } => {
                *r + u * u * terms.iter().map(|(c, b)| c * b / (1.0 - b * u)).sum::<Complex64>()
            }
        }
    }

    pub fn r(&self) -> f64 {
        match self {
            ExplicitMap::MultiPole { r, .. } | ExplicitMap::MultiLog { r, .. } => *r,
        }
    }

    /// `x = u / (1 + Ψ(u))`.
    pub fn x_of_u(&self, u: Complex64) -> Complex64 {
        u / (1.0 + self.psi(u))
    }
}
