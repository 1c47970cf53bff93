//! Characteristic system, dominant orbit, transfer amplitudes and
//! continuation of the critical data along parameter paths.
//!
//! With `F(y, x) = y - 1 - Σ ζ_n x^{s_n} y^{s_n}`, characteristic points are
//! the solutions of `F = ∂_y F = 0`.

pub mod roots;
pub mod sheet;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{taylor_branch, ParamPoint, PowerSeries};

pub use roots::poly_roots;
pub use sheet::{sheet_on_arc, sheet_value, SheetTracker};

/// One solution `(x_*, λ)` of the characteristic system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoint {
    pub x_star: Complex64,
    pub lambda: Complex64,
    /// Principal root of `κ² = 2 x_* ∂_xF / ∂²_yF`, `Re κ >= 0` (ties: `Im κ >= 0`).
    pub kappa: Complex64,
    pub modulus: f64,
    pub simple: bool,
    pub fold_ok: bool,
    pub f_x: Complex64,
    pub f_yy: Complex64,
}

/// Partial derivatives of `F` at `(y, x)`.
#[derive(Debug, Clone, Copy)]
pub struct Partials {
    pub f: Complex64,
    pub f_y: Complex64,
    pub f_x: Complex64,
    pub f_yy: Complex64,
    pub f_xy: Complex64,
    /// `Σ s_n² |ζ_n| |x|^{s_n} |y|^{s_n-2}`, a size reference for `f_yy`.
    pub scale: f64,
}

pub fn partials(p: &ParamPoint, x: Complex64, y: Complex64) -> Partials {
    let one = Complex64::new(1.0, 0.0);
    let mut out = Partials {
        f: y - one,
        f_y: one,
        f_x: Complex64::default(),
        f_yy: Complex64::default(),
        f_xy: Complex64::default(),
        scale: 0.0,
    };
    for (z, &e) in p.zeta.iter().zip(p.leaf.exponents()) {
        let ef = e as f64;
        let xe1 = x.powu(e - 1);
        let ye2 = if e >= 2 { y.powu(e - 2) } else { one };
        let xe = xe1 * x;
        let ye1 = ye2 * y;
        out.f -= z * xe * ye1 * y;
        out.f_y -= z * ef * xe * ye1;
        out.f_x -= z * ef * xe1 * ye1 * y;
        out.f_yy -= z * ef * (ef - 1.0) * xe * ye2;
        out.f_xy -= z * ef * ef * xe1 * ye1;
        out.scale += ef * ef * z.norm() * xe.norm() * ye2.norm();
    }
    out
}

fn principal_kappa(k2: Complex64) -> Complex64 {
    let k = k2.sqrt();
    if k.re < 0.0 || (k.re == 0.0 && k.im < 0.0) {
        -k
    } else {
        k
    }
}

impl CharPoint {
    pub fn from_solution(p: &ParamPoint, x: Complex64, lambda: Complex64) -> CharPoint {
        let d = partials(p, x, lambda);
        let simple = d.f_yy.norm() > 1e-8 * d.scale.max(1e-300);
        let fold_ok = d.f_x.norm() > 1e-12 * (1.0 + lambda.norm() / x.norm());
        let kappa = if simple {
            principal_kappa(2.0 * x * d.f_x / d.f_yy)
        } else {
            Complex64::default()
        };
        CharPoint { x_star: x, lambda, kappa, modulus: x.norm(), simple, fold_ok, f_x: d.f_x, f_yy: d.f_yy }
    }

    /// `max(|F|, |∂_yF|) / (1 + |λ|)`.
    pub fn residual(&self, p: &ParamPoint) -> f64 {
        let d = partials(p, self.x_star, self.lambda);
        d.f.norm().max(d.f_y.norm()) / (1.0 + self.lambda.norm())
    }
}

/// Newton for `(F, ∂_yF) = 0` in `(x, λ)`.
pub fn newton_char(p: &ParamPoint, x0: Complex64, lam0: Complex64) -> Result<(Complex64, Complex64)> {
    let (mut x, mut lam) = (x0, lam0);
    for _ in 0..60 {
        let d = partials(p, x, lam);
        // [f_y f_x; f_yy f_xy] [dλ; dx] = -[f; f_y]
        let det = d.f_y * d.f_xy - d.f_x * d.f_yy;
        if det.norm() == 0.0 || !det.re.is_finite() {
            break;
        }
        let dl = (-d.f * d.f_xy + d.f_x * d.f_y) / det;
        let dx = (-d.f_y * d.f_y + d.f_yy * d.f) / det;
        lam += dl;
        x += dx;
        if dx.norm() <= 1e-15 * x.norm().max(1e-300) && dl.norm() <= 1e-15 * (1.0 + lam.norm()) {
            return Ok((x, lam));
        }
    }
    let d = partials(p, x, lam);
    if d.f.norm().max(d.f_y.norm()) <= 1e-12 * (1.0 + lam.norm()) && x.re.is_finite() {
        return Ok((x, lam));
    }
    Err(Error::NoConvergence {
        what: "characteristic Newton",
        detail: format!("from x = {x0}, λ = {lam0}"),
    })
}

/// All finite characteristic points.
///
/// Elimination with `v = x λ`: `∂_yF = 0` becomes
/// `1 + Σ (1 - s_n) ζ_n v^{s_n} = 0`, a polynomial in `w = v^s`;
/// then `λ = 1 + Σ ζ_n v^{s_n}` and `x = v / λ`. Each root is polished by
/// Newton on the original system.
pub fn solve_characteristic(p: &ParamPoint) -> Result<Vec<CharPoint>> {
    if p.is_zero() {
        return Err(Error::InvalidParameter("ζ = 0 has no finite characteristic points".into()));
    }
    let s = p.leaf.s();
    let ks = p.leaf.reduced();
    let kmax = *ks.iter().max().unwrap();
    let mut poly = vec![Complex64::default(); kmax + 1];
    poly[0] = Complex64::new(1.0, 0.0);
    for ((z, &e), &k) in p.zeta.iter().zip(p.leaf.exponents()).zip(&ks) {
        poly[k] += z * (1.0 - e as f64);
    }
    let wroots = poly_roots(&poly)?;
    let expected = s as usize * wroots.len();

    let mut out: Vec<CharPoint> = Vec::with_capacity(expected);
    for w in wroots {
        let base = w.powf(1.0 / s as f64);
        for j in 0..s {
            let v = base * Complex64::from_polar(1.0, 2.0 * PI * j as f64 / s as f64);
            let lam = p.phi(v);
            if lam.norm() < 1e-300 {
                continue;
            }
            let x0 = v / lam;
            let (x, lam) = newton_char(p, x0, lam)?;
            let cp = CharPoint::from_solution(p, x, lam);
            if cp.residual(p) > 1e-10 || !x.re.is_finite() {
                continue;
            }
            let dup = out.iter().any(|o| {
                (o.x_star - x).norm() <= 1e-8 * (1.0 + x.norm()) && (o.lambda - lam).norm() <= 1e-8 * (1.0 + lam.norm())
            });
            if !dup {
                out.push(cp);
            }
        }
    }
    if out.len() < expected {
        return Err(Error::NoConvergence {
            what: "characteristic system",
            detail: format!("{} of {} solutions resolved", out.len(), expected),
        });
    }
    out.sort_by(|a, b| {
        a.modulus
            .partial_cmp(&b.modulus)
            .unwrap()
            .then(arg_0_2pi(a.x_star).partial_cmp(&arg_0_2pi(b.x_star)).unwrap())
    });
    Ok(out)
}

fn arg_0_2pi(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Domb–Sykes ratio estimate of the radius in `x` and of the coefficient exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    pub rho: f64,
    /// `g` in `u_m ~ C m^g ρ^{-ms}`; `-3/2` for a square-root branch point.
    pub exponent: f64,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn radius_estimate(u: &PowerSeries, s: u32) -> Result<RadiusEstimate> {
    let m_top = u.order();
    if m_top < 50 {
        return Err(Error::InvalidParameter(format!("radius estimate needs order >= 50, got {m_top}")));
    }
    if let Some(first_zero) = (1..=m_top).find(|&m| u.coeff(m).norm() < f64::MIN_POSITIVE) {
        return Err(Error::DegenerateSeries { first_zero });
    }
    let lo = (2 * m_top) / 3;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for m in lo..m_top {
        xs.push(1.0 / m as f64);
        ys.push((u.coeff(m) / u.coeff(m + 1)).norm());
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    if !(intercept > 0.0) {
        return Err(Error::NoConvergence {
            what: "radius estimate",
            detail: format!("nonpositive ratio intercept {intercept}"),
        });
    }
    Ok(RadiusEstimate { rho: intercept.powf(1.0 / s as f64), exponent: -slope / intercept })
}

/// Radius estimate for a real series whose nearest singularities are a
/// complex-conjugate pair: the coefficients obey a two-term recurrence
/// `u_{m+1} ≈ 2 Re(1/z_*) u_m - |z_*|^{-2} u_{m-1}` and the product term is
/// extrapolated in `1/m`. Returns the radius in the series variable.
pub fn radius_estimate_pair(c: &[f64]) -> Result<f64> {
    let m_top = c.len().saturating_sub(1);
    if m_top < 50 {
        return Err(Error::InvalidParameter(format!("radius estimate needs order >= 50, got {m_top}")));
    }
    let lo = (2 * m_top) / 3;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for m in lo.max(3)..m_top {
        let num = c[m + 1] * c[m - 1] - c[m] * c[m];
        let den = c[m] * c[m - 2] - c[m - 1] * c[m - 1];
        let scale = c[m - 1].abs() * c[m - 1].abs() + c[m].abs() * c[m - 2].abs();
        if den.abs() <= 1e-8 * scale || num == 0.0 {
            continue;
        }
        let q = num / den; // ≈ |z_*|^{-2}
        if q > 0.0 {
            xs.push(1.0 / m as f64);
            ys.push(q.sqrt());
        }
    }
    if xs.len() < 8 {
        return Err(Error::InsufficientData("too few usable pair ratios".into()));
    }
    let (_, intercept) = linear_fit(&xs, &ys);
    if !(intercept > 0.0) {
        return Err(Error::NoConvergence { what: "pair radius estimate", detail: format!("intercept {intercept}") });
    }
    Ok(1.0 / intercept)
}

/// Radius estimate of the Taylor branch computed in the variable `x / c`, so
/// that coefficients neither underflow nor overflow when `ρ_*` is far from 1.
pub fn scaled_radius_estimate(p: &ParamPoint, order: usize, c: f64) -> Result<RadiusEstimate> {
    let zeta = p
        .zeta
        .iter()
        .zip(p.leaf.exponents())
        .map(|(z, &e)| z * c.powi(e as i32))
        .collect();
    let scaled = ParamPoint::new(p.leaf.clone(), zeta)?;
    let est = radius_estimate(&taylor_branch(&scaled, order), p.leaf.s())?;
    Ok(RadiusEstimate { rho: est.rho * c, ..est })
}

/// Thresholds used to certify the dominant orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceConfig {
    pub tol_match: f64,
    pub sep_min: f64,
    pub exponent_tol: f64,
    /// `h` in the sheet probe at `x_*(1-h)` fixing the sign of `κ`.
    pub probe_h: f64,
}

impl Default for DominanceConfig {
    fn default() -> Self {
        DominanceConfig { tol_match: 5e-3, sep_min: 1e-6, exponent_tol: 0.3, probe_h: 1e-6 }
    }
}

/// Dominant orbit data of the Taylor branch.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantData {
    pub s: u32,
    pub rho_star: f64,
    /// Representative with `arg x_* ∈ [0, 2π/s)`.
    pub representative: CharPoint,
    pub orbit_size: usize,
    /// Relative gap `min |x|/ρ_* - 1` to characteristic moduli outside the orbit.
    pub separation: f64,
    /// `arg(x_*^s)`.
    pub phi: f64,
    /// `κ` on the Taylor sheet: `U(x) ≈ λ + κ (1 - x/x_*)^{1/2}` near the representative.
    pub kappa: Complex64,
    pub rho_hat: f64,
    pub exponent_hat: f64,
    pub amplitudes: BTreeMap<u32, Complex64>,
}

impl DominantData {
    pub fn lambda(&self) -> Complex64 {
        self.representative.lambda
    }

    pub fn x_star(&self) -> Complex64 {
        self.representative.x_star
    }

    /// `A_p = -(s^{-1/2} / (2√π)) p κ λ^{p-1}`.
    pub fn amplitude(&self, p: u32) -> Complex64 {
        let c = -1.0 / ((self.s as f64).sqrt() * 2.0 * PI.sqrt());
        c * p as f64 * self.kappa * self.lambda().powu(p - 1)
    }

    /// `A_p / α^p`, formed as `c p (κ/λ) (λ/α)^p` so that neither factor overflows.
    pub fn amplitude_scaled(&self, p: u32, alpha: f64) -> Complex64 {
        let c = -1.0 / ((self.s as f64).sqrt() * 2.0 * PI.sqrt());
        let lam = self.lambda();
        let ratio = lam / alpha;
        let pow = Complex64::from_polar((p as f64 * ratio.norm().ln()).exp(), p as f64 * ratio.arg());
        c * p as f64 * (self.kappa / lam) * pow
    }
}

/// Identify the dominant orbit with default thresholds; amplitudes for `p <= 10`.
pub fn dominant_data(p: &ParamPoint, order: usize) -> Result<DominantData> {
    dominant_data_with(p, order, &DominanceConfig::default(), &(1..=10).collect::<Vec<_>>())
}

pub fn dominant_data_with(p: &ParamPoint, order: usize, cfg: &DominanceConfig, p_list: &[u32]) -> Result<DominantData> {
    let chars = solve_characteristic(p)?;
    let est = scaled_radius_estimate(p, order, chars[0].modulus)?;
    dominant_from_parts(p, &chars, est, cfg, p_list)
}

/// Dominant data from precomputed characteristic points and radius estimate.
pub fn dominant_from_parts(
    p: &ParamPoint,
    chars: &[CharPoint],
    est: RadiusEstimate,
    cfg: &DominanceConfig,
    p_list: &[u32],
) -> Result<DominantData> {
    let s = p.leaf.s();
    if (est.exponent + 1.5).abs() > cfg.exponent_tol {
        return Err(Error::NoDominantOrbit(format!(
            "coefficient exponent {:.4} is not a square-root law",
            est.exponent
        )));
    }
    let best = chars
        .iter()
        .min_by(|a, b| {
            let da = (a.modulus - est.rho).abs();
            let db = (b.modulus - est.rho).abs();
            da.partial_cmp(&db).unwrap()
        })
        .ok_or_else(|| Error::NoDominantOrbit("no characteristic points".into()))?;
    if (best.modulus - est.rho).abs() > cfg.tol_match * est.rho {
        return Err(Error::NoDominantOrbit(format!(
            "radius estimate {:.6} matches no characteristic modulus (nearest {:.6})",
            est.rho, best.modulus
        )));
    }
    let rho = best.modulus;
    let zs = best.x_star.powu(s);
    let (orbit, others): (Vec<&CharPoint>, Vec<&CharPoint>) = chars
        .iter()
        .partition(|c| (c.modulus - rho).abs() <= cfg.sep_min * rho);
    let same_orbit = orbit.iter().all(|c| {
        (c.x_star.powu(s) - zs).norm() <= 1e-8 * zs.norm() && (c.lambda - best.lambda).norm() <= 1e-8 * (1.0 + best.lambda.norm())
    });
    if orbit.len() != s as usize || !same_orbit {
        return Err(Error::NoDominantOrbit(format!(
            "{} characteristic points share the modulus {rho:.8} (expected one orbit of {s})",
            orbit.len()
        )));
    }
    let separation = others
        .iter()
        .map(|c| (c.modulus - rho).abs() / rho)
        .fold(f64::INFINITY, f64::min);
    if separation <= cfg.sep_min {
        return Err(Error::NoDominantOrbit(format!("separation {separation:e} below {}", cfg.sep_min)));
    }
    let rep = **orbit
        .iter()
        .min_by(|a, b| arg_0_2pi(a.x_star).partial_cmp(&arg_0_2pi(b.x_star)).unwrap())
        .unwrap();
    if !rep.simple {
        return Err(Error::NoDominantOrbit("dominant point is not simple".into()));
    }
    let kappa = sheet_kappa(p, &rep, cfg.probe_h)?;
    let mut dd = DominantData {
        s,
        rho_star: rho,
        representative: rep,
        orbit_size: orbit.len(),
        separation,
        phi: zs.arg(),
        kappa,
        rho_hat: est.rho,
        exponent_hat: est.exponent,
        amplitudes: BTreeMap::new(),
    };
    for &q in p_list {
        let a = dd.amplitude(q);
        dd.amplitudes.insert(q, a);
    }
    Ok(dd)
}

/// Fix the sign of `κ` by evaluating the Taylor sheet at `x_*(1-h)`.
pub fn sheet_kappa(p: &ParamPoint, cp: &CharPoint, h: f64) -> Result<Complex64> {
    let u = sheet_value(p, cp.x_star * (1.0 - h))?;
    let ratio = (u - cp.lambda) / (cp.kappa * h.sqrt());
    if (ratio - 1.0).norm() < 0.05 {
        Ok(cp.kappa)
    } else if (ratio + 1.0).norm() < 0.05 {
        Ok(-cp.kappa)
    } else {
        Err(Error::NoDominantOrbit(format!(
            "sheet probe inconsistent with a square-root point (ratio {ratio})"
        )))
    }
}

/// Newton tracking of a characteristic point between nearby parameters.
pub fn track_char(p: &ParamPoint, from: &CharPoint) -> Result<CharPoint> {
    let (x, lam) = newton_char(p, from.x_star, from.lambda)?;
    Ok(CharPoint::from_solution(p, x, lam))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub order: usize,
    /// Maximal relative jump of `x_*` accepted between neighbouring parameters.
    pub jump_max: f64,
    pub max_depth: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { order: 300, jump_max: 0.1, max_depth: 24 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuedPoint {
    pub t: f64,
    pub point: CharPoint,
    pub rho_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub points: Vec<ContinuedPoint>,
    /// Grid intervals on which `ρ_* - 1` changes sign.
    pub crossings: Vec<(f64, f64)>,
}

fn continue_step<F>(path: &F, from: &CharPoint, t0: f64, t1: f64, opts: &ContinuationOptions, depth: usize) -> Result<CharPoint>
where
    F: Fn(f64) -> Result<ParamPoint>,
{
    let p = path(t1)?;
    if let Ok(cp) = track_char(&p, from) {
        if (cp.x_star - from.x_star).norm() <= opts.jump_max * from.modulus {
            return Ok(cp);
        }
    }
    if depth >= opts.max_depth {
        return Err(Error::BranchJump { t: t1 });
    }
    let tm = 0.5 * (t0 + t1);
    let mid = continue_step(path, from, t0, tm, opts, depth + 1)?;
    continue_step(path, &mid, tm, t1, opts, depth + 1)
}

/// Continue the dominant representative along `ζ(t)` over `t_grid`.
pub fn continue_critical<F>(path: F, t_grid: &[f64], opts: &ContinuationOptions) -> Result<Continuation>
where
    F: Fn(f64) -> Result<ParamPoint>,
{
    let Some(&t0) = t_grid.first() else {
        return Ok(Continuation { points: Vec::new(), crossings: Vec::new() });
    };
    let dom = dominant_data(&path(t0)?, opts.order)?;
    let mut pts = vec![ContinuedPoint { t: t0, point: dom.representative, rho_star: dom.rho_star }];
    for w in t_grid.windows(2) {
        let prev = pts.last().unwrap().point;
        let cp = continue_step(&path, &prev, w[0], w[1], opts, 0)?;
        pts.push(ContinuedPoint { t: w[1], point: cp, rho_star: cp.modulus });
    }
    let crossings = pts
        .windows(2)
        .filter(|w| (w[0].rho_star - 1.0) * (w[1].rho_star - 1.0) <= 0.0 && w[0].rho_star != w[1].rho_star)
        .map(|w| (w[0].t, w[1].t))
        .collect();
    Ok(Continuation { points: pts, crossings })
}

/// Critical parameter and data where the continued `ρ_*` crosses 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t_c: f64,
    pub point: CharPoint,
}

/// Locate `ρ_*(ζ(t)) = 1` on `[t_lo, t_hi]` (dominant at `t_lo`) by
/// continuation on a coarse grid followed by Illinois regula falsi.
pub fn find_critical<F>(path: F, t_lo: f64, t_hi: f64, opts: &ContinuationOptions) -> Result<Crossing>
where
    F: Fn(f64) -> Result<ParamPoint>,
{
    let n = 32;
    let grid: Vec<f64> = (0..=n).map(|i| t_lo + (t_hi - t_lo) * i as f64 / n as f64).collect();
    let cont = continue_critical(&path, &grid, opts)?;
    let &(a, b) = cont
        .crossings
        .first()
        .ok_or_else(|| Error::NotBracketed(format!("ρ_* - 1 keeps its sign on [{t_lo}, {t_hi}]")))?;
    let ia = cont.points.iter().position(|c| c.t == a).unwrap();
    let (mut ta, mut pa) = (a, cont.points[ia].point);
    let (mut tb, mut pb) = (b, cont.points[ia + 1].point);
    let (mut ga, mut gb) = (pa.modulus - 1.0, pb.modulus - 1.0);
    if ga == 0.0 {
        return Ok(Crossing { t_c: ta, point: pa });
    }
    if gb == 0.0 {
        return Ok(Crossing { t_c: tb, point: pb });
    }
    let mut side = 0i32;
    for _ in 0..200 {
        let tm = (ta * gb - tb * ga) / (gb - ga);
        let tm = if tm > ta.min(tb) && tm < ta.max(tb) { tm } else { 0.5 * (ta + tb) };
        let pm = continue_step(&path, &pa, ta, tm, opts, 0)?;
        let gm = pm.modulus - 1.0;
        if gm == 0.0 || (tb - ta).abs() <= 4.0 * f64::EPSILON * tm.abs().max(1e-300) {
            return Ok(Crossing { t_c: tm, point: pm });
        }
        if gm * ga < 0.0 {
            tb = tm;
            pb = pm;
            gb = gm;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            ta = tm;
            pa = pm;
            ga = gm;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
        if gm.abs() < 1e-15 {
            return Ok(Crossing { t_c: tm, point: pm });
        }
    }
    let _ = pb;
    Ok(Crossing { t_c: 0.5 * (ta + tb), point: pa })
}
