//! Laplacian growth of exterior maps `f(w) = r w + Σ a_n w^{1-s_n}` through
//! conservation of harmonic moments, with detection of the spectral critical
//! time `T_c` and the univalence threshold `T_univ`.
//!
//! Moment convention: `t_0 = (1/2πi) ∮ z̄ dz = Area/π` and
//! `t_k = (1/2πik) ∮ z^{-k} z̄ dz` on the image of `|w| = 1`.
//! For one mode `t_s = conj(a) r^{1-s} / s`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::branch::{dominant_data, poly_roots, track_char, CharPoint};
use crate::error::{Error, Result};
use crate::series::{Leaf, ParamPoint};
use crate::spectral::{scan_path, ScanOptions, ScanRecord};
use crate::hessian::RenormConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    pub t0: f64,
    /// `(k, t_k)` for the active set.
    pub tk: Vec<(u32, Complex64)>,
}

impl Moments {
    pub fn get(&self, k: u32) -> Option<Complex64> {
        self.tk.iter().find(|(kk, _)| *kk == k).map(|x| x.1)
    }
}

fn moments_at(r: f64, a: &[Complex64], leaf: &Leaf, k_set: &[u32], n: usize) -> (Complex64, Vec<Complex64>) {
    let mut t0 = Complex64::default();
    let mut tk = vec![Complex64::default(); k_set.len()];
    for j in 0..n {
        let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        let winv = w.conj();
        let mut z = w * r;
        let mut fp = Complex64::new(r, 0.0);
        for (an, &e) in a.iter().zip(leaf.exponents()) {
            let wm = winv.powu(e); // w^{-s_n}
            z += an * wm * w;
            fp += an * (1.0 - e as f64) * wm;
        }
        let base = z.conj() * fp * w;
        t0 += base;
        let zinv = 1.0 / z;
        for (acc, &k) in tk.iter_mut().zip(k_set) {
            *acc += base * zinv.powu(k);
        }
    }
    let nf = n as f64;
    (t0 / nf, tk.iter().zip(k_set).map(|(t, &k)| t / (nf * k as f64)).collect())
}

/// `t_0` and `t_k`, `k ∈ k_set`, by the trapezoid rule with `n_quad` nodes,
/// checked against `2 n_quad` nodes.
pub fn harmonic_moments(r: f64, a: &[Complex64], leaf: &Leaf, k_set: &[u32], n_quad: usize) -> Result<Moments> {
    if a.len() != leaf.len() {
        return Err(Error::InvalidParameter(format!("{} coefficients for {} exponents", a.len(), leaf.len())));
    }
    let (t0, tk) = moments_at(r, a, leaf, k_set, n_quad);
    let (t0b, tkb) = moments_at(r, a, leaf, k_set, 2 * n_quad);
    let mut change = (t0 - t0b).norm() / (1.0 + t0b.norm());
    for (x, y) in tk.iter().zip(&tkb) {
        change = change.max((x - y).norm() / (1.0 + y.norm()));
    }
    if change > 1e-10 {
        return Err(Error::QuadratureNotConverged { n: n_quad, change });
    }
    Ok(Moments { t0: t0b.re, tk: k_set.iter().copied().zip(tkb).collect() })
}

/// Signed univalence margin: `min_{|w|=1} |f'(w)|`, negative when `f'` has a
/// zero outside the closed unit disk.
pub fn univalence_margin(r: f64, a: &[Complex64], leaf: &Leaf) -> f64 {
    let fprime = |th: f64| {
        let winv = Complex64::from_polar(1.0, -th);
        let mut fp = Complex64::new(r, 0.0);
        for (an, &e) in a.iter().zip(leaf.exponents()) {
            fp += an * (1.0 - e as f64) * winv.powu(e);
        }
        fp.norm()
    };
    let n = 2048;
    let h = 2.0 * PI / n as f64;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..n {
        let v = fprime(i as f64 * h);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    // Golden section on the bracketing cell pair.
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((best_i as f64 - 1.0) * h, (best_i as f64 + 1.0) * h);
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    let (mut fc, mut fd) = (fprime(c), fprime(d));
    for _ in 0..60 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = fprime(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = fprime(d);
        }
    }
    let m = best.min(fc).min(fd);
    // w^{s_N} f'(w) = r w^{s_N} + Σ (1 - s_n) a_n w^{s_N - s_n}
    let sn = *leaf.exponents().last().unwrap() as usize;
    let mut poly = vec![Complex64::default(); sn + 1];
    poly[sn] = Complex64::new(r, 0.0);
    for (an, &e) in a.iter().zip(leaf.exponents()) {
        poly[sn - e as usize] += an * (1.0 - e as f64);
    }
    let outside = poly_roots(&poly)
        .map(|rs| rs.iter().any(|z| z.norm() > 1.0))
        .unwrap_or(false);
    if outside {
        -m
    } else {
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryState {
    #[serde(rename = "T")]
    pub t: f64,
    pub r: f64,
    pub a: Vec<Complex64>,
    pub moments: Moments,
    pub univalence_margin: f64,
}

impl TrajectoryState {
    pub fn new(leaf: &Leaf, r: f64, a: Vec<Complex64>, opts: &GrowthOptions) -> Result<TrajectoryState> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("r = {r} must be positive")));
        }
        if a.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidParameter("the growth solver works on the real-coefficient slice".into()));
        }
        let moments = harmonic_moments(r, &a, leaf, leaf.exponents(), opts.n_quad)?;
        let margin = univalence_margin(r, &a, leaf);
        if margin <= 0.0 {
            return Err(Error::UnivalenceLost { t: 0.0 });
        }
        Ok(TrajectoryState { t: 0.0, r, a, moments, univalence_margin: margin })
    }

    /// Reduced parameters `ζ_n = a_n / r` with the radius attached.
    pub fn param_point(&self, leaf: &Leaf) -> Result<ParamPoint> {
        ParamPoint::new(leaf.clone(), self.a.iter().map(|z| z / self.r).collect())?.with_radius(self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthOptions {
    pub n_quad: usize,
    pub cons_tol: f64,
    pub dt_min: f64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions { n_quad: 512, cons_tol: 1e-8, dt_min: 1e-9 }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Stalled { t: f64 },
    UnivalenceLost { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<TrajectoryState>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn into_result(self) -> Result<Vec<TrajectoryState>> {
        match self.outcome {
            Outcome::Completed => Ok(self.states),
            Outcome::Stalled { t } => Err(Error::TrajectoryStalled { t }),
            Outcome::UnivalenceLost { t } => Err(Error::UnivalenceLost { t }),
        }
    }
}

/// The conserved problem: unknowns `(r, a_1..a_N)` on the real slice.
#[derive(Debug, Clone)]
pub struct GrowthProblem {
    pub leaf: Leaf,
    /// `t_0` at `T = 0`.
    pub t0_start: f64,
    /// Conserved `t_{s_n}` (real parts).
    pub targets: Vec<f64>,
    pub opts: GrowthOptions,
}

impl GrowthProblem {
    pub fn new(leaf: &Leaf, initial: &TrajectoryState, opts: GrowthOptions) -> GrowthProblem {
        GrowthProblem {
            leaf: leaf.clone(),
            t0_start: initial.moments.t0 - initial.t,
            targets: initial.moments.tk.iter().map(|(_, v)| v.re).collect(),
            opts,
        }
    }

    fn residual(&self, y: &[f64], t: f64) -> Vec<f64> {
        let a: Vec<Complex64> = y[1..].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let (t0, tk) = moments_at(y[0], &a, &self.leaf, self.leaf.exponents(), self.opts.n_quad);
        let target0 = self.t0_start + t;
        let mut res = vec![(t0.re - target0) / (1.0 + target0.abs())];
        for (v, &g) in tk.iter().zip(&self.targets) {
            res.push((v.re - g) / (1.0 + g.abs()));
        }
        res
    }

    /// Newton solve for the state at time `t`, started from `guess`.
    pub fn solve(&self, guess: &[f64], t: f64) -> Option<Vec<f64>> {
        let n = guess.len();
        let mut y = guess.to_vec();
        for _ in 0..40 {
            let f = self.residual(&y, t);
            let fnorm = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if !fnorm.is_finite() {
                return None;
            }
            if fnorm < 1e-14 {
                return Some(y);
            }
            // Central-difference Jacobian.
            let mut jac = vec![vec![0.0; n]; n];
            for i in 0..n {
                let h = 1e-6 * y[i].abs().max(1e-3);
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[i] += h;
                ym[i] -= h;
                let fp = self.residual(&yp, t);
                let fm = self.residual(&ym, t);
                for k in 0..n {
                    jac[k][i] = (fp[k] - fm[k]) / (2.0 * h);
                }
            }
            let step = solve_dense(jac, f.iter().map(|v| -v).collect())?;
            // Damped update keeping r positive.
            let mut lam = 1.0;
            loop {
                let trial: Vec<f64> = y.iter().zip(&step).map(|(a, b)| a + lam * b).collect();
                if trial[0] > 0.0 {
                    let ft = self.residual(&trial, t);
                    let tn = ft.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    if tn < fnorm || tn < 1e-14 {
                        y = trial;
                        break;
                    }
                }
                lam *= 0.5;
                if lam < 1e-4 {
                    return None;
                }
            }
        }
        let f = self.residual(&y, t);
        if f.iter().all(|v| v.abs() < self.opts.cons_tol * 1e-3) {
            Some(y)
        } else {
            None
        }
    }

    /// Full state (moments recomputed with the convergence check) from unknowns.
    pub fn state(&self, y: &[f64], t: f64) -> Result<TrajectoryState> {
        let a: Vec<Complex64> = y[1..].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let moments = harmonic_moments(y[0], &a, &self.leaf, self.leaf.exponents(), self.opts.n_quad)?;
        let margin = univalence_margin(y[0], &a, &self.leaf);
        Ok(TrajectoryState { t, r: y[0], a, moments, univalence_margin: margin })
    }

    /// Advance from `from` to time `t`, halving the step on Newton failure.
    pub fn advance(&self, from: &TrajectoryState, prev: Option<&TrajectoryState>, t: f64) -> Result<TrajectoryState> {
        let mut cur: Vec<f64> = std::iter::once(from.r).chain(from.a.iter().map(|z| z.re)).collect();
        let mut slope: Option<Vec<f64>> = prev.filter(|p| p.t != from.t).map(|p| {
            let py: Vec<f64> = std::iter::once(p.r).chain(p.a.iter().map(|z| z.re)).collect();
            cur.iter().zip(&py).map(|(a, b)| (a - b) / (from.t - p.t)).collect()
        });
        if t < from.t {
            return Err(Error::InvalidParameter(format!("cannot advance backwards from T = {} to {t}", from.t)));
        }
        if t == from.t {
            return Ok(from.clone());
        }
        let mut tc = from.t;
        let mut h = t - from.t;
        while tc < t {
            let tn = if tc + h > t { t } else { tc + h };
            let guess: Vec<f64> = match &slope {
                Some(sl) => cur.iter().zip(sl).map(|(a, b)| a + b * (tn - tc)).collect(),
                None => cur.clone(),
            };
            match self.solve(&guess, tn).or_else(|| if slope.is_some() { self.solve(&cur, tn) } else { None }) {
                Some(y) => {
                    slope = Some(y.iter().zip(&cur).map(|(a, b)| (a - b) / (tn - tc)).collect());
                    cur = y;
                    tc = tn;
                    h *= 1.5;
                }
                None => {
                    h *= 0.5;
                    if h < self.opts.dt_min {
                        return Err(Error::TrajectoryStalled { t: tc });
                    }
                }
            }
        }
        self.state(&cur, t)
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (x, y) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                *x -= f * y;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Evolve `steps` steps of size `dT` at unit injection rate, conserving `t_{s_n}`.
pub fn evolve(leaf: &Leaf, initial: &TrajectoryState, dt: f64, steps: usize, opts: &GrowthOptions) -> Result<Trajectory> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!("dT = {dt} must be nonnegative")));
    }
    let prob = GrowthProblem::new(leaf, initial, *opts);
    let mut states = vec![initial.clone()];
    for k in 1..=steps {
        let t = initial.t + dt * k as f64;
        let n = states.len();
        let prev = if n >= 2 { Some(&states[n - 2]) } else { None };
        match prob.advance(&states[n - 1], prev, t) {
            Ok(st) => {
                let lost = st.univalence_margin <= 0.0;
                states.push(st);
                if lost {
                    return Ok(Trajectory { states, outcome: Outcome::UnivalenceLost { t } });
                }
            }
            Err(Error::TrajectoryStalled { t }) => return Ok(Trajectory { states, outcome: Outcome::Stalled { t } }),
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory { states, outcome: Outcome::Completed })
}

/// One marching sample used for threshold detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSample {
    #[serde(rename = "T")]
    pub t: f64,
    pub rho_star: Option<f64>,
    pub univalence_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    #[serde(rename = "T_c")]
    pub t_c: Option<f64>,
    #[serde(rename = "T_univ")]
    pub t_univ: Option<f64>,
    pub rho_at_tc: Option<f64>,
    #[serde(rename = "margin_at_Tc")]
    pub margin_at_tc: Option<f64>,
    /// `margin(T_c) > 0`, which forces `T_c < T_univ`.
    pub separation_verdict: Option<bool>,
    #[serde(skip)]
    pub state_at_tc: Option<TrajectoryState>,
    #[serde(skip)]
    pub samples: Vec<ThresholdSample>,
    #[serde(skip)]
    pub states: Vec<TrajectoryState>,
}

fn rho_of(leaf: &Leaf, st: &TrajectoryState, from: &CharPoint) -> Result<CharPoint> {
    let p = st.param_point(leaf)?;
    let cp = track_char(&p, from)?;
    if (cp.x_star - from.x_star).norm() > 0.1 * from.modulus {
        return Err(Error::BranchJump { t: st.t });
    }
    Ok(cp)
}

/// March the trajectory with step `dT` up to `t_max`, bracketing and bisecting
/// the first zero of `ρ_*(ζ(T)) - 1` and of the univalence margin.
pub fn detect_thresholds(leaf: &Leaf, initial: &TrajectoryState, dt: f64, t_max: f64, opts: &GrowthOptions) -> Result<Thresholds> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dT = {dt} must be positive")));
    }
    let prob = GrowthProblem::new(leaf, initial, *opts);
    let p0 = initial.param_point(leaf)?;
    let mut cp = if p0.is_zero() { None } else { Some(dominant_data(&p0, 300)?.representative) };
    let mut states = vec![initial.clone()];
    let mut samples = vec![ThresholdSample { t: initial.t, rho_star: cp.map(|c| c.modulus), univalence_margin: initial.univalence_margin }];
    let mut out = Thresholds {
        t_c: None,
        t_univ: None,
        rho_at_tc: None,
        margin_at_tc: None,
        separation_verdict: None,
        state_at_tc: None,
        samples: Vec::new(),
        states: Vec::new(),
    };
    let steps = ((t_max - initial.t) / dt).ceil() as usize;
    for k in 1..=steps {
        let t = (initial.t + dt * k as f64).min(t_max);
        let n = states.len();
        let prev_state = states[n - 1].clone();
        let prev = if n >= 2 { Some(states[n - 2].clone()) } else { None };
        let next = prob.advance(&prev_state, prev.as_ref(), t);
        let next = match next {
            Ok(st) if st.univalence_margin > 0.0 => st,
            Ok(_) | Err(Error::TrajectoryStalled { .. }) => {
                out.t_univ = Some(bisect_univalence(&prob, &prev_state, t)?);
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(c0) = cp {
            let c1 = rho_of(leaf, &next, &c0)?;
            if out.t_c.is_none() && (c0.modulus - 1.0) * (c1.modulus - 1.0) <= 0.0 && c1.modulus != c0.modulus {
                let (tc, st, cpc) = bisect_critical(leaf, &prob, &prev_state, &c0, t)?;
                out.t_c = Some(tc);
                out.rho_at_tc = Some(cpc.modulus);
                out.margin_at_tc = Some(st.univalence_margin);
                out.separation_verdict = Some(st.univalence_margin > 0.0);
                out.state_at_tc = Some(st);
            }
            cp = Some(c1);
        }
        samples.push(ThresholdSample { t, rho_star: cp.map(|c| c.modulus), univalence_margin: next.univalence_margin });
        states.push(next);
    }
    out.samples = samples;
    out.states = states;
    Ok(out)
}

fn bisect_critical(
    leaf: &Leaf,
    prob: &GrowthProblem,
    lo_state: &TrajectoryState,
    lo_cp: &CharPoint,
    t_hi: f64,
) -> Result<(f64, TrajectoryState, CharPoint)> {
    let mut lo = (lo_state.clone(), *lo_cp);
    let mut hi_t = t_hi;
    let sign_lo = lo_cp.modulus - 1.0;
    for _ in 0..80 {
        let tm = 0.5 * (lo.0.t + hi_t);
        let st = prob.advance(&lo.0, None, tm)?;
        let c = rho_of(leaf, &st, &lo.1)?;
        let g = c.modulus - 1.0;
        if g.abs() < 1e-12 || hi_t - lo.0.t < 1e-13 {
            return Ok((tm, st, c));
        }
        if g * sign_lo > 0.0 {
            lo = (st, c);
        } else {
            hi_t = tm;
        }
    }
    let st = lo.0;
    Ok((st.t, st, lo.1))
}

fn bisect_univalence(prob: &GrowthProblem, lo_state: &TrajectoryState, t_hi: f64) -> Result<f64> {
    let mut lo = lo_state.clone();
    let mut hi = t_hi;
    while hi - lo.t > 1e-7 {
        let tm = 0.5 * (lo.t + hi);
        match prob.advance(&lo, None, tm) {
            Ok(st) if st.univalence_margin > 0.0 => lo = st,
            Ok(_) | Err(Error::TrajectoryStalled { .. }) => hi = tm,
            Err(e) => return Err(e),
        }
    }
    Ok(0.5 * (lo.t + hi))
}

/// States at the requested times (ascending order is not required), obtained
/// by marching from `initial` with steps no longer than `dt`.
pub fn states_at(leaf: &Leaf, initial: &TrajectoryState, times: &[f64], dt: f64, opts: &GrowthOptions) -> Result<Vec<TrajectoryState>> {
    let prob = GrowthProblem::new(leaf, initial, *opts);
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&i, &j| times[i].partial_cmp(&times[j]).unwrap());
    let mut out: Vec<Option<TrajectoryState>> = vec![None; times.len()];
    let mut cur = initial.clone();
    let mut prev: Option<TrajectoryState> = None;
    for i in order {
        let target = times[i];
        while cur.t < target {
            let t = (cur.t + dt).min(target);
            let next = prob.advance(&cur, prev.as_ref(), t)?;
            prev = Some(std::mem::replace(&mut cur, next));
        }
        out[i] = Some(cur.clone());
    }
    Ok(out.into_iter().map(|s| s.unwrap()).collect())
}

/// Spectral scan along the trajectory at `T = T_c - τ`, `τ ∈ tau_grid`.
/// Records carry `δ = τ`.
#[allow(clippy::too_many_arguments)]
pub fn spectral_approach(
    leaf: &Leaf,
    initial: &TrajectoryState,
    t_c: f64,
    tau_grid: &[f64],
    dt: f64,
    cfg: &RenormConfig,
    q_list: &[u32],
    opts: &GrowthOptions,
    scan: &ScanOptions,
) -> Result<Vec<ScanRecord>> {
    let times: Vec<f64> = tau_grid.iter().map(|tau| t_c - tau).collect();
    let states = states_at(leaf, initial, &times, dt, opts)?;
    let mut table = BTreeMap::new();
    for (tau, st) in tau_grid.iter().zip(&states) {
        table.insert(tau.to_bits(), st.param_point(leaf)?);
    }
    let path = |tau: f64| {
        table
            .get(&tau.to_bits())
            .cloned()
            .ok_or_else(|| Error::InvalidParameter(format!("no trajectory state for τ = {tau}")))
    };
    Ok(scan_path(path, tau_grid, cfg, q_list, scan))
}
