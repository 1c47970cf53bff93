//! Pointwise evaluation of the Taylor sheet of `U` by path continuation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::ParamPoint;

/// `G(U) = U - 1 - Σ ζ_n x^{s_n} U^{s_n}` together with `∂_U G` and `∂_x G`.
pub(crate) fn equation(p: &ParamPoint, x: Complex64, u: Complex64) -> (Complex64, Complex64, Complex64) {
    let mut g = u - 1.0;
    let mut gu = Complex64::new(1.0, 0.0);
    let mut gx = Complex64::default();
    for (z, &e) in p.zeta.iter().zip(p.leaf.exponents()) {
        let ef = e as f64;
        let xe1 = x.powu(e - 1);
        let ue1 = u.powu(e - 1);
        let t = z * xe1 * x * ue1 * u;
        g -= t;
        gu -= z * ef * xe1 * x * ue1;
        gx -= z * ef * xe1 * ue1 * u;
    }
    (g, gu, gx)
}

/// Follows `U` along a polyline in the `x`-plane, starting at `U(0) = 1`.
#[derive(Debug, Clone)]
pub struct SheetTracker<'a> {
    p: &'a ParamPoint,
    x: Complex64,
    u: Complex64,
}

impl<'a> SheetTracker<'a> {
    pub fn new(p: &'a ParamPoint) -> Self {
        SheetTracker { p, x: Complex64::default(), u: Complex64::new(1.0, 0.0) }
    }

    /// Resume from a known point of the sheet.
    pub fn at(p: &'a ParamPoint, x: Complex64, u: Complex64) -> Self {
        SheetTracker { p, x, u }
    }

    pub fn x(&self) -> Complex64 {
        self.x
    }

    pub fn u(&self) -> Complex64 {
        self.u
    }

    fn try_step(&self, x1: Complex64) -> Option<Complex64> {
        let (_, gu, gx) = equation(self.p, self.x, self.u);
        if gu.norm() == 0.0 {
            return None;
        }
        let pred = self.u - gx / gu * (x1 - self.x);
        let mut u = pred;
        for it in 0..8 {
            let (g, gu, _) = equation(self.p, x1, u);
            if gu.norm() == 0.0 || !g.re.is_finite() {
                return None;
            }
            let du = g / gu;
            u -= du;
            // Roundoff in G is amplified by 1/|G_U| near a branch point.
            if du.norm() <= 4e-15 * (1.0 + u.norm()) / gu.norm().min(1.0) {
                let moved = (pred - self.u).norm();
                if it > 5 || (u - pred).norm() > 0.25 * moved + 1e-13 * (1.0 + u.norm()) {
                    return None;
                }
                return Some(u);
            }
        }
        None
    }

    /// Continue along the straight segment to `target` and return `U(target)`.
    pub fn advance_to(&mut self, target: Complex64) -> Result<Complex64> {
        let mut stack = vec![target];
        let mut budget = 200_000usize;
        while let Some(&x1) = stack.last() {
            if budget == 0 {
                return Err(Error::NoConvergence {
                    what: "sheet continuation",
                    detail: format!("step budget exhausted near x = {}", self.x),
                });
            }
            budget -= 1;
            match self.try_step(x1) {
                Some(u) => {
                    self.x = x1;
                    self.u = u;
                    stack.pop();
                }
                None => {
                    let mid = (self.x + x1) * 0.5;
                    if (mid - self.x).norm() < 1e-15 * (1.0 + self.x.norm()) {
                        return Err(Error::NoConvergence {
                            what: "sheet continuation",
                            detail: format!("step underflow near x = {}", self.x),
                        });
                    }
                    stack.push(mid);
                }
            }
        }
        Ok(self.u)
    }
}

/// `U(x)` on the Taylor sheet, continued along the ray from the origin.
pub fn sheet_value(p: &ParamPoint, x: Complex64) -> Result<Complex64> {
    SheetTracker::new(p).advance_to(x)
}

/// Values of `U` at `x_n = radius · e^{iθ_n}`, `θ_n = θ_0 + n·dθ`, for `n < count`,
/// continued along the ray to the first node and then along the arc.
pub fn sheet_on_arc(p: &ParamPoint, radius: f64, theta0: f64, dtheta: f64, count: usize) -> Result<Vec<Complex64>> {
    let mut tr = SheetTracker::new(p);
    let mut out = Vec::with_capacity(count);
    tr.advance_to(Complex64::from_polar(radius, theta0))?;
    out.push(tr.u());
    for n in 1..count {
        let x = Complex64::from_polar(radius, theta0 + n as f64 * dtheta);
        out.push(tr.advance_to(x)?);
    }
    Ok(out)
}
