//! Taylor branch of `U = 1 + Σ ζ_n x^{s_n} U^{s_n}` and its power tables.
//!
//! Series are stored in the collapsed variable `z = x^s`; coefficient `m`
//! multiplies `x^{ms}`.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exponent set `2 <= s_1 < ... < s_N` with symmetry index `s = gcd(s_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Leaf {
    exponents: Vec<u32>,
    s: u32,
}

impl Leaf {
    pub fn new(exponents: Vec<u32>) -> Result<Leaf> {
        if exponents.is_empty() {
            return Err(Error::InvalidLeaf("empty exponent set".into()));
        }
        if exponents[0] < 2 {
            return Err(Error::InvalidLeaf(format!("exponent {} < 2", exponents[0])));
        }
        if exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLeaf(format!(
                "exponents {exponents:?} not strictly increasing"
            )));
        }
        let s = exponents.iter().fold(0, |g, &e| gcd(g, e));
        Ok(Leaf { exponents, s })
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Symmetry index `s`.
    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `k_n = s_n / s`, the exponents in the collapsed variable.
    pub fn reduced(&self) -> Vec<usize> {
        self.exponents.iter().map(|&e| (e / self.s) as usize).collect()
    }
}

impl TryFrom<Vec<u32>> for Leaf {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Leaf> {
        Leaf::new(v)
    }
}

impl From<Leaf> for Vec<u32> {
    fn from(l: Leaf) -> Vec<u32> {
        l.exponents
    }
}

/// Reduced parameters `ζ_n = a_n / r` on a leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub leaf: Leaf,
    pub zeta: Vec<Complex64>,
    /// Conformal radius, only meaningful for Laplacian growth.
    pub r: Option<f64>,
}

impl ParamPoint {
    pub fn new(leaf: Leaf, zeta: Vec<Complex64>) -> Result<ParamPoint> {
        if zeta.len() != leaf.len() {
            return Err(Error::InvalidParameter(format!(
                "{} parameters for {} exponents",
                zeta.len(),
                leaf.len()
            )));
        }
        if zeta.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite ζ".into()));
        }
        Ok(ParamPoint { leaf, zeta, r: None })
    }

    pub fn real(leaf: Leaf, zeta: &[f64]) -> Result<ParamPoint> {
        ParamPoint::new(leaf, zeta.iter().map(|&z| Complex64::new(z, 0.0)).collect())
    }

    pub fn with_radius(mut self, r: f64) -> Result<ParamPoint> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
        }
        self.r = Some(r);
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.zeta.iter().all(|z| z.norm() == 0.0)
    }

    /// `φ(v) = 1 + Σ ζ_n v^{s_n}`, so that `V = xU` solves `V = x φ(V)`.
    pub fn phi(&self, v: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (z, &e) in self.zeta.iter().zip(self.leaf.exponents()) {
            acc += z * v.powu(e);
        }
        acc
    }

    /// `φ'(v)`.
    pub fn dphi(&self, v: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (z, &e) in self.zeta.iter().zip(self.leaf.exponents()) {
            acc += z * (e as f64) * v.powu(e - 1);
        }
        acc
    }
}

/// Truncated series in `x^s`; the represented coefficients are
/// `coeffs[m] * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub coeffs: Vec<Complex64>,
    pub log_scale: f64,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<Complex64>) -> PowerSeries {
        PowerSeries { coeffs, log_scale: 0.0 }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Stored (scaled) coefficient.
    pub fn coeff(&self, m: usize) -> Complex64 {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    /// Coefficient with the scale factor applied.
    pub fn unscaled(&self, m: usize) -> Complex64 {
        self.coeff(m) * self.log_scale.exp()
    }

    /// Truncated product, keeping the order of `self`.
    pub fn mul_truncated(&self, other: &PowerSeries) -> PowerSeries {
        let n = self.coeffs.len();
        let mut out = vec![Complex64::default(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == Complex64::default() {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(n - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        PowerSeries { coeffs: out, log_scale: self.log_scale + other.log_scale }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::default();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * self.log_scale.exp()
    }
}

/// Order-by-order substitution for `U = 1 + Σ ζ_n t^{shift_n} U^{e_n}`.
///
/// All powers `U^k`, `k <= max e_n`, are carried along; every term is a
/// plain convolution, so there is no cancellation for positive `ζ`.
fn substitute(zeta: &[Complex64], shifts: &[usize], powers: &[u32], order: usize) -> Vec<Complex64> {
    let kmax = powers.iter().copied().max().unwrap_or(1) as usize;
    let zero = Complex64::default();
    // pw[k-1][m] = [t^m] U^k
    let mut pw: Vec<Vec<Complex64>> = vec![Vec::with_capacity(order + 1); kmax];
    let mut u = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let um = if m == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            let mut acc = zero;
            for ((z, &sh), &e) in zeta.iter().zip(shifts).zip(powers) {
                if m >= sh {
                    acc += z * pw[e as usize - 1][m - sh];
                }
            }
            acc
        };
        u.push(um);
        pw[0].push(um);
        for k in 1..kmax {
            let (lo, hi) = pw.split_at_mut(k);
            let prev = &lo[k - 1];
            let mut acc = zero;
            for i in 0..=m {
                acc += u[i] * prev[m - i];
            }
            hi[0].push(acc);
        }
    }
    u
}

/// Taylor branch coefficients `u_m = [x^{ms}] U` through order `M`.
pub fn taylor_branch(p: &ParamPoint, order: usize) -> PowerSeries {
    let shifts = p.leaf.reduced();
    PowerSeries::new(substitute(&p.zeta, &shifts, p.leaf.exponents(), order))
}

/// Same recursion on the uncollapsed `x` grid; coefficient `n` multiplies
/// `x^n`. Only used to check the `s`-symmetry.
pub fn taylor_branch_full(p: &ParamPoint, order: usize) -> Vec<Complex64> {
    let shifts: Vec<usize> = p.leaf.exponents().iter().map(|&e| e as usize).collect();
    substitute(&p.zeta, &shifts, p.leaf.exponents(), order)
}

/// `(U/α)^p` for `p = 1..=p_max`; entry `p-1` holds `r̂_p(m) = R_p(m)/α^p`
/// with `log_scale = p ln α`.
pub fn powers_table(u: &PowerSeries, p_max: usize, alpha: f64) -> Result<Vec<PowerSeries>> {
    if p_max < 1 {
        return Err(Error::InvalidParameter("p_max must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale {alpha} must be positive")));
    }
    let base = PowerSeries {
        coeffs: u.coeffs.iter().map(|c| c / alpha).collect(),
        log_scale: u.log_scale + alpha.ln(),
    };
    let mut out = Vec::with_capacity(p_max);
    out.push(base.clone());
    for _ in 1..p_max {
        let next = out.last().unwrap().mul_truncated(&base);
        out.push(next);
    }
    Ok(out)
}

/// Coefficients of `U - 1 - Σ ζ_n x^{s_n} U^{s_n}` through the order of `u`,
/// with powers formed by independent repeated multiplication.
pub fn functional_residual(p: &ParamPoint, u: &PowerSeries) -> Vec<Complex64> {
    let mut res: Vec<Complex64> = u.coeffs.clone();
    res[0] -= 1.0;
    let n = u.coeffs.len();
    for ((z, &e), k) in p.zeta.iter().zip(p.leaf.exponents()).zip(p.leaf.reduced()) {
        let mut pw = u.clone();
        for _ in 1..e {
            pw = pw.mul_truncated(u);
        }
        for (r, c) in res[k..n].iter_mut().zip(&pw.coeffs) {
            *r -= z * c;
        }
    }
    res
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Raney number `R_{s,p}(m) = p/(sm+p) C(sm+p, m)`, exact.
pub fn raney_oracle(s: u64, p: u64, m: u64) -> Result<BigRational> {
    if s < 2 || p < 1 {
        return Err(Error::InvalidParameter(format!("raney needs s >= 2, p >= 1 (got {s}, {p})")));
    }
    let n = s * m + p;
    let num = BigUint::from(p) * binomial(n, m);
    let r = BigRational::new(num.into(), BigUint::from(n).into());
    debug_assert!(!r.is_zero() || m > 0);
    Ok(r)
}

/// `R_{s,p}(m)` rounded to `f64` (may be `inf` for huge values).
pub fn raney_f64(s: u64, p: u64, m: u64) -> Result<f64> {
    let r = raney_oracle(s, p, m)?;
    Ok(r.to_f64().unwrap_or(f64::INFINITY))
}
