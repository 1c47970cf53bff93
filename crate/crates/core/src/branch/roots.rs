//! Simultaneous polynomial root finding (Aberth–Ehrlich).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Evaluate `Σ c_k z^k` and its derivative.
pub fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::default();
    let mut dp = Complex64::default();
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of `Σ c_k z^k` (coefficients in ascending order).
///
/// Trailing zero coefficients are dropped; zero roots are not expected
/// (the constant term of the characteristic polynomial is 1).
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut deg = coeffs.len().saturating_sub(1);
    while deg > 0 && coeffs[deg].norm() == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let c = &coeffs[..=deg];
    let lead = c[deg];
    // Cauchy-type bounds on the root moduli.
    let upper = 1.0 + c[..deg].iter().map(|a| (a / lead).norm()).fold(0.0, f64::max);
    let lower = if c[0].norm() > 0.0 {
        let inv = c[1..].iter().map(|a| (a / c[0]).norm()).fold(0.0, f64::max);
        1.0 / (1.0 + inv)
    } else {
        0.0
    };
    let radius = (lower * upper).sqrt().max(1e-3);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4;
            Complex64::from_polar(radius, th)
        })
        .collect();

    let mut converged = false;
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let (p, dp) = horner(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut sum = Complex64::default();
            for j in 0..deg {
                if j != i {
                    sum += 1.0 / (z[i] - z[j]);
                }
            }
            let step = ratio / (1.0 - ratio * sum);
            z[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        // Accept if residuals are at roundoff level anyway.
        let scale: f64 = c.iter().map(|a| a.norm()).sum();
        let ok = z.iter().all(|&r| {
            let (p, _) = horner(c, r);
            p.norm() <= 1e-10 * scale * (1.0 + r.norm()).powi(deg as i32)
        });
        if !ok {
            return Err(Error::NoConvergence {
                what: "polynomial roots",
                detail: format!("degree {deg}, 500 Aberth sweeps"),
            });
        }
    }
    // Newton polish.
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(c, *r);
            if dp.norm() == 0.0 {
                break;
            }
            *r -= p / dp;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_roots() {
        // (z-1)(z+2) = z^2 + z - 2
        let c = [Complex64::new(-2.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let mut r = poly_roots(&c).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn roots_of_unity() {
        let mut c = vec![Complex64::default(); 7];
        c[0] = Complex64::new(-1.0, 0.0);
        c[6] = Complex64::new(1.0, 0.0);
        let r = poly_roots(&c).unwrap();
        for z in r {
            assert!((z.powu(6) - 1.0).norm() < 1e-13);
        }
    }
}
