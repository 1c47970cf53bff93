//! Taylor branch of a one-mode leaf against the exact Raney numbers.

use toda_spectra::series::{functional_residual, powers_table, raney_f64, taylor_branch};
use toda_spectra::{Leaf, ParamPoint, Result};

/// Largest relative deviation of `R_p(m; ζ)` from `R_{s,p}(m) ζ^m`.
pub fn run_example() -> Result<f64> {
    let zeta = 0.2;
    let p = ParamPoint::real(Leaf::new(vec![3])?, &[zeta])?;
    let u = taylor_branch(&p, 30);
    let table = powers_table(&u, 10, 1.0)?;
    let mut worst = 0.0f64;
    for (i, series) in table.iter().enumerate() {
        let pp = i as u64 + 1;
        for m in 0..=30u64 {
            let exact = raney_f64(3, pp, m)? * zeta.powi(m as i32);
            let got = series.unscaled(m as usize).re;
            worst = worst.max(((got - exact) / exact).abs());
        }
    }
    let res = functional_residual(&p, &u).iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!("U(x) = 1 + {:.6} x^3 + {:.6} x^6 + ...", u.coeff(1).re, u.coeff(2).re);
    println!("max relative Raney deviation (p <= 10, m <= 30): {worst:.3e}");
    println!("functional residual: {res:.3e}");
    Ok(worst)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
