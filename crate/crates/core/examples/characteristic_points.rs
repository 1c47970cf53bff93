//! Characteristic points, the dominant orbit and the critical one-mode parameters.

use toda_spectra::branch::{dominant_data, find_critical, solve_characteristic, ContinuationOptions};
use toda_spectra::{Leaf, ParamPoint, Result};

/// Critical `ζ_c` for `s = 2` and `s = 3`.
pub fn run_example() -> Result<Vec<f64>> {
    let p = ParamPoint::real(Leaf::new(vec![3, 6])?, &[0.1, 0.01])?;
    for c in solve_characteristic(&p)?.iter().take(4) {
        println!("x* = {:.6}  |x*| = {:.6}  lambda = {:.6}", c.x_star, c.modulus, c.lambda);
    }
    let dom = dominant_data(&p, 400)?;
    println!(
        "rho* = {:.10}, series estimate {:.10}, exponent {:.3}, orbit of {}",
        dom.rho_star, dom.rho_hat, dom.exponent_hat, dom.orbit_size
    );
    let mut out = Vec::new();
    for s in [2u32, 3] {
        let leaf = Leaf::new(vec![s])?;
        let cr = find_critical(move |t| ParamPoint::real(leaf.clone(), &[t]), 0.05, 0.4, &ContinuationOptions::default())?;
        println!("s = {s}: zeta_c = {:.12}, lambda_c = {:.12}", cr.t_c, cr.point.lambda.re);
        out.push(cr.t_c);
    }
    Ok(out)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
