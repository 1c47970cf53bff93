//! Single-pole and single-log leaves: closed forms, series radii, γ_c.

use toda_spectra::leaves::{
    gamma_c_solve, log_germ_radius, log_rho_char, pole_germ_radius, pole_rho_char, LogLeafPoint, PoleLeafPoint,
};
use toda_spectra::Result;

/// Returns the recomputed `γ_c`.
pub fn run_example() -> Result<f64> {
    for (b, c) in [(0.0, 0.16), (0.3, 0.1), (-0.4, 0.05)] {
        let p = PoleLeafPoint::real(b, c)?;
        println!(
            "pole b = {b:5.2}, c = {c:.2}: rho_char = {:.8}, germ radius = {:.8}",
            pole_rho_char(&p)?.rho,
            pole_germ_radius(&p, 1000)?
        );
    }
    for b in [0.1, 0.19, 0.21, 0.6] {
        let p = LogLeafPoint::new(b, 0.05)?;
        let c = log_rho_char(&p)?;
        println!(
            "log b = {b:.2}, gamma = 0.05: |x+| = {:.8}, |x-| = {:.8}, pair = {}, germ radius = {:.8}",
            c.x_plus.norm(),
            c.x_minus.norm(),
            c.conjugate_pair,
            log_germ_radius(&p, 800)?
        );
    }
    let g = gamma_c_solve(1e-6)?;
    println!("gamma_c = {:.8} ({})", g.gamma_c, g.status);
    Ok(g.gamma_c)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
