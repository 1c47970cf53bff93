//! Approach scan on the leaf {3, 6} at ζ₂ = 0.01 with J = 70, α = 2, β = 1.

use toda_spectra::branch::{find_critical, ContinuationOptions};
use toda_spectra::hessian::RenormConfig;
use toda_spectra::spectral::{fit_log_scaling, log_grid, scan_path, ScanOptions};
use toda_spectra::{Leaf, ParamPoint, Result};

fn main() -> Result<()> {
    let leaf = Leaf::new(vec![3, 6])?;
    let l = leaf.clone();
    let crit = find_critical(move |t| ParamPoint::real(l.clone(), &[t, 0.01]), 0.05, 0.2, &ContinuationOptions::default())?;
    println!("zeta_1c = {:.12}", crit.t_c);
    let cfg = RenormConfig::new(1.0, 2.0, 70, 1)?;
    let grid = log_grid(1e-1, 1e-4, 13);
    let z1c = crit.t_c;
    let recs = scan_path(
        move |d| ParamPoint::real(leaf.clone(), &[z1c * (1.0 - d), 0.01]),
        &grid,
        &cfg,
        &[1, 2],
        &ScanOptions::default(),
    );
    println!("{:>10} {:>2} {:>10} {:>8} {:>11} {:>11} {:>11} {:>10}", "delta", "q", "eps", "L", "mu1", "mu2", "mu3", "c_norm");
    for r in &recs {
        match &r.outcome {
            Ok(b) => println!(
                "{:>10.3e} {:>2} {:>10.3e} {:>8.4} {:>11.4e} {:>11.4e} {:>11.4e} {:>10.4e}",
                r.delta, r.q, b.epsilon, b.l, b.mu[0], b.mu[1], b.mu[2], b.c_norm
            ),
            Err(e) => println!("{:>10.3e} {:>2} failed: {e}", r.delta, r.q),
        }
    }
    for q in [1, 2] {
        let f = fit_log_scaling(&recs, q, 0.1)?;
        println!(
            "q = {q}: mu1 vs log(1/delta), last decade: slope {:.4}, R^2 {:.6}; Gamma(delta_min) = {:.4}",
            f.fit_last_decade.slope, f.fit_last_decade.r2, f.gamma_limit
        );
    }
    Ok(())
}
