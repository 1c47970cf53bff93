//! One-mode Laplacian growth: conservation, T_c, T_univ and the spectral approach.

use num_complex::Complex64;
use toda_spectra::growth::{detect_thresholds, evolve, spectral_approach, GrowthOptions, TrajectoryState};
use toda_spectra::hessian::RenormConfig;
use toda_spectra::spectral::{linear_fit, log_grid, ScanOptions};
use toda_spectra::{Leaf, Result};

fn main() -> Result<()> {
    let opts = GrowthOptions::default();
    let l2 = Leaf::new(vec![2])?;
    let st = TrajectoryState::new(&l2, 1.0, vec![Complex64::new(0.05, 0.0)], &opts)?;
    let traj = evolve(&l2, &st, 0.1, 100, &opts)?.into_result()?;
    let t2 = st.moments.get(2).unwrap().re;
    let drift = traj.iter().map(|s| (s.moments.get(2).unwrap().re - t2).abs()).fold(0.0, f64::max);
    let last = traj.last().unwrap();
    println!("{{2}}: T = {:.1}, zeta = {:.6}, t_2 drift {drift:.2e}", last.t, last.a[0].re / last.r);

    let l3 = Leaf::new(vec![3])?;
    let st = TrajectoryState::new(&l3, 1.0, vec![Complex64::new(0.05, 0.0)], &opts)?;
    let th = detect_thresholds(&l3, &st, 0.25, 60.0, &opts)?;
    println!(
        "{{3}}: T_c = {:?}, T_univ = {:?}, rho*(T_c) = {:?}, margin(T_c) = {:?}",
        th.t_c, th.t_univ, th.rho_at_tc, th.margin_at_tc
    );
    let Some(tc) = th.t_c else { return Ok(()) };
    let cfg = RenormConfig::new(1.0, 2.0, 70, 1)?;
    let taus = log_grid(1e-1, 1e-3, 7);
    let recs = spectral_approach(&l3, &st, tc, &taus, 0.25, &cfg, &[1], &opts, &ScanOptions::default())?;
    for r in &recs {
        if let Ok(b) = &r.outcome {
            println!("tau = {:.3e}: mu1 = {:.5}, L = {:.4}", r.delta, b.mu[0], b.l);
        }
    }
    let xs: Vec<f64> = taus.iter().map(|t| (1.0 / t).ln()).collect();
    let ys: Vec<f64> = recs.iter().filter_map(|r| r.outcome.as_ref().ok().map(|b| b.mu[0])).collect();
    if ys.len() == xs.len() {
        let f = linear_fit(&xs, &ys)?;
        println!("mu1 vs log(1/(T_c - T)): slope {:.4}, R^2 {:.6}", f.slope, f.r2);
    }
    Ok(())
}
