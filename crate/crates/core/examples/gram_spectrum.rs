//! Kernel Hessian against mode Gram sums, then one renormalized block spectrum.

use toda_spectra::branch::dominant_data;
use toda_spectra::hessian::{kernel_hessian_oracle, mode_gram_vectors, RenormConfig};
use toda_spectra::spectral::block_spectrum;
use toda_spectra::{Leaf, ParamPoint, Result};

/// Returns `(max relative Gram-kernel mismatch, μ_1)`.
pub fn run_example() -> Result<(f64, f64)> {
    let p = ParamPoint::real(Leaf::new(vec![3, 6])?, &[0.08, 0.01])?;
    let h = kernel_hessian_oracle(&p, 20);
    let mut worst = 0.0f64;
    for q in 1..=3u32 {
        let j_max = ((20 - q) / 3) as usize;
        let v = mode_gram_vectors(&p, q, j_max, j_max + 1);
        for j1 in 0..=j_max {
            for j2 in 0..=j_max {
                let g: num_complex::Complex64 = v.iter().map(|w| w[j1] * w[j2].conj()).sum();
                let k = h.get(q as usize - 1 + 3 * j1, q as usize - 1 + 3 * j2);
                worst = worst.max((g - k).norm() / k.norm().max(1e-300));
            }
        }
    }
    println!("Gram vs kernel, m, n <= 20: max relative deviation {worst:.3e}");
    let dom = dominant_data(&p, 400)?;
    let cfg = RenormConfig::new(1.0, 2.0, 40, 1)?;
    let b = block_spectrum(&p, &dom, &cfg, None, f64::NAN, 5)?;
    println!("eps = {:.4e}, L = {:.4}, Gamma = {:.4e}", b.epsilon, b.l, b.gamma);
    println!("mu = {:?}", b.mu);
    println!("||C|| = {:.4e}, sandwich holds: {}", b.c_norm, b.sandwich_holds());
    Ok((worst, b.mu[0]))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
