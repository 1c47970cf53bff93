use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toda_spectra::branch::dominant_data;
use toda_spectra::hessian::{
    admissibility, eigen, gram_block, gram_block_with, kernel_hessian_oracle, mode_gram_vectors, GramMethod,
    HermitianMatrix, RenormConfig,
};
use toda_spectra::series::{powers_table, taylor_branch};
use toda_spectra::{Error, Leaf, ParamPoint};

fn pt(e: &[u32], z: &[Complex64]) -> ParamPoint {
    ParamPoint::new(Leaf::new(e.to_vec()).unwrap(), z.to_vec()).unwrap()
}

#[test]
fn kernel_equals_mode_gram_for_complex_parameters() {
    let p = pt(&[2, 4], &[Complex64::new(0.08, 0.05), Complex64::new(-0.01, 0.02)]);
    let h = kernel_hessian_oracle(&p, 16);
    assert!(h.asymmetry() < 1e-14 * h.frobenius());
    for q in 1..=2usize {
        let j_max = (16 - q) / 2;
        let v = mode_gram_vectors(&p, q as u32, j_max, j_max + 1);
        for j1 in 0..=j_max {
            for j2 in 0..=j_max {
                let g: Complex64 = v.iter().map(|w| w[j1] * w[j2].conj()).sum();
                let k = h.get(q + 2 * j1 - 1, q + 2 * j2 - 1);
                assert!((g - k).norm() <= 1e-10 * k.norm().max(1e-300), "q={q} ({j1},{j2})");
            }
        }
        for m in 1..=16 {
            for n in 1..=16 {
                if (m + n) % 2 == 1 {
                    assert!(h.get(m - 1, n - 1).norm() <= 1e-12 * h.frobenius());
                }
            }
        }
    }
}

#[allow(clippy::needless_range_loop)]
/// `G_{j1 j2} = (p1 p2)^{-1/2} Σ_n n² conj([x^n] V^{p1}) [x^n] V^{p2}` with `V = xU`.
fn brute_gram(p: &ParamPoint, q: u32, j_max: usize, terms: usize) -> Vec<Vec<Complex64>> {
    let s = p.leaf.s();
    let u = taylor_branch(p, terms + j_max + 1);
    let pmax = (q + j_max as u32 * s) as usize;
    let pw = powers_table(&u, pmax, 1.0).unwrap();
    let r = |pp: u32, n: u32| -> Complex64 {
        if n < pp || !(n - pp).is_multiple_of(s) {
            return Complex64::default();
        }
        pw[pp as usize - 1].unscaled(((n - pp) / s) as usize)
    };
    let mut g = vec![vec![Complex64::default(); j_max + 1]; j_max + 1];
    for j1 in 0..=j_max {
        for j2 in 0..=j_max {
            let (p1, p2) = (q + j1 as u32 * s, q + j2 as u32 * s);
            let mut acc = Complex64::default();
            for k in 0..terms as u32 {
                let n = q + k * s;
                acc += (n as f64).powi(2) * r(p1, n).conj() * r(p2, n);
            }
            g[j1][j2] = acc / ((p1 * p2) as f64).sqrt();
        }
    }
    g
}

#[allow(clippy::needless_range_loop)]
#[test]
fn tail_sum_gram_matches_brute_force() {
    let p = pt(&[3, 6], &[Complex64::new(0.08, 0.0), Complex64::new(0.01, 0.0)]);
    let cfg = RenormConfig { j_max: 6, method: GramMethod::TailSum, ..RenormConfig::default() };
    let g = gram_block(&p, &cfg, false).unwrap();
    let b = brute_gram(&p, 1, 6, 400);
    for j1 in 0..=6 {
        for j2 in 0..=6 {
            assert!((g.get(j1, j2) - b[j1][j2]).norm() <= 1e-11 * b[j1][j2].norm(), "({j1},{j2})");
        }
    }
    // weighted block = D^{-1} G D^{-1}, D = diag(p^{3/2+β} α^p)
    let gw = gram_block(&p, &cfg, true).unwrap();
    for j1 in 0..=6 {
        for j2 in 0..=6 {
            let (p1, p2) = (cfg.p(j1, 3), cfg.p(j2, 3));
            let scale = (-cfg.log_weight(p1) - cfg.log_weight(p2)).exp();
            let want = g.get(j1, j2) * scale;
            assert!((gw.get(j1, j2) - want).norm() <= 1e-12 * want.norm());
        }
    }
}

#[test]
fn contour_and_tail_sum_agree() {
    for (e, z) in [(vec![3u32, 6], vec![0.1, 0.01]), (vec![2], vec![0.2]), (vec![2, 4], vec![0.1, 0.02])] {
        let p = pt(&e, &z.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>());
        let dom = dominant_data(&p, 400).unwrap();
        for q in 1..=p.leaf.s() {
            let base = RenormConfig { j_max: 30, q, ..RenormConfig::default() };
            let a = gram_block_with(&p, &dom, &RenormConfig { method: GramMethod::TailSum, ..base }, true).unwrap();
            let b = gram_block_with(&p, &dom, &RenormConfig { method: GramMethod::Contour, ..base }, true).unwrap();
            let (ea, eb) = (eigen(&a).unwrap().values, eigen(&b).unwrap().values);
            for k in 0..5 {
                assert!((ea[k] - eb[k]).abs() <= 1e-9 * ea[0], "{e:?} q={q} k={k}: {} vs {}", ea[k], eb[k]);
            }
        }
    }
}

#[test]
fn fixed_short_tail_is_reported() {
    let p = pt(&[2], &[Complex64::new(0.24, 0.0)]);
    let cfg = RenormConfig { j_max: 10, tail_cutoff: Some(8), method: GramMethod::TailSum, ..RenormConfig::default() };
    assert!(matches!(gram_block(&p, &cfg, true), Err(Error::TailNotConverged { used: 8, .. })));
}

#[test]
fn config_errors_name_the_key() {
    let bad = |c: RenormConfig| match c.validate_for(3) {
        Err(Error::Config { key, .. }) => key,
        other => panic!("{other:?}"),
    };
    let d = RenormConfig::default();
    assert_eq!(bad(RenormConfig { alpha: 1.0, ..d }), "alpha");
    assert_eq!(bad(RenormConfig { beta: 0.0, ..d }), "beta");
    assert_eq!(bad(RenormConfig { j_max: 0, ..d }), "J");
    assert_eq!(bad(RenormConfig { q: 4, ..d }), "q");
    assert_eq!(bad(RenormConfig { tail_tol: 2.0, ..d }), "tail_tol");
    assert_eq!(bad(RenormConfig { j_max: 2000, ..d }), "J");
}

#[test]
fn admissibility_at_moderate_point() {
    let p = pt(&[3, 6], &[Complex64::new(0.1, 0.0), Complex64::new(0.01, 0.0)]);
    let dom = dominant_data(&p, 400).unwrap();
    let a = admissibility(&p, &dom, 2.0).unwrap();
    assert!(a.ok && a.m0 >= 1.0 && a.m0 < 2.0);
    assert!((a.l0 - dom.lambda().norm()).abs() < 1e-15);
}

#[test]
fn jacobi_on_random_hermitian_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [1usize, 2, 5, 17, 40] {
        let h = HermitianMatrix::from_upper(n, |i, j| {
            let re: f64 = rng.random_range(-1.0..1.0);
            if i == j {
                Complex64::new(re, 0.0)
            } else {
                Complex64::new(re, rng.random_range(-1.0..1.0))
            }
        });
        let e = eigen(&h).unwrap();
        let trace: f64 = (0..n).map(|i| h.get(i, i).re).sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-12 * n as f64);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for (lam, v) in e.values.iter().zip(&e.vectors) {
            let hv = h.matvec(v);
            let res: f64 = hv.iter().zip(v).map(|(a, b)| (a - b * lam).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-12 * (1.0 + lam.abs()) * n as f64, "n={n}: {res}");
        }
        for a in 0..n {
            for b in 0..n {
                let ip: Complex64 = e.vectors[a].iter().zip(&e.vectors[b]).map(|(x, y)| x.conj() * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn jacobi_keeps_graded_eigenvalues() {
    // diag(1, 1e-8, 1e-16) conjugated by a rotation in the last two coordinates
    let d = [1.0, 1e-8, 1e-16];
    let (c, s) = (0.6f64, 0.8f64);
    let m = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
    let h = HermitianMatrix::from_upper(3, |i, j| Complex64::new((0..3).map(|k| m[i][k] * d[k] * m[j][k]).sum(), 0.0));
    let e = eigen(&h).unwrap();
    assert!((e.values[1] - 1e-8).abs() < 1e-20);
}
