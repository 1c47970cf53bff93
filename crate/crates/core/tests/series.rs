use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

use toda_spectra::series::{functional_residual, powers_table, raney_oracle, taylor_branch, taylor_branch_full};
use toda_spectra::{Error, Leaf, ParamPoint};

#[test]
fn leaf_validation() {
    assert!(matches!(Leaf::new(vec![]), Err(Error::InvalidLeaf(_))));
    assert!(matches!(Leaf::new(vec![1, 3]), Err(Error::InvalidLeaf(_))));
    assert!(matches!(Leaf::new(vec![4, 3]), Err(Error::InvalidLeaf(_))));
    assert_eq!(Leaf::new(vec![3, 6]).unwrap().s(), 3);
    assert_eq!(Leaf::new(vec![2, 3]).unwrap().s(), 1);
    assert_eq!(Leaf::new(vec![4, 6, 10]).unwrap().reduced(), vec![2, 3, 5]);
}

#[test]
fn param_point_checks_length() {
    let leaf = Leaf::new(vec![3, 6]).unwrap();
    assert!(ParamPoint::real(leaf.clone(), &[0.1]).is_err());
    assert!(ParamPoint::real(leaf, &[0.1, f64::NAN]).is_err());
}

#[test]
fn raney_small_values() {
    // s = 2, p = 1: Catalan numbers
    let cat = [1u64, 1, 2, 5, 14, 42, 132];
    for (m, &c) in cat.iter().enumerate() {
        assert_eq!(raney_oracle(2, 1, m as u64).unwrap(), BigRational::from_integer(c.into()));
    }
    // s = 3, p = 1: 1, 1, 3, 12, 55
    for (m, &c) in [1u64, 1, 3, 12, 55].iter().enumerate() {
        assert_eq!(raney_oracle(3, 1, m as u64).unwrap(), BigRational::from_integer(c.into()));
    }
    assert!(raney_oracle(1, 1, 3).is_err());
}

#[test]
fn catalan_branch_closed_form() {
    // U = (1 - sqrt(1 - 4ζx²)) / (2ζx²) on {2}
    let p = ParamPoint::real(Leaf::new(vec![2]).unwrap(), &[0.2]).unwrap();
    let u = taylor_branch(&p, 60);
    let x = Complex64::new(0.7, 0.3);
    let t = 0.2 * x * x;
    let exact = (1.0 - (1.0 - 4.0 * t).sqrt()) / (2.0 * t);
    assert!((u.eval(x * x) - exact).norm() < 1e-12);
}

#[test]
fn functional_residual_vanishes() {
    let cases = [(vec![2u32], vec![0.2]), (vec![3, 6], vec![0.1, 0.01]), (vec![2, 3], vec![0.05, -0.03])];
    for (e, z) in cases {
        let p = ParamPoint::real(Leaf::new(e).unwrap(), &z).unwrap();
        let u = taylor_branch(&p, 120);
        let worst = functional_residual(&p, &u).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-13, "{worst}");
    }
}

#[test]
fn full_grid_has_s_symmetry() {
    let p = ParamPoint::real(Leaf::new(vec![3, 6]).unwrap(), &[0.1, 0.02]).unwrap();
    let full = taylor_branch_full(&p, 90);
    let coll = taylor_branch(&p, 30);
    for (n, c) in full.iter().enumerate() {
        if n % 3 == 0 {
            assert!((c - coll.coeff(n / 3)).norm() < 1e-15 * (1.0 + c.norm()));
        } else {
            assert_eq!(*c, Complex64::default());
        }
    }
}

#[test]
fn scaled_powers_match_unscaled() {
    let p = ParamPoint::real(Leaf::new(vec![2]).unwrap(), &[0.15]).unwrap();
    let u = taylor_branch(&p, 40);
    let a = powers_table(&u, 6, 1.0).unwrap();
    let b = powers_table(&u, 6, 3.0).unwrap();
    for pp in 0..6 {
        for m in 0..=40 {
            let (x, y) = (a[pp].unscaled(m), b[pp].unscaled(m));
            assert!((x - y).norm() <= 1e-13 * x.norm().max(1e-300), "p={} m={m}", pp + 1);
        }
    }
    assert!(powers_table(&u, 0, 1.0).is_err());
    assert!(powers_table(&u, 2, -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn one_mode_coefficients_are_raney(s in 2u32..5, zeta in 0.01f64..0.2, p in 1usize..8) {
        let pt = ParamPoint::real(Leaf::new(vec![s]).unwrap(), &[zeta]).unwrap();
        let u = taylor_branch(&pt, 25);
        let pw = powers_table(&u, p, 1.0).unwrap();
        for m in 0..=25u64 {
            let want = toda_spectra::series::raney_f64(s as u64, p as u64, m).unwrap() * zeta.powi(m as i32);
            let got = pw[p - 1].unscaled(m as usize).re;
            prop_assert!((got - want).abs() <= 1e-12 * want.abs());
        }
    }

    #[test]
    fn rotation_covariance(theta in 0.0f64..std::f64::consts::TAU, r in 0.01f64..0.1) {
        // ζ → ζ e^{iθ} rescales u_m by e^{imθ} on a one-mode leaf
        let leaf = Leaf::new(vec![3]).unwrap();
        let a = taylor_branch(&ParamPoint::real(leaf.clone(), &[r]).unwrap(), 30);
        let b = taylor_branch(&ParamPoint::new(leaf, vec![Complex64::from_polar(r, theta)]).unwrap(), 30);
        for m in 0..=30 {
            let want = a.coeff(m) * Complex64::from_polar(1.0, m as f64 * theta);
            prop_assert!((b.coeff(m) - want).norm() <= 1e-12 * a.coeff(m).norm());
        }
    }
}
