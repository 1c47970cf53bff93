use num_complex::Complex64;

use toda_spectra::growth::{
    detect_thresholds, evolve, harmonic_moments, states_at, univalence_margin, GrowthOptions, Outcome, TrajectoryState,
};
use toda_spectra::{Error, Leaf};

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

#[test]
fn area_moment_closed_form() {
    // f = r w + a w^{1-s}: t_0 = r² - (s-1) a²
    for (s, a) in [(2u32, 0.05), (2, 0.3), (3, 0.1), (3, 0.2), (4, 0.1)] {
        let leaf = Leaf::new(vec![s]).unwrap();
        let m = harmonic_moments(1.3, &[c(a)], &leaf, &[s], 512).unwrap();
        let want = 1.3f64.powi(2) - (s - 1) as f64 * a * a;
        assert!((m.t0 - want).abs() < 1e-12, "s={s}: {} vs {want}", m.t0);
    }
}

#[test]
fn circle_has_no_exterior_moments() {
    let leaf = Leaf::new(vec![2, 3]).unwrap();
    let m = harmonic_moments(2.0, &[c(0.0), c(0.0)], &leaf, &[1, 2, 3], 256).unwrap();
    assert!((m.t0 - 4.0).abs() < 1e-12);
    for (_, v) in &m.tk {
        assert!(v.norm() < 1e-14);
    }
}

#[test]
fn coarse_quadrature_is_flagged() {
    let leaf = Leaf::new(vec![3]).unwrap();
    let r = harmonic_moments(1.0, &[c(0.3)], &leaf, &[3], 8);
    assert!(matches!(r, Err(Error::QuadratureNotConverged { n: 8, .. })));
    assert!(harmonic_moments(1.0, &[c(0.3), c(0.1)], &leaf, &[3], 64).is_err());
}

#[test]
fn univalence_margin_one_mode() {
    // min |f'| on |w| = 1 is r - (s-1)|a|, negative past the cusp
    let leaf = Leaf::new(vec![3]).unwrap();
    assert!((univalence_margin(1.0, &[c(0.2)], &leaf) - 0.6).abs() < 1e-6);
    assert!((univalence_margin(1.0, &[c(0.0)], &leaf) - 1.0).abs() < 1e-12);
    assert!(univalence_margin(1.0, &[c(0.6)], &leaf) < 0.0);
}

#[test]
fn initial_state_validation() {
    let leaf = Leaf::new(vec![2]).unwrap();
    let o = GrowthOptions::default();
    assert!(TrajectoryState::new(&leaf, -1.0, vec![c(0.0)], &o).is_err());
    assert!(TrajectoryState::new(&leaf, 1.0, vec![Complex64::new(0.1, 0.1)], &o).is_err());
    let l3 = Leaf::new(vec![3]).unwrap();
    assert!(matches!(TrajectoryState::new(&l3, 1.0, vec![c(0.6)], &o), Err(Error::UnivalenceLost { .. })));
}

#[test]
fn circle_baseline() {
    let leaf = Leaf::new(vec![3]).unwrap();
    let o = GrowthOptions::default();
    let st = TrajectoryState::new(&leaf, 1.0, vec![c(0.0)], &o).unwrap();
    let tr = evolve(&leaf, &st, 0.5, 40, &o).unwrap();
    assert_eq!(tr.outcome, Outcome::Completed);
    for s in &tr.states {
        assert!((s.r - (1.0 + s.t).sqrt()).abs() < 1e-9);
        assert!(s.a[0].norm() < 1e-12);
    }
}

#[test]
fn one_mode_conservation() {
    let leaf = Leaf::new(vec![2]).unwrap();
    let o = GrowthOptions::default();
    let st = TrajectoryState::new(&leaf, 1.0, vec![c(0.05)], &o).unwrap();
    let tr = evolve(&leaf, &st, 0.1, 100, &o).unwrap().into_result().unwrap();
    let t2 = st.moments.get(2).unwrap();
    for s in &tr {
        assert!((s.moments.get(2).unwrap() - t2).norm() < 1e-8 * (1.0 + t2.norm()));
        assert!((s.moments.t0 - (st.moments.t0 + s.t)).abs() < 1e-8 * (1.0 + s.t));
    }
    // on {2} the reduced parameter a/r does not move
    let z0 = st.a[0].re / st.r;
    let last = tr.last().unwrap();
    assert!((last.a[0].re / last.r - z0).abs() < 1e-9);
    assert!((last.t - 10.0).abs() < 1e-12 && last.r > 3.0);
}

#[test]
fn states_at_matches_marching() {
    let leaf = Leaf::new(vec![3]).unwrap();
    let o = GrowthOptions::default();
    let st = TrajectoryState::new(&leaf, 1.0, vec![c(0.05)], &o).unwrap();
    let at = states_at(&leaf, &st, &[2.0, 0.5, 1.0], 0.25, &o).unwrap();
    let tr = evolve(&leaf, &st, 0.25, 8, &o).unwrap().into_result().unwrap();
    assert!((at[0].r - tr[8].r).abs() < 1e-9 && (at[0].a[0] - tr[8].a[0]).norm() < 1e-9);
    assert!((at[1].t - 0.5).abs() < 1e-15 && (at[2].t - 1.0).abs() < 1e-15);
}

#[test]
fn three_fold_thresholds_are_ordered() {
    let leaf = Leaf::new(vec![3]).unwrap();
    let o = GrowthOptions::default();
    let st = TrajectoryState::new(&leaf, 1.0, vec![c(0.05)], &o).unwrap();
    let th = detect_thresholds(&leaf, &st, 0.25, 60.0, &o).unwrap();
    let tc = th.t_c.expect("T_c reached");
    assert!((tc - 7.398782188).abs() < 1e-6, "{tc}");
    assert!((th.rho_at_tc.unwrap() - 1.0).abs() < 1e-6);
    assert!(th.margin_at_tc.unwrap() > 0.0 && th.separation_verdict == Some(true));
    let tu = th.t_univ.expect("cusp reached");
    assert!(tu > tc && (tu - 49.005).abs() < 1e-3, "{tu}");
    // reduced parameter at T_c is the one-mode critical value 4/27
    let s = th.state_at_tc.unwrap();
    assert!((s.a[0].re / s.r - 4.0 / 27.0).abs() < 1e-9);
}

#[test]
fn thresholds_need_positive_step() {
    let leaf = Leaf::new(vec![3]).unwrap();
    let o = GrowthOptions::default();
    let st = TrajectoryState::new(&leaf, 1.0, vec![c(0.05)], &o).unwrap();
    assert!(detect_thresholds(&leaf, &st, 0.0, 1.0, &o).is_err());
}
