use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toda_spectra::leaves::{
    gamma_c_solve, gamma_c_solve_in, linspace, log_boundary_limit, log_germ, log_germ_radius, log_level_crossing,
    log_rho_char, log_x_of_u, phase_diagram, pole_discriminant, pole_germ, pole_germ_radius, pole_rho_char,
    principal_log, ExplicitMap, GridSpec, LeafKind, LogLeafPoint, PoleLeafPoint,
};
use toda_spectra::Error;

fn cz(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

#[test]
fn pole_formula_reference_points() {
    let p = PoleLeafPoint::real(0.0, 0.25).unwrap();
    assert!((pole_rho_char(&p).unwrap().rho - 1.0).abs() < 1e-15);
    let p = PoleLeafPoint::real(0.5, 0.04).unwrap();
    let pc = pole_rho_char(&p).unwrap();
    assert!((pc.x_plus - 1.0 / 0.9).norm() < 1e-14 && (pc.x_minus - 1.0 / 0.1).norm() < 1e-12);
    assert!(matches!(pole_rho_char(&PoleLeafPoint::real(0.4, 0.04).unwrap()), Err(Error::Degenerate(_))));
    assert!(PoleLeafPoint::real(1.0, 0.1).is_err() && PoleLeafPoint::real(0.1, 0.0).is_err());
}

#[test]
fn pole_series_matches_formula_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let b: f64 = rng.random_range(-0.8..0.8);
        let c = ((1.0 - b.abs()) / 2.0 * rng.random_range(0.3..0.95)).powi(2);
        let p = PoleLeafPoint::real(b, c).unwrap();
        let rho = pole_rho_char(&p).unwrap().rho;
        let est = pole_germ_radius(&p, 800).unwrap();
        assert!((est - rho).abs() <= 1e-3 * rho, "b={b} c={c}: {est} vs {rho}");
    }
}

#[test]
fn pole_characteristic_values_are_discriminant_zeros() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let b = Complex64::from_polar(rng.random_range(0.0..0.9), rng.random_range(0.0..std::f64::consts::TAU));
        let p = PoleLeafPoint::new(b, rng.random_range(0.01..0.5)).unwrap();
        let pc = pole_rho_char(&p).unwrap();
        for x in [pc.x_plus, pc.x_minus] {
            assert!(pole_discriminant(&p, x).norm() < 1e-12 * (1.0 + x.norm_sqr()));
        }
    }
}

#[test]
fn pole_germ_solves_inverse_relation() {
    // u = x (1 + c u²/(1 - b u)) with x = scale·y
    let p = PoleLeafPoint::real(0.3, 0.05).unwrap();
    let u = pole_germ(&p, 60, 1.0);
    let x = cz(0.2);
    let uv: Complex64 = u.iter().rev().fold(Complex64::default(), |acc, c| acc * x + c);
    let rhs = x * (1.0 + p.c * uv * uv / (1.0 - p.b * uv));
    assert!((uv - rhs).norm() < 1e-14);
}

#[test]
fn log_pair_is_conjugate_below_discriminant() {
    for gamma in [0.05, 0.1, 0.3] {
        for b in linspace(0.02, 0.98, 25) {
            if (b - 4.0 * gamma).abs() < 1e-3 {
                continue;
            }
            let lc = log_rho_char(&LogLeafPoint::new(b, gamma).unwrap()).unwrap();
            if b < 4.0 * gamma {
                assert!(lc.conjugate_pair && !lc.on_cut);
                assert!((lc.u_plus - lc.u_minus.conj()).norm() < 1e-14 * lc.u_plus.norm());
                assert!((lc.x_plus - lc.x_minus.conj()).norm() < 1e-12 * lc.x_plus.norm());
            } else {
                assert!(!lc.conjugate_pair && lc.on_cut);
                assert!((lc.x_plus.norm() - lc.x_minus.norm()).abs() > 1e-6);
            }
        }
    }
}

#[test]
fn log_characteristic_roots_and_series() {
    let p = LogLeafPoint::new(0.5, 0.3).unwrap();
    let lc = log_rho_char(&p).unwrap();
    for u in [lc.u_plus, lc.u_minus] {
        assert!((0.3 * 0.5 * u * u - 0.5 * u + 1.0).norm() < 1e-13);
    }
    // germ solves u = x (1 + γ u log(1 - b u))
    let g = log_germ(&p, 80, 1.0);
    let x = 0.3;
    let u: f64 = g.iter().rev().fold(0.0, |acc, c| acc * x + c);
    assert!((u - x * (1.0 + 0.3 * u * (1.0 - 0.5 * u).ln())).abs() < 1e-14);
    let (xu, cut) = log_x_of_u(&p, cz(u)).unwrap();
    assert!(!cut && (xu.re - x).abs() < 1e-14);
    // the coefficient estimate sees the same radius
    let est = log_germ_radius(&p, 600).unwrap();
    assert!((est - lc.rho).abs() < 1e-3 * lc.rho, "{est} vs {}", lc.rho);
}

#[test]
fn principal_log_cut_handling() {
    let (l, cut) = principal_log(0.5, cz(4.0)).unwrap();
    assert!(cut && (l - Complex64::new(0.0, std::f64::consts::PI)).norm() < 1e-15);
    assert!(matches!(principal_log(0.5, cz(2.0)), Err(Error::LogBranchCut { .. })));
    let (_, cut) = principal_log(0.5, Complex64::new(4.0, 0.1)).unwrap();
    assert!(!cut);
}

#[test]
fn gamma_c_threshold() {
    let g = gamma_c_solve(1e-6).unwrap();
    assert!((g.gamma_c - 0.2799674143).abs() < 1e-6, "{}", g.gamma_c);
    assert_eq!(g.status, "empirical principal-sheet threshold");
    assert!((log_boundary_limit(g.gamma_c) - 1.0).abs() < 1e-5);
    assert!(matches!(gamma_c_solve_in(0.3, 0.5, 1e-6), Err(Error::NotBracketed(_))));
    assert!(gamma_c_solve(1e-9).is_err());
    // below γ_c there is no interior crossing; above it there is one
    assert!(log_level_crossing(0.1).is_none());
    let b = log_level_crossing(0.4).unwrap();
    assert!((log_rho_char(&LogLeafPoint::new(b, 0.4).unwrap()).unwrap().rho - 1.0).abs() < 1e-9);
}

#[test]
fn pole_contour_follows_critical_curves() {
    let spec = GridSpec::linspace(LeafKind::Pole, (-0.95, 0.95, 39), (1e-4, 0.3, 60));
    let d = phase_diagram(&spec);
    assert_eq!(d.cells.len(), 39 * 60);
    assert_eq!(d.contour.len(), 39);
    for pt in &d.contour {
        let c = pt.y.unwrap();
        let want = ((1.0 - pt.b.abs()) / 2.0).powi(2);
        assert!((c - want).abs() < 1e-6, "b={}: {c} vs {want}", pt.b);
    }
    let apex = phase_diagram(&GridSpec { kind: LeafKind::Pole, b: vec![0.0], y: vec![0.2, 0.3] });
    assert!((apex.contour[0].y.unwrap() - 0.25).abs() < 1e-6);
}

#[test]
fn phase_diagram_records_cell_failures() {
    // c = b²/4 puts a characteristic value at infinity
    let d = phase_diagram(&GridSpec { kind: LeafKind::Pole, b: vec![0.4], y: vec![0.04, 0.1] });
    assert_eq!(d.cells[0].error_code, Some("degenerate"));
    assert!(d.cells[0].rho_char.is_none());
    assert!(d.cells[1].rho_char.is_some());
    let log = phase_diagram(&GridSpec { kind: LeafKind::Log, b: vec![1.5], y: vec![0.1] });
    assert_eq!(log.cells[0].error_code, Some("invalid_parameter"));
}

#[test]
fn empty_grid_gives_empty_diagram() {
    for kind in [LeafKind::Pole, LeafKind::Log] {
        let d = phase_diagram(&GridSpec { kind, b: vec![], y: vec![0.1] });
        assert!(d.cells.is_empty() && d.contour.is_empty());
        let d = phase_diagram(&GridSpec { kind, b: vec![0.1], y: vec![] });
        assert!(d.cells.is_empty());
    }
}

#[test]
fn explicit_map_residual_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut rc = |s: f64| Complex64::new(rng.random_range(-s..s), rng.random_range(-s..s));
    let maps = [
        ExplicitMap::MultiPole { r: 1.2, terms: vec![(rc(0.1), rc(0.5)), (rc(0.1), rc(0.5)), (rc(0.1), rc(0.5))] },
        ExplicitMap::MultiLog { r: 0.9, terms: vec![(rc(0.3), rc(0.5)), (rc(0.3), rc(0.5))] },
    ];
    for map in &maps {
        for _ in 0..20 {
            let u = rc(0.6);
            let a = map.char_residual(u) * map.r();
            let b = map.reduced_residual(u);
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
            // x'(u) = (1 + Ψ - uΨ') / (1 + Ψ)²
            let h = 1e-6;
            let fd = (map.x_of_u(u + h) - map.x_of_u(u - h)) / (2.0 * h);
            let want = map.char_residual(u) / (1.0 + map.psi(u)).powi(2);
            assert!((fd - want).norm() < 1e-7 * (1.0 + want.norm()));
        }
    }
}

#[test]
fn single_term_maps_reproduce_leaf_formulas() {
    let (b, c) = (0.3, 0.05);
    let pole = ExplicitMap::MultiPole { r: 1.0, terms: vec![(cz(c), cz(b))] };
    // u/(1 - b u) = 1/√c at the + value
    let t = 1.0 / c.sqrt();
    let u = cz(t / (1.0 + b * t));
    assert!(pole.reduced_residual(u).norm() < 1e-14);
    let pc = pole_rho_char(&PoleLeafPoint::real(b, c).unwrap()).unwrap();
    assert!((pole.x_of_u(u) - pc.x_plus).norm() < 1e-14);

    let (b, g) = (0.5, 0.3);
    let log = ExplicitMap::MultiLog { r: 1.0, terms: vec![(cz(g), cz(b))] };
    let p = LogLeafPoint::new(b, g).unwrap();
    let lc = log_rho_char(&p).unwrap();
    assert!(log.reduced_residual(lc.u_plus).norm() < 1e-13);
    assert!((log.x_of_u(lc.u_plus) - lc.x_plus).norm() < 1e-13);
}

#[test]
fn contour_through_degenerate_column() {
    // at |b| = 1/2 the curve |b| + 2√c = 1 meets c = b²/4
    let d = phase_diagram(&GridSpec { kind: LeafKind::Pole, b: vec![-0.5, 0.5], y: vec![0.01, 0.2] });
    for pt in &d.contour {
        assert!((pt.y.unwrap() - 0.0625).abs() < 1e-9);
    }
}
