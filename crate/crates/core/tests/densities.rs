use std::f64::consts::{PI, SQRT_2};

use levy_kac::densities::{QUARTIC_C_S, TAIL_FIT_RESIDUAL};
use levy_kac::quad::adaptive_real;
use levy_kac::{estimate_tail_law, h_of, moments, nu_f, skew_fractions, DensityModel, Error};

fn registry() -> Vec<DensityModel> {
    vec![
        DensityModel::gauss(),
        DensityModel::quartic(),
        DensityModel::power_tail(1.2).unwrap(),
        DensityModel::power_tail(1.5).unwrap(),
        DensityModel::power_tail(1.8).unwrap(),
        DensityModel::mixture(0.3).unwrap(),
        DensityModel::mixture(0.05).unwrap(),
    ]
}

#[test]
fn quartic_point_values() {
    let q = DensityModel::quartic();
    assert!((q.eval(0.0) - 0.450_158_158).abs() < 1e-8);
    assert!((DensityModel::gauss().eval(0.0) - 0.398_942_280).abs() < 1e-8);
    let h = h_of(&q);
    assert!((h.eval(1.0) - SQRT_2 / (2.0 * PI)).abs() < 1e-15);
    assert_eq!(h.eval(-1.0), 0.0);
}

#[test]
fn quartic_integrals_match_closed_form() {
    // ∫ dx/(1+x⁴) = ∫ x² dx/(1+x⁴) = π/√2, computed independently by adaptive quadrature
    // on [0,1] plus the substitution x = 1/t on [1, ∞).
    let a = adaptive_real(|x| 1.0 / (1.0 + x.powi(4)), 0.0, 1.0, 1e-15, 1e-15).unwrap().0;
    let b = adaptive_real(|t| t * t / (1.0 + t.powi(4)), 0.0, 1.0, 1e-15, 1e-15).unwrap().0;
    assert!((2.0 * (a + b) - PI / SQRT_2).abs() < 1e-13);
    let m = moments(&DensityModel::quartic()).unwrap();
    assert!((m.mass - 1.0).abs() < 1e-8, "mass {}", m.mass);
    assert!((m.second_moment - 1.0).abs() < 1e-8, "second {}", m.second_moment);
    assert!(m.fourth_moment.is_infinite());
    assert_eq!(m.e, m.second_moment);
}

#[test]
fn registered_models_are_normalised() {
    for m in registry() {
        let s = moments(&m).unwrap();
        assert!((s.mass - 1.0).abs() < 1e-8, "{} mass {}", m.name(), s.mass);
        assert!((s.second_moment - 1.0).abs() < 1e-8, "{} E {}", m.name(), s.second_moment);
        assert!(s.mean.abs() < 1e-10);
        assert_eq!(s.fourth_moment.is_infinite(), m.analytic_tail().is_some());
    }
    let g = moments(&DensityModel::gauss()).unwrap();
    assert!((g.fourth_moment.value().unwrap() - 3.0).abs() < 1e-10);
}

#[test]
fn fourth_moment_quadrature_diverges_for_heavy_tails() {
    let q = DensityModel::quartic();
    let windows: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&x| nu_f(&q, x)).collect();
    assert!(windows[0] < windows[1] && windows[1] < windows[2]);
    assert!(windows[2] > 5.0 * windows[1]);
}

#[test]
fn squared_law_preserves_mass_and_maps_energy_to_mean() {
    for m in registry() {
        let h = h_of(&m);
        let mass = h.expect(|_| 1.0).unwrap();
        let mean = h.expect(|u| u).unwrap();
        let e = moments(&m).unwrap().second_moment;
        assert!((mass - 1.0).abs() < 1e-8, "{}", m.name());
        assert!((mean - e).abs() < 1e-8, "{} mean {mean} vs {e}", m.name());
        assert!(!h.is_unit_energy());
    }
}

#[test]
fn squared_gauss_is_chi_square_one() {
    let h = h_of(&DensityModel::gauss());
    for &u in &[0.1, 1.0, 3.7] {
        let want = (-u / 2.0_f64).exp() / (2.0 * PI * u).sqrt();
        assert!((h.eval(u) - want).abs() < 1e-15);
    }
}

#[test]
fn nu_f_limits() {
    let g = DensityModel::gauss();
    assert!((nu_f(&g, 1e4) - 3.0).abs() < 1e-12);
    assert!(nu_f(&g, 1e-8) < 1e-15);
    // Oracle: globally adaptive Gauss–Kronrod on [0, 1000], doubled.
    let q = DensityModel::quartic();
    let direct = 2.0 * adaptive_real(|y| y.powi(4) * q.eval(y), 0.0, 1e3, 1e-10, 1e-14).unwrap().0;
    let ratio = nu_f(&q, 1e6) / 1e3;
    assert!((direct / 1e3 - ratio).abs() < 1e-6);
    assert!((ratio / QUARTIC_C_S - 1.0).abs() < 2e-3, "{ratio}");
}

#[test]
fn nu_f_is_nondecreasing() {
    for m in registry() {
        let mut last = 0.0;
        for k in 0..40 {
            let x = 10f64.powf(-3.0 + 0.25 * k as f64);
            let v = nu_f(&m, x);
            assert!(v >= last - 1e-12, "{} at {x}", m.name());
            last = v;
        }
    }
}

#[test]
fn tail_fit_on_quartic() {
    let t = estimate_tail_law(&DensityModel::quartic(), 1e4, 1e8, 24).unwrap();
    assert!((1.45..=1.55).contains(&t.alpha), "{}", t.alpha);
    assert!((t.c_s / QUARTIC_C_S - 1.0).abs() < 0.05, "{}", t.c_s);
    assert!(t.residual <= TAIL_FIT_RESIDUAL);
    assert_eq!((t.p, t.q), (1.0, 0.0));
}

#[test]
fn tail_fit_recovers_power_tail_exponents() {
    for &a in &[1.2, 1.5, 1.8] {
        let t = estimate_tail_law(&DensityModel::power_tail(a).unwrap(), 1e4, 1e8, 24).unwrap();
        assert!((t.alpha - a).abs() <= 0.05, "alpha {a}: fitted {}", t.alpha);
    }
}

#[test]
fn tail_fit_rejects_gauss() {
    let r = estimate_tail_law(&DensityModel::gauss(), 1e4, 1e8, 24);
    assert!(matches!(r, Err(Error::NotRegularlyVarying { .. })), "{r:?}");
    assert!(matches!(
        estimate_tail_law(&DensityModel::quartic(), 1e4, 1e8, 4),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn skew_fraction_cases() {
    assert_eq!(skew_fractions(&h_of(&DensityModel::quartic()), 1e4).unwrap(), (1.0, 0.0));
    assert_eq!(skew_fractions(&h_of(&DensityModel::gauss()), 100.0).unwrap(), (1.0, 0.0));
    for &x in &[0.5, 3.0, 100.0] {
        let (p, q) = skew_fractions(&DensityModel::gauss(), x).unwrap();
        assert!((p - 0.5).abs() < 1e-12 && (q - 0.5).abs() < 1e-12, "{x}: {p} {q}");
    }
    let boxed = DensityModel::custom("box", |x: f64| if x.abs() <= 1.0 { 0.5 } else { 0.0 }, false);
    assert!(matches!(skew_fractions(&boxed, 2.0), Err(Error::DegenerateTail { .. })));
}
