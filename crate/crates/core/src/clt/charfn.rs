use num_complex::Complex64;

use crate::densities::DensityModel;
use crate::quad::{self, filon_from_coefficients, legendre_coefficients};

/// `max_x ∫₀^x cos t² dt`, attained at `x = √(π/2)`.
pub const FRESNEL_C_MAX: f64 = 0.977_451_424_291_329_7;
/// `max_x ∫₀^x sin t² dt`, attained at `x = √π`.
pub const FRESNEL_S_MAX: f64 = 0.894_831_469_484_144_9;

const ORDER: usize = 24;
/// Remainders of the oscillatory tail below this are dropped.
const TAIL_EPS: f64 = 1e-17;

/// Characteristic function of the squared variable, `ĥ(ξ) = ∫ f(v) e^{iξv²} dv`,
/// for the generator `f` of `model` (a squared-variable law is resolved to its
/// generator).
///
/// Near the origin the integral is taken in `v`, on panels short enough that
/// the phase `ξv²` turns by at most π on each. Beyond `v₁ = min(1, √(2π/ξ))`
/// the substitution `u = v²` leaves `∫ h(u) e^{iξu} du` with a smooth,
/// non-oscillating `h`; that part is integrated on dyadic panels whose
/// amplitude is expanded in Legendre polynomials and integrated exactly
/// against the exponential.
pub fn charfn_h(model: &DensityModel, xi: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if xi < 0.0 {
        return charfn_h(model, -xi).conj();
    }
    let f = model.generator();
    let even = |v: f64| f.eval(v) + f.eval(-v);
    let rule = quad::gauss_legendre(ORDER);

    let v1 = (2.0 * std::f64::consts::PI / xi).sqrt().min(1.0);
    let mut total = Complex64::new(0.0, 0.0);
    let first = 4;
    for k in 0..first {
        let a = v1 * k as f64 / first as f64;
        let b = v1 * (k + 1) as f64 / first as f64;
        let turns = (xi * (b * b - a * a) / std::f64::consts::PI).ceil().max(1.0) as usize;
        let step = (b - a) / turns as f64;
        for j in 0..turns {
            let lo = a + j as f64 * step;
            total += rule.integrate_complex(lo, lo + step, |v| {
                Complex64::from_polar(even(v), xi * v * v)
            });
        }
    }

    // ∫_{u₁}^∞ h(u) e^{iξu} du with h(u) = (f(√u) + f(−√u)) / (2√u).
    let h = |u: f64| {
        let r = u.sqrt();
        even(r) / (2.0 * r)
    };
    let mut a = v1 * v1;
    let mut amp = vec![Complex64::new(0.0, 0.0); ORDER];
    for _ in 0..200 {
        let b = 2.0 * a;
        for (slot, (u, _)) in amp.iter_mut().zip(rule.on(a, b)) {
            *slot = Complex64::new(h(u), 0.0);
        }
        total += filon_from_coefficients(&legendre_coefficients(&rule, &amp), a, b, xi);
        a = b;
        let hb = h(b);
        // Second mean value bound for a decreasing amplitude, and the plain mass bound.
        if (2.0 * hb / xi).min(b * hb) < TAIL_EPS {
            break;
        }
    }
    total
}

/// Constant `B` in `|ĥ(ξ)| ≤ B ξ^{-1/2}`, valid when `v ↦ f(v) + f(−v)` is
/// nonincreasing on `[0, ∞)`: by the second mean value theorem the real and
/// imaginary parts are at most `2f_e(0) ξ^{-1/2}` times the Fresnel maxima.
pub fn decay_constant(model: &DensityModel) -> Option<f64> {
    let f = model.generator();
    if !f.is_unimodal() {
        return None;
    }
    let f0 = f.eval(0.0);
    Some(2.0 * f0 * FRESNEL_C_MAX.hypot(FRESNEL_S_MAX))
}

/// Characteristic-function values on a frequency set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub abs_tol: f64,
}

/// Accuracy the oscillatory quadrature in [`charfn_h`] is built for.
pub const CHARFN_ABS_TOL: f64 = 1e-11;

/// Samples `ĥ` on `freqs` (sorted on return).
pub fn spectral_sample(model: &DensityModel, freqs: &[f64]) -> SpectralSample {
    let mut freqs = freqs.to_vec();
    freqs.sort_by(f64::total_cmp);
    let values = freqs.iter().map(|&x| charfn_h(model, x)).collect();
    SpectralSample { freqs, values, abs_tol: CHARFN_ABS_TOL }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresnel_maxima() {
        let rule = quad::gauss_legendre(40);
        let c = rule.integrate(0.0, (std::f64::consts::PI / 2.0).sqrt(), |t| (t * t).cos());
        let s = rule.integrate(0.0, std::f64::consts::PI.sqrt(), |t| (t * t).sin());
        assert!((c - FRESNEL_C_MAX).abs() < 1e-15);
        assert!((s - FRESNEL_S_MAX).abs() < 1e-15);
    }

    #[test]
    fn chi_square_one() {
        let g = DensityModel::gauss();
        for &xi in &[1e-5, 0.3, 1.0, 5.0, 120.0, 1000.0] {
            let want = Complex64::new(1.0, -2.0 * xi).powf(-0.5);
            let got = charfn_h(&g, xi);
            assert!((got - want).norm() < 1e-12, "xi={xi}: {got} vs {want}");
        }
    }
}
