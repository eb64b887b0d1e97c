//! Stable laws with index in (1, 2): parameters, characteristic functions and
//! densities by Fourier inversion.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{self, filon_from_coefficients, legendre_coefficients};

/// Feller-type description of a stable source: amplitude, index and skew fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceLaw {
    pub c_s: f64,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

impl SourceLaw {
    pub fn new(c_s: f64, alpha: f64, p: f64, q: f64) -> Result<Self> {
        if !(c_s > 0.0) {
            return Err(Error::Parameter(format!("C_S must be positive, got {c_s}")));
        }
        check_alpha(alpha)?;
        if !(p >= 0.0 && q >= 0.0 && (p + q - 1.0).abs() < 1e-12) {
            return Err(Error::Parameter(format!("skew fractions must be >= 0 and sum to 1, got ({p}, {q})")));
        }
        Ok(Self { c_s, alpha, p, q })
    }
}

/// Parameters of `exp(−σ|ξ|^α (1 + iβ sgn(ξ) tan(πα/2)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("stable index alpha must lie in (1,2), got {alpha}")))
    }
}

impl StableParams {
    pub fn new(sigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
        }
        check_alpha(alpha)?;
        if !(beta.abs() <= 1.0) {
            return Err(Error::Parameter(format!("beta must lie in [-1,1], got {beta}")));
        }
        Ok(Self { sigma, alpha, beta })
    }

    /// Builds parameters without checking `sigma > 0`. Only meant for
    /// falsification runs, where downstream certificates are expected to fail.
    pub fn unchecked(sigma: f64, alpha: f64, beta: f64) -> Self {
        Self { sigma, alpha, beta }
    }

    pub fn tan_term(&self) -> f64 {
        (PI * self.alpha / 2.0).tan()
    }

    /// `σ (1 + iβ tan(πα/2))`, the exponent coefficient for `ξ > 0`.
    pub fn exponent_coefficient(&self) -> Complex64 {
        Complex64::new(self.sigma, self.sigma * self.beta * self.tan_term())
    }

    pub fn is_valid(&self) -> bool {
        Self::new(self.sigma, self.alpha, self.beta).is_ok()
    }
}

/// How the cosine factor in the scale formula is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CosineConvention {
    /// `|cos(πα/2)|`, giving a positive scale.
    #[default]
    Absolute,
    /// `cos(πα/2)` as written, negative on (1, 2).
    Literal,
}

/// `σ = C_S Γ(3−α) / (α(α−1)) |cos(πα/2)|`, `β = p − q`.
pub fn exponent_from_tail(src: &SourceLaw) -> StableParams {
    exponent_from_tail_with(src, CosineConvention::Absolute)
}

pub fn exponent_from_tail_with(src: &SourceLaw, convention: CosineConvention) -> StableParams {
    let a = src.alpha;
    let cos = (PI * a / 2.0).cos();
    let cos = match convention {
        CosineConvention::Absolute => cos.abs(),
        CosineConvention::Literal => cos,
    };
    let sigma = src.c_s * gamma(3.0 - a) / (a * (a - 1.0)) * cos;
    StableParams::unchecked(sigma, a, src.p - src.q)
}

pub fn charfn_stable(params: &StableParams, xi: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let c = params.exponent_coefficient();
    let c = if xi < 0.0 { c.conj() } else { c };
    (-c * xi.abs().powf(params.alpha)).exp()
}

/// Closed form of the density at the origin,
/// `Γ(1+1/α) / (π σ^{1/α}) · Re[(1 + iβ tan(πα/2))^{−1/α}]`.
pub fn stable_density_at_zero(params: &StableParams) -> f64 {
    let a = params.alpha;
    let z = Complex64::new(1.0, params.beta * params.tan_term()).powf(-1.0 / a);
    gamma(1.0 + 1.0 / a) / (PI * params.sigma.powf(1.0 / a)) * z.re
}

/// Number of Gauss–Legendre nodes per inversion panel.
const PANEL_ORDER: usize = 24;
/// Truncation level `σ ξ_max^α`.
pub const EXPONENT_CUTOFF: f64 = 40.0;

/// A stable density prepared for repeated evaluation.
///
/// The half-line `[0, ξ_max]` is split at levels of `s = σξ^α`: geometrically
/// for `s < 1` (the amplitude has a `ξ^α` cusp at the origin) and in unit steps
/// up to `s = 40`. On each panel the amplitude `exp(−σξ^α(1+iβ tan))` is stored
/// as Legendre coefficients, so each evaluation is an exact panel-wise
/// integration against `e^{iξx}`.
#[derive(Debug, Clone)]
pub struct StableDensity {
    params: StableParams,
    panels: Vec<(f64, f64, Vec<Complex64>)>,
    xi_max: f64,
}

impl StableDensity {
    pub fn new(params: StableParams) -> Result<Self> {
        check_alpha(params.alpha)?;
        if !(params.sigma > 0.0) {
            // exp(+|σ| ξ^α) grows without bound; the inversion integral diverges.
            return Err(Error::NonConvergence { residual: f64::INFINITY });
        }
        let a = params.alpha;
        let xi_of = |s: f64| (s / params.sigma).powf(1.0 / a);
        let mut levels: Vec<f64> = (1..=80).rev().map(|k| 0.5f64.powi(k)).collect();
        levels.extend((1..=EXPONENT_CUTOFF as usize).map(|k| k as f64));
        let rule = quad::gauss_legendre(PANEL_ORDER);
        let c = params.exponent_coefficient();
        let mut panels = Vec::with_capacity(levels.len());
        let mut lo = 0.0;
        for s in levels {
            let hi = xi_of(s);
            let amp: Vec<Complex64> = rule.on(lo, hi).map(|(x, _)| (-c * x.powf(a)).exp()).collect();
            panels.push((lo, hi, legendre_coefficients(&rule, &amp)));
            lo = hi;
        }
        Ok(Self { params, panels, xi_max: lo })
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    pub fn density(&self, x: f64) -> f64 {
        let total: Complex64 = self
            .panels
            .iter()
            .map(|(a, b, coeffs)| filon_from_coefficients(coeffs, *a, *b, x))
            .sum();
        total.re / PI
    }
}

/// `γ_{σ,α,β}(x) = (1/π) Re ∫₀^∞ exp(−σξ^α(1+iβ tan(πα/2))) e^{iξx} dξ`.
pub fn stable_density(params: &StableParams, x: f64) -> Result<f64> {
    Ok(StableDensity::new(*params)?.density(x))
}

/// Large-`|x|` expansion `(1/π) Σ_k Re[(−c)^k Γ(kα+1)/k! · |x|^{−kα−1} e^{±iπ(kα+1)/2}]`,
/// with `c = σ(1+iβ tan(πα/2))` and the sign of the phase following `x`.
/// The series is asymptotic; it is summed up to `terms` or until terms start growing.
pub fn stable_tail_series(params: &StableParams, x: f64, terms: usize) -> f64 {
    let a = params.alpha;
    let c = params.exponent_coefficient();
    let ax = x.abs();
    let sign = if x >= 0.0 { 1.0 } else { -1.0 };
    let mut total = 0.0_f64;
    let mut last = f64::INFINITY;
    let mut power = Complex64::new(1.0, 0.0);
    let mut factorial = 1.0;
    for k in 1..=terms {
        power *= -c;
        factorial *= k as f64;
        let s = k as f64 * a + 1.0;
        let phase = Complex64::from_polar(1.0, sign * PI * s / 2.0);
        let term = (power * phase).re * gamma(s) / factorial * ax.powf(-s) / PI;
        // Some orders cancel exactly (e.g. even k when β = ±1); skip them.
        if k > 1 && term.abs() < 1e-13 * total.abs() {
            continue;
        }
        if term.abs() > last {
            break;
        }
        total += term;
        last = term.abs();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_scale_for_quartic_source() {
        let src = SourceLaw::new(crate::densities::QUARTIC_C_S, 1.5, 1.0, 0.0).unwrap();
        let p = exponent_from_tail(&src);
        assert!((p.sigma - 0.752_25).abs() < 1e-4, "{}", p.sigma);
        assert_eq!(p.beta, 1.0);
        let lit = exponent_from_tail_with(&src, CosineConvention::Literal);
        assert!((lit.sigma + p.sigma).abs() < 1e-15);
        assert!(!lit.is_valid());
    }

    #[test]
    fn charfn_symmetries() {
        let p = StableParams::new(0.7, 1.3, 0.4).unwrap();
        for &xi in &[0.1, 1.0, 3.0] {
            assert!((charfn_stable(&p, -xi) - charfn_stable(&p, xi).conj()).norm() < 1e-15);
        }
        let s = StableParams::new(0.7, 1.3, 0.0).unwrap();
        let v = charfn_stable(&s, 2.0);
        assert_eq!(v.im, 0.0);
        assert!((v.re - (-0.7 * 2f64.powf(1.3)).exp()).abs() < 1e-15);
    }

    #[test]
    fn leading_tail_coefficient() {
        // For β = 1 the leading right-tail term is 2σΓ(α+1) sin(πα/2) / π · x^{−1−α}.
        let p = StableParams::new(0.75, 1.5, 1.0).unwrap();
        let x: f64 = 1e6;
        let lead = 2.0 * 0.75 * gamma(2.5) * (0.75 * PI).sin() / PI * x.powf(-2.5);
        assert!((stable_tail_series(&p, x, 1) / lead - 1.0).abs() < 1e-12);
        assert!(stable_tail_series(&p, -x, 1).abs() < 1e-12 * lead);
    }
}
