use num_complex::Complex64;
use rayon::prelude::*;

use super::charfn::{charfn_h, decay_constant};
use super::nfold::{Accuracy, ConvolutionPower, NfoldOptions};
use crate::densities::{estimate_tail_law, DensityModel};
use crate::error::{Error, Result};
use crate::quad;
use crate::stable::{
    exponent_from_tail, stable_density_at_zero, stable_tail_series, SourceLaw, StableDensity,
    StableParams,
};

/// Measured local limit error for one `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub n: usize,
    /// `N^{1/α} sup_u |h^{*N}(u) − γ((u − NE)/N^{1/α}) / N^{1/α}|` over the grid.
    pub sup_err: f64,
    /// `N^{1/α} h^{*N}(NE) / γ(0)`.
    pub gamma0_ratio: f64,
    pub xi_max: f64,
    pub highfreq_bound: f64,
    pub tau: f64,
    pub beta_n: f64,
    pub trusted: bool,
}

/// Minimum number of grid points for the sup-norm.
pub const MIN_SUP_GRID: usize = 2048;
/// Sup-norm window in units of `N^{1/α}` around `NE`.
pub const SUP_WINDOW: (f64, f64) = (-8.0, 12.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltOptions {
    pub grid_points: usize,
    pub nfold: NfoldOptions,
}

impl Default for CltOptions {
    fn default() -> Self {
        Self {
            grid_points: MIN_SUP_GRID,
            nfold: NfoldOptions { accuracy: Accuracy::Absolute, ..NfoldOptions::default() },
        }
    }
}

fn check_stable_index(params: &StableParams) -> Result<()> {
    if params.alpha > 1.0 && params.alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "stable index alpha must lie in (1,2), got {}",
            params.alpha
        )))
    }
}

/// The generator must have a power-law tail of index in (1, 2): either declared,
/// or found by a log-log fit of `ν_f` over `[10⁴, 10⁸]`.
fn check_heavy_tail(model: &DensityModel) -> Result<()> {
    let f = model.generator();
    if let Some(t) = f.analytic_tail() {
        if t.alpha > 1.0 && t.alpha < 2.0 {
            return Ok(());
        }
    }
    estimate_tail_law(f, 1e4, 1e8, 16).map(|_| ()).map_err(|e| {
        Error::Precondition(format!("model `{}` has no tail law with alpha in (1,2): {e}", f.name()))
    })
}

/// Tail law of the squared variable `v²`: from the declared tail
/// `f ~ D|x|^{−1−2α}` (then `C_S = D/(2−α)` and the law is totally
/// right-skewed), or else from a fit of `ν_f` over `[10⁴, 10⁸]`.
pub fn source_law_for(model: &DensityModel) -> Result<SourceLaw> {
    let f = model.generator();
    match f.analytic_tail() {
        Some(t) if t.alpha > 1.0 && t.alpha < 2.0 => SourceLaw::new(t.d / (2.0 - t.alpha), t.alpha, 1.0, 0.0),
        _ => {
            let law = estimate_tail_law(f, 1e4, 1e8, 16)?;
            SourceLaw::new(law.c_s, law.alpha, law.p, law.q)
        }
    }
}

/// Stable parameters attracting `h^{*N}`.
pub fn stable_params_for(model: &DensityModel) -> Result<StableParams> {
    Ok(exponent_from_tail(&source_law_for(model)?))
}

pub fn clt_sup_error(model: &DensityModel, n: usize, params: &StableParams) -> Result<ConvergenceRecord> {
    clt_sup_error_with(model, n, params, &CltOptions::default())
}

pub fn clt_sup_error_with(
    model: &DensityModel,
    n: usize,
    params: &StableParams,
    opts: &CltOptions,
) -> Result<ConvergenceRecord> {
    check_stable_index(params)?;
    check_heavy_tail(model)?;
    if n < 2 {
        return Err(Error::Precondition(format!("N must be at least 2, got {n}")));
    }
    let stable = StableDensity::new(*params)?;
    let f = model.generator();
    let e = f.expect(|x| x * x)?;
    let nf = n as f64;
    let scale = nf.powf(1.0 / params.alpha);
    let (lo, hi) = SUP_WINDOW;
    let span = scale * lo.abs().max(hi);
    let power = ConvolutionPower::new(f, n, span, &opts.nfold)?;
    let m = opts.grid_points.max(MIN_SUP_GRID);
    let xs: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let errors: Vec<f64> = xs
        .par_iter()
        .map(|&x| (scale * power.eval(nf * e + scale * x) - stable.density(x)).abs())
        .collect();
    let sup_err = errors.iter().copied().fold(0.0, f64::max);
    let gamma0_ratio = scale * power.eval(nf * e) / stable_density_at_zero(params);
    let cert = power.certificate();
    Ok(ConvergenceRecord {
        n,
        sup_err,
        gamma0_ratio,
        xi_max: cert.xi_max,
        highfreq_bound: cert.highfreq_bound,
        tau: cert.tau,
        beta_n: cert.beta_n,
        trusted: cert.trusted,
    })
}

/// Points of the initial log grid in [`highfreq_gap`].
const GAP_GRID: usize = 256;

/// `η = 1 − sup_{β ≤ |ξ|} |ĥ(ξ)|`.
///
/// On `[β, Ξ]` the supremum is measured on a log grid, refined by golden
/// section around the largest sample. Past `Ξ` the bound `|ĥ| ≤ Bξ^{-1/2}`
/// applies; `Ξ` is pushed out until that bound leaves at least the measured gap.
pub fn highfreq_gap(model: &DensityModel, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Precondition(format!("beta must be positive, got {beta}")));
    }
    let f = model.generator();
    let b = decay_constant(f).ok_or_else(|| {
        Error::Precondition(format!(
            "model `{}` is not declared symmetric-nonincreasing; no decay bound for |ĥ|",
            f.name()
        ))
    })?;
    let abs = |x: f64| charfn_h(f, x).norm();
    let mut lo = beta;
    let mut hi = (4.0 * beta).max((2.0 * b).powi(2));
    let mut best = (abs(beta), beta);
    loop {
        let ratio = (hi / lo).ln() / (GAP_GRID - 1) as f64;
        let grid: Vec<f64> = (0..GAP_GRID).map(|i| lo * (ratio * i as f64).exp()).collect();
        let vals: Vec<f64> = grid.par_iter().map(|&x| abs(x)).collect();
        let (i, &v) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is non-empty");
        let mut peak = (v, grid[i]);
        if i > 0 && i + 1 < grid.len() {
            let (x, v) = golden_max(&abs, grid[i - 1], grid[i + 1]);
            if v > peak.0 {
                peak = (v, x);
            }
        }
        if peak.0 > best.0 {
            best = peak;
        }
        let grid_gap = 1.0 - best.0;
        if grid_gap <= 0.0 {
            return Err(Error::NoGap { eta: grid_gap, xi: best.1 });
        }
        let tail_gap = 1.0 - b / hi.sqrt();
        if tail_gap >= grid_gap {
            return Ok(grid_gap.min(tail_gap));
        }
        lo = hi;
        hi = (b / (1.0 - grid_gap)).powi(2) * 1.01;
    }
}

fn golden_max<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..40 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc > gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Points of the default envelope grid.
pub const ENVELOPE_GRID: usize = 512;
/// Smallest acceptable envelope radius.
pub const ENVELOPE_FLOOR: f64 = 1e-4;

/// Largest grid point `β₀ ≤ 1` such that `|ĥ(ξ)| ≤ e^{−σ|ξ|^α/2}` at every grid
/// point `ξ ≤ β₀`, on the 512-point log grid over `[10⁻⁵, 1]`.
pub fn lowfreq_envelope(model: &DensityModel, params: &StableParams) -> Result<f64> {
    lowfreq_envelope_on_grid(model, params, ENVELOPE_GRID)
}

pub fn lowfreq_envelope_on_grid(
    model: &DensityModel,
    params: &StableParams,
    points: usize,
) -> Result<f64> {
    check_stable_index(params)?;
    if points < 2 {
        return Err(Error::Precondition("envelope grid needs at least 2 points".into()));
    }
    let (a, b) = (1e-5f64, 1.0f64);
    let ratio = (b / a).ln() / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| a * (ratio * i as f64).exp()).collect();
    if !(params.sigma > 0.0) {
        // A non-decaying envelope certifies nothing.
        return Err(Error::EnvelopeFailure { xi: grid[0] });
    }
    let f = model.generator();
    let holds = |x: f64| charfn_h(f, x).norm() <= (-0.5 * params.sigma * x.powf(params.alpha)).exp();
    let mut beta0 = None;
    for &x in &grid {
        if !holds(x) {
            return match beta0 {
                Some(v) if v >= ENVELOPE_FLOOR => Ok(v),
                _ => Err(Error::EnvelopeFailure { xi: x }),
            };
        }
        beta0 = Some(x);
    }
    Ok(beta0.expect("grid is non-empty"))
}

/// `η(ξ)` in `e^{iξE} conj(ĥ(ξ)) = 1 − σ|ξ|^α(1 + iβ sgn(ξ) tan(πα/2)) + η(ξ)`.
///
/// The conjugate matches the sign convention of [`crate::stable::charfn_stable`],
/// whose inversion uses `e^{+iξx}`, while `ĥ` is defined with `e^{+iξu}`.
pub fn remainder(model: &DensityModel, params: &StableParams, xi: f64) -> Result<Complex64> {
    if xi == 0.0 {
        return Err(Error::Precondition("remainder is defined for xi != 0".into()));
    }
    let e = model.generator().expect(|x| x * x)?;
    Ok(remainder_at(model, params, e, xi))
}

fn remainder_at(model: &DensityModel, params: &StableParams, e: f64, xi: f64) -> Complex64 {
    let centred = Complex64::from_polar(1.0, xi * e) * charfn_h(model, xi).conj();
    let c = params.exponent_coefficient();
    let c = if xi < 0.0 { c.conj() } else { c };
    centred - 1.0 + c * xi.abs().powf(params.alpha)
}

/// Samples of `|η(ξ)|/|ξ|^α` behind [`omega`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderProbe {
    pub beta: f64,
    pub omega: f64,
    pub n_samples: usize,
}

pub const OMEGA_SAMPLES: usize = 256;

/// `ω_η(β) = sup |η(ξ)|/|ξ|^α` over 256 log-spaced `ξ` in `(β/100, β]`.
pub fn omega(model: &DensityModel, params: &StableParams, beta: f64) -> Result<RemainderProbe> {
    if !(beta > 0.0) {
        return Err(Error::Precondition(format!("beta must be positive, got {beta}")));
    }
    let e = model.generator().expect(|x| x * x)?;
    let ratio = 100f64.ln() / OMEGA_SAMPLES as f64;
    let samples: Vec<f64> = (0..OMEGA_SAMPLES)
        .map(|i| beta * (-ratio * i as f64).exp())
        .collect();
    let values: Vec<f64> = samples
        .par_iter()
        .map(|&x| remainder_at(model, params, e, x).norm() / x.powf(params.alpha))
        .collect();
    Ok(RemainderProbe {
        beta,
        omega: values.iter().copied().fold(0.0, f64::max),
        n_samples: OMEGA_SAMPLES,
    })
}

/// Weighted distance between the centred squared law and the stable law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdaReport {
    /// `∫_{−X}^{X} |x|^{α+δ} |h₀(x) − γ(x)| dx`
    pub integral: f64,
    /// Log-log slope of the integrand on `[X/2, X]`.
    pub decay_exponent: f64,
    /// `decay_exponent < −1`: the untruncated integral looks finite.
    pub finite_assessed: bool,
    pub delta: f64,
    pub x_max: f64,
}

/// Truncated weighted `L¹` distance between `h₀(x) = h(x + E)` and `γ_{σ,α,β}`.
///
/// The `u^{-1/2}` singularity of `h` at `x = −E` is removed with `x = t² − E`.
/// Where `|x|` is large enough for the asymptotic series of `γ` to converge
/// quickly, the series replaces the Fourier inversion.
pub fn fda_order_check(
    model: &DensityModel,
    params: &StableParams,
    delta: f64,
    x_max: f64,
) -> Result<FdaReport> {
    check_stable_index(params)?;
    let alpha = params.alpha;
    if !(delta > 0.0 && delta < 2.0 - alpha) {
        return Err(Error::Precondition(format!(
            "delta must satisfy 0 < delta < 2 - alpha = {}, got {delta}",
            2.0 - alpha
        )));
    }
    if !(x_max > 0.0) {
        return Err(Error::Precondition(format!("X must be positive, got {x_max}")));
    }
    let f = model.generator();
    let e = f.expect(|x| x * x)?;
    let stable = StableDensity::new(*params)?;
    let rho = params.exponent_coefficient().norm();
    let series_from = (rho / 0.05).powf(1.0 / alpha).max(8.0);
    let gamma = |x: f64| {
        if x.abs() >= series_from {
            stable_tail_series(params, x, 12)
        } else {
            stable.density(x)
        }
    };
    let weight = |x: f64| x.abs().powf(alpha + delta);
    let h0 = |x: f64| {
        let u = x + e;
        if u <= 0.0 {
            0.0
        } else {
            let r = u.sqrt();
            (f.eval(r) + f.eval(-r)) / (2.0 * r)
        }
    };
    let rule = quad::gauss_legendre(16);

    // Left of the support of h₀ only γ remains.
    let mut left = 0.0;
    if x_max > e {
        let mut a = e;
        while a < x_max {
            let b = (2.0 * a).min(x_max);
            let pieces = 8;
            let step = (b - a) / pieces as f64;
            for k in 0..pieces {
                let lo = a + k as f64 * step;
                left += rule.integrate(lo, lo + step, |x| weight(x) * gamma(-x).abs());
            }
            a = b;
        }
    }

    // On the support, x = t² − E and h₀(x) dx = F(t) dt.
    let t_max = (x_max + e).sqrt();
    let t_lo = if x_max >= e { 0.0 } else { (e - x_max).sqrt() };
    let integrand = |t: f64| {
        let x = t * t - e;
        weight(x) * (f.eval(t) + f.eval(-t) - 2.0 * t * gamma(x)).abs()
    };
    let mut panels = Vec::new();
    let inner_end = t_max.min(4.0);
    let inner = 64;
    for k in 0..inner {
        let a = t_lo + (inner_end - t_lo) * k as f64 / inner as f64;
        let b = t_lo + (inner_end - t_lo) * (k + 1) as f64 / inner as f64;
        panels.push((a, b));
    }
    let mut a = inner_end;
    while a < t_max {
        let b = (2.0 * a).min(t_max);
        for k in 0..16 {
            panels.push((a + (b - a) * k as f64 / 16.0, a + (b - a) * (k + 1) as f64 / 16.0));
        }
        a = b;
    }
    let parts: Vec<f64> = panels
        .par_iter()
        .map(|&(a, b)| if b > a { rule.integrate(a, b, integrand) } else { 0.0 })
        .collect();
    let right: f64 = parts.iter().sum();

    let probe = |x: f64| weight(x) * ((h0(x) - gamma(x)).abs() + (h0(-x) - gamma(-x)).abs());
    let pts: Vec<(f64, f64)> = (0..16)
        .map(|i| {
            let x = 0.5 * x_max * 2f64.powf(i as f64 / 15.0);
            (x.ln(), probe(x).max(1e-300).ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 16.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 16.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Ok(FdaReport {
        integral: left + right,
        decay_exponent: slope,
        finite_assessed: slope < -1.0,
        delta,
        x_max,
    })
}
