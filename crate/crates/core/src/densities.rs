//! One-dimensional probability densities, their squared-variable laws, moments
//! and tail diagnostics.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{self, Tail};

type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Power-law asymptote `f(x) ~ d / |x|^{1+2α}` on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailAsymptote {
    pub d: f64,
    pub alpha: f64,
}

impl TailAsymptote {
    /// Exponent of the density decay, `1 + 2α`.
    pub fn power(&self) -> f64 {
        1.0 + 2.0 * self.alpha
    }
}

#[derive(Clone)]
enum Shape {
    Gauss,
    /// `c / (s (1 + |x/s|^p))`
    PowerTail { p: f64, c: f64, s: f64 },
    /// Two centred Gaussians with variances `t1`, `t2` and weights `w`, `1 - w`.
    Mixture { w: f64, t1: f64, t2: f64 },
    /// Law of `V²` when `V` has the inner density.
    Squared(Arc<DensityModel>),
    Custom {
        eval: Func,
        deriv: Option<Func>,
        heavy: bool,
    },
    /// `f(v) e^{−θv²} / M(θ)`.
    Tilted { base: Arc<DensityModel>, theta: f64, ln_m: f64 },
}

/// An evaluable probability density on the line.
#[derive(Clone)]
pub struct DensityModel {
    name: String,
    shape: Shape,
    support: (f64, f64),
    analytic_tail: Option<TailAsymptote>,
    normalization_scale: f64,
    unit_energy: bool,
    unimodal: bool,
}

impl fmt::Debug for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityModel")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("analytic_tail", &self.analytic_tail)
            .field("normalization_scale", &self.normalization_scale)
            .field("unit_energy", &self.unit_energy)
            .finish()
    }
}

/// Parameter map accepted by [`make_model`].
pub type ModelParams = BTreeMap<String, f64>;

/// Builds one of the registered models: `gauss`, `quartic`,
/// `power-tail` (parameter `alpha` in (1, 2)) or `mixture` (parameter `delta` in (0, 1)).
pub fn make_model(name: &str, params: &ModelParams) -> Result<DensityModel> {
    let get = |key: &str| {
        params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Parameter(format!("model `{name}` needs parameter `{key}`")))
    };
    match name {
        "gauss" => Ok(DensityModel::gauss()),
        "quartic" => Ok(DensityModel::quartic()),
        "power-tail" => DensityModel::power_tail(get("alpha")?),
        "mixture" => DensityModel::mixture(get("delta")?),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

impl DensityModel {
    /// Parses `gauss`, `quartic`, `power-tail:<alpha>` or `mixture:<delta>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec.trim(), None),
        };
        let mut params = ModelParams::new();
        if let Some(a) = arg {
            let v: f64 = a
                .parse()
                .map_err(|_| Error::Parameter(format!("cannot parse `{a}` as a number")))?;
            let key = match name {
                "power-tail" => "alpha",
                "mixture" => "delta",
                _ => return Err(Error::Parameter(format!("model `{name}` takes no parameter"))),
            };
            params.insert(key.to_string(), v);
        }
        make_model(name, &params)
    }

    pub fn gauss() -> Self {
        Self {
            name: "gauss".into(),
            shape: Shape::Gauss,
            support: (f64::NEG_INFINITY, f64::INFINITY),
            analytic_tail: None,
            normalization_scale: 1.0,
            unit_energy: true,
            unimodal: true,
        }
    }

    /// `√2 / (π (1 + x⁴))`.
    pub fn quartic() -> Self {
        let mut m = Self::power_tail(1.5).expect("1.5 is in range");
        m.name = "quartic".into();
        m
    }

    /// `c / (s (1 + |x/s|^{1+2α}))` with unit mass and unit second moment.
    ///
    /// With `p = 1 + 2α` both constants have closed forms,
    /// `c = p sin(π/p) / (2π)` and `s² = sin(3π/p) / sin(π/p)`.
    pub fn power_tail(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Parameter(format!("power-tail needs alpha in (1,2), got {alpha}")));
        }
        let p = 1.0 + 2.0 * alpha;
        let c = p * (PI / p).sin() / (2.0 * PI);
        let s = ((3.0 * PI / p).sin() / (PI / p).sin()).sqrt();
        Ok(Self {
            name: format!("power-tail:{alpha}"),
            shape: Shape::PowerTail { p, c, s },
            support: (f64::NEG_INFINITY, f64::INFINITY),
            analytic_tail: Some(TailAsymptote { d: c * s.powf(p - 1.0), alpha }),
            normalization_scale: s,
            unit_energy: true,
            unimodal: true,
        })
    }

    /// `δ M_{1/(2δ)} + (1−δ) M_{1/(2(1−δ))}` where `M_T` is the centred Gaussian of variance `T`.
    pub fn mixture(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("mixture needs delta in (0,1), got {delta}")));
        }
        Ok(Self {
            name: format!("mixture:{delta}"),
            shape: Shape::Mixture {
                w: delta,
                t1: 1.0 / (2.0 * delta),
                t2: 1.0 / (2.0 * (1.0 - delta)),
            },
            support: (f64::NEG_INFINITY, f64::INFINITY),
            analytic_tail: None,
            normalization_scale: 1.0,
            unit_energy: true,
            unimodal: true,
        })
    }

    /// A user-supplied density on the whole line. `heavy` selects power-law
    /// tail handling in quadrature.
    pub fn custom<F>(name: &str, eval: F, heavy: bool) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            shape: Shape::Custom { eval: Arc::new(eval), deriv: None, heavy },
            support: (f64::NEG_INFINITY, f64::INFINITY),
            analytic_tail: None,
            normalization_scale: 1.0,
            unit_energy: false,
            unimodal: false,
        }
    }

    pub fn with_derivative<F>(mut self, deriv: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Shape::Custom { deriv: d, .. } = &mut self.shape {
            *d = Some(Arc::new(deriv));
        }
        self
    }

    pub fn with_unit_energy(mut self, flag: bool) -> Self {
        self.unit_energy = flag;
        self
    }

    /// Declares that `v ↦ f(v) + f(−v)` is nonincreasing on `[0, ∞)`.
    pub fn with_unimodal(mut self, flag: bool) -> Self {
        self.unimodal = flag;
        self
    }

    /// Typical width of the bulk, used to lay out quadrature panels.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.normalization_scale = scale;
        self
    }

    /// The exponentially tilted density `f(v) e^{−θv²} / M(θ)` together with
    /// `ln M(θ)`, where `M(θ) = ∫ f(v) e^{−θv²} dv`.
    pub fn tilted(&self, theta: f64) -> Result<(DensityModel, f64)> {
        let base = self.generator();
        if !(theta > base.tilt_floor()) {
            return Err(Error::Parameter(format!(
                "tilt {theta} is not above the integrability floor {}",
                base.tilt_floor()
            )));
        }
        let (m, second) = base.tilt_moments(theta)?;
        let second = second / m;
        let ln_m = m.ln();
        Ok((
            DensityModel {
                name: format!("{}~tilt({theta})", base.name),
                shape: Shape::Tilted { base: Arc::new(base.clone()), theta, ln_m },
                support: base.support,
                analytic_tail: None,
                normalization_scale: second.sqrt(),
                unit_energy: false,
                unimodal: base.unimodal,
            },
            ln_m,
        ))
    }

    /// `(∫ f e^{−θv²}, ∫ v² f e^{−θv²})`, with the weight applied in the log
    /// domain so that `θ < 0` cannot produce `∞ · 0`.
    pub fn tilt_moments(&self, theta: f64) -> Result<(f64, f64)> {
        let base = self.generator();
        let w = |x: f64| (base.ln_eval(x) - theta * x * x).exp();
        let m = base.integrate_line(w)?;
        let s = base.integrate_line(|x| x * x * w(x))?;
        Ok((m, s))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn analytic_tail(&self) -> Option<TailAsymptote> {
        self.analytic_tail
    }

    pub fn normalization_scale(&self) -> f64 {
        self.normalization_scale
    }

    pub fn is_unit_energy(&self) -> bool {
        self.unit_energy
    }

    pub fn is_unimodal(&self) -> bool {
        self.unimodal
    }

    /// True for the output of [`h_of`].
    pub fn is_squared(&self) -> bool {
        matches!(self.shape, Shape::Squared(_))
    }

    /// The density `f` behind a squared-variable law, or the model itself.
    pub fn generator(&self) -> &DensityModel {
        match &self.shape {
            Shape::Squared(inner) => inner.generator(),
            _ => self,
        }
    }

    /// Whether the tails decay like a power (drives quadrature tail handling).
    pub fn heavy_tailed(&self) -> bool {
        match &self.shape {
            Shape::Gauss | Shape::Mixture { .. } => false,
            Shape::PowerTail { .. } => true,
            Shape::Squared(inner) => inner.heavy_tailed(),
            Shape::Custom { heavy, .. } => *heavy,
            Shape::Tilted { base, theta, .. } => base.heavy_tailed() && *theta <= 0.0,
        }
    }

    /// Infimum of the `θ` for which `∫ f(v) e^{-θ v²} dv` is finite.
    pub fn tilt_floor(&self) -> f64 {
        match &self.shape {
            Shape::Gauss => -0.5,
            Shape::Mixture { t1, t2, .. } => -0.5 / t1.max(*t2),
            Shape::Squared(inner) => inner.tilt_floor(),
            Shape::Tilted { base, theta, .. } => base.tilt_floor() - theta,
            _ => 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Gauss => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            Shape::PowerTail { p, c, s } => c / (s * (1.0 + abs_pow((x / s).abs(), *p))),
            Shape::Mixture { w, t1, t2 } => w * normal(x, *t1) + (1.0 - w) * normal(x, *t2),
            Shape::Squared(inner) => {
                if x <= 0.0 {
                    0.0
                } else {
                    let r = x.sqrt();
                    (inner.eval(r) + inner.eval(-r)) / (2.0 * r)
                }
            }
            Shape::Custom { eval, .. } => eval(x),
            Shape::Tilted { .. } => self.ln_eval(x).exp(),
        }
    }

    /// `ln f(x)`, accurate where `f` itself underflows.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Gauss => -0.5 * x * x - 0.5 * (2.0 * PI).ln(),
            Shape::PowerTail { p, c, s } => (c / s).ln() - (x / s).abs().powf(*p).ln_1p(),
            Shape::Mixture { w, t1, t2 } => {
                let a = w.ln() + ln_normal(x, *t1);
                let b = (1.0 - w).ln() + ln_normal(x, *t2);
                let m = a.max(b);
                m + ((a - m).exp() + (b - m).exp()).ln()
            }
            Shape::Tilted { base, theta, ln_m } => base.ln_eval(x) - theta * x * x - ln_m,
            _ => self.eval(x).ln(),
        }
    }

    /// `f′(x)` when a derivative is known.
    pub fn deriv(&self, x: f64) -> Option<f64> {
        match &self.shape {
            Shape::Gauss => Some(-x * self.eval(x)),
            Shape::PowerTail { p, c, s } => {
                let y = x / s;
                let ay = y.abs();
                let den = 1.0 + ay.powf(*p);
                Some(-c / (s * s) * p * ay.powf(p - 1.0) * y.signum() / (den * den))
            }
            Shape::Mixture { w, t1, t2 } => {
                Some(-x * (w * normal(x, *t1) / t1 + (1.0 - w) * normal(x, *t2) / t2))
            }
            Shape::Squared(_) => None,
            Shape::Custom { deriv, .. } => deriv.as_ref().map(|d| d(x)),
            Shape::Tilted { base, theta, ln_m } => base
                .deriv(x)
                .map(|d| (d - 2.0 * theta * x * base.eval(x)) * (-theta * x * x - ln_m).exp()),
        }
    }

    pub fn has_derivative(&self) -> bool {
        self.deriv(0.5).is_some()
    }

    /// `∫ g(x) f(x) dx` over the support. Integrals against a squared-variable law
    /// are taken in the generator variable, `∫ g(v²) f(v) dv`, which removes the
    /// `u^{-1/2}` singularity at the origin.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        match &self.shape {
            Shape::Squared(_) => {
                let f = self.generator();
                f.integrate_line(|v| g(v * v) * f.eval(v))
            }
            _ => self.integrate_line(|x| g(x) * self.eval(x)),
        }
    }

    /// `∫_{-∞}^{∞} g(x) dx` with panels suited to this model's tails. `g` is
    /// expected to inherit the decay of `f`.
    pub fn integrate_line<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let tail = if self.heavy_tailed() { Tail::PowerLaw } else { Tail::Negligible };
        let width = match &self.shape {
            Shape::Mixture { t1, t2, .. } => t1.max(*t2).sqrt().max(1.0),
            _ => self.normalization_scale.max(1.0),
        };
        quad::integrate_from(|x| g(x) + g(-x), 0.0, width, tail, 8)
    }

    /// `∫_{|x| ≤ r} g(x) dx` on Gauss–Legendre panels that refine towards the origin
    /// only as far as the model scale requires.
    pub fn integrate_window<G: Fn(f64) -> f64>(&self, g: G, r: f64) -> f64 {
        let rule = quad::gauss_legendre(32);
        let mut total = 0.0;
        for (a, b) in window_panels(r, self.normalization_scale.max(1.0)) {
            total += rule.integrate(a, b, |x| g(x) + g(-x));
        }
        total
    }

    /// `∫_x^∞ f` in log form, for `x` beyond the bulk.
    fn ln_upper_tail(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Squared(inner) => {
                let r = x.max(0.0).sqrt();
                let a = inner.ln_upper_tail(r);
                let b = inner.ln_upper_tail_of_reflection(r);
                log_add(a, b)
            }
            _ => {
                let l0 = self.ln_eval(x);
                if l0 == f64::NEG_INFINITY {
                    return l0;
                }
                let slope = match self.deriv(x) {
                    Some(d) => (d / self.eval(x)).abs(),
                    None => 1.0 / x.abs().max(1.0),
                };
                let width = if slope.is_finite() && slope > 0.0 {
                    (1.0 / slope).min(x.abs().max(1.0))
                } else {
                    x.abs().max(1.0)
                };
                let tail = if self.heavy_tailed() { Tail::PowerLaw } else { Tail::Negligible };
                let rest = quad::integrate_from(
                    |t| (self.ln_eval(t) - l0).exp(),
                    x,
                    width,
                    tail,
                    4,
                )
                .unwrap_or(f64::NAN);
                l0 + rest.ln()
            }
        }
    }

    /// `ln ∫_{-∞}^{-x} f`.
    fn ln_upper_tail_of_reflection(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Squared(_) => f64::NEG_INFINITY,
            Shape::Gauss | Shape::PowerTail { .. } | Shape::Mixture { .. } => self.ln_upper_tail(x),
            Shape::Tilted { .. } | Shape::Custom { .. } => {
                let reflected = {
                    let inner = self.clone();
                    DensityModel::custom("reflection", move |t| inner.eval(-t), self.heavy_tailed())
                };
                reflected.ln_upper_tail(x)
            }
        }
    }
}

/// `y^p` for `y ≥ 0`, with a fast path for integer exponents.
fn abs_pow(y: f64, p: f64) -> f64 {
    if p == 4.0 {
        let y2 = y * y;
        y2 * y2
    } else {
        y.powf(p)
    }
}

fn normal(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

fn ln_normal(x: f64, var: f64) -> f64 {
    -0.5 * x * x / var - 0.5 * (2.0 * PI * var).ln()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Panels covering `[0, r]`: four equal pieces on `[0, min(r, scale)]`, then doubling.
pub(crate) fn window_panels(r: f64, scale: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let first = r.min(scale);
    for k in 0..4 {
        out.push((first * k as f64 / 4.0, first * (k + 1) as f64 / 4.0));
    }
    let mut a = first;
    while a < r {
        let b = (2.0 * a).min(r);
        out.push((a, b));
        a = b;
    }
    out
}

/// Density of `V²` when `V ~ f`: `h(u) = (f(√u) + f(−√u)) / (2√u)` for `u > 0`.
pub fn h_of(model: &DensityModel) -> DensityModel {
    DensityModel {
        name: format!("h({})", model.name),
        shape: Shape::Squared(Arc::new(model.clone())),
        support: (0.0, f64::INFINITY),
        analytic_tail: None,
        normalization_scale: 1.0,
        unit_energy: false,
        unimodal: false,
    }
}

/// A moment that may diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn value(&self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(*v),
            Moment::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Moment::Infinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub mass: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub fourth_moment: Moment,
    /// Mean of the squared variable, equal to `second_moment`.
    pub e: f64,
}

/// Mass, mean, second and fourth moments of `f`.
///
/// Models with a power-law asymptote are integrated numerically up to a cut
/// `X` beyond which `X^{m+1} |f(x) − D|x|^{-p}|` is below `1e-13`, and the
/// remainder is taken from the asymptote in closed form.
pub fn moments(model: &DensityModel) -> Result<MomentSummary> {
    let m = model.generator();
    let mass = raw_moment(m, 0)?.value().unwrap_or(f64::NAN);
    let mean = raw_moment(m, 1)?.value().unwrap_or(f64::NAN);
    let second = raw_moment(m, 2)?;
    let fourth = raw_moment(m, 4)?;
    let second = second
        .value()
        .ok_or(Error::NonConvergence { residual: f64::INFINITY })?;
    Ok(MomentSummary { mass, mean, second_moment: second, fourth_moment: fourth, e: second })
}

fn raw_moment(model: &DensityModel, k: i32) -> Result<Moment> {
    match model.analytic_tail {
        Some(tail) => {
            let p = tail.power();
            if k as f64 >= p - 1.0 {
                return Ok(Moment::Infinite);
            }
            let x_cut = asymptote_cut(model, tail, k);
            let body = model.integrate_window(|x| x.powi(k) * model.eval(x), x_cut);
            let rest = if k % 2 == 0 {
                2.0 * tail.d * x_cut.powf(k as f64 + 1.0 - p) / (p - 1.0 - k as f64)
            } else {
                0.0
            };
            Ok(Moment::Finite(body + rest))
        }
        None => model
            .integrate_line(|x| x.powi(k) * model.eval(x))
            .map(Moment::Finite),
    }
}

fn asymptote_cut(model: &DensityModel, tail: TailAsymptote, k: i32) -> f64 {
    let p = tail.power();
    let mut x = 4.0 * model.normalization_scale.max(1.0);
    while x < 1e12 {
        let dev = |t: f64| (model.eval(t) - tail.d * t.abs().powf(-p)).abs();
        if x.powi(k + 1) * dev(x).max(dev(-x)) < 1e-13 {
            break;
        }
        x *= 2.0;
    }
    x
}

/// Truncated fourth moment `ν_f(x) = ∫_{−√x}^{√x} y⁴ f(y) dy`.
pub fn nu_f(model: &DensityModel, x: f64) -> f64 {
    let f = model.generator();
    if x <= 0.0 {
        return 0.0;
    }
    f.integrate_window(|y| y.powi(4) * f.eval(y), x.sqrt())
}

/// Result of a log-log fit of `ν_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailLaw {
    pub c_s: f64,
    pub alpha: f64,
    pub fit_window: (f64, f64),
    pub residual: f64,
    pub p: f64,
    pub q: f64,
}

/// Largest tolerated deviation of `log ν_f` from the fitted line.
pub const TAIL_FIT_RESIDUAL: f64 = 0.05;
/// Smallest log-log slope accepted as genuine growth of `ν_f`.
pub const TAIL_FIT_MIN_SLOPE: f64 = 0.02;

/// Least-squares fit of `log ν_f(x) = log C_S + (2 − α) log x` on geometric points.
/// The skew fractions come from the squared-variable law at `x_max`.
pub fn estimate_tail_law(
    model: &DensityModel,
    x_min: f64,
    x_max: f64,
    n_points: usize,
) -> Result<TailLaw> {
    if !(x_min > 0.0 && x_min < x_max) {
        return Err(Error::Precondition(format!(
            "tail fit window must satisfy 0 < x_min < x_max, got [{x_min}, {x_max}]"
        )));
    }
    if n_points < 8 {
        return Err(Error::Precondition(format!("tail fit needs at least 8 points, got {n_points}")));
    }
    let f = model.generator();
    let ratio = (x_max / x_min).ln() / (n_points - 1) as f64;
    let pts: Vec<(f64, f64)> = (0..n_points)
        .map(|i| {
            let x = x_min * (ratio * i as f64).exp();
            (x.ln(), nu_f(f, x).ln())
        })
        .collect();
    let n = n_points as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    let alpha = 2.0 - slope;
    if !residual.is_finite() || residual > TAIL_FIT_RESIDUAL || slope < TAIL_FIT_MIN_SLOPE || alpha <= 1.0 {
        return Err(Error::NotRegularlyVarying { residual, slope });
    }
    let (p, q) = skew_fractions(&h_of(f), x_max)?;
    Ok(TailLaw { c_s: intercept.exp(), alpha, fit_window: (x_min, x_max), residual, p, q })
}

/// `((1−F(x)) / (1−F(x)+F(−x)), F(−x) / (1−F(x)+F(−x)))`, evaluated in log form so
/// that far Gaussian tails do not underflow.
pub fn skew_fractions(model: &DensityModel, x: f64) -> Result<(f64, f64)> {
    if x <= 0.0 {
        return Err(Error::Precondition(format!("skew fractions need x > 0, got {x}")));
    }
    let up = model.ln_upper_tail(x);
    let down = model.ln_upper_tail_of_reflection(x);
    let den = log_add(up, down);
    if den.is_nan() || den == f64::NEG_INFINITY {
        return Err(Error::DegenerateTail { x });
    }
    let p = (up - den).exp();
    let q = (down - den).exp();
    Ok((p, q))
}

/// `2√2/π`, the `ν_f` amplitude of the quartic model.
pub const QUARTIC_C_S: f64 = 2.0 * SQRT_2 / PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_constants() {
        let q = DensityModel::quartic();
        assert!((q.eval(0.0) - SQRT_2 / PI).abs() < 1e-15);
        assert!((q.normalization_scale() - 1.0).abs() < 1e-15);
        let t = q.analytic_tail().unwrap();
        assert!((t.d - SQRT_2 / PI).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for m in [
            DensityModel::gauss(),
            DensityModel::quartic(),
            DensityModel::power_tail(1.2).unwrap(),
            DensityModel::mixture(0.3).unwrap(),
        ] {
            for &x in &[-2.3, -0.4, 0.7, 3.1] {
                let h = 1e-5;
                let fd = (m.eval(x + h) - m.eval(x - h)) / (2.0 * h);
                let d = m.deriv(x).unwrap();
                assert!((fd - d).abs() < 1e-8, "{} at {x}: {fd} vs {d}", m.name());
            }
        }
    }

    #[test]
    fn ln_eval_is_consistent() {
        let m = DensityModel::mixture(0.2).unwrap();
        for &x in &[0.0, 1.5, 4.0] {
            assert!((m.ln_eval(x) - m.eval(x).ln()).abs() < 1e-12);
        }
        assert!(DensityModel::gauss().ln_eval(100.0).is_finite());
    }

    #[test]
    fn parse_round_trip() {
        assert_eq!(DensityModel::parse("power-tail:1.3").unwrap().name(), "power-tail:1.3");
        assert!(matches!(DensityModel::parse("cauchy"), Err(Error::UnknownModel(_))));
        assert!(matches!(DensityModel::parse("mixture:1.5"), Err(Error::Parameter(_))));
        assert!(matches!(DensityModel::parse("quartic:2"), Err(Error::Parameter(_))));
    }

    #[test]
    fn window_panels_cover_interval() {
        let p = window_panels(37.0, 1.0);
        assert_eq!(p[0].0, 0.0);
        assert_eq!(p.last().unwrap().1, 37.0);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }
}
