use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use super::charfn::{charfn_h, decay_constant};
use crate::densities::DensityModel;
use crate::error::{Error, Result};
use crate::quad::{self, brent};

/// Convolution powers up to this order are computed in real space.
pub const REAL_SPACE_MAX_N: usize = 12;
/// Certified bound on the discarded high-frequency tail required for trust.
pub const TRUST_BOUND: f64 = 1e-12;
/// Largest frequency cutoff the spectral route will tabulate.
pub const XI_BUDGET: f64 = 400.0;
/// Default exponent in the cutoff schedule `β_N = N^{-1/(2+2τ)}`.
pub const DEFAULT_TAU: f64 = 0.1;
/// Level of `N(−ln|ĥ|)` that marks the end of the spectral bulk.
const BULK_LEVEL: f64 = 40.0;
/// Share of the analytic tail bound in the certificate.
const ANALYTIC_TAIL: f64 = 1e-13;
const ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accuracy {
    /// Uniform absolute accuracy (around `1e-14`).
    Absolute,
    /// Relative accuracy in the tails, by exponential tilting where the
    /// generator allows it.
    #[default]
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NfoldOptions {
    pub tau: f64,
    /// Accept a cutoff whose high-frequency remainder is not certified.
    pub force: bool,
    pub accuracy: Accuracy,
}

impl Default for NfoldOptions {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU, force: false, accuracy: Accuracy::Relative }
    }
}

/// What the spectral route cut off and how well the remainder is controlled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffCertificate {
    /// Frequency cutoff; zero for the real-space route.
    pub xi_max: f64,
    /// Bound on `(1/π) ∫_{ξ_max}^∞ |ĥ|^N`.
    pub highfreq_bound: f64,
    pub beta_n: f64,
    pub tau: f64,
    pub trusted: bool,
}

#[derive(Debug, Clone)]
struct Table {
    xi: Vec<f64>,
    /// `w_j |ĥ(ξ_j)|^N / π`
    weight: Vec<f64>,
    /// `N arg(ĥ(ξ_j) e^{−iEξ_j})` reduced mod 2π
    phase: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Method {
    RealSpace(RealSpace),
    Spectral(Table),
}

/// `h^{*N}`, prepared for evaluation at many points.
#[derive(Debug, Clone)]
pub struct ConvolutionPower {
    n: usize,
    center: f64,
    method: Method,
    certificate: CutoffCertificate,
}

impl ConvolutionPower {
    /// Prepares `h^{*N}` for points `u` with `|u − N·E| ≤ span`.
    ///
    /// Orders up to [`REAL_SPACE_MAX_N`] use nested angular quadrature of the
    /// convolution integrals; above that, `(1/π) Re ∫₀^{ξ_max} ĥ(ξ)^N e^{−iξu} dξ`
    /// is tabulated in log-polar form. The cutoff `ξ_max` is the first point
    /// past the spectral bulk where the remainder bound is below
    /// [`TRUST_BOUND`]; the bound combines sampled values of `|ĥ|` with a
    /// Lipschitz margin (`|ĥ′| ≤ E`) and, far out, `|ĥ(ξ)| ≤ B ξ^{-1/2}`.
    pub fn new(model: &DensityModel, n: usize, span: f64, opts: &NfoldOptions) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("convolution order must be at least 1".into()));
        }
        if !(opts.tau > 0.0) {
            return Err(Error::Precondition(format!("tau must be positive, got {}", opts.tau)));
        }
        let f = model.generator().clone();
        let e = f.expect(|x| x * x)?;
        let beta_n = (n as f64).powf(-1.0 / (2.0 + 2.0 * opts.tau));
        if n <= REAL_SPACE_MAX_N {
            return Ok(Self {
                n,
                center: n as f64 * e,
                method: Method::RealSpace(RealSpace::new(f, n, n as f64 * e + span)),
                certificate: CutoffCertificate {
                    xi_max: 0.0,
                    highfreq_bound: 0.0,
                    beta_n,
                    tau: opts.tau,
                    trusted: true,
                },
            });
        }
        let nf = n as f64;
        let xi_s = bulk_edge(&f, nf);
        let (xi_cut, bound) = certify_cutoff(&f, nf, e, xi_s);
        let (xi_max, bound, trusted) = if xi_cut <= XI_BUDGET && bound <= TRUST_BOUND {
            (xi_cut, bound, true)
        } else if opts.force {
            let cut = xi_cut.min(XI_BUDGET);
            let (_, b) = certify_from(&f, nf, e, xi_s, cut);
            (cut, b, false)
        } else {
            return Err(Error::UntrustedCutoff { n, xi_max: xi_cut, bound });
        };

        // Panels resolve both the decay of |ĥ|^N, on the scale ξ₁ where it first
        // drops by e, and the oscillation e^{−iξ(u−NE)} over the requested span.
        let xi_1 = decay_onset(&f, nf).min(xi_s);
        let cap = 4.0 / span.max(1e-9);
        let mut edges = vec![0.0];
        let mut a: f64 = 0.0;
        while a < xi_max {
            let mut b = (a + (a.max(xi_1) / 6.0).min(cap)).min(xi_max);
            if a < beta_n && beta_n < b {
                b = beta_n;
            }
            edges.push(b);
            a = b;
        }
        let rule = quad::gauss_legendre(ORDER);
        let nodes: Vec<(f64, f64)> = edges
            .windows(2)
            .flat_map(|w| rule.on(w[0], w[1]).collect::<Vec<_>>())
            .collect();
        let values: Vec<Complex64> = nodes.par_iter().map(|&(x, _)| charfn_h(&f, x)).collect();
        let mut table = Table { xi: Vec::new(), weight: Vec::new(), phase: Vec::new() };
        for (&(x, w), v) in nodes.iter().zip(&values) {
            let ln_abs = v.norm().ln();
            let weight = w * (nf * ln_abs).exp() / PI;
            if weight < 1e-300 {
                continue;
            }
            let centred = v * Complex64::from_polar(1.0, -e * x);
            table.xi.push(x);
            table.weight.push(weight);
            table.phase.push((nf * centred.arg()).rem_euclid(2.0 * PI));
        }
        Ok(Self {
            n,
            center: nf * e,
            method: Method::Spectral(table),
            certificate: CutoffCertificate {
                xi_max,
                highfreq_bound: bound,
                beta_n,
                tau: opts.tau,
                trusted,
            },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `N·E`, the mean of `h^{*N}`.
    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn certificate(&self) -> &CutoffCertificate {
        &self.certificate
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.method, Method::Spectral(_))
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match &self.method {
            Method::RealSpace(r) => r.value(self.n, u),
            Method::Spectral(t) => {
                let shift = u - self.center;
                t.xi
                    .iter()
                    .zip(&t.weight)
                    .zip(&t.phase)
                    .map(|((&x, &w), &p)| w * (p - x * shift).cos())
                    .sum()
            }
        }
    }

    /// Evaluates at many points; work is spread over the rayon pool and
    /// results come back in input order.
    pub fn eval_many(&self, us: &[f64]) -> Vec<f64> {
        us.par_iter().map(|&u| self.eval(u)).collect()
    }
}

/// First `ξ` (on a geometric scan) where `N(−ln|ĥ(ξ)|) ≥ 40`.
fn bulk_edge(f: &DensityModel, n: f64) -> f64 {
    let mut xi = 1e-4;
    while xi < XI_BUDGET {
        if -n * charfn_h(f, xi).norm().ln() >= BULK_LEVEL {
            return xi;
        }
        xi *= 1.05;
    }
    XI_BUDGET
}

/// First `ξ` (on a geometric scan) where `N(−ln|ĥ(ξ)|) ≥ 1`.
fn decay_onset(f: &DensityModel, n: f64) -> f64 {
    let mut xi = 1e-4;
    while xi < XI_BUDGET {
        if -n * charfn_h(f, xi).norm().ln() >= 1.0 {
            return xi;
        }
        xi *= 1.05;
    }
    XI_BUDGET
}

/// Point beyond which the analytic bound `∫_Ξ^∞ (Bξ^{-1/2})^N dξ` is below `1e-13 π`.
fn analytic_start(b: f64, n: f64) -> f64 {
    let k = n / 2.0 - 1.0;
    ((n * b.ln() - (ANALYTIC_TAIL * PI * k).ln()) / k).exp()
}

fn analytic_tail(b: f64, n: f64, from: f64) -> f64 {
    let k = n / 2.0 - 1.0;
    (n * b.ln() - k * from.ln()).exp() / k
}

/// Smallest cutoff `≥ ξ_s` whose remainder bound meets [`TRUST_BOUND`], and
/// that bound. When no cutoff qualifies the smallest bound found is returned.
fn certify_cutoff(f: &DensityModel, n: f64, e: f64, xi_s: f64) -> (f64, f64) {
    let b = match decay_constant(f) {
        Some(b) if n > 2.0 => b,
        _ => return (f64::INFINITY, f64::INFINITY),
    };
    let far = analytic_start(b, n).max(xi_s);
    if far > 12.5 * XI_BUDGET {
        return (far, f64::INFINITY);
    }
    let cells = certification_cells(f, n, e, b, xi_s, far);
    let tail = analytic_tail(b, n, far);
    let mut suffix = tail;
    let mut best = (far, tail / PI);
    for &(left, mass) in cells.iter().rev() {
        suffix += mass;
        if suffix / PI <= TRUST_BOUND {
            best = (left, suffix / PI);
        } else {
            break;
        }
    }
    if best.1 > TRUST_BOUND {
        return (far, best.1);
    }
    best
}

/// Remainder bound for a prescribed cutoff (used when the cutoff is forced).
fn certify_from(f: &DensityModel, n: f64, e: f64, xi_s: f64, cut: f64) -> (f64, f64) {
    let b = match decay_constant(f) {
        Some(b) if n > 2.0 => b,
        _ => return (cut, f64::INFINITY),
    };
    let far = analytic_start(b, n).max(cut);
    if far > 12.5 * XI_BUDGET {
        return (cut, f64::INFINITY);
    }
    let cells = certification_cells(f, n, e, b, xi_s.min(cut), far);
    let mass: f64 = cells.iter().filter(|c| c.0 >= cut).map(|c| c.1).sum();
    (cut, (mass + analytic_tail(b, n, far)) / PI)
}

/// Cells `(left edge, width · bound^N)` covering `[from, to]`.
fn certification_cells(f: &DensityModel, n: f64, e: f64, b: f64, from: f64, to: f64) -> Vec<(f64, f64)> {
    let delta = (from / 16.0).min(0.05);
    let count = ((to - from) / delta).ceil().max(1.0) as usize;
    let delta = (to - from) / count as f64;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let left = from + i as f64 * delta;
            let mid = left + 0.5 * delta;
            let sampled = charfn_h(f, mid).norm() + 0.5 * e * delta;
            let bound = sampled.min(b / left.sqrt()).min(1.0);
            (left, delta * (n * bound.ln()).exp())
        })
        .collect()
}

/// Angular quadrature panels on `[0, end]` for a point at squared radius `u`.
fn angle_panels(u: f64, scale: f64, end: f64) -> impl Iterator<Item = (f64, f64)> {
    let m = 2 + (1.7 * u.sqrt() / scale * end / FRAC_PI_2).ceil() as usize;
    let step = end / m as f64;
    (0..m).map(move |k| (k as f64 * step, (k + 1) as f64 * step))
}

/// Nodes per interpolation panel of [`PowerTable`].
const TABLE_ORDER: usize = 24;

/// `H_k(s) = s^{k/2−1} G_k(s)` on `[0, upper]`, with `ln G_k` interpolated on
/// Chebyshev panels. Dividing out the power leaves a smooth `G_k` for smooth
/// generators, and the logarithm keeps relative accuracy in the tails.
#[derive(Debug, Clone)]
struct PowerTable {
    power: f64,
    upper: f64,
    edges: Vec<f64>,
    /// `ln G_k` at the Chebyshev nodes of each panel; `None` where `G_k` vanishes.
    values: Vec<Option<Vec<f64>>>,
}

fn chebyshev_nodes() -> (Vec<f64>, Vec<f64>) {
    let n = TABLE_ORDER;
    (0..n)
        .map(|j| {
            let t = (2 * j + 1) as f64 * PI / (2 * n) as f64;
            (t.cos(), if j % 2 == 0 { t.sin() } else { -t.sin() })
        })
        .unzip()
}

fn table_edges(upper: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut a = 0.0;
    while a < upper {
        let width = if a < 8.0 {
            0.5
        } else if a < 32.0 {
            1.0
        } else {
            a / 16.0
        };
        a += width;
        edges.push(a);
    }
    edges
}

impl PowerTable {
    fn build(k: usize, upper: f64, h: impl Fn(f64) -> f64 + Sync) -> Self {
        let power = k as f64 / 2.0 - 1.0;
        let edges = table_edges(upper);
        let (nodes, _) = chebyshev_nodes();
        let values = edges
            .par_windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let logs: Vec<f64> = nodes
                    .iter()
                    .map(|t| {
                        let s = 0.5 * (a + b) + 0.5 * (b - a) * t;
                        h(s).ln() - power * s.ln()
                    })
                    .collect();
                logs.iter().all(|v| v.is_finite()).then_some(logs)
            })
            .collect();
        Self { power, upper: *edges.last().expect("non-empty"), edges, values }
    }

    fn eval(&self, s: f64) -> Option<f64> {
        if !(s > 0.0 && s <= self.upper) {
            return None;
        }
        let i = self.edges.partition_point(|&e| e < s).clamp(1, self.edges.len() - 1) - 1;
        let logs = self.values[i].as_ref()?;
        let (a, b) = (self.edges[i], self.edges[i + 1]);
        let t = (2.0 * s - a - b) / (b - a);
        let (nodes, weights) = chebyshev_nodes_cached();
        let (mut num, mut den) = (0.0, 0.0);
        for ((&x, &w), &v) in nodes.iter().zip(weights).zip(logs) {
            let d = t - x;
            if d == 0.0 {
                return Some((v + self.power * s.ln()).exp());
            }
            num += w * v / d;
            den += w / d;
        }
        Some((num / den + self.power * s.ln()).exp())
    }
}

fn chebyshev_nodes_cached() -> (&'static [f64], &'static [f64]) {
    static NODES: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    let (x, w) = NODES.get_or_init(chebyshev_nodes);
    (x, w)
}

/// `h^{*n}` by nested convolution integrals, with `s = u sin²φ` so that every
/// integrand is smooth:
///
/// * `h*h(u) = ½ ∫₀^{π/2} F(√u sinφ) F(√u cosφ) dφ`
/// * `h*H(u) = √u ∫₀^{π/2} F(√u sinφ) H(u cos²φ) cosφ dφ`
/// * `H_a*H_b(u) = 2u ∫₀^{π/2} H_a(u sin²φ) H_b(u cos²φ) sinφ cosφ dφ`
///
/// where `F(v) = f(v) + f(−v)`. The intermediate powers `H_k`, `k ≥ 3`, are
/// tabulated once so that each evaluation costs a single angular integral.
#[derive(Debug, Clone)]
struct RealSpace {
    f: DensityModel,
    tables: Vec<Option<PowerTable>>,
}

fn halves(n: usize) -> (usize, usize) {
    (n / 2, n - n / 2)
}

impl RealSpace {
    fn new(f: DensityModel, n: usize, upper: f64) -> Self {
        let mut needed = vec![false; n + 1];
        let mut stack = vec![n];
        while let Some(k) = stack.pop() {
            if k <= 2 {
                continue;
            }
            let (a, b) = halves(k);
            for j in [a, b] {
                if j >= 3 && !needed[j] {
                    needed[j] = true;
                    stack.push(j);
                }
            }
        }
        let mut this = Self { f, tables: vec![None; n + 1] };
        for k in 3..=n {
            if needed[k] {
                let table = PowerTable::build(k, upper, |s| this.value(k, s));
                this.tables[k] = Some(table);
            }
        }
        this
    }

    fn value(&self, k: usize, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if let Some(v) = self.tables.get(k).and_then(Option::as_ref).and_then(|t| t.eval(u)) {
            return v;
        }
        let f = &self.f;
        let even = |v: f64| f.eval(v) + f.eval(-v);
        let rule = quad::gauss_legendre(ORDER);
        let scale = f.normalization_scale().max(0.25);
        let r = u.sqrt();
        match k {
            1 => even(r) / (2.0 * r),
            2 => {
                let mut acc = 0.0;
                for (a, b) in angle_panels(u, scale, FRAC_PI_4) {
                    acc += rule.integrate(a, b, |p| even(r * p.sin()) * even(r * p.cos()));
                }
                acc
            }
            3 => {
                let mut acc = 0.0;
                for (a, b) in angle_panels(u, scale, FRAC_PI_2) {
                    acc += rule.integrate(a, b, |p| {
                        let c = p.cos();
                        even(r * p.sin()) * self.value(2, u * c * c) * c
                    });
                }
                r * acc
            }
            _ => {
                let (a, b) = halves(k);
                let (end, factor) = if a == b { (FRAC_PI_4, 2.0) } else { (FRAC_PI_2, 1.0) };
                let mut acc = 0.0;
                for (lo, hi) in angle_panels(u, scale, end) {
                    acc += rule.integrate(lo, hi, |p| {
                        let (s, c) = p.sin_cos();
                        self.value(a, u * s * s) * self.value(b, u * c * c) * s * c
                    });
                }
                factor * 2.0 * u * acc
            }
        }
    }
}

/// `θ` with `N·E_θ[V²] = u` under `f_θ ∝ f e^{−θv²}`, if one exists above the
/// integrability floor.
fn saddle(f: &DensityModel, n: f64, u: f64) -> Option<f64> {
    let mean = |theta: f64| -> f64 {
        match f.tilt_moments(theta) {
            Ok((m, s)) => n * s / m - u,
            Err(_) => f64::NAN,
        }
    };
    let floor = f.tilt_floor();
    let lo = if floor < 0.0 { floor * (1.0 - 1e-3) } else { 0.0 };
    let g_lo = mean(lo);
    if !(g_lo > 0.0) {
        return None;
    }
    let mut hi = 1.0;
    while mean(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return None;
        }
    }
    brent(mean, lo, hi, 1e-12).ok()
}

/// Values below this fraction of the peak are recomputed under tilting.
const TILT_TRIGGER: f64 = 1e-3;

/// `h^{*N}(u)` at each point.
pub fn nfold_density(model: &DensityModel, n: usize, us: &[f64]) -> Result<Vec<f64>> {
    nfold_density_with(model, n, us, &NfoldOptions::default()).map(|r| r.0)
}

/// As [`nfold_density`], also returning the cutoff certificate of the main table.
///
/// With [`Accuracy::Relative`], points where the untilted value is below
/// `10⁻³` of the peak are recomputed from the tilted generator
/// `f_θ ∝ f e^{−θv²}` with `θ` at the saddle point `N·E_θ[V²] = u`, using
/// `h^{*N}(u) = M(θ)^N e^{θu} h_θ^{*N}(u)`.
pub fn nfold_density_with(
    model: &DensityModel,
    n: usize,
    us: &[f64],
    opts: &NfoldOptions,
) -> Result<(Vec<f64>, CutoffCertificate)> {
    if n < 2 {
        return Err(Error::Precondition(format!("N must be at least 2, got {n}")));
    }
    if let Some(&bad) = us.iter().find(|u| !u.is_finite()) {
        return Err(Error::Precondition(format!("evaluation point {bad} is not finite")));
    }
    let f = model.generator();
    let e = f.expect(|x| x * x)?;
    let nf = n as f64;
    let span = us.iter().map(|u| (u - nf * e).abs()).fold(1.0, f64::max);
    let base = ConvolutionPower::new(f, n, span, opts)?;
    let mut values = base.eval_many(us);
    if opts.accuracy == Accuracy::Relative && base.is_spectral() {
        let peak = base.eval(base.center()).max(values.iter().copied().fold(0.0, f64::max));
        for (v, &u) in values.iter_mut().zip(us) {
            if u <= 0.0 || *v >= TILT_TRIGGER * peak {
                continue;
            }
            let Some(theta) = saddle(f, nf, u) else { continue };
            let (tilted, ln_m) = f.tilted(theta)?;
            let power = ConvolutionPower::new(&tilted, n, 1.0, opts)?;
            let inner = power.eval(u);
            if inner > 0.0 {
                *v = (nf * ln_m + theta * u + inner.ln()).exp();
            }
        }
    }
    Ok((values, base.certificate))
}
