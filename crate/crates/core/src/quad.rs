//! Quadrature kernels shared by every module.
//!
//! Everything here works on plain closures. The pieces are:
//!
//! * [`Rule`]: Gauss–Legendre rules, cached per order.
//! * [`adaptive_gk21`]: globally adaptive Gauss–Kronrod (21 point) for complex integrands.
//! * [`filon_panel`]: Filon-type panel rule for `∫ a(ξ) e^{iωξ} dξ` with smooth `a`,
//!   exact for polynomial amplitudes of degree `< n` whatever `ω` is.
//! * [`integrate_half_line`]: dyadic panels out to very large arguments plus a
//!   power-law tail estimate, used for heavy-tailed densities.

use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`, plus Legendre polynomial values at the nodes
/// (used by the Filon panels).
#[derive(Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `legendre[j][i] = P_j(nodes[i])`
    legendre: Vec<Vec<f64>>,
}

impl Rule {
    fn build(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let legendre = (0..n)
            .map(|j| nodes.iter().map(|&t| legendre_p(j, t)).collect())
            .collect();
        Self { nodes, weights, legendre }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Maps the rule onto `[a, b]`, yielding `(x, w)` pairs.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (m + h * t, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(
        &self,
        a: f64,
        b: f64,
        mut f: F,
    ) -> Complex64 {
        self.on(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn legendre_p(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        _ => legendre_with_derivative(n, x).0,
    }
}

/// Cached Gauss–Legendre rule of order `n`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(Rule::build(n)))
        .clone()
}

// Kronrod extension of the 10-point Gauss rule (QUADPACK qk21 tables).
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_460,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

fn gk21<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK21[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    for j in 0..10 {
        let dx = h * XGK21[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK21[j];
        if j % 2 == 1 {
            gauss += s * WG10[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration: value and error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

/// Globally adaptive 21-point Gauss–Kronrod on `[a, b]`, bisecting the worst
/// segment until `error <= max(abs_tol, rel_tol * |value|)`.
pub fn adaptive_gk21<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Estimate> {
    let (value, err) = gk21(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    let mut segments = 1;
    while total_err > abs_tol.max(rel_tol * total.norm()) {
        if segments >= max_segments {
            return Err(Error::NonConvergence { residual: total_err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval no longer splittable in double precision.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
        segments += 1;
    }
    // Re-add in a fixed order to avoid drift from the running sums.
    let mut parts: Vec<Segment> = heap.into_vec();
    parts.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = parts.iter().map(|s| s.value).sum();
    let error = parts.iter().map(|s| s.err).sum();
    Ok(Estimate { value, error })
}

/// Real-valued convenience wrapper around [`adaptive_gk21`].
pub fn adaptive_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let est = adaptive_gk21(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol, 4000)?;
    Ok((est.value.re, est.error))
}

/// Spherical Bessel functions `j_0(k) .. j_{n-1}(k)` for `k > 0`.
fn spherical_bessel(n: usize, k: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let j0 = k.sin() / k;
    if n == 0 {
        return out;
    }
    out[0] = j0;
    if n == 1 {
        return out;
    }
    let j1 = k.sin() / (k * k) - k.cos() / k;
    if k > n as f64 {
        out[1] = j1;
        for l in 1..n - 1 {
            out[l + 1] = (2 * l + 1) as f64 / k * out[l] - out[l - 1];
        }
        return out;
    }
    // Miller's downward recurrence, normalised against j_0 or j_1.
    let start = n + 20 + k as usize;
    let mut jp1 = 0.0;
    let mut j = 1e-280;
    let mut tmp = vec![0.0; start + 1];
    tmp[start] = j;
    for l in (1..=start).rev() {
        let jm1 = (2 * l + 1) as f64 / k * j - jp1;
        jp1 = j;
        j = jm1;
        tmp[l - 1] = j;
        if j.abs() > 1e250 {
            for v in tmp.iter_mut().skip(l - 1) {
                *v *= 1e-250;
            }
            j *= 1e-250;
            jp1 *= 1e-250;
        }
    }
    let scale = if j0.abs() >= j1.abs() { j0 / tmp[0] } else { j1 / tmp[1] };
    for l in 0..n {
        out[l] = tmp[l] * scale;
    }
    out
}

/// Legendre coefficients `c_l` of a sampled amplitude, `a(t) ≈ Σ c_l P_l(t)` on `[-1, 1]`.
pub fn legendre_coefficients(rule: &Rule, amp: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(amp.len(), rule.len());
    (0..rule.len())
        .map(|l| {
            rule.legendre[l]
                .iter()
                .zip(&rule.weights)
                .zip(amp)
                .map(|((&p, &w), &v)| v * (w * p))
                .sum::<Complex64>()
                * (0.5 * (2 * l + 1) as f64)
        })
        .collect()
}

/// `∫_a^b a(ξ) e^{iωξ} dξ` for an amplitude given by its Legendre coefficients on
/// `[a, b]`. Each basis function is integrated exactly against the exponential,
/// `∫ P_l(t) e^{ikt} dt = 2 iˡ j_l(k)`, so the result does not degrade as `ω` grows.
pub fn filon_from_coefficients(coeffs: &[Complex64], a: f64, b: f64, omega: f64) -> Complex64 {
    let n = coeffs.len();
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let k = omega * h;
    let bessel = if k.abs() < 1e-8 {
        let mut v = vec![0.0; n];
        if n > 0 {
            v[0] = 1.0;
        }
        v
    } else {
        spherical_bessel(n, k.abs())
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ipow = Complex64::new(1.0, 0.0);
    for (l, c) in coeffs.iter().enumerate() {
        // j_l(-k) = (-1)^l j_l(k)
        let jl = if k < 0.0 && l % 2 == 1 { -bessel[l] } else { bessel[l] };
        acc += c * ipow * (2.0 * jl);
        ipow *= Complex64::new(0.0, 1.0);
    }
    acc * Complex64::from_polar(h, omega * m)
}

/// Filon-type panel: `∫_a^b a(ξ) e^{iωξ} dξ` where `amp[i]` is the amplitude at
/// the nodes of `rule` mapped to `[a, b]`; exact for polynomial amplitudes of
/// degree below the rule order, whatever `ω` is.
pub fn filon_panel(rule: &Rule, amp: &[Complex64], a: f64, b: f64, omega: f64) -> Complex64 {
    filon_from_coefficients(&legendre_coefficients(rule, amp), a, b, omega)
}

/// How the integrand behaves beyond the last panel of [`integrate_half_line`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Light tail: stop once panels stop contributing.
    Negligible,
    /// Integrand decays like `x^{-q}` with `q > 1`; the remainder past the last
    /// panel is estimated as `X g(X) / (q - 1)` with `q` measured from the
    /// last two panel endpoints.
    PowerLaw,
}

/// `∫_{x0}^∞ g(x) dx` for `x0 >= 0` over Gauss–Legendre panels of doubling width.
///
/// The first panel is `[x0, x0 + max(x0, 1)]`, subdivided into `inner` pieces;
/// each later panel is twice as wide as the one before.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(
    g: F,
    x0: f64,
    tail: Tail,
    inner: usize,
) -> Result<f64> {
    integrate_from(g, x0, x0.max(1.0), tail, inner)
}

/// As [`integrate_half_line`] with an explicit width for the first panel.
pub fn integrate_from<F: FnMut(f64) -> f64>(
    mut g: F,
    x0: f64,
    width: f64,
    tail: Tail,
    inner: usize,
) -> Result<f64> {
    let rule = gauss_legendre(32);
    let mut total = 0.0;
    let first = x0 + width;
    let inner = inner.max(1);
    let step = width / inner as f64;
    for k in 0..inner {
        let a = x0 + k as f64 * step;
        total += rule.integrate(a, a + step, &mut g);
    }
    let mut a = first;
    let mut w = width;
    let mut quiet = 0;
    for _ in 0..90 {
        let b = a + w;
        w *= 2.0;
        let part = rule.integrate(a, b, &mut g);
        total += part;
        a = b;
        match tail {
            Tail::Negligible => {
                let edge = (a * g(a)).abs();
                if part.abs() <= 1e-18 * total.abs().max(1e-300) && edge <= 1e-18 * total.abs().max(1e-300) {
                    quiet += 1;
                    if quiet >= 2 {
                        return Ok(total);
                    }
                } else {
                    quiet = 0;
                }
            }
            Tail::PowerLaw => {
                if a - x0 >= 1.0e12 * width && a >= 1.0e12 * x0 {
                    let ga = g(a);
                    let gh = g(0.5 * a);
                    if ga == 0.0 {
                        return Ok(total);
                    }
                    let q = (gh / ga).abs().log2();
                    if q <= 1.0 + 1e-3 {
                        return Err(Error::NonConvergence { residual: (a * ga).abs() });
                    }
                    return Ok(total + a * ga / (q - 1.0));
                }
            }
        }
    }
    match tail {
        Tail::Negligible => Err(Error::NonConvergence { residual: (a * g(a)).abs() }),
        Tail::PowerLaw => Ok(total),
    }
}

/// Bracketed root of a continuous function by bisection refined with
/// inverse quadratic steps (Brent).
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Precondition(format!(
            "root not bracketed on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::NonConvergence { residual: fb.abs() })
}
