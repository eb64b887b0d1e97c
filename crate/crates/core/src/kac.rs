//! Product laws restricted to Kac's sphere `S^{N−1}(√N)`.
//!
//! For a generator `f`, `F_N = f^{⊗N} / Z_N(f, √N)` on the sphere. Every
//! quantity here reduces to convolution powers of the squared-variable density
//! `h`: the `k`-particle marginal is
//! `Π_k(v) = f^{⊗k}(v) h^{*(N−k)}(N − |v|²) / h^{*N}(N)`,
//! in which all sphere-area factors have cancelled.

use std::f64::consts::PI;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::clt::{
    nfold_density_with, stable_params_for, Accuracy, ConvolutionPower, CutoffCertificate,
    NfoldOptions,
};
use crate::densities::DensityModel;
use crate::error::{Error, Result};
use crate::quad::{self, Tail};
use crate::stable::StableParams;

/// Nodes per panel for one-particle integrals.
const PANEL_ORDER: usize = 16;
/// Nodes per panel and axis for two-particle integrals.
const PAIR_ORDER: usize = 8;
/// Minimum node counts per axis.
const MIN_NODES_K1: usize = 512;
const MIN_NODES_K2: usize = 128;
/// Points of the uniform grids used for CDFs and grid densities.
pub const MARGINAL_GRID: usize = 4097;

/// `F_N dσ^N` for a generator `f`, with the convolution powers it needs prepared.
#[derive(Debug, Clone)]
pub struct SphereLaw {
    model: DensityModel,
    n: usize,
    stable: Option<StableParams>,
    h_n_at_n: f64,
    certificate: CutoffCertificate,
    /// `h^{*(N−1)}` and `h^{*(N−2)}`, where defined.
    powers: [Option<ConvolutionPower>; 2],
    opts: NfoldOptions,
    /// Quadrature nodes `(v, weight, Π₁(v), f(v))` over `[−√N, √N]`.
    first: Vec<(f64, f64, f64, f64)>,
}

impl SphereLaw {
    pub fn new(model: &DensityModel, n: usize) -> Result<Self> {
        Self::with_options(model, n, &NfoldOptions::default())
    }

    /// Marginal numerators use [`Accuracy::Absolute`] whatever `opts` says: they
    /// enter only through integrals against bounded or slowly growing weights.
    pub fn with_options(model: &DensityModel, n: usize, opts: &NfoldOptions) -> Result<Self> {
        if n < 3 {
            return Err(Error::Precondition(format!("Kac's sphere needs N >= 3, got {n}")));
        }
        let f = model.generator().clone();
        let nf = n as f64;
        let (h, cert) = nfold_density_with(&f, n, &[nf], opts)?;
        let h_n_at_n = h[0];
        if !(h_n_at_n > 0.0) {
            return Err(Error::NonPositiveDensity { value: h_n_at_n });
        }
        let e = f.expect(|x| x * x)?;
        let absolute = NfoldOptions { accuracy: Accuracy::Absolute, ..*opts };
        let power = |k: usize| -> Result<Option<ConvolutionPower>> {
            if n < k + 3 {
                return Ok(None);
            }
            let m = (n - k) as f64;
            let span = (nf - m * e).abs().max(m * e) + 1.0;
            ConvolutionPower::new(&f, n - k, span, &absolute).map(Some)
        };
        let powers = [power(1)?, power(2)?];
        let stable = stable_params_for(&f).ok();
        let mut law = Self {
            model: f,
            n,
            stable,
            h_n_at_n,
            certificate: cert,
            powers,
            opts: *opts,
            first: Vec::new(),
        };
        if law.powers[0].is_some() {
            law.first = law.first_marginal_nodes();
        }
        Ok(law)
    }

    pub fn model(&self) -> &DensityModel {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stable(&self) -> Option<&StableParams> {
        self.stable.as_ref()
    }

    /// `h^{*N}(N)`.
    pub fn h_n_at_n(&self) -> f64 {
        self.h_n_at_n
    }

    /// Cutoff certificate of the `h^{*N}(N)` evaluation.
    pub fn certificate(&self) -> &CutoffCertificate {
        &self.certificate
    }

    /// `log Z_N(f, √N)`.
    pub fn log_normalisation(&self) -> f64 {
        log_normalisation_from(self.h_n_at_n, self.n, self.n as f64)
    }

    fn radius(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    fn pi1(&self, v: f64) -> f64 {
        let rest = self.n as f64 - v * v;
        match &self.powers[0] {
            Some(p) if rest > 0.0 => self.model.eval(v) * p.eval(rest) / self.h_n_at_n,
            _ => 0.0,
        }
    }

    fn pi2(&self, v1: f64, v2: f64) -> f64 {
        let rest = self.n as f64 - v1 * v1 - v2 * v2;
        match &self.powers[1] {
            Some(p) if rest > 0.0 => {
                self.model.eval(v1) * self.model.eval(v2) * p.eval(rest) / self.h_n_at_n
            }
            _ => 0.0,
        }
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k + 3 > self.n {
            return Err(Error::Precondition(format!(
                "marginal order must satisfy 1 <= k <= N-3 = {}, got {k}",
                self.n as i64 - 3
            )));
        }
        Ok(())
    }

    /// `Π_k(F_N)(v)`; zero once `|v|² ≥ N`.
    pub fn marginal_k(&self, k: usize, v: &[f64]) -> Result<f64> {
        self.check_k(k)?;
        if v.len() != k {
            return Err(Error::Precondition(format!("expected a point in R^{k}, got {} coordinates", v.len())));
        }
        let r2: f64 = v.iter().map(|x| x * x).sum();
        let rest = self.n as f64 - r2;
        if rest <= 0.0 {
            return Ok(0.0);
        }
        let tensor: f64 = v.iter().map(|&x| self.model.eval(x)).product();
        let inner = match k {
            1 | 2 => self.powers[k - 1].as_ref().expect("order checked").eval(rest),
            _ => {
                let m = (self.n - k) as f64;
                let e = self.model.expect(|x| x * x)?;
                let absolute = NfoldOptions { accuracy: Accuracy::Absolute, ..self.opts };
                let span = (self.n as f64 - m * e).abs().max(m * e) + 1.0;
                ConvolutionPower::new(&self.model, self.n - k, span, &absolute)?.eval(rest)
            }
        };
        Ok(tensor * inner / self.h_n_at_n)
    }

    /// Nodes on `[−√N, √N]` in the variable `v = √N sin θ`, which flattens the
    /// edge factor `(N − v²)^{(N−3)/2}` carried by `h^{*(N−1)}`.
    fn first_marginal_nodes(&self) -> Vec<(f64, f64, f64, f64)> {
        let r = self.radius();
        let mut thetas: Vec<f64> = axis_edges(r).into_iter().map(|v| (v / r).clamp(-1.0, 1.0).asin()).collect();
        while (thetas.len() - 1) * PANEL_ORDER < MIN_NODES_K1 {
            thetas = refine(&thetas);
        }
        let rule = quad::gauss_legendre(PANEL_ORDER);
        let nodes: Vec<(f64, f64)> = thetas
            .windows(2)
            .flat_map(|w| {
                rule.on(w[0], w[1])
                    .map(|(t, wt)| (r * t.sin(), wt * r * t.cos()))
                    .collect::<Vec<_>>()
            })
            .collect();
        nodes
            .par_iter()
            .map(|&(v, w)| (v, w, self.pi1(v), self.model.eval(v)))
            .collect()
    }

    fn require_first(&self) -> Result<()> {
        self.check_k(1)
    }

    /// `∫ Π₁(F_N)` by the quadrature used for every one-particle integral.
    pub fn first_marginal_mass(&self) -> Result<f64> {
        self.require_first()?;
        Ok(self.first.iter().map(|n| n.1 * n.2).sum())
    }

    /// `‖Π_k(F_N) − f^{⊗k}‖₁` for `k ∈ {1, 2}`, including the mass of
    /// `f^{⊗k}` outside `[−√N, √N]^k`.
    pub fn l1_marginal_gap(&self, k: usize) -> Result<f64> {
        if !(k == 1 || k == 2) {
            return Err(Error::Precondition(format!("L1 marginal gap is computed for k in {{1, 2}}, got {k}")));
        }
        self.check_k(k)?;
        let r = self.radius();
        let outside = outside_mass(&self.model, r)?;
        if k == 1 {
            let inside: f64 = self.first.iter().map(|n| n.1 * (n.2 - n.3).abs()).sum();
            return Ok(inside + outside);
        }
        let mut edges = axis_edges(r);
        while (edges.len() - 1) * PAIR_ORDER < MIN_NODES_K2 {
            edges = refine(&edges);
        }
        let rule = quad::gauss_legendre(PAIR_ORDER);
        let axis: Vec<(f64, f64, f64)> = edges
            .windows(2)
            .flat_map(|w| rule.on(w[0], w[1]).map(|(v, wt)| (v, wt, self.model.eval(v))).collect::<Vec<_>>())
            .collect();
        let rows: Vec<f64> = axis
            .par_iter()
            .map(|&(v1, w1, f1)| {
                let mut acc = 0.0;
                for &(v2, w2, f2) in &axis {
                    acc += w2 * (self.pi2(v1, v2) - f1 * f2).abs();
                }
                w1 * acc
            })
            .collect();
        let inside: f64 = rows.iter().sum();
        // Mass of f⊗f outside the square.
        let box_mass = 1.0 - outside;
        Ok(inside + 1.0 - box_mass * box_mass)
    }

    /// `(1/N) H_N(F_N) = ∫ Π₁ log f − (1/N) log Z_N(f, √N)`.
    pub fn entropy_per_particle(&self) -> Result<f64> {
        self.require_first()?;
        let cross: f64 = self
            .first
            .iter()
            .filter(|n| n.2 != 0.0)
            .map(|n| n.1 * n.2 * self.model.ln_eval(n.0))
            .sum();
        Ok(cross - self.log_normalisation() / self.n as f64)
    }

    /// `Π₁(F_N)` on a uniform grid over `[−√N, √N]`.
    pub fn first_marginal_grid(&self, points: usize) -> Result<GridDensity> {
        self.require_first()?;
        if points < 2 {
            return Err(Error::Precondition("a grid needs at least 2 points".into()));
        }
        let r = self.radius();
        let dx = 2.0 * r / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|i| -r + i as f64 * dx).collect();
        let values = xs.par_iter().map(|&v| self.pi1(v)).collect();
        GridDensity::new(-r, dx, values)
    }

    /// `W₁(Π₁(F_N), f) = ∫ |CDF_Π − CDF_f|`; outside `[−√N, √N]` only `f` carries mass.
    pub fn w1_first_marginal(&self) -> Result<f64> {
        let grid = self.first_marginal_grid(MARGINAL_GRID)?;
        let r = self.radius();
        let f = &self.model;
        let dx = grid.dx;
        let left_mass = quad::integrate_from(|t| f.eval(-t), r, r.max(1.0), tail_of(f), 8)?;
        let mut cdf_p = 0.0;
        let mut cdf_f = left_mass;
        let mut acc = 0.0;
        let mut prev_gap = (cdf_p - cdf_f).abs();
        for i in 1..grid.values.len() {
            let x0 = grid.x0 + (i - 1) as f64 * dx;
            cdf_p += 0.5 * dx * (grid.values[i - 1] + grid.values[i]);
            cdf_f += 0.5 * dx * (f.eval(x0) + f.eval(x0 + dx));
            let gap = (cdf_p - cdf_f).abs();
            acc += 0.5 * dx * (prev_gap + gap);
            prev_gap = gap;
        }
        let below = quad::integrate_from(|t| (t - r) * f.eval(-t), r, r.max(1.0), tail_of(f), 8)?;
        let above = quad::integrate_from(|t| (t - r) * f.eval(t), r, r.max(1.0), tail_of(f), 8)?;
        Ok(acc + below + above)
    }

    /// All chaoticity diagnostics at once.
    pub fn chaos_report(&self) -> Result<ChaosReport> {
        let grid = self.first_marginal_grid(MARGINAL_GRID)?.normalized();
        let r = self.radius();
        let reference = GridDensity::from_model(&self.model, -r, grid.dx, MARGINAL_GRID)?.normalized();
        let fisher = if self.model.has_derivative() { Some(fisher_relative(&self.model)?) } else { None };
        Ok(ChaosReport {
            n: self.n,
            l1_gap_k1: self.l1_marginal_gap(1)?,
            l1_gap_k2: self.l1_marginal_gap(2)?,
            entropy_per_particle: self.entropy_per_particle()?,
            entropy_target: entropy_target(&self.model)?,
            w1_first_marginal: self.w1_first_marginal()?,
            pinsker_margin: pinsker_margin(&grid, &reference)?,
            fisher_relative: fisher,
        })
    }
}

/// Panel edges on `[−r, r]`: quarter steps up to 4, then growing by 1.25.
fn axis_edges(r: f64) -> Vec<f64> {
    let mut pos = vec![0.0];
    let mut a: f64 = 0.0;
    while a < r {
        a = if a < 4.0 { a + 0.25 } else { a * 1.25 }.min(r);
        pos.push(a);
    }
    let mut edges: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
    edges.extend_from_slice(&pos[1..]);
    edges
}

fn refine(edges: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * edges.len());
    for w in edges.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*edges.last().expect("non-empty"));
    out
}

fn tail_of(f: &DensityModel) -> Tail {
    if f.heavy_tailed() {
        Tail::PowerLaw
    } else {
        Tail::Negligible
    }
}

/// `∫_{|x| > r} f`.
fn outside_mass(f: &DensityModel, r: f64) -> Result<f64> {
    quad::integrate_from(|t| f.eval(t) + f.eval(-t), r, r.max(1.0), tail_of(f), 8)
}

fn log_sphere_area(n: usize) -> f64 {
    let nf = n as f64;
    2f64.ln() + 0.5 * nf * PI.ln() - ln_gamma(0.5 * nf)
}

fn log_normalisation_from(h: f64, n: usize, u: f64) -> f64 {
    2f64.ln() + h.ln() - log_sphere_area(n) - 0.5 * (n as f64 - 2.0) * u.ln()
}

/// `log Z_N(f, √u) = log 2 + log h^{*N}(u) − log|S^{N−1}| − ((N−2)/2) log u`.
pub fn log_normalisation(model: &DensityModel, n: usize, u: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Precondition(format!("N must be at least 3, got {n}")));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::Precondition(format!("radius squared must be positive, got {u}")));
    }
    let (h, _) = nfold_density_with(model, n, &[u], &NfoldOptions::default())?;
    if !(h[0] > 0.0) {
        return Err(Error::NonPositiveDensity { value: h[0] });
    }
    Ok(log_normalisation_from(h[0], n, u))
}

fn check_unit_energy(model: &DensityModel) -> Result<()> {
    let e = model.generator().expect(|x| x * x)?;
    if (e - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "model `{}` has second moment {e}, expected 1",
            model.name()
        )));
    }
    Ok(())
}

fn f_log_f(f: &DensityModel, x: f64) -> f64 {
    let l = f.ln_eval(x);
    if l.is_finite() {
        l.exp() * l
    } else {
        0.0
    }
}

/// `H(f|γ) = ∫ f log f + (log 2π + 1)/2` for a unit-energy `f`.
pub fn entropy_target(model: &DensityModel) -> Result<f64> {
    let f = model.generator();
    check_unit_energy(f)?;
    Ok(f.integrate_line(|x| f_log_f(f, x))? + 0.5 * ((2.0 * PI).ln() + 1.0))
}

/// Relative entropy `H(g|f) = ∫ g log(g/f)`.
pub fn relative_entropy_models(gen: &DensityModel, base: &DensityModel) -> Result<f64> {
    let (g, f) = (gen.generator(), base.generator());
    let infinite = std::cell::Cell::new(None);
    let value = g.integrate_line(|x| {
        let lg = g.ln_eval(x);
        if !lg.is_finite() {
            return 0.0;
        }
        let lf = f.ln_eval(x);
        if !lf.is_finite() {
            if infinite.get().is_none() {
                infinite.set(Some(x));
            }
            return 0.0;
        }
        lg.exp() * (lg - lf)
    })?;
    match infinite.get() {
        Some(x) => Err(Error::InfiniteRelativeEntropy { x }),
        None => Ok(value),
    }
}

/// `(1/N) H_N(G_N dσ^N | F_N dσ^N)` together with its limit `H(g|f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossEntropy {
    pub n: usize,
    pub value: f64,
    pub target: f64,
}

/// `∫ Π₁(G_N) log(g/f) + (1/N)(log Z_N(f, √N) − log Z_N(g, √N))`.
pub fn cross_entropy_per_particle(gen: &DensityModel, base: &DensityModel, n: usize) -> Result<CrossEntropy> {
    let law_g = SphereLaw::new(gen, n)?;
    law_g.require_first()?;
    let (g, f) = (law_g.model(), base.generator());
    let mut cross = 0.0;
    for &(v, w, p, _) in &law_g.first {
        if p == 0.0 {
            continue;
        }
        let lf = f.ln_eval(v);
        if !lf.is_finite() {
            return Err(Error::InfiniteRelativeEntropy { x: v });
        }
        cross += w * p * (g.ln_eval(v) - lf);
    }
    let log_zf = if same_law(g, f) {
        law_g.log_normalisation()
    } else {
        log_normalisation(f, n, n as f64)?
    };
    let value = cross + (log_zf - law_g.log_normalisation()) / n as f64;
    Ok(CrossEntropy { n, value, target: relative_entropy_models(g, f)? })
}

fn same_law(a: &DensityModel, b: &DensityModel) -> bool {
    a.name() == b.name()
}

/// `I(f|γ) = ∫ (f′/f + x)² f` over the region `f > 10⁻³⁰⁰`.
pub fn fisher_relative(model: &DensityModel) -> Result<f64> {
    fisher_integral(model, |score, x| {
        let s = score + x;
        s * s
    })
}

/// `I(f) = ∫ f′² / f`.
pub fn fisher_information(model: &DensityModel) -> Result<f64> {
    fisher_integral(model, |score, _| score * score)
}

fn fisher_integral(model: &DensityModel, weight: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let f = model.generator();
    if !f.has_derivative() {
        return Err(Error::MissingDerivative(format!(
            "model `{}` has no derivative; supply one with `with_derivative`",
            f.name()
        )));
    }
    f.integrate_line(|x| {
        let fx = f.eval(x);
        if fx <= 1e-300 {
            return 0.0;
        }
        let d = f.deriv(x).expect("derivative present");
        weight(d / fx, x) * fx
    })
}

/// Distances between `F_N`'s marginals and the tensor powers of `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosReport {
    pub n: usize,
    pub l1_gap_k1: f64,
    pub l1_gap_k2: f64,
    pub entropy_per_particle: f64,
    pub entropy_target: f64,
    pub w1_first_marginal: f64,
    pub pinsker_margin: f64,
    /// `None` when the model has no derivative.
    pub fisher_relative: Option<f64>,
}

/// Samples of a density on a uniform grid `x0 + i·dx`. Integrals use the
/// trapezoid rule; negative samples are clamped to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0 && x0.is_finite()) {
            return Err(Error::Precondition(format!("grid needs dx > 0 and finite origin, got ({x0}, {dx})")));
        }
        if values.len() < 2 {
            return Err(Error::Precondition("a grid needs at least 2 points".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("grid value {bad} is not finite")));
        }
        let values = values.into_iter().map(|v| v.max(0.0)).collect();
        Ok(Self { x0, dx, values })
    }

    pub fn from_fn(x0: f64, dx: f64, points: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(x0, dx, (0..points).map(|i| g(x0 + i as f64 * dx)).collect())
    }

    pub fn from_model(model: &DensityModel, x0: f64, dx: f64, points: usize) -> Result<Self> {
        Self::from_fn(x0, dx, points, |x| model.eval(x))
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.x0 + i as f64 * self.dx)
    }

    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.values.len() {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// Rescaled to unit trapezoid mass.
    pub fn normalized(&self) -> Self {
        let m = self.mass();
        Self { values: self.values.iter().map(|v| v / m).collect(), ..*self }
    }

    /// Point masses `w_i p_i`, normalised to sum to one.
    fn masses(&self) -> Vec<f64> {
        let m = self.mass();
        self.values.iter().enumerate().map(|(i, v)| self.weight(i) * v / m).collect()
    }
}

fn check_pair(p: &GridDensity, q: &GridDensity) -> Result<()> {
    let same = p.values.len() == q.values.len()
        && (p.x0 - q.x0).abs() <= 1e-12 * p.x0.abs().max(1.0)
        && (p.dx - q.dx).abs() <= 1e-12 * p.dx;
    if !same {
        return Err(Error::Precondition("grid densities must share their grid".into()));
    }
    for (name, g) in [("first", p), ("second", q)] {
        let m = g.mass();
        if (m - 1.0).abs() > 1e-6 {
            return Err(Error::Precondition(format!("{name} grid density has mass {m}, expected 1 within 1e-6")));
        }
    }
    Ok(())
}

/// `H(p|q) = ∫ p log(p/q)` on a shared grid.
pub fn relative_entropy(p: &GridDensity, q: &GridDensity) -> Result<f64> {
    check_pair(p, q)?;
    let (mp, mq) = (p.masses(), q.masses());
    let mut h = 0.0;
    for (i, (&a, &b)) in mp.iter().zip(&mq).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::InfiniteRelativeEntropy { x: p.x0 + i as f64 * p.dx });
        }
        h += a * (a / b).ln();
    }
    Ok(h.max(0.0))
}

/// `√(2H(p|q)) − TV(p, q)` with `TV = ½∫|p − q|`.
pub fn pinsker_margin(p: &GridDensity, q: &GridDensity) -> Result<f64> {
    let h = relative_entropy(p, q)?;
    let (mp, mq) = (p.masses(), q.masses());
    let tv = 0.5 * mp.iter().zip(&mq).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok((2.0 * h).sqrt() - tv)
}

/// `∫ φ dμ − log ∫ e^φ dν`, a lower bound for `H(μ|ν)`.
pub fn duality_lower_bound(mu: &GridDensity, nu: &GridDensity, phi: impl Fn(f64) -> f64) -> Result<f64> {
    check_pair(mu, nu)?;
    let phis: Vec<f64> = mu.points().map(phi).collect();
    if let Some(bad) = phis.iter().find(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!("test function value {bad} is not finite")));
    }
    let (mm, mn) = (mu.masses(), nu.masses());
    let mean: f64 = mm.iter().zip(&phis).map(|(m, p)| m * p).sum();
    let top = phis
        .iter()
        .zip(&mn)
        .filter(|(_, &m)| m > 0.0)
        .map(|(p, _)| *p)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::Precondition("reference grid density has no mass".into()));
    }
    let sum: f64 = phis.iter().zip(&mn).map(|(p, m)| m * (p - top).exp()).sum();
    Ok(mean - (top + sum.ln()))
}

/// `W₁(p, q) = ∫ |CDF_p − CDF_q|` on a shared grid.
pub fn wasserstein1(p: &GridDensity, q: &GridDensity) -> Result<f64> {
    check_pair(p, q)?;
    let (mp, mq) = (p.masses(), q.masses());
    let mut gap = 0.0;
    let mut total = 0.0;
    for (a, b) in mp.iter().zip(&mq).take(mp.len() - 1) {
        gap += a - b;
        total += gap.abs() * p.dx;
    }
    Ok(total)
}
