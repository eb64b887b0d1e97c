use rayon::prelude::*;

use levy_kac::clt::{
    clt_sup_error_with, fda_order_check, highfreq_gap, lowfreq_envelope, omega, source_law_for,
    stable_params_for, CltOptions, ConvergenceRecord, ConvolutionPower, NfoldOptions, SUP_WINDOW,
};
use levy_kac::{
    cross_entropy_per_particle, entropy_target, exponent_from_tail_with, fisher_relative, h_of,
    moments, ChaosReport, CosineConvention, DensityModel, Error, Moment, SphereLaw, StableDensity,
    StableParams,
};

use crate::config::ExperimentConfig;
use crate::output::{flag, num, Table};
use crate::CliError;

pub const DEFAULT_FDA_BETAS: [f64; 4] = [1.0, 0.3, 0.1, 0.03];
const PROFILE_POINTS: usize = 401;

fn nfold_options(cfg: &ExperimentConfig) -> NfoldOptions {
    NfoldOptions { tau: cfg.tau, force: cfg.force_cutoff, ..NfoldOptions::default() }
}

fn clt_options(cfg: &ExperimentConfig) -> CltOptions {
    let base = CltOptions::default();
    CltOptions {
        grid_points: cfg.grid_points(),
        nfold: NfoldOptions { tau: cfg.tau, force: cfg.force_cutoff, ..base.nfold },
    }
}

fn require_heavy(model: &DensityModel) -> Result<(), CliError> {
    if model.heavy_tailed() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("model `{}` has no heavy tail", model.name())).into())
    }
}

/// Runs `job` on every N in parallel; results come back in the order of `ns`.
fn per_n<T: Send>(ns: &[usize], job: impl Fn(usize) -> levy_kac::Result<T> + Sync) -> Result<Vec<T>, CliError> {
    let out: levy_kac::Result<Vec<T>> = ns.par_iter().map(|&n| job(n)).collect();
    Ok(out?)
}

pub fn density_info(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let model = cfg.density_model()?;
    let mut t = Table::new("density_info", &["quantity", "value"]);
    let mut put = |k: &str, v: f64| t.push(vec![k.to_string(), num(v)]);
    let m = moments(&model)?;
    put("mass", m.mass);
    put("mean", m.mean);
    put("second_moment", m.second_moment);
    put(
        "fourth_moment",
        match m.fourth_moment {
            Moment::Finite(v) => v,
            Moment::Infinite => f64::INFINITY,
        },
    );
    put("density_at_zero", model.eval(0.0));
    if let Some(tail) = model.analytic_tail() {
        put("tail_d", tail.d);
        put("tail_alpha", tail.alpha);
    }
    if model.heavy_tailed() {
        let src = source_law_for(&model)?;
        let p = stable_params_for(&model)?;
        put("c_s", src.c_s);
        put("stable_alpha", p.alpha);
        put("stable_sigma", p.sigma);
        put("stable_beta", p.beta);
        let h = h_of(&model);
        put("lowfreq_beta0", lowfreq_envelope(&h, &p)?);
        put("highfreq_gap_at_0.5", highfreq_gap(&h, 0.5)?);
    }
    if model.is_unit_energy() {
        put("entropy_target", entropy_target(&model)?);
    }
    if model.has_derivative() {
        put("fisher_relative", fisher_relative(&model)?);
    }
    Ok(vec![t])
}

pub fn stable_density(alpha: f64, sigma: f64, beta: f64, xs: &[f64]) -> Result<Vec<Table>, CliError> {
    let d = StableDensity::new(StableParams::new(sigma, alpha, beta)?)?;
    let mut t = Table::new("stable_density", &["x", "density"]);
    let values: Vec<f64> = xs.par_iter().map(|&x| d.density(x)).collect();
    for (x, v) in xs.iter().zip(values) {
        t.push(vec![num(*x), num(v)]);
    }
    Ok(vec![t])
}

fn clt_records(
    cfg: &ExperimentConfig,
    model: &DensityModel,
    params: &StableParams,
    opts: &CltOptions,
) -> Result<Vec<ConvergenceRecord>, CliError> {
    per_n(cfg.require_n()?, |n| clt_sup_error_with(model, n, params, opts))
}

fn clt_table(records: &[ConvergenceRecord]) -> Table {
    let mut t = Table::new("clt", &["N", "sup_err", "gamma0_ratio", "xi_max", "beta_N", "trusted"]);
    for r in records {
        t.push(vec![
            r.n.to_string(),
            num(r.sup_err),
            num(r.gamma0_ratio),
            num(r.xi_max),
            num(r.beta_n),
            r.trusted.to_string(),
        ]);
    }
    t
}

/// Scaled `h^{*N}` next to the stable density, for plotting.
fn clt_profile(
    cfg: &ExperimentConfig,
    model: &DensityModel,
    params: &StableParams,
    opts: &CltOptions,
) -> Result<Table, CliError> {
    let f = model.generator();
    let e = f.expect(|x| x * x)?;
    let stable = StableDensity::new(*params)?;
    let (lo, hi) = SUP_WINDOW;
    let xs: Vec<f64> = (0..PROFILE_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (PROFILE_POINTS - 1) as f64)
        .collect();
    let columns = per_n(cfg.require_n()?, |n| {
        let nf = n as f64;
        let scale = nf.powf(1.0 / params.alpha);
        let power = ConvolutionPower::new(f, n, scale * lo.abs().max(hi), &opts.nfold)?;
        Ok(xs.iter().map(|&x| scale * power.eval(nf * e + scale * x)).collect::<Vec<_>>())
    })?;
    let mut t = Table::new("clt_profile", &["N", "x", "scaled_density", "stable_density"]);
    for (n, col) in cfg.n_values.iter().zip(columns) {
        for (x, v) in xs.iter().zip(col) {
            t.push(vec![n.to_string(), num(*x), num(v), num(stable.density(*x))]);
        }
    }
    Ok(t)
}

/// Local limit errors. The stable parameters are certified against the
/// low-frequency envelope before any convolution power is computed.
pub fn clt(cfg: &ExperimentConfig, convention: CosineConvention) -> Result<Vec<Table>, CliError> {
    let model = cfg.density_model()?;
    require_heavy(&model)?;
    cfg.require_n()?;
    let params = exponent_from_tail_with(&source_law_for(&model)?, convention);
    lowfreq_envelope(&h_of(&model), &params)?;
    let opts = clt_options(cfg);
    let records = clt_records(cfg, &model, &params, &opts)?;
    let mut tables = vec![clt_table(&records)];
    if cfg.out_dir.is_some() {
        tables.push(clt_profile(cfg, &model, &params, &opts)?);
    }
    Ok(tables)
}

pub struct MarginalArgs {
    pub k: usize,
    pub points: usize,
    pub v_max: f64,
    pub v1: f64,
}

/// `Π₁(v)` against `f(v)`, or `Π₂(v1, v)` against `f(v1) f(v)`, on a uniform grid.
pub fn marginal(cfg: &ExperimentConfig, args: &MarginalArgs) -> Result<Vec<Table>, CliError> {
    let model = cfg.density_model()?;
    if !(args.k == 1 || args.k == 2) {
        return Err(CliError::Usage(format!("k must be 1 or 2, got {}", args.k)));
    }
    if args.points < 2 || !(args.v_max > 0.0) {
        return Err(CliError::Usage("need at least two points and a positive v-max".into()));
    }
    let opts = nfold_options(cfg);
    let columns = per_n(cfg.require_n()?, |n| {
        let law = SphereLaw::with_options(&model, n, &opts)?;
        let r = args.v_max.min((n as f64).sqrt());
        let rows: levy_kac::Result<Vec<(f64, f64, f64)>> = (0..args.points)
            .into_par_iter()
            .map(|i| {
                let v = -r + 2.0 * r * i as f64 / (args.points - 1) as f64;
                if args.k == 1 {
                    Ok((v, law.marginal_k(1, &[v])?, model.eval(v)))
                } else {
                    Ok((v, law.marginal_k(2, &[args.v1, v])?, model.eval(args.v1) * model.eval(v)))
                }
            })
            .collect();
        rows
    })?;
    let mut t = Table::new("marginal", &["N", "v", "marginal", "product"]);
    for (n, rows) in cfg.n_values.iter().zip(columns) {
        for (v, pi, prod) in rows {
            t.push(vec![n.to_string(), num(v), num(pi), num(prod)]);
        }
    }
    Ok(vec![t])
}

fn chaos_reports(cfg: &ExperimentConfig, model: &DensityModel, opts: &NfoldOptions) -> Result<Vec<ChaosReport>, CliError> {
    per_n(cfg.require_n()?, |n| SphereLaw::with_options(model, n, opts)?.chaos_report())
}

fn chaos_table(reports: &[ChaosReport]) -> Table {
    let mut t = Table::new(
        "chaos",
        &["N", "l1_k1", "l1_k2", "entropy_pp", "entropy_target", "w1", "pinsker_margin"],
    );
    for r in reports {
        t.push(vec![
            r.n.to_string(),
            num(r.l1_gap_k1),
            num(r.l1_gap_k2),
            num(r.entropy_per_particle),
            num(r.entropy_target),
            num(r.w1_first_marginal),
            num(r.pinsker_margin),
        ]);
    }
    t
}

pub fn chaos(cfg: &ExperimentConfig) -> Result<Vec<Table>, CliError> {
    let model = cfg.density_model()?;
    Ok(vec![chaos_table(&chaos_reports(cfg, &model, &nfold_options(cfg))?)])
}

pub fn highfreq(cfg: &ExperimentConfig, betas: &[f64]) -> Result<Vec<Table>, CliError> {
    let h = h_of(&cfg.density_model()?);
    let etas: levy_kac::Result<Vec<f64>> = betas.par_iter().map(|&b| highfreq_gap(&h, b)).collect();
    let mut t = Table::new("highfreq", &["beta", "eta"]);
    for (b, eta) in betas.iter().zip(etas?) {
        t.push(vec![num(*b), num(eta)]);
    }
    Ok(vec![t])
}

pub struct FdaArgs {
    pub betas: Vec<f64>,
    pub sigma_scale: f64,
    pub delta: f64,
    pub x_max: f64,
}

fn fda_omegas(model: &DensityModel, params: &StableParams, betas: &[f64]) -> Result<Vec<f64>, CliError> {
    let h = h_of(model);
    let out: levy_kac::Result<Vec<f64>> = betas.par_iter().map(|&b| omega(&h, params, b).map(|p| p.omega)).collect();
    Ok(out?)
}

fn fda_table(betas: &[f64], omegas: &[f64]) -> Table {
    let mut t = Table::new("fda", &["beta", "omega"]);
    for (b, w) in betas.iter().zip(omegas) {
        t.push(vec![num(*b), num(*w)]);
    }
    t
}

/// `ω_η(β)` at the requested β, optionally with a rescaled σ as a negative
/// control. With an output directory, the weighted tail check is written too.
pub fn fda(cfg: &ExperimentConfig, args: &FdaArgs) -> Result<Vec<Table>, CliError> {
    let model = cfg.density_model()?;
    require_heavy(&model)?;
    let p = stable_params_for(&model)?;
    let params = StableParams::new(p.sigma * args.sigma_scale, p.alpha, p.beta)?;
    let omegas = fda_omegas(&model, &params, &args.betas)?;
    let mut tables = vec![fda_table(&args.betas, &omegas)];
    if cfg.out_dir.is_some() {
        let r = fda_order_check(&h_of(&model), &params, args.delta, args.x_max)?;
        let mut t = Table::new("fda_order", &["delta", "x_max", "integral", "decay_exponent", "finite_assessed"]);
        t.push(vec![num(r.delta), num(r.x_max), num(r.integral), num(r.decay_exponent), r.finite_assessed.to_string()]);
        tables.push(t);
    }
    Ok(tables)
}

pub fn cross_entropy(cfg: &ExperimentConfig, base: &str) -> Result<Vec<Table>, CliError> {
    let gen = cfg.density_model()?;
    let base = DensityModel::parse(base)?;
    let values = per_n(cfg.require_n()?, |n| cross_entropy_per_particle(&gen, &base, n))?;
    let mut t = Table::new("cross_entropy", &["N", "value", "target"]);
    for c in values {
        t.push(vec![c.n.to_string(), num(c.value), num(c.target)]);
    }
    Ok(vec![t])
}

/// Outcome of a sweep: its tables and whether every record was trusted.
pub struct Sweep {
    pub tables: Vec<Table>,
    pub all_trusted: bool,
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Errors indistinguishable from zero count as converged outright.
const EXACT: f64 = 1e-6;

fn converging(errs: &[f64]) -> bool {
    errs.iter().all(|e| e.abs() <= EXACT) || strictly_decreasing(errs)
}

fn at_n<T: Copy>(ns: &[usize], values: &[T], n: usize) -> Option<T> {
    ns.iter().position(|&m| m == n).map(|i| values[i])
}

/// Pass/fail for each check that the sweep's data can decide; `NA` when the
/// N the check refers to was not part of the sweep.
fn criteria(ns: &[usize], clt: &[ConvergenceRecord], chaos: &[ChaosReport], omegas: &[f64]) -> Vec<(&'static str, String)> {
    let na = || "NA".to_string();
    let trusted = clt.iter().all(|r| r.trusted);
    let sup: Vec<f64> = clt.iter().map(|r| r.sup_err).collect();
    let clt_ok = trusted && strictly_decreasing(&sup) && at_n(ns, &sup, 1024).is_none_or(|e| e < 0.05);

    let ratio: Vec<f64> = clt.iter().map(|r| r.gamma0_ratio).collect();
    let norm = match at_n(ns, &ratio, 1024) {
        Some(g) => flag(trusted && (0.95..=1.05).contains(&g)),
        None => na(),
    };

    let ent_ns: Vec<usize> = ns.iter().copied().filter(|&n| n >= 64).collect();
    let ent_err: Vec<f64> = chaos
        .iter()
        .filter(|r| r.n >= 64)
        .map(|r| (r.entropy_per_particle - r.entropy_target).abs())
        .collect();
    let entropic = if ent_err.is_empty() {
        na()
    } else {
        flag(converging(&ent_err) && at_n(&ent_ns, &ent_err, 1024).is_none_or(|e| e < 0.02))
    };

    let l1: Vec<f64> = chaos.iter().map(|r| r.l1_gap_k1).collect();
    let l2: Vec<f64> = chaos.iter().map(|r| r.l1_gap_k2).collect();
    let marginal = converging(&l1)
        && at_n(ns, &l1, 1024).is_none_or(|e| e < 0.02)
        && at_n(ns, &l2, 256).is_none_or(|e| e < 0.05);

    vec![
        ("clt_convergence", flag(clt_ok)),
        ("normalisation", norm),
        ("entropic_chaos", entropic),
        ("marginal_chaos", flag(marginal)),
        ("fda_remainder", flag(strictly_decreasing(omegas))),
    ]
}

/// clt, chaos and fda for every N, merged into `summary.csv`.
///
/// Cutoffs are always forced here so that an uncertified record appears as a
/// failed row instead of aborting the sweep.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Sweep, CliError> {
    let model = cfg.density_model()?;
    require_heavy(&model)?;
    let ns = cfg.require_n()?.to_vec();
    let forced = ExperimentConfig { force_cutoff: true, ..cfg.clone() };
    let params = stable_params_for(&model)?;
    let clt = clt_records(&forced, &model, &params, &clt_options(&forced))?;
    let chaos = chaos_reports(&forced, &model, &nfold_options(&forced))?;
    let omegas = fda_omegas(&model, &params, &DEFAULT_FDA_BETAS)?;
    let flags = criteria(&ns, &clt, &chaos, &omegas);

    let mut header = vec![
        "N", "sup_err", "gamma0_ratio", "trusted", "l1_k1", "l1_k2", "entropy_pp", "entropy_target", "w1",
        "pinsker_margin", "row_status",
    ];
    header.extend(flags.iter().map(|(k, _)| *k));
    let mut summary = Table::new("summary", &header);
    for (c, h) in clt.iter().zip(&chaos) {
        let mut row = vec![
            c.n.to_string(),
            num(c.sup_err),
            num(c.gamma0_ratio),
            c.trusted.to_string(),
            num(h.l1_gap_k1),
            num(h.l1_gap_k2),
            num(h.entropy_per_particle),
            num(h.entropy_target),
            num(h.w1_first_marginal),
            num(h.pinsker_margin),
            flag(c.trusted),
        ];
        row.extend(flags.iter().map(|(_, v)| v.clone()));
        summary.push(row);
    }
    Ok(Sweep {
        tables: vec![summary, clt_table(&clt), chaos_table(&chaos), fda_table(&DEFAULT_FDA_BETAS, &omegas)],
        all_trusted: clt.iter().all(|r| r.trusted),
    })
}
