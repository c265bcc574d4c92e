//! One recipe per subcommand. Each returns typed results together with the
//! reports it writes, so tests can inspect numbers without parsing files.

use heatkernel::bounds::{
    self, fit_envelope, fit_ibound, i_empirical_all, i_rhs, kernel_ratio, linear_fit, m_delta, sharp_const_drift,
    EnvelopeReport, EnvelopeSample, IConstants, IEntry, LineFit, Side,
};
use heatkernel::cauchy::{
    calibrate_contraction, gamma_via_cauchy, gamma_via_cauchy_extrapolated, step_horizon, PicardOptions,
};
use heatkernel::grid::{GridField, GridSpec};
use heatkernel::littlewood_paley::{drift_norms, mollify_drift, BesovIndex, DriftField, DyadicPartition};
use heatkernel::monte_carlo::{
    brownian_escape_prob, discrete_monitoring_shift, escape_prob, exp_sup_moment, grr_verify, l1_distance, psi,
    sample_pairs, simulate, sup_modulus, zeta, EnsembleConfig, EscapeEstimate, GrrReport,
};
use heatkernel::parametrix::{forward_density, gamma_series, kernel_matrix, ParametrixResult, SeriesOptions};
use heatkernel::{bounds::BootstrapReport, VERSION};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Preset, TimeScaling};
use crate::presets::{self, PresetParams};
use crate::report::{num, Report};
use crate::CliError;

type R<T> = Result<T, CliError>;

pub fn grid(cfg: &ExperimentConfig) -> R<GridSpec> {
    Ok(GridSpec::new(cfg.grid.d, cfg.grid.n, cfg.grid.length)?)
}

fn params(cfg: &ExperimentConfig, amplitude: f64) -> PresetParams {
    let horizon = cfg
        .times
        .iter()
        .chain([cfg.mc.horizon, cfg.parametrix.t, cfg.cauchy.t, cfg.mollify.t, 1.0].iter())
        .chain(cfg.ibound.times.iter())
        .copied()
        .fold(0.0, f64::max);
    PresetParams {
        amplitude,
        alpha: cfg.drift.alpha,
        xi0: cfg.drift.xi0,
        seed: cfg.drift.seed,
        time_samples: cfg.drift.time_samples,
        horizon,
    }
}

/// The configured drift at amplitude `amplitude`.
pub fn drift_at(cfg: &ExperimentConfig, spec: &GridSpec, preset: Preset, amplitude: f64) -> R<DriftField> {
    presets::build(spec, preset, params(cfg, amplitude))
}

pub fn drift(cfg: &ExperimentConfig, spec: &GridSpec) -> R<DriftField> {
    drift_at(cfg, spec, cfg.drift.preset, cfg.drift.amplitude)
}

pub fn series_options(cfg: &ExperimentConfig) -> SeriesOptions {
    SeriesOptions {
        k_max: cfg.truncation.k_max,
        tol: cfg.truncation.tol,
        intervals: cfg.truncation.intervals,
        ..SeriesOptions::default()
    }
}

/// `count` sources spread evenly over a centred window of `span · L`
/// (along the diagonal in 2-d).
pub fn sources(spec: &GridSpec, count: usize, span: f64) -> Vec<usize> {
    let n = spec.n();
    let o = n / 2;
    let span = ((span.clamp(0.0, 1.0) * n as f64) as usize).min(n - 1);
    (0..count.max(1))
        .map(|j| {
            let i = o - span / 2 + j * span / count.max(1);
            if spec.dim() == 1 {
                spec.site(&[i])
            } else {
                spec.site(&[i, i])
            }
        })
        .collect()
}

fn escape_norm(x: f64, y: f64, alpha: f64) -> f64 {
    x * x + y.powf(2.0 / (1.0 - alpha))
}

// ---------------------------------------------------------------- besov-check

#[derive(Debug, Clone, Serialize)]
pub struct BesovOutcome {
    pub pou_max_err: f64,
    pub square_min: f64,
    pub square_max: f64,
    pub overlapping_pairs: usize,
    pub dirac_l1: Vec<f64>,
    pub dirac_linf: Vec<f64>,
    pub resolved: i32,
    pub dirac_slope: LineFit,
    pub x: f64,
    pub y: f64,
    #[serde(skip)]
    pub report: Report,
}

pub fn besov_check(cfg: &ExperimentConfig) -> R<BesovOutcome> {
    let spec = grid(cfg)?;
    let part = DyadicPartition::new(&spec)?;
    let idx: Vec<i32> = part.indices().collect();
    let weights: Vec<&[f64]> = idx.iter().map(|&i| part.weights(i)).collect::<Result<_, _>>()?;
    let mut pou: f64 = 0.0;
    let (mut sq_min, mut sq_max) = (f64::INFINITY, 0.0f64);
    for m in 0..spec.sites() {
        let s: f64 = weights.iter().map(|w| w[m]).sum();
        let q: f64 = weights.iter().map(|w| w[m] * w[m]).sum();
        pou = pou.max((s - 1.0).abs());
        sq_min = sq_min.min(q);
        sq_max = sq_max.max(q);
    }
    let mut overlapping = 0;
    for a in 0..idx.len() {
        for b in a + 2..idx.len() {
            if (0..spec.sites()).any(|m| weights[a][m] > 0.0 && weights[b][m] > 0.0) {
                overlapping += 1;
            }
        }
    }
    let delta = GridField::delta(spec, spec.origin());
    let l1 = part.block_norms(&delta, 1.0)?;
    let linf = part.block_norms(&delta, f64::INFINITY)?;
    let top = part.last_resolved_block();
    let is: Vec<f64> = (0..=top).map(f64::from).collect();
    let logs: Vec<f64> = (0..=top).map(|i| linf[(i + 1) as usize].log2()).collect();
    let fit = linear_fit(&is, &logs);
    let d = spec.dim() as f64;

    let b = drift(cfg, &spec)?;
    let (x, y) = drift_norms(&b, &part)?;

    let mut rep = Report::csv("besov-check", vec!["name", "i", "s", "p", "q", "value"]);
    let blank = String::new;
    let scalar = |name: &str, v: f64| vec![name.to_string(), blank(), blank(), blank(), blank(), num(v)];
    rep.row(scalar("pou_max_err", pou));
    rep.row(scalar("square_sum_min", sq_min));
    rep.row(scalar("square_sum_max", sq_max));
    rep.row(scalar("overlapping_pairs", overlapping as f64));
    for (k, (&a, &c)) in l1.iter().zip(&linf).enumerate() {
        let i = (k as i32 - 1).to_string();
        rep.row(vec!["dirac_block".into(), i.clone(), blank(), "1".into(), blank(), num(a)]);
        rep.row(vec!["dirac_block".into(), i, blank(), "inf".into(), blank(), num(c)]);
    }
    rep.row(scalar("dirac_linf_slope", fit.slope));
    rep.row(scalar("drift_X", x));
    rep.row(scalar("drift_Y", y));
    let alpha = cfg.drift.alpha;
    for (s, q) in [(-alpha, 1.0), (-alpha, f64::INFINITY), (-alpha - 0.1, 1.0), (0.0, f64::INFINITY)] {
        let v = part.besov_norm_vector(&b.samples[0], BesovIndex::new(s, f64::INFINITY, q)?)?;
        rep.row(vec!["drift".into(), blank(), num(s), "inf".into(), num(q), num(v)]);
    }
    rep.note("j_max", part.j_max());
    rep.note("last_resolved_block", top);
    rep.require(pou <= 1e-12, "partition of unity within 1e-12");
    rep.require(sq_min >= 0.5 - 1e-12 && sq_max <= 1.0 + 1e-12, "square sum in [1/2, 1]");
    rep.require(overlapping == 0, "blocks two apart have disjoint support");
    rep.require((fit.slope - d).abs() <= 0.05 * d, "dirac sup-norm slope equals d within 5%");
    let l1_res = &l1[1..=(top + 1) as usize];
    let (lo, hi) = l1_res.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    rep.require(hi <= 1.1 * lo, "dirac L1 block norms flat within 10% on resolved blocks");
    Ok(BesovOutcome {
        pou_max_err: pou,
        square_min: sq_min,
        square_max: sq_max,
        overlapping_pairs: overlapping,
        dirac_l1: l1,
        dirac_linf: linf,
        resolved: top,
        dirac_slope: fit,
        x,
        y,
        report: rep,
    })
}

// ----------------------------------------------------------------- parametrix

#[derive(Debug, Clone)]
pub struct ParametrixOutcome {
    pub result: ParametrixResult,
    pub forward_mass: f64,
    pub reports: Vec<Report>,
}

pub fn parametrix(cfg: &ExperimentConfig) -> R<ParametrixOutcome> {
    let spec = grid(cfg)?;
    let b = drift(cfg, &spec)?;
    let opts = series_options(cfg);
    let t = cfg.parametrix.t;
    let y = spec.origin();
    let result = gamma_series(&b, t, y, &opts)?;
    let fwd = forward_density(&b, t, y, &opts)?;
    let forward_mass = fwd.gamma.integral();

    let mut csv = Report::csv(
        "parametrix",
        if spec.dim() == 1 { vec!["x1", "gamma", "dgamma1"] } else { vec!["x1", "x2", "gamma", "dgamma1", "dgamma2"] },
    );
    for site in 0..spec.sites() {
        let p = spec.position(site);
        let mut row: Vec<String> = p[..spec.dim()].iter().map(|&v| num(v)).collect();
        row.push(num(result.gamma.values[site]));
        row.extend(result.grad_gamma.components.iter().map(|c| num(c.values[site])));
        csv.row(row);
    }
    let meta = heatkernel::io::ParametrixMeta::of(&result);
    let mut js = Report::json("parametrix", json!({ "kernel": meta, "forward_mass": forward_mass }));
    let sup = result.gamma.sup_abs();
    let ok_sign = result.gamma.min() >= -1e-6 * sup;
    let ok_mass = (forward_mass - 1.0).abs() <= fwd.tail_estimate + 1e-6;
    for r in [&mut csv, &mut js] {
        r.require(ok_sign, "kernel nonnegative within 1e-6 of its sup");
        r.require(ok_mass, "forward density has unit mass within tail + 1e-6");
    }
    Ok(ParametrixOutcome { result, forward_mass, reports: vec![csv, js] })
}

// --------------------------------------------------------------------- cauchy

#[derive(Debug, Clone, Serialize)]
pub struct CauchyOutcome {
    pub c_fit: f64,
    pub t0: f64,
    pub raw_gap: f64,
    pub extrapolated_gap: f64,
    pub iterations: Vec<usize>,
    #[serde(skip)]
    pub report: Report,
}

pub fn cauchy(cfg: &ExperimentConfig) -> R<CauchyOutcome> {
    let spec = grid(cfg)?;
    let part = DyadicPartition::new(&spec)?;
    let b = drift(cfg, &spec)?;
    let (x, y) = drift_norms(&b, &part)?;
    let c = &cfg.cauchy;
    let t = c.t;
    let c_fit = calibrate_contraction(&b, &part, x, y, c.beta, &[1.0, 0.25, 0.0625], 4, cfg.drift.seed)?;
    let plan = step_horizon(x, y, cfg.drift.alpha, c.beta, c_fit, t, t / 64.0)?;
    let opts = PicardOptions { tol: c.tol, max_iter: c.max_iter, intervals: c.intervals, ..PicardOptions::default() };
    let src = spec.origin();
    let eps = c.eps * spec.spacing().powi(2);
    let reference = gamma_series(&b, t, src, &series_options(cfg))?;
    let (raw, solver) = gamma_via_cauchy(&b, t, src, eps, &plan, &opts)?;
    let ext = gamma_via_cauchy_extrapolated(&b, t, src, eps, &plan, &opts)?;
    let scale = reference.gamma.sup_abs();
    let raw_gap = raw.max_abs_diff(&reference.gamma)? / scale;
    let extrapolated_gap = ext.max_abs_diff(&reference.gamma)? / scale;
    let mut report = Report::json(
        "cauchy",
        json!({
            "solver": solver,
            "c_fit": c_fit,
            "t0": plan.t0,
            "raw_gap": raw_gap,
            "extrapolated_gap": extrapolated_gap,
            "eps": eps,
        }),
    );
    report.require(plan.factor <= 0.5 + 1e-12, "contraction factor at most 1/2");
    report.require(extrapolated_gap < 1e-2, "Picard and parametrix kernels agree within 1e-2");
    Ok(CauchyOutcome { c_fit, t0: plan.t0, raw_gap, extrapolated_gap, iterations: solver.iterations.clone(), report })
}

// --------------------------------------------------------------- verify-upper

#[derive(Debug, Clone)]
pub struct UpperOutcome {
    pub envelope: EnvelopeReport,
    pub report: Report,
}

pub fn verify_upper(cfg: &ExperimentConfig) -> R<UpperOutcome> {
    let spec = grid(cfg)?;
    let part = DyadicPartition::new(&spec)?;
    let opts = series_options(cfg);
    let alpha = cfg.drift.alpha;
    let srcs = sources(&spec, cfg.envelope.sources, cfg.envelope.source_span);
    let mut samples = Vec::new();
    for &a in &cfg.envelope.amplitudes {
        let b = drift_at(cfg, &spec, cfg.drift.preset, a)?;
        let (x, y) = drift_norms(&b, &part)?;
        let scale = escape_norm(x, y, alpha);
        for &tau in &cfg.times {
            let t = match cfg.envelope.time_scaling {
                TimeScaling::Absolute => tau,
                TimeScaling::Drift if scale > 0.0 => tau / scale,
                TimeScaling::Drift => tau,
            };
            let kernels = srcs.iter().map(|&s| gamma_series(&b, t, s, &opts)).collect::<Result<Vec<_>, _>>()?;
            samples.push(EnvelopeSample { t, amplitude: a, x, y, kernels });
        }
    }
    let env = fit_envelope(&samples, cfg.envelope.c, &cfg.envelope.kappa_grid, alpha)?;
    let mut rep =
        Report::csv("verify-upper", vec!["t", "amplitude", "X", "Y", "C_upper", "kappa", "C_lower", "slope", "R2"]);
    for r in &env.rows {
        let fit = env.fits.iter().find(|(a, _)| *a == r.amplitude).map(|(_, f)| *f).expect("fit per amplitude");
        rep.row(vec![
            num(r.t),
            num(r.amplitude),
            num(r.x),
            num(r.y),
            num(r.c_upper),
            num(r.kappa),
            num(r.c_lower),
            num(fit.slope),
            num(fit.r2),
        ]);
    }
    rep.note("c", cfg.envelope.c);
    rep.note("d", spec.dim());
    rep.require(env.rows.iter().all(|r| r.c_upper >= 1.0 - 1e-9), "C_upper at least 1");
    if cfg.envelope.time_scaling == TimeScaling::Absolute {
        let mut ok = true;
        for &t in &cfg.times {
            let mut by_amp: Vec<(f64, f64)> =
                env.rows.iter().filter(|r| r.t == t).map(|r| (r.amplitude, r.c_upper)).collect();
            by_amp.sort_by(|a, b| a.0.total_cmp(&b.0));
            ok &= by_amp.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-9));
        }
        rep.require(ok, "C_upper nondecreasing in amplitude at fixed t");
    }
    Ok(UpperOutcome { envelope: env, report: rep })
}

// --------------------------------------------------------------- verify-lower

#[derive(Debug, Clone)]
pub struct LowerOutcome {
    pub bootstrap: BootstrapReport,
    pub report: Report,
}

pub fn verify_lower(cfg: &ExperimentConfig) -> R<LowerOutcome> {
    let spec = grid(cfg)?;
    if spec.dim() != 1 {
        return Err(CliError::Core(heatkernel::Error::UnsupportedDimension(spec.dim())));
    }
    let b = drift(cfg, &spec)?;
    let a = cfg.envelope.a;
    let q = kernel_matrix(&b, a, &series_options(cfg))?;
    let boot = bounds::bootstrap_lower_bound(&spec, &q, a, &cfg.envelope.kappa_grid, cfg.envelope.compositions)?;
    let mut rep = Report::csv("verify-lower", vec!["t", "inf_ratio", "bound", "kappa", "M", "holds"]);
    let mut all = true;
    for &(t, inf, bound) in &boot.checks {
        let holds = inf >= bound;
        all &= holds;
        rep.row(vec![num(t), num(inf), num(bound), num(boot.kappa), num(boot.m), holds.to_string()]);
    }
    rep.note("a", a);
    rep.require(all, "q_t >= M^(-1-t/a) p(kappa t) for t <= compositions * a");
    Ok(LowerOutcome { bootstrap: boot, report: rep })
}

// ------------------------------------------------------------------ sharpness

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SharpRow {
    pub measured: f64,
    pub formula: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct SharpnessOutcome {
    pub upper: SharpRow,
    pub lower: SharpRow,
    pub report: Report,
}

pub fn sharpness(cfg: &ExperimentConfig) -> R<SharpnessOutcome> {
    let spec = grid(cfg)?;
    let s = &cfg.sharpness;
    let b = drift_at(cfg, &spec, Preset::Constant, s.lambda)?;
    let y = spec.origin();
    let r = gamma_series(&b, s.t, y, &series_options(cfg))?;
    let d = spec.dim();
    // With every component equal to λ the drift has length λ√d.
    let lam = s.lambda * (d as f64).sqrt();
    let row = |dil: f64, side: Side| -> R<SharpRow> {
        let measured = kernel_ratio(&r.gamma, y, dil, s.t, side)?;
        let formula = sharp_const_drift(lam, dil, s.t, d, side)?;
        Ok(SharpRow { measured, formula, rel_err: (measured - formula).abs() / formula })
    };
    let upper = row(cfg.envelope.c, Side::Upper)?;
    let lower = row(s.kappa, Side::Lower)?;
    let mut rep = Report::csv("sharpness", vec!["side", "dilation", "measured", "formula", "rel_err"]);
    for (name, dil, v) in [("upper", cfg.envelope.c, upper), ("lower", s.kappa, lower)] {
        rep.row(vec![name.into(), num(dil), num(v.measured), num(v.formula), num(v.rel_err)]);
    }
    rep.note("lambda", s.lambda);
    rep.note("t", s.t);
    rep.require(upper.rel_err <= 0.02 && lower.rel_err <= 0.02, "constant-drift ratios within 2% of closed forms");
    Ok(SharpnessOutcome { upper, lower, report: rep })
}

// --------------------------------------------------------------------- escape

/// Constants of the escape bound `p ≤ C e^{CTN} e^{−K²/(CT)}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EscapeFit {
    pub line: LineFit,
    /// `−1/(slope T)`: the tail constant.
    pub c_tail: f64,
    /// `−1/(2 slope T)`: the same slope read as a Gaussian variance factor.
    pub c_variance: f64,
    /// `max_K p̂ e^{K²/(c_tail T)}`.
    pub prefactor: f64,
    /// Smallest single `C` serving prefactor and tail.
    pub c_joint: f64,
}

#[derive(Debug, Clone)]
pub struct EscapeOutcome {
    pub estimates: Vec<EscapeEstimate>,
    pub oracle: Vec<Option<(f64, f64)>>,
    pub fit: Option<EscapeFit>,
    pub report: Report,
}

/// Smallest `C` with `f(C) ≤ 0` for `f` decreasing in `C`, by bisection in
/// `log C` over `[1e−6, 1e6]`.
fn smallest_constant(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = ((1e-6f64).ln(), (1e6f64).ln());
    if f(hi.exp()) > 0.0 {
        return f64::INFINITY;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp()) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.exp()
}

pub fn fit_escape(estimates: &[EscapeEstimate], horizon: f64, norm: f64) -> Option<EscapeFit> {
    let live: Vec<&EscapeEstimate> = estimates.iter().filter(|e| e.p_hat > 0.0 && e.k > 0.0).collect();
    if live.len() < 2 {
        return None;
    }
    let u: Vec<f64> = live.iter().map(|e| e.k * e.k).collect();
    let v: Vec<f64> = live.iter().map(|e| e.p_hat.ln()).collect();
    let line = linear_fit(&u, &v);
    let c_tail = -1.0 / (line.slope * horizon);
    let prefactor = live.iter().map(|e| e.p_hat * (e.k * e.k / (c_tail * horizon)).exp()).fold(0.0, f64::max);
    let c_joint = smallest_constant(|c| {
        live.iter()
            .map(|e| e.p_hat.ln() - (c.ln() + c * horizon * norm - e.k * e.k / (c * horizon)))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    Some(EscapeFit { line, c_tail, c_variance: 0.5 * c_tail, prefactor, c_joint })
}

pub fn escape(cfg: &ExperimentConfig) -> R<EscapeOutcome> {
    let spec = grid(cfg)?;
    let part = DyadicPartition::new(&spec)?;
    let b = drift(cfg, &spec)?;
    let (x, y) = drift_norms(&b, &part)?;
    let mc = &cfg.mc;
    let ens = simulate(
        &b,
        &EnsembleConfig {
            n_paths: mc.n_paths,
            h_t: mc.h_t,
            horizon: mc.horizon,
            x0: [0.0, 0.0],
            seed: mc.seed,
            record_times: vec![mc.horizon],
            keep_paths: 0,
            drift_tag: cfg.drift.preset.tag().into(),
        },
    )?;
    let estimates: Vec<EscapeEstimate> = cfg.escape.radii.iter().map(|&k| escape_prob(&ens, k)).collect();
    let brownian = cfg.drift.preset == Preset::Zero && spec.dim() == 1;
    let shift = discrete_monitoring_shift(mc.h_t);
    let oracle: Vec<Option<(f64, f64)>> = estimates
        .iter()
        .map(|e| {
            brownian.then(|| {
                let o = brownian_escape_prob(e.k, mc.horizon);
                let half = 0.5 * (e.ci_hi - e.ci_lo);
                (o, half + (o - brownian_escape_prob(e.k + shift, mc.horizon)).abs())
            })
        })
        .collect();
    let fit = fit_escape(&estimates, mc.horizon, escape_norm(x, y, cfg.drift.alpha));
    let mut rep = Report::csv("escape", vec!["K", "p_hat", "ci_lo", "ci_hi", "oracle", "allowance"]);
    let mut within = true;
    for (e, o) in estimates.iter().zip(&oracle) {
        let (ov, al) = o.unwrap_or((f64::NAN, f64::NAN));
        if o.is_some() {
            within &= (e.p_hat - ov).abs() <= al;
        }
        rep.row(vec![num(e.k), num(e.p_hat), num(e.ci_lo), num(e.ci_hi), num(ov), num(al)]);
    }
    rep.note("summary", serde_json::to_string(&ens.summary()).expect("summary serializes"));
    if let Some(f) = &fit {
        rep.note("slope", f.line.slope);
        rep.note("R2", f.line.r2);
        rep.note("C_tail", f.c_tail);
        rep.note("C_variance", f.c_variance);
        rep.note("prefactor", f.prefactor);
        rep.note("C_joint", f.c_joint);
    }
    rep.require(within, "zero-drift escape matches the reflection oracle within CI + monitoring allowance");
    let mut sorted: Vec<&EscapeEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| a.k.total_cmp(&b.k));
    rep.require(sorted.windows(2).all(|w| w[1].p_hat <= w[0].p_hat), "escape probability nonincreasing in K");
    rep.require(fit.is_none_or(|f| f.c_joint.is_finite()), "escape bound holds with a finite joint C");
    Ok(EscapeOutcome { estimates, oracle, fit, report: rep })
}

// ------------------------------------------------------------------------ grr

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModulusConstants {
    /// `min ψ/ζ` over the grid.
    pub m: f64,
    /// `max ψ/ζ` over the grid.
    pub big_m: f64,
    pub submultiplicative_failures: usize,
    pub increasing: bool,
}

/// Equivalence constants between ψ and ζ on `[1e−6, 1e6]`, the
/// `ψ(rs) ≤ √2 ψ(r)ψ(s)` check on a 20×20 grid, and monotonicity of `ψ`.
pub fn modulus_constants() -> ModulusConstants {
    let logspace = |a: f64, b: f64, n: usize| -> Vec<f64> {
        (0..n).map(|j| 10f64.powf(a + (b - a) * j as f64 / (n - 1) as f64)).collect()
    };
    let rs = logspace(-6.0, 6.0, 241);
    let ratios: Vec<f64> = rs.iter().map(|&r| psi(r) / zeta(r)).collect();
    let m = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let big_m = ratios.iter().copied().fold(0.0, f64::max);
    let g = logspace(-6.0, 6.0, 20);
    let mut fails = 0;
    for &r in &g {
        for &s in &g {
            if psi(r * s) > 2f64.sqrt() * psi(r) * psi(s) * (1.0 + 1e-12) {
                fails += 1;
            }
        }
    }
    let dense = logspace(-6.0, 6.0, 4001);
    let increasing = dense.windows(2).all(|w| psi(w[1]) > psi(w[0]));
    ModulusConstants { m, big_m, submultiplicative_failures: fails, increasing }
}

#[derive(Debug, Clone)]
pub struct GrrOutcome {
    pub paths: Vec<GrrReport>,
    pub moduli: Vec<f64>,
    pub constants: ModulusConstants,
    pub moment: f64,
    pub moment_c: f64,
    pub report: Report,
}

pub fn grr(cfg: &ExperimentConfig) -> R<GrrOutcome> {
    let spec = grid(cfg)?;
    let part = DyadicPartition::new(&spec)?;
    let b = drift(cfg, &spec)?;
    let (x, y) = drift_norms(&b, &part)?;
    let mc = &cfg.mc;
    let g = &cfg.grr;
    let ens = simulate(
        &b,
        &EnsembleConfig {
            n_paths: g.paths,
            h_t: mc.h_t,
            horizon: mc.horizon,
            x0: [0.0, 0.0],
            seed: mc.seed,
            record_times: vec![mc.horizon],
            keep_paths: g.paths,
            drift_tag: cfg.drift.preset.tag().into(),
        },
    )?;
    let mut paths = Vec::new();
    let mut moduli = Vec::new();
    let mut rep = Report::csv("grr", vec!["path", "F", "G", "violations", "max_ratio", "sup_modulus"]);
    for (j, p) in ens.paths.iter().enumerate() {
        let pairs = sample_pairs(p.len(), g.pairs, mc.seed.wrapping_add(j as u64));
        let r = grr_verify(p, mc.h_t, g.kappa, &pairs)?;
        let sm = sup_modulus(p, mc.h_t);
        rep.row(vec![j.to_string(), num(r.f), num(r.g), r.violations.to_string(), num(r.max_ratio), num(sm)]);
        paths.push(r);
        moduli.push(sm);
    }
    let constants = modulus_constants();
    let moment = exp_sup_moment(&ens, g.moment_m);
    let norm = escape_norm(x, y, cfg.drift.alpha);
    let moment_c = smallest_constant(|c| moment.ln() - (c.ln() + c * mc.horizon * norm));
    rep.note("kappa", g.kappa);
    rep.note("zeta_psi_m", constants.m);
    rep.note("zeta_psi_M", constants.big_m);
    rep.note("submultiplicative_failures", constants.submultiplicative_failures);
    rep.note("psi_increasing", constants.increasing);
    rep.note("exp_sup_moment", moment);
    rep.note("exp_sup_moment_C", moment_c);
    rep.require(paths.iter().all(|r| r.violations == 0), "GRR inequality holds on every sampled pair");
    rep.require(constants.m > 0.0 && constants.big_m.is_finite(), "psi and zeta equivalent with finite constants");
    rep.require(constants.submultiplicative_failures == 0, "psi(rs) <= sqrt(2) psi(r) psi(s)");
    rep.require(constants.increasing, "psi strictly increasing");
    rep.require(moment.is_finite(), "exponential sup-moment finite");
    Ok(GrrOutcome { paths, moduli, constants, moment, moment_c, report: rep })
}

// -------------------------------------------------------------- mollify-sweep

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MollifyRow {
    pub n: i32,
    pub x: f64,
    pub y: f64,
    pub besov_gap: f64,
    pub density_l1: f64,
}

#[derive(Debug, Clone)]
pub struct MollifyOutcome {
    pub rows: Vec<MollifyRow>,
    pub base: (f64, f64),
    pub report: Report,
}

pub fn mollify_sweep(cfg: &ExperimentConfig) -> R<MollifyOutcome> {
    let spec = grid(cfg)?;
    let part = DyadicPartition::new(&spec)?;
    let b = drift_at(cfg, &spec, cfg.mollify.preset, cfg.mollify.amplitude)?;
    let base = drift_norms(&b, &part)?;
    let opts = series_options(cfg);
    let t = cfg.mollify.t;
    let x0 = spec.origin();
    let finest = mollify_drift(&b, &part, part.j_max())?;
    let reference = forward_density(&finest, t, x0, &opts)?.gamma;
    let idx = BesovIndex::new(-cfg.drift.alpha, f64::INFINITY, 1.0)?;
    let mut rows = Vec::new();
    let mut levels = cfg.mollify.levels.clone();
    levels.sort_unstable();
    for &n in &levels {
        let bn = mollify_drift(&b, &part, n)?;
        let (x, y) = drift_norms(&bn, &part)?;
        let mut gap: f64 = 0.0;
        for (u, v) in bn.samples.iter().zip(&finest.samples) {
            let diff = heatkernel::grid::VectorField {
                components: u
                    .components
                    .iter()
                    .zip(&v.components)
                    .map(|(a, c)| a.zip_with(c, |p, q| p - q))
                    .collect::<Result<_, _>>()?,
            };
            gap = gap.max(part.besov_norm_vector(&diff, idx)?);
        }
        let dens = forward_density(&bn, t, x0, &opts)?.gamma;
        rows.push(MollifyRow { n, x, y, besov_gap: gap, density_l1: l1_distance(&dens, &reference)? });
    }
    let mut rep = Report::csv("mollify-sweep", vec!["n", "X", "Y", "besov_gap", "density_l1"]);
    for r in &rows {
        rep.row(vec![r.n.to_string(), num(r.x), num(r.y), num(r.besov_gap), num(r.density_l1)]);
    }
    rep.note("preset", cfg.mollify.preset.tag());
    rep.note("X", base.0);
    rep.note("Y", base.1);
    rep.note("j_max", part.j_max());
    let mono = |f: &dyn Fn(&MollifyRow) -> f64| rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]) + 1e-12);
    rep.require(mono(&|r| r.besov_gap), "Besov gap to the finest level nonincreasing in n");
    rep.require(mono(&|r| r.density_l1), "density L1 gap to the finest level nonincreasing in n");
    rep.require(
        rows.iter().all(|r| r.x <= 2.0 * base.0 + 1e-12 && r.y <= 2.0 * base.1 + 1e-12),
        "mollified drift norms at most twice the original",
    );
    Ok(MollifyOutcome { rows, base, report: rep })
}

// --------------------------------------------------------------- ibound-table

#[derive(Debug, Clone)]
pub struct IBoundOutcome {
    pub entries: Vec<IEntry>,
    pub constants: IConstants,
    pub report: Report,
}

pub fn ibound_table(cfg: &ExperimentConfig) -> R<IBoundOutcome> {
    let spec = grid(cfg)?;
    let part = DyadicPartition::new(&spec)?;
    let b = drift(cfg, &spec)?;
    let (x, y) = drift_norms(&b, &part)?;
    let alpha = cfg.drift.alpha;
    let opts = series_options(cfg);
    let ib = &cfg.ibound;
    let srcs = sources(&spec, ib.sources, 0.25);
    let mut entries = Vec::new();
    for &t in &ib.times {
        let all = i_empirical_all(&b, t, ib.k_max, &srcs, ib.c, &opts)?;
        for (k, slab) in all.iter().enumerate() {
            for (i, pair) in slab.iter().enumerate() {
                for (bi, &beta) in [0.0, alpha].iter().enumerate() {
                    entries.push(IEntry { i, beta, k: k + 1, t, empirical: pair[bi], rhs: 0.0 });
                }
            }
        }
    }
    let m = 8.0 * m_delta(0.5 - alpha)?;
    let constants = fit_ibound(&entries, alpha, x, y, m)?;
    for e in &mut entries {
        e.rhs = i_rhs(e.k, e.i, e.beta, alpha, e.t, x, y, constants);
    }
    let mut rep = Report::csv("ibound-table", vec!["i", "beta", "k", "t", "empirical", "rhs"]);
    for e in &entries {
        rep.row(vec![e.i.to_string(), num(e.beta), e.k.to_string(), num(e.t), num(e.empirical), num(e.rhs)]);
    }
    rep.note("C", constants.c);
    rep.note("M", constants.m);
    rep.note("K", constants.k);
    rep.note("X", x);
    rep.note("Y", y);
    rep.require(entries.iter().all(|e| e.empirical <= e.rhs), "every empirical I below the closed-form bound");
    Ok(IBoundOutcome { entries, constants, report: rep })
}

/// Version string embedded in reports.
pub fn version() -> &'static str {
    VERSION
}
