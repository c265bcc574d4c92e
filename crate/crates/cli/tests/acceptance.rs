//! Acceptance gate: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use heatkernel::bounds::{
    beta_fn, fit_ibound, i_empirical_all, i_rhs, linear_fit, m_delta, m_delta_with, series_bound_l, IEntry, MDeltaGrid,
};
use heatkernel::grid::{gaussian_at, semigroup_apply, GridField, GridSpec};
use heatkernel::littlewood_paley::{drift_norms, BesovIndex, DriftField, DyadicPartition};
use heatkernel::monte_carlo::{density_at, l1_distance, simulate, DensityMethod, EnsembleConfig};
use heatkernel::parametrix::{chapman_kolmogorov_residual, forward_density, gamma_series, SeriesOptions};
use hk_lab::config::{Preset, TimeScaling};
use hk_lab::recipes;
use hk_lab::{run_with_threads, write_reports, ExperimentConfig, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
/// Name, check and runtime limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn base(d: usize, n: usize, length: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.d = d;
    cfg.grid.n = n;
    cfg.grid.length = length;
    cfg
}

fn c1() -> Outcome {
    let spec = GridSpec::new(1, 256, 40.0)?;
    let b = DriftField::zero(&spec, 0.25)?;
    let mut worst: f64 = 0.0;
    for t in [0.25, 1.0] {
        let g = gamma_series(&b, t, spec.origin(), &SeriesOptions::default())?;
        worst = worst.max(g.gamma.max_abs_diff(&gaussian_at(&spec, t, spec.origin())?)?);
    }
    Ok((worst < 1e-8, format!("sup|Gamma - p| = {worst:.3e}")))
}

fn c2() -> Outcome {
    let spec = GridSpec::new(1, 512, 40.0)?;
    let b = DriftField::from_fn(&spec, vec![0.0], 0.25, |_, _, _| 1.0)?;
    let opts = SeriesOptions { k_max: 8, ..SeriesOptions::default() };
    let y = spec.origin();
    let t = 1.0;
    let g = gamma_series(&b, t, y, &opts)?;
    let yp = spec.position(y)[0];
    let exact = GridField::from_fn(spec, |x| {
        let z = yp - x[0] - t;
        (-z * z / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
    });
    let rel = g.gamma.max_abs_diff(&exact)? / exact.sup_abs();
    Ok((rel < 1e-3, format!("relative sup error = {rel:.3e}, K_used = {}", g.k_used)))
}

fn c3() -> Outcome {
    let o = recipes::sharpness(&base(1, 256, 40.0))?;
    let ok = o.upper.rel_err < 0.02 && o.lower.rel_err < 0.02;
    Ok((
        ok,
        format!(
            "upper {:.5} vs {:.5}, lower {:.5} vs {:.5}",
            o.upper.measured, o.upper.formula, o.lower.measured, o.lower.formula
        ),
    ))
}

fn c4() -> Outcome {
    let mut cfg = base(1, 512, 8.0 * PI);
    cfg.drift.preset = Preset::SingleMode;
    cfg.cauchy.t = 1.0;
    let o = recipes::cauchy(&cfg)?;
    Ok((o.extrapolated_gap < 1e-2, format!("gap {:.3e} (raw {:.3e})", o.extrapolated_gap, o.raw_gap)))
}

fn c5() -> Outcome {
    let spec = GridSpec::new(1, 512, 8.0 * PI)?;
    let b = DriftField::from_fn(&spec, vec![0.0], 0.25, |_, x, _| x[0].cos())?;
    let cfg = EnsembleConfig {
        n_paths: 1_000_000,
        h_t: 1e-3,
        horizon: 1.0,
        x0: [0.0, 0.0],
        seed: 7,
        record_times: vec![1.0],
        keep_paths: 0,
        drift_tag: "cos".into(),
    };
    let e = simulate(&b, &cfg)?;
    let kde = density_at(&e, 1.0, 2.0 * spec.spacing(), DensityMethod::Kde)?;
    let reference = forward_density(&b, 1.0, spec.origin(), &SeriesOptions::default())?;
    let d = l1_distance(&kde, &reference.gamma)?;
    Ok((d < 0.02, format!("L1 = {d:.3e}")))
}

fn c6() -> Outcome {
    let mut cfg = base(1, 512, 8.0 * PI);
    cfg.drift.preset = Preset::TimeVarying;
    let spec = recipes::grid(&cfg)?;
    let b = recipes::drift(&cfg, &spec)?;
    let r = chapman_kolmogorov_residual(&b, 0.5, 1.0, spec.origin(), &SeriesOptions::default())?;
    Ok((r < 1e-3, format!("residual = {r:.3e}")))
}

fn c7() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for (d, n, l) in [(1, 4096, 100.0), (2, 512, 50.0)] {
        let o = recipes::besov_check(&base(d, n, l))?;
        let s = o.dirac_slope.slope;
        ok &= (s - d as f64).abs() <= 0.05 * d as f64;
        msg.push(format!("d={d}: slope {s:.5}"));
    }
    Ok((ok, msg.join(", ")))
}

/// One unit mode per dyadic block, which saturates the C^0 to C^1 smoothing.
fn c8() -> Outcome {
    let spec = GridSpec::new(1, 1024, 2.0 * PI)?;
    let part = DyadicPartition::new(&spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let modes: Vec<(f64, f64)> = [2.0, 3.0, 6.0, 12.0, 24.0, 48.0, 96.0, 192.0, 384.0]
        .iter()
        .map(|&k| (k, rng.random::<f64>() * 2.0 * PI))
        .collect();
    let phi = GridField::from_fn(spec, |x| modes.iter().map(|&(k, p)| (k * x[0] + p).cos()).sum());
    let c0 = part.besov_norm(&phi, BesovIndex::new(0.0, f64::INFINITY, f64::INFINITY)?)?;
    let c1 = BesovIndex::new(1.0, f64::INFINITY, f64::INFINITY)?;
    let (mut lt, mut ln) = (Vec::new(), Vec::new());
    for j in 2..=8 {
        let t = 2f64.powi(-j);
        lt.push(t.ln());
        ln.push((part.besov_norm(&semigroup_apply(&phi, t)?, c1)? / c0).ln());
    }
    let fit = linear_fit(&lt, &ln);
    Ok(((fit.slope + 0.5).abs() <= 0.05, format!("slope {:.4} (R2 {:.4})", fit.slope, fit.r2)))
}

fn c9() -> Outcome {
    let mut sym: f64 = 0.0;
    for &(a, b) in &[(0.3, 2.7), (0.7, 2.3), (1.5, 0.25), (4.0, 9.5)] {
        sym = sym.max((beta_fn(a, b)? - beta_fn(b, a)?).abs());
    }
    let half = (beta_fn(0.5, 0.5)? - PI).abs();
    let delta = 0.25;
    let m1 = m_delta(delta)?;
    let m2 = m_delta_with(delta, MDeltaGrid { gamma_max: 128.0 / delta, beta_points: 81, gamma_points: 161 })?;
    let drift = (m2 - m1).abs() / m1;
    let ls: Vec<f64> = [0.25, 0.375, 0.5].iter().map(|&b| series_bound_l(b, 50.0, 501)).collect::<Result<_, _>>()?;
    let ok = sym < 1e-12 && half < 1e-10 && drift < 5e-3 && ls.iter().all(|l| l.is_finite());
    Ok((ok, format!("sym {sym:.1e}, |B(1/2,1/2)-pi| {half:.1e}, M drift {drift:.1e}, L {ls:?}")))
}

fn c10() -> Outcome {
    let spec = GridSpec::new(1, 256, 8.0 * PI)?;
    let part = DyadicPartition::new(&spec)?;
    let alpha = 0.25;
    let b = DriftField::from_fn(&spec, vec![0.0], alpha, |_, x, _| x[0].cos() + 0.5 * (2.0 * x[0]).cos())?;
    let (x, y) = drift_norms(&b, &part)?;
    let ys: Vec<usize> = (0..4).map(|j| spec.origin() + 8 * j).collect();
    let opts = SeriesOptions::default();
    let mut entries = Vec::new();
    for t in [0.5, 1.0] {
        for (k, slab) in i_empirical_all(&b, t, 3, &ys, 2.0, &opts)?.iter().enumerate() {
            for (i, pair) in slab.iter().enumerate() {
                for (bi, &beta) in [0.0, alpha].iter().enumerate() {
                    entries.push(IEntry { i, beta, k: k + 1, t, empirical: pair[bi], rhs: 0.0 });
                }
            }
        }
    }
    let consts = fit_ibound(&entries, alpha, x, y, 8.0 * m_delta(0.5 - alpha)?)?;
    let mut worst: f64 = 0.0;
    for e in &entries {
        worst = worst.max(e.empirical / i_rhs(e.k, e.i, e.beta, alpha, e.t, x, y, consts));
    }
    Ok((
        worst <= 1.0,
        format!(
            "{} entries, max empirical/rhs {worst:.4}, C {:.4e} M {:.4} K {:.4}",
            entries.len(),
            consts.c,
            consts.m,
            consts.k
        ),
    ))
}

fn c11() -> Outcome {
    let mut cfg = base(1, 1024, 8.0 * PI);
    cfg.drift.preset = Preset::SingleMode;
    cfg.drift.xi0 = 2.0;
    cfg.envelope.amplitudes = vec![1.0, 2.0, 4.0];
    cfg.envelope.time_scaling = TimeScaling::Drift;
    cfg.envelope.sources = 8;
    cfg.envelope.source_span = 0.125;
    cfg.times = vec![0.25, 0.5, 0.75, 1.0];
    let up = recipes::verify_upper(&cfg)?;
    let slopes: Vec<f64> = up.envelope.fits.iter().map(|(_, f)| f.slope).collect();
    let r2_min = up.envelope.fits.iter().map(|(_, f)| f.r2).fold(f64::INFINITY, f64::min);
    let (lo, hi) = slopes.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    let upper_ok = r2_min > 0.9 && lo > 0.0 && hi / lo < 3.0;

    let mut lcfg = base(1, 256, 8.0 * PI);
    lcfg.drift.preset = Preset::SingleMode;
    lcfg.drift.xi0 = 2.0;
    lcfg.envelope.a = 0.25;
    lcfg.envelope.compositions = 4;
    let low = recipes::verify_lower(&lcfg)?;
    let lower_ok = low.report.violations.is_empty();
    Ok((
        upper_ok && lower_ok,
        format!(
            "slopes {:?}, ratio {:.3}, min R2 {r2_min:.4}; bootstrap kappa {} M {:.4} holds {lower_ok}",
            slopes.iter().map(|s| (s * 1e4).round() / 1e4).collect::<Vec<_>>(),
            hi / lo,
            low.bootstrap.kappa,
            low.bootstrap.m
        ),
    ))
}

fn c12() -> Outcome {
    let mut cfg = base(1, 256, 8.0 * PI);
    cfg.drift.preset = Preset::Zero;
    cfg.mc.n_paths = 200_000;
    cfg.mc.horizon = 1.0;
    cfg.escape.radii = vec![1.0, 2.0, 3.0];
    let zero = recipes::escape(&cfg)?;
    let matched =
        zero.estimates.iter().zip(&zero.oracle).all(|(e, o)| o.is_some_and(|(ov, al)| (e.p_hat - ov).abs() <= al));

    cfg.drift.preset = Preset::SingleMode;
    cfg.escape.radii = vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let with = recipes::escape(&cfg)?;
    let fit = with.fit.ok_or("no escape fit")?;
    let form = fit.line.r2 > 0.9 && fit.line.slope < 0.0 && fit.c_joint.is_finite();
    Ok((
        matched && form,
        format!(
            "b=0 p_hat {:?}; cos x: slope {:.4}, R2 {:.4}, C_tail {:.4}, C_joint {:.4}",
            zero.estimates.iter().map(|e| e.p_hat).collect::<Vec<_>>(),
            fit.line.slope,
            fit.line.r2,
            fit.c_tail,
            fit.c_joint
        ),
    ))
}

fn c13() -> Outcome {
    let mut cfg = base(1, 256, 8.0 * PI);
    cfg.drift.preset = Preset::Zero;
    cfg.grr.paths = 100;
    cfg.grr.pairs = 50;
    cfg.grr.kappa = 0.1;
    let o = recipes::grr(&cfg)?;
    let violations: usize = o.paths.iter().map(|p| p.violations).sum();
    let k = o.constants;
    let ok = violations == 0 && k.m > 0.0 && k.big_m.is_finite() && k.submultiplicative_failures == 0 && k.increasing;
    Ok((
        ok,
        format!(
            "violations {violations}, psi/zeta in [{:.4}, {:.4}], submultiplicative failures {}",
            k.m, k.big_m, k.submultiplicative_failures
        ),
    ))
}

fn c14() -> Outcome {
    let cfg = ExperimentConfig::default();
    let mut dirs = Vec::new();
    for threads in [1, 8] {
        let dir = tempfile::tempdir()?;
        let reports = run_with_threads(Subcommand::All, &cfg, Some(threads))?;
        write_reports(dir.path(), &cfg, &reports)?;
        dirs.push(dir);
    }
    let listing = |d: &std::path::Path| -> std::io::Result<Vec<(String, Vec<u8>)>> {
        let mut v = Vec::new();
        for e in std::fs::read_dir(d)? {
            let e = e?;
            v.push((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path())?));
        }
        v.sort();
        Ok(v)
    };
    let a = listing(dirs[0].path())?;
    let b = listing(dirs[1].path())?;
    let reports = a.iter().filter(|(n, _)| n != "schema.json").count();
    Ok((a == b && reports == 11, format!("{reports} reports, identical = {}", a == b)))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 14] = [
        ("zero-drift collapse", c1, 10),
        ("constant-drift exactness", c2, 60),
        ("sharpness constants", c3, 60),
        ("cross-method agreement", c4, 120),
        ("Monte Carlo validation", c5, 300),
        ("Chapman-Kolmogorov", c6, 120),
        ("Dirac Besov scaling", c7, 10),
        ("semigroup smoothing exponent", c8, 10),
        ("beta machinery", c9, 30),
        ("I-bound dominance", c10, 600),
        ("envelope scaling", c11, 900),
        ("escape probability", c12, 300),
        ("GRR suite", c13, 120),
        ("determinism", c14, 1800),
    ];
    let mut failed = 0;
    for (k, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let el = start.elapsed();
        let in_time = el <= Duration::from_secs(*limit);
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.2} s, limit {limit} s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            el.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
