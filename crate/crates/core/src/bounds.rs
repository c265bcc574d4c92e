//! Scalar inequality machinery and envelope-constant extraction.
//!
//! Beta-function bounds, the `Σ z^k/(k!)^β` series constant, the
//! `I^β_{i,k}` functionals with their closed-form majorant, and the
//! fitting of Gaussian envelope constants from computed kernels.
//! Constants that are only known to exist are fitted, never assumed.

use libm::{lgamma as ln_gamma, tgamma as gamma};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::duhamel::TimeMesh;
use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{gaussian_at, GridField, GridSpec};
use crate::littlewood_paley::DriftField;
use crate::parametrix::{psi_first, psi_next, ParametrixResult, SeriesOptions};
use crate::sum::pairwise_sum_by;

/// Denominators below this fraction of their maximum are treated as
/// roundoff and excluded from kernel ratios.
pub const SIGNIFICANCE: f64 = 1e-8;

/// `ln B(β, γ)`.
pub fn ln_beta(beta: f64, gamma_: f64) -> Result<f64> {
    if !(beta > 0.0 && gamma_ > 0.0) {
        return Err(Error::InvalidArgument(format!("beta function needs positive arguments, got ({beta}, {gamma_})")));
    }
    Ok(ln_gamma(beta) + ln_gamma(gamma_) - ln_gamma(beta + gamma_))
}

/// `B(β, γ) = Γ(β)Γ(γ)/Γ(β+γ)`.
///
/// ```
/// use heatkernel::bounds::beta_fn;
/// assert!((beta_fn(0.5, 0.5).unwrap() - std::f64::consts::PI).abs() < 1e-10);
/// assert!((beta_fn(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
/// ```
pub fn beta_fn(beta: f64, gamma_: f64) -> Result<f64> {
    Ok(ln_beta(beta, gamma_)?.exp())
}

/// Resolution of the `(β, γ)` search in [`m_delta_with`].
#[derive(Debug, Clone, Copy)]
pub struct MDeltaGrid {
    pub gamma_max: f64,
    pub beta_points: usize,
    pub gamma_points: usize,
}

fn b_gamma_pow(beta: f64, g: f64) -> f64 {
    (ln_gamma(beta) + ln_gamma(g) - ln_gamma(beta + g) + beta * g.ln()).exp()
}

/// `sup B(β,γ)γ^β` over `[δ,1] × [δ, γ_max]`, refined around the best grid
/// point, compared with the tail limit `sup_β Γ(β) = Γ(δ)`.
pub fn m_delta_with(delta: f64, grid: MDeltaGrid) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} outside (0, 1]")));
    }
    let nb = grid.beta_points.max(2);
    let ng = grid.gamma_points.max(2);
    let beta_at = |i: usize| delta + (1.0 - delta) * i as f64 / (nb - 1) as f64;
    let lg = (grid.gamma_max / delta).ln();
    let gamma_at = |j: usize| delta * (lg * j as f64 / (ng - 1) as f64).exp();
    let mut best = (f64::NEG_INFINITY, delta, delta);
    for i in 0..nb {
        for j in 0..ng {
            let (b, g) = (beta_at(i), gamma_at(j));
            let v = b_gamma_pow(b, g);
            if v > best.0 {
                best = (v, b, g);
            }
        }
    }
    // Local refinement on a shrinking box around the best point.
    let (mut db, mut dl) = ((1.0 - delta) / (nb - 1) as f64, lg / (ng - 1) as f64);
    for _ in 0..30 {
        let (_, b0, g0) = best;
        for a in -4..=4 {
            for c in -4..=4 {
                let b = (b0 + a as f64 * db / 4.0).clamp(delta, 1.0);
                let g = (g0 * (c as f64 * dl / 4.0).exp()).clamp(delta, grid.gamma_max);
                let v = b_gamma_pow(b, g);
                if v > best.0 {
                    best = (v, b, g);
                }
            }
        }
        db /= 2.0;
        dl /= 2.0;
    }
    Ok(best.0.max(gamma(delta)))
}

/// [`m_delta_with`] on the default grid, `γ_max = 64/δ`.
pub fn m_delta(delta: f64) -> Result<f64> {
    m_delta_with(delta, MDeltaGrid { gamma_max: 64.0 / delta, beta_points: 81, gamma_points: 161 })
}

/// Partial sum `Σ_{k≤K} z^k/(k!)^β` and an estimate of the remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPartial {
    pub sum: f64,
    pub remainder: f64,
}

/// `Σ_{k=0}^{K} z^k/(k!)^β` with a geometric remainder bound.
pub fn series_partial(z: f64, beta: f64, k: usize) -> Result<SeriesPartial> {
    if z < 0.0 || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument("series needs z ≥ 0 and beta in (0, 1)".into()));
    }
    if z == 0.0 {
        return Ok(SeriesPartial { sum: 1.0, remainder: 0.0 });
    }
    let term = |j: usize| (j as f64 * z.ln() - beta * ln_gamma(j as f64 + 1.0)).exp();
    let sum = pairwise_sum_by(k + 1, &|j| term(j));
    let next = term(k + 1);
    let ratio = z / ((k + 2) as f64).powf(beta);
    let remainder = if ratio < 1.0 { next / (1.0 - ratio) } else { f64::INFINITY };
    Ok(SeriesPartial { sum, remainder })
}

/// `ln Σ_{k≥0} z^k/(k!)^β`, summed outward from the largest term.
pub fn series_log_sum(z: f64, beta: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let lz = z.ln();
    let a = |k: f64| k * lz - beta * ln_gamma(k + 1.0);
    let peak = z.powf(1.0 / beta).floor();
    // The exact maximizer sits within one step of z^{1/β} − 1/2.
    let mut k_star = peak;
    for c in [peak - 1.0, peak + 1.0] {
        if c >= 0.0 && a(c) > a(k_star) {
            k_star = c;
        }
    }
    let top = a(k_star);
    let mut acc = 1.0;
    let mut k = k_star + 1.0;
    loop {
        let r = (a(k) - top).exp();
        acc += r;
        if a(k) - top < -40.0 {
            break;
        }
        k += 1.0;
    }
    let mut k = k_star - 1.0;
    while k >= 0.0 {
        let d = a(k) - top;
        acc += d.exp();
        if d < -40.0 {
            break;
        }
        k -= 1.0;
    }
    top + acc.ln()
}

/// Smallest `L = 1 + j/1000` with `Σ z^k/(k!)^β ≤ L e^{L z^{1/β}}` at every
/// point of a uniform grid on `[0, z_max]`.
pub fn series_bound_l(beta: f64, z_max: f64, points: usize) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} outside (0, 1)")));
    }
    let zs: Vec<f64> = (0..points).map(|j| z_max * j as f64 / (points - 1) as f64).collect();
    let lhs: Vec<f64> = zs.iter().map(|&z| series_log_sum(z, beta)).collect();
    let holds = |l: f64| zs.iter().zip(&lhs).all(|(&z, &s)| s <= l.ln() + l * z.powf(1.0 / beta) + 1e-12);
    let step = 1e-3;
    let mut hi = 1usize;
    while !holds(1.0 + hi as f64 * step) {
        hi *= 2;
        if hi > 1 << 30 {
            return Err(Error::InvalidArgument("no finite series constant found".into()));
        }
    }
    let mut lo = 0usize;
    if holds(1.0) {
        return Ok(1.0);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if holds(1.0 + mid as f64 * step) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(1.0 + hi as f64 * step)
}

/// Constants of the closed-form `I` majorant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IConstants {
    pub c: f64,
    pub m: f64,
    pub k: f64,
}

/// `K Σ_{m+n=k} t^{−(i+β)/2} (CMXt^{1/2})^m/(m!)^{(1−β)/2} ·
/// (CMYt^{(1−α)/2})^n/(n!)^{(1−α−β)/2}`.
#[allow(clippy::too_many_arguments)]
pub fn i_rhs(k: usize, i: usize, beta: f64, alpha: f64, t: f64, x: f64, y: f64, consts: IConstants) -> f64 {
    let IConstants { c, m, k: kk } = consts;
    let a = c * m * x * t.sqrt();
    let b = c * m * y * t.powf(0.5 * (1.0 - alpha));
    let pre = kk * t.powf(-0.5 * (i as f64 + beta));
    let mut terms = Vec::with_capacity(k + 1);
    for mm in 0..=k {
        let nn = k - mm;
        let tm = if mm == 0 { 1.0 } else { a.powi(mm as i32) / (ln_gamma(mm as f64 + 1.0) * 0.5 * (1.0 - beta)).exp() };
        let tn = if nn == 0 {
            1.0
        } else {
            b.powi(nn as i32) / (ln_gamma(nn as f64 + 1.0) * 0.5 * (1.0 - alpha - beta)).exp()
        };
        terms.push(tm * tn);
    }
    pre * crate::sum::pairwise_sum(&terms)
}

/// One row of the I-bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IEntry {
    pub i: usize,
    pub beta: f64,
    pub k: usize,
    pub t: f64,
    pub empirical: f64,
    pub rhs: f64,
}

/// Empirical `I^β_{i,k}(t)` for `k = 1..=k_max`, `i ∈ {0,1}`, `β ∈ {0, α}`:
/// index `[k−1][i][β is α]`.
#[allow(clippy::too_many_arguments)]
pub fn i_empirical_all(
    b: &DriftField,
    t: f64,
    k_max: usize,
    ys: &[usize],
    c: f64,
    opts: &SeriesOptions,
) -> Result<Vec<[[f64; 2]; 2]>> {
    let spec = b.spec();
    if spec.dim() != 1 {
        return Err(Error::UnsupportedDimension(spec.dim()));
    }
    let mesh = opts.mesh(&spec, t)?;
    let alpha = b.alpha;
    let mut out = vec![[[0.0f64; 2]; 2]; k_max];
    for &y in ys {
        let weight = gaussian_at(&spec, c * t, y)?;
        let floor = SIGNIFICANCE * weight.sup_abs();
        let mut fam = psi_first(b, t, y, &mesh)?;
        for k in 1..=k_max {
            if k > 1 {
                fam = psi_next(b, &fam)?;
            }
            let a = derivative_ratios(&spec, &fam.fields, &mesh, t, &weight, floor);
            for i in 0..2 {
                for (bi, &beta) in [0.0, alpha].iter().enumerate() {
                    let f: Vec<f64> =
                        (0..mesh.nodes.len()).map(|j| a[i][j].powf(1.0 - beta) * a[i + 1][j].powf(beta)).collect();
                    let val = trapezoid(&mesh.nodes, &f);
                    out[k - 1][i][bi] = out[k - 1][i][bi].max(val);
                }
            }
        }
    }
    Ok(out)
}

/// `‖∇^i P_{t−s_j} Ψ_{s_j} / p(ct, · − y)‖_∞` for `i = 0, 1, 2`.
fn derivative_ratios(
    spec: &GridSpec,
    fields: &[GridField],
    mesh: &TimeMesh,
    t: f64,
    weight: &GridField,
    floor: f64,
) -> [Vec<f64>; 3] {
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for (f, &s) in fields.iter().zip(&mesh.nodes) {
        let hat = fourier::forward(spec, &f.values);
        for (i, slot) in out.iter_mut().enumerate() {
            let c: Vec<Complex64> = hat
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    v * fourier::derivative_symbol(spec, &[i], k) * (-0.5 * spec.xi_squared(k) * (t - s)).exp()
                })
                .collect();
            let vals = fourier::inverse_real(spec, c);
            let r = vals
                .iter()
                .zip(&weight.values)
                .filter(|(_, &w)| w > floor)
                .map(|(v, w)| v.abs() / w)
                .fold(0.0, f64::max);
            slot.push(r);
        }
    }
    out
}

fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    pairwise_sum_by(x.len() - 1, &|j| 0.5 * (x[j + 1] - x[j]) * (f[j] + f[j + 1]))
}

/// `I^β_{i,k}(t)` for a single index.
#[allow(clippy::too_many_arguments)]
pub fn i_empirical(
    b: &DriftField,
    t: f64,
    k: usize,
    i: usize,
    beta_is_alpha: bool,
    ys: &[usize],
    c: f64,
    opts: &SeriesOptions,
) -> Result<f64> {
    if k == 0 || k > 4 || i > 1 {
        return Err(Error::InvalidArgument("i_empirical needs 1 ≤ k ≤ 4 and i ∈ {0, 1}".into()));
    }
    Ok(i_empirical_all(b, t, k, ys, c, opts)?[k - 1][i][beta_is_alpha as usize])
}

/// Fits `(C, K)` for fixed `M`: `K` makes the tightest entry an equality and
/// `C` minimizes the spread of `log(rhs/empirical)` over a log grid.
pub fn fit_ibound(entries: &[IEntry], alpha: f64, x: f64, y: f64, m: f64) -> Result<IConstants> {
    let live: Vec<&IEntry> = entries.iter().filter(|e| e.empirical > 0.0).collect();
    if live.is_empty() {
        return Ok(IConstants { c: 1.0, m, k: 0.0 });
    }
    let mut best: Option<(f64, IConstants)> = None;
    for j in 0..=240 {
        let c = 10f64.powf(-4.0 + 8.0 * j as f64 / 240.0);
        let unit = IConstants { c, m, k: 1.0 };
        let logs: Vec<f64> =
            live.iter().map(|e| (i_rhs(e.k, e.i, e.beta, alpha, e.t, x, y, unit) / e.empirical).ln()).collect();
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = hi - lo;
        let cand = IConstants { c, m, k: (-lo).exp() * (1.0 + 1e-9) };
        if best.as_ref().is_none_or(|(s, _)| spread < *s) {
            best = Some((spread, cand));
        }
    }
    Ok(best.unwrap().1)
}

/// Closed-form constant-drift envelope constant: `c^{d/2}e^{tλ²/(2(c−1))}`
/// for the upper side, `κ^{d/2}e^{−tλ²/(2(1−κ))}` for the lower side.
///
/// ```
/// use heatkernel::bounds::{sharp_const_drift, Side};
/// let up = sharp_const_drift(1.0, 2.0, 1.0, 1, Side::Upper).unwrap();
/// assert!((up - 2f64.sqrt() * 0.5f64.exp()).abs() < 1e-12);
/// ```
pub fn sharp_const_drift(lambda: f64, dilation: f64, t: f64, d: usize, side: Side) -> Result<f64> {
    let dd = d as f64 / 2.0;
    match side {
        Side::Upper => {
            if !(dilation > 1.0) {
                return Err(Error::InvalidArgument("upper dilation must exceed 1".into()));
            }
            Ok(dilation.powf(dd) * (t * lambda * lambda / (2.0 * (dilation - 1.0))).exp())
        }
        Side::Lower => {
            if !(dilation > 0.0 && dilation < 1.0) {
                return Err(Error::InvalidArgument("lower dilation must lie in (0, 1)".into()));
            }
            Ok(dilation.powf(dd) * (-t * lambda * lambda / (2.0 * (1.0 - dilation))).exp())
        }
    }
}

/// Which side of the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

/// `sup` or `inf` of `Γ_t(·, y)/p(at, · − y)` over sites where the Gaussian
/// is significant.
pub fn kernel_ratio(kernel: &GridField, y: usize, dilation: f64, t: f64, side: Side) -> Result<f64> {
    let spec = kernel.spec;
    let p = gaussian_at(&spec, dilation * t, y)?;
    let floor = SIGNIFICANCE * p.sup_abs();
    let ratios = kernel.values.iter().zip(&p.values).filter(|(_, &w)| w > floor).map(|(g, w)| g / w);
    Ok(match side {
        Side::Upper => ratios.fold(f64::NEG_INFINITY, f64::max),
        Side::Lower => ratios.fold(f64::INFINITY, f64::min),
    })
}

/// Kernels of one drift amplitude at one time, over a set of sources.
#[derive(Debug, Clone)]
pub struct EnvelopeSample {
    pub t: f64,
    pub amplitude: f64,
    pub x: f64,
    pub y: f64,
    pub kernels: Vec<ParametrixResult>,
}

/// Per-`(t, amplitude)` envelope constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub t: f64,
    pub amplitude: f64,
    pub x: f64,
    pub y: f64,
    pub c_upper: f64,
    pub kappa: f64,
    pub c_lower: f64,
}

/// Least-squares line through `(u, v)` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares with the coefficient of determination.
pub fn linear_fit(u: &[f64], v: &[f64]) -> LineFit {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|a| (a - mu).powi(2)).sum();
    let suv: f64 = u.iter().zip(v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let svv: f64 = v.iter().map(|b| (b - mv).powi(2)).sum();
    let slope = suv / suu;
    let intercept = mv - slope * mu;
    let r2 = if svv == 0.0 { 1.0 } else { (suv * suv) / (suu * svv) };
    LineFit { slope, intercept, r2 }
}

/// Envelope constants over a sweep with a per-amplitude regression of
/// `log C_upper` against `t [X² + Y^{2/(1−α)}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub c: f64,
    pub alpha: f64,
    pub rows: Vec<EnvelopeRow>,
    /// `(amplitude, fit)` pairs.
    pub fits: Vec<(f64, LineFit)>,
}

/// Extracts envelope constants from a sweep.
///
/// `C_upper` is the sup over sources and sites of `Γ_t/p(ct)`; for the
/// lower side the largest `κ` in `kappa_grid` with a positive infimum is
/// kept together with that infimum.
pub fn fit_envelope(samples: &[EnvelopeSample], c: f64, kappa_grid: &[f64], alpha: f64) -> Result<EnvelopeReport> {
    if !(c > 1.0) {
        return Err(Error::InvalidArgument("upper dilation must exceed 1".into()));
    }
    let mut rows = Vec::new();
    for s in samples {
        let mut c_upper = f64::NEG_INFINITY;
        for kr in &s.kernels {
            let g = &kr.gamma;
            let floor = -1e-6 * g.sup_abs();
            if g.min() < floor {
                return Err(Error::EnvelopeViolated { min: g.min() });
            }
            c_upper = c_upper.max(kernel_ratio(g, kr.y, c, s.t, Side::Upper)?);
        }
        let mut kappa = f64::NAN;
        let mut c_lower = 0.0;
        let mut grid: Vec<f64> = kappa_grid.to_vec();
        grid.sort_by(|a, b| b.total_cmp(a));
        for &k in &grid {
            let mut inf = f64::INFINITY;
            for kr in &s.kernels {
                inf = inf.min(kernel_ratio(&kr.gamma, kr.y, k, s.t, Side::Lower)?);
            }
            if inf > 0.0 {
                kappa = k;
                c_lower = inf;
                break;
            }
        }
        rows.push(EnvelopeRow { t: s.t, amplitude: s.amplitude, x: s.x, y: s.y, c_upper, kappa, c_lower });
    }
    let mut amps: Vec<f64> = rows.iter().map(|r| r.amplitude).collect();
    amps.sort_by(f64::total_cmp);
    amps.dedup();
    let expo = 2.0 / (1.0 - alpha);
    let fits = amps
        .iter()
        .map(|&a| {
            let sel: Vec<&EnvelopeRow> = rows.iter().filter(|r| r.amplitude == a).collect();
            let u: Vec<f64> = sel.iter().map(|r| r.t * (r.x * r.x + r.y.powf(expo))).collect();
            let v: Vec<f64> = sel.iter().map(|r| r.c_upper.ln()).collect();
            (a, linear_fit(&u, &v))
        })
        .collect();
    Ok(EnvelopeReport { c, alpha, rows, fits })
}

/// Kernel matrix product `∫ A(x, z) B(z, y) dz`.
pub fn compose_kernels(spec: &GridSpec, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    let vol = spec.cell_volume();
    let bt: Vec<Vec<f64>> = (0..m).map(|y| (0..m).map(|z| b[z][y]).collect()).collect();
    a.iter().map(|row| bt.iter().map(|col| vol * pairwise_sum_by(m, &|z| row[z] * col[z])).collect()).collect()
}

/// Outcome of the Chapman–Kolmogorov lower-bound bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub a: f64,
    pub kappa: f64,
    pub m: f64,
    /// `(t, inf q_t/p(κt), M^{−1−t/a})` per tested time.
    pub checks: Vec<(f64, f64, f64)>,
}

fn matrix_inf_ratio(spec: &GridSpec, q: &[Vec<f64>], dilation: f64, t: f64) -> Result<f64> {
    let m = q.len();
    let mut inf = f64::INFINITY;
    for y in 0..m {
        let col = GridField { spec: *spec, values: (0..m).map(|x| q[x][y]).collect() };
        inf = inf.min(kernel_ratio(&col, y, dilation, t, Side::Lower)?);
    }
    Ok(inf)
}

/// Lower bound at short time `a` from a kernel matrix `q_a`, propagated to
/// `t = n a` by `n`-fold self-composition and compared with
/// `M^{−1−t/a} p(κt, ·)`.
pub fn bootstrap_lower_bound(
    spec: &GridSpec,
    q_a: &[Vec<f64>],
    a: f64,
    kappa_grid: &[f64],
    max_factor: usize,
) -> Result<BootstrapReport> {
    let mut grid = kappa_grid.to_vec();
    grid.sort_by(|x, y| y.total_cmp(x));
    let mut chosen = None;
    for &k in &grid {
        let inf = matrix_inf_ratio(spec, q_a, k, a)?;
        if inf > 0.0 {
            chosen = Some((k, 1.0 / inf));
            break;
        }
    }
    let (kappa, m) = chosen.ok_or(Error::EnvelopeViolated { min: 0.0 })?;
    let mut checks = Vec::new();
    let mut q = q_a.to_vec();
    for n in 1..=max_factor {
        if n > 1 {
            q = compose_kernels(spec, &q, q_a);
        }
        let t = n as f64 * a;
        let inf = matrix_inf_ratio(spec, &q, kappa, t)?;
        checks.push((t, inf, m.powf(-1.0 - t / a)));
    }
    Ok(BootstrapReport { a, kappa, m, checks })
}
