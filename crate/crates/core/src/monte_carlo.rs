//! Euler–Maruyama ensembles under a smooth (mollified) drift.
//!
//! Each path owns a ChaCha8 stream selected by its index, so a path's
//! increments depend only on `(seed, path)` and the step count. Paths are
//! processed in fixed-size chunks whose results are concatenated in path
//! order; every statistic is therefore independent of the thread count.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{GridField, GridSpec};
use crate::littlewood_paley::DriftField;
use crate::sum::{pairwise_sum, pairwise_sum_by};

const CHUNK: usize = 4096;

/// Trigonometric interpolant of one grid field through its nonzero modes.
#[derive(Debug, Clone)]
struct TrigField {
    /// `(ξ, weighted coefficient)`; the field is `Re Σ c e^{iξ·(x + L/2)}`.
    modes: Vec<([f64; 2], Complex64)>,
    half: f64,
}

impl TrigField {
    fn new(f: &GridField) -> Self {
        let spec = f.spec;
        let coeffs = fourier::forward(&spec, &f.values);
        let scale = 1.0 / spec.sites() as f64;
        let top = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let mut modes = Vec::new();
        for (k, c) in coeffs.iter().enumerate() {
            if c.norm() <= 1e-13 * top || top == 0.0 {
                continue;
            }
            let r = spec.reflect(k);
            let w = match k.cmp(&r) {
                std::cmp::Ordering::Less => 2.0,
                std::cmp::Ordering::Equal => 1.0,
                std::cmp::Ordering::Greater => continue,
            };
            modes.push((spec.frequency(k), c * (w * scale)));
        }
        Self { modes, half: 0.5 * spec.length() }
    }

    fn eval(&self, x: [f64; 2]) -> f64 {
        let mut acc = 0.0;
        for (xi, c) in &self.modes {
            let theta = xi[0] * (x[0] + self.half) + xi[1] * (x[1] + self.half);
            let (s, co) = theta.sin_cos();
            acc += c.re * co - c.im * s;
        }
        acc
    }
}

struct TrigDrift {
    /// One interpolant per component, per stored time sample.
    samples: Vec<Vec<TrigField>>,
}

impl TrigDrift {
    fn new(b: &DriftField) -> Self {
        Self { samples: b.samples.iter().map(|v| v.components.iter().map(TrigField::new).collect()).collect() }
    }
}

/// Simulation controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub h_t: f64,
    pub horizon: f64,
    pub x0: [f64; 2],
    pub seed: u64,
    /// Times at which every path's position is stored.
    pub record_times: Vec<f64>,
    /// Number of leading paths stored in full.
    pub keep_paths: usize,
    pub drift_tag: String,
}

/// A simulated ensemble with the statistics needed downstream.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub config: EnsembleConfig,
    pub spec: GridSpec,
    pub steps: usize,
    /// Step index of each record time.
    pub record_steps: Vec<usize>,
    /// `positions[r][path]`.
    pub positions: Vec<Vec<[f64; 2]>>,
    /// `sup_{t ≤ T} |X_t − x0|` on the step grid.
    pub running_sup: Vec<f64>,
    /// Full paths including the start point.
    pub paths: Vec<Vec<[f64; 2]>>,
}

/// Summary written next to ensemble reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub h_t: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub seed: u64,
    pub drift_tag: String,
}

impl Ensemble {
    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            n: self.config.n_paths,
            h_t: self.config.h_t,
            t: self.config.horizon,
            seed: self.config.seed,
            drift_tag: self.config.drift_tag.clone(),
        }
    }

    /// Stored time closest to `t`.
    pub fn record_index(&self, t: f64) -> Result<usize> {
        let step = (t / self.config.h_t).round() as usize;
        self.record_steps
            .iter()
            .position(|&s| s == step)
            .ok_or_else(|| Error::InvalidArgument(format!("time {t} is not a record time")))
    }
}

struct ChunkOut {
    positions: Vec<Vec<[f64; 2]>>,
    sups: Vec<f64>,
    paths: Vec<Vec<[f64; 2]>>,
}

/// Euler–Maruyama simulation of `dX = b(t, X) dt + dB`.
pub fn simulate(b: &DriftField, cfg: &EnsembleConfig) -> Result<Ensemble> {
    let spec = b.spec();
    let d = spec.dim();
    if !(cfg.h_t > 0.0 && cfg.h_t <= 1e-2) {
        return Err(Error::InvalidArgument(format!("h_t = {} outside (0, 1e-2]", cfg.h_t)));
    }
    let guard = cfg.h_t * b.sup_abs();
    if guard > 0.5 {
        return Err(Error::StepTooLarge(guard));
    }
    if cfg.n_paths == 0 || !(cfg.horizon > 0.0) {
        return Err(Error::InvalidArgument("need at least one path and T > 0".into()));
    }
    let steps = (cfg.horizon / cfg.h_t).round() as usize;
    let record_steps: Vec<usize> = cfg.record_times.iter().map(|t| (t / cfg.h_t).round() as usize).collect();
    if record_steps.iter().any(|&s| s > steps) {
        return Err(Error::InvalidArgument("record time beyond the horizon".into()));
    }
    let drift = TrigDrift::new(b);
    let sample_of_step: Vec<usize> = (0..steps).map(|m| b.sample_index(m as f64 * cfg.h_t)).collect();
    let sqrt_h = cfg.h_t.sqrt();
    let chunks = cfg.n_paths.div_ceil(CHUNK);
    let outs: Vec<ChunkOut> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(cfg.n_paths);
            let mut out = ChunkOut {
                positions: vec![Vec::with_capacity(hi - lo); record_steps.len()],
                sups: Vec::with_capacity(hi - lo),
                paths: Vec::new(),
            };
            for p in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(p as u64);
                let keep = p < cfg.keep_paths;
                let mut x = cfg.x0;
                let mut path = if keep { Vec::with_capacity(steps + 1) } else { Vec::new() };
                if keep {
                    path.push(x);
                }
                let mut sup: f64 = 0.0;
                for (r, &s) in record_steps.iter().enumerate() {
                    if s == 0 {
                        out.positions[r].push(x);
                    }
                }
                for m in 0..steps {
                    let fields = &drift.samples[sample_of_step[m]];
                    let mut next = x;
                    for a in 0..d {
                        let z: f64 = rng.sample(StandardNormal);
                        next[a] = x[a] + fields[a].eval(x) * cfg.h_t + sqrt_h * z;
                    }
                    x = next;
                    let dev = ((x[0] - cfg.x0[0]).powi(2) + (x[1] - cfg.x0[1]).powi(2)).sqrt();
                    sup = sup.max(dev);
                    if keep {
                        path.push(x);
                    }
                    for (r, &s) in record_steps.iter().enumerate() {
                        if s == m + 1 {
                            out.positions[r].push(x);
                        }
                    }
                }
                out.sups.push(sup);
                if keep {
                    out.paths.push(path);
                }
            }
            out
        })
        .collect();
    let mut positions = vec![Vec::with_capacity(cfg.n_paths); record_steps.len()];
    let mut running_sup = Vec::with_capacity(cfg.n_paths);
    let mut paths = Vec::new();
    for o in outs {
        for (r, v) in o.positions.into_iter().enumerate() {
            positions[r].extend(v);
        }
        running_sup.extend(o.sups);
        paths.extend(o.paths);
    }
    Ok(Ensemble { config: cfg.clone(), spec, steps, record_steps, positions, running_sup, paths })
}

/// How positions become a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityMethod {
    /// Nearest-site histogram smoothed by a Gaussian of the given bandwidth.
    Kde,
    /// Plain nearest-site histogram.
    Histogram,
}

/// Density of the positions recorded at time `t`, with mass 1.
pub fn density_at(e: &Ensemble, t: f64, bandwidth: f64, method: DensityMethod) -> Result<GridField> {
    let r = e.record_index(t)?;
    let spec = e.spec;
    let mut counts = vec![0u64; spec.sites()];
    for x in &e.positions[r] {
        counts[spec.nearest_site(&x[..spec.dim()])] += 1;
    }
    let vol = spec.cell_volume();
    let n = e.positions[r].len() as f64;
    let hist: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * vol)).collect();
    let values = match method {
        DensityMethod::Histogram => hist,
        DensityMethod::Kde => {
            let s2 = bandwidth * bandwidth;
            fourier::apply_symbol(&spec, &hist, |k| Complex64::new((-0.5 * s2 * spec.xi_squared(k)).exp(), 0.0))
        }
    };
    let field = GridField { spec, values };
    let mass = field.integral();
    Ok(field.scale(1.0 / mass))
}

/// Escape-probability estimate with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeEstimate {
    #[serde(rename = "K")]
    pub k: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Wilson score interval for `hits` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * ((p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()) / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `P(sup_{t ≤ T} |X_t − x0| ≥ K)` on the step grid.
pub fn escape_prob(e: &Ensemble, k: f64) -> EscapeEstimate {
    let n = e.running_sup.len();
    let hits = if k <= 0.0 { n } else { e.running_sup.iter().filter(|&&s| s >= k).count() };
    let (lo, hi) = wilson_interval(hits, n, 1.959_963_984_540_054);
    EscapeEstimate { k, p_hat: hits as f64 / n as f64, ci_lo: lo, ci_hi: hi }
}

/// Gaussian upper tail `P(Z > x)`.
fn normal_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `P(sup_{t ≤ T} |B_t| ≥ K)` for a standard 1-d Brownian motion.
///
/// For `K/√T ≥ 1` the image series `4 Σ (−1)^n P(Z > (2n+1)K/√T)` is used;
/// below that the eigenfunction series for the survival probability
/// converges faster and avoids cancellation.
pub fn brownian_escape_prob(k: f64, t: f64) -> f64 {
    if k <= 0.0 {
        return 1.0;
    }
    let a = k / t.sqrt();
    let p = if a >= 1.0 {
        let terms: Vec<f64> = (0..40)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * normal_tail((2 * n + 1) as f64 * a)
            })
            .collect();
        4.0 * pairwise_sum(&terms)
    } else {
        let terms: Vec<f64> = (0..40)
            .map(|n| {
                let m = (2 * n + 1) as f64;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign / m * (-m * m * PI * PI / (8.0 * a * a)).exp()
            })
            .collect();
        1.0 - 4.0 / PI * pairwise_sum(&terms)
    };
    p.clamp(0.0, 1.0)
}

/// Threshold shift `−ζ(1/2)/√(2π) · √h_t` relating discrete and continuous
/// monitoring of a Brownian maximum.
pub fn discrete_monitoring_shift(h_t: f64) -> f64 {
    0.582_597_157_939_010_6 * h_t.sqrt()
}

/// `ψ(r) = r^{1/2} (log(1/r) ∨ 1)^{1/2}`.
pub fn psi(r: f64) -> f64 {
    r.sqrt() * (1.0 / r).ln().max(1.0).sqrt()
}

/// `ζ(r) = ∫_0^r u^{−1/2} (√log(1 + u^{−2}) ∨ 1) du`.
///
/// The maximum switches branch at `u₀ = (e − 1)^{−1/2}`; above it the
/// integral is `2(√r − √u₀)`. Below it `u = v²` leaves a logarithmic
/// endpoint singularity, handled by double-exponential quadrature.
pub fn zeta(r: f64) -> f64 {
    let u0 = 1.0 / (std::f64::consts::E - 1.0).sqrt();
    let lower = r.min(u0);
    let head = quadrature::double_exponential::integrate(
        |v: f64| 2.0 * (1.0 + v.powi(-4)).ln().sqrt(),
        0.0,
        lower.sqrt(),
        1e-13,
    )
    .integral;
    if r <= u0 {
        head
    } else {
        head + 2.0 * (r.sqrt() - u0.sqrt())
    }
}

/// `(ζ(r), ψ(r))`.
pub fn modulus_functions(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("r = {r} must be positive")));
    }
    Ok((zeta(r), psi(r)))
}

/// Result of checking the Garsia–Rodemich–Rumsey bound along one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrrReport {
    pub kappa: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub violations: usize,
    /// Largest `κ|X_t − X_s| / rhs` over the sampled pairs.
    pub max_ratio: f64,
}

/// `F_{T,κ} = ∫∫ exp(κ|X_{r₂} − X_{r₁}|²/|r₂ − r₁|) dr₁ dr₂` by the
/// trapezoid rule on the path grid, the diagonal integrand being 1.
pub fn grr_functional(path: &[[f64; 2]], h_t: f64, kappa: f64) -> Result<f64> {
    let m = path.len();
    let w = |j: usize| if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
    let total = pairwise_sum_by(m, &|a| {
        let row = pairwise_sum_by(m, &|b| {
            if a == b {
                return w(b);
            }
            let dx = (path[a][0] - path[b][0]).powi(2) + (path[a][1] - path[b][1]).powi(2);
            let dt = (a as f64 - b as f64).abs() * h_t;
            w(b) * (kappa * dx / dt).exp()
        });
        w(a) * row
    });
    let f = total * h_t * h_t;
    if !f.is_finite() {
        return Err(Error::DivergentF);
    }
    Ok(f)
}

/// `4 ∫_0^{δ} u^{−1/2} √log(1 + 4(F − T²)/u²) du`.
pub fn grr_rhs(delta: f64, f: f64, horizon: f64) -> f64 {
    let a = 4.0 * (f - horizon * horizon);
    if a <= 0.0 || delta <= 0.0 {
        return 0.0;
    }
    // u = v²: 8 ∫_0^{√δ} √log(1 + a v^{−4}) dv.
    let inner =
        quadrature::double_exponential::integrate(|v: f64| (a / v.powi(4)).ln_1p().sqrt(), 0.0, delta.sqrt(), 1e-12);
    8.0 * inner.integral
}

/// Checks `κ|X_t − X_s| ≤ rhs(t − s)` on the given index pairs.
pub fn grr_verify(path: &[[f64; 2]], h_t: f64, kappa: f64, pairs: &[(usize, usize)]) -> Result<GrrReport> {
    let horizon = (path.len() - 1) as f64 * h_t;
    let f = grr_functional(path, h_t, kappa)?;
    let g = 2.0 * f.max(4.0).sqrt();
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for &(a, b) in pairs {
        let (s, t) = (a.min(b), a.max(b));
        let lhs = kappa * ((path[t][0] - path[s][0]).powi(2) + (path[t][1] - path[s][1]).powi(2)).sqrt();
        let rhs = grr_rhs((t - s) as f64 * h_t, f, horizon);
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    Ok(GrrReport { kappa, f, g, violations, max_ratio })
}

/// `sup_{s<t} |X_t − X_s| / ψ(t − s)` over all pairs of path nodes.
pub fn sup_modulus(path: &[[f64; 2]], h_t: f64) -> f64 {
    let m = path.len();
    let psis: Vec<f64> = (0..m).map(|j| if j == 0 { 0.0 } else { psi(j as f64 * h_t) }).collect();
    let mut best: f64 = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let dx = ((path[b][0] - path[a][0]).powi(2) + (path[b][1] - path[a][1]).powi(2)).sqrt();
            best = best.max(dx / psis[b - a]);
        }
    }
    best
}

/// Deterministic index pairs `s < t` drawn from `seed`.
pub fn sample_pairs(len: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let a = rng.random_range(0..len);
            let b = rng.random_range(0..len);
            if a != b {
                break (a.min(b), a.max(b));
            }
        })
        .collect()
}

/// Mean of `exp(sup_modulus² / M)` over the stored paths.
pub fn exp_sup_moment(e: &Ensemble, m: f64) -> f64 {
    let vals: Vec<f64> = e.paths.iter().map(|p| (sup_modulus(p, e.config.h_t).powi(2) / m).exp()).collect();
    crate::sum::pairwise_sum(&vals) / vals.len() as f64
}

/// `L¹` distance between two fields on the same grid.
pub fn l1_distance(a: &GridField, b: &GridField) -> Result<f64> {
    Ok(crate::grid::lp_norm(&a.zip_with(b, |x, y| x - y)?, 1.0))
}
