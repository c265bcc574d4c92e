//! The backward Cauchy problem as a mild-solution fixed point.
//!
//! In time-to-go `s`, the solution of `∂_t u + ½Δu + b·∇u = 0`,
//! `u(T) = φ`, is the fixed point of
//! `(Θv)_s = P_s φ + ∫_0^s P_{s−r}(b_{T−r}·∇v_r) dr`.
//! [`picard_solve`] iterates Θ on contraction-sized segments and restarts
//! each segment from the previous terminal slice. The time mesh and
//! quadrature are chosen independently of the parametrix module so that
//! the two routes to the kernel cross-check each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::duhamel::{Duhamel, Orientation, TimeMesh, Trajectory};
use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{gaussian_at, GridField, GridSpec};
use crate::littlewood_paley::{BesovIndex, DriftField, DyadicPartition};

/// A field sampled on a time mesh, with a blow-up weight `s^δ`.
#[derive(Debug, Clone)]
pub struct TimeField {
    pub nodes: Vec<f64>,
    pub fields: Vec<GridField>,
    pub delta: f64,
}

impl TimeField {
    pub fn last(&self) -> &GridField {
        self.fields.last().unwrap()
    }

    fn coeffs(&self) -> Trajectory {
        self.fields.iter().map(|f| fourier::forward(&f.spec, &f.values)).collect()
    }

    fn from_coeffs(spec: &GridSpec, nodes: Vec<f64>, traj: Trajectory, delta: f64) -> Self {
        let fields =
            traj.into_iter().map(|c| GridField { spec: *spec, values: fourier::inverse_real(spec, c) }).collect();
        Self { nodes, fields, delta }
    }

    /// `sup_j s_j^δ ‖v_j − w_j‖_∞`.
    pub fn weighted_sup_diff(&self, other: &Self) -> f64 {
        self.nodes
            .iter()
            .zip(self.fields.iter().zip(&other.fields))
            .map(|(&s, (a, b))| s.powf(self.delta) * a.max_abs_diff(b).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// `sup_j s_j^δ ‖v_j‖_∞`.
    pub fn weighted_sup(&self) -> f64 {
        self.nodes.iter().zip(&self.fields).map(|(&s, f)| s.powf(self.delta) * f.sup_abs()).fold(0.0, f64::max)
    }
}

/// `sup_j s_j^δ ‖v_{s_j}‖_{B^s_{p,q}}`; nodes at `s = 0` count only for `δ = 0`.
pub fn weighted_norm(v: &TimeField, delta: f64, idx: BesovIndex, part: &DyadicPartition) -> Result<f64> {
    let mut out: f64 = 0.0;
    for (&s, f) in v.nodes.iter().zip(&v.fields) {
        let w = if delta == 0.0 { 1.0 } else { s.powf(delta) };
        if w > 0.0 {
            out = out.max(w * part.besov_norm(f, idx)?);
        }
    }
    Ok(out)
}

/// `(Θv)_s` on the mesh of `v`, for terminal real time `terminal`.
pub fn theta_apply(phi: &GridField, b: &DriftField, v: &TimeField, terminal: f64) -> Result<TimeField> {
    let spec = b.spec();
    if phi.spec != spec || v.fields.iter().any(|f| f.spec != spec) {
        return Err(Error::SpecMismatch);
    }
    let op = Duhamel::new(&spec, TimeMesh::new(v.nodes.clone())?, Orientation::Backward { terminal });
    let (traj, _) = theta_coeffs(&op, b, &fourier::forward(&spec, &phi.values), &v.coeffs());
    Ok(TimeField::from_coeffs(&spec, v.nodes.clone(), traj, v.delta))
}

fn theta_coeffs(
    op: &Duhamel,
    b: &DriftField,
    phi_hat: &[num_complex::Complex64],
    v: &Trajectory,
) -> (Trajectory, Trajectory) {
    let heat = op.heat_flow(phi_hat);
    let corr = op.apply(b, v);
    let out = heat.iter().zip(&corr).map(|(h, c)| h.iter().zip(c).map(|(a, b)| a + b).collect()).collect();
    (out, heat)
}

/// Step horizon and segment cover for the Picard iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionPlan {
    /// Horizon before snapping to the step grid.
    pub t0_raw: f64,
    pub t0: f64,
    /// `C_fit t₀^{1−(α+β)/2} (X + Y)`.
    pub factor: f64,
    pub c_fit: f64,
    pub segments: Vec<(f64, f64)>,
}

/// Largest multiple of `step` (capped at `horizon`) with
/// `c_fit · t₀^{1−(α+β)/2} (X + Y) ≤ 1/2`.
pub fn step_horizon(
    x: f64,
    y: f64,
    alpha: f64,
    beta: f64,
    c_fit: f64,
    horizon: f64,
    step: f64,
) -> Result<ContractionPlan> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1/2)")));
    }
    if !(beta > 1.0 + alpha && beta < 2.0 - alpha) {
        return Err(Error::InvalidArgument(format!("beta = {beta} outside (1 + alpha, 2 − alpha)")));
    }
    if !(horizon > 0.0 && step > 0.0) || x < 0.0 || y < 0.0 {
        return Err(Error::InvalidArgument("horizon, step and norms must be positive".into()));
    }
    let e = 1.0 - 0.5 * (alpha + beta);
    let strength = c_fit * (x + y);
    let t0_raw = if strength == 0.0 { f64::INFINITY } else { (0.5 / strength).powf(1.0 / e) };
    let t0 = if t0_raw >= horizon {
        horizon
    } else {
        let steps = (t0_raw / step * (1.0 + 1e-12)).floor();
        if steps < 1.0 {
            return Err(Error::HorizonTooSmall { t0: t0_raw, step });
        }
        steps * step
    };
    let mut segments = Vec::new();
    let mut a = 0.0;
    while a < horizon - 1e-12 * horizon {
        let b = (a + t0).min(horizon);
        segments.push((a, b));
        a = b;
    }
    Ok(ContractionPlan { t0_raw, t0, factor: strength * t0.powf(e), c_fit, segments })
}

/// Measures `sup ‖K w‖_{C^β} / (τ^{1−(α+β)/2} (X+Y) ‖w‖_{C^β})` over random
/// band-limited `w`, for the transport part `K` of Θ on horizons `taus`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_contraction(
    b: &DriftField,
    part: &DyadicPartition,
    x: f64,
    y: f64,
    beta: f64,
    taus: &[f64],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let spec = b.spec();
    let e = 1.0 - 0.5 * (b.alpha + beta);
    let idx = BesovIndex::new(beta, f64::INFINITY, f64::INFINITY)?;
    let strength = x + y;
    if strength == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = spec.n() / 8;
    let mut c: f64 = 0.0;
    for _ in 0..samples {
        let phases: Vec<(f64, f64)> =
            (0..top).map(|_| (rng.random::<f64>() * std::f64::consts::TAU, rng.random::<f64>())).collect();
        let kl = 2.0 * std::f64::consts::PI / spec.length();
        let w = GridField::from_fn(spec, |p| {
            let mut v = 0.0;
            for (k, &(ph, a)) in phases.iter().enumerate() {
                let arg: f64 = p.iter().map(|c| kl * (k + 1) as f64 * c).sum();
                v += a * (arg + ph).cos() / (k + 1) as f64;
            }
            v
        });
        for &tau in taus {
            let mesh = TimeMesh::uniform(tau, 16)?;
            let v = TimeField { nodes: mesh.nodes.clone(), fields: vec![w.clone(); mesh.nodes.len()], delta: 0.0 };
            let zero = GridField::zeros(spec);
            let kw = theta_apply(&zero, b, &v, b.horizon().min(tau))?;
            let ratio = weighted_norm(&kw, 0.0, idx, part)? / part.besov_norm(&w, idx)?;
            c = c.max(ratio / (tau.powf(e) * strength));
        }
    }
    Ok(c)
}

/// Iteration controls for [`picard_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Intervals per segment.
    pub intervals: usize,
    /// Blow-up weight used in the residual.
    pub delta: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 60, intervals: 256, delta: 0.5 }
    }
}

/// Per-segment iteration record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub segments: Vec<(f64, f64)>,
    pub factor: f64,
    pub iterations: Vec<usize>,
    pub final_residual: f64,
    /// Successive residuals of the first segment.
    pub residuals: Vec<f64>,
}

/// Solves the backward problem with terminal datum `phi` at real time `t`,
/// returning the solution on `(0, t]` in time-to-go.
pub fn picard_solve(
    phi: &GridField,
    b: &DriftField,
    t: f64,
    plan: &ContractionPlan,
    opts: &PicardOptions,
) -> Result<(TimeField, SolverReport)> {
    let spec = b.spec();
    if phi.spec != spec {
        return Err(Error::SpecMismatch);
    }
    let mut data = phi.clone();
    let mut nodes = Vec::new();
    let mut fields = Vec::new();
    let mut iterations = Vec::new();
    let mut first_residuals = Vec::new();
    let mut final_residual: f64 = 0.0;
    for (m, &(a, c)) in plan.segments.iter().enumerate() {
        let len = c - a;
        let mesh =
            if m == 0 { TimeMesh::quadratic(len, opts.intervals)? } else { TimeMesh::uniform(len, opts.intervals)? };
        let op = Duhamel::new(&spec, mesh.clone(), Orientation::Backward { terminal: t - a });
        let phi_hat = fourier::forward(&spec, &data.values);
        let mut v = op.heat_flow(&phi_hat);
        let mut iters = 0;
        let mut residual = f64::INFINITY;
        let weights: Vec<f64> = mesh.nodes.iter().map(|&s| (a + s).powf(opts.delta)).collect();
        while iters < opts.max_iter {
            let (next, _) = theta_coeffs(&op, b, &phi_hat, &v);
            iters += 1;
            let mut diff: f64 = 0.0;
            let mut size: f64 = 0.0;
            for (j, (u, w)) in next.iter().zip(&v).enumerate() {
                let du: Vec<num_complex::Complex64> = u.iter().zip(w).map(|(p, q)| p - q).collect();
                let dr = fourier::inverse_real(&spec, du);
                let ur = fourier::inverse_real(&spec, u.clone());
                diff = diff.max(weights[j] * crate::sum::max_abs(&dr));
                size = size.max(weights[j] * crate::sum::max_abs(&ur));
            }
            residual = if size > 0.0 { diff / size } else { 0.0 };
            if m == 0 {
                first_residuals.push(residual);
            }
            v = next;
            if residual <= opts.tol {
                break;
            }
        }
        if residual > opts.tol {
            return Err(Error::NoConvergence { iterations: iters, residual });
        }
        iterations.push(iters);
        final_residual = final_residual.max(residual);
        let seg = TimeField::from_coeffs(&spec, mesh.nodes.iter().map(|s| a + s).collect(), v, opts.delta);
        let skip = if m == 0 { 0 } else { 1 };
        data = seg.last().clone();
        nodes.extend_from_slice(&seg.nodes[skip..]);
        fields.extend(seg.fields.into_iter().skip(skip));
    }
    let report = SolverReport {
        segments: plan.segments.clone(),
        factor: plan.factor,
        iterations,
        final_residual,
        residuals: first_residuals,
    };
    Ok((TimeField { nodes, fields, delta: opts.delta }, report))
}

/// `x ↦ u(0, x)` for terminal datum `p(ε, · − y)` at time `t`.
pub fn gamma_via_cauchy(
    b: &DriftField,
    t: f64,
    y: usize,
    eps: f64,
    plan: &ContractionPlan,
    opts: &PicardOptions,
) -> Result<(GridField, SolverReport)> {
    let spec = b.spec();
    let h2 = spec.spacing().powi(2);
    if eps < h2 * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("eps = {eps} below h² = {h2}")));
    }
    let phi = gaussian_at(&spec, eps, y)?;
    let (v, report) = picard_solve(&phi, b, t, plan, opts)?;
    Ok((v.last().clone(), report))
}

/// Richardson combination `2 Γ_ε − Γ_{2ε}`, removing the `O(ε)` bias.
pub fn gamma_via_cauchy_extrapolated(
    b: &DriftField,
    t: f64,
    y: usize,
    eps: f64,
    plan: &ContractionPlan,
    opts: &PicardOptions,
) -> Result<GridField> {
    let (g1, _) = gamma_via_cauchy(b, t, y, 2.0 * eps, plan, opts)?;
    let (g2, _) = gamma_via_cauchy(b, t, y, eps, plan, opts)?;
    g2.zip_with(&g1, |a, c| 2.0 * a - c)
}
