//! The kernel as a series of iterated transport corrections.
//!
//! With `u⁰_s = P_s φ` and `u^{k+1}_s = ∫_0^s P_{s−r}(b_{t−r}·∇u^k_r) dr`,
//! the backward solution at time-to-go `t` is `Σ_k u^k_t`. For `φ = δ_y`
//! this is `Γ_t(·, y)`, and `Ψ^{y,k}_s = b_{t−s}·∇u^{k−1}_s` are the
//! families whose heat-flowed integrals make up the terms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duhamel::{Duhamel, Orientation, TimeMesh, Trajectory};
use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{derivative, GridField, GridSpec, VectorField};
use crate::littlewood_paley::DriftField;

/// Truncation and time-quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub k_max: usize,
    /// Stop once a term's sup norm falls below `tol · sup P_t φ`.
    pub tol: f64,
    /// Intervals of the time mesh (even).
    pub intervals: usize,
    /// First mesh step; `None` picks `0.2 / (d ξ_max²)`.
    pub tau_min: Option<f64>,
    /// Combine the mesh with its coarsening as `(4 G_N − G_{N/2}) / 3`.
    pub richardson: bool,
    /// Largest admissible relative gap between the two meshes.
    pub divergence_tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { k_max: 12, tol: 1e-6, intervals: 128, tau_min: None, richardson: true, divergence_tol: 1e-2 }
    }
}

impl SeriesOptions {
    pub fn mesh(&self, spec: &GridSpec, t: f64) -> Result<TimeMesh> {
        let tau = self.tau_min.unwrap_or_else(|| default_tau_min(spec));
        TimeMesh::graded(t, self.intervals, tau)
    }
}

/// First mesh step that resolves the fastest mode of the grid.
pub fn default_tau_min(spec: &GridSpec) -> f64 {
    0.2 / (spec.dim() as f64 * spec.xi_max().powi(2))
}

/// `Ψ^{y,k}_s` sampled on a mesh over `[0, t]`.
#[derive(Debug, Clone)]
pub struct PsiFamily {
    pub k: usize,
    pub t: f64,
    pub y: usize,
    pub mesh: TimeMesh,
    pub fields: Vec<GridField>,
}

impl PsiFamily {
    fn coeffs(&self) -> Trajectory {
        self.fields.iter().map(|f| fourier::forward(&f.spec, &f.values)).collect()
    }

    /// `∫_0^t ‖Ψ_s‖_{L^1} ds` by the trapezoid rule on the mesh.
    pub fn integrated_l1(&self) -> f64 {
        let norms: Vec<f64> = self.fields.iter().map(|f| crate::grid::lp_norm(f, 1.0)).collect();
        self.mesh.nodes.windows(2).zip(norms.windows(2)).map(|(s, n)| 0.5 * (s[1] - s[0]) * (n[0] + n[1])).sum()
    }
}

fn check_time(b: &DriftField, t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be positive")));
    }
    if t > b.horizon() + 1e-12 {
        return Err(Error::InvalidArgument(format!("time {t} beyond the drift horizon {}", b.horizon())));
    }
    b.spec().check_wraparound(t)
}

fn to_fields(spec: &GridSpec, traj: &Trajectory) -> Vec<GridField> {
    traj.iter().map(|c| GridField { spec: *spec, values: fourier::inverse_real(spec, c.clone()) }).collect()
}

/// `Ψ^{y,1}_s = b_{t−s}·∇p(s, · − y)` on `mesh`.
pub fn psi_first(b: &DriftField, t: f64, y: usize, mesh: &TimeMesh) -> Result<PsiFamily> {
    check_time(b, t)?;
    let spec = b.spec();
    let op = Duhamel::new(&spec, mesh.clone(), Orientation::Backward { terminal: t });
    let delta = GridField::delta(spec, y);
    let u0 = op.heat_flow(&fourier::forward(&spec, &delta.values));
    let psi = op.source(b, &u0);
    Ok(PsiFamily { k: 1, t, y, mesh: mesh.clone(), fields: to_fields(&spec, &psi) })
}

/// `u^k_s = ∫_0^s P_{s−r} Ψ^{y,k}_r dr` at every node, with a Richardson
/// check of the last node against the coarsened mesh.
fn integrate_family(b: &DriftField, fam: &PsiFamily, divergence_tol: f64) -> Result<(Duhamel, Trajectory)> {
    let spec = b.spec();
    let op = Duhamel::new(&spec, fam.mesh.clone(), Orientation::Backward { terminal: fam.t });
    let coeffs = fam.coeffs();
    let u = op.integrate(&coeffs);
    if let Ok(coarse_mesh) = fam.mesh.coarsened() {
        let coarse = Duhamel::new(&spec, coarse_mesh, Orientation::Backward { terminal: fam.t });
        let sub: Trajectory = coeffs.iter().step_by(2).cloned().collect();
        let uc = coarse.integrate(&sub);
        let fine_end = fourier::inverse_real(&spec, u.last().unwrap().clone());
        let coarse_end = fourier::inverse_real(&spec, uc.last().unwrap().clone());
        let scale = crate::sum::max_abs(&fine_end);
        if scale > 0.0 {
            let gap = fine_end.iter().zip(&coarse_end).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max) / scale;
            if gap > divergence_tol {
                return Err(Error::QuadratureDivergence { gap });
            }
        }
    }
    Ok((op, u))
}

/// `Ψ^{y,k+1}_s = b_{t−s}·∇∫_0^s P_{s−r} Ψ^{y,k}_r dr`.
pub fn psi_next(b: &DriftField, prev: &PsiFamily) -> Result<PsiFamily> {
    let (op, u) = integrate_family(b, prev, 0.5)?;
    let psi = op.source(b, &u);
    Ok(PsiFamily { k: prev.k + 1, t: prev.t, y: prev.y, mesh: prev.mesh.clone(), fields: to_fields(&b.spec(), &psi) })
}

/// `∫_0^t P_{t−r} Ψ^{y,k}_r dr`, the `k`-th correction to `p(t, · − y)`.
pub fn psi_term(b: &DriftField, fam: &PsiFamily) -> Result<GridField> {
    let (_, u) = integrate_family(b, fam, 0.5)?;
    Ok(GridField { spec: b.spec(), values: fourier::inverse_real(&b.spec(), u.last().unwrap().clone()) })
}

/// A summed series with its per-term record.
#[derive(Debug, Clone)]
pub struct ParametrixResult {
    pub t: f64,
    /// Source site (the terminal point for backward kernels, the start
    /// point for forward densities).
    pub y: usize,
    /// Number of correction terms summed.
    pub k_used: usize,
    pub gamma: GridField,
    pub grad_gamma: VectorField,
    /// `terms[0]` is the heat flow, `terms[k]` the `k`-th correction.
    pub terms: Vec<GridField>,
    pub term_sup_norms: Vec<f64>,
    /// Geometric tail bound from the last two terms.
    pub tail_estimate: f64,
    /// Largest relative sup gap between the fine and coarse meshes.
    pub richardson_gap: f64,
}

fn series(
    b: &DriftField,
    t: f64,
    phi: &GridField,
    orientation: Orientation,
    y: usize,
    opts: &SeriesOptions,
) -> Result<ParametrixResult> {
    check_time(b, t)?;
    let spec = b.spec();
    if phi.spec != spec {
        return Err(Error::SpecMismatch);
    }
    if opts.k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let fine_mesh = opts.mesh(&spec, t)?;
    let fine = Duhamel::new(&spec, fine_mesh.clone(), orientation);
    let coarse = if opts.richardson { Some(Duhamel::new(&spec, fine_mesh.coarsened()?, orientation)) } else { None };
    let phi_hat = fourier::forward(&spec, &phi.values);

    let end = |traj: &Trajectory| traj.last().unwrap().clone();
    let mut uf = fine.heat_flow(&phi_hat);
    let mut uc = coarse.as_ref().map(|c| c.heat_flow(&phi_hat));
    let heat = GridField { spec, values: fourier::inverse_real(&spec, end(&uf)) };
    let scale = heat.sup_abs();
    let mut terms = vec![heat];
    let mut sup_norms = Vec::new();
    let mut gap: f64 = 0.0;
    let mut sum_hat: Vec<Complex64> = end(&uf);

    for k in 1..=opts.k_max {
        uf = fine.apply(b, &uf);
        let fine_end = end(&uf);
        let term_hat: Vec<Complex64> = match (&coarse, uc.as_mut()) {
            (Some(c), Some(ucv)) => {
                *ucv = c.apply(b, ucv);
                let coarse_end = end(ucv);
                let f = fourier::inverse_real(&spec, fine_end.clone());
                let g = fourier::inverse_real(&spec, coarse_end.clone());
                let diff = f.iter().zip(&g).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
                gap = gap.max(diff / scale);
                fine_end.iter().zip(&coarse_end).map(|(a, c)| (a * 4.0 - c) / 3.0).collect()
            }
            _ => fine_end,
        };
        let term = GridField { spec, values: fourier::inverse_real(&spec, term_hat.clone()) };
        for (s, c) in sum_hat.iter_mut().zip(&term_hat) {
            *s += c;
        }
        sup_norms.push(term.sup_abs());
        terms.push(term);
        let _ = k;
        if *sup_norms.last().unwrap() <= opts.tol * scale {
            break;
        }
    }
    if gap > opts.divergence_tol {
        return Err(Error::QuadratureDivergence { gap });
    }
    let k_used = sup_norms.len();
    let last = sup_norms[k_used - 1];
    let ratio = if k_used >= 2 && sup_norms[k_used - 2] > 0.0 { last / sup_norms[k_used - 2] } else { 0.0 };
    let converged = last <= opts.tol * scale;
    if !converged && k_used >= 2 && ratio >= 1.0 {
        return Err(Error::NoDecay { term: k_used, ratio });
    }
    let tail_estimate = if last == 0.0 {
        0.0
    } else if ratio < 1.0 && ratio > 0.0 {
        last * ratio / (1.0 - ratio)
    } else {
        last
    };
    let gamma = GridField { spec, values: fourier::inverse_real(&spec, sum_hat) };
    let grad_gamma = series_gradient(&terms);
    Ok(ParametrixResult {
        t,
        y,
        k_used,
        gamma,
        grad_gamma,
        terms,
        term_sup_norms: sup_norms,
        tail_estimate,
        richardson_gap: gap,
    })
}

fn series_gradient(terms: &[GridField]) -> VectorField {
    let spec = terms[0].spec;
    let d = spec.dim();
    let components = (0..d)
        .map(|axis| {
            let mut mu = vec![0; d];
            mu[axis] = 1;
            let mut acc = GridField::zeros(spec);
            for term in terms {
                let g = derivative(term, &mu);
                for (a, v) in acc.values.iter_mut().zip(&g.values) {
                    *a += v;
                }
            }
            acc
        })
        .collect();
    VectorField { components }
}

/// `x ↦ Γ_t(x, y)`, the backward kernel with terminal point `y`.
pub fn gamma_series(b: &DriftField, t: f64, y: usize, opts: &SeriesOptions) -> Result<ParametrixResult> {
    let delta = GridField::delta(b.spec(), y);
    series(b, t, &delta, Orientation::Backward { terminal: t }, y, opts)
}

/// `x ↦ E_x[φ(X_t)] = ∫ Γ_t(x, z) φ(z) dz` for a general terminal datum.
pub fn solve_terminal(b: &DriftField, t: f64, phi: &GridField, opts: &SeriesOptions) -> Result<ParametrixResult> {
    series(b, t, phi, Orientation::Backward { terminal: t }, b.spec().origin(), opts)
}

/// `y ↦ Γ_t(x0, y)`, the forward transition density from `x0`.
pub fn forward_density(b: &DriftField, t: f64, x0: usize, opts: &SeriesOptions) -> Result<ParametrixResult> {
    let delta = GridField::delta(b.spec(), x0);
    series(b, t, &delta, Orientation::Forward, x0, opts)
}

/// `∂^μ_x Γ_t(·, y)` summed term by term, `|μ| = 1`.
pub fn gamma_grad(result: &ParametrixResult, mu: &[usize]) -> Result<GridField> {
    if mu.iter().sum::<usize>() != 1 || mu.len() != result.gamma.spec.dim() {
        return Err(Error::InvalidArgument("gamma_grad needs |mu| = 1".into()));
    }
    let axis = mu.iter().position(|&m| m == 1).unwrap();
    Ok(result.grad_gamma.components[axis].clone())
}

/// Kernel matrix `K[x][y] = Γ_t(x, y)` for every source site.
pub fn kernel_matrix(b: &DriftField, t: f64, opts: &SeriesOptions) -> Result<Vec<Vec<f64>>> {
    let spec = b.spec();
    let cols: Vec<Vec<f64>> = (0..spec.sites())
        .into_par_iter()
        .map(|y| gamma_series(b, t, y, opts).map(|r| r.gamma.values))
        .collect::<Result<_>>()?;
    let m = spec.sites();
    Ok((0..m).map(|x| (0..m).map(|y| cols[y][x]).collect()).collect())
}

/// `‖Γ_{0,t}(·,y) − ∫ Γ_{0,s}(·,z) Γ_{s,t}(z,y) dz‖_∞ / sup p(t, ·)`, with
/// `Γ_{s,t}` built from the shifted drift `r ↦ b(r + s)`.
pub fn chapman_kolmogorov_residual(b: &DriftField, s: f64, t: f64, y: usize, opts: &SeriesOptions) -> Result<f64> {
    if !(0.0 < s && s < t) {
        return Err(Error::InvalidArgument("need 0 < s < t".into()));
    }
    let full = gamma_series(b, t, y, opts)?;
    let late = gamma_series(&b.shifted(s), t - s, y, opts)?;
    let composed = solve_terminal(b, s, &late.gamma, opts)?;
    let p = crate::grid::gaussian(&b.spec(), t)?.field.sup_abs();
    Ok(full.gamma.max_abs_diff(&composed.gamma)? / p)
}
