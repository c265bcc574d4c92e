//! Product integration of Duhamel integrals in Fourier space.
//!
//! For a source `F(r)` the integral `V(s) = ∫_0^s P_{s−r} F(r) dr` is, mode
//! by mode, `∫_0^s e^{−λ(s−r)} F̂(r) dr` with `λ = |ξ|²/2`. Taking `F̂`
//! piecewise linear between mesh nodes and integrating the exponential
//! exactly gives the one-step recursion
//! `V_{j+1} = e^{−λΔ} V_j + w₀ F_j + w₁ F_{j+1}`,
//! which absorbs the stiffness of high modes and costs one pass per mesh.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::GridSpec;
use crate::littlewood_paley::DriftField;

/// Time nodes `0 = s_0 < s_1 < … < s_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    pub nodes: Vec<f64>,
}

impl TimeMesh {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("mesh must start at 0 and increase".into()));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(t: f64, intervals: usize) -> Result<Self> {
        Self::new((0..=intervals).map(|j| t * j as f64 / intervals as f64).collect())
    }

    /// Nodes `s_j = a(q^j − 1)` with first step `tau_min` and `s_N = t`:
    /// uniform with step `tau_min` near 0, then geometric.
    pub fn graded(t: f64, intervals: usize, tau_min: f64) -> Result<Self> {
        if !(t > 0.0 && tau_min > 0.0) || intervals < 2 {
            return Err(Error::InvalidArgument("graded mesh needs t, tau_min > 0".into()));
        }
        if tau_min * intervals as f64 >= t {
            return Self::uniform(t, intervals);
        }
        // Solve τ (q^N − 1)/(q − 1) = t for q > 1.
        let n = intervals as f64;
        let total = |q: f64| tau_min * ((n * (q.ln())).exp_m1() / (q - 1.0));
        let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
        while total(hi) < t {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        let a = tau_min / (q - 1.0);
        let mut nodes: Vec<f64> = (0..=intervals).map(|j| a * (j as f64 * q.ln()).exp_m1()).collect();
        nodes[intervals] = t;
        Self::new(nodes)
    }

    /// Nodes `t (j/N)²`: a square-root grading at the origin.
    pub fn quadratic(t: f64, intervals: usize) -> Result<Self> {
        let n = intervals as f64;
        Self::new((0..=intervals).map(|j| t * (j as f64 / n).powi(2)).collect())
    }

    /// Every other node; the mesh must have an even number of intervals.
    pub fn coarsened(&self) -> Result<Self> {
        if !(self.nodes.len() - 1).is_multiple_of(2) {
            return Err(Error::InvalidArgument("coarsening needs an even interval count".into()));
        }
        Self::new(self.nodes.iter().step_by(2).copied().collect())
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Which transport term the Duhamel operator carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    /// Backward equation in time-to-go `r`: source `b(T − r)·∇w`.
    Backward { terminal: f64 },
    /// Forward equation: source `−∇·(b(r) w)`.
    Forward,
}

/// Fourier coefficients of a field at every mesh node.
pub type Trajectory = Vec<Vec<Complex64>>;

struct StepWeights {
    decay: Vec<f64>,
    w0: Vec<f64>,
    w1: Vec<f64>,
}

/// `(1 − e^{−x})/x` and `(x − 1 + e^{−x})/x²`, stable near 0.
fn phi_pair(x: f64) -> (f64, f64) {
    if x < 1e-2 {
        let x2 = x * x;
        let p1 = 1.0 - x / 2.0 + x2 / 6.0 - x2 * x / 24.0 + x2 * x2 / 120.0;
        let p2 = 0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0 + x2 * x2 / 720.0;
        (p1, p2)
    } else {
        let em = (-x).exp_m1();
        (-em / x, (x + em) / (x * x))
    }
}

/// Duhamel operator `w ↦ ∫_0^s P_{s−r} F[w](r) dr` on a fixed mesh.
pub struct Duhamel {
    spec: GridSpec,
    mesh: TimeMesh,
    lambda: Vec<f64>,
    steps: Vec<StepWeights>,
    grad: Vec<Vec<Complex64>>,
    orientation: Orientation,
}

impl Duhamel {
    pub fn new(spec: &GridSpec, mesh: TimeMesh, orientation: Orientation) -> Self {
        let lambda: Vec<f64> = (0..spec.sites()).map(|k| 0.5 * spec.xi_squared(k)).collect();
        let steps = mesh
            .nodes
            .windows(2)
            .map(|w| {
                let dt = w[1] - w[0];
                let mut decay = Vec::with_capacity(lambda.len());
                let mut w0 = Vec::with_capacity(lambda.len());
                let mut w1 = Vec::with_capacity(lambda.len());
                for &l in &lambda {
                    let x = l * dt;
                    let (p1, p2) = phi_pair(x);
                    decay.push((-x).exp());
                    w0.push(dt * (p1 - p2));
                    w1.push(dt * p2);
                }
                StepWeights { decay, w0, w1 }
            })
            .collect();
        let d = spec.dim();
        let grad = (0..d)
            .map(|axis| {
                let mut mu = vec![0; d];
                mu[axis] = 1;
                (0..spec.sites()).map(|k| fourier::derivative_symbol(spec, &mu, k)).collect()
            })
            .collect();
        Self { spec: *spec, mesh, lambda, steps, grad, orientation }
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// `P_{s_j} φ` at every node.
    pub fn heat_flow(&self, phi: &[Complex64]) -> Trajectory {
        self.mesh
            .nodes
            .iter()
            .map(|&s| phi.iter().zip(&self.lambda).map(|(c, &l)| c * (-l * s).exp()).collect())
            .collect()
    }

    /// Real time at which the drift is read for node `j`.
    pub fn drift_time(&self, j: usize) -> f64 {
        match self.orientation {
            Orientation::Backward { terminal } => terminal - self.mesh.nodes[j],
            Orientation::Forward => self.mesh.nodes[j],
        }
    }

    /// Transport source at one node, in Fourier space.
    pub fn source_at(&self, drift: &DriftField, j: usize, w: &[Complex64]) -> Vec<Complex64> {
        let spec = &self.spec;
        let b = drift.at(self.drift_time(j));
        match self.orientation {
            Orientation::Backward { .. } => {
                let mut acc = vec![0.0; spec.sites()];
                for (axis, comp) in b.components.iter().enumerate() {
                    let g: Vec<Complex64> = w.iter().zip(&self.grad[axis]).map(|(c, m)| c * m).collect();
                    let g = fourier::inverse_real(spec, g);
                    for ((a, gv), bv) in acc.iter_mut().zip(&g).zip(&comp.values) {
                        *a += bv * gv;
                    }
                }
                fourier::forward(spec, &acc)
            }
            Orientation::Forward => {
                let wr = fourier::inverse_real(spec, w.to_vec());
                let mut out = vec![Complex64::new(0.0, 0.0); spec.sites()];
                for (axis, comp) in b.components.iter().enumerate() {
                    let bw: Vec<f64> = wr.iter().zip(&comp.values).map(|(a, b)| a * b).collect();
                    let c = fourier::forward(spec, &bw);
                    for ((o, c), m) in out.iter_mut().zip(&c).zip(&self.grad[axis]) {
                        *o -= c * m;
                    }
                }
                out
            }
        }
    }

    /// Transport source at every node.
    pub fn source(&self, drift: &DriftField, w: &Trajectory) -> Trajectory {
        (0..w.len()).into_par_iter().map(|j| self.source_at(drift, j, &w[j])).collect()
    }

    /// `V(s_j) = ∫_0^{s_j} P_{s_j − r} F(r) dr` for piecewise-linear `F`.
    pub fn integrate(&self, f: &Trajectory) -> Trajectory {
        let m = self.spec.sites();
        let mut out = Vec::with_capacity(f.len());
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        out.push(v.clone());
        for (j, st) in self.steps.iter().enumerate() {
            let (fa, fb) = (&f[j], &f[j + 1]);
            for k in 0..m {
                v[k] = v[k] * st.decay[k] + fa[k] * st.w0[k] + fb[k] * st.w1[k];
            }
            out.push(v.clone());
        }
        out
    }

    /// One application of the Duhamel transport operator.
    pub fn apply(&self, drift: &DriftField, w: &Trajectory) -> Trajectory {
        self.integrate(&self.source(drift, w))
    }
}
