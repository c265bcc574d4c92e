//! Dyadic frequency blocks, Besov norms and drift fields.
//!
//! The cutoffs are radial: `ρ_{−1} = χ`, `ρ_0(ξ) = χ(ξ/2) − χ(ξ)` and
//! `ρ_i = ρ_0(2^{−i}·)`, where `χ` is a smooth step equal to 1 on `|ξ| ≤ 1`
//! and to 0 on `|ξ| ≥ 4/3`. Block `−1` carries weight 1 in every Besov
//! norm, so the norms are monotone in the regularity index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{lp_norm_values, GridField, GridSpec, VectorField};

fn bump(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = bump(x);
        a / (a + bump(1.0 - x))
    }
}

/// The low-pass profile `χ(r)`.
pub fn chi(r: f64) -> f64 {
    1.0 - smoothstep(3.0 * (r.abs() - 1.0))
}

/// Radial profile `ρ_i(r)` for `i ≥ −1`.
pub fn rho(i: i32, r: f64) -> f64 {
    let r = r.abs();
    if i < 0 {
        return chi(r);
    }
    let s = r / 2f64.powi(i);
    chi(s / 2.0) - chi(s)
}

/// Selects a single block or the whole high-frequency part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Index(i32),
    /// `Δ_{≥0} = Σ_{i≥0} Δ_i`.
    Geq0,
}

/// Sampled dyadic partition of unity on a grid.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    spec: GridSpec,
    j_max: i32,
    /// `weights[i + 1][mode]` is `ρ_i` at that mode.
    weights: Vec<Vec<f64>>,
}

impl DyadicPartition {
    /// Samples `ρ_{−1}, …, ρ_{j_max}` with `j_max = ⌈log₂ ξ_max⌉ + 1`.
    pub fn new(spec: &GridSpec) -> Result<Self> {
        if spec.n() < 16 {
            return Err(Error::PartitionInfeasible);
        }
        let j_max = spec.xi_max().log2().ceil() as i32 + 1;
        if j_max < 1 {
            return Err(Error::PartitionInfeasible);
        }
        let radii: Vec<f64> = (0..spec.sites()).map(|k| spec.xi_squared(k).sqrt()).collect();
        let weights = (-1..=j_max).map(|i| radii.iter().map(|&r| rho(i, r)).collect()).collect();
        Ok(Self { spec: *spec, j_max, weights })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Block indices `−1..=j_max`.
    pub fn indices(&self) -> impl Iterator<Item = i32> {
        -1..=self.j_max
    }

    /// `ρ_i` sampled on the flat mode grid.
    pub fn weights(&self, i: i32) -> Result<&[f64]> {
        if i < -1 || i > self.j_max {
            return Err(Error::IndexOutOfRange { index: i, j_max: self.j_max });
        }
        Ok(&self.weights[(i + 1) as usize])
    }

    /// Largest block whose whole support lies below the Nyquist frequency.
    pub fn last_resolved_block(&self) -> i32 {
        let xi = self.spec.xi_max();
        let mut i = 0;
        while (8.0 / 3.0) * 2f64.powi(i + 1) <= xi {
            i += 1;
        }
        i
    }

    fn multiplier(&self, block: Block) -> Result<Vec<f64>> {
        match block {
            Block::Index(i) => Ok(self.weights(i)?.to_vec()),
            Block::Geq0 => Ok(self.weights[0].iter().map(|w| 1.0 - w).collect()),
        }
    }

    /// `Δ_i f` or `Δ_{≥0} f`.
    pub fn block(&self, f: &GridField, block: Block) -> Result<GridField> {
        if f.spec != self.spec {
            return Err(Error::SpecMismatch);
        }
        let m = self.multiplier(block)?;
        let values = fourier::apply_symbol(&self.spec, &f.values, |k| Complex64::new(m[k], 0.0));
        Ok(GridField { spec: self.spec, values })
    }

    /// All blocks `Δ_{−1} f, …, Δ_{j_max} f` from a single forward transform.
    pub fn decompose(&self, f: &GridField) -> Result<Vec<GridField>> {
        if f.spec != self.spec {
            return Err(Error::SpecMismatch);
        }
        let coeffs = fourier::forward(&self.spec, &f.values);
        Ok(self
            .weights
            .iter()
            .map(|w| {
                let c = coeffs.iter().zip(w).map(|(c, &w)| c * w).collect();
                GridField { spec: self.spec, values: fourier::inverse_real(&self.spec, c) }
            })
            .collect())
    }

    /// Besov norm: the `ℓ^q` norm over blocks of `2^{s·max(i,0)} ‖Δ_i f‖_{L^p}`.
    ///
    /// ```
    /// use heatkernel::grid::{GridField, GridSpec};
    /// use heatkernel::littlewood_paley::{BesovIndex, DyadicPartition};
    /// let spec = GridSpec::new(1, 256, 2.0 * std::f64::consts::PI).unwrap();
    /// let part = DyadicPartition::new(&spec).unwrap();
    /// // 11 lies where ρ_3 = 1.
    /// let f = GridField::from_fn(spec, |x| 0.5 * (11.0 * x[0]).cos());
    /// let norm = part.besov_norm(&f, BesovIndex::new(2.0, f64::INFINITY, 1.0).unwrap()).unwrap();
    /// assert!((norm - 64.0 * 0.5).abs() < 1e-8);
    /// ```
    pub fn besov_norm(&self, f: &GridField, idx: BesovIndex) -> Result<f64> {
        let blocks = self.decompose(f)?;
        let terms: Vec<f64> = blocks
            .iter()
            .zip(self.indices())
            .map(|(b, i)| 2f64.powf(idx.s * i.max(0) as f64) * lp_norm_values(&self.spec, &b.values, idx.p))
            .collect();
        Ok(lq(&terms, idx.q))
    }

    /// Sum of component Besov norms.
    pub fn besov_norm_vector(&self, v: &VectorField, idx: BesovIndex) -> Result<f64> {
        v.components.iter().map(|c| self.besov_norm(c, idx)).sum()
    }

    /// `‖Δ_i f‖_{L^p}` for every block.
    pub fn block_norms(&self, f: &GridField, p: f64) -> Result<Vec<f64>> {
        Ok(self.decompose(f)?.iter().map(|b| lp_norm_values(&self.spec, &b.values, p)).collect())
    }

    /// Rows `(i, |ξ|, ρ_i)` over the distinct radial frequencies of the grid.
    pub fn dump(&self) -> Vec<(i32, f64, f64)> {
        let n = self.spec.n();
        let mut rows = Vec::new();
        for i in self.indices() {
            for k in 0..=n / 2 {
                let xi = self.spec.wavenumber(k).abs();
                rows.push((i, xi, rho(i, xi)));
            }
        }
        rows
    }
}

fn lq(terms: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        terms.iter().fold(0.0, |m: f64, &t| m.max(t))
    } else {
        terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Regularity, integrability and summability of a Besov space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid Besov index ({s}, {p}, {q})")));
        }
        Ok(Self { s, p, q })
    }
}

/// A time-sampled drift `b(t_j, ·)`.
///
/// A single sample stands for a drift that does not depend on time.
/// Evaluation at time `t` picks the nearest stored sample.
#[derive(Debug, Clone)]
pub struct DriftField {
    pub times: Vec<f64>,
    pub samples: Vec<VectorField>,
    pub alpha: f64,
}

impl DriftField {
    pub fn new(times: Vec<f64>, samples: Vec<VectorField>, alpha: f64) -> Result<Self> {
        if times.is_empty() || times.len() != samples.len() {
            return Err(Error::InvalidArgument("drift needs one sample per time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("drift times must increase".into()));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1/2)")));
        }
        let spec = samples[0].spec();
        if samples.iter().any(|s| s.spec() != spec || s.components.len() != spec.dim()) {
            return Err(Error::SpecMismatch);
        }
        Ok(Self { times, samples, alpha })
    }

    /// Time-independent drift.
    pub fn autonomous(b: VectorField, alpha: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![b], alpha)
    }

    /// Zero drift on `spec`.
    pub fn zero(spec: &GridSpec, alpha: f64) -> Result<Self> {
        Self::autonomous(VectorField::zeros(*spec), alpha)
    }

    /// Samples `f(t, x)` (one value per component) on the given times.
    pub fn from_fn(
        spec: &GridSpec,
        times: Vec<f64>,
        alpha: f64,
        f: impl Fn(f64, &[f64], usize) -> f64,
    ) -> Result<Self> {
        let samples = times
            .iter()
            .map(|&t| VectorField {
                components: (0..spec.dim()).map(|c| GridField::from_fn(*spec, |x| f(t, x, c))).collect(),
            })
            .collect();
        Self::new(times, samples, alpha)
    }

    pub fn spec(&self) -> GridSpec {
        self.samples[0].spec()
    }

    pub fn is_autonomous(&self) -> bool {
        self.samples.len() == 1
    }

    /// Last stored time, or `∞` for an autonomous drift.
    pub fn horizon(&self) -> f64 {
        if self.is_autonomous() {
            f64::INFINITY
        } else {
            *self.times.last().unwrap()
        }
    }

    /// Index of the sample nearest to `t`.
    pub fn sample_index(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.times.len() => i - 1,
            Err(i) => {
                if t - self.times[i - 1] <= self.times[i] - t {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    pub fn at(&self, t: f64) -> &VectorField {
        &self.samples[self.sample_index(t)]
    }

    /// The shifted drift `r ↦ b(r + s)`.
    pub fn shifted(&self, s: f64) -> Self {
        if self.is_autonomous() {
            return self.clone();
        }
        let start = self.sample_index(s);
        let t0 = self.times[start];
        let times: Vec<f64> = self.times[start..].iter().map(|t| t - t0).collect();
        Self { times, samples: self.samples[start..].to_vec(), alpha: self.alpha }
    }

    /// Applies `f` to every component of every sample.
    pub fn map_fields(&self, f: impl Fn(&GridField) -> Result<GridField>) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|v| Ok(VectorField { components: v.components.iter().map(&f).collect::<Result<_>>()? }))
            .collect::<Result<_>>()?;
        Ok(Self { times: self.times.clone(), samples, alpha: self.alpha })
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_fields(|g| Ok(g.scale(c))).expect("scaling keeps the grid")
    }

    /// `sup_{t,x} |b|` summed over components.
    pub fn sup_abs(&self) -> f64 {
        self.samples.iter().map(VectorField::sup_abs).fold(0.0, f64::max)
    }
}

/// The norms `X = max_j ‖Δ_{−1} b_j‖_∞` and
/// `Y = max_j ‖Δ_{≥0} b_j‖_{B^{−α}_{∞,1}}`.
pub fn drift_norms(b: &DriftField, part: &DyadicPartition) -> Result<(f64, f64)> {
    let idx = BesovIndex::new(-b.alpha, f64::INFINITY, 1.0)?;
    let mut x_max: f64 = 0.0;
    let mut y_max: f64 = 0.0;
    for sample in &b.samples {
        let mut x = 0.0;
        let mut y = 0.0;
        for c in &sample.components {
            x += part.block(c, Block::Index(-1))?.sup_abs();
            y += part.besov_norm(&part.block(c, Block::Geq0)?, idx)?;
        }
        x_max = x_max.max(x);
        y_max = y_max.max(y);
    }
    Ok((x_max, y_max))
}

/// `b^{(n)} = Σ_{i=1}^{n} Δ_i b`, sample by sample.
pub fn mollify_drift(b: &DriftField, part: &DyadicPartition, n: i32) -> Result<DriftField> {
    if n < 1 {
        return Err(Error::InvalidArgument(format!("mollification level {n} must be at least 1")));
    }
    let top = n.min(part.j_max());
    let spec = *part.spec();
    let mask: Vec<f64> =
        (0..spec.sites()).map(|k| (1..=top).map(|i| part.weights[(i + 1) as usize][k]).sum()).collect();
    b.map_fields(|g| {
        if g.spec != spec {
            return Err(Error::SpecMismatch);
        }
        Ok(GridField { spec, values: fourier::apply_symbol(&spec, &g.values, |k| Complex64::new(mask[k], 0.0)) })
    })
}

/// Integrability exponents of a product estimate.
#[derive(Debug, Clone, Copy)]
pub struct ProductExponents {
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
}

/// `‖uv‖_{B^α_{p,q₁}} / (‖u‖_{B^α_{p₁,q₁}} ‖v‖_{B^β_{p₂,q₂}})` with
/// `1/p = 1/p₁ + 1/p₂`.
pub fn product_bound_ratio(
    part: &DyadicPartition,
    u: &GridField,
    v: &GridField,
    alpha: f64,
    beta: f64,
    e: ProductExponents,
) -> Result<f64> {
    if !(alpha < 0.0 && beta > 0.0 && alpha + beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "product estimate needs alpha < 0 < beta and alpha + beta > 0, got ({alpha}, {beta})"
        )));
    }
    let p = 1.0 / (1.0 / e.p1 + 1.0 / e.p2);
    let uv = u.zip_with(v, |a, b| a * b)?;
    let num = part.besov_norm(&uv, BesovIndex::new(alpha, p, e.q1)?)?;
    if num == 0.0 {
        return Ok(0.0);
    }
    let den = part.besov_norm(u, BesovIndex::new(alpha, e.p1, e.q1)?)?
        * part.besov_norm(v, BesovIndex::new(beta, e.p2, e.q2)?)?;
    Ok(num / den)
}
