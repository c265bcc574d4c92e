//! Periodic grids, sampled fields and the heat semigroup.
//!
//! The box is `[-L/2, L/2)^d` with `n` points per axis; the origin sits at
//! index `n/2` on every axis. Gaussians and semigroup actions are built
//! spectrally, which gives the exact periodization of the free-space kernel.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;
use crate::sum::{max_abs, pairwise_sum, pairwise_sum_by};

/// A uniform periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    n: usize,
    length: f64,
}

impl GridSpec {
    /// Builds a grid with `n` points per axis on a box of side `length`.
    ///
    /// ```
    /// use heatkernel::grid::GridSpec;
    /// let spec = GridSpec::new(1, 256, 40.0).unwrap();
    /// assert_eq!(spec.spacing(), 0.15625);
    /// assert!(GridSpec::new(1, 100, 40.0).is_err());
    /// ```
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidArgument(format!("box length {length} must be positive")));
        }
        Ok(Self { d, n, length })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Total number of sites, `n^d`.
    pub fn sites(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Coordinate of index `j` along an axis.
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    /// Per-axis indices of a flat site (the second entry is 0 in 1-d).
    pub fn index(&self, site: usize) -> [usize; 2] {
        if self.d == 1 {
            [site, 0]
        } else {
            [site / self.n, site % self.n]
        }
    }

    /// Flat site of per-axis indices, wrapping periodically.
    pub fn site(&self, idx: &[usize]) -> usize {
        match self.d {
            1 => idx[0] % self.n,
            _ => (idx[0] % self.n) * self.n + idx[1] % self.n,
        }
    }

    /// Spatial position of a site (second entry 0 in 1-d).
    pub fn position(&self, site: usize) -> [f64; 2] {
        let [i, j] = self.index(site);
        if self.d == 1 {
            [self.coord(i), 0.0]
        } else {
            [self.coord(i), self.coord(j)]
        }
    }

    /// The site at the origin.
    pub fn origin(&self) -> usize {
        self.site(&[self.n / 2, self.n / 2])
    }

    /// Site closest to `x`, with periodic wrapping.
    pub fn nearest_site(&self, x: &[f64]) -> usize {
        let h = self.spacing();
        let n = self.n as i64;
        let axis = |v: f64| -> usize {
            let j = ((v + 0.5 * self.length) / h).round() as i64;
            j.rem_euclid(n) as usize
        };
        if self.d == 1 {
            axis(x[0])
        } else {
            self.site(&[axis(x[0]), axis(x[1])])
        }
    }

    /// Wavenumber `2πk/L` of FFT index `k`, with `k ≥ n/2` read as `k − n`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let signed = if (k as i64) < n / 2 { k as i64 } else { k as i64 - n };
        2.0 * PI * signed as f64 / self.length
    }

    /// Per-axis FFT indices of a flat mode.
    pub fn mode_index(&self, mode: usize) -> [usize; 2] {
        self.index(mode)
    }

    /// Frequency vector of a flat mode (second entry 0 in 1-d).
    pub fn frequency(&self, mode: usize) -> [f64; 2] {
        let [a, b] = self.mode_index(mode);
        if self.d == 1 {
            [self.wavenumber(a), 0.0]
        } else {
            [self.wavenumber(a), self.wavenumber(b)]
        }
    }

    /// `|ξ|²` of a flat mode.
    pub fn xi_squared(&self, mode: usize) -> f64 {
        let [a, b] = self.frequency(mode);
        a * a + b * b
    }

    /// Largest per-axis frequency magnitude, `πn/L`.
    pub fn xi_max(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Site reached from `site` by the point reflection `x ↦ −x`.
    pub fn reflect(&self, site: usize) -> usize {
        let [i, j] = self.index(site);
        let r = |a: usize| (self.n - a) % self.n;
        if self.d == 1 {
            r(i)
        } else {
            self.site(&[r(i), r(j)])
        }
    }

    /// Raises [`Error::WraparoundRisk`] when a kernel of variance `t` would
    /// feel the periodic images.
    pub fn check_wraparound(&self, t: f64) -> Result<()> {
        let limit = self.length / 8.0;
        if t.sqrt() > limit {
            return Err(Error::WraparoundRisk { sqrt_t: t.sqrt(), limit });
        }
        Ok(())
    }
}

/// Real samples of a scalar function on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.sites() {
            return Err(Error::InvalidArgument(format!("expected {} values, got {}", spec.sites(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field has non-finite values".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![0.0; spec.sites()] }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self { spec, values: vec![c; spec.sites()] }
    }

    /// Samples `f` at every site.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..spec.sites())
            .map(|s| {
                let p = spec.position(s);
                f(&p[..spec.dim()])
            })
            .collect();
        Self { spec, values }
    }

    /// Grid delta of unit mass at `site`.
    pub fn delta(spec: GridSpec, site: usize) -> Self {
        let mut f = Self::zeros(spec);
        f.values[site] = 1.0 / spec.cell_volume();
        f
    }

    /// `h^d Σ f`.
    pub fn integral(&self) -> f64 {
        self.spec.cell_volume() * pairwise_sum(&self.values)
    }

    pub fn sup_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { spec: self.spec, values })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `sup |self − other|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| a - b)?.sup_abs())
    }

    /// Circular shift by whole sites: the result at `x` is `self(x − shift·h)`.
    pub fn roll(&self, shift: &[usize]) -> Self {
        let spec = self.spec;
        let n = spec.n();
        let mut values = vec![0.0; spec.sites()];
        for (s, v) in values.iter_mut().enumerate() {
            let [i, j] = spec.index(s);
            let src = if spec.dim() == 1 {
                (i + n - shift[0] % n) % n
            } else {
                spec.site(&[(i + n - shift[0] % n) % n, (j + n - shift[1] % n) % n])
            };
            *v = self.values[src];
        }
        Self { spec, values }
    }

    /// Forces `f(−x) = sign·f(x)` by averaging reflected pairs.
    fn symmetrize(&mut self, sign: f64) {
        let spec = self.spec;
        for s in 0..spec.sites() {
            let r = spec.reflect(s);
            if r > s {
                let avg = 0.5 * (self.values[s] + sign * self.values[r]);
                self.values[s] = avg;
                self.values[r] = sign * avg;
            } else if r == s && sign < 0.0 {
                self.values[s] = 0.0;
            }
        }
    }
}

/// A vector field with one [`GridField`] per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: Vec<GridField>,
}

impl VectorField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { components: vec![GridField::zeros(spec); spec.dim()] }
    }

    pub fn spec(&self) -> GridSpec {
        self.components[0].spec
    }

    /// Sum of component sup norms.
    pub fn sup_abs(&self) -> f64 {
        self.components.iter().map(GridField::sup_abs).sum()
    }
}

/// The periodized Gaussian `p(t, ·)` centred at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelField {
    pub t: f64,
    pub field: GridField,
}

/// Transform of `p(t, · − y)` with `y` at `site`.
pub(crate) fn gaussian_coeffs(spec: &GridSpec, t: f64, site: usize) -> Vec<Complex64> {
    let idx = spec.index(site);
    let inv_vol = 1.0 / spec.cell_volume();
    (0..spec.sites())
        .map(|k| fourier::shift_phase(spec, &idx[..spec.dim()], k) * (inv_vol * (-0.5 * t * spec.xi_squared(k)).exp()))
        .collect()
}

/// Periodized heat kernel `p(t, ·)` centred at the origin.
///
/// ```
/// use heatkernel::grid::{gaussian, GridSpec};
/// let spec = GridSpec::new(1, 256, 40.0).unwrap();
/// let p = gaussian(&spec, 1.0).unwrap();
/// let at_zero = p.field.values[spec.origin()];
/// assert!((at_zero - (2.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-8);
/// assert!((p.field.integral() - 1.0).abs() < 1e-10);
/// ```
pub fn gaussian(spec: &GridSpec, t: f64) -> Result<HeatKernelField> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be positive")));
    }
    spec.check_wraparound(t)?;
    let values = fourier::inverse_real(spec, gaussian_coeffs(spec, t, spec.origin()));
    let mut field = GridField { spec: *spec, values };
    field.symmetrize(1.0);
    Ok(HeatKernelField { t, field })
}

/// `p(t, · − y)` for a grid point `y`.
pub fn gaussian_at(spec: &GridSpec, t: f64, site: usize) -> Result<GridField> {
    let p = gaussian(spec, t)?.field;
    let [a, b] = spec.index(site);
    let [o, _] = spec.index(spec.origin());
    let n = spec.n();
    Ok(p.roll(&[(a + n - o) % n, (b + n - o) % n]))
}

/// `∂^μ p(t, ·)` for `|μ| ≤ 2`.
pub fn gaussian_deriv(spec: &GridSpec, t: f64, mu: &[usize]) -> Result<GridField> {
    if mu.len() != spec.dim() {
        return Err(Error::InvalidArgument("multi-index length must equal the dimension".into()));
    }
    let order: usize = mu.iter().sum();
    if order > 2 {
        return Err(Error::DerivativeOrder(order));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be positive")));
    }
    spec.check_wraparound(t)?;
    let mut coeffs = gaussian_coeffs(spec, t, spec.origin());
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= fourier::derivative_symbol(spec, mu, k);
    }
    let mut field = GridField { spec: *spec, values: fourier::inverse_real(spec, coeffs) };
    field.symmetrize(if order.is_multiple_of(2) { 1.0 } else { -1.0 });
    Ok(field)
}

/// Spectral derivative `∂^μ f`.
pub fn derivative(f: &GridField, mu: &[usize]) -> GridField {
    let spec = f.spec;
    GridField { spec, values: fourier::apply_symbol(&spec, &f.values, |k| fourier::derivative_symbol(&spec, mu, k)) }
}

/// Spectral gradient.
pub fn gradient(f: &GridField) -> VectorField {
    let d = f.spec.dim();
    let components = (0..d)
        .map(|axis| {
            let mut mu = vec![0; d];
            mu[axis] = 1;
            derivative(f, &mu)
        })
        .collect();
    VectorField { components }
}

/// Heat semigroup `P_t f = p(t, ·) * f`.
pub fn semigroup_apply(f: &GridField, t: f64) -> Result<GridField> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let spec = f.spec;
    let values =
        fourier::apply_symbol(&spec, &f.values, |k| Complex64::new((-0.5 * t * spec.xi_squared(k)).exp(), 0.0));
    Ok(GridField { spec, values })
}

/// Periodic convolution `h^d Σ_z f(z) g(x − z)` of two fields sampled around
/// the origin.
pub fn convolve(f: &GridField, g: &GridField) -> Result<GridField> {
    if f.spec != g.spec {
        return Err(Error::SpecMismatch);
    }
    let spec = f.spec;
    let a = fourier::forward(&spec, &f.values);
    let b = fourier::forward(&spec, &g.values);
    let vol = spec.cell_volume();
    let coeffs = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(k, (x, y))| {
            let [i, j] = spec.mode_index(k);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            x * y * (vol * sign)
        })
        .collect();
    Ok(GridField { spec, values: fourier::inverse_real(&spec, coeffs) })
}

/// `(h^d Σ |f|^p)^{1/p}`, or the max norm for `p = ∞`.
pub fn lp_norm(f: &GridField, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    lp_norm_values(&f.spec, &f.values, p)
}

pub(crate) fn lp_norm_values(spec: &GridSpec, values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return max_abs(values);
    }
    let vol = spec.cell_volume();
    if p == 1.0 {
        return vol * pairwise_sum_by(values.len(), &|i| values[i].abs());
    }
    (vol * pairwise_sum_by(values.len(), &|i| values[i].abs().powf(p))).powf(1.0 / p)
}

/// `∫ p(ct, y) exp(κ|y|²/t) dy` over `ℝ^d`, by quadrature.
///
/// The integrand factorizes over coordinates; each factor is a Gaussian
/// integral done by the trapezoid rule on a range where the tail is below
/// machine precision.
pub fn gaussian_exp_moment(c: f64, kappa: f64, t: f64, d: usize) -> Result<f64> {
    if !(c > 0.0 && t > 0.0) {
        return Err(Error::InvalidArgument("c and t must be positive".into()));
    }
    let limit = 1.0 / (2.0 * c);
    if kappa >= limit {
        return Err(Error::DivergentMoment { kappa, limit });
    }
    // With y = √t u the factor is ∫ (2πc)^{-1/2} exp(−a u²) du, a = 1/(2c) − κ.
    let a = limit - kappa;
    let half_width = (40.0 / a).sqrt();
    let m = 4000usize;
    let du = 2.0 * half_width / m as f64;
    let norm = (2.0 * PI * c).powf(-0.5);
    let one_d = du
        * pairwise_sum_by(m + 1, &|j| {
            let u = -half_width + j as f64 * du;
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            w * norm * (-a * u * u).exp()
        });
    Ok(one_d.powi(d as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_arithmetic() {
        let s = GridSpec::new(2, 64, 20.0).unwrap();
        assert_eq!(s.sites(), 4096);
        assert_eq!(GridSpec::new(3, 64, 1.0), Err(Error::UnsupportedDimension(3)));
        assert_eq!(GridSpec::new(1, 8, 1.0), Err(Error::NotPowerOfTwo(8)));
    }

    #[test]
    fn frequency_range() {
        let s = GridSpec::new(1, 16, 2.0 * PI).unwrap();
        let ks: Vec<f64> = (0..16).map(|k| s.wavenumber(k)).collect();
        assert_eq!(ks[0], 0.0);
        assert_eq!(ks[7], 7.0);
        assert_eq!(ks[8], -8.0);
        assert_eq!(ks[15], -1.0);
    }

    #[test]
    fn nearest_site_wraps() {
        let s = GridSpec::new(1, 16, 16.0).unwrap();
        assert_eq!(s.nearest_site(&[0.0]), 8);
        assert_eq!(s.nearest_site(&[8.0]), 0);
        assert_eq!(s.nearest_site(&[-8.2]), 0);
    }
}
