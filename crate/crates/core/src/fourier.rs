//! Discrete Fourier transforms on a [`GridSpec`].
//!
//! Coefficients are stored in FFT order along every axis, flattened
//! row-major like the spatial values. The forward transform is unnormalized
//! and the inverse divides by `n^d`, so a multiplier `m(ξ)` applied between
//! the two realizes the periodic Fourier multiplier with symbol `m`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

fn transform(spec: &GridSpec, data: &mut [Complex64], forward: bool) {
    let n = spec.n();
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Rows (last axis) are contiguous.
    for row in data.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    if spec.dim() == 2 {
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            fft.process_with_scratch(&mut col, &mut scratch);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }
}

/// Forward transform of real samples.
pub fn forward(spec: &GridSpec, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(spec, &mut data, true);
    data
}

/// Forward transform of complex samples, in place.
pub fn forward_in_place(spec: &GridSpec, data: &mut [Complex64]) {
    transform(spec, data, true);
}

/// Inverse transform, returning the real part.
pub fn inverse_real(spec: &GridSpec, mut coeffs: Vec<Complex64>) -> Vec<f64> {
    transform(spec, &mut coeffs, false);
    let scale = 1.0 / spec.sites() as f64;
    coeffs.iter().map(|c| c.re * scale).collect()
}

/// Applies the symbol `m` (evaluated at each mode) to real samples.
pub fn apply_symbol(spec: &GridSpec, values: &[f64], m: impl Fn(usize) -> Complex64) -> Vec<f64> {
    let mut coeffs = forward(spec, values);
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= m(k);
    }
    inverse_real(spec, coeffs)
}

/// Symbol of `∂^μ`, with the Nyquist mode removed along axes of odd order.
pub fn derivative_symbol(spec: &GridSpec, mu: &[usize], mode: usize) -> Complex64 {
    let n = spec.n();
    let idx = spec.mode_index(mode);
    let mut out = Complex64::new(1.0, 0.0);
    for (axis, &order) in mu.iter().enumerate() {
        if order == 0 {
            continue;
        }
        let k = idx[axis];
        if order % 2 == 1 && k == n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let ik = Complex64::new(0.0, spec.wavenumber(k));
        out *= ik.powu(order as u32);
    }
    out
}

/// Phase that moves a field by `shift` sites along every axis: the returned
/// factor turns the transform of `f` into the transform of `f(· - shift h)`.
pub fn shift_phase(spec: &GridSpec, shift: &[usize], mode: usize) -> Complex64 {
    let n = spec.n() as f64;
    let idx = spec.mode_index(mode);
    let mut phase = 0.0;
    for (axis, &s) in shift.iter().enumerate() {
        phase -= 2.0 * std::f64::consts::PI * (idx[axis] * s) as f64 / n;
    }
    Complex64::from_polar(1.0, phase)
}
