//! Named drift families.

use std::f64::consts::PI;

use heatkernel::grid::GridSpec;
use heatkernel::littlewood_paley::{DriftField, DyadicPartition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Preset;
use crate::CliError;

/// Nearest grid wavenumber to `xi`, at least one step above zero.
fn snap(spec: &GridSpec, xi: f64) -> f64 {
    let step = 2.0 * PI / spec.length();
    (xi / step).round().max(1.0) * step
}

/// Parameters shared by all presets.
#[derive(Debug, Clone, Copy)]
pub struct PresetParams {
    pub amplitude: f64,
    pub alpha: f64,
    pub xi0: f64,
    pub seed: u64,
    pub time_samples: usize,
    /// Last stored time for time-dependent presets.
    pub horizon: f64,
}

/// Builds the drift on `spec`.
///
/// * `zero`: `b = 0`.
/// * `constant`: `b_c = A`.
/// * `single-mode`: `b_c = A cos(ξ₀ x_c)`.
/// * `multi-mode`: one mode per dyadic block `i ≥ −1`, amplitude
///   `A 2^{−α max(i, 0)}`, seeded phases and axes.
/// * `time-varying`: `b_c = A sin(t) cos(ξ₀ x_c)`.
pub fn build(spec: &GridSpec, preset: Preset, p: PresetParams) -> Result<DriftField, CliError> {
    let a = p.amplitude;
    let xi0 = snap(spec, p.xi0);
    let drift = match preset {
        Preset::Zero => DriftField::zero(spec, p.alpha)?,
        Preset::Constant => DriftField::from_fn(spec, vec![0.0], p.alpha, |_, _, _| a)?,
        Preset::SingleMode => DriftField::from_fn(spec, vec![0.0], p.alpha, |_, x, c| a * (xi0 * x[c]).cos())?,
        Preset::TimeVarying => {
            let m = p.time_samples - 1;
            let times = (0..=m).map(|j| p.horizon * j as f64 / m as f64).collect();
            DriftField::from_fn(spec, times, p.alpha, |t, x, c| a * t.sin() * (xi0 * x[c]).cos())?
        }
        Preset::MultiMode => {
            let part = DyadicPartition::new(spec)?;
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            // (component, axis, ξ, amplitude, phase)
            let mut modes = Vec::new();
            for c in 0..spec.dim() {
                for i in -1..=part.last_resolved_block() {
                    let target = if i < 0 { 0.5 } else { 1.5 * 2f64.powi(i) };
                    let axis = if spec.dim() == 1 { 0 } else { rng.random_range(0..2) };
                    let phase = rng.random::<f64>() * 2.0 * PI;
                    let amp = a * 2f64.powf(-p.alpha * i.max(0) as f64);
                    modes.push((c, axis, snap(spec, target), amp, phase));
                }
            }
            DriftField::from_fn(spec, vec![0.0], p.alpha, |_, x, c| {
                modes
                    .iter()
                    .filter(|m| m.0 == c)
                    .map(|&(_, axis, xi, amp, phase)| amp * (xi * x[axis] + phase).cos())
                    .sum()
            })?
        }
    };
    Ok(drift)
}
