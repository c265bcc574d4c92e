use std::f64::consts::PI;

use heatkernel::bounds::{
    beta_fn, fit_envelope, i_empirical, i_rhs, kernel_ratio, linear_fit, m_delta, series_bound_l, series_log_sum,
    series_partial, sharp_const_drift, EnvelopeSample, IConstants, Side,
};
use heatkernel::grid::GridSpec;
use heatkernel::littlewood_paley::DriftField;
use heatkernel::parametrix::{gamma_series, SeriesOptions};
use libm::lgamma;
use proptest::prelude::*;

#[test]
fn beta_function_examples() {
    assert!((beta_fn(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
    assert!((beta_fn(0.5, 0.5).unwrap() - PI).abs() < 1e-12);
    // High-precision reference value.
    assert!((beta_fn(0.7, 2.3).unwrap() - 0.757_228_305_102_932_1).abs() < 1e-8);
    assert!(beta_fn(0.0, 1.0).is_err());
}

#[test]
fn m_delta_is_a_nonincreasing_majorant() {
    let deltas = [0.1, 0.25, 0.5, 1.0];
    let ms: Vec<f64> = deltas.iter().map(|&d| m_delta(d).unwrap()).collect();
    assert!(ms.windows(2).all(|w| w[1] <= w[0]), "{ms:?}");
    for (&d, &m) in deltas.iter().zip(&ms) {
        for i in 0..=10 {
            let b = d + (1.0 - d) * i as f64 / 10.0;
            for j in 0..=40 {
                let g = d * (64.0f64).powf(j as f64 / 40.0);
                assert!(beta_fn(b, g).unwrap() * g.powf(b) <= m * (1.0 + 1e-12));
            }
        }
    }
    assert!(m_delta(0.0).is_err());
}

#[test]
fn series_partial_examples() {
    let s = series_partial(0.0, 0.5, 10).unwrap();
    assert_eq!((s.sum, s.remainder), (1.0, 0.0));
    // Σ 4^k / √(k!), high-precision reference value.
    let full = series_partial(4.0, 0.5, 120).unwrap();
    assert!((full.sum / 13_292.753_217_594_17 - 1.0).abs() < 1e-12);
    let short = series_partial(4.0, 0.5, 40).unwrap();
    assert!(short.sum + short.remainder >= full.sum * (1.0 - 1e-12));
    // ln Σ 10^k / (k!)^{0.3}, high-precision reference value.
    let ls = series_log_sum(10.0, 0.3);
    assert!((ls - 650.261_940_950_128_7).abs() < 1e-9, "{ls}");
    assert!(series_partial(1.0, 1.5, 3).is_err());
}

#[test]
fn series_bound_constant_holds_on_its_grid() {
    let beta = 0.5;
    let l = series_bound_l(beta, 50.0, 501).unwrap();
    assert!(l >= 1.0 && l.is_finite());
    for j in 0..=500 {
        let z = 0.1 * j as f64;
        assert!(series_log_sum(z, beta) <= l.ln() + l * z.powf(1.0 / beta) + 1e-12);
    }
}

#[test]
fn i_rhs_examples() {
    let consts = IConstants { c: 1.3, m: 2.0, k: 0.7 };
    assert_eq!(i_rhs(3, 0, 0.25, 0.25, 1.0, 0.0, 0.0, consts), 0.0);
    // Independent resummation in reverse order.
    let (k, i, beta, alpha, t, x, y) = (6usize, 1usize, 0.25f64, 0.25f64, 0.8f64, 0.9f64, 1.4f64);
    let a = consts.c * consts.m * x * t.sqrt();
    let b = consts.c * consts.m * y * t.powf(0.5 * (1.0 - alpha));
    let mut acc = 0.0f64;
    for m in (0..=k).rev() {
        let n = k - m;
        acc += a.powi(m as i32) / (0.5 * (1.0 - beta) * lgamma(m as f64 + 1.0)).exp() * b.powi(n as i32)
            / (0.5 * (1.0 - alpha - beta) * lgamma(n as f64 + 1.0)).exp();
    }
    let expect = consts.k * t.powf(-0.5 * (i as f64 + beta)) * acc;
    let got = i_rhs(k, i, beta, alpha, t, x, y, consts);
    assert!((got / expect - 1.0).abs() < 1e-12);
}

#[test]
fn i_empirical_vanishes_without_drift() {
    let spec = GridSpec::new(1, 256, 8.0 * PI).unwrap();
    let b = DriftField::zero(&spec, 0.25).unwrap();
    let v = i_empirical(&b, 0.5, 2, 1, true, &[spec.origin()], 2.0, &SeriesOptions::default()).unwrap();
    assert_eq!(v, 0.0);
    assert!(i_empirical(&b, 0.5, 0, 1, true, &[spec.origin()], 2.0, &SeriesOptions::default()).is_err());
}

#[test]
fn sharp_constants_for_constant_drift() {
    let up = sharp_const_drift(1.0, 2.0, 1.0, 1, Side::Upper).unwrap();
    let lo = sharp_const_drift(1.0, 0.5, 1.0, 1, Side::Lower).unwrap();
    assert!((up - 2.3316).abs() < 1e-4);
    assert!((lo - 0.2601).abs() < 1e-4);
    assert!((sharp_const_drift(0.0, 3.0, 1.0, 2, Side::Upper).unwrap() - 3.0).abs() < 1e-15);
    assert!(sharp_const_drift(1.0, 1.0, 1.0, 1, Side::Upper).is_err());
    assert!(sharp_const_drift(1.0, 1.2, 1.0, 1, Side::Lower).is_err());
}

#[test]
fn envelope_without_drift_is_the_dilation_factor() {
    let spec = GridSpec::new(1, 512, 40.0).unwrap();
    let b = DriftField::zero(&spec, 0.25).unwrap();
    let opts = SeriesOptions::default();
    let samples: Vec<EnvelopeSample> = [0.5, 1.0]
        .iter()
        .map(|&t| EnvelopeSample {
            t,
            amplitude: 0.0,
            x: 0.0,
            y: 0.0,
            kernels: vec![gamma_series(&b, t, spec.origin(), &opts).unwrap()],
        })
        .collect();
    let rep = fit_envelope(&samples, 2.0, &[0.5, 0.9], 0.25).unwrap();
    for row in &rep.rows {
        assert!((row.c_upper - 2f64.sqrt()).abs() < 1e-6, "{row:?}");
        assert_eq!(row.kappa, 0.9);
        assert!((row.c_lower - 0.9f64.sqrt()).abs() < 1e-6);
    }
    let k = &samples[0].kernels[0];
    assert!(kernel_ratio(&k.gamma, k.y, 2.0, 0.5, Side::Upper).unwrap() >= 1.0);
    assert!(fit_envelope(&samples, 1.0, &[0.5], 0.25).is_err());
}

#[test]
fn linear_fit_recovers_a_line() {
    let u = [0.0, 1.0, 2.0, 3.0];
    let v: Vec<f64> = u.iter().map(|x| 2.0 - 0.5 * x).collect();
    let f = linear_fit(&u, &v);
    assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14 && (f.r2 - 1.0).abs() < 1e-14);
}

proptest! {
    #[test]
    fn beta_is_symmetric(a in 0.01f64..10.0, b in 0.01f64..10.0) {
        let (x, y) = (beta_fn(a, b).unwrap(), beta_fn(b, a).unwrap());
        prop_assert!((x - y).abs() <= 1e-13 * x.abs());
    }

    #[test]
    fn fractional_power_is_subadditive(a in 0.0f64..100.0, b in 0.0f64..100.0, alpha in 0.01f64..1.0) {
        prop_assert!((a + b).powf(alpha) <= (a.powf(alpha) + b.powf(alpha)) * (1.0 + 1e-14));
    }

    #[test]
    fn series_log_sum_matches_partial_sums(z in 0.01f64..6.0, beta in 0.3f64..0.9) {
        let direct = series_partial(z, beta, 2000).unwrap().sum.ln();
        prop_assert!((series_log_sum(z, beta) - direct).abs() < 1e-10);
    }
}
