use std::f64::consts::PI;

use heatkernel::error::Error;
use heatkernel::grid::{
    convolve, gaussian, gaussian_at, gaussian_deriv, gaussian_exp_moment, lp_norm, semigroup_apply, GridField, GridSpec,
};
use proptest::prelude::*;

fn trig_field(spec: GridSpec, amps: &[(f64, f64)]) -> GridField {
    let step = 2.0 * PI / spec.length();
    GridField::from_fn(spec, |x| {
        amps.iter().enumerate().map(|(k, &(a, p))| a * ((k + 1) as f64 * step * x[0] + p).cos()).sum()
    })
}

#[test]
fn make_grid_examples() {
    let s = GridSpec::new(1, 256, 40.0).unwrap();
    assert_eq!(s.spacing(), 0.15625);
    assert_eq!(GridSpec::new(2, 64, 20.0).unwrap().sites(), 4096);
    assert_eq!(GridSpec::new(1, 100, 40.0), Err(Error::NotPowerOfTwo(100)));
    assert!(matches!(GridSpec::new(3, 64, 20.0), Err(Error::UnsupportedDimension(3))));
}

#[test]
fn gaussian_examples() {
    let spec = GridSpec::new(1, 256, 40.0).unwrap();
    for t in [0.1, 1.0, 4.0] {
        let p = gaussian(&spec, t).unwrap().field;
        assert!((p.integral() - 1.0).abs() < 1e-10);
        for site in 0..spec.sites() {
            assert_eq!(p.values[site], p.values[spec.reflect(site)]);
        }
    }
    let p1 = gaussian(&spec, 1.0).unwrap().field;
    assert!((p1.values[spec.origin()] - (2.0 * PI).powf(-0.5)).abs() < 1e-8);
    assert!(matches!(gaussian(&spec, 30.0), Err(Error::WraparoundRisk { .. })));
}

#[test]
fn gaussian_tensorizes_in_two_dimensions() {
    let s1 = GridSpec::new(1, 64, 20.0).unwrap();
    let s2 = GridSpec::new(2, 64, 20.0).unwrap();
    let a = gaussian(&s1, 0.5).unwrap().field;
    let b = gaussian(&s2, 0.5).unwrap().field;
    for site in 0..s2.sites() {
        let [i, j] = s2.index(site);
        assert!((b.values[site] - a.values[i] * a.values[j]).abs() < 1e-10);
    }
}

#[test]
fn first_derivative_is_minus_x_p() {
    let spec = GridSpec::new(1, 512, 40.0).unwrap();
    let d = gaussian_deriv(&spec, 1.0, &[1]).unwrap();
    let p = gaussian(&spec, 1.0).unwrap().field;
    assert!(d.values[spec.origin()].abs() < 1e-12);
    for site in 0..spec.sites() {
        let x = spec.position(site)[0];
        assert!((d.values[site] + x * p.values[site]).abs() < 1e-8);
    }
    assert!(matches!(gaussian_deriv(&spec, 1.0, &[3]), Err(Error::DerivativeOrder(3))));
}

#[test]
fn derivative_envelope_constant_is_time_uniform() {
    let spec = GridSpec::new(1, 2048, 40.0).unwrap();
    for mu in [0usize, 1, 2] {
        let mut consts = Vec::new();
        for t in [0.01, 0.1, 1.0, 10.0] {
            let d = gaussian_deriv(&spec, t, &[mu]).unwrap();
            let env = gaussian(&spec, 2.0 * t).unwrap().field;
            let floor = 1e-8 * env.sup_abs();
            let c = d
                .values
                .iter()
                .zip(&env.values)
                .filter(|(_, &e)| e > floor)
                .map(|(v, e)| v.abs() / (t.powf(-0.5 * mu as f64) * e))
                .fold(0.0, f64::max);
            consts.push(c);
        }
        let (lo, hi) = consts.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
        assert!(hi / lo < 10.0, "mu = {mu}: {consts:?}");
    }
}

#[test]
fn semigroup_identity_at_zero() {
    let spec = GridSpec::new(1, 128, 2.0 * PI).unwrap();
    let f = trig_field(spec, &[(1.0, 0.3), (0.5, 1.0), (0.25, 2.0)]);
    assert_eq!(semigroup_apply(&f, 0.0).unwrap(), f);
}

#[test]
fn convolution_examples() {
    let spec = GridSpec::new(1, 256, 40.0).unwrap();
    for t in [0.25, 1.0] {
        for s in [t / 4.0, t / 2.0] {
            let lhs = convolve(&gaussian(&spec, t).unwrap().field, &gaussian(&spec, s).unwrap().field).unwrap();
            let rhs = gaussian(&spec, t + s).unwrap().field;
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
            // Dilated form used for the upper envelope.
            let c = 2.0;
            let lhs =
                convolve(&gaussian(&spec, c * (t - s)).unwrap().field, &gaussian(&spec, c * s).unwrap().field).unwrap();
            assert!(lhs.max_abs_diff(&gaussian(&spec, c * t).unwrap().field).unwrap() < 1e-10);
        }
    }
    let f = trig_field(spec, &[(1.0, 0.1), (0.3, 0.7)]);
    let delta = GridField::delta(spec, spec.origin());
    assert!(convolve(&f, &delta).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
    let other = GridSpec::new(1, 128, 40.0).unwrap();
    assert_eq!(convolve(&f, &GridField::zeros(other)), Err(Error::SpecMismatch));
}

#[test]
fn lp_norm_examples() {
    // The kink of |x| p at 0 limits the rule to O(h²).
    let spec = GridSpec::new(1, 16384, 40.0).unwrap();
    assert!((lp_norm(&gaussian(&spec, 0.5).unwrap().field, 1.0) - 1.0).abs() < 1e-10);
    assert_eq!(lp_norm(&GridField::constant(spec, 3.0), f64::INFINITY), 3.0);
    // ∫|x| p(1,x) dx, from an independent high-precision quadrature.
    let oracle = 0.797_884_560_802_865_4;
    let d = gaussian_deriv(&spec, 1.0, &[1]).unwrap();
    assert!((lp_norm(&d, 1.0) - oracle).abs() < 1e-6);
}

#[test]
fn exponential_moment_examples() {
    assert!((gaussian_exp_moment(0.5, 0.5, 1.0, 1).unwrap() - 2f64.sqrt()).abs() < 1e-6);
    assert!((gaussian_exp_moment(0.3, 0.0, 2.0, 2).unwrap() - 1.0).abs() < 1e-10);
    assert!(matches!(gaussian_exp_moment(0.4, 1.25, 1.0, 1), Err(Error::DivergentMoment { .. })));
}

#[test]
fn shifted_gaussian_is_a_roll() {
    let spec = GridSpec::new(1, 256, 40.0).unwrap();
    let a = gaussian_at(&spec, 1.0, spec.origin() + 10).unwrap();
    let p = gaussian(&spec, 1.0).unwrap().field;
    assert_eq!(a, p.roll(&[10, 0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn semigroup_law(
        amps in prop::collection::vec((-1.0f64..1.0, 0.0f64..6.3), 1..24),
        s in 0.01f64..1.0,
        t in 0.01f64..1.0,
    ) {
        let spec = GridSpec::new(1, 128, 2.0 * PI).unwrap();
        let f = trig_field(spec, &amps);
        let lhs = semigroup_apply(&semigroup_apply(&f, t).unwrap(), s).unwrap();
        let rhs = semigroup_apply(&f, s + t).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-10 * f.sup_abs().max(1e-300));
    }

    #[test]
    fn semigroup_is_linear(
        a in prop::collection::vec((-1.0f64..1.0, 0.0f64..6.3), 1..12),
        b in prop::collection::vec((-1.0f64..1.0, 0.0f64..6.3), 1..12),
        c in -3.0f64..3.0,
        t in 0.0f64..1.0,
    ) {
        let spec = GridSpec::new(1, 64, 2.0 * PI).unwrap();
        let (f, g) = (trig_field(spec, &a), trig_field(spec, &b));
        let combo = f.zip_with(&g, |x, y| x + c * y).unwrap();
        let lhs = semigroup_apply(&combo, t).unwrap();
        let rhs = semigroup_apply(&f, t).unwrap().zip_with(&semigroup_apply(&g, t).unwrap(), |x, y| x + c * y).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn convolution_commutes(
        a in prop::collection::vec((-1.0f64..1.0, 0.0f64..6.3), 1..12),
        b in prop::collection::vec((-1.0f64..1.0, 0.0f64..6.3), 1..12),
    ) {
        let spec = GridSpec::new(1, 64, 10.0).unwrap();
        let (f, g) = (trig_field(spec, &a), trig_field(spec, &b));
        let fg = convolve(&f, &g).unwrap();
        let gf = convolve(&g, &f).unwrap();
        prop_assert!(fg.max_abs_diff(&gf).unwrap() < 1e-12);
    }

    #[test]
    fn heat_kernel_mass(t in 0.01f64..4.0) {
        let spec = GridSpec::new(1, 256, 40.0).unwrap();
        prop_assert!((gaussian(&spec, t).unwrap().field.integral() - 1.0).abs() < 1e-10);
    }
}
