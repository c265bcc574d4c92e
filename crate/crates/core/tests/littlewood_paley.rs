use std::f64::consts::PI;

use heatkernel::error::Error;
use heatkernel::grid::{GridField, GridSpec, VectorField};
use heatkernel::littlewood_paley::{
    drift_norms, mollify_drift, product_bound_ratio, rho, BesovIndex, Block, DriftField, DyadicPartition,
    ProductExponents,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(spec: GridSpec, seed: u64, modes: usize) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 2.0 * PI / spec.length();
    let top = spec.n() / 2 - 1;
    let waves: Vec<(f64, f64, f64)> = (0..modes)
        .map(|_| (rng.random_range(1..=top) as f64 * step, rng.random_range(-1.0..1.0), rng.random::<f64>() * 2.0 * PI))
        .collect();
    GridField::from_fn(spec, |x| waves.iter().map(|&(k, a, p)| a * (k * x[0] + p).cos()).sum())
}

fn sum_fields(fields: &[GridField]) -> GridField {
    let mut acc = GridField::zeros(fields[0].spec);
    for f in fields {
        acc = acc.zip_with(f, |a, b| a + b).unwrap();
    }
    acc
}

#[test]
fn build_partition_examples() {
    let spec = GridSpec::new(1, 256, 40.0).unwrap();
    let part = DyadicPartition::new(&spec).unwrap();
    let xi_max = PI * 256.0 / 40.0;
    assert_eq!(part.j_max(), xi_max.log2().ceil() as i32 + 1);
    let w1 = part.weights(1).unwrap();
    let w3 = part.weights(3).unwrap();
    assert!(w1.iter().zip(w3).all(|(a, b)| *a == 0.0 || *b == 0.0));
    assert!(matches!(part.weights(part.j_max() + 1), Err(Error::IndexOutOfRange { .. })));
}

#[test]
fn pure_wave_is_localized() {
    let spec = GridSpec::new(1, 256, 2.0 * PI).unwrap();
    let part = DyadicPartition::new(&spec).unwrap();
    // ρ_2 = 1 on [16/3, 8].
    let f = GridField::from_fn(spec, |x| (6.0 * x[0]).cos());
    let d2 = part.block(&f, Block::Index(2)).unwrap();
    let d0 = part.block(&f, Block::Index(0)).unwrap();
    assert!(d2.max_abs_diff(&f).unwrap() < 1e-12);
    assert!(d0.sup_abs() < 1e-12);
}

#[test]
fn single_wave_besov_norm() {
    let spec = GridSpec::new(1, 256, 2.0 * PI).unwrap();
    let part = DyadicPartition::new(&spec).unwrap();
    let f = GridField::from_fn(spec, |x| 0.7 * (11.0 * x[0]).cos());
    let v = part.besov_norm(&f, BesovIndex::new(2.0, f64::INFINITY, 1.0).unwrap()).unwrap();
    assert!((v - 64.0 * 0.7).abs() < 1e-8);
}

#[test]
fn dirac_block_norms() {
    for (d, n, l) in [(1usize, 2048usize, 100.0), (2, 256, 50.0)] {
        let spec = GridSpec::new(d, n, l).unwrap();
        let part = DyadicPartition::new(&spec).unwrap();
        let delta = GridField::delta(spec, spec.origin());
        let l1 = part.block_norms(&delta, 1.0).unwrap();
        let top = part.last_resolved_block();
        let resolved = &l1[1..=(top + 1) as usize];
        let (lo, hi) = resolved.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi <= 1.1 * lo, "d = {d}: {resolved:?}");
    }
}

#[test]
fn drift_norm_examples() {
    let spec = GridSpec::new(1, 256, 2.0 * PI).unwrap();
    let part = DyadicPartition::new(&spec).unwrap();
    let lam = -1.5;
    let b = DriftField::from_fn(&spec, vec![0.0], 0.25, |_, _, _| lam).unwrap();
    let (x, y) = drift_norms(&b, &part).unwrap();
    assert!((x - lam.abs()).abs() < 1e-12 && y < 1e-12);
    assert_eq!(drift_norms(&DriftField::zero(&spec, 0.25).unwrap(), &part).unwrap(), (0.0, 0.0));
    // ξ₀ = 6 lies on the plateau of block 2.
    let a = 0.8;
    let alpha = 0.3;
    let b = DriftField::from_fn(&spec, vec![0.0], alpha, |_, x, _| a * (6.0 * x[0]).cos()).unwrap();
    let (x, y) = drift_norms(&b, &part).unwrap();
    assert!(x < 1e-12);
    assert!((y - a * 2f64.powf(-2.0 * alpha)).abs() < 1e-10);
}

#[test]
fn mollify_examples() {
    let spec = GridSpec::new(1, 256, 2.0 * PI).unwrap();
    let part = DyadicPartition::new(&spec).unwrap();
    let c = DriftField::from_fn(&spec, vec![0.0], 0.25, |_, _, _| 2.0).unwrap();
    assert!(mollify_drift(&c, &part, 3).unwrap().sup_abs() < 1e-12);

    let f = random_field(spec, 3, 40);
    let b = DriftField::autonomous(VectorField { components: vec![f] }, 0.25).unwrap();
    let blocks = part.decompose(&b.samples[0].components[0]).unwrap();
    let high = sum_fields(&blocks[2..]);
    let full = mollify_drift(&b, &part, part.j_max()).unwrap();
    assert!(full.samples[0].components[0].max_abs_diff(&high).unwrap() < 1e-12);
    assert!(mollify_drift(&b, &part, 0).is_err());

    let idx = BesovIndex::new(-0.25, f64::INFINITY, 1.0).unwrap();
    let gaps: Vec<f64> = (1..=part.j_max())
        .map(|n| {
            let bn = mollify_drift(&b, &part, n).unwrap();
            let diff = bn.samples[0].components[0].zip_with(&full.samples[0].components[0], |p, q| p - q).unwrap();
            part.besov_norm(&diff, idx).unwrap()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
    assert!(*gaps.last().unwrap() < 1e-12);
}

#[test]
fn product_ratio_examples() {
    let spec = GridSpec::new(1, 256, 2.0 * PI).unwrap();
    let part = DyadicPartition::new(&spec).unwrap();
    let e = ProductExponents { p1: f64::INFINITY, p2: f64::INFINITY, q1: 1.0, q2: 1.0 };
    let v = random_field(spec, 1, 8);
    assert_eq!(product_bound_ratio(&part, &GridField::zeros(spec), &v, -0.3, 1.5, e).unwrap(), 0.0);
    assert!(product_bound_ratio(&part, &v, &v, -0.5, 0.4, e).is_err());
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let u = random_field(spec, 1000 + seed, 12);
        let w = random_field(spec, 2000 + seed, 12);
        worst = worst.max(product_bound_ratio(&part, &u, &w, -0.3, 1.5, e).unwrap());
    }
    assert!(worst.is_finite() && worst > 0.0);
    let one = GridField::constant(spec, 1.0);
    for seed in 0..20 {
        let u = random_field(spec, 3000 + seed, 12);
        assert!(product_bound_ratio(&part, &u, &one, -0.3, 1.5, e).unwrap() <= 1.0 + 1e-12);
    }
}

#[test]
fn embedding_constant_is_finite() {
    let spec = GridSpec::new(1, 512, 2.0 * PI).unwrap();
    let part = DyadicPartition::new(&spec).unwrap();
    let alpha = 0.25;
    let eps = 0.1;
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let f = random_field(spec, seed, 30);
        let a = part.besov_norm(&f, BesovIndex::new(-alpha - eps, f64::INFINITY, 1.0).unwrap()).unwrap();
        let b = part.besov_norm(&f, BesovIndex::new(-alpha, f64::INFINITY, f64::INFINITY).unwrap()).unwrap();
        worst = worst.max(a / b);
    }
    // Σ_i 2^{−iε} bounds the constant.
    let bound: f64 = (0..=part.j_max() + 1).map(|i| 2f64.powf(-eps * i.max(0) as f64)).sum();
    assert!(worst <= bound, "{worst} > {bound}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_invariants(log_n in 4u32..11, length in 1.0f64..200.0, d in 1usize..=2) {
        let n = 1usize << if d == 2 { log_n.min(7) } else { log_n };
        let spec = GridSpec::new(d, n, length).unwrap();
        let part = DyadicPartition::new(&spec);
        prop_assume!(part.is_ok());
        let part = part.unwrap();
        let idx: Vec<i32> = part.indices().collect();
        let w: Vec<&[f64]> = idx.iter().map(|&i| part.weights(i).unwrap()).collect();
        for m in 0..spec.sites() {
            let s: f64 = w.iter().map(|v| v[m]).sum();
            let q: f64 = w.iter().map(|v| v[m] * v[m]).sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&q));
            for a in 0..idx.len() {
                for b in a + 2..idx.len() {
                    prop_assert!(w[a][m] == 0.0 || w[b][m] == 0.0);
                }
            }
        }
    }

    #[test]
    fn blocks_are_dilations(i in 0i32..12, r in 0.0f64..5000.0) {
        prop_assert!((rho(i, r) - rho(0, r / 2f64.powi(i))).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_and_near_orthogonality(seed in 0u64..1000) {
        let spec = GridSpec::new(1, 256, 2.0 * PI).unwrap();
        let part = DyadicPartition::new(&spec).unwrap();
        let f = random_field(spec, seed, 30);
        let blocks = part.decompose(&f).unwrap();
        prop_assert!(sum_fields(&blocks).max_abs_diff(&f).unwrap() <= 1e-10 * f.sup_abs());
        let low = part.block(&f, Block::Index(-1)).unwrap();
        let high = part.block(&f, Block::Geq0).unwrap();
        prop_assert!(low.zip_with(&high, |a, b| a + b).unwrap().max_abs_diff(&f).unwrap() <= 1e-10 * f.sup_abs());
        let idx: Vec<i32> = part.indices().collect();
        for (a, &i) in idx.iter().enumerate() {
            for &j in idx.iter().skip(a + 2) {
                let g = part.block(&part.block(&f, Block::Index(j)).unwrap(), Block::Index(i)).unwrap();
                prop_assert!(g.sup_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn besov_norm_monotone_in_s(seed in 0u64..1000, s in -2.0f64..2.0, ds in 0.0f64..1.0, p in prop::sample::select(vec![1.0, 2.0, f64::INFINITY]), q in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
        let spec = GridSpec::new(1, 128, 2.0 * PI).unwrap();
        let part = DyadicPartition::new(&spec).unwrap();
        let f = random_field(spec, seed, 16);
        let lo = part.besov_norm(&f, BesovIndex::new(s, p, q).unwrap()).unwrap();
        let hi = part.besov_norm(&f, BesovIndex::new(s + ds, p, q).unwrap()).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn mollified_norms_stay_bounded(seed in 0u64..500, n in 1i32..8) {
        let spec = GridSpec::new(1, 256, 2.0 * PI).unwrap();
        let part = DyadicPartition::new(&spec).unwrap();
        let f = random_field(spec, seed, 24);
        let b = DriftField::autonomous(VectorField { components: vec![f] }, 0.25).unwrap();
        let (x, y) = drift_norms(&b, &part).unwrap();
        let (xn, yn) = drift_norms(&mollify_drift(&b, &part, n).unwrap(), &part).unwrap();
        prop_assert!(xn <= 2.0 * x + 1e-12);
        prop_assert!(yn <= 2.0 * y + 1e-12);
    }
}
