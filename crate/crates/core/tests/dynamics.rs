use std::f64::consts::TAU;

use hbundle::bundle::{build_skew_product, circular_distance, frac, sample_admissible, CircleExtension, SkewProduct};
use hbundle::dynamics::birkhoff::{birkhoff_average, birkhoff_skewing_sum};
use hbundle::dynamics::observable::ModeObservable;
use hbundle::iet::{IetMap, IetSpec, Permutation};
use num_complex::Complex64;
use proptest::prelude::*;

fn four_interval() -> SkewProduct {
    let lambda = vec![2f64.sqrt() - 1.0, 0.1 * std::f64::consts::PI, 0.1 * std::f64::consts::E, 3f64.sqrt() / 5.0];
    let spec = IetSpec::new(Permutation::from_monodromy(&[4, 3, 2, 1]).unwrap(), lambda).unwrap();
    let s = sample_admissible(&spec, 5);
    build_skew_product(IetMap::new(spec), s.h, s.b).unwrap()
}

fn genus_example() -> SkewProduct {
    let spec = IetSpec::new(Permutation::from_monodromy(&[3, 1, 2]).unwrap(), vec![0.4, 0.3, 0.3]).unwrap();
    build_skew_product(IetMap::new(spec), vec![2.0; 3], vec![0.7, 0.4, 0.0]).unwrap()
}

fn golden_torus() -> SkewProduct {
    let a = (5f64.sqrt() - 1.0) / 2.0;
    let spec = IetSpec::new(Permutation::from_monodromy(&[2, 1]).unwrap(), vec![1.0 - a, a]).unwrap();
    build_skew_product(IetMap::new(spec), vec![1.0, 1.0], vec![0.0, 0.0]).unwrap()
}

/// `g(x) = h_α (x − ∂I_α) + b_α` from the raw lengths.
fn roof_gain(skew: &SkewProduct, x: f64) -> f64 {
    let lambda = skew.base().spec().lambda();
    let mut left = 0.0;
    for (a, l) in lambda.iter().enumerate() {
        if x < left + l || a == lambda.len() - 1 {
            return skew.h()[a] * (x - left) + skew.b()[a];
        }
        left += l;
    }
    unreachable!()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterates_are_base_orbit_plus_birkhoff_sum(
        which in 0usize..2,
        u in 0.0f64..1.0,
        rho in 0.0f64..1.0,
        n in 1usize..=1000,
    ) {
        let skew = if which == 0 { genus_example() } else { four_interval() };
        let map = skew.base();
        let x = u * map.total_length();
        let (mut y, mut r) = (x, rho);
        for _ in 0..n {
            (y, r) = skew.apply(y, r).unwrap();
        }
        let orbit = map.orbit(x, n).unwrap();
        prop_assume!(orbit.reliable);
        let mut g = roof_gain(&skew, x);
        for p in &orbit.points[..n - 1] {
            g += roof_gain(&skew, *p);
        }
        prop_assert!((y - orbit.points[n - 1]).abs() < 1e-9);
        prop_assert!(circular_distance(r, rho + g) < 1e-9);
        let sum = birkhoff_skewing_sum(&skew, x, n).unwrap();
        prop_assert!(circular_distance(sum.value, g) < 1e-9);
    }
}

#[test]
fn modes_are_invariant_pointwise() {
    let skew = four_interval();
    let map = skew.base();
    let total = map.total_length();
    for m in -3i64..=3 {
        let obs = ModeObservable::cosine(m, 2, total);
        for i in 0..200 {
            let x = (i as f64 + 0.5) * total / 200.0;
            for j in 0..16 {
                let rho = j as f64 / 16.0;
                let (tx, trho) = skew.apply(x, rho).unwrap();
                let lhs = obs.eval(tx, trho);
                let g = skew.skewing(map.locate(x), x);
                let rhs = Complex64::cis(TAU * m as f64 * frac(g)) * obs.base.eval(tx) * Complex64::cis(TAU * m as f64 * rho);
                assert!((lhs - rhs).norm() < 1e-9, "m={m} x={x} rho={rho}");
            }
        }
    }
}

#[test]
fn letter_frequencies_match_lengths() {
    let n = 1_000_000;
    let tol = 5.0 / (n as f64).sqrt();
    for skew in [golden_torus(), four_interval()] {
        let map = skew.base();
        for a in 0..map.d() {
            let obs = ModeObservable::letter_indicator(map, a, 0);
            let avg = birkhoff_average(&skew, &obs, (0.1234, 0.0), n).unwrap();
            let mass = map.spec().lambda()[a] / map.total_length();
            assert!((avg.average.re - mass).abs() < tol, "letter {a}: {} vs {mass}", avg.average.re);
            assert_eq!(avg.average.im, 0.0);
        }
    }
}
