use hbundle::bundle::{build_skew_product, circular_distance, sample_admissible, CircleExtension, SkewProduct};
use hbundle::flow::{FlowState, HeisenbergFlow};
use hbundle::iet::{IetMap, IetSpec, Permutation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn genus_example() -> SkewProduct {
    let spec = IetSpec::new(Permutation::from_monodromy(&[3, 1, 2]).unwrap(), vec![0.4, 0.3, 0.3]).unwrap();
    build_skew_product(IetMap::new(spec), vec![2.0; 3], vec![0.7, 0.4, 0.0]).unwrap()
}

fn five_interval() -> SkewProduct {
    let lambda = vec![0.1 * 2f64.sqrt(), 0.2, 0.1 * 3f64.sqrt(), 0.15, 0.1 * 5f64.sqrt()];
    let spec = IetSpec::new(Permutation::from_monodromy(&[5, 3, 2, 4, 1]).unwrap(), lambda).unwrap();
    let s = sample_admissible(&spec, 17);
    build_skew_product(IetMap::new(spec), s.h, s.b).unwrap()
}

fn state_in(skew: &SkewProduct, u: f64, v: f64, rho: f64) -> FlowState {
    let map = skew.base();
    let x = u * map.total_length();
    let letter = map.locate(x);
    FlowState { letter, x, s: v * skew.h()[letter], rho }
}

#[test]
fn returns_match_the_skew_product() {
    for skew in [genus_example(), five_interval()] {
        let flow = HeisenbergFlow::new(skew.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let total = skew.base().total_length();
        for _ in 0..1000 {
            let (x0, r0) = (rng.gen_range(0.0..total), rng.gen::<f64>());
            let mut st = flow.on_section(x0, r0).unwrap();
            let (mut x, mut r) = (x0, r0);
            for _ in 0..100 {
                let (out, time) = flow.first_return(st).unwrap();
                assert_eq!(time, skew.h()[st.letter]);
                (x, r) = skew.apply(x, r).unwrap();
                st = out.state;
                assert_eq!(st.s, 0.0);
                assert!((st.x - x).abs() < 1e-9);
                assert!(circular_distance(st.rho, r) < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn vertical_flow_is_a_group(
        u in 0.0f64..1.0, v in 0.0f64..1.0, rho in 0.0f64..1.0,
        t1 in 0.0f64..20.0, t2 in 0.0f64..20.0,
    ) {
        let skew = five_interval();
        let flow = HeisenbergFlow::new(skew.clone());
        let st = state_in(&skew, u, v, rho);
        let once = flow.flow_vertical(st, t1 + t2).unwrap();
        let first = flow.flow_vertical(st, t1).unwrap();
        let twice = flow.flow_vertical(first.state, t2).unwrap();
        prop_assume!(once.reliable && first.reliable && twice.reliable);
        prop_assert_eq!(once.state.letter, twice.state.letter);
        prop_assert!((once.state.x - twice.state.x).abs() < 1e-12);
        prop_assert!((once.state.s - twice.state.s).abs() < 1e-12);
        prop_assert!(circular_distance(once.state.rho, twice.state.rho) < 1e-12);
    }

    #[test]
    fn fiber_flow_commutes(
        u in 0.0f64..1.0, v in 0.0f64..1.0, rho in 0.0f64..1.0,
        t in 0.0f64..5.0, c in -3.0f64..3.0, dx in 0.0f64..1.0,
    ) {
        let skew = genus_example();
        let flow = HeisenbergFlow::new(skew.clone());
        let st = state_in(&skew, u, v, rho);
        let a = flow.flow_fiber(flow.flow_vertical(st, t).unwrap().state, c);
        let b = flow.flow_vertical(flow.flow_fiber(st, c), t).unwrap().state;
        prop_assert_eq!(a.letter, b.letter);
        prop_assert!((a.x - b.x).abs() < 1e-12 && (a.s - b.s).abs() < 1e-12);
        prop_assert!(circular_distance(a.rho, b.rho) < 1e-12);

        let room = skew.base().breakpoints()[st.letter] + skew.base().spec().lambda()[st.letter] - st.x;
        let step = dx * room * 0.99;
        let a = flow.flow_fiber(flow.flow_horizontal(st, step).unwrap(), c);
        let b = flow.flow_horizontal(flow.flow_fiber(st, c), step).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn vertical_flow_preserves_volume() {
    let skew = five_interval();
    let flow = HeisenbergFlow::new(skew.clone());
    let map = skew.base();
    let lambda = map.spec().lambda();
    let h = skew.h();
    let d = map.d();
    let weights: Vec<f64> = (0..d).map(|a| lambda[a] * h[a]).collect();
    let area: f64 = weights.iter().sum();
    let bins = 4;
    let cell = |st: &FlowState| {
        let a = st.letter;
        let fx = (st.x - map.breakpoints()[a]) / lambda[a];
        let idx = |f: f64| ((f * bins as f64) as usize).min(bins - 1);
        ((a * bins + idx(fx)) * bins + idx(st.s / h[a])) * bins + idx(st.rho)
    };
    let cells = d * bins * bins * bins;
    let mut counts = vec![0u64; cells];
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..n {
        let mut pick = rng.gen::<f64>() * area;
        let mut a = 0;
        while a + 1 < d && pick >= weights[a] {
            pick -= weights[a];
            a += 1;
        }
        let st = FlowState {
            letter: a,
            x: map.breakpoints()[a] + rng.gen::<f64>() * lambda[a],
            s: rng.gen::<f64>() * h[a],
            rho: rng.gen::<f64>(),
        };
        counts[cell(&flow.flow_vertical(st, 0.37).unwrap().state)] += 1;
    }
    let chi2: f64 = (0..cells)
        .map(|k| {
            let a = k / (bins * bins * bins);
            let expected = n as f64 * weights[a] / area / (bins * bins * bins) as f64;
            (counts[k] as f64 - expected).powi(2) / expected
        })
        .sum();
    let dof = (cells - 1) as f64;
    assert!((chi2 - dof).abs() < 6.0 * (2.0 * dof).sqrt(), "chi2 = {chi2}, dof = {dof}");
}
