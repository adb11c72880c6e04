use hbundle::bundle::{
    build_skew_product, circular_distance, is_admissible, orbit_constraint_holonomy_oracle, orbit_constraints,
    sample_admissible, sample_offsets, signed_frac, CircleExtension,
};
use hbundle::iet::{IetMap, IetSpec, Permutation};
use hbundle::suspension::build_zippered_rectangles;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn irreducible_monodromies(d: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, d: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == d {
            if Permutation::from_monodromy(prefix).unwrap().is_irreducible() {
                out.push(prefix.clone());
            }
            return;
        }
        for v in 1..=d {
            if !prefix.contains(&v) {
                prefix.push(v);
                go(prefix, d, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), d, &mut out);
    out
}

fn exchange() -> impl Strategy<Value = IetSpec> {
    (2usize..=5).prop_flat_map(|d| {
        (proptest::sample::select(irreducible_monodromies(d)), prop::collection::vec(0.05f64..1.0, d))
            .prop_map(|(p, lambda)| IetSpec::new(Permutation::from_monodromy(&p).unwrap(), lambda).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sampled_bundles_satisfy_every_orbit_constraint(spec in exchange(), seed in any::<u64>()) {
        let s = sample_admissible(&spec, seed);
        let report = is_admissible(&spec, &s.h, &s.b).unwrap();
        prop_assert!(report.admissible, "{:?}", report);
        let susp = build_zippered_rectangles(&spec, &s.tau).unwrap();
        let skew = build_skew_product(IetMap::new(spec.clone()), s.h.clone(), s.b.clone()).unwrap();
        for c in &report.constraints {
            prop_assert!(c.residual(&s.b) < 1e-9);
            let oracle = orbit_constraint_holonomy_oracle(&susp, &skew, &c.orbit);
            prop_assert!(oracle.residual < 1e-10, "{:?}", oracle);
            prop_assert!((oracle.residual - c.residual(&s.b)).abs() < 1e-10);
        }
    }

    #[test]
    fn admissible_offsets_form_an_affine_space(spec in exchange(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let h = sample_admissible(&spec, s1).h;
        let b1 = sample_offsets(&spec, &h, s1);
        let b2 = sample_offsets(&spec, &h, s2);
        let diff: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| x - y).collect();
        for c in orbit_constraints(spec.perm(), spec.lambda(), &h) {
            prop_assert!(c.residual(&b1) < 1e-9 && c.residual(&b2) < 1e-9);
            prop_assert!(signed_frac(c.lhs(&diff)).abs() < 1e-9);
        }
    }
}

#[test]
fn skew_product_preserves_product_measure() {
    let spec = IetSpec::new(Permutation::from_monodromy(&[4, 3, 2, 1]).unwrap(), vec![0.21, 0.33, 0.19, 0.27]).unwrap();
    let sample = sample_admissible(&spec, 3);
    let skew = build_skew_product(IetMap::new(spec), sample.h, sample.b).unwrap();
    let total = skew.base().total_length();
    let side = 1000;
    let points = 10_000_000;
    let mut counts = vec![0u32; side * side];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..points {
        let (x, r) = skew.apply(rng.gen_range(0.0..total), rng.gen::<f64>()).unwrap();
        let i = ((x / total * side as f64) as usize).min(side - 1);
        let j = ((r * side as f64) as usize).min(side - 1);
        counts[i * side + j] += 1;
    }
    let expected = points as f64 / (side * side) as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = (side * side - 1) as f64;
    // Six standard deviations of the chi-square law.
    assert!((chi2 - dof).abs() < 6.0 * (2.0 * dof).sqrt(), "chi2 = {chi2}, dof = {dof}");
}

#[test]
fn holonomy_oracle_detects_unit_perturbations() {
    let spec = IetSpec::new(Permutation::from_monodromy(&[5, 3, 2, 4, 1]).unwrap(), vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap();
    let s = sample_admissible(&spec, 8);
    let susp = build_zippered_rectangles(&spec, &s.tau).unwrap();
    let skew = build_skew_product(IetMap::new(spec.clone()), s.h.clone(), s.b.clone()).unwrap();
    for c in orbit_constraints(spec.perm(), spec.lambda(), &s.h) {
        for (a, &coef) in c.coeffs.iter().enumerate() {
            let mut b = s.b.clone();
            b[a] += 0.1;
            let r = orbit_constraint_holonomy_oracle(&susp, &skew.with_b(b), &c.orbit).residual;
            let expected = circular_distance(0.1 * coef as f64, 0.0);
            assert!((r - expected).abs() < 1e-9, "letter {a}: {r} vs {expected}");
        }
    }
}
