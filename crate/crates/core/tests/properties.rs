//! Property tests: the sum constraint, representation commutation, the
//! monotonicity theorems on random harmonic models, the per-vertex edge
//! inequality behind the Dirichlet proof, and scalar field laws.

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use std::cmp::Ordering;
use treeharm_core::{
    almgren_series, build_model, builtin_model, check_harmonic, compress, dirichlet_g_series,
    f_series, identity_suite, weiss_series, BuiltinModel, Exponent, Representation, RootData,
    Scalar, Splitter, TreeConfig,
};

fn rational() -> impl Strategy<Value = BigRational> {
    (-50i64..=50, 1i64..=12).prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

fn scalar() -> impl Strategy<Value = Scalar> {
    rational().prop_map(Scalar::from_rational)
}

fn random_model(
    d: u32,
    seed: u64,
    depth: u32,
    repr: Representation,
) -> treeharm_core::HarmonicModel {
    let cfg = TreeConfig::new(d).unwrap();
    let root = RootData::random(cfg, seed, 9, 4);
    build_model(cfg, root, Splitter::random(seed), depth, repr).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_field_laws(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.sub(&b).add(&b), a.clone());
        if !b.is_zero() {
            prop_assert_eq!(a.div(&b).mul(&b), a.clone());
            // (a/b) * (b/a) = 1 for nonzero a
            if !a.is_zero() {
                prop_assert_eq!(a.div(&b).mul(&b.div(&a)), Scalar::from_integer(1));
            }
        }
    }

    #[test]
    fn splitter_children_sum_is_forced(
        d in 2u32..=6,
        seed in 0u64..1000,
        value in rational(),
        parent in rational(),
    ) {
        let cfg = TreeConfig::new(d).unwrap();
        let splitter = Splitter::random(seed);
        let v = Scalar::from_rational(value);
        let vp = Scalar::from_rational(parent);
        let children = splitter.children(cfg, &v, &vp).unwrap();
        prop_assert_eq!(children.len() as u32, d - 1);
        let sum = children.iter().fold(Scalar::from_integer(0), |acc, c| acc.add(c));
        prop_assert_eq!(sum, v.mul(&Scalar::from_integer(d as i64)).sub(&vp));
    }

    #[test]
    fn random_models_are_harmonic_in_both_representations(
        d in 2u32..=5,
        seed in 0u64..500,
    ) {
        let depth = if d >= 5 { 5 } else { 6 };
        let e = random_model(d, seed, depth, Representation::Enumerated);
        prop_assert!(check_harmonic(&e).is_pass());
        let c = random_model(d, seed, depth, Representation::Compressed);
        prop_assert!(check_harmonic(&c).is_pass());
        // compress(extend(s)) = extend(compress(s)) as class multisets
        for k in 0..=depth {
            let grouped = compress(e.level(k).unwrap().as_enumerated().unwrap());
            prop_assert_eq!(&grouped, c.level(k).unwrap().as_compressed().unwrap());
        }
    }

    #[test]
    fn monotonicity_theorems_on_random_models(
        d in 2u32..=6,
        seed in 0u64..500,
        p in 1u32..=3,
    ) {
        let depth = 8;
        let model = random_model(d, seed, depth, Representation::Compressed);
        let pe = Exponent::integer(p);
        let g = dirichlet_g_series(&model, &pe, depth).unwrap();
        prop_assert!(g.verdict.non_decreasing, "G violated: {:?}", g.verdict.first_violation);
        let f = f_series(&model, &pe, depth - 1).unwrap();
        prop_assert!(f.verdict.non_decreasing, "F violated: {:?}", f.verdict.first_violation);
        let n = almgren_series(&model, &pe, depth - 1).unwrap();
        prop_assert!(n.verdict.non_decreasing, "N violated: {:?}", n.verdict.first_violation);
        if d >= 3 {
            let w = weiss_series(&model, depth).unwrap();
            prop_assert!(w.verdict.non_decreasing, "W violated: {:?}", w.verdict.first_violation);
        }
        // N_k >= 0 (unnormalized form, any p)
        let dm1 = Scalar::from_integer((d - 1) as i64);
        for k in 0..depth {
            let h_k = treeharm_core::aggregates(&model, &pe, k).unwrap();
            prop_assert!(h_k.n_k.signum() >= 0, "N_{k} = {} < 0", h_k.n_k);
            let _ = dm1.clone();
        }
    }

    #[test]
    fn per_vertex_edge_inequality(
        d in 2u32..=5,
        seed in 0u64..300,
        p in 1u32..=3,
    ) {
        // sum_i |u(c_i) - u(b)|^p >= |u(b) - u(b_p)|^p / (d-1)^(p-1)
        let depth = 5;
        let model = random_model(d, seed, depth, Representation::Enumerated);
        let pe = Exponent::integer(p);
        let denom = Scalar::from_integer((d - 1) as i64).pow_int(p - 1);
        for k in 1..depth {
            let cur = model.level(k).unwrap().as_enumerated().unwrap();
            let next = model.level(k + 1).unwrap().as_enumerated().unwrap();
            let b = (d - 1) as usize;
            for (j, rec) in cur.records.iter().enumerate() {
                let parent = rec.parent_value.as_ref().unwrap();
                let lhs = next.records[j * b..(j + 1) * b]
                    .iter()
                    .fold(Scalar::from_integer(0), |acc, child| {
                        acc.add(&child.value.sub(&rec.value).abs_pow(&pe).unwrap())
                    });
                let rhs = rec.value.sub(parent).abs_pow(&pe).unwrap().div(&denom);
                prop_assert!(lhs.cmp_value(&rhs) != Ordering::Less);
            }
        }
    }

    #[test]
    fn identity_suite_on_random_models(d in 2u32..=6, seed in 0u64..200) {
        let model = random_model(d, seed, 7, Representation::Compressed);
        let report = identity_suite(&model, 6).unwrap();
        prop_assert!(
            report.all_passed(),
            "failures: {:?}",
            report.failures().collect::<Vec<_>>()
        );
    }

    #[test]
    fn equal_split_descends_by_recursion(value in rational(), parent in rational()) {
        // equal split reproduces (3u - u_p)/2 on the 3-regular tree
        let cfg = TreeConfig::new(3).unwrap();
        let v = Scalar::from_rational(value.clone());
        let vp = Scalar::from_rational(parent.clone());
        let children = Splitter::EqualSplit.children(cfg, &v, &vp).unwrap();
        let expected = Scalar::from_rational(
            (BigRational::from_integer(BigInt::from(3)) * &value - &parent)
                / BigRational::from_integer(BigInt::from(2)),
        );
        prop_assert_eq!(children, vec![expected.clone(), expected]);
    }

    #[test]
    fn linear_2reg_increment_lemma(a in -20i64..=20, b in -20i64..=20, depth in 2u32..=10) {
        // u(j) - u(j+1) = u(0) - u(1) along both rays
        let model = treeharm_core::linear_2reg(
            &Scalar::from_integer(a),
            &Scalar::from_integer(b),
            depth,
            Representation::Enumerated,
        )
        .unwrap();
        prop_assert!(check_harmonic(&model).is_pass());
        for k in 0..depth {
            let cur = model.level(k).unwrap().as_enumerated().unwrap();
            let next = model.level(k + 1).unwrap().as_enumerated().unwrap();
            for (j, rec) in next.records.iter().enumerate() {
                let parent_idx = if k == 0 { 0 } else { j };
                let diff = cur.records[parent_idx].value.sub(&rec.value).abs();
                prop_assert_eq!(&diff, &Scalar::from_integer(a.abs()));
            }
        }
    }
}

#[test]
fn deterministic_for_fixed_seed() {
    for repr in [Representation::Enumerated, Representation::Compressed] {
        let m1 = random_model(4, 42, 6, repr);
        let m2 = random_model(4, 42, 6, repr);
        for k in 0..=6 {
            assert_eq!(
                m1.classes(k).unwrap().classes,
                m2.classes(k).unwrap().classes
            );
        }
    }
    // distinct seeds diverge
    let a = random_model(4, 1, 4, Representation::Compressed);
    let b = random_model(4, 2, 4, Representation::Compressed);
    let same = (0..=4).all(|k| a.classes(k).unwrap().classes == b.classes(k).unwrap().classes);
    assert!(!same);
}

#[test]
fn harmonicity_holds_to_depth_12_for_all_degrees() {
    for d in 2..=6u32 {
        let model = random_model(d, 7, 12, Representation::Compressed);
        assert!(check_harmonic(&model).is_pass(), "d={d}");
    }
}

#[test]
fn builtin_random_root_sums_to_zero() {
    for d in 2..=6u32 {
        for seed in 0..20u64 {
            let model = builtin_model(
                &BuiltinModel::Random { d, seed },
                1,
                Representation::Compressed,
                treeharm_core::ScalarMode::Exact,
            )
            .unwrap();
            assert!(model.root_data().u0().is_zero());
            let sum = model
                .root_data()
                .children()
                .iter()
                .fold(Scalar::from_integer(0), |acc, c| acc.add(c));
            assert!(sum.is_zero());
        }
    }
}
