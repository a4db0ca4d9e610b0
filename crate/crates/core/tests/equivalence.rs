//! Representation equivalence: compressed and enumerated evaluation must
//! agree exactly, level by level and functional by functional; float mode
//! must track exact mode to within rounding.

use std::cmp::Ordering;
use treeharm_core::{
    aggregates, almgren_series, builtin_model, compress, dirichlet_g_series, f_series,
    weiss_series, BuiltinModel, Exponent, Representation, Scalar, ScalarMode,
};

fn families() -> Vec<BuiltinModel> {
    vec![
        BuiltinModel::Bounded3,
        BuiltinModel::Needweight3,
        BuiltinModel::DoubleHalf3,
        BuiltinModel::Linear2 {
            a: Scalar::from_integer(2),
            b: Scalar::from_ratio(-1, 2),
        },
    ]
}

#[test]
fn builtin_models_agree_across_representations_k12() {
    for family in families() {
        let depth = 12;
        let e = builtin_model(
            &family,
            depth,
            Representation::Enumerated,
            ScalarMode::Exact,
        )
        .unwrap();
        let c = builtin_model(
            &family,
            depth,
            Representation::Compressed,
            ScalarMode::Exact,
        )
        .unwrap();
        // level classes agree
        for k in 0..=depth {
            let grouped = compress(e.level(k).unwrap().as_enumerated().unwrap());
            assert_eq!(
                &grouped,
                c.level(k).unwrap().as_compressed().unwrap(),
                "{family} level {k}"
            );
        }
        // aggregates and functionals agree exactly
        for p in [1u32, 2, 3] {
            let pe = Exponent::integer(p);
            for k in 0..depth {
                let ae = aggregates(&e, &pe, k).unwrap();
                let ac = aggregates(&c, &pe, k).unwrap();
                assert_eq!(ae.d_k, ac.d_k, "{family} D_{k} p={p}");
                assert_eq!(ae.h_k, ac.h_k, "{family} H_{k} p={p}");
                assert_eq!(ae.n_k, ac.n_k, "{family} N_{k} p={p}");
                assert_eq!(ae.c_k, ac.c_k, "{family} C_{k} p={p}");
                assert_eq!(ae.r_k, ac.r_k, "{family} R_{k} p={p}");
            }
            let ge = dirichlet_g_series(&e, &pe, depth).unwrap();
            let gc = dirichlet_g_series(&c, &pe, depth).unwrap();
            assert_eq!(ge.values, gc.values, "{family} G p={p}");
            let fe = f_series(&e, &pe, depth - 1).unwrap();
            let fc = f_series(&c, &pe, depth - 1).unwrap();
            assert_eq!(fe.values, fc.values, "{family} F p={p}");
            let ne = almgren_series(&e, &pe, depth - 1).unwrap();
            let nc = almgren_series(&c, &pe, depth - 1).unwrap();
            assert_eq!(ne.values, nc.values, "{family} N p={p}");
        }
        let we = weiss_series(&e, depth).unwrap();
        let wc = weiss_series(&c, depth).unwrap();
        assert_eq!(we.values, wc.values, "{family} W");
    }
}

#[test]
fn random_models_agree_across_representations() {
    // higher degrees at depths where enumeration is still cheap
    for (d, depth) in [(2u32, 12u32), (3, 10), (4, 8), (5, 7), (6, 6)] {
        for seed in [5u64, 77] {
            let family = BuiltinModel::Random { d, seed };
            let e = builtin_model(
                &family,
                depth,
                Representation::Enumerated,
                ScalarMode::Exact,
            )
            .unwrap();
            let c = builtin_model(
                &family,
                depth,
                Representation::Compressed,
                ScalarMode::Exact,
            )
            .unwrap();
            for k in 0..=depth {
                let grouped = compress(e.level(k).unwrap().as_enumerated().unwrap());
                assert_eq!(&grouped, c.level(k).unwrap().as_compressed().unwrap());
            }
            let p2 = Exponent::integer(2);
            let ge = dirichlet_g_series(&e, &p2, depth).unwrap();
            let gc = dirichlet_g_series(&c, &p2, depth).unwrap();
            assert_eq!(ge.values, gc.values);
            if d >= 3 {
                assert_eq!(
                    weiss_series(&e, depth).unwrap().values,
                    weiss_series(&c, depth).unwrap().values
                );
            }
        }
    }
}

#[test]
fn float_mode_tracks_exact_mode() {
    // |exact - float| must stay within a coarse bound set by 128-bit
    // mantissas; the values here are far from cancellation.
    let tol = Scalar::from_ratio(1, 1_000_000_000).mul(&Scalar::from_ratio(1, 1_000_000_000_000));
    for family in families() {
        let exact =
            builtin_model(&family, 10, Representation::Compressed, ScalarMode::Exact).unwrap();
        let float = builtin_model(
            &family,
            10,
            Representation::Compressed,
            ScalarMode::float_default(),
        )
        .unwrap();
        let p2 = Exponent::integer(2);
        let ge = dirichlet_g_series(&exact, &p2, 10).unwrap();
        let gf = dirichlet_g_series(&float, &p2, 10).unwrap();
        assert!(gf.verdict.float_verified);
        for (ve, vf) in ge.values.iter().zip(&gf.values) {
            let scale = ve.abs().add(&Scalar::from_integer(1));
            let diff = Scalar::from_rational(ve.to_rational() - vf.to_rational()).abs();
            assert!(
                diff.cmp_value(&tol.mul(&scale)) != Ordering::Greater,
                "{family}: exact {} vs float {}",
                ve,
                vf.exact_string()
            );
        }
        let ne = almgren_series(&exact, &p2, 9).unwrap();
        let nf = almgren_series(&float, &p2, 9).unwrap();
        for (ve, vf) in ne.values.iter().zip(&nf.values) {
            let scale = ve.abs().add(&Scalar::from_integer(1));
            let diff = Scalar::from_rational(ve.to_rational() - vf.to_rational()).abs();
            assert!(diff.cmp_value(&tol.mul(&scale)) != Ordering::Greater);
        }
    }
}
