//! The identity verification suite.
//!
//! Every check here is a theorem about harmonic functions (or plain
//! algebra), so a failure always indicates an implementation bug. The
//! model-level identities relate the p = 2 aggregates D, H, C, R, N of
//! adjacent levels; the scalar checks probe the two pointwise inequalities
//! the proofs rest on, over a seeded grid of rational tuples.
//!
//! All checks demand exact arithmetic: the suite rejects float-mode models.

use crate::error::{Error, Result};
use crate::functionals::{cross_term, edge_energy, sibling_excess, vertex_power_sum};
use crate::model::HarmonicModel;
use crate::scalar::{Exponent, Scalar};
use crate::splitter::SampleStream;
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    /// Identities are checked for every applicable k <= k_max.
    pub k_max: u32,
    /// Number of seeded rational tuples for the scalar inequality checks.
    pub tuple_count: u32,
    pub tuple_seed: u64,
}

impl SuiteOptions {
    pub fn new(k_max: u32) -> Self {
        SuiteOptions {
            k_max,
            tuple_count: 1000,
            tuple_seed: 0x1dea,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Pass { cases: u64 },
    Fail { witness: String },
    NotApplicable { reason: String },
}

#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub status: CheckStatus,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        !matches!(self.status, CheckStatus::Fail { .. })
    }
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub degree: u32,
    pub k_max: u32,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

struct Tape {
    d: Vec<Scalar>, // D_0 ..= D_kmax
    h: Vec<Scalar>, // H_0 ..= H_kmax+1
    c: Vec<Scalar>, // C_1 ..= C_kmax (index shifted by 1)
    r: Vec<Scalar>, // R_1 ..= R_kmax (index shifted by 1)
    n: Vec<Scalar>, // N_0 ..= N_kmax, unnormalized H_{k+1} - (d-1)H_k
}

impl Tape {
    fn c_at(&self, k: u32) -> &Scalar {
        &self.c[k as usize - 1]
    }

    fn r_at(&self, k: u32) -> &Scalar {
        &self.r[k as usize - 1]
    }
}

fn record(model: &HarmonicModel, k_max: u32) -> Result<Tape> {
    let p2 = Exponent::integer(2);
    let d_agg: Vec<Scalar> = (0..=k_max)
        .map(|k| edge_energy(model, &p2, k))
        .collect::<Result<_>>()?;
    let h: Vec<Scalar> = (0..=k_max + 1)
        .map(|k| vertex_power_sum(model, &p2, k))
        .collect::<Result<_>>()?;
    let c: Vec<Scalar> = (1..=k_max)
        .map(|k| cross_term(model, k))
        .collect::<Result<_>>()?;
    let r: Vec<Scalar> = (1..=k_max)
        .map(|k| sibling_excess(model, k))
        .collect::<Result<_>>()?;
    let dm1 = Scalar::from_integer((model.degree() - 1) as i64);
    let n: Vec<Scalar> = (0..=k_max)
        .map(|k| h[k as usize + 1].sub(&h[k as usize].mul(&dm1)))
        .collect();
    Ok(Tape {
        d: d_agg,
        h,
        c,
        r,
        n,
    })
}

/// Run the full suite with default options.
pub fn identity_suite(model: &HarmonicModel, k_max: u32) -> Result<IdentityReport> {
    identity_suite_with(model, SuiteOptions::new(k_max))
}

/// Run the full suite: the model-level aggregate identities plus the scalar
/// inequality grid.
pub fn identity_suite_with(model: &HarmonicModel, opts: SuiteOptions) -> Result<IdentityReport> {
    if !model.mode().is_exact() {
        return Err(Error::ModeMismatch(
            "the identity suite requires an exact-mode model".into(),
        ));
    }
    let k_max = opts.k_max;
    model.require_depth(k_max + 1)?;
    let d = model.degree();
    let tape = record(model, k_max)?;
    let mut checks = model_checks(d, k_max, &tape);
    checks.extend(scalar_inequality_checks(
        d,
        opts.tuple_count,
        opts.tuple_seed,
    ));
    Ok(IdentityReport {
        degree: d,
        k_max,
        checks,
    })
}

fn eq_check(
    name: &'static str,
    pairs: impl Iterator<Item = (u32, Scalar, Scalar)>,
) -> IdentityCheck {
    let mut cases = 0;
    for (k, lhs, rhs) in pairs {
        if lhs != rhs {
            return IdentityCheck {
                name,
                status: CheckStatus::Fail {
                    witness: format!("k={k}: lhs={lhs}, rhs={rhs}"),
                },
            };
        }
        cases += 1;
    }
    IdentityCheck {
        name,
        status: CheckStatus::Pass { cases },
    }
}

fn le_check(
    name: &'static str,
    pairs: impl Iterator<Item = (String, Scalar, Scalar)>,
) -> IdentityCheck {
    let mut cases = 0;
    for (label, lhs, rhs) in pairs {
        if lhs.cmp_value(&rhs) == Ordering::Greater {
            return IdentityCheck {
                name,
                status: CheckStatus::Fail {
                    witness: format!("{label}: lhs={lhs} > rhs={rhs}"),
                },
            };
        }
        cases += 1;
    }
    IdentityCheck {
        name,
        status: CheckStatus::Pass { cases },
    }
}

fn model_checks(d: u32, k_max: u32, tape: &Tape) -> Vec<IdentityCheck> {
    let dm1 = Scalar::from_integer((d - 1) as i64);
    let two = Scalar::from_integer(2);
    let mut checks = Vec::new();

    // D_k = (D_{k-1} + R_k) / (d-1): the level energy recurrence.
    checks.push(eq_check(
        "energy_recurrence",
        (1..=k_max).map(|k| {
            let rhs = tape.d[k as usize - 1].add(tape.r_at(k)).div(&dm1);
            (k, tape.d[k as usize].clone(), rhs)
        }),
    ));

    // (d-1)^k D_k - (d-1)^(k-1) D_{k-1} = (d-1)^(k-1) R_k >= 0: the weighted
    // energy is non-decreasing, with the sibling excess as the exact step.
    checks.push(eq_check(
        "weighted_energy_step",
        (1..=k_max).map(|k| {
            let wk = dm1.pow_int(k);
            let wk1 = dm1.pow_int(k - 1);
            let lhs = wk
                .mul(&tape.d[k as usize])
                .sub(&wk1.mul(&tape.d[k as usize - 1]));
            (k, lhs, wk1.mul(tape.r_at(k)))
        }),
    ));
    checks.push(le_check(
        "weighted_energy_nonnegative_step",
        (1..=k_max).map(|k| {
            (
                format!("k={k}"),
                Scalar::from_integer(0),
                dm1.pow_int(k - 1).mul(tape.r_at(k)),
            )
        }),
    ));

    // C_1 = d H_0 and C_k = d H_{k-1} - C_{k-1}: the cross-term recurrence.
    checks.push(eq_check(
        "cross_term_recurrence",
        (1..=k_max).map(|k| {
            let rhs = if k == 1 {
                tape.h[0].mul(&Scalar::from_integer(d as i64))
            } else {
                tape.h[k as usize - 1]
                    .mul(&Scalar::from_integer(d as i64))
                    .sub(tape.c_at(k - 1))
            };
            (k, tape.c_at(k).clone(), rhs)
        }),
    ));

    // D_k = H_{k+1} - (d+1) H_k + 2 C_k: the energy expressed in moments.
    checks.push(eq_check(
        "energy_moment_identity",
        (1..=k_max).map(|k| {
            let rhs = tape.h[k as usize + 1]
                .sub(&tape.h[k as usize].mul(&Scalar::from_integer((d + 1) as i64)))
                .add(&two.mul(tape.c_at(k)));
            (k, tape.d[k as usize].clone(), rhs)
        }),
    ));

    // N_k = D_k + D_{k-1} + N_{k-1} for k >= 2: the frequency increment
    // recurrence. The k = 1 step is the separate first-increment identity
    // below; it differs because the root carries d edges, not d-1.
    checks.push(eq_check(
        "frequency_increment_recurrence",
        (2..=k_max).map(|k| {
            let rhs = tape.d[k as usize]
                .add(&tape.d[k as usize - 1])
                .add(&tape.n[k as usize - 1]);
            (k, tape.n[k as usize].clone(), rhs)
        }),
    ));

    // N_1 = D_1 + 2 D_0.
    checks.push(eq_check(
        "first_increment_identity",
        std::iter::once((1, tape.n[1].clone(), tape.d[1].add(&two.mul(&tape.d[0])))),
    ));

    // D_j <= (d-1)^(k-j) D_k for all j <= k: the doubling bound.
    checks.push(le_check(
        "energy_doubling_bound",
        (0..=k_max).flat_map(|k| {
            let dm1 = dm1.clone();
            let dk = tape.d[k as usize].clone();
            (0..=k).map(move |j| {
                (
                    format!("j={j},k={k}"),
                    tape.d[j as usize].clone(),
                    dm1.pow_int(k - j).mul(&dk),
                )
            })
        }),
    ));

    // N_k <= C_d (d-1)^k D_k with C_d = 2 + 2/(d-2); needs d >= 3.
    if d >= 3 {
        let c_d = two.add(&two.div(&Scalar::from_integer((d - 2) as i64)));
        checks.push(le_check(
            "increment_energy_bound",
            (1..=k_max).map(|k| {
                (
                    format!("k={k}"),
                    tape.n[k as usize].clone(),
                    c_d.mul(&dm1.pow_int(k)).mul(&tape.d[k as usize]),
                )
            }),
        ));
    } else {
        checks.push(IdentityCheck {
            name: "increment_energy_bound",
            status: CheckStatus::NotApplicable {
                reason: "the bound constant is undefined for degree 2".into(),
            },
        });
    }

    // N_k >= 0 for every k.
    checks.push(le_check(
        "frequency_nonnegative",
        (0..=k_max).map(|k| {
            (
                format!("k={k}"),
                Scalar::from_integer(0),
                tape.n[k as usize].clone(),
            )
        }),
    ));

    checks
}

/// The three pointwise algebraic checks, on `tuple_count` seeded rational
/// tuples: the sum-of-squares decomposition behind the energy recurrence,
/// the convexity bound behind the frequency proof, and the symmetric power
/// inequality behind the 2-regular case. Exponents 1, 2, 3 are exercised.
pub fn scalar_inequality_checks(d: u32, tuple_count: u32, seed: u64) -> Vec<IdentityCheck> {
    let mut stream = SampleStream::for_root(seed);
    let mut draw = || Scalar::from_rational(stream.next_rational(12, 5));
    let dm1 = Scalar::from_integer((d - 1) as i64);

    // sum A_j^2 = (sum A_j)^2/(d-1) + sum_{i<j} (A_i - A_j)^2/(d-1)
    let mut sos = IdentityCheck {
        name: "sum_square_decomposition",
        status: CheckStatus::Pass {
            cases: tuple_count as u64,
        },
    };
    for _ in 0..tuple_count {
        let tuple: Vec<Scalar> = (0..d - 1).map(|_| draw()).collect();
        let lhs = tuple
            .iter()
            .fold(Scalar::from_integer(0), |acc, a| acc.add(&a.mul(a)));
        let total = tuple
            .iter()
            .fold(Scalar::from_integer(0), |acc, a| acc.add(a));
        let mut pair_sum = Scalar::from_integer(0);
        for i in 0..tuple.len() {
            for j in i + 1..tuple.len() {
                let diff = tuple[i].sub(&tuple[j]);
                pair_sum = pair_sum.add(&diff.mul(&diff));
            }
        }
        let rhs = total.mul(&total).add(&pair_sum).div(&dm1);
        if lhs != rhs {
            sos.status = CheckStatus::Fail {
                witness: format!("tuple {tuple:?}: lhs={lhs}, rhs={rhs}"),
            };
            break;
        }
    }

    // |(dA - B)/(d-1)|^p >= d/(d-1) |A|^p - 1/(d-1) |B|^p
    let mut jensen = IdentityCheck {
        name: "convexity_power_bound",
        status: CheckStatus::Pass {
            cases: 3 * tuple_count as u64,
        },
    };
    'jensen: for p in 1..=3u32 {
        let p = Exponent::integer(p);
        for _ in 0..tuple_count {
            let a = draw();
            let b = draw();
            let avg = a.mul(&Scalar::from_integer(d as i64)).sub(&b).div(&dm1);
            let lhs = avg.abs_pow(&p).unwrap();
            let rhs = a
                .abs_pow(&p)
                .unwrap()
                .mul(&Scalar::from_integer(d as i64))
                .sub(&b.abs_pow(&p).unwrap())
                .div(&dm1);
            if lhs.cmp_value(&rhs) == Ordering::Less {
                jensen.status = CheckStatus::Fail {
                    witness: format!("p={p}, A={a}, B={b}: lhs={lhs} < rhs={rhs}"),
                };
                break 'jensen;
            }
        }
    }

    // |c+t|^p + |c-t|^p >= 2|c|^p
    let mut sym = IdentityCheck {
        name: "symmetric_power_bound",
        status: CheckStatus::Pass {
            cases: 3 * tuple_count as u64,
        },
    };
    'sym: for p in 1..=3u32 {
        let p = Exponent::integer(p);
        for _ in 0..tuple_count {
            let c = draw();
            let t = draw();
            let lhs = c
                .add(&t)
                .abs_pow(&p)
                .unwrap()
                .add(&c.sub(&t).abs_pow(&p).unwrap());
            let rhs = c.abs_pow(&p).unwrap().mul(&Scalar::from_integer(2));
            if lhs.cmp_value(&rhs) == Ordering::Less {
                sym.status = CheckStatus::Fail {
                    witness: format!("p={p}, c={c}, t={t}: lhs={lhs} < rhs={rhs}"),
                };
                break 'sym;
            }
        }
    }

    vec![sos, jensen, sym]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, linear_2reg, Representation, RootData};
    use crate::scalar::parse_rational;
    use crate::splitter::Splitter;
    use crate::tree::TreeConfig;

    fn s(v: &str) -> Scalar {
        Scalar::from_rational(parse_rational(v).unwrap())
    }

    fn needweight(depth: u32) -> HarmonicModel {
        let cfg = TreeConfig::new(3).unwrap();
        let root = RootData::new(cfg, s("0"), vec![s("1"), s("-1/2"), s("-1/2")]).unwrap();
        build_model(
            cfg,
            root,
            Splitter::EqualSplit,
            depth,
            Representation::Enumerated,
        )
        .unwrap()
    }

    #[test]
    fn suite_passes_on_needweight() {
        let model = needweight(11);
        let report = identity_suite(&model, 10).unwrap();
        assert!(
            report.all_passed(),
            "{:?}",
            report.failures().collect::<Vec<_>>()
        );
        assert_eq!(report.checks.len(), 13);
    }

    #[test]
    fn suite_passes_on_random_models_all_degrees() {
        for d in 2..=6u32 {
            let cfg = TreeConfig::new(d).unwrap();
            let root = RootData::random(cfg, 3, 9, 4);
            let model = build_model(
                cfg,
                root,
                Splitter::random(3),
                9,
                Representation::Compressed,
            )
            .unwrap();
            let report = identity_suite(&model, 8).unwrap();
            assert!(
                report.all_passed(),
                "d={d}: {:?}",
                report.failures().collect::<Vec<_>>()
            );
            if d == 2 {
                assert!(report
                    .checks
                    .iter()
                    .any(|c| matches!(c.status, CheckStatus::NotApplicable { .. })));
            }
        }
    }

    #[test]
    fn suite_passes_on_2regular_line() {
        let model = linear_2reg(&s("3"), &s("-2"), 9, Representation::Enumerated).unwrap();
        let report = identity_suite(&model, 8).unwrap();
        assert!(report.all_passed());
    }

    #[test]
    fn increment_bound_holds_with_margin_on_random_d5() {
        // N_k <= (2 + 2/3) 4^k D_k on a random degree-5 model.
        let cfg = TreeConfig::new(5).unwrap();
        let root = RootData::random(cfg, 3, 9, 4);
        let model = build_model(
            cfg,
            root,
            Splitter::random(3),
            9,
            Representation::Compressed,
        )
        .unwrap();
        let tape = record(&model, 8).unwrap();
        let c_d = s("8/3");
        for k in 1..=8u32 {
            let bound = c_d
                .mul(&Scalar::from_integer(4).pow_int(k))
                .mul(&tape.d[k as usize]);
            assert!(tape.n[k as usize].cmp_value(&bound) != Ordering::Greater);
        }
    }

    #[test]
    fn suite_requires_exact_mode_and_depth() {
        let model = needweight(5);
        assert!(matches!(
            identity_suite(&model, 5),
            Err(Error::DepthInsufficient { .. })
        ));
        let froot = RootData::new(
            TreeConfig::new(3).unwrap(),
            s("0"),
            vec![s("1"), s("-1/2"), s("-1/2")],
        )
        .unwrap()
        .to_mode(crate::scalar::ScalarMode::float_default());
        let fmodel = build_model(
            TreeConfig::new(3).unwrap(),
            froot,
            Splitter::EqualSplit,
            5,
            Representation::Compressed,
        )
        .unwrap();
        assert!(matches!(
            identity_suite(&fmodel, 4),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn perturbed_model_fails_some_identity() {
        let model = needweight(6).perturbed(2, 1, &s("1/3")).unwrap();
        let report = identity_suite(&model, 5).unwrap();
        assert!(!report.all_passed());
    }

    #[test]
    fn scalar_checks_pass_for_all_degrees() {
        for d in 2..=6u32 {
            for check in scalar_inequality_checks(d, 500, 99) {
                assert!(check.passed(), "d={d} {}: {:?}", check.name, check.status);
            }
        }
    }
}
