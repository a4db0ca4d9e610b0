//! Closed-form ground truth for the built-in model families, and the diff
//! driver that holds the engine to it.
//!
//! Four families have exact formulas: the bounded function on the 3-regular
//! tree (values +/-(2 - 2^(1-k)) on two branches, zero on the third), the
//! bounded-energy example with root children (1, -1/2, -1/2), the
//! double-half function (every vertex sees neighbors {2u, u/2, u/2}), and
//! the linear functions a*j + b on the 2-regular tree. All oracle values
//! are exact rationals so the diff can demand literal zero.

use crate::error::{Error, Result};
use crate::functionals::{
    almgren_n, dirichlet_g, edge_energy, f_level, vertex_power_sum, weiss_w, weiss_w2,
};
use crate::model::{build_model, linear_2reg, HarmonicModel, Representation, RootData};
use crate::scalar::{Exponent, Scalar, ScalarMode};
use crate::splitter::{Splitter, RANDOM_DENOMINATOR_DEFAULT, RANDOM_MAGNITUDE_DEFAULT};
use crate::tree::TreeConfig;
use std::fmt;

/// Names of the built-in model configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuiltinModel {
    /// 3-regular, root 0 with children (1, -1, 0), equal split. Bounded.
    Bounded3,
    /// 3-regular, root 0 with children (1, -1/2, -1/2), equal split.
    /// Bounded total (unweighted) energy.
    Needweight3,
    /// 3-regular, root 1 with children (2, 1/2, 1/2), double-half rule.
    DoubleHalf3,
    /// 2-regular line u(j) = a*j + b.
    Linear2 { a: Scalar, b: Scalar },
    /// Seeded random family with u0 = 0.
    Random { d: u32, seed: u64 },
}

impl BuiltinModel {
    /// Resolve a model name from the command line.
    pub fn from_name(
        name: &str,
        a: Option<Scalar>,
        b: Option<Scalar>,
        d: Option<u32>,
        seed: Option<u64>,
    ) -> Result<Self> {
        match name {
            "bounded3" => Ok(BuiltinModel::Bounded3),
            "needweight3" => Ok(BuiltinModel::Needweight3),
            "double_half3" => Ok(BuiltinModel::DoubleHalf3),
            "linear2" => Ok(BuiltinModel::Linear2 {
                a: a.unwrap_or_else(|| Scalar::from_integer(1)),
                b: b.unwrap_or_else(|| Scalar::from_integer(0)),
            }),
            "random" => Ok(BuiltinModel::Random {
                d: d.unwrap_or(3),
                seed: seed.unwrap_or(0),
            }),
            other => Err(Error::FamilyModelMismatch {
                family: other.to_string(),
                reason: "unknown built-in model name".into(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinModel::Bounded3 => "bounded3",
            BuiltinModel::Needweight3 => "needweight3",
            BuiltinModel::DoubleHalf3 => "double_half3",
            BuiltinModel::Linear2 { .. } => "linear2",
            BuiltinModel::Random { .. } => "random",
        }
    }

    pub fn degree(&self) -> u32 {
        match self {
            BuiltinModel::Linear2 { .. } => 2,
            BuiltinModel::Random { d, .. } => *d,
            _ => 3,
        }
    }
}

impl fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinModel::Linear2 { a, b } => write!(f, "linear2(a={a}, b={b})"),
            BuiltinModel::Random { d, seed } => write!(f, "random(d={d}, seed={seed})"),
            other => write!(f, "{}", other.name()),
        }
    }
}

/// Build a built-in model at the given depth, representation and mode.
pub fn builtin_model(
    which: &BuiltinModel,
    depth: u32,
    repr: Representation,
    mode: ScalarMode,
) -> Result<HarmonicModel> {
    let s = |v: i64| Scalar::from_integer(v);
    let r = |n: i64, d: i64| Scalar::from_ratio(n, d);
    match which {
        BuiltinModel::Bounded3 => {
            let cfg = TreeConfig::new(3)?;
            let root = RootData::new(cfg, s(0), vec![s(1), s(-1), s(0)])?.to_mode(mode);
            build_model(cfg, root, Splitter::EqualSplit, depth, repr)
        }
        BuiltinModel::Needweight3 => {
            let cfg = TreeConfig::new(3)?;
            let root = RootData::new(cfg, s(0), vec![s(1), r(-1, 2), r(-1, 2)])?.to_mode(mode);
            build_model(cfg, root, Splitter::EqualSplit, depth, repr)
        }
        BuiltinModel::DoubleHalf3 => {
            let cfg = TreeConfig::new(3)?;
            let root = RootData::new(cfg, s(1), vec![s(2), r(1, 2), r(1, 2)])?.to_mode(mode);
            build_model(cfg, root, Splitter::DoubleHalf, depth, repr)
        }
        BuiltinModel::Linear2 { a, b } => {
            linear_2reg(&a.to_mode(mode), &b.to_mode(mode), depth, repr)
        }
        BuiltinModel::Random { d, seed } => {
            let cfg = TreeConfig::new(*d)?;
            let root = RootData::random(
                cfg,
                *seed,
                RANDOM_MAGNITUDE_DEFAULT,
                RANDOM_DENOMINATOR_DEFAULT,
            )
            .to_mode(mode);
            build_model(cfg, root, Splitter::random(*seed), depth, repr)
        }
    }
}

fn pow2(k: u32) -> Scalar {
    Scalar::from_integer(2).pow_int(k)
}

fn powi(base: i64, k: u32) -> Scalar {
    Scalar::from_integer(base).pow_int(k)
}

fn require(name: &str, constraint: &str, ok: bool, k: u32) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OracleIndexOutOfRange {
            name: name.into(),
            constraint: constraint.into(),
            k,
        })
    }
}

/// Closed forms for the bounded 3-regular example.
pub mod bounded3 {
    use super::*;

    /// |u| on the two nonzero branches at level k: 2 - 2^(1-k) for k >= 1.
    pub fn value_magnitude(k: u32) -> Scalar {
        if k == 0 {
            return Scalar::from_integer(0);
        }
        Scalar::from_integer(2).sub(&Scalar::from_integer(2).div(&pow2(k)))
    }

    /// G(k) = 2 for every k >= 1 and every p.
    pub fn g(k: u32, _p: u32) -> Result<Scalar> {
        require("bounded3.G", "k >= 1", k >= 1, k)?;
        Ok(Scalar::from_integer(2))
    }

    /// W(k) = 2k - 4 + 8/2^k - 4/4^k, k >= 1.
    pub fn w(k: u32) -> Result<Scalar> {
        require("bounded3.W", "k >= 1", k >= 1, k)?;
        Ok(Scalar::from_integer(2 * k as i64 - 4)
            .add(&Scalar::from_integer(8).div(&pow2(k)))
            .sub(&Scalar::from_integer(4).div(&powi(4, k))))
    }

    /// H(k) = 2^(k+p) (1 - 2^-k)^p.
    pub fn h(k: u32, p: u32) -> Scalar {
        pow2(k + p).mul(
            &Scalar::from_integer(1)
                .sub(&Scalar::from_integer(1).div(&pow2(k)))
                .pow_int(p),
        )
    }

    /// N(k) = 2^(k+p) [(1 - 2^-(k+1))^p - (1 - 2^-k)^p], k >= 0.
    pub fn n(k: u32, p: u32) -> Scalar {
        let term = |j: u32| {
            Scalar::from_integer(1)
                .sub(&Scalar::from_integer(1).div(&pow2(j)))
                .pow_int(p)
        };
        pow2(k + p).mul(&term(k + 1).sub(&term(k)))
    }
}

/// Closed forms for the bounded-energy example (root children 1, -1/2,
/// -1/2).
pub mod needweight3 {
    use super::*;

    /// D_k = 3 / 2^(k+1).
    pub fn d(k: u32) -> Scalar {
        Scalar::from_integer(3).div(&pow2(k + 1))
    }

    /// Sum of D_j for j < k: 3 (1 - 2^-k). Approaches, never exceeds, 3.
    pub fn partial_energy(k: u32) -> Scalar {
        Scalar::from_integer(3)
            .mul(&Scalar::from_integer(1).sub(&Scalar::from_integer(1).div(&pow2(k))))
    }
}

/// Closed forms for the double-half function.
pub mod double_half3 {
    use super::*;

    /// 2^l * D_l = 9*8^l/7 + 3/14: the weighted edge sum of one level
    /// (p = 2).
    pub fn weighted_level_sum(l: u32) -> Scalar {
        Scalar::from_integer(9)
            .mul(&powi(8, l))
            .div(&Scalar::from_integer(7))
            .add(&Scalar::from_ratio(3, 14))
    }

    /// Weighted upward-edge sum: 8^l.
    pub fn u_sum(l: u32) -> Scalar {
        powi(8, l)
    }

    /// Weighted downward-edge sum: 1/2 + 2(8^l - 1)/7.
    pub fn d_sum(l: u32) -> Scalar {
        Scalar::from_ratio(1, 2).add(
            &Scalar::from_integer(2)
                .mul(&powi(8, l).sub(&Scalar::from_integer(1)))
                .div(&Scalar::from_integer(7)),
        )
    }

    /// Power sum over vertices whose parent carries double their value:
    /// (3/7) 2^-l + 4^l/14 for p = 2, (15/31) 4^-l + 8^l/62 for p = 3.
    /// Defined for l >= 1 (the root has no parent).
    pub fn a_sum(l: u32, p: u32) -> Result<Scalar> {
        require("double_half3.A", "l >= 1", l >= 1, l)?;
        match p {
            2 => Ok(Scalar::from_ratio(3, 7)
                .div(&pow2(l))
                .add(&powi(4, l).div(&Scalar::from_integer(14)))),
            3 => Ok(Scalar::from_ratio(15, 31)
                .div(&powi(4, l))
                .add(&powi(8, l).div(&Scalar::from_integer(62)))),
            _ => Err(Error::UnsupportedOracleExponent {
                family: "double_half3".into(),
                p: p.to_string(),
            }),
        }
    }

    /// Power sum over vertices whose parent carries half their value:
    /// 4^l (p = 2) or 8^l (p = 3), l >= 1.
    pub fn b_sum(l: u32, p: u32) -> Result<Scalar> {
        require("double_half3.B", "l >= 1", l >= 1, l)?;
        match p {
            2 => Ok(powi(4, l)),
            3 => Ok(powi(8, l)),
            _ => Err(Error::UnsupportedOracleExponent {
                family: "double_half3".into(),
                p: p.to_string(),
            }),
        }
    }

    /// G(k) = (1/k) [9(8^k - 1)/49 + 3k/14], k >= 1 (p = 2).
    pub fn g(k: u32) -> Result<Scalar> {
        require("double_half3.G", "k >= 1", k >= 1, k)?;
        let sum = Scalar::from_integer(9)
            .mul(&powi(8, k).sub(&Scalar::from_integer(1)))
            .div(&Scalar::from_integer(49))
            .add(&Scalar::from_ratio(3, 14).mul(&Scalar::from_integer(k as i64)));
        Ok(sum.div(&Scalar::from_integer(k as i64)))
    }

    /// W(k) = 9(8^k-1)/49 + 3k/14 - 2^-k [(3/7) 2^-k + 4^k/14 + 4^k],
    /// k >= 1.
    pub fn w(k: u32) -> Result<Scalar> {
        require("double_half3.W", "k >= 1", k >= 1, k)?;
        let sum = Scalar::from_integer(9)
            .mul(&powi(8, k).sub(&Scalar::from_integer(1)))
            .div(&Scalar::from_integer(49))
            .add(&Scalar::from_ratio(3, 14).mul(&Scalar::from_integer(k as i64)));
        let h = Scalar::from_ratio(3, 7)
            .div(&pow2(k))
            .add(&powi(4, k).div(&Scalar::from_integer(14)))
            .add(&powi(4, k));
        Ok(sum.sub(&h.div(&pow2(k))))
    }

    /// W(k+1) - W(k) = 9*8^k/7 + 3/14 + 9/(28*4^k) - 15*2^k/14, k >= 1.
    /// Strictly positive.
    pub fn w_increment(k: u32) -> Result<Scalar> {
        require("double_half3.W_inc", "k >= 1", k >= 1, k)?;
        Ok(Scalar::from_integer(9)
            .mul(&powi(8, k))
            .div(&Scalar::from_integer(7))
            .add(&Scalar::from_ratio(3, 14))
            .add(&Scalar::from_integer(9).div(&Scalar::from_integer(28).mul(&powi(4, k))))
            .sub(
                &Scalar::from_integer(15)
                    .mul(&pow2(k))
                    .div(&Scalar::from_integer(14)),
            ))
    }

    /// N(l) = -105/(248*4^l) + 189*8^l/62 for p = 3, l >= 1. The closed
    /// form relies on the type split, which only exists below the root.
    pub fn n_p3(l: u32) -> Result<Scalar> {
        require("double_half3.N", "l >= 1", l >= 1, l)?;
        Ok(Scalar::from_integer(189)
            .mul(&powi(8, l))
            .div(&Scalar::from_integer(62))
            .sub(&Scalar::from_integer(105).div(&Scalar::from_integer(248).mul(&powi(4, l)))))
    }
}

/// Closed forms for the linear family on the 2-regular tree.
pub mod linear2 {
    use super::*;

    /// G(k) = 2 |a|^p for every k >= 1.
    pub fn g(a: &Scalar, _b: &Scalar, k: u32, p: u32) -> Result<Scalar> {
        require("linear2.G", "k >= 1", k >= 1, k)?;
        Ok(a.abs().pow_int(p).mul(&Scalar::from_integer(2)))
    }

    /// W(k) = a^2 - b^2/k^2, k >= 1.
    pub fn w(a: &Scalar, b: &Scalar, k: u32) -> Result<Scalar> {
        require("linear2.W", "k >= 1", k >= 1, k)?;
        let k2 = Scalar::from_integer((k as i64) * (k as i64));
        Ok(a.mul(a).sub(&b.mul(b).div(&k2)))
    }

    /// N(k) = f(k+1) - f(k) with f(j) = |a j + b|^p + |-a j + b|^p.
    /// The two-sided sum reads the root twice, so the formula is valid for
    /// k >= 1 in general and from k = 0 only when b = 0.
    pub fn n(a: &Scalar, b: &Scalar, k: u32, p: u32) -> Result<Scalar> {
        require(
            "linear2.N",
            "k >= 1 (k >= 0 when b = 0)",
            k >= 1 || b.is_zero(),
            k,
        )?;
        let f = |j: u32| {
            let aj = a.mul(&Scalar::from_integer(j as i64));
            aj.add(b)
                .abs()
                .pow_int(p)
                .add(&aj.neg().add(b).abs().pow_int(p))
        };
        Ok(f(k + 1).sub(&f(k)))
    }
}

/// Engine-side split of a double-half level into the two parent types:
/// (sum over vertices with parent 2u, sum over vertices with parent u/2)
/// of |u|^p.
pub fn double_half_type_sums(
    model: &HarmonicModel,
    l: u32,
    p: &Exponent,
) -> Result<(Scalar, Scalar)> {
    if l < 1 {
        return Err(Error::OracleIndexOutOfRange {
            name: "type sums".into(),
            constraint: "l >= 1".into(),
            k: l,
        });
    }
    let classes = model.classes(l)?;
    let two = Scalar::from_integer(2).to_mode(model.mode());
    let mut a = Scalar::zero(model.mode());
    let mut b = Scalar::zero(model.mode());
    for (class, mult) in &classes.classes {
        let parent = class.parent.as_ref().expect("level >= 1");
        let contribution = class.value.abs_pow(p)?.mul_nat(mult);
        if *parent == class.value.mul(&two) {
            a = a.add(&contribution);
        } else if *parent == class.value.div(&two) {
            b = b.add(&contribution);
        } else {
            return Err(Error::FamilyModelMismatch {
                family: "double_half3".into(),
                reason: format!(
                    "class (u={}, up={}) fits neither parent type",
                    class.value, parent
                ),
            });
        }
    }
    Ok((a, b))
}

/// One engine-vs-oracle comparison.
#[derive(Debug, Clone)]
pub struct DiffEntry {
    pub name: &'static str,
    pub k: u32,
    pub engine: Scalar,
    pub oracle: Scalar,
}

impl DiffEntry {
    pub fn diff(&self) -> Scalar {
        self.engine.sub(&self.oracle)
    }

    pub fn is_zero(&self) -> bool {
        self.engine == self.oracle
    }
}

#[derive(Debug, Clone)]
pub struct DiffReport {
    pub family: String,
    pub p: u32,
    pub entries: Vec<DiffEntry>,
}

impl DiffReport {
    pub fn all_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &DiffEntry> {
        self.entries.iter().filter(|e| !e.is_zero())
    }
}

fn verify_family(model: &HarmonicModel, family: &BuiltinModel) -> Result<()> {
    let mismatch = |reason: &str| {
        Err(Error::FamilyModelMismatch {
            family: family.name().into(),
            reason: reason.into(),
        })
    };
    if model.degree() != family.degree() {
        return mismatch(&format!(
            "model degree {} != family degree {}",
            model.degree(),
            family.degree()
        ));
    }
    let reference = builtin_model(family, 0, Representation::Compressed, ScalarMode::Exact)?;
    if model.root_data().u0().to_rational() != reference.root_data().u0().to_rational() {
        return mismatch("root value differs");
    }
    let mut got: Vec<_> = model
        .root_data()
        .children()
        .iter()
        .map(|c| c.to_rational())
        .collect();
    let mut want: Vec<_> = reference
        .root_data()
        .children()
        .iter()
        .map(|c| c.to_rational())
        .collect();
    got.sort();
    want.sort();
    if got != want {
        return mismatch("root children differ");
    }
    Ok(())
}

/// Compare engine output with the family's closed forms for every
/// applicable index up to k_max. All comparisons are exact.
pub fn oracle_diff(
    model: &HarmonicModel,
    family: &BuiltinModel,
    p: u32,
    k_max: u32,
) -> Result<DiffReport> {
    verify_family(model, family)?;
    model.require_depth(k_max)?;
    let pe = Exponent::integer(p);
    let mut entries = Vec::new();

    match family {
        BuiltinModel::Bounded3 => {
            for k in 1..=k_max {
                entries.push(DiffEntry {
                    name: "G",
                    k,
                    engine: dirichlet_g(model, &pe, k)?,
                    oracle: bounded3::g(k, p)?,
                });
            }
            if p == 2 {
                for k in 1..=k_max {
                    entries.push(DiffEntry {
                        name: "W",
                        k,
                        engine: weiss_w(model, k)?,
                        oracle: bounded3::w(k)?,
                    });
                }
            }
            for k in 0..=k_max {
                entries.push(DiffEntry {
                    name: "H",
                    k,
                    engine: vertex_power_sum(model, &pe, k)?,
                    oracle: bounded3::h(k, p),
                });
            }
            for k in 0..k_max {
                entries.push(DiffEntry {
                    name: "N",
                    k,
                    engine: almgren_n(model, &pe, k)?,
                    oracle: bounded3::n(k, p),
                });
            }
        }
        BuiltinModel::Needweight3 => {
            if p != 2 {
                return Err(Error::UnsupportedOracleExponent {
                    family: "needweight3".into(),
                    p: p.to_string(),
                });
            }
            let mut partial = Scalar::from_integer(0).to_mode(model.mode());
            for k in 0..k_max {
                let d_k = edge_energy(model, &pe, k)?;
                entries.push(DiffEntry {
                    name: "D",
                    k,
                    engine: d_k.clone(),
                    oracle: needweight3::d(k),
                });
                partial = partial.add(&d_k);
                entries.push(DiffEntry {
                    name: "partial_energy",
                    k: k + 1,
                    engine: partial.clone(),
                    oracle: needweight3::partial_energy(k + 1),
                });
            }
        }
        BuiltinModel::DoubleHalf3 => match p {
            2 => {
                for l in 0..k_max {
                    entries.push(DiffEntry {
                        name: "weighted_level_sum",
                        k: l,
                        engine: f_level(model, &pe, l)?,
                        oracle: double_half3::weighted_level_sum(l),
                    });
                }
                for l in 1..=k_max {
                    let (a, b) = double_half_type_sums(model, l, &pe)?;
                    entries.push(DiffEntry {
                        name: "A",
                        k: l,
                        engine: a,
                        oracle: double_half3::a_sum(l, 2)?,
                    });
                    entries.push(DiffEntry {
                        name: "B",
                        k: l,
                        engine: b,
                        oracle: double_half3::b_sum(l, 2)?,
                    });
                }
                for k in 1..=k_max {
                    entries.push(DiffEntry {
                        name: "G",
                        k,
                        engine: dirichlet_g(model, &pe, k)?,
                        oracle: double_half3::g(k)?,
                    });
                    entries.push(DiffEntry {
                        name: "W",
                        k,
                        engine: weiss_w(model, k)?,
                        oracle: double_half3::w(k)?,
                    });
                }
                for k in 1..k_max {
                    entries.push(DiffEntry {
                        name: "W_increment",
                        k,
                        engine: weiss_w(model, k + 1)?.sub(&weiss_w(model, k)?),
                        oracle: double_half3::w_increment(k)?,
                    });
                }
            }
            3 => {
                for l in 1..=k_max {
                    let (a, b) = double_half_type_sums(model, l, &pe)?;
                    entries.push(DiffEntry {
                        name: "A",
                        k: l,
                        engine: a,
                        oracle: double_half3::a_sum(l, 3)?,
                    });
                    entries.push(DiffEntry {
                        name: "B",
                        k: l,
                        engine: b,
                        oracle: double_half3::b_sum(l, 3)?,
                    });
                }
                for l in 1..k_max {
                    entries.push(DiffEntry {
                        name: "N",
                        k: l,
                        engine: almgren_n(model, &pe, l)?,
                        oracle: double_half3::n_p3(l)?,
                    });
                }
            }
            _ => {
                return Err(Error::UnsupportedOracleExponent {
                    family: "double_half3".into(),
                    p: p.to_string(),
                })
            }
        },
        BuiltinModel::Linear2 { a, b } => {
            for k in 1..=k_max {
                entries.push(DiffEntry {
                    name: "G",
                    k,
                    engine: dirichlet_g(model, &pe, k)?,
                    oracle: linear2::g(a, b, k, p)?,
                });
            }
            if p == 2 {
                for k in 1..=k_max {
                    entries.push(DiffEntry {
                        name: "W",
                        k,
                        engine: weiss_w2(model, k)?,
                        oracle: linear2::w(a, b, k)?,
                    });
                }
            }
            let n_start = if b.is_zero() { 0 } else { 1 };
            for k in n_start..k_max {
                entries.push(DiffEntry {
                    name: "N",
                    k,
                    engine: almgren_n(model, &pe, k)?,
                    oracle: linear2::n(a, b, k, p)?,
                });
            }
        }
        BuiltinModel::Random { .. } => {
            return Err(Error::FamilyModelMismatch {
                family: "random".into(),
                reason: "the random family has no closed-form oracle".into(),
            })
        }
    }

    Ok(DiffReport {
        family: family.to_string(),
        p,
        entries,
    })
}
