//! Splitter rules: how a vertex's children values are chosen.
//!
//! Harmonicity forces the children of a vertex v with parent v_p to sum to
//! d*u(v) - u(v_p); a splitter decides how that sum is distributed. All
//! kinds except `Custom` are value-homogeneous: the children depend only on
//! the class (u(v), u(v_p)), never on the address, which is what makes
//! class compression sound.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};
use crate::tree::{TreeConfig, VertexAddress};
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub const RANDOM_MAGNITUDE_DEFAULT: u32 = 9;
pub const RANDOM_DENOMINATOR_DEFAULT: u32 = 4;

/// Address-dependent child rule; receives (address, value, parent value).
pub type CustomRule = Arc<dyn Fn(&VertexAddress, &Scalar, &Scalar) -> Vec<Scalar> + Send + Sync>;

#[derive(Clone)]
pub enum Splitter {
    /// All children receive the same value (d*u - u_p)/(d-1).
    EqualSplit,
    /// Every vertex sees two neighbors at half its value and one at double;
    /// children are the neighbor multiset minus the parent. Degree 3 only.
    DoubleHalf,
    /// Seeded random rule: one sampled value repeated over d-2 slots, the
    /// last child forced by the sum constraint. Reduced rationals with
    /// numerator in [-magnitude, magnitude], denominator in [1, denominator].
    Random {
        seed: u64,
        magnitude: u32,
        denominator: u32,
    },
    /// Explicit class map.
    Table(BTreeMap<(Scalar, Scalar), Vec<Scalar>>),
    /// Arbitrary address-dependent rule; enumerated representation only.
    Custom(CustomRule),
}

impl fmt::Debug for Splitter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Splitter::EqualSplit => write!(f, "EqualSplit"),
            Splitter::DoubleHalf => write!(f, "DoubleHalf"),
            Splitter::Random {
                seed,
                magnitude,
                denominator,
            } => write!(
                f,
                "Random {{ seed: {seed}, magnitude: {magnitude}, denominator: {denominator} }}"
            ),
            Splitter::Table(t) => write!(f, "Table({} classes)", t.len()),
            Splitter::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Splitter {
    pub fn random(seed: u64) -> Self {
        Splitter::Random {
            seed,
            magnitude: RANDOM_MAGNITUDE_DEFAULT,
            denominator: RANDOM_DENOMINATOR_DEFAULT,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Splitter::EqualSplit => "equal_split",
            Splitter::DoubleHalf => "double_half",
            Splitter::Random { .. } => "random",
            Splitter::Table(_) => "table",
            Splitter::Custom(_) => "custom",
        }
    }

    /// True when children depend only on (u(v), u(v_p)).
    pub fn is_value_homogeneous(&self) -> bool {
        !matches!(self, Splitter::Custom(_))
    }

    /// Convert table entries into the given mode so lookups match the
    /// model's scalars; other kinds are mode-agnostic.
    pub fn to_mode(&self, mode: ScalarMode) -> Splitter {
        match self {
            Splitter::Table(map) => Splitter::Table(
                map.iter()
                    .map(|((v, p), children)| {
                        (
                            (v.to_mode(mode), p.to_mode(mode)),
                            children.iter().map(|c| c.to_mode(mode)).collect(),
                        )
                    })
                    .collect(),
            ),
            other => other.clone(),
        }
    }

    /// Children of a vertex with the given class, for value-homogeneous
    /// kinds. The result always has cfg.d - 1 entries.
    pub fn children(
        &self,
        cfg: TreeConfig,
        value: &Scalar,
        parent: &Scalar,
    ) -> Result<Vec<Scalar>> {
        let d = cfg.degree();
        let n = (d - 1) as usize;
        match self {
            Splitter::EqualSplit => {
                // c = (d*u - u_p)/(d-1), repeated
                let sum = required_sum(d, value, parent);
                let c = sum.div(&Scalar::from_integer((d - 1) as i64).to_mode(value.mode()));
                Ok(vec![c; n])
            }
            Splitter::DoubleHalf => {
                if d != 3 {
                    return Err(Error::WrongDegree {
                        expected: "3".into(),
                        found: d,
                    });
                }
                let two = Scalar::from_integer(2).to_mode(value.mode());
                let double = value.mul(&two);
                let half = value.div(&two);
                if parent == &double {
                    Ok(vec![half.clone(), half])
                } else if parent == &half {
                    Ok(vec![double, half])
                } else {
                    Err(Error::SplitterUndefined {
                        value: value.to_string(),
                        parent: parent.to_string(),
                        reason: "parent value is neither double nor half of the vertex value"
                            .into(),
                    })
                }
            }
            Splitter::Random {
                seed,
                magnitude,
                denominator,
            } => {
                let sum = required_sum(d, value, parent);
                if d == 2 {
                    return Ok(vec![sum]);
                }
                // Keyed on the vertex value alone: classes sharing a value
                // share the sampled child, which keeps the compressed class
                // count near Fibonacci growth instead of doubling per level.
                let mut stream = SampleStream::for_value(*seed, value);
                let s = Scalar::from_rational(stream.next_rational(*magnitude, *denominator))
                    .to_mode(value.mode());
                let repeats = (d - 2) as i64;
                let forced = sum.sub(&s.mul(&Scalar::from_integer(repeats).to_mode(value.mode())));
                let mut children = vec![s; n - 1];
                children.push(forced);
                Ok(children)
            }
            Splitter::Table(map) => map
                .get(&(value.clone(), parent.clone()))
                .cloned()
                .ok_or_else(|| Error::ClassNotInTable {
                    value: value.to_string(),
                    parent: parent.to_string(),
                }),
            Splitter::Custom(_) => Err(Error::CustomSplitterNotCompressible),
        }
    }

    /// Children at a concrete address; needed for `Custom`, identical to
    /// [`Splitter::children`] otherwise.
    pub fn children_at(
        &self,
        cfg: TreeConfig,
        addr: &VertexAddress,
        value: &Scalar,
        parent: &Scalar,
    ) -> Result<Vec<Scalar>> {
        match self {
            Splitter::Custom(rule) => Ok(rule(addr, value, parent)),
            _ => self.children(cfg, value, parent),
        }
    }
}

/// d*u(v) - u(v_p), the forced sum of the children values.
pub fn required_sum(d: u32, value: &Scalar, parent: &Scalar) -> Scalar {
    value
        .mul(&Scalar::from_integer(d as i64).to_mode(value.mode()))
        .sub(parent)
}

/// Deterministic per-class sample source: FNV-1a over the class encoding
/// feeding a splitmix64 stream. Stable across platforms and runs.
pub(crate) struct SampleStream(u64);

impl SampleStream {
    pub(crate) fn for_value(seed: u64, value: &Scalar) -> Self {
        let mut h = Fnv::new();
        h.write(&seed.to_le_bytes());
        hash_scalar(&mut h, value);
        SampleStream(h.finish())
    }

    pub(crate) fn for_root(seed: u64) -> Self {
        let mut h = Fnv::new();
        h.write(&seed.to_le_bytes());
        h.write(b"root");
        SampleStream(h.finish())
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Reduced rational with numerator in [-m, m], denominator in [1, q].
    pub(crate) fn next_rational(&mut self, m: u32, q: u32) -> BigRational {
        let span = 2 * m as u64 + 1;
        let num = (self.next_u64() % span) as i64 - m as i64;
        let den = 1 + (self.next_u64() % q as u64) as i64;
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

fn hash_scalar(h: &mut Fnv, s: &Scalar) {
    match s.mode() {
        ScalarMode::Exact => {
            let r = s.as_exact().unwrap();
            hash_bigint(h, r.numer());
            hash_bigint(h, r.denom());
        }
        ScalarMode::Float { .. } => {
            // Hash the exact rational value so exact and float builds of the
            // same model sample identically.
            let r = s.to_rational();
            hash_bigint(h, r.numer());
            hash_bigint(h, r.denom());
        }
    }
}

fn hash_bigint(h: &mut Fnv, v: &BigInt) {
    let bytes = v.to_signed_bytes_le();
    h.write(&(bytes.len() as u64).to_le_bytes());
    h.write(&bytes);
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
