//! Harmonic models: level-by-level construction of harmonic functions.
//!
//! A model is root data (the value at x0 and on its d neighbors) plus a
//! splitter rule that extends each level to the next under the harmonicity
//! sum constraint. Levels are stored either enumerated (one record per
//! vertex, address order) or compressed (multiplicities of (value,
//! parent value) classes). Enumerated mode is the ground truth; compressed
//! mode is the representation that survives exponential level growth.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};
use crate::splitter::{required_sum, SampleStream, Splitter};
use crate::tree::{TreeConfig, VertexAddress};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

/// Hard cap on enumerated level sizes; beyond this only compressed
/// representations are practical.
const ENUMERATION_LIMIT: u64 = 1 << 27;

/// Values at the root and on level 1.
#[derive(Debug, Clone)]
pub struct RootData {
    u0: Scalar,
    children: Vec<Scalar>,
}

impl RootData {
    /// Validates arity (d children) and, in exact mode, the harmonicity
    /// constraint sum(children) = d * u0.
    pub fn new(cfg: TreeConfig, u0: Scalar, children: Vec<Scalar>) -> Result<Self> {
        let d = cfg.degree();
        if children.len() != d as usize {
            return Err(Error::RootArity {
                expected: d,
                found: children.len(),
            });
        }
        if u0.mode().is_exact() {
            let sum = children
                .iter()
                .fold(Scalar::from_integer(0), |acc, c| acc.add(c));
            let expected = u0.mul(&Scalar::from_integer(d as i64));
            if sum != expected {
                return Err(Error::RootSumViolation {
                    sum: sum.to_string(),
                    expected: expected.to_string(),
                });
            }
        }
        Ok(RootData { u0, children })
    }

    /// The constant function's root data.
    pub fn constant(cfg: TreeConfig, c: Scalar) -> Self {
        let children = vec![c.clone(); cfg.degree() as usize];
        RootData { u0: c, children }
    }

    /// Seeded random root data with u0 = 0: d-1 sampled children, the last
    /// forced so the values sum to zero.
    pub fn random(cfg: TreeConfig, seed: u64, magnitude: u32, denominator: u32) -> Self {
        let d = cfg.degree() as usize;
        let mut stream = SampleStream::for_root(seed);
        let mut children: Vec<Scalar> = (0..d - 1)
            .map(|_| Scalar::from_rational(stream.next_rational(magnitude, denominator)))
            .collect();
        let sum = children
            .iter()
            .fold(Scalar::from_integer(0), |acc, c| acc.add(c));
        children.push(sum.neg());
        RootData {
            u0: Scalar::from_integer(0),
            children,
        }
    }

    pub fn u0(&self) -> &Scalar {
        &self.u0
    }

    pub fn children(&self) -> &[Scalar] {
        &self.children
    }

    pub fn to_mode(&self, mode: ScalarMode) -> Self {
        RootData {
            u0: self.u0.to_mode(mode),
            children: self.children.iter().map(|c| c.to_mode(mode)).collect(),
        }
    }
}

/// One vertex in an enumerated level. `parent_value` is `None` only at the
/// root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexRecord {
    pub value: Scalar,
    pub parent_value: Option<Scalar>,
}

/// A (value, parent value) class; the unit of compression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassKey {
    pub value: Scalar,
    pub parent: Option<Scalar>,
}

#[derive(Debug, Clone)]
pub struct EnumeratedLevel {
    pub k: u32,
    pub records: Vec<VertexRecord>,
}

impl EnumeratedLevel {
    /// Index of the sibling block (= parent index at level k-1) containing
    /// the given record.
    pub fn sibling_block_id(&self, cfg: TreeConfig, index: usize) -> usize {
        if self.k <= 1 {
            0
        } else {
            index / (cfg.degree() - 1) as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedLevel {
    pub k: u32,
    pub classes: BTreeMap<ClassKey, BigUint>,
}

impl CompressedLevel {
    pub fn vertex_count(&self) -> BigUint {
        self.classes.values().fold(BigUint::zero(), |a, m| a + m)
    }
}

/// Level data in one of the two representations.
#[derive(Debug, Clone)]
pub enum LevelState {
    Enumerated(EnumeratedLevel),
    Compressed(CompressedLevel),
}

impl LevelState {
    pub fn k(&self) -> u32 {
        match self {
            LevelState::Enumerated(e) => e.k,
            LevelState::Compressed(c) => c.k,
        }
    }

    pub fn vertex_count(&self) -> BigUint {
        match self {
            LevelState::Enumerated(e) => BigUint::from(e.records.len()),
            LevelState::Compressed(c) => c.vertex_count(),
        }
    }

    pub fn as_enumerated(&self) -> Option<&EnumeratedLevel> {
        match self {
            LevelState::Enumerated(e) => Some(e),
            LevelState::Compressed(_) => None,
        }
    }

    pub fn as_compressed(&self) -> Option<&CompressedLevel> {
        match self {
            LevelState::Compressed(c) => Some(c),
            LevelState::Enumerated(_) => None,
        }
    }
}

/// Which representation a model is built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Enumerated,
    Compressed,
}

/// Group identical (value, parent value) pairs of an enumerated level.
pub fn compress(level: &EnumeratedLevel) -> CompressedLevel {
    let mut counts: HashMap<ClassKey, u64> = HashMap::new();
    for rec in &level.records {
        let key = ClassKey {
            value: rec.value.clone(),
            parent: rec.parent_value.clone(),
        };
        *counts.entry(key).or_insert(0) += 1;
    }
    let classes = counts
        .into_iter()
        .map(|(k, v)| (k, BigUint::from(v)))
        .collect();
    CompressedLevel {
        k: level.k,
        classes,
    }
}

/// Exact equality of class multiplicities between the two representations.
pub fn states_equivalent(e: &EnumeratedLevel, c: &CompressedLevel) -> bool {
    e.k == c.k && compress(e).classes == c.classes
}

/// Extend a level by one. Level 0 is extended from the root data; deeper
/// levels apply the splitter to every vertex (or class).
pub fn extend(
    cfg: TreeConfig,
    state: &LevelState,
    splitter: &Splitter,
    root: &RootData,
) -> Result<LevelState> {
    let k = state.k();
    match state {
        LevelState::Enumerated(level) => {
            let next = extend_enumerated(cfg, level, splitter, root)?;
            Ok(LevelState::Enumerated(next))
        }
        LevelState::Compressed(level) => {
            if !splitter.is_value_homogeneous() && k >= 1 {
                return Err(Error::CustomSplitterNotCompressible);
            }
            let next = extend_compressed(cfg, level, splitter, root)?;
            Ok(LevelState::Compressed(next))
        }
    }
}

fn check_child_sum(d: u32, value: &Scalar, parent: &Scalar, children: &[Scalar]) -> Result<()> {
    if !value.mode().is_exact() {
        return Ok(());
    }
    let sum = children
        .iter()
        .fold(Scalar::from_integer(0), |acc, c| acc.add(c));
    let expected = required_sum(d, value, parent);
    if sum != expected {
        return Err(Error::SplitterViolatesSum {
            value: value.to_string(),
            parent: parent.to_string(),
            sum: sum.to_string(),
            expected: expected.to_string(),
        });
    }
    Ok(())
}

fn extend_enumerated(
    cfg: TreeConfig,
    level: &EnumeratedLevel,
    splitter: &Splitter,
    root: &RootData,
) -> Result<EnumeratedLevel> {
    let d = cfg.degree();
    let k = level.k;
    let next_size = cfg
        .level_size(k + 1)
        .to_u64()
        .filter(|n| *n <= ENUMERATION_LIMIT)
        .ok_or(Error::EnumerationTooLarge { level: k + 1 })? as usize;
    let mut records = Vec::with_capacity(next_size);

    if k == 0 {
        let u0 = &level.records[0].value;
        let zero = Scalar::zero(u0.mode());
        check_child_sum(d, u0, &zero, root.children()).map_err(|_| Error::RootSumViolation {
            sum: "root children".into(),
            expected: format!("{d}*u0"),
        })?;
        for c in root.children() {
            records.push(VertexRecord {
                value: c.clone(),
                parent_value: Some(u0.clone()),
            });
        }
        return Ok(EnumeratedLevel { k: 1, records });
    }

    if splitter.is_value_homogeneous() {
        // Children are a pure function of the class: compute once per class,
        // share the scalars across all occurrences.
        let mut memo: HashMap<(Scalar, Scalar), Vec<Scalar>> = HashMap::new();
        for rec in &level.records {
            let parent = rec.parent_value.as_ref().expect("non-root level");
            let key = (rec.value.clone(), parent.clone());
            let children = match memo.get(&key) {
                Some(c) => c,
                None => {
                    let c = splitter.children(cfg, &rec.value, parent)?;
                    check_child_sum(d, &rec.value, parent, &c)?;
                    memo.entry(key).or_insert(c)
                }
            };
            for c in children {
                records.push(VertexRecord {
                    value: c.clone(),
                    parent_value: Some(rec.value.clone()),
                });
            }
        }
    } else {
        for (i, rec) in level.records.iter().enumerate() {
            let parent = rec.parent_value.as_ref().expect("non-root level");
            let addr = address_from_index(cfg, k, i);
            let children = splitter.children_at(cfg, &addr, &rec.value, parent)?;
            if children.len() != (d - 1) as usize {
                return Err(Error::SplitterUndefined {
                    value: rec.value.to_string(),
                    parent: parent.to_string(),
                    reason: format!(
                        "rule returned {} children, expected {}",
                        children.len(),
                        d - 1
                    ),
                });
            }
            check_child_sum(d, &rec.value, parent, &children)?;
            for c in children {
                records.push(VertexRecord {
                    value: c,
                    parent_value: Some(rec.value.clone()),
                });
            }
        }
    }
    Ok(EnumeratedLevel { k: k + 1, records })
}

fn extend_compressed(
    cfg: TreeConfig,
    level: &CompressedLevel,
    splitter: &Splitter,
    root: &RootData,
) -> Result<CompressedLevel> {
    let d = cfg.degree();
    let k = level.k;
    let mut classes: BTreeMap<ClassKey, BigUint> = BTreeMap::new();

    if k == 0 {
        let u0 = root.u0();
        for c in root.children() {
            let key = ClassKey {
                value: c.clone(),
                parent: Some(u0.clone()),
            };
            *classes.entry(key).or_insert_with(BigUint::zero) += BigUint::one();
        }
        return Ok(CompressedLevel { k: 1, classes });
    }

    for (class, mult) in &level.classes {
        let parent = class.parent.as_ref().expect("non-root level");
        let children = splitter.children(cfg, &class.value, parent)?;
        check_child_sum(d, &class.value, parent, &children)?;
        for c in children {
            let key = ClassKey {
                value: c,
                parent: Some(class.value.clone()),
            };
            *classes.entry(key).or_insert_with(BigUint::zero) += mult;
        }
    }
    Ok(CompressedLevel { k: k + 1, classes })
}

/// Address of the i-th vertex (in address order) of level k: the first path
/// step has radix d, deeper steps radix d-1.
pub fn address_from_index(cfg: TreeConfig, k: u32, index: usize) -> VertexAddress {
    let d = cfg.degree() as usize;
    let mut digits = vec![0u32; k as usize];
    let mut rest = index;
    for pos in (1..k as usize).rev() {
        digits[pos] = (rest % (d - 1)) as u32;
        rest /= d - 1;
    }
    if k >= 1 {
        digits[0] = rest as u32;
    }
    VertexAddress::new(cfg, digits).expect("index within level bounds")
}

/// Memo of level-sum results keyed by (exponent, level); sums are pure
/// functions of the immutable ladder.
#[derive(Debug, Default)]
struct AggregateCache {
    edge: HashMap<(BigRational, u32), Scalar>,
    vertex: HashMap<(BigRational, u32), Scalar>,
}

/// A harmonic function truncated at depth K, with every level retained.
#[derive(Debug)]
pub struct HarmonicModel {
    cfg: TreeConfig,
    root: RootData,
    splitter: Splitter,
    ladder: Vec<LevelState>,
    mode: ScalarMode,
    class_views: Vec<OnceLock<CompressedLevel>>,
    agg_cache: Mutex<AggregateCache>,
}

impl Clone for HarmonicModel {
    fn clone(&self) -> Self {
        HarmonicModel {
            cfg: self.cfg,
            root: self.root.clone(),
            splitter: self.splitter.clone(),
            ladder: self.ladder.clone(),
            mode: self.mode,
            class_views: (0..self.ladder.len()).map(|_| OnceLock::new()).collect(),
            agg_cache: Mutex::new(AggregateCache::default()),
        }
    }
}

/// Build a model of the given depth. Deterministic for a fixed splitter
/// (and seed); levels are immutable afterwards.
pub fn build_model(
    cfg: TreeConfig,
    root: RootData,
    splitter: Splitter,
    depth: u32,
    repr: Representation,
) -> Result<HarmonicModel> {
    let mode = root.u0().mode();
    let root_record = VertexRecord {
        value: root.u0().clone(),
        parent_value: None,
    };
    let level0 = match repr {
        Representation::Enumerated => LevelState::Enumerated(EnumeratedLevel {
            k: 0,
            records: vec![root_record],
        }),
        Representation::Compressed => {
            let mut classes = BTreeMap::new();
            classes.insert(
                ClassKey {
                    value: root.u0().clone(),
                    parent: None,
                },
                BigUint::one(),
            );
            LevelState::Compressed(CompressedLevel { k: 0, classes })
        }
    };
    let mut ladder = Vec::with_capacity(depth as usize + 1);
    ladder.push(level0);
    for k in 0..depth {
        let next = extend(cfg, &ladder[k as usize], &splitter, &root)?;
        ladder.push(next);
    }
    let class_views = (0..ladder.len()).map(|_| OnceLock::new()).collect();
    Ok(HarmonicModel {
        cfg,
        root,
        splitter,
        ladder,
        mode,
        class_views,
        agg_cache: Mutex::new(AggregateCache::default()),
    })
}

impl HarmonicModel {
    pub fn cfg(&self) -> TreeConfig {
        self.cfg
    }

    pub fn degree(&self) -> u32 {
        self.cfg.degree()
    }

    pub fn depth(&self) -> u32 {
        (self.ladder.len() - 1) as u32
    }

    pub fn mode(&self) -> ScalarMode {
        self.mode
    }

    pub fn root_data(&self) -> &RootData {
        &self.root
    }

    pub fn splitter(&self) -> &Splitter {
        &self.splitter
    }

    pub fn level(&self, k: u32) -> Result<&LevelState> {
        self.ladder.get(k as usize).ok_or(Error::DepthInsufficient {
            needed: k,
            available: self.depth(),
        })
    }

    pub fn require_depth(&self, k: u32) -> Result<()> {
        if k > self.depth() {
            return Err(Error::DepthInsufficient {
                needed: k,
                available: self.depth(),
            });
        }
        Ok(())
    }

    /// Class multiplicities of level k, independent of representation.
    /// Enumerated levels are grouped on first use and cached.
    pub fn classes(&self, k: u32) -> Result<&CompressedLevel> {
        self.require_depth(k)?;
        let cell = &self.class_views[k as usize];
        Ok(cell.get_or_init(|| match &self.ladder[k as usize] {
            LevelState::Compressed(c) => c.clone(),
            LevelState::Enumerated(e) => compress(e),
        }))
    }

    /// Values of level k as a multiset (one entry per class with its
    /// multiplicity).
    pub fn value_classes(&self, k: u32) -> Result<Vec<(Scalar, BigUint)>> {
        let classes = self.classes(k)?;
        let mut by_value: BTreeMap<Scalar, BigUint> = BTreeMap::new();
        for (class, mult) in &classes.classes {
            *by_value
                .entry(class.value.clone())
                .or_insert_with(BigUint::zero) += mult;
        }
        Ok(by_value.into_iter().collect())
    }

    pub(crate) fn cached_edge_sum(&self, p: &BigRational, k: u32) -> Option<Scalar> {
        self.agg_cache
            .lock()
            .unwrap()
            .edge
            .get(&(p.clone(), k))
            .cloned()
    }

    pub(crate) fn store_edge_sum(&self, p: &BigRational, k: u32, value: &Scalar) {
        self.agg_cache
            .lock()
            .unwrap()
            .edge
            .insert((p.clone(), k), value.clone());
    }

    pub(crate) fn cached_vertex_sum(&self, p: &BigRational, k: u32) -> Option<Scalar> {
        self.agg_cache
            .lock()
            .unwrap()
            .vertex
            .get(&(p.clone(), k))
            .cloned()
    }

    pub(crate) fn store_vertex_sum(&self, p: &BigRational, k: u32, value: &Scalar) {
        self.agg_cache
            .lock()
            .unwrap()
            .vertex
            .insert((p.clone(), k), value.clone());
    }

    /// Copy of the model with a single vertex value shifted by `delta`;
    /// parent/child records are left untouched, so harmonicity checks must
    /// fail afterwards. Test hook for the failure paths.
    pub fn perturbed(&self, level: u32, index: usize, delta: &Scalar) -> Result<HarmonicModel> {
        let mut out = self.clone();
        out.require_depth(level)?;
        match &mut out.ladder[level as usize] {
            LevelState::Enumerated(e) => {
                let rec = e
                    .records
                    .get_mut(index)
                    .ok_or(Error::PerturbTarget { level, index })?;
                rec.value = rec.value.add(delta);
            }
            LevelState::Compressed(c) => {
                let (key, mult) = c
                    .classes
                    .iter()
                    .nth(index)
                    .map(|(k, m)| (k.clone(), m.clone()))
                    .ok_or(Error::PerturbTarget { level, index })?;
                if mult == BigUint::one() {
                    c.classes.remove(&key);
                } else {
                    c.classes.insert(key.clone(), mult - BigUint::one());
                }
                let moved = ClassKey {
                    value: key.value.add(delta),
                    parent: key.parent,
                };
                *c.classes.entry(moved).or_insert_with(BigUint::zero) += BigUint::one();
            }
        }
        out.class_views = (0..out.ladder.len()).map(|_| OnceLock::new()).collect();
        Ok(out)
    }
}

/// Linear harmonic function on the 2-regular tree: u = a*j + b on one ray
/// and u = -a*j + b on the other, the general solution for d = 2.
pub fn linear_2reg(
    a: &Scalar,
    b: &Scalar,
    depth: u32,
    repr: Representation,
) -> Result<HarmonicModel> {
    let cfg = TreeConfig::new(2)?;
    let root = RootData::new(cfg, b.clone(), vec![b.add(a), b.sub(a)])?;
    build_model(cfg, root, Splitter::EqualSplit, depth, repr)
}

/// Outcome of a harmonicity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HarmonicityVerdict {
    Pass,
    Fail(HarmonicityFailure),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarmonicityFailure {
    /// Level of the vertex at which the neighbor sum fails.
    pub level: u32,
    /// Offending class: value and parent value (None at the root).
    pub value: String,
    pub parent: Option<String>,
    pub detail: String,
}

impl HarmonicityVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, HarmonicityVerdict::Pass)
    }

    fn fail(level: u32, value: &Scalar, parent: Option<&Scalar>, detail: String) -> Self {
        HarmonicityVerdict::Fail(HarmonicityFailure {
            level,
            value: value.to_string(),
            parent: parent.map(|p| p.to_string()),
            detail,
        })
    }
}

/// Verify u(x) * d = sum of neighbor values at every vertex of levels
/// 0..depth-1, plus parent/child consistency of the ladder. Returns the
/// first offending level and class on failure.
pub fn check_harmonic(model: &HarmonicModel) -> HarmonicityVerdict {
    check_harmonic_with(model, None)
}

/// Like [`check_harmonic`], with an explicit relative tolerance used in
/// float mode (defaults to 1e-12 when `None`).
pub fn check_harmonic_with(model: &HarmonicModel, rel_tol: Option<&Scalar>) -> HarmonicityVerdict {
    let default_tol;
    let tol: Option<&Scalar> = if model.mode().is_exact() {
        None
    } else {
        default_tol = rel_tol
            .cloned()
            .unwrap_or_else(|| Scalar::from_ratio(1, 1_000_000_000_000).to_mode(model.mode()));
        Some(&default_tol)
    };

    for k in 0..model.depth() {
        let verdict = match (&model.ladder[k as usize], &model.ladder[k as usize + 1]) {
            (LevelState::Enumerated(cur), LevelState::Enumerated(next)) => {
                check_level_enumerated(model.cfg, cur, next, tol)
            }
            (LevelState::Compressed(cur), LevelState::Compressed(next)) => {
                check_level_compressed(model, cur, next, tol)
            }
            _ => HarmonicityVerdict::fail(
                k,
                model.root.u0(),
                None,
                "mixed level representations".into(),
            ),
        };
        if !verdict.is_pass() {
            return verdict;
        }
    }
    HarmonicityVerdict::Pass
}

fn sums_match(expected: &Scalar, got: &Scalar, tol: Option<&Scalar>) -> bool {
    match tol {
        None => expected == got,
        Some(tol) => {
            let diff = expected.sub(got).abs();
            let scale = expected.abs().add(&got.abs()).add(&Scalar::one(got.mode()));
            diff.cmp_value(&tol.mul(&scale)) != std::cmp::Ordering::Greater
        }
    }
}

fn check_level_enumerated(
    cfg: TreeConfig,
    cur: &EnumeratedLevel,
    next: &EnumeratedLevel,
    tol: Option<&Scalar>,
) -> HarmonicityVerdict {
    let d = cfg.degree();
    let b = cfg.branching(cur.k) as usize;
    for (j, rec) in cur.records.iter().enumerate() {
        let block = &next.records[j * b..(j + 1) * b];
        let mut sum = match &rec.parent_value {
            Some(p) => p.clone(),
            None => Scalar::zero(rec.value.mode()),
        };
        for child in block {
            if child.parent_value.as_ref() != Some(&rec.value) {
                return HarmonicityVerdict::fail(
                    cur.k,
                    &rec.value,
                    rec.parent_value.as_ref(),
                    "child record carries a different parent value".into(),
                );
            }
            sum = sum.add(&child.value);
        }
        let expected = rec
            .value
            .mul(&Scalar::from_integer(d as i64).to_mode(rec.value.mode()));
        if !sums_match(&expected, &sum, tol) {
            return HarmonicityVerdict::fail(
                cur.k,
                &rec.value,
                rec.parent_value.as_ref(),
                format!("neighbor sum {} != d*u = {}", sum, expected),
            );
        }
    }
    HarmonicityVerdict::Pass
}

fn check_level_compressed(
    model: &HarmonicModel,
    cur: &CompressedLevel,
    next: &CompressedLevel,
    tol: Option<&Scalar>,
) -> HarmonicityVerdict {
    let cfg = model.cfg;
    let d = cfg.degree();

    // Per-class neighbor sums, with children reproduced from the rule that
    // built the ladder (or the root data at level 0).
    for class in cur.classes.keys() {
        let children: Vec<Scalar> = if cur.k == 0 {
            model.root.children().to_vec()
        } else {
            let parent = class.parent.as_ref().expect("non-root class");
            match model.splitter.children(cfg, &class.value, parent) {
                Ok(c) => c,
                Err(e) => {
                    return HarmonicityVerdict::fail(
                        cur.k,
                        &class.value,
                        class.parent.as_ref(),
                        format!("cannot reproduce children: {e}"),
                    )
                }
            }
        };
        let mut sum = match &class.parent {
            Some(p) => p.clone(),
            None => Scalar::zero(class.value.mode()),
        };
        for c in &children {
            sum = sum.add(c);
        }
        let expected = class
            .value
            .mul(&Scalar::from_integer(d as i64).to_mode(class.value.mode()));
        if !sums_match(&expected, &sum, tol) {
            return HarmonicityVerdict::fail(
                cur.k,
                &class.value,
                class.parent.as_ref(),
                format!("neighbor sum {} != d*u = {}", sum, expected),
            );
        }
    }

    // Mass flow: each value v of level k must feed branching(k) * mass(v)
    // vertices at level k+1 whose parent value is v.
    let mut outgoing: BTreeMap<&Scalar, BigUint> = BTreeMap::new();
    for (class, mult) in &cur.classes {
        *outgoing.entry(&class.value).or_insert_with(BigUint::zero) +=
            mult * BigUint::from(cfg.branching(cur.k));
    }
    let mut incoming: BTreeMap<&Scalar, BigUint> = BTreeMap::new();
    for (class, mult) in &next.classes {
        let p = class.parent.as_ref().expect("level >= 1 class");
        *incoming.entry(p).or_insert_with(BigUint::zero) += mult;
    }
    if outgoing != incoming {
        let bad = outgoing
            .iter()
            .find(|(v, m)| incoming.get(*v) != Some(m))
            .map(|(v, _)| (*v).clone())
            .unwrap_or_else(|| model.root.u0().clone());
        return HarmonicityVerdict::fail(
            cur.k,
            &bad,
            None,
            "class mass flow between levels is inconsistent".into(),
        );
    }
    HarmonicityVerdict::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;

    fn s(v: &str) -> Scalar {
        Scalar::from_rational(parse_rational(v).unwrap())
    }

    fn d3() -> TreeConfig {
        TreeConfig::new(3).unwrap()
    }

    fn bounded_root() -> RootData {
        RootData::new(d3(), s("0"), vec![s("1"), s("-1"), s("0")]).unwrap()
    }

    fn needweight_root() -> RootData {
        RootData::new(d3(), s("0"), vec![s("1"), s("-1/2"), s("-1/2")]).unwrap()
    }

    fn double_half_root() -> RootData {
        RootData::new(d3(), s("1"), vec![s("2"), s("1/2"), s("1/2")]).unwrap()
    }

    fn sorted_values(model: &HarmonicModel, k: u32) -> Vec<Scalar> {
        let e = model.level(k).unwrap().as_enumerated().unwrap();
        let mut v: Vec<Scalar> = e.records.iter().map(|r| r.value.clone()).collect();
        v.sort();
        v
    }

    #[test]
    fn root_data_validates_sum_and_arity() {
        assert!(RootData::new(d3(), s("0"), vec![s("1"), s("-1")]).is_err());
        assert!(matches!(
            RootData::new(d3(), s("0"), vec![s("1"), s("-1"), s("1")]),
            Err(Error::RootSumViolation { .. })
        ));
        assert!(RootData::new(d3(), s("1"), vec![s("2"), s("1/2"), s("1/2")]).is_ok());
    }

    #[test]
    fn bounded_example_levels() {
        let model = build_model(
            d3(),
            bounded_root(),
            Splitter::EqualSplit,
            2,
            Representation::Enumerated,
        )
        .unwrap();
        let mut expected = vec![s("3/2"), s("3/2"), s("-3/2"), s("-3/2"), s("0"), s("0")];
        expected.sort();
        assert_eq!(sorted_values(&model, 2), expected);
    }

    #[test]
    fn needweight_example_levels() {
        let model = build_model(
            d3(),
            needweight_root(),
            Splitter::EqualSplit,
            2,
            Representation::Enumerated,
        )
        .unwrap();
        let mut expected = vec![
            s("3/2"),
            s("3/2"),
            s("-3/4"),
            s("-3/4"),
            s("-3/4"),
            s("-3/4"),
        ];
        expected.sort();
        assert_eq!(sorted_values(&model, 2), expected);
    }

    #[test]
    fn depth_zero_ladder_has_only_root() {
        let model = build_model(
            d3(),
            bounded_root(),
            Splitter::EqualSplit,
            0,
            Representation::Enumerated,
        )
        .unwrap();
        assert_eq!(model.depth(), 0);
        assert_eq!(model.level(0).unwrap().vertex_count(), BigUint::one());
        assert!(model.level(1).is_err());
    }

    #[test]
    fn harmonicity_passes_on_builtins() {
        for (root, splitter) in [
            (bounded_root(), Splitter::EqualSplit),
            (needweight_root(), Splitter::EqualSplit),
            (double_half_root(), Splitter::DoubleHalf),
        ] {
            for repr in [Representation::Enumerated, Representation::Compressed] {
                let model = build_model(d3(), root.clone(), splitter.clone(), 5, repr).unwrap();
                assert!(
                    check_harmonic(&model).is_pass(),
                    "{:?} {:?}",
                    splitter,
                    repr
                );
            }
        }
    }

    #[test]
    fn perturbed_model_fails_at_parent_level() {
        let model = build_model(
            d3(),
            bounded_root(),
            Splitter::EqualSplit,
            3,
            Representation::Enumerated,
        )
        .unwrap();
        let broken = model.perturbed(1, 0, &s("1")).unwrap();
        match check_harmonic(&broken) {
            HarmonicityVerdict::Fail(f) => assert_eq!(f.level, 0),
            HarmonicityVerdict::Pass => panic!("perturbation must break harmonicity"),
        }
        // compressed perturbation breaks too
        let cmodel = build_model(
            d3(),
            bounded_root(),
            Splitter::EqualSplit,
            3,
            Representation::Compressed,
        )
        .unwrap();
        let broken = cmodel.perturbed(1, 0, &s("1")).unwrap();
        assert!(!check_harmonic(&broken).is_pass());
    }

    #[test]
    fn double_half_children_follow_figure() {
        let model = build_model(
            d3(),
            double_half_root(),
            Splitter::DoubleHalf,
            2,
            Representation::Enumerated,
        )
        .unwrap();
        let mut expected = vec![s("4"), s("1"), s("1/4"), s("1/4"), s("1/4"), s("1/4")];
        expected.sort();
        assert_eq!(sorted_values(&model, 2), expected);
    }

    #[test]
    fn linear_2reg_values() {
        let model = linear_2reg(&s("1"), &s("0"), 3, Representation::Enumerated).unwrap();
        assert_eq!(sorted_values(&model, 3), vec![s("-3"), s("3")]);
        let constant = linear_2reg(&s("0"), &s("5"), 4, Representation::Enumerated).unwrap();
        assert_eq!(sorted_values(&constant, 4), vec![s("5"), s("5")]);
        let general = linear_2reg(&s("2"), &s("1"), 2, Representation::Enumerated).unwrap();
        assert_eq!(sorted_values(&general, 2), vec![s("-3"), s("5")]);
        // increments: u(j) - u(j+1) constant along each ray
        let m = linear_2reg(&s("3"), &s("-2"), 6, Representation::Enumerated).unwrap();
        for k in 1..6u32 {
            let cur = m.level(k).unwrap().as_enumerated().unwrap();
            let next = m.level(k + 1).unwrap().as_enumerated().unwrap();
            for (r0, r1) in cur.records.iter().zip(&next.records) {
                assert_eq!(r0.value.sub(&r1.value).abs(), s("3"));
            }
        }
    }

    #[test]
    fn compress_groups_classes() {
        let model = build_model(
            d3(),
            bounded_root(),
            Splitter::EqualSplit,
            2,
            Representation::Enumerated,
        )
        .unwrap();
        let level2 = model.level(2).unwrap().as_enumerated().unwrap();
        let c = compress(level2);
        let expected: BTreeMap<ClassKey, BigUint> = [
            (s("3/2"), s("1"), 2u32),
            (s("-3/2"), s("-1"), 2),
            (s("0"), s("0"), 2),
        ]
        .into_iter()
        .map(|(v, p, m)| {
            (
                ClassKey {
                    value: v,
                    parent: Some(p),
                },
                BigUint::from(m),
            )
        })
        .collect();
        assert_eq!(c.classes, expected);
        assert!(states_equivalent(level2, &c));
    }

    #[test]
    fn sibling_blocks_group_children_by_parent() {
        let model = build_model(
            d3(),
            bounded_root(),
            Splitter::EqualSplit,
            3,
            Representation::Enumerated,
        )
        .unwrap();
        let level1 = model.level(1).unwrap().as_enumerated().unwrap();
        let level3 = model.level(3).unwrap().as_enumerated().unwrap();
        // all root children share block 0; deeper blocks are parent indices
        for i in 0..level1.records.len() {
            assert_eq!(level1.sibling_block_id(d3(), i), 0);
        }
        let level2 = model.level(2).unwrap().as_enumerated().unwrap();
        for (i, rec) in level3.records.iter().enumerate() {
            let block = level3.sibling_block_id(d3(), i);
            assert_eq!(
                rec.parent_value.as_ref(),
                Some(&level2.records[block].value)
            );
        }
    }

    #[test]
    fn float_mode_model_checks_within_tolerance() {
        let mode = crate::scalar::ScalarMode::float_default();
        let root = double_half_root().to_mode(mode);
        let model = build_model(
            d3(),
            root,
            Splitter::DoubleHalf,
            8,
            Representation::Compressed,
        )
        .unwrap();
        assert!(check_harmonic(&model).is_pass());
        let broken = model.perturbed(2, 0, &s("1").to_mode(mode)).unwrap();
        assert!(!check_harmonic(&broken).is_pass());
    }

    #[test]
    fn compress_all_distinct_values() {
        let level = EnumeratedLevel {
            k: 1,
            records: vec![
                VertexRecord {
                    value: s("1"),
                    parent_value: Some(s("0")),
                },
                VertexRecord {
                    value: s("2"),
                    parent_value: Some(s("0")),
                },
                VertexRecord {
                    value: s("-3"),
                    parent_value: Some(s("0")),
                },
            ],
        };
        let c = compress(&level);
        assert_eq!(c.classes.len(), 3);
        assert!(c.classes.values().all(|m| *m == BigUint::one()));
    }

    #[test]
    fn double_half_class_count_grows_linearly() {
        let model = build_model(
            d3(),
            double_half_root(),
            Splitter::DoubleHalf,
            12,
            Representation::Compressed,
        )
        .unwrap();
        for l in 1..=12u32 {
            let classes = model.classes(l).unwrap();
            assert!(
                classes.classes.len() <= 2 * l as usize + 1,
                "level {l}: {} classes",
                classes.classes.len()
            );
            let count = classes.vertex_count();
            let expected = if l == 0 {
                BigUint::one()
            } else {
                BigUint::from(3u32) * BigUint::from(2u32).pow(l - 1)
            };
            assert_eq!(count, expected);
        }
    }

    #[test]
    fn random_model_satisfies_constraints_in_both_representations() {
        for d in [2u32, 3, 4, 5, 6] {
            let cfg = TreeConfig::new(d).unwrap();
            let root = RootData::random(cfg, 42, 9, 4);
            for repr in [Representation::Enumerated, Representation::Compressed] {
                let model = build_model(cfg, root.clone(), Splitter::random(42), 6, repr).unwrap();
                assert!(check_harmonic(&model).is_pass(), "d={d} {repr:?}");
            }
        }
    }

    #[test]
    fn compress_commutes_with_extend() {
        for (root, splitter) in [
            (needweight_root(), Splitter::EqualSplit),
            (double_half_root(), Splitter::DoubleHalf),
            (RootData::random(d3(), 7, 9, 4), Splitter::random(7)),
        ] {
            let e = build_model(
                d3(),
                root.clone(),
                splitter.clone(),
                8,
                Representation::Enumerated,
            )
            .unwrap();
            let c = build_model(d3(), root, splitter, 8, Representation::Compressed).unwrap();
            for k in 0..=8u32 {
                let from_enum = compress(e.level(k).unwrap().as_enumerated().unwrap());
                let direct = c.level(k).unwrap().as_compressed().unwrap();
                assert_eq!(&from_enum, direct, "level {k}");
            }
        }
    }

    #[test]
    fn custom_splitter_enumerated_only() {
        let rule: crate::splitter::CustomRule =
            std::sync::Arc::new(|addr: &VertexAddress, value: &Scalar, parent: &Scalar| {
                // Alternate the imbalance by address parity; still harmonic.
                let sum = value.mul(&Scalar::from_integer(3)).sub(parent);
                let half = sum.div(&Scalar::from_integer(2));
                let eps = if addr.path().iter().sum::<u32>() % 2 == 0 {
                    Scalar::from_integer(1)
                } else {
                    Scalar::from_integer(-1)
                };
                vec![half.add(&eps), half.sub(&eps)]
            });
        let model = build_model(
            d3(),
            bounded_root(),
            Splitter::Custom(rule.clone()),
            4,
            Representation::Enumerated,
        )
        .unwrap();
        assert!(check_harmonic(&model).is_pass());
        assert!(matches!(
            build_model(
                d3(),
                bounded_root(),
                Splitter::Custom(rule),
                4,
                Representation::Compressed
            ),
            Err(Error::CustomSplitterNotCompressible)
        ));
    }

    #[test]
    fn address_from_index_roundtrip() {
        let cfg = d3();
        for k in 0..4u32 {
            let size = cfg.level_size(k).to_u64().unwrap() as usize;
            let mut seen = std::collections::BTreeSet::new();
            for i in 0..size {
                let addr = address_from_index(cfg, k, i);
                assert_eq!(addr.level(), k);
                seen.insert(addr);
            }
            assert_eq!(seen.len(), size);
        }
    }

    #[test]
    fn splitter_violation_detected() {
        let mut table = BTreeMap::new();
        // wrong sum: children must total 3*1 - 0 = 3
        table.insert((s("1"), s("0")), vec![s("1"), s("1")]);
        table.insert((s("-1/2"), s("0")), vec![s("-3/4"), s("-3/4")]);
        let err = build_model(
            d3(),
            needweight_root(),
            Splitter::Table(table),
            2,
            Representation::Enumerated,
        );
        assert!(matches!(err, Err(Error::SplitterViolatesSum { .. })));
    }
}
