//! Level aggregates and the three monotone functionals.
//!
//! For a model of degree d and exponent p:
//!
//! * `D_k` -- edge energy between V_k and V_{k+1}: sum of |u(y)-u(z)|^p over
//!   those edges (all d root edges belong to D_0).
//! * `H_k` -- sum of |u(y)|^p over V_k.
//! * `C_k` -- sum of u(v)u(v_p) over V_k (k >= 1, p = 2).
//! * `R_k` -- sum of squared sibling differences under each V_k vertex.
//! * `N_k` -- H_{k+1} - (d-1)H_k, the unnormalized frequency increment.
//!
//! The functionals: the weighted Dirichlet energy G(k), its per-level form
//! F(l), the Weiss functionals W (d >= 3) and W_2 (d = 2), and the Almgren
//! frequency N(k) = H_{k+1}/(d-1) - H_k.

use crate::error::{Error, Result};
use crate::model::HarmonicModel;
use crate::scalar::{Exponent, Scalar, ScalarMode};
use num_rational::BigRational;
use num_traits::One;
use std::cmp::Ordering;

/// All level-k aggregate values for one exponent.
#[derive(Debug, Clone)]
pub struct LevelAggregates {
    pub k: u32,
    pub p: Exponent,
    pub d_k: Scalar,
    pub h_k: Scalar,
    /// Cross term, present for k >= 1 in the p = 2 context.
    pub c_k: Option<Scalar>,
    /// Sibling excess, present for k >= 1 in the p = 2 context.
    pub r_k: Option<Scalar>,
    /// H_{k+1} - (d-1) H_k.
    pub n_k: Scalar,
}

/// Reject non-integer exponents early when the model is exact.
fn check_exponent(model: &HarmonicModel, p: &Exponent) -> Result<()> {
    if model.mode().is_exact() && !p.is_integer() {
        return Err(Error::NonIntegerExponent(p.to_string()));
    }
    Ok(())
}

fn int_scalar(model: &HarmonicModel, v: i64) -> Scalar {
    Scalar::from_integer(v).to_mode(model.mode())
}

/// H_k: sum of |u|^p over level k. Memoized per (p, k).
pub(crate) fn vertex_power_sum(model: &HarmonicModel, p: &Exponent, k: u32) -> Result<Scalar> {
    if let Some(cached) = model.cached_vertex_sum(p.value(), k) {
        return Ok(cached);
    }
    let classes = model.classes(k)?;
    let mut sum = Scalar::zero(model.mode());
    for (class, mult) in &classes.classes {
        sum = sum.add(&class.value.abs_pow(p)?.mul_nat(mult));
    }
    model.store_vertex_sum(p.value(), k, &sum);
    Ok(sum)
}

/// D_k: sum of |u(child) - u(parent)|^p over edges from V_k to V_{k+1},
/// read off the level k+1 classes. Memoized per (p, k).
pub(crate) fn edge_energy(model: &HarmonicModel, p: &Exponent, k: u32) -> Result<Scalar> {
    if let Some(cached) = model.cached_edge_sum(p.value(), k) {
        return Ok(cached);
    }
    let classes = model.classes(k + 1)?;
    let mut sum = Scalar::zero(model.mode());
    for (class, mult) in &classes.classes {
        let parent = class.parent.as_ref().expect("level >= 1 has parents");
        let grad = class.value.sub(parent);
        sum = sum.add(&grad.abs_pow(p)?.mul_nat(mult));
    }
    model.store_edge_sum(p.value(), k, &sum);
    Ok(sum)
}

/// C_k: sum of u(v) u(v_p) over V_k, k >= 1.
pub(crate) fn cross_term(model: &HarmonicModel, k: u32) -> Result<Scalar> {
    debug_assert!(k >= 1);
    let classes = model.classes(k)?;
    let mut sum = Scalar::zero(model.mode());
    for (class, mult) in &classes.classes {
        let parent = class.parent.as_ref().expect("level >= 1 has parents");
        sum = sum.add(&class.value.mul(parent).mul_nat(mult));
    }
    Ok(sum)
}

/// R_k: sum over v in V_k of the squared pairwise differences of v's
/// children values, k >= 1.
pub(crate) fn sibling_excess(model: &HarmonicModel, k: u32) -> Result<Scalar> {
    debug_assert!(k >= 1);
    model.require_depth(k + 1)?;
    let mut sum = Scalar::zero(model.mode());
    if model.splitter().is_value_homogeneous() {
        let classes = model.classes(k)?;
        for (class, mult) in &classes.classes {
            let parent = class.parent.as_ref().expect("level >= 1 has parents");
            let children = model
                .splitter()
                .children(model.cfg(), &class.value, parent)?;
            sum = sum.add(&pair_diff_squares(&children).mul_nat(mult));
        }
        return Ok(sum);
    }
    // Address-dependent rule: group the stored next level by sibling blocks.
    let next = model
        .level(k + 1)?
        .as_enumerated()
        .expect("custom splitters are enumerated");
    let b = (model.degree() - 1) as usize;
    for block in next.records.chunks(b) {
        let values: Vec<Scalar> = block.iter().map(|r| r.value.clone()).collect();
        sum = sum.add(&pair_diff_squares(&values));
    }
    Ok(sum)
}

fn pair_diff_squares(values: &[Scalar]) -> Scalar {
    let mut sum = values
        .first()
        .map(|v| Scalar::zero(v.mode()))
        .unwrap_or_else(|| Scalar::from_integer(0));
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let diff = values[i].sub(&values[j]);
            sum = sum.add(&diff.mul(&diff));
        }
    }
    sum
}

/// All aggregates at level k. Needs model depth >= k+1 (for D_k and N_k).
pub fn aggregates(model: &HarmonicModel, p: &Exponent, k: u32) -> Result<LevelAggregates> {
    check_exponent(model, p)?;
    model.require_depth(k + 1)?;
    let d = model.degree();
    let d_k = edge_energy(model, p, k)?;
    let h_k = vertex_power_sum(model, p, k)?;
    let h_next = vertex_power_sum(model, p, k + 1)?;
    let n_k = h_next.sub(&h_k.mul(&int_scalar(model, (d - 1) as i64)));
    let p_is_two = p.as_u32() == Some(2);
    let c_k = if p_is_two && k >= 1 {
        Some(cross_term(model, k)?)
    } else {
        None
    };
    let r_k = if p_is_two && k >= 1 {
        Some(sibling_excess(model, k)?)
    } else {
        None
    };
    Ok(LevelAggregates {
        k,
        p: p.clone(),
        d_k,
        h_k,
        c_k,
        r_k,
        n_k,
    })
}

/// The per-level weight step (d-1)^(p-1).
fn weight_step(model: &HarmonicModel, p: &Exponent) -> Result<Scalar> {
    let pm1 = p.value() - BigRational::one();
    let base = int_scalar(model, (model.degree() - 1) as i64);
    match model.mode() {
        ScalarMode::Exact => {
            if !pm1.is_integer() {
                return Err(Error::NonIntegerExponent(p.to_string()));
            }
            let e = pm1
                .numer()
                .try_into()
                .map_err(|_| Error::ExponentOutOfRange(p.to_string()))?;
            Ok(base.pow_int(e))
        }
        ScalarMode::Float { .. } => match &base {
            Scalar::Float(f) => Ok(Scalar::Float(std::sync::Arc::new(f.pow_abs(&pm1)))),
            Scalar::Exact(_) => unreachable!("int_scalar honors the model mode"),
        },
    }
}

/// F(l) = (d-1)^((p-1) l) * D_l, the single-level weighted edge energy.
pub fn f_level(model: &HarmonicModel, p: &Exponent, l: u32) -> Result<Scalar> {
    check_exponent(model, p)?;
    model.require_depth(l + 1)?;
    let step = weight_step(model, p)?;
    let weight = step.pow_int(l);
    Ok(weight.mul(&edge_energy(model, p, l)?))
}

/// G(k) = (1/k) * sum of F(l) for l < k. Monotone non-decreasing in k for
/// harmonic input.
pub fn dirichlet_g(model: &HarmonicModel, p: &Exponent, k: u32) -> Result<Scalar> {
    if k < 1 {
        return Err(Error::OracleIndexOutOfRange {
            name: "G".into(),
            constraint: "k >= 1".into(),
            k,
        });
    }
    check_exponent(model, p)?;
    model.require_depth(k)?;
    let step = weight_step(model, p)?;
    let mut weight = Scalar::one(model.mode());
    let mut sum = Scalar::zero(model.mode());
    for l in 0..k {
        sum = sum.add(&weight.mul(&edge_energy(model, p, l)?));
        weight = weight.mul(&step);
    }
    Ok(sum.div(&int_scalar(model, k as i64)))
}

/// W(k) for d >= 3: weighted cumulative energy minus the scaled boundary
/// term (p = 2).
pub fn weiss_w(model: &HarmonicModel, k: u32) -> Result<Scalar> {
    let d = model.degree();
    if d < 3 {
        return Err(Error::WrongDegree {
            expected: ">=3 (use the 2-regular Weiss functional)".into(),
            found: d,
        });
    }
    if k < 1 {
        return Err(Error::OracleIndexOutOfRange {
            name: "W".into(),
            constraint: "k >= 1".into(),
            k,
        });
    }
    model.require_depth(k)?;
    let p2 = Exponent::integer(2);
    let dm1 = int_scalar(model, (d - 1) as i64);
    let mut weight = Scalar::one(model.mode());
    let mut sum = Scalar::zero(model.mode());
    for j in 0..k {
        sum = sum.add(&weight.mul(&edge_energy(model, &p2, j)?));
        weight = weight.mul(&dm1);
    }
    let h_k = vertex_power_sum(model, &p2, k)?;
    // (d-2)/2 * H_k / (d-1)^(k-1)
    let scale = int_scalar(model, (d - 2) as i64)
        .div(&int_scalar(model, 2))
        .div(&dm1.pow_int(k - 1));
    Ok(sum.sub(&scale.mul(&h_k)))
}

/// W(k) for d = 2: (1/k) * cumulative energy - H_k / (2 k^2).
pub fn weiss_w2(model: &HarmonicModel, k: u32) -> Result<Scalar> {
    let d = model.degree();
    if d != 2 {
        return Err(Error::WrongDegree {
            expected: "2".into(),
            found: d,
        });
    }
    if k < 1 {
        return Err(Error::OracleIndexOutOfRange {
            name: "W2".into(),
            constraint: "k >= 1".into(),
            k,
        });
    }
    model.require_depth(k)?;
    let p2 = Exponent::integer(2);
    let mut sum = Scalar::zero(model.mode());
    for j in 0..k {
        sum = sum.add(&edge_energy(model, &p2, j)?);
    }
    let h_k = vertex_power_sum(model, &p2, k)?;
    let kk = int_scalar(model, k as i64);
    Ok(sum
        .div(&kk)
        .sub(&h_k.div(&kk.mul(&kk).mul(&int_scalar(model, 2)))))
}

/// Almgren frequency N(k) = H_{k+1}/(d-1) - H_k, k >= 0.
pub fn almgren_n(model: &HarmonicModel, p: &Exponent, k: u32) -> Result<Scalar> {
    check_exponent(model, p)?;
    model.require_depth(k + 1)?;
    let d = model.degree();
    let h_next = vertex_power_sum(model, p, k + 1)?;
    let h_k = vertex_power_sum(model, p, k)?;
    Ok(h_next.div(&int_scalar(model, (d - 1) as i64)).sub(&h_k))
}

/// Which functional a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    DirichletG,
    LevelEnergyF,
    Weiss,
    Weiss2,
    AlmgrenN,
}

impl FunctionalKind {
    pub fn label(&self) -> &'static str {
        match self {
            FunctionalKind::DirichletG => "G",
            FunctionalKind::LevelEnergyF => "F",
            FunctionalKind::Weiss => "W",
            FunctionalKind::Weiss2 => "W2",
            FunctionalKind::AlmgrenN => "N",
        }
    }
}

/// Monotonicity verdict over a series, exact in exact mode, tolerance-gated
/// in float mode.
#[derive(Debug, Clone)]
pub struct MonotonicityVerdict {
    pub non_decreasing: bool,
    pub strictly_increasing: bool,
    /// Index (in the series' own indexing) and deficit of the first
    /// violation.
    pub first_violation: Option<(u32, Scalar)>,
    /// True when the verdict was gated by a float tolerance rather than
    /// exact comparison.
    pub float_verified: bool,
}

/// An indexed sequence of functional values with its monotonicity verdict.
#[derive(Debug, Clone)]
pub struct FunctionalSeries {
    pub kind: FunctionalKind,
    pub p: Exponent,
    pub start_index: u32,
    pub values: Vec<Scalar>,
    pub verdict: MonotonicityVerdict,
}

impl FunctionalSeries {
    pub fn index_of(&self, offset: usize) -> u32 {
        self.start_index + offset as u32
    }

    pub fn value_at(&self, index: u32) -> Option<&Scalar> {
        index
            .checked_sub(self.start_index)
            .and_then(|off| self.values.get(off as usize))
    }
}

/// Default relative tolerance for float-mode monotonicity verdicts.
fn default_rel_tol(mode: ScalarMode) -> Scalar {
    Scalar::from_ratio(1, 1_000_000_000_000).to_mode(mode)
}

/// Check that a series is non-decreasing. Float values pass a step when the
/// deficit is within `rel_tol * max(|prev|, |cur|)`.
pub fn monotonicity_report(
    values: &[Scalar],
    start_index: u32,
    rel_tol: Option<&Scalar>,
) -> MonotonicityVerdict {
    let float_mode = values.iter().any(|v| !v.mode().is_exact());
    let tol_storage;
    let tol: Option<&Scalar> = if float_mode {
        tol_storage = rel_tol
            .cloned()
            .unwrap_or_else(|| default_rel_tol(values[0].mode()));
        Some(&tol_storage)
    } else {
        None
    };

    let mut strictly = true;
    for (i, pair) in values.windows(2).enumerate() {
        let (prev, cur) = (&pair[0], &pair[1]);
        match cur.cmp_value(prev) {
            Ordering::Greater => {}
            Ordering::Equal => strictly = false,
            Ordering::Less => {
                let deficit = prev.sub(cur);
                let tolerated = match tol {
                    None => false,
                    Some(t) => {
                        let scale = if prev.abs().cmp_value(&cur.abs()) == Ordering::Less {
                            cur.abs()
                        } else {
                            prev.abs()
                        };
                        deficit.cmp_value(&t.mul(&scale)) != Ordering::Greater
                    }
                };
                if tolerated {
                    strictly = false;
                } else {
                    return MonotonicityVerdict {
                        non_decreasing: false,
                        strictly_increasing: false,
                        first_violation: Some((start_index + i as u32 + 1, deficit)),
                        float_verified: float_mode,
                    };
                }
            }
        }
    }
    MonotonicityVerdict {
        non_decreasing: true,
        strictly_increasing: strictly && values.len() >= 2,
        first_violation: None,
        float_verified: float_mode,
    }
}

fn make_series(
    kind: FunctionalKind,
    p: &Exponent,
    start_index: u32,
    values: Vec<Scalar>,
) -> FunctionalSeries {
    let verdict = monotonicity_report(&values, start_index, None);
    FunctionalSeries {
        kind,
        p: p.clone(),
        start_index,
        values,
        verdict,
    }
}

/// G(k) for k = 1..=k_max (depth k_max required).
pub fn dirichlet_g_series(
    model: &HarmonicModel,
    p: &Exponent,
    k_max: u32,
) -> Result<FunctionalSeries> {
    check_exponent(model, p)?;
    model.require_depth(k_max)?;
    let step = weight_step(model, p)?;
    let mut weight = Scalar::one(model.mode());
    let mut sum = Scalar::zero(model.mode());
    let mut values = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        sum = sum.add(&weight.mul(&edge_energy(model, p, k - 1)?));
        weight = weight.mul(&step);
        values.push(sum.div(&int_scalar(model, k as i64)));
    }
    Ok(make_series(FunctionalKind::DirichletG, p, 1, values))
}

/// F(l) for l = 0..=l_max (depth l_max + 1 required).
pub fn f_series(model: &HarmonicModel, p: &Exponent, l_max: u32) -> Result<FunctionalSeries> {
    check_exponent(model, p)?;
    model.require_depth(l_max + 1)?;
    let step = weight_step(model, p)?;
    let mut weight = Scalar::one(model.mode());
    let mut values = Vec::with_capacity(l_max as usize + 1);
    for l in 0..=l_max {
        values.push(weight.mul(&edge_energy(model, p, l)?));
        weight = weight.mul(&step);
    }
    Ok(make_series(FunctionalKind::LevelEnergyF, p, 0, values))
}

/// The Weiss series for k = 1..=k_max; picks W (d >= 3) or W_2 (d = 2) by
/// the model's degree.
pub fn weiss_series(model: &HarmonicModel, k_max: u32) -> Result<FunctionalSeries> {
    model.require_depth(k_max)?;
    let p2 = Exponent::integer(2);
    let d = model.degree();
    let kind = if d == 2 {
        FunctionalKind::Weiss2
    } else {
        FunctionalKind::Weiss
    };
    let dm1 = int_scalar(model, (d - 1) as i64);
    let two = int_scalar(model, 2);
    let mut weight = Scalar::one(model.mode());
    let mut sum = Scalar::zero(model.mode());
    let mut values = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        sum = sum.add(&weight.mul(&edge_energy(model, &p2, k - 1)?));
        if d >= 3 {
            weight = weight.mul(&dm1);
        }
        let h_k = vertex_power_sum(model, &p2, k)?;
        let value = if d == 2 {
            let kk = int_scalar(model, k as i64);
            sum.div(&kk).sub(&h_k.div(&kk.mul(&kk).mul(&two)))
        } else {
            let scale = int_scalar(model, (d - 2) as i64)
                .div(&two)
                .div(&dm1.pow_int(k - 1));
            sum.sub(&scale.mul(&h_k))
        };
        values.push(value);
    }
    Ok(make_series(kind, &p2, 1, values))
}

/// N(k) for k = 0..=k_max (depth k_max + 1 required).
pub fn almgren_series(model: &HarmonicModel, p: &Exponent, k_max: u32) -> Result<FunctionalSeries> {
    check_exponent(model, p)?;
    model.require_depth(k_max + 1)?;
    let d = model.degree();
    let dm1 = int_scalar(model, (d - 1) as i64);
    let mut h_prev = vertex_power_sum(model, p, 0)?;
    let mut values = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let h_next = vertex_power_sum(model, p, k + 1)?;
        values.push(h_next.div(&dm1).sub(&h_prev));
        h_prev = h_next;
    }
    Ok(make_series(FunctionalKind::AlmgrenN, p, 0, values))
}
