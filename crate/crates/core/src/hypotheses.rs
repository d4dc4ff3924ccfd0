//! Binary hypotheses in rule form, probability-thresholded projections,
//! and the risk/distance calculus connecting them.
//!
//! A hypothesis is a total map `X -> {0, 1}` stored as a default label plus
//! a finite exception map, so hypotheses over implicit supports (2^90+
//! symbols) stay representable. A projection zeroes a hypothesis outside the
//! high-probability set `{x : p(x) >= alpha}`, shrinking the effective class
//! to the labelings of that set.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::dist::{Dataset, JointPmf, Pmf, Symbol};
use crate::error::{Error, Result};
use crate::log2::kahan_sum;

/// Largest high-probability set a default-1 hypothesis is re-enumerated over
/// when projecting; beyond this the rule form cannot express the result.
pub const PROJECTION_ENUMERATION_CAP: u128 = 1 << 20;

/// Total binary labeling in rule form: `default` everywhere except a finite
/// exception map (entries always differ from the default).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Hypothesis {
    exceptions: BTreeMap<Symbol, u8>,
    default: u8,
}

impl Hypothesis {
    pub fn constant(label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::NonBinaryLabel {
                label: label as u64,
            });
        }
        Ok(Self {
            exceptions: BTreeMap::new(),
            default: label,
        })
    }

    pub fn from_exceptions(exceptions: BTreeMap<Symbol, u8>, default: u8) -> Result<Self> {
        if default > 1 {
            return Err(Error::NonBinaryLabel {
                label: default as u64,
            });
        }
        for (_, &y) in &exceptions {
            if y > 1 {
                return Err(Error::NonBinaryLabel { label: y as u64 });
            }
        }
        let normalized = exceptions
            .into_iter()
            .filter(|&(_, y)| y != default)
            .collect();
        Ok(Self {
            exceptions: normalized,
            default,
        })
    }

    /// Dense labeling of `0..labels.len()` with default 0 elsewhere.
    pub fn from_labels(labels: &[u8]) -> Result<Self> {
        let mut exceptions = BTreeMap::new();
        for (x, &y) in labels.iter().enumerate() {
            if y > 1 {
                return Err(Error::NonBinaryLabel { label: y as u64 });
            }
            if y == 1 {
                exceptions.insert(x as Symbol, 1);
            }
        }
        Ok(Self {
            exceptions,
            default: 0,
        })
    }

    /// Labeling of `0..support` read off the low bits of `mask`.
    pub fn from_mask(mask: u64, support: usize) -> Self {
        let exceptions = (0..support)
            .filter(|&x| (mask >> x) & 1 == 1)
            .map(|x| (x as Symbol, 1))
            .collect();
        Self {
            exceptions,
            default: 0,
        }
    }

    pub fn eval(&self, x: Symbol) -> u8 {
        *self.exceptions.get(&x).unwrap_or(&self.default)
    }

    pub fn default_label(&self) -> u8 {
        self.default
    }

    pub fn exceptions(&self) -> &BTreeMap<Symbol, u8> {
        &self.exceptions
    }

    /// JSON form `{"exceptions": {"x": label, ...}, "default": 0|1}`; symbol
    /// keys are decimal strings because they may exceed 64 bits.
    pub fn to_json_value(&self) -> Value {
        json!({
            "exceptions": self
                .exceptions
                .iter()
                .map(|(x, &y)| (x.to_string(), json!(y)))
                .collect::<serde_json::Map<String, Value>>(),
            "default": self.default,
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let default = v
            .get("default")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Config("hypothesis json missing \"default\"".into()))?;
        if default > 1 {
            return Err(Error::NonBinaryLabel { label: default });
        }
        let obj = v
            .get("exceptions")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Config("hypothesis json missing \"exceptions\"".into()))?;
        let mut exceptions = BTreeMap::new();
        for (key, label_val) in obj {
            let x: Symbol = key
                .parse()
                .map_err(|_| Error::Config(format!("invalid symbol key {key:?}")))?;
            let label = label_val
                .as_u64()
                .ok_or_else(|| Error::Config("exception labels must be integers".into()))?;
            if label > 1 {
                return Err(Error::NonBinaryLabel { label });
            }
            exceptions.insert(x, label as u8);
        }
        Self::from_exceptions(exceptions, default as u8)
    }
}

/// Symbols at or above the probability threshold, stored explicitly or as
/// contiguous ranges when the source pmf is implicit.
#[derive(Debug, Clone, PartialEq)]
pub enum HighSet {
    Explicit(Vec<Symbol>),
    /// Half-open `[start, end)` ranges, ascending and disjoint.
    Ranges(Vec<(Symbol, Symbol)>),
}

/// The high-probability set of a pmf at threshold `alpha`, with enough
/// bookkeeping to project hypotheses and size the induced class.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSpec {
    log2_alpha: f64,
    high: HighSet,
    count: u128,
    support: u128,
}

impl ProjectionSpec {
    pub fn log2_alpha(&self) -> f64 {
        self.log2_alpha
    }

    pub fn alpha(&self) -> f64 {
        self.log2_alpha.exp2()
    }

    pub fn count(&self) -> u128 {
        self.count
    }

    pub fn high(&self) -> &HighSet {
        &self.high
    }

    /// log2 of the number of distinct projected hypotheses: every binary
    /// labeling of the high-probability set, zero elsewhere.
    pub fn log2_class_size(&self) -> f64 {
        self.count as f64
    }

    pub fn contains(&self, x: Symbol) -> bool {
        match &self.high {
            HighSet::Explicit(v) => v.binary_search(&x).is_ok(),
            HighSet::Ranges(ranges) => ranges.iter().any(|&(s, e)| x >= s && x < e),
        }
    }

    fn covers_full_support(&self) -> bool {
        self.count == self.support
    }
}

/// High-probability set `{x : p(x) >= alpha}` for `alpha` in (0, 1].
pub fn high_prob_set(p: &Pmf, alpha: f64) -> Result<ProjectionSpec> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::ParamOutOfRange {
            name: "alpha",
            value: alpha,
            expected: "(0, 1]",
        });
    }
    high_prob_set_log2(p, alpha.log2())
}

/// Log2-domain variant for thresholds far below double underflow.
pub fn high_prob_set_log2(p: &Pmf, log2_alpha: f64) -> Result<ProjectionSpec> {
    if !(log2_alpha <= 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "log2_alpha",
            value: log2_alpha,
            expected: "<= 0",
        });
    }
    if let Some(table) = p.dense() {
        let high: Vec<Symbol> = table
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v > 0.0 && v.log2() >= log2_alpha)
            .map(|(x, _)| x as Symbol)
            .collect();
        let count = high.len() as u128;
        Ok(ProjectionSpec {
            log2_alpha,
            high: HighSet::Explicit(high),
            count,
            support: p.support_size(),
        })
    } else {
        let levels = p.levels().expect("pmf is dense or leveled");
        let mut ranges = Vec::new();
        let mut count: u128 = 0;
        let mut start: u128 = 0;
        for lv in levels {
            let end = start + lv.count;
            if lv.log2_prob >= log2_alpha {
                count += lv.count;
                match ranges.last_mut() {
                    Some((_, prev_end)) if *prev_end == start => *prev_end = end,
                    _ => ranges.push((start, end)),
                }
            }
            start = end;
        }
        Ok(ProjectionSpec {
            log2_alpha,
            high: HighSet::Ranges(ranges),
            count,
            support: p.support_size(),
        })
    }
}

/// Zeroes `h` outside the high-probability set: the projected hypothesis
/// agrees with `h` on the set and returns 0 elsewhere.
pub fn project(h: &Hypothesis, spec: &ProjectionSpec) -> Result<Hypothesis> {
    match &spec.high {
        HighSet::Explicit(high) => {
            let exceptions = high
                .iter()
                .filter(|&&x| h.eval(x) == 1)
                .map(|&x| (x, 1))
                .collect();
            Hypothesis::from_exceptions(exceptions, 0)
        }
        HighSet::Ranges(ranges) => {
            if h.default == 0 {
                let exceptions = h
                    .exceptions
                    .iter()
                    .filter(|&(&x, _)| spec.contains(x))
                    .map(|(&x, &y)| (x, y))
                    .collect();
                return Hypothesis::from_exceptions(exceptions, 0);
            }
            if spec.covers_full_support() {
                return Ok(h.clone());
            }
            if spec.count <= PROJECTION_ENUMERATION_CAP {
                let exceptions = ranges
                    .iter()
                    .flat_map(|&(s, e)| s..e)
                    .filter(|&x| h.eval(x) == 1)
                    .map(|x| (x, 1))
                    .collect();
                return Hypothesis::from_exceptions(exceptions, 0);
            }
            Err(Error::ProjectionNotRepresentable { count: spec.count })
        }
    }
}

/// Mass of symbols strictly below the threshold: `Pr{p(x) < alpha}`.
pub fn tail_mass(p: &Pmf, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::ParamOutOfRange {
            name: "alpha",
            value: alpha,
            expected: "(0, 1]",
        });
    }
    tail_mass_log2(p, alpha.log2())
}

/// Log2-domain variant of [`tail_mass`].
pub fn tail_mass_log2(p: &Pmf, log2_alpha: f64) -> Result<f64> {
    if !(log2_alpha <= 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "log2_alpha",
            value: log2_alpha,
            expected: "<= 0",
        });
    }
    let mass = if let Some(table) = p.dense() {
        kahan_sum(
            table
                .iter()
                .filter(|&&v| v > 0.0 && v.log2() < log2_alpha)
                .copied(),
        )
    } else {
        let levels = p.levels().expect("pmf is dense or leveled");
        kahan_sum(
            levels
                .iter()
                .filter(|lv| lv.log2_prob < log2_alpha)
                .map(crate::dist::Level::mass),
        )
    };
    // The accumulated rounding error must not push a probability past 1.
    Ok(mass.min(1.0))
}

/// log2 of the covering bound on the projected class size at scale
/// `alpha = 2^(-h/eps)`: returns `2^(h/eps)`, an upper bound on the number
/// of symbols the high-probability set can hold.
pub fn covering_size_bound_log2(h: f64, eps: f64) -> Result<f64> {
    if h < 0.0 || !h.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "h",
            value: h,
            expected: ">= 0",
        });
    }
    if !(eps > 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "eps",
            value: eps,
            expected: "> 0",
        });
    }
    Ok((h / eps).exp2())
}

/// `Pr{h(x) != y}` under the joint.
pub fn true_risk(h: &Hypothesis, joint: &JointPmf) -> f64 {
    kahan_sum((0..joint.x_support()).map(|x| {
        let wrong = 1 - h.eval(x as Symbol);
        joint.prob(x, wrong)
    }))
}

/// Fraction of misclassified pairs in the sample.
pub fn empirical_risk(h: &Hypothesis, sample: &Dataset) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let wrong = sample
        .pairs()
        .iter()
        .filter(|&&(x, y)| h.eval(x) != y)
        .count();
    Ok(wrong as f64 / sample.len() as f64)
}

/// Disagreement mass `Pr_p{f(x) != g(x)}`, exact for both representations.
pub fn hypothesis_distance(f: &Hypothesis, g: &Hypothesis, p: &Pmf) -> f64 {
    if let Some(table) = p.dense() {
        return kahan_sum(table.iter().enumerate().filter_map(|(x, &px)| {
            if f.eval(x as Symbol) != g.eval(x as Symbol) {
                Some(px)
            } else {
                None
            }
        }));
    }
    // Implicit support: only the finitely many exception symbols can deviate
    // from the default-vs-default comparison.
    let support = p.support_size();
    let keys: std::collections::BTreeSet<Symbol> = f
        .exceptions
        .keys()
        .chain(g.exceptions.keys())
        .copied()
        .filter(|&x| x < support)
        .collect();
    let key_mass = kahan_sum(keys.iter().map(|&x| p.prob(x)));
    let differing_key_mass = kahan_sum(
        keys.iter()
            .filter(|&&x| f.eval(x) != g.eval(x))
            .map(|&x| p.prob(x)),
    );
    if f.default == g.default {
        differing_key_mass
    } else {
        (1.0 - key_mass) + differing_key_mass
    }
}

/// The three-part split of a generalization gap through the projected proxy
/// `g`: `|R_S(h) - R(h)| <= |R_S(g) - R(g)| + |R(g) - R(h)| + |R_S(g) - R_S(h)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTerms {
    /// `R(h)`, `R_S(h)`, `R(g)`, `R_S(g)` — the four underlying risks.
    pub true_risk: f64,
    pub empirical_risk: f64,
    pub projected_true_risk: f64,
    pub projected_empirical_risk: f64,
    /// `|R_S(h) - R(h)|`.
    pub gap: f64,
    /// Term 1: `|R_S(g) - R(g)|` — the proxy's own gap.
    pub projected_gap: f64,
    /// Term 2: `|R(g) - R(h)|` — true-risk shift from projecting.
    pub true_shift: f64,
    /// Term 3: `|R_S(g) - R_S(h)|` — empirical shift from projecting.
    pub empirical_shift: f64,
}

impl DecompositionTerms {
    pub fn sum_of_parts(&self) -> f64 {
        self.projected_gap + self.true_shift + self.empirical_shift
    }

    /// Verifies `gap <= term1 + term2 + term3` with zero tolerance by
    /// evaluating both sides in exact rational arithmetic over the stored
    /// risks (a naive f64 comparison can spuriously fail by an ulp when the
    /// four risks are collinear).
    pub fn holds(&self) -> bool {
        use num_rational::BigRational;
        let big = |x: f64| BigRational::from_float(x).expect("risks are finite");
        let a = big(self.empirical_risk);
        let b = big(self.true_risk);
        let c = big(self.projected_empirical_risk);
        let d = big(self.projected_true_risk);
        let abs = |r: BigRational| if r < BigRational::from_float(0.0).unwrap() { -r } else { r };
        let gap = abs(a.clone() - b.clone());
        let parts = abs(c.clone() - d.clone()) + abs(b - d) + abs(a - c);
        gap <= parts
    }
}

/// Projects `h` through `spec` and evaluates all four risks behind the
/// three-part split at once.
pub fn decomposition_terms(
    h: &Hypothesis,
    spec: &ProjectionSpec,
    joint: &JointPmf,
    sample: &Dataset,
) -> Result<DecompositionTerms> {
    let g = project(h, spec)?;
    let r_h = true_risk(h, joint);
    let r_g = true_risk(&g, joint);
    let rs_h = empirical_risk(h, sample)?;
    let rs_g = empirical_risk(&g, sample)?;
    Ok(DecompositionTerms {
        true_risk: r_h,
        empirical_risk: rs_h,
        projected_true_risk: r_g,
        projected_empirical_risk: rs_g,
        gap: (rs_h - r_h).abs(),
        projected_gap: (rs_g - r_g).abs(),
        true_shift: (r_h - r_g).abs(),
        empirical_shift: (rs_h - rs_g).abs(),
    })
}
