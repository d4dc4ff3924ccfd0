//! Finite discrete distributions, information measures in bits, seeded
//! sampling, and empirical estimation.
//!
//! Two representations back [`Pmf`]:
//!
//! - **Dense** — an explicit probability table, for supports up to 2^24.
//! - **Leveled** — a small list of (log2-probability, multiplicity) levels
//!   covering contiguous symbol ranges. This is how a heavy-tailed
//!   distribution with 2^92 tail symbols is evaluated exactly without a table.
//!
//! Symbols are `u128` because implicit supports exceed the 64-bit range.
//! Probabilities are stored linearly where possible with a log2-domain
//! accessor for values that underflow doubles.

use std::io::Write;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::log2::kahan_sum;
use crate::rng::{chain, CounterRng};

pub type Symbol = u128;

/// Supports larger than this are never materialized as tables.
pub const DENSE_SUPPORT_CAP: u128 = 1 << 24;

/// Probability tables must sum to 1 within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// One probability level of an implicit pmf: `count` consecutive symbols,
/// each of probability `2^log2_prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub log2_prob: f64,
    pub count: u128,
}

impl Level {
    /// Total mass of the level, computed in the log2 domain.
    pub fn mass(&self) -> f64 {
        ((self.count as f64).log2() + self.log2_prob).exp2()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense(Vec<f64>),
    Leveled(Vec<Level>),
}

/// Probability mass function over symbols `0..support_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    repr: Repr,
}

impl Pmf {
    /// Builds a dense pmf, validating nonnegativity and normalization.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptySupport);
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::ProbabilityOutOfRange {
                    index: i as u128,
                    value: p,
                });
            }
        }
        let sum = kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                sum,
                tolerance: NORMALIZATION_TOL,
            });
        }
        Ok(Self {
            repr: Repr::Dense(probs),
        })
    }

    /// Builds a dense pmf by normalizing nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptySupport);
        }
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::ProbabilityOutOfRange {
                    index: i as u128,
                    value: w,
                });
            }
        }
        let total = kahan_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        Self::from_probs(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        Self::from_probs(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::ProbabilityOutOfRange {
                index: at as u128,
                value: f64::NAN,
            });
        }
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self::from_probs(probs)
    }

    /// Builds an implicit pmf from probability levels occupying consecutive
    /// symbol ranges in order.
    pub fn from_levels(levels: Vec<Level>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::EmptySupport);
        }
        let mut support: u128 = 0;
        for (i, lv) in levels.iter().enumerate() {
            if lv.count == 0 || lv.log2_prob > 0.0 || lv.log2_prob.is_nan() {
                return Err(Error::ProbabilityOutOfRange {
                    index: i as u128,
                    value: lv.log2_prob,
                });
            }
            support = support
                .checked_add(lv.count)
                .ok_or(Error::TailTooLarge { log2_m: 128.0 })?;
        }
        let mass = kahan_sum(levels.iter().map(Level::mass));
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                sum: mass,
                tolerance: NORMALIZATION_TOL,
            });
        }
        Ok(Self {
            repr: Repr::Leveled(levels),
        })
    }

    /// Head symbol of probability `head_prob` followed by `tail_count`
    /// symbols of probability `2^tail_log2_prob` each.
    pub fn two_level(head_prob: f64, tail_log2_prob: f64, tail_count: u128) -> Result<Self> {
        Self::from_levels(vec![
            Level {
                log2_prob: head_prob.log2(),
                count: 1,
            },
            Level {
                log2_prob: tail_log2_prob,
                count: tail_count,
            },
        ])
    }

    pub fn support_size(&self) -> u128 {
        match &self.repr {
            Repr::Dense(p) => p.len() as u128,
            Repr::Leveled(levels) => levels.iter().map(|l| l.count).sum(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    pub(crate) fn dense(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Dense(p) => Some(p),
            Repr::Leveled(_) => None,
        }
    }

    pub(crate) fn levels(&self) -> Option<&[Level]> {
        match &self.repr {
            Repr::Dense(_) => None,
            Repr::Leveled(levels) => Some(levels),
        }
    }

    /// Linear probability of a symbol; 0 outside the support. May underflow
    /// for implicit tails — use [`Pmf::log2_prob`] at extreme scales.
    pub fn prob(&self, x: Symbol) -> f64 {
        match &self.repr {
            Repr::Dense(p) => {
                if x < p.len() as u128 {
                    p[x as usize]
                } else {
                    0.0
                }
            }
            Repr::Leveled(levels) => {
                let mut start: u128 = 0;
                for lv in levels {
                    if x < start + lv.count {
                        return lv.log2_prob.exp2();
                    }
                    start += lv.count;
                }
                0.0
            }
        }
    }

    /// Exact log2 probability of a symbol; `-inf` outside the support.
    pub fn log2_prob(&self, x: Symbol) -> f64 {
        match &self.repr {
            Repr::Dense(p) => {
                if x < p.len() as u128 {
                    p[x as usize].log2()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Repr::Leveled(levels) => {
                let mut start: u128 = 0;
                for lv in levels {
                    if x < start + lv.count {
                        return lv.log2_prob;
                    }
                    start += lv.count;
                }
                f64::NEG_INFINITY
            }
        }
    }

    /// Shannon entropy in bits, with `0 * log2(0) = 0`.
    pub fn entropy_bits(&self) -> f64 {
        match &self.repr {
            Repr::Dense(p) => kahan_sum(
                p.iter()
                    .filter(|&&v| v > 0.0)
                    .map(|&v| -v * v.log2()),
            ),
            Repr::Leveled(levels) => kahan_sum(
                levels
                    .iter()
                    .filter(|l| l.log2_prob > f64::NEG_INFINITY)
                    .map(|l| l.mass() * -l.log2_prob),
            ),
        }
    }

    /// Smallest positive probability in log2 domain, if any symbol has one.
    pub fn min_positive_log2_prob(&self) -> Option<f64> {
        match &self.repr {
            Repr::Dense(p) => p
                .iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| v.log2())
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.min(v)))
                }),
            Repr::Leveled(levels) => levels
                .iter()
                .filter(|l| l.log2_prob > f64::NEG_INFINITY)
                .map(|l| l.log2_prob)
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.min(v)))
                }),
        }
    }

    /// Draws `n` symbols; draw `i` is a pure function of `(seed, i)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Symbol> {
        self.sample_iter(n, seed).collect()
    }

    /// Streaming variant of [`Pmf::sample`] with identical draws.
    pub fn sample_iter(&self, n: usize, seed: u64) -> impl Iterator<Item = Symbol> + '_ {
        enum Plan {
            Dense {
                cdf: Vec<f64>,
            },
            Leveled {
                level_cdf: Vec<f64>,
                starts: Vec<u128>,
                counts: Vec<u128>,
            },
        }
        let plan = match &self.repr {
            Repr::Dense(p) => Plan::Dense { cdf: cumulative(p) },
            Repr::Leveled(levels) => Plan::Leveled {
                level_cdf: cumulative(&levels.iter().map(Level::mass).collect::<Vec<_>>()),
                starts: levels
                    .iter()
                    .scan(0u128, |acc, l| {
                        let s = *acc;
                        *acc += l.count;
                        Some(s)
                    })
                    .collect(),
                counts: levels.iter().map(|l| l.count).collect(),
            },
        };
        (0..n).map(move |i| {
            let mut rng = CounterRng::new(chain(seed, &[i as u64]));
            match &plan {
                Plan::Dense { cdf } => search_cdf(cdf, rng.next_f64()) as Symbol,
                Plan::Leveled {
                    level_cdf,
                    starts,
                    counts,
                } => {
                    let lv = search_cdf(level_cdf, rng.next_f64());
                    starts[lv] + rng.next_below(counts[lv])
                }
            }
        })
    }

    /// JSON form `{"support": n, "probs": ["...", ...]}` with probabilities as
    /// decimal strings (shortest round-trip representation).
    pub fn to_json_value(&self) -> Result<Value> {
        match &self.repr {
            Repr::Dense(p) => Ok(json!({
                "support": p.len(),
                "probs": p.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            })),
            Repr::Leveled(_) => Err(Error::ImplicitPmf {
                operation: "table serialization",
            }),
        }
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let support = v
            .get("support")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Config("pmf json missing \"support\"".into()))?;
        let probs = parse_decimal_array(
            v.get("probs")
                .ok_or_else(|| Error::Config("pmf json missing \"probs\"".into()))?,
        )?;
        if probs.len() as u64 != support {
            return Err(Error::Config(format!(
                "pmf json support {} does not match probs length {}",
                support,
                probs.len()
            )));
        }
        Self::from_probs(probs)
    }
}

/// Joint distribution over `(x, y)` with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    rows: Vec<[f64; 2]>,
}

impl JointPmf {
    pub fn from_rows(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySupport);
        }
        for (i, row) in rows.iter().enumerate() {
            for (y, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) || p.is_nan() {
                    return Err(Error::ProbabilityOutOfRange {
                        index: (2 * i + y) as u128,
                        value: p,
                    });
                }
            }
        }
        let sum = kahan_sum(rows.iter().flatten().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                sum,
                tolerance: NORMALIZATION_TOL,
            });
        }
        Ok(Self { rows })
    }

    /// Couples a dense marginal with a deterministic labeling rule.
    pub fn from_pmf_and_labels<F: Fn(Symbol) -> u8>(p: &Pmf, label: F) -> Result<Self> {
        let dense = p.dense().ok_or(Error::ImplicitPmf {
            operation: "joint construction",
        })?;
        let rows = dense
            .iter()
            .enumerate()
            .map(|(x, &px)| {
                let y = label(x as Symbol);
                if y == 0 {
                    [px, 0.0]
                } else {
                    [0.0, px]
                }
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn x_support(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, x: usize, y: u8) -> f64 {
        self.rows[x][y as usize]
    }

    pub fn row(&self, x: usize) -> [f64; 2] {
        self.rows[x]
    }

    pub fn x_marginal(&self) -> Pmf {
        // A row of a valid joint can sum a rounding ulp past 1; clip so the
        // marginal stays a probability.
        let probs: Vec<f64> = self.rows.iter().map(|r| (r[0] + r[1]).min(1.0)).collect();
        Pmf::from_probs(probs).expect("marginal of a valid joint is a valid pmf")
    }

    pub fn y_marginal(&self) -> [f64; 2] {
        [
            kahan_sum(self.rows.iter().map(|r| r[0])),
            kahan_sum(self.rows.iter().map(|r| r[1])),
        ]
    }

    /// Conditional label distribution at `x`; `None` where the marginal is 0.
    pub fn cond_y(&self, x: usize) -> Option<[f64; 2]> {
        let row = self.rows[x];
        let mass = row[0] + row[1];
        if mass > 0.0 {
            Some([row[0] / mass, row[1] / mass])
        } else {
            None
        }
    }

    /// I(X;Y) in bits; zero-probability cells contribute 0.
    pub fn mutual_information_bits(&self) -> f64 {
        let px: Vec<f64> = self.rows.iter().map(|r| r[0] + r[1]).collect();
        let px = &px;
        let py = self.y_marginal();
        kahan_sum(self.rows.iter().enumerate().flat_map(|(x, row)| {
            row.iter().enumerate().map(move |(y, &pxy)| {
                if pxy > 0.0 {
                    pxy * (pxy / (px[x] * py[y])).log2()
                } else {
                    0.0
                }
            })
        }))
    }

    /// Half the L1 distance between the joint tables (missing rows count 0).
    pub fn total_variation(&self, other: &JointPmf) -> f64 {
        let n = self.rows.len().max(other.rows.len());
        let cell = |rows: &[[f64; 2]], x: usize, y: usize| {
            rows.get(x).map_or(0.0, |r| r[y])
        };
        0.5 * kahan_sum((0..n).flat_map(|x| {
            (0..2).map(move |y| (cell(&self.rows, x, y) - cell(&other.rows, x, y)).abs())
        }))
    }

    /// Stable content identifier used as `Dataset::source_id`.
    pub fn id(&self) -> String {
        let h = self
            .rows
            .iter()
            .flatten()
            .fold(0xE17A_B0DE_u64, |acc, v| chain(acc, &[v.to_bits()]));
        format!("joint-{h:016x}")
    }

    /// Draws `n` i.i.d. pairs by inverse CDF over the flattened cell table;
    /// draw `i` is a pure function of `(seed, i)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::ParamOutOfRange {
                name: "n",
                value: 0.0,
                expected: "n >= 1",
            });
        }
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        let cdf = cumulative(&flat);
        let pairs = (0..n)
            .map(|i| {
                let mut rng = CounterRng::new(chain(seed, &[i as u64]));
                let cell = search_cdf(&cdf, rng.next_f64());
                ((cell / 2) as Symbol, (cell % 2) as u8)
            })
            .collect();
        Dataset::new(pairs, seed, self.id())
    }

    /// JSON form `{"table": [["...", "..."], ...]}` with decimal strings.
    pub fn to_json_value(&self) -> Value {
        json!({
            "table": self
                .rows
                .iter()
                .map(|r| vec![r[0].to_string(), r[1].to_string()])
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let table = v
            .get("table")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Config("joint json missing \"table\"".into()))?;
        let mut rows = Vec::with_capacity(table.len());
        for row in table {
            let parsed = parse_decimal_array(row)?;
            if parsed.len() != 2 {
                return Err(Error::Config(format!(
                    "joint rows must have 2 entries, got {}",
                    parsed.len()
                )));
            }
            rows.push([parsed[0], parsed[1]]);
        }
        Self::from_rows(rows)
    }
}

/// An ordered i.i.d. sample with seed provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pairs: Vec<(Symbol, u8)>,
    seed: u64,
    source_id: String,
}

impl Dataset {
    pub fn new(pairs: Vec<(Symbol, u8)>, seed: u64, source_id: String) -> Result<Self> {
        for &(_, y) in &pairs {
            if y > 1 {
                return Err(Error::NonBinaryLabel { label: y as u64 });
            }
        }
        Ok(Self {
            pairs,
            seed,
            source_id,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Symbol, u8)] {
        &self.pairs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// Plug-in joint estimate: cell `(x, y)` holds `count(x, y) / N`.
    pub fn empirical(&self, x_support: u128) -> Result<JointPmf> {
        if self.pairs.is_empty() {
            return Err(Error::EmptySample);
        }
        if x_support > DENSE_SUPPORT_CAP {
            return Err(Error::SupportTooLarge {
                size: x_support,
                cap: DENSE_SUPPORT_CAP,
            });
        }
        let mut counts = vec![[0u64; 2]; x_support as usize];
        for &(x, y) in &self.pairs {
            if x >= x_support {
                return Err(Error::SymbolOutOfSupport {
                    symbol: x,
                    support: x_support,
                });
            }
            counts[x as usize][y as usize] += 1;
        }
        let n = self.pairs.len() as f64;
        JointPmf::from_rows(
            counts
                .iter()
                .map(|c| [c[0] as f64 / n, c[1] as f64 / n])
                .collect(),
        )
    }

    pub fn label_frequency(&self) -> Result<f64> {
        if self.pairs.is_empty() {
            return Err(Error::EmptySample);
        }
        let ones = self.pairs.iter().filter(|&&(_, y)| y == 1).count();
        Ok(ones as f64 / self.pairs.len() as f64)
    }

    /// CSV with header `x,y` and LF line endings.
    pub fn csv_string(&self) -> String {
        let mut out = String::from("x,y\n");
        for &(x, y) in &self.pairs {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(self.csv_string().as_bytes())?;
        Ok(())
    }

    pub fn sidecar_json(&self) -> Value {
        json!({ "seed": self.seed, "source_id": self.source_id })
    }
}

/// Binary entropy H(p) in bits; endpoints return 0. Requires `p` in [0, 1].
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "binary_entropy domain");
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    -(1.0 - p) * crate::log2::log2_1p(-p) - p * p.log2()
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf = Vec::with_capacity(probs.len());
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    if let Some(last) = cdf.last_mut() {
        *last = last.max(1.0);
    }
    cdf
}

/// First index whose cumulative value exceeds `u`.
fn search_cdf(cdf: &[f64], u: f64) -> usize {
    let mut lo = 0usize;
    let mut hi = cdf.len() - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if cdf[mid] > u {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

fn parse_decimal_array(v: &Value) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Config("expected an array of decimal strings".into()))?;
    arr.iter()
        .map(|e| {
            let s = e
                .as_str()
                .ok_or_else(|| Error::Config("probabilities must be decimal strings".into()))?;
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid decimal: {s:?}")))
        })
        .collect()
}
