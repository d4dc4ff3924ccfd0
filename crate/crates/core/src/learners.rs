//! Learning algorithms over finite supports: the memorizing empirical-risk
//! minimizer, its projection-composed variant, and the sample-memorizing
//! encoder together with exact information statistics of any encoder.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::dist::{Dataset, JointPmf, Symbol};
use crate::error::{Error, Result};
use crate::hypotheses::{project, Hypothesis, ProjectionSpec};
use crate::log2::kahan_sum;

/// Conditional distribution `p(cell | x)` over `k` cells, stored per trained
/// symbol; any symbol outside the trained domain maps one-hot to
/// `default_cell`.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    k: usize,
    rows: BTreeMap<Symbol, Vec<f64>>,
    default_cell: usize,
}

/// Row-normalization tolerance for encoder conditionals.
const ROW_TOL: f64 = 1e-9;

impl Encoder {
    pub fn new(k: usize, rows: BTreeMap<Symbol, Vec<f64>>, default_cell: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ParamOutOfRange {
                name: "k",
                value: 0.0,
                expected: ">= 1",
            });
        }
        if default_cell >= k {
            return Err(Error::ParamOutOfRange {
                name: "default_cell",
                value: default_cell as f64,
                expected: "< k",
            });
        }
        for (&x, row) in &rows {
            if row.len() != k {
                return Err(Error::Config(format!(
                    "encoder row for symbol {x} has {} entries, expected k = {k}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (c, &v) in row.iter().enumerate() {
                if !(0.0..=1.0 + ROW_TOL).contains(&v) || v.is_nan() {
                    return Err(Error::ProbabilityOutOfRange {
                        index: c as u128,
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::NotNormalized {
                    sum,
                    tolerance: ROW_TOL,
                });
            }
        }
        Ok(Self {
            k,
            rows,
            default_cell,
        })
    }

    /// Deterministic encoder from an explicit cell assignment.
    pub fn from_assignments(
        assign: &BTreeMap<Symbol, usize>,
        k: usize,
        default_cell: usize,
    ) -> Result<Self> {
        let mut rows = BTreeMap::new();
        for (&x, &c) in assign {
            if c >= k {
                return Err(Error::ParamOutOfRange {
                    name: "cell",
                    value: c as f64,
                    expected: "< k",
                });
            }
            let mut row = vec![0.0; k];
            row[c] = 1.0;
            rows.insert(x, row);
        }
        Self::new(k, rows, default_cell)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn default_cell(&self) -> usize {
        self.default_cell
    }

    pub fn trained_symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.rows.keys().copied()
    }

    /// `p(cell | x)`; one-hot at the default cell off the trained domain.
    pub fn prob(&self, x: Symbol, cell: usize) -> f64 {
        match self.rows.get(&x) {
            Some(row) => row[cell],
            None => {
                if cell == self.default_cell {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Most probable cell for `x` (ties to the lowest index).
    pub fn cell_of(&self, x: Symbol) -> usize {
        match self.rows.get(&x) {
            Some(row) => argmax(row),
            None => self.default_cell,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows
            .values()
            .all(|row| row.iter().all(|&v| v == 0.0 || v == 1.0))
    }

    /// One-hot version of this encoder: each row collapses to its most
    /// probable cell, ties to the lowest index.
    pub fn harden(&self) -> Encoder {
        let assign: BTreeMap<Symbol, usize> =
            self.rows.iter().map(|(&x, row)| (x, argmax(row))).collect();
        Encoder::from_assignments(&assign, self.k, self.default_cell)
            .expect("hardening preserves validity")
    }

    /// Relabels cells in order of first use over ascending `x` (undoing
    /// cluster-permutation ambiguity); unused cells keep their relative
    /// order at the end.
    pub fn canonicalized(&self) -> Encoder {
        let mut relabel: Vec<Option<usize>> = vec![None; self.k];
        let mut next = 0usize;
        for row in self.rows.values() {
            let c = argmax(row);
            if relabel[c].is_none() {
                relabel[c] = Some(next);
                next += 1;
            }
        }
        if relabel[self.default_cell].is_none() {
            relabel[self.default_cell] = Some(next);
            next += 1;
        }
        for slot in relabel.iter_mut() {
            if slot.is_none() {
                *slot = Some(next);
                next += 1;
            }
        }
        let perm: Vec<usize> = relabel.into_iter().map(Option::unwrap).collect();
        let rows = self
            .rows
            .iter()
            .map(|(&x, row)| {
                let mut out = vec![0.0; self.k];
                for (c, &v) in row.iter().enumerate() {
                    out[perm[c]] = v;
                }
                (x, out)
            })
            .collect();
        Encoder {
            k: self.k,
            rows,
            default_cell: perm[self.default_cell],
        }
    }

    /// JSON form `{"k", "default_cell", "rows": {"x": ["p", ...]}}` with
    /// probabilities as decimal strings.
    pub fn to_json_value(&self) -> Value {
        let rows: serde_json::Map<String, Value> = self
            .rows
            .iter()
            .map(|(x, row)| {
                (
                    x.to_string(),
                    Value::from(row.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
                )
            })
            .collect();
        json!({
            "k": self.k,
            "default_cell": self.default_cell,
            "rows": rows,
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let k = v
            .get("k")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Config("encoder json missing \"k\"".into()))? as usize;
        let default_cell = v
            .get("default_cell")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Config("encoder json missing \"default_cell\"".into()))?
            as usize;
        let rows_obj = v
            .get("rows")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Config("encoder json missing \"rows\"".into()))?;
        let mut rows = BTreeMap::new();
        for (key, row_val) in rows_obj {
            let x: Symbol = key
                .parse()
                .map_err(|_| Error::Config(format!("invalid symbol key {key:?}")))?;
            let row_arr = row_val
                .as_array()
                .ok_or_else(|| Error::Config("encoder rows must be arrays".into()))?;
            let row = row_arr
                .iter()
                .map(|e| {
                    e.as_str()
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| Error::Config("row entries must be decimal strings".into()))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.insert(x, row);
        }
        Self::new(k, rows, default_cell)
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0usize;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// Majority-vote memorizer: for each seen `x` predict its majority label
/// (ties to `default_label`); unseen `x` map to `default_label`.
pub fn memorizer_fit(sample: &Dataset, default_label: u8) -> Result<Hypothesis> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if default_label > 1 {
        return Err(Error::NonBinaryLabel {
            label: default_label as u64,
        });
    }
    let mut counts: BTreeMap<Symbol, (u64, u64)> = BTreeMap::new();
    for &(x, y) in sample.pairs() {
        let entry = counts.entry(x).or_insert((0, 0));
        if y == 0 {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }
    let exceptions = counts
        .into_iter()
        .filter_map(|(x, (zeros, ones))| {
            let label = match zeros.cmp(&ones) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => default_label,
            };
            (label != default_label).then_some((x, label))
        })
        .collect();
    Hypothesis::from_exceptions(exceptions, default_label)
}

/// The memorizer pushed through a projection: always lands in the projected
/// class, so its output is a fixed point of `project`.
pub fn center_learner(
    sample: &Dataset,
    spec: &ProjectionSpec,
    default_label: u8,
) -> Result<Hypothesis> {
    let h = memorizer_fit(sample, default_label)?;
    project(&h, spec)
}

/// Sample-memorizing binary encoder: each training point `(x_i, y_i)` maps
/// `x_i` one-hot to cell `y_i`; unseen symbols map to cell 0. Requires
/// conflict-free inputs (repeats with equal labels are collapsed).
pub fn overfit_encoder(sample: &Dataset) -> Result<Encoder> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut assign: BTreeMap<Symbol, usize> = BTreeMap::new();
    for &(x, y) in sample.pairs() {
        match assign.get(&x) {
            Some(&prev) if prev != y as usize => {
                return Err(Error::ConflictingLabels { symbol: x });
            }
            _ => {
                assign.insert(x, y as usize);
            }
        }
    }
    Encoder::from_assignments(&assign, 2, 0)
}

/// Exact information statistics of the chain `y - x - cell` induced by
/// composing a joint with an encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderStats {
    /// I(X; X̂) in bits.
    pub i_xxhat: f64,
    /// I(Y; X̂) in bits.
    pub i_yxhat: f64,
    /// H(X̂) in bits.
    pub h_xhat: f64,
}

/// Computes I(X;X̂), I(Y;X̂), H(X̂) by exact marginalization.
pub fn encoder_stats(enc: &Encoder, joint: &JointPmf) -> EncoderStats {
    let k = enc.k();
    let n = joint.x_support();
    let px: Vec<f64> = (0..n).map(|x| joint.prob(x, 0) + joint.prob(x, 1)).collect();
    // Cell marginal and (cell, y) joint by exact marginalization over x.
    let p_cell: Vec<f64> = (0..k)
        .map(|c| kahan_sum((0..n).map(|x| px[x] * enc.prob(x as Symbol, c))))
        .collect();
    let p_cell_y: Vec<[f64; 2]> = (0..k)
        .map(|c| {
            [
                kahan_sum((0..n).map(|x| joint.prob(x, 0) * enc.prob(x as Symbol, c))),
                kahan_sum((0..n).map(|x| joint.prob(x, 1) * enc.prob(x as Symbol, c))),
            ]
        })
        .collect();
    let py = joint.y_marginal();

    let h_xhat = kahan_sum(
        p_cell
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| -v * v.log2()),
    );
    let i_xxhat = kahan_sum((0..n).flat_map(|x| {
        let px_x = px[x];
        let p_cell = &p_cell;
        (0..k).map(move |c| {
            let q = enc.prob(x as Symbol, c);
            if px_x > 0.0 && q > 0.0 {
                px_x * q * (q / p_cell[c]).log2()
            } else {
                0.0
            }
        })
    }));
    let i_yxhat = kahan_sum((0..k).flat_map(|c| {
        let cell_mass = p_cell[c];
        let cell_y = p_cell_y[c];
        (0..2).map(move |y| {
            let pcy = cell_y[y];
            if pcy > 0.0 {
                pcy * (pcy / (cell_mass * py[y])).log2()
            } else {
                0.0
            }
        })
    }));
    EncoderStats {
        // These quantities are nonnegative; keep rounding residue from
        // leaking a spurious sign.
        i_xxhat: i_xxhat.max(0.0),
        i_yxhat: i_yxhat.max(0.0),
        h_xhat: h_xhat.max(0.0),
    }
}

/// 0-1 risk of predicting through the bottleneck: cells decode to the label
/// maximizing the posterior learned from `train` (ties to 0, zero-mass cells
/// to 0), then the prediction is scored against `test`.
pub fn encoder_prediction_risk(enc: &Encoder, train: &JointPmf, test: &JointPmf) -> f64 {
    let k = enc.k();
    let n = train.x_support();
    let decode: Vec<u8> = (0..k)
        .map(|c| {
            let mass = |y: u8| {
                kahan_sum((0..n).map(|x| train.prob(x, y) * enc.prob(x as Symbol, c)))
            };
            if mass(1) > mass(0) {
                1
            } else {
                0
            }
        })
        .collect();
    kahan_sum((0..test.x_support()).flat_map(|x| {
        let decode = &decode;
        (0..k).map(move |c| {
            let wrong_y = 1 - decode[c];
            test.prob(x, wrong_y) * enc.prob(x as Symbol, c)
        })
    }))
}
