//! Constructions of entropy-constrained distributions:
//!
//! - [`build_hteld`] — a two-level family with a dominant head symbol and a
//!   uniform heavy tail whose width is solved from an entropy budget.
//! - [`random_entropy_limited`] — a seeded random pmf hitting a prescribed
//!   entropy by tempering random weights.
//! - [`FactorizedBernoulli`] — a product of i.i.d. rare-event coordinates,
//!   tracked through its success-count statistics instead of its
//!   exponentially large outcome space.

use rand_distr::{Binomial, Distribution};
use serde_json::{json, Value};

use crate::dist::{binary_entropy, JointPmf, Pmf, Symbol, DENSE_SUPPORT_CAP};
use crate::error::{Error, Result};
use crate::log2::{log2_1p, LN_2};
use crate::rng::{chain, symbol_label, CounterRng};

/// Largest representable tail exponent: `m` must fit in a `u128` alongside
/// the head symbol.
pub const MAX_LOG2_TAIL: f64 = 126.0;

/// Tail widths are accepted at `m = 1` only when the entropy budget sits
/// exactly on the feasibility floor (within this tolerance in log2 domain).
const BOUNDARY_TOL: f64 = 1e-9;

/// A head-plus-uniform-tail distribution solved from `(gamma, eps)`:
/// symbol 0 carries mass `1 - eps`, and `m` tail symbols carry `eps / m`
/// each, with `m` chosen so the entropy comes out at `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct HteldSpec {
    pub gamma: f64,
    pub eps: f64,
    pub m: u128,
    pub log2_m: f64,
    pub log2_alpha: f64,
    pub achieved_entropy: f64,
}

impl HteldSpec {
    /// Per-tail-symbol probability; may underflow to 0 for huge tails.
    pub fn alpha(&self) -> f64 {
        self.log2_alpha.exp2()
    }

    /// Materializes the distribution: dense when the support fits the table
    /// cap, implicit two-level otherwise.
    pub fn pmf(&self) -> Pmf {
        let support = self.m + 1;
        if support <= DENSE_SUPPORT_CAP {
            let alpha = self.alpha();
            let mut probs = vec![alpha; support as usize];
            probs[0] = 1.0 - self.eps;
            Pmf::from_weights(&probs).expect("two-level table is valid")
        } else {
            Pmf::two_level(1.0 - self.eps, self.log2_alpha, self.m)
                .expect("two-level spec is valid")
        }
    }

    /// Joint with deterministic seeded labels (head symbol always labeled 0).
    pub fn joint(&self, label_seed: u64) -> Result<JointPmf> {
        JointPmf::from_pmf_and_labels(&self.pmf(), |x| hteld_label(label_seed, x))
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "gamma": self.gamma,
            "eps": self.eps,
            "log2_alpha": self.log2_alpha,
            "log2_m": self.log2_m,
            "achieved_entropy": self.achieved_entropy,
        })
    }
}

/// Solves the head-plus-tail construction for an entropy budget.
///
/// The tail width is `m = round(2^((gamma - H(eps)) / eps))` and the
/// per-symbol tail mass is re-solved as `eps / m`, so the achieved entropy
/// `H(eps) + eps * log2(m)` deviates from `gamma` only through integer
/// rounding of `m`.
pub fn build_hteld(gamma: f64, eps: f64) -> Result<HteldSpec> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParamOutOfRange {
            name: "eps",
            value: eps,
            expected: "(0, 1)",
        });
    }
    if !gamma.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "gamma",
            value: gamma,
            expected: "finite",
        });
    }
    let floor = binary_entropy(eps);
    if gamma < floor {
        return Err(Error::EntropyBelowFeasibility { gamma, eps, floor });
    }
    let log2_m_real = (gamma - floor) / eps;
    if log2_m_real > MAX_LOG2_TAIL {
        return Err(Error::TailTooLarge { log2_m: log2_m_real });
    }
    let m_real = log2_m_real.exp2();
    let m = if m_real < u64::MAX as f64 {
        (m_real.round() as u64).max(1) as u128
    } else {
        // Beyond integer-exact doubles the nearest representable f64 *is*
        // the rounded width.
        m_real as u128
    };
    if m == 1 && log2_m_real.abs() > BOUNDARY_TOL {
        // A single tail symbol would carry the full mass eps > eps/2: the
        // tail stops being dominated by the head's complement.
        return Err(Error::TailNotHeavy {
            alpha: eps,
            half_eps: eps / 2.0,
        });
    }
    let log2_m = (m as f64).log2();
    let log2_alpha = eps.log2() - log2_m;
    let achieved_entropy = -(1.0 - eps) * log2_1p(-eps) - eps * log2_alpha;
    Ok(HteldSpec {
        gamma,
        eps,
        m,
        log2_m,
        log2_alpha,
        achieved_entropy,
    })
}

/// Deterministic binary label for the head-plus-tail family: the head symbol
/// is always 0, tail symbols get a seeded pseudorandom bit.
pub fn hteld_label(label_seed: u64, x: Symbol) -> u8 {
    if x == 0 {
        0
    } else {
        symbol_label(label_seed, x)
    }
}

/// Seeded random pmf with entropy `h_max` (within 1e-6 bits), found by
/// tempering exponential random weights: `p_i(t) ∝ w_i^t` is uniform at
/// `t = 0` and degenerates as `t → ∞`, so entropy is monotone in `t` and a
/// bisection on `t` lands on the target.
pub fn random_entropy_limited(h_max: f64, support: usize, seed: u64) -> Result<Pmf> {
    const TOL: f64 = 1e-6;
    if support < 2 {
        return Err(Error::ParamOutOfRange {
            name: "support",
            value: support as f64,
            expected: ">= 2",
        });
    }
    let h_cap = (support as f64).log2();
    if !(h_max > 0.0 && h_max <= h_cap) {
        return Err(Error::ParamOutOfRange {
            name: "h_max",
            value: h_max,
            expected: "(0, log2(support)]",
        });
    }
    let log_weights: Vec<f64> = (0..support)
        .map(|i| {
            let mut rng = CounterRng::new(chain(seed, &[i as u64]));
            let w = -f64::ln_1p(-rng.next_f64());
            w.max(1e-300).ln()
        })
        .collect();
    let pmf_at = |t: f64| -> Pmf {
        let top = log_weights.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) * t;
        let weights: Vec<f64> = log_weights.iter().map(|&lw| (t * lw - top).exp()).collect();
        Pmf::from_weights(&weights).expect("tempered weights are positive")
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while pmf_at(hi).entropy_bits() > h_max {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            break;
        }
    }
    let mut best = pmf_at(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let candidate = pmf_at(mid);
        let h = candidate.entropy_bits();
        if (h - h_max).abs() <= TOL {
            return Ok(candidate);
        }
        if h > h_max {
            lo = mid;
        } else {
            hi = mid;
        }
        best = candidate;
    }
    let h = best.entropy_bits();
    if (h - h_max).abs() <= TOL {
        Ok(best)
    } else {
        Err(Error::PropertyViolation(format!(
            "entropy bisection stalled at {h} bits, target {h_max}"
        )))
    }
}

/// Product of `l` independent Bernoulli(`p`) coordinates, manipulated through
/// closed forms: the outcome space has `2^l` points and is never enumerated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizedBernoulli {
    pub l: u64,
    pub p: f64,
}

impl FactorizedBernoulli {
    pub fn new(l: u64, p: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::ParamOutOfRange {
                name: "l",
                value: 0.0,
                expected: ">= 1",
            });
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ParamOutOfRange {
                name: "p",
                value: p,
                expected: "(0, 1)",
            });
        }
        Ok(Self { l, p })
    }

    /// Entropy of one coordinate, in bits.
    pub fn entropy_rate_bits(&self) -> f64 {
        binary_entropy(self.p)
    }

    /// Entropy of the full product, in bits.
    pub fn total_entropy_bits(&self) -> f64 {
        self.l as f64 * binary_entropy(self.p)
    }

    /// Entropy of the full product, in nats.
    pub fn total_entropy_nats(&self) -> f64 {
        self.total_entropy_bits() * LN_2
    }

    /// `log2` probability of any single outcome having exactly `k` successes.
    pub fn log2_prob_of_count(&self, k: u64) -> Result<f64> {
        if k > self.l {
            return Err(Error::ParamOutOfRange {
                name: "k",
                value: k as f64,
                expected: "<= l",
            });
        }
        Ok(k as f64 * self.p.log2() + (self.l - k) as f64 * log2_1p(-self.p))
    }

    /// Variance of one coordinate's surprisal `-log2 prob`, in bits^2.
    pub fn surprisal_variance_bits2(&self) -> f64 {
        let gap = log2_1p(-self.p) - self.p.log2();
        self.p * (1.0 - self.p) * gap * gap
    }

    /// Variance of the whole product's surprisal (coordinates independent).
    pub fn total_surprisal_variance_bits2(&self) -> f64 {
        self.l as f64 * self.surprisal_variance_bits2()
    }

    /// Probability of two or more successes: the mass escaping both the
    /// all-zero outcome and the single-success shell. With `l * p = 1` this
    /// converges to `1 - 2/e` as `l` grows.
    pub fn atypical_two_plus_mass(&self) -> Result<f64> {
        if self.l < 2 {
            return Err(Error::ParamOutOfRange {
                name: "l",
                value: self.l as f64,
                expected: ">= 2",
            });
        }
        let log_q = f64::ln_1p(-self.p);
        let p0 = (self.l as f64 * log_q).exp();
        let p1 = self.l as f64 * self.p * ((self.l - 1) as f64 * log_q).exp();
        Ok(1.0 - p0 - p1)
    }

    /// Draws `n` success counts; draw `i` is a pure function of `(seed, i)`.
    pub fn sample_counts(&self, n: usize, seed: u64) -> Vec<u64> {
        let binomial = Binomial::new(self.l, self.p).expect("validated parameters");
        (0..n)
            .map(|i| {
                let mut rng = CounterRng::new(chain(seed, &[i as u64]));
                binomial.sample(&mut rng)
            })
            .collect()
    }
}
