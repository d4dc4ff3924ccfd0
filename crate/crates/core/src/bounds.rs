//! Closed-form bound calculators: the entropy-limited sample-complexity
//! bound and its matching lower bound, finite-class and partition deviation
//! bounds, entropy tail bounds with their achievability simulation, and the
//! restricted-class prior bound with its cross-entropy risk.

use std::f64::consts::LOG2_E;

use rand_distr::{Binomial, Distribution};

use crate::dist::{JointPmf, Pmf};
use crate::error::{Error, Result};
use crate::learners::Encoder;
use crate::log2::{exp2_checked, kahan_sum, log2_add, log2_add_linear};
use crate::rng::{chain, CounterRng};

/// Base of the `log(1/δ)` confidence terms. Everything else in the crate is
/// in bits, so the default is 2; change here to compare against nat-based
/// readings of the same formulas.
pub const CONFIDENCE_LOG_BASE: f64 = 2.0;

fn log_inv_confidence(delta: f64) -> f64 {
    if CONFIDENCE_LOG_BASE == 2.0 {
        (1.0 / delta).log2()
    } else {
        (1.0 / delta).ln() / CONFIDENCE_LOG_BASE.ln()
    }
}

fn check_open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            name,
            value: v,
            expected: "(0, 1)",
        })
    }
}

fn check_nonnegative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            name,
            value: v,
            expected: "finite and >= 0",
        })
    }
}

/// A possibly astronomically large quantity, carried in the log₂ domain with
/// a linear shadow whenever double precision can represent it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub log2_value: f64,
    pub linear_value: Option<f64>,
}

impl BoundValue {
    pub fn from_log2(log2_value: f64) -> Self {
        Self {
            log2_value,
            linear_value: exp2_checked(log2_value),
        }
    }
}

/// Samples sufficient to learn any source of entropy at most `h` bits to
/// accuracy `eps` with confidence `1 - delta`:
/// `(2^(6h/ε) + log₂(1/δ)) / ε²`, computed in the log₂ domain.
pub fn sample_complexity(h: f64, eps: f64, delta: f64) -> Result<BoundValue> {
    check_nonnegative("h", h)?;
    check_open_unit("eps", eps)?;
    check_open_unit("delta", delta)?;
    let log2_numerator = log2_add_linear(6.0 * h / eps, log_inv_confidence(delta));
    Ok(BoundValue::from_log2(log2_numerator - 2.0 * eps.log2()))
}

/// Samples below which some entropy-`h` source defeats every learner at
/// accuracy `eps`: `2^((h-1)/ε)` in the log₂ domain.
pub fn hteld_lower_bound(h: f64, eps: f64) -> Result<BoundValue> {
    check_nonnegative("h", h)?;
    check_open_unit("eps", eps)?;
    Ok(BoundValue::from_log2((h - 1.0) / eps))
}

/// Uniform-convergence failure probability for a finite hypothesis class:
/// `min(1, class_size · 2 · e^(-2nε²))`.
pub fn finite_class_bound(class_size: u128, n: u64, eps: f64) -> Result<f64> {
    if class_size == 0 {
        return Err(Error::ParamOutOfRange {
            name: "class_size",
            value: 0.0,
            expected: ">= 1",
        });
    }
    finite_class_bound_log2((class_size as f64).log2(), n, eps).map(|b| b.exp2())
}

/// Log₂-domain variant of the finite-class bound for classes too large to
/// count linearly; returns `log₂` of the clipped probability.
pub fn finite_class_bound_log2(log2_class_size: f64, n: u64, eps: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ParamOutOfRange {
            name: "n",
            value: 0.0,
            expected: ">= 1",
        });
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::ParamOutOfRange {
            name: "eps",
            value: eps,
            expected: "[0, 1]",
        });
    }
    if !(log2_class_size >= 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "log2_class_size",
            value: log2_class_size,
            expected: ">= 0",
        });
    }
    let exponent = log2_class_size + 1.0 - 2.0 * n as f64 * eps * eps * LOG2_E;
    Ok(exponent.min(0.0))
}

/// Hoeffding deviation for the partition argument: `e^(-2n(1-r)²ε²)` with
/// the slack split `r ∈ [0,1]`.
pub fn hoeffding_partition_bound(n: u64, eps: f64, r: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ParamOutOfRange {
            name: "n",
            value: 0.0,
            expected: ">= 1",
        });
    }
    check_open_unit("eps", eps)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::ParamOutOfRange {
            name: "r",
            value: r,
            expected: "[0, 1]",
        });
    }
    Ok((-2.0 * n as f64 * (1.0 - r) * (1.0 - r) * eps * eps).exp())
}

/// Mass a distribution of entropy `h` bits can place on symbols less likely
/// than `alpha`: `h / log₂(1/α)`, clipped to `[0, 1]`.
pub fn markov_entropy_tail(h: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ParamOutOfRange {
            name: "alpha",
            value: alpha,
            expected: "(0, 1)",
        });
    }
    markov_entropy_tail_log2(h, alpha.log2())
}

/// Log₂-domain variant of [`markov_entropy_tail`], taking `log₂ α` directly
/// so callers holding exact exponents keep them exact.
pub fn markov_entropy_tail_log2(h: f64, log2_alpha: f64) -> Result<f64> {
    check_nonnegative("h", h)?;
    if !(log2_alpha < 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "log2_alpha",
            value: log2_alpha,
            expected: "< 0",
        });
    }
    Ok((h / -log2_alpha).min(1.0))
}

/// Atypicality of a factorized source at entropy slack `eps`: `1 - e^(-ε)`.
pub fn factorized_tail_bound(eps: f64) -> Result<f64> {
    check_open_unit("eps", eps)?;
    Ok(-(-eps).exp_m1())
}

/// Probability that at least one of `l` independent `Bernoulli(z)` events
/// fires: `1 - (1-z)^l`, the extremal tail for unions at per-event mass `z`.
/// Established only for `z ≤ 1/(2l-1)`.
pub fn m_l(z: f64, l: u64) -> Result<f64> {
    if l == 0 {
        return Err(Error::ParamOutOfRange {
            name: "l",
            value: 0.0,
            expected: ">= 1",
        });
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::ParamOutOfRange {
            name: "z",
            value: z,
            expected: "[0, 1]",
        });
    }
    if z > 1.0 / (2.0 * l as f64 - 1.0) {
        return Err(Error::UnionMassOutOfValidity { z, l });
    }
    Ok(-(l as f64 * (-z).ln_1p()).exp_m1())
}

/// Monte Carlo estimate of `Pr{ Σ Zᵢ ≥ 1 }` for `Zᵢ` i.i.d. `Bernoulli(z)`,
/// the construction attaining the union tail; converges to `1 - (1-z)^l`.
pub fn m_l_achievability(z: f64, l: u64, trials: u64, seed: u64) -> Result<f64> {
    if l == 0 || trials == 0 {
        return Err(Error::ParamOutOfRange {
            name: if l == 0 { "l" } else { "trials" },
            value: 0.0,
            expected: ">= 1",
        });
    }
    if !(0.0..1.0).contains(&z) {
        return Err(Error::ParamOutOfRange {
            name: "z",
            value: z,
            expected: "[0, 1)",
        });
    }
    let binomial = Binomial::new(l, z).expect("validated parameters");
    let mut hits = 0u64;
    for i in 0..trials {
        let mut rng = CounterRng::new(chain(seed, &[i]));
        if binomial.sample(&mut rng) >= 1 {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

/// Chebyshev bound on the same atypicality event, deliberately unclipped:
/// `L·σ²_{H(W)} / (H(X)²·((1-ε)/ε)²)` exceeds 1 for long factorized sources,
/// which is exactly the weakness the factorized bound repairs.
pub fn chebyshev_tail_bound(l: u64, var_hw_bits2: f64, h_x: f64, eps: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::ParamOutOfRange {
            name: "l",
            value: 0.0,
            expected: ">= 1",
        });
    }
    check_nonnegative("var_hw_bits2", var_hw_bits2)?;
    if !(h_x.is_finite() && h_x > 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "h_x",
            value: h_x,
            expected: "> 0",
        });
    }
    check_open_unit("eps", eps)?;
    let ratio = (1.0 - eps) / eps;
    Ok(l as f64 * var_hw_bits2 / (h_x * h_x * ratio * ratio))
}

/// Parameters certifying that a source is minorized: every symbol has
/// probability at least `eta`, witnessed by the actual minimum `p_min` and a
/// constant `big_c > 1/p_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedClassParams {
    pub eta: f64,
    pub p_min: f64,
    pub big_c: f64,
}

impl RestrictedClassParams {
    pub fn new(eta: f64, p_min: f64, big_c: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= p_min && p_min <= 1.0) {
            return Err(Error::ParamOutOfRange {
                name: "eta",
                value: eta,
                expected: "0 < eta <= p_min <= 1",
            });
        }
        if !(big_c * p_min > 1.0) {
            return Err(Error::ParamOutOfRange {
                name: "big_c",
                value: big_c,
                expected: "> 1/p_min",
            });
        }
        Ok(Self { eta, p_min, big_c })
    }

    /// Parameters for the loosest source a given constant admits:
    /// `p_min = 1.01/C`, `eta = p_min`.
    pub fn with_big_c(big_c: f64) -> Result<Self> {
        if !(big_c.is_finite() && big_c >= 1.01) {
            return Err(Error::ParamOutOfRange {
                name: "big_c",
                value: big_c,
                expected: ">= 1.01",
            });
        }
        let p_min = 1.01 / big_c;
        Self::new(p_min, p_min, big_c)
    }
}

/// Accepts a source iff its minimum positive-probability symbol is at least
/// `eta` (zero-probability symbols are pruned first), returning the smallest
/// admissible constant with a 1% margin: `big_c = 1.01/p_min`.
pub fn restricted_class_check(p: &Pmf, eta: f64) -> Result<RestrictedClassParams> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::ParamOutOfRange {
            name: "eta",
            value: eta,
            expected: "(0, 1]",
        });
    }
    let min_log2 = p
        .min_positive_log2_prob()
        .expect("a normalized pmf has positive mass");
    let p_min = if let Some(table) = p.dense() {
        table
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min)
    } else {
        min_log2.exp2()
    };
    if p_min < eta {
        return Err(Error::MinProbBelowEta { p_min, eta });
    }
    RestrictedClassParams::new(eta, p_min, 1.01 / p_min)
}

/// Sample count the restricted-class bound asks for once logarithmic terms
/// are dropped: `C² · log₂(1/δ) · Î(X;X̂) / ε²`.
pub fn prior_bound_samples(
    rc: &RestrictedClassParams,
    delta: f64,
    i_hat: f64,
    eps: f64,
) -> Result<f64> {
    check_open_unit("delta", delta)?;
    check_open_unit("eps", eps)?;
    check_nonnegative("i_hat", i_hat)?;
    Ok(rc.big_c * rc.big_c * log_inv_confidence(delta) * i_hat / (eps * eps))
}

/// Expected cross-entropy loss of predicting `Y` through the bottleneck:
/// `E[-Σ_x̂ p(x̂|X) log₂ p(Y|x̂)]`, with the decoder posterior obtained from
/// `joint` and `enc` by exact marginalization. Zero-mass cells contribute 0.
pub fn cross_entropy_risk(enc: &Encoder, joint: &JointPmf) -> f64 {
    let k = enc.k();
    let n = joint.x_support();
    let cell_y: Vec<[f64; 2]> = (0..k)
        .map(|c| {
            [
                kahan_sum((0..n).map(|x| joint.prob(x, 0) * enc.prob(x as u128, c))),
                kahan_sum((0..n).map(|x| joint.prob(x, 1) * enc.prob(x as u128, c))),
            ]
        })
        .collect();
    kahan_sum((0..n).flat_map(|x| {
        let cell_y = &cell_y;
        (0..k).flat_map(move |c| {
            (0..2u8).map(move |y| {
                let weight = joint.prob(x, y) * enc.prob(x as u128, c);
                if weight == 0.0 {
                    return 0.0;
                }
                let mass = cell_y[c][0] + cell_y[c][1];
                let posterior = cell_y[c][y as usize] / mass;
                -weight * posterior.log2()
            })
        })
    }))
}

/// [`cross_entropy_risk`] against the empirical distribution of a sample.
pub fn empirical_cross_entropy_risk(enc: &Encoder, sample: &crate::dist::Dataset) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let support = sample
        .pairs()
        .iter()
        .map(|&(x, _)| x)
        .max()
        .expect("nonempty")
        + 1;
    Ok(cross_entropy_risk(enc, &sample.empirical(support)?))
}

/// Side-by-side audit of the headline sample-complexity formula against the
/// bookkeeping of its own argument (split `r`, inner accuracy `ε' = ε/3`,
/// class of all labelings of the `α`-probable set).
#[derive(Debug, Clone, Copy)]
pub struct SampleComplexityAudit {
    /// The headline count `(2^(6h/ε) + log₂(1/δ)) / ε²`.
    pub headline: BoundValue,
    /// Slack split used by the bookkeeping.
    pub r: f64,
    /// Inner accuracy `ε' = ε/3`.
    pub eps_inner: f64,
    /// `log₂` of the class size `2^(2^(h/(r·ε')))` the bookkeeping covers.
    pub log2_class_size: f64,
    /// `log₂` of the total failure probability when the headline count is
    /// plugged back into the bookkeeping.
    pub headline_total_failure_log2: f64,
    /// Whether the headline count drives the total failure below `delta`.
    pub headline_holds: bool,
    /// `log₂` of the count read verbatim off the final display:
    /// `(2^(h/(r·ε'²)) + 2 + log₂(1/δ)) / (2·log₂e·(1-r)²·ε')`.
    pub verbatim_log2_n: f64,
    pub verbatim_holds: bool,
    /// `log₂` of the count with the exponent and denominator exchanged:
    /// `(2^(h/(r·ε')) + 2 + log₂(1/δ)) / (2·log₂e·(1-r)²·ε'²)`.
    pub corrected_log2_n: f64,
    pub corrected_holds: bool,
}

/// Evaluates, in the log₂ domain, the total failure probability
/// `min(1, 2^class·2·e^(-2nε'²)) + e^(-2n(1-r)²ε'²)` at sample size `n`.
fn bookkeeping_failure_log2(log2_class: f64, n: f64, eps_inner: f64, r: f64) -> f64 {
    let uniform_term =
        (log2_class + 1.0 - 2.0 * n * eps_inner * eps_inner * LOG2_E).min(0.0);
    let partition_term = -2.0 * n * (1.0 - r) * (1.0 - r) * eps_inner * eps_inner * LOG2_E;
    log2_add(uniform_term, partition_term)
}

/// Plugs the headline sample-complexity count, and both readings of the
/// final proof display, back into the union-bound bookkeeping and reports
/// which of them actually drive the failure probability below `delta`.
pub fn sample_complexity_audit(h: f64, eps: f64, delta: f64, r: f64) -> Result<SampleComplexityAudit> {
    check_nonnegative("h", h)?;
    check_open_unit("eps", eps)?;
    check_open_unit("delta", delta)?;
    check_open_unit("r", r)?;
    let eps_inner = eps / 3.0;
    let log2_class_size = (h / (r * eps_inner)).exp2();
    let log2_delta = delta.log2();

    let headline = sample_complexity(h, eps, delta)?;
    let require_linear = |log2_n: f64| -> Result<f64> {
        exp2_checked(log2_n).ok_or(Error::ParamOutOfRange {
            name: "n",
            value: log2_n,
            expected: "log2 of a linearly representable count",
        })
    };
    let headline_n = require_linear(headline.log2_value)?;
    let headline_total_failure_log2 =
        bookkeeping_failure_log2(log2_class_size, headline_n, eps_inner, r);

    let denom_verbatim = 2.0 * LOG2_E * (1.0 - r) * (1.0 - r) * eps_inner;
    let verbatim_log2_n =
        log2_add_linear(h / (r * eps_inner * eps_inner), 2.0 + log_inv_confidence(delta))
            - denom_verbatim.log2();
    let denom_corrected = 2.0 * LOG2_E * (1.0 - r) * (1.0 - r) * eps_inner * eps_inner;
    let corrected_log2_n =
        log2_add_linear(h / (r * eps_inner), 2.0 + log_inv_confidence(delta))
            - denom_corrected.log2();

    let verbatim_total =
        bookkeeping_failure_log2(log2_class_size, require_linear(verbatim_log2_n)?, eps_inner, r);
    let corrected_total = bookkeeping_failure_log2(
        log2_class_size,
        require_linear(corrected_log2_n)?,
        eps_inner,
        r,
    );

    Ok(SampleComplexityAudit {
        headline,
        r,
        eps_inner,
        log2_class_size,
        headline_total_failure_log2,
        headline_holds: headline_total_failure_log2 <= log2_delta,
        verbatim_log2_n,
        verbatim_holds: verbatim_total <= log2_delta,
        corrected_log2_n,
        corrected_holds: corrected_total <= log2_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_hteld, FactorizedBernoulli};
    use crate::dist::Dataset;
    use crate::hypotheses::tail_mass;
    use crate::learners::overfit_encoder;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} within {tol:e}"
        );
    }

    #[test]
    fn sample_complexity_matches_direct_arithmetic() {
        let b = sample_complexity(1.0, 0.6, 0.1).unwrap();
        assert_close(b.log2_value, 11.478603817540432, 1e-11);
        assert_close(b.linear_value.unwrap(), 2853.6720224857982, 1e-8);

        let big = sample_complexity(2.0, 0.01, 0.5).unwrap();
        assert_close(big.log2_value, 1213.2877123795494, 1e-9);
        assert_eq!(big.linear_value, None, "2^1213 exceeds double range");

        let small = sample_complexity(0.0, 0.5, 0.5).unwrap();
        assert_eq!(small.log2_value, 3.0);
        assert_eq!(small.linear_value, Some(8.0));
    }

    #[test]
    fn lower_bound_reaches_two_to_the_hundred() {
        let b = hteld_lower_bound(2.0, 0.01).unwrap();
        assert_eq!(b.log2_value, 100.0);
        assert_eq!(b.linear_value, Some(100f64.exp2()));

        for eps in [0.1, 0.5, 0.9] {
            let unit = hteld_lower_bound(1.0, eps).unwrap();
            assert_eq!(unit.log2_value, 0.0);
            assert_eq!(unit.linear_value, Some(1.0));
        }

        let kilo = hteld_lower_bound(2.0, 0.1).unwrap();
        assert_eq!(kilo.log2_value, 10.0);
        assert_eq!(kilo.linear_value, Some(1024.0));
    }

    #[test]
    fn finite_class_bound_oracle_and_clipping() {
        let b = finite_class_bound(16, 1000, 0.1).unwrap();
        assert_close(b, 6.595691591803385e-8, 1e-20);
        assert_eq!(finite_class_bound(16, 1000, 0.0).unwrap(), 1.0);
        let mut prev = 1.0;
        for n in [10u64, 100, 1000, 10000, 100000] {
            let v = finite_class_bound(1000, n, 0.05).unwrap();
            assert!(v <= prev, "bound must fall as n grows");
            prev = v;
        }
        assert!(finite_class_bound(0, 10, 0.1).is_err());
        assert!(finite_class_bound(4, 0, 0.1).is_err());
    }

    #[test]
    fn hoeffding_partition_bound_oracle_and_edges() {
        let b = hoeffding_partition_bound(1000, 0.1, 0.5).unwrap();
        assert_close(b, 6.7379469990854671e-3, 1e-15);
        assert_eq!(hoeffding_partition_bound(50, 0.3, 1.0).unwrap(), 1.0);
        let plain = hoeffding_partition_bound(50, 0.3, 0.0).unwrap();
        assert_close(plain, (-2.0f64 * 50.0 * 0.09).exp(), 1e-16);
    }

    #[test]
    fn markov_tail_identity_is_exact_at_the_matched_threshold() {
        for eps in [0.5, 0.25, 0.125, 0.0625] {
            for h in [0.3, 1.0, 2.7, 40.0] {
                let got = markov_entropy_tail_log2(h, -(h / eps)).unwrap();
                assert_eq!(got, eps, "h={h}, eps={eps}");
            }
        }
        assert_eq!(markov_entropy_tail(1.0, 1.0 / 16.0).unwrap(), 0.25);
        assert_eq!(markov_entropy_tail(5.0, 0.5).unwrap(), 1.0, "clipped");
        assert!(markov_entropy_tail(1.0, 1.0).is_err());
        assert!(markov_entropy_tail(1.0, 1.5).is_err());
    }

    #[test]
    fn markov_tail_dominates_actual_tail_mass() {
        for seed in 0..1000u64 {
            let mut rng = CounterRng::new(chain(303, &[seed]));
            let n = 2 + rng.next_below(49) as usize;
            let weights: Vec<f64> = (0..n).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
            let p = Pmf::from_weights(&weights).unwrap();
            let alpha = 10f64.powf(-6.0 * rng.next_f64().max(1e-12));
            if alpha >= 1.0 {
                continue;
            }
            let tail = tail_mass(&p, alpha).unwrap();
            let markov = markov_entropy_tail(p.entropy_bits(), alpha).unwrap();
            assert!(
                tail <= markov,
                "seed {seed}: tail {tail} exceeds markov {markov} at alpha {alpha}"
            );
        }
    }

    #[test]
    fn factorized_tail_beats_the_slack_everywhere() {
        assert_close(factorized_tail_bound(0.5).unwrap(), 0.39346934028736658, 1e-16);
        for i in 1..1000u32 {
            let eps = i as f64 / 1000.0;
            let b = factorized_tail_bound(eps).unwrap();
            assert!(b <= eps, "1 - e^-eps must stay below eps at {eps}");
        }
        let eps = 1e-3;
        assert_close(
            factorized_tail_bound(eps).unwrap() / eps,
            0.99950016662500833,
            1e-12,
        );
    }

    #[test]
    fn union_tail_closed_form_and_validity_region() {
        assert_close(m_l(0.1, 3).unwrap(), 0.271, 1e-15);
        assert_close(m_l(0.05, 9).unwrap(), 0.369750590275390625, 1e-12);
        assert_close(m_l(0.01, 50).unwrap(), 0.39499393286246335, 1e-12);
        assert_close(m_l(0.9, 1).unwrap(), 0.9, 1e-15);
        assert_eq!(m_l(0.0, 7).unwrap(), 0.0);
        assert!(matches!(
            m_l(0.3, 3),
            Err(Error::UnionMassOutOfValidity { .. })
        ));
        assert!(m_l(0.1, 0).is_err());
    }

    #[test]
    fn union_tail_simulation_matches_the_closed_form() {
        let trials = 200_000u64;
        for (z, l) in [(0.3, 1u64), (0.1, 5)] {
            let closed = -(l as f64 * (-z as f64).ln_1p()).exp_m1();
            let est = m_l_achievability(z, l, trials, 11).unwrap();
            let se = (closed * (1.0 - closed) / trials as f64).sqrt();
            assert_close(est, closed, 3.0 * se);
        }
        assert_eq!(m_l_achievability(0.0, 5, 1000, 3).unwrap(), 0.0);
    }

    #[test]
    fn chebyshev_bound_is_linear_in_length_and_vacuous_when_long() {
        let fb = FactorizedBernoulli::new(1 << 20, (-20f64).exp2()).unwrap();
        let bound = chebyshev_tail_bound(
            1 << 20,
            fb.surprisal_variance_bits2(),
            fb.total_entropy_bits(),
            0.9,
        )
        .unwrap();
        assert_close(bound, 70.467007038567473, 1e-7);
        assert!(bound > 1.0, "long factorized sources make it vacuous");

        let single = chebyshev_tail_bound(100, 0.3, 4.0, 0.2).unwrap();
        let double = chebyshev_tail_bound(200, 0.3, 4.0, 0.2).unwrap();
        assert_close(double, 2.0 * single, 1e-12 * double.abs());

        let mut prev = 0.0;
        for eps in [0.5, 0.9, 0.99, 0.999] {
            let v = chebyshev_tail_bound(100, 0.3, 4.0, eps).unwrap();
            assert!(v > prev, "bound must blow up as eps -> 1");
            prev = v;
        }
    }

    #[test]
    fn restricted_class_acceptance_and_rejection() {
        let rc = restricted_class_check(&Pmf::uniform(4).unwrap(), 0.2).unwrap();
        assert_eq!(rc.p_min, 0.25);
        assert!(rc.big_c > 4.0 && rc.big_c < 4.05);

        let spec = build_hteld(2.0, 0.1).unwrap();
        match restricted_class_check(&spec.pmf(), 0.01) {
            Err(Error::MinProbBelowEta { p_min, .. }) => {
                assert!(p_min < 1e-5, "tail atom is tiny");
            }
            other => panic!("expected rejection, got {other:?}"),
        }

        let point = Pmf::point_mass(8, 3).unwrap();
        let rc = restricted_class_check(&point, 0.5).unwrap();
        assert_eq!(rc.p_min, 1.0, "zero-probability symbols are pruned");
    }

    #[test]
    fn prior_bound_oracle_and_monotonicity() {
        let rc = RestrictedClassParams::with_big_c(100.0).unwrap();
        let b = prior_bound_samples(&rc, 0.1, 1.0, 0.1).unwrap();
        assert_close(b, 3321928.0948873623, 1e-6);
        assert_eq!(prior_bound_samples(&rc, 0.1, 0.0, 0.1).unwrap(), 0.0);

        let base = prior_bound_samples(&rc, 0.2, 1.0, 0.1).unwrap();
        let bigger_c = RestrictedClassParams::with_big_c(150.0).unwrap();
        assert!(prior_bound_samples(&bigger_c, 0.2, 1.0, 0.1).unwrap() > base);
        assert!(prior_bound_samples(&rc, 0.2, 2.0, 0.1).unwrap() > base);
        assert!(prior_bound_samples(&rc, 0.2, 1.0, 0.05).unwrap() > base);
        assert!(prior_bound_samples(&rc, 0.1, 1.0, 0.1).unwrap() > base);

        for n in [4usize, 16, 64] {
            let p = Pmf::uniform(n).unwrap();
            let rc = restricted_class_check(&p, 1.0 / n as f64 / 2.0).unwrap();
            assert!(rc.big_c > n as f64, "C must exceed the support size");
            let bound = prior_bound_samples(&rc, 0.1, 1.0, 0.1).unwrap();
            let floor = (n * n) as f64 * (1.0f64 / 0.1).log2() * 1.0 / 0.01;
            assert!(bound > floor);
        }
    }

    #[test]
    fn cross_entropy_risk_extremes() {
        let joint = JointPmf::from_rows(vec![[0.25, 0.0], [0.0, 0.25], [0.35, 0.0], [0.0, 0.15]])
            .unwrap();
        let identity = Encoder::from_assignments(
            &(0..4u128).map(|x| (x, x as usize)).collect(),
            4,
            0,
        )
        .unwrap();
        assert_eq!(cross_entropy_risk(&identity, &joint), 0.0);

        let constant = Encoder::from_assignments(
            &(0..4u128).map(|x| (x, 0usize)).collect(),
            1,
            0,
        )
        .unwrap();
        let [p0, p1] = joint.y_marginal();
        let hy = -p0 * p0.log2() - p1 * p1.log2();
        assert_close(cross_entropy_risk(&constant, &joint), hy, 1e-12);

        let sample =
            Dataset::new(vec![(0, 0), (1, 1), (2, 0), (3, 1)], 0, "t".into()).unwrap();
        let enc = overfit_encoder(&sample).unwrap();
        assert_eq!(
            empirical_cross_entropy_risk(&enc, &sample).unwrap(),
            0.0,
            "memorized cells have one-hot posteriors"
        );
    }

    #[test]
    fn headline_count_fails_its_own_bookkeeping_but_the_proof_forms_pass() {
        let audit = sample_complexity_audit(1.0, 0.6, 0.1, 0.5).unwrap();
        assert_eq!(audit.log2_class_size, 1024.0, "class is 2^(2^10)");
        assert!(
            !audit.headline_holds,
            "the doubly-exponential class dwarfs the headline count"
        );
        assert!(
            audit.headline_total_failure_log2 > -1e-6,
            "failure probability is essentially 1, got log2 {}",
            audit.headline_total_failure_log2
        );
        assert!(audit.verbatim_holds);
        assert!(audit.corrected_holds);
        assert!(audit.headline.log2_value < audit.corrected_log2_n);
        assert!(audit.corrected_log2_n < audit.verbatim_log2_n);
    }

    #[test]
    fn bound_value_linear_shadow_tracks_the_log() {
        for log2 in [-40.0, 0.0, 10.0, 1000.0] {
            let b = BoundValue::from_log2(log2);
            let lin = b.linear_value.unwrap();
            assert!((lin.log2() - log2).abs() < 1e-9 * log2.abs().max(1.0));
        }
        assert_eq!(BoundValue::from_log2(1100.0).linear_value, None);
    }
}
