//! Base-2 log-domain arithmetic and compensated summation.
//!
//! Tail probabilities in this crate range down to 2^-2000 and class sizes up
//! to 2^(2^k); quantities at that scale are carried as `log2(value)` and only
//! mapped to linear doubles when representable.

pub const LN_2: f64 = std::f64::consts::LN_2;

/// `log2(1 + x)` computed without cancellation for small `x`.
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// `log2(2^a + 2^b)` without overflow.
pub fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + log2_1p((lo - hi).exp2())
}

/// `log2(2^a + c)` for linear `c >= 0`.
pub fn log2_add_linear(a: f64, c: f64) -> f64 {
    assert!(c >= 0.0, "linear addend must be nonnegative");
    if c == 0.0 {
        a
    } else {
        log2_add(a, c.log2())
    }
}

/// `2^x` when finite and nonzero in double precision, else `None`.
pub fn exp2_checked(x: f64) -> Option<f64> {
    if x == f64::NEG_INFINITY {
        return Some(0.0);
    }
    let v = x.exp2();
    if v.is_finite() && v > 0.0 {
        Some(v)
    } else {
        None
    }
}

/// Kahan–Babuška compensated sum; error stays at rounding level independent
/// of the number of terms.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_add_matches_linear_when_representable() {
        let got = log2_add(3.0, 1.0);
        assert!((got - 10.0f64.log2()).abs() < 1e-14, "got {got}");
    }

    #[test]
    fn log2_add_is_stable_at_extreme_separation() {
        assert_eq!(log2_add(1200.0, -1200.0), 1200.0);
        assert_eq!(log2_add(f64::NEG_INFINITY, 5.0), 5.0);
    }

    #[test]
    fn log2_add_linear_matches_plain_addition() {
        let got = log2_add_linear(10.0, 3.321928094887362);
        assert!((got - (1024.0f64 + 3.321928094887362).log2()).abs() < 1e-14);
    }

    #[test]
    fn exp2_checked_refuses_overflow_and_underflow() {
        assert_eq!(exp2_checked(10.0), Some(1024.0));
        assert_eq!(exp2_checked(2000.0), None);
        assert_eq!(exp2_checked(-2000.0), None);
        assert_eq!(exp2_checked(f64::NEG_INFINITY), Some(0.0));
    }

    #[test]
    fn kahan_sum_recovers_unit_total() {
        let n = 1_000_000;
        let part = 1.0 / n as f64;
        let total = kahan_sum((0..n).map(|_| part));
        assert!((total - 1.0).abs() < 1e-15, "total {total}");
    }
}
