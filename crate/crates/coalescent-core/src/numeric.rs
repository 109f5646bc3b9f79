//! Exact arithmetic helpers shared by the closed-form laws and the oracles.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact probability carrier: reduced big-integer fraction.
pub type Rational = BigRational;

/// `n!` as an exact big integer.
pub fn factorial(n: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// The `m`-th Catalan number `C(2m, m) / (m + 1)`.
pub fn catalan(m: u64) -> BigUint {
    binomial(2 * m, m) / (m + 1)
}

pub fn ratio(num: BigUint, den: BigUint) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Lossy conversion used only at the float boundary (reports, time-dependent laws).
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a scaled division when numerator/denominator overflow f64.
        let bits = r.denom().bits().max(r.numer().bits());
        let shift = bits.saturating_sub(900);
        let num = r.numer() >> shift;
        let den = r.denom() >> shift;
        num.to_f64().unwrap_or(f64::NAN) / den.to_f64().unwrap_or(f64::NAN)
    })
}

/// Exact rational whose value is known to be a nonnegative integer.
///
/// Panics if the reduced denominator is not 1 or the value is negative; the
/// call sites are counting formulas where that would be a logic error.
pub fn expect_uint(r: &Rational) -> BigUint {
    assert!(r.denom().is_one(), "expected integer, got {r}");
    assert!(!r.numer().is_negative(), "expected nonnegative, got {r}");
    r.numer().to_biguint().expect("nonnegative")
}
