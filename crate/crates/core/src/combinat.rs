//! Log-space combinatorial primitives and special functions.
//!
//! Everything downstream works with natural logarithms of factorials and
//! probabilities so that raw quantities never overflow. Exact running sums
//! of `ln k` cover `n <= 1024`; beyond that a Stirling series over
//! Bernoulli numbers takes over with absolute error far below anything the
//! callers can resolve.

use std::sync::LazyLock;

use crate::error::{Error, Result};

/// Natural logarithm of a positive quantity, in nats.
///
/// Stored as the log itself; comparisons are plain value comparisons.
/// `Add`/`Sub` correspond to multiplying/dividing the underlying
/// quantities.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogReal(f64);

impl LogReal {
    pub fn new(ln_value: f64) -> Self {
        LogReal(ln_value)
    }

    /// The stored natural logarithm.
    pub fn value(self) -> f64 {
        self.0
    }

    /// Exponentiates back to the plain quantity.
    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

impl std::ops::Add for LogReal {
    type Output = LogReal;
    fn add(self, rhs: LogReal) -> LogReal {
        LogReal(self.0 + rhs.0)
    }
}

impl std::ops::Sub for LogReal {
    type Output = LogReal;
    fn sub(self, rhs: LogReal) -> LogReal {
        LogReal(self.0 - rhs.0)
    }
}

/// Bernoulli numbers B_2, B_4, ... driving the Stirling series.
///
/// Signed values in the modern convention, so the alternating signs of the
/// series are already folded in; `b2n[0]` is exactly 1/6.
#[derive(Debug, Clone)]
pub struct BernoulliTable {
    b2n: Vec<f64>,
}

// B_2 .. B_20. Only B_2 is strictly needed for the accuracy targets here;
// the rest future-proof the series for very large arguments.
const B2N_STANDARD: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

static STANDARD_BERNOULLI: LazyLock<BernoulliTable> = LazyLock::new(|| BernoulliTable {
    b2n: B2N_STANDARD.to_vec(),
});

impl BernoulliTable {
    /// The built-in table B_2 through B_20.
    pub fn standard() -> &'static BernoulliTable {
        &STANDARD_BERNOULLI
    }

    pub fn b2n(&self) -> &[f64] {
        &self.b2n
    }

    pub fn len(&self) -> usize {
        self.b2n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b2n.is_empty()
    }
}

/// Largest argument answered from the exact running-sum table.
pub const EXACT_FACTORIAL_LIMIT: u64 = 1024;

const LN_TWO_PI: f64 = 1.837_877_066_409_345_3;

static LN_FACTORIAL_TABLE: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let mut table = Vec::with_capacity(EXACT_FACTORIAL_LIMIT as usize + 1);
    table.push(0.0);
    // compensated summation keeps every entry within an ulp of ln(n!)
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for k in 1..=EXACT_FACTORIAL_LIMIT {
        let term = (k as f64).ln() - carry;
        let next = sum + term;
        carry = (next - sum) - term;
        sum = next;
        table.push(sum);
    }
    table
});

/// ln(n!), exact running sum for `n <= 1024`, Stirling series above.
pub fn log_factorial(n: u64) -> LogReal {
    if n <= EXACT_FACTORIAL_LIMIT {
        LogReal(LN_FACTORIAL_TABLE[n as usize])
    } else {
        stirling_log_factorial(n, BernoulliTable::standard().len())
    }
}

/// ln C(n, k). Errs when `k > n`.
///
/// The subtraction order is canonical in (k, n-k), so
/// `log_binomial(n, k)` and `log_binomial(n, n - k)` are bit-identical.
pub fn log_binomial(n: u64, k: u64) -> Result<LogReal> {
    if k > n {
        return Err(Error::BinomialDomain { n, k });
    }
    let lo = k.min(n - k);
    let hi = k.max(n - k);
    Ok(LogReal(
        log_factorial(n).value() - log_factorial(hi).value() - log_factorial(lo).value(),
    ))
}

/// ln Γ(n+1) from the exact-form Stirling series truncated after `terms`
/// Bernoulli terms:
///
/// n! = (n+1)^(n+1/2) e^-(n+1) sqrt(2 pi) exp[Σ B_2k / (2k(2k-1)(n+1)^(2k-1))]
pub fn stirling_log_factorial(n: u64, terms: usize) -> LogReal {
    let table = BernoulliTable::standard();
    assert!(n >= 1, "stirling_log_factorial needs n >= 1");
    assert!(
        terms >= 1 && terms <= table.len(),
        "terms must be in 1..={}",
        table.len()
    );
    let z = (n + 1) as f64;
    let mut series = 0.0;
    let mut z_pow = z; // z^(2k-1)
    for (k, &b) in table.b2n().iter().enumerate().take(terms) {
        let two_k = 2 * (k + 1);
        series += b / ((two_k * (two_k - 1)) as f64 * z_pow);
        z_pow *= z * z;
    }
    LogReal((n as f64 + 0.5) * z.ln() - z + 0.5 * LN_TWO_PI + series)
}

/// x ln x with the 0 log 0 = 0 convention. Panics on negative input.
pub fn xlogx(x: f64) -> f64 {
    assert!(x >= 0.0, "xlogx needs a nonnegative argument, got {x}");
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Survival function of the chi-square distribution with `df` degrees of
/// freedom: Q(df/2, x/2), the regularized upper incomplete gamma function.
pub fn chi2_sf(x: f64, df: u64) -> f64 {
    assert!(x >= 0.0, "chi2_sf needs a nonnegative statistic, got {x}");
    assert!(df >= 1, "chi2_sf needs df >= 1");
    gamma_q(df as f64 / 2.0, x / 2.0, ln_gamma_half(df))
}

// ln Γ(df/2) for integer df >= 1. Even df reduces to a factorial; odd df
// uses Γ(k + 1/2) = (2k)! sqrt(pi) / (4^k k!).
fn ln_gamma_half(df: u64) -> f64 {
    if df.is_multiple_of(2) {
        log_factorial(df / 2 - 1).value()
    } else {
        let k = (df - 1) / 2;
        log_factorial(2 * k).value() - (2 * k) as f64 * std::f64::consts::LN_2
            - log_factorial(k).value()
            + 0.5 * std::f64::consts::PI.ln()
    }
}

fn gamma_q(a: f64, x: f64, ln_gamma_a: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - gamma_p_series(a, x, ln_gamma_a)).clamp(0.0, 1.0)
    } else {
        gamma_q_continued_fraction(a, x, ln_gamma_a).clamp(0.0, 1.0)
    }
}

// Series for the regularized lower incomplete gamma P(a, x); converges
// fast for x < a + 1.
fn gamma_p_series(a: f64, x: f64, ln_gamma_a: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma_a).exp()
}

// Modified Lentz continued fraction for Q(a, x), x >= a + 1.
fn gamma_q_continued_fraction(a: f64, x: f64, ln_gamma_a: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500u32 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma_a).exp() * h
}
