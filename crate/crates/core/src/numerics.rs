//! Shared numerical kernels: log-factorials, compensated summation, and the
//! sign-tracked alternating-series evaluator with its arbitrary-precision
//! fallback.

use std::cell::RefCell;
use std::sync::OnceLock;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative error above which an f64 series evaluation is redone in extended
/// precision.
pub const REL_ERR_LIMIT: f64 = 1e-8;

/// First precision tried by the extended-precision path (bits).
pub const EXTENDED_MIN_BITS: usize = 192;

/// Hard ceiling on extended precision (bits); exceeding it is a precision-loss
/// error.
pub const EXTENDED_MAX_BITS: usize = 16_384;

const LN_FACT_TABLE: usize = 4096;

const RM: RoundingMode = RoundingMode::ToEven;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(LN_FACT_TABLE + 1);
        let mut acc = CompensatedSum::new();
        out.push(0.0);
        for i in 1..=LN_FACT_TABLE {
            acc.add((i as f64).ln());
            out.push(acc.value());
        }
        out
    })
}

/// Natural log of `n!`.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_fact_table();
    if n <= LN_FACT_TABLE {
        return table[n];
    }
    // Stirling series, far past the point where its truncation matters.
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Componentwise compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexCompensatedSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexCompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: Complex64) {
        self.re.add(value.re);
        self.im.add(value.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// A real number stored as `sign * exp(log_magnitude)`.
///
/// Zero is represented by `log_magnitude == -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTerm {
    pub log_magnitude: f64,
    pub negative: bool,
}

impl LogTerm {
    pub const ZERO: LogTerm = LogTerm {
        log_magnitude: f64::NEG_INFINITY,
        negative: false,
    };

    pub fn new(log_magnitude: f64, negative: bool) -> Self {
        Self {
            log_magnitude,
            negative,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_magnitude == f64::NEG_INFINITY
    }

    /// Multiplies by `exp(log_factor)` and flips the sign when `negate`.
    pub fn scale(self, log_factor: f64, negate: bool) -> Self {
        if self.is_zero() {
            return self;
        }
        Self::new(self.log_magnitude + log_factor, self.negative ^ negate)
    }

    pub fn to_f64(self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let m = self.log_magnitude.exp();
        if self.negative {
            -m
        } else {
            m
        }
    }
}

/// Result of evaluating a finite real series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesValue {
    pub value: LogTerm,
    /// Estimated relative error of `value`.
    pub relative_error: f64,
    /// Precision used when the extended path was needed.
    pub extended_bits: Option<usize>,
}

/// Sum and absolute sum of a series evaluated at a given precision.
pub struct BigSeries {
    pub sum: BigFloat,
    pub abs_sum: BigFloat,
    pub terms: usize,
}

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

/// Runs `f` with this thread's astro-float constants cache.
pub fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// `log2 |x|` of a finite nonzero big float, or `-inf` for zero.
fn big_log2_abs(x: &BigFloat) -> f64 {
    let Some((words, _, _, exponent, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let Some(&top) = words.last() else {
        return f64::NEG_INFINITY;
    };
    if top == 0 {
        return f64::NEG_INFINITY;
    }
    // mantissa is normalized into [1/2, 1)
    let frac = top as f64 / 2f64.powi(64);
    frac.log2() + exponent as f64
}

fn big_to_logterm(x: &BigFloat) -> LogTerm {
    if x.is_zero() {
        return LogTerm::ZERO;
    }
    let negative = matches!(x.sign(), Some(Sign::Neg));
    LogTerm::new(big_log2_abs(x) * std::f64::consts::LN_2, negative)
}

/// Evaluates a finite real series given term-by-term in log form.
///
/// Terms are sorted by descending magnitude and accumulated with compensated
/// summation. When the cancellation estimate `cond * eps` exceeds
/// [`REL_ERR_LIMIT`], `extended` is called with increasing precision until the
/// big-float result is accurate to double precision.
pub fn sum_series<F>(mut terms: Vec<LogTerm>, mut extended: F) -> Result<SeriesValue>
where
    F: FnMut(usize, &mut Consts) -> BigSeries,
{
    terms.retain(|t| !t.is_zero());
    if terms.is_empty() {
        return Ok(SeriesValue {
            value: LogTerm::ZERO,
            relative_error: 0.0,
            extended_bits: None,
        });
    }
    terms.sort_by(|a, b| b.log_magnitude.total_cmp(&a.log_magnitude));
    let lead = terms[0].log_magnitude;
    let mut signed = CompensatedSum::new();
    let mut absolute = CompensatedSum::new();
    let mut log_scale = 0.0f64;
    for t in &terms {
        let r = (t.log_magnitude - lead).exp();
        signed.add(if t.negative { -r } else { r });
        absolute.add(r);
        log_scale = log_scale.max(t.log_magnitude.abs());
    }
    let s = signed.value();
    let a = absolute.value();
    let eps_eff = f64::EPSILON * (terms.len() as f64 + log_scale + 8.0);
    let estimate = if s == 0.0 { f64::INFINITY } else { a / s.abs() * eps_eff };
    if estimate <= REL_ERR_LIMIT {
        return Ok(SeriesValue {
            value: LogTerm::new(lead + s.abs().ln(), s < 0.0),
            relative_error: estimate,
            extended_bits: None,
        });
    }

    // Seed the precision from the f64 cancellation estimate where it is usable.
    let mut bits = EXTENDED_MIN_BITS;
    if estimate.is_finite() {
        let need = (a / s.abs()).log2().ceil() as usize + 128;
        bits = bits.max(need.next_power_of_two());
    }
    let mut zero_seen = false;
    with_consts(|cc| loop {
        let big = extended(bits, cc);
        if big.sum.is_zero() {
            // an exact cancellation survives a doubling of the precision
            if zero_seen {
                return Ok(SeriesValue {
                    value: LogTerm::ZERO,
                    relative_error: 0.0,
                    extended_bits: Some(bits),
                });
            }
            zero_seen = true;
        }
        let sum_l2 = big_log2_abs(&big.sum);
        let abs_l2 = big_log2_abs(&big.abs_sum);
        let cond_l2 = abs_l2 - sum_l2;
        let err_l2 = cond_l2 - bits as f64 + ((big.terms + 8) as f64).log2();
        let estimate = err_l2.exp2();
        if sum_l2.is_finite() && estimate <= 1e-15 {
            return Ok(SeriesValue {
                value: big_to_logterm(&big.sum),
                relative_error: estimate.max(f64::EPSILON),
                extended_bits: Some(bits),
            });
        }
        if bits >= EXTENDED_MAX_BITS {
            return Err(Error::PrecisionLoss { estimate, bits });
        }
        bits *= 2;
    })
}

/// Big-float helpers used by the extended-precision closures.
pub mod big {
    use super::*;

    pub fn from_usize(n: usize, p: usize) -> BigFloat {
        BigFloat::from_u64(n as u64, p)
    }

    pub fn from_f64(x: f64, p: usize) -> BigFloat {
        BigFloat::from_f64(x, p)
    }

    pub fn add(a: &BigFloat, b: &BigFloat, p: usize) -> BigFloat {
        a.add(b, p, RM)
    }

    pub fn mul(a: &BigFloat, b: &BigFloat, p: usize) -> BigFloat {
        a.mul(b, p, RM)
    }

    pub fn div(a: &BigFloat, b: &BigFloat, p: usize) -> BigFloat {
        a.div(b, p, RM)
    }

    /// `n!` as a big float (exact while it fits in `p` bits).
    pub fn factorial(n: usize, p: usize) -> BigFloat {
        let mut acc = from_usize(1, p);
        for i in 2..=n {
            acc = mul(&acc, &from_usize(i, p), p);
        }
        acc
    }

    pub fn sinh(x: f64, p: usize, cc: &mut Consts) -> BigFloat {
        from_f64(x, p).sinh(p, RM, cc)
    }

    pub fn abs(x: &BigFloat) -> BigFloat {
        x.abs()
    }

    pub fn neg(x: &BigFloat) -> BigFloat {
        x.neg()
    }

    pub fn zero(p: usize) -> BigFloat {
        BigFloat::new(p)
    }

    /// Adds `term` to a running sum and its absolute value to a running
    /// absolute sum.
    pub fn accumulate(sum: &mut BigFloat, abs_sum: &mut BigFloat, term: &BigFloat, p: usize) {
        *sum = add(sum, term, p);
        *abs_sum = add(abs_sum, &abs(term), p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-15);
        // 20! = 2432902008176640000
        assert!((ln_factorial(20) - 2432902008176640000f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn ln_factorial_table_matches_stirling_at_the_seam() {
        let n = LN_FACT_TABLE;
        let x = n as f64 + 1.0;
        let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x);
        assert!((ln_factorial(n) - stirling).abs() / stirling < 1e-14);
        let next = ln_factorial(n + 1) - ln_factorial(n);
        assert!((next - ((n + 1) as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn compensated_sum_recovers_small_addends() {
        let mut values = vec![1.0, 1e100, 1.0, -1e100];
        assert_eq!(values.iter().sum::<f64>(), 0.0);
        assert_eq!(compensated_sum(values.drain(..)), 2.0);
    }

    #[test]
    fn big_float_round_trip_through_log() {
        let p = 256;
        for &x in &[0.75, -3.0, 1e-200, 12345.678] {
            let b = BigFloat::from_f64(x, p);
            let t = big_to_logterm(&b);
            // relative error is bounded by the f64 resolution of ln|x|
            let tol = 4.0 * f64::EPSILON * (1.0 + x.abs().ln().abs()) * x.abs();
            assert!((t.to_f64() - x).abs() <= tol, "{x} -> {}", t.to_f64());
        }
    }

    fn binomial_alternating(n: usize, x: f64) -> Vec<LogTerm> {
        // sum_k C(n,k) (-x)^k = (1-x)^n
        (0..=n)
            .map(|k| {
                let l = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k) + k as f64 * x.ln();
                LogTerm::new(l, k % 2 == 1)
            })
            .collect()
    }

    fn binomial_big(n: usize, x: f64) -> impl FnMut(usize, &mut Consts) -> BigSeries {
        move |p, _cc| {
            let bx = big::neg(&big::from_f64(x, p));
            let mut term = big::from_usize(1, p);
            let mut sum = big::zero(p);
            let mut abs_sum = big::zero(p);
            for k in 0..=n {
                big::accumulate(&mut sum, &mut abs_sum, &term, p);
                let ratio = big::div(&big::from_usize(n - k, p), &big::from_usize(k + 1, p), p);
                term = big::mul(&big::mul(&term, &ratio, p), &bx, p);
            }
            BigSeries {
                sum,
                abs_sum,
                terms: n + 1,
            }
        }
    }

    #[test]
    fn mild_series_stays_in_double_precision() {
        let v = sum_series(binomial_alternating(10, 0.25), binomial_big(10, 0.25)).unwrap();
        assert!(v.extended_bits.is_none());
        assert!((v.value.to_f64() - 0.75f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn heavy_cancellation_uses_extended_precision() {
        // (1 - 0.5)^200 from terms as large as C(200,100)/2^100 ~ 7e28
        let v = sum_series(binomial_alternating(200, 0.5), binomial_big(200, 0.5)).unwrap();
        assert!(v.extended_bits.is_some());
        let exact = -200.0 * std::f64::consts::LN_2;
        assert!((v.value.log_magnitude - exact).abs() < 1e-12);
        assert!(!v.value.negative);
    }

    #[test]
    fn empty_series_is_zero() {
        let v = sum_series(vec![], |_p, _cc| unreachable!()).unwrap();
        assert!(v.value.is_zero());
        assert_eq!(v.value.to_f64(), 0.0);
    }
}
