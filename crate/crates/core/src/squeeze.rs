//! Fock-basis matrix elements of the two-mode squeeze operator
//! `S(alpha) = exp(conj(alpha) a b - alpha a^dag b^dag)`.
//!
//! Every element is a short alternating series. Terms are carried as
//! log-magnitude plus sign so factorials never overflow, and sums that cancel
//! badly are redone in extended precision (see [`crate::numerics`]).
//!
//! Sign convention: for real positive `alpha` the element
//! `<m, m'| S |n, n'>` carries the sign `(-1)^m'` (the photon number of the
//! second mode on the *output* side). In particular `S|0,0>` has amplitudes
//! `sech r * (-tanh r)^k` on `|k,k>`. This agrees with a direct matrix
//! exponential of the generator (see [`crate::oracle`]).

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::RwLock;

use astro_float::Consts;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{big, ln_factorial, sum_series, BigSeries, LogTerm};

/// Below this magnitude the squeezer is replaced by the identity.
pub const IDENTITY_LIMIT: f64 = 1e-8;

/// Squeezing parameter `alpha = magnitude * exp(i phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub magnitude: f64,
    pub phase: f64,
}

impl SqueezeParams {
    /// Validates the magnitude and wraps the phase into `[0, 2pi)`.
    pub fn new(magnitude: f64, phase: f64) -> Result<Self> {
        if !magnitude.is_finite() || magnitude < 0.0 {
            return Err(Error::InvalidSqueeze(format!(
                "magnitude must be finite and non-negative, got {magnitude}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidSqueeze(format!("phase must be finite, got {phase}")));
        }
        let mut phase = phase.rem_euclid(TAU);
        if phase >= TAU {
            phase = 0.0;
        }
        Ok(Self { magnitude, phase })
    }

    /// Real positive squeezing `r`.
    pub fn real(r: f64) -> Result<Self> {
        Self::new(r, 0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.magnitude < IDENTITY_LIMIT
    }

    fn key(&self) -> (u64, u64) {
        (self.magnitude.to_bits(), self.phase.to_bits())
    }
}

fn ln_sinh(r: f64) -> f64 {
    if r > 20.0 {
        r - std::f64::consts::LN_2 + (-(-2.0 * r).exp()).ln_1p()
    } else {
        r.sinh().ln()
    }
}

fn ln_cosh(r: f64) -> f64 {
    if r > 20.0 {
        r - std::f64::consts::LN_2 + (-2.0 * r).exp().ln_1p()
    } else {
        r.cosh().ln()
    }
}

/// The j-sum shared by both closed forms:
/// `sum_j (-sinh^2 r)^(-j) / (j! (p-j)! (q-j)! (s+j)!)` over `j in lo..=hi`,
/// where `s + j >= 0` throughout.
struct JSum {
    p: usize,
    q: usize,
    s: i64,
    lo: usize,
    hi: usize,
}

impl JSum {
    fn evaluate(&self, r: f64) -> Result<LogTerm> {
        if self.lo > self.hi {
            return Ok(LogTerm::ZERO);
        }
        let ls = ln_sinh(r);
        let terms: Vec<LogTerm> = (self.lo..=self.hi)
            .map(|j| {
                let sj = (self.s + j as i64) as usize;
                let l = -2.0 * j as f64 * ls
                    - ln_factorial(j)
                    - ln_factorial(self.p - j)
                    - ln_factorial(self.q - j)
                    - ln_factorial(sj);
                LogTerm::new(l, j % 2 == 1)
            })
            .collect();
        let (p, q, s, lo, hi) = (self.p, self.q, self.s, self.lo, self.hi);
        let extended = move |bits: usize, cc: &mut Consts| -> BigSeries {
            let sh = big::sinh(r, bits, cc);
            let x = big::neg(&big::div(&big::from_usize(1, bits), &big::mul(&sh, &sh, bits), bits));
            // first term x^lo / (lo! (p-lo)! (q-lo)! (s+lo)!)
            let mut denom = big::factorial(lo, bits);
            denom = big::mul(&denom, &big::factorial(p - lo, bits), bits);
            denom = big::mul(&denom, &big::factorial(q - lo, bits), bits);
            denom = big::mul(&denom, &big::factorial((s + lo as i64) as usize, bits), bits);
            let mut term = big::div(&big::from_usize(1, bits), &denom, bits);
            for _ in 0..lo {
                term = big::mul(&term, &x, bits);
            }
            let mut sum = big::zero(bits);
            let mut abs_sum = big::zero(bits);
            for j in lo..=hi {
                big::accumulate(&mut sum, &mut abs_sum, &term, bits);
                if j == hi {
                    break;
                }
                let num = (p - j) * (q - j);
                let den = (j + 1) * ((s + j as i64 + 1) as usize);
                let ratio = big::div(&big::from_usize(num, bits), &big::from_usize(den, bits), bits);
                term = big::mul(&big::mul(&term, &ratio, bits), &x, bits);
            }
            BigSeries {
                sum,
                abs_sum,
                terms: hi - lo + 1,
            }
        };
        Ok(sum_series(terms, extended)?.value)
    }
}

/// Real part of `<m, m'| S(r) |n, n'>` for real `r > IDENTITY_LIMIT`, in log form.
fn element_log(m: usize, mp: usize, n: usize, np: usize, r: f64) -> Result<LogTerm> {
    let lo = np.saturating_sub(n);
    let hi = mp.min(np);
    let series = JSum {
        p: mp,
        q: np,
        s: n as i64 - np as i64,
        lo,
        hi,
    }
    .evaluate(r)?;
    let ls = ln_sinh(r);
    let lc = ln_cosh(r);
    let prefactor = 0.5 * (ln_factorial(m) + ln_factorial(mp) + ln_factorial(n) + ln_factorial(np))
        + np as f64 * ls
        + mp as f64 * (ls - lc)
        - (n + 1) as f64 * lc;
    Ok(series.scale(prefactor, mp % 2 == 1))
}

/// `<m, m'| S(alpha) |n, n'>` with the first index of each pair in mode `k`
/// and the second in mode `l`.
///
/// Zero unless `m - m' == n - n'`.
pub fn matrix_element(m: usize, mp: usize, n: usize, np: usize, params: SqueezeParams) -> Result<Complex64> {
    if m as i64 - mp as i64 != n as i64 - np as i64 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if params.is_identity() {
        let one = if m == n && mp == np { 1.0 } else { 0.0 };
        return Ok(Complex64::new(one, 0.0));
    }
    let v = element_log(m, mp, n, np, params.magnitude)?.to_f64();
    let phase = (mp as f64 - np as f64) * params.phase;
    Ok(Complex64::from_polar(v, phase))
}

/// `S^m_{m'}(d; alpha) = <m+d, m| S |m'+d, m'> = <m, m+d| S |m', m'+d>`.
///
/// Requires `m + d >= 0` and `m' + d >= 0`.
pub fn s_coeff(m: usize, mp: usize, d: i64, params: SqueezeParams) -> Result<Complex64> {
    if (m as i64 + d) < 0 || (mp as i64 + d) < 0 {
        return Err(Error::InvalidArgument(format!(
            "s_coeff needs m + d >= 0 and m' + d >= 0 (m={m}, m'={mp}, d={d})"
        )));
    }
    if params.is_identity() {
        let one = if m == mp { 1.0 } else { 0.0 };
        return Ok(Complex64::new(one, 0.0));
    }
    if d < 0 {
        let md = (m as i64 + d) as usize;
        let mpd = (mp as i64 + d) as usize;
        return matrix_element(md, m, mpd, mp, params);
    }
    let d = d as usize;
    let r = params.magnitude;
    let series = JSum {
        p: m,
        q: mp,
        s: d as i64,
        lo: 0,
        hi: m.min(mp),
    }
    .evaluate(r)?;
    let ls = ln_sinh(r);
    let lc = ln_cosh(r);
    let prefactor = 0.5 * (ln_factorial(m) + ln_factorial(mp) + ln_factorial(m + d) + ln_factorial(mp + d))
        + (m + mp) as f64 * (ls - lc)
        - (d + 1) as f64 * lc;
    let v = series.scale(prefactor, m % 2 == 1).to_f64();
    Ok(Complex64::from_polar(v, (m as f64 - mp as f64) * params.phase))
}

/// Weight multiplying `<m - d|psi_in>` in Bob's conditional amplitude at
/// photon number `m`, for Alice's counts `n` (mode 0) and `n + d` (mode 1).
///
/// For `d <= 0` this is `S^{n+d}_m(-d; beta) S^m_0(0; alpha)`, for `d > 0`
/// it is `S^n_{m-d}(d; beta) S^m_0(0; alpha)` and zero when `m < d`.
pub fn conditional_weight(
    n: usize,
    d: i64,
    m: usize,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    cache: &CoeffCache,
) -> Result<Complex64> {
    if (m as i64) < d || (n as i64 + d) < 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let resource = cache.s_coeff(m, 0, 0, alpha)?;
    let mixer = if d <= 0 {
        cache.s_coeff((n as i64 + d) as usize, m, -d, beta)?
    } else {
        cache.s_coeff(n, (m as i64 - d) as usize, d, beta)?
    };
    Ok(mixer * resource)
}

/// The coefficient product along Bob's photon number `m = 0..=m_max`.
pub fn coeff_profile(
    n: usize,
    d: i64,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    m_max: usize,
) -> Result<Vec<Complex64>> {
    if (n as i64 + d) < 0 {
        return Err(Error::InvalidArgument(format!(
            "n + d must be non-negative (n={n}, d={d})"
        )));
    }
    let cache = CoeffCache::new();
    (0..=m_max)
        .map(|m| conditional_weight(n, d, m, alpha, beta, &cache))
        .collect()
}

/// Relative spread `(max|v| - min|v|) / max|v|` of profile magnitudes.
pub fn relative_variation(values: &[Complex64]) -> f64 {
    let mags = values.iter().map(|v| v.norm());
    let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi == 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

type CacheKey = (usize, usize, i64, u64, u64);

/// Thread-safe memo of [`s_coeff`] values.
#[derive(Debug, Default)]
pub struct CoeffCache {
    map: RwLock<HashMap<CacheKey, Complex64>>,
}

impl CoeffCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn s_coeff(&self, m: usize, mp: usize, d: i64, params: SqueezeParams) -> Result<Complex64> {
        let (mag, ph) = params.key();
        let key = (m, mp, d, mag, ph);
        if let Some(v) = self.map.read().expect("coefficient cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = s_coeff(m, mp, d, params)?;
        self.map.write().expect("coefficient cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("coefficient cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(r: f64) -> SqueezeParams {
        SqueezeParams::real(r).unwrap()
    }

    #[test]
    fn vacuum_to_vacuum_is_sech() {
        for &r in &[0.3, 1.0, 1.5, 2.0] {
            let v = matrix_element(0, 0, 0, 0, real(r)).unwrap();
            assert!((v.re - 1.0 / r.cosh()).abs() < 1e-15);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn photon_difference_is_conserved() {
        let p = SqueezeParams::new(1.2, 0.7).unwrap();
        assert_eq!(matrix_element(1, 0, 0, 0, p).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(matrix_element(4, 2, 3, 0, p).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn one_pair_amplitude_has_negative_sign() {
        // S|0,0> = sech r * sum_k (-tanh r)^k |k,k>
        let v = matrix_element(1, 1, 0, 0, real(1.0)).unwrap();
        let mag = 1f64.tanh() / 1f64.cosh();
        assert!((v.re + mag).abs() < 1e-15, "{v}");
        assert!((mag - 0.49355).abs() < 1e-5);
        for k in 0..8 {
            let v = matrix_element(k, k, 0, 0, real(0.8)).unwrap().re;
            let expect = (-(0.8f64).tanh()).powi(k as i32) / 0.8f64.cosh();
            assert!((v - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn s_coeff_examples() {
        let v = s_coeff(0, 0, 2, real(1.0)).unwrap();
        assert!((v.re - 1.0 / 1f64.cosh().powi(3)).abs() < 1e-15);
        assert!((v.re - 0.27217).abs() < 1e-5);

        let tiny = real(1e-10);
        assert_eq!(s_coeff(3, 3, 0, tiny).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(s_coeff(3, 2, 0, tiny).unwrap(), Complex64::new(0.0, 0.0));
        // approaching the limit from above the identity threshold
        let small = real(1e-6);
        assert!((s_coeff(2, 2, 0, small).unwrap().re - 1.0).abs() < 1e-9);
        let off = s_coeff(2, 1, 0, small).unwrap().norm();
        assert!((off - 2e-6).abs() < 1e-10, "{off}");

        let p = real(1.5);
        let a = s_coeff(2, 1, 1, p).unwrap();
        let b = matrix_element(3, 2, 2, 1, p).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn s_coeff_rejects_negative_occupation() {
        assert!(s_coeff(0, 3, -1, real(1.0)).is_err());
    }

    #[test]
    fn identity_limit_is_the_identity() {
        let p = real(1e-9);
        assert_eq!(matrix_element(2, 1, 2, 1, p).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(matrix_element(3, 2, 2, 1, p).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn large_indices_use_extended_precision_and_stay_finite() {
        // about 30 decimal digits of cancellation at this size
        let v = s_coeff(120, 120, 0, real(1.0)).unwrap();
        assert!(v.re.is_finite());
        let cached = CoeffCache::new();
        assert_eq!(cached.s_coeff(120, 120, 0, real(1.0)).unwrap(), v);
        assert_eq!(cached.len(), 1);
    }

    #[test]
    fn matches_high_precision_references() {
        // mpmath, 150 significant digits
        let cases = [
            ((40, 40, 0, 1.5), -0.05929956862246844),
            ((120, 120, 0, 1.0), 0.04114127986250665),
            ((60, 57, 3, 2.0), -0.017400060293499983),
            ((15, 3, 5, 0.3), 0.0013896532965490339),
        ];
        for ((m, mp, d, r), reference) in cases {
            let v = s_coeff(m, mp, d, real(r)).unwrap();
            assert_eq!(v.im, 0.0);
            assert!(
                (v.re - reference).abs() <= 1e-12 * reference.abs(),
                "{m},{mp},{d},{r}: {} vs {reference}",
                v.re
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn both_defining_identities_agree(m in 0usize..12, mp in 0usize..12, d in 0i64..6, r in 0.2f64..2.0) {
            let p = real(r);
            let s = s_coeff(m, mp, d, p).unwrap();
            let du = d as usize;
            let first = matrix_element(m + du, m, mp + du, mp, p).unwrap();
            let second = matrix_element(m, m + du, mp, mp + du, p).unwrap();
            prop_assert!((s - first).norm() <= 1e-12 * (1.0 + s.norm()));
            prop_assert!((s - second).norm() <= 1e-12 * (1.0 + s.norm()));
        }

        #[test]
        fn phase_enters_only_through_the_output_difference(
            m in 0usize..10, n in 0usize..10, shift in 0usize..6, r in 0.2f64..2.0, phi in 0.0f64..std::f64::consts::TAU,
        ) {
            let (mp, np) = (m + shift, n + shift);
            let plain = matrix_element(m, mp, n, np, real(r)).unwrap();
            let rotated = matrix_element(m, mp, n, np, SqueezeParams::new(r, phi).unwrap()).unwrap();
            prop_assert!((plain.norm() - rotated.norm()).abs() <= 1e-14);
            let expect = plain * Complex64::from_polar(1.0, (mp as f64 - np as f64) * phi);
            prop_assert!((rotated - expect).norm() <= 1e-14);
        }

        #[test]
        fn mismatched_difference_is_exactly_zero(m in 0usize..20, mp in 0usize..20, n in 0usize..20, np in 0usize..20) {
            prop_assume!(m as i64 - mp as i64 != n as i64 - np as i64);
            prop_assert_eq!(matrix_element(m, mp, n, np, real(1.3)).unwrap(), Complex64::new(0.0, 0.0));
        }
    }
}
