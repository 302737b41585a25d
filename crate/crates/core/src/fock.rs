//! Single-mode states in a truncated Fock basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{compensated_sum, ComplexCompensatedSum};

/// Default photon-number cutoff.
pub const DEFAULT_CUTOFF: usize = 60;

/// Squared norm at or below which a vector counts as the zero state.
pub const ZERO_STATE_EPS: f64 = 1e-14;

/// Tolerance on `|norm^2 - 1|` for a vector to count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-9;

const NORM_SLACK: f64 = 1e-12;

/// Pure state (possibly sub-normalized) over Fock states `0..=cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    /// Builds a state from leading amplitudes, zero-padding up to `cutoff`.
    pub fn new(amplitudes: &[Complex64], cutoff: usize) -> Result<Self> {
        if amplitudes.len() > cutoff + 1 {
            return Err(Error::TooManyAmplitudes {
                len: amplitudes.len(),
                cutoff,
            });
        }
        if let Some(index) = amplitudes.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        let mut amps = amplitudes.to_vec();
        amps.resize(cutoff + 1, Complex64::new(0.0, 0.0));
        let v = Self { amplitudes: amps };
        let norm_sqr = v.norm_sqr();
        if norm_sqr > 1.0 + NORM_SLACK {
            return Err(Error::NormExceedsOne { norm_sqr });
        }
        Ok(v)
    }

    /// The zero vector with `cutoff + 1` entries.
    pub fn zeros(cutoff: usize) -> Self {
        Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); cutoff + 1],
        }
    }

    /// The Fock state `|k>`.
    pub fn basis(k: usize, cutoff: usize) -> Result<Self> {
        if k > cutoff {
            return Err(Error::TooManyAmplitudes { len: k + 1, cutoff });
        }
        let mut v = Self::zeros(cutoff);
        v.amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// Wraps amplitudes produced internally; callers guarantee the invariants.
    pub(crate) fn from_raw(amplitudes: Vec<Complex64>) -> Self {
        debug_assert!(amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite()));
        Self { amplitudes }
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude at photon number `k`; zero beyond the cutoff.
    pub fn get(&self, k: usize) -> Complex64 {
        self.amplitudes.get(k).copied().unwrap_or_default()
    }

    /// Indices of nonzero amplitudes.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
            .map(|(k, _)| k)
    }

    /// Largest photon number with a nonzero amplitude.
    pub fn top(&self) -> Option<usize> {
        self.amplitudes.iter().rposition(|a| a.re != 0.0 || a.im != 0.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amplitudes.iter().map(|a| a.norm_sqr()))
    }

    /// Same amplitudes over a different cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        if let Some(top) = self.top() {
            if top > cutoff {
                return Err(Error::TooManyAmplitudes { len: top + 1, cutoff });
            }
        }
        let mut amps = self.amplitudes.clone();
        amps.resize(cutoff + 1, Complex64::new(0.0, 0.0));
        Ok(Self { amplitudes: amps })
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::from_raw(self.amplitudes.iter().map(|a| a * factor).collect())
    }

    /// `<self|other>`, padding the shorter vector with zeros.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        inner_product(self, other)
    }

    fn check_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(())
    }
}

/// `sum_k conj(a_k) b_k`.
pub fn inner_product(a: &FockVector, b: &FockVector) -> Complex64 {
    let mut acc = ComplexCompensatedSum::new();
    for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
        acc.add(x.conj() * y);
    }
    acc.value()
}

/// `|<a|b>|^2` for normalized states.
pub fn fidelity(a: &FockVector, b: &FockVector) -> Result<f64> {
    a.check_normalized()?;
    b.check_normalized()?;
    Ok(inner_product(a, b).norm_sqr().min(1.0))
}

/// Applies `E^shift`, where `E = sum_n |n><n+1|`.
///
/// Amplitudes below `shift` are discarded; the result is generally
/// sub-normalized.
pub fn lower_shift(state: &FockVector, shift: usize) -> FockVector {
    let n = state.amplitudes.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if shift < n {
        out[..n - shift].copy_from_slice(&state.amplitudes[shift..]);
    }
    FockVector::from_raw(out)
}

/// Applies `(E^dagger)^shift`.
///
/// Fails when a nonzero amplitude would be pushed past the cutoff.
pub fn raise_shift(state: &FockVector, shift: usize) -> Result<FockVector> {
    let n = state.amplitudes.len();
    let cutoff = n - 1;
    if let Some(top) = state.top() {
        if top + shift > cutoff {
            return Err(Error::TruncationOverflow { shift, cutoff });
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if shift < n {
        out[shift..].copy_from_slice(&state.amplitudes[..n - shift]);
    }
    Ok(FockVector::from_raw(out))
}

/// Returns the unit vector along `state` and its original squared norm.
pub fn normalize(state: &FockVector) -> Result<(FockVector, f64)> {
    normalize_with(state, ZERO_STATE_EPS)
}

/// [`normalize`] with an explicit zero-state threshold on the squared norm.
pub fn normalize_with(state: &FockVector, eps: f64) -> Result<(FockVector, f64)> {
    let norm_sqr = state.norm_sqr();
    if norm_sqr <= eps {
        return Err(Error::ZeroState { norm_sqr });
    }
    let inv = 1.0 / norm_sqr.sqrt();
    Ok((state.scaled(Complex64::new(inv, 0.0)), norm_sqr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_state() -> FockVector {
        FockVector::new(&[c(0.0, 0.0), c(H, 0.0), c(0.0, 0.0), c(0.0, H)], 10).unwrap()
    }

    #[test]
    fn make_state_pads_without_normalizing() {
        let vac = FockVector::new(&[c(1.0, 0.0)], 5).unwrap();
        assert_eq!(vac.amplitudes().len(), 6);
        assert_eq!(vac.get(0), c(1.0, 0.0));

        let t = test_state();
        assert_eq!(t.cutoff(), 10);
        assert!((t.norm_sqr() - 1.0).abs() < 1e-15);
        assert_eq!(t.support().collect::<Vec<_>>(), vec![1, 3]);

        let z = FockVector::new(&[c(0.0, 0.0); 4], 3).unwrap();
        assert_eq!(z.norm_sqr(), 0.0);
    }

    #[test]
    fn make_state_rejects_bad_input() {
        assert_eq!(
            FockVector::new(&[c(f64::NAN, 0.0)], 3),
            Err(Error::NonFinite { index: 0 })
        );
        assert!(matches!(
            FockVector::new(&[c(1.0, 0.0); 5], 3),
            Err(Error::TooManyAmplitudes { .. })
        ));
        assert!(matches!(
            FockVector::new(&[c(1.0, 0.0), c(1.0, 0.0)], 3),
            Err(Error::NormExceedsOne { .. })
        ));
    }

    #[test]
    fn inner_product_examples() {
        let one = FockVector::basis(1, 6).unwrap();
        let two = FockVector::basis(2, 6).unwrap();
        let three = FockVector::basis(3, 10).unwrap();
        assert_eq!(inner_product(&one, &one), c(1.0, 0.0));
        assert_eq!(inner_product(&one, &two), c(0.0, 0.0));
        // <psi|3> = conj(i/sqrt2) = -i/sqrt2
        let ip = inner_product(&test_state(), &three);
        assert!((ip - c(0.0, -H)).norm() < 1e-15);
        assert!((ip.norm() - H).abs() < 1e-15);
        // padding: different cutoffs
        let short = FockVector::basis(1, 2).unwrap();
        assert_eq!(inner_product(&short, &one), c(1.0, 0.0));
    }

    #[test]
    fn fidelity_examples() {
        let t = test_state();
        assert!((fidelity(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        let one = FockVector::basis(1, 10).unwrap();
        assert!((fidelity(&one, &t).unwrap() - 0.5).abs() < 1e-15);
        let zero = FockVector::basis(0, 10).unwrap();
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_rejects_unnormalized() {
        let half = test_state().scaled(c(0.5, 0.0));
        assert!(matches!(
            fidelity(&half, &test_state()),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn lower_shift_examples() {
        let three = FockVector::basis(3, 6).unwrap();
        assert_eq!(lower_shift(&three, 2), FockVector::basis(1, 6).unwrap());
        let vac = FockVector::basis(0, 6).unwrap();
        assert_eq!(lower_shift(&vac, 1).norm_sqr(), 0.0);
        let s = lower_shift(&test_state(), 2);
        assert_eq!(s.get(1), c(0.0, H));
        assert_eq!(s.support().collect::<Vec<_>>(), vec![1]);
        assert!((s.norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn raise_shift_examples() {
        let one = FockVector::basis(1, 6).unwrap();
        assert_eq!(raise_shift(&one, 2).unwrap(), FockVector::basis(3, 6).unwrap());
        let top = FockVector::basis(6, 6).unwrap();
        assert_eq!(
            raise_shift(&top, 1),
            Err(Error::TruncationOverflow { shift: 1, cutoff: 6 })
        );
    }

    #[test]
    fn normalize_examples() {
        let v = FockVector::new(&[c(0.0, 0.0), c(0.0, H)], 4).unwrap();
        let (u, p) = normalize(&v).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((u.get(1) - c(0.0, 1.0)).norm() < 1e-15);

        let (same, p) = normalize(&test_state()).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!((inner_product(&same, &test_state()) - c(1.0, 0.0)).norm() < 1e-15);

        assert!(matches!(normalize(&FockVector::zeros(3)), Err(Error::ZeroState { .. })));
    }

    fn arb_state(cutoff: usize) -> impl Strategy<Value = FockVector> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), cutoff + 1).prop_filter_map("nonzero", move |pairs| {
            let amps: Vec<_> = pairs.into_iter().map(|(a, b)| c(a, b)).collect();
            let raw = FockVector::from_raw(amps);
            normalize(&raw).ok().map(|(v, _)| v)
        })
    }

    proptest! {
        #[test]
        fn lower_undoes_raise(
            pairs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            shift in 1usize..6,
        ) {
            let cutoff = pairs.len() - 1 + shift;
            let amps: Vec<_> = pairs.iter().map(|&(a, b)| c(a, b)).collect();
            let v = FockVector::from_raw({
                let mut a = amps.clone();
                a.resize(cutoff + 1, c(0.0, 0.0));
                a
            });
            let back = lower_shift(&raise_shift(&v, shift).unwrap(), shift);
            prop_assert_eq!(back, v);
        }

        #[test]
        fn lower_shift_accounts_for_discarded_norm(v in arb_state(8), shift in 1usize..9) {
            let kept = lower_shift(&v, shift).norm_sqr();
            let dropped: f64 = v.amplitudes()[..shift].iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((kept + dropped - v.norm_sqr()).abs() < 1e-14);
        }

        #[test]
        fn fidelity_symmetric_and_phase_blind(a in arb_state(6), b in arb_state(6), phase in 0.0f64..6.3) {
            let fab = fidelity(&a, &b).unwrap();
            let fba = fidelity(&b, &a).unwrap();
            prop_assert!((fab - fba).abs() <= 1e-15);
            let rotated = a.scaled(Complex64::from_polar(1.0, phase));
            prop_assert!((fidelity(&rotated, &b).unwrap() - fab).abs() <= 1e-15);
            prop_assert!((0.0..=1.0).contains(&fab));
        }
    }
}
