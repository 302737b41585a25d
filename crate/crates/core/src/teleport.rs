//! The conditional protocol: Alice mixes the input (mode 0) with one half
//! (mode 1) of a two-mode squeezed vacuum shared with Bob (mode 2), counts
//! photons in modes 0 and 1, and Bob shifts the photon number of mode 2 by
//! the observed difference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{fidelity, lower_shift, normalize, raise_shift, FockVector, NORMALIZED_TOL, ZERO_STATE_EPS};
use crate::numerics::compensated_sum;
use crate::squeeze::{conditional_weight, CoeffCache, SqueezeParams};

/// Alice's photon counts: `n` in mode 0 and `n_prime` in mode 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub n: usize,
    #[serde(rename = "nprime")]
    pub n_prime: usize,
}

impl MeasurementOutcome {
    pub fn new(n: usize, n_prime: usize) -> Self {
        Self { n, n_prime }
    }

    /// `d = n' - n`.
    pub fn difference(&self) -> i64 {
        self.n_prime as i64 - self.n as i64
    }
}

/// Everything produced by one measurement event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleportResult {
    pub outcome: MeasurementOutcome,
    /// Bob's normalized conditional state before the shift.
    pub psi_out: FockVector,
    /// Bob's state after the photon-number shift.
    pub psi_tel: FockVector,
    pub probability: f64,
    pub fidelity: f64,
}

fn check_input(psi_in: &FockVector) -> Result<()> {
    let norm_sqr = psi_in.norm_sqr();
    if (norm_sqr - 1.0).abs() > NORMALIZED_TOL {
        return Err(Error::NotNormalized { norm_sqr });
    }
    Ok(())
}

/// Bob's unnormalized conditional state; its squared norm is the event
/// probability. Amplitudes landing above the cutoff are dropped.
pub fn conditional_amplitudes(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    outcome: MeasurementOutcome,
    cache: &CoeffCache,
) -> Result<FockVector> {
    let cutoff = psi_in.cutoff();
    let d = outcome.difference();
    let mut amps = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    for k in psi_in.support() {
        let m = k as i64 + d;
        if m < 0 || m as usize > cutoff {
            continue;
        }
        let m = m as usize;
        let w = conditional_weight(outcome.n, d, m, alpha, beta, cache)?;
        amps[m] = w * psi_in.get(k);
    }
    Ok(FockVector::from_raw(amps))
}

/// Bob's normalized conditional state and the probability of `outcome`.
pub fn conditional_state(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    outcome: MeasurementOutcome,
) -> Result<(FockVector, f64)> {
    conditional_state_cached(psi_in, alpha, beta, outcome, &CoeffCache::new())
}

/// [`conditional_state`] reusing a coefficient cache.
pub fn conditional_state_cached(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    outcome: MeasurementOutcome,
    cache: &CoeffCache,
) -> Result<(FockVector, f64)> {
    check_input(psi_in)?;
    let raw = conditional_amplitudes(psi_in, alpha, beta, outcome, cache)?;
    let probability = compensated_sum(raw.amplitudes().iter().map(|a| a.norm_sqr()));
    if probability <= ZERO_STATE_EPS {
        return Err(Error::ImpossibleOutcome {
            n: outcome.n,
            n_prime: outcome.n_prime,
            probability,
        });
    }
    let (state, _) = normalize(&raw)?;
    Ok((state, probability))
}

/// Runs the full protocol for one outcome.
pub fn teleport_event(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    outcome: MeasurementOutcome,
) -> Result<TeleportResult> {
    teleport_event_cached(psi_in, alpha, beta, outcome, &CoeffCache::new())
}

/// [`teleport_event`] reusing a coefficient cache.
pub fn teleport_event_cached(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    outcome: MeasurementOutcome,
    cache: &CoeffCache,
) -> Result<TeleportResult> {
    let (psi_out, probability) = conditional_state_cached(psi_in, alpha, beta, outcome, cache)?;
    let d = outcome.difference();
    let shifted = match d {
        d if d < 0 => raise_shift(&psi_out, d.unsigned_abs() as usize)?,
        d if d > 0 => lower_shift(&psi_out, d as usize),
        _ => psi_out.clone(),
    };
    // a no-op unless amplitudes were lost to the cutoff
    let (psi_tel, _) = normalize(&shifted)?;
    let fidelity = fidelity(psi_in, &psi_tel)?;
    Ok(TeleportResult {
        outcome,
        psi_out,
        psi_tel,
        probability,
        fidelity,
    })
}
