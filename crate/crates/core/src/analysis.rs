//! Sweeps over Alice's photon-count outcomes, conditional success
//! probabilities, and cutoff-convergence checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::numerics::CompensatedSum;
use crate::par::Exec;
use crate::squeeze::{coeff_profile, CoeffCache, SqueezeParams};
use crate::teleport::{teleport_event_cached, MeasurementOutcome};

/// Default largest photon count per detector in a sweep.
pub const DEFAULT_N_MAX: usize = 30;

/// Largest absolute difference accepted by [`convergence_check`].
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub n: usize,
    pub nprime: usize,
    pub fidelity: f64,
    pub probability: f64,
}

/// Fidelity and probability for every outcome `(n, n')` with
/// `n, n' <= n_max`, stored row-major in `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGrid {
    pub alpha: SqueezeParams,
    pub beta: SqueezeParams,
    pub cutoff: usize,
    pub n_max: usize,
    #[serde(with = "pairs")]
    pub input: Vec<Complex64>,
    pub entries: Vec<GridEntry>,
}

/// Complex numbers as `[re, im]` pairs.
mod pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl OutcomeGrid {
    pub fn get(&self, n: usize, nprime: usize) -> Option<&GridEntry> {
        if n > self.n_max || nprime > self.n_max {
            return None;
        }
        self.entries.get(n * (self.n_max + 1) + nprime)
    }

    pub fn total_probability(&self) -> f64 {
        conditional_success(self, 0.0, OutcomeFilter::All)
    }
}

/// Which outcomes contribute to a success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeFilter {
    #[default]
    All,
    /// Only `n == n'`.
    Diagonal,
}

impl OutcomeFilter {
    pub fn accepts(self, n: usize, nprime: usize) -> bool {
        match self {
            OutcomeFilter::All => true,
            OutcomeFilter::Diagonal => n == nprime,
        }
    }
}

fn outcome_entry(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    outcome: MeasurementOutcome,
    cache: &CoeffCache,
) -> Result<GridEntry> {
    let (fidelity, probability) = match teleport_event_cached(psi_in, alpha, beta, outcome, cache) {
        Ok(r) => (r.fidelity, r.probability),
        Err(Error::ImpossibleOutcome { .. }) => (0.0, 0.0),
        Err(e) => return Err(e),
    };
    Ok(GridEntry {
        n: outcome.n,
        nprime: outcome.n_prime,
        fidelity,
        probability,
    })
}

fn check_n_max(psi_in: &FockVector, n_max: usize) -> Result<()> {
    if n_max > psi_in.cutoff() {
        return Err(Error::InvalidArgument(format!(
            "n_max ({n_max}) must not exceed the cutoff ({})",
            psi_in.cutoff()
        )));
    }
    Ok(())
}

/// [`sweep_grid_with`] using the default execution strategy.
pub fn sweep_grid(psi_in: &FockVector, alpha: SqueezeParams, beta: SqueezeParams, n_max: usize) -> Result<OutcomeGrid> {
    sweep_grid_with(psi_in, alpha, beta, n_max, Exec::default())
}

/// Evaluates every outcome with `n, n' <= n_max`. Impossible outcomes are
/// stored as zero fidelity and zero probability.
pub fn sweep_grid_with(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    n_max: usize,
    exec: Exec,
) -> Result<OutcomeGrid> {
    check_n_max(psi_in, n_max)?;
    let outcomes: Vec<MeasurementOutcome> = (0..=n_max)
        .flat_map(|n| (0..=n_max).map(move |np| MeasurementOutcome::new(n, np)))
        .collect();
    let cache = CoeffCache::new();
    let entries = exec.try_map(&outcomes, |&o| outcome_entry(psi_in, alpha, beta, o, &cache))?;
    Ok(OutcomeGrid {
        alpha,
        beta,
        cutoff: psi_in.cutoff(),
        n_max,
        input: psi_in.amplitudes().to_vec(),
        entries,
    })
}

/// Total probability of accepted outcomes whose fidelity is at least `f_u`.
/// Summed in grid order with compensation, so the result is reproducible.
pub fn conditional_success(grid: &OutcomeGrid, f_u: f64, filter: OutcomeFilter) -> f64 {
    conditional_success_by(grid, f_u, |n, np| filter.accepts(n, np))
}

/// [`conditional_success`] with an arbitrary outcome predicate.
pub fn conditional_success_by(grid: &OutcomeGrid, f_u: f64, accept: impl Fn(usize, usize) -> bool) -> f64 {
    let mut sum = CompensatedSum::new();
    for e in &grid.entries {
        if accept(e.n, e.nprime) && e.fidelity >= f_u {
            sum.add(e.probability);
        }
    }
    sum.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalPoint {
    pub n: usize,
    pub fidelity: f64,
    pub probability: f64,
}

/// The `n == n'` outcomes, ordered by `n`.
pub fn diagonal_sweep(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    n_max: usize,
) -> Result<Vec<DiagonalPoint>> {
    check_n_max(psi_in, n_max)?;
    let ns: Vec<usize> = (0..=n_max).collect();
    let cache = CoeffCache::new();
    Exec::default().try_map(&ns, |&n| {
        let e = outcome_entry(psi_in, alpha, beta, MeasurementOutcome::new(n, n), &cache)?;
        Ok(DiagonalPoint {
            n,
            fidelity: e.fidelity,
            probability: e.probability,
        })
    })
}

/// A scalar that can be recomputed at different cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    Fidelity {
        n: usize,
        nprime: usize,
    },
    Probability {
        n: usize,
        nprime: usize,
    },
    SuccessProbability {
        f_u: f64,
        filter: OutcomeFilter,
        n_max: usize,
    },
    /// Magnitude of one coefficient-profile point.
    ProfilePoint {
        n: usize,
        d: i64,
        m: usize,
    },
}

impl Quantity {
    /// Evaluates the quantity with the input embedded at `cutoff`.
    pub fn evaluate(
        &self,
        psi_in: &FockVector,
        alpha: SqueezeParams,
        beta: SqueezeParams,
        cutoff: usize,
    ) -> Result<f64> {
        let psi = psi_in.with_cutoff(cutoff)?;
        let cache = CoeffCache::new();
        match *self {
            Quantity::Fidelity { n, nprime } => {
                Ok(outcome_entry(&psi, alpha, beta, MeasurementOutcome::new(n, nprime), &cache)?.fidelity)
            }
            Quantity::Probability { n, nprime } => {
                Ok(outcome_entry(&psi, alpha, beta, MeasurementOutcome::new(n, nprime), &cache)?.probability)
            }
            Quantity::SuccessProbability { f_u, filter, n_max } => {
                let grid = sweep_grid(&psi, alpha, beta, n_max.min(cutoff))?;
                Ok(conditional_success(&grid, f_u, filter))
            }
            Quantity::ProfilePoint { n, d, m } => {
                let profile = coeff_profile(n, d, alpha, beta, m)?;
                Ok(profile[m].norm())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub quantity: Quantity,
    pub cutoff_low: usize,
    pub cutoff_high: usize,
    pub value_low: f64,
    pub value_high: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            return Ok(self);
        }
        Err(Error::NotConverged {
            quantity: format!("{:?}", self.quantity),
            cutoff_low: self.cutoff_low,
            cutoff_high: self.cutoff_high,
            value_low: self.value_low,
            value_high: self.value_high,
            difference: self.difference,
        })
    }
}

/// Evaluates `quantity` at two cutoffs and compares.
pub fn compare_cutoffs(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    quantity: Quantity,
    cutoff_low: usize,
    cutoff_high: usize,
) -> Result<ConvergenceReport> {
    let value_low = quantity.evaluate(psi_in, alpha, beta, cutoff_low)?;
    let value_high = quantity.evaluate(psi_in, alpha, beta, cutoff_high)?;
    let difference = (value_high - value_low).abs();
    Ok(ConvergenceReport {
        quantity,
        cutoff_low,
        cutoff_high,
        value_low,
        value_high,
        difference,
        tolerance: CONVERGENCE_TOL,
        passed: difference < CONVERGENCE_TOL,
    })
}

/// Compares `quantity` at `cutoff` and `2 * cutoff`; fails with
/// [`Error::NotConverged`] when they differ by [`CONVERGENCE_TOL`] or more.
pub fn convergence_check(
    psi_in: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    quantity: Quantity,
    cutoff: usize,
) -> Result<ConvergenceReport> {
    compare_cutoffs(psi_in, alpha, beta, quantity, cutoff, 2 * cutoff)?.into_result()
}
