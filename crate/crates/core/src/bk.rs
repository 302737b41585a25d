//! Continuous-variable baseline: teleportation through the same two-mode
//! squeezed resource with a joint quadrature measurement and a corrective
//! displacement.
//!
//! Conventions (`x = (a + a^dag)/sqrt 2`, `p = (a - a^dag)/(i sqrt 2)`):
//! the resource `sum_k c_k |k,k>` has `c_k = sech r (-tanh r)^k`, so its
//! squeezed combinations are `x_1 + x_2` and `p_1 - p_2`. Alice mixes the
//! input (mode 0) with mode 1 into `u = (a_0 + a_1)/sqrt 2`,
//! `v = (a_0 - a_1)/sqrt 2` and measures `x` of `u` and `p` of `v`. The joint
//! eigenstate for outcome `(x, p)` is
//! `pi^(-1/2) D_0(x + ip) sum_n (-1)^n |n, n>`, which leaves Bob with
//! `pi^(-1/2) sum_k (-1)^k c_k <k| D(-(x + ip)) |psi> |k>`.
//! Bob applies `D(g (x + ip))`; with `g = 1` the fidelity tends to one as
//! `r` grows.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{normalize, FockVector, NORMALIZED_TOL};
use crate::numerics::{big, ln_factorial, sum_series, BigSeries, CompensatedSum, LogTerm, REL_ERR_LIMIT};
use crate::par::Exec;
use crate::squeeze::{s_coeff, SqueezeParams};

pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
pub const DEFAULT_STEP: f64 = 0.05;
/// Resource truncation; the dropped tail is `tanh(r)^(2 (cutoff + 1))`.
pub const DEFAULT_BK_CUTOFF: usize = 120;
/// Outcomes with density at or below this are rejected.
pub const ZERO_DENSITY: f64 = 1e-300;

/// `k`-th normalized oscillator eigenfunction at `x`.
///
/// Uses the three-term recurrence on normalized functions. The Gaussian
/// factor is carried as a separate exponent so large `|x|` never underflows
/// mid-recurrence.
pub fn hermite_wavefunction(k: usize, x: f64) -> f64 {
    *hermite_table(k, x).last().expect("table has k + 1 entries")
}

/// `psi_0(x), ..., psi_k_max(x)`.
pub fn hermite_table(k_max: usize, x: f64) -> Vec<f64> {
    const BIG: f64 = 1e150;
    let mut out = Vec::with_capacity(k_max + 1);
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    // scaled values; true value = stored * exp(log_scale)
    let mut scaled = Vec::with_capacity(k_max + 1);
    scaled.push((cur, log_scale));
    for k in 0..k_max {
        let next = (2.0 / (k + 1) as f64).sqrt() * x * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            log_scale += BIG.ln();
        }
        scaled.push((cur, log_scale));
    }
    for (v, s) in scaled {
        out.push(if v == 0.0 { 0.0 } else { v * s.exp() });
    }
    out
}

fn laguerre_log_terms(lo: usize, hi: usize, ln_x: f64) -> impl Iterator<Item = LogTerm> {
    let a = hi - lo;
    (0..=lo).map(move |j| {
        let l = ln_factorial(hi) - ln_factorial(lo - j) - ln_factorial(a + j) - ln_factorial(j) + j as f64 * ln_x;
        LogTerm::new(l, j % 2 == 1)
    })
}

/// `sum_{j<=lo} (-x)^j hi! / ((lo-j)! (hi-lo+j)! j!)`, i.e. `L_lo^(hi-lo)(x)`,
/// in log form.
fn laguerre(lo: usize, hi: usize, x: f64) -> Result<LogTerm> {
    if lo == 0 || x == 0.0 {
        // only j = 0 survives
        return Ok(LogTerm::new(
            ln_factorial(hi) - ln_factorial(lo) - ln_factorial(hi - lo),
            false,
        ));
    }
    let ln_x = x.ln();
    // single pass relative to the largest term, no allocation
    let lead = laguerre_log_terms(lo, hi, ln_x)
        .map(|t| t.log_magnitude)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut signed = CompensatedSum::new();
    let mut absolute = CompensatedSum::new();
    for t in laguerre_log_terms(lo, hi, ln_x) {
        let v = (t.log_magnitude - lead).exp();
        signed.add(if t.negative { -v } else { v });
        absolute.add(v);
    }
    let s = signed.value();
    let scale = lead.abs().max(1.0);
    let estimate = absolute.value() / s.abs() * f64::EPSILON * (lo as f64 + scale + 8.0);
    if s != 0.0 && estimate <= REL_ERR_LIMIT {
        return Ok(LogTerm::new(lead + s.abs().ln(), s < 0.0));
    }
    let terms: Vec<LogTerm> = laguerre_log_terms(lo, hi, ln_x).collect();
    let a = hi - lo;
    let extended = move |bits: usize, _cc: &mut astro_float::Consts| -> BigSeries {
        let xb = big::neg(&big::from_f64(x, bits));
        // j = 0 term: hi! / (lo! a!)
        let denom = big::mul(&big::factorial(lo, bits), &big::factorial(a, bits), bits);
        let mut term = big::div(&big::factorial(hi, bits), &denom, bits);
        let mut sum = big::zero(bits);
        let mut abs_sum = big::zero(bits);
        for j in 0..=lo {
            big::accumulate(&mut sum, &mut abs_sum, &term, bits);
            if j == lo {
                break;
            }
            let ratio = big::div(
                &big::from_usize(lo - j, bits),
                &big::from_usize((a + j + 1) * (j + 1), bits),
                bits,
            );
            term = big::mul(&big::mul(&term, &ratio, bits), &xb, bits);
        }
        BigSeries {
            sum,
            abs_sum,
            terms: lo + 1,
        }
    };
    Ok(sum_series(terms, extended)?.value)
}

/// `<m| D(amount) |k>` via the associated-Laguerre closed form.
pub fn displacement_element(m: usize, k: usize, amount: Complex64) -> Result<Complex64> {
    let mag = amount.norm();
    if mag == 0.0 {
        return Ok(Complex64::new(if m == k { 1.0 } else { 0.0 }, 0.0));
    }
    let (lo, hi) = if m >= k { (k, m) } else { (m, k) };
    let a = hi - lo;
    let x = mag * mag;
    let series = laguerre(lo, hi, x)?;
    let prefactor = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + a as f64 * mag.ln() - 0.5 * x;
    let v = series.scale(prefactor, false).to_f64();
    // gamma^a above the diagonal, (-conj gamma)^a below
    let phase = if m >= k {
        a as f64 * amount.arg()
    } else {
        a as f64 * (PI - amount.arg())
    };
    Ok(Complex64::from_polar(v, phase))
}

/// Joint quadrature outcome: `x` of mode `u`, `p` of mode `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOutcome {
    pub x: f64,
    pub p: f64,
}

impl QuadratureOutcome {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    fn amount(&self) -> Complex64 {
        Complex64::new(self.x, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkConfig {
    /// Resource squeezing.
    pub r: f64,
    /// Outcome grid covers `[-half_width, half_width]` in both quadratures.
    pub half_width: f64,
    pub step: f64,
    /// Bob's displacement gain.
    pub gain: f64,
    /// Fock cutoff for the resource and Bob's mode.
    pub cutoff: usize,
}

impl BkConfig {
    pub fn new(r: f64) -> Result<Self> {
        Self {
            r,
            half_width: DEFAULT_HALF_WIDTH,
            step: DEFAULT_STEP,
            gain: 1.0,
            cutoff: DEFAULT_BK_CUTOFF,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "resource squeezing must be finite and >= 0, got {}",
                self.r
            )));
        }
        if !(self.half_width > 0.0 && self.step > 0.0 && self.half_width.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid half-width and step must be positive".into(),
            ));
        }
        let ratio = self.half_width / self.step;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "half-width / step must be an integer, got {ratio}"
            )));
        }
        if !self.gain.is_finite() {
            return Err(Error::InvalidArgument("gain must be finite".into()));
        }
        Ok(self)
    }

    /// Points per axis.
    pub fn points_per_axis(&self) -> usize {
        2 * (self.half_width / self.step).round() as usize + 1
    }

    /// Grid coordinate `i`, from `-half_width` upwards.
    pub fn coordinate(&self, i: usize) -> f64 {
        let half = (self.half_width / self.step).round();
        (i as f64 - half) * self.step
    }

    /// The same grid at half the step.
    pub fn refined(&self) -> Self {
        Self {
            step: self.step / 2.0,
            ..*self
        }
    }
}

/// Per-outcome result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BkEvent {
    pub outcome: QuadratureOutcome,
    /// Bob's state after the corrective displacement.
    pub state: FockVector,
    pub density: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkPoint {
    pub x: f64,
    pub p: f64,
    pub fidelity: f64,
    pub density: f64,
}

/// Precomputed resource weights and input for repeated outcomes.
struct Scheme<'a> {
    psi: &'a FockVector,
    support: Vec<usize>,
    /// `pi^(-1/2) (-1)^k c_k`
    weights: Vec<f64>,
    gain: f64,
    cutoff: usize,
}

impl<'a> Scheme<'a> {
    fn new(psi: &'a FockVector, config: &BkConfig) -> Result<Self> {
        let norm_sqr = psi.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let params = SqueezeParams::real(config.r)?;
        let weights = (0..=config.cutoff)
            .map(|k| {
                let c = s_coeff(k, 0, 0, params)?.re;
                let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                Ok(sign * c / PI.sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            psi,
            support: psi.support().collect(),
            weights,
            gain: config.gain,
            cutoff: config.cutoff,
        })
    }

    /// `<k| D(amount) |psi>` for `k <= cutoff`.
    fn displaced_input(&self, amount: Complex64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cutoff + 1];
        for &i in &self.support {
            let a = self.psi.get(i);
            for (k, slot) in out.iter_mut().enumerate() {
                *slot += displacement_element(k, i, amount)? * a;
            }
        }
        Ok(out)
    }

    /// Bob's unnormalized state before correction, and the fidelity after it.
    fn evaluate(&self, outcome: QuadratureOutcome) -> Result<(Vec<Complex64>, f64, f64)> {
        let gamma = outcome.amount();
        let xi = self.displaced_input(-gamma)?;
        let phi: Vec<Complex64> = xi.iter().zip(&self.weights).map(|(z, w)| z * w).collect();
        let density = CompensatedSum::from_iter(phi.iter().map(|z| z.norm_sqr())).value();
        if density <= ZERO_DENSITY {
            return Ok((phi, density, 0.0));
        }
        let eta = if self.gain == 1.0 {
            xi
        } else {
            self.displaced_input(-gamma * self.gain)?
        };
        let overlap: Complex64 = eta.iter().zip(&phi).map(|(e, f)| e.conj() * f).sum();
        let fidelity = (overlap.norm_sqr() / density).min(1.0);
        Ok((phi, density, fidelity))
    }
}

/// Bob's corrected, normalized state for one outcome, with the outcome
/// density and the fidelity to the input.
pub fn bk_conditional(psi_in: &FockVector, config: &BkConfig, outcome: QuadratureOutcome) -> Result<BkEvent> {
    let config = config.validated()?;
    let scheme = Scheme::new(psi_in, &config)?;
    let (phi, density, fidelity) = scheme.evaluate(outcome)?;
    if density <= ZERO_DENSITY {
        return Err(Error::ZeroDensity {
            x: outcome.x,
            p: outcome.p,
            density,
        });
    }
    let shift = outcome.amount() * config.gain;
    let mut corrected = vec![Complex64::new(0.0, 0.0); config.cutoff + 1];
    for (k, f) in phi.iter().enumerate() {
        if *f == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (m, slot) in corrected.iter_mut().enumerate() {
            *slot += displacement_element(m, k, shift)? * f;
        }
    }
    // renormalizes away the density and any amplitude displaced past the cutoff
    let (state, _) = normalize(&FockVector::from_raw(corrected))?;
    Ok(BkEvent {
        outcome,
        state,
        density,
        fidelity,
    })
}

/// Fidelity and density at every grid outcome, row-major in `x`.
pub fn bk_scan(psi_in: &FockVector, config: &BkConfig) -> Result<Vec<BkPoint>> {
    bk_scan_with(psi_in, config, Exec::default())
}

pub fn bk_scan_with(psi_in: &FockVector, config: &BkConfig, exec: Exec) -> Result<Vec<BkPoint>> {
    let config = config.validated()?;
    let scheme = Scheme::new(psi_in, &config)?;
    let n = config.points_per_axis();
    let rows: Vec<usize> = (0..n).collect();
    let per_row = exec.try_map(&rows, |&i| {
        let x = config.coordinate(i);
        (0..n)
            .map(|j| {
                let p = config.coordinate(j);
                let (_, density, fidelity) = scheme.evaluate(QuadratureOutcome::new(x, p))?;
                Ok(BkPoint {
                    x,
                    p,
                    fidelity,
                    density,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_row.into_iter().flatten().collect())
}

/// `h^2 * sum density` over points with fidelity at least `f_u`, in grid order.
pub fn success_from_points(points: &[BkPoint], step: f64, f_u: f64) -> f64 {
    let mut sum = CompensatedSum::new();
    for pt in points {
        if pt.fidelity >= f_u {
            sum.add(pt.density);
        }
    }
    sum.value() * step * step
}

/// Probability that the corrected state reaches fidelity `f_u`.
pub fn bk_pu(psi_in: &FockVector, config: &BkConfig, f_u: f64) -> Result<f64> {
    let points = bk_scan(psi_in, config)?;
    Ok(success_from_points(&points, config.step, f_u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkSummary {
    pub r: f64,
    #[serde(rename = "F_u")]
    pub f_u: f64,
    #[serde(rename = "P_u")]
    pub p_u: f64,
    pub grid: GridSpec,
}

impl BkSummary {
    pub fn new(config: &BkConfig, f_u: f64, p_u: f64) -> Self {
        Self {
            r: config.r,
            f_u,
            p_u,
            grid: GridSpec {
                half_width: config.half_width,
                h: config.step,
            },
        }
    }
}
