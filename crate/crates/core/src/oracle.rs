//! Brute-force reference for the squeeze operator: the matrix exponential of
//! the truncated two-mode generator `conj(alpha) a b - alpha a^dag b^dag`.
//!
//! The truncated generator is anti-Hermitian, so its exponential is exactly
//! unitary on the truncated space. It only couples states with the same
//! photon-number difference, and each such sector is exponentiated on its own.
//! Elements near the cutoff are distorted by the truncation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::squeeze::SqueezeParams;

/// Largest two-mode dimension `(cutoff + 1)^2` accepted by [`oracle_expm`].
pub const MAX_ORACLE_DIM: usize = 2601;

/// Largest sector size accepted by [`oracle_expm_sectors`].
pub const MAX_SECTOR_DIM: usize = 1024;

#[derive(Debug, Clone)]
struct Sector {
    /// photon-number difference `n_k - n_l`
    diff: i64,
    /// lowest occupation of mode `k` in this sector
    first: usize,
    unitary: DMatrix<Complex64>,
}

impl Sector {
    fn index_of(&self, nk: usize) -> Option<usize> {
        let i = nk.checked_sub(self.first)?;
        (i < self.unitary.nrows()).then_some(i)
    }
}

/// `exp(G)` on the truncated two-mode space `{|n_k, n_l> : n_k, n_l <= cutoff}`.
#[derive(Debug, Clone)]
pub struct TwoModeUnitary {
    cutoff: usize,
    sectors: Vec<Sector>,
}

/// Sparse entries `(row, col, value)` of the truncated generator on flattened
/// indices `n_k * (cutoff + 1) + n_l`.
pub fn generator_entries(params: SqueezeParams, cutoff: usize) -> Vec<(usize, usize, Complex64)> {
    let alpha = Complex64::from_polar(params.magnitude, params.phase);
    let dim = cutoff + 1;
    let mut out = Vec::new();
    for nk in 0..=cutoff {
        for nl in 0..=cutoff {
            let col = nk * dim + nl;
            // conj(alpha) a_k a_l
            if nk > 0 && nl > 0 {
                let amp = ((nk * nl) as f64).sqrt();
                out.push(((nk - 1) * dim + (nl - 1), col, alpha.conj() * amp));
            }
            // -alpha a_k^dag a_l^dag
            if nk < cutoff && nl < cutoff {
                let amp = (((nk + 1) * (nl + 1)) as f64).sqrt();
                out.push(((nk + 1) * dim + (nl + 1), col, -alpha * amp));
            }
        }
    }
    out
}

fn build(params: SqueezeParams, cutoff: usize, diffs: impl Iterator<Item = i64>) -> Result<TwoModeUnitary> {
    let dim = cutoff + 1;
    let entries = generator_entries(params, cutoff);
    let mut sectors = Vec::new();
    for diff in diffs {
        let first = diff.max(0) as usize;
        let last = (cutoff as i64).min(cutoff as i64 + diff) as usize;
        let size = last + 1 - first;
        if size > MAX_SECTOR_DIM {
            return Err(Error::DimensionTooLarge {
                dim: size,
                max: MAX_SECTOR_DIM,
            });
        }
        let mut g = DMatrix::<Complex64>::zeros(size, size);
        for &(row, col, v) in &entries {
            let (rk, rl) = (row / dim, row % dim);
            let (ck, cl) = (col / dim, col % dim);
            if ck as i64 - cl as i64 != diff {
                continue;
            }
            // the generator never leaves a sector
            assert_eq!(rk as i64 - rl as i64, diff, "generator mixes photon-number differences");
            g[(rk - first, ck - first)] += v;
        }
        sectors.push(Sector {
            diff,
            first,
            unitary: g.exp(),
        });
    }
    Ok(TwoModeUnitary { cutoff, sectors })
}

/// The full truncated unitary. Fails when `(cutoff + 1)^2` exceeds
/// [`MAX_ORACLE_DIM`].
pub fn oracle_expm(params: SqueezeParams, cutoff: usize) -> Result<TwoModeUnitary> {
    let dim = (cutoff + 1) * (cutoff + 1);
    if dim > MAX_ORACLE_DIM {
        return Err(Error::DimensionTooLarge {
            dim,
            max: MAX_ORACLE_DIM,
        });
    }
    let c = cutoff as i64;
    build(params, cutoff, -c..=c)
}

/// Only the sectors with `|n_k - n_l| <= max_diff`; allows much larger
/// cutoffs than [`oracle_expm`].
pub fn oracle_expm_sectors(params: SqueezeParams, cutoff: usize, max_diff: usize) -> Result<TwoModeUnitary> {
    let c = max_diff.min(cutoff) as i64;
    build(params, cutoff, -c..=c)
}

impl TwoModeUnitary {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn sector(&self, diff: i64) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.diff == diff)
    }

    /// `<m, m'| U |n, n'>`; zero across sectors or outside the cutoff.
    ///
    /// # Panics
    /// When the requested sector was not built.
    pub fn element(&self, m: usize, mp: usize, n: usize, np: usize) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        let diff = n as i64 - np as i64;
        if m as i64 - mp as i64 != diff || [m, mp, n, np].iter().any(|&i| i > self.cutoff) {
            return zero;
        }
        let s = self.sector(diff).expect("sector not computed");
        match (s.index_of(m), s.index_of(n)) {
            (Some(i), Some(j)) => s.unitary[(i, j)],
            _ => zero,
        }
    }

    /// Applies `U` to a two-mode vector with flattened index
    /// `n_k * (cutoff + 1) + n_l`.
    pub fn apply(&self, state: &[Complex64]) -> Vec<Complex64> {
        let dim = self.cutoff + 1;
        assert_eq!(state.len(), dim * dim, "state length must be (cutoff + 1)^2");
        let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
        for s in &self.sectors {
            let size = s.unitary.nrows();
            let flat = |i: usize| {
                let nk = s.first + i;
                nk * dim + (nk as i64 - s.diff) as usize
            };
            for j in 0..size {
                let a = state[flat(j)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..size {
                    out[flat(i)] += s.unitary[(i, j)] * a;
                }
            }
        }
        out
    }

    /// Largest `|U^dag U - 1|` entry over all sectors.
    pub fn unitarity_defect(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| {
                let n = s.unitary.nrows();
                let prod = s.unitary.adjoint() * &s.unitary;
                let eye = DMatrix::<Complex64>::identity(n, n);
                (prod - eye).iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::squeeze::matrix_element;

    #[test]
    fn zero_squeezing_gives_identity() {
        let u = oracle_expm(SqueezeParams::real(0.0).unwrap(), 6).unwrap();
        for m in 0..=6 {
            for mp in 0..=6 {
                for n in 0..=6 {
                    for np in 0..=6 {
                        let expect = if m == n && mp == np { 1.0 } else { 0.0 };
                        assert_eq!(u.element(m, mp, n, np), Complex64::new(expect, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_exponential_is_unitary() {
        let u = oracle_expm(SqueezeParams::new(1.5, 0.4).unwrap(), 20).unwrap();
        assert!(u.unitarity_defect() < 1e-12, "{}", u.unitarity_defect());
        // column norms
        for (n, np) in [(0, 0), (3, 1), (20, 20), (0, 20)] {
            let norm: f64 = (0..=20)
                .flat_map(|m| (0..=20).map(move |mp| (m, mp)))
                .map(|(m, mp)| u.element(m, mp, n, np).norm_sqr())
                .sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_limit() {
        let p = SqueezeParams::real(1.0).unwrap();
        assert!(matches!(oracle_expm(p, 51), Err(Error::DimensionTooLarge { .. })));
        assert!(oracle_expm(p, 50).is_ok());
        assert!(oracle_expm_sectors(p, 200, 2).is_ok());
    }

    #[test]
    fn agrees_with_closed_form_away_from_the_cutoff() {
        for &(r, phi) in &[(0.5, 0.0), (1.0, std::f64::consts::FRAC_PI_3)] {
            let p = SqueezeParams::new(r, phi).unwrap();
            let u = oracle_expm(p, 40).unwrap();
            for m in 0..6usize {
                for mp in 0..6usize {
                    for n in 0..6usize {
                        let Some(np) = (n + mp).checked_sub(m) else { continue };
                        let exact = matrix_element(m, mp, n, np, p).unwrap();
                        let brute = u.element(m, mp, n, np);
                        assert!((exact - brute).norm() < 1e-10, "{m} {mp} {n} {np}: {exact} vs {brute}");
                    }
                }
            }
        }
    }

    #[test]
    fn apply_matches_elements() {
        let p = SqueezeParams::new(0.7, 1.0).unwrap();
        let u = oracle_expm(p, 8).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 81];
        v[2 * 9 + 1] = Complex64::new(1.0, 0.0);
        let out = u.apply(&v);
        for m in 0..9 {
            for mp in 0..9 {
                assert_eq!(out[m * 9 + mp], u.element(m, mp, 2, 1));
            }
        }
    }
}
