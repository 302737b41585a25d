//! Input-state parsing and normalization.

use std::path::Path;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;

/// Renormalization larger than this is reported on stderr.
pub const RENORM_WARN: f64 = 1e-6;

/// Parses `"re,im;re,im;..."`, index = photon number. A bare `re` means a
/// real amplitude.
pub fn parse_state(text: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (k, item) in text.split(';').enumerate() {
        let item = item.trim();
        if item.is_empty() {
            bail!("empty amplitude at photon number {k}");
        }
        let parts: Vec<&str> = item.split(',').map(str::trim).collect();
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .with_context(|| format!("bad number {s:?} at photon number {k}"))?;
            if !v.is_finite() {
                bail!("non-finite amplitude at photon number {k}");
            }
            Ok(v)
        };
        let z = match parts.as_slice() {
            [re] => Complex64::new(num(re)?, 0.0),
            [re, im] => Complex64::new(num(re)?, num(im)?),
            _ => bail!("amplitude {item:?} must be \"re\" or \"re,im\""),
        };
        out.push(z);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateFile {
    Pairs(Vec<[f64; 2]>),
    Object { amplitudes: Vec<[f64; 2]> },
}

/// Reads a JSON state file: `[[re, im], ...]` or `{"amplitudes": [[re, im], ...]}`.
pub fn read_state_file(path: &Path) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: StateFile =
        serde_json::from_str(&text).with_context(|| format!("{} is not a state file", path.display()))?;
    let pairs = match parsed {
        StateFile::Pairs(p) | StateFile::Object { amplitudes: p } => p,
    };
    Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

/// Scales the amplitudes to unit norm. Returns the original norm.
pub fn normalize_amplitudes(amps: &mut [Complex64]) -> Result<f64> {
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        bail!("input state has norm {norm}");
    }
    for z in amps.iter_mut() {
        *z /= norm;
    }
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_reals() {
        let s = parse_state("0,0; 0.5, 0 ;0;0,-0.5").unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[1], Complex64::new(0.5, 0.0));
        assert_eq!(s[3], Complex64::new(0.0, -0.5));
        assert!(parse_state("1,2,3").is_err());
        assert!(parse_state("1;;2").is_err());
        assert!(parse_state("x").is_err());
        assert!(parse_state("inf").is_err());
    }

    #[test]
    fn normalizes() {
        let mut s = vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)];
        assert_eq!(normalize_amplitudes(&mut s).unwrap(), 5.0);
        assert!((s[0].re - 0.6).abs() < 1e-15);
        assert!(normalize_amplitudes(&mut [Complex64::new(0.0, 0.0)]).is_err());
    }
}
