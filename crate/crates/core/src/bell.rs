//! CHSH-Bell analysis: correlation coefficients from coincidence counts
//! with Poisson error propagation, and the S parameter.

use crate::detector::CountRecord;
use crate::error::{Error, Result};

/// The four correlators with errors, the CHSH parameter, and its error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellResult {
    /// E(a,b), E(a,b'), E(a',b), E(a',b') with standard errors.
    pub correlators: [(f64, f64); 4],
    pub s: f64,
    pub sigma_s: f64,
}

impl BellResult {
    /// Number of standard deviations by which S exceeds the classical
    /// bound of 2.
    pub fn violation_sigmas(&self) -> f64 {
        (self.s - 2.0) / self.sigma_s
    }
}

/// Correlation coefficient from one 2x2 block of coincidence counts:
/// E = (R++ + R-- - R+- - R-+) / N, with Poisson error
/// sigma_E = 2 sqrt(P M / N^3), P and M the concordant/discordant sums.
pub fn chsh_correlation(r_pp: u64, r_pm: u64, r_mp: u64, r_mm: u64) -> Result<(f64, f64)> {
    let p = (r_pp + r_mm) as f64;
    let m = (r_pm + r_mp) as f64;
    let n = p + m;
    if n == 0.0 {
        return Err(Error::DegenerateData("all four counts are zero".into()));
    }
    let e = (p - m) / n;
    let sigma = 2.0 * (p * m / (n * n * n)).sqrt();
    Ok((e, sigma))
}

/// CHSH parameter from the four correlators:
/// S = |E(a,b) + E(a,b') + E(a',b) - E(a',b')|, errors in quadrature.
pub fn chsh_parameter(correlators: &[(f64, f64); 4]) -> (f64, f64) {
    let s = (correlators[0].0 + correlators[1].0 + correlators[2].0 - correlators[3].0).abs();
    let sigma = correlators.iter().map(|c| c.1 * c.1).sum::<f64>().sqrt();
    (s, sigma)
}

/// Full Bell evaluation from a 4x4 count table in signal-major layout:
/// counts[s][i], signal settings ordered (a+, a-, a'+, a'-) and idler
/// settings (b+, b-, b'+, b'-).
pub fn bell_result_from_counts(counts: &[[u64; 4]; 4]) -> Result<BellResult> {
    let block = |s0: usize, i0: usize| {
        chsh_correlation(
            counts[s0][i0],
            counts[s0][i0 + 1],
            counts[s0 + 1][i0],
            counts[s0 + 1][i0 + 1],
        )
    };
    let correlators = [block(0, 0)?, block(0, 2)?, block(2, 0)?, block(2, 2)?];
    let (s, sigma_s) = chsh_parameter(&correlators);
    Ok(BellResult { correlators, s, sigma_s })
}

/// Arranges the 16 records of a simulated Bell run (signal-major order)
/// into the count table and evaluates it.
pub fn bell_result_from_records(records: &[CountRecord]) -> Result<BellResult> {
    if records.len() != 16 {
        return Err(Error::DegenerateData(format!(
            "expected 16 Bell records, got {}",
            records.len()
        )));
    }
    let mut counts = [[0u64; 4]; 4];
    for (k, r) in records.iter().enumerate() {
        counts[k / 4][k % 4] = r.counts_cc;
    }
    bell_result_from_counts(&counts)
}

/// The reference 200-second count table, signal-major layout.
pub fn table2_counts() -> [[u64; 4]; 4] {
    [
        [1292, 315, 1423, 301],
        [367, 1331, 294, 1469],
        [1419, 329, 358, 1401],
        [336, 1394, 1333, 335],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_reference_block() {
        let (e, sigma) = chsh_correlation(1292, 315, 367, 1331).unwrap();
        assert!((e - 0.5873).abs() < 1e-4, "E {e}");
        assert!((sigma - 0.0141).abs() < 1e-4, "sigma {sigma}");
    }

    #[test]
    fn correlation_limits() {
        let (e, _) = chsh_correlation(100, 100, 100, 100).unwrap();
        assert_eq!(e, 0.0);
        let (e, s) = chsh_correlation(500, 0, 0, 700).unwrap();
        assert_eq!(e, 1.0);
        assert_eq!(s, 0.0);
        assert!(chsh_correlation(0, 0, 0, 0).is_err());
    }

    #[test]
    fn reference_table_violation() {
        let res = bell_result_from_counts(&table2_counts()).unwrap();
        let want = [0.58729, 0.65873, 0.61760, -0.59556];
        for (k, &(e, sigma)) in res.correlators.iter().enumerate() {
            assert!((e - want[k]).abs() < 1e-4, "E[{k}] {e} vs {}", want[k]);
            assert!(sigma > 0.012 && sigma < 0.016);
        }
        assert!((res.s - 2.4592).abs() < 5e-4, "S {}", res.s);
        assert!((res.sigma_s - 0.0270).abs() < 3e-4, "sigma_S {}", res.sigma_s);
        assert!(res.violation_sigmas() > 15.0, "{} sigma", res.violation_sigmas());
    }

    #[test]
    fn correlator_magnitude_bounded() {
        let mut x = 7u64;
        for _ in 0..200 {
            // Small deterministic LCG to scatter counts.
            let mut next = || {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 33) % 2000
            };
            let (a, b, c, d) = (next(), next(), next(), next());
            if a + b + c + d == 0 {
                continue;
            }
            let (e, _) = chsh_correlation(a, b, c, d).unwrap();
            assert!(e.abs() <= 1.0 + 1e-15);
        }
    }
}
