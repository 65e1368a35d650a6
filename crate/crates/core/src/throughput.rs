//! Throughput over a corpus where the first sighting of a word costs a full
//! analysis and repeats cost only a cache lookup.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EstimateError {
    #[error("frequency list is empty")]
    Empty,
    #[error("{n} distinct words but {len} frequencies")]
    Length { n: usize, len: usize },
    #[error("frequency {0} is below 1")]
    Frequency(u64),
    #[error("timings must be finite and non-negative")]
    Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub sec_per_word: f64,
    pub words_per_sec: f64,
}

/// `(t_first * n + sum(t_sub * (f - 1))) / sum(f)` seconds per running word.
pub fn estimate(n: usize, freqs: &[u64], t_first: f64, t_sub: f64) -> Result<Estimate, EstimateError> {
    if freqs.is_empty() {
        return Err(EstimateError::Empty);
    }
    if n != freqs.len() {
        return Err(EstimateError::Length { n, len: freqs.len() });
    }
    if let Some(&f) = freqs.iter().find(|&&f| f < 1) {
        return Err(EstimateError::Frequency(f));
    }
    if !(t_first.is_finite() && t_sub.is_finite() && t_first >= 0.0 && t_sub >= 0.0) {
        return Err(EstimateError::Timing);
    }
    // Integer sums keep the only rounding in the final two products.
    let total: u128 = freqs.iter().map(|&f| f as u128).sum();
    let repeats = total - n as u128;
    let sec = (t_first * n as f64 + t_sub * repeats as f64) / total as f64;
    Ok(Estimate {
        sec_per_word: sec,
        words_per_sec: if sec > 0.0 { 1.0 / sec } else { f64::INFINITY },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_values() {
        let e = estimate(1, &[1], 5.324, 0.054).unwrap();
        assert!((e.sec_per_word - 5.324).abs() < 1e-12);
        let e = estimate(1, &[2], 5.324, 0.054).unwrap();
        assert!((e.sec_per_word - 2.689).abs() < 1e-12);
        let e = estimate(2, &[3, 1], 5.324, 0.054).unwrap();
        assert!((e.sec_per_word - 2.689).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(estimate(0, &[], 1.0, 1.0), Err(EstimateError::Empty));
        assert_eq!(estimate(2, &[1], 1.0, 1.0), Err(EstimateError::Length { n: 2, len: 1 }));
        assert_eq!(estimate(1, &[0], 1.0, 1.0), Err(EstimateError::Frequency(0)));
        assert_eq!(estimate(1, &[1], f64::NAN, 1.0), Err(EstimateError::Timing));
    }
}
