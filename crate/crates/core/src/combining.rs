//! Diversity combining across headset detectors.
//!
//! Every branch carries the photocurrent from the serving transmitter and an
//! impairment term: squared interfering photocurrents plus noise variance.
//! Interference is added per branch, with no correlation across branches.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// What one detector sees.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchObservation {
    /// Optical power from the serving transmitter, W.
    pub signal_power: f64,
    /// Optical power from each other transmitter, W.
    pub interference_powers: Vec<f64>,
    /// Total noise variance, A^2.
    pub noise_variance: f64,
}

impl BranchObservation {
    pub fn new(signal_power: f64, interference_powers: Vec<f64>, noise_variance: f64) -> Self {
        Self {
            signal_power,
            interference_powers,
            noise_variance,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0) {
            return Err(Error::domain(format!(
                "noise variance {} must be positive",
                self.noise_variance
            )));
        }
        if !(self.signal_power >= 0.0) || self.interference_powers.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::domain("branch powers must be non-negative"));
        }
        Ok(())
    }

    fn terms(&self, responsivity: f64) -> BranchTerms {
        let interference: f64 = self
            .interference_powers
            .iter()
            .map(|p| (responsivity * p).powi(2))
            .sum();
        BranchTerms {
            signal_current: responsivity * self.signal_power,
            impairment: interference + self.noise_variance,
        }
    }
}

/// Branch reduced to signal photocurrent and impairment power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTerms {
    /// A.
    pub signal_current: f64,
    /// Squared interfering photocurrents plus noise variance, A^2.
    pub impairment: f64,
}

impl BranchTerms {
    pub fn sinr(&self) -> f64 {
        self.signal_current * self.signal_current / self.impairment
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Combiner {
    Egc,
    Sbc,
    Mrc,
}

impl Combiner {
    pub const ALL: [Combiner; 3] = [Combiner::Egc, Combiner::Sbc, Combiner::Mrc];

    pub fn name(&self) -> &'static str {
        match self {
            Combiner::Egc => "egc",
            Combiner::Sbc => "sbc",
            Combiner::Mrc => "mrc",
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "egc" => Ok(Combiner::Egc),
            "sbc" => Ok(Combiner::Sbc),
            "mrc" => Ok(Combiner::Mrc),
            other => Err(Error::domain(format!(
                "unknown combiner `{other}` (expected egc, sbc or mrc)"
            ))),
        }
    }
}

/// Receiver SINR under each combiner.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub sinr_egc: f64,
    pub sinr_sbc: f64,
    pub sinr_mrc: f64,
    pub per_branch_sinr: Vec<f64>,
    pub best_branch: usize,
}

impl SinrReport {
    pub fn get(&self, combiner: Combiner) -> f64 {
        match combiner {
            Combiner::Egc => self.sinr_egc,
            Combiner::Sbc => self.sinr_sbc,
            Combiner::Mrc => self.sinr_mrc,
        }
    }

    /// Evaluate all combiners over pre-reduced branches. Panics on an empty slice.
    pub fn from_terms(branches: &[BranchTerms]) -> Self {
        assert!(!branches.is_empty(), "at least one branch is required");
        let per_branch_sinr: Vec<f64> = branches.iter().map(BranchTerms::sinr).collect();
        let (best_branch, sinr_sbc) = select_best(&per_branch_sinr);
        Self {
            sinr_egc: egc_terms(branches),
            sinr_sbc,
            sinr_mrc: weighted_terms(branches, &per_branch_sinr),
            per_branch_sinr,
            best_branch,
        }
    }
}

fn select_best(sinrs: &[f64]) -> (usize, f64) {
    let mut best = (0, sinrs[0]);
    for (i, &s) in sinrs.iter().enumerate().skip(1) {
        if s > best.1 {
            best = (i, s);
        }
    }
    best
}

fn egc_terms(branches: &[BranchTerms]) -> f64 {
    let signal: f64 = branches.iter().map(|b| b.signal_current).sum();
    let impairment: f64 = branches.iter().map(|b| b.impairment).sum();
    signal * signal / impairment
}

fn weighted_terms(branches: &[BranchTerms], weights: &[f64]) -> f64 {
    let mut signal = 0.0;
    let mut impairment = 0.0;
    for (b, &w) in branches.iter().zip(weights) {
        signal += w * b.signal_current;
        impairment += w * w * b.impairment;
    }
    if impairment == 0.0 {
        // every weight is zero
        return 0.0;
    }
    signal * signal / impairment
}

fn reduce(branches: &[BranchObservation], responsivity: f64) -> Result<Vec<BranchTerms>> {
    if branches.is_empty() {
        return Err(Error::domain("at least one branch is required"));
    }
    if !(responsivity > 0.0) {
        return Err(Error::domain("responsivity must be positive"));
    }
    branches
        .iter()
        .map(|b| b.validate().map(|_| b.terms(responsivity)))
        .collect()
}

/// SINR of a single detector.
pub fn per_detector_sinr(b: &BranchObservation, responsivity: f64) -> Result<f64> {
    Ok(reduce(std::slice::from_ref(b), responsivity)?[0].sinr())
}

/// Equal-gain combining.
pub fn combine_egc(branches: &[BranchObservation], responsivity: f64) -> Result<f64> {
    Ok(egc_terms(&reduce(branches, responsivity)?))
}

/// Select-best combining: the best per-detector SINR and its index.
/// Ties go to the lowest index.
pub fn combine_sbc(branches: &[BranchObservation], responsivity: f64) -> Result<(f64, usize)> {
    let sinrs: Vec<f64> = reduce(branches, responsivity)?
        .iter()
        .map(BranchTerms::sinr)
        .collect();
    let (i, s) = select_best(&sinrs);
    Ok((s, i))
}

/// Linear combining with caller-supplied branch weights.
pub fn combine_weighted(
    branches: &[BranchObservation],
    weights: &[f64],
    responsivity: f64,
) -> Result<f64> {
    if weights.len() != branches.len() {
        return Err(Error::domain(format!(
            "{} weights supplied for {} branches",
            weights.len(),
            branches.len()
        )));
    }
    Ok(weighted_terms(&reduce(branches, responsivity)?, weights))
}

/// Maximal-ratio combining with each branch weighted by its own SINR.
pub fn combine_mrc(branches: &[BranchObservation], responsivity: f64) -> Result<f64> {
    let terms = reduce(branches, responsivity)?;
    let weights: Vec<f64> = terms.iter().map(BranchTerms::sinr).collect();
    Ok(weighted_terms(&terms, &weights))
}

/// All three combiners at once.
pub fn evaluate(branches: &[BranchObservation], responsivity: f64) -> Result<SinrReport> {
    Ok(SinrReport::from_terms(&reduce(branches, responsivity)?))
}

/// Shannon capacity estimate in bit/s.
pub fn shannon_rate(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * (1.0 + sinr.max(0.0)).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const R: f64 = 0.53;

    fn clean(p: f64, noise: f64) -> BranchObservation {
        BranchObservation::new(p, vec![], noise)
    }

    #[test]
    fn per_detector_values() {
        let s = per_detector_sinr(&clean(3.403e-4, 9.774e-15), R).unwrap();
        let expected = (R * 3.403e-4f64).powi(2) / 9.774e-15;
        assert_relative_eq!(s, expected, max_relative = 1e-12);
        assert!((s / 3.33e6 - 1.0).abs() < 0.01, "{s}");
        assert!((10.0 * s.log10() - 65.2).abs() < 0.05);
        assert_eq!(per_detector_sinr(&clean(0.0, 1e-15), R).unwrap(), 0.0);
        let sym = per_detector_sinr(&BranchObservation::new(1e-4, vec![1e-4], 1e-30), R).unwrap();
        assert_relative_eq!(sym, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn zero_noise_is_rejected() {
        assert!(per_detector_sinr(&clean(1e-4, 0.0), R).is_err());
        assert!(combine_egc(&[clean(1e-4, 0.0)], R).is_err());
    }

    #[test]
    fn empty_branch_list_is_rejected() {
        assert!(combine_egc(&[], R).is_err());
        assert!(combine_sbc(&[], R).is_err());
        assert!(combine_mrc(&[], R).is_err());
    }

    #[test]
    fn egc_scaling_and_dilution() {
        let one = clean(2e-5, 1e-14);
        let single = per_detector_sinr(&one, R).unwrap();
        assert_eq!(combine_egc(std::slice::from_ref(&one), R).unwrap(), single);
        let five = vec![one.clone(); 5];
        assert_relative_eq!(
            combine_egc(&five, R).unwrap(),
            5.0 * single,
            max_relative = 1e-12
        );

        let mut diluted = vec![one];
        diluted.extend(std::iter::repeat_n(clean(0.0, 1e-14), 10));
        assert!(combine_egc(&diluted, R).unwrap() < single);
    }

    #[test]
    fn sbc_picks_max_with_low_index_ties() {
        let noise = 1.0;
        // SINRs proportional to p^2: 10, 50, 3
        let mk = |s: f64| clean(s.sqrt() / R, noise);
        let (s, i) = combine_sbc(&[mk(10.0), mk(50.0), mk(3.0)], R).unwrap();
        assert_relative_eq!(s, 50.0, max_relative = 1e-12);
        assert_eq!(i, 1);
        let (s, i) = combine_sbc(&[clean(0.0, 1.0), clean(0.0, 2.0)], R).unwrap();
        assert_eq!((s, i), (0.0, 0));
        let (_, i) = combine_sbc(&[mk(4.0), mk(4.0)], R).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn mrc_single_branch_and_zero_weights() {
        let b = BranchObservation::new(3e-5, vec![1e-6, 2e-6], 5e-15);
        let single = per_detector_sinr(&b, R).unwrap();
        assert_relative_eq!(combine_mrc(&[b], R).unwrap(), single, max_relative = 1e-12);
        assert_eq!(
            combine_mrc(&[clean(0.0, 1.0), clean(0.0, 1.0)], R).unwrap(),
            0.0
        );
    }

    #[test]
    fn classical_mrc_weights_sum_branch_sinrs() {
        // weights proportional to signal / noise give s1 + s2
        let a = clean(4e-5, 2e-14);
        let b = clean(1e-5, 5e-15);
        let s1 = per_detector_sinr(&a, R).unwrap();
        let s2 = per_detector_sinr(&b, R).unwrap();
        let w = [
            R * a.signal_power / a.noise_variance,
            R * b.signal_power / b.noise_variance,
        ];
        let got = combine_weighted(&[a.clone(), b.clone()], &w, R).unwrap();
        assert_relative_eq!(got, s1 + s2, max_relative = 1e-12);

        // SINR weights, brute force against the closed form
        let (i1, i2) = (R * a.signal_power, R * b.signal_power);
        let brute =
            (s1 * i1 + s2 * i2).powi(2) / (s1 * s1 * a.noise_variance + s2 * s2 * b.noise_variance);
        assert_relative_eq!(
            combine_mrc(&[a, b], R).unwrap(),
            brute,
            max_relative = 1e-12
        );
    }

    #[test]
    fn weight_count_mismatch() {
        assert!(combine_weighted(&[clean(1.0, 1.0)], &[1.0, 2.0], R).is_err());
    }

    #[test]
    fn shannon_values() {
        assert_eq!(shannon_rate(0.0, 10e6), 0.0);
        assert!((shannon_rate(100.0, 10e6) / 1e6 - 66.6).abs() < 0.05);
        assert!((shannon_rate(31.6, 10e6) / 1e6 - 50.3).abs() < 0.05);
    }

    #[test]
    fn combiner_names_round_trip() {
        for c in Combiner::ALL {
            assert_eq!(c.name().parse::<Combiner>().unwrap(), c);
        }
        assert!("zf".parse::<Combiner>().is_err());
    }
}
