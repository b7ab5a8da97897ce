//! Born-rule sampling of measurement bitstrings with photon-number post-selection.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::sector::Bitmask;
use crate::state::SectorState;

/// Outcome of a batch of projective measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    /// Retained bitstrings in draw order.
    pub bitstrings: Vec<Bitmask>,
    /// Shots drawn before post-selection.
    pub shots: usize,
}

impl SampleSet {
    /// Fraction of shots that survived post-selection.
    pub fn retained_fraction(&self) -> f64 {
        self.bitstrings.len() as f64 / self.shots as f64
    }
}

/// Draws `shots` bitstrings from `|amp|²`, keeping only popcount `postselect` if given.
pub fn sample_bitstrings<T: Real, R: Rng + ?Sized>(
    state: &SectorState<T>,
    shots: usize,
    postselect: Option<usize>,
    rng: &mut R,
) -> Result<SampleSet> {
    if shots == 0 {
        return domain("at least one shot is required");
    }
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for s in state.sectors() {
        for (b, a) in s.basis().states().iter().zip(s.amps()) {
            let w = a.norm_sqr().as_f64();
            if w > 0.0 {
                labels.push(*b);
                weights.push(w);
            }
        }
    }
    if weights.is_empty() {
        return domain("cannot sample from an empty state");
    }
    let dist =
        WeightedIndex::new(&weights).map_err(|e| crate::error::Error::Domain(e.to_string()))?;
    let bitstrings = (0..shots)
        .map(|_| labels[dist.sample(rng)])
        .filter(|b| postselect.is_none_or(|n| b.count() == n))
        .collect();
    Ok(SampleSet { bitstrings, shots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::trajectory_rng;
    use crate::sector::SectorBasis;
    use crate::state::SectorAmplitudes;
    use num_complex::Complex;
    use std::sync::Arc;

    #[test]
    fn basis_state_samples_itself() {
        let s = SectorState::<f64>::basis_state(8, Bitmask(0b1010)).unwrap();
        let out = sample_bitstrings(&s, 100, None, &mut trajectory_rng(0, 0)).unwrap();
        assert_eq!(out.bitstrings, vec![Bitmask(0b1010); 100]);
        assert_eq!(out.retained_fraction(), 1.0);
    }

    #[test]
    fn even_split() {
        let basis = Arc::new(SectorBasis::enumerate(4, 1).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![
            Complex::new(h, 0.0),
            Complex::new(0.0, h),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
        ];
        let s =
            SectorState::new(4, vec![SectorAmplitudes::from_vec(basis, amps).unwrap()]).unwrap();
        let shots = 10_000;
        let out = sample_bitstrings(&s, shots, None, &mut trajectory_rng(3, 1)).unwrap();
        let first = out.bitstrings.iter().filter(|b| **b == Bitmask(1)).count() as f64;
        let sd = (shots as f64 * 0.25).sqrt();
        assert!((first - 5000.0).abs() < 5.0 * sd);
    }

    #[test]
    fn zero_shots_or_state_rejected() {
        let basis = Arc::new(SectorBasis::enumerate(4, 1).unwrap());
        let z = SectorState::new(4, vec![SectorAmplitudes::<f64>::zeros(basis)]).unwrap();
        assert!(sample_bitstrings(&z, 10, None, &mut trajectory_rng(0, 0)).is_err());
        let s = SectorState::<f64>::basis_state(4, Bitmask(1)).unwrap();
        assert!(sample_bitstrings(&s, 0, None, &mut trajectory_rng(0, 0)).is_err());
    }
}
