//! Stochastic noise channels applied trajectory by trajectory.
//!
//! Dephasing draws a random Z angle per qubit per application. Amplitude
//! damping follows the quantum-jump picture: a jump removes a photon, which
//! post-selection would discard, so the trajectory is reported as lost
//! instead of being continued in a lower sector.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::state::SectorState;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum NoiseKind {
    #[default]
    None,
    /// Random Z rotation with angle `~ Normal(0, sigma²)` per qubit.
    Dephasing { sigma: f64 },
    /// Per-qubit photon loss probability `p`.
    AmplitudeDamping { p: f64 },
}

/// A noise channel together with the master seed of its random streams.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Result<Self> {
        match kind {
            NoiseKind::Dephasing { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => domain(
                format!("dephasing sigma must be finite and non-negative, got {sigma}"),
            ),
            NoiseKind::AmplitudeDamping { p } if !(0.0..=1.0).contains(&p) => {
                domain(format!("loss probability must lie in [0, 1], got {p}"))
            }
            _ => Ok(NoiseModel { kind, seed }),
        }
    }

    pub fn noiseless() -> Self {
        NoiseModel::default()
    }

    pub fn is_noiseless(&self) -> bool {
        match self.kind {
            NoiseKind::None => true,
            NoiseKind::Dephasing { sigma } => sigma == 0.0,
            NoiseKind::AmplitudeDamping { p } => p == 0.0,
        }
    }

    /// Independent stream for trajectory `index`.
    pub fn trajectory_rng(&self, index: u64) -> ChaCha8Rng {
        trajectory_rng(self.seed, index)
    }
}

/// Deterministic random stream `index` derived from `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseOutcome {
    Kept,
    Lost,
}

/// Applies one draw of `kind` to `state` in place.
pub fn apply_noise<T: Real, R: Rng + ?Sized>(
    state: &mut SectorState<T>,
    kind: &NoiseKind,
    rng: &mut R,
) -> Result<NoiseOutcome> {
    match *kind {
        NoiseKind::None => Ok(NoiseOutcome::Kept),
        NoiseKind::Dephasing { sigma } => {
            if sigma == 0.0 {
                return Ok(NoiseOutcome::Kept);
            }
            let normal =
                Normal::new(0.0, sigma).map_err(|e| crate::error::Error::Domain(e.to_string()))?;
            let rot: Vec<Complex<T>> = (0..state.sites())
                .map(|_| {
                    let a = T::lit(normal.sample(rng));
                    Complex::new(a.cos(), a.sin())
                })
                .collect();
            for s in state.sectors_mut() {
                let basis = s.basis().clone();
                for (amp, b) in s.amps_mut().iter_mut().zip(basis.states()) {
                    let ph = b
                        .sites()
                        .fold(Complex::new(T::one(), T::zero()), |acc, q| acc * rot[q]);
                    *amp *= ph;
                }
            }
            Ok(NoiseOutcome::Kept)
        }
        NoiseKind::AmplitudeDamping { p } => {
            if p == 0.0 {
                return Ok(NoiseOutcome::Kept);
            }
            let survive = 1.0 - p;
            let total = state.norm_sqr().as_f64();
            let keep: f64 = state
                .sectors()
                .iter()
                .map(|s| s.norm_sqr().as_f64() * survive.powi(s.photons() as i32))
                .sum::<f64>()
                / total;
            if rng.random::<f64>() >= keep {
                return Ok(NoiseOutcome::Lost);
            }
            // No-jump branch: damp each sector by its survival amplitude.
            for s in state.sectors_mut() {
                let f = T::lit(survive.powf(s.photons() as f64 / 2.0));
                for a in s.amps_mut() {
                    *a *= f;
                }
            }
            state.normalize()?;
            Ok(NoiseOutcome::Kept)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector::Bitmask;

    #[test]
    fn zero_strength_is_identity() {
        let s0 = SectorState::<f64>::basis_state(6, Bitmask(0b11)).unwrap();
        let mut rng = trajectory_rng(1, 0);
        for kind in [
            NoiseKind::None,
            NoiseKind::Dephasing { sigma: 0.0 },
            NoiseKind::AmplitudeDamping { p: 0.0 },
        ] {
            let mut s = s0.clone();
            for _ in 0..100 {
                assert_eq!(
                    apply_noise(&mut s, &kind, &mut rng).unwrap(),
                    NoiseOutcome::Kept
                );
            }
            assert_eq!(s, s0);
        }
    }

    #[test]
    fn certain_loss() {
        let mut s = SectorState::<f64>::basis_state(6, Bitmask(0b11)).unwrap();
        let mut rng = trajectory_rng(1, 0);
        let kind = NoiseKind::AmplitudeDamping { p: 1.0 };
        assert_eq!(
            apply_noise(&mut s, &kind, &mut rng).unwrap(),
            NoiseOutcome::Lost
        );
    }

    #[test]
    fn loss_rate_matches_photon_number() {
        let kind = NoiseKind::AmplitudeDamping { p: 0.1 };
        let mut rng = trajectory_rng(7, 3);
        let trials = 20000;
        let lost = (0..trials)
            .filter(|_| {
                let mut s = SectorState::<f64>::basis_state(6, Bitmask(0b111)).unwrap();
                apply_noise(&mut s, &kind, &mut rng).unwrap() == NoiseOutcome::Lost
            })
            .count();
        let expect = 1.0 - 0.9f64.powi(3);
        let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((lost as f64 / trials as f64 - expect).abs() < 5.0 * sd);
    }

    #[test]
    fn dephasing_is_deterministic_per_seed() {
        let kind = NoiseKind::Dephasing { sigma: 0.3 };
        let run = |seed| {
            let mut s = SectorState::<f64>::basis_state(6, Bitmask(0b101)).unwrap();
            let mut rng = trajectory_rng(seed, 2);
            apply_noise(&mut s, &kind, &mut rng).unwrap();
            s
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
        assert!((run(5).norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(NoiseModel::new(NoiseKind::Dephasing { sigma: -1.0 }, 0).is_err());
        assert!(NoiseModel::new(NoiseKind::AmplitudeDamping { p: 1.5 }, 0).is_err());
        assert!(NoiseModel::new(NoiseKind::AmplitudeDamping { p: 0.5 }, 0).is_ok());
    }
}
