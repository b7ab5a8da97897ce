//! Closed-form bound-state bands of the Floquet XXZ chain.
//!
//! Bands obey `cos(E − χ) = cos²α − sin²α·cos q`. The momentum `q` here is
//! conjugate to translation by one brickwork unit cell (two sites), so a
//! lattice momentum `k` per site enters as `q = 2k`, and velocities from
//! these formulas are in cells per cycle. Helpers for the per-site view are
//! provided alongside.

use crate::error::{domain, Error, Result};
use crate::scalar::{wrap_phase, Real};

/// Gapped (`φ > 2θ`) or gapless (`φ < 2θ`) side of the phase diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Gapped,
    Gapless,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rapidity<T> {
    pub eta: T,
    pub regime: Regime,
}

/// Rapidity `η` with `sinh²η` (gapped) or `sin²η` (gapless) equal to
/// `±(cos²θ − cos²(φ/2)) / sin²θ`.
pub fn rapidity<T: Real>(theta: T, phi: T) -> Result<Rapidity<T>> {
    if !(theta.is_finite() && phi.is_finite()) {
        return domain("angles must be finite");
    }
    let s2 = theta.sin().powi(2);
    if s2 < T::lit(1e-24) {
        return domain("rapidity is undefined without hopping (sin θ = 0)");
    }
    let half = (phi * T::lit(0.5)).cos().powi(2);
    let g = (theta.cos().powi(2) - half) / s2;
    if g.abs() < T::lit(1e-12) {
        return Err(Error::Boundary(format!(
            "φ = 2θ (θ = {theta}, φ = {phi}) gives η = 0"
        )));
    }
    if g > T::zero() {
        Ok(Rapidity {
            eta: g.sqrt().asinh(),
            regime: Regime::Gapped,
        })
    } else {
        Ok(Rapidity {
            eta: (-g).sqrt().min(T::one()).asin(),
            regime: Regime::Gapless,
        })
    }
}

/// Band parameters for an `n`-photon bound state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionParams<T> {
    pub photons: usize,
    pub theta: T,
    pub phi: T,
    /// Absent only for a single photon exactly at `φ = 2θ`, where it is not needed.
    pub rapidity: Option<Rapidity<T>>,
    /// Effective hopping angle in `[0, π/2]` (equal to `θ` for one photon).
    pub alpha: T,
    pub cos2_alpha: T,
    pub chi: T,
}

impl<T: Real> DispersionParams<T> {
    pub fn new(photons: usize, theta: T, phi: T) -> Result<Self> {
        if photons == 0 {
            return domain("bound states need at least one photon");
        }
        if photons == 1 {
            let rapidity = match rapidity(theta, phi) {
                Ok(r) => Some(r),
                Err(Error::Boundary(_)) => None,
                Err(Error::Domain(_)) if theta.sin() == T::zero() => None,
                Err(e) => return Err(e),
            };
            return Ok(DispersionParams {
                photons,
                theta,
                phi,
                rapidity,
                alpha: theta,
                cos2_alpha: theta.cos().powi(2),
                chi: T::zero(),
            });
        }
        let r = rapidity(theta, phi)?;
        let n = T::from_count(photons);
        type Pair<T> = (fn(T) -> T, fn(T) -> T);
        let (s, t): Pair<T> = match r.regime {
            Regime::Gapped => (T::sinh, T::tanh),
            Regime::Gapless => (T::sin, T::tan),
        };
        let c2 = theta.cos().powi(2);
        let sn2 = s(n * r.eta).powi(2);
        let s12 = s(r.eta).powi(2);
        let denom = c2 * sn2 + theta.sin().powi(2) * s12;
        if !(denom > T::zero()) {
            return Err(Error::Numeric(format!(
                "degenerate band parameters at θ = {theta}, φ = {phi}, n = {photons}"
            )));
        }
        let cos2_alpha = (c2 * sn2 / denom).min(T::one()).max(T::zero());
        let ratio = t(r.eta) / t(n * r.eta);
        let chi = n * phi - T::lit(2.0) * ((phi * T::lit(0.5)).tan() * ratio).atan();
        Ok(DispersionParams {
            photons,
            theta,
            phi,
            rapidity: Some(r),
            alpha: cos2_alpha.sqrt().acos(),
            cos2_alpha,
            chi,
        })
    }

    pub fn sin2_alpha(&self) -> T {
        T::one() - self.cos2_alpha
    }

    pub fn regime(&self) -> Option<Regime> {
        self.rapidity.map(|r| r.regime)
    }

    /// Right-hand side `cos²α − sin²α·cos q`, clamped within 1e-12 of `[−1, 1]`.
    fn rhs(&self, q: T) -> Result<T> {
        let x = self.cos2_alpha - self.sin2_alpha() * q.cos();
        let tol = T::lit(1e-12);
        if x.abs() > T::one() + tol {
            return Err(Error::Numeric(format!("band argument {x} outside [-1, 1]")));
        }
        Ok(x.max(-T::one()).min(T::one()))
    }

    /// Both branches `(E₊, E₋) = χ ± arccos(…)` at cell momentum `q`, reduced to (−π, π].
    pub fn quasi_energy(&self, q: T) -> Result<(T, T)> {
        let a = self.rhs(q)?.acos();
        Ok((wrap_phase(self.chi + a), wrap_phase(self.chi - a)))
    }

    /// Both branches at per-site lattice momentum `k`.
    pub fn quasi_energy_site(&self, k: T) -> Result<(T, T)> {
        self.quasi_energy(cell_momentum(k))
    }

    /// `dE₊/dq = sin²α·sin q / sin(E₊ − χ)` in cells per cycle.
    ///
    /// The sign convention follows `dE/dq`; the lower branch has the
    /// opposite sign.
    pub fn group_velocity(&self, q: T) -> Result<T> {
        let x = self.rhs(q)?;
        let s = (T::one() - x * x).max(T::zero()).sqrt();
        if s < T::lit(1e-12) {
            return Err(Error::Singular(format!(
                "group velocity is singular at the band edge q = {q}"
            )));
        }
        Ok(self.sin2_alpha() * q.sin() / s)
    }

    /// `sin²α / √(1 − cos⁴α)` in cells per cycle: the velocity at the band
    /// center `q = π/2`, which is what a threshold wavefront tracks. The
    /// supremum over `q` sits closer to the band edge and is larger.
    pub fn max_group_velocity(&self) -> T {
        let c4 = self.cos2_alpha.powi(2);
        let d = (T::one() - c4).sqrt();
        if d == T::zero() {
            T::zero()
        } else {
            self.sin2_alpha() / d
        }
    }

    /// Fastest wavefront in sites per cycle.
    pub fn max_front_speed(&self) -> T {
        T::lit(2.0) * self.max_group_velocity()
    }

    /// Spread `max E₊ − min E₊` over a dense momentum grid.
    pub fn band_width(&self) -> T {
        const POINTS: usize = 4001;
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..POINTS {
            let q = -T::PI() + T::TAU() * T::from_count(i) / T::from_count(POINTS - 1);
            // Unreduced branch so that the spread is not broken by the 2π wrap.
            let x = self.cos2_alpha - self.sin2_alpha() * q.cos();
            let e = x.max(-T::one()).min(T::one()).acos();
            lo = lo.min(e);
            hi = hi.max(e);
        }
        hi - lo
    }

    /// `2·n·η`, raw and reduced to (−π, π]; only defined in the gapless regime.
    pub fn gapless_threshold(&self) -> Result<GaplessThreshold<T>> {
        match self.rapidity {
            Some(Rapidity {
                eta,
                regime: Regime::Gapless,
            }) => {
                let raw = T::lit(2.0) * T::from_count(self.photons) * eta;
                Ok(GaplessThreshold {
                    raw,
                    reduced: wrap_phase(raw),
                })
            }
            _ => domain("the momentum threshold exists only in the gapless regime"),
        }
    }

    /// Both branches on a grid of cell momenta.
    pub fn band(&self, q_grid: &[T]) -> Result<Band<T>> {
        let mut upper = Vec::with_capacity(q_grid.len());
        let mut lower = Vec::with_capacity(q_grid.len());
        for &q in q_grid {
            let (p, m) = self.quasi_energy(q)?;
            upper.push(p);
            lower.push(m);
        }
        Ok(Band {
            q_grid: q_grid.to_vec(),
            upper,
            lower,
        })
    }
}

pub fn dispersion_params<T: Real>(photons: usize, theta: T, phi: T) -> Result<DispersionParams<T>> {
    DispersionParams::new(photons, theta, phi)
}

pub fn quasi_energy<T: Real>(q: T, dp: &DispersionParams<T>) -> Result<(T, T)> {
    dp.quasi_energy(q)
}

pub fn group_velocity<T: Real>(q: T, dp: &DispersionParams<T>) -> Result<T> {
    dp.group_velocity(q)
}

pub fn max_group_velocity<T: Real>(dp: &DispersionParams<T>) -> T {
    dp.max_group_velocity()
}

pub fn band_width<T: Real>(dp: &DispersionParams<T>) -> T {
    dp.band_width()
}

pub fn gapless_threshold<T: Real>(dp: &DispersionParams<T>) -> Result<GaplessThreshold<T>> {
    dp.gapless_threshold()
}

/// Momentum threshold `k₀ = 2nη`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaplessThreshold<T> {
    pub raw: T,
    pub reduced: T,
}

/// Both branches of a band sampled on a momentum grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Band<T> {
    pub q_grid: Vec<T>,
    pub upper: Vec<T>,
    pub lower: Vec<T>,
}

/// Cell momentum `2k` (reduced) for a per-site momentum `k`.
pub fn cell_momentum<T: Real>(k: T) -> T {
    wrap_phase(T::lit(2.0) * k)
}

/// Per-site momentum shift `n·Φ/N` picked up by an `n`-photon bound state.
pub fn flux_shift<T: Real>(photons: usize, flux: T, sites: usize) -> T {
    wrap_phase(T::from_count(photons) * flux / T::from_count(sites))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn gapped_rapidity() {
        let r = rapidity(PI / 6.0, 2.0 * PI / 3.0).unwrap();
        assert_eq!(r.regime, Regime::Gapped);
        assert_abs_diff_eq!(r.eta.sinh().powi(2), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.eta, (2f64.sqrt() + 3f64.sqrt()).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.eta, 1.14622, epsilon = 1e-5);
    }

    #[test]
    fn gapless_rapidity() {
        let r = rapidity(PI / 3.0, PI / 6.0).unwrap();
        assert_eq!(r.regime, Regime::Gapless);
        let expect = ((PI / 12.0).cos().powi(2) - 0.25) / 0.75;
        assert_abs_diff_eq!(r.eta.sin().powi(2), expect, epsilon = 1e-12);
    }

    #[test]
    fn boundary_flagged() {
        assert!(matches!(
            rapidity(PI / 6.0, PI / 3.0),
            Err(Error::Boundary(_))
        ));
        assert!(DispersionParams::new(1, PI / 6.0, PI / 3.0).is_ok());
        assert!(DispersionParams::new(2, PI / 6.0, PI / 3.0).is_err());
    }

    #[test]
    fn two_photon_params() {
        let dp = DispersionParams::new(2, PI / 6.0, 2.0 * PI / 3.0).unwrap();
        assert_abs_diff_eq!(dp.cos2_alpha, 18.0 / 18.5, epsilon = 1e-12);
        let exact = 4.0 * PI / 3.0 - 2.0 * (5.0 * 3f64.sqrt() / 6.0).atan();
        assert_abs_diff_eq!(dp.chi, exact, epsilon = 1e-12);
        assert_abs_diff_eq!(dp.chi, 2.2583, epsilon = 1e-3);
    }

    #[test]
    fn single_photon_params() {
        let dp = DispersionParams::new(1, PI / 6.0, 2.0 * PI / 3.0).unwrap();
        assert_eq!(dp.alpha, PI / 6.0);
        assert_eq!(dp.chi, 0.0);
        let (p, m) = dp.quasi_energy(0.0).unwrap();
        assert_abs_diff_eq!(p, PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m, -PI / 3.0, epsilon = 1e-12);
        let (p, m) = dp.quasi_energy(PI).unwrap();
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn velocities() {
        let dp = DispersionParams::new(1, PI / 6.0, 2.0 * PI / 3.0).unwrap();
        assert_abs_diff_eq!(
            dp.max_group_velocity(),
            0.25 / (1.0 - 0.5625f64).sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(dp.max_group_velocity(), 0.37796, epsilon = 1e-5);
        assert_eq!(dp.group_velocity(0.3).unwrap().signum(), 1.0);
        assert_eq!(dp.group_velocity(0.0).unwrap(), 0.0);
        assert!(dp.group_velocity(PI).is_err());
        let mut prev = f64::INFINITY;
        for n in 1..=5 {
            let v = DispersionParams::new(n, PI / 6.0, 2.0 * PI / 3.0)
                .unwrap()
                .max_group_velocity();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn widths() {
        let dp = DispersionParams::new(1, PI / 6.0, 0.0).unwrap();
        assert_abs_diff_eq!(dp.band_width(), PI / 3.0, epsilon = 1e-9);
        let w = |phi| {
            DispersionParams::new(2, PI / 6.0, phi)
                .unwrap()
                .band_width()
        };
        assert!(w(1.5) > w(2.0) && w(2.0) > w(2.5));
        assert!(DispersionParams::new(1, 1e-6, 0.0).unwrap().band_width() < 1e-5);
    }

    #[test]
    fn thresholds() {
        let eta = rapidity(PI / 3.0, PI / 6.0).unwrap().eta;
        let t2 = DispersionParams::new(2, PI / 3.0, PI / 6.0)
            .unwrap()
            .gapless_threshold()
            .unwrap();
        assert_abs_diff_eq!(t2.raw, 4.0 * eta, epsilon = 1e-15);
        assert_abs_diff_eq!(t2.reduced, 4.0 * eta - 2.0 * PI, epsilon = 1e-12);
        let t1 = DispersionParams::new(1, PI / 3.0, PI / 6.0)
            .unwrap()
            .gapless_threshold()
            .unwrap();
        assert_abs_diff_eq!(t1.raw, 2.0 * eta, epsilon = 1e-15);
        let near = DispersionParams::new(2, PI / 3.0, 2.0 * PI / 3.0 - 1e-7).unwrap();
        assert!(near.gapless_threshold().unwrap().raw < 1e-2);
        assert!(DispersionParams::new(2, PI / 6.0, 2.0 * PI / 3.0)
            .unwrap()
            .gapless_threshold()
            .is_err());
    }

    #[test]
    fn flux_shifts() {
        assert_eq!(flux_shift(3, 0.0, 24), 0.0);
        let q0 = 2.0 * PI * 24.0;
        assert_abs_diff_eq!(flux_shift(2, 0.25 * q0, 24).abs(), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(flux_shift(1, q0, 24), 0.0, epsilon = 1e-12);
    }
}
