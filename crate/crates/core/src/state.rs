//! State vectors restricted to a union of photon-number sectors.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{domain, Result};
use crate::scalar::{czero, Real};
use crate::sector::{Bitmask, SectorBasis};

/// Amplitudes over one sector, indexed by basis rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorAmplitudes<T> {
    basis: Arc<SectorBasis>,
    amps: Vec<Complex<T>>,
}

impl<T: Real> SectorAmplitudes<T> {
    pub fn zeros(basis: Arc<SectorBasis>) -> Self {
        let amps = vec![czero(); basis.len()];
        SectorAmplitudes { basis, amps }
    }

    pub fn from_vec(basis: Arc<SectorBasis>, amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.len() != basis.len() {
            return domain(format!(
                "{} amplitudes supplied for a sector of dimension {}",
                amps.len(),
                basis.len()
            ));
        }
        Ok(SectorAmplitudes { basis, amps })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn photons(&self) -> usize {
        self.basis.photons()
    }

    pub fn amps(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|amp|²` per basis state, in rank order.
    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn amplitude(&self, b: Bitmask) -> Result<Complex<T>> {
        Ok(self.amps[self.basis.rank(b)?])
    }
}

/// Pure state supported on a set of photon-number sectors.
///
/// Sectors are stored in increasing photon number; no sector holds
/// amplitudes outside its own basis, so number conservation is structural.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorState<T> {
    sites: usize,
    sectors: Vec<SectorAmplitudes<T>>,
}

impl<T: Real> SectorState<T> {
    pub fn new(sites: usize, mut sectors: Vec<SectorAmplitudes<T>>) -> Result<Self> {
        if sectors.is_empty() {
            return domain("a state needs at least one sector");
        }
        sectors.sort_by_key(|s| s.photons());
        for w in sectors.windows(2) {
            if w[0].photons() == w[1].photons() {
                return domain(format!("sector {} declared twice", w[0].photons()));
            }
        }
        if let Some(s) = sectors.iter().find(|s| s.basis.sites() != sites) {
            return domain(format!(
                "sector over {} sites in a state over {sites}",
                s.basis.sites()
            ));
        }
        Ok(SectorState { sites, sectors })
    }

    /// Computational basis state `b` on `sites` qubits.
    pub fn basis_state(sites: usize, b: Bitmask) -> Result<Self> {
        let basis = Arc::new(SectorBasis::enumerate(sites, b.count())?);
        Self::basis_state_in(basis, b)
    }

    /// Computational basis state inside an existing (shared) basis.
    pub fn basis_state_in(basis: Arc<SectorBasis>, b: Bitmask) -> Result<Self> {
        let r = basis.rank(b)?;
        let sites = basis.sites();
        let mut s = SectorAmplitudes::zeros(basis);
        s.amps[r] = Complex::new(T::one(), T::zero());
        Self::new(sites, vec![s])
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn sectors(&self) -> &[SectorAmplitudes<T>] {
        &self.sectors
    }

    pub fn sectors_mut(&mut self) -> &mut [SectorAmplitudes<T>] {
        &mut self.sectors
    }

    pub fn photon_numbers(&self) -> Vec<usize> {
        self.sectors.iter().map(|s| s.photons()).collect()
    }

    pub fn max_photons(&self) -> usize {
        self.sectors.last().map_or(0, |s| s.photons())
    }

    pub fn sector(&self, photons: usize) -> Option<&SectorAmplitudes<T>> {
        self.sectors.iter().find(|s| s.photons() == photons)
    }

    pub fn sector_mut(&mut self, photons: usize) -> Option<&mut SectorAmplitudes<T>> {
        self.sectors.iter_mut().find(|s| s.photons() == photons)
    }

    /// Amplitude of `b`; zero when its sector is not declared.
    pub fn amplitude(&self, b: Bitmask) -> Result<Complex<T>> {
        if b.0 >> self.sites != 0 {
            return domain(format!("{b:?} exceeds {} sites", self.sites));
        }
        match self.sector(b.count()) {
            Some(s) => s.amplitude(b),
            None => Ok(czero()),
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.sectors.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > T::zero()) {
            return domain("cannot normalize a zero state");
        }
        let inv = T::one() / n.sqrt();
        for s in &mut self.sectors {
            for a in &mut s.amps {
                *a *= inv;
            }
        }
        Ok(())
    }

    /// Inner product `⟨self|other⟩` over shared sectors.
    pub fn inner(&self, other: &SectorState<T>) -> Complex<T> {
        let mut acc = czero();
        for s in &self.sectors {
            if let Some(o) = other.sector(s.photons()) {
                for (a, b) in s.amps.iter().zip(&o.amps) {
                    acc += a.conj() * b;
                }
            }
        }
        acc
    }

    /// Largest amplitude difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &SectorState<T>) -> T {
        let mut worst = T::zero();
        for s in self.sectors.iter().chain(other.sectors.iter()) {
            let n = s.photons();
            let len = s.basis.len();
            let zero = czero();
            for r in 0..len {
                let a = self.sector(n).map_or(zero, |x| x.amps[r]);
                let b = other.sector(n).map_or(zero, |x| x.amps[r]);
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_state_has_unit_norm() {
        let s = SectorState::<f64>::basis_state(6, Bitmask(0b000110)).unwrap();
        assert_eq!(s.photon_numbers(), vec![2]);
        assert_eq!(s.norm_sqr(), 1.0);
        assert_eq!(s.amplitude(Bitmask(0b000110)).unwrap().re, 1.0);
        assert_eq!(s.amplitude(Bitmask(0b000101)).unwrap().norm(), 0.0);
        assert_eq!(s.amplitude(Bitmask(0b1)).unwrap().norm(), 0.0);
    }

    #[test]
    fn duplicate_sectors_rejected() {
        let b = Arc::new(SectorBasis::enumerate(4, 1).unwrap());
        let a = SectorAmplitudes::<f64>::zeros(b.clone());
        assert!(SectorState::new(4, vec![a.clone(), a]).is_err());
        let wrong = Arc::new(SectorBasis::enumerate(5, 1).unwrap());
        assert!(SectorState::new(4, vec![SectorAmplitudes::<f64>::zeros(wrong)]).is_err());
    }
}
