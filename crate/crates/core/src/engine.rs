//! Sector-restricted application of fSim layers.
//!
//! For every sector and layer the engine precomputes the index pairs that a
//! gate mixes (photon on `i` with `j` empty, and its image with the photon
//! moved to `j`) plus the states that pick up the conditional phase. A cycle
//! is then a linear sweep over those tables.

use std::sync::Arc;

use num_complex::Complex;

use crate::circuit::CircuitSpec;
use crate::error::{domain, Result};
use crate::gate::{FsimEntries, FsimParams};
use crate::scalar::Real;
use crate::sector::{Bitmask, SectorBasis};
use crate::state::{SectorAmplitudes, SectorState};

/// Index tables for one layer within one sector.
#[derive(Clone, Debug)]
struct LayerTable<T> {
    entries: FsimEntries<T>,
    /// `(photon on i, photon on j)` rank pairs, bond by bond.
    hops: Vec<(u32, u32)>,
    /// Ranks with both bond sites occupied; repeated once per such bond.
    doubles: Vec<u32>,
    /// False when the gate is the identity on singly occupied bonds.
    active: bool,
}

fn layer_table<T: Real>(
    basis: &SectorBasis,
    bonds: &[(usize, usize)],
    params: &FsimParams<T>,
) -> LayerTable<T> {
    let mut hops = Vec::new();
    let mut doubles = Vec::new();
    for &(i, j) in bonds {
        let (bi, bj) = (1u64 << i, 1u64 << j);
        for (r, &b) in basis.states().iter().enumerate() {
            match (b.0 & bi != 0, b.0 & bj != 0) {
                (true, false) => {
                    let moved = Bitmask(b.0 ^ bi ^ bj);
                    hops.push((r as u32, basis.rank_unchecked(moved) as u32));
                }
                (true, true) => doubles.push(r as u32),
                _ => {}
            }
        }
    }
    let entries = params.entries();
    let one = Complex::new(T::one(), T::zero());
    let active = !(entries.stay_i == one && entries.stay_j == one);
    LayerTable {
        entries,
        hops,
        doubles,
        active,
    }
}

#[inline]
fn apply_table<T: Real>(t: &LayerTable<T>, amps: &mut [Complex<T>]) {
    let e = &t.entries;
    if t.active {
        for &(a, b) in &t.hops {
            let (a, b) = (a as usize, b as usize);
            let x = amps[a];
            let y = amps[b];
            amps[b] = e.stay_j * y + e.hop_ij * x;
            amps[a] = e.hop_ji * y + e.stay_i * x;
        }
    }
    for &d in &t.doubles {
        amps[d as usize] *= e.both;
    }
}

#[derive(Clone, Debug)]
struct SectorTables<T> {
    basis: Arc<SectorBasis>,
    layers: Vec<LayerTable<T>>,
}

/// Precomputed Floquet cycle for a fixed circuit and set of sectors.
///
/// Immutable after construction; one engine can drive many trajectories
/// concurrently.
#[derive(Clone, Debug)]
pub struct FloquetEngine<T> {
    spec: CircuitSpec<T>,
    sectors: Vec<SectorTables<T>>,
}

impl<T: Real> FloquetEngine<T> {
    pub fn new(spec: &CircuitSpec<T>, photons: &[usize]) -> Result<Self> {
        let mut ns = photons.to_vec();
        ns.sort_unstable();
        ns.dedup();
        let n = spec.total_sites();
        let layers = spec.layers();
        let sectors = ns
            .into_iter()
            .map(|p| {
                let basis = Arc::new(SectorBasis::enumerate(n, p)?);
                let tables = layers
                    .iter()
                    .map(|l| layer_table(&basis, &l.bonds, &l.params))
                    .collect();
                Ok(SectorTables {
                    basis,
                    layers: tables,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FloquetEngine {
            spec: spec.clone(),
            sectors,
        })
    }

    pub fn spec(&self) -> &CircuitSpec<T> {
        &self.spec
    }

    /// Shared basis for `photons`, if the engine covers that sector.
    pub fn basis(&self, photons: usize) -> Option<Arc<SectorBasis>> {
        self.sectors
            .iter()
            .find(|s| s.basis.photons() == photons)
            .map(|s| s.basis.clone())
    }

    /// Basis state `b` in the engine's shared basis.
    pub fn basis_state(&self, b: Bitmask) -> Result<SectorState<T>> {
        match self.basis(b.count()) {
            Some(basis) => SectorState::basis_state_in(basis, b),
            None => domain(format!(
                "engine does not cover the {}-photon sector",
                b.count()
            )),
        }
    }

    /// Applies one Floquet cycle in place.
    pub fn cycle(&self, state: &mut SectorState<T>) -> Result<()> {
        if state.sites() != self.spec.total_sites() {
            return domain(format!(
                "state over {} sites, circuit over {}",
                state.sites(),
                self.spec.total_sites()
            ));
        }
        for s in state.sectors_mut() {
            self.cycle_sector(s)?;
        }
        Ok(())
    }

    pub fn cycle_sector(&self, s: &mut SectorAmplitudes<T>) -> Result<()> {
        let tables = self
            .sectors
            .iter()
            .find(|t| t.basis.photons() == s.photons())
            .filter(|t| t.basis.sites() == s.basis().sites());
        let Some(tables) = tables else {
            return domain(format!(
                "engine does not cover the {}-photon sector on {} sites",
                s.photons(),
                s.basis().sites()
            ));
        };
        let amps = s.amps_mut();
        for t in &tables.layers {
            apply_table(t, amps);
        }
        Ok(())
    }

    pub fn evolve(&self, state: &mut SectorState<T>, cycles: usize) -> Result<()> {
        for _ in 0..cycles {
            self.cycle(state)?;
        }
        Ok(())
    }
}

/// Applies one fSim gate on `bond = (i, j)` to every sector of `state`.
pub fn apply_fsim<T: Real>(
    state: &mut SectorState<T>,
    bond: (usize, usize),
    params: &FsimParams<T>,
) -> Result<()> {
    let (i, j) = bond;
    let n = state.sites();
    if i >= n || j >= n || i == j {
        return domain(format!("bond ({i}, {j}) invalid on {n} sites"));
    }
    for s in state.sectors_mut() {
        let table = layer_table(s.basis(), &[bond], params);
        apply_table(&table, s.amps_mut());
    }
    Ok(())
}

/// One Floquet cycle of `spec` without a cached engine.
pub fn floquet_cycle<T: Real>(state: &mut SectorState<T>, spec: &CircuitSpec<T>) -> Result<()> {
    if state.sites() != spec.total_sites() {
        return domain(format!(
            "state over {} sites, circuit over {}",
            state.sites(),
            spec.total_sites()
        ));
    }
    for layer in spec.layers() {
        for &bond in &layer.bonds {
            apply_fsim(state, bond, &layer.params)?;
        }
    }
    Ok(())
}
