//! Exact diagonalization of the one-cycle Floquet unitary inside a sector.
//!
//! The brickwork ring is invariant under translation by two sites, so the
//! sector splits into Bloch blocks labelled by the cell momentum `q`
//! (`T₂ ψ = e^{iq} ψ`, `q = 2πm/(N/2)`). Each block is a small unitary; its
//! eigenpairs are found from the Hermitian part of a phase-rotated copy, with
//! degenerate clusters split by the anti-Hermitian part.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::circuit::CircuitSpec;
use crate::engine::FloquetEngine;
use crate::error::{Error, Result};
use crate::scalar::wrap_phase;
use crate::sector::{classify_unchecked, SectorBasis};

type C64 = Complex<f64>;

/// One Floquet eigenstate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    /// Cell momentum in (−π, π].
    pub cell_momentum: f64,
    /// Eigenphase of the cycle unitary in (−π, π].
    pub quasi_energy: f64,
    /// Weight of the eigenvector on bound (adjacent) configurations.
    pub bound_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloquetSpectrum {
    pub sites: usize,
    pub photons: usize,
    pub levels: Vec<Level>,
}

impl FloquetSpectrum {
    /// Levels whose bound weight exceeds `threshold`.
    pub fn bound_levels(&self, threshold: f64) -> impl Iterator<Item = &Level> {
        self.levels
            .iter()
            .filter(move |l| l.bound_weight > threshold)
    }

    pub fn quasi_energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.quasi_energy).collect()
    }

    /// Levels at cell momentum `q` (matched within 1e-9).
    pub fn at_momentum(&self, q: f64) -> impl Iterator<Item = &Level> {
        self.levels
            .iter()
            .filter(move |l| wrap_phase(l.cell_momentum - q).abs() < 1e-9)
    }

    /// Distinct cell momenta, ascending.
    pub fn momenta(&self) -> Vec<f64> {
        let mut qs: Vec<f64> = self.levels.iter().map(|l| l.cell_momentum).collect();
        qs.sort_by(f64::total_cmp);
        qs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        qs
    }
}

/// Largest sector dimension accepted by [`floquet_spectrum`].
pub const MAX_ED_DIMENSION: usize = 20_000;

/// Full quasi-energy spectrum of `spec` in the `photons` sector.
pub fn floquet_spectrum(spec: &CircuitSpec<f64>, photons: usize) -> Result<FloquetSpectrum> {
    if spec.geometry().is_ladder() {
        return Err(Error::Unsupported(
            "momentum-resolved diagonalization needs the translation-invariant ring".into(),
        ));
    }
    let n = spec.ring_sites();
    let engine = FloquetEngine::new(spec, &[photons])?;
    let basis = engine
        .basis(photons)
        .expect("engine covers requested sector");
    let dim = basis.len();
    if dim > MAX_ED_DIMENSION {
        return Err(Error::Resource(format!(
            "sector dimension {dim} exceeds the diagonalization limit {MAX_ED_DIMENSION}"
        )));
    }

    // Orbits of the two-site translation.
    let shift: Vec<usize> = basis
        .states()
        .iter()
        .map(|b| basis.rank_unchecked(b.rotate(2, n)))
        .collect();
    let mut seen = vec![false; dim];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for r in 0..dim {
        if seen[r] {
            continue;
        }
        let mut orbit = vec![r];
        seen[r] = true;
        let mut x = shift[r];
        while x != r {
            seen[x] = true;
            orbit.push(x);
            x = shift[x];
        }
        orbits.push(orbit);
    }
    let bound: Vec<bool> = orbits
        .iter()
        .map(|o| photons > 0 && photons < n && classify_unchecked(basis.unrank(o[0]), n).is_bound())
        .collect();

    // U applied to each orbit representative.
    let images: Vec<Vec<C64>> = orbits
        .iter()
        .map(|o| {
            let mut s = engine.basis_state(basis.unrank(o[0]))?;
            engine.cycle(&mut s)?;
            Ok(s.sectors()[0].amps().to_vec())
        })
        .collect::<Result<_>>()?;

    let cells = n / 2;
    let mut levels = Vec::with_capacity(dim);
    for m in 0..cells {
        let q = wrap_phase(std::f64::consts::TAU * m as f64 / cells as f64);
        let members: Vec<usize> = (0..orbits.len())
            .filter(|&o| {
                let p = orbits[o].len() as f64;
                (q * p / std::f64::consts::TAU - (q * p / std::f64::consts::TAU).round()).abs()
                    < 1e-9
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let block = bloch_block(&orbits, &images, &members, q, dim);
        for (phase, vec) in unitary_eigen(&block)? {
            let w: f64 = members
                .iter()
                .zip(vec.iter())
                .filter(|(o, _)| bound[**o])
                .map(|(_, c)| c.norm_sqr())
                .sum();
            levels.push(Level {
                cell_momentum: q,
                quasi_energy: phase,
                bound_weight: w,
            });
        }
    }
    debug_assert_eq!(levels.len(), dim);
    Ok(FloquetSpectrum {
        sites: n,
        photons,
        levels,
    })
}

/// Matrix of the cycle unitary between Bloch states of the listed orbits.
///
/// With `v_o = p^{-1/2} Σ_s e^{−iqs} T₂^s|r_o⟩` and `w = U|r_o⟩`, translation
/// invariance gives `⟨v_o'|U|v_o⟩ = √(p_o/p_o') Σ_s' e^{iqs'} w[T₂^{s'} r_o']`.
fn bloch_block(
    orbits: &[Vec<usize>],
    images: &[Vec<C64>],
    members: &[usize],
    q: f64,
    dim: usize,
) -> DMatrix<C64> {
    let m = members.len();
    let mut block = DMatrix::<C64>::zeros(m, m);
    let mut step_of = vec![0usize; dim];
    let mut slot_of = vec![usize::MAX; dim];
    for (slot, &o) in members.iter().enumerate() {
        for (s, &x) in orbits[o].iter().enumerate() {
            step_of[x] = s;
            slot_of[x] = slot;
        }
    }
    for (col, &o) in members.iter().enumerate() {
        let p = orbits[o].len() as f64;
        for (x, amp) in images[o].iter().enumerate() {
            let row = slot_of[x];
            if row == usize::MAX || amp.norm_sqr() == 0.0 {
                continue;
            }
            let p_row = orbits[members[row]].len() as f64;
            let phase = C64::from_polar((p / p_row).sqrt(), q * step_of[x] as f64);
            block[(row, col)] += phase * amp;
        }
    }
    block
}

/// Eigenphases and eigenvectors of a unitary matrix.
fn unitary_eigen(u: &DMatrix<C64>) -> Result<Vec<(f64, Vec<C64>)>> {
    let m = u.nrows();
    if m == 1 {
        return Ok(vec![(u[(0, 0)].arg(), vec![C64::new(1.0, 0.0)])]);
    }
    // Generic reference phase keeps E and 2θ₀ − E from colliding in practice.
    let rot = C64::from_polar(1.0, -0.618_033_988_749_894_8);
    let a = u * rot;
    let ah = a.adjoint();
    let herm = (&a + &ah) * C64::new(0.5, 0.0);
    let anti = (&a - &ah) * C64::new(0.0, -0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut out = Vec::with_capacity(m);
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] < 1e-7 {
            end += 1;
        }
        let cols: Vec<_> = order[start..end]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let vecs = if cols.len() == 1 {
            cols
        } else {
            let v = DMatrix::from_columns(&cols);
            let sub = v.adjoint() * &anti * &v;
            let sub = (&sub + sub.adjoint()) * C64::new(0.5, 0.0);
            let inner = SymmetricEigen::new(sub);
            let rotated = v * inner.eigenvectors;
            (0..rotated.ncols())
                .map(|c| rotated.column(c).into_owned())
                .collect()
        };
        for v in vecs {
            let uv = u * &v;
            let lambda = v.dotc(&uv);
            if (lambda.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::Numeric(format!(
                    "eigenvector residual too large (|λ| = {})",
                    lambda.norm()
                )));
            }
            out.push((lambda.arg(), v.iter().copied().collect()));
        }
        start = end;
    }
    Ok(out)
}

/// Dense cycle unitary inside one sector, columns indexed by basis rank.
pub fn dense_sector_unitary(
    spec: &CircuitSpec<f64>,
    photons: usize,
) -> Result<(SectorBasis, DMatrix<C64>)> {
    let engine = FloquetEngine::new(spec, &[photons])?;
    let basis = engine
        .basis(photons)
        .expect("engine covers requested sector");
    let dim = basis.len();
    if dim > MAX_ED_DIMENSION {
        return Err(Error::Resource(format!("sector dimension {dim} too large")));
    }
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    for c in 0..dim {
        let mut s = engine.basis_state(basis.unrank(c))?;
        engine.cycle(&mut s)?;
        for (r, a) in s.sectors()[0].amps().iter().enumerate() {
            u[(r, c)] = *a;
        }
    }
    Ok(((*basis).clone(), u))
}

/// Eigenphases of a dense unitary, ascending.
pub fn eigenphases(u: &DMatrix<C64>) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = unitary_eigen(u)?.into_iter().map(|(p, _)| p).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::FsimParams;
    use std::f64::consts::PI;

    #[test]
    fn single_photon_matches_closed_form() {
        let spec = CircuitSpec::ring(12, FsimParams::new(PI / 6.0, 2.0 * PI / 3.0)).unwrap();
        let sp = floquet_spectrum(&spec, 1).unwrap();
        assert_eq!(sp.levels.len(), 12);
        let c2 = (PI / 6.0f64).cos().powi(2);
        for l in &sp.levels {
            let x = c2 - (1.0 - c2) * l.cell_momentum.cos();
            let e = x.acos();
            let d =
                (wrap_phase(l.quasi_energy - e).abs()).min(wrap_phase(l.quasi_energy + e).abs());
            assert!(d < 1e-10, "level {l:?}");
            assert!((l.bound_weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_spectrum_matches_dense() {
        let spec = CircuitSpec::ring(8, FsimParams::new(0.4, 1.7).with_beta(0.3)).unwrap();
        for n in 1..=3 {
            let sp = floquet_spectrum(&spec, n).unwrap();
            let mut a = sp.quasi_energies();
            a.sort_by(f64::total_cmp);
            let (_, u) = dense_sector_unitary(&spec, n).unwrap();
            let b = eigenphases(&u).unwrap();
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!(wrap_phase(x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn ladder_rejected() {
        let p = FsimParams::new(0.4, 1.7);
        let spec = CircuitSpec::ladder(14, p, p).unwrap();
        assert!(matches!(
            floquet_spectrum(&spec, 1),
            Err(Error::Unsupported(_))
        ));
    }
}
