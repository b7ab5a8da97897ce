//! Geometry and layer schedule of one Floquet cycle.

use crate::error::{domain, Error, Result};
use crate::gate::FsimParams;
use crate::scalar::Real;
use crate::sector::MAX_SITES;

/// Register layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// Closed ring of `sites` qubits.
    Ring { sites: usize },
    /// Ring with one pendant qubit on every even ring site.
    ///
    /// Pendant `m` has index `ring + m` and couples to ring site `2m`.
    Ladder { ring: usize },
}

impl Geometry {
    /// The 14-site ring with 7 pendants.
    pub const STANDARD_LADDER: Geometry = Geometry::Ladder { ring: 14 };

    pub fn ring_sites(&self) -> usize {
        match *self {
            Geometry::Ring { sites } => sites,
            Geometry::Ladder { ring } => ring,
        }
    }

    pub fn pendant_count(&self) -> usize {
        match *self {
            Geometry::Ring { .. } => 0,
            Geometry::Ladder { ring } => ring / 2,
        }
    }

    pub fn total_sites(&self) -> usize {
        self.ring_sites() + self.pendant_count()
    }

    pub fn is_ladder(&self) -> bool {
        matches!(self, Geometry::Ladder { .. })
    }
}

/// A set of mutually disjoint bonds sharing one gate.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub bonds: Vec<(usize, usize)>,
    pub params: FsimParams<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec<T> {
    geometry: Geometry,
    ring_params: FsimParams<T>,
    pendant_params: Option<FsimParams<T>>,
}

impl<T: Real> CircuitSpec<T> {
    pub fn ring(sites: usize, params: FsimParams<T>) -> Result<Self> {
        let spec = CircuitSpec {
            geometry: Geometry::Ring { sites },
            ring_params: params,
            pendant_params: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Ring of `ring` sites with pendants driven by `pendant`.
    pub fn ladder(ring: usize, params: FsimParams<T>, pendant: FsimParams<T>) -> Result<Self> {
        let spec = CircuitSpec {
            geometry: Geometry::Ladder { ring },
            ring_params: params,
            pendant_params: Some(pendant),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let n = self.geometry.ring_sites();
        if n < 4 || !n.is_multiple_of(2) {
            return domain(format!("ring size must be even and at least 4, got {n}"));
        }
        if self.geometry.total_sites() > MAX_SITES {
            return domain(format!(
                "{} sites exceeds the limit of {MAX_SITES}",
                self.geometry.total_sites()
            ));
        }
        let finite =
            self.ring_params.is_finite() && self.pendant_params.is_none_or(|p| p.is_finite());
        if !finite {
            return domain("gate angles must be finite");
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn ring_sites(&self) -> usize {
        self.geometry.ring_sites()
    }

    pub fn total_sites(&self) -> usize {
        self.geometry.total_sites()
    }

    pub fn ring_params(&self) -> &FsimParams<T> {
        &self.ring_params
    }

    pub fn pendant_params(&self) -> Option<&FsimParams<T>> {
        self.pendant_params.as_ref()
    }

    /// Bonds `(1,2), (3,4), …, (N−1,0)`.
    pub fn odd_bonds(&self) -> Vec<(usize, usize)> {
        let n = self.ring_sites();
        (1..n).step_by(2).map(|i| (i, (i + 1) % n)).collect()
    }

    /// Bonds `(0,1), (2,3), …, (N−2,N−1)`.
    pub fn even_bonds(&self) -> Vec<(usize, usize)> {
        let n = self.ring_sites();
        (0..n).step_by(2).map(|i| (i, i + 1)).collect()
    }

    /// Ring site `2m` to pendant `ring + m`.
    pub fn pendant_bonds(&self) -> Vec<(usize, usize)> {
        let n = self.ring_sites();
        (0..self.geometry.pendant_count())
            .map(|m| (2 * m, n + m))
            .collect()
    }

    /// Layers in the order they act: odd, even, then pendants if present.
    pub fn layers(&self) -> Vec<Layer<T>> {
        let mut out = vec![
            Layer {
                bonds: self.odd_bonds(),
                params: self.ring_params,
            },
            Layer {
                bonds: self.even_bonds(),
                params: self.ring_params,
            },
        ];
        if let Some(p) = self.pendant_params {
            out.push(Layer {
                bonds: self.pendant_bonds(),
                params: p,
            });
        }
        out
    }

    /// Threads total flux `phi` through the ring as a uniform hopping phase `phi / N`.
    pub fn with_flux(&self, phi: T) -> Result<Self> {
        if self.geometry.is_ladder() {
            return Err(Error::Unsupported(
                "flux is only defined on the ring geometry".into(),
            ));
        }
        if !phi.is_finite() {
            return domain("flux must be finite");
        }
        let mut out = self.clone();
        out.ring_params.beta = phi / T::from_count(self.ring_sites());
        Ok(out)
    }

    /// Total flux `β·N` currently threading the ring.
    pub fn flux(&self) -> T {
        self.ring_params.beta * T::from_count(self.ring_sites())
    }
}

/// Flux quantum `2π·N` for a ring of `n` sites.
pub fn flux_quantum<T: Real>(n: usize) -> T {
    T::TAU() * T::from_count(n)
}
