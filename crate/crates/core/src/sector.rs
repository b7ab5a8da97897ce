//! Fixed-photon-number bases on a ring of qubits.
//!
//! A configuration is a [`Bitmask`] with bit `i` set when site `i` holds a
//! photon. Within a sector of `n` photons the masks are kept in ascending
//! numeric order, which coincides with colexicographic order of the occupied
//! site sets; that makes ranking a sum of binomial coefficients.

use std::fmt;

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Largest supported site count; masks live in a `u64`.
pub const MAX_SITES: usize = 63;

const fn binomial_table() -> [[u64; 64]; 64] {
    let mut t = [[0u64; 64]; 64];
    let mut n = 0;
    while n < 64 {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            k += 1;
        }
        n += 1;
    }
    t
}

static BINOMIAL: [[u64; 64]; 64] = binomial_table();

/// Binomial coefficient C(n, k) for n ≤ 63; zero when k > n.
#[inline]
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n || n > MAX_SITES {
        0
    } else {
        BINOMIAL[n][k]
    }
}

/// Occupation pattern of a register; bit `i` is site `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bitmask(pub u64);

impl Bitmask {
    pub const EMPTY: Bitmask = Bitmask(0);

    pub fn from_sites<I: IntoIterator<Item = usize>>(sites: I) -> Self {
        Bitmask(sites.into_iter().fold(0u64, |m, s| m | (1u64 << s)))
    }

    /// `len` consecutive sites starting at `start`, wrapping around a ring of `n` sites.
    pub fn cyclic_block(start: usize, len: usize, n: usize) -> Self {
        Self::from_sites((0..len).map(|i| (start + i) % n))
    }

    #[inline]
    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_occupied(self, site: usize) -> bool {
        (self.0 >> site) & 1 == 1
    }

    /// Occupied sites in ascending order.
    pub fn sites(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let s = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(s)
            }
        })
    }

    /// Moves every photon `by` sites forward on a ring of `n` sites.
    pub fn rotate(self, by: usize, n: usize) -> Self {
        Self::from_sites(self.sites().map(|s| (s + by) % n))
    }

    /// Keeps only sites `0..n`.
    #[inline]
    pub fn truncate(self, n: usize) -> Self {
        Bitmask(self.0 & low_mask(n))
    }

    /// Binary string of width `n`, site 0 rightmost.
    pub fn to_binary(self, n: usize) -> String {
        (0..n)
            .rev()
            .map(|i| if self.is_occupied(i) { '1' } else { '0' })
            .collect()
    }

    /// Parses a binary string with site 0 rightmost.
    pub fn parse_binary(s: &str) -> Result<Self> {
        let mut m = 0u64;
        for (i, ch) in s.chars().rev().enumerate() {
            match ch {
                '1' => m |= 1 << i,
                '0' => {}
                _ => return domain(format!("invalid character {ch:?} in bitstring")),
            }
        }
        Ok(Bitmask(m))
    }
}

impl fmt::Debug for Bitmask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitmask({:#b})", self.0)
    }
}

#[inline]
pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Colex rank of an `n`-subset given as a bitmask.
#[inline]
fn colex_rank(b: Bitmask) -> usize {
    b.sites()
        .enumerate()
        .map(|(i, s)| BINOMIAL[s][i + 1] as usize)
        .sum()
}

/// All configurations of `photons` photons on `sites` sites, in ascending order.
///
/// Immutable once built; share it behind an `Arc` across workers.
#[derive(Clone, PartialEq, Eq)]
pub struct SectorBasis {
    sites: usize,
    photons: usize,
    states: Vec<Bitmask>,
}

impl fmt::Debug for SectorBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectorBasis")
            .field("sites", &self.sites)
            .field("photons", &self.photons)
            .field("len", &self.states.len())
            .finish()
    }
}

impl SectorBasis {
    pub fn enumerate(sites: usize, photons: usize) -> Result<Self> {
        if sites > MAX_SITES {
            return domain(format!("{sites} sites exceeds the limit of {MAX_SITES}"));
        }
        if photons > sites {
            return domain(format!("{photons} photons do not fit on {sites} sites"));
        }
        let len = binomial(sites, photons) as usize;
        let mut states = Vec::with_capacity(len);
        if photons == 0 {
            states.push(Bitmask::EMPTY);
        } else {
            // Gosper's hack walks fixed-popcount integers in increasing order.
            let mut v: u64 = low_mask(photons);
            let limit = 1u64 << sites;
            while v < limit {
                states.push(Bitmask(v));
                let c = v & v.wrapping_neg();
                let r = v + c;
                v = (((r ^ v) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(states.len(), len);
        Ok(SectorBasis {
            sites,
            photons,
            states,
        })
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.sites
    }

    #[inline]
    pub fn photons(&self) -> usize {
        self.photons
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    #[inline]
    pub fn states(&self) -> &[Bitmask] {
        &self.states
    }

    #[inline]
    pub fn unrank(&self, ordinal: usize) -> Bitmask {
        self.states[ordinal]
    }

    /// Ordinal of `b` in this basis.
    pub fn rank(&self, b: Bitmask) -> Result<usize> {
        if b.count() != self.photons {
            return domain(format!(
                "bitmask {} has {} photons, basis holds {}",
                b.to_binary(self.sites),
                b.count(),
                self.photons
            ));
        }
        if b.0 & !low_mask(self.sites) != 0 {
            return domain(format!("bitmask {b:?} has bits beyond site {}", self.sites));
        }
        Ok(colex_rank(b))
    }

    /// Rank without validation; `b` must belong to the basis.
    #[inline]
    pub fn rank_unchecked(&self, b: Bitmask) -> usize {
        colex_rank(b)
    }
}

/// Whether a configuration has all photons in one contiguous cyclic block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitstringClass {
    Bound {
        block_start: usize,
        block_len: usize,
    },
    Scattered,
}

impl BitstringClass {
    pub fn is_bound(self) -> bool {
        matches!(self, BitstringClass::Bound { .. })
    }
}

/// Classifies a configuration on a ring of `n` sites.
///
/// The block start is the unique occupied site whose predecessor is empty.
pub fn classify(b: Bitmask, n: usize) -> Result<BitstringClass> {
    let photons = b.count();
    if n == 0 || n > MAX_SITES || b.0 & !low_mask(n) != 0 {
        return domain(format!("bitmask {b:?} does not fit a ring of {n} sites"));
    }
    if photons == 0 || photons == n {
        return domain("vacuum and fully occupied configurations are neither bound nor scattered");
    }
    Ok(classify_unchecked(b, n))
}

#[inline]
pub(crate) fn classify_unchecked(b: Bitmask, n: usize) -> BitstringClass {
    // Sites whose cyclic predecessor is empty start a run.
    let m = b.0;
    let rotated = ((m << 1) | (m >> (n - 1))) & low_mask(n);
    let starts = m & !rotated;
    if starts.count_ones() == 1 {
        BitstringClass::Bound {
            block_start: starts.trailing_zeros() as usize,
            block_len: b.count(),
        }
    } else {
        BitstringClass::Scattered
    }
}

/// Classification restricted to the first `ring` sites of a larger register.
///
/// Any photon outside the ring makes the configuration scattered.
pub fn classify_on_ring(b: Bitmask, ring: usize, total: usize) -> Result<BitstringClass> {
    if ring > total || total > MAX_SITES || b.0 & !low_mask(total) != 0 {
        return domain(format!("bitmask {b:?} does not fit {total} sites"));
    }
    let photons = b.count();
    if photons == 0 || photons >= ring {
        return domain(format!(
            "{photons} photons cannot be classified on a ring of {ring}"
        ));
    }
    if b.0 & !low_mask(ring) != 0 {
        return Ok(BitstringClass::Scattered);
    }
    Ok(classify_unchecked(b, ring))
}

/// Position on the ring in half-site units: `HalfSite(3)` is site 1.5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfSite(pub usize);

impl HalfSite {
    pub fn value<T: Real>(self) -> T {
        T::from_count(self.0) * T::lit(0.5)
    }

    /// Signed displacement from `origin` in sites, unwrapped into (−n/2, n/2].
    pub fn displacement_from<T: Real>(self, origin: HalfSite, n: usize) -> T {
        let period = 2 * n as i64;
        let mut d = (self.0 as i64 - origin.0 as i64).rem_euclid(period);
        if d > n as i64 {
            d -= period;
        }
        T::lit(d as f64 * 0.5)
    }
}

/// Midpoint of a bound block, reduced modulo the ring size.
pub fn center_of_mass(class: BitstringClass, n: usize) -> Result<HalfSite> {
    match class {
        BitstringClass::Bound {
            block_start,
            block_len,
        } => Ok(HalfSite((2 * block_start + block_len - 1) % (2 * n))),
        BitstringClass::Scattered => {
            domain("center of mass is only defined for bound configurations")
        }
    }
}

/// Fraction of a sector occupied by bound configurations under a uniform distribution.
///
/// `ring` sites carry the T/S classification; the remaining `total - ring`
/// sites only enlarge the sector.
pub fn equiprobable_bound_fraction(ring: usize, total: usize, photons: usize) -> f64 {
    ring as f64 / binomial(total, photons) as f64
}
