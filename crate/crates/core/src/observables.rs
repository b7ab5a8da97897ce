//! Trajectory observables: occupancies, bound-state center of mass,
//! bound fraction, wavefront speed and bitstring histograms.
//!
//! Time axes run over `t = 0, 1, …, cycles` (the initial state plus one
//! entry per applied cycle).

use std::collections::HashMap;

use crate::circuit::CircuitSpec;
use crate::engine::FloquetEngine;
use crate::error::{domain, Error, Result};
use crate::noise::{apply_noise, NoiseModel, NoiseOutcome};
use crate::scalar::Real;
use crate::sector::{
    binomial, center_of_mass, classify_on_ring, Bitmask, BitstringClass, HalfSite, SectorBasis,
};
use crate::spectroscopy::linear_fit;
use crate::state::SectorAmplitudes;

/// Per-basis-state bound flags and center-of-mass positions on the ring.
#[derive(Clone, Debug)]
pub struct RingClassifier {
    ring: usize,
    bound: Vec<bool>,
    cm: Vec<Option<HalfSite>>,
}

impl RingClassifier {
    pub fn new(basis: &SectorBasis, ring: usize) -> Result<Self> {
        let mut bound = Vec::with_capacity(basis.len());
        let mut cm = Vec::with_capacity(basis.len());
        for &b in basis.states() {
            let c = classify_on_ring(b, ring, basis.sites())?;
            bound.push(c.is_bound());
            cm.push(match c {
                BitstringClass::Bound { .. } => Some(center_of_mass(c, ring)?),
                BitstringClass::Scattered => None,
            });
        }
        Ok(RingClassifier { ring, bound, cm })
    }

    pub fn ring(&self) -> usize {
        self.ring
    }

    pub fn is_bound(&self, rank: usize) -> bool {
        self.bound[rank]
    }

    pub fn center_of_mass(&self, rank: usize) -> Option<HalfSite> {
        self.cm[rank]
    }

    /// Weight on bound configurations.
    pub fn bound_weight<T: Real>(&self, s: &SectorAmplitudes<T>) -> T {
        s.amps()
            .iter()
            .zip(&self.bound)
            .filter(|(_, b)| **b)
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }
}

/// `n[j][t] = (1 − ⟨Z_j⟩)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMap<T> {
    /// Indexed `[site][t]`.
    pub values: Vec<Vec<T>>,
}

fn site_occupancy<T: Real>(s: &SectorAmplitudes<T>, sites: usize) -> Vec<T> {
    let mut occ = vec![T::zero(); sites];
    for (b, a) in s.basis().states().iter().zip(s.amps()) {
        let p = a.norm_sqr();
        if p == T::zero() {
            continue;
        }
        for q in b.sites() {
            occ[q] += p;
        }
    }
    occ
}

fn evolve_basis_state<T: Real>(
    spec: &CircuitSpec<T>,
    initial: Bitmask,
    cycles: usize,
    mut observe: impl FnMut(usize, &SectorAmplitudes<T>),
) -> Result<()> {
    let engine = FloquetEngine::new(spec, &[initial.count()])?;
    let mut s = engine.basis_state(initial)?;
    for t in 0..=cycles {
        if t > 0 {
            engine.cycle(&mut s)?;
        }
        observe(t, &s.sectors()[0]);
    }
    Ok(())
}

pub fn occupancy_map<T: Real>(
    spec: &CircuitSpec<T>,
    initial: Bitmask,
    cycles: usize,
) -> Result<OccupancyMap<T>> {
    let n = spec.total_sites();
    if initial.0 >> n != 0 {
        return domain(format!("initial bitmask exceeds {n} sites"));
    }
    let mut values = vec![Vec::with_capacity(cycles + 1); n];
    evolve_basis_state(spec, initial, cycles, |_, s| {
        for (row, v) in values.iter_mut().zip(site_occupancy(s, n)) {
            row.push(v);
        }
    })?;
    Ok(OccupancyMap { values })
}

/// Distribution of the bound-state center of mass over half-site positions.
#[derive(Clone, Debug, PartialEq)]
pub struct CmDistribution<T> {
    pub ring: usize,
    /// Center of mass of the initial block.
    pub origin: HalfSite,
    /// Indexed `[x][t]` with `x` in half sites, `0..2·ring`; renormalized over bound states.
    pub values: Vec<Vec<T>>,
    /// Total weight on bound configurations at each `t`.
    pub retained: Vec<T>,
}

impl<T: Real> CmDistribution<T> {
    pub fn cycles(&self) -> usize {
        self.retained.len()
    }

    /// False where no bound weight remains and the distribution is undefined.
    pub fn is_defined(&self, t: usize) -> bool {
        self.retained[t] > T::zero()
    }

    /// Position labels in sites: `0, 0.5, …, ring − 0.5`.
    pub fn positions(&self) -> Vec<T> {
        (0..2 * self.ring).map(|x| HalfSite(x).value()).collect()
    }

    /// Signed displacement of bin `x` from the origin, unwrapped into (−ring/2, ring/2].
    pub fn displacement(&self, x: usize) -> T {
        HalfSite(x).displacement_from(self.origin, self.ring)
    }
}

pub fn cm_distribution<T: Real>(
    spec: &CircuitSpec<T>,
    initial: Bitmask,
    cycles: usize,
) -> Result<CmDistribution<T>> {
    let ring = spec.ring_sites();
    let class = classify_on_ring(initial, ring, spec.total_sites())?;
    let origin = match class {
        BitstringClass::Bound { .. } => center_of_mass(class, ring)?,
        BitstringClass::Scattered => {
            return domain("center-of-mass tracking needs a bound initial state")
        }
    };
    let basis = SectorBasis::enumerate(spec.total_sites(), initial.count())?;
    let cls = RingClassifier::new(&basis, ring)?;
    let bins = 2 * ring;
    let mut values = vec![vec![T::zero(); cycles + 1]; bins];
    let mut retained = Vec::with_capacity(cycles + 1);
    evolve_basis_state(spec, initial, cycles, |t, s| {
        let mut w = T::zero();
        for (r, a) in s.amps().iter().enumerate() {
            if let Some(x) = cls.cm[r] {
                let p = a.norm_sqr();
                values[x.0][t] += p;
                w += p;
            }
        }
        if w > T::zero() {
            for row in values.iter_mut() {
                row[t] /= w;
            }
        }
        retained.push(w);
    })?;
    Ok(CmDistribution {
        ring,
        origin,
        values,
        retained,
    })
}

/// Bound weight over total sector weight.
pub fn bound_fraction<T: Real>(s: &SectorAmplitudes<T>, ring: usize) -> Result<T> {
    let cls = RingClassifier::new(s.basis(), ring)?;
    let total = s.norm_sqr();
    if !(total > T::zero()) {
        return domain("bound fraction of an empty state");
    }
    Ok(cls.bound_weight(s) / total)
}

/// Fraction of sampled bitstrings that are bound on the ring.
pub fn bound_fraction_sampled(samples: &[Bitmask], ring: usize, sites: usize) -> Result<f64> {
    if samples.is_empty() {
        return domain("bound fraction of an empty sample");
    }
    let photons = samples[0].count();
    if samples.iter().any(|b| b.count() != photons) {
        return domain("samples span several photon-number sectors");
    }
    let mut bound = 0usize;
    for &b in samples {
        if classify_on_ring(b, ring, sites)?.is_bound() {
            bound += 1;
        }
    }
    Ok(bound as f64 / samples.len() as f64)
}

/// Exact bound fraction at each `t = 0..=cycles`.
///
/// Noisy models are averaged over `trajectories`; trajectories that lose a
/// photon are dropped from the average from that cycle on, as photon-number
/// post-selection would. The returned retained fraction tracks that loss.
pub fn bound_fraction_trace<T: Real>(
    spec: &CircuitSpec<T>,
    initial: Bitmask,
    cycles: usize,
    noise: &NoiseModel,
    trajectories: usize,
) -> Result<BoundFractionTrace<T>> {
    let photons = initial.count();
    let engine = FloquetEngine::new(spec, &[photons])?;
    let basis = engine
        .basis(photons)
        .expect("engine covers requested sector");
    let cls = RingClassifier::new(&basis, spec.ring_sites())?;
    let runs = if noise.is_noiseless() {
        1
    } else {
        trajectories
    };
    if runs == 0 {
        return domain("at least one trajectory is required");
    }
    let mut sum = vec![T::zero(); cycles + 1];
    let mut kept = vec![0usize; cycles + 1];
    for traj in 0..runs {
        let mut rng = noise.trajectory_rng(traj as u64);
        let mut s = engine.basis_state(initial)?;
        for t in 0..=cycles {
            if t > 0 {
                engine.cycle(&mut s)?;
                if apply_noise(&mut s, &noise.kind, &mut rng)? == NoiseOutcome::Lost {
                    break;
                }
            }
            let sec = &s.sectors()[0];
            sum[t] += cls.bound_weight(sec) / sec.norm_sqr();
            kept[t] += 1;
        }
    }
    let fraction = sum
        .iter()
        .zip(&kept)
        .map(|(s, &k)| {
            if k > 0 {
                *s / T::from_count(k)
            } else {
                T::nan()
            }
        })
        .collect();
    let retained = kept.iter().map(|&k| k as f64 / runs as f64).collect();
    Ok(BoundFractionTrace { fraction, retained })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundFractionTrace<T> {
    /// Mean bound fraction over surviving trajectories; NaN once none survive.
    pub fraction: Vec<T>,
    /// Fraction of trajectories still holding every photon.
    pub retained: Vec<f64>,
}

/// Options for [`wavefront_velocity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavefrontOptions {
    /// Two-sided tail probability that defines the front.
    pub threshold: f64,
    /// Leading fraction of the time axis excluded from the fit.
    pub skip_fraction: f64,
}

impl Default for WavefrontOptions {
    fn default() -> Self {
        WavefrontOptions {
            threshold: 0.05,
            skip_fraction: 0.25,
        }
    }
}

/// Front position at each `t`: the outermost `|displacement|` whose
/// two-sided tail probability is at least the threshold.
pub fn wavefront<T: Real>(cm: &CmDistribution<T>, threshold: f64) -> Result<Vec<Option<T>>> {
    let bins = cm.values.len();
    let disp: Vec<T> = (0..bins).map(|x| cm.displacement(x).abs()).collect();
    let mut order: Vec<usize> = (0..bins).collect();
    order.sort_by(|&a, &b| disp[b].partial_cmp(&disp[a]).expect("finite displacement"));
    let thr = T::lit(threshold);
    Ok((0..cm.cycles())
        .map(|t| {
            if !cm.is_defined(t) {
                return None;
            }
            let mut tail = T::zero();
            let mut i = 0;
            while i < bins {
                // Accumulate all bins at the same distance together.
                let d = disp[order[i]];
                while i < bins && disp[order[i]] == d {
                    tail += cm.values[order[i]][t];
                    i += 1;
                }
                if tail >= thr {
                    return Some(d);
                }
            }
            None
        })
        .collect())
}

/// Slope of the wavefront position in sites per cycle.
pub fn wavefront_velocity<T: Real>(cm: &CmDistribution<T>, opts: &WavefrontOptions) -> Result<T> {
    let cycles = cm.cycles();
    if cycles < 10 {
        return Err(Error::Extraction(format!(
            "{cycles} time points, need at least 10"
        )));
    }
    let front = wavefront(cm, opts.threshold)?;
    let start = (opts.skip_fraction * cycles as f64).floor() as usize;
    let (ts, xs): (Vec<T>, Vec<T>) = front
        .iter()
        .enumerate()
        .skip(start)
        .filter_map(|(t, f)| f.map(|x| (T::from_count(t), x)))
        .unzip();
    if ts.len() < 2 {
        return Err(Error::Extraction("no threshold crossing to fit".into()));
    }
    Ok(linear_fit(&ts, &xs).0)
}

/// Sorted bitstring probabilities with the uniform reference level.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryHistogram {
    /// `(bitstring, probability, bound)` in descending probability, ties by bitstring.
    pub entries: Vec<(Bitmask, f64, bool)>,
    /// `1 / C(N, n)`.
    pub baseline: f64,
}

/// Histogram of sampled bitstrings over the full sector basis.
pub fn trajectory_histogram(
    samples: &[Bitmask],
    basis: &SectorBasis,
    ring: usize,
) -> Result<TrajectoryHistogram> {
    if samples.is_empty() {
        return domain("histogram of an empty sample");
    }
    let mut counts: HashMap<Bitmask, usize> = HashMap::new();
    for &b in samples {
        if b.count() != basis.photons() {
            return domain("sample outside the histogram's sector");
        }
        *counts.entry(b).or_default() += 1;
    }
    let total = samples.len() as f64;
    let probs: Vec<f64> = basis
        .states()
        .iter()
        .map(|b| counts.get(b).copied().unwrap_or(0) as f64 / total)
        .collect();
    histogram_from_probabilities(&probs, basis, ring)
}

/// Histogram of exact probabilities given in basis order.
pub fn histogram_from_probabilities(
    probs: &[f64],
    basis: &SectorBasis,
    ring: usize,
) -> Result<TrajectoryHistogram> {
    if probs.len() != basis.len() {
        return domain("probability vector does not match the basis");
    }
    let cls = RingClassifier::new(basis, ring)?;
    let mut entries: Vec<(Bitmask, f64, bool)> = basis
        .states()
        .iter()
        .zip(probs)
        .enumerate()
        .map(|(r, (b, p))| (*b, *p, cls.is_bound(r)))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(TrajectoryHistogram {
        entries,
        baseline: 1.0 / binomial(basis.sites(), basis.photons()) as f64,
    })
}
