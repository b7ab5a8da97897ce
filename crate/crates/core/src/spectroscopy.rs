//! Many-body spectroscopy: vacuum-coupling correlators and their band structure.
//!
//! A window of `n` adjacent qubits is prepared in `|+⟩^{⊗n}`. The product
//! `⟨σ⁺_j ⋯ σ⁺_{j+n−1}⟩` couples the `n`-photon sector to the vacuum only, so
//! it reduces to `conj(ψ_window) · ψ_vacuum`. Its space-time Fourier transform
//! peaks on the `n`-photon bands.
//!
//! Transform convention: `A(k, ω) = Σ_{j,t} C[j][t]·w(t)·e^{+i(ωt + kj)}`. With
//! the eigenphase convention `U|E⟩ = e^{iE}|E⟩` this places a band at `+E`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

use crate::circuit::CircuitSpec;
use crate::engine::FloquetEngine;
use crate::error::{domain, Error, Result};
use crate::noise::{apply_noise, NoiseModel, NoiseOutcome};
use crate::scalar::{czero, phase_distance, wrap_phase, Real};
use crate::sector::{Bitmask, SectorBasis};
use crate::state::{SectorAmplitudes, SectorState};
use crate::theory::DispersionParams;

/// `|+⟩` on sites `j0 … j0+n−1` (cyclic), `|0⟩` elsewhere, over sectors `0..=n`.
pub fn prepare_plus_window<T: Real>(
    sites: usize,
    j0: usize,
    photons: usize,
) -> Result<SectorState<T>> {
    if photons > sites {
        return domain(format!("window of {photons} does not fit on {sites} sites"));
    }
    let window: Vec<usize> = (0..photons).map(|i| (j0 + i) % sites).collect();
    let amp = Complex::new(T::lit(0.5f64.powf(photons as f64 / 2.0)), T::zero());
    let mut sectors = Vec::with_capacity(photons + 1);
    for m in 0..=photons {
        let basis = Arc::new(SectorBasis::enumerate(sites, m)?);
        let mut s = SectorAmplitudes::zeros(basis.clone());
        for subset in 0u64..(1u64 << photons) {
            if subset.count_ones() as usize != m {
                continue;
            }
            let b = Bitmask::from_sites(
                window
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| subset >> i & 1 == 1)
                    .map(|(_, &q)| q),
            );
            s.amps_mut()[basis.rank_unchecked(b)] = amp;
        }
        sectors.push(s);
    }
    SectorState::new(sites, sectors)
}

/// `⟨Π_{i=j}^{j+n−1} σ⁺_i⟩` with `σ⁺ = |1⟩⟨0|`.
///
/// Requires the state to live in sectors up to `n`; higher sectors would
/// contribute further terms.
pub fn correlator<T: Real>(state: &SectorState<T>, j: usize, photons: usize) -> Result<Complex<T>> {
    if state.max_photons() > photons {
        return domain(format!(
            "state holds {} photons, above the {photons}-photon correlator",
            state.max_photons()
        ));
    }
    let n = state.sites();
    if photons == 0 || photons >= n {
        return domain(format!("window of {photons} photons on {n} sites"));
    }
    let window = Bitmask::cyclic_block(j % n, photons, n);
    Ok(state.amplitude(window)?.conj() * state.amplitude(Bitmask::EMPTY)?)
}

/// Correlator matrix `C[j][t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorSeries<T> {
    pub sites: usize,
    pub photons: usize,
    /// Indexed `[window start][cycle]`.
    pub values: Vec<Vec<Complex<T>>>,
}

impl<T: Real> CorrelatorSeries<T> {
    pub fn cycles(&self) -> usize {
        self.values.first().map_or(0, |r| r.len())
    }

    /// `Σ_j C[j][t]·e^{ikj}` for each `t`.
    pub fn momentum_series(&self, k: T) -> Vec<Complex<T>> {
        let mut out = vec![czero(); self.cycles()];
        for (j, row) in self.values.iter().enumerate() {
            let ph = Complex::new((k * T::from_count(j)).cos(), (k * T::from_count(j)).sin());
            for (o, c) in out.iter_mut().zip(row) {
                *o += *c * ph;
            }
        }
        out
    }
}

fn windows(basis: &SectorBasis, photons: usize) -> Vec<usize> {
    let n = basis.sites();
    (0..n)
        .map(|j| basis.rank_unchecked(Bitmask::cyclic_block(j, photons, n)))
        .collect()
}

/// Noiseless correlator series for `cycles` cycles starting from window `j0`.
///
/// Only the vacuum and the `n`-photon sector of the prepared state enter the
/// correlator and sectors never mix, so only those two are evolved.
pub fn time_series<T: Real>(
    spec: &CircuitSpec<T>,
    photons: usize,
    cycles: usize,
    j0: usize,
) -> Result<CorrelatorSeries<T>> {
    check_series_args(spec, photons, cycles)?;
    let n = spec.total_sites();
    let engine = FloquetEngine::new(spec, &[photons])?;
    let basis = engine
        .basis(photons)
        .expect("engine covers requested sector");
    let mut state = engine.basis_state(Bitmask::cyclic_block(j0 % n, photons, n))?;
    let scale = T::lit(0.5f64.powi(photons as i32));
    let idx = windows(&basis, photons);
    let mut values = vec![Vec::with_capacity(cycles); spec.ring_sites()];
    for t in 0..cycles {
        if t > 0 {
            engine.cycle(&mut state)?;
        }
        let amps = state.sectors()[0].amps();
        for (row, &r) in values.iter_mut().zip(&idx) {
            // Window amplitude 2^{−n/2} and vacuum amplitude 2^{−n/2}, the latter invariant.
            row.push(amps[r].conj() * scale);
        }
    }
    Ok(CorrelatorSeries {
        sites: spec.ring_sites(),
        photons,
        values,
    })
}

fn check_series_args<T: Real>(spec: &CircuitSpec<T>, photons: usize, cycles: usize) -> Result<()> {
    if cycles < 2 {
        return domain("a correlator series needs at least two cycles");
    }
    if spec.geometry().is_ladder() {
        return Err(Error::Unsupported(
            "spectroscopy is defined on the ring".into(),
        ));
    }
    if photons == 0 || photons >= spec.ring_sites() {
        return domain(format!("{photons} photons on {} sites", spec.ring_sites()));
    }
    Ok(())
}

/// Correlator series averaged over noisy trajectories.
///
/// Each trajectory evolves the full prepared state with the noise channel
/// applied after every cycle; a lost trajectory contributes zero from then on.
#[allow(clippy::needless_range_loop)]
pub fn time_series_noisy<T: Real>(
    spec: &CircuitSpec<T>,
    photons: usize,
    cycles: usize,
    j0: usize,
    noise: &NoiseModel,
    trajectories: usize,
) -> Result<CorrelatorSeries<T>> {
    check_series_args(spec, photons, cycles)?;
    if noise.is_noiseless() {
        return time_series(spec, photons, cycles, j0);
    }
    if trajectories == 0 {
        return domain("at least one trajectory is required");
    }
    let n = spec.ring_sites();
    let all: Vec<usize> = (0..=photons).collect();
    let engine = FloquetEngine::new(spec, &all)?;
    let initial = {
        let raw = prepare_plus_window::<T>(n, j0, photons)?;
        // Re-home the amplitudes onto the engine's shared bases.
        let sectors = raw
            .sectors()
            .iter()
            .map(|s| {
                SectorAmplitudes::from_vec(
                    engine.basis(s.photons()).expect("engine covers sector"),
                    s.amps().to_vec(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        SectorState::new(n, sectors)?
    };
    let basis = engine
        .basis(photons)
        .expect("engine covers requested sector");
    let idx = windows(&basis, photons);
    let mut sum = vec![vec![czero::<T>(); cycles]; n];
    for traj in 0..trajectories {
        let mut rng = noise.trajectory_rng(traj as u64);
        let mut state = initial.clone();
        for t in 0..cycles {
            if t > 0 {
                engine.cycle(&mut state)?;
                if apply_noise(&mut state, &noise.kind, &mut rng)? == NoiseOutcome::Lost {
                    break;
                }
            }
            let vac = state.sectors()[0].amps()[0];
            let amps = state.sector(photons).expect("sector present").amps();
            for (j, &r) in idx.iter().enumerate() {
                sum[j][t] += amps[r].conj() * vac;
            }
        }
    }
    let inv = T::one() / T::from_count(trajectories);
    let values = sum
        .into_iter()
        .map(|row| row.into_iter().map(|c| c * inv).collect())
        .collect();
    Ok(CorrelatorSeries {
        sites: n,
        photons,
        values,
    })
}

/// Taper applied along the time axis before the transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TimeWindow {
    #[default]
    Rectangular,
    Hann,
}

impl TimeWindow {
    fn weights<T: Real>(self, len: usize) -> Vec<T> {
        match self {
            TimeWindow::Rectangular => vec![T::one(); len],
            TimeWindow::Hann => (0..len)
                .map(|t| {
                    let x = T::TAU() * T::from_count(t) / T::from_count(len);
                    T::lit(0.5) * (T::one() - x.cos())
                })
                .collect(),
        }
    }
}

/// Power spectrum `|A(k, ω)|²` on grids ascending in (−π, π].
#[derive(Clone, Debug, PartialEq)]
pub struct BandStructure<T> {
    pub k_grid: Vec<T>,
    pub w_grid: Vec<T>,
    /// Indexed `[k][ω]`.
    pub power: Vec<Vec<T>>,
}

/// Frequencies `2πm/len` reduced to (−π, π], paired with `m`, in ascending order.
fn centered_grid<T: Real>(len: usize) -> Vec<(usize, T)> {
    let mut g: Vec<(usize, T)> = (0..len)
        .map(|m| {
            (
                m,
                wrap_phase(T::TAU() * T::from_count(m) / T::from_count(len)),
            )
        })
        .collect();
    g.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite grid"));
    g
}

pub fn band_structure<T: Real + FftNum>(
    cs: &CorrelatorSeries<T>,
    window: TimeWindow,
) -> BandStructure<T> {
    let nk = cs.values.len();
    let nt = cs.cycles();
    let w = window.weights::<T>(nt);
    let mut planner = FftPlanner::<T>::new();
    let fft_t = planner.plan_fft_inverse(nt);
    let fft_k = planner.plan_fft_inverse(nk);

    let mut rows: Vec<Vec<Complex<T>>> = cs
        .values
        .iter()
        .map(|r| r.iter().zip(&w).map(|(c, &x)| *c * x).collect())
        .collect();
    for r in rows.iter_mut() {
        fft_t.process(r);
    }
    let mut col = vec![czero::<T>(); nk];
    let mut spec = vec![vec![T::zero(); nt]; nk];
    for f in 0..nt {
        for (j, r) in rows.iter().enumerate() {
            col[j] = r[f];
        }
        fft_k.process(&mut col);
        for (m, c) in col.iter().enumerate() {
            spec[m][f] = c.norm_sqr();
        }
    }
    let kg = centered_grid::<T>(nk);
    let wg = centered_grid::<T>(nt);
    let power = kg
        .iter()
        .map(|&(mk, _)| wg.iter().map(|&(mw, _)| spec[mk][mw]).collect())
        .collect();
    BandStructure {
        k_grid: kg.into_iter().map(|(_, k)| k).collect(),
        w_grid: wg.into_iter().map(|(_, w)| w).collect(),
        power,
    }
}

impl<T: Real> BandStructure<T> {
    pub fn omega_bin(&self) -> T {
        T::TAU() / T::from_count(self.w_grid.len())
    }

    pub fn k_bin(&self) -> T {
        T::TAU() / T::from_count(self.k_grid.len())
    }

    pub fn total_power(&self) -> T {
        self.power.iter().flatten().copied().sum()
    }

    /// Frequency of the largest power at each momentum.
    pub fn peak_frequencies(&self) -> Vec<T> {
        self.power
            .iter()
            .map(|row| self.w_grid[argmax(row)])
            .collect()
    }

    /// Largest power at each momentum.
    pub fn peak_powers(&self) -> Vec<T> {
        self.power
            .iter()
            .map(|row| row.iter().copied().fold(T::zero(), T::max))
            .collect()
    }

    pub fn same_grids(&self, other: &BandStructure<T>) -> bool {
        let close = |a: &[T], b: &[T]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (*x - *y).abs() < T::lit(1e-9))
        };
        close(&self.k_grid, &other.k_grid) && close(&self.w_grid, &other.w_grid)
    }
}

fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Per-momentum comparison of the spectral peak with the closed-form bands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakCheck<T> {
    pub k: T,
    pub peak: T,
    pub upper: T,
    pub lower: T,
    /// Distance from the peak to the nearer branch.
    pub deviation: T,
}

/// Compares per-site peaks with both branches at cell momentum `2k`.
pub fn compare_peaks<T: Real>(
    bs: &BandStructure<T>,
    dp: &DispersionParams<T>,
) -> Result<Vec<PeakCheck<T>>> {
    bs.k_grid
        .iter()
        .zip(bs.peak_frequencies())
        .map(|(&k, peak)| {
            let (upper, lower) = dp.quasi_energy_site(k)?;
            let deviation = phase_distance(peak, upper)
                .abs()
                .min(phase_distance(peak, lower).abs());
            Ok(PeakCheck {
                k,
                peak,
                upper,
                lower,
                deviation,
            })
        })
        .collect()
}

/// Band of frequencies kept when comparing power maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyWindow<T> {
    pub center: T,
    pub half_width: T,
}

impl<T: Real> EnergyWindow<T> {
    /// The closed-form band range `χ ± 2α` widened by `margin` on each side.
    pub fn around_band(dp: &DispersionParams<T>, margin: T) -> Self {
        let two_alpha = (T::lit(2.0) * dp.cos2_alpha - T::one())
            .max(-T::one())
            .min(T::one())
            .acos();
        EnergyWindow {
            center: dp.chi,
            half_width: two_alpha + margin,
        }
    }

    pub fn contains(&self, w: T) -> bool {
        phase_distance(w, self.center).abs() <= self.half_width
    }
}

/// Options for [`extract_momentum_shift`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftOptions<T> {
    pub interp_points: usize,
    pub window: Option<EnergyWindow<T>>,
}

impl<T> Default for ShiftOptions<T> {
    fn default() -> Self {
        ShiftOptions {
            interp_points: 100,
            window: None,
        }
    }
}

/// Momentum offset of `b` relative to `reference` from the peak of their
/// cyclic cross-correlation along `k`, summed over the kept frequencies.
pub fn extract_momentum_shift<T: Real>(
    b: &BandStructure<T>,
    reference: &BandStructure<T>,
    opts: &ShiftOptions<T>,
) -> Result<T> {
    if !b.same_grids(reference) {
        return domain("band structures are on different grids");
    }
    let m = opts.interp_points;
    if m < 2 {
        return domain("at least two interpolation points are needed");
    }
    let keep: Vec<usize> = (0..b.w_grid.len())
        .filter(|&f| opts.window.is_none_or(|w| w.contains(b.w_grid[f])))
        .collect();
    if keep.is_empty() {
        return Err(Error::NoPeak(
            "energy window excludes every frequency".into(),
        ));
    }
    let pb = resample_k(b, &keep, m);
    let pr = resample_k(reference, &keep, m);
    let mut corr = vec![T::zero(); m];
    for (s, c) in corr.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (rb, rr) in pb.iter().zip(&pr) {
            for x in 0..m {
                acc += rb[(x + s) % m] * rr[x];
            }
        }
        *c = acc;
    }
    let hi = corr.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = corr.iter().copied().fold(T::infinity(), T::min);
    if !(hi > T::zero()) || hi - lo <= hi * T::lit(1e-12) {
        return Err(Error::NoPeak("cross-correlation has no contrast".into()));
    }
    let s = argmax(&corr);
    Ok(wrap_phase(T::TAU() * T::from_count(s) / T::from_count(m)))
}

/// Periodic linear interpolation of the kept frequency rows onto `m` uniform momenta `2πs/m`.
fn resample_k<T: Real>(bs: &BandStructure<T>, keep: &[usize], m: usize) -> Vec<Vec<T>> {
    let nk = bs.k_grid.len();
    // Grid position of the native index 0 (k = 0).
    let dk = bs.k_bin();
    let first = (bs.k_grid[0] / dk).round().to_i64().expect("finite grid");
    let slot = |native: usize| -> usize { (native as i64 - first).rem_euclid(nk as i64) as usize };
    keep.iter()
        .map(|&f| {
            (0..m)
                .map(|s| {
                    let u = T::from_count(s * nk) / T::from_count(m);
                    let m0 = u.floor();
                    let frac = u - m0;
                    let i0 = m0.to_usize().expect("non-negative") % nk;
                    let i1 = (i0 + 1) % nk;
                    bs.power[slot(i0)][f] * (T::one() - frac) + bs.power[slot(i1)][f] * frac
                })
                .collect()
        })
        .collect()
}

/// Parameters of `A·e^{(iω − 1/τ)t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit<T> {
    pub omega: T,
    /// `1/τ`; zero for an undamped series.
    pub decay_rate: T,
    pub amplitude: Complex<T>,
}

impl<T: Real> DecayFit<T> {
    /// `τ`, infinite when the fitted rate is not positive.
    pub fn tau(&self) -> T {
        if self.decay_rate > T::zero() {
            T::one() / self.decay_rate
        } else {
            T::infinity()
        }
    }
}

/// Least-squares fit of a damped complex exponential sampled at `t = 0, 1, …`.
///
/// `ln|y|` and the unwrapped phase are each fitted linearly. A series that
/// grows faster than `1e-3` per cycle is rejected.
pub fn fit_decay<T: Real>(series: &[Complex<T>]) -> Result<DecayFit<T>> {
    if series.len() < 8 {
        return Err(Error::Fit(format!(
            "{} samples, need at least 8",
            series.len()
        )));
    }
    if series
        .iter()
        .any(|c| !(c.norm() > T::zero()) || !c.norm().is_finite())
    {
        return Err(Error::Fit(
            "series contains zero or non-finite samples".into(),
        ));
    }
    let ts: Vec<T> = (0..series.len()).map(T::from_count).collect();
    let logs: Vec<T> = series.iter().map(|c| c.norm().ln()).collect();
    let mut phases = Vec::with_capacity(series.len());
    let mut prev = series[0].arg();
    phases.push(prev);
    for c in &series[1..] {
        let next = prev + phase_distance(c.arg(), prev);
        phases.push(next);
        prev = next;
    }
    let (ls, li) = linear_fit(&ts, &logs);
    let (ps, pi) = linear_fit(&ts, &phases);
    let rate = -ls;
    if rate < T::lit(-1e-3) {
        return Err(Error::Fit(format!("series grows at rate {}", -rate)));
    }
    Ok(DecayFit {
        omega: ps,
        decay_rate: rate,
        amplitude: Complex::from_polar(li.exp(), pi),
    })
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub(crate) fn linear_fit<T: Real>(x: &[T], y: &[T]) -> (T, T) {
    let n = T::from_count(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (a, b) in x.iter().zip(y) {
        sxy += (*a - mx) * (*b - my);
        sxx += (*a - mx) * (*a - mx);
    }
    let slope = if sxx > T::zero() {
        sxy / sxx
    } else {
        T::zero()
    };
    (slope, my - slope * mx)
}
