//! One runner per experiment; each returns its tables in a fixed order.

use std::f64::consts::PI;

use rayon::prelude::*;

use floquet_xxz::calibration::{
    calibrate, coarse_scan, AngleProbe, CalibrationOptions, NoisyDevice, PulseModel,
};
use floquet_xxz::circuit::{flux_quantum, CircuitSpec};
use floquet_xxz::engine::FloquetEngine;
use floquet_xxz::gate::FsimParams;
use floquet_xxz::noise::{trajectory_rng, NoiseKind, NoiseModel};
use floquet_xxz::observables::{
    bound_fraction, bound_fraction_sampled, bound_fraction_trace, cm_distribution, occupancy_map,
    wavefront_velocity, WavefrontOptions,
};
use floquet_xxz::sampling::sample_bitstrings;
use floquet_xxz::scalar::wrap_phase;
use floquet_xxz::sector::{binomial, classify_on_ring, equiprobable_bound_fraction, Bitmask};
use floquet_xxz::spectroscopy::{
    band_structure, compare_peaks, extract_momentum_shift, time_series, time_series_noisy,
    BandStructure, EnergyWindow, ShiftOptions, TimeWindow,
};
use floquet_xxz::spectrum::{floquet_spectrum, MAX_ED_DIMENSION};
use floquet_xxz::theory::{DispersionParams, Regime};
use floquet_xxz::Error;

use crate::config::{Config, Experiment, NoiseConfig};
use crate::error::CliError;
use crate::output::Table;

#[derive(Debug, Default)]
pub struct RunResult {
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl RunResult {
    fn absorb(&mut self, (tables, notes): (Vec<Table>, Vec<String>)) {
        self.tables.extend(tables);
        self.notes.extend(notes);
    }
}

type Piece = Result<(Vec<Table>, Vec<String>), CliError>;
type SummaryPiece = Result<(Vec<Table>, Vec<String>, [f64; 4]), CliError>;

pub fn run(cfg: &Config) -> Result<RunResult, CliError> {
    match cfg.experiment {
        Experiment::Trajectory => trajectory(cfg),
        Experiment::Spectroscopy => spectroscopy(cfg),
        Experiment::FluxSweep => flux_sweep(cfg),
        Experiment::Gapless => gapless(cfg),
        Experiment::Ladder => ladder(cfg),
        Experiment::Theory => theory(cfg),
        Experiment::Calibrate => calibration(cfg),
    }
}

fn ring_spec(cfg: &Config) -> Result<CircuitSpec<f64>, CliError> {
    Ok(CircuitSpec::ring(
        cfg.sites,
        FsimParams::new(cfg.theta, cfg.phi).with_beta(cfg.beta),
    )?)
}

fn noise_model(cfg: &Config) -> Result<NoiseModel, CliError> {
    let kind = match cfg.noise {
        NoiseConfig::None => NoiseKind::None,
        NoiseConfig::Dephasing { sigma } => NoiseKind::Dephasing { sigma },
        NoiseConfig::AmplitudeDamping { p } => NoiseKind::AmplitudeDamping { p },
    };
    Ok(NoiseModel::new(kind, cfg.seed.unwrap_or(0))?)
}

fn guard(cfg: &Config, amplitudes: u64) -> Result<(), CliError> {
    if amplitudes > cfg.max_dimension {
        return Err(CliError::Runtime(
            Error::Resource(format!(
                "{amplitudes} amplitudes exceed the limit of {} (raise `max_dimension` to allow it)",
                cfg.max_dimension
            ))
            .to_string(),
        ));
    }
    Ok(())
}

fn window(cfg: &Config) -> TimeWindow {
    if cfg.window == "hann" {
        TimeWindow::Hann
    } else {
        TimeWindow::Rectangular
    }
}

fn default_block(photons: usize, ring: usize) -> Bitmask {
    Bitmask::cyclic_block(ring / 2 - photons / 2, photons, ring)
}

fn collect(pieces: Vec<Piece>) -> Result<RunResult, CliError> {
    let mut out = RunResult::default();
    for p in pieces {
        out.absorb(p?);
    }
    Ok(out)
}

fn band_table(name: String, bs: &BandStructure<f64>) -> Table {
    let mut t = Table::new(name, "k,omega,power");
    for (k, row) in bs.k_grid.iter().zip(&bs.power) {
        for (w, p) in bs.w_grid.iter().zip(row) {
            t.row([*k, *w, *p]);
        }
    }
    t
}

fn trajectory(cfg: &Config) -> Result<RunResult, CliError> {
    let spec = ring_spec(cfg)?;
    let n_sites = cfg.sites;
    for &n in &cfg.photons {
        guard(cfg, binomial(n_sites, n))?;
    }
    let noise = noise_model(cfg)?;
    let pieces: Vec<Piece> = cfg
        .photons
        .par_iter()
        .map(|&n| {
            let initial = match &cfg.initial {
                Some(s) => Bitmask::from_sites(s.iter().copied()),
                None => default_block(n, n_sites),
            };
            let mut tables = Vec::new();
            let mut notes = Vec::new();

            let occ = occupancy_map(&spec, initial, cfg.cycles)?;
            let header: Vec<String> = std::iter::once("t".to_string())
                .chain((0..n_sites).map(|j| format!("n_{j}")))
                .collect();
            let mut t_occ = Table::new(format!("occupancy_n{n}.csv"), &header.join(","));
            for t in 0..=cfg.cycles {
                t_occ.row(std::iter::once(t as f64).chain(occ.values.iter().map(|r| r[t])));
            }
            tables.push(t_occ);

            let tr = bound_fraction_trace(&spec, initial, cfg.cycles, &noise, cfg.trajectories)?;
            let mut t_bf = Table::new(
                format!("bound_fraction_n{n}.csv"),
                "t,bound_fraction,retained",
            );
            for t in 0..=cfg.cycles {
                t_bf.row([t as f64, tr.fraction[t], tr.retained[t]]);
            }
            tables.push(t_bf);

            if cfg.shots > 0 {
                let engine = FloquetEngine::new(&spec, &[n])?;
                let mut s = engine.basis_state(initial)?;
                let mut rng = trajectory_rng(cfg.seed.unwrap_or(0), n as u64);
                let mut t_s = Table::new(
                    format!("bound_fraction_sampled_n{n}.csv"),
                    "t,kept,bound_fraction,exact",
                );
                for t in 0..=cfg.cycles {
                    if t > 0 {
                        engine.cycle(&mut s)?;
                    }
                    let set = sample_bitstrings(&s, cfg.shots, Some(n), &mut rng)?;
                    let est = if set.bitstrings.is_empty() {
                        f64::NAN
                    } else {
                        bound_fraction_sampled(&set.bitstrings, n_sites, n_sites)?
                    };
                    let exact = bound_fraction(&s.sectors()[0], n_sites)?;
                    t_s.row([t as f64, set.bitstrings.len() as f64, est, exact]);
                }
                tables.push(t_s);
                notes.push(format!(
                    "n={n}: sampled fractions are drawn from the noiseless state"
                ));
            }

            if classify_on_ring(initial, n_sites, n_sites)?.is_bound() {
                let cm = cm_distribution(&spec, initial, cfg.cycles)?;
                let mut order: Vec<usize> = (0..cm.values.len()).collect();
                order.sort_by(|&a, &b| cm.displacement(a).total_cmp(&cm.displacement(b)));
                let mut t_cm = Table::new(format!("cm_n{n}.csv"), "t,displacement,probability");
                for t in 0..=cfg.cycles {
                    for &x in &order {
                        let p = if cm.is_defined(t) {
                            cm.values[x][t]
                        } else {
                            f64::NAN
                        };
                        t_cm.row([t as f64, cm.displacement(x), p]);
                    }
                }
                tables.push(t_cm);
                let dp = DispersionParams::new(n, cfg.theta, cfg.phi).ok();
                let mut t_v = Table::new(format!("velocity_n{n}.csv"), "photons,measured,theory");
                match wavefront_velocity(&cm, &WavefrontOptions::default()) {
                    Ok(v) => t_v.row([n as f64, v, dp.map_or(f64::NAN, |d| d.max_front_speed())]),
                    Err(e) => notes.push(format!("n={n}: no wavefront velocity ({e})")),
                }
                tables.push(t_v);
            } else {
                notes.push(format!(
                    "n={n}: initial state is not bound; no center-of-mass output"
                ));
            }
            Ok((tables, notes))
        })
        .collect();
    collect(pieces)
}

fn series_band(
    cfg: &Config,
    spec: &CircuitSpec<f64>,
    n: usize,
    noise: &NoiseModel,
) -> Result<
    (
        floquet_xxz::spectroscopy::CorrelatorSeries<f64>,
        BandStructure<f64>,
    ),
    CliError,
> {
    let cs = if noise.is_noiseless() {
        time_series(spec, n, cfg.cycles, cfg.window_start)?
    } else {
        time_series_noisy(
            spec,
            n,
            cfg.cycles,
            cfg.window_start,
            noise,
            cfg.trajectories,
        )?
    };
    let bs = band_structure(&cs, window(cfg));
    Ok((cs, bs))
}

fn spectroscopy_guard(cfg: &Config, n: usize, noisy: bool) -> Result<(), CliError> {
    let amps = if noisy {
        (0..=n).map(|m| binomial(cfg.sites, m)).sum()
    } else {
        binomial(cfg.sites, n)
    };
    guard(cfg, amps)
}

fn spectroscopy(cfg: &Config) -> Result<RunResult, CliError> {
    let spec = ring_spec(cfg)?;
    let noise = noise_model(cfg)?;
    for &n in &cfg.photons {
        spectroscopy_guard(cfg, n, !noise.is_noiseless())?;
    }
    let pieces: Vec<Piece> = cfg
        .photons
        .par_iter()
        .map(|&n| {
            let (cs, bs) = series_band(cfg, &spec, n, &noise)?;
            let mut notes = Vec::new();
            let mut t_c = Table::new(format!("correlator_n{n}.csv"), "j,t,re,im");
            for (j, row) in cs.values.iter().enumerate() {
                for (t, c) in row.iter().enumerate() {
                    t_c.row([j as f64, t as f64, c.re, c.im]);
                }
            }
            let mut tables = vec![t_c, band_table(format!("band_n{n}.csv"), &bs)];
            let checks =
                DispersionParams::new(n, cfg.theta, cfg.phi).and_then(|dp| compare_peaks(&bs, &dp));
            match checks {
                Ok(checks) => {
                    let mut t_p =
                        Table::new(format!("peaks_n{n}.csv"), "k,peak,upper,lower,deviation");
                    for c in &checks {
                        t_p.row([c.k, c.peak, c.upper, c.lower, c.deviation]);
                    }
                    let hits = checks
                        .iter()
                        .filter(|c| c.deviation <= bs.omega_bin() + 1e-12)
                        .count();
                    notes.push(format!(
                        "n={n}: {hits}/{} peaks within one frequency bin of theory",
                        checks.len()
                    ));
                    tables.push(t_p);
                }
                Err(e) => notes.push(format!("n={n}: no theory comparison ({e})")),
            }
            Ok((tables, notes))
        })
        .collect();
    collect(pieces)
}

fn flux_sweep(cfg: &Config) -> Result<RunResult, CliError> {
    let spec = ring_spec(cfg)?;
    let noise = noise_model(cfg)?;
    for &n in &cfg.photons {
        spectroscopy_guard(cfg, n, !noise.is_noiseless())?;
    }
    let q0 = flux_quantum::<f64>(cfg.sites);
    // Index 0 is the reference at zero added flux.
    let fluxes: Vec<f64> = std::iter::once(0.0)
        .chain(cfg.flux.iter().copied())
        .collect();
    let tasks: Vec<(usize, usize)> = cfg
        .photons
        .iter()
        .flat_map(|&n| (0..fluxes.len()).map(move |i| (n, i)))
        .collect();
    let bands: Vec<Result<BandStructure<f64>, CliError>> = tasks
        .par_iter()
        .map(|&(n, i)| {
            let s = spec.with_flux(spec.flux() + fluxes[i] * q0)?;
            Ok(series_band(cfg, &s, n, &noise)?.1)
        })
        .collect();
    let bands: Vec<BandStructure<f64>> = bands.into_iter().collect::<Result<_, _>>()?;

    let mut out = RunResult::default();
    let mut shifts = Table::new("shifts.csv", "photons,flux_fraction,flux,delta_k,expected");
    let mut per_flux: Vec<Vec<(usize, f64)>> = vec![Vec::new(); fluxes.len()];
    for (ti, &(n, i)) in tasks.iter().enumerate() {
        if i == 0 {
            continue;
        }
        out.tables
            .push(band_table(format!("band_n{n}_flux{i}.csv"), &bands[ti]));
        let reference = &bands[tasks
            .iter()
            .position(|&t| t == (n, 0))
            .expect("reference task")];
        let window = DispersionParams::new(n, cfg.theta, cfg.phi)
            .ok()
            .map(|dp| EnergyWindow::around_band(&dp, 0.5));
        let opts = ShiftOptions {
            interp_points: 100,
            window,
        };
        let flux = fluxes[i] * q0;
        let dk = extract_momentum_shift(&bands[ti], reference, &opts)?;
        let expected = wrap_phase(n as f64 * flux / cfg.sites as f64);
        shifts.row([n as f64, fluxes[i], flux, dk, expected]);
        per_flux[i].push((n, dk));
    }
    out.tables.push(shifts);
    if cfg.photons.len() >= 2 {
        let mut slopes = Table::new("slopes.csv", "flux_fraction,slope,expected");
        for (i, pts) in per_flux.iter().enumerate().skip(1) {
            let mut pts = pts.clone();
            pts.sort_by_key(|p| p.0);
            let mut ys = vec![pts[0].1];
            for w in pts.windows(2) {
                let last = *ys.last().expect("nonempty");
                ys.push(last + wrap_phase(w[1].1 - w[0].1));
            }
            let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let slope = if sxx > 0.0 {
                xs.iter()
                    .zip(&ys)
                    .map(|(x, y)| (x - mx) * (y - my))
                    .sum::<f64>()
                    / sxx
            } else {
                f64::NAN
            };
            slopes.row([fluxes[i], slope, fluxes[i] * q0 / cfg.sites as f64]);
        }
        out.tables.push(slopes);
    }
    Ok(out)
}

fn gapless(cfg: &Config) -> Result<RunResult, CliError> {
    let spec = ring_spec(cfg)?;
    let noise = noise_model(cfg)?;
    for &n in &cfg.photons {
        spectroscopy_guard(cfg, n, !noise.is_noiseless())?;
    }
    let pieces: Vec<SummaryPiece> = cfg
        .photons
        .par_iter()
        .map(|&n| {
            let (_, bs) = series_band(cfg, &spec, n, &noise)?;
            let mut notes = Vec::new();
            let peaks = bs.peak_powers();
            let freqs = bs.peak_frequencies();
            let mut sorted = peaks.clone();
            sorted.sort_by(f64::total_cmp);
            let m = sorted.len();
            let median = if m % 2 == 0 {
                0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
            } else {
                sorted[m / 2]
            };
            let mut t_p = Table::new(
                format!("peaks_n{n}.csv"),
                "k,peak_omega,peak_power,selected",
            );
            let mut edge = f64::NAN;
            for i in 0..m {
                let sel = peaks[i] > 3.0 * median;
                if sel {
                    edge = if edge.is_nan() {
                        bs.k_grid[i].abs()
                    } else {
                        edge.min(bs.k_grid[i].abs())
                    };
                }
                t_p.row([bs.k_grid[i], freqs[i], peaks[i], f64::from(u8::from(sel))]);
            }
            let mut tables = vec![band_table(format!("band_n{n}.csv"), &bs), t_p];
            let mut ed_edge = f64::NAN;
            if binomial(cfg.sites, n) as usize <= MAX_ED_DIMENSION {
                let sp = floquet_spectrum(&spec, n)?;
                let mut t_l = Table::new(format!("levels_n{n}.csv"), "q,quasi_energy,bound_weight");
                for l in &sp.levels {
                    t_l.row([l.cell_momentum, l.quasi_energy, l.bound_weight]);
                }
                tables.push(t_l);
                let q_edge = sp
                    .momenta()
                    .into_iter()
                    .filter(|&q| sp.at_momentum(q).any(|l| l.bound_weight > 0.5))
                    .map(f64::abs)
                    .fold(f64::NAN, f64::max);
                ed_edge = PI - q_edge / 2.0;
            } else {
                notes.push(format!("n={n}: sector too large for diagonalization"));
            }
            Ok((tables, notes, [n as f64, median, edge, ed_edge]))
        })
        .collect();
    let mut out = RunResult::default();
    let mut summary = Table::new(
        "summary.csv",
        "photons,median_peak,empirical_edge,diagonalization_edge",
    );
    for p in pieces {
        let (tables, notes, row) = p?;
        out.tables.extend(tables);
        out.notes.extend(notes);
        summary.row(row);
    }
    out.tables.push(summary);
    Ok(out)
}

fn ladder(cfg: &Config) -> Result<RunResult, CliError> {
    let ring = cfg.sites;
    let total = ring + ring / 2;
    for &n in &cfg.photons {
        guard(cfg, binomial(total, n))?;
    }
    let noise = noise_model(cfg)?;
    let main = FsimParams::new(cfg.theta, cfg.phi).with_beta(cfg.beta);
    let tasks: Vec<(usize, usize)> = cfg
        .photons
        .iter()
        .flat_map(|&n| (0..cfg.theta_prime.len()).map(move |i| (n, i)))
        .collect();
    let traces: Vec<Result<Vec<(f64, f64)>, CliError>> = tasks
        .par_iter()
        .map(|&(n, i)| {
            let spec =
                CircuitSpec::ladder(ring, main, FsimParams::new(cfg.theta_prime[i], cfg.phi))?;
            let initial = match &cfg.initial {
                Some(s) => Bitmask::from_sites(s.iter().copied()),
                None => default_block(n, ring),
            };
            let tr = bound_fraction_trace(&spec, initial, cfg.cycles, &noise, cfg.trajectories)?;
            Ok(tr.fraction.into_iter().zip(tr.retained).collect())
        })
        .collect();
    let mut out = RunResult::default();
    let mut summary = Table::new(
        "summary.csv",
        "photons,theta_prime,bound_fraction_t20,bound_fraction_t40,bound_fraction_final,baseline",
    );
    for (&(n, i), tr) in tasks.iter().zip(traces) {
        let tr = tr?;
        let mut t = Table::new(
            format!("bound_fraction_n{n}_tp{i}.csv"),
            "t,bound_fraction,retained",
        );
        for (step, (f, r)) in tr.iter().enumerate() {
            t.row([step as f64, *f, *r]);
        }
        out.tables.push(t);
        let at = |c: usize| tr.get(c).map_or(f64::NAN, |x| x.0);
        summary.row([
            n as f64,
            cfg.theta_prime[i],
            at(20),
            at(40),
            tr.last().map_or(f64::NAN, |x| x.0),
            equiprobable_bound_fraction(ring, total, n),
        ]);
    }
    out.tables.push(summary);
    Ok(out)
}

/// Site momenta of an `n`-site ring in (−π, π], ascending.
pub fn ring_momenta(n: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..n)
        .map(|m| wrap_phase(2.0 * PI * m as f64 / n as f64))
        .collect();
    k.sort_by(f64::total_cmp);
    k
}

fn theory(cfg: &Config) -> Result<RunResult, CliError> {
    let grid = match cfg.points {
        Some(p) => (0..p)
            .map(|i| -PI + 2.0 * PI * (i + 1) as f64 / p as f64)
            .collect(),
        None => ring_momenta(cfg.sites),
    };
    let mut out = RunResult::default();
    let mut summary = Table::new(
        "summary.csv",
        "photons,chi,alpha,max_group_velocity,max_front_speed,band_width,regime",
    );
    for &n in &cfg.photons {
        let dp = DispersionParams::new(n, cfg.theta, cfg.phi)?;
        let mut t = Table::new(format!("dispersion_n{n}.csv"), "k,E_plus,E_minus");
        for &k in &grid {
            let (p, m) = dp.quasi_energy_site(k).unwrap_or((f64::NAN, f64::NAN));
            t.row([k, p, m]);
        }
        out.tables.push(t);
        let regime = match dp.regime() {
            Some(Regime::Gapped) => "gapped",
            Some(Regime::Gapless) => "gapless",
            None => "free",
        };
        summary.row([
            n.to_string(),
            dp.chi.to_string(),
            dp.alpha.to_string(),
            dp.max_group_velocity().to_string(),
            dp.max_front_speed().to_string(),
            dp.band_width().to_string(),
            regime.to_string(),
        ]);
    }
    out.tables.push(summary);
    Ok(out)
}

struct CalOutcome {
    t_p: f64,
    g_max: f64,
    iterations: usize,
    converged: bool,
    residuals: Vec<f64>,
    true_residual: f64,
    note: Option<String>,
}

fn calibrate_one<P: AngleProbe>(
    probe: &mut P,
    model: &PulseModel,
    target: [f64; 2],
    opts: &CalibrationOptions,
) -> CalOutcome {
    let result = coarse_scan(probe, target[0], target[1], (0.1, 6.0), (0.1, 2.0), 40)
        .and_then(|guess| calibrate(probe, target[0], target[1], guess, opts));
    match result {
        Ok(c) => {
            let true_residual = model
                .evaluate(c.t_p, c.g_max)
                .map(|(th, ph)| (th - target[0]).abs().max((ph - target[1]).abs()))
                .unwrap_or(f64::NAN);
            CalOutcome {
                t_p: c.t_p,
                g_max: c.g_max,
                iterations: c.iterations,
                converged: true,
                residuals: c.residuals,
                true_residual,
                note: None,
            }
        }
        Err(e) => {
            let (iterations, residuals) = match &e {
                Error::Convergence {
                    iterations,
                    residuals,
                } => (*iterations, residuals.clone()),
                _ => (0, Vec::new()),
            };
            CalOutcome {
                t_p: f64::NAN,
                g_max: f64::NAN,
                iterations,
                converged: false,
                residuals,
                true_residual: f64::NAN,
                note: Some(e.to_string()),
            }
        }
    }
}

fn calibration(cfg: &Config) -> Result<RunResult, CliError> {
    let c = cfg.calibration.as_ref().expect("calibrate config resolved");
    let model =
        PulseModel::new(c.coeff_theta, c.coeff_phi)?.with_offsets(c.offset_theta, c.offset_phi);
    let opts = CalibrationOptions {
        max_iter: c.max_iter,
        ..Default::default()
    };
    let tasks: Vec<(usize, usize)> = (0..c.targets.len())
        .flat_map(|p| (0..c.repeats).map(move |r| (p, r)))
        .collect();
    let outcomes: Vec<CalOutcome> = tasks
        .par_iter()
        .map(|&(p, r)| {
            let target = c.targets[p];
            if c.noise_std > 0.0 {
                let mut dev = NoisyDevice {
                    model,
                    sigma: c.noise_std,
                    rng: trajectory_rng(cfg.seed.unwrap_or(0), (p * c.repeats + r) as u64),
                };
                calibrate_one(&mut dev, &model, target, &opts)
            } else {
                let mut m = model;
                calibrate_one(&mut m, &model, target, &opts)
            }
        })
        .collect();
    let mut out = RunResult::default();
    let mut results = Table::new(
        "results.csv",
        "target_theta,target_phi,repeat,t_p,g_max,iterations,converged,final_residual,true_residual",
    );
    let mut trace = Table::new(
        "convergence.csv",
        "target_theta,target_phi,repeat,step,residual",
    );
    for (&(p, r), o) in tasks.iter().zip(&outcomes) {
        let [th, ph] = c.targets[p];
        results.row([
            th,
            ph,
            r as f64,
            o.t_p,
            o.g_max,
            o.iterations as f64,
            f64::from(u8::from(o.converged)),
            o.residuals.last().copied().unwrap_or(f64::NAN),
            o.true_residual,
        ]);
        for (step, res) in o.residuals.iter().enumerate() {
            trace.row([th, ph, r as f64, step as f64, *res]);
        }
        if let Some(n) = &o.note {
            out.notes
                .push(format!("target ({th}, {ph}) repeat {r}: {n}"));
        }
    }
    let ok = outcomes.iter().filter(|o| o.converged).count();
    out.notes
        .push(format!("{ok}/{} calibrations converged", outcomes.len()));
    out.tables.push(results);
    out.tables.push(trace);
    Ok(out)
}
