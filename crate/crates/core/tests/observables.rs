use std::f64::consts::PI;

use floquet_xxz::circuit::CircuitSpec;
use floquet_xxz::engine::FloquetEngine;
use floquet_xxz::gate::FsimParams;
use floquet_xxz::noise::{trajectory_rng, NoiseKind, NoiseModel};
use floquet_xxz::observables::*;
use floquet_xxz::sampling::sample_bitstrings;
use floquet_xxz::sector::{equiprobable_bound_fraction, Bitmask};
use floquet_xxz::theory::DispersionParams;

fn ring(n: usize) -> CircuitSpec<f64> {
    CircuitSpec::ring(n, FsimParams::new(PI / 6.0, 2.0 * PI / 3.0)).unwrap()
}

#[test]
fn occupancy_conserves_photons() {
    let m = occupancy_map(&ring(24), Bitmask::from_sites([11, 12, 13]), 30).unwrap();
    for t in 0..=30 {
        let total: f64 = m.values.iter().map(|row| row[t]).sum();
        assert!((total - 3.0).abs() < 1e-10);
        assert!(m
            .values
            .iter()
            .all(|row| (-1e-12..=1.0 + 1e-12).contains(&row[t])));
    }
}

/// Two gate layers per cycle move a photon at most two sites.
#[test]
fn strict_light_cone() {
    let n = 40;
    let m = occupancy_map(&ring(n), Bitmask::from_sites([20]), 9).unwrap();
    for t in 0..=9 {
        for (j, row) in m.values.iter().enumerate() {
            let d = (j as i64 - 20).unsigned_abs() as usize;
            if d > 2 * t {
                assert_eq!(row[t], 0.0, "site {j} at t = {t}");
            }
        }
    }
}

/// Reflection about an odd doubled center maps each brickwork layer onto itself.
#[test]
fn cm_distribution_is_reflection_symmetric() {
    let cm = cm_distribution(&ring(16), Bitmask::from_sites([7, 8]), 25).unwrap();
    for t in 0..=25 {
        let s: f64 = cm.values.iter().map(|r| r[t]).sum();
        assert!((s - 1.0).abs() < 1e-12);
        for x in 0..cm.values.len() {
            let d = cm.displacement(x);
            if d.abs() >= 8.0 {
                continue;
            }
            let mirror = (0..cm.values.len())
                .find(|&y| (cm.displacement(y) + d).abs() < 1e-12)
                .unwrap();
            assert!((cm.values[x][t] - cm.values[mirror][t]).abs() < 1e-12);
        }
    }
}

#[test]
fn scattered_initial_state_has_no_cm() {
    assert!(cm_distribution(&ring(12), Bitmask::from_sites([0, 3]), 5).is_err());
}

#[test]
fn bound_fraction_plateau() {
    let tr = bound_fraction_trace(
        &ring(24),
        Bitmask::from_sites([11, 12, 13]),
        60,
        &NoiseModel::noiseless(),
        1,
    )
    .unwrap();
    assert_eq!(tr.fraction[0], 1.0);
    assert!(tr.fraction.iter().all(|f| *f <= 1.0 + 1e-12));
    let w = &tr.fraction[30..=60];
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let std = (w.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
    assert!(std < 0.02, "std {std}");
    assert!(mean > 10.0 * equiprobable_bound_fraction(24, 24, 3));
}

#[test]
fn single_photon_front_follows_band_center_velocity() {
    let n = 40;
    let dp = DispersionParams::new(1, PI / 6.0, 2.0 * PI / 3.0).unwrap();
    let cycles = (n as f64 / 2.0 / dp.max_front_speed()) as usize;
    let cm = cm_distribution(&ring(n), Bitmask::from_sites([20]), cycles).unwrap();
    let v = wavefront_velocity(&cm, &WavefrontOptions::default()).unwrap();
    assert!((v / dp.max_front_speed() - 1.0).abs() < 0.15, "{v}");
    assert!(v <= 2.0);
}

#[test]
fn sampled_fraction_agrees_with_exact() {
    let spec = ring(16);
    let engine = FloquetEngine::new(&spec, &[2]).unwrap();
    let mut s = engine.basis_state(Bitmask::from_sites([7, 8])).unwrap();
    engine.evolve(&mut s, 20).unwrap();
    let exact = bound_fraction(&s.sectors()[0], 16).unwrap();
    let shots = 20_000;
    let set = sample_bitstrings(&s, shots, Some(2), &mut trajectory_rng(7, 0)).unwrap();
    let est = bound_fraction_sampled(&set.bitstrings, 16, 16).unwrap();
    let sigma = (exact * (1.0 - exact) / shots as f64).sqrt();
    assert!((est - exact).abs() < 5.0 * sigma, "{est} vs {exact}");
}

#[test]
fn histograms_separate_adjacent_from_spread_initial_states() {
    let spec = ring(12);
    let engine = FloquetEngine::new(&spec, &[3]).unwrap();
    // Late-time profile, averaged over cycles 60..=100.
    let late = |b: Bitmask| {
        let mut s = engine.basis_state(b).unwrap();
        engine.evolve(&mut s, 59).unwrap();
        let mut avg = vec![0.0; s.sectors()[0].basis().len()];
        for _ in 60..=100 {
            engine.cycle(&mut s).unwrap();
            for (a, p) in avg.iter_mut().zip(s.sectors()[0].probabilities()) {
                *a += p / 41.0;
            }
        }
        histogram_from_probabilities(&avg, s.sectors()[0].basis(), 12).unwrap()
    };
    let adj = late(Bitmask::from_sites([5, 6, 7]));
    let bound_mass: f64 = adj.entries.iter().filter(|e| e.2).map(|e| e.1).sum();
    assert!(bound_mass > 5.0 * 12.0 * adj.baseline, "{bound_mass}");
    assert!(adj.entries[0].2);

    let spread = late(Bitmask::from_sites([1, 5, 9]));
    let near = spread
        .entries
        .iter()
        .filter(|e| e.1 < 3.0 * spread.baseline && e.1 > spread.baseline / 3.0)
        .count();
    assert!(
        near * 2 > spread.entries.len(),
        "{near}/{}",
        spread.entries.len()
    );
}

#[test]
fn dephasing_erodes_binding_reproducibly() {
    let spec = ring(16);
    let b = Bitmask::from_sites([7, 8, 9]);
    let clean = bound_fraction_trace(&spec, b, 40, &NoiseModel::noiseless(), 1).unwrap();
    let model = NoiseModel::new(NoiseKind::Dephasing { sigma: 0.3 }, 11).unwrap();
    let noisy = bound_fraction_trace(&spec, b, 40, &model, 16).unwrap();
    let again = bound_fraction_trace(&spec, b, 40, &model, 16).unwrap();
    assert_eq!(noisy, again);
    let tail = |v: &[f64]| v[30..].iter().sum::<f64>() / 11.0;
    assert!(tail(&noisy.fraction) < tail(&clean.fraction));
    assert!(noisy.retained.iter().all(|r| *r == 1.0));
}

#[test]
fn photon_loss_lowers_retention() {
    let model = NoiseModel::new(NoiseKind::AmplitudeDamping { p: 0.01 }, 3).unwrap();
    let tr = bound_fraction_trace(&ring(12), Bitmask::from_sites([4, 5]), 30, &model, 64).unwrap();
    assert!(tr.retained.windows(2).all(|w| w[1] <= w[0]));
    assert!(*tr.retained.last().unwrap() < 1.0);
    assert_eq!(tr.retained[0], 1.0);
}
