use std::f64::consts::PI;

use floquet_xxz::circuit::CircuitSpec;
use floquet_xxz::gate::FsimParams;
use floquet_xxz::scalar::wrap_phase;
use floquet_xxz::spectrum::floquet_spectrum;
use floquet_xxz::theory::DispersionParams;

fn worst_bound_deviation(n_sites: usize, photons: usize, theta: f64, phi: f64) -> (usize, f64) {
    let spec = CircuitSpec::ring(n_sites, FsimParams::new(theta, phi)).unwrap();
    let sp = floquet_spectrum(&spec, photons).unwrap();
    let dp = DispersionParams::new(photons, theta, phi).unwrap();
    let mut worst = 0.0f64;
    let mut count = 0;
    for l in sp.bound_levels(0.5) {
        let (p, m) = dp.quasi_energy(l.cell_momentum).unwrap();
        let d = wrap_phase(l.quasi_energy - p)
            .abs()
            .min(wrap_phase(l.quasi_energy - m).abs());
        worst = worst.max(d);
        count += 1;
    }
    (count, worst)
}

#[test]
fn bound_levels_follow_closed_form_in_gapped_regime() {
    for (n_sites, photons, tol) in [(16, 1, 1e-12), (16, 2, 1e-3), (16, 3, 1e-3), (14, 3, 1e-3)] {
        let (count, worst) = worst_bound_deviation(n_sites, photons, PI / 6.0, 2.0 * PI / 3.0);
        assert_eq!(count, n_sites, "N={n_sites} n={photons}");
        assert!(worst < tol, "N={n_sites} n={photons}: {worst}");
    }
}

/// Weakly bound pairs spread beyond the adjacent configurations, so the
/// check uses the most bound level at each momentum instead of a fixed cut.
#[test]
fn most_bound_level_per_momentum_follows_closed_form() {
    for (theta, phi, tol) in [(PI / 3.0, 5.0 * PI / 6.0, 1e-2), (PI / 6.0, PI / 2.0, 1e-3)] {
        let spec = CircuitSpec::ring(16, FsimParams::new(theta, phi)).unwrap();
        let sp = floquet_spectrum(&spec, 2).unwrap();
        let dp = DispersionParams::new(2, theta, phi).unwrap();
        for q in sp.momenta() {
            let best = sp
                .at_momentum(q)
                .max_by(|a, b| a.bound_weight.total_cmp(&b.bound_weight))
                .unwrap();
            let (p, m) = dp.quasi_energy(q).unwrap();
            let d = wrap_phase(best.quasi_energy - p)
                .abs()
                .min(wrap_phase(best.quasi_energy - m).abs());
            assert!(best.bound_weight > 0.3);
            assert!(d < tol, "({theta}, {phi}) q={q}: {d}");
        }
    }
}
