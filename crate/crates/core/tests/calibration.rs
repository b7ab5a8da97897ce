use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use floquet_xxz::calibration::*;
use floquet_xxz::gate::FsimParams;

const PAIRS: [(f64, f64); 4] = [
    (PI / 3.0, 5.0 * PI / 6.0),
    (PI / 6.0, 2.0 * PI / 3.0),
    (PI / 6.0, PI / 2.0),
    (PI / 3.0, PI / 6.0),
];

fn model() -> PulseModel {
    PulseModel::new(0.9, 2.0).unwrap()
}

fn run<P: AngleProbe>(probe: &mut P, theta: f64, phi: f64) -> floquet_xxz::Result<Calibration> {
    let guess = coarse_scan(probe, theta, phi, (0.1, 6.0), (0.1, 2.0), 40)?;
    calibrate(probe, theta, phi, guess, &CalibrationOptions::default())
}

#[test]
fn all_pairs_converge_on_exact_model() {
    for (theta, phi) in PAIRS {
        let mut m = model();
        let c = run(&mut m, theta, phi).unwrap();
        assert!(c.iterations <= 3, "({theta}, {phi}): {:?}", c.residuals);
        assert!(
            c.residuals.windows(2).all(|w| w[1] < w[0]),
            "{:?}",
            c.residuals
        );
        let (th, ph) = model().evaluate(c.t_p, c.g_max).unwrap();
        assert!((th - theta).abs() < 0.02 && (ph - phi).abs() < 0.02);
    }
}

#[test]
fn offsets_are_absorbed() {
    let mut m = model().with_offsets(0.03, -0.05);
    let c = run(&mut m, PI / 6.0, 2.0 * PI / 3.0).unwrap();
    assert!(*c.residuals.last().unwrap() < 0.02);
}

#[test]
fn noisy_readout_converges_for_most_seeds() {
    let mut ok = 0;
    for (theta, phi) in PAIRS {
        for seed in 0..20 {
            let mut dev = NoisyDevice {
                model: model(),
                sigma: 0.005,
                rng: ChaCha8Rng::seed_from_u64(seed),
            };
            if run(&mut dev, theta, phi).is_ok() {
                ok += 1;
            }
        }
    }
    assert!(ok >= 76, "{ok}/80");
}

#[test]
fn exhausted_budget_reports_trace() {
    let mut m = model();
    let opts = CalibrationOptions {
        max_iter: 0,
        ..Default::default()
    };
    match calibrate(&mut m, PI / 6.0, 2.0 * PI / 3.0, (0.25, 1.5), &opts) {
        Err(floquet_xxz::Error::Convergence { residuals, .. }) => assert_eq!(residuals.len(), 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn combined_errors_follow_quadratic_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (theta, phi) = PAIRS[rng.random_range(0..4)];
        let mut e = || rng.random_range(-0.03..0.03);
        let errors = AngleErrors {
            d_theta: e(),
            d_phi: e(),
            d_gamma: e(),
            d_alpha: e(),
            d_beta: e(),
            theta,
        };
        let direct = direct_control_error(&FsimParams::new(theta, phi), &errors);
        let quad = control_error(&errors);
        assert!(
            (quad - direct).abs() <= 0.15 * direct,
            "{errors:?}: {quad} vs {direct}"
        );
    }
}
