//! Gate calibration against a synthetic pulse-response model, the coherent
//! control-error budget, and the closed form of repeated fSim gates.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Error, Result};
use crate::gate::{adjoint4, fsim_matrix, matmul4, trace4, FsimParams, Gate4};
use crate::scalar::{cis, czero, Real};

/// Algebraic stand-in for a two-qubit DC pulse.
///
/// `θ = c_θ·g·t + o_θ` and `φ = c_φ·g²·t + o_φ` for pulse length `t` and
/// peak coupling `g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseModel {
    pub coeff_theta: f64,
    pub coeff_phi: f64,
    pub offset_theta: f64,
    pub offset_phi: f64,
}

impl PulseModel {
    pub fn new(coeff_theta: f64, coeff_phi: f64) -> Result<Self> {
        if !(coeff_theta > 0.0 && coeff_phi > 0.0) {
            return domain("response coefficients must be positive");
        }
        Ok(PulseModel {
            coeff_theta,
            coeff_phi,
            offset_theta: 0.0,
            offset_phi: 0.0,
        })
    }

    pub fn with_offsets(mut self, theta: f64, phi: f64) -> Self {
        self.offset_theta = theta;
        self.offset_phi = phi;
        self
    }

    /// Noiseless `(θ, φ)` at pulse parameters `(t, g)`.
    pub fn evaluate(&self, t: f64, g: f64) -> Result<(f64, f64)> {
        if !(t > 0.0 && g > 0.0) {
            return domain(format!(
                "pulse parameters must be positive, got t = {t}, g = {g}"
            ));
        }
        Ok((
            self.coeff_theta * g * t + self.offset_theta,
            self.coeff_phi * g * g * t + self.offset_phi,
        ))
    }
}

/// Anything that reports `(θ, φ)` for given pulse parameters.
pub trait AngleProbe {
    fn measure(&mut self, t: f64, g: f64) -> Result<(f64, f64)>;
}

impl AngleProbe for PulseModel {
    fn measure(&mut self, t: f64, g: f64) -> Result<(f64, f64)> {
        self.evaluate(t, g)
    }
}

/// A pulse model read out with additive Gaussian error on each angle.
#[derive(Clone, Debug)]
pub struct NoisyDevice<R> {
    pub model: PulseModel,
    pub sigma: f64,
    pub rng: R,
}

impl<R: Rng> AngleProbe for NoisyDevice<R> {
    fn measure(&mut self, t: f64, g: f64) -> Result<(f64, f64)> {
        let (th, ph) = self.model.evaluate(t, g)?;
        if self.sigma == 0.0 {
            return Ok((th, ph));
        }
        let n = Normal::new(0.0, self.sigma).map_err(|e| Error::Domain(e.to_string()))?;
        Ok((th + n.sample(&mut self.rng), ph + n.sample(&mut self.rng)))
    }
}

/// Forward-difference `[[∂φ/∂t, ∂φ/∂g], [∂θ/∂t, ∂θ/∂g]]`.
pub fn gradient_matrix<P: AngleProbe + ?Sized>(
    probe: &mut P,
    t0: f64,
    g0: f64,
    dt: f64,
    dg: f64,
) -> Result<[[f64; 2]; 2]> {
    let base = probe.measure(t0, g0)?;
    gradient_from(probe, base, t0, g0, dt, dg)
}

fn gradient_from<P: AngleProbe + ?Sized>(
    probe: &mut P,
    (th0, ph0): (f64, f64),
    t0: f64,
    g0: f64,
    dt: f64,
    dg: f64,
) -> Result<[[f64; 2]; 2]> {
    if !(dt > 0.0 && dg > 0.0) {
        return domain("finite-difference steps must be positive");
    }
    let (th_t, ph_t) = probe.measure(t0 + dt, g0)?;
    let (th_g, ph_g) = probe.measure(t0, g0 + dg)?;
    let m = [
        [(ph_t - ph0) / dt, (ph_g - ph0) / dg],
        [(th_t - th0) / dt, (th_g - th0) / dg],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::Singular(format!(
            "gradient matrix determinant {det}"
        )));
    }
    Ok(m)
}

/// Finite-difference scheme for the gradient matrix inside [`calibrate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Differencing {
    Forward,
    /// Exact for responses at most quadratic in each parameter.
    #[default]
    Central,
}

fn central_gradient<P: AngleProbe + ?Sized>(
    probe: &mut P,
    t0: f64,
    g0: f64,
    dt: f64,
    dg: f64,
) -> Result<[[f64; 2]; 2]> {
    if !(dt > 0.0 && dg > 0.0 && dt < t0 && dg < g0) {
        return domain("central steps must be positive and smaller than the parameters");
    }
    let (th_tp, ph_tp) = probe.measure(t0 + dt, g0)?;
    let (th_tm, ph_tm) = probe.measure(t0 - dt, g0)?;
    let (th_gp, ph_gp) = probe.measure(t0, g0 + dg)?;
    let (th_gm, ph_gm) = probe.measure(t0, g0 - dg)?;
    let m = [
        [(ph_tp - ph_tm) / (2.0 * dt), (ph_gp - ph_gm) / (2.0 * dg)],
        [(th_tp - th_tm) / (2.0 * dt), (th_gp - th_gm) / (2.0 * dg)],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::Singular(format!(
            "gradient matrix determinant {det}"
        )));
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationOptions {
    pub max_iter: usize,
    /// Convergence threshold on both angle residuals (rad).
    pub tolerance: f64,
    /// Finite-difference step as a fraction of the current parameter.
    pub step_fraction: f64,
    pub differencing: Differencing,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            max_iter: 3,
            tolerance: 0.02,
            step_fraction: 0.1,
            differencing: Differencing::Central,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub t_p: f64,
    pub g_max: f64,
    /// Newton updates applied.
    pub iterations: usize,
    /// Measured `max(|θ − θ_c|, |φ − φ_c|)` before each update and after the last.
    pub residuals: Vec<f64>,
}

const MAX_HALVINGS: usize = 4;

/// Damped Newton iteration on the angle residual.
///
/// Each step measures the angles and the gradient matrix at the current pulse
/// parameters and moves by `M_g⁻¹·(φ_c − φ, θ_c − θ)`, halving the step
/// while that does not lower the residual. The new parameters
/// must stay positive, otherwise the loop stops with a convergence error.
pub fn calibrate<P: AngleProbe + ?Sized>(
    probe: &mut P,
    target_theta: f64,
    target_phi: f64,
    initial: (f64, f64),
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    let (mut t, mut g) = initial;
    let mut residuals = Vec::new();
    for it in 0..=opts.max_iter {
        let (th, ph) = probe.measure(t, g)?;
        let r = (th - target_theta).abs().max((ph - target_phi).abs());
        residuals.push(r);
        if r < opts.tolerance {
            return Ok(Calibration {
                t_p: t,
                g_max: g,
                iterations: it,
                residuals,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let (dt, dg) = (opts.step_fraction * t, opts.step_fraction * g);
        let m = match opts.differencing {
            Differencing::Forward => gradient_from(probe, (th, ph), t, g, dt, dg)?,
            Differencing::Central => central_gradient(probe, t, g, dt, dg)?,
        };
        let (rp, rt) = (target_phi - ph, target_theta - th);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let step_t = (m[1][1] * rp - m[0][1] * rt) / det;
        let step_g = (-m[1][0] * rp + m[0][0] * rt) / det;
        // Halve the Newton step until the residual drops; keep the full step
        // if none of the trials does.
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let (nt, ng) = (t + lambda * step_t, g + lambda * step_g);
            if nt > 0.0 && ng > 0.0 {
                let (nth, nph) = probe.measure(nt, ng)?;
                if (nth - target_theta).abs().max((nph - target_phi).abs()) < r {
                    accepted = Some((nt, ng));
                    break;
                }
            }
            lambda *= 0.5;
        }
        (t, g) = accepted.unwrap_or((t + step_t, g + step_g));
        if !(t > 0.0 && g > 0.0) {
            return Err(Error::Convergence {
                iterations: it + 1,
                residuals,
            });
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residuals,
    })
}

/// Grid point of `[t_lo, t_hi] × [g_lo, g_hi]` with the smallest measured residual.
pub fn coarse_scan<P: AngleProbe + ?Sized>(
    probe: &mut P,
    target_theta: f64,
    target_phi: f64,
    t_range: (f64, f64),
    g_range: (f64, f64),
    points: usize,
) -> Result<(f64, f64)> {
    if points < 2 {
        return domain("a scan needs at least two points per axis");
    }
    let lerp = |(a, b): (f64, f64), i: usize| a + (b - a) * i as f64 / (points - 1) as f64;
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for i in 0..points {
        for j in 0..points {
            let (t, g) = (lerp(t_range, i), lerp(g_range, j));
            let (th, ph) = probe.measure(t, g)?;
            let r = (th - target_theta).abs().max((ph - target_phi).abs());
            if r < best.0 {
                best = (r, (t, g));
            }
        }
    }
    Ok(best.1)
}

/// Deviations of the five fSim angles from their targets.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct AngleErrors {
    pub d_theta: f64,
    pub d_phi: f64,
    pub d_gamma: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    /// Operating swap angle.
    pub theta: f64,
}

impl AngleErrors {
    /// Gate realized by these errors on top of `target`.
    ///
    /// The quadratic budget is second-order exact when the single-qubit
    /// phase errors enter the matrix as half angles, so that is how they are
    /// applied here.
    pub fn actual_params(&self, target: &FsimParams<f64>) -> FsimParams<f64> {
        FsimParams {
            theta: target.theta + self.d_theta,
            phi: target.phi + self.d_phi,
            gamma: target.gamma + 0.5 * self.d_gamma,
            alpha: target.alpha + 0.5 * self.d_alpha,
            beta: target.beta + 0.5 * self.d_beta,
        }
    }
}

/// Quadratic coherent-error budget `ε_c`.
pub fn control_error(e: &AngleErrors) -> f64 {
    let (s2, c2) = (e.theta.sin().powi(2), e.theta.cos().powi(2));
    0.4 * e.d_theta.powi(2)
        + 0.15 * e.d_phi.powi(2)
        + 0.1 * e.d_gamma.powi(2)
        + 0.2 * e.d_gamma * e.d_phi
        + 0.1 * c2 * e.d_alpha.powi(2)
        + s2 * (7.0 + (2.0 * e.theta).cos() + 2.0 * s2) / 80.0 * e.d_beta.powi(2)
}

/// `1 − F = e_P / (1 + 1/D)` with `e_P = 1 − |Tr(U_t† U_a)|²/D²`, `D = 4`.
pub fn coherent_infidelity(target: &Gate4<f64>, actual: &Gate4<f64>) -> f64 {
    let d = 4.0;
    let tr = trace4(&matmul4(&adjoint4(target), actual));
    let e_p = 1.0 - tr.norm_sqr() / (d * d);
    e_p / (1.0 + 1.0 / d)
}

/// Closed form of `fsim_matrix(p)ⁿ`.
///
/// The middle block is an `SU(2)` rotation times `e^{iγ}` with
/// `cos Ω = cos θ·cos α`; its `n`-th power follows from Chebyshev recursion.
pub fn fsim_power<T: Real>(p: &FsimParams<T>, n: u32) -> Gate4<T> {
    let nf = T::lit(n as f64);
    let (st, ct) = p.theta.sin_cos();
    let cos_omega = (ct * p.alpha.cos()).max(-T::one()).min(T::one());
    let omega = cos_omega.acos();
    let sin_omega = omega.sin();
    // r_n = sin(nΩ)/sin(Ω), with its limit where sin Ω vanishes.
    let r = if sin_omega.abs() < T::lit(1e-9) {
        nf * ((nf - T::one()) * omega).cos()
    } else {
        (nf * omega).sin() / sin_omega
    };
    let a = Complex::new((nf * omega).cos(), -ct * p.alpha.sin() * r);
    let b = st * r;
    let i = Complex::new(T::zero(), T::one());
    let gn = p.gamma * nf;
    let z = czero();
    let one = Complex::new(T::one(), T::zero());
    [
        [one, z, z, z],
        [z, cis(gn) * a, i * cis(gn + p.beta) * b, z],
        [z, i * cis(gn - p.beta) * b, cis(gn) * a.conj(), z],
        [z, z, z, cis((T::lit(2.0) * p.gamma + p.phi) * nf)],
    ]
}

/// Infidelity of the gate produced by `errors` relative to `target`.
pub fn direct_control_error(target: &FsimParams<f64>, errors: &AngleErrors) -> f64 {
    coherent_infidelity(
        &fsim_matrix(target),
        &fsim_matrix(&errors.actual_params(target)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{identity4, matpow4, max_abs_diff4};
    use std::f64::consts::PI;

    #[test]
    fn model_scaling() {
        let m = PulseModel::new(0.9, 2.0).unwrap();
        let (th, ph) = m.evaluate(0.3232, 1.8).unwrap();
        assert!((th - PI / 6.0).abs() < 1e-3);
        assert!((ph - 2.0 * PI / 3.0).abs() < 1e-2);
        let (t2, p2) = m.evaluate(0.6464, 1.8).unwrap();
        assert!((t2 - 2.0 * th).abs() < 1e-12 && (p2 - 2.0 * ph).abs() < 1e-12);
        let (t3, p3) = m.evaluate(0.3232, 3.6).unwrap();
        assert!((t3 - 2.0 * th).abs() < 1e-12 && (p3 - 4.0 * ph).abs() < 1e-12);
        assert!(m.evaluate(0.0, 1.0).is_err());
        assert!(PulseModel::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn gradient_partials() {
        let mut m = PulseModel::new(0.9, 2.0).unwrap();
        let mg = gradient_matrix(&mut m, 1.0, 1.0, 1e-3, 1e-3).unwrap();
        assert!((mg[1][0] - 0.9).abs() < 1e-9);
        assert!((mg[0][1] - 4.0).abs() < 3e-3);
        // Forward-difference error halves with the step.
        let e1 = (gradient_matrix(&mut m, 1.0, 1.0, 0.1, 0.1).unwrap()[0][1] - 4.0).abs();
        let e2 = (gradient_matrix(&mut m, 1.0, 1.0, 0.05, 0.05).unwrap()[0][1] - 4.0).abs();
        assert!((e1 / e2 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn converges_from_paper_style_guess() {
        let mut m = PulseModel::new(0.9, 2.0).unwrap();
        let c = calibrate(
            &mut m,
            PI / 6.0,
            2.0 * PI / 3.0,
            (0.25, 1.5),
            &CalibrationOptions::default(),
        )
        .unwrap();
        assert!(c.iterations <= 3);
        assert!(*c.residuals.last().unwrap() < 0.02);
        assert!(c.residuals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn already_calibrated() {
        let mut m = PulseModel::new(0.9, 2.0).unwrap();
        let (th, ph) = m.evaluate(0.4, 1.2).unwrap();
        let c = calibrate(&mut m, th, ph, (0.4, 1.2), &CalibrationOptions::default()).unwrap();
        assert_eq!(c.iterations, 0);
    }

    #[test]
    fn budget_examples() {
        assert_eq!(control_error(&AngleErrors::default()), 0.0);
        let e = AngleErrors {
            d_theta: 0.02,
            ..Default::default()
        };
        assert!((control_error(&e) - 1.6e-4).abs() < 1e-15);
        let e = AngleErrors {
            d_phi: 0.02,
            ..Default::default()
        };
        assert!((control_error(&e) - 6.0e-5).abs() < 1e-15);
    }

    #[test]
    fn power_edge_cases() {
        let p = FsimParams::new(0.4, 1.1)
            .with_beta(0.3)
            .with_single_qubit_phases(0.2, 0.15);
        assert!(max_abs_diff4(&fsim_power(&p, 0), &identity4()) < 1e-15);
        assert!(max_abs_diff4(&fsim_power(&p, 1), &fsim_matrix(&p)) < 1e-15);
        assert!(max_abs_diff4(&fsim_power(&p, 37), &matpow4(&fsim_matrix(&p), 37)) < 1e-12);
        // sin Ω = 0: no hopping and no single-qubit detuning.
        let q = FsimParams::new(0.0, 0.7).with_single_qubit_phases(0.3, 0.0);
        assert!(max_abs_diff4(&fsim_power(&q, 9), &matpow4(&fsim_matrix(&q), 9)) < 1e-12);
        let r = FsimParams::new(PI, 0.7);
        assert!(max_abs_diff4(&fsim_power(&r, 6), &matpow4(&fsim_matrix(&r), 6)) < 1e-12);
    }
}
