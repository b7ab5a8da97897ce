//! Experiment configuration: parsing, defaults and validation.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Trajectory,
    Spectroscopy,
    FluxSweep,
    Gapless,
    Ladder,
    Theory,
    Calibrate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Trajectory => "trajectory",
            Experiment::Spectroscopy => "spectroscopy",
            Experiment::FluxSweep => "flux_sweep",
            Experiment::Gapless => "gapless",
            Experiment::Ladder => "ladder",
            Experiment::Theory => "theory",
            Experiment::Calibrate => "calibrate",
        }
    }
}

/// An angle given as a number of radians or as text such as `"2pi/3"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum AngleSpec {
    Num(f64),
    Text(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    kind: String,
    sigma: Option<f64>,
    p: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    targets: Option<Vec<[AngleSpec; 2]>>,
    coeff_theta: Option<f64>,
    coeff_phi: Option<f64>,
    offset_theta: Option<f64>,
    offset_phi: Option<f64>,
    noise_std: Option<f64>,
    repeats: Option<usize>,
    max_iter: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    sites: Option<usize>,
    photons: Option<OneOrMany<usize>>,
    theta: Option<AngleSpec>,
    phi: Option<AngleSpec>,
    beta: Option<AngleSpec>,
    theta_prime: Option<OneOrMany<AngleSpec>>,
    flux: Option<OneOrMany<f64>>,
    cycles: Option<usize>,
    shots: Option<usize>,
    trajectories: Option<usize>,
    noise: Option<RawNoise>,
    seed: Option<u64>,
    output: Option<String>,
    window: Option<String>,
    initial: Option<Vec<usize>>,
    window_start: Option<usize>,
    points: Option<usize>,
    max_dimension: Option<u64>,
    calibration: Option<RawCalibration>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseConfig {
    None,
    Dephasing { sigma: f64 },
    AmplitudeDamping { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationConfig {
    /// `(θ, φ)` targets in radians.
    pub targets: Vec<[f64; 2]>,
    pub coeff_theta: f64,
    pub coeff_phi: f64,
    pub offset_theta: f64,
    pub offset_phi: f64,
    pub noise_std: f64,
    pub repeats: usize,
    pub max_iter: usize,
}

/// Fully resolved configuration, echoed into the run manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub experiment: Experiment,
    pub sites: usize,
    pub photons: Vec<usize>,
    pub theta: f64,
    pub phi: f64,
    pub beta: f64,
    pub theta_prime: Vec<f64>,
    /// Flux values as fractions of the flux quantum.
    pub flux: Vec<f64>,
    pub cycles: usize,
    pub shots: usize,
    pub trajectories: usize,
    pub noise: NoiseConfig,
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub window: String,
    pub initial: Option<Vec<usize>>,
    pub window_start: usize,
    pub points: Option<usize>,
    pub max_dimension: u64,
    pub calibration: Option<CalibrationConfig>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

/// Default sector-dimension guard, in amplitudes.
pub const DEFAULT_MAX_DIMENSION: u64 = 2_000_000;

/// One-based line of the first `key = …` assignment in `src`.
fn key_line(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key)
                .map(|rest| rest.trim_start().starts_with('='))
                .unwrap_or(false)
        })
        .map(|i| i + 1)
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    path: &'a str,
    src: &'a str,
}

impl Ctx<'_> {
    /// Error anchored at `key`, or at `experiment` when the key is absent.
    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        let line = key_line(self.src, key)
            .or_else(|| key_line(self.src, "experiment"))
            .unwrap_or(1);
        CliError::Config(format!("{}:{line}: {msg}", self.path))
    }

    fn angle(&self, key: &str, a: &AngleSpec) -> Result<f64, CliError> {
        let v = match a {
            AngleSpec::Num(x) => *x,
            AngleSpec::Text(s) => parse_angle(s)
                .ok_or_else(|| self.err(key, format!("field `{key}`: cannot read angle {s:?}")))?,
        };
        if !v.is_finite() {
            return Err(self.err(key, format!("field `{key}` must be finite")));
        }
        Ok(v)
    }
}

/// Reads `x`, `pi`, `a*pi/b`, `api/b`, `-pi/4` and the same with `π`.
pub fn parse_angle(s: &str) -> Option<f64> {
    let t: String = s
        .replace('π', "pi")
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '*')
        .collect();
    match t.find("pi") {
        None => t.parse().ok(),
        Some(i) => {
            let coef = match &t[..i] {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse().ok()?,
            };
            let den = match &t[i + 2..] {
                "" => 1.0,
                rest => rest.strip_prefix('/')?.parse().ok()?,
            };
            if den == 0.0 {
                return None;
            }
            Some(coef * PI / den)
        }
    }
}

const DEFAULT_TARGETS: [[f64; 2]; 4] = [
    [PI / 3.0, 5.0 * PI / 6.0],
    [PI / 6.0, 2.0 * PI / 3.0],
    [PI / 6.0, PI / 2.0],
    [PI / 3.0, PI / 6.0],
];

pub fn parse(path: &str, src: &str, ov: &Overrides) -> Result<Config, CliError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(src, s.start)).unwrap_or(1);
        CliError::Config(format!("{path}:{line}: {}", e.message()))
    })?;
    let cx = Ctx { path, src };
    let exp = raw.experiment;
    let needs_angles = exp != Experiment::Calibrate;

    let require = |key: &str, a: &Option<AngleSpec>| -> Result<f64, CliError> {
        match a {
            Some(a) => cx.angle(key, a),
            None => Err(cx.err(
                key,
                format!(
                    "missing field `{key}` (required by experiment `{}`)",
                    exp.name()
                ),
            )),
        }
    };
    let (theta, phi) = if needs_angles {
        (require("theta", &raw.theta)?, require("phi", &raw.phi)?)
    } else {
        (0.0, 0.0)
    };
    let beta = match &raw.beta {
        Some(b) => cx.angle("beta", b)?,
        None => 0.0,
    };

    let sites = raw.sites.unwrap_or(match exp {
        Experiment::Ladder => 14,
        _ => 24,
    });
    if needs_angles && (sites < 4 || sites % 2 == 1) {
        return Err(cx.err(
            "sites",
            format!("field `sites` must be an even ring length ≥ 4, got {sites}"),
        ));
    }

    let photons = match raw.photons {
        Some(p) => p.into_vec(),
        None => match exp {
            Experiment::Gapless => vec![2],
            Experiment::Ladder => vec![3],
            Experiment::Calibrate => vec![],
            _ => {
                return Err(cx.err(
                    "photons",
                    format!(
                        "missing field `photons` (required by experiment `{}`)",
                        exp.name()
                    ),
                ))
            }
        },
    };
    let total_sites = if exp == Experiment::Ladder {
        sites + sites / 2
    } else {
        sites
    };
    if needs_angles && photons.is_empty() {
        return Err(cx.err(
            "photons",
            "field `photons` must list at least one photon number",
        ));
    }
    if let Some(&bad) = photons.iter().find(|&&n| n == 0 || n >= total_sites) {
        return Err(cx.err(
            "photons",
            format!("field `photons`: {bad} is outside 1..{total_sites}"),
        ));
    }

    let theta_prime = match raw.theta_prime {
        Some(v) => v
            .into_vec()
            .iter()
            .map(|a| cx.angle("theta_prime", a))
            .collect::<Result<Vec<_>, _>>()?,
        None if exp == Experiment::Ladder => {
            return Err(cx.err(
                "theta_prime",
                "missing field `theta_prime` (required by experiment `ladder`)",
            ))
        }
        None => vec![],
    };
    let flux = match raw.flux {
        Some(v) => v.into_vec(),
        None if exp == Experiment::FluxSweep => {
            return Err(cx.err(
                "flux",
                "missing field `flux` (required by experiment `flux_sweep`)",
            ))
        }
        None => vec![],
    };
    if flux.iter().any(|f| !f.is_finite()) {
        return Err(cx.err("flux", "field `flux` must be finite"));
    }

    let cycles = raw.cycles.unwrap_or(match exp {
        Experiment::Trajectory => 30,
        Experiment::Ladder => 40,
        _ => 128,
    });
    if matches!(
        exp,
        Experiment::Spectroscopy | Experiment::FluxSweep | Experiment::Gapless
    ) && cycles < 2
    {
        return Err(cx.err("cycles", "field `cycles` must be at least 2 for a spectrum"));
    }

    let noise = match &raw.noise {
        None => NoiseConfig::None,
        Some(n) => match n.kind.as_str() {
            "none" => NoiseConfig::None,
            "dephasing" => {
                let sigma = n
                    .sigma
                    .ok_or_else(|| cx.err("kind", "missing field `noise.sigma` for dephasing"))?;
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(cx.err(
                        "sigma",
                        "field `noise.sigma` must be finite and non-negative",
                    ));
                }
                NoiseConfig::Dephasing { sigma }
            }
            "amplitude_damping" => {
                let p = n.p.ok_or_else(|| {
                    cx.err("kind", "missing field `noise.p` for amplitude_damping")
                })?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(cx.err("p", "field `noise.p` must lie in [0, 1]"));
                }
                NoiseConfig::AmplitudeDamping { p }
            }
            other => {
                return Err(cx.err(
                    "kind",
                    format!("field `noise.kind`: unknown noise {other:?}"),
                ))
            }
        },
    };
    let shots = raw.shots.unwrap_or(0);
    let seed = ov.seed.or(raw.seed);

    let calibration = if exp == Experiment::Calibrate {
        let c = raw.calibration.unwrap_or(RawCalibration {
            targets: None,
            coeff_theta: None,
            coeff_phi: None,
            offset_theta: None,
            offset_phi: None,
            noise_std: None,
            repeats: None,
            max_iter: None,
        });
        let targets = match &c.targets {
            Some(t) => t
                .iter()
                .map(|[a, b]| Ok([cx.angle("targets", a)?, cx.angle("targets", b)?]))
                .collect::<Result<Vec<_>, CliError>>()?,
            None => DEFAULT_TARGETS.to_vec(),
        };
        let cfg = CalibrationConfig {
            targets,
            coeff_theta: c.coeff_theta.unwrap_or(0.9),
            coeff_phi: c.coeff_phi.unwrap_or(2.0),
            offset_theta: c.offset_theta.unwrap_or(0.0),
            offset_phi: c.offset_phi.unwrap_or(0.0),
            noise_std: c.noise_std.unwrap_or(0.0),
            repeats: c.repeats.unwrap_or(1),
            max_iter: c.max_iter.unwrap_or(3),
        };
        if !(cfg.coeff_theta > 0.0 && cfg.coeff_phi > 0.0) {
            return Err(cx.err(
                "coeff_theta",
                "fields `calibration.coeff_theta` and `coeff_phi` must be positive",
            ));
        }
        if !(cfg.noise_std >= 0.0 && cfg.noise_std.is_finite()) {
            return Err(cx.err(
                "noise_std",
                "field `calibration.noise_std` must be finite and non-negative",
            ));
        }
        if cfg.repeats == 0 {
            return Err(cx.err("repeats", "field `calibration.repeats` must be positive"));
        }
        Some(cfg)
    } else {
        None
    };

    let stochastic = noise != NoiseConfig::None
        || shots > 0
        || calibration.as_ref().is_some_and(|c| c.noise_std > 0.0);
    if stochastic && seed.is_none() {
        return Err(cx.err(
            "seed",
            "missing field `seed` (required when noise or sampling is enabled)",
        ));
    }

    let window = raw.window.unwrap_or_else(|| "rectangular".into());
    if window != "rectangular" && window != "hann" {
        return Err(cx.err(
            "window",
            format!("field `window`: expected \"rectangular\" or \"hann\", got {window:?}"),
        ));
    }
    if let Some(init) = &raw.initial {
        if init.iter().any(|&s| s >= total_sites) {
            return Err(cx.err(
                "initial",
                format!("field `initial`: sites must be below {total_sites}"),
            ));
        }
        if photons.len() != 1 || photons[0] != init.len() {
            return Err(cx.err(
                "initial",
                "field `initial` needs a single photon number equal to its length",
            ));
        }
    }
    let window_start = raw.window_start.unwrap_or(0);
    if window_start >= sites && needs_angles {
        return Err(cx.err("window_start", "field `window_start` must be a ring site"));
    }
    if raw.points == Some(0) || raw.points == Some(1) {
        return Err(cx.err("points", "field `points` must be at least 2"));
    }

    Ok(Config {
        experiment: exp,
        sites,
        photons,
        theta,
        phi,
        beta,
        theta_prime,
        flux,
        cycles,
        shots,
        trajectories: raw
            .trajectories
            .unwrap_or(if noise == NoiseConfig::None { 1 } else { 100 }),
        noise,
        seed,
        output: ov
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from(raw.output.unwrap_or_else(|| "out".into()))),
        window,
        initial: raw.initial,
        window_start,
        points: raw.points,
        max_dimension: raw.max_dimension.unwrap_or(DEFAULT_MAX_DIMENSION),
        calibration,
    })
}
