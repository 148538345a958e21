//! Synthetic appliances following the usual four-way load taxonomy:
//! on/off devices, finite-state machines, continuously varying loads and
//! permanent consumers.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::aggregate::build_aggregate;
use super::window::Series;
use crate::error::DataError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ApplianceKind {
    /// Type I: square wave at `level` watts, on a fraction `duty` of the time
    /// with exponentially distributed run lengths averaging `mean_on` samples.
    OnOff {
        level: f64,
        duty: f64,
        #[serde(default = "default_mean_on")]
        mean_on: f64,
    },
    /// Type II: Markov chain over `levels`. Each step switches state with
    /// probability `switch_prob * (1 + 0.5 sin(2 pi t / cycle))`.
    FiniteState {
        levels: Vec<f64>,
        #[serde(default = "default_switch_prob")]
        switch_prob: f64,
        #[serde(default = "default_cycle")]
        cycle: f64,
    },
    /// Type III: random walk in `[0, max_level]` whose increments follow an
    /// AR(1) process with coefficient `smoothing`.
    Continuous {
        max_level: f64,
        #[serde(default = "default_step_std")]
        step_std: f64,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
    /// Type IV: constant draw.
    Permanent { level: f64 },
}

fn default_mean_on() -> f64 {
    60.0
}
fn default_switch_prob() -> f64 {
    0.01
}
fn default_cycle() -> f64 {
    1440.0
}
fn default_step_std() -> f64 {
    1.0
}
fn default_smoothing() -> f64 {
    0.9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApplianceSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ApplianceKind,
    #[serde(default)]
    pub seed: u64,
}

impl ApplianceSpec {
    pub fn new(name: impl Into<String>, kind: ApplianceKind) -> Self {
        Self {
            name: name.into(),
            kind,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: &str| Err(DataError::Invalid(format!("appliance {}: {msg}", self.name)));
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        match &self.kind {
            ApplianceKind::OnOff {
                level,
                duty,
                mean_on,
            } => {
                if !nonneg(*level) {
                    return bad("level must be >= 0");
                }
                if !(*duty > 0.0 && *duty < 1.0) {
                    return bad("duty must lie in (0, 1)");
                }
                if !(*mean_on >= 1.0) {
                    return bad("mean_on must be at least one sample");
                }
            }
            ApplianceKind::FiniteState {
                levels,
                switch_prob,
                cycle,
            } => {
                if levels.len() < 2 {
                    return bad("a finite-state appliance needs at least two levels");
                }
                if !levels.iter().all(|&l| nonneg(l)) {
                    return bad("levels must be >= 0");
                }
                if !(0.0..=2.0 / 3.0).contains(switch_prob) {
                    return bad("switch_prob must lie in [0, 2/3]");
                }
                if !(*cycle > 0.0) {
                    return bad("cycle must be positive");
                }
            }
            ApplianceKind::Continuous {
                max_level,
                step_std,
                smoothing,
            } => {
                if !nonneg(*max_level) || !nonneg(*step_std) {
                    return bad("max_level and step_std must be >= 0");
                }
                if !(0.0..1.0).contains(smoothing) {
                    return bad("smoothing must lie in [0, 1)");
                }
            }
            ApplianceKind::Permanent { level } => {
                if !nonneg(*level) {
                    return bad("level must be >= 0");
                }
            }
        }
        Ok(())
    }

    /// `len` samples of this appliance's power draw.
    pub fn generate(&self, len: usize, rng: &mut impl Rng) -> Vec<f64> {
        match &self.kind {
            ApplianceKind::OnOff {
                level,
                duty,
                mean_on,
            } => {
                let on = Exp::new(1.0 / mean_on).expect("positive rate");
                let mean_off = mean_on * (1.0 - duty) / duty;
                let off = Exp::new(1.0 / mean_off).expect("positive rate");
                let mut state = rng.gen_bool(*duty);
                let mut out = Vec::with_capacity(len);
                while out.len() < len {
                    let d = if state { on.sample(rng) } else { off.sample(rng) };
                    let run = (d.round() as usize).max(1).min(len - out.len());
                    let v = if state { *level } else { 0.0 };
                    out.extend(std::iter::repeat(v).take(run));
                    state = !state;
                }
                out
            }
            ApplianceKind::FiniteState {
                levels,
                switch_prob,
                cycle,
            } => {
                let mut state = rng.gen_range(0..levels.len());
                (0..len)
                    .map(|t| {
                        let p = switch_prob * (1.0 + 0.5 * (2.0 * PI * t as f64 / cycle).sin());
                        if rng.gen_bool(p.clamp(0.0, 1.0)) {
                            let next = rng.gen_range(0..levels.len() - 1);
                            state = if next >= state { next + 1 } else { next };
                        }
                        levels[state]
                    })
                    .collect()
            }
            ApplianceKind::Continuous {
                max_level,
                step_std,
                smoothing,
            } => {
                let step = Normal::new(0.0, *step_std).expect("valid std");
                let mut x = max_level / 2.0;
                let mut v = 0.0;
                (0..len)
                    .map(|_| {
                        v = smoothing * v + step.sample(rng);
                        x = (x + v).clamp(0.0, *max_level);
                        x
                    })
                    .collect()
            }
            ApplianceKind::Permanent { level } => vec![*level; len],
        }
    }
}

/// Spec file for synthetic data, one `[[appliance]]` table per device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpecFile {
    pub appliance: Vec<ApplianceSpec>,
}

/// Three appliances: a 100 W on/off device at 30 % duty, a three-state
/// {0, 50, 200} W machine and a 30 W permanent load.
pub fn default_specs() -> Vec<ApplianceSpec> {
    vec![
        ApplianceSpec::new(
            "on_off",
            ApplianceKind::OnOff {
                level: 100.0,
                duty: 0.3,
                mean_on: default_mean_on(),
            },
        ),
        ApplianceSpec::new(
            "three_state",
            ApplianceKind::FiniteState {
                levels: vec![0.0, 50.0, 200.0],
                switch_prob: default_switch_prob(),
                cycle: default_cycle(),
            },
        ),
        ApplianceSpec::new("permanent", ApplianceKind::Permanent { level: 30.0 }),
    ]
}

fn stream_seed(seed: u64, index: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_add(1).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ salt.wrapping_mul(0x94D0_49BB_1331_11EB)
}

/// Generates `len` samples of every appliance plus their noisy aggregate.
/// The output is a pure function of the arguments.
pub fn gen_synthetic(
    specs: &[ApplianceSpec],
    len: usize,
    period: f64,
    noise_std: f64,
    seed: u64,
) -> Result<Series, DataError> {
    if specs.is_empty() {
        return Err(DataError::Invalid("at least one appliance spec is required".into()));
    }
    if len == 0 || !(period > 0.0) {
        return Err(DataError::Invalid("length and period must be positive".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let targets: Vec<Vec<f64>> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, i as u64, s.seed));
            s.generate(len, &mut rng)
        })
        .collect();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, u64::MAX, 0));
    let mixture = build_aggregate(&targets, None, noise_std, &mut noise_rng)?;
    Ok(Series {
        names: specs.iter().map(|s| s.name.clone()).collect(),
        mixture,
        targets,
        start: 0,
        period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permanent_appliance_gives_constant_mixture() {
        let specs = [ApplianceSpec::new("base", ApplianceKind::Permanent { level: 50.0 })];
        let s = gen_synthetic(&specs, 100, 1.0, 0.0, 1).unwrap();
        assert!(s.mixture.iter().all(|&v| v == 50.0));
    }

    #[test]
    fn deterministic_in_seed() {
        let a = gen_synthetic(&default_specs(), 5000, 1.0, 2.0, 7).unwrap();
        let b = gen_synthetic(&default_specs(), 5000, 1.0, 2.0, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(&default_specs(), 5000, 1.0, 2.0, 8).unwrap();
        assert_ne!(a.targets, c.targets);
    }

    #[test]
    fn on_off_long_run_mean() {
        let specs = [ApplianceSpec::new(
            "sq",
            ApplianceKind::OnOff {
                level: 100.0,
                duty: 0.5,
                mean_on: 60.0,
            },
        )];
        let s = gen_synthetic(&specs, 100_000, 1.0, 0.0, 3).unwrap();
        let mean = s.targets[0].iter().sum::<f64>() / 1e5;
        assert!((45.0..=55.0).contains(&mean), "mean {mean}");
        assert!(s.targets[0].iter().all(|&v| v == 0.0 || v == 100.0));
    }

    #[test]
    fn finite_state_visits_only_its_levels() {
        let specs = [ApplianceSpec::new(
            "fsm",
            ApplianceKind::FiniteState {
                levels: vec![0.0, 50.0, 200.0],
                switch_prob: 0.05,
                cycle: 500.0,
            },
        )];
        let s = gen_synthetic(&specs, 20_000, 1.0, 0.0, 3).unwrap();
        for lvl in [0.0, 50.0, 200.0] {
            assert!(s.targets[0].contains(&lvl));
        }
        assert!(s.targets[0].iter().all(|v| [0.0, 50.0, 200.0].contains(v)));
    }

    #[test]
    fn continuous_stays_in_range() {
        let specs = [ApplianceSpec::new(
            "heater",
            ApplianceKind::Continuous {
                max_level: 300.0,
                step_std: 5.0,
                smoothing: 0.8,
            },
        )];
        let s = gen_synthetic(&specs, 10_000, 1.0, 0.0, 3).unwrap();
        assert!(s.targets[0].iter().all(|&v| (0.0..=300.0).contains(&v)));
    }

    #[test]
    fn invalid_specs() {
        let one_level = ApplianceSpec::new(
            "x",
            ApplianceKind::FiniteState {
                levels: vec![10.0],
                switch_prob: 0.1,
                cycle: 10.0,
            },
        );
        assert!(gen_synthetic(&[one_level], 10, 1.0, 0.0, 0).is_err());
        let neg = ApplianceSpec::new("y", ApplianceKind::Permanent { level: -1.0 });
        assert!(gen_synthetic(&[neg], 10, 1.0, 0.0, 0).is_err());
        assert!(gen_synthetic(&[], 10, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn spec_file_parses() {
        let text = r#"
            [[appliance]]
            name = "fridge"
            type = "on-off"
            level = 120.0
            duty = 0.4

            [[appliance]]
            name = "washer"
            type = "finite-state"
            levels = [0.0, 300.0, 2000.0]
            seed = 4

            [[appliance]]
            name = "router"
            type = "permanent"
            level = 12.0
        "#;
        let f: SynthSpecFile = toml::from_str(text).unwrap();
        assert_eq!(f.appliance.len(), 3);
        assert_eq!(f.appliance[1].seed, 4);
        assert!(matches!(f.appliance[0].kind, ApplianceKind::OnOff { mean_on, .. } if mean_on == 60.0));
        let back: SynthSpecFile = toml::from_str(&toml::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
