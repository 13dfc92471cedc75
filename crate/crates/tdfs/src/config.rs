//! Line-oriented run configuration: `key = value` pairs with `#` comments.
//!
//! Unknown keys, duplicate keys, unparseable values and out-of-bounds values
//! are all rejected with the offending line number. An empty file yields the
//! all-defaults configuration (`mu = 1`, `nu = 2 pi / 3`, `o = 1e-3`,
//! exact control, `dt = 1e-3`, `t_max = 5`).

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::evolve::IntegratorConfig;
use crate::qcore::{DensityMatrix, QcoreError};
use crate::reservoir::{ReservoirError, SqueezeSchedule};
use crate::synthesis::{dfs_frame, ControlLaw, SynthesisError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    State(#[from] QcoreError),
}

/// Control-law selector in a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlKind {
    None,
    Exact,
    ClosedForm,
    Regularized,
    Decaying,
}

/// Initial-state selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialStateKind {
    /// Gauge-fixed frame state at `t = 0` (purity starts at exactly 1).
    Frame,
    /// Small-tilt approximation `sqrt(1 - o^2) |0> + o |1>`.
    Approx,
    /// Explicit density-matrix entries from `rho00`, `re_rho01`, `im_rho01`.
    Explicit,
}

/// Validated run configuration with documented defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mu: f64,
    pub nu: f64,
    pub o: f64,
    pub control: ControlKind,
    pub epsilon: f64,
    pub epsilon0: f64,
    pub gamma_big: f64,
    pub dt: f64,
    pub t_max: f64,
    pub record_stride: usize,
    pub initial_state: InitialStateKind,
    pub rho00: Option<f64>,
    pub re_rho01: Option<f64>,
    pub im_rho01: Option<f64>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            nu: 2.0 * PI / 3.0,
            o: 1e-3,
            control: ControlKind::Exact,
            epsilon: 0.1,
            epsilon0: 0.1,
            gamma_big: 1000.0,
            dt: 1e-3,
            t_max: 5.0,
            record_stride: 1,
            initial_state: InitialStateKind::Frame,
            rho00: None,
            re_rho01: None,
            im_rho01: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn schedule(&self) -> Result<SqueezeSchedule, ConfigError> {
        Ok(SqueezeSchedule::new(self.mu, self.nu, self.o)?)
    }

    pub fn control_law(&self) -> ControlLaw {
        match self.control {
            ControlKind::None => ControlLaw::None,
            ControlKind::Exact => ControlLaw::Exact,
            ControlKind::ClosedForm => ControlLaw::ClosedForm,
            ControlKind::Regularized => ControlLaw::Regularized { epsilon: self.epsilon },
            ControlKind::Decaying => ControlLaw::Decaying {
                epsilon0: self.epsilon0,
                gamma_decay: self.gamma_big,
            },
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_max: self.t_max,
            record_stride: self.record_stride,
            ..IntegratorConfig::default()
        }
    }

    /// Resolve the configured initial state against a schedule.
    pub fn initial_density(&self, schedule: &SqueezeSchedule) -> Result<DensityMatrix, ConfigError> {
        match self.initial_state {
            InitialStateKind::Frame => Ok(dfs_frame(schedule, 0.0)?.phi.projector()),
            InitialStateKind::Approx => {
                let o = schedule.offset();
                let psi = crate::qcore::PureState::normalized(
                    C64::new((1.0 - o * o).sqrt(), 0.0),
                    C64::new(o, 0.0),
                )?;
                Ok(psi.projector())
            }
            InitialStateKind::Explicit => {
                let (Some(p), Some(re), Some(im)) = (self.rho00, self.re_rho01, self.im_rho01)
                else {
                    return Err(ConfigError::Invalid(
                        "initial_state = explicit requires rho00, re_rho01 and im_rho01".into(),
                    ));
                };
                let r01 = C64::new(re, im);
                Ok(DensityMatrix::from_entries([
                    C64::new(p, 0.0),
                    r01,
                    r01.conj(),
                    C64::new(1.0 - p, 0.0),
                ])?)
            }
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Line { line, msg: msg.into() }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| err(line, format!("cannot parse `{value}` as a number for `{key}`")))?;
    if !v.is_finite() {
        return Err(err(line, format!("`{key}` must be finite")));
    }
    Ok(v)
}

/// Parse a configuration from text. See the module docs for the format.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(line, format!("expected `key = value`, got `{content}`")));
        };
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(err(line, format!("missing value for `{key}`")));
        }
        if seen.iter().any(|k| k == key) {
            return Err(err(line, format!("duplicate key `{key}`")));
        }
        seen.push(key.to_string());

        match key {
            "mu" => {
                cfg.mu = parse_f64(line, key, value)?;
                if cfg.mu < 0.0 {
                    return Err(err(line, "`mu` must be nonnegative"));
                }
            }
            "nu" => cfg.nu = parse_f64(line, key, value)?,
            "o" => {
                cfg.o = parse_f64(line, key, value)?;
                if cfg.o <= 0.0 {
                    return Err(err(line, "`o` must be positive"));
                }
            }
            "control" => {
                cfg.control = match value {
                    "none" => ControlKind::None,
                    "exact" => ControlKind::Exact,
                    "closed_form" => ControlKind::ClosedForm,
                    "regularized" => ControlKind::Regularized,
                    "decaying" => ControlKind::Decaying,
                    other => {
                        return Err(err(
                            line,
                            format!(
                                "unknown control `{other}` (expected none, exact, closed_form, \
                                 regularized or decaying)"
                            ),
                        ))
                    }
                };
            }
            "epsilon" => {
                cfg.epsilon = parse_f64(line, key, value)?;
                if cfg.epsilon < 0.0 {
                    return Err(err(line, "`epsilon` must be nonnegative"));
                }
            }
            "epsilon0" => {
                cfg.epsilon0 = parse_f64(line, key, value)?;
                if cfg.epsilon0 < 0.0 {
                    return Err(err(line, "`epsilon0` must be nonnegative"));
                }
            }
            "gamma_big" => {
                cfg.gamma_big = parse_f64(line, key, value)?;
                if cfg.gamma_big < 0.0 {
                    return Err(err(line, "`gamma_big` must be nonnegative"));
                }
            }
            "dt" => {
                cfg.dt = parse_f64(line, key, value)?;
                if cfg.dt <= 0.0 {
                    return Err(err(line, "`dt` must be positive"));
                }
            }
            "t_max" => {
                cfg.t_max = parse_f64(line, key, value)?;
                if cfg.t_max < 0.0 {
                    return Err(err(line, "`t_max` must be nonnegative"));
                }
            }
            "record_stride" => {
                let v: usize = value
                    .parse()
                    .map_err(|_| err(line, format!("cannot parse `{value}` as an integer")))?;
                if v == 0 {
                    return Err(err(line, "`record_stride` must be at least 1"));
                }
                cfg.record_stride = v;
            }
            "initial_state" => {
                cfg.initial_state = match value {
                    "frame" => InitialStateKind::Frame,
                    "approx" => InitialStateKind::Approx,
                    "explicit" => InitialStateKind::Explicit,
                    other => {
                        return Err(err(
                            line,
                            format!("unknown initial_state `{other}` (frame, approx, explicit)"),
                        ))
                    }
                };
            }
            "rho00" => {
                let v = parse_f64(line, key, value)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(err(line, "`rho00` must lie in [0, 1]"));
                }
                cfg.rho00 = Some(v);
            }
            "re_rho01" => cfg.re_rho01 = Some(parse_f64(line, key, value)?),
            "im_rho01" => cfg.im_rho01 = Some(parse_f64(line, key, value)?),
            "output" => cfg.output = Some(PathBuf::from(value)),
            other => return Err(err(line, format!("unknown key `{other}`"))),
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.mu, 1.0);
        assert!((cfg.nu - 2.0 * PI / 3.0).abs() < 1e-15);
        assert_eq!(cfg.o, 1e-3);
        assert_eq!(cfg.control, ControlKind::Exact);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.t_max, 5.0);
        assert_eq!(cfg.record_stride, 1);
    }

    #[test]
    fn parses_keys_and_comments() {
        let cfg = parse_config(
            "# a comment\nmu = 1.0\ncontrol = exact  # trailing comment\n\nnu = 0\n",
        )
        .unwrap();
        assert_eq!(cfg.mu, 1.0);
        assert_eq!(cfg.nu, 0.0);
        assert_eq!(cfg.control, ControlKind::Exact);
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        let e = parse_config("mu = 1.0\nepsilon = -0.1\n").unwrap_err();
        assert!(matches!(e, ConfigError::Line { line: 2, .. }), "{e}");

        let e = parse_config("unknown_key = 3\n").unwrap_err();
        assert!(e.to_string().contains("line 1"));
        assert!(e.to_string().contains("unknown key"));

        let e = parse_config("mu = abc\n").unwrap_err();
        assert!(e.to_string().contains("cannot parse"));

        let e = parse_config("mu = 1\nmu = 2\n").unwrap_err();
        assert!(e.to_string().contains("duplicate"));

        let e = parse_config("just some words\n").unwrap_err();
        assert!(e.to_string().contains("key = value"));

        assert!(parse_config("o = 0\n").is_err());
        assert!(parse_config("dt = 0\n").is_err());
        assert!(parse_config("record_stride = 0\n").is_err());
        assert!(parse_config("control = sideways\n").is_err());
        assert!(parse_config("mu = inf\n").is_err());
    }

    #[test]
    fn explicit_initial_state_requires_entries() {
        let cfg = parse_config("initial_state = explicit\n").unwrap();
        let sched = cfg.schedule().unwrap();
        assert!(cfg.initial_density(&sched).is_err());

        let cfg = parse_config(
            "initial_state = explicit\nrho00 = 0.5\nre_rho01 = 0.1\nim_rho01 = -0.2\n",
        )
        .unwrap();
        let rho = cfg.initial_density(&sched).unwrap();
        assert_eq!(rho.rho00(), 0.5);
        assert_eq!(rho.rho01(), C64::new(0.1, -0.2));

        // entries violating positivity are rejected
        let cfg = parse_config(
            "initial_state = explicit\nrho00 = 0.1\nre_rho01 = 0.5\nim_rho01 = 0\n",
        )
        .unwrap();
        assert!(cfg.initial_density(&sched).is_err());
    }

    #[test]
    fn initial_state_variants() {
        let cfg = parse_config("initial_state = approx\nnu = 0\n").unwrap();
        let sched = cfg.schedule().unwrap();
        let rho = cfg.initial_density(&sched).unwrap();
        // sqrt(1-o^2)|0> + o|1> with o = 1e-3
        assert!((rho.rho11() - 1e-6).abs() < 1e-12);

        let cfg = parse_config("").unwrap();
        let rho = cfg.initial_density(&sched).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }
}
