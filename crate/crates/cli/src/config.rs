//! Simulation run configuration.

use std::path::{Path, PathBuf};

use andreev_core::scalar::parse_rational;
use andreev_core::{Angle, Parity, Point, Rational, Scalar, Vec2};
use serde::Deserialize;

use crate::error::CliError;
use crate::tablefile::Coord;

pub const DEFAULT_MAX_EVENTS: usize = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Initial direction: an angle in radians, or a slope `"dy/dx"` whose
/// signs give the orientation (`"1/-3"` points left and up).
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    Radians(f64),
    Slope(String),
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// Sampled from the seed when absent.
    #[serde(default)]
    pub position: Option<[Coord; 2]>,
    /// Sampled from the seed when absent (float tables only).
    #[serde(default)]
    pub direction: Option<DirectionSpec>,
    #[serde(default = "plus")]
    pub parity: i8,
}

fn plus() -> i8 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_max_events() -> usize {
    DEFAULT_MAX_EVENTS
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            initial: InitialSpec {
                parity: 1,
                ..InitialSpec::default()
            },
            max_events: DEFAULT_MAX_EVENTS,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
            outputs: Outputs::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("malformed run config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(CliError::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        self.parity()?;
        Ok(())
    }

    pub fn parity(&self) -> Result<Parity, CliError> {
        Parity::try_from(self.initial.parity)
            .map_err(|_| CliError::Config(format!("parity must be +1 or -1, got {}", self.initial.parity)))
    }
}

/// Splits `"dy/dx"` into exact components; a bare number means `dx = 1`.
pub fn parse_slope(text: &str) -> Result<Vec2<Rational>, CliError> {
    let bad = || CliError::Config(format!("cannot parse slope {text:?}; expected \"dy/dx\""));
    let (dy, dx) = match text.split_once('/') {
        Some((dy, dx)) => (parse_rational(dy).ok_or_else(bad)?, parse_rational(dx).ok_or_else(bad)?),
        None => (parse_rational(text).ok_or_else(bad)?, Rational::from_i64(1)),
    };
    if dx.is_zero_value() && dy.is_zero_value() {
        return Err(CliError::Config("slope 0/0 has no direction".into()));
    }
    Ok(Vec2::new(dx, dy))
}

/// Parses `"x,y"`.
pub fn parse_point(text: &str) -> Result<[Coord; 2], CliError> {
    let (x, y) = text
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("cannot parse point {text:?}; expected \"x,y\"")))?;
    Ok([Coord::Text(x.trim().to_owned()), Coord::Text(y.trim().to_owned())])
}

pub fn float_direction(spec: &DirectionSpec) -> Result<Point, CliError> {
    match spec {
        DirectionSpec::Radians(theta) if theta.is_finite() => Ok(Angle::new(*theta).unit()),
        DirectionSpec::Radians(theta) => Err(CliError::Config(format!("direction {theta} is not finite"))),
        DirectionSpec::Slope(s) => {
            let v = parse_slope(s)?.to_f64();
            let n = v.norm();
            Ok(Point::new(v.x / n, v.y / n))
        }
    }
}

pub fn exact_direction(spec: &DirectionSpec) -> Result<Vec2<Rational>, CliError> {
    match spec {
        DirectionSpec::Radians(_) => Err(CliError::Config(
            "rational tables need the direction as a slope \"dy/dx\"; radians are float-only".into(),
        )),
        DirectionSpec::Slope(s) => parse_slope(s),
    }
}
