//! JSON encodings. Every exact value travels as a decimal string.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Configuration, GeometryError, Line, Point, Rational};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid number {0:?}")]
    BadNumber(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// On-disk form of a configuration. Incidences are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigurationFile {
    pub points: Vec<[String; 2]>,
    pub lines: Vec<[String; 3]>,
}

pub fn parse_rational(s: &str) -> Result<Rational, IoError> {
    s.trim()
        .parse::<Rational>()
        .map_err(|_| IoError::BadNumber(s.to_string()))
}

pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

impl From<&Configuration> for ConfigurationFile {
    fn from(cfg: &Configuration) -> Self {
        ConfigurationFile {
            points: cfg
                .points()
                .iter()
                .map(|p| [format_rational(&p.x), format_rational(&p.y)])
                .collect(),
            lines: cfg
                .lines()
                .iter()
                .map(|l| [l.a().to_string(), l.b().to_string(), l.c().to_string()])
                .collect(),
        }
    }
}

impl TryFrom<&ConfigurationFile> for Configuration {
    type Error = IoError;

    fn try_from(file: &ConfigurationFile) -> Result<Self, IoError> {
        let points = file
            .points
            .iter()
            .map(|[x, y]| Ok(Point::new(parse_rational(x)?, parse_rational(y)?)))
            .collect::<Result<Vec<_>, IoError>>()?;
        let lines = file
            .lines
            .iter()
            .map(|[a, b, c]| {
                Ok(Line::from_rationals(
                    &parse_rational(a)?,
                    &parse_rational(b)?,
                    &parse_rational(c)?,
                )?)
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(Configuration::new(points, lines)?)
    }
}

pub fn configuration_from_json(s: &str) -> Result<Configuration, IoError> {
    let file: ConfigurationFile = serde_json::from_str(s)?;
    Configuration::try_from(&file)
}

pub fn configuration_to_json(cfg: &Configuration) -> String {
    serde_json::to_string_pretty(&ConfigurationFile::from(cfg)).expect("serializable")
}
