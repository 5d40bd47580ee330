//! On-disk table description.

use std::fmt;
use std::path::Path;

use andreev_core::scalar::{format_rational, parse_rational, rational_from_f64};
use andreev_core::{AndreevTable, ExactTable, Point, Polygon, PolygonTable, Rational, Scalar, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// A coordinate written either as a JSON number or as a string holding an
/// exact value such as `"3/16"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Number(f64),
    Text(String),
}

impl Coord {
    pub fn to_rational(&self) -> Option<Rational> {
        match self {
            Coord::Number(v) => rational_from_f64(*v),
            Coord::Text(s) => parse_rational(s).or_else(|| s.trim().parse::<f64>().ok().and_then(rational_from_f64)),
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        let v = match self {
            Coord::Number(v) => *v,
            Coord::Text(s) => match parse_rational(s) {
                Some(r) => r.to_f64(),
                None => s.trim().parse::<f64>().ok()?,
            },
        };
        v.is_finite().then_some(v)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Number(v) => write!(f, "{v}"),
            Coord::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Mode {
    #[serde(rename = "float64")]
    #[value(name = "float64")]
    Float64,
    #[serde(rename = "rational")]
    #[value(name = "rational")]
    Rational,
}

/// Table file contents, fields in key order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub andreev_sides: Vec<usize>,
    pub format_version: u32,
    pub mode: Mode,
    pub vertices: Vec<[Coord; 2]>,
}

/// A validated table ready for simulation.
pub enum LoadedTable {
    Float {
        polygon: PolygonTable,
        andreev: Option<AndreevTable<f64>>,
    },
    Exact {
        polygon: ExactTable,
        andreev: Option<AndreevTable<Rational>>,
    },
}

impl LoadedTable {
    pub fn polygon_f64(&self) -> PolygonTable {
        match self {
            LoadedTable::Float { polygon, .. } => polygon.clone(),
            LoadedTable::Exact { polygon, .. } => polygon.to_f64(),
        }
    }

    pub fn andreev_f64(&self) -> Option<AndreevTable<f64>> {
        match self {
            LoadedTable::Float { andreev, .. } => andreev.clone(),
            LoadedTable::Exact { andreev, .. } => andreev.as_ref().map(AndreevTable::to_f64),
        }
    }

    pub fn andreev_sides(&self) -> Vec<usize> {
        self.andreev_f64()
            .map(|t| t.andreev_sides().to_vec())
            .unwrap_or_default()
    }
}

impl TableFile {
    pub fn from_polygon(polygon: &ExactTable, andreev_sides: &[usize], mode: Mode) -> Self {
        let vertices = polygon
            .vertices()
            .iter()
            .map(|v| [coord_of(&v.x, mode), coord_of(&v.y, mode)])
            .collect();
        let mut sides = andreev_sides.to_vec();
        sides.sort_unstable();
        sides.dedup();
        TableFile {
            andreev_sides: sides,
            format_version: FORMAT_VERSION,
            mode,
            vertices,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table files always serialise");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: TableFile =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed table file: {e}")))?;
        if file.format_version != FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "unsupported table format_version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn build(&self) -> Result<LoadedTable, CliError> {
        match self.mode {
            Mode::Float64 => {
                let vertices = self
                    .vertices
                    .iter()
                    .enumerate()
                    .map(|(i, [x, y])| match (x.to_f64(), y.to_f64()) {
                        (Some(x), Some(y)) => Ok(Point::new(x, y)),
                        _ => Err(CliError::Config(format!("vertex {i} is not a finite number"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let (polygon, andreev) = self.assemble(vertices)?;
                Ok(LoadedTable::Float { polygon, andreev })
            }
            Mode::Rational => {
                let vertices = self
                    .vertices
                    .iter()
                    .enumerate()
                    .map(|(i, [x, y])| match (x.to_rational(), y.to_rational()) {
                        (Some(x), Some(y)) => Ok(Vec2::new(x, y)),
                        _ => Err(CliError::Config(format!("vertex {i} is not an exact number"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let (polygon, andreev) = self.assemble(vertices)?;
                Ok(LoadedTable::Exact { polygon, andreev })
            }
        }
    }

    fn assemble<S: Scalar>(&self, vertices: Vec<Vec2<S>>) -> Result<(Polygon<S>, Option<AndreevTable<S>>), CliError> {
        let polygon = Polygon::new(vertices.clone()).map_err(|e| CliError::Config(format!("invalid table: {e}")))?;
        if polygon.vertices() != vertices.as_slice() {
            return Err(CliError::Config(
                "vertices must be listed counterclockwise without repeated or collinear neighbours".into(),
            ));
        }
        let andreev = if self.andreev_sides.is_empty() {
            None
        } else {
            Some(
                AndreevTable::with_default_axis(polygon.clone(), &self.andreev_sides)
                    .map_err(|e| CliError::Config(format!("invalid Andreev sides: {e}")))?,
            )
        };
        Ok((polygon, andreev))
    }
}

fn coord_of(v: &Rational, mode: Mode) -> Coord {
    match mode {
        Mode::Float64 => Coord::Number(v.to_f64()),
        Mode::Rational => Coord::Text(format_rational(v)),
    }
}
