//! Spherical sampling grids.
//!
//! Angles are degrees at the API surface: azimuth φ ∈ [0, 360) with 0 front,
//! 90 left, 180 back, 270 right; elevation θ ∈ [−90, 90] with +90 above.
//! Lebedev and Fliege node sets are embedded data tables (see
//! `data/SHA256SUMS`); directions keep their file order, nothing is sorted.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    azimuth_deg: f64,
    elevation_deg: f64,
}

impl Direction {
    /// Normalizes azimuth into [0, 360); rejects elevations outside [−90, 90].
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
            return Err(Error::InvalidDirection {
                azimuth_deg,
                elevation_deg,
                reason: "non-finite angle",
            });
        }
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::InvalidDirection {
                azimuth_deg,
                elevation_deg,
                reason: "elevation outside [-90, 90]",
            });
        }
        let mut az = azimuth_deg.rem_euclid(360.0) + 0.0;
        if az >= 360.0 {
            az = 0.0;
        }
        Ok(Self {
            azimuth_deg: az,
            elevation_deg: elevation_deg + 0.0,
        })
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    pub fn azimuth_rad(&self) -> f64 {
        self.azimuth_deg.to_radians()
    }

    /// Polar angle from the +z axis, in radians.
    pub fn colatitude_rad(&self) -> f64 {
        (90.0 - self.elevation_deg).to_radians()
    }

    /// Cartesian unit vector: x front, y left, z up.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (sa, ca) = self.azimuth_rad().sin_cos();
        let (se, ce) = self.elevation_deg.to_radians().sin_cos();
        [ce * ca, ce * sa, se]
    }

    /// Left/right mirror image (φ → 360 − φ).
    pub fn mirrored(&self) -> Self {
        Self::new(360.0 - self.azimuth_deg, self.elevation_deg)
            .expect("mirroring keeps a valid elevation")
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}°, {}°)", self.azimuth_deg, self.elevation_deg)
    }
}

fn angle_between(a: [f64; 3], b: [f64; 3]) -> f64 {
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    sin.atan2(cos)
}

/// Great-circle distance in degrees, in [0, 180].
pub fn great_circle_distance(a: &Direction, b: &Direction) -> f64 {
    angle_between(a.unit_vector(), b.unit_vector()).to_degrees()
}

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;
const DUPLICATE_RAD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGrid {
    name: String,
    directions: Vec<Direction>,
    weights: Option<Vec<f64>>,
    nominal_order: Option<usize>,
}

impl SphericalGrid {
    /// Validates and builds a grid. Weights are renormalized to sum to one
    /// when they are off by more than 1e-12.
    pub fn new(
        name: impl Into<String>,
        directions: Vec<Direction>,
        weights: Option<Vec<f64>>,
        nominal_order: Option<usize>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidGrid {
            grid: name.clone(),
            reason,
        };
        if directions.is_empty() {
            return Err(invalid("no directions".into()));
        }
        let weights = match weights {
            None => None,
            Some(mut w) => {
                if w.len() != directions.len() {
                    return Err(invalid(format!(
                        "{} weights for {} directions",
                        w.len(),
                        directions.len()
                    )));
                }
                // Some standard Lebedev rules carry small negative weights.
                if let Some(i) = w.iter().position(|v| !v.is_finite()) {
                    return Err(invalid(format!("weight {i} is not finite ({})", w[i])));
                }
                let sum: f64 = w.iter().sum();
                if !(sum > 0.0) {
                    return Err(invalid(format!("weights sum to {sum}, expected a positive total")));
                }
                if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                    w.iter_mut().for_each(|v| *v /= sum);
                }
                Some(w)
            }
        };
        let units: Vec<[f64; 3]> = directions.iter().map(Direction::unit_vector).collect();
        for i in 0..units.len() {
            for j in (i + 1)..units.len() {
                if angle_between(units[i], units[j]) < DUPLICATE_RAD {
                    return Err(invalid(format!(
                        "directions {i} {} and {j} {} coincide",
                        directions[i], directions[j]
                    )));
                }
            }
        }
        Ok(Self {
            name,
            directions,
            weights,
            nominal_order,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn nominal_order(&self) -> Option<usize> {
        self.nominal_order
    }

    /// Same grid under a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Directions equal (within 1e-12 degrees) and in the same order.
    pub fn same_directions(&self, other: &SphericalGrid) -> bool {
        self.len() == other.len()
            && self.directions.iter().zip(&other.directions).all(|(a, b)| {
                (a.azimuth_deg - b.azimuth_deg).abs() <= 1e-12
                    && (a.elevation_deg - b.elevation_deg).abs() <= 1e-12
            })
    }

    pub(crate) fn ensure_same(&self, other: &SphericalGrid, what: &str) -> Result<()> {
        if self.same_directions(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: grid '{}' ({} directions) vs '{}' ({} directions)",
                self.name,
                self.len(),
                other.name,
                other.len()
            )))
        }
    }

    /// Index of the direction closest to `target`.
    pub fn nearest(&self, target: &Direction) -> usize {
        let t = target.unit_vector();
        let mut best = (0, f64::INFINITY);
        for (i, d) in self.directions.iter().enumerate() {
            let a = angle_between(d.unit_vector(), t);
            if a < best.1 {
                best = (i, a);
            }
        }
        best.0
    }

    /// Mirror image of the grid (φ → 360 − φ), same order and weights.
    pub fn mirrored(&self) -> SphericalGrid {
        SphericalGrid {
            name: format!("{}-mirrored", self.name),
            directions: self.directions.iter().map(Direction::mirrored).collect(),
            weights: self.weights.clone(),
            nominal_order: self.nominal_order,
        }
    }

    pub fn to_file(&self) -> GridFile {
        GridFile {
            name: self.name.clone(),
            nominal_order: self.nominal_order,
            directions: self
                .directions
                .iter()
                .map(|d| [d.azimuth_deg, d.elevation_deg])
                .collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn from_file(file: GridFile) -> Result<Self> {
        let directions = file
            .directions
            .iter()
            .map(|&[az, el]| Direction::new(az, el))
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.name, directions, file.weights, file.nominal_order)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("grid serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// On-disk grid format.
///
/// ```json
/// { "name": "lebedev:1", "nominal_order": 1,
///   "directions": [[0.0, 0.0], [90.0, 0.0], ...],
///   "weights": [0.1666, ...] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_order: Option<usize>,
    pub directions: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// Embedded tables

pub(crate) const LEBEDEV_JSON: &str = include_str!("../data/lebedev.json");
pub(crate) const FLIEGE_JSON: &str = include_str!("../data/fliege.json");

#[derive(Deserialize)]
struct LebedevTable {
    rules: Vec<LebedevRule>,
}

#[derive(Deserialize)]
struct LebedevRule {
    degree: usize,
    directions: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct FliegeTable {
    sets: Vec<FliegeSet>,
}

#[derive(Deserialize)]
struct FliegeSet {
    num_points: usize,
    directions: Vec<[f64; 2]>,
    weights: Vec<f64>,
    refit_exact_order: Option<usize>,
}

fn lebedev_table() -> &'static LebedevTable {
    static TABLE: OnceLock<LebedevTable> = OnceLock::new();
    TABLE.get_or_init(|| serde_json::from_str(LEBEDEV_JSON).expect("embedded Lebedev table"))
}

fn fliege_table() -> &'static FliegeTable {
    static TABLE: OnceLock<FliegeTable> = OnceLock::new();
    TABLE.get_or_init(|| serde_json::from_str(FLIEGE_JSON).expect("embedded Fliege table"))
}

/// Highest SH order with a Lebedev rule in the table.
pub const MAX_LEBEDEV_ORDER: usize = 29;

/// SH orders accepted by [`lebedev_grid`].
pub fn supported_lebedev_orders() -> Vec<usize> {
    (1..=MAX_LEBEDEV_ORDER).collect()
}

/// Point counts accepted by [`fliege_grid`].
pub fn supported_fliege_sizes() -> Vec<usize> {
    fliege_table().sets.iter().map(|s| s.num_points).collect()
}

/// Degree of SH orders whose products a Fliege set integrates exactly.
///
/// Published sets integrate single harmonics up to `sqrt(n) - 1`; refitted
/// sets (positive weights) up to the stored order.
pub fn fliege_exact_order(num_points: usize) -> Option<usize> {
    fliege_table()
        .sets
        .iter()
        .find(|s| s.num_points == num_points)
        .map(|s| {
            s.refit_exact_order
                .unwrap_or_else(|| (num_points as f64).sqrt() as usize - 1)
        })
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn directions_from(pairs: &[[f64; 2]]) -> Vec<Direction> {
    pairs
        .iter()
        .map(|&[az, el]| Direction::new(az, el).expect("embedded direction"))
        .collect()
}

/// Lebedev quadrature grid that integrates products of SH up to `order`
/// exactly (rule degree ≥ 2·order + 1). Orders 1–15 give 6–350 points.
pub fn lebedev_grid(order: usize) -> Result<SphericalGrid> {
    let unsupported = || Error::UnsupportedLebedevOrder {
        order,
        supported: format!("1-{MAX_LEBEDEV_ORDER}"),
    };
    if order == 0 || order > MAX_LEBEDEV_ORDER {
        return Err(unsupported());
    }
    let rule = lebedev_table()
        .rules
        .iter()
        .find(|r| r.degree > 2 * order)
        .ok_or_else(unsupported)?;
    SphericalGrid::new(
        format!("lebedev:{order}"),
        directions_from(&rule.directions),
        Some(rule.weights.clone()),
        Some(order),
    )
}

/// Fliege–Maier grid with `num_points` nodes; nominal order ⌊√n⌋ − 1.
pub fn fliege_grid(num_points: usize) -> Result<SphericalGrid> {
    let set = fliege_table()
        .sets
        .iter()
        .find(|s| s.num_points == num_points)
        .ok_or_else(|| Error::UnsupportedFliegeSize {
            num_points,
            supported: join(&supported_fliege_sizes()),
        })?;
    SphericalGrid::new(
        format!("fliege:{num_points}"),
        directions_from(&set.directions),
        Some(set.weights.clone()),
        Some((num_points as f64).sqrt().floor() as usize - 1),
    )
}

/// Horizontal circle (k·step, 0°), k = 0..360/step; no weights.
pub fn horizontal_grid(step_deg: f64) -> Result<SphericalGrid> {
    let err = || Error::InvalidHorizontalStep { step_deg };
    if !(step_deg > 0.0) || !step_deg.is_finite() || step_deg > 360.0 {
        return Err(err());
    }
    let count = (360.0 / step_deg).round();
    if (count * step_deg - 360.0).abs() > 1e-9 {
        return Err(err());
    }
    let directions = (0..count as usize)
        .map(|k| Direction::new(k as f64 * step_deg, 0.0))
        .collect::<Result<Vec<_>>>()?;
    SphericalGrid::new(format!("horizontal:{step_deg}"), directions, None, None)
}

/// Textual grid selector: `lebedev:N`, `fliege:P`, `horizontal:STEP`, or a
/// path to a JSON grid file.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Lebedev(usize),
    Fliege(usize),
    Horizontal(f64),
    File(std::path::PathBuf),
}

impl GridSpec {
    pub fn resolve(&self) -> Result<SphericalGrid> {
        match self {
            GridSpec::Lebedev(n) => lebedev_grid(*n),
            GridSpec::Fliege(n) => fliege_grid(*n),
            GridSpec::Horizontal(step) => horizontal_grid(*step),
            GridSpec::File(path) => SphericalGrid::load(path),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::InvalidParameter(format!("grid spec '{s}': {what}"));
        match s.split_once(':') {
            Some(("lebedev", n)) => n
                .parse()
                .map(GridSpec::Lebedev)
                .map_err(|_| bad("order must be an integer")),
            Some(("fliege", n)) => n
                .parse()
                .map(GridSpec::Fliege)
                .map_err(|_| bad("size must be an integer")),
            Some(("horizontal", step)) => step
                .parse()
                .map(GridSpec::Horizontal)
                .map_err(|_| bad("step must be a number")),
            _ => Ok(GridSpec::File(s.into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebedev_sizes_match_standard_table() {
        let expected = [6, 14, 26, 38, 50, 74, 86, 110, 146, 170, 194, 230, 266, 302, 350];
        for (i, &n) in expected.iter().enumerate() {
            let g = lebedev_grid(i + 1).unwrap();
            assert_eq!(g.len(), n, "order {}", i + 1);
            assert_eq!(g.nominal_order(), Some(i + 1));
            let sum: f64 = g.weights().unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lebedev_order_one_is_octahedron() {
        let g = lebedev_grid(1).unwrap();
        let i = g
            .directions()
            .iter()
            .position(|d| (d.azimuth_deg() - 90.0).abs() < 1e-12 && d.elevation_deg().abs() < 1e-12)
            .expect("(90, 0) present");
        assert!((g.weights().unwrap()[i] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn lebedev_rejects_unsupported() {
        for order in [0, 30, 100] {
            let err = lebedev_grid(order).unwrap_err();
            assert!(err.to_string().contains("supported orders: 1-29"), "{err}");
        }
    }

    #[test]
    fn fliege_orders() {
        let g = fliege_grid(900).unwrap();
        assert_eq!(g.nominal_order(), Some(29));
        assert_eq!(g.len(), 900);
        let sum: f64 = g.weights().unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(fliege_grid(4).unwrap().nominal_order(), Some(1));
        assert!(fliege_grid(901).is_err());
        assert_eq!(supported_fliege_sizes().len(), 29);
    }

    #[test]
    fn horizontal_grids() {
        let g = horizontal_grid(1.0).unwrap();
        assert_eq!(g.len(), 360);
        assert!(g.directions().iter().all(|d| d.elevation_deg() == 0.0));
        let quad: Vec<f64> = horizontal_grid(90.0)
            .unwrap()
            .directions()
            .iter()
            .map(Direction::azimuth_deg)
            .collect();
        assert_eq!(quad, vec![0.0, 90.0, 180.0, 270.0]);
        assert!(matches!(
            horizontal_grid(7.0),
            Err(Error::InvalidHorizontalStep { .. })
        ));
        assert!(horizontal_grid(0.0).is_err());
    }

    #[test]
    fn distances() {
        let d = |a, e| Direction::new(a, e).unwrap();
        assert_eq!(great_circle_distance(&d(0.0, 0.0), &d(0.0, 0.0)), 0.0);
        assert!((great_circle_distance(&d(0.0, 0.0), &d(180.0, 0.0)) - 180.0).abs() < 1e-12);
        assert!((great_circle_distance(&d(0.0, 0.0), &d(90.0, 0.0)) - 90.0).abs() < 1e-12);
        assert!((great_circle_distance(&d(0.0, 90.0), &d(123.0, -90.0)) - 180.0).abs() < 1e-12);
    }

    #[test]
    fn direction_normalization() {
        let d = Direction::new(-90.0, 10.0).unwrap();
        assert_eq!(d.azimuth_deg(), 270.0);
        assert_eq!(Direction::new(720.0, 0.0).unwrap().azimuth_deg(), 0.0);
        assert_eq!(Direction::new(-0.0, 0.0).unwrap().azimuth_deg().to_bits(), 0.0f64.to_bits());
        assert_eq!(Direction::new(-1e-17, 0.0).unwrap().azimuth_deg(), 0.0);
        assert!(Direction::new(0.0, 90.5).is_err());
        assert!(Direction::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn grid_validation() {
        let d = |a, e| Direction::new(a, e).unwrap();
        let dup = SphericalGrid::new("dup", vec![d(0.0, 0.0), d(360.0, 0.0)], None, None);
        assert!(dup.unwrap_err().to_string().contains("coincide"));
        let zero = SphericalGrid::new("zero", vec![d(0.0, 0.0), d(90.0, 0.0)], Some(vec![1.0, -1.0]), None);
        assert!(zero.is_err());
        let nan = SphericalGrid::new("nan", vec![d(0.0, 0.0), d(90.0, 0.0)], Some(vec![1.0, f64::NAN]), None);
        assert!(nan.is_err());
        let len = SphericalGrid::new("len", vec![d(0.0, 0.0)], Some(vec![0.5, 0.5]), None);
        assert!(len.is_err());
        let g = SphericalGrid::new("norm", vec![d(0.0, 0.0), d(90.0, 0.0)], Some(vec![2.0, 6.0]), None)
            .unwrap();
        assert_eq!(g.weights().unwrap(), &[0.25, 0.75]);
    }

    #[test]
    fn grid_spec_parsing() {
        assert_eq!("lebedev:3".parse::<GridSpec>().unwrap(), GridSpec::Lebedev(3));
        assert_eq!("fliege:900".parse::<GridSpec>().unwrap(), GridSpec::Fliege(900));
        assert_eq!("horizontal:1".parse::<GridSpec>().unwrap(), GridSpec::Horizontal(1.0));
        assert!("lebedev:x".parse::<GridSpec>().is_err());
        assert!(matches!("my/grid.json".parse::<GridSpec>().unwrap(), GridSpec::File(_)));
        assert_eq!(GridSpec::Lebedev(3).resolve().unwrap().name(), "lebedev:3");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        for g in [lebedev_grid(3).unwrap(), fliege_grid(900).unwrap(), horizontal_grid(5.0).unwrap()] {
            let first = g.to_json();
            let again = SphericalGrid::from_json(&first).unwrap();
            assert_eq!(again, g);
            assert_eq!(again.to_json(), first);
        }
    }
}
