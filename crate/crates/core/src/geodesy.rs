//! WGS84 geodetic/ECEF conversions and the candidate lattice.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// WGS84 semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// WGS84 semi-minor axis (m).
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Default ceiling on the number of lattice points a grid may hold.
pub const DEFAULT_MAX_GRID_POINTS: u64 = 5_000_000;

const LAT_TOLERANCE_RAD: f64 = 1e-12;
const MAX_ITERATIONS: usize = 50;

/// Latitude/longitude in degrees, altitude in meters above the ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticCoord {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

impl GeodeticCoord {
    /// Validated constructor. Longitude is wrapped into [-180, 180).
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Result<Self> {
        if !lat_deg.is_finite() || !(-90.0..=90.0).contains(&lat_deg) {
            return Err(invalid(format!("latitude {lat_deg} outside [-90, 90]")));
        }
        if !lon_deg.is_finite() {
            return Err(invalid(format!("longitude {lon_deg} is not finite")));
        }
        if !alt_m.is_finite() {
            return Err(invalid(format!("altitude {alt_m} is not finite")));
        }
        Ok(Self {
            lat_deg,
            lon_deg: wrap_lon_deg(lon_deg),
            alt_m,
        })
    }
}

/// Wraps a longitude into [-180, 180).
pub fn wrap_lon_deg(lon: f64) -> f64 {
    let w = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// A vector in the Earth-centered Earth-fixed frame. Positions in meters,
/// velocities in meters per second.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EcefVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefVector {
    pub const ZERO: Self = Self {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for EcefVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for EcefVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for EcefVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for EcefVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

fn prime_vertical_radius(sin_lat: f64) -> f64 {
    WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt()
}

/// Forward WGS84 transform.
pub fn lla_to_ecef(g: &GeodeticCoord) -> EcefVector {
    let (sin_lat, cos_lat) = g.lat_deg.to_radians().sin_cos();
    let (sin_lon, cos_lon) = g.lon_deg.to_radians().sin_cos();
    let n = prime_vertical_radius(sin_lat);
    EcefVector::new(
        (n + g.alt_m) * cos_lat * cos_lon,
        (n + g.alt_m) * cos_lat * sin_lon,
        (n * (1.0 - WGS84_E2) + g.alt_m) * sin_lat,
    )
}

/// Inverse WGS84 transform by fixed-point iteration on latitude.
pub fn ecef_to_lla(p: &EcefVector) -> Result<GeodeticCoord> {
    if !p.is_finite() {
        return Err(invalid("non-finite ECEF vector"));
    }
    if p.norm() == 0.0 {
        return Err(Error::Degenerate(
            "geodetic coordinates undefined at the Earth center".into(),
        ));
    }
    let rho = p.x.hypot(p.y);
    let lon = if rho == 0.0 { 0.0 } else { p.y.atan2(p.x) };
    if rho == 0.0 {
        let lat = if p.z > 0.0 { 90.0 } else { -90.0 };
        return GeodeticCoord::new(lat, 0.0, p.z.abs() - WGS84_B);
    }

    let mut lat = p.z.atan2(rho * (1.0 - WGS84_E2));
    for _ in 0..MAX_ITERATIONS {
        let (sin_lat, cos_lat) = lat.sin_cos();
        let n = prime_vertical_radius(sin_lat);
        // the cos form loses precision near the poles
        let alt = if cos_lat.abs() > std::f64::consts::FRAC_1_SQRT_2 {
            rho / cos_lat - n
        } else {
            p.z / sin_lat - n * (1.0 - WGS84_E2)
        };
        let next = p.z.atan2(rho * (1.0 - WGS84_E2 * n / (n + alt)));
        let delta = (next - lat).abs();
        lat = next;
        if delta < LAT_TOLERANCE_RAD {
            break;
        }
    }
    let (sin_lat, cos_lat) = lat.sin_cos();
    let n = prime_vertical_radius(sin_lat);
    let alt = if cos_lat.abs() > std::f64::consts::FRAC_1_SQRT_2 {
        rho / cos_lat - n
    } else {
        p.z / sin_lat - n * (1.0 - WGS84_E2)
    };
    GeodeticCoord::new(lat.to_degrees().clamp(-90.0, 90.0), lon.to_degrees(), alt)
}

/// Axis-aligned latitude/longitude rectangle, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub lat_min_deg: f64,
    pub lat_max_deg: f64,
    pub lon_min_deg: f64,
    pub lon_max_deg: f64,
}

impl GridBounds {
    /// Square window of `half_cells` lattice steps either side of a center.
    pub fn centered(center_lat: f64, center_lon: f64, half_cells: usize, spacing_deg: f64) -> Self {
        let half = half_cells as f64 * spacing_deg;
        Self {
            lat_min_deg: center_lat - half,
            lat_max_deg: center_lat + half,
            lon_min_deg: center_lon - half,
            lon_max_deg: center_lon + half,
        }
    }
}

/// One lattice axis: `start + i * step` for `i in 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }
}

/// Geodetic lattice with eagerly converted ECEF points, lat-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    pub lat: Axis,
    pub lon: Axis,
    pub altitude_m: f64,
    points: Vec<EcefVector>,
}

fn axis_count(min: f64, max: f64, spacing: f64) -> usize {
    let span = max - min;
    // absorbs representation error in spans like 10.0 / 0.01
    ((span / spacing) * (1.0 + 1e-12) + 1e-9).floor() as usize + 1
}

/// Builds the lattice using [`DEFAULT_MAX_GRID_POINTS`].
pub fn build_candidate_grid(
    bounds: &GridBounds,
    spacing_deg: f64,
    altitude_m: f64,
) -> Result<CandidateGrid> {
    build_candidate_grid_capped(bounds, spacing_deg, altitude_m, DEFAULT_MAX_GRID_POINTS)
}

pub fn build_candidate_grid_capped(
    bounds: &GridBounds,
    spacing_deg: f64,
    altitude_m: f64,
    max_points: u64,
) -> Result<CandidateGrid> {
    if !(spacing_deg.is_finite() && spacing_deg > 0.0) {
        return Err(invalid(format!("grid spacing {spacing_deg} must be > 0")));
    }
    let GridBounds {
        lat_min_deg,
        lat_max_deg,
        lon_min_deg,
        lon_max_deg,
    } = *bounds;
    let finite = [lat_min_deg, lat_max_deg, lon_min_deg, lon_max_deg]
        .iter()
        .all(|v| v.is_finite());
    if !finite || lat_max_deg < lat_min_deg || lon_max_deg < lon_min_deg {
        return Err(invalid(format!("empty or non-finite grid bounds {bounds:?}")));
    }
    if lat_min_deg < -90.0 || lat_max_deg > 90.0 {
        return Err(invalid("grid latitude bounds outside [-90, 90]"));
    }
    if lon_max_deg - lon_min_deg >= 360.0 {
        return Err(invalid("grid longitude span must be below 360 degrees"));
    }
    if !altitude_m.is_finite() {
        return Err(invalid("grid altitude is not finite"));
    }

    let n_lat = axis_count(lat_min_deg, lat_max_deg, spacing_deg);
    let n_lon = axis_count(lon_min_deg, lon_max_deg, spacing_deg);
    let requested = n_lat as u64 * n_lon as u64;
    if requested > max_points {
        return Err(Error::GridTooLarge {
            requested,
            cap: max_points,
        });
    }

    let lat = Axis {
        start: lat_min_deg,
        step: spacing_deg,
        count: n_lat,
    };
    let lon = Axis {
        start: lon_min_deg,
        step: spacing_deg,
        count: n_lon,
    };
    CandidateGrid::from_axes(lat, lon, altitude_m)
}

impl CandidateGrid {
    /// Rebuilds a lattice from explicit axes (e.g. read back from a file).
    pub fn from_axes(lat: Axis, lon: Axis, altitude_m: f64) -> Result<Self> {
        let ok_axis = |a: &Axis| a.count > 0 && a.start.is_finite() && a.step.is_finite() && a.step > 0.0;
        if !ok_axis(&lat) || !ok_axis(&lon) || !altitude_m.is_finite() {
            return Err(invalid("grid axes need count > 0 and a positive finite step"));
        }
        let mut points = Vec::with_capacity(lat.count * lon.count);
        for i in 0..lat.count {
            let la = lat.value(i);
            if !(-90.0 - 1e-9..=90.0 + 1e-9).contains(&la) {
                return Err(invalid(format!("grid latitude {la} outside [-90, 90]")));
            }
            for j in 0..lon.count {
                let g = GeodeticCoord::new(la.clamp(-90.0, 90.0), lon.value(j), altitude_m)?;
                points.push(lla_to_ecef(&g));
            }
        }
        Ok(Self {
            lat,
            lon,
            altitude_m,
            points,
        })
    }

    /// True when both grids describe the same lattice.
    pub fn same_lattice(&self, other: &CandidateGrid) -> bool {
        self.lat == other.lat && self.lon == other.lon && self.altitude_m == other.altitude_m
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[EcefVector] {
        &self.points
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.lat.count, self.lon.count)
    }

    pub fn index(&self, lat_idx: usize, lon_idx: usize) -> usize {
        lat_idx * self.lon.count + lon_idx
    }

    /// Inverse of [`CandidateGrid::index`].
    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index / self.lon.count, index % self.lon.count)
    }

    pub fn geodetic(&self, index: usize) -> GeodeticCoord {
        let (i, j) = self.cell(index);
        GeodeticCoord {
            lat_deg: self.lat.value(i).clamp(-90.0, 90.0),
            lon_deg: wrap_lon_deg(self.lon.value(j)),
            alt_m: self.altitude_m,
        }
    }

    /// Lattice cell closest to a geodetic coordinate (clamped to the grid).
    pub fn nearest_cell(&self, g: &GeodeticCoord) -> (usize, usize) {
        let snap = |axis: &Axis, v: f64| {
            let f = ((v - axis.start) / axis.step).round();
            f.clamp(0.0, (axis.count - 1) as f64) as usize
        };
        let dlon = wrap_lon_deg(g.lon_deg - self.lon.start);
        let lon = self.lon.start + if dlon < 0.0 { dlon + 360.0 } else { dlon };
        (snap(&self.lat, g.lat_deg), snap(&self.lon, lon))
    }
}
