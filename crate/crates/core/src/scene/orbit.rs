//! Circular Keplerian receiver orbits (non-rotating Earth over a capture).

use serde::{Deserialize, Serialize};

use super::EcefStateVector;
use crate::constants::EARTH_MU;
use crate::error::{invalid, Result};
use crate::geodesy::{EcefVector, WGS84_A};

pub const MIN_ALTITUDE_M: f64 = 200e3;
pub const MAX_ALTITUDE_M: f64 = 2000e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircularOrbit {
    pub alt_m: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    /// Argument of latitude at t = 0.
    pub phase_deg: f64,
}

impl CircularOrbit {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_ALTITUDE_M..=MAX_ALTITUDE_M).contains(&self.alt_m) {
            return Err(invalid(format!(
                "orbit altitude {} m outside [{MIN_ALTITUDE_M}, {MAX_ALTITUDE_M}]",
                self.alt_m
            )));
        }
        let finite = [self.inclination_deg, self.raan_deg, self.phase_deg]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("orbit angles must be finite"));
        }
        Ok(())
    }

    pub fn radius_m(&self) -> f64 {
        WGS84_A + self.alt_m
    }

    /// Mean motion (rad/s).
    pub fn mean_motion(&self) -> f64 {
        (EARTH_MU / self.radius_m().powi(3)).sqrt()
    }

    pub fn speed_mps(&self) -> f64 {
        (EARTH_MU / self.radius_m()).sqrt()
    }

    pub fn state_at(&self, t_s: f64) -> EcefStateVector {
        let r = self.radius_m();
        let n = self.mean_motion();
        let u = self.phase_deg.to_radians() + n * t_s;
        let (su, cu) = u.sin_cos();
        let (si, ci) = self.inclination_deg.to_radians().sin_cos();
        let (so, co) = self.raan_deg.to_radians().sin_cos();
        // R_z(raan) * R_x(inc) applied to in-plane (cos u, sin u, 0)
        let rotate = |a: f64, b: f64| {
            let (x, y, z) = (a, b * ci, b * si);
            EcefVector::new(x * co - y * so, x * so + y * co, z)
        };
        EcefStateVector::new(rotate(r * cu, r * su), rotate(-r * n * su, r * n * cu))
    }

    /// Orbit whose (spherical) sub-satellite point crosses `lat_deg, lon_deg`
    /// at time `t_pass_s`, on the ascending or descending half of the orbit.
    pub fn passing_over(
        lat_deg: f64,
        lon_deg: f64,
        alt_m: f64,
        inclination_deg: f64,
        t_pass_s: f64,
        ascending: bool,
    ) -> Result<Self> {
        let inc = inclination_deg.to_radians();
        let ratio = lat_deg.to_radians().sin() / inc.sin();
        if !ratio.is_finite() || ratio.abs() > 1.0 {
            return Err(invalid(format!(
                "latitude {lat_deg} unreachable with inclination {inclination_deg}"
            )));
        }
        let mut u = ratio.asin();
        if !ascending {
            u = std::f64::consts::PI - u;
        }
        let node = lon_deg.to_radians() - (inc.cos() * u.sin()).atan2(u.cos());
        let mut orbit = Self {
            alt_m,
            inclination_deg,
            raan_deg: node.to_degrees(),
            phase_deg: 0.0,
        };
        orbit.validate()?;
        orbit.phase_deg = (u - orbit.mean_motion() * t_pass_s).to_degrees();
        Ok(orbit)
    }
}

pub fn propagate_circular_orbit(
    alt_m: f64,
    inclination_deg: f64,
    raan_deg: f64,
    phase_deg: f64,
    epochs_s: &[f64],
) -> Result<Vec<EcefStateVector>> {
    let orbit = CircularOrbit {
        alt_m,
        inclination_deg,
        raan_deg,
        phase_deg,
    };
    orbit.validate()?;
    Ok(epochs_s.iter().map(|&t| orbit.state_at(t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_invariants() {
        let epochs: Vec<f64> = (0..200).map(|i| i as f64 * 30.0).collect();
        let states = propagate_circular_orbit(550e3, 53.0, 40.0, 10.0, &epochs).unwrap();
        let r0 = states[0].position.norm();
        for s in &states {
            assert!((s.position.norm() - r0).abs() / r0 < 1e-6);
            let cos = s.position.dot(&s.velocity) / (s.position.norm() * s.velocity.norm());
            assert!(cos.abs() < 1e-12);
        }
    }

    #[test]
    fn leo_speed() {
        let expect = (3.986004418e14f64 / (6_378_137.0 + 550e3)).sqrt();
        let s = propagate_circular_orbit(550e3, 0.0, 0.0, 0.0, &[0.0]).unwrap()[0];
        assert!((s.velocity.norm() - expect).abs() < 1e-6);
        assert!((expect - 7585.0).abs() < 1.0, "{expect}");
    }

    #[test]
    fn velocity_is_position_derivative() {
        let o = CircularOrbit {
            alt_m: 700e3,
            inclination_deg: 97.0,
            raan_deg: -20.0,
            phase_deg: 33.0,
        };
        let h = 1e-3;
        let d = (o.state_at(10.0 + h).position - o.state_at(10.0 - h).position) * (0.5 / h);
        assert!((d - o.state_at(10.0).velocity).norm() < 1e-3);
    }

    #[test]
    fn passes_over_target() {
        let o = CircularOrbit::passing_over(32.0, 44.0, 550e3, 53.0, 5.0, true).unwrap();
        let p = o.state_at(5.0).position;
        let lat = (p.z / p.norm()).asin().to_degrees();
        let lon = p.y.atan2(p.x).to_degrees();
        assert!((lat - 32.0).abs() < 1e-9 && (lon - 44.0).abs() < 1e-9);
        assert!(o.state_at(6.0).position.z > p.z);
        let d = CircularOrbit::passing_over(32.0, 44.0, 550e3, 53.0, 5.0, false).unwrap();
        assert!(d.state_at(6.0).position.z < p.z);
        assert!(CircularOrbit::passing_over(60.0, 0.0, 550e3, 53.0, 0.0, true).is_err());
    }

    #[test]
    fn altitude_range_enforced() {
        assert!(propagate_circular_orbit(100e3, 0.0, 0.0, 0.0, &[0.0]).is_err());
        assert!(propagate_circular_orbit(3000e3, 0.0, 0.0, 0.0, &[0.0]).is_err());
    }
}
