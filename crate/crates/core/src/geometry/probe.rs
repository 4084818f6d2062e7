use super::DomainSpec;
use crate::error::{Error, Result};

/// Ratio between admissible probe radii and the domain diameter.
pub const PROBE_RADIUS_FRACTION: f64 = 1.0 / 8.0;

/// Ball `B(center, radius)` used for local estimates; `factor` is the enlargement
/// (2 or 3) of the outer ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallProbe {
    pub center: [f64; 2],
    pub radius: f64,
    pub factor: u32,
}

impl BallProbe {
    pub fn new(domain: &DomainSpec, center: [f64; 2], radius: f64, factor: u32) -> Result<BallProbe> {
        if !domain.contains(center) {
            return Err(Error::InvalidProbe(format!("center {center:?} outside the domain")));
        }
        let max_r = PROBE_RADIUS_FRACTION * domain.diameter();
        if !(radius > 0.0 && radius < max_r) {
            return Err(Error::InvalidProbe(format!("radius {radius} not in (0, {max_r})")));
        }
        if factor != 2 && factor != 3 {
            return Err(Error::InvalidProbe(format!("doubling factor {factor} not in {{2, 3}}")));
        }
        Ok(BallProbe { center, radius, factor })
    }

    pub fn contains(&self, x: [f64; 2], radius: f64) -> bool {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        dx * dx + dy * dy <= radius * radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.radius * self.factor as f64
    }
}
