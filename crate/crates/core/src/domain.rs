use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Support of the uniform design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: f64,
    pub upper: f64,
}

impl Domain {
    pub const UNIT: Domain = Domain { lower: 0.0, upper: 1.0 };
    pub const ZERO_TWO_PI: Domain = Domain { lower: 0.0, upper: 2.0 * PI };
    pub const SYMMETRIC_PI: Domain = Domain { lower: -PI, upper: PI };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(LabError::Parameter(format!(
                "domain needs lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Domain { lower, upper })
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(LabError::OutsideDomain { x, lower: self.lower, upper: self.upper })
        }
    }

    /// Relative position of `x` in `[0, 1]`.
    #[inline]
    pub fn relative(&self, x: f64) -> f64 {
        (x - self.lower) / self.width()
    }

    #[inline]
    pub fn from_relative(&self, u: f64) -> f64 {
        self.lower + u * self.width()
    }

    /// True for the two periodic supports `[0, 2pi]` and `[-pi, pi]`.
    pub fn is_trigonometric(&self) -> bool {
        (self.width() - 2.0 * PI).abs() < 1e-12
            && (self.lower.abs() < 1e-12 || (self.lower + PI).abs() < 1e-12)
    }

    /// Angle used by trigonometric functions: `x` itself on a periodic
    /// support, otherwise the support rescaled onto `[0, 2pi]`.
    #[inline]
    pub fn angle(&self, x: f64) -> f64 {
        if self.is_trigonometric() {
            x
        } else {
            2.0 * PI * self.relative(x)
        }
    }

    /// Name of one of the supported instances.
    pub fn label(&self) -> String {
        if *self == Domain::UNIT {
            "[0,1]".into()
        } else if *self == Domain::ZERO_TWO_PI {
            "[0,2pi]".into()
        } else if *self == Domain::SYMMETRIC_PI {
            "[-pi,pi]".into()
        } else {
            format!("[{},{}]", self.lower, self.upper)
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        match label.trim() {
            "[0,1]" | "unit" => Ok(Domain::UNIT),
            "[0,2pi]" | "0-2pi" => Ok(Domain::ZERO_TWO_PI),
            "[-pi,pi]" | "sym-pi" => Ok(Domain::SYMMETRIC_PI),
            other => Err(LabError::Parameter(format!(
                "unknown domain {other:?}; expected [0,1], [0,2pi] or [-pi,pi]"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_interval() {
        assert!(Domain::new(1.0, 1.0).is_err());
        assert!(Domain::new(2.0, 1.0).is_err());
    }

    #[test]
    fn labels_round_trip() {
        for d in [Domain::UNIT, Domain::ZERO_TWO_PI, Domain::SYMMETRIC_PI] {
            assert_eq!(Domain::parse(&d.label()).unwrap(), d);
        }
    }

    #[test]
    fn angle_is_identity_on_periodic_support() {
        assert_eq!(Domain::SYMMETRIC_PI.angle(-1.0), -1.0);
        assert!((Domain::UNIT.angle(0.25) - PI / 2.0).abs() < 1e-15);
    }
}
