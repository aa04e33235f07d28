use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// A unit direction in the plane, optionally tied to an irreducible lattice vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    unit: [f64; 2],
    rational: Option<[i64; 2]>,
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Direction {
    pub fn from_angle(theta: f64) -> Self {
        let theta = theta.rem_euclid(2.0 * PI);
        Direction {
            unit: [theta.cos(), theta.sin()],
            rational: None,
        }
    }

    /// Builds the direction ξ/|ξ|. `xi` must be nonzero and irreducible.
    pub fn from_lattice(xi: [i64; 2]) -> Result<Self> {
        if xi == [0, 0] {
            return invalid("lattice direction must be nonzero");
        }
        if gcd(xi[0], xi[1]) != 1 {
            return invalid(format!("lattice direction ({}, {}) is not irreducible", xi[0], xi[1]));
        }
        let n = ((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt();
        Ok(Direction {
            unit: [xi[0] as f64 / n, xi[1] as f64 / n],
            rational: Some(xi),
        })
    }

    pub fn e1() -> Self {
        Direction::from_lattice([1, 0]).unwrap()
    }

    pub fn unit(&self) -> [f64; 2] {
        self.unit
    }

    pub fn rational(&self) -> Option<[i64; 2]> {
        self.rational
    }

    /// ξ⊥ = (ξ₂, −ξ₁), normalized.
    pub fn perp(&self) -> [f64; 2] {
        [self.unit[1], -self.unit[0]]
    }

    pub fn angle(&self) -> f64 {
        self.unit[1].atan2(self.unit[0]).rem_euclid(2.0 * PI)
    }

    /// |ξ| for rational directions.
    pub fn lattice_norm(&self) -> Option<f64> {
        self.rational
            .map(|xi| ((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt())
    }

    pub fn dot(&self, x: [f64; 2]) -> f64 {
        self.unit[0] * x[0] + self.unit[1] * x[1]
    }
}

/// All irreducible ξ with |ξ|_∞ ≤ xi_max, sorted by angle in [0, 2π).
pub fn irreducible_directions(xi_max: i64) -> Vec<Direction> {
    let mut out = Vec::new();
    for a in -xi_max..=xi_max {
        for b in -xi_max..=xi_max {
            if (a, b) != (0, 0) && gcd(a, b) == 1 {
                out.push(Direction::from_lattice([a, b]).unwrap());
            }
        }
    }
    out.sort_by(|p, q| p.angle().partial_cmp(&q.angle()).unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_direction_is_unit() {
        let d = Direction::from_lattice([2, -1]).unwrap();
        let u = d.unit();
        assert!((u[0].hypot(u[1]) - 1.0).abs() < 1e-14);
        assert!((u[0] - 2.0 / 5f64.sqrt()).abs() < 1e-14);
        assert_eq!(d.perp(), [u[1], -u[0]]);
    }

    #[test]
    fn rejects_reducible() {
        assert!(Direction::from_lattice([2, 2]).is_err());
        assert!(Direction::from_lattice([0, 0]).is_err());
    }

    #[test]
    fn enumeration_counts() {
        // 8 directions with |ξ|∞ ≤ 1, 16 with |ξ|∞ ≤ 2.
        assert_eq!(irreducible_directions(1).len(), 8);
        let ds = irreducible_directions(2);
        assert_eq!(ds.len(), 16);
        assert!(ds.windows(2).all(|w| w[0].angle() < w[1].angle()));
        assert_eq!(ds[0].rational(), Some([1, 0]));
    }
}
