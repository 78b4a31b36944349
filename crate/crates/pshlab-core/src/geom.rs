//! Points of C^n (n = 1 or 2), closed balls, and the inflated-gap measure
//! used by every separation check in the crate.

use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_COMPLEX_DIM: usize = 2;

/// A point of C^n stored as 2n real coordinates.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    xs: [f64; 2 * MAX_COMPLEX_DIM],
    dim: usize,
}

impl Point {
    /// Point of C.
    pub fn c1(x: f64, y: f64) -> Point {
        Point { xs: [x, y, 0.0, 0.0], dim: 1 }
    }

    /// Point of C^2.
    pub fn c2(z: (f64, f64), w: (f64, f64)) -> Point {
        Point { xs: [z.0, z.1, w.0, w.1], dim: 2 }
    }

    /// From 2n real coordinates, n in {1, 2}.
    pub fn from_coords(coords: &[f64]) -> Result<Point> {
        match coords.len() {
            2 => Ok(Point::c1(coords[0], coords[1])),
            4 => Ok(Point::c2((coords[0], coords[1]), (coords[2], coords[3]))),
            n => Err(Error::InvalidParameter(format!(
                "point needs 2 or 4 real coordinates, got {n}"
            ))),
        }
    }

    pub fn origin(dim: usize) -> Point {
        assert!(dim == 1 || dim == 2);
        Point { xs: [0.0; 4], dim }
    }

    pub fn complex_dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.xs[..2 * self.dim]
    }

    /// Real part of complex coordinate `var`.
    pub fn re(&self, var: usize) -> f64 {
        self.xs[2 * var]
    }

    /// Imaginary part of complex coordinate `var`.
    pub fn im(&self, var: usize) -> f64 {
        self.xs[2 * var + 1]
    }

    pub fn set(&mut self, axis: usize, value: f64) {
        assert!(axis < 2 * self.dim);
        self.xs[axis] = value;
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords().iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..2 * self.dim {
            out.xs[i] += other.xs[i];
        }
        out
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..2 * self.dim {
            out.xs[i] -= other.xs[i];
        }
        out
    }

    pub fn scale(&self, c: f64) -> Point {
        let mut out = *self;
        for i in 0..2 * self.dim {
            out.xs[i] *= c;
        }
        out
    }

    /// Euclidean distance without the dimension check; callers guarantee it.
    pub(crate) fn dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(2 * self.dim))?;
        for x in self.coords() {
            seq.serialize_element(x)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Point, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Point;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a flat array of 2 or 4 real coordinates")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Point, A::Error> {
                let mut coords = Vec::with_capacity(4);
                while let Some(x) = seq.next_element::<f64>()? {
                    coords.push(x);
                }
                Point::from_coords(&coords).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_seq(V)
    }
}

/// Euclidean distance between points of the same complex dimension.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    if p.complex_dim() != q.complex_dim() {
        return Err(Error::DimensionMismatch {
            expected: p.complex_dim(),
            got: q.complex_dim(),
        });
    }
    Ok(p.dist(q))
}

/// A closed ball with positive radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Ball> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.center.dist(p) <= self.radius
    }
}

/// dist(centers) - r1 - inflation*r2. Positive iff B1 and the inflated B2
/// have disjoint closures; zero at exact tangency.
pub fn ball_gap(b1: &Ball, b2: &Ball, inflation: f64) -> Result<f64> {
    if !(inflation >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "inflation must be >= 1, got {inflation}"
        )));
    }
    let d = distance(&b1.center, &b2.center)?;
    Ok(d - b1.radius - inflation * b2.radius)
}

/// A finite list of balls of a common dimension.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BallFamily(pub Vec<Ball>);

impl BallFamily {
    pub fn new(balls: Vec<Ball>) -> Result<BallFamily> {
        if let Some(first) = balls.first() {
            let dim = first.center.complex_dim();
            for b in &balls {
                if b.center.complex_dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: b.center.complex_dim(),
                    });
                }
            }
        }
        Ok(BallFamily(balls))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Ball> {
        self.0.iter()
    }

    pub fn max_radius(&self) -> f64 {
        self.0.iter().map(|b| b.radius).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_matches_hand_value() {
        // two balls of radius 1/4 with centers 3/4 apart, inflation 2:
        // 3/4 - 1/4 - 2*(1/4) = 0, exact tangency
        let b1 = Ball::new(Point::c1(0.0, 0.0), 0.25).unwrap();
        let b2 = Ball::new(Point::c1(0.75, 0.0), 0.25).unwrap();
        assert_eq!(ball_gap(&b1, &b2, 2.0).unwrap(), 0.0);
        assert!(ball_gap(&b1, &b2, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn gap_rejects_mixed_dimensions() {
        let b1 = Ball::new(Point::c1(0.0, 0.0), 1.0).unwrap();
        let b2 = Ball::new(Point::c2((0.0, 0.0), (1.0, 0.0)), 1.0).unwrap();
        assert!(matches!(
            ball_gap(&b1, &b2, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ball_rejects_bad_radius() {
        assert!(Ball::new(Point::c1(0.0, 0.0), 0.0).is_err());
        assert!(Ball::new(Point::c1(0.0, 0.0), -1.0).is_err());
        assert!(Ball::new(Point::c1(0.0, 0.0), f64::NAN).is_err());
    }

    #[test]
    fn point_serde_is_flat() {
        let p = Point::c2((1.0, 2.0), (3.0, 4.0));
        let js = serde_json::to_string(&p).unwrap();
        assert_eq!(js, "[1.0,2.0,3.0,4.0]");
        let back: Point = serde_json::from_str(&js).unwrap();
        assert_eq!(back, p);
    }
}
