//! Closed-form function terms on C^n.
//!
//! Every constructed approximant in this crate is a finite composition of the
//! atoms below under sum, max, scaling, and the ball-glue combinator, so it
//! can be evaluated at arbitrary audit points and carries an explicit branch
//! structure (needed for seam detection on grids).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "args", rename_all = "snake_case")]
pub enum Evaluator {
    Const(f64),
    /// Re z_var
    Re { var: usize },
    /// |p - center|^2 over all coordinates
    AbsSq { center: Point },
    /// |p - center|^beta over all coordinates, beta > 0
    DistPow { center: Point, beta: f64 },
    /// log |p - center| (natural log; -inf at the center)
    LogDist { center: Point },
    /// |z_var - c|^beta for a single complex coordinate
    CoordDistPow { var: usize, center: (f64, f64), beta: f64 },
    Scale { factor: f64, inner: Box<Evaluator> },
    Sum(Vec<Evaluator>),
    Max(Vec<Evaluator>),
    /// max(inner, floor) on the closed ball |p - center| <= radius,
    /// plain inner outside. Ties go to the floor.
    BallGlue {
        center: Point,
        radius: f64,
        floor: f64,
        inner: Box<Evaluator>,
    },
}

impl Evaluator {
    /// Builtin by name. `center` is ignored by "abs2"/"re" variants that
    /// don't take one only when it is the origin default supplied by callers.
    pub fn builtin(name: &str, center: Point, beta: f64) -> Result<Evaluator> {
        match name {
            "abs2" => Ok(Evaluator::AbsSq { center }),
            "re" => Ok(Evaluator::Re { var: 0 }),
            "logabs" => Ok(Evaluator::LogDist { center }),
            "holder" => {
                if !(beta > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "holder exponent must be positive, got {beta}"
                    )));
                }
                Ok(Evaluator::DistPow { center, beta })
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown builtin function '{other}'"
            ))),
        }
    }

    pub fn scaled(self, factor: f64) -> Evaluator {
        Evaluator::Scale { factor, inner: Box::new(self) }
    }

    pub fn plus(self, other: Evaluator) -> Evaluator {
        match self {
            Evaluator::Sum(mut terms) => {
                terms.push(other);
                Evaluator::Sum(terms)
            }
            me => Evaluator::Sum(vec![me, other]),
        }
    }

    pub fn offset(self, c: f64) -> Evaluator {
        if c == 0.0 {
            self
        } else {
            self.plus(Evaluator::Const(c))
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Evaluator::Const(c) => *c,
            Evaluator::Re { var } => p.re(*var),
            Evaluator::AbsSq { center } => p.sub(center).norm_sq(),
            Evaluator::DistPow { center, beta } => p.dist(center).powf(*beta),
            Evaluator::LogDist { center } => p.dist(center).ln(),
            Evaluator::CoordDistPow { var, center, beta } => {
                let dx = p.re(*var) - center.0;
                let dy = p.im(*var) - center.1;
                let d = (dx * dx + dy * dy).sqrt();
                if *beta == 1.0 {
                    d
                } else {
                    d.powf(*beta)
                }
            }
            // A zero factor annihilates even a -inf log term; the glue
            // constructions rely on that for constant inputs.
            Evaluator::Scale { factor, inner } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * inner.eval(p)
                }
            }
            Evaluator::Sum(terms) => terms.iter().map(|t| t.eval(p)).sum(),
            Evaluator::Max(terms) => terms
                .iter()
                .map(|t| t.eval(p))
                .fold(f64::NEG_INFINITY, f64::max),
            Evaluator::BallGlue { center, radius, floor, inner } => {
                let v = inner.eval(p);
                if p.dist(center) <= *radius && v <= *floor {
                    *floor
                } else {
                    v
                }
            }
        }
    }

    /// Evaluation that also folds the active branch choices of every Max and
    /// BallGlue node into a signature. Two nearby points with different
    /// signatures straddle a seam.
    pub fn eval_with_signature(&self, p: &Point) -> (f64, u64) {
        let mut sig = 0xcbf29ce484222325u64; // FNV offset basis
        let v = self.eval_sig(p, &mut sig);
        (v, sig)
    }

    fn eval_sig(&self, p: &Point, sig: &mut u64) -> f64 {
        fn fold(sig: &mut u64, choice: u64) {
            *sig ^= choice.wrapping_add(0x9e3779b97f4a7c15);
            *sig = sig.wrapping_mul(0x100000001b3);
        }
        match self {
            Evaluator::Scale { factor, inner } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * inner.eval_sig(p, sig)
                }
            }
            Evaluator::Sum(terms) => terms.iter().map(|t| t.eval_sig(p, sig)).sum(),
            Evaluator::Max(terms) => {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0u64;
                for (i, t) in terms.iter().enumerate() {
                    let v = t.eval_sig(p, sig);
                    if v > best {
                        best = v;
                        arg = i as u64;
                    }
                }
                fold(sig, arg);
                best
            }
            Evaluator::BallGlue { center, radius, floor, inner } => {
                let v = inner.eval_sig(p, sig);
                let inside = p.dist(center) <= *radius;
                if inside && v <= *floor {
                    fold(sig, 1);
                    *floor
                } else {
                    fold(sig, 2);
                    v
                }
            }
            other => other.eval(p),
        }
    }

    /// Evaluation rejecting NaN (a -inf log pole is legitimate).
    pub fn eval_checked(&self, p: &Point) -> Result<f64> {
        let v = self.eval(p);
        if v.is_nan() {
            return Err(Error::EvaluatorFailure { at: p.coords().to_vec() });
        }
        Ok(v)
    }

    /// Centers of every log-distance term reachable with a nonzero weight;
    /// only near these points can any branch blow up toward -inf. The list
    /// is conservative: floors and max branches may mask a pole.
    pub fn collect_log_poles(&self) -> Vec<Point> {
        fn walk(e: &Evaluator, live: bool, out: &mut Vec<Point>) {
            match e {
                Evaluator::LogDist { center } => {
                    if live {
                        out.push(*center);
                    }
                }
                Evaluator::Scale { factor, inner } => walk(inner, live && *factor != 0.0, out),
                Evaluator::Sum(terms) | Evaluator::Max(terms) => {
                    for t in terms {
                        walk(t, live, out);
                    }
                }
                Evaluator::BallGlue { inner, .. } => walk(inner, live, out),
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(self, true, &mut out);
        out
    }
}

impl fmt::Display for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evaluator::Const(c) => write!(f, "{c}"),
            Evaluator::Re { var } => write!(f, "Re z{}", var + 1),
            Evaluator::AbsSq { center } => write!(f, "|p - {center:?}|^2"),
            Evaluator::DistPow { center, beta } => write!(f, "|p - {center:?}|^{beta}"),
            Evaluator::LogDist { center } => write!(f, "log|p - {center:?}|"),
            Evaluator::CoordDistPow { var, center, beta } => {
                write!(f, "|z{} - ({}, {})|^{}", var + 1, center.0, center.1, beta)
            }
            Evaluator::Scale { factor, inner } => write!(f, "{factor}*({inner})"),
            Evaluator::Sum(terms) => {
                write!(f, "(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Evaluator::Max(terms) => {
                write!(f, "max[")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, "]")
            }
            Evaluator::BallGlue { center, radius, floor, inner } => write!(
                f,
                "glue[|p - {center:?}| <= {radius}: max({inner}, {floor})]"
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_evaluate() {
        let o = Point::c1(0.0, 0.0);
        let p = Point::c1(0.3, 0.4);
        assert_eq!(Evaluator::builtin("abs2", o, 0.0).unwrap().eval(&p), 0.25);
        assert_eq!(Evaluator::builtin("re", o, 0.0).unwrap().eval(&p), 0.3);
        let lg = Evaluator::builtin("logabs", o, 0.0).unwrap();
        assert!((lg.eval(&p) - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(lg.eval(&o), f64::NEG_INFINITY);
        let h = Evaluator::builtin("holder", o, 0.5).unwrap();
        assert!((h.eval(&p) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_scale_annihilates_log_pole() {
        let o = Point::c1(0.0, 0.0);
        let e = Evaluator::LogDist { center: o }.scaled(0.0);
        assert_eq!(e.eval(&o), 0.0);
    }

    #[test]
    fn ball_glue_clamps_inside_only() {
        let o = Point::c1(0.0, 0.0);
        let g = Evaluator::BallGlue {
            center: o,
            radius: 1.0,
            floor: -0.5,
            inner: Box::new(Evaluator::LogDist { center: o }),
        };
        // log|0.1| = -2.30 < -0.5 inside the ball: clamped
        assert_eq!(g.eval(&Point::c1(0.1, 0.0)), -0.5);
        // log|0.8| = -0.22 > -0.5: inner branch
        assert!((g.eval(&Point::c1(0.8, 0.0)) - 0.8f64.ln()).abs() < 1e-15);
        // outside the ball the floor does not apply
        let far = Point::c1(2.0, 0.0);
        assert!((g.eval(&far) - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn signature_separates_branches() {
        let o = Point::c1(0.0, 0.0);
        let g = Evaluator::BallGlue {
            center: o,
            radius: 1.0,
            floor: -0.5,
            inner: Box::new(Evaluator::LogDist { center: o }),
        };
        let (_, s_in) = g.eval_with_signature(&Point::c1(0.1, 0.0));
        let (_, s_out) = g.eval_with_signature(&Point::c1(0.8, 0.0));
        assert_ne!(s_in, s_out);
    }

    #[test]
    fn checked_eval_rejects_nan() {
        // 1 * (-inf) + inf = nan via sum of opposite infinities
        let o = Point::c1(0.0, 0.0);
        let e = Evaluator::Sum(vec![
            Evaluator::LogDist { center: o },
            Evaluator::LogDist { center: o }.scaled(-1.0),
        ]);
        assert!(e.eval_checked(&o).is_err());
        assert!(e.eval_checked(&Point::c1(0.5, 0.0)).is_ok());
    }
}
