//! Exact dyadic rationals and closed intervals with dyadic endpoints.
//!
//! Values are stored as `num / 2^exp` with `num` odd (or zero). All arithmetic
//! is exact; overflow of the i128 numerator panics, which at the scales used
//! here (exponents below ~100) cannot be reached by the library itself.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    num: i128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    /// `num / 2^exp`, normalized.
    pub fn new(num: i128, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::new(n as i128, 0)
    }

    /// `2^-k`.
    pub fn half_pow(k: u32) -> Self {
        Dyadic { num: 1, exp: k }
    }

    /// Exact conversion. Every finite f64 is a dyadic rational.
    pub fn try_from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::ZERO);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i128 } else { 1i128 };
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (mant, e2) = if exp_bits == 0 {
            (frac, -1074i64) // subnormal
        } else {
            (frac | (1i128 << 52), exp_bits - 1075)
        };
        if e2 >= 0 {
            // mant * 2^e2 must fit in i128
            if e2 > 70 {
                return None;
            }
            Some(Dyadic::new(sign * (mant << e2), 0))
        } else {
            Some(Dyadic::new(sign * mant, (-e2) as u32))
        }
    }

    /// Nearest f64.
    pub fn to_f64(self) -> f64 {
        (self.num as f64) * (2f64).powi(-(self.exp as i32))
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_positive(self) -> bool {
        self.num > 0
    }

    pub fn abs(self) -> Self {
        Dyadic { num: self.num.abs(), exp: self.exp }
    }

    pub fn halve(self) -> Self {
        Dyadic::new(self.num, self.exp.checked_add(1).expect("dyadic exponent overflow"))
    }

    fn normalize(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().min(self.exp);
        self.num >>= tz;
        self.exp -= tz;
    }

    /// Both numerators brought to a common exponent.
    fn aligned(self, other: Self) -> (i128, i128, u32) {
        let exp = self.exp.max(other.exp);
        let a = self
            .num
            .checked_shl(exp - self.exp)
            .expect("dyadic overflow while aligning");
        let b = other
            .num
            .checked_shl(exp - other.exp)
            .expect("dyadic overflow while aligning");
        (a, b, exp)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic overflow in add"), exp)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num, exp: self.exp }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::new(
            self.num.checked_mul(rhs.num).expect("dyadic overflow in mul"),
            self.exp.checked_add(rhs.exp).expect("dyadic exponent overflow"),
        )
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(*other);
        a.cmp(&b)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Closed interval with exact dyadic endpoints, `lo < hi`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo < hi, "interval endpoints must satisfy lo < hi");
        DyadicInterval { lo, hi }
    }

    /// [-1/2, 1/2], the default base interval.
    pub fn symmetric_unit() -> Self {
        let h = Dyadic::new(1, 1);
        DyadicInterval::new(-h, h)
    }

    pub fn lo(&self) -> Dyadic {
        self.lo
    }

    pub fn hi(&self) -> Dyadic {
        self.hi
    }

    pub fn length(&self) -> Dyadic {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> Dyadic {
        (self.lo + self.hi).halve()
    }

    pub fn contains(&self, x: Dyadic) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo.to_f64() <= x && x <= self.hi.to_f64()
    }

    /// The two closed end pieces of ratio `s`: each child keeps a share
    /// `s/2` of the parent length, anchored at the parent's endpoints.
    pub fn split(&self, s: Dyadic) -> (DyadicInterval, DyadicInterval) {
        assert!(
            s.is_positive() && s < Dyadic::ONE,
            "split ratio must lie in (0,1)"
        );
        let child = self.length() * s.halve();
        (
            DyadicInterval::new(self.lo, self.lo + child),
            DyadicInterval::new(self.hi - child, self.hi),
        )
    }
}
