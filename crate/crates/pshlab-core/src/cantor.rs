//! Cantor-type sets on an interval, built by exact dyadic splitting, with
//! covering balls, an exact separation scan, and the capacity-type series.

use serde::{Deserialize, Serialize};

use crate::dyadic::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};
use crate::geom::{Ball, BallFamily, Point};

/// How much of a parent interval the two children keep at each depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemovalRule {
    /// Kept share at depth n is 2^-n; interval lengths shrink like
    /// 2^(-n(n+3)/2) on a unit base.
    Pow2,
    /// Explicit kept share per depth, each in (0, 1).
    Explicit(Vec<Dyadic>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub base: DyadicInterval,
    pub rule: RemovalRule,
}

impl CantorSpec {
    /// The standard fast-thinning set on [-1/2, 1/2].
    pub fn pow2() -> CantorSpec {
        CantorSpec { base: DyadicInterval::symmetric_unit(), rule: RemovalRule::Pow2 }
    }

    pub fn explicit(base: DyadicInterval, shares: Vec<Dyadic>) -> Result<CantorSpec> {
        for (k, s) in shares.iter().enumerate() {
            if !(s.is_positive() && *s < Dyadic::ONE) {
                return Err(Error::InvalidParameter(format!(
                    "kept share at depth {} must lie in (0,1), got {}",
                    k + 1,
                    s
                )));
            }
        }
        Ok(CantorSpec { base, rule: RemovalRule::Explicit(shares) })
    }

    /// Kept share at 1-based depth `level`.
    pub fn share(&self, level: usize) -> Result<Dyadic> {
        if level == 0 {
            return Err(Error::InvalidParameter("depth starts at 1".into()));
        }
        match &self.rule {
            RemovalRule::Pow2 => {
                let k = u32::try_from(level)
                    .map_err(|_| Error::RatioUnavailable { level })?;
                Ok(Dyadic::half_pow(k))
            }
            RemovalRule::Explicit(shares) => shares
                .get(level - 1)
                .copied()
                .ok_or(Error::RatioUnavailable { level }),
        }
    }
}

/// All 2^level intervals remaining after `level` rounds of splitting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CantorLevel {
    pub level: usize,
    pub intervals: Vec<DyadicInterval>,
}

impl CantorLevel {
    /// Common length of the intervals at this level.
    pub fn length(&self) -> Dyadic {
        self.intervals[0].length()
    }

    pub fn midpoints(&self) -> Vec<Dyadic> {
        self.intervals.iter().map(|iv| iv.midpoint()).collect()
    }
}

pub fn build_level(spec: &CantorSpec, level: usize) -> Result<CantorLevel> {
    let mut intervals = vec![spec.base];
    for depth in 1..=level {
        let s = spec.share(depth)?;
        if !(s.is_positive() && s < Dyadic::ONE) {
            return Err(Error::InvalidParameter(format!(
                "kept share at depth {depth} must lie in (0,1), got {s}"
            )));
        }
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for iv in &intervals {
            let (l, r) = iv.split(s);
            next.push(l);
            next.push(r);
        }
        intervals = next;
    }
    Ok(CantorLevel { level, intervals })
}

/// One ball per level-n interval, centered at its midpoint with radius equal
/// to the interval length (so each ball covers its interval with margin).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorCover {
    pub level: usize,
    pub centers: Vec<Dyadic>,
    pub radius: Dyadic,
    pub parent_length: Dyadic,
}

pub fn cantor_cover(spec: &CantorSpec, level: usize) -> Result<CantorCover> {
    if level == 0 {
        return Err(Error::InvalidParameter("cover needs level >= 1".into()));
    }
    let parent = build_level(spec, level - 1)?;
    let this = build_level(spec, level)?;
    Ok(CantorCover {
        level,
        centers: this.midpoints(),
        radius: this.length(),
        parent_length: parent.length(),
    })
}

impl CantorCover {
    /// Balls in the complex plane, centers on the real axis. Conversion to
    /// f64 rounds; use the dyadic fields for exact comparisons.
    pub fn to_ball_family(&self) -> Result<BallFamily> {
        let balls = self
            .centers
            .iter()
            .map(|c| Ball::new(Point::c1(c.to_f64(), 0.0), self.radius.to_f64()))
            .collect::<Result<Vec<_>>>()?;
        BallFamily::new(balls)
    }

    /// Exact sum of the covering radii.
    pub fn radius_sum(&self) -> Dyadic {
        let mut total = Dyadic::ZERO;
        for _ in 0..self.centers.len() {
            total = total + self.radius;
        }
        total
    }
}

/// Result of the exact pairwise separation scan at inflation factor c.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationReport {
    /// min over ordered pairs (j, k) of dist(c_j, c_k) - r_j - c * r_k.
    pub min_gap: Dyadic,
    /// Sibling-pair value parent_length - (2 + c) * radius.
    pub predicted: Dyadic,
    /// Whether the scan minimum equals the sibling-pair prediction.
    pub matches: bool,
    pub separated: bool,
}

/// Scan every ordered center pair exactly and compare against the
/// closed-form sibling gap. `c` must be a finite inflation factor >= 1.
pub fn separation_margin(cover: &CantorCover, c: f64) -> Result<SeparationReport> {
    if !(c >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "inflation factor must be >= 1, got {c}"
        )));
    }
    let c_dy = Dyadic::try_from_f64(c)
        .ok_or_else(|| Error::InvalidParameter(format!("inflation factor {c} is not finite")))?;
    let inflated = c_dy * cover.radius;
    let mut min_gap: Option<Dyadic> = None;
    for (j, cj) in cover.centers.iter().enumerate() {
        for (k, ck) in cover.centers.iter().enumerate() {
            if j == k {
                continue;
            }
            let gap = (*cj - *ck).abs() - cover.radius - inflated;
            min_gap = Some(match min_gap {
                Some(m) if m <= gap => m,
                _ => gap,
            });
        }
    }
    let min_gap = min_gap
        .ok_or_else(|| Error::InvalidParameter("cover has fewer than two balls".into()))?;
    let predicted = cover.parent_length - (Dyadic::from_int(2) + c_dy) * cover.radius;
    Ok(SeparationReport {
        min_gap,
        predicted,
        matches: min_gap == predicted,
        separated: min_gap.is_positive(),
    })
}

/// Terms of the capacity-type series: the n-th term is
/// 2^-n * ln(parent_length / (2 * child_length)) = 2^-n * ln(1 / share_n).
/// The set has positive logarithmic capacity iff the full series converges.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacitySeries {
    pub terms: Vec<f64>,
    pub partial_sum: f64,
    /// Exact bound on the omitted tail; only available when the rule
    /// determines all future shares.
    pub tail_bound: Option<f64>,
}

pub fn capacity_series(spec: &CantorSpec, terms: usize) -> Result<CapacitySeries> {
    let mut values = Vec::with_capacity(terms);
    for n in 1..=terms {
        let s = spec.share(n)?;
        values.push(-(s.to_f64().ln()) * 0.5f64.powi(n as i32));
    }
    let partial_sum = values.iter().sum();
    let tail_bound = match spec.rule {
        // sum over n > T of n ln2 / 2^n = ln2 (T + 2) / 2^T
        RemovalRule::Pow2 => {
            Some(std::f64::consts::LN_2 * (terms as f64 + 2.0) * 0.5f64.powi(terms as i32))
        }
        RemovalRule::Explicit(_) => None,
    };
    Ok(CapacitySeries { terms: values, partial_sum, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pow2_lengths_follow_closed_form() {
        let spec = CantorSpec::pow2();
        for (level, exp) in [(1usize, 2u32), (2, 5), (3, 9), (4, 14)] {
            let lv = build_level(&spec, level).unwrap();
            assert_eq!(lv.intervals.len(), 1 << level);
            assert_eq!(lv.length(), Dyadic::half_pow(exp));
        }
    }

    #[test]
    fn levels_keep_base_endpoints_and_symmetry() {
        let spec = CantorSpec::pow2();
        let lv = build_level(&spec, 4).unwrap();
        assert_eq!(lv.intervals.first().unwrap().lo(), spec.base.lo());
        assert_eq!(lv.intervals.last().unwrap().hi(), spec.base.hi());
        let mids = lv.midpoints();
        let n = mids.len();
        for i in 0..n {
            assert_eq!(mids[i], -mids[n - 1 - i]);
        }
    }

    #[test]
    fn cover_uses_child_length_as_radius() {
        let spec = CantorSpec::pow2();
        let cover = cantor_cover(&spec, 3).unwrap();
        assert_eq!(cover.radius, Dyadic::half_pow(9));
        assert_eq!(cover.parent_length, Dyadic::half_pow(5));
        assert_eq!(cover.centers.len(), 8);
        let family = cover.to_ball_family().unwrap();
        assert_eq!(family.0.len(), 8);
    }

    #[test]
    fn separation_is_tight_at_the_sibling_pair() {
        let spec = CantorSpec::pow2();
        let cover = cantor_cover(&spec, 3).unwrap();
        let at13 = separation_margin(&cover, 13.0).unwrap();
        assert!(at13.separated);
        assert!(at13.matches);
        assert_eq!(at13.min_gap, Dyadic::half_pow(9));
        let at14 = separation_margin(&cover, 14.0).unwrap();
        assert_eq!(at14.min_gap, Dyadic::ZERO);
        assert!(!at14.separated);
        assert!(at14.matches);
    }

    #[test]
    fn radius_sum_is_exact() {
        let spec = CantorSpec::pow2();
        assert_eq!(cantor_cover(&spec, 3).unwrap().radius_sum(), Dyadic::half_pow(6));
        assert_eq!(cantor_cover(&spec, 5).unwrap().radius_sum(), Dyadic::half_pow(15));
    }

    #[test]
    fn capacity_series_approaches_two_log_two() {
        let spec = CantorSpec::pow2();
        let series = capacity_series(&spec, 30).unwrap();
        let limit = 2.0 * std::f64::consts::LN_2;
        assert!((series.terms[0] - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        assert!(series.partial_sum < limit);
        let tail = series.tail_bound.unwrap();
        assert!(series.partial_sum + tail >= limit - 1e-12);
    }

    #[test]
    fn explicit_rule_runs_out_with_a_level_error() {
        let spec = CantorSpec::explicit(
            DyadicInterval::symmetric_unit(),
            vec![Dyadic::new(1, 1), Dyadic::new(1, 1)],
        )
        .unwrap();
        let lv = build_level(&spec, 2).unwrap();
        assert_eq!(lv.length(), Dyadic::half_pow(4));
        match build_level(&spec, 3) {
            Err(Error::RatioUnavailable { level: 3 }) => {}
            other => panic!("expected depth-3 ratio error, got {other:?}"),
        }
        assert!(capacity_series(&spec, 2).unwrap().tail_bound.is_none());
    }

    #[test]
    fn explicit_rule_rejects_degenerate_shares() {
        let base = DyadicInterval::symmetric_unit();
        assert!(CantorSpec::explicit(base, vec![Dyadic::ONE]).is_err());
        assert!(CantorSpec::explicit(base, vec![Dyadic::ZERO]).is_err());
        assert!(CantorSpec::explicit(base, vec![Dyadic::from_int(-1)]).is_err());
    }

    proptest! {
        #[test]
        fn explicit_levels_are_ordered_and_measure_exact(
            raw in proptest::collection::vec((1i64..15, 4u32..6), 1..5)
        ) {
            let shares: Vec<Dyadic> = raw
                .iter()
                .map(|&(num, exp)| Dyadic::new(num as i128, exp))
                .collect();
            let spec =
                CantorSpec::explicit(DyadicInterval::symmetric_unit(), shares.clone()).unwrap();
            let depth = shares.len();
            let lv = build_level(&spec, depth).unwrap();
            // strictly ordered, pairwise disjoint
            for w in lv.intervals.windows(2) {
                prop_assert!(w[0].hi() < w[1].lo());
            }
            // total measure is the base length times the product of shares
            let mut expected = spec.base.length();
            for s in &shares {
                expected = expected * *s;
            }
            let mut total = Dyadic::ZERO;
            for iv in &lv.intervals {
                total = total + iv.length();
            }
            prop_assert_eq!(total, expected);
        }
    }
}
