//! Separated-cover verification plus the two worked examples on the real
//! line: building a cover for the reciprocal sequence {1/j} and refuting one
//! for the same sequence with its limit point 0 attached.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ball_gap, Ball, BallFamily, Point};
use crate::modulus::PhiFn;

/// Cover acceptance parameters: inflation factor, radius measure, budget.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsParams {
    pub c: f64,
    pub phi: PhiFn,
    pub epsilon: f64,
}

impl PsParams {
    pub fn new(c: f64, phi: PhiFn, epsilon: f64) -> Result<PsParams> {
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inflation factor must be finite and > 1, got {c}"
            )));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "measure budget must be finite and positive, got {epsilon}"
            )));
        }
        Ok(PsParams { c, phi, epsilon })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsViolation {
    Uncovered { point: Point },
    /// Ball j meets the inflated ball k; gap = dist - r_j - c * r_k <= 0.
    Overlap { j: usize, k: usize, gap: f64 },
    MeasureExcess { phi_sum: f64, epsilon: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsReport {
    pub covered: bool,
    pub separated: bool,
    pub phi_sum: f64,
    pub pass: bool,
    pub violations: Vec<PsViolation>,
}

/// Sum of the radius measure over the family.
pub fn phi_sum(family: &BallFamily, phi: &PhiFn) -> f64 {
    family.0.iter().map(|b| phi.eval(b.radius())).sum()
}

/// Check the three cover conditions: every point of `k_points` lies in some
/// ball, every ordered pair of distinct balls is separated at inflation c,
/// and the radius measure stays under the budget. Outcome failures are
/// reported, not raised; only malformed inputs error.
pub fn verify_ps(k_points: &[Point], family: &BallFamily, p: &PsParams) -> Result<PsReport> {
    if !(p.c > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "inflation factor must be > 1, got {}",
            p.c
        )));
    }
    let mut violations = Vec::new();
    let mut covered = true;
    for pt in k_points {
        if !family.0.iter().any(|b| b.contains(pt)) {
            covered = false;
            violations.push(PsViolation::Uncovered { point: *pt });
        }
    }
    let mut separated = true;
    for (j, bj) in family.0.iter().enumerate() {
        for (k, bk) in family.0.iter().enumerate() {
            if j == k {
                continue;
            }
            let gap = ball_gap(bj, bk, p.c)?;
            if gap <= 0.0 {
                separated = false;
                violations.push(PsViolation::Overlap { j, k, gap });
            }
        }
    }
    let sum = phi_sum(family, &p.phi);
    if sum >= p.epsilon {
        violations.push(PsViolation::MeasureExcess { phi_sum: sum, epsilon: p.epsilon });
    }
    let pass = covered && separated && sum < p.epsilon;
    Ok(PsReport { covered, separated, phi_sum: sum, pass, violations })
}

/// Greedy separated cover for an arbitrary finite point set on the real
/// axis: r_j = min(g_j / (2(1+c)), rho * 2^-j) with g_j the distance to the
/// nearest other point, and rho halved from the point span until the measure
/// fits the budget.
pub fn cover_points(xs: &[f64], p: &PsParams) -> Result<BallFamily> {
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two points to cover".into()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("points must be finite".into()));
    }
    let mut gaps = Vec::with_capacity(xs.len());
    for (j, &x) in xs.iter().enumerate() {
        let mut g = f64::INFINITY;
        for (k, &y) in xs.iter().enumerate() {
            if j != k {
                g = g.min((x - y).abs());
            }
        }
        if g == 0.0 {
            return Err(Error::InvalidParameter(format!("duplicate point at index {j}")));
        }
        gaps.push(g);
    }
    let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let sep_caps: Vec<f64> = gaps.iter().map(|g| g / (2.0 * (1.0 + p.c))).collect();
    let mut rho = span;
    for _ in 0..=200 {
        let radii: Vec<f64> = sep_caps
            .iter()
            .enumerate()
            .map(|(j, cap)| cap.min(rho * 0.5f64.powi(j as i32 + 1)))
            .collect();
        let total: f64 = radii.iter().map(|r| p.phi.eval(*r)).sum();
        if total < p.epsilon {
            let balls = xs
                .iter()
                .zip(&radii)
                .map(|(&x, &r)| Ball::new(Point::c1(x, 0.0), r))
                .collect::<Result<Vec<_>>>()?;
            return BallFamily::new(balls);
        }
        rho *= 0.5;
    }
    Err(Error::InvalidParameter(format!(
        "measure budget {} is infeasible for this radius measure",
        p.epsilon
    )))
}

/// Cover of {1/j : 1 <= j <= m} that passes verify_ps for the same params.
pub fn construct_cover_x(m: usize, p: &PsParams) -> Result<BallFamily> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("need m >= 2 points, got {m}")));
    }
    let xs: Vec<f64> = (1..=m).map(|j| 1.0 / j as f64).collect();
    cover_points(&xs, p)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefuteWitness {
    pub r0: f64,
    pub z0: f64,
    /// Index of the sequence point 1/j inside the open annulus.
    pub j: u64,
    pub point: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefuteReport {
    pub witnesses: Vec<RefuteWitness>,
    /// (r0, z0) pairs where no sequence point fell in the annulus.
    pub misses: Vec<(f64, f64)>,
    pub refuted: bool,
}

const REFUTE_CENTER_GRID: usize = 9;

/// For every candidate ball B(z0, r0) containing 0, exhibit a point 1/j in
/// the open annulus (z0 + r0, z0 + c*r0). Any ball covering that point meets
/// the inflated candidate, so no separated cover can also cover 0.
pub fn refute_y(p: &PsParams, r0_grid: &[f64]) -> Result<RefuteReport> {
    if r0_grid.is_empty() {
        return Err(Error::InvalidParameter("need at least one candidate radius".into()));
    }
    for &r0 in r0_grid {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "candidate radius must be finite and positive, got {r0}"
            )));
        }
        let measure = p.phi.eval(r0);
        if measure >= p.epsilon {
            return Err(Error::InvalidParameter(format!(
                "candidate radius {r0} already violates the measure budget: phi(r0) = {measure} >= {}",
                p.epsilon
            )));
        }
    }
    let mut witnesses = Vec::new();
    let mut misses = Vec::new();
    for &r0 in r0_grid {
        for i in 0..REFUTE_CENTER_GRID {
            let z0 = -r0 + 2.0 * r0 * i as f64 / (REFUTE_CENTER_GRID - 1) as f64;
            let lo = z0 + r0;
            let hi = z0 + p.c * r0;
            // hi >= (c - 1) r0 > 0 since |z0| <= r0
            let mut found = None;
            let start = (1.0 / hi).floor().max(0.0) as u64;
            for j in start.max(1)..start + 5 {
                let x = 1.0 / j as f64;
                if lo < x && x < hi {
                    found = Some((j, x));
                    break;
                }
            }
            match found {
                Some((j, point)) => witnesses.push(RefuteWitness { r0, z0, j, point }),
                None => misses.push((r0, z0)),
            }
        }
    }
    let refuted = misses.is_empty() && !witnesses.is_empty();
    Ok(RefuteReport { witnesses, misses, refuted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{cantor_cover, CantorSpec};
    use crate::modulus::Modulus;
    use proptest::prelude::*;

    fn linear_phi() -> PhiFn {
        PhiFn::Power { delta: 1.0 }
    }

    #[test]
    fn cantor_cover_passes_at_thirteen() {
        let cover = cantor_cover(&CantorSpec::pow2(), 3).unwrap();
        let family = cover.to_ball_family().unwrap();
        let level = crate::cantor::build_level(&CantorSpec::pow2(), 3).unwrap();
        let mut endpoints = Vec::new();
        for iv in &level.intervals {
            endpoints.push(Point::c1(iv.lo().to_f64(), 0.0));
            endpoints.push(Point::c1(iv.hi().to_f64(), 0.0));
        }
        let p = PsParams::new(13.0, linear_phi(), 0.02).unwrap();
        let report = verify_ps(&endpoints, &family, &p).unwrap();
        assert!(report.covered && report.separated && report.pass);
        assert_eq!(report.phi_sum, 0.5f64.powi(6));
        assert!(report.violations.is_empty());
    }

    #[test]
    fn single_fat_ball_fails_the_budget() {
        let family = BallFamily::new(vec![Ball::new(Point::c1(0.0, 0.0), 1.0).unwrap()]).unwrap();
        let p = PsParams::new(2.0, linear_phi(), 0.5).unwrap();
        let report = verify_ps(&[Point::c1(0.0, 0.0)], &family, &p).unwrap();
        assert!(report.covered);
        assert!(report.separated); // no pairs to violate
        assert!(!report.pass);
        assert!(matches!(report.violations[..], [PsViolation::MeasureExcess { .. }]));
    }

    #[test]
    fn two_small_balls_are_separated_both_ways() {
        let family = BallFamily::new(vec![
            Ball::new(Point::c1(0.0, 0.0), 0.1).unwrap(),
            Ball::new(Point::c1(1.0, 0.0), 0.1).unwrap(),
        ])
        .unwrap();
        let p = PsParams::new(2.0, linear_phi(), 1.0).unwrap();
        let report =
            verify_ps(&[Point::c1(0.0, 0.0), Point::c1(1.0, 0.0)], &family, &p).unwrap();
        assert!(report.separated);
        assert!(report.pass);
    }

    #[test]
    fn uncovered_point_is_reported() {
        let family = BallFamily::new(vec![Ball::new(Point::c1(0.0, 0.0), 1.0).unwrap()]).unwrap();
        let p = PsParams::new(2.0, linear_phi(), 3.0).unwrap();
        let report = verify_ps(&[Point::c1(2.0, 0.0)], &family, &p).unwrap();
        assert!(!report.covered);
        assert!(!report.pass);
        assert!(matches!(report.violations[..], [PsViolation::Uncovered { .. }]));
    }

    #[test]
    fn constructed_cover_of_reciprocals_verifies() {
        let p = PsParams::new(2.0, PhiFn::Power { delta: 0.5 }, 0.01).unwrap();
        let family = construct_cover_x(10, &p).unwrap();
        let pts: Vec<Point> = (1..=10).map(|j| Point::c1(1.0 / j as f64, 0.0)).collect();
        let report = verify_ps(&pts, &family, &p).unwrap();
        assert!(report.pass, "violations: {:?}", report.violations);
    }

    #[test]
    fn two_point_cover_respects_the_gap_cap() {
        let p = PsParams::new(2.0, linear_phi(), 1.0).unwrap();
        let family = construct_cover_x(2, &p).unwrap();
        assert_eq!(family.0.len(), 2);
        for b in &family.0 {
            assert!(b.radius() <= 1.0 / 12.0 + 1e-15);
        }
    }

    #[test]
    fn zero_measure_never_blocks_construction() {
        let zero = PhiFn::Modulus { omega: Modulus::linear(0.0).unwrap() };
        let p = PsParams::new(2.0, zero, 1e-12).unwrap();
        let family = construct_cover_x(10, &p).unwrap();
        let pts: Vec<Point> = (1..=10).map(|j| Point::c1(1.0 / j as f64, 0.0)).collect();
        let report = verify_ps(&pts, &family, &p).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn counting_measure_is_infeasible() {
        let p = PsParams::new(2.0, PhiFn::Power { delta: 0.0 }, 0.5).unwrap();
        assert!(construct_cover_x(5, &p).is_err());
    }

    #[test]
    fn refutation_finds_annulus_witnesses() {
        let p = PsParams::new(2.0, linear_phi(), 0.1).unwrap();
        let r0 = 0.5f64.powi(10);
        let report = refute_y(&p, &[r0]).unwrap();
        assert!(report.refuted);
        assert!(report.misses.is_empty());
        assert_eq!(report.witnesses.len(), 9);
        let centered = report
            .witnesses
            .iter()
            .find(|w| w.z0 == 0.0)
            .expect("grid includes z0 = 0");
        assert!(r0 < centered.point && centered.point < 2.0 * r0);
    }

    #[test]
    fn refutation_covers_the_advertised_parameter_range() {
        for c in [1.5, 2.0, 3.0, 4.0] {
            let p = PsParams::new(c, linear_phi(), 0.1).unwrap();
            let grid = [0.5f64.powi(6), 0.5f64.powi(8), 0.5f64.powi(12)];
            let report = refute_y(&p, &grid).unwrap();
            assert!(report.refuted, "misses at c = {c}: {:?}", report.misses);
        }
    }

    #[test]
    fn oversized_candidate_radius_is_rejected() {
        let p = PsParams::new(2.0, PhiFn::Power { delta: 0.5 }, 0.1).unwrap();
        match refute_y(&p, &[0.4]) {
            Err(Error::InvalidParameter(msg)) => assert!(msg.contains("measure budget")),
            other => panic!("expected a parameter error, got {other:?}"),
        }
    }

    #[test]
    fn sub_family_keeps_separation_and_budget() {
        let p = PsParams::new(2.0, linear_phi(), 0.05).unwrap();
        let family = construct_cover_x(12, &p).unwrap();
        let full = verify_ps(&[], &family, &p).unwrap();
        assert!(full.separated);
        let sub = BallFamily::new(family.0.iter().step_by(2).cloned().collect()).unwrap();
        let sub_report = verify_ps(&[], &sub, &p).unwrap();
        assert!(sub_report.separated);
        assert!(sub_report.phi_sum <= full.phi_sum);
    }

    proptest! {
        #[test]
        fn cover_is_scale_covariant_for_linear_measure(
            m in 3usize..25,
            k in -3i32..7,
            eps_mant in 0.01f64..0.9,
        ) {
            let eps = eps_mant * 0.1;
            let lambda = (2.0f64).powi(k);
            let p = PsParams::new(2.0, linear_phi(), eps).unwrap();
            let p_scaled = PsParams::new(2.0, linear_phi(), lambda * eps).unwrap();
            let xs: Vec<f64> = (1..=m).map(|j| 1.0 / j as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| lambda * x).collect();
            let base = cover_points(&xs, &p).unwrap();
            let scaled = cover_points(&ys, &p_scaled).unwrap();
            for (b, s) in base.0.iter().zip(scaled.0.iter()) {
                prop_assert_eq!(s.radius(), lambda * b.radius());
                prop_assert_eq!(s.center().re(0), lambda * b.center().re(0));
            }
        }
    }
}
