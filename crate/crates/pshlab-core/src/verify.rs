//! Numerical subharmonicity certificates: circle sub-mean tests for
//! closed-form evaluators, discrete Laplacian sign checks for sampled grid
//! fields, and a max-principle exceedance probe.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{sphere_point, DomainModel};
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::geom::Point;
use crate::grid::GridField;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubmeanCfg {
    /// Interior centers to sample.
    pub points: usize,
    /// Complex-line directions per center (rotations are redundant in one
    /// complex variable but harmless).
    pub directions: usize,
    /// Circle radii as fractions of the domain diameter.
    pub radii: Vec<f64>,
    pub circle_samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl SubmeanCfg {
    pub fn with_seed(seed: u64) -> SubmeanCfg {
        SubmeanCfg {
            points: 200,
            directions: 8,
            radii: vec![0.01, 0.05, 0.1],
            circle_samples: 16,
            tol: 1e-9,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubmeanViolation {
    pub center: Point,
    pub radius: f64,
    /// f(center) - circle average; positive means the sub-mean fails.
    pub deficit: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubmeanReport {
    pub tested: usize,
    pub skipped: usize,
    pub max_deficit: f64,
    pub violations: Vec<SubmeanViolation>,
    pub pass: bool,
}

/// Test f(p) <= average of f over circles p + r e^{i theta} w inside the
/// domain. Circles leaving the domain are skipped, as are circles whose
/// center sits within four radii of a log pole: there the coarse quadrature
/// of the log term manufactures spurious deficits.
pub fn submean_test(f: &Evaluator, dom: &DomainModel, cfg: &SubmeanCfg) -> Result<SubmeanReport> {
    if cfg.circle_samples < 4 || cfg.points == 0 || cfg.radii.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least 4 circle samples, one center, and one radius".into(),
        ));
    }
    for &rel in &cfg.radii {
        if !(rel > 0.0) || !rel.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "relative circle radius must be finite and positive, got {rel}"
            )));
        }
    }
    let dim = dom.complex_dim();
    let poles: Vec<Point> = f
        .collect_log_poles()
        .into_iter()
        .filter(|q| q.complex_dim() == dim)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let centers = dom.sample_interior(&mut rng, cfg.points)?;
    let origin = Point::from_coords(&vec![0.0; 2 * dim])?;

    let mut tested = 0usize;
    let mut skipped = 0usize;
    let mut max_deficit = f64::NEG_INFINITY;
    let mut violations = Vec::new();

    for p in &centers {
        for _ in 0..cfg.directions.max(1) {
            let w = sphere_point(&mut rng, &origin, 1.0, dim);
            for &rel in &cfg.radii {
                let r = rel * dom.diameter;
                if poles.iter().any(|q| p.sub(q).norm() < 4.0 * r) {
                    skipped += 1;
                    continue;
                }
                let ring: Vec<Point> = (0..cfg.circle_samples)
                    .map(|k| {
                        let theta = 2.0 * std::f64::consts::PI * k as f64
                            / cfg.circle_samples as f64;
                        rotate_add(p, &w, r, theta)
                    })
                    .collect();
                if !ring.iter().all(|q| dom.contains(q)) {
                    skipped += 1;
                    continue;
                }
                let center_value = f.eval_checked(p)?;
                let mut sum = 0.0;
                for q in &ring {
                    sum += f.eval_checked(q)?;
                }
                let avg = sum / cfg.circle_samples as f64;
                let deficit = center_value - avg;
                tested += 1;
                if deficit > max_deficit {
                    max_deficit = deficit;
                }
                if deficit > cfg.tol {
                    violations.push(SubmeanViolation { center: *p, radius: r, deficit });
                }
            }
        }
    }
    if tested == 0 {
        return Err(Error::NoTestableCircles);
    }
    let pass = violations.is_empty();
    Ok(SubmeanReport { tested, skipped, max_deficit, violations, pass })
}

/// p + r e^{i theta} w, rotating the direction w coordinatewise.
fn rotate_add(p: &Point, w: &Point, r: f64, theta: f64) -> Point {
    let (s, c) = theta.sin_cos();
    let dim = p.complex_dim();
    let mut coords = Vec::with_capacity(2 * dim);
    for m in 0..dim {
        let (a, b) = (w.re(m), w.im(m));
        coords.push(p.re(m) + r * (a * c - b * s));
        coords.push(p.im(m) + r * (a * s + b * c));
    }
    Point::from_coords(&coords).expect("dimension preserved")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaplacianReport {
    pub checked: usize,
    pub skipped_seam: usize,
    pub skipped_undefined: usize,
    pub min: f64,
    pub max: f64,
    /// Nodes where the five-point Laplacian drops below -tol.
    pub negative_count: usize,
    pub worst: Option<(usize, usize, f64)>,
    pub pass: bool,
}

/// Five-point Laplacian sign check on a sampled field. Nodes flagged as
/// branch seams (or adjacent to one) are excluded: a kink sitting between
/// nodes makes the stencil meaningless there.
pub fn laplacian_test(field: &GridField, tol: f64) -> Result<LaplacianReport> {
    let grid = field.grid;
    if grid.nx < 3 || grid.ny < 3 {
        return Err(Error::GridTooCoarse { need: 3, got: grid.nx.min(grid.ny) });
    }
    let h2 = grid.h * grid.h;
    let mut checked = 0usize;
    let mut skipped_seam = 0usize;
    let mut skipped_undefined = 0usize;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut negative_count = 0usize;
    let mut worst: Option<(usize, usize, f64)> = None;
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let stencil = [
                field.value(i, j),
                field.value(i - 1, j),
                field.value(i + 1, j),
                field.value(i, j - 1),
                field.value(i, j + 1),
            ];
            if stencil.iter().any(|v| v.is_none()) {
                skipped_undefined += 1;
                continue;
            }
            let seam = field.is_seam(i, j)
                || field.is_seam(i - 1, j)
                || field.is_seam(i + 1, j)
                || field.is_seam(i, j - 1)
                || field.is_seam(i, j + 1);
            if seam {
                skipped_seam += 1;
                continue;
            }
            let c = stencil[0].unwrap();
            let sum: f64 = stencil[1..].iter().map(|v| v.unwrap()).sum();
            let lap = (sum - 4.0 * c) / h2;
            checked += 1;
            min = min.min(lap);
            max = max.max(lap);
            if lap < -tol {
                negative_count += 1;
                if worst.map_or(true, |(_, _, w)| lap < w) {
                    worst = Some((i, j, lap));
                }
            }
        }
    }
    let pass = checked > 0 && negative_count == 0;
    Ok(LaplacianReport {
        checked,
        skipped_seam,
        skipped_undefined,
        min,
        max,
        negative_count,
        worst,
        pass,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaxGapReport {
    pub inner_max: f64,
    pub outer_max: f64,
    /// inner_max - outer_max; positive means the interior exceeds the
    /// boundary, which no subharmonic extension could allow.
    pub gap: f64,
    /// Half the gap: a margin stable under grid refinement.
    pub certificate: f64,
}

/// Compare field maxima over two point sets, snapping each point to its
/// nearest grid node. Undefined nodes are an error: the caller asked about a
/// point the field does not cover.
pub fn max_principle_gap(
    field: &GridField,
    inner: &[Point],
    outer: &[Point],
) -> Result<MaxGapReport> {
    if inner.is_empty() || outer.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one inner and one outer probe point".into(),
        ));
    }
    let lookup = |pts: &[Point]| -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for p in pts {
            let (i, j) = field.grid.nearest(p.re(0), p.im(0));
            let v = field.value(i, j).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "probe point {p:?} snaps to a node with no field value"
                ))
            })?;
            best = best.max(v);
        }
        Ok(best)
    };
    let inner_max = lookup(inner)?;
    let outer_max = lookup(outer)?;
    let gap = inner_max - outer_max;
    Ok(MaxGapReport { inner_max, outer_max, gap, certificate: gap / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BoundingBox, RegionFn};
    use crate::grid::{sample_evaluator, Grid};
    use std::sync::Arc;

    fn disc(radius: f64) -> DomainModel {
        let r = radius;
        let member: RegionFn = Arc::new(move |p: &Point| p.norm() < r);
        let closure: RegionFn = Arc::new(move |p: &Point| p.norm() <= r);
        let boundary = Arc::new(move |seed: u64, n: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let origin = Point::c1(0.0, 0.0);
            (0..n).map(|_| sphere_point(&mut rng, &origin, r, 1)).collect()
        });
        DomainModel::new(
            "disc",
            BoundingBox::new(&[-r, -r], &[r, r]).unwrap(),
            2.0 * r,
            member,
            closure,
            boundary,
        )
        .unwrap()
    }

    #[test]
    fn squared_norm_passes_the_submean_test() {
        let f = Evaluator::AbsSq { center: Point::c1(0.0, 0.0) };
        let report = submean_test(&f, &disc(1.0), &SubmeanCfg::with_seed(7)).unwrap();
        assert!(report.pass, "violations: {:?}", report.violations.len());
        assert!(report.tested > 100);
        // the deficit of |z|^2 on a circle of radius r is exactly -r^2
        assert!(report.max_deficit < 0.0);
    }

    #[test]
    fn negated_squared_norm_fails_with_r_squared_deficit() {
        let f = Evaluator::AbsSq { center: Point::c1(0.0, 0.0) }.scaled(-1.0);
        let cfg = SubmeanCfg::with_seed(7);
        let report = submean_test(&f, &disc(1.0), &cfg).unwrap();
        assert!(!report.pass);
        let r_min = cfg.radii.iter().cloned().fold(f64::INFINITY, f64::min) * 2.0;
        assert!(report.max_deficit >= r_min * r_min * 0.99);
        assert!(!report.violations.is_empty());
    }

    #[test]
    fn log_pole_does_not_trip_the_quadrature() {
        let f = Evaluator::LogDist { center: Point::c1(0.0, 0.0) };
        let report = submean_test(&f, &disc(1.0), &SubmeanCfg::with_seed(11)).unwrap();
        assert!(report.pass, "max deficit {}", report.max_deficit);
        assert!(report.skipped > 0);
        assert!(report.tested > 0);
    }

    #[test]
    fn oversized_radii_leave_nothing_testable() {
        let f = Evaluator::Const(0.0);
        let mut cfg = SubmeanCfg::with_seed(3);
        cfg.radii = vec![10.0];
        match submean_test(&f, &disc(1.0), &cfg) {
            Err(Error::NoTestableCircles) => {}
            other => panic!("expected no testable circles, got {other:?}"),
        }
    }

    #[test]
    fn submean_reports_are_deterministic_per_seed() {
        let f = Evaluator::Re { var: 0 };
        let a = submean_test(&f, &disc(1.0), &SubmeanCfg::with_seed(42)).unwrap();
        let b = submean_test(&f, &disc(1.0), &SubmeanCfg::with_seed(42)).unwrap();
        assert_eq!(a.tested, b.tested);
        assert_eq!(a.max_deficit.to_bits(), b.max_deficit.to_bits());
    }

    #[test]
    fn squared_norm_has_laplacian_four() {
        let f = Evaluator::AbsSq { center: Point::c1(0.0, 0.0) };
        let grid = Grid::centered_square(1.0, 41).unwrap();
        let field = sample_evaluator(&f, grid, None);
        let report = laplacian_test(&field, 1e-6).unwrap();
        assert!(report.pass);
        assert!((report.min - 4.0).abs() < 1e-8);
        assert!((report.max - 4.0).abs() < 1e-8);
    }

    #[test]
    fn distant_log_is_discretely_harmonic() {
        let f = Evaluator::LogDist { center: Point::c1(2.0, 0.0) };
        let grid = Grid::centered_square(1.0, 41).unwrap();
        let field = sample_evaluator(&f, grid, None);
        let report = laplacian_test(&field, 0.01).unwrap();
        assert!(report.pass);
        assert!(report.min.abs() < 0.01 && report.max.abs() < 0.01);
    }

    #[test]
    fn superharmonic_field_is_flagged() {
        let f = Evaluator::AbsSq { center: Point::c1(0.0, 0.0) }.scaled(-1.0);
        let grid = Grid::centered_square(1.0, 21).unwrap();
        let field = sample_evaluator(&f, grid, None);
        let report = laplacian_test(&field, 1e-6).unwrap();
        assert!(!report.pass);
        assert_eq!(report.negative_count, report.checked);
        assert!(report.worst.is_some());
    }

    #[test]
    fn seam_exclusion_rescues_a_clamped_field() {
        // floor above the log branch forces a jump at the glue sphere; the
        // stencil across it reports a huge negative value unless excluded
        let f = Evaluator::BallGlue {
            center: Point::c1(0.0, 0.0),
            radius: 0.5,
            floor: 1.0,
            inner: Box::new(Evaluator::LogDist { center: Point::c1(0.0, 0.0) }),
        };
        // tol 0.05 sits above the O(h^2) truncation error of log on this
        // grid but far below the O(1/h^2) spike the jump produces
        let grid = Grid::centered_square(1.0, 41).unwrap();
        let with_seams = sample_evaluator(&f, grid, None);
        let flagged = laplacian_test(&with_seams, 0.05).unwrap();
        assert!(flagged.pass, "min lap {}", flagged.min);
        assert!(flagged.skipped_seam > 0);

        let mut without = with_seams.clone();
        without.seams = None;
        let unflagged = laplacian_test(&without, 0.05).unwrap();
        assert!(!unflagged.pass);
        assert!(unflagged.min < flagged.min);
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let grid = Grid::new(0.0, 0.0, 1.0, 2, 5).unwrap();
        let field = GridField::constant(grid, 0.0);
        assert!(matches!(
            laplacian_test(&field, 1e-6),
            Err(Error::GridTooCoarse { need: 3, got: 2 })
        ));
    }

    #[test]
    fn max_gap_is_negative_for_subharmonic_data() {
        let f = Evaluator::AbsSq { center: Point::c1(0.0, 0.0) };
        let grid = Grid::centered_square(1.0, 21).unwrap();
        let field = sample_evaluator(&f, grid, None);
        let inner = [Point::c1(0.0, 0.0), Point::c1(0.3, 0.2)];
        let outer = [Point::c1(1.0, 1.0), Point::c1(-1.0, 0.0)];
        let report = max_principle_gap(&field, &inner, &outer).unwrap();
        assert!(report.gap < 0.0);
        assert_eq!(report.certificate, report.gap / 2.0);
        assert!((report.outer_max - 2.0).abs() < 1e-12);
    }

    #[test]
    fn max_gap_requires_defined_nodes() {
        let grid = Grid::centered_square(1.0, 5).unwrap();
        let mut values = vec![Some(0.0); grid.len()];
        values[grid.idx(2, 2)] = None;
        let field = GridField::new(grid, values).unwrap();
        let inner = [Point::c1(0.0, 0.0)];
        let outer = [Point::c1(1.0, 1.0)];
        assert!(max_principle_gap(&field, &inner, &outer).is_err());
    }
}
