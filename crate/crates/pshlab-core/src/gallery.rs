//! Domain gallery: the regions the experiments run on, a directional probe
//! for boundary segments, and the accumulating-discs construction with
//! certified bounds.
//!
//! Slits are honest measure-zero sets: membership excludes points with
//! imaginary part exactly zero inside the removed intervals. Samplers almost
//! never hit them; the grid builders below handle the discretized picture.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cantor::{build_level, CantorSpec};
use crate::domain::{ball_point, BoundarySampler, BoundingBox, DomainModel, RegionFn};
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::geom::Point;
use crate::grid::{Grid, GridField, GridMask, NodeClass};

const TAU: f64 = std::f64::consts::TAU;

/// |z_var| of one complex coordinate.
fn coord_abs(p: &Point, var: usize) -> f64 {
    p.re(var).hypot(p.im(var))
}

/// Roughly n points on the circle |z - c| = r: equally spaced with a seeded
/// phase offset. Magnitudes are exact up to one rounding of cos/sin.
fn circle_points(cx: f64, cy: f64, r: f64, seed: u64, n: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: f64 = rng.gen_range(0.0..1.0);
    (0..n)
        .map(|k| {
            let th = TAU * (k as f64 + phase) / n.max(1) as f64;
            Point::c1(cx + r * th.cos(), cy + r * th.sin())
        })
        .collect()
}

pub fn disc(radius: f64) -> Result<DomainModel> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "disc radius must be positive and finite, got {radius}"
        )));
    }
    let bbox = BoundingBox::new(&[-radius, -radius], &[radius, radius])?;
    let r = radius;
    let membership: RegionFn = Arc::new(move |p| p.norm() < r);
    let closure: RegionFn = Arc::new(move |p| p.norm() <= r);
    let boundary: BoundarySampler = Arc::new(move |seed, n| circle_points(0.0, 0.0, r, seed, n));
    DomainModel::new("disc", bbox, 2.0 * radius, membership, closure, boundary)
}

pub fn unit_disc() -> DomainModel {
    let mut d = disc(1.0).expect("unit radius is valid");
    d.name = "unit_disc".into();
    d
}

pub fn square(side: f64) -> Result<DomainModel> {
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "square side must be positive and finite, got {side}"
        )));
    }
    let half = 0.5 * side;
    let bbox = BoundingBox::new(&[-half, -half], &[half, half])?;
    let membership: RegionFn =
        Arc::new(move |p| p.re(0).abs() < half && p.im(0).abs() < half);
    let closure: RegionFn =
        Arc::new(move |p| p.re(0).abs() <= half && p.im(0).abs() <= half);
    let boundary: BoundarySampler = Arc::new(move |seed, n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let t = rng.gen_range(-half..half);
                match rng.gen_range(0..4u32) {
                    0 => Point::c1(t, -half),
                    1 => Point::c1(half, t),
                    2 => Point::c1(t, half),
                    _ => Point::c1(-half, t),
                }
            })
            .collect()
    });
    DomainModel::new(
        "square",
        bbox,
        side * std::f64::consts::SQRT_2,
        membership,
        closure,
        boundary,
    )
}

fn on_slit(p: &Point, intervals: &[(f64, f64)]) -> bool {
    p.im(0) == 0.0 && intervals.iter().any(|&(lo, hi)| lo <= p.re(0) && p.re(0) <= hi)
}

fn slit_intervals(level: usize) -> Result<Vec<(f64, f64)>> {
    let lv = build_level(&CantorSpec::pow2(), level)?;
    Ok(lv
        .intervals
        .iter()
        .map(|iv| (iv.lo().to_f64(), iv.hi().to_f64()))
        .collect())
}

/// Points on the slit pieces: pick an interval, then a uniform abscissa.
fn slit_points(intervals: &[(f64, f64)], rng: &mut impl Rng, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let (lo, hi) = intervals[rng.gen_range(0..intervals.len())];
            Point::c1(rng.gen_range(lo..=hi), 0.0)
        })
        .collect()
}

/// Unit disc minus the closed segment [-1/2, 1/2] on the real axis.
pub fn slit_disc() -> DomainModel {
    let seg = vec![(-0.5f64, 0.5f64)];
    let seg_b = seg.clone();
    let membership: RegionFn = Arc::new(move |p| p.norm() < 1.0 && !on_slit(p, &seg));
    let closure: RegionFn = Arc::new(move |p| p.norm() <= 1.0);
    let boundary: BoundarySampler = Arc::new(move |seed, n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = circle_points(0.0, 0.0, 1.0, seed ^ 0x51, n / 2);
        out.extend(slit_points(&seg_b, &mut rng, n - n / 2));
        out
    });
    DomainModel::new("slit_disc", bbox_square(1.0), 2.0, membership, closure, boundary)
        .expect("static parameters are valid")
}

fn bbox_square(half: f64) -> BoundingBox {
    BoundingBox::new(&[-half, -half], &[half, half]).expect("valid box")
}

/// Disc of radius 2 minus the level-`level` generation of end-interval
/// removals on [-1/2, 1/2].
pub fn cantor_slit_disc(level: usize) -> Result<DomainModel> {
    let ivs = slit_intervals(level)?;
    let ivs_b = ivs.clone();
    let membership: RegionFn = Arc::new(move |p| p.norm() < 2.0 && !on_slit(p, &ivs));
    let closure: RegionFn = Arc::new(move |p| p.norm() <= 2.0);
    let boundary: BoundarySampler = Arc::new(move |seed, n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = circle_points(0.0, 0.0, 2.0, seed ^ 0x52, n / 2);
        out.extend(slit_points(&ivs_b, &mut rng, n - n / 2));
        out
    });
    DomainModel::new(
        format!("cantor_slit_disc_l{level}"),
        bbox_square(2.0),
        4.0,
        membership,
        closure,
        boundary,
    )
}

/// Open square (-1/2, 1/2)^2 minus the same slit generation.
pub fn cantor_slit_square(level: usize) -> Result<DomainModel> {
    let ivs = slit_intervals(level)?;
    let ivs_b = ivs.clone();
    let membership: RegionFn = Arc::new(move |p| {
        p.re(0).abs() < 0.5 && p.im(0).abs() < 0.5 && !on_slit(p, &ivs)
    });
    let closure: RegionFn = Arc::new(move |p| p.re(0).abs() <= 0.5 && p.im(0).abs() <= 0.5);
    let boundary: BoundarySampler = Arc::new(move |seed, n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<Point> = (0..n / 2)
            .map(|_| {
                let t = rng.gen_range(-0.5..0.5);
                match rng.gen_range(0..4u32) {
                    0 => Point::c1(t, -0.5),
                    1 => Point::c1(0.5, t),
                    2 => Point::c1(t, 0.5),
                    _ => Point::c1(-0.5, t),
                }
            })
            .collect();
        out.extend(slit_points(&ivs_b, &mut rng, n - n / 2));
        out
    });
    DomainModel::new(
        format!("cantor_slit_square_l{level}"),
        bbox_square(0.5),
        std::f64::consts::SQRT_2,
        membership,
        closure,
        boundary,
    )
}

/// Multiply a complex pair by i^k (k < 4), or conjugate then rotate
/// (k >= 4). Preserves the coordinate modulus bit for bit.
fn phase_rot(c: (f64, f64), k: u32) -> (f64, f64) {
    let (a, b) = if k >= 4 { (c.0, -c.1) } else { c };
    match k % 4 {
        0 => (a, b),
        1 => (-b, a),
        2 => (-a, -b),
        _ => (b, -a),
    }
}

/// {(z, w) : 0 < |z| < |w| < 1}. Not fat: the w-axis lies in the closure's
/// interior but outside the region, which is what the directional probes
/// are built to detect.
pub fn hartogs_triangle() -> DomainModel {
    let membership: RegionFn = Arc::new(|p| {
        let az = coord_abs(p, 0);
        let aw = coord_abs(p, 1);
        0.0 < az && az < aw && aw < 1.0
    });
    let closure: RegionFn = Arc::new(|p| {
        let az = coord_abs(p, 0);
        let aw = coord_abs(p, 1);
        az <= aw && aw <= 1.0
    });
    // Three boundary faces: the cone |z| = |w|, the outer shell |w| = 1,
    // and the removed axis z = 0. Cone points use exact quarter-turn
    // rotations so both moduli round identically.
    let boundary: BoundarySampler = Arc::new(|seed, n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|k| {
                let th1 = rng.gen_range(0.0..TAU);
                let th2 = rng.gen_range(0.0..TAU);
                let s: f64 = rng.gen_range(0.0..1.0);
                match k % 3 {
                    0 => {
                        let z = (s * th1.cos(), s * th1.sin());
                        Point::c2(z, phase_rot(z, rng.gen_range(0..8u32)))
                    }
                    1 => {
                        let w = (th2.cos(), th2.sin());
                        let shrink = s * (1.0 - 1e-12);
                        let z = phase_rot(w, rng.gen_range(0..8u32));
                        Point::c2((shrink * z.0, shrink * z.1), w)
                    }
                    _ => {
                        let r = s * (1.0 - 1e-12);
                        Point::c2((0.0, 0.0), (r * th2.cos(), r * th2.sin()))
                    }
                }
            })
            .collect()
    });
    let bbox = BoundingBox::new(&[-1.0, -1.0, -1.0, -1.0], &[1.0, 1.0, 1.0, 1.0])
        .expect("valid box");
    DomainModel::new(
        "hartogs_triangle",
        bbox,
        2.0 * std::f64::consts::SQRT_2,
        membership,
        closure,
        boundary,
    )
    .expect("static parameters are valid")
}

/// Named domain constructors, the serializable surface used by experiment
/// specs. `Disc1` is the diameter-one disc the patch estimates normalize to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DomainSpec {
    UnitDisc,
    Disc1,
    Disc { radius: f64 },
    Square { side: f64 },
    SlitDisc,
    CantorSlitDisc { level: usize },
    CantorSlitSquare { level: usize },
    HartogsTriangle,
}

impl DomainSpec {
    /// Resolve a command-line name plus optional shape parameters.
    pub fn parse(name: &str, level: Option<usize>, size: Option<f64>) -> Result<DomainSpec> {
        let need_level = |l: Option<usize>| {
            l.ok_or_else(|| Error::InvalidParameter(format!("domain '{name}' needs --level")))
        };
        match name {
            "unit_disc" => Ok(DomainSpec::UnitDisc),
            "disc1" => Ok(DomainSpec::Disc1),
            "disc" => Ok(DomainSpec::Disc {
                radius: size.ok_or_else(|| {
                    Error::InvalidParameter("domain 'disc' needs --size (the radius)".into())
                })?,
            }),
            "square" => Ok(DomainSpec::Square { side: size.unwrap_or(1.0) }),
            "slit_disc" => Ok(DomainSpec::SlitDisc),
            "cantor_slit_disc" => Ok(DomainSpec::CantorSlitDisc { level: need_level(level)? }),
            "cantor_slit_square" => {
                Ok(DomainSpec::CantorSlitSquare { level: need_level(level)? })
            }
            "hartogs_triangle" => Ok(DomainSpec::HartogsTriangle),
            other => Err(Error::UnknownDomain(other.to_string())),
        }
    }
}

pub fn make_domain(spec: &DomainSpec) -> Result<DomainModel> {
    match spec {
        DomainSpec::UnitDisc => Ok(unit_disc()),
        DomainSpec::Disc1 => {
            let mut d = disc(0.5)?;
            d.name = "disc1".into();
            Ok(d)
        }
        DomainSpec::Disc { radius } => disc(*radius),
        DomainSpec::Square { side } => square(*side),
        DomainSpec::SlitDisc => Ok(slit_disc()),
        DomainSpec::CantorSlitDisc { level } => cantor_slit_disc(*level),
        DomainSpec::CantorSlitSquare { level } => cantor_slit_square(*level),
        DomainSpec::HartogsTriangle => Ok(hartogs_triangle()),
    }
}

/// One directional test at a closure point: does every admissible nearby
/// start q stay inside when translated by t * t_scale * dir? Candidates are
/// drawn from a seeded ball around p, the boundary sampler, and a structured
/// family of backed-off starts designed to land exactly on thin boundary
/// pieces after translation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentProbe {
    pub p: Point,
    /// Unit direction (normalized by `new`).
    pub dir: Point,
    /// Radius of the candidate neighborhood around p.
    pub rho: f64,
    /// Translation fractions in (0, 1].
    pub t_grid: Vec<f64>,
    /// Physical length of a full t = 1 translation.
    pub t_scale: f64,
    pub samples: usize,
    pub seed: u64,
}

impl SegmentProbe {
    pub fn new(p: Point, dir: Point, rho: f64, seed: u64) -> Result<SegmentProbe> {
        let n = dir.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter(
                "probe direction must be nonzero and finite".into(),
            ));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "probe radius must be positive, got {rho}"
            )));
        }
        Ok(SegmentProbe {
            p,
            dir: dir.scale(1.0 / n),
            rho,
            t_grid: vec![1e-3, 1e-2, 0.1, 0.25, 0.5, 0.75, 1.0],
            t_scale: rho,
            samples: 200,
            seed,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub base: Point,
    pub t: f64,
    pub translated: Point,
}

/// Sampled evidence, not a proof: `pass` means no tested start escaped.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentReport {
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
    pub candidates_tested: usize,
}

fn structured_candidates(probe: &SegmentProbe, t: f64, dim: usize) -> Vec<Point> {
    let m = t * probe.t_scale;
    let d = probe.dir;
    let masks: Vec<Point> = if dim == 1 {
        vec![d]
    } else {
        vec![
            d,
            Point::c2((d.re(0), d.im(0)), (0.0, 0.0)),
            Point::c2((0.0, 0.0), (d.re(1), d.im(1))),
        ]
    };
    let mut out = Vec::new();
    for mask in masks {
        let base = probe.p.sub(&mask.scale(m));
        out.push(base);
        let half = 0.5 * m;
        for var in 0..dim {
            for &(dr, di) in &[(half, 0.0), (-half, 0.0), (0.0, half), (0.0, -half)] {
                let mut q = base;
                q.set(2 * var, q.re(var) + dr);
                q.set(2 * var + 1, q.im(var) + di);
                out.push(q);
            }
        }
    }
    out
}

pub fn segment_check(dom: &DomainModel, probe: &SegmentProbe) -> Result<SegmentReport> {
    let dim = dom.bbox.complex_dim();
    if probe.p.complex_dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: probe.p.complex_dim() });
    }
    if probe.dir.complex_dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: probe.dir.complex_dim() });
    }
    if probe.t_grid.is_empty() {
        return Err(Error::InvalidParameter("probe needs a nonempty t grid".into()));
    }
    for &t in &probe.t_grid {
        if !(t > 0.0 && t <= 1.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "translation fractions must lie in (0, 1], got {t}"
            )));
        }
    }
    if !(probe.t_scale > 0.0) || !probe.t_scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_scale must be positive, got {}",
            probe.t_scale
        )));
    }

    let mut base: Vec<Point> = Vec::new();
    if dom.contains_closure(&probe.p) {
        base.push(probe.p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    for _ in 0..probe.samples {
        let q = ball_point(&mut rng, &probe.p, probe.rho, dim);
        if dom.contains_closure(&q) {
            base.push(q);
        }
    }
    for q in dom.sample_boundary(probe.seed ^ 0x5eed, probe.samples) {
        if q.complex_dim() == dim && q.dist(&probe.p) <= probe.rho && dom.contains_closure(&q) {
            base.push(q);
        }
    }

    let mut tested = 0usize;
    for &t in &probe.t_grid {
        let step = probe.dir.scale(t * probe.t_scale);
        let mut candidates = base.clone();
        candidates.extend(
            structured_candidates(probe, t, dim)
                .into_iter()
                .filter(|q| dom.contains_closure(q)),
        );
        for q in candidates {
            tested += 1;
            let moved = q.add(&step);
            if !dom.contains(&moved) {
                return Ok(SegmentReport {
                    pass: false,
                    counterexample: Some(Counterexample { base: q, t, translated: moved }),
                    candidates_tested: tested,
                });
            }
        }
    }
    if tested == 0 {
        return Err(Error::EmptyDomain(format!(
            "no admissible probe candidates within {} of {:?}",
            probe.rho, probe.p
        )));
    }
    Ok(SegmentReport { pass: true, counterexample: None, candidates_tested: tested })
}

/// Distance from a point of C to the segment [-1/2, 1/2] x {0}.
fn segment_distance(p: &Point) -> f64 {
    let dx = (p.re(0).abs() - 0.5).max(0.0);
    dx.hypot(p.im(0))
}

/// The accumulating-discs data: weights c_j for h = sum c_j log|z - a_j|,
/// certified disc log-radii with h < -2 on each disc, and a certified
/// infimum of h on the segment. Radii are kept in log form; `radii` holds
/// exp(log_radii), which may underflow to zero for deep points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AccumulatingDiscs {
    pub points: Vec<Point>,
    pub coefficients: Vec<f64>,
    pub log_radii: Vec<f64>,
    pub radii: Vec<f64>,
    pub h: Evaluator,
    pub certified_inf_segment: f64,
    pub certified_disc_sups: Vec<f64>,
    pub sampled_min_segment: f64,
}

/// Points drifting down to the segment: x_j uniform in [-1/2, 1/2],
/// height 0.1 * 0.85^j.
pub fn accumulating_points(n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|j| {
            let x: f64 = rng.gen_range(-0.5..0.5);
            Point::c1(x, 0.1 * 0.85f64.powi(j as i32))
        })
        .collect()
}

/// Build the weighted log-sum h and certify, in exact-arithmetic-free but
/// conservative form: h >= sum c_j log d_j >= -1/2 on the segment, and
/// h <= certified_disc_sups[j] < -2 on the disc of log-radius log_radii[j]
/// around a_j. The disc radius search costs one `budget` unit per objective
/// evaluation.
pub fn accumulating_discs(a_points: &[Point], mut budget: usize, seed: u64) -> Result<AccumulatingDiscs> {
    if a_points.is_empty() {
        return Err(Error::InvalidParameter("need at least one accumulation point".into()));
    }
    const TARGET: f64 = -2.5;
    let n = a_points.len();

    let mut coefficients = Vec::with_capacity(n);
    let mut certified_inf = 0.0f64;
    for (idx, a) in a_points.iter().enumerate() {
        if a.complex_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: a.complex_dim() });
        }
        if a.norm() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "point {idx} lies outside the open unit disc"
            )));
        }
        let d = segment_distance(a);
        if !(d > 0.0) {
            return Err(Error::InvalidParameter(format!("point {idx} lies on the segment")));
        }
        // the segment passes through 0, so d <= |a| < 1 and log d < 0
        let c = 2f64.powi(-(idx as i32) - 2) / d.ln().abs().max(1.0);
        coefficients.push(c);
        certified_inf += c * d.ln();
    }
    if certified_inf < -0.5 - 1e-9 {
        return Err(Error::CertificateFailure(format!(
            "segment infimum bound {certified_inf} fell below -1/2"
        )));
    }

    let mut log_radii = vec![0.0f64; n];
    let mut certified_disc_sups = vec![0.0f64; n];
    for j in 0..n {
        let mut d_nn = f64::INFINITY;
        for k in 0..n {
            if k != j {
                d_nn = d_nn.min(a_points[j].dist(&a_points[k]));
            }
        }
        if d_nn == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "duplicate accumulation point at index {j}"
            )));
        }
        let d_j = segment_distance(&a_points[j]);
        let head = 0.5 * (1.0 - a_points[j].norm());
        let cap = (0.25 * d_nn).min(head).min(0.5 * d_j).ln();

        // Upper bound for h on the disc of log-radius lam around a_j;
        // increasing in lam, -> -inf as lam -> -inf.
        let upper = |lam: f64| -> f64 {
            let mut s = coefficients[j] * lam;
            for k in 0..n {
                if k != j {
                    s += coefficients[k] * (a_points[j].dist(&a_points[k]) + lam.exp()).ln();
                }
            }
            s
        };
        let mut spend = || -> Result<()> {
            if budget == 0 {
                return Err(Error::BudgetExhausted { at: j });
            }
            budget -= 1;
            Ok(())
        };

        spend()?;
        if upper(cap) <= TARGET {
            log_radii[j] = cap;
            certified_disc_sups[j] = upper(cap);
            continue;
        }
        let mut step = 1.0;
        let mut lo = cap - step;
        loop {
            spend()?;
            if upper(lo) <= TARGET {
                break;
            }
            step *= 2.0;
            lo = cap - step;
            if !lo.is_finite() {
                return Err(Error::CertificateFailure(format!(
                    "disc radius search diverged at index {j}"
                )));
            }
        }
        // push the certified radius as far up as the budget allows
        let mut hi = cap;
        for _ in 0..100 {
            if hi - lo <= 1e-6 * lo.abs().max(1.0) {
                break;
            }
            spend()?;
            let mid = 0.5 * (lo + hi);
            if upper(mid) <= TARGET {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        log_radii[j] = lo;
        certified_disc_sups[j] = upper(lo);
    }

    let h = Evaluator::Sum(
        a_points
            .iter()
            .zip(&coefficients)
            .map(|(a, &c)| Evaluator::LogDist { center: *a }.scaled(c))
            .collect(),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_min = f64::INFINITY;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-0.5..=0.5);
        sampled_min = sampled_min.min(h.eval(&Point::c1(x, 0.0)));
    }
    if sampled_min < certified_inf - 1e-9 {
        return Err(Error::CertificateFailure(format!(
            "sampled segment minimum {sampled_min} undercuts the certificate {certified_inf}"
        )));
    }

    Ok(AccumulatingDiscs {
        points: a_points.to_vec(),
        coefficients,
        radii: log_radii.iter().map(|l| l.exp()).collect(),
        log_radii,
        h,
        certified_inf_segment: certified_inf,
        certified_disc_sups,
        sampled_min_segment: sampled_min,
    })
}

/// Unit disc minus the segment and the certified discs. The discs are tiny
/// (often below f64 resolution), so membership excludes the closed metric
/// balls; for underflowed radii that is just the center points.
pub fn accumulating_discs_domain(art: &AccumulatingDiscs) -> DomainModel {
    let pts = art.points.clone();
    let radii = art.radii.clone();
    let seg = vec![(-0.5f64, 0.5f64)];
    let membership: RegionFn = Arc::new(move |p| {
        p.norm() < 1.0
            && !on_slit(p, &seg)
            && pts.iter().zip(&radii).all(|(a, &r)| p.dist(a) > r)
    });
    let closure: RegionFn = Arc::new(move |p| p.norm() <= 1.0);
    let pts_b = art.points.clone();
    let radii_b = art.radii.clone();
    let boundary: BoundarySampler = Arc::new(move |seed, n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = circle_points(0.0, 0.0, 1.0, seed ^ 0x53, n / 3);
        out.extend(slit_points(&[(-0.5, 0.5)], &mut rng, n / 3));
        for _ in out.len()..n {
            let k = rng.gen_range(0..pts_b.len());
            let th = rng.gen_range(0.0..TAU);
            let r = radii_b[k];
            out.push(Point::c1(
                pts_b[k].re(0) + r * th.cos(),
                pts_b[k].im(0) + r * th.sin(),
            ));
        }
        out
    });
    DomainModel::new("accumulating_discs", bbox_square(1.0), 2.0, membership, closure, boundary)
        .expect("static parameters are valid")
}

/// Hartogs-type region over a grid field: {(z, w) : |w| + psi(z) < 0},
/// with psi interpolated bilinearly and membership false wherever the
/// field is undefined.
pub fn hartogs_psi_domain(psi: &GridField) -> Result<DomainModel> {
    let mut depth = 0.0f64;
    for v in psi.values.iter().flatten() {
        depth = depth.max(-v);
    }
    if !(depth > 0.0) {
        return Err(Error::EmptyDomain(
            "field is nowhere negative; the region over it is empty".into(),
        ));
    }
    let g = psi.grid;
    let (x1, y1) = (g.x(g.nx - 1), g.y(g.ny - 1));
    let bbox = BoundingBox::new(&[g.x0, g.y0, -depth, -depth], &[x1, y1, depth, depth])?;
    let diameter = ((x1 - g.x0).powi(2) + (y1 - g.y0).powi(2) + 8.0 * depth * depth).sqrt();

    let f1 = psi.clone();
    let membership: RegionFn = Arc::new(move |p| match f1.bilinear(p.re(0), p.im(0)) {
        Some(v) => coord_abs(p, 1) + v < 0.0,
        None => false,
    });
    let f2 = psi.clone();
    let closure: RegionFn = Arc::new(move |p| match f2.bilinear(p.re(0), p.im(0)) {
        Some(v) => coord_abs(p, 1) + v <= 0.0,
        None => false,
    });
    let f3 = psi.clone();
    let boundary: BoundarySampler = Arc::new(move |seed, n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = f3.grid;
        let mut out = Vec::with_capacity(n);
        let mut guard = 0usize;
        while out.len() < n && guard < 200 * n + 10_000 {
            guard += 1;
            let x = rng.gen_range(g.x0..=g.x(g.nx - 1));
            let y = rng.gen_range(g.y0..=g.y(g.ny - 1));
            if let Some(v) = f3.bilinear(x, y) {
                if v <= 0.0 {
                    let th = rng.gen_range(0.0..TAU);
                    out.push(Point::c2((x, y), (-v * th.cos(), -v * th.sin())));
                }
            }
        }
        out
    });
    DomainModel::new("hartogs_exhaustion", bbox, diameter, membership, closure, boundary)
}

/// Grid mask and Dirichlet data for the slit potential run: value 1 on the
/// grid nodes nearest to the slit midpoints, 0 on the ring just outside the
/// radius-2 disc.
pub struct SlitPotentialProblem {
    pub mask: GridMask,
    pub data: BTreeMap<usize, f64>,
    pub slit_nodes: Vec<(usize, usize)>,
    pub rim_nodes: Vec<(usize, usize)>,
}

pub fn slit_potential_problem(level: usize, nodes: usize) -> Result<SlitPotentialProblem> {
    let grid = Grid::centered_square(2.0, nodes)?;
    let mut mask = GridMask::with_fixed_ring(grid, |p| p.norm() < 2.0);
    let lv = build_level(&CantorSpec::pow2(), level)?;
    let mut slit = BTreeSet::new();
    for m in lv.midpoints() {
        let (i, j) = grid.nearest(m.to_f64(), 0.0);
        if mask.class_at(i, j) != NodeClass::Free {
            return Err(Error::GridTooCoarse { need: nodes + 1, got: nodes });
        }
        slit.insert((i, j));
    }
    let mut data = BTreeMap::new();
    for &(i, j) in &slit {
        mask.set_class(i, j, NodeClass::Fixed);
        data.insert(grid.idx(i, j), 1.0);
    }
    let mut rim_nodes = Vec::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if mask.class_at(i, j) == NodeClass::Fixed && !slit.contains(&(i, j)) {
                data.insert(grid.idx(i, j), 0.0);
                rim_nodes.push((i, j));
            }
        }
    }
    Ok(SlitPotentialProblem {
        mask,
        data,
        slit_nodes: slit.into_iter().collect(),
        rim_nodes,
    })
}

/// Mask for the unit disc minus the closed segment [-1/2, 1/2]: segment
/// nodes become part of the fixed boundary ring.
pub fn disc_minus_segment_mask(nodes: usize) -> Result<GridMask> {
    let grid = Grid::centered_square(1.0, nodes)?;
    let h = grid.h;
    Ok(GridMask::with_fixed_ring(grid, move |p| {
        let on_segment = p.im(0).abs() < 0.5 * h && p.re(0).abs() <= 0.5 + 0.01 * h;
        p.norm() < 1.0 && !on_segment
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::{abs_sq_ring_data, exhaustion_field, SorConfig};

    #[test]
    fn disc_membership_and_boundary() {
        let d = unit_disc();
        assert!(d.contains(&Point::c1(0.0, 0.0)));
        assert!(!d.contains(&Point::c1(1.0, 0.0)));
        assert!(d.contains_closure(&Point::c1(1.0, 0.0)));
        for q in d.sample_boundary(7, 64) {
            assert!((q.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_boundary_on_perimeter() {
        let s = square(2.0).unwrap();
        assert!(s.contains(&Point::c1(0.9, -0.9)));
        assert!(!s.contains(&Point::c1(1.0, 0.0)));
        for q in s.sample_boundary(3, 64) {
            let m = q.re(0).abs().max(q.im(0).abs());
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn slit_disc_excludes_exactly_the_segment() {
        let d = slit_disc();
        assert!(!d.contains(&Point::c1(0.25, 0.0)));
        assert!(d.contains(&Point::c1(0.25, 1e-9)));
        assert!(d.contains(&Point::c1(0.75, 0.0)));
        assert!(d.contains_closure(&Point::c1(0.25, 0.0)));
    }

    #[test]
    fn cantor_slit_disc_keeps_the_removed_middles() {
        let d = cantor_slit_disc(3).unwrap();
        let lv = build_level(&CantorSpec::pow2(), 3).unwrap();
        for m in lv.midpoints() {
            assert!(!d.contains(&Point::c1(m.to_f64(), 0.0)));
        }
        // the middle removed at the first generation is back in the domain
        assert!(d.contains(&Point::c1(0.0, 0.0)));
        assert!(d.contains(&Point::c1(0.0, 1.5)));
        assert!(!d.contains(&Point::c1(0.5, 0.0)));
        assert!(!d.contains(&Point::c1(2.0, 0.0)));
    }

    #[test]
    fn cantor_slit_square_membership() {
        let d = cantor_slit_square(2).unwrap();
        assert!(d.contains(&Point::c1(0.45, 0.0)));
        assert!(!d.contains(&Point::c1(0.47, 0.0)));
        assert!(d.contains(&Point::c1(0.4, 0.4)));
        assert!(!d.contains(&Point::c1(0.5, 0.0)));
    }

    #[test]
    fn hartogs_triangle_membership() {
        let d = hartogs_triangle();
        assert!(d.contains(&Point::c2((0.1, 0.0), (0.5, 0.0))));
        assert!(!d.contains(&Point::c2((0.5, 0.0), (0.1, 0.0))));
        assert!(!d.contains(&Point::c2((0.0, 0.0), (0.5, 0.0))));
        assert!(d.contains_closure(&Point::c2((0.0, 0.0), (0.5, 0.0))));
        assert!(!d.contains_closure(&Point::c2((0.6, 0.0), (0.5, 0.0))));
    }

    #[test]
    fn hartogs_boundary_avoids_the_deep_interior() {
        let d = hartogs_triangle();
        let pts = d.sample_boundary(11, 90);
        assert_eq!(pts.len(), 90);
        for q in pts {
            let az = coord_abs(&q, 0);
            let aw = coord_abs(&q, 1);
            assert!(az <= aw + 1e-12 && aw <= 1.0 + 1e-12);
            let deep = az > 1e-9 && az < aw - 1e-9 && aw < 1.0 - 1e-9;
            assert!(!deep, "boundary sample {q:?} landed in the interior");
        }
    }

    #[test]
    fn domain_spec_parse_and_serde() {
        let spec = DomainSpec::parse("cantor_slit_disc", Some(4), None).unwrap();
        assert_eq!(spec, DomainSpec::CantorSlitDisc { level: 4 });
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<DomainSpec>(&json).unwrap(), spec);
        assert!(matches!(
            DomainSpec::parse("moebius_strip", None, None),
            Err(Error::UnknownDomain(_))
        ));
        assert!(matches!(
            DomainSpec::parse("cantor_slit_disc", None, None),
            Err(Error::InvalidParameter(_))
        ));
        let named = make_domain(&DomainSpec::Disc1).unwrap();
        assert_eq!(named.name, "disc1");
        assert_eq!(named.diameter, 1.0);
    }

    #[test]
    fn probe_passes_on_disc_boundary() {
        let d = unit_disc();
        let probe = SegmentProbe::new(Point::c1(1.0, 0.0), Point::c1(-1.0, 0.0), 0.1, 5).unwrap();
        let rep = segment_check(&d, &probe).unwrap();
        assert!(rep.pass, "counterexample: {:?}", rep.counterexample);
        assert!(rep.candidates_tested > 100);
    }

    #[test]
    fn probe_fails_on_slit_point() {
        let d = slit_disc();
        let probe = SegmentProbe::new(Point::c1(0.25, 0.0), Point::c1(0.0, 1.0), 0.1, 5).unwrap();
        let rep = segment_check(&d, &probe).unwrap();
        assert!(!rep.pass);
        let ce = rep.counterexample.unwrap();
        // the witness is pushed back onto the slit
        assert_eq!(ce.translated.im(0), 0.0);
        assert!(ce.translated.re(0).abs() <= 0.5);
    }

    #[test]
    fn probe_fails_at_hartogs_origin_in_every_direction() {
        let d = hartogs_triangle();
        for dir in [
            Point::c2((1.0, 0.0), (0.0, 0.0)),
            Point::c2((0.0, 0.0), (1.0, 0.0)),
            Point::c2((0.3, 0.1), (0.5, -0.2)),
            Point::c2((0.0, 0.2), (0.0, 0.9)),
        ] {
            let probe = SegmentProbe::new(Point::origin(2), dir, 0.2, 9).unwrap();
            let rep = segment_check(&d, &probe).unwrap();
            assert!(!rep.pass, "direction {dir:?} unexpectedly passed");
            assert!(rep.counterexample.is_some());
        }
    }

    #[test]
    fn probe_passes_inward_on_hartogs_cone() {
        let d = hartogs_triangle();
        let p = Point::c2((0.5, 0.0), (0.5, 0.0));
        let probe = SegmentProbe::new(p, Point::c2((-1.0, 0.0), (0.0, 0.0)), 0.05, 9).unwrap();
        let rep = segment_check(&d, &probe).unwrap();
        assert!(rep.pass, "counterexample: {:?}", rep.counterexample);
    }

    #[test]
    fn probe_far_from_domain_is_an_error() {
        let d = unit_disc();
        let probe = SegmentProbe::new(Point::c1(10.0, 10.0), Point::c1(1.0, 0.0), 0.1, 1).unwrap();
        assert!(matches!(segment_check(&d, &probe), Err(Error::EmptyDomain(_))));
    }

    #[test]
    fn probe_dimension_mismatch() {
        let d = hartogs_triangle();
        let probe = SegmentProbe::new(Point::c1(0.0, 0.0), Point::c1(1.0, 0.0), 0.1, 1).unwrap();
        assert!(matches!(
            segment_check(&d, &probe),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn single_accumulating_point_is_exact() {
        let art = accumulating_discs(&[Point::c1(0.0, 0.1)], 10_000, 1).unwrap();
        // c = 1/4 / |ln 0.1| and the certificate is c * ln 0.1 = -1/4 exactly
        assert_eq!(art.certified_inf_segment, -0.25);
        assert!(art.certified_disc_sups[0] <= -2.5 + 1e-9);
        assert!(art.radii[0] > 0.0 && art.radii[0] < 0.05);
        assert!(art.sampled_min_segment >= -0.25);
    }

    #[test]
    fn fifty_accumulating_points_certify() {
        let pts = accumulating_points(50, 42);
        let art = accumulating_discs(&pts, 50_000, 7).unwrap();
        assert!(art.certified_inf_segment >= -0.5);
        for (j, s) in art.certified_disc_sups.iter().enumerate() {
            assert!(*s < -2.0, "disc {j} sup {s} not below -2");
        }
        for j in 0..50 {
            for k in j + 1..50 {
                let d = pts[j].dist(&pts[k]);
                assert!(
                    art.radii[j] + art.radii[k] < d,
                    "discs {j} and {k} are not disjoint"
                );
            }
        }
        let dom = accumulating_discs_domain(&art);
        assert!(!dom.contains(&pts[0]));
        assert!(dom.contains(&Point::c1(0.0, -0.5)));
    }

    #[test]
    fn accumulating_budget_exhaustion() {
        let pts = accumulating_points(5, 42);
        assert!(matches!(
            accumulating_discs(&pts, 2, 7),
            Err(Error::BudgetExhausted { at: 0 })
        ));
    }

    #[test]
    fn accumulating_rejects_segment_points() {
        assert!(matches!(
            accumulating_discs(&[Point::c1(0.3, 0.0)], 100, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn accumulating_points_deterministic() {
        assert_eq!(accumulating_points(10, 3), accumulating_points(10, 3));
    }

    #[test]
    fn slit_potential_nodes_sit_on_the_axis() {
        let prob = slit_potential_problem(3, 81).unwrap();
        let mid_row = (81 - 1) / 2;
        assert!(!prob.slit_nodes.is_empty() && prob.slit_nodes.len() <= 8);
        for &(i, j) in &prob.slit_nodes {
            assert_eq!(j, mid_row);
            assert!(prob.mask.grid.x(i).abs() <= 0.5 + 0.05);
            assert_eq!(prob.data[&prob.mask.grid.idx(i, j)], 1.0);
        }
        for &(i, j) in &prob.rim_nodes {
            assert_eq!(prob.data[&prob.mask.grid.idx(i, j)], 0.0);
            assert!(prob.mask.grid.pos(i, j).norm() >= 2.0);
        }
    }

    #[test]
    fn disc_minus_segment_mask_classes() {
        let mask = disc_minus_segment_mask(81).unwrap();
        let g = mask.grid;
        let (i, j) = g.nearest(0.3, 0.0);
        assert_eq!(mask.class_at(i, j), NodeClass::Fixed);
        let (i, j) = g.nearest(0.3, 0.25);
        assert_eq!(mask.class_at(i, j), NodeClass::Free);
        let (i, j) = g.nearest(1.0, 0.0);
        assert_eq!(mask.class_at(i, j), NodeClass::Fixed);
        let (i, j) = g.nearest(0.75, 0.0);
        assert_eq!(mask.class_at(i, j), NodeClass::Free);
    }

    #[test]
    fn hartogs_psi_domain_from_disc_exhaustion() {
        let mask = GridMask::with_fixed_ring(
            Grid::centered_square(1.0, 41).unwrap(),
            |p| p.norm() < 1.0,
        );
        let data = abs_sq_ring_data(&mask);
        let ex = exhaustion_field(&mask, &data, &SorConfig::default()).unwrap();
        let dom = hartogs_psi_domain(&ex.psi).unwrap();
        // psi(0) is about -1, so a middling w fits over the center
        assert!(dom.contains(&Point::c2((0.0, 0.0), (0.5, 0.0))));
        assert!(!dom.contains(&Point::c2((0.9, 0.0), (0.5, 0.0))));
        assert!(!dom.contains(&Point::c2((2.0, 0.0), (0.1, 0.0))));
        for q in dom.sample_boundary(13, 32) {
            let v = ex.psi.bilinear(q.re(0), q.im(0)).unwrap();
            assert!((coord_abs(&q, 1) + v).abs() < 1e-9);
        }
    }
}
