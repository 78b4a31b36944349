//! Patching constructions: make a function constant near one boundary point
//! at a quantified cost, chain that over several points under a geometric
//! error budget, and glue over a whole separated ball cover in a single max.
//!
//! Every construction returns explicit evaluators plus measured and audited
//! error data; nothing is asserted that is not either proved by the formula
//! shape (exact floor equality, pointwise branch dominance) or checked on
//! seeded samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ball_point, sphere_point, DomainModel};
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::geom::{ball_gap, Ball, BallFamily, Point};
use crate::modulus::Modulus;

/// Sampling configuration for patch validation and error measurement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatchCfg {
    pub samples: usize,
    pub seed: u64,
    /// Slack allowed when checking that omega dominates the oscillation of
    /// u around the patch point: delta <= slack_mult * omega(d) + slack_abs.
    pub slack_mult: f64,
    pub slack_abs: f64,
}

impl PatchCfg {
    pub fn with_seed(seed: u64) -> PatchCfg {
        PatchCfg { samples: 400, seed, slack_mult: 1.05, slack_abs: 1e-9 }
    }
}

/// Derived scales of one patch: glue radius eta, log-correction slope
/// alpha, and the oscillation bound at eta that prices the whole step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GluePatchParams {
    pub eta: f64,
    pub alpha: f64,
    pub omega_eta: f64,
    pub diameter: f64,
    pub epsilon: f64,
}

impl GluePatchParams {
    /// eta = (diam^2 eps)^(1/3), alpha = 6 omega(eta) / ln(diam/eps).
    /// Since 0 < eps < diam this puts eta strictly between eps and diam.
    pub fn derive(diameter: f64, epsilon: f64, omega: &Modulus) -> Result<GluePatchParams> {
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "patch needs a positive finite diameter, got {diameter}"
            )));
        }
        if !(epsilon > 0.0 && epsilon < diameter) {
            return Err(Error::InvalidParameter(format!(
                "patch scale must satisfy 0 < eps < diameter, got eps {epsilon} at diameter {diameter}"
            )));
        }
        let eta = (diameter * diameter * epsilon).cbrt();
        let omega_eta = omega.eval(eta);
        let alpha = 6.0 * omega_eta / (diameter / epsilon).ln();
        Ok(GluePatchParams { eta, alpha, omega_eta, diameter, epsilon })
    }

    /// Worst-case |patched - original| over the region.
    pub fn error_bound(&self) -> f64 {
        4.0 * self.omega_eta
    }
}

/// Sampled evidence attached to a patch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatchCertificates {
    /// Every sampled point of the small ball evaluated to the constant,
    /// bit for bit.
    pub constant_region_exact: bool,
    /// Max over small-ball samples of inner + 3 omega(eta); nonpositive
    /// means the glue floor has the full claimed headroom there.
    pub constant_region_margin: f64,
    /// Min over seam samples of inner - floor; positive means the floor
    /// branch is strictly buried at the glue radius, so the patched
    /// function crosses the seam continuously.
    pub seam_margin: f64,
    pub constant_samples: usize,
}

#[derive(Debug)]
pub struct PatchResult {
    pub v: Evaluator,
    pub extended_domain: DomainModel,
    pub constant_region_value: f64,
    pub audited_error_bound: f64,
    pub measured_sup_error: f64,
    pub params: GluePatchParams,
    pub certificates: PatchCertificates,
}

/// Replace u by a function that is constant on the ball of radius eps at
/// `a`, agrees with u up to 4 omega(eta) everywhere, and stays
/// submean-valid on the region with that ball adjoined. `omega` must be a
/// concave modulus dominating |u(z) - u(a)|; that is validated on seeded
/// interior samples with the configured slack.
pub fn single_point_patch(
    u: &Evaluator,
    dom: &DomainModel,
    a: &Point,
    epsilon: f64,
    omega: &Modulus,
    cfg: &PatchCfg,
) -> Result<PatchResult> {
    let dim = dom.bbox.complex_dim();
    if a.complex_dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: a.complex_dim() });
    }
    if !dom.contains_closure(a) {
        return Err(Error::InvalidParameter(
            "patch point must lie in the closure of the region".into(),
        ));
    }
    if !omega.is_concave() {
        return Err(Error::InvalidParameter("patch modulus must be concave".into()));
    }
    if cfg.samples < 8 {
        return Err(Error::InvalidParameter(format!(
            "patch validation needs at least 8 samples, got {}",
            cfg.samples
        )));
    }
    let params = GluePatchParams::derive(dom.diameter, epsilon, omega)?;
    let u_a = u.eval_checked(a)?;
    if !u_a.is_finite() {
        return Err(Error::EvaluatorFailure { at: a.coords().to_vec() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let interior = dom.sample_interior(&mut rng, cfg.samples)?;
    for z in &interior {
        let dist = z.dist(a);
        let delta = (u.eval_checked(z)? - u_a).abs();
        let bound = cfg.slack_mult * omega.eval(dist) + cfg.slack_abs;
        if delta > bound {
            return Err(Error::ModulusViolation {
                z: z.coords().to_vec(),
                w: a.coords().to_vec(),
                dist,
                delta,
                bound,
            });
        }
    }

    let correction = Evaluator::LogDist { center: *a }
        .offset(-params.eta.ln())
        .scaled(params.alpha);
    let inner = u.clone().plus(Evaluator::Const(-u_a)).plus(correction);
    let floor = -2.0 * params.omega_eta;
    let v = Evaluator::BallGlue {
        center: *a,
        radius: params.eta,
        floor,
        inner: Box::new(inner.clone()),
    }
    .offset(u_a);
    let constant_region_value = u_a - 2.0 * params.omega_eta;
    let extended_domain = dom.extended_with_ball(*a, epsilon, dom.diameter + epsilon);

    let mut measured = 0.0f64;
    for z in &interior {
        measured = measured.max((v.eval_checked(z)? - u.eval_checked(z)?).abs());
    }

    let mut constant_region_exact = true;
    let mut constant_region_margin = f64::NEG_INFINITY;
    let mut constant_samples = 0usize;
    for _ in 0..cfg.samples {
        let q = ball_point(&mut rng, a, epsilon, dim);
        if !extended_domain.contains(&q) {
            continue;
        }
        constant_samples += 1;
        if v.eval_checked(&q)? != constant_region_value {
            constant_region_exact = false;
        }
        constant_region_margin =
            constant_region_margin.max(inner.eval(&q) + 3.0 * params.omega_eta);
    }
    let mut seam_margin = f64::INFINITY;
    for _ in 0..cfg.samples.min(64) {
        let q = sphere_point(&mut rng, a, params.eta, dim);
        if !dom.contains(&q) {
            continue;
        }
        seam_margin = seam_margin.min(inner.eval(&q) - floor);
    }

    Ok(PatchResult {
        v,
        extended_domain,
        constant_region_value,
        audited_error_bound: params.error_bound(),
        measured_sup_error: measured,
        params,
        certificates: PatchCertificates {
            constant_region_exact,
            constant_region_margin,
            seam_margin,
            constant_samples,
        },
    })
}

#[derive(Debug)]
pub struct MultiGlueResult {
    pub v: Evaluator,
    /// Pairwise disjoint constancy balls, one per requested point, in the
    /// order the points were given.
    pub balls: BallFamily,
    pub per_step_bounds: Vec<f64>,
    pub per_step_measured: Vec<f64>,
    pub total_bound: f64,
    pub measured_sup_error: f64,
    pub extended_domain: DomainModel,
}

/// Patch u at every listed point in order, spending at most a 2^-j slice
/// of `epsilon` at step j, so the stack of patches moves u by less than
/// epsilon in total. Each point receives its own constancy ball; radii are
/// capped by half the distance to the other points and to the earlier
/// balls, which keeps the family pairwise disjoint, and each new glue
/// sphere must clear the earlier glue spheres so that the widened modulus
/// passed down the chain stays valid where the next patch looks.
pub fn multi_point_glue(
    u: &Evaluator,
    dom: &DomainModel,
    points: &[Point],
    epsilon: f64,
    omega: &Modulus,
    cfg: &PatchCfg,
) -> Result<MultiGlueResult> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("need at least one point to patch".into()));
    }
    let dim = dom.bbox.complex_dim();
    for (i, p) in points.iter().enumerate() {
        if p.complex_dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.complex_dim() });
        }
        if !dom.contains_closure(p) {
            return Err(Error::InvalidParameter(format!(
                "point {i} lies outside the closure of the region"
            )));
        }
        for q in &points[..i] {
            if p.dist(q) == 0.0 {
                return Err(Error::InvalidParameter(format!("point {i} repeats an earlier point")));
            }
        }
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "error budget must be positive, got {epsilon}"
        )));
    }
    if !omega.is_concave() {
        return Err(Error::InvalidParameter("patch modulus must be concave".into()));
    }

    let mut v = u.clone();
    let mut region = dom.clone();
    let mut omega_j = omega.clone();
    let mut balls: Vec<Ball> = Vec::new();
    // (center, glue radius, oscillation at that radius) of earlier steps
    let mut glue_spheres: Vec<(Point, f64, f64)> = Vec::new();
    let mut per_step_bounds = Vec::new();
    let mut per_step_measured = Vec::new();

    for (idx, a) in points.iter().enumerate() {
        let j = idx as i32 + 1;
        // 4 omega_j(eta_j) <= 2^-j eps once eta_j stays under eta_max
        let target = epsilon * 2f64.powi(-j - 2);
        let eta_max = omega_j.inverse(target)?;
        if !(eta_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "modulus cannot meet the step budget {target}"
            )));
        }
        let diam_j = region.diameter;
        let eta_to_cap = |eta: f64| eta.powi(3) / (diam_j * diam_j);
        let mut cap = 0.45 * diam_j;
        if eta_max.is_finite() {
            // 0.999 keeps the rederived eta under eta_max through rounding
            cap = cap.min(eta_to_cap(0.999 * eta_max));
        }
        for p in points {
            let d = p.dist(a);
            if d > 0.0 {
                cap = cap.min(0.5 * d);
            }
        }
        for b in &balls {
            cap = cap.min(0.5 * (a.dist(b.center()) - b.radius()));
        }
        for &(c, eta_k, osc_k) in &glue_spheres {
            if osc_k == 0.0 {
                // that step glued a locally constant function; it left no
                // log seam behind, so it does not constrain this one
                continue;
            }
            let d = a.dist(&c);
            if d <= eta_k {
                return Err(Error::DisjointnessFailure {
                    at: a.coords().to_vec(),
                    gap: d - eta_k,
                });
            }
            cap = cap.min(eta_to_cap(d - eta_k));
        }
        if !(cap > 1e-300) {
            return Err(Error::DisjointnessFailure { at: a.coords().to_vec(), gap: cap });
        }
        let mut eps_j = cap;
        for _ in 0..200 {
            let near_sphere = points
                .iter()
                .any(|p| (p.dist(a) - eps_j).abs() <= 1e-3 * eps_j);
            if !near_sphere {
                break;
            }
            eps_j *= 0.99;
        }

        let step_cfg = PatchCfg {
            seed: cfg.seed ^ (j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            ..cfg.clone()
        };
        let step = single_point_patch(&v, &region, a, eps_j, &omega_j, &step_cfg)?;
        let slice = epsilon * 2f64.powi(-j);
        if step.audited_error_bound > slice * (1.0 + 1e-12) {
            return Err(Error::CertificateFailure(format!(
                "step {j} bound {} exceeds its budget slice {slice}",
                step.audited_error_bound
            )));
        }
        per_step_bounds.push(step.audited_error_bound);
        per_step_measured.push(step.measured_sup_error);
        if step.params.alpha > 0.0 {
            omega_j = Modulus::sum(vec![
                omega_j,
                Modulus::linear(step.params.alpha / step.params.eta)?,
            ])?;
        }
        glue_spheres.push((*a, step.params.eta, step.params.omega_eta));
        v = step.v;
        region = step.extended_domain;
        balls.push(Ball::new(*a, eps_j)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xfeed);
    let mut measured = 0.0f64;
    for z in dom.sample_interior(&mut rng, cfg.samples)? {
        measured = measured.max((v.eval_checked(&z)? - u.eval_checked(&z)?).abs());
    }

    Ok(MultiGlueResult {
        v,
        balls: BallFamily::new(balls)?,
        total_bound: per_step_bounds.iter().sum(),
        per_step_bounds,
        per_step_measured,
        measured_sup_error: measured,
        extended_domain: region,
    })
}

/// Validated inputs for the cover-driven glue: a separated ball family, an
/// inflation constant strictly between 1 and 2, a concave modulus, and the
/// derived error budget sum omega(r_j) ln(lambda/r_j).
#[derive(Clone, Debug)]
pub struct CoverGlueParams {
    pub cover: BallFamily,
    pub c: f64,
    pub omega: Modulus,
    /// Scale normalizer: max(1, diameter + 2 c r_max), so every audited
    /// point satisfies |z - center_j| <= lambda_eff.
    pub lambda_eff: f64,
    pub budget: f64,
    pub kappa: Vec<f64>,
    /// Whether even the c-inflated balls are pairwise disjoint; branch
    /// dominance only holds under this stronger separation.
    pub inflated_disjoint: bool,
}

impl CoverGlueParams {
    pub fn new(cover: BallFamily, c: f64, omega: Modulus, dom: &DomainModel) -> Result<CoverGlueParams> {
        if cover.0.is_empty() {
            return Err(Error::EmptyDomain("cover has no balls".into()));
        }
        if !(1.0 < c && c < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "inflation must satisfy 1 < c < 2, got {c}"
            )));
        }
        if !omega.is_concave() {
            return Err(Error::InvalidParameter("cover glue needs a concave modulus".into()));
        }
        let n = cover.0.len();
        let mut inflated_disjoint = true;
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue;
                }
                let gap = ball_gap(&cover.0[j], &cover.0[k], c)?;
                if gap <= 0.0 {
                    return Err(Error::DisjointnessFailure {
                        at: cover.0[k].center().coords().to_vec(),
                        gap,
                    });
                }
                let d = cover.0[j].center().dist(cover.0[k].center());
                if d <= c * (cover.0[j].radius() + cover.0[k].radius()) {
                    inflated_disjoint = false;
                }
            }
        }
        let r_max = cover.max_radius();
        let lambda_eff = (dom.diameter + 2.0 * c * r_max).max(1.0);
        let cap = lambda_eff / std::f64::consts::E;
        for b in &cover.0 {
            if b.radius() > cap {
                return Err(Error::InvalidParameter(format!(
                    "ball radius {} exceeds the scale cap {cap}",
                    b.radius()
                )));
            }
        }
        let kappa = cover
            .0
            .iter()
            .map(|b| 2.0 / c.ln() * omega.eval(c * b.radius()))
            .collect();
        let budget = cover
            .0
            .iter()
            .map(|b| omega.eval(b.radius()) * (lambda_eff / b.radius()).ln())
            .sum();
        Ok(CoverGlueParams { cover, c, omega, lambda_eff, budget, kappa, inflated_disjoint })
    }

    /// The global coefficient in front of the budget: 2c / ln c.
    pub fn error_coefficient(&self) -> f64 {
        2.0 * self.c / self.c.ln()
    }
}

#[derive(Debug)]
pub struct CoverGlueBuild {
    pub v: Evaluator,
    /// Per-ball branch: its glue plus the other balls' log corrections.
    pub branches: Vec<Evaluator>,
    pub glues: Vec<Evaluator>,
    pub corrections: Vec<Evaluator>,
    pub floors: Vec<f64>,
    /// Max over sampled inflated-ball points of the relative difference
    /// |v - branch_j|: each branch should dominate on its own inflated
    /// ball up to summation roundoff. None when the inflated balls
    /// overlap, because dominance is not guaranteed there.
    pub dominance_max_diff: Option<f64>,
    /// Every sampled small-ball point saw its glue exactly at the floor.
    pub constancy_exact: bool,
    pub sup_bound: f64,
}

/// Glue u over every cover ball at once: each branch lowers u to a
/// constant on its own ball, pays a log correction on the inflated shell,
/// and adds the other balls' corrections so that the max of all branches
/// stays within (2c/ln c) * budget of u.
pub fn cover_glue(
    u: &Evaluator,
    dom: &DomainModel,
    params: &CoverGlueParams,
    cfg: &PatchCfg,
) -> Result<CoverGlueBuild> {
    let dim = dom.bbox.complex_dim();
    let n = params.cover.0.len();
    if let Some(b) = params.cover.0.first() {
        if b.center().complex_dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: b.center().complex_dim() });
        }
    }

    let mut pieces = Vec::with_capacity(n);
    let mut floors = Vec::with_capacity(n);
    for (j, b) in params.cover.0.iter().enumerate() {
        let u_c = u.eval_checked(&b.center())?;
        if !u_c.is_finite() {
            return Err(Error::EvaluatorFailure { at: b.center().coords().to_vec() });
        }
        let cr = params.c * b.radius();
        pieces.push(
            Evaluator::LogDist { center: *b.center() }
                .offset(-cr.ln())
                .scaled(params.kappa[j]),
        );
        floors.push(u_c - params.omega.eval(cr));
    }

    let mut glues = Vec::with_capacity(n);
    let mut branches = Vec::with_capacity(n);
    for (j, b) in params.cover.0.iter().enumerate() {
        let glue = Evaluator::BallGlue {
            center: *b.center(),
            radius: params.c * b.radius(),
            floor: floors[j],
            inner: Box::new(u.clone().plus(pieces[j].clone())),
        };
        glues.push(glue.clone());
        let mut branch = glue;
        for (k, piece) in pieces.iter().enumerate() {
            if k != j {
                branch = branch.plus(piece.clone());
            }
        }
        branches.push(branch);
    }
    let v = Evaluator::Max(branches.clone());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let per_ball = (cfg.samples / n).max(16);
    let mut dominance_max_diff = 0.0f64;
    let mut constancy_exact = true;
    for (j, b) in params.cover.0.iter().enumerate() {
        for s in 0..per_ball {
            let q = if s == 0 {
                *b.center()
            } else {
                ball_point(&mut rng, b.center(), params.c * b.radius(), dim)
            };
            if params.inflated_disjoint {
                let vq = v.eval_checked(&q)?;
                let bq = branches[j].eval_checked(&q)?;
                dominance_max_diff =
                    dominance_max_diff.max((vq - bq).abs() / vq.abs().max(1.0));
            }
            if q.dist(b.center()) <= b.radius() && glues[j].eval(&q) != floors[j] {
                constancy_exact = false;
            }
        }
    }

    Ok(CoverGlueBuild {
        v,
        branches,
        glues,
        corrections: pieces,
        floors,
        dominance_max_diff: params.inflated_disjoint.then_some(dominance_max_diff),
        constancy_exact,
        sup_bound: params.error_coefficient() * params.budget,
    })
}

/// One audited sample class and its allowed deviation window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseCheck {
    pub label: String,
    pub count: usize,
    pub max_deviation: f64,
    pub min_deviation: f64,
    pub upper_allowance: f64,
    pub lower_allowance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseAudit {
    pub cases: Vec<CaseCheck>,
    pub sup_abs_deviation: f64,
    pub sup_bound: f64,
    pub pass: bool,
}

/// Classify seeded samples (interior plus per-ball) by which part of the
/// glue they see and check the deviation v - u against that part's window:
/// log branch and floor branch inside an inflated ball, nonnegative and
/// budget-bounded outside all of them. The windows assume the inflated
/// balls are pairwise disjoint, so overlapping covers are rejected.
pub fn error_audit(
    u: &Evaluator,
    build: &CoverGlueBuild,
    params: &CoverGlueParams,
    dom: &DomainModel,
    cfg: &PatchCfg,
) -> Result<CaseAudit> {
    if !params.inflated_disjoint {
        return Err(Error::InvalidParameter(
            "deviation windows need pairwise disjoint inflated balls".into(),
        ));
    }
    let dim = dom.bbox.complex_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa0d17);
    let mut samples = dom.sample_interior(&mut rng, cfg.samples)?;
    let per_ball = (cfg.samples / params.cover.0.len()).clamp(8, 200);
    for b in &params.cover.0 {
        for _ in 0..per_ball {
            samples.push(ball_point(&mut rng, b.center(), params.c * b.radius(), dim));
            samples.push(ball_point(&mut rng, b.center(), b.radius(), dim));
        }
    }

    let coeff = params.error_coefficient();
    let omega_cr_max = params
        .cover
        .0
        .iter()
        .map(|b| params.omega.eval(params.c * b.radius()))
        .fold(0.0f64, f64::max);
    let mut max_abs_u = 0.0f64;
    for q in &samples {
        max_abs_u = max_abs_u.max(u.eval_checked(q)?.abs());
    }
    let ftol = 1e-9 * (1.0 + params.budget + max_abs_u);
    let upper = coeff * params.budget + ftol;

    // label, lower allowance, count, max dev, min dev
    let mut cases = [
        ("inflated_log_branch", -2.0 * omega_cr_max - ftol, 0usize, f64::NEG_INFINITY, f64::INFINITY),
        ("inflated_floor_branch", -2.0 * omega_cr_max - ftol, 0usize, f64::NEG_INFINITY, f64::INFINITY),
        ("outside_cover", -ftol, 0usize, f64::NEG_INFINITY, f64::INFINITY),
    ];
    let mut sup_abs = 0.0f64;
    for q in &samples {
        let dev = build.v.eval_checked(q)? - u.eval_checked(q)?;
        sup_abs = sup_abs.max(dev.abs());
        let hit = params
            .cover
            .0
            .iter()
            .position(|b| q.dist(b.center()) <= params.c * b.radius());
        let slot = match hit {
            Some(j) if build.glues[j].eval(q) == build.floors[j] => 1,
            Some(_) => 0,
            None => 2,
        };
        cases[slot].2 += 1;
        cases[slot].3 = cases[slot].3.max(dev);
        cases[slot].4 = cases[slot].4.min(dev);
    }

    let case_checks: Vec<CaseCheck> = cases
        .iter()
        .map(|&(label, lower, count, max_dev, min_dev)| {
            let pass = count == 0 || (max_dev <= upper && min_dev >= lower);
            CaseCheck {
                label: label.to_string(),
                count,
                max_deviation: max_dev,
                min_deviation: min_dev,
                upper_allowance: upper,
                lower_allowance: lower,
                pass,
            }
        })
        .collect();
    let pass = case_checks.iter().all(|c| c.pass) && sup_abs <= upper;
    Ok(CaseAudit {
        cases: case_checks,
        sup_abs_deviation: sup_abs,
        sup_bound: coeff * params.budget,
        pass,
    })
}
