//! Command dispatch: lowers an [`ExperimentSpec`] onto the library
//! operations and packages the outcome for the JSON report.

use serde::Serialize;
use serde_json::{json, Value};

use pshlab_core::cantor::{build_level, cantor_cover, capacity_series, separation_margin};
use pshlab_core::cover::{construct_cover_x, phi_sum, refute_y, verify_ps, PsParams};
use pshlab_core::dirichlet::dirichlet_solve;
use pshlab_core::domain::DomainModel;
use pshlab_core::eval::Evaluator;
use pshlab_core::gallery::{
    accumulating_discs, accumulating_points, cantor_slit_square, make_domain, segment_check,
    slit_potential_problem, SegmentProbe,
};
use pshlab_core::geom::{distance, BallFamily, Point};
use pshlab_core::glue::{
    cover_glue, error_audit, multi_point_glue, single_point_patch, CoverGlueParams, PatchCfg,
};
use pshlab_core::grid::{sample_evaluator, Grid, GridField};
use pshlab_core::modulus::{concave_majorant, estimate_modulus, Modulus, PhiFn};
use pshlab_core::verify::{laplacian_test, max_principle_gap, submean_test, SubmeanCfg};
use pshlab_core::{CantorSpec, Error, Result};

use crate::spec::{CommandSpec, ExperimentSpec, OmegaSpec};

/// Reproducibility record attached to every report.
#[derive(Debug, Default, Serialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub grid_spacing: Option<f64>,
}

pub struct RunOutput {
    pub results: Value,
    pub pass: bool,
    pub provenance: Provenance,
    pub field: Option<GridField>,
}

/// Seed echo for reports whose run failed before producing provenance.
pub fn base_provenance(cmd: &CommandSpec) -> Provenance {
    let seed = match cmd {
        CommandSpec::GlueLemma2 { seed, .. }
        | CommandSpec::GlueMulti { seed, .. }
        | CommandSpec::GlueCover { seed, .. }
        | CommandSpec::VerifySubmean { seed, .. }
        | CommandSpec::DomainSegment { seed, .. }
        | CommandSpec::DomainExample42 { seed, .. } => Some(*seed),
        _ => None,
    };
    Provenance { seed, ..Provenance::default() }
}

fn resolve_omega(
    omega: &OmegaSpec,
    u: &Evaluator,
    dom: &DomainModel,
    seed: u64,
) -> Result<Modulus> {
    match omega {
        OmegaSpec::Estimate { pairs, bins } => {
            let emp = estimate_modulus(u, dom, *pairs, *bins, seed)?;
            concave_majorant(&emp)
        }
        OmegaSpec::Linear { c } => Modulus::linear(*c),
        OmegaSpec::Power { c, beta } => Modulus::power(*c, *beta),
    }
}

/// Sample a glued function over a square grid covering the domain; nodes
/// outside the membership predicate dump as `undef`.
fn field_over(v: &Evaluator, dom: &DomainModel, nodes: usize) -> Result<GridField> {
    let grid = Grid::centered_square(dom.diameter, nodes)?;
    let member = |p: &Point| dom.contains(p);
    Ok(sample_evaluator(v, grid, Some(&member)))
}

pub fn handle(spec: &ExperimentSpec) -> Result<RunOutput> {
    let csv_nodes = spec.csv_nodes.unwrap_or(101);
    let want_field = spec.csv.is_some();
    match &spec.command {
        CommandSpec::Cantor { rule: _, level, c, delta } => {
            let cspec = CantorSpec::pow2();
            let lv = build_level(&cspec, *level)?;
            let cov = cantor_cover(&cspec, *level)?;
            let sep = separation_margin(&cov, *c)?;
            let fam = cov.to_ball_family()?;
            let ps = phi_sum(&fam, &PhiFn::Power { delta: *delta });
            let series = capacity_series(&cspec, 40)?;
            let pass = sep.separated;
            Ok(RunOutput {
                results: json!({
                    "level": level,
                    "intervals": lv.intervals.len(),
                    "interval_length": lv.length().to_f64(),
                    "interval_length_exact": lv.length(),
                    "separation": sep,
                    "radius_sum": cov.radius_sum().to_f64(),
                    "radius_sum_exact": cov.radius_sum(),
                    "phi_sum": ps,
                    "capacity_partial_sum": series.partial_sum,
                    "capacity_tail_bound": series.tail_bound,
                }),
                pass,
                provenance: Provenance::default(),
                field: None,
            })
        }
        CommandSpec::CoverVerify { points, family, c, delta, epsilon } => {
            let fam = BallFamily::new(family.clone())?;
            let px = PsParams::new(*c, PhiFn::Power { delta: *delta }, *epsilon)?;
            let rep = verify_ps(points, &fam, &px)?;
            let pass = rep.pass;
            Ok(RunOutput {
                results: json!({ "report": rep, "balls": fam.len(), "points": points.len() }),
                pass,
                provenance: Provenance::default(),
                field: None,
            })
        }
        CommandSpec::CoverBuildX { count, c, delta, epsilon } => {
            let px = PsParams::new(*c, PhiFn::Power { delta: *delta }, *epsilon)?;
            let fam = construct_cover_x(*count, &px)?;
            let xs: Vec<Point> = (1..=*count).map(|j| Point::c1(1.0 / j as f64, 0.0)).collect();
            let rep = verify_ps(&xs, &fam, &px)?;
            let pass = rep.pass;
            Ok(RunOutput {
                results: json!({ "family": fam, "report": rep, "count": count }),
                pass,
                provenance: Provenance::default(),
                field: None,
            })
        }
        CommandSpec::CoverRefuteY { c, delta, epsilon, r0_exp_min, r0_exp_max } => {
            if r0_exp_min > r0_exp_max {
                return Err(Error::InvalidParameter(format!(
                    "empty radius grid: 2^-{r0_exp_min} .. 2^-{r0_exp_max}"
                )));
            }
            let py = PsParams::new(*c, PhiFn::Power { delta: *delta }, *epsilon)?;
            let r0_grid: Vec<f64> =
                (*r0_exp_min..=*r0_exp_max).map(|k| 0.5f64.powi(k as i32)).collect();
            let rep = refute_y(&py, &r0_grid)?;
            let pass = rep.refuted && rep.misses.is_empty();
            Ok(RunOutput {
                results: json!({ "report": rep, "r0_grid": r0_grid }),
                pass,
                provenance: Provenance::default(),
                field: None,
            })
        }
        CommandSpec::GlueLemma2 { domain, function, center, epsilon, omega, seed, samples } => {
            let dom = make_domain(domain)?;
            let omega_m = resolve_omega(omega, function, &dom, *seed)?;
            let mut cfg = PatchCfg::with_seed(*seed);
            cfg.samples = *samples;
            let res = single_point_patch(function, &dom, center, *epsilon, &omega_m, &cfg)?;
            let pass = res.certificates.constant_region_exact
                && res.measured_sup_error <= res.audited_error_bound;
            let field = if want_field {
                Some(field_over(&res.v, &res.extended_domain, csv_nodes)?)
            } else {
                None
            };
            Ok(RunOutput {
                results: json!({
                    "omega": omega_m,
                    "params": res.params,
                    "certificates": res.certificates,
                    "constant_region_value": res.constant_region_value,
                    "audited_error_bound": res.audited_error_bound,
                    "measured_sup_error": res.measured_sup_error,
                    "v": res.v,
                }),
                pass,
                provenance: Provenance {
                    seed: Some(*seed),
                    samples: Some(*samples),
                    grid_spacing: None,
                },
                field,
            })
        }
        CommandSpec::GlueMulti { domain, function, points, epsilon, omega, seed, samples } => {
            let dom = make_domain(domain)?;
            let omega_m = resolve_omega(omega, function, &dom, *seed)?;
            let mut cfg = PatchCfg::with_seed(*seed);
            cfg.samples = *samples;
            let res = multi_point_glue(function, &dom, points, *epsilon, &omega_m, &cfg)?;
            let pass = res.total_bound <= *epsilon
                && res.measured_sup_error <= res.total_bound + 1e-12;
            let field = if want_field {
                Some(field_over(&res.v, &res.extended_domain, csv_nodes)?)
            } else {
                None
            };
            Ok(RunOutput {
                results: json!({
                    "omega": omega_m,
                    "balls": res.balls,
                    "per_step_bounds": res.per_step_bounds,
                    "per_step_measured": res.per_step_measured,
                    "total_bound": res.total_bound,
                    "measured_sup_error": res.measured_sup_error,
                    "v": res.v,
                }),
                pass,
                provenance: Provenance {
                    seed: Some(*seed),
                    samples: Some(*samples),
                    grid_spacing: None,
                },
                field,
            })
        }
        CommandSpec::GlueCover { level, c, function, omega, seed, samples } => {
            let dom = cantor_slit_square(*level)?;
            let fam = cantor_cover(&CantorSpec::pow2(), *level)?.to_ball_family()?;
            let omega_m = resolve_omega(omega, function, &dom, *seed)?;
            let params = CoverGlueParams::new(fam, *c, omega_m, &dom)?;
            let mut cfg = PatchCfg::with_seed(*seed);
            cfg.samples = *samples;
            let build = cover_glue(function, &dom, &params, &cfg)?;
            let audit = error_audit(function, &build, &params, &dom, &cfg)?;
            let pass = params.inflated_disjoint
                && build.constancy_exact
                && audit.pass
                && audit.sup_abs_deviation <= audit.sup_bound;
            let field =
                if want_field { Some(field_over(&build.v, &dom, csv_nodes)?) } else { None };
            Ok(RunOutput {
                results: json!({
                    "omega": params.omega,
                    "balls": params.cover.len(),
                    "budget": params.budget,
                    "lambda_eff": params.lambda_eff,
                    "kappa": params.kappa,
                    "inflated_disjoint": params.inflated_disjoint,
                    "floors": build.floors,
                    "sup_bound": build.sup_bound,
                    "dominance_max_diff": build.dominance_max_diff,
                    "constancy_exact": build.constancy_exact,
                    "audit": audit,
                }),
                pass,
                provenance: Provenance {
                    seed: Some(*seed),
                    samples: Some(*samples),
                    grid_spacing: None,
                },
                field,
            })
        }
        CommandSpec::VerifySubmean { domain, function, seed, points, tol } => {
            let dom = make_domain(domain)?;
            let mut cfg = SubmeanCfg::with_seed(*seed);
            cfg.points = *points;
            cfg.tol = *tol;
            let rep = submean_test(function, &dom, &cfg)?;
            let pass = rep.pass;
            Ok(RunOutput {
                results: json!({ "report": rep, "cfg": cfg, "evidence": "sampled" }),
                pass,
                provenance: Provenance {
                    seed: Some(*seed),
                    samples: Some(*points),
                    grid_spacing: None,
                },
                field: None,
            })
        }
        CommandSpec::VerifyLaplacian { function, nodes, half, tol } => {
            let grid = Grid::centered_square(*half, *nodes)?;
            let field = sample_evaluator(function, grid, None);
            let rep = laplacian_test(&field, *tol)?;
            let pass = rep.pass;
            Ok(RunOutput {
                results: json!({ "report": rep, "evidence": "sampled" }),
                pass,
                provenance: Provenance {
                    seed: None,
                    samples: None,
                    grid_spacing: Some(grid.h),
                },
                field: Some(field),
            })
        }
        CommandSpec::VerifyMaxgap { level, nodes, sor, min_gap } => {
            let prob = slit_potential_problem(*level, *nodes)?;
            let field = dirichlet_solve(&prob.mask, &prob.data, sor)?;
            let grid = field.grid;
            let inner: Vec<Point> =
                prob.slit_nodes.iter().map(|&(i, j)| grid.pos(i, j)).collect();
            let outer: Vec<Point> = prob.rim_nodes.iter().map(|&(i, j)| grid.pos(i, j)).collect();
            let rep = max_principle_gap(&field, &inner, &outer)?;
            let pass = rep.gap > *min_gap;
            Ok(RunOutput {
                results: json!({
                    "report": rep,
                    "slit_nodes": prob.slit_nodes.len(),
                    "rim_nodes": prob.rim_nodes.len(),
                    "min_gap_required": min_gap,
                }),
                pass,
                provenance: Provenance {
                    seed: None,
                    samples: None,
                    grid_spacing: Some(grid.h),
                },
                field: Some(field),
            })
        }
        CommandSpec::DomainMake { domain } => {
            let dom = make_domain(domain)?;
            Ok(RunOutput {
                results: json!({
                    "name": dom.name,
                    "complex_dim": dom.bbox.complex_dim(),
                    "diameter": dom.diameter,
                }),
                pass: true,
                provenance: Provenance::default(),
                field: None,
            })
        }
        CommandSpec::DomainSegment { domain, point, dir, rho, seed } => {
            let dom = make_domain(domain)?;
            let probe = SegmentProbe::new(point.clone(), dir.clone(), *rho, *seed)?;
            let rep = segment_check(&dom, &probe)?;
            let pass = rep.pass;
            Ok(RunOutput {
                results: json!({ "report": rep, "evidence": "sampled" }),
                pass,
                provenance: Provenance {
                    seed: Some(*seed),
                    samples: None,
                    grid_spacing: None,
                },
                field: None,
            })
        }
        CommandSpec::DomainExample42 { count, budget, seed } => {
            let pts = accumulating_points(*count, *seed);
            let art = accumulating_discs(&pts, *budget, *seed)?;
            let mut disjoint = true;
            for j in 0..art.points.len() {
                for k in j + 1..art.points.len() {
                    if distance(&art.points[j], &art.points[k])? <= art.radii[j] + art.radii[k] {
                        disjoint = false;
                    }
                }
            }
            let max_disc_sup =
                art.certified_disc_sups.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let pass = disjoint && max_disc_sup < art.certified_inf_segment;
            Ok(RunOutput {
                results: json!({
                    "points": art.points,
                    "radii": art.radii,
                    "coefficients": art.coefficients,
                    "certified_inf_segment": art.certified_inf_segment,
                    "certified_disc_sups": art.certified_disc_sups,
                    "sampled_min_segment": art.sampled_min_segment,
                    "max_disc_sup": max_disc_sup,
                    "disjoint": disjoint,
                }),
                pass,
                provenance: Provenance {
                    seed: Some(*seed),
                    samples: Some(*budget),
                    grid_spacing: None,
                },
                field: None,
            })
        }
        CommandSpec::DomainDirichlet { level, nodes, sor } => {
            let prob = slit_potential_problem(*level, *nodes)?;
            let field = dirichlet_solve(&prob.mask, &prob.data, sor)?;
            let grid = field.grid;
            let mut free_min = f64::INFINITY;
            let mut free_max = f64::NEG_INFINITY;
            let mut residual = 0.0f64;
            for j in 1..grid.ny - 1 {
                for i in 1..grid.nx - 1 {
                    let (Some(c), Some(l), Some(r), Some(d), Some(u)) = (
                        field.value(i, j),
                        field.value(i - 1, j),
                        field.value(i + 1, j),
                        field.value(i, j - 1),
                        field.value(i, j + 1),
                    ) else {
                        continue;
                    };
                    free_min = free_min.min(c);
                    free_max = free_max.max(c);
                    if !prob.data.contains_key(&grid.idx(i, j)) {
                        residual = residual.max((l + r + d + u - 4.0 * c).abs());
                    }
                }
            }
            Ok(RunOutput {
                results: json!({
                    "grid": grid,
                    "slit_nodes": prob.slit_nodes.len(),
                    "rim_nodes": prob.rim_nodes.len(),
                    "value_min": free_min,
                    "value_max": free_max,
                    "residual": residual,
                }),
                pass: true,
                provenance: Provenance {
                    seed: None,
                    samples: None,
                    grid_spacing: Some(grid.h),
                },
                field: Some(field),
            })
        }
    }
}
