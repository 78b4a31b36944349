//! Constructive patching and covering toolkit for plurisubharmonic
//! functions in one and two complex variables.
//!
//! The crate builds explicit function objects ([`eval::Evaluator`]) over
//! sampled regions ([`domain::DomainModel`]), patches them to be constant
//! near chosen points or whole ball covers at certified cost
//! ([`glue`]), and checks the results numerically: submean inequalities
//! on circles, discrete Laplacians, modulus-of-continuity estimates, and
//! exact dyadic arithmetic for the Cantor-type covers that drive the
//! worst-case examples.

pub mod cantor;
pub mod cover;
pub mod dirichlet;
pub mod domain;
pub mod dyadic;
pub mod error;
pub mod eval;
pub mod gallery;
pub mod geom;
pub mod glue;
pub mod grid;
pub mod modulus;
pub mod verify;

pub use cantor::{
    build_level, cantor_cover, capacity_series, separation_margin, CantorCover, CantorLevel,
    CantorSpec, CapacitySeries, SeparationReport,
};
pub use cover::{
    construct_cover_x, cover_points, phi_sum, refute_y, verify_ps, PsParams, PsReport,
    RefuteReport,
};
pub use dirichlet::{
    abs_sq_ring_data, dirichlet_solve, exhaustion_field, ExhaustionField, SorConfig,
};
pub use domain::{ball_point, sphere_point, BoundingBox, DomainModel};
pub use dyadic::{Dyadic, DyadicInterval};
pub use error::{Error, Result};
pub use eval::Evaluator;
pub use gallery::{
    accumulating_discs, accumulating_discs_domain, accumulating_points, cantor_slit_disc,
    cantor_slit_square, disc, disc_minus_segment_mask, hartogs_psi_domain, hartogs_triangle,
    make_domain, segment_check, slit_disc, slit_potential_problem, square, unit_disc,
    AccumulatingDiscs, DomainSpec, SegmentProbe, SegmentReport, SlitPotentialProblem,
};
pub use geom::{ball_gap, distance, Ball, BallFamily, Point};
pub use glue::{
    cover_glue, error_audit, multi_point_glue, single_point_patch, CaseAudit, CoverGlueBuild,
    CoverGlueParams, GluePatchParams, MultiGlueResult, PatchCfg, PatchResult,
};
pub use grid::{sample_evaluator, Grid, GridField, GridMask, NodeClass};
pub use modulus::{concave_majorant, estimate_modulus, EmpiricalModulus, Modulus, PhiFn};
pub use verify::{
    laplacian_test, max_principle_gap, submean_test, LaplacianReport, MaxGapReport, SubmeanCfg,
    SubmeanReport,
};
