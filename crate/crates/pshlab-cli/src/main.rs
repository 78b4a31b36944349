//! `pshlab`: experiments on gluing constructions for plurisubharmonic
//! approximation. Every subcommand emits a JSON report on stdout; exit
//! status is 0 when all pass flags hold, 1 when the operation failed or a
//! property did not hold, and 2 when the invocation itself was malformed
//! (in which case nothing is written).

mod run;
mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use pshlab_core::dirichlet::SorConfig;
use pshlab_core::geom::{Ball, Point};

use crate::run::{base_provenance, handle, Provenance};
use crate::spec::{
    command_name, domain_dim, parse_domain, parse_fn, parse_omega, parse_point, parse_points,
    validate, CommandSpec, ExperimentSpec,
};

#[derive(Parser)]
#[command(name = "pshlab", version, about = "Glue, cover, and verification experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Thinning interval family: lengths, separation margins, radius sums
    #[command(name = "cantor")]
    Cantor(CantorArgs),
    /// Separated ball covers with a measure budget
    #[command(subcommand, name = "cover")]
    Cover(CoverCmd),
    /// Logarithmic max-glue constructions
    #[command(subcommand, name = "glue")]
    Glue(GlueCmd),
    /// Sampled and grid-based plurisubharmonicity checks
    #[command(subcommand, name = "verify")]
    Verify(VerifyCmd),
    /// Domain gallery: construction, boundary probes, potentials
    #[command(subcommand, name = "domain")]
    Domain(DomainCmd),
}

#[derive(Args)]
struct Common {
    /// Load the full experiment from a JSON file, replacing all other flags
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Also write the JSON report to this path
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CsvOpt {
    /// Write the produced grid field to this path as CSV
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Nodes per axis when sampling a glued function for the CSV dump
    #[arg(long, value_name = "N")]
    csv_nodes: Option<usize>,
}

#[derive(Args)]
struct CantorArgs {
    #[command(flatten)]
    common: Common,
    /// Thinning rule (pow2)
    #[arg(long)]
    rule: Option<String>,
    /// Construction depth
    #[arg(long)]
    level: Option<usize>,
    /// Separation inflation factor
    #[arg(long = "C", alias = "c")]
    c: Option<f64>,
    /// Exponent of the radius measure phi(t) = t^delta
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Subcommand)]
enum CoverCmd {
    /// Check covering, separation, and the measure budget of a given family
    #[command(name = "verify")]
    Verify(CoverVerifyArgs),
    /// Build a verified cover of the reciprocal sequence {1/j}
    #[command(name = "build-x")]
    BuildX(CoverBuildArgs),
    /// Show no single-ball cover of {0} can satisfy the conditions
    #[command(name = "refute-y")]
    RefuteY(CoverRefuteArgs),
}

#[derive(Args)]
struct CoverVerifyArgs {
    #[command(flatten)]
    common: Common,
    /// JSON file holding the points to cover (array of coordinate arrays)
    #[arg(long, value_name = "FILE")]
    points_file: Option<PathBuf>,
    /// JSON file holding the balls (array of {center, radius})
    #[arg(long, value_name = "FILE")]
    family_file: Option<PathBuf>,
    #[arg(long = "C", alias = "c")]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Measure budget
    #[arg(long = "eps")]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct CoverBuildArgs {
    #[command(flatten)]
    common: Common,
    /// How many sequence points 1/j to cover
    #[arg(long)]
    count: Option<usize>,
    #[arg(long = "C", alias = "c")]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "eps")]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct CoverRefuteArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "C", alias = "c")]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "eps")]
    epsilon: Option<f64>,
    /// Smallest tested radius exponent: r0 = 2^-k
    #[arg(long)]
    r0_exp_min: Option<u32>,
    /// Largest tested radius exponent
    #[arg(long)]
    r0_exp_max: Option<u32>,
}

#[derive(Subcommand)]
enum GlueCmd {
    /// Patch one boundary point so the result is constant nearby
    #[command(name = "lemma2")]
    Lemma2(GlueLemma2Args),
    /// Patch several points under one geometric error budget
    #[command(name = "multi")]
    Multi(GlueMultiArgs),
    /// Glue a thinning-set cover on the slit square
    #[command(name = "cover")]
    Cover(GlueCoverArgs),
}

#[derive(Args)]
struct GlueLemma2Args {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    csv: CsvOpt,
    /// Domain name, e.g. disc1 or square:1
    #[arg(long)]
    domain: Option<String>,
    /// Function name, e.g. abs2
    #[arg(long = "fn")]
    function: Option<String>,
    /// Point to patch, as comma-separated coordinates
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    /// Error budget
    #[arg(long = "eps")]
    epsilon: Option<f64>,
    /// Modulus of continuity (estimate, linear:C, power:C,B)
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Audit sample count
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct GlueMultiArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    csv: CsvOpt,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long = "fn")]
    function: Option<String>,
    /// Points to patch, semicolon-separated, e.g. "0.5,0.5;-0.5,0.5"
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    #[arg(long = "eps")]
    epsilon: Option<f64>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct GlueCoverArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    csv: CsvOpt,
    /// Thinning level; also fixes the slit-square domain
    #[arg(long)]
    level: Option<usize>,
    /// Ball inflation factor, 1 < C < 2
    #[arg(long = "C", alias = "c")]
    c: Option<f64>,
    #[arg(long = "fn")]
    function: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Sampled circle-mean test on a named function
    #[command(name = "submean")]
    Submean(VerifySubmeanArgs),
    /// Five-point discrete Laplacian sign check on a sampled grid
    #[command(name = "laplacian")]
    Laplacian(VerifyLaplacianArgs),
    /// Maximum-principle gap between slit and rim on the potential problem
    #[command(name = "maxgap")]
    Maxgap(VerifyMaxgapArgs),
}

#[derive(Args)]
struct VerifySubmeanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long = "fn")]
    function: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Interior centers to test
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct VerifyLaplacianArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    csv: CsvOpt,
    #[arg(long = "fn")]
    function: Option<String>,
    /// Nodes per axis
    #[arg(long)]
    nodes: Option<usize>,
    /// Half-width of the sampled square
    #[arg(long)]
    half: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct VerifyMaxgapArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    csv: CsvOpt,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    sor_omega: Option<f64>,
    #[arg(long)]
    sor_tol: Option<f64>,
    #[arg(long)]
    sor_max_iter: Option<usize>,
    /// Smallest acceptable inner-vs-outer maximum gap
    #[arg(long)]
    min_gap: Option<f64>,
}

#[derive(Subcommand)]
enum DomainCmd {
    /// Instantiate a gallery domain and report its basic geometry
    #[command(name = "make")]
    Make(DomainMakeArgs),
    /// Translate a boundary neighborhood along a segment and test membership
    #[command(name = "segment")]
    Segment(DomainSegmentArgs),
    /// Accumulating discs with certified sup/inf separation
    #[command(name = "example42")]
    Example42(DomainExample42Args),
    /// Solve the slit potential problem and dump the field
    #[command(name = "dirichlet")]
    Dirichlet(DomainDirichletArgs),
}

#[derive(Args)]
struct DomainMakeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    domain: Option<String>,
}

#[derive(Args)]
struct DomainSegmentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    domain: Option<String>,
    /// Base point of the probe
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Translation direction
    #[arg(long, allow_hyphen_values = true)]
    dir: Option<String>,
    /// Neighborhood radius
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DomainExample42Args {
    #[command(flatten)]
    common: Common,
    /// Number of accumulating points
    #[arg(long)]
    count: Option<usize>,
    /// Objective evaluation budget for the radius search
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DomainDirichletArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    csv: CsvOpt,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    sor_omega: Option<f64>,
    #[arg(long)]
    sor_tol: Option<f64>,
    #[arg(long)]
    sor_max_iter: Option<usize>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    timestamp_unix: u64,
    spec: &'a ExperimentSpec,
    results: Value,
    pass: bool,
    provenance: Provenance,
    error: &'a Option<String>,
}

fn req<T>(v: Option<T>, flag: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("missing required flag --{flag}"))
}

fn load_spec(path: &Path, invoked: &str) -> Result<ExperimentSpec, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read spec file {}: {e}", path.display()))?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .map_err(|e| format!("malformed spec file {}: {e}", path.display()))?;
    let name = command_name(&spec.command);
    if name != invoked {
        return Err(format!("spec file is for '{name}' but the invoked command is '{invoked}'"));
    }
    Ok(spec)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {what} file {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("malformed {what} file {}: {e}", path.display()))
}

fn sor_from(omega: Option<f64>, tol: Option<f64>, max_iter: Option<usize>) -> SorConfig {
    let base = SorConfig::default();
    SorConfig {
        omega: omega.unwrap_or(base.omega),
        tol: tol.unwrap_or(base.tol),
        max_iter: max_iter.unwrap_or(base.max_iter),
    }
}

fn lower(cli: Cli) -> Result<ExperimentSpec, String> {
    match cli.cmd {
        Cmd::Cantor(a) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "cantor");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::Cantor {
                    rule: a.rule.unwrap_or_else(|| "pow2".into()),
                    level: req(a.level, "level")?,
                    c: req(a.c, "C")?,
                    delta: a.delta.unwrap_or(1.0),
                },
                out: a.common.out,
                csv: None,
                csv_nodes: None,
            })
        }
        Cmd::Cover(CoverCmd::Verify(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "cover verify");
            }
            let points: Vec<Point> = load_json(&req(a.points_file, "points-file")?, "points")?;
            let family: Vec<Ball> = load_json(&req(a.family_file, "family-file")?, "family")?;
            Ok(ExperimentSpec {
                command: CommandSpec::CoverVerify {
                    points,
                    family,
                    c: req(a.c, "C")?,
                    delta: a.delta.unwrap_or(1.0),
                    epsilon: req(a.epsilon, "eps")?,
                },
                out: a.common.out,
                csv: None,
                csv_nodes: None,
            })
        }
        Cmd::Cover(CoverCmd::BuildX(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "cover build-x");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::CoverBuildX {
                    count: req(a.count, "count")?,
                    c: req(a.c, "C")?,
                    delta: a.delta.unwrap_or(1.0),
                    epsilon: req(a.epsilon, "eps")?,
                },
                out: a.common.out,
                csv: None,
                csv_nodes: None,
            })
        }
        Cmd::Cover(CoverCmd::RefuteY(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "cover refute-y");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::CoverRefuteY {
                    c: req(a.c, "C")?,
                    delta: a.delta.unwrap_or(1.0),
                    epsilon: req(a.epsilon, "eps")?,
                    r0_exp_min: a.r0_exp_min.unwrap_or(6),
                    r0_exp_max: a.r0_exp_max.unwrap_or(20),
                },
                out: a.common.out,
                csv: None,
                csv_nodes: None,
            })
        }
        Cmd::Glue(GlueCmd::Lemma2(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "glue lemma2");
            }
            let domain = parse_domain(&req(a.domain, "domain")?)?;
            let dim = domain_dim(&domain);
            Ok(ExperimentSpec {
                command: CommandSpec::GlueLemma2 {
                    function: parse_fn(&req(a.function, "fn")?, dim)?,
                    center: parse_point(&req(a.center, "center")?, dim)?,
                    epsilon: req(a.epsilon, "eps")?,
                    omega: parse_omega(a.omega.as_deref().unwrap_or("estimate"))?,
                    seed: req(a.seed, "seed")?,
                    samples: a.samples.unwrap_or(100_000),
                    domain,
                },
                out: a.common.out,
                csv: a.csv.csv,
                csv_nodes: a.csv.csv_nodes,
            })
        }
        Cmd::Glue(GlueCmd::Multi(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "glue multi");
            }
            let domain = parse_domain(&req(a.domain, "domain")?)?;
            let dim = domain_dim(&domain);
            Ok(ExperimentSpec {
                command: CommandSpec::GlueMulti {
                    function: parse_fn(&req(a.function, "fn")?, dim)?,
                    points: parse_points(&req(a.points, "points")?, dim)?,
                    epsilon: req(a.epsilon, "eps")?,
                    omega: parse_omega(a.omega.as_deref().unwrap_or("estimate"))?,
                    seed: req(a.seed, "seed")?,
                    samples: a.samples.unwrap_or(100_000),
                    domain,
                },
                out: a.common.out,
                csv: a.csv.csv,
                csv_nodes: a.csv.csv_nodes,
            })
        }
        Cmd::Glue(GlueCmd::Cover(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "glue cover");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::GlueCover {
                    level: req(a.level, "level")?,
                    c: req(a.c, "C")?,
                    function: parse_fn(a.function.as_deref().unwrap_or("re"), 1)?,
                    omega: parse_omega(a.omega.as_deref().unwrap_or("estimate"))?,
                    seed: req(a.seed, "seed")?,
                    samples: a.samples.unwrap_or(4000),
                },
                out: a.common.out,
                csv: a.csv.csv,
                csv_nodes: a.csv.csv_nodes,
            })
        }
        Cmd::Verify(VerifyCmd::Submean(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "verify submean");
            }
            let domain = parse_domain(&req(a.domain, "domain")?)?;
            let dim = domain_dim(&domain);
            Ok(ExperimentSpec {
                command: CommandSpec::VerifySubmean {
                    function: parse_fn(&req(a.function, "fn")?, dim)?,
                    seed: req(a.seed, "seed")?,
                    points: a.points.unwrap_or(200),
                    tol: a.tol.unwrap_or(1e-9),
                    domain,
                },
                out: a.common.out,
                csv: None,
                csv_nodes: None,
            })
        }
        Cmd::Verify(VerifyCmd::Laplacian(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "verify laplacian");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::VerifyLaplacian {
                    function: parse_fn(&req(a.function, "fn")?, 1)?,
                    nodes: a.nodes.unwrap_or(101),
                    half: a.half.unwrap_or(1.0),
                    tol: a.tol.unwrap_or(1e-8),
                },
                out: a.common.out,
                csv: a.csv.csv,
                csv_nodes: a.csv.csv_nodes,
            })
        }
        Cmd::Verify(VerifyCmd::Maxgap(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "verify maxgap");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::VerifyMaxgap {
                    level: a.level.unwrap_or(6),
                    nodes: a.nodes.unwrap_or(201),
                    sor: sor_from(a.sor_omega, a.sor_tol, a.sor_max_iter),
                    min_gap: a.min_gap.unwrap_or(0.5),
                },
                out: a.common.out,
                csv: a.csv.csv,
                csv_nodes: a.csv.csv_nodes,
            })
        }
        Cmd::Domain(DomainCmd::Make(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "domain make");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::DomainMake { domain: parse_domain(&req(a.domain, "domain")?)? },
                out: a.common.out,
                csv: None,
                csv_nodes: None,
            })
        }
        Cmd::Domain(DomainCmd::Segment(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "domain segment");
            }
            let domain = parse_domain(&req(a.domain, "domain")?)?;
            let dim = domain_dim(&domain);
            Ok(ExperimentSpec {
                command: CommandSpec::DomainSegment {
                    point: parse_point(&req(a.point, "point")?, dim)?,
                    dir: parse_point(&req(a.dir, "dir")?, dim)?,
                    rho: req(a.rho, "rho")?,
                    seed: req(a.seed, "seed")?,
                    domain,
                },
                out: a.common.out,
                csv: None,
                csv_nodes: None,
            })
        }
        Cmd::Domain(DomainCmd::Example42(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "domain example42");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::DomainExample42 {
                    count: req(a.count, "count")?,
                    budget: a.budget.unwrap_or(100_000),
                    seed: req(a.seed, "seed")?,
                },
                out: a.common.out,
                csv: None,
                csv_nodes: None,
            })
        }
        Cmd::Domain(DomainCmd::Dirichlet(a)) => {
            if let Some(p) = &a.common.spec {
                return load_spec(p, "domain dirichlet");
            }
            Ok(ExperimentSpec {
                command: CommandSpec::DomainDirichlet {
                    level: req(a.level, "level")?,
                    nodes: req(a.nodes, "nodes")?,
                    sor: sor_from(a.sor_omega, a.sor_tol, a.sor_max_iter),
                },
                out: a.common.out,
                csv: a.csv.csv,
                csv_nodes: a.csv.csv_nodes,
            })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let spec = match lower(cli) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            exit(2);
        }
    };
    if let Err(msg) = validate(&spec) {
        eprintln!("error: {msg}");
        exit(2);
    }
    let timestamp_unix =
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let (results, pass, provenance, field, error) = match handle(&spec) {
        Ok(o) => (o.results, o.pass, o.provenance, o.field, None),
        Err(e) => (Value::Null, false, base_provenance(&spec.command), None, Some(e.to_string())),
    };
    let report = Report {
        command: command_name(&spec.command),
        timestamp_unix,
        spec: &spec,
        results,
        pass,
        provenance,
        error: &error,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    let mut io_failed = false;
    if let Some(p) = &spec.out {
        if let Err(e) = fs::write(p, format!("{text}\n")) {
            eprintln!("error: writing report to {}: {e}", p.display());
            io_failed = true;
        }
    }
    if let (Some(p), Some(f)) = (&spec.csv, &field) {
        if let Err(e) = fs::write(p, f.to_csv()) {
            eprintln!("error: writing field to {}: {e}", p.display());
            io_failed = true;
        }
    }
    if error.is_some() || !pass || io_failed {
        exit(1);
    }
}
