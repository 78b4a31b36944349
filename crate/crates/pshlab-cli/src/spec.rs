//! Experiment configuration: the JSON schema behind every subcommand, plus
//! the small parsers that lower flag strings into structured values.
//!
//! A spec file passed with `--spec` deserializes straight into
//! [`ExperimentSpec`] and replaces the command-line flags wholesale; the
//! `command` tag must match the invoked subcommand.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pshlab_core::dirichlet::SorConfig;
use pshlab_core::eval::Evaluator;
use pshlab_core::gallery::DomainSpec;
use pshlab_core::geom::{Ball, Point};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub command: CommandSpec,
    /// Also write the JSON report to this path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Write the produced grid field to this path as CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Nodes per axis when sampling a glued function for the CSV dump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_nodes: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command")]
pub enum CommandSpec {
    #[serde(rename = "cantor")]
    Cantor { rule: String, level: usize, c: f64, delta: f64 },
    #[serde(rename = "cover verify")]
    CoverVerify { points: Vec<Point>, family: Vec<Ball>, c: f64, delta: f64, epsilon: f64 },
    #[serde(rename = "cover build-x")]
    CoverBuildX { count: usize, c: f64, delta: f64, epsilon: f64 },
    #[serde(rename = "cover refute-y")]
    CoverRefuteY { c: f64, delta: f64, epsilon: f64, r0_exp_min: u32, r0_exp_max: u32 },
    #[serde(rename = "glue lemma2")]
    GlueLemma2 {
        domain: DomainSpec,
        function: Evaluator,
        center: Point,
        epsilon: f64,
        omega: OmegaSpec,
        seed: u64,
        samples: usize,
    },
    #[serde(rename = "glue multi")]
    GlueMulti {
        domain: DomainSpec,
        function: Evaluator,
        points: Vec<Point>,
        epsilon: f64,
        omega: OmegaSpec,
        seed: u64,
        samples: usize,
    },
    #[serde(rename = "glue cover")]
    GlueCover {
        level: usize,
        c: f64,
        function: Evaluator,
        omega: OmegaSpec,
        seed: u64,
        samples: usize,
    },
    #[serde(rename = "verify submean")]
    VerifySubmean { domain: DomainSpec, function: Evaluator, seed: u64, points: usize, tol: f64 },
    #[serde(rename = "verify laplacian")]
    VerifyLaplacian { function: Evaluator, nodes: usize, half: f64, tol: f64 },
    #[serde(rename = "verify maxgap")]
    VerifyMaxgap { level: usize, nodes: usize, sor: SorConfig, min_gap: f64 },
    #[serde(rename = "domain make")]
    DomainMake { domain: DomainSpec },
    #[serde(rename = "domain segment")]
    DomainSegment { domain: DomainSpec, point: Point, dir: Point, rho: f64, seed: u64 },
    #[serde(rename = "domain example42")]
    DomainExample42 { count: usize, budget: usize, seed: u64 },
    #[serde(rename = "domain dirichlet")]
    DomainDirichlet { level: usize, nodes: usize, sor: SorConfig },
}

/// How the glue commands obtain their modulus of continuity.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OmegaSpec {
    /// Estimate from samples of the function and take the least concave
    /// majorant of the table.
    Estimate { pairs: usize, bins: usize },
    Linear { c: f64 },
    Power { c: f64, beta: f64 },
}

pub fn command_name(c: &CommandSpec) -> &'static str {
    match c {
        CommandSpec::Cantor { .. } => "cantor",
        CommandSpec::CoverVerify { .. } => "cover verify",
        CommandSpec::CoverBuildX { .. } => "cover build-x",
        CommandSpec::CoverRefuteY { .. } => "cover refute-y",
        CommandSpec::GlueLemma2 { .. } => "glue lemma2",
        CommandSpec::GlueMulti { .. } => "glue multi",
        CommandSpec::GlueCover { .. } => "glue cover",
        CommandSpec::VerifySubmean { .. } => "verify submean",
        CommandSpec::VerifyLaplacian { .. } => "verify laplacian",
        CommandSpec::VerifyMaxgap { .. } => "verify maxgap",
        CommandSpec::DomainMake { .. } => "domain make",
        CommandSpec::DomainSegment { .. } => "domain segment",
        CommandSpec::DomainExample42 { .. } => "domain example42",
        CommandSpec::DomainDirichlet { .. } => "domain dirichlet",
    }
}

/// Whether the command can produce a grid field for `--csv`.
pub fn produces_field(c: &CommandSpec) -> bool {
    matches!(
        c,
        CommandSpec::GlueLemma2 { .. }
            | CommandSpec::GlueMulti { .. }
            | CommandSpec::GlueCover { .. }
            | CommandSpec::VerifyLaplacian { .. }
            | CommandSpec::VerifyMaxgap { .. }
            | CommandSpec::DomainDirichlet { .. }
    )
}

/// Structural checks beyond what serde enforces: enumerated names and flag
/// combinations. Value-range problems are left to the library, which
/// reports them as operation errors.
pub fn validate(spec: &ExperimentSpec) -> Result<(), String> {
    if let CommandSpec::Cantor { rule, .. } = &spec.command {
        if rule != "pow2" {
            return Err(format!("unknown thinning rule '{rule}' (expected pow2)"));
        }
    }
    if spec.csv.is_some() && !produces_field(&spec.command) {
        return Err(format!(
            "command '{}' produces no grid field; --csv does not apply",
            command_name(&spec.command)
        ));
    }
    Ok(())
}

pub fn domain_dim(d: &DomainSpec) -> usize {
    match d {
        DomainSpec::HartogsTriangle => 2,
        _ => 1,
    }
}

/// Domain names: `unit-disc`, `disc1`, `disc:R`, `square:S`, `slit-disc`,
/// `cantor-slit-disc:L`, `cantor-slit-square:L`, `hartogs`.
pub fn parse_domain(s: &str) -> Result<DomainSpec, String> {
    let norm = s.replace('_', "-");
    let (name, arg) = match norm.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (norm.as_str(), None),
    };
    let num = |a: Option<&str>| -> Result<f64, String> {
        a.ok_or_else(|| format!("domain '{name}' needs a numeric argument, e.g. {name}:0.5"))?
            .parse::<f64>()
            .map_err(|e| format!("bad argument for domain '{name}': {e}"))
    };
    let level = |a: Option<&str>| -> Result<usize, String> {
        a.ok_or_else(|| format!("domain '{name}' needs a level argument, e.g. {name}:4"))?
            .parse::<usize>()
            .map_err(|e| format!("bad level for domain '{name}': {e}"))
    };
    match name {
        "unit-disc" => Ok(DomainSpec::UnitDisc),
        "disc1" => Ok(DomainSpec::Disc1),
        "disc" => Ok(DomainSpec::Disc { radius: num(arg)? }),
        "square" => Ok(DomainSpec::Square { side: num(arg)? }),
        "slit-disc" => Ok(DomainSpec::SlitDisc),
        "cantor-slit-disc" => Ok(DomainSpec::CantorSlitDisc { level: level(arg)? }),
        "cantor-slit-square" => Ok(DomainSpec::CantorSlitSquare { level: level(arg)? }),
        "hartogs" => Ok(DomainSpec::HartogsTriangle),
        other => Err(format!("unknown domain '{other}'")),
    }
}

/// Function names: `abs2`, `neg-abs2`, `re[:VAR]`, `logdist`,
/// `distpow:BETA`. Centers sit at the origin of the ambient space.
pub fn parse_fn(s: &str, dim: usize) -> Result<Evaluator, String> {
    let norm = s.replace('_', "-");
    let (name, arg) = match norm.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (norm.as_str(), None),
    };
    match name {
        "abs2" => Ok(Evaluator::AbsSq { center: Point::origin(dim) }),
        "neg-abs2" => Ok(Evaluator::Scale {
            factor: -1.0,
            inner: Box::new(Evaluator::AbsSq { center: Point::origin(dim) }),
        }),
        "re" => {
            let var = match arg {
                Some(a) => a.parse::<usize>().map_err(|e| format!("bad variable index: {e}"))?,
                None => 0,
            };
            if var >= dim {
                return Err(format!("re:{var} out of range for complex dimension {dim}"));
            }
            Ok(Evaluator::Re { var })
        }
        "logdist" => Ok(Evaluator::LogDist { center: Point::origin(dim) }),
        "distpow" => {
            let beta = arg
                .ok_or_else(|| "distpow needs an exponent, e.g. distpow:0.5".to_string())?
                .parse::<f64>()
                .map_err(|e| format!("bad exponent for distpow: {e}"))?;
            Ok(Evaluator::DistPow { center: Point::origin(dim), beta })
        }
        other => Err(format!("unknown function '{other}'")),
    }
}

/// Comma-separated coordinates: either all `2 * dim` real coordinates, or
/// `dim` values taken as real parts with zero imaginary parts.
pub fn parse_point(s: &str, dim: usize) -> Result<Point, String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad coordinate '{t}': {e}")))
        .collect::<Result<_, _>>()?;
    let coords: Vec<f64> = if vals.len() == 2 * dim {
        vals
    } else if vals.len() == dim {
        vals.into_iter().flat_map(|re| [re, 0.0]).collect()
    } else {
        return Err(format!(
            "expected {dim} or {} coordinates, got {}",
            2 * dim,
            vals.len()
        ));
    };
    Point::from_coords(&coords).map_err(|e| e.to_string())
}

/// Semicolon-separated list of points.
pub fn parse_points(s: &str, dim: usize) -> Result<Vec<Point>, String> {
    s.split(';').map(|t| parse_point(t, dim)).collect()
}

/// Modulus names: `estimate[:PAIRS,BINS]`, `linear:C`, `power:C,BETA`.
pub fn parse_omega(s: &str) -> Result<OmegaSpec, String> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let two = |a: &str| -> Result<(f64, f64), String> {
        let (x, y) = a
            .split_once(',')
            .ok_or_else(|| format!("expected two comma-separated values, got '{a}'"))?;
        Ok((
            x.trim().parse().map_err(|e| format!("bad value '{x}': {e}"))?,
            y.trim().parse().map_err(|e| format!("bad value '{y}': {e}"))?,
        ))
    };
    match name {
        "estimate" => match arg {
            None => Ok(OmegaSpec::Estimate { pairs: 200_000, bins: 25 }),
            Some(a) => {
                let (p, b) = two(a)?;
                if p < 2.0 || b < 1.0 || p.fract() != 0.0 || b.fract() != 0.0 {
                    return Err(format!("estimate wants integer pairs,bins; got '{a}'"));
                }
                Ok(OmegaSpec::Estimate { pairs: p as usize, bins: b as usize })
            }
        },
        "linear" => {
            let c = arg
                .ok_or_else(|| "linear needs a slope, e.g. linear:1".to_string())?
                .parse::<f64>()
                .map_err(|e| format!("bad slope: {e}"))?;
            Ok(OmegaSpec::Linear { c })
        }
        "power" => {
            let (c, beta) = two(arg.ok_or_else(|| "power needs c,beta".to_string())?)?;
            Ok(OmegaSpec::Power { c, beta })
        }
        other => Err(format!("unknown modulus '{other}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_names_cover_the_gallery() {
        assert_eq!(parse_domain("disc1").unwrap(), DomainSpec::Disc1);
        assert_eq!(parse_domain("unit_disc").unwrap(), DomainSpec::UnitDisc);
        assert_eq!(parse_domain("disc:0.25").unwrap(), DomainSpec::Disc { radius: 0.25 });
        assert_eq!(
            parse_domain("cantor-slit-square:4").unwrap(),
            DomainSpec::CantorSlitSquare { level: 4 }
        );
        assert!(parse_domain("torus").is_err());
        assert!(parse_domain("disc").is_err());
    }

    #[test]
    fn point_parsing_pads_real_parts() {
        assert_eq!(parse_point("0", 1).unwrap(), Point::c1(0.0, 0.0));
        assert_eq!(parse_point("0.5,-0.25", 1).unwrap(), Point::c1(0.5, -0.25));
        assert_eq!(parse_point("0.5,0.5", 2).unwrap(), Point::c2((0.5, 0.0), (0.5, 0.0)));
        assert!(parse_point("1,2,3", 1).is_err());
    }

    #[test]
    fn omega_forms_parse() {
        assert!(matches!(
            parse_omega("estimate").unwrap(),
            OmegaSpec::Estimate { pairs: 200_000, bins: 25 }
        ));
        assert!(matches!(
            parse_omega("estimate:1000,10").unwrap(),
            OmegaSpec::Estimate { pairs: 1000, bins: 10 }
        ));
        assert!(matches!(parse_omega("linear:1").unwrap(), OmegaSpec::Linear { c } if c == 1.0));
        assert!(parse_omega("linear").is_err());
        assert!(parse_omega("estimate:7.5,3").is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ExperimentSpec {
            command: CommandSpec::Cantor { rule: "pow2".into(), level: 3, c: 13.0, delta: 1.0 },
            out: None,
            csv: None,
            csv_nodes: None,
        };
        let js = serde_json::to_string(&spec).unwrap();
        assert!(js.contains("\"command\":\"cantor\""));
        let back: ExperimentSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(command_name(&back.command), "cantor");
    }

    #[test]
    fn csv_on_a_fieldless_command_is_rejected() {
        let spec = ExperimentSpec {
            command: CommandSpec::Cantor { rule: "pow2".into(), level: 3, c: 13.0, delta: 1.0 },
            out: None,
            csv: Some("field.csv".into()),
            csv_nodes: None,
        };
        assert!(validate(&spec).is_err());
    }
}
