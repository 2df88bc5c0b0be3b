//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every rejection
//! names the offending key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Structured { n: usize },
    File { path: PathBuf },
    AllBoundaryCell { triangles: usize },
    BoundaryStrip { n: usize, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Mms,
    Zero,
    StokesLimit,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Mms => "mms",
            Problem::Zero => "zero",
            Problem::StokesLimit => "stokes-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub final_time: f64,
    pub steps: usize,
    pub pred_tol: f64,
    pub corr_tol: f64,
    pub max_iter: usize,
    pub problem: Problem,
    pub out: PathBuf,
    pub emit_fields: bool,
    /// Mesh sizes for the refinement studies.
    pub refinements: Vec<usize>,
    /// Steps per mesh subdivision in refinement studies.
    pub steps_per_n: f64,
    pub energy_limit: f64,
    pub moment_limit: f64,
}

pub const KEYS: &[&str] = &[
    "mesh",
    "n",
    "mesh_file",
    "triangles",
    "omega",
    "final_time",
    "steps",
    "tol",
    "pred_tol",
    "corr_tol",
    "max_iter",
    "problem",
    "out",
    "emit_fields",
    "refinements",
    "steps_per_n",
    "energy_limit",
    "moment_limit",
];

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub steps: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub emit_fields: bool,
}

fn bad(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config { key: key.to_string(), message: message.into() }
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(bad(line, format!("line {}: expected key = value", i + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(bad(k, format!("line {}: unknown key", i + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(bad(k, format!("line {}: duplicate key", i + 1)));
        }
    }
    Ok(map)
}

struct Table(BTreeMap<String, String>);

impl Table {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, format!("cannot parse {v:?}"))),
        }
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.0.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(bad(key, format!("expected true or false, got {v:?}"))),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, format!("must be positive, got {v}")))
    }
}

fn tolerance(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(bad(key, format!("must lie in (0, 1), got {v}")))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<usize, CliError> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(bad(key, "must be at least 1"))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path, overrides: &Overrides, default_refinements: &[usize]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text, overrides, default_refinements)
    }

    pub fn from_text(text: &str, overrides: &Overrides, default_refinements: &[usize]) -> Result<Self, CliError> {
        let t = Table(parse_pairs(text)?);
        let n = at_least_one("n", overrides.n.map_or_else(|| t.get("n", 8), Ok)?)?;
        let mesh = match t.get("mesh", "structured".to_string())?.as_str() {
            "structured" => MeshSpec::Structured { n },
            "file" => match t.0.get("mesh_file") {
                Some(p) if !p.is_empty() => MeshSpec::File { path: PathBuf::from(p) },
                _ => return Err(bad("mesh_file", "required when mesh = file")),
            },
            "all_boundary_cell" => {
                let triangles = t.get("triangles", 3)?;
                if !(1..=3).contains(&triangles) {
                    return Err(bad("triangles", format!("must be 1, 2 or 3, got {triangles}")));
                }
                MeshSpec::AllBoundaryCell { triangles }
            }
            "boundary_strip" => {
                let omega: f64 = t.get("omega", 1.0)?;
                if !(omega >= 0.0 && omega.is_finite()) {
                    return Err(bad("omega", format!("must be nonnegative, got {omega}")));
                }
                MeshSpec::BoundaryStrip { n, omega }
            }
            other => {
                return Err(bad(
                    "mesh",
                    format!("unknown kind {other:?} (structured, file, all_boundary_cell, boundary_strip)"),
                ))
            }
        };
        let final_time = positive("final_time", t.get("final_time", 1.0)?)?;
        let steps = at_least_one("steps", overrides.steps.map_or_else(|| t.get("steps", 8), Ok)?)?;
        let tol = tolerance("tol", overrides.tol.map_or_else(|| t.get("tol", 1e-12), Ok)?)?;
        let (pred_tol, corr_tol) = if overrides.tol.is_some() {
            (tol, tol)
        } else {
            (tolerance("pred_tol", t.get("pred_tol", tol)?)?, tolerance("corr_tol", t.get("corr_tol", tol)?)?)
        };
        let max_iter = at_least_one("max_iter", t.get("max_iter", 20_000)?)?;
        let problem = match t.get("problem", "mms".to_string())?.as_str() {
            "mms" => Problem::Mms,
            "zero" => Problem::Zero,
            "stokes-limit" => Problem::StokesLimit,
            other => return Err(bad("problem", format!("unknown problem {other:?} (mms, zero, stokes-limit)"))),
        };
        let out = overrides.out.clone().unwrap_or_else(|| PathBuf::from(t.0.get("out").map_or("out", String::as_str)));
        let emit_fields = overrides.emit_fields || t.flag("emit_fields")?;
        let refinements = match t.0.get("refinements") {
            None => default_refinements.to_vec(),
            Some(v) => {
                let list: Result<Vec<usize>, _> = v.split(',').map(|s| s.trim().parse::<usize>()).collect();
                match list {
                    Ok(l) if !l.is_empty() && l.iter().all(|&n| n >= 1) => l,
                    _ => return Err(bad("refinements", format!("expected a comma-separated list of positive integers, got {v:?}"))),
                }
            }
        };
        let steps_per_n = positive("steps_per_n", t.get("steps_per_n", 1.0)?)?;
        let energy_limit = positive("energy_limit", t.get("energy_limit", 1e-8)?)?;
        let moment_limit = positive("moment_limit", t.get("moment_limit", 1e-10)?)?;
        Ok(RunConfig {
            mesh,
            final_time,
            steps,
            pred_tol,
            corr_tol,
            max_iter,
            problem,
            out,
            emit_fields,
            refinements,
            steps_per_n,
            energy_limit,
            moment_limit,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::from_text(text, &Overrides::default(), &[8, 16])
    }

    fn key_of(e: CliError) -> String {
        match e {
            CliError::Config { key, .. } => key,
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn defaults_apply_to_empty_text() {
        let c = parse("").unwrap();
        assert_eq!(c.mesh, MeshSpec::Structured { n: 8 });
        assert_eq!((c.steps, c.final_time, c.problem), (8, 1.0, Problem::Mms));
        assert_eq!((c.pred_tol, c.corr_tol), (1e-12, 1e-12));
        assert_eq!(c.refinements, vec![8, 16]);
        assert!(!c.emit_fields);
    }

    #[test]
    fn values_and_comments_are_read() {
        let c = parse(
            "# comment\n mesh = all_boundary_cell\ntriangles=2\nsteps = 10\nproblem = stokes-limit\nemit_fields = yes\nrefinements = 4, 8\ncorr_tol = 1e-10\n",
        )
        .unwrap();
        assert_eq!(c.mesh, MeshSpec::AllBoundaryCell { triangles: 2 });
        assert_eq!(c.steps, 10);
        assert_eq!(c.problem, Problem::StokesLimit);
        assert!(c.emit_fields);
        assert_eq!(c.refinements, vec![4, 8]);
        assert_eq!((c.pred_tol, c.corr_tol), (1e-12, 1e-10));
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides { n: Some(4), steps: Some(3), tol: Some(1e-9), out: Some("x".into()), emit_fields: true };
        let c = RunConfig::from_text("n = 16\nsteps = 7\npred_tol = 1e-11\n", &o, &[2]).unwrap();
        assert_eq!(c.mesh, MeshSpec::Structured { n: 4 });
        assert_eq!(c.steps, 3);
        assert_eq!((c.pred_tol, c.corr_tol), (1e-9, 1e-9));
        assert_eq!(c.out, PathBuf::from("x"));
        assert!(c.emit_fields);
    }

    #[test]
    fn every_rejection_names_its_key() {
        let cases = [
            ("speed = 3", "speed"),
            ("steps = 0", "steps"),
            ("steps = many", "steps"),
            ("n = -2", "n"),
            ("final_time = 0", "final_time"),
            ("tol = 2", "tol"),
            ("pred_tol = 0", "pred_tol"),
            ("problem = heat", "problem"),
            ("mesh = hex", "mesh"),
            ("mesh = file", "mesh_file"),
            ("mesh = all_boundary_cell\ntriangles = 5", "triangles"),
            ("mesh = boundary_strip\nomega = -1", "omega"),
            ("emit_fields = maybe", "emit_fields"),
            ("refinements = 4,,8", "refinements"),
            ("steps = 2\nsteps = 3", "steps"),
            ("steps_per_n = 0", "steps_per_n"),
            ("max_iter = 0", "max_iter"),
        ];
        for (text, key) in cases {
            assert_eq!(key_of(parse(text).unwrap_err()), key, "{text}");
        }
        assert_eq!(key_of(parse("just words").unwrap_err()), "just words");
    }
}
