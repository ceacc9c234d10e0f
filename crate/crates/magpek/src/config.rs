//! Flat INI-style experiment configuration: dotted keys, `key = value`
//! lines, `#` comments. Unknown keys are rejected with the offending line
//! so a typo cannot silently fall back to a default. The raw file bytes
//! are hashed into every report for reproducibility.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::fieldgrid::Grid3;
use crate::pekar::SolverParams;
use crate::potentials::{ScalarPotentialSpec, VectorPotentialSpec};
use crate::radial::RadialParams;
use crate::{Error, Result};

/// What a config file asks the runner to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Minimize,
    ScanLambda,
    Trapping,
    Binding,
    Invariants,
    Oracle,
}

impl ExperimentKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "minimize" => Self::Minimize,
            "scan-lambda" => Self::ScanLambda,
            "trapping" => Self::Trapping,
            "binding" => Self::Binding,
            "invariants" => Self::Invariants,
            "oracle" => Self::Oracle,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Minimize => "minimize",
            Self::ScanLambda => "scan-lambda",
            Self::Trapping => "trapping",
            Self::Binding => "binding",
            Self::Invariants => "invariants",
            Self::Oracle => "oracle",
        }
    }
}

/// Fully parsed experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub grid: Grid3,
    pub a_spec: VectorPotentialSpec,
    pub v_spec: ScalarPotentialSpec,
    pub solver: SolverParams,
    pub radial: RadialParams,
    /// Masses for scan-lambda.
    pub lambdas: Vec<f64>,
    /// Repulsion strengths for binding.
    pub u_values: Vec<f64>,
    /// Bump radii for the binding search.
    pub binding_radii: Vec<f64>,
    pub out_dir: PathBuf,
    /// Write the minimizer field as a binary dump.
    pub dump_field: bool,
    /// SHA-256 of the raw config text.
    pub hash: String,
}

fn parse_num<T: std::str::FromStr>(key: &str, line: usize, v: &str) -> Result<T> {
    v.parse().map_err(|_| {
        Error::Config(format!("line {}: key `{}` has unparseable value `{}`", line, key, v))
    })
}

fn parse_list(key: &str, line: usize, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| parse_num::<f64>(key, line, s.trim()))
        .collect()
}

fn parse_bool(key: &str, line: usize, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("line {}: key `{}` expects a boolean, got `{}`", line, key, v))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {}", path.display(), e)))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((k, v)) = stripped.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", line)));
            };
            let key = k.trim().to_string();
            if kv.insert(key.clone(), (line, v.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{}`", line, key)));
            }
        }

        let mut experiment = ExperimentKind::Minimize;
        let mut seed = 0u64;
        let (mut n, mut h) = (48usize, 1.0 / 3.0);
        let mut a_kind = "zero".to_string();
        let (mut a_b, mut a_r) = ([0.0f64; 3], 12.0f64);
        let mut v_kind = "zero".to_string();
        let (mut v_z, mut v_eps) = (1.0f64, f64::NAN);
        let mut solver = SolverParams::default();
        let mut radial = RadialParams::default();
        let mut lambdas: Vec<f64> = (1..=9).map(|k| 0.1 + 0.1 * k as f64).collect();
        let mut u_values = vec![2.0, 2.05];
        let mut binding_radii = vec![2.0, 3.0, 4.0, 6.0];
        let mut out_dir = PathBuf::from("out");
        let mut dump_field = false;

        for (key, (line, v)) in &kv {
            let line = *line;
            match key.as_str() {
                "experiment" => {
                    experiment = ExperimentKind::parse(v).ok_or_else(|| {
                        Error::Config(format!("line {}: unknown experiment `{}`", line, v))
                    })?;
                }
                "seed" => seed = parse_num(key, line, v)?,
                "out" => out_dir = PathBuf::from(v),
                "dump-field" => dump_field = parse_bool(key, line, v)?,
                "grid.n" => n = parse_num(key, line, v)?,
                "grid.h" => h = parse_num(key, line, v)?,
                "a.kind" => a_kind = v.clone(),
                "a.b" => {
                    let parts = parse_list(key, line, v)?;
                    match parts.len() {
                        1 => a_b = [0.0, 0.0, parts[0]],
                        3 => a_b = [parts[0], parts[1], parts[2]],
                        _ => {
                            return Err(Error::Config(format!(
                                "line {}: `a.b` takes 1 or 3 components",
                                line
                            )))
                        }
                    }
                }
                "a.r" => a_r = parse_num(key, line, v)?,
                "v.kind" => v_kind = v.clone(),
                "v.z" => v_z = parse_num(key, line, v)?,
                "v.eps" => v_eps = parse_num(key, line, v)?,
                "solver.max_iter" => solver.max_iter = parse_num(key, line, v)?,
                "solver.residual_tol" => solver.residual_tol = parse_num(key, line, v)?,
                "solver.restarts" => solver.restarts = parse_num(key, line, v)?,
                "solver.recenter" => solver.recenter = parse_bool(key, line, v)?,
                "solver.precondition" => solver.precondition = parse_bool(key, line, v)?,
                "oracle.r_max" => radial.r_max = parse_num(key, line, v)?,
                "oracle.n_points" => radial.n_points = parse_num(key, line, v)?,
                "oracle.mass" => radial.mass = parse_num(key, line, v)?,
                "oracle.mix" => radial.mix = parse_num(key, line, v)?,
                "scan.lambdas" => lambdas = parse_list(key, line, v)?,
                "binding.u" => u_values = parse_list(key, line, v)?,
                "binding.r" => binding_radii = parse_list(key, line, v)?,
                _ => {
                    return Err(Error::Config(format!("line {}: unknown key `{}`", line, key)));
                }
            }
        }

        let grid = Grid3::new([n; 3], h)?;
        let a_spec = match a_kind.as_str() {
            "zero" => VectorPotentialSpec::zero(),
            "symmetric" => VectorPotentialSpec::LinearSymmetric(a_b),
            "landau" => VectorPotentialSpec::LinearLandau(a_b[2]),
            "cutoff" => VectorPotentialSpec::CutoffLinear { b: a_b[2], r: a_r },
            other => {
                let line = kv.get("a.kind").map(|(l, _)| *l).unwrap_or(0);
                return Err(Error::Config(format!("line {}: unknown key value `a.kind={}`", line, other)));
            }
        };
        let v_spec = match v_kind.as_str() {
            "zero" => ScalarPotentialSpec::Zero,
            "soft-coulomb" => ScalarPotentialSpec::SoftCoulomb {
                z: v_z,
                eps: if v_eps.is_nan() { h } else { v_eps },
            },
            other => {
                let line = kv.get("v.kind").map(|(l, _)| *l).unwrap_or(0);
                return Err(Error::Config(format!("line {}: unknown key value `v.kind={}`", line, other)));
            }
        };
        solver.seed = seed;

        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let hash = format!("{:x}", hasher.finalize());

        Ok(Self {
            experiment,
            seed,
            grid,
            a_spec,
            v_spec,
            solver,
            radial,
            lambdas,
            u_values,
            binding_radii,
            out_dir,
            dump_field,
            hash,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::parse(
            "experiment = minimize\nseed = 7\ngrid.n = 32\ngrid.h = 0.5\n\
             a.kind = symmetric\na.b = 1.0\nv.kind = soft-coulomb\nv.z = 0.5\n\
             solver.residual_tol = 1e-4\nout = results\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Minimize);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.grid.n(), [32; 3]);
        assert!(matches!(cfg.a_spec, VectorPotentialSpec::LinearSymmetric([0.0, 0.0, 1.0])));
        assert!(matches!(cfg.v_spec, ScalarPotentialSpec::SoftCoulomb { z, .. } if z == 0.5));
        assert_eq!(cfg.solver.residual_tol, 1e-4);
        assert_eq!(cfg.out_dir, PathBuf::from("results"));
        assert_eq!(cfg.hash.len(), 64);
    }

    #[test]
    fn rejects_unknown_keys_with_line_numbers() {
        let err = ExperimentConfig::parse("grid.n = 16\ngrid.spacing = 0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("grid.spacing"), "{}", msg);
        let err = ExperimentConfig::parse("a.kind = unknown\n").unwrap_err();
        assert!(err.to_string().contains("a.kind"), "{}", err);
    }

    #[test]
    fn rejects_malformed_lines_and_duplicates() {
        assert!(ExperimentConfig::parse("grid.n 16\n").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2\n").is_err());
        assert!(ExperimentConfig::parse("seed = notanumber\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::parse("seed = 1\n").unwrap();
        let b = ExperimentConfig::parse("seed = 2\n").unwrap();
        let a2 = ExperimentConfig::parse("seed = 1\n").unwrap();
        assert_ne!(a.hash, b.hash);
        assert_eq!(a.hash, a2.hash);
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let cfg = ExperimentConfig::parse("# header\n\nseed = 3   # trailing\n").unwrap();
        assert_eq!(cfg.seed, 3);
    }
}
