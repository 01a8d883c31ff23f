//! Run configuration: a strict JSON schema merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use enlarge_core::enlargement::InstanceOptions;
use enlarge_core::fokker_planck::{FpProblem, SearchBox};
use enlarge_core::Tolerances;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Testbed,
    FpSpectrum,
    FpDecay,
    FpResolventScan,
    EnlargeCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Testbed => "testbed",
            Command::FpSpectrum => "fp-spectrum",
            Command::FpDecay => "fp-decay",
            Command::FpResolventScan => "fp-resolvent-scan",
            Command::EnlargeCheck => "enlarge-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    #[default]
    Standard,
    Light,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestbedSettings {
    /// Matrix dimension of generated instances.
    pub n: usize,
    /// Number of consecutive seeds starting at `seed`.
    pub count: u64,
    pub options: InstanceOptions,
    pub sampler: SamplerKind,
    /// Run the checks at this abscissa instead of the generated one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abscissa: Option<f64>,
}

impl Default for TestbedSettings {
    fn default() -> Self {
        Self {
            n: 2,
            count: 1,
            options: InstanceOptions::default(),
            sampler: SamplerKind::Standard,
            abscissa: None,
        }
    }
}

/// A problem given inline or as a path relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProblemRef {
    Path(PathBuf),
    Inline(Box<FpProblem>),
}

impl<'de> Deserialize<'de> for ProblemRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(ProblemRef::Path(s.into())),
            other => FpProblem::deserialize(other)
                .map(|p| ProblemRef::Inline(Box::new(p)))
                .map_err(|e| serde::de::Error::custom(format!("problem: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Command,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub testbed: TestbedSettings,
    /// Decomposition search box for `fp-decay` and `fp-resolvent-scan`.
    #[serde(default)]
    pub search: SearchBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemRef>,
    /// Instance manifest for `enlarge-check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_seed() -> u64 {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("enlarge-out")
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            seed: default_seed(),
            testbed: TestbedSettings::default(),
            search: SearchBox::default(),
            problem: None,
            instance: None,
            tolerances: BTreeMap::new(),
            output: default_output(),
        }
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "config: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        if let Some(ProblemRef::Path(p)) = &mut cfg.problem {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = &mut cfg.instance {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Defaults with every override applied, rejecting unknown keys.
    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let mut tol = Tolerances::default();
        for (k, v) in &self.tolerances {
            tol.set(k, *v)
                .map_err(|e| CliError::Config(format!("tolerances.{k}: {e}")))?;
        }
        Ok(tol)
    }

    /// The Fokker–Planck problem, loaded and validated.
    pub fn problem(&self) -> Result<FpProblem, CliError> {
        let p = match &self.problem {
            None => return Err(CliError::Config(format!("{} needs a `problem`", self.command.name()))),
            Some(ProblemRef::Inline(p)) => {
                p.validate().map_err(|e| CliError::Config(format!("problem: {e}")))?;
                (**p).clone()
            }
            Some(ProblemRef::Path(path)) => {
                FpProblem::load(path).map_err(|e| CliError::Config(format!("problem {}: {e}", path.display())))?
            }
        };
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.tolerances()?;
        match self.command {
            Command::Testbed => {
                if self.testbed.n == 0 || self.testbed.count == 0 {
                    return Err(CliError::Config("testbed: n and count must be positive".into()));
                }
            }
            Command::EnlargeCheck => {
                if self.instance.is_none() {
                    return Err(CliError::Config("enlarge-check needs an `instance` manifest".into()));
                }
            }
            _ => {
                self.problem()?;
            }
        }
        Ok(())
    }
}

/// Parse `KEY=VAL`.
pub fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VAL, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let base = Path::new(".");
        let ok = r#"{"schema_version": 1, "command": "testbed"}"#;
        let cfg = RunConfig::from_json(ok, base).unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.testbed.n, 2);
        let bad = r#"{"schema_version": 1, "command": "testbed", "sed": 3}"#;
        let err = RunConfig::from_json(bad, base).unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
        let version = r#"{"schema_version": 7, "command": "testbed"}"#;
        assert!(matches!(RunConfig::from_json(version, base), Err(CliError::Config(_))));
        let tol = r#"{"schema_version": 1, "command": "testbed", "tolerances": {"eigen": 1e-3}}"#;
        assert!(RunConfig::from_json(tol, base).unwrap().validate().is_err());
    }

    #[test]
    fn inline_problem_round_trips() {
        let text = r#"{"schema_version": 1, "command": "fp-spectrum", "problem": {
            "d": 1, "s": 2, "L": 8, "N": 100, "weight": {"kind": "polynomial", "k": 3},
            "scheme": "implicit-euler", "t_max": 1, "dt": 0.1}}"#;
        let cfg = RunConfig::from_json(text, Path::new(".")).unwrap();
        cfg.validate().unwrap();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn override_parsing() {
        assert_eq!(parse_override("eig=1e-8").unwrap(), ("eig".to_string(), 1e-8));
        assert!(parse_override("eig").is_err());
        assert!(parse_override("eig=x").is_err());
    }
}
