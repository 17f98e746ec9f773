use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stopkey::reconciled::{Constant, HashMapReconciler, Identity, Reconciler};
use stopkey::Rational;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Both parties see the same `X`.
    Common,
    /// Hash check on a joint with `X = Y` most of the time.
    AlmostCommon,
    /// Reconciler followed by the hash check.
    Correlated,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Common => "common",
            Protocol::AlmostCommon => "almost-common",
            Protocol::Correlated => "correlated",
        })
    }
}

/// How the hash-check table is chosen: `derandomized`, `fixed:FILE` or
/// `random:SEED`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum HashSpec {
    /// Best table over the exhaustive family.
    #[default]
    Derandomized,
    Fixed(PathBuf),
    /// One table drawn from the seed.
    Random(u64),
}

impl fmt::Display for HashSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HashSpec::Derandomized => f.write_str("derandomized"),
            HashSpec::Fixed(p) => write!(f, "fixed:{}", p.display()),
            HashSpec::Random(s) => write!(f, "random:{s}"),
        }
    }
}

impl FromStr for HashSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "derandomized" {
            return Ok(HashSpec::Derandomized);
        }
        match s.split_once(':') {
            Some(("fixed", path)) if !path.is_empty() => Ok(HashSpec::Fixed(PathBuf::from(path))),
            Some(("random", seed)) => seed
                .parse()
                .map(HashSpec::Random)
                .map_err(|_| HarnessError::Input(format!("bad hash seed {seed:?}"))),
            _ => Err(HarnessError::Input(format!(
                "hash must be derandomized, fixed:FILE or random:SEED, got {s:?}"
            ))),
        }
    }
}

/// Stage-one reconciler: `identity`, `constant` or `hashmap:BITS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconcilerSpec {
    #[default]
    Identity,
    Constant,
    HashMap(u32),
}

impl ReconcilerSpec {
    pub fn build(self) -> Result<Box<dyn Reconciler<Rational>>> {
        Ok(match self {
            ReconcilerSpec::Identity => Box::new(Identity),
            ReconcilerSpec::Constant => Box::new(Constant),
            ReconcilerSpec::HashMap(bits) => Box::new(HashMapReconciler::new(bits)?),
        })
    }
}

impl fmt::Display for ReconcilerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconcilerSpec::Identity => f.write_str("identity"),
            ReconcilerSpec::Constant => f.write_str("constant"),
            ReconcilerSpec::HashMap(b) => write!(f, "hashmap:{b}"),
        }
    }
}

impl FromStr for ReconcilerSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(ReconcilerSpec::Identity),
            "constant" => Ok(ReconcilerSpec::Constant),
            _ => match s.split_once(':') {
                Some(("hashmap", bits)) => bits
                    .parse()
                    .map(ReconcilerSpec::HashMap)
                    .map_err(|_| HarnessError::Input(format!("bad hashmap width {bits:?}"))),
                _ => Err(HarnessError::Input(format!(
                    "reconciler must be identity, constant or hashmap:BITS, got {s:?}"
                ))),
            },
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(HashSpec);
string_serde!(ReconcilerSpec);

fn default_m() -> u32 {
    2
}

fn default_w_max() -> u32 {
    20
}

/// One experiment. The seed determines every random choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Distribution file: a single pmf or a joint.
    pub dist: PathBuf,
    pub protocol: Protocol,
    #[serde(default = "default_m")]
    pub m: u32,
    /// Rounds enumerated by the exact oracles.
    #[serde(default = "default_w_max")]
    pub w_max: u32,
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hash: HashSpec,
    #[serde(default)]
    pub reconciler: ReconcilerSpec,
    /// Report destination; standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Where to write the per-trial transcript log.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_log: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dist: impl Into<PathBuf>, protocol: Protocol) -> Self {
        Self {
            dist: dist.into(),
            protocol,
            m: default_m(),
            w_max: default_w_max(),
            trials: 0,
            seed: 0,
            hash: HashSpec::default(),
            reconciler: ReconcilerSpec::default(),
            out: None,
            transcript_log: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        stopkey::format::to_json(self)
    }
}
