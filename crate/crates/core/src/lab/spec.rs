use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryGroup, BoundaryPrefix, FolnerOrientation, PsSampler};
use crate::error::{Error, Result};
use crate::process::ProcessModel;
use crate::tree::{self, Alphabet, DEFAULT_MAX_SPHERE};

/// A model given inline or as a path to a model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Inline(ProcessModel),
    File(PathBuf),
}

impl ModelRef {
    /// Loads the model; relative paths are taken from `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<ProcessModel> {
        match self {
            ModelRef::Inline(m) => Ok(m.clone()),
            ModelRef::File(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let text = std::fs::read_to_string(&path)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "metric-spheres")]
    MetricSpheres,
    #[serde(rename = "horoball")]
    Horoball,
    #[serde(rename = "horoshell")]
    Horoshell,
    #[serde(rename = "folner-F")]
    FolnerF,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::MetricSpheres => "metric-spheres",
            Mode::Horoball => "horoball",
            Mode::Horoshell => "horoshell",
            Mode::FolnerF => "folner-F",
        }
    }

    pub fn min_n(self) -> u32 {
        match self {
            Mode::Horoball => 0,
            _ => 1,
        }
    }

    pub fn needs_boundary(self) -> bool {
        self != Mode::MetricSpheres
    }

    /// `|F_n|` from the closed forms.
    pub fn set_size(self, d: usize, n: u32) -> u128 {
        let b = (d - 1) as u128;
        match self {
            Mode::MetricSpheres => tree::sphere_size(d, 2 * n as usize),
            Mode::Horoball => b.pow(n),
            Mode::Horoshell => (d as u128 - 2) * b.pow(n - 1),
            Mode::FolnerF => b.pow(n - 1),
        }
    }

    /// The `n`-th set of this mode, sorted.
    pub fn set(
        self,
        group: &BoundaryGroup,
        xi: &BoundaryPrefix,
        n: u32,
    ) -> Result<Vec<crate::Site>> {
        let mut out = match self {
            Mode::MetricSpheres => group.tree().sphere(2 * n as usize)?,
            Mode::Horoball => group.horoball(xi, n)?,
            Mode::Horoshell => group.horoshell(xi, n)?,
            Mode::FolnerF => group.folner_block(xi, n as usize)?,
        };
        out.sort();
        Ok(out)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum BoundarySource {
    #[default]
    PattersonSullivan,
    Fixed {
        prefix: String,
    },
}

impl BoundarySource {
    /// The prefix to use, drawn from `rng` when sampled.
    pub fn resolve<R: rand::Rng + ?Sized>(
        &self,
        alphabet: Alphabet,
        depth: usize,
        rng: &mut R,
    ) -> Result<BoundaryPrefix> {
        match self {
            BoundarySource::PattersonSullivan => {
                Ok(PsSampler::new(alphabet).sample(depth.max(1), rng))
            }
            BoundarySource::Fixed { prefix } => {
                let xi = BoundaryPrefix::parse(alphabet, prefix)?;
                xi.require_depth(depth)?;
                Ok(xi)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidSpec(format!("unknown format {other:?}"))),
        }
    }
}

fn yes() -> bool {
    true
}

/// Input of [`crate::lab::run_smb`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: ModelRef,
    pub mode: Mode,
    pub d: usize,
    /// Inclusive range of `n`.
    pub n_range: [u32; 2],
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub boundary: BoundarySource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Also estimate `h` from horoballs and metric spheres at the largest `n`.
    #[serde(default = "yes")]
    pub compare: bool,
    #[serde(default)]
    pub orientation: FolnerOrientation,
}

impl ExperimentSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        Alphabet::new(self.d)?;
        let [lo, hi] = self.n_range;
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if lo > hi {
            return bad(format!("empty n_range {lo}..={hi}"));
        }
        if lo < self.mode.min_n() {
            return bad(format!("{} needs n >= {}", self.mode, self.mode.min_n()));
        }
        let sphere_needed = self.mode == Mode::MetricSpheres || self.compare;
        if sphere_needed && tree::sphere_size(self.d, 2 * hi as usize) > DEFAULT_MAX_SPHERE as u128
        {
            return bad(format!(
                "sphere of radius {} exceeds the enumeration cap",
                2 * hi
            ));
        }
        if hi > crate::boundary::DEFAULT_MAX_LEVEL {
            return bad(format!("n = {hi} exceeds the group level cap"));
        }
        Ok(())
    }

    /// The `n` values with the largest one last.
    pub fn ns(&self) -> std::ops::RangeInclusive<u32> {
        self.n_range[0]..=self.n_range[1]
    }
}
