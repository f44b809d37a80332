//! Experiment configuration, read from a TOML key/value document whose keys
//! mirror [`ExperimentConfig`] field names exactly. An optional `[sweep]`
//! table lists the axes a sweep iterates over.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use lb_core::{CollideMode, LatticeModel, LayoutKind, SurrogateParams};

use crate::error::HarnessError;

/// Which lattice model an experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QModel {
    D2Q9,
    D2Q37,
}

impl QModel {
    pub fn to_model(self) -> LatticeModel {
        match self {
            QModel::D2Q9 => LatticeModel::D2Q9,
            QModel::D2Q37 => LatticeModel::D2Q37,
        }
    }

    pub fn q(self) -> usize {
        match self {
            QModel::D2Q9 => 9,
            QModel::D2Q37 => 37,
        }
    }
}

impl fmt::Display for QModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QModel::D2Q9 => write!(f, "d2q9"),
            QModel::D2Q37 => write!(f, "d2q37"),
        }
    }
}

impl FromStr for QModel {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d2q9" => Ok(QModel::D2Q9),
            "d2q37" => Ok(QModel::D2Q37),
            other => Err(HarnessError::InvalidConfig(format!("unknown q_model `{other}`"))),
        }
    }
}

/// Where the lattice lives: the default policy or one NUMA node. On
/// flat-mode machines with on-package memory exposed as a separate node,
/// `numa:<id>` is how that memory is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryTarget {
    #[default]
    Default,
    NumaNode(u32),
}

impl fmt::Display for MemoryTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryTarget::Default => write!(f, "default"),
            MemoryTarget::NumaNode(id) => write!(f, "numa:{id}"),
        }
    }
}

impl FromStr for MemoryTarget {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "default" {
            return Ok(MemoryTarget::Default);
        }
        if let Some(id) = lower.strip_prefix("numa:") {
            let id = id
                .parse()
                .map_err(|_| HarnessError::InvalidConfig(format!("bad numa node in `{s}`")))?;
            return Ok(MemoryTarget::NumaNode(id));
        }
        Err(HarnessError::InvalidConfig(format!("unknown memory_target `{s}`")))
    }
}

/// Collision selector: `none`, `bgk:<tau>` or `surrogate:<fma_per_pop>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollideSpec {
    None,
    Bgk { tau: f64 },
    Surrogate { fma_per_pop: usize },
}

impl CollideSpec {
    /// Materialize kernel parameters; surrogate coefficients derive from
    /// the experiment seed.
    pub fn to_mode(self, seed: u64) -> Result<CollideMode, HarnessError> {
        Ok(match self {
            CollideSpec::None => CollideMode::None,
            CollideSpec::Bgk { tau } => CollideMode::Bgk(lb_core::BgkParams::new(tau)?),
            CollideSpec::Surrogate { fma_per_pop } => {
                CollideMode::Surrogate(SurrogateParams::from_seed(fma_per_pop, seed)?)
            }
        })
    }

    pub fn measures_collide(self) -> bool {
        !matches!(self, CollideSpec::None)
    }
}

impl fmt::Display for CollideSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollideSpec::None => write!(f, "none"),
            CollideSpec::Bgk { tau } => write!(f, "bgk:{tau}"),
            CollideSpec::Surrogate { fma_per_pop } => write!(f, "surrogate:{fma_per_pop}"),
        }
    }
}

impl FromStr for CollideSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "none" {
            return Ok(CollideSpec::None);
        }
        if let Some(tau) = lower.strip_prefix("bgk:") {
            let tau = tau
                .parse()
                .map_err(|_| HarnessError::InvalidConfig(format!("bad tau in `{s}`")))?;
            return Ok(CollideSpec::Bgk { tau });
        }
        if let Some(fma) = lower.strip_prefix("surrogate:") {
            let fma_per_pop = fma
                .parse()
                .map_err(|_| HarnessError::InvalidConfig(format!("bad fma count in `{s}`")))?;
            return Ok(CollideSpec::Surrogate { fma_per_pop });
        }
        Err(HarnessError::InvalidConfig(format!("unknown collide_mode `{s}`")))
    }
}

/// Energy backend choice: `rapl`, `synthetic`, or `synthetic:<pkg_w>,<dram_w>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackendChoice {
    Rapl,
    Synthetic { package_w: f64, dram_w: f64 },
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Synthetic { package_w: 100.0, dram_w: 10.0 }
    }
}

impl fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendChoice::Rapl => write!(f, "rapl"),
            BackendChoice::Synthetic { package_w, dram_w } => {
                write!(f, "synthetic:{package_w},{dram_w}")
            }
        }
    }
}

impl FromStr for BackendChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "rapl" {
            return Ok(BackendChoice::Rapl);
        }
        if lower == "synthetic" {
            return Ok(BackendChoice::default());
        }
        if let Some(rest) = lower.strip_prefix("synthetic:") {
            let mut parts = rest.splitn(2, ',');
            let parse = |part: Option<&str>| {
                part.and_then(|p| p.trim().parse::<f64>().ok())
                    .filter(|w| *w >= 0.0)
                    .ok_or_else(|| {
                        HarnessError::InvalidConfig(format!("bad synthetic watts in `{s}`"))
                    })
            };
            let package_w = parse(parts.next())?;
            let dram_w = parse(parts.next())?;
            return Ok(BackendChoice::Synthetic { package_w, dram_w });
        }
        Err(HarnessError::InvalidConfig(format!("unknown backend `{s}`")))
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(QModel);
string_serde!(MemoryTarget);
string_serde!(CollideSpec);
string_serde!(BackendChoice);

fn default_sampler_period_ms() -> f64 {
    50.0
}

fn default_repetitions() -> usize {
    3
}

fn default_true() -> bool {
    true
}

/// One experiment, fully specified. The whole struct is echoed verbatim
/// into every [`crate::RunRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub nx: usize,
    pub ny: usize,
    pub q_model: QModel,
    pub layout: LayoutKind,
    pub threads: usize,
    #[serde(default)]
    pub memory_target: MemoryTarget,
    pub collide_mode: CollideSpec,
    pub iterations: usize,
    #[serde(default)]
    pub warmup_iterations: usize,
    #[serde(default = "default_sampler_period_ms")]
    pub sampler_period_ms: f64,
    #[serde(default)]
    pub backend: BackendChoice,
    /// When the RAPL backend is unavailable, fall back to the synthetic one
    /// (flagged in the record) instead of failing.
    #[serde(default)]
    pub fallback_synthetic: bool,
    pub seed: u64,
    /// Timed repetitions per kernel; the median is reported.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Pad clustered layouts up to the next vl multiple of ny.
    #[serde(default = "default_true")]
    pub pad_clustered: bool,
    /// Pin workers to distinct logical cpus (cores first, then siblings).
    #[serde(default = "default_true")]
    pub pin_threads: bool,
    /// Operator-supplied note of the booted memory mode (e.g.
    /// "flat-quadrant"); metadata only, never interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub booted_memory_mode: Option<String>,
}

impl ExperimentConfig {
    pub fn sites(&self) -> usize {
        self.nx * self.ny
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(HarnessError::InvalidConfig("nx and ny must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(HarnessError::InvalidConfig("threads must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(HarnessError::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(HarnessError::InvalidConfig("repetitions must be at least 1".into()));
        }
        if !(1.0..=1000.0).contains(&self.sampler_period_ms) {
            return Err(HarnessError::InvalidConfig(format!(
                "sampler_period_ms {} outside [1, 1000]",
                self.sampler_period_ms
            )));
        }
        self.layout.validate()?;
        if let Some(vl) = self.layout.vector_len() {
            if !self.pad_clustered && self.ny % vl != 0 {
                return Err(HarnessError::InvalidConfig(format!(
                    "ny={} not divisible by vl={vl} and pad_clustered is off",
                    self.ny
                )));
            }
        }
        match self.collide_mode {
            CollideSpec::Bgk { tau } => {
                if self.q_model != QModel::D2Q9 {
                    return Err(HarnessError::InvalidConfig(
                        "bgk collision needs the weighted d2q9 model".into(),
                    ));
                }
                if !tau.is_finite() || tau <= 0.5 {
                    return Err(HarnessError::InvalidConfig(format!(
                        "bgk tau must exceed 0.5, got {tau}"
                    )));
                }
            }
            CollideSpec::Surrogate { fma_per_pop } => {
                if fma_per_pop == 0 {
                    return Err(HarnessError::InvalidConfig(
                        "surrogate needs fma_per_pop >= 1".into(),
                    ));
                }
            }
            CollideSpec::None => {}
        }
        Ok(())
    }
}

/// The `[sweep]` table: axes whose cartesian product a sweep runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub layouts: Vec<LayoutKind>,
    pub threads: Vec<usize>,
    #[serde(default = "default_targets")]
    pub memory_targets: Vec<MemoryTarget>,
}

fn default_targets() -> Vec<MemoryTarget> {
    vec![MemoryTarget::Default]
}

#[derive(Deserialize)]
struct ConfigDocument {
    #[serde(flatten)]
    base: ExperimentConfig,
    sweep: Option<SweepAxes>,
}

/// Parse a config document: base experiment plus optional sweep axes.
pub fn parse_config(text: &str) -> Result<(ExperimentConfig, Option<SweepAxes>), HarnessError> {
    let doc: ConfigDocument =
        toml::from_str(text).map_err(|e| HarnessError::ConfigParse(e.to_string()))?;
    doc.base.validate()?;
    Ok((doc.base, doc.sweep))
}
