//! Run configuration: a TOML file overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use egp_core::llm_client::LlmConfig;
use egp_core::scoring::{
    Denominator, FoldAggregation, GridSearchOptions, ScoreMode, ThresholdConfig,
    DEFAULT_CANDIDATES, DEFAULT_FOLDS,
};
use serde::Deserialize;

use crate::failure::{Context, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Rules,
    Llm,
    RulesThenLlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    General,
    Successful,
    Unsuccessful,
}

impl Mode {
    pub fn score_mode(self) -> Result<ScoreMode, Failure> {
        match self {
            Mode::General => Ok(ScoreMode::General),
            Mode::Successful => Ok(ScoreMode::Successful),
            Mode::Unsuccessful => Err(Failure::input("scoring needs --mode general or successful")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::General => "general",
            Mode::Successful => "successful",
            Mode::Unsuccessful => "unsuccessful",
        })
    }
}

/// Either one threshold for every level, six thresholds (A1..C2), or a
/// tuning report to read them from.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSpec {
    Values(Vec<f64>),
    Report(PathBuf),
}

impl FromStr for ThresholdSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.ends_with(".json") {
            return Ok(ThresholdSpec::Report(PathBuf::from(s)));
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ThresholdSpec::Values(values))
    }
}

impl<'de> Deserialize<'de> for ThresholdSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(f64),
            Many(Vec<f64>),
            Path(String),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::One(v) => ThresholdSpec::Values(vec![v]),
            Raw::Many(v) => ThresholdSpec::Values(v),
            Raw::Path(p) => ThresholdSpec::Report(PathBuf::from(p)),
        })
    }
}

impl ThresholdSpec {
    pub fn resolve(&self) -> Result<ThresholdConfig, Failure> {
        match self {
            ThresholdSpec::Values(v) if v.len() == 1 => Ok(ThresholdConfig::uniform(v[0])?),
            ThresholdSpec::Values(v) if v.len() == 6 => {
                let mut arr = [0.0; 6];
                arr.copy_from_slice(v);
                Ok(ThresholdConfig::new(arr)?)
            }
            ThresholdSpec::Values(v) => Err(Failure::input(format!(
                "thresholds need 1 or 6 values, got {}",
                v.len()
            ))),
            ThresholdSpec::Report(path) => {
                #[derive(Deserialize)]
                struct Report {
                    thresholds: [f64; 6],
                }
                let text =
                    std::fs::read_to_string(path).context(format!("reading {}", path.display()))?;
                let r: Report =
                    serde_json::from_str(&text).context(format!("parsing {}", path.display()))?;
                Ok(ThresholdConfig::new(r.thresholds)?)
            }
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSettings {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub max_in_flight: Option<usize>,
    pub timeout_secs: Option<f64>,
    pub cache_dir: Option<PathBuf>,
    pub top_logprobs: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSettings {
    pub candidates: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub pooled: bool,
    #[serde(default)]
    pub general_denominator: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub catalog: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    #[serde(default)]
    pub rules: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub engine: Option<Engine>,
    pub mode: Option<Mode>,
    pub thresholds: Option<ThresholdSpec>,
    #[serde(default)]
    pub llm: LlmSettings,
    #[serde(default)]
    pub tuning: TuningSettings,
}

pub const DEFAULT_CACHE_DIR: &str = ".egp-cache";

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).context(format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }

    fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
        value.as_deref().ok_or_else(|| {
            Failure::input(format!("missing --{flag} (or `{flag}` in the config file)"))
        })
    }

    pub fn catalog(&self) -> Result<&Path, Failure> {
        Self::require(&self.catalog, "catalog")
    }

    pub fn corpus(&self) -> Result<&Path, Failure> {
        Self::require(&self.corpus, "corpus")
    }

    pub fn annotations(&self) -> Result<&Path, Failure> {
        Self::require(&self.annotations, "annotations")
    }

    pub fn meta(&self) -> Result<&Path, Failure> {
        Self::require(&self.meta, "meta")
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Detection table to read; defaults to the one `detect` writes.
    pub fn detections(&self) -> PathBuf {
        self.detections
            .clone()
            .unwrap_or_else(|| self.out_dir().join(crate::detections::FILE_NAME))
    }

    pub fn engine(&self) -> Engine {
        self.engine.unwrap_or(Engine::Rules)
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Successful)
    }

    pub fn thresholds(&self) -> Result<ThresholdConfig, Failure> {
        match &self.thresholds {
            Some(spec) => spec.resolve(),
            None => Ok(ThresholdConfig::uniform(0.5)?),
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.llm
            .cache_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
    }

    pub fn llm_config(&self) -> Result<LlmConfig, Failure> {
        let (Some(base), Some(model)) = (&self.llm.base_url, &self.llm.model) else {
            return Err(Failure::input(
                "the llm engines need --base-url and --model (or [llm] base_url/model in the config file)",
            ));
        };
        let mut cfg = LlmConfig::new(base.clone(), model.clone(), self.cache_dir());
        if let Some(n) = self.llm.max_in_flight {
            cfg.max_in_flight = n;
        }
        if let Some(t) = self.llm.timeout_secs {
            if !(t.is_finite() && t > 0.0) {
                return Err(Failure::input(format!("timeout must be positive, got {t}")));
            }
            cfg.timeout = Duration::from_secs_f64(t);
        }
        if let Some(k) = self.llm.top_logprobs {
            cfg.top_logprobs = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid_options(&self) -> Result<GridSearchOptions, Failure> {
        Ok(GridSearchOptions {
            candidates: self
                .tuning
                .candidates
                .clone()
                .unwrap_or_else(|| DEFAULT_CANDIDATES.to_vec()),
            folds: self.tuning.folds.unwrap_or(DEFAULT_FOLDS),
            seed: self.tuning.seed.unwrap_or(0),
            mode: self.mode().score_mode()?,
            aggregation: if self.tuning.pooled {
                FoldAggregation::Pooled
            } else {
                FoldAggregation::MeanOfFolds
            },
            denominator: self.denominator(),
            ..GridSearchOptions::default()
        })
    }

    pub fn denominator(&self) -> Denominator {
        if self.tuning.general_denominator {
            Denominator::General
        } else {
            Denominator::SameMode
        }
    }
}
