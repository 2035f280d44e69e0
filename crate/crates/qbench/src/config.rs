//! Experiment configuration: a TOML file with strict keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qbench_core::bench::{BatchSetting, PAPER_BATCHES};
use qbench_core::data::{Normalization, SynthParams};
use qbench_core::models::{Encoding, ModelKind, OptimizerKind, QlstmConfig, VariationalPlacement};

use crate::error::{usage, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Relative paths resolve against the config file's directory.
    pub output_dir: PathBuf,
    pub models: Vec<ModelName>,
    pub batches: Vec<BatchSpec>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub mode: Mode,
    /// Timing repetitions per cell, recorded as separate rows.
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    /// Allow batch sizes outside the paper grid.
    #[serde(default)]
    pub free_batches: bool,
    /// Non-batch arm: samples per optimizer step.
    #[serde(default = "default_step_every")]
    pub nonbatch_step_every: usize,
    #[serde(default = "default_true")]
    pub shuffle: bool,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub data: DataConfig,
    #[serde(default)]
    pub qlstm: QlstmOptions,
    /// Test hook: perturbs the batched output before the equivalence check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence_fault: Option<f64>,
}

fn default_epochs() -> usize {
    2
}

fn default_repetitions() -> u32 {
    1
}

fn default_step_every() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Qlstm,
    Qfwp,
}

impl From<ModelName> for ModelKind {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Qlstm => ModelKind::Qlstm,
            ModelName::Qfwp => ModelKind::Qfwp,
        }
    }
}

/// `"nonbatch"` or a positive batch size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchSpec {
    Size(usize),
    Label(String),
}

impl BatchSpec {
    pub fn setting(&self) -> Option<BatchSetting> {
        match self {
            BatchSpec::Size(0) => None,
            BatchSpec::Size(b) => Some(BatchSetting::Batch(*b)),
            BatchSpec::Label(s) => BatchSetting::parse(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Serial execution with wall-clock timers.
    #[default]
    Timed,
    /// Parallel cells, no timings.
    AccuracyOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OptimizerConfig {
    Adam {
        lr: f64,
        #[serde(default = "beta1")]
        beta1: f64,
        #[serde(default = "beta2")]
        beta2: f64,
        #[serde(default = "adam_eps")]
        eps: f64,
    },
    Sgd {
        lr: f64,
    },
}

fn beta1() -> f64 {
    0.9
}

fn beta2() -> f64 {
    0.999
}

fn adam_eps() -> f64 {
    1e-8
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam {
            lr: 0.01,
            beta1: beta1(),
            beta2: beta2(),
            eps: adam_eps(),
        }
    }
}

impl From<OptimizerConfig> for OptimizerKind {
    fn from(o: OptimizerConfig) -> Self {
        match o {
            OptimizerConfig::Adam { lr, beta1, beta2, eps } => OptimizerKind::Adam { lr, beta1, beta2, eps },
            OptimizerConfig::Sgd { lr } => OptimizerKind::Sgd { lr },
        }
    }
}

/// Exactly one of `csv` and `synthetic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub normalization: NormalizationName,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_days: usize,
    #[serde(default)]
    pub process: Process,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Process {
    RandomWalk {
        start: f64,
        drift: f64,
        volatility: f64,
        wick: f64,
    },
    Sinusoid {
        base: f64,
        amplitude: f64,
        period: f64,
        noise: f64,
        wick: f64,
    },
}

impl Default for Process {
    fn default() -> Self {
        match SynthParams::default() {
            SynthParams::RandomWalk {
                start,
                drift,
                volatility,
                wick,
            } => Process::RandomWalk {
                start,
                drift,
                volatility,
                wick,
            },
            SynthParams::Sinusoid {
                base,
                amplitude,
                period,
                noise,
                wick,
            } => Process::Sinusoid {
                base,
                amplitude,
                period,
                noise,
                wick,
            },
        }
    }
}

impl From<Process> for SynthParams {
    fn from(p: Process) -> Self {
        match p {
            Process::RandomWalk {
                start,
                drift,
                volatility,
                wick,
            } => SynthParams::RandomWalk {
                start,
                drift,
                volatility,
                wick,
            },
            Process::Sinusoid {
                base,
                amplitude,
                period,
                noise,
                wick,
            } => SynthParams::Sinusoid {
                base,
                amplitude,
                period,
                noise,
                wick,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationName {
    #[default]
    Joint,
    PerChannel,
}

impl From<NormalizationName> for Normalization {
    fn from(n: NormalizationName) -> Self {
        match n {
            NormalizationName::Joint => Normalization::Joint,
            NormalizationName::PerChannel => Normalization::PerChannel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QlstmOptions {
    #[serde(default)]
    pub encoding: EncodingName,
    #[serde(default)]
    pub placement: PlacementName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingName {
    #[default]
    Raw,
    Arctan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementName {
    #[default]
    AfterLadder,
    BeforeLadder,
}

impl From<QlstmOptions> for QlstmConfig {
    fn from(o: QlstmOptions) -> Self {
        QlstmConfig {
            encoding: match o.encoding {
                EncodingName::Raw => Encoding::Raw,
                EncodingName::Arctan => Encoding::Arctan,
            },
            placement: match o.placement {
                PlacementName::AfterLadder => VariationalPlacement::AfterLadder,
                PlacementName::BeforeLadder => VariationalPlacement::BeforeLadder,
            },
            ..QlstmConfig::default()
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| usage(format!("config: {}", e.message().trim())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.output_dir = base.join(&cfg.output_dir);
        if let Some(csv) = &mut cfg.data.csv {
            *csv = base.join(&*csv);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(&Sha256::digest(self.to_toml().as_bytes())[..8])
    }

    pub fn model_kinds(&self) -> Vec<ModelKind> {
        self.models.iter().map(|&m| m.into()).collect()
    }

    pub fn batch_settings(&self) -> Vec<BatchSetting> {
        self.batches.iter().filter_map(BatchSpec::setting).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, why: &str| Err(usage(format!("config field `{name}`: {why}")));
        if self.models.is_empty() {
            return field("models", "must not be empty");
        }
        if self.batches.is_empty() {
            return field("batches", "must not be empty");
        }
        for b in &self.batches {
            match b.setting() {
                None => return field("batches", &format!("{b:?} is neither \"nonbatch\" nor a positive size")),
                Some(BatchSetting::Batch(n)) if !self.free_batches && !PAPER_BATCHES.contains(&n) => {
                    return field(
                        "batches",
                        &format!("{n} is outside {PAPER_BATCHES:?}; set free_batches = true"),
                    )
                }
                Some(_) => {}
            }
        }
        if self.seeds.is_empty() {
            return field("seeds", "must not be empty");
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return field("seeds", "contains duplicates");
        }
        if self.epochs == 0 {
            return field("epochs", "must be positive");
        }
        if self.repetitions == 0 {
            return field("repetitions", "must be positive");
        }
        if self.nonbatch_step_every == 0 {
            return field("nonbatch_step_every", "must be positive");
        }
        let lr = match self.optimizer {
            OptimizerConfig::Adam { lr, .. } | OptimizerConfig::Sgd { lr } => lr,
        };
        if !(lr.is_finite() && lr > 0.0) {
            return field("optimizer.lr", "must be positive");
        }
        match (&self.data.csv, &self.data.synthetic) {
            (Some(_), Some(_)) | (None, None) => return field("data", "set exactly one of `csv` and `synthetic`"),
            (None, Some(s)) if s.n_days < 10 => return field("data.synthetic.n_days", "must be at least 10"),
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
output_dir = "out"
models = ["qlstm", "qfwp"]
batches = ["nonbatch", 4, 64]
seeds = [0, 1, 2]

[optimizer]
kind = "adam"
lr = 0.01

[data]
synthetic = { seed = 7, n_days = 300, process = { kind = "sinusoid", base = 1.2, amplitude = 0.1, period = 30.0, noise = 0.002, wick = 0.002 } }
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(cfg.epochs, 2);
        assert_eq!(cfg.repetitions, 1);
        assert_eq!(cfg.mode, Mode::Timed);
        assert_eq!(
            cfg.batch_settings(),
            [BatchSetting::NonBatch, BatchSetting::Batch(4), BatchSetting::Batch(64)]
        );
        assert_eq!(cfg.model_kinds(), [ModelKind::Qlstm, ModelKind::Qfwp]);
    }

    #[test]
    fn round_trips() {
        let cfg = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn rejects_unknown_keys() {
        for extra in [
            "learning_rate = 0.1\n",
            "[qlstm]\nhidden = 4\n",
            "[optimizer]\nkind = \"sgd\"\nlr = 0.1\nmomentum = 0.9\n",
        ] {
            let text = format!("{extra}{EXAMPLE}");
            let text = if extra.starts_with('[') {
                format!(
                    "{}\n{extra}",
                    EXAMPLE.replace("[optimizer]\nkind = \"adam\"\nlr = 0.01\n", "")
                )
            } else {
                text
            };
            let err = ExperimentConfig::from_toml(&text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{extra}: {err}");
        }
    }

    #[test]
    fn validation_names_the_field() {
        let bad = EXAMPLE.replace("64]", "12]");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("`batches`"), "{err}");
        let free = bad.replace("seeds =", "free_batches = true\nseeds =");
        assert!(ExperimentConfig::from_toml(&free).is_ok());
        let dup = EXAMPLE.replace("[0, 1, 2]", "[0, 1, 1]");
        assert!(ExperimentConfig::from_toml(&dup)
            .unwrap_err()
            .to_string()
            .contains("`seeds`"));
        let zero = EXAMPLE.replace("lr = 0.01", "lr = 0.0");
        assert!(ExperimentConfig::from_toml(&zero)
            .unwrap_err()
            .to_string()
            .contains("optimizer.lr"));
    }
}
