use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mpgibbs::hmm::HmmPriors;
use mpgibbs::lda::LdaPriors;
use mpgibbs::synth::{SynthHmmSpec, SynthLdaSpec};
use mpgibbs::SamplerVariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Hmm,
    Lda,
}

/// Prior fields; which ones apply depends on the model. Unset fields take
/// the defaults: concentration 1 for every HMM prior, eta = 0.01 and
/// alpha = 10/T for LDA.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub init_conc: Option<f64>,
    pub trans_conc: Option<f64>,
    pub emit_conc: Option<f64>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
}

/// One experiment: a dataset, a sampler variant, and a repetition sweep.
/// Together with the dataset digest this determines every output byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub variant: SamplerVariant,
    pub m: usize,
    pub iterations: usize,
    pub repetitions: usize,
    pub seed: u64,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Dataset directory produced by `generate` (or laid out the same way).
    pub dataset: PathBuf,
    #[serde(default)]
    pub priors: PriorSection,
    /// HMM state count; defaults to the dataset's ground-truth S.
    #[serde(default)]
    pub n_states: Option<usize>,
    /// LDA topic count; defaults to the dataset's ground-truth T.
    #[serde(default)]
    pub topics: Option<usize>,
    #[serde(default)]
    pub dump_assignments: bool,
    #[serde(default)]
    pub parallel_paths: bool,
}

fn default_cadence() -> usize {
    100
}

impl ExperimentConfig {
    pub fn from_slice(bytes: &[u8]) -> anyhow::Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_slice(bytes).context("invalid experiment config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("iterations", self.iterations),
            ("repetitions", self.repetitions),
            ("cadence", self.cadence),
        ] {
            if v == 0 {
                bail!("field {name} must be >= 1");
            }
        }
        match self.model {
            ModelKind::Hmm => {
                if self.priors.eta.is_some() || self.priors.alpha.is_some() {
                    bail!("field priors: eta/alpha do not apply to the hmm model");
                }
            }
            ModelKind::Lda => {
                if self.priors.init_conc.is_some()
                    || self.priors.trans_conc.is_some()
                    || self.priors.emit_conc.is_some()
                {
                    bail!("field priors: hmm concentrations do not apply to the lda model");
                }
            }
        }
        Ok(())
    }

    pub fn hmm_priors(&self) -> HmmPriors {
        HmmPriors {
            init_conc: self.priors.init_conc.unwrap_or(1.0),
            trans_conc: self.priors.trans_conc.unwrap_or(1.0),
            emit_conc: self.priors.emit_conc.unwrap_or(1.0),
        }
    }

    pub fn lda_priors(&self, n_topics: usize) -> LdaPriors {
        LdaPriors {
            eta: self.priors.eta.unwrap_or(0.01),
            alpha: self.priors.alpha.unwrap_or(10.0 / n_topics as f64),
        }
    }
}

/// Observation file encoding for generated HMM datasets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsFormat {
    #[default]
    Text,
    Binary,
}

/// Dataset generation spec: which synthetic family and its parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GenerateSpec {
    Hmm {
        #[serde(flatten)]
        spec: SynthHmmSpec,
        #[serde(default)]
        format: ObsFormat,
    },
    Lda {
        #[serde(flatten)]
        spec: SynthLdaSpec,
    },
}

impl GenerateSpec {
    pub fn from_slice(bytes: &[u8]) -> anyhow::Result<Self> {
        serde_json::from_slice(bytes).context("invalid generation spec")
    }

    pub fn override_seed(&mut self, seed: u64) {
        match self {
            GenerateSpec::Hmm { spec, .. } => spec.seed = seed,
            GenerateSpec::Lda { spec } => spec.seed = seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Disc,
    BaumWelch,
    YearlyEntropy,
    BucketHistogram,
    TopicWeightSeries,
    DiscGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BwSettings {
    #[serde(default = "default_bw_iters")]
    pub max_iters: usize,
    #[serde(default = "default_bw_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BwSettings {
    fn default() -> Self {
        BwSettings {
            max_iters: default_bw_iters(),
            tol: default_bw_tol(),
            seed: 0,
        }
    }
}

fn default_bw_iters() -> usize {
    300
}

fn default_bw_tol() -> f64 {
    1e-8
}

/// Which metrics to compute over a finished run directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    pub metrics: Vec<MetricKind>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Topics whose weight series to emit (topic_weight_series).
    #[serde(default)]
    pub topics: Vec<usize>,
    /// Which repetition's assignments feed the year-based metrics.
    #[serde(default)]
    pub repetition: usize,
    #[serde(default)]
    pub baum_welch: BwSettings,
    /// Run directories pooled by disc_grid.
    #[serde(default)]
    pub runs: Vec<PathBuf>,
}

fn default_gamma() -> f64 {
    0.05
}

impl EvalSpec {
    pub fn from_slice(bytes: &[u8]) -> anyhow::Result<Self> {
        let spec: EvalSpec = serde_json::from_slice(bytes).context("invalid eval spec")?;
        if !(spec.gamma > 0.0 && spec.gamma < 1.0) {
            bail!("field gamma must be in (0, 1), got {}", spec.gamma);
        }
        Ok(spec)
    }
}
