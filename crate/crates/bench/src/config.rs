//! TOML experiment configuration.
//!
//! A config is flat key/value text with one section per module:
//!
//! ```toml
//! experiment = "shallow"
//! seed = 0
//!
//! [encoder]
//! variant = "train-delay"
//! steps = 8
//!
//! [neuron]
//! tau_m = 2.0
//! dynamics = "full"
//!
//! [train]
//! learning_rate = 0.003
//! beta = { kind = "constant", beta = 8.0 }
//! ```
//!
//! Missing keys take their defaults. The seed is copied into every sub-config
//! that draws randomness, so one number fixes the whole run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use mothcore::agent::{AgentConfig, WorldConfig};
use mothcore::lif::ValidationConfig;
use mothcore::mushroom::{MushroomBodyConfig, Regime};
use mothcore::{Dynamics, EncoderSpec, Encoding, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ValidateLif,
    /// One shallow network; the non-spiking baseline is a one-step row.
    Shallow,
    /// Shallow network trained at every `sweep.tau_m`.
    ShallowSweep,
    MbSweep,
    /// One non-spiking mushroom body.
    MbRate,
    MbSpiking,
    Prior,
    Agent,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::ValidateLif,
        ExperimentKind::Shallow,
        ExperimentKind::ShallowSweep,
        ExperimentKind::MbSweep,
        ExperimentKind::MbRate,
        ExperimentKind::MbSpiking,
        ExperimentKind::Prior,
        ExperimentKind::Agent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ValidateLif => "validate-lif",
            ExperimentKind::Shallow => "shallow",
            ExperimentKind::ShallowSweep => "shallow-sweep",
            ExperimentKind::MbSweep => "mb-sweep",
            ExperimentKind::MbRate => "mb-rate",
            ExperimentKind::MbSpiking => "mb-spiking",
            ExperimentKind::Prior => "prior",
            ExperimentKind::Agent => "agent",
        }
    }

    pub fn needs_mnist(self) -> bool {
        !matches!(self, ExperimentKind::ValidateLif | ExperimentKind::Agent)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .with_context(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Directory holding the four MNIST IDX files; `MOTHCORE_DATA_DIR` when absent.
    pub dir: Option<PathBuf>,
    /// Use only the first `n` training images.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub verify_digests: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            dir: None,
            train_limit: None,
            test_limit: None,
            verify_digests: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub variant: Encoding,
    pub steps: usize,
    pub gain: f64,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            variant: Encoding::TrainDelay,
            steps: 8,
            gain: 1.0,
        }
    }
}

impl EncoderSection {
    pub fn spec(&self, seed: u64) -> anyhow::Result<EncoderSpec> {
        Ok(EncoderSpec::new(self.variant, self.steps)?.with_gain(self.gain).with_seed(seed))
    }
}

/// Output layer of the shallow network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronSection {
    pub tau_m: f64,
    pub threshold: f64,
    pub dynamics: Dynamics,
}

impl Default for NeuronSection {
    fn default() -> Self {
        Self {
            tau_m: 2.0,
            threshold: 1.0,
            dynamics: Dynamics::Full,
        }
    }
}

/// Mushroom-body run settings; the body keys sit in the same table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MbSection {
    pub regime: Regime,
    /// Images used to calibrate the fan-out weight.
    pub probe: usize,
    /// Test images used for the sparsity statistics.
    pub sparsity_samples: usize,
    #[serde(flatten)]
    pub body: MushroomBodyConfig,
}

// `flatten` cannot reject unknown keys, so the run keys are split off by
// hand and the rest must match the body config exactly.
impl<'de> Deserialize<'de> for MbSection {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut map = serde_json::Map::<String, serde_json::Value>::deserialize(de)?;
        fn take<T: serde::de::DeserializeOwned, E: Error>(map: &mut serde_json::Map<String, serde_json::Value>, key: &str, default: T) -> Result<T, E> {
            Ok(map.remove(key).map(serde_json::from_value).transpose().map_err(E::custom)?.unwrap_or(default))
        }
        let d = MbSection::default();
        let regime = take::<_, D::Error>(&mut map, "regime", d.regime)?;
        let probe = take::<_, D::Error>(&mut map, "probe", d.probe)?;
        let sparsity_samples = take::<_, D::Error>(&mut map, "sparsity_samples", d.sparsity_samples)?;
        let body = serde_json::from_value(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(Self {
            regime,
            probe,
            sparsity_samples,
            body,
        })
    }
}

impl Default for MbSection {
    fn default() -> Self {
        Self {
            regime: Regime::Rate,
            probe: 100,
            sparsity_samples: 1000,
            body: MushroomBodyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kenyon_cells: Vec<usize>,
    pub inputs_per_kc: Vec<usize>,
    pub tau_m: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kenyon_cells: vec![100, 200, 500, 1000, 2000, 5000],
            inputs_per_kc: vec![10, 35, 70, 150, 300],
            tau_m: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    /// Weight of the log prior against the output counts.
    pub kappa: f64,
    /// Classes in the favoured subset, the true label among them.
    pub subset: usize,
    /// Prior mass on the subset.
    pub mass: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            subset: 3,
            mass: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSection {
    pub steps: usize,
    /// Visits between the samples entering the uniformity test.
    pub thin: usize,
    /// Coarse grid of the uniformity test, per axis.
    pub blocks: usize,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        Self {
            steps: 100_000,
            thin: 1000,
            blocks: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Network JSON written by `train`.
    pub model: Option<PathBuf>,
}

#[allow(clippy::derivable_impls)]
impl Default for EvalSection {
    fn default() -> Self {
        Self { model: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub neuron: NeuronSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub mb: MbSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub world: WorldConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub episode: EpisodeSection,
    #[serde(default)]
    pub lif: ValidationConfig,
    #[serde(default)]
    pub eval: EvalSection,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: 0,
            data: DataSection::default(),
            encoder: EncoderSection::default(),
            neuron: NeuronSection::default(),
            train: TrainConfig::default(),
            mb: MbSection::default(),
            sweep: SweepSection::default(),
            prior: PriorSection::default(),
            world: WorldConfig::default(),
            agent: AgentConfig::default(),
            episode: EpisodeSection::default(),
            lif: ValidationConfig::default(),
            eval: EvalSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let mut c: Self = toml::from_str(text)?;
        c.resolve();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Replaces the seed and propagates it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolve();
        self
    }

    fn resolve(&mut self) {
        self.train.seed = self.seed;
        self.mb.body.seed = self.seed;
        self.agent.mb.seed = self.seed;
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.encoder.steps == 0 {
            bail!("encoder.steps must be at least 1");
        }
        self.train.validate()?;
        if self.mb.probe == 0 {
            bail!("mb.probe must be at least 1");
        }
        if self.experiment == ExperimentKind::MbSweep && (self.sweep.kenyon_cells.is_empty() || self.sweep.inputs_per_kc.is_empty()) {
            bail!("mb-sweep needs non-empty sweep.kenyon_cells and sweep.inputs_per_kc");
        }
        if self.experiment == ExperimentKind::ShallowSweep && self.sweep.tau_m.is_empty() {
            bail!("shallow-sweep needs a non-empty sweep.tau_m");
        }
        if !(1..=10).contains(&self.prior.subset) || !(self.prior.mass > 0.0 && self.prior.mass < 1.0) {
            bail!("prior.subset must lie in 1..=10 and prior.mass in (0, 1)");
        }
        if self.episode.steps == 0 || self.episode.thin == 0 || self.episode.blocks == 0 {
            bail!("episode.steps, episode.thin and episode.blocks must be positive");
        }
        if self.lif.networks == 0 {
            bail!("lif.networks must be at least 1");
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_toml("experiment = \"agent\"\nseed = 4\n").unwrap();
        assert_eq!(c.experiment, ExperimentKind::Agent);
        assert_eq!(c.agent.mb.seed, 4);
        assert_eq!(c.train, TrainConfig { seed: 4, ..TrainConfig::default() });
    }

    #[test]
    fn round_trip_and_hash() {
        let text = "experiment = \"mb-sweep\"\n[mb]\nregime = \"rate\"\nkenyon_cells = 300\n[sweep]\nkenyon_cells = [10, 20]\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.mb.body.kenyon_cells, 300);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_ne!(c.clone().with_seed(1).hash(), c.hash());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(ExperimentConfig::from_toml("experiment = \"agent\"\nsede = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"nope\"\n").is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"shallow\"\n[encoder]\nsteps = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"shallow\"\n[train]\nlearning_rate = -1.0\n").is_err());
    }
}
