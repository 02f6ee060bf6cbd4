//! TOML run configuration. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use mcvqc_core::loss::Loss;
use mcvqc_core::mitigation::ZneConfig;
use mcvqc_core::optim::AdamConfig;
use mcvqc_core::{Backend, GradientMethod, NoiseModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Defaults to cross-entropy for `qcnn`, MSE otherwise.
    #[serde(default)]
    pub loss: Option<Loss>,
    #[serde(default)]
    pub grad_method: GradientMethod,
    pub model: ModelConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub zne: Option<ZneSection>,
    pub data: DataConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

fn default_epochs() -> usize {
    30
}

fn default_batch() -> usize {
    32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Classical,
    SingleChip,
    Dimreduc,
    Full,
    Qcnn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Classical => "classical",
            ModelKind::SingleChip => "single_chip",
            ModelKind::Dimreduc => "dimreduc",
            ModelKind::Full => "full",
            ModelKind::Qcnn => "qcnn",
        }
    }
}

/// `qubits` is the total register for `single_chip`/`dimreduc`/`classical`
/// (the bottleneck width) and the per-chip width for `full`/`qcnn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub qubits: usize,
    #[serde(default = "one")]
    pub chips: usize,
    #[serde(default = "one")]
    pub depth: usize,
    #[serde(default)]
    pub classes: Option<usize>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps_hat")]
    pub eps_hat: f64,
}

fn default_lr() -> f64 {
    AdamConfig::default().lr
}
fn default_beta1() -> f64 {
    AdamConfig::default().beta1
}
fn default_beta2() -> f64 {
    AdamConfig::default().beta2
}
fn default_eps_hat() -> f64 {
    AdamConfig::default().eps_hat
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let a = AdamConfig::default();
        OptimizerConfig { lr: a.lr, beta1: a.beta1, beta2: a.beta2, eps_hat: a.eps_hat }
    }
}

impl OptimizerConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps_hat: self.eps_hat }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default)]
    pub model: u64,
    #[serde(default)]
    pub data: u64,
    #[serde(default)]
    pub sampling: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Ideal,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    /// Depolarizing probability per gate and wire.
    #[serde(default = "default_noise")]
    pub eps: f64,
    /// Amplitude-damping probability per gate and wire.
    #[serde(default = "default_noise")]
    pub gamma: f64,
    /// Shots per chip readout under noise; exact expectations when absent.
    #[serde(default)]
    pub n_cir: Option<u64>,
    /// Train on the noisy backend instead of evaluating noise afterwards.
    #[serde(default)]
    pub train_under_noise: bool,
}

fn default_noise() -> f64 {
    0.01
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig { kind: BackendKind::Ideal, eps: 0.01, gamma: 0.01, n_cir: None, train_under_noise: false }
    }
}

impl BackendConfig {
    pub fn noise(&self) -> Result<NoiseModel> {
        Ok(NoiseModel::new(self.eps, self.gamma)?)
    }

    /// Noise applied at evaluation time, if any.
    pub fn eval_noise(&self) -> Result<Option<NoiseModel>> {
        match self.kind {
            BackendKind::Ideal => Ok(None),
            BackendKind::Noisy => self.noise().map(Some),
        }
    }

    pub fn training_backend(&self) -> Result<Backend> {
        match (self.kind, self.train_under_noise) {
            (BackendKind::Noisy, true) => Ok(Backend::Noisy(self.noise()?)),
            _ => Ok(Backend::Ideal),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZneSection {
    #[serde(default = "default_scales")]
    pub scale_factors: Vec<u32>,
    #[serde(default)]
    pub extrapolation: mcvqc_core::mitigation::Extrapolation,
    #[serde(default)]
    pub n_cir: Option<u64>,
    /// Circuits in the `zne` command's random-circuit study.
    #[serde(default = "default_circuits")]
    pub circuits: usize,
    /// Qubits per random circuit in that study.
    #[serde(default = "default_zne_qubits")]
    pub qubits: usize,
    #[serde(default = "default_zne_depth")]
    pub depth: usize,
}

fn default_scales() -> Vec<u32> {
    vec![1, 3, 5]
}
fn default_circuits() -> usize {
    50
}
fn default_zne_qubits() -> usize {
    4
}
fn default_zne_depth() -> usize {
    2
}

impl Default for ZneSection {
    fn default() -> Self {
        ZneSection {
            scale_factors: default_scales(),
            extrapolation: Default::default(),
            n_cir: None,
            circuits: default_circuits(),
            qubits: default_zne_qubits(),
            depth: default_zne_depth(),
        }
    }
}

impl ZneSection {
    pub fn zne(&self) -> ZneConfig {
        ZneConfig { scale_factors: self.scale_factors.clone(), extrapolation: self.extrapolation, n_cir: self.n_cir }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Idx,
    Csv,
    Blobs,
    Spatiotemporal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// IDX image file (relative paths resolve against the config file).
    #[serde(default)]
    pub images: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// CSV file.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub target_column: Option<String>,
    /// Reduce 28x28 images to 8x8.
    #[serde(default)]
    pub downsample: bool,
    #[serde(default)]
    pub max_samples: Option<usize>,
    #[serde(default = "default_fractions")]
    pub fractions: [f64; 3],
    /// Synthetic generator sizes.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub classes: Option<usize>,
    #[serde(default)]
    pub separation: Option<f64>,
    #[serde(default)]
    pub channels: Option<usize>,
    #[serde(default)]
    pub timesteps: Option<usize>,
}

fn default_fractions() -> [f64; 3] {
    [0.8, 0.1, 0.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Chip counts swept by DimReduc models and the trainability sweep.
    #[serde(default = "default_chips")]
    pub chips: Vec<usize>,
    /// Parameter samples for entangling capability and gradient variance.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Validation rows evaluated under noise per epoch (all when absent).
    #[serde(default)]
    pub noise_eval_samples: Option<usize>,
}

fn default_chips() -> Vec<usize> {
    vec![1, 2, 4]
}
fn default_samples() -> usize {
    1000
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { chips: default_chips(), samples: default_samples(), noise_eval_samples: None }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `path` and resolves relative data/output paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data.images, &mut cfg.data.labels, &mut cfg.data.path].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn loss(&self) -> Loss {
        self.loss.unwrap_or(match self.model.kind {
            ModelKind::Qcnn => Loss::CrossEntropy,
            _ => Loss::Mse,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        self.optimizer.adam().validate().map_err(|e| Error::Config(e.to_string()))?;
        let m = &self.model;
        if m.qubits == 0 || m.chips == 0 || m.depth == 0 {
            return bad("model.qubits, model.chips and model.depth must be >= 1".into());
        }
        if m.kind == ModelKind::Dimreduc && !m.qubits.is_multiple_of(m.chips) {
            return bad(format!("model.qubits = {} is not divisible by model.chips = {}", m.qubits, m.chips));
        }
        if m.kind == ModelKind::Qcnn && m.classes.is_none() {
            return bad("model.classes is required for qcnn".into());
        }
        let b = &self.backend;
        NoiseModel::new(b.eps, b.gamma).map_err(|e| Error::Config(format!("backend: {e}")))?;
        if b.n_cir == Some(0) {
            return bad("backend.n_cir must be >= 1".into());
        }
        if b.train_under_noise && b.kind == BackendKind::Noisy && self.grad_method == GradientMethod::Adjoint {
            return bad("adjoint gradients need the ideal backend; use grad_method = \"parameter_shift\"".into());
        }
        if let Some(z) = &self.zne {
            z.zne().validate().map_err(|e| Error::Config(format!("zne: {e}")))?;
            if z.qubits == 0 || z.depth == 0 || z.circuits == 0 {
                return bad("zne.qubits, zne.depth and zne.circuits must be >= 1".into());
            }
        }
        let f = self.data.fractions;
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 || f.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return bad(format!("data.fractions {f:?} must lie in [0,1] and sum to 1"));
        }
        let d = &self.data;
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { bad(format!("data.source = {:?} requires {what}", d.source)) };
        match d.source {
            DataSource::Idx => need(d.images.is_some() && d.labels.is_some(), "data.images and data.labels")?,
            DataSource::Csv => need(d.path.is_some() && d.target_column.is_some(), "data.path and data.target_column")?,
            DataSource::Blobs => need(d.samples.is_some() && d.dim.is_some(), "data.samples and data.dim")?,
            DataSource::Spatiotemporal => need(
                d.samples.is_some() && d.channels.is_some() && d.timesteps.is_some(),
                "data.samples, data.channels and data.timesteps",
            )?,
        }
        if self.experiment.chips.is_empty() || self.experiment.chips.contains(&0) {
            return bad("experiment.chips must be a nonempty list of positive counts".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
