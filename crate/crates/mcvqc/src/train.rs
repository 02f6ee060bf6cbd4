//! Dataset preparation, model construction and the Adam training loop.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mcvqc_core::density::{run_noisy_circuit, sample_pauli_mean};
use mcvqc_core::loss::Loss;
use mcvqc_core::metrics::{quantum_error, MetricsRecord};
use mcvqc_core::mitigation::{mitigated_expectation, ZneConfig};
use mcvqc_core::models::{self, Model, QcnnSpec, Trainable};
use mcvqc_core::optim::{adam_step, AdamState};
use mcvqc_core::rng::mix;
use mcvqc_core::{Backend, EnsembleModel, NoiseModel};
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::{Config, DataSource, ModelKind};
use crate::data::{self, Dataset, Split};
use crate::error::{Error, Result};
use crate::output::{write_curve_csv, CurveRow, JsonLog};

/// Loads, downsamples, subsamples and splits the configured dataset.
pub fn load_dataset(cfg: &Config) -> Result<Dataset> {
    let d = &cfg.data;
    let seed = cfg.seeds.data;
    let mut ds = match d.source {
        DataSource::Idx => data::parse_idx(d.images.as_ref().unwrap(), d.labels.as_ref().unwrap())?,
        DataSource::Csv => data::load_csv(d.path.as_ref().unwrap(), d.target_column.as_ref().unwrap())?,
        DataSource::Blobs => data::synthetic_blobs(
            d.samples.unwrap(),
            d.dim.unwrap(),
            d.classes.unwrap_or(2),
            d.separation.unwrap_or(3.0),
            mix(seed, 1),
        )?,
        DataSource::Spatiotemporal => {
            data::synthetic_spatiotemporal(d.samples.unwrap(), d.channels.unwrap(), d.timesteps.unwrap(), mix(seed, 1))?
        }
    };
    if d.downsample {
        ds = data::downsample_8x8(&ds)?;
    }
    if let Some(max) = d.max_samples {
        ds = ds.subsample(max, mix(seed, 2));
    }
    if cfg.model.kind == ModelKind::Qcnn {
        ds = ds.with_label_targets()?;
    }
    data::split(&ds, d.fractions, mix(seed, 3))
}

/// Builds the configured architecture for `input_dim` features.
pub fn build_model(cfg: &Config, kind: ModelKind, chips: usize, input_dim: usize) -> Result<Model> {
    let m = &cfg.model;
    let seed = cfg.seeds.model;
    Ok(match kind {
        ModelKind::Classical => Model::Classical(models::build_classical_ae(input_dim, m.qubits, m.depth, chips, seed)?),
        ModelKind::SingleChip => Model::Ensemble(models::build_single_chip_ae(input_dim, m.qubits, m.depth, seed)?),
        ModelKind::Dimreduc => {
            Model::Ensemble(models::build_multichip_ae_reduced(input_dim, m.qubits, chips, m.depth, seed)?)
        }
        ModelKind::Full => Model::Ensemble(models::build_multichip_ae_full(input_dim, m.qubits, m.depth, seed)?),
        ModelKind::Qcnn => {
            let classes = m.classes.ok_or_else(|| Error::Config("model.classes is required for qcnn".into()))?;
            let spec = QcnnSpec { n: m.qubits, d: m.depth, k: chips, input_dim, classes };
            Model::Ensemble(models::build_qcnn(&spec, seed)?)
        }
    })
}

/// `(n, k, l)`: total qubits, chips and qubits per chip.
pub fn geometry(model: &Model, cfg: &Config, chips: usize) -> (usize, usize, usize) {
    match model {
        Model::Ensemble(e) => {
            let (k, l) = (e.num_chips(), e.chip.num_qubits);
            (k * l, k, l)
        }
        Model::Classical(_) => {
            let l = cfg.model.qubits / chips;
            (l * chips, chips, l)
        }
    }
}

/// How chip readouts are estimated when evaluating under noise.
#[derive(Debug, Clone)]
pub struct NoisyEval {
    pub noise: NoiseModel,
    /// Shots per chip readout; exact expectations when `None`.
    pub n_cir: Option<u64>,
    pub zne: Option<ZneConfig>,
    pub seed: u64,
}

impl NoisyEval {
    fn chip_value(&self, model: &EnsembleModel, angles: &[f64], theta: &[f64], seed: u64) -> Result<f64> {
        let chip = &model.chip;
        if self.noise.is_noiseless() && self.n_cir.is_none() && self.zne.as_ref().is_none_or(|z| z.n_cir.is_none()) {
            return Ok(chip.expectation(angles, theta)?);
        }
        if let Some(z) = &self.zne {
            return Ok(mitigated_expectation(chip, angles, theta, &self.noise, z, seed)?.0);
        }
        let exact = run_noisy_circuit(chip, angles, theta, &self.noise)?.expectation_z(chip.output_wire())?;
        Ok(match self.n_cir {
            Some(n) => sample_pauli_mean(exact, n, seed)?,
            None => exact,
        })
    }

    /// Model output for one row; classical models are noise-free.
    pub fn predict(&self, model: &Model, x: &[f64], row: usize) -> Result<Vec<f64>> {
        match model {
            Model::Classical(_) => model.predict(x, &Backend::Ideal).map_err(Into::into),
            Model::Ensemble(e) => {
                let row_seed = mix(self.seed, row as u64);
                let f = e.forward_with(x, |c, a, t| {
                    self.chip_value(e, a, t, mix(row_seed, c as u64)).map_err(|err| match err {
                        Error::Core(inner) => inner,
                        other => mcvqc_core::Error::InvalidArgument(other.to_string()),
                    })
                })?;
                Ok(f.output)
            }
        }
    }
}

/// Mean loss over `rows`.
pub fn mean_loss(model: &Model, ds: &Dataset, rows: &[usize], loss: Loss, backend: &Backend) -> Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &i in rows {
        let out = model.predict(&ds.features[i], backend)?;
        total += loss.evaluate(&out, &ds.targets[i])?.0;
    }
    Ok(total / rows.len() as f64)
}

pub fn mean_loss_noisy(model: &Model, ds: &Dataset, rows: &[usize], loss: Loss, eval: &NoisyEval) -> Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &i in rows {
        let out = eval.predict(model, &ds.features[i], i)?;
        total += loss.evaluate(&out, &ds.targets[i])?.0;
    }
    Ok(total / rows.len() as f64)
}

/// Model plus optimizer state between epochs.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub model: Model,
    pub adam: AdamState,
    pub history: Vec<MetricsRecord>,
}

impl TrainState {
    pub fn new(model: Model) -> Self {
        let adam = AdamState::new(model.param_count());
        TrainState { model, adam, history: Vec::new() }
    }

    pub fn epochs_done(&self) -> usize {
        self.history.len()
    }
}

/// One pass over the training split followed by evaluation on every split.
/// `epoch` is 1-based.
pub fn run_epoch(cfg: &Config, ds: &Dataset, state: &mut TrainState, epoch: usize) -> Result<MetricsRecord> {
    let loss = cfg.loss();
    let backend = cfg.backend.training_backend()?;
    let adam = cfg.optimizer.adam();
    let batches = data::batches(ds, Split::Train, cfg.batch_size, data::epoch_seed(cfg.seeds.data, epoch))?;
    let mut params = state.model.params();
    for batch in batches {
        let mut grad = vec![0.0; params.len()];
        for &i in &batch {
            let (value, g) = state.model.loss_and_gradient(&ds.features[i], &ds.targets[i], loss, &backend, cfg.grad_method)?;
            if !value.is_finite() {
                return Err(Error::Diverged { epoch, what: "training loss" });
            }
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch, what: "gradient" });
        }
        adam_step(&mut params, &grad, &mut state.adam, &adam)?;
        state.model.set_params(&params)?;
    }
    let train = ds.rows(Split::Train);
    let val = ds.rows(Split::Val);
    let test = ds.rows(Split::Test);
    let train_loss = mean_loss(&state.model, ds, &train, loss, &backend)?;
    let val_loss = mean_loss(&state.model, ds, &val, loss, &backend)?;
    let test_loss = mean_loss(&state.model, ds, &test, loss, &backend)?;
    for (v, what) in [(train_loss, "train loss"), (val_loss, "validation loss"), (test_loss, "test loss")] {
        if !v.is_finite() {
            return Err(Error::Diverged { epoch, what });
        }
    }
    let quantum = match (cfg.backend.eval_noise()?, cfg.backend.train_under_noise) {
        (Some(noise), false) => {
            let eval = NoisyEval { noise, n_cir: cfg.backend.n_cir, zne: None, seed: mix(cfg.seeds.sampling, epoch as u64) };
            let noisy = mean_loss_noisy(&state.model, ds, &val, loss, &eval)?;
            Some(quantum_error(noisy, val_loss))
        }
        _ => None,
    };
    let rec = MetricsRecord {
        epoch,
        train_loss,
        val_loss,
        test_loss,
        gen_error: test_loss - train_loss,
        quantum_error: quantum,
        ent_capability: None,
        grad_variance: None,
    };
    state.history.push(rec.clone());
    Ok(rec)
}

/// Curve rows for every recorded epoch.
pub fn curve_rows(
    name: &str,
    history: &[MetricsRecord],
    (n, k, l): (usize, usize, usize),
    samples: usize,
    seed: u64,
    with_gen_error: bool,
) -> Vec<CurveRow> {
    let mut rows = Vec::new();
    for r in history {
        let mut push = |metric: &str, value: f64| {
            rows.push(CurveRow { model: name.into(), epoch: r.epoch, metric: metric.into(), n, k, l, s: samples, seed, value })
        };
        push("train_loss", r.train_loss);
        push("val_loss", r.val_loss);
        push("test_loss", r.test_loss);
        if with_gen_error {
            push("gen_error", r.gen_error);
        }
        if let Some(q) = r.quantum_error {
            push("quantum_error", q);
        }
    }
    rows
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifacts {
    pub log: PathBuf,
    pub csv: PathBuf,
    pub checkpoint: PathBuf,
}

impl Artifacts {
    pub fn in_dir(dir: &Path, name: &str) -> Self {
        Artifacts {
            log: dir.join(format!("{name}.jsonl")),
            csv: dir.join(format!("{name}.csv")),
            checkpoint: dir.join(format!("{name}.checkpoint.json")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub final_train_loss: f64,
    pub final_val_loss: f64,
    pub final_test_loss: f64,
    pub gen_error: f64,
    pub best_val_loss: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub model: String,
    pub config: Config,
    pub config_hash: String,
    pub history: Vec<MetricsRecord>,
    pub summary: Summary,
    /// `true` when fewer epochs than configured were recorded.
    pub early_stopped: bool,
    pub wall_clock_secs: f64,
    pub artifacts: Option<Artifacts>,
    #[serde(skip)]
    pub final_model: Option<Model>,
}

#[derive(Serialize)]
struct LogLine<'a> {
    model: &'a str,
    #[serde(flatten)]
    record: &'a MetricsRecord,
    elapsed_secs: f64,
}

pub fn summarize(history: &[MetricsRecord]) -> Summary {
    let last = history.last().cloned().unwrap_or_default();
    let best = history
        .iter()
        .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss))
        .cloned()
        .unwrap_or_default();
    Summary {
        final_train_loss: last.train_loss,
        final_val_loss: last.val_loss,
        final_test_loss: last.test_loss,
        gen_error: last.gen_error,
        best_val_loss: best.val_loss,
        best_epoch: best.epoch,
    }
}

/// Options for [`train`].
#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Name used for the model column and artifact files.
    pub name: Option<String>,
    /// Overrides `model.kind`.
    pub kind: Option<ModelKind>,
    /// Overrides `model.chips`.
    pub chips: Option<usize>,
    /// Artifact directory; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Continue from this checkpoint.
    pub resume: Option<Checkpoint>,
    /// Stop after this many total epochs (the record is flagged).
    pub stop_after: Option<usize>,
}

/// Trains one model on a prepared dataset.
pub fn train(cfg: &Config, ds: &Dataset, opts: &TrainOptions) -> Result<RunRecord> {
    let start = Instant::now();
    let kind = opts.kind.unwrap_or(cfg.model.kind);
    let chips = opts.chips.unwrap_or(cfg.model.chips);
    let name = opts.name.clone().unwrap_or_else(|| kind.name().to_string());
    let hash = cfg.hash();
    let mut state = match &opts.resume {
        Some(ck) => {
            if ck.config_hash != hash {
                return Err(Error::Checkpoint(format!(
                    "checkpoint config hash {} does not match config {hash}",
                    ck.config_hash
                )));
            }
            if ck.kind != kind {
                return Err(Error::Checkpoint(format!("checkpoint holds a {} model, not {}", ck.kind.name(), kind.name())));
            }
            TrainState { model: ck.model.clone(), adam: ck.optimizer.clone(), history: ck.history.clone() }
        }
        None => TrainState::new(build_model(cfg, kind, chips, ds.dim())?),
    };
    if state.model.input_dim() != ds.dim() {
        return Err(Error::Data(format!("model expects {} features, dataset has {}", state.model.input_dim(), ds.dim())));
    }
    let geom = geometry(&state.model, cfg, chips);
    let artifacts = opts.out_dir.as_ref().map(|d| Artifacts::in_dir(d, &name));
    let mut log = match &artifacts {
        Some(a) if opts.resume.is_some() => Some(JsonLog::append(&a.log)?),
        Some(a) => Some(JsonLog::create(&a.log)?),
        None => None,
    };
    let last = opts.stop_after.unwrap_or(cfg.epochs).min(cfg.epochs);
    for epoch in state.epochs_done() + 1..=last {
        let rec = run_epoch(cfg, ds, &mut state, epoch)?;
        if let (Some(log), Some(a)) = (&mut log, &artifacts) {
            log.write(&LogLine { model: &name, record: &rec, elapsed_secs: start.elapsed().as_secs_f64() })?;
            Checkpoint::new(hash.clone(), kind, epoch, cfg.seeds, state.model.clone(), state.adam.clone(), state.history.clone())
                .save(&a.checkpoint)?;
        }
    }
    if let Some(a) = &artifacts {
        let rows = curve_rows(&name, &state.history, geom, ds.rows(Split::Train).len(), cfg.seeds.model, true);
        write_curve_csv(&a.csv, &rows)?;
    }
    Ok(RunRecord {
        model: name,
        config: cfg.clone(),
        config_hash: hash,
        summary: summarize(&state.history),
        final_model: Some(state.model.clone()),
        early_stopped: state.history.len() < cfg.epochs,
        history: state.history,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        artifacts,
    })
}
