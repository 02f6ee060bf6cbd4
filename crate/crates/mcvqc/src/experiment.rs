//! Experiment families: model comparison curves, generalization gaps,
//! trainability sweeps, noise resilience with and without mitigation, and
//! the random-circuit mitigation study.

use std::path::PathBuf;
use std::time::Instant;

use mcvqc_core::density::run_noisy_circuit;
use mcvqc_core::metrics::{entangling_capability, gradient_variance, quantum_error, GradientProbe};
use mcvqc_core::mitigation::{mitigated_expectation, zne_shot_variance};
use mcvqc_core::models::{hardware_efficient_chip, random_circuit};
use mcvqc_core::rng::{mix, seeded};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BackendKind, Config, ModelKind, ZneSection};
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::output::{write_curve_csv, write_metric_csv, CurveRow, MetricRow};
use crate::train::{self, curve_rows, geometry, NoisyEval, RunRecord, TrainOptions, TrainState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Performance,
    Generalization,
    BarrenPlateau,
    NoiseResilience,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "performance" => Ok(ExperimentKind::Performance),
            "generalization" => Ok(ExperimentKind::Generalization),
            "barren_plateau" => Ok(ExperimentKind::BarrenPlateau),
            "noise_resilience" => Ok(ExperimentKind::NoiseResilience),
            other => Err(Error::Config(format!(
                "unknown experiment kind {other:?} (performance|generalization|barren_plateau|noise_resilience)"
            ))),
        }
    }
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Performance => "performance",
            ExperimentKind::Generalization => "generalization",
            ExperimentKind::BarrenPlateau => "barren_plateau",
            ExperimentKind::NoiseResilience => "noise_resilience",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    pub runs: Vec<RunRecord>,
    /// Sweep rows (`barren_plateau`).
    pub metrics: Vec<MetricRow>,
    /// Curve rows (training experiments).
    pub curves: Vec<CurveRow>,
    pub csv: Option<PathBuf>,
    pub wall_clock_secs: f64,
}

/// The comparison line-up: `(name, kind, chips)`.
pub fn lineup(cfg: &Config, include_classical: bool) -> Vec<(String, ModelKind, usize)> {
    let mut out = Vec::new();
    if include_classical {
        out.push(("classical".to_string(), ModelKind::Classical, cfg.model.chips));
    }
    out.push(("single_chip".to_string(), ModelKind::SingleChip, 1));
    for &k in cfg.experiment.chips.iter().filter(|&&k| k > 1) {
        out.push((format!("dimreduc_k{k}"), ModelKind::Dimreduc, k));
    }
    out.push(("full".to_string(), ModelKind::Full, cfg.model.qubits));
    out
}

/// Runs experiment `kind`; artifacts go to `cfg.output.dir` when `write`.
pub fn run_experiment(kind: ExperimentKind, cfg: &Config, ds: Option<&Dataset>, write: bool) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let dir = cfg.output.dir.join(kind.name());
    let need_data = || ds.ok_or_else(|| Error::Data(format!("experiment {} needs a dataset", kind.name())));
    let mut rec = ExperimentRecord {
        kind,
        runs: Vec::new(),
        metrics: Vec::new(),
        curves: Vec::new(),
        csv: write.then(|| cfg.output.dir.join(format!("{}.csv", kind.name()))),
        wall_clock_secs: 0.0,
    };
    match kind {
        ExperimentKind::Performance | ExperimentKind::Generalization => {
            let ds = need_data()?;
            let gen = kind == ExperimentKind::Generalization;
            for (name, mk, chips) in lineup(cfg, true) {
                let opts = TrainOptions {
                    name: Some(name.clone()),
                    kind: Some(mk),
                    chips: Some(chips),
                    out_dir: write.then(|| dir.clone()),
                    ..Default::default()
                };
                let run = train::train(cfg, ds, &opts)?;
                let model = run.final_model.as_ref().expect("train returns the model");
                let geom = geometry(model, cfg, chips);
                rec.curves.extend(curve_rows(&name, &run.history, geom, ds.rows(Split::Train).len(), cfg.seeds.model, gen));
                rec.runs.push(run);
            }
        }
        ExperimentKind::BarrenPlateau => rec.metrics = barren_plateau(cfg)?,
        ExperimentKind::NoiseResilience => {
            let ds = need_data()?;
            for (name, mk, chips) in lineup(cfg, false) {
                let (run, rows) = noise_resilience(cfg, ds, &name, mk, chips)?;
                rec.curves.extend(rows);
                rec.runs.push(run);
            }
        }
    }
    if let Some(path) = &rec.csv {
        if rec.metrics.is_empty() {
            write_curve_csv(path, &rec.curves)?;
        } else {
            write_metric_csv(path, &rec.metrics)?;
        }
    }
    rec.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Entangling capability (normalized and unnormalized) and gradient
/// variance of `k` chips of `n/k` qubits, for every `k` in
/// `experiment.chips`.
pub fn barren_plateau(cfg: &Config) -> Result<Vec<MetricRow>> {
    let n = cfg.model.qubits;
    let mut rows = Vec::new();
    for &k in &cfg.experiment.chips {
        rows.extend(sweep_point(n, k, cfg.model.depth, cfg.experiment.samples, cfg.seeds.sampling, true, true)?);
    }
    Ok(rows)
}

/// Trainability metrics of one `(n, k)` point.
pub fn sweep_point(n: usize, k: usize, depth: usize, samples: usize, seed: u64, ent: bool, gradvar: bool) -> Result<Vec<MetricRow>> {
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::Config(format!("n = {n} is not divisible by k = {k}")));
    }
    let l = n / k;
    let chip = hardware_efficient_chip(l, depth)?;
    let row = |metric: &str, value: f64| MetricRow { metric: metric.into(), n, k, l, s: samples, seed, value };
    let mut rows = Vec::new();
    if ent {
        let e = entangling_capability(&chip, k, samples, seed)?;
        rows.push(row("ent", e.normalized));
        rows.push(row("ent_unnormalized", e.unnormalized));
    }
    if gradvar {
        rows.push(row("grad_variance", gradient_variance(&chip, k, samples, seed, &GradientProbe::default())?));
    }
    Ok(rows)
}

/// Trains ideally and, after every epoch, measures the validation quantum
/// error under `backend` noise without and with zero-noise extrapolation.
pub fn noise_resilience(
    cfg: &Config,
    ds: &Dataset,
    name: &str,
    kind: ModelKind,
    chips: usize,
) -> Result<(RunRecord, Vec<CurveRow>)> {
    let start = Instant::now();
    let mut ideal_cfg = cfg.clone();
    ideal_cfg.backend.kind = BackendKind::Ideal;
    let loss = cfg.loss();
    let noise = cfg.backend.noise()?;
    let zne = cfg.zne.clone().unwrap_or_default().zne();
    let mut val = ds.rows(Split::Val);
    if let Some(m) = cfg.experiment.noise_eval_samples {
        val.truncate(m);
    }
    let mut state = TrainState::new(train::build_model(cfg, kind, chips, ds.dim())?);
    let (n, k, l) = geometry(&state.model, cfg, chips);
    let mut rows = Vec::new();
    for epoch in 1..=cfg.epochs {
        let mut r = train::run_epoch(&ideal_cfg, ds, &mut state, epoch)?;
        let ideal = train::mean_loss(&state.model, ds, &val, loss, &mcvqc_core::Backend::Ideal)?;
        let seed = mix(cfg.seeds.sampling, epoch as u64);
        let plain = NoisyEval { noise, n_cir: cfg.backend.n_cir, zne: None, seed };
        let mitigated = NoisyEval { noise, n_cir: cfg.backend.n_cir, zne: Some(zne.clone()), seed };
        let q = quantum_error(train::mean_loss_noisy(&state.model, ds, &val, loss, &plain)?, ideal);
        let qz = quantum_error(train::mean_loss_noisy(&state.model, ds, &val, loss, &mitigated)?, ideal);
        r.quantum_error = Some(q);
        if let Some(last) = state.history.last_mut() {
            last.quantum_error = Some(q);
        }
        let s = ds.rows(Split::Train).len();
        let mut push = |metric: &str, value: f64| {
            rows.push(CurveRow { model: name.into(), epoch, metric: metric.into(), n, k, l, s, seed: cfg.seeds.model, value })
        };
        push("train_loss", r.train_loss);
        push("val_loss", r.val_loss);
        push("quantum_error", q);
        push("quantum_error_zne", qz);
    }
    let run = RunRecord {
        model: name.into(),
        config: cfg.clone(),
        config_hash: cfg.hash(),
        summary: train::summarize(&state.history),
        early_stopped: false,
        history: state.history.clone(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        artifacts: None,
        final_model: Some(state.model),
    };
    Ok((run, rows))
}

/// Per-circuit outcome of the mitigation study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZneOutcome {
    pub ideal: f64,
    pub noisy: f64,
    pub mitigated: f64,
    /// Shot variance of the unmitigated estimator at `n_cir`.
    pub var_noisy: f64,
    /// Shot variance of the extrapolated estimator at `n_cir` per scale.
    pub var_mitigated: f64,
}

impl ZneOutcome {
    pub fn bias_noisy(&self) -> f64 {
        (self.noisy - self.ideal).abs()
    }

    pub fn bias_mitigated(&self) -> f64 {
        (self.mitigated - self.ideal).abs()
    }
}

/// Exact-expectation ZNE on `zne.circuits` random circuits with uniformly
/// random angles. Variances are evaluated for `n_cir` shots per scale
/// (`zne.n_cir`, or `backend.n_cir`, or 500).
pub fn zne_study(cfg: &Config) -> Result<(Vec<ZneOutcome>, Vec<MetricRow>)> {
    let z: ZneSection = cfg.zne.clone().unwrap_or_default();
    let noise = cfg.backend.noise()?;
    let n_cir = z.n_cir.or(cfg.backend.n_cir).unwrap_or(500);
    let mut exact = z.zne();
    exact.n_cir = None;
    let mut outcomes = Vec::with_capacity(z.circuits);
    let mut rows = Vec::new();
    let base = cfg.seeds.sampling;
    for i in 0..z.circuits {
        let seed = mix(base, i as u64);
        let circuit = random_circuit(z.qubits, z.depth, seed)?;
        let mut r = seeded(mix(seed, 1));
        let enc: Vec<f64> = (0..circuit.num_encoding).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
        let theta: Vec<f64> = (0..circuit.num_trainable).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
        let ideal = circuit.expectation(&enc, &theta)?;
        let noisy = run_noisy_circuit(&circuit, &enc, &theta, &noise)?.expectation_z(circuit.output_wire())?;
        let (mitigated, points) = mitigated_expectation(&circuit, &enc, &theta, &noise, &exact, seed)?;
        let o = ZneOutcome {
            ideal,
            noisy,
            mitigated,
            var_noisy: (1.0 - noisy * noisy) / n_cir as f64,
            var_mitigated: zne_shot_variance(&points, exact.extrapolation, n_cir)?,
        };
        let q = z.qubits;
        let row = |metric: &str, value: f64| MetricRow { metric: metric.into(), n: q, k: 1, l: q, s: n_cir as usize, seed, value };
        rows.push(row("bias_unmitigated", o.bias_noisy()));
        rows.push(row("bias_zne", o.bias_mitigated()));
        rows.push(row("variance_unmitigated", o.var_noisy));
        rows.push(row("variance_zne", o.var_mitigated));
        outcomes.push(o);
    }
    Ok((outcomes, rows))
}
