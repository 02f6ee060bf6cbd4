mod common;

use common::config;
use mcvqc::checkpoint::Checkpoint;
use mcvqc::config::ModelKind;
use mcvqc::experiment::{self, ExperimentKind};
use mcvqc::output::{read_curve_csv, read_metric_csv};
use mcvqc::train::{self, TrainOptions};
use mcvqc_core::models::{Model, Trainable};

const BLOBS: &str = r#"
epochs = 2
batch_size = 8
[model]
kind = "dimreduc"
qubits = 4
chips = 2
depth = 1
[optimizer]
lr = 0.05
[seeds]
model = 1
data = 1
sampling = 1
[data]
source = "blobs"
samples = 60
dim = 6
classes = 2
separation = 2.0
"#;

fn with_seed(text: &str, seed: u64) -> String {
    text.replace("model = 1\ndata = 1", &format!("model = {seed}\ndata = {seed}"))
}

#[test]
fn two_epochs_reduce_training_loss() {
    let mut improved = 0;
    for seed in 1..=5 {
        let cfg = config(&with_seed(BLOBS, seed));
        let ds = train::load_dataset(&cfg).unwrap();
        let rec = train::train(&cfg, &ds, &TrainOptions::default()).unwrap();
        assert_eq!(rec.history.len(), 2);
        improved += usize::from(rec.history[1].train_loss <= rec.history[0].train_loss);
    }
    assert!(improved >= 4, "{improved}/5");
}

#[test]
fn zero_learning_rate_keeps_losses() {
    let cfg = config(&BLOBS.replace("lr = 0.05", "lr = 0.0").replace("epochs = 2", "epochs = 3"));
    let ds = train::load_dataset(&cfg).unwrap();
    let rec = train::train(&cfg, &ds, &TrainOptions::default()).unwrap();
    for r in &rec.history {
        assert_eq!(r.train_loss.to_bits(), rec.history[0].train_loss.to_bits());
        assert_eq!(r.val_loss.to_bits(), rec.history[0].val_loss.to_bits());
    }
}

#[test]
fn resume_matches_uninterrupted_run() {
    let cfg = config(&BLOBS.replace("epochs = 2", "epochs = 4"));
    let ds = train::load_dataset(&cfg).unwrap();
    let full = train::train(&cfg, &ds, &TrainOptions::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let first = TrainOptions { out_dir: Some(dir.path().into()), stop_after: Some(2), ..Default::default() };
    let partial = train::train(&cfg, &ds, &first).unwrap();
    assert!(partial.early_stopped);
    let ck = Checkpoint::load(&partial.artifacts.unwrap().checkpoint).unwrap();
    assert_eq!(ck.epoch, 2);
    let second = TrainOptions { out_dir: Some(dir.path().into()), resume: Some(ck), ..Default::default() };
    let resumed = train::train(&cfg, &ds, &second).unwrap();
    assert_eq!(resumed.history.len(), 4);
    for (a, b) in full.history.iter().zip(&resumed.history) {
        assert!((a.train_loss - b.train_loss).abs() <= 1e-9);
        assert!((a.val_loss - b.val_loss).abs() <= 1e-9);
    }
    let log = std::fs::read_to_string(resumed.artifacts.unwrap().log).unwrap();
    assert_eq!(log.lines().count(), 4);
}

#[test]
fn resume_rejects_other_config() {
    let cfg = config(BLOBS);
    let ds = train::load_dataset(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rec = train::train(&cfg, &ds, &TrainOptions { out_dir: Some(dir.path().into()), ..Default::default() }).unwrap();
    let ck = Checkpoint::load(&rec.artifacts.unwrap().checkpoint).unwrap();
    let other = config(&BLOBS.replace("lr = 0.05", "lr = 0.01"));
    let err = train::train(&other, &ds, &TrainOptions { resume: Some(ck), ..Default::default() }).unwrap_err();
    assert!(err.to_string().contains("hash"), "{err}");
}

#[test]
fn checkpoint_round_trip_and_versioning() {
    let cfg = config(BLOBS);
    let ds = train::load_dataset(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rec = train::train(&cfg, &ds, &TrainOptions { out_dir: Some(dir.path().into()), ..Default::default() }).unwrap();
    let path = rec.artifacts.unwrap().checkpoint;
    let ck = Checkpoint::load(&path).unwrap();
    assert_eq!(ck.config_hash, cfg.hash());
    assert_eq!(ck.seeds, cfg.seeds);
    let trained = rec.final_model.unwrap();
    assert_eq!(Trainable::params(&ck.model), Trainable::params(&trained));
    match (&ck.model, &trained) {
        (Model::Ensemble(a), Model::Ensemble(b)) => assert_eq!(a.partition, b.partition),
        _ => panic!("dimreduc is an ensemble"),
    }

    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    v["version"] = 99.into();
    std::fs::write(&path, v.to_string()).unwrap();
    assert!(Checkpoint::load(&path).unwrap_err().to_string().contains("version"));
    std::fs::write(&path, "{}").unwrap();
    assert!(Checkpoint::load(&path).is_err());
}

#[test]
fn training_csv_schema() {
    let cfg = config(BLOBS);
    let ds = train::load_dataset(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rec = train::train(&cfg, &ds, &TrainOptions { out_dir: Some(dir.path().into()), ..Default::default() }).unwrap();
    let rows = read_curve_csv(&rec.artifacts.unwrap().csv).unwrap();
    assert_eq!(rows.len(), 2 * 4);
    assert!(rows.iter().all(|r| r.model == "dimreduc" && r.n == 4 && r.k == 2 && r.l == 2));
}

#[test]
fn qcnn_trains_with_cross_entropy() {
    let text = BLOBS.replace("kind = \"dimreduc\"\nqubits = 4\nchips = 2", "kind = \"qcnn\"\nqubits = 2\nchips = 3\nclasses = 2");
    let cfg = config(&text);
    let ds = train::load_dataset(&cfg).unwrap();
    assert_eq!(ds.targets[0].len(), 1);
    let rec = train::train(&cfg, &ds, &TrainOptions::default()).unwrap();
    assert!(rec.history.iter().all(|r| r.train_loss.is_finite()));
}

#[test]
fn noisy_backend_records_quantum_error() {
    let text = format!("{BLOBS}\n[backend]\nkind = \"noisy\"\neps = 0.05\ngamma = 0.02\n");
    let cfg = config(&text);
    let ds = train::load_dataset(&cfg).unwrap();
    let rec = train::train(&cfg, &ds, &TrainOptions::default()).unwrap();
    assert!(rec.history.iter().all(|r| r.quantum_error.is_some_and(|q| q > 0.0)));
}

#[test]
fn arity_mismatch_is_reported() {
    let cfg = config(BLOBS);
    let ds = train::load_dataset(&config(&BLOBS.replace("dim = 6", "dim = 5"))).unwrap();
    let ck_model = train::build_model(&cfg, ModelKind::Dimreduc, 2, 6).unwrap();
    let ck = Checkpoint::new(cfg.hash(), ModelKind::Dimreduc, 0, cfg.seeds, ck_model.clone(),
        mcvqc_core::optim::AdamState::new(ck_model.param_count()), Vec::new());
    let err = train::train(&cfg, &ds, &TrainOptions { resume: Some(ck), ..Default::default() }).unwrap_err();
    assert!(matches!(err, mcvqc::Error::Data(_)), "{err}");
}

const NOISE: &str = r#"
epochs = 2
batch_size = 16
grad_method = "adjoint"
[model]
kind = "dimreduc"
qubits = 4
depth = 1
[optimizer]
lr = 0.02
[seeds]
model = 2
data = 2
sampling = 2
[backend]
kind = "noisy"
eps = 0.0
gamma = 0.0
[data]
source = "blobs"
samples = 40
dim = 8
[experiment]
chips = [2, 4]
noise_eval_samples = 4
"#;

#[test]
fn noise_resilience_without_noise_is_exact() {
    let cfg = config(NOISE);
    let ds = train::load_dataset(&cfg).unwrap();
    let rec = experiment::run_experiment(ExperimentKind::NoiseResilience, &cfg, Some(&ds), false).unwrap();
    let q: Vec<f64> = rec.curves.iter().filter(|r| r.metric.starts_with("quantum_error")).map(|r| r.value).collect();
    // single_chip, dimreduc_k2, dimreduc_k4, full; two metrics; two epochs.
    assert_eq!(q.len(), 4 * 2 * 2);
    assert!(q.iter().all(|&v| v == 0.0), "{q:?}");
}

#[test]
fn noise_resilience_under_noise_reports_both_curves() {
    let cfg = config(&NOISE.replace("eps = 0.0", "eps = 0.03"));
    let ds = train::load_dataset(&cfg).unwrap();
    let rec = experiment::run_experiment(ExperimentKind::NoiseResilience, &cfg, Some(&ds), false).unwrap();
    assert!(rec.curves.iter().filter(|r| r.metric == "quantum_error").all(|r| r.value > 0.0));
    assert!(rec.curves.iter().any(|r| r.metric == "quantum_error_zne"));
}

#[test]
fn performance_records_every_model_every_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&NOISE.replace("kind = \"noisy\"", "kind = \"ideal\""));
    cfg.output.dir = dir.path().into();
    let ds = train::load_dataset(&cfg).unwrap();
    let rec = experiment::run_experiment(ExperimentKind::Generalization, &cfg, Some(&ds), true).unwrap();
    let names: Vec<&str> = rec.runs.iter().map(|r| r.model.as_str()).collect();
    assert_eq!(names, ["classical", "single_chip", "dimreduc_k2", "dimreduc_k4", "full"]);
    let rows = read_curve_csv(&rec.csv.unwrap()).unwrap();
    assert_eq!(rows.len(), 5 * 2 * 4);
    assert!(rows.iter().all(|r| r.value.is_finite()));
    assert!(rows.iter().any(|r| r.metric == "gen_error"));
}

#[test]
fn barren_plateau_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&NOISE.replace("chips = [2, 4]", "chips = [1, 2, 4]\nsamples = 60"));
    cfg.output.dir = dir.path().into();
    let rec = experiment::run_experiment(ExperimentKind::BarrenPlateau, &cfg, None, true).unwrap();
    let rows = read_metric_csv(&rec.csv.unwrap()).unwrap();
    for metric in ["ent", "ent_unnormalized", "grad_variance"] {
        assert_eq!(rows.iter().filter(|r| r.metric == metric).count(), 3);
    }
}
