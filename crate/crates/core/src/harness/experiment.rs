use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::warn;

use super::episode::{run_episode_step, Env, Matrices, StepLog};
use super::{AblationMode, ExperimentConfig, HarnessError};
use crate::jsonl;
use crate::metrics::{
    aggregate, format_percent, read_metrics_csv, write_aggregate_csv, write_metrics_csv, AggregateOptions,
    EpisodeMetrics, StepAggregate, StepMetrics,
};
use crate::policy::{pad_ncovs, trial_reward, DecisionMatrix, MatrixLabel, PolicyError, TrialRecord};
use crate::sim::{mix_seed, randomize, render, CanonicalGarment};

/// Matrices as loaded, with the original file bytes kept so unchanged
/// matrices can be written back verbatim.
#[derive(Debug, Clone)]
pub struct LoadedMatrices {
    pub matrices: Matrices,
    nint_bytes: Option<Vec<u8>>,
    int_bytes: Option<Vec<u8>>,
}

impl LoadedMatrices {
    pub fn new(matrices: Matrices) -> Self {
        Self {
            matrices,
            nint_bytes: None,
            int_bytes: None,
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, HarnessError> {
    fs::read(path).map_err(|e| HarnessError::io(path, e))
}

fn parse_matrix(path: &Path, bytes: &[u8]) -> Result<DecisionMatrix, HarnessError> {
    serde_json::from_slice(bytes).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

/// Reads the starting matrices. Separate nint/int files take precedence
/// over the demonstration matrix, which otherwise seeds both.
pub fn load_matrices(cfg: &ExperimentConfig) -> Result<LoadedMatrices, HarnessError> {
    let p = &cfg.paths;
    let init = match &p.init_matrix {
        Some(path) => Some(parse_matrix(path, &read_bytes(path)?)?),
        None => None,
    };
    let one = |path: &Option<PathBuf>, label: MatrixLabel| -> Result<(DecisionMatrix, Option<Vec<u8>>), HarnessError> {
        match (path, &init) {
            (Some(path), _) => {
                let bytes = read_bytes(path)?;
                let m = parse_matrix(path, &bytes)?;
                if m.label() == label {
                    Ok((m, Some(bytes)))
                } else {
                    Ok((m.with_label(label), None))
                }
            }
            (None, Some(init)) => Ok((init.with_label(label), None)),
            (None, None) => Err(HarnessError::Config(format!(
                "no {label:?} matrix: set paths.init_matrix or pass --init-matrix"
            ))),
        }
    };
    let (nint, nint_bytes) = one(&p.nint_matrix, MatrixLabel::Nint)?;
    let (int, int_bytes) = one(&p.int_matrix, MatrixLabel::Int)?;
    for m in [&nint, &int] {
        if m.t_max() != cfg.t_max {
            return Err(HarnessError::Data(format!(
                "{:?} matrix has T_max {} but the experiment uses {}",
                m.label(),
                m.t_max(),
                cfg.t_max
            )));
        }
    }
    if nint.is_empty() && int.is_empty() {
        warn!("both decision matrices are empty; every step will fall back to randomize");
    }
    Ok(LoadedMatrices {
        matrices: Matrices { nint, int },
        nint_bytes,
        int_bytes,
    })
}

pub fn load_garment(cfg: &ExperimentConfig) -> Result<CanonicalGarment, HarnessError> {
    match &cfg.paths.garment {
        None => Ok(CanonicalGarment::tshirt()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            CanonicalGarment::from_json(&text).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub mode: AblationMode,
    /// One entry per trial, `t_max` steps each after padding.
    pub trials: Vec<EpisodeMetrics>,
    /// Executed steps only.
    pub logs: Vec<StepLog>,
    pub aggregate: Vec<StepAggregate>,
    pub matrices: Matrices,
}

fn policy_err(e: PolicyError) -> HarnessError {
    HarnessError::Data(e.to_string())
}

/// Runs `cfg.n_trials` trials one after another, each starting from a fresh
/// low-coverage configuration. Matrices learn between trials, so a trial
/// sees every update from the trials before it.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    garment: &CanonicalGarment,
    start: &Matrices,
) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let env = Env {
        garment: garment.clone(),
        sim: cfg.sim,
        fusion: cfg.fusion,
        switch_threshold: cfg.matrix_switch_threshold,
        mode: cfg.mode,
    };
    let mut matrices = start.clone();
    let mut trials = Vec::with_capacity(cfg.n_trials);
    let mut logs = Vec::new();

    for trial in 0..cfg.n_trials as u64 {
        let mut state = randomize(garment, mix_seed(cfg.seed, trial), &cfg.sim)?;
        let mut obs = render(garment, &state);
        let initial_ncov = obs.ncov;
        let mut steps: Vec<StepMetrics> = Vec::with_capacity(cfg.t_max);
        let mut decisions = Vec::with_capacity(cfg.t_max);
        for step in 1..=cfg.t_max {
            let r = run_episode_step(&env, trial, step, &state, &obs, &matrices)?;
            let m = StepMetrics {
                ncov: r.log.ncov,
                iou: r.log.iou,
                excluded: r.log.excluded,
            };
            steps.push(m);
            decisions.push(r.decision);
            logs.push(r.log);
            state = r.state;
            obs = r.observation;
            if m.ncov >= cfg.success_threshold && m.iou >= cfg.success_threshold {
                break;
            }
        }
        let executed = steps.len();
        let last = *steps.last().expect("t_max >= 1");
        steps.resize(cfg.t_max, last);

        if cfg.mode != AblationMode::AbMi {
            let raw: Vec<f64> = steps[..executed].iter().map(|s| s.ncov.min(1.0)).collect();
            let padded = pad_ncovs(&raw, executed, cfg.t_max).map_err(policy_err)?;
            // each step taken from an intermediate configuration scores the
            // rest of the trial
            for (i, d) in decisions.iter().enumerate() {
                if let Some(d) = d.filter(|d| d.matrix == MatrixLabel::Int) {
                    let r = trial_reward(&padded[i..], cfg.t_max - i).map_err(policy_err)?;
                    matrices.int = matrices.int.record_reward(d.csst, r).map_err(policy_err)?;
                }
            }
            // the whole trial scores the first grasp from a crumpled start
            if initial_ncov < cfg.matrix_switch_threshold {
                if let Some(d) = decisions[0].filter(|d| d.matrix == MatrixLabel::Nint) {
                    let r = trial_reward(&padded, cfg.t_max).map_err(policy_err)?;
                    matrices.nint = matrices.nint.record_reward(d.csst, r).map_err(policy_err)?;
                }
            }
        }
        trials.push(EpisodeMetrics {
            trial_id: trial,
            initial_ncov: Some(initial_ncov),
            per_step: steps,
        });
    }

    let opts = AggregateOptions {
        success_threshold: cfg.success_threshold,
        include_failures: cfg.include_failures,
    };
    let aggregate = aggregate(&trials, &opts).map_err(|e| HarnessError::Data(e.to_string()))?;
    Ok(ExperimentOutcome {
        mode: cfg.mode,
        trials,
        logs,
        aggregate,
        matrices,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn matrix_json(m: &DecisionMatrix) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(m).expect("matrices serialise");
    s.push('\n');
    s.into_bytes()
}

/// Writes `metrics.csv`, `aggregate.csv`, `episodes.jsonl`, `nint.json` and
/// `int.json` into `dir`. A matrix that came from its own file and was not
/// changed is written back byte for byte.
pub fn write_outputs(
    dir: &Path,
    out: &ExperimentOutcome,
    start: &LoadedMatrices,
    success_threshold: f64,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let csv_err = |path: PathBuf| move |e: crate::metrics::MetricsError| HarnessError::Data(format!("{}: {e}", path.display()));

    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, &out.trials, success_threshold).map_err(csv_err(dir.join("metrics.csv")))?;
    write_file(&dir.join("metrics.csv"), &buf)?;

    buf.clear();
    write_aggregate_csv(&mut buf, &out.aggregate).map_err(csv_err(dir.join("aggregate.csv")))?;
    write_file(&dir.join("aggregate.csv"), &buf)?;

    buf.clear();
    jsonl::write(&mut buf, &out.logs).map_err(|e| HarnessError::Data(e.to_string()))?;
    write_file(&dir.join("episodes.jsonl"), &buf)?;

    for (name, now, before, bytes) in [
        ("nint.json", &out.matrices.nint, &start.matrices.nint, &start.nint_bytes),
        ("int.json", &out.matrices.int, &start.matrices.int, &start.int_bytes),
    ] {
        let data = match bytes {
            Some(b) if now == before => b.clone(),
            _ => matrix_json(now),
        };
        write_file(&dir.join(name), &data)?;
    }
    Ok(())
}

/// Builds the demonstration matrix from a trial log.
pub fn ingest_demo_log(path: &Path, t_max: usize) -> Result<DecisionMatrix, HarnessError> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let records: Vec<(usize, TrialRecord)> = jsonl::read_numbered(BufReader::new(file)).map_err(|e| match e {
        jsonl::JsonlError::Io(source) => HarnessError::io(path, source),
        other => HarnessError::Data(format!("{}: {other}", path.display())),
    })?;
    if records.is_empty() {
        warn!("{} holds no trials; the matrix is empty", path.display());
    }
    let mut m = DecisionMatrix::empty(MatrixLabel::Init, t_max);
    for (line, rec) in &records {
        let fail = |e: String| HarnessError::Data(format!("{}: line {line}: {e}", path.display()));
        if rec.t_max != t_max {
            return Err(fail(format!("trial has T_max {} but the matrix uses {t_max}", rec.t_max)));
        }
        let raw = rec.raw_ncovs().map_err(|e| fail(e.to_string()))?;
        m = m
            .record_trial(rec.csst, raw, rec.completed_at_step)
            .map_err(|e| fail(e.to_string()))?;
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct Report {
    pub n_trials: usize,
    pub success_threshold: f64,
    pub rows: Vec<StepAggregate>,
}

impl Report {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} trials, success = ncov and IoU both >= {}",
            self.n_trials, self.success_threshold
        );
        let _ = writeln!(s, "step  n    mean_ncov  ci95     mean_iou  ci95     success");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<5} {:<4} {:<10.4} {:<8.4} {:<9.4} {:<8.4} {}",
                r.step,
                r.n,
                r.mean_ncov,
                r.ci95_ncov,
                r.mean_iou,
                r.ci95_iou,
                format_percent(r.successes, r.n)
            );
        }
        s
    }
}

/// Aggregates a metrics CSV, or the `metrics.csv` inside a run directory.
pub fn report(path: &Path, success_threshold: f64, include_failures: bool) -> Result<Report, HarnessError> {
    if !(0.0..=1.0).contains(&success_threshold) {
        return Err(HarnessError::Config(format!(
            "threshold must be in [0, 1], got {success_threshold}"
        )));
    }
    let file = if path.is_dir() { path.join("metrics.csv") } else { path.to_path_buf() };
    let f = fs::File::open(&file).map_err(|e| HarnessError::io(&file, e))?;
    let trials = read_metrics_csv(f).map_err(|e| HarnessError::Data(format!("{}: {e}", file.display())))?;
    let opts = AggregateOptions {
        success_threshold,
        include_failures,
    };
    let rows = aggregate(&trials, &opts).map_err(|e| HarnessError::Data(format!("{}: {e}", file.display())))?;
    Ok(Report {
        n_trials: trials.len(),
        success_threshold,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Csst;

    fn small_cfg(mode: AblationMode) -> ExperimentConfig {
        ExperimentConfig {
            n_trials: 4,
            mode,
            seed: 3,
            ..ExperimentConfig::default()
        }
    }

    fn demo_matrices() -> Matrices {
        let mut m = DecisionMatrix::empty(MatrixLabel::Init, 5);
        for (k, l, r) in [(1, 1, 0.9), (4, 4, 0.6), (4, 1, 0.5), (6, 6, 0.3), (2, 2, 0.4)] {
            m = m.record_reward(Csst::new(k, l).unwrap(), r).unwrap();
        }
        Matrices {
            nint: m.with_label(MatrixLabel::Nint),
            int: m.with_label(MatrixLabel::Int),
        }
    }

    #[test]
    fn every_trial_has_t_max_rows() {
        let cfg = small_cfg(AblationMode::Sis);
        let out = run_experiment(&cfg, &CanonicalGarment::tshirt(), &demo_matrices()).unwrap();
        assert_eq!(out.trials.len(), 4);
        assert!(out.trials.iter().all(|t| t.per_step.len() == 5));
        assert_eq!(out.aggregate.len(), 5);
        assert!(out.trials.iter().all(|t| t.initial_ncov.unwrap() < 0.4));
    }

    #[test]
    fn frozen_mode_never_updates() {
        let cfg = small_cfg(AblationMode::AbMi);
        let start = demo_matrices();
        let out = run_experiment(&cfg, &CanonicalGarment::tshirt(), &start).unwrap();
        assert_eq!(out.matrices, start);
        let cfg = small_cfg(AblationMode::Sis);
        let out = run_experiment(&cfg, &CanonicalGarment::tshirt(), &start).unwrap();
        assert_ne!(out.matrices, start);
    }

    #[test]
    fn single_matrix_mode_leaves_int_alone() {
        let cfg = small_cfg(AblationMode::AbDm);
        let start = demo_matrices();
        let out = run_experiment(&cfg, &CanonicalGarment::tshirt(), &start).unwrap();
        assert_eq!(out.matrices.int, start.int);
    }

    #[test]
    fn ingest_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("demo.jsonl");
        let good = serde_json::to_string(&TrialRecord::new(Csst::new(1, 1).unwrap(), vec![0.3, 0.95], 5)).unwrap();
        fs::write(&p, format!("{good}\n\n{{not json\n")).unwrap();
        let e = ingest_demo_log(&p, 5).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert_eq!(e.exit_code(), 3);

        fs::write(&p, format!("{good}\n")).unwrap();
        let m = ingest_demo_log(&p, 5).unwrap();
        assert!((m.score(Csst::new(1, 1).unwrap()).unwrap() - 0.82).abs() < 1e-12);

        fs::write(&p, "").unwrap();
        assert!(ingest_demo_log(&p, 5).unwrap().is_empty());
    }

    #[test]
    fn missing_matrix_is_a_config_error() {
        let e = load_matrices(&ExperimentConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
