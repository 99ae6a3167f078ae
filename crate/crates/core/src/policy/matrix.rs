use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Csst, PolicyError};

pub const MATRIX_SCHEMA_VERSION: u32 = 1;
pub const TRIAL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixLabel {
    /// Built from demonstrations only.
    Init,
    /// Used while coverage is below the intermediate threshold.
    Nint,
    /// Used for intermediate configurations.
    Int,
}

/// Running mean `u` of `m` rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub u: f64,
    pub m: u32,
}

/// Upper-triangular score matrix over seam-type combinations. Only
/// populated cells (`m > 0`) are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct DecisionMatrix {
    label: MatrixLabel,
    t_max: usize,
    cells: BTreeMap<Csst, Cell>,
}

/// Sum with Neumaier compensation, so short reward lists average to the
/// correctly rounded value.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Average normalised coverage over the `t` steps of a trial.
pub fn trial_reward(ncov_per_step: &[f64], t: usize) -> Result<f64, PolicyError> {
    if t == 0 || ncov_per_step.len() != t {
        return Err(PolicyError::InvalidTrial(format!(
            "expected {t} coverage values, got {}",
            ncov_per_step.len()
        )));
    }
    if let Some(bad) = ncov_per_step.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(PolicyError::InvalidTrial(format!("coverage {bad} outside [0, 1]")));
    }
    Ok(compensated_sum(ncov_per_step) / t as f64)
}

/// Extends a trial that finished early to `t_max` steps by repeating the
/// coverage of its last executed step.
pub fn pad_ncovs(raw: &[f64], completed_at: usize, t_max: usize) -> Result<Vec<f64>, PolicyError> {
    if raw.is_empty() || raw.len() != completed_at || completed_at > t_max {
        return Err(PolicyError::InvalidTrial(format!(
            "{} coverage values for a trial completed at step {completed_at} of {t_max}",
            raw.len()
        )));
    }
    let last = raw[raw.len() - 1];
    let mut padded = raw.to_vec();
    padded.resize(t_max, last);
    Ok(padded)
}

impl DecisionMatrix {
    pub fn empty(label: MatrixLabel, t_max: usize) -> Self {
        Self {
            label,
            t_max,
            cells: BTreeMap::new(),
        }
    }

    pub fn label(&self) -> MatrixLabel {
        self.label
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn with_label(&self, label: MatrixLabel) -> Self {
        Self {
            label,
            ..self.clone()
        }
    }

    pub fn cell(&self, csst: Csst) -> Option<Cell> {
        self.cells.get(&csst).copied()
    }

    pub fn score(&self, csst: Csst) -> Option<f64> {
        self.cells.get(&csst).map(|c| c.u)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Populated cells in `(k, l)` order.
    pub fn cells(&self) -> impl Iterator<Item = (Csst, Cell)> + '_ {
        self.cells.iter().map(|(k, v)| (*k, *v))
    }

    /// Overwrites a cell. Scores must be finite and non-negative and the
    /// count positive; `[0, 1]` is enforced by [`DecisionMatrix::validate`].
    pub fn set_cell(&mut self, csst: Csst, cell: Cell) -> Result<(), PolicyError> {
        if cell.m == 0 || !cell.u.is_finite() || cell.u < 0.0 {
            return Err(PolicyError::InvalidMatrix(format!(
                "cell {csst} needs m > 0 and a finite non-negative score, got u={} m={}",
                cell.u, cell.m
            )));
        }
        self.cells.insert(csst, cell);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.t_max == 0 {
            return Err(PolicyError::InvalidMatrix("t_max must be at least 1".into()));
        }
        for (csst, cell) in &self.cells {
            if cell.m == 0 || !(0.0..=1.0).contains(&cell.u) {
                return Err(PolicyError::InvalidMatrix(format!(
                    "cell {csst}: u={} m={}",
                    cell.u, cell.m
                )));
            }
        }
        Ok(())
    }

    /// Folds one reward into the running mean of `csst`.
    pub fn record_reward(&self, csst: Csst, reward: f64) -> Result<Self, PolicyError> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(PolicyError::InvalidTrial(format!("reward {reward} outside [0, 1]")));
        }
        let mut next = self.clone();
        let cell = next.cells.entry(csst).or_insert(Cell { u: 0.0, m: 0 });
        cell.m += 1;
        cell.u += (reward - cell.u) / f64::from(cell.m);
        Ok(next)
    }

    /// Pads the trial's coverage list to `t_max`, averages it and folds the
    /// result into the cell.
    pub fn record_trial(&self, csst: Csst, raw_ncovs: &[f64], completed_at: usize) -> Result<Self, PolicyError> {
        let padded = pad_ncovs(raw_ncovs, completed_at, self.t_max)?;
        let reward = trial_reward(&padded, self.t_max)?;
        self.record_reward(csst, reward)
    }
}

/// On-disk layout of a decision matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub schema_version: u32,
    pub label: MatrixLabel,
    #[serde(rename = "T_max")]
    pub t_max: usize,
    pub cells: Vec<CellEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub k: u8,
    pub l: u8,
    pub u: f64,
    #[serde(rename = "M")]
    pub m: u32,
}

impl From<DecisionMatrix> for MatrixFile {
    fn from(d: DecisionMatrix) -> Self {
        MatrixFile {
            schema_version: MATRIX_SCHEMA_VERSION,
            label: d.label,
            t_max: d.t_max,
            cells: d
                .cells
                .iter()
                .map(|(c, cell)| CellEntry {
                    k: c.k().index(),
                    l: c.l().index(),
                    u: cell.u,
                    m: cell.m,
                })
                .collect(),
        }
    }
}

impl TryFrom<MatrixFile> for DecisionMatrix {
    type Error = PolicyError;
    fn try_from(f: MatrixFile) -> Result<Self, PolicyError> {
        if f.schema_version != MATRIX_SCHEMA_VERSION {
            return Err(PolicyError::InvalidMatrix(format!(
                "unsupported schema_version {}",
                f.schema_version
            )));
        }
        let mut m = DecisionMatrix::empty(f.label, f.t_max);
        for e in f.cells {
            let csst = Csst::new(e.k, e.l)?;
            if m.cells.contains_key(&csst) {
                return Err(PolicyError::InvalidMatrix(format!("duplicate cell {csst}")));
            }
            m.set_cell(csst, Cell { u: e.u, m: e.m })?;
        }
        m.validate()?;
        Ok(m)
    }
}

/// One demonstration or execution trial, as stored in trial logs.
///
/// `ncov_per_step` holds either the executed steps only (length
/// `completed_at_step`) or the already padded list (length `t_max`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema_version: u32,
    pub csst: Csst,
    pub ncov_per_step: Vec<f64>,
    pub completed_at_step: usize,
    pub t_max: usize,
}

impl TrialRecord {
    pub fn new(csst: Csst, raw_ncovs: Vec<f64>, t_max: usize) -> Self {
        Self {
            schema_version: TRIAL_SCHEMA_VERSION,
            csst,
            completed_at_step: raw_ncovs.len(),
            ncov_per_step: raw_ncovs,
            t_max,
        }
    }

    /// The executed steps, with any padding stripped after checking it.
    pub fn raw_ncovs(&self) -> Result<&[f64], PolicyError> {
        if self.schema_version != TRIAL_SCHEMA_VERSION {
            return Err(PolicyError::InvalidTrial(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let n = self.completed_at_step;
        if n == 0 || n > self.t_max {
            return Err(PolicyError::InvalidTrial(format!(
                "completed_at_step {n} outside 1..={}",
                self.t_max
            )));
        }
        let v = &self.ncov_per_step;
        if v.len() == n {
            return Ok(v);
        }
        if v.len() == self.t_max && v[n..].iter().all(|x| *x == v[n - 1]) {
            return Ok(&v[..n]);
        }
        Err(PolicyError::InvalidTrial(format!(
            "ncov_per_step has {} entries; expected {n} or a padded list of {}",
            v.len(),
            self.t_max
        )))
    }

    pub fn padded(&self) -> Result<Vec<f64>, PolicyError> {
        pad_ncovs(self.raw_ncovs()?, self.completed_at_step, self.t_max)
    }
}

/// Builds the demonstration matrix by folding every trial into an empty
/// matrix.
pub fn init_from_demos(log: &[TrialRecord], t_max: usize) -> Result<DecisionMatrix, PolicyError> {
    let mut m = DecisionMatrix::empty(MatrixLabel::Init, t_max);
    for rec in log {
        if rec.t_max != t_max {
            return Err(PolicyError::InvalidTrial(format!(
                "trial has t_max {} but the matrix uses {t_max}",
                rec.t_max
            )));
        }
        m = m.record_trial(rec.csst, rec.raw_ncovs()?, rec.completed_at_step)?;
    }
    Ok(m)
}

/// The intermediate-configuration matrix once coverage reaches `threshold`,
/// the non-intermediate one below it.
pub fn pick_matrix<'a>(
    ncov_prev: f64,
    nint: &'a DecisionMatrix,
    int: &'a DecisionMatrix,
    threshold: f64,
) -> &'a DecisionMatrix {
    if ncov_prev >= threshold {
        int
    } else {
        nint
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csst(k: u8, l: u8) -> Csst {
        Csst::new(k, l).unwrap()
    }

    #[test]
    fn trial_reward_examples() {
        assert_eq!(trial_reward(&[0.2, 0.5, 0.8, 0.9, 0.9], 5).unwrap(), 0.66);
        assert_eq!(trial_reward(&[1.0; 5], 5).unwrap(), 1.0);
        assert_eq!(trial_reward(&[0.0; 5], 5).unwrap(), 0.0);
        assert!(trial_reward(&[0.5; 4], 5).is_err());
        assert!(trial_reward(&[], 0).is_err());
        assert!(trial_reward(&[1.2], 1).is_err());
    }

    #[test]
    fn record_trial_examples() {
        let m = DecisionMatrix::empty(MatrixLabel::Nint, 5);
        let m = m.record_reward(csst(1, 1), 0.66).unwrap();
        assert_eq!(m.cell(csst(1, 1)), Some(Cell { u: 0.66, m: 1 }));

        let mut m = DecisionMatrix::empty(MatrixLabel::Nint, 5);
        m.set_cell(csst(2, 1), Cell { u: 0.5, m: 1 }).unwrap();
        let m = m.record_reward(csst(2, 1), 0.7).unwrap();
        let c = m.cell(csst(2, 1)).unwrap();
        assert_eq!(c.m, 2);
        assert!((c.u - 0.6).abs() < 1e-15);

        let m = DecisionMatrix::empty(MatrixLabel::Nint, 5)
            .record_trial(csst(4, 4), &[0.3, 0.95], 2)
            .unwrap();
        assert_eq!(m.score(csst(4, 4)), Some(0.82));
    }

    #[test]
    fn padding_repeats_last_value() {
        assert_eq!(pad_ncovs(&[0.3, 0.95], 2, 5).unwrap(), vec![0.3, 0.95, 0.95, 0.95, 0.95]);
        assert!(pad_ncovs(&[0.3, 0.95], 3, 5).is_err());
        assert!(pad_ncovs(&[0.3; 6], 6, 5).is_err());
        assert!(pad_ncovs(&[], 0, 5).is_err());
    }

    #[test]
    fn trial_record_accepts_raw_or_padded() {
        let mut r = TrialRecord::new(csst(3, 2), vec![0.3, 0.95], 5);
        assert_eq!(r.padded().unwrap(), vec![0.3, 0.95, 0.95, 0.95, 0.95]);
        r.ncov_per_step = vec![0.3, 0.95, 0.95, 0.95, 0.95];
        assert_eq!(r.raw_ncovs().unwrap(), &[0.3, 0.95]);
        r.ncov_per_step = vec![0.3, 0.95, 0.95, 0.9, 0.95];
        assert!(r.raw_ncovs().is_err());
    }

    #[test]
    fn init_counts_trials() {
        let log: Vec<TrialRecord> = (0..10)
            .flat_map(|i| {
                let v = 0.5 + 0.01 * f64::from(i);
                [
                    TrialRecord::new(csst(1, 1), vec![v; 5], 5),
                    TrialRecord::new(csst(6, 4), vec![v, 1.0], 5),
                ]
            })
            .collect();
        let m = init_from_demos(&log, 5).unwrap();
        assert_eq!(m.label(), MatrixLabel::Init);
        assert_eq!(m.cells().count(), 2);
        assert!(m.cells().all(|(_, c)| c.m == 10));
        assert!(init_from_demos(&[], 5).unwrap().is_empty());
        assert!(init_from_demos(&log, 4).is_err());
    }

    #[test]
    fn pick_matrix_threshold() {
        let nint = DecisionMatrix::empty(MatrixLabel::Nint, 5);
        let int = DecisionMatrix::empty(MatrixLabel::Int, 5);
        assert_eq!(pick_matrix(0.39, &nint, &int, 0.4).label(), MatrixLabel::Nint);
        assert_eq!(pick_matrix(0.4, &nint, &int, 0.4).label(), MatrixLabel::Int);
        assert_eq!(pick_matrix(1.0, &nint, &int, 0.4).label(), MatrixLabel::Int);
        assert_eq!(pick_matrix(0.0, &nint, &int, 0.4).label(), MatrixLabel::Nint);
    }

    #[test]
    fn file_roundtrip_is_bit_exact() {
        let mut m = DecisionMatrix::empty(MatrixLabel::Int, 5);
        m.set_cell(csst(1, 1), Cell { u: 0.1 + 0.2, m: 3 }).unwrap();
        m.set_cell(csst(6, 2), Cell { u: 1.0 / 3.0, m: 11 }).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.starts_with(r#"{"schema_version":1,"label":"int","T_max":5,"cells":[{"k":1,"l":1,"#));
        let back: DecisionMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn file_rejects_bad_cells() {
        let bad = r#"{"schema_version":1,"label":"init","T_max":5,"cells":[{"k":1,"l":2,"u":0.5,"M":1}]}"#;
        assert!(serde_json::from_str::<DecisionMatrix>(bad).is_err());
        let bad = r#"{"schema_version":1,"label":"init","T_max":5,"cells":[{"k":2,"l":1,"u":1.5,"M":1}]}"#;
        assert!(serde_json::from_str::<DecisionMatrix>(bad).is_err());
        let bad = r#"{"schema_version":2,"label":"init","T_max":5,"cells":[]}"#;
        assert!(serde_json::from_str::<DecisionMatrix>(bad).is_err());
    }
}
