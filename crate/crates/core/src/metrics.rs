//! Coverage masks, normalized coverage, IoU against the goal configuration,
//! success rates and per-step aggregates with normal-approximation 95% CIs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{edge_crossing_x, Point};

/// `step` columns and arguments are 1-based.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("cov_max must be positive")]
    ZeroCovMax,
    #[error("step {step} out of range 1..={len}")]
    StepOutOfRange { step: usize, len: usize },
    #[error("no trials to aggregate")]
    Empty,
    #[error("trial {trial_id} has {got} steps, expected {expected}")]
    RaggedTrials { trial_id: u64, got: usize, expected: usize },
    #[error("metrics csv line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    CsvIo(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major bitset over a `width x height` raster; `true` is garment.
#[derive(Clone, PartialEq, Eq)]
pub struct CoverageMask {
    width: u32,
    height: u32,
    stride: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for CoverageMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CoverageMask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl CoverageMask {
    pub fn new(width: u32, height: u32) -> Self {
        let stride = (width as usize).div_ceil(64);
        Self {
            width,
            height,
            stride,
            words: vec![0; stride * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        assert!(x < self.width && y < self.height);
        let w = self.words[y as usize * self.stride + x as usize / 64];
        w >> (x % 64) & 1 == 1
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(x < self.width && y < self.height);
        let w = &mut self.words[y as usize * self.stride + x as usize / 64];
        if value {
            *w |= 1 << (x % 64);
        } else {
            *w &= !(1 << (x % 64));
        }
    }

    /// Sets pixels `x0..x1` of row `y`.
    pub fn fill_span(&mut self, y: u32, x0: u32, x1: u32) {
        let x1 = x1.min(self.width);
        if x0 >= x1 || y >= self.height {
            return;
        }
        let row = &mut self.words[y as usize * self.stride..(y as usize + 1) * self.stride];
        let (a, b) = (x0 as usize, x1 as usize);
        let (wa, wb) = (a / 64, (b - 1) / 64);
        for (wi, word) in row.iter_mut().enumerate().take(wb + 1).skip(wa) {
            let lo = if wi == wa { a % 64 } else { 0 };
            let hi = if wi == wb { (b - 1) % 64 } else { 63 };
            let bits = (u64::MAX >> (63 - hi)) & (u64::MAX << lo);
            *word |= bits;
        }
    }

    /// Rasterises a polygon (even-odd) by sampling pixel centres, so a pixel
    /// is set exactly when `geometry::contains` holds at its centre.
    pub fn fill_polygon(&mut self, poly: &[Point]) {
        if poly.len() < 3 {
            return;
        }
        let (ymin, ymax) = poly
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
        let row_lo = (ymin - 0.5).ceil().max(0.0);
        let row_hi = (ymax - 0.5).ceil().min(f64::from(self.height));
        if !(row_lo < row_hi) {
            return;
        }
        let n = poly.len();
        let mut xs: Vec<f64> = Vec::with_capacity(8);
        for y in row_lo as u32..row_hi as u32 {
            let yc = f64::from(y) + 0.5;
            xs.clear();
            for i in 0..n {
                if let Some(x) = edge_crossing_x(poly[i], poly[(i + 1) % n], yc) {
                    xs.push(x);
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                // centre x + 0.5 in [a, b)
                let x0 = (pair[0] - 0.5).ceil().max(0.0);
                let x1 = (pair[1] - 0.5).ceil().min(f64::from(self.width));
                if x0 < x1 {
                    self.fill_span(y, x0 as u32, x1 as u32);
                }
            }
        }
    }

    pub fn from_polygons<'a>(width: u32, height: u32, polys: impl IntoIterator<Item = &'a [Point]>) -> Self {
        let mut m = Self::new(width, height);
        for p in polys {
            m.fill_polygon(p);
        }
        m
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    fn check_dims(&self, other: &Self) -> Result<(), MetricsError> {
        if self.width != other.width || self.height != other.height {
            return Err(MetricsError::DimensionMismatch(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }

    pub fn intersection_count(&self, other: &Self) -> Result<u64, MetricsError> {
        self.check_dims(other)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| u64::from((a & b).count_ones())).sum())
    }

    pub fn union_count(&self, other: &Self) -> Result<u64, MetricsError> {
        self.check_dims(other)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| u64::from((a | b).count_ones())).sum())
    }
}

/// Garment pixels over the flat garment's pixel count. Values slightly above
/// 1 are possible from rasterisation and are returned as is with a warning.
pub fn ncov(mask: &CoverageMask, cov_max: u64) -> Result<f64, MetricsError> {
    if cov_max == 0 {
        return Err(MetricsError::ZeroCovMax);
    }
    let v = mask.count() as f64 / cov_max as f64;
    if v > 1.0 {
        log::warn!("normalized coverage {v} exceeds 1");
    }
    Ok(v)
}

/// Intersection over union; 0 when both masks are empty.
pub fn iou(mask: &CoverageMask, goal: &CoverageMask) -> Result<f64, MetricsError> {
    let union = mask.union_count(goal)?;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(mask.intersection_count(goal)? as f64 / union as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub ncov: f64,
    pub iou: f64,
    /// The step's grasp missed the garment.
    #[serde(default)]
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub trial_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_ncov: Option<f64>,
    pub per_step: Vec<StepMetrics>,
}

pub fn success_at(metrics: &EpisodeMetrics, step: usize, threshold: f64) -> Result<bool, MetricsError> {
    let s = step_at(metrics, step)?;
    Ok(s.ncov >= threshold && s.iou >= threshold)
}

fn step_at(metrics: &EpisodeMetrics, step: usize) -> Result<&StepMetrics, MetricsError> {
    step.checked_sub(1)
        .and_then(|i| metrics.per_step.get(i))
        .ok_or(MetricsError::StepOutOfRange {
            step,
            len: metrics.per_step.len(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateOptions {
    pub success_threshold: f64,
    /// Keep rows flagged `excluded` in the statistics.
    pub include_failures: bool,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self {
            success_threshold: 0.85,
            include_failures: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAggregate {
    pub step: usize,
    /// Trials counted at this step.
    pub n: usize,
    pub successes: usize,
    pub mean_ncov: f64,
    pub ci95_ncov: f64,
    pub mean_iou: f64,
    pub ci95_iou: f64,
    pub success_rate: f64,
    /// Fewer than two trials: the CI is reported as 0.
    pub degenerate: bool,
}

/// Mean and CI half-width `1.96 * sd / sqrt(n)` with the sample sd.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    // Shifted by the first value so constant inputs give their value and a
    // zero width exactly.
    let k = values[0];
    let shift = values.iter().map(|v| v - k).sum::<f64>() / n as f64;
    let mean = k + shift;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - k - shift) * (v - k - shift)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

pub fn aggregate(trials: &[EpisodeMetrics], opts: &AggregateOptions) -> Result<Vec<StepAggregate>, MetricsError> {
    let first = trials.first().ok_or(MetricsError::Empty)?;
    let t = first.per_step.len();
    for tr in trials {
        if tr.per_step.len() != t {
            return Err(MetricsError::RaggedTrials {
                trial_id: tr.trial_id,
                got: tr.per_step.len(),
                expected: t,
            });
        }
    }
    let mut out = Vec::with_capacity(t);
    for i in 0..t {
        let rows: Vec<&StepMetrics> = trials
            .iter()
            .map(|tr| &tr.per_step[i])
            .filter(|s| opts.include_failures || !s.excluded)
            .collect();
        let ncovs: Vec<f64> = rows.iter().map(|s| s.ncov).collect();
        let ious: Vec<f64> = rows.iter().map(|s| s.iou).collect();
        let (mean_ncov, ci95_ncov) = mean_ci95(&ncovs);
        let (mean_iou, ci95_iou) = mean_ci95(&ious);
        let successes = rows
            .iter()
            .filter(|s| s.ncov >= opts.success_threshold && s.iou >= opts.success_threshold)
            .count();
        let n = rows.len();
        out.push(StepAggregate {
            step: i + 1,
            n,
            successes,
            mean_ncov,
            ci95_ncov,
            mean_iou,
            ci95_iou,
            success_rate: if n == 0 { f64::NAN } else { successes as f64 / n as f64 },
            degenerate: n < 2,
        });
    }
    Ok(out)
}

/// Percentage with at most two decimals and no trailing zeros, e.g. `85%`.
pub fn format_percent(successes: usize, n: usize) -> String {
    if n == 0 {
        return "n/a".to_string();
    }
    let hundredths = (successes as u128 * 10_000 + n as u128 / 2) / n as u128;
    let (int, frac) = (hundredths / 100, hundredths % 100);
    match frac {
        0 => format!("{int}%"),
        f if f % 10 == 0 => format!("{int}.{}%", f / 10),
        f => format!("{int}.{f:02}%"),
    }
}

pub fn success_header(threshold: f64) -> String {
    format!("success@{threshold}")
}

pub fn write_metrics_csv(w: impl Write, trials: &[EpisodeMetrics], threshold: f64) -> Result<(), MetricsError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["trial_id", "step", "ncov", "iou", &success_header(threshold), "excluded"])?;
    for tr in trials {
        for (i, s) in tr.per_step.iter().enumerate() {
            let ok = s.ncov >= threshold && s.iou >= threshold;
            wr.write_record([
                tr.trial_id.to_string(),
                (i + 1).to_string(),
                s.ncov.to_string(),
                s.iou.to_string(),
                ok.to_string(),
                s.excluded.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Reads a metrics CSV. Trials keep their order of first appearance, and
/// each trial's steps must run 1, 2, ... without gaps. The `excluded` column
/// is optional; the stored success column is ignored in favour of the values.
pub fn read_metrics_csv(r: impl Read) -> Result<Vec<EpisodeMetrics>, MetricsError> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let missing = |name: &str| MetricsError::Csv {
        line: 1,
        message: format!("missing column {name}"),
    };
    let c_trial = col("trial_id").ok_or_else(|| missing("trial_id"))?;
    let c_step = col("step").ok_or_else(|| missing("step"))?;
    let c_ncov = col("ncov").ok_or_else(|| missing("ncov"))?;
    let c_iou = col("iou").ok_or_else(|| missing("iou"))?;
    let c_excl = col("excluded");

    let mut trials: Vec<EpisodeMetrics> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| MetricsError::Csv { line, message };
        let field = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let trial_id: u64 = field(c_trial).parse().map_err(|e| bad(format!("trial_id: {e}")))?;
        let step: usize = field(c_step).parse().map_err(|e| bad(format!("step: {e}")))?;
        let ncov: f64 = field(c_ncov).parse().map_err(|e| bad(format!("ncov: {e}")))?;
        let iou: f64 = field(c_iou).parse().map_err(|e| bad(format!("iou: {e}")))?;
        let excluded = match c_excl.map(field) {
            None | Some("") => false,
            Some(v) => parse_bool(v).ok_or_else(|| bad(format!("excluded: {v:?}")))?,
        };
        let idx = match trials.iter().position(|t| t.trial_id == trial_id) {
            Some(i) => i,
            None => {
                trials.push(EpisodeMetrics {
                    trial_id,
                    initial_ncov: None,
                    per_step: Vec::new(),
                });
                trials.len() - 1
            }
        };
        let tr = &mut trials[idx];
        if step != tr.per_step.len() + 1 {
            return Err(bad(format!(
                "trial {trial_id}: expected step {}, got {step}",
                tr.per_step.len() + 1
            )));
        }
        tr.per_step.push(StepMetrics { ncov, iou, excluded });
    }
    Ok(trials)
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn write_aggregate_csv(w: impl Write, rows: &[StepAggregate]) -> Result<(), MetricsError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["step", "mean_ncov", "ci95_ncov", "mean_iou", "ci95_iou", "success_rate"])?;
    for a in rows {
        wr.write_record([
            a.step.to_string(),
            a.mean_ncov.to_string(),
            a.ci95_ncov.to_string(),
            a.mean_iou.to_string(),
            a.ci95_iou.to_string(),
            a.success_rate.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
