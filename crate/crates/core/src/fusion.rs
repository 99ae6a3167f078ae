//! Merging the crossing detections of the two detectors.
//!
//! Detections are ranked by a single total order (type, descending
//! confidence, x, y, source) and accepted greedily: a detection survives if
//! no already accepted detection of the same type lies within
//! `dedup_radius`, and at most `max_per_type` survive per type. Because the
//! order is total, the result does not depend on input order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::codec::px;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum CrossingType {
    Shoulder = 1,
    BottomHem = 2,
    NeckPoint = 3,
}

impl CrossingType {
    pub const ALL: [CrossingType; 3] = [
        CrossingType::Shoulder,
        CrossingType::BottomHem,
        CrossingType::NeckPoint,
    ];

    fn slot(self) -> usize {
        self as usize - 1
    }
}

impl TryFrom<u8> for CrossingType {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Self::Shoulder),
            2 => Ok(Self::BottomHem),
            3 => Ok(Self::NeckPoint),
            _ => Err(format!("crossing type must be in 1..=3, got {v}")),
        }
    }
}

impl From<CrossingType> for u8 {
    fn from(c: CrossingType) -> u8 {
        c as u8
    }
}

/// Which detector produced a detection. `Scd1` sees the raw observation,
/// `Scd2` the observation with extracted seams drawn over it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionSource {
    Scd1,
    Scd2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingDetection {
    pub c: CrossingType,
    #[serde(with = "px")]
    pub x: f64,
    #[serde(with = "px")]
    pub y: f64,
    pub confidence: f64,
    pub source: DetectionSource,
}

impl CrossingDetection {
    pub fn is_valid(&self, width: u32, height: u32) -> bool {
        (0.0..=1.0).contains(&self.confidence)
            && self.x >= 0.0
            && self.y >= 0.0
            && self.x <= f64::from(width) - 1.0
            && self.y <= f64::from(height) - 1.0
    }

    fn distance(&self, other: &Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ranking used for both acceptance and output order.
pub fn priority(a: &CrossingDetection, b: &CrossingDetection) -> Ordering {
    a.c.cmp(&b.c)
        .then_with(|| b.confidence.total_cmp(&a.confidence))
        .then_with(|| a.x.total_cmp(&b.x))
        .then_with(|| a.y.total_cmp(&b.y))
        .then_with(|| a.source.cmp(&b.source))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Caps indexed by crossing type (shoulder, bottom hem, neck point).
    pub max_per_type: [usize; 3],
    pub dedup_radius: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            max_per_type: [2, 2, 2],
            dedup_radius: 20.0,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_per_type.contains(&0) {
            return Err("max_per_type entries must be at least 1".into());
        }
        if !(self.dedup_radius.is_finite() && self.dedup_radius >= 0.0) {
            return Err("dedup_radius must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn cap(&self, c: CrossingType) -> usize {
        self.max_per_type[c.slot()]
    }
}

/// Union of both lists with same-type duplicates collapsed onto the most
/// confident detection and per-type caps applied.
pub fn merge(
    scd1: &[CrossingDetection],
    scd2: &[CrossingDetection],
    cfg: &FusionConfig,
) -> Vec<CrossingDetection> {
    let mut pool: Vec<CrossingDetection> = scd1.iter().chain(scd2).copied().collect();
    pool.sort_by(priority);

    let mut kept: Vec<CrossingDetection> = Vec::new();
    let mut per_type = [0usize; 3];
    for det in pool {
        let slot = det.c.slot();
        if per_type[slot] >= cfg.cap(det.c) {
            continue;
        }
        let suppressed = kept
            .iter()
            .any(|k| k.c == det.c && k.distance(&det) <= cfg.dedup_radius);
        if !suppressed {
            per_type[slot] += 1;
            kept.push(det);
        }
    }
    kept
}

/// One image's detections, as stored in detection list files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    pub detections: Vec<CrossingDetection>,
}
