//! Fold-stack T-shirt simulator.
//!
//! A configuration is an ordered list of straight folds applied to the flat
//! garment in its own frame, followed by a rigid placement on the table.
//! Each fold reflects everything on its positive side across the fold line
//! and stacks it on top, so layer order, occlusion and coverage are exact
//! polygon computations.

mod detector;
mod dynamics;
mod garment;
mod layers;
mod render;
mod state;

pub use detector::{detector_surrogate, DetectorOutput};
pub use dynamics::{grasp_fling, randomize};
pub use garment::{CanonicalCrossing, CanonicalGarment, GarmentFile, SeamPolyline, GARMENT_FILE_VERSION};
pub use layers::{flap_membership, fold_point, Layered, Piece};
pub use render::{render, GarmentObservation, VisibleCrossing};
pub use state::{GarmentState, Placement};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid garment geometry: {0}")]
    Garment(String),
    #[error("invalid simulator config: {0}")]
    Config(String),
    #[error("grasp at ({}, {}) misses the garment", .0.x, .0.y)]
    GraspMiss(Point),
    #[error("no configuration below ncov {max_ncov} after {attempts} draws")]
    RandomizeExhausted { max_ncov: f64, attempts: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub max_folds: usize,
    /// Chance that a fold whose flap holds neither grip survives a fling.
    pub fold_persistence: f64,
    /// A grip this close to material, in pixels, still catches it.
    pub grasp_tolerance_px: f64,
    /// Standard deviation of the post-fling rotation, degrees.
    pub rotation_noise_deg: f64,
    /// Standard deviation of the post-fling translation per axis, pixels.
    pub translation_noise_px: f64,
    /// Garment beyond this distance outside either grip folds inward.
    pub drape_side_margin: f64,
    /// Garment more than this far above the grip line folds down.
    pub drape_top_margin: f64,
    /// Garment more than this far below the grip line folds up.
    pub drape_bottom_margin: f64,
    /// Per-source probability that a visible crossing is detected.
    pub detector_recall: f64,
    /// Standard deviation of detected crossing positions, pixels.
    pub detector_jitter_px: f64,
    /// Minimum box dimension for seam segments, pixels.
    pub lambda_thres: u32,
    /// Randomize redraws until coverage falls below this.
    pub randomize_max_ncov: f64,
    pub randomize_attempts: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_folds: 4,
            grasp_tolerance_px: 4.0,
            fold_persistence: 0.5,
            rotation_noise_deg: 5.0,
            translation_noise_px: 10.0,
            drape_side_margin: 240.0,
            drape_top_margin: 60.0,
            drape_bottom_margin: 760.0,
            detector_recall: 0.9,
            detector_jitter_px: 3.0,
            lambda_thres: 10,
            randomize_max_ncov: 0.4,
            randomize_attempts: 10_000,
        }
    }
}

impl SimConfig {
    /// Same model without any stochastic perturbation.
    pub fn noiseless() -> Self {
        Self {
            rotation_noise_deg: 0.0,
            translation_noise_px: 0.0,
            detector_recall: 1.0,
            detector_jitter_px: 0.0,
            fold_persistence: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.max_folds == 0 || self.max_folds > 32 {
            return bad("max_folds must be in 1..=32");
        }
        let non_neg = [
            self.grasp_tolerance_px,
            self.rotation_noise_deg,
            self.translation_noise_px,
            self.drape_side_margin,
            self.drape_top_margin,
            self.drape_bottom_margin,
            self.detector_jitter_px,
        ];
        if non_neg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("noise and margin values must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.detector_recall) {
            return bad("detector_recall must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.fold_persistence) {
            return bad("fold_persistence must be in [0, 1]");
        }
        if self.lambda_thres == 0 {
            return bad("lambda_thres must be at least 1");
        }
        if !(self.randomize_max_ncov > 0.0 && self.randomize_max_ncov <= 1.0) || self.randomize_attempts == 0 {
            return bad("randomize_max_ncov must be in (0, 1] with at least one attempt");
        }
        Ok(())
    }
}

/// SplitMix64 finaliser, used to derive independent seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream))
}

pub(crate) mod streams {
    pub const FLING: u64 = 1;
    pub const NEXT_SEED: u64 = 2;
    pub const SCD1: u64 = 3;
    pub const SCD2: u64 = 4;
    pub const CONFIDENCE: u64 = 5;
    pub const RANDOMIZE: u64 = 6;
    pub const SHAKE: u64 = 7;
}
