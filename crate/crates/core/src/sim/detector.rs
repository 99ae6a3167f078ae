use rand::Rng;
use rand_distr::StandardNormal;

use super::{rng_for, streams, GarmentObservation, SimConfig};
use crate::codec::{encode, CodecConfig, OrientedSeamBox};
use crate::fusion::{CrossingDetection, DetectionSource};

/// What the seam extractor and the two crossing detectors would report.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    pub boxes: Vec<OrientedSeamBox>,
    pub scd1: Vec<CrossingDetection>,
    pub scd2: Vec<CrossingDetection>,
}

/// Stand-in for the learned detectors: visible seams go through the box
/// encoder, and each crossing source independently drops and jitters the
/// visible crossings.
pub fn detector_surrogate(obs: &GarmentObservation, width: u32, height: u32, seed: u64, cfg: &SimConfig) -> DetectorOutput {
    let codec = CodecConfig {
        lambda_thres: cfg.lambda_thres,
        width,
        height,
    };
    let boxes = obs
        .visible_segments
        .iter()
        .filter_map(|s| encode(s, &codec).ok().flatten())
        .collect();
    let (w, h) = (f64::from(width) - 1.0, f64::from(height) - 1.0);
    let source = |src: DetectionSource, stream: u64| {
        let mut rng = rng_for(seed, stream);
        let mut out = Vec::new();
        for v in &obs.visible_crossings {
            let keep: f64 = rng.random();
            let jx: f64 = rng.sample(StandardNormal);
            let jy: f64 = rng.sample(StandardNormal);
            let dc: f64 = rng.random();
            if keep >= cfg.detector_recall {
                continue;
            }
            out.push(CrossingDetection {
                c: v.c,
                x: (v.x + (jx * cfg.detector_jitter_px).round()).clamp(0.0, w),
                y: (v.y + (jy * cfg.detector_jitter_px).round()).clamp(0.0, h),
                confidence: (v.confidence - 0.05 * dc).clamp(0.0, 1.0),
                source: src,
            });
        }
        out
    };
    DetectorOutput {
        boxes,
        scd1: source(DetectionSource::Scd1, streams::SCD1),
        scd2: source(DetectionSource::Scd2, streams::SCD2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{merge, FusionConfig};
    use crate::sim::{render, CanonicalGarment, GarmentState};

    #[test]
    fn noiseless_channel_recovers_crossings() {
        let g = CanonicalGarment::tshirt();
        let obs = render(&g, &GarmentState::flat(1));
        let cfg = SimConfig::noiseless();
        let out = detector_surrogate(&obs, g.width, g.height, 11, &cfg);
        let fused = merge(&out.scd1, &out.scd2, &FusionConfig::default());
        let mut got: Vec<(u8, f64, f64)> = fused.iter().map(|d| (d.c as u8, d.x, d.y)).collect();
        let mut want: Vec<(u8, f64, f64)> = obs.visible_crossings.iter().map(|v| (v.c as u8, v.x, v.y)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
        assert_eq!(out.boxes.len(), obs.visible_segments.len());
    }

    #[test]
    fn dead_source_leaves_the_other() {
        let g = CanonicalGarment::tshirt();
        let obs = render(&g, &GarmentState::flat(1));
        let cfg = SimConfig::default();
        let mut out = detector_surrogate(&obs, g.width, g.height, 4, &cfg);
        out.scd1.clear();
        let fused = merge(&out.scd1, &out.scd2, &FusionConfig::default());
        assert_eq!(fused, merge(&[], &out.scd2, &FusionConfig::default()));
        assert!(fused.iter().all(|d| d.source == DetectionSource::Scd2));
        let zero = SimConfig {
            detector_recall: 0.0,
            ..cfg
        };
        assert!(detector_surrogate(&obs, g.width, g.height, 4, &zero).scd1.is_empty());
    }
}
