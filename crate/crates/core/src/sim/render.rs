use serde::{Deserialize, Serialize};

use super::{rng_for, streams, CanonicalGarment, GarmentState, Layered};
use crate::codec::{SeamCategory, SeamLineSegment};
use crate::fusion::CrossingType;
use crate::geometry::{segment_inside_intervals, subtract_intervals, Point};
use crate::metrics::{ncov, CoverageMask};
use rand::Rng;

/// Crossing confidences are `1 - U[0, CONFIDENCE_NOISE)`.
const CONFIDENCE_NOISE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibleCrossing {
    pub c: CrossingType,
    /// Exact table position.
    pub point: Point,
    /// Pixel containing `point`.
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct GarmentObservation {
    pub visible_segments: Vec<SeamLineSegment>,
    pub visible_crossings: Vec<VisibleCrossing>,
    pub mask: CoverageMask,
    pub ncov: f64,
}

pub(crate) fn frame_polygon(width: u32, height: u32) -> [Point; 4] {
    let (w, h) = (f64::from(width) - 1.0, f64::from(height) - 1.0);
    [
        Point::new(0.0, 0.0),
        Point::new(w, 0.0),
        Point::new(w, h),
        Point::new(0.0, h),
    ]
}

pub fn render(garment: &CanonicalGarment, state: &GarmentState) -> GarmentObservation {
    let layers = Layered::build(&garment.outline, &state.folds, &state.placement.to_isometry());
    render_layers(garment, &layers, state.rng_seed)
}

pub(crate) fn render_layers(garment: &CanonicalGarment, layers: &Layered, rng_seed: u64) -> GarmentObservation {
    let frame = frame_polygon(garment.width, garment.height);
    let mut visible_segments = Vec::new();
    for (i, piece) in layers.pieces.iter().enumerate() {
        for (j, a, b) in garment.seam_segments() {
            if j == SeamCategory::Inward && piece.face_down {
                continue;
            }
            let inside = segment_inside_intervals(&piece.canonical, a, b);
            if inside.is_empty() {
                continue;
            }
            let (ta, tb) = (piece.to_table.apply(a), piece.to_table.apply(b));
            let mut vis = inside;
            for above in &layers.pieces[i + 1..] {
                if vis.is_empty() {
                    break;
                }
                vis = subtract_intervals(&vis, &segment_inside_intervals(&above.table, ta, tb));
            }
            let in_frame = segment_inside_intervals(&frame, ta, tb);
            vis = intersect_intervals(&vis, &in_frame);
            for (t0, t1) in vis {
                let (p, q) = (ta.lerp(tb, t0), ta.lerp(tb, t1));
                let seg = SeamLineSegment::new(j, p.x.floor(), p.y.floor(), q.x.floor(), q.y.floor());
                if seg.start() != seg.end() {
                    visible_segments.push(seg);
                }
            }
        }
    }

    let mut conf_rng = rng_for(rng_seed, streams::CONFIDENCE);
    let mut visible_crossings = Vec::new();
    for cr in &garment.crossings {
        let noise: f64 = conf_rng.random();
        let m = cr.point();
        let Some(i) = layers.pieces.iter().position(|p| crate::geometry::contains(&p.canonical, m)) else {
            continue;
        };
        let t = layers.pieces[i].to_table.apply(m);
        let (w, h) = (f64::from(garment.width) - 1.0, f64::from(garment.height) - 1.0);
        if !(t.x >= 0.0 && t.y >= 0.0 && t.x <= w && t.y <= h) || layers.covered_above(i, t) {
            continue;
        }
        visible_crossings.push(VisibleCrossing {
            c: cr.c,
            point: t,
            x: t.x.floor(),
            y: t.y.floor(),
            confidence: 1.0 - noise * CONFIDENCE_NOISE,
        });
    }

    let mask = layers.mask(garment.width, garment.height);
    let ncov = ncov(&mask, garment.cov_max()).expect("garment has positive area");
    GarmentObservation {
        visible_segments,
        visible_crossings,
        mask,
        ncov,
    }
}

fn intersect_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}
