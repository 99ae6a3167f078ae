use serde::{Deserialize, Serialize};

use super::AblationMode;
use crate::codec::grasp_candidates_from_box;
use crate::fusion::{merge, FusionConfig};
use crate::geometry::Point;
use crate::metrics::iou;
use crate::policy::{
    pick_matrix, select, Csst, DecisionMatrix, GraspCandidate, MatrixLabel, PolicyError, Provenance, SeamSegmentType,
};
use crate::sim::{
    detector_surrogate, grasp_fling, mix_seed, randomize, render, CanonicalGarment, DetectorOutput, GarmentObservation,
    GarmentState, SimConfig, SimError,
};

const FALLBACK_STREAM: u64 = 0x5EED_F411;

/// Everything a step needs besides the state and the matrices.
#[derive(Debug, Clone)]
pub struct Env {
    pub garment: CanonicalGarment,
    pub sim: SimConfig,
    pub fusion: FusionConfig,
    pub switch_threshold: f64,
    pub mode: AblationMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrices {
    pub nint: DecisionMatrix,
    pub int: DecisionMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    GraspFling {
        p_left: Point,
        p_right: Point,
        csst: Csst,
        score: f64,
        matrix: MatrixLabel,
    },
    /// The chosen grasp missed the garment; the state is unchanged.
    GraspMiss {
        p_left: Point,
        p_right: Point,
        csst: Csst,
        matrix: MatrixLabel,
    },
    /// No candidate pair matched a populated cell.
    Randomize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSummary {
    pub visible_segments: usize,
    pub visible_crossings: usize,
    pub seam_boxes: usize,
    pub scd1: usize,
    pub scd2: usize,
    pub fused_crossings: usize,
    pub candidates: usize,
}

/// One line of the episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub trial_id: u64,
    pub step: usize,
    /// Digest of the state the step acted on.
    pub state_digest: String,
    pub action: Action,
    pub observation: ObservationSummary,
    pub ncov_prev: f64,
    pub ncov: f64,
    pub iou: f64,
    pub excluded: bool,
}

/// The matrix cell a grasp decision came from, for later updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionRef {
    pub matrix: MatrixLabel,
    pub csst: Csst,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: GarmentState,
    pub observation: GarmentObservation,
    pub log: StepLog,
    /// Set only for completed grasps.
    pub decision: Option<DecisionRef>,
}

/// Grasp candidates from the detector output. Seam boxes contribute their
/// endpoints and midpoints unless the mode restricts candidates to
/// crossings from the seam-map detector.
pub fn assemble_candidates(det: &DetectorOutput, env: &Env) -> (Vec<GraspCandidate>, usize) {
    let mut out = Vec::new();
    let fused = if env.mode == AblationMode::AbSi {
        merge(&[], &det.scd2, &env.fusion)
    } else {
        for b in &det.boxes {
            for gp in grasp_candidates_from_box(b) {
                out.push(GraspCandidate {
                    type_id: SeamSegmentType::from(gp.j),
                    point: gp.point,
                    provenance: Provenance::LineSegment,
                });
            }
        }
        merge(&det.scd1, &det.scd2, &env.fusion)
    };
    for d in &fused {
        out.push(GraspCandidate {
            type_id: SeamSegmentType::from(d.c),
            point: Point::new(d.x, d.y),
            provenance: Provenance::Crossing,
        });
    }
    (out, fused.len())
}

/// Perceive, select and act once. `obs` must be the rendering of `state`.
pub fn run_episode_step(
    env: &Env,
    trial_id: u64,
    step: usize,
    state: &GarmentState,
    obs: &GarmentObservation,
    matrices: &Matrices,
) -> Result<StepResult, SimError> {
    let g = &env.garment;
    let det = detector_surrogate(obs, g.width, g.height, mix_seed(state.rng_seed, step as u64), &env.sim);
    let (candidates, fused) = assemble_candidates(&det, env);
    let matrix = match env.mode {
        AblationMode::AbDm => &matrices.nint,
        _ => pick_matrix(obs.ncov, &matrices.nint, &matrices.int, env.switch_threshold),
    };
    let used = if std::ptr::eq(matrix, &matrices.nint) {
        MatrixLabel::Nint
    } else {
        MatrixLabel::Int
    };

    let (next, action, decision, excluded) = match select(&candidates, matrix) {
        Ok(d) => match grasp_fling(g, state, d.p_left, d.p_right, &env.sim) {
            Ok(next) => (
                next,
                Action::GraspFling {
                    p_left: d.p_left,
                    p_right: d.p_right,
                    csst: d.csst,
                    score: d.score,
                    matrix: used,
                },
                Some(DecisionRef {
                    matrix: used,
                    csst: d.csst,
                }),
                false,
            ),
            Err(SimError::GraspMiss(_)) => (
                state.clone(),
                Action::GraspMiss {
                    p_left: d.p_left,
                    p_right: d.p_right,
                    csst: d.csst,
                    matrix: used,
                },
                None,
                true,
            ),
            Err(e) => return Err(e),
        },
        Err(PolicyError::NoFeasiblePair) => {
            let next = randomize(g, mix_seed(state.rng_seed, FALLBACK_STREAM), &env.sim)?;
            (next, Action::Randomize, None, false)
        }
        Err(e) => unreachable!("select only reports infeasibility: {e}"),
    };

    let observation = render(g, &next);
    let iou = iou(&observation.mask, g.goal_mask()).expect("masks share the frame");
    let log = StepLog {
        trial_id,
        step,
        state_digest: state.digest(),
        action,
        observation: ObservationSummary {
            visible_segments: obs.visible_segments.len(),
            visible_crossings: obs.visible_crossings.len(),
            seam_boxes: det.boxes.len(),
            scd1: det.scd1.len(),
            scd2: det.scd2.len(),
            fused_crossings: fused,
            candidates: candidates.len(),
        },
        ncov_prev: obs.ncov,
        ncov: observation.ncov,
        iou,
        excluded,
    };
    Ok(StepResult {
        state: next,
        observation,
        log,
        decision,
    })
}
