use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;

use super::layers::fold_point;
use super::{mix_seed, rng_for, streams, CanonicalGarment, GarmentState, Layered, Placement, SimConfig, SimError};
use crate::fusion::CrossingType;
use crate::geometry::{Isometry, Line, Point};

/// Where the grip midpoint lands: halfway between the pixel centres of the
/// two shoulder crossings of the flat garment.
pub(crate) fn grip_anchor(g: &CanonicalGarment) -> Point {
    let centres: Vec<Point> = g
        .crossings
        .iter()
        .filter(|c| c.c == CrossingType::Shoulder)
        .map(|c| Point::new(c.x.floor() + 0.5, c.y.floor() + 0.5))
        .collect();
    centres[0].midpoint(centres[1])
}

/// Offset that moves `[lo, hi]` inside `[0, limit]`: the smallest shift when
/// it fits, otherwise the one that centres it.
fn fit_shift(lo: f64, hi: f64, limit: f64) -> f64 {
    if hi - lo > limit {
        (limit - lo - hi) / 2.0
    } else if lo < 0.0 {
        -lo
    } else if hi > limit {
        limit - hi
    } else {
        0.0
    }
}

/// The piece a gripper closing at `p` takes hold of: the top layer under
/// the nearest pixel centre with material within `tolerance`, the pixel
/// under `p` first. Equal distances go to the smaller row, then column.
fn grip_at(layers: &Layered, p: Point, tolerance: f64) -> Option<(usize, Point)> {
    let (cx, cy) = (p.x.floor(), p.y.floor());
    let centre = Point::new(cx + 0.5, cy + 0.5);
    if let Some(idx) = layers.top_piece_at(centre) {
        return Some((idx, centre));
    }
    let r = tolerance.floor() as i64;
    let mut offsets: Vec<(i64, i64, i64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx * dx + dy * dy, dy, dx)))
        .filter(|&(d2, _, _)| d2 > 0 && (d2 as f64) <= tolerance * tolerance)
        .collect();
    offsets.sort_unstable();
    offsets.into_iter().find_map(|(_, dy, dx)| {
        let q = Point::new(cx + dx as f64 + 0.5, cy + dy as f64 + 0.5);
        layers.top_piece_at(q).map(|idx| (idx, q))
    })
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Folds in the garment's frame equivalent to `line` drawn on the table.
fn table_line_to_local(line: &Line, placement: &Isometry) -> Line {
    let local = line.transformed(&placement.inverse());
    if placement.is_mirror() {
        local.reversed()
    } else {
        local
    }
}

/// A crumpled start: 1 to `max_folds` (at most 4) random folds near the
/// middle of the garment and a random placement, redrawn until coverage is
/// below `randomize_max_ncov`.
pub fn randomize(g: &CanonicalGarment, seed: u64, cfg: &SimConfig) -> Result<GarmentState, SimError> {
    let mut rng = rng_for(seed, streams::RANDOMIZE);
    let (w, h) = (f64::from(g.width) - 1.0, f64::from(g.height) - 1.0);
    let cov_max = g.cov_max() as f64;
    for attempt in 0..cfg.randomize_attempts {
        let n = rng.random_range(1..=cfg.max_folds.min(4));
        let mut folds = Vec::with_capacity(n);
        for _ in 0..n {
            let c = Layered::build(&g.outline, &folds, &Isometry::IDENTITY).local_centroid();
            let through = c + Point::new(normal(&mut rng) * 80.0, normal(&mut rng) * 80.0);
            let a: f64 = rng.random_range(0.0..TAU);
            folds.push(Line::new(through, Point::new(a.cos(), a.sin())).expect("unit direction"));
        }
        let angle: f64 = rng.random_range(-PI..PI);
        let mirrored = rng.random_bool(0.5);
        let (ux, uy): (f64, f64) = (rng.random(), rng.random());
        let base = Placement {
            angle,
            mirrored,
            tx: 0.0,
            ty: 0.0,
        };
        let layers = Layered::build(&g.outline, &folds, &base.to_isometry());
        let (lo, hi) = layers.table_bounds().expect("garment has vertices");
        let place = |lo: f64, hi: f64, limit: f64, u: f64| {
            if hi - lo > limit {
                (limit - lo - hi) / 2.0
            } else {
                -lo + u * (limit - (hi - lo))
            }
        };
        let placement = Placement {
            tx: place(lo.x, hi.x, w, ux),
            ty: place(lo.y, hi.y, h, uy),
            ..base
        };
        let layers = Layered::build(&g.outline, &folds, &placement.to_isometry());
        let cov = layers.mask(g.width, g.height).count() as f64 / cov_max;
        if cov < cfg.randomize_max_ncov {
            return Ok(GarmentState {
                folds,
                placement,
                rng_seed: mix_seed(mix_seed(seed, streams::NEXT_SEED), u64::from(attempt)),
            });
        }
    }
    Err(SimError::RandomizeExhausted {
        max_ncov: cfg.randomize_max_ncov,
        attempts: cfg.randomize_attempts,
    })
}

/// Placement holding the garment by two canonical points, plus the drape
/// folds that hanging from them produces (in the garment frame).
fn hang(
    g: &CanonicalGarment,
    residual: &[Line],
    grips: [Point; 2],
    anchor: Point,
    cfg: &SimConfig,
) -> (Isometry, Vec<Line>) {
    let (l, r) = (fold_point(grips[0], residual), fold_point(grips[1], residual));
    let v = r - l;
    let spread = v.norm();
    let phi = if spread > 1e-9 { v.y.atan2(v.x) } else { 0.0 };
    let rot = Isometry::rotation(-phi);
    let mut iso = Isometry::translation(anchor - rot.apply(l.midpoint(r))).then_after(&rot);
    let centroid = iso.apply(Layered::build(&g.outline, residual, &Isometry::IDENTITY).local_centroid());
    if centroid.y < anchor.y {
        // the body hangs below the grip line
        let flip = Isometry {
            m: [[1.0, 0.0], [0.0, -1.0]],
            t: Point::new(0.0, 2.0 * anchor.y),
        };
        iso = flip.then_after(&iso);
    }

    let half = spread / 2.0;
    let top = anchor.y - cfg.drape_top_margin;
    let left = anchor.x - half - cfg.drape_side_margin;
    let right = anchor.x + half + cfg.drape_side_margin;
    let bottom = anchor.y + cfg.drape_bottom_margin;
    let creases = [
        Line::new(Point::new(0.0, top), Point::new(-1.0, 0.0)),
        Line::new(Point::new(left, 0.0), Point::new(0.0, 1.0)),
        Line::new(Point::new(right, 0.0), Point::new(0.0, -1.0)),
        Line::new(Point::new(0.0, bottom), Point::new(1.0, 0.0)),
    ];
    let mut folds = residual.to_vec();
    let mut drape = Vec::new();
    for crease in creases.into_iter().flatten() {
        let layers = Layered::build(&g.outline, &folds, &iso);
        let beyond = layers.pieces.iter().flat_map(|p| p.table.iter()).any(|q| crease.side(*q) > 1.0);
        if beyond {
            let local = table_line_to_local(&crease, &iso);
            folds.push(local);
            drape.push(local);
        }
    }
    (iso, drape)
}

/// Grasp the garment at two table points and fling it.
///
/// Each grip takes the top layer under its pixel centre. Every fold whose
/// flap holds a gripped point is shaken out; each other fold persists with
/// probability `fold_persistence`. The
/// garment then hangs from the grips with the grip line horizontal and its
/// midpoint at the shoulder anchor, parts far outside the grips drape over
/// into new folds, and the result lands with seeded rotation and
/// translation noise. Grips with no material within the grasp tolerance give `GraspMiss`.
pub fn grasp_fling(
    g: &CanonicalGarment,
    state: &GarmentState,
    p_left: Point,
    p_right: Point,
    cfg: &SimConfig,
) -> Result<GarmentState, SimError> {
    let layers = Layered::build(&g.outline, &state.folds, &state.placement.to_isometry());
    let mut shaken = 0u64;
    let mut grips = [Point::default(); 2];
    for (slot, p) in [p_left, p_right].into_iter().enumerate() {
        let (idx, centre) = grip_at(&layers, p, cfg.grasp_tolerance_px).ok_or(SimError::GraspMiss(p))?;
        let piece = &layers.pieces[idx];
        grips[slot] = piece.to_table.inverse().apply(centre);
        shaken |= piece.flaps;
    }
    // folds not held open by a grip may still fall open while hanging
    let mut shake = rng_for(state.rng_seed, streams::SHAKE);
    let mut residual: Vec<Line> = Vec::with_capacity(state.folds.len());
    for (k, f) in state.folds.iter().enumerate() {
        let stays: f64 = shake.random();
        if shaken >> k & 1 == 0 && stays < cfg.fold_persistence {
            residual.push(*f);
        }
    }

    let anchor = grip_anchor(g);
    let (iso, drape) = loop {
        let (iso, drape) = hang(g, &residual, grips, anchor, cfg);
        if residual.len() + drape.len() <= cfg.max_folds || residual.is_empty() {
            break (iso, drape);
        }
        // the oldest creases give way first
        residual.remove(0);
    };
    let mut folds = residual;
    let room = cfg.max_folds.saturating_sub(folds.len());
    folds.extend(drape.into_iter().take(room));

    let mut rng = rng_for(state.rng_seed, streams::FLING);
    let dtheta = normal(&mut rng) * cfg.rotation_noise_deg.to_radians();
    let shift = Point::new(
        normal(&mut rng) * cfg.translation_noise_px,
        normal(&mut rng) * cfg.translation_noise_px,
    );
    let (lo, hi) = Layered::build(&g.outline, &folds, &iso).table_bounds().expect("garment has vertices");
    let centre = lo.midpoint(hi);
    let noise = Isometry::translation(centre + shift)
        .then_after(&Isometry::rotation(dtheta))
        .then_after(&Isometry::translation(Point::new(-centre.x, -centre.y)));
    let iso = noise.then_after(&iso);

    let (lo, hi) = Layered::build(&g.outline, &folds, &iso).table_bounds().expect("garment has vertices");
    let (w, h) = (f64::from(g.width) - 1.0, f64::from(g.height) - 1.0);
    let fit = Point::new(fit_shift(lo.x, hi.x, w), fit_shift(lo.y, hi.y, h));
    let iso = Isometry::translation(fit).then_after(&iso);

    Ok(GarmentState {
        folds,
        placement: Placement::from_isometry(&iso),
        rng_seed: mix_seed(state.rng_seed, streams::NEXT_SEED),
    })
}
