use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{Csst, DecisionMatrix, GraspCandidate, GraspDecision, PolicyError};
use crate::geometry::Point;

fn cmp_point(a: Point, b: Point) -> Ordering {
    a.x.total_cmp(&b.x).then_with(|| a.y.total_cmp(&b.y))
}

/// Left hand takes the point with the smaller x (then smaller y).
fn left_right(a: Point, b: Point) -> (Point, Point) {
    if cmp_point(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

#[derive(Clone, Copy)]
struct BestPair {
    dist2: f64,
    left: Point,
    right: Point,
}

impl BestPair {
    fn beats(&self, other: &BestPair) -> bool {
        match self.dist2.total_cmp(&other.dist2) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                cmp_point(self.left, other.left).then_with(|| cmp_point(self.right, other.right)) == Ordering::Less
            }
        }
    }
}

/// Picks the grasp pair: the populated combination with the highest score
/// among those the candidates realise, then the farthest pair realising it.
///
/// Score ties go to the combination with the farther available pair, then
/// to the smaller `(k, l)`. Distance ties go to the lexicographically
/// smaller `(left, right)` points. Candidates at the same pixel never pair.
pub fn select(candidates: &[GraspCandidate], m: &DecisionMatrix) -> Result<GraspDecision, PolicyError> {
    let mut best: BTreeMap<Csst, BestPair> = BTreeMap::new();
    for (i, a) in candidates.iter().enumerate() {
        for b in &candidates[i + 1..] {
            if a.point == b.point {
                continue;
            }
            let csst = Csst::of(a.type_id, b.type_id);
            if m.score(csst).is_none() {
                continue;
            }
            let (left, right) = left_right(a.point, b.point);
            let d = b.point - a.point;
            let pair = BestPair {
                dist2: d.dot(d),
                left,
                right,
            };
            best.entry(csst)
                .and_modify(|cur| {
                    if pair.beats(cur) {
                        *cur = pair;
                    }
                })
                .or_insert(pair);
        }
    }

    let mut chosen: Option<(Csst, f64, BestPair)> = None;
    for (csst, pair) in best {
        let u = m.score(csst).expect("only populated cells are collected");
        let better = match &chosen {
            None => true,
            Some((_, bu, bp)) => match u.total_cmp(bu) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => pair.dist2 > bp.dist2,
            },
        };
        if better {
            chosen = Some((csst, u, pair));
        }
    }

    let (csst, score, pair) = chosen.ok_or(PolicyError::NoFeasiblePair)?;
    Ok(GraspDecision {
        p_left: pair.left,
        p_right: pair.right,
        csst,
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{Cell, MatrixLabel, Provenance, SeamSegmentType};

    fn cand(t: SeamSegmentType, x: f64, y: f64) -> GraspCandidate {
        GraspCandidate {
            type_id: t,
            point: Point::new(x, y),
            provenance: Provenance::Crossing,
        }
    }

    fn matrix(cells: &[((u8, u8), f64)]) -> DecisionMatrix {
        let mut m = DecisionMatrix::empty(MatrixLabel::Nint, 5);
        for &((k, l), u) in cells {
            m.set_cell(Csst::new(k, l).unwrap(), Cell { u, m: 10 }).unwrap();
        }
        m
    }

    use SeamSegmentType::{Shoulder, Solid};

    #[test]
    fn argmax_cell_with_single_pair() {
        let c = [
            cand(Shoulder, 100.0, 100.0),
            cand(Shoulder, 500.0, 100.0),
            cand(Solid, 300.0, 400.0),
        ];
        let d = select(&c, &matrix(&[((1, 1), 0.9), ((4, 1), 0.6)])).unwrap();
        assert_eq!(d.csst, Csst::new(1, 1).unwrap());
        assert_eq!((d.p_left, d.p_right), (Point::new(100.0, 100.0), Point::new(500.0, 100.0)));
        assert_eq!(d.score, 0.9);
    }

    #[test]
    fn falls_back_to_next_populated_cell() {
        let c = [
            cand(Shoulder, 100.0, 100.0),
            cand(Shoulder, 500.0, 100.0),
            cand(Solid, 300.0, 400.0),
        ];
        let d = select(&c, &matrix(&[((4, 1), 0.6)])).unwrap();
        assert_eq!(d.csst, Csst::new(4, 1).unwrap());
        // both shoulder-solid pairs are 360.55 px long; the tie goes to the
        // lexicographically smaller pair
        assert_eq!((d.p_left, d.p_right), (Point::new(100.0, 100.0), Point::new(300.0, 400.0)));
    }

    #[test]
    fn collinear_same_type_takes_extremes() {
        let c: Vec<_> = [3.0, 9.0, 1.0, 7.0, 5.0].iter().map(|&x| cand(Solid, x * 10.0, 2.0 * x)).collect();
        let d = select(&c, &matrix(&[((4, 4), 0.5)])).unwrap();
        assert_eq!((d.p_left, d.p_right), (Point::new(10.0, 2.0), Point::new(90.0, 18.0)));
    }

    #[test]
    fn infeasible_inputs() {
        let m = matrix(&[((1, 1), 0.9)]);
        assert_eq!(select(&[], &m), Err(PolicyError::NoFeasiblePair));
        assert_eq!(select(&[cand(Shoulder, 1.0, 1.0)], &m), Err(PolicyError::NoFeasiblePair));
        let c = [cand(Shoulder, 1.0, 1.0), cand(Solid, 9.0, 9.0)];
        assert_eq!(select(&c, &m), Err(PolicyError::NoFeasiblePair));
        let empty = DecisionMatrix::empty(MatrixLabel::Init, 5);
        assert_eq!(select(&c, &empty), Err(PolicyError::NoFeasiblePair));
        // coincident points never pair
        let c = [cand(Shoulder, 1.0, 1.0), cand(Shoulder, 1.0, 1.0)];
        assert_eq!(select(&c, &m), Err(PolicyError::NoFeasiblePair));
    }

    #[test]
    fn score_tie_prefers_longer_pair_then_smaller_cell() {
        let c = [
            cand(Shoulder, 0.0, 0.0),
            cand(Shoulder, 10.0, 0.0),
            cand(Solid, 0.0, 100.0),
            cand(Solid, 0.0, 300.0),
        ];
        let d = select(&c, &matrix(&[((1, 1), 0.7), ((4, 4), 0.7)])).unwrap();
        assert_eq!(d.csst, Csst::new(4, 4).unwrap());
        let c = [cand(Shoulder, 0.0, 0.0), cand(Shoulder, 10.0, 0.0), cand(Solid, 0.0, 10.0), cand(Solid, 10.0, 10.0)];
        let d = select(&c, &matrix(&[((1, 1), 0.7), ((4, 4), 0.7)])).unwrap();
        assert_eq!(d.csst, Csst::new(1, 1).unwrap());
    }

    #[test]
    fn left_right_by_x() {
        let c = [cand(Shoulder, 500.0, 10.0), cand(Shoulder, 100.0, 900.0)];
        let d = select(&c, &matrix(&[((1, 1), 0.7)])).unwrap();
        assert!(d.p_left.x <= d.p_right.x);
        assert_eq!(d.p_left, Point::new(100.0, 900.0));
    }
}
