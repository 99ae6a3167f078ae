//! Grasp-pair selection from a decision matrix of seam-type combinations.
//!
//! Every grasp candidate carries one of six seam segment types. A pair of
//! candidates maps to an unordered type combination, and the decision
//! matrix stores the running mean unfolding reward observed for each
//! combination. Selection takes the best-scoring combination that the
//! current candidates can realise and, within it, the farthest pair.

mod matrix;
mod select;

pub use matrix::{
    init_from_demos, pad_ncovs, pick_matrix, trial_reward, Cell, DecisionMatrix, MatrixFile, MatrixLabel,
    TrialRecord, MATRIX_SCHEMA_VERSION, TRIAL_SCHEMA_VERSION,
};
pub use select::select;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::SeamCategory;
use crate::fusion::CrossingType;
use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("invalid seam type combination ({k}, {l}): need 6 >= k >= l >= 1")]
    InvalidCsst { k: u8, l: u8 },
    #[error("invalid trial: {0}")]
    InvalidTrial(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("no candidate pair matches a populated matrix cell")]
    NoFeasiblePair,
}

/// The six seam segment types a grasp point can sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SeamSegmentType {
    Shoulder = 1,
    BottomHem = 2,
    NeckPoint = 3,
    Solid = 4,
    Dotted = 5,
    Neckline = 6,
}

impl SeamSegmentType {
    pub const ALL: [SeamSegmentType; 6] = [
        SeamSegmentType::Shoulder,
        SeamSegmentType::BottomHem,
        SeamSegmentType::NeckPoint,
        SeamSegmentType::Solid,
        SeamSegmentType::Dotted,
        SeamSegmentType::Neckline,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for SeamSegmentType {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        Self::ALL
            .get(usize::from(v).wrapping_sub(1))
            .copied()
            .ok_or_else(|| format!("seam segment type must be in 1..=6, got {v}"))
    }
}

impl From<SeamSegmentType> for u8 {
    fn from(t: SeamSegmentType) -> u8 {
        t as u8
    }
}

impl From<CrossingType> for SeamSegmentType {
    fn from(c: CrossingType) -> Self {
        match c {
            CrossingType::Shoulder => Self::Shoulder,
            CrossingType::BottomHem => Self::BottomHem,
            CrossingType::NeckPoint => Self::NeckPoint,
        }
    }
}

impl From<SeamCategory> for SeamSegmentType {
    /// Inward seams are treated as dotted.
    fn from(c: SeamCategory) -> Self {
        match c {
            SeamCategory::Solid => Self::Solid,
            SeamCategory::Dotted | SeamCategory::Inward => Self::Dotted,
            SeamCategory::Neckline => Self::Neckline,
        }
    }
}

/// A combination of two seam segment types, stored with `k >= l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u8; 2]", into = "[u8; 2]")]
pub struct Csst {
    k: SeamSegmentType,
    l: SeamSegmentType,
}

impl Csst {
    /// Canonicalises an unordered pair.
    pub fn of(a: SeamSegmentType, b: SeamSegmentType) -> Self {
        if a >= b {
            Self { k: a, l: b }
        } else {
            Self { k: b, l: a }
        }
    }

    /// Accepts only already-canonical indices.
    pub fn new(k: u8, l: u8) -> Result<Self, PolicyError> {
        let invalid = || PolicyError::InvalidCsst { k, l };
        let kt = SeamSegmentType::try_from(k).map_err(|_| invalid())?;
        let lt = SeamSegmentType::try_from(l).map_err(|_| invalid())?;
        if kt < lt {
            return Err(invalid());
        }
        Ok(Self { k: kt, l: lt })
    }

    pub fn k(self) -> SeamSegmentType {
        self.k
    }

    pub fn l(self) -> SeamSegmentType {
        self.l
    }

    /// All 21 cells in `(k, l)` lexicographic order.
    pub fn all() -> impl Iterator<Item = Csst> {
        SeamSegmentType::ALL
            .into_iter()
            .flat_map(|k| SeamSegmentType::ALL.into_iter().filter(move |l| *l <= k).map(move |l| Csst { k, l }))
    }
}

impl TryFrom<[u8; 2]> for Csst {
    type Error = PolicyError;
    fn try_from(v: [u8; 2]) -> Result<Self, PolicyError> {
        Csst::new(v[0], v[1])
    }
}

impl From<Csst> for [u8; 2] {
    fn from(c: Csst) -> [u8; 2] {
        [c.k as u8, c.l as u8]
    }
}

impl std::fmt::Display for Csst {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.k as u8, self.l as u8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LineSegment,
    Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    pub type_id: SeamSegmentType,
    pub point: Point,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspDecision {
    pub p_left: Point,
    pub p_right: Point,
    pub csst: Csst,
    pub score: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csst_canonicalises() {
        use SeamSegmentType::*;
        assert_eq!(Csst::of(Shoulder, Solid), Csst::of(Solid, Shoulder));
        assert_eq!(Csst::of(Shoulder, Solid).k(), Solid);
        assert!(Csst::new(1, 4).is_err());
        assert!(Csst::new(7, 1).is_err());
        assert!(Csst::new(0, 0).is_err());
        assert_eq!(Csst::all().count(), 21);
        assert_eq!(serde_json::to_string(&Csst::new(4, 1).unwrap()).unwrap(), "[4,1]");
        assert!(serde_json::from_str::<Csst>("[1,4]").is_err());
    }

    #[test]
    fn inward_maps_to_dotted() {
        assert_eq!(SeamSegmentType::from(SeamCategory::Inward), SeamSegmentType::Dotted);
        assert_eq!(SeamSegmentType::from(SeamCategory::Neckline), SeamSegmentType::Neckline);
        assert_eq!(SeamSegmentType::from(CrossingType::NeckPoint), SeamSegmentType::NeckPoint);
    }
}
