use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{Isometry, Line, Point};

/// Rigid placement of the folded garment on the table:
/// `p -> R(angle) * (mirrored ? (x, -y) : p) + (tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub angle: f64,
    pub mirrored: bool,
    pub tx: f64,
    pub ty: f64,
}

impl Placement {
    pub const IDENTITY: Placement = Placement {
        angle: 0.0,
        mirrored: false,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn to_isometry(&self) -> Isometry {
        let rot = Isometry::rotation(self.angle);
        let base = if self.mirrored {
            rot.then_after(&Isometry::mirror_y())
        } else {
            rot
        };
        Isometry::translation(Point::new(self.tx, self.ty)).then_after(&base)
    }

    pub fn from_isometry(iso: &Isometry) -> Self {
        Self {
            angle: iso.m[1][0].atan2(iso.m[0][0]),
            mirrored: iso.is_mirror(),
            tx: iso.t.x,
            ty: iso.t.y,
        }
    }
}

impl Default for Placement {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Ground-truth configuration: folds in the garment's own frame, applied in
/// order, then the placement. Each fold moves its positive side (see
/// [`Line::side`]) on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarmentState {
    pub folds: Vec<Line>,
    pub placement: Placement,
    pub rng_seed: u64,
}

impl GarmentState {
    pub fn flat(rng_seed: u64) -> Self {
        Self {
            folds: Vec::new(),
            placement: Placement::IDENTITY,
            rng_seed,
        }
    }

    /// SHA-256 of the state's JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("state serialises");
        hex::encode(Sha256::digest(&json))
    }
}
