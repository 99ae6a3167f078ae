use crate::geometry::{area, bounds, clip_half_plane, contains, signed_area, Isometry, Line, Point};
use crate::metrics::CoverageMask;

const MIN_PIECE_AREA: f64 = 1e-6;

/// One flat layer of material after folding.
#[derive(Debug, Clone)]
pub struct Piece {
    /// Region of the flat garment this piece is made of.
    pub canonical: Vec<Point>,
    /// Canonical to folded-frame map.
    pub to_local: Isometry,
    pub local: Vec<Point>,
    /// Canonical to table map.
    pub to_table: Isometry,
    pub table: Vec<Point>,
    /// Bit `k` is set when the piece was carried over by fold `k`.
    pub flaps: u64,
    /// Showing its reverse face, placement mirror included.
    pub face_down: bool,
}

/// Pieces ordered bottom to top.
#[derive(Debug, Clone)]
pub struct Layered {
    pub pieces: Vec<Piece>,
}

impl Layered {
    pub fn build(outline: &[Point], folds: &[Line], placement: &Isometry) -> Self {
        assert!(folds.len() <= 64, "at most 64 folds are tracked");
        let mut pieces = vec![Piece {
            canonical: outline.to_vec(),
            to_local: Isometry::IDENTITY,
            local: outline.to_vec(),
            to_table: Isometry::IDENTITY,
            table: Vec::new(),
            flaps: 0,
            face_down: false,
        }];
        for (k, fold) in folds.iter().enumerate() {
            let mirror = Isometry::reflection(fold);
            let mut stay = Vec::with_capacity(pieces.len());
            let mut flap = Vec::new();
            for p in &pieces {
                let from_local = p.to_local.inverse();
                let right = clip_half_plane(&p.local, fold, false);
                if area(&right) > MIN_PIECE_AREA {
                    stay.push(Piece {
                        canonical: right.iter().map(|&q| from_local.apply(q)).collect(),
                        local: right,
                        ..p.clone()
                    });
                }
                let left = clip_half_plane(&p.local, fold, true);
                if area(&left) > MIN_PIECE_AREA {
                    flap.push(Piece {
                        canonical: left.iter().map(|&q| from_local.apply(q)).collect(),
                        local: left.iter().map(|&q| mirror.apply(q)).collect(),
                        to_local: mirror.then_after(&p.to_local),
                        flaps: p.flaps | 1 << k,
                        face_down: !p.face_down,
                        ..p.clone()
                    });
                }
            }
            flap.reverse();
            stay.extend(flap);
            pieces = stay;
        }
        let mirrored = placement.is_mirror();
        for p in &mut pieces {
            p.to_table = placement.then_after(&p.to_local);
            p.table = p.local.iter().map(|&q| placement.apply(q)).collect();
            p.face_down ^= mirrored;
        }
        Self { pieces }
    }

    /// Index of the topmost piece containing table point `p`.
    pub fn top_piece_at(&self, p: Point) -> Option<usize> {
        self.pieces.iter().rposition(|piece| contains(&piece.table, p))
    }

    /// Whether any piece above `idx` covers table point `p`.
    pub fn covered_above(&self, idx: usize, p: Point) -> bool {
        self.pieces[idx + 1..].iter().any(|piece| contains(&piece.table, p))
    }

    pub fn mask(&self, width: u32, height: u32) -> CoverageMask {
        CoverageMask::from_polygons(width, height, self.pieces.iter().map(|p| p.table.as_slice()))
    }

    pub fn table_bounds(&self) -> Option<(Point, Point)> {
        bounds(self.pieces.iter().flat_map(|p| p.table.iter()))
    }

    pub fn local_bounds(&self) -> Option<(Point, Point)> {
        bounds(self.pieces.iter().flat_map(|p| p.local.iter()))
    }

    /// Area-weighted centroid of all pieces in the folded frame.
    pub fn local_centroid(&self) -> Point {
        let mut acc = Point::default();
        let mut total = 0.0;
        for p in &self.pieces {
            let a = area(&p.local);
            acc = acc + crate::geometry::centroid(&p.local) * a;
            total += a;
        }
        if total > 0.0 {
            acc * (1.0 / total)
        } else {
            Point::default()
        }
    }

    /// Sum of piece areas; folding never changes it.
    pub fn material_area(&self) -> f64 {
        self.pieces.iter().map(|p| signed_area(&p.local).abs()).sum()
    }
}

/// Position in the folded frame of canonical point `p`.
pub fn fold_point(p: Point, folds: &[Line]) -> Point {
    folds.iter().fold(p, |q, f| if f.side(q) > 0.0 { f.reflect(q) } else { q })
}

/// Fold indices whose flap carries canonical point `p`.
pub fn flap_membership(p: Point, folds: &[Line]) -> u64 {
    let mut q = p;
    let mut bits = 0u64;
    for (k, f) in folds.iter().enumerate() {
        if f.side(q) > 0.0 {
            bits |= 1 << k;
            q = f.reflect(q);
        }
    }
    bits
}
