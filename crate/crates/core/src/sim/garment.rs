use serde::{Deserialize, Serialize};

use super::SimError;
use crate::codec::SeamCategory;
use crate::fusion::CrossingType;
use crate::geometry::{contains, segment_inside_intervals, Point};
use crate::metrics::CoverageMask;

pub const GARMENT_FILE_VERSION: u32 = 1;

const DEFAULT_GARMENT: &str = include_str!("../../data/garment.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamPolyline {
    pub j: SeamCategory,
    #[serde(with = "point_list")]
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCrossing {
    pub c: CrossingType,
    pub x: f64,
    pub y: f64,
}

impl CanonicalCrossing {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarmentFile {
    pub version: u32,
    pub width: u32,
    pub height: u32,
    #[serde(with = "point_list")]
    pub outline: Vec<Point>,
    pub seams: Vec<SeamPolyline>,
    pub crossings: Vec<CanonicalCrossing>,
}

/// The flat garment in the goal pose, with its goal mask precomputed.
#[derive(Debug, Clone)]
pub struct CanonicalGarment {
    pub width: u32,
    pub height: u32,
    pub outline: Vec<Point>,
    pub seams: Vec<SeamPolyline>,
    pub crossings: Vec<CanonicalCrossing>,
    goal: CoverageMask,
}

impl CanonicalGarment {
    /// The T-shirt shipped with the crate.
    pub fn tshirt() -> Self {
        Self::from_json(DEFAULT_GARMENT).expect("bundled garment file is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let file: GarmentFile = serde_json::from_str(text).map_err(|e| SimError::Garment(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(f: GarmentFile) -> Result<Self, SimError> {
        let bad = |m: String| Err(SimError::Garment(m));
        if f.version != GARMENT_FILE_VERSION {
            return bad(format!("unsupported garment file version {}", f.version));
        }
        if f.width == 0 || f.height == 0 {
            return bad("frame must be non-empty".into());
        }
        if f.outline.len() < 3 {
            return bad("outline needs at least 3 vertices".into());
        }
        let in_frame = |p: &Point| p.x >= 0.0 && p.y >= 0.0 && p.x <= f64::from(f.width) - 1.0 && p.y <= f64::from(f.height) - 1.0;
        if !f.outline.iter().all(in_frame) {
            return bad("outline leaves the frame".into());
        }
        for (si, s) in f.seams.iter().enumerate() {
            if s.points.len() < 2 {
                return bad(format!("seam {si} needs at least 2 points"));
            }
            for w in s.points.windows(2) {
                let iv = segment_inside_intervals(&f.outline, w[0], w[1]);
                if iv.len() != 1 || iv[0].0 > 1e-9 || iv[0].1 < 1.0 - 1e-9 {
                    return bad(format!("seam {si} leaves the outline"));
                }
            }
        }
        for ty in CrossingType::ALL {
            let pts: Vec<Point> = f.crossings.iter().filter(|c| c.c == ty).map(|c| c.point()).collect();
            if pts.len() != 2 {
                return bad(format!("need exactly 2 crossings of type {}", ty as u8));
            }
            let axis = f64::from(f.width);
            if (pts[0].x + pts[1].x - axis).abs() > 1e-9 || pts[0].y != pts[1].y {
                return bad(format!("crossings of type {} are not mirror images", ty as u8));
            }
        }
        for c in &f.crossings {
            let p = c.point();
            if !contains(&f.outline, p) {
                return bad(format!("crossing at ({}, {}) lies outside the outline", c.x, c.y));
            }
            let on = f
                .seams
                .iter()
                .filter(|s| s.points.windows(2).any(|w| distance_to_segment(p, w[0], w[1]) < 1e-6))
                .count();
            if on < 2 {
                return bad(format!("crossing at ({}, {}) is not a seam intersection", c.x, c.y));
            }
        }
        let goal = CoverageMask::from_polygons(f.width, f.height, [f.outline.as_slice()]);
        if goal.count() == 0 {
            return bad("outline covers no pixels".into());
        }
        Ok(Self {
            width: f.width,
            height: f.height,
            outline: f.outline,
            seams: f.seams,
            crossings: f.crossings,
            goal,
        })
    }

    pub fn to_file(&self) -> GarmentFile {
        GarmentFile {
            version: GARMENT_FILE_VERSION,
            width: self.width,
            height: self.height,
            outline: self.outline.clone(),
            seams: self.seams.clone(),
            crossings: self.crossings.clone(),
        }
    }

    /// Mask of the flat garment in the goal pose.
    pub fn goal_mask(&self) -> &CoverageMask {
        &self.goal
    }

    /// Pixel count of the flat garment; the denominator of ncov.
    pub fn cov_max(&self) -> u64 {
        self.goal.count()
    }

    /// Every straight seam piece as `(category, start, end)`.
    pub fn seam_segments(&self) -> impl Iterator<Item = (SeamCategory, Point, Point)> + '_ {
        self.seams
            .iter()
            .flat_map(|s| s.points.windows(2).map(move |w| (s.j, w[0], w[1])))
    }
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(d) / len2).clamp(0.0, 1.0) };
    p.distance(a.lerp(b, t))
}

/// Points stored as `[x, y]` pairs.
mod point_list {
    use crate::geometry::Point;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Point], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[Num; 2]> = v.iter().map(|p| [Num(p.x), Num(p.y)]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|[x, y]| Point::new(x, y)).collect())
    }

    struct Num(f64);

    impl Serialize for Num {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            crate::codec::px::serialize(&self.0, s)
        }
    }
}
