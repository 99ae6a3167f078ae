//! Oriented bounding-box encoding of straight seam segments.
//!
//! A seam segment `[j, x1, y1, x2, y2]` becomes a box `[s(i, j), x, y, ŵ, ĥ]`
//! whose orientation subclass `i` records which diagonal of the box the
//! segment runs along. Segments thinner than `lambda_thres` along one axis
//! are widened to half their length so the box never degenerates, and
//! segments thin along both axes are dropped.
//!
//! Coordinates are pixel indices stored as `f64`. Box centres are exact
//! midpoints, so they may sit on half pixels; every value produced here is
//! a multiple of 1/4 and therefore exact in binary floating point, which is
//! what makes decode and the augmentation transforms bit-exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("endpoint ({x}, {y}) outside {width}x{height} image")]
    OutOfBounds { x: f64, y: f64, width: u32, height: u32 },
    #[error("segment endpoints coincide at ({x}, {y})")]
    Degenerate { x: f64, y: f64 },
    #[error("invalid codec config: {0}")]
    Config(String),
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

/// Stitch pattern of a seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SeamCategory {
    Solid = 1,
    Dotted = 2,
    Inward = 3,
    Neckline = 4,
}

impl SeamCategory {
    pub const ALL: [SeamCategory; 4] = [
        SeamCategory::Solid,
        SeamCategory::Dotted,
        SeamCategory::Inward,
        SeamCategory::Neckline,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for SeamCategory {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Self::Solid),
            2 => Ok(Self::Dotted),
            3 => Ok(Self::Inward),
            4 => Ok(Self::Neckline),
            _ => Err(format!("seam category must be in 1..=4, got {v}")),
        }
    }
}

impl From<SeamCategory> for u8 {
    fn from(c: SeamCategory) -> u8 {
        c as u8
    }
}

/// Which diagonal (or axis) of its box a segment runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Orientation {
    DownwardDiagonal = 1,
    UpwardDiagonal = 2,
    Horizontal = 3,
    Vertical = 4,
}

impl TryFrom<u8> for Orientation {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Self::DownwardDiagonal),
            2 => Ok(Self::UpwardDiagonal),
            3 => Ok(Self::Horizontal),
            4 => Ok(Self::Vertical),
            _ => Err(format!("orientation subclass must be in 1..=4, got {v}")),
        }
    }
}

impl From<Orientation> for u8 {
    fn from(o: Orientation) -> u8 {
        o as u8
    }
}

/// Serialises whole-pixel values as JSON integers so label files written
/// from integer annotations read back and re-write byte for byte.
pub(crate) mod px {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.fract() == 0.0 && v.abs() < 9.0e15 {
            s.serialize_i64(*v as i64)
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamLineSegment {
    pub j: SeamCategory,
    #[serde(with = "px")]
    pub x1: f64,
    #[serde(with = "px")]
    pub y1: f64,
    #[serde(with = "px")]
    pub x2: f64,
    #[serde(with = "px")]
    pub y2: f64,
}

impl SeamLineSegment {
    pub fn new(j: SeamCategory, x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { j, x1, y1, x2, y2 }
    }

    pub fn start(&self) -> Point {
        Point::new(self.x1, self.y1)
    }

    pub fn end(&self) -> Point {
        Point::new(self.x2, self.y2)
    }

    /// Endpoints ordered left to right, top to bottom on ties.
    pub fn canonical(&self) -> Self {
        if (self.x2, self.y2) < (self.x1, self.y1) {
            Self::new(self.j, self.x2, self.y2, self.x1, self.y1)
        } else {
            *self
        }
    }

    pub fn length(&self) -> f64 {
        self.start().distance(self.end())
    }

    pub fn validate(&self, cfg: &CodecConfig) -> Result<(), CodecError> {
        for (x, y) in [(self.x1, self.y1), (self.x2, self.y2)] {
            if !cfg.in_bounds(x, y) {
                return Err(CodecError::OutOfBounds {
                    x,
                    y,
                    width: cfg.width,
                    height: cfg.height,
                });
            }
        }
        if self.x1 == self.x2 && self.y1 == self.y2 {
            return Err(CodecError::Degenerate {
                x: self.x1,
                y: self.y1,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedSeamBox {
    #[serde(rename = "s_i")]
    pub i: Orientation,
    #[serde(rename = "s_j")]
    pub j: SeamCategory,
    #[serde(with = "px")]
    pub x: f64,
    #[serde(with = "px")]
    pub y: f64,
    #[serde(with = "px")]
    pub w_hat: f64,
    #[serde(with = "px")]
    pub h_hat: f64,
}

impl OrientedSeamBox {
    pub fn center(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn validate(&self, cfg: &CodecConfig) -> Result<(), CodecError> {
        if !(self.w_hat > 0.0 && self.h_hat > 0.0) {
            return Err(CodecError::InvalidBox(format!(
                "extents must be positive, got {}x{}",
                self.w_hat, self.h_hat
            )));
        }
        if self.w_hat.max(self.h_hat) < cfg.lambda() {
            return Err(CodecError::InvalidBox(format!(
                "largest extent {} below threshold {}",
                self.w_hat.max(self.h_hat),
                cfg.lambda_thres
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub lambda_thres: u32,
    pub width: u32,
    pub height: u32,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            lambda_thres: 10,
            width: 1280,
            height: 1024,
        }
    }
}

impl CodecConfig {
    pub fn new(lambda_thres: u32, width: u32, height: u32) -> Result<Self, CodecError> {
        if lambda_thres < 1 || width < 1 || height < 1 {
            return Err(CodecError::Config(format!(
                "need lambda_thres >= 1 and non-empty image, got {lambda_thres}, {width}x{height}"
            )));
        }
        Ok(Self {
            lambda_thres,
            width,
            height,
        })
    }

    fn lambda(&self) -> f64 {
        f64::from(self.lambda_thres)
    }

    pub fn in_bounds(&self, x: f64, y: f64) -> bool {
        x.is_finite()
            && y.is_finite()
            && x >= 0.0
            && y >= 0.0
            && x <= f64::from(self.width) - 1.0
            && y <= f64::from(self.height) - 1.0
    }
}

/// Encodes one segment; `Ok(None)` means the label is dropped.
pub fn encode(seg: &SeamLineSegment, cfg: &CodecConfig) -> Result<Option<OrientedSeamBox>, CodecError> {
    seg.validate(cfg)?;
    let SeamLineSegment { j, x1, y1, x2, y2 } = *seg;
    let w = (x2 - x1).abs();
    let h = (y2 - y1).abs();
    let lambda = cfg.lambda();
    let (mut w_hat, mut h_hat) = (w, h);

    let i = if w < lambda && h < lambda {
        return Ok(None);
    } else if w < lambda {
        // floor(h/2) is 0 only when lambda == 1 and h == 1; keep the box non-empty
        w_hat = (h / 2.0).floor().max(1.0);
        Orientation::Vertical
    } else if h < lambda {
        h_hat = (w / 2.0).floor().max(1.0);
        Orientation::Horizontal
    } else if (x1 < x2 && y1 > y2) || (x1 > x2 && y1 < y2) {
        Orientation::UpwardDiagonal
    } else {
        Orientation::DownwardDiagonal
    };

    Ok(Some(OrientedSeamBox {
        i,
        j,
        x: (x1 + x2) / 2.0,
        y: (y1 + y2) / 2.0,
        w_hat,
        h_hat,
    }))
}

/// Inverse of [`encode`]. Thin boxes decode to their centre line.
pub fn decode(b: &OrientedSeamBox) -> SeamLineSegment {
    let (x, y) = (b.x, b.y);
    let (hw, hh) = (b.w_hat / 2.0, b.h_hat / 2.0);
    let seg = match b.i {
        Orientation::DownwardDiagonal => SeamLineSegment::new(b.j, x - hw, y - hh, x + hw, y + hh),
        Orientation::UpwardDiagonal => SeamLineSegment::new(b.j, x - hw, y + hh, x + hw, y - hh),
        Orientation::Horizontal => SeamLineSegment::new(b.j, x - hw, y, x + hw, y),
        Orientation::Vertical => SeamLineSegment::new(b.j, x, y - hh, x, y + hh),
    };
    seg.canonical()
}

/// Image-level flips and quarter turns used for augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageTransform {
    FlipHorizontal,
    FlipVertical,
    Rotate90Cw,
    Rotate180,
    Rotate90Ccw,
}

impl ImageTransform {
    pub const ALL: [ImageTransform; 5] = [
        ImageTransform::FlipHorizontal,
        ImageTransform::FlipVertical,
        ImageTransform::Rotate90Cw,
        ImageTransform::Rotate180,
        ImageTransform::Rotate90Ccw,
    ];

    /// Maps a pixel of a `W x H` image to its pixel in the transformed image.
    pub fn apply_point(self, x: f64, y: f64, cfg: &CodecConfig) -> (f64, f64) {
        let wm = f64::from(cfg.width) - 1.0;
        let hm = f64::from(cfg.height) - 1.0;
        match self {
            Self::FlipHorizontal => (wm - x, y),
            Self::FlipVertical => (x, hm - y),
            Self::Rotate90Cw => (hm - y, x),
            Self::Rotate180 => (wm - x, hm - y),
            Self::Rotate90Ccw => (y, wm - x),
        }
    }

    /// Image size after the transform.
    pub fn apply_config(self, cfg: &CodecConfig) -> CodecConfig {
        match self {
            Self::Rotate90Cw | Self::Rotate90Ccw => CodecConfig {
                width: cfg.height,
                height: cfg.width,
                ..*cfg
            },
            _ => *cfg,
        }
    }

    pub fn apply_segment(self, seg: &SeamLineSegment, cfg: &CodecConfig) -> SeamLineSegment {
        let (x1, y1) = self.apply_point(seg.x1, seg.y1, cfg);
        let (x2, y2) = self.apply_point(seg.x2, seg.y2, cfg);
        SeamLineSegment::new(seg.j, x1, y1, x2, y2)
    }
}

/// Relabels a box for a transformed image by decoding, transforming the
/// segment and re-encoding it in the transformed image's frame.
pub fn recategorize(
    b: &OrientedSeamBox,
    transform: ImageTransform,
    cfg: &CodecConfig,
) -> Result<OrientedSeamBox, CodecError> {
    b.validate(cfg)?;
    let seg = transform.apply_segment(&decode(b), cfg);
    let out_cfg = transform.apply_config(cfg);
    encode(&seg, &out_cfg)?.ok_or_else(|| {
        CodecError::InvalidBox("box fell below threshold after transform".to_string())
    })
}

/// A point on a seam where a gripper may land.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamGraspPoint {
    pub point: Point,
    pub j: SeamCategory,
}

/// Both endpoints and the midpoint of the decoded segment.
pub fn grasp_candidates_from_box(b: &OrientedSeamBox) -> [SeamGraspPoint; 3] {
    let seg = decode(b);
    let (a, c) = (seg.start(), seg.end());
    [a, a.midpoint(c), c].map(|point| SeamGraspPoint { point, j: b.j })
}

/// One image worth of segment annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub segments: Vec<SeamLineSegment>,
}

/// One image worth of encoded box labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedLabelRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub boxes: Vec<OrientedSeamBox>,
}

/// Encodes every segment of an annotation record, omitting dropped labels.
pub fn encode_record(rec: &AnnotationRecord, lambda_thres: u32) -> Result<EncodedLabelRecord, CodecError> {
    let cfg = CodecConfig::new(lambda_thres, rec.width, rec.height)?;
    let mut boxes = Vec::with_capacity(rec.segments.len());
    for seg in &rec.segments {
        if let Some(b) = encode(seg, &cfg)? {
            boxes.push(b);
        }
    }
    Ok(EncodedLabelRecord {
        image_id: rec.image_id.clone(),
        width: rec.width,
        height: rec.height,
        boxes,
    })
}
