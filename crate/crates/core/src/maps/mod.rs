//! Grid data model shared by all pipeline stages.
//!
//! One coordinate frame everywhere: the cell in column `x`, row `y` has its
//! center at `(x + 0.5, y + 0.5)` in pixel units, matching the annotation
//! coordinates. Grids are row-major.

mod io;

pub use io::{
    load_assignment, load_boxes, load_gray_f32, load_gray_pgm, load_partition, load_points,
    load_semantic, save_assignment, save_boxes, save_gray_f32, save_gray_pgm, save_partition,
    save_points, save_semantic, write_atomic, BoxRecord, CONTAINER_MAGIC,
};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Row-major rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "grid payload size mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Iterate cell coordinates row by row.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        (0..self.height).flat_map(move |y| (0..w).map(move |x| (x, y)))
    }
}

/// Center of the cell in column `x`, row `y`.
#[inline]
pub fn cell_center(x: usize, y: usize) -> Point2 {
    Point2::new(x as f64 + 0.5, y as f64 + 0.5)
}

/// Cell containing a point, clamped to the grid.
#[inline]
pub fn point_cell(p: Point2, width: usize, height: usize) -> (usize, usize) {
    let x = (p.x.floor().max(0.0) as usize).min(width.saturating_sub(1));
    let y = (p.y.floor().max(0.0) as usize).min(height.saturating_sub(1));
    (x, y)
}

/// Per-cell training label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    Background,
    Ignore,
    /// Positive sample of class `c`, `c >= 1`.
    Class(u32),
}

impl CellLabel {
    pub fn is_class(&self) -> bool {
        matches!(self, CellLabel::Class(_))
    }

    pub(crate) fn to_u32(self) -> u32 {
        match self {
            CellLabel::Background => io::BACKGROUND_SENTINEL,
            CellLabel::Ignore => io::IGNORE_SENTINEL,
            CellLabel::Class(c) => c,
        }
    }

    pub(crate) fn from_u32(v: u32) -> Result<Self> {
        match v {
            io::BACKGROUND_SENTINEL => Ok(CellLabel::Background),
            io::IGNORE_SENTINEL => Ok(CellLabel::Ignore),
            0 => Err(Error::ClassIdOutOfRange(0)),
            c => Ok(CellLabel::Class(c)),
        }
    }
}

/// Dense per-cell label map (the pseudo mask a dense classifier trains on).
pub type AssignmentMap = Grid<CellLabel>;

/// Per-cell nearest-seed owner index.
pub type PartitionMap = Grid<u32>;

/// Single-channel luminance image with intensities in `[0, 1]`.
pub type GrayImage = Grid<f32>;

/// Per-class dense score map, channel-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMap {
    width: usize,
    height: usize,
    channels: usize,
    scores: Vec<f32>,
}

impl SemanticMap {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            scores: vec![0.0; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, scores: Vec<f32>) -> Self {
        assert_eq!(scores.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            scores,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// One channel plane, row-major.
    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.width * self.height;
        &self.scores[c * plane..(c + 1) * plane]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let plane = self.width * self.height;
        &mut self.scores[c * plane..(c + 1) * plane]
    }

    #[inline]
    pub fn score(&self, c: usize, x: usize, y: usize) -> f32 {
        self.scores[c * self.width * self.height + y * self.width + x]
    }

    #[inline]
    pub fn set_score(&mut self, c: usize, x: usize, y: usize, v: f32) {
        self.scores[c * self.width * self.height + y * self.width + x] = v;
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }
}

/// Pixel set owned by one annotated instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    /// Index of the owning instance in the ground-truth list.
    pub instance_index: usize,
    /// Cell coordinates (x, y) of the mask.
    pub cells: Vec<(u32, u32)>,
    /// Growth hit the configured area cap before exhausting candidates.
    pub truncated: bool,
}

impl InstanceMask {
    pub fn area(&self) -> usize {
        self.cells.len()
    }

    /// Pixel-center coordinates of the mask cells.
    pub fn center_points(&self) -> Vec<Point2> {
        self.cells
            .iter()
            .map(|&(x, y)| cell_center(x as usize, y as usize))
            .collect()
    }

    /// At least two distinct cells, the minimum for orientation estimation.
    pub fn is_degenerate(&self) -> bool {
        self.cells.len() < 2
    }
}

/// Point annotation: location plus class.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GtPoint {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "class")]
    pub class_id: u32,
}

impl GtPoint {
    pub fn new(x: f64, y: f64, class_id: u32) -> Self {
        Self { x, y, class_id }
    }

    pub fn point(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}
