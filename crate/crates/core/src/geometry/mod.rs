//! Rotated-box primitives.
//!
//! Everything here is plain 2D computational geometry on `f64`:
//!
//! - convex hull (Andrew's monotone chain),
//! - minimum-area enclosing rectangle (rotating calipers over hull edges),
//! - PCA-anchored min/max rectangle (principal direction + symmetric extents
//!   about an anchor point),
//! - rotated-box IoU via convex polygon clipping.
//!
//! Angle convention: `theta` is measured from the +x axis, counter-clockwise
//! positive, and normalized to `[-pi/2, pi/2)`. A box and its half-turn are
//! the same box, so angles are only meaningful modulo pi.
//!
//! Degenerate inputs (single points, collinear masks) produce zero-width or
//! zero-height boxes rather than errors; callers decide whether to reject.

mod hull;
mod iou;
mod rect;

pub use hull::convex_hull;
pub use iou::{convex_intersection_area, rotated_iou};
pub use rect::{min_area_rect, pca_minmax_rect};

use std::f64::consts::{FRAC_PI_2, PI};

/// 2D point in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// 2D cross product (z component of the 3D cross).
    #[inline]
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Wrap an angle into `[-pi/2, pi/2)`.
pub fn normalize_half_pi(theta: f64) -> f64 {
    let mut t = theta % PI;
    if t < -FRAC_PI_2 {
        t += PI;
    }
    if t >= FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Oriented rectangle: center, side lengths, rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RotatedBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl RotatedBox {
    /// Build a box, normalizing `theta` into `[-pi/2, pi/2)`.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Self {
        debug_assert!(w >= 0.0 && h >= 0.0, "negative box extent");
        Self {
            cx,
            cy,
            w,
            h,
            theta: normalize_half_pi(theta),
        }
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Unit vectors along the width and height axes.
    pub fn axes(&self) -> (Point2, Point2) {
        let (s, c) = self.theta.sin_cos();
        (Point2::new(c, s), Point2::new(-s, c))
    }

    /// The four corners in counter-clockwise order.
    pub fn corners(&self) -> [Point2; 4] {
        let (u, v) = self.axes();
        let c = self.center();
        let hu = u * (self.w * 0.5);
        let hv = v * (self.h * 0.5);
        [c - hu - hv, c + hu - hv, c + hu + hv, c - hu + hv]
    }

    /// True when `p` lies inside or on the box, within `tol` (pixels).
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center();
        d.dot(u).abs() <= self.w * 0.5 + tol && d.dot(v).abs() <= self.h * 0.5 + tol
    }
}

/// Polygon with counter-clockwise vertex order.
///
/// Proper polygons have at least 3 vertices; convex-hull construction may
/// yield degenerate polygons of 1 or 2 distinct vertices for collinear or
/// singleton inputs, which callers must check via [`Polygon::is_degenerate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Signed area; positive for counter-clockwise vertex order.
    pub fn signed_area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }
}

pub(crate) fn shoelace(vertices: &[Point2]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        acc += a.cross(b);
    }
    acc * 0.5
}

/// Corner polygon of a rotated box (counter-clockwise).
pub fn box_corners(b: &RotatedBox) -> Polygon {
    Polygon::new(b.corners().to_vec())
}
