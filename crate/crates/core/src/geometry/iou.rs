//! Rotated-box IoU via Sutherland-Hodgman convex clipping.

use super::{shoelace, Point2, RotatedBox};

/// Intersection-over-union of two rotated boxes.
///
/// Both corner quadrilaterals are clipped against each other; areas come from
/// the shoelace formula on the same corner polygons so that identical boxes
/// report exactly 1.0. Zero-area union returns 0 by convention.
pub fn rotated_iou(a: &RotatedBox, b: &RotatedBox) -> f64 {
    let pa = a.corners();
    let pb = b.corners();
    let area_a = shoelace(&pa);
    let area_b = shoelace(&pb);
    let inter = convex_intersection_area(&pa, &pb);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Area of the intersection of two convex CCW polygons.
pub fn convex_intersection_area(subject: &[Point2], clip: &[Point2]) -> f64 {
    if subject.len() < 3 || clip.len() < 3 {
        return 0.0;
    }
    let mut poly: Vec<Point2> = subject.to_vec();
    for i in 0..clip.len() {
        if poly.is_empty() {
            return 0.0;
        }
        let e1 = clip[i];
        let e2 = clip[(i + 1) % clip.len()];
        poly = clip_by_edge(&poly, e1, e2);
    }
    shoelace(&poly).max(0.0)
}

/// Keep the part of `poly` on the left of the directed edge `e1 -> e2`.
fn clip_by_edge(poly: &[Point2], e1: Point2, e2: Point2) -> Vec<Point2> {
    let edge = e2 - e1;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let side_cur = edge.cross(cur - e1);
        let side_next = edge.cross(next - e1);
        if side_cur >= 0.0 {
            out.push(cur);
            if side_next < 0.0 {
                out.push(intersect(cur, next, side_cur, side_next));
            }
        } else if side_next >= 0.0 {
            out.push(intersect(cur, next, side_cur, side_next));
        }
    }
    out
}

#[inline]
fn intersect(cur: Point2, next: Point2, side_cur: f64, side_next: f64) -> Point2 {
    let t = side_cur / (side_cur - side_next);
    cur + (next - cur) * t
}
