//! Rectangle constructors: rotating calipers and PCA min/max.

use super::{convex_hull, normalize_half_pi, Point2, RotatedBox};
use crate::error::{Error, Result};

/// Minimum-area bounding rectangle of a point set.
///
/// The optimum rectangle has a side flush with a convex-hull edge, so we
/// enumerate hull edges, take the axis-aligned extent in each edge frame,
/// and keep the smallest area. Collinear inputs yield a zero-height box
/// along the segment; a single point yields a zero-size box.
pub fn min_area_rect(points: &[Point2]) -> Result<RotatedBox> {
    let hull = convex_hull(points)?;
    let v = &hull.vertices;
    match v.len() {
        1 => Ok(RotatedBox::new(v[0].x, v[0].y, 0.0, 0.0, 0.0)),
        2 => {
            let d = v[1] - v[0];
            let mid = (v[0] + v[1]) * 0.5;
            Ok(RotatedBox::new(mid.x, mid.y, d.norm(), 0.0, d.y.atan2(d.x)))
        }
        _ => {
            let mut best: Option<(f64, RotatedBox)> = None;
            for i in 0..v.len() {
                let edge = v[(i + 1) % v.len()] - v[i];
                let len = edge.norm();
                if len == 0.0 {
                    continue;
                }
                let u = edge * (1.0 / len);
                let p = Point2::new(-u.y, u.x);
                let mut s_min = f64::INFINITY;
                let mut s_max = f64::NEG_INFINITY;
                let mut t_min = f64::INFINITY;
                let mut t_max = f64::NEG_INFINITY;
                for &q in v {
                    let s = q.dot(u);
                    let t = q.dot(p);
                    s_min = s_min.min(s);
                    s_max = s_max.max(s);
                    t_min = t_min.min(t);
                    t_max = t_max.max(t);
                }
                let w = s_max - s_min;
                let h = t_max - t_min;
                let area = w * h;
                if best.as_ref().is_none_or(|(a, _)| area < *a) {
                    let center = u * ((s_min + s_max) * 0.5) + p * ((t_min + t_max) * 0.5);
                    let b = RotatedBox::new(center.x, center.y, w, h, u.y.atan2(u.x));
                    best = Some((area, b));
                }
            }
            Ok(best.expect("non-degenerate hull has edges").1)
        }
    }
}

/// Rectangle from the principal direction of a point set with symmetric
/// extents about an anchor.
///
/// The rotation angle comes from the covariance of the points about their
/// mean; the extents are projected about `anchor` (the annotation point) when
/// one is given, else about the mean. Width doubles the larger of the two
/// one-sided extents along the principal axis, so the box always contains
/// every input point and is symmetric about the anchor along both axes.
///
/// Isotropic covariance (no preferred direction, e.g. circular masks) resolves
/// deterministically to the candidate axis with the smallest normalized angle
/// in `[-pi/2, pi/2)`.
pub fn pca_minmax_rect(points: &[Point2], anchor: Option<Point2>) -> Result<RotatedBox> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let first = points[0];
    if !points.iter().any(|p| p.x != first.x || p.y != first.y) {
        return Err(Error::DegenerateMask);
    }

    let n = points.len() as f64;
    let mut mean = Point2::new(0.0, 0.0);
    for p in points {
        mean = mean + *p;
    }
    mean = mean * (1.0 / n);

    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - mean;
        a += d.x * d.x;
        b += d.x * d.y;
        c += d.y * d.y;
    }
    a /= n;
    b /= n;
    c /= n;

    let theta = principal_angle(a, b, c);
    let center = anchor.unwrap_or(mean);

    let (sin, cos) = theta.sin_cos();
    let u = Point2::new(cos, sin);
    let v = Point2::new(-sin, cos);
    let mut s_min = f64::INFINITY;
    let mut s_max = f64::NEG_INFINITY;
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    for p in points {
        let d = *p - center;
        let s = d.dot(u);
        let t = d.dot(v);
        s_min = s_min.min(s);
        s_max = s_max.max(s);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    let w = 2.0 * s_min.abs().max(s_max.abs());
    let h = 2.0 * t_min.abs().max(t_max.abs());
    Ok(RotatedBox::new(center.x, center.y, w, h, theta))
}

/// Angle of the dominant eigenvector of the symmetric matrix [[a, b], [b, c]],
/// normalized to `[-pi/2, pi/2)`.
fn principal_angle(a: f64, b: f64, c: f64) -> f64 {
    let half_gap = (a - c) * 0.5;
    let disc = (half_gap * half_gap + b * b).sqrt();
    let trace = a + c;
    if disc <= 1e-12 * trace.max(f64::MIN_POSITIVE) {
        // Equal eigenvalues: candidates are the coordinate axes with
        // normalized angles {0, -pi/2}; take the smaller.
        return -std::f64::consts::FRAC_PI_2;
    }
    if b == 0.0 {
        return if a >= c {
            0.0
        } else {
            -std::f64::consts::FRAC_PI_2
        };
    }
    let lambda = (a + c) * 0.5 + disc;
    // Two algebraically equivalent eigenvector forms; use the better-conditioned one.
    let v1 = Point2::new(b, lambda - a);
    let v2 = Point2::new(lambda - c, b);
    let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
    normalize_half_pi((v.y / v.x).atan())
}
