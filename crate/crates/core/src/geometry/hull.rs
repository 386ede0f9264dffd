//! Convex hull via Andrew's monotone chain.

use super::{Point2, Polygon};
use crate::error::{Error, Result};

/// Convex hull of a point set, counter-clockwise.
///
/// Collinear points interior to a hull edge are dropped. Degenerate inputs
/// (all points identical, or all collinear) return a polygon of 1 or 2
/// distinct vertices; check [`Polygon::is_degenerate`] downstream.
pub fn convex_hull(points: &[Point2]) -> Result<Polygon> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap()
            .then(a.y.partial_cmp(&b.y).unwrap())
    });
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);

    if pts.len() == 1 {
        return Ok(Polygon::new(pts));
    }
    if pts.len() == 2 {
        return Ok(Polygon::new(pts));
    }

    let mut lower: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    // All points collinear: both chains collapse to the two extremes.
    if lower.len() < 3 {
        lower.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    }
    Ok(Polygon::new(lower))
}

#[inline]
fn turn(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_point_dropped() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.5, 0.5),
        ];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.vertices.len(), 4);
        assert!(!hull.vertices.iter().any(|p| p.x == 0.5 && p.y == 0.5));
        assert!(hull.signed_area() > 0.0, "hull must be counter-clockwise");
    }

    #[test]
    fn singleton_is_degenerate() {
        let hull = convex_hull(&[Point2::new(0.0, 0.0)]).unwrap();
        assert!(hull.is_degenerate());
        assert_eq!(hull.vertices.len(), 1);
    }

    #[test]
    fn collinear_collapses_to_segment() {
        let pts: Vec<Point2> = (0..7)
            .map(|i| Point2::new(i as f64, 2.0 * i as f64))
            .collect();
        let hull = convex_hull(&pts).unwrap();
        assert!(hull.is_degenerate());
        assert_eq!(hull.vertices.len(), 2);
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(
            convex_hull(&[]),
            Err(crate::error::Error::EmptyPointSet)
        ));
    }

    #[test]
    fn matches_brute_force_on_random_disk_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut pts = Vec::new();
        while pts.len() < 200 {
            let x = rng.gen_range(-1.0..1.0);
            let y = rng.gen_range(-1.0..1.0);
            if x * x + y * y <= 1.0 {
                pts.push(Point2::new(x, y));
            }
        }
        let hull = convex_hull(&pts).unwrap();
        let brute = brute_force_hull_vertices(&pts);
        assert_eq!(hull.vertices.len(), brute.len());
        for v in &hull.vertices {
            assert!(brute.iter().any(|b| b.x == v.x && b.y == v.y));
        }
    }

    /// O(n^3) oracle: p is a hull vertex iff some directed line through p and
    /// another point has every remaining point strictly to its left.
    fn brute_force_hull_vertices(pts: &[Point2]) -> Vec<Point2> {
        let mut out = Vec::new();
        for (i, &p) in pts.iter().enumerate() {
            let mut on_hull = false;
            for (j, &q) in pts.iter().enumerate() {
                if i == j {
                    continue;
                }
                let all_left = pts
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .all(|(_, &r)| (q - p).cross(r - p) > 0.0);
                if all_left {
                    on_hull = true;
                    break;
                }
            }
            if on_hull {
                out.push(p);
            }
        }
        out
    }
}
