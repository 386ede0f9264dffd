//! Dense sample assignment from point annotations.
//!
//! Two steps over the full pixel grid:
//!
//! 1. Dynamic-radius assignment: per cell, the label depends on the distance
//!    to the nearest annotation. Below a fixed lower radius the cell is a
//!    positive of that annotation's class; beyond the per-instance upper
//!    radius (distance to the annotation's nearest neighbor) it is
//!    background; in between it is ignored.
//! 2. Partition-and-grow refinement: ignored cells, and only ignored cells,
//!    are upgraded. A cell inside the grown region of its owning instance
//!    becomes a positive when the instance survives area validation; an
//!    ignored cell on a partition boundary becomes background. Growth is
//!    confined to each instance's partition cell, so upgraded positives can
//!    never cross into a neighbor's territory.
//!
//! The refinement never demotes a step-1 positive or background, which gives
//! the monotone-refinement property the tests rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::maps::{AssignmentMap, CellLabel, GrayImage, Grid, GtPoint, InstanceMask};
use crate::partition::{
    partition_boundaries, region_grow_partitioned, spatial_partition, GrowConfig,
};

/// Parameters for [`pspsa`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignConfig {
    /// Fixed lower-bound radius in pixels: cells strictly closer than this to
    /// their nearest annotation are positives.
    pub tau_plus: f64,
    pub grow: GrowConfig,
    /// Grown regions smaller than this fraction of the same-class median area
    /// are marked invalid.
    pub area_outlier_low: f64,
    /// Grown regions larger than this multiple of the same-class median area
    /// are marked invalid.
    pub area_outlier_high: f64,
    /// Demote ignored cells on partition boundaries to background.
    pub use_boundary_negatives: bool,
    /// Upgrade ignored cells inside validated grown regions to positives.
    pub use_growing_positives: bool,
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self {
            tau_plus: 3.0,
            grow: GrowConfig::default(),
            area_outlier_low: 0.25,
            area_outlier_high: 4.0,
            use_boundary_negatives: true,
            use_growing_positives: true,
        }
    }
}

impl AssignConfig {
    fn validate(&self) -> Result<()> {
        if !(self.area_outlier_low < 1.0 && 1.0 < self.area_outlier_high) {
            return Err(Error::InvalidConfig(format!(
                "area outlier bounds must straddle 1: low {} high {}",
                self.area_outlier_low, self.area_outlier_high
            )));
        }
        if !(self.tau_plus >= 0.0 && self.tau_plus.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tau_plus must be finite and non-negative, got {}",
                self.tau_plus
            )));
        }
        Ok(())
    }
}

/// Per-instance upper-bound radius: distance to the nearest other annotation.
///
/// With a single annotation the radius is infinite and the whole map is
/// positive-or-ignore; that is the documented single-instance behavior, not
/// an error.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusTable {
    radii: Vec<f64>,
}

impl RadiusTable {
    pub fn from_points(gts: &[GtPoint]) -> Result<Self> {
        if gts.is_empty() {
            return Err(Error::NoGroundTruth);
        }
        let radii = gts
            .iter()
            .enumerate()
            .map(|(j, a)| {
                gts.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, b)| a.point().distance(b.point()))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Ok(Self { radii })
    }

    pub fn radius(&self, j: usize) -> f64 {
        self.radii[j]
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// Nearest annotation index and distance for a cell center; lowest index on
/// ties, matching the partition tie-break so both steps agree on ownership.
fn nearest_gt(c: Point2, gts: &[GtPoint]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d2 = f64::INFINITY;
    for (j, g) in gts.iter().enumerate() {
        let dx = c.x - g.x;
        let dy = c.y - g.y;
        let d2 = dx * dx + dy * dy;
        if d2 < best_d2 {
            best_d2 = d2;
            best = j;
        }
    }
    (best, best_d2)
}

/// Step 1: label every cell from the distance to its nearest annotation.
///
/// Strict inequalities on both bounds: cells exactly at either radius are
/// ignored. `tau_plus = 0` therefore produces no positives.
pub fn dynamic_radius_assign(
    width: usize,
    height: usize,
    gts: &[GtPoint],
    tau_plus: f64,
) -> Result<AssignmentMap> {
    let radii = RadiusTable::from_points(gts)?;
    check_gts_in_bounds(width, height, gts)?;
    let tau_plus_sq = tau_plus * tau_plus;
    let mut map = AssignmentMap::new(width, height, CellLabel::Ignore);
    for y in 0..height {
        for x in 0..width {
            let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            let (j, d2) = nearest_gt(c, gts);
            let tau_minus = radii.radius(j);
            let label = if d2 < tau_plus_sq {
                CellLabel::Class(gts[j].class_id)
            } else if d2 > tau_minus * tau_minus {
                CellLabel::Background
            } else {
                CellLabel::Ignore
            };
            map.set(x, y, label);
        }
    }
    Ok(map)
}

fn check_gts_in_bounds(width: usize, height: usize, gts: &[GtPoint]) -> Result<()> {
    for g in gts {
        if !(0.0..=width as f64).contains(&g.x) || !(0.0..=height as f64).contains(&g.y) {
            return Err(Error::GtOutOfBounds { x: g.x, y: g.y });
        }
    }
    Ok(())
}

/// Mark grown regions whose area is an outlier among same-class regions.
///
/// A region is valid iff its area lies in `[low * median, high * median]` of
/// the areas of same-class regions in the image. Classes with fewer than 3
/// instances are always valid: the median is too unreliable to reject on.
pub fn validate_regions(masks: &[InstanceMask], classes: &[u32], cfg: &AssignConfig) -> Vec<bool> {
    assert_eq!(masks.len(), classes.len(), "masks/classes length mismatch");
    let mut by_class: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, &c) in classes.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut valid = vec![true; masks.len()];
    for indices in by_class.values() {
        if indices.len() < 3 {
            continue;
        }
        let mut areas: Vec<f64> = indices.iter().map(|&i| masks[i].area() as f64).collect();
        areas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = areas.len() / 2;
        let median = if areas.len() % 2 == 1 {
            areas[mid]
        } else {
            0.5 * (areas[mid - 1] + areas[mid])
        };
        for &i in indices {
            let a = masks[i].area() as f64;
            valid[i] = a >= cfg.area_outlier_low * median && a <= cfg.area_outlier_high * median;
        }
    }
    valid
}

/// Full sample assignment: dynamic radii, then partition-and-grow refinement.
pub fn pspsa(image: &GrayImage, gts: &[GtPoint], cfg: &AssignConfig) -> Result<AssignmentMap> {
    cfg.validate()?;
    let (width, height) = (image.width(), image.height());
    let mut map = dynamic_radius_assign(width, height, gts, cfg.tau_plus)?;
    if !cfg.use_growing_positives && !cfg.use_boundary_negatives {
        return Ok(map);
    }

    let seeds: Vec<Point2> = gts.iter().map(|g| g.point()).collect();
    let partition = spatial_partition(width, height, &seeds)?;
    let boundary = partition_boundaries(&partition);

    // Owner of each grown cell, u32::MAX where no mask claims the cell.
    let mut grown_owner = Grid::new(width, height, u32::MAX);
    let mut valid = Vec::new();
    if cfg.use_growing_positives {
        // Boundary cells isolate instances during growth when they also act
        // as negatives; otherwise growth may claim them.
        let gate = cfg.use_boundary_negatives.then(|| {
            let mut g = Grid::new(width, height, true);
            for (x, y) in boundary.cells() {
                if *boundary.get(x, y) {
                    g.set(x, y, false);
                }
            }
            g
        });
        let indices: Vec<usize> = (0..seeds.len()).collect();
        let masks = region_grow_partitioned(
            image,
            &seeds,
            &indices,
            &partition,
            gate.as_ref(),
            &cfg.grow,
        )?;
        let classes: Vec<u32> = gts.iter().map(|g| g.class_id).collect();
        valid = validate_regions(&masks, &classes, cfg);
        for mask in &masks {
            for &(x, y) in &mask.cells {
                grown_owner.set(x as usize, y as usize, mask.instance_index as u32);
            }
        }
    }

    for y in 0..height {
        for x in 0..width {
            if *map.get(x, y) != CellLabel::Ignore {
                continue;
            }
            let owner = *grown_owner.get(x, y);
            if cfg.use_growing_positives && owner != u32::MAX && valid[owner as usize] {
                map.set(x, y, CellLabel::Class(gts[owner as usize].class_id));
            } else if cfg.use_boundary_negatives && *boundary.get(x, y) {
                map.set(x, y, CellLabel::Background);
            }
        }
    }
    Ok(map)
}
