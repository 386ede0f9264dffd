//! Nearest-seed grid partitioning and constrained seeded region growing.
//!
//! This is the shared kernel of both pipeline stages: sample assignment runs
//! it on the raw image, box extraction on normalized class score maps.
//!
//! - [`spatial_partition`] assigns every cell to its nearest seed (Euclidean
//!   distance between cell center and seed point, lowest seed index on ties).
//!   The implementation is the straightforward per-cell scan; the contract is
//!   cell-exact equality with that scan, so anything cleverer would have to
//!   reproduce its tie-breaks bit for bit.
//! - [`partition_boundaries`] marks cells with at least one 4-neighbor owned
//!   by a different seed.
//! - [`region_grow`] floods outward from each seed over an allowed mask,
//!   admitting neighbors whose value stays within a tolerance of the
//!   reference. The default seed-value reference makes the result independent
//!   of visit order; the running-mean mode is order-dependent and defined by
//!   the FIFO expansion implemented here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::maps::{point_cell, Grid, InstanceMask, PartitionMap};

/// Neighborhood used during growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    Eight,
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

/// What a candidate cell's value is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowReference {
    /// Compare to the seed cell's value. Order-independent.
    SeedValue,
    /// Compare to the mean of the region grown so far. Order-dependent.
    RunningMean,
}

/// Region-growing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowConfig {
    /// Maximum |value - reference| for a cell to be admitted.
    pub tolerance: f64,
    pub connectivity: Connectivity,
    pub reference: GrowReference,
    /// Growth stops (and the mask is flagged truncated) at this many cells.
    pub max_area: Option<usize>,
}

impl Default for GrowConfig {
    fn default() -> Self {
        Self {
            tolerance: 0.15,
            connectivity: Connectivity::Four,
            reference: GrowReference::SeedValue,
            max_area: None,
        }
    }
}

impl GrowConfig {
    fn validate(&self) -> Result<()> {
        if !self.tolerance.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "growth tolerance must be finite, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Assign every cell to the seed nearest its center; ties go to the lowest
/// seed index.
pub fn spatial_partition(width: usize, height: usize, seeds: &[Point2]) -> Result<PartitionMap> {
    if seeds.is_empty() {
        return Err(Error::NoSeeds);
    }
    for s in seeds {
        if !(0.0..=width as f64).contains(&s.x) || !(0.0..=height as f64).contains(&s.y) {
            return Err(Error::SeedOutOfBounds {
                x: s.x,
                y: s.y,
                width,
                height,
            });
        }
    }
    let mut owner = vec![0u32; width * height];
    for y in 0..height {
        let cy = y as f64 + 0.5;
        for x in 0..width {
            let cx = x as f64 + 0.5;
            let mut best = 0u32;
            let mut best_d2 = f64::INFINITY;
            for (i, s) in seeds.iter().enumerate() {
                let dx = cx - s.x;
                let dy = cy - s.y;
                let d2 = dx * dx + dy * dy;
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = i as u32;
                }
            }
            owner[y * width + x] = best;
        }
    }
    Ok(Grid::from_vec(width, height, owner))
}

/// Cells with at least one 4-neighbor owned by a different seed.
pub fn partition_boundaries(partition: &PartitionMap) -> Grid<bool> {
    let (w, h) = (partition.width(), partition.height());
    let mut out = Grid::new(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let me = *partition.get(x, y);
            let differs = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|&(dx, dy)| {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    partition.in_bounds(nx, ny) && *partition.get(nx as usize, ny as usize) != me
                });
            if differs {
                out.set(x, y, true);
            }
        }
    }
    out
}

const NEIGHBORS_4: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const NEIGHBORS_8: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Grow one mask per seed over the `allowed` cells.
///
/// Each mask is the connected flood from its seed over cells that are allowed
/// and whose value satisfies the admission criterion. A seed whose own cell is
/// not allowed yields the singleton seed cell, never an empty mask. Masks of
/// different seeds are not disjoint unless the caller makes them so (see
/// [`region_grow_partitioned`]).
pub fn region_grow(
    values: &Grid<f32>,
    seeds: &[Point2],
    allowed: &Grid<bool>,
    cfg: &GrowConfig,
) -> Result<Vec<InstanceMask>> {
    check_dims(values, allowed)?;
    cfg.validate()?;
    seeds
        .iter()
        .enumerate()
        .map(|(i, &seed)| {
            let cell = seed_cell(values, seed)?;
            Ok(grow_one(values, cell, i, cfg, |x, y| *allowed.get(x, y)))
        })
        .collect()
}

/// Grow selected seeds, each constrained to its own partition cell (and an
/// optional shared gate). Because partition cells are disjoint, the resulting
/// masks are disjoint.
///
/// `grow_indices` selects which seeds to grow; every returned mask keeps the
/// seed's index within `seeds` as its `instance_index`.
pub fn region_grow_partitioned(
    values: &Grid<f32>,
    seeds: &[Point2],
    grow_indices: &[usize],
    partition: &PartitionMap,
    gate: Option<&Grid<bool>>,
    cfg: &GrowConfig,
) -> Result<Vec<InstanceMask>> {
    check_dims(values, partition)?;
    if let Some(g) = gate {
        check_dims(values, g)?;
    }
    cfg.validate()?;
    grow_indices
        .iter()
        .map(|&i| {
            let cell = seed_cell(values, seeds[i])?;
            let owner = i as u32;
            Ok(grow_one(values, cell, i, cfg, |x, y| {
                *partition.get(x, y) == owner && gate.is_none_or(|g| *g.get(x, y))
            }))
        })
        .collect()
}

fn check_dims<A, B>(a: &Grid<A>, b: &Grid<B>) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", a.width(), a.height()),
            got: format!("{}x{}", b.width(), b.height()),
        });
    }
    Ok(())
}

fn seed_cell(values: &Grid<f32>, seed: Point2) -> Result<(usize, usize)> {
    let (w, h) = (values.width(), values.height());
    if !(0.0..=w as f64).contains(&seed.x) || !(0.0..=h as f64).contains(&seed.y) {
        return Err(Error::SeedOutOfBounds {
            x: seed.x,
            y: seed.y,
            width: w,
            height: h,
        });
    }
    Ok(point_cell(seed, w, h))
}

fn grow_one(
    values: &Grid<f32>,
    seed: (usize, usize),
    instance_index: usize,
    cfg: &GrowConfig,
    allowed: impl Fn(usize, usize) -> bool,
) -> InstanceMask {
    let (w, h) = (values.width(), values.height());
    let (sx, sy) = seed;
    if !allowed(sx, sy) {
        return InstanceMask {
            instance_index,
            cells: vec![(sx as u32, sy as u32)],
            truncated: false,
        };
    }

    let neighbors: &[(i64, i64)] = match cfg.connectivity {
        Connectivity::Four => &NEIGHBORS_4,
        Connectivity::Eight => &NEIGHBORS_8,
    };
    let cap = cfg.max_area.unwrap_or(usize::MAX).max(1);
    let seed_value = *values.get(sx, sy) as f64;
    let mut sum = seed_value;
    let mut visited = Grid::new(w, h, false);
    visited.set(sx, sy, true);
    let mut cells: Vec<(u32, u32)> = vec![(sx as u32, sy as u32)];
    let mut truncated = false;
    let mut head = 0usize;

    while head < cells.len() {
        let (cx, cy) = cells[head];
        head += 1;
        for &(dx, dy) in neighbors {
            let nx = cx as i64 + dx;
            let ny = cy as i64 + dy;
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if *visited.get(nx, ny) || !allowed(nx, ny) {
                continue;
            }
            let reference = match cfg.reference {
                GrowReference::SeedValue => seed_value,
                GrowReference::RunningMean => sum / cells.len() as f64,
            };
            let v = *values.get(nx, ny) as f64;
            if (v - reference).abs() > cfg.tolerance {
                continue;
            }
            if cells.len() >= cap {
                truncated = true;
                continue;
            }
            visited.set(nx, ny, true);
            sum += v;
            cells.push((nx as u32, ny as u32));
        }
        if truncated {
            break;
        }
    }

    InstanceMask {
        instance_index,
        cells,
        truncated,
    }
}
