//! Pseudo-box extraction from class score maps.
//!
//! For each class present in the annotations:
//!
//! 1. normalize the class channel by its max, restoring channels whose
//!    absolute scores were suppressed;
//! 2. partition the grid over the class's annotations plus those of
//!    compatible classes (nested-layout pairs such as harbor/ship are
//!    excluded so they cannot steal territory);
//! 3. gate cells by normalized score, then grow each instance inside
//!    (its partition cell ∩ gate);
//! 4. convert each grown mask to a rotated box: PCA-anchored for compact
//!    "item" classes, minimum-area for "field" classes.
//!
//! The output carries exactly one box per annotation, ordered by annotation
//! index, so downstream evaluation is a strict 1:1 match with no assignment
//! step. Instances whose grown mask is degenerate fall back to a small square
//! centered on the annotation and are flagged.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_area_rect, pca_minmax_rect, Point2, RotatedBox};
use crate::maps::{Grid, GtPoint, InstanceMask, SemanticMap};
use crate::partition::{region_grow_partitioned, spatial_partition, GrowConfig};

/// Mask-to-box conversion strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxStrategy {
    /// Principal-direction box anchored on the annotation point.
    PcaMinmax,
    /// Rotating-calipers minimum-area rectangle; ignores the annotation.
    MinareaRect,
}

/// Parameters for [`sspbe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    /// Cells with normalized score >= this participate in growth.
    pub score_threshold: f64,
    pub grow: GrowConfig,
    /// Unordered class pairs whose instances may nest; they never share a
    /// partition.
    pub incompatible_pairs: Vec<(u32, u32)>,
    /// Conversion strategy per class id; must cover every class that occurs.
    /// (Serialized with string keys so the table is writable in TOML.)
    #[serde(with = "strategy_table_serde")]
    pub strategy_table: BTreeMap<u32, BoxStrategy>,
    /// Half side of the fallback square (in pixels) used when a grown mask is
    /// degenerate; mirrors the assignment lower-bound radius.
    pub tau_plus: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            score_threshold: 0.3,
            grow: GrowConfig {
                tolerance: 0.35,
                ..GrowConfig::default()
            },
            incompatible_pairs: Vec::new(),
            strategy_table: BTreeMap::new(),
            tau_plus: 3.0,
        }
    }
}

mod strategy_table_serde {
    use super::BoxStrategy;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        table: &BTreeMap<u32, BoxStrategy>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        table
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<String, BoxStrategy>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<u32, BoxStrategy>, D::Error> {
        let raw = BTreeMap::<String, BoxStrategy>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("class id key `{k}` is not a u32")))
            })
            .collect()
    }
}

impl ExtractConfig {
    pub fn compatible(&self, a: u32, b: u32) -> bool {
        !self
            .incompatible_pairs
            .iter()
            .any(|&(p, q)| (p == a && q == b) || (p == b && q == a))
    }
}

/// Nested-layout class pairs of the standard 15-class aerial taxonomy:
/// harbor/ship and ground-track-field/soccer-ball-field.
pub fn aerial_nested_pairs() -> Vec<(u32, u32)> {
    vec![(13, 7), (4, 11)]
}

/// One box per annotation, aligned by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    pub boxes: Vec<RotatedBox>,
    pub classes: Vec<u32>,
    /// Ground-truth row each box answers; identity order for [`sspbe`] output.
    pub instance_index: Vec<usize>,
    /// True where the grown mask was degenerate and the fallback square was
    /// used.
    pub degenerate: Vec<bool>,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }
}

/// Max-normalize one class channel into `[0, 1]`.
///
/// All-zero channels stay all-zero; the epsilon only guards the division.
pub fn normalize_class_map(map: &SemanticMap, class_id: u32) -> Result<Grid<f32>> {
    let channel = class_channel(map, class_id)?;
    let data = map.channel(channel);
    let max = data.iter().copied().fold(0.0f32, f32::max);
    let denom = max.max(1e-6);
    let normalized = data.iter().map(|v| (v / denom).clamp(0.0, 1.0)).collect();
    Ok(Grid::from_vec(map.width(), map.height(), normalized))
}

fn class_channel(map: &SemanticMap, class_id: u32) -> Result<usize> {
    if class_id == 0 || class_id as usize > map.channels() {
        return Err(Error::ClassIdOutOfRange(class_id));
    }
    Ok(class_id as usize - 1)
}

/// Annotation points that may seed the partition for `class_id`: all points
/// of that class plus points of every compatible class.
pub fn partition_seeds_for_class(
    gts: &[GtPoint],
    class_id: u32,
    cfg: &ExtractConfig,
) -> Vec<Point2> {
    compatible_seed_indices(gts, class_id, cfg)
        .into_iter()
        .map(|i| gts[i].point())
        .collect()
}

/// Indices into `gts` of the partition seeds for `class_id`, in annotation
/// order.
fn compatible_seed_indices(gts: &[GtPoint], class_id: u32, cfg: &ExtractConfig) -> Vec<usize> {
    gts.iter()
        .enumerate()
        .filter(|(_, g)| cfg.compatible(class_id, g.class_id))
        .map(|(i, _)| i)
        .collect()
}

/// Convert a grown mask to a rotated box using the class's strategy.
///
/// Degenerate masks (< 2 distinct cells) are an error; [`sspbe`] applies the
/// fallback square instead of calling this.
pub fn mask_to_rbox_hybrid(
    mask: &InstanceMask,
    gt: Point2,
    class_id: u32,
    cfg: &ExtractConfig,
) -> Result<RotatedBox> {
    if mask.is_degenerate() {
        return Err(Error::DegenerateMask);
    }
    let strategy = cfg
        .strategy_table
        .get(&class_id)
        .ok_or_else(|| Error::InvalidConfig(format!("no box strategy for class {class_id}")))?;
    let points = mask.center_points();
    match strategy {
        BoxStrategy::PcaMinmax => pca_minmax_rect(&points, Some(gt)),
        BoxStrategy::MinareaRect => min_area_rect(&points),
    }
}

/// Extract one pseudo box per annotation from a class score map.
pub fn sspbe(map: &SemanticMap, gts: &[GtPoint], cfg: &ExtractConfig) -> Result<PseudoLabelSet> {
    sspbe_detailed(map, gts, cfg).map(|(labels, _)| labels)
}

/// Like [`sspbe`] but also returns the grown mask behind each box, aligned by
/// annotation index (fallback instances keep their degenerate mask).
pub fn sspbe_detailed(
    map: &SemanticMap,
    gts: &[GtPoint],
    cfg: &ExtractConfig,
) -> Result<(PseudoLabelSet, Vec<InstanceMask>)> {
    let (width, height) = (map.width(), map.height());
    if !cfg.score_threshold.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "score threshold must be finite, got {}",
            cfg.score_threshold
        )));
    }
    let present: BTreeSet<u32> = gts.iter().map(|g| g.class_id).collect();
    for g in gts {
        class_channel(map, g.class_id)?;
        if !(0.0..=width as f64).contains(&g.x) || !(0.0..=height as f64).contains(&g.y) {
            return Err(Error::GtOutOfBounds { x: g.x, y: g.y });
        }
    }
    for &c in &present {
        if !cfg.strategy_table.contains_key(&c) {
            return Err(Error::InvalidConfig(format!(
                "strategy table missing class {c}"
            )));
        }
    }

    let mut out: Vec<Option<(RotatedBox, bool, InstanceMask)>> = vec![None; gts.len()];
    for &class_id in &present {
        let normalized = normalize_class_map(map, class_id)?;
        let seed_indices = compatible_seed_indices(gts, class_id, cfg);
        let seeds: Vec<Point2> = seed_indices.iter().map(|&i| gts[i].point()).collect();
        let partition = spatial_partition(width, height, &seeds)?;

        let gate_cells: Vec<bool> = normalized
            .data()
            .iter()
            .map(|&v| v as f64 >= cfg.score_threshold)
            .collect();
        let gate = Grid::from_vec(width, height, gate_cells);

        let grow_positions: Vec<usize> = seed_indices
            .iter()
            .enumerate()
            .filter(|&(_, &gt_index)| gts[gt_index].class_id == class_id)
            .map(|(pos, _)| pos)
            .collect();
        let masks = region_grow_partitioned(
            &normalized,
            &seeds,
            &grow_positions,
            &partition,
            Some(&gate),
            &cfg.grow,
        )?;

        for mask in masks {
            let gt_index = seed_indices[mask.instance_index];
            let gt = gts[gt_index].point();
            let entry = if mask.is_degenerate() {
                (fallback_box(gt, cfg.tau_plus), true)
            } else {
                (mask_to_rbox_hybrid(&mask, gt, class_id, cfg)?, false)
            };
            let mut mask = mask;
            mask.instance_index = gt_index;
            out[gt_index] = Some((entry.0, entry.1, mask));
        }
    }

    let mut boxes = Vec::with_capacity(gts.len());
    let mut classes = Vec::with_capacity(gts.len());
    let mut instance_index = Vec::with_capacity(gts.len());
    let mut degenerate = Vec::with_capacity(gts.len());
    let mut out_masks = Vec::with_capacity(gts.len());
    for (i, slot) in out.into_iter().enumerate() {
        let (b, deg, mask) = slot.expect("every annotation receives a box");
        boxes.push(b);
        classes.push(gts[i].class_id);
        instance_index.push(i);
        degenerate.push(deg);
        out_masks.push(mask);
    }
    Ok((
        PseudoLabelSet {
            boxes,
            classes,
            instance_index,
            degenerate,
        },
        out_masks,
    ))
}

fn fallback_box(gt: Point2, tau_plus: f64) -> RotatedBox {
    RotatedBox::new(gt.x, gt.y, 2.0 * tau_plus, 2.0 * tau_plus, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotated_iou;

    fn strategy_all(classes: &[u32], s: BoxStrategy) -> BTreeMap<u32, BoxStrategy> {
        classes.iter().map(|&c| (c, s)).collect()
    }

    /// Score map with a single filled axis-aligned rectangle in one channel.
    #[allow(clippy::too_many_arguments)]
    fn rect_map(
        width: usize,
        height: usize,
        channels: usize,
        channel: usize,
        x0: usize,
        x1: usize,
        y0: usize,
        y1: usize,
        value: f32,
    ) -> SemanticMap {
        let mut m = SemanticMap::new(width, height, channels);
        for y in y0..y1 {
            for x in x0..x1 {
                m.set_score(channel, x, y, value);
            }
        }
        m
    }

    #[test]
    fn normalization_rescales_by_max() {
        let m = rect_map(8, 8, 1, 0, 2, 6, 2, 6, 0.5);
        let n = normalize_class_map(&m, 1).unwrap();
        assert_eq!(*n.get(3, 3), 1.0);
        assert_eq!(*n.get(0, 0), 0.0);
    }

    #[test]
    fn normalization_of_zero_channel_is_zero() {
        let m = SemanticMap::new(4, 4, 2);
        let n = normalize_class_map(&m, 2).unwrap();
        assert!(n.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalization_of_constant_channel_is_one() {
        let m = rect_map(4, 4, 1, 0, 0, 4, 0, 4, 0.3);
        let n = normalize_class_map(&m, 1).unwrap();
        assert!(n.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn missing_channel_is_format_error() {
        let m = SemanticMap::new(4, 4, 1);
        assert!(matches!(
            normalize_class_map(&m, 2),
            Err(Error::ClassIdOutOfRange(2))
        ));
    }

    #[test]
    fn incompatible_pairs_filter_seeds() {
        let harbor = 13;
        let ship = 7;
        let plane = 1;
        let gts = vec![
            GtPoint::new(1.0, 1.0, harbor),
            GtPoint::new(2.0, 2.0, ship),
            GtPoint::new(3.0, 3.0, plane),
            GtPoint::new(4.0, 4.0, ship),
        ];
        let cfg = ExtractConfig {
            incompatible_pairs: aerial_nested_pairs(),
            ..ExtractConfig::default()
        };
        let seeds = partition_seeds_for_class(&gts, harbor, &cfg);
        assert_eq!(seeds.len(), 2); // harbor itself + plane, ships excluded
        assert!(seeds.iter().any(|p| p.x == 1.0));
        assert!(seeds.iter().any(|p| p.x == 3.0));

        let all = partition_seeds_for_class(&gts, plane, &ExtractConfig::default());
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn single_rect_recovered_within_one_pixel() {
        // Binary rectangle [10, 30) x [8, 20); exact box (20, 14, 20, 12).
        let m = rect_map(48, 32, 1, 0, 10, 30, 8, 20, 1.0);
        let gts = vec![GtPoint::new(20.0, 14.0, 1)];
        let cfg = ExtractConfig {
            score_threshold: 0.5,
            strategy_table: strategy_all(&[1], BoxStrategy::MinareaRect),
            ..ExtractConfig::default()
        };
        let labels = sspbe(&m, &gts, &cfg).unwrap();
        assert_eq!(labels.len(), 1);
        assert!(!labels.degenerate[0]);
        let b = labels.boxes[0];
        assert!((b.cx - 20.0).abs() <= 0.5);
        assert!((b.cy - 14.0).abs() <= 0.5);
        assert!((b.w - 20.0).abs() <= 1.0);
        assert!((b.h - 12.0).abs() <= 1.0);
    }

    #[test]
    fn blocked_gate_falls_back_to_squares() {
        let m = rect_map(16, 16, 1, 0, 4, 12, 4, 12, 1.0);
        let gts = vec![GtPoint::new(8.0, 8.0, 1)];
        let cfg = ExtractConfig {
            score_threshold: 1.1, // excludes everything
            strategy_table: strategy_all(&[1], BoxStrategy::PcaMinmax),
            ..ExtractConfig::default()
        };
        let labels = sspbe(&m, &gts, &cfg).unwrap();
        assert!(labels.degenerate[0]);
        let b = labels.boxes[0];
        assert_eq!((b.cx, b.cy), (8.0, 8.0));
        assert_eq!((b.w, b.h), (6.0, 6.0));
    }

    #[test]
    fn hybrid_worked_example_matches_geometry() {
        let mask = InstanceMask {
            instance_index: 0,
            // 4-point mask shifted by half a pixel so cell centers land on
            // (-1,0),(3,0),(0,1),(0,-1) relative to the anchor (4.5, 4.5)
            cells: vec![(3, 4), (7, 4), (4, 5), (4, 3)],
            truncated: false,
        };
        let cfg = ExtractConfig {
            strategy_table: strategy_all(&[1], BoxStrategy::PcaMinmax),
            ..ExtractConfig::default()
        };
        let b = mask_to_rbox_hybrid(&mask, Point2::new(4.5, 4.5), 1, &cfg).unwrap();
        assert_eq!((b.cx, b.cy, b.w, b.h, b.theta), (4.5, 4.5, 6.0, 2.0, 0.0));
    }

    #[test]
    fn minarea_never_exceeds_pca_area() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.gen_range(3..60);
            let cells: BTreeSet<(u32, u32)> = (0..n)
                .map(|_| (rng.gen_range(0..30u32), rng.gen_range(0..30u32)))
                .collect();
            let mask = InstanceMask {
                instance_index: 0,
                cells: cells.into_iter().collect(),
                truncated: false,
            };
            if mask.is_degenerate() {
                continue;
            }
            let pts = mask.center_points();
            let anchor = Point2::new(rng.gen_range(0.0..30.0), rng.gen_range(0.0..30.0));
            let pca = pca_minmax_rect(&pts, Some(anchor)).unwrap();
            let mar = min_area_rect(&pts).unwrap();
            assert!(
                mar.area() <= pca.area() * (1.0 + 1e-9),
                "minarea {} > pca {}",
                mar.area(),
                pca.area()
            );
        }
    }

    #[test]
    fn degenerate_mask_is_error() {
        let mask = InstanceMask {
            instance_index: 0,
            cells: vec![(3, 3)],
            truncated: false,
        };
        let cfg = ExtractConfig {
            strategy_table: strategy_all(&[1], BoxStrategy::PcaMinmax),
            ..ExtractConfig::default()
        };
        assert!(matches!(
            mask_to_rbox_hybrid(&mask, Point2::new(3.5, 3.5), 1, &cfg),
            Err(Error::DegenerateMask)
        ));
    }

    #[test]
    fn class_decoupling_ignores_other_channels() {
        let mut m = rect_map(32, 32, 2, 0, 8, 24, 8, 24, 1.0);
        let gts = vec![GtPoint::new(16.0, 16.0, 1)];
        let cfg = ExtractConfig {
            strategy_table: strategy_all(&[1], BoxStrategy::MinareaRect),
            ..ExtractConfig::default()
        };
        let before = sspbe(&m, &gts, &cfg).unwrap();
        // scribble noise into the other (compatible) channel
        for y in 0..32 {
            for x in 0..32 {
                m.set_score(1, x, y, ((x * 7 + y * 3) % 10) as f32 / 10.0);
            }
        }
        let after = sspbe(&m, &gts, &cfg).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn anchored_boxes_center_on_their_annotation() {
        let m = rect_map(48, 32, 1, 0, 10, 30, 8, 20, 1.0);
        let gts = vec![GtPoint::new(17.0, 12.0, 1)]; // off-center annotation
        let cfg = ExtractConfig {
            strategy_table: strategy_all(&[1], BoxStrategy::PcaMinmax),
            ..ExtractConfig::default()
        };
        let labels = sspbe(&m, &gts, &cfg).unwrap();
        assert_eq!((labels.boxes[0].cx, labels.boxes[0].cy), (17.0, 12.0));
    }

    #[test]
    fn adjacent_same_class_rects_stay_separate() {
        // Two same-class rectangles separated by a 2-cell gap; the partition
        // keeps each instance inside its own territory.
        let mut m = SemanticMap::new(64, 32, 1);
        for y in 8..24 {
            for x in 4..30 {
                m.set_score(0, x, y, 1.0);
            }
            for x in 32..58 {
                m.set_score(0, x, y, 1.0);
            }
        }
        let gts = vec![GtPoint::new(17.0, 16.0, 1), GtPoint::new(45.0, 16.0, 1)];
        let cfg = ExtractConfig {
            strategy_table: strategy_all(&[1], BoxStrategy::MinareaRect),
            ..ExtractConfig::default()
        };
        let labels = sspbe(&m, &gts, &cfg).unwrap();
        let truth = [
            RotatedBox::new(17.0, 16.0, 26.0, 16.0, 0.0),
            RotatedBox::new(45.0, 16.0, 26.0, 16.0, 0.0),
        ];
        for (b, t) in labels.boxes.iter().zip(&truth) {
            assert!(rotated_iou(b, t) >= 0.9, "recovered {b:?} vs truth {t:?}");
        }
    }
}
