//! Deterministic synthetic scenes: rendered rectangles, point annotations,
//! and oracle score maps.
//!
//! The generator stands in for both the raw imagery and a trained score
//! model. A scene is a set of non-overlapping rotated rectangles (plus
//! optional declared nested pairs) rendered as constant-intensity regions
//! over a noisy background; its oracle score map is the per-class binary
//! union of instance masks, optionally blurred and noised. The two sigmas
//! are the difficulty dials that replace "model quality".
//!
//! Reproducibility: all randomness comes from a ChaCha8 stream seeded with a
//! single `u64`, and every transcendental (trig for rasterization, log/exp
//! for noise and blur) goes through `libm`'s software implementations, so a
//! config generates byte-identical scenes on any platform.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::BoxStrategy;
use crate::geometry::{convex_intersection_area, Point2, RotatedBox};
use crate::maps::{point_cell, AssignmentMap, CellLabel, GrayImage, Grid, GtPoint, SemanticMap};

/// Common-sense shape group of a class: compact symmetric "items" get
/// PCA-anchored boxes, extended "fields" get minimum-area rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyTag {
    Item,
    Field,
}

impl StrategyTag {
    pub fn box_strategy(self) -> BoxStrategy {
        match self {
            StrategyTag::Item => BoxStrategy::PcaMinmax,
            StrategyTag::Field => BoxStrategy::MinareaRect,
        }
    }
}

/// Rendered footprint of an instance inside its bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    /// The full bounding rectangle.
    #[default]
    Rectangle,
    /// Two crossed bars sharing the box center (a plane-like symmetric
    /// silhouette). Its bounding box is still the instance's ground-truth
    /// box, but the minimum-area rectangle of the silhouette is tilted,
    /// which is what makes the anchored PCA conversion earn its keep.
    Cross,
}

/// Per-class generation parameters. Class ids are implicit: the entry at
/// index `i` of [`SceneConfig::classes`] describes class `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub count: usize,
    /// Rendered interior intensity in `[0, 1]`.
    pub intensity: f64,
    pub tag: StrategyTag,
    #[serde(default)]
    pub shape: ShapeKind,
    /// Override of the scene-wide width range, in pixels.
    pub w_range: Option<(f64, f64)>,
    /// Override of the scene-wide height range, in pixels.
    pub h_range: Option<(f64, f64)>,
}

/// Scene generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<ClassSpec>,
    pub w_range: (f64, f64),
    pub h_range: (f64, f64),
    /// Allowed width/height ratio of sampled rectangles.
    pub aspect_range: (f64, f64),
    /// Minimum center-to-center distance between top-level instances.
    pub min_separation: f64,
    pub background_intensity: f64,
    pub image_noise_sigma: f64,
    pub semantic_blur_sigma: f64,
    pub semantic_noise_sigma: f64,
    /// Annotation points are displaced from box centers by uniform offsets up
    /// to this fraction of the half extents.
    pub point_offset_fraction: f64,
    /// Declared (outer, inner) class pairs; inner instances are placed inside
    /// an outer instance instead of on free ground.
    pub nested_pairs: Vec<(u32, u32)>,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            classes: vec![
                ClassSpec {
                    count: 3,
                    intensity: 0.55,
                    tag: StrategyTag::Item,
                    shape: ShapeKind::Rectangle,
                    w_range: Some((28.0, 44.0)),
                    h_range: Some((10.0, 16.0)),
                },
                ClassSpec {
                    count: 3,
                    intensity: 0.85,
                    tag: StrategyTag::Field,
                    shape: ShapeKind::Rectangle,
                    w_range: Some((26.0, 40.0)),
                    h_range: Some((18.0, 30.0)),
                },
            ],
            w_range: (16.0, 48.0),
            h_range: (12.0, 36.0),
            aspect_range: (1.0, 6.0),
            min_separation: 64.0,
            background_intensity: 0.12,
            image_noise_sigma: 0.02,
            semantic_blur_sigma: 1.0,
            semantic_noise_sigma: 0.02,
            point_offset_fraction: 0.0,
            nested_pairs: Vec::new(),
            rng_seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.width == 0 || self.height == 0 {
            return bad("scene dimensions must be positive".into());
        }
        if self.classes.is_empty() {
            return bad("at least one class spec required".into());
        }
        if !(self.min_separation.is_finite() && self.min_separation > 0.0) {
            return bad(format!(
                "min separation must be > 0, got {}",
                self.min_separation
            ));
        }
        if !(0.0..1.0).contains(&self.point_offset_fraction) {
            return bad(format!(
                "point offset fraction must be in [0, 1), got {}",
                self.point_offset_fraction
            ));
        }
        for (i, spec) in self.classes.iter().enumerate() {
            if !(0.0..=1.0).contains(&spec.intensity) {
                return bad(format!("class {} intensity outside [0, 1]", i + 1));
            }
            if (spec.intensity - self.background_intensity).abs() < 2.0 * self.image_noise_sigma {
                return bad(format!(
                    "class {} intensity {} within 2 noise sigmas of background {}",
                    i + 1,
                    spec.intensity,
                    self.background_intensity
                ));
            }
        }
        for &(lo, hi) in [&self.w_range, &self.h_range, &self.aspect_range] {
            if !(lo > 0.0 && lo <= hi) {
                return bad(format!("invalid range ({lo}, {hi})"));
            }
        }
        for &(outer, inner) in &self.nested_pairs {
            if outer as usize > self.classes.len() || inner as usize > self.classes.len() {
                return bad(format!(
                    "nested pair ({outer}, {inner}) names unknown class"
                ));
            }
            if outer >= inner {
                return bad(format!(
                    "nested pair ({outer}, {inner}): outer class id must be smaller so it is placed first"
                ));
            }
        }
        Ok(())
    }
}

/// A generated scene plus everything needed to score a pipeline run on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: GrayImage,
    pub gt_boxes: Vec<RotatedBox>,
    pub gt_points: Vec<GtPoint>,
    pub semantic: SemanticMap,
    pub strategy_tags: BTreeMap<u32, StrategyTag>,
    /// Rendered footprint per class (the ground-truth boxes always bound it).
    pub class_shapes: BTreeMap<u32, ShapeKind>,
}

impl Scene {
    pub fn classes(&self) -> Vec<u32> {
        self.gt_points.iter().map(|g| g.class_id).collect()
    }

    pub fn strategy_table(&self) -> BTreeMap<u32, BoxStrategy> {
        self.strategy_tags
            .iter()
            .map(|(&c, t)| (c, t.box_strategy()))
            .collect()
    }
}

struct Placed {
    rbox: RotatedBox,
    class_id: u32,
    intensity: f64,
    shape: ShapeKind,
}

/// Generate a scene. Deterministic given the config (including the seed).
pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let placed = place_instances(cfg, &mut rng)?;
    let gt_points = sample_points(cfg, &placed, &mut rng);
    let image = render_image(cfg, &placed, &mut rng);
    let semantic = render_semantic(cfg, &placed, &mut rng);
    let strategy_tags = cfg
        .classes
        .iter()
        .enumerate()
        .map(|(i, s)| (i as u32 + 1, s.tag))
        .collect();
    let class_shapes = cfg
        .classes
        .iter()
        .enumerate()
        .map(|(i, s)| (i as u32 + 1, s.shape))
        .collect();
    Ok(Scene {
        image,
        gt_boxes: placed.iter().map(|p| p.rbox).collect(),
        gt_points,
        semantic,
        strategy_tags,
        class_shapes,
    })
}

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

fn place_instances(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Placed>> {
    let nested_by_inner: BTreeMap<u32, u32> = cfg
        .nested_pairs
        .iter()
        .map(|&(outer, inner)| (inner, outer))
        .collect();
    let mut placed: Vec<Placed> = Vec::new();

    for (i, spec) in cfg.classes.iter().enumerate() {
        let class_id = i as u32 + 1;
        let w_range = spec.w_range.unwrap_or(cfg.w_range);
        let h_range = spec.h_range.unwrap_or(cfg.h_range);
        for k in 0..spec.count {
            if let Some(&outer) = nested_by_inner.get(&class_id) {
                let parents: Vec<usize> = placed
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.class_id == outer)
                    .map(|(idx, _)| idx)
                    .collect();
                if parents.is_empty() {
                    return Err(Error::InvalidConfig(format!(
                        "nested class {class_id} has no placed instance of outer class {outer}"
                    )));
                }
                let parent = &placed[parents[k % parents.len()]];
                placed.push(place_nested(parent, class_id, spec, rng));
                continue;
            }

            let mut attempts = 0;
            let rbox = loop {
                attempts += 1;
                if attempts > MAX_PLACEMENT_ATTEMPTS {
                    return Err(Error::InfeasiblePacking {
                        class_id,
                        attempts: MAX_PLACEMENT_ATTEMPTS,
                    });
                }
                let w = sample_range(rng, w_range);
                let h = sample_range(rng, h_range);
                let aspect = w / h;
                if aspect < cfg.aspect_range.0 || aspect > cfg.aspect_range.1 {
                    continue;
                }
                let theta = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
                // keep the 1 px inflation margin inside the image as well
                let half_diag = 0.5 * libm::hypot(w, h) + 1.0;
                if 2.0 * half_diag >= cfg.width as f64 || 2.0 * half_diag >= cfg.height as f64 {
                    continue;
                }
                let cx = rng.gen_range(half_diag..(cfg.width as f64 - half_diag));
                let cy = rng.gen_range(half_diag..(cfg.height as f64 - half_diag));
                let cand = RotatedBox::new(cx, cy, w, h, theta);
                let ok = placed.iter().all(|p| {
                    p.rbox.center().distance(cand.center()) >= cfg.min_separation
                        && boxes_disjoint_with_gap(&p.rbox, &cand)
                });
                if ok {
                    break cand;
                }
            };
            placed.push(Placed {
                rbox,
                class_id,
                intensity: spec.intensity,
                shape: spec.shape,
            });
        }
    }
    Ok(placed)
}

fn place_nested(parent: &Placed, class_id: u32, spec: &ClassSpec, rng: &mut ChaCha8Rng) -> Placed {
    let pb = &parent.rbox;
    let (u, v) = det_axes(pb.theta);
    let w = pb.w * rng.gen_range(0.25..0.4);
    let h = pb.h * rng.gen_range(0.25..0.4);
    let du = pb.w * rng.gen_range(-0.2..0.2);
    let dv = pb.h * rng.gen_range(-0.2..0.2);
    let center = pb.center() + u * du + v * dv;
    // offset + half extent stays within 0.4 of the parent half extents, so
    // the child is always fully inside the parent
    Placed {
        rbox: RotatedBox::new(center.x, center.y, w, h, pb.theta),
        class_id,
        intensity: spec.intensity,
        shape: spec.shape,
    }
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Platform-stable box axes via libm trig.
fn det_axes(theta: f64) -> (Point2, Point2) {
    let s = libm::sin(theta);
    let c = libm::cos(theta);
    (Point2::new(c, s), Point2::new(-s, c))
}

fn det_corners(b: &RotatedBox) -> [Point2; 4] {
    let (u, v) = det_axes(b.theta);
    let c = b.center();
    let hu = u * (b.w * 0.5);
    let hv = v * (b.h * 0.5);
    [c - hu - hv, c + hu - hv, c + hu + hv, c - hu + hv]
}

/// Cross bar thicknesses as fractions of the bounding box sides.
const CROSS_ALONG_THICKNESS: f64 = 0.4;
const CROSS_ACROSS_THICKNESS: f64 = 0.4;

fn shape_contains(b: &RotatedBox, axes: (Point2, Point2), shape: ShapeKind, p: Point2) -> bool {
    let d = p - b.center();
    let du = d.dot(axes.0).abs();
    let dv = d.dot(axes.1).abs();
    match shape {
        ShapeKind::Rectangle => du <= b.w * 0.5 && dv <= b.h * 0.5,
        ShapeKind::Cross => {
            (du <= b.w * 0.5 && dv <= b.h * 0.5 * CROSS_ALONG_THICKNESS)
                || (du <= b.w * 0.5 * CROSS_ACROSS_THICKNESS && dv <= b.h * 0.5)
        }
    }
}

/// Require a clear gap: the boxes inflated by 1 px per side must not touch.
fn boxes_disjoint_with_gap(a: &RotatedBox, b: &RotatedBox) -> bool {
    let inflate = |r: &RotatedBox| RotatedBox {
        w: r.w + 2.0,
        h: r.h + 2.0,
        ..*r
    };
    let pa = det_corners(&inflate(a));
    let pb = det_corners(&inflate(b));
    convex_intersection_area(&pa, &pb) <= 0.0
}

fn sample_points(cfg: &SceneConfig, placed: &[Placed], rng: &mut ChaCha8Rng) -> Vec<GtPoint> {
    let f = cfg.point_offset_fraction;
    placed
        .iter()
        .map(|p| {
            let b = &p.rbox;
            let c = b.center();
            let point = if f == 0.0 {
                c
            } else {
                let axes = det_axes(b.theta);
                let max_u = f * b.w * 0.5;
                let max_v = f * b.h * 0.5;
                let mut chosen = c;
                for _ in 0..100 {
                    let du = rng.gen_range(-max_u..max_u);
                    let dv = rng.gen_range(-max_v..max_v);
                    let cand = c + axes.0 * du + axes.1 * dv;
                    // keep the annotation's cell center inside the rendered mask
                    let (cx, cy) = point_cell(cand, cfg.width, cfg.height);
                    let cc = Point2::new(cx as f64 + 0.5, cy as f64 + 0.5);
                    if shape_contains(b, axes, p.shape, cc) {
                        chosen = cand;
                        break;
                    }
                }
                chosen
            };
            GtPoint::new(point.x, point.y, p.class_id)
        })
        .collect()
}

/// Paint order: larger instances first so nested (smaller) instances win.
fn paint_order(placed: &[Placed]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..placed.len()).collect();
    order.sort_by(|&a, &b| {
        placed[b]
            .rbox
            .area()
            .partial_cmp(&placed[a].rbox.area())
            .unwrap()
            .then(a.cmp(&b))
    });
    order
}

fn paint_shape(grid: &mut Grid<f32>, b: &RotatedBox, shape: ShapeKind, value: f32) {
    let axes = det_axes(b.theta);
    let corners = det_corners(b);
    let x0 = corners.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let x1 = corners
        .iter()
        .map(|p| p.x)
        .fold(f64::NEG_INFINITY, f64::max);
    let y0 = corners.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let y1 = corners
        .iter()
        .map(|p| p.y)
        .fold(f64::NEG_INFINITY, f64::max);
    let xa = x0.floor().max(0.0) as usize;
    let xb = (x1.ceil() as usize).min(grid.width());
    let ya = y0.floor().max(0.0) as usize;
    let yb = (y1.ceil() as usize).min(grid.height());
    for y in ya..yb {
        for x in xa..xb {
            let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            if shape_contains(b, axes, shape, c) {
                grid.set(x, y, value);
            }
        }
    }
}

fn render_image(cfg: &SceneConfig, placed: &[Placed], rng: &mut ChaCha8Rng) -> GrayImage {
    let mut img = GrayImage::new(cfg.width, cfg.height, cfg.background_intensity as f32);
    for &i in &paint_order(placed) {
        paint_shape(
            &mut img,
            &placed[i].rbox,
            placed[i].shape,
            placed[i].intensity as f32,
        );
    }
    if cfg.image_noise_sigma > 0.0 {
        add_noise(img.data_mut(), cfg.image_noise_sigma, rng);
    }
    img
}

fn render_semantic(cfg: &SceneConfig, placed: &[Placed], rng: &mut ChaCha8Rng) -> SemanticMap {
    let (w, h) = (cfg.width, cfg.height);
    let mut map = SemanticMap::new(w, h, cfg.classes.len());
    for c in 0..cfg.classes.len() {
        let class_id = c as u32 + 1;
        let mut plane = Grid::new(w, h, 0.0f32);
        for p in placed.iter().filter(|p| p.class_id == class_id) {
            paint_shape(&mut plane, &p.rbox, p.shape, 1.0);
        }
        if cfg.semantic_blur_sigma > 0.0 {
            gaussian_blur(&mut plane, cfg.semantic_blur_sigma);
        }
        map.channel_mut(c).copy_from_slice(plane.data());
    }
    for c in 0..cfg.classes.len() {
        if cfg.semantic_noise_sigma > 0.0 {
            add_noise(map.channel_mut(c), cfg.semantic_noise_sigma, rng);
        }
    }
    map
}

/// Box-Muller standard normal sampler built on libm so draws are
/// platform-stable.
struct NormalSampler {
    spare: Option<f64>,
}

impl NormalSampler {
    fn new() -> Self {
        Self { spare: None }
    }

    fn sample(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
        let u2: f64 = rng.gen();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let phi = 2.0 * PI * u2;
        self.spare = Some(r * libm::sin(phi));
        r * libm::cos(phi)
    }
}

fn add_noise(data: &mut [f32], sigma: f64, rng: &mut ChaCha8Rng) {
    let mut normal = NormalSampler::new();
    for v in data.iter_mut() {
        let noised = *v as f64 + sigma * normal.sample(rng);
        *v = noised.clamp(0.0, 1.0) as f32;
    }
}

/// Separable Gaussian blur with zero padding outside the grid.
fn gaussian_blur(plane: &mut Grid<f32>, sigma: f64) {
    let radius = libm::ceil(3.0 * sigma) as i64;
    if radius == 0 {
        return;
    }
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    let mut sum = 0.0;
    for i in -radius..=radius {
        let w = libm::exp(-(i as f64 * i as f64) / (2.0 * sigma * sigma));
        kernel.push(w);
        sum += w;
    }
    for w in kernel.iter_mut() {
        *w /= sum;
    }

    let (w, h) = (plane.width(), plane.height());
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f64;
            for (ki, kw) in kernel.iter().enumerate() {
                let sx = x as i64 + ki as i64 - radius;
                if sx >= 0 && (sx as usize) < w {
                    acc += kw * *plane.get(sx as usize, y) as f64;
                }
            }
            tmp[y * w + x] = acc as f32;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f64;
            for (ki, kw) in kernel.iter().enumerate() {
                let sy = y as i64 + ki as i64 - radius;
                if sy >= 0 && (sy as usize) < h {
                    acc += kw * tmp[sy as usize * w + x] as f64;
                }
            }
            plane.set(x, y, acc as f32);
        }
    }
}

/// Ground-truth assignment map: each cell takes the class of the instance box
/// containing its center; overlapping (nested) instances resolve to the
/// smaller instance; everything else is background.
pub fn scene_oracle_assignment(scene: &Scene) -> AssignmentMap {
    let (w, h) = (scene.image.width(), scene.image.height());
    let mut map = AssignmentMap::new(w, h, CellLabel::Background);
    let mut order: Vec<usize> = (0..scene.gt_boxes.len()).collect();
    order.sort_by(|&a, &b| {
        scene.gt_boxes[b]
            .area()
            .partial_cmp(&scene.gt_boxes[a].area())
            .unwrap()
            .then(a.cmp(&b))
    });
    for i in order {
        let b = &scene.gt_boxes[i];
        let class_id = scene.gt_points[i].class_id;
        let shape = scene
            .class_shapes
            .get(&class_id)
            .copied()
            .unwrap_or_default();
        let axes = det_axes(b.theta);
        let corners = det_corners(b);
        let x0 = corners.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let x1 = corners
            .iter()
            .map(|p| p.x)
            .fold(f64::NEG_INFINITY, f64::max);
        let y0 = corners.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let y1 = corners
            .iter()
            .map(|p| p.y)
            .fold(f64::NEG_INFINITY, f64::max);
        for y in y0.floor().max(0.0) as usize..(y1.ceil() as usize).min(h) {
            for x in x0.floor().max(0.0) as usize..(x1.ceil() as usize).min(w) {
                let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                if shape_contains(b, axes, shape, c) {
                    map.set(x, y, CellLabel::Class(class_id));
                }
            }
        }
    }
    map
}
