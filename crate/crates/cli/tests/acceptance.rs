//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with:
//!
//! ```text
//! cargo test -p spart-cli --test acceptance -- --nocapture
//! ```
//!
//! Oracles (brute-force nearest-seed scan, angle sweep, Monte-Carlo IoU) are
//! implemented in this file, independent of the library code they check.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spart::assignment::{dynamic_radius_assign, pspsa, AssignConfig};
use spart::evaluation::assignment_quality;
use spart::extraction::{sspbe_detailed, BoxStrategy, ExtractConfig};
use spart::geometry::{min_area_rect, pca_minmax_rect, rotated_iou, Point2, RotatedBox};
use spart::maps::CellLabel;
use spart::partition::spatial_partition;
use spart::synth::{generate_scene, scene_oracle_assignment, Scene, SceneConfig, ShapeKind};

/// Published seed of the synthetic acceptance suites; scene `i` of a suite
/// uses `SUITE_SEED + i`.
const SUITE_SEED: u64 = 20250810;

/// Frozen first-run measurement of the moderate-difficulty suite (blur 2 px,
/// score noise 0.05, 50 scenes, seed above). Reruns must stay within 0.02.
const MODERATE_MIOU_BASELINE: f64 = 0.9245;

fn verdict(n: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n:02} {name}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

// ── Criterion 1: partition oracle equivalence ─────────────────────────

#[test]
fn a01_partition_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA01);
    let mut cells_checked = 0usize;
    for _ in 0..500 {
        let w = rng.gen_range(4..=128);
        let h = rng.gen_range(4..=128);
        let k = rng.gen_range(1..=32);
        let seeds: Vec<Point2> = (0..k)
            .map(|_| Point2::new(rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64)))
            .collect();
        let got = spatial_partition(w, h, &seeds).unwrap();
        for y in 0..h {
            for x in 0..w {
                // oracle: independent per-cell scan with lowest-index ties
                let cx = x as f64 + 0.5;
                let cy = y as f64 + 0.5;
                let mut best = 0u32;
                let mut best_d2 = f64::INFINITY;
                for (i, s) in seeds.iter().enumerate() {
                    let d2 = (cx - s.x) * (cx - s.x) + (cy - s.y) * (cy - s.y);
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = i as u32;
                    }
                }
                assert_eq!(
                    *got.get(x, y),
                    best,
                    "grid {w}x{h} k={k} cell ({x},{y}) disagrees with oracle"
                );
                cells_checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "partition oracle equivalence",
        elapsed.as_secs_f64() < 10.0,
        &format!("500 grids, {cells_checked} cells identical, {elapsed:.2?} < 10 s"),
    );
}

// ── Criterion 2: calipers optimality ──────────────────────────────────

#[test]
fn a02_calipers_optimality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA02);
    let step = 0.1f64.to_radians();
    let mut worst_gap = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(3..=200);
        let pts: Vec<Point2> = (0..n)
            .map(|_| Point2::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let b = min_area_rect(&pts).unwrap();
        for p in &pts {
            assert!(b.contains(*p, 1e-9), "point escaped the rectangle");
        }
        // oracle: rotate points by each candidate angle, take the extent
        let mut sweep_min = f64::INFINITY;
        let mut phi = 0.0;
        while phi < std::f64::consts::FRAC_PI_2 {
            let (s, c) = phi.sin_cos();
            let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in &pts {
                let x = c * p.x + s * p.y;
                let y = -s * p.x + c * p.y;
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
            sweep_min = sweep_min.min((x1 - x0) * (y1 - y0));
            phi += step;
        }
        assert!(
            b.area() <= sweep_min * (1.0 + 1e-6),
            "calipers area {} above sweep minimum {}",
            b.area(),
            sweep_min
        );
        worst_gap = worst_gap.max(b.area() / sweep_min - 1.0);
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "calipers optimality",
        elapsed.as_secs_f64() < 30.0,
        &format!(
            "1000 clouds contained and optimal (worst rel gap {worst_gap:.2e}), {elapsed:.2?} < 30 s"
        ),
    );
}

// ── Criterion 3: PCA-MinMax contract ──────────────────────────────────

#[test]
fn a03_pca_minmax_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA03);
    for i in 0..1000 {
        let n = rng.gen_range(2..=200);
        let pts: Vec<Point2> = (0..n)
            .map(|_| Point2::new(rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)))
            .collect();
        if pts.iter().all(|p| p.x == pts[0].x && p.y == pts[0].y) {
            continue;
        }
        let anchor =
            (i % 2 == 0).then(|| Point2::new(rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)));
        let b = pca_minmax_rect(&pts, anchor).unwrap();
        if let Some(a) = anchor {
            assert_eq!((b.cx, b.cy), (a.x, a.y), "box not centered on anchor");
        }
        for p in &pts {
            assert!(b.contains(*p, 1e-9), "point escaped the box");
        }
    }

    // mirror-symmetric sets: orientation must land on the symmetry axis
    for _ in 0..200 {
        let alpha: f64 = rng.gen_range(-1.5..1.5);
        let axis = Point2::new(alpha.cos(), alpha.sin());
        let perp = Point2::new(-alpha.sin(), alpha.cos());
        let mut pts = Vec::new();
        for _ in 0..60 {
            let u = rng.gen_range(-20.0..20.0);
            let v = rng.gen_range(-2.0..2.0);
            pts.push(axis * u + perp * v);
            pts.push(axis * u + perp * (-v));
        }
        let b = pca_minmax_rect(&pts, None).unwrap();
        let diff = (b.theta - alpha).rem_euclid(std::f64::consts::PI);
        let diff = diff.min(std::f64::consts::PI - diff);
        assert!(
            diff < 1e-6,
            "theta {} misses symmetry axis {alpha}",
            b.theta
        );
    }

    // worked example, exact
    let pts = [
        Point2::new(-1.0, 0.0),
        Point2::new(3.0, 0.0),
        Point2::new(0.0, 1.0),
        Point2::new(0.0, -1.0),
    ];
    let b = pca_minmax_rect(&pts, Some(Point2::new(0.0, 0.0))).unwrap();
    let exact = (b.cx, b.cy, b.w, b.h, b.theta) == (0.0, 0.0, 6.0, 2.0, 0.0);
    verdict(
        3,
        "pca-minmax contract",
        exact,
        "1000 masks contained/anchored, 200 symmetric sets aligned, worked example exact",
    );
}

// ── Criterion 4: rotated IoU ──────────────────────────────────────────

/// Point-in-box by direct corner geometry, independent of the library path.
fn oracle_inside(b: &RotatedBox, p: Point2) -> bool {
    let (s, c) = b.theta.sin_cos();
    let dx = p.x - b.cx;
    let dy = p.y - b.cy;
    let u = c * dx + s * dy;
    let v = -s * dx + c * dy;
    u.abs() <= b.w * 0.5 && v.abs() <= b.h * 0.5
}

#[test]
fn a04_rotated_iou() {
    let b = RotatedBox::new(4.0, -3.0, 5.0, 2.0, 0.9);
    assert_eq!(
        rotated_iou(&b, &b),
        1.0,
        "identical boxes must give exactly 1"
    );

    let a = RotatedBox::new(0.0, 0.0, 1.0, 1.0, 0.0);
    let shifted = RotatedBox::new(0.5, 0.0, 1.0, 1.0, 0.0);
    let half = rotated_iou(&a, &shifted);
    assert!(
        (half - 1.0 / 3.0).abs() <= 1e-9,
        "half-offset squares gave {half}"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0xA04);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mk = |rng: &mut ChaCha8Rng| {
            RotatedBox::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.5..5.0),
                rng.gen_range(0.5..5.0),
                rng.gen_range(-1.57..1.57),
            )
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let exact = rotated_iou(&a, &b);

        // Monte-Carlo oracle over the joint bounding box, 10^6 samples
        let xs = [
            a.cx - 0.5 * (a.w + a.h),
            a.cx + 0.5 * (a.w + a.h),
            b.cx - 0.5 * (b.w + b.h),
            b.cx + 0.5 * (b.w + b.h),
        ];
        let ys = [
            a.cy - 0.5 * (a.w + a.h),
            a.cy + 0.5 * (a.w + a.h),
            b.cy - 0.5 * (b.w + b.h),
            b.cy + 0.5 * (b.w + b.h),
        ];
        let (x0, x1) = (
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let (y0, y1) = (
            ys.iter().cloned().fold(f64::INFINITY, f64::min),
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let mut hits = 0usize;
        const SAMPLES: usize = 1_000_000;
        for _ in 0..SAMPLES {
            let p = Point2::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
            if oracle_inside(&a, p) && oracle_inside(&b, p) {
                hits += 1;
            }
        }
        let inter = (x1 - x0) * (y1 - y0) * hits as f64 / SAMPLES as f64;
        let union = a.w * a.h + b.w * b.h - inter;
        let mc = if union <= 0.0 { 0.0 } else { inter / union };
        let gap = (exact - mc).abs();
        assert!(gap < 0.01, "IoU {exact} vs Monte-Carlo {mc}");
        worst = worst.max(gap);
    }
    verdict(
        4,
        "rotated IoU",
        true,
        &format!(
            "identity exact, half-offset exact, 200 pairs within 0.01 of MC (worst {worst:.4})"
        ),
    );
}

// ── Synthetic suites ──────────────────────────────────────────────────

fn suite_config(i: u64, blur: f64, noise: f64, offset: f64, cross_items: bool) -> SceneConfig {
    let mut cfg = SceneConfig {
        rng_seed: SUITE_SEED + i,
        semantic_blur_sigma: blur,
        semantic_noise_sigma: noise,
        point_offset_fraction: offset,
        ..SceneConfig::default()
    };
    if cross_items {
        cfg.classes[0].shape = ShapeKind::Cross;
    }
    cfg
}

fn extract_config(scene: &Scene, strategy: Option<BoxStrategy>) -> ExtractConfig {
    let mut cfg = ExtractConfig::default();
    match strategy {
        Some(s) => {
            for &c in scene.strategy_tags.keys() {
                cfg.strategy_table.insert(c, s);
            }
        }
        None => cfg.strategy_table = scene.strategy_table(),
    }
    cfg
}

/// Pooled strict-match mIoU over a 50-scene suite.
fn suite_miou(
    blur: f64,
    noise: f64,
    offset: f64,
    cross_items: bool,
    strategy: Option<BoxStrategy>,
) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..50 {
        let scene = generate_scene(&suite_config(i, blur, noise, offset, cross_items)).unwrap();
        let cfg = extract_config(&scene, strategy);
        let (labels, _) = sspbe_detailed(&scene.semantic, &scene.gt_points, &cfg).unwrap();
        for (k, b) in labels.boxes.iter().enumerate() {
            sum += rotated_iou(b, &scene.gt_boxes[labels.instance_index[k]]);
            count += 1;
        }
    }
    sum / count as f64
}

// ── Criterion 5: assignment monotone refinement ───────────────────────

#[test]
fn a05_assignment_monotone_refinement() {
    let cfg = AssignConfig::default();
    let mut cells = 0usize;
    for i in 0..100 {
        let scene = generate_scene(&suite_config(i, 2.0, 0.05, 0.0, false)).unwrap();
        let (w, h) = (scene.image.width(), scene.image.height());
        let step1 = dynamic_radius_assign(w, h, &scene.gt_points, cfg.tau_plus).unwrap();
        let fused = pspsa(&scene.image, &scene.gt_points, &cfg).unwrap();
        let seeds: Vec<Point2> = scene.gt_points.iter().map(|g| g.point()).collect();
        let partition = spatial_partition(w, h, &seeds).unwrap();
        for y in 0..h {
            for x in 0..w {
                cells += 1;
                let before = *step1.get(x, y);
                let after = *fused.get(x, y);
                match before {
                    CellLabel::Class(_) | CellLabel::Background => assert_eq!(
                        before, after,
                        "scene {i}: step-1 label demoted at ({x},{y})"
                    ),
                    CellLabel::Ignore => {}
                }
                if let CellLabel::Class(c) = after {
                    let owner = *partition.get(x, y) as usize;
                    assert_eq!(
                        c, scene.gt_points[owner].class_id,
                        "scene {i}: positive at ({x},{y}) outside its owner's cell"
                    );
                }
            }
        }
    }
    verdict(
        5,
        "assignment monotone refinement",
        true,
        &format!("100 scenes, {cells} cells, 0 violations"),
    );
}

// ── Criterion 6: ablation direction ───────────────────────────────────

#[test]
fn a06_ablation_direction() {
    let base = AssignConfig::default();
    let mut rows = [0.0f64; 4];
    for i in 0..50 {
        let scene = generate_scene(&suite_config(i, 2.0, 0.05, 0.0, false)).unwrap();
        let oracle = scene_oracle_assignment(&scene);
        let (w, h) = (scene.image.width(), scene.image.height());
        let step1 = dynamic_radius_assign(w, h, &scene.gt_points, base.tau_plus).unwrap();
        // row 1, positives only: dynamic-radius negatives reverted to ignore
        let mut row1 = step1.clone();
        for v in row1.data_mut() {
            if *v == CellLabel::Background {
                *v = CellLabel::Ignore;
            }
        }
        let grow_only = AssignConfig {
            use_boundary_negatives: false,
            ..base.clone()
        };
        let maps = [
            row1,
            step1,
            pspsa(&scene.image, &scene.gt_points, &grow_only).unwrap(),
            pspsa(&scene.image, &scene.gt_points, &base).unwrap(),
        ];
        for (r, m) in rows.iter_mut().zip(&maps) {
            *r += assignment_quality(m, &oracle)
                .unwrap()
                .mean_foreground_coverage_iou;
        }
    }
    for r in rows.iter_mut() {
        *r /= 50.0;
    }
    let ok = rows[0] < rows[1] && rows[1] < rows[2] && rows[2] < rows[3];
    verdict(
        6,
        "ablation direction",
        ok,
        &format!(
            "coverage IoU {:.4} < {:.4} < {:.4} < {:.4} (pos-radius, +neg-radius, +pos-growing, +neg-partition)",
            rows[0], rows[1], rows[2], rows[3]
        ),
    );
}

// ── Criterion 7: end-to-end pseudo-label quality ──────────────────────

#[test]
fn a07_end_to_end_quality() {
    let clean = suite_miou(0.0, 0.0, 0.0, false, None);
    let moderate = suite_miou(2.0, 0.05, 0.0, false, None);
    let ok = clean >= 0.90 && moderate >= MODERATE_MIOU_BASELINE - 0.02;
    verdict(
        7,
        "end-to-end pseudo-label quality",
        ok,
        &format!(
            "clean mIoU {clean:.4} >= 0.90; moderate {moderate:.4} >= {:.4} (frozen {MODERATE_MIOU_BASELINE} - 0.02)",
            MODERATE_MIOU_BASELINE - 0.02
        ),
    );
}

// ── Criterion 8: annotation offset robustness ─────────────────────────

#[test]
fn a08_offset_robustness() {
    let m0 = suite_miou(0.0, 0.0, 0.0, false, None);
    let m10 = suite_miou(0.0, 0.0, 0.1, false, None);
    let m30 = suite_miou(0.0, 0.0, 0.3, false, None);
    let ok = m0 >= m10 && m10 >= m30 && (m0 - m10) <= 0.05;
    verdict(
        8,
        "offset robustness",
        ok,
        &format!(
            "mIoU {m0:.4} >= {m10:.4} >= {m30:.4}; 10% drop {:.4} <= 0.05",
            m0 - m10
        ),
    );
}

// ── Criterion 9: hybrid dominance and benefit ─────────────────────────

#[test]
fn a09_hybrid_dominance_and_benefit() {
    // per-mask area dominance on the suite's grown masks
    let mut masks_checked = 0usize;
    for i in 0..10 {
        let scene = generate_scene(&suite_config(i, 2.0, 0.05, 0.1, true)).unwrap();
        let cfg = extract_config(&scene, None);
        let (labels, masks) = sspbe_detailed(&scene.semantic, &scene.gt_points, &cfg).unwrap();
        for (k, mask) in masks.iter().enumerate() {
            if labels.degenerate[k] || mask.is_degenerate() {
                continue;
            }
            let pts = mask.center_points();
            let anchor = scene.gt_points[k].point();
            let pca = pca_minmax_rect(&pts, Some(anchor)).unwrap();
            let mar = min_area_rect(&pts).unwrap();
            assert!(
                mar.area() <= pca.area() * (1.0 + 1e-9),
                "scene {i} mask {k}: minarea {} > pca {}",
                mar.area(),
                pca.area()
            );
            masks_checked += 1;
        }
    }

    // suite with cross-shaped items and rectangular fields, annotations
    // offset by 10%: the per-tag hybrid must match or beat both pure
    // strategies
    let hybrid = suite_miou(2.0, 0.05, 0.1, true, None);
    let all_pca = suite_miou(2.0, 0.05, 0.1, true, Some(BoxStrategy::PcaMinmax));
    let all_minarea = suite_miou(2.0, 0.05, 0.1, true, Some(BoxStrategy::MinareaRect));
    let ok = hybrid >= all_pca.max(all_minarea) - 0.005;
    verdict(
        9,
        "hybrid dominance and benefit",
        ok,
        &format!(
            "{masks_checked} masks area-dominated; hybrid {hybrid:.4} vs pca {all_pca:.4} / minarea {all_minarea:.4}"
        ),
    );
}

// ── Criterion 10: determinism ─────────────────────────────────────────

#[test]
fn a10_pipeline_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let st = std::process::Command::new(env!("CARGO_BIN_EXE_spart"))
            .args([
                "pipeline",
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "42",
                "--overlay",
            ])
            .output()
            .expect("spawn spart");
        assert!(
            st.status.success(),
            "pipeline failed: {}",
            String::from_utf8_lossy(&st.stderr)
        );
        out
    };
    let d1 = run("one");
    let d2 = run("two");
    let mut compared = 0usize;
    for entry in std::fs::read_dir(&d1).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(d1.join(&name)).unwrap();
        let b = std::fs::read(d2.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
        compared += 1;
    }
    verdict(
        10,
        "determinism",
        compared >= 10,
        &format!("{compared} output files byte-identical across reruns"),
    );
}
