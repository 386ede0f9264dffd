//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use spart::assignment::pspsa;
use spart::evaluation::{assignment_quality, render_report, strict_match_miou, EvalReport};
use spart::extraction::{sspbe_detailed, BoxStrategy, ExtractConfig, PseudoLabelSet};
use spart::maps::{
    load_assignment, load_boxes, load_gray_f32, load_gray_pgm, load_points, load_semantic,
    save_assignment, save_boxes, save_gray_f32, save_gray_pgm, save_points, save_semantic,
    write_atomic, GrayImage, GtPoint, SemanticMap,
};
use spart::synth::{generate_scene, scene_oracle_assignment, Scene, SceneConfig};

use crate::cli::{AssignArgs, EvalArgs, ExtractArgs, PipelineArgs, SweepArgs, SynthArgs};
use crate::config::{set_if, FileConfig};
use crate::manifest::Manifest;
use crate::overlay::render_overlay;

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Load a grayscale image by magic: PGM (P5/P6) or the float container.
fn load_image(path: &Path) -> Result<GrayImage> {
    let mut magic = [0u8; 2];
    {
        use std::io::Read;
        let mut f = fs::File::open(path)?;
        let _ = f.read(&mut magic)?;
    }
    let img = if &magic == b"P5" || &magic == b"P6" {
        load_gray_pgm(path)?
    } else {
        load_gray_f32(path)?
    };
    Ok(img)
}

struct SceneFiles {
    image_pgm: PathBuf,
    image_f32: PathBuf,
    semantic: PathBuf,
    points: PathBuf,
    gt_boxes: PathBuf,
}

fn write_scene(dir: &Path, scene: &Scene) -> Result<SceneFiles> {
    let files = SceneFiles {
        image_pgm: dir.join("image.pgm"),
        image_f32: dir.join("image.sspf"),
        semantic: dir.join("semantic.sspf"),
        points: dir.join("points.json"),
        gt_boxes: dir.join("gt_boxes.json"),
    };
    save_gray_pgm(&files.image_pgm, &scene.image)?;
    save_gray_f32(&files.image_f32, &scene.image)?;
    save_semantic(&files.semantic, &scene.semantic)?;
    save_points(&files.points, &scene.gt_points)?;
    save_boxes(&files.gt_boxes, &scene.gt_boxes, &scene.classes())?;
    Ok(files)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let mut cfg = file_cfg.scene();
    apply_scene_overrides(&mut cfg, &args.scene);
    ensure_out_dir(&args.out)?;

    let scene = generate_scene(&cfg)?;
    let files = write_scene(&args.out, &scene)?;
    let oracle_path = args.out.join("oracle_assignment.sspf");
    save_assignment(&oracle_path, &scene_oracle_assignment(&scene))?;

    Manifest::new("synth")
        .seed(cfg.rng_seed)
        .config(json!({
            "scene": cfg,
            "strategy_tags": scene.strategy_tags,
        }))
        .output(&files.image_pgm)
        .output(&files.image_f32)
        .output(&files.semantic)
        .output(&files.points)
        .output(&files.gt_boxes)
        .output(&oracle_path)
        .write(&args.out.join("manifest.json"))?;
    Ok(())
}

pub fn cmd_assign(args: &AssignArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let mut cfg = file_cfg.assign();
    set_if(&mut cfg.tau_plus, args.tau_plus);
    set_if(&mut cfg.grow.tolerance, args.tolerance);
    if args.no_boundary_negatives {
        cfg.use_boundary_negatives = false;
    }
    if args.no_growing_positives {
        cfg.use_growing_positives = false;
    }
    check_stride(args.stride)?;
    ensure_out_dir(&args.out)?;

    let mut image = load_image(&args.image)?;
    let mut points = load_points(&args.points)?;
    if args.stride > 1 {
        image = pool_image(&image, args.stride);
        points = scale_points(&points, 1.0 / args.stride as f64);
    }
    let map = pspsa(&image, &points, &cfg)?;
    let map_path = args.out.join("assignment.sspf");
    save_assignment(&map_path, &map)?;

    Manifest::new("assign")
        .input("image", &args.image)
        .input("points", &args.points)
        .config(json!({ "assign": cfg, "stride": args.stride }))
        .output(&map_path)
        .write(&args.out.join("manifest.json"))?;
    Ok(())
}

fn check_stride(stride: usize) -> Result<()> {
    if stride == 0 {
        bail!(spart::Error::InvalidConfig("stride must be >= 1".into()));
    }
    Ok(())
}

fn scale_points(points: &[GtPoint], factor: f64) -> Vec<GtPoint> {
    points
        .iter()
        .map(|p| GtPoint::new(p.x * factor, p.y * factor, p.class_id))
        .collect()
}

/// Mean-pool by an integer factor; edge blocks average their actual cells.
fn pool_image(img: &GrayImage, stride: usize) -> GrayImage {
    let w = img.width().div_ceil(stride);
    let h = img.height().div_ceil(stride);
    let mut out = GrayImage::new(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0f64;
            let mut n = 0usize;
            for sy in y * stride..((y + 1) * stride).min(img.height()) {
                for sx in x * stride..((x + 1) * stride).min(img.width()) {
                    sum += *img.get(sx, sy) as f64;
                    n += 1;
                }
            }
            out.set(x, y, (sum / n as f64) as f32);
        }
    }
    out
}

fn fill_strategy_table(cfg: &mut ExtractConfig, points: &[GtPoint], default: Option<BoxStrategy>) {
    if let Some(strategy) = default {
        for p in points {
            cfg.strategy_table.entry(p.class_id).or_insert(strategy);
        }
    }
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let mut cfg = file_cfg.extract();
    set_if(&mut cfg.score_threshold, args.tau);
    set_if(&mut cfg.grow.tolerance, args.tolerance);
    ensure_out_dir(&args.out)?;

    check_stride(args.stride)?;
    let semantic = load_semantic(&args.semantic)?;
    let points = load_points(&args.points)?;
    fill_strategy_table(&mut cfg, &points, args.default_strategy.map(Into::into));

    // annotations live in image pixels; the score map may be strided
    let map_points = scale_points(&points, 1.0 / args.stride as f64);
    let (mut labels, masks) = sspbe_detailed(&semantic, &map_points, &cfg)?;
    if args.stride > 1 {
        let s = args.stride as f64;
        for b in labels.boxes.iter_mut() {
            *b = spart::geometry::RotatedBox::new(b.cx * s, b.cy * s, b.w * s, b.h * s, b.theta);
        }
    }
    let boxes_path = args.out.join("boxes.json");
    save_boxes(&boxes_path, &labels.boxes, &labels.classes)?;

    let mut manifest = Manifest::new("extract")
        .input("semantic", &args.semantic)
        .input("points", &args.points)
        .config(json!({
            "extract": cfg,
            "stride": args.stride,
            "degenerate_fallbacks": labels.degenerate_count(),
        }))
        .output(&boxes_path);

    if args.overlay {
        let overlay_path = args.out.join("overlay.pgm");
        let base = semantic_composite(&semantic);
        save_gray_pgm(&overlay_path, &render_overlay(&base, &masks, &labels.boxes))?;
        manifest = manifest.output(&overlay_path);
    }
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(())
}

/// Max score over channels, used as an overlay backdrop.
fn semantic_composite(map: &SemanticMap) -> GrayImage {
    let mut img = GrayImage::new(map.width(), map.height(), 0.0);
    for c in 0..map.channels() {
        let plane = map.channel(c);
        for (i, v) in plane.iter().enumerate() {
            let (x, y) = (i % map.width(), i / map.width());
            if *v > *img.get(x, y) {
                img.set(x, y, *v);
            }
        }
    }
    img
}

fn labels_from_files(
    pred: &Path,
    gt: &Path,
) -> Result<(PseudoLabelSet, Vec<spart::geometry::RotatedBox>)> {
    let (pred_boxes, pred_classes) = load_boxes(pred)?;
    let (gt_boxes, gt_classes) = load_boxes(gt)?;
    if pred_boxes.len() != gt_boxes.len() {
        bail!(spart::Error::Format(format!(
            "strict match needs one prediction per annotation: {} vs {}",
            pred_boxes.len(),
            gt_boxes.len()
        )));
    }
    if pred_classes != gt_classes {
        bail!(spart::Error::Format(
            "prediction classes disagree with ground-truth classes".into()
        ));
    }
    let n = pred_boxes.len();
    Ok((
        PseudoLabelSet {
            boxes: pred_boxes,
            classes: pred_classes,
            instance_index: (0..n).collect(),
            degenerate: vec![false; n],
        },
        gt_boxes,
    ))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let (pred, gt_boxes) = labels_from_files(&args.pred, &args.gt)?;
    let mut report = strict_match_miou(&pred, &gt_boxes)?;
    if let (Some(pm), Some(om)) = (&args.pred_map, &args.oracle_map) {
        let pred_map = load_assignment(pm)?;
        let oracle_map = load_assignment(om)?;
        report.assignment = Some(assignment_quality(&pred_map, &oracle_map)?);
    }
    let report_path = args.out.join("report.json");
    write_report(&report_path, &report)?;
    print!("{}", render_report(&report));

    let mut manifest = Manifest::new("eval")
        .input("pred", &args.pred)
        .input("gt", &args.gt)
        .config(serde_json::Value::Null)
        .output(&report_path);
    if let (Some(pm), Some(om)) = (&args.pred_map, &args.oracle_map) {
        manifest = manifest.input("pred_map", pm).input("oracle_map", om);
    }
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(())
}

fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_atomic(path, &json)?;
    Ok(())
}

/// Everything the pipeline tail needs, whether the scene was just generated
/// or loaded from a directory of scene files.
struct PipelineInputs {
    image: GrayImage,
    semantic: SemanticMap,
    gt_points: Vec<GtPoint>,
    gt_boxes: Vec<spart::geometry::RotatedBox>,
    oracle: Option<spart::maps::AssignmentMap>,
    tags: std::collections::BTreeMap<u32, spart::synth::StrategyTag>,
}

fn load_scene_dir(dir: &Path) -> Result<PipelineInputs> {
    let image_f32 = dir.join("image.sspf");
    let image = if image_f32.exists() {
        load_gray_f32(&image_f32)?
    } else {
        load_gray_pgm(&dir.join("image.pgm"))?
    };
    let semantic = load_semantic(&dir.join("semantic.sspf"))?;
    let gt_points = load_points(&dir.join("points.json"))?;
    let (gt_boxes, gt_classes) = load_boxes(&dir.join("gt_boxes.json"))?;
    if gt_points.len() != gt_boxes.len()
        || gt_points
            .iter()
            .zip(&gt_classes)
            .any(|(p, &c)| p.class_id != c)
    {
        bail!(spart::Error::Format(format!(
            "{}: points.json and gt_boxes.json disagree",
            dir.display()
        )));
    }
    let oracle_path = dir.join("oracle_assignment.sspf");
    let oracle = oracle_path
        .exists()
        .then(|| load_assignment(&oracle_path))
        .transpose()?;
    // conversion strategies travel in the scene manifest's tag echo
    let mut tags = std::collections::BTreeMap::new();
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        let value: serde_json::Value = serde_json::from_slice(&fs::read(&manifest_path)?)?;
        if let Some(map) = value["config"]["strategy_tags"].as_object() {
            for (k, v) in map {
                if let (Ok(class), Ok(tag)) = (
                    k.parse::<u32>(),
                    serde_json::from_value::<spart::synth::StrategyTag>(v.clone()),
                ) {
                    tags.insert(class, tag);
                }
            }
        }
    }
    Ok(PipelineInputs {
        image,
        semantic,
        gt_points,
        gt_boxes,
        oracle,
        tags,
    })
}

pub fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let mut assign_cfg = file_cfg.assign();
    set_if(&mut assign_cfg.grow.tolerance, args.assign_tolerance);
    let mut extract_cfg = file_cfg.extract();
    set_if(&mut extract_cfg.score_threshold, args.tau);
    set_if(&mut extract_cfg.grow.tolerance, args.tolerance);
    ensure_out_dir(&args.out)?;

    let mut manifest = Manifest::new("pipeline");
    let mut scene_outputs: Vec<PathBuf> = Vec::new();
    let inputs = match &args.scene_dir {
        Some(dir) => {
            manifest = manifest.input("scene_dir", dir);
            let inputs = load_scene_dir(dir)?;
            manifest = manifest.config(json!({
                "assign": assign_cfg,
                "extract": extract_cfg,
            }));
            inputs
        }
        None => {
            let mut scene_cfg = file_cfg.scene();
            apply_scene_overrides(&mut scene_cfg, &args.scene);
            let scene = generate_scene(&scene_cfg)?;
            let files = write_scene(&args.out, &scene)?;
            scene_outputs.extend([
                files.image_pgm,
                files.image_f32,
                files.semantic,
                files.points,
                files.gt_boxes,
            ]);
            let oracle = scene_oracle_assignment(&scene);
            let oracle_path = args.out.join("oracle_assignment.sspf");
            save_assignment(&oracle_path, &oracle)?;
            scene_outputs.push(oracle_path);
            manifest = manifest.seed(scene_cfg.rng_seed).config(json!({
                "scene": scene_cfg,
                "assign": assign_cfg,
                "extract": extract_cfg,
                "strategy_tags": scene.strategy_tags,
            }));
            PipelineInputs {
                tags: scene.strategy_tags.clone(),
                image: scene.image,
                semantic: scene.semantic,
                gt_points: scene.gt_points,
                gt_boxes: scene.gt_boxes,
                oracle: Some(oracle),
            }
        }
    };
    for path in &scene_outputs {
        manifest = manifest.output(path);
    }

    // the scene's item/field tags decide the conversion strategy unless the
    // config file already pinned one
    for (&class, &tag) in &inputs.tags {
        extract_cfg
            .strategy_table
            .entry(class)
            .or_insert(tag.box_strategy());
    }

    let assignment = pspsa(&inputs.image, &inputs.gt_points, &assign_cfg)?;
    let assignment_path = args.out.join("assignment.sspf");
    save_assignment(&assignment_path, &assignment)?;

    let (labels, masks) = sspbe_detailed(&inputs.semantic, &inputs.gt_points, &extract_cfg)?;
    let boxes_path = args.out.join("boxes.json");
    save_boxes(&boxes_path, &labels.boxes, &labels.classes)?;

    let mut report = strict_match_miou(&labels, &inputs.gt_boxes)?;
    if let Some(oracle) = &inputs.oracle {
        report.assignment = Some(assignment_quality(&assignment, oracle)?);
    }
    let report_path = args.out.join("report.json");
    write_report(&report_path, &report)?;
    print!("{}", render_report(&report));

    manifest = manifest
        .output(&assignment_path)
        .output(&boxes_path)
        .output(&report_path);
    if args.overlay {
        let overlay_path = args.out.join("overlay.pgm");
        save_gray_pgm(
            &overlay_path,
            &render_overlay(&inputs.image, &masks, &labels.boxes),
        )?;
        manifest = manifest.output(&overlay_path);
    }
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let base_scene = file_cfg.scene();
    let base_extract = file_cfg.extract();
    ensure_out_dir(&args.out)?;

    let mut csv = String::from(
        "grow_tolerance,score_threshold,offset_fraction,scenes,base_seed,miou,recall50,recall75,degenerate\n",
    );
    for &tolerance in &args.tolerances {
        for &tau in &args.taus {
            for &offset in &args.offsets {
                let mut ious = Vec::new();
                let mut degenerate = 0usize;
                for i in 0..args.scenes {
                    let scene_cfg = SceneConfig {
                        point_offset_fraction: offset,
                        rng_seed: args.seed + i as u64,
                        ..base_scene.clone()
                    };
                    let scene = generate_scene(&scene_cfg)?;
                    let mut extract_cfg = base_extract.clone();
                    extract_cfg.grow.tolerance = tolerance;
                    extract_cfg.score_threshold = tau;
                    for (&class, &tag) in &scene.strategy_tags {
                        extract_cfg
                            .strategy_table
                            .entry(class)
                            .or_insert(tag.box_strategy());
                    }
                    let (labels, _) =
                        sspbe_detailed(&scene.semantic, &scene.gt_points, &extract_cfg)?;
                    degenerate += labels.degenerate_count();
                    for (i, b) in labels.boxes.iter().enumerate() {
                        ious.push(spart::geometry::rotated_iou(
                            b,
                            &scene.gt_boxes[labels.instance_index[i]],
                        ));
                    }
                }
                let n = ious.len().max(1) as f64;
                let miou = ious.iter().sum::<f64>() / n;
                let recall = |t: f64| ious.iter().filter(|&&v| v >= t).count() as f64 / n;
                csv.push_str(&format!(
                    "{},{},{},{},{},{:.6},{:.6},{:.6},{}\n",
                    tolerance,
                    tau,
                    offset,
                    args.scenes,
                    args.seed,
                    miou,
                    recall(0.5),
                    recall(0.75),
                    degenerate
                ));
            }
        }
    }
    let csv_path = args.out.join("sweep.csv");
    write_atomic(&csv_path, csv.as_bytes())?;

    Manifest::new("sweep")
        .seed(args.seed)
        .config(json!({
            "scene": base_scene,
            "extract": base_extract,
            "grid": {
                "tolerances": args.tolerances,
                "taus": args.taus,
                "offsets": args.offsets,
                "scenes": args.scenes,
            },
        }))
        .output(&csv_path)
        .write(&args.out.join("manifest.json"))?;
    Ok(())
}

fn apply_scene_overrides(cfg: &mut SceneConfig, o: &crate::cli::SceneOverrides) {
    set_if(&mut cfg.rng_seed, o.seed);
    set_if(&mut cfg.width, o.width);
    set_if(&mut cfg.height, o.height);
    set_if(&mut cfg.point_offset_fraction, o.offset_fraction);
    set_if(&mut cfg.image_noise_sigma, o.image_noise);
    set_if(&mut cfg.semantic_blur_sigma, o.blur);
    set_if(&mut cfg.semantic_noise_sigma, o.semantic_noise);
}
