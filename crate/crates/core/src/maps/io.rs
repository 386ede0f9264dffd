//! File formats: PGM images, the float/index container, and JSON annotations.
//!
//! The binary container is little-endian: magic `SSPF`, `u32` width, `u32`
//! height, `u32` channels, then a row-major channel-major payload of `f32`
//! (score maps, float images) or `u32` (assignment and partition maps, with
//! background/ignore as sentinel values just below `u32::MAX`).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::RotatedBox;
use crate::maps::{AssignmentMap, CellLabel, GrayImage, Grid, GtPoint, PartitionMap, SemanticMap};

pub const CONTAINER_MAGIC: &[u8; 4] = b"SSPF";
pub(crate) const BACKGROUND_SENTINEL: u32 = 0xFFFF_FFFE;
pub(crate) const IGNORE_SENTINEL: u32 = 0xFFFF_FFFF;

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

// ── Container primitives ──────────────────────────────────────────────

fn container_header(width: usize, height: usize, channels: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(16);
    out.extend_from_slice(CONTAINER_MAGIC);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&(channels as u32).to_le_bytes());
    out
}

fn parse_container_header(bytes: &[u8], path: &Path) -> Result<(usize, usize, usize)> {
    if bytes.len() < 16 {
        return Err(Error::Format(format!(
            "{}: truncated header",
            path.display()
        )));
    }
    if &bytes[0..4] != CONTAINER_MAGIC {
        return Err(Error::Format(format!("{}: bad magic", path.display())));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let channels = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let cells = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Format(format!("{}: dimensions overflow", path.display())))?;
    let expected = 16 + cells * 4;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "{}: payload size {} does not match {}x{}x{}",
            path.display(),
            bytes.len() - 16,
            width,
            height,
            channels
        )));
    }
    Ok((width, height, channels))
}

fn save_f32_container(
    path: &Path,
    width: usize,
    height: usize,
    channels: usize,
    data: &[f32],
) -> Result<()> {
    let mut out = container_header(width, height, channels);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &out)
}

fn load_f32_container(path: &Path) -> Result<(usize, usize, usize, Vec<f32>)> {
    let bytes = fs::read(path)?;
    let (width, height, channels) = parse_container_header(&bytes, path)?;
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((width, height, channels, data))
}

fn save_u32_container(
    path: &Path,
    width: usize,
    height: usize,
    data: impl Iterator<Item = u32>,
) -> Result<()> {
    let mut out = container_header(width, height, 1);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &out)
}

fn load_u32_container(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    let bytes = fs::read(path)?;
    let (width, height, channels) = parse_container_header(&bytes, path)?;
    if channels != 1 {
        return Err(Error::Format(format!(
            "{}: expected 1 channel, got {channels}",
            path.display()
        )));
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((width, height, data))
}

// ── Score maps and float images ───────────────────────────────────────

pub fn save_semantic(path: &Path, map: &SemanticMap) -> Result<()> {
    save_f32_container(
        path,
        map.width(),
        map.height(),
        map.channels(),
        map.scores(),
    )
}

pub fn load_semantic(path: &Path) -> Result<SemanticMap> {
    let (width, height, channels, data) = load_f32_container(path)?;
    validate_scores(&data, width, height)?;
    Ok(SemanticMap::from_vec(width, height, channels, data))
}

pub fn save_gray_f32(path: &Path, image: &GrayImage) -> Result<()> {
    save_f32_container(path, image.width(), image.height(), 1, image.data())
}

pub fn load_gray_f32(path: &Path) -> Result<GrayImage> {
    let (width, height, channels, data) = load_f32_container(path)?;
    if channels != 1 {
        return Err(Error::Format(format!(
            "{}: expected 1 channel, got {channels}",
            path.display()
        )));
    }
    validate_scores(&data, width, height)?;
    Ok(Grid::from_vec(width, height, data))
}

fn validate_scores(data: &[f32], width: usize, height: usize) -> Result<()> {
    let plane = width * height;
    for (i, v) in data.iter().enumerate() {
        if !v.is_finite() {
            let in_plane = i % plane.max(1);
            return Err(Error::NonFiniteScore {
                x: in_plane % width.max(1),
                y: in_plane / width.max(1),
                channel: i / plane.max(1),
            });
        }
        if *v < 0.0 || *v > 1.0 {
            return Err(Error::Format(format!("score {v} outside [0, 1]")));
        }
    }
    Ok(())
}

// ── Assignment and partition maps ─────────────────────────────────────

pub fn save_assignment(path: &Path, map: &AssignmentMap) -> Result<()> {
    save_u32_container(
        path,
        map.width(),
        map.height(),
        map.data().iter().map(|l| l.to_u32()),
    )
}

pub fn load_assignment(path: &Path) -> Result<AssignmentMap> {
    let (width, height, raw) = load_u32_container(path)?;
    let labels = raw
        .into_iter()
        .map(CellLabel::from_u32)
        .collect::<Result<Vec<_>>>()?;
    Ok(Grid::from_vec(width, height, labels))
}

pub fn save_partition(path: &Path, map: &PartitionMap) -> Result<()> {
    save_u32_container(path, map.width(), map.height(), map.data().iter().copied())
}

pub fn load_partition(path: &Path) -> Result<PartitionMap> {
    let (width, height, raw) = load_u32_container(path)?;
    Ok(Grid::from_vec(width, height, raw))
}

// ── PGM images ────────────────────────────────────────────────────────

/// 8-bit binary PGM (P5).
pub fn save_gray_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(
        image
            .data()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    write_atomic(path, &out)
}

/// Load P5 (grayscale) or P6 (RGB, converted by the Rec.601 luma weights).
pub fn load_gray_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));
    let magic = bytes.get(0..2).ok_or_else(|| bad("empty file"))?;
    let rgb = match magic {
        b"P5" => false,
        b"P6" => true,
        _ => return Err(bad("not a P5/P6 image")),
    };

    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comment lines
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("malformed header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| bad("malformed header"))?
            .parse()
            .map_err(|_| bad("malformed header field"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(bad("unsupported maxval"));
    }
    // single whitespace byte separates header from payload
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(bad("missing payload separator"));
    }
    pos += 1;

    let pixels = width * height;
    let payload = &bytes[pos..];
    let scale = 1.0 / maxval as f32;
    let data: Vec<f32> = if rgb {
        if payload.len() != pixels * 3 {
            return Err(bad("payload size mismatch"));
        }
        payload
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32) * scale)
            .collect()
    } else {
        if payload.len() != pixels {
            return Err(bad("payload size mismatch"));
        }
        payload.iter().map(|&b| b as f32 * scale).collect()
    };
    Ok(Grid::from_vec(width, height, data))
}

// ── JSON annotations ──────────────────────────────────────────────────

/// One oriented box record; `theta` in radians.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct BoxRecord {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
    pub class: u32,
}

pub fn save_points(path: &Path, points: &[GtPoint]) -> Result<()> {
    let json = serde_json::to_vec_pretty(points)?;
    write_atomic(path, &json)
}

pub fn load_points(path: &Path) -> Result<Vec<GtPoint>> {
    let bytes = fs::read(path)?;
    let points: Vec<GtPoint> = serde_json::from_slice(&bytes)?;
    for p in &points {
        if p.class_id == 0 {
            return Err(Error::ClassIdOutOfRange(0));
        }
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::Format(format!(
                "{}: non-finite point coordinates",
                path.display()
            )));
        }
    }
    Ok(points)
}

pub fn save_boxes(path: &Path, boxes: &[RotatedBox], classes: &[u32]) -> Result<()> {
    assert_eq!(boxes.len(), classes.len(), "boxes/classes length mismatch");
    let records: Vec<BoxRecord> = boxes
        .iter()
        .zip(classes)
        .map(|(b, &class)| BoxRecord {
            cx: b.cx,
            cy: b.cy,
            w: b.w,
            h: b.h,
            theta: b.theta,
            class,
        })
        .collect();
    let json = serde_json::to_vec_pretty(&records)?;
    write_atomic(path, &json)
}

pub fn load_boxes(path: &Path) -> Result<(Vec<RotatedBox>, Vec<u32>)> {
    let bytes = fs::read(path)?;
    let records: Vec<BoxRecord> = serde_json::from_slice(&bytes)?;
    let mut boxes = Vec::with_capacity(records.len());
    let mut classes = Vec::with_capacity(records.len());
    for r in &records {
        if r.class == 0 {
            return Err(Error::ClassIdOutOfRange(0));
        }
        if ![r.cx, r.cy, r.w, r.h, r.theta]
            .iter()
            .all(|v| v.is_finite())
            || r.w < 0.0
            || r.h < 0.0
        {
            return Err(Error::Format(format!(
                "{}: invalid box record",
                path.display()
            )));
        }
        boxes.push(RotatedBox::new(r.cx, r.cy, r.w, r.h, r.theta));
        classes.push(r.class);
    }
    Ok((boxes, classes))
}
