//! Overlay rendering: masks brightened, box outlines traced in white.

use spart::geometry::RotatedBox;
use spart::maps::{GrayImage, InstanceMask};

pub fn render_overlay(base: &GrayImage, masks: &[InstanceMask], boxes: &[RotatedBox]) -> GrayImage {
    let mut img = base.clone();
    for mask in masks {
        for &(x, y) in &mask.cells {
            let (x, y) = (x as usize, y as usize);
            let v = *img.get(x, y);
            img.set(x, y, (v * 0.5 + 0.35).min(1.0));
        }
    }
    for b in boxes {
        draw_outline(&mut img, b);
    }
    img
}

fn draw_outline(img: &mut GrayImage, b: &RotatedBox) {
    let corners = b.corners();
    for i in 0..4 {
        let a = corners[i];
        let c = corners[(i + 1) % 4];
        let steps = ((a.distance(c) * 2.0).ceil() as usize).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let p = a + (c - a) * t;
            let x = p.x.floor() as i64;
            let y = p.y.floor() as i64;
            if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
                img.set(x as usize, y as usize, 1.0);
            }
        }
    }
}
