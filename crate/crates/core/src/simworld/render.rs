use std::io::Cursor;

use image::{ImageFormat, Rgb, RgbImage};

use super::observe::{EntityKind, Observation};

fn palette(id: &str) -> Rgb<u8> {
    // FNV-1a keeps colors stable across runs
    let mut h: u32 = 0x811c9dc5;
    for b in id.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x01000193);
    }
    Rgb([
        64 + (h & 0x7f) as u8,
        64 + ((h >> 8) & 0x7f) as u8,
        128 + ((h >> 16) & 0x7f) as u8,
    ])
}

/// Draws a flat schematic frame: sky, ground, and one filled rectangle per
/// entity box, far entities first. Returns PNG bytes.
pub fn render_frame(obs: &Observation) -> Vec<u8> {
    let (w, h) = (obs.camera.width(), obs.camera.height());
    let mut img = RgbImage::from_fn(w, h, |_, y| {
        if y < h / 2 {
            Rgb([170, 200, 235])
        } else {
            Rgb([120, 130, 110])
        }
    });

    let mut views: Vec<_> = obs
        .entity_views
        .iter()
        .filter(|v| v.bbox.is_some())
        .collect();
    views.sort_by(|a, b| b.range.total_cmp(&a.range));
    for v in views {
        let b = v.bbox.expect("filtered");
        let color = match v.kind {
            EntityKind::Obstacle => Rgb([110, 60, 40]),
            EntityKind::Target => palette(&v.id),
        };
        let (x1, x2) = (b.x1.floor() as u32, (b.x2.ceil() as u32).min(w));
        let (y1, y2) = (b.y1.floor() as u32, (b.y2.ceil() as u32).min(h));
        for y in y1..y2 {
            for x in x1..x2 {
                img.put_pixel(x, y, color);
            }
        }
    }

    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .expect("PNG encoding into memory cannot fail");
    out.into_inner()
}

#[cfg(test)]
mod tests {
    use super::super::observe::{EntityView, PixelBox};
    use super::*;
    use crate::geometry::CameraModel;

    #[test]
    fn frame_is_png_with_entity_pixels() {
        let cam = CameraModel::from_degrees(64, 48, 40.0, 30.0).unwrap();
        let obs = Observation {
            timestamp: 0.0,
            frame: None,
            entity_views: vec![EntityView {
                id: "crate".into(),
                kind: EntityKind::Obstacle,
                label: "crate".into(),
                bbox: Some(PixelBox {
                    x1: 10.0,
                    y1: 10.0,
                    x2: 20.0,
                    y2: 20.0,
                }),
                visible: true,
                range: 3.0,
                clearance: 2.0,
            }],
            camera: cam,
        };
        let png = render_frame(&obs);
        assert_eq!(&png[1..4], b"PNG");
        let img = image::load_from_memory(&png).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (64, 48));
        assert_eq!(*img.get_pixel(15, 15), Rgb([110, 60, 40]));
        assert_eq!(*img.get_pixel(0, 0), Rgb([170, 200, 235]));
    }
}
