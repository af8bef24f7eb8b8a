//! Presence rasters: a cell is black when it contains a point, white otherwise.

use std::path::Path;

use ifs_core::PointSet;

/// The frame is the bounding box of the set, squared up in 2-D. A 1-D set
/// becomes a strip `size` wide and `size / 16` tall.
pub fn presence(set: &PointSet, size: u32) -> (Vec<u8>, u32, u32) {
    let size = size.max(1);
    let (lo, hi) = set.bounds();
    let cell = |v: f64, origin: f64, side: f64| -> u32 {
        let k = ((v - origin) / side * size as f64).floor();
        (k.max(0.0) as u32).min(size - 1)
    };
    match set.dim() {
        1 => {
            let height = (size / 16).max(1);
            let (origin, side) = frame(lo[0], hi[0], hi[0] - lo[0]);
            let mut columns = vec![false; size as usize];
            for p in set.iter() {
                columns[cell(p[0], origin, side) as usize] = true;
            }
            let row: Vec<u8> = columns.iter().map(|&c| if c { 0 } else { 255 }).collect();
            (row.repeat(height as usize), size, height)
        }
        _ => {
            let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
            let (ox, sx) = frame(lo[0], hi[0], side);
            let (oy, sy) = frame(lo[1], hi[1], side);
            let mut buf = vec![255u8; (size * size) as usize];
            for p in set.iter() {
                let col = cell(p[0], ox, sx);
                let row = size - 1 - cell(p[1], oy, sy);
                buf[(row * size + col) as usize] = 0;
            }
            (buf, size, size)
        }
    }
}

/// Origin and side of a window of width `side` centered on [lo, hi]; a
/// degenerate window gets width 1.
fn frame(lo: f64, hi: f64, side: f64) -> (f64, f64) {
    let side = if side > 0.0 { side } else { 1.0 };
    let mid = 0.5 * (lo + hi);
    (mid - 0.5 * side, side)
}

pub fn write_png(path: &Path, buf: &[u8], width: u32, height: u32) -> image::ImageResult<()> {
    image::save_buffer_with_format(path, buf, width, height, image::ExtendedColorType::L8, image::ImageFormat::Png)
}
