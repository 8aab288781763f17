//! Shared raster helpers: grid partitioning and RGB PNG I/O.

use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("expected an 8-bit RGB PNG, found {found}")]
    NotRgb8 { found: String },
}

/// Balanced partition of `total` samples into `parts` contiguous runs whose
/// sizes differ by at most one. Returns the half-open range of run `index`.
///
/// This is the single partition used for segmentation downsampling and for
/// elevation-zone patches, so cell (i, j) of both grids covers the same
/// footprint.
pub fn patch_bounds(index: usize, total: usize, parts: usize) -> (usize, usize) {
    debug_assert!(parts > 0 && index < parts);
    (index * total / parts, (index + 1) * total / parts)
}

/// Three-way sector split used for the nine-region grid partition. Larger
/// sectors come first: 32 splits as 11/11/10.
pub fn sector_bounds(index: usize, total: usize) -> (usize, usize) {
    debug_assert!(index < 3);
    let ceil_div = |a: usize| a.div_ceil(3);
    (ceil_div(index * total), ceil_div((index + 1) * total))
}

/// Load an 8-bit RGB PNG into a row-major pixel grid.
pub fn load_rgb8(path: &Path) -> Result<(usize, usize, Vec<[u8; 3]>), RasterError> {
    let img = image::ImageReader::open(path)?.decode()?;
    let rgb = match img {
        image::DynamicImage::ImageRgb8(buf) => buf,
        other => {
            return Err(RasterError::NotRgb8 {
                found: format!("{:?}", other.color()),
            })
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb.pixels().map(|p| [p.0[0], p.0[1], p.0[2]]).collect();
    Ok((w, h, pixels))
}

/// Save a row-major pixel grid as an 8-bit RGB PNG.
pub fn save_rgb8(
    path: &Path,
    width: usize,
    height: usize,
    pixels: &[[u8; 3]],
) -> Result<(), RasterError> {
    debug_assert_eq!(pixels.len(), width * height);
    let mut buf = image::RgbImage::new(width as u32, height as u32);
    for (i, px) in pixels.iter().enumerate() {
        let (x, y) = ((i % width) as u32, (i / width) as u32);
        buf.put_pixel(x, y, image::Rgb(*px));
    }
    buf.save(path)?;
    Ok(())
}

/// Squared Euclidean distance between two RGB colors.
pub fn color_distance_sq(a: [u8; 3], b: [u8; 3]) -> f64 {
    let d = |x: u8, y: u8| {
        let diff = f64::from(x) - f64::from(y);
        diff * diff
    };
    d(a[0], b[0]) + d(a[1], b[1]) + d(a[2], b[2])
}
