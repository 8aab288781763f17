//! The layout decoder: from a symbol matrix to per-class grayscale weight
//! masks an engine can blend.
//!
//! Four stages: binary mask per class at matrix resolution, nearest-neighbor
//! upscale, Gaussian edge blending with optional seeded value noise in the
//! transition band, and per-pixel renormalization so the masks form a
//! partition of unity. Classes are processed independently with per-class
//! noise seeds, so parallel execution is bit-identical to sequential.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::exec::{self, ExecMode};
use crate::layout::LayoutMatrix;
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("target resolution {requested} is below the source resolution {min}")]
    BadResolution { requested: usize, min: usize },
    #[error("pixel ({x}, {y}) has zero coverage across all masks")]
    ZeroCoverage { x: usize, y: usize },
    #[error("mask manifest lists {expected} classes but {found} mask files were read")]
    ManifestMismatch { expected: usize, found: usize },
    #[error("mask {path} is not a 16-bit grayscale PNG")]
    BadMaskFormat { path: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Per-class grayscale weight masks at a common square resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSet {
    classes: Vec<String>,
    resolution: usize,
    masks: Vec<Vec<f64>>,
}

impl MaskSet {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn mask(&self, class: &str) -> Option<&[f64]> {
        self.classes
            .iter()
            .position(|c| c == class)
            .map(|i| self.masks[i].as_slice())
    }

    pub fn mask_at(&self, index: usize) -> &[f64] {
        &self.masks[index]
    }

    /// Sum over classes at one pixel.
    pub fn coverage(&self, x: usize, y: usize) -> f64 {
        let i = y * self.resolution + x;
        self.masks.iter().map(|m| m[i]).sum()
    }

    /// Borrow one class's mask for sampling.
    pub fn view(&self, class: &str) -> Option<MaskView<'_>> {
        self.mask(class).map(|values| MaskView {
            resolution: self.resolution,
            values,
        })
    }

    /// Total mask mass of one class inside a pixel rectangle.
    pub fn mass_in(&self, class: &str, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let Some(m) = self.mask(class) else {
            return 0.0;
        };
        let mut sum = 0.0;
        for y in y0..y1 {
            for x in x0..x1 {
                sum += m[y * self.resolution + x];
            }
        }
        sum
    }
}

/// A borrowed single-class mask.
#[derive(Clone, Copy, Debug)]
pub struct MaskView<'a> {
    pub resolution: usize,
    pub values: &'a [f64],
}

impl MaskView<'_> {
    /// Mask value at a world position, with the mask spanning the square
    /// [0, world_size) on both axes.
    pub fn at_world(&self, x: f64, y: f64, world_size: f64) -> f64 {
        let to_px = |v: f64| {
            ((v / world_size * self.resolution as f64).floor() as isize)
                .clamp(0, self.resolution as isize - 1) as usize
        };
        self.values[to_px(y) * self.resolution + to_px(x)]
    }
}

/// Stage 1: one binary mask per class present in the layout (table order),
/// at matrix resolution. Exactly one mask is 1 at every pixel.
pub fn masks_from_layout(m: &LayoutMatrix) -> MaskSet {
    let p = m.size();
    let table = m.table();
    let mut class_indices: Vec<usize> = Vec::new();
    for &cell in m.cells() {
        let idx = usize::from(cell);
        if !class_indices.contains(&idx) {
            class_indices.push(idx);
        }
    }
    class_indices.sort_unstable();

    let classes: Vec<String> = class_indices
        .iter()
        .map(|&i| table.entry(i).asset_class.clone())
        .collect();
    let masks = class_indices
        .iter()
        .map(|&ci| {
            m.cells()
                .iter()
                .map(|&cell| if usize::from(cell) == ci { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    MaskSet {
        classes,
        resolution: p,
        masks,
    }
}

/// Stage 2: nearest-neighbor upscale. Source pixel of output pixel `i` is
/// `floor((i + 0.5) * src / dst)`; exact block replication when `dst` is a
/// multiple of `src`.
pub fn upscale_nearest(ms: &MaskSet, resolution: usize) -> Result<MaskSet, DecodeError> {
    let src = ms.resolution;
    if resolution < src {
        return Err(DecodeError::BadResolution {
            requested: resolution,
            min: src,
        });
    }
    let index_map: Vec<usize> = (0..resolution)
        .map(|i| (((i as f64 + 0.5) * src as f64 / resolution as f64).floor() as usize).min(src - 1))
        .collect();
    let masks = ms
        .masks
        .iter()
        .map(|m| {
            let mut out = Vec::with_capacity(resolution * resolution);
            for y in 0..resolution {
                let sy = index_map[y];
                let row = &m[sy * src..(sy + 1) * src];
                for x in 0..resolution {
                    out.push(row[index_map[x]]);
                }
            }
            out
        })
        .collect();
    Ok(MaskSet {
        classes: ms.classes.clone(),
        resolution,
        masks,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct BlendParams {
    /// Gaussian blur std-dev in pixels; 0 disables blurring.
    pub sigma_px: f64,
    /// Amplitude of the value noise added inside transition bands; 0 disables.
    pub noise_amp: f64,
    pub seed: u64,
    pub exec: ExecMode,
}

impl Default for BlendParams {
    fn default() -> Self {
        Self {
            sigma_px: 2.0,
            noise_amp: 0.05,
            seed: 0,
            exec: ExecMode::default(),
        }
    }
}

/// Stage 3: blur each mask with a Gaussian of std `sigma_px` (kernel radius
/// ceil(3 sigma), clamp-to-edge), then add band-limited value noise of the
/// given amplitude where the blurred mask is strictly between 0 and 1. Noise
/// is seeded per class by `derive(seed, class)`, so processing order cannot
/// change results. Output is clamped to [0, 1].
pub fn blend_edges(ms: &MaskSet, params: &BlendParams) -> MaskSet {
    if params.sigma_px <= 0.0 && params.noise_amp <= 0.0 {
        return ms.clone();
    }
    let res = ms.resolution;
    let kernel = gaussian_kernel(params.sigma_px);
    let masks = exec::map_indexed(params.exec, ms.masks.len(), |ci| {
        let mut m = if kernel.len() > 1 {
            blur_separable(&ms.masks[ci], res, &kernel, params.exec)
        } else {
            ms.masks[ci].clone()
        };
        if params.noise_amp > 0.0 {
            let class_seed = seed::derive(params.seed, &format!("noise.{}", ms.classes[ci]));
            let noise = ValueNoise::new(class_seed, NOISE_LATTICE_PX);
            exec::fill_rows(ExecMode::Sequential, &mut m, res, |y, row| {
                for (x, v) in row.iter_mut().enumerate() {
                    if *v > 0.0 && *v < 1.0 {
                        *v += params.noise_amp * noise.sample(x, y);
                    }
                }
            });
        }
        for v in m.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        m
    });
    MaskSet {
        classes: ms.classes.clone(),
        resolution: res,
        masks,
    }
}

/// Stage 4: divide each pixel by the per-pixel class sum so the set is a
/// partition of unity.
pub fn normalize_masks(ms: &MaskSet) -> Result<MaskSet, DecodeError> {
    let res = ms.resolution;
    let mut masks = ms.masks.clone();
    for y in 0..res {
        for x in 0..res {
            let i = y * res + x;
            let sum: f64 = masks.iter().map(|m| m[i]).sum();
            if sum <= 0.0 {
                return Err(DecodeError::ZeroCoverage { x, y });
            }
            for m in masks.iter_mut() {
                m[i] /= sum;
            }
        }
    }
    Ok(MaskSet {
        classes: ms.classes.clone(),
        resolution: res,
        masks,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DecodeParams {
    pub resolution: usize,
    pub sigma_px: f64,
    pub noise_amp: f64,
    pub seed: u64,
    pub exec: ExecMode,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            resolution: 512,
            sigma_px: 2.0,
            noise_amp: 0.05,
            seed: 0,
            exec: ExecMode::default(),
        }
    }
}

/// Run all four stages.
pub fn decode_layout(m: &LayoutMatrix, params: &DecodeParams) -> Result<MaskSet, DecodeError> {
    let binary = masks_from_layout(m);
    let scaled = upscale_nearest(&binary, params.resolution)?;
    let blended = blend_edges(
        &scaled,
        &BlendParams {
            sigma_px: params.sigma_px,
            noise_amp: params.noise_amp,
            seed: params.seed,
            exec: params.exec,
        },
    );
    normalize_masks(&blended)
}

const NOISE_LATTICE_PX: usize = 8;

/// Band-limited lattice value noise in [-1, 1]: hashed lattice values with
/// smoothstep bilinear interpolation.
struct ValueNoise {
    seed: u64,
    spacing: usize,
}

impl ValueNoise {
    fn new(seed: u64, spacing: usize) -> Self {
        Self { seed, spacing }
    }

    fn lattice(&self, gx: i64, gy: i64) -> f64 {
        let mut h = self.seed ^ (gx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= (gy as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
        (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn sample(&self, x: usize, y: usize) -> f64 {
        let fx = x as f64 / self.spacing as f64;
        let fy = y as f64 / self.spacing as f64;
        let gx = fx.floor() as i64;
        let gy = fy.floor() as i64;
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let tx = smooth(fx - gx as f64);
        let ty = smooth(fy - gy as f64);
        let v00 = self.lattice(gx, gy);
        let v10 = self.lattice(gx + 1, gy);
        let v01 = self.lattice(gx, gy + 1);
        let v11 = self.lattice(gx + 1, gy + 1);
        v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for w in kernel.iter_mut() {
        *w /= sum;
    }
    kernel
}

/// Separable convolution with clamp-to-edge handling.
fn blur_separable(mask: &[f64], res: usize, kernel: &[f64], exec_mode: ExecMode) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0f64; res * res];
    exec::fill_rows(exec_mode, &mut tmp, res, |y, row| {
        let src = &mask[y * res..(y + 1) * res];
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, w) in kernel.iter().enumerate() {
                let sx = (x as i64 + ki as i64 - radius).clamp(0, res as i64 - 1) as usize;
                acc += w * src[sx];
            }
            *out = acc;
        }
    });
    let mut out = vec![0.0f64; res * res];
    exec::fill_rows(exec_mode, &mut out, res, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, w) in kernel.iter().enumerate() {
                let sy = (y as i64 + ki as i64 - radius).clamp(0, res as i64 - 1) as usize;
                acc += w * tmp[sy * res + x];
            }
            *o = acc;
        }
    });
    out
}

// ---------------------------------------------------------------------------
// Export / import
// ---------------------------------------------------------------------------

pub const MASK_MANIFEST_FILE: &str = "masks.manifest.json";

/// Sidecar describing an exported mask set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskManifest {
    pub version: u32,
    pub classes: Vec<String>,
    pub resolution: usize,
    pub sigma_px: f64,
    pub noise_amp: f64,
    pub seed: u64,
    pub source_layout_hash: String,
}

impl MaskManifest {
    pub fn new(m: &LayoutMatrix, ms: &MaskSet, params: &DecodeParams) -> MaskManifest {
        MaskManifest {
            version: 1,
            classes: ms.classes.clone(),
            resolution: ms.resolution,
            sigma_px: params.sigma_px,
            noise_amp: params.noise_amp,
            seed: params.seed,
            source_layout_hash: m.content_hash(),
        }
    }
}

/// Write one 16-bit grayscale PNG per class (`<asset_class>.png`, values
/// `round(mask * 65535)`) plus the manifest json.
pub fn export_masks(ms: &MaskSet, manifest: &MaskManifest, dir: &Path) -> Result<(), DecodeError> {
    std::fs::create_dir_all(dir)?;
    for (ci, class) in ms.classes.iter().enumerate() {
        let mut buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
            ms.resolution as u32,
            ms.resolution as u32,
        );
        let mask = &ms.masks[ci];
        for (i, &v) in mask.iter().enumerate() {
            let (x, y) = ((i % ms.resolution) as u32, (i / ms.resolution) as u32);
            buf.put_pixel(x, y, image::Luma([(v * 65_535.0).round() as u16]));
        }
        buf.save(dir.join(format!("{class}.png")))?;
    }
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(dir.join(MASK_MANIFEST_FILE), json)?;
    Ok(())
}

/// Read back an exported mask set with its manifest.
pub fn import_masks(dir: &Path) -> Result<(MaskSet, MaskManifest), DecodeError> {
    let manifest: MaskManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join(MASK_MANIFEST_FILE))?)?;
    let mut masks = Vec::with_capacity(manifest.classes.len());
    for class in &manifest.classes {
        let path = dir.join(format!("{class}.png"));
        let img = image::ImageReader::open(&path)?.decode()?;
        let gray = match img {
            image::DynamicImage::ImageLuma16(buf) => buf,
            _ => {
                return Err(DecodeError::BadMaskFormat {
                    path: path.display().to_string(),
                })
            }
        };
        if gray.width() as usize != manifest.resolution
            || gray.height() as usize != manifest.resolution
        {
            return Err(DecodeError::BadMaskFormat {
                path: path.display().to_string(),
            });
        }
        masks.push(gray.pixels().map(|p| f64::from(p.0[0]) / 65_535.0).collect());
    }
    if masks.len() != manifest.classes.len() {
        return Err(DecodeError::ManifestMismatch {
            expected: manifest.classes.len(),
            found: masks.len(),
        });
    }
    Ok((
        MaskSet {
            classes: manifest.classes.clone(),
            resolution: manifest.resolution,
            masks,
        },
        manifest,
    ))
}
