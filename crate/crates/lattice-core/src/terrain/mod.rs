//! Heightmap I/O and analysis, plus the dataset-side terrain operators:
//! D8 flow accumulation, thermal erosion, and the deterministic
//! sketch-to-heightmap substitute.
//!
//! Elevation is stored as 16-bit values in [0, 65535]; `meters_per_pixel` is
//! carried as metadata only (no geo-referencing). Gradient directions use the
//! downhill convention: a map descending toward the east reports `East`.

mod erosion;
mod flow;
mod sketch;

pub use erosion::{erode, ErodeParams, ErosionOutcome};
pub use flow::{flow_accumulation, flow_field, FlowField};
pub use sketch::{extract_sketch, sketch_to_heightmap, Sketch, SketchParams, Stroke};

use std::path::Path;

use serde::Serialize;

use crate::raster::patch_bounds;

#[derive(Debug, thiserror::Error)]
pub enum TerrainError {
    #[error("expected a 16-bit grayscale PNG, found {found}")]
    BadBitDepth { found: String },
    #[error("heightmap {width}x{height} is smaller than 2x2")]
    BadDimensions { width: usize, height: usize },
    #[error("dimensions {width}x{height} do not match {expected} values")]
    LengthMismatch {
        width: usize,
        height: usize,
        expected: usize,
    },
    #[error("sketch contains no stroke pixels")]
    EmptySketch,
    #[error("relief is degenerate (max elevation equals min)")]
    DegenerateRelief,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

/// Default elevation-zone thresholds out of 65535.
pub const DEFAULT_ZONE_THRESHOLDS: (u16, u16) = (20_000, 45_000);

/// A 16-bit elevation raster.
///
/// In-memory grids only need to be non-empty (degenerate 1×N ramps are valid
/// analysis inputs); the PNG load path enforces the 2×2 minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct Heightmap {
    width: usize,
    height: usize,
    values: Vec<u16>,
    pub meters_per_pixel: f64,
}

impl Heightmap {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<u16>,
        meters_per_pixel: f64,
    ) -> Result<Self, TerrainError> {
        if width == 0 || height == 0 {
            return Err(TerrainError::BadDimensions { width, height });
        }
        if values.len() != width * height {
            return Err(TerrainError::LengthMismatch {
                width,
                height,
                expected: width * height,
            });
        }
        Ok(Self {
            width,
            height,
            values,
            meters_per_pixel,
        })
    }

    /// Constant-elevation map.
    pub fn flat(width: usize, height: usize, value: u16) -> Heightmap {
        Self::new(width, height, vec![value; width * height], 1.0)
            .expect("flat map dimensions are positive")
    }

    /// Load a 16-bit grayscale PNG. Anything else is [`TerrainError::BadBitDepth`];
    /// maps smaller than 2×2 are [`TerrainError::BadDimensions`].
    pub fn load(path: &Path) -> Result<Self, TerrainError> {
        let img = image::ImageReader::open(path)?.decode()?;
        let gray = match img {
            image::DynamicImage::ImageLuma16(buf) => buf,
            other => {
                return Err(TerrainError::BadBitDepth {
                    found: format!("{:?}", other.color()),
                })
            }
        };
        let (width, height) = (gray.width() as usize, gray.height() as usize);
        if width < 2 || height < 2 {
            return Err(TerrainError::BadDimensions { width, height });
        }
        let values = gray.pixels().map(|p| p.0[0]).collect();
        Ok(Self {
            width,
            height,
            values,
            meters_per_pixel: 1.0,
        })
    }

    /// Save as a 16-bit grayscale PNG. Lossless: `load(save(h)) == h`.
    pub fn save(&self, path: &Path) -> Result<(), TerrainError> {
        let mut buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
            self.width as u32,
            self.height as u32,
        );
        for (i, v) in self.values.iter().enumerate() {
            let (x, y) = ((i % self.width) as u32, (i / self.width) as u32);
            buf.put_pixel(x, y, image::Luma([*v]));
        }
        buf.save(path)?;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.values[y * self.width + x]
    }

    /// Total elevation mass (sum of all values).
    pub fn mass(&self) -> u64 {
        self.values.iter().map(|&v| u64::from(v)).sum()
    }

    /// Bilinear sample at fractional pixel coordinates (clamped to edges).
    pub fn sample_bilinear(&self, fx: f64, fy: f64) -> f64 {
        let clamp = |v: f64, hi: usize| v.max(0.0).min((hi - 1) as f64);
        let fx = clamp(fx, self.width);
        let fy = clamp(fy, self.height);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let v00 = f64::from(self.get(x0, y0));
        let v10 = f64::from(self.get(x1, y0));
        let v01 = f64::from(self.get(x0, y1));
        let v11 = f64::from(self.get(x1, y1));
        v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty
    }

    /// Rotate by clockwise quarter turns.
    pub fn rotated(&self, quarter_turns: u8) -> Heightmap {
        let turns = quarter_turns % 4;
        let (w, h) = match turns {
            0 | 2 => (self.width, self.height),
            _ => (self.height, self.width),
        };
        let mut values = vec![0u16; w * h];
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = match turns {
                    0 => (x, y),
                    1 => (y, self.height - 1 - x),
                    2 => (self.width - 1 - x, self.height - 1 - y),
                    _ => (self.width - 1 - y, x),
                };
                values[y * w + x] = self.values[sy * self.width + sx];
            }
        }
        Heightmap {
            width: w,
            height: h,
            values,
            meters_per_pixel: self.meters_per_pixel,
        }
    }

    /// Patch-average to a `p`×`p` grid (the same partition as layout
    /// downsampling) and classify each patch mean against the thresholds.
    ///
    /// Panics if `thresholds` is not strictly increasing; callers validate
    /// user input before reaching this point.
    pub fn zones(&self, p: usize, thresholds: (u16, u16)) -> ZoneGrid {
        assert!(
            thresholds.0 < thresholds.1,
            "zone thresholds must be strictly increasing"
        );
        let mut zones = Vec::with_capacity(p * p);
        for pr in 0..p {
            let (y0, y1) = patch_bounds(pr, self.height, p);
            for pc in 0..p {
                let (x0, x1) = patch_bounds(pc, self.width, p);
                let mut sum = 0.0f64;
                let mut n = 0usize;
                for y in y0..y1 {
                    for x in x0..x1 {
                        sum += f64::from(self.get(x, y));
                        n += 1;
                    }
                }
                let mean = if n == 0 { 0.0 } else { sum / n as f64 };
                let zone = if mean < f64::from(thresholds.0) {
                    Zone::Low
                } else if mean < f64::from(thresholds.1) {
                    Zone::Mid
                } else {
                    Zone::High
                };
                zones.push(zone);
            }
        }
        ZoneGrid { p, zones }
    }

    /// Statistics used for terrain captions: extrema, mean, dominant downhill
    /// direction, and a 3×3 grid of relief classes.
    pub fn summary(&self) -> TerrainSummary {
        let mut min = u16::MAX;
        let mut max = u16::MIN;
        let mut sum = 0.0f64;
        for &v in &self.values {
            min = min.min(v);
            max = max.max(v);
            sum += f64::from(v);
        }
        let mean = sum / self.values.len() as f64;

        // Mean gradient via central differences (one-sided at borders).
        let mut gx_sum = 0.0f64;
        let mut gy_sum = 0.0f64;
        if self.width >= 2 && self.height >= 2 {
            for y in 0..self.height {
                for x in 0..self.width {
                    gx_sum += self.gradient_x(x, y);
                    gy_sum += self.gradient_y(x, y);
                }
            }
        }
        let n = self.values.len() as f64;
        // Downhill is the negated gradient.
        let dominant_gradient = Compass::from_vector(-gx_sum / n, -gy_sum / n);

        let mut relief = [ReliefClass::Flat; 9];
        for sy in 0..3 {
            let (y0, y1) = crate::raster::sector_bounds(sy, self.height);
            for sx in 0..3 {
                let (x0, x1) = crate::raster::sector_bounds(sx, self.width);
                let mut lo = u16::MAX;
                let mut hi = u16::MIN;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let v = self.get(x, y);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                let span = if hi >= lo { u32::from(hi - lo) } else { 0 };
                relief[sy * 3 + sx] = ReliefClass::from_span(span);
            }
        }

        TerrainSummary {
            min,
            max,
            mean,
            dominant_gradient,
            relief,
        }
    }

    fn gradient_x(&self, x: usize, y: usize) -> f64 {
        let v = |x: usize, y: usize| f64::from(self.get(x, y));
        if self.width < 2 {
            0.0
        } else if x == 0 {
            v(1, y) - v(0, y)
        } else if x == self.width - 1 {
            v(x, y) - v(x - 1, y)
        } else {
            (v(x + 1, y) - v(x - 1, y)) / 2.0
        }
    }

    fn gradient_y(&self, x: usize, y: usize) -> f64 {
        let v = |x: usize, y: usize| f64::from(self.get(x, y));
        if self.height < 2 {
            0.0
        } else if y == 0 {
            v(x, 1) - v(x, 0)
        } else if y == self.height - 1 {
            v(x, y) - v(x, y - 1)
        } else {
            (v(x, y + 1) - v(x, y - 1)) / 2.0
        }
    }
}

/// Elevation zone label for one layout-aligned patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Low,
    Mid,
    High,
}

/// `p`×`p` grid of elevation zones, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ZoneGrid {
    p: usize,
    zones: Vec<Zone>,
}

impl ZoneGrid {
    pub fn uniform(p: usize, zone: Zone) -> ZoneGrid {
        ZoneGrid {
            p,
            zones: vec![zone; p * p],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, row: usize, col: usize) -> Zone {
        self.zones[row * self.p + col]
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }
}

/// Eight-way compass direction (image convention: north is up, y grows down).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Compass {
    North,
    NorthEast,
    East,
    SouthEast,
    South,
    SouthWest,
    West,
    NorthWest,
}

impl Compass {
    /// Bucket a vector into one of eight directions; `None` for a vanishing
    /// vector (flat terrain).
    pub fn from_vector(dx: f64, dy: f64) -> Option<Compass> {
        if (dx * dx + dy * dy).sqrt() < 1e-9 {
            return None;
        }
        let angle = dy.atan2(dx).to_degrees(); // 0 = east, 90 = south (y down)
        let sector = ((angle + 382.5) / 45.0) as usize % 8; // +360 +22.5
        Some(
            [
                Compass::East,
                Compass::SouthEast,
                Compass::South,
                Compass::SouthWest,
                Compass::West,
                Compass::NorthWest,
                Compass::North,
                Compass::NorthEast,
            ][sector],
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            Compass::North => "north",
            Compass::NorthEast => "north-east",
            Compass::East => "east",
            Compass::SouthEast => "south-east",
            Compass::South => "south",
            Compass::SouthWest => "south-west",
            Compass::West => "west",
            Compass::NorthWest => "north-west",
        }
    }
}

/// Relief class of one 3×3 macro-cell, from its elevation span.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReliefClass {
    Flat,
    Gentle,
    Moderate,
    Steep,
}

impl ReliefClass {
    fn from_span(span: u32) -> ReliefClass {
        // Spans as a fraction of the full 16-bit range: 1%, 10%, 30%.
        if span < 655 {
            ReliefClass::Flat
        } else if span < 6554 {
            ReliefClass::Gentle
        } else if span < 19_661 {
            ReliefClass::Moderate
        } else {
            ReliefClass::Steep
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ReliefClass::Flat => "flat",
            ReliefClass::Gentle => "gentle",
            ReliefClass::Moderate => "moderate",
            ReliefClass::Steep => "steep",
        }
    }
}

/// Deterministic terrain features backing heightmap captions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TerrainSummary {
    pub min: u16,
    pub max: u16,
    pub mean: f64,
    /// Dominant downhill direction; `None` when flat.
    pub dominant_gradient: Option<Compass>,
    /// Relief classes for the 3×3 macro-cell grid, row-major.
    pub relief: [ReliefClass; 9],
}
