//! Stroke sketches and their conversion to and from heightmaps.
//!
//! A sketch is a three-class raster: black strokes mark ridges, blue strokes
//! mark low-lying valleys, everything else is empty. The sketch-to-heightmap
//! path is a deterministic distance-field blend standing in for a learned
//! translator: it honors the same interface (stroke raster in, heightmap out,
//! ridges high and valleys low) without any training.
//!
//! The reverse path extracts strokes from a heightmap: valleys are the
//! high-accumulation drainage lines, ridges the drainage lines of the
//! inverted map, both thinned to one-pixel strokes.

use std::path::Path;

use crate::raster;

use super::{flow_accumulation, Heightmap, TerrainError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stroke {
    Empty,
    Ridge,
    Valley,
}

const RIDGE_COLOR: [u8; 3] = [0, 0, 0];
const VALLEY_COLOR: [u8; 3] = [0, 0, 255];
const EMPTY_COLOR: [u8; 3] = [255, 255, 255];

/// A stroke raster.
#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    width: usize,
    height: usize,
    strokes: Vec<Stroke>,
}

impl Sketch {
    pub fn new(width: usize, height: usize, strokes: Vec<Stroke>) -> Sketch {
        assert_eq!(strokes.len(), width * height);
        Sketch {
            width,
            height,
            strokes,
        }
    }

    pub fn empty(width: usize, height: usize) -> Sketch {
        Self::new(width, height, vec![Stroke::Empty; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Stroke {
        self.strokes[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, s: Stroke) {
        self.strokes[y * self.width + x] = s;
    }

    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }

    pub fn stroke_count(&self) -> usize {
        self.strokes.iter().filter(|s| **s != Stroke::Empty).count()
    }

    /// Decode from RGB: each pixel takes the nearest of black (ridge), blue
    /// (valley), or white (empty).
    pub fn from_rgb(width: usize, height: usize, pixels: &[[u8; 3]]) -> Sketch {
        let strokes = pixels
            .iter()
            .map(|&px| {
                let dr = raster::color_distance_sq(px, RIDGE_COLOR);
                let dv = raster::color_distance_sq(px, VALLEY_COLOR);
                let de = raster::color_distance_sq(px, EMPTY_COLOR);
                if dr <= dv && dr <= de {
                    Stroke::Ridge
                } else if dv <= de {
                    Stroke::Valley
                } else {
                    Stroke::Empty
                }
            })
            .collect();
        Sketch {
            width,
            height,
            strokes,
        }
    }

    pub fn load_png(path: &Path) -> Result<Sketch, TerrainError> {
        let (w, h, pixels) = raster::load_rgb8(path).map_err(io_from_raster)?;
        Ok(Self::from_rgb(w, h, &pixels))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), TerrainError> {
        let pixels: Vec<[u8; 3]> = self
            .strokes
            .iter()
            .map(|s| match s {
                Stroke::Ridge => RIDGE_COLOR,
                Stroke::Valley => VALLEY_COLOR,
                Stroke::Empty => EMPTY_COLOR,
            })
            .collect();
        raster::save_rgb8(path, self.width, self.height, &pixels).map_err(io_from_raster)
    }

    /// Rotate by clockwise quarter turns.
    pub fn rotated(&self, quarter_turns: u8) -> Sketch {
        let turns = quarter_turns % 4;
        let (w, h) = match turns {
            0 | 2 => (self.width, self.height),
            _ => (self.height, self.width),
        };
        let mut strokes = vec![Stroke::Empty; w * h];
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = match turns {
                    0 => (x, y),
                    1 => (y, self.height - 1 - x),
                    2 => (self.width - 1 - x, self.height - 1 - y),
                    _ => (self.width - 1 - y, x),
                };
                strokes[y * w + x] = self.strokes[sy * self.width + sx];
            }
        }
        Sketch {
            width: w,
            height: h,
            strokes,
        }
    }
}

fn io_from_raster(e: raster::RasterError) -> TerrainError {
    match e {
        raster::RasterError::Io(io) => TerrainError::Io(io),
        raster::RasterError::Image(img) => TerrainError::Image(img),
        raster::RasterError::NotRgb8 { found } => TerrainError::BadBitDepth { found },
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SketchParams {
    /// Elevation assigned at valley strokes.
    pub low: u16,
    /// Elevation assigned at ridge strokes.
    pub high: u16,
    /// Optional smoothing pass after the blend.
    pub erode_iterations: u32,
    pub erode_talus: f64,
}

impl Default for SketchParams {
    fn default() -> Self {
        Self {
            low: 0,
            high: 65_535,
            erode_iterations: 0,
            erode_talus: 64.0,
        }
    }
}

/// Distance-field interpolation from strokes to elevation.
///
/// With both stroke kinds present, each pixel blends between the high and low
/// anchors by inverse distance: weight = d_valley / (d_ridge + d_valley), so
/// ridge pixels sit exactly at `high` and valley pixels at `low`. With a
/// single stroke kind, elevation ramps linearly from the stroke to the
/// farthest pixel.
pub fn sketch_to_heightmap(s: &Sketch, params: &SketchParams) -> Result<Heightmap, TerrainError> {
    if s.stroke_count() == 0 {
        return Err(TerrainError::EmptySketch);
    }
    let (w, h) = (s.width, s.height);
    let ridge: Vec<bool> = s.strokes.iter().map(|x| *x == Stroke::Ridge).collect();
    let valley: Vec<bool> = s.strokes.iter().map(|x| *x == Stroke::Valley).collect();
    let has_ridge = ridge.iter().any(|&b| b);
    let has_valley = valley.iter().any(|&b| b);

    let low = f64::from(params.low.min(params.high));
    let high = f64::from(params.high.max(params.low));
    let span = high - low;

    let weights: Vec<f64> = if has_ridge && has_valley {
        let dr = distance_transform(&ridge, w, h);
        let dv = distance_transform(&valley, w, h);
        dr.iter()
            .zip(&dv)
            .map(|(&r, &v)| {
                let (r, v) = (r.sqrt(), v.sqrt());
                if r + v == 0.0 {
                    1.0
                } else {
                    v / (r + v)
                }
            })
            .collect()
    } else if has_ridge {
        let dr = distance_transform(&ridge, w, h);
        let dmax = dr.iter().cloned().fold(0.0f64, f64::max).sqrt();
        dr.iter()
            .map(|&r| if dmax == 0.0 { 1.0 } else { 1.0 - r.sqrt() / dmax })
            .collect()
    } else {
        let dv = distance_transform(&valley, w, h);
        let dmax = dv.iter().cloned().fold(0.0f64, f64::max).sqrt();
        dv.iter()
            .map(|&v| if dmax == 0.0 { 0.0 } else { v.sqrt() / dmax })
            .collect()
    };

    let values: Vec<u16> = weights
        .iter()
        .map(|&wt| (low + span * wt).round().clamp(0.0, 65_535.0) as u16)
        .collect();
    let map = Heightmap::new(w, h, values, 1.0)?;
    if params.erode_iterations == 0 {
        Ok(map)
    } else {
        Ok(super::erode(
            &map,
            &super::ErodeParams {
                iterations: params.erode_iterations,
                talus: params.erode_talus,
                ..super::ErodeParams::default()
            },
        )
        .heightmap)
    }
}

/// Exact squared Euclidean distance transform (two-pass 1D parabola method).
fn distance_transform(mask: &[bool], w: usize, h: usize) -> Vec<f64> {
    const INF: f64 = 1e18;
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { INF }).collect();

    // Columns.
    let mut col = vec![0.0f64; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        let d = dt_1d(&col);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    // Rows.
    let mut row = vec![0.0f64; w];
    for y in 0..h {
        row.copy_from_slice(&grid[y * w..(y + 1) * w]);
        let d = dt_1d(&row);
        grid[y * w..(y + 1) * w].copy_from_slice(&d);
    }
    grid
}

fn dt_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0f64; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -1e20;
    z[1] = 1e20;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = 1e20;
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        d[q] = dq * dq + f[p];
    }
    d
}

/// Extract ridge and valley strokes from a heightmap.
///
/// Valleys are cells whose flow accumulation exceeds the `valley_q` quantile;
/// ridges are cells whose accumulation on the inverted map exceeds the
/// `ridge_q` quantile. Both stroke masks are thinned to one-pixel lines;
/// where a cell qualifies as both, the valley wins.
pub fn extract_sketch(h: &Heightmap, ridge_q: f64, valley_q: f64) -> Result<Sketch, TerrainError> {
    assert!(
        0.0 < valley_q && valley_q < ridge_q && ridge_q < 1.0,
        "quantiles must satisfy 0 < valley_q < ridge_q < 1"
    );
    let values = h.values();
    let min = *values.iter().min().expect("non-empty");
    let max = *values.iter().max().expect("non-empty");
    if min == max {
        return Err(TerrainError::DegenerateRelief);
    }
    let (w, hh) = (h.width(), h.height());

    let acc_valley = flow_accumulation(h);
    let inverted = Heightmap::new(
        w,
        hh,
        values.iter().map(|&v| 65_535 - v).collect(),
        h.meters_per_pixel,
    )?;
    let acc_ridge = flow_accumulation(&inverted);

    let thr_valley = quantile(&acc_valley, valley_q);
    let thr_ridge = quantile(&acc_ridge, ridge_q);

    let valley_mask: Vec<bool> = acc_valley.iter().map(|&a| a > thr_valley).collect();
    let ridge_mask: Vec<bool> = acc_ridge.iter().map(|&a| a > thr_ridge).collect();
    let valley_thin = skeletonize(&valley_mask, w, hh);
    let ridge_thin = skeletonize(&ridge_mask, w, hh);

    let strokes = (0..w * hh)
        .map(|i| {
            if valley_thin[i] {
                Stroke::Valley
            } else if ridge_thin[i] {
                Stroke::Ridge
            } else {
                Stroke::Empty
            }
        })
        .collect();
    Ok(Sketch {
        width: w,
        height: hh,
        strokes,
    })
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((sorted.len() - 1) as f64 * q).floor() as usize;
    sorted[idx]
}

/// Zhang–Suen thinning to one-pixel strokes.
fn skeletonize(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut img = mask.to_vec();
    let at = |img: &[bool], x: isize, y: isize| -> bool {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            false
        } else {
            img[y as usize * w + x as usize]
        }
    };
    loop {
        let mut changed = false;
        for phase in 0..2 {
            let mut remove = Vec::new();
            for y in 0..h as isize {
                for x in 0..w as isize {
                    if !at(&img, x, y) {
                        continue;
                    }
                    // Neighbors p2..p9 clockwise from north.
                    let p = [
                        at(&img, x, y - 1),
                        at(&img, x + 1, y - 1),
                        at(&img, x + 1, y),
                        at(&img, x + 1, y + 1),
                        at(&img, x, y + 1),
                        at(&img, x - 1, y + 1),
                        at(&img, x - 1, y),
                        at(&img, x - 1, y - 1),
                    ];
                    let b: usize = p.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let mut a = 0;
                    for i in 0..8 {
                        if !p[i] && p[(i + 1) % 8] {
                            a += 1;
                        }
                    }
                    if a != 1 {
                        continue;
                    }
                    let (c1, c2) = if phase == 0 {
                        (p[0] && p[2] && p[4], p[2] && p[4] && p[6])
                    } else {
                        (p[0] && p[2] && p[6], p[0] && p[4] && p[6])
                    };
                    if !c1 && !c2 {
                        remove.push((x as usize, y as usize));
                    }
                }
            }
            if !remove.is_empty() {
                changed = true;
                for (x, y) in remove {
                    img[y * w + x] = false;
                }
            }
        }
        if !changed {
            return img;
        }
    }
}
