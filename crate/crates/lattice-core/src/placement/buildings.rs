//! Building placement: greedy seeded best-candidate insertion under minimum
//! spacing, slope, and mask constraints.
//!
//! Sites are accepted only where the building mask reaches 0.5, the local
//! slope stays under `slope_max_deg`, and every previously accepted building
//! is at least `d_min_m` away. Each insertion samples a batch of candidates
//! and keeps the one farthest from the existing set (best-candidate), which
//! spreads buildings without a relaxation pass. Yaw faces a road when one is
//! 8-adjacent to the site's layout cell, otherwise downhill, plus a uniform
//! jitter. `d_max_m` is checked as a nearest-neighbor warning, not a hard
//! constraint.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decoder::MaskView;
use crate::terrain::Heightmap;

use super::{Instance, InstanceKind, PlacementError, WorldParams};

#[derive(Clone, Debug)]
pub struct BuildingRules {
    pub d_min_m: f64,
    /// Nearest-neighbor distance beyond which a building is flagged as
    /// isolated (warning only).
    pub d_max_m: f64,
    pub slope_max_deg: f64,
    pub yaw_jitter_deg: f64,
    /// Stop after this many buildings; `None` lets the caller derive one.
    pub target_count: Option<usize>,
    /// Candidate draws per insertion before giving up.
    pub candidate_tries: usize,
    /// Feasible candidates gathered per insertion (the farthest one wins).
    pub best_of: usize,
    pub scale: f64,
}

impl Default for BuildingRules {
    fn default() -> Self {
        Self {
            d_min_m: 15.0,
            d_max_m: 60.0,
            slope_max_deg: 15.0,
            yaw_jitter_deg: 15.0,
            target_count: None,
            candidate_tries: 64,
            best_of: 8,
            scale: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BuildingOutcome {
    pub instances: Vec<Instance>,
    pub isolation_warnings: Vec<String>,
}

/// Uniform-grid index over accepted sites for d_min lookups.
struct SpatialGrid {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl SpatialGrid {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            map: HashMap::new(),
        }
    }

    fn key(&self, p: (f64, f64)) -> (i64, i64) {
        ((p.0 / self.cell).floor() as i64, (p.1 / self.cell).floor() as i64)
    }

    fn insert(&mut self, idx: usize, p: (f64, f64)) {
        self.map.entry(self.key(p)).or_default().push(idx);
    }

    /// Minimum distance from `p` to any site within `radius` (cells scanned
    /// conservatively); `f64::INFINITY` when none is near.
    fn min_dist_within(&self, p: (f64, f64), radius: f64, sites: &[(f64, f64)]) -> f64 {
        let r_cells = (radius / self.cell).ceil() as i64;
        let (kx, ky) = self.key(p);
        let mut best = f64::INFINITY;
        for dy in -r_cells..=r_cells {
            for dx in -r_cells..=r_cells {
                if let Some(bucket) = self.map.get(&(kx + dx, ky + dy)) {
                    for &i in bucket {
                        let (sx, sy) = sites[i];
                        let d = ((p.0 - sx).powi(2) + (p.1 - sy).powi(2)).sqrt();
                        best = best.min(d);
                    }
                }
            }
        }
        best
    }
}

pub fn place_buildings(
    class: &str,
    mask: MaskView<'_>,
    heightmap: &Heightmap,
    layout: Option<&crate::layout::LayoutMatrix>,
    rules: &BuildingRules,
    world: &WorldParams,
    seed: u64,
) -> Result<BuildingOutcome, PlacementError> {
    if !(rules.d_min_m > 0.0) || rules.d_min_m >= rules.d_max_m {
        return Err(PlacementError::InfeasibleRules(format!(
            "d_min {} must be positive and below d_max {}",
            rules.d_min_m, rules.d_max_m
        )));
    }
    let world_extent = world.world_size_m * std::f64::consts::SQRT_2;
    if rules.d_min_m > world_extent {
        return Err(PlacementError::InfeasibleRules(format!(
            "d_min {} exceeds the world extent {world_extent:.1}",
            rules.d_min_m
        )));
    }

    // Candidates are drawn from the mask support (pixels at or above 0.5),
    // so a small building district saturates properly instead of being
    // starved by darts landing elsewhere.
    let support: Vec<u32> = mask
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= 0.5)
        .map(|(i, _)| i as u32)
        .collect();
    let px_m = world.world_size_m / mask.resolution as f64;

    let target = rules.target_count.unwrap_or(usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites: Vec<(f64, f64)> = Vec::new();
    let mut grid = SpatialGrid::new(rules.d_min_m);

    while sites.len() < target && !support.is_empty() {
        let mut batch: Vec<((f64, f64), f64)> = Vec::new(); // (pos, min dist)
        for _ in 0..rules.candidate_tries {
            let pixel = support[rng.random_range(0..support.len())] as usize;
            let jx: f64 = rng.random();
            let jy: f64 = rng.random();
            let x = ((pixel % mask.resolution) as f64 + jx) * px_m;
            let y = ((pixel / mask.resolution) as f64 + jy) * px_m;
            let (slope_deg, _) = world.slope_at(heightmap, x, y);
            if slope_deg > rules.slope_max_deg {
                continue;
            }
            let min_dist = grid.min_dist_within((x, y), rules.d_min_m, &sites);
            if min_dist < rules.d_min_m {
                continue;
            }
            batch.push(((x, y), min_dist));
            if batch.len() >= rules.best_of {
                break;
            }
        }
        let Some(&(pos, _)) = batch
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("distances are finite or inf"))
        else {
            break;
        };
        grid.insert(sites.len(), pos);
        sites.push(pos);
    }

    // Orientation pass, one jitter draw per accepted site.
    let mut instances = Vec::with_capacity(sites.len());
    for &(x, y) in &sites {
        let base_yaw = road_facing_yaw(layout, world, x, y).unwrap_or_else(|| {
            let (slope_deg, downhill) = world.slope_at(heightmap, x, y);
            if slope_deg > 1e-6 {
                downhill
            } else {
                0.0
            }
        });
        let jitter = rng.random_range(-rules.yaw_jitter_deg..=rules.yaw_jitter_deg);
        instances.push(Instance {
            kind: InstanceKind::Building,
            class: class.to_string(),
            position: [x, y],
            elevation_m: world.elevation_at(heightmap, x, y),
            orientation: [0.0, (base_yaw + jitter).rem_euclid(360.0), 0.0],
            scale: rules.scale,
            state: None,
        });
    }

    // Nearest-neighbor isolation pass.
    let mut isolation_warnings = Vec::new();
    if sites.len() > 1 {
        for (i, &(x, y)) in sites.iter().enumerate() {
            let mut nn = f64::INFINITY;
            for (j, &(ox, oy)) in sites.iter().enumerate() {
                if i != j {
                    nn = nn.min(((x - ox).powi(2) + (y - oy).powi(2)).sqrt());
                }
            }
            if nn > rules.d_max_m {
                isolation_warnings.push(format!(
                    "building {i} at ({x:.1}, {y:.1}) is isolated: nearest neighbor {nn:.1} m > d_max {} m",
                    rules.d_max_m
                ));
            }
        }
    }

    Ok(BuildingOutcome {
        instances,
        isolation_warnings,
    })
}

/// Yaw toward the first road cell 8-adjacent to the site's layout cell.
fn road_facing_yaw(
    layout: Option<&crate::layout::LayoutMatrix>,
    world: &WorldParams,
    x: f64,
    y: f64,
) -> Option<f64> {
    let m = layout?;
    let road = m.table().index_of_class("road")?;
    let p = m.size();
    let cell_m = world.world_size_m / p as f64;
    let col = ((x / cell_m).floor() as isize).clamp(0, p as isize - 1);
    let row = ((y / cell_m).floor() as isize).clamp(0, p as isize - 1);
    const NEIGHBORS: [(isize, isize); 8] = [
        (-1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
        (1, 0),
        (1, -1),
        (0, -1),
        (-1, -1),
    ];
    for (dr, dc) in NEIGHBORS {
        let (nr, nc) = (row + dr, col + dc);
        if nr < 0 || nc < 0 || nr >= p as isize || nc >= p as isize {
            continue;
        }
        if usize::from(m.cell(nr as usize, nc as usize)) == road {
            let cx = (nc as f64 + 0.5) * cell_m;
            let cy = (nr as f64 + 0.5) * cell_m;
            return Some((cy - y).atan2(cx - x).to_degrees().rem_euclid(360.0));
        }
    }
    None
}
