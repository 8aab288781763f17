//! Dataset construction: tiling source rasters, deriving symbolic matrices,
//! sketches, and eroded heightmaps, assembling caption prompts, sampling
//! configurations, and exporting everything as a JSONL-indexed file tree.
//!
//! Records with a DEM carry a sketch and an eroded heightmap (wilderness
//! style); records without one carry the flat-zero marker (fixed-height
//! style). Caption slots stay empty until an external annotator response is
//! attached — the forge never fabricates them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bridge::{build_caption_prompt, CaptionPayload, PromptBundle, PromptTask};
use crate::config::{
    check_consistency, expand_coarse_to_fine, AgentSpec, ArtisticStyle, CoarseAttributes,
    ConfigError, EnvironmentConfig, Region, RuleTable, Season, TerrainType, TimeOfDay, Weather,
};
use crate::exec::{self, ExecMode};
use crate::layout::{LayoutError, LayoutMatrix, SegmentationRaster, SymbolTable};
use crate::seed;
use crate::terrain::{
    erode, extract_sketch, ErodeParams, Heightmap, Sketch, TerrainError, ZoneGrid,
    DEFAULT_ZONE_THRESHOLDS,
};

use rand::Rng;

pub const INDEX_FILE: &str = "index.jsonl";
pub const FLAT_ZERO_MARKER: &str = "flat_zero";

#[derive(Debug, thiserror::Error)]
pub enum ForgeError {
    #[error("source {width}x{height} is smaller than one {tile_px}px tile")]
    TooSmall {
        width: usize,
        height: usize,
        tile_px: usize,
    },
    #[error("segmentation {seg_w}x{seg_h} and DEM {dem_w}x{dem_h} dimensions differ")]
    DemMismatch {
        seg_w: usize,
        seg_h: usize,
        dem_w: usize,
        dem_h: usize,
    },
    #[error("record {id}: {detail}")]
    Record { id: String, detail: String },
    #[error("unknown symbol table '{0}' (index records resolve built-in tables)")]
    UnknownTable(String),
    #[error("caption rejected: {0}")]
    BadCaption(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One source tile: a segmentation patch and, in wilderness style, the
/// matching DEM patch.
#[derive(Clone, Debug)]
pub struct Tile {
    pub seg: SegmentationRaster,
    pub dem: Option<Heightmap>,
}

/// Cut a source raster (and its DEM, when present) into non-overlapping
/// `tile_px` tiles, row-major. Partial edge tiles are dropped: padding would
/// distort downsampling statistics.
pub fn tile_source(
    seg: &SegmentationRaster,
    dem: Option<&Heightmap>,
    tile_px: usize,
) -> Result<Vec<Tile>, ForgeError> {
    if seg.width() < tile_px || seg.height() < tile_px {
        return Err(ForgeError::TooSmall {
            width: seg.width(),
            height: seg.height(),
            tile_px,
        });
    }
    if let Some(d) = dem {
        if d.width() != seg.width() || d.height() != seg.height() {
            return Err(ForgeError::DemMismatch {
                seg_w: seg.width(),
                seg_h: seg.height(),
                dem_w: d.width(),
                dem_h: d.height(),
            });
        }
    }
    let cols = seg.width() / tile_px;
    let rows = seg.height() / tile_px;
    let mut tiles = Vec::with_capacity(rows * cols);
    for ty in 0..rows {
        for tx in 0..cols {
            let mut pixels = Vec::with_capacity(tile_px * tile_px);
            for y in 0..tile_px {
                for x in 0..tile_px {
                    pixels.push(seg.pixel(tx * tile_px + x, ty * tile_px + y));
                }
            }
            let seg_tile =
                SegmentationRaster::new(tile_px, tile_px, pixels, seg.table().clone());
            let dem_tile = dem.map(|d| {
                let mut values = Vec::with_capacity(tile_px * tile_px);
                for y in 0..tile_px {
                    for x in 0..tile_px {
                        values.push(d.get(tx * tile_px + x, ty * tile_px + y));
                    }
                }
                Heightmap::new(tile_px, tile_px, values, d.meters_per_pixel)
                    .expect("tile dimensions are positive")
            });
            tiles.push(Tile {
                seg: seg_tile,
                dem: dem_tile,
            });
        }
    }
    Ok(tiles)
}

/// Elevation source of a record.
#[derive(Clone, Debug, PartialEq)]
pub enum HeightSource {
    /// Fixed-height record: every elevation value is zero.
    FlatZero,
    Map(Heightmap),
}

impl HeightSource {
    pub fn to_heightmap(&self, p: usize) -> Heightmap {
        match self {
            HeightSource::FlatZero => Heightmap::flat(p.max(2), p.max(2), 0),
            HeightSource::Map(h) => h.clone(),
        }
    }
}

/// One dataset record with its in-memory assets.
#[derive(Clone, Debug, PartialEq)]
pub struct ForgedRecord {
    pub id: String,
    pub matrix: LayoutMatrix,
    pub seg: SegmentationRaster,
    pub height: HeightSource,
    pub sketch: Option<Sketch>,
    pub layout_caption: Option<String>,
    pub terrain_caption: Option<String>,
    pub config: Option<EnvironmentConfig>,
    pub rotation: u8,
    pub prompts: Vec<PromptBundle>,
}

#[derive(Clone, Debug)]
pub struct ForgeOptions {
    /// Matrix side length.
    pub p: usize,
    /// Rotation set; four quarter turns by default.
    pub rotations: Vec<u8>,
    pub erode_iterations: u32,
    pub erode_talus: f64,
    pub ridge_q: f64,
    pub valley_q: f64,
    /// Sample one configuration per record.
    pub with_configs: bool,
    pub id_prefix: String,
    pub seed: u64,
    pub exec: ExecMode,
}

impl Default for ForgeOptions {
    fn default() -> Self {
        Self {
            p: 32,
            rotations: vec![0, 1, 2, 3],
            erode_iterations: 12,
            erode_talus: 96.0,
            ridge_q: 0.95,
            valley_q: 0.9,
            with_configs: true,
            id_prefix: String::new(),
            seed: 0,
            exec: ExecMode::default(),
        }
    }
}

/// Forge one record per tile and rotation. Matrices under rotation `k` are
/// exactly `rotate(base, k)`; rasters are rotated to match. Tile work is
/// independent, with per-tile seeds, so parallel forging equals sequential.
pub fn forge_records(
    tiles: &[Tile],
    rules: &RuleTable,
    opts: &ForgeOptions,
) -> Result<Vec<ForgedRecord>, ForgeError> {
    let per_tile: Vec<Result<Vec<ForgedRecord>, ForgeError>> =
        exec::map_indexed(opts.exec, tiles.len(), |ti| {
            forge_tile(ti, &tiles[ti], rules, opts)
        });
    let mut records = Vec::with_capacity(tiles.len() * opts.rotations.len());
    for tile_records in per_tile {
        records.extend(tile_records?);
    }
    Ok(records)
}

fn forge_tile(
    tile_index: usize,
    tile: &Tile,
    rules: &RuleTable,
    opts: &ForgeOptions,
) -> Result<Vec<ForgedRecord>, ForgeError> {
    let base = tile.seg.downsample(opts.p)?;
    let mut out = Vec::with_capacity(opts.rotations.len());
    for &k in &opts.rotations {
        let id = format!("{}t{:05}_r{}", opts.id_prefix, tile_index, k % 4);
        let matrix = base.rotated(k);
        let seg = tile.seg.rotated(k);

        let (height, sketch) = match &tile.dem {
            Some(dem) => {
                let dem_k = dem.rotated(k);
                let sketch = extract_sketch(&dem_k, opts.ridge_q, opts.valley_q)?;
                let eroded = erode(
                    &dem_k,
                    &ErodeParams {
                        iterations: opts.erode_iterations,
                        talus: opts.erode_talus,
                        ..ErodeParams::default()
                    },
                )
                .heightmap;
                (HeightSource::Map(eroded), Some(sketch))
            }
            None => (HeightSource::FlatZero, None),
        };

        let mut prompts = vec![build_caption_prompt(CaptionPayload::Layout(&matrix))];
        if let HeightSource::Map(h) = &height {
            prompts.push(build_caption_prompt(CaptionPayload::Heightmap(&h.summary())));
        }

        let config = if opts.with_configs {
            let zones = height
                .to_heightmap(opts.p)
                .zones(opts.p, DEFAULT_ZONE_THRESHOLDS);
            let ctx = LayoutContext {
                matrix: &matrix,
                zones: &zones,
            };
            sample_configs(1, rules, &ctx, seed::derive(opts.seed, &id)).pop()
        } else {
            None
        };

        out.push(ForgedRecord {
            id,
            matrix,
            seg,
            height,
            sketch,
            layout_caption: None,
            terrain_caption: None,
            config,
            rotation: k % 4,
            prompts,
        });
    }
    Ok(out)
}

/// Attach an external annotator's caption to a record after minimal
/// validation (non-empty printable text of sane length).
pub fn attach_caption(
    record: &mut ForgedRecord,
    task: PromptTask,
    text: &str,
) -> Result<(), ForgeError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ForgeError::BadCaption("empty caption".into()));
    }
    if trimmed.len() > 8192 {
        return Err(ForgeError::BadCaption(format!(
            "caption of {} bytes exceeds the 8192-byte cap",
            trimmed.len()
        )));
    }
    if trimmed.chars().any(|c| c.is_control() && c != '\n' && c != '\t') {
        return Err(ForgeError::BadCaption("caption contains control characters".into()));
    }
    match task {
        PromptTask::CaptionLayout => record.layout_caption = Some(trimmed.to_string()),
        PromptTask::CaptionHeightmap => record.terrain_caption = Some(trimmed.to_string()),
        other => {
            return Err(ForgeError::BadCaption(format!(
                "task {other:?} is not a caption task"
            )))
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Configuration sampling
// ---------------------------------------------------------------------------

/// Layout-side context a sampled configuration must be consistent with.
pub struct LayoutContext<'a> {
    pub matrix: &'a LayoutMatrix,
    pub zones: &'a ZoneGrid,
}

/// Sample `n` configurations. Context-independent coarse attributes are
/// stratified (each attribute cycles a seeded permutation of its values, so
/// n = 4 covers all four seasons exactly once); context-dependent parts —
/// fine attributes and agents — are resolved through the rule table against
/// the layout context, so every emitted config passes the agent and
/// rule-restriction clauses of the consistency check.
pub fn sample_configs(
    n: usize,
    rules: &RuleTable,
    ctx: &LayoutContext<'_>,
    root_seed: u64,
) -> Vec<EnvironmentConfig> {
    let terrain_wheel = shuffled(TerrainType::ALL, root_seed, "strata.terrain");
    let season_wheel = shuffled(Season::ALL, root_seed, "strata.season");
    let style_wheel = shuffled(ArtisticStyle::ALL, root_seed, "strata.style");
    let weather_wheel = shuffled(Weather::ALL, root_seed, "strata.weather");
    let time_wheel = shuffled(TimeOfDay::ALL, root_seed, "strata.time");

    // Candidate (category, state, region) triples that are satisfiable in
    // this context, with their capacity.
    let mut candidates: Vec<(String, String, Region, usize)> = Vec::new();
    for agent in &rules.agents {
        for state in &agent.states {
            for region in Region::ALL {
                let spec = AgentSpec {
                    category: agent.category.clone(),
                    quantity: 1,
                    state: state.clone(),
                    region: *region,
                };
                if !agent_candidate_ok(&spec, ctx, rules) {
                    continue;
                }
                let capacity =
                    crate::config::agent_region_habitat_cells(&spec, ctx.matrix, ctx.zones, rules)
                        .len();
                candidates.push((agent.category.clone(), state.clone(), *region, capacity));
            }
        }
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let coarse = CoarseAttributes {
            terrain_type: terrain_wheel[i % terrain_wheel.len()],
            season: season_wheel[i % season_wheel.len()],
            artistic_style: style_wheel[i % style_wheel.len()],
            weather: weather_wheel[i % weather_wheel.len()],
            time_of_day: time_wheel[i % time_wheel.len()],
        };
        let fine = expand_coarse_to_fine(&coarse, rules, seed::derive(root_seed, &format!("config.{i}.fine")))
            .expect("rule table covers every season");

        let mut rng = seed::rng(root_seed, &format!("config.{i}.agents"));
        let mut agents = Vec::new();
        if !candidates.is_empty() {
            let count = rng.random_range(0..=2usize);
            for _ in 0..count {
                let (category, state, region, capacity) =
                    candidates[rng.random_range(0..candidates.len())].clone();
                let quantity = rng.random_range(1..=capacity.min(3) as u32);
                agents.push(AgentSpec {
                    category,
                    quantity,
                    state,
                    region,
                });
            }
        }
        out.push(EnvironmentConfig::new(coarse, fine, agents));
    }
    out
}

/// Would a single instance of this spec pass the agent clauses of the
/// consistency check?
fn agent_candidate_ok(spec: &AgentSpec, ctx: &LayoutContext<'_>, rules: &RuleTable) -> bool {
    let probe = EnvironmentConfig::new(
        CoarseAttributes::default(),
        Default::default(),
        vec![spec.clone()],
    );
    match check_consistency(&probe, ctx.matrix, ctx.zones, rules) {
        Ok(report) => report
            .violations
            .iter()
            .all(|v| v.subject != spec.category),
        Err(_) => false,
    }
}

fn shuffled<T: Copy>(values: &[T], root_seed: u64, tag: &str) -> Vec<T> {
    let mut rng = seed::rng(root_seed, tag);
    let mut out: Vec<T> = values.to_vec();
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i);
        out.swap(i, j);
    }
    out
}

// ---------------------------------------------------------------------------
// Export / import
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    table: String,
    rotation: u8,
    matrix: String,
    seg: String,
    height: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sketch: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout_caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terrain_caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<String>,
}

/// Write `index.jsonl` plus one asset directory per record:
/// `assets/<id>/{layout.txt, seg.png, height.png, sketch.png, prompts.json,
/// config.json}`. Returns the record count.
pub fn export_dataset(records: &[ForgedRecord], dir: &Path) -> Result<usize, ForgeError> {
    let assets_root = dir.join("assets");
    std::fs::create_dir_all(&assets_root)?;
    let mut index = String::new();
    for record in records {
        let asset_dir = assets_root.join(&record.id);
        std::fs::create_dir_all(&asset_dir)?;
        let rel = |name: &str| format!("assets/{}/{name}", record.id);

        std::fs::write(asset_dir.join("layout.txt"), record.matrix.serialize())?;
        record.seg.save_png(&asset_dir.join("seg.png"))?;
        let height = match &record.height {
            HeightSource::FlatZero => FLAT_ZERO_MARKER.to_string(),
            HeightSource::Map(h) => {
                h.save(&asset_dir.join("height.png"))?;
                rel("height.png")
            }
        };
        let sketch = match &record.sketch {
            Some(s) => {
                s.save_png(&asset_dir.join("sketch.png"))?;
                Some(rel("sketch.png"))
            }
            None => None,
        };
        std::fs::write(
            asset_dir.join("prompts.json"),
            serde_json::to_string_pretty(&record.prompts)?,
        )?;
        let config = match &record.config {
            Some(cfg) => {
                std::fs::write(asset_dir.join("config.json"), cfg.to_json())?;
                Some(rel("config.json"))
            }
            None => None,
        };

        let entry = IndexEntry {
            id: record.id.clone(),
            table: record.matrix.table().name().to_string(),
            rotation: record.rotation,
            matrix: record.matrix.serialize(),
            seg: rel("seg.png"),
            height,
            sketch,
            layout_caption: record.layout_caption.clone(),
            terrain_caption: record.terrain_caption.clone(),
            config,
        };
        index.push_str(&serde_json::to_string(&entry)?);
        index.push('\n');
    }
    std::fs::write(dir.join(INDEX_FILE), index)?;
    Ok(records.len())
}

/// Read a dataset back, validating every record; failures name the record.
pub fn import_dataset(dir: &Path) -> Result<Vec<ForgedRecord>, ForgeError> {
    let index = std::fs::read_to_string(dir.join(INDEX_FILE))?;
    let mut records = Vec::new();
    for line in index.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: IndexEntry = serde_json::from_str(line)?;
        let id = entry.id.clone();
        let wrap = |detail: String| ForgeError::Record {
            id: id.clone(),
            detail,
        };

        let table = SymbolTable::builtin(&entry.table)
            .ok_or_else(|| ForgeError::UnknownTable(entry.table.clone()))?;
        let matrix =
            LayoutMatrix::parse(&entry.matrix, &table).map_err(|e| wrap(e.to_string()))?;
        let seg = SegmentationRaster::load_png(&dir.join(&entry.seg), table.clone())
            .map_err(|e| wrap(e.to_string()))?;
        let height = if entry.height == FLAT_ZERO_MARKER {
            HeightSource::FlatZero
        } else {
            HeightSource::Map(
                Heightmap::load(&dir.join(&entry.height)).map_err(|e| wrap(e.to_string()))?,
            )
        };
        let sketch = match &entry.sketch {
            Some(path) => {
                Some(Sketch::load_png(&dir.join(path)).map_err(|e| wrap(e.to_string()))?)
            }
            None => None,
        };
        let prompts: Vec<PromptBundle> = serde_json::from_str(
            &std::fs::read_to_string(dir.join("assets").join(&entry.id).join("prompts.json"))
                .map_err(|e| wrap(e.to_string()))?,
        )
        .map_err(|e| wrap(e.to_string()))?;
        let config = match &entry.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(dir.join(path)).map_err(|e| wrap(e.to_string()))?;
                Some(
                    crate::config::parse_config(&text, crate::config::default_rule_table())
                        .map_err(|e| wrap(e.to_string()))?,
                )
            }
            None => None,
        };

        records.push(ForgedRecord {
            id: entry.id,
            matrix,
            seg,
            height,
            sketch,
            layout_caption: entry.layout_caption,
            terrain_caption: entry.terrain_caption,
            config,
            rotation: entry.rotation,
            prompts,
        });
    }
    Ok(records)
}
