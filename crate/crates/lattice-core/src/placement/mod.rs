//! Resolving a validated configuration against masks, layout, and heightmap
//! into a concrete placement manifest: scattered vegetation, building sites,
//! and agent spawns, all deterministic per seed.
//!
//! The world is the square [0, world_size_m) on both axes, origin at the
//! layout's upper-left corner with y increasing downward (southward). Yaw is
//! measured in degrees from east, increasing clockwise toward south.
//! Elevation samples the heightmap bilinearly and is reported in meters
//! (value 65535 maps to `max_height_m`).

mod agents;
mod buildings;
mod scatter;

pub use agents::spawn_agents;
pub use buildings::{place_buildings, BuildingOutcome, BuildingRules};
pub use scatter::{scatter_assets, ScatterRules};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{
    check_consistency, ConfigError, ConsistencyReport, EnvironmentConfig, RuleTable,
};
use crate::decoder::{
    decode_layout, DecodeError, DecodeParams, MaskManifest, MaskSet,
};
use crate::exec::{self, ExecMode};
use crate::layout::{LayoutError, LayoutMatrix};
use crate::seed;
use crate::terrain::{Heightmap, TerrainError, DEFAULT_ZONE_THRESHOLDS};

#[derive(Debug, thiserror::Error)]
pub enum PlacementError {
    #[error("infeasible building rules: {0}")]
    InfeasibleRules(String),
    #[error("habitat exhausted for {category} in {region}: {available} valid cells, {requested} requested")]
    HabitatExhausted {
        category: String,
        region: String,
        available: usize,
        requested: usize,
    },
    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("layout stage: {0}")]
    Layout(#[from] LayoutError),
    #[error("terrain stage: {0}")]
    Terrain(#[from] TerrainError),
    #[error("decode stage: {0}")]
    Decode(#[from] DecodeError),
    #[error("config stage: {0}")]
    Config(#[from] ConfigError),
    #[error("placement stage: {0}")]
    Placement(#[from] PlacementError),
    #[error("consistency check failed with {} violation(s)", report.violations.len())]
    Consistency { report: ConsistencyReport },
}

/// Physical scale of the compiled world.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    /// Side of the square world in meters; the p-by-p layout maps onto it.
    pub world_size_m: f64,
    /// Elevation value 65535 in meters.
    pub max_height_m: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            world_size_m: 1024.0,
            max_height_m: 256.0,
        }
    }
}

impl WorldParams {
    /// Elevation in meters at a world position.
    pub fn elevation_at(&self, h: &Heightmap, x: f64, y: f64) -> f64 {
        let fx = x / self.world_size_m * h.width() as f64 - 0.5;
        let fy = y / self.world_size_m * h.height() as f64 - 0.5;
        h.sample_bilinear(fx, fy) / 65_535.0 * self.max_height_m
    }

    /// Terrain slope (degrees) and downhill yaw (degrees, east-based
    /// clockwise) at a world position, sampled over a one-pixel step.
    pub fn slope_at(&self, h: &Heightmap, x: f64, y: f64) -> (f64, f64) {
        let step = self.world_size_m / h.width().max(h.height()) as f64;
        let dzdx = (self.elevation_at(h, x + step, y) - self.elevation_at(h, x - step, y))
            / (2.0 * step);
        let dzdy = (self.elevation_at(h, x, y + step) - self.elevation_at(h, x, y - step))
            / (2.0 * step);
        let mag = (dzdx * dzdx + dzdy * dzdy).sqrt();
        let slope_deg = mag.atan().to_degrees();
        let downhill_yaw = (-dzdy).atan2(-dzdx).to_degrees().rem_euclid(360.0);
        (slope_deg, downhill_yaw)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Asset,
    Building,
    Agent,
}

/// One placed asset, building, or agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub kind: InstanceKind,
    pub class: String,
    /// (x, y) in meters from the upper-left corner, y downward.
    pub position: [f64; 2],
    /// Meters, sampled bilinearly from the heightmap.
    pub elevation_m: f64,
    /// Euler degrees (pitch, yaw, roll), yaw east-based clockwise.
    pub orientation: [f64; 3],
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub layout_hash: String,
    pub config_hash: String,
    pub seed: u64,
}

/// The compiled instance list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementManifest {
    pub version: u32,
    pub world_size_m: f64,
    pub provenance: Provenance,
    pub instances: Vec<Instance>,
}

impl PlacementManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<PlacementManifest, PlacementError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), PlacementError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PlacementManifest, PlacementError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn count(&self, kind: InstanceKind) -> usize {
        self.instances.iter().filter(|i| i.kind == kind).count()
    }
}

/// Which mask feeds each scatterable asset class, with its base spacing.
/// Classes absent from the layout (or from the config's fine section) are
/// skipped; surface-level classes (road, lake, desert, snow_mountain) carry
/// materials rather than instances and are not scattered.
pub const SCATTER_SOURCES: &[(&str, &[&str], f64)] = &[
    ("grass", &["grassland"], 8.0),
    ("flower", &["grassland"], 12.0),
    ("dead_branch", &["forest"], 14.0),
    ("stone", &["rocky", "barren"], 14.0),
    ("forest", &["forest"], 10.0),
    ("crops", &["farmland"], 10.0),
];

/// The mask class that hosts buildings.
pub const BUILDING_MASK_CLASS: &str = "building";
/// The asset-type row that parameterizes buildings.
pub const BUILDING_ASSET_CLASS: &str = "architecture";

#[derive(Clone, Debug)]
pub struct CompileParams {
    pub resolution: usize,
    pub sigma_px: f64,
    pub noise_amp: f64,
    pub zone_thresholds: (u16, u16),
    pub world: WorldParams,
    pub building: BuildingRules,
    /// Per-class spacing overrides for scattering (class, meters).
    pub spacing_overrides: Vec<(String, f64)>,
    pub seed: u64,
    pub exec: ExecMode,
}

impl Default for CompileParams {
    fn default() -> Self {
        Self {
            resolution: 512,
            sigma_px: 2.0,
            noise_amp: 0.05,
            zone_thresholds: DEFAULT_ZONE_THRESHOLDS,
            world: WorldParams::default(),
            building: BuildingRules::default(),
            spacing_overrides: Vec::new(),
            seed: 0,
            exec: ExecMode::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CompileCounts {
    pub assets: usize,
    pub buildings: usize,
    pub agents: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CompileReport {
    pub stage_ms: Vec<(String, f64)>,
    pub counts: CompileCounts,
    pub warnings: Vec<String>,
}

pub struct CompileOutput {
    pub masks: MaskSet,
    pub mask_manifest: MaskManifest,
    pub manifest: PlacementManifest,
    pub report: CompileReport,
}

/// Run the full pipeline: zones, consistency check, mask decoding, asset
/// scattering, building placement, and agent spawning. One root seed fans
/// out deterministically to every stochastic stage.
pub fn compile(
    m: &LayoutMatrix,
    heightmap: &Heightmap,
    cfg: &EnvironmentConfig,
    rules: &RuleTable,
    params: &CompileParams,
) -> Result<CompileOutput, CompileError> {
    let mut report = CompileReport::default();
    let mut timer = StageTimer::new();

    let zones = heightmap.zones(m.size(), params.zone_thresholds);
    timer.lap("zones", &mut report);

    let consistency = check_consistency(cfg, m, &zones, rules)?;
    if !consistency.is_consistent() {
        return Err(CompileError::Consistency {
            report: consistency,
        });
    }
    timer.lap("consistency", &mut report);

    let decode_params = DecodeParams {
        resolution: params.resolution,
        sigma_px: params.sigma_px,
        noise_amp: params.noise_amp,
        seed: seed::derive(params.seed, "decode"),
        exec: params.exec,
    };
    let masks = decode_layout(m, &decode_params)?;
    let mask_manifest = MaskManifest::new(m, &masks, &decode_params);
    timer.lap("decode", &mut report);

    // Scatterable classes in fixed table order, each with its own stream.
    let jobs: Vec<(&str, ScatterRules, f64)> = SCATTER_SOURCES
        .iter()
        .filter_map(|&(class, mask_classes, default_spacing)| {
            let fine = cfg.fine.get(class)?;
            let mask_class = mask_classes
                .iter()
                .find(|mc| masks.view(mc).is_some())?;
            let spacing = params
                .spacing_overrides
                .iter()
                .find(|(c, _)| c == class)
                .map_or(default_spacing, |(_, s)| *s);
            let rules = ScatterRules {
                spacing_m: spacing,
                slope_align: false,
                scale: fine.scale.unwrap_or(1.0),
                mask_class: mask_class.to_string(),
            };
            Some((class, rules, fine.density))
        })
        .collect();
    let scattered: Vec<Vec<Instance>> = exec::map_indexed(params.exec, jobs.len(), |i| {
        let (class, scatter_rules, density) = &jobs[i];
        let view = masks
            .view(&scatter_rules.mask_class)
            .expect("mask presence checked above");
        scatter_assets(
            class,
            view,
            *density,
            scatter_rules,
            &params.world,
            heightmap,
            seed::derive(params.seed, &format!("scatter.{class}")),
        )
    });
    let mut instances: Vec<Instance> = scattered.into_iter().flatten().collect();
    report.counts.assets = instances.len();
    timer.lap("scatter", &mut report);

    if let (Some(fine), Some(view)) = (
        cfg.fine.get(BUILDING_ASSET_CLASS),
        masks.view(BUILDING_MASK_CLASS),
    ) {
        let mut building_rules = params.building.clone();
        if building_rules.target_count.is_none() {
            let bound = (params.world.world_size_m / building_rules.d_min_m + 1.0).floor();
            building_rules.target_count = Some((fine.density * bound * bound) as usize);
        }
        building_rules.scale = fine.scale.unwrap_or(1.0);
        let outcome = place_buildings(
            BUILDING_ASSET_CLASS,
            view,
            heightmap,
            Some(m),
            &building_rules,
            &params.world,
            seed::derive(params.seed, "buildings"),
        )?;
        report.counts.buildings = outcome.instances.len();
        report.warnings.extend(outcome.isolation_warnings);
        instances.extend(outcome.instances);
    }
    timer.lap("buildings", &mut report);

    let agent_instances = spawn_agents(
        &cfg.agents,
        m,
        &zones,
        heightmap,
        rules,
        &params.world,
        seed::derive(params.seed, "agents"),
    )?;
    report.counts.agents = agent_instances.len();
    instances.extend(agent_instances);
    timer.lap("agents", &mut report);

    let manifest = PlacementManifest {
        version: 1,
        world_size_m: params.world.world_size_m,
        provenance: Provenance {
            layout_hash: m.content_hash(),
            config_hash: cfg.content_hash(),
            seed: params.seed,
        },
        instances,
    };

    Ok(CompileOutput {
        masks,
        mask_manifest,
        manifest,
        report,
    })
}

struct StageTimer {
    last: std::time::Instant,
}

impl StageTimer {
    fn new() -> Self {
        Self {
            last: std::time::Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str, report: &mut CompileReport) {
        let now = std::time::Instant::now();
        report
            .stage_ms
            .push((stage.to_string(), now.duration_since(self.last).as_secs_f64() * 1e3));
        self.last = now;
    }
}
