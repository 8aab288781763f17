//! `lattice inspect`: human-readable dumps of layouts, heightmaps, configs,
//! manifests, mask sets, and dataset indexes.

use std::collections::BTreeMap;
use std::path::Path;

use lattice_core::config::{default_rule_table, parse_config};
use lattice_core::decoder::import_masks;
use lattice_core::forge::import_dataset;
use lattice_core::layout::LayoutMatrix;
use lattice_core::placement::{InstanceKind, PlacementManifest};
use lattice_core::terrain::{Heightmap, TerrainError, DEFAULT_ZONE_THRESHOLDS};

use crate::util::{load_table, CliError, Logger, EXIT_VALIDATION};

pub fn run(path: &Path, table_spec: &str, _log: Logger) -> Result<(), CliError> {
    let table = load_table(table_spec)?;
    if path.is_dir() || path.file_name().is_some_and(|n| n == "index.jsonl") {
        let dir = if path.is_dir() {
            path
        } else {
            path.parent().unwrap_or(Path::new("."))
        };
        return inspect_dataset(dir);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("txt") => {
            let text = std::fs::read_to_string(path)?;
            let m = LayoutMatrix::parse(&text, &table)?;
            inspect_layout(&m);
            Ok(())
        }
        Some("png") => match Heightmap::load(path) {
            Ok(h) => {
                inspect_heightmap(&h);
                Ok(())
            }
            Err(TerrainError::BadBitDepth { found }) => Err(CliError::new(
                EXIT_VALIDATION,
                format!("not a 16-bit heightmap ({found}); inspect supports heightmap PNGs"),
            )),
            Err(e) => Err(e.into()),
        },
        Some("json") => {
            let text = std::fs::read_to_string(path)?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::new(EXIT_VALIDATION, format!("json: {e}")))?;
            if value.get("instances").is_some() {
                inspect_manifest(&PlacementManifest::from_json(&text)?);
                Ok(())
            } else if value.get("coarse").is_some() {
                let cfg = parse_config(&text, default_rule_table())?;
                println!("environment config v{}", cfg.version);
                println!(
                    "  coarse: {} / {} / {} / {} / {}",
                    cfg.coarse.terrain_type,
                    cfg.coarse.season,
                    cfg.coarse.artistic_style,
                    cfg.coarse.weather,
                    cfg.coarse.time_of_day
                );
                println!("  fine classes: {}", cfg.fine.len());
                for (class, fine) in &cfg.fine {
                    println!(
                        "    {class}: seasonal {} material {} density {:.2}",
                        fine.seasonal_variant, fine.material_variant, fine.density
                    );
                }
                println!("  agents: {}", cfg.agents.len());
                for a in &cfg.agents {
                    println!("    {} x{} {} in {}", a.category, a.quantity, a.state, a.region);
                }
                Ok(())
            } else if value.get("classes").is_some() {
                let dir = path.parent().unwrap_or(Path::new("."));
                let (masks, manifest) = import_masks(dir)?;
                println!("mask set: {} classes at {} px", manifest.classes.len(), manifest.resolution);
                println!("  sigma {} noise {} seed {}", manifest.sigma_px, manifest.noise_amp, manifest.seed);
                println!("  source layout {}", manifest.source_layout_hash);
                for class in masks.classes() {
                    let view = masks.view(class).expect("class listed");
                    let mean: f64 =
                        view.values.iter().sum::<f64>() / view.values.len() as f64;
                    println!("  {class}: mean weight {mean:.4}");
                }
                Ok(())
            } else {
                Err(CliError::new(EXIT_VALIDATION, "unrecognized JSON document"))
            }
        }
        _ => Err(CliError::new(
            EXIT_VALIDATION,
            "inspect supports .txt layouts, .png heightmaps, .json artifacts, and dataset dirs",
        )),
    }
}

fn inspect_layout(m: &LayoutMatrix) {
    println!("layout {}x{} over table '{}'", m.size(), m.size(), m.table().name());
    for share in m.histogram() {
        println!(
            "  {:<12} {:>5} cells  {:>6.2}%",
            share.asset_class,
            share.count,
            share.fraction * 100.0
        );
    }
}

fn inspect_heightmap(h: &Heightmap) {
    let s = h.summary();
    println!("heightmap {}x{} ({} m/px)", h.width(), h.height(), h.meters_per_pixel);
    println!("  elevation: min {} max {} mean {:.1}", s.min, s.max, s.mean);
    println!(
        "  dominant downhill direction: {}",
        s.dominant_gradient.map_or("none", |c| c.label())
    );
    println!("  relief (3x3):");
    for row in 0..3 {
        let cells: Vec<&str> = (0..3).map(|c| s.relief[row * 3 + c].label()).collect();
        println!("    {}", cells.join("  "));
    }
    let p = 32.min(h.width()).min(h.height());
    let zones = h.zones(p, DEFAULT_ZONE_THRESHOLDS);
    let mut counts = BTreeMap::new();
    for z in zones.zones() {
        *counts.entry(format!("{z:?}").to_lowercase()).or_insert(0usize) += 1;
    }
    let total = (p * p) as f64;
    let shares: Vec<String> = counts
        .iter()
        .map(|(z, n)| format!("{z} {:.0}%", *n as f64 / total * 100.0))
        .collect();
    println!("  zones at p={p}: {}", shares.join(", "));
}

fn inspect_manifest(man: &PlacementManifest) {
    println!("placement manifest v{} ({} m world)", man.version, man.world_size_m);
    println!(
        "  provenance: layout {} config {} seed {}",
        &man.provenance.layout_hash[..12.min(man.provenance.layout_hash.len())],
        &man.provenance.config_hash[..12.min(man.provenance.config_hash.len())],
        man.provenance.seed
    );
    println!(
        "  instances: {} total ({} assets, {} buildings, {} agents)",
        man.instances.len(),
        man.count(InstanceKind::Asset),
        man.count(InstanceKind::Building),
        man.count(InstanceKind::Agent)
    );
    let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
    for inst in &man.instances {
        *by_class.entry(inst.class.as_str()).or_insert(0) += 1;
    }
    for (class, n) in by_class {
        println!("    {class:<16} {n}");
    }
}

fn inspect_dataset(dir: &Path) -> Result<(), CliError> {
    let records = import_dataset(dir)?;
    println!("dataset at {}: {} records", dir.display(), records.len());
    let mut by_rotation: BTreeMap<u8, usize> = BTreeMap::new();
    let mut with_dem = 0usize;
    let mut with_config = 0usize;
    let mut with_captions = 0usize;
    for r in &records {
        *by_rotation.entry(r.rotation).or_insert(0) += 1;
        if r.sketch.is_some() {
            with_dem += 1;
        }
        if r.config.is_some() {
            with_config += 1;
        }
        if r.layout_caption.is_some() || r.terrain_caption.is_some() {
            with_captions += 1;
        }
    }
    for (k, n) in by_rotation {
        println!("  rotation {k}: {n}");
    }
    println!("  with sketches/heightmaps: {with_dem}");
    println!("  with configs: {with_config}");
    println!("  with captions: {with_captions}");
    Ok(())
}
