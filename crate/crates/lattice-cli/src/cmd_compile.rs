//! `lattice compile`: layout + config (+ heightmap) -> masks, manifest,
//! report.

use std::path::Path;

use lattice_core::config::{default_rule_table, parse_config, EnvironmentConfig};
use lattice_core::decoder::export_masks;
use lattice_core::exec::ExecMode;
use lattice_core::layout::LayoutMatrix;
use lattice_core::placement::{compile, BuildingRules, CompileOutput, CompileParams, WorldParams};
use lattice_core::terrain::Heightmap;

use crate::util::{load_table, temp_sibling, write_atomic, CliError, Logger};
use crate::CompileFlags;

pub fn params_from_flags(flags: &CompileFlags, seed: u64, exec: ExecMode) -> CompileParams {
    CompileParams {
        resolution: flags.resolution,
        sigma_px: flags.sigma,
        noise_amp: flags.noise_amp,
        zone_thresholds: flags.zone_thresholds,
        world: WorldParams {
            world_size_m: flags.world_size,
            max_height_m: flags.max_height,
        },
        building: BuildingRules {
            d_min_m: flags.d_min,
            d_max_m: flags.d_max,
            slope_max_deg: flags.slope_max,
            yaw_jitter_deg: flags.yaw_jitter,
            ..BuildingRules::default()
        },
        spacing_overrides: Vec::new(),
        seed,
        exec,
    }
}

/// Shared by `compile` and the back half of `generate`.
pub fn compile_and_write(
    matrix: &LayoutMatrix,
    heightmap: &Heightmap,
    cfg: &EnvironmentConfig,
    out: &Path,
    params: &CompileParams,
    log: Logger,
) -> Result<CompileOutput, CliError> {
    let rules = default_rule_table();
    let output = compile(matrix, heightmap, cfg, rules, params)?;

    std::fs::create_dir_all(out)?;
    let masks_dir = out.join("masks");
    let masks_tmp = temp_sibling(&masks_dir);
    export_masks(&output.masks, &output.mask_manifest, &masks_tmp)?;
    if masks_dir.exists() {
        std::fs::remove_dir_all(&masks_dir)?;
    }
    std::fs::rename(&masks_tmp, &masks_dir)?;

    write_atomic(&out.join("manifest.json"), output.manifest.to_json().as_bytes())?;
    write_atomic(
        &out.join("report.json"),
        serde_json::to_string_pretty(&output.report)
            .expect("report serializes")
            .as_bytes(),
    )?;

    for warning in &output.report.warnings {
        log.info(&format!("warning: {warning}"));
    }
    log.info(&format!(
        "compiled {} instances ({} assets, {} buildings, {} agents) -> {}",
        output.manifest.instances.len(),
        output.report.counts.assets,
        output.report.counts.buildings,
        output.report.counts.agents,
        out.display()
    ));
    log.event(
        "compile",
        serde_json::json!({
            "out": out.display().to_string(),
            "assets": output.report.counts.assets,
            "buildings": output.report.counts.buildings,
            "agents": output.report.counts.agents,
            "warnings": output.report.warnings.len(),
        }),
    );
    Ok(output)
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    layout_path: &Path,
    config_path: &Path,
    heightmap_path: Option<&Path>,
    table_spec: &str,
    out: &Path,
    flags: &CompileFlags,
    seed: u64,
    exec: ExecMode,
    log: Logger,
) -> Result<(), CliError> {
    let table = load_table(table_spec)?;
    let layout_text = std::fs::read_to_string(layout_path)?;
    let matrix = LayoutMatrix::parse(&layout_text, &table)?;
    let config_text = std::fs::read_to_string(config_path)?;
    let cfg = parse_config(&config_text, default_rule_table())?;
    let heightmap = match heightmap_path {
        Some(path) => Heightmap::load(path)?,
        None => Heightmap::flat(64, 64, 0),
    };
    let params = params_from_flags(flags, seed, exec);
    compile_and_write(&matrix, &heightmap, &cfg, out, &params, log)?;
    Ok(())
}
