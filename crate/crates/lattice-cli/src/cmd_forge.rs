//! `lattice forge`: scan a source directory for `<name>.seg.png` (with
//! optional `<name>.dem.png`) pairs, tile them, forge records, and export
//! the dataset.

use std::path::Path;

use lattice_core::config::default_rule_table;
use lattice_core::exec::ExecMode;
use lattice_core::forge::{export_dataset, forge_records, tile_source, ForgeOptions};
use lattice_core::layout::SegmentationRaster;
use lattice_core::terrain::Heightmap;

use crate::util::{load_table, CliError, Logger, EXIT_VALIDATION};

#[allow(clippy::too_many_arguments)]
pub fn run(
    src: &Path,
    out: &Path,
    tile_px: usize,
    p: usize,
    rotations: &[u8],
    table_spec: &str,
    with_configs: bool,
    seed: u64,
    exec: ExecMode,
    log: Logger,
) -> Result<(), CliError> {
    let table = load_table(table_spec)?;

    let mut sources: Vec<(String, std::path::PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(src)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".seg.png") {
            sources.push((stem.to_string(), entry.path()));
        }
    }
    sources.sort();
    if sources.is_empty() {
        return Err(CliError::new(
            EXIT_VALIDATION,
            format!("no `<name>.seg.png` sources under {}", src.display()),
        ));
    }

    let mut records = Vec::new();
    for (stem, seg_path) in &sources {
        let seg = SegmentationRaster::load_png(seg_path, table.clone())?;
        let dem_path = src.join(format!("{stem}.dem.png"));
        let dem = if dem_path.exists() {
            Some(Heightmap::load(&dem_path)?)
        } else {
            None
        };
        let tiles = tile_source(&seg, dem.as_ref(), tile_px)?;
        let opts = ForgeOptions {
            p,
            rotations: rotations.to_vec(),
            with_configs,
            id_prefix: format!("{stem}_"),
            seed,
            exec,
            ..ForgeOptions::default()
        };
        let mut forged = forge_records(&tiles, default_rule_table(), &opts)?;
        log.info(&format!(
            "{stem}: {} tiles -> {} records{}",
            tiles.len(),
            forged.len(),
            if dem.is_some() { " (with DEM)" } else { "" }
        ));
        records.append(&mut forged);
    }

    let count = export_dataset(&records, out)?;
    log.info(&format!("exported {count} records -> {}", out.display()));
    log.event(
        "forge",
        serde_json::json!({
            "sources": sources.len(),
            "records": count,
            "out": out.display().to_string(),
        }),
    );
    Ok(())
}
