//! `lattice validate`: per-file diagnostics with an aggregate exit code.

use std::path::Path;

use lattice_core::config::{default_rule_table, parse_config};
use lattice_core::decoder::import_masks;
use lattice_core::forge::import_dataset;
use lattice_core::layout::{LayoutMatrix, SegmentationRaster, SymbolTable};
use lattice_core::placement::PlacementManifest;
use lattice_core::terrain::{Heightmap, Sketch, TerrainError};

use crate::util::{load_table, CliError, Logger, EXIT_IO, EXIT_VALIDATION};

pub fn run(
    paths: &[std::path::PathBuf],
    table_spec: &str,
    kind: Option<&str>,
    log: Logger,
) -> Result<(), CliError> {
    if paths.is_empty() {
        return Err(CliError::new(EXIT_VALIDATION, "no files to validate"));
    }
    let table = load_table(table_spec)?;
    let mut any_invalid = false;
    let mut any_io = false;
    for path in paths {
        match validate_one(path, kind, &table) {
            Ok(detected) => {
                log.info(&format!("ok: {} ({detected})", path.display()));
                log.event(
                    "validate",
                    serde_json::json!({"path": path.display().to_string(), "kind": detected, "valid": true}),
                );
            }
            Err(e) => {
                eprintln!("invalid: {}: {}", path.display(), e.message);
                log.event(
                    "validate",
                    serde_json::json!({"path": path.display().to_string(), "valid": false, "error": e.message}),
                );
                if e.code == EXIT_IO {
                    any_io = true;
                } else {
                    any_invalid = true;
                }
            }
        }
    }
    if any_invalid {
        Err(CliError::new(EXIT_VALIDATION, "one or more files failed validation"))
    } else if any_io {
        Err(CliError::new(EXIT_IO, "one or more files could not be read"))
    } else {
        Ok(())
    }
}

fn validate_one(
    path: &Path,
    kind: Option<&str>,
    table: &std::sync::Arc<SymbolTable>,
) -> Result<&'static str, CliError> {
    if let Some(kind) = kind {
        return validate_as(path, kind, table);
    }
    // Kind detection by shape.
    if path.is_dir() || path.file_name().is_some_and(|n| n == "index.jsonl") {
        return validate_as(path, "dataset", table);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("txt") => validate_as(path, "layout", table),
        Some("json") => {
            let text = std::fs::read_to_string(path)?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::new(EXIT_VALIDATION, format!("json: {e}")))?;
            let kind = if value.get("instances").is_some() {
                "manifest"
            } else if value.get("coarse").is_some() {
                "config"
            } else if value.get("entries").is_some() {
                "table"
            } else if value.get("classes").is_some() {
                "masks"
            } else {
                return Err(CliError::new(
                    EXIT_VALIDATION,
                    "unrecognized JSON document (no instances/coarse/entries/classes field)",
                ));
            };
            validate_as(path, kind, table)
        }
        Some("png") => {
            match Heightmap::load(path) {
                Ok(_) => Ok("heightmap"),
                Err(TerrainError::BadBitDepth { .. }) => {
                    // 8-bit RGB: segmentation if classifiable, else sketch.
                    match validate_as(path, "segmentation", table) {
                        Ok(k) => Ok(k),
                        Err(_) => validate_as(path, "sketch", table),
                    }
                }
                Err(e) => Err(e.into()),
            }
        }
        _ => Err(CliError::new(
            EXIT_VALIDATION,
            "cannot detect the file kind; pass --kind",
        )),
    }
}

fn validate_as(
    path: &Path,
    kind: &str,
    table: &std::sync::Arc<SymbolTable>,
) -> Result<&'static str, CliError> {
    match kind {
        "layout" => {
            let text = std::fs::read_to_string(path)?;
            let m = LayoutMatrix::parse(&text, table)?;
            let _ = m.histogram();
            Ok("layout")
        }
        "config" => {
            let text = std::fs::read_to_string(path)?;
            parse_config(&text, default_rule_table())?;
            Ok("config")
        }
        "manifest" => {
            let manifest = PlacementManifest::load(path)?;
            for (i, inst) in manifest.instances.iter().enumerate() {
                let [x, y] = inst.position;
                if !(0.0..manifest.world_size_m).contains(&x)
                    || !(0.0..manifest.world_size_m).contains(&y)
                {
                    return Err(CliError::new(
                        EXIT_VALIDATION,
                        format!("instance {i} position ({x}, {y}) outside world bounds"),
                    ));
                }
            }
            Ok("manifest")
        }
        "table" => {
            SymbolTable::from_json_file(path)?;
            Ok("table")
        }
        "heightmap" => {
            Heightmap::load(path)?;
            Ok("heightmap")
        }
        "segmentation" => {
            let raster = SegmentationRaster::load_png(path, table.clone())?;
            // Every pixel must classify within tolerance.
            for y in 0..raster.height() {
                for x in 0..raster.width() {
                    if table.classify_color(raster.pixel(x, y)).is_none() {
                        return Err(CliError::new(
                            EXIT_VALIDATION,
                            format!(
                                "pixel ({x}, {y}) color {:?} is not within tolerance of any table color",
                                raster.pixel(x, y)
                            ),
                        ));
                    }
                }
            }
            Ok("segmentation")
        }
        "sketch" => {
            let sketch = Sketch::load_png(path)?;
            if sketch.stroke_count() == 0 {
                return Err(CliError::new(EXIT_VALIDATION, "sketch has no stroke pixels"));
            }
            Ok("sketch")
        }
        "masks" => {
            let dir = path.parent().unwrap_or(Path::new("."));
            import_masks(dir)?;
            Ok("masks")
        }
        "dataset" => {
            let dir = if path.is_dir() {
                path
            } else {
                path.parent().unwrap_or(Path::new("."))
            };
            let records = import_dataset(dir)?;
            if records.is_empty() {
                return Err(CliError::new(EXIT_VALIDATION, "dataset has no records"));
            }
            Ok("dataset")
        }
        other => Err(CliError::new(
            EXIT_VALIDATION,
            format!("unknown kind '{other}'"),
        )),
    }
}
