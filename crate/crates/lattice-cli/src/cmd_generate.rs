//! `lattice generate`: instruction -> generator backend -> validated layout
//! and configuration -> compiled artifacts.
//!
//! The mock backend is the default so the full pipeline runs offline; the
//! remote backend is configured through `LATTICE_LLM_URL` and friends. With
//! a sketch or heightmap, a deterministic terrain summary is passed as the
//! elevation context of the layout prompt (the variable-height path).

use std::path::Path;

use lattice_core::bridge::{
    build_config_prompt, build_layout_prompt, invoke_generator, summary_text,
    validate_config_response, validate_layout_response, Backend, MockGenerator, RemoteGenerator,
    DEFAULT_REPAIR_BUDGET,
};
use lattice_core::config::default_rule_table;
use lattice_core::exec::ExecMode;
use lattice_core::layout::DEFAULT_P;
use lattice_core::terrain::{sketch_to_heightmap, Heightmap, Sketch, SketchParams};

use crate::util::{load_table, write_atomic, CliError, Logger, EXIT_VALIDATION};
use crate::CompileFlags;

#[allow(clippy::too_many_arguments)]
pub fn run(
    instruction: Option<&str>,
    instruction_file: Option<&Path>,
    heightmap_path: Option<&Path>,
    sketch_path: Option<&Path>,
    backend_spec: &str,
    table_spec: &str,
    out: &Path,
    flags: &CompileFlags,
    seed: u64,
    exec: ExecMode,
    log: Logger,
) -> Result<(), CliError> {
    let table = load_table(table_spec)?;
    let rules = default_rule_table();

    let instruction = match (instruction, instruction_file) {
        (Some(text), _) => text.to_string(),
        (None, Some(path)) => std::fs::read_to_string(path)?,
        (None, None) => {
            return Err(CliError::new(
                EXIT_VALIDATION,
                "provide --instruction or --instruction-file",
            ))
        }
    };
    if instruction.trim().is_empty() {
        log.info("warning: empty instruction; the generator only sees the system prompt");
    }

    // Backend first: a misconfigured remote endpoint fails before any work.
    let backend = match backend_spec {
        "mock" => Backend::Mock(MockGenerator::new(seed)),
        "remote" => Backend::Remote(RemoteGenerator::from_env()?),
        other => {
            return Err(CliError::new(
                EXIT_VALIDATION,
                format!("unknown backend '{other}' (expected 'mock' or 'remote')"),
            ))
        }
    };

    let heightmap = match (heightmap_path, sketch_path) {
        (Some(path), _) => Some(Heightmap::load(path)?),
        (None, Some(path)) => {
            let sketch = Sketch::load_png(path)?;
            Some(sketch_to_heightmap(&sketch, &SketchParams::default())?)
        }
        (None, None) => None,
    };
    let terrain_caption = heightmap.as_ref().map(|h| summary_text(&h.summary()));

    std::fs::create_dir_all(out.join("generated"))?;

    // Layout round trip.
    let layout_bundle =
        build_layout_prompt(&instruction, &table, DEFAULT_P, terrain_caption.as_deref());
    let layout_raw = invoke_generator(&layout_bundle, &backend)?;
    write_atomic(&out.join("generated/layout_response.txt"), layout_raw.as_bytes())?;
    let layout_resp = validate_layout_response(&layout_raw, &table, DEFAULT_P, DEFAULT_REPAIR_BUDGET)
        .map_err(|e| {
            CliError::new(
                crate::util::EXIT_GENERATOR,
                format!("layout response rejected: {e}"),
            )
        })?;
    let matrix = layout_resp
        .payload
        .as_layout()
        .expect("layout validation yields a layout")
        .clone();
    if !layout_resp.repairs.is_empty() {
        log.info(&format!(
            "layout response required {} repair(s)",
            layout_resp.repairs.len()
        ));
    }

    // Configuration round trip, conditioned on the generated layout.
    let config_bundle = build_config_prompt(&instruction, rules, Some(&matrix));
    let config_raw = invoke_generator(&config_bundle, &backend)?;
    write_atomic(&out.join("generated/config_response.txt"), config_raw.as_bytes())?;
    let config_resp = validate_config_response(&config_raw, rules).map_err(|e| {
        CliError::new(
            crate::util::EXIT_GENERATOR,
            format!("config response rejected: {e}"),
        )
    })?;
    let cfg = config_resp
        .payload
        .as_config()
        .expect("config validation yields a config")
        .clone();

    let repair_log = serde_json::json!({
        "layout_repairs": layout_resp.repairs,
        "config_repairs": config_resp.repairs,
    });
    write_atomic(
        &out.join("generated/repairs.json"),
        serde_json::to_string_pretty(&repair_log)
            .expect("repair log serializes")
            .as_bytes(),
    )?;
    write_atomic(&out.join("generated/layout.txt"), matrix.serialize().as_bytes())?;
    write_atomic(&out.join("generated/config.json"), cfg.to_json().as_bytes())?;

    let heightmap = heightmap.unwrap_or_else(|| Heightmap::flat(64, 64, 0));
    let params = crate::cmd_compile::params_from_flags(flags, seed, exec);
    crate::cmd_compile::compile_and_write(&matrix, &heightmap, &cfg, out, &params, log)?;
    Ok(())
}
