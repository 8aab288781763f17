//! Shared CLI plumbing: error-to-exit-code mapping, atomic writes, table
//! loading, and logging.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use lattice_core::bridge::BridgeError;
use lattice_core::config::ConfigError;
use lattice_core::decoder::DecodeError;
use lattice_core::forge::ForgeError;
use lattice_core::layout::{LayoutError, SymbolTable};
use lattice_core::placement::{CompileError, PlacementError};
use lattice_core::terrain::TerrainError;

/// Stable exit codes: 0 success, 1 validation failure, 2 consistency
/// violation, 3 generator failure, 4 I/O.
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONSISTENCY: i32 = 2;
pub const EXIT_GENERATOR: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> CliError {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_IO, format!("i/o error: {e}"))
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::Io(io) => io.into(),
            other => CliError::new(EXIT_VALIDATION, other.to_string()),
        }
    }
}

impl From<TerrainError> for CliError {
    fn from(e: TerrainError) -> Self {
        match e {
            TerrainError::Io(io) => io.into(),
            other => CliError::new(EXIT_VALIDATION, other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(io) => io.into(),
            other => CliError::new(EXIT_VALIDATION, other.to_string()),
        }
    }
}

impl From<DecodeError> for CliError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Io(io) => io.into(),
            other => CliError::new(EXIT_VALIDATION, other.to_string()),
        }
    }
}

impl From<PlacementError> for CliError {
    fn from(e: PlacementError) -> Self {
        match e {
            PlacementError::Io(io) => io.into(),
            other => CliError::new(EXIT_VALIDATION, other.to_string()),
        }
    }
}

impl From<ForgeError> for CliError {
    fn from(e: ForgeError) -> Self {
        match e {
            ForgeError::Io(io) => io.into(),
            other => CliError::new(EXIT_VALIDATION, other.to_string()),
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Consistency { report } => {
                let mut message = String::from("configuration is inconsistent with the scene:\n");
                for v in &report.violations {
                    message.push_str(&format!("  {v}\n"));
                }
                CliError::new(EXIT_CONSISTENCY, message.trim_end().to_string())
            }
            CompileError::Layout(e) => e.into(),
            CompileError::Terrain(e) => e.into(),
            CompileError::Decode(e) => e.into(),
            CompileError::Config(e) => e.into(),
            CompileError::Placement(e) => e.into(),
        }
    }
}

impl From<BridgeError> for CliError {
    fn from(e: BridgeError) -> Self {
        CliError::new(EXIT_GENERATOR, e.to_string())
    }
}

/// Resolve `--table`: a built-in name or a JSON file path.
pub fn load_table(spec: &str) -> Result<Arc<SymbolTable>, CliError> {
    if let Some(table) = SymbolTable::builtin(spec) {
        return Ok(table);
    }
    let path = Path::new(spec);
    if path.exists() {
        return Ok(Arc::new(SymbolTable::from_json_file(path)?));
    }
    Err(CliError::new(
        EXIT_VALIDATION,
        format!("unknown table '{spec}' (expected 'loveda', 'wild', or a JSON file path)"),
    ))
}

/// Write a file through a temp sibling and rename, so readers never observe
/// a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = temp_sibling(path);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    name.push_str(&format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

/// Optional defaults loaded from `--config-file`. Explicit command-line
/// flags always win; environment variables win over the file for the remote
/// backend settings.
#[derive(Clone, Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub table: Option<String>,
    pub backend: Option<String>,
    pub resolution: Option<usize>,
    pub sigma: Option<f64>,
    pub noise_amp: Option<f64>,
    pub world_size: Option<f64>,
    pub max_height: Option<f64>,
    pub zone_thresholds: Option<[u16; 2]>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub slope_max: Option<f64>,
    pub yaw_jitter: Option<f64>,
    pub llm_url: Option<String>,
    pub llm_token: Option<String>,
    pub llm_timeout_ms: Option<u64>,
    pub llm_max_retries: Option<u32>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        let cfg: FileConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::new(
                EXIT_VALIDATION,
                format!("config file {}: {e}", path.display()),
            )
        })?;
        if let Some([low, high]) = cfg.zone_thresholds {
            if low >= high {
                return Err(CliError::new(
                    EXIT_VALIDATION,
                    format!("config file zone_thresholds must increase, got {low} >= {high}"),
                ));
            }
        }
        Ok(cfg)
    }
}

/// Flag > config file > built-in default.
pub fn merge<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

#[derive(Clone, Copy)]
pub struct Logger {
    pub quiet: bool,
    pub json: bool,
}

impl Logger {
    pub fn info(&self, message: &str) {
        if !self.quiet && !self.json {
            eprintln!("{message}");
        }
    }

    pub fn event(&self, event: &str, payload: serde_json::Value) {
        if self.json {
            let mut obj = serde_json::Map::new();
            obj.insert("event".into(), event.into());
            if let serde_json::Value::Object(map) = payload {
                obj.extend(map);
            }
            println!("{}", serde_json::Value::Object(obj));
        }
    }
}
