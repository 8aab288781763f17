//! The environmental-configuration data model and its validation: JSON
//! parsing with path-carrying errors, coarse-to-fine expansion through the
//! rule table, and consistency checking against layout and elevation.
//!
//! Configurations are versioned JSON documents:
//!
//! ```json
//! {
//!   "version": 1,
//!   "coarse": { "terrain_type": "suburbs", "season": "winter",
//!               "artistic_style": "realism", "weather": "snowfall",
//!               "time_of_day": "daytime" },
//!   "fine": { "grass": { "seasonal_variant": 0, "material_variant": 3,
//!                        "density": 0.3 } },
//!   "agents": [ { "category": "sheep", "quantity": 9, "state": "grazing",
//!                 "region": "lower_left" } ]
//! }
//! ```
//!
//! Unknown fields are rejected everywhere (generated configs hallucinate
//! keys), enum strings are case-normalized, and a class may carry only the
//! continuous parameters its rule-table row declares.

mod consistency;
mod rules;

pub use consistency::{
    agent_region_habitat_cells, check_consistency, ConsistencyReport, Violation,
};
pub use rules::{
    default_rule_table, expand_coarse_to_fine, AgentRules, AssetRules, ContinuousParam,
    HabitatPredicate, RuleTable, SeasonRule, StateRule, GENERIC_AQUATIC_MIN_CELLS,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::raster::sector_bounds;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("schema error at {path}: {reason}")]
    SchemaError { path: String, reason: String },
    #[error("unknown {kind} '{value}' at {path}")]
    UnknownEnum {
        kind: &'static str,
        value: String,
        path: String,
    },
    #[error("value {value} at {path} is outside {expected}")]
    RangeViolation {
        path: String,
        value: f64,
        expected: String,
    },
    #[error("rule table has no rule for season '{season}' of class '{class}'")]
    RuleGap { season: String, class: String },
    #[error("layout is {layout_p}x{layout_p} but the zone grid is {zones_p}x{zones_p}")]
    DimensionMismatch { layout_p: usize, zones_p: usize },
    #[error("invalid rule table: {0}")]
    InvalidRuleTable(String),
    #[error("config json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub const CONFIG_VERSION: u32 = 1;

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            /// Case-insensitive parse; spaces and hyphens are treated as
            /// underscores.
            pub fn parse(s: &str) -> Option<$name> {
                let norm = normalize_enum_text(s);
                match norm.as_str() {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

fn normalize_enum_text(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .replace([' ', '-'], "_")
}

string_enum!(Season {
    Spring => "spring",
    Summer => "summer",
    Autumn => "autumn",
    Winter => "winter",
});

string_enum!(TerrainType {
    Suburbs => "suburbs",
    Mountainous => "mountainous",
});

string_enum!(ArtisticStyle {
    Realism => "realism",
    Cartoon => "cartoon",
    Cyberpunk => "cyberpunk",
});

string_enum!(Weather {
    Sunny => "sunny",
    Rain => "rain",
    Mist => "mist",
    Snowfall => "snowfall",
    Sandstorm => "sandstorm",
});

string_enum!(TimeOfDay {
    Daytime => "daytime",
    Afternoon => "afternoon",
    Night => "night",
});

string_enum!(Region {
    UpperLeft => "upper_left",
    UpperCenter => "upper_center",
    UpperRight => "upper_right",
    MiddleLeft => "middle_left",
    MiddleCenter => "middle_center",
    MiddleRight => "middle_right",
    LowerLeft => "lower_left",
    LowerCenter => "lower_center",
    LowerRight => "lower_right",
});

impl Region {
    /// Accepts the nine canonical names plus the common "center" shorthand.
    pub fn parse_lenient(s: &str) -> Option<Region> {
        let norm = normalize_enum_text(s);
        if norm == "center" || norm == "middle" {
            return Some(Region::MiddleCenter);
        }
        Region::parse(&norm)
    }

    /// Vertical band 0..3 (upper, middle, lower).
    pub fn row_band(self) -> usize {
        match self {
            Region::UpperLeft | Region::UpperCenter | Region::UpperRight => 0,
            Region::MiddleLeft | Region::MiddleCenter | Region::MiddleRight => 1,
            Region::LowerLeft | Region::LowerCenter | Region::LowerRight => 2,
        }
    }

    /// Horizontal band 0..3 (left, center, right).
    pub fn col_band(self) -> usize {
        match self {
            Region::UpperLeft | Region::MiddleLeft | Region::LowerLeft => 0,
            Region::UpperCenter | Region::MiddleCenter | Region::LowerCenter => 1,
            Region::UpperRight | Region::MiddleRight | Region::LowerRight => 2,
        }
    }

    /// Cells of this sector in the 3x3 partition of a p-by-p grid (balanced
    /// split, larger sectors first).
    pub fn cells(self, p: usize) -> Vec<(usize, usize)> {
        let (r0, r1) = sector_bounds(self.row_band(), p);
        let (c0, c1) = sector_bounds(self.col_band(), p);
        let mut out = Vec::with_capacity((r1 - r0) * (c1 - c0));
        for r in r0..r1 {
            for c in c0..c1 {
                out.push((r, c));
            }
        }
        out
    }
}

/// The sector cells of `region` in a p-by-p grid.
pub fn region_cells(region: Region, p: usize) -> Vec<(usize, usize)> {
    region.cells(p)
}

/// Global scene controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseAttributes {
    pub terrain_type: TerrainType,
    pub season: Season,
    pub artistic_style: ArtisticStyle,
    pub weather: Weather,
    pub time_of_day: TimeOfDay,
}

impl Default for CoarseAttributes {
    fn default() -> Self {
        Self {
            terrain_type: TerrainType::Suburbs,
            season: Season::Summer,
            artistic_style: ArtisticStyle::Realism,
            weather: Weather::Sunny,
            time_of_day: TimeOfDay::Daytime,
        }
    }
}

/// Per-class fine parameters. Which optional fields may be present is
/// dictated by the class's rule-table row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssetFine {
    pub seasonal_variant: usize,
    pub material_variant: usize,
    pub density: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wind: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

impl AssetFine {
    pub fn basic(seasonal_variant: usize, material_variant: usize, density: f64) -> AssetFine {
        AssetFine {
            seasonal_variant,
            material_variant,
            density,
            rotation: None,
            scale: None,
            height: None,
            wind: None,
            slope: None,
        }
    }
}

/// Fine attributes for every configured class, keyed by asset class.
pub type FineAttributes = BTreeMap<String, AssetFine>;

/// One dynamic-agent request.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentSpec {
    pub category: String,
    pub quantity: u32,
    pub state: String,
    pub region: Region,
}

/// A validated scene configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvironmentConfig {
    pub version: u32,
    pub coarse: CoarseAttributes,
    pub fine: FineAttributes,
    pub agents: Vec<AgentSpec>,
}

impl EnvironmentConfig {
    pub fn new(coarse: CoarseAttributes, fine: FineAttributes, agents: Vec<AgentSpec>) -> Self {
        Self {
            version: CONFIG_VERSION,
            coarse,
            fine,
            agents,
        }
    }

    /// Canonical JSON form; `parse_config` of this text reproduces the value.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Stable content hash of the canonical form.
    pub fn content_hash(&self) -> String {
        crate::seed::sha256_hex(self.to_json().as_bytes())
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parse and validate a configuration document against `rules`.
pub fn parse_config(text: &str, rules: &RuleTable) -> Result<EnvironmentConfig, ConfigError> {
    let value: Value = serde_json::from_str(text)?;
    parse_config_value(&value, rules)
}

/// Validate an already-parsed JSON document.
pub fn parse_config_value(value: &Value, rules: &RuleTable) -> Result<EnvironmentConfig, ConfigError> {
    let root = expect_object(value, "$")?;
    reject_unknown(root, &["version", "coarse", "fine", "agents"], "$")?;

    let version = expect_u64(require(root, "version", "$")?, "$.version")?;
    if version != u64::from(CONFIG_VERSION) {
        return Err(ConfigError::SchemaError {
            path: "$.version".into(),
            reason: format!("unsupported version {version}, expected {CONFIG_VERSION}"),
        });
    }

    let coarse = parse_coarse(require(root, "coarse", "$")?)?;

    let mut fine: FineAttributes = BTreeMap::new();
    if let Some(fine_value) = root.get("fine") {
        let fine_map = expect_object(fine_value, "$.fine")?;
        for (class, entry) in fine_map {
            let path = format!("$.fine.{class}");
            let asset = rules.asset(class).ok_or_else(|| ConfigError::UnknownEnum {
                kind: "asset class",
                value: class.clone(),
                path: path.clone(),
            })?;
            fine.insert(class.clone(), parse_asset_fine(entry, asset, &path)?);
        }
    }

    let mut agents = Vec::new();
    if let Some(agents_value) = root.get("agents") {
        let list = agents_value.as_array().ok_or_else(|| ConfigError::SchemaError {
            path: "$.agents".into(),
            reason: "expected an array".into(),
        })?;
        for (i, entry) in list.iter().enumerate() {
            agents.push(parse_agent(entry, rules, &format!("$.agents[{i}]"))?);
        }
    }

    Ok(EnvironmentConfig {
        version: CONFIG_VERSION,
        coarse,
        fine,
        agents,
    })
}

fn parse_coarse(value: &Value) -> Result<CoarseAttributes, ConfigError> {
    let obj = expect_object(value, "$.coarse")?;
    reject_unknown(
        obj,
        &[
            "terrain_type",
            "season",
            "artistic_style",
            "weather",
            "time_of_day",
        ],
        "$.coarse",
    )?;
    macro_rules! field {
        ($name:literal, $ty:ty, $kind:literal) => {{
            let path = concat!("$.coarse.", $name);
            let raw = expect_str(require(obj, $name, "$.coarse")?, path)?;
            <$ty>::parse(raw).ok_or_else(|| ConfigError::UnknownEnum {
                kind: $kind,
                value: raw.to_string(),
                path: path.into(),
            })?
        }};
    }
    Ok(CoarseAttributes {
        terrain_type: field!("terrain_type", TerrainType, "terrain type"),
        season: field!("season", Season, "season"),
        artistic_style: field!("artistic_style", ArtisticStyle, "artistic style"),
        weather: field!("weather", Weather, "weather"),
        time_of_day: field!("time_of_day", TimeOfDay, "time of day"),
    })
}

fn parse_asset_fine(
    value: &Value,
    asset: &AssetRules,
    path: &str,
) -> Result<AssetFine, ConfigError> {
    let obj = expect_object(value, path)?;
    let mut allowed = vec!["seasonal_variant", "material_variant", "density"];
    for p in &asset.continuous {
        match p {
            ContinuousParam::Density => {}
            ContinuousParam::Rotation => allowed.push("rotation"),
            ContinuousParam::Scale => allowed.push("scale"),
            ContinuousParam::Height => allowed.push("height"),
            ContinuousParam::Wind => allowed.push("wind"),
            ContinuousParam::Slope => allowed.push("slope"),
        }
    }
    reject_unknown(obj, &allowed, path)?;

    let seasonal_variant = expect_u64(
        require(obj, "seasonal_variant", path)?,
        &format!("{path}.seasonal_variant"),
    )? as usize;
    if seasonal_variant >= asset.seasonal_variants {
        return Err(ConfigError::RangeViolation {
            path: format!("{path}.seasonal_variant"),
            value: seasonal_variant as f64,
            expected: format!("0..={}", asset.seasonal_variants - 1),
        });
    }
    let material_variant = expect_u64(
        require(obj, "material_variant", path)?,
        &format!("{path}.material_variant"),
    )? as usize;
    if material_variant >= asset.material_variants {
        return Err(ConfigError::RangeViolation {
            path: format!("{path}.material_variant"),
            value: material_variant as f64,
            expected: format!("0..={}", asset.material_variants - 1),
        });
    }
    let density = expect_f64(require(obj, "density", path)?, &format!("{path}.density"))?;
    if !(0.0..=1.0).contains(&density) {
        return Err(ConfigError::RangeViolation {
            path: format!("{path}.density"),
            value: density,
            expected: "[0, 1]".into(),
        });
    }

    let mut fine = AssetFine::basic(seasonal_variant, material_variant, density);

    if let Some(rot) = obj.get("rotation") {
        let rot_path = format!("{path}.rotation");
        let arr = rot.as_array().ok_or_else(|| ConfigError::SchemaError {
            path: rot_path.clone(),
            reason: "expected [pitch, yaw, roll]".into(),
        })?;
        if arr.len() != 3 {
            return Err(ConfigError::SchemaError {
                path: rot_path,
                reason: format!("expected 3 components, found {}", arr.len()),
            });
        }
        let mut euler = [0.0f64; 3];
        for (i, component) in arr.iter().enumerate() {
            let v = expect_f64(component, &format!("{rot_path}[{i}]"))?;
            if !(0.0..360.0).contains(&v) {
                return Err(ConfigError::RangeViolation {
                    path: format!("{rot_path}[{i}]"),
                    value: v,
                    expected: "[0, 360)".into(),
                });
            }
            euler[i] = v;
        }
        fine.rotation = Some(euler);
    }
    if let Some(v) = obj.get("scale") {
        let p = format!("{path}.scale");
        let scale = expect_f64(v, &p)?;
        if scale <= 0.0 || !scale.is_finite() {
            return Err(ConfigError::RangeViolation {
                path: p,
                value: scale,
                expected: "a positive real".into(),
            });
        }
        fine.scale = Some(scale);
    }
    for (key, max, slot) in [("height", 1.0, 0usize), ("wind", 1.0, 1), ("slope", 45.0, 2)] {
        if let Some(v) = obj.get(key) {
            let p = format!("{path}.{key}");
            let x = expect_f64(v, &p)?;
            if !(0.0..=max).contains(&x) {
                return Err(ConfigError::RangeViolation {
                    path: p,
                    value: x,
                    expected: format!("[0, {max}]"),
                });
            }
            match slot {
                0 => fine.height = Some(x),
                1 => fine.wind = Some(x),
                _ => fine.slope = Some(x),
            }
        }
    }
    Ok(fine)
}

fn parse_agent(value: &Value, rules: &RuleTable, path: &str) -> Result<AgentSpec, ConfigError> {
    let obj = expect_object(value, path)?;
    reject_unknown(obj, &["category", "quantity", "state", "region"], path)?;

    let category_raw = expect_str(require(obj, "category", path)?, &format!("{path}.category"))?;
    let category = normalize_enum_text(category_raw);
    let agent_rules = rules
        .agent(&category)
        .ok_or_else(|| ConfigError::UnknownEnum {
            kind: "agent category",
            value: category_raw.to_string(),
            path: format!("{path}.category"),
        })?;

    let quantity = expect_u64(require(obj, "quantity", path)?, &format!("{path}.quantity"))?;
    if quantity < 1 {
        return Err(ConfigError::RangeViolation {
            path: format!("{path}.quantity"),
            value: quantity as f64,
            expected: ">= 1".into(),
        });
    }

    let state_raw = expect_str(require(obj, "state", path)?, &format!("{path}.state"))?;
    let state = normalize_enum_text(state_raw);
    if rules.state_rule(&state).is_none() {
        return Err(ConfigError::UnknownEnum {
            kind: "agent state",
            value: state_raw.to_string(),
            path: format!("{path}.state"),
        });
    }
    if !agent_rules.states.iter().any(|s| *s == state) {
        return Err(ConfigError::SchemaError {
            path: format!("{path}.state"),
            reason: format!("state '{state}' is not allowed for category '{category}'"),
        });
    }

    let region_raw = expect_str(require(obj, "region", path)?, &format!("{path}.region"))?;
    let region = Region::parse_lenient(region_raw).ok_or_else(|| ConfigError::UnknownEnum {
        kind: "region",
        value: region_raw.to_string(),
        path: format!("{path}.region"),
    })?;

    Ok(AgentSpec {
        category,
        quantity: quantity as u32,
        state,
        region,
    })
}

// Small JSON access helpers carrying document paths.

fn expect_object<'a>(
    v: &'a Value,
    path: &str,
) -> Result<&'a serde_json::Map<String, Value>, ConfigError> {
    v.as_object().ok_or_else(|| ConfigError::SchemaError {
        path: path.into(),
        reason: "expected an object".into(),
    })
}

fn expect_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| ConfigError::SchemaError {
        path: path.into(),
        reason: "expected a string".into(),
    })
}

fn expect_u64(v: &Value, path: &str) -> Result<u64, ConfigError> {
    v.as_u64().ok_or_else(|| ConfigError::SchemaError {
        path: path.into(),
        reason: "expected a non-negative integer".into(),
    })
}

fn expect_f64(v: &Value, path: &str) -> Result<f64, ConfigError> {
    v.as_f64().ok_or_else(|| ConfigError::SchemaError {
        path: path.into(),
        reason: "expected a number".into(),
    })
}

fn require<'a>(
    map: &'a serde_json::Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'a Value, ConfigError> {
    map.get(key).ok_or_else(|| ConfigError::SchemaError {
        path: format!("{path}.{key}"),
        reason: "missing required field".into(),
    })
}

fn reject_unknown(
    map: &serde_json::Map<String, Value>,
    allowed: &[&str],
    path: &str,
) -> Result<(), ConfigError> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::SchemaError {
                path: format!("{path}.{key}"),
                reason: "unknown field".into(),
            });
        }
    }
    Ok(())
}
