//! The rule table: per-class variant counts and per-season restrictions,
//! plus the agent capability table. Ships as a versioned JSON data file and
//! drives both coarse-to-fine expansion and consistency checking.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::terrain::Zone;

use super::{AssetFine, CoarseAttributes, ConfigError, FineAttributes, Season};

/// Default minimum 4-connected habitat component for aquatic categories that
/// do not declare their own threshold.
pub const GENERIC_AQUATIC_MIN_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousParam {
    Density,
    Rotation,
    Scale,
    Height,
    Wind,
    Slope,
}

/// Season-specific restrictions for one asset class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonRule {
    /// Seasonal variant indices selectable in this season.
    #[serde(rename = "seasonal")]
    pub allowed_seasonal: Vec<usize>,
    /// Valid density range, a sub-interval of [0, 1].
    pub density: [f64; 2],
    /// Material variants must carry all of these tags.
    #[serde(default)]
    pub require_material_tags: Vec<String>,
}

/// Variant counts and season rules for one asset class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetRules {
    pub class: String,
    pub seasonal_variants: usize,
    pub material_variants: usize,
    /// Tags per material variant (outer length = `material_variants`).
    pub material_tags: Vec<Vec<String>>,
    /// Continuous parameters this class carries (density is always present).
    pub continuous: Vec<ContinuousParam>,
    pub seasons: BTreeMap<Season, SeasonRule>,
}

impl AssetRules {
    pub fn has(&self, p: ContinuousParam) -> bool {
        self.continuous.contains(&p)
    }

    /// Material variants whose tags satisfy the season's requirements.
    pub fn allowed_materials(&self, rule: &SeasonRule) -> Vec<usize> {
        (0..self.material_variants)
            .filter(|&i| {
                rule.require_material_tags
                    .iter()
                    .all(|tag| self.material_tags[i].contains(tag))
            })
            .collect()
    }
}

/// Where an agent category may live, in layout-class and zone terms. Empty
/// constraints mean "anywhere" (flying categories).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HabitatPredicate {
    /// Cells must hold one of these classes (any class when `None`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_classes: Option<Vec<String>>,
    /// Cells must not hold any of these classes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden_classes: Vec<String>,
    /// Required size of a 4-connected component of valid cells intersecting
    /// the agent's region; 0 means no component requirement.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub min_connected_cells: usize,
    /// Cells must lie in one of these elevation zones (any zone when `None`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zones: Option<Vec<Zone>>,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// Capability row for one agent category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRules {
    pub category: String,
    pub states: Vec<String>,
    #[serde(default)]
    pub habitat: HabitatPredicate,
}

/// Cell constraint implied by an agent state (swimming needs water, grazing
/// needs grass or farmland).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRule {
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_classes: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub version: u32,
    pub assets: Vec<AssetRules>,
    pub agents: Vec<AgentRules>,
    pub states: Vec<StateRule>,
}

impl RuleTable {
    pub fn from_json(text: &str) -> Result<RuleTable, ConfigError> {
        let table: RuleTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn from_json_file(path: &Path) -> Result<RuleTable, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule table serializes")
    }

    pub fn asset(&self, class: &str) -> Option<&AssetRules> {
        self.assets.iter().find(|a| a.class == class)
    }

    pub fn agent(&self, category: &str) -> Option<&AgentRules> {
        self.agents.iter().find(|a| a.category == category)
    }

    pub fn state_rule(&self, state: &str) -> Option<&StateRule> {
        self.states.iter().find(|s| s.state == state)
    }

    pub fn total_seasonal_variants(&self) -> usize {
        self.assets.iter().map(|a| a.seasonal_variants).sum()
    }

    pub fn total_material_variants(&self) -> usize {
        self.assets.iter().map(|a| a.material_variants).sum()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::InvalidRuleTable(msg));
        if self.version != 1 {
            return bad(format!("unsupported version {}", self.version));
        }
        for asset in &self.assets {
            if asset.seasonal_variants == 0 || asset.material_variants == 0 {
                return bad(format!("class '{}' has zero variants", asset.class));
            }
            if asset.material_tags.len() != asset.material_variants {
                return bad(format!(
                    "class '{}' declares {} material variants but {} tag lists",
                    asset.class,
                    asset.material_variants,
                    asset.material_tags.len()
                ));
            }
            if !asset.has(ContinuousParam::Density) {
                return bad(format!("class '{}' is missing the density parameter", asset.class));
            }
            for season in Season::ALL {
                let Some(rule) = asset.seasons.get(season) else {
                    return bad(format!(
                        "class '{}' has no rule for season '{season}'",
                        asset.class
                    ));
                };
                if rule.allowed_seasonal.is_empty() {
                    return bad(format!(
                        "class '{}' allows no seasonal variant in '{season}'",
                        asset.class
                    ));
                }
                if let Some(&i) = rule.allowed_seasonal.iter().find(|&&i| i >= asset.seasonal_variants) {
                    return bad(format!(
                        "class '{}' references seasonal variant {i} out of {}",
                        asset.class, asset.seasonal_variants
                    ));
                }
                if !(0.0..=1.0).contains(&rule.density[0])
                    || !(0.0..=1.0).contains(&rule.density[1])
                    || rule.density[0] > rule.density[1]
                {
                    return bad(format!(
                        "class '{}' has an invalid density range in '{season}'",
                        asset.class
                    ));
                }
                if asset.allowed_materials(rule).is_empty() {
                    return bad(format!(
                        "class '{}' has no material satisfying the '{season}' tags",
                        asset.class
                    ));
                }
            }
        }
        for agent in &self.agents {
            if agent.states.is_empty() {
                return bad(format!("category '{}' allows no states", agent.category));
            }
            for state in &agent.states {
                if self.state_rule(state).is_none() {
                    return bad(format!(
                        "category '{}' references unknown state '{state}'",
                        agent.category
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The built-in rule table matching the published per-class variant counts
/// (49 seasonal and 37 material slots across 11 asset types).
pub fn default_rule_table() -> &'static RuleTable {
    static TABLE: OnceLock<RuleTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        RuleTable::from_json(include_str!("../../data/rules/default_rules.json"))
            .expect("built-in rule table is valid")
    })
}

/// Draw fine attributes for every class in the table, honoring the season's
/// restrictions. Deterministic per (coarse, seed); per-class streams make the
/// result independent of iteration order.
pub fn expand_coarse_to_fine(
    coarse: &CoarseAttributes,
    rules: &RuleTable,
    root_seed: u64,
) -> Result<FineAttributes, ConfigError> {
    let mut fine: FineAttributes = BTreeMap::new();
    for asset in &rules.assets {
        let rule = asset
            .seasons
            .get(&coarse.season)
            .ok_or_else(|| ConfigError::RuleGap {
                season: coarse.season.to_string(),
                class: asset.class.clone(),
            })?;
        let mut rng = seed::rng(root_seed, &format!("fine.{}", asset.class));

        let seasonal_variant = rule.allowed_seasonal[rng.random_range(0..rule.allowed_seasonal.len())];
        let materials = asset.allowed_materials(rule);
        let material_variant = materials[rng.random_range(0..materials.len())];
        let density = rng.random_range(rule.density[0]..=rule.density[1]);

        let mut entry = AssetFine::basic(seasonal_variant, material_variant, density);
        if asset.has(ContinuousParam::Rotation) {
            entry.rotation = Some([0.0, rng.random_range(0.0..360.0), 0.0]);
        }
        if asset.has(ContinuousParam::Scale) {
            entry.scale = Some(rng.random_range(0.8..=1.25));
        }
        if asset.has(ContinuousParam::Height) {
            entry.height = Some(rng.random_range(0.0..=1.0));
        }
        if asset.has(ContinuousParam::Wind) {
            entry.wind = Some(rng.random_range(0.0..=1.0));
        }
        if asset.has(ContinuousParam::Slope) {
            entry.slope = Some(rng.random_range(0.0..=45.0));
        }
        fine.insert(asset.class.clone(), entry);
    }
    Ok(fine)
}
