//! Context-dependent consistency checking: does a configuration make sense
//! against a concrete layout and elevation-zone grid?
//!
//! Three clause families:
//! (a) every agent's habitat predicate is satisfiable inside its declared
//!     region, with enough valid cells for its quantity;
//! (b) fine attributes respect the rule table for the coarse attributes;
//! (c) class/zone sanity, currently: snow-class cells sitting in "low" zones.
//!
//! The check is monotone: clauses are evaluated independently per agent and
//! per class, so adding an agent can only add violations.

use crate::layout::LayoutMatrix;
use crate::terrain::{Zone, ZoneGrid};

use super::rules::GENERIC_AQUATIC_MIN_CELLS;
use super::{AgentSpec, ConfigError, EnvironmentConfig, RuleTable};

/// One failed rule, with a stable rule id for CI matching.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub rule: String,
    pub subject: String,
    pub detail: String,
    pub count: usize,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({}): {}", self.rule, self.subject, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConsistencyReport {
    pub violations: Vec<Violation>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

/// Effective per-cell habitat constraint for an agent: the intersection of
/// its category predicate and its state predicate.
struct EffectivePredicate<'a> {
    allowed: Option<Vec<&'a str>>,
    forbidden: &'a [String],
    zones: Option<&'a [Zone]>,
    min_connected: usize,
}

impl<'a> EffectivePredicate<'a> {
    fn build(rules: &'a RuleTable, agent: &AgentSpec) -> Option<EffectivePredicate<'a>> {
        let category = rules.agent(&agent.category)?;
        let state = rules.state_rule(&agent.state)?;

        let allowed: Option<Vec<&str>> = match (&category.habitat.allowed_classes, &state.allowed_classes) {
            (None, None) => None,
            (Some(a), None) => Some(a.iter().map(String::as_str).collect()),
            (None, Some(b)) => Some(b.iter().map(String::as_str).collect()),
            (Some(a), Some(b)) => Some(
                a.iter()
                    .filter(|c| b.contains(c))
                    .map(String::as_str)
                    .collect(),
            ),
        };

        let mut min_connected = category.habitat.min_connected_cells;
        if min_connected == 0 {
            // Water-bound categories get the generic aquatic component rule.
            if let Some(classes) = &allowed {
                if !classes.is_empty() && classes.iter().all(|c| *c == "water") {
                    min_connected = GENERIC_AQUATIC_MIN_CELLS;
                }
            }
        }

        Some(EffectivePredicate {
            allowed,
            forbidden: &category.habitat.forbidden_classes,
            zones: category.habitat.zones.as_deref(),
            min_connected,
        })
    }

    fn cell_ok(&self, m: &LayoutMatrix, zones: &ZoneGrid, row: usize, col: usize) -> bool {
        let class = m.class(row, col);
        if let Some(allowed) = &self.allowed {
            if !allowed.contains(&class) {
                return false;
            }
        }
        if self.forbidden.iter().any(|f| f == class) {
            return false;
        }
        if let Some(allowed_zones) = self.zones {
            if !allowed_zones.contains(&zones.get(row, col)) {
                return false;
            }
        }
        true
    }
}

/// The cells of an agent's declared region that satisfy its effective
/// habitat predicate (category and state constraints combined), in row-major
/// order. Spawning samples from exactly this set, so a config that passed
/// the consistency check cannot exhaust it.
pub fn agent_region_habitat_cells(
    agent: &AgentSpec,
    m: &LayoutMatrix,
    zones: &ZoneGrid,
    rules: &RuleTable,
) -> Vec<(usize, usize)> {
    let Some(pred) = EffectivePredicate::build(rules, agent) else {
        return Vec::new();
    };
    agent
        .region
        .cells(m.size())
        .into_iter()
        .filter(|&(r, c)| pred.cell_ok(m, zones, r, c))
        .collect()
}

/// Check `cfg` against a layout and its elevation zones. An empty report
/// means consistent.
pub fn check_consistency(
    cfg: &EnvironmentConfig,
    m: &LayoutMatrix,
    zones: &ZoneGrid,
    rules: &RuleTable,
) -> Result<ConsistencyReport, ConfigError> {
    if m.size() != zones.p() {
        return Err(ConfigError::DimensionMismatch {
            layout_p: m.size(),
            zones_p: zones.p(),
        });
    }
    let mut violations = Vec::new();

    // (b) fine attributes against the season's rules.
    for (class, fine) in &cfg.fine {
        let Some(asset) = rules.asset(class) else {
            violations.push(Violation {
                rule: "unknown_asset_class".into(),
                subject: class.clone(),
                detail: "class has no rule-table row".into(),
                count: 1,
            });
            continue;
        };
        let Some(rule) = asset.seasons.get(&cfg.coarse.season) else {
            violations.push(Violation {
                rule: "rule_gap".into(),
                subject: class.clone(),
                detail: format!("no rule for season '{}'", cfg.coarse.season),
                count: 1,
            });
            continue;
        };
        if !rule.allowed_seasonal.contains(&fine.seasonal_variant) {
            violations.push(Violation {
                rule: "variant_not_allowed".into(),
                subject: class.clone(),
                detail: format!(
                    "seasonal variant {} is not available in {}",
                    fine.seasonal_variant, cfg.coarse.season
                ),
                count: 1,
            });
        }
        if !asset.allowed_materials(rule).contains(&fine.material_variant) {
            violations.push(Violation {
                rule: "material_tag_violation".into(),
                subject: class.clone(),
                detail: format!(
                    "material variant {} lacks the tags required in {}",
                    fine.material_variant, cfg.coarse.season
                ),
                count: 1,
            });
        }
        if fine.density < rule.density[0] || fine.density > rule.density[1] {
            violations.push(Violation {
                rule: "density_out_of_seasonal_range".into(),
                subject: class.clone(),
                detail: format!(
                    "density {} outside [{}, {}] for {}",
                    fine.density, rule.density[0], rule.density[1], cfg.coarse.season
                ),
                count: 1,
            });
        }
    }

    // (a) agents.
    for agent in &cfg.agents {
        check_agent(agent, m, zones, rules, &mut violations);
    }

    // (c) snow-class cells in low zones.
    if let Some(snow_idx) = m.table().index_of_class("snow") {
        let p = m.size();
        let mut count = 0usize;
        for r in 0..p {
            for c in 0..p {
                if usize::from(m.cell(r, c)) == snow_idx && zones.get(r, c) == Zone::Low {
                    count += 1;
                }
            }
        }
        if count > 0 {
            violations.push(Violation {
                rule: "snow_below_threshold".into(),
                subject: "snow".into(),
                detail: format!("{count} snow cells sit in low elevation zones"),
                count,
            });
        }
    }

    Ok(ConsistencyReport { violations })
}

fn check_agent(
    agent: &AgentSpec,
    m: &LayoutMatrix,
    zones: &ZoneGrid,
    rules: &RuleTable,
    violations: &mut Vec<Violation>,
) {
    let Some(category) = rules.agent(&agent.category) else {
        violations.push(Violation {
            rule: "unknown_category".into(),
            subject: agent.category.clone(),
            detail: "category has no capability row".into(),
            count: 1,
        });
        return;
    };
    if !category.states.iter().any(|s| *s == agent.state) {
        violations.push(Violation {
            rule: "state_not_allowed".into(),
            subject: agent.category.clone(),
            detail: format!("state '{}' is not allowed", agent.state),
            count: 1,
        });
        return;
    }
    let Some(pred) = EffectivePredicate::build(rules, agent) else {
        return;
    };

    let region_cells = agent.region.cells(m.size());
    let valid_in_region = agent_region_habitat_cells(agent, m, zones, rules).len();

    if valid_in_region == 0 {
        violations.push(Violation {
            rule: "habitat_unsatisfiable".into(),
            subject: agent.category.clone(),
            detail: format!(
                "no valid cell for state '{}' in region '{}'",
                agent.state, agent.region
            ),
            count: 1,
        });
        return;
    }

    if pred.min_connected > 0
        && !component_reaches(m, zones, &pred, &region_cells, pred.min_connected)
    {
        violations.push(Violation {
            rule: "habitat_unsatisfiable".into(),
            subject: agent.category.clone(),
            detail: format!(
                "no {}-cell connected habitat component intersects region '{}'",
                pred.min_connected, agent.region
            ),
            count: 1,
        });
        return;
    }

    if valid_in_region < agent.quantity as usize {
        violations.push(Violation {
            rule: "habitat_capacity".into(),
            subject: agent.category.clone(),
            detail: format!(
                "region '{}' has {} valid cells for quantity {}",
                agent.region, valid_in_region, agent.quantity
            ),
            count: 1,
        });
    }
}

/// Does any 4-connected component of valid cells, of size at least
/// `min_size`, intersect the region?
fn component_reaches(
    m: &LayoutMatrix,
    zones: &ZoneGrid,
    pred: &EffectivePredicate<'_>,
    region_cells: &[(usize, usize)],
    min_size: usize,
) -> bool {
    let p = m.size();
    let in_region: std::collections::HashSet<(usize, usize)> =
        region_cells.iter().copied().collect();
    let mut label = vec![0u32; p * p]; // 0 = unvisited/invalid
    let mut next_label = 1u32;
    let mut sizes = vec![0usize]; // sizes[label]
    let mut touches = vec![false]; // touches[label]

    for sr in 0..p {
        for sc in 0..p {
            if label[sr * p + sc] != 0 || !pred.cell_ok(m, zones, sr, sc) {
                continue;
            }
            let this = next_label;
            next_label += 1;
            sizes.push(0);
            touches.push(false);
            let mut stack = vec![(sr, sc)];
            label[sr * p + sc] = this;
            while let Some((r, c)) = stack.pop() {
                sizes[this as usize] += 1;
                if in_region.contains(&(r, c)) {
                    touches[this as usize] = true;
                }
                let mut push = |nr: usize, nc: usize| {
                    if label[nr * p + nc] == 0 && pred.cell_ok(m, zones, nr, nc) {
                        label[nr * p + nc] = this;
                        stack.push((nr, nc));
                    }
                };
                if r > 0 {
                    push(r - 1, c);
                }
                if r + 1 < p {
                    push(r + 1, c);
                }
                if c > 0 {
                    push(r, c - 1);
                }
                if c + 1 < p {
                    push(r, c + 1);
                }
            }
        }
    }
    (1..next_label).any(|l| touches[l as usize] && sizes[l as usize] >= min_size)
}
