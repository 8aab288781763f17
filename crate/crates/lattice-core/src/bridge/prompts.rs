//! Prompt assembly from versioned templates with named slots.

use crate::config::{
    ArtisticStyle, Region, RuleTable, Season, TerrainType, TimeOfDay, Weather,
};
use crate::layout::{LayoutMatrix, SymbolTable};
use crate::terrain::TerrainSummary;

use super::{Attachments, PromptBundle, PromptTask};

pub const LAYOUT_PROMPT_VERSION: &str = "v1";
pub const CONFIG_PROMPT_VERSION: &str = "v1";
pub const CAPTION_LAYOUT_PROMPT_VERSION: &str = "v1";
pub const CAPTION_HEIGHTMAP_PROMPT_VERSION: &str = "v1";

const LAYOUT_TEMPLATE: &str = include_str!("../../data/prompts/layout_system_v1.txt");
const CONFIG_TEMPLATE: &str = include_str!("../../data/prompts/config_system_v1.txt");
const CAPTION_LAYOUT_TEMPLATE: &str = include_str!("../../data/prompts/caption_layout_v1.txt");
const CAPTION_HEIGHTMAP_TEMPLATE: &str =
    include_str!("../../data/prompts/caption_heightmap_v1.txt");

/// One legend line per table entry, e.g. `W: Water bodies like lakes,
/// rivers, etc.`; the asset class name stands in when a table carries no
/// description.
fn legend_lines(table: &SymbolTable) -> String {
    table
        .entries()
        .iter()
        .map(|e| {
            let text = if e.description.is_empty() {
                &e.asset_class
            } else {
                &e.description
            };
            format!("{}: {}", e.symbol, text)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Assemble the layout-generation prompt. The system prompt embeds the
/// matrix size, the line-break rule, and the symbol legend generated from
/// the table; a terrain caption, when given, is appended as elevation
/// context (the variable-height path).
pub fn build_layout_prompt(
    instruction: &str,
    table: &SymbolTable,
    p: usize,
    terrain_caption: Option<&str>,
) -> PromptBundle {
    let mut system = LAYOUT_TEMPLATE
        .replace("{{p}}", &p.to_string())
        .replace("{{legend}}", &legend_lines(table));
    if let Some(caption) = terrain_caption {
        system.push_str("\nTerrain elevation context:\n");
        system.push_str(caption);
        system.push('\n');
    }
    PromptBundle {
        task: PromptTask::Layout,
        template_version: LAYOUT_PROMPT_VERSION.to_string(),
        system_prompt: system,
        user_instruction: instruction.to_string(),
        attachments: terrain_caption.map(|c| Attachments {
            heightmap_ref: None,
            caption: Some(c.to_string()),
        }),
    }
}

/// Assemble the configuration-generation prompt. Allowed enum values come
/// from the rule table; the generated layout, when given, is appended so the
/// generator can keep agents consistent with the scene.
pub fn build_config_prompt(
    instruction: &str,
    rules: &RuleTable,
    layout: Option<&LayoutMatrix>,
) -> PromptBundle {
    let join = |items: Vec<String>| items.join(", ");
    let mut system = CONFIG_TEMPLATE
        .replace(
            "{{terrain_types}}",
            &join(TerrainType::ALL.iter().map(|v| v.to_string()).collect()),
        )
        .replace(
            "{{seasons}}",
            &join(Season::ALL.iter().map(|v| v.to_string()).collect()),
        )
        .replace(
            "{{styles}}",
            &join(ArtisticStyle::ALL.iter().map(|v| v.to_string()).collect()),
        )
        .replace(
            "{{weathers}}",
            &join(Weather::ALL.iter().map(|v| v.to_string()).collect()),
        )
        .replace(
            "{{times}}",
            &join(TimeOfDay::ALL.iter().map(|v| v.to_string()).collect()),
        )
        .replace(
            "{{categories}}",
            &join(rules.agents.iter().map(|a| a.category.clone()).collect()),
        )
        .replace(
            "{{states}}",
            &join(rules.states.iter().map(|s| s.state.clone()).collect()),
        )
        .replace(
            "{{regions}}",
            &join(Region::ALL.iter().map(|v| v.to_string()).collect()),
        );
    if let Some(m) = layout {
        system.push_str("\nThe scene layout matrix is:\n");
        system.push_str(&m.serialize());
    }
    PromptBundle {
        task: PromptTask::Config,
        template_version: CONFIG_PROMPT_VERSION.to_string(),
        system_prompt: system,
        user_instruction: instruction.to_string(),
        attachments: None,
    }
}

/// What a captioning prompt describes.
pub enum CaptionPayload<'a> {
    Layout(&'a LayoutMatrix),
    Heightmap(&'a TerrainSummary),
}

/// Assemble a captioning prompt. Layout prompts carry the color-to-scene
/// mapping section followed by the contextual-guidance section; heightmap
/// prompts serialize the terrain summary.
pub fn build_caption_prompt(payload: CaptionPayload<'_>) -> PromptBundle {
    match payload {
        CaptionPayload::Layout(m) => {
            let table = m.table();
            let mapping = table
                .entries()
                .iter()
                .map(|e| {
                    format!(
                        "{}: {} (rgb {}, {}, {})",
                        e.symbol,
                        if e.description.is_empty() {
                            &e.asset_class
                        } else {
                            &e.description
                        },
                        e.color[0],
                        e.color[1],
                        e.color[2]
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            let histogram = m
                .histogram()
                .iter()
                .map(|s| format!("{}: {:.1}%", s.asset_class, s.fraction * 100.0))
                .collect::<Vec<_>>()
                .join("\n");
            PromptBundle {
                task: PromptTask::CaptionLayout,
                template_version: CAPTION_LAYOUT_PROMPT_VERSION.to_string(),
                system_prompt: CAPTION_LAYOUT_TEMPLATE
                    .replace("{{mapping}}", &mapping)
                    .replace("{{histogram}}", &histogram),
                user_instruction: m.serialize(),
                attachments: None,
            }
        }
        CaptionPayload::Heightmap(summary) => PromptBundle {
            task: PromptTask::CaptionHeightmap,
            template_version: CAPTION_HEIGHTMAP_PROMPT_VERSION.to_string(),
            system_prompt: CAPTION_HEIGHTMAP_TEMPLATE
                .replace("{{summary}}", &summary_text(summary)),
            user_instruction: String::new(),
            attachments: None,
        },
    }
}

/// Deterministic prose-ready rendering of a terrain summary.
pub fn summary_text(s: &TerrainSummary) -> String {
    let mut lines = Vec::new();
    let flat = s.dominant_gradient.is_none()
        && s.relief.iter().all(|r| *r == crate::terrain::ReliefClass::Flat);
    if flat {
        lines.push("The terrain is flat with no dominant downhill direction.".to_string());
    }
    lines.push(format!(
        "elevation range: {} to {} of 65535 (mean {:.0})",
        s.min, s.max, s.mean
    ));
    lines.push(format!(
        "dominant downhill direction: {}",
        s.dominant_gradient.map_or("none", |c| c.label())
    ));
    lines.push(format!(
        "relief by sector (3x3, row-major): {}",
        s.relief
            .iter()
            .map(|r| r.label())
            .collect::<Vec<_>>()
            .join(", ")
    ));
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::Heightmap;

    #[test]
    fn loveda_legend_has_seven_lines() {
        let bundle = build_layout_prompt("a lake in the north", &SymbolTable::loveda(), 32, None);
        let legend: Vec<&str> = bundle
            .system_prompt
            .lines()
            .filter(|l| l.len() > 2 && l.as_bytes()[1] == b':' && l.as_bytes()[0].is_ascii_uppercase())
            .collect();
        assert_eq!(legend.len(), 7);
        for symbol in ["A:", "B:", "D:", "F:", "G:", "R:", "W:"] {
            assert!(legend.iter().any(|l| l.starts_with(symbol)), "missing {symbol}");
        }
        assert!(bundle.system_prompt.contains("32x32"));
        assert!(bundle
            .system_prompt
            .contains("W: Water bodies like lakes, rivers, etc."));
    }

    #[test]
    fn wild_legend_has_snow_and_lacks_farmland() {
        let bundle = build_layout_prompt("snowy peaks", &SymbolTable::wild(), 32, None);
        assert!(bundle.system_prompt.contains("S: Snow-capped"));
        assert!(!bundle.system_prompt.contains("A: "));
        assert!(!bundle.system_prompt.contains("D: "));
        assert!(!bundle.system_prompt.contains("G: "));
    }

    #[test]
    fn empty_instruction_is_still_well_formed() {
        let bundle = build_layout_prompt("", &SymbolTable::loveda(), 32, None);
        assert!(bundle.user_instruction.is_empty());
        assert!(!bundle.system_prompt.is_empty());
    }

    #[test]
    fn caption_prompt_sections_are_ordered() {
        let m = LayoutMatrix::filled(SymbolTable::loveda(), 8, 'W').unwrap();
        let bundle = build_caption_prompt(CaptionPayload::Layout(&m));
        let mapping = bundle
            .system_prompt
            .find("Color-to-scene mapping")
            .expect("mapping section");
        let guidance = bundle
            .system_prompt
            .find("Layout contextual guidance")
            .expect("guidance section");
        assert!(mapping < guidance);
    }

    #[test]
    fn flat_heightmap_caption_states_flatness() {
        let summary = Heightmap::flat(16, 16, 100).summary();
        let bundle = build_caption_prompt(CaptionPayload::Heightmap(&summary));
        assert!(bundle.system_prompt.contains("flat"));
        assert!(bundle.system_prompt.contains("none"));
    }

    #[test]
    fn prompts_are_deterministic() {
        let m = LayoutMatrix::filled(SymbolTable::wild(), 8, 'S').unwrap();
        let a = build_caption_prompt(CaptionPayload::Layout(&m));
        let b = build_caption_prompt(CaptionPayload::Layout(&m));
        assert_eq!(a, b);

        let t = SymbolTable::loveda();
        let p1 = build_layout_prompt("water east", &t, 32, Some("gentle hills"));
        let p2 = build_layout_prompt("water east", &t, 32, Some("gentle hills"));
        assert_eq!(p1, p2);
        assert!(p1.system_prompt.contains("gentle hills"));
    }

    #[test]
    fn config_prompt_lists_allowed_values() {
        let bundle = build_config_prompt("rainy night", crate::config::default_rule_table(), None);
        for needle in ["whale", "grazing", "upper_left", "winter", "cyberpunk"] {
            assert!(bundle.system_prompt.contains(needle), "missing {needle}");
        }
    }
}
