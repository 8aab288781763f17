//! A deterministic rule-based generator standing in for the remote models.
//!
//! The mock reads the same prompt the real model would: it recovers the
//! symbol legend and matrix size from the system prompt, matches instruction
//! keywords to classes and regions, and paints sector fills over a base
//! class. It is a test double for offline end-to-end runs, not a claim of
//! model equivalence. Identical (seed, prompt) pairs produce identical text.

use crate::config::{
    default_rule_table, expand_coarse_to_fine, AgentSpec, ArtisticStyle, CoarseAttributes,
    EnvironmentConfig, Region, Season, TerrainType, TimeOfDay, Weather,
};
use crate::seed;

use super::{BridgeError, PromptBundle, PromptTask};

/// Keywords that map instruction text to asset classes.
const CLASS_KEYWORDS: &[(&str, &[&str])] = &[
    ("water", &["water", "lake", "river", "pond", "sea"]),
    ("forest", &["forest", "tree", "wood"]),
    ("building", &["building", "house", "structure", "town", "city"]),
    ("road", &["road", "street"]),
    ("farmland", &["farmland", "farm", "crop", "field"]),
    ("grassland", &["grass", "meadow", "bush"]),
    ("barren", &["barren", "bare"]),
    ("snow", &["snow"]),
    ("rocky", &["rock", "rocky", "stone"]),
];

pub struct MockGenerator {
    pub seed: u64,
}

impl MockGenerator {
    pub fn new(seed: u64) -> MockGenerator {
        MockGenerator { seed }
    }

    pub fn generate(&self, bundle: &PromptBundle) -> Result<String, BridgeError> {
        match bundle.task {
            PromptTask::Layout => Ok(self.generate_layout(bundle)),
            PromptTask::Config => Ok(self.generate_config(bundle)),
            PromptTask::CaptionLayout => {
                Ok("A mock layout caption describing asset positions by sector.".to_string())
            }
            PromptTask::CaptionHeightmap => {
                Ok("A mock terrain caption describing elevation changes.".to_string())
            }
        }
    }

    // -- layout ------------------------------------------------------------

    fn generate_layout(&self, bundle: &PromptBundle) -> String {
        let p = parse_matrix_size(&bundle.system_prompt).unwrap_or(32);
        let legend = parse_legend(&bundle.system_prompt);
        if legend.is_empty() {
            return String::new();
        }
        // Base fill: grassland when the table has one, else the first entry.
        let base = legend
            .iter()
            .find(|(_, class)| class == "grassland")
            .map_or(legend[0].0, |(s, _)| *s);

        // Earlier clauses win contested cells, so the headline directive of
        // an instruction is never painted over by trailing detail.
        let mut grid = vec![base; p * p];
        let mut painted = vec![false; p * p];
        let instruction = bundle.user_instruction.to_ascii_lowercase();
        for (di, clause) in instruction.split(['.', ';']).enumerate() {
            if clause.trim().is_empty() {
                continue;
            }
            let classes: Vec<char> = CLASS_KEYWORDS
                .iter()
                .filter(|(_, words)| words.iter().any(|w| clause.contains(w)))
                .filter_map(|(class, _)| {
                    legend.iter().find(|(_, c)| c == class).map(|(s, _)| *s)
                })
                .collect();
            if classes.is_empty() {
                continue;
            }
            let rect = clause_rect(clause, p, seed::derive(self.seed, &format!("rect.{di}")));
            for &symbol in &classes {
                for r in rect.0..rect.1 {
                    for c in rect.2..rect.3 {
                        let i = r * p + c;
                        if !painted[i] {
                            grid[i] = symbol;
                            painted[i] = true;
                        }
                    }
                }
            }
        }

        let mut out = String::with_capacity(p * (p + 1));
        for r in 0..p {
            for c in 0..p {
                out.push(grid[r * p + c]);
            }
            out.push('\n');
        }
        out
    }

    // -- config ------------------------------------------------------------

    fn generate_config(&self, bundle: &PromptBundle) -> String {
        let text = bundle.user_instruction.to_ascii_lowercase();
        let pick = |options: &[(&str, &str)], default: &str| -> String {
            options
                .iter()
                .find(|(word, _)| text.contains(word))
                .map_or(default, |(_, v)| *v)
                .to_string()
        };

        let coarse = CoarseAttributes {
            terrain_type: TerrainType::parse(&pick(
                &[("mountain", "mountainous"), ("suburb", "suburbs"), ("city", "suburbs")],
                "suburbs",
            ))
            .expect("known value"),
            season: Season::parse(&pick(
                &[
                    ("spring", "spring"),
                    ("summer", "summer"),
                    ("autumn", "autumn"),
                    ("fall", "autumn"),
                    ("winter", "winter"),
                ],
                "summer",
            ))
            .expect("known value"),
            artistic_style: ArtisticStyle::parse(&pick(
                &[("cartoon", "cartoon"), ("cyberpunk", "cyberpunk"), ("realis", "realism")],
                "realism",
            ))
            .expect("known value"),
            weather: Weather::parse(&pick(
                &[
                    ("snowfall", "snowfall"),
                    ("snowing", "snowfall"),
                    ("sandstorm", "sandstorm"),
                    ("rain", "rain"),
                    ("mist", "mist"),
                    ("fog", "mist"),
                    ("sunny", "sunny"),
                ],
                "sunny",
            ))
            .expect("known value"),
            time_of_day: TimeOfDay::parse(&pick(
                &[("night", "night"), ("afternoon", "afternoon"), ("day", "daytime")],
                "daytime",
            ))
            .expect("known value"),
        };

        let rules = default_rule_table();
        let fine = expand_coarse_to_fine(&coarse, rules, seed::derive(self.seed, "mock.fine"))
            .expect("default table covers all seasons");
        let agents = parse_agents(&text);
        EnvironmentConfig::new(coarse, fine, agents).to_json()
    }
}

/// Recover the `p` from "create a {p}x{p} letter matrix".
fn parse_matrix_size(system_prompt: &str) -> Option<usize> {
    for token in system_prompt.split_whitespace() {
        if let Some((a, b)) = token.split_once('x') {
            if let (Ok(pa), Ok(pb)) = (a.parse::<usize>(), b.parse::<usize>()) {
                if pa == pb && pa >= 2 {
                    return Some(pa);
                }
            }
        }
    }
    None
}

/// Recover `(symbol, asset class)` pairs from legend lines by matching the
/// descriptions against the class keyword sets.
fn parse_legend(system_prompt: &str) -> Vec<(char, String)> {
    let mut out = Vec::new();
    for line in system_prompt.lines() {
        let bytes = line.as_bytes();
        if bytes.len() < 3 || !bytes[0].is_ascii_uppercase() || bytes[1] != b':' {
            continue;
        }
        let symbol = bytes[0] as char;
        let description = line[2..].trim().to_ascii_lowercase();
        let class = CLASS_KEYWORDS
            .iter()
            .find(|(_, words)| words.iter().any(|w| description.contains(w)))
            .map(|(class, _)| (*class).to_string())
            .unwrap_or_else(|| description.clone());
        out.push((symbol, class));
    }
    out
}

/// Sector rectangle (r0, r1, c0, c1) for the position words in a clause,
/// with a seeded one-cell boundary jitter. "center"/"central" dominates the
/// clause (a concentrated fill of the middle block); "middle" is a row-band
/// modifier so "middle left" narrows rows and columns independently.
fn clause_rect(clause: &str, p: usize, jitter_seed: u64) -> (usize, usize, usize, usize) {
    let third = p / 3;
    let (mut r0, mut r1) = (0usize, p);
    let (mut c0, mut c1) = (0usize, p);

    if clause.contains("center") || clause.contains("central") {
        r0 = p / 4;
        r1 = p - p / 4;
        c0 = p / 4;
        c1 = p - p / 4;
    } else {
        let mut any = false;
        if clause.contains("left") || clause.contains("west") {
            c1 = third;
            any = true;
        }
        if clause.contains("right") || clause.contains("east") {
            c0 = p - third;
            any = true;
        }
        if clause.contains("upper") || clause.contains("top") || clause.contains("north") {
            r1 = third;
            any = true;
        }
        if clause.contains("lower") || clause.contains("bottom") || clause.contains("south") {
            r0 = p - third;
            any = true;
        }
        if clause.contains("middle") {
            r0 = third;
            r1 = p - third;
            any = true;
        }
        if !any {
            // No position mention: a broad middle band keeps the base visible.
            r0 = p / 4;
            r1 = p - p / 4;
        }
    }

    // One-cell jitter on each edge, kept inside the grid and non-empty.
    let j = |k: u64| (seed::derive(jitter_seed, &k.to_string()) % 3) as i64 - 1;
    let adjust = |v: usize, d: i64, hi: usize| -> usize {
        (v as i64 + d).clamp(0, hi as i64) as usize
    };
    let nr0 = adjust(r0.min(p - 1), j(0), p - 1);
    let nr1 = adjust(r1, j(1), p).max(nr0 + 1);
    let nc0 = adjust(c0.min(p - 1), j(2), p - 1);
    let nc1 = adjust(c1, j(3), p).max(nc0 + 1);
    (nr0, nr1, nc0, nc1)
}

const NUMBER_WORDS: &[(&str, u32)] = &[
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
];

const CATEGORY_PHRASES: &[(&str, &str)] = &[
    ("humanoid robot", "humanoid_robot"),
    ("robotic dog", "robotic_dog"),
    ("ancient warrior", "ancient_warrior"),
    ("aerial robot", "aerial_robot"),
    ("goblin", "goblin"),
    ("eagle", "eagle"),
    ("sheep", "sheep"),
    ("horse", "horse"),
    ("whale", "whale"),
    ("warrior", "ancient_warrior"),
];

const STATE_WORDS: &[(&str, &str)] = &[
    ("grazing", "grazing"),
    ("graze", "grazing"),
    ("patrol", "patrolling"),
    ("swim", "swimming"),
    ("idle", "idle"),
    ("stand", "idle"),
];

const REGION_PHRASES: &[(&str, &str)] = &[
    ("upper left", "upper_left"),
    ("upper center", "upper_center"),
    ("upper right", "upper_right"),
    ("middle left", "middle_left"),
    ("middle center", "middle_center"),
    ("middle right", "middle_right"),
    ("lower left", "lower_left"),
    ("lower center", "lower_center"),
    ("lower right", "lower_right"),
    ("center", "middle_center"),
];

/// Pull `<quantity> <category>` mentions with their clause-local state and
/// region from lowercased instruction text.
fn parse_agents(text: &str) -> Vec<AgentSpec> {
    let rules = default_rule_table();
    let mut agents = Vec::new();
    for clause in text.split(['.', ';']) {
        let mut cursor = 0usize;
        // Earliest category phrase at or past the cursor; longer phrases win
        // position ties so "ancient warrior" beats "warrior".
        while let Some((at, phrase, category)) = CATEGORY_PHRASES
            .iter()
            .filter_map(|(phrase, cat)| {
                clause[cursor..].find(phrase).map(|i| (cursor + i, *phrase, *cat))
            })
            .min_by_key(|&(i, phrase, _)| (i, std::cmp::Reverse(phrase.len())))
        {
            let quantity = clause[..at]
                .split_whitespace()
                .rev()
                .take(3)
                .find_map(|w| {
                    w.parse::<u32>().ok().or_else(|| {
                        NUMBER_WORDS
                            .iter()
                            .find(|(word, _)| *word == w)
                            .map(|(_, n)| *n)
                    })
                })
                .unwrap_or(1)
                .max(1);
            cursor = at + phrase.len();
            let Some(cap) = rules.agent(category) else {
                continue;
            };
            let state = STATE_WORDS
                .iter()
                .find(|(w, _)| clause.contains(w))
                .map(|(_, s)| (*s).to_string())
                .filter(|s| cap.states.contains(s))
                .unwrap_or_else(|| cap.states[0].clone());
            let region = REGION_PHRASES
                .iter()
                .find(|(w, _)| clause.contains(w))
                .and_then(|(_, r)| Region::parse_lenient(r))
                .unwrap_or(Region::MiddleCenter);
            agents.push(AgentSpec {
                category: category.to_string(),
                quantity,
                state,
                region,
            });
        }
    }
    agents
}
