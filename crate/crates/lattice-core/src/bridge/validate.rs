//! Strict validation of generator output, with bounded repair.
//!
//! Generated matrices often arrive with prose around them, a short row, or a
//! stray symbol; those are cheap to fix mechanically. Heavy repair would
//! silently invent scenes, so every touched cell is logged and the total is
//! capped (default 5% of the matrix) — past the budget the response is
//! rejected instead of patched.

use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use crate::config::{parse_config_value, RuleTable};
use crate::layout::{LayoutMatrix, SymbolTable};

use super::{BridgeError, GeneratorResponse, Payload};

/// Fraction of matrix cells the repair pass may touch.
pub const DEFAULT_REPAIR_BUDGET: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    PaddedRow,
    TruncatedRow,
    AddedRow,
    DroppedRow,
    ReplacedSymbol,
    ClampedNumber,
}

/// One logged repair. `cells_touched` counts against the budget; clamps on
/// config numerics carry zero cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Repair {
    pub kind: RepairKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col: Option<usize>,
    pub cells_touched: usize,
    pub detail: String,
}

impl Repair {
    fn new(kind: RepairKind, row: Option<usize>, col: Option<usize>, cells: usize, detail: String) -> Repair {
        Repair {
            kind,
            row,
            col,
            cells_touched: cells,
            detail,
        }
    }
}

// ---------------------------------------------------------------------------
// Layout responses
// ---------------------------------------------------------------------------

/// Validate a layout response: locate the maximal block of symbol lines,
/// repair row lengths, row count, and unknown symbols (in that order), and
/// reject once repairs exceed the budget. Accepted output always parses
/// cleanly as a `p`-by-`p` matrix over `table`.
pub fn validate_layout_response(
    raw_text: &str,
    table: &Arc<SymbolTable>,
    p: usize,
    budget_frac: f64,
) -> Result<GeneratorResponse, BridgeError> {
    let budget_cells = (budget_frac * (p * p) as f64).floor() as usize;
    let symbols: Vec<char> = table.entries().iter().map(|e| e.symbol).collect();

    // Candidate matrix lines: whitespace stripped, at least half the
    // characters drawn from the table's symbols.
    let lines: Vec<String> = raw_text
        .replace("\r\n", "\n")
        .replace('\r', "\n")
        .split('\n')
        .map(|l| l.chars().filter(|c| !c.is_whitespace()).collect::<String>())
        .collect();
    let is_matrix_line = |l: &String| {
        if l.len() < 2 {
            return false;
        }
        let hits = l.chars().filter(|c| symbols.contains(c)).count();
        hits * 2 >= l.chars().count()
    };

    // Longest consecutive run of matrix lines (first on ties).
    let mut best: Option<(usize, usize)> = None; // (start, len)
    let mut run_start = None;
    for (i, line) in lines.iter().enumerate() {
        if is_matrix_line(line) {
            run_start.get_or_insert(i);
        } else if let Some(s) = run_start.take() {
            let len = i - s;
            if best.map_or(true, |(_, bl)| len > bl) {
                best = Some((s, len));
            }
        }
    }
    if let Some(s) = run_start {
        let len = lines.len() - s;
        if best.map_or(true, |(_, bl)| len > bl) {
            best = Some((s, len));
        }
    }
    let Some((start, rows_found)) = best else {
        return Err(BridgeError::Unrepairable {
            rows_found: 0,
            cells_touched: 0,
            budget_cells,
        });
    };

    let mut grid: Vec<Vec<char>> = lines[start..start + rows_found]
        .iter()
        .map(|l| l.chars().collect())
        .collect();
    let mut repairs: Vec<Repair> = Vec::new();
    let mut touched = 0usize;

    // Row lengths: truncate long rows, pad short rows with their last symbol.
    for (r, row) in grid.iter_mut().enumerate() {
        if row.len() > p {
            let extra = row.len() - p;
            row.truncate(p);
            touched += extra;
            repairs.push(Repair::new(
                RepairKind::TruncatedRow,
                Some(r + 1),
                None,
                extra,
                format!("dropped {extra} trailing symbols"),
            ));
        } else if row.len() < p {
            let missing = p - row.len();
            let filler = *row.last().expect("matrix lines are non-empty");
            row.extend(std::iter::repeat(filler).take(missing));
            touched += missing;
            repairs.push(Repair::new(
                RepairKind::PaddedRow,
                Some(r + 1),
                None,
                missing,
                format!("padded {missing} symbols with '{filler}'"),
            ));
        }
    }

    // Row count: drop extras from the end, duplicate the last row upward.
    while grid.len() > p {
        grid.pop();
        touched += p;
        repairs.push(Repair::new(
            RepairKind::DroppedRow,
            Some(grid.len() + 1),
            None,
            p,
            "dropped surplus row".into(),
        ));
    }
    while grid.len() < p {
        let last = grid.last().expect("at least one row").clone();
        grid.push(last);
        touched += p;
        repairs.push(Repair::new(
            RepairKind::AddedRow,
            Some(grid.len()),
            None,
            p,
            "duplicated final row".into(),
        ));
    }

    // Unknown symbols: replace with the majority of originally-valid
    // 8-neighbors, falling back to the grid majority, then to entry 0.
    let valid = |c: char| table.index_of_symbol(c).is_some();
    let validity: Vec<Vec<bool>> = grid.iter().map(|row| row.iter().map(|&c| valid(c)).collect()).collect();
    let mut global_counts = vec![0usize; table.len()];
    for row in &grid {
        for &c in row {
            if let Some(i) = table.index_of_symbol(c) {
                global_counts[i] += 1;
            }
        }
    }
    let global_majority = majority_index(&global_counts).unwrap_or(0);
    let mut replacements: Vec<(usize, usize, char)> = Vec::new();
    for r in 0..p {
        for c in 0..p {
            if validity[r][c] {
                continue;
            }
            let mut counts = vec![0usize; table.len()];
            let mut any = false;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= p as i64 || nc >= p as i64 {
                        continue;
                    }
                    let (nr, nc) = (nr as usize, nc as usize);
                    if validity[nr][nc] {
                        counts[table.index_of_symbol(grid[nr][nc]).expect("valid")] += 1;
                        any = true;
                    }
                }
            }
            let idx = if any {
                majority_index(&counts).expect("some neighbor counted")
            } else {
                global_majority
            };
            replacements.push((r, c, table.entry(idx).symbol));
        }
    }
    for (r, c, sym) in replacements {
        let old = grid[r][c];
        grid[r][c] = sym;
        touched += 1;
        repairs.push(Repair::new(
            RepairKind::ReplacedSymbol,
            Some(r + 1),
            Some(c + 1),
            1,
            format!("'{old}' -> '{sym}' by neighborhood majority"),
        ));
    }

    if touched > budget_cells {
        return Err(BridgeError::Unrepairable {
            rows_found,
            cells_touched: touched,
            budget_cells,
        });
    }

    let mut text = String::with_capacity(p * (p + 1));
    for row in &grid {
        text.extend(row.iter());
        text.push('\n');
    }
    let matrix = LayoutMatrix::parse(&text, table)?;
    Ok(GeneratorResponse {
        raw_text: raw_text.to_string(),
        payload: Payload::Layout(matrix),
        repairs,
    })
}

fn majority_index(counts: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &n) in counts.iter().enumerate() {
        if n > 0 && best.map_or(true, |b| n > counts[b]) {
            best = Some(i);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Config responses
// ---------------------------------------------------------------------------

/// Validate a config response: extract the first JSON object, clamp
/// out-of-range numerics to their bounds (logged), and parse strictly.
/// Unknown enum values are rejected, never guessed.
pub fn validate_config_response(
    raw_text: &str,
    rules: &RuleTable,
) -> Result<GeneratorResponse, BridgeError> {
    let mut value = extract_first_json_object(raw_text).ok_or(BridgeError::NoJsonFound)?;
    let mut repairs = Vec::new();
    clamp_config_numbers(&mut value, &mut repairs);
    let cfg = parse_config_value(&value, rules)?;
    Ok(GeneratorResponse {
        raw_text: raw_text.to_string(),
        payload: Payload::Config(cfg),
        repairs,
    })
}

/// Scan for the first balanced `{...}` block that parses as JSON.
fn extract_first_json_object(text: &str) -> Option<Value> {
    let bytes = text.as_bytes();
    let mut search_from = 0usize;
    while let Some(offset) = text[search_from..].find('{') {
        let start = search_from + offset;
        if let Some(end) = balanced_end(bytes, start) {
            if let Ok(v) = serde_json::from_str::<Value>(&text[start..=end]) {
                if v.is_object() {
                    return Some(v);
                }
            }
        }
        search_from = start + 1;
    }
    None
}

/// Index of the brace closing the object opened at `start`, skipping string
/// literals and escapes.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0i32;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Clamp the known numeric fields into their documented ranges, logging each
/// change. Enum strings and structural problems are left for the parser.
fn clamp_config_numbers(value: &mut Value, repairs: &mut Vec<Repair>) {
    let mut clamp = |v: &mut Value, lo: f64, hi: f64, path: String| {
        if let Some(x) = v.as_f64() {
            let clamped = x.clamp(lo, hi);
            if clamped != x {
                *v = serde_json::Number::from_f64(clamped).map(Value::Number).unwrap_or_else(|| v.clone());
                repairs.push(Repair::new(
                    RepairKind::ClampedNumber,
                    None,
                    None,
                    0,
                    format!("{path}: {x} -> {clamped}"),
                ));
            }
        }
    };

    if let Some(fine) = value.get_mut("fine").and_then(Value::as_object_mut) {
        for (class, entry) in fine.iter_mut() {
            let Some(obj) = entry.as_object_mut() else {
                continue;
            };
            if let Some(d) = obj.get_mut("density") {
                clamp(d, 0.0, 1.0, format!("$.fine.{class}.density"));
            }
            if let Some(rot) = obj.get_mut("rotation").and_then(Value::as_array_mut) {
                for (i, comp) in rot.iter_mut().enumerate() {
                    clamp(
                        comp,
                        0.0,
                        360.0f64.next_down(),
                        format!("$.fine.{class}.rotation[{i}]"),
                    );
                }
            }
            for (key, hi) in [("height", 1.0), ("wind", 1.0), ("slope", 45.0)] {
                if let Some(x) = obj.get_mut(key) {
                    clamp(x, 0.0, hi, format!("$.fine.{class}.{key}"));
                }
            }
        }
    }
    if let Some(agents) = value.get_mut("agents").and_then(Value::as_array_mut) {
        for (i, agent) in agents.iter_mut().enumerate() {
            let Some(obj) = agent.as_object_mut() else {
                continue;
            };
            if let Some(q) = obj.get_mut("quantity") {
                if q.as_u64() == Some(0) {
                    *q = Value::from(1u64);
                    repairs.push(Repair::new(
                        RepairKind::ClampedNumber,
                        None,
                        None,
                        0,
                        format!("$.agents[{i}].quantity: 0 -> 1"),
                    ));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_rule_table;

    fn wild() -> Arc<SymbolTable> {
        SymbolTable::wild()
    }

    fn perfect_matrix(p: usize) -> String {
        let mut s = String::new();
        for r in 0..p {
            for c in 0..p {
                s.push(if (r + c) % 3 == 0 { 'W' } else { 'B' });
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn perfect_text_needs_no_repair() {
        let text = perfect_matrix(32);
        let resp = validate_layout_response(&text, &wild(), 32, DEFAULT_REPAIR_BUDGET).unwrap();
        assert!(resp.repairs.is_empty());
        assert_eq!(resp.payload.as_layout().unwrap().serialize(), text);
    }

    #[test]
    fn prose_wrapper_is_stripped_without_repairs() {
        let text = format!(
            "Sure! Here is the matrix you asked for:\n\n{}\nI hope this helps.",
            perfect_matrix(32)
        );
        let resp = validate_layout_response(&text, &wild(), 32, DEFAULT_REPAIR_BUDGET).unwrap();
        assert!(resp.repairs.is_empty());
        assert_eq!(resp.payload.as_layout().unwrap().size(), 32);
    }

    #[test]
    fn short_row_is_padded_with_its_last_symbol() {
        let mut text = perfect_matrix(8);
        // Remove the final symbol of row 3.
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2].pop();
        let last = lines[2].chars().last().unwrap();
        text = lines.join("\n") + "\n";
        let resp = validate_layout_response(&text, &wild(), 8, DEFAULT_REPAIR_BUDGET).unwrap();
        assert_eq!(resp.repairs.len(), 1);
        assert_eq!(resp.repairs[0].kind, RepairKind::PaddedRow);
        assert_eq!(resp.repairs[0].cells_touched, 1);
        assert_eq!(resp.payload.as_layout().unwrap().symbol(2, 7), last);
    }

    #[test]
    fn unknown_symbols_take_neighborhood_majority() {
        let mut text = String::new();
        for r in 0..8 {
            for _c in 0..8 {
                text.push(if r < 4 { 'S' } else { 'W' });
            }
            text.push('\n');
        }
        let mut chars: Vec<char> = text.chars().collect();
        chars[9 * 1] = 'X'; // row 1 col 0 (after 9-char stride with newline)
        let text: String = chars.into_iter().collect();
        let resp = validate_layout_response(&text, &wild(), 8, DEFAULT_REPAIR_BUDGET).unwrap();
        assert_eq!(resp.repairs.len(), 1);
        assert_eq!(resp.repairs[0].kind, RepairKind::ReplacedSymbol);
        assert_eq!(resp.payload.as_layout().unwrap().symbol(1, 0), 'S');
    }

    #[test]
    fn heavy_corruption_is_rejected() {
        // 40% unknown symbols blows the 5% budget.
        let mut text = String::new();
        let mut k = 0usize;
        for _r in 0..32 {
            for _c in 0..32 {
                text.push(if k % 5 < 2 { 'X' } else { 'B' });
                k += 1;
            }
            text.push('\n');
        }
        match validate_layout_response(&text, &wild(), 32, DEFAULT_REPAIR_BUDGET) {
            Err(BridgeError::Unrepairable {
                cells_touched,
                budget_cells,
                ..
            }) => {
                assert!(cells_touched > budget_cells);
                assert_eq!(budget_cells, 51);
            }
            other => panic!("expected Unrepairable, got {:?}", other.map(|r| r.repairs.len())),
        }
    }

    #[test]
    fn no_matrix_at_all_is_rejected() {
        match validate_layout_response(
            "I could not generate a matrix, sorry.",
            &wild(),
            32,
            DEFAULT_REPAIR_BUDGET,
        ) {
            Err(BridgeError::Unrepairable { rows_found: 0, .. }) => {}
            other => panic!("expected Unrepairable, got {:?}", other.map(|r| r.repairs.len())),
        }
    }

    #[test]
    fn row_count_repairs_are_budgeted() {
        // 31 rows of 32: one duplicated row = 32 touched cells, within the
        // 51-cell budget.
        let mut text = String::new();
        for _ in 0..31 {
            text.push_str(&"B".repeat(32));
            text.push('\n');
        }
        let resp = validate_layout_response(&text, &wild(), 32, DEFAULT_REPAIR_BUDGET).unwrap();
        assert_eq!(resp.repairs.len(), 1);
        assert_eq!(resp.repairs[0].kind, RepairKind::AddedRow);
        // 29 rows -> 96 touched cells exceeds the budget.
        let mut text = String::new();
        for _ in 0..29 {
            text.push_str(&"B".repeat(32));
            text.push('\n');
        }
        assert!(matches!(
            validate_layout_response(&text, &wild(), 32, DEFAULT_REPAIR_BUDGET),
            Err(BridgeError::Unrepairable { .. })
        ));
    }

    #[test]
    fn config_in_prose_wrapper_parses_cleanly() {
        let raw = r#"Here is your configuration:
{"version": 1,
 "coarse": {"terrain_type": "suburbs", "season": "summer",
            "artistic_style": "realism", "weather": "sunny",
            "time_of_day": "daytime"},
 "agents": []}
Let me know if you need anything else."#;
        let resp = validate_config_response(raw, default_rule_table()).unwrap();
        assert!(resp.repairs.is_empty());
        assert!(resp.payload.as_config().is_some());
    }

    #[test]
    fn out_of_range_density_is_clamped_and_logged() {
        let raw = r#"{"version": 1,
 "coarse": {"terrain_type": "suburbs", "season": "summer",
            "artistic_style": "realism", "weather": "sunny",
            "time_of_day": "daytime"},
 "fine": {"grass": {"seasonal_variant": 0, "material_variant": 0, "density": 1.2}},
 "agents": []}"#;
        let resp = validate_config_response(raw, default_rule_table()).unwrap();
        assert_eq!(resp.repairs.len(), 1);
        assert_eq!(resp.repairs[0].kind, RepairKind::ClampedNumber);
        let cfg = resp.payload.as_config().unwrap();
        assert_eq!(cfg.fine["grass"].density, 1.0);
    }

    #[test]
    fn unknown_enum_is_rejected_not_guessed() {
        let raw = r#"{"version": 1,
 "coarse": {"terrain_type": "suburbs", "season": "summer",
            "artistic_style": "realism", "weather": "sunny",
            "time_of_day": "daytime"},
 "agents": [{"category": "dragon", "quantity": 1, "state": "idle", "region": "center"}]}"#;
        match validate_config_response(raw, default_rule_table()) {
            Err(BridgeError::Config(crate::config::ConfigError::UnknownEnum { value, .. })) => {
                assert_eq!(value, "dragon");
            }
            other => panic!("expected UnknownEnum, got {:?}", other.map(|r| r.repairs.len())),
        }
    }

    #[test]
    fn missing_json_is_reported() {
        match validate_config_response("no json here", default_rule_table()) {
            Err(BridgeError::NoJsonFound) => {}
            other => panic!("expected NoJsonFound, got {:?}", other.map(|r| r.repairs.len())),
        }
    }

    #[test]
    fn json_extraction_skips_braces_in_strings() {
        let raw = r#"prefix {"version": 1, "coarse": {"terrain_type": "suburbs",
 "season": "summer", "artistic_style": "realism", "weather": "sunny",
 "time_of_day": "daytime"}, "agents": []} suffix"#;
        let resp = validate_config_response(raw, default_rule_table()).unwrap();
        assert!(resp.payload.as_config().is_some());
    }
}
