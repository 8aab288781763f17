//! The symbolic layout language: symbol tables, letter matrices, their
//! serialized string form, and conversions to and from segmentation rasters.
//!
//! A scene layout is a `p`×`p` matrix of uppercase letters, one letter per
//! asset class, serialized as `p` lines of `p` symbols with a line break
//! after every row (including the last). Two tables ship built in: `loveda`
//! (seven suburban classes) and `wild` (five wilderness classes).
//!
//! Rows and columns in error values are 1-based, matching how the serialized
//! form reads in an editor.

use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::raster::{self, patch_bounds, RasterError};

/// Maximum Euclidean RGB distance (out of ~441) at which a pixel is still
/// attributed to a table color. Tolerates antialiasing while rejecting
/// unknown classes.
pub const COLOR_TOLERANCE: f64 = 30.0;

/// Default matrix side length.
pub const DEFAULT_P: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum LayoutError {
    #[error("row {row} has {len} symbols, expected {expected}")]
    RaggedRows { row: usize, len: usize, expected: usize },
    #[error("unknown symbol '{symbol}' at row {row}, column {col}")]
    UnknownSymbol { symbol: char, row: usize, col: usize },
    #[error("{rows} rows for a row length of {expected}")]
    WrongDimension { rows: usize, expected: usize },
    #[error("empty layout string")]
    EmptyLayout,
    #[error("pixel ({x}, {y}) color {color:?} is outside tolerance of every table color")]
    UnclassifiablePixel { x: usize, y: usize, color: [u8; 3] },
    #[error("raster {width}x{height} is smaller than the target grid {p}x{p}")]
    RasterTooSmall { width: usize, height: usize, p: usize },
    #[error("duplicate symbol '{0}' in table")]
    DuplicateSymbol(char),
    #[error("duplicate color {0:?} in table")]
    DuplicateColor([u8; 3]),
    #[error("symbol '{0}' is not a single uppercase letter")]
    BadSymbol(char),
    #[error("table has no entries")]
    EmptyTable,
    #[error("unsupported table version {0}")]
    BadTableVersion(u32),
    #[error("table json: {0}")]
    TableJson(#[from] serde_json::Error),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Symbol tables
// ---------------------------------------------------------------------------

/// One row of a symbol table: a letter, the asset class it encodes, the
/// display color used in segmentation rasters, and an optional human-readable
/// description used when assembling generator prompts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolEntry {
    pub symbol: char,
    pub asset_class: String,
    pub color: [u8; 3],
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct SymbolTableFile {
    version: u32,
    name: String,
    entries: Vec<SymbolEntry>,
}

/// A named set of symbol entries. Symbols and display colors are unique
/// within a table; entry order is significant (it breaks classification and
/// majority ties deterministically).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    name: String,
    entries: Vec<SymbolEntry>,
}

impl SymbolTable {
    pub fn new(name: impl Into<String>, entries: Vec<SymbolEntry>) -> Result<Self, LayoutError> {
        if entries.is_empty() {
            return Err(LayoutError::EmptyTable);
        }
        for (i, e) in entries.iter().enumerate() {
            if !(e.symbol.is_ascii_uppercase() && e.symbol.is_ascii_alphabetic()) {
                return Err(LayoutError::BadSymbol(e.symbol));
            }
            for prev in &entries[..i] {
                if prev.symbol == e.symbol {
                    return Err(LayoutError::DuplicateSymbol(e.symbol));
                }
                if prev.color == e.color {
                    return Err(LayoutError::DuplicateColor(e.color));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            entries,
        })
    }

    /// Built-in table for the seven suburban classes.
    pub fn loveda() -> Arc<SymbolTable> {
        static TABLE: OnceLock<Arc<SymbolTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| {
                Arc::new(
                    SymbolTable::from_json(include_str!("../data/tables/loveda.json"))
                        .expect("built-in loveda table is valid"),
                )
            })
            .clone()
    }

    /// Built-in table for the five wilderness classes.
    pub fn wild() -> Arc<SymbolTable> {
        static TABLE: OnceLock<Arc<SymbolTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| {
                Arc::new(
                    SymbolTable::from_json(include_str!("../data/tables/wild.json"))
                        .expect("built-in wild table is valid"),
                )
            })
            .clone()
    }

    /// Resolve a built-in table by name.
    pub fn builtin(name: &str) -> Option<Arc<SymbolTable>> {
        match name {
            "loveda" => Some(Self::loveda()),
            "wild" => Some(Self::wild()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        let file: SymbolTableFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(LayoutError::BadTableVersion(file.version));
        }
        Self::new(file.name, file.entries)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, LayoutError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = SymbolTableFile {
            version: 1,
            name: self.name.clone(),
            entries: self.entries.clone(),
        };
        serde_json::to_string_pretty(&file).expect("table serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[SymbolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> &SymbolEntry {
        &self.entries[index]
    }

    /// Index of the entry carrying `symbol`.
    pub fn index_of_symbol(&self, symbol: char) -> Option<usize> {
        self.entries.iter().position(|e| e.symbol == symbol)
    }

    /// Index of the entry for `asset_class`.
    pub fn index_of_class(&self, asset_class: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.asset_class == asset_class)
    }

    /// Nearest entry to `color` within [`COLOR_TOLERANCE`]; ties break by
    /// entry order.
    pub fn classify_color(&self, color: [u8; 3]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let d = raster::color_distance_sq(color, e.color);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.and_then(|(i, d)| (d.sqrt() <= COLOR_TOLERANCE).then_some(i))
    }
}

// ---------------------------------------------------------------------------
// Layout matrices
// ---------------------------------------------------------------------------

/// A `p`×`p` grid of symbols over a table. Cells are stored as entry indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutMatrix {
    table: Arc<SymbolTable>,
    size: usize,
    cells: Vec<u8>,
}

impl LayoutMatrix {
    /// Build a matrix directly from entry indices (row-major, `size`×`size`).
    pub fn from_cells(
        table: Arc<SymbolTable>,
        size: usize,
        cells: Vec<u8>,
    ) -> Result<Self, LayoutError> {
        if size == 0 || cells.len() != size * size {
            return Err(LayoutError::WrongDimension {
                rows: if size == 0 { 0 } else { cells.len() / size },
                expected: size,
            });
        }
        if let Some(pos) = cells.iter().position(|&c| usize::from(c) >= table.len()) {
            return Err(LayoutError::UnknownSymbol {
                symbol: '?',
                row: pos / size + 1,
                col: pos % size + 1,
            });
        }
        Ok(Self { table, size, cells })
    }

    /// Uniform matrix filled with one symbol.
    pub fn filled(table: Arc<SymbolTable>, size: usize, symbol: char) -> Result<Self, LayoutError> {
        let idx = table
            .index_of_symbol(symbol)
            .ok_or(LayoutError::UnknownSymbol {
                symbol,
                row: 1,
                col: 1,
            })? as u8;
        Self::from_cells(table, size, vec![idx; size * size])
    }

    /// Parse the serialized line form. A trailing line break after the final
    /// row is accepted; rows must otherwise be exactly as long as the first
    /// row, and the row count must equal the row length.
    pub fn parse(text: &str, table: &Arc<SymbolTable>) -> Result<Self, LayoutError> {
        let mut lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
        if let Some(last) = lines.last() {
            if last.is_empty() {
                lines.pop();
            }
        }
        if lines.is_empty() {
            return Err(LayoutError::EmptyLayout);
        }
        let expected = lines[0].chars().count();
        if expected == 0 {
            return Err(LayoutError::EmptyLayout);
        }
        for (i, line) in lines.iter().enumerate() {
            let len = line.chars().count();
            if len != expected {
                return Err(LayoutError::RaggedRows {
                    row: i + 1,
                    len,
                    expected,
                });
            }
        }
        if lines.len() != expected {
            return Err(LayoutError::WrongDimension {
                rows: lines.len(),
                expected,
            });
        }
        let size = expected;
        let mut cells = Vec::with_capacity(size * size);
        for (r, line) in lines.iter().enumerate() {
            for (c, sym) in line.chars().enumerate() {
                let idx = table
                    .index_of_symbol(sym)
                    .ok_or(LayoutError::UnknownSymbol {
                        symbol: sym,
                        row: r + 1,
                        col: c + 1,
                    })?;
                cells.push(idx as u8);
            }
        }
        Ok(Self {
            table: table.clone(),
            size,
            cells,
        })
    }

    /// Serialize to the line form, with a line break after every row
    /// including the last.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(self.size * (self.size + 1));
        for r in 0..self.size {
            for c in 0..self.size {
                out.push(self.symbol(r, c));
            }
            out.push('\n');
        }
        out
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    /// Side length `p`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry index at (row, col), 0-based.
    pub fn cell(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.size + col]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn symbol(&self, row: usize, col: usize) -> char {
        self.table.entry(usize::from(self.cell(row, col))).symbol
    }

    pub fn class(&self, row: usize, col: usize) -> &str {
        &self.table.entry(usize::from(self.cell(row, col))).asset_class
    }

    /// Rotate by `quarter_turns` clockwise quarter turns (taken mod 4).
    pub fn rotated(&self, quarter_turns: u8) -> LayoutMatrix {
        let turns = quarter_turns % 4;
        let p = self.size;
        let mut cells = vec![0u8; p * p];
        for r in 0..p {
            for c in 0..p {
                let (sr, sc) = match turns {
                    0 => (r, c),
                    1 => (p - 1 - c, r),
                    2 => (p - 1 - r, p - 1 - c),
                    _ => (c, p - 1 - r),
                };
                cells[r * p + c] = self.cells[sr * p + sc];
            }
        }
        Self {
            table: self.table.clone(),
            size: p,
            cells,
        }
    }

    /// Mirror horizontally (columns reversed).
    pub fn mirrored(&self) -> LayoutMatrix {
        let p = self.size;
        let mut cells = vec![0u8; p * p];
        for r in 0..p {
            for c in 0..p {
                cells[r * p + c] = self.cells[r * p + (p - 1 - c)];
            }
        }
        Self {
            table: self.table.clone(),
            size: p,
            cells,
        }
    }

    /// Per-class cell counts and fractions, in table order, omitting classes
    /// that do not occur.
    pub fn histogram(&self) -> Vec<ClassShare> {
        let mut counts = vec![0usize; self.table.len()];
        for &c in &self.cells {
            counts[usize::from(c)] += 1;
        }
        let total = self.cells.len() as f64;
        counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| ClassShare {
                asset_class: self.table.entry(i).asset_class.clone(),
                count: n,
                fraction: n as f64 / total,
            })
            .collect()
    }

    /// Paint each cell as a `cell_px`×`cell_px` block of its display color.
    pub fn colorize(&self, cell_px: usize) -> SegmentationRaster {
        assert!(cell_px >= 1, "cell_px must be at least 1");
        let side = self.size * cell_px;
        let mut pixels = vec![[0u8; 3]; side * side];
        for r in 0..self.size {
            for c in 0..self.size {
                let color = self.table.entry(usize::from(self.cell(r, c))).color;
                for dy in 0..cell_px {
                    let y = r * cell_px + dy;
                    let row = &mut pixels[y * side..(y + 1) * side];
                    for dx in 0..cell_px {
                        row[c * cell_px + dx] = color;
                    }
                }
            }
        }
        SegmentationRaster {
            width: side,
            height: side,
            pixels,
            table: self.table.clone(),
        }
    }

    /// Stable content hash of the serialized form.
    pub fn content_hash(&self) -> String {
        crate::seed::sha256_hex(self.serialize().as_bytes())
    }
}

/// Count and fraction of one asset class within a matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassShare {
    pub asset_class: String,
    pub count: usize,
    pub fraction: f64,
}

// ---------------------------------------------------------------------------
// Segmentation rasters
// ---------------------------------------------------------------------------

/// An RGB raster whose pixels encode asset classes through a symbol table's
/// display colors.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationRaster {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
    table: Arc<SymbolTable>,
}

impl SegmentationRaster {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<[u8; 3]>,
        table: Arc<SymbolTable>,
    ) -> Self {
        assert_eq!(pixels.len(), width * height);
        Self {
            width,
            height,
            pixels,
            table,
        }
    }

    pub fn load_png(path: &Path, table: Arc<SymbolTable>) -> Result<Self, LayoutError> {
        let (width, height, pixels) = raster::load_rgb8(path)?;
        Ok(Self {
            width,
            height,
            pixels,
            table,
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<(), LayoutError> {
        raster::save_rgb8(path, self.width, self.height, &self.pixels)?;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    /// Rotate by clockwise quarter turns (square rasters keep their size).
    pub fn rotated(&self, quarter_turns: u8) -> SegmentationRaster {
        let turns = quarter_turns % 4;
        let (w, h) = match turns {
            0 | 2 => (self.width, self.height),
            _ => (self.height, self.width),
        };
        let mut pixels = vec![[0u8; 3]; w * h];
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = match turns {
                    0 => (x, y),
                    1 => (y, self.height - 1 - x),
                    2 => (self.width - 1 - x, self.height - 1 - y),
                    _ => (self.width - 1 - y, x),
                };
                pixels[y * w + x] = self.pixels[sy * self.width + sx];
            }
        }
        SegmentationRaster {
            width: w,
            height: h,
            pixels,
            table: self.table.clone(),
        }
    }

    /// Compress to a `p`×`p` matrix: the raster is split into the balanced
    /// patch grid and each cell takes the majority class within its patch,
    /// ties breaking by table entry order.
    pub fn downsample(&self, p: usize) -> Result<LayoutMatrix, LayoutError> {
        if self.width < p || self.height < p {
            return Err(LayoutError::RasterTooSmall {
                width: self.width,
                height: self.height,
                p,
            });
        }
        let n_classes = self.table.len();
        let mut cells = Vec::with_capacity(p * p);
        for pr in 0..p {
            let (y0, y1) = patch_bounds(pr, self.height, p);
            for pc in 0..p {
                let (x0, x1) = patch_bounds(pc, self.width, p);
                let mut counts = vec![0usize; n_classes];
                for y in y0..y1 {
                    let row = &self.pixels[y * self.width..(y + 1) * self.width];
                    for (x, px) in row[x0..x1].iter().enumerate() {
                        let idx = self.table.classify_color(*px).ok_or(
                            LayoutError::UnclassifiablePixel {
                                x: x0 + x,
                                y,
                                color: *px,
                            },
                        )?;
                        counts[idx] += 1;
                    }
                }
                let mut best = 0usize;
                for (i, &n) in counts.iter().enumerate() {
                    if n > counts[best] {
                        best = i;
                    }
                }
                cells.push(best as u8);
            }
        }
        LayoutMatrix::from_cells(self.table.clone(), p, cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class_table() -> Arc<SymbolTable> {
        Arc::new(
            SymbolTable::new(
                "mini",
                vec![
                    SymbolEntry {
                        symbol: 'W',
                        asset_class: "water".into(),
                        color: [0, 0, 255],
                        description: String::new(),
                    },
                    SymbolEntry {
                        symbol: 'F',
                        asset_class: "forest".into(),
                        color: [0, 255, 0],
                        description: String::new(),
                    },
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn parse_basic() {
        let t = two_class_table();
        let m = LayoutMatrix::parse("WF\nFF\n", &t).unwrap();
        assert_eq!(m.size(), 2);
        assert_eq!(m.symbol(0, 0), 'W');
        assert_eq!(m.symbol(0, 1), 'F');
        assert_eq!(m.symbol(1, 0), 'F');
        assert_eq!(m.symbol(1, 1), 'F');
        // Without the trailing break the same grid parses too.
        assert_eq!(LayoutMatrix::parse("WF\nFF", &t).unwrap(), m);
    }

    #[test]
    fn parse_ragged_row_reports_position() {
        let t = two_class_table();
        match LayoutMatrix::parse("WF\nF\n", &t) {
            Err(LayoutError::RaggedRows { row: 2, len: 1, expected: 2 }) => {}
            other => panic!("expected RaggedRows at row 2, got {other:?}"),
        }
    }

    #[test]
    fn parse_wrong_dimension() {
        let t = two_class_table();
        match LayoutMatrix::parse("WF\nFF\nWW\n", &t) {
            Err(LayoutError::WrongDimension { rows: 3, expected: 2 }) => {}
            other => panic!("expected WrongDimension, got {other:?}"),
        }
    }

    #[test]
    fn parse_unknown_symbol_reports_position() {
        let t = two_class_table();
        match LayoutMatrix::parse("WF\nFX\n", &t) {
            Err(LayoutError::UnknownSymbol { symbol: 'X', row: 2, col: 2 }) => {}
            other => panic!("expected UnknownSymbol at (2,2), got {other:?}"),
        }
    }

    #[test]
    fn uniform_32x32_wild() {
        let m = LayoutMatrix::filled(SymbolTable::wild(), 32, 'B').unwrap();
        assert_eq!(m.cells().len(), 1024);
        let s = m.serialize();
        let reparsed = LayoutMatrix::parse(&s, m.table()).unwrap();
        assert_eq!(reparsed, m);
    }

    #[test]
    fn serialize_length_includes_line_breaks() {
        // 32x32 + 32 breaks = 1056 characters.
        let m = LayoutMatrix::filled(SymbolTable::wild(), 32, 'S').unwrap();
        assert_eq!(m.serialize().len(), 1056);
        assert_eq!(LayoutMatrix::filled(two_class_table(), 2, 'W').unwrap().serialize(), "WW\nWW\n");
    }

    #[test]
    fn rotation_matches_forced_example() {
        // [[A,B],[C,D]] one clockwise quarter turn -> [[C,A],[D,B]].
        let t = Arc::new(
            SymbolTable::new(
                "quad",
                vec![
                    SymbolEntry { symbol: 'A', asset_class: "a".into(), color: [1, 0, 0], description: String::new() },
                    SymbolEntry { symbol: 'B', asset_class: "b".into(), color: [2, 0, 0], description: String::new() },
                    SymbolEntry { symbol: 'C', asset_class: "c".into(), color: [3, 0, 0], description: String::new() },
                    SymbolEntry { symbol: 'D', asset_class: "d".into(), color: [4, 0, 0], description: String::new() },
                ],
            )
            .unwrap(),
        );
        let m = LayoutMatrix::parse("AB\nCD\n", &t).unwrap();
        assert_eq!(m.rotated(1).serialize(), "CA\nDB\n");
        assert_eq!(m.rotated(0), m);
        assert_eq!(m.rotated(1).rotated(1).rotated(1).rotated(1), m);
        assert_eq!(m.rotated(2), m.rotated(1).rotated(1));
    }

    #[test]
    fn histogram_counts() {
        let t = two_class_table();
        let m = LayoutMatrix::parse("WF\nFF\n", &t).unwrap();
        let h = m.histogram();
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].asset_class, "water");
        assert_eq!(h[0].count, 1);
        assert_eq!(h[1].count, 3);
        let total: f64 = h.iter().map(|s| s.fraction).sum();
        assert!((total - 1.0).abs() < 1e-9);

        let all_w = LayoutMatrix::filled(SymbolTable::loveda(), 32, 'W').unwrap();
        let h = all_w.histogram();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].asset_class, "water");
        assert_eq!(h[0].count, 1024);
        assert_eq!(h[0].fraction, 1.0);
    }

    #[test]
    fn histogram_rotation_invariant() {
        let t = two_class_table();
        let m = LayoutMatrix::parse("WF\nFF\n", &t).unwrap();
        for k in 0..4 {
            assert_eq!(m.rotated(k).histogram(), m.histogram());
        }
    }

    #[test]
    fn colorize_then_downsample_is_identity() {
        let t = two_class_table();
        let m = LayoutMatrix::parse("WF\nFW\n", &t).unwrap();
        for cell_px in [1usize, 3, 4] {
            let raster = m.colorize(cell_px);
            assert_eq!(raster.width(), 2 * cell_px);
            assert_eq!(raster.downsample(2).unwrap(), m);
        }
        let big = LayoutMatrix::filled(SymbolTable::loveda(), 32, 'W').unwrap();
        assert_eq!(big.colorize(16).width(), 512);
    }

    #[test]
    fn downsample_majority_and_uniform() {
        let t = two_class_table();
        // 2x2 raster, 3 green (forest) + 1 blue, p=1 -> [[F]].
        let raster = SegmentationRaster::new(
            2,
            2,
            vec![[0, 255, 0], [0, 255, 0], [0, 255, 0], [0, 0, 255]],
            t.clone(),
        );
        let m = raster.downsample(1).unwrap();
        assert_eq!(m.symbol(0, 0), 'F');

        // 64x64 all blue -> 32x32 all 'W'.
        let uniform = SegmentationRaster::new(64, 64, vec![[0, 0, 255]; 64 * 64], t);
        let m = uniform.downsample(32).unwrap();
        assert!(m.cells().iter().all(|&c| c == 0));
    }

    #[test]
    fn downsample_rejects_unknown_color() {
        let t = two_class_table();
        let raster = SegmentationRaster::new(
            2,
            2,
            vec![[0, 255, 0], [200, 40, 90], [0, 255, 0], [0, 0, 255]],
            t,
        );
        match raster.downsample(1) {
            Err(LayoutError::UnclassifiablePixel { x: 1, y: 0, .. }) => {}
            other => panic!("expected UnclassifiablePixel, got {other:?}"),
        }
    }

    #[test]
    fn classify_color_tolerance_boundary() {
        let t = two_class_table();
        // Within tolerance of blue.
        assert_eq!(t.classify_color([0, 20, 240]), Some(0));
        // Beyond tolerance of everything.
        assert_eq!(t.classify_color([128, 128, 128]), None);
    }

    #[test]
    fn builtin_tables_validate() {
        let loveda = SymbolTable::loveda();
        assert_eq!(loveda.len(), 7);
        let wild = SymbolTable::wild();
        assert_eq!(wild.len(), 5);
        assert!(wild.index_of_symbol('S').is_some());
        assert!(wild.index_of_symbol('A').is_none());
        // Round-trip through JSON.
        let json = loveda.to_json();
        assert_eq!(SymbolTable::from_json(&json).unwrap(), *loveda);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix() -> impl Strategy<Value = LayoutMatrix> {
            (2usize..12).prop_flat_map(|p| {
                prop::collection::vec(0u8..5, p * p).prop_map(move |cells| {
                    LayoutMatrix::from_cells(SymbolTable::wild(), p, cells).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn round_trip(m in arb_matrix()) {
                let s = m.serialize();
                let back = LayoutMatrix::parse(&s, m.table()).unwrap();
                prop_assert_eq!(&back, &m);
                prop_assert_eq!(back.serialize(), s);
            }

            #[test]
            fn rotate_is_z4_action(m in arb_matrix(), k in 0u8..4, j in 0u8..4) {
                prop_assert_eq!(m.rotated(k).rotated(j), m.rotated((k + j) % 4));
            }

            #[test]
            fn histogram_matches_recount(m in arb_matrix()) {
                let h = m.histogram();
                let total: usize = h.iter().map(|s| s.count).sum();
                prop_assert_eq!(total, m.size() * m.size());
                for share in &h {
                    let idx = m.table().index_of_class(&share.asset_class).unwrap() as u8;
                    let n = m.cells().iter().filter(|&&c| c == idx).count();
                    prop_assert_eq!(n, share.count);
                }
            }

            #[test]
            fn downsample_agrees_with_bruteforce(
                seed in 0u64..1000,
                w in 33usize..80,
                h in 33usize..80,
            ) {
                let table = SymbolTable::wild();
                // Pseudo-random raster over table colors.
                let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
                let mut next = || {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    state
                };
                let pixels: Vec<[u8; 3]> = (0..w * h)
                    .map(|_| table.entry((next() % 5) as usize).color)
                    .collect();
                let raster = SegmentationRaster::new(w, h, pixels, table.clone());
                let p = 8;
                let m = raster.downsample(p).unwrap();

                // Independent brute-force per-patch counter.
                for pr in 0..p {
                    for pc in 0..p {
                        let (y0, y1) = patch_bounds(pr, h, p);
                        let (x0, x1) = patch_bounds(pc, w, p);
                        let mut counts = vec![0usize; table.len()];
                        for y in y0..y1 {
                            for x in x0..x1 {
                                let px = raster.pixel(x, y);
                                let mut best = 0;
                                let mut best_d = f64::MAX;
                                for (i, e) in table.entries().iter().enumerate() {
                                    let d = crate::raster::color_distance_sq(px, e.color);
                                    if d < best_d {
                                        best_d = d;
                                        best = i;
                                    }
                                }
                                counts[best] += 1;
                            }
                        }
                        let mut major = 0;
                        for (i, &n) in counts.iter().enumerate() {
                            if n > counts[major] {
                                major = i;
                            }
                        }
                        prop_assert_eq!(usize::from(m.cell(pr, pc)), major);
                    }
                }
            }
        }
    }
}
