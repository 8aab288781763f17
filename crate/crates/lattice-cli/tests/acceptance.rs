//! Acceptance suite: twelve numbered criteria covering table fidelity,
//! round trips, decoding invariants, determinism, constraint soundness,
//! terrain conservation, scatter statistics, the offline end-to-end path,
//! augmentation arithmetic, and response-repair robustness.
//!
//! Each criterion prints one `[PASS]` line with its runtime (visible with
//! `--nocapture`) and enforces its time budget.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use lattice_core::bridge::{validate_layout_response, BridgeError, DEFAULT_REPAIR_BUDGET};
use lattice_core::config::{
    agent_region_habitat_cells, check_consistency, default_rule_table, region_cells, Region,
};
use lattice_core::decoder::{decode_layout, masks_from_layout, upscale_nearest, DecodeParams};
use lattice_core::exec::ExecMode;
use lattice_core::forge::{forge_records, tile_source, ForgeOptions, LayoutContext, Tile};
use lattice_core::layout::{LayoutMatrix, SegmentationRaster, SymbolTable};
use lattice_core::placement::{
    compile, scatter_assets, BuildingRules, CompileParams, InstanceKind, ScatterRules,
    WorldParams, SCATTER_SOURCES,
};
use lattice_core::raster::{color_distance_sq, patch_bounds, sector_bounds};
use lattice_core::seed;
use lattice_core::terrain::{erode, flow_field, ErodeParams, Heightmap};

fn criterion(id: u32, name: &str, limit_s: f64, body: impl FnOnce()) {
    let start = Instant::now();
    body();
    let elapsed = start.elapsed().as_secs_f64();
    println!("[PASS] criterion {id:2}: {name} ({elapsed:.2}s < {limit_s:.0}s)");
    assert!(
        elapsed < limit_s,
        "criterion {id} exceeded its {limit_s}s budget: {elapsed:.2}s"
    );
}

struct XorShift(u64);

impl XorShift {
    fn new(seed: u64) -> XorShift {
        XorShift(seed | 1)
    }

    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }
}

// ---------------------------------------------------------------------------
// 1. Symbol-table fidelity
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_symbol_table_fidelity() {
    criterion(1, "symbol-table fidelity", 1.0, || {
        let loveda = SymbolTable::loveda();
        let expect_loveda = [
            ('A', "farmland"),
            ('B', "building"),
            ('D', "barren"),
            ('F', "forest"),
            ('G', "grassland"),
            ('R', "road"),
            ('W', "water"),
        ];
        assert_eq!(loveda.len(), 7);
        for (i, (symbol, class)) in expect_loveda.iter().enumerate() {
            assert_eq!(loveda.entry(i).symbol, *symbol);
            assert_eq!(loveda.entry(i).asset_class, *class);
        }

        let wild = SymbolTable::wild();
        let expect_wild = [
            ('B', "grassland"),
            ('F', "forest"),
            ('R', "rocky"),
            ('S', "snow"),
            ('W', "water"),
        ];
        assert_eq!(wild.len(), 5);
        for (i, (symbol, class)) in expect_wild.iter().enumerate() {
            assert_eq!(wild.entry(i).symbol, *symbol);
            assert_eq!(wild.entry(i).asset_class, *class);
        }
        // Wild has S and lacks A/D/G; the shared rows agree across tables.
        assert!(wild.index_of_symbol('S').is_some());
        for missing in ['A', 'D', 'G'] {
            assert!(wild.index_of_symbol(missing).is_none());
        }
        for shared in ['F', 'W'] {
            let a = loveda.index_of_symbol(shared).unwrap();
            let b = wild.index_of_symbol(shared).unwrap();
            assert_eq!(loveda.entry(a).asset_class, wild.entry(b).asset_class);
        }
    });
}

// ---------------------------------------------------------------------------
// 2. Parameter-table fidelity
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_parameter_table_fidelity() {
    criterion(2, "parameter-table fidelity", 1.0, || {
        let rules = default_rule_table();
        assert_eq!(rules.total_seasonal_variants(), 49);
        assert_eq!(rules.total_material_variants(), 37);
        let rows: [(&str, usize, usize); 11] = [
            ("grass", 3, 4),
            ("flower", 2, 4),
            ("dead_branch", 2, 4),
            ("stone", 3, 4),
            ("architecture", 4, 3),
            ("road", 2, 2),
            ("lake", 2, 2),
            ("desert", 6, 3),
            ("forest", 18, 4),
            ("crops", 4, 4),
            ("snow_mountain", 3, 3),
        ];
        assert_eq!(rules.assets.len(), rows.len());
        for (class, seasonal, material) in rows {
            let asset = rules.asset(class).unwrap_or_else(|| panic!("missing {class}"));
            assert_eq!(asset.seasonal_variants, seasonal, "{class}");
            assert_eq!(asset.material_variants, material, "{class}");
        }
    });
}

// ---------------------------------------------------------------------------
// 3. Layout language round trip
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_layout_round_trip() {
    criterion(3, "layout language round trip (10,000 matrices)", 10.0, || {
        let tables = [SymbolTable::loveda(), SymbolTable::wild()];
        let mut rng = XorShift::new(0x5eed);
        for i in 0..10_000usize {
            let table = &tables[i % 2];
            let cells: Vec<u8> = (0..32 * 32)
                .map(|_| (rng.next() % table.len() as u64) as u8)
                .collect();
            let m = LayoutMatrix::from_cells(table.clone(), 32, cells).unwrap();
            let s = m.serialize();
            let parsed = LayoutMatrix::parse(&s, table).unwrap();
            assert_eq!(parsed, m);
            assert_eq!(parsed.serialize(), s);
        }
    });
}

// ---------------------------------------------------------------------------
// 4. Downsampling against the brute-force oracle
// ---------------------------------------------------------------------------

/// Independent per-patch majority oracle: nearest table color within the
/// documented tolerance, floor-partition patches, ties by entry order.
fn oracle_downsample(raster: &SegmentationRaster, p: usize) -> Vec<u8> {
    let table = raster.table();
    let mut out = Vec::with_capacity(p * p);
    for pr in 0..p {
        for pc in 0..p {
            let (y0, y1) = patch_bounds(pr, raster.height(), p);
            let (x0, x1) = patch_bounds(pc, raster.width(), p);
            let mut counts = vec![0usize; table.len()];
            for y in y0..y1 {
                for x in x0..x1 {
                    let px = raster.pixel(x, y);
                    let mut best = 0usize;
                    let mut best_d = f64::MAX;
                    for (i, e) in table.entries().iter().enumerate() {
                        let d = color_distance_sq(px, e.color);
                        if d < best_d {
                            best_d = d;
                            best = i;
                        }
                    }
                    assert!(best_d.sqrt() <= 30.0, "unclassifiable test pixel");
                    counts[best] += 1;
                }
            }
            let mut major = 0usize;
            for (i, &n) in counts.iter().enumerate() {
                if n > counts[major] {
                    major = i;
                }
            }
            out.push(major as u8);
        }
    }
    out
}

#[test]
fn criterion_04_downsampling_oracle() {
    criterion(4, "downsampling vs brute-force oracle (200 rasters)", 60.0, || {
        let table = SymbolTable::wild();
        let mut rng = XorShift::new(0xd0c5);
        for _ in 0..200 {
            let pixels: Vec<[u8; 3]> = (0..512 * 512)
                .map(|_| {
                    let base = table.entry((rng.next() % 5) as usize).color;
                    // Antialiasing-style channel noise inside the tolerance.
                    let mut px = base;
                    for channel in px.iter_mut() {
                        let d = (rng.next() % 17) as i32 - 8;
                        *channel = (*channel as i32 + d).clamp(0, 255) as u8;
                    }
                    px
                })
                .collect();
            let raster = SegmentationRaster::new(512, 512, pixels, table.clone());
            let m = raster.downsample(32).expect("classifiable raster");
            let expect = oracle_downsample(&raster, 32);
            assert_eq!(m.cells(), expect.as_slice(), "all 1024 patches must agree");
        }
    });
}

// ---------------------------------------------------------------------------
// 5. Decoder partition of unity
// ---------------------------------------------------------------------------

fn random_layout(table: &Arc<SymbolTable>, p: usize, rng: &mut XorShift) -> LayoutMatrix {
    let cells: Vec<u8> = (0..p * p)
        .map(|_| (rng.next() % table.len() as u64) as u8)
        .collect();
    LayoutMatrix::from_cells(table.clone(), p, cells).unwrap()
}

#[test]
fn criterion_05_partition_of_unity() {
    criterion(5, "decoder partition of unity (50 layouts, 4 sigmas)", 120.0, || {
        let mut rng = XorShift::new(0x9a55);
        let tables = [SymbolTable::loveda(), SymbolTable::wild()];
        for i in 0..50usize {
            let m = random_layout(&tables[i % 2], 32, &mut rng);
            for (si, sigma) in [0.0f64, 1.0, 2.0, 4.0].into_iter().enumerate() {
                let params = DecodeParams {
                    resolution: 512,
                    sigma_px: sigma,
                    noise_amp: if sigma == 0.0 { 0.0 } else { 0.05 },
                    seed: (i * 4 + si) as u64,
                    exec: ExecMode::Parallel,
                };
                let masks = decode_layout(&m, &params).unwrap();
                let n_classes = masks.classes().len();
                let res = masks.resolution();
                let mut sums = vec![0.0f64; res * res];
                for class in masks.classes() {
                    let view = masks.view(class).unwrap();
                    for (acc, v) in sums.iter_mut().zip(view.values) {
                        *acc += v;
                    }
                }
                for (idx, s) in sums.iter().enumerate() {
                    assert!(
                        (s - 1.0).abs() <= 1e-6,
                        "sum {s} at pixel {idx} (sigma {sigma}, {n_classes} classes)"
                    );
                }
                if sigma == 0.0 {
                    let replicated = upscale_nearest(&masks_from_layout(&m), 512).unwrap();
                    assert_eq!(masks, replicated, "sigma=0 path must be block replication");
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 6. CLI determinism across runs and execution modes
// ---------------------------------------------------------------------------

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run_compile(out: &Path, extra: &[&str]) {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_lattice"))
        .args([
            "compile",
            "--layout",
            fixture("layout.txt").to_str().unwrap(),
            "--config",
            fixture("config.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "42",
            "--resolution",
            "256",
            "--quiet",
        ])
        .args(extra)
        .status()
        .expect("binary runs");
    assert!(status.success());
}

fn artifact_bytes(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = vec![(
        "manifest.json".to_string(),
        std::fs::read(out.join("manifest.json")).unwrap(),
    )];
    let mut mask_files: Vec<PathBuf> = std::fs::read_dir(out.join("masks"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    mask_files.sort();
    for path in mask_files {
        files.push((
            path.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&path).unwrap(),
        ));
    }
    files
}

#[test]
fn criterion_06_cli_determinism() {
    criterion(6, "byte-identical compile across runs and exec modes", 60.0, || {
        let dir = tempfile::tempdir().unwrap();
        let mut outputs = Vec::new();
        for i in 0..3 {
            let out = dir.path().join(format!("run{i}"));
            run_compile(&out, &[]);
            outputs.push(artifact_bytes(&out));
        }
        let seq_out = dir.path().join("sequential");
        run_compile(&seq_out, &["--sequential"]);
        outputs.push(artifact_bytes(&seq_out));

        let reference = &outputs[0];
        assert!(reference.iter().any(|(n, _)| n.ends_with(".png")));
        for (i, other) in outputs.iter().enumerate().skip(1) {
            assert_eq!(reference.len(), other.len(), "run {i} artifact count");
            for ((name_a, bytes_a), (name_b, bytes_b)) in reference.iter().zip(other) {
                assert_eq!(name_a, name_b);
                assert_eq!(bytes_a, bytes_b, "{name_a} differs in run {i}");
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 7. Constraint soundness over sampled configs and compiled manifests
// ---------------------------------------------------------------------------

/// A deterministic random layout of sector blobs over a base class, using
/// only the given symbols.
fn blobby_layout(
    table: &Arc<SymbolTable>,
    symbols: &[char],
    p: usize,
    rng: &mut XorShift,
) -> LayoutMatrix {
    let base = table.index_of_symbol(symbols[0]).unwrap() as u8;
    let mut cells = vec![base; p * p];
    let blobs = 2 + (rng.next() % 4) as usize;
    for _ in 0..blobs {
        let sym = symbols[(rng.next() % symbols.len() as u64) as usize];
        let idx = table.index_of_symbol(sym).unwrap() as u8;
        let r0 = (rng.next() % p as u64) as usize;
        let c0 = (rng.next() % p as u64) as usize;
        let h = 2 + (rng.next() % (p as u64 / 2)) as usize;
        let w = 2 + (rng.next() % (p as u64 / 2)) as usize;
        for r in r0..(r0 + h).min(p) {
            for c in c0..(c0 + w).min(p) {
                cells[r * p + c] = idx;
            }
        }
    }
    LayoutMatrix::from_cells(table.clone(), p, cells).unwrap()
}

#[test]
fn criterion_07_constraint_soundness() {
    criterion(7, "constraint soundness (1,000 configs and manifests)", 120.0, || {
        let rules = default_rule_table();
        let mut rng = XorShift::new(0xc0de);
        let heightmap = Heightmap::flat(32, 32, 0);
        let world = WorldParams {
            world_size_m: 256.0,
            max_height_m: 64.0,
        };
        let loveda = SymbolTable::loveda();
        let wild = SymbolTable::wild();
        for i in 0..1_000usize {
            let p = 16;
            // Wild layouts avoid snow so the flat-zero zone grid cannot make
            // the layout itself inconsistent.
            let m = if i % 2 == 0 {
                blobby_layout(&loveda, &['G', 'W', 'F', 'B', 'A', 'R', 'D'], p, &mut rng)
            } else {
                blobby_layout(&wild, &['B', 'F', 'R', 'W'], p, &mut rng)
            };
            let zones = heightmap.zones(p, (20_000, 45_000));
            let ctx = LayoutContext {
                matrix: &m,
                zones: &zones,
            };
            let cfg = sample_one(rules, &ctx, i as u64);
            let report = check_consistency(&cfg, &m, &zones, rules).unwrap();
            assert!(report.is_consistent(), "config {i}: {:?}", report.violations);

            let params = CompileParams {
                resolution: 64,
                sigma_px: 1.0,
                noise_amp: 0.02,
                zone_thresholds: (20_000, 45_000),
                world,
                building: BuildingRules::default(),
                spacing_overrides: Vec::new(),
                seed: i as u64,
                exec: ExecMode::Parallel,
            };
            let out = compile(&m, &heightmap, &cfg, rules, &params).unwrap();

            verify_manifest(&out, &m, &cfg, &params, rules);
        }
    });
}

fn sample_one(
    rules: &'static lattice_core::config::RuleTable,
    ctx: &LayoutContext<'_>,
    seed_value: u64,
) -> lattice_core::config::EnvironmentConfig {
    lattice_core::forge::sample_configs(1, rules, ctx, seed_value)
        .pop()
        .expect("one config requested")
}

fn verify_manifest(
    out: &lattice_core::placement::CompileOutput,
    m: &LayoutMatrix,
    cfg: &lattice_core::config::EnvironmentConfig,
    params: &CompileParams,
    rules: &lattice_core::config::RuleTable,
) {
    let world = params.world.world_size_m;
    let p = m.size();
    let cell_m = world / p as f64;
    let zones = Heightmap::flat(32, 32, 0).zones(p, params.zone_thresholds);

    // Every instance lies inside the world.
    for inst in &out.manifest.instances {
        assert!(inst.position[0] >= 0.0 && inst.position[0] < world);
        assert!(inst.position[1] >= 0.0 && inst.position[1] < world);
    }

    // Scattered assets sit on positive source-mask pixels.
    for inst in out
        .manifest
        .instances
        .iter()
        .filter(|i| i.kind == InstanceKind::Asset)
    {
        let mask_class = SCATTER_SOURCES
            .iter()
            .find(|(class, _, _)| *class == inst.class)
            .and_then(|(_, candidates, _)| {
                candidates.iter().find(|mc| out.masks.view(mc).is_some())
            })
            .expect("scattered class has a mask source");
        let view = out.masks.view(mask_class).unwrap();
        let value = view.at_world(inst.position[0], inst.position[1], world);
        assert!(value > 0.0, "{} instance on a zero mask pixel", inst.class);
    }

    // Buildings: exhaustive pairwise d_min check.
    let buildings: Vec<[f64; 2]> = out
        .manifest
        .instances
        .iter()
        .filter(|i| i.kind == InstanceKind::Building)
        .map(|i| i.position)
        .collect();
    for a in 0..buildings.len() {
        for b in a + 1..buildings.len() {
            let d = ((buildings[a][0] - buildings[b][0]).powi(2)
                + (buildings[a][1] - buildings[b][1]).powi(2))
            .sqrt();
            assert!(
                d >= params.building.d_min_m,
                "building pair at {d:.2} m under d_min"
            );
        }
    }

    // Agents: in their declared sector, on habitat-valid cells.
    let agent_instances: Vec<&lattice_core::placement::Instance> = out
        .manifest
        .instances
        .iter()
        .filter(|i| i.kind == InstanceKind::Agent)
        .collect();
    let mut cursor = 0usize;
    for spec in &cfg.agents {
        let valid: std::collections::HashSet<(usize, usize)> =
            agent_region_habitat_cells(spec, m, &zones, rules)
                .into_iter()
                .collect();
        for _ in 0..spec.quantity {
            let inst = agent_instances[cursor];
            cursor += 1;
            assert_eq!(inst.class, spec.category);
            assert_eq!(inst.state.as_deref(), Some(spec.state.as_str()));
            let col = (inst.position[0] / cell_m).floor() as usize;
            let row = (inst.position[1] / cell_m).floor() as usize;
            assert!(
                valid.contains(&(row, col)),
                "{} at cell ({row}, {col}) outside its habitat/sector",
                spec.category
            );
        }
    }
    assert_eq!(cursor, agent_instances.len());
}

// ---------------------------------------------------------------------------
// 8. Terrain conservation
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_terrain_conservation() {
    criterion(8, "flow sink mass and erosion conservation", 60.0, || {
        let mut rng = XorShift::new(0xf10e);
        for _ in 0..100 {
            let values: Vec<u16> = (0..64 * 64).map(|_| (rng.next() % 60_000) as u16).collect();
            let h = Heightmap::new(64, 64, values, 1.0).unwrap();
            let field = flow_field(&h);
            let sink_mass: f64 = field.sinks().map(|i| field.accumulation[i]).sum();
            assert_eq!(sink_mass, 4096.0, "unit rain must be conserved exactly");
        }

        let values: Vec<u16> = (0..64 * 64).map(|_| (rng.next() % 50_000) as u16).collect();
        let h = Heightmap::new(64, 64, values, 1.0).unwrap();
        let before = h.mass();
        let out = erode(
            &h,
            &ErodeParams {
                iterations: 50,
                talus: 120.0,
                rate: 0.5,
                exec: ExecMode::Parallel,
            },
        );
        assert_eq!(out.clamped_cells, 0);
        let after = out.heightmap.mass();
        let rel = (after as f64 - before as f64).abs() / before as f64;
        assert!(rel <= 1e-6, "mass drift {rel}");
    });
}

// ---------------------------------------------------------------------------
// 9. Scatter statistics
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_scatter_statistics() {
    criterion(9, "scatter counts within 3-sigma binomial bounds", 60.0, || {
        let values = vec![1.0f64; 64 * 64];
        let heightmap = Heightmap::flat(4, 4, 0);
        let world = WorldParams {
            world_size_m: 1000.0,
            max_height_m: 100.0,
        };
        let rules = ScatterRules {
            spacing_m: 10.0, // 100x100 grid -> 10,000 candidates
            ..ScatterRules::default()
        };
        let n = 10_000.0f64;
        for d in [0.1f64, 0.5, 0.9] {
            let sigma = (n * d * (1.0 - d)).sqrt();
            let mut inside = 0usize;
            for trial in 0..100u64 {
                let mask = lattice_core::decoder::MaskView {
                    resolution: 64,
                    values: &values,
                };
                let out = scatter_assets(
                    "grass",
                    mask,
                    d,
                    &rules,
                    &world,
                    &heightmap,
                    seed::derive(1_000 + trial, &format!("scatter-acceptance-{d}")),
                );
                let count = out.len() as f64;
                if (count - n * d).abs() <= 3.0 * sigma {
                    inside += 1;
                }
            }
            assert!(
                inside >= 99,
                "density {d}: only {inside}/100 trials within 3 sigma"
            );
        }
    });
}

// ---------------------------------------------------------------------------
// 10. End-to-end offline generation
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_end_to_end_offline() {
    criterion(10, "offline generate: center-heavy building mask", 30.0, || {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("gen");
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_lattice"))
            .args([
                "generate",
                "--instruction",
                "The map displays a mix of land cover with buildings concentrated \
                 towards the center. The surrounding areas are predominantly covered \
                 in farmland.",
                "--backend",
                "mock",
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "12",
                "--quiet",
            ])
            .status()
            .expect("binary runs");
        assert!(status.success(), "generate must exit 0");
        assert!(out.join("manifest.json").exists());

        // Building mask mass: center sector exceeds each of the eight
        // surrounding sectors.
        let img = image::ImageReader::open(out.join("masks/building.png"))
            .unwrap()
            .decode()
            .unwrap();
        let image::DynamicImage::ImageLuma16(mask) = img else {
            panic!("building mask must be 16-bit grayscale");
        };
        let res = mask.width() as usize;
        let sector_mass = |sr: usize, sc: usize| -> f64 {
            let (y0, y1) = sector_bounds(sr, res);
            let (x0, x1) = sector_bounds(sc, res);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += f64::from(mask.get_pixel(x as u32, y as u32).0[0]) / 65_535.0;
                }
            }
            sum
        };
        let center = sector_mass(1, 1);
        for sr in 0..3 {
            for sc in 0..3 {
                if (sr, sc) == (1, 1) {
                    continue;
                }
                let edge = sector_mass(sr, sc);
                assert!(
                    center > edge,
                    "center mass {center:.1} not above sector ({sr},{sc}) mass {edge:.1}"
                );
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 11. Augmentation arithmetic
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_augmentation_arithmetic() {
    criterion(11, "2,059 tiles x4 rotations = 8,236 records", 60.0, || {
        // A 29x71 grid of 16 px tiles yields exactly 2,059 tiles.
        let table = SymbolTable::loveda();
        let colors: Vec<[u8; 3]> = table.entries().iter().map(|e| e.color).collect();
        let (w, h) = (29 * 16, 71 * 16);
        let mut rng = XorShift::new(0xa0a0);
        let pixels: Vec<[u8; 3]> = (0..w * h)
            .map(|_| colors[(rng.next() % colors.len() as u64) as usize])
            .collect();
        let seg = SegmentationRaster::new(w, h, pixels, table);
        let tiles: Vec<Tile> = tile_source(&seg, None, 16).unwrap();
        assert_eq!(tiles.len(), 2_059);

        let opts = ForgeOptions {
            p: 8,
            rotations: vec![0, 1, 2, 3],
            with_configs: false,
            seed: 2,
            exec: ExecMode::Parallel,
            ..ForgeOptions::default()
        };
        let records = forge_records(&tiles, default_rule_table(), &opts).unwrap();
        assert_eq!(records.len(), 8_236);
        // Records per tile equal the rotation set size exactly.
        assert_eq!(records.len(), tiles.len() * opts.rotations.len());
    });
}

// ---------------------------------------------------------------------------
// 12. Bridge robustness
// ---------------------------------------------------------------------------

fn clean_matrix(p: usize, rng: &mut XorShift) -> Vec<String> {
    (0..p)
        .map(|_| {
            (0..p)
                .map(|_| ['B', 'F', 'R', 'S', 'W'][(rng.next() % 5) as usize])
                .collect()
        })
        .collect()
}

#[test]
fn criterion_12_bridge_robustness() {
    criterion(12, "repairable and unrepairable response corpora", 10.0, || {
        let table = SymbolTable::wild();
        let mut rng = XorShift::new(0xb71d);

        // 50 malformed-but-repairable responses.
        for i in 0..50usize {
            let mut rows = clean_matrix(32, &mut rng);
            let text = match i % 5 {
                0 => format!(
                    "Sure, here is the matrix:\n\n{}\nHope that helps!",
                    rows.join("\n")
                ),
                1 => {
                    // One short row.
                    let r = (rng.next() % 32) as usize;
                    let cut = 1 + (rng.next() % 2) as usize;
                    let len = rows[r].len();
                    rows[r].truncate(len - cut);
                    rows.join("\n") + "\n"
                }
                2 => {
                    // One long row.
                    let r = (rng.next() % 32) as usize;
                    rows[r].push_str("WWB");
                    rows.join("\n") + "\n"
                }
                3 => {
                    // Up to ~3.5% unknown symbols, scattered.
                    let bad = 5 + (i % 31);
                    let mut grid: Vec<Vec<char>> =
                        rows.iter().map(|r| r.chars().collect()).collect();
                    for b in 0..bad {
                        let r = (b * 7 + i) % 32;
                        let c = (b * 13 + i * 3) % 32;
                        grid[r][c] = 'X';
                    }
                    grid.into_iter()
                        .map(|r| r.into_iter().collect::<String>())
                        .collect::<Vec<_>>()
                        .join("\n")
                        + "\n"
                }
                _ => {
                    // A dropped row plus prose.
                    rows.pop();
                    format!("Matrix follows.\n{}\n", rows.join("\n"))
                }
            };
            let resp = validate_layout_response(&text, &table, 32, DEFAULT_REPAIR_BUDGET)
                .unwrap_or_else(|e| panic!("case {i} should repair: {e}"));
            let m = resp.payload.as_layout().expect("layout payload");
            assert_eq!(m.size(), 32);
            if i % 5 != 0 {
                assert!(!resp.repairs.is_empty(), "case {i} should log repairs");
            }
        }

        // 20 responses beyond the repair budget.
        for i in 0..20usize {
            let rows = clean_matrix(32, &mut rng);
            let text = match i % 3 {
                0 => {
                    // ~40% unknown symbols.
                    let mut grid: Vec<Vec<char>> =
                        rows.iter().map(|r| r.chars().collect()).collect();
                    let mut k = 0usize;
                    for row in grid.iter_mut() {
                        for cell in row.iter_mut() {
                            if k % 5 < 2 {
                                *cell = 'Z';
                            }
                            k += 1;
                        }
                    }
                    grid.into_iter()
                        .map(|r| r.into_iter().collect::<String>())
                        .collect::<Vec<_>>()
                        .join("\n")
                        + "\n"
                }
                1 => {
                    // Three dropped rows: 96 touched cells.
                    rows[..29].join("\n") + "\n"
                }
                _ => "No matrix today, only apologies.".to_string(),
            };
            match validate_layout_response(&text, &table, 32, DEFAULT_REPAIR_BUDGET) {
                Err(BridgeError::Unrepairable { .. }) => {}
                other => panic!(
                    "case {i} should be rejected, got {:?}",
                    other.map(|r| r.repairs.len())
                ),
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Region partition sanity used by several criteria above
// ---------------------------------------------------------------------------

#[test]
fn region_partition_is_exact() {
    for p in [16usize, 32, 33] {
        let mut seen = std::collections::HashSet::new();
        for region in Region::ALL {
            for cell in region_cells(*region, p) {
                assert!(seen.insert(cell));
            }
        }
        assert_eq!(seen.len(), p * p);
    }
}
