//! Agent spawning: seeded uniform placement over the habitat-valid cells of
//! each agent's declared region.
//!
//! The candidate set is exactly the one the consistency check counted, so a
//! config that passed checking cannot exhaust it; the error path stays as a
//! defensive contract for callers that skip validation.

use rand::Rng;

use crate::config::{agent_region_habitat_cells, AgentSpec, RuleTable};
use crate::layout::LayoutMatrix;
use crate::seed;
use crate::terrain::{Heightmap, ZoneGrid};

use super::{Instance, InstanceKind, PlacementError, WorldParams};

/// Spawn every requested agent. Each spec gets its own random stream keyed
/// by list position and category; spawn cells are sampled without
/// replacement so instances occupy distinct cells.
pub fn spawn_agents(
    agents: &[AgentSpec],
    m: &LayoutMatrix,
    zones: &ZoneGrid,
    heightmap: &Heightmap,
    rules: &RuleTable,
    world: &WorldParams,
    root_seed: u64,
) -> Result<Vec<Instance>, PlacementError> {
    let cell_m = world.world_size_m / m.size() as f64;
    let mut out = Vec::new();
    for (ai, spec) in agents.iter().enumerate() {
        let mut cells = agent_region_habitat_cells(spec, m, zones, rules);
        let requested = spec.quantity as usize;
        if cells.len() < requested {
            return Err(PlacementError::HabitatExhausted {
                category: spec.category.clone(),
                region: spec.region.to_string(),
                available: cells.len(),
                requested,
            });
        }
        let mut rng = seed::rng(root_seed, &format!("agent.{ai}.{}", spec.category));
        // Partial Fisher-Yates: the first `requested` entries become the
        // sampled cells.
        for i in 0..requested {
            let j = rng.random_range(i..cells.len());
            cells.swap(i, j);
        }
        for &(row, col) in cells.iter().take(requested) {
            let jx: f64 = rng.random();
            let jy: f64 = rng.random();
            let yaw: f64 = rng.random_range(0.0..360.0);
            let x = (col as f64 + jx) * cell_m;
            let y = (row as f64 + jy) * cell_m;
            out.push(Instance {
                kind: InstanceKind::Agent,
                class: spec.category.clone(),
                position: [x, y],
                elevation_m: world.elevation_at(heightmap, x, y),
                orientation: [0.0, yaw, 0.0],
                scale: 1.0,
                state: Some(spec.state.clone()),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{default_rule_table, Region};
    use crate::layout::SymbolTable;
    use crate::terrain::Zone;

    fn spec(category: &str, quantity: u32, state: &str, region: Region) -> AgentSpec {
        AgentSpec {
            category: category.into(),
            quantity,
            state: state.into(),
            region,
        }
    }

    #[test]
    fn sheep_spawn_on_grass_in_their_sector() {
        let m = LayoutMatrix::filled(SymbolTable::loveda(), 32, 'G').unwrap();
        let zones = ZoneGrid::uniform(32, Zone::Low);
        let h = Heightmap::flat(8, 8, 0);
        let world = WorldParams::default();
        let agents = vec![spec("sheep", 9, "grazing", Region::LowerLeft)];
        let out = spawn_agents(
            &agents,
            &m,
            &zones,
            &h,
            default_rule_table(),
            &world,
            42,
        )
        .unwrap();
        assert_eq!(out.len(), 9);
        let cell_m = world.world_size_m / 32.0;
        for inst in &out {
            assert_eq!(inst.state.as_deref(), Some("grazing"));
            let col = (inst.position[0] / cell_m).floor() as usize;
            let row = (inst.position[1] / cell_m).floor() as usize;
            // Lower-left sector of a 32-grid: rows 22.., cols 0..11.
            assert!(row >= 22, "row {row} outside lower band");
            assert!(col <= 10, "col {col} outside left band");
            assert_eq!(m.class(row, col), "grassland");
        }
        // Distinct cells.
        let mut cells: Vec<(usize, usize)> = out
            .iter()
            .map(|i| {
                (
                    (i.position[1] / cell_m).floor() as usize,
                    (i.position[0] / cell_m).floor() as usize,
                )
            })
            .collect();
        cells.sort_unstable();
        cells.dedup();
        assert_eq!(cells.len(), 9);
    }

    #[test]
    fn exhausted_habitat_reports_counts() {
        // One water cell in the region, two swimmers requested.
        let table = SymbolTable::loveda();
        let g = table.index_of_symbol('G').unwrap() as u8;
        let w = table.index_of_symbol('W').unwrap() as u8;
        let mut cells = vec![g; 9 * 9];
        cells[0] = w;
        let m = crate::layout::LayoutMatrix::from_cells(table, 9, cells).unwrap();
        let zones = ZoneGrid::uniform(9, Zone::Low);
        let h = Heightmap::flat(8, 8, 0);
        let agents = vec![spec("whale", 2, "swimming", Region::UpperLeft)];
        match spawn_agents(
            &agents,
            &m,
            &zones,
            &h,
            default_rule_table(),
            &WorldParams::default(),
            1,
        ) {
            Err(PlacementError::HabitatExhausted {
                available: 1,
                requested: 2,
                ..
            }) => {}
            other => panic!("expected HabitatExhausted, got {:?}", other.map(|v| v.len())),
        }
    }

    #[test]
    fn same_seed_spawns_identical_coordinates() {
        let m = LayoutMatrix::filled(SymbolTable::loveda(), 16, 'G').unwrap();
        let zones = ZoneGrid::uniform(16, Zone::Low);
        let h = Heightmap::flat(8, 8, 0);
        let agents = vec![
            spec("horse", 2, "grazing", Region::MiddleRight),
            spec("eagle", 3, "patrolling", Region::UpperCenter),
        ];
        let world = WorldParams::default();
        let a = spawn_agents(&agents, &m, &zones, &h, default_rule_table(), &world, 7).unwrap();
        let b = spawn_agents(&agents, &m, &zones, &h, default_rule_table(), &world, 7).unwrap();
        assert_eq!(a, b);
        let c = spawn_agents(&agents, &m, &zones, &h, default_rule_table(), &world, 8).unwrap();
        assert_ne!(a, c);
    }
}
