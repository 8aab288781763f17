//! D8 single-direction flow routing.
//!
//! Every cell receives one unit of rain and forwards its accumulated total to
//! its steepest-descent neighbor (slope weighted by neighbor distance, 1 for
//! cardinal and sqrt(2) for diagonal moves). Cells without a strictly lower
//! neighbor — pits, flats, and border outlets — keep what they receive, so
//! the total absorbed at such sinks equals the cell count exactly.

use super::Heightmap;

/// Neighbor offsets in N, NE, E, SE, S, SW, W, NW order. Ties between equal
/// slopes break toward the earlier entry.
const OFFSETS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

const DIST: [f64; 8] = [
    1.0,
    std::f64::consts::SQRT_2,
    1.0,
    std::f64::consts::SQRT_2,
    1.0,
    std::f64::consts::SQRT_2,
    1.0,
    std::f64::consts::SQRT_2,
];

/// Routing result: per-cell accumulated flow and the receiver of each cell
/// (`None` for sinks).
#[derive(Clone, Debug)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub accumulation: Vec<f64>,
    pub receiver: Vec<Option<u32>>,
}

impl FlowField {
    /// Indices of cells that do not forward their flow.
    pub fn sinks(&self) -> impl Iterator<Item = usize> + '_ {
        self.receiver
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_none())
            .map(|(i, _)| i)
    }
}

/// Full routing result for `h`.
pub fn flow_field(h: &Heightmap) -> FlowField {
    let (w, hh) = (h.width(), h.height());
    let n = w * hh;
    let values = h.values();

    let mut receiver: Vec<Option<u32>> = vec![None; n];
    for y in 0..hh {
        for x in 0..w {
            let i = y * w + x;
            let z0 = f64::from(values[i]);
            let mut best_slope = 0.0f64;
            let mut best: Option<u32> = None;
            for (k, (dy, dx)) in OFFSETS.iter().enumerate() {
                let ny = y as isize + dy;
                let nx = x as isize + dx;
                if ny < 0 || nx < 0 || ny >= hh as isize || nx >= w as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                let slope = (z0 - f64::from(values[j])) / DIST[k];
                if slope > best_slope {
                    best_slope = slope;
                    best = Some(j as u32);
                }
            }
            receiver[i] = best;
        }
    }

    // Process from high to low so every donor is settled before its receiver.
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        values[b as usize]
            .cmp(&values[a as usize])
            .then(a.cmp(&b))
    });

    let mut accumulation = vec![1.0f64; n];
    for &i in &order {
        if let Some(j) = receiver[i as usize] {
            accumulation[j as usize] += accumulation[i as usize];
        }
    }

    FlowField {
        width: w,
        height: hh,
        accumulation,
        receiver,
    }
}

/// Per-cell accumulated flow under unit rain.
pub fn flow_accumulation(h: &Heightmap) -> Vec<f64> {
    flow_field(h).accumulation
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_map_has_no_routing() {
        let h = Heightmap::flat(8, 8, 500);
        let field = flow_field(&h);
        assert!(field.accumulation.iter().all(|&a| a == 1.0));
        assert!(field.receiver.iter().all(|r| r.is_none()));
    }

    #[test]
    fn monotone_ramp_accumulates_chain() {
        // Single-column ramp descending toward row N-1: accumulation at the
        // k-th cell from the top is k+1.
        let n = 9;
        let values: Vec<u16> = (0..n).rev().map(|v| (v * 100) as u16).collect();
        let h = Heightmap::new(1, n, values, 1.0).unwrap();
        let acc = flow_accumulation(&h);
        for (k, &a) in acc.iter().enumerate() {
            assert_eq!(a, (k + 1) as f64);
        }
    }

    #[test]
    fn sink_mass_equals_cell_count() {
        let mut state = 0x51ce_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 4096) as u16
        };
        for _ in 0..10 {
            let values: Vec<u16> = (0..16 * 16).map(|_| next()).collect();
            let h = Heightmap::new(16, 16, values, 1.0).unwrap();
            let field = flow_field(&h);
            let sink_mass: f64 = field.sinks().map(|i| field.accumulation[i]).sum();
            assert_eq!(sink_mass, 256.0);
        }
    }

    #[test]
    fn cardinal_beats_diagonal_at_equal_drop() {
        // 2x2: both lower neighbors drop by the same amount; the cardinal
        // neighbor wins on distance weighting.
        let h = Heightmap::new(2, 2, vec![100, 100, 0, 0], 1.0).unwrap();
        let field = flow_field(&h);
        assert_eq!(field.receiver[0], Some(2)); // straight down, not diagonal
        assert_eq!(field.receiver[1], Some(3));
    }
}
