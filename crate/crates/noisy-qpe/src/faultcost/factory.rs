//! Magic-state factory cost models.
//!
//! The default [`Ccz2tFactory`] is a two-level CCZ factory: eight 15-to-1 T
//! factories at distance `d0` feed a CCZ stage at distance `d1`. Its constants
//! follow the published CCZ2T construction only approximately and are
//! configuration, not measured values:
//!
//! * T injection at distance `⌊d0/2⌋`: `p + 100·ε_cell(⌊d0/2⌋)`;
//! * level 1: `35·p_in³ + 1100·ε_cell(d0)`;
//! * level 2: `28·p_1² + 1000·ε_cell(d1)`;
//! * footprint `64` tiles at `d0` plus `18` tiles at `d1`, `2d²` qubits per tile;
//! * one CCZ state every `5.5·max(d0, d1)` cycles,
//!
//! with `ε_cell(d) = 0.1·Λ^{−(d+1)/2}`.

use serde::{Deserialize, Serialize};

use super::PhysicalAssumptions;

pub trait FactoryModel: Send + Sync {
    /// Physical qubits of one factory.
    fn footprint(&self, d0: u32, d1: u32) -> f64;
    /// Surface-code cycles per output state.
    fn cycles_per_state(&self, d0: u32, d1: u32) -> f64;
    /// Infidelity of one output state.
    fn output_infidelity(&self, assumptions: &PhysicalAssumptions, d0: u32, d1: u32) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ccz2tFactory {
    pub injection_cells: f64,
    pub level1_cells: f64,
    pub level2_cells: f64,
    pub level1_coefficient: f64,
    pub level2_coefficient: f64,
    pub level1_tiles: f64,
    pub level2_tiles: f64,
    pub cycles_per_distance: f64,
}

impl Default for Ccz2tFactory {
    fn default() -> Self {
        Ccz2tFactory {
            injection_cells: 100.0,
            level1_cells: 1100.0,
            level2_cells: 1000.0,
            level1_coefficient: 35.0,
            level2_coefficient: 28.0,
            level1_tiles: 64.0,
            level2_tiles: 18.0,
            cycles_per_distance: 5.5,
        }
    }
}

fn tile_qubits(d: u32) -> f64 {
    2.0 * (d as f64).powi(2)
}

impl FactoryModel for Ccz2tFactory {
    fn footprint(&self, d0: u32, d1: u32) -> f64 {
        self.level1_tiles * tile_qubits(d0) + self.level2_tiles * tile_qubits(d1)
    }

    fn cycles_per_state(&self, d0: u32, d1: u32) -> f64 {
        self.cycles_per_distance * d0.max(d1) as f64
    }

    fn output_infidelity(&self, a: &PhysicalAssumptions, d0: u32, d1: u32) -> f64 {
        let injected = a.p_phys + self.injection_cells * a.error_per_cycle(d0 / 2);
        let level1 = self.level1_coefficient * injected.powi(3) + self.level1_cells * a.error_per_cycle(d0);
        let level2 = self.level2_coefficient * level1.powi(2) + self.level2_cells * a.error_per_cycle(d1);
        level2.min(1.0)
    }
}
