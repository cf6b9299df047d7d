//! Lattice networks: topology, frequency reuse, routing, compilation of
//! circuits to pulse schedules, duty ratios and schedule replay.

pub mod circuit;
pub mod compile;
pub mod duty;
pub mod frequency;
pub mod routing;
pub mod schedule;
pub mod simulate;
pub mod topology;

pub use circuit::{Circuit, Instruction};
pub use compile::{compile_circuit, CompileOptions, CompiledCircuit, ScheduleMode};
pub use duty::{duty_ratio_report, CellDuty, DutyReport};
pub use frequency::{assign_frequencies, check_frequency_map, FrequencyMap};
pub use routing::{chain_stats, route_swap_chain, shortest_path, ChainStats, SwapChain};
pub use schedule::{validate_schedule, EventKind, PulseEvent, PulseSchedule};
pub use simulate::{
    direct_simulate, simulate_schedule, simulate_schedule_with_outcomes, NoiseModel, ScheduleRun, ScheduleSimulator,
};
pub use topology::{build_lattice, LatticeTopology, Link, TopologyConfig};
