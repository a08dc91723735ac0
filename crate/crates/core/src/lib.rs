//! Deterministic simulator for quantum-information experiments on small
//! strongly coupled NMR spin systems.
//!
//! Qubit states are the eigenstates of the full Hamiltonian; logic gates are
//! transition-selective pulses between them.

pub mod acceptance;
pub mod acquisition;
pub mod assignment;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod linalg;
pub mod protocols;
pub mod pulse_lang;
pub mod spin;

pub use assignment::{reconstruct_levels, verify_diagram, ConnectivityMatrix, LevelDiagram};
pub use dynamics::{
    crush_gradient, equilibrium_deviation, free_evolution, hard_pulse_unitary, selective_population_update,
    selective_pulse_unitary, DeviationDensityMatrix, PulseAxis,
};
pub use error::{Result, SpinError};
pub use linalg::{CMatrix, C64};
pub use protocols::{
    c2swap_4spin, c3not_4spin, dj_one_qubit, dj_two_qubit_2d, epr_create, gate_library_2spin, ghz_create, pops_pair,
    pseudopure_2spin, ProtocolReport,
};
pub use pulse_lang::{compile, execute, execute_cycled, CompiledProgram, Delays, PulseProgram};
pub use spin::{
    build_hamiltonian, diagonalize, eigensystem, mixing_angle_ab, sq_transition_count, transition_catalog, EigenSystem,
    SpinSystem, Transition, TransitionCatalog, DEFAULT_THRESHOLD,
};
