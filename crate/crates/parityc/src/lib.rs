//! Compiler for mapping higher-order constrained binary optimization problems
//! onto the parity architecture of a quantum device with arbitrary connectivity.
//!
//! The pipeline turns a spin Hamiltonian into single-body terms on parity
//! qubits plus a set of parity constraints, finds a basis of short constraints
//! (inserting ancillas where needed), places the qubits on the device, routes
//! each constraint over a Steiner tree, and synthesizes nearest-neighbor CNOT
//! circuits — bridging through non-constraint qubits instead of swapping —
//! before assembling full QAOA layers.
//!
//! ```
//! use parityc::pipeline::{compile, CompileOptions};
//! use parityc::problem::HcboProblem;
//! use parityc::device::DeviceGraph;
//!
//! let problem = HcboProblem::from_json(r#"{
//!     "n_spins": 3,
//!     "terms": [
//!         {"spins": [1, 2], "coefficient": 1.0},
//!         {"spins": [2, 3], "coefficient": 1.0},
//!         {"spins": [1, 3], "coefficient": -1.0},
//!         {"spins": [1, 2, 3], "coefficient": 0.5}
//!     ]
//! }"#).unwrap();
//! let device = DeviceGraph::grid(2, 2).unwrap();
//! let out = compile(&problem, &device, &CompileOptions::default()).unwrap();
//! assert!(out.report.totals.cnots > 0);
//! ```

pub mod basis;
pub mod circuit;
pub mod device;
pub mod error;
pub mod gf2;
pub mod layout;
pub mod oracle;
pub mod par;
pub mod pipeline;
pub mod problem;
pub mod qaoa;
pub mod qasm;
pub mod synth;

pub use error::{Error, Result};
