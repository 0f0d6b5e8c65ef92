//! Generation and transmission expansion planning for hydrothermal systems.
//!
//! An investment MILP proposes build plans; a stochastic operation model
//! solved by SDDP prices each plan and returns a Benders cut.

pub mod benders;
pub mod fixtures;
pub mod inflow;
pub mod investment;
pub mod io;
pub mod model;
pub mod network;
pub mod operation;
pub mod solver;
