//! Command-line front end and file formats for the simulator.

pub mod formats;
pub mod io;
pub mod registry;
pub mod bench;
pub mod cli;
