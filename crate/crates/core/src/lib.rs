//! Exact ground states, critical droplets, coupling events and Gibbs averages
//! for the Edwards-Anderson Ising spin glass on small boxes of Z^d, plus the
//! disorder-averaged experiments built on them.

pub mod droplet;
pub mod events;
pub mod gibbs;
pub mod harness;
pub mod error;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
