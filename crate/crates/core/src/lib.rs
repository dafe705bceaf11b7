//! Opacity-enforcing planning for probabilistic systems with LTLf tasks and
//! secrets.

pub mod automata;
pub mod cli;
pub mod error;
pub mod io;
pub mod ltlf;
pub mod model;
pub mod planner;
pub mod scenarios;
pub mod simulate;
pub mod transducer;

pub use error::{Error, Result};
