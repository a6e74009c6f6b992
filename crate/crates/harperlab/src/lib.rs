pub use harperlab_core as core;

pub mod cli;
pub mod io;
pub mod precise;
pub mod sweep;
