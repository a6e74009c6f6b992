//! Spectra of the critical almost Mathieu operator and the dimension
//! machinery built on top of them.
//!
//! The crate is `no_std` with `alloc`. IO, command line handling and
//! parallel sweeps live in the `harperlab` companion crate.

#![no_std]

extern crate alloc;

pub mod bandset;
pub mod chambers;
pub mod config;
pub mod contfrac;
pub mod dimension;
pub mod moran;
pub mod multidim;
pub mod numeric;

pub use bandset::{BandSet, Interval};

pub use chambers::RationalFrequency;
pub use contfrac::ContinuedFraction;
