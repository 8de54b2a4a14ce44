pub mod displayzoo;
pub mod error;
pub mod fcrystal;
pub mod modexpr;
pub mod slopegraph;
pub mod strata;
pub mod wittring;

pub use error::{Error, Result};

#[cfg(test)]
mod testutil;
