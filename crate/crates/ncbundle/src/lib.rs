pub mod error;
pub mod numerics;
pub mod clifford;
pub mod group;
pub mod weil;
pub mod triple;
pub mod crossprod;
pub mod deform;
pub mod cli;

pub use error::{Error, Result};
