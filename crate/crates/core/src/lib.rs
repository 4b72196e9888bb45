pub mod error;
pub mod numerics;
pub mod params;

pub use error::{Result, SleError};
pub use params::{Regime, SleParams};
pub mod exact;
pub mod maps;
pub mod sim;
pub mod mc;
