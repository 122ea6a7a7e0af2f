pub mod analytic;
pub mod atomic;
pub mod cavity;
pub mod diamond;
pub mod error;
pub mod optimize;
pub mod par;
pub mod quantum;
pub mod runner;

pub use error::{Error, Result};
