pub mod config;
pub mod convnet;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod otsu;
pub mod profile;
pub mod radar;
pub mod rdmap;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
