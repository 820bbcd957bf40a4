// `!(x > 0.0)` style checks are deliberate: they reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod classify;
pub mod dataset;
pub mod error;
pub mod eyeprep;
pub mod features;
pub mod pipeline;
pub mod raster;
pub mod synth;
pub mod tracker;
pub mod vigilance;

pub use error::{Error, Result};
