//! Acoustic word embedding toolkit: feature extraction, recurrent
//! encoder-decoder training, and ABX / clustering evaluation.

pub mod corpus;
pub mod dtw;
pub mod eval;
pub mod error;
pub mod mfcc;
pub mod nn;
pub mod awe;
pub mod cli;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
