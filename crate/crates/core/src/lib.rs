pub mod acoustics;
pub mod cli;
pub mod codebook;
pub mod config;
pub mod constraints;
pub mod error;
pub mod forward;
pub mod inversion;
pub mod model;
pub mod partition;
pub mod vowel;
