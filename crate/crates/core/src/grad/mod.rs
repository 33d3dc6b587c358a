//! Minimal reverse-mode differentiation core.

pub mod adam;
pub mod fd;
pub mod kernels;
mod tape;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use tape::{Gradients, Tape, Var};

#[cfg(test)]
mod tests;
