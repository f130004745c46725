//! Discrete delay-Doppler grid, sampled Zak transform and twisted convolution.

mod grid;
mod twisted;
mod zak;

pub use grid::{DdGrid, DdSignal, GridSpec, TimeSignal};
pub use twisted::{twisted_convolve, twisted_convolve_at, twisted_convolve_dd, DdPatch};
pub use zak::{dd_inner_product, inverse_zak, zak_transform};
