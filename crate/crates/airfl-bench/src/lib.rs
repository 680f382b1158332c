//! Shared fixtures for the benchmark targets.

use airfl_core::channel::{draw_rayleigh, ChannelRealization};
use airfl_core::numerics::RngStream;

/// A deterministic Rayleigh channel for benchmarking.
pub fn bench_channel(devices: usize, antennas: usize) -> ChannelRealization {
    draw_rayleigh(RngStream::new(0xBEEF), devices, antennas, 1.0).expect("valid arguments")
}
