//! Transmit-side chain: bit source, BPSK mapping, device impairments,
//! obfuscation noise, and root-raised-cosine pulse shaping.

mod fingerprint;
mod modem;
mod noise;
mod shaping;

pub use fingerprint::{apply_fingerprint, make_fingerprint, DeviceFingerprint};
pub use modem::{counter_bits, modulate, ModulationConfig};
pub use noise::{inject_noise, sample_noise, NoiseKind, NoiseSpec, IMPULSE_RHO};
pub use shaping::{matched_filter, pulse_shape, rrc_taps, PulseConfig};
