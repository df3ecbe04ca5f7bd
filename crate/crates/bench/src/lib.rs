//! Shared fixtures for the solver benchmarks.

use mimo_switch::model::sample_channel;
use mimo_switch::{ChannelRealization, NoiseParams, SwitchSpec};

/// A fixed channel, a pairwise switch, and noise at `snr_db`.
pub fn fixture(n: usize, seed: u64, snr_db: f64, pnc: bool) -> (ChannelRealization, SwitchSpec, NoiseParams) {
    (
        sample_channel(n, seed).expect("channel"),
        SwitchSpec::pairwise(n, pnc).expect("even station count"),
        NoiseParams::from_snr_db(snr_db),
    )
}
