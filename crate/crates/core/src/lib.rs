//! Precoder design for a multi-antenna relay that acts as a circuit switch
//! between single-antenna stations.
//!
//! The relay receives all stations at once, applies a zero-forcing (or
//! network-coded) precoder `G = H⁻ᵀA(P+B)H⁻¹`, and forwards each station's
//! signal to its destination under the permutation `P`. The modules cover
//! the channel model, a small dense SDP solver, equal-SNR and maxmin-SNR
//! designs, and a Monte Carlo sweep engine.

pub mod eqsnr;
pub mod error;
pub mod maxmin;
pub mod model;
pub mod numerics;
pub mod sdp;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use maxmin::{ExhaustiveGrid, InitialB, IterativeConfig, SdrConfig};
pub use model::{ChannelRealization, NoiseParams, Pattern, SolveOutcome, SwitchSpec};
pub use sdp::SdpSettings;
pub use sim::{Scheme, SimConfig, SimResult, TableKind};
