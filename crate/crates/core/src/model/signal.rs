use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{complex_gaussian, ChannelRealization, NoiseParams, RelayDesign, SwitchSpec};
use crate::numerics::CVector;

/// Empirical statistics of a simulated relay round.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalReport {
    /// Mean `|r̂ᵢ − (Px)ᵢ|²` per station.
    pub noise_power: Vec<f64>,
    /// `1/noise_power`.
    pub snr: Vec<f64>,
    /// Mean `‖Gy‖²`.
    pub relay_power: f64,
    pub symbols: usize,
}

/// Runs one uplink/downlink exchange for given symbols and noise and returns
/// the receivers' estimates of `Px`: `r̂ᵢ = rᵢ/aᵢ − bᵢxᵢ` (the subtraction
/// only when `cancel` is set).
pub fn decode_round(
    ch: &ChannelRealization,
    design: &RelayDesign,
    x: &CVector,
    relay_noise: &CVector,
    station_noise: &CVector,
    cancel: bool,
) -> CVector {
    let y = ch.h() * x + relay_noise;
    let r = ch.h().transpose() * (&design.g * y) + station_noise;
    CVector::from_fn(x.len(), |i, _| {
        let mut est = r[i] / design.a[i];
        if cancel {
            est -= design.b[i] * x[i];
        }
        est
    })
}

/// Monte Carlo estimate of post-processing noise and relay power with unit
/// power Gaussian station symbols.
pub fn simulate_round(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    design: &RelayDesign,
    n_symbols: usize,
    rng_seed: u64,
    cancel_self_interference: bool,
) -> SignalReport {
    let n = ch.n();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut noise = vec![0.0; n];
    let mut power = 0.0;
    for _ in 0..n_symbols {
        let x = CVector::from_fn(n, |_, _| complex_gaussian(&mut rng, 1.0));
        let u = CVector::from_fn(n, |_, _| complex_gaussian(&mut rng, np.gamma2));
        let w = CVector::from_fn(n, |_, _| complex_gaussian(&mut rng, np.sigma2));
        let relay_out = &design.g * (ch.h() * &x + &u);
        power += relay_out.norm_squared();
        let est = decode_round(ch, design, &x, &u, &w, cancel_self_interference);
        for i in 0..n {
            noise[i] += (est[i] - x[sw.source(i)]).norm_sqr();
        }
    }
    let count = n_symbols.max(1) as f64;
    let noise_power: Vec<f64> = noise.iter().map(|v| v / count).collect();
    SignalReport {
        snr: noise_power.iter().map(|v| 1.0 / v).collect(),
        noise_power,
        relay_power: power / count,
        symbols: n_symbols,
    }
}
