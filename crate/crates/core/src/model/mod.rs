//! System model of a precode-and-forward relay: noise and power functionals,
//! precoder assembly, throughput, and a symbol-level simulator.
//!
//! Notation follows the usual MIMO relay conventions. With uplink `y = Hx + u`
//! and downlink `r = HᵀGy + w`, a precoder satisfying `HᵀGH = A(P+B)` delivers
//! `Px` to the stations after each receiver divides by its gain `aᵢ` and
//! subtracts its own (known) self-interference `bᵢxᵢ`.

mod channel;
mod signal;
mod switch;

pub use channel::{sample_channel, ChannelRealization};
pub(crate) use channel::complex_gaussian;
pub use signal::{decode_round, simulate_round, SignalReport};
pub use switch::{Pattern, SwitchSpec};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, c, CMatrix, CVector};

/// Relay noise `γ²`, station noise `σ²` and relay power budget `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub gamma2: f64,
    pub sigma2: f64,
    pub p: f64,
}

impl NoiseParams {
    pub fn new(gamma2: f64, sigma2: f64, p: f64) -> Result<Self> {
        let np = Self { gamma2, sigma2, p };
        np.validate()?;
        Ok(np)
    }

    /// Equal relay and station noise `10^(-snr/10)` with unit power budget.
    pub fn from_snr_db(snr_db: f64) -> Self {
        let noise = 10f64.powf(-snr_db / 10.0);
        Self {
            gamma2: noise,
            sigma2: noise,
            p: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.gamma2.is_finite() && self.sigma2.is_finite() && self.p.is_finite();
        if !finite || self.gamma2 < 0.0 || self.sigma2 <= 0.0 || self.p <= 0.0 {
            return Err(Error::Config(format!(
                "noise parameters out of range: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Gains `a = diag A`, self-interference gains `b = diag B`, and the
/// assembled precoder `G = H⁻ᵀA(P+B)H⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayDesign {
    pub a: CVector,
    pub b: CVector,
    pub g: CMatrix,
}

impl RelayDesign {
    pub fn assemble(ch: &ChannelRealization, sw: &SwitchSpec, a: CVector, b: CVector) -> Result<Self> {
        if !sw.pnc && b.iter().any(|z| *z != c(0.0, 0.0)) {
            return Err(Error::Config(
                "self-interference gains require a network-coded switch".into(),
            ));
        }
        let g = assemble_precoder(ch, sw, &a, &b)?;
        Ok(Self { a, b, g })
    }
}

/// Solver bookkeeping attached to every outcome.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Root-finding or alternation iterations.
    pub iterations: usize,
    pub sdp_solves: usize,
    /// Final ε bracket of the one-dimensional search.
    pub bracket: Option<(f64, f64)>,
    /// Relaxation value at the returned ε, when an SDP was involved.
    pub sdp_lower_bound: Option<f64>,
    /// `‖X − vvᴴ‖/‖X‖` of the last relaxation solution.
    pub rank_one_residual: Option<f64>,
    /// ε after each accepted step of an iterative scheme.
    pub eps_history: Vec<f64>,
}

/// A designed relay with its per-station noise, power and throughput.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub epsilon: Vec<f64>,
    pub power_used: f64,
    pub throughput: Vec<f64>,
    pub design: RelayDesign,
    pub diagnostics: Diagnostics,
}

impl SolveOutcome {
    pub fn evaluate(
        ch: &ChannelRealization,
        sw: &SwitchSpec,
        np: &NoiseParams,
        a: CVector,
        b: CVector,
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        let epsilon = post_noise(ch, sw, np, &a, &b)?;
        let power_used = relay_power(ch, sw, np, &a, &b);
        let throughput = epsilon
            .iter()
            .map(|&e| throughput(e))
            .collect::<Result<Vec<_>>>()?;
        let design = RelayDesign::assemble(ch, sw, a, b)?;
        Ok(Self {
            epsilon,
            power_used,
            throughput,
            design,
            diagnostics,
        })
    }

    /// Largest per-station noise power.
    pub fn worst_epsilon(&self) -> f64 {
        self.epsilon.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn worst_throughput(&self) -> f64 {
        self.throughput.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// `max εᵢ − min εᵢ`.
    pub fn epsilon_spread(&self) -> f64 {
        let min = self.epsilon.iter().cloned().fold(f64::MAX, f64::min);
        self.worst_epsilon() - min
    }

    pub fn mean_epsilon(&self) -> f64 {
        self.epsilon.iter().sum::<f64>() / self.epsilon.len() as f64
    }
}

fn check_dims(ch: &ChannelRealization, sw: &SwitchSpec) -> Result<()> {
    if ch.n() != sw.n() {
        return Err(Error::Dimension(format!(
            "channel has {} antennas but switch has {} stations",
            ch.n(),
            sw.n()
        )));
    }
    Ok(())
}

/// `P + B` as a dense matrix.
pub fn switch_matrix(sw: &SwitchSpec, b: &CVector) -> CMatrix {
    let mut m = sw.matrix();
    for i in 0..sw.n() {
        m[(i, i)] += b[i];
    }
    m
}

/// `Q = I + γ²PH⁻¹H⁻ᴴPᵀ`.
pub fn compute_q(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams) -> Result<CMatrix> {
    check_dims(ch, sw)?;
    let n = ch.n();
    let w = ch.w();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let base = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
        base + w[(sw.source(i), sw.source(j))] * np.gamma2
    }))
}

/// `R = I + γ²(P+B)H⁻¹H⁻ᴴ(P+B)ᴴ`; equals `Q` when `b = 0`.
pub fn compute_r(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, b: &CVector) -> Result<CMatrix> {
    check_dims(ch, sw)?;
    let pb = switch_matrix(sw, b);
    let r = CMatrix::identity(ch.n(), ch.n()) + (&pb * ch.w() * pb.adjoint()).scale(np.gamma2);
    Ok(numerics::hermitian_part(&r))
}

/// Relay power kernel `S'` with `Ω(A,B) = aᴴS'a`, where
/// `S'ᵢⱼ = [(P+B)(I+γ²W)(P+B)ᴴ]ⱼᵢ · [(H*)⁻¹H⁻ᵀ]ᵢⱼ`.
/// With `b = 0` this is the zero-forcing matrix `S`.
pub fn power_matrix(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, b: &CVector) -> Result<CMatrix> {
    check_dims(ch, sw)?;
    let n = ch.n();
    let pb = switch_matrix(sw, b);
    let noise = CMatrix::identity(n, n) + ch.w().scale(np.gamma2);
    let kernel = &pb * noise * pb.adjoint();
    let ws = ch.w_star();
    let s = CMatrix::from_fn(n, n, |i, j| kernel[(j, i)] * ws[(i, j)]);
    Ok(numerics::hermitian_part(&s))
}

/// `sᵢⱼ = Qⱼᵢ[(H*)⁻¹H⁻ᵀ]ᵢⱼ`, so that relay power is `aᴴSa`.
pub fn compute_s(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams) -> Result<CMatrix> {
    check_dims(ch, sw)?;
    let q = compute_q(ch, sw, np)?;
    let ws = ch.w_star();
    let n = ch.n();
    let s = CMatrix::from_fn(n, n, |i, j| q[(j, i)] * ws[(i, j)]);
    Ok(numerics::hermitian_part(&s))
}

/// Expected relay transmit power `Ω(A,B)`; `aᴴSa` when `b = 0`.
pub fn relay_power(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, a: &CVector, b: &CVector) -> f64 {
    match power_matrix(ch, sw, np, b) {
        Ok(s) => numerics::hermitian_quad(&s, a),
        Err(_) => f64::NAN,
    }
}

/// `G = H⁻ᵀA(P+B)H⁻¹`.
pub fn assemble_precoder(ch: &ChannelRealization, sw: &SwitchSpec, a: &CVector, b: &CVector) -> Result<CMatrix> {
    check_dims(ch, sw)?;
    if a.len() != ch.n() || b.len() != ch.n() {
        return Err(Error::Dimension("gain vectors must have one entry per station".into()));
    }
    let amp = CMatrix::from_diagonal(a);
    let h_inv = ch.h_inv();
    Ok(h_inv.transpose() * amp * switch_matrix(sw, b) * h_inv)
}

/// Post-processing noise `εᵢ = Rᵢᵢ − 1 + σ²/|aᵢ|²`.
pub fn post_noise(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, a: &CVector, b: &CVector) -> Result<Vec<f64>> {
    let r = compute_r(ch, sw, np, b)?;
    post_noise_from_diag(&r.diagonal().map(|z| z.re).as_slice().to_vec(), np, a)
}

pub(crate) fn post_noise_from_diag(q: &[f64], np: &NoiseParams, a: &CVector) -> Result<Vec<f64>> {
    q.iter()
        .zip(a.iter())
        .enumerate()
        .map(|(i, (&qi, ai))| {
            let g = ai.norm_sqr();
            if g == 0.0 {
                Err(Error::ZeroGain { station: i })
            } else {
                Ok(qi - 1.0 + np.sigma2 / g)
            }
        })
        .collect()
}

/// Gaussian-signalling throughput `½log₂(1+1/ε)` in bits per symbol period.
pub fn throughput(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveNoise(epsilon));
    }
    Ok(0.5 * (1.0 / epsilon).ln_1p() / std::f64::consts::LN_2)
}

/// The 2×2 block of `(HᴴH)⁻¹` on a station pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCoefficients {
    pub h1: f64,
    pub h2: Complex64,
    pub h3: f64,
}

pub fn pair_coefficients(ch: &ChannelRealization, pair: (usize, usize)) -> PairCoefficients {
    let w = ch.w();
    let (p, k) = pair;
    PairCoefficients {
        h1: w[(p, p)].re,
        h2: w[(p, k)],
        h3: w[(k, k)].re,
    }
}

pub fn zeros(n: usize) -> CVector {
    CVector::from_element(n, c(0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{psd_check, real_diag};

    fn swap() -> SwitchSpec {
        SwitchSpec::pairwise(2, false).unwrap()
    }

    fn np01() -> NoiseParams {
        NoiseParams::new(0.1, 0.1, 1.0).unwrap()
    }

    fn identity_channel() -> ChannelRealization {
        ChannelRealization::new(CMatrix::identity(2, 2)).unwrap()
    }

    fn diag12() -> ChannelRealization {
        ChannelRealization::new(real_diag(&[1.0, 2.0])).unwrap()
    }

    fn rel_close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn q_examples() {
        let q = compute_q(&identity_channel(), &swap(), &np01()).unwrap();
        assert!(rel_close(&q, &CMatrix::identity(2, 2).scale(1.1), 1e-14));
        let quiet = NoiseParams::new(0.0, 0.1, 1.0).unwrap();
        let q = compute_q(&diag12(), &swap(), &quiet).unwrap();
        assert!(rel_close(&q, &CMatrix::identity(2, 2), 1e-14));
        let q = compute_q(&diag12(), &swap(), &np01()).unwrap();
        assert!(rel_close(&q, &real_diag(&[1.025, 1.1]), 1e-14));
    }

    #[test]
    fn s_examples() {
        let s = compute_s(&identity_channel(), &swap(), &np01()).unwrap();
        assert!(rel_close(&s, &CMatrix::identity(2, 2).scale(1.1), 1e-14));
        let s = compute_s(&diag12(), &swap(), &np01()).unwrap();
        assert!(rel_close(&s, &real_diag(&[1.025, 0.275]), 1e-14));
    }

    #[test]
    fn s_offdiagonal_real_nonnegative_for_two_stations() {
        let np = np01();
        for seed in 0..50 {
            let ch = sample_channel(2, seed).unwrap();
            let s = compute_s(&ch, &swap(), &np).unwrap();
            assert!((s[(0, 1)] - s[(1, 0)]).norm() < 1e-12);
            assert!(s[(0, 1)].im.abs() < 1e-12 * numerics::max_abs(&s));
            assert!(s[(0, 1)].re >= 0.0);
            let direct = np.gamma2 * ch.w()[(0, 1)].norm_sqr();
            assert!((s[(0, 1)].re - direct).abs() <= 1e-10 * (1.0 + direct));
            assert!(psd_check(&s).unwrap().is_psd);
        }
    }

    #[test]
    fn r_examples() {
        let np = np01();
        let sw = swap().with_pnc(true);
        let ch = sample_channel(2, 5).unwrap();
        let r0 = compute_r(&ch, &sw, &np, &zeros(2)).unwrap();
        assert!(rel_close(&r0, &compute_q(&ch, &sw, &np).unwrap(), 1e-14));

        let beta = c(0.4, -0.3);
        let b = CVector::from_element(2, beta);
        let r = compute_r(&identity_channel(), &sw, &np, &b).unwrap();
        let pb = switch_matrix(&sw, &b);
        let expected = CMatrix::identity(2, 2) + (&pb * pb.adjoint()).scale(0.1);
        assert!(rel_close(&r, &expected, 1e-14));
        assert!((r[(0, 0)].re - (1.0 + 0.1 * (1.0 + beta.norm_sqr()))).abs() < 1e-14);

        let b = CVector::from_vec(vec![c(1.3, 0.2), c(-0.7, 0.9)]);
        let r = compute_r(&ch, &sw, &np, &b).unwrap();
        for i in 0..2 {
            assert!(r[(i, i)].re >= 1.0);
        }
        let excess = r - CMatrix::identity(2, 2);
        assert!(psd_check(&excess).unwrap().is_psd);
    }

    #[test]
    fn relay_power_examples() {
        let a = CVector::from_vec(vec![c(0.6742, 0.0), c(-0.6742, 0.0)]);
        let p = relay_power(&identity_channel(), &swap(), &np01(), &a, &zeros(2));
        assert!((p - 1.1 * 2.0 * 0.6742f64.powi(2)).abs() < 1e-12);
        let exact = CVector::from_element(2, c((1.0 / 2.2f64).sqrt(), 0.0));
        let p = relay_power(&identity_channel(), &swap(), &np01(), &exact, &zeros(2));
        assert!((p - 1.0).abs() < 1e-14);

        let ch = sample_channel(4, 9).unwrap();
        let sw = SwitchSpec::pairwise(4, true).unwrap();
        let a = CVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(0.1, -0.4)]);
        let b = CVector::from_vec(vec![c(0.3, 0.0), c(0.0, 0.2), c(-0.5, 0.1), c(0.2, 0.2)]);
        let base = relay_power(&ch, &sw, &np01(), &a, &b);
        let scaled = relay_power(&ch, &sw, &np01(), &a.scale(2.5), &b);
        assert!((scaled - 6.25 * base).abs() <= 1e-10 * scaled);
        // b = 0 reduces to aᴴSa.
        let s = compute_s(&ch, &sw, &np01()).unwrap();
        let zf = relay_power(&ch, &sw, &np01(), &a, &zeros(4));
        assert!((zf - numerics::hermitian_quad(&s, &a)).abs() <= 1e-10 * zf);
    }

    #[test]
    fn relay_power_matches_trace_formula() {
        // Tr[GHHᴴGᴴ + γ²GGᴴ], evaluated directly from the precoder.
        let np = NoiseParams::new(0.3, 0.2, 1.0).unwrap();
        let ch = sample_channel(4, 21).unwrap();
        let sw = SwitchSpec::non_pairwise(4, true).unwrap();
        let a = CVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(0.1, -0.4)]);
        let b = CVector::from_vec(vec![c(0.3, 0.0), c(0.0, 0.2), c(-0.5, 0.1), c(0.2, 0.2)]);
        let g = assemble_precoder(&ch, &sw, &a, &b).unwrap();
        let h = ch.h();
        let direct = (&g * h * h.adjoint() * g.adjoint() + (&g * g.adjoint()).scale(np.gamma2)).trace().re;
        let omega = relay_power(&ch, &sw, &np, &a, &b);
        assert!((direct - omega).abs() <= 1e-10 * direct);
    }

    #[test]
    fn precoder_examples() {
        let sw = swap().with_pnc(true);
        let a = CVector::from_vec(vec![c(0.5, 0.1), c(-0.3, 0.0)]);
        let b = CVector::from_vec(vec![c(0.2, 0.0), c(0.0, -0.1)]);
        let g = assemble_precoder(&identity_channel(), &sw, &a, &b).unwrap();
        let expected = CMatrix::from_diagonal(&a) * switch_matrix(&sw, &b);
        assert!(rel_close(&g, &expected, 1e-14));

        let g = assemble_precoder(&diag12(), &sw, &a, &b).unwrap();
        let d = [1.0, 2.0];
        let pb = switch_matrix(&sw, &b);
        for i in 0..2 {
            for j in 0..2 {
                let want = a[i] * pb[(i, j)] / (d[i] * d[j]);
                assert!((g[(i, j)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn post_noise_examples() {
        let a = CVector::from_element(2, c((1.0 / 2.2f64).sqrt(), 0.0));
        let eps = post_noise(&identity_channel(), &swap(), &np01(), &a, &zeros(2)).unwrap();
        for e in eps {
            assert!((e - 0.32).abs() < 1e-12);
        }
        let quiet = NoiseParams::new(0.0, 0.1, 1.0).unwrap();
        let ch = sample_channel(2, 3).unwrap();
        let a = CVector::from_vec(vec![c(0.5, 0.5), c(-1.5, 0.0)]);
        let eps = post_noise(&ch, &swap(), &quiet, &a, &zeros(2)).unwrap();
        assert!((eps[0] - 0.1 / 0.5).abs() < 1e-14);
        assert!((eps[1] - 0.1 / 2.25).abs() < 1e-14);
        let bad = CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            post_noise(&ch, &swap(), &quiet, &bad, &zeros(2)),
            Err(Error::ZeroGain { station: 0 })
        ));
    }

    #[test]
    fn throughput_examples() {
        assert!((throughput(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((throughput(0.32).unwrap() - 1.0222).abs() < 5e-5);
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let t = throughput(10f64.powi(k - 10)).unwrap();
            assert!(t > 0.0 && t < last);
            last = t;
        }
        assert!(last < 1e-20);
        assert!(throughput(0.0).is_err());
        assert!(throughput(-1.0).is_err());
    }

    #[test]
    fn pair_coefficient_examples() {
        let pc = pair_coefficients(&identity_channel(), (0, 1));
        assert_eq!((pc.h1, pc.h2, pc.h3), (1.0, c(0.0, 0.0), 1.0));
        let pc = pair_coefficients(&diag12(), (0, 1));
        assert!((pc.h1 - 1.0).abs() < 1e-15 && (pc.h3 - 0.25).abs() < 1e-15);
        assert!(pc.h2.norm() < 1e-15);
        for seed in 0..100 {
            let ch = sample_channel(4, seed).unwrap();
            for pair in [(0, 3), (1, 2)] {
                let pc = pair_coefficients(&ch, pair);
                assert!(pc.h1 >= 0.0 && pc.h3 >= 0.0);
                assert!(pc.h2.norm_sqr() <= pc.h1 * pc.h3 * (1.0 + 1e-12));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn gains(n: usize) -> impl Strategy<Value = CVector> {
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n).prop_map(|v| {
                CVector::from_iterator(v.len(), v.into_iter().map(|(x, y)| c(x + 0.05, y)))
            })
        }

        proptest! {
            #[test]
            fn precoder_reconstructs_switch(seed in 0u64..100_000, a in gains(4), b in gains(4), pnc in any::<bool>(), pairwise in any::<bool>()) {
                let ch = sample_channel(4, seed).unwrap();
                let sw = if pairwise { SwitchSpec::pairwise(4, pnc) } else { SwitchSpec::non_pairwise(4, pnc) }.unwrap();
                let b = if pnc { b } else { zeros(4) };
                let g = assemble_precoder(&ch, &sw, &a, &b).unwrap();
                let target = CMatrix::from_diagonal(&a) * switch_matrix(&sw, &b);
                let recon = ch.h().transpose() * g * ch.h();
                prop_assert!((recon - &target).norm() <= 1e-9 * target.norm());
            }

            #[test]
            fn zero_b_reduces_r_and_power(seed in 0u64..100_000, a in gains(4), g2 in 0.0f64..2.0) {
                let ch = sample_channel(4, seed).unwrap();
                let sw = SwitchSpec::pairwise(4, true).unwrap();
                let np = NoiseParams::new(g2, 0.5, 1.0).unwrap();
                let r = compute_r(&ch, &sw, &np, &zeros(4)).unwrap();
                let q = compute_q(&ch, &sw, &np).unwrap();
                prop_assert!((&r - &q).norm() <= 1e-10 * q.norm());
                let s = compute_s(&ch, &sw, &np).unwrap();
                let omega = relay_power(&ch, &sw, &np, &a, &zeros(4));
                let quad = numerics::hermitian_quad(&s, &a);
                prop_assert!((omega - quad).abs() <= 1e-10 * quad.abs().max(1e-300));
            }
        }
    }
}
