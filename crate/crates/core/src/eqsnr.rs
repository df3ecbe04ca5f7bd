//! Equal-SNR relay designs: every station sees the same post-processing
//! noise and the relay spends its full power budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    compute_r, pair_coefficients, power_matrix, zeros, ChannelRealization, Diagnostics, NoiseParams,
    SolveOutcome, SwitchSpec,
};
use crate::numerics::{self, c, CMatrix, CVector, QuarticCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseSearchConfig {
    /// Phases are drawn from `{2πk/bins}`.
    pub bins: usize,
    pub trials: usize,
    pub rng_seed: u64,
    /// Draw a phase per station for the self-interference gains instead of
    /// keeping `B = bI` real.
    pub per_element_b_phase: bool,
}

impl Default for PhaseSearchConfig {
    fn default() -> Self {
        Self {
            bins: 8,
            trials: 10,
            rng_seed: 0,
            per_element_b_phase: false,
        }
    }
}

impl PhaseSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 || self.trials < 1 {
            return Err(Error::Config(format!(
                "phase search needs bins >= 2 and trials >= 1, got {} and {}",
                self.bins, self.trials
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsSearchConfig {
    /// Growth factor of the bracket offset above the smallest admissible ε.
    pub expansion: f64,
    /// Relative width at which bisection stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EpsSearchConfig {
    fn default() -> Self {
        Self {
            expansion: 2.0,
            tolerance: 1e-15,
            max_iterations: 400,
        }
    }
}

/// 41 evenly spaced points on `[−2, 2]`.
pub fn default_b_grid() -> Vec<f64> {
    (0..41).map(|k| (k as f64 - 20.0) / 10.0).collect()
}

fn gains(q: &[f64], np: &NoiseParams, phases: &[f64], eps: f64) -> CVector {
    CVector::from_fn(q.len(), |i, _| {
        let mag = (np.sigma2 / (eps + 1.0 - q[i])).sqrt();
        num_complex::Complex64::from_polar(mag, phases[i])
    })
}

/// Smallest ε at which the equal-noise gains with the given phases spend
/// exactly the relay budget.
pub fn solve_eps_given_phases(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    phases: &[f64],
    b: &CVector,
) -> Result<SolveOutcome> {
    solve_eps_given_phases_with(ch, sw, np, phases, b, &EpsSearchConfig::default())
}

pub fn solve_eps_given_phases_with(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    phases: &[f64],
    b: &CVector,
    cfg: &EpsSearchConfig,
) -> Result<SolveOutcome> {
    np.validate()?;
    let n = ch.n();
    if phases.len() != n || b.len() != n {
        return Err(Error::Dimension("phases and b need one entry per station".into()));
    }
    if phases.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("phases must be finite".into()));
    }
    let r = compute_r(ch, sw, np, b)?;
    let s = power_matrix(ch, sw, np, b)?;
    let q: Vec<f64> = (0..n).map(|i| r[(i, i)].re).collect();
    let (eps, bracket, iterations) = search_eps(&q, &s, np, phases, cfg)?;
    let a = gains(&q, np, phases, eps);
    let diagnostics = Diagnostics {
        iterations,
        bracket: Some(bracket),
        ..Default::default()
    };
    SolveOutcome::evaluate(ch, sw, np, a, b.clone(), diagnostics)
}

fn search_eps(
    q: &[f64],
    s: &CMatrix,
    np: &NoiseParams,
    phases: &[f64],
    cfg: &EpsSearchConfig,
) -> Result<(f64, (f64, f64), usize)> {
    let floor = q.iter().cloned().fold(f64::MIN, f64::max) - 1.0;
    let excess = |eps: f64| numerics::hermitian_quad(s, &gains(q, np, phases, eps)) - np.p;
    let scale = 1.0 + floor.abs();
    let mut offset = 1e-9 * scale;
    let mut lo = floor + offset;
    let mut hi = lo;
    let mut iterations = 0;
    // Walk upward until the power drops below the budget; the last point
    // above it closes the bracket from below.
    loop {
        let f = excess(hi);
        if !f.is_finite() {
            return Err(Error::BracketFailure { lo, hi });
        }
        if f <= 0.0 {
            break;
        }
        lo = hi;
        offset *= cfg.expansion;
        hi = floor + offset;
        iterations += 1;
        if iterations > cfg.max_iterations || offset > 1e12 * scale {
            return Err(Error::BracketFailure { lo, hi });
        }
    }
    if lo == hi {
        // Power already within budget at the smallest admissible ε.
        return Ok((hi, (hi, hi), iterations));
    }
    while hi - lo > cfg.tolerance * hi.abs().max(1e-300) && iterations < cfg.max_iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok((hi, (lo, hi), iterations))
}

fn require_two_station_derangement(sw: &SwitchSpec) -> Result<()> {
    if sw.n() != 2 {
        return Err(Error::TwoStationsRequired(sw.n()));
    }
    if !sw.is_derangement() {
        return Err(Error::Config("two-station closed form needs the swap pattern".into()));
    }
    Ok(())
}

/// Exact equal-SNR optimum for two stations: real gains of opposite sign
/// with `a₁²` a root of the squared power equation.
pub fn closed_form_two_station(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams) -> Result<SolveOutcome> {
    require_two_station_derangement(sw)?;
    np.validate()?;
    let b = zeros(2);
    let r = compute_r(ch, sw, np, &b)?;
    let s = power_matrix(ch, sw, np, &b)?;
    let (q1, q2) = (r[(0, 0)].re, r[(1, 1)].re);
    let (s11, s22, s12) = (s[(0, 0)].re, s[(1, 1)].re, s[(0, 1)].norm());
    let (p, sig2) = (np.p, np.sigma2);
    let qd = q1 - q2;
    let sig4 = sig2 * sig2;
    let quartic = QuarticCoefficients::new(
        s11 * s11 * qd * qd,
        2.0 * qd * (s11 * s11 * sig2 + s11 * s22 * sig2 - s11 * p * qd - 2.0 * s12 * s12 * sig2),
        sig4 * (s11 + s22).powi(2) + p * p * qd * qd - 2.0 * p * sig2 * qd * (2.0 * s11 + s22) - 4.0 * s12 * s12 * sig4,
        2.0 * p * p * sig2 * qd - 2.0 * p * sig4 * (s11 + s22),
        p * p * sig4,
    );
    let partner = |x: f64| -> Option<f64> {
        let d = qd + sig2 / x;
        (d > 0.0).then(|| sig2 / d)
    };
    let residual = |x: f64| -> Option<f64> {
        let y = partner(x)?;
        Some(s11 * x + s22 * y - 2.0 * s12 * (x * y).sqrt() - p)
    };
    let mut best: Option<f64> = None;
    for x in quartic.real_roots()? {
        if !(x > 0.0) {
            continue;
        }
        let Some(x) = polish_power_root(x, &residual) else {
            continue;
        };
        match residual(x) {
            Some(f) if f.abs() <= 1e-9 * p => {
                if best.is_none_or(|b| x > b) {
                    best = Some(x);
                }
            }
            _ => {}
        }
    }
    let x = best.ok_or(Error::NoRealRoot)?;
    let y = partner(x).ok_or(Error::NoRealRoot)?;
    let a = CVector::from_vec(vec![c(x.sqrt(), 0.0), c(-y.sqrt(), 0.0)]);
    SolveOutcome::evaluate(ch, sw, np, a, b, Diagnostics::default())
}

/// Newton steps with a central-difference slope on the unsquared power
/// equation; the squared quartic loses half the digits at double roots.
fn polish_power_root(mut x: f64, residual: &dyn Fn(f64) -> Option<f64>) -> Option<f64> {
    let mut fx = residual(x)?;
    for _ in 0..20 {
        let h = 1e-7 * x;
        let slope = (residual(x + h)? - residual(x - h)?) / (2.0 * h);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = x - fx / slope;
        if !(next > 0.0) {
            break;
        }
        match residual(next) {
            Some(fn_) if fn_.abs() < fx.abs() => {
                x = next;
                fx = fn_;
            }
            _ => break,
        }
    }
    Some(x)
}

/// Opposite signs within every pair, zero phase offset between pairs.
pub fn opposite_phase(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams) -> Result<SolveOutcome> {
    let pairs = sw.require_pairs()?;
    let mut phases = vec![0.0; sw.n()];
    for &(_, k) in pairs {
        phases[k] = std::f64::consts::PI;
    }
    solve_eps_given_phases(ch, sw, np, &phases, &zeros(sw.n()))
}

fn draw_phases(rng: &mut ChaCha8Rng, n: usize, bins: usize) -> Vec<f64> {
    (0..n)
        .map(|_| std::f64::consts::TAU * rng.random_range(0..bins) as f64 / bins as f64)
        .collect()
}

fn better(candidate: &SolveOutcome, incumbent: &Option<SolveOutcome>) -> bool {
    match incumbent {
        None => true,
        Some(best) => candidate.worst_epsilon() < best.worst_epsilon(),
    }
}

/// Best of `trials` random quantized phase vectors.
pub fn random_phase(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    cfg: &PhaseSearchConfig,
) -> Result<SolveOutcome> {
    phase_trials(ch, sw, np, cfg, 0.0)
}

fn phase_trials(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    cfg: &PhaseSearchConfig,
    b_value: f64,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    let n = sw.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut b_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut best: Option<SolveOutcome> = None;
    let mut last_err = None;
    for _ in 0..cfg.trials {
        let phases = draw_phases(&mut rng, n, cfg.bins);
        let b = if cfg.per_element_b_phase {
            let phi = draw_phases(&mut b_rng, n, cfg.bins);
            CVector::from_fn(n, |i, _| num_complex::Complex64::from_polar(b_value, phi[i]))
        } else {
            CVector::from_element(n, c(b_value, 0.0))
        };
        match solve_eps_given_phases(ch, sw, np, &phases, &b) {
            Ok(out) => {
                if better(&out, &best) {
                    best = Some(out);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::BracketFailure { lo: 0.0, hi: 0.0 }))
}

/// Self-interference gains that minimize each pair's relay-noise term, with
/// all gain phases aligned.
pub fn pnc_phase_aligned(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams) -> Result<SolveOutcome> {
    require_pnc(sw)?;
    let b = phase_aligned_b(ch, sw)?;
    solve_eps_given_phases(ch, sw, np, &vec![0.0; sw.n()], &b)
}

/// `b_π = −h₂*/h₁`, `b_κ = −h₂/h₃` for every pair `(π, κ)`.
pub fn phase_aligned_b(ch: &ChannelRealization, sw: &SwitchSpec) -> Result<CVector> {
    let pairs = sw.require_pairs()?;
    let mut b = zeros(sw.n());
    for &(p, k) in pairs {
        let h = pair_coefficients(ch, (p, k));
        b[p] = -h.h2.conj() / h.h1;
        b[k] = -h.h2 / h.h3;
    }
    Ok(b)
}

fn require_pnc(sw: &SwitchSpec) -> Result<()> {
    if !sw.pnc {
        return Err(Error::Config("self-interference gains require a network-coded switch".into()));
    }
    Ok(())
}

/// Random-phase search repeated for every `B = bI` on the grid, keeping the
/// best outcome. Each grid point reuses the same phase draws.
pub fn pnc_identical_b(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    cfg: &PhaseSearchConfig,
    b_grid: &[f64],
) -> Result<SolveOutcome> {
    if b_grid.iter().any(|b| *b != 0.0) {
        require_pnc(sw)?;
    }
    if b_grid.is_empty() || b_grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::Config("b grid must be non-empty and finite".into()));
    }
    let mut best: Option<SolveOutcome> = None;
    let mut last_err = None;
    for &b in b_grid {
        match phase_trials(ch, sw, np, cfg, b) {
            Ok(out) => {
                if better(&out, &best) {
                    best = Some(out);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::BracketFailure { lo: 0.0, hi: 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_channel;
    use proptest::prelude::*;

    fn identity_case() -> (ChannelRealization, NoiseParams) {
        (
            ChannelRealization::new(CMatrix::identity(2, 2)).unwrap(),
            NoiseParams::new(0.1, 0.1, 1.0).unwrap(),
        )
    }

    fn assert_equal_snr(out: &SolveOutcome, p: f64) {
        assert!(out.epsilon_spread() <= 1e-8 * out.mean_epsilon(), "{:?}", out.epsilon);
        assert!((out.power_used - p).abs() <= 1e-6 * p, "{}", out.power_used);
    }

    #[test]
    fn identity_channel_any_phases() {
        let (ch, np) = identity_case();
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        for phases in [[0.0, 0.0], [0.3, 2.0], [1.0, -1.0]] {
            let out = solve_eps_given_phases(&ch, &sw, &np, &phases, &zeros(2)).unwrap();
            assert!((out.worst_epsilon() - 0.32).abs() < 1e-10);
            assert_equal_snr(&out, 1.0);
        }
    }

    #[test]
    fn noiseless_relay_closed_form() {
        let np = NoiseParams::new(0.0, 0.2, 2.0).unwrap();
        for seed in 0..5 {
            let ch = sample_channel(4, seed).unwrap();
            let sw = SwitchSpec::non_pairwise(4, false).unwrap();
            let expect = np.sigma2 * ch.w().trace().re / np.p;
            let out = solve_eps_given_phases(&ch, &sw, &np, &[0.1, 0.7, 2.0, 4.0], &zeros(4)).unwrap();
            assert!((out.worst_epsilon() - expect).abs() <= 1e-6 * expect);
        }
    }

    #[test]
    fn quartic_matches_bisection() {
        let np = NoiseParams::from_snr_db(10.0);
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        for seed in 0..30 {
            let ch = sample_channel(2, seed).unwrap();
            let closed = closed_form_two_station(&ch, &sw, &np).unwrap();
            let search = solve_eps_given_phases(&ch, &sw, &np, &[0.0, std::f64::consts::PI], &zeros(2)).unwrap();
            assert!(
                (closed.worst_epsilon() - search.worst_epsilon()).abs() <= 1e-6 * search.worst_epsilon(),
                "{} vs {}",
                closed.worst_epsilon(),
                search.worst_epsilon()
            );
            assert_equal_snr(&closed, 1.0);
            assert!(closed.design.a[0].re >= 0.0 && closed.design.a[1].re <= 0.0);
        }
    }

    #[test]
    fn closed_form_identity() {
        let (ch, np) = identity_case();
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        let out = closed_form_two_station(&ch, &sw, &np).unwrap();
        let g = 1.0 / 2.2f64.sqrt();
        assert!((out.design.a[0] - c(g, 0.0)).norm() < 1e-9);
        assert!((out.design.a[1] - c(-g, 0.0)).norm() < 1e-9);
        assert!((out.worst_epsilon() - 0.32).abs() < 1e-9);
    }

    #[test]
    fn closed_form_beats_phase_grid() {
        let np = NoiseParams::from_snr_db(5.0);
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        for seed in [3u64, 11] {
            let ch = sample_channel(2, seed).unwrap();
            let closed = closed_form_two_station(&ch, &sw, &np).unwrap().worst_epsilon();
            for i in 0..64 {
                for j in 0..64 {
                    let phases = [
                        std::f64::consts::TAU * i as f64 / 64.0,
                        std::f64::consts::TAU * j as f64 / 64.0,
                    ];
                    let e = solve_eps_given_phases(&ch, &sw, &np, &phases, &zeros(2)).unwrap().worst_epsilon();
                    assert!(closed <= e * (1.0 + 1e-9), "{closed} > {e}");
                }
            }
        }
    }

    #[test]
    fn opposite_phase_two_stations_is_closed_form() {
        let np = NoiseParams::from_snr_db(20.0);
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        for seed in 0..10 {
            let ch = sample_channel(2, seed).unwrap();
            let a = opposite_phase(&ch, &sw, &np).unwrap();
            let b = closed_form_two_station(&ch, &sw, &np).unwrap();
            assert!((a.worst_epsilon() - b.worst_epsilon()).abs() <= 1e-8 * b.worst_epsilon());
        }
    }

    #[test]
    fn opposite_phase_needs_pairs() {
        let ch = sample_channel(4, 1).unwrap();
        let sw = SwitchSpec::non_pairwise(4, false).unwrap();
        assert_eq!(
            opposite_phase(&ch, &sw, &NoiseParams::from_snr_db(10.0)).unwrap_err(),
            Error::PairingRequired
        );
    }

    #[test]
    fn opposite_phase_approaches_noiseless_relay() {
        let ch = sample_channel(4, 21).unwrap();
        let sw = SwitchSpec::pairwise(4, false).unwrap();
        let sigma2 = 0.1;
        let target = sigma2 * ch.w().trace().re;
        let mut last = f64::INFINITY;
        for g2 in [1e-1, 1e-2, 1e-3, 1e-5] {
            let np = NoiseParams::new(g2, sigma2, 1.0).unwrap();
            let e = opposite_phase(&ch, &sw, &np).unwrap().worst_epsilon();
            let gap = (e - target).abs();
            assert!(gap < last);
            last = gap;
        }
        assert!(last <= 1e-3 * target);
    }

    #[test]
    fn random_phase_is_deterministic_and_converges() {
        let np = NoiseParams::from_snr_db(10.0);
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        let ch = sample_channel(2, 5).unwrap();
        let cfg = PhaseSearchConfig {
            bins: 2,
            trials: 1,
            rng_seed: 42,
            per_element_b_phase: false,
        };
        let a = random_phase(&ch, &sw, &np, &cfg).unwrap();
        let b = random_phase(&ch, &sw, &np, &cfg).unwrap();
        assert_eq!(a.epsilon, b.epsilon);

        let cfg = PhaseSearchConfig {
            bins: 64,
            trials: 4000,
            rng_seed: 1,
            per_element_b_phase: false,
        };
        let closed = closed_form_two_station(&ch, &sw, &np).unwrap().worst_epsilon();
        let rp = random_phase(&ch, &sw, &np, &cfg).unwrap().worst_epsilon();
        assert!(rp >= closed * (1.0 - 1e-9));
        assert!(rp - closed <= 1e-3 * closed);
    }

    #[test]
    fn phase_aligned_identity_and_pair_formula() {
        let (ch, np) = identity_case();
        let sw = SwitchSpec::pairwise(2, true).unwrap();
        let out = pnc_phase_aligned(&ch, &sw, &np).unwrap();
        assert!(out.design.b.iter().all(|z| z.norm() < 1e-15));
        assert!((out.worst_epsilon() - 0.32).abs() < 1e-10);

        let np = NoiseParams::from_snr_db(10.0);
        let sw = SwitchSpec::pairwise(4, true).unwrap();
        for seed in 0..10 {
            let ch = sample_channel(4, seed).unwrap();
            let out = pnc_phase_aligned(&ch, &sw, &np).unwrap();
            assert_equal_snr(&out, 1.0);
            for &(p, k) in sw.pairs().unwrap() {
                let h = pair_coefficients(&ch, (p, k));
                let a1 = out.design.a[p].norm_sqr();
                let formula = -np.gamma2 * h.h2.norm_sqr() / h.h1 + np.gamma2 * h.h3 + np.sigma2 / a1;
                assert!((formula - out.epsilon[p]).abs() <= 1e-10 * out.epsilon[p]);
                assert!(out.design.a[p].im.abs() < 1e-15 && out.design.a[p].re > 0.0);
            }
        }
    }

    #[test]
    fn identical_b_reductions() {
        let np = NoiseParams::from_snr_db(10.0);
        let ch = sample_channel(4, 8).unwrap();
        let sw = SwitchSpec::non_pairwise(4, true).unwrap();
        let cfg = PhaseSearchConfig {
            bins: 8,
            trials: 10,
            rng_seed: 3,
            per_element_b_phase: false,
        };
        let plain = random_phase(&ch, &sw.with_pnc(false), &np, &cfg).unwrap();
        let zero = pnc_identical_b(&ch, &sw, &np, &cfg, &[0.0]).unwrap();
        assert_eq!(plain.epsilon, zero.epsilon);
        let coarse = pnc_identical_b(&ch, &sw, &np, &cfg, &[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        let dense = pnc_identical_b(&ch, &sw, &np, &cfg, &default_b_grid()).unwrap();
        assert!(coarse.worst_epsilon() <= zero.worst_epsilon());
        assert!(dense.worst_epsilon() <= coarse.worst_epsilon());
        let phased = pnc_identical_b(&ch, &sw, &np, &PhaseSearchConfig { per_element_b_phase: true, ..cfg }, &[0.0]).unwrap();
        assert_eq!(phased.epsilon, plain.epsilon);
    }

    #[test]
    fn configs_are_validated() {
        let bad = PhaseSearchConfig {
            bins: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let ch = sample_channel(2, 0).unwrap();
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        assert!(pnc_phase_aligned(&ch, &sw, &NoiseParams::from_snr_db(0.0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn outcomes_are_equal_snr_at_full_power(seed in 0u64..10_000, snr in -5.0f64..35.0, pnc in any::<bool>()) {
            let np = NoiseParams::from_snr_db(snr);
            let ch = sample_channel(4, seed).unwrap();
            let sw = SwitchSpec::pairwise(4, pnc).unwrap();
            let cfg = PhaseSearchConfig { rng_seed: seed, ..Default::default() };
            let mut outs = vec![opposite_phase(&ch, &sw.with_pnc(false), &np).unwrap(), random_phase(&ch, &sw, &np, &cfg).unwrap()];
            if pnc {
                outs.push(pnc_phase_aligned(&ch, &sw, &np).unwrap());
                outs.push(pnc_identical_b(&ch, &sw, &np, &cfg, &[-1.0, 0.0, 0.5]).unwrap());
            }
            for out in &outs {
                prop_assert!(out.epsilon_spread() <= 1e-8 * out.mean_epsilon());
                prop_assert!((out.power_used - np.p).abs() <= 1e-6 * np.p);
            }
        }

        #[test]
        fn closed_form_dominates_random_phase(seed in 0u64..10_000, snr in 0.0f64..30.0, bins in 2usize..16, trials in 1usize..20) {
            let np = NoiseParams::from_snr_db(snr);
            let ch = sample_channel(2, seed).unwrap();
            let sw = SwitchSpec::pairwise(2, false).unwrap();
            let cfg = PhaseSearchConfig { bins, trials, rng_seed: seed, per_element_b_phase: false };
            let closed = closed_form_two_station(&ch, &sw, &np).unwrap().worst_epsilon();
            let rp = random_phase(&ch, &sw, &np, &cfg).unwrap().worst_epsilon();
            prop_assert!(closed <= rp * (1.0 + 1e-9));
        }

        #[test]
        fn identical_b_dominates_random_phase(seed in 0u64..10_000, snr in 0.0f64..30.0) {
            let np = NoiseParams::from_snr_db(snr);
            let ch = sample_channel(4, seed).unwrap();
            let sw = SwitchSpec::non_pairwise(4, true).unwrap();
            let cfg = PhaseSearchConfig { rng_seed: seed, ..Default::default() };
            let base = random_phase(&ch, &sw.with_pnc(false), &np, &cfg).unwrap().worst_epsilon();
            let ib = pnc_identical_b(&ch, &sw, &np, &cfg, &[-0.5, 0.0, 0.5]).unwrap().worst_epsilon();
            prop_assert!(ib <= base);
        }
    }
}
