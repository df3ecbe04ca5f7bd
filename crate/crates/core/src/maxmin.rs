//! Maxmin-SNR relay design by semidefinite relaxation, the exhaustive
//! two-station baseline, and block-coordinate design of the network-coded
//! relay.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eqsnr::{phase_aligned_b, solve_eps_given_phases};
use crate::error::{Error, Result};
use crate::model::{
    complex_gaussian, compute_r, power_matrix, throughput, zeros, ChannelRealization, Diagnostics, NoiseParams,
    SolveOutcome, SwitchSpec,
};
use crate::numerics::{self, brent_root, c, CMatrix, CVector};
use crate::sdp::{self, diagonal_selector, SdpProblem, SdpSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdrConfig {
    /// Gaussian rounding draws per relaxation.
    pub samples: usize,
    /// Relative width of the final ε bracket.
    pub eps_tolerance: f64,
    /// Cap on outer-search evaluations.
    pub max_outer: usize,
    pub rng_seed: u64,
    pub sdp: SdpSettings,
}

impl Default for SdrConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            eps_tolerance: 1e-6,
            max_outer: 200,
            rng_seed: 0,
            sdp: SdpSettings::default(),
        }
    }
}

impl SdrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 || !(self.eps_tolerance > 0.0) || self.max_outer < 1 {
            return Err(Error::Config(format!("invalid relaxation settings: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialB {
    /// Starts from the zero-forcing maxmin design, which is already a fixed
    /// point of the alternation.
    Zero,
    /// The closed-form pairwise gains; falls back to zero without pairs.
    PhaseAligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterativeConfig {
    pub max_alternations: usize,
    /// Stop when an alternation improves ε by at most `tolerance·(1 + ε)`.
    pub tolerance: f64,
    pub initial_b: InitialB,
}

impl Default for IterativeConfig {
    fn default() -> Self {
        Self {
            max_alternations: 20,
            tolerance: 1e-4,
            initial_b: InitialB::PhaseAligned,
        }
    }
}

/// Result of one minimum-power relaxation at a fixed noise target.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpSolution {
    pub power: f64,
    pub a: CVector,
    pub sdp_lower_bound: f64,
    pub rank_one_residual: f64,
}

fn lower_bounds(q: &[f64], np: &NoiseParams, eps: f64) -> Vec<f64> {
    q.iter().map(|qi| np.sigma2 / (eps + 1.0 - qi)).collect()
}

fn base_normals(n: usize, samples: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| CVector::from_fn(n, |_, _| complex_gaussian(&mut rng, 1.0)))
        .collect()
}

fn unit_phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 0.0 {
        z / r
    } else {
        c(1.0, 0.0)
    }
}

/// `√lᵢ·vᵢ/|vᵢ|`: every modulus constraint met with equality.
fn tight(v: &CVector, lb: &[f64]) -> CVector {
    CVector::from_fn(v.len(), |i, _| unit_phase(v[i]) * lb[i].sqrt())
}

/// `v` scaled up just enough to meet every modulus constraint.
fn scaled(v: &CVector, lb: &[f64]) -> Option<CVector> {
    let t = v
        .iter()
        .zip(lb)
        .map(|(z, l)| l.sqrt() / z.norm())
        .fold(0.0, f64::max);
    (t.is_finite() && t > 0.0).then(|| v * c(t, 0.0))
}

/// `V·√Λ` with negative eigenvalues clipped, so that `F·z` has covariance `X`.
fn psd_factor(x: &CMatrix) -> CMatrix {
    let (vals, vecs) = numerics::hermitian_eigen(x);
    let roots = CVector::from_iterator(vals.len(), vals.iter().map(|v| c(v.max(0.0).sqrt(), 0.0)));
    vecs * CMatrix::from_diagonal(&roots)
}

struct Rounder<'a> {
    normals: Vec<CVector>,
    q: &'a [f64],
    sigma2: f64,
}

impl Rounder<'_> {
    fn worst_eps(&self, a: &CVector) -> f64 {
        self.q
            .iter()
            .zip(a.iter())
            .map(|(qi, ai)| qi - 1.0 + self.sigma2 / ai.norm_sqr())
            .fold(f64::MIN, f64::max)
    }

    /// `min Tr(SX)` s.t. `Xᵢᵢ ≥ lᵢ`, then Gaussian randomization. `extra`
    /// vectors are projected both ways and compete with the draws.
    fn solve(
        &self,
        s: &CMatrix,
        lb: &[f64],
        extra: &[CVector],
        settings: &SdpSettings,
    ) -> Result<QcqpSolution> {
        let n = lb.len();
        let mut problem = SdpProblem::new(s.clone());
        for (i, &l) in lb.iter().enumerate() {
            problem = problem.at_least(diagonal_selector(n, i), l);
        }
        let sol = sdp::solve_with(&problem, settings)?.into_optimal()?;
        let (v, rank_one_residual) = sdp::rank_one_extract(&sol.x);
        let factor = psd_factor(&sol.x);

        let mut best: Option<(f64, f64, CVector)> = None;
        let mut consider = |a: CVector| {
            let power = numerics::hermitian_quad(s, &a);
            let eps = self.worst_eps(&a);
            let better = best.as_ref().is_none_or(|(p, e, _)| power < *p || (power == *p && eps < *e));
            if power.is_finite() && better {
                best = Some((power, eps, a));
            }
        };
        for cand in std::iter::once(&v).chain(extra) {
            consider(tight(cand, lb));
            if let Some(a) = scaled(cand, lb) {
                consider(a);
            }
        }
        for z in &self.normals {
            consider(tight(&(&factor * z), lb));
        }
        let (power, _, a) = best.ok_or(Error::SdpInfeasible)?;
        Ok(QcqpSolution {
            power,
            a,
            sdp_lower_bound: sol.objective,
            rank_one_residual,
        })
    }
}

/// Minimum relay power meeting `|aᵢ|² ≥ σ²/(ε+1−qᵢ)` for every station,
/// by relaxation and rounding.
pub fn qcqp_min_power(
    np: &NoiseParams,
    eps_target: f64,
    q: &[f64],
    s: &CMatrix,
    cfg: &SdrConfig,
) -> Result<QcqpSolution> {
    cfg.validate()?;
    let floor = q.iter().cloned().fold(f64::MIN, f64::max) - 1.0;
    if !(eps_target > floor) {
        return Err(Error::Config(format!("noise target {eps_target} not above {floor}")));
    }
    let rounder = Rounder {
        normals: base_normals(q.len(), cfg.samples, cfg.rng_seed),
        q,
        sigma2: np.sigma2,
    };
    rounder.solve(s, &lower_bounds(q, np, eps_target), &[], &cfg.sdp)
}

/// Maps `ε > floor` to `ln(ε − floor)` so that the pole at the floor is
/// pushed to −∞ and the searched function becomes close to linear.
struct LogOffset {
    floor: f64,
}

impl LogOffset {
    fn eps(&self, t: f64) -> f64 {
        self.floor + t.exp()
    }
}

struct SearchResult {
    eps: f64,
    solution: QcqpSolution,
    bracket: (f64, f64),
    evaluations: usize,
}

/// Smallest ε at which the rounded min-power drops to `p`.
fn outer_search(
    q: &[f64],
    s: &CMatrix,
    np: &NoiseParams,
    cfg: &SdrConfig,
    extra: &[CVector],
    start_hi: Option<f64>,
) -> Result<SearchResult> {
    cfg.validate()?;
    let floor = q.iter().cloned().fold(f64::MIN, f64::max) - 1.0;
    let map = LogOffset { floor };
    let rounder = Rounder {
        normals: base_normals(q.len(), cfg.samples, cfg.rng_seed),
        q,
        sigma2: np.sigma2,
    };
    let mut evaluations = 0;
    let mut best_feasible: Option<(f64, QcqpSolution)> = None;
    let mut eval = |t: f64| -> Result<f64> {
        let eps = map.eps(t);
        let sol = rounder.solve(s, &lower_bounds(q, np, eps), extra, &cfg.sdp)?;
        evaluations += 1;
        let excess = sol.power - np.p;
        if excess <= 0.0 && best_feasible.as_ref().is_none_or(|(e, _)| eps < *e) {
            best_feasible = Some((eps, sol));
        }
        Ok(excess)
    };

    let scale = 1.0 + floor.abs();
    let mut t_hi = match start_hi {
        Some(e) if e > floor => (e - floor).ln(),
        _ => scale.ln(),
    };
    let mut f_hi = eval(t_hi)?;
    let mut t_lo = t_hi;
    let mut f_lo = f_hi;
    while f_hi > 0.0 {
        t_lo = t_hi;
        f_lo = f_hi;
        t_hi += std::f64::consts::LN_2 * 2.0;
        if t_hi > (1e12 * scale).ln() {
            return Err(Error::BracketFailure {
                lo: map.eps(t_lo),
                hi: map.eps(t_hi),
            });
        }
        f_hi = eval(t_hi)?;
    }
    if f_lo <= 0.0 {
        t_lo = t_hi;
        while f_lo <= 0.0 {
            t_lo -= std::f64::consts::LN_2 * 2.0;
            if t_lo < (1e-12 * scale).ln() {
                // Budget already met essentially at the floor.
                break;
            }
            f_lo = eval(t_lo)?;
        }
    }
    let bracket = if f_lo > 0.0 {
        // Relative tolerance on ε becomes a tolerance on t near the root.
        let eps_hi = map.eps(t_hi);
        let xtol = cfg.eps_tolerance * eps_hi.abs().max(1e-12) / (eps_hi - floor);
        let r = brent_root(&mut eval, t_lo, f_lo, t_hi, f_hi, xtol, cfg.max_outer)?;
        (map.eps(r.positive), map.eps(r.negative))
    } else {
        (map.eps(t_lo), map.eps(t_hi))
    };
    let (eps, solution) = best_feasible.ok_or(Error::BracketFailure {
        lo: bracket.0,
        hi: bracket.1,
    })?;
    Ok(SearchResult {
        eps,
        solution,
        bracket,
        evaluations,
    })
}

/// Spends the full budget: either by scaling the rounded design up, or by
/// re-solving equal-noise gains on its phases. Keeps the better of the two.
fn finalize(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    b: &CVector,
    found: SearchResult,
    sdp_solves: usize,
) -> Result<SolveOutcome> {
    let diagnostics = Diagnostics {
        iterations: found.evaluations,
        sdp_solves,
        bracket: Some(found.bracket),
        sdp_lower_bound: Some(found.solution.sdp_lower_bound),
        rank_one_residual: Some(found.solution.rank_one_residual),
        eps_history: vec![found.eps],
    };
    let a = &found.solution.a;
    let scale = (np.p / found.solution.power).sqrt();
    let scaled = SolveOutcome::evaluate(ch, sw, np, a * c(scale, 0.0), b.clone(), diagnostics.clone())?;
    let phases: Vec<f64> = a.iter().map(|z| z.arg()).collect();
    match solve_eps_given_phases(ch, sw, np, &phases, b) {
        Ok(mut equal) if equal.worst_epsilon() < scaled.worst_epsilon() => {
            equal.diagnostics = diagnostics;
            Ok(equal)
        }
        _ => Ok(scaled),
    }
}

fn maxmin_with_b(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    b: &CVector,
    cfg: &SdrConfig,
    warm: Option<&SolveOutcome>,
) -> Result<SolveOutcome> {
    np.validate()?;
    let r = compute_r(ch, sw, np, b)?;
    let s = power_matrix(ch, sw, np, b)?;
    let q: Vec<f64> = (0..ch.n()).map(|i| r[(i, i)].re).collect();
    let extra: Vec<CVector> = warm.map(|w| vec![w.design.a.clone()]).unwrap_or_default();
    let start = match warm {
        Some(w) => Some(w.worst_epsilon()),
        None => {
            // Any equal-noise design gives a point where the budget is met.
            solve_eps_given_phases(ch, sw, np, &vec![0.0; ch.n()], b)
                .ok()
                .map(|o| o.worst_epsilon())
        }
    };
    let found = outer_search(&q, &s, np, cfg, &extra, start)?;
    let solves = found.evaluations;
    finalize(ch, sw, np, b, found, solves)
}

/// Maxmin-SNR design for the zero-forcing relay.
pub fn maxmin_solve(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, cfg: &SdrConfig) -> Result<SolveOutcome> {
    maxmin_with_b(ch, sw, np, &zeros(ch.n()), cfg, None)
}

/// Smallest ε at which the relaxation value reaches the budget; the returned
/// ε is at or below the exact crossing.
pub fn sdr_upper_bound_eps(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, cfg: &SdrConfig) -> Result<f64> {
    np.validate()?;
    cfg.validate()?;
    let b = zeros(ch.n());
    let r = compute_r(ch, sw, np, &b)?;
    let s = power_matrix(ch, sw, np, &b)?;
    let q: Vec<f64> = (0..ch.n()).map(|i| r[(i, i)].re).collect();
    let n = q.len();
    let floor = q.iter().cloned().fold(f64::MIN, f64::max) - 1.0;
    let map = LogOffset { floor };
    let value = |t: f64| -> Result<f64> {
        let lb = lower_bounds(&q, np, map.eps(t));
        let mut problem = SdpProblem::new(s.clone());
        for (i, &l) in lb.iter().enumerate() {
            problem = problem.at_least(diagonal_selector(n, i), l);
        }
        let sol = sdp::solve_with(&problem, &cfg.sdp)?.into_optimal()?;
        // The dual objective is a certified lower bound on the relaxation.
        Ok(sol.dual_objective.min(sol.objective) - np.p)
    };
    let scale = 1.0 + floor.abs();
    let mut t_hi = scale.ln();
    let mut f_hi = value(t_hi)?;
    let mut t_lo = t_hi;
    let mut f_lo = f_hi;
    while f_hi > 0.0 {
        t_lo = t_hi;
        f_lo = f_hi;
        t_hi += 2.0 * std::f64::consts::LN_2;
        f_hi = value(t_hi)?;
        if t_hi > (1e12 * scale).ln() {
            return Err(Error::BracketFailure {
                lo: map.eps(t_lo),
                hi: map.eps(t_hi),
            });
        }
    }
    while f_lo <= 0.0 {
        t_lo -= 2.0 * std::f64::consts::LN_2;
        if t_lo < (1e-12 * scale).ln() {
            return Ok(map.eps(t_lo));
        }
        f_lo = value(t_lo)?;
    }
    let eps_hi = map.eps(t_hi);
    let xtol = 1e-10 * eps_hi.abs().max(1e-12) / (eps_hi - floor);
    let r = brent_root(value, t_lo, f_lo, t_hi, f_hi, xtol, cfg.max_outer)?;
    // Relaxation value still above the budget here, so no design does better.
    Ok(map.eps(r.positive))
}

/// Worst-station throughput that no zero-forcing design can exceed.
pub fn sdr_upper_bound(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, cfg: &SdrConfig) -> Result<f64> {
    throughput(sdr_upper_bound_eps(ch, sw, np, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExhaustiveGrid {
    /// Points on the `|a₁|` axis.
    pub magnitudes: usize,
    /// Points on the relative phase axis.
    pub phases: usize,
    /// Zoomed passes around the incumbent.
    pub refinements: usize,
}

impl Default for ExhaustiveGrid {
    fn default() -> Self {
        Self {
            magnitudes: 200,
            phases: 64,
            refinements: 1,
        }
    }
}

/// Grid search for the two-station maxmin optimum over the relative phase.
/// At each phase `|a₁|` is searched on a grid and then refined, with `|a₂|`
/// the largest value the budget allows, since each station's noise falls
/// with its own gain.
pub fn maxmin_exhaustive_2(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    grid: &ExhaustiveGrid,
) -> Result<SolveOutcome> {
    if sw.n() != 2 {
        return Err(Error::TwoStationsRequired(sw.n()));
    }
    np.validate()?;
    let b = zeros(2);
    let r = compute_r(ch, sw, np, &b)?;
    let s = power_matrix(ch, sw, np, &b)?;
    let (q1, q2) = (r[(0, 0)].re, r[(1, 1)].re);
    let (s11, s22, s12) = (s[(0, 0)].re, s[(1, 1)].re, s[(0, 1)]);
    // Largest |a₁| for which some a₂ keeps the power within budget.
    let reach = (np.p / (s11 - s12.norm_sqr() / s22)).sqrt();

    let partner = |x: f64, phi: f64| -> Option<f64> {
        // s22·y² + 2·Re(s12·e^{jφ})·x·y + s11·x² − p = 0, largest root.
        let cross = (s12 * Complex64::from_polar(1.0, phi)).re * x;
        let disc = cross * cross - s22 * (s11 * x * x - np.p);
        if disc < 0.0 {
            return None;
        }
        let y = (-cross + disc.sqrt()) / s22;
        (y > 0.0).then_some(y)
    };
    let worst = |x: f64, y: f64| (q1 - 1.0 + np.sigma2 / (x * x)).max(q2 - 1.0 + np.sigma2 / (y * y));

    let nm = grid.magnitudes.max(2);
    // Best `(ε, |a₁|, |a₂|)` at one phase: grid over `|a₁|`, then a golden
    // section search between the neighbours of the best grid point.
    let profile = |phi: f64| -> Option<(f64, f64, f64)> {
        let at = |x: f64| partner(x, phi).map(|y| (worst(x, y), x, y));
        let step = reach / nm as f64;
        let mut best: Option<(f64, f64, f64)> = None;
        for i in 1..=nm {
            if let Some(v) = at(step * i as f64) {
                if best.is_none_or(|b| v.0 < b.0) {
                    best = Some(v);
                }
            }
        }
        let (_, x0, _) = best?;
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = ((x0 - step).max(0.0), (x0 + step).min(reach));
        let cost = |x: f64| at(x).map_or(f64::INFINITY, |v| v.0);
        let (mut u, mut v) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut fu, mut fv) = (cost(u), cost(v));
        for _ in 0..80 {
            if fu <= fv {
                hi = v;
                (v, fv) = (u, fu);
                u = hi - g * (hi - lo);
                fu = cost(u);
            } else {
                lo = u;
                (u, fu) = (v, fv);
                v = lo + g * (hi - lo);
                fv = cost(v);
            }
        }
        [at(u), best].into_iter().flatten().min_by(|a, b| a.0.total_cmp(&b.0))
    };

    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    let scan = |p_lo: f64, p_hi: f64, best: &mut (f64, f64, f64, f64)| {
        let count = grid.phases.max(1);
        for k in 0..=count {
            let phi = p_lo + (p_hi - p_lo) * k as f64 / count as f64;
            if let Some((e, x, y)) = profile(phi) {
                if e < best.0 {
                    *best = (e, x, y, phi);
                }
            }
        }
    };
    let tau = std::f64::consts::TAU;
    scan(0.0, tau, &mut best);
    let mut dp = tau / grid.phases.max(1) as f64;
    for _ in 0..grid.refinements {
        let phi = best.3;
        scan(phi - dp, phi + dp, &mut best);
        dp *= 2.0 / grid.phases.max(1) as f64;
    }
    let (eps, x, y, phi) = best;
    if !eps.is_finite() {
        return Err(Error::NoRealRoot);
    }
    // With a₁ real, Ω contains s₁₂·a₁*a₂ + c.c., so the relative phase enters
    // as a₂ = |a₂|·e^{jφ}.
    let a = CVector::from_vec(vec![c(x, 0.0), Complex64::from_polar(y, phi)]);
    SolveOutcome::evaluate(ch, sw, np, a, b, Diagnostics::default())
}

/// Maxmin over the gains `a` with the self-interference gains held at `b`.
pub fn pnc_fix_b_step(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    b: &CVector,
    cfg: &SdrConfig,
) -> Result<SolveOutcome> {
    maxmin_with_b(ch, sw, np, b, cfg, None)
}

/// Noise-cap data for one station: `γ²(Wσσ + 2Re(bᵢWᵢσ) + |bᵢ|²Wᵢᵢ) ≤ capᵢ`.
struct Cap {
    w_ii: f64,
    w_is: Complex64,
    w_ss: f64,
    room: f64,
}

impl Cap {
    fn load(&self, gamma2: f64, bi: Complex64) -> f64 {
        gamma2 * (self.w_ss + 2.0 * (bi * self.w_is).re + bi.norm_sqr() * self.w_ii)
    }

    fn holds(&self, gamma2: f64, bi: Complex64) -> bool {
        self.load(gamma2, bi) <= self.room + 1e-12 * (1.0 + self.room.abs())
    }
}

fn caps(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, a: &CVector, eps: f64) -> Result<Vec<Cap>> {
    let w = ch.w();
    (0..sw.n())
        .map(|i| {
            let src = sw.source(i);
            if src == i {
                return Err(Error::Config("self-interference design needs a derangement".into()));
            }
            let g = a[i].norm_sqr();
            if g == 0.0 {
                return Err(Error::ZeroGain { station: i });
            }
            Ok(Cap {
                w_ii: w[(i, i)].re,
                w_is: w[(i, src)],
                w_ss: w[(src, src)].re,
                room: eps - np.sigma2 / g,
            })
        })
        .collect()
}

/// Relay power as a function of `b` with `a` fixed:
/// `Ω(b) = bᴴS̃b + 2Re(fᴴb) + const`.
fn fix_a_quadratic(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams, a: &CVector) -> (CMatrix, CVector, f64) {
    let n = sw.n();
    let m = CMatrix::from_fn(n, n, |i, j| a[i].conj() * ch.w_star()[(i, j)] * a[j]);
    let nn = CMatrix::identity(n, n) + ch.w().scale(np.gamma2);
    let st = CMatrix::from_fn(n, n, |i, j| nn[(j, i)] * m[(i, j)]);
    let pm = sw.matrix();
    let mpn = &m * &pm * &nn;
    let f = CVector::from_fn(n, |i, _| mpn[(i, i)]);
    let constant = (mpn * pm.transpose()).trace().re;
    (st, f, constant)
}

/// Minimizes the relay power over `b` with `a` fixed, keeping each station's
/// noise at or below `eps_target`. `incumbent` must satisfy the caps; it is
/// returned unchanged when nothing better is found.
pub fn pnc_fix_a_step(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    a: &CVector,
    eps_target: f64,
    incumbent: &CVector,
    cfg: &SdrConfig,
) -> Result<CVector> {
    if !sw.pnc {
        return Err(Error::Config("self-interference gains require a network-coded switch".into()));
    }
    let n = sw.n();
    let caps = caps(ch, sw, np, a, eps_target)?;
    let feasible = |b: &CVector| caps.iter().zip(b.iter()).all(|(cap, bi)| cap.holds(np.gamma2, *bi));
    if caps.iter().any(|cap| cap.room < -1e-12 * (1.0 + cap.room.abs()) && np.gamma2 == 0.0)
        || !feasible(incumbent)
    {
        return Err(Error::InfeasibleNoiseCaps);
    }

    let (st, f, _) = fix_a_quadratic(ch, sw, np, a);
    let omega = |b: &CVector| -> f64 { numerics::hermitian_quad(&st, b) + 2.0 * f.dotc(b).re };

    let mut obj = CMatrix::zeros(n + 1, n + 1);
    obj.view_mut((0, 0), (n, n)).copy_from(&st);
    for i in 0..n {
        obj[(i, n)] = f[i];
        obj[(n, i)] = f[i].conj();
    }
    let mut problem = SdpProblem::new(numerics::hermitian_part(&obj)).equal(diagonal_selector(n + 1, n), 1.0);
    if np.gamma2 > 0.0 {
        for (i, cap) in caps.iter().enumerate() {
            let mut ci = CMatrix::zeros(n + 1, n + 1);
            ci[(i, i)] = c(cap.w_ii, 0.0);
            ci[(n, i)] = cap.w_is;
            ci[(i, n)] = cap.w_is.conj();
            problem = problem.at_most(ci, cap.room / np.gamma2 - cap.w_ss);
        }
    }
    let sol = match sdp::solve_with(&problem, &cfg.sdp).and_then(|s| s.into_optimal()) {
        Ok(sol) => sol,
        Err(_) => return Ok(incumbent.clone()),
    };

    let dehomogenize = |v: &CVector| -> Option<CVector> {
        let t = v[n];
        (t.norm() > 1e-12 * v.norm()).then(|| CVector::from_fn(n, |i, _| v[i] / t))
    };
    // Convex caps: the segment towards the feasible incumbent re-enters the
    // feasible set; keep the farthest feasible point along it.
    let pull_back = |b: CVector| -> CVector {
        if feasible(&b) {
            return b;
        }
        let d = &b - incumbent;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if feasible(&(incumbent + &d * c(mid, 0.0))) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        incumbent + d * c(lo, 0.0)
    };

    let mut best = (omega(incumbent), incumbent.clone());
    let mut consider = |b: CVector| {
        let b = pull_back(b);
        let val = omega(&b);
        if val < best.0 {
            best = (val, b);
        }
    };
    let (v, _) = sdp::rank_one_extract(&sol.x);
    if let Some(b) = dehomogenize(&v) {
        consider(b);
    }
    let factor = psd_factor(&sol.x);
    for z in base_normals(n + 1, cfg.samples, cfg.rng_seed ^ 0x5851_f42d_4c95_7f2d) {
        if let Some(b) = dehomogenize(&(&factor * z)) {
            consider(b);
        }
    }
    Ok(best.1)
}

/// Alternates the gain and self-interference steps, accepting only
/// improvements of the worst-station noise.
pub fn pnc_maxmin_iterate(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    cfg: &IterativeConfig,
    sdr: &SdrConfig,
) -> Result<SolveOutcome> {
    if cfg.max_alternations < 1 {
        return Err(Error::Config("at least one alternation is required".into()));
    }
    let b0 = match cfg.initial_b {
        InitialB::Zero => zeros(sw.n()),
        InitialB::PhaseAligned => phase_aligned_b(ch, sw).unwrap_or_else(|_| zeros(sw.n())),
    };
    pnc_maxmin_iterate_from(ch, sw, np, cfg, sdr, &b0)
}

pub fn pnc_maxmin_iterate_from(
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    cfg: &IterativeConfig,
    sdr: &SdrConfig,
    b0: &CVector,
) -> Result<SolveOutcome> {
    let mut current = pnc_fix_b_step(ch, sw, np, b0, sdr)?;
    let mut history = vec![current.worst_epsilon()];
    let mut sdp_solves = current.diagnostics.sdp_solves;
    let mut alternations = 0;
    while alternations < cfg.max_alternations {
        alternations += 1;
        let eps = current.worst_epsilon();
        let b = match pnc_fix_a_step(ch, sw, np, &current.design.a, eps, &current.design.b, sdr) {
            Ok(b) => b,
            Err(_) => break,
        };
        sdp_solves += 1;
        let next = match maxmin_with_b(ch, sw, np, &b, sdr, Some(&current)) {
            Ok(next) => next,
            Err(_) => break,
        };
        sdp_solves += next.diagnostics.sdp_solves;
        let improvement = eps - next.worst_epsilon();
        if !(improvement > 0.0) {
            break;
        }
        current = next;
        history.push(current.worst_epsilon());
        if improvement <= cfg.tolerance * (1.0 + current.worst_epsilon()) {
            break;
        }
    }
    current.diagnostics.iterations = alternations;
    current.diagnostics.sdp_solves = sdp_solves;
    current.diagnostics.eps_history = history;
    Ok(current)
}
