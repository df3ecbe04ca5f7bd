//! Randomized property suites shared by the CLI `verify` command and the
//! test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eqsnr::{
    closed_form_two_station, default_b_grid, opposite_phase, pnc_identical_b, pnc_phase_aligned, random_phase,
    solve_eps_given_phases, PhaseSearchConfig,
};
use crate::maxmin::{
    maxmin_exhaustive_2, maxmin_solve, pnc_maxmin_iterate, qcqp_min_power, sdr_upper_bound, ExhaustiveGrid,
    IterativeConfig, SdrConfig,
};
use crate::model::{self, sample_channel, switch_matrix, zeros, NoiseParams, Pattern, SolveOutcome, SwitchSpec};
use crate::numerics::{self, c, CMatrix, CVector};
use crate::sdp::{self, SdpProblem, SdpStatus};
use crate::sim::basic_scheme;

fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    numerics::hermitian_part(&random_complex(rng, n, n))
}

fn trace_product(a: &CMatrix, x: &CMatrix) -> f64 {
    (a * x).trace().re
}

/// A random problem with a strictly feasible primal point and a strictly
/// feasible dual point, `2 ≤ n ≤ max_n`.
pub fn random_feasible_sdp(seed: u64, max_n: usize) -> SdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n.max(2));
    let m = rng.random_range(1..=n + 3);
    let g = random_complex(&mut rng, n, n);
    let objective = &g * g.adjoint() + CMatrix::identity(n, n) * c(0.05, 0.0);
    let h = random_complex(&mut rng, n, n);
    let interior = &h * h.adjoint() + CMatrix::identity(n, n);
    let mut p = SdpProblem::new(objective);
    for _ in 0..m {
        let a = random_hermitian(&mut rng, n);
        let rhs = trace_product(&a, &interior);
        p = if rng.random::<bool>() {
            p.equal(a, rhs)
        } else {
            let slack = rng.random::<f64>();
            p.at_least(a, rhs - slack)
        };
    }
    p
}

/// A problem without any PSD solution, from one of several families, hidden
/// behind a random unitary change of basis.
pub fn random_infeasible_sdp(seed: u64, max_n: usize) -> SdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n.max(2));
    let g = random_complex(&mut rng, n, n);
    let objective = &g * g.adjoint();
    let psd = {
        let f = random_complex(&mut rng, n, n);
        &f * f.adjoint() + CMatrix::identity(n, n) * c(0.1, 0.0)
    };
    let mut p = SdpProblem::new(objective);
    match seed % 3 {
        // Tr(AX) = −1 with A ≻ 0.
        0 => p = p.equal(psd, -rng.random_range(0.1..2.0)),
        // Tr X = 1 together with Tr(AX) ≥ t beyond λmax(A).
        1 => {
            let lmax = numerics::hermitian_eigen(&psd).0[n - 1];
            p = p
                .equal(CMatrix::identity(n, n), 1.0)
                .at_least(psd, lmax * rng.random_range(1.2..3.0));
        }
        // Contradicting equalities on the same functional.
        _ => {
            let a = random_hermitian(&mut rng, n);
            let v = rng.random_range(0.5..2.0);
            p = p.equal(a.clone(), v).equal(a, v + rng.random_range(0.5..2.0));
        }
    }
    // Random extra feasible-looking rows.
    for _ in 0..rng.random_range(0..3) {
        let a = random_hermitian(&mut rng, n);
        p = p.at_least(a, -10.0);
    }
    let q = numerics::unitary_from(&random_complex(&mut rng, n, n));
    let rot = |m: &CMatrix| numerics::hermitian_part(&(q.adjoint() * m * &q));
    p.c = rot(&p.c);
    for con in &mut p.constraints {
        con.a = rot(&con.a);
    }
    p
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            cases: 0,
            failures: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, value: f64, detail: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = self.worst.max(value);
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

/// Duality gap and KKT residuals on random feasible problems, plus
/// detection on crafted infeasible ones.
pub fn sdp_suite(seed: u64, feasible: usize, infeasible: usize, max_n: usize) -> SuiteReport {
    let mut report = SuiteReport::new("sdp");
    for k in 0..feasible as u64 {
        let p = random_feasible_sdp(seed.wrapping_add(k), max_n);
        match sdp::solve(&p) {
            Ok(sol) => {
                let gap_rel = sol.gap.abs() / (1.0 + sol.objective.abs());
                let kkt = sol.primal_residual.max(sol.dual_residual).max(sol.complementarity);
                let ok = sol.status == SdpStatus::Optimal && gap_rel <= 1e-6 && kkt <= 1e-7;
                report.record(ok, kkt.max(gap_rel), || {
                    format!("feasible case {k}: status {:?} gap {gap_rel:.2e} kkt {kkt:.2e}", sol.status)
                });
            }
            Err(e) => report.record(false, f64::INFINITY, || format!("feasible case {k}: {e}")),
        }
    }
    for k in 0..infeasible as u64 {
        let p = random_infeasible_sdp(seed.wrapping_add(k), max_n);
        let status = sdp::solve(&p).map(|s| s.status);
        report.record(status == Ok(SdpStatus::Infeasible), 0.0, || {
            format!("infeasible case {k}: {status:?}")
        });
    }
    report
}

/// Hermitian-PSD checks on `W` and the power kernel `S` for random channels.
/// `corrupt` injects an asymmetric perturbation into `S` so that the suite
/// can demonstrate that it detects broken kernels.
pub fn psd_suite(seed: u64, channels: usize, n: usize, corrupt: bool) -> SuiteReport {
    let mut report = SuiteReport::new("psd");
    let np = NoiseParams::from_snr_db(10.0);
    for k in 0..channels as u64 {
        let outcome = (|| -> crate::Result<f64> {
            let ch = sample_channel(n, seed.wrapping_add(k))?;
            let sw = SwitchSpec::pairwise(n, false)?;
            let mut s = model::compute_s(&ch, &sw, &np)?;
            if corrupt {
                s[(0, 1)] += c(0.5, 0.25);
            }
            let w = numerics::psd_check(ch.w())?;
            let s = numerics::psd_check(&s)?;
            if w.is_psd && s.is_psd {
                Ok(w.min_eigenvalue.min(s.min_eigenvalue))
            } else {
                Err(crate::Error::Dimension("negative eigenvalue".into()))
            }
        })();
        match outcome {
            Ok(v) => report.record(true, -v.min(0.0), String::new),
            Err(e) => report.record(false, f64::INFINITY, || format!("channel {k}: {e}")),
        }
    }
    report
}

fn random_gains(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| c(rng.random::<f64>() + 0.1, 0.0) * c(0.0, rng.random::<f64>() * 6.3).exp())
}

/// `‖HᵀGH − A(P+B)‖_F / ‖A(P+B)‖_F` for random designs over both station
/// counts, both patterns and both relaying modes.
pub fn precoder_suite(seed: u64, channels: usize) -> SuiteReport {
    let mut report = SuiteReport::new("precoder identity");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..channels {
        let n = if k % 2 == 0 { 2 } else { 4 };
        let pattern = if n > 2 && k % 4 == 3 { Pattern::NonPairwiseAsymmetric } else { Pattern::PairwiseSymmetric };
        let pnc = (k / 2) % 2 == 1;
        let outcome = (|| -> crate::Result<f64> {
            let ch = sample_channel(n, seed.wrapping_add(k as u64))?;
            let sw = SwitchSpec::from_pattern(pattern, n, pnc)?;
            let a = random_gains(&mut rng, n);
            let b = if pnc { random_gains(&mut rng, n) } else { zeros(n) };
            let g = model::assemble_precoder(&ch, &sw, &a, &b)?;
            let target = CMatrix::from_diagonal(&a) * switch_matrix(&sw, &b);
            let h = ch.h();
            Ok((h.transpose() * g * h - &target).norm() / target.norm())
        })();
        match outcome {
            Ok(err) => report.record(err <= 1e-9, err, || format!("channel {k}: relative error {err:.3e}")),
            Err(e) => report.record(false, f64::INFINITY, || format!("channel {k}: {e}")),
        }
    }
    report
}

type Solver<'a> = (&'a str, Box<dyn Fn(&model::ChannelRealization, &NoiseParams) -> crate::Result<SolveOutcome> + 'a>);

fn solvers<'a>(n: usize, sdr: &'a SdrConfig, phase: &'a PhaseSearchConfig) -> Vec<Solver<'a>> {
    let zf = SwitchSpec::pairwise(n, false).expect("even station count");
    let nc = zf.with_pnc(true);
    let mut list: Vec<Solver<'a>> = vec![
        ("basic", Box::new({ let sw = zf.clone(); move |ch, np| basic_scheme(ch, &sw, np) })),
        ("opposite_phase", Box::new({ let sw = zf.clone(); move |ch, np| opposite_phase(ch, &sw, np) })),
        ("random_phase", Box::new({ let sw = zf.clone(); move |ch, np| random_phase(ch, &sw, np, phase) })),
        ("pnc_phase_aligned", Box::new({ let sw = nc.clone(); move |ch, np| pnc_phase_aligned(ch, &sw, np) })),
        ("pnc_identical_b", Box::new({
            let sw = nc.clone();
            let grid = default_b_grid();
            move |ch, np| pnc_identical_b(ch, &sw, np, phase, &grid)
        })),
        ("maxmin_sdr", Box::new({ let sw = zf.clone(); move |ch, np| maxmin_solve(ch, &sw, np, sdr) })),
        ("pnc_maxmin_sdr", Box::new({
            let sw = nc.clone();
            move |ch, np| pnc_maxmin_iterate(ch, &sw, np, &IterativeConfig::default(), sdr)
        })),
    ];
    if n == 2 {
        list.push(("closed_form", Box::new({ let sw = zf.clone(); move |ch, np| closed_form_two_station(ch, &sw, np) })));
        list.push(("maxmin_exhaustive", Box::new({
            let sw = zf.clone();
            move |ch, np| maxmin_exhaustive_2(ch, &sw, np, &ExhaustiveGrid::default())
        })));
    }
    list
}

fn solver_names() -> [&'static str; 9] {
    [
        "basic",
        "opposite_phase",
        "random_phase",
        "pnc_phase_aligned",
        "pnc_identical_b",
        "maxmin_sdr",
        "pnc_maxmin_sdr",
        "closed_form",
        "maxmin_exhaustive",
    ]
}

fn instance(seed: u64, k: usize) -> (usize, NoiseParams, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
    let n = if k % 2 == 0 { 2 } else { 4 };
    (n, NoiseParams::from_snr_db(rng.random_range(-5.0..35.0)), rng.random())
}

/// Every solver spends exactly the relay budget, and the equal-noise solvers
/// equalize the station noise. One report per solver.
pub fn power_suite(seed: u64, instances: usize, sdr: &SdrConfig) -> Vec<SuiteReport> {
    let phase = PhaseSearchConfig::default();
    let mut reports: Vec<SuiteReport> =
        solver_names().iter().map(|name| SuiteReport::new(&format!("power equality: {name}"))).collect();
    let mut spread = SuiteReport::new("equal-SNR spread");
    for k in 0..instances {
        let (n, np, ch_seed) = instance(seed, k);
        let ch = match sample_channel(n, ch_seed) {
            Ok(ch) => ch,
            Err(e) => {
                reports[0].record(false, f64::INFINITY, || format!("instance {k}: {e}"));
                continue;
            }
        };
        for (name, solve) in solvers(n, sdr, &phase) {
            let idx = solver_names().iter().position(|s| *s == name).expect("listed solver");
            match solve(&ch, &np) {
                Ok(out) => {
                    let rel = (out.power_used - np.p).abs() / np.p;
                    reports[idx].record(rel <= 1e-6, rel, || format!("instance {k}: power off by {rel:.3e}"));
                    if matches!(name, "opposite_phase" | "random_phase" | "pnc_phase_aligned" | "pnc_identical_b" | "closed_form") {
                        let r = out.epsilon_spread() / out.mean_epsilon();
                        spread.record(r <= 1e-8, r, || format!("{name} instance {k}: spread {r:.3e}"));
                    }
                }
                Err(e) => reports[idx].record(false, f64::INFINITY, || format!("instance {k}: {e}")),
            }
        }
    }
    reports.push(spread);
    reports
}

/// Relaxation value below every rounded power, and the relaxation bound above
/// every achieved zero-forcing throughput.
pub fn relaxation_suite(seed: u64, instances: usize, sdr: &SdrConfig) -> SuiteReport {
    let mut report = SuiteReport::new("relaxation ordering");
    for k in 0..instances {
        let (n, np, ch_seed) = instance(seed.wrapping_add(0x51), k);
        let outcome = (|| -> crate::Result<f64> {
            let ch = sample_channel(n, ch_seed)?;
            let sw = SwitchSpec::pairwise(n, false)?;
            let mm = maxmin_solve(&ch, &sw, &np, sdr)?;
            let lb = mm.diagnostics.sdp_lower_bound.unwrap_or(f64::NAN);
            let q = model::compute_q(&ch, &sw, &np)?;
            let q: Vec<f64> = (0..n).map(|i| q[(i, i)].re).collect();
            let s = model::compute_s(&ch, &sw, &np)?;
            let probe = qcqp_min_power(&np, mm.worst_epsilon(), &q, &s, sdr)?;
            let bound = sdr_upper_bound(&ch, &sw, &np, sdr)?;
            let achieved = [
                mm.worst_throughput(),
                opposite_phase(&ch, &sw, &np)?.worst_throughput(),
                basic_scheme(&ch, &sw, &np)?.worst_throughput(),
            ];
            let worst = achieved.iter().map(|t| t - bound).fold(f64::MIN, f64::max);
            Ok(worst.max(lb - np.p).max(probe.sdp_lower_bound - probe.power))
        })();
        match outcome {
            Ok(v) => report.record(v <= 1e-7, v.max(0.0), || format!("instance {k}: violation {v:.3e}")),
            Err(e) => report.record(false, f64::INFINITY, || format!("instance {k}: {e}")),
        }
    }
    report
}

/// Two-station closed form against a `grid × grid` phase search.
pub fn quartic_suite(seed: u64, channels: usize, snrs: &[f64], grid: usize) -> SuiteReport {
    let mut report = SuiteReport::new("two-station closed form vs phase grid");
    let sw = SwitchSpec::pairwise(2, false).expect("two stations pair up");
    let step = std::f64::consts::TAU / grid as f64;
    for k in 0..channels {
        for &snr in snrs {
            let np = NoiseParams::from_snr_db(snr);
            let outcome = (|| -> crate::Result<f64> {
                let ch = sample_channel(2, seed.wrapping_add(k as u64))?;
                let closed = closed_form_two_station(&ch, &sw, &np)?.worst_epsilon();
                let mut best = f64::INFINITY;
                for i in 0..grid {
                    for j in 0..grid {
                        let phases = [i as f64 * step, j as f64 * step];
                        if let Ok(o) = solve_eps_given_phases(&ch, &sw, &np, &phases, &zeros(2)) {
                            best = best.min(o.worst_epsilon());
                        }
                    }
                }
                Ok((closed - best) / best)
            })();
            match outcome {
                Ok(r) => report.record(r <= 5e-3, r.max(0.0), || format!("channel {k} at {snr} dB: {r:.3e} above grid")),
                Err(e) => report.record(false, f64::INFINITY, || format!("channel {k} at {snr} dB: {e}")),
            }
        }
    }
    report
}

/// Knobs for [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyPlan {
    pub seed: u64,
    pub instances: usize,
    pub sdp_problems: usize,
    /// Corrupts the power kernel in the PSD suite.
    pub inject_fault: bool,
}

impl Default for VerifyPlan {
    fn default() -> Self {
        Self {
            seed: 1,
            instances: 20,
            sdp_problems: 60,
            inject_fault: false,
        }
    }
}

pub fn run_all(plan: &VerifyPlan) -> Vec<SuiteReport> {
    let sdr = SdrConfig {
        samples: 200,
        rng_seed: plan.seed,
        ..SdrConfig::default()
    };
    let mut out = vec![
        precoder_suite(plan.seed, 10 * plan.instances),
        psd_suite(plan.seed, plan.instances, 4, plan.inject_fault),
        sdp_suite(plan.seed, plan.sdp_problems, plan.sdp_problems / 5, 8),
        quartic_suite(plan.seed, plan.instances.div_ceil(4), &[0.0, 10.0, 20.0], 64),
        relaxation_suite(plan.seed, plan.instances, &sdr),
    ];
    out.extend(power_suite(plan.seed, plan.instances, &sdr));
    out
}
