//! Monte Carlo SNR sweeps over Rayleigh channels, the scalar-gain baseline,
//! and table assembly.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eqsnr::{
    closed_form_two_station, default_b_grid, opposite_phase, pnc_identical_b, pnc_phase_aligned, random_phase,
    PhaseSearchConfig,
};
use crate::error::{Error, Result};
use crate::maxmin::{
    maxmin_exhaustive_2, maxmin_solve, pnc_maxmin_iterate, sdr_upper_bound, ExhaustiveGrid, IterativeConfig,
    SdrConfig,
};
use crate::model::{
    relay_power, sample_channel, zeros, ChannelRealization, Diagnostics, NoiseParams, Pattern, SolveOutcome,
    SwitchSpec,
};
use crate::numerics::{c, CVector};

/// Every solver the sweep can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `A = βI`, no per-station weighting.
    Basic,
    OppositePhase,
    ClosedForm,
    RandomPhase,
    PncPhaseAligned,
    PncIdenticalB,
    MaxminSdr,
    MaxminExhaustive,
    /// Relaxation bound, not an achievable design.
    SdrUpper,
    PncMaxminSdr,
}

impl Scheme {
    pub const ALL: [Scheme; 10] = [
        Scheme::Basic,
        Scheme::OppositePhase,
        Scheme::ClosedForm,
        Scheme::RandomPhase,
        Scheme::PncPhaseAligned,
        Scheme::PncIdenticalB,
        Scheme::MaxminSdr,
        Scheme::MaxminExhaustive,
        Scheme::SdrUpper,
        Scheme::PncMaxminSdr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Basic => "basic",
            Scheme::OppositePhase => "opposite_phase",
            Scheme::ClosedForm => "closed_form",
            Scheme::RandomPhase => "random_phase",
            Scheme::PncPhaseAligned => "pnc_phase_aligned",
            Scheme::PncIdenticalB => "pnc_identical_b",
            Scheme::MaxminSdr => "maxmin_sdr",
            Scheme::MaxminExhaustive => "maxmin_exhaustive",
            Scheme::SdrUpper => "sdr_upper",
            Scheme::PncMaxminSdr => "pnc_maxmin_sdr",
        }
    }

    pub fn pnc(self) -> bool {
        matches!(self, Scheme::PncPhaseAligned | Scheme::PncIdenticalB | Scheme::PncMaxminSdr)
    }

    /// Schemes whose cost is dominated by semidefinite programs.
    pub fn uses_sdp(self) -> bool {
        matches!(self, Scheme::MaxminSdr | Scheme::SdrUpper | Scheme::PncMaxminSdr)
    }

    /// Equal-noise solvers: every station sees the same SNR.
    pub fn equal_snr(self) -> bool {
        matches!(
            self,
            Scheme::OppositePhase
                | Scheme::ClosedForm
                | Scheme::RandomPhase
                | Scheme::PncPhaseAligned
                | Scheme::PncIdenticalB
        )
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown scheme {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub pattern: Pattern,
    pub snr_points_db: Vec<f64>,
    /// Realizations per SNR point.
    pub channels: usize,
    /// Realizations for SDP-based schemes, taken as a prefix of the shared
    /// channel set. `None` uses `channels`.
    pub sdp_channels: Option<usize>,
    pub schemes: Vec<Scheme>,
    pub master_seed: u64,
    pub phase: PhaseSearchConfig,
    pub b_grid: Vec<f64>,
    pub sdr: SdrConfig,
    pub iterative: IterativeConfig,
    pub exhaustive: ExhaustiveGrid,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 2,
            pattern: Pattern::PairwiseSymmetric,
            snr_points_db: vec![0.0, 10.0, 20.0, 30.0],
            channels: 1000,
            sdp_channels: None,
            schemes: vec![Scheme::OppositePhase],
            master_seed: 1,
            phase: PhaseSearchConfig::default(),
            b_grid: default_b_grid(),
            sdr: SdrConfig::default(),
            iterative: IterativeConfig::default(),
            exhaustive: ExhaustiveGrid::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("need at least 2 stations, got {}", self.n)));
        }
        if self.channels < 1 || self.sdp_channels == Some(0) {
            return Err(Error::Config("channel count must be at least 1".into()));
        }
        if self.snr_points_db.is_empty() || self.snr_points_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR points must be finite and non-empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        self.phase.validate()?;
        self.sdr.validate()?;
        SwitchSpec::from_pattern(self.pattern, self.n, false)?;
        Ok(())
    }

    fn channels_for(&self, scheme: Scheme) -> usize {
        match self.sdp_channels {
            Some(k) if scheme.uses_sdp() => k.min(self.channels),
            _ => self.channels,
        }
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Rejects scheme and pattern combinations that would fail on every
/// channel, before any work is done.
pub fn check_schemes(cfg: &SimConfig) -> Result<()> {
    let sw = SwitchSpec::from_pattern(cfg.pattern, cfg.n, false)?;
    for &scheme in &cfg.schemes {
        let ok = match scheme {
            Scheme::OppositePhase | Scheme::PncPhaseAligned => sw.require_pairs().map(|_| ()),
            Scheme::ClosedForm | Scheme::MaxminExhaustive if cfg.n != 2 => Err(Error::TwoStationsRequired(cfg.n)),
            _ => Ok(()),
        };
        ok.map_err(|e| Error::Config(format!("{scheme}: {e}")))?;
    }
    Ok(())
}

/// Mixes seed components with the SplitMix64 finalizer.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for &p in parts {
        h = h.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

const CHANNEL_STREAM: u64 = 0;
const SCHEME_STREAM: u64 = 1;

pub fn channel_seed(master: u64, index: usize) -> u64 {
    derive_seed(&[master, CHANNEL_STREAM, index as u64])
}

pub fn scheme_seed(master: u64, scheme: Scheme, snr_index: usize, channel: usize) -> u64 {
    derive_seed(&[master, SCHEME_STREAM, scheme as u64, snr_index as u64, channel as u64])
}

/// Scalar gain `A = βI` with `β` chosen so that the relay spends exactly `p`.
pub fn basic_scheme(ch: &ChannelRealization, sw: &SwitchSpec, np: &NoiseParams) -> Result<SolveOutcome> {
    np.validate()?;
    let n = sw.n();
    let ones = CVector::from_element(n, c(1.0, 0.0));
    let b = zeros(n);
    let unit = relay_power(ch, sw, np, &ones, &b);
    if !(unit > 0.0 && unit.is_finite()) {
        return Err(Error::Config(format!("relay power kernel is degenerate ({unit})")));
    }
    let beta = (np.p / unit).sqrt();
    SolveOutcome::evaluate(ch, &sw.with_pnc(false), np, ones * c(beta, 0.0), b, Diagnostics::default())
}

/// A designed relay, or a throughput bound for schemes that only bound.
#[derive(Debug, Clone)]
pub enum SchemeOutcome {
    Design(SolveOutcome),
    Bound(f64),
}

impl SchemeOutcome {
    pub fn sample(&self) -> SchemeSample {
        match self {
            SchemeOutcome::Design(out) => SchemeSample {
                worst: out.worst_throughput(),
                mean: out.throughput.iter().sum::<f64>() / out.throughput.len() as f64,
            },
            SchemeOutcome::Bound(t) => SchemeSample { worst: *t, mean: *t },
        }
    }
}

/// Runs one scheme on one channel; `seed` drives any randomization.
pub fn solve_scheme(
    scheme: Scheme,
    ch: &ChannelRealization,
    sw: &SwitchSpec,
    np: &NoiseParams,
    cfg: &SimConfig,
    seed: u64,
) -> Result<SchemeOutcome> {
    let sw = sw.with_pnc(scheme.pnc());
    let sdr = SdrConfig {
        rng_seed: seed,
        ..cfg.sdr
    };
    let phase = PhaseSearchConfig {
        rng_seed: seed,
        ..cfg.phase
    };
    let outcome = match scheme {
        Scheme::Basic => basic_scheme(ch, &sw, np)?,
        Scheme::OppositePhase => opposite_phase(ch, &sw, np)?,
        Scheme::ClosedForm => closed_form_two_station(ch, &sw, np)?,
        Scheme::RandomPhase => random_phase(ch, &sw, np, &phase)?,
        Scheme::PncPhaseAligned => pnc_phase_aligned(ch, &sw, np)?,
        Scheme::PncIdenticalB => pnc_identical_b(ch, &sw, np, &phase, &cfg.b_grid)?,
        Scheme::MaxminSdr => maxmin_solve(ch, &sw, np, &sdr)?,
        Scheme::MaxminExhaustive => maxmin_exhaustive_2(ch, &sw, np, &cfg.exhaustive)?,
        Scheme::PncMaxminSdr => pnc_maxmin_iterate(ch, &sw, np, &cfg.iterative, &sdr)?,
        Scheme::SdrUpper => return Ok(SchemeOutcome::Bound(sdr_upper_bound(ch, &sw, np, &sdr)?)),
    };
    Ok(SchemeOutcome::Design(outcome))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSample {
    pub worst: f64,
    /// Throughput averaged over stations.
    pub mean: f64,
}

/// Aggregate for one scheme at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub scheme: Scheme,
    pub snr_db: f64,
    /// Mean worst-station throughput.
    pub mean_tput: f64,
    pub stderr: f64,
    /// Mean over channels of the station-averaged throughput; equals
    /// `mean_tput` for equal-SNR schemes.
    pub mean_station_tput: f64,
    /// Channels that contributed.
    pub channels: usize,
    /// Draws discarded by the channel condition cap.
    pub rejected: usize,
    /// Channels on which the solver failed; excluded from the means.
    pub failed: usize,
    /// `(channel index, worst-station throughput)` per contributing channel.
    #[serde(skip)]
    pub samples: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub config_hash: String,
    pub master_seed: u64,
    pub points: Vec<PointResult>,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Runs every scheme on a shared channel set per SNR point. Results are
/// deterministic in the master seed regardless of thread count.
pub fn run_sweep(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let sw = SwitchSpec::from_pattern(cfg.pattern, cfg.n, false)?;
    let channels: Vec<Result<ChannelRealization>> = (0..cfg.channels)
        .into_par_iter()
        .map(|k| sample_channel(cfg.n, channel_seed(cfg.master_seed, k)))
        .collect();
    let mut points = Vec::new();
    for (si, &snr) in cfg.snr_points_db.iter().enumerate() {
        let np = NoiseParams::from_snr_db(snr);
        for &scheme in &cfg.schemes {
            let count = cfg.channels_for(scheme);
            let per_channel: Vec<(usize, usize, Result<SchemeSample>)> = channels[..count]
                .par_iter()
                .enumerate()
                .map(|(k, ch)| match ch {
                    Ok(ch) => {
                        let seed = scheme_seed(cfg.master_seed, scheme, si, k);
                        (k, ch.rejections(), solve_scheme(scheme, ch, &sw, &np, cfg, seed).map(|o| o.sample()))
                    }
                    Err(e) => (k, 0, Err(e.clone())),
                })
                .collect();
            let mut samples = Vec::with_capacity(count);
            let mut station = Vec::with_capacity(count);
            let mut rejected = 0;
            let mut failed = 0;
            for (k, rej, r) in per_channel {
                rejected += rej;
                match r {
                    Ok(s) if s.worst.is_finite() => {
                        samples.push((k, s.worst));
                        station.push(s.mean);
                    }
                    Ok(s) => {
                        failed += 1;
                        log::warn!("{scheme} at {snr} dB, channel {k}: non-finite throughput {}", s.worst);
                    }
                    Err(e) => {
                        failed += 1;
                        log::warn!("{scheme} at {snr} dB, channel {k}: {e}");
                    }
                }
            }
            let worst: Vec<f64> = samples.iter().map(|s| s.1).collect();
            let (mean_tput, stderr) = mean_and_stderr(&worst);
            let (mean_station_tput, _) = mean_and_stderr(&station);
            points.push(PointResult {
                scheme,
                snr_db: snr,
                mean_tput,
                stderr,
                mean_station_tput,
                channels: samples.len(),
                rejected,
                failed,
                samples,
            });
        }
    }
    Ok(SimResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        points,
    })
}

impl SimResult {
    pub fn point(&self, scheme: Scheme, snr_db: f64) -> Option<&PointResult> {
        self.points.iter().find(|p| p.scheme == scheme && p.snr_db == snr_db)
    }

    fn require(&self, scheme: Scheme, snr_db: f64) -> Result<&PointResult> {
        self.point(scheme, snr_db)
            .ok_or_else(|| Error::MissingScheme(format!("{scheme} at {snr_db} dB")))
    }

    /// Mean and standard error of `comparison − baseline` over channels where
    /// both succeeded.
    pub fn paired_difference(&self, baseline: Scheme, comparison: Scheme, snr_db: f64) -> Result<(f64, f64)> {
        let base = self.require(baseline, snr_db)?;
        let cmp = self.require(comparison, snr_db)?;
        let lookup: std::collections::HashMap<usize, f64> = base.samples.iter().cloned().collect();
        let diffs: Vec<f64> = cmp
            .samples
            .iter()
            .filter_map(|(k, v)| lookup.get(k).map(|b| v - b))
            .collect();
        if diffs.is_empty() {
            return Err(Error::MissingScheme(format!("no shared channels for {baseline} and {comparison}")));
        }
        Ok(mean_and_stderr(&diffs))
    }

    /// Percentage gap of `comparison` over `baseline`, restricted to the
    /// channels both were evaluated on. Results read back from JSON carry no
    /// per-channel samples and fall back to the stored means.
    pub fn paired_gap(&self, baseline: Scheme, comparison: Scheme, snr_db: f64) -> Result<f64> {
        let base = self.require(baseline, snr_db)?;
        let cmp = self.require(comparison, snr_db)?;
        if base.samples.is_empty() && cmp.samples.is_empty() {
            return Ok(gap_percent(base.mean_tput, cmp.mean_tput));
        }
        let lookup: std::collections::HashMap<usize, f64> = base.samples.iter().cloned().collect();
        let (mut sb, mut sc, mut k) = (0.0, 0.0, 0usize);
        for (i, v) in &cmp.samples {
            if let Some(b) = lookup.get(i) {
                sb += b;
                sc += v;
                k += 1;
            }
        }
        if k == 0 {
            return Err(Error::MissingScheme(format!("no shared channels for {baseline} and {comparison}")));
        }
        Ok(gap_percent(sb, sc))
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scheme", "snr_db", "mean_tput", "stderr", "channels", "rejected"])?;
        for p in &self.points {
            w.write_record([
                p.scheme.name().to_string(),
                p.snr_db.to_string(),
                format!("{:.6}", p.mean_tput),
                format!("{:.6}", p.stderr),
                p.channels.to_string(),
                p.rejected.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn save(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(csv_path)?)?;
        self.write_json(std::fs::File::create(json_path)?)?;
        Ok(())
    }
}

/// `Δ = (comparison − baseline)/baseline · 100` per SNR point.
pub fn gap_table(result: &SimResult, baseline: Scheme, comparison: Scheme) -> Result<Vec<(f64, f64)>> {
    result
        .config
        .snr_points_db
        .iter()
        .map(|&snr| {
            Ok((snr, result.paired_gap(baseline, comparison, snr)?))
        })
        .collect()
}

pub fn gap_percent(baseline: f64, comparison: f64) -> f64 {
    (comparison - baseline) / baseline * 100.0
}

/// The two table layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// Two stations; the maxmin reference is the exhaustive search.
    TwoStation,
    /// Four stations; the maxmin reference is the relaxation bound.
    FourStation,
}

impl TableKind {
    pub fn n(self) -> usize {
        match self {
            TableKind::TwoStation => 2,
            TableKind::FourStation => 4,
        }
    }

    pub fn reference(self) -> Scheme {
        match self {
            TableKind::TwoStation => Scheme::MaxminExhaustive,
            TableKind::FourStation => Scheme::SdrUpper,
        }
    }

    pub fn schemes(self) -> Vec<Scheme> {
        vec![
            Scheme::OppositePhase,
            self.reference(),
            Scheme::MaxminSdr,
            Scheme::PncPhaseAligned,
            Scheme::PncMaxminSdr,
        ]
    }

    /// Sweep configuration with the default realization counts.
    pub fn config(self, master_seed: u64) -> SimConfig {
        let (channels, sdp_channels) = match self {
            TableKind::TwoStation => (20_000, 2_000),
            TableKind::FourStation => (2_000, 2_000),
        };
        SimConfig {
            n: self.n(),
            pattern: Pattern::PairwiseSymmetric,
            channels,
            sdp_channels: Some(sdp_channels),
            schemes: self.schemes(),
            master_seed,
            ..SimConfig::default()
        }
    }
}

/// One table row: non-network-coded columns, then network-coded ones.
/// Each Δ is relative to the equal-SNR column of its group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub snr_db: f64,
    pub opposite_phase: f64,
    pub maxmin_reference: f64,
    pub maxmin_reference_delta_pct: f64,
    pub maxmin_sdr: f64,
    pub maxmin_sdr_delta_pct: f64,
    pub pnc_phase_aligned: f64,
    pub pnc_sdr: f64,
    pub pnc_sdr_delta_pct: f64,
}

pub fn build_table(result: &SimResult, kind: TableKind) -> Result<Vec<TableRow>> {
    result
        .config
        .snr_points_db
        .iter()
        .map(|&snr| {
            let get = |s: Scheme| result.require(s, snr).map(|p| p.mean_tput);
            let op = get(Scheme::OppositePhase)?;
            let reference = get(kind.reference())?;
            let sdr = get(Scheme::MaxminSdr)?;
            let pa = get(Scheme::PncPhaseAligned)?;
            let pnc_sdr = get(Scheme::PncMaxminSdr)?;
            Ok(TableRow {
                snr_db: snr,
                opposite_phase: op,
                maxmin_reference: reference,
                maxmin_reference_delta_pct: result.paired_gap(Scheme::OppositePhase, kind.reference(), snr)?,
                maxmin_sdr: sdr,
                maxmin_sdr_delta_pct: result.paired_gap(Scheme::OppositePhase, Scheme::MaxminSdr, snr)?,
                pnc_phase_aligned: pa,
                pnc_sdr,
                pnc_sdr_delta_pct: result.paired_gap(Scheme::PncPhaseAligned, Scheme::PncMaxminSdr, snr)?,
            })
        })
        .collect()
}

pub fn write_table_csv(rows: &[TableRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::CMatrix;
    use proptest::prelude::*;

    fn small(schemes: Vec<Scheme>) -> SimConfig {
        SimConfig {
            channels: 40,
            snr_points_db: vec![0.0, 15.0, 30.0],
            schemes,
            sdr: SdrConfig {
                samples: 100,
                ..SdrConfig::default()
            },
            ..SimConfig::default()
        }
    }

    #[test]
    fn basic_scheme_identity_channel() {
        let ch = ChannelRealization::new(CMatrix::identity(2, 2)).unwrap();
        let np = NoiseParams::new(0.1, 0.1, 1.0).unwrap();
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        let out = basic_scheme(&ch, &sw, &np).unwrap();
        assert!((out.design.a[0].norm_sqr() - 1.0 / 2.2).abs() < 1e-12);
        assert!((out.worst_epsilon() - 0.32).abs() < 1e-12);
    }

    #[test]
    fn basic_scheme_spends_budget() {
        for (n, seed) in [(3, 0), (4, 1), (5, 2)] {
            let ch = sample_channel(n, seed).unwrap();
            let sw = SwitchSpec::non_pairwise(n, false).unwrap();
            let np = NoiseParams::from_snr_db(7.0);
            let out = basic_scheme(&ch, &sw, &np).unwrap();
            assert!((out.power_used - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = small(vec![Scheme::OppositePhase, Scheme::RandomPhase, Scheme::MaxminSdr]);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        let c = run_sweep(&SimConfig {
            master_seed: 2,
            ..cfg
        })
        .unwrap();
        assert_ne!(a.points[0].mean_tput, c.points[0].mean_tput);
    }

    #[test]
    fn single_channel_equals_solver_output() {
        let cfg = SimConfig {
            channels: 1,
            snr_points_db: vec![10.0],
            schemes: vec![Scheme::OppositePhase],
            ..SimConfig::default()
        };
        let r = run_sweep(&cfg).unwrap();
        let ch = sample_channel(2, channel_seed(cfg.master_seed, 0)).unwrap();
        let sw = SwitchSpec::pairwise(2, false).unwrap();
        let direct = opposite_phase(&ch, &sw, &NoiseParams::from_snr_db(10.0)).unwrap();
        assert_eq!(r.points[0].mean_tput, direct.worst_throughput());
        assert_eq!(r.points[0].stderr, 0.0);
    }

    #[test]
    fn paired_ordering_and_monotone_snr() {
        let cfg = SimConfig {
            n: 4,
            ..small(vec![Scheme::OppositePhase, Scheme::MaxminSdr, Scheme::SdrUpper, Scheme::Basic])
        };
        let r = run_sweep(&cfg).unwrap();
        for &snr in &cfg.snr_points_db {
            let by = |s| r.point(s, snr).unwrap();
            let (op, mm, ub) = (by(Scheme::OppositePhase), by(Scheme::MaxminSdr), by(Scheme::SdrUpper));
            for ((_, o), ((_, m), (_, u))) in op.samples.iter().zip(mm.samples.iter().zip(&ub.samples)) {
                assert!(*m >= o - 1e-9 && *u >= m - 1e-7);
            }
            assert_eq!(op.failed + mm.failed + ub.failed, 0);
        }
        for s in &cfg.schemes {
            let means: Vec<f64> = cfg.snr_points_db.iter().map(|&x| r.point(*s, x).unwrap().mean_tput).collect();
            assert!(means.windows(2).all(|w| w[1] >= w[0]), "{s}: {means:?}");
        }
    }

    #[test]
    fn stderr_shrinks_with_channel_count() {
        let base = SimConfig {
            snr_points_db: vec![10.0],
            schemes: vec![Scheme::Basic],
            ..SimConfig::default()
        };
        let few = run_sweep(&SimConfig { channels: 400, ..base.clone() }).unwrap();
        let many = run_sweep(&SimConfig { channels: 6400, ..base }).unwrap();
        let ratio = few.points[0].stderr / many.points[0].stderr;
        assert!((ratio - 4.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn gap_table_examples() {
        assert!((gap_percent(0.1270, 0.1271) - 0.0787).abs() < 1e-3);
        assert!((gap_percent(3.2906, 3.2918) - 0.0365).abs() < 1e-3);
        let r = run_sweep(&small(vec![Scheme::OppositePhase, Scheme::ClosedForm])).unwrap();
        for (_, d) in gap_table(&r, Scheme::OppositePhase, Scheme::OppositePhase).unwrap() {
            assert_eq!(d, 0.0);
        }
        assert!(matches!(
            gap_table(&r, Scheme::OppositePhase, Scheme::Basic),
            Err(Error::MissingScheme(_))
        ));
    }

    #[test]
    fn sdp_schemes_use_channel_prefix() {
        let cfg = SimConfig {
            sdp_channels: Some(5),
            snr_points_db: vec![10.0],
            ..small(vec![Scheme::OppositePhase, Scheme::MaxminSdr])
        };
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.points[0].channels, 40);
        assert_eq!(r.points[1].channels, 5);
        let (d, _) = r.paired_difference(Scheme::OppositePhase, Scheme::MaxminSdr, 10.0).unwrap();
        assert!(d >= -1e-9);
    }

    #[test]
    fn failures_are_counted_not_dropped() {
        // Opposite phase needs pairs; the cyclic pattern has none.
        let cfg = SimConfig {
            n: 4,
            pattern: Pattern::NonPairwiseAsymmetric,
            ..small(vec![Scheme::OppositePhase, Scheme::Basic])
        };
        let r = run_sweep(&cfg).unwrap();
        let op = r.point(Scheme::OppositePhase, 0.0).unwrap();
        assert_eq!((op.channels, op.failed), (0, 40));
        assert!(op.mean_tput.is_nan());
        assert_eq!(r.point(Scheme::Basic, 0.0).unwrap().failed, 0);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let r = run_sweep(&small(vec![Scheme::Basic, Scheme::PncPhaseAligned])).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scheme,snr_db,mean_tput,stderr,channels,rejected\n"));
        assert_eq!(text.lines().count(), 1 + 6);
        let mut json = Vec::new();
        r.write_json(&mut json).unwrap();
        let back: SimResult = serde_json::from_slice(&json).unwrap();
        assert_eq!(back.config_hash, r.config_hash);
        assert_eq!(back.config, r.config);
    }

    #[test]
    fn table_rows_have_fixed_columns() {
        let mut cfg = TableKind::TwoStation.config(3);
        cfg.channels = 10;
        cfg.sdp_channels = Some(4);
        cfg.sdr.samples = 50;
        let r = run_sweep(&cfg).unwrap();
        let rows = build_table(&r, TableKind::TwoStation).unwrap();
        assert_eq!(rows.len(), 4);
        let mut buf = Vec::new();
        write_table_csv(&rows, &mut buf).unwrap();
        let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        assert_eq!(header.split(',').count(), 9);
        assert!(rows.iter().all(|r| r.pnc_phase_aligned > r.opposite_phase));
    }

    #[test]
    fn scheme_preconditions() {
        let cyclic = SimConfig {
            n: 4,
            pattern: Pattern::NonPairwiseAsymmetric,
            schemes: vec![Scheme::Basic, Scheme::PncPhaseAligned],
            ..SimConfig::default()
        };
        let err = check_schemes(&cyclic).unwrap_err().to_string();
        assert!(err.contains("pnc_phase_aligned") && err.contains("pairwise"), "{err}");
        let four = SimConfig {
            n: 4,
            schemes: vec![Scheme::ClosedForm],
            ..SimConfig::default()
        };
        assert!(check_schemes(&four).is_err());
        assert!(check_schemes(&SimConfig::default()).is_ok());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("nope".parse::<Scheme>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { channels: 0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { schemes: vec![], ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { snr_points_db: vec![f64::NAN], ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
        assert_ne!(SimConfig::default().hash(), SimConfig { master_seed: 9, ..SimConfig::default() }.hash());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn derived_seeds_differ(master in any::<u64>(), a in 0usize..1000, b in 0usize..1000) {
            prop_assume!(a != b);
            prop_assert_ne!(channel_seed(master, a), channel_seed(master, b));
            prop_assert_ne!(
                scheme_seed(master, Scheme::MaxminSdr, 0, a),
                scheme_seed(master, Scheme::PncMaxminSdr, 0, a)
            );
        }
    }
}
