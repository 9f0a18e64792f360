//! Channel experiments, calibration, detection curves and CHSH triage.

use std::time::Instant;

use qsdc_core::adversary::{AttackStrategy, Eve};
use qsdc_core::noise::{noisy_bell_readout, transmit, ErrorMix, NoiseModel};
use qsdc_core::protocol::{
    chsh_threshold_check, decode_bell_to_bits, encode_two_bits, estimate_chsh, run_protocol, sample_check_pairs,
    ProtocolConfig, Status, TwoBits,
};
use qsdc_core::qcore::{new_bell_pair, StateVector};
use qsdc_core::stats::{binomial_standard_error, mean_and_standard_error, spearman, Spearman};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::table::{opt, Provenance, Table};
use crate::{seeds::trial_seed, with_workers, XlabError};

pub const DEFAULT_SHOTS: usize = 1024;

fn shot<R: rand::Rng>(bits: TwoBits, noise: &NoiseModel, rng: &mut R) -> TwoBits {
    let mut s = new_bell_pair();
    let ok = s
        .apply_pauli(0, encode_two_bits(bits))
        .and_then(|_| transmit(&mut s, 0, noise, rng))
        .and_then(|_| s.bell_measurement(0, 1, rng));
    let bell = ok.expect("two-qubit register supports every operation");
    decode_bell_to_bits(noisy_bell_readout(bell, noise, rng))
}

/// Single-pair encode, transmit, Bell-measure and decode, `shots` times.
/// Counts are indexed by the decoded value `00, 01, 10, 11`.
pub fn histogram_message(bits: TwoBits, noise: &NoiseModel, shots: usize, seed: u64) -> [u64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        counts[shot(bits, noise, &mut rng).value() as usize] += 1;
    }
    counts
}

pub const HISTOGRAM_COLUMNS: [&str; 9] = [
    "message", "eta", "shots", "count_00", "count_01", "count_10", "count_11", "fidelity", "expected_fidelity",
];

/// Histograms for each message in `messages`, one row per message.
pub fn histogram_table(messages: &[TwoBits], noise: &NoiseModel, shots: usize, seed: u64) -> Result<Table, XlabError> {
    let prov = Provenance::new(
        &json!({"experiment": "histogram", "messages": messages.iter().map(|m| m.to_string()).collect::<Vec<_>>(), "noise": noise, "shots": shots}),
        seed,
        noise,
    )?;
    let mut table = Table::new(&HISTOGRAM_COLUMNS);
    for (i, &m) in messages.iter().enumerate() {
        let counts = histogram_message(m, noise, shots, trial_seed(seed, m.value() as u64 + 4 * i as u64));
        let mut row: Vec<Value> = vec![m.to_string().into(), noise.eta.into(), shots.into()];
        row.extend(counts.iter().map(|&c| Value::from(c)));
        row.push((counts[m.value() as usize] as f64 / shots as f64).into());
        row.push(noise.expected_symbol_accuracy().into());
        table.push(&prov, row);
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: u32,
    pub time_ns: f64,
    pub trials: usize,
    pub accuracy: f64,
    pub accuracy_se: f64,
    pub expected_accuracy: f64,
    pub abort_rate: Option<f64>,
    pub mean_s1: Option<f64>,
    pub mean_s2: Option<f64>,
    /// Seconds spent on this point; informational, never written to tables.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Rank correlation of accuracy with `eta`.
    pub trend: Option<Spearman>,
}

/// Optional full protocol runs at each sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepProtocol {
    pub config: ProtocolConfig,
    pub trials: usize,
}

fn sweep_point(eta: u32, noise: &NoiseModel, shots: usize, protocol: Option<&SweepProtocol>, seed: u64) -> SweepRow {
    let start = Instant::now();
    let noise = noise.with_eta(eta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let correct = (0..shots)
        .filter(|&i| {
            let bits = TwoBits::from_value((i % 4) as u8).expect("value below 4");
            shot(bits, &noise, &mut rng) == bits
        })
        .count();
    let accuracy = correct as f64 / shots as f64;

    let (mut abort_rate, mut mean_s1, mut mean_s2) = (None, None, None);
    if let Some(p) = protocol.filter(|p| p.trials > 0) {
        let (mut aborts, mut s1, mut s2) = (0, Vec::new(), Vec::new());
        for t in 0..p.trials {
            let cfg = ProtocolConfig {
                noise: noise.clone(),
                seed: trial_seed(seed, t as u64),
                ..p.config.clone()
            };
            // Empty CHSH cells count as aborts here.
            match run_protocol(&cfg, AttackStrategy::None) {
                Ok(out) => {
                    aborts += (out.status != Status::Delivered) as usize;
                    s1.extend(out.s1.map(|e| e.s));
                    s2.extend(out.s2.map(|e| e.s));
                }
                Err(_) => aborts += 1,
            }
        }
        abort_rate = Some(aborts as f64 / p.trials as f64);
        mean_s1 = mean_and_standard_error(&s1).map(|m| m.0);
        mean_s2 = mean_and_standard_error(&s2).map(|m| m.0);
    }

    SweepRow {
        eta,
        time_ns: noise.channel_duration_ns(),
        trials: shots,
        accuracy,
        accuracy_se: binomial_standard_error(accuracy, shots as u64),
        expected_accuracy: noise.expected_symbol_accuracy(),
        abort_rate,
        mean_s1,
        mean_s2,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Symbol accuracy against channel length for every `eta` in `etas`.
/// Accuracy comes from `shots` single-pair transmissions cycling through
/// the four messages; `protocol` adds full runs per point for abort rates
/// and CHSH means.
pub fn sweep_eta(
    etas: &[u32],
    noise: &NoiseModel,
    shots: usize,
    protocol: Option<&SweepProtocol>,
    seed: u64,
    workers: usize,
) -> Result<SweepResult, XlabError> {
    if shots == 0 {
        return Err(XlabError::Config("shots per sweep point must be at least 1".into()));
    }
    noise.validate().map_err(|e| XlabError::Config(e.to_string()))?;
    let rows: Vec<SweepRow> = with_workers(workers, || {
        etas.par_iter()
            .enumerate()
            .map(|(i, &eta)| sweep_point(eta, noise, shots, protocol, trial_seed(seed, i as u64)))
            .collect()
    })?;
    let x: Vec<f64> = rows.iter().map(|r| r.eta as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
    Ok(SweepResult {
        trend: spearman(&x, &y),
        rows,
    })
}

/// `min..=max` in steps of `step`.
pub fn eta_range(min: u32, max: u32, step: u32) -> Result<Vec<u32>, XlabError> {
    if step == 0 || min > max {
        return Err(XlabError::Config(format!("bad eta range {min}..={max} step {step}")));
    }
    Ok((min..=max).step_by(step as usize).collect())
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "eta",
    "time_ns",
    "trials",
    "accuracy",
    "accuracy_se",
    "expected_accuracy",
    "abort_rate",
    "mean_s1",
    "mean_s2",
    "spearman_rho",
];

pub fn sweep_table(
    result: &SweepResult,
    noise: &NoiseModel,
    shots: usize,
    protocol: Option<&SweepProtocol>,
    seed: u64,
) -> Result<Table, XlabError> {
    let etas: Vec<u32> = result.rows.iter().map(|r| r.eta).collect();
    let prov = Provenance::new(
        &json!({"experiment": "sweep-eta", "etas": etas, "noise": noise, "shots": shots, "protocol": protocol}),
        seed,
        noise,
    )?;
    let rho = opt(result.trend.map(|t| t.rho));
    let mut table = Table::new(&SWEEP_COLUMNS);
    for r in &result.rows {
        table.push(
            &prov,
            vec![
                r.eta.into(),
                r.time_ns.into(),
                r.trials.into(),
                r.accuracy.into(),
                r.accuracy_se.into(),
                r.expected_accuracy.into(),
                opt(r.abort_rate),
                opt(r.mean_s1),
                opt(r.mean_s2),
                rho.clone(),
            ],
        );
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub eta: u32,
    pub target: f64,
    pub model: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub p_gate: f64,
    pub p_readout: f64,
    pub residuals: Vec<Residual>,
    pub squared_error: f64,
    /// The anchors do not constrain `p_gate` (the optimum sits at the lower
    /// bound), so the reported value is only the solver floor.
    pub degenerate: bool,
}

impl Calibration {
    pub fn model(&self, eta: u32) -> NoiseModel {
        NoiseModel::depolarizing(self.p_gate, eta).with_readout(self.p_readout)
    }
}

pub const P_GATE_BOUNDS: (f64, f64) = (0.0, 0.5);

/// Least-squares fit of `p_gate` to `(eta, target accuracy)` anchors under
/// the symmetric depolarizing mix, with `p_readout` held fixed. Bisects on
/// the derivative of the squared error using the closed-form accuracy.
pub fn calibrate_noise(anchors: &[(u32, f64)], p_readout: f64) -> Result<Calibration, XlabError> {
    if anchors.is_empty() {
        return Err(XlabError::Config("calibration needs at least one anchor".into()));
    }
    let model = |p: f64, eta: u32| NoiseModel {
        error_mix: ErrorMix::DEPOLARIZING,
        ..NoiseModel::depolarizing(p, eta).with_readout(p_readout)
    };
    model(0.0, 0).validate().map_err(|e| XlabError::Config(e.to_string()))?;
    let slope = |p: f64| -> f64 {
        anchors
            .iter()
            .map(|&(eta, t)| {
                let m = model(p, eta);
                2.0 * (m.expected_symbol_accuracy() - t) * m.expected_symbol_accuracy_dp()
            })
            .sum()
    };

    let (mut lo, mut hi) = P_GATE_BOUNDS;
    let degenerate = slope(lo) >= 0.0;
    let p_gate = if degenerate {
        lo
    } else {
        if slope(hi) <= 0.0 {
            return Err(XlabError::Calibration(format!(
                "squared error still decreasing at p_gate = {hi}; no minimum inside [{lo}, {hi}]"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let residuals: Vec<Residual> = anchors
        .iter()
        .map(|&(eta, target)| Residual {
            eta,
            target,
            model: model(p_gate, eta).expected_symbol_accuracy(),
        })
        .collect();
    let squared_error = residuals.iter().map(|r| (r.model - r.target).powi(2)).sum();
    Ok(Calibration {
        p_gate,
        p_readout,
        residuals,
        squared_error,
        degenerate,
    })
}

pub const CALIBRATION_COLUMNS: [&str; 7] =
    ["eta", "target", "model", "simulated", "simulated_se", "squared_error", "degenerate"];

/// One row per anchor; `simulated` re-measures the fitted model by Monte
/// Carlo with `shots` transmissions.
pub fn calibration_table(cal: &Calibration, shots: usize, seed: u64) -> Result<Table, XlabError> {
    let anchors: Vec<_> = cal.residuals.iter().map(|r| (r.eta, r.target)).collect();
    let prov = Provenance::new(
        &json!({"experiment": "calibrate", "anchors": anchors, "p_readout": cal.p_readout, "shots": shots}),
        seed,
        &cal.model(0),
    )?;
    let mut table = Table::new(&CALIBRATION_COLUMNS);
    for (i, r) in cal.residuals.iter().enumerate() {
        let sim = sweep_point(r.eta, &cal.model(r.eta), shots, None, trial_seed(seed, i as u64));
        table.push(
            &prov,
            vec![
                r.eta.into(),
                r.target.into(),
                r.model.into(),
                sim.accuracy.into(),
                sim.accuracy_se.into(),
                cal.squared_error.into(),
                cal.degenerate.into(),
            ],
        );
    }
    Ok(table)
}

/// Monte Carlo symbol accuracy of `noise` at `eta`.
pub fn simulated_accuracy(noise: &NoiseModel, eta: u32, shots: usize, seed: u64) -> (f64, f64) {
    let r = sweep_point(eta, noise, shots, None, seed);
    (r.accuracy, r.accuracy_se)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionRow {
    pub l: usize,
    pub attack: AttackStrategy,
    /// Runs that got past the first CHSH round and so faced authentication.
    pub reached: usize,
    pub detected: usize,
    pub empirical: f64,
    pub analytic: f64,
    pub standard_error: f64,
}

impl DetectionRow {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.empirical - self.analytic).abs() <= sigmas * self.standard_error.max(1.0 / self.reached.max(1) as f64)
    }
}

/// Protocol parameters used for detection campaigns unless overridden:
/// short check rounds with the widest slack, since only authentication
/// matters here.
pub fn detection_base() -> ProtocolConfig {
    ProtocolConfig {
        check_pairs: 400,
        epsilon1: 0.8,
        epsilon2: 0.8,
        ..Default::default()
    }
}

/// Impersonation campaigns for each `l`, both directions.
pub fn detection_curve(
    l_values: &[usize],
    trials: usize,
    base: &ProtocolConfig,
    seed: u64,
    workers: usize,
) -> Result<Vec<DetectionRow>, XlabError> {
    if trials < 100 {
        return Err(XlabError::Config(format!("detection curves need at least 100 trials per l, got {trials}")));
    }
    let jobs: Vec<(usize, AttackStrategy, Status)> = l_values
        .iter()
        .flat_map(|&l| {
            [
                (l, AttackStrategy::ImpersonateAlice, Status::AbortAuthAlice),
                (l, AttackStrategy::ImpersonateBob, Status::AbortAuthBob),
            ]
        })
        .collect();
    let results: Vec<Result<DetectionRow, XlabError>> = with_workers(workers, || {
        jobs.par_iter()
            .enumerate()
            .map(|(j, &(l, attack, caught))| {
                let job_seed = trial_seed(seed, j as u64);
                let outcomes: Vec<Result<Status, XlabError>> = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let cfg = ProtocolConfig {
                            identity_pairs: l,
                            seed: trial_seed(job_seed, t as u64),
                            id_a: None,
                            id_b: None,
                            ..base.clone()
                        };
                        Ok(run_protocol(&cfg, attack)?.status)
                    })
                    .collect();
                let (mut reached, mut detected) = (0, 0);
                for s in outcomes {
                    match s? {
                        Status::AbortChsh1 => {}
                        s => {
                            reached += 1;
                            detected += (s == caught) as usize;
                        }
                    }
                }
                let analytic = 1.0 - 0.25f64.powi(l as i32);
                Ok(DetectionRow {
                    l,
                    attack,
                    reached,
                    detected,
                    empirical: detected as f64 / reached.max(1) as f64,
                    analytic,
                    standard_error: binomial_standard_error(analytic, reached as u64),
                })
            })
            .collect()
    })?;
    results.into_iter().collect()
}

pub const DETECTION_COLUMNS: [&str; 7] = ["l", "attack", "reached", "detected", "empirical", "analytic", "standard_error"];

pub fn detection_table(rows: &[DetectionRow], trials: usize, base: &ProtocolConfig, seed: u64) -> Result<Table, XlabError> {
    let ls: Vec<usize> = rows.iter().map(|r| r.l).collect();
    let prov = Provenance::new(
        &json!({"experiment": "detect", "l": ls, "trials": trials, "protocol": base}),
        seed,
        &base.noise,
    )?;
    let mut table = Table::new(&DETECTION_COLUMNS);
    for r in rows {
        table.push(
            &prov,
            vec![
                r.l.into(),
                r.attack.name().into(),
                r.reached.into(),
                r.detected.into(),
                r.empirical.into(),
                r.analytic.into(),
                r.standard_error.into(),
            ],
        );
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChshReport {
    pub d: usize,
    pub s: f64,
    pub std_error: f64,
    /// Whether the check passes with slack `epsilon`, i.e. entanglement is
    /// certified.
    pub passed: bool,
    /// `s ≤ 2 + 0.15`.
    pub classical: bool,
    /// `|s| ≤ 2√2 + 5·SE`.
    pub within_tsirelson: bool,
}

/// Standalone CHSH estimate over `d` fresh pairs whose transit halves pass
/// through `attack` and the channel.
pub fn chsh_report(
    d: usize,
    noise: &NoiseModel,
    attack: AttackStrategy,
    epsilon: f64,
    seed: u64,
) -> Result<ChshReport, XlabError> {
    if d < 100 {
        return Err(XlabError::Config(format!("CHSH triage needs d >= 100, got {d}")));
    }
    noise.validate().map_err(|e| XlabError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eve_rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, u64::MAX));
    let mut eve = Eve::new(attack);
    let mut states: Vec<StateVector> = vec![new_bell_pair(); d];
    for (i, s) in states.iter_mut().enumerate() {
        let run = eve
            .on_transit(i, s, 0, &mut eve_rng)
            .and_then(|_| transmit(s, 0, noise, &mut rng).map(|_| ()));
        run.map_err(|e| XlabError::Estimation(e.to_string()))?;
    }
    let samples = sample_check_pairs(states.iter_mut(), noise, &mut rng).map_err(|e| XlabError::Estimation(e.to_string()))?;
    let est = estimate_chsh(&samples).map_err(|e| XlabError::Estimation(e.to_string()))?;
    Ok(ChshReport {
        d,
        s: est.s,
        std_error: est.std_error,
        passed: chsh_threshold_check(est.s, epsilon),
        classical: est.s <= 2.15,
        within_tsirelson: est.s.abs() <= qsdc_core::protocol::TSIRELSON_BOUND + 5.0 * est.std_error,
    })
}

pub const CHSH_COLUMNS: [&str; 8] = ["run", "attack", "d", "s", "std_error", "passed", "classical", "within_tsirelson"];

/// `runs` independent reports.
pub fn chsh_campaign(
    d: usize,
    noise: &NoiseModel,
    attack: AttackStrategy,
    epsilon: f64,
    runs: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<ChshReport>, XlabError> {
    let reports: Vec<Result<ChshReport, XlabError>> = with_workers(workers, || {
        (0..runs)
            .into_par_iter()
            .map(|r| chsh_report(d, noise, attack, epsilon, trial_seed(seed, r as u64)))
            .collect()
    })?;
    reports.into_iter().collect()
}

pub fn chsh_table(reports: &[ChshReport], noise: &NoiseModel, attack: AttackStrategy, epsilon: f64, seed: u64) -> Result<Table, XlabError> {
    let d = reports.first().map(|r| r.d).unwrap_or(0);
    let prov = Provenance::new(
        &json!({"experiment": "chsh", "d": d, "noise": noise, "attack": attack, "epsilon": epsilon, "runs": reports.len()}),
        seed,
        noise,
    )?;
    let mut table = Table::new(&CHSH_COLUMNS);
    for (i, r) in reports.iter().enumerate() {
        table.push(
            &prov,
            vec![
                i.into(),
                attack.to_string().into(),
                r.d.into(),
                r.s.into(),
                r.std_error.into(),
                r.passed.into(),
                r.classical.into(),
                r.within_tsirelson.into(),
            ],
        );
    }
    Ok(table)
}
