//! Campaigns of independent protocol runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use qsdc_core::adversary::AttackStrategy;
use qsdc_core::protocol::{run_protocol, ProtocolConfig, ProtocolError, Status, TSIRELSON_BOUND};
use qsdc_core::stats::mean_and_standard_error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::table::{opt, Format, Provenance, Table};
use crate::{seeds::trial_seed, with_workers, XlabError};

/// A campaign: `trials` runs of `protocol` under `attack`. The protocol's
/// `seed` is the master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolConfig,
    pub attack: AttackStrategy,
    pub trials: usize,
    pub output_path: Option<PathBuf>,
    pub emit_format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolConfig::default(),
            attack: AttackStrategy::None,
            trials: 100,
            output_path: None,
            emit_format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), XlabError> {
        if self.trials == 0 {
            return Err(XlabError::Config("trials must be at least 1".into()));
        }
        self.protocol.validate()?;
        Ok(())
    }

    /// Parameters that determine the results (output location excluded).
    pub fn fingerprint(&self) -> Value {
        json!({
            "protocol": self.protocol,
            "attack": self.attack,
            "trials": self.trials,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub status: Status,
    pub s1: Option<f64>,
    pub s1_se: Option<f64>,
    pub s2: Option<f64>,
    pub s2_se: Option<f64>,
    pub qber: Option<f64>,
    pub symbols_correct: usize,
    pub symbols_total: usize,
    pub delivered_intact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub trials: usize,
    pub statuses: BTreeMap<Status, usize>,
    pub abort_rate: f64,
    /// Correct two-bit symbols over all decoded symbols; `None` if no run
    /// reached decoding.
    pub accuracy: Option<f64>,
    /// Fraction of trials that delivered the message unchanged.
    pub delivery_rate: f64,
    pub mean_s1: Option<(f64, f64)>,
    pub mean_s2: Option<(f64, f64)>,
    /// Estimates above `2√2 + 5·SE`.
    pub tsirelson_violations: usize,
    pub records: Vec<TrialRecord>,
}

impl CampaignSummary {
    pub fn count(&self, status: Status) -> usize {
        self.statuses.get(&status).copied().unwrap_or(0)
    }
}

fn run_one(cfg: &RunConfig, trial: usize) -> Result<TrialRecord, ProtocolError> {
    let seed = trial_seed(cfg.protocol.seed, trial as u64);
    let protocol = ProtocolConfig {
        seed,
        ..cfg.protocol.clone()
    };
    let out = run_protocol(&protocol, cfg.attack)?;
    let symbols = out.symbols.unwrap_or_default();
    Ok(TrialRecord {
        trial,
        seed,
        status: out.status,
        s1: out.s1.as_ref().map(|e| e.s),
        s1_se: out.s1.as_ref().map(|e| e.std_error),
        s2: out.s2.as_ref().map(|e| e.s),
        s2_se: out.s2.as_ref().map(|e| e.std_error),
        qber: out.qber,
        symbols_correct: symbols.correct,
        symbols_total: symbols.total,
        delivered_intact: out.delivered_message.as_ref() == Some(&out.sent_message),
    })
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        None
    } else {
        mean_and_standard_error(&v)
    }
}

pub fn summarize(records: Vec<TrialRecord>) -> CampaignSummary {
    let trials = records.len();
    let mut statuses = BTreeMap::new();
    for r in &records {
        *statuses.entry(r.status).or_insert(0) += 1;
    }
    let aborted = records.iter().filter(|r| r.status.is_abort()).count();
    let (correct, total) = records
        .iter()
        .fold((0, 0), |(c, t), r| (c + r.symbols_correct, t + r.symbols_total));
    let violations = records
        .iter()
        .flat_map(|r| [(r.s1, r.s1_se), (r.s2, r.s2_se)])
        .filter(|(s, se)| matches!((s, se), (Some(s), Some(se)) if s.abs() > TSIRELSON_BOUND + 5.0 * se))
        .count();
    CampaignSummary {
        trials,
        abort_rate: aborted as f64 / trials.max(1) as f64,
        accuracy: (total > 0).then(|| correct as f64 / total as f64),
        delivery_rate: records.iter().filter(|r| r.delivered_intact).count() as f64 / trials.max(1) as f64,
        mean_s1: mean_of(records.iter().filter_map(|r| r.s1)),
        mean_s2: mean_of(records.iter().filter_map(|r| r.s2)),
        tsirelson_violations: violations,
        statuses,
        records,
    }
}

/// Runs every trial of the campaign on `workers` threads. Results are
/// collected in trial order, so the summary does not depend on `workers`.
pub fn run_trials(cfg: &RunConfig, workers: usize) -> Result<CampaignSummary, XlabError> {
    cfg.validate()?;
    let results: Vec<Result<TrialRecord, ProtocolError>> =
        with_workers(workers, || (0..cfg.trials).into_par_iter().map(|t| run_one(cfg, t)).collect())?;
    let mut records = Vec::with_capacity(cfg.trials);
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(ProtocolError::Chsh(e)) => return Err(XlabError::Estimation(e.to_string())),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(summarize(records))
}

pub const TRIAL_COLUMNS: [&str; 12] = [
    "trial",
    "trial_seed",
    "attack",
    "status",
    "s1",
    "s1_se",
    "s2",
    "s2_se",
    "qber",
    "symbols_correct",
    "symbols_total",
    "delivered",
];

/// One row per trial.
pub fn trial_table(cfg: &RunConfig, summary: &CampaignSummary) -> Result<Table, XlabError> {
    let prov = Provenance::new(&cfg.fingerprint(), cfg.protocol.seed, &cfg.protocol.noise)?;
    let mut table = Table::new(&TRIAL_COLUMNS);
    for r in &summary.records {
        table.push(
            &prov,
            vec![
                r.trial.into(),
                r.seed.into(),
                cfg.attack.to_string().into(),
                r.status.name().into(),
                opt(r.s1),
                opt(r.s1_se),
                opt(r.s2),
                opt(r.s2_se),
                opt(r.qber),
                r.symbols_correct.into(),
                r.symbols_total.into(),
                r.delivered_intact.into(),
            ],
        );
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(trials: usize, attack: AttackStrategy) -> RunConfig {
        RunConfig {
            protocol: ProtocolConfig {
                check_pairs: 500,
                epsilon1: 0.8,
                epsilon2: 0.8,
                seed: 5,
                ..Default::default()
            },
            attack,
            trials,
            ..Default::default()
        }
    }

    #[test]
    fn honest_campaign_is_clean() {
        let s = run_trials(&quick(100, AttackStrategy::None), 2).unwrap();
        assert_eq!(s.accuracy, Some(1.0));
        assert_eq!(s.abort_rate, 0.0);
        assert_eq!(s.delivery_rate, 1.0);
        assert_eq!(s.count(Status::Delivered), 100);
        assert_eq!(s.tsirelson_violations, 0);
    }

    #[test]
    fn intercept_resend_campaign_aborts() {
        let mut cfg = quick(100, AttackStrategy::InterceptResend { theta: 0.7, phi: 2.0 });
        cfg.protocol.check_pairs = 1000;
        let s = run_trials(&cfg, 4).unwrap();
        assert!(s.abort_rate >= 0.99, "{:?}", s.statuses);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = quick(24, AttackStrategy::ImpersonateBob);
        let a = trial_table(&cfg, &run_trials(&cfg, 1).unwrap()).unwrap();
        let b = trial_table(&cfg, &run_trials(&cfg, 5).unwrap()).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    }

    #[test]
    fn rejects_zero_trials_and_bad_protocol() {
        let cfg = quick(0, AttackStrategy::None);
        assert_eq!(run_trials(&cfg, 1).unwrap_err().exit_code(), 1);
        let mut bad = quick(1, AttackStrategy::None);
        bad.protocol.check_bits = 1;
        assert_eq!(run_trials(&bad, 1).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn tiny_check_rounds_surface_estimation_errors() {
        let mut cfg = quick(20, AttackStrategy::None);
        cfg.protocol.check_pairs = 2;
        let err = run_trials(&cfg, 1).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("increase the number of check pairs"), "{err}");
    }
}
