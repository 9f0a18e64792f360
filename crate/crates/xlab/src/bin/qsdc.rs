use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsdc_core::adversary::{AncillaTiming, AttackStrategy, Substitute};
use qsdc_core::noise::{NoiseModel, CALIBRATED_P_READOUT};
use qsdc_core::protocol::TwoBits;
use qsdc_xlab::campaign::trial_table;
use qsdc_xlab::experiments::{
    calibration_table, chsh_campaign, chsh_table, detection_base, detection_table, eta_range, histogram_table,
    sweep_table, SweepProtocol, DEFAULT_SHOTS,
};
use qsdc_xlab::{calibrate_noise, detection_curve, run_trials, sweep_eta, Format, RunConfig, Table, XlabError};

#[derive(Parser, Debug)]
#[command(name = "qsdc", version, about = "Authenticated DI-QSDC simulator and experiment harness")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed; overrides the config file's protocol seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of trials; overrides the config file.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; tables go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Campaign using the configuration's attack.
    Run,
    /// Campaign under a named attack.
    Attack(AttackArgs),
    /// Symbol accuracy against channel length.
    SweepEta(SweepArgs),
    /// Decoded-symbol histograms for single-pair transmissions.
    Histogram(HistogramArgs),
    /// Impersonation detection against identity length.
    Detect(DetectArgs),
    /// Standalone CHSH estimation.
    Chsh(ChshArgs),
    /// Fit the per-gate error rate to accuracy anchors.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct AttackSpec {
    /// Polar angle of the intercept basis.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Azimuth of the intercept basis.
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Substitute states for man-in-the-middle.
    #[arg(long, default_value = "random-computational", value_parser = ["random-computational", "random-pure"])]
    substitute: String,
    /// Ancilla readout for entangle-measure.
    #[arg(long, default_value = "after-coupling", value_parser = ["after-coupling", "after-bob"])]
    timing: String,
}

impl AttackSpec {
    fn build(&self, name: &str) -> Result<AttackStrategy, XlabError> {
        let base: AttackStrategy = name.parse().map_err(|e: qsdc_core::adversary::UnknownAttack| XlabError::Config(e.to_string()))?;
        Ok(match base {
            AttackStrategy::InterceptResend { .. } => AttackStrategy::InterceptResend {
                theta: self.theta,
                phi: self.phi,
            },
            AttackStrategy::ManInTheMiddle { .. } => AttackStrategy::ManInTheMiddle {
                substitute: if self.substitute == "random-pure" {
                    Substitute::RandomPure
                } else {
                    Substitute::RandomComputational
                },
            },
            AttackStrategy::EntangleMeasure { .. } => AttackStrategy::EntangleMeasure {
                timing: if self.timing == "after-bob" {
                    AncillaTiming::AfterBob
                } else {
                    AncillaTiming::AfterCoupling
                },
            },
            other => other,
        })
    }
}

#[derive(Args, Debug)]
struct AttackArgs {
    /// none, impersonate-alice, impersonate-bob, intercept-resend, man-in-the-middle or entangle-measure.
    name: String,
    #[command(flatten)]
    spec: AttackSpec,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 10)]
    eta_min: u32,
    #[arg(long, default_value_t = 700)]
    eta_max: u32,
    #[arg(long, default_value_t = 30)]
    step: u32,
    /// Single-pair transmissions per point.
    #[arg(long, default_value_t = 4096)]
    shots: usize,
    /// Full protocol runs per point (0 skips them).
    #[arg(long, default_value_t = 0)]
    protocol_trials: usize,
}

#[derive(Args, Debug)]
struct HistogramArgs {
    /// Two-bit message, or `all`.
    #[arg(long, default_value = "all")]
    message: String,
    #[arg(long, default_value_t = 10)]
    eta: u32,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: usize,
}

#[derive(Args, Debug)]
struct DetectArgs {
    /// Identity lengths in pairs.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    l: Vec<usize>,
}

#[derive(Args, Debug)]
struct ChshArgs {
    #[arg(long, short, default_value_t = 4000)]
    d: usize,
    #[arg(long, default_value = "none")]
    attack: String,
    #[command(flatten)]
    spec: AttackSpec,
    /// Channel length; noise comes from the config file, or the calibrated
    /// model when this is set without one.
    #[arg(long)]
    eta: Option<u32>,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// `eta:accuracy` pairs.
    #[arg(long = "anchor", value_delimiter = ',', default_value = "10:0.95,700:0.58")]
    anchors: Vec<String>,
    #[arg(long, default_value_t = CALIBRATED_P_READOUT)]
    p_readout: f64,
    /// Monte Carlo shots used to re-check each anchor.
    #[arg(long, default_value_t = 20_000)]
    shots: usize,
}

fn load_config(common: &Common) -> Result<RunConfig, XlabError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| XlabError::Config(format!("reading {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| XlabError::Config(format!("parsing {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.protocol.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &common.out {
        cfg.output_path = Some(out.clone());
    }
    if let Some(f) = &common.format {
        cfg.emit_format = f.parse()?;
    }
    Ok(cfg)
}

fn emit(table: &Table, path: Option<&Path>, format: Format) -> Result<(), XlabError> {
    match path {
        Some(p) => table.write(p, format),
        None => {
            std::io::stdout().write_all(table.render(format)?.as_bytes())?;
            Ok(())
        }
    }
}

fn campaign(cfg: &RunConfig, workers: usize) -> Result<(), XlabError> {
    let summary = run_trials(cfg, workers)?;
    emit(&trial_table(cfg, &summary)?, cfg.output_path.as_deref(), cfg.emit_format)?;
    let statuses: Vec<String> = summary.statuses.iter().map(|(s, n)| format!("{}={n}", s.name())).collect();
    eprintln!(
        "{} trials, attack {}: abort rate {:.4}, symbol accuracy {}, {}",
        summary.trials,
        cfg.attack,
        summary.abort_rate,
        summary.accuracy.map_or("n/a".into(), |a| format!("{a:.4}")),
        statuses.join(" ")
    );
    if let Some((m, se)) = summary.mean_s1 {
        eprintln!("mean s1 = {m:.4} ± {se:.4}");
    }
    if let Some((m, se)) = summary.mean_s2 {
        eprintln!("mean s2 = {m:.4} ± {se:.4}");
    }
    Ok(())
}

fn noise_for(cli_config: bool, cfg: &RunConfig, eta: u32) -> NoiseModel {
    if cli_config {
        cfg.protocol.noise.with_eta(eta)
    } else {
        NoiseModel::calibrated(eta)
    }
}

fn execute(cli: Cli) -> Result<(), XlabError> {
    let common = &cli.common;
    let cfg = load_config(common)?;
    let seed = cfg.protocol.seed;
    let out = cfg.output_path.as_deref();
    let format = cfg.emit_format;
    let workers = common.workers;
    match &cli.command {
        Command::Run => campaign(&cfg, workers),
        Command::Attack(a) => {
            let cfg = RunConfig {
                attack: a.spec.build(&a.name)?,
                ..cfg
            };
            campaign(&cfg, workers)
        }
        Command::SweepEta(s) => {
            let etas = eta_range(s.eta_min, s.eta_max, s.step)?;
            let noise = noise_for(common.config.is_some(), &cfg, 0);
            let proto = (s.protocol_trials > 0).then(|| SweepProtocol {
                config: cfg.protocol.clone(),
                trials: s.protocol_trials,
            });
            let result = sweep_eta(&etas, &noise, s.shots, proto.as_ref(), seed, workers)?;
            emit(&sweep_table(&result, &noise, s.shots, proto.as_ref(), seed)?, out, format)?;
            if let Some(t) = result.trend {
                eprintln!("spearman rho = {:.4}, p = {:.3e}", t.rho, t.p_value);
            }
            Ok(())
        }
        Command::Histogram(h) => {
            let messages: Vec<TwoBits> = if h.message == "all" {
                TwoBits::ALL.to_vec()
            } else {
                vec![h.message.parse().map_err(|_| XlabError::Config(format!("bad two-bit message {:?}", h.message)))?]
            };
            if h.shots == 0 {
                return Err(XlabError::Config("shots must be at least 1".into()));
            }
            let noise = noise_for(common.config.is_some(), &cfg, h.eta);
            emit(&histogram_table(&messages, &noise, h.shots, seed)?, out, format)
        }
        Command::Detect(d) => {
            let trials = common.trials.unwrap_or(2000);
            let base = if common.config.is_some() { cfg.protocol.clone() } else { detection_base() };
            let rows = detection_curve(&d.l, trials, &base, seed, workers)?;
            emit(&detection_table(&rows, trials, &base, seed)?, out, format)?;
            for r in &rows {
                eprintln!(
                    "l={} {}: {:.4} (analytic {:.6}, n={})",
                    r.l,
                    r.attack.name(),
                    r.empirical,
                    r.analytic,
                    r.reached
                );
            }
            Ok(())
        }
        Command::Chsh(c) => {
            let attack = c.spec.build(&c.attack)?;
            let noise = match (common.config.is_some(), c.eta) {
                (true, eta) => cfg.protocol.noise.with_eta(eta.unwrap_or(cfg.protocol.noise.eta)),
                (false, Some(eta)) => NoiseModel::calibrated(eta),
                (false, None) => NoiseModel::noiseless(),
            };
            let runs = common.trials.unwrap_or(1);
            let reports = chsh_campaign(c.d, &noise, attack, c.epsilon, runs, seed, workers)?;
            emit(&chsh_table(&reports, &noise, attack, c.epsilon, seed)?, out, format)?;
            let classical = reports.iter().filter(|r| r.classical).count();
            let passed = reports.iter().filter(|r| r.passed).count();
            eprintln!("{runs} runs: {passed} passed the check, {classical} at or below 2.15");
            Ok(())
        }
        Command::Calibrate(c) => {
            let anchors = c
                .anchors
                .iter()
                .map(|a| {
                    let (eta, acc) = a
                        .split_once(':')
                        .ok_or_else(|| XlabError::Config(format!("anchor {a:?} is not eta:accuracy")))?;
                    let eta = eta.trim().parse().map_err(|_| XlabError::Config(format!("bad eta in {a:?}")))?;
                    let acc = acc.trim().parse().map_err(|_| XlabError::Config(format!("bad accuracy in {a:?}")))?;
                    Ok((eta, acc))
                })
                .collect::<Result<Vec<(u32, f64)>, XlabError>>()?;
            let cal = calibrate_noise(&anchors, c.p_readout)?;
            emit(&calibration_table(&cal, c.shots, seed)?, out, format)?;
            eprintln!(
                "p_gate = {:.6e} (p_readout {}){}",
                cal.p_gate,
                cal.p_readout,
                if cal.degenerate { ", degenerate: anchors do not constrain p_gate" } else { "" }
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
