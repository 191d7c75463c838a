//! `freqpol` command-line front end.
//!
//! Subcommands: `distribute`, `bbm92`, `qss`, `baseline`, `sweep`. Angles are
//! radians. Values from `--config` (a flat JSON object keyed by flag name)
//! fill in whatever the command line leaves unset.
//!
//! Exit codes: 0 success, 2 configuration error, 1 internal invariant
//! violation.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::distribution::{
    run_distribution_mixed, run_parties, total_probability, DistributionOutcome,
};
use crate::elements::{MixedNoiseWeights, NoiseAngles};
use crate::protocols::{
    baseline_direct, bbm92_run, grid_points, qber_vs_theta_sweep, qss_run, AngleGrid, BasisPair,
    BasisTally, ProtocolStats, SweepRow,
};
use crate::Error;

/// Seed used when neither the command line nor the config file sets one.
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_PAIRS: u64 = 100_000;
pub const DEFAULT_TRIPLES: u64 = 10_000;
pub const MAX_CLI_PARTIES: usize = 8;

pub const SWEEP_HEADER: &str = "theta_a,phi_a,theta_b,phi_b,scheme_qber,baseline_qber,success_prob";

#[derive(Debug, Parser)]
#[command(
    name = "freqpol",
    version,
    about = "Entanglement distribution over collective polarization noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Port-pattern table of the distribution setup.
    Distribute(DistributeArgs),
    /// BBM92 key distribution through the setup.
    Bbm92(ProtocolArgs),
    /// Three-party GHZ secret sharing through the setup.
    Qss(ProtocolArgs),
    /// BBM92 with phi+ sent directly through the noise.
    Baseline(ProtocolArgs),
    /// Scheme vs baseline QBER over a noise-angle grid (CSV).
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Flat JSON object of flag values; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Per-party noise angles. Party letters `a..h` or numbers `1..8`.
#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(
        long = "theta-a",
        visible_alias = "theta-1",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    theta_a: Option<String>,
    #[arg(
        long = "phi-a",
        visible_alias = "phi-1",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    phi_a: Option<String>,
    #[arg(
        long = "theta-b",
        visible_alias = "theta-2",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    theta_b: Option<String>,
    #[arg(
        long = "phi-b",
        visible_alias = "phi-2",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    phi_b: Option<String>,
    #[arg(
        long = "theta-c",
        visible_alias = "theta-3",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    theta_c: Option<String>,
    #[arg(
        long = "phi-c",
        visible_alias = "phi-3",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    phi_c: Option<String>,
    #[arg(
        long = "theta-d",
        visible_alias = "theta-4",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    theta_d: Option<String>,
    #[arg(
        long = "phi-d",
        visible_alias = "phi-4",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    phi_d: Option<String>,
    #[arg(
        long = "theta-e",
        visible_alias = "theta-5",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    theta_e: Option<String>,
    #[arg(
        long = "phi-e",
        visible_alias = "phi-5",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    phi_e: Option<String>,
    #[arg(
        long = "theta-f",
        visible_alias = "theta-6",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    theta_f: Option<String>,
    #[arg(
        long = "phi-f",
        visible_alias = "phi-6",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    phi_f: Option<String>,
    #[arg(
        long = "theta-g",
        visible_alias = "theta-7",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    theta_g: Option<String>,
    #[arg(
        long = "phi-g",
        visible_alias = "phi-7",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    phi_g: Option<String>,
    #[arg(
        long = "theta-h",
        visible_alias = "theta-8",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    theta_h: Option<String>,
    #[arg(
        long = "phi-h",
        visible_alias = "phi-8",
        value_name = "RAD",
        allow_negative_numbers = true
    )]
    phi_h: Option<String>,
}

impl NoiseArgs {
    fn entries(&self) -> [(&'static str, &Option<String>); 16] {
        [
            ("theta-a", &self.theta_a),
            ("phi-a", &self.phi_a),
            ("theta-b", &self.theta_b),
            ("phi-b", &self.phi_b),
            ("theta-c", &self.theta_c),
            ("phi-c", &self.phi_c),
            ("theta-d", &self.theta_d),
            ("phi-d", &self.phi_d),
            ("theta-e", &self.theta_e),
            ("phi-e", &self.phi_e),
            ("theta-f", &self.theta_f),
            ("phi-f", &self.phi_f),
            ("theta-g", &self.theta_g),
            ("phi-g", &self.phi_g),
            ("theta-h", &self.theta_h),
            ("phi-h", &self.phi_h),
        ]
    }
}

#[derive(Debug, Args)]
pub struct DistributeArgs {
    #[arg(long)]
    parties: Option<usize>,
    /// Mixed polarization noise weights `F1,F2,F3,F4` (two parties only);
    /// replaces the per-channel noise angles.
    #[arg(long, value_name = "F1,F2,F3,F4")]
    mixed: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    pairs: Option<u64>,
    #[arg(long)]
    triples: Option<u64>,
    /// `XY` (default) or `ZY`; secret sharing only.
    #[arg(long = "basis-pair")]
    basis_pair: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pairs: Option<u64>,
    /// Each angle flag takes `value` or `start:stop:steps`.
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    common: Common,
}

/// A failed command: exit code and message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn from_core(context: &str, e: Error) -> Self {
        let code = if matches!(e, Error::Invariant(_)) {
            1
        } else {
            2
        };
        Self {
            code,
            message: format!("{context}: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Flag values merged with the optional config file.
struct Settings {
    config: BTreeMap<String, Value>,
}

impl Settings {
    fn load(path: Option<&PathBuf>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self {
                config: BTreeMap::new(),
            });
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| {
            CliError::config(format!("config {} is not valid JSON: {e}", path.display()))
        })?;
        let Value::Object(map) = value else {
            return Err(CliError::config("config must be a flat JSON object"));
        };
        let mut config = BTreeMap::new();
        for (k, v) in map {
            if v.is_object() || v.is_array() {
                return Err(CliError::config(format!(
                    "config key `{k}` must hold a scalar"
                )));
            }
            config.insert(k.replace('_', "-"), v);
        }
        Ok(Self { config })
    }

    /// Command-line value if given, else the config entry as text.
    fn raw(&self, key: &str, cli: Option<String>) -> Option<String> {
        cli.or_else(|| {
            self.config.get(key).map(|v| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
        })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, cli: Option<T>) -> CliResult<Option<T>> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.raw(key, None) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(format!("invalid --{key}: `{s}`"))),
        }
    }

    fn angle(&self, noise: &NoiseArgs, key: &str) -> CliResult<Option<String>> {
        let cli = noise
            .entries()
            .iter()
            .find(|(k, _)| *k == key)
            .and_then(|(_, v)| (*v).clone());
        Ok(self.raw(key, cli))
    }

    fn noise_angles(&self, noise: &NoiseArgs, n_parties: usize) -> CliResult<Vec<NoiseAngles>> {
        let mut provided = 0;
        for (key, _) in noise.entries() {
            if self.angle(noise, key)?.is_some() {
                provided = provided.max(party_of(key) + 1);
            }
        }
        if provided > n_parties {
            return Err(CliError::config(format!(
                "noise given for party {} but only {n_parties} parties",
                (b'a' + provided as u8 - 1) as char
            )));
        }
        (0..n_parties)
            .map(|j| {
                let letter = (b'a' + j as u8) as char;
                let read = |what: &str| -> CliResult<f64> {
                    let key = format!("{what}-{letter}");
                    match self.angle(noise, &key)? {
                        None => Ok(0.0),
                        Some(s) => s.trim().parse::<f64>().map_err(|_| {
                            CliError::config(format!("invalid --{key}: `{s}` is not a number"))
                        }),
                    }
                };
                let (theta, phi) = (read("theta")?, read("phi")?);
                NoiseAngles::new(theta, phi).map_err(|e| {
                    let field = if (0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
                        "phi"
                    } else {
                        "theta"
                    };
                    CliError::config(format!("invalid --{field}-{letter}: {e}"))
                })
            })
            .collect()
    }

    fn format(&self, common: &Common) -> CliResult<Format> {
        match common.format {
            Some(f) => Ok(f),
            None => match self.raw("format", None) {
                None => Ok(Format::Table),
                Some(s) => Format::from_str(&s, true)
                    .map_err(|_| CliError::config(format!("invalid --format: `{s}`"))),
            },
        }
    }

    fn output(&self, common: &Common) -> Option<PathBuf> {
        common
            .output
            .clone()
            .or_else(|| self.raw("output", None).map(PathBuf::from))
    }

    fn seed(&self, common: &Common) -> CliResult<u64> {
        Ok(self.parse("seed", common.seed)?.unwrap_or(DEFAULT_SEED))
    }
}

fn party_of(key: &str) -> usize {
    let letter = key
        .rsplit('-')
        .next()
        .and_then(|s| s.bytes().next())
        .unwrap_or(b'a');
    (letter - b'a') as usize
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn sig12_opt(x: Option<f64>) -> Option<f64> {
    x.map(sig12)
}

fn csv_num(x: Option<f64>) -> String {
    x.map(|v| sig12(v).to_string()).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct NoiseRecord {
    party: String,
    theta: f64,
    phi: f64,
}

fn noise_records(angles: &[NoiseAngles]) -> Vec<NoiseRecord> {
    angles
        .iter()
        .enumerate()
        .map(|(j, a)| NoiseRecord {
            party: ((b'a' + j as u8) as char).to_string(),
            theta: sig12(a.theta),
            phi: sig12(a.phi),
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct OutcomeRecord {
    pattern: String,
    probability: f64,
    reference: String,
    fidelity: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DistributeReport {
    command: &'static str,
    parties: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mixed_weights: Option<[f64; 4]>,
    noise: Vec<NoiseRecord>,
    total_probability: f64,
    outcomes: Vec<OutcomeRecord>,
}

/// Flat protocol record.
#[derive(Debug, Serialize)]
struct ProtocolReport {
    protocol: String,
    #[serde(flatten)]
    angles: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis_pair: Option<String>,
    n_trials: u64,
    n_sifted: u64,
    n_errors: u64,
    qber: Option<f64>,
    sift_rate: f64,
    seed: u64,
    by_basis: Vec<BasisTally>,
}

fn render_distribute(report: &DistributeReport, format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Json => to_json(report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["pattern", "probability", "reference", "fidelity"])
                .map_err(csv_err)?;
            for o in &report.outcomes {
                w.write_record([
                    o.pattern.clone(),
                    csv_num(Some(o.probability)),
                    o.reference.clone(),
                    csv_num(o.fidelity),
                ])
                .map_err(csv_err)?;
            }
            String::from_utf8(
                w.into_inner()
                    .map_err(|e| CliError::config(e.to_string()))?,
            )
            .expect("csv output is utf-8")
        }
        Format::Table => {
            let mut s = String::new();
            for n in &report.noise {
                s.push_str(&format!(
                    "# party {}: theta = {}, phi = {}\n",
                    n.party, n.theta, n.phi
                ));
            }
            if let Some(w) = report.mixed_weights {
                s.push_str(&format!("# mixed noise weights: {w:?}\n"));
            }
            let width = report.parties * 2 + 2;
            s.push_str(&format!(
                "{:<width$}{:>16}  {:<10}{:>16}\n",
                "pattern", "probability", "reference", "fidelity"
            ));
            for o in &report.outcomes {
                let fid = o.fidelity.map_or("-".to_string(), |f| format!("{f:.12}"));
                s.push_str(&format!(
                    "{:<width$}{:>16.12}  {:<10}{:>16}\n",
                    o.pattern, o.probability, o.reference, fid
                ));
            }
            s.push_str(&format!(
                "{:<width$}{:>16.12}\n",
                "total", report.total_probability
            ));
            s
        }
    })
}

fn render_protocol(report: &ProtocolReport, format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Json => to_json(report)?,
        Format::Csv => {
            let mut header = vec!["protocol".to_string()];
            let mut row = vec![report.protocol.clone()];
            for (k, v) in &report.angles {
                header.push(k.clone());
                row.push(csv_num(Some(*v)));
            }
            header.extend(
                [
                    "n_trials",
                    "n_sifted",
                    "n_errors",
                    "qber",
                    "sift_rate",
                    "seed",
                ]
                .map(String::from),
            );
            row.extend([
                report.n_trials.to_string(),
                report.n_sifted.to_string(),
                report.n_errors.to_string(),
                csv_num(report.qber),
                csv_num(Some(report.sift_rate)),
                report.seed.to_string(),
            ]);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).map_err(csv_err)?;
            w.write_record(&row).map_err(csv_err)?;
            String::from_utf8(
                w.into_inner()
                    .map_err(|e| CliError::config(e.to_string()))?,
            )
            .expect("csv output is utf-8")
        }
        Format::Table => {
            let mut s = format!("protocol   {}\n", report.protocol);
            for (k, v) in &report.angles {
                s.push_str(&format!("{k:<10} {v}\n"));
            }
            if let Some(bp) = &report.basis_pair {
                s.push_str(&format!("basis_pair {bp}\n"));
            }
            s.push_str(&format!("seed       {}\n", report.seed));
            s.push_str(&format!("n_trials   {}\n", report.n_trials));
            s.push_str(&format!("n_sifted   {}\n", report.n_sifted));
            s.push_str(&format!("n_errors   {}\n", report.n_errors));
            s.push_str(&format!(
                "qber       {}\n",
                report
                    .qber
                    .map_or("undefined".to_string(), |q| q.to_string())
            ));
            s.push_str(&format!("sift_rate  {}\n", report.sift_rate));
            for t in &report.by_basis {
                s.push_str(&format!(
                    "  {:<4} sifted {:>8}  errors {:>8}  rate {}\n",
                    t.bases,
                    t.n_sifted,
                    t.n_errors,
                    t.error_rate()
                        .map_or("-".to_string(), |r| sig12(r).to_string())
                ));
            }
            s
        }
    })
}

/// Sweep rows as CSV with the fixed header.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER.split(','))
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            csv_num(Some(r.theta_a)),
            csv_num(Some(r.phi_a)),
            csv_num(Some(r.theta_b)),
            csv_num(Some(r.phi_b)),
            csv_num(r.scheme_qber),
            csv_num(r.baseline_qber),
            csv_num(Some(r.success_prob)),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn csv_err(e: csv::Error) -> CliError {
    CliError {
        code: 1,
        message: format!("csv: {e}"),
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: 1,
        message: format!("json: {e}"),
    })?;
    s.push('\n');
    Ok(s)
}

fn outcome_records(outcomes: &[DistributionOutcome]) -> Vec<OutcomeRecord> {
    outcomes
        .iter()
        .map(|o| {
            let row = o.row();
            OutcomeRecord {
                pattern: row.pattern,
                probability: sig12(row.probability),
                reference: row.reference,
                fidelity: sig12_opt(row.fidelity),
            }
        })
        .collect()
}

fn check_invariants(outcomes: &[DistributionOutcome]) -> CliResult<()> {
    let total = total_probability(outcomes);
    if (total - 1.0).abs() > 1e-9 {
        return Err(CliError {
            code: 1,
            message: format!("pattern probabilities sum to {total}"),
        });
    }
    Ok(())
}

fn cmd_distribute(args: &DistributeArgs) -> CliResult<(String, Option<PathBuf>, Vec<String>)> {
    let settings = Settings::load(args.common.config.as_ref())?;
    let parties = settings.parse("parties", args.parties)?.unwrap_or(2);
    if !(2..=MAX_CLI_PARTIES).contains(&parties) {
        return Err(CliError::config(format!(
            "invalid --parties: must be between 2 and {MAX_CLI_PARTIES}, got {parties}"
        )));
    }
    let format = settings.format(&args.common)?;
    let mixed = settings.raw("mixed", args.mixed.clone());
    let (outcomes, angles, mixed_weights) = match mixed {
        Some(spec) => {
            if parties != 2 {
                return Err(CliError::config(
                    "invalid --mixed: mixed noise is defined for two parties",
                ));
            }
            let w: Vec<f64> = spec
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::config(format!("invalid --mixed: `{spec}`")))?;
            let [f1, f2, f3, f4] = w[..] else {
                return Err(CliError::config("invalid --mixed: expected four weights"));
            };
            let weights = MixedNoiseWeights::new(f1, f2, f3, f4)
                .map_err(|e| CliError::config(format!("invalid --mixed: {e}")))?;
            let outcomes = run_distribution_mixed(weights)
                .map_err(|e| CliError::from_core("distribute", e))?;
            (outcomes, Vec::new(), Some(weights.weights()))
        }
        None => {
            let angles = settings.noise_angles(&args.noise, parties)?;
            let params: Vec<_> = angles.iter().map(NoiseAngles::params).collect();
            let outcomes =
                run_parties(&params).map_err(|e| CliError::from_core("distribute", e))?;
            (outcomes, angles, None)
        }
    };
    check_invariants(&outcomes)?;
    let report = DistributeReport {
        command: "distribute",
        parties,
        mixed_weights,
        noise: noise_records(&angles),
        total_probability: sig12(total_probability(&outcomes)),
        outcomes: outcome_records(&outcomes),
    };
    Ok((
        render_distribute(&report, format)?,
        settings.output(&args.common),
        Vec::new(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProtocolKind {
    Bbm92,
    Qss,
    Baseline,
}

fn cmd_protocol(
    kind: ProtocolKind,
    args: &ProtocolArgs,
) -> CliResult<(String, Option<PathBuf>, Vec<String>)> {
    let settings = Settings::load(args.common.config.as_ref())?;
    let format = settings.format(&args.common)?;
    let seed = settings.seed(&args.common)?;
    let n_parties = if kind == ProtocolKind::Qss { 3 } else { 2 };
    let angles = settings.noise_angles(&args.noise, n_parties)?;
    let params: Vec<_> = angles.iter().map(NoiseAngles::params).collect();
    let count = |key: &str, cli: Option<u64>, default: u64| -> CliResult<u64> {
        let n = settings.parse(key, cli)?.unwrap_or(default);
        if n == 0 {
            return Err(CliError::config(format!(
                "invalid --{key}: must be positive"
            )));
        }
        Ok(n)
    };
    let mut basis_pair = None;
    let stats: ProtocolStats = match kind {
        ProtocolKind::Bbm92 => bbm92_run(
            count("pairs", args.pairs, DEFAULT_PAIRS)?,
            params[0],
            params[1],
            seed,
        ),
        ProtocolKind::Baseline => baseline_direct(
            count("pairs", args.pairs, DEFAULT_PAIRS)?,
            params[0],
            params[1],
            seed,
        ),
        ProtocolKind::Qss => {
            let bp: BasisPair = match settings.raw("basis-pair", args.basis_pair.clone()) {
                None => BasisPair::default(),
                Some(s) => s
                    .parse()
                    .map_err(|e| CliError::config(format!("invalid --basis-pair: {e}")))?,
            };
            basis_pair = Some(bp.to_string());
            let n = count("triples", args.triples, DEFAULT_TRIPLES)?;
            qss_run(n, [params[0], params[1], params[2]], seed, bp)
        }
    }
    .map_err(|e| CliError::from_core("protocol", e))?;

    let mut angle_map = BTreeMap::new();
    for (j, a) in angles.iter().enumerate() {
        let letter = (b'a' + j as u8) as char;
        angle_map.insert(format!("theta_{letter}"), sig12(a.theta));
        angle_map.insert(format!("phi_{letter}"), sig12(a.phi));
    }
    let mut warnings = Vec::new();
    if stats.qber.is_none() {
        warnings.push("warning: no trials survived sifting; qber is undefined".to_string());
    }
    let report = ProtocolReport {
        protocol: stats.protocol,
        angles: angle_map,
        basis_pair,
        n_trials: stats.n_trials,
        n_sifted: stats.n_sifted,
        n_errors: stats.n_errors,
        qber: sig12_opt(stats.qber),
        sift_rate: sig12(stats.sift_rate),
        seed: stats.seed,
        by_basis: stats.by_basis,
    };
    Ok((
        render_protocol(&report, format)?,
        settings.output(&args.common),
        warnings,
    ))
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<(String, Option<PathBuf>, Vec<String>)> {
    let settings = Settings::load(args.common.config.as_ref())?;
    let seed = settings.seed(&args.common)?;
    let pairs = settings
        .parse("pairs", args.pairs)?
        .unwrap_or(DEFAULT_PAIRS);
    if pairs == 0 {
        return Err(CliError::config("invalid --pairs: must be positive"));
    }
    let format = match settings.format(&args.common)? {
        Format::Table => Format::Csv,
        f => f,
    };
    let grid = |key: &str| -> CliResult<AngleGrid> {
        match settings.angle(&args.noise, key)? {
            None => Ok(AngleGrid::fixed(0.0)),
            Some(s) => s
                .parse()
                .map_err(|e| CliError::config(format!("invalid --{key}: {e}"))),
        }
    };
    for (key, _) in args.noise.entries() {
        if party_of(key) >= 2 && settings.angle(&args.noise, key)?.is_some() {
            return Err(CliError::config(format!(
                "invalid --{key}: sweeps cover parties a and b"
            )));
        }
    }
    let points = grid_points(
        &grid("theta-a")?,
        &grid("phi-a")?,
        &grid("theta-b")?,
        &grid("phi-b")?,
    )
    .map_err(|e| CliError::config(format!("invalid grid: {e}")))?;
    let rows =
        qber_vs_theta_sweep(&points, pairs, seed).map_err(|e| CliError::from_core("sweep", e))?;
    let text = match format {
        Format::Json => {
            let rounded: Vec<SweepRow> = rows
                .iter()
                .map(|r| SweepRow {
                    theta_a: sig12(r.theta_a),
                    phi_a: sig12(r.phi_a),
                    theta_b: sig12(r.theta_b),
                    phi_b: sig12(r.phi_b),
                    scheme_qber: sig12_opt(r.scheme_qber),
                    baseline_qber: sig12_opt(r.baseline_qber),
                    success_prob: sig12(r.success_prob),
                })
                .collect();
            to_json(&rounded)?
        }
        _ => sweep_csv(&rows),
    };
    Ok((text, settings.output(&args.common), Vec::new()))
}

/// Parses `args` (including the program name) and runs the command, writing
/// to the given streams. Returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Distribute(a) => cmd_distribute(a),
        Command::Bbm92(a) => cmd_protocol(ProtocolKind::Bbm92, a),
        Command::Qss(a) => cmd_protocol(ProtocolKind::Qss, a),
        Command::Baseline(a) => cmd_protocol(ProtocolKind::Baseline, a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok((text, output, warnings)) => {
            for w in warnings {
                let _ = writeln!(stderr, "{w}");
            }
            let written = match output {
                Some(path) => fs::write(&path, text.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

/// Entry point used by the binary.
pub fn run() -> i32 {
    run_with(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("freqpol").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn sig12_rounds() {
        assert_eq!(sig12(0.1234567890123456), 0.123456789012);
        assert_eq!(sig12(1.0), 1.0);
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(123456.7890123456), 123456.789012);
    }

    #[test]
    fn distribute_table_has_total() {
        let (code, out, _) = run_args(&[
            "distribute",
            "--theta-a",
            "0.6",
            "--phi-a",
            "0.3",
            "--theta-b",
            "1.1",
            "--phi-b",
            "2.0",
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("1.000000000000\n"), "{out}");
        assert_eq!(out.lines().filter(|l| l.starts_with('a')).count(), 4);
    }

    #[test]
    fn bad_angle_names_field() {
        let (code, _, err) = run_args(&["distribute", "--theta-b", "2.0"]);
        assert_eq!(code, 2);
        assert!(err.contains("--theta-b"), "{err}");
        let (code, _, err) = run_args(&["distribute", "--phi-a", "-1"]);
        assert_eq!(code, 2);
        assert!(err.contains("--phi-a"), "{err}");
        let (code, _, err) = run_args(&["distribute", "--theta-a", "abc"]);
        assert_eq!(code, 2);
        assert!(err.contains("--theta-a"), "{err}");
    }

    #[test]
    fn parties_out_of_range() {
        assert_eq!(run_args(&["distribute", "--parties", "9"]).0, 2);
        assert_eq!(run_args(&["distribute", "--parties", "1"]).0, 2);
        assert_eq!(run_args(&["distribute", "--theta-c", "0.1"]).0, 2);
    }

    #[test]
    fn numeric_party_aliases() {
        let (code, a, _) = run_args(&[
            "distribute",
            "--parties",
            "3",
            "--theta-3",
            "0.4",
            "--format",
            "json",
        ]);
        assert_eq!(code, 0);
        let (_, b, _) = run_args(&[
            "distribute",
            "--parties",
            "3",
            "--theta-c",
            "0.4",
            "--format",
            "json",
        ]);
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_subcommand_is_config_error() {
        assert_eq!(run_args(&["teleport"]).0, 2);
        assert_eq!(run_args(&["--help"]).0, 0);
    }
}
