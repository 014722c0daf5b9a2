//! Drivers behind the `biobox` binary: honest demos, single attacks, sweeps and
//! error-rate estimates, each closing with one JSON document.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::attack::scenario::{enumerate_scenarios, run_scenario, AttackId, ScenarioConfig, ScenarioParams};
use crate::attack::{AttackReport, Outcome};
use crate::biometric::{estimate_rates, BiometricSource};
use crate::entity::{AttackerSet, BlackboxSystem, Decision, Goal, Protocol, Role};
use crate::error::{Error, Result};
use crate::protocol::{GmProtocol, ProtocolId, StoProtocol, SvmProtocol};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;

pub const SWEEP_HEADER: &str = "protocol,attacker,goal,outcome,queries,bound,seed";

/// Writes next to the target and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp-{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    if let Err(e) = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path)) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

// ---------------------------------------------------------------- attack

/// Exit status for a finished attack report.
pub fn attack_exit_code(report: &AttackReport) -> i32 {
    match report.outcome {
        Outcome::Success => EXIT_OK,
        Outcome::Unsupported => EXIT_UNSUPPORTED,
        _ => EXIT_FAIL,
    }
}

pub fn cmd_attack(config: &ScenarioConfig, out: Option<&Path>) -> Result<(AttackReport, i32)> {
    let report = run_scenario(config)?;
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    let code = attack_exit_code(&report);
    Ok((report, code))
}

// ---------------------------------------------------------------- demo

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemoAuth {
    pub user: usize,
    pub decision: Decision,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemoReport {
    pub protocol: ProtocolId,
    pub seed: u64,
    pub users: usize,
    /// accepted messages per flow over the whole run
    pub flows: BTreeMap<String, u64>,
    pub decisions: Vec<DemoAuth>,
    pub ok_rate: f64,
}

fn honest_run<P: Protocol>(protocol: P, seed: u64) -> Result<(BTreeMap<String, u64>, Vec<DemoAuth>)> {
    // the database only listens, so the honest flows are untouched
    let mut sys = BlackboxSystem::new(protocol, AttackerSet::single(Role::Database)?, seed);
    let users = sys.adversary().users();
    let mut decisions = Vec::with_capacity(users.len());
    for u in users {
        let decision = sys.run_honest_auth(u, u)?;
        let correct = match decision {
            Decision::Identified(v) => v == u,
            d => d.is_ok(),
        };
        decisions.push(DemoAuth { user: u, decision, correct });
    }
    let mut flows = BTreeMap::new();
    for (key, n) in sys.ledger().entries() {
        *flows.entry(key.flow.name().to_string()).or_default() += n;
    }
    Ok((flows, decisions))
}

/// Enrolls every user and authenticates each once with a fresh capture.
pub fn cmd_demo(protocol: ProtocolId, params: &ScenarioParams, seed: u64) -> Result<DemoReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (flows, decisions) = match protocol {
        ProtocolId::Gm => honest_run(GmProtocol::setup(&params.gm(), &mut rng)?, seed)?,
        ProtocolId::Svm => honest_run(SvmProtocol::setup(&params.svm(), &mut rng)?, seed)?,
        ProtocolId::Stoianov => honest_run(StoProtocol::setup(params.linear_code()?, &params.sto(), &mut rng)?, seed)?,
    };
    let ok = decisions.iter().filter(|d| d.correct).count();
    Ok(DemoReport {
        protocol,
        seed,
        users: decisions.len(),
        flows,
        ok_rate: ok as f64 / decisions.len().max(1) as f64,
        decisions,
    })
}

// ---------------------------------------------------------------- sweep

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub protocol: ProtocolId,
    pub attacker: String,
    pub goal: String,
    pub outcome: String,
    pub queries: u64,
    pub bound: Option<u64>,
    pub seed: u64,
}

impl SweepRow {
    fn from_report(protocol: ProtocolId, r: &AttackReport) -> Self {
        SweepRow {
            protocol,
            attacker: r.attacker.to_string(),
            goal: r.goal.to_string(),
            outcome: r.outcome.cell().to_string(),
            queries: r.queries_of("sensor") + r.queries_of("database") + r.queries_of("matcher"),
            bound: r.bound,
            seed: r.seed,
        }
    }

    pub fn csv_line(&self) -> String {
        let bound = self.bound.map(|b| b.to_string()).unwrap_or_default();
        format!("{},{},{},{},{},{},{}", self.protocol, self.attacker, self.goal, self.outcome, self.queries, bound, self.seed)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<AttackReport>,
    pub failures: usize,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SWEEP_HEADER);
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.csv_line());
            s.push('\n');
        }
        s
    }
}

/// Runs every relevant cell of each protocol, one system per cell, on a small worker pool.
pub fn cmd_sweep(protocols: &[ProtocolId], params: &ScenarioParams, seed: u64) -> Result<SweepReport> {
    let mut configs = Vec::new();
    for &protocol in protocols {
        for (attacker, goal, _) in enumerate_scenarios(protocol) {
            let mut c = ScenarioConfig::new(protocol, attacker, goal, seed);
            c.params = params.clone();
            configs.push(c);
        }
    }
    let slots: Vec<Mutex<Option<Result<AttackReport>>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(config) = configs.get(i) else { break };
                let result = run_scenario(config);
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });
    let mut reports = Vec::with_capacity(configs.len());
    for (config, slot) in configs.iter().zip(slots) {
        let result = slot.into_inner().expect("slot lock").expect("every cell ran");
        reports.push(result.map_err(|e| Error::Attack(format!("{}: {e}", config.scenario_id())))?);
    }
    let rows: Vec<SweepRow> = configs.iter().zip(&reports).map(|(c, r)| SweepRow::from_report(c.protocol, r)).collect();
    let failures = rows.iter().filter(|r| r.outcome == Outcome::Fail.cell()).count();
    Ok(SweepReport { seed, rows, reports, failures })
}

// ---------------------------------------------------------------- rates

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatesReport {
    pub bits: usize,
    pub noise_prob: f64,
    pub threshold: usize,
    pub users: usize,
    pub trials: usize,
    pub seed: u64,
    pub fmr: f64,
    pub fnmr: f64,
    /// P[Bin(bits, noise) > threshold]
    pub fnmr_expected: f64,
}

/// Upper binomial tail P[X > t] for X ~ Bin(n, p).
pub fn binomial_tail(n: usize, p: f64, t: usize) -> f64 {
    let mut term = (1.0 - p).powi(n as i32);
    let mut below = 0.0;
    for k in 0..=t.min(n) {
        below += term;
        term *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
    }
    (1.0 - below).max(0.0)
}

pub fn cmd_rates(params: &ScenarioParams, trials: usize, seed: u64) -> Result<RatesReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let source = BiometricSource::generate(params.users, params.bits, params.noise_prob, &mut rng)?;
    let rates = estimate_rates(&source, params.threshold, trials, &mut rng)?;
    Ok(RatesReport {
        bits: params.bits,
        noise_prob: params.noise_prob,
        threshold: params.threshold,
        users: params.users,
        trials,
        seed,
        fmr: rates.fmr,
        fnmr: rates.fnmr,
        fnmr_expected: if params.noise_prob >= 1.0 {
            (params.threshold < params.bits) as u8 as f64
        } else {
            binomial_tail(params.bits, params.noise_prob, params.threshold)
        },
    })
}

// ---------------------------------------------------------------- command line

#[derive(Debug, Parser)]
#[command(name = "biobox", version, about = "Blackbox insider attacks on distributed biometric authentication")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Honest enrollment and one authentication per user
    Demo(DemoArgs),
    /// Run one attack scenario
    Attack(AttackArgs),
    /// Run every relevant attacker/goal cell
    Sweep(SweepArgs),
    /// Estimate FMR and FNMR by simulation
    Rates(RatesArgs),
}

/// Optional JSON file supplying defaults; flags win.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub protocol: Option<ProtocolId>,
    pub attacker: Option<String>,
    pub goal: Option<String>,
    pub method: Option<AttackId>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub params: ScenarioParams,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct ParamFlags {
    /// JSON config file with defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub users: Option<usize>,
    /// template length M
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long)]
    pub threshold: Option<usize>,
    #[arg(long)]
    pub prime_bits: Option<u64>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// SVM classes U
    #[arg(long)]
    pub classes: Option<usize>,
    /// SVM samples per class
    #[arg(long)]
    pub samples: Option<usize>,
    /// SVM feature count k
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long)]
    pub feature_max: Option<u64>,
    #[arg(long)]
    pub capture_delta: Option<u64>,
    /// generator matrix file for the fuzzy commitment
    #[arg(long)]
    pub code: Option<PathBuf>,
    #[arg(long)]
    pub code_radius: Option<usize>,
    #[arg(long)]
    pub block_len: Option<usize>,
    #[arg(long)]
    pub traffic_ticks: Option<u64>,
    #[arg(long)]
    pub trace_trials: Option<u64>,
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long)]
    pub disguise: bool,
    /// the server does not hold the GM public key
    #[arg(long)]
    pub no_server_pk: bool,
}

impl ParamFlags {
    fn file(&self) -> Result<ConfigFile> {
        match &self.config {
            Some(p) => ConfigFile::load(p),
            None => Ok(ConfigFile::default()),
        }
    }

    fn apply(&self, mut p: ScenarioParams) -> ScenarioParams {
        macro_rules! take {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { p.$target = v; })*
            };
        }
        take!(
            users => users, bits => bits, threshold => threshold, prime_bits => prime_bits,
            noise => noise_prob, classes => classes, samples => samples, features => features,
            feature_max => feature_max, capture_delta => capture_delta, code_radius => code_radius,
            block_len => block_len, traffic_ticks => traffic_ticks, trace_trials => trace_trials,
            target => target,
        );
        if self.code.is_some() {
            p.code = self.code.clone();
        }
        p.disguise |= self.disguise;
        p.as_knows_pk &= !self.no_server_pk;
        p
    }

    fn seed(&self, file: &ConfigFile) -> Result<u64> {
        self.seed
            .or(file.seed)
            .ok_or_else(|| Error::InvalidParams("--seed is required".into()))
    }
}

#[derive(Clone, Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub protocol: Option<ProtocolId>,
    /// controlled entities, e.g. `as`, `m+s`
    #[arg(long)]
    pub attacker: Option<String>,
    /// learn-reference, learn-sample, trace-identities or trace-queries
    #[arg(long)]
    pub goal: Option<String>,
    /// force one attack of the catalog
    #[arg(long)]
    pub method: Option<AttackId>,
    /// report file
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamFlags,
}

impl AttackArgs {
    pub fn resolve(&self) -> Result<(ScenarioConfig, Option<PathBuf>)> {
        let file = self.params.file()?;
        let missing = |what: &str| Error::InvalidParams(format!("--{what} is required"));
        let protocol = self.protocol.or(file.protocol).ok_or_else(|| missing("protocol"))?;
        let attacker: AttackerSet =
            self.attacker.as_ref().or(file.attacker.as_ref()).ok_or_else(|| missing("attacker"))?.parse()?;
        let goal: Goal = self.goal.as_ref().or(file.goal.as_ref()).ok_or_else(|| missing("goal"))?.parse()?;
        let seed = self.params.seed(&file)?;
        let mut config = ScenarioConfig::new(protocol, attacker, goal, seed);
        config.method = self.method.or(file.method);
        config.params = self.params.apply(file.params.clone());
        config.validate()?;
        Ok((config, self.out.clone().or(file.out)))
    }
}

#[derive(Clone, Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub protocol: Option<ProtocolId>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamFlags,
}

#[derive(Clone, Debug, Args)]
pub struct SweepArgs {
    /// all three protocols when absent
    #[arg(long)]
    pub protocol: Option<ProtocolId>,
    /// CSV file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with every cell's report
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamFlags,
}

#[derive(Clone, Debug, Args)]
pub struct RatesArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamFlags,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: &'a str,
    exit: i32,
}

fn emit<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("documents serialize"));
}

fn fail(e: &Error, exit: i32) -> i32 {
    let text = e.to_string();
    emit(&ErrorDoc { error: &text, exit });
    exit
}

fn config_exit(e: &Error) -> i32 {
    match e {
        Error::Attack(_) => EXIT_FAIL,
        _ => EXIT_CONFIG,
    }
}

fn run_attack(args: &AttackArgs) -> i32 {
    let (config, out) = match args.resolve() {
        Ok(v) => v,
        Err(e) => return fail(&e, EXIT_CONFIG),
    };
    match cmd_attack(&config, out.as_deref()) {
        Ok((report, code)) => {
            emit(&report);
            code
        }
        Err(e) => fail(&e, config_exit(&e)),
    }
}

fn run_demo(args: &DemoArgs) -> i32 {
    let go = || -> Result<DemoReport> {
        let file = args.params.file()?;
        let seed = args.params.seed(&file)?;
        let protocol = args.protocol.or(file.protocol).unwrap_or(ProtocolId::Gm);
        let report = cmd_demo(protocol, &args.params.apply(file.params.clone()), seed)?;
        if let Some(path) = args.out.as_ref().or(file.out.as_ref()) {
            write_json(path, &report)?;
        }
        Ok(report)
    };
    match go() {
        Ok(report) => {
            emit(&report);
            EXIT_OK
        }
        Err(e) => fail(&e, EXIT_CONFIG),
    }
}

fn run_sweep(args: &SweepArgs) -> i32 {
    let go = || -> Result<SweepReport> {
        let file = args.params.file()?;
        let seed = args.params.seed(&file)?;
        let protocols: Vec<ProtocolId> = match args.protocol.or(file.protocol) {
            Some(p) => vec![p],
            None => ProtocolId::ALL.to_vec(),
        };
        let report = cmd_sweep(&protocols, &args.params.apply(file.params.clone()), seed)?;
        if let Some(path) = args.out.as_ref().or(file.out.as_ref()) {
            write_atomic(path, report.to_csv().as_bytes())?;
        }
        if let Some(path) = &args.report {
            write_json(path, &report)?;
        }
        Ok(report)
    };
    match go() {
        Ok(report) => {
            #[derive(Serialize)]
            struct Summary<'a> {
                seed: u64,
                failures: usize,
                rows: &'a [SweepRow],
            }
            emit(&Summary { seed: report.seed, failures: report.failures, rows: &report.rows });
            if report.failures > 0 {
                EXIT_FAIL
            } else {
                EXIT_OK
            }
        }
        Err(e) => fail(&e, config_exit(&e)),
    }
}

fn run_rates(args: &RatesArgs) -> i32 {
    let go = || -> Result<RatesReport> {
        let file = args.params.file()?;
        let seed = args.params.seed(&file)?;
        let trials = args.trials.or(file.trials).unwrap_or(10_000);
        let report = cmd_rates(&args.params.apply(file.params.clone()), trials, seed)?;
        if let Some(path) = args.out.as_ref().or(file.out.as_ref()) {
            write_json(path, &report)?;
        }
        Ok(report)
    };
    match go() {
        Ok(report) => {
            emit(&report);
            EXIT_OK
        }
        Err(e) => fail(&e, EXIT_CONFIG),
    }
}

/// Parses arguments and runs a subcommand; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Demo(a) => run_demo(a),
        Command::Attack(a) => run_attack(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Rates(a) => run_rates(a),
    }
}
