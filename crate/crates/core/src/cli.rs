//! The `pseudofin` command line: build chains, count definable sets, run
//! dividing experiments, dump schedules and export stages.
//!
//! Exit codes: 0 success, 1 an `--expect`ed outcome did not occur, 2 usage
//! or config error, 3 internal invariant violation.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, DividingExpectation, ExperimentConfig};
use crate::construction::{build_chain_with, ConstructionError, StageChain};
use crate::dimension::{dim_compare, trend, DimError, Verdict, VerdictKind};
use crate::dividing::{certify_dividing, find_dimension_drop, DividesWitness, DividingError, DropReport};
use crate::formula::{LevelOrdinal, Schedule};
use crate::plot::{svg, Series};
use crate::theory::{available_plugins, plugin_by_name, Oracle};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Internal(String),
    #[error("expectation not met: {0}")]
    Expectation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Expectation(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::Document(_) | ConstructionError::UnknownPlugin(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<DimError> for CliError {
    fn from(e: DimError) -> Self {
        match e {
            DimError::Eval(_) | DimError::Csv(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DividingError> for CliError {
    fn from(e: DividingError) -> Self {
        match e {
            DividingError::Dim(d) => d.into(),
            DividingError::NotImplied { .. } | DividingError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "pseudofin", version, about = "Staged constructions and dimension experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the chain of an experiment and write it with its audit log.
    Build(Common),
    /// Count the experiment's sets and compare them pairwise.
    Dim(Common),
    /// Run the experiment's dividing certificates and dimension-drop searches.
    Divide(Common),
    /// Print the first schedule entries of a plugin.
    Schedule(ScheduleArgs),
    /// Export a chain's stages and audit as JSON and CSV.
    Export(Common),
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// Experiment config (TOML). Required.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// A chain written by `build`; otherwise the chain is built in-process.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Override the number of stages.
    #[arg(long)]
    pub stages: Option<usize>,
    /// Override the comparator window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Override the comparator bound on log-differences.
    #[arg(long)]
    pub bound: Option<f64>,
    /// Override the seed used to subsample drop candidates.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Fail with exit code 1 when an outcome named by `expect` in the config
    /// does not occur.
    #[arg(long)]
    pub expect: bool,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    /// Take the plugin from this config.
    #[arg(long, conflicts_with = "plugin")]
    pub config: Option<PathBuf>,
    /// Plugin name.
    #[arg(long)]
    pub plugin: Option<String>,
    /// Number of entries to print.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command, returning the lines it reports.
pub fn run(command: &Command) -> Result<Vec<String>, CliError> {
    match command {
        Command::Build(c) => cmd_build(c),
        Command::Dim(c) => cmd_dim(c),
        Command::Divide(c) => cmd_divide(c),
        Command::Schedule(s) => cmd_schedule(s),
        Command::Export(c) => cmd_export(c),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn load_config(c: &Common) -> Result<ExperimentConfig, CliError> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let mut cfg = ExperimentConfig::from_toml(&read(path)?)?;
    if let Some(n) = c.stages {
        cfg.stages = n;
    }
    if let Some(w) = c.window {
        cfg.comparator.window = w;
    }
    if let Some(b) = c.bound {
        cfg.comparator.bound = b;
    }
    if let Some(s) = c.seed {
        cfg.comparator.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The chain named by `--chain`, or a freshly built one.
pub fn load_chain(c: &Common, cfg: &ExperimentConfig) -> Result<StageChain, CliError> {
    match &c.chain {
        Some(path) => {
            let chain = StageChain::from_json(&read(path)?)?;
            if chain.plugin != cfg.plugin {
                return Err(CliError::Usage(format!(
                    "chain was built for `{}` but the config names `{}`",
                    chain.plugin, cfg.plugin
                )));
            }
            Ok(chain)
        }
        None => {
            let theory = cfg.theory()?;
            let oracle = Oracle::new(theory.as_ref());
            Ok(build_chain_with(&oracle, cfg.chain_params(), |_, _| {})?)
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn cmd_build(c: &Common) -> Result<Vec<String>, CliError> {
    let cfg = load_config(c)?;
    let theory = cfg.theory()?;
    let oracle = Oracle::new(theory.as_ref());
    let chain = build_chain_with(&oracle, cfg.chain_params(), |_, _| {})?;
    let json = chain.to_json();
    let path = write(&c.out_dir, "chain.json", &json)?;
    let audit = write(&c.out_dir, "audit.json", &to_json(&chain.audit))?;
    let m = chain.final_stage();
    Ok(vec![
        format!("chain: {} ({} stages after M0)", path.display(), chain.len()),
        format!("audit: {}", audit.display()),
        format!("final stage: {} elements, {} facts", m.len(), m.fact_count()),
        format!("sha256: {}", sha256_hex(&json)),
    ])
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub name: String,
    pub left: String,
    pub right: String,
    pub left_csv: String,
    pub right_csv: String,
    pub plot: String,
    pub verdict: Verdict,
    pub expect: Option<VerdictKind>,
    pub met: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimReport {
    pub plugin: String,
    pub stages: usize,
    pub comparisons: Vec<ComparisonReport>,
}

pub fn cmd_dim(c: &Common) -> Result<Vec<String>, CliError> {
    let cfg = load_config(c)?;
    let chain = load_chain(c, &cfg)?;
    let report = dim_report(&cfg, &chain, &c.out_dir)?;
    let path = write(&c.out_dir, "dim-report.json", &to_json(&report))?;
    let mut lines: Vec<String> = report
        .comparisons
        .iter()
        .map(|r| format!("{}: {}", r.name, r.verdict.kind))
        .collect();
    lines.push(format!("report: {}", path.display()));
    let missed: Vec<&str> = report
        .comparisons
        .iter()
        .filter(|r| r.met == Some(false))
        .map(|r| r.name.as_str())
        .collect();
    if c.expect && !missed.is_empty() {
        for l in &lines {
            println!("{l}");
        }
        return Err(CliError::Expectation(missed.join(", ")));
    }
    Ok(lines)
}

/// Writes one CSV per compared set and one SVG per comparison into `dir`.
pub fn dim_report(cfg: &ExperimentConfig, chain: &StageChain, dir: &Path) -> Result<DimReport, CliError> {
    let theory = cfg.theory()?;
    let sig = theory.signature();
    let last = chain.final_stage();
    let mut comparisons = Vec::new();
    for cmp in &cfg.comparisons {
        let name = cmp.label();
        let mut trends = Vec::new();
        let mut csvs = Vec::new();
        for side in [&cmp.left, &cmp.right] {
            let set = cfg.set(side)?.resolve(sig, last)?;
            let t = trend(chain, &set)?;
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            let file = format!("trend-{side}.csv");
            write(dir, &file, &String::from_utf8(buf).expect("csv is utf-8"))?;
            csvs.push(file);
            trends.push(t);
        }
        // Compare on the stages both trends cover.
        let start = trends[0].first_stage.max(trends[1].first_stage);
        let clipped: Vec<_> = trends
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.counts.drain(..start - t.first_stage);
                t.first_stage = start;
                t
            })
            .collect();
        let verdict = dim_compare(&clipped[0], &clipped[1], cfg.comparator.window, cfg.comparator.bound)?;
        let plot = format!("{name}.svg");
        let title = format!("{name}: {}", verdict.kind);
        write(
            dir,
            &plot,
            &svg(
                &title,
                &[
                    Series {
                        label: &cmp.left,
                        trend: &trends[0],
                    },
                    Series {
                        label: &cmp.right,
                        trend: &trends[1],
                    },
                ],
            ),
        )?;
        comparisons.push(ComparisonReport {
            name,
            left: cmp.left.clone(),
            right: cmp.right.clone(),
            left_csv: csvs[0].clone(),
            right_csv: csvs[1].clone(),
            plot,
            met: cmp.expect.map(|k| k == verdict.kind),
            expect: cmp.expect,
            verdict,
        });
    }
    Ok(DimReport {
        plugin: cfg.plugin.clone(),
        stages: chain.len(),
        comparisons,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DividingOutcome {
    pub name: String,
    pub certificate: Option<DividesWitness>,
    pub drop: DropReport,
    pub diverges_neg: usize,
    pub expect: Option<DividingExpectation>,
    pub met: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivideReport {
    pub plugin: String,
    pub stages: usize,
    pub experiments: Vec<DividingOutcome>,
}

pub fn divide_report(cfg: &ExperimentConfig, chain: &StageChain) -> Result<DivideReport, CliError> {
    let theory = cfg.theory()?;
    let sig = theory.signature();
    let oracle = Oracle::new(theory.as_ref());
    let last = chain.final_stage();
    let mut experiments = Vec::new();
    for d in &cfg.dividing {
        let family = d.family(sig)?;
        let a = d.resolve_a(last)?;
        let b = d.resolve_b(last)?;
        let certificate = certify_dividing(&oracle, last, &family, &a, &b, d.k, d.l)?.map(|(w, _)| w);
        let psi = cfg.set(&d.psi)?.resolve(sig, last)?;
        let mut phi = crate::eval::DefinableSet::new(family.formula.clone(), family.x.clone())
            .with_params(family.y.iter().cloned().zip(b.iter().copied()));
        phi.level_cap = psi.level_cap;
        let drop = find_dimension_drop(chain, &psi, &phi, &family.y, &a, cfg.comparator.drop_params())?;
        let diverges_neg = drop.count(VerdictKind::DivergesNeg);
        let met = d.expect.map(|e| match e {
            DividingExpectation::Divides => certificate.is_some() && diverges_neg > 0,
            DividingExpectation::NoCertificate => certificate.is_none(),
            DividingExpectation::AllBounded => drop.candidates.iter().all(|c| c.verdict.kind == VerdictKind::Bounded),
        });
        experiments.push(DividingOutcome {
            name: d.name.clone(),
            certificate,
            drop,
            diverges_neg,
            expect: d.expect,
            met,
        });
    }
    Ok(DivideReport {
        plugin: cfg.plugin.clone(),
        stages: chain.len(),
        experiments,
    })
}

pub fn cmd_divide(c: &Common) -> Result<Vec<String>, CliError> {
    let cfg = load_config(c)?;
    let chain = load_chain(c, &cfg)?;
    let report = divide_report(&cfg, &chain)?;
    let path = write(&c.out_dir, "divide-report.json", &to_json(&report))?;
    let mut lines = Vec::new();
    for e in &report.experiments {
        let cert = match &e.certificate {
            Some(w) => format!("certificate with {} instances (k = {})", w.instances.len(), w.k),
            None => "no dividing certificate".to_string(),
        };
        let best = e
            .drop
            .best()
            .map(|b| b.verdict.kind.to_string())
            .unwrap_or_else(|| "no candidates".into());
        lines.push(format!(
            "{}: {cert}; {} candidates, {} DivergesNeg, best {best}",
            e.name,
            e.drop.candidates.len(),
            e.diverges_neg
        ));
    }
    lines.push(format!("report: {}", path.display()));
    let missed: Vec<&str> = report
        .experiments
        .iter()
        .filter(|e| e.met == Some(false))
        .map(|e| e.name.as_str())
        .collect();
    if c.expect && !missed.is_empty() {
        for l in &lines {
            println!("{l}");
        }
        return Err(CliError::Expectation(missed.join(", ")));
    }
    Ok(lines)
}

pub fn cmd_schedule(s: &ScheduleArgs) -> Result<Vec<String>, CliError> {
    let name = match (&s.config, &s.plugin) {
        (Some(path), _) => ExperimentConfig::from_toml(&read(path)?)?.plugin,
        (None, Some(p)) => p.clone(),
        (None, None) => return Err(CliError::Usage("give --config or --plugin".into())),
    };
    let theory = plugin_by_name(&name).ok_or_else(|| ConfigError::UnknownPlugin {
        name: name.clone(),
        available: available_plugins().into_iter().map(String::from).collect(),
    })?;
    Ok(Schedule::new(theory.signature())
        .entries(s.count)
        .iter()
        .map(|e| e.to_string())
        .collect())
}

#[derive(Serialize)]
struct StageRow {
    stage: usize,
    elements: usize,
    facts: usize,
    v_omega: usize,
    entries_processed: usize,
}

#[derive(Serialize)]
struct AuditRow {
    stage: usize,
    position: usize,
    level: String,
    tuples: u64,
    case1: u64,
    case2: u64,
    case3: u64,
    v_alpha_before: usize,
    v_alpha_after: usize,
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn cmd_export(c: &Common) -> Result<Vec<String>, CliError> {
    let chain = match (&c.chain, &c.config) {
        (Some(path), _) => StageChain::from_json(&read(path)?)?,
        (None, Some(_)) => {
            let cfg = load_config(c)?;
            load_chain(c, &cfg)?
        }
        (None, None) => return Err(CliError::Usage("give --chain or --config".into())),
    };
    let mut written = Vec::new();
    for (i, m) in chain.stages.iter().enumerate() {
        written.push(write(&c.out_dir, &format!("stage-{i}.json"), &m.to_json())?);
    }
    let rows = chain.stages.iter().enumerate().map(|(i, m)| StageRow {
        stage: i,
        elements: m.len(),
        facts: m.fact_count(),
        v_omega: m.v_set(LevelOrdinal::OMEGA).len(),
        entries_processed: chain.processed(i).len(),
    });
    written.push(write(&c.out_dir, "stages.csv", &csv_string(rows)?)?);
    let audit = chain.audit.iter().enumerate().flat_map(|(i, s)| {
        s.entries.iter().map(move |e| AuditRow {
            stage: i + 1,
            position: e.position,
            level: e.level.to_string(),
            tuples: e.tuples,
            case1: e.case1,
            case2: e.case2,
            case3: e.case3,
            v_alpha_before: e.v_alpha_before,
            v_alpha_after: e.v_alpha_after,
        })
    });
    written.push(write(&c.out_dir, "audit.csv", &csv_string(audit)?)?);
    Ok(vec![format!(
        "exported {} files to {}",
        written.len(),
        c.out_dir.display()
    )])
}
