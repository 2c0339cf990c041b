//! Command-line driver: exact identity checks and Monte Carlo estimates.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use icetorus_core::mcmc::{self, horizontal_pair, ChainConfig, SpinObservables};
use icetorus_core::oracle::{verify_suite, IdentityReport, Limits, SuiteOptions};
use icetorus_core::six_vertex::parse_weight;
use icetorus_core::{Error, Estimate, ModelParams, Sector, Torus};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

const FINITE_VOLUME: &str = "estimates are taken on the finite torus, which stands in for infinite volume";

#[derive(Parser, Debug)]
#[command(name = "icetorus", version, about = "Six-vertex model on the torus: exact identities and Monte Carlo estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every exact identity on an enumerable torus.
    Verify(VerifyArgs),
    /// Two-point spin correlation of black faces at horizontal distances.
    Twopoint(ChainArgs),
    /// Variance of height differences at horizontal distances.
    Heightvar(ChainArgs),
    /// Mean number of loops separating two black faces.
    Loops(ChainArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SectorArg {
    All,
    Zero,
}

impl From<SectorArg> for Sector {
    fn from(s: SectorArg) -> Sector {
        match s {
            SectorArg::All => Sector::All,
            SectorArg::Zero => Sector::Zero,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Torus size as WxH, both even.
    #[arg(long, default_value = "4x2", value_parser = parse_size)]
    size: (usize, usize),
    /// Vertex weight: a decimal in [1, 2], `sqrt3` or `sqrt2+sqrt2`.
    #[arg(long = "c", default_value = "2", value_parser = parse_c)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; results go to standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum, default_value = "all")]
    sector: SectorArg,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Include wall-clock times in the reports and manifest.
    #[arg(long)]
    record_time: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Sampled four-face tuples for the correlation identity.
    #[arg(long, default_value_t = 24)]
    quadruples: usize,
    /// Lift the enumeration caps.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ChainArgs {
    #[command(flatten)]
    common: Common,
    /// Sweeps per chain, burn-in included.
    #[arg(long, default_value_t = 100_000)]
    sweeps: u64,
    /// Defaults to a tenth of the sweeps.
    #[arg(long)]
    burnin: Option<u64>,
    #[arg(long, default_value_t = 10)]
    thin: u64,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Comma-separated horizontal distances.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    distances: Vec<usize>,
    /// Turn off the band-negation move of the spin chain.
    #[arg(long)]
    no_band: bool,
    /// Skip the loop-side estimate of `twopoint`.
    #[arg(long)]
    spin_only: bool,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width {w:?}"))?;
    let h = h.trim().parse().map_err(|_| format!("bad height {h:?}"))?;
    Ok((w, h))
}

fn parse_c(s: &str) -> Result<f64, String> {
    parse_weight(s).map_err(|e| e.to_string())
}

/// Output row of the chain commands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub distance: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub chain_count: usize,
}

#[derive(Debug, Serialize)]
struct ChainReport<'a> {
    schema_version: u32,
    command: &'a str,
    note: &'a str,
    rows: Vec<Row>,
    estimates: Vec<(usize, &'a Estimate)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loop_side: Option<Vec<(usize, &'a Estimate)>>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, A: Serialize> {
    schema_version: u32,
    command: &'a str,
    code_version: &'a str,
    seed: u64,
    /// Stream of each chain, per dynamics.
    chain_streams: Vec<(usize, u64, u64)>,
    parameters: &'a A,
    acceptance: serde_json::Value,
    estimates: serde_json::Value,
    outputs: Vec<String>,
    note: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    started_unix_ms: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    finished_unix_ms: Option<u128>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Failure with its exit code.
struct Failure {
    code: i32,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Failure {
        let code = match err.downcast_ref::<Error>() {
            Some(Error::SizeCap { .. }) => EXIT_CAP,
            Some(_) => EXIT_USAGE,
            None => EXIT_FAIL,
        };
        Failure { code, err }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::from(anyhow::Error::new(e))
    }
}

/// Parse `args` and run the command, writing results without `--out` to
/// `stdout`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match &cli.command {
        Command::Verify(a) => a.common.threads,
        Command::Twopoint(a) | Command::Heightvar(a) | Command::Loops(a) => a.common.threads,
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAIL;
        }
    };
    let mut buf = Vec::new();
    let result = pool.install(|| {
        let sink: &mut dyn Write = &mut buf;
        match &cli.command {
            Command::Verify(a) => verify(a, sink),
            Command::Twopoint(a) => chain_command("twopoint", a, sink),
            Command::Heightvar(a) => chain_command("heightvar", a, sink),
            Command::Loops(a) => chain_command("loops", a, sink),
        }
    });
    if stdout.write_all(&buf).and_then(|_| stdout.flush()).is_err() {
        return EXIT_FAIL;
    }
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            f.code
        }
    }
}

fn torus_and_params(common: &Common) -> Result<(Torus, ModelParams), Failure> {
    let t = Torus::new(common.size.0, common.size.1)?;
    let p = ModelParams::new(common.c)?;
    Ok((t, p))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn emit(out: &Option<PathBuf>, body: &[u8], stdout: &mut dyn Write) -> Result<Vec<String>, Failure> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, body).with_context(|| format!("writing {}", p.display()))?;
            Ok(vec![p.display().to_string()])
        }
        None => {
            stdout.write_all(body).context("writing standard output")?;
            Ok(vec![])
        }
    }
}

/// Manifests are JSON Lines files; each run appends one record.
fn append_manifest<A: Serialize>(out: &Option<PathBuf>, m: &Manifest<A>) -> Result<(), Failure> {
    let Some(p) = out else { return Ok(()) };
    let path = manifest_path(p);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    let line = serde_json::to_string(m).context("encoding manifest")?;
    writeln!(f, "{line}").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let started = a.common.record_time.then(now_ms);
    let (t, p) = torus_and_params(&a.common)?;
    let limits = Limits {
        force: a.force,
        ..Limits::default()
    };
    let opts = SuiteOptions {
        limits,
        sampled_quadruples: a.quadruples,
        seed: a.common.seed,
        record_time: a.common.record_time,
        sector: a.common.sector.into(),
    };
    let reports = verify_suite(&t, &p, &opts)?;
    let body = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s = String::new();
            for r in &reports {
                s.push_str(&r.to_json_line());
                s.push('\n');
            }
            s.into_bytes()
        }
        Format::Csv => reports_csv(&reports)?,
    };
    let outputs = emit(&a.common.out, &body, stdout)?;
    let pass = reports.iter().all(|r| r.pass);
    append_manifest(
        &a.common.out,
        &Manifest {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            code_version: env!("CARGO_PKG_VERSION"),
            seed: a.common.seed,
            chain_streams: vec![],
            parameters: a,
            acceptance: serde_json::Value::Null,
            estimates: serde_json::json!({ "all_pass": pass }),
            outputs,
            note: "exact enumeration",
            started_unix_ms: started,
            finished_unix_ms: started.map(|_| now_ms()),
        },
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn reports_csv(reports: &[IdentityReport]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["identity", "width", "height", "c", "left", "right", "deviation", "tolerance", "pass"])
        .context("csv")?;
    for r in reports {
        w.write_record([
            r.identity.clone(),
            r.width.to_string(),
            r.height.to_string(),
            r.c.to_string(),
            r.left.to_string(),
            r.right.to_string(),
            r.deviation.to_string(),
            r.tolerance.to_string(),
            r.pass.to_string(),
        ])
        .context("csv")?;
    }
    Ok(w.into_inner().context("csv")?)
}

fn chain_config(a: &ChainArgs) -> Result<ChainConfig, Failure> {
    let (t, p) = torus_and_params(&a.common)?;
    let cfg = ChainConfig {
        torus: t,
        params: p,
        seed: a.common.seed,
        sweeps: a.sweeps,
        burn_in: a.burnin.unwrap_or(a.sweeps / 10),
        thin: a.thin,
        chains: a.chains,
        band_moves: !a.no_band,
        sector: a.common.sector.into(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn rows(distances: &[usize], est: &[Estimate], chains: usize) -> Vec<Row> {
    distances
        .iter()
        .zip(est)
        .map(|(&d, e)| Row {
            distance: d,
            estimate: e.mean,
            stderr: e.stderr,
            samples: e.samples,
            chain_count: chains,
        })
        .collect()
}

fn chain_command(name: &str, a: &ChainArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let started = a.common.record_time.then(now_ms);
    let cfg = chain_config(a)?;
    let t = cfg.torus;
    let pairs = || -> Result<Vec<_>, Failure> {
        a.distances
            .iter()
            .map(|&d| {
                if d >= t.width() {
                    return Err(Failure::from(Error::DistanceGuard {
                        distance: d,
                        limit: t.width() - 1,
                    }));
                }
                Ok(horizontal_pair(&t, d))
            })
            .collect()
    };
    let mut acceptance = serde_json::Map::new();
    let (main, loop_side) = match name {
        "twopoint" => {
            let pairs = pairs()?;
            let spin = mcmc::run_spin(
                &cfg,
                &SpinObservables {
                    pairs: pairs.clone(),
                    height_distances: vec![],
                },
            )?;
            acceptance.insert("spin".into(), serde_json::json!(spin.acceptance));
            acceptance.insert("band".into(), serde_json::json!(spin.band_moves));
            let loops = if a.spin_only {
                None
            } else {
                let b = mcmc::run_bond(&cfg, &pairs)?;
                acceptance.insert("bond".into(), serde_json::json!(b.acceptance));
                Some(b.two_point)
            };
            (spin.two_point, loops)
        }
        "heightvar" => {
            let spin = mcmc::run_spin(
                &cfg,
                &SpinObservables {
                    pairs: vec![],
                    height_distances: a.distances.clone(),
                },
            )?;
            acceptance.insert("spin".into(), serde_json::json!(spin.acceptance));
            acceptance.insert("band".into(), serde_json::json!(spin.band_moves));
            (spin.height_variance, None)
        }
        _ => {
            let b = mcmc::run_bond(&cfg, &pairs()?)?;
            acceptance.insert("bond".into(), serde_json::json!(b.acceptance));
            (b.separating, None)
        }
    };
    let table = rows(&a.distances, &main, cfg.chains);
    let body = match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &table {
                w.serialize(r).context("csv")?;
            }
            w.into_inner().context("csv")?
        }
        Format::Json => {
            let report = ChainReport {
                schema_version: SCHEMA_VERSION,
                command: name,
                note: FINITE_VOLUME,
                rows: table.clone(),
                estimates: a.distances.iter().copied().zip(&main).collect(),
                loop_side: loop_side
                    .as_ref()
                    .map(|l| a.distances.iter().copied().zip(l).collect()),
            };
            let mut s = serde_json::to_string_pretty(&report).context("json")?;
            s.push('\n');
            s.into_bytes()
        }
    };
    let outputs = emit(&a.common.out, &body, stdout)?;
    let streams = (0..cfg.chains)
        .map(|i| (i, 2 * i as u64, 2 * i as u64 + 1))
        .collect();
    let mut estimates = serde_json::json!({ "main": a.distances.iter().copied().zip(&main).collect::<Vec<_>>() });
    if let Some(l) = &loop_side {
        estimates["loop_side"] = serde_json::json!(a.distances.iter().copied().zip(l).collect::<Vec<_>>());
    }
    append_manifest(
        &a.common.out,
        &Manifest {
            schema_version: SCHEMA_VERSION,
            command: name,
            code_version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            chain_streams: streams,
            parameters: a,
            acceptance: serde_json::Value::Object(acceptance),
            estimates,
            outputs,
            note: FINITE_VOLUME,
            started_unix_ms: started,
            finished_unix_ms: started.map(|_| now_ms()),
        },
    )?;
    Ok(EXIT_OK)
}
