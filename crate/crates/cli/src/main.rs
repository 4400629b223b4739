//! Command-line entry point: `simulate`, `scan` and `verify`.
//!
//! Exit codes: 0 success; 1 internal failure or failing invariant; 2 invalid
//! configuration; 3 completed run with a non-finite abort or a violated
//! stability bound (downgraded to 0 by `--allow-instability`).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use planewave_core::error::Error;
use planewave_core::experiments::{
    negative_control, run_drift_experiment, write_drift_csv, write_drift_json, DriftReport,
    ExperimentConfig,
};
use planewave_core::resonance::{
    pass_fraction, rho_grid_scan, write_certificates_csv, RhoScanRow, ScanParams,
};
use planewave_core::verify::{run_checks, Fault};

const OUT_DIR_ENV: &str = "PLANEWAVE_OUT";

#[derive(Parser)]
#[command(name = "planewave", version, about = "Plane-wave stability toolkit for the cubic NLS on a torus")]
struct Cli {
    /// Output directory (default: $PLANEWAVE_OUT, then ./planewave-out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scans (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one drift experiment from a JSON config
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Exit 0 even when instability or blow-up was flagged
        #[arg(long)]
        allow_instability: bool,
    },
    /// Run a rho-grid non-resonance scan from a JSON config
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in invariant suite and print a pass/fail table
    Verify {
        /// Inject a deliberate fault (test hook)
        #[arg(long, hide = true)]
        fault: Option<String>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanConfig {
    rho_values: Vec<f64>,
    lambda: f64,
    r: usize,
    shell_cutoff: u64,
    alpha: f64,
    gamma_floor: f64,
    #[serde(default)]
    realizable_dim: Option<usize>,
}

impl ScanConfig {
    fn validate(&self) -> Result<(), String> {
        if self.rho_values.is_empty() {
            return Err("rho_values must not be empty".into());
        }
        if self.shell_cutoff == 0 {
            return Err("shell_cutoff must be >= 1 (no shells to scan otherwise)".into());
        }
        if self.r < 2 {
            return Err("r must be >= 2".into());
        }
        if self.lambda != 1.0 && self.lambda != -1.0 {
            return Err("lambda must be +1 or -1".into());
        }
        if !(self.gamma_floor >= 0.0) {
            return Err("gamma_floor must be nonnegative".into());
        }
        Ok(())
    }
}

/// Every output file is listed here; the manifest is written last, so its
/// presence marks a completed run.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_path: String,
    out_dir: String,
    tool_version: String,
    wall_clock_seconds: f64,
    steps: u64,
    outputs: Vec<String>,
    completed_unix: u64,
}

fn out_dir(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("planewave-out"))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config_path: &Path,
    steps: u64,
    outputs: &[String],
    started: Instant,
) -> std::io::Result<()> {
    let manifest = RunManifest {
        command: command.into(),
        config_path: config_path.display().to_string(),
        out_dir: dir.display().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        steps,
        outputs: outputs.to_vec(),
        completed_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let path = dir.join("manifest.json");
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

fn cmd_simulate(
    config_path: &Path,
    dir: &Path,
    allow_instability: bool,
    started: Instant,
) -> ExitCode {
    let cfg: ExperimentConfig = match read_json(config_path) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = cfg.validate() {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    let result: Result<DriftReport, Error> = if cfg.stable_regime() {
        run_drift_experiment(&cfg)
    } else {
        negative_control(&cfg)
    };
    let report = match result {
        Ok(r) => r,
        Err(e @ (Error::InvalidConfig(_) | Error::CertificationFailed { .. })) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
        Err(e @ (Error::NonFinite { .. } | Error::PerturbationTooLarge { .. })) => {
            eprintln!("run aborted: {e}");
            return ExitCode::from(if allow_instability { 0 } else { 3 });
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };

    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("cannot create output dir: {e}");
        return ExitCode::FAILURE;
    }
    let json_path = dir.join("drift_report.json");
    let csv_path = dir.join("drift_series.csv");
    let io = (|| -> Result<(), Error> {
        let mut jf = fs::File::create(&json_path)?;
        write_drift_json(&mut jf, &report)?;
        let mut cf = fs::File::create(&csv_path)?;
        write_drift_csv(&mut cf, &report)?;
        Ok(())
    })();
    if let Err(e) = io {
        eprintln!("cannot write reports: {e}");
        return ExitCode::FAILURE;
    }
    let outputs = vec![
        json_path.display().to_string(),
        csv_path.display().to_string(),
    ];
    if let Err(e) = write_manifest(dir, "simulate", config_path, report.steps, &outputs, started) {
        eprintln!("cannot write manifest: {e}");
        return ExitCode::FAILURE;
    }
    println!(
        "simulate: {} samples to t = {:.6}, coords = {}, max D = {:.6e}",
        report.times.len(),
        report.times.last().copied().unwrap_or(0.0),
        report.coords,
        planewave_core::experiments::max_drift(&report),
    );
    if report.flags.any() {
        eprintln!("flags: {:?}", report.flags);
        if !allow_instability {
            return ExitCode::from(3);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_scan(config_path: &Path, dir: &Path, started: Instant) -> ExitCode {
    let cfg: ScanConfig = match read_json(config_path) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = cfg.validate() {
        eprintln!("invalid scan config: {msg}");
        return ExitCode::from(2);
    }
    let params = ScanParams {
        r: cfg.r,
        shell_cutoff: cfg.shell_cutoff,
        alpha: cfg.alpha,
        realizable_dim: cfg.realizable_dim,
    };
    let rows: Vec<RhoScanRow<f64>> =
        rho_grid_scan(&cfg.rho_values, cfg.lambda, &params, cfg.gamma_floor);

    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("cannot create output dir: {e}");
        return ExitCode::FAILURE;
    }
    let csv_path = dir.join("certificates.csv");
    let json_path = dir.join("certificates.json");
    let io = (|| -> Result<(), Error> {
        let mut cf = fs::File::create(&csv_path)?;
        write_certificates_csv(&mut cf, &params, &rows)?;
        let mut jf = fs::File::create(&json_path)?;
        #[derive(Serialize)]
        struct ScanReport<'a> {
            schema_version: u32,
            config: &'a ScanConfig,
            pass_fraction: f64,
            rows: &'a [RhoScanRow<f64>],
        }
        serde_json::to_writer_pretty(
            &mut jf,
            &ScanReport {
                schema_version: 1,
                config: &cfg,
                pass_fraction: pass_fraction(&rows),
                rows: &rows,
            },
        )?;
        jf.write_all(b"\n")?;
        Ok(())
    })();
    if let Err(e) = io {
        eprintln!("cannot write certificates: {e}");
        return ExitCode::FAILURE;
    }
    let outputs = vec![
        csv_path.display().to_string(),
        json_path.display().to_string(),
    ];
    if let Err(e) = write_manifest(
        dir,
        "scan",
        config_path,
        cfg.rho_values.len() as u64,
        &outputs,
        started,
    ) {
        eprintln!("cannot write manifest: {e}");
        return ExitCode::FAILURE;
    }
    println!(
        "scan: {} rho values, pass fraction {:.3}",
        rows.len(),
        pass_fraction(&rows)
    );
    ExitCode::SUCCESS
}

fn cmd_verify(fault: Option<String>) -> ExitCode {
    let fault = match fault.as_deref() {
        None => Fault::None,
        Some("perturb-sn") => Fault::PerturbSnEntry,
        Some(other) => {
            eprintln!("unknown fault '{other}'");
            return ExitCode::from(2);
        }
    };
    let results = run_checks(fault);
    for r in &results {
        println!(
            "[{}] {:<28} measured {:>12.5e} (tolerance {:.1e}) - {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.measured,
            r.tolerance,
            r.detail
        );
    }
    if let Some(first) = results.iter().find(|r| !r.passed) {
        eprintln!("first failing invariant: {}", first.name);
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let dir = out_dir(&cli.out);
    match cli.command {
        Command::Simulate {
            config,
            allow_instability,
        } => cmd_simulate(&config, &dir, allow_instability, started),
        Command::Scan { config } => cmd_scan(&config, &dir, started),
        Command::Verify { fault } => cmd_verify(fault),
    }
}
