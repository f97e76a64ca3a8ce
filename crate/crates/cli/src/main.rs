//! `safespect`: headless operation of the inspection simulator.
//!
//! Exit codes: 0 ok, 1 scenario violations, 2 unreadable or corrupt input,
//! 3 scenario/script mismatch, 4 replay divergence, 5 cannot listen.

use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use safespect_core::canonical;
use safespect_core::config::EngineConfig;
use safespect_core::hud::InterfaceMode;
use safespect_core::mission::Metrics;
use safespect_core::scenario::{parse_scenario_unchecked, validate_scenario, ScenarioSpec};
use safespect_core::script::{parse_script, Script};
use safespect_core::telemetry::{metrics_from_log, parse_log, replay_log, run_inputs, ParsedLog, TelemetryLog};
use safespect_server::{ServeError, Server, ServerConfig};

/// Used when `--scenario` is not given.
const STOCK_SCENARIO: &str = include_str!("../../../scenarios/short-facade.scenario.json");
const TELEMETRY_FILE: &str = "flight.telemetry.jsonl";
const METRICS_FILE: &str = "metrics.json";

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_DIVERGED: u8 = 4;
const EXIT_BIND: u8 = 5;

#[derive(Parser)]
#[command(name = "safespect", version, about = "Drone facade inspection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario document and list broken invariants.
    Validate { path: PathBuf },
    /// Fly a scripted mission headless and write telemetry and metrics.
    Fly {
        #[command(flatten)]
        run: RunArgs,
        /// Per-tick input script; none flies with idle sticks.
        #[arg(long, env = "SAFESPECT_SCRIPT")]
        script: Option<PathBuf>,
    },
    /// Recompute mission metrics from a telemetry log.
    Metrics { telemetry: PathBuf },
    /// Re-run a telemetry log and compare it tick by tick.
    Replay { telemetry: PathBuf },
    /// Serve a session to one cockpit over WebSocket.
    Serve {
        #[command(flatten)]
        run: RunArgs,
        /// Drive the session from a script instead of live input.
        #[arg(long, env = "SAFESPECT_SCRIPT")]
        script: Option<PathBuf>,
        #[arg(long, env = "SAFESPECT_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        /// 0 picks a free port.
        #[arg(long, env = "SAFESPECT_PORT", default_value_t = 8765)]
        port: u16,
        /// Simulated seconds per wall second; 0 runs flat out.
        #[arg(long, env = "SAFESPECT_REALTIME_FACTOR", default_value_t = 1.0)]
        realtime_factor: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario document; defaults to the bundled short facade.
    #[arg(long, env = "SAFESPECT_SCENARIO")]
    scenario: Option<PathBuf>,
    /// Interface mode: 2d, full or adapt (or twod_only, full_ar, adapt_ar).
    #[arg(long, env = "SAFESPECT_MODE", default_value = "adapt", value_parser = InterfaceMode::from_str)]
    mode: InterfaceMode,
    /// Directory for the telemetry log and metrics report.
    #[arg(long, env = "SAFESPECT_OUT")]
    out: Option<PathBuf>,
    /// Replace the scenario's seed.
    #[arg(long, env = "SAFESPECT_SEED_OVERRIDE")]
    seed_override: Option<u64>,
    /// Engine config document; defaults apply to anything it omits.
    #[arg(long, env = "SAFESPECT_ENGINE_CONFIG")]
    engine_config: Option<PathBuf>,
}

/// A failed command: what to print and which code to exit with.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SAFESPECT_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { path } => validate(&path),
        Command::Fly { run, script } => fly(&run, script.as_deref()),
        Command::Metrics { telemetry } => metrics(&telemetry),
        Command::Replay { telemetry } => replay(&telemetry),
        Command::Serve {
            run,
            script,
            host,
            port,
            realtime_factor,
        } => serve(&run, script.as_deref(), SocketAddr::new(host, port), realtime_factor),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_INVALID, format!("{}: {e}", path.display())))
}

/// Parse a scenario, failing with the violation list if it is invalid.
fn scenario_from(text: &str, origin: &str) -> Result<ScenarioSpec, Failure> {
    let spec = parse_scenario_unchecked(text).map_err(|e| Failure::new(EXIT_INVALID, format!("{origin}: {e}")))?;
    let violations = validate_scenario(&spec);
    if !violations.is_empty() {
        for v in &violations {
            println!("{v}");
        }
        return Err(Failure::new(
            EXIT_VIOLATIONS,
            format!("{origin}: {} violation(s)", violations.len()),
        ));
    }
    Ok(spec)
}

fn load_run(args: &RunArgs) -> Result<(ScenarioSpec, EngineConfig), Failure> {
    let mut spec = match &args.scenario {
        Some(p) => scenario_from(&read(p)?, &p.display().to_string())?,
        None => scenario_from(STOCK_SCENARIO, "bundled short-facade")?,
    };
    if let Some(seed) = args.seed_override {
        spec.seed = seed;
    }
    let config = match &args.engine_config {
        Some(p) => EngineConfig::parse(&read(p)?)
            .map_err(|e| Failure::new(EXIT_INVALID, format!("{}: {e}", p.display())))?,
        None => EngineConfig::default(),
    };
    Ok((spec, config))
}

fn load_script(path: Option<&Path>, spec: &ScenarioSpec) -> Result<Option<Script>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let script =
        parse_script(&read(path)?).map_err(|e| Failure::new(EXIT_INVALID, format!("{}: {e}", path.display())))?;
    script
        .check(spec)
        .map_err(|e| Failure::new(EXIT_MISMATCH, format!("{}: {e}", path.display())))?;
    Ok(Some(script))
}

fn load_log(path: &Path) -> Result<ParsedLog, Failure> {
    parse_log(&read(path)?).map_err(|e| Failure::new(EXIT_INVALID, format!("{}: {e}", path.display())))
}

fn write_outputs(out: Option<&Path>, log: &TelemetryLog, metrics: &Metrics) -> Outcome {
    let Some(dir) = out else { return Ok(()) };
    let io = |e: std::io::Error| Failure::new(EXIT_INVALID, format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join(TELEMETRY_FILE), log.to_jsonl(Some(metrics))).map_err(io)?;
    fs::write(dir.join(METRICS_FILE), canonical::to_pretty(metrics)).map_err(io)?;
    Ok(())
}

fn validate(path: &Path) -> Outcome {
    let spec = scenario_from(&read(path)?, &path.display().to_string())?;
    println!("ok: {} ({} defects, seed {})", spec.name, spec.defects.len(), spec.seed);
    Ok(())
}

fn fly(args: &RunArgs, script: Option<&Path>) -> Outcome {
    let (spec, config) = load_run(args)?;
    let script = load_script(script, &spec)?.unwrap_or_default();
    let run = run_inputs(&spec, &config, args.mode, &script.dense(), true)
        .map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    write_outputs(args.out.as_deref(), &run.log, &run.metrics)?;
    println!("{}", canonical::to_pretty(&run.metrics));
    Ok(())
}

fn metrics(path: &Path) -> Outcome {
    let log = load_log(path)?;
    let m = metrics_from_log(&log).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    if let Some(footer) = &log.footer {
        if footer.metrics != m {
            eprintln!("warning: recomputed metrics differ from the footer written during the run");
        }
    }
    println!("{}", canonical::to_pretty(&m));
    Ok(())
}

fn replay(path: &Path) -> Outcome {
    let log = load_log(path)?;
    let report = replay_log(&log).map_err(|e| Failure::new(EXIT_MISMATCH, e.to_string()))?;
    match report.first_divergence {
        Some(tick) => Err(Failure::new(EXIT_DIVERGED, format!("replay diverged at tick {tick}"))),
        None => {
            println!("identical: {} ticks, stream hash {}", report.ticks, report.stream_hash);
            Ok(())
        }
    }
}

fn serve(args: &RunArgs, script: Option<&Path>, addr: SocketAddr, realtime_factor: f64) -> Outcome {
    let (spec, engine) = load_run(args)?;
    let script = load_script(script, &spec)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    runtime.block_on(async {
        let server = Server::bind(ServerConfig {
            spec,
            engine,
            mode: args.mode,
            realtime_factor,
            script,
            addr,
        })
        .await
        .map_err(serve_failure)?;
        println!(
            "listening on ws://{} (mode {})",
            server.local_addr(),
            args.mode.as_str()
        );
        let outcome = server.run().await.map_err(serve_failure)?;
        write_outputs(args.out.as_deref(), &outcome.log, &outcome.metrics)?;
        println!("{}", canonical::to_pretty(&outcome.metrics));
        Ok(())
    })
}

fn serve_failure(e: ServeError) -> Failure {
    let code = match e {
        ServeError::Bind { .. } => EXIT_BIND,
        ServeError::Config(_) | ServeError::Io(_) => EXIT_INVALID,
    };
    Failure::new(code, e.to_string())
}
