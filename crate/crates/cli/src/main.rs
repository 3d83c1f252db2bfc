//! Scenario runner: `run` executes a config file, `sweep` repeats it over a
//! parameter grid, `demo` runs the built-in scenarios.
//!
//! Exit codes: 0 success, 1 config or io error, 2 a must-pass scenario
//! collided.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use trackfuse::lidar::dump_cloud_csv;
use trackfuse::sim::{metrics, run_scenario, RunOutput, ScenarioConfig};

#[derive(Parser)]
#[command(name = "trackfuse", about = "LiDAR+vision fusion scenario simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config and write the step log as CSV.
    Run {
        /// Scenario config file (TOML).
        #[arg(long)]
        scenario: PathBuf,
        /// RNG seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write per-frame fusion records as JSON lines.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Dump each synthesized point cloud as x,y,z CSV into a directory.
        #[arg(long)]
        dump_clouds: Option<PathBuf>,
    },
    /// Run one scenario repeatedly, overriding one dotted config key per
    /// value, and print a metrics row per run.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Dotted key, e.g. sensors.lidar_range_m
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a built-in scenario: ccrs, ccrm, ccrb, cipv-straight,
    /// cipv-curve or cipv-cross.
    Demo {
        name: String,
        /// Output CSV path (defaults to <name>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Sensor mode override: fusion, lidar_only or vision_only.
        #[arg(long)]
        mode: Option<String>,
        /// Print the scenario as TOML instead of running it.
        #[arg(long)]
        dump_config: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            frames,
            dump_clouds,
        } => {
            let mut cfg = ScenarioConfig::from_file(&scenario)
                .with_context(|| format!("loading {}", scenario.display()))?;
            if let Some(seed) = seed {
                cfg.scenario.seed = seed;
            }
            execute(&cfg, &out, frames.as_deref(), dump_clouds.as_deref())
        }
        Command::Demo {
            name,
            out,
            seed,
            frames,
            mode,
            dump_config,
        } => {
            let mut cfg = ScenarioConfig::demo(&name)
                .with_context(|| format!("unknown demo {name:?} (expected one of {:?})", ScenarioConfig::DEMO_NAMES))?;
            if let Some(seed) = seed {
                cfg.scenario.seed = seed;
            }
            if let Some(mode) = mode {
                cfg.scenario.fusion_mode = parse_mode(&mode)?;
            }
            if dump_config {
                print!("{}", toml::to_string(&cfg).context("serializing config")?);
                return Ok(ExitCode::SUCCESS);
            }
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
            execute(&cfg, &out, frames.as_deref(), None)
        }
        Command::Sweep {
            scenario,
            param,
            values,
            seed,
        } => {
            let text = std::fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let values: Vec<String> = values.split(',').map(|s| s.trim().to_string()).collect();
            sweep(&text, &param, &values, seed)
        }
    }
}

fn parse_mode(mode: &str) -> Result<trackfuse::sim::FusionMode> {
    use trackfuse::sim::FusionMode;
    Ok(match mode {
        "fusion" => FusionMode::Fusion,
        "lidar_only" => FusionMode::LidarOnly,
        "vision_only" => FusionMode::VisionOnly,
        other => bail!("unknown fusion mode {other:?}"),
    })
}

fn execute(
    cfg: &ScenarioConfig,
    out: &std::path::Path,
    frames: Option<&std::path::Path>,
    dump_clouds: Option<&std::path::Path>,
) -> Result<ExitCode> {
    let run = run_scenario(cfg).context("running scenario")?;
    std::fs::write(out, run.log.to_csv()).with_context(|| format!("writing {}", out.display()))?;

    if let Some(path) = frames {
        write_frames(&run, path)?;
    }
    if let Some(dir) = dump_clouds {
        dump_run_clouds(cfg, dir)?;
    }

    if let Some(m) = &run.metrics {
        println!("{} {}", cfg.scenario.name, m.summary());
        if cfg.scenario.must_pass && m.collision {
            eprintln!("must-pass scenario {} collided", cfg.scenario.name);
            return Ok(ExitCode::from(2));
        }
    } else {
        println!("{}: empty run (zero duration)", cfg.scenario.name);
    }
    Ok(ExitCode::SUCCESS)
}

fn write_frames(run: &RunOutput, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    for (_, records) in &run.frames {
        trackfuse::fusion::write_frame_line(&mut out, records)?;
    }
    out.flush()?;
    Ok(())
}

/// Re-synthesizes the clouds a run would see and dumps one CSV per sensor
/// frame. Kept separate from the run so the hot path never touches disk.
fn dump_run_clouds(cfg: &ScenarioConfig, dir: &std::path::Path) -> Result<()> {
    use trackfuse::lidar::{synthesize_cloud, LidarSynthConfig, TargetObs};
    std::fs::create_dir_all(dir)?;
    let synth = LidarSynthConfig {
        range: cfg.sensors.lidar_range_m,
        sensor_height: cfg.sensors.sensor_height_m,
        noise_sigma: cfg.sensors.lidar_noise_sigma_m,
        ..Default::default()
    };
    // Approximate ego trajectory is not replayed here; clouds are dumped in
    // the target's initial pose frame for inspection.
    let ticks = (cfg.scenario.duration / cfg.scenario.sensor_tick).round() as u64;
    for frame in 0..ticks {
        let t = frame as f64 * cfg.scenario.sensor_tick;
        let seed = cfg.scenario.seed.wrapping_mul(0x1000_0001) ^ frame;
        let obs = TargetObs {
            center_xy: [
                cfg.target.gap0_m + cfg.target.length_m / 2.0,
                cfg.target.lateral_m,
            ],
            size: (cfg.target.length_m, cfg.target.width_m, cfg.target.height_m),
        };
        let cloud = synthesize_cloud(&[obs], &synth, t, seed);
        dump_cloud_csv(&cloud, dir, frame as usize)
            .map_err(|e| anyhow::anyhow!("dumping cloud: {e}"))?;
    }
    Ok(())
}

fn sweep(base_toml: &str, param: &str, values: &[String], seed: Option<u64>) -> Result<ExitCode> {
    let runs: Vec<Result<String>> = maybe_parallel(values, |value| {
        let table: toml::Table = base_toml.parse().context("parsing scenario config")?;
        let mut doc = toml::Value::Table(table);
        set_dotted(&mut doc, param, value)?;
        let mut cfg: ScenarioConfig =
            doc.try_into().context("applying parameter override")?;
        cfg.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        if let Some(seed) = seed {
            cfg.scenario.seed = seed;
        }
        let run = run_scenario(&cfg).context("running scenario")?;
        let m = metrics(&run.log, &cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(format!("{param}={value} {}", m.summary()))
    });
    for line in runs {
        println!("{}", line?);
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(feature = "parallel")]
fn maybe_parallel<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn maybe_parallel<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Sets a dotted key like `sensors.lidar_range_m` in a TOML document,
/// parsing the value as float, integer, boolean or string.
fn set_dotted(doc: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().context("empty parameter key")?;
    for part in path {
        node = node
            .as_table_mut()
            .with_context(|| format!("{part} is not a table"))?
            .entry(*part)
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node.as_table_mut().context("parameter path is not a table")?;
    let value = if let Ok(i) = raw.parse::<i64>() {
        // Keep float-typed fields float even when the value looks integral.
        match table.get(*last) {
            Some(toml::Value::Float(_)) => toml::Value::Float(i as f64),
            _ => toml::Value::Integer(i),
        }
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = raw.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(raw.to_string())
    };
    table.insert(last.to_string(), value);
    Ok(())
}
