//! `lpki` — a desk-scale public-key infrastructure for resource-bound
//! devices, driven from the command line.
//!
//! Subcommands: `init` builds and persists a deterministic world;
//! `scenario` replays a scripted sequence of operations and checks
//! every expected outcome; `attack-demo` shows why certified public
//! keys must be checked point-by-point; `bench` compares signcryption
//! against sign-then-encrypt; `serve` answers infrastructure queries
//! over TCP.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lpki_cli::{attack, bench, config::Config, config::resolve_curve, scenario, serve};
use lpki_core::world::World;
use std::io::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "lpki",
    about = "lightweight public-key infrastructure testbed",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Create the world described by a config file and persist it.
    Init {
        /// Configuration file (key = value).
        #[arg(long)]
        config: PathBuf,
        /// Overwrite an existing world state.
        #[arg(long)]
        force: bool,
    },
    /// Run a scenario script against a fresh world and check outcomes.
    Scenario {
        /// Scenario script file.
        script: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed for this run.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Demonstrate the invalid-point attack and the checks that stop it.
    AttackDemo,
    /// Compare signcryption with sign-then-encrypt on one curve.
    Bench {
        /// Built-in curve name (toy17, p256) or a parameter file path.
        #[arg(long, default_value = "p256")]
        curve: String,
        /// Comma-separated message sizes in bytes.
        #[arg(long, default_value = "64,1024,65536")]
        sizes: String,
        /// Timing iterations per message size.
        #[arg(long, default_value_t = 100)]
        iters: u32,
    },
    /// Serve certificate, status, validation and timestamp queries over TCP.
    Serve {
        /// Address to bind, e.g. 127.0.0.1:7465 or 127.0.0.1:0.
        #[arg(long, default_value = "127.0.0.1:0")]
        listen: String,
        #[arg(long)]
        config: PathBuf,
    },
}

fn cmd_init(config_path: &PathBuf, force: bool) -> Result<()> {
    let config = Config::load(config_path)?;
    let state_file = config.state_file();
    if state_file.exists() && !force {
        bail!(
            "{} already holds a world; pass --force to overwrite",
            state_file.display()
        );
    }
    std::fs::create_dir_all(&config.state_dir)
        .with_context(|| format!("creating state directory {}", config.state_dir.display()))?;
    let wc = config.world_config(None)?;
    let curve_name = wc.params.name.clone();
    let seed = wc.seed;
    let world = World::new(wc).map_err(|e| anyhow::anyhow!("building world: {e}"))?;
    std::fs::write(&state_file, world.snapshot())
        .with_context(|| format!("writing {}", state_file.display()))?;
    println!("initialized world on curve {curve_name} (seed {seed})");
    println!("  registration-authority");
    println!("  certification-authority (hosts the revocation-status responder)");
    println!("  key-generation-server");
    println!(
        "  certificate-repository ({} entries)",
        world.repository.len()
    );
    println!("  validation-authority");
    println!("  timestamp-server");
    println!("  gateway");
    println!("state written to {}", state_file.display());
    Ok(())
}

fn cmd_scenario(script_path: &PathBuf, config_path: &PathBuf, seed: Option<u64>) -> Result<()> {
    let config = Config::load(config_path)?;
    let text = std::fs::read_to_string(script_path)
        .with_context(|| format!("reading scenario {}", script_path.display()))?;
    let steps = scenario::parse_script(&text)?;
    let wc = config.world_config(seed)?;
    println!(
        "scenario {} on curve {} (seed {})",
        script_path.display(),
        wc.params.name,
        wc.seed
    );
    let mut world = World::new(wc).map_err(|e| anyhow::anyhow!("building world: {e}"))?;
    let outcome = scenario::run(&mut world, &steps);
    print!("{}", outcome.report);
    std::io::stdout().flush().ok();
    std::fs::create_dir_all(&config.state_dir).ok();
    std::fs::write(config.state_file(), world.snapshot())
        .with_context(|| format!("writing {}", config.state_file().display()))?;
    if !outcome.matched {
        std::process::exit(1);
    }
    Ok(())
}

fn cmd_bench(curve: &str, sizes: &str, iters: u32) -> Result<()> {
    let params = resolve_curve(curve)?;
    let mut parsed = Vec::new();
    for part in sizes.split(',') {
        let size: usize = part
            .trim()
            .parse()
            .with_context(|| format!("bad size {part:?} in --sizes"))?;
        parsed.push(size);
    }
    let options = bench::BenchOptions {
        params,
        sizes: parsed,
        iterations: iters.max(1) as usize,
    };
    let stdout = std::io::stdout();
    bench::run(&options, &mut stdout.lock())?;
    Ok(())
}

fn cmd_serve(listen: &str, config_path: &PathBuf) -> Result<()> {
    let config = Config::load(config_path)?;
    let state_file = config.state_file();
    let bytes = std::fs::read(&state_file).with_context(|| {
        format!(
            "reading {} (run `lpki init` first)",
            state_file.display()
        )
    })?;
    let world =
        World::restore(&bytes).map_err(|e| anyhow::anyhow!("state file is unusable: {e}"))?;
    serve::run(world, &state_file, listen)
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        CliCommand::Init { config, force } => cmd_init(config, *force),
        CliCommand::Scenario {
            script,
            config,
            seed,
        } => cmd_scenario(script, config, *seed),
        CliCommand::AttackDemo => {
            let stdout = std::io::stdout();
            attack::run(&mut stdout.lock())
        }
        CliCommand::Bench {
            curve,
            sizes,
            iters,
        } => cmd_bench(curve, sizes, *iters),
        CliCommand::Serve { listen, config } => cmd_serve(listen, config),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
