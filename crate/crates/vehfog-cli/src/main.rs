use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vehfog::mobility::TraceGenParams;
use vehfog::protocols::ProtocolKind;
use vehfog::radio::{AttenuationParams, LinkBudget};

use vehfog_cli::commands::{
    execute_scenario, execute_sweep, link_breakdown, manhattan_map, run_summary, write_map,
    write_run_outputs, write_sweep_outputs, write_trace, LinkArgs, ManhattanParams,
};
use vehfog_cli::config::{help_text, Config};

#[derive(Parser)]
#[command(
    name = "vehfog",
    version,
    about = "Deterministic simulator for critical-message dissemination in vehicular networks \
             with obstacle shadowing, fog relays and multi-hop forwarding",
    after_help = help_text()
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario; writes events/hops/frames/results CSVs
    Run(RunArgs),
    /// Run a protocol x density x seed grid; writes aggregated results and plot data
    Sweep(SweepArgs),
    /// One-shot link-budget calculator
    Link(LinkCmdArgs),
    /// Generate input files
    #[command(subcommand)]
    Gen(GenCmd),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (defaults apply when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the run seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the protocol
    #[arg(long)]
    protocol: Option<String>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Print the fully resolved configuration and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated vehicle densities
    #[arg(long, default_value = "50,100,150,200,250,300")]
    densities: String,
    /// Comma-separated seeds
    #[arg(long, default_value = "1,2,3,4,5,6,7,8,9,10")]
    seeds: String,
    /// Comma-separated protocols (defaults to all five)
    #[arg(long)]
    protocols: Option<String>,
    /// Worker threads; 0 picks the machine default
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value = "sweep_out")]
    out_dir: PathBuf,
    /// Print the fully resolved base configuration and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct LinkCmdArgs {
    /// Transmitter-receiver distance, m
    #[arg(long)]
    distance: f64,
    /// Exterior-wall crossings along the path
    #[arg(long, default_value_t = 0)]
    crossings: u32,
    /// Path length inside buildings, m
    #[arg(long, default_value_t = 0.0)]
    l_obs: f64,
    /// Attenuation per wall crossing, dB
    #[arg(long, default_value_t = 9.0)]
    alpha: f64,
    /// Attenuation per in-building meter, dB/m
    #[arg(long, default_value_t = 0.4)]
    beta: f64,
    /// Transmit power, dBm
    #[arg(long, default_value_t = 20.0)]
    tx_power: f64,
    /// Carrier frequency, MHz
    #[arg(long, default_value_t = 5900.0)]
    freq: f64,
    /// Receiver sensitivity, dBm
    #[arg(long, default_value_t = -85.0)]
    sensitivity: f64,
    /// Shadow-classification margin, dB
    #[arg(long, default_value_t = 3.0)]
    margin: f64,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Manhattan-style grid of rectangular buildings
    Map(GenMapArgs),
    /// Straight-road vehicle trace CSV
    Trace(GenTraceArgs),
}

#[derive(Args)]
struct GenMapArgs {
    #[arg(long)]
    out: PathBuf,
    /// Blocks along x
    #[arg(long)]
    nx: u32,
    /// Block rows along y
    #[arg(long)]
    ny: u32,
    /// Block size, m (both axes unless overridden)
    #[arg(long, default_value_t = 80.0)]
    block_m: f64,
    /// Block width override, m
    #[arg(long)]
    block_x_m: Option<f64>,
    /// Block height override, m
    #[arg(long)]
    block_y_m: Option<f64>,
    /// Street width, m
    #[arg(long, default_value_t = 20.0)]
    street_m: f64,
    /// Building inset from the block edge, m
    #[arg(long, default_value_t = 0.0)]
    inset_m: f64,
    /// Per-row x offset, m
    #[arg(long, default_value_t = 0.0)]
    stagger_m: f64,
}

#[derive(Args)]
struct GenTraceArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    n_vehicles: u32,
    #[arg(long, default_value_t = 10_000.0)]
    road_length_m: f64,
    #[arg(long, default_value_t = 3)]
    lanes: u32,
    #[arg(long, default_value_t = 3.5)]
    lane_spacing_m: f64,
    #[arg(long, default_value_t = 2.0)]
    road_y0_m: f64,
    /// Minimum speed, m/s (30 mph = 13.41)
    #[arg(long, default_value_t = 13.41)]
    speed_min_mps: f64,
    /// Maximum speed, m/s (50 mph = 22.35)
    #[arg(long, default_value_t = 22.35)]
    speed_max_mps: f64,
    #[arg(long, default_value_t = 10.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 1.0)]
    dt_s: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

enum Failure {
    /// Bad configuration or arguments: exit 1.
    Config(anyhow::Error),
    /// A run failed at execution time: exit 2.
    Runtime(anyhow::Error),
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, Failure> {
    match path {
        Some(p) => Config::load(p).map_err(Failure::Config),
        None => Ok(Config::default()),
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| Failure::Config(anyhow::anyhow!("invalid {what} {s:?}: {e}")))
        })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.set("seed", seed.to_string()).map_err(Failure::Config)?;
    }
    if let Some(protocol) = &args.protocol {
        cfg.set("protocol", protocol.clone()).map_err(Failure::Config)?;
    }
    if args.print_config {
        print!("{}", cfg.resolved_dump());
        return Ok(());
    }
    let scenario = cfg.build_scenario().map_err(Failure::Config)?;
    let artifacts = execute_scenario(scenario).map_err(Failure::Runtime)?;
    write_run_outputs(&artifacts, &args.out_dir).map_err(Failure::Runtime)?;
    print!("{}", run_summary(&artifacts));
    println!("outputs written to {}", args.out_dir.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    if args.print_config {
        print!("{}", cfg.resolved_dump());
        return Ok(());
    }
    let densities: Vec<u32> = parse_list(&args.densities, "density")?;
    let seeds: Vec<u64> = parse_list(&args.seeds, "seed")?;
    let protocols: Vec<ProtocolKind> = match &args.protocols {
        Some(raw) => parse_list(raw, "protocol")?,
        None => ProtocolKind::ALL.to_vec(),
    };
    // validate the base configuration before burning time on the grid
    {
        let mut probe = cfg.clone();
        probe.set("protocol", protocols[0].name()).map_err(Failure::Config)?;
        probe
            .set("trace.n_vehicles", densities[0].to_string())
            .map_err(Failure::Config)?;
        probe.set("seed", seeds[0].to_string()).map_err(Failure::Config)?;
        probe.build_scenario().map_err(Failure::Config)?;
    }
    let result = execute_sweep(&cfg, &protocols, &densities, &seeds, args.jobs, false);
    match result {
        Ok(artifacts) => {
            write_sweep_outputs(&artifacts, &args.out_dir).map_err(Failure::Runtime)?;
            println!(
                "{} runs -> {}/results.csv (+{} plot files)",
                artifacts.rows.len(),
                args.out_dir.display(),
                artifacts.plots.len()
            );
            Ok(())
        }
        Err(e) => Err(Failure::Runtime(e)),
    }
}

fn cmd_link(args: LinkCmdArgs) -> Result<(), Failure> {
    let out = link_breakdown(&LinkArgs {
        distance_m: args.distance,
        crossings: args.crossings,
        l_obs_m: args.l_obs,
        link: LinkBudget {
            tx_power_dbm: args.tx_power,
            freq_mhz: args.freq,
            sensitivity_dbm: args.sensitivity,
            margin_db: args.margin,
            ..LinkBudget::default()
        },
        atten: AttenuationParams { alpha_db: args.alpha, beta_db_per_m: args.beta },
    })
    .map_err(Failure::Config)?;
    print!("{out}");
    Ok(())
}

fn cmd_gen(cmd: GenCmd) -> Result<(), Failure> {
    match cmd {
        GenCmd::Map(args) => {
            let map = manhattan_map(&ManhattanParams {
                nx: args.nx,
                ny: args.ny,
                block_x_m: args.block_x_m.unwrap_or(args.block_m),
                block_y_m: args.block_y_m.unwrap_or(args.block_m),
                street_m: args.street_m,
                inset_m: args.inset_m,
                stagger_m: args.stagger_m,
            })
            .map_err(Failure::Config)?;
            write_map(&map, &args.out).map_err(Failure::Runtime)?;
            println!("{} buildings -> {}", map.buildings().len(), args.out.display());
            Ok(())
        }
        GenCmd::Trace(args) => {
            let params = TraceGenParams {
                n_vehicles: args.n_vehicles,
                road_length_m: args.road_length_m,
                lanes: args.lanes,
                lane_spacing_m: args.lane_spacing_m,
                road_y0_m: args.road_y0_m,
                speed_range_mps: (args.speed_min_mps, args.speed_max_mps),
                duration_s: args.duration_s,
                dt_s: args.dt_s,
                seed: args.seed,
            };
            write_trace(&params, &args.out).map_err(Failure::Config)?;
            println!("trace -> {}", args.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Link(args) => cmd_link(args),
        Cmd::Gen(cmd) => cmd_gen(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
