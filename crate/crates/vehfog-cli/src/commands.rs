//! Command implementations behind the CLI surface.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use vehfog::engine::{run_simulation, EventLog};
use vehfog::geometry::{ObstacleMap, Obstruction, Rect};
use vehfog::metrics::{compute_metrics, plot_data, results_csv, MetricsReport, ReportRow};
use vehfog::mobility::{generate_trace, TraceGenParams};
use vehfog::protocols::ProtocolKind;
use vehfog::radio::{fspl_db, obstacle_attenuation, received_power, AttenuationParams, LinkBudget};
use vehfog::scenario::Scenario;

use crate::config::Config;

pub struct RunArtifacts {
    pub scenario: Scenario,
    pub log: EventLog,
    pub report: MetricsReport,
    pub row: ReportRow,
}

/// Builds the scenario from a configuration, runs it, computes metrics.
pub fn execute_run(cfg: &Config) -> Result<RunArtifacts> {
    execute_scenario(cfg.build_scenario()?)
}

/// Runs an already-built scenario and computes its metrics.
pub fn execute_scenario(scenario: Scenario) -> Result<RunArtifacts> {
    let log = run_simulation(&scenario).context("simulation failed")?;
    let n_users = scenario.trace.vehicle_ids().len() as u32;
    let report = compute_metrics(&log, n_users, scenario.dmax_s)
        .context("no intended receivers; check msg.schedule and vehicle density")?;
    let row = ReportRow {
        protocol: scenario.protocol,
        n_vehicles: n_users,
        seed: scenario.seed,
        report,
    };
    Ok(RunArtifacts { scenario, log, report, row })
}

/// Writes the run's log and results files into `out_dir`.
pub fn write_run_outputs(artifacts: &RunArtifacts, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    fs::write(out_dir.join("events.csv"), artifacts.log.outcomes_csv())?;
    fs::write(out_dir.join("hops.csv"), artifacts.log.hops_csv())?;
    fs::write(out_dir.join("frames.csv"), artifacts.log.frames_csv())?;
    fs::write(out_dir.join("results.csv"), results_csv(std::slice::from_ref(&artifacts.row)))?;
    Ok(())
}

/// Human summary printed by `run`.
pub fn run_summary(artifacts: &RunArtifacts) -> String {
    let r = &artifacts.report;
    let c = &r.counts;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "protocol {} vehicles {} seed {}",
        artifacts.row.protocol, artifacts.row.n_vehicles, artifacts.row.seed
    );
    let _ = writeln!(out, "delivery_prob {:.6}", r.delivery_probability);
    let _ = writeln!(
        out,
        "delay_s mean {:.6} p50 {:.6} p95 {:.6} max {:.6}",
        r.delay.mean_s, r.delay.p50_s, r.delay.p95_s, r.delay.max_s
    );
    let _ = writeln!(out, "collision_ratio {:.6}", r.collision_ratio);
    let _ = writeln!(out, "m_success {:.6}", r.m_success);
    let _ = writeln!(
        out,
        "pairs intended {} delivered {} collided {} dropped_shadow {} out_of_range {}",
        c.intended, c.delivered, c.collided, c.dropped_shadow, c.out_of_range
    );
    let _ = writeln!(out, "frames sent {} collided {}", c.frames_sent, c.frames_collided);
    for m in &artifacts.log.no_neighbor_msgs {
        let _ = writeln!(out, "message {m}: no nearby vehicles were located");
    }
    out
}

pub struct SweepArtifacts {
    pub rows: Vec<ReportRow>,
    pub results_csv: String,
    pub plots: Vec<(String, String)>,
    /// Per-run logs in row order, kept only on request.
    pub logs: Option<Vec<(ReportRow, EventLog)>>,
}

/// Cross product of runs: protocols x densities x seeds, each independent and
/// deterministic. Densities override `trace.n_vehicles`, so the sweep
/// requires generator mode. Output is sorted, independent of scheduling.
pub fn execute_sweep(
    cfg: &Config,
    protocols: &[ProtocolKind],
    densities: &[u32],
    seeds: &[u64],
    jobs: usize,
    keep_logs: bool,
) -> Result<SweepArtifacts> {
    if cfg.is_set("trace.file") {
        bail!("sweep varies trace.n_vehicles and requires trace generation, not trace.file");
    }
    if protocols.is_empty() || densities.is_empty() || seeds.is_empty() {
        bail!("sweep needs at least one protocol, one density and one seed");
    }
    let mut points: Vec<(ProtocolKind, u32, u64)> = Vec::new();
    for &p in protocols {
        for &d in densities {
            for &s in seeds {
                points.push((p, d, s));
            }
        }
    }

    // jobs == 0 lets the pool size itself to the machine
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    let results: Vec<Result<(ReportRow, EventLog)>> = pool.install(|| {
        points
            .par_iter()
            .map(|&(protocol, density, seed)| {
                let mut run_cfg = cfg.clone();
                run_cfg.set("protocol", protocol.name())?;
                run_cfg.set("trace.n_vehicles", density.to_string())?;
                run_cfg.set("seed", seed.to_string())?;
                let artifacts = execute_run(&run_cfg).with_context(|| {
                    format!("run failed: protocol={protocol} density={density} seed={seed}")
                })?;
                Ok((artifacts.row, artifacts.log))
            })
            .collect()
    });

    let mut ok: Vec<(ReportRow, EventLog)> = Vec::new();
    let mut first_err: Option<anyhow::Error> = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) if first_err.is_none() => first_err = Some(e),
            Err(_) => {}
        }
    }
    ok.sort_by(|a, b| {
        (a.0.protocol, a.0.n_vehicles, a.0.seed).cmp(&(b.0.protocol, b.0.n_vehicles, b.0.seed))
    });
    let rows: Vec<ReportRow> = ok.iter().map(|(row, _)| row.clone()).collect();
    let artifacts = SweepArtifacts {
        results_csv: results_csv(&rows),
        plots: plot_data(&rows),
        logs: keep_logs.then_some(ok),
        rows,
    };
    match first_err {
        // partial results are still returned to the caller for retention
        Some(e) => Err(e.context(format!("sweep aborted; {} runs completed", artifacts.rows.len()))),
        None => Ok(artifacts),
    }
}

pub fn write_sweep_outputs(artifacts: &SweepArtifacts, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    fs::write(out_dir.join("results.csv"), &artifacts.results_csv)?;
    for (name, content) in &artifacts.plots {
        fs::write(out_dir.join(name), content)?;
    }
    Ok(())
}

pub struct LinkArgs {
    pub distance_m: f64,
    pub crossings: u32,
    pub l_obs_m: f64,
    pub link: LinkBudget,
    pub atten: AttenuationParams,
}

/// One-shot link-budget calculator: path loss, shadowing loss, received
/// power, and the shadowed/direct classification for one geometry.
pub fn link_breakdown(args: &LinkArgs) -> Result<String> {
    let obstruction = Obstruction {
        wall_crossings: args.crossings,
        interior_len_m: args.l_obs_m,
    };
    let path_loss = fspl_db(args.distance_m, args.link.freq_mhz)
        .map_err(|e| anyhow::anyhow!("invalid link inputs: {e}"))?;
    let o_shadow = obstacle_attenuation(obstruction, args.atten);
    let p_r = received_power(args.link, path_loss, o_shadow);
    let shadowed =
        args.crossings > 0 && p_r < args.link.sensitivity_dbm + args.link.margin_db;
    let mut out = String::new();
    let _ = writeln!(out, "distance_m {:.3}", args.distance_m);
    let _ = writeln!(out, "path_loss_db {:.3}", path_loss);
    let _ = writeln!(out, "o_shadow_db {:.3}", o_shadow);
    let _ = writeln!(out, "rx_power_dbm {:.3}", p_r);
    let _ = writeln!(out, "sensitivity_dbm {:.3}", args.link.sensitivity_dbm);
    let _ = writeln!(out, "margin_db {:.3}", args.link.margin_db);
    let _ = writeln!(out, "loc {}", shadowed as u8);
    Ok(out)
}

pub struct ManhattanParams {
    pub nx: u32,
    pub ny: u32,
    pub block_x_m: f64,
    pub block_y_m: f64,
    pub street_m: f64,
    pub inset_m: f64,
    /// Per-row x offset; rows shift by `row * stagger` modulo one pitch.
    pub stagger_m: f64,
}

/// Grid of rectangular blocks separated by streets: `nx` columns, `ny` rows,
/// streets on all sides. Buildings are the blocks shrunk by the inset.
pub fn manhattan_map(p: &ManhattanParams) -> Result<ObstacleMap> {
    if p.nx == 0 || p.ny == 0 {
        bail!("grid needs at least one block in each direction");
    }
    if p.block_x_m <= 0.0 || p.block_y_m <= 0.0 || p.street_m <= 0.0 {
        bail!("block and street sizes must be positive");
    }
    if p.inset_m < 0.0 || 2.0 * p.inset_m >= p.block_x_m.min(p.block_y_m) {
        bail!("inset must be non-negative and smaller than half a block");
    }
    let pitch_x = p.block_x_m + p.street_m;
    let pitch_y = p.block_y_m + p.street_m;
    let width = p.street_m + p.nx as f64 * pitch_x;
    let height = p.street_m + p.ny as f64 * pitch_y;
    let bounds = Rect::new(0.0, 0.0, width, height);
    let mut buildings = Vec::new();
    for row in 0..p.ny {
        let y0 = p.street_m + row as f64 * pitch_y + p.inset_m;
        let y1 = y0 + p.block_y_m - 2.0 * p.inset_m;
        let offset = (row as f64 * p.stagger_m).rem_euclid(pitch_x);
        // one extra column on the left so the stagger never leaves a gap
        for col in -1..p.nx as i64 {
            let cx = p.street_m + col as f64 * pitch_x + offset;
            let x0 = (cx + p.inset_m).max(p.street_m);
            let x1 = (cx + p.block_x_m - p.inset_m).min(width - p.street_m);
            if x1 - x0 >= 1.0 {
                buildings.push(Rect::new(x0, y0, x1, y1));
            }
        }
    }
    ObstacleMap::new(bounds, buildings).map_err(|e| anyhow::anyhow!("generated map invalid: {e}"))
}

pub fn write_map(map: &ObstacleMap, out: &Path) -> Result<()> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, map.to_text()).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

pub fn write_trace(params: &TraceGenParams, out: &Path) -> Result<()> {
    let trace = generate_trace(params)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, trace.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
