//! Vehicle traces: synthetic generation, CSV import/export, neighbor scans.
//!
//! A trace is a time-ordered list of full position snapshots. The generator
//! drives constant-speed vehicles along a straight multi-lane road with
//! wrap-around; anything richer (grid routing, car following) is expected to
//! arrive through the CSV importer instead.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::geometry::Point;

pub type VehicleId = u32;

/// One vehicle at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub pos: Point,
    pub speed_mps: f64,
    pub lane: u32,
}

/// All vehicles at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time_s: f64,
    pub states: Vec<VehicleState>,
}

impl Snapshot {
    pub fn state_of(&self, id: VehicleId) -> Option<&VehicleState> {
        self.states.iter().find(|s| s.id == id)
    }
}

/// Time-indexed vehicle positions, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrace {
    pub interval_s: f64,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace generation requires positive duration and step, got duration={duration_s}, dt={dt_s}")]
    BadTiming { duration_s: f64, dt_s: f64 },
    #[error("trace generation requires at least one vehicle and one lane")]
    BadCounts,
    #[error("speed range is invalid: {min} > {max}")]
    BadSpeedRange { min: f64, max: f64 },
    #[error("line {line}: expected header `t,id,x,y,speed,lane`")]
    BadHeader { line: usize },
    #[error("line {line}: expected 6 comma-separated fields, got {got}")]
    BadRow { line: usize, got: usize },
    #[error("line {line}: invalid number {value:?}")]
    Number { line: usize, value: String },
    #[error("line {line}: rows are not grouped by non-decreasing time")]
    Unordered { line: usize },
    #[error("trace contains no snapshots")]
    Empty,
    #[error("vehicle {id} is not present in the snapshot")]
    UnknownVehicle { id: VehicleId },
    #[error("neighbor scan requires a positive range, got {range_m}")]
    BadRange { range_m: f64 },
}

/// Inputs of the synthetic straight-road generator.
#[derive(Debug, Clone, Copy)]
pub struct TraceGenParams {
    pub n_vehicles: u32,
    pub road_length_m: f64,
    pub lanes: u32,
    /// Transverse spacing between lane center lines, meters. Lane k sits at
    /// `road_y0_m + k * lane_spacing_m`.
    pub lane_spacing_m: f64,
    pub road_y0_m: f64,
    /// Inclusive speed range, m/s. Table-style 30-50 mph is 13.41-22.35 m/s.
    pub speed_range_mps: (f64, f64),
    pub duration_s: f64,
    pub dt_s: f64,
    pub seed: u64,
}

impl Default for TraceGenParams {
    fn default() -> Self {
        TraceGenParams {
            n_vehicles: 50,
            road_length_m: 10_000.0,
            lanes: 3,
            lane_spacing_m: 3.5,
            road_y0_m: 2.0,
            speed_range_mps: (13.41, 22.35),
            duration_s: 10.0,
            dt_s: 1.0,
            seed: 1,
        }
    }
}

/// Generates a wrap-around straight-road trace, deterministic per seed.
pub fn generate_trace(params: &TraceGenParams) -> Result<VehicleTrace, TraceError> {
    if !(params.duration_s > 0.0) || !(params.dt_s > 0.0) {
        return Err(TraceError::BadTiming { duration_s: params.duration_s, dt_s: params.dt_s });
    }
    if params.n_vehicles == 0 || params.lanes == 0 {
        return Err(TraceError::BadCounts);
    }
    let (v_min, v_max) = params.speed_range_mps;
    if v_min > v_max || v_min < 0.0 {
        return Err(TraceError::BadSpeedRange { min: v_min, max: v_max });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    struct Init {
        x0: f64,
        lane: u32,
        speed: f64,
    }
    let inits: Vec<Init> = (0..params.n_vehicles)
        .map(|_| Init {
            x0: rng.gen_range(0.0..params.road_length_m),
            lane: rng.gen_range(0..params.lanes),
            speed: if v_min == v_max { v_min } else { rng.gen_range(v_min..=v_max) },
        })
        .collect();

    let steps = (params.duration_s / params.dt_s + 1e-9).floor() as usize;
    let mut snapshots = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * params.dt_s;
        let states = inits
            .iter()
            .enumerate()
            .map(|(i, init)| VehicleState {
                id: i as VehicleId,
                pos: Point::new(
                    (init.x0 + init.speed * t).rem_euclid(params.road_length_m),
                    params.road_y0_m + init.lane as f64 * params.lane_spacing_m,
                ),
                speed_mps: init.speed,
                lane: init.lane,
            })
            .collect();
        snapshots.push(Snapshot { time_s: t, states });
    }
    Ok(VehicleTrace { interval_s: params.dt_s, snapshots })
}

impl VehicleTrace {
    /// Parses the trace CSV format: header `t,id,x,y,speed,lane`, rows
    /// grouped by non-decreasing time.
    pub fn parse(csv: &str) -> Result<Self, TraceError> {
        let mut lines = csv.lines().enumerate();
        let (_, header) = lines.next().ok_or(TraceError::Empty)?;
        if header.trim() != "t,id,x,y,speed,lane" {
            return Err(TraceError::BadHeader { line: 1 });
        }
        let mut snapshots: Vec<Snapshot> = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let row = raw.trim();
            if row.is_empty() {
                continue;
            }
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != 6 {
                return Err(TraceError::BadRow { line, got: fields.len() });
            }
            let num = |s: &str| -> Result<f64, TraceError> {
                s.trim()
                    .parse()
                    .map_err(|_| TraceError::Number { line, value: s.to_string() })
            };
            let t = num(fields[0])?;
            let id = num(fields[1])? as VehicleId;
            let state = VehicleState {
                id,
                pos: Point::new(num(fields[2])?, num(fields[3])?),
                speed_mps: num(fields[4])?,
                lane: num(fields[5])? as u32,
            };
            match snapshots.last_mut() {
                Some(last) if last.time_s == t => last.states.push(state),
                Some(last) if t < last.time_s => return Err(TraceError::Unordered { line }),
                _ => snapshots.push(Snapshot { time_s: t, states: vec![state] }),
            }
        }
        if snapshots.is_empty() {
            return Err(TraceError::Empty);
        }
        let interval_s = if snapshots.len() > 1 {
            snapshots[1].time_s - snapshots[0].time_s
        } else {
            1.0
        };
        Ok(VehicleTrace { interval_s, snapshots })
    }

    /// Serializes to the trace CSV format; `parse` round-trips it exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,id,x,y,speed,lane\n");
        for snap in &self.snapshots {
            for s in &snap.states {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    snap.time_s, s.id, s.pos.x, s.pos.y, s.speed_mps, s.lane
                ));
            }
        }
        out
    }

    /// Latest snapshot at or before `t`; the first snapshot when `t`
    /// precedes the trace.
    pub fn snapshot_at(&self, t: f64) -> &Snapshot {
        let mut chosen = &self.snapshots[0];
        for snap in &self.snapshots {
            if snap.time_s <= t {
                chosen = snap;
            } else {
                break;
            }
        }
        chosen
    }

    pub fn vehicle_ids(&self) -> Vec<VehicleId> {
        let mut ids: Vec<VehicleId> =
            self.snapshots.first().map(|s| s.states.iter().map(|v| v.id).collect()).unwrap_or_default();
        ids.sort_unstable();
        ids
    }

    pub fn end_time(&self) -> f64 {
        self.snapshots.last().map(|s| s.time_s).unwrap_or(0.0)
    }
}

/// Ids of all other vehicles within `range_m` (inclusive) of `sender`,
/// sorted ascending. The length of this list is the neighbor count the
/// dissemination algorithm branches on.
pub fn neighbors_in_range(
    states: &[VehicleState],
    sender: VehicleId,
    range_m: f64,
) -> Result<Vec<VehicleId>, TraceError> {
    if !(range_m > 0.0) {
        return Err(TraceError::BadRange { range_m });
    }
    let origin = states
        .iter()
        .find(|s| s.id == sender)
        .ok_or(TraceError::UnknownVehicle { id: sender })?;
    let mut ids: Vec<VehicleId> = states
        .iter()
        .filter(|s| s.id != sender && s.pos.distance(origin.pos) <= range_m)
        .map(|s| s.id)
        .collect();
    ids.sort_unstable();
    Ok(ids)
}
