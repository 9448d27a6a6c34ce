//! Scenario configuration: flat `section.key = value` text, SI units, every
//! key defaulted so a minimal file can stay minimal.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use vehfog::geometry::{ObstacleMap, Point, Rect};
use vehfog::mobility::{generate_trace, TraceGenParams, VehicleTrace};
use vehfog::protocols::{DecisionRule, FogNode, ProtocolKind};
use vehfog::radio::{AttenuationParams, LinkBudget};
use vehfog::scenario::{fog_grid, MacParams, MessageSpec, Scenario};

pub struct KeySpec {
    pub key: &'static str,
    pub units: &'static str,
    pub default: &'static str,
    pub desc: &'static str,
}

/// Every recognized configuration key. Anything else is rejected by name.
pub const CONFIG_KEYS: &[KeySpec] = &[
    KeySpec { key: "seed", units: "integer", default: "1", desc: "run seed; equal seeds reproduce runs byte for byte" },
    KeySpec { key: "duration_s", units: "s", default: "10", desc: "scheduling horizon for messages and beacons" },
    KeySpec { key: "map.file", units: "path", default: "", desc: "obstacle map file; empty means no buildings" },
    KeySpec { key: "trace.file", units: "path", default: "", desc: "vehicle trace CSV; mutually exclusive with trace.generate" },
    KeySpec { key: "trace.generate", units: "on|off", default: "on", desc: "generate the trace instead of loading a file" },
    KeySpec { key: "trace.n_vehicles", units: "count", default: "50", desc: "vehicles in the generated trace" },
    KeySpec { key: "trace.road_length_m", units: "m", default: "10000", desc: "road length with wrap-around" },
    KeySpec { key: "trace.lanes", units: "count", default: "3", desc: "parallel lanes" },
    KeySpec { key: "trace.lane_spacing_m", units: "m", default: "3.5", desc: "transverse distance between lane center lines" },
    KeySpec { key: "trace.road_y0_m", units: "m", default: "2", desc: "y position of lane 0" },
    KeySpec { key: "trace.speed_min_mps", units: "m/s", default: "13.41", desc: "minimum vehicle speed (30 mph)" },
    KeySpec { key: "trace.speed_max_mps", units: "m/s", default: "22.35", desc: "maximum vehicle speed (50 mph)" },
    KeySpec { key: "trace.dt_s", units: "s", default: "1", desc: "trace sampling interval" },
    KeySpec { key: "radio.tx_power_dbm", units: "dBm", default: "20", desc: "transmit power" },
    KeySpec { key: "radio.gain_tx_dbi", units: "dBi", default: "0", desc: "transmit antenna gain" },
    KeySpec { key: "radio.gain_rx_dbi", units: "dBi", default: "0", desc: "receive antenna gain" },
    KeySpec { key: "radio.freq_mhz", units: "MHz", default: "5900", desc: "carrier frequency" },
    KeySpec { key: "radio.sensitivity_dbm", units: "dBm", default: "-85", desc: "minimum decodable received power" },
    KeySpec { key: "radio.margin_db", units: "dB", default: "3", desc: "uncertainty band folded into the shadowed class" },
    KeySpec { key: "radio.alpha_db", units: "dB/wall", default: "9", desc: "attenuation per exterior-wall crossing" },
    KeySpec { key: "radio.beta_db_per_m", units: "dB/m", default: "0.4", desc: "attenuation per meter inside buildings" },
    KeySpec { key: "radio.range_m", units: "m", default: "300", desc: "transmission range" },
    KeySpec { key: "mac.data_rate_bps", units: "bit/s", default: "2000000", desc: "channel data rate" },
    KeySpec { key: "mac.slot_time_us", units: "us", default: "13", desc: "backoff slot time" },
    KeySpec { key: "mac.cw_min", units: "slots", default: "31", desc: "minimum contention window" },
    KeySpec { key: "mac.cw_max", units: "slots", default: "1023", desc: "maximum contention window" },
    KeySpec { key: "mac.max_attempts", units: "count", default: "3", desc: "transmission attempts per frame (first try + retries)" },
    KeySpec { key: "mac.t_proc_relay_ms", units: "ms", default: "0.1", desc: "processing time at forwarding vehicles" },
    KeySpec { key: "mac.collisions", units: "on|off", default: "on", desc: "frame loss on overlapping transmissions" },
    KeySpec { key: "mac.beacon_rate_hz", units: "Hz", default: "0", desc: "background beacon rate per vehicle; 0 disables" },
    KeySpec { key: "mac.beacon_size_bytes", units: "B", default: "300", desc: "background beacon frame size" },
    KeySpec { key: "protocol", units: "name", default: "hybrid_vehfog", desc: "hybrid_vehfog | flooding | relay_multihop | cloud_relay | fog_only" },
    KeySpec { key: "decision_rule", units: "name", default: "per_receiver_shadowing", desc: "per_receiver_shadowing | eq6_threshold" },
    KeySpec { key: "fog.spacing_m", units: "m", default: "1000", desc: "fog node spacing along the road; 0 disables the grid" },
    KeySpec { key: "fog.coverage_m", units: "m", default: "600", desc: "fog node coverage radius" },
    KeySpec { key: "fog.t_proc_ms", units: "ms", default: "1", desc: "fog processing time before the downlink" },
    KeySpec { key: "fog.y_m", units: "m", default: "", desc: "fog node y position; empty centers on the road" },
    KeySpec { key: "fog.positions", units: "x,y;x,y", default: "", desc: "explicit fog positions, overriding the grid" },
    KeySpec { key: "cloud.rtt_ms", units: "ms", default: "50", desc: "cloud round trip added by the cloud baseline" },
    KeySpec { key: "flood.jitter_ms", units: "ms", default: "5", desc: "flooding rebroadcast jitter upper bound" },
    KeySpec { key: "dmax_ms", units: "ms", default: "100", desc: "delay deadline normalizing the success-rate score" },
    KeySpec { key: "msg.size_bytes", units: "B", default: "256", desc: "critical message size" },
    KeySpec { key: "msg.schedule", units: "sender@t_s;...", default: "0@1.0", desc: "message emissions, e.g. 0@1.0;5@2.0" },
];

/// Key/units listing for `--help`.
pub fn help_text() -> String {
    let mut out = String::from("Configuration keys (section.key = value):\n");
    for k in CONFIG_KEYS {
        let _ = writeln!(
            out,
            "  {:24} [{}] default={:10} {}",
            k.key,
            k.units,
            if k.default.is_empty() { "(empty)" } else { k.default },
            k.desc
        );
    }
    out
}

fn key_spec(key: &str) -> Option<&'static KeySpec> {
    CONFIG_KEYS.iter().find(|k| k.key == key)
}

/// Parsed configuration with defaults applied lazily by the typed getters.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Directory relative file references resolve against.
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {line}: expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if key_spec(key).is_none() {
                bail!("config line {line}: unknown key {key:?}");
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                bail!("config line {line}: duplicate key {key:?}");
            }
        }
        Ok(Config { values, base_dir: PathBuf::from(".") })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    /// Sets or overrides a key (used by CLI flags). The key must be known.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if key_spec(key).is_none() {
            bail!("unknown config key {key:?}");
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| key_spec(key).map(|k| k.default).unwrap_or(""))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.raw(key)
            .parse()
            .map_err(|_| anyhow!("invalid value for {key}: {:?} is not a number", self.raw(key)))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        self.raw(key)
            .parse()
            .map_err(|_| anyhow!("invalid value for {key}: {:?} is not an integer", self.raw(key)))
    }

    fn u32(&self, key: &str) -> Result<u32> {
        self.raw(key)
            .parse()
            .map_err(|_| anyhow!("invalid value for {key}: {:?} is not an integer", self.raw(key)))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "on" | "true" | "1" | "yes" => Ok(true),
            "off" | "false" | "0" | "no" => Ok(false),
            other => Err(anyhow!("invalid value for {key}: {other:?} (expected on|off)")),
        }
    }

    /// Fully resolved `key = value` dump, defaults included.
    pub fn resolved_dump(&self) -> String {
        let mut out = String::new();
        for k in CONFIG_KEYS {
            let _ = writeln!(out, "{} = {}", k.key, self.raw(k.key));
        }
        out
    }

    fn resolve_path(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn messages(&self) -> Result<Vec<MessageSpec>> {
        let size_bytes = self.u64("msg.size_bytes")?;
        let mut out = Vec::new();
        for part in self.raw("msg.schedule").split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (sender, time) = part.split_once('@').ok_or_else(|| {
                anyhow!("invalid value for msg.schedule: {part:?} (expected sender@time)")
            })?;
            out.push(MessageSpec {
                sender: sender
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("invalid sender id in msg.schedule: {sender:?}"))?,
                time_s: time
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("invalid time in msg.schedule: {time:?}"))?,
                size_bytes,
            });
        }
        if out.is_empty() {
            bail!("msg.schedule is empty");
        }
        Ok(out)
    }

    fn fog_nodes(&self, road_len: f64, road_mid_y: f64) -> Result<Vec<FogNode>> {
        let coverage = self.f64("fog.coverage_m")?;
        let proc_s = self.f64("fog.t_proc_ms")? / 1e3;
        let y = if self.raw("fog.y_m").is_empty() { road_mid_y } else { self.f64("fog.y_m")? };
        let positions = self.raw("fog.positions");
        if !positions.is_empty() {
            let mut nodes = Vec::new();
            for (i, part) in positions.split(';').enumerate() {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let (x, y) = part.split_once(',').ok_or_else(|| {
                    anyhow!("invalid value for fog.positions: {part:?} (expected x,y)")
                })?;
                nodes.push(FogNode {
                    id: i as u32,
                    pos: Point::new(
                        x.trim().parse().map_err(|_| anyhow!("invalid fog x: {x:?}"))?,
                        y.trim().parse().map_err(|_| anyhow!("invalid fog y: {y:?}"))?,
                    ),
                    coverage_m: coverage,
                    proc_s,
                });
            }
            return Ok(nodes);
        }
        let spacing = self.f64("fog.spacing_m")?;
        if spacing <= 0.0 {
            return Ok(Vec::new());
        }
        Ok(fog_grid(road_len, spacing, y, coverage, proc_s))
    }

    /// Builds and validates the full scenario.
    pub fn build_scenario(&self) -> Result<Scenario> {
        let trace_file = self.raw("trace.file");
        let generate = self.flag("trace.generate")?;
        if !trace_file.is_empty() && self.is_set("trace.generate") && generate {
            bail!("trace.file and trace.generate are mutually exclusive; set exactly one");
        }
        let duration_s = self.f64("duration_s")?;

        let trace: VehicleTrace = if !trace_file.is_empty() {
            let path = self.resolve_path(trace_file);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading trace {}", path.display()))?;
            VehicleTrace::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            generate_trace(&TraceGenParams {
                n_vehicles: self.u32("trace.n_vehicles")?,
                road_length_m: self.f64("trace.road_length_m")?,
                lanes: self.u32("trace.lanes")?,
                lane_spacing_m: self.f64("trace.lane_spacing_m")?,
                road_y0_m: self.f64("trace.road_y0_m")?,
                speed_range_mps: (
                    self.f64("trace.speed_min_mps")?,
                    self.f64("trace.speed_max_mps")?,
                ),
                duration_s,
                dt_s: self.f64("trace.dt_s")?,
                seed: self.u64("seed")?,
            })?
        };

        let map = {
            let map_file = self.raw("map.file");
            if map_file.is_empty() {
                // bounds enclosing every trace position with a margin
                let mut x_max: f64 = 100.0;
                let mut y_max: f64 = 100.0;
                for snap in &trace.snapshots {
                    for s in &snap.states {
                        x_max = x_max.max(s.pos.x);
                        y_max = y_max.max(s.pos.y);
                    }
                }
                ObstacleMap::empty(Rect::new(0.0, 0.0, x_max + 100.0, y_max + 100.0))
            } else {
                let path = self.resolve_path(map_file);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading map {}", path.display()))?;
                ObstacleMap::parse(&text).with_context(|| format!("parsing {}", path.display()))?
            }
        };

        let (mut road_len, mut y_min, mut y_max) = (0.0f64, f64::MAX, f64::MIN);
        for s in &trace.snapshots[0].states {
            road_len = road_len.max(s.pos.x);
            y_min = y_min.min(s.pos.y);
            y_max = y_max.max(s.pos.y);
        }
        let road_mid_y = if y_min <= y_max { (y_min + y_max) / 2.0 } else { 0.0 };

        let protocol: ProtocolKind = self
            .raw("protocol")
            .parse()
            .map_err(|e| anyhow!("invalid value for protocol: {e}"))?;
        let rule: DecisionRule = self
            .raw("decision_rule")
            .parse()
            .map_err(|e| anyhow!("invalid value for decision_rule: {e}"))?;

        let scenario = Scenario {
            fog: self.fog_nodes(road_len, road_mid_y)?,
            map,
            trace,
            link: LinkBudget {
                tx_power_dbm: self.f64("radio.tx_power_dbm")?,
                tx_gain_dbi: self.f64("radio.gain_tx_dbi")?,
                rx_gain_dbi: self.f64("radio.gain_rx_dbi")?,
                freq_mhz: self.f64("radio.freq_mhz")?,
                sensitivity_dbm: self.f64("radio.sensitivity_dbm")?,
                margin_db: self.f64("radio.margin_db")?,
            },
            atten: AttenuationParams {
                alpha_db: self.f64("radio.alpha_db")?,
                beta_db_per_m: self.f64("radio.beta_db_per_m")?,
            },
            range_m: self.f64("radio.range_m")?,
            mac: MacParams {
                data_rate_bps: self.f64("mac.data_rate_bps")?,
                slot_time_s: self.f64("mac.slot_time_us")? / 1e6,
                cw_min: self.u32("mac.cw_min")?,
                cw_max: self.u32("mac.cw_max")?,
                max_attempts: self.u32("mac.max_attempts")?,
                relay_proc_s: self.f64("mac.t_proc_relay_ms")? / 1e3,
                collisions: self.flag("mac.collisions")?,
                beacon_rate_hz: self.f64("mac.beacon_rate_hz")?,
                beacon_size_bytes: self.u64("mac.beacon_size_bytes")?,
            },
            protocol,
            rule,
            cloud_rtt_s: self.f64("cloud.rtt_ms")? / 1e3,
            flood_jitter_s: self.f64("flood.jitter_ms")? / 1e3,
            dmax_s: self.f64("dmax_ms")? / 1e3,
            messages: self.messages()?,
            seed: self.u64("seed")?,
            duration_s,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_a_valid_scenario() {
        let cfg = Config::parse("").unwrap();
        let sc = cfg.build_scenario().unwrap();
        assert_eq!(sc.protocol, ProtocolKind::HybridVehfog);
        assert_eq!(sc.range_m, 300.0);
        assert_eq!(sc.mac.cw_min, 31);
        assert_eq!(sc.mac.cw_max, 1023);
        assert_eq!(sc.messages.len(), 1);
        assert!(!sc.fog.is_empty());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::parse("radio.freq_ghz = 5.9\n").unwrap_err();
        assert!(err.to_string().contains("radio.freq_ghz"), "{err}");
    }

    #[test]
    fn value_errors_name_the_key() {
        let cfg = Config::parse("radio.range_m = wide\n").unwrap();
        let err = cfg.build_scenario().unwrap_err();
        assert!(err.to_string().contains("radio.range_m"), "{err}");
    }

    #[test]
    fn schedule_parses_multiple_messages() {
        let cfg = Config::parse("msg.schedule = 0@1.0; 5@2.0\ntrace.n_vehicles = 10\n").unwrap();
        let sc = cfg.build_scenario().unwrap();
        assert_eq!(sc.messages.len(), 2);
        assert_eq!(sc.messages[1].sender, 5);
        assert_eq!(sc.messages[1].time_s, 2.0);
    }

    #[test]
    fn explicit_fog_positions_override_grid() {
        let cfg = Config::parse("fog.positions = 100,50; 900,50\n").unwrap();
        let sc = cfg.build_scenario().unwrap();
        assert_eq!(sc.fog.len(), 2);
        assert_eq!(sc.fog[1].pos.x, 900.0);
    }

    #[test]
    fn resolved_dump_lists_every_key() {
        let cfg = Config::parse("seed = 9\n").unwrap();
        let dump = cfg.resolved_dump();
        assert!(dump.contains("seed = 9"));
        for k in CONFIG_KEYS {
            assert!(dump.contains(k.key), "missing {}", k.key);
        }
    }

    #[test]
    fn trace_file_conflicts_with_explicit_generate() {
        let cfg = Config::parse("trace.file = t.csv\ntrace.generate = on\n").unwrap();
        assert!(cfg.build_scenario().is_err());
    }
}
