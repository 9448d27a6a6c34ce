//! Link-budget math and receiver classification.
//!
//! Received power follows the additive dB model
//! `P_r = P_t + G_t + G_r - path_loss - O_shadow`, with free-space path loss
//! `32.44 + 20*log10(d_km) + 20*log10(f_MHz)` and obstacle shadowing
//! `O_shadow = alpha * crossings + beta * interior_length`. Everything here
//! is a pure function over immutable inputs; the loss path is deterministic
//! (no stochastic fading) so simulation runs are reproducible.

use thiserror::Error;

use crate::geometry::{ObstacleMap, Obstruction, Point};

/// Transmit-side and receive-side radio parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Transmit power, dBm.
    pub tx_power_dbm: f64,
    /// Transmit antenna gain, dBi.
    pub tx_gain_dbi: f64,
    /// Receive antenna gain, dBi.
    pub rx_gain_dbi: f64,
    /// Carrier frequency, MHz.
    pub freq_mhz: f64,
    /// Minimum decodable received power, dBm.
    pub sensitivity_dbm: f64,
    /// Uncertainty band above the sensitivity, dB. Receivers behind walls
    /// whose predicted power falls inside this band are treated as shadowed,
    /// folding the "maybe" region into the shadowed one.
    pub margin_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            tx_power_dbm: 20.0,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            freq_mhz: 5900.0,
            sensitivity_dbm: -85.0,
            margin_db: 3.0,
        }
    }
}

/// Wall/interior attenuation coefficients of the obstacle model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationParams {
    /// dB lost per exterior-wall crossing.
    pub alpha_db: f64,
    /// dB lost per meter of in-building path.
    pub beta_db_per_m: f64,
}

impl Default for AttenuationParams {
    fn default() -> Self {
        AttenuationParams { alpha_db: 9.0, beta_db_per_m: 0.4 }
    }
}

/// Outcome of classifying one receiver against one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverClass {
    /// True when the receiver sits behind at least one wall *and* its
    /// predicted power falls below sensitivity + margin: it must be served
    /// through the fog layer rather than directly.
    pub shadowed: bool,
    /// Predicted received power, dBm.
    pub rx_power_dbm: f64,
}

impl ReceiverClass {
    /// The binary location flag: 0 = reachable directly, 1 = shadowed.
    pub fn loc(&self) -> u8 {
        self.shadowed as u8
    }
}

#[derive(Debug, Error)]
pub enum RadioError {
    #[error("free-space path loss requires positive inputs, got d={distance_m} m, f={freq_mhz} MHz")]
    FsplDomain { distance_m: f64, freq_mhz: f64 },
    #[error("receiver at {distance_m:.3} m exceeds transmission range {range_m} m")]
    OutOfRange { distance_m: f64, range_m: f64 },
}

/// Free-space path loss in dB for a distance in meters and frequency in MHz.
pub fn fspl_db(distance_m: f64, freq_mhz: f64) -> Result<f64, RadioError> {
    if !(distance_m > 0.0) || !(freq_mhz > 0.0) {
        return Err(RadioError::FsplDomain { distance_m, freq_mhz });
    }
    Ok(32.44 + 20.0 * (distance_m / 1000.0).log10() + 20.0 * freq_mhz.log10())
}

/// Inverts [`fspl_db`]: the distance in meters at which a free-space loss of
/// `loss_db` occurs at `freq_mhz`. Any real loss maps to a positive distance.
pub fn distance_from_loss(loss_db: f64, freq_mhz: f64) -> f64 {
    debug_assert!(freq_mhz > 0.0);
    10f64.powf((loss_db - 32.44 - 20.0 * freq_mhz.log10()) / 20.0) * 1000.0
}

/// Shadowing loss in dB: `alpha * wall_crossings + beta * interior_length`.
pub fn obstacle_attenuation(obstruction: Obstruction, params: AttenuationParams) -> f64 {
    params.alpha_db * obstruction.wall_crossings as f64
        + params.beta_db_per_m * obstruction.interior_len_m
}

/// Received power in dBm given total path loss and shadowing loss.
pub fn received_power(link: LinkBudget, path_loss_db: f64, o_shadow_db: f64) -> f64 {
    link.tx_power_dbm + link.tx_gain_dbi + link.rx_gain_dbi - path_loss_db - o_shadow_db
}

/// Classifies a receiver as directly reachable or shadowed.
///
/// Shadowed requires both a blocked line of sight (at least one wall
/// crossing) and predicted power below `sensitivity + margin`: a receiver out
/// of power budget with clear line of sight is unreachable, not shadowed, and
/// is never routed through the fog layer.
pub fn classify_receiver(
    map: &ObstacleMap,
    link: LinkBudget,
    params: AttenuationParams,
    tx: Point,
    rx: Point,
    range_m: f64,
) -> Result<ReceiverClass, RadioError> {
    let distance_m = tx.distance(rx);
    if distance_m > range_m {
        return Err(RadioError::OutOfRange { distance_m, range_m });
    }
    let obstruction = map.obstruction(tx, rx);
    let path_loss = fspl_db(distance_m, link.freq_mhz)?;
    let o_shadow = obstacle_attenuation(obstruction, params);
    let rx_power = received_power(link, path_loss, o_shadow);
    let shadowed =
        obstruction.wall_crossings > 0 && rx_power < link.sensitivity_dbm + link.margin_db;
    Ok(ReceiverClass { shadowed, rx_power_dbm: rx_power })
}

/// Raw link feasibility: predicted power meets the sensitivity floor. Used by
/// the engine to decide whether a frame can be decoded at all.
pub fn link_feasible(
    map: &ObstacleMap,
    link: LinkBudget,
    params: AttenuationParams,
    tx: Point,
    rx: Point,
) -> (bool, Obstruction) {
    let obstruction = map.obstruction(tx, rx);
    let distance_m = tx.distance(rx);
    let path_loss = fspl_db(distance_m.max(f64::MIN_POSITIVE), link.freq_mhz)
        .expect("positive distance and frequency");
    let o_shadow = obstacle_attenuation(obstruction, params);
    let feasible = received_power(link, path_loss, o_shadow) >= link.sensitivity_dbm;
    (feasible, obstruction)
}
