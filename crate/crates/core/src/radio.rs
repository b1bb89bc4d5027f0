//! Closed-form radio and energy models: two-ray ground received power,
//! transmitter range, first-order radio dissipation and the dense-network
//! critical transmission range.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::{EnergyParams, RadioParams};

/// Received power (W) at distance `d` under two-ray ground propagation:
/// `P_t·G_t·G_r·h_t²·h_r² / d⁴`.
pub fn received_power(radio: &RadioParams, d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(SimError::domain(format!(
            "received power needs a positive distance, got {d}"
        )));
    }
    let r = radio;
    let numerator = r.tx_power * r.gain_tx * r.gain_rx * r.height_tx.powi(2) * r.height_rx.powi(2);
    Ok(numerator / d.powi(4))
}

/// Transmitter coverage diameter `2·(C_t·P_t)^(1/4)`.
pub fn comm_range(transceiver_const: f64, tx_power: f64) -> Result<f64> {
    if !(transceiver_const > 0.0 && tx_power > 0.0) {
        return Err(SimError::domain(format!(
            "range needs C_t > 0 and P_t > 0, got C_t = {transceiver_const}, P_t = {tx_power}"
        )));
    }
    Ok(2.0 * (transceiver_const * tx_power).powf(0.25))
}

/// Energy (J) to transmit `bits` over `distance` meters: `E_ele·k + E_amp·k·l²`.
pub fn tx_energy(energy: &EnergyParams, bits: u64, distance: f64) -> Result<f64> {
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(SimError::domain(format!(
            "transmit distance must be finite and >= 0, got {distance}"
        )));
    }
    let k = bits as f64;
    Ok(energy.elec_per_bit * k + energy.amp_per_bit_m2 * k * distance * distance)
}

/// Energy (J) to receive `bits`: `E_ele·k`.
pub fn rx_energy(energy: &EnergyParams, bits: u64) -> f64 {
    energy.elec_per_bit * bits as f64
}

/// Choice of the slowly diverging term `f(n)` in the critical range formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum GrowthTerm {
    Zero,
    /// `ln(ln n)` for `n >= 3`, zero below.
    #[default]
    LogLog,
    Custom(f64),
}

impl GrowthTerm {
    pub fn eval(&self, n: u64) -> f64 {
        match *self {
            GrowthTerm::Zero => 0.0,
            GrowthTerm::LogLog if n >= 3 => (n as f64).ln().ln(),
            GrowthTerm::LogLog => 0.0,
            GrowthTerm::Custom(v) => v,
        }
    }
}

/// Critical transmission range of a dense deployment of `n` nodes on the
/// unit square: `sqrt((ln n + f(n)) / (n·π))`.
pub fn critical_transmission_range(n: u64, f: GrowthTerm) -> Result<f64> {
    if n == 0 {
        return Err(SimError::domain("critical range needs n >= 1"));
    }
    let radicand = ((n as f64).ln() + f.eval(n)) / (n as f64 * std::f64::consts::PI);
    if !(radicand >= 0.0) {
        return Err(SimError::domain(format!(
            "ln n + f(n) is negative for n = {n}"
        )));
    }
    Ok(radicand.sqrt())
}

/// Critical range in meters for a square of the given edge length.
pub fn critical_transmission_range_scaled(n: u64, f: GrowthTerm, edge: f64) -> Result<f64> {
    if !(edge > 0.0) {
        return Err(SimError::domain(format!("edge length must be > 0, got {edge}")));
    }
    Ok(critical_transmission_range(n, f)? * edge)
}
