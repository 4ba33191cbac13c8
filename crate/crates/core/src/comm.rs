//! Uplink transmission energy and end-to-end inference delay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wireless uplink seen by the client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommEnvironment {
    /// Available bit rate `B` (bits/s).
    pub bitrate_bps: f64,
    /// Error-correction overhead `k` (percent).
    #[serde(default)]
    pub ecc_overhead_pct: f64,
    /// Transmit power (W).
    pub tx_power_w: f64,
}

impl CommEnvironment {
    pub fn validate(&self) -> Result<()> {
        if !(self.bitrate_bps > 0.0 && self.bitrate_bps.is_finite()) {
            return Err(Error::Config("bitrate_bps must be > 0".into()));
        }
        if !(self.ecc_overhead_pct >= 0.0) {
            return Err(Error::Config("ecc_overhead_pct must be >= 0".into()));
        }
        if !(self.tx_power_w >= 0.0) {
            return Err(Error::Config("tx_power_w must be >= 0".into()));
        }
        Ok(())
    }
}

/// Client and cloud platform throughputs (ops/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayProfile {
    pub client_throughput: f64,
    pub cloud_throughput: f64,
}

impl Default for DelayProfile {
    fn default() -> Self {
        DelayProfile {
            client_throughput: 23.1e9,
            cloud_throughput: 92e12,
        }
    }
}

/// Run-length coding overhead per nonzero element at a given bit width.
pub fn rlc_overhead(bit_width: u32) -> Result<f64> {
    match bit_width {
        8 => Ok(3.0 / 5.0),
        16 => Ok(1.0 / 3.0),
        b => Err(Error::BitWidth(b)),
    }
}

/// Compressed payload in whole bits, rounded up.
///
/// Products that land within float noise of an integer are taken as that
/// integer so that e.g. `1000 * 0.1 * 1.6` is 160, not 161.
pub fn rlc_bits(d_raw: u64, sparsity: f64, delta: f64) -> u64 {
    let x = d_raw as f64 * (1.0 - sparsity) * (1.0 + delta);
    if x <= 0.0 {
        return 0;
    }
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

/// `B / (1 + k/100)`.
pub fn effective_bitrate(env: &CommEnvironment) -> f64 {
    env.bitrate_bps / (1.0 + env.ecc_overhead_pct / 100.0)
}

/// Seconds to send `bits` at the effective bit rate.
pub fn transmission_time(env: &CommEnvironment, bits: u64) -> f64 {
    bits as f64 / effective_bitrate(env)
}

/// Joules to send `bits`.
pub fn transmission_energy(env: &CommEnvironment, bits: u64) -> f64 {
    env.tx_power_w * transmission_time(env, bits)
}

/// Delay when layers `1..=cut` run on the client and the rest in the cloud.
/// `cut == 0` sends the input; `cut == len` runs everything locally.
pub fn inference_delay(cut: usize, client_s: &[f64], cloud_s: &[f64], t_trans: f64) -> Result<f64> {
    if client_s.len() != cloud_s.len() {
        return Err(Error::Input(format!(
            "{} client latencies but {} cloud latencies",
            client_s.len(),
            cloud_s.len()
        )));
    }
    if cut > client_s.len() {
        return Err(Error::Input(format!("cut {cut} beyond {} layers", client_s.len())));
    }
    let t_trans = if cut == client_s.len() { 0.0 } else { t_trans };
    Ok(client_s[..cut].iter().sum::<f64>() + t_trans + cloud_s[cut..].iter().sum::<f64>())
}

/// Per-layer latencies from dense operation counts.
pub fn latencies(macs: &[u64], throughput: f64) -> Vec<f64> {
    macs.iter().map(|&m| m as f64 / throughput).collect()
}
