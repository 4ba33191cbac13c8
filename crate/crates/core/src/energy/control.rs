//! Clock-tree power and control energy.

use crate::error::{Error, Result};
use crate::model::{AcceleratorConfig, TechnologyParams};

/// Clocked capacitances (F) and the resulting clock power (W).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockPower {
    pub c_wire: f64,
    pub c_buff: f64,
    pub c_pe_reg: f64,
    pub c_sram: f64,
    pub c_total: f64,
    pub power_w: f64,
}

/// Wire capacitance of a four-level H-tree on a die of edge `chip_dim`:
/// one trunk of D/2, two of D/2, four of D/4 and eight of D/4.
pub fn htree_wire_cap(chip_dim: f64, c_per_len: f64) -> f64 {
    let d = chip_dim;
    (d / 2.0 + d / 2.0 * 2.0 + d / 4.0 * 4.0 + d / 4.0 * 8.0) * c_per_len
}

/// `C * V^2 / T + leakage`.
pub fn clock_power_from_cap(c_clk: f64, vdd: f64, t_clk: f64, leakage: f64) -> f64 {
    c_clk * vdd * vdd / t_clk + leakage
}

pub fn clock_power(tech: &TechnologyParams, acc: &AcceleratorConfig) -> ClockPower {
    let c_wire = htree_wire_cap(tech.chip_dim, tech.c_wire_per_len);
    let c_buff = tech.n_buff as f64 * tech.c_buff;
    let c_pe_reg = (acc.pe_count() * tech.n_ff_per_pe) as f64 * tech.c_ff;
    let c_sram = tech.c_sram_clocked.total();
    let c_total = c_wire + c_buff + c_pe_reg + c_sram;
    ClockPower {
        c_wire,
        c_buff,
        c_pe_reg,
        c_sram,
        c_total,
        power_w: clock_power_from_cap(c_total, tech.vdd, tech.t_clk, tech.leakage_clk),
    }
}

/// Control energy of one layer run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlEnergy {
    pub clock_pj: f64,
    pub other_pj: f64,
    pub latency_s: f64,
    pub latency_cycles: f64,
}

impl ControlEnergy {
    pub fn total_pj(&self) -> f64 {
        self.clock_pj + self.other_pj
    }
}

/// `macs` is the dense operation count; `base_pj` is the on-chip energy the
/// "other control" share is charged against (everything except DRAM and
/// the control term itself).
pub fn control_energy(tech: &TechnologyParams, acc: &AcceleratorConfig, macs: u64, base_pj: f64) -> Result<ControlEnergy> {
    if !(tech.throughput > 0.0) {
        return Err(Error::Config("throughput must be > 0".into()));
    }
    let latency_s = macs as f64 / tech.throughput;
    let clock_pj = clock_power(tech, acc).power_w * latency_s * 1e12;
    Ok(ControlEnergy {
        clock_pj,
        other_pj: tech.other_cntrl_fraction * (base_pj + clock_pj),
        latency_s,
        latency_cycles: latency_s / tech.t_clk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn htree_four_mm() {
        let c = htree_wire_cap(4e-3, 0.2e-15 / 1e-6);
        assert!((c - 3.6e-12).abs() / 3.6e-12 < 1e-9);
    }

    #[test]
    fn clock_power_examples() {
        let p = clock_power_from_cap(100e-12, 1.0, 5e-9, 0.0);
        assert!((p - 20e-3).abs() / 20e-3 < 1e-12);
        assert_eq!(clock_power_from_cap(0.0, 1.0, 5e-9, 5e-3), 5e-3);
    }

    #[test]
    fn finite_difference() {
        let (v, t) = (0.9, 4e-9);
        let c = 120e-12;
        let h = 1e-15;
        let d = (clock_power_from_cap(c + h, v, t, 1e-3) - clock_power_from_cap(c - h, v, t, 1e-3)) / (2.0 * h);
        assert!((d - v * v / t).abs() / (v * v / t) < 1e-6);
    }
}
