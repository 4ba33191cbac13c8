//! Per-layer energy and latency.
//!
//! Energies are in picojoules. A layer is evaluated for one GLB batch of
//! `N` images; [`EnergyBreakdown::per_image`] normalizes.

pub mod control;
pub mod counts;

use rayon::prelude::*;

use crate::comm::rlc_overhead;
use crate::error::Result;
use crate::model::{AcceleratorConfig, LayerKind, LayerShape, NetworkTopology, TechnologyParams};
use crate::oracle::AccessTally;
use crate::schedule::{schedule_layer, SchedulingParams};

pub use control::{clock_power, clock_power_from_cap, control_energy, htree_wire_cap, ClockPower, ControlEnergy};
pub use counts::{layer_counts, pass_counts, PassCounts};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub e_comp: f64,
    pub e_cntrl: f64,
    pub e_dram: f64,
    pub e_glb: f64,
    pub e_rf: f64,
    pub e_ipe: f64,
    pub latency_cycles: f64,
    pub e_layer: f64,
    /// Images covered by the figures above.
    pub batch: u64,
}

impl EnergyBreakdown {
    pub fn e_data(&self) -> f64 {
        self.e_dram + self.e_glb + self.e_rf + self.e_ipe
    }

    pub fn per_image(&self) -> EnergyBreakdown {
        let n = self.batch as f64;
        EnergyBreakdown {
            e_comp: self.e_comp / n,
            e_cntrl: self.e_cntrl / n,
            e_dram: self.e_dram / n,
            e_glb: self.e_glb / n,
            e_rf: self.e_rf / n,
            e_ipe: self.e_ipe / n,
            latency_cycles: self.latency_cycles / n,
            e_layer: self.e_layer / n,
            batch: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnergyOptions {
    /// Charge inter-PE psum forwarding at `e_ipe`.
    pub inter_pe: bool,
}

/// Sparsity and compression context of one layer within a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerContext {
    pub sparsity_in: f64,
    pub sparsity_out: f64,
    /// Whether the input is read from DRAM compressed. False for the first
    /// layer, which reads the raw image.
    pub compressed_input: bool,
    /// Run-length coding overhead per nonzero element.
    pub rlc_overhead: f64,
}

impl LayerContext {
    /// No sparsity and no compression.
    pub fn dense() -> Self {
        LayerContext {
            sparsity_in: 0.0,
            sparsity_out: 0.0,
            compressed_input: false,
            rlc_overhead: 0.0,
        }
    }

    fn ifmap_dram_factor(&self) -> f64 {
        if self.compressed_input {
            (1.0 - self.sparsity_in) * (1.0 + self.rlc_overhead)
        } else {
            1.0
        }
    }

    fn ofmap_dram_factor(&self) -> f64 {
        (1.0 - self.sparsity_out) * (1.0 + self.rlc_overhead)
    }
}

/// Data-movement energy split by memory level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataEnergy {
    pub e_dram: f64,
    pub e_glb: f64,
    pub e_rf: f64,
    pub e_ipe: f64,
}

pub fn data_access_energy(
    tech: &TechnologyParams,
    counts: &AccessTally,
    ctx: &LayerContext,
    opts: EnergyOptions,
) -> DataEnergy {
    let dram = counts.dram_ifmap as f64 * ctx.ifmap_dram_factor()
        + counts.dram_filter as f64
        + counts.dram_ofmap as f64 * ctx.ofmap_dram_factor();
    let ipe = if opts.inter_pe {
        counts.ipe_transfers as f64 * (1.0 - ctx.sparsity_in) * tech.e_ipe
    } else {
        0.0
    };
    DataEnergy {
        e_dram: dram * tech.e_dram,
        e_glb: (counts.glb_ifmap + counts.glb_psum) as f64 * tech.e_glb,
        e_rf: counts.effective_rf_accesses() * tech.e_rf,
        e_ipe: ipe,
    }
}

/// Energy of one arithmetic operation: a MAC, or a compare/add for pooling.
pub fn op_energy(layer: &LayerShape, tech: &TechnologyParams) -> f64 {
    match layer.kind {
        LayerKind::Pool => (1.0 - tech.mac_mult_fraction) * tech.e_mac,
        _ => tech.e_mac,
    }
}

/// MAC energy for `n` images with zero inputs skipped.
pub fn compute_energy(layer: &LayerShape, tech: &TechnologyParams, sparsity_in: f64, n: u64) -> f64 {
    (n * layer.macs()) as f64 * op_energy(layer, tech) * (1.0 - sparsity_in)
}

/// Full breakdown for one batch of `sched.batch` images.
pub fn layer_energy(
    layer: &LayerShape,
    sched: &SchedulingParams,
    tech: &TechnologyParams,
    acc: &AcceleratorConfig,
    ctx: &LayerContext,
    opts: EnergyOptions,
) -> Result<EnergyBreakdown> {
    let counts = layer_counts(layer, sched, ctx.sparsity_in);
    let data = data_access_energy(tech, &counts, ctx, opts);
    let e_comp = compute_energy(layer, tech, ctx.sparsity_in, sched.batch);
    let on_chip = e_comp + data.e_glb + data.e_rf + data.e_ipe;
    let cntrl = control_energy(tech, acc, counts.macs, on_chip)?;
    let e_cntrl = cntrl.total_pj();
    Ok(EnergyBreakdown {
        e_comp,
        e_cntrl,
        e_dram: data.e_dram,
        e_glb: data.e_glb,
        e_rf: data.e_rf,
        e_ipe: data.e_ipe,
        latency_cycles: cntrl.latency_cycles,
        e_layer: e_comp + e_cntrl + (data.e_dram + data.e_glb + data.e_rf + data.e_ipe),
        batch: sched.batch,
    })
}

/// One layer's schedule and per-image energy within a network.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub id: String,
    pub schedule: SchedulingParams,
    pub energy: EnergyBreakdown,
}

/// Context of layer `index`, with the coding overhead for the network's
/// bit width.
pub fn layer_context(net: &NetworkTopology, index: usize) -> Result<LayerContext> {
    Ok(LayerContext {
        sparsity_in: net.sparsity_in(index),
        sparsity_out: net.sparsity_out[index],
        compressed_input: index > 0,
        rlc_overhead: rlc_overhead(net.bit_width)?,
    })
}

/// Schedules and evaluates every layer; energies are per image.
pub fn network_energy(
    net: &NetworkTopology,
    acc: &AcceleratorConfig,
    tech: &TechnologyParams,
    opts: EnergyOptions,
) -> Result<Vec<LayerReport>> {
    (0..net.layers.len())
        .into_par_iter()
        .map(|i| {
            let layer = &net.layers[i];
            let schedule = schedule_layer(layer, acc)?;
            let ctx = layer_context(net, i)?;
            let energy = layer_energy(layer, &schedule, tech, acc, &ctx, opts)?.per_image();
            Ok(LayerReport {
                id: layer.id.clone(),
                schedule,
                energy,
            })
        })
        .collect()
}

/// Running sums of a sequence.
pub fn prefix_sums(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    values
        .into_iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Per-image energy (pJ) to run layers `1..=i`, for every `i`.
pub fn cumulative_energy(
    net: &NetworkTopology,
    acc: &AcceleratorConfig,
    tech: &TechnologyParams,
    opts: EnergyOptions,
) -> Result<Vec<f64>> {
    Ok(prefix_sums(network_energy(net, acc, tech, opts)?.iter().map(|r| r.energy.e_layer)))
}
