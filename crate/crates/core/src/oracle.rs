//! Brute-force pass simulator.
//!
//! Walks a schedule one pass at a time and tallies every access as an
//! integer. It shares no arithmetic with the closed-form counts in
//! [`crate::energy`]; agreement between the two is the main correctness
//! check for the energy engine.

use crate::error::{Error, Result};
use crate::model::{LayerKind, LayerShape};
use crate::schedule::SchedulingParams;

/// Enumeration guard.
pub const MAX_ENUMERATED_MACS: u64 = 100_000_000;

/// Dense access counts for one batch of `N` images.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AccessTally {
    pub dram_ifmap: u64,
    pub dram_filter: u64,
    pub dram_ofmap: u64,
    pub glb_ifmap: u64,
    pub glb_psum: u64,
    pub rf_accesses: u64,
    pub ipe_transfers: u64,
    pub macs: u64,
    pub passes: u64,
    pub writebacks: u64,
    /// Zero fraction of the input; skipped MACs and RF accesses are
    /// reported by the `effective_*` accessors.
    pub sparsity_in: f64,
}

impl AccessTally {
    pub fn effective_macs(&self) -> f64 {
        self.macs as f64 * (1.0 - self.sparsity_in)
    }

    pub fn effective_rf_accesses(&self) -> f64 {
        self.rf_accesses as f64 * (1.0 - self.sparsity_in)
    }
}

/// Simulates every pass of `layer` under `sched`.
///
/// `layer` is the full layer; grouped layers run each group in turn.
pub fn simulate_layer(layer: &LayerShape, sched: &SchedulingParams, sparsity_in: f64) -> Result<AccessTally> {
    let total = layer.macs().saturating_mul(sched.batch);
    if total > MAX_ENUMERATED_MACS {
        return Err(Error::TooLargeToEnumerate {
            macs: total,
            limit: MAX_ENUMERATED_MACS,
        });
    }
    let (m, replicas) = layer.mapped();
    let pool = m.kind == LayerKind::Pool;
    let operands = if pool { 3 } else { 4 };
    let n = sched.batch;
    let mut t = AccessTally {
        sparsity_in,
        ..AccessTally::default()
    };

    for _group in 0..replicas {
        let mut f0 = 0;
        while f0 < m.f {
            let ff = sched.filters.min(m.f - f0);
            let mut y0 = 0;
            while y0 < m.e {
                let block = sched.block_out_rows.min(m.e - y0);
                let mut x0 = 0;
                while x0 < m.g {
                    let xo = sched.out_width.min(m.g - x0);
                    let xi = (xo - 1) * m.u + m.s;
                    let mut c0 = 0;
                    while c0 < m.c {
                        let zz = sched.channels.min(m.c - c0);
                        if !pool {
                            // Filters stay in the RF across the row passes below.
                            t.dram_filter += ff * m.r * m.s * zz;
                        }
                        let mut p0 = 0;
                        while p0 < block {
                            let yo = sched.out_rows.min(block - p0);
                            let yi = (yo - 1) * m.u + m.r;
                            t.passes += 1;
                            t.dram_ifmap += n * xi * yi * zz;
                            t.glb_ifmap += n * xi * yi * zz;
                            // one write and one read per psum
                            t.glb_psum += 2 * n * xo * yo * ff;
                            let macs = n * ff * zz * m.r * m.s * xo * yo;
                            t.macs += macs;
                            t.rf_accesses += operands * macs;
                            t.ipe_transfers += (m.r - 1) * n * ff * zz * xo * yo;
                            p0 += sched.out_rows;
                        }
                        c0 += sched.channels;
                    }
                    t.writebacks += 1;
                    t.dram_ofmap += n * xo * block * ff;
                    x0 += sched.out_width;
                }
                y0 += sched.block_out_rows;
            }
            f0 += sched.filters;
        }
    }
    Ok(t)
}
