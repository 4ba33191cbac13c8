//! Closed-form access counts.

use crate::model::{LayerKind, LayerShape};
use crate::oracle::AccessTally;
use crate::schedule::{input_extent, SchedulingParams};

/// Per-pass volumes of a full (non-residual) pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassCounts {
    pub i_pass: u64,
    pub p_pass: u64,
    pub f_pass: u64,
    /// RF accesses per pass after zero skipping.
    pub rf_mac: f64,
}

/// Nominal per-pass counts; `layer` is the mapped shape.
pub fn pass_counts(layer: &LayerShape, sched: &SchedulingParams, sparsity_in: f64) -> PassCounts {
    let n = sched.batch;
    let macs = n * sched.filters * sched.channels * layer.r * layer.s * sched.out_width * sched.out_rows;
    PassCounts {
        i_pass: n * sched.in_width * sched.in_rows * sched.channels,
        p_pass: n * sched.out_width * sched.out_rows * sched.filters,
        f_pass: sched.filters * layer.r * layer.s * sched.channels,
        rf_mac: (operands(layer) * macs) as f64 * (1.0 - sparsity_in),
    }
}

/// RF accesses per operation: filter, ifmap, psum read, psum write. Pooling
/// has no filter operand.
pub fn operands(layer: &LayerShape) -> u64 {
    if layer.kind == LayerKind::Pool {
        3
    } else {
        4
    }
}

/// `total` cut into tiles of `step`, the last one possibly short.
#[derive(Debug, Clone, Copy)]
struct Tiles {
    full: u64,
    step: u64,
    rem: u64,
}

impl Tiles {
    fn new(total: u64, step: u64) -> Self {
        Tiles {
            full: total / step,
            step,
            rem: total % step,
        }
    }

    fn count(&self) -> u64 {
        self.full + u64::from(self.rem > 0)
    }

    fn sum_by(&self, f: impl Fn(u64) -> u64) -> u64 {
        self.full * f(self.step) + if self.rem > 0 { f(self.rem) } else { 0 }
    }
}

/// Whole-layer access counts for one batch, with residual tiles charged at
/// their actual size. `layer` is the full layer; groups are replicated.
pub fn layer_counts(layer: &LayerShape, sched: &SchedulingParams, sparsity_in: f64) -> AccessTally {
    let (m, reps) = layer.mapped();
    let n = sched.batch;
    let filt = Tiles::new(m.f, sched.filters);
    let chan = Tiles::new(m.c, sched.channels);
    let cols = Tiles::new(m.g, sched.out_width);
    let blocks = Tiles::new(m.e, sched.block_out_rows);

    let in_width_sum = cols.sum_by(|xo| input_extent(xo, m.s, m.u));
    let row_passes = blocks.sum_by(|b| b.div_ceil(sched.out_rows));
    let in_rows_sum = blocks.sum_by(|b| Tiles::new(b, sched.out_rows).sum_by(|yo| input_extent(yo, m.r, m.u)));

    let ifmap = reps * n * filt.count() * m.c * in_width_sum * in_rows_sum;
    let macs = reps * n * m.f * m.c * m.r * m.s * m.g * m.e;
    let dram_filter = if m.kind == LayerKind::Pool {
        0
    } else {
        reps * m.f * m.c * m.r * m.s * cols.count() * blocks.count()
    };
    AccessTally {
        dram_ifmap: ifmap,
        dram_filter,
        dram_ofmap: reps * n * m.f * m.g * m.e,
        glb_ifmap: ifmap,
        glb_psum: reps * 2 * n * m.f * chan.count() * m.g * m.e,
        rf_accesses: operands(&m) * macs,
        ipe_transfers: reps * (m.r - 1) * n * m.f * m.c * m.g * m.e,
        macs,
        passes: reps * filt.count() * chan.count() * cols.count() * row_passes,
        writebacks: reps * filt.count() * cols.count() * blocks.count(),
        sparsity_in,
    }
}
