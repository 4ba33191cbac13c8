//! Rule-based mapping of one layer onto the PE array.
//!
//! A *set* is `R` PE rows spanning all `K` columns; a *pass* is the work the
//! whole array completes at once. Passes walk the ifmap along X, then Y, then
//! Z (channels); after the full Z extent the `out_width x block_out_rows`
//! ofmap region is written back to DRAM.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{AcceleratorConfig, LayerKind, LayerShape};

/// Which exception rule adjusted the main-path schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exception {
    None,
    /// Block height fell below the pass height, or the filter count had to
    /// be reduced to fit the GLB.
    SmallYo,
    FewChannels,
    FewFilters,
    PsumLimit,
    OneByOneFilter,
}

impl fmt::Display for Exception {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exception::None => "None",
            Exception::SmallYo => "SmallYo",
            Exception::FewChannels => "FewChannels",
            Exception::FewFilters => "FewFilters",
            Exception::PsumLimit => "PsumLimit",
            Exception::OneByOneFilter => "OneByOneFilter",
        })
    }
}

/// Output of the mapper for one (mapped) layer.
///
/// CSV column names in parentheses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulingParams {
    /// Filters per pass (`f_i`).
    pub filters: u64,
    /// Channels per pass (`z_i`).
    pub channels: u64,
    /// Ifmap rows per pass (`y_i`).
    pub in_rows: u64,
    /// Ofmap rows per pass (`y_o`).
    pub out_rows: u64,
    /// Ifmap width per pass (`X_i`).
    pub in_width: u64,
    /// Ofmap width per pass (`X_o`).
    pub out_width: u64,
    /// Ifmap rows per DRAM writeback (`Y_i`).
    pub block_in_rows: u64,
    /// Ofmap rows per DRAM writeback (`Y_o`).
    pub block_out_rows: u64,
    /// Images batched in the GLB (`N`).
    pub batch: u64,
    /// Sets per pass.
    pub sets: u64,
    /// Channels per set.
    pub channels_per_set: u64,
    pub exception: Exception,
}

impl SchedulingParams {
    /// Ifmap bits resident in the GLB for one image.
    pub fn ifmap_bits(&self, b_w: u32) -> u64 {
        u64::from(b_w) * self.in_width * self.in_rows * self.channels
    }

    /// Psum bits resident in the GLB for one image.
    pub fn psum_bits(&self, b_w: u32) -> u64 {
        u64::from(b_w) * self.out_width * self.block_out_rows * self.filters
    }

    /// Checks every structural invariant against the mapped layer.
    pub fn violations(&self, layer: &LayerShape, acc: &AcceleratorConfig) -> Vec<String> {
        let mut v = Vec::new();
        let mut check = |ok: bool, what: &str| {
            if !ok {
                v.push(what.to_string());
            }
        };
        check(self.sets >= 1, "sets >= 1");
        check(self.sets == acc.j / layer.r, "sets == floor(J/R)");
        check(relation_holds(self.out_rows, self.in_rows, layer.r, layer.u), "y_o == (y_i - R)/U + 1");
        check(relation_holds(self.out_width, self.in_width, layer.s, layer.u), "X_o == (X_i - S)/U + 1");
        check(
            relation_holds(self.block_out_rows, self.block_in_rows, layer.r, layer.u),
            "Y_o == (Y_i - R)/U + 1",
        );
        check(self.out_rows <= acc.k, "y_o <= K");
        check(self.out_rows <= layer.e, "y_o <= E");
        check(self.block_out_rows >= self.out_rows, "Y_o >= y_o");
        check(self.block_out_rows <= layer.e, "Y_o <= E");
        check(self.out_width >= 1 && self.out_width <= layer.g, "1 <= X_o <= G");
        check(self.channels >= 1 && self.channels <= layer.c, "1 <= z_i <= C");
        check(self.filters >= 1, "f_i >= 1");
        check(self.filters <= layer.f, "f_i <= F");
        check(self.filters <= acc.p_s, "f_i <= P_s");
        check(self.batch >= 1, "N >= 1");
        let per_image = self.ifmap_bits(acc.b_w) + self.psum_bits(acc.b_w);
        check(per_image > 0 && self.batch * per_image <= acc.glb_bits(), "N * (|ifmap| + |psum|) <= |GLB|");
        check(per_image > 0 && self.batch == acc.glb_bits() / per_image, "N == floor(|GLB| / (|ifmap| + |psum|))");
        v
    }
}

fn relation_holds(out: u64, input: u64, window: u64, stride: u64) -> bool {
    input >= window && (input - window) % stride == 0 && (input - window) / stride + 1 == out
}

/// Input extent needed to produce `out` outputs.
pub fn input_extent(out: u64, window: u64, stride: u64) -> u64 {
    (out - 1) * stride + window
}

/// Sets that fit in the array height.
pub fn sets_per_pass(j: u64, r: u64) -> Result<u64> {
    if r == 0 || r > j {
        return Err(Error::FilterExceedsArray { r, j });
    }
    Ok(j / r)
}

/// Pass heights `(y_i, y_o)`: one ofmap row per PE column.
pub fn compute_y(k: u64, e: u64, r: u64, u: u64) -> (u64, u64) {
    let y_o = k.min(e);
    (input_extent(y_o, r, u), y_o)
}

/// `(channels_per_set, channels, filters)` before exception rules.
pub fn compute_zi_fi(layer: &LayerShape, acc: &AcceleratorConfig, sets: u64) -> Result<(u64, u64, u64)> {
    let c_set = acc.i_s / layer.s;
    if c_set == 0 {
        return Err(Error::RowExceedsIfmapRf { s: layer.s, i_s: acc.i_s });
    }
    Ok((c_set, c_set * sets, acc.f_s / acc.i_s))
}

/// Tile extents chosen to fit the GLB.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlbFit {
    pub in_width: u64,
    pub out_width: u64,
    pub block_in_rows: u64,
    pub block_out_rows: u64,
    pub batch: u64,
}

/// Picks the ifmap width and writeback height so at least one image's pass
/// data fits in the GLB.
///
/// Starts from the full layer (`X_i = W`, `Y_o = E`). While nothing fits,
/// first lowers `Y_o` through the multiples of `y_o` below `E` down to `y_o`,
/// then narrows `X_o` one column at a time down to 1.
pub fn fit_glb(
    layer: &LayerShape,
    acc: &AcceleratorConfig,
    channels: u64,
    filters: u64,
    in_rows: u64,
    out_rows: u64,
) -> Result<GlbFit> {
    let glb = acc.glb_bits();
    let b_w = u64::from(acc.b_w);
    let try_point = |x_o: u64, yy_o: u64| -> (GlbFit, u64) {
        let x_i = input_extent(x_o, layer.s, layer.u);
        let need = b_w * (x_i * in_rows * channels + x_o * yy_o * filters);
        let fit = GlbFit {
            in_width: x_i,
            out_width: x_o,
            block_in_rows: input_extent(yy_o, layer.r, layer.u),
            block_out_rows: yy_o,
            batch: if need == 0 { 0 } else { glb / need },
        };
        (fit, need)
    };

    let row_steps = std::iter::once(layer.e).chain((1..layer.e.div_ceil(out_rows)).rev().map(|k| k * out_rows));
    for yy_o in row_steps {
        let (fit, _) = try_point(layer.g, yy_o);
        if fit.batch >= 1 {
            return Ok(fit);
        }
    }
    for x_o in (1..layer.g).rev() {
        let (fit, _) = try_point(x_o, out_rows);
        if fit.batch >= 1 {
            return Ok(fit);
        }
    }
    let (_, need) = try_point(1, out_rows);
    Err(Error::GlbTooSmall { glb_bits: glb, needed_bits: need })
}

/// Channel/filter choice for `R = S = 1` layers.
pub trait PointwisePolicy {
    /// Returns `(channels_per_set, channels, filters)`.
    fn choose(&self, layer: &LayerShape, acc: &AcceleratorConfig, sets: u64) -> (u64, u64, u64);
}

/// Fills each ifmap RF with channels, caps the pass at `C`, and spends the
/// filter RF on as many filters as fit.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultPointwise;

impl PointwisePolicy for DefaultPointwise {
    fn choose(&self, layer: &LayerShape, acc: &AcceleratorConfig, sets: u64) -> (u64, u64, u64) {
        let c_set = acc.i_s.min(layer.c);
        let channels = (c_set * sets).min(layer.c);
        let per_pe = (channels / sets).max(1);
        let filters = acc.p_s.min(layer.f).min(acc.f_s / per_pe);
        (c_set, channels, filters)
    }
}

/// Applies the exception rules and re-fits the GLB.
pub fn apply_exceptions(layer: &LayerShape, acc: &AcceleratorConfig, params: SchedulingParams) -> Result<SchedulingParams> {
    apply_exceptions_with(layer, acc, params, &DefaultPointwise)
}

pub fn apply_exceptions_with(
    layer: &LayerShape,
    acc: &AcceleratorConfig,
    params: SchedulingParams,
    policy: &dyn PointwisePolicy,
) -> Result<SchedulingParams> {
    let mut p = params;
    let mut fired = Exception::None;

    if layer.kind == LayerKind::Pool {
        // Depthwise: one channel per filter.
        p.channels = p.channels.min(layer.c);
        p.channels_per_set = p.channels_per_set.min(layer.c);
        p.filters = 1;
    } else if layer.r == 1 && layer.s == 1 {
        let (c_set, channels, filters) = policy.choose(layer, acc, p.sets);
        p.channels_per_set = c_set;
        p.channels = channels;
        p.filters = filters;
        fired = Exception::OneByOneFilter;
    } else if layer.c < p.channels {
        p.channels = layer.c;
        p.channels_per_set = layer.c.div_ceil(p.sets);
        // Spend the freed filter RF on more filters.
        let rows_per_pe = p.channels_per_set * layer.s;
        p.filters = (acc.f_s / rows_per_pe).max(1);
        fired = Exception::FewChannels;
    }

    if p.filters > layer.f {
        p.filters = layer.f;
        if fired == Exception::None {
            fired = Exception::FewFilters;
        }
    }
    if p.filters > acc.p_s {
        p.filters = acc.p_s;
        if fired == Exception::None {
            fired = Exception::PsumLimit;
        }
    }
    p.filters = p.filters.max(1);

    // The fit never returns Y_o < y_o, so the unused-column case reduces to
    // shrinking f_i until a pass fits.
    let mut filters = p.filters;
    let fit = loop {
        match fit_glb(layer, acc, p.channels, filters, p.in_rows, p.out_rows) {
            Ok(fit) => break fit,
            Err(e) if filters == 1 => return Err(e),
            Err(_) => filters -= 1,
        }
    };
    if filters < p.filters && fired == Exception::None {
        fired = Exception::SmallYo;
    }
    p.filters = filters;
    p.in_width = fit.in_width;
    p.out_width = fit.out_width;
    p.block_in_rows = fit.block_in_rows;
    p.block_out_rows = fit.block_out_rows;
    p.batch = fit.batch;
    p.exception = fired;
    Ok(p)
}

/// Schedules the mapped shape of `layer` (see [`LayerShape::mapped`]).
pub fn schedule_layer(layer: &LayerShape, acc: &AcceleratorConfig) -> Result<SchedulingParams> {
    schedule_layer_with(layer, acc, &DefaultPointwise)
}

pub fn schedule_layer_with(
    layer: &LayerShape,
    acc: &AcceleratorConfig,
    policy: &dyn PointwisePolicy,
) -> Result<SchedulingParams> {
    let (mapped, _) = layer.mapped();
    schedule_mapped(&mapped, acc, policy)
}

/// Schedules a shape that is already in mapped form.
pub fn schedule_mapped(
    layer: &LayerShape,
    acc: &AcceleratorConfig,
    policy: &dyn PointwisePolicy,
) -> Result<SchedulingParams> {
    let sets = sets_per_pass(acc.j, layer.r)?;
    let (in_rows, out_rows) = compute_y(acc.k, layer.e, layer.r, layer.u);
    let (channels_per_set, channels, filters) = compute_zi_fi(layer, acc, sets)?;
    let main = SchedulingParams {
        filters,
        channels,
        in_rows,
        out_rows,
        in_width: layer.w,
        out_width: layer.g,
        block_in_rows: layer.h,
        block_out_rows: layer.e,
        batch: 0,
        sets,
        channels_per_set,
        exception: Exception::None,
    };
    apply_exceptions_with(layer, acc, main, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eyeriss() -> AcceleratorConfig {
        AcceleratorConfig {
            j: 12,
            k: 14,
            f_s: 224,
            i_s: 12,
            p_s: 24,
            glb_bytes: 108 * 1024,
            b_w: 16,
        }
    }

    #[test]
    fn sets() {
        assert_eq!(sets_per_pass(12, 3), Ok(4));
        assert_eq!(sets_per_pass(12, 5), Ok(2));
        assert_eq!(sets_per_pass(12, 13), Err(Error::FilterExceedsArray { r: 13, j: 12 }));
    }

    #[test]
    fn pass_heights() {
        assert_eq!(compute_y(14, 55, 5, 1), (18, 14));
        assert_eq!(compute_y(14, 13, 3, 2), (27, 13));
        assert_eq!(compute_y(14, 14, 3, 1).1, 14);
    }

    #[test]
    fn channels_and_filters() {
        let acc = eyeriss();
        let l = LayerShape::conv("x", 5, 5, 31, 31, 48, 128, 1);
        assert_eq!(compute_zi_fi(&l, &acc, 2), Ok((2, 4, 18)));
        let l = LayerShape::conv("x", 12, 12, 31, 31, 48, 128, 1);
        assert_eq!(compute_zi_fi(&l, &acc, 1).unwrap().0, 1);
        let l = LayerShape::conv("x", 13, 13, 31, 31, 48, 128, 1);
        assert_eq!(compute_zi_fi(&l, &acc, 1), Err(Error::RowExceedsIfmapRf { s: 13, i_s: 12 }));
    }

    #[test]
    fn no_shrink_when_glb_is_huge() {
        let l = LayerShape::conv("x", 3, 3, 10, 10, 4, 8, 1);
        let acc = AcceleratorConfig { glb_bytes: 1 << 30, ..eyeriss() };
        let fit = fit_glb(&l, &acc, 4, 2, 10, 8).unwrap();
        assert_eq!((fit.in_width, fit.block_out_rows), (l.w, l.e));
        let need = 16 * (10 * 10 * 4 + 8 * 8 * 2);
        assert_eq!(fit.batch, acc.glb_bits() / need);
    }

    #[test]
    fn glb_too_small() {
        let l = LayerShape::conv("x", 3, 3, 10, 10, 4, 8, 1);
        let acc = AcceleratorConfig { glb_bytes: 4, ..eyeriss() };
        assert!(matches!(fit_glb(&l, &acc, 4, 2, 10, 8), Err(Error::GlbTooSmall { .. })));
    }

    #[test]
    fn few_channels_raises_filters() {
        let acc = eyeriss();
        // 3x3 on a 3-channel image: 4 sets x 4 channels/set would want 16.
        let l = LayerShape::conv("c1", 3, 3, 227, 227, 3, 64, 2);
        let p = schedule_layer(&l, &acc).unwrap();
        assert_eq!(p.exception, Exception::FewChannels);
        assert_eq!(p.channels, 3);
        assert!(p.filters > 224 / 12, "filters {}", p.filters);
        assert!(p.violations(&l, &acc).is_empty(), "{:?}", p.violations(&l, &acc));
    }

    #[test]
    fn few_filters_clamps() {
        let acc = eyeriss();
        let l = LayerShape::conv("x", 3, 3, 16, 16, 64, 2, 1);
        let p = schedule_layer(&l, &acc).unwrap();
        assert_eq!(p.filters, 2);
        assert_eq!(p.exception, Exception::FewFilters);
    }

    #[test]
    fn pointwise_rule() {
        let acc = eyeriss();
        let l = LayerShape::conv("fs", 1, 1, 56, 56, 64, 16, 1);
        let p = schedule_layer(&l, &acc).unwrap();
        assert_eq!(p.exception, Exception::OneByOneFilter);
        assert!(p.channels <= l.c && p.filters >= 1);
        assert!(p.violations(&l, &acc).is_empty());
    }

    #[test]
    fn pool_uses_single_filter() {
        let acc = eyeriss();
        let l = LayerShape::pool("p1", 3, 55, 96, 2);
        let p = schedule_layer(&l, &acc).unwrap();
        let (m, _) = l.mapped();
        assert_eq!((p.filters, p.channels), (1, 1));
        assert!(p.violations(&m, &acc).is_empty());
    }

    #[test]
    fn deterministic() {
        let acc = eyeriss();
        let l = LayerShape::conv("x", 5, 5, 31, 31, 48, 128, 1);
        assert_eq!(schedule_layer(&l, &acc), schedule_layer(&l, &acc));
    }
}
