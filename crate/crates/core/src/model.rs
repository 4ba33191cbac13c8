//! Domain types shared by the scheduler, energy engine and partitioner.
//!
//! All energies are picojoules, capacitances farads, lengths metres and
//! times seconds unless a field name says otherwise.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Pool,
    Fc,
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerKind::Conv => "conv",
            LayerKind::Pool => "pool",
            LayerKind::Fc => "fc",
        })
    }
}

fn one() -> u64 {
    1
}

fn is_one(v: &u64) -> bool {
    *v == 1
}

fn is_false(v: &bool) -> bool {
    !*v
}

/// Geometry of one CNN layer. `h`/`w` are the padded ifmap dimensions.
///
/// FC layers are convolutions whose filter covers the whole ifmap
/// (`r == h`, `s == w`, `e == g == 1`). Pool layers carry the window in
/// `r`/`s`/`u` and have `f == c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerShape {
    pub id: String,
    pub kind: LayerKind,
    #[serde(rename = "R")]
    pub r: u64,
    #[serde(rename = "S")]
    pub s: u64,
    #[serde(rename = "H")]
    pub h: u64,
    #[serde(rename = "W")]
    pub w: u64,
    #[serde(rename = "E")]
    pub e: u64,
    #[serde(rename = "G")]
    pub g: u64,
    #[serde(rename = "C")]
    pub c: u64,
    #[serde(rename = "F")]
    pub f: u64,
    #[serde(rename = "U")]
    pub u: u64,
    /// Grouped convolution: each group sees `c / groups` channels and
    /// produces `f / groups` filters.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub groups: u64,
    /// Consumes the same input as the preceding layer; outputs are
    /// concatenated along channels (fire-module expand branches).
    #[serde(default, skip_serializing_if = "is_false")]
    pub parallel: bool,
}

impl LayerShape {
    /// Plain convolution with no groups.
    #[allow(clippy::too_many_arguments)]
    pub fn conv(id: &str, r: u64, s: u64, h: u64, w: u64, c: u64, f: u64, u: u64) -> Self {
        let e = if h >= r && u > 0 { (h - r) / u + 1 } else { 0 };
        let g = if w >= s && u > 0 { (w - s) / u + 1 } else { 0 };
        LayerShape {
            id: id.to_string(),
            kind: LayerKind::Conv,
            r,
            s,
            h,
            w,
            e,
            g,
            c,
            f,
            u,
            groups: 1,
            parallel: false,
        }
    }

    pub fn pool(id: &str, window: u64, h: u64, c: u64, u: u64) -> Self {
        LayerShape {
            kind: LayerKind::Pool,
            ..LayerShape::conv(id, window, window, h, h, c, c, u)
        }
    }

    pub fn fc(id: &str, h: u64, c: u64, f: u64) -> Self {
        LayerShape {
            kind: LayerKind::Fc,
            ..LayerShape::conv(id, h, h, h, h, c, f, 1)
        }
    }

    /// Dense multiply-accumulate (or window-op, for pooling) count per image.
    pub fn macs(&self) -> u64 {
        match self.kind {
            LayerKind::Pool => self.r * self.s * self.e * self.g * self.f,
            _ => self.r * self.s * (self.c / self.groups.max(1)) * self.e * self.g * self.f,
        }
    }

    /// Output volume in elements.
    pub fn output_elements(&self) -> u64 {
        self.e * self.g * self.f
    }

    /// The shape actually mapped onto the PE array and the number of times
    /// it is replicated to cover the layer.
    ///
    /// Grouped convolutions map one group (`c/groups`, `f/groups`) and repeat
    /// it `groups` times. Pooling is depthwise: it maps as `f == c` filters
    /// each reading a single channel.
    pub fn mapped(&self) -> (LayerShape, u64) {
        match self.kind {
            LayerKind::Pool => (
                LayerShape {
                    c: 1,
                    f: self.c,
                    groups: 1,
                    parallel: false,
                    ..self.clone()
                },
                1,
            ),
            _ => {
                let groups = self.groups.max(1);
                (
                    LayerShape {
                        c: self.c / groups,
                        f: self.f / groups,
                        groups: 1,
                        parallel: false,
                        ..self.clone()
                    },
                    groups,
                )
            }
        }
    }
}

/// An ordered CNN with per-layer output sparsity and transmit payload sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    pub name: String,
    pub bit_width: u32,
    pub input_bits_uncompressed: u64,
    pub layers: Vec<LayerShape>,
    /// Fraction of zeros in each layer's output.
    pub sparsity_out: Vec<f64>,
    /// Raw (uncompressed) bits that must be sent if the network is cut
    /// after each layer.
    pub raw_output_bits: Vec<u64>,
}

impl NetworkTopology {
    /// Builds a topology deriving `raw_output_bits` from the output volumes.
    pub fn new(
        name: &str,
        bit_width: u32,
        input_bits_uncompressed: u64,
        layers: Vec<LayerShape>,
        sparsity_out: Vec<f64>,
    ) -> Self {
        let raw_output_bits = layers
            .iter()
            .map(|l| l.output_elements() * u64::from(bit_width))
            .collect();
        NetworkTopology {
            name: name.to_string(),
            bit_width,
            input_bits_uncompressed,
            layers,
            sparsity_out,
            raw_output_bits,
        }
    }

    /// Zero-fraction of each layer's input. The first layer reads the dense
    /// image.
    pub fn sparsity_in(&self, index: usize) -> f64 {
        if index == 0 {
            0.0
        } else {
            self.sparsity_out[index - 1]
        }
    }

    pub fn layer_index(&self, id: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.id == id)
    }
}

/// PE-array accelerator hardware parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceleratorConfig {
    /// PE rows.
    #[serde(rename = "J")]
    pub j: u64,
    /// PE columns.
    #[serde(rename = "K")]
    pub k: u64,
    /// Filter RF capacity, elements per PE.
    pub f_s: u64,
    /// Ifmap RF capacity, elements per PE.
    #[serde(rename = "I_s")]
    pub i_s: u64,
    /// Psum RF capacity, elements per PE.
    #[serde(rename = "P_s")]
    pub p_s: u64,
    pub glb_bytes: u64,
    /// Element bit width.
    pub b_w: u32,
}

impl AcceleratorConfig {
    pub fn glb_bits(&self) -> u64 {
        self.glb_bytes * 8
    }

    pub fn pe_count(&self) -> u64 {
        self.j * self.k
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let fields = [
            ("J", self.j),
            ("K", self.k),
            ("f_s", self.f_s),
            ("I_s", self.i_s),
            ("P_s", self.p_s),
            ("glb_bytes", self.glb_bytes),
            ("b_w", u64::from(self.b_w)),
        ];
        for (name, v) in fields {
            if v == 0 {
                out.push(Violation::config(Rule::Dimension, format!("{name} must be >= 1")));
            }
        }
        if self.glb_bits() < u64::from(self.b_w) {
            out.push(Violation::config(
                Rule::Dimension,
                "GLB must hold at least one element".to_string(),
            ));
        }
        out
    }
}

/// Clocked SRAM capacitance, given as a total or as its four components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SramClockCap {
    Total(f64),
    Components {
        c_decod: f64,
        c_arw_reg: f64,
        c_bl_pre: f64,
        c_sa_pre: f64,
    },
}

impl SramClockCap {
    pub fn total(&self) -> f64 {
        match *self {
            SramClockCap::Total(c) => c,
            SramClockCap::Components {
                c_decod,
                c_arw_reg,
                c_bl_pre,
                c_sa_pre,
            } => c_decod + c_arw_reg + c_bl_pre + c_sa_pre,
        }
    }
}

fn default_other_cntrl() -> f64 {
    0.15
}

fn default_mult_fraction() -> f64 {
    0.8
}

/// Per-operation energies plus the electrical parameters of the clock tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyParams {
    /// Energy per MAC (pJ).
    pub e_mac: f64,
    /// Energy per RF access (pJ).
    pub e_rf: f64,
    /// Energy per inter-PE transfer (pJ).
    pub e_ipe: f64,
    /// Energy per GLB access (pJ).
    pub e_glb: f64,
    /// Energy per DRAM access (pJ).
    pub e_dram: f64,
    /// Share of `e_mac` that is multiplication; the rest scales like an add.
    #[serde(default = "default_mult_fraction")]
    pub mac_mult_fraction: f64,
    /// Supply voltage (V).
    pub vdd: f64,
    /// Clock period (s).
    pub t_clk: f64,
    /// Clock-network leakage power (W).
    pub leakage_clk: f64,
    /// Die edge length (m).
    pub chip_dim: f64,
    /// Wire capacitance per metre (F/m).
    pub c_wire_per_len: f64,
    /// Input capacitance of one clock buffer (F).
    pub c_buff: f64,
    pub n_buff: u64,
    pub n_ff_per_pe: u64,
    /// Clocked capacitance of one flip-flop (F).
    pub c_ff: f64,
    pub c_sram_clocked: SramClockCap,
    #[serde(default = "default_other_cntrl")]
    pub other_cntrl_fraction: f64,
    /// Platform throughput in MAC/s, used for latency.
    pub throughput: f64,
}

impl TechnologyParams {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let non_negative = [
            ("e_mac", self.e_mac),
            ("e_rf", self.e_rf),
            ("e_ipe", self.e_ipe),
            ("e_glb", self.e_glb),
            ("e_dram", self.e_dram),
            ("vdd", self.vdd),
            ("leakage_clk", self.leakage_clk),
            ("chip_dim", self.chip_dim),
            ("c_wire_per_len", self.c_wire_per_len),
            ("c_buff", self.c_buff),
            ("c_ff", self.c_ff),
            ("c_sram_clocked", self.c_sram_clocked.total()),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(Violation::config(Rule::Range, format!("{name} must be a finite value >= 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.mac_mult_fraction) {
            out.push(Violation::config(Rule::Range, "mac_mult_fraction must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.other_cntrl_fraction) {
            out.push(Violation::config(Rule::Range, "other_cntrl_fraction must lie in [0, 1)".into()));
        }
        if !(self.t_clk > 0.0) {
            out.push(Violation::config(Rule::Range, "t_clk must be > 0".into()));
        }
        if !(self.throughput > 0.0) {
            out.push(Violation::config(Rule::Range, "throughput must be > 0".into()));
        }
        out
    }

    /// Multiplies the MAC energy and every clocked capacitance by a process
    /// scaling factor `s`.
    pub fn with_process_factor(&self, s: f64) -> TechnologyParams {
        let sram = match self.c_sram_clocked {
            SramClockCap::Total(c) => SramClockCap::Total(c * s),
            SramClockCap::Components {
                c_decod,
                c_arw_reg,
                c_bl_pre,
                c_sa_pre,
            } => SramClockCap::Components {
                c_decod: c_decod * s,
                c_arw_reg: c_arw_reg * s,
                c_bl_pre: c_bl_pre * s,
                c_sa_pre: c_sa_pre * s,
            },
        };
        TechnologyParams {
            e_mac: self.e_mac * s,
            c_wire_per_len: self.c_wire_per_len * s,
            c_buff: self.c_buff * s,
            c_ff: self.c_ff * s,
            c_sram_clocked: sram,
            ..self.clone()
        }
    }
}

/// `s = (L_to / L_from) * (V_to / V_from)^2`, the factor used to port
/// capacitances and switching energies between process nodes.
pub fn process_scaling_factor(node_from_nm: f64, node_to_nm: f64, vdd_from: f64, vdd_to: f64) -> f64 {
    (node_to_nm / node_from_nm) * (vdd_to / vdd_from).powi(2)
}

const SUPPORTED_BITS: [u32; 4] = [4, 8, 16, 32];

/// Rescales per-operation energies from one bit width to another.
///
/// Memory accesses scale linearly with the ratio; the multiplier share of a
/// MAC scales quadratically and the adder share linearly.
pub fn scale_technology(t: &TechnologyParams, from_bits: u32, to_bits: u32) -> Result<TechnologyParams> {
    for bits in [from_bits, to_bits] {
        if !SUPPORTED_BITS.contains(&bits) {
            return Err(Error::BitWidth(bits));
        }
    }
    if from_bits == to_bits {
        return Ok(t.clone());
    }
    let r = f64::from(to_bits) / f64::from(from_bits);
    let m = t.mac_mult_fraction;
    let mult = m * r * r;
    let add = (1.0 - m) * r;
    // The split is re-expressed at the new width so that scaling back
    // recovers the original parameters.
    let mac_mult_fraction = if mult + add > 0.0 { mult / (mult + add) } else { m };
    Ok(TechnologyParams {
        e_mac: t.e_mac * (mult + add),
        mac_mult_fraction,
        e_rf: t.e_rf * r,
        e_ipe: t.e_ipe * r,
        e_glb: t.e_glb * r,
        e_dram: t.e_dram * r,
        ..t.clone()
    })
}

/// Accelerator and technology re-expressed at `bits` per element, from a
/// technology calibrated at `tech_bits`.
pub fn at_bit_width(
    acc: &AcceleratorConfig,
    tech: &TechnologyParams,
    tech_bits: u32,
    bits: u32,
) -> Result<(AcceleratorConfig, TechnologyParams)> {
    let tech = scale_technology(tech, tech_bits, bits)?;
    Ok((AcceleratorConfig { b_w: bits, ..acc.clone() }, tech))
}

/// Which validation rule a [`Violation`] broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Dimension,
    EMismatch,
    GMismatch,
    FcShape,
    PoolChannels,
    Groups,
    Sparsity,
    Chaining,
    BitWidth,
    Length,
    Range,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Dimension => "dimension",
            Rule::EMismatch => "E mismatch",
            Rule::GMismatch => "G mismatch",
            Rule::FcShape => "FC requires E=G=1",
            Rule::PoolChannels => "pool requires F=C",
            Rule::Groups => "groups",
            Rule::Sparsity => "sparsity range",
            Rule::Chaining => "channel chaining",
            Rule::BitWidth => "bit width",
            Rule::Length => "length",
            Rule::Range => "range",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `None` for network- or config-level problems.
    pub layer_id: Option<String>,
    pub rule: Rule,
    pub message: String,
}

impl Violation {
    fn layer(id: &str, rule: Rule, message: String) -> Self {
        Violation {
            layer_id: Some(id.to_string()),
            rule,
            message,
        }
    }

    fn config(rule: Rule, message: String) -> Self {
        Violation {
            layer_id: None,
            rule,
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.layer_id {
            Some(id) => write!(f, "layer {id}: {}: {}", self.rule, self.message),
            None => write!(f, "{}: {}", self.rule, self.message),
        }
    }
}

fn check_output_dim(id: &str, rule: Rule, name: &str, input: u64, window: u64, stride: u64, out: u64) -> Option<Violation> {
    if input < window {
        return Some(Violation::layer(id, rule, format!("window {window} larger than input {input}")));
    }
    if (input - window) % stride != 0 {
        return Some(Violation::layer(
            id,
            rule,
            format!("({input} - {window}) is not divisible by stride {stride}"),
        ));
    }
    let expected = (input - window) / stride + 1;
    if expected != out {
        return Some(Violation::layer(id, rule, format!("{name}={out} but geometry gives {expected}")));
    }
    None
}

/// Checks one layer's geometry invariants.
pub fn validate_layer(l: &LayerShape) -> Vec<Violation> {
    let mut out = Vec::new();
    let dims = [
        ("R", l.r),
        ("S", l.s),
        ("H", l.h),
        ("W", l.w),
        ("E", l.e),
        ("G", l.g),
        ("C", l.c),
        ("F", l.f),
        ("U", l.u),
        ("groups", l.groups),
    ];
    let mut dims_ok = true;
    for (name, v) in dims {
        if v == 0 {
            dims_ok = false;
            out.push(Violation::layer(&l.id, Rule::Dimension, format!("{name} must be >= 1")));
        }
    }
    if !dims_ok {
        return out;
    }
    out.extend(check_output_dim(&l.id, Rule::EMismatch, "E", l.h, l.r, l.u, l.e));
    out.extend(check_output_dim(&l.id, Rule::GMismatch, "G", l.w, l.s, l.u, l.g));
    match l.kind {
        LayerKind::Fc => {
            if l.e != 1 || l.g != 1 {
                out.push(Violation::layer(&l.id, Rule::FcShape, format!("E={} G={}", l.e, l.g)));
            }
        }
        LayerKind::Pool => {
            if l.f != l.c {
                out.push(Violation::layer(&l.id, Rule::PoolChannels, format!("C={} F={}", l.c, l.f)));
            }
            if l.groups != 1 {
                out.push(Violation::layer(&l.id, Rule::Groups, "pool layers cannot be grouped".into()));
            }
        }
        LayerKind::Conv => {}
    }
    if l.c % l.groups != 0 || l.f % l.groups != 0 {
        out.push(Violation::layer(
            &l.id,
            Rule::Groups,
            format!("C={} and F={} must both be divisible by groups={}", l.c, l.f, l.groups),
        ));
    }
    out
}

/// Returns every invariant the network breaks; empty means valid.
pub fn validate_network(net: &NetworkTopology) -> Vec<Violation> {
    let mut out = Vec::new();
    if net.bit_width != 8 && net.bit_width != 16 {
        out.push(Violation::config(
            Rule::BitWidth,
            format!("bit_width {} is not 8 or 16", net.bit_width),
        ));
    }
    if net.layers.is_empty() {
        out.push(Violation::config(Rule::Length, "network has no layers".into()));
        return out;
    }
    if net.sparsity_out.len() != net.layers.len() || net.raw_output_bits.len() != net.layers.len() {
        out.push(Violation::config(
            Rule::Length,
            "per-layer vectors must match the layer count".into(),
        ));
        return out;
    }
    for (l, &sp) in net.layers.iter().zip(&net.sparsity_out) {
        out.extend(validate_layer(l));
        if !(0.0..=1.0).contains(&sp) {
            out.push(Violation::layer(&l.id, Rule::Sparsity, format!("sparsity_out={sp} outside [0,1]")));
        }
    }
    if net.layers[0].parallel {
        out.push(Violation::layer(
            &net.layers[0].id,
            Rule::Chaining,
            "first layer cannot be parallel".into(),
        ));
    }

    // Consecutive layers chain on channels; a run of parallel siblings all
    // read the same input and concatenate their outputs.
    let mut produced: Option<u64> = None;
    let mut i = 0;
    while i < net.layers.len() {
        let head = &net.layers[i];
        let mut end = i + 1;
        while end < net.layers.len() && net.layers[end].parallel {
            end += 1;
        }
        let mut group_out = 0;
        for l in &net.layers[i..end] {
            if l.c != head.c {
                out.push(Violation::layer(
                    &l.id,
                    Rule::Chaining,
                    format!("parallel branch reads C={} but sibling {} reads C={}", l.c, head.id, head.c),
                ));
            }
            if let Some(p) = produced {
                if l.c != p {
                    out.push(Violation::layer(
                        &l.id,
                        Rule::Chaining,
                        format!("C={} but the previous stage produces {p} channels", l.c),
                    ));
                }
            }
            group_out += l.f;
        }
        produced = Some(group_out);
        i = end;
    }
    out
}
