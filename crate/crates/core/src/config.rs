//! File formats: JSON for networks and configs, CSV for GLB curves.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dse::GlbEnergyCurve;
use crate::error::{Error, Result};
use crate::model::{LayerKind, LayerShape, NetworkTopology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerEntry {
    id: String,
    kind: LayerKind,
    #[serde(rename = "R")]
    r: u64,
    #[serde(rename = "S")]
    s: u64,
    #[serde(rename = "H")]
    h: u64,
    #[serde(rename = "W")]
    w: u64,
    #[serde(rename = "E")]
    e: u64,
    #[serde(rename = "G")]
    g: u64,
    #[serde(rename = "C")]
    c: u64,
    #[serde(rename = "F")]
    f: u64,
    #[serde(rename = "U")]
    u: u64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    groups: u64,
    #[serde(default, skip_serializing_if = "is_false")]
    parallel: bool,
    sparsity_out: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    raw_output_bits: Option<u64>,
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    bit_width: u32,
    input_bits_uncompressed: u64,
    layers: Vec<LayerEntry>,
}

fn input_err(what: &str, e: impl std::fmt::Display) -> Error {
    Error::Input(format!("{what}: {e}"))
}

/// Parses a network description. Layers may override their raw output
/// size with `raw_output_bits`; otherwise it is `E * G * F * bit_width`.
pub fn parse_network(text: &str) -> Result<NetworkTopology> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| input_err("network", e))?;
    let mut layers = Vec::with_capacity(file.layers.len());
    let mut sparsity = Vec::with_capacity(file.layers.len());
    let mut overrides = Vec::with_capacity(file.layers.len());
    for l in file.layers {
        sparsity.push(l.sparsity_out);
        overrides.push(l.raw_output_bits);
        layers.push(LayerShape {
            id: l.id,
            kind: l.kind,
            r: l.r,
            s: l.s,
            h: l.h,
            w: l.w,
            e: l.e,
            g: l.g,
            c: l.c,
            f: l.f,
            u: l.u,
            groups: l.groups,
            parallel: l.parallel,
        });
    }
    let mut net = NetworkTopology::new(&file.name, file.bit_width, file.input_bits_uncompressed, layers, sparsity);
    for (bits, o) in net.raw_output_bits.iter_mut().zip(overrides) {
        if let Some(v) = o {
            *bits = v;
        }
    }
    Ok(net)
}

/// Serializes a network; `raw_output_bits` is written only where it
/// differs from the derived size.
pub fn network_to_json(net: &NetworkTopology) -> String {
    let layers = net
        .layers
        .iter()
        .zip(&net.sparsity_out)
        .zip(&net.raw_output_bits)
        .map(|((l, &sparsity_out), &raw)| {
            let derived = l.output_elements() * u64::from(net.bit_width);
            LayerEntry {
                id: l.id.clone(),
                kind: l.kind,
                r: l.r,
                s: l.s,
                h: l.h,
                w: l.w,
                e: l.e,
                g: l.g,
                c: l.c,
                f: l.f,
                u: l.u,
                groups: l.groups,
                parallel: l.parallel,
                sparsity_out,
                raw_output_bits: (raw != derived).then_some(raw),
            }
        })
        .collect();
    let file = NetworkFile {
        name: net.name.clone(),
        source: None,
        bit_width: net.bit_width,
        input_bits_uncompressed: net.input_bits_uncompressed,
        layers,
    };
    serde_json::to_string_pretty(&file).expect("network serializes")
}

/// Parses any JSON config type, rejecting unknown keys.
pub fn parse_json<T: DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| input_err(what, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("config serializes")
}

/// Parses `size_bytes,e_access_pj` rows. A header row and `#` comments are
/// skipped.
pub fn parse_glb_curve(text: &str) -> Result<GlbEnergyCurve> {
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("size_bytes") {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::Input(format!("GLB curve line {}: expected two columns", n + 1)));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Input(format!("GLB curve line {}: {e}", n + 1)))
        };
        points.push((parse(a)?, parse(b)?));
    }
    GlbEnergyCurve::new(points)
}

pub fn glb_curve_to_csv(curve: &GlbEnergyCurve) -> String {
    let mut s = String::from("size_bytes,e_access_pj\n");
    for (size, e) in curve.points() {
        s.push_str(&format!("{size},{e}\n"));
    }
    s
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_network(path: &Path) -> Result<NetworkTopology> {
    with_path(path, parse_network(&read(path)?))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let what = path.display().to_string();
    parse_json(&what, &read(path)?)
}

pub fn load_glb_curve(path: &Path) -> Result<GlbEnergyCurve> {
    with_path(path, parse_glb_curve(&read(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::CommEnvironment;
    use crate::model::{AcceleratorConfig, SramClockCap, TechnologyParams};

    const NET: &str = r#"{
        "name": "toy", "bit_width": 8, "input_bits_uncompressed": 800,
        "layers": [
            {"id": "c1", "kind": "conv", "R": 3, "S": 3, "H": 10, "W": 10, "E": 8, "G": 8, "C": 1, "F": 4, "U": 1, "sparsity_out": 0.5},
            {"id": "p1", "kind": "pool", "R": 2, "S": 2, "H": 8, "W": 8, "E": 4, "G": 4, "C": 4, "F": 4, "U": 2, "sparsity_out": 0.4, "raw_output_bits": 99}
        ]
    }"#;

    #[test]
    fn network_round_trip() {
        let net = parse_network(NET).unwrap();
        assert_eq!(net.raw_output_bits, vec![8 * 8 * 4 * 8, 99]);
        assert_eq!(parse_network(&network_to_json(&net)).unwrap(), net);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = NET.replace("\"U\": 1,", "\"U\": 1, \"pad\": 1,");
        assert!(matches!(parse_network(&bad), Err(Error::Input(_))));
        let acc = r#"{"J":12,"K":14,"f_s":224,"I_s":12,"P_s":24,"glb_bytes":1024,"b_w":16,"extra":0}"#;
        assert!(parse_json::<AcceleratorConfig>("acc", acc).is_err());
    }

    #[test]
    fn config_round_trips() {
        let acc = AcceleratorConfig {
            j: 12,
            k: 14,
            f_s: 224,
            i_s: 12,
            p_s: 24,
            glb_bytes: 110_592,
            b_w: 16,
        };
        assert_eq!(parse_json::<AcceleratorConfig>("a", &to_json(&acc)).unwrap(), acc);
        let comm = CommEnvironment {
            bitrate_bps: 1e8,
            ecc_overhead_pct: 25.0,
            tx_power_w: 1.14,
        };
        assert_eq!(parse_json::<CommEnvironment>("c", &to_json(&comm)).unwrap(), comm);
        let tech = TechnologyParams {
            e_mac: 0.95,
            e_rf: 1.69,
            e_ipe: 3.39,
            e_glb: 10.17,
            e_dram: 338.82,
            mac_mult_fraction: 0.8,
            vdd: 1.0,
            t_clk: 5e-9,
            leakage_clk: 1e-3,
            chip_dim: 4e-3,
            c_wire_per_len: 2e-10,
            c_buff: 5e-16,
            n_buff: 10,
            n_ff_per_pe: 600,
            c_ff: 1e-15,
            c_sram_clocked: SramClockCap::Components {
                c_decod: 1e-12,
                c_arw_reg: 2e-12,
                c_bl_pre: 3e-12,
                c_sa_pre: 4e-12,
            },
            other_cntrl_fraction: 0.15,
            throughput: 2e10,
        };
        assert_eq!(parse_json::<TechnologyParams>("t", &to_json(&tech)).unwrap(), tech);
    }

    #[test]
    fn glb_curve_csv() {
        let c = parse_glb_curve("size_bytes,e_access_pj\n# note\n1024,1.5\n2048,2.5\n").unwrap();
        assert_eq!(c.points(), &[(1024.0, 1.5), (2048.0, 2.5)]);
        assert_eq!(parse_glb_curve(&glb_curve_to_csv(&c)).unwrap(), c);
        assert!(parse_glb_curve("1,2,3\n").is_err());
    }
}
