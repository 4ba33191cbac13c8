//! Bundled example inputs.

use crate::comm::CommEnvironment;
use crate::config::{parse_glb_curve, parse_json, parse_network};
use crate::dse::GlbEnergyCurve;
use crate::model::{AcceleratorConfig, NetworkTopology, TechnologyParams};

pub const ALEXNET_JSON: &str = include_str!("../fixtures/alexnet.json");
pub const SQUEEZENET_JSON: &str = include_str!("../fixtures/squeezenet_v1_1.json");
pub const EYERISS_JSON: &str = include_str!("../fixtures/eyeriss.json");
pub const TECH_JSON: &str = include_str!("../fixtures/tech_45nm_16b.json");
pub const COMM_JSON: &str = include_str!("../fixtures/comm_100mbps.json");
pub const GLB_CURVE_CSV: &str = include_str!("../fixtures/glb_curve.csv");

/// Zero fraction of the compressed input image at the first, second and
/// third quartiles.
pub const INPUT_SPARSITY_QUARTILES: [f64; 3] = [0.5199, 0.6080, 0.6909];

/// Bit width the technology fixture is calibrated at.
pub const TECH_BITS: u32 = 16;

pub fn alexnet() -> NetworkTopology {
    parse_network(ALEXNET_JSON).expect("bundled AlexNet parses")
}

pub fn squeezenet() -> NetworkTopology {
    parse_network(SQUEEZENET_JSON).expect("bundled SqueezeNet parses")
}

pub fn eyeriss() -> AcceleratorConfig {
    parse_json("eyeriss", EYERISS_JSON).expect("bundled accelerator parses")
}

pub fn technology() -> TechnologyParams {
    parse_json("technology", TECH_JSON).expect("bundled technology parses")
}

pub fn comm() -> CommEnvironment {
    parse_json("comm", COMM_JSON).expect("bundled comm parses")
}

pub fn glb_curve() -> GlbEnergyCurve {
    parse_glb_curve(GLB_CURVE_CSV).expect("bundled GLB curve parses")
}
