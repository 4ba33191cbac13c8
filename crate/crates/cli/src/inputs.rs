//! Loading and validating the model inputs shared by every subcommand.

use std::path::PathBuf;

use clap::Args;
use cnnpart_core::config::{load_glb_curve, load_json, load_network};
use cnnpart_core::dse::GlbEnergyCurve;
use cnnpart_core::fixtures;
use cnnpart_core::model::validate_network;
use cnnpart_core::{at_bit_width, AcceleratorConfig, CommEnvironment, EnergyOptions, NetworkTopology, TechnologyParams};

use crate::Invalid;

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Network topology JSON [default: bundled AlexNet]
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Accelerator config JSON [default: bundled Eyeriss-class array]
    #[arg(long)]
    pub accel: Option<PathBuf>,
    /// Technology parameters JSON [default: bundled 45 nm table]
    #[arg(long)]
    pub tech: Option<PathBuf>,
    /// Bit width the technology file is calibrated at
    #[arg(long, default_value_t = fixtures::TECH_BITS)]
    pub tech_bits: u32,
    /// Data bit width (8 or 16) [default: the network's]
    #[arg(long)]
    pub bit_width: Option<u32>,
    /// Charge inter-PE psum forwarding
    #[arg(long)]
    pub inter_pe: bool,
}

pub struct Model {
    pub net: NetworkTopology,
    pub acc: AcceleratorConfig,
    pub tech: TechnologyParams,
    pub opts: EnergyOptions,
}

impl ModelArgs {
    pub fn load(&self) -> anyhow::Result<Model> {
        let mut net = match &self.network {
            Some(p) => load_network(p)?,
            None => fixtures::alexnet(),
        };
        let acc = match &self.accel {
            Some(p) => load_json::<AcceleratorConfig>(p)?,
            None => fixtures::eyeriss(),
        };
        let tech = match &self.tech {
            Some(p) => load_json::<TechnologyParams>(p)?,
            None => fixtures::technology(),
        };
        if let Some(bits) = self.bit_width {
            set_bit_width(&mut net, bits)?;
        }

        let mut problems: Vec<String> = validate_network(&net).iter().map(ToString::to_string).collect();
        let origin = |p: &Option<PathBuf>, dflt: &str| p.as_ref().map_or(dflt.to_string(), |p| p.display().to_string());
        problems.extend(
            acc.validate()
                .iter()
                .map(|v| format!("{}: {v}", origin(&self.accel, "bundled accelerator"))),
        );
        problems.extend(
            tech.validate()
                .iter()
                .map(|v| format!("{}: {v}", origin(&self.tech, "bundled technology"))),
        );
        if !problems.is_empty() {
            let what = origin(&self.network, "bundled network");
            return Err(Invalid(problems.into_iter().map(|p| format!("{what}: {p}")).collect()).into());
        }

        let (acc, tech) = at_bit_width(&acc, &tech, self.tech_bits, net.bit_width)?;
        Ok(Model {
            net,
            acc,
            tech,
            opts: EnergyOptions {
                inter_pe: self.inter_pe,
            },
        })
    }
}

/// Re-expresses a network's data sizes at another bit width.
fn set_bit_width(net: &mut NetworkTopology, bits: u32) -> anyhow::Result<()> {
    if bits != 8 && bits != 16 {
        return Err(Invalid(vec![format!("--bit-width {bits}: must be 8 or 16")]).into());
    }
    let rescale = |v: u64| (u128::from(v) * u128::from(bits) / u128::from(net.bit_width)) as u64;
    net.input_bits_uncompressed = rescale(net.input_bits_uncompressed);
    for b in &mut net.raw_output_bits {
        *b = rescale(*b);
    }
    net.bit_width = bits;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct CommArgs {
    /// Uplink config JSON [default: bundled 100 Mbps profile]
    #[arg(long)]
    pub comm: Option<PathBuf>,
    /// Override the transmit power (W)
    #[arg(long)]
    pub tx_power: Option<f64>,
    /// Override the error-correction overhead (percent)
    #[arg(long)]
    pub ecc: Option<f64>,
}

impl CommArgs {
    pub fn load(&self) -> anyhow::Result<CommEnvironment> {
        let mut env = match &self.comm {
            Some(p) => load_json::<CommEnvironment>(p)?,
            None => fixtures::comm(),
        };
        if let Some(p) = self.tx_power {
            env.tx_power_w = p;
        }
        if let Some(k) = self.ecc {
            env.ecc_overhead_pct = k;
        }
        env.validate()?;
        Ok(env)
    }
}

pub fn glb_curve(path: &Option<PathBuf>) -> anyhow::Result<GlbEnergyCurve> {
    Ok(match path {
        Some(p) => load_glb_curve(p)?,
        None => fixtures::glb_curve(),
    })
}

/// Parses `min:max:step` into an inclusive ascending list.
pub fn parse_range(text: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    let bad = |why: &str| Invalid(vec![format!("{what} '{text}': {why}")]);
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(bad("expected min:max:step").into());
    };
    let num = |s: &str| parse_scaled(s).ok_or_else(|| bad("not a number"));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(bad("need min <= max and step > 0").into());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(bad("too many points").into());
    }
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

/// Parses a comma list or a `min:max:step` range of sizes.
pub fn parse_sizes(text: &str) -> anyhow::Result<Vec<u64>> {
    let sizes: Vec<f64> = if text.contains(':') {
        parse_range(text, "--sizes")?
    } else {
        text.split(',')
            .map(|s| parse_scaled(s.trim()).ok_or_else(|| Invalid(vec![format!("--sizes: bad size '{s}'")])))
            .collect::<Result<_, _>>()?
    };
    if sizes.iter().any(|&s| !(s >= 1.0 && s.fract() == 0.0)) {
        return Err(Invalid(vec![format!("--sizes '{text}': sizes must be positive whole bytes")]).into());
    }
    Ok(sizes.into_iter().map(|s| s as u64).collect())
}

/// A number with an optional `k`, `M` or `G` suffix (powers of 1000 for
/// rates, so `100M` is 1e8) or `KiB`/`kB` style byte suffix (`kB` and `KiB`
/// are 1024).
fn parse_scaled(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, mult) = if let Some(n) = s.strip_suffix("KiB").or_else(|| s.strip_suffix("kB")) {
        (n, 1024.0)
    } else if let Some(n) = s.strip_suffix('k') {
        (n, 1e3)
    } else if let Some(n) = s.strip_suffix('M') {
        (n, 1e6)
    } else if let Some(n) = s.strip_suffix('G') {
        (n, 1e9)
    } else {
        (s, 1.0)
    };
    num.trim().parse::<f64>().ok().map(|v| v * mult)
}
