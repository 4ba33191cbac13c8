//! `cnnpart`: per-layer accelerator energy, client/cloud partitioning and
//! GLB sweeps from the command line.

mod inputs;
mod plot;

use std::fmt::{self, Write as _};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use cnnpart_core::comm::{inference_delay, latencies, transmission_time};
use cnnpart_core::dse::sweep_glb;
use cnnpart_core::energy::{cumulative_energy, layer_counts, network_energy};
use cnnpart_core::fixtures::INPUT_SPARSITY_QUARTILES;
use cnnpart_core::oracle::simulate_layer;
use cnnpart_core::partition::{
    candidate_energies, candidate_labels, candidate_payloads, cost_at, optimal_partition, scan_bitrate,
};
use cnnpart_core::schedule::schedule_layer;
use cnnpart_core::{CommEnvironment, DelayProfile};

use inputs::{CommArgs, ModelArgs};
use plot::{emit_plotdata, Series};

/// Validation failure; exits with status 2.
#[derive(Debug)]
pub struct Invalid(pub Vec<String>);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("\n"))
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Parser)]
#[command(name = "cnnpart", version, about)]
struct Cli {
    /// Write the primary CSV here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Scheduling parameters per layer
    Schedule {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Energy breakdown per layer (pJ per image)
    Energy {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Client cost of every partition candidate at one bit rate
    Partition {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        comm: CommArgs,
        /// Zero fraction of the input image
        #[arg(long, default_value_t = INPUT_SPARSITY_QUARTILES[1])]
        sparsity_in: f64,
        /// Override the bit rate (bits/s)
        #[arg(long)]
        bitrate: Option<f64>,
        /// Energy to prepare the input for upload (mJ)
        #[arg(long, default_value_t = 0.0)]
        input_energy_mj: f64,
    },
    /// Optimal candidate over a range of bit rates
    ScanBitrate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        comm: CommArgs,
        #[arg(long, default_value_t = INPUT_SPARSITY_QUARTILES[1])]
        sparsity_in: f64,
        /// Bit rates as min:max:step in bits/s (k, M, G suffixes allowed)
        #[arg(long)]
        bitrates: String,
        #[arg(long, default_value_t = 0.0)]
        input_energy_mj: f64,
        /// Also write cost-vs-bit-rate curves (Mbps, mJ), one per candidate
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// End-to-end inference delay of every partition candidate
    Delay {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        comm: CommArgs,
        #[arg(long, default_value_t = INPUT_SPARSITY_QUARTILES[1])]
        sparsity_in: f64,
        #[arg(long)]
        bitrate: Option<f64>,
        /// Client throughput (ops/s)
        #[arg(long, default_value_t = DelayProfile::default().client_throughput)]
        client_throughput: f64,
        /// Cloud throughput (ops/s)
        #[arg(long, default_value_t = DelayProfile::default().cloud_throughput)]
        cloud_throughput: f64,
    },
    /// Total network energy over GLB sizes
    SweepGlb {
        #[command(flatten)]
        model: ModelArgs,
        /// Sizes in bytes: a comma list or min:max:step (kB = 1024)
        #[arg(long, default_value = "8kB:512kB:8kB")]
        sizes: String,
        /// GLB access energy table, CSV size_bytes,e_access_pj [default: bundled]
        #[arg(long)]
        glb_curve: Option<PathBuf>,
        /// Word width the GLB table is given for
        #[arg(long, default_value_t = 16)]
        curve_bits: u32,
        /// Also write energy-vs-size data (kB, mJ)
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Closed-form counts next to the loop-nest simulation for one layer
    #[command(hide = true)]
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        /// Layer id
        #[arg(long)]
        layer: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Invalid>() || e.is::<cnnpart_core::Error>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("NEUPART_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Invalid(vec![format!("NEUPART_THREADS='{v}': expected a positive integer")]))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let csv = match cli.cmd {
        Cmd::Schedule { model } => schedule(&model)?,
        Cmd::Energy { model } => energy(&model)?,
        Cmd::Partition {
            model,
            comm,
            sparsity_in,
            bitrate,
            input_energy_mj,
        } => partition(&model, &comm, sparsity_in, bitrate, input_energy_mj)?,
        Cmd::ScanBitrate {
            model,
            comm,
            sparsity_in,
            bitrates,
            input_energy_mj,
            plot,
        } => scan(&model, &comm, sparsity_in, &bitrates, input_energy_mj, plot)?,
        Cmd::Delay {
            model,
            comm,
            sparsity_in,
            bitrate,
            client_throughput,
            cloud_throughput,
        } => delay(
            &model,
            &comm,
            sparsity_in,
            bitrate,
            DelayProfile {
                client_throughput,
                cloud_throughput,
            },
        )?,
        Cmd::SweepGlb {
            model,
            sizes,
            glb_curve,
            curve_bits,
            plot,
        } => sweep(&model, &sizes, &glb_curve, curve_bits, plot)?,
        Cmd::Oracle { model, layer } => oracle(&model, &layer)?,
    };
    match cli.output {
        Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn check_fraction(name: &str, v: f64) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Invalid(vec![format!("{name} {v}: must be in [0, 1]")]).into());
    }
    Ok(())
}

fn schedule(model: &ModelArgs) -> anyhow::Result<String> {
    let m = model.load()?;
    let mut out = String::from("layer_id,f_i,z_i,y_i,y_o,X_i,X_o,Y_i,Y_o,N,exception\n");
    for l in &m.net.layers {
        let s = schedule_layer(l, &m.acc).with_context(|| format!("layer {}", l.id))?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            l.id,
            s.filters,
            s.channels,
            s.in_rows,
            s.out_rows,
            s.in_width,
            s.out_width,
            s.block_in_rows,
            s.block_out_rows,
            s.batch,
            s.exception
        )?;
    }
    Ok(out)
}

fn energy(model: &ModelArgs) -> anyhow::Result<String> {
    let m = model.load()?;
    let reports = network_energy(&m.net, &m.acc, &m.tech, m.opts)?;
    let mut out = String::from(
        "layer_id,e_comp_pj,e_cntrl_pj,e_dram_pj,e_glb_pj,e_rf_pj,e_ipe_pj,e_layer_pj,latency_cycles,cumulative_pj\n",
    );
    let mut total = 0.0;
    for r in &reports {
        let e = &r.energy;
        total += e.e_layer;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.id, e.e_comp, e.e_cntrl, e.e_dram, e.e_glb, e.e_rf, e.e_ipe, e.e_layer, e.latency_cycles, total
        )?;
    }
    Ok(out)
}

/// Client energies (J), payloads (bits) and labels of every candidate.
fn candidates(m: &inputs::Model, sparsity_in: f64, input_energy_mj: f64) -> anyhow::Result<(Vec<f64>, Vec<u64>, Vec<String>)> {
    check_fraction("--sparsity-in", sparsity_in)?;
    let cum = cumulative_energy(&m.net, &m.acc, &m.tech, m.opts)?;
    Ok((
        candidate_energies(&cum, input_energy_mj * 1e-3),
        candidate_payloads(&m.net, sparsity_in)?,
        candidate_labels(&m.net),
    ))
}

fn partition(
    model: &ModelArgs,
    comm: &CommArgs,
    sparsity_in: f64,
    bitrate: Option<f64>,
    input_energy_mj: f64,
) -> anyhow::Result<String> {
    let m = model.load()?;
    let mut env = comm.load()?;
    if let Some(b) = bitrate {
        env.bitrate_bps = b;
    }
    let (e, d, labels) = candidates(&m, sparsity_in, input_energy_mj)?;
    let r = optimal_partition(&e, &d, &env)?;
    let mut out = String::from("candidate,layer_id,E_L_mJ,E_Trans_mJ,E_Cost_mJ\n");
    for i in 0..e.len() {
        writeln!(
            out,
            "{i},{},{},{},{}",
            labels[i],
            r.e_client[i] * 1e3,
            r.e_trans[i] * 1e3,
            r.e_cost[i] * 1e3
        )?;
    }
    eprintln!(
        "L_opt = {} ({}): {:.2}% saved vs FCC, {:.2}% saved vs FISC",
        r.l_opt, labels[r.l_opt], r.savings_vs_fcc, r.savings_vs_fisc
    );
    Ok(out)
}

fn scan(
    model: &ModelArgs,
    comm: &CommArgs,
    sparsity_in: f64,
    bitrates: &str,
    input_energy_mj: f64,
    plot_path: Option<PathBuf>,
) -> anyhow::Result<String> {
    let m = model.load()?;
    let env = comm.load()?;
    let rates = inputs::parse_range(bitrates, "--bitrates")?;
    if rates[0] <= 0.0 {
        return Err(Invalid(vec![format!("--bitrates '{bitrates}': bit rates must be > 0")]).into());
    }
    let (e, d, labels) = candidates(&m, sparsity_in, input_energy_mj)?;
    let s = scan_bitrate(&e, &d, env.tx_power_w, env.ecc_overhead_pct, &rates)?;

    let mut out = String::from("candidate,layer_id,from_bps,to_bps\n");
    for iv in &s.intervals {
        writeln!(out, "{},{},{},{}", iv.candidate, labels[iv.candidate], iv.from_bps, iv.to_bps)?;
    }
    for c in &s.crossovers {
        eprintln!(
            "crossover at {} bps: {} -> {}",
            c.bitrate_bps, labels[c.below], labels[c.above]
        );
    }
    if let Some(p) = plot_path {
        let series: Vec<Series> = (0..e.len())
            .map(|i| Series {
                name: labels[i].clone(),
                points: rates
                    .iter()
                    .map(|&b| (b / 1e6, 1e3 * cost_at(&e, &d, i, env.tx_power_w, env.ecc_overhead_pct, b)))
                    .collect(),
            })
            .collect();
        emit_plotdata(&series, &p)?;
    }
    Ok(out)
}

fn delay(
    model: &ModelArgs,
    comm: &CommArgs,
    sparsity_in: f64,
    bitrate: Option<f64>,
    profile: DelayProfile,
) -> anyhow::Result<String> {
    if !(profile.client_throughput > 0.0 && profile.cloud_throughput > 0.0) {
        return Err(Invalid(vec!["throughputs must be > 0".into()]).into());
    }
    let m = model.load()?;
    let mut env: CommEnvironment = comm.load()?;
    if let Some(b) = bitrate {
        env.bitrate_bps = b;
        env.validate()?;
    }
    check_fraction("--sparsity-in", sparsity_in)?;
    let d = candidate_payloads(&m.net, sparsity_in)?;
    let labels = candidate_labels(&m.net);
    let macs: Vec<u64> = m.net.layers.iter().map(|l| l.macs()).collect();
    let client = latencies(&macs, profile.client_throughput);
    let cloud = latencies(&macs, profile.cloud_throughput);
    let mut out = String::from("candidate,layer_id,t_client_s,t_trans_s,t_cloud_s,t_delay_s\n");
    for cut in 0..labels.len() {
        let t_trans = if cut == macs.len() { 0.0 } else { transmission_time(&env, d[cut]) };
        let total = inference_delay(cut, &client, &cloud, t_trans)?;
        let t_client = client[..cut].iter().fold(0.0, |a, b| a + b);
        let t_cloud = cloud[cut..].iter().fold(0.0, |a, b| a + b);
        writeln!(out, "{cut},{},{t_client},{t_trans},{t_cloud},{total}", labels[cut])?;
    }
    Ok(out)
}

fn sweep(
    model: &ModelArgs,
    sizes: &str,
    curve_path: &Option<PathBuf>,
    curve_bits: u32,
    plot_path: Option<PathBuf>,
) -> anyhow::Result<String> {
    let m = model.load()?;
    let sizes = inputs::parse_sizes(sizes)?;
    if curve_bits == 0 {
        return Err(Invalid(vec!["--curve-bits must be > 0".into()]).into());
    }
    let curve = inputs::glb_curve(curve_path)?.scaled(f64::from(m.net.bit_width) / f64::from(curve_bits))?;
    let r = sweep_glb(&m.net, &m.acc, &m.tech, &curve, &sizes, m.opts)?;
    let mut out = String::from("size_bytes,total_energy_mj,feasible\n");
    for p in &r.points {
        match p.total_pj {
            Some(e) => writeln!(out, "{},{},true", p.glb_bytes, e * 1e-9)?,
            None => writeln!(out, "{},,false", p.glb_bytes)?,
        }
    }
    if let Some(b) = r.best {
        eprintln!("best GLB size: {} bytes", r.points[b].glb_bytes);
    }
    if let Some(p) = plot_path {
        let points: Vec<(f64, f64)> = r
            .points
            .iter()
            .filter_map(|p| p.total_pj.map(|e| (p.glb_bytes as f64 / 1024.0, e * 1e-9)))
            .collect();
        emit_plotdata(
            &[Series {
                name: m.net.name.clone(),
                points,
            }],
            &p,
        )?;
    }
    Ok(out)
}

fn oracle(model: &ModelArgs, id: &str) -> anyhow::Result<String> {
    let m = model.load()?;
    let i = m
        .net
        .layer_index(id)
        .ok_or_else(|| Invalid(vec![format!("--layer {id}: no such layer in {}", m.net.name)]))?;
    let layer = &m.net.layers[i];
    let s = schedule_layer(layer, &m.acc)?;
    let sparsity = m.net.sparsity_in(i);
    let closed = layer_counts(layer, &s, sparsity);
    let sim = simulate_layer(layer, &s, sparsity)?;
    let rows = [
        ("dram_ifmap", closed.dram_ifmap, sim.dram_ifmap),
        ("dram_filter", closed.dram_filter, sim.dram_filter),
        ("dram_ofmap", closed.dram_ofmap, sim.dram_ofmap),
        ("glb_ifmap", closed.glb_ifmap, sim.glb_ifmap),
        ("glb_psum", closed.glb_psum, sim.glb_psum),
        ("rf_accesses", closed.rf_accesses, sim.rf_accesses),
        ("ipe_transfers", closed.ipe_transfers, sim.ipe_transfers),
        ("macs", closed.macs, sim.macs),
        ("passes", closed.passes, sim.passes),
        ("writebacks", closed.writebacks, sim.writebacks),
    ];
    let mut out = String::from("count,closed_form,simulated,match\n");
    for (name, a, b) in rows {
        writeln!(out, "{name},{a},{b},{}", a == b)?;
    }
    Ok(out)
}
