//! Choosing where to cut a network between client and cloud.
//!
//! Candidate `0` sends the compressed input (fully cloud), candidate `i`
//! runs layers `1..=i` on the client and sends layer `i`'s output, and the
//! last candidate runs everything locally.
//!
//! For a fixed transmit power, each candidate's cost is affine in
//! `x = 1 / B_e`, so the optimum over bit rates is the lower envelope of a
//! set of lines and can be traced exactly.

use rayon::prelude::*;

use crate::comm::{effective_bitrate, rlc_bits, rlc_overhead, transmission_energy, CommEnvironment};
use crate::error::{Error, Result};
use crate::model::NetworkTopology;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    /// Client energy up to each candidate (J).
    pub e_client: Vec<f64>,
    /// Transmission energy of each candidate (J).
    pub e_trans: Vec<f64>,
    /// Total client cost of each candidate (J).
    pub e_cost: Vec<f64>,
    pub l_opt: usize,
    pub savings_vs_fcc: f64,
    pub savings_vs_fisc: f64,
    /// Number of candidate costs evaluated.
    pub cost_evaluations: usize,
}

/// Payload of each candidate in bits: the compressed input, each layer's
/// compressed output, and nothing for the last layer.
pub fn candidate_payloads(net: &NetworkTopology, input_sparsity: f64) -> Result<Vec<u64>> {
    let delta = rlc_overhead(net.bit_width)?;
    let n = net.layers.len();
    let mut d = Vec::with_capacity(n + 1);
    d.push(rlc_bits(net.input_bits_uncompressed, input_sparsity, delta));
    for i in 0..n.saturating_sub(1) {
        d.push(rlc_bits(net.raw_output_bits[i], net.sparsity_out[i], delta));
    }
    d.push(0);
    Ok(d)
}

/// Client energy of each candidate in joules from per-image cumulative
/// layer energies in picojoules. `input_energy_j` is the cost of
/// preparing the input for upload.
pub fn candidate_energies(cumulative_pj: &[f64], input_energy_j: f64) -> Vec<f64> {
    std::iter::once(input_energy_j)
        .chain(cumulative_pj.iter().map(|e| e * 1e-12))
        .collect()
}

/// Candidate labels: `In` followed by layer ids.
pub fn candidate_labels(net: &NetworkTopology) -> Vec<String> {
    std::iter::once("In".to_string())
        .chain(net.layers.iter().map(|l| l.id.clone()))
        .collect()
}

/// Percent saved by `l_opt` relative to the first and last candidates.
pub fn savings(e_cost: &[f64], l_opt: usize) -> (f64, f64) {
    let pct = |base: f64| {
        if base > 0.0 {
            100.0 * (base - e_cost[l_opt]) / base
        } else {
            0.0
        }
    };
    (pct(e_cost[0]), pct(e_cost[e_cost.len() - 1]))
}

/// Smallest index of the minimum.
pub fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = i;
        }
    }
    best
}

pub fn optimal_partition(energy_j: &[f64], payload_bits: &[u64], env: &CommEnvironment) -> Result<PartitionResult> {
    if energy_j.len() != payload_bits.len() {
        return Err(Error::Input(format!(
            "{} candidate energies but {} payloads",
            energy_j.len(),
            payload_bits.len()
        )));
    }
    if energy_j.is_empty() {
        return Err(Error::Input("no partition candidates".into()));
    }
    env.validate()?;
    let e_trans: Vec<f64> = payload_bits.iter().map(|&d| transmission_energy(env, d)).collect();
    let e_cost: Vec<f64> = energy_j.iter().zip(&e_trans).map(|(e, t)| e + t).collect();
    let l_opt = argmin(&e_cost);
    let (savings_vs_fcc, savings_vs_fisc) = savings(&e_cost, l_opt);
    Ok(PartitionResult {
        e_client: energy_j.to_vec(),
        cost_evaluations: e_cost.len(),
        e_trans,
        e_cost,
        l_opt,
        savings_vs_fcc,
        savings_vs_fisc,
    })
}

/// A bit rate at which the optimal candidate changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    pub bitrate_bps: f64,
    /// Optimal just below the crossover.
    pub below: usize,
    /// Optimal just above the crossover.
    pub above: usize,
}

/// A bit-rate range over which one candidate stays optimal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalInterval {
    pub candidate: usize,
    pub from_bps: f64,
    pub to_bps: f64,
}

/// Exact optimum over all bit rates `B > 0`, as crossovers in ascending
/// bit rate.
///
/// At a crossover both candidates cost the same, and the smaller index
/// wins the tie.
pub fn envelope(energy_j: &[f64], payload_bits: &[u64], tx_power_w: f64, ecc_overhead_pct: f64) -> Vec<Crossover> {
    let n = energy_j.len();
    if n == 0 {
        return Vec::new();
    }
    let slope = |i: usize| tx_power_w * payload_bits[i] as f64;
    // As B -> 0 the smallest slope wins; ties go to lower energy, then index.
    let mut cur = (0..n)
        .min_by(|&a, &b| {
            slope(a)
                .total_cmp(&slope(b))
                .then(energy_j[a].total_cmp(&energy_j[b]))
                .then(a.cmp(&b))
        })
        .unwrap();
    let mut out = Vec::new();
    // x = 1/B_e walks down from +inf.
    let mut x_prev = f64::INFINITY;
    loop {
        let mut next: Option<(usize, f64)> = None;
        for j in 0..n {
            if slope(j) <= slope(cur) || energy_j[j] >= energy_j[cur] {
                continue;
            }
            let x = (energy_j[cur] - energy_j[j]) / (slope(j) - slope(cur));
            if x > x_prev {
                continue;
            }
            next = match next {
                None => Some((j, x)),
                Some((k, xk)) if x > xk || (x == xk && slope(j) > slope(k)) => Some((j, x)),
                keep => keep,
            };
        }
        let Some((j, x)) = next else { break };
        out.push(Crossover {
            bitrate_bps: (1.0 + ecc_overhead_pct / 100.0) / x,
            below: cur,
            above: j,
        });
        cur = j;
        x_prev = x;
    }
    out
}

/// Optimal candidates and crossovers over a set of bit rates.
#[derive(Debug, Clone, PartialEq)]
pub struct BitrateScan {
    pub bitrates: Vec<f64>,
    pub results: Vec<PartitionResult>,
    /// Exact crossovers inside the scanned range.
    pub crossovers: Vec<Crossover>,
    /// Maximal runs of a constant optimum over the scanned range.
    pub intervals: Vec<OptimalInterval>,
}

pub fn scan_bitrate(
    energy_j: &[f64],
    payload_bits: &[u64],
    tx_power_w: f64,
    ecc_overhead_pct: f64,
    bitrates: &[f64],
) -> Result<BitrateScan> {
    if bitrates.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Input("bit rates must be sorted ascending".into()));
    }
    let results = bitrates
        .par_iter()
        .map(|&b| {
            let env = CommEnvironment {
                bitrate_bps: b,
                ecc_overhead_pct,
                tx_power_w,
            };
            optimal_partition(energy_j, payload_bits, &env)
        })
        .collect::<Result<Vec<_>>>()?;

    let (lo, hi) = match (bitrates.first(), bitrates.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    };
    let crossovers: Vec<Crossover> = envelope(energy_j, payload_bits, tx_power_w, ecc_overhead_pct)
        .into_iter()
        .filter(|c| c.bitrate_bps > lo && c.bitrate_bps <= hi)
        .collect();

    let mut intervals: Vec<OptimalInterval> = Vec::new();
    for (&b, r) in bitrates.iter().zip(&results) {
        match intervals.last_mut() {
            Some(iv) if iv.candidate == r.l_opt => iv.to_bps = b,
            _ => intervals.push(OptimalInterval {
                candidate: r.l_opt,
                from_bps: b,
                to_bps: b,
            }),
        }
    }
    Ok(BitrateScan {
        bitrates: bitrates.to_vec(),
        results,
        crossovers,
        intervals,
    })
}

/// `count` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..count)
            .map(|i| from + (to - from) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Cost of candidate `i` at bit rate `b`.
pub fn cost_at(energy_j: &[f64], payload_bits: &[u64], i: usize, tx_power_w: f64, ecc_overhead_pct: f64, b: f64) -> f64 {
    let env = CommEnvironment {
        bitrate_bps: b,
        ecc_overhead_pct,
        tx_power_w,
    };
    energy_j[i] + tx_power_w * payload_bits[i] as f64 / effective_bitrate(&env)
}
