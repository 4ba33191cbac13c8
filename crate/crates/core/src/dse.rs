//! GLB size sweeps.

use rayon::prelude::*;

use crate::energy::{network_energy, EnergyOptions};
use crate::error::{Error, Result};
use crate::model::{AcceleratorConfig, NetworkTopology, TechnologyParams};

/// Tabulated GLB access energy against capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct GlbEnergyCurve {
    /// `(size_bytes, pJ per access)`, sizes strictly increasing.
    points: Vec<(f64, f64)>,
}

impl GlbEnergyCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Input("GLB curve needs at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Input("GLB curve sizes must be strictly increasing".into()));
        }
        if points.iter().any(|&(s, e)| !(s > 0.0 && e > 0.0)) {
            return Err(Error::Input("GLB curve sizes and energies must be > 0".into()));
        }
        Ok(GlbEnergyCurve { points })
    }

    /// Same sizes with every energy multiplied by `factor`, e.g. to move a
    /// per-word table to another word width.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        GlbEnergyCurve::new(self.points.iter().map(|&(s, e)| (s, e * factor)).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_size(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_size(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }
}

/// Log-log interpolation; exact at the knots.
pub fn glb_energy_at(curve: &GlbEnergyCurve, size_bytes: f64) -> Result<f64> {
    let (lo, hi) = (curve.min_size(), curve.max_size());
    if !(size_bytes >= lo && size_bytes <= hi) {
        return Err(Error::Range {
            value: size_bytes,
            min: lo,
            max: hi,
        });
    }
    let p = curve.points();
    let i = p.partition_point(|&(s, _)| s < size_bytes);
    if p[i].0 == size_bytes {
        return Ok(p[i].1);
    }
    let ((s0, e0), (s1, e1)) = (p[i - 1], p[i]);
    let t = (size_bytes.ln() - s0.ln()) / (s1.ln() - s0.ln());
    Ok((e0.ln() + t * (e1.ln() - e0.ln())).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub glb_bytes: u64,
    /// Per-image network energy (pJ), or `None` if no schedule fits.
    pub total_pj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlbSweep {
    pub points: Vec<SweepPoint>,
    /// Feasible size with the least energy; ties go to the smaller size.
    pub best: Option<usize>,
}

/// Re-schedules and re-evaluates the whole network at each GLB size.
pub fn sweep_glb(
    net: &NetworkTopology,
    acc: &AcceleratorConfig,
    tech: &TechnologyParams,
    curve: &GlbEnergyCurve,
    sizes: &[u64],
    opts: EnergyOptions,
) -> Result<GlbSweep> {
    let points = sizes
        .par_iter()
        .map(|&size| {
            let e_glb = glb_energy_at(curve, size as f64)?;
            let a = AcceleratorConfig {
                glb_bytes: size,
                ..acc.clone()
            };
            let t = TechnologyParams { e_glb, ..tech.clone() };
            let total_pj = match network_energy(net, &a, &t, opts) {
                Ok(reports) => Some(reports.iter().map(|r| r.energy.e_layer).sum()),
                Err(Error::GlbTooSmall { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepPoint {
                glb_bytes: size,
                total_pj,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(e) = p.total_pj {
            if best.map_or(true, |b| e < points[b].total_pj.unwrap()) {
                best = Some(i);
            }
        }
    }
    Ok(GlbSweep { points, best })
}
