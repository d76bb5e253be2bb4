//! Delivered-power profiles over a target line or disk and their summary
//! metrics (average, minimum, maximum and min/max ratio).
//!
//! Sample powers are rounded to the 9 significant digits written to CSV, so a
//! profile read back from disk summarizes to exactly the same metrics.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{self, Strategy};
use crate::coil::WptSystem;
use crate::error::{ensure_positive, Error, Result};
use crate::magnetics::{CouplingModel, MutualMode};
use crate::search::golden_min;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegionKind {
    /// Segment `[-half_length, half_length]` on the x axis.
    Line { half_length: f64 },
    /// Disk of `radius` centred on the origin.
    Disk { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampling {
    /// Uniform points across a line, endpoints included.
    pub line_points: usize,
    /// Radii across a disk, the centre counted as one of them.
    pub radial_points: usize,
    pub angular_points: usize,
    /// Golden-section polish of the disk minimum, appended as an extra sample.
    pub refine_disk_minimum: bool,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            line_points: 2001,
            radial_points: 101,
            angular_points: 360,
            refine_disk_minimum: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(flatten)]
    pub kind: RegionKind,
    #[serde(default)]
    pub sampling: Sampling,
}

impl Region {
    pub fn line(half_length: f64) -> Self {
        Region {
            kind: RegionKind::Line { half_length },
            sampling: Sampling::default(),
        }
    }

    pub fn disk(radius: f64) -> Self {
        Region {
            kind: RegionKind::Disk { radius },
            sampling: Sampling::default(),
        }
    }

    pub fn with_sampling(self, sampling: Sampling) -> Self {
        Region { sampling, ..self }
    }

    /// Distance from the origin to the farthest point of the region.
    pub fn extent(&self) -> f64 {
        match self.kind {
            RegionKind::Line { half_length } => half_length,
            RegionKind::Disk { radius } => radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            RegionKind::Line { half_length } => {
                ensure_positive("half_length", half_length)?;
                if self.sampling.line_points < 2 {
                    return Err(Error::invalid("line_points", "need at least 2"));
                }
            }
            RegionKind::Disk { radius } => {
                ensure_positive("radius", radius)?;
                if self.sampling.radial_points < 2 || self.sampling.angular_points < 1 {
                    return Err(Error::invalid("radial_points", "need at least 2 radii and 1 angle"));
                }
            }
        }
        Ok(())
    }

    /// Grid sample positions.
    pub fn positions(&self) -> Vec<[f64; 2]> {
        let s = &self.sampling;
        match self.kind {
            RegionKind::Line { half_length: d } => {
                let n = s.line_points;
                (0..n)
                    .map(|i| [-d + 2.0 * d * (i as f64 / (n - 1) as f64), 0.0])
                    .collect()
            }
            RegionKind::Disk { radius } => {
                let rings = s.radial_points - 1;
                let mut out = Vec::with_capacity(1 + rings * s.angular_points);
                out.push([0.0, 0.0]);
                for j in 0..s.angular_points {
                    let (sin, cos) = (2.0 * PI * j as f64 / s.angular_points as f64).sin_cos();
                    for i in 1..=rings {
                        let r = radius * i as f64 / rings as f64;
                        out.push([r * cos, r * sin]);
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "p0_watts")]
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerProfile {
    pub samples: Vec<Sample>,
    pub strategy: Strategy,
    pub mode: MutualMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub p_avg: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// `p_min / p_max`, zero when `p_max` is zero.
    pub xi: f64,
}

/// Rounds to the 9 significant digits used in CSV output.
pub fn quantize(v: f64) -> f64 {
    format!("{v:.8e}").parse().expect("formatted float parses")
}

fn power_at(txs: &[[f64; 2]], x: f64, y: f64, system: &WptSystem, strategy: Strategy, model: &CouplingModel) -> f64 {
    beamforming::load_power(strategy, &model.mutuals(txs, x, y), system)
}

/// Samples the load power of `strategy` over `region` for transmitters at
/// planar positions `txs`, recomputing the allocation at every receiver
/// position.
pub fn profile(
    txs: &[[f64; 2]],
    region: &Region,
    system: &WptSystem,
    strategy: Strategy,
    model: &CouplingModel,
) -> Result<PowerProfile> {
    region.validate()?;
    if txs.is_empty() {
        return Err(Error::invalid("placement", "need at least one transmitter"));
    }
    if txs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("placement", "positions must be finite"));
    }
    let eval = |x: f64, y: f64| power_at(txs, x, y, system, strategy, model);
    let mut samples: Vec<Sample> = region
        .positions()
        .into_par_iter()
        .map(|[x, y]| Sample {
            x,
            y,
            p0: quantize(eval(x, y)),
        })
        .collect();
    if let RegionKind::Disk { radius } = region.kind {
        if region.sampling.refine_disk_minimum {
            if let Some(extra) = refine_disk_minimum(&samples, radius, &region.sampling, &eval) {
                samples.push(extra);
            }
        }
    }
    Ok(PowerProfile {
        samples,
        strategy,
        mode: model.mode(),
    })
}

/// [`profile`] with a coupling model built for `mode`.
pub fn profile_with_mode(
    txs: &[[f64; 2]],
    region: &Region,
    system: &WptSystem,
    strategy: Strategy,
    mode: MutualMode,
) -> Result<PowerProfile> {
    let reach = txs.iter().map(|t| t[0].hypot(t[1])).fold(0.0, f64::max) + region.extent();
    let model = CouplingModel::for_mode(system, mode, reach + 0.01)?;
    profile(txs, region, system, strategy, &model)
}

/// Alternating golden searches in radius and angle around the grid minimum.
fn refine_disk_minimum<F: Fn(f64, f64) -> f64>(
    samples: &[Sample],
    radius: f64,
    sampling: &Sampling,
    eval: &F,
) -> Option<Sample> {
    let best = samples.iter().min_by(|a, b| a.p0.total_cmp(&b.p0))?;
    let dr = radius / (sampling.radial_points - 1) as f64;
    let da = 2.0 * PI / sampling.angular_points as f64;
    let mut r = best.x.hypot(best.y);
    let mut a = best.y.atan2(best.x);
    let mut value = eval(best.x, best.y);
    for _ in 0..3 {
        let (rn, vn) = golden_min(
            |r| eval(r * a.cos(), r * a.sin()),
            (r - dr).max(0.0),
            (r + dr).min(radius),
            1e-9,
        );
        if vn < value {
            r = rn;
            value = vn;
        }
        if r > 0.0 {
            let (an, vn) = golden_min(|t| eval(r * t.cos(), r * t.sin()), a - da, a + da, 1e-9);
            if vn < value {
                a = an;
                value = vn;
            }
        }
    }
    let p0 = quantize(value);
    (p0 < best.p0).then(|| Sample {
        x: r * a.cos(),
        y: r * a.sin(),
        p0,
    })
}

/// Sample mean, minimum, maximum and min/max ratio of the profile's powers.
pub fn summarize(samples: &[Sample]) -> Result<RegionMetrics> {
    if samples.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for s in samples {
        lo = lo.min(s.p0);
        hi = hi.max(s.p0);
        sum += s.p0;
    }
    let p_avg = (sum / samples.len() as f64).clamp(lo, hi);
    Ok(RegionMetrics {
        p_avg,
        p_min: lo,
        p_max: hi,
        xi: if hi > 0.0 { lo / hi } else { 0.0 },
    })
}

impl PowerProfile {
    pub fn metrics(&self) -> Result<RegionMetrics> {
        summarize(&self.samples)
    }
}

/// Writes `x,y,p0_watts` rows with 9 significant digits.
pub fn write_csv<W: Write>(samples: &[Sample], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "p0_watts"]).map_err(io)?;
    for s in samples {
        w.write_record([format!("{:.8e}", s.x), format!("{:.8e}", s.y), format!("{:.8e}", s.p0)])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Sample>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| Error::Io(e.to_string())))
        .collect()
}
