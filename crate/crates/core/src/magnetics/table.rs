use rayon::prelude::*;

use super::{conway_integral, mutual_exact, CoilPose};
use crate::coil::CoilSpec;
use crate::error::{ensure_positive, Error, Result};
use crate::MU_0;

/// Exact transmitter–receiver mutual inductance tabulated on a uniform grid
/// of lateral distances, read back by 4-point Lagrange interpolation.
///
/// `h(d)` is even in `d`, so stencils reaching below zero are mirrored.
/// Distances past the table fall back to direct evaluation.
#[derive(Debug, Clone)]
pub struct MutualTable {
    tx: CoilSpec,
    rx: CoilSpec,
    gap: f64,
    step: f64,
    values: Vec<f64>,
}

impl MutualTable {
    /// Node spacing (m). Cubic interpolation error scales as `(step / gap)^4`.
    pub const DEFAULT_STEP: f64 = 1.0e-3;

    pub fn build(tx: CoilSpec, rx: CoilSpec, gap: f64, max_distance: f64, step: f64) -> Result<Self> {
        tx.validate()?;
        rx.validate()?;
        ensure_positive("receiver_height", gap)?;
        ensure_positive("step", step)?;
        if !(max_distance >= 0.0 && max_distance.is_finite()) {
            return Err(Error::invalid("max_distance", format!("{max_distance}")));
        }
        let nodes = (max_distance / step).ceil() as usize + 3;
        let scale = MU_0
            * std::f64::consts::PI
            * f64::from(tx.turns)
            * f64::from(rx.turns)
            * tx.coil_radius
            * rx.coil_radius;
        let values = (0..nodes)
            .into_par_iter()
            .map(|i| conway_integral(i as f64 * step, tx.coil_radius, rx.coil_radius, gap).map(|v| v * scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(MutualTable {
            tx,
            rx,
            gap,
            step,
            values,
        })
    }

    pub fn max_distance(&self) -> f64 {
        (self.values.len() - 3) as f64 * self.step
    }

    pub fn mutual(&self, d: f64) -> f64 {
        let d = d.abs();
        let pos = d / self.step;
        let i = pos.floor() as usize;
        if i + 2 >= self.values.len() {
            return mutual_exact(
                &self.tx,
                &CoilPose::default(),
                &self.rx,
                &CoilPose::new(d, 0.0, self.gap),
            )
            .expect("table geometry validated at build time");
        }
        let t = pos - i as f64;
        let at = |k: isize| self.values[k.unsigned_abs()];
        let k = i as isize;
        let wm1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        wm1 * at(k - 1) + w0 * at(k) + w1 * at(k + 1) + w2 * at(k + 2)
    }
}
