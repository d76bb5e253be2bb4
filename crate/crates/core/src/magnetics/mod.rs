//! Mutual inductance between parallel circular coils.
//!
//! The exact coupling uses Conway's Bessel-integral form
//!
//! ```text
//! M = mu pi b_a b_b r_a r_b  int_0^inf J0(d u) J1(r_a u) J1(r_b u) exp(-dz u) du
//! ```
//!
//! with `d` the lateral distance between coil centres and `dz` the vertical
//! gap. For small coils far apart relative to their radii the integral
//! collapses to the dipole form `beta (2 z^2 - d^2) / (z^2 + d^2)^(5/2)`.

pub mod bessel;
pub mod quadrature;
mod table;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coil::{CoilSpec, SystemConfig, WptSystem};
use crate::error::{Error, Result};
use crate::MU_0;

pub use bessel::{bessel_j, j0, j1};
pub use table::MutualTable;

/// `exp(-37) < 1e-16`: the damped integrand is negligible past `37 / dz`.
const DAMPING_CUTOFF: f64 = 37.0;
/// A panel contributing less than this fraction of the accumulated
/// |integrand| mass ends the damped integration.
const PANEL_STOP: f64 = 1e-12;
const PANEL_REL_TOL: f64 = 1e-11;
const MAX_UNDAMPED_PANELS: usize = 4000;

/// Centre of a coil lying parallel to the (x, y) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CoilPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CoilPose {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        CoilPose { x, y, z }
    }

    pub fn lateral_distance(&self, other: &CoilPose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn validate(&self) -> Result<()> {
        if self.x.is_finite() && self.y.is_finite() && self.z.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("pose", format!("non-finite coordinates {self:?}")))
        }
    }
}

/// Transmitter-to-receiver mutual inductances `h_n0` (H), one per transmitter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MutualVector(Vec<f64>);

impl MutualVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("mutual_vector", "needs at least one transmitter"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("mutual_vector", format!("non-finite entry {v}")));
        }
        Ok(MutualVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum_squares(&self) -> f64 {
        self.0.iter().map(|h| h * h).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for MutualVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Which mutual inductance model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MutualMode {
    #[default]
    Exact,
    Approx,
}

impl fmt::Display for MutualMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutualMode::Exact => "exact",
            MutualMode::Approx => "approx",
        })
    }
}

impl FromStr for MutualMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MutualMode::Exact),
            "approx" => Ok(MutualMode::Approx),
            other => Err(Error::invalid("mode", format!("expected exact|approx, got {other:?}"))),
        }
    }
}

/// `mu pi b_tx b_rx r_tx^2 r_rx^2 / 4`.
pub fn coupling_constant(tx: &CoilSpec, rx: &CoilSpec) -> f64 {
    MU_0 * PI * f64::from(tx.turns) * f64::from(rx.turns) * tx.coil_radius.powi(2) * rx.coil_radius.powi(2)
        / 4.0
}

/// Dipole approximation of the transmitter–receiver mutual inductance at
/// lateral distance `d` and height `z0`.
pub fn mutual_approx(beta: f64, d: f64, z0: f64) -> f64 {
    let d2 = d * d;
    let z2 = z0 * z0;
    let r2 = z2 + d2;
    beta * (2.0 * z2 - d2) / (r2 * r2 * r2.sqrt())
}

/// Exact mutual inductance between two parallel coils.
///
/// Symmetric in its arguments. Coplanar coils sharing a centre are rejected:
/// that integral is a self-inductance.
pub fn mutual_exact(a: &CoilSpec, pose_a: &CoilPose, b: &CoilSpec, pose_b: &CoilPose) -> Result<f64> {
    pose_a.validate()?;
    pose_b.validate()?;
    let lateral = pose_a.lateral_distance(pose_b);
    let dz = (pose_b.z - pose_a.z).abs();
    let integral = conway_integral(lateral, a.coil_radius, b.coil_radius, dz)?;
    Ok(MU_0
        * PI
        * f64::from(a.turns)
        * f64::from(b.turns)
        * a.coil_radius
        * b.coil_radius
        * integral)
}

/// `int_0^inf J0(d u) J1(ra u) J1(rb u) exp(-dz u) du`
pub(crate) fn conway_integral(lateral: f64, ra: f64, rb: f64, dz: f64) -> Result<f64> {
    if !(lateral >= 0.0 && ra > 0.0 && rb > 0.0 && dz >= 0.0) || !dz.is_finite() {
        return Err(Error::invalid(
            "geometry",
            format!("lateral={lateral}, ra={ra}, rb={rb}, dz={dz}"),
        ));
    }
    if lateral == 0.0 && dz == 0.0 {
        return Err(Error::CoincidentCoils);
    }
    let integrand = |u: f64| j0(lateral * u) * j1(ra * u) * j1(rb * u) * (-dz * u).exp();
    // half period of the fastest combined oscillation
    let half_period = PI / (lateral + ra + rb);

    if dz > 0.0 {
        let end = DAMPING_CUTOFF / dz;
        let width = half_period.min(1.0 / dz);
        let mut acc = 0.0;
        let mut mass = 0.0;
        let mut lo = 0.0;
        let mut quiet = 0;
        while lo < end {
            let hi = (lo + width).min(end);
            let est = quadrature::integrate(integrand, lo, hi, 1e-3 * PANEL_STOP * mass, PANEL_REL_TOL, 64);
            acc += est.value;
            mass += est.magnitude;
            if est.magnitude < PANEL_STOP * mass {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
            lo = hi;
        }
        return Ok(acc);
    }

    // Undamped: the tail decays like u^{-3/2}, so panel partial sums are
    // accelerated with the epsilon algorithm.
    const WINDOW: usize = 24;
    let mut sums: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    let mut mass = 0.0;
    let mut last = f64::NAN;
    let mut stable = 0;
    for k in 0..MAX_UNDAMPED_PANELS {
        let lo = k as f64 * half_period;
        let est = quadrature::integrate(integrand, lo, lo + half_period, 1e-3 * PANEL_STOP * mass, PANEL_REL_TOL, 64);
        acc += est.value;
        mass += est.magnitude;
        sums.push(acc);
        if sums.len() < 12 {
            continue;
        }
        let window = &sums[sums.len().saturating_sub(WINDOW)..];
        let extrapolated = quadrature::wynn_epsilon(window);
        if (extrapolated - last).abs() <= 1e-11 * mass.max(extrapolated.abs()) {
            stable += 1;
            if stable >= 3 {
                return Ok(extrapolated);
            }
        } else {
            stable = 0;
        }
        last = extrapolated;
    }
    Err(Error::Numeric(format!(
        "undamped mutual-inductance integral did not converge (lateral={lateral})"
    )))
}

/// Mutual inductances between each transmitter pose and the receiver.
pub fn mutual_vector(
    placement: &[CoilPose],
    receiver: &CoilPose,
    config: &SystemConfig,
    mode: MutualMode,
) -> Result<MutualVector> {
    let values = match mode {
        MutualMode::Exact => placement
            .iter()
            .map(|p| mutual_exact(&config.tx_coil, p, &config.rx_coil, receiver))
            .collect::<Result<Vec<_>>>()?,
        MutualMode::Approx => {
            let beta = coupling_constant(&config.tx_coil, &config.rx_coil);
            receiver.validate()?;
            placement
                .iter()
                .map(|p| {
                    p.validate()?;
                    let gap = receiver.z - p.z;
                    if gap <= 0.0 {
                        return Err(Error::invalid("pose", "receiver must sit above the transmitters"));
                    }
                    Ok(mutual_approx(beta, p.lateral_distance(receiver), gap))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    MutualVector::new(values)
}

/// Transmitter-to-receiver coupling as a function of lateral distance only,
/// for receivers at the system height above coplanar transmitters.
#[derive(Debug, Clone)]
pub enum CouplingModel {
    Approx { beta: f64, z0: f64 },
    Exact(Arc<MutualTable>),
}

impl CouplingModel {
    pub fn approx(system: &WptSystem) -> Self {
        CouplingModel::Approx {
            beta: system.beta,
            z0: system.z0(),
        }
    }

    /// Tabulates the exact coupling for lateral distances up to `max_distance`.
    pub fn exact(system: &WptSystem, max_distance: f64) -> Result<Self> {
        let cfg = &system.config;
        let table = MutualTable::build(
            cfg.tx_coil,
            cfg.rx_coil,
            cfg.receiver_height,
            max_distance,
            MutualTable::DEFAULT_STEP,
        )?;
        Ok(CouplingModel::Exact(Arc::new(table)))
    }

    pub fn for_mode(system: &WptSystem, mode: MutualMode, max_distance: f64) -> Result<Self> {
        match mode {
            MutualMode::Exact => Self::exact(system, max_distance),
            MutualMode::Approx => Ok(Self::approx(system)),
        }
    }

    pub fn mode(&self) -> MutualMode {
        match self {
            CouplingModel::Approx { .. } => MutualMode::Approx,
            CouplingModel::Exact(_) => MutualMode::Exact,
        }
    }

    /// `h` at lateral distance `d` (m).
    pub fn mutual(&self, d: f64) -> f64 {
        match self {
            CouplingModel::Approx { beta, z0 } => mutual_approx(*beta, d, *z0),
            CouplingModel::Exact(table) => table.mutual(d),
        }
    }

    /// `h_n0` for every transmitter at planar positions `txs`, receiver at `(x, y)`.
    pub fn mutuals(&self, txs: &[[f64; 2]], x: f64, y: f64) -> Vec<f64> {
        txs.iter()
            .map(|t| self.mutual((t[0] - x).hypot(t[1] - y)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tx() -> CoilSpec {
        CoilSpec::reference_transmitter()
    }
    fn rx() -> CoilSpec {
        CoilSpec::reference_receiver()
    }
    fn beta() -> f64 {
        coupling_constant(&tx(), &rx())
    }

    /// Neumann double line integral `mu/(4 pi) b_a b_b r_a r_b
    /// int int cos(p - q) / R dp dq`, trapezoid in both angles.
    fn neumann(a: &CoilSpec, pa: &CoilPose, b: &CoilSpec, pb: &CoilPose, n: usize) -> f64 {
        let h = 2.0 * PI / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let p = i as f64 * h;
            let (xa, ya) = (pa.x + a.coil_radius * p.cos(), pa.y + a.coil_radius * p.sin());
            for j in 0..n {
                let q = j as f64 * h;
                let (xb, yb) = (pb.x + b.coil_radius * q.cos(), pb.y + b.coil_radius * q.sin());
                let r = ((xa - xb).powi(2) + (ya - yb).powi(2) + (pa.z - pb.z).powi(2)).sqrt();
                sum += (p - q).cos() / r;
            }
        }
        MU_0 / (4.0 * PI)
            * f64::from(a.turns)
            * f64::from(b.turns)
            * a.coil_radius
            * b.coil_radius
            * sum
            * h
            * h
    }

    #[test]
    fn approx_zero_at_sqrt2_height() {
        let z0 = 0.2;
        let peak = mutual_approx(beta(), 0.0, z0);
        assert!(mutual_approx(beta(), 2f64.sqrt() * z0, z0).abs() < 1e-15 * peak);
        for i in 0..200 {
            let d = i as f64 * 0.01;
            let h = mutual_approx(beta(), d, z0);
            assert_eq!(h > 0.0, d < 2f64.sqrt() * z0 - 1e-12, "d={d}");
        }
        let far = mutual_approx(beta(), 1.0e3, z0);
        assert!(far < 0.0 && far > -1e-15);
    }

    #[test]
    fn approx_peak_value() {
        let b = MU_0 * PI * 400.0 * 200.0 * 0.05f64.powi(2) * 0.025f64.powi(2) / 4.0;
        assert_relative_eq!(beta(), b, max_relative = 1e-14);
        assert_relative_eq!(mutual_approx(b, 0.0, 0.2), 2.0 * b / 0.2f64.powi(3), max_relative = 1e-14);
    }

    #[test]
    fn exact_matches_midpoint_oracle_on_axis() {
        // 10^6 midpoint nodes on the damped integrand truncated at u = 100
        let (ra, rb, dz) = (0.05, 0.025, 0.4);
        let n = 1_000_000;
        let upper = 100.0;
        let h = upper / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * h;
            sum += j1(ra * u) * j1(rb * u) * (-dz * u).exp();
        }
        let oracle = MU_0 * PI * 400.0 * 200.0 * ra * rb * sum * h;
        let got = mutual_exact(&tx(), &CoilPose::default(), &rx(), &CoilPose::new(0.0, 0.0, dz)).unwrap();
        assert_relative_eq!(got, oracle, max_relative = 1e-6);
    }

    #[test]
    fn exact_matches_neumann_line_integral() {
        for &(d, dz) in &[(0.0, 0.2), (0.3, 0.2), (0.2828, 0.2), (1.0, 0.2), (0.45, 0.4)] {
            let pa = CoilPose::default();
            let pb = CoilPose::new(d, 0.0, dz);
            let got = mutual_exact(&tx(), &pa, &rx(), &pb).unwrap();
            let want = neumann(&tx(), &pa, &rx(), &pb, 256);
            let scale = neumann(&tx(), &pa, &rx(), &CoilPose::new(0.0, 0.0, dz), 256);
            assert!(
                (got - want).abs() <= 1e-8 * scale.abs(),
                "d={d} dz={dz}: {got:e} vs {want:e}"
            );
        }
    }

    #[test]
    fn coplanar_transmitters_smoke() {
        let a = tx();
        for &d in &[0.15, 0.5, 1.0] {
            let pa = CoilPose::default();
            let pb = CoilPose::new(d, 0.0, 0.0);
            let got = mutual_exact(&a, &pa, &a, &pb).unwrap();
            let want = neumann(&a, &pa, &a, &pb, 512);
            assert!(got < 0.0, "coplanar separated coils couple negatively");
            assert!((got - want).abs() <= 1e-5 * want.abs(), "d={d}: {got:e} vs {want:e}");
        }
    }

    #[test]
    fn coincident_rejected() {
        let p = CoilPose::default();
        assert_eq!(mutual_exact(&tx(), &p, &tx(), &p), Err(Error::CoincidentCoils));
    }

    #[test]
    fn far_field_decays_as_dipole() {
        // on axis the coupling falls off as 2 beta / z^3, not exponentially
        let on_axis = |z: f64| mutual_exact(&tx(), &CoilPose::default(), &rx(), &CoilPose::new(0.0, 0.0, z)).unwrap();
        for &z in &[2.0, 10.0, 100.0] {
            assert_relative_eq!(on_axis(z), 2.0 * beta() / z.powi(3), max_relative = 5e-3);
        }
        assert!(on_axis(10.0) < 1e-3 * on_axis(0.2));
    }

    #[test]
    fn symmetric_and_translation_invariant() {
        let pa = CoilPose::new(0.1, -0.2, 0.0);
        let pb = CoilPose::new(0.4, 0.2, 0.2);
        let ab = mutual_exact(&tx(), &pa, &rx(), &pb).unwrap();
        let ba = mutual_exact(&rx(), &pb, &tx(), &pa).unwrap();
        assert_relative_eq!(ab, ba, max_relative = 1e-10);
        // same lateral distance (0.5) and gap, different poses
        let moved = mutual_exact(&tx(), &CoilPose::new(-1.0, 1.0, 0.3), &rx(), &CoilPose::new(-1.5, 1.0, 0.5)).unwrap();
        assert_relative_eq!(ab, moved, max_relative = 1e-10);
    }

    #[test]
    fn approximation_tight_away_from_peak() {
        let z0 = 0.2;
        let peak = mutual_exact(&tx(), &CoilPose::default(), &rx(), &CoilPose::new(0.0, 0.0, z0)).unwrap();
        for i in 0..=70 {
            let d = 0.3 + i as f64 * 0.01;
            let exact = mutual_exact(&tx(), &CoilPose::default(), &rx(), &CoilPose::new(d, 0.0, z0)).unwrap();
            let approx = mutual_approx(beta(), d, z0);
            assert!((exact - approx).abs() <= 0.15 * peak.abs(), "d={d}");
        }
    }

    #[test]
    fn approximation_improves_with_height() {
        let worst = |z0: f64| {
            let at0 = mutual_approx(beta(), 0.0, z0);
            (0..=100)
                .map(|i| {
                    let d = 5.0 * z0 * i as f64 / 100.0;
                    let e = mutual_exact(&tx(), &CoilPose::default(), &rx(), &CoilPose::new(d, 0.0, z0)).unwrap();
                    (e - mutual_approx(beta(), d, z0)).abs() / at0.abs()
                })
                .fold(0.0, f64::max)
        };
        let (w2, w4, w5) = (worst(0.2), worst(0.4), worst(0.5));
        assert!(w4 < w2 && w5 < w4, "{w2} {w4} {w5}");
        // coil radii at most a tenth of the height
        assert!(w5 <= 0.05, "{w5}");
    }

    #[test]
    fn vector_modes() {
        let cfg = SystemConfig::reference();
        let rx_pose = CoilPose::new(0.0, 0.0, cfg.receiver_height);
        let single = mutual_vector(&[CoilPose::default()], &rx_pose, &cfg, MutualMode::Approx).unwrap();
        assert_relative_eq!(single[0], 2.0 * beta() / 0.2f64.powi(3), max_relative = 1e-14);

        let pair = [CoilPose::new(0.3, 0.0, 0.0), CoilPose::new(-0.3, 0.0, 0.0)];
        for mode in [MutualMode::Approx, MutualMode::Exact] {
            let v = mutual_vector(&pair, &rx_pose, &cfg, mode).unwrap();
            assert_relative_eq!(v[0], v[1], max_relative = 1e-12);
        }
        assert!(mutual_vector(&[], &rx_pose, &cfg, MutualMode::Approx).is_err());
    }

    #[test]
    fn exact_sweep_peak_and_zero_crossings() {
        let cfg = SystemConfig::reference();
        let z0 = cfg.receiver_height;
        let uniform: Vec<CoilPose> = [0.5, 1.0, -0.5, -1.0, 0.0]
            .iter()
            .map(|&x| CoilPose::new(x, 0.0, 0.0))
            .collect();
        let h1 = |x0: f64| {
            mutual_vector(&uniform, &CoilPose::new(x0, 0.0, z0), &cfg, MutualMode::Exact).unwrap()[0]
        };
        let xs: Vec<f64> = (0..=200).map(|i| -1.0 + 0.01 * i as f64).collect();
        let argmax = xs
            .iter()
            .copied()
            .max_by(|a, b| h1(*a).total_cmp(&h1(*b)))
            .unwrap();
        assert!((argmax - 0.5).abs() < 1e-9);
        for side in [-1.0, 1.0] {
            let (mut lo, mut hi) = (0.5, 0.5 + side * 0.5);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if h1(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let crossing = (lo - 0.5).abs();
            assert!((crossing - 2f64.sqrt() * z0).abs() < 0.02, "crossing at {crossing}");
        }
    }
}
