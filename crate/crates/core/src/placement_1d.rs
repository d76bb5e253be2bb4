//! Max-min transmitter placement along a target line.
//!
//! Transmitters sit symmetrically about the centre of the line. With optimal
//! beamforming the load power at `x0` depends on the placement only through
//! `sum h_n0^2`, so requiring `p0 >= tau` everywhere is the same as requiring
//! the dipole kernel sum `sum_n f(d_n, x0)` to stay above a threshold
//! `g(tau)`. The largest feasible `tau` is found by bisection; each
//! feasibility test runs sign-gradient ascent on the worst-case kernel sum
//! from a fixed start and then from random restarts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::Strategy;
use crate::coil::WptSystem;
use crate::error::{ensure_positive, Error, Result};
use crate::magnetics::CouplingModel;
use crate::metrics::{self, Region, RegionMetrics};
use crate::search::{grid_min, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    /// One extra transmitter fixed at the centre of the line.
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Transmitters at `±d_n` (plus one at 0 for odd parity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPlacement1D {
    pub half_positions: Vec<f64>,
    pub parity: Parity,
    pub half_length: f64,
}

impl SymmetricPlacement1D {
    pub fn new(half_positions: Vec<f64>, parity: Parity, half_length: f64) -> Result<Self> {
        ensure_positive("half_length", half_length)?;
        if half_positions.iter().any(|&v| !(0.0..=half_length).contains(&v)) {
            return Err(Error::invalid("half_positions", format!("must lie in [0, {half_length}]")));
        }
        Ok(SymmetricPlacement1D {
            half_positions,
            parity,
            half_length,
        })
    }

    /// `n` transmitters evenly spaced from `-d` to `d`.
    pub fn uniform(n: usize, half_length: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("transmitters", "uniform placement needs at least 2"));
        }
        let parity = Parity::of(n);
        let step = 2.0 * half_length / (n - 1) as f64;
        let half = (0..n / 2)
            .map(|k| match parity {
                Parity::Even => 0.5 * step * (2 * k + 1) as f64,
                Parity::Odd => step * (k + 1) as f64,
            })
            .map(|v| v.min(half_length))
            .collect();
        Self::new(half, parity, half_length)
    }

    pub fn transmitters(&self) -> usize {
        2 * self.half_positions.len() + usize::from(self.parity == Parity::Odd)
    }

    /// All transmitter x coordinates, ascending.
    pub fn positions(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.half_positions.iter().flat_map(|&d| [-d, d]).collect();
        if self.parity == Parity::Odd {
            xs.push(0.0);
        }
        xs.sort_by(f64::total_cmp);
        xs
    }

    pub fn planar(&self) -> Vec<[f64; 2]> {
        self.positions().into_iter().map(|x| [x, 0.0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    /// Bisection stops once the bracket on `tau` is this narrow (W).
    pub epsilon: f64,
    /// Gradient step as a fraction of the region size (half-length or radius).
    pub delta: f64,
    pub itr_max: usize,
    /// Initial points per feasibility test, the deterministic one included.
    pub rpt_max: usize,
    /// Samples of the inner minimization over receiver positions.
    pub grid_points: usize,
    /// Retry a restart once with a tenth of the step when it makes no progress.
    pub retry_smaller_step: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            epsilon: 1e-3,
            delta: 0.01,
            itr_max: 100,
            rpt_max: 100,
            grid_points: 501,
            retry_smaller_step: false,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("epsilon", self.epsilon)?;
        ensure_positive("delta", self.delta)?;
        if self.itr_max == 0 {
            return Err(Error::invalid("itr_max", "must be at least 1"));
        }
        if self.rpt_max == 0 {
            return Err(Error::invalid("rpt_max", "must be at least 1"));
        }
        if self.grid_points < 2 {
            return Err(Error::invalid("grid_points", "must be at least 2"));
        }
        Ok(())
    }

    /// Outer bisection steps needed to shrink `[0, p_max]` below `epsilon`.
    pub fn bisection_steps(&self, p_max: f64) -> usize {
        let mut width = p_max;
        let mut steps = 0;
        while width > self.epsilon {
            width *= 0.5;
            steps += 1;
        }
        steps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementResult {
    pub placement: SymmetricPlacement1D,
    /// Largest `tau` certified feasible by the search, dipole model (W).
    pub tau_star: f64,
    /// Minimum of the exact optimal-beamforming load power over the line.
    pub certified_min: f64,
    /// Exact-model metrics of the returned placement under optimal beamforming.
    pub certified: RegionMetrics,
    /// Smallest `tau` the search declared infeasible (or `p_max`).
    pub tau_upper: f64,
    pub trace: Vec<BisectionStep>,
    pub bisection_iterations: usize,
    /// Gradient steps summed over all feasibility tests.
    pub gradient_steps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionStep {
    pub tau: f64,
    pub feasible: bool,
}

/// Kernel-sum threshold equivalent to `p0 >= tau` under optimal beamforming:
/// `sum_n f(d_n, x0) >= g(tau)` iff the dipole-model load power reaches `tau`.
/// Infinite from the power ceiling `(r_load / r_rx) p_max` up.
pub fn g_of_tau(tau: f64, system: &WptSystem) -> f64 {
    let (r_rx, r_tx, r_l, p_max, w, beta) = (
        system.r_rx,
        system.r_tx(),
        system.r_load(),
        system.p_max(),
        system.w(),
        system.beta,
    );
    if tau >= r_l / r_rx * p_max {
        return f64::INFINITY;
    }
    r_rx * r_rx * r_tx * tau / (w * w * beta * beta * (r_l * p_max - r_rx * tau))
}

/// `(2 z^2 - s^2)^2 / (z^2 + s^2)^5`, the squared dipole coupling over `beta^2`.
pub(crate) fn dipole_sq(s: f64, z0: f64) -> f64 {
    let (z2, s2) = (z0 * z0, s * s);
    (2.0 * z2 - s2).powi(2) / (z2 + s2).powi(5)
}

/// d/ds of [`dipole_sq`].
pub(crate) fn dipole_sq_slope(s: f64, z0: f64) -> f64 {
    let (z2, s2) = (z0 * z0, s * s);
    -6.0 * (8.0 * z2 * z2 + s2 * s2 - 6.0 * z2 * s2) * s / (z2 + s2).powi(6)
}

/// Squared dipole coupling, over `beta^2`, of the mirrored pair at `±d_n` seen
/// from `x0`.
pub fn f_kernel(d_n: f64, x0: f64, z0: f64) -> f64 {
    dipole_sq(d_n - x0, z0) + dipole_sq(d_n + x0, z0)
}

/// Partial derivative of [`f_kernel`] in `d_n`.
pub fn f_gradient(d_n: f64, x0: f64, z0: f64) -> f64 {
    dipole_sq_slope(d_n - x0, z0) + dipole_sq_slope(d_n + x0, z0)
}

/// Left-hand side of the feasibility constraint at receiver position `x0`.
fn kernel_sum(half: &[f64], parity: Parity, x0: f64, z0: f64) -> f64 {
    let centre = match parity {
        Parity::Even => 0.0,
        Parity::Odd => 0.5 * f_kernel(0.0, x0, z0),
    };
    centre + half.iter().map(|&d| f_kernel(d, x0, z0)).sum::<f64>()
}

/// Worst receiver position on `[0, d]` and the kernel sum there.
fn worst_point(half: &[f64], parity: Parity, d: f64, z0: f64, points: usize) -> (f64, f64) {
    grid_min(|x| kernel_sum(half, parity, x, z0), 0.0, d, points, 1e-9 * d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub half_positions: Option<Vec<f64>>,
    pub gradient_steps: usize,
}

/// Looks for half-positions whose kernel sum stays above `g(tau)` over the
/// whole half-line.
#[allow(clippy::too_many_arguments)]
pub fn feasibility_search(
    tau: f64,
    parity: Parity,
    m: usize,
    half_length: f64,
    system: &WptSystem,
    params: &SearchParams,
    seed: u64,
) -> Result<Feasibility> {
    params.validate()?;
    ensure_positive("half_length", half_length)?;
    Ok(feasibility(tau, parity, m, half_length, system, params, seed, 0))
}

#[allow(clippy::too_many_arguments)]
fn feasibility(
    tau: f64,
    parity: Parity,
    m: usize,
    d: f64,
    system: &WptSystem,
    params: &SearchParams,
    seed: u64,
    stream: u64,
) -> Feasibility {
    let threshold = g_of_tau(tau, system);
    let mut steps = 0;
    if threshold.is_infinite() {
        return Feasibility {
            half_positions: None,
            gradient_steps: 0,
        };
    }
    let z0 = system.z0();
    let n = (2 * m + usize::from(parity == Parity::Odd)) as f64;
    let spread = d / (n - 1.0);
    let start: Vec<f64> = (1..=m).map(|k| ((2 * k - 1) as f64 * spread).min(d)).collect();
    for rpt in 0..params.rpt_max {
        let init: Vec<f64> = if rpt == 0 {
            start.clone()
        } else {
            let mut rng = substream(seed, stream, rpt as u64);
            start
                .iter()
                .map(|&s| (s + rng.gen_range(-spread..=spread)).clamp(0.0, d))
                .collect()
        };
        let mut step = params.delta * d;
        let mut attempts = if params.retry_smaller_step { 2 } else { 1 };
        while attempts > 0 {
            attempts -= 1;
            let (found, progressed, used) = ascend(init.clone(), parity, d, z0, threshold, step, params);
            steps += used;
            if found.is_some() {
                return Feasibility {
                    half_positions: found,
                    gradient_steps: steps,
                };
            }
            if progressed {
                break;
            }
            step *= 0.1;
        }
    }
    Feasibility {
        half_positions: None,
        gradient_steps: steps,
    }
}

/// Sign-gradient ascent of the worst-case kernel sum. Returns the feasible
/// point if one is reached, whether the worst case ever improved, and the
/// number of checks made.
fn ascend(
    mut half: Vec<f64>,
    parity: Parity,
    d: f64,
    z0: f64,
    threshold: f64,
    step: f64,
    params: &SearchParams,
) -> (Option<Vec<f64>>, bool, usize) {
    let mut first = None;
    let mut progressed = false;
    for itr in 0..params.itr_max {
        let (x, f_min) = worst_point(&half, parity, d, z0, params.grid_points);
        if f_min >= threshold {
            return (Some(half), true, itr + 1);
        }
        match first {
            None => first = Some(f_min),
            Some(f0) => progressed |= f_min > f0,
        }
        for v in half.iter_mut() {
            *v = if f_gradient(*v, x, z0) < 0.0 {
                (*v - step).max(0.0)
            } else {
                (*v + step).min(d)
            };
        }
    }
    (None, progressed, params.itr_max)
}

/// Bisection on `tau` over `[0, p_max]` with a feasibility search at each
/// midpoint, followed by an exact-model evaluation of the winner over the
/// line on the default 2001-point grid.
pub fn optimize_placement_1d(
    n: usize,
    system: &WptSystem,
    half_length: f64,
    params: &SearchParams,
    seed: u64,
) -> Result<PlacementResult> {
    let model = CouplingModel::exact(system, 2.0 * half_length + 0.01)?;
    optimize_with_model(n, system, half_length, params, seed, &model, &Region::line(half_length))
}

/// [`optimize_placement_1d`] with a caller-supplied certification model and region.
pub fn optimize_with_model(
    n: usize,
    system: &WptSystem,
    half_length: f64,
    params: &SearchParams,
    seed: u64,
    model: &CouplingModel,
    certify: &Region,
) -> Result<PlacementResult> {
    if n < 2 {
        return Err(Error::invalid("transmitters", "line placement needs at least 2"));
    }
    ensure_positive("half_length", half_length)?;
    params.validate()?;
    let parity = Parity::of(n);
    let m = n / 2;
    let (mut lo, mut hi) = (0.0, system.p_max());
    let spread = half_length / (n - 1) as f64;
    let mut best: Vec<f64> = (1..=m).map(|k| ((2 * k - 1) as f64 * spread).min(half_length)).collect();
    let mut gradient_steps = 0;
    let mut trace = Vec::new();
    while hi - lo > params.epsilon {
        let tau = 0.5 * (lo + hi);
        let out = feasibility(tau, parity, m, half_length, system, params, seed, trace.len() as u64);
        gradient_steps += out.gradient_steps;
        trace.push(BisectionStep {
            tau,
            feasible: out.half_positions.is_some(),
        });
        match out.half_positions {
            Some(found) => {
                lo = tau;
                best = found;
            }
            None => hi = tau,
        }
    }
    let placement = SymmetricPlacement1D::new(best, parity, half_length)?;
    let profile = metrics::profile(&placement.planar(), certify, system, Strategy::Optimal, model)?;
    let certified = profile.metrics()?;
    Ok(PlacementResult {
        placement,
        tau_star: lo,
        certified_min: certified.p_min,
        certified,
        tau_upper: hi,
        bisection_iterations: trace.len(),
        trace,
        gradient_steps,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::delivered_power_optimal;
    use crate::coil::SystemConfig;
    use crate::magnetics::mutual_approx;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn sys() -> WptSystem {
        WptSystem::new(SystemConfig::reference()).unwrap()
    }

    #[test]
    fn g_inverts_optimal_power() {
        let s = sys();
        assert_eq!(g_of_tau(0.0, &s), 0.0);
        assert!(g_of_tau(s.power_ceiling(), &s).is_infinite());
        assert!(g_of_tau(s.p_max(), &s).is_infinite());
        for &tau in &[0.5, 12.0, 20.0, 25.6] {
            let sum_h2 = g_of_tau(tau, &s) * s.beta * s.beta;
            let p = s.optimal_load_power(sum_h2);
            assert!(((p - tau) / tau).abs() < 1e-9, "{tau}: {p}");
        }
    }

    #[test]
    fn kernel_identities() {
        let z0 = 0.2;
        assert_eq!(f_kernel(0.3, 0.0, z0), 2.0 * dipole_sq(0.3, z0));
        let want = 8.0 / z0.powi(6);
        assert!((f_kernel(0.0, 0.0, z0) - want).abs() < 1e-12 * want);
        let beta = sys().beta;
        for &(dn, x) in &[(0.1, 0.4), (0.7, 0.2), (0.0, 0.9), (0.5, 0.5)] {
            let h = mutual_approx(beta, dn - x, z0).powi(2) + mutual_approx(beta, dn + x, z0).powi(2);
            let f = f_kernel(dn, x, z0);
            assert!((f - h / (beta * beta)).abs() < 1e-12 * f);
        }
        // d_n = x0: the first summand's slope vanishes
        assert_eq!(dipole_sq_slope(0.0, z0), 0.0);
        assert_eq!(f_gradient(0.3, 0.3, z0), dipole_sq_slope(0.6, z0));
    }

    #[test]
    fn kernel_is_even() {
        for &(dn, x) in &[(0.2, 0.35), (0.9, 0.1)] {
            assert_eq!(f_kernel(dn, x, 0.2), f_kernel(dn, -x, 0.2));
            assert_eq!(f_gradient(dn, x, 0.2), f_gradient(dn, -x, 0.2));
            // odd in d_n
            assert!((f_gradient(-dn, x, 0.2) + f_gradient(dn, x, 0.2)).abs() < 1e-9 * f_gradient(dn, x, 0.2).abs());
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 100 {
            let (dn, x, z0) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.1..0.5));
            let fd = (f_kernel(dn + h, x, z0) - f_kernel(dn - h, x, z0)) / (2.0 * h);
            let an = f_gradient(dn, x, z0);
            // skip points where the slope itself is at rounding level
            if an.abs() < 1e-6 * f_kernel(dn, x, z0) / z0 {
                continue;
            }
            assert!(((fd - an) / an).abs() < 1e-5, "{dn} {x} {z0}: {fd} vs {an}");
            checked += 1;
        }
    }

    #[test]
    fn placement_expansion() {
        let p = SymmetricPlacement1D::new(vec![0.4, 0.8], Parity::Odd, 1.0).unwrap();
        assert_eq!(p.positions(), vec![-0.8, -0.4, 0.0, 0.4, 0.8]);
        assert_eq!(p.transmitters(), 5);
        let u = SymmetricPlacement1D::uniform(5, 1.0).unwrap();
        assert_eq!(u.positions(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let u = SymmetricPlacement1D::uniform(4, 1.5).unwrap();
        assert_eq!(u.positions(), vec![-1.5, -0.5, 0.5, 1.5]);
        assert!(SymmetricPlacement1D::new(vec![1.2], Parity::Even, 1.0).is_err());
    }

    #[test]
    fn trivial_feasibility_cases() {
        let s = sys();
        let params = SearchParams::default();
        let zero = feasibility_search(0.0, Parity::Odd, 2, 1.0, &s, &params, 1).unwrap();
        assert_eq!(zero.half_positions, Some(vec![0.25, 0.75]));
        assert_eq!(zero.gradient_steps, 1);
        let over = feasibility_search(s.power_ceiling() + 0.1, Parity::Odd, 2, 1.0, &s, &params, 1).unwrap();
        assert_eq!(over.half_positions, None);
        assert_eq!(over.gradient_steps, 0);
    }

    #[test]
    fn feasible_at_fifteen_watts() {
        let s = sys();
        let params = SearchParams::default();
        let out = feasibility_search(15.0, Parity::Odd, 2, 1.0, &s, &params, 11).unwrap();
        let half = out.half_positions.expect("15 W is feasible");
        let p = SymmetricPlacement1D::new(half, Parity::Odd, 1.0).unwrap();
        let model = CouplingModel::approx(&s);
        let prof = metrics::profile(&p.planar(), &Region::line(1.0), &s, Strategy::Optimal, &model).unwrap();
        assert!(prof.metrics().unwrap().p_min >= 15.0 * 0.99);
    }

    fn quick() -> SearchParams {
        SearchParams {
            epsilon: 1e-2,
            itr_max: 60,
            rpt_max: 4,
            ..SearchParams::default()
        }
    }

    #[test]
    fn bisection_bounds_and_determinism() {
        let s = sys();
        let model = CouplingModel::approx(&s);
        let region = Region::line(1.0).with_sampling(metrics::Sampling {
            line_points: 401,
            ..Default::default()
        });
        let params = quick();
        let a = optimize_with_model(5, &s, 1.0, &params, 42, &model, &region).unwrap();
        let b = optimize_with_model(5, &s, 1.0, &params, 42, &model, &region).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bisection_iterations, params.bisection_steps(s.p_max()));
        assert_eq!(params.bisection_steps(30.0), 12);
        // the lower bound is feasible: the approx-model minimum clears it
        assert!(a.certified_min >= a.tau_star * (1.0 - 1e-6));
        let (_, f_min) = worst_point(&a.placement.half_positions, Parity::Odd, 1.0, 0.2, 100_001);
        assert!(f_min >= g_of_tau(a.tau_star, &s) * (1.0 - 1e-9));
        assert!(a.tau_upper - a.tau_star <= params.epsilon);
        for (i, step) in a.trace.iter().enumerate() {
            if step.feasible {
                assert!(step.tau <= a.tau_star);
            } else {
                assert!(step.tau >= a.tau_upper);
            }
            let again = feasibility(step.tau, Parity::Odd, 2, 1.0, &s, &params, 42, i as u64);
            assert_eq!(again.half_positions.is_some(), step.feasible);
        }
    }

    #[test]
    fn collapsed_line_pair() {
        let s = sys();
        let model = CouplingModel::approx(&s);
        let d = 1e-3;
        let res = optimize_with_model(2, &s, d, &quick(), 5, &model, &Region::line(d)).unwrap();
        assert!(res.placement.half_positions[0] <= d);
        let together = delivered_power_optimal(&[mutual_approx(s.beta, 0.0, 0.2); 2], &s);
        assert!(((res.certified_min - together) / together).abs() < 1e-3);
    }

    #[test]
    fn invalid_inputs() {
        let s = sys();
        assert!(optimize_placement_1d(1, &s, 1.0, &SearchParams::default(), 0).is_err());
        let bad = SearchParams {
            rpt_max: 0,
            ..SearchParams::default()
        };
        assert!(feasibility_search(1.0, Parity::Even, 1, 1.0, &s, &bad, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn kernel_nonnegative_and_g_monotone(dn in 0.0f64..2.0, x in -2.0f64..2.0, t1 in 0.0f64..25.0, t2 in 0.0f64..25.0) {
            prop_assert!(f_kernel(dn, x, 0.2) >= 0.0);
            let s = sys();
            let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(g_of_tau(a, &s) <= g_of_tau(b, &s));
        }
    }
}
