//! Transmitter current allocation under a sum-power budget.
//!
//! With real currents the load power is `(w^2 r_l / r_rx^2)(h . i)^2` and the
//! budget is `r_tx |i|^2 + (w^2 / r_rx)(h . i)^2 <= p_max`. The optimum aligns
//! `i` with `h`; the equal-current and selection baselines are feasible
//! points of the same problem.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::CurrentAllocation;
use crate::coil::WptSystem;
use crate::error::{ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Currents proportional to each transmitter's mutual inductance.
    #[default]
    Optimal,
    /// One common positive current on every transmitter.
    Equal,
    /// Full budget on the transmitter with the largest `h^2`.
    Selection,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Optimal, Strategy::Equal, Strategy::Selection];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Optimal => "optimal",
            Strategy::Equal => "equal",
            Strategy::Selection => "selection",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "optimal" => Ok(Strategy::Optimal),
            "equal" => Ok(Strategy::Equal),
            "selection" => Ok(Strategy::Selection),
            other => Err(Error::invalid(
                "strategy",
                format!("expected optimal, equal or selection, got {other:?}"),
            )),
        }
    }
}

fn check_inputs(h: &[f64], p_max: f64, r_tx: f64, r_rx: f64, w: f64) -> Result<()> {
    if h.is_empty() {
        return Err(Error::invalid("h", "need at least one transmitter"));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("h", "mutual inductances must be finite"));
    }
    ensure_positive("sum_power_budget", p_max)?;
    ensure_positive("r_tx", r_tx)?;
    ensure_positive("r_rx", r_rx)?;
    ensure_positive("angular_frequency", w)
}

/// Closed-form maximizer of the load power under the sum-power budget.
pub fn optimal_currents(h: &[f64], p_max: f64, r_tx: f64, r_rx: f64, w: f64) -> Result<CurrentAllocation> {
    check_inputs(h, p_max, r_tx, r_rx, w)?;
    let s: f64 = h.iter().map(|v| v * v).sum();
    if s == 0.0 {
        return Err(Error::DegenerateCoupling);
    }
    let scale = (p_max / (s * (r_tx + w * w / r_rx * s))).sqrt();
    CurrentAllocation::real(h.iter().map(|v| v * scale).collect())
}

/// Load power reached by [`optimal_currents`]; zero when `h` is all zero.
pub fn delivered_power_optimal(h: &[f64], system: &WptSystem) -> f64 {
    system.optimal_load_power(h.iter().map(|v| v * v).sum())
}

/// The common positive current `c` with `r_tx N c^2 + (w^2 / r_rx)(sum h)^2 c^2 = p_max`.
pub fn equal_currents(h: &[f64], p_max: f64, r_tx: f64, r_rx: f64, w: f64) -> Result<CurrentAllocation> {
    check_inputs(h, p_max, r_tx, r_rx, w)?;
    let s: f64 = h.iter().sum();
    let c = (p_max / (r_tx * h.len() as f64 + w * w / r_rx * s * s)).sqrt();
    CurrentAllocation::real(vec![c; h.len()])
}

/// Index of the largest `h^2`, lowest index on ties.
pub fn selected_transmitter(h: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (n, v) in h.iter().enumerate() {
        let v2 = v * v;
        if best.is_none_or(|(_, b)| v2 > b) {
            best = Some((n, v2));
        }
    }
    best.map(|(n, _)| n)
}

/// Entire budget on the single transmitter with the largest `h^2`.
pub fn transmitter_selection(h: &[f64], p_max: f64, r_tx: f64, r_rx: f64, w: f64) -> Result<CurrentAllocation> {
    check_inputs(h, p_max, r_tx, r_rx, w)?;
    let n = selected_transmitter(h).expect("non-empty");
    let mut re = vec![0.0; h.len()];
    // a sign is irrelevant for a single transmitter; follow h so the
    // allocation coincides with the single-coil optimum
    let sign = if h[n] < 0.0 { -1.0 } else { 1.0 };
    re[n] = sign * (p_max / (r_tx + w * w / r_rx * h[n] * h[n])).sqrt();
    CurrentAllocation::real(re)
}

/// Allocation of `strategy` for mutual inductances `h`.
pub fn allocate(strategy: Strategy, h: &[f64], system: &WptSystem) -> Result<CurrentAllocation> {
    let f = match strategy {
        Strategy::Optimal => optimal_currents,
        Strategy::Equal => equal_currents,
        Strategy::Selection => transmitter_selection,
    };
    f(h, system.p_max(), system.r_tx(), system.r_rx, system.w())
}

/// Load power of `strategy` at a receiver seeing mutual inductances `h`,
/// without materializing the currents. A zero `h` delivers nothing.
pub fn load_power(strategy: Strategy, h: &[f64], system: &WptSystem) -> f64 {
    match strategy {
        Strategy::Optimal => delivered_power_optimal(h, system),
        Strategy::Selection => match selected_transmitter(h) {
            Some(n) => system.optimal_load_power(h[n] * h[n]),
            None => 0.0,
        },
        Strategy::Equal => {
            let s: f64 = h.iter().sum();
            let (w, r_rx) = (system.w(), system.r_rx);
            let c2 = system.p_max() / (system.r_tx() * h.len() as f64 + w * w / r_rx * s * s);
            w * w * system.r_load() / (r_rx * r_rx) * c2 * s * s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit;
    use crate::coil::SystemConfig;
    use approx::assert_relative_eq;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, Strategy as _};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sys() -> WptSystem {
        WptSystem::new(SystemConfig::reference()).unwrap()
    }

    fn budget_of(a: &CurrentAllocation, h: &[f64], s: &WptSystem) -> f64 {
        circuit::sum_power(a, h, s.r_tx(), s.r_rx, s.w()).unwrap()
    }

    fn p0(a: &CurrentAllocation, h: &[f64], s: &WptSystem) -> f64 {
        circuit::load_power(a, h, s.r_rx, s.r_load(), s.w()).unwrap()
    }

    /// Projected-gradient ascent on the load power with radial retraction
    /// onto the budget boundary (the objective is 2-homogeneous, so the
    /// optimum saturates the budget).
    fn projected_gradient(h: &[f64], s: &WptSystem, rng: &mut ChaCha8Rng) -> f64 {
        let mut i: Vec<f64> = h.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let retract = |i: &mut Vec<f64>| {
            let a = CurrentAllocation::real(i.clone()).unwrap();
            let k = (s.p_max() / budget_of(&a, h, s)).sqrt();
            i.iter_mut().for_each(|v| *v *= k);
        };
        retract(&mut i);
        let mut last = 0.0;
        for _ in 0..20_000 {
            let proj: f64 = h.iter().zip(&i).map(|(h, i)| h * i).sum();
            let grad: Vec<f64> = h.iter().map(|h| 2.0 * proj * h).collect();
            let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            let inorm = i.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn == 0.0 {
                // started orthogonal to h: nudge off the saddle
                i[0] += 1e-3 * inorm;
                retract(&mut i);
                continue;
            }
            for (v, g) in i.iter_mut().zip(&grad) {
                *v += 0.5 * inorm * g / gn;
            }
            retract(&mut i);
            let val = p0(&CurrentAllocation::real(i.clone()).unwrap(), h, s);
            if (val - last).abs() <= 1e-15 * val {
                return val;
            }
            last = val;
        }
        last
    }

    #[test]
    fn single_transmitter_closed_form() {
        let s = sys();
        let h = [2.1e-6];
        let a = optimal_currents(&h, s.p_max(), s.r_tx(), s.r_rx, s.w()).unwrap();
        let want = (s.p_max() / (s.r_tx() + s.w().powi(2) * h[0] * h[0] / s.r_rx)).sqrt();
        assert_relative_eq!(a.re[0], want, max_relative = 1e-14);
        let e = equal_currents(&h, s.p_max(), s.r_tx(), s.r_rx, s.w()).unwrap();
        assert_relative_eq!(e.re[0].abs(), a.re[0].abs(), max_relative = 1e-14);
        let neg = [-2.1e-6];
        let sel = transmitter_selection(&neg, s.p_max(), s.r_tx(), s.r_rx, s.w()).unwrap();
        let opt = optimal_currents(&neg, s.p_max(), s.r_tx(), s.r_rx, s.w()).unwrap();
        assert_eq!(sel, opt);
    }

    #[test]
    fn degenerate_coupling_rejected() {
        let s = sys();
        assert_eq!(
            optimal_currents(&[0.0, 0.0], s.p_max(), s.r_tx(), s.r_rx, s.w()),
            Err(Error::DegenerateCoupling)
        );
        assert_eq!(delivered_power_optimal(&[0.0, 0.0], &s), 0.0);
        assert_eq!(load_power(Strategy::Optimal, &[0.0], &s), 0.0);
        assert!(optimal_currents(&[], 30.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ceiling_limit() {
        let s = sys();
        assert_relative_eq!(delivered_power_optimal(&[1.0], &s), 25.684931506849317, max_relative = 1e-9);
    }

    #[test]
    fn selection_ties_take_lowest_index() {
        assert_eq!(selected_transmitter(&[1e-6, -3e-6, 3e-6]), Some(1));
        assert_eq!(selected_transmitter(&[0.0, 0.0]), Some(0));
        assert_eq!(selected_transmitter(&[]), None);
        let s = sys();
        let a = transmitter_selection(&[1e-6, -3e-6, 3e-6], s.p_max(), s.r_tx(), s.r_rx, s.w()).unwrap();
        assert!(a.re[0] == 0.0 && a.re[1] < 0.0 && a.re[2] == 0.0);
    }

    #[test]
    fn dominant_transmitter_selection_approaches_optimal() {
        let s = sys();
        let h = [5e-6, 1e-9, -2e-9];
        let sel = load_power(Strategy::Selection, &h, &s);
        let opt = load_power(Strategy::Optimal, &h, &s);
        assert!(sel <= opt && (opt - sel) < 1e-6 * opt);
    }

    #[test]
    fn strategy_names_round_trip() {
        for st in Strategy::ALL {
            assert_eq!(st.to_string().parse::<Strategy>().unwrap(), st);
        }
        assert!("ocul".parse::<Strategy>().is_err());
    }

    #[test]
    fn closed_form_matches_numerical_maximizer() {
        let s = sys();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(1..=8);
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-4e-6..4e-6)).collect();
            let closed = delivered_power_optimal(&h, &s);
            let numeric = projected_gradient(&h, &s, &mut rng);
            assert!(((closed - numeric) / closed).abs() < 1e-6, "{closed} vs {numeric}");
        }
    }

    fn mutuals() -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5e-6f64..5e-6, 1..9)
            .prop_filter("some coupling", |h| h.iter().any(|v| v.abs() > 1e-12))
    }

    proptest! {
        #[test]
        fn budget_is_exhausted(h in mutuals()) {
            let s = sys();
            for st in Strategy::ALL {
                let a = allocate(st, &h, &s).unwrap();
                prop_assert!((budget_of(&a, &h, &s) - s.p_max()).abs() <= 1e-12 * s.p_max());
                let direct = p0(&a, &h, &s);
                let fast = load_power(st, &h, &s);
                prop_assert!((direct - fast).abs() <= 1e-12 * direct.max(1e-300));
            }
        }

        #[test]
        fn optimal_dominates(h in mutuals()) {
            let s = sys();
            let opt = load_power(Strategy::Optimal, &h, &s);
            prop_assert!(load_power(Strategy::Equal, &h, &s) <= opt * (1.0 + 1e-12));
            prop_assert!(load_power(Strategy::Selection, &h, &s) <= opt * (1.0 + 1e-12));
        }

        #[test]
        fn optimal_is_proportional_and_sign_blind(h in mutuals(), flip in 0usize..8) {
            let s = sys();
            let a = allocate(Strategy::Optimal, &h, &s).unwrap();
            let ratios: Vec<f64> = h.iter().zip(&a.re).filter(|(h, _)| **h != 0.0).map(|(h, i)| i / h).collect();
            for r in &ratios {
                prop_assert!((r - ratios[0]).abs() <= 1e-12 * ratios[0].abs());
                prop_assert!(*r > 0.0);
            }
            prop_assert!(a.im.iter().all(|&v| v == 0.0));
            let mut g = h.clone();
            let k = flip % g.len();
            g[k] = -g[k];
            prop_assert_eq!(delivered_power_optimal(&g, &s), delivered_power_optimal(&h, &s));
        }
    }
}
