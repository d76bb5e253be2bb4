//! Coil descriptions and the electrical parameters derived from them.
//!
//! All quantities are SI: metres, ohms, henries, farads, watts, rad/s.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::MU_0;

/// Physical description of a multi-turn circular coil of round wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoilSpec {
    /// Average coil radius (m).
    pub coil_radius: f64,
    pub turns: u32,
    /// Radius of the wire the coil is wound from (m).
    pub wire_radius: f64,
    /// Wire resistivity constant fed to the resistance formula.
    pub resistivity: f64,
}

impl CoilSpec {
    pub fn new(coil_radius: f64, turns: u32, wire_radius: f64, resistivity: f64) -> Result<Self> {
        let coil = CoilSpec {
            coil_radius,
            turns,
            wire_radius,
            resistivity,
        };
        coil.validate()?;
        Ok(coil)
    }

    /// 50 mm, 400 turns, 0.1 mm copper wire.
    pub fn reference_transmitter() -> Self {
        CoilSpec {
            coil_radius: 0.05,
            turns: 400,
            wire_radius: 1.0e-4,
            resistivity: 1.68e-8,
        }
    }

    /// 25 mm, 200 turns, 0.1 mm copper wire.
    pub fn reference_receiver() -> Self {
        CoilSpec {
            coil_radius: 0.025,
            turns: 200,
            wire_radius: 1.0e-4,
            resistivity: 1.68e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("coil_radius", self.coil_radius)?;
        ensure_positive("wire_radius", self.wire_radius)?;
        ensure_positive("resistivity", self.resistivity)?;
        if self.turns == 0 {
            return Err(Error::invalid("turns", "must be at least 1"));
        }
        if self.wire_radius >= self.coil_radius {
            return Err(Error::invalid(
                "wire_radius",
                format!(
                    "must be smaller than coil_radius ({} >= {})",
                    self.wire_radius, self.coil_radius
                ),
            ));
        }
        Ok(())
    }

    fn turns_f64(&self) -> f64 {
        f64::from(self.turns)
    }
}

/// Lumped electrical parameters of a resonant coil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectricalParams {
    /// Parasitic series resistance (Ω).
    pub resistance: f64,
    /// Self-inductance (H).
    pub self_inductance: f64,
    /// Series compensator capacitance tuning the coil to resonance (F).
    pub compensator_capacitance: f64,
}

/// Derives resistance, self-inductance and the resonant compensator
/// capacitance of `coil` at angular frequency `w`.
///
/// Fails when `ln(8 r_coil / r_wire) <= 2`, where the thin-wire inductance
/// formula turns non-positive.
pub fn derive_electrical(coil: &CoilSpec, w: f64) -> Result<ElectricalParams> {
    coil.validate()?;
    ensure_positive("angular_frequency", w)?;
    let turns = coil.turns_f64();
    let log_term = (8.0 * coil.coil_radius / coil.wire_radius).ln();
    if log_term <= 2.0 {
        return Err(Error::invalid(
            "coil_radius",
            format!("ln(8 r_coil / r_wire) = {log_term:.6} must exceed 2"),
        ));
    }
    let resistance = 2.0 * coil.resistivity * turns * coil.coil_radius / coil.wire_radius.powi(2);
    let self_inductance = MU_0 * turns * turns * coil.coil_radius * (log_term - 2.0);
    let compensator_capacitance = 1.0 / (self_inductance * w * w);
    Ok(ElectricalParams {
        resistance,
        self_inductance,
        compensator_capacitance,
    })
}

/// Parasitic plus load resistance of the receiver loop.
pub fn total_receiver_resistance(params: &ElectricalParams, load: f64) -> Result<f64> {
    ensure_positive("load_resistance", load)?;
    ensure_positive("resistance", params.resistance)?;
    Ok(params.resistance + load)
}

/// Operating point and hardware of a MISO link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Source angular frequency `w` (rad/s).
    pub angular_frequency: f64,
    /// Sum-power budget over all transmitter sources (W).
    pub sum_power_budget: f64,
    /// Height of the receiver plane above the transmitter plane (m).
    pub receiver_height: f64,
    /// Load resistance at the receiver (Ω).
    pub load_resistance: f64,
    pub tx_coil: CoilSpec,
    pub rx_coil: CoilSpec,
}

impl SystemConfig {
    /// 42.6 Mrad/s, 30 W budget, receiver 0.2 m above the transmitters, 100 Ω load.
    pub fn reference() -> Self {
        SystemConfig {
            angular_frequency: 42.6e6,
            sum_power_budget: 30.0,
            receiver_height: 0.2,
            load_resistance: 100.0,
            tx_coil: CoilSpec::reference_transmitter(),
            rx_coil: CoilSpec::reference_receiver(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("angular_frequency", self.angular_frequency)?;
        ensure_positive("sum_power_budget", self.sum_power_budget)?;
        ensure_positive("receiver_height", self.receiver_height)?;
        ensure_positive("load_resistance", self.load_resistance)?;
        self.tx_coil.validate()?;
        self.rx_coil.validate()
    }
}

/// A validated [`SystemConfig`] together with the quantities every power
/// evaluation needs: coil parameters, total receiver resistance and the
/// dipole coupling constant `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WptSystem {
    pub config: SystemConfig,
    pub tx: ElectricalParams,
    pub rx: ElectricalParams,
    /// Receiver parasitic + load resistance (Ω).
    pub r_rx: f64,
    /// `mu pi b_tx b_rx r_tx^2 r_rx^2 / 4`, the far-field coupling constant (H·m³).
    pub beta: f64,
}

impl WptSystem {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let w = config.angular_frequency;
        let tx = derive_electrical(&config.tx_coil, w)?;
        let rx = derive_electrical(&config.rx_coil, w)?;
        let r_rx = total_receiver_resistance(&rx, config.load_resistance)?;
        let beta = crate::magnetics::coupling_constant(&config.tx_coil, &config.rx_coil);
        Ok(WptSystem {
            config,
            tx,
            rx,
            r_rx,
            beta,
        })
    }

    pub fn w(&self) -> f64 {
        self.config.angular_frequency
    }

    pub fn r_tx(&self) -> f64 {
        self.tx.resistance
    }

    pub fn r_load(&self) -> f64 {
        self.config.load_resistance
    }

    pub fn p_max(&self) -> f64 {
        self.config.sum_power_budget
    }

    pub fn z0(&self) -> f64 {
        self.config.receiver_height
    }

    /// Upper bound `(r_load / r_rx) p_max` on the load power of any allocation.
    pub fn power_ceiling(&self) -> f64 {
        self.r_load() / self.r_rx * self.p_max()
    }

    /// Load power under optimal beamforming given `sum h_n0^2`.
    pub fn optimal_load_power(&self, sum_h2: f64) -> f64 {
        let gain = self.w() * self.w() / (self.r_rx * self.r_tx()) * sum_h2;
        // gain / (1 + gain) == 1 - 1 / (1 + gain), without cancellation at small gain
        self.power_ceiling() * gain / (1.0 + gain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const W: f64 = 42.6e6;

    fn within(value: f64, target: f64, rel: f64) -> bool {
        ((value - target) / target).abs() <= rel
    }

    #[test]
    fn reference_transmitter_parameters() {
        let p = derive_electrical(&CoilSpec::reference_transmitter(), W).unwrap();
        assert!(within(p.resistance, 67.20, 5e-3), "{p:?}");
        assert!(within(p.self_inductance, 63.27e-3, 5e-3), "{p:?}");
        assert!(within(p.compensator_capacitance, 8.71e-15, 5e-3), "{p:?}");
    }

    #[test]
    fn reference_receiver_parameters() {
        let p = derive_electrical(&CoilSpec::reference_receiver(), W).unwrap();
        assert!(within(p.resistance, 16.80, 5e-3), "{p:?}");
        assert!(within(p.self_inductance, 7.04e-3, 5e-3), "{p:?}");
        assert!(within(p.compensator_capacitance, 78.29e-15, 5e-3), "{p:?}");
    }

    #[test]
    fn nonphysical_inductance_rejected() {
        // wire_radius < coil_radius already forces ln(8 r_coil / r_wire) > ln 8 > 2,
        // so a log term at or below 2 surfaces as a wire/coil radius violation
        let equal = CoilSpec {
            coil_radius: 1.0e-3,
            turns: 10,
            wire_radius: 1.0e-3,
            resistivity: 1.68e-8,
        };
        assert!(matches!(
            derive_electrical(&equal, W),
            Err(Error::Invalid { field: "wire_radius", .. })
        ));
        let thick = CoilSpec {
            wire_radius: 0.999e-3,
            ..equal
        };
        let p = derive_electrical(&thick, W).unwrap();
        assert!(p.self_inductance > 0.0);
    }

    #[test]
    fn resonance_round_trip() {
        for &w in &[1.0, 1.0e3, 42.6e6, 1.0e9] {
            for coil in [CoilSpec::reference_transmitter(), CoilSpec::reference_receiver()] {
                let p = derive_electrical(&coil, w).unwrap();
                let lcw2 = p.self_inductance * p.compensator_capacitance * w * w;
                assert_relative_eq!(lcw2, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn parameters_increase_with_turns() {
        let mut last = derive_electrical(
            &CoilSpec {
                turns: 1,
                ..CoilSpec::reference_transmitter()
            },
            W,
        )
        .unwrap();
        for turns in 2..60 {
            let p = derive_electrical(
                &CoilSpec {
                    turns,
                    ..CoilSpec::reference_transmitter()
                },
                W,
            )
            .unwrap();
            assert!(p.resistance > last.resistance);
            assert!(p.self_inductance > last.self_inductance);
            // quadratic in turns
            let ratio = p.self_inductance / last.self_inductance;
            let expected = (f64::from(turns) / f64::from(turns - 1)).powi(2);
            assert_relative_eq!(ratio, expected, max_relative = 1e-12);
            last = p;
        }
    }

    #[test]
    fn receiver_resistance_sum() {
        let rx = derive_electrical(&CoilSpec::reference_receiver(), W).unwrap();
        assert_relative_eq!(
            total_receiver_resistance(&rx, 100.0).unwrap(),
            116.80,
            max_relative = 1e-9
        );
        assert!(total_receiver_resistance(&rx, 0.0).is_err());
        let unit = ElectricalParams {
            resistance: 1.0,
            self_inductance: 1.0,
            compensator_capacitance: 1.0,
        };
        assert_eq!(total_receiver_resistance(&unit, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn config_validation_names_field() {
        let mut cfg = SystemConfig::reference();
        cfg.angular_frequency = 0.0;
        match WptSystem::new(cfg) {
            Err(Error::Invalid { field, .. }) => assert_eq!(field, "angular_frequency"),
            other => panic!("unexpected {other:?}"),
        }
        let mut cfg = SystemConfig::reference();
        cfg.tx_coil.turns = 0;
        assert!(WptSystem::new(cfg).is_err());
    }

    #[test]
    fn ceiling_is_optimal_power_limit() {
        let sys = WptSystem::new(SystemConfig::reference()).unwrap();
        assert_relative_eq!(sys.power_ceiling(), 100.0 / 116.8 * 30.0, max_relative = 1e-9);
        assert_eq!(sys.optimal_load_power(0.0), 0.0);
        assert_relative_eq!(
            sys.optimal_load_power(1.0e10),
            sys.power_ceiling(),
            max_relative = 1e-9
        );
    }
}
