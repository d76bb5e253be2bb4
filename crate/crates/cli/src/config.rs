//! Scenario files: TOML with SI units except coil and wire radii, which are
//! given in millimetres.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wpt_core::beamforming::Strategy;
use wpt_core::coil::{CoilSpec, SystemConfig, WptSystem};
use wpt_core::magnetics::MutualMode;
use wpt_core::metrics::{Region, RegionKind, Sampling};
use wpt_core::placement_1d::SearchParams;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub strategy: Strategy,
    pub mode: MutualMode,
    pub system: SystemSection,
    pub tx_coil: CoilSection,
    pub rx_coil: CoilSection,
    pub region: Option<RegionSection>,
    pub placement: Option<PlacementSection>,
    pub solver: SolverSection,
    pub sampling: Sampling,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let reference = SystemConfig::reference();
        ScenarioConfig {
            strategy: Strategy::Optimal,
            mode: MutualMode::Exact,
            system: SystemSection::default(),
            tx_coil: CoilSection::from_spec(&reference.tx_coil),
            rx_coil: CoilSection::from_spec(&reference.rx_coil),
            region: None,
            placement: None,
            solver: SolverSection::default(),
            sampling: Sampling::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    /// rad/s
    pub angular_frequency: f64,
    /// W
    pub sum_power_budget: f64,
    /// m
    pub receiver_height: f64,
    /// Ω
    pub load_resistance: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let r = SystemConfig::reference();
        SystemSection {
            angular_frequency: r.angular_frequency,
            sum_power_budget: r.sum_power_budget,
            receiver_height: r.receiver_height,
            load_resistance: r.load_resistance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilSection {
    pub coil_radius_mm: f64,
    pub turns: u32,
    pub wire_radius_mm: f64,
    pub resistivity: f64,
}

impl CoilSection {
    fn from_spec(c: &CoilSpec) -> Self {
        CoilSection {
            coil_radius_mm: c.coil_radius * 1e3,
            turns: c.turns,
            wire_radius_mm: c.wire_radius * 1e3,
            resistivity: c.resistivity,
        }
    }

    fn to_spec(self) -> CoilSpec {
        CoilSpec {
            coil_radius: self.coil_radius_mm * 1e-3,
            turns: self.turns,
            wire_radius: self.wire_radius_mm * 1e-3,
            resistivity: self.resistivity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSection {
    /// `|x| <= half_length` (m)
    Line { half_length: f64 },
    /// `r <= radius` (m)
    Disk { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PlacementSection {
    /// Positions in metres: plain numbers are x coordinates on the line,
    /// pairs are planar `[x, y]`.
    Explicit { positions: Positions },
    /// `transmitters` evenly spread over the line, ends included.
    Uniform { transmitters: usize },
    /// Searched by the placement solver.
    Optimize { transmitters: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Positions {
    Line(Vec<f64>),
    Planar(Vec<[f64; 2]>),
}

impl Positions {
    pub fn planar(&self) -> Vec<[f64; 2]> {
        match self {
            Positions::Line(xs) => xs.iter().map(|&x| [x, 0.0]).collect(),
            Positions::Planar(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon: f64,
    /// Step as a fraction of the half-length or radius.
    pub delta: f64,
    pub itr_max: usize,
    pub rpt_max: usize,
    pub grid_points: usize,
    pub retry_smaller_step: bool,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let p = SearchParams::default();
        SolverSection {
            epsilon: p.epsilon,
            delta: p.delta,
            itr_max: p.itr_max,
            rpt_max: p.rpt_max,
            grid_points: p.grid_points,
            retry_smaller_step: p.retry_smaller_step,
            seed: 0,
        }
    }
}

impl SolverSection {
    pub fn params(&self) -> SearchParams {
        SearchParams {
            epsilon: self.epsilon,
            delta: self.delta,
            itr_max: self.itr_max,
            rpt_max: self.rpt_max,
            grid_points: self.grid_points,
            retry_smaller_step: self.retry_smaller_step,
        }
    }
}

/// Prefixes a core validation error with the section it came from.
fn in_section(section: &str, e: wpt_core::Error) -> CliError {
    match e {
        wpt_core::Error::Invalid { field, reason } => CliError::Validation(format!("{section}.{field}: {reason}")),
        other => CliError::from(other),
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg: ScenarioConfig =
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system()?;
        if let Some(region) = &self.region {
            self.region_for(region)
                .validate()
                .map_err(|e| in_section("region", e))?;
        }
        self.solver.params().validate().map_err(|e| in_section("solver", e))?;
        match (&self.placement, &self.region) {
            (Some(PlacementSection::Uniform { transmitters }), region) => {
                if *transmitters < 2 {
                    return Err(CliError::Validation("placement.transmitters: uniform needs at least 2".into()));
                }
                if matches!(region, Some(RegionSection::Disk { .. })) {
                    return Err(CliError::Validation(
                        "placement.kind: uniform placement is only defined on a line region".into(),
                    ));
                }
            }
            (Some(PlacementSection::Optimize { transmitters }), region) => {
                let min = match region {
                    Some(RegionSection::Line { .. }) => 2,
                    _ => 1,
                };
                if *transmitters < min {
                    return Err(CliError::Validation(format!(
                        "placement.transmitters: must be at least {min}"
                    )));
                }
            }
            (Some(PlacementSection::Explicit { positions }), _) => {
                let p = positions.planar();
                if p.is_empty() {
                    return Err(CliError::Validation("placement.positions: must not be empty".into()));
                }
                if p.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(CliError::Validation("placement.positions: must be finite".into()));
                }
            }
            (None, _) => {}
        }
        Ok(())
    }

    pub fn system(&self) -> Result<WptSystem, CliError> {
        let cfg = SystemConfig {
            angular_frequency: self.system.angular_frequency,
            sum_power_budget: self.system.sum_power_budget,
            receiver_height: self.system.receiver_height,
            load_resistance: self.system.load_resistance,
            tx_coil: self.tx_coil.to_spec(),
            rx_coil: self.rx_coil.to_spec(),
        };
        for (section, coil) in [("tx_coil", &cfg.tx_coil), ("rx_coil", &cfg.rx_coil)] {
            coil.validate().map_err(|e| in_section(section, e))?;
        }
        WptSystem::new(cfg).map_err(|e| in_section("system", e))
    }

    fn region_for(&self, r: &RegionSection) -> Region {
        let region = match *r {
            RegionSection::Line { half_length } => Region::line(half_length),
            RegionSection::Disk { radius } => Region::disk(radius),
        };
        region.with_sampling(self.sampling)
    }

    pub fn region(&self) -> Result<Region, CliError> {
        self.region
            .as_ref()
            .map(|r| self.region_for(r))
            .ok_or_else(|| CliError::Validation("region: missing [region] section".into()))
    }

    pub fn placement(&self) -> Result<&PlacementSection, CliError> {
        self.placement
            .as_ref()
            .ok_or_else(|| CliError::Validation("placement: missing [placement] section".into()))
    }
}

/// Half-length of a line region, `None` for a disk.
pub fn line_half_length(region: &Region) -> Option<f64> {
    match region.kind {
        RegionKind::Line { half_length } => Some(half_length),
        RegionKind::Disk { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_system() {
        let cfg: ScenarioConfig = toml::from_str("").unwrap();
        let s = cfg.system().unwrap();
        assert!((s.r_tx() - 67.2).abs() < 1e-9);
        assert!((s.r_rx - 116.8).abs() < 1e-9);
    }

    #[test]
    fn millimetres_are_converted() {
        let cfg: ScenarioConfig = toml::from_str(
            "[tx_coil]\ncoil_radius_mm = 250\nturns = 400\nwire_radius_mm = 0.1\nresistivity = 1.68e-8\n",
        )
        .unwrap();
        assert!((cfg.system().unwrap().config.tx_coil.coil_radius - 0.25).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_field() {
        let cfg: ScenarioConfig = toml::from_str("[system]\nangular_frequency = 0.0\n").unwrap();
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("system.angular_frequency"), "{msg}");

        let cfg: ScenarioConfig = toml::from_str("[solver]\nrpt_max = 0\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("solver.rpt_max"));

        let err = toml::from_str::<ScenarioConfig>("[system]\nfrequency = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("frequency"));
    }

    #[test]
    fn positions_accept_scalars_or_pairs() {
        let cfg: ScenarioConfig =
            toml::from_str("[placement]\nkind = \"explicit\"\npositions = [-0.5, 0.5]\n").unwrap();
        let PlacementSection::Explicit { positions } = cfg.placement().unwrap() else { panic!() };
        assert_eq!(positions.planar(), vec![[-0.5, 0.0], [0.5, 0.0]]);

        let cfg: ScenarioConfig =
            toml::from_str("[placement]\nkind = \"explicit\"\npositions = [[0.1, 0.2]]\n").unwrap();
        let PlacementSection::Explicit { positions } = cfg.placement().unwrap() else { panic!() };
        assert_eq!(positions.planar(), vec![[0.1, 0.2]]);
    }

    #[test]
    fn uniform_on_a_disk_is_rejected() {
        let cfg: ScenarioConfig = toml::from_str(
            "[region]\nkind = \"disk\"\nradius = 0.3\n[placement]\nkind = \"uniform\"\ntransmitters = 5\n",
        )
        .unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Validation(_))));
    }
}
