//! Max-min transmitter placement over a target disk.
//!
//! Candidate layouts are rotationally symmetric: transmitters on concentric
//! rings, equally spaced on each ring, plus any remainder stacked at the
//! origin. A layout is rotationally symmetric exactly when its ring sizes
//! share a divisor `u >= 2`, and every such layout is a refinement of one
//! with all rings of a prime size `u`, so the catalog for `N` transmitters
//! has one template per prime `u <= N`.
//!
//! Each template is optimized like the line case: bisection on `tau`, with a
//! sign-gradient feasibility search over ring radii and rotations. The
//! constraint only needs checking on a wedge of angle `2 pi / u`.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::Strategy;
use crate::coil::WptSystem;
use crate::error::{ensure_positive, Error, Result};
use crate::magnetics::CouplingModel;
use crate::metrics::{self, Region, RegionMetrics};
use crate::placement_1d::{dipole_sq, dipole_sq_slope, g_of_tau, BisectionStep, SearchParams};
use crate::search::{golden_min, substream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub count: usize,
    pub radius: f64,
    /// Angle of the first transmitter on the ring from the x axis (rad).
    pub rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingStructure {
    pub rings: Vec<Ring>,
    /// Transmitters stacked at the origin.
    pub origin_count: usize,
}

impl RingStructure {
    pub fn total(&self) -> usize {
        self.rings.iter().map(|r| r.count).sum::<usize>() + self.origin_count
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0, 0.0]; self.origin_count];
        for ring in &self.rings {
            for k in 0..ring.count {
                let a = ring.rotation + 2.0 * PI * k as f64 / ring.count as f64;
                out.push([ring.radius * a.cos(), ring.radius * a.sin()]);
            }
        }
        out
    }

    /// The same layout turned by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        RingStructure {
            rings: self
                .rings
                .iter()
                .map(|r| Ring {
                    rotation: r.rotation + angle,
                    ..*r
                })
                .collect(),
            origin_count: self.origin_count,
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// True iff all ring sizes share a divisor of at least 2 (vacuously true
/// with no rings).
pub fn is_rotationally_symmetric(s: &RingStructure) -> bool {
    s.rings.is_empty() || s.rings.iter().fold(0, |g, r| gcd(g, r.count)) >= 2
}

/// Primes up to `n`, ascending.
pub fn primes_up_to(n: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        out.push(p);
        let mut k = p * p;
        while k <= n {
            composite[k] = true;
            k += p;
        }
    }
    out
}

/// Ring layout with sizes fixed and radii/rotations still free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureTemplate {
    /// Transmitters per ring; also the order of rotational symmetry. 1 only
    /// for the single-transmitter layout.
    pub order: usize,
    pub ring_count: usize,
    pub origin_count: usize,
}

impl StructureTemplate {
    pub fn total(&self) -> usize {
        self.order * self.ring_count + self.origin_count
    }

    /// Angle of the sector that sees every distinct receiver position.
    pub fn wedge_angle(&self) -> f64 {
        2.0 * PI / self.order as f64
    }

    pub fn instantiate(&self, radii: &[f64], rotations: &[f64]) -> Result<RingStructure> {
        if radii.len() != self.ring_count || rotations.len() != self.ring_count {
            return Err(Error::Dimension {
                expected: self.ring_count,
                got: radii.len().min(rotations.len()),
            });
        }
        Ok(RingStructure {
            rings: radii
                .iter()
                .zip(rotations)
                .map(|(&radius, &rotation)| Ring {
                    count: self.order,
                    radius,
                    rotation,
                })
                .collect(),
            origin_count: self.origin_count,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureCatalog {
    pub transmitters: usize,
    pub templates: Vec<StructureTemplate>,
}

pub fn enumerate_structures(n: usize) -> Result<StructureCatalog> {
    if n == 0 {
        return Err(Error::invalid("transmitters", "must be at least 1"));
    }
    let templates = if n == 1 {
        vec![StructureTemplate {
            order: 1,
            ring_count: 0,
            origin_count: 1,
        }]
    } else {
        primes_up_to(n)
            .into_iter()
            .map(|u| StructureTemplate {
                order: u,
                ring_count: n / u,
                origin_count: n % u,
            })
            .collect()
    };
    Ok(StructureCatalog {
        transmitters: n,
        templates,
    })
}

/// Sampling of the wedge used inside the feasibility search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WedgeSampling {
    pub radial_points: usize,
    pub angular_points: usize,
    /// Grid minima polished by coordinate golden search.
    pub refined_candidates: usize,
}

impl Default for WedgeSampling {
    fn default() -> Self {
        WedgeSampling {
            radial_points: 61,
            angular_points: 41,
            refined_candidates: 3,
        }
    }
}

impl WedgeSampling {
    /// The dense grid used for post-hoc checks.
    pub fn fine() -> Self {
        WedgeSampling {
            radial_points: 201,
            angular_points: 121,
            refined_candidates: 5,
        }
    }
}

/// Decision variables of one template: ring radii, then rotations of rings 2..Q.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    radii: Vec<f64>,
    rotations: Vec<f64>,
}

/// Layouts remembered per restart when looking for a cycle.
const CYCLE_MEMORY: usize = 8;

impl Layout {
    fn near(&self, other: &Layout, tol_r: f64, tol_a: f64) -> bool {
        self.radii.iter().zip(&other.radii).all(|(a, b)| (a - b).abs() <= tol_r)
            && self.rotations.iter().zip(&other.rotations).all(|(a, b)| (a - b).abs() <= tol_a)
    }

    fn positions(&self, t: &StructureTemplate) -> Vec<[f64; 2]> {
        let mut rot = vec![0.0];
        rot.extend(&self.rotations);
        rot.truncate(self.radii.len());
        t.instantiate(&self.radii, &rot).expect("layout matches template").positions()
    }
}

/// `sum_n h_n0^2 / beta^2` in the dipole model at receiver `(x, y)`.
fn kernel_sum(txs: &[[f64; 2]], x: f64, y: f64, z0: f64) -> f64 {
    txs.iter().map(|t| dipole_sq((t[0] - x).hypot(t[1] - y), z0)).sum()
}

/// Minimum of the kernel sum over the wedge `r <= rho`, `0 <= theta <= wedge`,
/// returned as `(x, y, value)`.
fn wedge_min(txs: &[[f64; 2]], rho: f64, wedge: f64, z0: f64, sampling: &WedgeSampling) -> (f64, f64, f64) {
    let (nr, na) = (sampling.radial_points.max(2), sampling.angular_points.max(2));
    let dr = rho / (nr - 1) as f64;
    let da = wedge / (na - 1) as f64;
    let at = |r: f64, a: f64| kernel_sum(txs, r * a.cos(), r * a.sin(), z0);
    let mut grid = Vec::with_capacity(1 + (nr - 1) * na);
    grid.push((0.0, 0.0, at(0.0, 0.0)));
    for i in 1..nr {
        let r = dr * i as f64;
        for j in 0..na {
            let a = da * j as f64;
            grid.push((r, a, at(r, a)));
        }
    }
    grid.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut best = grid[0];
    for &(mut r, mut a, mut v) in grid.iter().take(sampling.refined_candidates.max(1)) {
        for _ in 0..2 {
            let (rn, vn) = golden_min(|r| at(r, a), (r - dr).max(0.0), (r + dr).min(rho), 1e-7 * rho);
            if vn < v {
                r = rn;
                v = vn;
            }
            if r > 0.0 {
                let (an, vn) = golden_min(|t| at(r, t), a - da, a + da, 1e-7);
                if vn < v {
                    a = an;
                    v = vn;
                }
            }
        }
        if v < best.2 {
            best = (r, a, v);
        }
    }
    (best.0 * best.1.cos(), best.0 * best.1.sin(), best.2)
}

/// Gradient of the kernel sum at a fixed receiver point with respect to the
/// ring radii and the rotations of rings 2..Q.
fn layout_gradient(layout: &Layout, t: &StructureTemplate, x: f64, y: f64, z0: f64) -> (Vec<f64>, Vec<f64>) {
    let (r0, a0) = (x.hypot(y), y.atan2(x));
    let mut d_radii = vec![0.0; layout.radii.len()];
    let mut d_rot = vec![0.0; layout.rotations.len()];
    for (q, &rq) in layout.radii.iter().enumerate() {
        let phi = if q == 0 { 0.0 } else { layout.rotations[q - 1] };
        for k in 0..t.order {
            let theta = phi + 2.0 * PI * k as f64 / t.order as f64;
            let (px, py) = (rq * theta.cos(), rq * theta.sin());
            let s = (px - x).hypot(py - y);
            if s == 0.0 {
                continue;
            }
            let slope = dipole_sq_slope(s, z0);
            d_radii[q] += slope * (rq - r0 * (theta - a0).cos()) / s;
            if q > 0 {
                d_rot[q - 1] += slope * rq * r0 * (theta - a0).sin() / s;
            }
        }
    }
    (d_radii, d_rot)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureResult {
    pub template: StructureTemplate,
    pub structure: RingStructure,
    /// Largest `tau` the dipole-model search certified feasible (W).
    pub tau_star: f64,
    pub tau_upper: f64,
    /// Exact-model metrics over the full disk under optimal beamforming.
    pub certified: RegionMetrics,
    pub certified_min: f64,
    pub trace: Vec<BisectionStep>,
    pub gradient_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement2DReport {
    pub transmitters: usize,
    pub radius: f64,
    pub seed: u64,
    pub results: Vec<StructureResult>,
    /// Index into `results` of the template with the largest `tau_star`.
    pub selected: usize,
}

impl Placement2DReport {
    pub fn best(&self) -> &StructureResult {
        &self.results[self.selected]
    }
}

struct Problem<'a> {
    template: StructureTemplate,
    rho: f64,
    z0: f64,
    params: &'a SearchParams,
    sampling: WedgeSampling,
}

impl Problem<'_> {
    fn rotation_range(&self) -> f64 {
        self.template.wedge_angle()
    }

    fn start(&self) -> Layout {
        let q = self.template.ring_count;
        Layout {
            radii: (1..=q).map(|k| self.rho * (2 * k - 1) as f64 / (2 * q) as f64).collect(),
            rotations: (1..q).map(|k| self.rotation_range() * k as f64 / q as f64).collect(),
        }
    }

    fn restart(&self, seed: u64, stream: u64, rpt: u64) -> Layout {
        let mut layout = self.start();
        if rpt == 0 {
            return layout;
        }
        let q = self.template.ring_count as f64;
        let mut rng = substream(seed, stream, rpt);
        let (dr, da) = (self.rho / (2.0 * q), self.rotation_range() / (2.0 * q));
        for r in layout.radii.iter_mut() {
            *r = (*r + rng.gen_range(-dr..=dr)).clamp(0.0, self.rho);
        }
        for a in layout.rotations.iter_mut() {
            *a = (*a + rng.gen_range(-da..=da)).clamp(0.0, self.rotation_range());
        }
        layout
    }

    fn worst(&self, layout: &Layout) -> (f64, f64, f64) {
        let txs = layout.positions(&self.template);
        wedge_min(&txs, self.rho, self.template.wedge_angle(), self.z0, &self.sampling)
    }

    /// Returns a feasible layout if found, and the number of checks made by
    /// the restarts up to and including the successful one. Restarts run in
    /// parallel, but the lowest-index success wins, so results do not depend
    /// on scheduling.
    fn feasible(&self, threshold: f64, seed: u64, stream: u64) -> (Option<Layout>, usize) {
        if threshold.is_infinite() {
            return (None, 0);
        }
        let free = self.template.ring_count > 0;
        let rpt_max = if free { self.params.rpt_max } else { 1 };
        let steps: Vec<AtomicUsize> = (0..rpt_max).map(|_| AtomicUsize::new(0)).collect();
        let found = (0..rpt_max).into_par_iter().find_map_first(|rpt| {
            let (layout, n) = self.descend(threshold, self.restart(seed, stream, rpt as u64), free);
            steps[rpt].store(n, Ordering::Relaxed);
            layout.map(|l| (rpt, l))
        });
        let last = found.as_ref().map_or(rpt_max, |(rpt, _)| rpt + 1);
        let total = steps[..last].iter().map(|s| s.load(Ordering::Relaxed)).sum();
        (found.map(|(_, l)| l), total)
    }

    /// Sign-gradient ascent from one starting layout.
    fn descend(&self, threshold: f64, mut layout: Layout, free: bool) -> (Option<Layout>, usize) {
        let itr_max = if free { self.params.itr_max } else { 1 };
        let (dr, da) = (self.params.delta * self.rho, self.params.delta * self.rotation_range());
        let top = self.rotation_range();
        let mut recent: Vec<Layout> = Vec::new();
        for step in 1..=itr_max {
            let (x, y, v) = self.worst(&layout);
            if v >= threshold {
                return (Some(layout), step);
            }
            // the step map is deterministic, so a revisit means a cycle
            if recent.iter().any(|old| old.near(&layout, 0.25 * dr, 0.25 * da)) {
                return (None, step);
            }
            if recent.len() == CYCLE_MEMORY {
                recent.remove(0);
            }
            recent.push(layout.clone());
            let (g_r, g_a) = layout_gradient(&layout, &self.template, x, y, self.z0);
            for (r, g) in layout.radii.iter_mut().zip(g_r) {
                *r = if g < 0.0 { (*r - dr).max(0.0) } else { (*r + dr).min(self.rho) };
            }
            for (a, g) in layout.rotations.iter_mut().zip(g_a) {
                *a = if g < 0.0 { (*a - da).max(0.0) } else { (*a + da).min(top) };
            }
        }
        (None, itr_max)
    }
}

/// Bisection over `tau` for one template, then an exact-model evaluation of
/// the winning layout over the whole disk.
pub fn optimize_structure(
    template: &StructureTemplate,
    system: &WptSystem,
    rho: f64,
    params: &SearchParams,
    seed: u64,
) -> Result<StructureResult> {
    let model = CouplingModel::exact(system, 2.0 * rho + 0.01)?;
    optimize_structure_with_model(template, system, rho, params, seed, &model, &Region::disk(rho))
}

#[allow(clippy::too_many_arguments)]
pub fn optimize_structure_with_model(
    template: &StructureTemplate,
    system: &WptSystem,
    rho: f64,
    params: &SearchParams,
    seed: u64,
    model: &CouplingModel,
    certify: &Region,
) -> Result<StructureResult> {
    ensure_positive("radius", rho)?;
    params.validate()?;
    let problem = Problem {
        template: *template,
        rho,
        z0: system.z0(),
        params,
        sampling: WedgeSampling::default(),
    };
    let (mut lo, mut hi) = (0.0, system.p_max());
    let mut best = problem.start();
    let mut trace = Vec::new();
    let mut gradient_steps = 0;
    while hi - lo > params.epsilon {
        let tau = 0.5 * (lo + hi);
        let (found, steps) = problem.feasible(g_of_tau(tau, system), seed, trace.len() as u64);
        gradient_steps += steps;
        trace.push(BisectionStep {
            tau,
            feasible: found.is_some(),
        });
        match found {
            Some(layout) => {
                lo = tau;
                best = layout;
            }
            None => hi = tau,
        }
    }
    let mut rotations = vec![0.0];
    rotations.extend(&best.rotations);
    rotations.truncate(best.radii.len());
    let structure = template.instantiate(&best.radii, &rotations)?;
    let certified = metrics::profile(&structure.positions(), certify, system, Strategy::Optimal, model)?.metrics()?;
    Ok(StructureResult {
        template: *template,
        structure,
        tau_star: lo,
        tau_upper: hi,
        certified_min: certified.p_min,
        certified,
        trace,
        gradient_steps,
    })
}

/// Optimizes every catalog template for `n` transmitters on a disk of radius
/// `rho` and selects the one with the largest `tau_star` (lowest index on ties).
pub fn optimize_placement_2d(
    n: usize,
    system: &WptSystem,
    rho: f64,
    params: &SearchParams,
    seed: u64,
) -> Result<Placement2DReport> {
    ensure_positive("radius", rho)?;
    let model = CouplingModel::exact(system, 2.0 * rho + 0.01)?;
    optimize_placement_2d_with_model(n, system, rho, params, seed, &model, &Region::disk(rho))
}

/// [`optimize_placement_2d`] with a caller-supplied certification model and region.
pub fn optimize_placement_2d_with_model(
    n: usize,
    system: &WptSystem,
    rho: f64,
    params: &SearchParams,
    seed: u64,
    model: &CouplingModel,
    certify: &Region,
) -> Result<Placement2DReport> {
    ensure_positive("radius", rho)?;
    let catalog = enumerate_structures(n)?;
    let results = catalog
        .templates
        .par_iter()
        .map(|t| optimize_structure_with_model(t, system, rho, params, seed, model, certify))
        .collect::<Result<Vec<_>>>()?;
    let mut selected = 0;
    for (i, r) in results.iter().enumerate() {
        if r.tau_star > results[selected].tau_star {
            selected = i;
        }
    }
    Ok(Placement2DReport {
        transmitters: n,
        radius: rho,
        seed,
        results,
        selected,
    })
}

/// Dipole-model minimum of the kernel sum, scaled to watts, over the
/// symmetry wedge of `structure` using the dense grid.
pub fn wedge_min_power(structure: &RingStructure, system: &WptSystem, rho: f64) -> f64 {
    let order = structure.rings.iter().fold(0, |g, r| gcd(g, r.count)).max(1);
    let (_, _, v) = wedge_min(
        &structure.positions(),
        rho,
        2.0 * PI / order as f64,
        system.z0(),
        &WedgeSampling::fine(),
    );
    system.optimal_load_power(v * system.beta * system.beta)
}
