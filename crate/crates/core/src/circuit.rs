//! Phasor-domain circuit relations for N series-resonant transmitters
//! coupled to one receiver.
//!
//! At resonance the compensators cancel every self-reactance, so with the
//! transmitter currents `i_n` as free variables Kirchhoff's laws give the
//! receiver current and the source voltages explicitly:
//!
//! ```text
//! r_rx i_0 - j w sum_n h_n0 i_n = 0
//! v_n = r_tx i_n - j w h_n0 i_0 + j w sum_{k != n} h_nk i_k
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coil::{CoilSpec, WptSystem};
use crate::error::{Error, Result};
use crate::magnetics::{mutual_exact, CoilPose};

/// Transmitter currents split into real (`re`, ī) and imaginary (`im`, î) parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentAllocation {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CurrentAllocation {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::Dimension {
                expected: re.len(),
                got: im.len(),
            });
        }
        if re.iter().chain(&im).any(|v| !v.is_finite()) {
            return Err(Error::invalid("currents", "must be finite"));
        }
        Ok(CurrentAllocation { re, im })
    }

    /// Real currents with all imaginary parts zero.
    pub fn real(re: Vec<f64>) -> Result<Self> {
        let im = vec![0.0; re.len()];
        Self::new(re, im)
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn phasors(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    /// The same allocation with real and imaginary parts exchanged.
    pub fn swapped(&self) -> Self {
        CurrentAllocation {
            re: self.im.clone(),
            im: self.re.clone(),
        }
    }
}

/// Every electrical quantity of the coupled circuit for one allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitSolution {
    pub receiver_current: Complex64,
    pub source_voltages: Vec<Complex64>,
    pub per_tx_power: Vec<f64>,
    pub load_power: f64,
    pub sum_power: f64,
}

fn check_len(alloc: &CurrentAllocation, h: &[f64]) -> Result<()> {
    if alloc.len() != h.len() {
        return Err(Error::Dimension {
            expected: h.len(),
            got: alloc.len(),
        });
    }
    if h.is_empty() {
        return Err(Error::invalid("h", "need at least one transmitter"));
    }
    Ok(())
}

/// Checks that `h_cross` is N×N, symmetric, finite, with a zero diagonal.
fn check_cross(h_cross: &[Vec<f64>], n: usize) -> Result<()> {
    if h_cross.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: h_cross.len(),
        });
    }
    for (i, row) in h_cross.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: row.len(),
            });
        }
        if row[i] != 0.0 {
            return Err(Error::invalid("h_cross", format!("diagonal entry {i} must be zero")));
        }
        for (k, &v) in row.iter().enumerate() {
            let mirror = h_cross[k][i];
            if !v.is_finite() || (v - mirror).abs() > 1e-12 * v.abs().max(mirror.abs()) {
                return Err(Error::invalid("h_cross", format!("entries ({i},{k}) and ({k},{i}) differ")));
            }
        }
    }
    Ok(())
}

/// `(sum h ī, sum h î)`
fn projections(alloc: &CurrentAllocation, h: &[f64]) -> (f64, f64) {
    let re = h.iter().zip(&alloc.re).map(|(h, i)| h * i).sum();
    let im = h.iter().zip(&alloc.im).map(|(h, i)| h * i).sum();
    (re, im)
}

/// `i_0 = j w sum_n h_n0 i_n / r_rx`
pub fn receiver_current(alloc: &CurrentAllocation, h: &[f64], r_rx: f64, w: f64) -> Result<Complex64> {
    check_len(alloc, h)?;
    let (re, im) = projections(alloc, h);
    Ok(Complex64::new(0.0, w / r_rx) * Complex64::new(re, im))
}

/// Power dissipated in the load, `(w^2 r_load / r_rx^2)((sum h ī)^2 + (sum h î)^2)`.
pub fn load_power(alloc: &CurrentAllocation, h: &[f64], r_rx: f64, r_load: f64, w: f64) -> Result<f64> {
    check_len(alloc, h)?;
    let (re, im) = projections(alloc, h);
    Ok(w * w * r_load / (r_rx * r_rx) * (re * re + im * im))
}

/// Power drawn from each transmitter's source.
///
/// The transmitter-transmitter term only involves products `î_n ī_k`, so it
/// vanishes for real allocations whatever `h_cross` is.
pub fn per_transmitter_power(
    alloc: &CurrentAllocation,
    h: &[f64],
    h_cross: &[Vec<f64>],
    r_tx: f64,
    r_rx: f64,
    w: f64,
) -> Result<Vec<f64>> {
    check_len(alloc, h)?;
    check_cross(h_cross, h.len())?;
    let g = w * w / r_rx;
    let (s_re, s_im) = projections(alloc, h);
    let (re, im) = (&alloc.re, &alloc.im);
    Ok((0..h.len())
        .map(|n| {
            // sum over k != n of h_k0 (ī_n ī_k + î_n î_k)
            let others = re[n] * (s_re - h[n] * re[n]) + im[n] * (s_im - h[n] * im[n]);
            let cross: f64 = (0..h.len())
                .filter(|&k| k != n)
                .map(|k| h_cross[n][k] * (im[n] * re[k] - re[n] * im[k]))
                .sum();
            (r_tx + g * h[n] * h[n]) * (re[n] * re[n] + im[n] * im[n]) + g * h[n] * others + w * cross
        })
        .collect())
}

/// `r_tx sum |i_n|^2 + (w^2 / r_rx)((sum h ī)^2 + (sum h î)^2)`
pub fn sum_power(alloc: &CurrentAllocation, h: &[f64], r_tx: f64, r_rx: f64, w: f64) -> Result<f64> {
    check_len(alloc, h)?;
    let (s_re, s_im) = projections(alloc, h);
    let ohmic: f64 = alloc.re.iter().chain(&alloc.im).map(|i| i * i).sum();
    Ok(r_tx * ohmic + w * w / r_rx * (s_re * s_re + s_im * s_im))
}

/// Source voltages needed to drive the allocation given receiver current `i0`.
pub fn source_voltages(
    alloc: &CurrentAllocation,
    h: &[f64],
    h_cross: &[Vec<f64>],
    i0: Complex64,
    r_tx: f64,
    w: f64,
) -> Result<Vec<Complex64>> {
    check_len(alloc, h)?;
    check_cross(h_cross, h.len())?;
    let i = alloc.phasors();
    let jw = Complex64::new(0.0, w);
    Ok((0..h.len())
        .map(|n| {
            let coupled: Complex64 = (0..h.len())
                .filter(|&k| k != n)
                .map(|k| h_cross[n][k] * i[k])
                .sum();
            r_tx * i[n] - jw * h[n] * i0 + jw * coupled
        })
        .collect())
}

/// Solves the whole circuit. Pass `None` for `h_cross` to treat the
/// transmitters as mutually uncoupled.
pub fn solve(
    alloc: &CurrentAllocation,
    h: &[f64],
    h_cross: Option<&[Vec<f64>]>,
    system: &WptSystem,
) -> Result<CircuitSolution> {
    let zeros;
    let h_cross = match h_cross {
        Some(m) => m,
        None => {
            zeros = vec![vec![0.0; h.len()]; h.len()];
            &zeros
        }
    };
    let (w, r_tx, r_rx) = (system.w(), system.r_tx(), system.r_rx);
    let i0 = receiver_current(alloc, h, r_rx, w)?;
    Ok(CircuitSolution {
        receiver_current: i0,
        source_voltages: source_voltages(alloc, h, h_cross, i0, r_tx, w)?,
        per_tx_power: per_transmitter_power(alloc, h, h_cross, r_tx, r_rx, w)?,
        load_power: load_power(alloc, h, r_rx, system.r_load(), w)?,
        sum_power: sum_power(alloc, h, r_tx, r_rx, w)?,
    })
}

/// Exact transmitter-transmitter mutual inductances for coplanar `poses`.
pub fn cross_mutuals(poses: &[CoilPose], coil: &CoilSpec) -> Result<Vec<Vec<f64>>> {
    let n = poses.len();
    let mut m = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let v = mutual_exact(coil, &poses[a], coil, &poses[b])?;
            m[a][b] = v;
            m[b][a] = v;
        }
    }
    Ok(m)
}
