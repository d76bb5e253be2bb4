#![allow(clippy::excessive_precision)]

//! Globally adaptive 7/15-point Gauss–Kronrod quadrature and Wynn's epsilon
//! algorithm for accelerating slowly converging panel sums.

/// Positive Kronrod abscissae on [-1, 1] for the 15-point rule (odd indices are Gauss nodes).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Integral of |f| over the interval, used to scale tolerances.
    pub magnitude: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut pairs = [(0.0, 0.0); 7];
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut magnitude = fc.abs() * WGK[7];
    for (j, pair) in pairs.iter_mut().enumerate() {
        let dx = half * XGK[j];
        *pair = (f(center - dx), f(center + dx));
        kronrod += WGK[j] * (pair.0 + pair.1);
        magnitude += WGK[j] * (pair.0.abs() + pair.1.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (pair.0 + pair.1);
        }
    }
    let mean = 0.5 * kronrod;
    let mut spread = WGK[7] * (fc - mean).abs();
    for (j, pair) in pairs.iter().enumerate() {
        spread += WGK[j] * ((pair.0 - mean).abs() + (pair.1 - mean).abs());
    }
    let width = half.abs();
    let (magnitude, spread) = (magnitude * width, spread * width);
    let raw = ((kronrod - gauss) * half).abs();
    // QUADPACK's rescaling of the Gauss/Kronrod difference
    let mut error = raw;
    if spread > 0.0 && raw > 0.0 {
        error = spread * (200.0 * raw / spread).powf(1.5).min(1.0);
    }
    Estimate {
        value: kronrod * half,
        error: error.max(50.0 * f64::EPSILON * magnitude),
        magnitude,
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst subinterval until the
/// summed error estimate drops below `max(abs_tol, rel_tol |I|)` or
/// `max_intervals` is reached.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Estimate {
    let first = kronrod15(&f, a, b);
    let mut intervals = vec![(a, b, first)];
    let mut value = first.value;
    let mut error = first.error;
    let mut magnitude = first.magnitude;
    while error > abs_tol.max(rel_tol * value.abs()) && intervals.len() < max_intervals {
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("non-empty");
        let (lo, hi, est) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            intervals.push((lo, hi, est));
            break;
        }
        let left = kronrod15(&f, lo, mid);
        let right = kronrod15(&f, mid, hi);
        value += left.value + right.value - est.value;
        error += left.error + right.error - est.error;
        magnitude += left.magnitude + right.magnitude - est.magnitude;
        intervals.push((lo, mid, left));
        intervals.push((mid, hi, right));
    }
    // re-sum to shed accumulated rounding from the incremental updates
    let value: f64 = intervals.iter().map(|(_, _, e)| e.value).sum();
    let error: f64 = intervals.iter().map(|(_, _, e)| e.error).sum();
    Estimate {
        value,
        error,
        magnitude: magnitude.max(0.0),
    }
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
/// the estimate from the highest even column.
pub fn wynn_epsilon(partial_sums: &[f64]) -> f64 {
    let n = partial_sums.len();
    if n < 3 {
        return *partial_sums.last().unwrap_or(&0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur = partial_sums.to_vec();
    let mut best = partial_sums[n - 1];
    for k in 1..n {
        let len = n - k;
        let mut next = Vec::with_capacity(len);
        for i in 0..len {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 || !diff.is_finite() {
                return best;
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        if k % 2 == 0 {
            let candidate = next[len - 1];
            if !candidate.is_finite() {
                return best;
            }
            best = candidate;
        }
        prev = cur;
        cur = next;
    }
    best
}
