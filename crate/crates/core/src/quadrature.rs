//! Globally adaptive Gauss–Kronrod (7/15) quadrature with user breakpoints.
//!
//! Infinite end points are mapped onto [0, 1) with x = c ± t/(1 − t). The
//! panel with the largest error estimate is bisected until the summed error
//! meets `max(atol, rtol·|I|)`. Panels are summed in order of their left end
//! point so that results are reproducible bit for bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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

/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Maximum number of bisections of any initial panel.
    pub max_depth: usize,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-14,
            max_depth: 30,
            max_panels: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: usize,
    /// Index of the original segment, for the integrand transform.
    segment: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.segment.cmp(&self.segment))
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Finite,
    /// x = c − t/(1 − t), t ∈ [0, 1)
    Lower(f64),
    /// x = c + t/(1 − t), t ∈ [0, 1)
    Upper(f64),
}

impl Segment {
    fn eval<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        match *self {
            Segment::Finite => f(t),
            Segment::Lower(c) => {
                let s = 1.0 - t;
                f(c - t / s) / (s * s)
            }
            Segment::Upper(c) => {
                let s = 1.0 - t;
                f(c + t / s) / (s * s)
            }
        }
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, seg: Segment, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = seg.eval(f, center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = seg.eval(f, center - dx);
        let f2 = seg.eval(f, center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// ∫_a^b f(x) dx; `a` may be −∞ and `b` may be +∞.
///
/// Breakpoints strictly inside (a, b) start new panels, which is how callers
/// point the integrator at narrow peaks and step edges.
pub fn integrate<F>(f: F, a: f64, b: f64, breakpoints: &[f64], opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    if a.is_nan() || b.is_nan() {
        return Err(Error::Numerical("NaN integration limit".into()));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if a > b {
        let r = integrate(f, b, a, breakpoints, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }

    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite() && *x > a && *x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if a.is_infinite() && b.is_infinite() && cuts.is_empty() {
        cuts.push(0.0);
    }
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts);
    nodes.push(b);

    let mut segments = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (seg, ta, tb) = if lo.is_infinite() {
            (Segment::Lower(hi), 0.0, 1.0)
        } else if hi.is_infinite() {
            (Segment::Upper(lo), 0.0, 1.0)
        } else {
            (Segment::Finite, lo, hi)
        };
        let id = segments.len();
        segments.push(seg);
        let (value, error) = kronrod(&f, seg, ta, tb);
        evaluations += 15;
        heap.push(Panel { a: ta, b: tb, value, error, depth: 0, segment: id });
    }

    let mut frozen: Vec<Panel> = Vec::new();
    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut err: f64 = heap.iter().map(|p| p.error).sum();
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps % 256 == 0 {
            // resync the running sums
            total = heap.iter().chain(frozen.iter()).map(|p| p.value).sum();
            err = heap.iter().chain(frozen.iter()).map(|p| p.error).sum();
        }
        let tol = opts.atol.max(opts.rtol * total.abs());
        if err <= tol {
            break;
        }
        let Some(worst) = heap.pop() else {
            let bad = frozen.iter().max().copied().expect("at least one panel");
            return Err(Error::Quadrature { a: bad.a, b: bad.b, depth: bad.depth, error: err });
        };
        if worst.depth >= opts.max_depth || heap.len() + frozen.len() >= opts.max_panels {
            frozen.push(worst);
            continue;
        }
        let seg = segments[worst.segment];
        let mid = 0.5 * (worst.a + worst.b);
        total -= worst.value;
        err -= worst.error;
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = kronrod(&f, seg, lo, hi);
            evaluations += 15;
            total += value;
            err += error;
            heap.push(Panel { a: lo, b: hi, value, error, depth: worst.depth + 1, segment: worst.segment });
        }
    }

    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|x, y| x.segment.cmp(&y.segment).then(x.a.total_cmp(&y.a)));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    Ok(QuadResult { value, error, evaluations })
}
