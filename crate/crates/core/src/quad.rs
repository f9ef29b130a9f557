//! Vector-valued adaptive Gauss-Kronrod (7/15) quadrature on finite
//! intervals and on the half line by cutoff doubling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};

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

/// Read-only configuration shared by every frequency integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Initial cutoff = cutoff_factor * (largest physical frequency scale).
    pub cutoff_factor: f64,
    /// Doubling stops once a new segment changes every component by less
    /// than this fraction of its running magnitude.
    pub tail_tol: f64,
    pub max_intervals: usize,
    pub max_doublings: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            cutoff_factor: 50.0,
            tail_tol: 1e-10,
            max_intervals: 20_000,
            max_doublings: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<const D: usize> {
    pub value: [f64; D],
    pub error: [f64; D],
    /// Integral of |f| per component, used as a cancellation-aware scale.
    pub abs_value: [f64; D],
    pub evaluations: usize,
}

struct Segment<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    error: [f64; D],
    abs_value: [f64; D],
    priority: f64,
}

impl<const D: usize> PartialEq for Segment<D> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<const D: usize> Eq for Segment<D> {}
impl<const D: usize> PartialOrd for Segment<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Segment<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn gk15<const D: usize, F: Fn(f64) -> [f64; D]>(f: &F, a: f64, b: f64) -> ([f64; D], [f64; D], [f64; D]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; D];
    let mut g = [0.0; D];
    let mut abs = [0.0; D];
    let fc = f(c);
    for d in 0..D {
        k[d] = WGK[7] * fc[d];
        g[d] = WG[3] * fc[d];
        abs[d] = WGK[7] * fc[d].abs();
    }
    for i in 0..7 {
        let x = h * XGK[i];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for d in 0..D {
            k[d] += WGK[i] * (f1[d] + f2[d]);
            abs[d] += WGK[i] * (f1[d].abs() + f2[d].abs());
            if i % 2 == 1 {
                g[d] += WG[i / 2] * (f1[d] + f2[d]);
            }
        }
    }
    let mut err = [0.0; D];
    for d in 0..D {
        k[d] *= h;
        abs[d] *= h.abs();
        err[d] = ((k[d] - g[d] * h).abs()).max(f64::EPSILON * abs[d] * 50.0);
    }
    (k, err, abs)
}

/// Maps per-component magnitudes to the magnitudes each component's error
/// is judged against. Lets a component that is small by cancellation borrow
/// the scale of its neighbours.
pub type Coupling<'a, const D: usize> = &'a dyn Fn(&[f64; D]) -> [f64; D];

fn magnitudes<const D: usize>(value: &[f64; D], abs_value: &[f64; D], couple: Option<Coupling<D>>) -> [f64; D] {
    let m: [f64; D] = std::array::from_fn(|d| value[d].abs().max(1e-3 * abs_value[d]));
    match couple {
        Some(c) => {
            let cm = c(&m);
            std::array::from_fn(|d| m[d].max(cm[d]))
        }
        None => m,
    }
}

/// Per-component error targets.
fn targets<const D: usize>(
    value: &[f64; D],
    abs_value: &[f64; D],
    rel: f64,
    floor: &[f64; D],
    couple: Option<Coupling<D>>,
) -> [f64; D] {
    let m = magnitudes(value, abs_value, couple);
    std::array::from_fn(|d| floor[d].max(rel * m[d]))
}

/// Globally adaptive integration over [a, b] split first at `breaks`.
/// Converged when every component's accumulated error is below
/// max(floor, rel |I|, 1e-3 rel integral |f|).
pub fn integrate<const D: usize, F: Fn(f64) -> [f64; D]>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel: f64,
    floor: [f64; D],
    max_intervals: usize,
) -> Result<QuadResult<D>> {
    integrate_coupled(f, a, b, breaks, rel, floor, None, max_intervals)
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_coupled<const D: usize, F: Fn(f64) -> [f64; D]>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel: f64,
    floor: [f64; D],
    couple: Option<Coupling<D>>,
    max_intervals: usize,
) -> Result<QuadResult<D>> {
    let mut pts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(b);

    let mut heap = BinaryHeap::new();
    let mut value = [0.0; D];
    let mut error = [0.0; D];
    let mut abs_value = [0.0; D];
    let mut evaluations = 0;
    for w in pts.windows(2) {
        let (v, e, s) = gk15(f, w[0], w[1]);
        evaluations += 15;
        for d in 0..D {
            value[d] += v[d];
            error[d] += e[d];
            abs_value[d] += s[d];
        }
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
            abs_value: s,
            priority: 0.0,
        });
    }

    let mut tgt = targets(&value, &abs_value, rel, &floor, couple);
    let rank = |s: &mut Segment<D>, tgt: &[f64; D]| {
        s.priority = (0..D).map(|d| s.error[d] / tgt[d]).fold(0.0, f64::max);
    };
    let mut segs: Vec<Segment<D>> = heap.drain().collect();
    for s in &mut segs {
        rank(s, &tgt);
    }
    heap.extend(segs);
    let mut splits = 0usize;

    loop {
        if (0..D).all(|d| error[d] <= tgt[d]) {
            return Ok(QuadResult {
                value,
                error,
                abs_value,
                evaluations,
            });
        }
        if heap.len() >= max_intervals {
            let d = (0..D)
                .max_by(|&i, &j| (error[i] / tgt[i]).total_cmp(&(error[j] / tgt[j])))
                .unwrap_or(0);
            return Err(Error::QuadratureFailure {
                error: error[d],
                target: tgt[d],
                intervals: heap.len(),
            });
        }
        let s = heap.pop().expect("non-empty segment heap");
        let m = 0.5 * (s.a + s.b);
        if !(m > s.a && m < s.b) {
            return Err(Error::QuadratureFailure {
                error: (0..D).map(|d| error[d]).fold(0.0, f64::max),
                target: (0..D).map(|d| tgt[d]).fold(f64::INFINITY, f64::min),
                intervals: heap.len() + 1,
            });
        }
        let (v1, e1, s1) = gk15(f, s.a, m);
        let (v2, e2, s2) = gk15(f, m, s.b);
        evaluations += 30;
        for d in 0..D {
            value[d] += v1[d] + v2[d] - s.value[d];
            error[d] += e1[d] + e2[d] - s.error[d];
            abs_value[d] += s1[d] + s2[d] - s.abs_value[d];
        }
        let mut left = Segment {
            a: s.a,
            b: m,
            value: v1,
            error: e1,
            abs_value: s1,
            priority: 0.0,
        };
        let mut right = Segment {
            a: m,
            b: s.b,
            value: v2,
            error: e2,
            abs_value: s2,
            priority: 0.0,
        };
        rank(&mut left, &tgt);
        rank(&mut right, &tgt);
        heap.push(left);
        heap.push(right);
        splits += 1;
        if splits.is_multiple_of(64) {
            // resum to shed rounding drift, then re-rank against fresh targets
            value = [0.0; D];
            error = [0.0; D];
            abs_value = [0.0; D];
            for s in heap.iter() {
                for d in 0..D {
                    value[d] += s.value[d];
                    error[d] += s.error[d];
                    abs_value[d] += s.abs_value[d];
                }
            }
            tgt = targets(&value, &abs_value, rel, &floor, couple);
            let mut segs: Vec<Segment<D>> = heap.drain().collect();
            for s in &mut segs {
                rank(s, &tgt);
            }
            heap.extend(segs);
        }
    }
}

/// Integral over [0, inf): adaptive on [0, cutoff], then segments
/// [W, 2W], [2W, 4W], ... until a segment is negligible for every component.
pub fn integrate_half_line<const D: usize, F: Fn(f64) -> [f64; D]>(
    f: &F,
    cutoff: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult<D>> {
    integrate_half_line_coupled(f, cutoff, breaks, spec, [0.0; D], None)
}

/// As [`integrate_half_line`], with an absolute error floor per component
/// (for remainders whose size is judged against a larger total) and an
/// optional coupling of the component scales.
pub fn integrate_half_line_coupled<const D: usize, F: Fn(f64) -> [f64; D]>(
    f: &F,
    cutoff: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
    floor: [f64; D],
    couple: Option<Coupling<D>>,
) -> Result<QuadResult<D>> {
    let mut total = integrate_coupled(f, 0.0, cutoff, breaks, spec.rel_tol, floor, couple, spec.max_intervals)?;
    let mut w = cutoff;
    for _ in 0..spec.max_doublings {
        let m = magnitudes(&total.value, &total.abs_value, couple);
        let scale: [f64; D] = std::array::from_fn(|d| m[d].max(floor[d] / spec.rel_tol));
        let seg_floor: [f64; D] = std::array::from_fn(|d| spec.rel_tol * scale[d]);
        let seg = integrate(f, w, 2.0 * w, &[], spec.rel_tol, seg_floor, spec.max_intervals)?;
        let mut negligible = true;
        for d in 0..D {
            total.value[d] += seg.value[d];
            total.error[d] += seg.error[d];
            total.abs_value[d] += seg.abs_value[d];
            if seg.abs_value[d] > spec.tail_tol * scale[d] && seg.value[d].abs() > spec.tail_tol * scale[d] {
                negligible = false;
            }
        }
        total.evaluations += seg.evaluations;
        w *= 2.0;
        if negligible {
            return Ok(total);
        }
    }
    Err(Error::QuadratureFailure {
        error: f64::NAN,
        target: spec.tail_tol,
        intervals: spec.max_doublings,
    })
}
