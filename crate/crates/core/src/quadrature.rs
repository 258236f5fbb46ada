//! Adaptive Gauss–Kronrod (G10/K21) quadrature on finite and half-infinite
//! intervals, plus nested integration over axis-aligned boxes.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_221_119,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Integral {
    fn zero() -> Self {
        Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` by global adaptive bisection of the
/// interval with the largest error estimate.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Integral {
    if a == b {
        return Integral::zero();
    }
    if b < a {
        let r = integrate(f, b, a, opts);
        return Integral {
            value: -r.value,
            ..r
        };
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = kronrod21(&mut f, a, b);
    let mut evaluations = 21;
    let mut total = v;
    let mut total_err = e;
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut converged = false;
    while heap.len() < opts.max_intervals.max(1) {
        if !total.is_finite() || !total_err.is_finite() {
            break;
        }
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            converged = true;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod21(&mut f, worst.a, mid);
        let (v2, e2) = kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    if !converged {
        converged =
            value.is_finite() && abs_error <= opts.abs_tol.max(opts.rel_tol * value.abs());
    }
    Integral {
        value,
        abs_error,
        evaluations,
        converged,
    }
}

/// Integrates `f` over `[a, ∞)` with the map `x = a + scale·s/(1−s)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    opts: QuadOptions,
) -> Integral {
    integrate(
        |s| {
            let one_minus = 1.0 - s;
            let x = a + scale * s / one_minus;
            let jac = scale / (one_minus * one_minus);
            if !x.is_finite() || !jac.is_finite() {
                return 0.0;
            }
            let fx = f(x);
            if fx == 0.0 {
                0.0
            } else {
                fx * jac
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Integrates `f` over `[a, b]` where `b` may be `+∞`.
pub fn integrate_interval<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Integral {
    if b == f64::INFINITY {
        integrate_to_infinity(f, a, a.abs().max(1.0), opts)
    } else {
        integrate(f, a, b, opts)
    }
}

/// Iterated adaptive integration of `f` over the box `∏[lower_i, upper_i]`
/// (upper bounds may be `+∞`). Inner integrals use a tightened tolerance.
pub fn integrate_box<F: Fn(&[f64]) -> f64>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    opts: QuadOptions,
) -> Integral {
    assert_eq!(lower.len(), upper.len());
    let mut point: Vec<f64> = lower.to_vec();
    let mut converged = true;
    let mut evaluations = 0;
    let r = nested(&f, lower, upper, 0, &mut point, opts, &mut converged, &mut evaluations);
    Integral {
        value: r.value,
        abs_error: r.abs_error,
        evaluations,
        converged: converged && r.converged,
    }
}

#[allow(clippy::too_many_arguments)]
fn nested<F: Fn(&[f64]) -> f64>(
    f: &F,
    lower: &[f64],
    upper: &[f64],
    axis: usize,
    point: &mut [f64],
    opts: QuadOptions,
    converged: &mut bool,
    evaluations: &mut usize,
) -> Integral {
    if axis == lower.len() {
        *evaluations += 1;
        return Integral {
            value: f(point),
            abs_error: 0.0,
            evaluations: 1,
            converged: true,
        };
    }
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol * 1e-2,
        rel_tol: opts.rel_tol * 1e-2,
        max_intervals: opts.max_intervals,
    };
    let r = integrate_interval(
        |x| {
            point[axis] = x;
            let inner = nested(f, lower, upper, axis + 1, point, inner_opts, converged, evaluations);
            if !inner.converged {
                *converged = false;
            }
            inner.value
        },
        lower[axis],
        upper[axis],
        opts,
    );
    if !r.converged {
        *converged = false;
    }
    r
}
