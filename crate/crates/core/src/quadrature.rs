//! Globally adaptive Gauss–Kronrod (G10/K21) integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

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
    0.123_491_976_262_065_851_077_208_272_399_845,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights belonging to XGK[1], XGK[3], .., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).magnitude();
    (value, error)
}

/// Integrates `f` over `[a, b]` by bisecting the segment with the largest
/// error estimate until the summed estimate meets the tolerance.
pub fn integrate<T, F>(f: F, a: f64, b: f64, settings: &QuadSettings) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("quadrature bounds", "must be finite"));
    }
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            error: 0.0,
            intervals: 0,
        });
    }
    let (value, error) = kronrod21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        let tol = settings.abs_tol.max(settings.rel_tol * total.magnitude());
        if total_err <= tol {
            break;
        }
        if heap.len() >= settings.max_intervals {
            return Err(Error::Quadrature {
                residual: total_err,
                location: format!("[{a}, {b}]"),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = kronrod21(&f, worst.a, mid);
        let (rv, re) = kronrod21(&f, mid, worst.b);
        total = total - worst.value + lv + rv;
        total_err += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
    // Resum to shed accumulated cancellation error in the running totals.
    let mut value = T::zero();
    let mut error = 0.0;
    let intervals = heap.len();
    for seg in heap {
        value = value + seg.value;
        error += seg.error;
    }
    Ok(QuadResult {
        value,
        error,
        intervals,
    })
}
