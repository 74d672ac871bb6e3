//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
//!
//! The 15-point rule never evaluates the endpoints, so integrable endpoint
//! singularities such as `x^{-1/2}` at 0 are handled by repeated bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
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

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Integrate `f` over `[a, b]` until the summed error estimate drops below
/// `abs_tol`, bisecting the worst segment at each step.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature> {
    const MAX_SEGMENTS: usize = 20_000;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument("integration bounds must be finite".into()));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut finished: Vec<Segment> = Vec::new();
    let first = gk15(&f, a, b);
    let mut error = first.error;
    heap.push(first);
    let mut iterations = 0usize;
    while error > abs_tol {
        let Some(worst) = heap.pop() else { break };
        if heap.len() + finished.len() >= MAX_SEGMENTS {
            return Err(Error::DivergentMeasure(format!(
                "quadrature did not reach tolerance {abs_tol:e} (estimate {error:e})"
            )));
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Cannot split further in floating point; keep its error.
            finished.push(worst);
            continue;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        iterations += 1;
        if iterations % 64 == 0 {
            error = heap.iter().chain(finished.iter()).map(|s| s.error).sum();
        }
        if !error.is_finite() {
            return Err(Error::DivergentMeasure("integrand is not finite".into()));
        }
    }
    let mut segments = heap.into_vec();
    segments.extend(finished);
    let error: f64 = segments.iter().map(|s| s.error).sum();
    if error > abs_tol {
        return Err(Error::DivergentMeasure(format!(
            "quadrature stalled at error estimate {error:e}"
        )));
    }
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segments.iter().map(|s| s.value).sum();
    Ok(Quadrature {
        value,
        error,
        intervals: segments.len(),
    })
}
