//! Quadrature rules: Gauss-Hermite (Golub-Welsch) and adaptive Gauss-Kronrod.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigen;

/// Gauss-Hermite rule for the weight e^{-x^2} on (-inf, inf).
///
/// Nodes and weights come from the Golub-Welsch eigenproblem of the Hermite
/// recurrence: symmetric tridiagonal with zero diagonal and off-diagonal
/// sqrt(k/2).
#[derive(Clone, Debug)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument("Gauss-Hermite degree must be >= 1".into()));
        }
        if degree == 1 {
            return Ok(Self { nodes: vec![0.0], weights: vec![std::f64::consts::PI.sqrt()] });
        }
        let diag = vec![0.0; degree];
        let off: Vec<f64> = (1..degree).map(|k| (k as f64 / 2.0).sqrt()).collect();
        let (nodes, first) = tridiagonal_eigen(&diag, &off)?;
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let weights = first.iter().map(|v| v * v * sqrt_pi).collect();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// integral of e^{-x^2} f(x) dx
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// E[f(Z)] for Z ~ N(0, 1).
    pub fn expect_std_normal(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = std::f64::consts::PI.sqrt().recip();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| c * w * f(std::f64::consts::SQRT_2 * x))
            .sum()
    }

    /// E[f(Z1, Z2)] for independent Z1, Z2 ~ N(0, 1) on the tensor grid.
    pub fn expect_std_normal_2d(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let c = std::f64::consts::PI.recip();
        let mut acc = 0.0;
        for (&x1, &w1) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&x2, &w2) in self.nodes.iter().zip(&self.weights) {
                inner += w2 * f(std::f64::consts::SQRT_2 * x1, std::f64::consts::SQRT_2 * x2);
            }
            acc += w1 * inner;
        }
        c * acc
    }
}

/// Default 63-node rule, shared.
pub fn gh_default() -> &'static GaussHermite {
    static GH: OnceLock<GaussHermite> = OnceLock::new();
    GH.get_or_init(|| GaussHermite::new(63).expect("Gauss-Hermite construction"))
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK constants).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(mid - x) + f(mid + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome {
    pub value: f64,
    pub abs_error: f64,
}

struct Segment {
    value: f64,
    err: f64,
    a: f64,
    b: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
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
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive Gauss-Kronrod integration of `f` on [a, b].
///
/// Splits the worst interval until the summed error estimate drops below
/// `abs_tol` or the subdivision budget runs out; the latter is an error with
/// the achieved residual attached.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<QuadOutcome> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument("integration bounds must be finite".into()));
    }
    if a == b {
        return Ok(QuadOutcome { value: 0.0, abs_error: 0.0 });
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&mut f, lo, hi);
    heap.push(Segment { value: v, err: e, a: lo, b: hi });
    let mut total_err = e;
    let max_segments = 4000;
    while total_err > abs_tol && heap.len() < max_segments {
        let worst = heap.pop().expect("heap nonempty");
        // Refuse to split below machine-width intervals.
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        total_err -= worst.err;
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total_err += e1 + e2;
        heap.push(Segment { value: v1, err: e1, a: worst.a, b: mid });
        heap.push(Segment { value: v2, err: e2, a: mid, b: worst.b });
    }
    let value: f64 = heap.iter().map(|s| s.value).sum();
    if total_err > abs_tol.max(1e-13 * value.abs()) && total_err > abs_tol * 16.0 {
        return Err(Error::Quadrature { residual: total_err });
    }
    Ok(QuadOutcome { value: sign * value, abs_error: total_err })
}
