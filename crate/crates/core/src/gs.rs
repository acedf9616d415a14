//! Gram-Schmidt model of an estimate and the orthogonalization coefficient b
//! in its four computable forms (trace, prior integral, divergence, variance
//! ratio), plus the normalized extrinsic update shared by both estimators.

use num_complex::Complex64;

use crate::denoiser::Prior;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::quad::GaussHermite;

/// Gain/error-power pair of the decomposition xhat = alpha x + xi with
/// Re<x, xi> = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GsModel {
    pub alpha: f64,
    pub v: f64,
}

/// Empirical GS decomposition of an estimate against the true signal, using
/// the real inner product Re<a, b>.
pub fn decompose(xhat: &[Complex64], x: &[Complex64]) -> Result<GsModel> {
    if xhat.len() != x.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", xhat.len(), x.len())));
    }
    let xx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    if xx == 0.0 {
        return Err(Error::InvalidArgument("signal vector is zero".into()));
    }
    let cross: f64 = xhat.iter().zip(x).map(|(a, b)| (b.conj() * a).re).sum();
    let alpha = cross / xx;
    let v: f64 = xhat
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b * alpha).norm_sqr())
        .sum::<f64>()
        / x.len() as f64;
    Ok(GsModel { alpha, v })
}

/// Normalized cross-correlation Re<xi_a, xi_b>/N of two GS errors.
pub fn error_correlation(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p.conj() * q).re).sum::<f64>() / a.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GsoMethod {
    Trace,
    PriorIntegral,
    Divergence,
    VarianceRatio,
}

/// The scalar b of the correction f = fhat - b * x_in that makes the
/// input/output errors orthogonal.
#[derive(Clone, Copy, Debug)]
pub struct GsoCoefficient {
    pub value: f64,
    pub method: GsoMethod,
}

/// b for a linear prototype W: the normalized trace. tr{W} = 0 is exactly the
/// orthogonality condition for linear estimators.
pub fn b_from_trace(w: &CMat) -> Result<GsoCoefficient> {
    if w.nrows() != w.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", w.nrows(), w.ncols())));
    }
    let n = w.nrows();
    let tr: f64 = (0..n).map(|i| w[(i, i)].re).sum();
    Ok(GsoCoefficient { value: tr / n as f64, method: GsoMethod::Trace })
}

/// b from the prior-weighted integral E{conj(xi) fhat(alpha x + xi)} / v_in
/// with xi ~ CN(0, v_in), evaluated on a two-dimensional Gauss-Hermite grid.
///
/// Discrete priors sum the atoms exactly. For the Gaussian prior, (xi, u) are
/// jointly Gaussian, so E[xi | u] = v_in/(alpha^2 + v_in) u collapses the
/// four-dimensional integral to the same two-dimensional grid.
pub fn b_from_prior_integral(
    prototype: impl Fn(Complex64) -> Complex64,
    prior: &Prior,
    alpha_in: f64,
    v_in: f64,
    quad: &GaussHermite,
) -> Result<GsoCoefficient> {
    if !(v_in > 0.0) {
        return Err(Error::InvalidArgument(format!("v_in must be positive, got {v_in}")));
    }
    let sigma = (v_in / 2.0).sqrt();
    let value = match prior {
        Prior::Discrete(c) => {
            let mut acc = Complex64::default();
            for (s, q) in c.points().iter().zip(c.probs()) {
                let center = s * alpha_in;
                let mut inner = Complex64::default();
                let weight_norm = std::f64::consts::PI.recip();
                for (&n1, &w1) in quad.nodes().iter().zip(quad.weights()) {
                    for (&n2, &w2) in quad.nodes().iter().zip(quad.weights()) {
                        let xi = Complex64::new(
                            std::f64::consts::SQRT_2 * sigma * n1,
                            std::f64::consts::SQRT_2 * sigma * n2,
                        );
                        inner += xi.conj() * prototype(center + xi) * (w1 * w2 * weight_norm);
                    }
                }
                acc += inner * *q;
            }
            (acc / v_in).re
        }
        Prior::Gaussian => {
            let var_u = alpha_in * alpha_in + v_in;
            let su = (var_u / 2.0).sqrt();
            let mut acc = Complex64::default();
            let weight_norm = std::f64::consts::PI.recip();
            for (&n1, &w1) in quad.nodes().iter().zip(quad.weights()) {
                for (&n2, &w2) in quad.nodes().iter().zip(quad.weights()) {
                    let u = Complex64::new(
                        std::f64::consts::SQRT_2 * su * n1,
                        std::f64::consts::SQRT_2 * su * n2,
                    );
                    acc += u.conj() * prototype(u) * (w1 * w2 * weight_norm);
                }
            }
            (acc / var_u).re
        }
    };
    if !value.is_finite() {
        return Err(Error::Numerical("prior-integral b is not finite".into()));
    }
    Ok(GsoCoefficient { value, method: GsoMethod::PriorIntegral })
}

/// b as the mean Wirtinger derivative of a separable prototype, estimated by
/// central differences over the supplied samples. Needs no prior knowledge.
pub fn b_from_divergence(
    prototype: impl Fn(Complex64) -> Complex64,
    samples: &[Complex64],
) -> Result<GsoCoefficient> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("divergence form needs at least one sample".into()));
    }
    let mut acc = 0.0;
    for &u in samples {
        let h = 1e-5 * u.norm().max(1.0);
        let dre = (prototype(u + h) - prototype(u - h)) / (2.0 * h);
        let dim = (prototype(u + Complex64::new(0.0, h)) - prototype(u - Complex64::new(0.0, h))) / (2.0 * h);
        // Wirtinger d/du = (d/du_R - i d/du_I)/2; its real part is the mean
        // of the two diagonal Jacobian entries.
        let wirt = (dre - Complex64::new(0.0, 1.0) * dim) * 0.5;
        if !wirt.re.is_finite() {
            return Err(Error::Numerical("divergence sample produced a non-finite derivative".into()));
        }
        acc += wirt.re;
    }
    Ok(GsoCoefficient { value: acc / samples.len() as f64, method: GsoMethod::Divergence })
}

/// b for an MMSE prototype: the posterior-to-prior variance ratio.
pub fn b_from_variance_ratio(v_f: f64, v_in: f64) -> Result<GsoCoefficient> {
    if !(v_in > 0.0) {
        return Err(Error::InvalidArgument(format!("v_in must be positive, got {v_in}")));
    }
    if v_f < 0.0 {
        return Err(Error::InvalidArgument(format!("v_f must be nonnegative, got {v_f}")));
    }
    if v_f > v_in {
        return Err(Error::NonContracting { b: v_f / v_in });
    }
    Ok(GsoCoefficient { value: v_f / v_in, method: GsoMethod::VarianceRatio })
}

const COLLAPSE_EPS: f64 = 1e-12;

/// Normalized extrinsic update x_out = (fhat - b x_in)/(1 - b) with variance
/// v_out = (1/v_f - 1/v_in)^{-1} = v_in b/(1 - b). The output has unit GS
/// gain for MMSE prototypes.
pub fn extrinsic_update(
    xhat_f: &[Complex64],
    x_in: &[Complex64],
    b: &GsoCoefficient,
    v_in: f64,
) -> Result<(Vec<Complex64>, f64)> {
    if xhat_f.len() != x_in.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", xhat_f.len(), x_in.len())));
    }
    let b = b.value;
    if b >= 1.0 - COLLAPSE_EPS {
        return Err(Error::VarianceCollapse { b });
    }
    let scale = 1.0 / (1.0 - b);
    let out: Vec<Complex64> = xhat_f.iter().zip(x_in).map(|(f, x)| (f - x * b) * scale).collect();
    let v_out = v_in * b / (1.0 - b);
    Ok((out, v_out))
}
