//! The LMMSE linear estimator: its MMSE transfer function over the spectrum,
//! the inverse map, the composite SINR map, and the sample-level solver in
//! the SVD basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectrum::{SensingMatrix, Spectrum};

/// gamma(v) = (1/N) sum_i 1/(snr lambda_i + 1/v): the LMMSE posterior MSE
/// when the prior on x has variance v.
pub fn posterior_mse(spec: &Spectrum, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::InvalidArgument(format!("v must be positive, got {v}")));
    }
    let snr = spec.snr();
    let inv_v = v.recip();
    let n = spec.eigenvalues().len() as f64;
    Ok(spec.eigenvalues().iter().map(|&l| (snr * l + inv_v).recip()).sum::<f64>() / n)
}

/// Supremum of gamma over v; infinite when the spectrum has zero eigenvalues.
pub fn posterior_mse_sup(spec: &Spectrum) -> f64 {
    let snr = spec.snr();
    let n = spec.eigenvalues().len() as f64;
    if spec.eigenvalues().iter().any(|&l| l == 0.0) {
        f64::INFINITY
    } else {
        spec.eigenvalues().iter().map(|&l| (snr * l).recip()).sum::<f64>() / n
    }
}

const BISECT_LO: f64 = 1e-12;
const BISECT_HI: f64 = 1e12;
const BISECT_ITERS: usize = 200;

/// Inverse of `posterior_mse` in v, by bisection on log v.
pub fn posterior_mse_inverse(spec: &Spectrum, target: f64) -> Result<f64> {
    let sup = posterior_mse_sup(spec);
    if !(target > 0.0) || target >= sup {
        return Err(Error::OutOfRange { target, lo: 0.0, hi: sup });
    }
    let f = |v: f64| posterior_mse(spec, v).expect("positive v");
    let (mut lo, mut hi) = (BISECT_LO, BISECT_HI);
    if f(lo) > target || f(hi) < target {
        return Err(Error::OutOfRange { target, lo: f(lo), hi: f(hi) });
    }
    for _ in 0..BISECT_ITERS {
        let mid = (lo.ln() + hi.ln()) / 2.0;
        let mid = mid.exp();
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-15 {
            break;
        }
    }
    Ok((lo.ln() / 2.0 + hi.ln() / 2.0).exp())
}

/// SINR delivered by the orthogonalized LMMSE when fed extrinsic variance
/// v_prior: rho = 1/gamma(v_prior) - 1/v_prior. This is the form the
/// iteration uses directly.
pub fn extrinsic_sinr_from_prior(spec: &Spectrum, v_prior: f64) -> Result<f64> {
    let g = posterior_mse(spec, v_prior)?;
    Ok(g.recip() - v_prior.recip())
}

/// The composite map eta(v) = 1/v - 1/gamma^{-1}(v) on the posterior-MSE
/// axis.
pub fn extrinsic_sinr(spec: &Spectrum, v_post: f64) -> Result<f64> {
    let v_prior = posterior_mse_inverse(spec, v_post)?;
    Ok(v_post.recip() - v_prior.recip())
}

/// Largest SINR the LE can deliver: the v_prior -> 0 limit, which equals
/// snr times the mean eigenvalue (= snr under the trace normalization).
pub fn extrinsic_sinr_sup(spec: &Spectrum) -> f64 {
    spec.snr() * spec.mean_eigenvalue()
}

/// Smallest SINR on the curve: the weak-prior limit v_prior -> inf.
pub fn extrinsic_sinr_inf(spec: &Spectrum) -> f64 {
    extrinsic_sinr_from_prior(spec, BISECT_HI).unwrap_or(0.0).max(0.0)
}

/// Inverse of eta as a curve over rho: the posterior MSE at which the LE
/// delivers SINR rho.
///
/// Returns 0 at or above the curve's SINR ceiling and +inf below its floor
/// (where no LE operating point exists and the transfer chart is
/// unconstrained).
pub fn extrinsic_sinr_inverse(spec: &Spectrum, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be nonnegative, got {rho}")));
    }
    let hi = extrinsic_sinr_sup(spec);
    let lo = extrinsic_sinr_inf(spec);
    if rho >= hi {
        return Ok(0.0);
    }
    if rho <= lo {
        return Ok(f64::INFINITY);
    }
    // rho(v_prior) is strictly decreasing; bisect on log v_prior.
    let f = |vp: f64| extrinsic_sinr_from_prior(spec, vp).expect("positive v");
    let (mut a, mut b) = (BISECT_LO, BISECT_HI);
    for _ in 0..BISECT_ITERS {
        let mid = ((a.ln() + b.ln()) / 2.0).exp();
        if f(mid) > rho {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a) / b < 1e-15 {
            break;
        }
    }
    let v_prior = ((a.ln() + b.ln()) / 2.0).exp();
    posterior_mse(spec, v_prior)
}

/// Sample-level LMMSE in the SVD basis.
///
/// One rotation of y at construction; each step is a diagonal solve plus two
/// unitary applications, mathematically identical to the direct
/// regularized-inverse form.
pub struct LmmseSolver<'a> {
    matrix: &'a SensingMatrix,
    spec: Spectrum,
    /// snr * Sigma U y in the V basis, length N.
    matched: Vec<Complex64>,
}

impl<'a> LmmseSolver<'a> {
    pub fn new(matrix: &'a SensingMatrix, snr: f64, y: &[Complex64]) -> Result<Self> {
        if y.len() != matrix.dims().obs_len() {
            return Err(Error::DimensionMismatch(format!(
                "y has length {}, expected {}",
                y.len(),
                matrix.dims().obs_len()
            )));
        }
        let spec = matrix.spectrum(snr)?;
        let mut matched = matrix.matched_filter_basis(y);
        for z in &mut matched {
            *z *= snr;
        }
        Ok(Self { matrix, spec, matched })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spec
    }

    /// Posterior mean of x given y and the extrinsic message x_in with
    /// variance v_prior; the reported variance is the deterministic
    /// spectrum-side value gamma(v_prior).
    pub fn step(&self, x_in: &[Complex64], v_prior: f64) -> Result<(Vec<Complex64>, f64)> {
        if !(v_prior > 0.0) {
            return Err(Error::InvalidArgument(format!("v_prior must be positive, got {v_prior}")));
        }
        let n = self.matrix.dims().signal_len();
        if x_in.len() != n {
            return Err(Error::DimensionMismatch(format!("x_in has length {}, expected {n}", x_in.len())));
        }
        let snr = self.spec.snr();
        let inv_v = v_prior.recip();
        let t = self.matrix.v_matvec(x_in);
        let mut w = vec![Complex64::default(); n];
        let rank = self.matrix.singulars().len();
        // index by singular order: row i of the V basis carries d_i
        for i in 0..n {
            let (num, lam) = if i < rank {
                let d = self.matrix.singulars()[i];
                (self.matched[i] + t[i] * inv_v, d * d)
            } else {
                (t[i] * inv_v, 0.0)
            };
            w[i] = num / (snr * lam + inv_v);
        }
        let mean = self.matrix.v_adjoint_matvec(&w);
        let var = posterior_mse(&self.spec, v_prior)?;
        Ok((mean, var))
    }
}
