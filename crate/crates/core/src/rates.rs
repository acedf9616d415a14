//! Area properties of the transfer chart and the constrained capacity by two
//! independent routes: the chart-area expression (mutual information plus a
//! log-determinant) and the spectral R-transform integral. Both operate on
//! the empirical finite-N eigenvalue profile.

use serde::Serialize;

use crate::denoiser::{mutual_information, scalar_mmse, Prior};
use crate::error::{Error, Result};
use crate::le;
use crate::quad::integrate;
use crate::se::{self, FixedPoint};
use crate::spectrum::Spectrum;

pub const LN_2: f64 = std::f64::consts::LN_2;

/// (1/N) sum ln(1 + snr lambda_i): the Gaussian-signaling capacity.
pub fn gaussian_capacity(spec: &Spectrum) -> f64 {
    let snr = spec.snr();
    let n = spec.eigenvalues().len() as f64;
    spec.eigenvalues().iter().map(|&l| (1.0 + snr * l).ln()).sum::<f64>() / n
}

fn log_det_term(spec: &Spectrum, rho: f64, v: f64) -> Result<f64> {
    let c = v.recip() - rho;
    if !(c > 0.0) {
        return Err(Error::Numerical(format!(
            "extrinsic precision 1/v - rho = {c} is not positive at the fixed point"
        )));
    }
    let snr = spec.snr();
    let n = spec.eigenvalues().len() as f64;
    Ok(spec.eigenvalues().iter().map(|&l| (c + snr * l).ln()).sum::<f64>() / n)
}

pub(crate) fn capacity_area_at(spec: &Spectrum, prior: &Prior, rho: f64, v: f64) -> Result<f64> {
    let mi = mutual_information(prior, rho)?;
    Ok(mi + v.ln() + log_det_term(spec, rho, v)?)
}

/// Constrained capacity from the transfer-chart area at a unique fixed
/// point.
pub fn capacity_area(spec: &Spectrum, prior: &Prior, fp: &FixedPoint) -> Result<f64> {
    if !fp.unique {
        return Err(Error::NonUniqueFixedPoint { roots: fp.all_roots.len() });
    }
    capacity_area_at(spec, prior, fp.rho_star, fp.v_star)
}

/// Empirical Stieltjes/R-transform of an eigenvalue profile.
pub struct RTransform<'a> {
    eigenvalues: &'a [f64],
    mean: f64,
}

impl<'a> RTransform<'a> {
    pub fn new(spec: &'a Spectrum) -> Self {
        Self { eigenvalues: spec.eigenvalues(), mean: spec.mean_eigenvalue() }
    }

    /// S(z) = (1/N) sum 1/(lambda_i - z), finite and strictly increasing on
    /// z < 0.
    pub fn stieltjes(&self, z: f64) -> f64 {
        let n = self.eigenvalues.len() as f64;
        self.eigenvalues.iter().map(|&l| (l - z).recip()).sum::<f64>() / n
    }

    /// Supremum of S on the negative axis (infinite with zero eigenvalues).
    pub fn stieltjes_sup(&self) -> f64 {
        if self.eigenvalues.iter().any(|&l| l == 0.0) {
            f64::INFINITY
        } else {
            let n = self.eigenvalues.len() as f64;
            self.eigenvalues.iter().map(|&l| l.recip()).sum::<f64>() / n
        }
    }

    /// Inverse of the Stieltjes transform on the negative real axis.
    pub fn stieltjes_inverse(&self, s: f64) -> Result<f64> {
        let sup = self.stieltjes_sup();
        if !(s > 0.0) || s >= sup {
            return Err(Error::OutOfRange { target: s, lo: 0.0, hi: sup });
        }
        // bisection on t = -z over a wide log bracket
        let (mut lo, mut hi) = (1e-15f64, 1e15f64);
        if self.stieltjes(-lo) < s || self.stieltjes(-hi) > s {
            return Err(Error::OutOfRange { target: s, lo: self.stieltjes(-hi), hi: self.stieltjes(-lo) });
        }
        for _ in 0..220 {
            let mid = ((lo.ln() + hi.ln()) / 2.0).exp();
            if self.stieltjes(-mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) / hi < 1e-12 {
                break;
            }
        }
        // Newton polish: S' = (1/N) sum 1/(lambda - z)^2
        let n = self.eigenvalues.len() as f64;
        let mut z = -((lo.ln() + hi.ln()) / 2.0).exp();
        for _ in 0..4 {
            let sv = self.stieltjes(z);
            let sp = self.eigenvalues.iter().map(|&l| (l - z).powi(2).recip()).sum::<f64>() / n;
            let step = (sv - s) / sp;
            let next = z - step;
            if next < 0.0 {
                z = next;
            } else {
                break;
            }
        }
        Ok(z)
    }

    /// R(-z) = S^{-1}(z) + 1/z for z > 0, with the analytic z -> 0 limit
    /// (the first moment) spliced in below the cancellation floor.
    pub fn r_neg(&self, z: f64) -> Result<f64> {
        if z < 1e-9 {
            return Ok(self.mean);
        }
        Ok(self.stieltjes_inverse(z)? + z.recip())
    }
}

/// Fixed point and capacity from the R-transform route.
#[derive(Clone, Copy, Debug)]
pub struct RCapacity {
    pub rho_star: f64,
    pub v_star: f64,
    pub capacity_nats: f64,
    pub unique: bool,
}

/// Constrained capacity via the spectral integral: solves
/// rho = snr R(-snr phi(rho)), then assembles
/// int_0^{snr v*} R(-z) dz + I(x; sqrt(rho*) x + z) - rho* v*.
pub fn capacity_rtransform(spec: &Spectrum, prior: &Prior) -> Result<RCapacity> {
    let rt = RTransform::new(spec);
    let snr = spec.snr();
    let sup = rt.stieltjes_sup();
    // h(rho) is evaluable where snr phi(rho) lies inside the Stieltjes range;
    // phi is decreasing, so that is a right half-line.
    let evaluable = |rho: f64| -> Result<bool> {
        Ok(snr * scalar_mmse(prior, rho)? < sup * (1.0 - 1e-12))
    };
    let h = |rho: f64| -> Result<f64> {
        let z = snr * scalar_mmse(prior, rho)?;
        Ok(snr * rt.r_neg(z)? - rho)
    };
    let (log_lo, log_hi) = (1e-6f64.ln(), 1e4f64.ln());
    let points = 400;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..points {
        let rho = (log_lo + (log_hi - log_lo) * k as f64 / (points - 1) as f64).exp();
        if !evaluable(rho)? {
            continue;
        }
        let val = h(rho)?;
        if let Some((rho0, val0)) = prev {
            if (val0 < 0.0) != (val < 0.0) {
                let (mut a, mut b, mut ga) = (rho0, rho, val0);
                for _ in 0..200 {
                    let mid = ((a.ln() + b.ln()) / 2.0).exp();
                    let gm = h(mid)?;
                    if (gm < 0.0) == (ga < 0.0) {
                        a = mid;
                        ga = gm;
                    } else {
                        b = mid;
                    }
                    if (b - a) / b < 1e-14 {
                        break;
                    }
                }
                roots.push(((a.ln() + b.ln()) / 2.0).exp());
            }
        }
        prev = Some((rho, val));
    }
    roots.dedup_by(|a, b| (*a - *b).abs() / *b < 1e-9);
    if roots.is_empty() {
        return Err(Error::Numerical("no fixed point for the R-transform route".into()));
    }
    let unique = roots.len() == 1;
    let rho_star = roots[0];
    let v_star = scalar_mmse(prior, rho_star)?;
    let upper = snr * v_star;
    let spectral = integrate(|z| rt.r_neg(z).unwrap_or(f64::NAN), 0.0, upper, 1e-10)?;
    let mi = mutual_information(prior, rho_star)?;
    Ok(RCapacity {
        rho_star,
        v_star,
        capacity_nats: spectral.value + mi - rho_star * v_star,
        unique,
    })
}

/// Rate of the detector-then-decoder cascade: the area under the prior's
/// transfer function up to the uncoded fixed point.
pub fn cascade_rate(spec: &Spectrum, prior: &Prior, fp: &FixedPoint) -> Result<f64> {
    let _ = spec;
    mutual_information(prior, fp.rho_star)
}

/// Every named area of the transfer chart, in nats. Discrete-only quantities
/// are absent for the Gaussian prior.
#[derive(Clone, Debug, Serialize)]
pub struct AreaReport {
    pub rho_star: f64,
    pub v_star: f64,
    pub unique: bool,
    /// constrained capacity (chart area)
    pub a_adgo: f64,
    /// Gaussian capacity
    pub a_acgo: f64,
    /// cascade achievable rate
    pub a_adeo: f64,
    /// rho* v* rectangle
    pub a_bdeo: f64,
    /// cascade rate loss
    pub a_dge: f64,
    /// a_bdeo + a_dge
    pub a_bdgo: f64,
    /// SISO constrained capacity at the channel snr
    pub a_afgo: f64,
    /// SISO-vs-LUIS capacity gap
    pub a_dfg: f64,
    /// source entropy log|S|
    pub a_aho: Option<f64>,
    /// rate loss to channel noise
    pub a_fhg: Option<f64>,
    /// shaping gain of Gaussian signaling
    pub a_acd: Option<f64>,
}

pub fn area_report(spec: &Spectrum, prior: &Prior) -> Result<AreaReport> {
    let fp = se::fixed_point(spec, prior)?;
    if !fp.unique {
        return Err(Error::NonUniqueFixedPoint { roots: fp.all_roots.len() });
    }
    let a_adeo = mutual_information(prior, fp.rho_star)?;
    let a_dge = fp.v_star.ln() + log_det_term(spec, fp.rho_star, fp.v_star)?;
    let a_adgo = a_adeo + a_dge;
    let a_acgo = gaussian_capacity(spec);
    let a_bdeo = fp.rho_star * fp.v_star;
    let a_bdgo = a_bdeo + a_dge;
    let a_afgo = mutual_information(prior, spec.snr())?;
    let a_dfg = a_afgo - a_adgo;
    let a_aho = prior.entropy_nats();
    let a_fhg = a_aho.map(|h| h - a_afgo);
    let a_acd = if prior.is_gaussian() { None } else { Some(a_acgo - a_adgo) };
    Ok(AreaReport {
        rho_star: fp.rho_star,
        v_star: fp.v_star,
        unique: fp.unique,
        a_adgo,
        a_acgo,
        a_adeo,
        a_bdeo,
        a_dge,
        a_bdgo,
        a_afgo,
        a_dfg,
        a_aho,
        a_fhg,
        a_acd,
    })
}

/// One row of the achievable-rate table (bits per symbol). Non-unique SNRs
/// contribute one row per fixed-point candidate.
#[derive(Clone, Debug, Serialize)]
pub struct RateRow {
    pub snr_db: f64,
    pub c_luis_bits: f64,
    pub r_cas_bits: f64,
    pub c_gauss_bits: f64,
    pub unique: bool,
}

pub fn rate_curve(profile: &Spectrum, prior: &Prior, snr_db_grid: &[f64]) -> Result<Vec<RateRow>> {
    let mut rows = Vec::new();
    for &snr_db in snr_db_grid {
        let spec = profile.with_snr(10f64.powf(snr_db / 10.0))?;
        let fp = se::fixed_point(&spec, prior)?;
        let c_gauss = gaussian_capacity(&spec) / LN_2;
        if fp.unique {
            let c = capacity_area_at(&spec, prior, fp.rho_star, fp.v_star)? / LN_2;
            let cas = mutual_information(prior, fp.rho_star)? / LN_2;
            rows.push(RateRow { snr_db, c_luis_bits: c, r_cas_bits: cas, c_gauss_bits: c_gauss, unique: true });
        } else {
            for &(rho, v) in &fp.all_roots {
                let c = capacity_area_at(&spec, prior, rho, v)? / LN_2;
                let cas = mutual_information(prior, rho)? / LN_2;
                rows.push(RateRow {
                    snr_db,
                    c_luis_bits: c,
                    r_cas_bits: cas,
                    c_gauss_bits: c_gauss,
                    unique: false,
                });
            }
        }
    }
    Ok(rows)
}

/// Integral of min(eta^{-1}, phi) over the whole SINR axis; equals the
/// constrained capacity when the fixed point is unique.
pub fn matching_rate_integral(spec: &Spectrum, prior: &Prior) -> Result<f64> {
    let hi = le::extrinsic_sinr_sup(spec);
    let prior = prior.clone();
    let spec_ref = spec;
    let out = integrate(
        |rho| {
            let phi = scalar_mmse(&prior, rho).unwrap_or(f64::NAN);
            let eta_inv = le::extrinsic_sinr_inverse(spec_ref, rho).unwrap_or(f64::NAN);
            phi.min(eta_inv)
        },
        0.0,
        hi,
        1e-8,
    )?;
    Ok(out.value)
}

/// SNR (dB) at which the constrained capacity crosses `rate_bits`, by
/// bisection over the given bracket.
pub fn capacity_threshold_db(
    profile: &Spectrum,
    prior: &Prior,
    rate_bits: f64,
    lo_db: f64,
    hi_db: f64,
) -> Result<f64> {
    let cap_at = |db: f64| -> Result<f64> {
        let spec = profile.with_snr(10f64.powf(db / 10.0))?;
        let fp = se::fixed_point(&spec, prior)?;
        Ok(capacity_area_at(&spec, prior, fp.rho_star, fp.v_star)? / LN_2)
    };
    let (mut lo, mut hi) = (lo_db, hi_db);
    let (clo, chi) = (cap_at(lo)?, cap_at(hi)?);
    if !(clo <= rate_bits && rate_bits <= chi) {
        return Err(Error::OutOfRange { target: rate_bits, lo: clo, hi: chi });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cap_at(mid)? < rate_bits {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-4 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SystemDims;

    fn qpsk() -> Prior {
        Prior::qpsk()
    }

    #[test]
    fn r_transform_of_identity_spectrum_is_one() {
        let spec = Spectrum::identity(32, 1.0).unwrap();
        let rt = RTransform::new(&spec);
        for z in [1e-6, 0.01, 0.3, 0.9] {
            let r = rt.r_neg(z).unwrap();
            assert!((r - 1.0).abs() < 1e-9, "R(-{z}) = {r}");
        }
        // S is increasing left of the spectrum
        assert!(rt.stieltjes(-2.0) < rt.stieltjes(-1.0));
        // inverse round trip
        let s = rt.stieltjes(-0.7);
        assert!((rt.stieltjes_inverse(s).unwrap() + 0.7).abs() < 1e-9);
    }

    #[test]
    fn identity_gaussian_capacity_by_both_routes() {
        let snr = 2.0;
        let spec = Spectrum::identity(16, snr).unwrap();
        let fp = se::fixed_point(&spec, &Prior::Gaussian).unwrap();
        let area = capacity_area(&spec, &Prior::Gaussian, &fp).unwrap();
        assert!((area - (1.0 + snr).ln()).abs() < 1e-9, "area {area}");
        let rroute = capacity_rtransform(&spec, &Prior::Gaussian).unwrap();
        assert!((rroute.capacity_nats - (1.0 + snr).ln()).abs() < 1e-8);
        assert!((rroute.rho_star - snr).abs() < 1e-7);
        assert!(rroute.unique);
    }

    #[test]
    fn gaussian_capacity_identity_theorem_holds_across_spectra() {
        // analytic cancellation: MI + ln v* collapses, leaving the log-det.
        for (kappa, n, m) in [(1.0, 64, 64), (10.0, 96, 64), (50.0, 64, 96)] {
            let dims = SystemDims::new(n, m).unwrap();
            let spec = Spectrum::geometric(dims, kappa, 1.7).unwrap();
            let fp = se::fixed_point(&spec, &Prior::Gaussian).unwrap();
            let area = capacity_area(&spec, &Prior::Gaussian, &fp).unwrap();
            let want = gaussian_capacity(&spec);
            assert!((area - want).abs() < 1e-9, "kappa {kappa}: {area} vs {want}");
        }
    }

    #[test]
    fn identity_qpsk_capacity_equals_siso_capacity() {
        let snr = 1.8;
        let spec = Spectrum::identity(8, snr).unwrap();
        let report = area_report(&spec, &qpsk()).unwrap();
        let siso = mutual_information(&qpsk(), snr).unwrap();
        assert!((report.a_adgo - siso).abs() < 1e-9);
        // no cascade loss and no cross-symbol interference loss
        assert!(report.a_dge.abs() < 1e-9, "a_dge {}", report.a_dge);
        assert!(report.a_dfg.abs() < 1e-9, "a_dfg {}", report.a_dfg);
    }

    #[test]
    fn dual_route_agreement_qpsk_ill_conditioned() {
        let dims = SystemDims::new(128, 128).unwrap();
        let spec = Spectrum::geometric(dims, 10.0, 10f64.powf(0.155)).unwrap();
        let fp = se::fixed_point(&spec, &qpsk()).unwrap();
        assert!(fp.unique);
        let area = capacity_area(&spec, &qpsk(), &fp).unwrap();
        let rroute = capacity_rtransform(&spec, &qpsk()).unwrap();
        assert!(
            (area - rroute.capacity_nats).abs() < 1e-3,
            "area {area} vs r-route {}",
            rroute.capacity_nats
        );
        assert!((fp.rho_star - rroute.rho_star).abs() < 1e-6);
    }

    #[test]
    fn area_identities_and_report_wiring() {
        let dims = SystemDims::new(96, 64).unwrap();
        let spec = Spectrum::geometric(dims, 10.0, 2.5).unwrap();
        let report = area_report(&spec, &qpsk()).unwrap();
        assert!((report.a_adgo - (report.a_adeo + report.a_dge)).abs() < 1e-9);
        assert!((report.a_bdgo - (report.a_bdeo + report.a_dge)).abs() < 1e-9);
        assert!((report.a_dfg - (report.a_afgo - report.a_adgo)).abs() < 1e-9);
        let aho = report.a_aho.unwrap();
        assert!((aho - 2.0 * LN_2).abs() < 1e-12);
        assert!((report.a_fhg.unwrap() - (aho - report.a_afgo)).abs() < 1e-12);
        // Gaussian prior: discrete-only areas are absent
        let g = area_report(&spec, &Prior::Gaussian).unwrap();
        assert!(g.a_aho.is_none() && g.a_fhg.is_none() && g.a_acd.is_none());
    }

    #[test]
    fn qpsk_high_snr_areas_saturate() {
        let spec = Spectrum::identity(8, 1e4).unwrap();
        let report = area_report(&spec, &qpsk()).unwrap();
        assert!((report.a_aho.unwrap() - 2.0 * LN_2).abs() < 1e-12);
        assert!(report.a_fhg.unwrap().abs() < 1e-3, "noise loss {}", report.a_fhg.unwrap());
        assert!((report.a_adgo / LN_2 - 2.0).abs() < 1e-3);
    }

    #[test]
    fn cascade_rate_gaussian_closed_form_and_no_identity_loss() {
        let spec = Spectrum::geometric(SystemDims::new(128, 128).unwrap(), 10.0, 2.0).unwrap();
        let fp = se::fixed_point(&spec, &Prior::Gaussian).unwrap();
        let cas = cascade_rate(&spec, &Prior::Gaussian, &fp).unwrap();
        assert!((cas - (1.0 + fp.rho_star).ln()).abs() < 1e-12);
        // cascade loses rate strictly on an ill-conditioned spectrum
        let cap = capacity_area(&spec, &Prior::Gaussian, &fp).unwrap();
        assert!(cap > cas + 1e-3, "cap {cap} vs cascade {cas}");
    }

    #[test]
    fn matching_rate_integral_reproduces_capacity() {
        let dims = SystemDims::new(128, 128).unwrap();
        let spec = Spectrum::geometric(dims, 10.0, 1.5).unwrap();
        let fp = se::fixed_point(&spec, &qpsk()).unwrap();
        assert!(fp.unique);
        let cap = capacity_area(&spec, &qpsk(), &fp).unwrap();
        let tunnel = matching_rate_integral(&spec, &qpsk()).unwrap();
        assert!((cap - tunnel).abs() < 1e-5, "cap {cap} vs tunnel {tunnel}");
    }

    #[test]
    fn log_det_chain_is_additive_in_the_integration_variable() {
        // quadrature of the resolvent trace between intermediate points
        // telescopes against log-det differences.
        let spec = Spectrum::geometric(SystemDims::new(64, 64).unwrap(), 10.0, 1.3).unwrap();
        let snr = spec.snr();
        let n = spec.eigenvalues().len() as f64;
        let logdet = |s: f64| -> f64 {
            spec.eigenvalues().iter().map(|&l| (s + snr * l).ln()).sum::<f64>() / n
        };
        let trace = |s: f64| -> f64 {
            spec.eigenvalues().iter().map(|&l| (s + snr * l).recip()).sum::<f64>() / n
        };
        let (sa, sb, sc) = (0.4, 1.7, 9.0);
        let ab = integrate(trace, sa, sb, 1e-12).unwrap().value;
        let bc = integrate(trace, sb, sc, 1e-12).unwrap().value;
        let ac = integrate(trace, sa, sc, 1e-12).unwrap().value;
        assert!((ab - (logdet(sb) - logdet(sa))).abs() < 1e-10);
        assert!((bc - (logdet(sc) - logdet(sb))).abs() < 1e-10);
        assert!((ab + bc - ac).abs() < 1e-10);
    }

    #[test]
    fn rate_curve_orderings() {
        let dims = SystemDims::new(90, 60).unwrap();
        let profile = Spectrum::geometric(dims, 50.0, 1.0).unwrap();
        // Gaussian prior: capacity column equals the Gaussian capacity
        let rows = rate_curve(&profile, &Prior::Gaussian, &[-2.0, 3.0, 8.0]).unwrap();
        for row in &rows {
            assert!((row.c_luis_bits - row.c_gauss_bits).abs() < 1e-8);
            assert!(row.r_cas_bits <= row.c_luis_bits + 1e-9);
        }
        // QPSK saturates at 2 bits
        let spec_hi = profile.with_snr(10f64.powf(2.5)).unwrap();
        let fp = se::fixed_point(&spec_hi, &qpsk()).unwrap();
        let cap = capacity_area_at(&spec_hi, &qpsk(), fp.rho_star, fp.v_star).unwrap() / LN_2;
        assert!(cap < 2.0 + 1e-9 && cap > 1.9, "cap {cap}");
    }

    #[test]
    fn constellation_rate_ordering_at_high_snr() {
        use crate::denoiser::Constellation;
        let dims = SystemDims::new(90, 60).unwrap();
        let profile = Spectrum::geometric(dims, 50.0, 1.0).unwrap();
        let snr_db = 14.0;
        let spec = profile.with_snr(10f64.powf(snr_db / 10.0)).unwrap();
        let mut caps = Vec::new();
        for c in [Constellation::qpsk(), Constellation::psk8(), Constellation::qam16()] {
            let prior = Prior::Discrete(c);
            let fp = se::fixed_point(&spec, &prior).unwrap();
            caps.push(capacity_area_at(&spec, &prior, fp.rho_star, fp.v_star).unwrap());
        }
        assert!(caps[0] < caps[1] && caps[1] < caps[2], "ordering {caps:?}");
    }
}
