//! Deterministic state evolution of the receiver: trajectory iteration,
//! fixed-point location with multi-root detection, and the uncoded-MMSE
//! readout.

use crate::denoiser::{scalar_mmse, Prior};
use crate::error::{Error, Result};
use crate::le;
use crate::spectrum::Spectrum;

/// One step of the scalar recursion: LE-side SINR, NLE posterior MSE, and
/// the extrinsic variance handed back to the LE.
#[derive(Clone, Copy, Debug)]
pub struct SePoint {
    pub sinr: f64,
    pub mse: f64,
    pub extrinsic_var: f64,
}

/// Converged operating point of the recursion.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub rho_star: f64,
    pub v_star: f64,
    pub v_perp_star: f64,
    pub unique: bool,
    /// All (rho, v) crossings found on the scan grid, ascending in rho.
    pub all_roots: Vec<(f64, f64)>,
}

/// Runs the recursion from the cold start v_perp = 1 (zero initial estimate
/// of a unit-power signal).
pub fn trajectory(
    spec: &Spectrum,
    prior: &Prior,
    max_iters: usize,
    tol: f64,
) -> Result<Vec<SePoint>> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
    }
    let mut points = Vec::new();
    let mut v_perp = 1.0f64;
    let mut last_v = f64::INFINITY;
    for _ in 0..max_iters {
        let rho = le::extrinsic_sinr_from_prior(spec, v_perp)?;
        let v = scalar_mmse(prior, rho)?;
        let inv_next = v.recip() - rho;
        if !(inv_next > 0.0) || !v.is_finite() {
            return Err(Error::Numerical(format!(
                "extrinsic precision went non-positive (v = {v}, rho = {rho})"
            )));
        }
        v_perp = inv_next.recip();
        points.push(SePoint { sinr: rho, mse: v, extrinsic_var: v_perp });
        if (v - last_v).abs() / v.max(f64::MIN_POSITIVE) < tol {
            break;
        }
        last_v = v;
    }
    Ok(points)
}

const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = 1e4;
const SCAN_POINTS: usize = 1000;

fn chart_gap(spec: &Spectrum, prior: &Prior, rho: f64) -> Result<f64> {
    let phi = scalar_mmse(prior, rho)?;
    let eta_inv = le::extrinsic_sinr_inverse(spec, rho)?;
    if eta_inv.is_infinite() {
        Ok(f64::NEG_INFINITY)
    } else {
        Ok(phi - eta_inv)
    }
}

/// Locates the fixed point(s) of phi(rho) = eta^{-1}(rho).
///
/// All sign changes on a log grid over [1e-6, 1e4] are refined by bisection;
/// the reported (rho*, v*) is the one the recursion actually reaches from the
/// cold start. `unique` reflects the single-crossing assumption, which can
/// fail for discrete priors at some SNRs.
pub fn fixed_point(spec: &Spectrum, prior: &Prior) -> Result<FixedPoint> {
    let mut roots: Vec<(f64, f64)> = Vec::new();
    let log_lo = SCAN_LO.ln();
    let log_hi = SCAN_HI.ln();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..SCAN_POINTS {
        let rho = (log_lo + (log_hi - log_lo) * k as f64 / (SCAN_POINTS - 1) as f64).exp();
        let gap = chart_gap(spec, prior, rho)?;
        if gap == 0.0 {
            // degenerate exact hit; count once and reset the bracket state
            roots.push((rho, scalar_mmse(prior, rho)?));
            prev = None;
            continue;
        }
        if let Some((prev_rho, prev_gap)) = prev {
            if (prev_gap < 0.0) != (gap < 0.0) {
                let (mut a, mut b) = (prev_rho, rho);
                let mut ga = prev_gap;
                for _ in 0..200 {
                    let mid = ((a.ln() + b.ln()) / 2.0).exp();
                    let gm = chart_gap(spec, prior, mid)?;
                    if gm == 0.0 || (gm < 0.0) == (ga < 0.0) {
                        a = mid;
                        ga = if gm == 0.0 { ga } else { gm };
                    } else {
                        b = mid;
                    }
                    if (b - a) / b < 1e-14 {
                        break;
                    }
                }
                let root = ((a.ln() + b.ln()) / 2.0).exp();
                roots.push((root, scalar_mmse(prior, root)?));
            }
        }
        prev = Some((rho, gap));
    }
    roots.dedup_by(|a, b| (a.0 - b.0).abs() / b.0 < 1e-9);
    if roots.is_empty() {
        return Err(Error::Numerical("no fixed point found on the scan grid".into()));
    }
    // the SE-reachable root: follow the recursion, then snap to the nearest
    // refined crossing
    let traj = trajectory(spec, prior, 100_000, 1e-13)?;
    let reached = traj.last().expect("trajectory nonempty");
    let (rho_star, v_star) = *roots
        .iter()
        .min_by(|a, b| {
            let da = (a.0 - reached.sinr).abs();
            let db = (b.0 - reached.sinr).abs();
            da.partial_cmp(&db).expect("finite distances")
        })
        .expect("roots nonempty");
    let v_perp_star = (v_star.recip() - rho_star).recip();
    Ok(FixedPoint { rho_star, v_star, v_perp_star, unique: roots.len() == 1, all_roots: roots })
}

/// MSE the receiver converges to in the uncoded system: v* = phi(rho*).
/// The flag is false when the single-crossing assumption failed, in which
/// case the value is the SE-reachable root, not a certified MMSE.
pub fn uncoded_mmse(spec: &Spectrum, prior: &Prior) -> Result<(f64, bool)> {
    let fp = fixed_point(spec, prior)?;
    Ok((fp.v_star, fp.unique))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SystemDims;

    #[test]
    fn identity_gaussian_converges_in_one_step() {
        for snr in [0.5, 1.0, 4.0] {
            let spec = Spectrum::identity(8, snr).unwrap();
            let traj = trajectory(&spec, &Prior::Gaussian, 50, 1e-12).unwrap();
            assert!((traj[0].sinr - snr).abs() < 1e-12);
            assert!((traj[0].mse - 1.0 / (1.0 + snr)).abs() < 1e-12);
            assert!(traj.len() <= 2, "converged in {} steps", traj.len());
        }
    }

    #[test]
    fn identity_qpsk_hits_phi_at_snr() {
        let snr = 4.0;
        let spec = Spectrum::identity(8, snr).unwrap();
        let traj = trajectory(&spec, &Prior::qpsk(), 50, 1e-12).unwrap();
        let want = scalar_mmse(&Prior::qpsk(), snr).unwrap();
        assert!((traj.last().unwrap().mse - want).abs() < 1e-10);
        let fp = fixed_point(&spec, &Prior::qpsk()).unwrap();
        assert!((fp.rho_star - snr).abs() < 1e-6, "rho* {}", fp.rho_star);
    }

    #[test]
    fn gaussian_fixed_point_closed_form() {
        // rho* = 1/gamma(1) - 1, reached in one step; unique across spectra.
        let battery = [
            Spectrum::identity(16, 2.0).unwrap(),
            Spectrum::geometric(SystemDims::new(128, 128).unwrap(), 10.0, 1.5).unwrap(),
            Spectrum::geometric(SystemDims::new(120, 80).unwrap(), 50.0, 3.0).unwrap(),
            Spectrum::geometric(SystemDims::new(80, 160).unwrap(), 10.0, 0.8).unwrap(),
        ];
        for spec in battery {
            let fp = fixed_point(&spec, &Prior::Gaussian).unwrap();
            let want = le::posterior_mse(&spec, 1.0).unwrap().recip() - 1.0;
            assert!(
                (fp.rho_star - want).abs() / want < 1e-9,
                "rho* {} vs {}",
                fp.rho_star,
                want
            );
            assert!(fp.unique, "Gaussian fixed point must be unique");
            assert_eq!(fp.all_roots.len(), 1);
            // identity channel: rho* = snr
            let (v, unique) = uncoded_mmse(&spec, &Prior::Gaussian).unwrap();
            assert!(unique);
            assert!((v - 1.0 / (1.0 + fp.rho_star)).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_invariants_hold() {
        let spec = Spectrum::geometric(SystemDims::new(256, 256).unwrap(), 10.0, 1.479).unwrap();
        let prior = Prior::qpsk();
        let fp = fixed_point(&spec, &prior).unwrap();
        // v* = phi(rho*)
        assert!((fp.v_star - scalar_mmse(&prior, fp.rho_star).unwrap()).abs() < 1e-10);
        // consistency of the pair of fixed-point equations
        let lhs = le::posterior_mse(&spec, fp.v_perp_star).unwrap();
        assert!((lhs - fp.v_star).abs() < 1e-10, "plug-back {lhs} vs {}", fp.v_star);
        let rho_back = le::extrinsic_sinr_from_prior(&spec, fp.v_perp_star).unwrap();
        assert!((rho_back - fp.rho_star).abs() / fp.rho_star < 1e-9);
    }

    #[test]
    fn trajectory_is_monotone() {
        let spec = Spectrum::geometric(SystemDims::new(256, 256).unwrap(), 50.0, 2.0).unwrap();
        let traj = trajectory(&spec, &Prior::qpsk(), 200, 1e-13).unwrap();
        for w in traj.windows(2) {
            assert!(w[1].mse <= w[0].mse + 1e-12, "v not non-increasing");
            assert!(w[1].sinr >= w[0].sinr - 1e-12, "rho not non-decreasing");
        }
    }

    #[test]
    fn beta_above_one_padded_zeros_handled() {
        let spec = Spectrum::geometric(SystemDims::new(150, 100).unwrap(), 10.0, 2.0).unwrap();
        let fp = fixed_point(&spec, &Prior::qpsk()).unwrap();
        assert!(fp.rho_star > 0.0 && fp.v_star > 0.0 && fp.v_perp_star > 0.0);
        let traj = trajectory(&spec, &Prior::qpsk(), 500, 1e-12).unwrap();
        let last = traj.last().unwrap();
        assert!((last.mse - fp.v_star).abs() / fp.v_star < 1e-6);
    }
}
