//! The sample-level receiver: orthogonalized LMMSE and orthogonalized
//! denoiser (or APP decoder) alternating through normalized extrinsic
//! messages, with per-iteration diagnostics.

use num_complex::Complex64;

use crate::denoiser::{denoise_vec, scalar_mmse, Constellation, Prior};
use crate::error::{Error, Result};
use crate::gs;
use crate::ldpc::{LdpcCode, SumProductDecoder};
use crate::le::LmmseSolver;
use crate::modem;
use crate::spectrum::SensingMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarianceMode {
    /// Receiver-side estimate: average per-symbol posterior variance.
    Estimated,
    /// True-error measurement; needs the transmitted signal.
    Genie,
    /// Deterministic state-evolution prediction at the measured SINR.
    SePredicted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClampPolicy {
    Clamp,
    Abort,
}

#[derive(Clone, Debug)]
pub struct OampConfig {
    pub max_iters: usize,
    /// Relative change of the denoiser MSE that counts as converged.
    pub stop_eps: f64,
    pub variance_mode: VarianceMode,
    pub clamp_policy: ClampPolicy,
    pub seed: u64,
    /// Keep per-iteration message vectors for the orthogonality probe.
    pub record_messages: bool,
    /// Negative-control hook: skip the denoiser-side orthogonalization.
    pub nle_orthogonalization: bool,
    /// Message damping; 0 reproduces the analyzed algorithm exactly.
    pub damping: f64,
    /// Belief-propagation passes per outer iteration in the coded receiver.
    pub decoder_inner_iters: usize,
    /// Keep check-to-variable messages across outer iterations.
    pub decoder_warm_start: bool,
}

impl Default for OampConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            stop_eps: 1e-7,
            variance_mode: VarianceMode::Estimated,
            clamp_policy: ClampPolicy::Clamp,
            seed: 0,
            record_messages: false,
            nle_orthogonalization: true,
            damping: 0.0,
            decoder_inner_iters: 1,
            decoder_warm_start: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IterationRecord {
    pub t: usize,
    /// SINR delivered by the orthogonalized linear stage.
    pub rho: f64,
    /// Denoiser/decoder posterior MSE (per the variance mode).
    pub v: f64,
    /// Extrinsic variance handed back to the linear stage.
    pub v_perp: f64,
    /// True posterior-mean MSE, when the signal is known.
    pub emp_mse: Option<f64>,
    /// Cross-correlation of successive GS errors, when the signal is known.
    pub orth_stat: Option<f64>,
    /// Symbol (uncoded) or bit (coded) error rate of the hard decision.
    pub error_rate: Option<f64>,
    pub clamped: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    /// Posterior mean of the final nonlinear stage.
    pub final_estimate: Vec<Complex64>,
    pub converged: bool,
    /// Coded runs: hard bit decisions at exit.
    pub final_bits: Option<Vec<u8>>,
    messages: Option<Vec<(Vec<Complex64>, Vec<Complex64>)>>,
}

impl Trajectory {
    pub fn csv_header() -> &'static str {
        "t,rho,v,v_perp,emp_mse,orth_stat,ber"
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::csv_header())?;
        for r in &self.records {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{:.10e},{:.10e},{:.10e},{},{},{}",
                r.t,
                r.rho,
                r.v,
                r.v_perp,
                opt(r.emp_mse),
                opt(r.orth_stat),
                opt(r.error_rate)
            )?;
        }
        Ok(())
    }
}

fn posterior_mse_of(est: &[Complex64], truth: &[Complex64]) -> f64 {
    est.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / truth.len() as f64
}

// GS error of a unit-gain message against the truth, with the gain measured
// empirically.
fn gs_error(msg: &[Complex64], truth: &[Complex64]) -> Vec<Complex64> {
    let g = gs::decompose(msg, truth).expect("nonzero truth");
    msg.iter().zip(truth).map(|(m, t)| m - t * g.alpha).collect()
}

struct NleGso {
    b: f64,
    clamped: bool,
}

// Posterior variances can round to exactly zero once the receiver is
// essentially converged. The floor keeps the extrinsic chain finite and the
// linear-stage coefficient strictly below the collapse threshold.
const VAR_FLOOR: f64 = 1e-10;

fn nle_coefficient(v_post: f64, v_in: f64, policy: ClampPolicy) -> Result<NleGso> {
    let b = v_post.max(VAR_FLOOR) / v_in;
    if b < 1.0 - 1e-12 {
        return Ok(NleGso { b, clamped: false });
    }
    match policy {
        ClampPolicy::Clamp => Ok(NleGso { b: 1.0 - 1e-6, clamped: true }),
        ClampPolicy::Abort => Err(Error::VarianceCollapse { b }),
    }
}

/// Uncoded receiver: LMMSE stage and scalar MMSE denoiser, both
/// orthogonalized, from the cold start x = 0 with unit extrinsic variance.
pub fn run_uncoded(
    matrix: &SensingMatrix,
    prior: &Prior,
    snr: f64,
    y: &[Complex64],
    config: &OampConfig,
    true_x: Option<&[Complex64]>,
) -> Result<Trajectory> {
    if config.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
    }
    if matches!(config.variance_mode, VarianceMode::Genie) && true_x.is_none() {
        return Err(Error::InvalidArgument("genie variance mode needs the true signal".into()));
    }
    let n = matrix.dims().signal_len();
    let solver = LmmseSolver::new(matrix, snr, y)?;
    let constellation: Option<&Constellation> = match prior {
        Prior::Discrete(c) => Some(c),
        Prior::Gaussian => None,
    };
    let mut x_msg = vec![Complex64::default(); n];
    let mut v_perp = 1.0f64;
    let mut records = Vec::new();
    let mut messages = config.record_messages.then(Vec::new);
    let mut prev_v = f64::INFINITY;
    let mut converged = false;
    let mut final_estimate = vec![Complex64::default(); n];
    for t in 0..config.max_iters {
        let (le_post, le_var) = solver.step(&x_msg, v_perp)?;
        let b_le = gs::b_from_variance_ratio(le_var, v_perp)?;
        let (u_msg, v_u) = gs::extrinsic_update(&le_post, &x_msg, &b_le, v_perp)?;
        let rho = v_u.recip();
        let (means, v_est) = denoise_vec(prior, &u_msg, rho)?;
        let v_post = match config.variance_mode {
            VarianceMode::Estimated => v_est,
            VarianceMode::Genie => posterior_mse_of(&means, true_x.expect("checked above")),
            VarianceMode::SePredicted => scalar_mmse(prior, rho)?,
        };
        let (next_msg, next_v_perp, clamped) = if config.nle_orthogonalization {
            let gso = nle_coefficient(v_post, v_u, config.clamp_policy)?;
            let coeff = gs::GsoCoefficient { value: gso.b, method: gs::GsoMethod::VarianceRatio };
            let (m, v) = gs::extrinsic_update(&means, &u_msg, &coeff, v_u)?;
            (m, v, gso.clamped)
        } else {
            // negative control: posterior passed on untouched
            (means.clone(), v_post.max(VAR_FLOOR), false)
        };
        let (next_msg, next_v_perp) = if config.damping > 0.0 && t > 0 {
            let d = config.damping;
            let mixed: Vec<Complex64> =
                next_msg.iter().zip(&x_msg).map(|(new, old)| new * (1.0 - d) + old * d).collect();
            (mixed, (1.0 - d) * next_v_perp + d * v_perp)
        } else {
            (next_msg, next_v_perp)
        };
        let emp_mse = true_x.map(|x| posterior_mse_of(&means, x));
        let orth_stat = true_x.map(|x| {
            gs::error_correlation(&gs_error(&u_msg, x), &gs_error(&next_msg, x))
        });
        let error_rate = match (true_x, constellation) {
            (Some(x), Some(c)) => {
                let errs = means
                    .iter()
                    .zip(x)
                    .filter(|(m, t)| (c.nearest(**m) - **t).norm() > 1e-9)
                    .count();
                Some(errs as f64 / n as f64)
            }
            _ => None,
        };
        if let Some(store) = messages.as_mut() {
            store.push((u_msg.clone(), next_msg.clone()));
        }
        records.push(IterationRecord {
            t,
            rho,
            v: v_post,
            v_perp: next_v_perp,
            emp_mse,
            orth_stat,
            error_rate,
            clamped,
        });
        final_estimate = means;
        x_msg = next_msg;
        v_perp = next_v_perp;
        if (v_post - prev_v).abs() / v_post.max(f64::MIN_POSITIVE) < config.stop_eps {
            converged = true;
            break;
        }
        prev_v = v_post;
    }
    Ok(Trajectory { records, final_estimate, converged, final_bits: None, messages })
}

/// Joint receiver: the nonlinear stage is a sum-product APP decoder over the
/// QPSK mapping, run `decoder_inner_iters` passes per outer iteration with
/// optionally warm-started check messages. Parity satisfaction ends the run.
pub fn run_coded(
    matrix: &SensingMatrix,
    code: &LdpcCode,
    snr: f64,
    y: &[Complex64],
    config: &OampConfig,
    true_bits: Option<&[u8]>,
) -> Result<Trajectory> {
    let bps = 2usize;
    let n_sym = matrix.dims().signal_len();
    if code.n_bits() != bps * n_sym {
        return Err(Error::DimensionMismatch(format!(
            "code length {} vs {} QPSK symbols",
            code.n_bits(),
            n_sym
        )));
    }
    if matches!(config.variance_mode, VarianceMode::Genie) && true_bits.is_none() {
        return Err(Error::InvalidArgument("genie variance mode needs the true codeword".into()));
    }
    let true_x = match true_bits {
        Some(bits) => Some(modem::modulate(bits, bps)?),
        None => None,
    };
    let solver = LmmseSolver::new(matrix, snr, y)?;
    let mut decoder = SumProductDecoder::new(code);
    let mut x_msg = vec![Complex64::default(); n_sym];
    let mut v_perp = 1.0f64;
    let mut records = Vec::new();
    let mut messages = config.record_messages.then(Vec::new);
    let mut prev_v = f64::INFINITY;
    let mut converged = false;
    let mut final_estimate = vec![Complex64::default(); n_sym];
    let mut final_bits = Vec::new();
    for t in 0..config.max_iters {
        let (le_post, le_var) = solver.step(&x_msg, v_perp)?;
        let b_le = gs::b_from_variance_ratio(le_var, v_perp)?;
        let (u_msg, v_u) = gs::extrinsic_update(&le_post, &x_msg, &b_le, v_perp)?;
        let rho = v_u.recip();
        let llrs = modem::awgn_llrs(&u_msg, v_u, bps)?;
        if !config.decoder_warm_start {
            decoder.reset();
        }
        decoder.set_channel_llrs(&llrs)?;
        let status = decoder.run(config.decoder_inner_iters, 0.0);
        let post_llrs = decoder.posterior_llrs();
        let means = modem::symbol_means(post_llrs, bps)?;
        let v_est = modem::avg_symbol_var(post_llrs, bps)?;
        let v_post = match config.variance_mode {
            VarianceMode::Estimated => v_est,
            VarianceMode::Genie => {
                posterior_mse_of(&means, true_x.as_deref().expect("checked above"))
            }
            VarianceMode::SePredicted => {
                return Err(Error::InvalidArgument(
                    "the coded denoiser has no analytic transfer function; use estimated or genie".into(),
                ))
            }
        };
        let gso = nle_coefficient(v_post, v_u, config.clamp_policy)?;
        let coeff = gs::GsoCoefficient { value: gso.b, method: gs::GsoMethod::VarianceRatio };
        let (next_msg, next_v_perp) = gs::extrinsic_update(&means, &u_msg, &coeff, v_u)?;
        let hard = modem::hard_bits(post_llrs);
        let error_rate = true_bits.map(|bits| {
            hard.iter().zip(bits).filter(|(a, b)| a != b).count() as f64 / bits.len() as f64
        });
        let emp_mse = true_x.as_deref().map(|x| posterior_mse_of(&means, x));
        let orth_stat = true_x.as_deref().map(|x| {
            gs::error_correlation(&gs_error(&u_msg, x), &gs_error(&next_msg, x))
        });
        if let Some(store) = messages.as_mut() {
            store.push((u_msg.clone(), next_msg.clone()));
        }
        records.push(IterationRecord {
            t,
            rho,
            v: v_post,
            v_perp: next_v_perp,
            emp_mse,
            orth_stat,
            error_rate,
            clamped: gso.clamped,
        });
        final_estimate = means;
        final_bits = hard;
        x_msg = next_msg;
        v_perp = next_v_perp;
        if status.parity_ok {
            converged = true;
            break;
        }
        if (v_post - prev_v).abs() / v_post.max(f64::MIN_POSITIVE) < config.stop_eps {
            converged = true;
            break;
        }
        prev_v = v_post;
    }
    Ok(Trajectory { records, final_estimate, converged, final_bits: Some(final_bits), messages })
}

/// Per-iteration normalized inner products of successive GS errors around
/// the nonlinear stage. Needs a trajectory recorded with
/// `record_messages = true`.
pub fn orthogonality_probe(traj: &Trajectory, true_x: &[Complex64]) -> Result<Vec<f64>> {
    let Some(messages) = traj.messages.as_ref() else {
        return Err(Error::InvalidArgument(
            "trajectory was not recorded with record_messages".into(),
        ));
    };
    Ok(messages
        .iter()
        .map(|(input, output)| {
            gs::error_correlation(&gs_error(input, true_x), &gs_error(output, true_x))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_complex;
    use crate::seeds::{stream_rng, TAG_MATRIX, TAG_NOISE, TAG_SIGNAL};
    use crate::spectrum::{geometric_singular_values, SystemDims, UnitaryEnsemble};

    fn simulate(
        n: usize,
        kappa: f64,
        snr: f64,
        seed: u64,
        prior: &Prior,
    ) -> (SensingMatrix, Vec<Complex64>, Vec<Complex64>) {
        let dims = SystemDims::new(n, n).unwrap();
        let d = geometric_singular_values(dims, kappa).unwrap();
        let mut rng_m = stream_rng(seed, TAG_MATRIX, 0);
        let a = SensingMatrix::sample(&d, dims, UnitaryEnsemble::HaarRight, &mut rng_m).unwrap();
        let mut rng_x = stream_rng(seed, TAG_SIGNAL, 0);
        let mut rng_z = stream_rng(seed, TAG_NOISE, 0);
        let x = prior.sample_vec(n, &mut rng_x);
        let sigma = snr.sqrt().recip();
        let mut y = a.apply(&x);
        for z in &mut y {
            *z += standard_complex(&mut rng_z) * sigma;
        }
        (a, x, y)
    }

    #[test]
    fn identity_high_snr_qpsk_is_immediately_clean() {
        let n = 256;
        let snr: f64 = 100.0;
        let dims = SystemDims::new(n, n).unwrap();
        let mut rng = stream_rng(1, TAG_MATRIX, 0);
        let a = SensingMatrix::sample(&vec![1.0; n], dims, UnitaryEnsemble::Identity, &mut rng)
            .unwrap();
        let prior = Prior::qpsk();
        let mut rng_x = stream_rng(1, TAG_SIGNAL, 0);
        let mut rng_z = stream_rng(1, TAG_NOISE, 0);
        let x = prior.sample_vec(n, &mut rng_x);
        let sigma = snr.sqrt().recip();
        let y: Vec<Complex64> =
            x.iter().map(|s| s + standard_complex(&mut rng_z) * sigma).collect();
        let cfg = OampConfig { max_iters: 5, ..Default::default() };
        let traj = run_uncoded(&a, &prior, snr, &y, &cfg, Some(&x)).unwrap();
        assert!(traj.records.len() <= 3, "took {} iterations", traj.records.len());
        assert_eq!(traj.records.last().unwrap().error_rate, Some(0.0));
    }

    #[test]
    fn noiseless_gaussian_recovers_exactly() {
        let n = 128;
        let (a, x, _) = simulate(n, 4.0, 1.0, 2, &Prior::Gaussian);
        let y = a.apply(&x); // no noise; treat snr as very large
        let cfg = OampConfig { max_iters: 60, stop_eps: 1e-12, ..Default::default() };
        let traj = run_uncoded(&a, &Prior::Gaussian, 1e10, &y, &cfg, Some(&x)).unwrap();
        let mse = traj.records.last().unwrap().emp_mse.unwrap();
        assert!(mse < 1e-6, "mse {mse}");
    }

    #[test]
    fn variance_modes_agree_at_moderate_size() {
        let n = 512;
        let snr = 10f64.powf(0.17);
        let prior = Prior::qpsk();
        let (a, x, y) = simulate(n, 10.0, snr, 3, &prior);
        let base = OampConfig { max_iters: 15, stop_eps: 1e-9, ..Default::default() };
        let est = run_uncoded(&a, &prior, snr, &y, &base, Some(&x)).unwrap();
        let genie = run_uncoded(
            &a,
            &prior,
            snr,
            &y,
            &OampConfig { variance_mode: VarianceMode::Genie, ..base.clone() },
            Some(&x),
        )
        .unwrap();
        let v_est = est.records.last().unwrap().v;
        let v_gen = genie.records.last().unwrap().v;
        assert!(
            (v_est - v_gen).abs() / v_gen < 0.25,
            "estimated {v_est} vs genie {v_gen}"
        );
    }

    #[test]
    fn orthogonality_probe_within_monte_carlo_bound() {
        let n = 2048;
        let snr = 10f64.powf(0.17);
        let prior = Prior::qpsk();
        let (a, x, y) = simulate(n, 10.0, snr, 5, &prior);
        let cfg = OampConfig { max_iters: 8, record_messages: true, ..Default::default() };
        let traj = run_uncoded(&a, &prior, snr, &y, &cfg, Some(&x)).unwrap();
        let stats = orthogonality_probe(&traj, &x).unwrap();
        for (t, (stat, rec)) in stats.iter().zip(&traj.records).enumerate() {
            let sigma = (rec.v_perp.max(1e-9) / rec.rho.max(1e-9) / (2.0 * n as f64)).sqrt();
            assert!(stat.abs() < 4.0 * sigma + 2e-3, "t={t}: stat {stat} vs sigma {sigma}");
        }
    }

    #[test]
    fn skipping_nle_orthogonalization_breaks_the_probe() {
        let n = 2048;
        let snr = 10f64.powf(0.17);
        let prior = Prior::qpsk();
        let (a, x, y) = simulate(n, 10.0, snr, 6, &prior);
        let cfg = OampConfig {
            max_iters: 6,
            record_messages: true,
            nle_orthogonalization: false,
            ..Default::default()
        };
        let traj = run_uncoded(&a, &prior, snr, &y, &cfg, Some(&x)).unwrap();
        let stats = orthogonality_probe(&traj, &x).unwrap();
        // without the correction the input/output errors stay correlated at
        // the scale of the posterior MSE
        let worst = stats.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
        let v_last = traj.records.last().unwrap().v;
        assert!(worst > 0.2 * v_last, "worst statistic {worst} vs v {v_last}");
    }

    #[test]
    fn coded_receiver_cleans_up_at_high_snr() {
        use crate::ldpc::DegreeDistribution;
        let n_sym = 512;
        let snr = 10f64.powf(0.6);
        let dist = DegreeDistribution::regular(3, 6);
        let mut rng_c = stream_rng(9, crate::seeds::TAG_CODE, 0);
        let code = LdpcCode::build(&dist, 2 * n_sym, &mut rng_c).unwrap();
        let dims = SystemDims::new(n_sym, n_sym).unwrap();
        let d = geometric_singular_values(dims, 10.0).unwrap();
        let mut rng_m = stream_rng(9, TAG_MATRIX, 0);
        let a = SensingMatrix::sample(&d, dims, UnitaryEnsemble::HaarRight, &mut rng_m).unwrap();
        let mut rng_z = stream_rng(9, TAG_NOISE, 0);
        let bits = code.random_codeword(&mut rng_z);
        let x = modem::modulate(&bits, 2).unwrap();
        let sigma = snr.sqrt().recip();
        let mut y = a.apply(&x);
        for z in &mut y {
            *z += standard_complex(&mut rng_z) * sigma;
        }
        let cfg = OampConfig { max_iters: 60, ..Default::default() };
        let traj = run_coded(&a, &code, snr, &y, &cfg, Some(&bits)).unwrap();
        let last = traj.records.last().unwrap();
        assert!(traj.converged, "no convergence in {} iters", traj.records.len());
        assert_eq!(last.error_rate, Some(0.0), "ber {:?}", last.error_rate);
        assert_eq!(traj.final_bits.as_deref(), Some(&bits[..]));
    }

    #[test]
    fn coded_all_zero_codeword_trivial_case() {
        use crate::ldpc::DegreeDistribution;
        let n_sym = 128;
        let snr: f64 = 1e4;
        let dist = DegreeDistribution::regular(3, 6);
        let mut rng_c = stream_rng(10, crate::seeds::TAG_CODE, 0);
        let code = LdpcCode::build(&dist, 2 * n_sym, &mut rng_c).unwrap();
        let dims = SystemDims::new(n_sym, n_sym).unwrap();
        let mut rng_m = stream_rng(10, TAG_MATRIX, 0);
        let a = SensingMatrix::sample(&vec![1.0; n_sym], dims, UnitaryEnsemble::Identity, &mut rng_m)
            .unwrap();
        let bits = vec![0u8; 2 * n_sym];
        let x = modem::modulate(&bits, 2).unwrap();
        let mut rng_z = stream_rng(10, TAG_NOISE, 0);
        let sigma = (snr as f64).sqrt().recip();
        let mut y = a.apply(&x);
        for z in &mut y {
            *z += standard_complex(&mut rng_z) * sigma;
        }
        let cfg = OampConfig::default();
        let traj = run_coded(&a, &code, snr, &y, &cfg, Some(&bits)).unwrap();
        assert_eq!(traj.records.len(), 1, "one outer iteration suffices");
        assert_eq!(traj.records[0].error_rate, Some(0.0));
    }
}
