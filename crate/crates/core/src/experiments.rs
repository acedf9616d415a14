//! Seeded Monte-Carlo experiment drivers shared by the CLI and the
//! verification suites. Per-trial results are reduced in trial order, so
//! outputs are independent of scheduling.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::denoiser::Prior;
use crate::error::Result;
use crate::ldpc::LdpcCode;
use crate::linalg::standard_complex;
use crate::modem;
use crate::oamp::{self, OampConfig, Trajectory};
use crate::seeds::{stream_rng, TAG_MATRIX, TAG_NOISE, TAG_SIGNAL};
use crate::spectrum::{geometric_singular_values, SensingMatrix, SystemDims, UnitaryEnsemble};

#[derive(Clone, Debug)]
pub struct UncodedMcConfig {
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub snr_db: f64,
    pub prior: Prior,
    pub trials: usize,
    pub seed: u64,
    pub ensemble: UnitaryEnsemble,
    pub oamp: OampConfig,
}

#[derive(Clone, Debug)]
pub struct UncodedMcResult {
    /// Genie-measured posterior MSE per iteration, averaged over trials
    /// (trials that stopped early hold their last value).
    pub avg_emp_mse: Vec<f64>,
    /// Measured SINR per iteration, averaged over trials.
    pub avg_rho: Vec<f64>,
    /// Average converged posterior MSE.
    pub final_mse: f64,
    /// Average measurement-side error (1/N)||A(x - xhat)||^2 at exit.
    pub final_measurement_mse: f64,
    /// Average symbol error rate at exit (discrete priors).
    pub final_ser: Option<f64>,
    pub trajectories: Vec<Trajectory>,
}

pub fn run_uncoded_mc(cfg: &UncodedMcConfig) -> Result<UncodedMcResult> {
    let dims = SystemDims::new(cfg.n, cfg.m)?;
    let singulars = geometric_singular_values(dims, cfg.kappa)?;
    let snr = 10f64.powf(cfg.snr_db / 10.0);
    let sigma = snr.sqrt().recip();
    let per_trial: Vec<Result<(Trajectory, f64)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let trial = trial as u64;
            let mut rng_m = stream_rng(cfg.seed, TAG_MATRIX, trial);
            let a = SensingMatrix::sample(&singulars, dims, cfg.ensemble, &mut rng_m)?;
            let mut rng_x = stream_rng(cfg.seed, TAG_SIGNAL, trial);
            let mut rng_z = stream_rng(cfg.seed, TAG_NOISE, trial);
            let x = cfg.prior.sample_vec(cfg.n, &mut rng_x);
            let mut y = a.apply(&x);
            for z in &mut y {
                *z += standard_complex(&mut rng_z) * sigma;
            }
            let traj = oamp::run_uncoded(&a, &cfg.prior, snr, &y, &cfg.oamp, Some(&x))?;
            let resid: Vec<Complex64> =
                x.iter().zip(&traj.final_estimate).map(|(t, e)| t - e).collect();
            let meas = a.apply(&resid).iter().map(|z| z.norm_sqr()).sum::<f64>() / cfg.n as f64;
            Ok((traj, meas))
        })
        .collect();
    let mut trajectories = Vec::with_capacity(cfg.trials);
    let mut meas_sum = 0.0;
    for r in per_trial {
        let (traj, meas) = r?;
        meas_sum += meas;
        trajectories.push(traj);
    }
    let horizon = trajectories.iter().map(|t| t.records.len()).max().unwrap_or(0);
    let mut avg_emp_mse = vec![0.0; horizon];
    let mut avg_rho = vec![0.0; horizon];
    for traj in &trajectories {
        for t in 0..horizon {
            let rec = traj.records.get(t).or_else(|| traj.records.last()).expect("nonempty");
            avg_emp_mse[t] += rec.emp_mse.expect("genie data present") / cfg.trials as f64;
            avg_rho[t] += rec.rho / cfg.trials as f64;
        }
    }
    let final_mse = trajectories
        .iter()
        .map(|t| t.records.last().expect("nonempty").emp_mse.expect("genie data"))
        .sum::<f64>()
        / cfg.trials as f64;
    let final_ser = trajectories
        .iter()
        .map(|t| t.records.last().expect("nonempty").error_rate)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.iter().sum::<f64>() / cfg.trials as f64);
    Ok(UncodedMcResult {
        avg_emp_mse,
        avg_rho,
        final_mse,
        final_measurement_mse: meas_sum / cfg.trials as f64,
        final_ser,
        trajectories,
    })
}

#[derive(Clone, Debug)]
pub struct CodedRunConfig {
    pub n_sym: usize,
    pub m_obs: usize,
    pub kappa: f64,
    pub snr_db: f64,
    pub codewords: usize,
    pub seed: u64,
    pub oamp: OampConfig,
    /// Redraw the sensing matrix for every codeword; a single shared draw is
    /// the quasi-static alternative that avoids repeated large
    /// orthogonalizations.
    pub resample_matrix: bool,
}

#[derive(Clone, Debug)]
pub struct CodedBerResult {
    pub ber: f64,
    pub fer: f64,
    pub bit_errors: usize,
    pub total_bits: usize,
    pub per_codeword: Vec<CodewordOutcome>,
}

#[derive(Clone, Copy, Debug)]
pub struct CodewordOutcome {
    pub bit_errors: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// BER experiment for the joint receiver over one built code.
pub fn run_coded_ber(code: &LdpcCode, cfg: &CodedRunConfig) -> Result<CodedBerResult> {
    let dims = SystemDims::new(cfg.n_sym, cfg.m_obs)?;
    let singulars = geometric_singular_values(dims, cfg.kappa)?;
    let snr = 10f64.powf(cfg.snr_db / 10.0);
    let sigma = snr.sqrt().recip();
    let shared_matrix = if cfg.resample_matrix {
        None
    } else {
        let mut rng_m = stream_rng(cfg.seed, TAG_MATRIX, 0);
        Some(SensingMatrix::sample(&singulars, dims, UnitaryEnsemble::HaarRight, &mut rng_m)?)
    };
    let mut per_codeword = Vec::with_capacity(cfg.codewords);
    let mut bit_errors = 0usize;
    let mut frame_errors = 0usize;
    for trial in 0..cfg.codewords as u64 {
        let matrix = match &shared_matrix {
            Some(a) => a.clone(),
            None => {
                let mut rng_m = stream_rng(cfg.seed, TAG_MATRIX, trial);
                SensingMatrix::sample(&singulars, dims, UnitaryEnsemble::HaarRight, &mut rng_m)?
            }
        };
        let mut rng_x = stream_rng(cfg.seed, TAG_SIGNAL, trial);
        let mut rng_z = stream_rng(cfg.seed, TAG_NOISE, trial);
        let bits = code.random_codeword(&mut rng_x);
        let x = modem::modulate(&bits, 2)?;
        let mut y = matrix.apply(&x);
        for z in &mut y {
            *z += standard_complex(&mut rng_z) * sigma;
        }
        let traj = oamp::run_coded(&matrix, code, snr, &y, &cfg.oamp, Some(&bits))?;
        let errs = traj
            .final_bits
            .as_ref()
            .expect("coded trajectory carries bits")
            .iter()
            .zip(&bits)
            .filter(|(a, b)| a != b)
            .count();
        bit_errors += errs;
        frame_errors += usize::from(errs > 0);
        per_codeword.push(CodewordOutcome {
            bit_errors: errs,
            iterations: traj.records.len(),
            converged: traj.converged,
        });
    }
    let total_bits = cfg.codewords * code.n_bits();
    Ok(CodedBerResult {
        ber: bit_errors as f64 / total_bits as f64,
        fer: frame_errors as f64 / cfg.codewords as f64,
        bit_errors,
        total_bits,
        per_codeword,
    })
}
