//! Measured decoder transfer curve phi_C(rho) and the curve-matching
//! (decoding tunnel) verifier.

use num_complex::Complex64;
use rayon::prelude::*;

use super::code::LdpcCode;
use super::decoder::SumProductDecoder;
use crate::denoiser::{scalar_mmse, ConstellationKind, Prior};
use crate::error::{Error, Result};
use crate::le;
use crate::linalg::standard_complex;
use crate::modem;
use crate::rates::LN_2;
use crate::seeds::{stream_rng, TAG_CURVE};
use crate::spectrum::Spectrum;

#[derive(Clone, Copy, Debug)]
pub struct CurveConfig {
    pub trials: usize,
    pub max_bp_iters: usize,
    /// Transmit the all-zero codeword (valid for output-symmetric mappings);
    /// random codewords otherwise.
    pub all_zero_shortcut: bool,
    pub seed: u64,
    /// Extra grid points inserted where the measured curve moves fastest.
    pub refine_rounds: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self { trials: 200, max_bp_iters: 200, all_zero_shortcut: false, seed: 0, refine_rounds: 1 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub rho: f64,
    pub phi_c: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Monte-Carlo samples of (rho, phi_C(rho)), ascending in rho.
#[derive(Clone, Debug)]
pub struct DecoderCurve {
    pub points: Vec<CurvePoint>,
}

/// Bits per modulated symbol for the supported mappings.
fn bits_per_symbol(mapping: &Prior) -> Result<usize> {
    match mapping {
        Prior::Discrete(c) if c.kind() == ConstellationKind::Qpsk => Ok(2),
        Prior::Discrete(c) if c.kind() == ConstellationKind::Bpsk => Ok(1),
        _ => Err(Error::InvalidArgument(
            "decoder curves support BPSK and QPSK mappings".into(),
        )),
    }
}

fn curve_point(
    code: &LdpcCode,
    bps: usize,
    rho: f64,
    point_idx: usize,
    cfg: &CurveConfig,
) -> CurvePoint {
    let n_sym = code.n_bits() / bps;
    let noise_var = rho.recip();
    let noise_std = noise_var.sqrt();
    let per_trial: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng =
                stream_rng(cfg.seed, TAG_CURVE, ((point_idx as u64) << 32) | trial as u64);
            let bits = if cfg.all_zero_shortcut {
                vec![0u8; code.n_bits()]
            } else {
                code.random_codeword(&mut rng)
            };
            let x = modem::modulate(&bits, bps).expect("supported mapping");
            // u = x + w with w ~ CN(0, 1/rho), the scaled form of the
            // sqrt(rho) x + z channel
            let u: Vec<Complex64> =
                x.iter().map(|s| s + standard_complex(&mut rng) * noise_std).collect();
            let llrs = modem::awgn_llrs(&u, noise_var, bps).expect("supported mapping");
            let mut dec = SumProductDecoder::new(code);
            dec.set_channel_llrs(&llrs).expect("llr length matches code");
            dec.run(cfg.max_bp_iters, 1e-6);
            let means = modem::symbol_means(dec.posterior_llrs(), bps).expect("supported mapping");
            means.iter().zip(&x).map(|(m, t)| (m - t).norm_sqr()).sum::<f64>() / n_sym as f64
        })
        .collect();
    let mean = per_trial.iter().sum::<f64>() / cfg.trials as f64;
    let var = per_trial.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (cfg.trials.max(2) - 1) as f64;
    CurvePoint { rho, phi_c: mean, stderr: (var / cfg.trials as f64).sqrt(), trials: cfg.trials }
}

/// Measures phi_C(rho) = (1/N) mmse(x | sqrt(rho) x + z, code) by APP
/// decoding over the grid, with standard errors across codeword trials.
pub fn trace_decoder_curve(
    code: &LdpcCode,
    mapping: &Prior,
    rho_grid: &[f64],
    cfg: &CurveConfig,
) -> Result<DecoderCurve> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if code.n_bits() % bits_per_symbol(mapping)? != 0 {
        return Err(Error::DimensionMismatch(
            "code length is not a multiple of bits per symbol".into(),
        ));
    }
    let bps = bits_per_symbol(mapping)?;
    let mut points: Vec<CurvePoint> = rho_grid
        .iter()
        .enumerate()
        .map(|(i, &rho)| curve_point(code, bps, rho, i, cfg))
        .collect();
    points.sort_by(|a, b| a.rho.partial_cmp(&b.rho).expect("finite rho"));
    // refine where the curve drops fastest (the waterfall knee)
    let mut next_idx = rho_grid.len();
    for _ in 0..cfg.refine_rounds {
        let mut inserts = Vec::new();
        let mut drops: Vec<(f64, f64)> = points
            .windows(2)
            .map(|w| ((w[0].phi_c - w[1].phi_c).abs(), 0.5 * (w[0].rho + w[1].rho)))
            .collect();
        drops.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite drops"));
        for &(_, mid) in drops.iter().take(4) {
            inserts.push(curve_point(code, bps, mid, next_idx, cfg));
            next_idx += 1;
        }
        points.extend(inserts);
        points.sort_by(|a, b| a.rho.partial_cmp(&b.rho).expect("finite rho"));
    }
    Ok(DecoderCurve { points })
}

/// Default measurement grid: log-spaced SINRs from 1e-3 up to the practical
/// tunnel end eta(epsilon).
pub fn default_rho_grid(spec: &Spectrum, epsilon: f64, points: usize) -> Result<Vec<f64>> {
    let hi = le::extrinsic_sinr(spec, epsilon)?;
    let lo: f64 = 1e-3;
    Ok((0..points)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (points - 1) as f64).exp())
        .collect())
}

#[derive(Clone, Debug)]
pub struct MatchingReport {
    /// The decoding tunnel is open over [0, eta(epsilon)].
    pub open: bool,
    pub rho_max: f64,
    pub first_violation: Option<(f64, f64)>,
    /// (rho, bound - (phi_c + z sigma)) margin profile on the curve grid.
    pub margins: Vec<(f64, f64)>,
    /// Rate estimate: area under the measured curve in bits. Tails beyond
    /// the grid are not extrapolated.
    pub r_oamp_bits: f64,
}

/// Verifies the strict-dominance tunnel phi_C < min(eta^{-1}, phi_S) on
/// [0, eta(epsilon)], with `z_score` standard errors of measurement slack.
pub fn check_matching(
    curve: &DecoderCurve,
    spec: &Spectrum,
    prior: &Prior,
    epsilon: f64,
    z_score: f64,
) -> Result<MatchingReport> {
    if curve.points.is_empty() {
        return Err(Error::InvalidArgument("empty decoder curve".into()));
    }
    let rho_max = le::extrinsic_sinr(spec, epsilon)?;
    let covered = curve.points.last().expect("nonempty").rho;
    if covered < rho_max * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "curve covers rho <= {covered:.4}, tunnel needs {rho_max:.4}"
        )));
    }
    let mut margins = Vec::new();
    let mut first_violation = None;
    for p in curve.points.iter().filter(|p| p.rho <= rho_max) {
        let bound = scalar_mmse(prior, p.rho)?.min(le::extrinsic_sinr_inverse(spec, p.rho)?);
        // a violation must exceed the measurement error bars; near rho = 0
        // the true coding gain vanishes and sits below any trial budget
        let margin = bound - (p.phi_c - z_score * p.stderr);
        if margin <= 0.0 && first_violation.is_none() {
            first_violation = Some((p.rho, margin));
        }
        margins.push((p.rho, margin));
    }
    // area under the measured curve: head (phi_C(0) = 1 for symmetric
    // priors) plus trapezoids; once the grid passes the waterfall the
    // unmeasured tail is exponentially small
    let pts = &curve.points;
    let mut area = 0.5 * (1.0 + pts[0].phi_c) * pts[0].rho;
    for w in pts.windows(2) {
        area += 0.5 * (w[0].phi_c + w[1].phi_c) * (w[1].rho - w[0].rho);
    }
    Ok(MatchingReport {
        open: first_violation.is_none(),
        rho_max,
        first_violation,
        margins,
        r_oamp_bits: area / LN_2,
    })
}

/// Smallest SNR (dB) at which the tunnel opens, scanning then bisecting;
/// the curve itself is SNR-independent.
pub fn matching_threshold_db(
    curve: &DecoderCurve,
    profile: &Spectrum,
    prior: &Prior,
    epsilon: f64,
    z_score: f64,
    lo_db: f64,
    hi_db: f64,
) -> Result<f64> {
    let open_at = |db: f64| -> Result<bool> {
        let spec = profile.with_snr(10f64.powf(db / 10.0))?;
        Ok(check_matching(curve, &spec, prior, epsilon, z_score)?.open)
    };
    if open_at(lo_db)? {
        return Err(Error::OutOfRange { target: lo_db, lo: lo_db, hi: hi_db });
    }
    if !open_at(hi_db)? {
        return Err(Error::OutOfRange { target: hi_db, lo: lo_db, hi: hi_db });
    }
    let (mut lo, mut hi) = (lo_db, hi_db);
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if open_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
