//! Bit/symbol conversions for BPSK and Gray-labeled QPSK, and the exact
//! per-rail LLR decomposition for a symbol observed in circular Gaussian
//! noise.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Rail amplitude: 1 for BPSK, 1/sqrt(2) per quadrature for QPSK.
fn rail_amplitude(bits_per_symbol: usize) -> Result<f64> {
    match bits_per_symbol {
        1 => Ok(1.0),
        2 => Ok(std::f64::consts::FRAC_1_SQRT_2),
        other => Err(Error::InvalidArgument(format!("unsupported bits per symbol {other}"))),
    }
}

/// Maps bits (0 -> +amplitude) to symbols; QPSK packs consecutive bit pairs
/// into (I, Q).
pub fn modulate(bits: &[u8], bits_per_symbol: usize) -> Result<Vec<Complex64>> {
    let a = rail_amplitude(bits_per_symbol)?;
    if bits.len() % bits_per_symbol != 0 {
        return Err(Error::DimensionMismatch("bit count is not a multiple of bits/symbol".into()));
    }
    Ok(match bits_per_symbol {
        1 => bits.iter().map(|&b| Complex64::new(a * (1.0 - 2.0 * b as f64), 0.0)).collect(),
        _ => bits
            .chunks_exact(2)
            .map(|p| {
                Complex64::new(a * (1.0 - 2.0 * p[0] as f64), a * (1.0 - 2.0 * p[1] as f64))
            })
            .collect(),
    })
}

/// Exact per-rail channel LLRs for u = x + w, w ~ CN(0, noise_var):
/// LLR = 4 a u_rail / noise_var.
pub fn awgn_llrs(obs: &[Complex64], noise_var: f64, bits_per_symbol: usize) -> Result<Vec<f64>> {
    if !(noise_var > 0.0) {
        return Err(Error::InvalidArgument(format!("noise_var must be positive, got {noise_var}")));
    }
    let a = rail_amplitude(bits_per_symbol)?;
    let g = 4.0 * a / noise_var;
    Ok(match bits_per_symbol {
        1 => obs.iter().map(|u| g * u.re).collect(),
        _ => {
            let mut llrs = Vec::with_capacity(2 * obs.len());
            for u in obs {
                llrs.push(g * u.re);
                llrs.push(g * u.im);
            }
            llrs
        }
    })
}

/// Symbol posterior means from per-bit posterior LLRs.
pub fn symbol_means(llrs: &[f64], bits_per_symbol: usize) -> Result<Vec<Complex64>> {
    let a = rail_amplitude(bits_per_symbol)?;
    Ok(match bits_per_symbol {
        1 => llrs.iter().map(|l| Complex64::new(a * (l / 2.0).tanh(), 0.0)).collect(),
        _ => llrs
            .chunks_exact(2)
            .map(|p| Complex64::new(a * (p[0] / 2.0).tanh(), a * (p[1] / 2.0).tanh()))
            .collect(),
    })
}

/// Average per-symbol posterior variance 1 - sum of squared rail means.
pub fn avg_symbol_var(llrs: &[f64], bits_per_symbol: usize) -> Result<f64> {
    let a = rail_amplitude(bits_per_symbol)?;
    let a2 = a * a;
    let var_sum: f64 = match bits_per_symbol {
        1 => llrs
            .iter()
            .map(|l| {
                let m = (l / 2.0).tanh();
                1.0 - m * m
            })
            .sum(),
        _ => llrs
            .chunks_exact(2)
            .map(|p| {
                let mi = (p[0] / 2.0).tanh();
                let mq = (p[1] / 2.0).tanh();
                1.0 - a2 * (mi * mi + mq * mq)
            })
            .sum(),
    };
    let n_sym = llrs.len() / bits_per_symbol;
    Ok(var_sum / n_sym as f64)
}

pub fn hard_bits(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}
