//! Signal priors, their scalar MMSE denoisers, and the MMSE transfer
//! functions under the observation model u = x + xi, xi ~ CN(0, 1/rho).

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::standard_complex;
use crate::quad::integrate;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstellationKind {
    Bpsk,
    Qpsk,
    Psk8,
    Qam16,
    Custom,
}

/// Discrete symbol set with probabilities, normalized to unit power.
#[derive(Clone, Debug)]
pub struct Constellation {
    points: Vec<Complex64>,
    probs: Vec<f64>,
    kind: ConstellationKind,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>, probs: Vec<f64>) -> Result<Self> {
        Self::with_kind(points, probs, ConstellationKind::Custom)
    }

    fn with_kind(points: Vec<Complex64>, probs: Vec<f64>, kind: ConstellationKind) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::InvalidArgument("constellation points/probs mismatch".into()));
        }
        let psum: f64 = probs.iter().sum();
        if (psum - 1.0).abs() > 1e-9 || probs.iter().any(|&q| q < 0.0) {
            return Err(Error::InvalidArgument("probabilities must be nonnegative and sum to 1".into()));
        }
        let power: f64 = points.iter().zip(&probs).map(|(s, q)| q * s.norm_sqr()).sum();
        if (power - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("constellation power {power} != 1")));
        }
        Ok(Self { points, probs, kind })
    }

    fn uniform(points: Vec<Complex64>, kind: ConstellationKind) -> Self {
        let n = points.len();
        let probs = vec![1.0 / n as f64; n];
        Self::with_kind(points, probs, kind).expect("factory constellation is normalized")
    }

    pub fn bpsk() -> Self {
        Self::uniform(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], ConstellationKind::Bpsk)
    }

    /// Symbols {±1±i}/sqrt(2).
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::uniform(
            vec![
                Complex64::new(a, a),
                Complex64::new(a, -a),
                Complex64::new(-a, a),
                Complex64::new(-a, -a),
            ],
            ConstellationKind::Qpsk,
        )
    }

    pub fn psk8() -> Self {
        let pts = (0..8)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::PI * (2 * k) as f64 / 8.0))
            .collect();
        Self::uniform(pts, ConstellationKind::Psk8)
    }

    pub fn qam16() -> Self {
        let scale = 10f64.sqrt().recip();
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let mut pts = Vec::with_capacity(16);
        for &re in &levels {
            for &im in &levels {
                pts.push(Complex64::new(re * scale, im * scale));
            }
        }
        Self::uniform(pts, ConstellationKind::Qam16)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn entropy_nats(&self) -> f64 {
        -self.probs.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>()
    }

    pub fn nearest(&self, u: Complex64) -> Complex64 {
        let mut best = self.points[0];
        let mut dist = f64::INFINITY;
        for &s in &self.points {
            let d = (u - s).norm_sqr();
            if d < dist {
                dist = d;
                best = s;
            }
        }
        best
    }
}

/// Signal prior: CN(0,1) or a discrete constellation.
#[derive(Clone, Debug)]
pub enum Prior {
    Gaussian,
    Discrete(Constellation),
}

impl Prior {
    pub fn qpsk() -> Self {
        Prior::Discrete(Constellation::qpsk())
    }

    pub fn bpsk() -> Self {
        Prior::Discrete(Constellation::bpsk())
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Prior::Gaussian)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Complex64 {
        match self {
            Prior::Gaussian => standard_complex(rng),
            Prior::Discrete(c) => {
                let mut t: f64 = rng.gen();
                for (s, q) in c.points.iter().zip(&c.probs) {
                    t -= q;
                    if t <= 0.0 {
                        return *s;
                    }
                }
                *c.points.last().expect("nonempty constellation")
            }
        }
    }

    pub fn sample_vec(&self, n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// Source entropy in nats; the noiseless rate ceiling for discrete priors.
    pub fn entropy_nats(&self) -> Option<f64> {
        match self {
            Prior::Gaussian => None,
            Prior::Discrete(c) => Some(c.entropy_nats()),
        }
    }
}

/// Posterior mean and variance for one observation.
#[derive(Clone, Copy, Debug)]
pub struct PosteriorMoments {
    pub mean: Complex64,
    pub var: f64,
    /// Set when posterior weights underflowed and the output fell back to the
    /// nearest-atom hard decision.
    pub hard_fallback: bool,
}

/// Scalar MMSE denoiser for u = x + xi with xi ~ CN(0, 1/rho).
pub fn denoise(prior: &Prior, u: Complex64, rho: f64) -> Result<PosteriorMoments> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    match prior {
        Prior::Gaussian => Ok(PosteriorMoments {
            mean: u * (rho / (1.0 + rho)),
            var: 1.0 / (1.0 + rho),
            hard_fallback: false,
        }),
        Prior::Discrete(c) => {
            // log weights, stabilized by their maximum
            let mut logw: Vec<f64> = c
                .points
                .iter()
                .zip(&c.probs)
                .map(|(s, q)| -rho * (u - s).norm_sqr() + q.ln())
                .collect();
            let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !mx.is_finite() {
                return Ok(PosteriorMoments { mean: c.nearest(u), var: 0.0, hard_fallback: true });
            }
            let mut z = 0.0;
            for lw in &mut logw {
                *lw = (*lw - mx).exp();
                z += *lw;
            }
            let mut mean = Complex64::default();
            let mut second = 0.0;
            for (w, s) in logw.iter().zip(&c.points) {
                mean += s * (w / z);
                second += s.norm_sqr() * w / z;
            }
            let var = (second - mean.norm_sqr()).max(0.0);
            Ok(PosteriorMoments { mean, var, hard_fallback: false })
        }
    }
}

/// Denoises a whole vector; returns the means and the average posterior
/// variance (the receiver-side MSE estimate).
pub fn denoise_vec(prior: &Prior, us: &[Complex64], rho: f64) -> Result<(Vec<Complex64>, f64)> {
    let mut means = Vec::with_capacity(us.len());
    let mut var_sum = 0.0;
    for &u in us {
        let m = denoise(prior, u, rho)?;
        means.push(m.mean);
        var_sum += m.var;
    }
    Ok((means, var_sum / us.len() as f64))
}

const RHO_TAIL_SWITCH: f64 = 700.0;

// Floor keeping 1/phi finite once the transfer function saturates below
// double precision.
const PHI_FLOOR: f64 = 1e-300;

/// MMSE transfer function phi(rho) = mmse(x | sqrt(rho) x + z).
///
/// Gaussian and the BPSK/QPSK one-dimensional reductions are closed or
/// single-integral forms; general constellations go through the
/// two-dimensional Gauss-Hermite mixture evaluation.
pub fn scalar_mmse(prior: &Prior, rho: f64) -> Result<f64> {
    if rho < 0.0 {
        return Err(Error::InvalidArgument(format!("rho must be nonnegative, got {rho}")));
    }
    if rho == 0.0 {
        return Ok(1.0);
    }
    match prior {
        Prior::Gaussian => Ok(1.0 / (1.0 + rho)),
        Prior::Discrete(c) => {
            if rho > RHO_TAIL_SWITCH {
                return Ok(mmse_tail_bound(c, rho).max(PHI_FLOOR));
            }
            let value = match c.kind {
                ConstellationKind::Qpsk => bpsk_rail_mmse(rho),
                ConstellationKind::Bpsk => bpsk_rail_mmse(2.0 * rho),
                ConstellationKind::Qam16 => qam16_rail_mmse(rho),
                _ => scalar_mmse_general(c, rho),
            };
            Ok(value.max(PHI_FLOOR))
        }
    }
}

// Half-width of the standard-normal integration window; the weight beyond it
// is ~1e-36.
const NORMAL_SPAN: f64 = 9.0;

fn expect_std_normal_adaptive(f: impl Fn(f64) -> f64, abs_tol: f64) -> f64 {
    let c = (2.0 * std::f64::consts::PI).sqrt().recip();
    integrate(|y| c * (-0.5 * y * y).exp() * f(y), -NORMAL_SPAN, NORMAL_SPAN, abs_tol)
        .map(|o| o.value)
        .unwrap_or(f64::NAN)
}

/// Standard binary-antipodal scalar MMSE at SNR gamma:
/// 1 - E_y tanh(gamma - sqrt(gamma) y). QPSK decomposes into two such rails
/// at gamma = rho; BPSK in complex noise is one rail at gamma = 2 rho.
///
/// tanh's analyticity strip narrows like 1/sqrt(gamma), so this integral is
/// evaluated adaptively rather than on a fixed Hermite grid.
fn bpsk_rail_mmse(gamma: f64) -> f64 {
    if gamma == 0.0 {
        return 1.0;
    }
    let sq = gamma.sqrt();
    let e = expect_std_normal_adaptive(|y| (gamma - sq * y).tanh(), 1e-12);
    (1.0 - e).max(0.0)
}

/// MMSE of one real PAM rail: atoms `a_l` with probs `q_l` under additive
/// N(0, sigma2) noise.
fn pam_rail_mmse(atoms: &[f64], probs: &[f64], sigma2: f64) -> f64 {
    let power: f64 = atoms.iter().zip(probs).map(|(a, q)| q * a * a).sum();
    let sigma = sigma2.sqrt();
    let mut e_m2 = 0.0;
    for (a_tx, q_tx) in atoms.iter().zip(probs) {
        e_m2 += q_tx
            * expect_std_normal_adaptive(
                |w| {
                    let u = a_tx + sigma * w;
                    let mut logw: Vec<f64> = atoms
                        .iter()
                        .zip(probs)
                        .map(|(a, q)| -(u - a) * (u - a) / (2.0 * sigma2) + q.ln())
                        .collect();
                    let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut z = 0.0;
                    for lw in &mut logw {
                        *lw = (*lw - mx).exp();
                        z += *lw;
                    }
                    let m: f64 = logw.iter().zip(atoms).map(|(w, a)| w * a).sum::<f64>() / z;
                    m * m
                },
                1e-12,
            );
    }
    (power - e_m2).max(0.0)
}

/// Square 16-QAM separates into two independent PAM-4 rails with noise
/// variance 1/(2 rho) each.
fn qam16_rail_mmse(rho: f64) -> f64 {
    let s = 10f64.sqrt().recip();
    let atoms = [-3.0 * s, -s, s, 3.0 * s];
    let probs = [0.25; 4];
    2.0 * pam_rail_mmse(&atoms, &probs, 1.0 / (2.0 * rho))
}

/// General-constellation MMSE by the complex-plane integral: a per-atom
/// centered Gaussian mixture, each term integrated by nested adaptive
/// quadrature. Public so oracles can pit it against the specialized forms.
pub fn scalar_mmse_general(c: &Constellation, rho: f64) -> f64 {
    let sq = rho.sqrt();
    let mut acc = 0.0;
    let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
    for (s_tx, q_tx) in c.points.iter().zip(&c.probs) {
        let center = s_tx * sq;
        let outer = integrate(
            |zr| {
                let inner = integrate(
                    |zi| {
                        let y = center
                            + Complex64::new(zr, zi) * std::f64::consts::FRAC_1_SQRT_2;
                        norm * (-0.5 * zi * zi).exp() * posterior_mean_sq(c, y, sq)
                    },
                    -NORMAL_SPAN,
                    NORMAL_SPAN,
                    1e-11,
                );
                norm * (-0.5 * zr * zr).exp() * inner.map(|o| o.value).unwrap_or(f64::NAN)
            },
            -NORMAL_SPAN,
            NORMAL_SPAN,
            1e-9,
        );
        acc += q_tx * outer.map(|o| o.value).unwrap_or(f64::NAN);
    }
    (1.0 - acc).max(0.0)
}

// |E[x | y]|^2 for y = sqrt(rho) x + z with z ~ CN(0, 1).
fn posterior_mean_sq(c: &Constellation, y: Complex64, sqrt_rho: f64) -> f64 {
    let mut logw: Vec<f64> = c
        .points
        .iter()
        .zip(&c.probs)
        .map(|(s, q)| -(y - s * sqrt_rho).norm_sqr() + q.ln())
        .collect();
    let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for lw in &mut logw {
        *lw = (*lw - mx).exp();
        z += *lw;
    }
    let mut mean = Complex64::default();
    for (w, s) in logw.iter().zip(&c.points) {
        mean += s * *w;
    }
    (mean / z).norm_sqr()
}

// Pairwise-error exponential tail, used past the underflow point of the
// quadrature path.
fn mmse_tail_bound(c: &Constellation, rho: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (si, qi)) in c.points.iter().zip(&c.probs).enumerate() {
        for (j, sj) in c.points.iter().enumerate() {
            if i == j {
                continue;
            }
            let d2 = (si - sj).norm_sqr();
            acc += qi * d2 * (-rho * d2 / 4.0).exp() / 2.0;
        }
    }
    acc
}

/// Mutual information I(x; sqrt(rho) x + z) in nats, the area under the MMSE
/// transfer function.
pub fn mutual_information(prior: &Prior, rho: f64) -> Result<f64> {
    if rho < 0.0 {
        return Err(Error::InvalidArgument(format!("rho must be nonnegative, got {rho}")));
    }
    match prior {
        Prior::Gaussian => Ok((1.0 + rho).ln()),
        Prior::Discrete(c) => {
            let main_hi = rho.min(RHO_TAIL_SWITCH);
            let prior_clone = prior.clone();
            let out = integrate(
                |r| scalar_mmse(&prior_clone, r).unwrap_or(0.0),
                0.0,
                main_hi,
                1e-9,
            )?;
            let mut total = out.value;
            if rho > RHO_TAIL_SWITCH {
                total += mmse_tail_integral(c, RHO_TAIL_SWITCH, rho);
            }
            Ok(total)
        }
    }
}

// Closed-form integral of the pairwise tail bound on [a, b].
fn mmse_tail_integral(c: &Constellation, a: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (si, qi)) in c.points.iter().zip(&c.probs).enumerate() {
        for (j, sj) in c.points.iter().enumerate() {
            if i == j {
                continue;
            }
            let d2 = (si - sj).norm_sqr();
            acc += qi * 2.0 * ((-a * d2 / 4.0).exp() - (-b * d2 / 4.0).exp());
        }
    }
    acc
}
