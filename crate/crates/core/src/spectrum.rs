//! Sensing matrices and their spectral summaries.
//!
//! Everything downstream consumes either a full matrix in factored SVD form
//! (sample-level simulation) or only the eigenvalue profile of A^H A
//! (state evolution and capacity analysis).

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, qr_unitary, standard_complex, CMat};

/// Signal length N and observation length M.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemDims {
    n: usize,
    m: usize,
}

impl SystemDims {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("dimensions must be at least 1".into()));
        }
        Ok(Self { n, m })
    }

    pub fn signal_len(&self) -> usize {
        self.n
    }

    pub fn obs_len(&self) -> usize {
        self.m
    }

    /// Aspect ratio beta = N/M.
    pub fn beta(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn rank(&self) -> usize {
        self.n.min(self.m)
    }
}

/// Eigenvalue profile of A^H A (descending, zero-padded to length N) plus the
/// transmit SNR. All transfer functions downstream are finite-N traces over
/// this sequence.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    snr: f64,
    dims: SystemDims,
}

impl Spectrum {
    pub fn from_singulars(singulars: &[f64], dims: SystemDims, snr: f64) -> Result<Self> {
        if snr <= 0.0 {
            return Err(Error::InvalidArgument(format!("snr must be positive, got {snr}")));
        }
        if singulars.len() != dims.rank() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} singular values, got {}",
                dims.rank(),
                singulars.len()
            )));
        }
        if singulars.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidArgument("singular values must be finite and nonnegative".into()));
        }
        let mut eigenvalues: Vec<f64> = singulars.iter().map(|d| d * d).collect();
        eigenvalues.resize(dims.signal_len(), 0.0);
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { eigenvalues, snr, dims })
    }

    /// Flat unit spectrum of an identity channel.
    pub fn identity(n: usize, snr: f64) -> Result<Self> {
        let dims = SystemDims::new(n, n)?;
        Self::from_singulars(&vec![1.0; n], dims, snr)
    }

    /// Geometric condition-number profile, the ill-conditioned matrix recipe.
    pub fn geometric(dims: SystemDims, kappa: f64, snr: f64) -> Result<Self> {
        let d = geometric_singular_values(dims, kappa)?;
        Self::from_singulars(&d, dims, snr)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn with_snr(&self, snr: f64) -> Result<Self> {
        if snr <= 0.0 {
            return Err(Error::InvalidArgument(format!("snr must be positive, got {snr}")));
        }
        Ok(Self { eigenvalues: self.eigenvalues.clone(), snr, dims: self.dims })
    }

    /// Mean eigenvalue (1/N) tr{A^H A}; equals 1 under the sum-power
    /// normalization.
    pub fn mean_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.eigenvalues.len() as f64
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,eigenvalue")?;
        for (i, ev) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{i},{ev:.17e}")?;
        }
        Ok(())
    }
}

/// Singular values d_1 >= ... >= d_T with d_i/d_{i+1} = kappa^{1/T} and
/// sum d_i^2 = N, where T = min(M, N).
pub fn geometric_singular_values(dims: SystemDims, kappa: f64) -> Result<Vec<f64>> {
    if !(kappa >= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must be >= 1, got {kappa}")));
    }
    let t = dims.rank();
    let n = dims.signal_len() as f64;
    let ratio = kappa.powf(1.0 / t as f64);
    // d_i = d_1 r^{-(i-1)}; solve d_1 from the power constraint.
    let mut power = 0.0;
    let mut q = 1.0;
    let r2 = ratio.powi(-2);
    for _ in 0..t {
        power += q;
        q *= r2;
    }
    let d1 = (n / power).sqrt();
    let mut d = Vec::with_capacity(t);
    let mut cur = d1;
    for _ in 0..t {
        d.push(cur);
        cur /= ratio;
    }
    Ok(d)
}

/// Which unitary factors are drawn Haar. Right-unitary invariance only needs
/// V; `HaarRight` keeps U = I, which changes nothing the receiver can observe
/// and halves the sampling cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitaryEnsemble {
    HaarBoth,
    HaarRight,
    Identity,
}

#[derive(Clone, Debug)]
enum Factor {
    Identity(usize),
    Dense(CMat),
}

impl Factor {
    fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            Factor::Identity(_) => x.to_vec(),
            Factor::Dense(m) => m.matvec(x),
        }
    }

    fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            Factor::Identity(_) => x.to_vec(),
            Factor::Dense(m) => m.adjoint_matvec(x),
        }
    }

    fn dense(&self) -> CMat {
        match self {
            Factor::Identity(n) => CMat::identity(*n),
            Factor::Dense(m) => m.clone(),
        }
    }
}

/// A sensing matrix A = U^H Sigma V held in factored form.
#[derive(Clone, Debug)]
pub struct SensingMatrix {
    u: Factor,
    v: Factor,
    singulars: Vec<f64>,
    dims: SystemDims,
}

impl SensingMatrix {
    pub fn sample(
        singulars: &[f64],
        dims: SystemDims,
        ensemble: UnitaryEnsemble,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if singulars.len() != dims.rank() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} singular values, got {}",
                dims.rank(),
                singulars.len()
            )));
        }
        let (m, n) = (dims.obs_len(), dims.signal_len());
        let (u, v) = match ensemble {
            UnitaryEnsemble::HaarBoth => (
                Factor::Dense(haar_unitary(m, rng)?),
                Factor::Dense(haar_unitary(n, rng)?),
            ),
            UnitaryEnsemble::HaarRight => (Factor::Identity(m), Factor::Dense(haar_unitary(n, rng)?)),
            UnitaryEnsemble::Identity => (Factor::Identity(m), Factor::Identity(n)),
        };
        Ok(Self { u, v, singulars: singulars.to_vec(), dims })
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn singulars(&self) -> &[f64] {
        &self.singulars
    }

    pub fn spectrum(&self, snr: f64) -> Result<Spectrum> {
        Spectrum::from_singulars(&self.singulars, self.dims, snr)
    }

    /// y = A x
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dims.signal_len());
        let vx = self.v.matvec(x);
        let mut s = vec![Complex64::default(); self.dims.obs_len()];
        for (i, &d) in self.singulars.iter().enumerate() {
            s[i] = vx[i] * d;
        }
        self.u.adjoint_matvec(&s)
    }

    /// z = A^H y
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.dims.obs_len());
        let uy = self.u.matvec(y);
        let mut s = vec![Complex64::default(); self.dims.signal_len()];
        for (i, &d) in self.singulars.iter().enumerate() {
            s[i] = uy[i] * d;
        }
        self.v.adjoint_matvec(&s)
    }

    /// Rotates y into the singular basis: Sigma U y, length N.
    pub(crate) fn matched_filter_basis(&self, y: &[Complex64]) -> Vec<Complex64> {
        let uy = self.u.matvec(y);
        let mut s = vec![Complex64::default(); self.dims.signal_len()];
        for (i, &d) in self.singulars.iter().enumerate() {
            s[i] = uy[i] * d;
        }
        s
    }

    pub(crate) fn v_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.v.matvec(x)
    }

    pub(crate) fn v_adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.v.adjoint_matvec(x)
    }

    /// Materializes A = U^H Sigma V. Quadratic memory; meant for export and
    /// small-system tests.
    pub fn assemble(&self) -> CMat {
        let (m, n) = (self.dims.obs_len(), self.dims.signal_len());
        let v = self.v.dense();
        // Sigma V: scale the first T rows of V
        let mut sv = CMat::zeros(m, n);
        for j in 0..n {
            for (i, &d) in self.singulars.iter().enumerate() {
                sv[(i, j)] = v[(i, j)] * d;
            }
        }
        match &self.u {
            Factor::Identity(_) => sv,
            Factor::Dense(u) => u.adjoint().matmul(&sv),
        }
    }

    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_binary(&self.assemble(), w)
    }
}

/// Haar-distributed unitary via QR of an IID complex Gaussian matrix with the
/// diagonal phase correction.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> Result<CMat> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    qr_unitary(complex_gaussian(dim, dim, rng))
}

/// IID Gaussian sensing matrix with entries CN(0, 1/M); unitarily invariant,
/// used for sanity comparisons only.
pub fn iid_gaussian_matrix(dims: SystemDims, rng: &mut impl Rng) -> CMat {
    let scale = (dims.obs_len() as f64).sqrt().recip();
    CMat::from_fn(dims.obs_len(), dims.signal_len(), |_, _| standard_complex(rng) * scale)
}

const MATRIX_MAGIC: &[u8; 8] = b"OAMPMAT1";

/// Binary matrix layout: magic, LE u32 M, LE u32 N, then row-major complex64
/// pairs (f64 real, f64 imag).
pub fn write_matrix_binary<W: Write>(a: &CMat, mut w: W) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(a.nrows() as u32).to_le_bytes())?;
    w.write_all(&(a.ncols() as u32).to_le_bytes())?;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let z = a[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut r: R) -> Result<CMat> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Format("missing OAMPMAT1 magic".into()));
    }
    let mut dim = [0u8; 4];
    r.read_exact(&mut dim)?;
    let m = u32::from_le_bytes(dim) as usize;
    r.read_exact(&mut dim)?;
    let n = u32::from_le_bytes(dim) as usize;
    if m == 0 || n == 0 {
        return Err(Error::Format("zero matrix dimension".into()));
    }
    let mut buf = vec![0u8; 16];
    let mut a = CMat::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            a[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::{stream_rng, TAG_MATRIX};
    use num_complex::Complex64;

    fn dims(n: usize, m: usize) -> SystemDims {
        SystemDims::new(n, m).unwrap()
    }

    #[test]
    fn flat_spectrum_at_kappa_one() {
        let d = geometric_singular_values(dims(2, 2), 1.0).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14 && (d[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_kappa_four() {
        let d = geometric_singular_values(dims(2, 2), 4.0).unwrap();
        assert!((d[0] / d[1] - 2.0).abs() < 1e-12);
        let want = (2.0f64 / 5.0).sqrt();
        assert!((d[1] - want).abs() < 1e-12);
        assert!((d[0] - 2.0 * want).abs() < 1e-12);
    }

    #[test]
    fn geometric_profile_constraints_hold_at_scale() {
        let dm = dims(500, 333);
        let d = geometric_singular_values(dm, 10.0).unwrap();
        assert_eq!(d.len(), 333);
        let ratio = 10f64.powf(1.0 / 333.0);
        for w in d.windows(2) {
            assert!((w[0] / w[1] - ratio).abs() < 1e-12);
        }
        let power: f64 = d.iter().map(|x| x * x).sum();
        assert!((power - 500.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_kappa_and_dims() {
        assert!(geometric_singular_values(dims(4, 4), 0.5).is_err());
        assert!(SystemDims::new(0, 3).is_err());
    }

    #[test]
    fn condition_number_of_geometric_profile() {
        let dm = dims(500, 333);
        let kappa = 50.0;
        let d = geometric_singular_values(dm, kappa).unwrap();
        let t = 333.0;
        let want = kappa.powf((t - 1.0) / t);
        assert!((d[0] / d[332] - want).abs() / want < 1e-12);
    }

    #[test]
    fn spectrum_zero_pads_and_sorts() {
        let s = Spectrum::from_singulars(&[2f64.sqrt()], dims(2, 1), 1.0).unwrap();
        assert!((s.eigenvalues()[0] - 2.0).abs() < 1e-14);
        assert_eq!(s.eigenvalues()[1], 0.0);
        let s = Spectrum::identity(4, 2.0).unwrap();
        assert_eq!(s.eigenvalues(), &[1.0, 1.0, 1.0, 1.0]);
        assert!(Spectrum::identity(4, 0.0).is_err());
    }

    #[test]
    fn eigenvalue_normalization_carries_to_squares() {
        let s = Spectrum::geometric(dims(500, 500), 10.0, 1.0).unwrap();
        assert_eq!(s.eigenvalues().len(), 500);
        assert!(s.eigenvalues().iter().all(|&l| l > 0.0));
        let total: f64 = s.eigenvalues().iter().sum();
        assert!((total - 500.0).abs() < 1e-8);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = stream_rng(0, TAG_MATRIX, 0);
        let q = haar_unitary(64, &mut rng).unwrap();
        let p = q.adjoint().matmul(&q);
        for i in 0..64 {
            for j in 0..64 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - Complex64::new(t, 0.0)).norm() < 1e-10);
            }
        }
        // dim 1: a unit-modulus scalar
        let q1 = haar_unitary(1, &mut rng).unwrap();
        assert!((q1[(0, 0)].norm() - 1.0).abs() < 1e-12);
        // distinct draws under distinct streams
        let qa = haar_unitary(8, &mut stream_rng(1, TAG_MATRIX, 0)).unwrap();
        let qb = haar_unitary(8, &mut stream_rng(1, TAG_MATRIX, 1)).unwrap();
        assert!((qa[(0, 0)] - qb[(0, 0)]).norm() > 1e-8);
    }

    #[test]
    fn haar_trace_moment_and_left_invariance() {
        // E|tr Q|^2 = 1 for the Haar ensemble, and the law is invariant under
        // left multiplication by any fixed unitary.
        let mut rng = stream_rng(11, TAG_MATRIX, 7);
        let dim = 64;
        let trials = 10_000;
        let fixed = haar_unitary(dim, &mut rng).unwrap();
        let mut m2 = 0.0;
        let mut m2_rotated = 0.0;
        for _ in 0..trials {
            let q = haar_unitary(dim, &mut rng).unwrap();
            let mut tr = Complex64::default();
            for i in 0..dim {
                tr += q[(i, i)];
            }
            m2 += tr.norm_sqr();
            let fq = fixed.matmul(&q);
            let mut tr2 = Complex64::default();
            for i in 0..dim {
                tr2 += fq[(i, i)];
            }
            m2_rotated += tr2.norm_sqr();
        }
        m2 /= trials as f64;
        m2_rotated /= trials as f64;
        assert!((m2 - 1.0).abs() < 0.05, "E|tr Q|^2 = {m2}");
        assert!((m2_rotated - 1.0).abs() < 0.05, "rotated moment {m2_rotated}");
    }

    #[test]
    fn assembled_matrix_invariants() {
        let dm = dims(32, 24);
        let d = geometric_singular_values(dm, 4.0).unwrap();
        let mut rng = stream_rng(3, TAG_MATRIX, 0);
        let a = SensingMatrix::sample(&d, dm, UnitaryEnsemble::HaarBoth, &mut rng).unwrap();
        let dense = a.assemble();
        assert_eq!(dense.nrows(), 24);
        assert_eq!(dense.ncols(), 32);
        // apply() agrees with the dense product
        let x: Vec<Complex64> = (0..32).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let y1 = a.apply(&x);
        let y2 = dense.matvec(&x);
        for (u, v) in y1.iter().zip(&y2) {
            assert!((u - v).norm() < 1e-10);
        }
        let z1 = a.apply_adjoint(&y1);
        let z2 = dense.adjoint_matvec(&y1);
        for (u, v) in z1.iter().zip(&z2) {
            assert!((u - v).norm() < 1e-10);
        }
        // eigenvalues of A^H A equal padded d_i^2 regardless of U, V
        let gram = dense.adjoint().matmul(&dense);
        let mut ev = gram.hermitian_eigenvalues().unwrap();
        ev.reverse();
        let spec = a.spectrum(1.0).unwrap();
        for (got, want) in ev.iter().zip(spec.eigenvalues()) {
            assert!((got - want).abs() < 1e-8 * want.max(1.0));
        }
    }

    #[test]
    fn identity_mode_yields_identity_matrix() {
        let dm = dims(4, 4);
        let mut rng = stream_rng(0, TAG_MATRIX, 9);
        let a = SensingMatrix::sample(&[1.0; 4], dm, UnitaryEnsemble::Identity, &mut rng).unwrap();
        let dense = a.assemble();
        for i in 0..4 {
            for j in 0..4 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((dense[(i, j)] - Complex64::new(t, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn trace_statistic_concentrates_over_haar_draws() {
        // (1/N) tr{[snr A^H A + I]^-1} across V draws; right-invariance makes
        // this a deterministic function of the singular values.
        let dm = dims(256, 256);
        let d = geometric_singular_values(dm, 10.0).unwrap();
        let snr = 2.0;
        let mut values = Vec::new();
        for trial in 0..8 {
            let mut rng = stream_rng(5, TAG_MATRIX, trial);
            let a = SensingMatrix::sample(&d, dm, UnitaryEnsemble::HaarRight, &mut rng).unwrap();
            let dense = a.assemble();
            let gram = dense.adjoint().matmul(&dense);
            let ev = gram.hermitian_eigenvalues().unwrap();
            let tr: f64 = ev.iter().map(|l| 1.0 / (snr * l + 1.0)).sum::<f64>() / 256.0;
            values.push(tr);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        assert!(var.sqrt() / mean < 0.01, "relative std {}", var.sqrt() / mean);
    }

    #[test]
    fn matrix_binary_round_trip() {
        let dm = dims(6, 5);
        let d = geometric_singular_values(dm, 3.0).unwrap();
        let mut rng = stream_rng(2, TAG_MATRIX, 0);
        let a = SensingMatrix::sample(&d, dm, UnitaryEnsemble::HaarBoth, &mut rng).unwrap();
        let dense = a.assemble();
        let mut buf = Vec::new();
        write_matrix_binary(&dense, &mut buf).unwrap();
        let back = read_matrix_binary(buf.as_slice()).unwrap();
        assert_eq!(back.nrows(), 5);
        assert_eq!(back.ncols(), 6);
        for i in 0..5 {
            for j in 0..6 {
                assert!((back[(i, j)] - dense[(i, j)]).norm() < 1e-15);
            }
        }
        assert!(read_matrix_binary(&buf[1..]).is_err());
    }
}
