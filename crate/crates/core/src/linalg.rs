//! Minimal dense complex linear algebra on top of system BLAS/LAPACK.
//!
//! Only the handful of routines the receiver needs are bound: complex QR
//! (Haar sampling), complex GEMV/GEMM (channel application and LMMSE in the
//! SVD basis), Hermitian eigenvalues (test oracles) and the symmetric
//! tridiagonal eigensolver (Golub-Welsch quadrature nodes).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

mod ffi {
    use num_complex::Complex64;
    extern "C" {
        pub fn zgeqrf_(
            m: *const i32,
            n: *const i32,
            a: *mut Complex64,
            lda: *const i32,
            tau: *mut Complex64,
            work: *mut Complex64,
            lwork: *const i32,
            info: *mut i32,
        );
        pub fn zungqr_(
            m: *const i32,
            n: *const i32,
            k: *const i32,
            a: *mut Complex64,
            lda: *const i32,
            tau: *const Complex64,
            work: *mut Complex64,
            lwork: *const i32,
            info: *mut i32,
        );
        pub fn zgemv_(
            trans: *const u8,
            m: *const i32,
            n: *const i32,
            alpha: *const Complex64,
            a: *const Complex64,
            lda: *const i32,
            x: *const Complex64,
            incx: *const i32,
            beta: *const Complex64,
            y: *mut Complex64,
            incy: *const i32,
        );
        pub fn zgemm_(
            transa: *const u8,
            transb: *const u8,
            m: *const i32,
            n: *const i32,
            k: *const i32,
            alpha: *const Complex64,
            a: *const Complex64,
            lda: *const i32,
            b: *const Complex64,
            ldb: *const i32,
            beta: *const Complex64,
            c: *mut Complex64,
            ldc: *const i32,
        );
        pub fn zheev_(
            jobz: *const u8,
            uplo: *const u8,
            n: *const i32,
            a: *mut Complex64,
            lda: *const i32,
            w: *mut f64,
            work: *mut Complex64,
            lwork: *const i32,
            rwork: *mut f64,
            info: *mut i32,
        );
        pub fn dstev_(
            jobz: *const u8,
            n: *const i32,
            d: *mut f64,
            e: *mut f64,
            z: *mut f64,
            ldz: *const i32,
            work: *mut f64,
            info: *mut i32,
        );
    }
}

/// Dense column-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    nrows: usize,
    ncols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![Complex64::default(); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// y = A x
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = vec![Complex64::default(); self.nrows];
        self.gemv(b'N', x, &mut y);
        y
    }

    /// y = A^H x
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.nrows, "adjoint matvec dimension mismatch");
        let mut y = vec![Complex64::default(); self.ncols];
        self.gemv(b'C', x, &mut y);
        y
    }

    fn gemv(&self, trans: u8, x: &[Complex64], y: &mut [Complex64]) {
        let m = self.nrows as i32;
        let n = self.ncols as i32;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        let inc = 1i32;
        unsafe {
            ffi::zgemv_(
                &trans,
                &m,
                &n,
                &one,
                self.data.as_ptr(),
                &m,
                x.as_ptr(),
                &inc,
                &zero,
                y.as_mut_ptr(),
                &inc,
            );
        }
    }

    /// C = A B
    pub fn matmul(&self, b: &CMat) -> CMat {
        assert_eq!(self.ncols, b.nrows, "matmul dimension mismatch");
        let mut c = CMat::zeros(self.nrows, b.ncols);
        let (m, n, k) = (self.nrows as i32, b.ncols as i32, self.ncols as i32);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        let (ta, tb) = (b'N', b'N');
        unsafe {
            ffi::zgemm_(
                &ta,
                &tb,
                &m,
                &n,
                &k,
                &one,
                self.data.as_ptr(),
                &m,
                b.data.as_ptr(),
                &(b.nrows as i32),
                &zero,
                c.data.as_mut_ptr(),
                &m,
            );
        }
        c
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiplies column `j` by `phases[j]` in place.
    pub fn scale_columns(&mut self, phases: &[Complex64]) {
        assert_eq!(phases.len(), self.ncols);
        for (j, p) in phases.iter().enumerate() {
            for v in &mut self.data[j * self.nrows..(j + 1) * self.nrows] {
                *v *= p;
            }
        }
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        assert_eq!(self.nrows, self.ncols, "hermitian matrix must be square");
        let n = self.nrows as i32;
        let mut a = self.data.clone();
        let mut w = vec![0.0f64; self.nrows];
        let mut rwork = vec![0.0f64; (3 * self.nrows).max(1)];
        let mut info = 0i32;
        let (jobz, uplo) = (b'N', b'L');
        let mut work = vec![Complex64::default(); 1];
        let query = -1i32;
        unsafe {
            ffi::zheev_(
                &jobz,
                &uplo,
                &n,
                a.as_mut_ptr(),
                &n,
                w.as_mut_ptr(),
                work.as_mut_ptr(),
                &query,
                rwork.as_mut_ptr(),
                &mut info,
            );
        }
        let lwork = work[0].re as i32;
        work = vec![Complex64::default(); lwork.max(1) as usize];
        unsafe {
            ffi::zheev_(
                &jobz,
                &uplo,
                &n,
                a.as_mut_ptr(),
                &n,
                w.as_mut_ptr(),
                work.as_mut_ptr(),
                &lwork,
                rwork.as_mut_ptr(),
                &mut info,
            );
        }
        lapack_check("zheev", info)?;
        Ok(w)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[j * self.nrows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[j * self.nrows + i]
    }
}

fn lapack_check(routine: &'static str, info: i32) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Lapack { routine, info })
    }
}

/// Draws a standard circularly-symmetric complex Gaussian, E|z|^2 = 1.
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Square matrix of IID CN(0,1) entries.
pub fn complex_gaussian(nrows: usize, ncols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(nrows, ncols, |_, _| standard_complex(rng))
}

/// In-place QR of a square matrix, returning Q with the diagonal-of-R phase
/// correction applied. For an IID Gaussian input the result is exactly Haar;
/// without the correction it is not (the R diagonal carries a bias).
pub fn qr_unitary(mut a: CMat) -> Result<CMat> {
    assert_eq!(a.nrows, a.ncols, "qr_unitary expects a square matrix");
    let n = a.nrows;
    let ni = n as i32;
    let mut tau = vec![Complex64::default(); n];
    let mut info = 0i32;
    let mut work = vec![Complex64::default(); 1];
    let query = -1i32;
    unsafe {
        ffi::zgeqrf_(&ni, &ni, a.data.as_mut_ptr(), &ni, tau.as_mut_ptr(), work.as_mut_ptr(), &query, &mut info)
    };
    let lwork = (work[0].re as i32).max(1);
    work = vec![Complex64::default(); lwork as usize];
    unsafe {
        ffi::zgeqrf_(&ni, &ni, a.data.as_mut_ptr(), &ni, tau.as_mut_ptr(), work.as_mut_ptr(), &lwork, &mut info)
    };
    lapack_check("zgeqrf", info)?;
    let phases: Vec<Complex64> = (0..n)
        .map(|j| {
            let r = a[(j, j)];
            let nrm = r.norm();
            if nrm == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                (r / nrm).conj()
            }
        })
        .collect();
    unsafe {
        ffi::zungqr_(&ni, &ni, &ni, a.data.as_mut_ptr(), &ni, tau.as_ptr(), work.as_mut_ptr(), &lwork, &mut info)
    };
    lapack_check("zungqr", info)?;
    a.scale_columns(&phases);
    Ok(a)
}

/// Eigen-decomposition of a symmetric tridiagonal matrix.
///
/// Returns ascending eigenvalues and the first component of each (normalized)
/// eigenvector, which is all Golub-Welsch needs for quadrature weights.
pub fn tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    assert_eq!(offdiag.len() + 1, n, "offdiagonal length must be n-1");
    let ni = n as i32;
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = vec![0.0f64; n * n];
    let mut workspace = vec![0.0f64; (2 * n).max(1)];
    let mut info = 0i32;
    let jobz = b'V';
    unsafe {
        ffi::dstev_(&jobz, &ni, d.as_mut_ptr(), e.as_mut_ptr(), z.as_mut_ptr(), &ni, workspace.as_mut_ptr(), &mut info)
    };
    lapack_check("dstev", info)?;
    let first_components: Vec<f64> = (0..n).map(|j| z[j * n]).collect();
    Ok((d, first_components))
}
