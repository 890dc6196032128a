//! Thin safe wrappers over the system LAPACK/BLAS (provided by OpenBLAS).
//!
//! All dense matrices cross the FFI boundary in `ndarray` standard (row-major)
//! layout. LAPACK reads them as column-major, i.e. as the transpose, which
//! costs nothing for symmetric input and leaves eigenvalues and singular
//! values of Hermitian or general input unchanged. No routine here copies
//! its matrix argument.

use ndarray::Array2;
use num_complex::Complex64;
use std::os::raw::c_char;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square and in standard row-major layout")]
    InvalidLayout,
    #[error("matrix dimension {0} exceeds i32 range")]
    TooLarge(usize),
    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

extern "C" {
    fn dsyevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn zheevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn zgesvd_(
        jobu: *const c_char,
        jobvt: *const c_char,
        m: *const i32,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        s: *mut f64,
        u: *mut Complex64,
        ldu: *const i32,
        vt: *mut Complex64,
        ldvt: *const i32,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );
    fn dsytrf_(
        uplo: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        ipiv: *mut i32,
        work: *mut f64,
        lwork: *const i32,
        info: *mut i32,
    );
    fn dsyrk_(
        uplo: *const c_char,
        trans: *const c_char,
        n: *const i32,
        k: *const i32,
        alpha: *const f64,
        a: *const f64,
        lda: *const i32,
        beta: *const f64,
        c: *mut f64,
        ldc: *const i32,
    );
    fn dgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const f64,
        a: *const f64,
        lda: *const i32,
        b: *const f64,
        ldb: *const i32,
        beta: *const f64,
        c: *mut f64,
        ldc: *const i32,
    );
    fn zgemm_(
        transa: *const c_char,
        transb: *const c_char,
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
}

const JOB_N: c_char = b'N' as c_char;
const JOB_V: c_char = b'V' as c_char;
const UPLO_L: c_char = b'L' as c_char;
const TRANS_N: c_char = b'N' as c_char;
const TRANS_T: c_char = b'T' as c_char;

fn check_square<T>(a: &Array2<T>) -> Result<i32, LinalgError> {
    let (r, c) = a.dim();
    if r != c || a.as_slice().is_none() && r > 0 {
        return Err(LinalgError::InvalidLayout);
    }
    i32::try_from(r).map_err(|_| LinalgError::TooLarge(r))
}

/// Eigenvalues of a real symmetric matrix, ascending. Destroys `a`.
pub fn eigvalsh(a: &mut Array2<f64>) -> Result<Vec<f64>, LinalgError> {
    sym_eig(a, false)
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix.
/// Eigenvector `i` is returned as row `i` of the overwritten matrix
/// (a LAPACK column under the transposed view).
pub fn eigh(a: &mut Array2<f64>) -> Result<Vec<f64>, LinalgError> {
    sym_eig(a, true)
}

fn sym_eig(a: &mut Array2<f64>, vectors: bool) -> Result<Vec<f64>, LinalgError> {
    let n = check_square(a)?;
    let nn = n as usize;
    let mut w = vec![0.0f64; nn];
    if nn == 0 {
        return Ok(w);
    }
    let jobz = if vectors { JOB_V } else { JOB_N };
    let ptr = a.as_mut_ptr();
    let mut info = 0i32;
    let (mut wk, mut iwk) = (0.0f64, 0i32);
    let m1 = -1i32;
    unsafe {
        dsyevd_(&jobz, &UPLO_L, &n, ptr, &n, w.as_mut_ptr(), &mut wk, &m1, &mut iwk, &m1, &mut info);
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "dsyevd (query)", info });
    }
    let lwork = wk as i32;
    let liwork = iwk;
    let mut work = vec![0.0f64; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        dsyevd_(
            &jobz,
            &UPLO_L,
            &n,
            ptr,
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "dsyevd", info });
    }
    Ok(w)
}

/// Eigenvalues of a complex Hermitian matrix, ascending. Destroys `a`.
pub fn eigvalsh_complex(a: &mut Array2<Complex64>) -> Result<Vec<f64>, LinalgError> {
    let n = check_square(a)?;
    let nn = n as usize;
    let mut w = vec![0.0f64; nn];
    if nn == 0 {
        return Ok(w);
    }
    let ptr = a.as_mut_ptr();
    let mut info = 0i32;
    let (mut wk, mut rwk, mut iwk) = (Complex64::new(0.0, 0.0), 0.0f64, 0i32);
    let m1 = -1i32;
    unsafe {
        zheevd_(
            &JOB_N, &UPLO_L, &n, ptr, &n, w.as_mut_ptr(), &mut wk, &m1, &mut rwk, &m1, &mut iwk,
            &m1, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevd (query)", info });
    }
    let lwork = wk.re as i32;
    let lrwork = rwk as i32;
    let liwork = iwk;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    let mut rwork = vec![0.0f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        zheevd_(
            &JOB_N,
            &UPLO_L,
            &n,
            ptr,
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheevd", info });
    }
    Ok(w)
}

/// Singular values of a complex matrix, descending. Destroys `a`.
pub fn singular_values(a: &mut Array2<Complex64>) -> Result<Vec<f64>, LinalgError> {
    let (r, c) = a.dim();
    if r > 0 && c > 0 && a.as_slice().is_none() {
        return Err(LinalgError::InvalidLayout);
    }
    let mn = r.min(c);
    if mn == 0 {
        return Ok(Vec::new());
    }
    // The column-major view of the row-major buffer is A^T, whose singular
    // values agree with those of A.
    let m = i32::try_from(c).map_err(|_| LinalgError::TooLarge(c))?;
    let n = i32::try_from(r).map_err(|_| LinalgError::TooLarge(r))?;
    let mut s = vec![0.0f64; mn];
    let mut rwork = vec![0.0f64; 5 * mn];
    let mut info = 0i32;
    let mut wk = Complex64::new(0.0, 0.0);
    let m1 = -1i32;
    let one = 1i32;
    let nullp = std::ptr::null_mut();
    unsafe {
        zgesvd_(
            &JOB_N, &JOB_N, &m, &n, a.as_mut_ptr(), &m, s.as_mut_ptr(), nullp, &one, nullp, &one,
            &mut wk, &m1, rwork.as_mut_ptr(), &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zgesvd (query)", info });
    }
    let lwork = wk.re as i32;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    unsafe {
        zgesvd_(
            &JOB_N,
            &JOB_N,
            &m,
            &n,
            a.as_mut_ptr(),
            &m,
            s.as_mut_ptr(),
            nullp,
            &one,
            nullp,
            &one,
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zgesvd", info });
    }
    Ok(s)
}

/// Inertia (negative, zero, positive eigenvalue counts) of a dense symmetric
/// matrix via the Bunch-Kaufman factorization. `zero_tol` is the absolute
/// pivot magnitude below which a pivot counts as zero. Destroys `a`.
pub fn dense_inertia(
    a: &mut Array2<f64>,
    zero_tol: f64,
) -> Result<(usize, usize, usize), LinalgError> {
    let n = check_square(a)?;
    let nn = n as usize;
    if nn == 0 {
        return Ok((0, 0, 0));
    }
    let mut ipiv = vec![0i32; nn];
    let mut info = 0i32;
    let mut wk = 0.0f64;
    let m1 = -1i32;
    unsafe {
        dsytrf_(&UPLO_L, &n, a.as_mut_ptr(), &n, ipiv.as_mut_ptr(), &mut wk, &m1, &mut info);
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "dsytrf (query)", info });
    }
    let lwork = wk as i32;
    let mut work = vec![0.0f64; lwork as usize];
    unsafe {
        dsytrf_(&UPLO_L, &n, a.as_mut_ptr(), &n, ipiv.as_mut_ptr(), work.as_mut_ptr(), &lwork, &mut info);
    }
    if info < 0 {
        return Err(LinalgError::Lapack { routine: "dsytrf", info });
    }
    // info > 0 reports an exactly singular D block; the sign scan below
    // classifies it through zero_tol like any other tiny pivot.
    let (mut neg, mut zero, mut pos) = (0usize, 0usize, 0usize);
    let mut count = |x: f64| {
        if x.abs() <= zero_tol {
            zero += 1;
        } else if x < 0.0 {
            neg += 1;
        } else {
            pos += 1;
        }
    };
    // The buffer is row-major; LAPACK's column-major factor lives in its
    // transpose, so D's subdiagonal entry (k+1, k) sits at row-major (k, k+1).
    let mut k = 0usize;
    while k < nn {
        if ipiv[k] > 0 {
            count(a[[k, k]]);
            k += 1;
        } else {
            let d11 = a[[k, k]];
            let d22 = a[[k + 1, k + 1]];
            let off = a[[k, k + 1]];
            let mid = 0.5 * (d11 + d22);
            let rad = (0.25 * (d11 - d22) * (d11 - d22) + off * off).sqrt();
            count(mid - rad);
            count(mid + rad);
            k += 2;
        }
    }
    Ok((neg, zero, pos))
}

/// C += alpha * A * A^T for a row-major block A (n×k) into row-major C (n×n).
/// Only the row-major upper triangle of C is written; mirror it when done.
pub fn syrk_upper_update(alpha: f64, a: &[f64], n: usize, k: usize, c: &mut [f64]) {
    assert_eq!(a.len(), n * k);
    assert_eq!(c.len(), n * n);
    if n == 0 || k == 0 {
        return;
    }
    let (ni, ki) = (n as i32, k as i32);
    let beta = 1.0f64;
    // The buffer of A reads column-major as A^T (k×n); dsyrk('L','T') then
    // accumulates A^T-transposed times A^T = A A^T into the column-major
    // lower triangle, which is the row-major upper one.
    unsafe {
        dsyrk_(&UPLO_L, &TRANS_T, &ni, &ki, &alpha, a.as_ptr(), &ki, &beta, c.as_mut_ptr(), &ni);
    }
}

/// C += alpha * A * B^T for row-major blocks A (p×k), B (q×k), C (p×q).
pub fn gemm_abt(alpha: f64, a: &[f64], p: usize, b: &[f64], q: usize, k: usize, c: &mut [f64]) {
    assert_eq!(a.len(), p * k);
    assert_eq!(b.len(), q * k);
    assert_eq!(c.len(), p * q);
    if p == 0 || q == 0 {
        return;
    }
    let (mi, ni, ki) = (q as i32, p as i32, k as i32);
    let beta = 1.0f64;
    // Row-major C = A B^T is column-major C' = B' A'^T with X' the
    // column-major (k×rows) view of each row-major buffer.
    unsafe {
        dgemm_(
            &TRANS_T,
            &TRANS_N,
            &mi,
            &ni,
            &ki,
            &alpha,
            b.as_ptr(),
            &ki,
            a.as_ptr(),
            &ki,
            &beta,
            c.as_mut_ptr(),
            &mi,
        );
    }
}

/// C += alpha * A * B^H for row-major complex blocks A (p×k), B (q×k), C (p×q).
pub fn gemm_abh(
    alpha: Complex64,
    a: &[Complex64],
    p: usize,
    b: &[Complex64],
    q: usize,
    k: usize,
    c: &mut [Complex64],
) {
    assert_eq!(a.len(), p * k);
    assert_eq!(b.len(), q * k);
    assert_eq!(c.len(), p * q);
    if p == 0 || q == 0 {
        return;
    }
    let (mi, ni, ki) = (q as i32, p as i32, k as i32);
    let beta = Complex64::new(1.0, 0.0);
    // Row-major C = A B^H reads column-major as C^T = conj(B) A^T, and the
    // buffers already hold B^T and A^T column-major, so op(B^T) = 'C' and
    // op(A^T) = 'N' produce it directly.
    unsafe {
        zgemm_(
            &(b'C' as c_char),
            &TRANS_N,
            &mi,
            &ni,
            &ki,
            &alpha,
            b.as_ptr(),
            &ki,
            a.as_ptr(),
            &ki,
            &beta,
            c.as_mut_ptr(),
            &mi,
        );
    }
}
