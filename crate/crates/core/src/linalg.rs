//! Dense complex matrix helpers shared by the synthesis modules.
//!
//! Everything here is a thin layer over `nalgebra`: full SVDs with
//! orthonormal null spaces, Hermitian eigendecompositions, guarded
//! inverses and a handful of block-assembly utilities.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{LqssError, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Builds a complex matrix from real row-major data.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMat {
    assert_eq!(data.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| r(data[i * cols + j]))
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(r)
}

pub fn fro(m: &CMat) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hstack(parts: &[&CMat]) -> CMat {
    let rows = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut off = 0;
    for p in parts {
        if p.ncols() == 0 {
            continue;
        }
        assert_eq!(p.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, off), (rows, p.ncols())).copy_from(*p);
        off += p.ncols();
    }
    out
}

pub fn vstack(parts: &[&CMat]) -> CMat {
    let cols = parts.iter().map(|p| p.ncols()).max().unwrap_or(0);
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut off = 0;
    for p in parts {
        if p.nrows() == 0 {
            continue;
        }
        assert_eq!(p.ncols(), cols, "vstack column mismatch");
        out.view_mut((off, 0), (p.nrows(), cols)).copy_from(*p);
        off += p.nrows();
    }
    out
}

pub fn block_diag(parts: &[&CMat]) -> CMat {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut ro, mut co) = (0, 0);
    for p in parts {
        out.view_mut((ro, co), (p.nrows(), p.ncols())).copy_from(*p);
        ro += p.nrows();
        co += p.ncols();
    }
    out
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { r(values[i]) } else { ZERO })
}

/// Full singular value decomposition `a = U diag(s) V†` with square unitary
/// `U` (rows x rows) and `V` (cols x cols); singular values descending.
pub struct FullSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn full_svd(a: &CMat) -> FullSvd {
    let (p, q) = a.shape();
    let k = p.max(q);
    if k == 0 {
        return FullSvd { u: zeros(p, p), s: vec![], v: zeros(q, q) };
    }
    // Pad to square so both factors come back complete.
    let mut sq = zeros(k, k);
    sq.view_mut((0, 0), (p, q)).copy_from(a);
    let svd = SVD::new(sq, true, true);
    let u_full = svd.u.expect("u requested");
    let v_full = svd.v_t.expect("v requested").adjoint();
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    // Columns of U beyond p and of V beyond q live in the padding; reorder so
    // that the leading p (resp. q) basis vectors span the true spaces.
    let u = extract_subspace_basis(&u_full, p);
    let v = extract_subspace_basis(&v_full, q);
    let r = p.min(q);
    FullSvd { u, s: s[..r].to_vec(), v }
}

/// Given a `k x k` unitary whose columns are ordered by singular value,
/// returns a `dim x dim` unitary built from the first `dim` coordinates.
/// The leading columns (nonzero singular directions) are kept as is; the
/// rest are re-orthonormalized from the remaining columns restricted to the
/// first `dim` coordinates.
fn extract_subspace_basis(full: &CMat, dim: usize) -> CMat {
    let k = full.nrows();
    if dim == k {
        return full.clone();
    }
    let restricted = full.rows(0, dim).into_owned();
    orthonormal_columns(&restricted, dim)
}

/// Greedy Gram-Schmidt over the columns of `m`, keeping at most `want`
/// orthonormal vectors (in column order, skipping dependent ones).
pub fn orthonormal_columns(m: &CMat, want: usize) -> CMat {
    let rows = m.nrows();
    let mut basis: Vec<CVec> = Vec::with_capacity(want);
    for j in 0..m.ncols() {
        if basis.len() == want {
            break;
        }
        let mut v: CVec = m.column(j).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            basis.push(v / r(nrm));
        }
    }
    let mut out = zeros(rows, basis.len());
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Numerical rank: singular values above `rel_tol * max(1, s_max)` and
/// above `abs_floor`.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let s = SVD::new(a.clone(), false, false).singular_values;
    let smax = s.max();
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Orthonormal basis of the null space: right singular vectors whose
/// singular value is at most `abs_tol` (columns of `V` beyond the row count
/// are always included).
pub fn null_space(a: &CMat, abs_tol: f64) -> CMat {
    let q = a.ncols();
    if q == 0 {
        return zeros(0, 0);
    }
    if a.nrows() == 0 {
        return eye(q);
    }
    let svd = full_svd(a);
    let keep: Vec<usize> = (0..q).filter(|&j| j >= svd.s.len() || svd.s[j] <= abs_tol).collect();
    let mut out = zeros(q, keep.len());
    for (c, &j) in keep.iter().enumerate() {
        out.set_column(c, &svd.v.column(j));
    }
    out
}

/// Eigenvalues of a general square complex matrix (complex Schur form).
pub fn eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| LqssError::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let sym = (h + h.adjoint()) * r(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(h.nrows(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Inverse guarded by a 2-norm condition number bound.
pub fn inverse_checked(a: &CMat, max_cond: f64, what: &str) -> Result<CMat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(LqssError::Structural(format!("{what}: matrix is not square")));
    }
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let s = SVD::new(a.clone(), false, false).singular_values;
    let (smax, smin) = (s.max(), s.min());
    if smin == 0.0 || smax / smin > max_cond {
        return Err(LqssError::Numerical(format!(
            "{what}: condition number {:.3e} exceeds {:.1e}",
            if smin == 0.0 { f64::INFINITY } else { smax / smin },
            max_cond
        )));
    }
    a.clone().try_inverse().ok_or_else(|| LqssError::Numerical(format!("{what}: singular matrix")))
}

/// Solves `a x = b` by LU; returns `None` when the pivots indicate a
/// numerically singular `a`.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    let lu = a.clone().lu();
    let u = lu.u();
    let mut pmax: f64 = 0.0;
    let mut pmin = f64::INFINITY;
    for i in 0..u.nrows() {
        let p = u[(i, i)].norm();
        pmax = pmax.max(p);
        pmin = pmin.min(p);
    }
    if u.nrows() > 0 && (pmin == 0.0 || pmin < 1e-14 * pmax) {
        return None;
    }
    let x = lu.solve(b)?;
    is_finite(&x).then_some(x)
}

/// Index of the entry of largest magnitude (first on ties).
pub fn argmax_abs(v: impl Iterator<Item = Complex64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in v.enumerate() {
        let m = z.norm();
        if best.is_none_or(|(_, bm)| m > bm * (1.0 + 1e-12)) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
}

/// Unit-modulus factor that makes the largest-magnitude entry of `v`
/// real and positive after multiplication.
pub fn phase_to_real_positive(v: impl Iterator<Item = Complex64> + Clone) -> Complex64 {
    match argmax_abs(v.clone()) {
        Some(i) => {
            let z = v.clone().nth(i).unwrap();
            if z.norm() == 0.0 {
                ONE
            } else {
                (z / z.norm()).conj()
            }
        }
        None => ONE,
    }
}

/// Matrix of i.i.d. standard complex Gaussians (real and imaginary parts
/// each N(0, 1/2)).
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        c(s * a, s * b)
    })
}

pub fn random_real<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> RMat {
    RMat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let a = random_complex(rng, n, n);
    (&a + a.adjoint()) * r(0.5)
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let a = random_complex(rng, n, n);
    let qr = a.qr();
    let (q, rr) = (qr.q(), qr.r());
    let mut d = eye(n);
    for i in 0..n {
        let z = rr[(i, i)];
        if z.norm() > 0.0 {
            d[(i, i)] = z / z.norm();
        }
    }
    q * d
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    fro(&(u.adjoint() * u - eye(u.ncols())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_svd_reconstructs_wide_and_tall() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(p, q) in &[(2, 5), (5, 2), (3, 3), (1, 4)] {
            let a = random_complex(&mut rng, p, q);
            let svd = full_svd(&a);
            assert!(unitarity_residual(&svd.u) < 1e-12);
            assert!(unitarity_residual(&svd.v) < 1e-12);
            let mut sig = zeros(p, q);
            for (i, &s) in svd.s.iter().enumerate() {
                sig[(i, i)] = r(s);
            }
            let rec = &svd.u * sig * svd.v.adjoint();
            assert!(fro(&(rec - &a)) < 1e-12, "{p}x{q}");
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn null_space_of_rank_deficient_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_complex(&mut rng, 4, 2) * random_complex(&mut rng, 2, 5);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.ncols(), 3);
        assert!(fro(&(&a * &ns)) < 1e-12);
        assert!(unitarity_residual(&ns) < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 5);
        assert!(unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn guarded_inverse_rejects_singular() {
        let a = from_real_rows(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(inverse_checked(&a, 1e12, "t"), Err(LqssError::Numerical(_))));
        let b = from_real_rows(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let bi = inverse_checked(&b, 1e12, "t").unwrap();
        assert!((bi[(1, 1)].re - 0.25).abs() < 1e-15);
    }
}
