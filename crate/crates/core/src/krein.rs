//! Krein-space matrix algebra.
//!
//! The space `(C^{2k}, J)` with `J = diag(I_k, -I_k)` carries the
//! indefinite inner product `<v, w>_J = v† J w`. Matrices acting between
//! such spaces have a flat-adjoint `X♭ = J X† J`. Doubled-up matrices
//! `[[X1, X2], [X2#, X1#]]` form the algebra in which general linear
//! quantum stochastic systems live, and Bogoliubov matrices are the
//! doubled-up flat-unitary ones.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LqssError, Result};
use crate::linalg::{self, c, fro, r, CMat, CVec, RMat, I, ONE, ZERO};

/// Residual below which a matrix is accepted as doubled-up / Bogoliubov.
pub const DEFAULT_STRUCTURE_TOL: f64 = 1e-9;

/// `J_{2k} = diag(I_k, -I_k)`.
pub fn j_matrix(k: usize) -> CMat {
    CMat::from_fn(2 * k, 2 * k, |i, j| {
        if i != j {
            ZERO
        } else if i < k {
            ONE
        } else {
            -ONE
        }
    })
}

/// `Σ_{2k}`, the half-swap permutation.
pub fn sigma_matrix(k: usize) -> CMat {
    CMat::from_fn(2 * k, 2 * k, |i, j| if (i + k) % (2 * k) == j { ONE } else { ZERO })
}

/// The real symplectic unit `𝕁_{2k} = [[0, I], [-I, 0]]`.
pub fn symplectic_unit(k: usize) -> RMat {
    RMat::from_fn(2 * k, 2 * k, |i, j| {
        if i < k && j == i + k {
            1.0
        } else if i >= k && j + k == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// The unitary `Φ_{2k} = (1/√2) [[I, I], [-iI, iI]]`.
pub fn phi_matrix(k: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = linalg::zeros(2 * k, 2 * k);
    for i in 0..k {
        m[(i, i)] = r(s);
        m[(i, i + k)] = r(s);
        m[(i + k, i)] = c(0.0, -s);
        m[(i + k, i + k)] = c(0.0, s);
    }
    m
}

fn half(n: usize, what: &str) -> Result<usize> {
    if !n.is_multiple_of(2) {
        return Err(LqssError::Structural(format!("{what}: dimension {n} is odd")));
    }
    Ok(n / 2)
}

/// `X♭ = J_{2s} X† J_{2r}` for a `2r x 2s` matrix.
pub fn flat_adjoint(x: &CMat) -> Result<CMat> {
    let rh = half(x.nrows(), "flat_adjoint rows")?;
    let sh = half(x.ncols(), "flat_adjoint cols")?;
    Ok(flat_adjoint_unchecked(x, rh, sh))
}

fn flat_adjoint_unchecked(x: &CMat, rh: usize, sh: usize) -> CMat {
    // J X† J only flips the sign of the off-diagonal half blocks.
    let mut a = x.adjoint();
    for i in 0..2 * sh {
        for j in 0..2 * rh {
            if (i < sh) != (j < rh) {
                a[(i, j)] = -a[(i, j)];
            }
        }
    }
    a
}

/// `X♯ = -𝕁_{2s} Xᵀ 𝕁_{2r}` for a real `2r x 2s` matrix.
pub fn sharp_adjoint(x: &RMat) -> Result<RMat> {
    let rh = half(x.nrows(), "sharp_adjoint rows")?;
    let sh = half(x.ncols(), "sharp_adjoint cols")?;
    Ok(-(symplectic_unit(sh) * x.transpose() * symplectic_unit(rh)))
}

/// `<v, w>_J = v† J w`.
pub fn j_inner(v: &CVec, w: &CVec) -> Result<Complex64> {
    if v.len() != w.len() {
        return Err(LqssError::Structural(format!("j_inner: dimension mismatch {} vs {}", v.len(), w.len())));
    }
    let k = half(v.len(), "j_inner")?;
    Ok((0..v.len())
        .map(|i| {
            let t = v[i].conj() * w[i];
            if i < k {
                t
            } else {
                -t
            }
        })
        .sum())
}

/// Sign of the J-norm of a vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JSign {
    Positive,
    Negative,
    Neutral,
}

/// A vector of the Krein space `(C^{2k}, J)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KreinVector(pub CVec);

impl KreinVector {
    pub fn j_norm_squared(&self) -> f64 {
        j_inner(&self.0, &self.0).map(|z| z.re).unwrap_or(f64::NAN)
    }

    /// `|v|_J = sqrt(|<v, v>_J|)`.
    pub fn j_norm(&self) -> f64 {
        self.j_norm_squared().abs().sqrt()
    }

    pub fn sign(&self, tol: f64) -> JSign {
        let q = self.j_norm_squared();
        if q > tol {
            JSign::Positive
        } else if q < -tol {
            JSign::Negative
        } else {
            JSign::Neutral
        }
    }

    /// `v / |v|_J`; `None` for neutral vectors.
    pub fn normalized(&self, tol: f64) -> Option<KreinVector> {
        let n = self.j_norm();
        (n > tol).then(|| KreinVector(&self.0 / r(n)))
    }

    /// The conjugate partner `Σ v#`.
    pub fn partner(&self) -> KreinVector {
        KreinVector(sigma_conj_vec(&self.0))
    }
}

/// `Σ v#` for a vector of even length.
pub fn sigma_conj_vec(v: &CVec) -> CVec {
    let k = v.len() / 2;
    CVec::from_fn(v.len(), |i, _| v[(i + k) % (2 * k)].conj())
}

/// `Σ X#` applied to every column of a `2k x d` matrix.
pub fn sigma_conj(x: &CMat) -> CMat {
    let k = x.nrows() / 2;
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[((i + k) % (2 * k), j)].conj())
}

/// `[Z, Σ Z#]`: the doubled-up completion of a set of half columns.
pub fn double_columns(z: &CMat) -> CMat {
    linalg::hstack(&[z, &sigma_conj(z)])
}

/// Frobenius norm of `Σ X Σ - X#`; zero exactly for doubled-up matrices.
pub fn doubled_up_residual(x: &CMat) -> f64 {
    let (p, q) = x.shape();
    if p % 2 != 0 || q % 2 != 0 {
        return f64::INFINITY;
    }
    let (rh, sh) = (p / 2, q / 2);
    let mut acc = 0.0;
    for i in 0..p {
        for j in 0..q {
            let swapped = x[((i + rh) % p, (j + sh) % q)];
            acc += (swapped - x[(i, j)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Doubled-up matrix `[[X1, X2], [X2#, X1#]]`, stored as its two upper
/// half blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubledUp {
    x1: CMat,
    x2: CMat,
}

impl DoubledUp {
    pub fn new(x1: CMat, x2: CMat) -> Result<Self> {
        if x1.shape() != x2.shape() {
            return Err(LqssError::Structural(format!(
                "doubled-up halves differ in shape: {:?} vs {:?}",
                x1.shape(),
                x2.shape()
            )));
        }
        if !linalg::is_finite(&x1) || !linalg::is_finite(&x2) {
            return Err(LqssError::Structural("non-finite matrix entry".into()));
        }
        Ok(Self { x1, x2 })
    }

    pub fn zeros(r: usize, s: usize) -> Self {
        Self { x1: linalg::zeros(r, s), x2: linalg::zeros(r, s) }
    }

    pub fn identity(k: usize) -> Self {
        Self { x1: linalg::eye(k), x2: linalg::zeros(k, k) }
    }

    /// Embeds a passive (annihilation-only) matrix as `diag(X, X#)`.
    pub fn passive(x1: CMat) -> Self {
        let (r, s) = x1.shape();
        Self { x1, x2: linalg::zeros(r, s) }
    }

    /// Reads the upper half blocks of `x` after checking that it is
    /// doubled-up to within `tol` (Frobenius residual).
    pub fn from_full(x: &CMat, tol: f64) -> Result<Self> {
        let (p, q) = x.shape();
        let rh = half(p, "doubled-up rows")?;
        let sh = half(q, "doubled-up cols")?;
        if !linalg::is_finite(x) {
            return Err(LqssError::Structural("non-finite matrix entry".into()));
        }
        let res = doubled_up_residual(x);
        if res > tol * (1.0 + fro(x)) {
            return Err(LqssError::Structural(format!("matrix is not doubled-up (residual {res:.3e})")));
        }
        // Average the redundant halves so small asymmetries are projected out.
        let x1 = (x.view((0, 0), (rh, sh)) + x.view((rh, sh), (rh, sh)).map(|z| z.conj())) * r(0.5);
        let x2 = (x.view((0, sh), (rh, sh)) + x.view((rh, 0), (rh, sh)).map(|z| z.conj())) * r(0.5);
        Ok(Self { x1, x2 })
    }

    pub fn x1(&self) -> &CMat {
        &self.x1
    }

    pub fn x2(&self) -> &CMat {
        &self.x2
    }

    pub fn half_rows(&self) -> usize {
        self.x1.nrows()
    }

    pub fn half_cols(&self) -> usize {
        self.x1.ncols()
    }

    pub fn to_full(&self) -> CMat {
        let (r, s) = self.x1.shape();
        let mut m = linalg::zeros(2 * r, 2 * s);
        m.view_mut((0, 0), (r, s)).copy_from(&self.x1);
        m.view_mut((0, s), (r, s)).copy_from(&self.x2);
        m.view_mut((r, 0), (r, s)).copy_from(&self.x2.map(|z| z.conj()));
        m.view_mut((r, s), (r, s)).copy_from(&self.x1.map(|z| z.conj()));
        m
    }

    pub fn flat_adjoint(&self) -> DoubledUp {
        // (X♭)_1 = X1†, (X♭)_2 = -X2ᵀ
        DoubledUp { x1: self.x1.adjoint(), x2: -self.x2.transpose() }
    }

    pub fn mul(&self, other: &DoubledUp) -> Result<DoubledUp> {
        if self.half_cols() != other.half_rows() {
            return Err(LqssError::Structural(format!(
                "doubled-up product: inner dimensions {} and {} differ",
                self.half_cols(),
                other.half_rows()
            )));
        }
        let x1 = &self.x1 * &other.x1 + &self.x2 * other.x2.map(|z| z.conj());
        let x2 = &self.x1 * &other.x2 + &self.x2 * other.x1.map(|z| z.conj());
        Ok(DoubledUp { x1, x2 })
    }

    pub fn add(&self, other: &DoubledUp) -> Result<DoubledUp> {
        if self.x1.shape() != other.x1.shape() {
            return Err(LqssError::Structural("doubled-up sum: shape mismatch".into()));
        }
        Ok(DoubledUp { x1: &self.x1 + &other.x1, x2: &self.x2 + &other.x2 })
    }

    /// Scaling by a real number keeps the doubled-up structure (complex
    /// scalars in general do not).
    pub fn scale(&self, a: f64) -> DoubledUp {
        DoubledUp { x1: &self.x1 * r(a), x2: &self.x2 * r(a) }
    }

    pub fn is_passive(&self, tol: f64) -> bool {
        fro(&self.x2) <= tol
    }
}

/// `‖R R♭ - I‖_F + ‖R♭ R - I‖_F`.
pub fn bogoliubov_residual(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) {
        return f64::INFINITY;
    }
    let k = m.nrows() / 2;
    let f = flat_adjoint_unchecked(m, k, k);
    let id = linalg::eye(2 * k);
    fro(&(m * &f - &id)) + fro(&(&f * m - id))
}

/// A doubled-up, flat-unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Bogoliubov(DoubledUp);

impl Bogoliubov {
    pub fn new(d: DoubledUp, tol: f64) -> Result<Self> {
        if d.half_rows() != d.half_cols() {
            return Err(LqssError::Structural("Bogoliubov matrix must be square".into()));
        }
        let res = bogoliubov_residual(&d.to_full());
        let scale = 1.0 + fro(&d.to_full()).powi(2);
        if res > tol * scale {
            return Err(LqssError::Structural(format!("matrix is not Bogoliubov (residual {res:.3e})")));
        }
        Ok(Self(d))
    }

    pub fn from_full(x: &CMat, tol: f64) -> Result<Self> {
        Self::new(DoubledUp::from_full(x, tol)?, tol)
    }

    pub fn identity(k: usize) -> Self {
        Self(DoubledUp::identity(k))
    }

    pub fn inner(&self) -> &DoubledUp {
        &self.0
    }

    pub fn into_inner(self) -> DoubledUp {
        self.0
    }

    pub fn to_full(&self) -> CMat {
        self.0.to_full()
    }

    pub fn dim(&self) -> usize {
        self.0.half_rows()
    }

    /// `R♭ = R⁻¹`.
    pub fn inverse(&self) -> Bogoliubov {
        Bogoliubov(self.0.flat_adjoint())
    }

    pub fn compose(&self, other: &Bogoliubov) -> Result<Bogoliubov> {
        Ok(Bogoliubov(self.0.mul(&other.0)?))
    }
}

/// `Φ_{2m} X Φ_{2n}⁻¹` for a doubled-up `X`; the result is real.
pub fn phi_to_real(x: &DoubledUp) -> RMat {
    let (m, n) = (x.half_rows(), x.half_cols());
    let full = phi_matrix(m) * x.to_full() * phi_matrix(n).adjoint();
    full.map(|z| z.re)
}

/// Same as [`phi_to_real`] but accepts a full matrix and checks its
/// structure first.
pub fn phi_to_real_full(x: &CMat, tol: f64) -> Result<RMat> {
    Ok(phi_to_real(&DoubledUp::from_full(x, tol)?))
}

/// `Φ_{2m}⁻¹ X Φ_{2n}` for a real `2m x 2n` matrix.
pub fn phi_to_doubled(x: &RMat) -> Result<DoubledUp> {
    let m = half(x.nrows(), "phi_to_doubled rows")?;
    let n = half(x.ncols(), "phi_to_doubled cols")?;
    let full = phi_matrix(m).adjoint() * linalg::to_complex(x) * phi_matrix(n);
    DoubledUp::from_full(&full, 1e-9)
}

/// Random Bogoliubov matrix `exp(-i J H)` with `H` a random Hermitian
/// doubled-up matrix whose entries have standard deviation `scale`.
pub fn random_bogoliubov<R: Rng + ?Sized>(rng: &mut R, k: usize, scale: f64) -> Bogoliubov {
    assert!(k >= 1, "random_bogoliubov needs k >= 1");
    let h = random_hermitian_doubled(rng, k, scale);
    bogoliubov_from_hamiltonian(&h)
}

/// Random Hermitian doubled-up `2k x 2k` matrix: `H1` Hermitian, `H2`
/// complex symmetric.
pub fn random_hermitian_doubled<R: Rng + ?Sized>(rng: &mut R, k: usize, scale: f64) -> DoubledUp {
    let h1 = linalg::random_hermitian(rng, k) * r(scale);
    let a = linalg::random_complex(rng, k, k);
    let h2 = (&a + a.transpose()) * r(0.5 * scale);
    DoubledUp { x1: h1, x2: h2 }
}

/// `exp(-i J H)` for Hermitian doubled-up `H`.
pub fn bogoliubov_from_hamiltonian(h: &DoubledUp) -> Bogoliubov {
    let k = h.half_rows();
    let gen: CMat = (j_matrix(k) * h.to_full()) * (-I);
    let e = gen.exp();
    // The exponential is doubled-up up to rounding; project back.
    let d = DoubledUp::from_full(&e, 1e-6).expect("exp(-iJH) is doubled-up");
    Bogoliubov(d)
}

/// Random passive (block-diagonal) Bogoliubov matrix `diag(U, U#)`.
pub fn random_passive_bogoliubov<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Bogoliubov {
    Bogoliubov(DoubledUp::passive(linalg::random_unitary(rng, k)))
}

/// `S S♯` residual for a real matrix.
pub fn symplectic_residual(s: &RMat) -> f64 {
    match sharp_adjoint(s) {
        Ok(sh) => (s * sh - DMatrix::identity(s.nrows(), s.nrows())).norm(),
        Err(_) => f64::INFINITY,
    }
}
