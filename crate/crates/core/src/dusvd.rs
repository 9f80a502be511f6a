//! Bogoliubov SVD `N = V N̂ W♭` of doubled-up matrices, with the Jordan-2
//! and `P P♭ = 0` degenerate extensions, and the real symplectic SVD
//! obtained through the Φ isomorphism.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LqssError, Result};
use crate::krein::{self, Bogoliubov, DoubledUp};
use crate::linalg::{self, c, fro, r, CMat, RMat, ZERO};
use crate::spectral::{self, ClassKind, EigenClass, KreinSpectrum, SpectralOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdOptions {
    pub spectral: SpectralOptions,
    /// Largest accepted condition number of an `N̄` block.
    pub max_cond: f64,
    /// Threshold on the relative size of `P P♭`.
    pub pp_tol: f64,
    /// Sign entries of `E` smaller than this are rejected.
    pub sign_tol: f64,
    /// Relative reconstruction residual above which the factorization is
    /// reported as a numerical failure.
    pub max_residual: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self { spectral: SpectralOptions::default(), max_cond: 1e12, pp_tol: 1e-9, sign_tol: 1e-8, max_residual: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    Positive {
        lambda: f64,
    },
    Negative {
        lambda: f64,
    },
    Complex {
        re: f64,
        im: f64,
        alpha: f64,
        beta: f64,
    },
    /// Real Jordan-2 eigenvalue; `branch` 1 is the `λ ≥ -1/2` form.
    Jordan2 {
        lambda: f64,
        branch: u8,
        c: f64,
        x: f64,
    },
    /// Zero Jordan-2 eigenvalue whose eigenvector lies in `Ker N`.
    Jordan2Kernel,
    /// Degenerate zero direction: passive and active coefficients `h`,
    /// relative sign `e`.
    Degenerate {
        h: f64,
        e: f64,
    },
    /// Zero eigenvectors in `Ker N`; no output rows.
    Kernel,
}

/// One diagonal block of `N̂`: rows `row..row+rows` of the V half, columns
/// `col..col+cols` of the W half.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingBlock {
    pub kind: BlockKind,
    pub row: usize,
    pub col: usize,
    pub nbar1: CMat,
    pub nbar2: CMat,
}

impl CouplingBlock {
    pub fn rows(&self) -> usize {
        self.nbar1.nrows()
    }

    pub fn cols(&self) -> usize {
        self.nbar1.ncols()
    }

    fn nbar_full(&self) -> CMat {
        DoubledUp::new(self.nbar1.clone(), self.nbar2.clone()).expect("same shape").to_full()
    }
}

/// Canonical coupling `N̂` together with its block description.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalCoupling {
    pub r_plus: usize,
    pub r_minus: usize,
    pub r_c: usize,
    pub lambdas_plus: Vec<f64>,
    pub lambdas_minus: Vec<f64>,
    pub lambdas_c: Vec<Complex64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub blocks: Vec<CouplingBlock>,
    pub n_hat: DoubledUp,
}

impl CanonicalCoupling {
    fn from_blocks(blocks: Vec<CouplingBlock>, m: usize, n: usize) -> Self {
        let mut n1 = linalg::zeros(m, n);
        let mut n2 = linalg::zeros(m, n);
        let (mut lp, mut lm, mut lc, mut al, mut be) = (vec![], vec![], vec![], vec![], vec![]);
        for b in &blocks {
            if b.rows() > 0 && b.cols() > 0 {
                n1.view_mut((b.row, b.col), (b.rows(), b.cols())).copy_from(&b.nbar1);
                n2.view_mut((b.row, b.col), (b.rows(), b.cols())).copy_from(&b.nbar2);
            }
            match b.kind {
                BlockKind::Positive { lambda } => lp.push(lambda),
                BlockKind::Negative { lambda } => lm.push(lambda),
                BlockKind::Complex { re, im, alpha, beta } => {
                    lc.push(Complex64::new(re, im));
                    al.push(alpha);
                    be.push(beta);
                }
                _ => {}
            }
        }
        Self {
            r_plus: lp.len(),
            r_minus: lm.len(),
            r_c: lc.len(),
            lambdas_plus: lp,
            lambdas_minus: lm,
            lambdas_c: lc,
            alphas: al,
            betas: be,
            blocks,
            n_hat: DoubledUp::new(n1, n2).expect("same shape"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuSvdResult {
    pub v: Bogoliubov,
    pub w: Bogoliubov,
    pub coupling: CanonicalCoupling,
    pub spectrum: KreinSpectrum,
    /// `‖N - V N̂ W♭‖_F / ‖N‖_F` (absolute when `N = 0`).
    pub residual: f64,
}

impl DuSvdResult {
    pub fn n_hat(&self) -> &DoubledUp {
        &self.coupling.n_hat
    }
}

/// `α = sqrt((|λ| + Re λ)/2)`, `β = Im λ / sqrt(2(|λ| + Re λ))`.
pub fn alpha_beta(lambda: Complex64) -> Result<(f64, f64)> {
    let s = lambda.norm() + lambda.re;
    if s <= 1e-14 * (1.0 + lambda.norm()) {
        return Err(LqssError::Numerical(format!(
            "complex eigenvalue {lambda} too close to the negative real axis for the canonical form"
        )));
    }
    Ok(((s / 2.0).sqrt(), lambda.im / (2.0 * s).sqrt()))
}

/// `N̄` for a real Jordan-2 eigenvalue, in the column order
/// `(z̄1, Σ z̄2#)`. Returns the two half blocks, the branch, `c` and `x`.
pub fn jordan2_nbar(lambda: f64) -> (CMat, CMat, u8, f64, f64) {
    if lambda >= 0.0 {
        let cc = (lambda + 0.5).sqrt();
        let x = (1.0 / (2.0 * cc * cc)).asinh() / 2.0;
        let (ch, sh) = (x.cosh(), x.sinh());
        let n1 = linalg::from_real_rows(2, 2, &[cc * ch, sh, 0.0, cc * ch]);
        let n2 = linalg::from_real_rows(2, 2, &[0.0, -cc * sh, cc * sh, ch]);
        (n1, n2, 1, cc, x)
    } else {
        let cc = (lambda - 0.5).abs().sqrt();
        let x = (1.0 / (2.0 * cc * cc)).asinh() / 2.0;
        let (ch, sh) = (x.cosh(), x.sinh());
        let n1 = linalg::from_real_rows(2, 2, &[ch, cc * sh, -cc * sh, 0.0]);
        let n2 = linalg::from_real_rows(2, 2, &[cc * ch, 0.0, sh, cc * ch]);
        (n1, n2, 2, cc, x)
    }
}

/// Rank-deficient `N̄` for a zero Jordan-2 eigenvalue with eigenvector in
/// `Ker N`; one output row, two modes.
pub fn jordan2_kernel_nbar() -> (CMat, CMat) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (linalg::from_real_rows(1, 2, &[s, 0.0]), linalg::from_real_rows(1, 2, &[0.0, -s]))
}

/// `𝒩̄` of a Jordan-2 block in the `(z̄1, Σ z̄2#)` basis.
pub fn jordan2_reduced(lambda: f64) -> CMat {
    linalg::from_real_rows(
        4,
        4,
        &[
            lambda + 0.5,
            0.0,
            0.0,
            -0.5,
            0.0,
            lambda - 0.5,
            0.5,
            0.0,
            0.0,
            -0.5,
            lambda + 0.5,
            0.0,
            0.5,
            0.0,
            0.0,
            lambda - 0.5,
        ],
    )
}

/// Blocks of `N̄` for every class except the degenerate one, laid out in
/// class order.
pub fn canonical_nbar(spectrum: &KreinSpectrum) -> Result<Vec<CouplingBlock>> {
    let mut blocks = Vec::new();
    let (mut row, mut col) = (0, 0);
    for cls in &spectrum.classes {
        match cls.kind {
            ClassKind::RealPositive | ClassKind::RealNegative => {
                let lam = cls.value.re;
                for _ in 0..cls.width() {
                    let s = lam.abs().sqrt();
                    let (a, b, kind) = if lam > 0.0 {
                        (s, 0.0, BlockKind::Positive { lambda: lam })
                    } else {
                        (0.0, s, BlockKind::Negative { lambda: lam })
                    };
                    blocks.push(CouplingBlock {
                        kind,
                        row,
                        col,
                        nbar1: CMat::from_element(1, 1, r(a)),
                        nbar2: CMat::from_element(1, 1, r(b)),
                    });
                    row += 1;
                    col += 1;
                }
            }
            ClassKind::ComplexPair => {
                let (alpha, beta) = alpha_beta(cls.value)?;
                for _ in 0..cls.units() {
                    let n1 = linalg::diag_real(&[alpha, alpha]);
                    // -β σ2
                    let mut n2 = linalg::zeros(2, 2);
                    n2[(0, 1)] = c(0.0, beta);
                    n2[(1, 0)] = c(0.0, -beta);
                    blocks.push(CouplingBlock {
                        kind: BlockKind::Complex { re: cls.value.re, im: cls.value.im, alpha, beta },
                        row,
                        col,
                        nbar1: n1,
                        nbar2: n2,
                    });
                    row += 2;
                    col += 2;
                }
            }
            ClassKind::Jordan2 => {
                if cls.in_kernel {
                    let (n1, n2) = jordan2_kernel_nbar();
                    blocks.push(CouplingBlock { kind: BlockKind::Jordan2Kernel, row, col, nbar1: n1, nbar2: n2 });
                    row += 1;
                } else {
                    let lam = cls.value.re;
                    let (n1, n2, branch, cc, x) = jordan2_nbar(lam);
                    blocks.push(CouplingBlock {
                        kind: BlockKind::Jordan2 { lambda: lam, branch, c: cc, x },
                        row,
                        col,
                        nbar1: n1,
                        nbar2: n2,
                    });
                    row += 2;
                }
                col += 2;
            }
            ClassKind::ZeroOffKernel => {
                col += cls.width();
            }
            ClassKind::ZeroInKernel => {
                let k = cls.width();
                blocks.push(CouplingBlock {
                    kind: BlockKind::Kernel,
                    row,
                    col,
                    nbar1: linalg::zeros(0, k),
                    nbar2: linalg::zeros(0, k),
                });
                col += k;
            }
        }
    }
    Ok(blocks)
}

/// Completes J-orthonormal doubled-up columns `[V_I, Σ V_I#]` to a
/// Bogoliubov matrix; returns the `m - r` new half columns.
pub fn complete_j_basis(v_i: &CMat, tol: f64) -> Result<CMat> {
    let rows = v_i.nrows();
    if !rows.is_multiple_of(2) {
        return Err(LqssError::Structural("complete_j_basis: odd row count".into()));
    }
    let m = rows / 2;
    let r_ = v_i.ncols();
    if r_ > m {
        return Err(LqssError::Structural(format!("complete_j_basis: {r_} columns exceed half dimension {m}")));
    }
    let j = krein::j_matrix(m);
    let b = krein::double_columns(v_i);
    if r_ > 0 {
        let g = b.adjoint() * &j * &b;
        let res = fro(&(g - krein::j_matrix(r_)));
        if res > tol * (1.0 + fro(&b).powi(2)) {
            return Err(LqssError::Structural(format!(
                "complete_j_basis: input columns are not J-orthonormal (residual {res:.3e})"
            )));
        }
    }
    if r_ == m {
        return Ok(linalg::zeros(rows, 0));
    }
    let comp = if r_ == 0 {
        linalg::eye(rows)
    } else {
        let cons = b.adjoint() * &j;
        // the complement has dimension exactly 2(m - r)
        let svd = linalg::full_svd(&cons);
        let mut basis = linalg::zeros(rows, rows - 2 * r_);
        for (c_, jj) in (2 * r_..rows).enumerate() {
            basis.set_column(c_, &svd.v.column(jj));
        }
        basis
    };
    let g = comp.adjoint() * &j * &comp;
    let (vals, vecs) = linalg::hermitian_eigen(&g);
    let want = m - r_;
    let mut out = linalg::zeros(rows, want);
    for k in 0..want {
        let idx = vals.len() - 1 - k;
        let v = vals[idx];
        if v <= 1e-8 {
            return Err(LqssError::Numerical("complete_j_basis: complement is not J-nondegenerate".into()));
        }
        let col = &comp * vecs.column(idx) / r(v.sqrt());
        out.set_column(k, &col);
    }
    Ok(out)
}

/// Factors for the degenerate directions, in coordinates where the output
/// space is `C^{2k}` with the standard J.
#[derive(Clone, Debug, PartialEq)]
pub struct DegenerateFactor {
    /// `k x k` unitary; the first `h.len()` columns are `U1`.
    pub u: CMat,
    pub h: Vec<f64>,
    pub e: Vec<f64>,
    /// `r0 x r0` unitary mixing the degenerate eigenvectors.
    pub y: CMat,
}

/// From `P = [[P1, P2], [P2#, P1#]]` with `P P♭ = 0`: `P1 = U H Y†`,
/// `P2 = U E H Yᵀ`.
pub fn degenerate_factor(p: &CMat, pp_tol: f64, sign_tol: f64) -> Result<DegenerateFactor> {
    let pd = DoubledUp::from_full(p, 1e-8)?;
    let res = spectral::ppflat_residual(p);
    if res > pp_tol {
        return Err(LqssError::Degeneracy(format!(
            "J-degenerate coupling with P P♭ != 0 (relative size {res:.3e}); no canonical form exists"
        )));
    }
    let r0 = pd.half_cols();
    let k = pd.half_rows();
    if r0 > k {
        return Err(LqssError::Degeneracy(format!("degenerate block needs {r0} output modes but only {k} remain")));
    }
    let svd = linalg::full_svd(pd.x1());
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let h: Vec<f64> = svd.s[..r0].to_vec();
    if h.iter().any(|&x| x <= 1e-10 * (1.0 + smax)) {
        return Err(LqssError::Numerical("degenerate block P1 is rank deficient".into()));
    }
    let u1 = svd.u.columns(0, r0).into_owned();
    let y = svd.v.clone();
    let d = u1.adjoint() * pd.x2() * y.map(|z| z.conj());
    let mut e = Vec::with_capacity(r0);
    for i in 0..r0 {
        let ratio = d[(i, i)] / r(h[i]);
        if ratio.re.abs() < sign_tol {
            return Err(LqssError::Numerical(format!(
                "sign of degenerate direction {i} is indeterminate ({ratio:.3e})"
            )));
        }
        e.push(ratio.re.signum());
    }
    Ok(DegenerateFactor { u: svd.u, h, e, y })
}

/// Bogoliubov SVD of a doubled-up `N`.
pub fn bogoliubov_svd(n_mat: &DoubledUp, opts: &SvdOptions) -> Result<DuSvdResult> {
    let caln = spectral::compute_caln(n_mat);
    let spectrum = spectral::krein_spectral_decomposition(&caln, n_mat, &opts.spectral)?;
    factor_with_spectrum(n_mat, spectrum, opts)
}

/// Same as [`bogoliubov_svd`] but insists that a Jordan-2 class is present.
pub fn jordan2_factor(n_mat: &DoubledUp, opts: &SvdOptions) -> Result<DuSvdResult> {
    let res = bogoliubov_svd(n_mat, opts)?;
    if res.spectrum.r_jordan == 0 {
        return Err(LqssError::Structural("no Jordan-2 eigenvalue present".into()));
    }
    Ok(res)
}

fn factor_with_spectrum(n_mat: &DoubledUp, spectrum: KreinSpectrum, opts: &SvdOptions) -> Result<DuSvdResult> {
    let m = n_mat.half_rows();
    let n = n_mat.half_cols();
    let nfull = n_mat.to_full();
    let mut blocks = canonical_nbar(&spectrum)?;

    // V columns of the nonsingular classes.
    let mut v_cols: Vec<CMat> = Vec::new();
    let mut bi = 0;
    for cls in &spectrum.classes {
        match cls.kind {
            ClassKind::ZeroOffKernel => continue,
            ClassKind::ZeroInKernel => {
                bi += 1;
                continue;
            }
            _ => {}
        }
        let blk_start = bi;
        let nblocks = match cls.kind {
            ClassKind::RealPositive | ClassKind::RealNegative => cls.width(),
            ClassKind::ComplexPair => cls.units(),
            _ => 1,
        };
        bi += nblocks;
        if cls.kind == ClassKind::Jordan2 && cls.in_kernel {
            let zb1 = cls.vectors[0].0.clone();
            let v1 = &nfull * zb1 * r(std::f64::consts::SQRT_2);
            v_cols.push(CMat::from_column_slice(2 * m, 1, v1.as_slice()));
            continue;
        }
        let per = cls.width() / nblocks;
        for (k, blk) in blocks[blk_start..blk_start + nblocks].iter().enumerate() {
            let zh = cls.matrix().columns(k * per, per).into_owned();
            let wb = krein::double_columns(&zh);
            let nb = blk.nbar_full();
            let inv = linalg::inverse_checked(&nb, opts.max_cond, "N̄ block")?;
            let vb = &nfull * wb * inv;
            v_cols.push(vb.columns(0, per).into_owned());
        }
    }
    let refs: Vec<&CMat> = v_cols.iter().collect();
    let v_i = if refs.is_empty() { linalg::zeros(2 * m, 0) } else { linalg::hstack(&refs) };
    let r_used = v_i.ncols();
    if r_used > m {
        return Err(LqssError::Degeneracy(format!("{r_used} coupled directions exceed the {m} output modes")));
    }
    let completion = complete_j_basis(&v_i, 1e-6)?;

    // Degenerate directions, expressed in the completion's coordinates.
    let mut w_half_parts: Vec<CMat> = Vec::new();
    let mut v_half = v_i.clone();
    let mut deg_info: Option<(usize, DegenerateFactor)> = None;
    for cls in &spectrum.classes {
        if cls.kind == ClassKind::ZeroOffKernel {
            let zs = cls.matrix();
            let p = &nfull * krein::double_columns(&zs);
            let bfull = krein::double_columns(&completion);
            let bflat = krein::flat_adjoint(&bfull)?;
            let pc = bflat * &p;
            let mut pn = p.clone();
            pn.fill(ZERO);
            // residual check on the original P keeps the diagnostic meaningful
            let res = spectral::ppflat_residual(&p);
            if res > opts.pp_tol {
                return Err(LqssError::Degeneracy(format!(
                    "J-degenerate coupling with P P♭ != 0 (relative size {res:.3e}); no canonical form exists"
                )));
            }
            let f = degenerate_factor(&pc, f64::INFINITY, opts.sign_tol)?;
            w_half_parts.push(zs * &f.y);
            let col = w_half_parts.iter().map(|x| x.ncols()).sum::<usize>() - cls.width();
            deg_info = Some((col, f));
        } else {
            w_half_parts.push(cls.matrix());
        }
    }
    match &deg_info {
        Some((_, f)) => {
            let rotated = &completion * &f.u;
            v_half = linalg::hstack(&[&v_half, &rotated]);
        }
        None => {
            v_half = linalg::hstack(&[&v_half, &completion]);
        }
    }
    if let Some((col, f)) = &deg_info {
        // insert degenerate blocks before the kernel block
        let pos = blocks.iter().position(|b| b.kind == BlockKind::Kernel).unwrap_or(blocks.len());
        let mut new_blocks = Vec::new();
        for (i, (&h, &e)) in f.h.iter().zip(&f.e).enumerate() {
            new_blocks.push(CouplingBlock {
                kind: BlockKind::Degenerate { h, e },
                row: r_used + i,
                col: col + i,
                nbar1: CMat::from_element(1, 1, r(h)),
                nbar2: CMat::from_element(1, 1, r(e * h)),
            });
        }
        blocks.splice(pos..pos, new_blocks);
    }
    let wrefs: Vec<&CMat> = w_half_parts.iter().collect();
    let w_half = if wrefs.is_empty() { linalg::zeros(2 * n, 0) } else { linalg::hstack(&wrefs) };

    let w_full = krein::double_columns(&w_half);
    let v_full = krein::double_columns(&v_half);
    let w = Bogoliubov::from_full(&w_full, 1e-6)?;
    let v = Bogoliubov::from_full(&v_full, 1e-6)?;
    let coupling = CanonicalCoupling::from_blocks(blocks, m, n);
    let recon = v.to_full() * coupling.n_hat.to_full() * w.inverse().to_full();
    let nn = fro(&nfull);
    let residual = fro(&(recon - &nfull)) / if nn > 0.0 { nn } else { 1.0 };
    if residual > opts.max_residual {
        return Err(LqssError::Numerical(format!("Bogoliubov SVD reconstruction residual {residual:.3e} too large")));
    }
    Ok(DuSvdResult { v, w, coupling, spectrum, residual })
}

/// Real symplectic SVD `X = V_s X̂ W_s♯`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticSvd {
    pub v: RMat,
    pub w: RMat,
    pub x_hat: RMat,
    pub complex: DuSvdResult,
}

pub fn symplectic_svd(x: &RMat, opts: &SvdOptions) -> Result<SymplecticSvd> {
    let xd = krein::phi_to_doubled(x)?;
    let res = bogoliubov_svd(&xd, opts)?;
    Ok(SymplecticSvd {
        v: krein::phi_to_real(res.v.inner()),
        w: krein::phi_to_real(res.w.inner()),
        x_hat: krein::phi_to_real(&res.coupling.n_hat),
        complex: res,
    })
}

/// Builds `N = V N̂ W♭` from planted factors; used by tests and generators.
pub fn plant(v: &Bogoliubov, n_hat: &DoubledUp, w: &Bogoliubov) -> Result<DoubledUp> {
    let full = v.to_full() * n_hat.to_full() * w.inverse().to_full();
    DoubledUp::from_full(&full, 1e-8)
}

/// `N̂` with the canonical blocks of the given eigenvalues (positive,
/// negative, complex with `Im > 0`), padded to `m x n` halves.
pub fn canonical_from_eigenvalues(
    plus: &[f64],
    minus: &[f64],
    complex: &[Complex64],
    m: usize,
    n: usize,
) -> Result<DoubledUp> {
    let r_ = plus.len() + minus.len() + 2 * complex.len();
    if r_ > m.min(n) {
        return Err(LqssError::Parameter(format!("{r_} coupled directions do not fit {m}x{n}")));
    }
    let mut n1 = linalg::zeros(m, n);
    let mut n2 = linalg::zeros(m, n);
    let mut k = 0;
    for &l in plus {
        n1[(k, k)] = r(l.sqrt());
        k += 1;
    }
    for &l in minus {
        n2[(k, k)] = r(l.abs().sqrt());
        k += 1;
    }
    for &l in complex {
        let (a, b) = alpha_beta(l)?;
        n1[(k, k)] = r(a);
        n1[(k + 1, k + 1)] = r(a);
        n2[(k, k + 1)] = c(0.0, b);
        n2[(k + 1, k)] = c(0.0, -b);
        k += 2;
    }
    DoubledUp::new(n1, n2)
}

/// Coupling matrix `V N̂ W♭` with known eigenvalue classes.
#[derive(Clone, Debug)]
pub struct PlantedCoupling {
    pub n: DoubledUp,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub complex: Vec<Complex64>,
}

/// Random planted coupling on `m x n` halves mixing positive, negative and
/// complex classes with eigenvalues at least `0.2` apart.
pub fn random_planted<R: rand::Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> PlantedCoupling {
    loop {
        let (mut plus, mut minus, mut complex) = (Vec::new(), Vec::new(), Vec::new());
        let mut k = 0;
        while k < m.min(n) {
            match rng.random_range(0..4) {
                0 => plus.push(rng.random_range(0.3..3.0)),
                1 => minus.push(-rng.random_range(0.3..3.0)),
                2 if k + 2 <= m.min(n) => {
                    complex.push(Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(0.3..2.0)));
                    k += 1;
                }
                _ if k > 0 || rng.random_bool(0.2) => break,
                _ => continue,
            }
            k += 1;
        }
        let all: Vec<Complex64> =
            plus.iter().chain(&minus).map(|&x| Complex64::new(x, 0.0)).chain(complex.iter().copied()).collect();
        let separated = all.iter().enumerate().all(|(i, a)| all[..i].iter().all(|b| (a - b).norm() > 0.2));
        if !separated {
            continue;
        }
        let nh = canonical_from_eigenvalues(&plus, &minus, &complex, m, n).expect("fits by construction");
        let v = krein::random_bogoliubov(rng, m, 0.3);
        let w = krein::random_bogoliubov(rng, n, 0.3);
        let n = plant(&v, &nh, &w).expect("doubled-up product");
        return PlantedCoupling { n, plus, minus, complex };
    }
}

/// Random `2 x 2` coupling with a planted Jordan-2 block at a nonzero
/// eigenvalue, optionally padded by a positive direction.
pub fn random_planted_jordan2<R: rand::Rng + ?Sized>(rng: &mut R, pad: bool) -> (DoubledUp, f64) {
    let mag = rng.random_range(0.15..2.0);
    let lambda = if rng.random_bool(0.5) { mag } else { -mag };
    let (n1, n2, ..) = jordan2_nbar(lambda);
    let k = if pad { 3 } else { 2 };
    let mut p1 = linalg::zeros(k, k);
    let mut p2 = linalg::zeros(k, k);
    p1.view_mut((0, 0), (2, 2)).copy_from(&n1);
    p2.view_mut((0, 0), (2, 2)).copy_from(&n2);
    if pad {
        // keep the extra eigenvalue away from λ
        p1[(2, 2)] = r((lambda.abs() + 1.0).sqrt());
    }
    let nb = DoubledUp::new(p1, p2).expect("same shape");
    let v = krein::random_bogoliubov(rng, k, 0.3);
    let w = krein::random_bogoliubov(rng, k, 0.3);
    (plant(&v, &nb, &w).expect("doubled-up product"), lambda)
}

/// Spectral classes of a result, for reporting.
pub fn class_summary(spectrum: &KreinSpectrum) -> Vec<(ClassKind, Complex64, usize)> {
    spectrum.classes.iter().map(|c: &EigenClass| (c.kind, c.value, c.width())).collect()
}
