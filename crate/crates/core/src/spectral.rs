//! Spectral analysis of `𝒩 = N♭N` in the Krein space `(C^{2n}, J)`.
//!
//! `𝒩` is ♭-Hermitian and doubled-up, so its spectrum is closed under
//! conjugation, real eigenspaces carry a nondegenerate indefinite form of
//! signature `(d, d)`, and each complex eigenspace `E_λ` carries the
//! nondegenerate antisymmetric form `ω(u, w) = uᵀ 𝕁 w`. The decomposition
//! below picks J-orthonormal bases adapted to these structures.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LqssError, Result};
use crate::krein::{self, DoubledUp, KreinVector};
use crate::linalg::{self, r, CMat, CVec, ZERO};

/// Numerical thresholds for classification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Band for "real" and "zero" eigenvalues.
    pub class_tol: f64,
    /// Eigenvalues closer than `cluster_tol * (1 + ‖𝒩‖)` are one cluster.
    pub cluster_tol: f64,
    /// Relative threshold for numerical rank / null spaces.
    pub rank_tol: f64,
    /// Relative threshold for membership in `Ker N`.
    pub kernel_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { class_tol: 1e-8, cluster_tol: 1e-5, rank_tol: 1e-8, kernel_tol: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    RealPositive,
    RealNegative,
    ComplexPair,
    /// Real eigenvalue with two Jordan blocks of size 2 (one chain and its
    /// conjugate partner).
    Jordan2,
    /// Zero eigenvectors outside `Ker N` (J-degenerate coupling).
    ZeroOffKernel,
    ZeroInKernel,
}

/// One eigenvalue class.
///
/// `vectors` are the half columns this class contributes to `W`; the other
/// half is `Σ v#` for each of them. Every listed vector has J-norm `+1`.
/// Layout per kind:
/// - real: one eigenvector per `±` pair,
/// - complex: `[z̃1, Σ z̃2#]` per unit,
/// - Jordan-2: `[z̄1, Σ z̄2#]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenClass {
    pub kind: ClassKind,
    pub value: Complex64,
    pub vectors: Vec<KreinVector>,
    pub jordan_size: usize,
    /// For `Jordan2` at zero: whether the eigenvector lies in `Ker N`.
    pub in_kernel: bool,
}

impl EigenClass {
    pub fn matrix(&self) -> CMat {
        cols_to_mat(&self.vectors)
    }

    /// Number of `(+)` half columns.
    pub fn width(&self) -> usize {
        self.vectors.len()
    }

    /// Number of complex units (`width / 2`) for complex classes.
    pub fn units(&self) -> usize {
        match self.kind {
            ClassKind::ComplexPair => self.vectors.len() / 2,
            _ => self.vectors.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KreinSpectrum {
    pub n: usize,
    pub classes: Vec<EigenClass>,
    pub r_plus: usize,
    pub r_minus: usize,
    pub r_c: usize,
    pub r_jordan: usize,
    pub r_0_off_kernel: usize,
    pub r_0_kernel: usize,
}

impl KreinSpectrum {
    /// Half columns `Z` of `W = [Z, Σ Z#]` in class order.
    pub fn half_vectors(&self) -> CMat {
        let all: Vec<KreinVector> = self.classes.iter().flat_map(|c| c.vectors.iter().cloned()).collect();
        if all.is_empty() {
            return linalg::zeros(2 * self.n, 0);
        }
        cols_to_mat(&all)
    }

    pub fn w_matrix(&self) -> CMat {
        krein::double_columns(&self.half_vectors())
    }

    pub fn class(&self, kind: ClassKind) -> impl Iterator<Item = &EigenClass> {
        self.classes.iter().filter(move |c| c.kind == kind)
    }

    /// Eigenvalues with multiplicity, as `𝒩` would report them.
    pub fn eigenvalue_multiset(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        for c in &self.classes {
            let k = c.vectors.len();
            match c.kind {
                ClassKind::ComplexPair => {
                    for _ in 0..k {
                        out.push(c.value);
                        out.push(c.value.conj());
                    }
                }
                _ => {
                    for _ in 0..2 * k {
                        out.push(c.value);
                    }
                }
            }
        }
        out
    }
}

fn cols_to_mat(v: &[KreinVector]) -> CMat {
    let rows = v.first().map(|x| x.0.len()).unwrap_or(0);
    let mut m = linalg::zeros(rows, v.len());
    for (j, x) in v.iter().enumerate() {
        m.set_column(j, &x.0);
    }
    m
}

/// `𝒩 = N♭ N`.
pub fn compute_caln(n: &DoubledUp) -> DoubledUp {
    n.flat_adjoint().mul(n).expect("N♭ N is always conformable")
}

#[derive(Clone, Debug)]
struct Cluster {
    mean: Complex64,
    mult: usize,
    spread: f64,
}

fn cluster_eigenvalues(eigs: &[Complex64], tol: f64) -> Vec<Cluster> {
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
    for (i, &e) in eigs.iter().enumerate().take(n) {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(e);
    }
    groups
        .into_values()
        .map(|g| {
            let mean = g.iter().sum::<Complex64>() / r(g.len() as f64);
            let spread = g.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
            Cluster { mean, mult: g.len(), spread }
        })
        .collect()
}

fn shifted(full: &CMat, lambda: Complex64) -> CMat {
    let mut a = full.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= lambda;
    }
    a
}

/// Right singular vectors for the `k` smallest singular values, plus the
/// count of singular values below `thr`.
fn smallest_right_vectors(a: &CMat, k: usize, thr: f64) -> (CMat, usize) {
    let q = a.ncols();
    let svd = linalg::full_svd(a);
    let sv = |j: usize| if j < svd.s.len() { svd.s[j] } else { 0.0 };
    let below = (0..q).filter(|&j| sv(j) <= thr).count();
    let mut out = linalg::zeros(q, k);
    for c in 0..k {
        out.set_column(c, &svd.v.column(q - k + c));
    }
    (out, below)
}

fn gram(basis: &CMat) -> CMat {
    let k = basis.nrows() / 2;
    basis.adjoint() * krein::j_matrix(k) * basis
}

/// Splits the J-Gram form on span(`basis`) by sign. Returns the
/// J-normalized positive directions and the number of negative and
/// (numerically) neutral directions.
fn positive_directions(basis: &CMat, neutral_tol: f64) -> (Vec<CVec>, usize, usize) {
    if basis.ncols() == 0 {
        return (vec![], 0, 0);
    }
    let (vals, vecs) = linalg::hermitian_eigen(&gram(basis));
    let mut pos = Vec::new();
    let (mut neg, mut neutral) = (0, 0);
    for (i, &v) in vals.iter().enumerate().rev() {
        if v > neutral_tol {
            pos.push(basis * vecs.column(i) / r(v.sqrt()));
        } else if v < -neutral_tol {
            neg += 1;
        } else {
            neutral += 1;
        }
    }
    (pos, neg, neutral)
}

fn phase_fixed(v: CVec) -> CVec {
    let p = linalg::phase_to_real_positive(v.iter().copied());
    v * p
}

fn omega(u: &CVec, w: &CVec) -> Complex64 {
    let k = u.len() / 2;
    (0..k).map(|i| u[i] * w[i + k] - u[i + k] * w[i]).sum()
}

/// Darboux basis `(a_i, b_i)` of `ω` on span(`basis`): `ω(a_i, b_j) = δ_ij`,
/// `ω(a_i, a_j) = ω(b_i, b_j) = 0`. Pivoted symplectic Gram-Schmidt.
fn darboux_basis(basis: &CMat, tol: f64) -> Result<Vec<(CVec, CVec)>> {
    let mut rest: Vec<CVec> = (0..basis.ncols()).map(|j| basis.column(j).into_owned()).collect();
    let mut out = Vec::new();
    while rest.len() >= 2 {
        let mut best = (0, 1, 0.0);
        for i in 0..rest.len() {
            for j in i + 1..rest.len() {
                let w = omega(&rest[i], &rest[j]).norm();
                if w > best.2 {
                    best = (i, j, w);
                }
            }
        }
        if best.2 <= tol {
            return Err(LqssError::Degeneracy("complex eigenspace carries a degenerate symplectic form".into()));
        }
        let (i, j) = (best.0, best.1);
        let a = rest[i].clone();
        let mut b = &rest[j] / omega(&a, &rest[j]);
        // balance norms, keeping ω(a, b) = 1
        let t = (b.norm() / a.norm()).sqrt();
        let a = a * r(t);
        b /= r(t);
        rest.remove(j);
        rest.remove(i);
        for v in rest.iter_mut() {
            let wa = omega(v, &a);
            let wb = omega(v, &b);
            *v = &*v - &a * wb + &b * wa;
        }
        rest.retain(|v| v.norm() > tol);
        out.push((a, b));
    }
    if !rest.is_empty() {
        return Err(LqssError::Degeneracy("complex eigenspace has odd dimension".into()));
    }
    Ok(out)
}

/// Classifies the spectrum of `caln = N♭N` and builds J-orthonormal
/// eigenvector bases.
pub fn krein_spectral_decomposition(
    caln: &DoubledUp,
    n_mat: &DoubledUp,
    opts: &SpectralOptions,
) -> Result<KreinSpectrum> {
    let n = caln.half_rows();
    if caln.half_cols() != n || n_mat.half_cols() != n {
        return Err(LqssError::Structural(format!(
            "spectral decomposition: 𝒩 is {}x{} halves, N has {} half columns",
            caln.half_rows(),
            caln.half_cols(),
            n_mat.half_cols()
        )));
    }
    let full = caln.to_full();
    let norm = linalg::spectral_norm(&full);
    let scale = 1.0 + norm;
    let eigs = linalg::eigenvalues(&full)?;
    let clusters = cluster_eigenvalues(&eigs, opts.cluster_tol * scale);
    let nfull = n_mat.to_full();
    let n_norm = linalg::spectral_norm(&nfull);

    let mut classes = Vec::new();
    for cl in &clusters {
        let lam = cl.mean;
        let is_zero = lam.norm() < opts.class_tol * scale;
        let is_real = lam.im.abs() < opts.class_tol * (1.0 + lam.norm());
        if !is_real && lam.im < 0.0 {
            continue; // handled with its conjugate
        }
        let lam = if is_zero {
            ZERO
        } else if is_real {
            r(lam.re)
        } else {
            lam
        };
        if !is_real {
            let partner = clusters.iter().find(|o| (o.mean - lam.conj()).norm() < opts.cluster_tol * scale);
            if partner.map(|p| p.mult) != Some(cl.mult) {
                return Err(LqssError::Numerical(format!(
                    "eigenvalue {lam} has no conjugate partner of equal multiplicity"
                )));
            }
        }
        let a = shifted(&full, lam);
        let thr = opts.rank_tol * scale + 10.0 * cl.spread;
        let (e, geo) = smallest_right_vectors(&a, cl.mult, thr);
        if geo >= cl.mult {
            classes.extend(semisimple_class(lam, is_zero, is_real, &e, &nfull, n_norm, opts)?);
        } else if is_real && cl.mult == 4 && geo == 2 {
            let a2 = &a * &a;
            let thr2 = thr * (1.0 + linalg::spectral_norm(&a));
            let (k4, geo2) = smallest_right_vectors(&a2, 4, thr2);
            if geo2 < 4 {
                return Err(unsupported_jordan(lam, cl.mult, geo));
            }
            let (ker_a, _) = smallest_right_vectors(&a, 2, thr);
            classes.push(jordan2_class(lam, &a, &k4, &ker_a, &nfull, n_norm, opts)?);
        } else {
            return Err(unsupported_jordan(lam, cl.mult, geo));
        }
    }
    order_classes(&mut classes);
    let count = |k: ClassKind| -> usize { classes.iter().filter(|c| c.kind == k).map(|c| c.units()).sum() };
    let spec = KreinSpectrum {
        n,
        r_plus: count(ClassKind::RealPositive),
        r_minus: count(ClassKind::RealNegative),
        r_c: count(ClassKind::ComplexPair),
        r_jordan: classes.iter().filter(|c| c.kind == ClassKind::Jordan2).count(),
        r_0_off_kernel: count(ClassKind::ZeroOffKernel),
        r_0_kernel: count(ClassKind::ZeroInKernel),
        classes,
    };
    let total: usize = spec.classes.iter().map(|c| c.width()).sum();
    if total != n {
        return Err(LqssError::Numerical(format!("eigenvector count {total} does not match mode count {n}")));
    }
    Ok(spec)
}

fn unsupported_jordan(lam: Complex64, alg: usize, geo: usize) -> LqssError {
    LqssError::UnsupportedStructure(format!(
        "eigenvalue {lam:.6} of N♭N is not semisimple (algebraic multiplicity {alg}, geometric {geo}); only real Jordan blocks of size 2 are supported"
    ))
}

fn semisimple_class(
    lam: Complex64,
    is_zero: bool,
    is_real: bool,
    e: &CMat,
    nfull: &CMat,
    n_norm: f64,
    opts: &SpectralOptions,
) -> Result<Vec<EigenClass>> {
    let dim = e.ncols();
    let neutral_tol = 1e-7;
    if is_zero {
        return zero_classes(e, nfull, n_norm, opts);
    }
    if is_real {
        if !dim.is_multiple_of(2) {
            return Err(LqssError::Numerical(format!("real eigenvalue {lam} has odd multiplicity {dim}")));
        }
        let (pos, neg, neutral) = positive_directions(e, neutral_tol);
        if pos.len() != dim / 2 || neg != dim / 2 || neutral != 0 {
            return Err(LqssError::Degeneracy(format!(
                "eigenspace of {lam} has J-signature ({}, {}, {neutral} neutral)",
                pos.len(),
                neg
            )));
        }
        let kind = if lam.re > 0.0 { ClassKind::RealPositive } else { ClassKind::RealNegative };
        let vectors = pos.into_iter().map(|v| KreinVector(phase_fixed(v))).collect();
        return Ok(vec![EigenClass { kind, value: lam, vectors, jordan_size: 1, in_kernel: false }]);
    }
    let pairs = darboux_basis(e, 1e-10)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut vectors = Vec::with_capacity(2 * pairs.len());
    for (a, b) in pairs {
        let z1 = a;
        let z2 = krein::sigma_conj_vec(&b);
        let t1 = (&z1 + &z2) * r(s);
        let t2 = (&z1 - &z2) * r(s);
        let p = linalg::phase_to_real_positive(t1.iter().copied());
        let t1 = t1 * p;
        let t2 = t2 * p;
        vectors.push(KreinVector(t1));
        vectors.push(KreinVector(krein::sigma_conj_vec(&t2)));
    }
    Ok(vec![EigenClass { kind: ClassKind::ComplexPair, value: lam, vectors, jordan_size: 1, in_kernel: false }])
}

fn zero_classes(e0: &CMat, nfull: &CMat, n_norm: f64, opts: &SpectralOptions) -> Result<Vec<EigenClass>> {
    let neutral_tol = 1e-7;
    let dim = e0.ncols();
    // Ker N expressed inside E_0.
    let ne = nfull * e0;
    let coeff = linalg::null_space(&ne, opts.kernel_tol * (1.0 + n_norm));
    let kbasis = e0 * &coeff;
    let (z0, _, _) = positive_directions(&kbasis, neutral_tol);
    let z0: Vec<CVec> = z0.into_iter().map(phase_fixed).collect();
    let mut out = Vec::new();
    let off_dim = dim - 2 * z0.len();
    if off_dim > 0 {
        // J-orthogonal complement of [Z0, ΣZ0#] inside E_0.
        let comp = if z0.is_empty() {
            e0.clone()
        } else {
            let zm = cols_to_mat(&z0.iter().cloned().map(KreinVector).collect::<Vec<_>>());
            let b = krein::double_columns(&zm);
            let k = e0.nrows() / 2;
            let cons = b.adjoint() * krein::j_matrix(k) * e0;
            let c = linalg::null_space(&cons, 1e-9);
            e0 * c
        };
        let (zs, neg, neutral) = positive_directions(&comp, neutral_tol);
        if zs.len() * 2 != off_dim || neg != zs.len() || neutral != 0 {
            return Err(LqssError::Degeneracy(format!(
                "zero eigenspace outside Ker N has J-signature ({}, {neg}, {neutral} neutral)",
                zs.len()
            )));
        }
        out.push(EigenClass {
            kind: ClassKind::ZeroOffKernel,
            value: ZERO,
            vectors: zs.into_iter().map(KreinVector).collect(),
            jordan_size: 1,
            in_kernel: false,
        });
    }
    if !z0.is_empty() {
        out.push(EigenClass {
            kind: ClassKind::ZeroInKernel,
            value: ZERO,
            vectors: z0.into_iter().map(KreinVector).collect(),
            jordan_size: 1,
            in_kernel: true,
        });
    }
    Ok(out)
}

/// Jordan chain `A z2 = z1` with `z1† J z2 = 1`, `z2† J z2 = 0`, turned into
/// the J-orthonormal pair `z̄1 = (z1 + z2)/√2`, `z̄2 = (z1 - z2)/√2`.
fn jordan2_class(
    lam: Complex64,
    a: &CMat,
    k4: &CMat,
    ker_a: &CMat,
    nfull: &CMat,
    n_norm: f64,
    opts: &SpectralOptions,
) -> Result<EigenClass> {
    let k = a.nrows() / 2;
    let j = krein::j_matrix(k);
    // complement of Ker A inside Ker A²
    let proj = linalg::eye(a.nrows()) - ker_a * ker_a.adjoint();
    let q = linalg::orthonormal_columns(&(proj * k4), 2);
    if q.ncols() != 2 {
        return Err(LqssError::Numerical("Jordan chain space has wrong dimension".into()));
    }
    let h = q.adjoint() * &j * a * &q;
    let (vals, vecs) = linalg::hermitian_eigen(&h);
    if !(vals[1] > 1e-10 && vals[0] < -1e-10) {
        return Err(LqssError::Degeneracy(format!(
            "Jordan chain form at {lam} has signature ({:.3e}, {:.3e})",
            vals[0], vals[1]
        )));
    }
    let mut z2: CVec = &q * vecs.column(1) / r(vals[1].sqrt());
    let z1: CVec = a * &z2;
    let g = (z2.adjoint() * &j * &z2)[(0, 0)].re;
    z2 -= &z1 * r(g / 2.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let zb1 = (&z1 + &z2) * r(s);
    let zb2 = (&z1 - &z2) * r(s);
    let p = linalg::phase_to_real_positive(zb1.iter().copied());
    let zb1 = zb1 * p;
    let zb2 = zb2 * p;

    let mut in_kernel = false;
    if lam.norm() == 0.0 {
        let rel = (nfull * &z1).norm() / ((1.0 + n_norm) * z1.norm());
        if rel < opts.kernel_tol * 1e2 {
            in_kernel = true;
        } else if rel < 1e-5 {
            return Err(LqssError::Degeneracy(format!(
                "Jordan eigenvector membership in Ker N is ambiguous (relative residual {rel:.2e})"
            )));
        } else {
            // det N̄ = ±λ² for both branch forms, so this block has no
            // invertible canonical factor.
            return Err(LqssError::Degeneracy(
                "zero eigenvalue with a Jordan block of size 2 whose eigenvector is not in Ker N".into(),
            ));
        }
    }
    Ok(EigenClass {
        kind: ClassKind::Jordan2,
        value: lam,
        vectors: vec![KreinVector(zb1), KreinVector(krein::sigma_conj_vec(&zb2))],
        jordan_size: 2,
        in_kernel,
    })
}

fn order_classes(classes: &mut [EigenClass]) {
    fn rank(c: &EigenClass) -> (u8, f64) {
        match c.kind {
            ClassKind::RealPositive => (0, -c.value.re),
            ClassKind::RealNegative => (1, c.value.re),
            ClassKind::ComplexPair => (2, -c.value.norm()),
            ClassKind::Jordan2 => (3, if c.in_kernel { f64::INFINITY } else { -c.value.re }),
            ClassKind::ZeroOffKernel => (4, 0.0),
            ClassKind::ZeroInKernel => (5, 0.0),
        }
    }
    classes.sort_by(|a, b| {
        let (ka, va) = rank(a);
        let (kb, vb) = rank(b);
        ka.cmp(&kb).then(va.total_cmp(&vb))
    });
}

/// Outcome of the J-degeneracy check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    Nondegenerate,
    /// `Ker N ⊊ Ker 𝒩` with `P P♭ = 0`.
    DegenerateSpecial,
    DegenerateUnsupported,
}

/// `P = N [Z^{0*}, Σ Z^{0*}#]` for the off-kernel zero class, if any.
pub fn degenerate_block(n_mat: &DoubledUp, spectrum: &KreinSpectrum) -> Option<CMat> {
    let cls = spectrum.class(ClassKind::ZeroOffKernel).next()?;
    Some(n_mat.to_full() * krein::double_columns(&cls.matrix()))
}

/// Relative size of `P P♭`.
pub fn ppflat_residual(p: &CMat) -> f64 {
    let pf = krein::flat_adjoint(p).expect("P has even dimensions");
    let pn = linalg::fro(p);
    linalg::fro(&(p * pf)) / (1.0 + pn * pn)
}

/// Compares `Rank 𝒩` with `Rank N` and, when they differ, tests
/// `P P♭ = 0`.
pub fn check_nondegenerate(
    n_mat: &DoubledUp,
    caln: &DoubledUp,
    opts: &SpectralOptions,
    pp_tol: f64,
) -> Result<Degeneracy> {
    let rn = linalg::rank(&n_mat.to_full(), 1e-10);
    let rc = linalg::rank(&caln.to_full(), 1e-10);
    if rn == rc {
        return Ok(Degeneracy::Nondegenerate);
    }
    let spec = krein_spectral_decomposition(caln, n_mat, opts)?;
    match degenerate_block(n_mat, &spec) {
        None => Ok(Degeneracy::Nondegenerate),
        Some(p) if ppflat_residual(&p) < pp_tol => Ok(Degeneracy::DegenerateSpecial),
        Some(_) => Ok(Degeneracy::DegenerateUnsupported),
    }
}

/// `W♭ 𝒩 W` for the W assembled from a spectrum; block-structured for a
/// correct decomposition.
pub fn reduced_caln(caln: &DoubledUp, spectrum: &KreinSpectrum) -> CMat {
    let w = spectrum.w_matrix();
    let wf = krein::flat_adjoint(&w).expect("even");
    wf * caln.to_full() * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example2_n() -> DoubledUp {
        let n = linalg::from_real_rows(4, 4, &[0., 1., 2., 0., -1., 2., 1., -1., 2., 0., 0., 1., 1., -1., -1., 2.]);
        DoubledUp::from_full(&n, 1e-12).unwrap()
    }

    fn example3_n(k: [f64; 3]) -> DoubledUp {
        let col = CMat::from_fn(3, 1, |i, _| r(k[i].sqrt()));
        DoubledUp::new(col.clone(), col).unwrap()
    }

    fn assert_w_bogoliubov(spec: &KreinSpectrum) {
        let w = spec.w_matrix();
        assert!(krein::bogoliubov_residual(&w) < 1e-9, "W not Bogoliubov");
    }

    #[test]
    fn identity_coupling() {
        let n = DoubledUp::identity(1);
        let caln = compute_caln(&n);
        assert!(linalg::fro(&(caln.to_full() - linalg::eye(2))) < 1e-15);
        let spec = krein_spectral_decomposition(&caln, &n, &SpectralOptions::default()).unwrap();
        assert_eq!(spec.classes.len(), 1);
        let c = &spec.classes[0];
        assert_eq!(c.kind, ClassKind::RealPositive);
        assert!((c.value - ONE).norm() < 1e-12);
        let v = &c.vectors[0].0;
        assert!((v[0] - ONE).norm() < 1e-12 && v[1].norm() < 1e-12);
    }

    #[test]
    fn example2_eigenvalues_and_vectors() {
        let n = example2_n();
        let caln = compute_caln(&n);
        let mut eigs = linalg::eigenvalues(&caln.to_full()).unwrap();
        eigs.sort_by(|a, b| a.re.total_cmp(&b.re));
        let expect = [-2.8284, -2.8284, 2.8284, 2.8284];
        for (e, x) in eigs.iter().zip(expect) {
            assert!((e.re - x).abs() < 1e-3 && e.im.abs() < 1e-8);
        }
        let spec = krein_spectral_decomposition(&caln, &n, &SpectralOptions::default()).unwrap();
        assert_eq!((spec.r_plus, spec.r_minus, spec.r_c), (1, 1, 0));
        assert_w_bogoliubov(&spec);
        // the positive eigenspace is 2-dimensional with signature (1, 1); the
        // the reference z⁺ lies in it and has J-norm 1
        let zp = CVec::from_vec([0.2180, -1.1061, 0.5046, -0.1275].map(r).to_vec());
        let cal = caln.to_full();
        assert!((&cal * &zp - &zp * r(2.8284)).norm() < 2e-3 * zp.norm() * 3.0);
        assert!((krein::j_inner(&zp, &zp).unwrap().re - 1.0).abs() < 2e-3);
        let zm = CVec::from_vec([-1.0987, -0.1609, 0.0, 0.4827].map(r).to_vec());
        assert!((&cal * &zm + &zm * r(2.8284)).norm() < 2e-3 * zm.norm() * 3.0);
    }

    #[test]
    fn example3_is_degenerate_special() {
        let n = example3_n([1.0, 2.0, 3.0]);
        let caln = compute_caln(&n);
        assert!(linalg::fro(&caln.to_full()) < 1e-12);
        let opts = SpectralOptions::default();
        assert_eq!(check_nondegenerate(&n, &caln, &opts, 1e-9).unwrap(), Degeneracy::DegenerateSpecial);
        let spec = krein_spectral_decomposition(&caln, &n, &opts).unwrap();
        assert_eq!(spec.r_0_off_kernel, 1);
        let p = degenerate_block(&n, &spec).unwrap();
        assert!(ppflat_residual(&p) < 1e-12);
    }

    #[test]
    fn unequal_halves_are_degenerate_unsupported() {
        let n1 = CMat::from_fn(2, 1, |i, _| if i == 0 { ONE } else { ZERO });
        let n2 = CMat::from_fn(2, 1, |i, _| if i == 1 { ONE } else { ZERO });
        let n = DoubledUp::new(n1, n2).unwrap();
        let caln = compute_caln(&n);
        let d = check_nondegenerate(&n, &caln, &SpectralOptions::default(), 1e-9).unwrap();
        assert_eq!(d, Degeneracy::DegenerateUnsupported);
    }

    #[test]
    fn passive_full_rank_is_nondegenerate() {
        let n1 = linalg::from_real_rows(3, 3, &[1., 2., 1., 0., -1., 3., 2., 3., 5.]);
        let n = DoubledUp::passive(n1);
        let caln = compute_caln(&n);
        let d = check_nondegenerate(&n, &caln, &SpectralOptions::default(), 1e-9).unwrap();
        assert_eq!(d, Degeneracy::Nondegenerate);
    }

    #[test]
    fn zero_column_gives_kernel_class() {
        let mut g = ChaCha8Rng::seed_from_u64(3);
        let mut n1 = linalg::random_complex(&mut g, 2, 3);
        let mut n2 = linalg::random_complex(&mut g, 2, 3) * r(0.3);
        n1.column_mut(2).fill(ZERO);
        n2.column_mut(2).fill(ZERO);
        let n = DoubledUp::new(n1, n2).unwrap();
        let caln = compute_caln(&n);
        let opts = SpectralOptions::default();
        assert_eq!(check_nondegenerate(&n, &caln, &opts, 1e-9).unwrap(), Degeneracy::Nondegenerate);
        let spec = krein_spectral_decomposition(&caln, &n, &opts).unwrap();
        assert_eq!(spec.r_0_kernel, 1);
        assert_w_bogoliubov(&spec);
    }

    #[test]
    fn planted_complex_spectrum_recovered() {
        let mut g = ChaCha8Rng::seed_from_u64(5);
        // one complex unit λ = 1 + 2i, plus one positive 3.0
        let lam = Complex64::new(1.0, 2.0);
        let (mu, nu) = (lam.re, lam.im);
        let n = 3;
        let mut c1 = linalg::zeros(n, n);
        let mut c2 = linalg::zeros(n, n);
        c1[(0, 0)] = r(3.0);
        c1[(1, 1)] = r(mu);
        c1[(2, 2)] = r(mu);
        // -ν σ2 = [[0, iν], [-iν, 0]]
        c2[(1, 2)] = Complex64::new(0.0, nu);
        c2[(2, 1)] = Complex64::new(0.0, -nu);
        let nbar = DoubledUp::new(c1, c2).unwrap();
        let w = krein::random_bogoliubov(&mut g, n, 0.4);
        let caln_full = w.to_full() * nbar.to_full() * w.inverse().to_full();
        let caln = DoubledUp::from_full(&caln_full, 1e-9).unwrap();
        // any N with this 𝒩 works for the classification; kernel is trivial
        let spec = krein_spectral_decomposition(&caln, &DoubledUp::identity(n), &SpectralOptions::default()).unwrap();
        assert_eq!((spec.r_plus, spec.r_c), (1, 1));
        let cpx = spec.class(ClassKind::ComplexPair).next().unwrap();
        assert!((cpx.value - lam).norm() < 1e-8);
        assert_w_bogoliubov(&spec);
        let red = reduced_caln(&caln, &spec);
        // block of the complex unit: [[μ I, -ν σ2], [ν σ2, μ I]] at rows/cols 1,2,4,5
        let idx = [1, 2, 4, 5];
        let expect = [[mu, 0.0, 0.0, 0.0], [0.0, mu, 0.0, 0.0], [0.0, 0.0, mu, 0.0], [0.0, 0.0, 0.0, mu]];
        let ivals = [[0.0, 0.0, 0.0, nu], [0.0, 0.0, -nu, 0.0], [0.0, -nu, 0.0, 0.0], [nu, 0.0, 0.0, 0.0]];
        for a in 0..4 {
            for b in 0..4 {
                let z = red[(idx[a], idx[b])];
                assert!((z - Complex64::new(expect[a][b], ivals[a][b])).norm() < 1e-8, "({a},{b}) = {z}");
            }
        }
    }

    #[test]
    fn jordan3_rejected() {
        // X = diag(j3(1), j3(1)ᵀ) is ♯-self-adjoint, so X♯X = X² has Jordan-3 blocks
        let mut x = linalg::RMat::zeros(6, 6);
        for i in 0..3 {
            x[(i, i)] = 1.0;
            x[(i + 3, i + 3)] = 1.0;
        }
        x[(0, 1)] = 1.0;
        x[(1, 2)] = 1.0;
        x[(4, 3)] = 1.0;
        x[(5, 4)] = 1.0;
        let n = krein::phi_to_doubled(&x).unwrap();
        let caln = compute_caln(&n);
        let err = krein_spectral_decomposition(&caln, &n, &SpectralOptions::default()).unwrap_err();
        assert!(matches!(err, LqssError::UnsupportedStructure(_)), "{err:?}");
    }
}
