//! Passive LQSS: transfer function, SVD-based reduction and the Cayley
//! feedback gain.

use num_complex::Complex64;

use crate::error::{LqssError, Result};
use crate::linalg::{self, c, fro, r, CMat, ONE};

/// Default relative rank cutoff on singular values of `N`.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Largest condition number accepted by the Cayley maps before reporting a
/// unit eigenvalue.
const CAYLEY_MAX_COND: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct PassiveLqssModel {
    ham: CMat,
    coupling: CMat,
    scattering: CMat,
}

impl PassiveLqssModel {
    /// Validates `M = M†`, `S S† = I` and the dimensions.
    pub fn new(ham: CMat, coupling: CMat, scattering: CMat, tol: f64) -> Result<Self> {
        let n = ham.nrows();
        if ham.ncols() != n {
            return Err(LqssError::Structural(format!("M must be square, got {}x{}", n, ham.ncols())));
        }
        if coupling.ncols() != n {
            return Err(LqssError::Structural(format!("N has {} columns but M is {n}x{n}", coupling.ncols())));
        }
        let m = coupling.nrows();
        if scattering.nrows() != m || scattering.ncols() != m {
            return Err(LqssError::Structural(format!(
                "S must be {m}x{m}, got {}x{}",
                scattering.nrows(),
                scattering.ncols()
            )));
        }
        for (what, x) in [("M", &ham), ("N", &coupling), ("S", &scattering)] {
            if !linalg::is_finite(x) {
                return Err(LqssError::Structural(format!("{what} has non-finite entries")));
            }
        }
        let herm = fro(&(&ham - ham.adjoint()));
        if herm > tol * (1.0 + fro(&ham)) {
            return Err(LqssError::Structural(format!("M is not Hermitian (residual {herm:.3e})")));
        }
        let unit = linalg::unitarity_residual(&scattering);
        if unit > tol * (1.0 + m as f64) {
            return Err(LqssError::Structural(format!("S is not unitary (residual {unit:.3e})")));
        }
        let ham = (&ham + ham.adjoint()) * r(0.5);
        Ok(Self { ham, coupling, scattering })
    }

    pub fn ham(&self) -> &CMat {
        &self.ham
    }

    pub fn coupling(&self) -> &CMat {
        &self.coupling
    }

    pub fn scattering(&self) -> &CMat {
        &self.scattering
    }

    /// Number of modes.
    pub fn n(&self) -> usize {
        self.ham.nrows()
    }

    /// Number of field channels.
    pub fn m(&self) -> usize {
        self.coupling.nrows()
    }
}

/// `G(s) = S - N (sI + iM + N†N/2)⁻¹ N† S`.
pub fn passive_tf(model: &PassiveLqssModel, s: Complex64) -> Result<CMat> {
    let g = reduced_tf_parts(model.ham(), model.coupling(), s)?;
    Ok(g * model.scattering())
}

/// `I - N (sI + iM + N†N/2)⁻¹ N†`.
pub(crate) fn reduced_tf_parts(ham: &CMat, coupling: &CMat, s: Complex64) -> Result<CMat> {
    let n = ham.nrows();
    let m = coupling.nrows();
    let a = linalg::eye(n) * s + ham * c(0.0, 1.0) + coupling.adjoint() * coupling * r(0.5);
    let x = linalg::solve(&a, &coupling.adjoint()).ok_or(LqssError::Pole { s })?;
    Ok(linalg::eye(m) - coupling * x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassiveRealization {
    /// Post network, `m x m` unitary.
    pub v: CMat,
    /// Pre network `V† S`.
    pub pre: CMat,
    pub w: CMat,
    pub n_hat: CMat,
    pub m_hat: CMat,
    /// Cavity detunings.
    pub detunings: Vec<f64>,
    /// Diagonal of `Ñ`, i.e. `sqrt(κ̃_i)`.
    pub n_tilde: Vec<f64>,
    pub x: CMat,
    pub r: CMat,
    pub rank: usize,
}

impl PassiveRealization {
    /// Singular values `sqrt(κ_i)` of the coupled modes.
    pub fn sqrt_kappas(&self) -> Vec<f64> {
        (0..self.rank).map(|i| self.n_hat[(i, i)].re).collect()
    }

    /// Residual of `D - (i/2) Ñ† X Ñ = M̂`.
    pub fn hamiltonian_residual(&self) -> f64 {
        let nt = linalg::diag_real(&self.n_tilde);
        let d = linalg::diag_real(&self.detunings);
        let lhs = d - &nt * &self.x * &nt * c(0.0, 0.5);
        fro(&(lhs - &self.m_hat))
    }
}

/// Random passive model with Hermitian `M`, Gaussian `N` and unitary `S`.
pub fn random_passive_model<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> PassiveLqssModel {
    let ham = linalg::random_hermitian(rng, n);
    let coupling = linalg::random_complex(rng, m, n);
    let scattering = linalg::random_unitary(rng, m);
    PassiveLqssModel::new(ham, coupling, scattering, 1e-9).expect("valid by construction")
}

/// SVD `N = V N̂ W†` with the column-phase convention: every `W` column has
/// its largest-magnitude entry real positive, and `V` columns of coupled
/// modes follow from `V_i = N w_i / σ_i`.
pub fn passive_svd(coupling: &CMat, rank_tol: f64) -> (CMat, CMat, CMat, usize) {
    let m = coupling.nrows();
    let n = coupling.ncols();
    let svd = linalg::full_svd(coupling);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd.s.iter().filter(|&&x| smax > 0.0 && x > rank_tol * smax).count();
    let mut w = svd.v.clone();
    for j in 0..n {
        let p = linalg::phase_to_real_positive(w.column(j).iter().copied());
        let col = w.column(j) * p;
        w.set_column(j, &col);
    }
    let mut v = linalg::zeros(m, m);
    for i in 0..rank {
        let col = coupling * w.column(i) / r(svd.s[i]);
        v.set_column(i, &col);
    }
    for i in rank..m {
        let mut col = svd.u.column(i).into_owned();
        let p = linalg::phase_to_real_positive(col.iter().copied());
        col *= p;
        v.set_column(i, &col);
    }
    let mut n_hat = linalg::zeros(m, n);
    for i in 0..rank {
        n_hat[(i, i)] = r(svd.s[i]);
    }
    (v, n_hat, w, rank)
}

/// Realizes `G(s)` as `V Ĝ(s) (V† S)` with `Ĝ` built from a bank of cavities
/// with detunings `D` and interconnection couplings `Ñ` closed through the
/// unitary feedback `R`.
pub fn synthesize_passive(
    model: &PassiveLqssModel,
    detunings: &[f64],
    n_tilde: &[f64],
    rank_tol: f64,
) -> Result<PassiveRealization> {
    let n = model.n();
    if detunings.len() != n || n_tilde.len() != n {
        return Err(LqssError::Parameter(format!(
            "need {n} detunings and {n} interconnect couplings, got {} and {}",
            detunings.len(),
            n_tilde.len()
        )));
    }
    if let Some((i, &k)) = n_tilde.iter().enumerate().find(|(_, &k)| !(k > 0.0 && k.is_finite())) {
        return Err(LqssError::Parameter(format!("interconnect coupling {i} must be positive, got {k}")));
    }
    if let Some((i, d)) = detunings.iter().enumerate().find(|(_, d)| !d.is_finite()) {
        return Err(LqssError::Parameter(format!("detuning {i} is not finite ({d})")));
    }
    let (v, n_hat, w, rank) = passive_svd(model.coupling(), rank_tol);
    let m_hat = w.adjoint() * model.ham() * &w;
    let m_hat = (&m_hat + m_hat.adjoint()) * r(0.5);
    let x = feedback_x(&m_hat, detunings, n_tilde);
    let rr = inv_cayley(&x)?;
    let pre = v.adjoint() * model.scattering();
    Ok(PassiveRealization {
        v,
        pre,
        w,
        n_hat,
        m_hat,
        detunings: detunings.to_vec(),
        n_tilde: n_tilde.to_vec(),
        x,
        r: rr,
        rank,
    })
}

/// `X = 2i Ñ⁻¹ (M̂ - D) Ñ⁻¹` for real diagonal `Ñ`.
pub fn feedback_x(m_hat: &CMat, detunings: &[f64], n_tilde: &[f64]) -> CMat {
    let n = m_hat.nrows();
    let mut x = m_hat - linalg::diag_real(detunings);
    for i in 0..n {
        for j in 0..n {
            x[(i, j)] *= c(0.0, 2.0) / (n_tilde[i] * n_tilde[j]);
        }
    }
    // exact skew-Hermitian part
    (&x - x.adjoint()) * r(0.5)
}

fn nearest_eigenvalue(a: &CMat, target: Complex64) -> Complex64 {
    linalg::eigenvalues(a)
        .ok()
        .and_then(|ev| ev.into_iter().min_by(|x, y| (x - target).norm().total_cmp(&(y - target).norm())))
        .unwrap_or(target)
}

fn cayley_inverse(a: &CMat, source: &CMat, target: Complex64) -> Result<CMat> {
    linalg::inverse_checked(a, CAYLEY_MAX_COND, "Cayley transform")
        .map_err(|_| LqssError::UnitEigenvalue { eigenvalue: nearest_eigenvalue(source, target) })
}

/// `X = (I - R)⁻¹ (I + R)`.
pub fn cayley(rr: &CMat) -> Result<CMat> {
    let n = rr.nrows();
    if rr.ncols() != n {
        return Err(LqssError::Structural("Cayley transform needs a square matrix".into()));
    }
    let id = linalg::eye(n);
    let inv = cayley_inverse(&(&id - rr), rr, ONE)?;
    Ok(inv * (id + rr))
}

/// `R = (X - I)(X + I)⁻¹`.
pub fn inv_cayley(x: &CMat) -> Result<CMat> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(LqssError::Structural("Cayley transform needs a square matrix".into()));
    }
    let id = linalg::eye(n);
    let inv = cayley_inverse(&(x + &id), x, -ONE)?;
    Ok((x - id) * inv)
}

/// Cayley map restricted to unitaries; the output is made exactly
/// skew-Hermitian after checking it is within `tol`.
pub fn cayley_unitary(rr: &CMat, tol: f64) -> Result<CMat> {
    let u = linalg::unitarity_residual(rr);
    if u > tol {
        return Err(LqssError::Structural(format!("R is not unitary (residual {u:.3e})")));
    }
    let x = cayley(rr)?;
    Ok((&x - x.adjoint()) * r(0.5))
}

#[cfg(test)]
#[allow(clippy::approx_constant, clippy::needless_range_loop)] // published 4-digit values
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example1() -> PassiveLqssModel {
        let m = linalg::from_real_rows(3, 3, &[5., 1., -2., 1., 3., 0., -2., 0., 4.]);
        let n = linalg::from_real_rows(3, 3, &[1., 2., 1., 0., -1., 3., 2., 3., 5.]);
        PassiveLqssModel::new(m, n, linalg::eye(3), 1e-9).unwrap()
    }

    #[test]
    fn validation_errors() {
        let m = linalg::from_real_rows(2, 2, &[1., 2., 0., 1.]);
        assert!(PassiveLqssModel::new(m, linalg::eye(2), linalg::eye(2), 1e-9).is_err());
        let s = linalg::from_real_rows(2, 2, &[1., 1., 0., 1.]);
        assert!(PassiveLqssModel::new(linalg::eye(2), linalg::eye(2), s, 1e-9).is_err());
        assert!(PassiveLqssModel::new(linalg::eye(2), linalg::eye(3), linalg::eye(3), 1e-9).is_err());
    }

    #[test]
    fn zero_coupling_is_scattering() {
        let mut g = ChaCha8Rng::seed_from_u64(3);
        let s = linalg::random_unitary(&mut g, 2);
        let model =
            PassiveLqssModel::new(linalg::random_hermitian(&mut g, 3), linalg::zeros(2, 3), s.clone(), 1e-9).unwrap();
        let gs = passive_tf(&model, c(0.3, 1.0)).unwrap();
        assert!(fro(&(gs - s)) < 1e-14);
    }

    #[test]
    fn high_frequency_limit() {
        let model = example1();
        let g = passive_tf(&model, c(1e9, 0.0)).unwrap();
        assert!(fro(&(g - model.scattering())) < 1e-6);
    }

    #[test]
    fn example1_svd_and_hamiltonian() {
        let model = example1();
        let real = synthesize_passive(&model, &[0.0; 3], &[1.0; 3], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(real.rank, 2);
        let k = real.sqrt_kappas();
        assert!((k[0] - 6.8092).abs() < 1e-3 && (k[1] - 2.7632).abs() < 1e-3);
        let recon = &real.v * &real.n_hat * real.w.adjoint();
        assert!(fro(&(recon - model.coupling())) < 1e-12);
        let published = [[3.1315, 0.0370, -0.7200], [0.0370, 4.4278, -2.2169], [-0.7200, -2.2169, 4.4407]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((real.m_hat[(i, j)].norm() - f64::abs(published[i][j])).abs() < 1e-3, "({i},{j})");
            }
        }
        let xd = [6.2631, 8.8556, 8.8814];
        for i in 0..3 {
            assert!((real.x[(i, i)] - c(0.0, xd[i])).norm() < 1e-3);
        }
        assert!(real.hamiltonian_residual() < 1e-12);
        assert!(linalg::unitarity_residual(&real.r) < 1e-10);
        assert!(fro(&(cayley(&real.r).unwrap() - &real.x)) < 1e-10);
    }

    #[test]
    fn example1_ref_feedback_pair() {
        // the reference X and R are related by the Cayley map to display precision
        let x =
            linalg::from_real_rows(3, 3, &[6.2631, 0.0740, -1.4400, 0.0740, 8.8556, -4.4337, -1.4400, -4.4337, 8.8814])
                * c(0.0, 1.0);
        let re = linalg::from_real_rows(
            3,
            3,
            &[0.9429, -0.0145, -0.0237, -0.0145, 0.9438, -0.0467, -0.0237, -0.0467, 0.9389],
        );
        let im =
            linalg::from_real_rows(3, 3, &[0.3245, 0.0276, 0.0637, 0.0276, 0.2918, 0.1449, 0.0637, 0.1449, 0.3010]);
        let ref_r = re + im * c(0.0, 1.0);
        let rr = inv_cayley(&x).unwrap();
        assert!(fro(&(rr - &ref_r)) < 1e-3 * 3.0);
        let back = cayley(&ref_r).unwrap();
        assert!(fro(&(back - x)) / 17.0 < 1e-3 * 3.0);
    }

    #[test]
    fn trivial_cayley() {
        let x = cayley(&(-linalg::eye(3))).unwrap();
        assert!(fro(&x) < 1e-15);
        let rr = inv_cayley(&linalg::zeros(3, 3)).unwrap();
        assert!(fro(&(rr + linalg::eye(3))) < 1e-15);
        let model = PassiveLqssModel::new(linalg::zeros(2, 2), linalg::eye(2), linalg::eye(2), 1e-9).unwrap();
        let real = synthesize_passive(&model, &[0.0; 2], &[1.0; 2], DEFAULT_RANK_TOL).unwrap();
        assert!(fro(&real.m_hat) < 1e-15 && fro(&real.x) < 1e-15);
        assert!(fro(&(&real.r + linalg::eye(2))) < 1e-15);
    }

    #[test]
    fn unit_eigenvalue_reported() {
        let rr = linalg::diag_real(&[1.0, -1.0]);
        match cayley(&rr) {
            Err(LqssError::UnitEigenvalue { eigenvalue }) => assert!((eigenvalue - ONE).norm() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cayley_round_trips() {
        let mut g = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = g.random_range(1..6);
            let x = linalg::random_hermitian(&mut g, n) * c(0.0, 1.0);
            let rr = inv_cayley(&x).unwrap();
            assert!(linalg::unitarity_residual(&rr) < 1e-10);
            assert!(fro(&(cayley_unitary(&rr, 1e-9).unwrap() - &x)) < 1e-10 * (1.0 + fro(&x)));
        }
    }

    #[test]
    fn bad_parameters() {
        let model = example1();
        assert!(matches!(
            synthesize_passive(&model, &[0.0; 3], &[1.0, 0.0, 1.0], DEFAULT_RANK_TOL),
            Err(LqssError::Parameter(_))
        ));
        assert!(synthesize_passive(&model, &[0.0; 2], &[1.0; 3], DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn reduced_tf_factorization() {
        let mut g = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let m = 3;
        let model = PassiveLqssModel::new(
            linalg::random_hermitian(&mut g, n),
            linalg::random_complex(&mut g, m, n),
            linalg::random_unitary(&mut g, m),
            1e-9,
        )
        .unwrap();
        let real = synthesize_passive(&model, &[0.3; 4], &[1.2; 4], DEFAULT_RANK_TOL).unwrap();
        for k in 0..5 {
            let s = c(0.1 + k as f64, 2.0 - k as f64);
            let gh = reduced_tf_parts(&real.m_hat, &real.n_hat, s).unwrap();
            let lhs = passive_tf(&model, s).unwrap();
            assert!(fro(&(&real.v * &gh * &real.pre - lhs)) < 1e-9);
        }
    }
}
