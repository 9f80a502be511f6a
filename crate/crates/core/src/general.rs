//! General (active) LQSS: transfer function, cavity assignment from the
//! canonical coupling, and the Bogoliubov feedback gain.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dusvd::{self, BlockKind, CanonicalCoupling, SvdOptions};
use crate::error::{LqssError, Result};
use crate::krein::{self, Bogoliubov, DoubledUp};
use crate::linalg::{self, c, fro, r, CMat};
use crate::passive;
use crate::spectral::KreinSpectrum;
use crate::static_decomp::{BeamSplitterDevice, Device};

/// Entries of `N̂` below this are not turned into ports.
const PORT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralLqssModel {
    ham: DoubledUp,
    coupling: DoubledUp,
    scattering: Bogoliubov,
}

impl GeneralLqssModel {
    /// Takes the full `2n x 2n`, `2m x 2n`, `2m x 2m` matrices.
    pub fn new(ham: &CMat, coupling: &CMat, scattering: &CMat, tol: f64) -> Result<Self> {
        for (what, x) in [("M", ham), ("N", coupling), ("S", scattering)] {
            if !linalg::is_finite(x) {
                return Err(LqssError::Structural(format!("{what} has non-finite entries")));
            }
            if x.nrows() % 2 != 0 || x.ncols() % 2 != 0 {
                return Err(LqssError::Structural(format!(
                    "{what} must have even dimensions, got {}x{}",
                    x.nrows(),
                    x.ncols()
                )));
            }
        }
        if ham.nrows() != ham.ncols() {
            return Err(LqssError::Structural("M must be square".into()));
        }
        if coupling.ncols() != ham.nrows() {
            return Err(LqssError::Structural(format!(
                "N has {} columns but M is {}x{}",
                coupling.ncols(),
                ham.nrows(),
                ham.nrows()
            )));
        }
        if scattering.nrows() != coupling.nrows() || scattering.ncols() != coupling.nrows() {
            return Err(LqssError::Structural(format!(
                "S must be {0}x{0}, got {1}x{2}",
                coupling.nrows(),
                scattering.nrows(),
                scattering.ncols()
            )));
        }
        let herm = fro(&(ham - ham.adjoint()));
        if herm > tol * (1.0 + fro(ham)) {
            return Err(LqssError::Structural(format!("M is not Hermitian (residual {herm:.3e})")));
        }
        let ham = DoubledUp::from_full(&((ham + ham.adjoint()) * r(0.5)), tol * (1.0 + fro(ham)))?;
        let coupling = DoubledUp::from_full(coupling, tol * (1.0 + fro(coupling)))?;
        let scattering = Bogoliubov::from_full(scattering, tol)?;
        Ok(Self { ham, coupling, scattering })
    }

    pub fn from_parts(ham: DoubledUp, coupling: DoubledUp, scattering: Bogoliubov) -> Result<Self> {
        Self::new(&ham.to_full(), &coupling.to_full(), &scattering.to_full(), 1e-9)
    }

    /// Doubled-up embedding of a passive model.
    pub fn from_passive(model: &passive::PassiveLqssModel) -> Self {
        Self {
            ham: DoubledUp::passive(model.ham().clone()),
            coupling: DoubledUp::passive(model.coupling().clone()),
            scattering: Bogoliubov::new(DoubledUp::passive(model.scattering().clone()), 1e-6)
                .expect("unitary S embeds as Bogoliubov"),
        }
    }

    pub fn ham(&self) -> &DoubledUp {
        &self.ham
    }

    pub fn coupling(&self) -> &DoubledUp {
        &self.coupling
    }

    pub fn scattering(&self) -> &Bogoliubov {
        &self.scattering
    }

    pub fn n(&self) -> usize {
        self.ham.half_rows()
    }

    pub fn m(&self) -> usize {
        self.coupling.half_rows()
    }
}

/// `I - N (sI + iJM + N♭N/2)⁻¹ N♭`.
pub fn reduced_general_tf(ham: &CMat, coupling: &CMat, s: Complex64) -> Result<CMat> {
    let n2 = ham.ncols();
    let m2 = coupling.nrows();
    let nflat = krein::flat_adjoint(coupling)?;
    let j = krein::j_matrix(n2 / 2);
    let a = linalg::eye(n2) * s + j * ham * c(0.0, 1.0) + &nflat * coupling * r(0.5);
    let x = linalg::solve(&a, &nflat).ok_or(LqssError::Pole { s })?;
    Ok(linalg::eye(m2) - coupling * x)
}

/// `G(s) = [I - N (sI + iJM + N♭N/2)⁻¹ N♭] S`.
pub fn general_tf(model: &GeneralLqssModel, s: Complex64) -> Result<CMat> {
    let g = reduced_general_tf(&model.ham.to_full(), &model.coupling.to_full(), s)?;
    Ok(g * model.scattering.to_full())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortSpec {
    /// System channel (row of `N̂`) the port couples to.
    pub channel: usize,
    pub kappa: f64,
    pub g: f64,
    pub phi: f64,
    pub theta: f64,
}

impl PortSpec {
    pub fn is_passive(&self) -> bool {
        self.g == 0.0
    }

    pub fn is_active(&self) -> bool {
        self.kappa == 0.0
    }

    /// `(e^{iφ} √κ, e^{iθ} √g)`.
    pub fn coefficients(&self) -> (Complex64, Complex64) {
        (Complex64::from_polar(self.kappa.sqrt(), self.phi), Complex64::from_polar(self.g.sqrt(), self.theta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityRole {
    /// Cavity of a passive realization with a system port.
    Passive,
    PlusEigen,
    MinusEigen,
    ComplexPairMember,
    Jordan,
    DegenerateSpecial,
    InterconnectOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub mode: usize,
    pub detuning: f64,
    pub role: CavityRole,
    pub ports: Vec<PortSpec>,
}

impl CavitySpec {
    /// `γ = Σ (κ_i - g_i)` over system ports.
    pub fn gamma(&self) -> f64 {
        self.ports.iter().map(|p| p.kappa - p.g).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CavityAssignment {
    pub cavities: Vec<CavitySpec>,
    pub intra_block_devices: Vec<Device>,
    pub m_conc: CMat,
}

impl CavityAssignment {
    /// Coupling matrix read back from the port table.
    pub fn coupling(&self, m: usize) -> DoubledUp {
        let n = self.cavities.len();
        let mut n1 = linalg::zeros(m, n);
        let mut n2 = linalg::zeros(m, n);
        for cav in &self.cavities {
            for p in &cav.ports {
                let (a, b) = p.coefficients();
                n1[(p.channel, cav.mode)] = a;
                n2[(p.channel, cav.mode)] = b;
            }
        }
        DoubledUp::new(n1, n2).expect("same shape")
    }
}

/// One cavity per mode of `N̂`, with ports read off its columns; complex
/// pairs get the cascade beamsplitter and the pair Hamiltonian.
pub fn assign_cavities(coupling: &CanonicalCoupling, detunings: &[f64]) -> Result<CavityAssignment> {
    let nh = &coupling.n_hat;
    let (m, n) = (nh.half_rows(), nh.half_cols());
    if detunings.len() != n {
        return Err(LqssError::Parameter(format!("need {n} detunings, got {}", detunings.len())));
    }
    let mut roles = vec![CavityRole::InterconnectOnly; n];
    let mut m2 = linalg::zeros(n, n);
    let mut devices = Vec::new();
    for b in &coupling.blocks {
        let role = match b.kind {
            BlockKind::Positive { .. } => CavityRole::PlusEigen,
            BlockKind::Negative { .. } => CavityRole::MinusEigen,
            BlockKind::Complex { .. } => CavityRole::ComplexPairMember,
            BlockKind::Jordan2 { .. } | BlockKind::Jordan2Kernel => CavityRole::Jordan,
            BlockKind::Degenerate { .. } => CavityRole::DegenerateSpecial,
            BlockKind::Kernel => CavityRole::InterconnectOnly,
        };
        for k in 0..b.cols() {
            roles[b.col + k] = role;
        }
        if let BlockKind::Complex { im, .. } = b.kind {
            let (p, q) = (b.col, b.col + 1);
            if detunings[p] != detunings[q] {
                return Err(LqssError::Parameter(format!(
                    "cavities {p} and {q} form a complex pair and must share a detuning"
                )));
            }
            m2[(p, q)] = r(-im / 2.0);
            m2[(q, p)] = r(-im / 2.0);
            devices.push(Device::BeamSplitter(BeamSplitterDevice {
                channels: (b.row, b.row + 1),
                theta: std::f64::consts::PI,
                phi: 0.0,
                psi: 0.0,
                zeta: 0.0,
            }));
        }
    }
    let scale = 1.0 + fro(&nh.to_full());
    let mut cavities = Vec::with_capacity(n);
    for mode in 0..n {
        let mut ports = Vec::new();
        for ch in 0..m {
            let (a, b) = (nh.x1()[(ch, mode)], nh.x2()[(ch, mode)]);
            let (a, b) = (clean(a, scale), clean(b, scale));
            if a.norm() > 0.0 || b.norm() > 0.0 {
                ports.push(PortSpec {
                    channel: ch,
                    kappa: a.norm_sqr(),
                    g: b.norm_sqr(),
                    phi: if a.norm() > 0.0 { a.arg() } else { 0.0 },
                    theta: if b.norm() > 0.0 { b.arg() } else { 0.0 },
                });
            }
        }
        cavities.push(CavitySpec { mode, detuning: detunings[mode], role: roles[mode], ports });
    }
    let m_conc = DoubledUp::new(linalg::diag_real(detunings), m2).expect("square").to_full();
    Ok(CavityAssignment { cavities, intra_block_devices: devices, m_conc })
}

fn clean(z: Complex64, scale: f64) -> Complex64 {
    if z.norm() <= PORT_TOL * scale {
        return Complex64::new(0.0, 0.0);
    }
    z
}

/// `N̂ = √|λ| [[sinh x, cosh x], [cosh x, sinh x]]`: an active port with
/// damping, still satisfying `N̂♭N̂ = λ I`.
pub fn active_port_damped_form(lambda_minus: f64, x: f64) -> Result<DoubledUp> {
    if !(lambda_minus < 0.0) {
        return Err(LqssError::Parameter(format!("need a negative eigenvalue, got {lambda_minus}")));
    }
    let a = lambda_minus.abs().sqrt();
    DoubledUp::new(CMat::from_element(1, 1, r(a * x.sinh())), CMat::from_element(1, 1, r(a * x.cosh())))
}

/// Checks `X` is doubled-up and ♭-skew within `tol`.
pub fn check_flat_skew(x: &CMat, tol: f64) -> Result<()> {
    let scale = 1.0 + fro(x);
    let du = krein::doubled_up_residual(x);
    if du > tol * scale {
        return Err(LqssError::Structural(format!("X is not doubled-up (residual {du:.3e})")));
    }
    let skew = fro(&(krein::flat_adjoint(x)? + x));
    if skew > tol * scale {
        return Err(LqssError::Structural(format!("X is not ♭-skew-Hermitian (residual {skew:.3e})")));
    }
    Ok(())
}

/// `X = (I + R)(I - R)⁻¹` for Bogoliubov `R`.
pub fn general_cayley(rr: &CMat, tol: f64) -> Result<CMat> {
    let res = krein::bogoliubov_residual(rr);
    if res > tol * (1.0 + fro(rr).powi(2)) {
        return Err(LqssError::Structural(format!("R is not Bogoliubov (residual {res:.3e})")));
    }
    let x = passive::cayley(rr)?;
    Ok(project_flat_skew(&x))
}

/// `R = (X - I)(X + I)⁻¹` for doubled-up ♭-skew `X`.
pub fn general_inv_cayley(x: &CMat, tol: f64) -> Result<Bogoliubov> {
    check_flat_skew(x, tol)?;
    let rr = passive::inv_cayley(x)?;
    Bogoliubov::from_full(&rr, tol.max(1e-9) * (1.0 + fro(&rr).powi(2)))
}

/// Nearest doubled-up ♭-skew matrix (average of the two projections).
pub fn project_flat_skew(x: &CMat) -> CMat {
    let xf = krein::flat_adjoint(x).expect("even");
    let y = (x - xf) * r(0.5);
    DoubledUp::from_full(&y, f64::INFINITY).expect("even").to_full()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralSynthOptions {
    pub svd: SvdOptions,
    pub structure_tol: f64,
    /// Seed for the `Ñ` perturbation used when `X + I` is singular.
    pub seed: u64,
    pub max_retries: usize,
    /// `‖R‖_F` above which `Ñ` is perturbed as for a singular `X + I`.
    pub max_feedback_norm: f64,
}

impl Default for GeneralSynthOptions {
    fn default() -> Self {
        Self { svd: SvdOptions::default(), structure_tol: 1e-9, seed: 42, max_retries: 3, max_feedback_norm: 1e2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralRealization {
    pub v: Bogoliubov,
    /// Pre network `V♭ S`.
    pub pre: Bogoliubov,
    pub w: Bogoliubov,
    pub n_hat: DoubledUp,
    pub m_hat: CMat,
    pub cavities: Vec<CavitySpec>,
    pub intra_block_devices: Vec<Device>,
    pub m_conc: CMat,
    /// `sqrt(κ̃_i)`, one per mode.
    pub n_tilde: Vec<f64>,
    pub x: CMat,
    pub r: Bogoliubov,
    pub coupling: CanonicalCoupling,
    pub spectrum: KreinSpectrum,
    pub svd_residual: f64,
    /// Multiplicative factors applied to `Ñ` after a singular `X + I`.
    pub perturbation: Option<Vec<f64>>,
}

impl GeneralRealization {
    pub fn n_tilde_matrix(&self) -> CMat {
        let d: Vec<f64> = self.n_tilde.iter().chain(&self.n_tilde).copied().collect();
        linalg::diag_real(&d)
    }

    /// Residual of `J M̂ = J M_conc - (i/2) Ñ♭ X Ñ`.
    pub fn hamiltonian_residual(&self) -> f64 {
        let n = self.m_hat.nrows() / 2;
        let j = krein::j_matrix(n);
        let nt = self.n_tilde_matrix();
        let ntf = krein::flat_adjoint(&nt).expect("even");
        let rhs = &j * &self.m_conc - ntf * &self.x * nt * c(0.0, 0.5);
        fro(&(&j * &self.m_hat - rhs))
    }
}

fn feedback_x_general(m_hat: &CMat, m_conc: &CMat, n_tilde: &[f64]) -> CMat {
    let n = n_tilde.len();
    let j = krein::j_matrix(n);
    let d: Vec<f64> = n_tilde.iter().chain(n_tilde).copied().collect();
    let mut x = j * (m_hat - m_conc);
    for a in 0..2 * n {
        for b in 0..2 * n {
            // Ñ♭ = Ñ for a real diagonal Ñ with equal halves
            x[(a, b)] *= c(0.0, 2.0) / (d[a] * d[b]);
        }
    }
    project_flat_skew(&x)
}

/// Realizes `G(s) = V Ĝ(s) (V♭ S)` with `Ĝ` the reduced system built from
/// cavities closed through a Bogoliubov feedback `R`.
pub fn synthesize_general(
    model: &GeneralLqssModel,
    n_tilde: &[f64],
    detunings: &[f64],
    opts: &GeneralSynthOptions,
) -> Result<GeneralRealization> {
    let n = model.n();
    if n_tilde.len() != n {
        return Err(LqssError::Parameter(format!("need {n} interconnect couplings, got {}", n_tilde.len())));
    }
    if let Some((i, &k)) = n_tilde.iter().enumerate().find(|(_, &k)| !(k > 0.0 && k.is_finite())) {
        return Err(LqssError::Parameter(format!("interconnect coupling {i} must be positive, got {k}")));
    }
    if let Some((i, d)) = detunings.iter().enumerate().find(|(_, d)| !d.is_finite()) {
        return Err(LqssError::Parameter(format!("detuning {i} is not finite ({d})")));
    }
    let svd = dusvd::bogoliubov_svd(model.coupling(), &opts.svd)?;
    let wf = svd.w.to_full();
    let m_hat = wf.adjoint() * model.ham().to_full() * &wf;
    let m_hat = DoubledUp::from_full(&((&m_hat + m_hat.adjoint()) * r(0.5)), f64::INFINITY)?.to_full();
    let assign = assign_cavities(&svd.coupling, detunings)?;

    // Retry with perturbed Ñ when X + I is singular or R is badly scaled;
    // the best-conditioned attempt is kept.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut nt = n_tilde.to_vec();
    let mut factors: Option<Vec<f64>> = None;
    // (‖R‖, X, R, Ñ, perturbation factors)
    type Attempt = (f64, CMat, Bogoliubov, Vec<f64>, Option<Vec<f64>>);
    let mut best: Option<Attempt> = None;
    for attempt in 0..=opts.max_retries {
        let x = feedback_x_general(&m_hat, &assign.m_conc, &nt);
        match general_inv_cayley(&x, 1e-8) {
            Ok(rr) => {
                let norm = fro(&rr.to_full());
                if best.as_ref().is_none_or(|b| norm < b.0) {
                    best = Some((norm, x, rr, nt.clone(), factors.clone()));
                }
                if norm <= opts.max_feedback_norm {
                    break;
                }
                log::info!("feedback gain norm {norm:.3e} on attempt {attempt}; perturbing interconnect couplings");
            }
            Err(LqssError::UnitEigenvalue { eigenvalue }) if attempt < opts.max_retries => {
                log::warn!("X + I singular near eigenvalue {eigenvalue}; perturbing interconnect couplings");
            }
            Err(e) if best.is_none() => return Err(e),
            Err(_) => {}
        }
        if attempt < opts.max_retries {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.9..1.1)).collect();
            nt = n_tilde.iter().zip(&f).map(|(a, b)| a * b).collect();
            factors = Some(f);
        }
    }
    let Some((_, x, rr, nt, perturbation)) = best else {
        return Err(LqssError::Numerical("no admissible feedback gain after retries".into()));
    };
    let pre = svd.v.inverse().compose(model.scattering())?;
    Ok(GeneralRealization {
        v: svd.v,
        pre,
        w: svd.w,
        n_hat: svd.coupling.n_hat.clone(),
        m_hat,
        cavities: assign.cavities,
        intra_block_devices: assign.intra_block_devices,
        m_conc: assign.m_conc,
        n_tilde: nt,
        x,
        r: rr,
        coupling: svd.coupling,
        spectrum: svd.spectrum,
        svd_residual: svd.residual,
        perturbation,
    })
}

/// Random J-nondegenerate general model with semisimple `𝒩` and
/// well-separated eigenvalues; draws failing the checks are resampled.
pub fn random_general_model<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> GeneralLqssModel {
    loop {
        let ham = krein::random_hermitian_doubled(rng, n, 1.0);
        let n1 = linalg::random_complex(rng, m, n);
        let n2 = linalg::random_complex(rng, m, n) * r(0.5);
        let coupling = DoubledUp::new(n1, n2).expect("same shape");
        let s = krein::random_bogoliubov(rng, m, 0.3);
        let Ok(model) = GeneralLqssModel::from_parts(ham, coupling, s) else { continue };
        if let Ok(res) = dusvd::bogoliubov_svd(model.coupling(), &SvdOptions::default()) {
            let ev = res.spectrum.eigenvalue_multiset();
            let nonzero: Vec<Complex64> = ev.iter().copied().filter(|z| z.norm() > 1e-8).collect();
            let gap = nonzero
                .iter()
                .enumerate()
                .flat_map(|(i, a)| nonzero[i + 1..].iter().map(move |b| (a - b).norm()))
                .filter(|&d| d > 1e-8)
                .fold(f64::INFINITY, f64::min);
            let min_abs = nonzero.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            let cond_ok = fro(&res.v.to_full()) < 50.0 && fro(&res.w.to_full()) < 50.0;
            if res.residual < 1e-10 && gap > 1e-2 && min_abs > 1e-2 && cond_ok {
                return model;
            }
        }
    }
}
