//! State-space assembly of synthesized networks, feedback elimination and
//! transfer-function verification.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LqssError, Result};
use crate::general::{self, GeneralLqssModel, GeneralRealization};
use crate::krein::{self, DoubledUp};
use crate::linalg::{self, c, fro, r, CMat};
use crate::passive::{self, PassiveLqssModel, PassiveRealization};

pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_NUM_FREQS: usize = 20;

/// `G(s) = C (sI - A)⁻¹ B + D`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
}

impl StateSpace {
    pub fn new(a: CMat, b: CMat, c: CMat, d: CMat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(LqssError::Structural(format!(
                "inconsistent state-space shapes A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn eval(&self, s: Complex64) -> Result<CMat> {
        eval_tf(self, s)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    /// Largest doubled-up residual over the four blocks.
    pub fn doubled_up_residual(&self) -> f64 {
        [&self.a, &self.b, &self.c, &self.d].iter().map(|x| krein::doubled_up_residual(x)).fold(0.0, f64::max)
    }
}

pub fn eval_tf(ss: &StateSpace, s: Complex64) -> Result<CMat> {
    let n = ss.a.nrows();
    let res = linalg::eye(n) * s - &ss.a;
    let x = linalg::solve(&res, &ss.b).ok_or(LqssError::Pole { s })?;
    Ok(&ss.c * x + &ss.d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// Annihilation operators only; adjoint is `†`, drift `-iM`.
    Passive,
    /// Doubled-up; adjoint is `♭`, drift `-iJM`.
    General,
}

impl Flavor {
    fn adjoint(self, x: &CMat) -> Result<CMat> {
        match self {
            Flavor::Passive => Ok(x.adjoint()),
            Flavor::General => krein::flat_adjoint(x),
        }
    }

    fn drift_hamiltonian(self, m: &CMat) -> CMat {
        match self {
            Flavor::Passive => m * c(0.0, -1.0),
            Flavor::General => krein::j_matrix(m.nrows() / 2) * m * c(0.0, -1.0),
        }
    }
}

/// Cavity bank with both port families exposed: inputs `[U; U_int]`,
/// outputs `[Y; Y_int]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenNetwork {
    pub flavor: Flavor,
    pub a: CMat,
    pub b_sys: CMat,
    pub b_int: CMat,
    pub c_sys: CMat,
    pub c_int: CMat,
    pub d_sys: CMat,
    pub d_int: CMat,
}

impl OpenNetwork {
    /// All ports as one state-space model (system ports first).
    pub fn state_space(&self) -> StateSpace {
        let b = linalg::hstack(&[&self.b_sys, &self.b_int]);
        let c = linalg::vstack(&[&self.c_sys, &self.c_int]);
        let d = linalg::block_diag(&[&self.d_sys, &self.d_int]);
        StateSpace { a: self.a.clone(), b, c, d }
    }
}

/// Drift `-i(J)M_conc - ½Ñ*Ñ - ½N̂*N̂`, `B = [-N̂*, -Ñ*]`, `C = [N̂; Ñ]`,
/// `D = I`, where `*` is `†` or `♭`.
pub fn assemble_open_network(flavor: Flavor, n_hat: &CMat, m_conc: &CMat, n_tilde: &CMat) -> Result<OpenNetwork> {
    let n = m_conc.nrows();
    if m_conc.ncols() != n || n_hat.ncols() != n || n_tilde.nrows() != n || n_tilde.ncols() != n {
        return Err(LqssError::Structural(format!(
            "cavity bank shapes disagree: M_conc {:?}, N̂ {:?}, Ñ {:?}",
            m_conc.shape(),
            n_hat.shape(),
            n_tilde.shape()
        )));
    }
    let nh_adj = flavor.adjoint(n_hat)?;
    let nt_adj = flavor.adjoint(n_tilde)?;
    let a = flavor.drift_hamiltonian(m_conc) - &nt_adj * n_tilde * r(0.5) - &nh_adj * n_hat * r(0.5);
    Ok(OpenNetwork {
        flavor,
        a,
        b_sys: -nh_adj,
        b_int: -nt_adj,
        c_sys: n_hat.clone(),
        c_int: n_tilde.clone(),
        d_sys: linalg::eye(n_hat.nrows()),
        d_int: linalg::eye(n),
    })
}

/// Closes `U_int = R Y_int` by direct elimination and keeps the system
/// ports.
pub fn close_feedback(open: &OpenNetwork, rr: &CMat) -> Result<StateSpace> {
    let k = rr.nrows();
    if rr.ncols() != k || k != open.d_int.nrows() {
        return Err(LqssError::Structural(format!(
            "feedback gain is {:?} but there are {} interconnect ports",
            rr.shape(),
            open.d_int.nrows()
        )));
    }
    // Y_int = C_int x + D_int U_int, no direct path from U to Y_int
    let loop_m = linalg::eye(k) - rr * &open.d_int;
    let unit = || {
        let ev = linalg::eigenvalues(&(rr * &open.d_int)).unwrap_or_default();
        let e = ev.into_iter().min_by(|a, b| (a - 1.0).norm().total_cmp(&(b - 1.0).norm())).unwrap_or(c(1.0, 0.0));
        LqssError::UnitEigenvalue { eigenvalue: e }
    };
    linalg::inverse_checked(&loop_m, 1e12, "feedback loop").map_err(|_| unit())?;
    let gain = linalg::solve(&loop_m, rr).ok_or_else(unit)?;
    let a = &open.a + &open.b_int * &gain * &open.c_int;
    StateSpace::new(a, open.b_sys.clone(), open.c_sys.clone(), open.d_sys.clone())
}

/// Closed loop from the Cayley form: drift `-i(J)M_conc - ½Ñ*XÑ - ½N̂*N̂`.
pub fn close_feedback_cayley(
    flavor: Flavor,
    n_hat: &CMat,
    m_conc: &CMat,
    n_tilde: &CMat,
    x: &CMat,
) -> Result<StateSpace> {
    let nh_adj = flavor.adjoint(n_hat)?;
    let nt_adj = flavor.adjoint(n_tilde)?;
    let a = flavor.drift_hamiltonian(m_conc) - nt_adj * x * n_tilde * r(0.5) - &nh_adj * n_hat * r(0.5);
    StateSpace::new(a, -nh_adj, n_hat.clone(), linalg::eye(n_hat.nrows()))
}

/// Data needed to rebuild a realized network: static pre/post networks and
/// the cavity bank closed through `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedNetwork {
    pub flavor: Flavor,
    pub post: CMat,
    pub pre: CMat,
    pub n_hat: CMat,
    pub m_conc: CMat,
    pub n_tilde: CMat,
    pub r: CMat,
}

impl From<&PassiveRealization> for RealizedNetwork {
    fn from(p: &PassiveRealization) -> Self {
        Self {
            flavor: Flavor::Passive,
            post: p.v.clone(),
            pre: p.pre.clone(),
            n_hat: p.n_hat.clone(),
            m_conc: linalg::diag_real(&p.detunings),
            n_tilde: linalg::diag_real(&p.n_tilde),
            r: p.r.clone(),
        }
    }
}

impl From<&GeneralRealization> for RealizedNetwork {
    fn from(g: &GeneralRealization) -> Self {
        Self {
            flavor: Flavor::General,
            post: g.v.to_full(),
            pre: g.pre.to_full(),
            n_hat: g.n_hat.to_full(),
            m_conc: g.m_conc.clone(),
            n_tilde: g.n_tilde_matrix(),
            r: g.r.to_full(),
        }
    }
}

impl RealizedNetwork {
    pub fn open(&self) -> Result<OpenNetwork> {
        assemble_open_network(self.flavor, &self.n_hat, &self.m_conc, &self.n_tilde)
    }

    /// Reduced system after eliminating the feedback loop.
    pub fn reduced(&self) -> Result<StateSpace> {
        close_feedback(&self.open()?, &self.r)
    }

    /// Whole network: `post · Ĝ · pre` as one state-space model.
    pub fn state_space(&self) -> Result<StateSpace> {
        let red = self.reduced()?;
        StateSpace::new(red.a, red.b * &self.pre, &self.post * red.c, &self.post * red.d * &self.pre)
    }

    pub fn eval(&self, s: Complex64) -> Result<CMat> {
        self.state_space()?.eval(s)
    }

    /// Difference between the two closed-loop constructions.
    pub fn feedback_paths_residual(&self) -> Result<f64> {
        let direct = self.reduced()?;
        let x = passive::cayley(&self.r)?;
        let cay = close_feedback_cayley(self.flavor, &self.n_hat, &self.m_conc, &self.n_tilde, &x)?;
        Ok(fro(&(&direct.a - &cay.a)) / (1.0 + fro(&direct.a)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LqssModel {
    Passive(PassiveLqssModel),
    General(GeneralLqssModel),
}

impl LqssModel {
    pub fn tf(&self, s: Complex64) -> Result<CMat> {
        match self {
            LqssModel::Passive(m) => passive::passive_tf(m, s),
            LqssModel::General(m) => general::general_tf(m, s),
        }
    }

    pub fn ham_norm(&self) -> f64 {
        match self {
            LqssModel::Passive(m) => fro(m.ham()),
            LqssModel::General(m) => fro(&m.ham().to_full()),
        }
    }

    /// State-space form `A = -i(J)M - ½N*N`, `B = -N*S`, `C = N`, `D = S`.
    pub fn state_space(&self) -> Result<StateSpace> {
        let (flavor, m, n, s) = match self {
            LqssModel::Passive(p) => (Flavor::Passive, p.ham().clone(), p.coupling().clone(), p.scattering().clone()),
            LqssModel::General(g) => {
                (Flavor::General, g.ham().to_full(), g.coupling().to_full(), g.scattering().to_full())
            }
        };
        let nadj = flavor.adjoint(&n)?;
        let a = flavor.drift_hamiltonian(&m) - &nadj * &n * r(0.5);
        StateSpace::new(a, -nadj * &s, n, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub num_freqs: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { num_freqs: DEFAULT_NUM_FREQS, seed: DEFAULT_SEED, tol: DEFAULT_VERIFY_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub frequencies: Vec<Complex64>,
    pub per_frequency_errors: Vec<f64>,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Points moved off a pole by extra jitter.
    pub resampled: usize,
}

/// `s_k = i ω_k (1 + jitter)` with `ω` log-spaced over `[1e-2, 1e3]·scale`;
/// every other point is shifted to `Re s = 0.1`.
pub fn frequency_grid(num: usize, scale: f64, seed: u64) -> Vec<Complex64> {
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (1e-2f64.ln(), 1e3f64.ln());
    (0..num)
        .map(|k| {
            let t = if num == 1 { 0.5 } else { k as f64 / (num - 1) as f64 };
            let w = (lo + t * (hi - lo)).exp() * scale * (1.0 + rng.random_range(-0.01..0.01));
            Complex64::new(if k % 2 == 1 { 0.1 } else { 0.0 }, w)
        })
        .collect()
}

/// `‖ΔG‖_F / (1 + ‖G‖_F)`.
pub fn relative_error(target: &CMat, got: &CMat) -> f64 {
    fro(&(target - got)) / (1.0 + fro(target))
}

/// Compares the model's `G(s)` against the realized network on a jittered
/// grid; points that hit a pole are moved and counted.
pub fn verify_realization(
    model: &LqssModel,
    net: &RealizedNetwork,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let realized = net.state_space()?;
    let grid = frequency_grid(opts.num_freqs, model.ham_norm(), opts.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut freqs = Vec::with_capacity(grid.len());
    let mut errs = Vec::with_capacity(grid.len());
    let mut resampled = 0;
    for s0 in grid {
        let mut s = s0;
        let mut tries = 0;
        loop {
            match (model.tf(s), realized.eval(s)) {
                (Ok(a), Ok(b)) => {
                    if a.shape() != b.shape() {
                        return Err(LqssError::Structural(format!(
                            "model transfer function is {:?} but the network gives {:?}",
                            a.shape(),
                            b.shape()
                        )));
                    }
                    freqs.push(s);
                    errs.push(relative_error(&a, &b));
                    break;
                }
                (Err(LqssError::Pole { .. }), _) | (_, Err(LqssError::Pole { .. })) if tries < 5 => {
                    tries += 1;
                    resampled += 1;
                    s += Complex64::new(rng.random_range(0.01..0.1), rng.random_range(-0.1..0.1)) * (1.0 + s.norm());
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
    }
    let max_error = errs.iter().copied().fold(0.0, f64::max);
    Ok(VerificationReport {
        frequencies: freqs,
        per_frequency_errors: errs,
        max_error,
        tolerance: opts.tol,
        pass: max_error < opts.tol,
        resampled,
    })
}

/// Realized network of a model that needs no synthesis: identity pre/post,
/// its own coupling and Hamiltonian, and `R = -I` so that the interconnect
/// ports cancel.
pub fn identity_network(model: &LqssModel) -> RealizedNetwork {
    match model {
        LqssModel::Passive(p) => RealizedNetwork {
            flavor: Flavor::Passive,
            post: linalg::eye(p.m()),
            pre: p.scattering().clone(),
            n_hat: p.coupling().clone(),
            m_conc: p.ham().clone(),
            n_tilde: linalg::eye(p.n()),
            r: -linalg::eye(p.n()),
        },
        LqssModel::General(g) => RealizedNetwork {
            flavor: Flavor::General,
            post: linalg::eye(2 * g.m()),
            pre: g.scattering().to_full(),
            n_hat: g.coupling().to_full(),
            m_conc: g.ham().to_full(),
            n_tilde: linalg::eye(2 * g.n()),
            r: -linalg::eye(2 * g.n()),
        },
    }
}

/// `Σ G(s*)# Σ` for a doubled-up transfer matrix.
pub fn conjugate_symmetry_residual(model: &LqssModel, s: Complex64) -> Result<f64> {
    let g = model.tf(s)?;
    let gc = model.tf(s.conj())?;
    let k = g.nrows() / 2;
    let sig = krein::sigma_matrix(k);
    let mirrored = &sig * gc.map(|z| z.conj()) * &sig;
    Ok(fro(&(mirrored - &g)) / (1.0 + fro(&g)))
}

/// Doubled-up check for any matrix that should be.
pub fn is_doubled_up(x: &CMat, tol: f64) -> bool {
    DoubledUp::from_full(x, tol).is_ok()
}
