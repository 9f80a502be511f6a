//! JSON file formats for models, netlists, matrices and verification
//! reports. Complex numbers are `[re, im]` pairs; matrices are arrays of
//! rows.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{LqssError, Result};
use crate::general::{CavityRole, CavitySpec, GeneralLqssModel, GeneralRealization, PortSpec};
use crate::krein;
use crate::linalg::{self, fro, CMat};
use crate::passive::{self, PassiveLqssModel, PassiveRealization};
use crate::static_decomp::{self, Device, DeviceSchedule, ScheduleKind};
use crate::tf::{Flavor, LqssModel, RealizedNetwork, VerificationReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Serde adapter for a matrix as nested rows of `[re, im]`.
pub mod cmat_json {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
            return Err(serde::de::Error::custom(format!("row {i} has {} entries but row 0 has {ncols}", row.len())));
        }
        Ok(CMat::from_fn(rows.len(), ncols, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
    }
}

/// Parses JSON and reports failures with the path of the offending value.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        LqssError::Format {
            at: if path == "." { "document root".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    de.end().map_err(|e| LqssError::Format { at: "document end".into(), message: e.to_string() })?;
    Ok(value)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| LqssError::Io(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| LqssError::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)? + "\n").map_err(|e| LqssError::Io(format!("{}: {e}", path.display())))
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(LqssError::Format {
            at: "schema_version".into(),
            message: format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"),
        });
    }
    Ok(())
}

/// Matrix dimensions of a model with `n` modes and `m` channels.
fn doubled_dims(kind: Flavor, n: usize, m: usize) -> Result<(usize, usize)> {
    let k = if kind == Flavor::General { 2 } else { 1 };
    match (n.checked_mul(k), m.checked_mul(k)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(LqssError::Format { at: "n".into(), message: format!("dimensions {n} x {m} are too large") }),
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("[{}, {}]", z.re, z.im)
}

/// Shape check; an empty row list stands for a matrix with no rows.
fn fit(name: &str, m: &CMat, rows: usize, cols: usize) -> Result<CMat> {
    if m.nrows() == 0 && rows == 0 {
        return Ok(linalg::zeros(0, cols));
    }
    if m.shape() != (rows, cols) {
        return Err(LqssError::Format {
            at: name.into(),
            message: format!("expected {rows} x {cols}, got {} x {}", m.nrows(), m.ncols()),
        });
    }
    Ok(m.clone())
}

fn check_hermitian(name: &str, m: &CMat, tol: f64) -> Result<()> {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol * (1.0 + m[(i, j)].norm()) {
                return Err(LqssError::Format {
                    at: format!("{name}[{i}][{j}]"),
                    message: format!(
                        "not Hermitian: entry is {} but conj({name}[{j}][{i}]) is {}",
                        fmt_c(m[(i, j)]),
                        fmt_c(m[(j, i)].conj())
                    ),
                });
            }
        }
    }
    Ok(())
}

fn check_doubled_up(name: &str, m: &CMat, tol: f64) -> Result<()> {
    let (r2, c2) = m.shape();
    if r2 % 2 != 0 || c2 % 2 != 0 {
        return Err(LqssError::Format { at: name.into(), message: format!("{r2} x {c2} is not of even size") });
    }
    let (h, w) = (r2 / 2, c2 / 2);
    for i in 0..r2 {
        for j in 0..c2 {
            let (pi, pj) = ((i + h) % r2, (j + w) % c2);
            if (m[(i, j)] - m[(pi, pj)].conj()).norm() > tol * (1.0 + m[(i, j)].norm()) {
                return Err(LqssError::Format {
                    at: format!("{name}[{i}][{j}]"),
                    message: format!(
                        "not doubled-up: entry is {} but conj({name}[{pi}][{pj}]) is {}",
                        fmt_c(m[(i, j)]),
                        fmt_c(m[(pi, pj)].conj())
                    ),
                });
            }
        }
    }
    Ok(())
}

/// `S S* - I` with `*` the flavor's adjoint; reports the worst entry.
fn check_isometry(name: &str, s: &CMat, flavor: Flavor, tol: f64) -> Result<()> {
    let adj = match flavor {
        Flavor::Passive => s.adjoint(),
        Flavor::General => krein::flat_adjoint(s)?,
    };
    let e = s * adj - linalg::eye(s.nrows());
    let mut worst = (0.0, 0, 0);
    for i in 0..e.nrows() {
        for j in 0..e.ncols() {
            if e[(i, j)].norm() > worst.0 {
                worst = (e[(i, j)].norm(), i, j);
            }
        }
    }
    let bound = tol * (1.0 + fro(s).powi(2));
    if worst.0 > bound {
        let what = if flavor == Flavor::Passive { "unitary" } else { "Bogoliubov" };
        return Err(LqssError::Format {
            at: name.into(),
            message: format!(
                "not {what}: product with its adjoint deviates from I by {:.3e} at [{}][{}]",
                worst.0, worst.1, worst.2
            ),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detunings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interconnect_kappas: Option<Vec<f64>>,
}

/// Model file. Passive: `M` is `n x n`, `N` is `m x n`, `S` is `m x m`.
/// General: full doubled-up `2n x 2n`, `2m x 2n`, `2m x 2m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(rename = "type")]
    pub kind: Flavor,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "M", with = "cmat_json")]
    pub ham: CMat,
    #[serde(rename = "N", with = "cmat_json")]
    pub coupling: CMat,
    #[serde(rename = "S", with = "cmat_json")]
    pub scattering: CMat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defaults: Option<SynthDefaults>,
}

impl ModelFile {
    pub fn from_model(model: &LqssModel) -> Self {
        match model {
            LqssModel::Passive(p) => Self {
                schema_version: SCHEMA_VERSION,
                kind: Flavor::Passive,
                n: p.n(),
                m: p.m(),
                ham: p.ham().clone(),
                coupling: p.coupling().clone(),
                scattering: p.scattering().clone(),
                defaults: None,
            },
            LqssModel::General(g) => Self {
                schema_version: SCHEMA_VERSION,
                kind: Flavor::General,
                n: g.n(),
                m: g.m(),
                ham: g.ham().to_full(),
                coupling: g.coupling().to_full(),
                scattering: g.scattering().to_full(),
                defaults: None,
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text)
    }

    /// Validates every invariant of the declared model type and builds it.
    pub fn to_model(&self, tol: f64) -> Result<LqssModel> {
        check_version(self.schema_version)?;
        if self.n == 0 {
            return Err(LqssError::Format { at: "n".into(), message: "a model needs at least one mode".into() });
        }
        let (n, m) = doubled_dims(self.kind, self.n, self.m)?;
        let ham = fit("M", &self.ham, n, n)?;
        let coupling = fit("N", &self.coupling, m, n)?;
        let scattering = fit("S", &self.scattering, m, m)?;
        if let Some(d) = &self.defaults {
            for (name, v) in [("detunings", &d.detunings), ("interconnect_kappas", &d.interconnect_kappas)] {
                if let Some(v) = v {
                    if v.len() != self.n {
                        return Err(LqssError::Format {
                            at: format!("defaults.{name}"),
                            message: format!("expected {} values, got {}", self.n, v.len()),
                        });
                    }
                }
            }
            if let Some((i, k)) = d.interconnect_kappas.iter().flatten().enumerate().find(|(_, &k)| k <= 0.0) {
                return Err(LqssError::Format {
                    at: format!("defaults.interconnect_kappas[{i}]"),
                    message: format!("must be positive, got {k}"),
                });
            }
        }
        if self.kind == Flavor::General {
            check_doubled_up("M", &ham, tol)?;
            check_doubled_up("N", &coupling, tol)?;
            check_doubled_up("S", &scattering, tol)?;
        }
        check_hermitian("M", &ham, tol)?;
        check_isometry("S", &scattering, self.kind, tol)?;
        Ok(match self.kind {
            Flavor::Passive => LqssModel::Passive(PassiveLqssModel::new(ham, coupling, scattering, tol)?),
            Flavor::General => LqssModel::General(GeneralLqssModel::new(&ham, &coupling, &scattering, tol)?),
        })
    }
}

/// Matrix input for `decompose`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ScheduleKind>,
    #[serde(with = "cmat_json")]
    pub matrix: CMat,
}

impl MatrixFile {
    pub fn new(matrix: CMat, kind: Option<ScheduleKind>) -> Self {
        Self { schema_version: SCHEMA_VERSION, kind, matrix }
    }

    /// Checks the declared structure before decomposition.
    pub fn validated(&self, kind: ScheduleKind, tol: f64) -> Result<&CMat> {
        check_version(self.schema_version)?;
        let m = &self.matrix;
        if m.nrows() != m.ncols() {
            return Err(LqssError::Format {
                at: "matrix".into(),
                message: format!("expected a square matrix, got {} x {}", m.nrows(), m.ncols()),
            });
        }
        match kind {
            ScheduleKind::Unitary => check_isometry("matrix", m, Flavor::Passive, tol)?,
            ScheduleKind::Bogoliubov => {
                check_doubled_up("matrix", m, tol)?;
                check_isometry("matrix", m, Flavor::General, tol)?;
            }
        }
        Ok(m)
    }
}

/// Static network realizing `matrix`, or an empty schedule on no channels.
pub fn decompose(matrix: &CMat, kind: ScheduleKind, tol: f64) -> Result<DeviceSchedule> {
    match kind {
        _ if matrix.nrows() == 0 => Ok(DeviceSchedule::empty(kind, 0)),
        ScheduleKind::Unitary => static_decomp::reck_decompose(matrix, tol),
        ScheduleKind::Bogoliubov => static_decomp::schedule_static(matrix, tol),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    #[serde(rename = "R", with = "cmat_json")]
    pub r: CMat,
    #[serde(rename = "X", with = "cmat_json")]
    pub x: CMat,
    pub schedule: DeviceSchedule,
}

/// Matrices the verifier rebuilds the network from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationSection {
    #[serde(with = "cmat_json")]
    pub pre: CMat,
    #[serde(with = "cmat_json")]
    pub post: CMat,
    #[serde(with = "cmat_json")]
    pub n_hat: CMat,
    #[serde(with = "cmat_json")]
    pub m_conc: CMat,
    /// `sqrt(κ̃)` per cavity.
    pub n_tilde: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRecord {
    pub kind: String,
    pub value: Complex64,
    /// Number of `(+)` half columns in the class.
    pub width: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub classes: Vec<ClassRecord>,
    pub residuals: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistFile {
    pub schema_version: u32,
    #[serde(rename = "type")]
    pub kind: Flavor,
    pub n: usize,
    pub m: usize,
    pub pre_network: DeviceSchedule,
    pub cavities: Vec<CavitySpec>,
    pub intra_block_devices: Vec<Device>,
    pub feedback: FeedbackSection,
    pub post_network: DeviceSchedule,
    pub realization: RealizationSection,
    pub provenance: Provenance,
}

fn schedule_kind(flavor: Flavor) -> ScheduleKind {
    match flavor {
        Flavor::Passive => ScheduleKind::Unitary,
        Flavor::General => ScheduleKind::Bogoliubov,
    }
}

#[allow(clippy::too_many_arguments)]
fn with_schedules(
    kind: Flavor,
    n: usize,
    m: usize,
    cavities: Vec<CavitySpec>,
    intra_block_devices: Vec<Device>,
    feedback: (CMat, CMat),
    realization: RealizationSection,
    mut provenance: Provenance,
    tol: f64,
) -> Result<NetlistFile> {
    let sk = schedule_kind(kind);
    let pre_network = decompose(&realization.pre, sk, tol)?;
    let post_network = decompose(&realization.post, sk, tol)?;
    let schedule = decompose(&feedback.0, sk, tol)?;
    provenance.residuals.insert("pre_schedule".into(), pre_network.residual(&realization.pre)?);
    provenance.residuals.insert("post_schedule".into(), post_network.residual(&realization.post)?);
    provenance.residuals.insert("feedback_schedule".into(), schedule.residual(&feedback.0)?);
    Ok(NetlistFile {
        schema_version: SCHEMA_VERSION,
        kind,
        n,
        m,
        pre_network,
        cavities,
        intra_block_devices,
        feedback: FeedbackSection { r: feedback.0, x: feedback.1, schedule },
        post_network,
        realization,
        provenance,
    })
}

impl NetlistFile {
    pub fn from_passive(model: &PassiveLqssModel, real: &PassiveRealization, tol: f64) -> Result<Self> {
        let cavities = (0..model.n())
            .map(|i| {
                let coupled = i < real.rank;
                CavitySpec {
                    mode: i,
                    detuning: real.detunings[i],
                    role: if coupled { CavityRole::Passive } else { CavityRole::InterconnectOnly },
                    ports: if coupled {
                        vec![PortSpec {
                            channel: i,
                            kappa: real.n_hat[(i, i)].re.powi(2),
                            g: 0.0,
                            phi: 0.0,
                            theta: 0.0,
                        }]
                    } else {
                        Vec::new()
                    },
                }
            })
            .collect();
        let mut residuals = BTreeMap::new();
        residuals.insert("hamiltonian".into(), real.hamiltonian_residual());
        residuals.insert(
            "svd".into(),
            fro(&(&real.v * &real.n_hat * real.w.adjoint() - model.coupling())) / (1.0 + fro(model.coupling())),
        );
        let classes = real
            .sqrt_kappas()
            .iter()
            .map(|s| ClassRecord { kind: "singular_value".into(), value: Complex64::new(*s, 0.0), width: 1 })
            .collect();
        with_schedules(
            Flavor::Passive,
            model.n(),
            model.m(),
            cavities,
            Vec::new(),
            (real.r.clone(), real.x.clone()),
            RealizationSection {
                pre: real.pre.clone(),
                post: real.v.clone(),
                n_hat: real.n_hat.clone(),
                m_conc: linalg::diag_real(&real.detunings),
                n_tilde: real.n_tilde.clone(),
            },
            Provenance { classes, residuals, perturbation: None },
            tol,
        )
    }

    pub fn from_general(model: &GeneralLqssModel, real: &GeneralRealization, tol: f64) -> Result<Self> {
        let mut residuals = BTreeMap::new();
        residuals.insert("hamiltonian".into(), real.hamiltonian_residual());
        residuals.insert("svd".into(), real.svd_residual);
        let classes = crate::dusvd::class_summary(&real.spectrum)
            .into_iter()
            .map(|(k, v, w)| ClassRecord {
                kind: serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                value: v,
                width: w,
            })
            .collect();
        with_schedules(
            Flavor::General,
            model.n(),
            model.m(),
            real.cavities.clone(),
            real.intra_block_devices.clone(),
            (real.r.to_full(), real.x.clone()),
            RealizationSection {
                pre: real.pre.to_full(),
                post: real.v.to_full(),
                n_hat: real.n_hat.to_full(),
                m_conc: real.m_conc.clone(),
                n_tilde: real.n_tilde.clone(),
            },
            Provenance { classes, residuals, perturbation: real.perturbation.clone() },
            tol,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text)
    }

    /// Rebuilds the network from the stored matrices after shape checks.
    pub fn realized_network(&self) -> Result<RealizedNetwork> {
        check_version(self.schema_version)?;
        let (n, m) = doubled_dims(self.kind, self.n, self.m)?;
        let rs = &self.realization;
        let r = fit("feedback.R", &self.feedback.r, n, n)?;
        let pre = fit("realization.pre", &rs.pre, m, m)?;
        let post = fit("realization.post", &rs.post, m, m)?;
        let n_hat = fit("realization.n_hat", &rs.n_hat, m, n)?;
        let m_conc = fit("realization.m_conc", &rs.m_conc, n, n)?;
        if rs.n_tilde.len() != self.n {
            return Err(LqssError::Format {
                at: "realization.n_tilde".into(),
                message: format!("expected {} values, got {}", self.n, rs.n_tilde.len()),
            });
        }
        if let Some((i, v)) = rs.n_tilde.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(LqssError::Format {
                at: format!("realization.n_tilde[{i}]"),
                message: format!("must be positive, got {v}"),
            });
        }
        let nt: Vec<f64> = match self.kind {
            Flavor::Passive => rs.n_tilde.clone(),
            Flavor::General => rs.n_tilde.iter().chain(&rs.n_tilde).copied().collect(),
        };
        Ok(RealizedNetwork { flavor: self.kind, post, pre, n_hat, m_conc, n_tilde: linalg::diag_real(&nt), r })
    }

    /// Channel ranges and schedule reconstruction; returns the worst
    /// schedule residual.
    pub fn check(&self, tol: f64) -> Result<f64> {
        let net = self.realized_network()?;
        for (ci, cav) in self.cavities.iter().enumerate() {
            if cav.mode >= self.n {
                return Err(LqssError::Format {
                    at: format!("cavities[{ci}].mode"),
                    message: format!("mode {} out of range for {} cavities", cav.mode, self.n),
                });
            }
            if let Some((pi, p)) = cav.ports.iter().enumerate().find(|(_, p)| p.channel >= self.m) {
                return Err(LqssError::Format {
                    at: format!("cavities[{ci}].ports[{pi}].channel"),
                    message: format!("channel {} out of range for {} system channels", p.channel, self.m),
                });
            }
        }
        for (di, d) in self.intra_block_devices.iter().enumerate() {
            if let Some(ch) = d.channels().into_iter().find(|&c| c >= self.m) {
                return Err(LqssError::Format {
                    at: format!("intra_block_devices[{di}]"),
                    message: format!("channel {ch} out of range for {} system channels", self.m),
                });
            }
        }
        let sk = schedule_kind(self.kind);
        let mut worst: f64 = 0.0;
        for (name, sched, target, dim) in [
            ("pre_network", &self.pre_network, &net.pre, self.m),
            ("post_network", &self.post_network, &net.post, self.m),
            ("feedback.schedule", &self.feedback.schedule, &net.r, self.n),
        ] {
            if sched.kind != sk || sched.dimension != dim {
                return Err(LqssError::Format {
                    at: name.into(),
                    message: format!(
                        "expected a {sk:?} schedule on {dim} channels, got {:?} on {}",
                        sched.kind, sched.dimension
                    ),
                });
            }
            sched.validate().map_err(|e| LqssError::Format { at: name.into(), message: e.to_string() })?;
            let res = sched.residual(target)?;
            if res > tol {
                return Err(LqssError::Format {
                    at: name.into(),
                    message: format!("schedule reconstructs its matrix only to {res:.3e} (tolerance {tol:.1e})"),
                });
            }
            worst = worst.max(res);
        }
        Ok(worst)
    }

    pub fn cavities_with_ports(&self) -> usize {
        self.cavities.iter().filter(|c| !c.ports.is_empty()).count()
    }

    pub fn device_counts(&self) -> BTreeMap<&'static str, usize> {
        let all = [&self.pre_network, &self.post_network, &self.feedback.schedule];
        let mut out = BTreeMap::new();
        out.insert(
            "beam_splitters",
            all.iter().map(|s| s.beam_splitters()).sum::<usize>() + self.intra_block_devices.len(),
        );
        out.insert("squeezers", all.iter().map(|s| s.squeezers()).sum());
        out.insert("phase_shifters", all.iter().map(|s| s.phase_shifters()).sum());
        out
    }
}

/// Synthesis settings shared by both model types.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSettings {
    pub detunings: Option<Vec<f64>>,
    /// `κ̃` per cavity; a single value is broadcast.
    pub interconnect_kappas: Option<Vec<f64>>,
    pub tol: f64,
    pub rank_tol: f64,
    pub seed: u64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self { detunings: None, interconnect_kappas: None, tol: 1e-9, rank_tol: passive::DEFAULT_RANK_TOL, seed: 42 }
    }
}

fn per_mode(name: &str, v: Option<&Vec<f64>>, n: usize, default: f64) -> Result<Vec<f64>> {
    match v {
        None => Ok(vec![default; n]),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; n]),
        Some(v) if v.len() == n => Ok(v.clone()),
        Some(v) => Err(LqssError::Parameter(format!("{name}: expected 1 or {n} values, got {}", v.len()))),
    }
}

/// Runs the synthesis pipeline of the model's type and packages the netlist.
pub fn synthesize(file: &ModelFile, settings: &SynthSettings) -> Result<(LqssModel, NetlistFile)> {
    let model = file.to_model(settings.tol)?;
    let defaults = file.defaults.clone().unwrap_or_default();
    let n = file.n;
    let det = per_mode("detunings", settings.detunings.as_ref().or(defaults.detunings.as_ref()), n, 0.0)?;
    let kap = per_mode(
        "interconnect_kappas",
        settings.interconnect_kappas.as_ref().or(defaults.interconnect_kappas.as_ref()),
        n,
        1.0,
    )?;
    if let Some((i, k)) = kap.iter().enumerate().find(|(_, k)| !(**k > 0.0 && k.is_finite())) {
        return Err(LqssError::Parameter(format!("interconnect kappa {i} must be positive, got {k}")));
    }
    let nt: Vec<f64> = kap.iter().map(|k| k.sqrt()).collect();
    let netlist = match &model {
        LqssModel::Passive(p) => {
            let real = passive::synthesize_passive(p, &det, &nt, settings.rank_tol)?;
            NetlistFile::from_passive(p, &real, 1e-9)?
        }
        LqssModel::General(g) => {
            let opts = crate::general::GeneralSynthOptions {
                structure_tol: settings.tol,
                seed: settings.seed,
                ..Default::default()
            };
            let real = crate::general::synthesize_general(g, &nt, &det, &opts)?;
            NetlistFile::from_general(g, &real, 1e-9)?
        }
    };
    Ok((model, netlist))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub schema_version: u32,
    pub report: VerificationReport,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::{verify_realization, VerifyOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example1_file() -> ModelFile {
        let m = linalg::from_real_rows(3, 3, &[5., 1., -2., 1., 3., 0., -2., 0., 4.]);
        let n = linalg::from_real_rows(3, 3, &[1., 2., 1., 0., -1., 3., 2., 3., 5.]);
        ModelFile {
            schema_version: 1,
            kind: Flavor::Passive,
            n: 3,
            m: 3,
            ham: m,
            coupling: n,
            scattering: linalg::eye(3),
            defaults: None,
        }
    }

    #[test]
    fn model_round_trip() {
        let f = example1_file();
        let text = to_json(&f).unwrap();
        assert_eq!(ModelFile::from_json(&text).unwrap(), f);
        let mut g = ChaCha8Rng::seed_from_u64(4);
        let gm = crate::general::random_general_model(&mut g, 2, 2);
        let f = ModelFile::from_model(&LqssModel::General(gm.clone()));
        let back = ModelFile::from_json(&to_json(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_model(1e-9).unwrap(), LqssModel::General(gm));
    }

    #[test]
    fn diagnostics_carry_coordinates() {
        let text = to_json(&example1_file()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();

        let mut bad = v.clone();
        bad["N"][1][2] = serde_json::json!([1.0]);
        match ModelFile::from_json(&bad.to_string()) {
            Err(LqssError::Format { at, .. }) => assert_eq!(at, "N[1][2]"),
            other => panic!("{other:?}"),
        }

        let mut bad = v.clone();
        bad["M"][0][2] = serde_json::json!([7.0, 0.0]);
        match ModelFile::from_json(&bad.to_string()).unwrap().to_model(1e-9) {
            Err(LqssError::Format { at, message }) => {
                assert_eq!(at, "M[0][2]");
                assert!(message.contains("Hermitian"));
            }
            other => panic!("{other:?}"),
        }

        let mut bad = v.clone();
        bad["S"][1][1] = serde_json::json!([2.0, 0.0]);
        match ModelFile::from_json(&bad.to_string()).unwrap().to_model(1e-9) {
            Err(LqssError::Format { at, message }) => {
                assert_eq!(at, "S");
                assert!(message.contains("[1][1]"), "{message}");
            }
            other => panic!("{other:?}"),
        }

        let mut bad = v.clone();
        bad["M"].as_array_mut().unwrap().pop();
        match ModelFile::from_json(&bad.to_string()).unwrap().to_model(1e-9) {
            Err(LqssError::Format { at, .. }) => assert_eq!(at, "M"),
            other => panic!("{other:?}"),
        }

        let mut bad = v.clone();
        bad["M"][1].as_array_mut().unwrap().pop();
        match ModelFile::from_json(&bad.to_string()) {
            Err(LqssError::Format { at, message }) => {
                assert_eq!(at, "M");
                assert!(message.contains("row 1"));
            }
            other => panic!("{other:?}"),
        }

        let mut bad = v;
        bad["type"] = serde_json::json!("quantum");
        assert!(matches!(ModelFile::from_json(&bad.to_string()), Err(LqssError::Format { .. })));
        assert!(matches!(ModelFile::from_json("{"), Err(LqssError::Format { .. })));
        assert!(matches!(ModelFile::from_json("[]"), Err(LqssError::Format { .. })));
    }

    #[test]
    fn general_doubled_up_violation_located() {
        let mut g = ChaCha8Rng::seed_from_u64(5);
        let gm = crate::general::random_general_model(&mut g, 2, 1);
        let mut f = ModelFile::from_model(&LqssModel::General(gm));
        f.coupling[(1, 3)] += Complex64::new(0.5, 0.0);
        match f.to_model(1e-9) {
            Err(LqssError::Format { at, message }) => {
                assert_eq!(at, "N[0][1]");
                assert!(message.contains("doubled-up"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn example1_netlist() {
        let (model, net) = synthesize(&example1_file(), &SynthSettings::default()).unwrap();
        assert_eq!(net.cavities.len(), 3);
        assert_eq!(net.cavities_with_ports(), 2);
        assert_eq!(net.feedback.r.shape(), (3, 3));
        assert!(net.check(1e-8).unwrap() < 1e-8);
        let back = NetlistFile::from_json(&to_json(&net).unwrap()).unwrap();
        assert_eq!(back, net);
        let rep = verify_realization(&model, &back.realized_network().unwrap(), &VerifyOptions::default()).unwrap();
        assert!(rep.pass, "{}", rep.max_error);
        let rf = ReportFile { schema_version: 1, report: rep };
        assert_eq!(parse_json::<ReportFile>(&to_json(&rf).unwrap()).unwrap(), rf);
    }

    #[test]
    fn zero_coupling_netlist() {
        let mut f = example1_file();
        f.coupling = linalg::zeros(3, 3);
        let (model, net) = synthesize(&f, &SynthSettings::default()).unwrap();
        assert_eq!(net.cavities_with_ports(), 0);
        assert!(net.cavities.iter().all(|c| c.role == CavityRole::InterconnectOnly));
        let rep = verify_realization(&model, &net.realized_network().unwrap(), &VerifyOptions::default()).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn netlist_check_catches_bad_channels_and_schedules() {
        let (_, net) = synthesize(&example1_file(), &SynthSettings::default()).unwrap();
        let mut bad = net.clone();
        bad.cavities[0].ports[0].channel = 7;
        match bad.check(1e-8) {
            Err(LqssError::Format { at, .. }) => assert_eq!(at, "cavities[0].ports[0].channel"),
            other => panic!("{other:?}"),
        }
        let mut bad = net.clone();
        bad.feedback.r[(0, 0)] += Complex64::new(1e-3, 0.0);
        match bad.check(1e-8) {
            Err(LqssError::Format { at, .. }) => assert_eq!(at, "feedback.schedule"),
            other => panic!("{other:?}"),
        }
        let mut bad = net;
        bad.realization.n_tilde.pop();
        assert!(matches!(bad.realized_network(), Err(LqssError::Format { .. })));
    }

    #[test]
    fn matrix_file_validation() {
        let mut g = ChaCha8Rng::seed_from_u64(6);
        let b = krein::random_bogoliubov(&mut g, 2, 0.5).to_full();
        let f = MatrixFile::new(b.clone(), Some(ScheduleKind::Bogoliubov));
        let back: MatrixFile = parse_json(&to_json(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(back.validated(ScheduleKind::Bogoliubov, 1e-9).is_ok());
        assert!(matches!(back.validated(ScheduleKind::Unitary, 1e-9), Err(LqssError::Format { .. })));
        let s = decompose(&b, ScheduleKind::Bogoliubov, 1e-9).unwrap();
        assert!(s.residual(&b).unwrap() < 1e-8);
        let id = decompose(&linalg::eye(3), ScheduleKind::Unitary, 1e-9).unwrap();
        assert!(id.devices.is_empty());
    }

    #[test]
    fn settings_broadcast() {
        assert_eq!(per_mode("k", Some(&vec![2.0]), 3, 1.0).unwrap(), vec![2.0; 3]);
        assert!(per_mode("k", Some(&vec![2.0, 1.0]), 3, 1.0).is_err());
        let s = SynthSettings { interconnect_kappas: Some(vec![-1.0]), ..Default::default() };
        assert!(matches!(synthesize(&example1_file(), &s), Err(LqssError::Parameter(_))));
    }
}
