//! Static networks as device schedules: Reck factorization of unitaries and
//! Bloch–Messiah reduction of Bogoliubov matrices.

use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LqssError, Result};
use crate::krein::{self, DoubledUp};
use crate::linalg::{self, c, fro, r, CMat, RMat, ZERO};

/// Entries below this magnitude are treated as already eliminated.
const ELIM_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitterDevice {
    pub channels: (usize, usize),
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
    pub zeta: f64,
}

impl BeamSplitterDevice {
    pub fn matrix(&self) -> CMat {
        let (ch, sh) = ((self.theta / 2.0).cos(), (self.theta / 2.0).sin());
        let e = |a: f64| Complex64::from_polar(1.0, a);
        let z = e(self.zeta);
        let mut m = linalg::zeros(2, 2);
        m[(0, 0)] = z * e((self.phi + self.psi) / 2.0) * ch;
        m[(0, 1)] = z * e((self.psi - self.phi) / 2.0) * sh;
        m[(1, 0)] = -z * e((self.phi - self.psi) / 2.0) * sh;
        m[(1, 1)] = z * e(-(self.phi + self.psi) / 2.0) * ch;
        m
    }

    /// Parameters of a 2x2 unitary; `zeta` carries the overall phase
    /// `arg det / 2`.
    pub fn from_unitary(channels: (usize, usize), u: &CMat) -> Self {
        let zeta = (u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)]).arg() / 2.0;
        let su = u * Complex64::from_polar(1.0, -zeta);
        let (a, b) = (su[(0, 0)], su[(0, 1)]);
        let theta = 2.0 * b.norm().atan2(a.norm());
        let pa = if a.norm() > ELIM_TOL { a.arg() } else { 0.0 };
        let pb = if b.norm() > ELIM_TOL { b.arg() } else { 0.0 };
        Self { channels, theta: theta.rem_euclid(2.0 * std::f64::consts::PI), phi: pa - pb, psi: pa + pb, zeta }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezerDevice {
    pub channel: usize,
    pub x: f64,
    pub phi: f64,
    pub psi: f64,
}

impl SqueezerDevice {
    /// Doubled-up 2x2 matrix acting on `(U, U*)`.
    pub fn matrix(&self) -> CMat {
        let e = |a: f64| Complex64::from_polar(1.0, a);
        let (ch, sh) = (self.x.cosh(), self.x.sinh());
        let mut m = linalg::zeros(2, 2);
        m[(0, 0)] = e(self.phi + self.psi) * ch;
        m[(0, 1)] = e(self.psi - self.phi) * sh;
        m[(1, 0)] = e(self.phi - self.psi) * sh;
        m[(1, 1)] = e(-(self.phi + self.psi)) * ch;
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseShifterDevice {
    pub channel: usize,
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeviceRecord", into = "DeviceRecord")]
pub enum Device {
    BeamSplitter(BeamSplitterDevice),
    Squeezer(SqueezerDevice),
    PhaseShifter(PhaseShifterDevice),
}

/// Wire form of a device: `{type, channels, params}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceRecord {
    #[serde(rename = "type")]
    pub kind: String,
    pub channels: Vec<usize>,
    pub params: BTreeMap<String, f64>,
}

impl From<Device> for DeviceRecord {
    fn from(d: Device) -> Self {
        let p = |kv: &[(&str, f64)]| kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        match d {
            Device::BeamSplitter(b) => DeviceRecord {
                kind: "beam_splitter".into(),
                channels: vec![b.channels.0, b.channels.1],
                params: p(&[("theta", b.theta), ("phi", b.phi), ("psi", b.psi), ("zeta", b.zeta)]),
            },
            Device::Squeezer(s) => DeviceRecord {
                kind: "squeezer".into(),
                channels: vec![s.channel],
                params: p(&[("x", s.x), ("phi", s.phi), ("psi", s.psi)]),
            },
            Device::PhaseShifter(s) => DeviceRecord {
                kind: "phase_shifter".into(),
                channels: vec![s.channel],
                params: p(&[("phase", s.phase)]),
            },
        }
    }
}

impl TryFrom<DeviceRecord> for Device {
    type Error = String;

    fn try_from(rec: DeviceRecord) -> std::result::Result<Self, String> {
        let want = |names: &[&str], nch: usize| -> std::result::Result<Vec<f64>, String> {
            if rec.channels.len() != nch {
                return Err(format!("{} needs {nch} channel(s), got {}", rec.kind, rec.channels.len()));
            }
            if let Some(extra) = rec.params.keys().find(|k| !names.contains(&k.as_str())) {
                return Err(format!("{}: unknown parameter '{extra}'", rec.kind));
            }
            names
                .iter()
                .map(|n| match rec.params.get(*n) {
                    Some(v) if v.is_finite() => Ok(*v),
                    Some(v) => Err(format!("{}: parameter '{n}' is not finite ({v})", rec.kind)),
                    None => Err(format!("{}: missing parameter '{n}'", rec.kind)),
                })
                .collect()
        };
        match rec.kind.as_str() {
            "beam_splitter" => {
                let v = want(&["theta", "phi", "psi", "zeta"], 2)?;
                if rec.channels[0] == rec.channels[1] {
                    return Err("beam_splitter channels must differ".into());
                }
                Ok(Device::BeamSplitter(BeamSplitterDevice {
                    channels: (rec.channels[0], rec.channels[1]),
                    theta: v[0],
                    phi: v[1],
                    psi: v[2],
                    zeta: v[3],
                }))
            }
            "squeezer" => {
                let v = want(&["x", "phi", "psi"], 1)?;
                Ok(Device::Squeezer(SqueezerDevice { channel: rec.channels[0], x: v[0], phi: v[1], psi: v[2] }))
            }
            "phase_shifter" => {
                let v = want(&["phase"], 1)?;
                Ok(Device::PhaseShifter(PhaseShifterDevice { channel: rec.channels[0], phase: v[0] }))
            }
            other => Err(format!("unknown device type '{other}'")),
        }
    }
}

impl Device {
    pub fn channels(&self) -> Vec<usize> {
        match self {
            Device::BeamSplitter(b) => vec![b.channels.0, b.channels.1],
            Device::Squeezer(s) => vec![s.channel],
            Device::PhaseShifter(p) => vec![p.channel],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Acts on `m` channels by an `m x m` unitary.
    Unitary,
    /// Acts on `(U, U#)` by a `2m x 2m` Bogoliubov matrix.
    Bogoliubov,
}

/// Devices in the order the field meets them; the represented matrix is
/// `D_k ... D_2 D_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSchedule {
    pub kind: ScheduleKind,
    pub dimension: usize,
    pub devices: Vec<Device>,
}

impl DeviceSchedule {
    pub fn empty(kind: ScheduleKind, dimension: usize) -> Self {
        Self { kind, dimension, devices: Vec::new() }
    }

    pub fn count(&self, pred: impl Fn(&Device) -> bool) -> usize {
        self.devices.iter().filter(|d| pred(d)).count()
    }

    pub fn beam_splitters(&self) -> usize {
        self.count(|d| matches!(d, Device::BeamSplitter(_)))
    }

    pub fn squeezers(&self) -> usize {
        self.count(|d| matches!(d, Device::Squeezer(_)))
    }

    pub fn phase_shifters(&self) -> usize {
        self.count(|d| matches!(d, Device::PhaseShifter(_)))
    }

    /// Checks channel ranges and that squeezers only occur in Bogoliubov
    /// schedules.
    pub fn validate(&self) -> Result<()> {
        for (k, d) in self.devices.iter().enumerate() {
            if let Some(ch) = d.channels().into_iter().find(|&ch| ch >= self.dimension) {
                return Err(LqssError::Structural(format!(
                    "device {k}: channel {ch} out of range for dimension {}",
                    self.dimension
                )));
            }
            if matches!(d, Device::Squeezer(_)) && self.kind == ScheduleKind::Unitary {
                return Err(LqssError::Structural(format!("device {k}: squeezer in a passive schedule")));
            }
        }
        Ok(())
    }

    fn embed(&self, d: &Device) -> CMat {
        let m = self.dimension;
        let size = match self.kind {
            ScheduleKind::Unitary => m,
            ScheduleKind::Bogoliubov => 2 * m,
        };
        let mut e = linalg::eye(size);
        let put_passive = |e: &mut CMat, idx: &[usize], blk: &CMat| {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    e[(i, j)] = blk[(a, b)];
                    if self.kind == ScheduleKind::Bogoliubov {
                        e[(i + m, j + m)] = blk[(a, b)].conj();
                    }
                }
            }
        };
        match d {
            Device::BeamSplitter(b) => put_passive(&mut e, &[b.channels.0, b.channels.1], &b.matrix()),
            Device::PhaseShifter(p) => {
                put_passive(&mut e, &[p.channel], &CMat::from_element(1, 1, Complex64::from_polar(1.0, p.phase)))
            }
            Device::Squeezer(s) => {
                let blk = s.matrix();
                let i = s.channel;
                e[(i, i)] = blk[(0, 0)];
                e[(i, i + m)] = blk[(0, 1)];
                e[(i + m, i)] = blk[(1, 0)];
                e[(i + m, i + m)] = blk[(1, 1)];
            }
        }
        e
    }

    /// Ordered product of the embedded device matrices.
    pub fn matrix(&self) -> Result<CMat> {
        self.validate()?;
        let size = match self.kind {
            ScheduleKind::Unitary => self.dimension,
            ScheduleKind::Bogoliubov => 2 * self.dimension,
        };
        let mut acc = linalg::eye(size);
        for d in &self.devices {
            acc = self.embed(d) * acc;
        }
        Ok(acc)
    }

    /// `‖product - target‖_F / (1 + ‖target‖_F)`.
    pub fn residual(&self, target: &CMat) -> Result<f64> {
        let m = self.matrix()?;
        if m.shape() != target.shape() {
            return Err(LqssError::Structural(format!(
                "schedule acts on {:?} but target is {:?}",
                m.shape(),
                target.shape()
            )));
        }
        Ok(fro(&(m - target)) / (1.0 + fro(target)))
    }

    /// Same devices, applied inside a doubled-up schedule.
    pub fn to_bogoliubov(&self) -> DeviceSchedule {
        DeviceSchedule { kind: ScheduleKind::Bogoliubov, ..self.clone() }
    }
}

/// Triangular factorization of a unitary into adjacent beamsplitters and
/// phase shifters.
pub fn reck_decompose(u: &CMat, tol: f64) -> Result<DeviceSchedule> {
    let m = u.nrows();
    if u.ncols() != m {
        return Err(LqssError::Structural(format!("unitary must be square, got {}x{}", m, u.ncols())));
    }
    let res = linalg::unitarity_residual(u);
    if !(res <= tol * (1.0 + m as f64)) {
        return Err(LqssError::Structural(format!("matrix is not unitary (residual {res:.3e})")));
    }
    let mut work = u.clone();
    let mut rotations = Vec::new();
    for j in 0..m.saturating_sub(1) {
        for i in (j + 1..m).rev() {
            let b = work[(i, j)];
            if b.norm() <= ELIM_TOL {
                continue;
            }
            let a = work[(i - 1, j)];
            let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
            // T maps (a, b) to (rho, 0)
            let mut t = linalg::zeros(2, 2);
            t[(0, 0)] = a.conj() / rho;
            t[(0, 1)] = b.conj() / rho;
            t[(1, 0)] = -b / rho;
            t[(1, 1)] = a / rho;
            let rows = work.rows(i - 1, 2).into_owned();
            work.rows_mut(i - 1, 2).copy_from(&(&t * rows));
            work[(i, j)] = ZERO;
            rotations.push(((i - 1, i), t.adjoint()));
        }
    }
    let mut devices = Vec::new();
    for k in 0..m {
        let phase = work[(k, k)].arg();
        if phase.abs() > ELIM_TOL {
            devices.push(Device::PhaseShifter(PhaseShifterDevice { channel: k, phase }));
        }
    }
    for (pair, t) in rotations.into_iter().rev() {
        devices.push(Device::BeamSplitter(BeamSplitterDevice::from_unitary(pair, &t)));
    }
    Ok(DeviceSchedule { kind: ScheduleKind::Unitary, dimension: m, devices })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlochMessiah {
    pub u1: CMat,
    pub x: Vec<f64>,
    pub u2: CMat,
}

impl BlochMessiah {
    /// `diag(U2, U2#) [[cosh X, sinh X], [sinh X, cosh X]] diag(U1, U1#)`.
    pub fn matrix(&self) -> CMat {
        let ch: Vec<f64> = self.x.iter().map(|x| x.cosh()).collect();
        let sh: Vec<f64> = self.x.iter().map(|x| x.sinh()).collect();
        let mid = DoubledUp::new(linalg::diag_real(&ch), linalg::diag_real(&sh)).expect("square");
        let a = DoubledUp::passive(self.u2.clone()).mul(&mid).expect("dims");
        a.mul(&DoubledUp::passive(self.u1.clone())).expect("dims").to_full()
    }
}

/// Takagi factor of a symmetric unitary: `Q = T Tᵀ` with `T` unitary.
fn takagi_symmetric_unitary(q: &CMat) -> Result<CMat> {
    let k = q.nrows();
    let re: RMat = q.map(|z| z.re);
    let im: RMat = q.map(|z| z.im);
    let re = (&re + re.transpose()) * 0.5;
    let im = (&im + im.transpose()) * 0.5;
    // Re Q and Im Q commute; a generic combination diagonalizes both.
    for t in [0.618_033_988_749_895, 1.324_717_957_244_746, -0.754_877_666_246_693] {
        let eig = SymmetricEigen::new(&re + &im * t);
        let o = eig.eigenvectors;
        let d = o.transpose() * q.map(|z| z.re) * &o;
        let e = o.transpose() * q.map(|z| z.im) * &o;
        let mut tm = linalg::to_complex(&o);
        for j in 0..k {
            let half = Complex64::new(d[(j, j)], e[(j, j)]).arg() / 2.0;
            let ph = Complex64::from_polar(1.0, half);
            for i in 0..k {
                tm[(i, j)] *= ph;
            }
        }
        if fro(&(&tm * tm.transpose() - q)) < 1e-9 * (1.0 + k as f64) {
            return Ok(tm);
        }
    }
    Err(LqssError::Numerical("Takagi factorization of a squeezing block did not converge".into()))
}

/// Bloch–Messiah reduction `R = diag(U2, U2#) [[cosh X, sinh X], [sinh X, cosh X]] diag(U1, U1#)`
/// with `X ≥ 0` in descending order.
pub fn bloch_messiah(rr: &CMat, tol: f64) -> Result<BlochMessiah> {
    let d = DoubledUp::from_full(rr, tol * (1.0 + fro(rr)))?;
    let res = krein::bogoliubov_residual(rr);
    if res > tol * (1.0 + fro(rr).powi(2)) {
        return Err(LqssError::Structural(format!("matrix is not Bogoliubov (residual {res:.3e})")));
    }
    let m = d.half_rows();
    let svd = linalg::full_svd(d.x1());
    let a = svd.u;
    let b = svd.v;
    let cvals = svd.s;
    let k = a.adjoint() * d.x2() * b.map(|z| z.conj());
    let s: Vec<f64> = (0..m).map(|i| k.row(i).norm()).collect();
    // clusters of equal cosh values
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        match clusters.last_mut() {
            Some(cl) if (cvals[cl[0]] - cvals[i]).abs() <= 1e-9 * (1.0 + cvals[i]) => cl.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let mut t = linalg::zeros(m, m);
    for cl in &clusters {
        let sc = cl.iter().map(|&i| s[i]).fold(0.0, f64::max);
        let n = cl.len();
        if sc <= 1e-14 * (1.0 + cvals[cl[0]]) {
            for &i in cl {
                t[(i, i)] = c(1.0, 0.0);
            }
            continue;
        }
        let mut q = linalg::zeros(n, n);
        for (a_, &i) in cl.iter().enumerate() {
            for (b_, &j) in cl.iter().enumerate() {
                q[(a_, b_)] = k[(i, j)] / s[i];
            }
        }
        let q = (&q + q.transpose()) * r(0.5);
        let tc = takagi_symmetric_unitary(&q)?;
        for (a_, &i) in cl.iter().enumerate() {
            for (b_, &j) in cl.iter().enumerate() {
                t[(i, j)] = tc[(a_, b_)];
            }
        }
    }
    let x: Vec<f64> = s.iter().map(|&si| si.asinh()).collect();
    let u2 = &a * &t;
    let u1 = t.adjoint() * b.adjoint();
    let bm = BlochMessiah { u1, x, u2 };
    let recon = fro(&(bm.matrix() - rr)) / (1.0 + fro(rr));
    if recon > 1e-8 {
        return Err(LqssError::Numerical(format!("Bloch–Messiah reconstruction residual {recon:.3e}")));
    }
    Ok(bm)
}

/// Full device schedule of a Bogoliubov matrix: passive mesh `U1`, one
/// squeezer per channel with nonzero `x`, passive mesh `U2`.
pub fn schedule_static(rr: &CMat, tol: f64) -> Result<DeviceSchedule> {
    let bm = bloch_messiah(rr, tol)?;
    let m = bm.x.len();
    let s1 = reck_decompose(&bm.u1, 1e-9)?;
    let s2 = reck_decompose(&bm.u2, 1e-9)?;
    let mut devices = s1.devices;
    for (i, &x) in bm.x.iter().enumerate() {
        if x.abs() > ELIM_TOL {
            devices.push(Device::Squeezer(SqueezerDevice { channel: i, x, phi: 0.0, psi: 0.0 }));
        }
    }
    devices.extend(s2.devices);
    Ok(DeviceSchedule { kind: ScheduleKind::Bogoliubov, dimension: m, devices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn beamsplitter_round_trip() {
        let mut g = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let u = linalg::random_unitary(&mut g, 2);
            let b = BeamSplitterDevice::from_unitary((0, 1), &u);
            assert!(fro(&(b.matrix() - &u)) < 1e-12);
            assert!(linalg::unitarity_residual(&b.matrix()) < 1e-12);
        }
    }

    #[test]
    fn squeezer_is_bogoliubov() {
        let s = SqueezerDevice { channel: 0, x: 0.7, phi: 0.3, psi: -1.1 };
        assert!(krein::bogoliubov_residual(&s.matrix()) < 1e-12);
    }

    #[test]
    fn reck_identity_is_empty() {
        let s = reck_decompose(&linalg::eye(4), 1e-9).unwrap();
        assert!(s.devices.is_empty());
    }

    #[test]
    fn reck_rotation_single_splitter() {
        let t = 0.4f64;
        let u = linalg::from_real_rows(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let s = reck_decompose(&u, 1e-9).unwrap();
        assert_eq!(s.beam_splitters(), 1);
        assert_eq!(s.phase_shifters(), 0);
        match s.devices[0] {
            Device::BeamSplitter(b) => assert!((b.theta - 2.0 * t).abs() < 1e-12),
            _ => unreachable!(),
        }
        assert!(s.residual(&u).unwrap() < 1e-12);
    }

    #[test]
    fn reck_random() {
        let mut g = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let m = g.random_range(1..7);
            let u = linalg::random_unitary(&mut g, m);
            let s = reck_decompose(&u, 1e-9).unwrap();
            assert!(s.beam_splitters() <= m * (m - 1) / 2);
            assert!(s.residual(&u).unwrap() < 1e-9);
        }
    }

    #[test]
    fn reck_rejects_nonunitary() {
        let u = linalg::from_real_rows(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(reck_decompose(&u, 1e-9), Err(LqssError::Structural(_))));
    }

    #[test]
    fn bloch_messiah_identity_and_squeezer() {
        let bm = bloch_messiah(&linalg::eye(4), 1e-9).unwrap();
        assert!(bm.x.iter().all(|x| x.abs() < 1e-14));
        assert!(fro(&(bm.matrix() - linalg::eye(4))) < 1e-12);
        let sq = SqueezerDevice { channel: 0, x: 1.0, phi: 0.0, psi: 0.0 }.matrix();
        let bm = bloch_messiah(&sq, 1e-9).unwrap();
        assert!((bm.x[0] - 1.0).abs() < 1e-12);
        let sq = SqueezerDevice { channel: 0, x: 0.6, phi: 0.4, psi: 1.2 }.matrix();
        let bm = bloch_messiah(&sq, 1e-9).unwrap();
        assert!((bm.x[0] - 0.6).abs() < 1e-12);
        assert!(fro(&(bm.matrix() - sq)) < 1e-12);
    }

    #[test]
    fn bloch_messiah_random() {
        let mut g = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let m = g.random_range(1..5);
            let rr = krein::random_bogoliubov(&mut g, m, 0.5).to_full();
            let bm = bloch_messiah(&rr, 1e-9).unwrap();
            assert!(linalg::unitarity_residual(&bm.u1) < 1e-10);
            assert!(linalg::unitarity_residual(&bm.u2) < 1e-10);
            assert!(fro(&(bm.matrix() - &rr)) / (1.0 + fro(&rr)) < 1e-8);
            let s = schedule_static(&rr, 1e-9).unwrap();
            assert!(s.residual(&rr).unwrap() < 1e-8);
            assert!(s.squeezers() <= m && s.beam_splitters() <= m * (m - 1));
        }
    }

    #[test]
    fn bloch_messiah_repeated_squeezing() {
        // equal squeezing on two channels mixed by unitaries
        let mut g = ChaCha8Rng::seed_from_u64(12);
        let bm0 = BlochMessiah {
            u1: linalg::random_unitary(&mut g, 3),
            x: vec![0.8, 0.8, 0.0],
            u2: linalg::random_unitary(&mut g, 3),
        };
        let rr = bm0.matrix();
        let bm = bloch_messiah(&rr, 1e-9).unwrap();
        assert!(fro(&(bm.matrix() - &rr)) < 1e-9);
        assert!((bm.x[0] - 0.8).abs() < 1e-9 && (bm.x[1] - 0.8).abs() < 1e-9 && bm.x[2].abs() < 1e-9);
    }

    #[test]
    fn passive_input_has_no_squeezers() {
        let mut g = ChaCha8Rng::seed_from_u64(13);
        let u = linalg::random_unitary(&mut g, 3);
        let rr = DoubledUp::passive(u).to_full();
        let s = schedule_static(&rr, 1e-9).unwrap();
        assert_eq!(s.squeezers(), 0);
        assert!(s.residual(&rr).unwrap() < 1e-9);
    }

    #[test]
    fn device_record_round_trip_and_errors() {
        let d =
            Device::BeamSplitter(BeamSplitterDevice { channels: (0, 2), theta: 1.0, phi: 0.1, psi: 0.2, zeta: 0.3 });
        let js = serde_json::to_string(&d).unwrap();
        let back: Device = serde_json::from_str(&js).unwrap();
        assert_eq!(d, back);
        let bad = r#"{"type":"squeezer","channels":[0,1],"params":{"x":1,"phi":0,"psi":0}}"#;
        assert!(serde_json::from_str::<Device>(bad).is_err());
        let bad = r#"{"type":"laser","channels":[0],"params":{}}"#;
        assert!(serde_json::from_str::<Device>(bad).is_err());
        let s = DeviceSchedule { kind: ScheduleKind::Unitary, dimension: 2, devices: vec![d] };
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_non_bogoliubov() {
        let rr = linalg::diag_real(&[2.0, 2.0]);
        assert!(matches!(bloch_messiah(&rr, 1e-9), Err(LqssError::Structural(_))));
    }
}
