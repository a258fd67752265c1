//! Two-qubit polarization algebra.
//!
//! Basis ordering is `{HH, HV, VH, VV}` throughout. Circular states follow
//! `|R⟩ = (|H⟩ − i|V⟩)/√2`, and a quarter-wave plate with its fast axis at
//! π/4 takes `|H⟩` to `|R⟩`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;
pub type Jones = Vector2<C64>;
pub type Matrix2c = Matrix2<C64>;
pub type Matrix4c = Matrix4<C64>;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Amplitudes of `α|HH⟩ + e^{iφ}β|VV⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SagnacState {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

impl SagnacState {
    pub fn new(alpha: f64, beta: f64, phi: f64) -> Result<Self> {
        let s = Self { alpha, beta, phi };
        s.validate()?;
        Ok(s)
    }

    pub fn phi_plus() -> Self {
        Self {
            alpha: FRAC_1_SQRT_2,
            beta: FRAC_1_SQRT_2,
            phi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(invalid("alpha/beta", "amplitudes must be >= 0"));
        }
        if !self.phi.is_finite() {
            return Err(invalid("phi", "must be finite"));
        }
        let norm = self.alpha * self.alpha + self.beta * self.beta;
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid(
                "alpha/beta",
                format!("alpha^2 + beta^2 = {norm}, expected 1"),
            ));
        }
        Ok(())
    }

    pub fn amplitudes(&self) -> Vector4<C64> {
        Vector4::new(
            c(self.alpha, 0.0),
            C64::default(),
            C64::default(),
            C64::from_polar(self.beta, self.phi),
        )
    }
}

/// Density matrix of the source output state.
pub fn sagnac_state(s: &SagnacState) -> Result<DensityMatrix> {
    s.validate()?;
    Ok(DensityMatrix::from_pure(&s.amplitudes()))
}

/// State produced for a given pump Jones vector. The relative phase of the
/// pump's V component maps directly onto φ.
pub fn pump_to_state(pump: &Jones) -> Result<SagnacState> {
    let norm = pump.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(invalid("pump_jones", "zero or non-finite vector"));
    }
    let (h, v) = (pump[0] / norm, pump[1] / norm);
    let phi = if h.norm() == 0.0 || v.norm() == 0.0 {
        0.0
    } else {
        let d = v.arg() - h.arg();
        d.sin().atan2(d.cos())
    };
    let (alpha, beta) = (h.norm(), v.norm());
    let scale = (alpha * alpha + beta * beta).sqrt();
    Ok(SagnacState {
        alpha: alpha / scale,
        beta: beta / scale,
        phi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveplateKind {
    Quarter,
    Half,
}

impl WaveplateKind {
    pub fn retardance(self) -> f64 {
        match self {
            WaveplateKind::Quarter => std::f64::consts::FRAC_PI_2,
            WaveplateKind::Half => std::f64::consts::PI,
        }
    }
}

/// Jones matrix of a linear retarder with its fast axis at `angle_rad`:
/// `R(θ) · diag(1, e^{iΓ}) · R(−θ)`.
pub fn waveplate_unitary(kind: WaveplateKind, angle_rad: f64) -> Matrix2c {
    retarder(kind.retardance(), angle_rad)
}

pub fn retarder(retardance: f64, angle_rad: f64) -> Matrix2c {
    let (s, co) = angle_rad.sin_cos();
    let rot = Matrix2c::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0));
    let phase = Matrix2c::new(
        c(1.0, 0.0),
        C64::default(),
        C64::default(),
        C64::from_polar(1.0, retardance),
    );
    rot * phase * rot.transpose()
}

/// Projective measurement labels for a single photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    pub fn jones(self) -> Jones {
        let r = FRAC_1_SQRT_2;
        match self {
            Polarization::H => Jones::new(c(1.0, 0.0), c(0.0, 0.0)),
            Polarization::V => Jones::new(c(0.0, 0.0), c(1.0, 0.0)),
            Polarization::D => Jones::new(c(r, 0.0), c(r, 0.0)),
            Polarization::A => Jones::new(c(r, 0.0), c(-r, 0.0)),
            Polarization::R => Jones::new(c(r, 0.0), c(0.0, -r)),
            Polarization::L => Jones::new(c(r, 0.0), c(0.0, r)),
        }
    }

    pub fn orthogonal(self) -> Polarization {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
            Polarization::D => Polarization::A,
            Polarization::A => Polarization::D,
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }

    /// `(quarter, half)` fast-axis angles placing this state on the
    /// transmitted port of an H-passing PBS after QWP then HWP.
    pub fn analyzer_angles(self) -> (f64, f64) {
        use std::f64::consts::PI;
        let e = PI / 8.0;
        match self {
            Polarization::H => (0.0, 0.0),
            Polarization::V => (0.0, 2.0 * e),
            Polarization::D => (2.0 * e, e),
            Polarization::A => (2.0 * e, 3.0 * e),
            Polarization::R => (0.0, e),
            Polarization::L => (0.0, 3.0 * e),
        }
    }

    pub fn label(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
            Polarization::D => 'D',
            Polarization::A => 'A',
            Polarization::R => 'R',
            Polarization::L => 'L',
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(Polarization::H),
            "V" | "v" => Ok(Polarization::V),
            "D" | "d" => Ok(Polarization::D),
            "A" | "a" => Ok(Polarization::A),
            "R" | "r" => Ok(Polarization::R),
            "L" | "l" => Ok(Polarization::L),
            other => Err(invalid("polarization", format!("unknown label `{other}`"))),
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

pub fn kron2(a: &Jones, b: &Jones) -> Vector4<C64> {
    Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

pub fn kron_matrix(a: &Matrix2c, b: &Matrix2c) -> Matrix4c {
    Matrix4c::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// 4×4 Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix4c);

impl DensityMatrix {
    /// Validate and wrap a matrix.
    pub fn new(m: Matrix4c) -> Result<Self> {
        let herm = (m - m.adjoint()).norm();
        if !(herm < HERMITIAN_TOL) {
            return Err(Error::NotPhysical(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotPhysical(format!("trace {tr} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&m).min();
        if min_eig < -PSD_TOL {
            return Err(Error::NotPhysical(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &Vector4<C64>) -> Self {
        let psi = psi / C64::from(psi.norm());
        Self(psi * psi.adjoint())
    }

    pub fn phi_plus() -> Self {
        Self::from_pure(&SagnacState::phi_plus().amplitudes())
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4c::identity() * c(0.25, 0.0))
    }

    /// `p|Φ+⟩⟨Φ+| + (1−p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        werner_mix(p, &Self::phi_plus())
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix4c {
        self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let ev = hermitian_eigenvalues(&self.0);
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    /// `(U_a ⊗ U_b) ρ (U_a ⊗ U_b)†`.
    pub fn apply_local_unitaries(&self, ua: &Matrix2c, ub: &Matrix2c) -> Self {
        let u = kron_matrix(ua, ub);
        let m = u * self.0 * u.adjoint();
        Self(hermitize(&m))
    }

    /// Structured text block: basis labels and `[re, im]` entries row by row.
    pub fn to_report_string(&self) -> String {
        let mut out = String::from("basis = [\"HH\", \"HV\", \"VH\", \"VV\"]\nrho = [\n");
        for r in 0..4 {
            let row: Vec<String> = (0..4)
                .map(|col| {
                    let z = self.0[(r, col)];
                    format!("[{:?}, {:?}]", clean_zero(z.re), clean_zero(z.im))
                })
                .collect();
            out.push_str(&format!("  [{}],\n", row.join(", ")));
        }
        out.push_str("]\n");
        out
    }

    pub fn from_report_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Record {
            basis: Vec<String>,
            rho: Vec<Vec<[f64; 2]>>,
        }
        let rec: Record = toml::from_str(text).map_err(|e| Error::Format {
            what: "density matrix report",
            reason: e.to_string(),
        })?;
        if rec.basis != ["HH", "HV", "VH", "VV"] {
            return Err(Error::Format {
                what: "density matrix report",
                reason: format!("basis must be HH, HV, VH, VV; got {:?}", rec.basis),
            });
        }
        if rec.rho.len() != 4 || rec.rho.iter().any(|r| r.len() != 4) {
            return Err(Error::Format {
                what: "density matrix report",
                reason: "rho must be 4x4".into(),
            });
        }
        let m = Matrix4c::from_fn(|r, col| c(rec.rho[r][col][0], rec.rho[r][col][1]));
        Self::new(hermitize(&m))
    }
}

fn clean_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

pub(crate) fn hermitize(m: &Matrix4c) -> Matrix4c {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub(crate) fn hermitian_eigenvalues(m: &Matrix4c) -> Vector4<f64> {
    hermitize(m).symmetric_eigenvalues()
}

/// Born-rule probability of a joint `(a, b)` projection.
pub fn coincidence_probability(rho: &DensityMatrix, a: Polarization, b: Polarization) -> f64 {
    projection_probability(rho.matrix(), &a.jones(), &b.jones()).clamp(0.0, 1.0)
}

pub(crate) fn projection_probability(m: &Matrix4c, a: &Jones, b: &Jones) -> f64 {
    let psi = kron2(a, b);
    (psi.adjoint() * m * psi)[(0, 0)].re
}

pub fn fidelity_to_phi_plus(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    (0.5 * (m[(0, 0)] + m[(0, 3)] + m[(3, 0)] + m[(3, 3)]).re).clamp(0.0, 1.0)
}

/// `Tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `p·ρ + (1−p)·I/4`.
pub fn werner_mix(p: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    let m = rho.matrix() * c(p, 0.0) + Matrix4c::identity() * c(0.25 * (1.0 - p), 0.0);
    Ok(DensityMatrix(m))
}

/// `½ Σ |λ_i(ρ − σ)|`.
pub fn trace_distance(a: &Matrix4c, b: &Matrix4c) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}
