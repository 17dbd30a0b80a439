//! Squeezing delivered into a mismatched target mode.
//!
//! A target mode displaced, tilted or resized relative to the squeezed beam
//! is expanded in the HG basis of the target waist with coefficients β. A
//! relay to the image plane or a lens to the Fourier plane multiplies each
//! HG order by a fixed phase. The coefficients, the phases and a local
//! oscillator phase combine into a real quadrature weight vector `r`, and the
//! homodyne variance in the target mode is `rᵀVr`.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{Complex, DVector};

use crate::error::{Error, Result};
use crate::modes::{factorial, ModeBasis, ModeIndex};
use crate::opo::QuadratureCovariance;

type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MismatchKind {
    /// Lateral offset, parameter `d / w_t`.
    Displacement,
    /// Angular offset, parameter `π w_t sin φ / λ₀`.
    Tilt,
    /// Waist ratio `w / w_t`.
    Size,
}

impl MismatchKind {
    pub const ALL: [Self; 3] = [Self::Displacement, Self::Tilt, Self::Size];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Displacement => "disp",
            Self::Tilt => "tilt",
            Self::Size => "size",
        }
    }

    /// Parameter at which `|β₀₀|² = 1/2`.
    pub fn half_overlap_parameter(self) -> f64 {
        match self {
            Self::Displacement | Self::Tilt => 2f64.ln().sqrt(),
            Self::Size => 1.0 + 2f64.sqrt(),
        }
    }
}

impl FromStr for MismatchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disp" | "displacement" => Ok(Self::Displacement),
            "tilt" => Ok(Self::Tilt),
            "size" => Ok(Self::Size),
            other => Err(Error::Config(format!(
                "unknown mismatch kind `{other}` (expected disp, tilt or size)"
            ))),
        }
    }
}

impl std::fmt::Display for MismatchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Plane in which the target mode sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    Image,
    Fourier,
}

impl Plane {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Image => "image",
            Self::Fourier => "fourier",
        }
    }

    /// Local oscillator phase that makes the fundamental-mode coupling real.
    pub fn default_lo_phase(self) -> f64 {
        match self {
            Self::Image => 0.0,
            Self::Fourier => PI / 2.0,
        }
    }
}

impl FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image" => Ok(Self::Image),
            "fourier" => Ok(Self::Fourier),
            other => Err(Error::Config(format!(
                "unknown plane `{other}` (expected image or fourier)"
            ))),
        }
    }
}

impl std::fmt::Display for Plane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSpec {
    pub kind: MismatchKind,
    pub parameter: f64,
    pub plane: Plane,
    pub lo_phase: f64,
}

impl MismatchSpec {
    /// Mismatch description with the default local oscillator phase of the plane.
    pub fn new(kind: MismatchKind, parameter: f64, plane: Plane) -> Result<Self> {
        let spec = Self {
            kind,
            parameter,
            plane,
            lo_phase: plane.default_lo_phase(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_lo_phase(mut self, lo_phase: f64) -> Self {
        self.lo_phase = lo_phase;
        self
    }

    pub fn with_parameter(mut self, parameter: f64) -> Result<Self> {
        self.parameter = parameter;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.parameter;
        match self.kind {
            MismatchKind::Size if !(p > 0.0 && p.is_finite()) => {
                Err(Error::domain("size ratio", p, "w/w_t > 0"))
            }
            MismatchKind::Displacement | MismatchKind::Tilt if !(p >= 0.0 && p.is_finite()) => {
                Err(Error::domain("mismatch parameter", p, "p >= 0"))
            }
            _ if !self.lo_phase.is_finite() => {
                Err(Error::domain("lo_phase", self.lo_phase, "finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Expansion coefficients of the mismatched mode in the target basis.
pub fn beta(spec: &MismatchSpec, basis: &ModeBasis) -> Vec<C64> {
    basis
        .modes()
        .iter()
        .map(|&mode| beta_mode(spec, mode))
        .collect()
}

fn beta_mode(spec: &MismatchSpec, mode: ModeIndex) -> C64 {
    let p = spec.parameter;
    match spec.kind {
        MismatchKind::Displacement | MismatchKind::Tilt => {
            if mode.n != 0 {
                return C64::new(0.0, 0.0);
            }
            let m = mode.m;
            let mag = p.powi(m as i32) / factorial(m).sqrt() * (-p * p / 2.0).exp();
            if spec.kind == MismatchKind::Tilt {
                C64::new(0.0, 1.0).powi(m as i32) * mag
            } else {
                C64::new(mag, 0.0)
            }
        }
        MismatchKind::Size => {
            let (m, n) = (mode.m, mode.n);
            if m % 2 == 1 || n % 2 == 1 {
                return C64::new(0.0, 0.0);
            }
            let r = p.ln();
            let v = (factorial(m) * factorial(n)).sqrt()
                * (r.tanh() / 2.0).powi(((m + n) / 2) as i32)
                / (factorial(m / 2) * factorial(n / 2) * r.cosh());
            C64::new(v, 0.0)
        }
    }
}

/// `(-1)^(m+n+1)` in the image plane, `(-i)^(m+n+1)` in the Fourier plane.
pub fn plane_factor(mode: ModeIndex, plane: Plane) -> C64 {
    let e = (mode.order() + 1) as i32;
    match plane {
        Plane::Image => C64::new(-1.0, 0.0).powi(e),
        Plane::Fourier => C64::new(0.0, -1.0).powi(e),
    }
}

/// Result of propagating an HG mode through a paraxial ABCD system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcdTransform {
    /// Complex factor multiplying an HG mode of total order `m + n`.
    pub amplitude: C64,
    /// Output beam parameter in the convention `q_in = -i k w²/2`.
    pub q: C64,
    pub spot_size: f64,
}

/// Propagates an HG mode of waist `w_in` (at its waist) with wavenumber `k`.
pub fn abcd_mode_transform(
    mode: ModeIndex,
    abcd: [f64; 4],
    w_in: f64,
    k: f64,
) -> Result<AbcdTransform> {
    let [a, b, c, d] = abcd;
    if ((a * d - b * c) - 1.0).abs() > 1e-9 {
        return Err(Error::domain("AD - BC", a * d - b * c, "AD - BC = 1"));
    }
    if !(w_in > 0.0 && k > 0.0) {
        return Err(Error::domain("w_in * k", w_in * k, "w_in > 0 and k > 0"));
    }
    let denom = C64::new(a * w_in, 2.0 * b / (k * w_in));
    if denom.norm() == 0.0 {
        return Err(Error::DegenerateOptics);
    }
    let spot_size = ((a * w_in).powi(2) + (2.0 * b / (k * w_in)).powi(2)).sqrt();
    let q_in = C64::new(0.0, -k * w_in * w_in / 2.0);
    let q = (q_in * a + b) / (q_in * c + d);
    let amplitude = (C64::new(spot_size, 0.0) / denom).powi((mode.order() + 1) as i32);
    Ok(AbcdTransform {
        amplitude,
        q,
        spot_size,
    })
}

/// Complex coupling coefficients of the target mode to every basis mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector {
    basis: ModeBasis,
    coefficients: Vec<C64>,
}

impl CouplingVector {
    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    /// `Σ|c|²`, at most 1.
    pub fn weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `|c₀₀|²`.
    pub fn fundamental_weight(&self) -> f64 {
        self.coefficients[0].norm_sqr()
    }

    /// `[Re c₀₀, Re c₀₁, …, Im c₀₀, Im c₀₁, …]`.
    pub fn realified(&self) -> DVector<f64> {
        let k = self.coefficients.len();
        DVector::from_fn(2 * k, |i, _| {
            if i < k {
                self.coefficients[i].re
            } else {
                self.coefficients[i - k].im
            }
        })
    }
}

pub fn coupling_vector(spec: &MismatchSpec, basis: &ModeBasis) -> CouplingVector {
    let lo = C64::from_polar(1.0, spec.lo_phase);
    let coefficients = basis
        .modes()
        .iter()
        .map(|&mode| beta_mode(spec, mode) * plane_factor(mode, spec.plane) * lo)
        .collect();
    CouplingVector {
        basis: basis.clone(),
        coefficients,
    }
}

/// Homodyne variance in the target mode, `rᵀVr` plus vacuum for the weight
/// outside the basis.
pub fn target_variance(v: &QuadratureCovariance, c: &CouplingVector) -> Result<f64> {
    if v.basis() != c.basis() {
        return Err(Error::BasisMismatch {
            covariance: v.entries().nrows(),
            coupling: 2 * c.basis().len(),
        });
    }
    let r = c.realified();
    let inside = (r.transpose() * v.entries() * &r)[(0, 0)];
    Ok(inside + (1.0 - c.weight()).max(0.0))
}

/// Variances delivered by the two single-mode reference sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceVariances {
    /// Fundamental mode squeezed to `S00`, all others vacuum.
    pub single_mode: f64,
    /// Fundamental mode infinitely squeezed.
    pub infinite_squeezing: f64,
}

pub fn reference_variances(beta00_sq: f64, s00: f64) -> Result<ReferenceVariances> {
    if !(0.0..=1.0).contains(&beta00_sq) {
        return Err(Error::domain("beta00^2", beta00_sq, "0 <= beta00^2 <= 1"));
    }
    if !(0.0..=1.0).contains(&s00) {
        return Err(Error::domain("S00", s00, "0 <= S00 <= 1"));
    }
    Ok(ReferenceVariances {
        single_mode: beta00_sq * s00 + (1.0 - beta00_sq),
        infinite_squeezing: 1.0 - beta00_sq,
    })
}

/// `-10 log₁₀(var_multi / var_single)` in dB; positive when the multimode
/// source delivers more squeezing.
pub fn enhancement_factor(var_multi: f64, var_single: f64) -> Result<f64> {
    if !(var_multi > 0.0) {
        return Err(Error::domain("var_multi", var_multi, "> 0"));
    }
    if !(var_single > 0.0) {
        return Err(Error::domain("var_single", var_single, "> 0"));
    }
    Ok(-10.0 * (var_multi / var_single).log10())
}
