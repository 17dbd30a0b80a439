//! Self-imaging OPO: cavity geometry, the frequency-domain system matrix and
//! the output quadrature covariance.
//!
//! Rates, gains, detunings and sideband frequencies are all normalized by
//! the total decay rate `γ_i + γ_l`, so the round-trip time never enters.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::modes::ModeBasis;
use crate::pdc::GainMatrix;

type C64 = Complex<f64>;

/// Largest spectral norm of the normalized gain accepted by [`OpoConfig`].
pub const THRESHOLD_GUARD: f64 = 0.999;

/// Tolerance on the non-Hermitian part of the complex covariance.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Argument `1 + 2b(a + b - ab)` of the round-trip arccos, with
/// `a = Δl₁/R`, `b = Δl₂/R`.
pub fn gouy_argument(dl1_over_r: f64, dl2_over_r: f64) -> f64 {
    let (a, b) = (dl1_over_r, dl2_over_r);
    1.0 + 2.0 * b * (a + b - a * b)
}

/// Round-trip Gouy phase, or `None` for an unstable resonator.
pub fn gouy_phase(dl1_over_r: f64, dl2_over_r: f64) -> Option<f64> {
    let (a, b) = (dl1_over_r, dl2_over_r);
    if !(a.abs() < 1.0 && b.abs() < 1.0) {
        return None;
    }
    let delta = 2.0 * b * (a + b - a * b);
    if !(-2.0..=0.0).contains(&delta) {
        return None;
    }
    // arccos(1 + δ) without the cancellation near δ = 0
    Some(2.0 * (-delta / 2.0).sqrt().asin().abs())
}

/// Cavity mode waist `√(Rλ₀/2π)`.
pub fn cavity_waist(radius: f64, wavelength: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain("R", radius, "R > 0"));
    }
    if !(wavelength > 0.0) {
        return Err(Error::domain("lambda0", wavelength, "lambda0 > 0"));
    }
    Ok((radius * wavelength / (2.0 * PI)).sqrt())
}

/// Physical geometry of the four-mirror self-imaging cavity, with mirror
/// curvature equal to the lens focal length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry {
    pub radius: f64,
    pub dl1: f64,
    pub dl2: f64,
    pub wavelength: f64,
}

impl CavityGeometry {
    pub fn new(radius: f64, dl1: f64, dl2: f64, wavelength: f64) -> Result<Self> {
        cavity_waist(radius, wavelength)?;
        Ok(Self {
            radius,
            dl1,
            dl2,
            wavelength,
        })
    }

    pub fn gouy_phase(&self) -> Option<f64> {
        gouy_phase(self.dl1 / self.radius, self.dl2 / self.radius)
    }

    pub fn is_stable(&self) -> bool {
        self.gouy_phase().is_some()
    }

    pub fn waist(&self) -> f64 {
        (self.radius * self.wavelength / (2.0 * PI)).sqrt()
    }
}

/// Squeezed and anti-squeezed variances of one mode and the rotation of the
/// squeezing ellipse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingResult {
    pub s_x: f64,
    pub s_p: f64,
    pub theta: f64,
}

/// Closed-form single-mode variances for gain `g`, detuning `delta`,
/// sideband frequency `omega` and escape efficiency `eta`.
pub fn analytic_squeezing(g: f64, delta: f64, omega: f64, eta: f64) -> Result<SqueezingResult> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain("eta", eta, "0 <= eta <= 1"));
    }
    let a = omega * omega - delta * delta + g * g + 1.0;
    let s = (a * a + 4.0 * delta * delta).sqrt();
    let g_abs = g.abs();
    if 2.0 * g_abs >= s {
        return Err(Error::AboveThreshold {
            gain: 2.0 * g_abs,
            limit: s,
        });
    }
    let s_x = 1.0 - eta * 4.0 * g_abs / (2.0 * g_abs + s);
    let s_p = 1.0 - eta * 4.0 * g_abs / (2.0 * g_abs - s);
    let denom = a + g.signum() * s;
    let theta = if denom == 0.0 {
        PI / 2.0
    } else {
        (2.0 * delta / denom).atan()
    };
    Ok(SqueezingResult { s_x, s_p, theta })
}

/// Normalized OPO parameters. Validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OpoConfig {
    t_i: f64,
    t_l: f64,
    gouy: f64,
    gain: GainMatrix,
}

impl OpoConfig {
    /// `t_i`, `t_l`: coupler and loss transmittances; `gouy`: round-trip
    /// Gouy phase in radians.
    pub fn new(t_i: f64, t_l: f64, gouy: f64, gain: GainMatrix) -> Result<Self> {
        if !(t_i > 0.0 && t_i <= 1.0) {
            return Err(Error::domain("T_i", t_i, "0 < T_i <= 1"));
        }
        if !(0.0..1.0).contains(&t_l) {
            return Err(Error::domain("T_l", t_l, "0 <= T_l < 1"));
        }
        if !gouy.is_finite() {
            return Err(Error::domain("theta_G", gouy, "finite"));
        }
        let norm = gain.spectral_norm();
        if norm >= THRESHOLD_GUARD {
            return Err(Error::AboveThreshold {
                gain: norm,
                limit: THRESHOLD_GUARD,
            });
        }
        Ok(Self {
            t_i,
            t_l,
            gouy,
            gain,
        })
    }

    pub fn t_i(&self) -> f64 {
        self.t_i
    }

    pub fn t_l(&self) -> f64 {
        self.t_l
    }

    pub fn gouy(&self) -> f64 {
        self.gouy
    }

    pub fn gain(&self) -> &GainMatrix {
        &self.gain
    }

    pub fn basis(&self) -> &ModeBasis {
        self.gain.basis()
    }

    /// Escape efficiency `T_i / (T_i + T_l)`.
    pub fn eta(&self) -> f64 {
        self.t_i / (self.t_i + self.t_l)
    }

    /// Normalized detuning of mode order `m + n`.
    pub fn detuning(&self, order: usize) -> f64 {
        2.0 * self.gouy * order as f64 / (self.t_i + self.t_l)
    }

    pub fn with_gouy(&self, gouy: f64) -> Result<Self> {
        Self::new(self.t_i, self.t_l, gouy, self.gain.clone())
    }
}

/// `[[(1 - iω)I + G, D], [-D, (1 - iω)I - G]]`.
pub fn system_matrix(cfg: &OpoConfig, omega: f64) -> DMatrix<C64> {
    let g = cfg.gain.entries();
    let basis = cfg.basis();
    let k = basis.len();
    let diag = C64::new(1.0, -omega);
    DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let (br, bc) = (r / k, c / k);
        let (i, j) = (r % k, c % k);
        let g_ij = C64::new(g[(i, j)], 0.0);
        let on = if i == j { diag } else { C64::new(0.0, 0.0) };
        let d = if i == j {
            C64::new(cfg.detuning(basis.mode(i).order()), 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
        match (br, bc) {
            (0, 0) => on + g_ij,
            (0, 1) => d,
            (1, 0) => -d,
            _ => on - g_ij,
        }
    })
}

/// Real symmetric covariance of the output quadratures, ordered
/// `[X_00, X_01, …, P_00, P_01, …]`. Vacuum is the identity.
///
/// The complex spectral covariance is Hermitian. Its real part is kept; the
/// imaginary part is antisymmetric, cancels in `rᵀVr` for every real `r`, and
/// its largest magnitude is reported by [`Self::imaginary_part`]. It vanishes
/// for diagonal gain and at `ω = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureCovariance {
    basis: ModeBasis,
    entries: DMatrix<f64>,
    imaginary: f64,
}

impl QuadratureCovariance {
    pub fn vacuum(basis: &ModeBasis) -> Self {
        let n = 2 * basis.len();
        Self {
            basis: basis.clone(),
            entries: DMatrix::identity(n, n),
            imaginary: 0.0,
        }
    }

    pub fn from_entries(basis: ModeBasis, entries: DMatrix<f64>) -> Result<Self> {
        let n = 2 * basis.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::BasisMismatch {
                covariance: entries.nrows(),
                coupling: n,
            });
        }
        Ok(Self {
            basis,
            entries,
            imaginary: 0.0,
        })
    }

    /// Largest magnitude of the dropped antisymmetric imaginary part.
    pub fn imaginary_part(&self) -> f64 {
        self.imaginary
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    /// 2×2 covariance of `(X_i, P_i)` for mode index `i`.
    pub fn mode_block(&self, i: usize) -> Matrix2<f64> {
        let k = self.basis.len();
        let v = &self.entries;
        Matrix2::new(v[(i, i)], v[(i, k + i)], v[(k + i, i)], v[(k + i, k + i)])
    }

    /// Principal variances and ellipse angle of mode `i`.
    pub fn mode_squeezing(&self, i: usize) -> SqueezingResult {
        let b = self.mode_block(i);
        let (xx, xp, pp) = (b[(0, 0)], 0.5 * (b[(0, 1)] + b[(1, 0)]), b[(1, 1)]);
        let mean = 0.5 * (xx + pp);
        let radius = (0.25 * (xx - pp).powi(2) + xp * xp).sqrt();
        // direction of the larger principal axis, turned by π/2
        let mut theta = 0.5 * (2.0 * xp).atan2(xx - pp) + PI / 2.0;
        while theta > PI / 2.0 {
            theta -= PI;
        }
        while theta <= -PI / 2.0 {
            theta += PI;
        }
        SqueezingResult {
            s_x: mean - radius,
            s_p: mean + radius,
            theta,
        }
    }

    /// Symplectic eigenvalues in ascending order. All are `>= 1` for a
    /// physical state and equal 1 for a pure state.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let k = self.basis.len();
        let eig = self.entries.clone().symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let root =
            &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
        let omega = DMatrix::from_fn(2 * k, 2 * k, |r, c| {
            if r < k && c == r + k {
                1.0
            } else if r >= k && c + k == r {
                -1.0
            } else {
                0.0
            }
        });
        let b = &root * omega * &root;
        let mut nu2: Vec<f64> = (b.transpose() * &b)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        nu2.sort_by(f64::total_cmp);
        nu2.iter().step_by(2).map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// Output covariance at normalized sideband frequency `omega`.
pub fn covariance(cfg: &OpoConfig, omega: f64) -> Result<QuadratureCovariance> {
    if cfg.gain.is_diagonal() {
        covariance_diagonal(cfg, omega)
    } else {
        covariance_dense(cfg, omega)
    }
}

fn covariance_diagonal(cfg: &OpoConfig, omega: f64) -> Result<QuadratureCovariance> {
    let basis = cfg.basis().clone();
    let k = basis.len();
    let eta = cfg.eta();
    let g = cfg.gain.entries();
    let mut v = DMatrix::zeros(2 * k, 2 * k);
    let mut residue: f64 = 0.0;
    let mut imaginary: f64 = 0.0;
    for (i, mode) in basis.iter() {
        let gi = C64::new(g[(i, i)], 0.0);
        let d = C64::new(cfg.detuning(mode.order()), 0.0);
        let diag = C64::new(1.0, -omega);
        let m = Matrix2::new(diag + gi, d, -d, diag - gi);
        let mi = m.try_inverse().ok_or(Error::Singular { omega })?;
        let x = mi * C64::new(2.0 * eta, 0.0) - Matrix2::identity();
        let block = mi * mi.adjoint() * C64::new(4.0 * eta * (1.0 - eta), 0.0) + x * x.adjoint();
        residue = residue.max((block - block.adjoint()).map(|z| z.norm()).max());
        imaginary = imaginary.max(block.map(|z| z.im.abs()).max());
        let re = block.map(|z| z.re);
        v[(i, i)] = re[(0, 0)];
        v[(i, k + i)] = 0.5 * (re[(0, 1)] + re[(1, 0)]);
        v[(k + i, i)] = v[(i, k + i)];
        v[(k + i, k + i)] = re[(1, 1)];
    }
    if residue > HERMITIAN_TOL {
        return Err(Error::ImaginaryResidue { residue });
    }
    Ok(QuadratureCovariance {
        basis,
        entries: v,
        imaginary,
    })
}

/// Covariance through a dense LU solve of the full system, whatever the
/// structure of the gain. [`covariance`] uses it for non-diagonal gain.
pub fn covariance_dense(cfg: &OpoConfig, omega: f64) -> Result<QuadratureCovariance> {
    let n = 2 * cfg.basis().len();
    let eta = cfg.eta();
    let m = system_matrix(cfg, omega);
    let mi = m.lu().try_inverse().ok_or(Error::Singular { omega })?;
    if mi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular { omega });
    }
    let id = DMatrix::<C64>::identity(n, n);
    let x = &mi * C64::new(2.0 * eta, 0.0) - id;
    let v = &mi * mi.adjoint() * C64::new(4.0 * eta * (1.0 - eta), 0.0) + &x * x.adjoint();
    let residue = (&v - v.adjoint())
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.norm()));
    if residue > HERMITIAN_TOL {
        return Err(Error::ImaginaryResidue { residue });
    }
    let imaginary = v.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    let re = v.map(|z| z.re);
    let re = (&re + re.transpose()) * 0.5;
    Ok(QuadratureCovariance {
        basis: cfg.basis().clone(),
        entries: re,
        imaginary,
    })
}

/// Uniform beam-splitter loss with transmission `eta_extra` on every mode.
pub fn apply_loss(v: &QuadratureCovariance, eta_extra: f64) -> Result<QuadratureCovariance> {
    if !(0.0..=1.0).contains(&eta_extra) {
        return Err(Error::domain("eta_extra", eta_extra, "0 <= eta_extra <= 1"));
    }
    let n = v.entries.nrows();
    Ok(QuadratureCovariance {
        basis: v.basis.clone(),
        entries: &v.entries * eta_extra + DMatrix::identity(n, n) * (1.0 - eta_extra),
        imaginary: v.imaginary * eta_extra,
    })
}

/// Squeezing level in dB, positive below vacuum.
pub fn to_db(variance: f64) -> f64 {
    -10.0 * variance.log10()
}
