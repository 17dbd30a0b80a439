//! Parametric down-conversion kernels and the gain matrices built from them.
//!
//! Two kernels are supported. The Gaussian approximation yields a diagonal
//! gain `g00 μ^(m+n)` in closed form. The exact kernel with a sinc
//! phase-matching factor is projected onto HG pairs numerically in momentum
//! space.
//!
//! Momentum space uses the convention `ψ(q) ∝ exp(-q²/W²)` with `W = 2/w`
//! for a mode of real-space waist `w`. Pair coordinates are rotated to
//! `P = (q_s + q_i)/√2` and `M = (q_s - q_i)/√2` per axis. The pump envelope
//! then depends on `P` alone and the phase-matching factor on `M` alone, so
//! the four-dimensional projection factorizes into two Gauss-Hermite sums
//! per axis coupled only through the phase-matching function.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modes::{
    basis_change, basis_change_1d_closed, scaled_hermite_all, ModeBasis, ModeIndex,
};
use crate::numerics::{brent_root, golden_section_max, GaussHermite};

/// `μ = (1 - √ξ)/(1 + √ξ)`.
pub fn mu_from_xi(xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let s = xi.sqrt();
    Ok((1.0 - s) / (1.0 + s))
}

/// Schmidt number of the Gaussian kernel, `(√ξ + 1/√ξ)²/4`.
pub fn schmidt_number(xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::domain("xi", xi, "xi > 0"));
    }
    let s = xi.sqrt();
    Ok((s + 1.0 / s).powi(2) / 4.0)
}

fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain("xi", xi, "0 < xi <= 1"))
    }
}

/// Waist of the Gaussian-kernel eigenmodes, `√2 ξ^(1/4) w_p`.
pub fn hamiltonian_waist(xi: f64, pump_waist: f64) -> f64 {
    SQRT_2 * xi.powf(0.25) * pump_waist
}

/// Real symmetric matrix of normalized parametric gains over a mode basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    basis: ModeBasis,
    entries: DMatrix<f64>,
    scale: f64,
}

impl GainMatrix {
    /// Wraps a user-supplied matrix. `scale` is the nominal fundamental gain.
    pub fn from_entries(basis: ModeBasis, entries: DMatrix<f64>, scale: f64) -> Result<Self> {
        let k = basis.len();
        if entries.nrows() != k || entries.ncols() != k {
            return Err(Error::BasisMismatch {
                covariance: k,
                coupling: entries.nrows(),
            });
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > 1e-12 * entries.amax().max(1.0) {
            return Err(Error::domain("gain asymmetry", asym, "symmetric matrix"));
        }
        Ok(Self {
            basis,
            entries,
            scale,
        })
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Target fundamental gain the matrix was normalized to.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn get(&self, a: ModeIndex, b: ModeIndex) -> Option<f64> {
        Some(self.entries[(self.basis.index_of(a)?, self.basis.index_of(b)?)])
    }

    pub fn is_diagonal(&self) -> bool {
        let k = self.entries.nrows();
        (0..k).all(|i| (0..k).all(|j| i == j || self.entries[(i, j)] == 0.0))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.is_diagonal() {
            return self.entries.diagonal().iter().copied().collect();
        }
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    }

    /// Largest eigenvalue magnitude, which equals the operator 2-norm for a
    /// symmetric matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `(Σλ²)² / Σλ⁴` over the eigenvalues, i.e. the effective number of
    /// modes of the kernel restricted to this basis.
    pub fn schmidt_number(&self) -> f64 {
        truncated_schmidt(&self.entries)
    }
}

fn truncated_schmidt(g: &DMatrix<f64>) -> f64 {
    let f2 = g.norm_squared();
    let g2 = g * g;
    f2 * f2 / g2.norm_squared()
}

/// Diagonal gain `g00 μ^(m+n)` of the Gaussian kernel at matched waists.
pub fn gaussian_gain(g00: f64, xi: f64, basis: &ModeBasis) -> Result<GainMatrix> {
    check_gain(g00)?;
    let mu = mu_from_xi(xi)?;
    let diag: Vec<f64> = basis
        .modes()
        .iter()
        .map(|mode| g00 * mu.powi(mode.order() as i32))
        .collect();
    Ok(GainMatrix {
        basis: basis.clone(),
        entries: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)),
        scale: g00,
    })
}

fn check_gain(g00: f64) -> Result<()> {
    if !(g00 >= 0.0 && g00.is_finite()) {
        return Err(Error::domain("g00", g00, "0 <= g00 < 1"));
    }
    if g00 >= 1.0 {
        return Err(Error::AboveThreshold {
            gain: g00,
            limit: 1.0,
        });
    }
    Ok(())
}

/// `sin(x)/x` with a series branch near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Longitudinal phase-matching profile of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PhaseMatching {
    /// Exact `sinc(x)`.
    #[default]
    Sinc,
    /// Surrogate `exp(-alpha x)` with the same argument `x` as the sinc. It is
    /// Gaussian in the transverse momenta and reproduces the Gaussian kernel
    /// when `alpha` equals the kernel's own `alpha`.
    Gaussian { alpha: f64 },
}

impl PhaseMatching {
    fn eval(self, x: f64) -> f64 {
        match self {
            Self::Sinc => sinc(x),
            Self::Gaussian { alpha } => (-alpha * x).exp(),
        }
    }
}

/// Parameters of the exact kernel
/// `exp(-(w_p²/4)|q_s+q_i|²) sinc((w_p²/4)(ξ/α)|q_s-q_i|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincKernelParams {
    pub xi: f64,
    pub alpha: f64,
    pub pump_waist: f64,
    pub phase_matching: PhaseMatching,
}

impl SincKernelParams {
    pub fn new(xi: f64, alpha: f64, pump_waist: f64) -> Result<Self> {
        let p = Self {
            xi,
            alpha,
            pump_waist,
            phase_matching: PhaseMatching::Sinc,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_phase_matching(mut self, phase_matching: PhaseMatching) -> Self {
        self.phase_matching = phase_matching;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::domain("xi", self.xi, "xi > 0"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain("alpha", self.alpha, "alpha > 0"));
        }
        if !(self.pump_waist > 0.0 && self.pump_waist.is_finite()) {
            return Err(Error::domain("pump_waist", self.pump_waist, "w_p > 0"));
        }
        if let PhaseMatching::Gaussian { alpha } = self.phase_matching {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::domain("surrogate alpha", alpha, "alpha > 0"));
            }
        }
        Ok(())
    }

    fn pump_coeff(&self) -> f64 {
        self.pump_waist * self.pump_waist / 4.0
    }

    fn phase_coeff(&self) -> f64 {
        self.pump_coeff() * self.xi / self.alpha
    }

    /// Squared Hilbert-Schmidt norm of the kernel over the full plane.
    pub fn hilbert_schmidt_norm_sq(&self) -> f64 {
        let (a, c) = (self.pump_coeff(), self.phase_coeff());
        match self.phase_matching {
            // ∫₀^∞ sinc²(u) du = π/2
            PhaseMatching::Sinc => PI.powi(3) / (16.0 * a * c),
            PhaseMatching::Gaussian { alpha } => PI * PI / (16.0 * a * alpha * c),
        }
    }
}

/// Kernel value for transverse momenta `q_s` and `q_i`.
pub fn sinc_kernel(q_s: [f64; 2], q_i: [f64; 2], p: &SincKernelParams) -> f64 {
    let sum2 = (q_s[0] + q_i[0]).powi(2) + (q_s[1] + q_i[1]).powi(2);
    let diff2 = (q_s[0] - q_i[0]).powi(2) + (q_s[1] - q_i[1]).powi(2);
    (-p.pump_coeff() * sum2).exp() * p.phase_matching.eval(p.phase_coeff() * diff2)
}

/// Projection `∫ K(q_s, q_i) ψ_a(q_s) ψ_b(q_i)` onto real-space HG modes of
/// waist `basis_waist`, using `nodes` Gauss-Hermite points per rotated axis.
/// The Fourier phases `(-i)^(m+n)` of the modes are folded into the result.
pub fn kernel_projection(
    p: &SincKernelParams,
    basis_waist: f64,
    basis: &ModeBasis,
    nodes: usize,
) -> DMatrix<f64> {
    let n_max = basis.cutoff();
    let l = n_max + 1;
    let big_w = 2.0 / basis_waist;
    let a = p.pump_coeff();
    let c = p.phase_coeff();
    let rule = GaussHermite::cached(nodes);
    let sigma_p = 1.0 / (1.0 / (big_w * big_w) + 2.0 * a).sqrt();
    let norm_sq = (2.0 / PI).sqrt() / big_w;

    // C[k][(m, m')] = σ_P Σ_j w_j c_W² p_m(√2 q_s/W) p_m'(√2 q_i/W), where
    // √2 q_s/W = (P + M)/W
    let rows: Vec<Vec<f64>> = rule
        .nodes()
        .par_iter()
        .map(|&tk| {
            let mk = big_w * tk;
            let mut row = vec![0.0; l * l];
            for (tj, wj) in rule.iter() {
                let pj = sigma_p * tj;
                let hs = scaled_hermite_all(n_max, (pj + mk) / big_w);
                let hi = scaled_hermite_all(n_max, (pj - mk) / big_w);
                let weight = wj * sigma_p * norm_sq;
                for (m, &hm) in hs.iter().enumerate() {
                    let whm = weight * hm;
                    let base = m * l;
                    for (mp, &hmp) in hi.iter().enumerate() {
                        row[base + mp] += whm * hmp;
                    }
                }
            }
            row
        })
        .collect();
    let cmat = DMatrix::from_fn(nodes, l * l, |k, idx| rows[k][idx]);

    let taus = rule.nodes();
    let ws = rule.weights();
    let s = DMatrix::from_fn(nodes, nodes, |k, kp| {
        let x = 2.0 * c * big_w * big_w * (taus[k] * taus[k] + taus[kp] * taus[kp]);
        big_w * big_w * ws[k] * ws[kp] * p.phase_matching.eval(x)
    });
    let f = cmat.transpose() * (s * &cmat);

    let k = basis.len();
    let mut g = DMatrix::zeros(k, k);
    for (i, am) in basis.iter() {
        for (j, bm) in basis.iter() {
            if (am.m + bm.m) % 2 == 1 || (am.n + bm.n) % 2 == 1 {
                continue;
            }
            let quarter = (am.order() + bm.order()) / 2;
            let sign = if quarter % 2 == 0 { 1.0 } else { -1.0 };
            g[(i, j)] = sign * f[(am.m * l + bm.m, am.n * l + bm.n)];
        }
    }
    (&g + g.transpose()) * 0.5
}

const PROJECTION_TOL: f64 = 1e-9;
const MAX_PROJECTION_NODES: usize = 1024;

/// [`kernel_projection`] with node doubling until the largest entry change is
/// below `1e-9` relative. Returns the matrix and the node count used.
pub fn converged_projection(
    p: &SincKernelParams,
    basis_waist: f64,
    basis: &ModeBasis,
) -> Result<(DMatrix<f64>, usize)> {
    p.validate()?;
    if !(basis_waist > 0.0) {
        return Err(Error::domain("basis waist", basis_waist, "w > 0"));
    }
    let mut nodes = 2 * basis.cutoff() + 40;
    let mut last = kernel_projection(p, basis_waist, basis, nodes);
    loop {
        let next_nodes = 2 * nodes;
        let next = kernel_projection(p, basis_waist, basis, next_nodes);
        let change = (&next - &last).amax() / next.amax().max(f64::MIN_POSITIVE);
        if change < PROJECTION_TOL {
            return Ok((next, next_nodes));
        }
        if 2 * next_nodes > MAX_PROJECTION_NODES {
            return Err(Error::QuadratureNonConvergence {
                nodes: next_nodes,
                change,
            });
        }
        nodes = next_nodes;
        last = next;
    }
}

/// How a numerically projected gain matrix is scaled to the target gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainNormalization {
    /// The eigenvalue of largest magnitude becomes `g_scale`.
    #[default]
    LargestEigenvalue,
    /// The `(00, 00)` entry becomes `g_scale`.
    FundamentalEntry,
}

impl std::str::FromStr for GainNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigenvalue" => Ok(Self::LargestEigenvalue),
            "fundamental" => Ok(Self::FundamentalEntry),
            other => Err(Error::Config(format!(
                "unknown gain normalization `{other}` (expected eigenvalue or fundamental)"
            ))),
        }
    }
}

fn normalize(
    raw: DMatrix<f64>,
    basis: &ModeBasis,
    g_scale: f64,
    normalization: GainNormalization,
) -> Result<GainMatrix> {
    check_gain(g_scale)?;
    let reference = match normalization {
        GainNormalization::LargestEigenvalue => raw
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(
                0.0,
                |best: f64, v| if v.abs() > best.abs() { v } else { best },
            ),
        GainNormalization::FundamentalEntry => raw[(0, 0)],
    };
    if reference == 0.0 {
        return Err(Error::domain("gain reference", reference, "non-zero"));
    }
    let entries = raw * (g_scale / reference);
    let gain = GainMatrix {
        basis: basis.clone(),
        entries,
        scale: g_scale,
    };
    let norm = gain.spectral_norm();
    if norm >= 1.0 {
        return Err(Error::AboveThreshold {
            gain: norm,
            limit: 1.0,
        });
    }
    Ok(gain)
}

/// Gain matrix of the exact kernel in the cavity basis of waist
/// `cavity_waist`.
pub fn sinc_gain(
    p: &SincKernelParams,
    cavity_waist: f64,
    basis: &ModeBasis,
    g_scale: f64,
    normalization: GainNormalization,
) -> Result<GainMatrix> {
    let (raw, _) = converged_projection(p, cavity_waist, basis)?;
    normalize(raw, basis, g_scale, normalization)
}

/// Gaussian-kernel gain whose eigenmodes have waist `w_h` while the cavity
/// modes have waist `w_c`: `U diag(g00 μ^(m+n)) Uᵀ`, then rescaled.
pub fn waist_mismatched_gain(
    g00: f64,
    xi: f64,
    w_c: f64,
    w_h: f64,
    basis: &ModeBasis,
    normalization: GainNormalization,
) -> Result<GainMatrix> {
    let diag = gaussian_gain(g00, xi, basis)?;
    let u = basis_change(w_c, w_h, basis)?.entries;
    let raw = &u * diag.entries() * u.transpose();
    let raw = (&raw + raw.transpose()) * 0.5;
    normalize(raw, basis, g00, normalization)
}

/// Settings for [`fit_alpha_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaFitOptions {
    /// Basis cutoff in which the kernel's Schmidt number is evaluated.
    pub cutoff: usize,
    pub phase_matching: PhaseMatching,
    pub bracket: (f64, f64),
    pub xtol: f64,
}

impl Default for AlphaFitOptions {
    fn default() -> Self {
        Self {
            cutoff: 20,
            phase_matching: PhaseMatching::Sinc,
            bracket: (0.1, 1.0),
            xtol: 1e-4,
        }
    }
}

/// Schmidt number of the kernel restricted to the HG basis of the matching
/// Gaussian eigenmodes, with a fixed node count.
fn basis_schmidt(p: &SincKernelParams, basis: &ModeBasis, nodes: usize) -> f64 {
    let w_h = hamiltonian_waist(p.xi, p.pump_waist);
    truncated_schmidt(&kernel_projection(p, w_h, basis, nodes))
}

/// Schmidt number of the kernel in a truncated basis, with convergence
/// checked quadrature.
pub fn kernel_schmidt_number(p: &SincKernelParams, cutoff: usize) -> Result<f64> {
    let basis = ModeBasis::new(cutoff);
    let w_h = hamiltonian_waist(p.xi, p.pump_waist);
    let (g, _) = converged_projection(p, w_h, &basis)?;
    Ok(truncated_schmidt(&g))
}

/// Schmidt number using the exact Hilbert-Schmidt norm for `Σλ²` and the
/// truncated basis only for `Σλ⁴`, which converges much faster.
pub fn kernel_schmidt_number_untruncated(p: &SincKernelParams, cutoff: usize) -> Result<f64> {
    let basis = ModeBasis::new(cutoff);
    let w_h = hamiltonian_waist(p.xi, p.pump_waist);
    let (g, _) = converged_projection(p, w_h, &basis)?;
    let hs = p.hilbert_schmidt_norm_sq();
    Ok(hs * hs / (&g * &g).norm_squared())
}

/// The kernel's `α` such that its Schmidt number matches the Gaussian
/// value for the same `ξ`, using the default options.
pub fn fit_alpha(xi: f64) -> Result<f64> {
    fit_alpha_with(xi, &AlphaFitOptions::default())
}

pub fn fit_alpha_with(xi: f64, opts: &AlphaFitOptions) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::domain("xi", xi, "0 < xi < 1"));
    }
    let target = schmidt_number(xi)?;
    let basis = ModeBasis::new(opts.cutoff);
    let params = |alpha: f64| SincKernelParams {
        xi,
        alpha,
        pump_waist: 1.0,
        phase_matching: opts.phase_matching,
    };
    // the narrowest phase-matching profile sits at the low end of the bracket
    let probe = params(opts.bracket.0);
    let (_, nodes) = converged_projection(&probe, hamiltonian_waist(xi, 1.0), &basis)?;
    brent_root(
        |alpha| basis_schmidt(&params(alpha), &basis, nodes) - target,
        opts.bracket.0,
        opts.bracket.1,
        opts.xtol,
    )
}

/// Result of [`fit_pump_waist`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpWaistFit {
    pub pump_waist: f64,
    /// `|⟨first eigenmode | HG00(w_c)⟩|²` at the optimum.
    pub overlap: f64,
}

/// Basis cutoff used to represent the kernel's first eigenmode.
pub const PUMP_FIT_CUTOFF: usize = 20;

/// Pump waist maximizing the overlap between the kernel's first eigenmode
/// and the cavity fundamental mode. `p.pump_waist` is ignored.
pub fn fit_pump_waist(p: &SincKernelParams, cavity_waist: f64) -> Result<PumpWaistFit> {
    fit_pump_waist_with(p, cavity_waist, PUMP_FIT_CUTOFF)
}

pub fn fit_pump_waist_with(
    p: &SincKernelParams,
    cavity_waist: f64,
    cutoff: usize,
) -> Result<PumpWaistFit> {
    if !(cavity_waist > 0.0) {
        return Err(Error::domain("cavity_waist", cavity_waist, "w_c > 0"));
    }
    // the kernel scales with w_p, so its eigenmode is computed once at w_p = 1
    let unit = SincKernelParams {
        pump_waist: 1.0,
        ..*p
    };
    unit.validate()?;
    let basis = ModeBasis::new(cutoff);
    let w_h1 = hamiltonian_waist(p.xi, 1.0);
    let (g, _) = converged_projection(&unit, w_h1, &basis)?;
    let eig = g.symmetric_eigen();
    let top = (0..eig.eigenvalues.len())
        .max_by(|&i, &j| {
            eig.eigenvalues[i]
                .abs()
                .total_cmp(&eig.eigenvalues[j].abs())
        })
        .expect("non-empty basis");
    let v = eig.eigenvectors.column(top).into_owned();

    let overlap = |log_ratio: f64| {
        let r = (w_h1 * log_ratio.exp()).ln();
        let amp: f64 = basis
            .iter()
            .map(|(i, mode)| {
                v[i] * basis_change_1d_closed(0, mode.m, r) * basis_change_1d_closed(0, mode.n, r)
            })
            .sum();
        amp * amp
    };
    let (log_ratio, best) = golden_section_max(overlap, 0.1f64.ln(), 10f64.ln(), 1e-4);
    Ok(PumpWaistFit {
        pump_waist: log_ratio.exp() * cavity_waist,
        overlap: best,
    })
}
