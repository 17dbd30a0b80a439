//! Hermite-Gaussian mode mathematics.
//!
//! Every vector and matrix in this crate is indexed by a [`ModeBasis`]: the
//! modes `(m, n)` with `m + n <= N_max`, sorted by total order and then by
//! `m`. The fundamental mode always sits at index 0.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::GaussHermite;

/// Transverse orders of an HG mode: `m` along x, `n` along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub m: usize,
    pub n: usize,
}

impl ModeIndex {
    pub const fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }

    /// Total order `m + n`.
    pub const fn order(self) -> usize {
        self.m + self.n
    }

    /// The same mode with x and y exchanged.
    pub const fn transposed(self) -> Self {
        Self {
            m: self.n,
            n: self.m,
        }
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HG{}{}", self.m, self.n)
    }
}

/// Truncated HG basis with the canonical `(m + n, m)` ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeBasis {
    cutoff: usize,
    modes: Vec<ModeIndex>,
}

impl ModeBasis {
    pub fn new(cutoff: usize) -> Self {
        let modes = (0..=cutoff)
            .flat_map(|s| (0..=s).map(move |m| ModeIndex::new(m, s - m)))
            .collect();
        Self { cutoff, modes }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of modes, `(N_max + 1)(N_max + 2) / 2`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> ModeIndex {
        self.modes[i]
    }

    pub fn index_of(&self, mode: ModeIndex) -> Option<usize> {
        let s = mode.order();
        (s <= self.cutoff).then(|| s * (s + 1) / 2 + mode.m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, ModeIndex)> + '_ {
        self.modes.iter().copied().enumerate()
    }
}

/// A normalized HG mode of a given waist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HgMode {
    pub index: ModeIndex,
    pub waist: f64,
}

impl HgMode {
    pub fn new(m: usize, n: usize, waist: f64) -> Result<Self> {
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(Error::domain("waist", waist, "waist > 0"));
        }
        Ok(Self {
            index: ModeIndex::new(m, n),
            waist,
        })
    }

    pub fn amplitude(&self, x: f64, y: f64) -> f64 {
        hg_amplitude(self, x, y)
    }
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Scaled Hermite polynomials `H_k(x) / sqrt(2^k k!)` for `k = 0..=n`.
///
/// The scaling keeps the values O(1) near the Gaussian envelope, so mode
/// functions of order 100+ can be evaluated without overflow.
pub fn scaled_hermite_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x);
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// One-dimensional normalized HG function of order `m` and waist `w`.
pub fn hg_1d(m: usize, x: f64, w: f64) -> f64 {
    let t = std::f64::consts::SQRT_2 * x / w;
    let p = scaled_hermite_all(m, t)[m];
    (2.0 / PI).powf(0.25) / w.sqrt() * p * (-(x * x) / (w * w)).exp()
}

/// Value of the normalized two-dimensional HG mode at `(x, y)`.
pub fn hg_amplitude(mode: &HgMode, x: f64, y: f64) -> f64 {
    hg_1d(mode.index.m, x, mode.waist) * hg_1d(mode.index.n, y, mode.waist)
}

const OVERLAP_TOL: f64 = 1e-10;
const MAX_OVERLAP_NODES: usize = 4096;

/// `∫ u_a(x; w_a) u_b(x; w_b) dx` by Gauss-Hermite quadrature with automatic
/// node doubling.
pub fn overlap_1d(a: usize, wa: f64, b: usize, wb: f64) -> Result<f64> {
    let mut nodes = 2 * a.max(b) + 32;
    let mut last = overlap_1d_fixed(a, wa, b, wb, nodes);
    loop {
        let doubled = nodes * 2;
        if doubled > MAX_OVERLAP_NODES {
            return Err(Error::QuadratureNonConvergence {
                nodes,
                change: f64::NAN,
            });
        }
        let next = overlap_1d_fixed(a, wa, b, wb, doubled);
        let change = (next - last).abs();
        if change < OVERLAP_TOL {
            return Ok(next);
        }
        if doubled * 2 > MAX_OVERLAP_NODES {
            return Err(Error::QuadratureNonConvergence {
                nodes: doubled,
                change,
            });
        }
        nodes = doubled;
        last = next;
    }
}

fn overlap_1d_fixed(a: usize, wa: f64, b: usize, wb: f64, nodes: usize) -> f64 {
    // both Gaussians are absorbed into the weight: x = s t
    let s = 1.0 / (1.0 / (wa * wa) + 1.0 / (wb * wb)).sqrt();
    let norm = (2.0 / PI).sqrt() / (wa * wb).sqrt();
    let rule = GaussHermite::cached(nodes);
    let sum: f64 = rule
        .iter()
        .map(|(t, w)| {
            let x = s * t;
            let pa = scaled_hermite_all(a, std::f64::consts::SQRT_2 * x / wa)[a];
            let pb = scaled_hermite_all(b, std::f64::consts::SQRT_2 * x / wb)[b];
            w * pa * pb
        })
        .sum();
    s * norm * sum
}

/// `∫∫ ψ_a ψ_b dx dy` for two modes centred on a common frame.
///
/// The tensor-product quadrature factorizes into an x and a y rule because
/// both modes are separable.
pub fn overlap(a: &HgMode, b: &HgMode) -> Result<f64> {
    let ox = overlap_1d(a.index.m, a.waist, b.index.m, b.waist)?;
    let oy = overlap_1d(a.index.n, a.waist, b.index.n, b.waist)?;
    Ok(ox * oy)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Closed-form one-dimensional overlap `<u_m(w_c) | u_m'(w_H)>` with
/// `r = ln(w_H / w_c)`.
pub fn basis_change_1d_closed(m: usize, mp: usize, r: f64) -> f64 {
    if (m + mp) % 2 == 1 {
        return 0.0;
    }
    // j may be negative when the target order is lower than the source order
    let j = (mp as i64 - m as i64) / 2;
    let (sh, ch, th) = (r.sinh(), r.cosh(), r.tanh());
    let k_min = (-j).max(0) as usize;
    let mut sum = 0.0;
    for k in k_min..=m / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kj = (k as i64 + j) as usize;
        let denom = factorial(k) * factorial(m - 2 * k) * factorial(kj);
        // (sinh r / 2)^{2k} (tanh r / 2)^j, regrouped so no negative power of
        // tanh r appears
        let powers = if j >= 0 {
            (sh / 2.0).powi(2 * k as i32) * (th / 2.0).powi(j as i32)
        } else {
            (sh / 2.0).powi(2 * k as i32 + j as i32) * ch.powi(-j as i32)
        };
        sum += sign * powers / denom;
    }
    let parity = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    parity * (factorial(m) * factorial(mp)).sqrt() / ch.powf(m as f64 + 0.5) * sum
}

/// Change of basis from Hamiltonian eigenmodes (waist `w_H`) to cavity
/// modes (waist `w_c`).
///
/// Row index is the cavity mode, column index the Hamiltonian mode, both in
/// [`ModeBasis`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisChangeMatrix {
    pub source_waist: f64,
    pub target_waist: f64,
    pub entries: DMatrix<f64>,
    /// Number of one-dimensional factors where the closed form disagreed with
    /// quadrature and the quadrature value was used instead.
    pub oracle_substitutions: usize,
}

/// Tolerance between the closed form and the quadrature oracle.
pub const BASIS_CHANGE_TOL: f64 = 1e-8;

pub fn basis_change(w_c: f64, w_h: f64, basis: &ModeBasis) -> Result<BasisChangeMatrix> {
    if !(w_c > 0.0) {
        return Err(Error::domain("w_c", w_c, "w_c > 0"));
    }
    if !(w_h > 0.0) {
        return Err(Error::domain("w_H", w_h, "w_H > 0"));
    }
    let n = basis.cutoff();
    let r = (w_h / w_c).ln();
    let mut table = vec![vec![0.0; n + 1]; n + 1];
    let mut substitutions = 0;
    for (m, row) in table.iter_mut().enumerate() {
        for (mp, slot) in row.iter_mut().enumerate() {
            if (m + mp) % 2 == 1 {
                continue;
            }
            let closed = basis_change_1d_closed(m, mp, r);
            let oracle = overlap_1d(m, w_c, mp, w_h)?;
            *slot = if (closed - oracle).abs() < BASIS_CHANGE_TOL {
                closed
            } else {
                substitutions += 1;
                oracle
            };
        }
    }
    let k = basis.len();
    let entries = DMatrix::from_fn(k, k, |i, j| {
        let (a, b) = (basis.mode(i), basis.mode(j));
        table[a.m][b.m] * table[a.n][b.n]
    });
    Ok(BasisChangeMatrix {
        source_waist: w_h,
        target_waist: w_c,
        entries,
        oracle_substitutions: substitutions,
    })
}
