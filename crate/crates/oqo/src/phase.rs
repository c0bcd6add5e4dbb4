//! Operational phase: propensity from the radially integrated Q function,
//! phasor basis, trig operators, and the windowed phase operator.

use crate::error::{OqoError, Result};
use crate::fock::{cplx, expectation, hermitian_spectrum, DensityState, Operator};
use crate::measurement::{Grid, PropensityGrid};
use crate::special::{gauss_laguerre, ln_gamma};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Phasor Ê⁽ⁿ⁾ (n ≥ 0): nonzero only on the n-th superdiagonal with
/// ⟨m|Ê⁽ⁿ⁾|m+n⟩ = Γ(m+n/2+1)/√(Γ(m+1)Γ(m+n+1)), evaluated in log space.
pub fn phasor(n: usize, dim: usize) -> Result<Operator> {
    if n >= dim {
        return Err(OqoError::InvalidArgument(format!(
            "phasor order {n} needs dim > {n}"
        )));
    }
    let mut e = Operator::zeros(dim, dim);
    for m in 0..dim - n {
        let (mf, nf) = (m as f64, n as f64);
        let ln = ln_gamma(mf + nf / 2.0 + 1.0)?
            - 0.5 * (ln_gamma(mf + 1.0)? + ln_gamma(mf + nf + 1.0)?);
        e[(m, m + n)] = cplx(ln.exp(), 0.0);
    }
    Ok(e)
}

// Minimal double-double helpers for one badly cancelling series below.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn dd_add(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(x.0, y.0);
    two_sum(s, e + x.1 + y.1)
}

fn dd_scale(x: (f64, f64), num: f64, den: f64) -> (f64, f64) {
    // x * num / den with num, den exactly representable integers
    let p = x.0 * num;
    let e = x.0.mul_add(num, -p) + x.1 * num;
    let q0 = p / den;
    let r = q0.mul_add(-den, p) + e;
    two_sum(q0, r / den)
}

/// The same operator through its normally ordered confluent form:
/// (n/2)!/n! · :M(n/2, n+1, −b̂†b̂): · b̂ⁿ, with :(b̂†b̂)ᵏ: acting as the
/// falling factorial n̂(n̂−1)⋯(n̂−k+1). The alternating series cancels down
/// by ~Σ|tₖ| ≈ e^{2√m}, so terms are carried in double-double precision
/// with exact integer ratios; plain f64 compensated summation floors near
/// 1e-5 by row 50.
pub fn phasor_hypergeometric(n: usize, dim: usize) -> Result<Operator> {
    if n >= dim {
        return Err(OqoError::InvalidArgument(format!(
            "phasor order {n} needs dim > {n}"
        )));
    }
    if n > 8 || dim > 120 {
        return Err(OqoError::NonConvergence(format!(
            "normally ordered series is ill-conditioned beyond n = 8, \
             dim = 120 (requested n = {n}, dim = {dim})"
        )));
    }
    let nf = n as f64;
    let prefactor = (ln_gamma(nf / 2.0 + 1.0)? - ln_gamma(nf + 1.0)?).exp();
    let mut e = Operator::zeros(dim, dim);
    for m in 0..dim - n {
        let mf = m as f64;
        // ⟨m|b̂ⁿ|m+n⟩ = √((m+n)!/m!)
        let bn = (0.5 * (ln_gamma(mf + nf + 1.0)? - ln_gamma(mf + 1.0)?)).exp();
        // Σ_k (n/2)_k/((n+1)_k k!) · (−1)^k · m(m−1)⋯(m−k+1)
        let mut term = (1.0_f64, 0.0_f64);
        let mut sum = (0.0_f64, 0.0_f64);
        for k in 0..=m {
            sum = dd_add(sum, term);
            let kf = k as f64;
            // ratio −(m−k)(n+2k)/(2(n+1+k)(k+1)); both factors are exact
            let num = -(mf - kf) * (nf + 2.0 * kf);
            let den = 2.0 * (nf + 1.0 + kf) * (kf + 1.0);
            term = dd_scale(term, num, den);
        }
        e[(m, m + n)] = cplx(prefactor * bn * (sum.0 + sum.1), 0.0);
    }
    Ok(e)
}

/// Phasors for |n| ≤ n_max; negative orders are the adjoints.
pub struct PhasorSet {
    pub dim: usize,
    pub n_max: usize,
    positive: Vec<Operator>,
}

impl PhasorSet {
    pub fn new(dim: usize, n_max: usize) -> Result<Self> {
        if n_max >= dim {
            return Err(OqoError::InvalidArgument(format!(
                "n_max = {n_max} needs dim > {n_max}"
            )));
        }
        let positive = (0..=n_max)
            .map(|n| phasor(n, dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, n_max, positive })
    }

    pub fn op(&self, n: i64) -> Result<Operator> {
        let a = n.unsigned_abs() as usize;
        if a > self.n_max {
            return Err(OqoError::InvalidArgument(format!(
                "phasor order {n} exceeds n_max = {}",
                self.n_max
            )));
        }
        Ok(if n >= 0 {
            self.positive[a].clone()
        } else {
            self.positive[a].adjoint()
        })
    }
}

/// Fourier coefficients c_k of 2π·Pr(φ): c_k = Σ_m ρ_{m,m+k}·r(2m+k)/
/// √(m!(m+k)!), with r(j) the j/2-th radial moment of e^{−I}. Only k ≥ 0
/// is stored; c_{−k} = conj(c_k).
fn propensity_coeffs(
    rho: &DensityState,
    radial: &dyn Fn(usize) -> Result<f64>,
) -> Result<Vec<Complex64>> {
    let dim = rho.dim();
    let m = rho.matrix();
    let mut ln_fact = Vec::with_capacity(dim);
    for j in 0..dim {
        ln_fact.push(ln_gamma(j as f64 + 1.0)?);
    }
    let mut coeffs = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut c = Complex64::new(0.0, 0.0);
        for i in 0..dim - k {
            let w = radial(2 * i + k)? * (-0.5 * (ln_fact[i] + ln_fact[i + k])).exp();
            c += m[(i, i + k)] * w;
        }
        coeffs.push(c);
    }
    Ok(coeffs)
}

fn grid_from_coeffs(coeffs: &[Complex64], phi0: f64, n_phi: usize) -> PropensityGrid {
    let grid = Grid::periodic(phi0, n_phi);
    let values = (0..n_phi)
        .map(|j| {
            let phi = match &grid {
                Grid::OneD { points, .. } => points[j],
                _ => unreachable!(),
            };
            let mut s = coeffs[0].re;
            for (k, c) in coeffs.iter().enumerate().skip(1) {
                s += 2.0 * (c * Complex64::from_polar(1.0, k as f64 * phi)).re;
            }
            s / TAU
        })
        .collect();
    PropensityGrid { grid, values }
}

/// Phase propensity on [phi0, phi0+2π): the radial integral of the Q
/// function is carried out analytically, leaving a Fourier series whose
/// coefficients are the phasor expectations.
pub fn phase_propensity_window(
    rho: &DensityState,
    phi0: f64,
    n_phi: usize,
) -> Result<PropensityGrid> {
    if n_phi == 0 {
        return Err(OqoError::InvalidArgument("n_phi = 0".into()));
    }
    let coeffs = propensity_coeffs(rho, &|j| Ok(ln_gamma(j as f64 / 2.0 + 1.0)?.exp()))?;
    Ok(grid_from_coeffs(&coeffs, phi0, n_phi))
}

/// Phase propensity on the default window (−π, π].
pub fn phase_propensity(rho: &DensityState, n_phi: usize) -> Result<PropensityGrid> {
    phase_propensity_window(rho, -PI, n_phi)
}

/// Independent oracle: the radial moments ∫₀^∞ I^{j/2}e^{−I}dI are done by
/// 128-node Gauss–Laguerre quadrature instead of the gamma function —
/// exact for every power that occurs, splitting even (weight α = 0) and
/// odd (α = ½) half-powers.
pub fn phase_propensity_quadrature(
    rho: &DensityState,
    phi0: f64,
    n_phi: usize,
    nodes: usize,
) -> Result<PropensityGrid> {
    let (t0, w0) = gauss_laguerre(nodes, 0.0)?;
    let (t1, w1) = gauss_laguerre(nodes, 0.5)?;
    let radial = move |j: usize| -> Result<f64> {
        let s: f64 = if j % 2 == 0 {
            t0.iter().zip(&w0).map(|(t, w)| w * t.powi(j as i32 / 2)).sum()
        } else {
            t1.iter().zip(&w1).map(|(t, w)| w * t.powi((j as i32 - 1) / 2)).sum()
        };
        Ok(s)
    };
    let coeffs = propensity_coeffs(rho, &radial)?;
    Ok(grid_from_coeffs(&coeffs, phi0, n_phi))
}

/// ∮ e^{inφ} Pr(φ) dφ by the rectangle rule, spectrally exact for the
/// band-limited propensities produced here whenever the grid resolves
/// band + |n|.
pub fn circular_moment(pr: &PropensityGrid, n: i64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..pr.grid.len() {
        let phi = pr.grid.point(i)[0];
        s += Complex64::from_polar(pr.grid.weight(i) * pr.values[i], n as f64 * phi);
    }
    s
}

/// Ĝ_F = Σ_{|n| ≤ n_max} c_n Ê⁽ⁿ⁾ from the Fourier coefficients of a
/// periodic classical target g(φ); exact in expectation when g is a trig
/// polynomial the grid resolves.
pub fn periodic_oqo(
    coeffs: &[(i64, Complex64)],
    dim: usize,
    hermitian: bool,
) -> Result<Operator> {
    if hermitian {
        for &(n, c) in coeffs {
            let partner = coeffs
                .iter()
                .find(|&&(m, _)| m == -n)
                .map(|&(_, c)| c)
                .unwrap_or_else(|| Complex64::new(0.0, 0.0));
            if (partner - c.conj()).norm() > 1e-12 {
                return Err(OqoError::InvalidArgument(format!(
                    "hermitean target needs c(-n) = conj(c(n)); violated at n = {n}"
                )));
            }
        }
    }
    let n_top = coeffs
        .iter()
        .map(|&(n, _)| n.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let set = PhasorSet::new(dim, n_top.min(dim - 1))?;
    let mut g = Operator::zeros(dim, dim);
    for &(n, c) in coeffs {
        if n.unsigned_abs() as usize >= dim {
            continue; // Ê⁽ⁿ⁾ = 0 beyond the truncation
        }
        g += set.op(n)? * c;
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    None,
    Cesaro,
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseOpConfig {
    pub phi0: f64,
    pub n_max: usize,
    pub smoothing: Smoothing,
}

impl Default for PhaseOpConfig {
    fn default() -> Self {
        Self { phi0: -PI, n_max: 400, smoothing: Smoothing::None }
    }
}

/// Windowed phase operator
/// Φ̂_F = (φ₀+π)·1 + Σ_{n≥1} w_n (i/n)(e^{−inφ₀}Ê⁽ⁿ⁾ − e^{inφ₀}Ê⁽⁻ⁿ⁾),
/// the sawtooth Fourier series capped at n_max; w_n is 1 or the Cesàro
/// factor 1 − n/(n_max+1). Hermitean by construction.
pub fn phase_operator(cfg: &PhaseOpConfig, dim: usize) -> Result<Operator> {
    if cfg.n_max < 1 {
        return Err(OqoError::InvalidArgument("n_max must be ≥ 1".into()));
    }
    let mut coeffs = Vec::with_capacity(2 * cfg.n_max + 1);
    coeffs.push((0_i64, cplx(cfg.phi0 + PI, 0.0)));
    for n in 1..=cfg.n_max.min(dim - 1) {
        let w = match cfg.smoothing {
            Smoothing::None => 1.0,
            Smoothing::Cesaro => 1.0 - n as f64 / (cfg.n_max as f64 + 1.0),
        };
        let c = Complex64::i() * Complex64::from_polar(w / n as f64, -(n as f64) * cfg.phi0);
        coeffs.push((n as i64, c));
        coeffs.push((-(n as i64), c.conj()));
    }
    periodic_oqo(&coeffs, dim, true)
}

#[derive(Debug, Clone)]
pub struct PhaseSpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Operator,
    pub out_of_window_excess: f64,
    pub max_residual: f64,
}

/// Diagonalize Φ̂_F and report how far the spectrum leaks out of the
/// window [φ₀, φ₀+2π].
pub fn phase_spectrum_report(cfg: &PhaseOpConfig, dim: usize) -> Result<PhaseSpectrumReport> {
    let op = phase_operator(cfg, dim)?;
    let (eigenvalues, eigenvectors) = hermitian_spectrum(&op)?;
    let mut max_residual = 0.0_f64;
    for (j, &lam) in eigenvalues.iter().enumerate() {
        let v = eigenvectors.column(j);
        let r = (&op * v - v * cplx(lam, 0.0)).norm();
        max_residual = max_residual.max(r);
    }
    let lo = eigenvalues.first().copied().unwrap_or(cfg.phi0);
    let hi = eigenvalues.last().copied().unwrap_or(cfg.phi0);
    let excess = (cfg.phi0 - lo).max(hi - (cfg.phi0 + TAU)).max(0.0);
    Ok(PhaseSpectrumReport {
        eigenvalues,
        eigenvectors,
        out_of_window_excess: excess,
        max_residual,
    })
}

/// ⟨Ê⁽ⁿ⁾⟩ for a state, directly from the closed form (used by reports).
pub fn phasor_expectation(rho: &DensityState, n: i64) -> Result<Complex64> {
    let a = n.unsigned_abs() as usize;
    if a >= rho.dim() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let e = phasor(a, rho.dim())?;
    let e = if n >= 0 { e } else { e.adjoint() };
    expectation(rho, &e)
}
