//! Position/momentum measurement against a displaced thermal reference
//! oscillator: the filter family, the factorized generating function, the
//! Hermite-polynomial operational observables, moment inversion and the
//! operational uncertainty bound δq·δp ≥ n̄+1.

use crate::error::{OqoError, Result};
use crate::fock::{
    build_operators, cplx, expectation, hermitian_spectrum, poly_apply, DensityState, Operator,
};
use crate::measurement::{
    oqo_moment, propensity, Axis, DisplacedDiagonalBackend, FilterFamily, Grid, PropensityGrid,
};
use crate::special::hermite_mod_coeffs;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;

/// Thermal-reference measurement model: reference occupation n̄, cutoff D
/// and the (q,p) quadrature grid.
#[derive(Debug, Clone)]
pub struct QpModel {
    pub nbar: f64,
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl QpModel {
    /// Default grid for states of mean occupation `n_mean`, 129 points per
    /// axis. Two effects bound the usable half-width from opposite sides:
    /// the propensity marginal has std ≤ √(⟨n̂⟩+n̄+1) and the grid must
    /// reach ~6.5 std past the mean to capture its tails, while the
    /// displaced filters are only faithful for |q|,|p| well inside the
    /// spectral radius √(2·dim+1) of the truncated quadratures — beyond
    /// that the eigenphases alias and the quadrature degrades fast. We
    /// take the smaller of the two and reject configurations where the
    /// tail requirement exceeds the faithful range (raise `dim` then).
    pub fn new(nbar: f64, dim: usize, n_mean: f64) -> Result<Self> {
        if nbar < 0.0 {
            return Err(OqoError::InvalidArgument(format!("nbar = {nbar} < 0")));
        }
        if dim < 2 {
            return Err(OqoError::InvalidDimension(dim));
        }
        let mean = (2.0 * n_mean).sqrt();
        let sigma = (n_mean + nbar + 1.0).sqrt();
        Self::with_extent(nbar, dim, mean + 6.5 * sigma)
    }

    /// Grid fitted to a concrete state: uses the exact first/second
    /// quadrature moments of `rho` and, for states with hard-capped Fock
    /// support, the support radius √(2m+1) plus the thermal blur — hard
    /// caps have compact tails, so the Gaussian-moment bound would
    /// overshoot into the unfaithful region for them.
    pub fn for_state(nbar: f64, dim: usize, rho: &DensityState) -> Result<Self> {
        if nbar < 0.0 {
            return Err(OqoError::InvalidArgument(format!("nbar = {nbar} < 0")));
        }
        let ops = build_operators(dim)?;
        let mut tail = 0.0_f64;
        for op in [&ops.q, &ops.p] {
            let m1 = expectation(rho, op)?.re;
            let m2 = expectation(rho, &(op * op))?.re;
            let sigma = ((m2 - m1 * m1).max(0.0) + nbar + 0.5).sqrt();
            tail = tail.max(m1.abs() + 6.5 * sigma);
        }
        let mut m_top = 0usize;
        for m in 0..rho.dim() {
            if rho.matrix()[(m, m)].re > 1e-12 {
                m_top = m;
            }
        }
        let support = (2.0 * m_top as f64 + 1.0).sqrt()
            + 6.5 * (nbar + 0.5).sqrt()
            + 1.0;
        Self::with_extent(nbar, dim, tail.min(support))
    }

    fn with_extent(nbar: f64, dim: usize, tail_l: f64) -> Result<Self> {
        let tail_l = tail_l.max(7.0);
        let cap = (2.0 * dim as f64 + 1.0).sqrt() - 3.0;
        if tail_l > cap + 1.0 {
            return Err(OqoError::GridCoverage(format!(
                "state needs half-width {tail_l:.2} but displacements are \
                 only faithful up to {cap:.2} at dim {dim}; increase dim"
            )));
        }
        let l = tail_l.min(cap);
        Ok(Self { nbar, dim, half_width: l, points_per_axis: 129 })
    }
}

/// Diagonal of the resting reference F̂(0,0), built from the operator
/// identity n̂ = (Q̂²+P̂²-1)/2 so the convention check is part of the
/// construction.
fn reference_diagonal(nbar: f64, dim: usize) -> Result<Vec<f64>> {
    let ops = build_operators(dim)?;
    let n_op = (&ops.q * &ops.q + &ops.p * &ops.p
        - Operator::identity(dim, dim))
        * cplx(0.5, 0.0);
    // n̂ is diagonal in the Fock basis (the off-diagonals of Q² and P² cancel)
    let mut diag = Vec::with_capacity(dim);
    for m in 0..dim {
        let nv = n_op[(m, m)].re;
        let w = if nbar <= 0.0 {
            if nv.abs() < 0.5 { 1.0 } else { 0.0 }
        } else {
            (nbar / (nbar + 1.0)).powf(nv) / (nbar + 1.0)
        };
        diag.push(w);
    }
    Ok(diag)
}

/// The displaced-thermal filter family F̂(q,p) with its numeric k.
pub fn qp_filter(model: &QpModel) -> Result<FilterFamily> {
    let dim = model.dim;
    let ops = build_operators(dim)?;
    let (lam_q, vq) = hermitian_spectrum(&ops.q)?;
    let (lam_p, vp) = hermitian_spectrum(&ops.p)?;
    let f0 = reference_diagonal(model.nbar, dim)?;
    let mut f0_mat = Operator::zeros(dim, dim);
    for m in 0..dim {
        f0_mat[(m, m)] = cplx(f0[m], 0.0);
    }
    let w = vq.adjoint() * &vp;
    let s = vp.adjoint() * &f0_mat * &vp;
    let backend = DisplacedDiagonalBackend { vq, lam_q, lam_p, w, s };
    let grid = Grid::symmetric_2d(model.half_width, model.points_per_axis);
    let mut fam = FilterFamily::displaced_diagonal(grid, 1.0, dim, backend);
    // normalization from the POVM completeness sum, probed on the vacuum
    let m0 = oqo_moment(&fam, Axis::First, 0)?;
    let c = m0[(0, 0)].re;
    if c <= 0.0 {
        return Err(OqoError::GridCoverage("qp_filter: degenerate grid".into()));
    }
    fam.set_k(1.0 / c);
    // analytic cross-check k = 1/2π
    if (fam.k * TAU - 1.0).abs() > 1e-6 {
        return Err(OqoError::GridCoverage(format!(
            "qp_filter: k = {:.9e} deviates from 1/2π",
            fam.k
        )));
    }
    Ok(fam)
}

/// Closed-form Z_F(λ,μ) = ⟨exp(iλQ̂-iμP̂)⟩ · exp(-¼(2n̄+1)(λ²+μ²)).
pub fn zf_closed_form(
    rho: &DensityState,
    model: &QpModel,
    lambda: f64,
    mu: f64,
) -> Result<Complex64> {
    let ops = build_operators(model.dim)?;
    let gen = &ops.q * cplx(lambda, 0.0) - &ops.p * cplx(mu, 0.0);
    let (vals, vecs) = hermitian_spectrum(&gen)?;
    // exp(i gen) through the spectral decomposition
    let mut phases = Operator::zeros(model.dim, model.dim);
    for k in 0..model.dim {
        phases[(k, k)] = Complex64::from_polar(1.0, vals[k]);
    }
    let u = &vecs * phases * vecs.adjoint();
    let intrinsic = expectation(rho, &u)?;
    let noise = (-0.25 * (2.0 * model.nbar + 1.0) * (lambda * lambda + mu * mu)).exp();
    Ok(intrinsic * cplx(noise, 0.0))
}

/// Closed-form OQO: Q̂⁽ⁿ⁾ = ((1/2i)√(2n̄+1))ⁿ H_n(iQ̂/√(2n̄+1)), and the
/// analogous P̂⁽ⁿ⁾, evaluated as a real polynomial in the quadrature operator.
pub fn hermite_oqo(model: &QpModel, axis: Axis, n: usize) -> Result<Operator> {
    if n > 10 {
        return Err(OqoError::InvalidArgument(format!(
            "hermite_oqo: n = {n} exceeds 10"
        )));
    }
    let s = (2.0 * model.nbar + 1.0).sqrt();
    let coeffs = hermite_mod_coeffs(n, s)?;
    let ops = build_operators(model.dim)?;
    let base = match axis {
        Axis::First => &ops.q,
        Axis::Second => &ops.p,
    };
    Ok(poly_apply(&coeffs.coefficients, base))
}

/// Forward map: intrinsic moments ⟨Q̂ᵏ⟩ (k = 0..=N) to operational moments.
pub fn operational_from_intrinsic(intrinsic: &[f64], nbar: f64) -> Result<Vec<f64>> {
    let s = (2.0 * nbar + 1.0).sqrt();
    let n = intrinsic.len().saturating_sub(1);
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let c = hermite_mod_coeffs(k, s)?;
        let m: f64 = c
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, &cj)| cj * intrinsic[j])
            .sum();
        out.push(m);
    }
    Ok(out)
}

/// Invert the triangular Hermite relation: measured classical moments
/// m₁..m_N to intrinsic ⟨Q̂ⁿ⟩. The polynomials are monic, so the system is
/// unit-triangular and always solvable.
pub fn intrinsic_from_operational(measured: &[f64], nbar: f64) -> Result<Vec<f64>> {
    if measured.len() > 10 {
        return Err(OqoError::InvalidArgument("at most 10 moments".into()));
    }
    let s = (2.0 * nbar + 1.0).sqrt();
    let mut intrinsic = vec![1.0]; // ⟨Q̂⁰⟩
    for (idx, &m) in measured.iter().enumerate() {
        let k = idx + 1;
        let c = hermite_mod_coeffs(k, s)?;
        let lower: f64 = c.coefficients[..k]
            .iter()
            .enumerate()
            .map(|(j, &cj)| cj * intrinsic[j])
            .sum();
        intrinsic.push(m - lower);
    }
    Ok(intrinsic[1..].to_vec())
}

/// Operational spreads, intrinsic uncertainties and the uncertainty bound.
#[derive(Debug, Clone, Serialize)]
pub struct SpreadReport {
    pub dq: f64,
    pub dp: f64,
    #[serde(rename = "DQ")]
    pub dq_intrinsic: f64,
    #[serde(rename = "DP")]
    pub dp_intrinsic: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub equality_case: bool,
}

/// δq, δp from the propensity; ΔQ̂, ΔP̂ from the intrinsic operators; checks
/// δq·δp ≥ n̄+1.
pub fn spreads_and_bound(rho: &DensityState, model: &QpModel) -> Result<SpreadReport> {
    let fam = qp_filter(model)?;
    let pr = propensity(rho, &fam)?;
    let report = spreads_from_propensity(rho, model, &pr)?;
    Ok(report)
}

/// Same as `spreads_and_bound` with a caller-supplied propensity.
pub fn spreads_from_propensity(
    rho: &DensityState,
    model: &QpModel,
    pr: &PropensityGrid,
) -> Result<SpreadReport> {
    let (m1q, m2q) = (pr.moment(0, 1), pr.moment(0, 2));
    let (m1p, m2p) = (pr.moment(1, 1), pr.moment(1, 2));
    let dq = (m2q - m1q * m1q).sqrt();
    let dp = (m2p - m1p * m1p).sqrt();
    let ops = build_operators(model.dim)?;
    let var = |op: &Operator| -> Result<f64> {
        let m1 = expectation(rho, op)?.re;
        let m2 = expectation(rho, &(op * op))?.re;
        Ok(m2 - m1 * m1)
    };
    let dq_i = var(&ops.q)?.sqrt();
    let dp_i = var(&ops.p)?.sqrt();
    let lhs = dq * dp;
    let rhs = model.nbar + 1.0;
    if lhs < rhs - 1e-6 {
        return Err(OqoError::InvalidState(format!(
            "operational bound violated: {lhs} < {rhs}"
        )));
    }
    let eq_tol = 1e-6;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    Ok(SpreadReport {
        dq,
        dp,
        dq_intrinsic: dq_i,
        dp_intrinsic: dp_i,
        lhs,
        rhs,
        margin: lhs - rhs,
        equality_case: (dq_i - inv_sqrt2).abs() < eq_tol && (dp_i - inv_sqrt2).abs() < eq_tol,
    })
}
