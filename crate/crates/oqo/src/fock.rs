//! Truncated Fock-space linear algebra: ladder and quadrature operators,
//! state constructors, displacement, expectation values and hermitean
//! eigendecomposition.
//!
//! All operators live at one global cutoff dimension D. Operations whose
//! result is polluted near the cutoff (displacement, matrix exponentials)
//! are validated on the low 80% sub-block; states expose `tail_mass` so
//! callers can reject unfaithful combinations.

use crate::error::{OqoError, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Operator = DMatrix<Complex64>;

pub const FAITHFUL_TAIL: f64 = 1e-8;

#[inline]
pub fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Max absolute deviation from hermiticity, ‖A - A†‖_max.
pub fn hermiticity_residual(a: &Operator) -> f64 {
    let mut r = 0.0_f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            r = r.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    r
}

/// Entrywise max-norm of A - B.
pub fn max_diff(a: &Operator, b: &Operator) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Ladder and quadrature operators at cutoff D.
pub struct FockOps {
    pub b: Operator,
    pub b_dag: Operator,
    pub num: Operator,
    pub q: Operator,
    pub p: Operator,
}

/// b, b†, n̂ = b†b, Q = (b+b†)/√2, P = (b-b†)/(i√2).
pub fn build_operators(dim: usize) -> Result<FockOps> {
    if dim < 2 {
        return Err(OqoError::InvalidDimension(dim));
    }
    let mut b = Operator::zeros(dim, dim);
    for m in 1..dim {
        b[(m - 1, m)] = cplx((m as f64).sqrt(), 0.0);
    }
    let b_dag = b.adjoint();
    let num = &b_dag * &b;
    let s = cplx(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let q = (&b + &b_dag) * s;
    let p = (&b - &b_dag) * (s * cplx(0.0, -1.0));
    Ok(FockOps { b, b_dag, num, q, p })
}

/// Hermitean, positive, unit-trace state at cutoff D.
#[derive(Debug, Clone)]
pub struct DensityState {
    mat: Operator,
    tail_mass: f64,
}

impl DensityState {
    /// Validates hermiticity (1e-12), unit trace (1e-12) and positivity
    /// (eigenvalues >= -1e-10).
    pub fn new(mat: Operator) -> Result<Self> {
        let dim = mat.nrows();
        if dim < 2 || mat.ncols() != dim {
            return Err(OqoError::InvalidDimension(dim));
        }
        let herm = hermiticity_residual(&mat);
        if herm > 1e-12 {
            return Err(OqoError::NotHermitian(herm));
        }
        let tr = mat.trace();
        if (tr - cplx(1.0, 0.0)).norm() > 1e-12 {
            return Err(OqoError::InvalidState(format!(
                "trace = {tr}, expected 1"
            )));
        }
        // positivity to -1e-10, via shifted Cholesky; the QR eigensolver
        // misbehaves on heavily rank-deficient inputs
        let shifted = &mat + Operator::identity(dim, dim) * cplx(1e-10, 0.0);
        if shifted.cholesky().is_none() {
            return Err(OqoError::InvalidState(
                "not positive semidefinite within 1e-10".into(),
            ));
        }
        let tail_start = dim - dim / 10 - 1;
        let tail_mass: f64 = (tail_start..dim).map(|m| mat[(m, m)].re).sum();
        Ok(Self { mat, tail_mass: tail_mass.max(0.0) })
    }

    pub fn matrix(&self) -> &Operator {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Population in the top 10% of Fock levels.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn is_faithful(&self) -> bool {
        self.tail_mass < FAITHFUL_TAIL
    }
}

/// Recipe for a state at a given cutoff.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    Fock { n: usize },
    Coherent { alpha: Complex64 },
    Thermal { nbar: f64 },
    DisplacedThermal { nbar: f64, q: f64, p: f64 },
    RandomMixed { levels: usize, seed: u64 },
}

/// Ground-truth coherent amplitude column |α⟩ at cutoff D, normalized.
pub fn coherent_vector(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let mut v = DVector::<Complex64>::zeros(dim);
    let mut c = cplx((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = c;
    for m in 1..dim {
        c *= alpha / cplx((m as f64).sqrt(), 0.0);
        v[m] = c;
    }
    let n = v.norm();
    v / cplx(n, 0.0)
}

fn thermal_diagonal(nbar: f64, dim: usize) -> Vec<f64> {
    if nbar <= 0.0 {
        let mut d = vec![0.0; dim];
        d[0] = 1.0;
        return d;
    }
    let x = nbar / (nbar + 1.0);
    let mut d: Vec<f64> = (0..dim)
        .map(|m| x.powi(m as i32) / (nbar + 1.0))
        .collect();
    let s: f64 = d.iter().sum();
    for v in &mut d {
        *v /= s;
    }
    d
}

pub fn make_state(spec: &StateSpec, dim: usize) -> Result<DensityState> {
    if dim < 2 {
        return Err(OqoError::InvalidDimension(dim));
    }
    let mat = match spec {
        StateSpec::Fock { n } => {
            if *n >= dim {
                return Err(OqoError::InvalidState(format!(
                    "fock level {n} >= cutoff {dim}"
                )));
            }
            let mut m = Operator::zeros(dim, dim);
            m[(*n, *n)] = cplx(1.0, 0.0);
            m
        }
        StateSpec::Coherent { alpha } => {
            if alpha.norm_sqr() > dim as f64 / 4.0 {
                return Err(OqoError::CutoffUnfaithful(format!(
                    "|alpha|^2 = {:.3} > D/4 = {:.3}",
                    alpha.norm_sqr(),
                    dim as f64 / 4.0
                )));
            }
            let v = coherent_vector(*alpha, dim);
            &v * v.adjoint()
        }
        StateSpec::Thermal { nbar } => {
            if *nbar < 0.0 {
                return Err(OqoError::InvalidState(format!("nbar = {nbar} < 0")));
            }
            Operator::from_diagonal(&DVector::from_iterator(
                dim,
                thermal_diagonal(*nbar, dim).into_iter().map(|x| cplx(x, 0.0)),
            ))
        }
        StateSpec::DisplacedThermal { nbar, q, p } => {
            let th = make_state(&StateSpec::Thermal { nbar: *nbar }, dim)?;
            let d = displacement(*q, *p, dim)?;
            let m = &d * th.matrix() * d.adjoint();
            // symmetrize away roundoff so the constructor's 1e-12 gate holds
            symmetrize(&m)
        }
        StateSpec::RandomMixed { levels, seed } => {
            let l = (*levels).clamp(2, dim);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut g = Operator::zeros(dim, dim);
            for i in 0..l {
                for j in 0..l {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    g[(i, j)] = cplx(re, im);
                }
            }
            let m = &g * g.adjoint();
            let m = symmetrize(&m);
            let tr = m.trace().re;
            m / cplx(tr, 0.0)
        }
    };
    let mat = symmetrize(&mat);
    let tr = mat.trace().re;
    DensityState::new(mat / cplx(tr, 0.0))
}

fn symmetrize(m: &Operator) -> Operator {
    (m + m.adjoint()) * cplx(0.5, 0.0)
}

/// Displacement D(q,p) = exp(i p Q̂ - i q P̂), by scaling-and-squaring
/// matrix exponential of the anti-hermitean generator.
pub fn displacement(q: f64, p: f64, dim: usize) -> Result<Operator> {
    if !q.is_finite() || !p.is_finite() {
        return Err(OqoError::InvalidArgument("displacement: non-finite".into()));
    }
    let alpha_sq = (q * q + p * p) / 2.0;
    if alpha_sq > dim as f64 / 4.0 {
        return Err(OqoError::CutoffUnfaithful(format!(
            "displacement |alpha|^2 = {alpha_sq:.3} > D/4 = {:.3}",
            dim as f64 / 4.0
        )));
    }
    let ops = build_operators(dim)?;
    let gen = &ops.q * cplx(0.0, p) - &ops.p * cplx(0.0, q);
    Ok(gen.exp())
}

/// Tr{ρ Â}; real to roundoff when Â is hermitean.
pub fn expectation(rho: &DensityState, a: &Operator) -> Result<Complex64> {
    if rho.dim() != a.nrows() || a.nrows() != a.ncols() {
        return Err(OqoError::DimensionMismatch(rho.dim(), a.nrows()));
    }
    let r = rho.matrix();
    let mut sum = Complex64::default();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            sum += r[(i, j)] * a[(j, i)];
        }
    }
    Ok(sum)
}

/// Ascending eigenvalues and matching orthonormal eigenvector columns of a
/// hermitean operator.
pub fn hermitian_spectrum(a: &Operator) -> Result<(Vec<f64>, Operator)> {
    let herm = hermiticity_residual(a);
    if herm > 1e-10 {
        return Err(OqoError::NotHermitian(herm));
    }
    let sym = symmetrize(a);
    let eig = sym.clone().symmetric_eigen();
    // re-pair eigenvalues through Rayleigh quotients; the solver's value
    // ordering is not guaranteed to match the vector columns
    let rayleigh: Vec<f64> = (0..a.nrows())
        .map(|i| {
            let v = eig.eigenvectors.column(i);
            (v.adjoint() * &sym * v)[(0, 0)].re
        })
        .collect();
    let mut idx: Vec<usize> = (0..a.nrows()).collect();
    idx.sort_by(|&i, &j| rayleigh[i].partial_cmp(&rayleigh[j]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| rayleigh[i]).collect();
    let mut vecs = Operator::zeros(a.nrows(), a.ncols());
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Evaluate a real-coefficient polynomial at a matrix argument (Horner).
pub fn poly_apply(coeffs: &[f64], a: &Operator) -> Operator {
    let dim = a.nrows();
    let mut acc = Operator::zeros(dim, dim);
    for &c in coeffs.iter().rev() {
        acc = &acc * a;
        for i in 0..dim {
            acc[(i, i)] += cplx(c, 0.0);
        }
    }
    acc
}
