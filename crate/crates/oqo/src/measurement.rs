//! The generic filter/propensity/OQO framework.
//!
//! A measuring device is a positive-operator filter family F̂(a) over a
//! classical grid; the propensity Pr(a) = k Tr{ρ̂ F̂(a)} is its recorded
//! outcome density, and the operational observables Â⁽ⁿ⁾ = k ∫da aⁿ F̂(a)
//! reproduce the classical moments of Pr for every state. Everything in
//! this module is brute-force quadrature: it is the oracle against which
//! the closed forms of the q/p and phase models are validated.

use crate::error::{OqoError, Result};
use crate::fock::{cplx, hermiticity_residual, DensityState, Operator};
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

/// Classical outcome grid with quadrature weights.
#[derive(Debug, Clone)]
pub enum Grid {
    OneD {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
    /// Product grid over (q, p); flattened index is iq * p.len() + ip.
    TwoD {
        q: Vec<f64>,
        wq: Vec<f64>,
        p: Vec<f64>,
        wp: Vec<f64>,
    },
}

impl Grid {
    /// Uniform symmetric grid on [-l, l] with trapezoid weights.
    pub fn symmetric_1d(l: f64, n: usize) -> Self {
        let h = 2.0 * l / (n - 1) as f64;
        let points: Vec<f64> = (0..n).map(|i| -l + h * i as f64).collect();
        let mut weights = vec![h; n];
        weights[0] = h / 2.0;
        weights[n - 1] = h / 2.0;
        Grid::OneD { points, weights }
    }

    pub fn symmetric_2d(l: f64, n: usize) -> Self {
        let (points, weights) = match Self::symmetric_1d(l, n) {
            Grid::OneD { points, weights } => (points, weights),
            _ => unreachable!(),
        };
        Grid::TwoD {
            q: points.clone(),
            wq: weights.clone(),
            p: points,
            wp: weights,
        }
    }

    /// Uniform periodic grid over [start, start + 2π) with rectangle weights.
    pub fn periodic(start: f64, n: usize) -> Self {
        let h = std::f64::consts::TAU / n as f64;
        Grid::OneD {
            points: (0..n).map(|j| start + h * j as f64).collect(),
            weights: vec![h; n],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::OneD { points, .. } => points.len(),
            Grid::TwoD { q, p, .. } => q.len() * p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Outcome coordinates of the flattened index.
    pub fn point(&self, i: usize) -> Vec<f64> {
        match self {
            Grid::OneD { points, .. } => vec![points[i]],
            Grid::TwoD { q, p, .. } => {
                vec![q[i / p.len()], p[i % p.len()]]
            }
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        match self {
            Grid::OneD { weights, .. } => weights[i],
            Grid::TwoD { wq, wp, p, .. } => wq[i / p.len()] * wp[i % p.len()],
        }
    }
}

/// Classical outcome density sampled on a grid.
#[derive(Debug, Clone)]
pub struct PropensityGrid {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl PropensityGrid {
    /// Weighted total; 1 within tolerance for a normalized propensity.
    pub fn total(&self) -> f64 {
        self.weighted_moment(&|_| 1.0)
    }

    /// Σ weights · f(a) · Pr(a) with compensated summation.
    pub fn weighted_moment(&self, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        for i in 0..self.grid.len() {
            let term = self.grid.weight(i) * f(&self.grid.point(i)) * self.values[i];
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    /// n-th moment of the outcome component `axis`.
    pub fn moment(&self, axis: usize, n: u32) -> f64 {
        self.weighted_moment(&|a| a[axis].powi(n as i32))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// CSV rows `a1[,a2],weight,pr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.grid {
            Grid::OneD { .. } => out.push_str("a1,weight,pr\n"),
            Grid::TwoD { .. } => out.push_str("a1,a2,weight,pr\n"),
        }
        for i in 0..self.grid.len() {
            let pt = self.grid.point(i);
            for c in &pt {
                out.push_str(&format!("{:.11e},", c));
            }
            out.push_str(&format!(
                "{:.11e},{:.11e}\n",
                self.grid.weight(i),
                self.values[i]
            ));
        }
        out
    }
}

/// Axis selector for moment operators on 2-D grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    First,
    Second,
}

type OpAtFn = Box<dyn Fn(&[f64]) -> Operator + Send + Sync>;

/// Precomputed eigen-factorization backend for displaced-diagonal filters
/// F(q,p) = e^{ipQ} e^{-iqP} F₀ e^{iqP} e^{-ipQ} with diagonal F₀.
///
/// With Q = Vq Λq Vq†, P = Vp Λp Vp†, W = Vq†Vp and S = Vp†F₀Vp, a grid
/// point costs two D×D products instead of a fresh matrix exponential.
pub struct DisplacedDiagonalBackend {
    pub vq: Operator,
    pub lam_q: Vec<f64>,
    pub lam_p: Vec<f64>,
    pub w: Operator,
    pub s: Operator,
}

impl DisplacedDiagonalBackend {
    fn phase_vec(lams: &[f64], t: f64) -> DVector<Complex64> {
        DVector::from_iterator(
            lams.len(),
            lams.iter().map(|&l| Complex64::from_polar(1.0, t * l)),
        )
    }

    /// u(p) = diag phases of e^{ipQ} in the Q eigenbasis.
    fn u(&self, p: f64) -> DVector<Complex64> {
        Self::phase_vec(&self.lam_q, p)
    }

    /// v(q) = diag phases of e^{-iqP} in the P eigenbasis.
    fn v(&self, q: f64) -> DVector<Complex64> {
        Self::phase_vec(&self.lam_p, -q)
    }

    /// T(q) = W diag(v) S diag(v̄) W†.
    fn t_of_q(&self, q: f64) -> Operator {
        let v = self.v(q);
        let dim = v.len();
        let mut m = self.w.clone();
        for j in 0..dim {
            let vj = v[j];
            for i in 0..dim {
                m[(i, j)] *= vj;
            }
        }
        // m = W diag(v); T = m S m†
        &m * &self.s * m.adjoint()
    }

    /// Filter operator at (q, p), in the original Fock basis.
    fn op_at(&self, q: f64, p: f64) -> Operator {
        let u = self.u(p);
        let v = self.v(q);
        let dim = u.len();
        // X = diag(u) W diag(v)
        let mut x = self.w.clone();
        for j in 0..dim {
            for i in 0..dim {
                x[(i, j)] *= u[i] * v[j];
            }
        }
        let core = &x * &self.s * x.adjoint();
        &self.vq * core * self.vq.adjoint()
    }
}

enum Backend {
    Generic(OpAtFn),
    DisplacedDiagonal(Box<DisplacedDiagonalBackend>),
}

/// A positive filter family with its classical grid and normalization k.
pub struct FilterFamily {
    pub grid: Grid,
    pub k: f64,
    pub dim: usize,
    backend: Backend,
}

impl FilterFamily {
    pub fn generic(
        grid: Grid,
        k: f64,
        dim: usize,
        op_at: OpAtFn,
    ) -> Self {
        Self { grid, k, dim, backend: Backend::Generic(op_at) }
    }

    pub fn displaced_diagonal(
        grid: Grid,
        k: f64,
        dim: usize,
        backend: DisplacedDiagonalBackend,
    ) -> Self {
        Self { grid, k, dim, backend: Backend::DisplacedDiagonal(Box::new(backend)) }
    }

    pub fn set_k(&mut self, k: f64) {
        self.k = k;
    }

    /// Filter operator at a grid point (positive, hermitean).
    pub fn op_at(&self, point: &[f64]) -> Operator {
        match &self.backend {
            Backend::Generic(f) => f(point),
            Backend::DisplacedDiagonal(b) => b.op_at(point[0], point[1]),
        }
    }
}

/// Pr(a) = k Tr{ρ̂ F̂(a)} on the filter's grid.
pub fn propensity(rho: &DensityState, fam: &FilterFamily) -> Result<PropensityGrid> {
    propensity_batch(&[rho], fam).map(|mut v| v.pop().expect("one state in, one grid out"))
}

/// Propensities for several states over one filter family. The factor of the
/// filter that does not depend on the state is built once per grid column and
/// shared, so a batch of size S costs far less than S separate calls.
pub fn propensity_batch(
    rhos: &[&DensityState],
    fam: &FilterFamily,
) -> Result<Vec<PropensityGrid>> {
    for rho in rhos {
        if rho.dim() != fam.dim {
            return Err(OqoError::DimensionMismatch(rho.dim(), fam.dim));
        }
    }
    match &fam.backend {
        Backend::Generic(f) => {
            let mut out = Vec::with_capacity(rhos.len());
            for rho in rhos {
                let values = (0..fam.grid.len())
                    .into_par_iter()
                    .map(|i| {
                        let op = f(&fam.grid.point(i));
                        fam.k * trace_product(rho.matrix(), &op).re
                    })
                    .collect::<Vec<f64>>();
                out.push(PropensityGrid { grid: fam.grid.clone(), values });
            }
            Ok(out)
        }
        Backend::DisplacedDiagonal(b) => {
            let (qs, ps) = match &fam.grid {
                Grid::TwoD { q, p, .. } => (q.clone(), p.clone()),
                _ => {
                    return Err(OqoError::InvalidArgument(
                        "displaced-diagonal filter needs a 2-D grid".into(),
                    ))
                }
            };
            let dim = fam.dim;
            let n_p = ps.len();
            // R = Vq† ρ Vq per state; U collects the p-phase columns u(p)
            let rs: Vec<Operator> = rhos
                .iter()
                .map(|rho| b.vq.adjoint() * rho.matrix() * &b.vq)
                .collect();
            let mut u_mat = Operator::zeros(dim, n_p);
            for (ip, &p) in ps.iter().enumerate() {
                u_mat.set_column(ip, &b.u(p));
            }
            let rows: Vec<Vec<Vec<f64>>> = qs
                .par_iter()
                .map(|&q| {
                    let t = b.t_of_q(q);
                    rs.iter()
                        .map(|r| {
                            // M_{ab} = R_{ab} T_{ba}; Pr(q, p) = u(p)† M u(p)
                            let mut m = Operator::zeros(dim, dim);
                            for a in 0..dim {
                                for c in 0..dim {
                                    m[(a, c)] = r[(a, c)] * t[(c, a)];
                                }
                            }
                            let mu = &m * &u_mat;
                            (0..n_p)
                                .map(|ip| {
                                    let val: Complex64 = u_mat
                                        .column(ip)
                                        .iter()
                                        .zip(mu.column(ip).iter())
                                        .map(|(ui, mi)| ui.conj() * mi)
                                        .sum();
                                    fam.k * val.re
                                })
                                .collect::<Vec<f64>>()
                        })
                        .collect()
                })
                .collect();
            Ok((0..rhos.len())
                .map(|s| PropensityGrid {
                    grid: fam.grid.clone(),
                    values: rows.iter().flat_map(|per_state| per_state[s].clone()).collect(),
                })
                .collect())
        }
    }
}

/// Â⁽ⁿ⁾ = k Σ_a w_a aⁿ F̂(a), marginalized on `axis` for 2-D grids.
pub fn oqo_moment(fam: &FilterFamily, axis: Axis, n: u32) -> Result<Operator> {
    oqo_moments(fam, &[(axis, n)]).map(|mut v| v.pop().expect("one request in, one op out"))
}

/// Several moment operators from one filter family; the state-independent
/// factor per grid column is built once and shared across all requested
/// (axis, order) pairs.
pub fn oqo_moments(fam: &FilterFamily, reqs: &[(Axis, u32)]) -> Result<Vec<Operator>> {
    let dim = fam.dim;
    match &fam.backend {
        Backend::Generic(f) => reqs
            .iter()
            .map(|&(axis, n)| {
                let acc = (0..fam.grid.len())
                    .into_par_iter()
                    .fold(
                        || Operator::zeros(dim, dim),
                        |mut acc, i| {
                            let pt = fam.grid.point(i);
                            let coord = match axis {
                                Axis::First => pt[0],
                                Axis::Second => *pt.get(1).unwrap_or(&pt[0]),
                            };
                            let w = fam.grid.weight(i) * coord.powi(n as i32);
                            acc += f(&pt) * cplx(w, 0.0);
                            acc
                        },
                    )
                    .reduce(|| Operator::zeros(dim, dim), |a, b| a + b);
                Ok(acc * cplx(fam.k, 0.0))
            })
            .collect(),
        Backend::DisplacedDiagonal(b) => {
            let (qs, wq, ps, wp) = match &fam.grid {
                Grid::TwoD { q, wq, p, wp } => (q, wq, p, wp),
                _ => {
                    return Err(OqoError::InvalidArgument(
                        "displaced-diagonal filter needs a 2-D grid".into(),
                    ))
                }
            };
            // per request: K = Σ_p wp (pⁿ for Second axis) u u†
            let kmats: Vec<Operator> = reqs
                .iter()
                .map(|&(axis, n)| {
                    let mut kmat = Operator::zeros(dim, dim);
                    for (ip, &p) in ps.iter().enumerate() {
                        let f = match axis {
                            Axis::First => wp[ip],
                            Axis::Second => wp[ip] * p.powi(n as i32),
                        };
                        let u = b.u(p);
                        for a in 0..dim {
                            let ua = u[a] * cplx(f, 0.0);
                            for c in 0..dim {
                                kmat[(a, c)] += ua * u[c].conj();
                            }
                        }
                    }
                    kmat
                })
                .collect();
            let accs = qs
                .par_iter()
                .enumerate()
                .fold(
                    || vec![Operator::zeros(dim, dim); reqs.len()],
                    |mut accs, (iq, &q)| {
                        let t = b.t_of_q(q);
                        for (req, &(axis, n)) in reqs.iter().enumerate() {
                            let f = match axis {
                                Axis::First => wq[iq] * q.powi(n as i32),
                                Axis::Second => wq[iq],
                            };
                            let acc = &mut accs[req];
                            let kmat = &kmats[req];
                            for a in 0..dim {
                                for c in 0..dim {
                                    acc[(a, c)] += t[(a, c)] * kmat[(a, c)] * cplx(f, 0.0);
                                }
                            }
                        }
                        accs
                    },
                )
                .reduce(
                    || vec![Operator::zeros(dim, dim); reqs.len()],
                    |xs, ys| xs.into_iter().zip(ys).map(|(x, y)| x + y).collect(),
                );
            Ok(accs
                .into_iter()
                .map(|acc| {
                    let op = &b.vq * acc * b.vq.adjoint();
                    // symmetrize roundoff
                    (&op + op.adjoint()) * cplx(0.5 * fam.k, 0.0)
                })
                .collect())
        }
    }
}

/// Z(λ) = Tr{ρ̂ exp(λÂ)}.
pub fn generating_z(rho: &DensityState, a: &Operator, lambda: Complex64) -> Result<Complex64> {
    if rho.dim() != a.nrows() {
        return Err(OqoError::DimensionMismatch(rho.dim(), a.nrows()));
    }
    let scaled = a * lambda;
    let norm = scaled.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    if norm > 500.0 {
        return Err(OqoError::Overflow(format!(
            "generating_z: ||lambda A|| ~ {norm:.1}"
        )));
    }
    let e = scaled.exp();
    let z = trace_product(rho.matrix(), &e);
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(OqoError::Overflow("generating_z".into()));
    }
    Ok(z)
}

/// Z_F(λ) = Σ_a w_a e^{λ·a} Pr(a); λ has one component per grid dimension.
pub fn generating_zf(pr: &PropensityGrid, lambda: &[Complex64]) -> Result<Complex64> {
    let ndim = match &pr.grid {
        Grid::OneD { .. } => 1,
        Grid::TwoD { .. } => 2,
    };
    if lambda.len() != ndim {
        return Err(OqoError::InvalidArgument(format!(
            "generating_zf: lambda has {} components, grid is {ndim}-D",
            lambda.len()
        )));
    }
    let mut sum = Complex64::default();
    let mut boundary = 0.0_f64;
    let n = pr.grid.len();
    for i in 0..n {
        let pt = pr.grid.point(i);
        let expo: Complex64 = pt.iter().zip(lambda).map(|(&x, &l)| l * x).sum();
        let term = expo.exp() * cplx(pr.grid.weight(i) * pr.values[i], 0.0);
        if on_boundary(&pr.grid, i) {
            boundary += term.norm();
        }
        sum += term;
    }
    if !sum.re.is_finite() || !sum.im.is_finite() {
        return Err(OqoError::Overflow("generating_zf".into()));
    }
    // scale reference: |Z| itself, floored at Z(0) = 1 so genuinely small
    // values (strong imaginary damping) are not flagged spuriously
    if boundary > 1e-6 * sum.norm().max(1.0) {
        return Err(OqoError::GridCoverage(format!(
            "generating_zf: boundary contribution {boundary:.3e} vs total {:.3e}",
            sum.norm()
        )));
    }
    Ok(sum)
}

fn on_boundary(grid: &Grid, i: usize) -> bool {
    match grid {
        Grid::OneD { points, .. } => i == 0 || i == points.len() - 1,
        Grid::TwoD { q, p, .. } => {
            let (iq, ip) = (i / p.len(), i % p.len());
            iq == 0 || iq == q.len() - 1 || ip == 0 || ip == p.len() - 1
        }
    }
}

/// Tr{A B} without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> Complex64 {
    let mut sum = Complex64::default();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            sum += a[(i, j)] * b[(j, i)];
        }
    }
    sum
}

/// Min eigenvalue of a hermitean operator (for POVM positivity checks).
pub fn min_eigenvalue(a: &Operator) -> Result<f64> {
    let res = hermiticity_residual(a);
    if res > 1e-9 {
        return Err(OqoError::NotHermitian(res));
    }
    let (vals, _) = crate::fock::hermitian_spectrum(&((a + a.adjoint()) * cplx(0.5, 0.0)))?;
    Ok(vals[0])
}
