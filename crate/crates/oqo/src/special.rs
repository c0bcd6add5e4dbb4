//! Special functions and quadrature rules: log-gamma, gamma ratios,
//! modified Hermite coefficients, Kummer's confluent hypergeometric M,
//! periodic (rectangle) quadrature and generalized Gauss-Laguerre nodes.

use crate::error::{OqoError, Result};
use nalgebra::DMatrix;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(OqoError::InvalidArgument(format!(
            "ln_gamma requires x > 0, got {x}"
        )));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Γ(a)/Γ(b) through log space; stable for arguments up to ~1e4.
pub fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    Ok((ln_gamma(a)? - ln_gamma(b)?).exp())
}

/// Real polynomial, `coefficients[k]` multiplying x^k.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    pub coefficients: Vec<f64>,
}

impl PolyCoeffs {
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

/// Coefficients of the real polynomial x ↦ (s/(2i))^n H_n(i x / s).
///
/// The substitution turns the Hermite recurrence H_{k+1}(y) = 2y H_k - 2k H_{k-1}
/// into h_{k+1}(x) = x h_k(x) + (k s^2 / 2) h_{k-1}(x), which is manifestly
/// real and monic.
pub fn hermite_mod_coeffs(n: usize, s: f64) -> Result<PolyCoeffs> {
    if n > 30 {
        return Err(OqoError::InvalidArgument(format!(
            "hermite_mod_coeffs: n = {n} exceeds 30 (coefficient growth)"
        )));
    }
    if !(s > 0.0) {
        return Err(OqoError::InvalidArgument(format!(
            "hermite_mod_coeffs: scale s must be positive, got {s}"
        )));
    }
    let mut prev = vec![1.0]; // h_0
    if n == 0 {
        return Ok(PolyCoeffs { coefficients: prev });
    }
    let mut cur = vec![0.0, 1.0]; // h_1 = x
    for k in 1..n {
        // h_{k+1} = x * h_k + (k s^2 / 2) * h_{k-1}
        let mut next = vec![0.0; k + 2];
        for (j, &c) in cur.iter().enumerate() {
            next[j + 1] += c;
        }
        let f = k as f64 * s * s / 2.0;
        for (j, &c) in prev.iter().enumerate() {
            next[j] += f * c;
        }
        prev = cur;
        cur = next;
    }
    Ok(PolyCoeffs { coefficients: cur })
}

const M_MAX_TERMS: usize = 600;

/// Kummer's confluent hypergeometric M(a, b, x) for real arguments.
///
/// Negative x is handled through the Kummer transformation
/// M(a,b,x) = e^x M(b-a, b, -x) so the series has positive terms.
pub fn confluent_m(a: f64, b: f64, x: f64) -> Result<f64> {
    if b <= 0.0 && b == b.floor() {
        return Err(OqoError::InvalidArgument(format!(
            "confluent_m: b = {b} is a nonpositive integer"
        )));
    }
    if x.abs() > 500.0 {
        return Err(OqoError::InvalidArgument(format!(
            "confluent_m: |x| = {} exceeds 500",
            x.abs()
        )));
    }
    if x < 0.0 {
        return Ok(x.exp() * confluent_m_series(b - a, b, -x)?);
    }
    confluent_m_series(a, b, x)
}

fn confluent_m_series(a: f64, b: f64, x: f64) -> Result<f64> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut comp = 0.0_f64; // Kahan compensation
    for k in 0..M_MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) / (b + kf) * x / (kf + 1.0);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-16 * sum.abs().max(1.0) {
            return Ok(sum);
        }
    }
    Err(OqoError::NonConvergence(format!(
        "confluent_m({a}, {b}, {x})"
    )))
}

/// Integral over one period of uniformly sampled periodic data: (2π/N) Σ f_j.
///
/// Exact to roundoff for trigonometric polynomials of degree < N/2; higher
/// harmonics alias onto their mean.
pub fn periodic_quadrature(samples: &[f64]) -> f64 {
    let n = samples.len();
    assert!(n >= 4, "periodic_quadrature needs at least 4 samples");
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &s in samples {
        let y = s - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum * std::f64::consts::TAU / n as f64
}

/// Generalized Gauss-Laguerre rule: nodes and weights for
/// ∫_0^∞ x^α e^{-x} f(x) dx ≈ Σ w_i f(x_i), computed by Golub-Welsch.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(OqoError::InvalidArgument("gauss_laguerre: n >= 1".into()));
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = 2.0 * k as f64 + 1.0 + alpha;
        if k + 1 < n {
            let off = ((k as f64 + 1.0) * (k as f64 + 1.0 + alpha)).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let eig = jac.clone().symmetric_eigen();
    let mu0 = ln_gamma(alpha + 1.0)?.exp();
    // re-pair eigenvalues through Rayleigh quotients; the solver's value
    // ordering is not guaranteed to match the vector columns
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v = eig.eigenvectors.column(i);
            let lam = v.dot(&(&jac * v));
            let v0 = v[0];
            (lam, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn ln_gamma_reference_values() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-15);
        let g32 = (PI.sqrt() / 2.0).ln();
        assert!((ln_gamma(1.5).unwrap() - g32).abs() < 1e-14);
        assert!((ln_gamma(11.0).unwrap() - 3628800f64.ln()).abs() < 1e-12);
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.0).is_err());
    }

    #[test]
    fn gamma_ratio_values() {
        assert!((gamma_ratio(1.5, 2.0).unwrap() - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((gamma_ratio(7.3, 7.3).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_ratio(101.0, 100.0).unwrap() - 100.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_mod_small_orders() {
        let h0 = hermite_mod_coeffs(0, 2.0).unwrap();
        assert_eq!(h0.coefficients, vec![1.0]);
        let h1 = hermite_mod_coeffs(1, 0.7).unwrap();
        assert_eq!(h1.coefficients, vec![0.0, 1.0]);
        // n = 2, s = 1 (nbar = 0): x^2 + 1/2
        let h2 = hermite_mod_coeffs(2, 1.0).unwrap();
        assert_eq!(h2.coefficients.len(), 3);
        assert!((h2.coefficients[0] - 0.5).abs() < 1e-15);
        assert!(h2.coefficients[1].abs() < 1e-15);
        assert!((h2.coefficients[2] - 1.0).abs() < 1e-15);
        assert!(hermite_mod_coeffs(31, 1.0).is_err());
    }

    /// Direct complex evaluation of (s/(2i))^n H_n(i x / s).
    fn hermite_mod_direct(n: usize, s: f64, x: f64) -> f64 {
        use num_complex::Complex64;
        let y = Complex64::new(0.0, x / s);
        let mut hm = Complex64::new(1.0, 0.0);
        let mut h = 2.0 * y;
        if n == 0 {
            h = hm;
        } else {
            for k in 1..n {
                let next = 2.0 * y * h - 2.0 * k as f64 * hm;
                hm = h;
                h = next;
            }
        }
        let pre = (Complex64::new(0.0, -s / 2.0)).powu(n as u32);
        (pre * h).re
    }

    #[test]
    fn hermite_mod_matches_complex_definition() {
        for n in 0..=12 {
            for &s in &[0.5, 1.0, 2.23606797749979] {
                for &x in &[-2.0, -0.3, 0.0, 1.7, 3.0] {
                    let p = hermite_mod_coeffs(n, s).unwrap();
                    let direct = hermite_mod_direct(n, s, x);
                    let scale = direct.abs().max(1.0);
                    assert!(
                        (p.eval(x) - direct).abs() < 1e-10 * scale,
                        "n={n} s={s} x={x}: {} vs {}",
                        p.eval(x),
                        direct
                    );
                }
            }
        }
    }

    #[test]
    fn hermite_mod_three_term_recurrence() {
        // h_{k+1}(x) = x h_k(x) + (k s^2/2) h_{k-1}(x), checked at sample points
        let s = 1.3;
        for k in 1..20 {
            let hm = hermite_mod_coeffs(k - 1, s).unwrap();
            let h = hermite_mod_coeffs(k, s).unwrap();
            let hp = hermite_mod_coeffs(k + 1, s).unwrap();
            for &x in &[-1.5, 0.2, 2.4] {
                let lhs = hp.eval(x);
                let rhs = x * h.eval(x) + (k as f64) * s * s / 2.0 * hm.eval(x);
                assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn confluent_m_reference_values() {
        assert_eq!(confluent_m(0.3, 1.7, 0.0).unwrap(), 1.0);
        assert!((confluent_m(1.0, 1.0, 1.0).unwrap() - 1f64.exp()).abs() < 1e-12);
        // frozen from a 200-term Kummer-transformed series (independent
        // summation below)
        let oracle = {
            // e^{-1} * sum_k (1.5)_k/(2)_k 1/k!
            let (a, b, x) = (1.5, 2.0, 1.0);
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 0..200 {
                let kf = k as f64;
                term *= (a + kf) / (b + kf) * x / (kf + 1.0);
                sum += term;
            }
            (-x as f64).exp() * sum
        };
        let v = confluent_m(0.5, 2.0, -1.0).unwrap();
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
        assert!(confluent_m(1.0, -2.0, 0.5).is_err());
        assert!(confluent_m(1.0, 1.0, 501.0).is_err());
    }

    #[test]
    fn periodic_quadrature_basics() {
        use std::f64::consts::TAU;
        let n = 64;
        let flat: Vec<f64> = (0..n).map(|_| 1.0 / TAU).collect();
        assert!((periodic_quadrature(&flat) - 1.0).abs() < 1e-14);
        let cos2: Vec<f64> = (0..n)
            .map(|j| (TAU * j as f64 / n as f64).cos().powi(2))
            .collect();
        assert!((periodic_quadrature(&cos2) - PI).abs() < 1e-12);
        // Nyquist-edge aliasing: cos(33 φ) on 64 points aliases to cos(31 φ)
        // grid values; rule returns 2π times the aliased mean.
        let c33: Vec<f64> = (0..n)
            .map(|j| (33.0 * TAU * j as f64 / n as f64).cos())
            .collect();
        let mean = c33.iter().sum::<f64>() / n as f64;
        assert!((periodic_quadrature(&c33) - TAU * mean).abs() < 1e-12);
    }

    #[test]
    fn gauss_laguerre_moments() {
        let (x, w) = gauss_laguerre(32, 0.0).unwrap();
        // ∫ e^{-x} x^k = k!
        for k in 0..8usize {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let exact = (1..=k).map(|j| j as f64).product::<f64>().max(1.0);
            assert!((q - exact).abs() < 1e-10 * exact, "k={k}: {q} vs {exact}");
        }
        // alpha = 1/2: ∫ e^{-x} x^{1/2} = Γ(3/2)
        let (x, w) = gauss_laguerre(16, 0.5).unwrap();
        let q: f64 = w.iter().sum();
        assert!((q - PI.sqrt() / 2.0).abs() < 1e-12, "{q}");
        let _ = x;
    }

    proptest! {
        #[test]
        // ranges keep exp(lnΓa - lnΓb) away from f64 underflow
        fn gamma_ratio_recurrence(a in 0.5f64..100.0, b in 0.5f64..100.0) {
            let r1 = gamma_ratio(a + 1.0, b).unwrap();
            let r0 = gamma_ratio(a, b).unwrap();
            prop_assert!((r1 / r0 - a).abs() < 1e-12 * a);
        }

        #[test]
        fn periodic_quadrature_kills_harmonics(k in 1usize..31, n in 64usize..128) {
            use std::f64::consts::TAU;
            let s: Vec<f64> = (0..n).map(|j| (k as f64 * TAU * j as f64 / n as f64).cos()).collect();
            prop_assert!(periodic_quadrature(&s).abs() < 1e-12);
        }
    }
}
