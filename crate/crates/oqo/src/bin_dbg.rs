use oqo::fock::*;
use oqo::special::*;
use num_complex::Complex64;
fn main() {
    // gauss-laguerre
    let (x, w) = gauss_laguerre(32, 0.0).unwrap();
    for k in 0..6usize {
        let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
        let exact = (1..=k).map(|j| j as f64).product::<f64>().max(1.0);
        println!("GL k={k}: {q} vs {exact}, relerr {:e}", (q-exact).abs()/exact);
    }
    // gamma ratio recurrence worst case
    let mut worst = 0f64;
    for a in [0.6, 5.0, 50.0, 150.0, 199.0] {
        for b in [0.7, 10.0, 120.0] {
            let r1 = gamma_ratio(a+1.0, b).unwrap();
            let r0 = gamma_ratio(a, b).unwrap();
            let e = (r1/r0 - a).abs()/a;
            if e > worst { worst = e; println!("gamma rec a={a} b={b}: relerr {:e}", e); }
        }
    }
    // displacement residuals
    let dim = 60;
    let d = displacement(1.3, -0.7, dim).unwrap();
    let ops = build_operators(dim).unwrap();
    let moved = d.adjoint() * &ops.q * &d;
    let mut want = ops.q.clone();
    for i in 0..dim { want[(i,i)] += Complex64::new(1.3, 0.0); }
    for frac in [0.5, 0.7, 0.8] {
        let n = (dim as f64 * frac) as usize;
        let diff = (moved.view((0,0),(n,n)) - want.view((0,0),(n,n))).iter().map(|z| z.norm()).fold(0.0, f64::max);
        println!("moved frac {frac}: {:e}", diff);
    }
    let d12 = displacement(0.8, -0.5, dim).unwrap() * displacement(-0.3, 0.9, dim).unwrap();
    let dd = displacement(0.5, 0.4, dim).unwrap();
    let phase = d12[(0,0)] / dd[(0,0)];
    let aligned = &dd * phase;
    for frac in [0.5, 0.7, 0.8] {
        let n = (dim as f64 * frac) as usize;
        let diff = (d12.view((0,0),(n,n)) - aligned.view((0,0),(n,n))).iter().map(|z| z.norm()).fold(0.0, f64::max);
        println!("comp frac {frac}: {:e}", diff);
    }
}
