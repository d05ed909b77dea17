#![allow(dead_code)]

use htc_core::model::ModelParams;
use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite rule on the given panel edges.
pub fn composite_rule(edges: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

/// Six-index kernel by direct quadrature of the triple time convolution
/// of the four-time displacement correlator.
pub fn fbar_2m_quadrature(p: &ModelParams, s: Complex64) -> Complex64 {
    let d = p.derive();
    let i = Complex64::new(0.0, 1.0);
    let edges = [
        0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8, 25.6, 51.2,
    ];
    let (t, w) = composite_rule(&edges, 16);
    let l2 = p.lambda * p.lambda;
    let vib = Complex64::new(p.gamma_vib, p.nu);
    let prop1 = s + i * d.delta + d.gamma_perp;
    let prop2 = s + i * d.delta_c + d.kappa;
    let axis = |prop: Complex64| -> Vec<(Complex64, Complex64)> {
        t.iter()
            .zip(&w)
            .map(|(tau, wt)| (*wt * (-prop * *tau).exp(), (-vib * *tau).exp()))
            .collect()
    };
    let ax1 = axis(prop1);
    let ax2 = axis(prop2);
    let ax3 = axis(prop1);
    let mut total = Complex64::new(0.0, 0.0);
    for (w1, x) in &ax1 {
        let mut inner2 = Complex64::new(0.0, 0.0);
        for (w2, y) in &ax2 {
            let xy = x * y;
            let head = x - xy + y;
            let mut inner3 = Complex64::new(0.0, 0.0);
            for (w3, z) in &ax3 {
                let e = head + xy * z - y * z + z;
                inner3 += w3 * (l2 * (e - 2.0)).exp();
            }
            inner2 += w2 * inner3;
        }
        total += w1 * inner2;
    }
    total
}
