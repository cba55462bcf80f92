//! Reference computations shared by the integration tests.
//!
//! Written independently of the library's own reference module so the two can disagree.
#![allow(dead_code)]

use std::path::PathBuf;

use floatbeam::config::{RunConfig, DEFAULT_CONFIG};
use nalgebra::{DMatrix, DVector};

pub fn baseline() -> RunConfig {
    RunConfig::from_toml_str(DEFAULT_CONFIG).expect("baseline config parses")
}

pub fn baseline_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/baseline.toml")
}

/// Newton iteration on `1 + cos b cosh b` started near the first root.
pub fn cantilever_root() -> f64 {
    let mut b = 1.8f64;
    for _ in 0..60 {
        let f = 1.0 + b.cos() * b.cosh();
        let df = b.cos() * b.sinh() - b.sin() * b.cosh();
        b -= f / df;
    }
    b
}

pub fn bare_cantilever_frequency(rho: f64, ei: f64, length: f64) -> f64 {
    let b = cantilever_root();
    b * b / (length * length) * (ei / rho).sqrt()
}

/// Fundamental of a clamped beam with tip mass `m` and tip inertia `j`.
///
/// Four-coefficient shape `A cos + B sin + C cosh + D sinh` of `beta y`; the root of the 4x4 boundary
/// determinant is bracketed by a sign scan and bisected.
pub fn tip_mass_frequency(rho: f64, ei: f64, length: f64, m: f64, j: f64) -> f64 {
    let det = |b: f64| {
        let beta = b / length;
        let w2 = ei * beta.powi(4) / rho;
        let (s, c, sh, ch) = (b.sin(), b.cos(), b.sinh(), b.cosh());
        let w = [c, s, ch, sh];
        let d1 = [-s, c, sh, ch].map(|v| v * beta);
        let d2 = [-c, -s, ch, sh].map(|v| v * beta * beta);
        let d3 = [s, -c, sh, ch].map(|v| v * beta.powi(3));
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 0)] = 1.0;
        a[(0, 2)] = 1.0;
        a[(1, 1)] = 1.0;
        a[(1, 3)] = 1.0;
        for k in 0..4 {
            // shear: EI W''' + m w^2 W = 0; moment: EI W'' - J w^2 W' = 0
            a[(2, k)] = (ei * d3[k] + m * w2 * w[k]) / (ei * beta.powi(3) * ch);
            a[(3, k)] = (ei * d2[k] - j * w2 * d1[k]) / (ei * beta * beta * ch);
        }
        a.determinant()
    };
    let (mut lo, mut hi) = (0.05, 0.05);
    let mut f_lo = det(lo);
    loop {
        hi += 0.005;
        assert!(hi < 6.0, "no root bracketed");
        let f_hi = det(hi);
        if (f_hi < 0.0) != (f_lo < 0.0) {
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let f_mid = det(mid);
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi) / length;
    beta * beta * (ei / rho).sqrt()
}

/// Linear water-wave eigenvalue of mode `n` in a closed tank of length `2 lx`.
pub fn dispersion(depth: f64, lx: f64, n: usize) -> f64 {
    let k = std::f64::consts::PI * n as f64 / (2.0 * lx);
    k * (k * depth).tanh()
}

/// Ascending generalized eigenvalues of `a v = lambda b v` through `b = L L^T`.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let l = b.clone().cholesky().expect("b is SPD").l();
    let linv = l.clone().try_inverse().expect("L invertible");
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| x.total_cmp(y));
    values
}

/// `1/2 (y^T M y + x^T K x)` straight from the matrices.
pub fn quadratic_energy(m: &DMatrix<f64>, k: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    0.5 * (y.dot(&(m * y)) + x.dot(&(k * x)))
}

/// Work of the load `b f` over one step, midpoint rule on the velocity.
pub fn midpoint_work(b: &DMatrix<f64>, f_mid: &DVector<f64>, dt: f64, y0: &DVector<f64>, y1: &DVector<f64>) -> f64 {
    dt * (b * f_mid).dot(&((y0 + y1) * 0.5))
}

/// Dense gauge-fixed first-order matrix: position index `gauge` removed, `M^{-1}` by LU.
pub fn first_order_matrix(m: &DMatrix<f64>, g: &DMatrix<f64>, k: &DMatrix<f64>, gauge: Option<usize>) -> DMatrix<f64> {
    let n = m.nrows();
    let keep: Vec<usize> = (0..n).filter(|&i| Some(i) != gauge).collect();
    let p = keep.len();
    let lu = m.clone().lu();
    let k_cols = DMatrix::from_fn(n, p, |i, j| k[(i, keep[j])]);
    let mk = lu.solve(&k_cols).expect("M invertible");
    let mg = lu.solve(g).expect("M invertible");
    let mut a = DMatrix::zeros(p + n, p + n);
    for (r, &i) in keep.iter().enumerate() {
        a[(r, p + i)] = 1.0;
    }
    for i in 0..n {
        for j in 0..p {
            a[(p + i, j)] = -mk[(i, j)];
        }
        for j in 0..n {
            a[(p + i, p + j)] = -mg[(i, j)];
        }
    }
    a
}
