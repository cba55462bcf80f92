//! Closed-form reference values used by `verify`.

/// Sloshing eigenvalue `k tanh(k h)` of a closed tank of half-length `lx`, `k = n pi / (2 lx)`.
pub fn sloshing_eigenvalue(depth: f64, lx: f64, n: usize) -> f64 {
    let k = n as f64 * std::f64::consts::PI / (2.0 * lx);
    k * (k * depth).tanh()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First positive root of `g` found by scanning `(0, max]` in steps of `step`.
fn first_root(g: impl Fn(f64) -> f64, step: f64, max: f64) -> Option<f64> {
    let mut a = step;
    let mut ga = g(a);
    while a < max {
        let b = a + step;
        let gb = g(b);
        if ga == 0.0 || (ga < 0.0) != (gb < 0.0) {
            return Some(bisect(&g, a, b));
        }
        a = b;
        ga = gb;
    }
    None
}

/// First clamped-free root of `1 + cos(b) cosh(b) = 0`.
pub fn cantilever_root() -> f64 {
    first_root(|b| 1.0 + b.cos() * b.cosh(), 1e-3, 10.0).expect("root in (0, 10)")
}

/// Fundamental frequency (rad/s) of a uniform clamped beam with tip mass `m` and inertia `j`.
pub fn cantilever_tip_frequency(rho: f64, ei: f64, length: f64, m: f64, j: f64) -> f64 {
    // W = C (cos - cosh) + D (sin - sinh) in b = beta y; tip rows EI W''' + m w^2 W = 0, EI W'' - J w^2 W' = 0.
    let det = |b: f64| {
        let beta = b / length;
        let omega2 = ei * beta.powi(4) / rho;
        let (s, c, sh, ch) = (b.sin(), b.cos(), b.sinh(), b.cosh());
        let w = [c - ch, s - sh];
        let w1 = [beta * (-s - sh), beta * (c - ch)];
        let w2 = [beta * beta * (-c - ch), beta * beta * (-s - sh)];
        let w3 = [beta.powi(3) * (s - sh), beta.powi(3) * (-c - ch)];
        let r1 = [ei * w3[0] + m * omega2 * w[0], ei * w3[1] + m * omega2 * w[1]];
        let r2 = [ei * w2[0] - j * omega2 * w1[0], ei * w2[1] - j * omega2 * w1[1]];
        // normalise to keep the scan well-scaled
        (r1[0] * r2[1] - r1[1] * r2[0]) / (ch * ch * beta.powi(5) * ei * ei)
    };
    let b = first_root(det, 1e-4, 10.0).expect("tip-mass root in (0, 10)");
    let beta = b / length;
    beta * beta * (ei / rho).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_roots() {
        assert!((cantilever_root() - 1.875_104_068_711_961).abs() < 1e-10);
        let bare = cantilever_tip_frequency(1.0, 1.0, 1.0, 0.0, 0.0);
        assert!((bare - 1.875_104_068_711_961f64.powi(2)).abs() < 1e-8);
        // tip mass equal to the beam mass
        let tip = cantilever_tip_frequency(1.0, 1.0, 1.0, 1.0, 0.0);
        assert!((tip.sqrt() - 1.247_9).abs() < 1e-3, "{}", tip.sqrt());
    }

    #[test]
    fn sloshing_limits() {
        let deep = sloshing_eigenvalue(1e3, 1.0, 2);
        assert!((deep - std::f64::consts::PI).abs() < 1e-12);
    }
}
