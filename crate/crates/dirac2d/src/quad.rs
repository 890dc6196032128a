//! One- and two-dimensional quadrature primitives.
//!
//! Level-curve integrals use composite Gauss-Legendre panels whose node
//! counts the caller picks per segment. Torus integrals of bounded
//! integrands use midpoint tensor grids (periodicity makes them accurate
//! and keeps grid symmetries exact). An adaptive Simpson rule serves as an
//! independent cross-check oracle in tests.

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on P_n with the Chebyshev-angle initial guess; converges
/// to machine precision in a handful of steps for any practical n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// ∫_a^b f dx by a single n-node Gauss-Legendre panel.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        s += wi * f(mid + half * xi);
    }
    s * half
}

/// Composite Gauss-Legendre over consecutive segments of `breaks`.
pub fn integrate_gl_panels(f: impl Fn(f64) -> f64, breaks: &[f64], n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut total = 0.0;
    for seg in breaks.windows(2) {
        let mid = 0.5 * (seg[0] + seg[1]);
        let half = 0.5 * (seg[1] - seg[0]);
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + half * xi);
        }
        total += s * half;
    }
    total
}

/// Adaptive Simpson with absolute tolerance, used as a cross-check oracle.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Midpoint rule on an n×n tensor grid over the unit torus [0,1)².
pub fn midpoint_torus_2d(f: impl Fn(f64, f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        let mut row = 0.0;
        for j in 0..n {
            let y = (j as f64 + 0.5) * h;
            row += f(x, y);
        }
        s += row;
    }
    s * h * h
}
