//! Independent reference computations used by the integration and
//! acceptance tests. None of these call into the code they check.

#![allow(dead_code)]

use nalgebra::DMatrix;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
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
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

/// `inf_{|θ−θ0| ≥ δ} ∫_0^T |x0 e^{θt} − x0 e^{θ0 t}| dt` by quadrature at
/// each point of a scan extending `reach` beyond `θ0 ± δ` on both sides.
/// Returns the minimum and the scanned θ where it occurred.
pub fn g_delta_oracle(theta0: f64, x0: f64, delta: f64, horizon: f64, reach: f64, points: usize) -> (f64, f64) {
    let dist = |theta: f64| {
        let f = |t: f64| (x0 * (theta * t).exp() - x0 * (theta0 * t).exp()).abs();
        adaptive_simpson(&f, 0.0, horizon, 1e-14)
    };
    let mut best = (f64::INFINITY, f64::NAN);
    for k in 0..points {
        let off = delta + reach * k as f64 / (points - 1) as f64;
        for theta in [theta0 - off, theta0 + off] {
            let v = dist(theta);
            if v < best.0 {
                best = (v, theta);
            }
        }
    }
    best
}

/// Golden-section minimizer for a convex function on `[a, b]`.
pub fn golden_convex(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Argmin of `f` over `points` equispaced values in `[a, b]`, first on ties.
pub fn dense_scan(f: &dyn Fn(f64) -> f64, a: f64, b: f64, points: usize) -> (f64, f64) {
    let mut best = (f64::NAN, f64::INFINITY);
    for k in 0..points {
        let x = a + (b - a) * k as f64 / (points - 1) as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Trapezoid rule on an equispaced grid over `[0, horizon]`.
pub fn trapezoid(values: &[f64], horizon: f64) -> f64 {
    let n = values.len() - 1;
    let dt = horizon / n as f64;
    let inner: f64 = values[1..n].iter().sum();
    dt * (inner + 0.5 * (values[0] + values[n]))
}

/// Unbiased sample covariance of row vectors.
pub fn sample_covariance(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows[0].len();
    let m = rows.len() as f64;
    let mut mean = vec![0.0; n];
    for r in rows {
        for (a, b) in mean.iter_mut().zip(r) {
            *a += b / m;
        }
    }
    let mut cov = DMatrix::zeros(n, n);
    for r in rows {
        for i in 0..n {
            let di = r[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = cov[(i, j)] / (m - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Smallest eigenvalue of a symmetric matrix by dense decomposition.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_abs_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}
