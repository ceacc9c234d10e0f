//! Lowest eigenpair of a real symmetric tridiagonal matrix: Sturm-sequence
//! bisection for the eigenvalue, inverse iteration for the eigenvector.

/// Number of eigenvalues of T strictly below `x` (Sturm count via the
/// shifted LDLᵀ recurrence).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0;
    let mut d = diag[0] - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let b2 = off[i - 1] * off[i - 1];
        let denom = if d.abs() < 1e-300 { 1e-300_f64.copysign(d + 1e-300) } else { d };
        d = diag[i] - x - b2 / denom;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal, to absolute accuracy `tol`.
pub fn lowest_eigenvalue(diag: &[f64], off: &[f64], tol: f64) -> f64 {
    debug_assert_eq!(off.len() + 1, diag.len());
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let n = diag.len();
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { 0.0 })
            + (if i + 1 < n { off[i].abs() } else { 0.0 });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let mut a = lo;
    let mut b = hi;
    while b - a > tol.max((b.abs() + a.abs()) * 1e-15) {
        let m = 0.5 * (a + b);
        if sturm_count(diag, off, m) >= 1 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Solve (T − σ)y = rhs by tridiagonal LU with partial pivoting.
fn solve_shifted(diag: &[f64], off: &[f64], sigma: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // band storage: main d, super e, second super f (fill-in from pivoting)
    let mut d: Vec<f64> = diag.iter().map(|a| a - sigma).collect();
    let mut e: Vec<f64> = off.to_vec();
    e.push(0.0);
    let mut f = vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec(); // below-diagonal entries, consumed in elimination
    let mut y = rhs.to_vec();
    for i in 0..n - 1 {
        // rows at step i: Ri = (d[i], e[i], f[i]), Rj = (sub[i], d[i+1], e[i+1])
        if sub[i].abs() > d[i].abs() {
            let (a, b, c0) = (d[i], e[i], f[i]);
            d[i] = sub[i];
            e[i] = d[i + 1];
            f[i] = e[i + 1];
            sub[i] = a;
            d[i + 1] = b;
            e[i + 1] = c0;
            y.swap(i, i + 1);
        }
        let denom = if d[i].abs() < 1e-300 { 1e-300_f64.copysign(d[i] + 1e-300) } else { d[i] };
        let m = sub[i] / denom;
        d[i + 1] -= m * e[i];
        e[i + 1] -= m * f[i];
        y[i + 1] -= m * y[i];
    }
    // back substitution
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        if i + 1 < n {
            s -= e[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= f[i] * x[i + 2];
        }
        let denom = if d[i].abs() < 1e-300 { 1e-300_f64.copysign(d[i] + 1e-300) } else { d[i] };
        x[i] = s / denom;
    }
    x
}

/// Lowest eigenpair of the symmetric tridiagonal matrix, eigenvector
/// normalized to unit Euclidean norm.
pub fn lowest_eigenpair(diag: &[f64], off: &[f64], tol: f64) -> (f64, Vec<f64>) {
    let n = diag.len();
    if n == 1 {
        return (diag[0], vec![1.0]);
    }
    let mu = lowest_eigenvalue(diag, off, tol);
    // Inverse iteration with a slightly detuned shift; the detuning must be
    // tiny relative to the spectral gap, not the matrix norm, or the
    // iteration stops filtering (graded meshes have norms ~1e10 while the
    // low spectrum sits at O(1)).
    let sigma = mu - 1e-10 * (mu.abs() + 1.0);
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for (i, vi) in v.iter_mut().enumerate() {
        // symmetric start vectors can be orthogonal to the ground state
        *vi *= 1.0 + 0.01 * ((i * 2654435761) % 97) as f64 / 97.0;
    }
    for _ in 0..6 {
        let mut w = solve_shifted(diag, off, sigma, &v);
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        for x in &mut w {
            *x /= norm;
        }
        v = w;
    }
    // Rayleigh quotient of the converged vector
    let mut num = 0.0;
    for i in 0..n {
        num += diag[i] * v[i] * v[i];
        if i + 1 < n {
            num += 2.0 * off[i] * v[i] * v[i + 1];
        }
    }
    (num, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_laplacian_ground_state() {
        // 1D Dirichlet Laplacian on n interior nodes, spacing h: lowest
        // eigenvalue 2(1 − cos(π/(n+1)))/h², eigenvector sin(π i/(n+1)).
        let n = 200;
        let h = 0.1;
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let (mu, v) = lowest_eigenpair(&diag, &off, 1e-12);
        let expect = 2.0 * (1.0 - (std::f64::consts::PI / (n as f64 + 1.0)).cos()) / (h * h);
        assert!((mu - expect).abs() < 1e-8 * expect);
        let pi = std::f64::consts::PI;
        let amp: f64 = (2.0 / (n as f64 + 1.0)).sqrt();
        let sign = v[0].signum();
        for i in 0..n {
            let exact = amp * (pi * (i as f64 + 1.0) / (n as f64 + 1.0)).sin();
            assert!((sign * v[i] - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn random_matrix_against_residual() {
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + ((i * 13) % 7) as f64 * 0.3).collect();
        let (mu, v) = lowest_eigenpair(&diag, &off, 1e-13);
        // residual ‖Tv − μv‖
        let mut res = 0.0;
        for i in 0..n {
            let mut tv = diag[i] * v[i];
            if i > 0 {
                tv += off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                tv += off[i] * v[i + 1];
            }
            res += (tv - mu * v[i]).powi(2);
        }
        assert!(res.sqrt() < 1e-8, "residual {}", res.sqrt());
        // and no eigenvalue below μ
        assert_eq!(sturm_count(&diag, &off, mu - 1e-6), 0);
    }
}
