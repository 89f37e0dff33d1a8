//! Stationary vector of a row-stochastic matrix.

use alloc::vec;
use alloc::vec::Vec;

const DIRECT_LIMIT: usize = 200;

/// Solve `x = x P`, `sum x = 1` for an irreducible row-stochastic `p`
/// (row-major, `n x n`).
pub(crate) fn stationary_vector(p: &[f64], n: usize) -> Vec<f64> {
    if n <= DIRECT_LIMIT {
        direct(p, n)
    } else {
        power(p, n)
    }
}

fn direct(p: &[f64], n: usize) -> Vec<f64> {
    // (P^T - I) x = 0 with the last equation replaced by sum x = 1.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = p[j * n + i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    lu_solve(&mut a, &mut rhs, n);
    normalize(rhs)
}

/// Gaussian elimination with partial pivoting, in place. Result in `b`.
fn lu_solve(a: &mut [f64], b: &mut [f64], n: usize) {
    for k in 0..n {
        let mut piv = k;
        for r in k + 1..n {
            if a[r * n + k].abs() > a[piv * n + k].abs() {
                piv = r;
            }
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k];
        for r in k + 1..n {
            let f = a[r * n + k] / d;
            if f == 0.0 {
                continue;
            }
            for c in k..n {
                a[r * n + c] -= f * a[k * n + c];
            }
            b[r] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k * n + c] * b[c];
        }
        b[k] = s / a[k * n + k];
    }
}

fn power(p: &[f64], n: usize) -> Vec<f64> {
    // Lazy chain (P + I)/2 is aperiodic with the same stationary vector.
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..1_000_000 {
        next.iter_mut().zip(&x).for_each(|(y, xi)| *y = 0.5 * xi);
        for i in 0..n {
            let w = 0.5 * x[i];
            for j in 0..n {
                next[j] += w * p[i * n + j];
            }
        }
        let diff: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        core::mem::swap(&mut x, &mut next);
        if diff < 1e-15 {
            break;
        }
    }
    normalize(x)
}

fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}
