//! Smallest eigenvalue of a dense symmetric matrix: Householder reduction to
//! tridiagonal form followed by Sturm-sequence bisection.

use nalgebra::DMatrix;

/// Diagonal and sub-diagonal of a tridiagonal matrix similar to `a`.
pub fn tridiagonalize(a: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut m: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x = |i: usize| m[(k + 1 + i) * n + k];
        let alpha = (0..len).map(|i| x(i) * x(i)).sum::<f64>().sqrt();
        if alpha == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let sign = if x(0) >= 0.0 { 1.0 } else { -1.0 };
        for (i, vi) in v[..len].iter_mut().enumerate() {
            *vi = x(i);
        }
        v[0] += sign * alpha;
        let beta = 2.0 / v[..len].iter().map(|t| t * t).sum::<f64>();
        off[k] = -sign * alpha;
        for i in 0..len {
            let row = &m[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            p[i] = beta * row.iter().zip(&v[..len]).map(|(r, t)| r * t).sum::<f64>();
        }
        let half = 0.5 * beta * p[..len].iter().zip(&v[..len]).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..len {
            p[i] -= half * v[i];
        }
        for i in 0..len {
            let row = &mut m[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            let (vi, wi) = (v[i], p[i]);
            for (j, slot) in row.iter_mut().enumerate() {
                *slot -= vi * p[j] + wi * v[j];
            }
        }
    }
    if n >= 2 {
        off[n - 2] = m[(n - 1) * n + n - 2];
    }
    let diag = (0..n).map(|i| m[i * n + i]).collect();
    (diag, off)
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let scale = diag
        .iter()
        .map(|d| d.abs())
        .chain(off.iter().map(|e| e.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] / q };
        q = diag[i] - x - coupling;
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix.
pub fn tridiagonal_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * width;
    hi += 1e-12 * width;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn smallest_eigenvalue(a: &DMatrix<f64>) -> f64 {
    assert!(
        a.is_square() && a.nrows() > 0,
        "eigenvalue of an empty or non-square matrix"
    );
    let (diag, off) = tridiagonalize(a);
    tridiagonal_eigenvalue(&diag, &off, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &m + m.transpose()
    }

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -2.0, 5.0]));
        assert!((smallest_eigenvalue(&a) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn full_spectrum_matches_dense_oracle() {
        let a = random_symmetric(40, 11);
        let (d, e) = tridiagonalize(&a);
        let mut oracle: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (k, want) in oracle.iter().enumerate() {
            let got = tridiagonal_eigenvalue(&d, &e, k);
            assert!((got - want).abs() < 1e-12 * 40.0, "k={k}: {got} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn smallest_matches_oracle(n in 1usize..60, seed in 0u64..1000) {
            let a = random_symmetric(n, seed);
            let want = a.clone().symmetric_eigen().eigenvalues.min();
            let got = smallest_eigenvalue(&a);
            prop_assert!((got - want).abs() < 1e-11 * (1.0 + want.abs()));
        }
    }
}
