//! Smallest eigenvalue via Householder tridiagonalization and Sturm-sequence
//! bisection. Only the bottom of the spectrum is ever needed here, so no
//! eigenvectors are formed.

use super::SymMatrix;
use crate::error::{Error, Result};

/// Reduce `m` to a similar symmetric tridiagonal matrix.
///
/// Returns `(diagonal, sub_diagonal)` with `sub_diagonal.len() == n − 1`
/// (empty for `n ≤ 1`).
pub fn tridiagonalize(m: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let mut diag = vec![0.0; n];
    let mut sub = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(1) {
        // Column k below the diagonal.
        let tail = k + 1;
        let norm = (tail..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 || tail == n - 1 {
            diag[k] = a[k * n + k];
            sub[k] = a[tail * n + k];
            continue;
        }
        let x0 = a[tail * n + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in tail..n {
            v[i] = a[i * n + k];
        }
        v[tail] -= alpha;
        let vnorm = (tail..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        diag[k] = a[k * n + k];
        sub[k] = alpha;
        if vnorm == 0.0 {
            continue;
        }
        for x in &mut v[tail..n] {
            *x /= vnorm;
        }
        // p = A22 v, K = vᵀp, q = p − K v; A22 ← A22 − 2(v qᵀ + q vᵀ).
        for i in tail..n {
            let row = &a[i * n + tail..i * n + n];
            p[i] = row.iter().zip(&v[tail..n]).map(|(x, y)| x * y).sum();
        }
        let kk: f64 = (tail..n).map(|i| v[i] * p[i]).sum();
        for i in tail..n {
            p[i] -= kk * v[i];
        }
        for i in tail..n {
            let (vi, qi) = (v[i], p[i]);
            let row = &mut a[i * n + tail..i * n + n];
            for (j, x) in row.iter_mut().enumerate() {
                let jj = tail + j;
                *x -= 2.0 * (vi * p[jj] + qi * v[jj]);
            }
        }
    }
    if n > 0 {
        diag[n - 1] = a[(n - 1) * n + (n - 1)];
    }
    (diag, sub)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(diag: &[f64], sub: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let off = if i == 0 { 0.0 } else { sub[i - 1] * sub[i - 1] / q };
        q = diag[i] - x - off;
        if q == 0.0 {
            // An eigenvalue exactly at x is not strictly below it.
            q = f64::EPSILON * (x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bracket `[lo, hi]` around the smallest eigenvalue, with no eigenvalue
/// below `lo`, narrowed until `hi − lo ≤ width`.
fn bracket_min(diag: &[f64], sub: &[f64], width: f64) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { sub[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { sub[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    // Gershgorin discs are closed; nudge outward so the counts are strict.
    let pad = f64::EPSILON * (lo.abs().max(hi.abs()) + 1.0) * 4.0;
    lo -= pad;
    hi += pad;
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, sub, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

fn checked_tridiagonal(m: &SymMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    if m.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if m.dim() == 0 {
        return Err(Error::invalid("smallest eigenvalue of an empty matrix"));
    }
    Ok(tridiagonalize(m))
}

fn eigen_scale(m: &SymMatrix) -> f64 {
    m.max_abs().max(1.0)
}

/// Smallest eigenvalue of `m`, accurate to `tol·max(1, scale)` where scale is
/// the largest absolute entry.
pub fn min_eigenvalue(m: &SymMatrix, tol: f64) -> Result<f64> {
    let (d, e) = checked_tridiagonal(m)?;
    let (lo, hi) = bracket_min(&d, &e, tol.max(0.0) * eigen_scale(m));
    Ok(0.5 * (lo + hi))
}

/// Return `m` if it is PSD, otherwise `m + (|λ_min| + eps)·I`.
///
/// The shift uses a certified lower bound on `λ_min`, so the result is PSD
/// up to rounding in the Sturm count.
pub fn psd_repair(m: &SymMatrix, eps: f64) -> Result<SymMatrix> {
    if m.dim() == 0 {
        return Ok(m.clone());
    }
    let (d, e) = checked_tridiagonal(m)?;
    if sturm_count(&d, &e, 0.0) == 0 {
        return Ok(m.clone());
    }
    let (lo, _) = bracket_min(&d, &e, 1e-15 * eigen_scale(m));
    Ok(m.shifted(-lo.min(0.0) + eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cyclic Jacobi eigenvalues, used only as an oracle.
    fn jacobi_eigenvalues(m: &SymMatrix) -> Vec<f64> {
        let n = m.dim();
        let mut a = m.as_slice().to_vec();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j].powi(2))
                .sum();
            if off < 1e-28 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-3.0..3.0);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix::new(n, data).unwrap()
    }

    #[test]
    fn hand_cases() {
        assert_abs_diff_eq!(min_eigenvalue(&SymMatrix::identity(4), 1e-14).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            min_eigenvalue(&SymMatrix::from_diag(&[3.0, -2.0]), 1e-14).unwrap(),
            -2.0,
            epsilon = 1e-12
        );
        let m = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(min_eigenvalue(&m, 1e-14).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(min_eigenvalue(&SymMatrix::from_diag(&[7.5]), 1e-14).unwrap(), 7.5, epsilon = 1e-12);
    }

    #[test]
    fn matches_jacobi_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=25 {
            for _ in 0..3 {
                let m = random_sym(&mut rng, n);
                let want = jacobi_eigenvalues(&m)[0];
                let got = min_eigenvalue(&m, 1e-14).unwrap();
                assert!((got - want).abs() < 1e-10, "n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn tridiagonal_form_preserves_trace_and_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_sym(&mut rng, 12);
        let (d, e) = tridiagonalize(&m);
        let tr: f64 = d.iter().sum();
        assert_abs_diff_eq!(tr, m.diag().iter().sum::<f64>(), epsilon = 1e-10);
        let fro_t: f64 = d.iter().map(|x| x * x).sum::<f64>() + 2.0 * e.iter().map(|x| x * x).sum::<f64>();
        let fro_m: f64 = m.as_slice().iter().map(|x| x * x).sum();
        assert_abs_diff_eq!(fro_t, fro_m, epsilon = 1e-9);
    }

    #[test]
    fn repair_cases() {
        let i2 = SymMatrix::identity(2);
        assert_eq!(psd_repair(&i2, 1e-6).unwrap(), i2);
        let m = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        let r = psd_repair(&m, 0.0).unwrap();
        let want = SymMatrix::from_rows(&[[2.0, 2.0], [2.0, 2.0]]).unwrap();
        assert!(r.max_abs_diff(&want) < 1e-12);
        let z = SymMatrix::from_diag(&[0.0, 0.0]);
        assert_eq!(psd_repair(&z, 1e-6).unwrap(), z);
    }

    #[test]
    fn repair_keeps_off_diagonal_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [3, 8, 20] {
            let m = random_sym(&mut rng, n);
            let r = psd_repair(&m, 0.0).unwrap();
            assert!(min_eigenvalue(&r, 1e-14).unwrap() >= -1e-10);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        assert_eq!(r.get(i, j), m.get(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        let m = SymMatrix::symmetrized(1, vec![f64::INFINITY]);
        assert_eq!(min_eigenvalue(&m, 1e-12), Err(Error::NonFinite));
    }
}
