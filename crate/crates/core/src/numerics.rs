//! Minimal dense complex linear-algebra kernel: dominant singular triple,
//! triangular and guarded general inversion, Hermitian eigendecomposition and
//! Cholesky factorization for the small matrices the precoders work with.

use crate::mat::{dot_conj, norm2, normalize, scale_vec, C64, CMat};
use thiserror::Error;

/// Default condition-number guard; double precision keeps roughly eight
/// digits of headroom beyond it.
pub const DEFAULT_COND_LIMIT: f64 = 1e8;

const POWER_ITER_BUDGET: usize = 2000;
const JACOBI_SWEEP_BUDGET: usize = 100;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("iteration budget exhausted after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix is numerically singular")]
    Singular,
    #[error("condition estimate {estimate:.3e} exceeds limit {limit:.3e}")]
    IllConditioned { estimate: f64, limit: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Largest singular value with unit left/right singular vectors.
///
/// The phase is fixed deterministically: the entry of `left` with the largest
/// modulus is real and nonnegative, `right` rotated consistently, so repeated
/// calls on the same matrix return bitwise identical triples.
#[derive(Debug, Clone)]
pub struct SingularTriple {
    pub sigma: f64,
    pub left: Vec<C64>,
    pub right: Vec<C64>,
}

/// Dominant singular triple of a complex matrix.
///
/// Runs power iteration on the smaller Gram matrix and falls back to a full
/// Jacobi eigendecomposition when the iteration stalls (near-degenerate
/// leading singular values).
pub fn max_singular_triple(a: &CMat) -> Result<SingularTriple, NumericsError> {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= 1 && n >= 1, "matrix must be at least 1x1");

    if a.fro_norm() < 1e-300 {
        let mut left = vec![C64::new(0.0, 0.0); m];
        let mut right = vec![C64::new(0.0, 0.0); n];
        left[0] = C64::new(1.0, 0.0);
        right[0] = C64::new(1.0, 0.0);
        return Ok(SingularTriple { sigma: 0.0, left, right });
    }

    let iterate_left = m <= n;
    let gram = if iterate_left {
        a.mul(&a.adjoint())
    } else {
        a.adjoint().mul(a)
    };

    let x = match power_iterate(&gram) {
        Some(x) => x,
        None => {
            // Near-tied leading eigenvalues; the Jacobi route has no gap
            // dependence.
            let (_, vecs) = hermitian_eigen(&gram)?;
            vecs.col(0)
        }
    };

    let (sigma, left, right) = if iterate_left {
        let w = a.adjoint_matvec(&x);
        let sigma = norm2(&w);
        if sigma < 1e-300 {
            return Err(NumericsError::NoConvergence { iterations: POWER_ITER_BUDGET });
        }
        (sigma, x, scale_vec(&w, C64::new(1.0 / sigma, 0.0)))
    } else {
        let w = a.matvec(&x);
        let sigma = norm2(&w);
        if sigma < 1e-300 {
            return Err(NumericsError::NoConvergence { iterations: POWER_ITER_BUDGET });
        }
        (sigma, scale_vec(&w, C64::new(1.0 / sigma, 0.0)), x)
    };

    Ok(fix_phase(sigma, left, right))
}

fn fix_phase(sigma: f64, mut left: Vec<C64>, mut right: Vec<C64>) -> SingularTriple {
    let mut imax = 0;
    let mut best = -1.0;
    for (i, z) in left.iter().enumerate() {
        let nz = z.norm();
        if nz > best {
            best = nz;
            imax = i;
        }
    }
    if best > 0.0 {
        let phase = left[imax] / C64::new(best, 0.0);
        let rot = phase.conj();
        for z in &mut left {
            *z *= rot;
        }
        for z in &mut right {
            *z *= rot;
        }
        // Kill the residual imaginary part left by the rotation.
        left[imax] = C64::new(left[imax].re.abs(), 0.0);
    }
    SingularTriple { sigma, left, right }
}

/// Power iteration on a Hermitian PSD matrix; returns the dominant unit
/// eigenvector or `None` when the budget runs out before the residual
/// criterion is met.
fn power_iterate(b: &CMat) -> Option<Vec<C64>> {
    let n = b.rows();
    if n == 1 {
        return Some(vec![C64::new(1.0, 0.0)]);
    }
    // Deterministic start with nonuniform entries so it is not orthogonal to
    // the dominant eigenvector of any matrix met in practice.
    let seed: Vec<C64> = (0..n)
        .map(|i| {
            let t = (i + 1) as f64;
            C64::new(1.0 + 0.3 * (1.7 * t).cos(), 0.2 * (0.9 * t).sin())
        })
        .collect();
    let mut x = normalize(&seed)?;

    for _ in 0..POWER_ITER_BUDGET {
        let y = b.matvec(&x);
        let theta = dot_conj(&x, &y).re;
        let ny = norm2(&y);
        if ny < 1e-300 {
            // Zero operator: any unit vector is fine.
            return Some(x);
        }
        let mut resid = 0.0f64;
        for (yi, xi) in y.iter().zip(&x) {
            resid += (yi - xi * C64::new(theta, 0.0)).norm_sqr();
        }
        x = scale_vec(&y, C64::new(1.0 / ny, 0.0));
        if resid.sqrt() <= 1e-12 * theta.abs().max(1e-300) {
            return Some(x);
        }
    }
    None
}

/// Inverse of a lower-triangular matrix by forward substitution per column.
/// The strict upper triangle of the result is exactly zero.
pub fn invert_lower_triangular(l: &CMat, cond_limit: f64) -> Result<CMat, NumericsError> {
    let n = l.rows();
    assert_eq!(n, l.cols(), "triangular inverse needs a square matrix");
    let max_diag = (0..n).map(|i| l[(i, i)].norm()).fold(0.0, f64::max);
    if max_diag == 0.0 {
        return Err(NumericsError::Singular);
    }
    for i in 0..n {
        if l[(i, i)].norm() < 1e-12 * max_diag {
            return Err(NumericsError::Singular);
        }
    }

    let mut inv = CMat::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let mut s = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            for k in j..i {
                s -= l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = s / l[(i, i)];
        }
    }

    let estimate = l.norm_one() * inv.norm_one();
    if estimate > cond_limit {
        return Err(NumericsError::IllConditioned { estimate, limit: cond_limit });
    }
    Ok(inv)
}

/// General inverse guarded by a condition estimate.
///
/// Partial-pivot LU followed by one Newton refinement pass; the refined
/// inverse keeps the residual well below 1e-8 anywhere under the guard.
pub fn guarded_inverse(a: &CMat, cond_limit: f64) -> Result<CMat, NumericsError> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "inverse needs a square matrix");
    let scale = a.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return Err(NumericsError::Singular);
    }

    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pivot = k;
        let mut best = lu[(k, k)].norm();
        for i in k + 1..n {
            let v = lu[(i, k)].norm();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best < 1e-14 * scale {
            return Err(NumericsError::Singular);
        }
        if pivot != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = tmp;
            }
            perm.swap(k, pivot);
        }
        let pk = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pk;
            lu[(i, k)] = f;
            for j in k + 1..n {
                let sub = f * lu[(k, j)];
                lu[(i, j)] -= sub;
            }
        }
    }

    let mut inv = CMat::zeros(n, n);
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        for (i, c) in col.iter_mut().enumerate() {
            *c = if perm[i] == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        }
        for i in 1..n {
            for k in 0..i {
                let sub = lu[(i, k)] * col[k];
                col[i] -= sub;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let sub = lu[(i, k)] * col[k];
                col[i] -= sub;
            }
            col[i] /= lu[(i, i)];
        }
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }

    // One refinement step: X <- X + X (I - A X).
    let mut resid = a.mul(&inv).scale(C64::new(-1.0, 0.0));
    for i in 0..n {
        resid[(i, i)] += C64::new(1.0, 0.0);
    }
    inv = inv.add(&inv.mul(&resid));

    let estimate = a.norm_one() * inv.norm_one();
    if estimate > cond_limit {
        return Err(NumericsError::IllConditioned { estimate, limit: cond_limit });
    }
    Ok(inv)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in descending order and the matching unit
/// eigenvectors as columns.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat), NumericsError> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigendecomposition needs a square matrix");
    // Symmetrize to shed tiny Hermiticity violations from accumulation.
    let mut w = CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut vecs = CMat::identity(n);
    let fro = w.fro_norm().max(1e-300);

    for _sweep in 0..JACOBI_SWEEP_BUDGET {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += w[(i, j)].norm_sqr();
                }
            }
        }
        if off.sqrt() <= 1e-14 * fro {
            let mut order: Vec<usize> = (0..n).collect();
            let vals: Vec<f64> = (0..n).map(|i| w[(i, i)].re).collect();
            order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
            let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
            let sorted_vecs = CMat::from_fn(n, n, |i, j| vecs[(i, order[j])]);
            return Ok((sorted_vals, sorted_vecs));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let alpha = apq / C64::new(r, 0.0);
                let app = w[(p, p)].re;
                let aqq = w[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let cs = C64::new(c, 0.0);
                let s_pos = C64::new(s, 0.0) * alpha; // used with e^{+i alpha}
                let s_neg = C64::new(s, 0.0) * alpha.conj();

                // Rows p, q: J^H W.
                for j in 0..n {
                    let wp = w[(p, j)];
                    let wq = w[(q, j)];
                    w[(p, j)] = cs * wp - s_pos * wq;
                    w[(q, j)] = s_neg * wp + cs * wq;
                }
                // Columns p, q: W J.
                for i in 0..n {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = cs * wp - s_neg * wq;
                    w[(i, q)] = s_pos * wp + cs * wq;
                }
                // Restore exact structure on the rotated block.
                w[(p, q)] = C64::new(0.0, 0.0);
                w[(q, p)] = C64::new(0.0, 0.0);
                w[(p, p)] = C64::new(w[(p, p)].re, 0.0);
                w[(q, q)] = C64::new(w[(q, q)].re, 0.0);
                for i in 0..n {
                    let vp = vecs[(i, p)];
                    let vq = vecs[(i, q)];
                    vecs[(i, p)] = cs * vp - s_neg * vq;
                    vecs[(i, q)] = s_pos * vp + cs * vq;
                }
            }
        }
    }
    Err(NumericsError::NoConvergence { iterations: JACOBI_SWEEP_BUDGET })
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky_lower(a: &CMat) -> Result<CMat, NumericsError> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "Cholesky needs a square matrix");
    let mut l = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            if i == j {
                let d = s.re;
                if !(d > 0.0) || s.im.abs() > 1e-8 * d.abs().max(1.0) {
                    return Err(NumericsError::NotPositiveDefinite);
                }
                l[(i, j)] = C64::new(d.sqrt(), 0.0);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// log2 det of a Hermitian positive-definite matrix via Cholesky.
pub fn logdet2_hermitian_pd(a: &CMat) -> Result<f64, NumericsError> {
    let l = cholesky_lower(a)?;
    let mut acc = 0.0;
    for i in 0..l.rows() {
        acc += l[(i, i)].re.log2();
    }
    Ok(2.0 * acc)
}
