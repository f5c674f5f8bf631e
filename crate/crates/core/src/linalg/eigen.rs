//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! implicit QL iterations (the classic EISPACK tred2/tql2 pair).
//!
//! The working array holds the transposed eigenvector matrix so that every
//! inner loop runs over contiguous memory.

use crate::error::{Error, Result};
use crate::linalg::dense::{axpy, dot, Matrix};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// Row `l` is the unit eigenvector belonging to `values[l]`.
    pub vectors: Matrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Reassembles `Σ_l φ(λ_l) y_l y_lᵀ`.
    pub fn reconstruct(&self, phi: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        let mut scaled = vec![T::zero(); n];
        for (l, &lam) in self.values.iter().enumerate() {
            let w = phi(lam);
            if w == T::zero() {
                continue;
            }
            let y = self.vectors.row(l);
            for (s, &v) in scaled.iter_mut().zip(y) {
                *s = w * v;
            }
            for i in 0..n {
                let yi = y[i];
                if yi != T::zero() {
                    axpy(yi, &scaled, out.row_mut(i));
                }
            }
        }
        out
    }

    /// `Σ_l φ(λ_l) y_l (y_lᵀ v)`.
    pub fn apply(&self, phi: impl Fn(T) -> T, v: &[T]) -> Vec<T> {
        let n = self.values.len();
        assert_eq!(v.len(), n);
        let mut out = vec![T::zero(); n];
        for (l, &lam) in self.values.iter().enumerate() {
            let y = self.vectors.row(l);
            let c = phi(lam) * dot(y, v);
            if c != T::zero() {
                axpy(c, y, &mut out);
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix. Only the lower triangle is read.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    if !a.is_square() {
        return Err(Error::dim(format!("eigen of a {}x{} matrix", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::numerical("eigen of a matrix with non-finite entries"));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(SymmetricEigen { values: vec![], vectors: Matrix::zeros(0, 0) });
    }
    // w[c*n + r] plays the role of V[r][c]; start from the lower triangle mirrored.
    let mut w = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            w[j * n + i] = a[(i, j)];
            w[i * n + j] = a[(i, j)];
        }
    }
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut w, &mut d, &mut e);
    tql2(n, &mut w, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| d[p].partial_cmp(&d[q]).expect("finite eigenvalues").then(p.cmp(&q)));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &k) in order.iter().enumerate() {
        vectors.row_mut(dst).copy_from_slice(&w[k * n..(k + 1) * n]);
    }
    Ok(SymmetricEigen { values, vectors })
}

fn tred2<T: Real>(n: usize, w: &mut [T], d: &mut [T], e: &mut [T]) {
    // V[r][c] == w[c*n + r]
    macro_rules! v {
        ($r:expr, $c:expr) => {
            w[($c) * n + ($r)]
        };
    }
    for j in 0..n {
        d[j] = v!(n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale = scale + d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v!(i - 1, j);
                v!(i, j) = T::zero();
                v!(j, i) = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] = d[k] / scale;
                h = h + d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v!(j, i) = f;
                g = e[j] + v!(j, j) * f;
                let col = &w[j * n..j * n + i];
                for k in j + 1..i {
                    g = g + col[k] * d[k];
                    e[k] = e[k] + col[k] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let col = &mut w[j * n..j * n + i];
                for k in j..i {
                    col[k] = col[k] - (f * e[k] + g * d[k]);
                }
                d[j] = v!(i - 1, j);
                v!(i, j) = T::zero();
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..n - 1 {
        v!(n - 1, i) = v!(i, i);
        v!(i, i) = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v!(k, i + 1) / h;
            }
            let (head, tail) = w.split_at_mut((i + 1) * n);
            let next = &tail[..=i];
            for j in 0..=i {
                let col = &mut head[j * n..j * n + i + 1];
                let g = dot(next, col);
                for k in 0..=i {
                    col[k] = col[k] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v!(k, i + 1) = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v!(n - 1, j);
        v!(n - 1, j) = T::zero();
    }
    v!(n - 1, n - 1) = T::one();
    e[0] = T::zero();
}

fn tql2<T: Real>(n: usize, w: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::numerical("QL iteration did not converge"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = w.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..];
                    let vi1 = &mut hi[..n];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
    Ok(())
}
