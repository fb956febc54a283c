//! Small dense linear-algebra helpers shared across the engine.
//!
//! nalgebra provides the factorizations; these wrappers add the
//! conventions the engine relies on everywhere: eigenpairs sorted
//! ascending, explicit symmetrization, and a log-determinant that
//! reports the sign separately so it can double as a stability sentinel.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending and
/// eigenvector columns permuted to match.
pub fn sym_eigen_sorted<T: Scalar>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let values: Vec<T> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Replace `m` with its symmetric part (m + mᵀ)/2.
pub fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let half = T::cast(0.5);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

/// Largest absolute deviation from symmetry.
pub fn asymmetry<T: Scalar>(m: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// ‖mᵀm − I‖_max, the orthogonality defect.
pub fn orthogonality_defect<T: Scalar>(m: &DMatrix<T>) -> T {
    let gram = m.transpose() * m;
    let mut worst = T::zero();
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Sign and logarithm of |det| via LU with partial pivoting.
///
/// Returns `(sign, ln|det|)` with sign in {-1, 0, +1}. Accumulating the
/// logarithm from the U diagonal avoids overflow and keeps the sign
/// usable as a stability probe.
pub fn sign_log_det<T: Scalar>(m: &DMatrix<T>) -> (i8, T) {
    let n = m.nrows();
    let lu = m.clone().lu();
    let perm_det = lu.p().determinant::<T>();
    let mut sign: i8 = if perm_det > T::zero() { 1 } else { -1 };
    let mut log_abs = T::zero();
    let u = lu.u();
    for i in 0..n {
        let d = u[(i, i)];
        if d == T::zero() {
            return (0, T::cast(f64::NEG_INFINITY));
        }
        if d < T::zero() {
            sign = -sign;
        }
        log_abs += d.abs().ln();
    }
    (sign, log_abs)
}

/// Symmetric square root and inverse square root of a positive-definite
/// matrix. Returns `None` when any eigenvalue is not strictly positive.
pub fn sym_sqrt_pair<T: Scalar>(m: &DMatrix<T>) -> Option<(DMatrix<T>, DMatrix<T>)> {
    let (vals, vecs) = sym_eigen_sorted(m);
    if vals.iter().any(|&v| v <= T::zero()) {
        return None;
    }
    let n = m.nrows();
    let mut root = DMatrix::zeros(n, n);
    let mut inv_root = DMatrix::zeros(n, n);
    for (k, &val) in vals.iter().enumerate() {
        let s = val.sqrt();
        let col = vecs.column(k);
        for i in 0..n {
            for j in 0..n {
                root[(i, j)] += col[i] * s * col[j];
                inv_root[(i, j)] += col[i] * col[j] / s;
            }
        }
    }
    Some((root, inv_root))
}
