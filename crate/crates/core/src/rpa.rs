//! Ring-resummation eigenvalue problem: assembly of the coupling
//! matrices over manifold states, the symplectic (Casida-form) solve,
//! and the plasmon-formula correlation energy.
//!
//! A_NM = ω_N δ_NM + Σ d_N[(p,r)] v_{pr,qs} ⟨0|q†s|M⟩ and
//! B_NM = Σ d_N[(p,r)] v_{pr,qs} ⟨M|q†s|0⟩. For real wavefunctions the
//! two contractions only differ by a within-pair transposition that the
//! kernel symmetry absorbs, but they are assembled through their own
//! code paths so the identity stays testable.

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

use crate::linalg;
use crate::manifold::ExcitationManifold;
use crate::partition::InteractionKernel;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RpaError {
    #[error("RPA solution is unstable: {0}")]
    Unstable(String),
    #[error("{0}")]
    Usage(String),
}

/// Imaginary parts below this threshold (Hartree) count as roundoff.
pub const STABILITY_TOL: f64 = 1e-10;

/// The coupled excitation/de-excitation blocks.
#[derive(Debug, Clone)]
pub struct RpaMatrices<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
}

impl<T: Scalar> RpaMatrices<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        assert_eq!(a.nrows(), b.nrows());
        assert_eq!(b.nrows(), b.ncols());
        Self { a, b }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

/// Assemble A and B over the manifold with the given coupling kernel.
/// Both matrices are symmetrized to remove contraction roundoff.
pub fn assemble_ab<T: Scalar, K: InteractionKernel<T>>(
    man: &ExcitationManifold<T>,
    kernel: &K,
) -> RpaMatrices<T> {
    let n = man.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for (i, sn) in man.states.iter().enumerate() {
        for (j, sm) in man.states.iter().enumerate() {
            if j < i {
                continue;
            }
            let mut acc_a = T::zero();
            let mut acc_b = T::zero();
            for &(p, r, dn) in &sn.d {
                for &(q, s, dm) in &sm.d {
                    // B couples ⟨M|q†s|0⟩ directly.
                    acc_b += dn * kernel.two_body(p, r, q, s) * dm;
                    // A couples the de-excitation ⟨0|q's'|M⟩ = d_M[(s',q')],
                    // i.e. the stored pair enters transposed.
                    acc_a += dn * kernel.two_body(p, r, s, q) * dm;
                }
            }
            a[(i, j)] = acc_a;
            a[(j, i)] = acc_a;
            b[(i, j)] = acc_b;
            b[(j, i)] = acc_b;
        }
        a[(i, i)] += sn.omega;
    }
    linalg::symmetrize(&mut a);
    linalg::symmetrize(&mut b);
    RpaMatrices { a, b }
}

/// Solution of the symplectic eigenvalue problem.
#[derive(Debug, Clone)]
pub struct RpaSolution<T: Scalar> {
    /// Positive-branch eigenvalues, ascending; empty when unstable.
    pub omega_rpa: Vec<T>,
    /// Eigenvector blocks of the positive branch (columns follow
    /// `omega_rpa`); empty when unstable.
    pub x: DMatrix<T>,
    pub y: DMatrix<T>,
    /// Eigenvalues of A alone, ascending.
    pub omega_tda: Vec<T>,
    /// All 2n eigenvalues (diagnostics; ±pairs when stable).
    pub full_spectrum: Vec<Complex<T>>,
    /// True when every eigenvalue is real and bounded away from zero.
    pub stable: bool,
    /// True when XᵀX − YᵀY = I and XᵀY − YᵀX = 0 hold to 1e-8.
    pub norm_ok: bool,
    /// Offending modes when unstable.
    pub unstable_modes: Vec<Complex<T>>,
}

fn normalization_flags<T: Scalar>(x: &DMatrix<T>, y: &DMatrix<T>) -> bool {
    if x.ncols() == 0 {
        return true;
    }
    let gram = x.transpose() * x - y.transpose() * y;
    let skew = x.transpose() * y - y.transpose() * x;
    let tol = T::cast(1e-8);
    let mut defect = T::zero();
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { T::one() } else { T::zero() };
            defect = defect.max((gram[(i, j)] - target).abs());
            defect = defect.max(skew[(i, j)].abs());
        }
    }
    defect <= tol
}

/// Solve the 2n×2n problem. If A−B is positive definite the symmetric
/// reduction (A−B)^{1/2} (A+B) (A−B)^{1/2} is used; otherwise the full
/// nonsymmetric spectrum is extracted and eigenvectors are recovered by
/// inverse iteration. Instability (complex or vanishing eigenvalues) is
/// flagged, never panicked on.
pub fn solve_rpa<T: Scalar>(m: &RpaMatrices<T>) -> RpaSolution<T> {
    let n = m.n();
    let (omega_tda, _) = linalg::sym_eigen_sorted(&m.a);
    if n == 0 {
        return RpaSolution {
            omega_rpa: Vec::new(),
            x: DMatrix::zeros(0, 0),
            y: DMatrix::zeros(0, 0),
            omega_tda,
            full_spectrum: Vec::new(),
            stable: true,
            norm_ok: true,
            unstable_modes: Vec::new(),
        };
    }
    let amb = &m.a - &m.b;
    let apb = &m.a + &m.b;

    // Positive-definiteness probe.
    let spd = amb.clone().cholesky().is_some();
    if spd {
        if let Some((root, inv_root)) = linalg::sym_sqrt_pair(&amb) {
            let mut mm = &root * &apb * &root;
            linalg::symmetrize(&mut mm);
            let (lams, z) = linalg::sym_eigen_sorted(&mm);
            if lams[0] > T::zero() {
                let mut x = DMatrix::zeros(n, n);
                let mut y = DMatrix::zeros(n, n);
                let mut omega = Vec::with_capacity(n);
                let half = T::cast(0.5);
                for k in 0..n {
                    let om = lams[k].sqrt();
                    omega.push(om);
                    let zk = z.column(k);
                    let xpy = &root * zk / om.sqrt();
                    let xmy = &inv_root * zk * om.sqrt();
                    for i in 0..n {
                        x[(i, k)] = half * (xpy[i] + xmy[i]);
                        y[(i, k)] = half * (xpy[i] - xmy[i]);
                    }
                }
                let mut full_spectrum: Vec<Complex<T>> =
                    omega.iter().map(|&o| Complex::new(o, T::zero())).collect();
                full_spectrum.extend(omega.iter().map(|&o| Complex::new(-o, T::zero())));
                let norm_ok = normalization_flags(&x, &y);
                return RpaSolution {
                    omega_rpa: omega,
                    x,
                    y,
                    omega_tda,
                    full_spectrum,
                    stable: true,
                    norm_ok,
                    unstable_modes: Vec::new(),
                };
            }
            // λ ≤ 0 despite the PD probe: report through the flag path.
            let mut unstable_modes = Vec::new();
            let mut full_spectrum = Vec::new();
            for &lam in &lams {
                if lam > T::zero() {
                    let om = lam.sqrt();
                    full_spectrum.push(Complex::new(om, T::zero()));
                    full_spectrum.push(Complex::new(-om, T::zero()));
                } else {
                    let om = (-lam).sqrt();
                    let mode = Complex::new(T::zero(), om);
                    unstable_modes.push(mode);
                    full_spectrum.push(mode);
                    full_spectrum.push(Complex::new(T::zero(), -om));
                }
            }
            return RpaSolution {
                omega_rpa: Vec::new(),
                x: DMatrix::zeros(n, 0),
                y: DMatrix::zeros(n, 0),
                omega_tda,
                full_spectrum,
                stable: false,
                norm_ok: false,
                unstable_modes,
            };
        }
    }
    solve_rpa_general(m, omega_tda)
}

/// Nonsymmetric fallback: eigenvalues from the real Schur form of
/// [[A, B], [−B, −A]], eigenvectors by shifted inverse iteration.
fn solve_rpa_general<T: Scalar>(m: &RpaMatrices<T>, omega_tda: Vec<T>) -> RpaSolution<T> {
    let n = m.n();
    let dim = 2 * n;
    let mut big = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            big[(i, j)] = m.a[(i, j)];
            big[(i, n + j)] = m.b[(i, j)];
            big[(n + i, j)] = -m.b[(i, j)];
            big[(n + i, n + j)] = -m.a[(i, j)];
        }
    }
    let eigs = big.clone().complex_eigenvalues();
    let tol = T::cast(STABILITY_TOL);
    let mut unstable_modes: Vec<Complex<T>> = Vec::new();
    for e in eigs.iter() {
        if e.im.abs() > tol || e.re.abs() <= tol {
            unstable_modes.push(*e);
        }
    }
    let full_spectrum: Vec<Complex<T>> = eigs.iter().copied().collect();
    if !unstable_modes.is_empty() {
        return RpaSolution {
            omega_rpa: Vec::new(),
            x: DMatrix::zeros(n, 0),
            y: DMatrix::zeros(n, 0),
            omega_tda,
            full_spectrum,
            stable: false,
            norm_ok: false,
            unstable_modes,
        };
    }

    let mut omega: Vec<T> = eigs
        .iter()
        .filter(|e| e.re > T::zero())
        .map(|e| e.re)
        .collect();
    omega.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if omega.len() != n {
        return RpaSolution {
            omega_rpa: Vec::new(),
            x: DMatrix::zeros(n, 0),
            y: DMatrix::zeros(n, 0),
            omega_tda,
            full_spectrum: full_spectrum.clone(),
            stable: false,
            norm_ok: false,
            unstable_modes: full_spectrum,
        };
    }

    // Inverse iteration per eigenvalue, Gram-Schmidt inside clusters.
    let mut x = DMatrix::zeros(n, n);
    let mut y = DMatrix::zeros(n, n);
    let cluster_tol = T::cast(1e-8);
    let mut k = 0;
    while k < n {
        let mut end = k + 1;
        while end < n && (omega[end] - omega[end - 1]).abs() < cluster_tol {
            end += 1;
        }
        let shift = omega[k] * (T::one() + T::cast(1e-9)) + T::cast(1e-12);
        let shifted = &big - DMatrix::identity(dim, dim) * shift;
        let lu = shifted.lu();
        let mut cluster: Vec<DVector<T>> = Vec::new();
        for member in k..end {
            let mut v = DVector::from_fn(dim, |i, _| {
                T::cast(((1 + i + member * 7) as f64 * 0.73).sin())
            });
            v /= v.norm();
            for _ in 0..6 {
                let mut w = lu.solve(&v).unwrap_or_else(|| v.clone());
                for prev in &cluster {
                    let proj = prev.dot(&w);
                    w -= prev * proj;
                }
                let nn = w.norm();
                if nn > T::cast(1e-300) {
                    w /= nn;
                }
                v = w;
            }
            cluster.push(v.clone());
            for i in 0..n {
                x[(i, member)] = v[i];
                y[(i, member)] = v[n + i];
            }
        }
        k = end;
    }

    // Metric normalization xᵀx − yᵀy = ±1.
    let mut norm_ok = true;
    for kcol in 0..n {
        let xn: T = (0..n).map(|i| x[(i, kcol)] * x[(i, kcol)]).sum();
        let yn: T = (0..n).map(|i| y[(i, kcol)] * y[(i, kcol)]).sum();
        let s = xn - yn;
        if s <= T::zero() {
            norm_ok = false;
        }
        let scale = T::one() / s.abs().sqrt();
        for i in 0..n {
            x[(i, kcol)] *= scale;
            y[(i, kcol)] *= scale;
        }
    }
    norm_ok = norm_ok && normalization_flags(&x, &y);
    RpaSolution {
        omega_rpa: omega,
        x,
        y,
        omega_tda,
        full_spectrum,
        stable: true,
        norm_ok,
        unstable_modes: Vec::new(),
    }
}

/// ΔE = ½ Σ_I (Ω_I − Ω_I^TDA), evaluated as the difference of the sums.
pub fn plasmon_energy<T: Scalar>(sol: &RpaSolution<T>) -> Result<T, RpaError> {
    if !sol.stable {
        return Err(RpaError::Unstable(format!(
            "offending modes: {:?}",
            sol.unstable_modes
                .iter()
                .map(|c| (c.re.as_f64(), c.im.as_f64()))
                .collect::<Vec<_>>()
        )));
    }
    let sum_rpa: T = sol.omega_rpa.iter().copied().sum();
    let sum_tda: T = sol.omega_tda.iter().copied().sum();
    Ok(T::cast(0.5) * (sum_rpa - sum_tda))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_matrices(a: f64, b: f64) -> RpaMatrices<f64> {
        RpaMatrices::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
        )
    }

    #[test]
    fn scalar_two_one() {
        let sol = solve_rpa(&scalar_matrices(2.0, 1.0));
        assert!(sol.stable);
        assert!((sol.omega_rpa[0] - 3.0_f64.sqrt()).abs() < 1e-12);
        let (x, y) = (sol.x[(0, 0)], sol.y[(0, 0)]);
        assert!((x * x - y * y - 1.0).abs() < 1e-10);
        assert!(sol.norm_ok);
    }

    #[test]
    fn scalar_soft_mode() {
        let sol = solve_rpa(&scalar_matrices(1.2, 0.2));
        assert!((sol.omega_rpa[0] - 1.4_f64.sqrt()).abs() < 1e-12);
        let de = plasmon_energy(&sol).unwrap();
        assert!((de - 0.5 * (1.4_f64.sqrt() - 1.2)).abs() < 1e-12);
        assert!((de - (-0.0083920216900384)).abs() < 1e-12);
    }

    #[test]
    fn tda_coincides_when_b_vanishes() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0_f64, 0.2, 0.2, 1.5]);
        let m = RpaMatrices::new(a, DMatrix::zeros(2, 2));
        let sol = solve_rpa(&m);
        assert!(sol.stable);
        for (o_rpa, o_tda) in sol.omega_rpa.iter().zip(&sol.omega_tda) {
            assert!((o_rpa - o_tda).abs() < 1e-12);
        }
        assert!(linalg::max_abs(&sol.y) < 1e-10);
        assert!(plasmon_energy(&sol).unwrap().abs() < 1e-12);
    }

    #[test]
    fn unstable_mode_flagged_and_energy_withheld() {
        let sol = solve_rpa(&scalar_matrices(0.5, 1.0));
        assert!(!sol.stable);
        assert!(!sol.unstable_modes.is_empty());
        assert!(plasmon_energy(&sol).is_err());
    }

    #[test]
    fn pair_symmetry_of_full_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[1.3_f64, 0.1, 0.1, 0.9]);
        let b = DMatrix::from_row_slice(2, 2, &[0.2_f64, 0.05, 0.05, 0.1]);
        let sol = solve_rpa(&RpaMatrices::new(a, b));
        assert!(sol.stable);
        let mut pos: Vec<f64> = sol
            .full_spectrum
            .iter()
            .filter(|c| c.re > 0.0)
            .map(|c| c.re)
            .collect();
        let mut neg: Vec<f64> = sol
            .full_spectrum
            .iter()
            .filter(|c| c.re < 0.0)
            .map(|c| -c.re)
            .collect();
        pos.sort_by(|x, y| x.partial_cmp(y).unwrap());
        neg.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (p, q) in pos.iter().zip(&neg) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn fallback_path_with_indefinite_a_minus_b() {
        // b > sqrt(2) makes A−B indefinite while the spectrum stays real:
        // Ω² are the roots of λ² − (5−2b²) λ + (b²−2)² = 0.
        let bval = 1.45_f64;
        let a = DMatrix::from_row_slice(2, 2, &[2.0_f64, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0_f64, bval, bval, 0.0]);
        let amb = &a - &b;
        assert!(amb.cholesky().is_none());
        let sol = solve_rpa(&RpaMatrices::new(a, b));
        assert!(
            sol.stable,
            "spectrum should be real: {:?}",
            sol.unstable_modes
        );
        let tr = 5.0 - 2.0 * bval * bval;
        let disc = (9.0 - 4.0 * bval * bval).sqrt();
        let lam_hi = (tr + disc) / 2.0;
        let lam_lo = (tr - disc) / 2.0;
        assert!((sol.omega_rpa[0] - lam_lo.sqrt()).abs() < 1e-9);
        assert!((sol.omega_rpa[1] - lam_hi.sqrt()).abs() < 1e-9);
        // Eigenvector residuals of the 2n problem.
        let n = 2;
        for k in 0..n {
            let om = sol.omega_rpa[k];
            let xk = sol.x.column(k).into_owned();
            let yk = sol.y.column(k).into_owned();
            let rx = &sol_a() * &xk + &sol_b() * &yk - &xk * om;
            let ry = -(&sol_b() * &xk) - &sol_a() * &yk - &yk * om;
            assert!(rx.norm() < 1e-7, "x residual {}", rx.norm());
            assert!(ry.norm() < 1e-7, "y residual {}", ry.norm());
        }

        fn sol_a() -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])
        }
        fn sol_b() -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[0.0, 1.45, 1.45, 0.0])
        }
    }

    #[test]
    fn empty_problem_is_trivially_stable() {
        let m = RpaMatrices::<f64>::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
        let sol = solve_rpa(&m);
        assert!(sol.stable);
        assert_eq!(plasmon_energy(&sol).unwrap(), 0.0);
    }
}
