//! Ring-CCD amplitudes from the RPA eigenvectors, the tr(BT) energy
//! identity, and the screened-exchange correction.
//!
//! T = Y X⁻¹ solves the drCCD Riccati equation
//! B + A T + T A + T B T = 0; the exchange-corrected energy replaces
//! v_{pr,qs} in the energy-side B by v_{pr,qs} − v_{ps,qr}.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::manifold::ExcitationManifold;
use crate::partition::InteractionKernel;
use crate::rpa::{RpaMatrices, RpaSolution};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SosexError {
    #[error("ring amplitudes need a stable RPA solution")]
    Unstable,
    #[error("X block is numerically singular (condition estimate {0:e}); near an instability")]
    SingularX(f64),
}

/// Ring-CCD doubles amplitudes in the manifold basis.
#[derive(Debug, Clone)]
pub struct RingAmplitudes<T: Scalar> {
    pub t: DMatrix<T>,
    /// Frobenius norm of B + A T + T A + T B T.
    pub riccati_residual: T,
}

/// T = Y X⁻¹ with a conditioning guard on X.
pub fn ring_ccd_amplitudes<T: Scalar>(
    sol: &RpaSolution<T>,
    m: &RpaMatrices<T>,
) -> Result<RingAmplitudes<T>, SosexError> {
    if !sol.stable {
        return Err(SosexError::Unstable);
    }
    let n = m.n();
    if n == 0 {
        return Ok(RingAmplitudes {
            t: DMatrix::zeros(0, 0),
            riccati_residual: T::zero(),
        });
    }
    let svd = sol.x.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let smin = svd
        .singular_values
        .iter()
        .fold(smax, |a, &b| if b < a { b } else { a });
    let cond = if smin > T::zero() {
        smax / smin
    } else {
        T::cast(f64::INFINITY)
    };
    let well_conditioned = cond.partial_cmp(&T::cast(1e12)) == Some(std::cmp::Ordering::Less);
    if !well_conditioned {
        return Err(SosexError::SingularX(cond.as_f64()));
    }
    // T X = Y  =>  Xᵀ Tᵀ = Yᵀ
    let lu = sol.x.transpose().lu();
    let t_t = lu
        .solve(&sol.y.transpose())
        .ok_or(SosexError::SingularX(f64::INFINITY))?;
    let t = t_t.transpose();
    let residual = (&m.b + &m.a * &t + &t * &m.a + &t * &m.b * &t).norm();
    Ok(RingAmplitudes {
        t,
        riccati_residual: residual,
    })
}

/// ΔE = ½ tr(B T), the amplitude form of the ring energy.
pub fn rpa_energy_from_t<T: Scalar>(amps: &RingAmplitudes<T>, m: &RpaMatrices<T>) -> T {
    T::cast(0.5) * (&m.b * &amps.t).trace()
}

/// Energy-side B with the antisymmetrized kernel
/// v_{pr,qs} − v_{ps,qr}; the all-active exclusion applies to both terms
/// since they share the same four indices.
pub fn antisymmetrized_b<T: Scalar, K: InteractionKernel<T>>(
    man: &ExcitationManifold<T>,
    kernel: &K,
) -> DMatrix<T> {
    let n = man.len();
    let mut bx = DMatrix::zeros(n, n);
    for (i, sn) in man.states.iter().enumerate() {
        for (j, sm) in man.states.iter().enumerate() {
            if j < i {
                continue;
            }
            let mut acc = T::zero();
            for &(p, r, dn) in &sn.d {
                for &(q, s, dm) in &sm.d {
                    let direct = kernel.two_body(p, r, q, s);
                    let exchange = kernel.two_body(p, s, q, r);
                    acc += dn * (direct - exchange) * dm;
                }
            }
            bx[(i, j)] = acc;
            bx[(j, i)] = acc;
        }
    }
    bx
}

/// ΔE_SOSEX = ½ tr(B̃ T).
pub fn sosex_energy<T: Scalar, K: InteractionKernel<T>>(
    amps: &RingAmplitudes<T>,
    man: &ExcitationManifold<T>,
    kernel: &K,
) -> T {
    let bx = antisymmetrized_b(man, kernel);
    T::cast(0.5) * (&bx * &amps.t).trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ScalarModel;
    use crate::rpa::{assemble_ab, plasmon_energy, solve_rpa};

    #[test]
    fn zero_b_gives_zero_amplitudes() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0_f64, 0.1, 0.1, 2.0]);
        let m = RpaMatrices::new(a, DMatrix::zeros(2, 2));
        let sol = solve_rpa(&m);
        let amps = ring_ccd_amplitudes(&sol, &m).unwrap();
        assert!(amps.t.norm() < 1e-10);
        assert!(amps.riccati_residual < 1e-10);
        assert!(rpa_energy_from_t(&amps, &m).abs() < 1e-12);
    }

    #[test]
    fn scalar_riccati_root() {
        // a=1.2, b=0.2: t = (−a + sqrt(a²−b²))/b
        let m = RpaMatrices::new(
            DMatrix::from_element(1, 1, 1.2),
            DMatrix::from_element(1, 1, 0.2),
        );
        let sol = solve_rpa(&m);
        let amps = ring_ccd_amplitudes(&sol, &m).unwrap();
        let expected = (-1.2 + 1.4_f64.sqrt()) / 0.2;
        assert!((amps.t[(0, 0)] - expected).abs() < 1e-12);
        assert!((amps.t[(0, 0)] - (-0.0839202169003839)).abs() < 1e-12);
        assert!(amps.riccati_residual < 1e-12);
        let e = rpa_energy_from_t(&amps, &m);
        assert!((e - (-0.0083920216900384)).abs() < 1e-12);
        assert!((e - plasmon_energy(&sol).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn singular_x_block_reported() {
        use nalgebra::Complex;
        let m = RpaMatrices::new(
            DMatrix::from_row_slice(2, 2, &[1.0_f64, 0.0, 0.0, 1.0]),
            DMatrix::zeros(2, 2),
        );
        // Hand-built "solution" with a rank-deficient X.
        let sol = crate::rpa::RpaSolution {
            omega_rpa: vec![1.0, 1.0],
            x: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            y: DMatrix::zeros(2, 2),
            omega_tda: vec![1.0, 1.0],
            full_spectrum: vec![
                Complex::new(1.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(-1.0, 0.0),
                Complex::new(-1.0, 0.0),
            ],
            stable: true,
            norm_ok: false,
            unstable_modes: vec![],
        };
        assert!(matches!(
            ring_ccd_amplitudes(&sol, &m),
            Err(SosexError::SingularX(_))
        ));
    }

    #[test]
    fn amplitudes_require_stability() {
        let m = RpaMatrices::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
        );
        let sol = solve_rpa(&m);
        assert!(matches!(
            ring_ccd_amplitudes(&sol, &m),
            Err(SosexError::Unstable)
        ));
    }

    #[test]
    fn scalar_model_assembly_round_trip() {
        // Assemble A, B from the synthetic manifold and close the loop
        // through T: the three energy expressions coincide.
        let model = ScalarModel::<f64>::new(1.0, 0.2);
        let man = model.manifold();
        let kernel = model.kernel();
        let m = assemble_ab(&man, &kernel);
        assert!((m.a[(0, 0)] - 1.2).abs() < 1e-14);
        assert!((m.b[(0, 0)] - 0.2).abs() < 1e-14);
        let sol = solve_rpa(&m);
        let amps = ring_ccd_amplitudes(&sol, &m).unwrap();
        let e_t = rpa_energy_from_t(&amps, &m);
        let e_pl = plasmon_energy(&sol).unwrap();
        assert!((e_t - e_pl).abs() < 1e-12);
        assert!((e_t - model.plasmon()).abs() < 1e-12);
    }

    #[test]
    fn uniform_kernel_sosex_vanishes_for_single_pair() {
        // With one directed pair the exchange contraction equals the
        // direct one, so the antisymmetrized B is exactly zero.
        let model = ScalarModel::<f64>::new(1.0, 0.2);
        let man = model.manifold();
        let kernel = model.kernel();
        let bx = antisymmetrized_b(&man, &kernel);
        assert!(bx.norm() < 1e-15);
        let m = assemble_ab(&man, &kernel);
        let sol = solve_rpa(&m);
        let amps = ring_ccd_amplitudes(&sol, &m).unwrap();
        assert!(sosex_energy(&amps, &man, &kernel).abs() < 1e-15);
    }
}
