//! Textbook closed-shell direct-RPA/SOSEX, written as its own code path
//! on purpose: it shares no assembly or solver logic with the manifold
//! pipeline and serves as the oracle for the empty-active-space limit.
//!
//! The first `nocc` orbitals of the input set are taken as the doubly
//! occupied reference. A − B is diagonal by construction here, so the
//! plasmon energy comes from the direct symmetric reduction
//! Ω² = eig(Δε^{1/2} (A+B) Δε^{1/2}).

use nalgebra::DMatrix;
use thiserror::Error;

use crate::integrals::IntegralSet;
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SrError {
    #[error("{0}")]
    Usage(String),
    #[error("SR-RPA unstable: Ω² = {0:e} ≤ 0")]
    Unstable(f64),
}

/// Canonicalized closed-shell reference.
#[derive(Debug, Clone)]
pub struct SrReference<T: Scalar> {
    pub occ: Vec<usize>,
    pub virt: Vec<usize>,
    /// Orbital energies, ascending within each block.
    pub eps: Vec<T>,
    set: IntegralSet<T>,
}

impl<T: Scalar> SrReference<T> {
    /// Build the closed-shell Fock matrix from the first `nocc`
    /// orbitals, canonicalize occupied and virtual blocks, and transform
    /// the integrals along.
    pub fn new(set: &IntegralSet<T>, nocc: usize) -> Result<Self, SrError> {
        if !set.nelec().is_multiple_of(2) {
            return Err(SrError::Usage(format!(
                "closed shell requires an even electron count, got {}",
                set.nelec()
            )));
        }
        if 2 * nocc != set.nelec() {
            return Err(SrError::Usage(format!(
                "nocc = {nocc} inconsistent with nelec = {}",
                set.nelec()
            )));
        }
        let n = set.norb();
        if nocc > n {
            return Err(SrError::Usage(format!("nocc = {nocc} exceeds norb = {n}")));
        }
        let two = T::cast(2.0);
        let fock = DMatrix::from_fn(n, n, |p, q| {
            let mut acc = set.h1(p, q);
            for j in 0..nocc {
                acc += two * set.eri(p, q, j, j) - set.eri(p, j, j, q);
            }
            acc
        });
        let mut rot = DMatrix::identity(n, n);
        for block in [0..nocc, nocc..n] {
            let ids: Vec<usize> = block.collect();
            if ids.is_empty() {
                continue;
            }
            let sub = DMatrix::from_fn(ids.len(), ids.len(), |i, j| fock[(ids[i], ids[j])]);
            let (_, vecs) = linalg::sym_eigen_sorted(&sub);
            for (bj, &gj) in ids.iter().enumerate() {
                for (bi, &gi) in ids.iter().enumerate() {
                    rot[(gi, gj)] = vecs[(bi, bj)];
                }
            }
        }
        let transformed = set.transform(&rot);
        let fock_t = rot.transpose() * &fock * &rot;
        let eps: Vec<T> = (0..n).map(|p| fock_t[(p, p)]).collect();
        Ok(Self {
            occ: (0..nocc).collect(),
            virt: (nocc..n).collect(),
            eps,
            set: transformed,
        })
    }

    /// Spin-orbital particle-hole pairs: (i, a) for each of the two
    /// spins, alpha block first.
    fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for _spin in 0..2 {
            for &i in &self.occ {
                for &a in &self.virt {
                    out.push((i, a));
                }
            }
        }
        out
    }

    /// (A without the Δε diagonal) == B: the direct coupling (ia|jb).
    fn coupling_matrix(&self, pairs: &[(usize, usize)]) -> DMatrix<T> {
        DMatrix::from_fn(pairs.len(), pairs.len(), |r, c| {
            let (i, a) = pairs[r];
            let (j, b) = pairs[c];
            self.set.eri(i, a, j, b)
        })
    }

    /// (RPA eigenvalues ascending, X, Y, Σ TDA eigenvalues)
    #[allow(clippy::type_complexity)]
    fn solve(&self) -> Result<(Vec<T>, DMatrix<T>, DMatrix<T>, T), SrError> {
        let pairs = self.pairs();
        let n = pairs.len();
        if n == 0 {
            return Ok((
                Vec::new(),
                DMatrix::zeros(0, 0),
                DMatrix::zeros(0, 0),
                T::zero(),
            ));
        }
        let deltas: Vec<T> = pairs
            .iter()
            .map(|&(i, a)| self.eps[a] - self.eps[i])
            .collect();
        let b_mat = self.coupling_matrix(&pairs);
        let mut a_mat = b_mat.clone();
        for k in 0..n {
            a_mat[(k, k)] += deltas[k];
        }
        // Ω² = eig( D^{1/2} (A+B) D^{1/2} ) with D = A − B = Δε.
        let apb = &a_mat + &b_mat;
        let mut mm = DMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                mm[(r, c)] = deltas[r].sqrt() * apb[(r, c)] * deltas[c].sqrt();
            }
        }
        linalg::symmetrize(&mut mm);
        let (lams, z) = linalg::sym_eigen_sorted(&mm);
        if let Some(&bad) = lams.iter().find(|&&l| l <= T::zero()) {
            return Err(SrError::Unstable(bad.as_f64()));
        }
        let half = T::cast(0.5);
        let mut x = DMatrix::zeros(n, n);
        let mut y = DMatrix::zeros(n, n);
        let mut omega = Vec::with_capacity(n);
        for k in 0..n {
            let om = lams[k].sqrt();
            omega.push(om);
            for r in 0..n {
                let xpy = deltas[r].sqrt() * z[(r, k)] / om.sqrt();
                let xmy = z[(r, k)] * om.sqrt() / deltas[r].sqrt();
                x[(r, k)] = half * (xpy + xmy);
                y[(r, k)] = half * (xpy - xmy);
            }
        }
        let (tda, _) = linalg::sym_eigen_sorted(&a_mat);
        Ok((omega, x, y, tda.iter().copied().sum()))
    }

    /// Plasmon-formula direct-RPA correlation energy.
    pub fn rpa_energy(&self) -> Result<T, SrError> {
        let (omega, _, _, sum_tda) = self.solve()?;
        let sum_rpa: T = omega.iter().copied().sum();
        Ok(T::cast(0.5) * (sum_rpa - sum_tda))
    }

    /// SOSEX correction ½ tr(B̃ T): the energy-side B antisymmetrized by
    /// the same-spin exchange integral, T = Y X⁻¹.
    pub fn sosex_energy(&self) -> Result<T, SrError> {
        let pairs = self.pairs();
        let n = pairs.len();
        if n == 0 {
            return Ok(T::zero());
        }
        let (_, x, y, _) = self.solve()?;
        let t = y * x.lu().try_inverse().ok_or(SrError::Unstable(0.0))?;
        let nhalf = n / 2;
        let bx = DMatrix::from_fn(n, n, |r, c| {
            let (i, a) = pairs[r];
            let (j, b) = pairs[c];
            let same_spin = (r < nhalf) == (c < nhalf);
            let mut v = self.set.eri(i, a, j, b);
            if same_spin {
                v -= self.set.eri(a, j, b, i);
            }
            v
        });
        Ok(T::cast(0.5) * (bx * t).trace())
    }
}

/// Direct-RPA correlation energy of a closed-shell set with the first
/// `nocc` orbitals doubly occupied.
pub fn sr_rpa_energy<T: Scalar>(set: &IntegralSet<T>, nocc: usize) -> Result<T, SrError> {
    SrReference::new(set, nocc)?.rpa_energy()
}

/// SOSEX correlation energy of the same reference.
pub fn sr_sosex_energy<T: Scalar>(set: &IntegralSet<T>, nocc: usize) -> Result<T, SrError> {
    SrReference::new(set, nocc)?.sosex_energy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::integrals::compose_noninteracting;

    #[test]
    fn minimal_closed_shell_scalar_form() {
        // One (i,a) spatial pair: the spin-adapted channels give
        // ΔE = ½(sqrt(a² − b²) − a) with a = Δε + 2K, b = 2K.
        let set = fixtures::dimer_mo::<f64>(4.0, 2, 0);
        let sr = SrReference::new(&set, 1).unwrap();
        let de = sr.rpa_energy().unwrap();
        let delta = sr.eps[1] - sr.eps[0];
        let k = sr.set.eri(0, 1, 0, 1);
        let a = delta + 2.0 * k;
        let b = 2.0 * k;
        let expected = 0.5 * ((a * a - b * b).sqrt() - a);
        assert!((de - expected).abs() < 1e-12, "{de} vs {expected}");
        // dimer numbers: Δε = 2, K = U/2 = 2
        assert!((de - 0.5 * (20.0_f64.sqrt() - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn block_separability_doubles_energy() {
        let single = fixtures::dimer_mo::<f64>(4.0, 2, 0);
        let composed = compose_noninteracting(&single, &single);
        // Bring the two bonding orbitals to the front so the first-nocc
        // convention picks the right determinant.
        let mut perm = DMatrix::<f64>::zeros(4, 4);
        for (new, old) in [0usize, 2, 1, 3].iter().enumerate() {
            perm[(*old, new)] = 1.0;
        }
        let double = composed.transform(&perm);
        let e1 = sr_rpa_energy(&single, 1).unwrap();
        let e2 = sr_rpa_energy(&double, 2).unwrap();
        assert!((e2 - 2.0 * e1).abs() < 1e-10, "{e2} vs 2x{e1}");
        let s1 = sr_sosex_energy(&single, 1).unwrap();
        let s2 = sr_sosex_energy(&double, 2).unwrap();
        assert!((s2 - 2.0 * s1).abs() < 1e-10);
    }

    #[test]
    fn odd_electron_count_rejected() {
        let set = fixtures::dimer_mo::<f64>(4.0, 1, 1);
        assert!(matches!(sr_rpa_energy(&set, 1), Err(SrError::Usage(_))));
    }

    #[test]
    fn eps_ascending_within_blocks() {
        let set = fixtures::hubbard_chain::<f64>(6, 2.0);
        let sr = SrReference::new(&set, 3).unwrap();
        assert!(sr.eps[..3].windows(2).all(|w| w[0] <= w[1]));
        assert!(sr.eps[3..].windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sosex_less_negative_than_rpa() {
        let set = fixtures::hubbard_chain_mo::<f64>(4, 2.0);
        let e_rpa = sr_rpa_energy(&set, 2).unwrap();
        let e_sosex = sr_sosex_energy(&set, 2).unwrap();
        assert!(e_rpa < 0.0);
        assert!(e_sosex > e_rpa);
    }
}
