//! Curated model systems and analytic oracles shared by the test suite
//! and the `selftest` command.
//!
//! The lattice models come in two flavours: the raw site basis, where a
//! doubly occupied core site is energetically unfavourable, and the
//! orbital basis that diagonalizes the hopping matrix, which orders the
//! orbital energies the way a molecular calculation would. Partition
//! fixtures use the latter so every zeroth-order excitation energy is
//! positive.

use nalgebra::DMatrix;

use crate::integrals::{compose_noninteracting, hubbard_model, IntegralSet, OrbitalSpaces};
use crate::linalg;
use crate::manifold::{ExcitationClass, ExcitationManifold, ExcitedState, StateLabel};
use crate::partition::InteractionKernel;
use crate::scalar::Scalar;
use crate::spin::{Spin, SpinOrbital};

/// Hubbard chain (t = 1) in the site basis at half filling.
pub fn hubbard_chain<T: Scalar>(nsite: usize, u: f64) -> IntegralSet<T> {
    hubbard_model(nsite, T::one(), T::cast(u), false).expect("valid chain")
}

/// Hubbard chain transformed to the basis that diagonalizes the hopping
/// matrix, columns ordered by ascending one-body energy.
pub fn hubbard_chain_mo<T: Scalar>(nsite: usize, u: f64) -> IntegralSet<T> {
    let set = hubbard_chain::<T>(nsite, u);
    let (_, vecs) = linalg::sym_eigen_sorted(set.h1_matrix());
    set.transform(&vecs)
}

/// Two-site model in the bonding/antibonding basis with a chosen
/// electron count and spin projection.
pub fn dimer_mo<T: Scalar>(u: f64, nelec: usize, ms2: i32) -> IntegralSet<T> {
    hubbard_chain_mo::<T>(2, u)
        .with_electrons(nelec, ms2)
        .expect("valid dimer filling")
}

/// Half-filled dimer in the site basis (the exactly solvable 4x4 case).
pub fn hubbard_dimer<T: Scalar>(u: f64) -> IntegralSet<T> {
    hubbard_chain::<T>(2, u)
}

/// 4-site chain, CAS(2,2) around half filling: core = lowest orbital,
/// active = the two frontier orbitals, virtual = the highest.
pub fn four_site_cas22<T: Scalar>(u: f64) -> (IntegralSet<T>, OrbitalSpaces) {
    let set = hubbard_chain_mo::<T>(4, u);
    let spaces = OrbitalSpaces::with_virtual_complement(4, vec![0], vec![1, 2], 2);
    (set, spaces)
}

/// 6-site chain, CAS(2,2): two core, two active, two virtual orbitals.
pub fn six_site_cas22<T: Scalar>(u: f64) -> (IntegralSet<T>, OrbitalSpaces) {
    let set = hubbard_chain_mo::<T>(6, u);
    let spaces = OrbitalSpaces::with_virtual_complement(6, vec![0, 1], vec![2, 3], 2);
    (set, spaces)
}

/// One electron in the bonding orbital of a dimer: active = bonding,
/// virtual = antibonding, no core. The exchange contribution must cancel
/// the direct ring self-interaction exactly on this system.
pub fn one_electron_dimer<T: Scalar>(u: f64, sz2: i32) -> (IntegralSet<T>, OrbitalSpaces) {
    let set = dimer_mo::<T>(u, 1, sz2);
    let spaces = OrbitalSpaces::with_virtual_complement(2, vec![], vec![0], 1);
    (set, spaces)
}

/// Closed-shell dimer with the bonding orbital active and doubly
/// occupied: the smallest system with a nontrivial ring manifold (two
/// active→virtual modes).
pub fn dimer_cas21<T: Scalar>(u: f64) -> (IntegralSet<T>, OrbitalSpaces) {
    let set = dimer_mo::<T>(u, 2, 0);
    let spaces = OrbitalSpaces::with_virtual_complement(2, vec![], vec![0], 2);
    (set, spaces)
}

/// Block-separable pair of closed-shell dimers, the composed active
/// space being the union of the fragment actives. Open-shell fragments
/// would leave the composite ground state exactly degenerate
/// (singlet/triplet), which the reference check refuses; closed-shell
/// fragments keep it unique.
pub fn composed_dimer_pair<T: Scalar>(u: f64) -> (IntegralSet<T>, OrbitalSpaces) {
    let frag = dimer_mo::<T>(u, 2, 0);
    let ab = compose_noninteracting(&frag, &frag);
    let spaces = OrbitalSpaces::with_virtual_complement(4, vec![], vec![0, 2], 4);
    (ab, spaces)
}

/// Block-separable pair of 4-site CAS(2,2) fragments: a CAS(4,4) whose
/// manifold exercises all four excitation classes on both fragments.
pub fn composed_four_site_pair<T: Scalar>(u: f64) -> (IntegralSet<T>, OrbitalSpaces) {
    let (a, _) = four_site_cas22::<T>(u);
    let ab = compose_noninteracting(&a, &a);
    let spaces = OrbitalSpaces::with_virtual_complement(8, vec![0, 4], vec![1, 2, 5, 6], 4);
    (ab, spaces)
}

/// Interaction kernel that returns the same coupling for every
/// spin-allowed quadruple. With a one-state manifold this realizes the
/// exactly solvable one-mode ring model.
#[derive(Debug, Clone, Copy)]
pub struct UniformKernel<T> {
    pub value: T,
}

impl<T: Scalar> InteractionKernel<T> for UniformKernel<T> {
    fn two_body(&self, p: SpinOrbital, r: SpinOrbital, q: SpinOrbital, s: SpinOrbital) -> T {
        if p.spin() != r.spin() || q.spin() != s.spin() {
            return T::zero();
        }
        self.value
    }
}

/// One excitation at energy `omega` coupled to itself with strength
/// `b = v d²`: every ring quantity has a closed form.
#[derive(Debug, Clone, Copy)]
pub struct ScalarModel<T> {
    pub omega: T,
    pub b: T,
}

impl<T: Scalar> ScalarModel<T> {
    pub fn new(omega: f64, b: f64) -> Self {
        Self {
            omega: T::cast(omega),
            b: T::cast(b),
        }
    }

    /// Single-state manifold with unit transition density on one pair.
    pub fn manifold(&self) -> ExcitationManifold<T> {
        let p = SpinOrbital::new(1, Spin::Alpha);
        let r = SpinOrbital::new(0, Spin::Alpha);
        ExcitationManifold::from_states(vec![ExcitedState {
            class: ExcitationClass::ActiveInternal,
            omega: self.omega,
            d: vec![(p, r, T::one())],
            label: StateLabel::active_state(1),
        }])
    }

    pub fn kernel(&self) -> UniformKernel<T> {
        UniformKernel { value: self.b }
    }

    /// TDA excitation energy a = ω + b.
    pub fn a(&self) -> T {
        self.omega + self.b
    }

    /// Ω = sqrt(a² − b²).
    pub fn omega_rpa(&self) -> T {
        (self.a() * self.a() - self.b * self.b).sqrt()
    }

    /// ΔE = ½ (Ω − a).
    pub fn plasmon(&self) -> T {
        T::cast(0.5) * (self.omega_rpa() - self.a())
    }

    /// Scalar Riccati root t = (−a + Ω)/b.
    pub fn amplitude(&self) -> T {
        (self.omega_rpa() - self.a()) / self.b
    }

    /// Closed-form ring term of order n from the contour integral:
    /// ΔE_n = −(−b/2ω)ⁿ · C(2n−2, n−1) · ω / n.
    pub fn ring_order(&self, n: u32) -> T {
        let r = self.b / (T::cast(2.0) * self.omega);
        let mut pow = T::one();
        for _ in 0..n {
            pow *= -r;
        }
        -pow * T::cast(central_binomial(n - 1)) * self.omega / T::cast(n as f64)
    }
}

/// C(2k, k) as f64, exact for the small orders used here.
fn central_binomial(k: u32) -> f64 {
    let mut num = 1.0;
    let mut den = 1.0;
    for i in 1..=k {
        num *= (k + i) as f64;
        den *= i as f64;
    }
    num / den
}

/// Random-free orthogonal mixing of two orbitals, used to probe
/// invariance under rotations inside a degenerate block.
pub fn pair_rotation<T: Scalar>(norb: usize, i: usize, j: usize, angle: f64) -> DMatrix<T> {
    let mut rot = DMatrix::identity(norb, norb);
    let (s, c) = (T::cast(angle.sin()), T::cast(angle.cos()));
    rot[(i, i)] = c;
    rot[(j, j)] = c;
    rot[(i, j)] = -s;
    rot[(j, i)] = s;
    rot
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mo_basis_diagonalizes_hopping() {
        let set = hubbard_chain_mo::<f64>(4, 4.0);
        for p in 0..4 {
            for q in (p + 1)..4 {
                assert!(set.h1(p, q).abs() < 1e-12);
            }
        }
        // ascending one-body energies: -1.618, -0.618, 0.618, 1.618
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((set.h1(0, 0) + phi).abs() < 1e-10);
        assert!((set.h1(3, 3) - phi).abs() < 1e-10);
    }

    #[test]
    fn dimer_mo_coulomb_structure() {
        // bonding/antibonding basis of the U-only dimer:
        // (00|00)=(11|11)=(00|11)=(01|01)=U/2, (00|01)=0
        let set = dimer_mo::<f64>(4.0, 2, 0);
        assert!((set.eri(0, 0, 0, 0) - 2.0).abs() < 1e-12);
        assert!((set.eri(1, 1, 1, 1) - 2.0).abs() < 1e-12);
        assert!((set.eri(0, 0, 1, 1) - 2.0).abs() < 1e-12);
        assert!((set.eri(0, 1, 0, 1) - 2.0).abs() < 1e-12);
        assert!(set.eri(0, 0, 0, 1).abs() < 1e-12);
    }

    #[test]
    fn scalar_model_closed_forms() {
        let model = ScalarModel::<f64>::new(1.0, 0.2);
        assert!((model.omega_rpa() - 1.4_f64.sqrt()).abs() < 1e-15);
        assert!((model.plasmon() - 0.5 * (1.4_f64.sqrt() - 1.2)).abs() < 1e-15);
        assert!((model.ring_order(2) - (-0.01)).abs() < 1e-15);
        // n=3 closed form: +b³/4
        assert!((model.ring_order(3) - 0.002).abs() < 1e-15);
    }

    #[test]
    fn composed_pair_is_block_separable() {
        let (set, spaces) = composed_dimer_pair::<f64>(4.0);
        assert_eq!(set.norb(), 4);
        assert_eq!(set.nelec(), 4);
        assert_eq!(set.ms2(), 0);
        assert_eq!(set.eri(0, 2, 0, 2), 0.0);
        assert!(spaces.validate(&set).is_ok());
    }
}
