//! Hamiltonian partition: generalized Fock matrix, semicanonical core
//! and virtual orbitals, the Dyall-type zeroth-order parameters, and the
//! residual two-body interaction v = H - H_D.
//!
//! The zeroth order is quadratic in the core/virtual orbitals (orbital
//! energies eps) and fully interacting inside the active space (effective
//! one-body f plus the bare all-active two-electron integrals). The
//! residual two-body interaction is then the full Coulomb tensor with
//! the all-active block removed; its one-body companion is retained for
//! diagnostics but never enters the ring resummation.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::casci::{self, ActiveSpaceHamiltonian, CasciError, SectorSolution};
use crate::integrals::{IntegralSet, IntegralsError, OrbitalSpaces};
use crate::linalg;
use crate::scalar::Scalar;
use crate::spin::SpinOrbital;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Integrals(#[from] IntegralsError),
    #[error(transparent)]
    Casci(#[from] CasciError),
    #[error("active density fixed point not reached after {0} iterations")]
    FixedPoint(usize),
}

/// Spin-summed generalized Fock matrix
/// F_pq = h_pq + Σ_rs γ_rs [(pq|rs) - ½ (ps|rq)] (chemist notation).
///
/// `gamma` must be the total spin-summed one-body density: 2·I on the
/// core block, the active 1-RDM on the active block, zero elsewhere.
pub fn build_generalized_fock<T: Scalar>(
    set: &IntegralSet<T>,
    gamma: &DMatrix<T>,
) -> Result<DMatrix<T>, PartitionError> {
    let n = set.norb();
    if gamma.nrows() != n || gamma.ncols() != n {
        return Err(PartitionError::Usage(format!(
            "density is {}x{}, expected {n}x{n}",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    let trace = gamma.trace();
    // 1e-8 at double precision, scaled up when the scalar is coarser.
    let trace_tol = T::cast(1e-8).max(T::default_epsilon() * T::from_count(1000));
    if (trace - T::from_count(set.nelec())).abs() > trace_tol {
        return Err(PartitionError::Usage(format!(
            "tr(gamma) = {trace} but nelec = {}",
            set.nelec()
        )));
    }
    let half = T::cast(0.5);
    let mut f = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let mut acc = set.h1(p, q);
            for r in 0..n {
                for s in 0..n {
                    let g = gamma[(r, s)];
                    if g == T::zero() {
                        continue;
                    }
                    acc += g * (set.eri(p, q, r, s) - half * set.eri(p, s, r, q));
                }
            }
            f[(p, q)] = acc;
            f[(q, p)] = acc;
        }
    }
    Ok(f)
}

/// Block-diagonal orthogonal rotation that diagonalizes the core and
/// virtual blocks of `fock` (identity on the active block), together
/// with the transformed integrals. Within each block the new orbitals
/// are ordered by ascending orbital energy.
pub fn semicanonicalize<T: Scalar>(
    set: &IntegralSet<T>,
    spaces: &OrbitalSpaces,
    fock: &DMatrix<T>,
) -> (DMatrix<T>, IntegralSet<T>) {
    let n = set.norb();
    let mut rotation = DMatrix::identity(n, n);
    for block in [&spaces.core, &spaces.virt] {
        let k = block.len();
        if k == 0 {
            continue;
        }
        let sub = DMatrix::from_fn(k, k, |i, j| fock[(block[i], block[j])]);
        let (_, vecs) = linalg::sym_eigen_sorted(&sub);
        for (bj, &gj) in block.iter().enumerate() {
            for (bi, &gi) in block.iter().enumerate() {
                rotation[(gi, gj)] = vecs[(bi, bj)];
            }
        }
    }
    let transformed = set.transform(&rotation);
    (rotation, transformed)
}

/// Zeroth-order parameters in the semicanonical basis.
#[derive(Debug, Clone)]
pub struct DyallPartition<T: Scalar> {
    pub spaces: OrbitalSpaces,
    /// Core orbital energies, parallel to `spaces.core`, ascending.
    pub eps_core: Vec<T>,
    /// Virtual orbital energies, parallel to `spaces.virt`, ascending.
    pub eps_virt: Vec<T>,
    /// Effective active one-body matrix f_xy = h_xy + core field.
    pub f_active: DMatrix<T>,
    /// Accumulated orthogonal rotation from the input orbitals to the
    /// semicanonical basis (block-diagonal, identity on active).
    pub rotation: DMatrix<T>,
    /// All integrals in the semicanonical basis.
    pub set: IntegralSet<T>,
    /// Converged spin-summed active 1-RDM of the zeroth-order ground state.
    pub gamma_active: DMatrix<T>,
    active_mask: Vec<bool>,
}

/// Convergence and capacity knobs for [`build_dyall`].
#[derive(Debug, Clone, Copy)]
pub struct DyallSettings {
    pub density_tol: f64,
    pub max_iterations: usize,
    pub sector_cap: usize,
}

impl Default for DyallSettings {
    fn default() -> Self {
        Self {
            density_tol: 1e-9,
            max_iterations: 50,
            sector_cap: casci::DEFAULT_SECTOR_CAP,
        }
    }
}

/// f_xy = h_xy + Σ_{i∈core} [2 (xy|ii) - (xi|iy)] on the active block.
fn active_one_body<T: Scalar>(set: &IntegralSet<T>, spaces: &OrbitalSpaces) -> DMatrix<T> {
    let m = spaces.active.len();
    let two = T::cast(2.0);
    DMatrix::from_fn(m, m, |x, y| {
        let (gx, gy) = (spaces.active[x], spaces.active[y]);
        let mut acc = set.h1(gx, gy);
        for &i in &spaces.core {
            acc += two * set.eri(gx, gy, i, i) - set.eri(gx, i, i, gy);
        }
        acc
    })
}

fn total_density<T: Scalar>(
    norb: usize,
    spaces: &OrbitalSpaces,
    gamma_active: &DMatrix<T>,
) -> DMatrix<T> {
    let mut gamma = DMatrix::zeros(norb, norb);
    let two = T::cast(2.0);
    for &i in &spaces.core {
        gamma[(i, i)] = two;
    }
    for (x, &gx) in spaces.active.iter().enumerate() {
        for (y, &gy) in spaces.active.iter().enumerate() {
            gamma[(gx, gy)] = gamma_active[(x, y)];
        }
    }
    gamma
}

/// Build the Dyall partition for the given orbital spaces.
///
/// The active 1-RDM entering the generalized Fock is taken from the
/// CASCI ground state of the active Hamiltonian and iterated to a fixed
/// point: an initial diagonal guess density seeds the first Fock build,
/// each semicanonicalization is followed by a fresh CASCI solve, and the
/// loop stops when the active density moves by less than `density_tol`.
/// Since the active block is untouched by the rotations this converges
/// immediately after the first resolve; the loop guards the invariant.
pub fn build_dyall<T: Scalar>(
    set: &IntegralSet<T>,
    spaces: &OrbitalSpaces,
    settings: &DyallSettings,
) -> Result<DyallPartition<T>, PartitionError> {
    spaces.validate(set)?;
    if spaces.active.is_empty() && spaces.n_active_electrons > 0 {
        return Err(PartitionError::Usage(
            "active electrons requested with an empty active list".into(),
        ));
    }
    let n = set.norb();
    let m = spaces.active.len();
    let n_act_e = spaces.n_active_electrons;

    // Diagonal guess: equal fractional occupation of the active orbitals.
    let mut gamma_active = DMatrix::zeros(m, m);
    if m > 0 {
        let occ = T::from_count(n_act_e) / T::from_count(m);
        for x in 0..m {
            gamma_active[(x, x)] = occ;
        }
    }

    let mut current = set.clone();
    let mut rotation = DMatrix::<T>::identity(n, n);
    let mut converged = false;
    for _ in 0..settings.max_iterations {
        let gamma = total_density(n, spaces, &gamma_active);
        let fock = build_generalized_fock(&current, &gamma)?;
        let (rot, transformed) = semicanonicalize(&current, spaces, &fock);
        rotation = &rotation * &rot;
        current = transformed;

        let new_gamma_active = if m > 0 && n_act_e > 0 {
            let f = active_one_body(&current, spaces);
            let ham = ActiveSpaceHamiltonian::new(&current, &spaces.active, f);
            let sol = casci::solve_sector(&ham, n_act_e, current.ms2(), settings.sector_cap)?;
            sol.one_rdm_spin_summed(0)
        } else {
            DMatrix::zeros(m, m)
        };
        let delta = linalg::max_abs(&(new_gamma_active.clone() - &gamma_active));
        gamma_active = new_gamma_active;
        if delta < T::cast(settings.density_tol) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PartitionError::FixedPoint(settings.max_iterations));
    }

    // Final Fock in the converged basis fixes the orbital energies.
    let gamma = total_density(n, spaces, &gamma_active);
    let fock = build_generalized_fock(&current, &gamma)?;
    let eps_core: Vec<T> = spaces.core.iter().map(|&i| fock[(i, i)]).collect();
    let eps_virt: Vec<T> = spaces.virt.iter().map(|&a| fock[(a, a)]).collect();
    let f_active = active_one_body(&current, spaces);

    Ok(DyallPartition {
        active_mask: spaces.active_mask(),
        spaces: spaces.clone(),
        eps_core,
        eps_virt,
        f_active,
        rotation,
        set: current,
        gamma_active,
    })
}

impl<T: Scalar> DyallPartition<T> {
    pub fn norb(&self) -> usize {
        self.set.norb()
    }

    /// Active Hamiltonian (effective one-body + all-active integrals).
    pub fn active_hamiltonian(&self) -> ActiveSpaceHamiltonian<T> {
        ActiveSpaceHamiltonian::new(&self.set, &self.spaces.active, self.f_active.clone())
    }

    /// Solve one active (nelec, sz2) sector with the given cap.
    pub fn solve_sector(
        &self,
        nelec: usize,
        sz2: i32,
        cap: usize,
    ) -> Result<SectorSolution<T>, CasciError> {
        casci::solve_sector(&self.active_hamiltonian(), nelec, sz2, cap)
    }

    /// Constant inactive energy: e_core plus the doubly occupied core
    /// one-body and Coulomb/exchange terms. Adding the active-sector
    /// eigenvalue gives the total CASCI energy of that state.
    pub fn inactive_energy(&self) -> T {
        let two = T::cast(2.0);
        let mut e = self.set.e_core();
        for &i in &self.spaces.core {
            e += two * self.set.h1(i, i);
            for &j in &self.spaces.core {
                e += two * self.set.eri(i, i, j, j) - self.set.eri(i, j, j, i);
            }
        }
        e
    }

    /// Residual interaction accessor bound to this partition.
    pub fn residual(&self) -> ResidualInteraction<'_, T> {
        ResidualInteraction { part: self }
    }

    /// Zeroth-order one-body matrix element over spatial orbitals:
    /// eps on the core/virtual diagonal, f on the active block.
    fn h0_one_body(&self, p: usize, q: usize) -> T {
        if p == q {
            if let Some(k) = self.spaces.core.iter().position(|&i| i == p) {
                return self.eps_core[k];
            }
            if let Some(k) = self.spaces.virt.iter().position(|&a| a == p) {
                return self.eps_virt[k];
            }
        }
        if self.active_mask[p] && self.active_mask[q] {
            let x = self.spaces.active.iter().position(|&i| i == p).unwrap();
            let y = self.spaces.active.iter().position(|&i| i == q).unwrap();
            return self.f_active[(x, y)];
        }
        T::zero()
    }
}

/// The residual two-body interaction v_{pr,qs} (and its one-body
/// companion) over spin orbitals of the semicanonical basis.
#[derive(Debug, Clone, Copy)]
pub struct ResidualInteraction<'a, T: Scalar> {
    part: &'a DyallPartition<T>,
}

/// Anything that can serve as the two-body coupling kernel of the ring
/// resummation. The production implementation is [`ResidualInteraction`];
/// test models substitute analytic kernels.
pub trait InteractionKernel<T: Scalar> {
    /// v_{pr,qs} over spin orbitals: zero unless σ(p)=σ(r) and σ(q)=σ(s),
    /// otherwise the physicist integral ⟨pq|rs⟩ with the all-active block
    /// removed.
    fn two_body(&self, p: SpinOrbital, r: SpinOrbital, q: SpinOrbital, s: SpinOrbital) -> T;
}

impl<T: Scalar> ResidualInteraction<'_, T> {
    /// One-body residual v_pq = h_pq - h⁰_pq (diagnostic; not part of
    /// the ring resummation).
    pub fn one_body(&self, p: SpinOrbital, q: SpinOrbital) -> T {
        if p.spin() != q.spin() {
            return T::zero();
        }
        let (sp, sq) = (p.spatial(), q.spatial());
        self.part.set.h1(sp, sq) - self.part.h0_one_body(sp, sq)
    }
}

impl<T: Scalar> InteractionKernel<T> for ResidualInteraction<'_, T> {
    fn two_body(&self, p: SpinOrbital, r: SpinOrbital, q: SpinOrbital, s: SpinOrbital) -> T {
        if p.spin() != r.spin() || q.spin() != s.spin() {
            return T::zero();
        }
        let (sp, sr, sq, ss) = (p.spatial(), r.spatial(), q.spatial(), s.spatial());
        let mask = &self.part.active_mask;
        if mask[sp] && mask[sr] && mask[sq] && mask[ss] {
            return T::zero();
        }
        // ⟨pq|rs⟩ = chemist (pr|qs)
        self.part.set.eri(sp, sr, sq, ss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::hubbard_model;
    use crate::spin::Spin;

    #[test]
    fn zero_density_gives_bare_h1() {
        let set = hubbard_model::<f64>(2, 1.0, 4.0, false)
            .unwrap()
            .with_electrons(0, 0)
            .unwrap();
        let gamma = DMatrix::zeros(2, 2);
        let f = build_generalized_fock(&set, &gamma).unwrap();
        for p in 0..2 {
            for q in 0..2 {
                assert_eq!(f[(p, q)], set.h1(p, q));
            }
        }
    }

    #[test]
    fn closed_shell_single_orbital_contraction() {
        // core = {0}, gamma = diag(2, 0): F_00 = h_00 + 2(00|00) - (00|00)
        let mut set = hubbard_model::<f64>(2, 0.3, 0.0, false).unwrap();
        set.set_h1(0, 0, -1.1);
        set.set_eri(0, 0, 0, 0, 0.8);
        let mut gamma = DMatrix::zeros(2, 2);
        gamma[(0, 0)] = 2.0;
        let f = build_generalized_fock(&set, &gamma).unwrap();
        assert!((f[(0, 0)] - (-1.1 + 2.0 * 0.8 - 0.8)).abs() < 1e-14);
    }

    #[test]
    fn fock_requires_matching_trace() {
        let set = hubbard_model::<f64>(2, 1.0, 4.0, false).unwrap();
        let gamma = DMatrix::zeros(2, 2); // trace 0, nelec 2
        assert!(build_generalized_fock(&set, &gamma).is_err());
    }

    #[test]
    fn fock_symmetric_with_exact_dimer_density() {
        let set = hubbard_model::<f64>(2, 1.0, 4.0, false).unwrap();
        let f0 = DMatrix::from_fn(2, 2, |i, j| set.h1(i, j));
        let ham = ActiveSpaceHamiltonian::new(&set, &[0, 1], f0);
        let sol = casci::solve_sector(&ham, 2, 0, 100).unwrap();
        let gamma = sol.one_rdm_spin_summed(0);
        let f = build_generalized_fock(&set, &gamma).unwrap();
        assert!(linalg::asymmetry(&f) < 1e-14);
        let (vals, _) = linalg::sym_eigen_sorted(&f);
        assert!(vals.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn semicanonicalize_fixed_point_is_identity() {
        let set = hubbard_model::<f64>(2, 0.0, 4.0, false).unwrap();
        let spaces = OrbitalSpaces::with_virtual_complement(2, vec![0], vec![], 0);
        let fock = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let (rot, out) = semicanonicalize(&set, &spaces, &fock);
        assert!(linalg::max_abs(&(rot - DMatrix::identity(2, 2))) < 1e-14);
        assert_eq!(out.eri(0, 0, 0, 0), 4.0);
    }

    #[test]
    fn semicanonicalize_diagonalizes_core_block() {
        // 2 core orbitals with off-diagonal Fock 0.1: rotated block diagonal.
        let mut set = hubbard_model::<f64>(3, 0.5, 1.0, false)
            .unwrap()
            .with_electrons(4, 0)
            .unwrap();
        set.set_h1(0, 0, -1.0);
        set.set_h1(1, 1, -0.5);
        let spaces = OrbitalSpaces::with_virtual_complement(3, vec![0, 1], vec![], 0);
        let mut fock = DMatrix::from_fn(3, 3, |i, j| set.h1(i, j));
        fock[(0, 1)] = 0.1;
        fock[(1, 0)] = 0.1;
        let (rot, _) = semicanonicalize(&set, &spaces, &fock);
        assert!(linalg::orthogonality_defect(&rot) < 1e-12);
        let rotated = rot.transpose() * &fock * &rot;
        assert!(rotated[(0, 1)].abs() < 1e-12);
        // ascending within the block
        assert!(rotated[(0, 0)] <= rotated[(1, 1)]);
    }

    #[test]
    fn dyall_no_core_keeps_bare_active_one_body() {
        let set = hubbard_model::<f64>(2, 1.0, 4.0, false).unwrap();
        let spaces = OrbitalSpaces::with_virtual_complement(2, vec![], vec![0, 1], 2);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((part.f_active[(x, y)] - set.h1(x, y)).abs() < 1e-12);
            }
        }
        assert!(part.eps_core.is_empty());
        assert!(part.eps_virt.is_empty());
    }

    #[test]
    fn dyall_core_field_matches_explicit_contraction() {
        // 4-site chain, core={0}, active={1,2}, virtual={3}: f differs from
        // bare h1 by the core Coulomb/exchange terms of the transformed set.
        let set = hubbard_model::<f64>(4, 1.0, 4.0, false).unwrap();
        let spaces = OrbitalSpaces::with_virtual_complement(4, vec![0], vec![1, 2], 2);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();
        for (x, &gx) in spaces.active.iter().enumerate() {
            for (y, &gy) in spaces.active.iter().enumerate() {
                let mut expect = part.set.h1(gx, gy);
                expect += 2.0 * part.set.eri(gx, gy, 0, 0) - part.set.eri(gx, 0, 0, gy);
                assert!((part.f_active[(x, y)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dyall_rotation_orthogonal_and_blocked() {
        // 6-site chain with two core and two virtual orbitals so both
        // blocks have off-diagonals to kill.
        let set = hubbard_model::<f64>(6, 1.0, 2.0, false).unwrap();
        let spaces = OrbitalSpaces::with_virtual_complement(6, vec![0, 1], vec![2, 3], 2);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();
        assert!(linalg::orthogonality_defect(&part.rotation) < 1e-12);
        // active rows/columns untouched
        for &x in &spaces.active {
            for p in 0..6 {
                let expect = if p == x { 1.0 } else { 0.0 };
                assert!((part.rotation[(p, x)] - expect).abs() < 1e-14);
                assert!((part.rotation[(x, p)] - expect).abs() < 1e-14);
            }
        }
        // Fock in the final basis is diagonal inside core and virtual blocks.
        let gamma = total_density(6, &spaces, &part.gamma_active);
        let fock = build_generalized_fock(&part.set, &gamma).unwrap();
        for block in [&spaces.core, &spaces.virt] {
            for (bi, &i) in block.iter().enumerate() {
                for &j in block.iter().skip(bi + 1) {
                    assert!(fock[(i, j)].abs() < 1e-10, "off-diagonal {i},{j}");
                }
            }
        }
        // eps ascending within each block
        assert!(part.eps_core.windows(2).all(|w| w[0] <= w[1]));
        assert!(part.eps_virt.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dyall_is_idempotent() {
        let set = hubbard_model::<f64>(4, 1.0, 4.0, false).unwrap();
        let spaces = OrbitalSpaces::with_virtual_complement(4, vec![0], vec![1, 2], 2);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();
        let again = build_dyall(&part.set, &spaces, &DyallSettings::default()).unwrap();
        for (a, b) in part.eps_core.iter().zip(&again.eps_core) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in part.eps_virt.iter().zip(&again.eps_virt) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(linalg::max_abs(&(part.f_active.clone() - &again.f_active)) < 1e-9);
    }

    #[test]
    fn casci_energy_invariant_under_semicanonicalization() {
        let set = hubbard_model::<f64>(4, 1.0, 4.0, false).unwrap();
        let spaces = OrbitalSpaces::with_virtual_complement(4, vec![0], vec![1, 2], 2);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();

        // Total CASCI reference energy from the original and the rotated
        // integrals must agree: the rotation never mixes spaces.
        let e_rotated = part.inactive_energy() + part.solve_sector(2, 0, 100).unwrap().energies[0];

        // Reference evaluated in the input basis with the bare integrals.
        let f = DMatrix::from_fn(2, 2, |x, y| {
            let (gx, gy) = (spaces.active[x], spaces.active[y]);
            set.h1(gx, gy) + 2.0 * set.eri(gx, gy, 0, 0) - set.eri(gx, 0, 0, gy)
        });
        let ham = ActiveSpaceHamiltonian::new(&set, &spaces.active, f);
        let sol = casci::solve_sector(&ham, 2, 0, 100).unwrap();
        let e_input = set.e_core() + 2.0 * set.h1(0, 0) + 2.0 * set.eri(0, 0, 0, 0)
            - set.eri(0, 0, 0, 0)
            + sol.energies[0];
        assert!((e_rotated - e_input).abs() < 1e-9);
    }

    #[test]
    fn residual_vanishes_on_all_active_quadruples() {
        let set = hubbard_model::<f64>(4, 1.0, 4.0, false).unwrap();
        let spaces = OrbitalSpaces::with_virtual_complement(4, vec![0], vec![1, 2], 2);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();
        let v = part.residual();
        let a1 = SpinOrbital::new(1, Spin::Alpha);
        let a2 = SpinOrbital::new(2, Spin::Alpha);
        assert_eq!(v.two_body(a1, a2, a2, a1), 0.0);
        // spin-off-diagonal pairs vanish
        let b1 = SpinOrbital::new(1, Spin::Beta);
        let c0 = SpinOrbital::new(0, Spin::Alpha);
        let v3 = SpinOrbital::new(3, Spin::Alpha);
        assert_eq!(v.two_body(a1, b1, c0, c0), 0.0);
        // core/virtual quadruple keeps the bare integral
        let expect = part.set.eri(3, 0, 3, 0);
        assert_eq!(v.two_body(v3, c0, v3, c0), expect);
    }

    #[test]
    fn residual_closure_recovers_full_integral() {
        // v + (all-active indicator)·⟨pq|rs⟩ == ⟨pq|rs⟩ for every quadruple.
        let set = hubbard_model::<f64>(4, 1.0, 4.0, false).unwrap();
        let spaces = OrbitalSpaces::with_virtual_complement(4, vec![0], vec![1, 2], 2);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();
        let v = part.residual();
        let mask = spaces.active_mask();
        for p in 0..4 {
            for r in 0..4 {
                for q in 0..4 {
                    for s in 0..4 {
                        let so = |t: usize| SpinOrbital::new(t, Spin::Alpha);
                        let full = part.set.eri_phys(p, q, r, s);
                        let all_active = mask[p] && mask[q] && mask[r] && mask[s];
                        let resid = v.two_body(so(p), so(r), so(q), so(s));
                        let active_part = if all_active { full } else { 0.0 };
                        assert!((resid + active_part - full).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn empty_active_with_electrons_rejected() {
        let set = hubbard_model::<f64>(2, 1.0, 4.0, false).unwrap();
        let spaces = OrbitalSpaces::new(vec![0], vec![], vec![1], 2);
        assert!(build_dyall(&set, &spaces, &DyallSettings::default()).is_err());
    }
}
