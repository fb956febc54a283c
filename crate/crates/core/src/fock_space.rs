//! Dense full-Fock-space reference engine for small systems.
//!
//! Every operator is realized as an explicit matrix over all 4^norb
//! occupation states, with the same fermionic ordering the production
//! code uses implicitly: core < active < virtual blocks, alpha before
//! beta inside each block, list order inside each spin block. Capped at
//! 4 spatial orbitals; exhaustive, slow and trustworthy.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::casci::{Determinant, SectorSolution};
use crate::integrals::{IntegralSet, OrbitalSpaces};
use crate::linalg;
use crate::partition::{DyallPartition, InteractionKernel};
use crate::scalar::Scalar;
use crate::spin::{Spin, SpinOrbital};

#[derive(Debug, Error)]
pub enum FockSpaceError {
    #[error("dense Fock space supports at most 4 spatial orbitals, got {0}")]
    Capacity(usize),
    #[error("zeroth-order ground state in the requested sector is degenerate (gap {0:e})")]
    DegenerateGround(f64),
}

/// Occupation-number basis over all spin orbitals of a small system.
pub struct FockSpace {
    pub norb: usize,
    pub n_so: usize,
    pub dim: usize,
    /// position -> spin orbital, in the global fermionic order
    pub order: Vec<SpinOrbital>,
    /// spin-orbital code -> position
    pub position: Vec<usize>,
    core_mask: u64,
    active_alpha_start: usize,
    active_beta_start: usize,
    n_active: usize,
}

impl FockSpace {
    /// Ordering follows the partition's core/active/virtual lists.
    pub fn new<T: Scalar>(part: &DyallPartition<T>) -> Result<Self, FockSpaceError> {
        Self::with_spaces(part.norb(), &part.spaces)
    }

    /// Build from the orbital partition alone.
    pub fn with_spaces(norb: usize, spaces: &OrbitalSpaces) -> Result<Self, FockSpaceError> {
        if norb > 4 {
            return Err(FockSpaceError::Capacity(norb));
        }
        let mut order = Vec::with_capacity(2 * norb);
        for block in [&spaces.core, &spaces.active, &spaces.virt] {
            for spin in Spin::BOTH {
                for &p in block.iter() {
                    order.push(SpinOrbital::new(p, spin));
                }
            }
        }
        let mut position = vec![usize::MAX; 2 * norb];
        for (pos, so) in order.iter().enumerate() {
            position[so.code()] = pos;
        }
        let n_c = spaces.core.len();
        let n_a = spaces.active.len();
        let core_mask = if n_c == 0 { 0 } else { (1u64 << (2 * n_c)) - 1 };
        Ok(Self {
            norb,
            n_so: 2 * norb,
            dim: 1usize << (2 * norb),
            order,
            position,
            core_mask,
            active_alpha_start: 2 * n_c,
            active_beta_start: 2 * n_c + n_a,
            n_active: n_a,
        })
    }

    #[inline]
    fn apply_ann(mask: u64, pos: usize) -> Option<(u64, i8)> {
        if mask & (1u64 << pos) == 0 {
            return None;
        }
        let below = (mask & ((1u64 << pos) - 1)).count_ones();
        let phase = if below.is_multiple_of(2) { 1 } else { -1 };
        Some((mask & !(1u64 << pos), phase))
    }

    #[inline]
    fn apply_cre(mask: u64, pos: usize) -> Option<(u64, i8)> {
        if mask & (1u64 << pos) != 0 {
            return None;
        }
        let below = (mask & ((1u64 << pos) - 1)).count_ones();
        let phase = if below.is_multiple_of(2) { 1 } else { -1 };
        Some((mask | (1u64 << pos), phase))
    }

    /// Dense matrix of p†r over the full space.
    pub fn one_body_op<T: Scalar>(&self, p: SpinOrbital, r: SpinOrbital) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        let (pp, pr) = (self.position[p.code()], self.position[r.code()]);
        for ket in 0..self.dim as u64 {
            if let Some((m1, s1)) = Self::apply_ann(ket, pr) {
                if let Some((m2, s2)) = Self::apply_cre(m1, pp) {
                    out[(m2 as usize, ket as usize)] += T::cast((s1 * s2) as f64);
                }
            }
        }
        out
    }

    /// Apply p†r to a dense state vector.
    pub fn apply_one_body<T: Scalar>(
        &self,
        p: SpinOrbital,
        r: SpinOrbital,
        v: &DVector<T>,
    ) -> DVector<T> {
        let mut out = DVector::zeros(self.dim);
        let (pp, pr) = (self.position[p.code()], self.position[r.code()]);
        for ket in 0..self.dim as u64 {
            let c = v[ket as usize];
            if c == T::zero() {
                continue;
            }
            if let Some((m1, s1)) = Self::apply_ann(ket, pr) {
                if let Some((m2, s2)) = Self::apply_cre(m1, pp) {
                    out[m2 as usize] += T::cast((s1 * s2) as f64) * c;
                }
            }
        }
        out
    }

    fn add_two_body_term<T: Scalar>(
        &self,
        h: &mut DMatrix<T>,
        coeff: T,
        p: SpinOrbital,
        q: SpinOrbital,
        s: SpinOrbital,
        r: SpinOrbital,
    ) {
        // term coeff · p† q† s r, applied right to left
        let (pp, pq, ps, pr) = (
            self.position[p.code()],
            self.position[q.code()],
            self.position[s.code()],
            self.position[r.code()],
        );
        for ket in 0..self.dim as u64 {
            let Some((m1, s1)) = Self::apply_ann(ket, pr) else {
                continue;
            };
            let Some((m2, s2)) = Self::apply_ann(m1, ps) else {
                continue;
            };
            let Some((m3, s3)) = Self::apply_cre(m2, pq) else {
                continue;
            };
            let Some((m4, s4)) = Self::apply_cre(m3, pp) else {
                continue;
            };
            let sign = (s1 * s2 * s3 * s4) as f64;
            h[(m4 as usize, ket as usize)] += coeff * T::cast(sign);
        }
    }

    /// Dense H from the bare integrals.
    pub fn hamiltonian<T: Scalar>(&self, set: &IntegralSet<T>) -> DMatrix<T> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        let half = T::cast(0.5);
        for p in 0..self.norb {
            for q in 0..self.norb {
                let hpq = set.h1(p, q);
                if hpq != T::zero() {
                    for spin in Spin::BOTH {
                        let op = self
                            .one_body_op::<T>(SpinOrbital::new(p, spin), SpinOrbital::new(q, spin));
                        h += op * hpq;
                    }
                }
                for r in 0..self.norb {
                    for s in 0..self.norb {
                        let v = set.eri(p, q, r, s);
                        if v == T::zero() {
                            continue;
                        }
                        for sigma in Spin::BOTH {
                            for tau in Spin::BOTH {
                                self.add_two_body_term(
                                    &mut h,
                                    half * v,
                                    SpinOrbital::new(p, sigma),
                                    SpinOrbital::new(r, tau),
                                    SpinOrbital::new(s, tau),
                                    SpinOrbital::new(q, sigma),
                                );
                            }
                        }
                    }
                }
            }
        }
        h
    }

    /// Dense H_D: orbital energies on core/virtual, effective one-body f
    /// plus bare two-electron integrals inside the active space. The
    /// additive constant is dropped.
    pub fn dyall_hamiltonian<T: Scalar>(&self, part: &DyallPartition<T>) -> DMatrix<T> {
        let spaces = &part.spaces;
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for spin in Spin::BOTH {
            for (k, &i) in spaces.core.iter().enumerate() {
                let op =
                    self.one_body_op::<T>(SpinOrbital::new(i, spin), SpinOrbital::new(i, spin));
                h += op * part.eps_core[k];
            }
            for (k, &a) in spaces.virt.iter().enumerate() {
                let op =
                    self.one_body_op::<T>(SpinOrbital::new(a, spin), SpinOrbital::new(a, spin));
                h += op * part.eps_virt[k];
            }
            for (x, &gx) in spaces.active.iter().enumerate() {
                for (y, &gy) in spaces.active.iter().enumerate() {
                    let f = part.f_active[(x, y)];
                    if f != T::zero() {
                        let op = self.one_body_op::<T>(
                            SpinOrbital::new(gx, spin),
                            SpinOrbital::new(gy, spin),
                        );
                        h += op * f;
                    }
                }
            }
        }
        let half = T::cast(0.5);
        for &gx in &spaces.active {
            for &gy in &spaces.active {
                for &gz in &spaces.active {
                    for &gw in &spaces.active {
                        let v = part.set.eri(gx, gy, gz, gw);
                        if v == T::zero() {
                            continue;
                        }
                        for sigma in Spin::BOTH {
                            for tau in Spin::BOTH {
                                self.add_two_body_term(
                                    &mut h,
                                    half * v,
                                    SpinOrbital::new(gx, sigma),
                                    SpinOrbital::new(gz, tau),
                                    SpinOrbital::new(gw, tau),
                                    SpinOrbital::new(gy, sigma),
                                );
                            }
                        }
                    }
                }
            }
        }
        h
    }

    /// Dense one-body residual Σ v_pq p†q.
    pub fn residual_one_body<T: Scalar>(&self, part: &DyallPartition<T>) -> DMatrix<T> {
        let v = part.residual();
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for p in 0..self.norb {
            for q in 0..self.norb {
                for spin in Spin::BOTH {
                    let (sp, sq) = (SpinOrbital::new(p, spin), SpinOrbital::new(q, spin));
                    let val = v.one_body(sp, sq);
                    if val != T::zero() {
                        h += self.one_body_op::<T>(sp, sq) * val;
                    }
                }
            }
        }
        h
    }

    /// Dense two-body residual ½ Σ v_{pr,qs} p†q†s r.
    pub fn residual_two_body<T: Scalar>(&self, part: &DyallPartition<T>) -> DMatrix<T> {
        let v = part.residual();
        let half = T::cast(0.5);
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for pc in 0..self.n_so {
            for rc in 0..self.n_so {
                for qc in 0..self.n_so {
                    for sc in 0..self.n_so {
                        let (p, r, q, s) = (
                            SpinOrbital::from_code(pc),
                            SpinOrbital::from_code(rc),
                            SpinOrbital::from_code(qc),
                            SpinOrbital::from_code(sc),
                        );
                        let val = v.two_body(p, r, q, s);
                        if val != T::zero() {
                            self.add_two_body_term(&mut h, half * val, p, q, s, r);
                        }
                    }
                }
            }
        }
        h
    }

    /// Indices of the basis states with the given electron count and sz2.
    pub fn sector_indices(&self, nelec: usize, sz2: i32) -> Vec<usize> {
        (0..self.dim)
            .filter(|&mask| {
                let m = mask as u64;
                if m.count_ones() as usize != nelec {
                    return false;
                }
                let mut s = 0;
                for pos in 0..self.n_so {
                    if m & (1u64 << pos) != 0 {
                        s += self.order[pos].spin().sz2();
                    }
                }
                s == sz2
            })
            .collect()
    }

    /// Mask with every core spin orbital occupied.
    pub fn full_core_mask(&self) -> u64 {
        self.core_mask
    }

    /// Position of a spin orbital in the global order.
    pub fn position_of(&self, so: SpinOrbital) -> usize {
        self.position[so.code()]
    }

    /// Embed an active-space CI vector on top of a fixed inactive
    /// occupation mask. The active determinant convention (alpha string
    /// then beta string) coincides with the global position order, so no
    /// phases appear here.
    pub fn assemble_state<T: Scalar>(
        &self,
        inactive_mask: u64,
        active: &SectorSolution<T>,
        state: usize,
    ) -> DVector<T> {
        assert_eq!(active.m, self.n_active);
        let coeffs = active.vectors.column(state);
        let mut out = DVector::zeros(self.dim);
        for (k, det) in active.basis.iter().enumerate() {
            let mask = inactive_mask | self.active_det_mask(det);
            out[mask as usize] += coeffs[k];
        }
        out
    }

    fn active_det_mask(&self, det: &Determinant) -> u64 {
        let mut mask = 0u64;
        for x in 0..self.n_active {
            if det.alpha & (1u64 << x) != 0 {
                mask |= 1u64 << (self.active_alpha_start + x);
            }
            if det.beta & (1u64 << x) != 0 {
                mask |= 1u64 << (self.active_beta_start + x);
            }
        }
        mask
    }
}

/// One eigenstate of H_D in the physical sector with its excitation
/// energy and the full one-body transition-density matrix to the ground
/// state, `d[p][r]` = ⟨K|p†r|0⟩ over spin-orbital codes.
pub struct BruteState<T: Scalar> {
    pub omega: T,
    pub d: DMatrix<T>,
}

/// Diagonalize H_D in the (nelec, sz2) sector of the full Fock space and
/// return ω_K and ⟨K|p†r|0⟩ for every excited state.
pub fn brute_transition_densities<T: Scalar>(
    space: &FockSpace,
    part: &DyallPartition<T>,
    nelec: usize,
    sz2: i32,
) -> Result<Vec<BruteState<T>>, FockSpaceError> {
    let hd = space.dyall_hamiltonian(part);
    let idx = space.sector_indices(nelec, sz2);
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |i, j| hd[(idx[i], idx[j])]);
    let (vals, vecs) = linalg::sym_eigen_sorted(&sub);
    if k > 1 && (vals[1] - vals[0]) < T::cast(1e-8) {
        return Err(FockSpaceError::DegenerateGround(
            (vals[1] - vals[0]).as_f64(),
        ));
    }

    // Lift sector eigenvectors back into the full space.
    let lift = |col: usize| -> DVector<T> {
        let mut v = DVector::zeros(space.dim);
        for (row, &full) in idx.iter().enumerate() {
            v[full] = vecs[(row, col)];
        }
        v
    };
    let ground = lift(0);
    let n_so = space.n_so;
    let mut out = Vec::with_capacity(k.saturating_sub(1));
    for state in 1..k {
        let vk = lift(state);
        let mut d = DMatrix::zeros(n_so, n_so);
        for pc in 0..n_so {
            for rc in 0..n_so {
                let moved = space.apply_one_body(
                    SpinOrbital::from_code(pc),
                    SpinOrbital::from_code(rc),
                    &ground,
                );
                d[(pc, rc)] = vk.dot(&moved);
            }
        }
        out.push(BruteState {
            omega: vals[state] - vals[0],
            d,
        });
    }
    Ok(out)
}

/// Sum-over-states ring channel of the second order:
/// −½ Σ_{K,K'≠0} (d_K · v · d_K')² / (ω_K + ω_K'), the d-vector
/// restriction of the two-body residual. This is the direct (ring)
/// part only; exchange contractions are outside the channel.
pub fn brute_ring_second_order<T: Scalar, K: InteractionKernel<T>>(
    space: &FockSpace,
    part: &DyallPartition<T>,
    kernel: &K,
    nelec: usize,
    sz2: i32,
) -> Result<T, FockSpaceError> {
    let states = brute_transition_densities(space, part, nelec, sz2)?;
    let n_so = space.n_so;
    let coupling = |dn: &DMatrix<T>, dm: &DMatrix<T>| -> T {
        let mut acc = T::zero();
        for pc in 0..n_so {
            for rc in 0..n_so {
                let vn = dn[(pc, rc)];
                if vn == T::zero() {
                    continue;
                }
                for qc in 0..n_so {
                    for sc in 0..n_so {
                        let vm = dm[(qc, sc)];
                        if vm == T::zero() {
                            continue;
                        }
                        acc +=
                            vn * kernel.two_body(
                                SpinOrbital::from_code(pc),
                                SpinOrbital::from_code(rc),
                                SpinOrbital::from_code(qc),
                                SpinOrbital::from_code(sc),
                            ) * vm;
                    }
                }
            }
        }
        acc
    };
    let half = T::cast(0.5);
    let mut e2 = T::zero();
    for kn in &states {
        for km in &states {
            let b_nm = coupling(&kn.d, &km.d);
            e2 -= half * b_nm * b_nm / (kn.omega + km.omega);
        }
    }
    Ok(e2)
}

/// Exact Rayleigh-Schrödinger second-order energy from the two-body
/// residual: −Σ_{K≠0} |⟨K|V₂|0⟩|² / (E_K − E_0), all in the physical
/// sector of H_D. The one-body residual is excluded by construction.
pub fn brute_second_order<T: Scalar>(
    space: &FockSpace,
    part: &DyallPartition<T>,
    nelec: usize,
    sz2: i32,
) -> Result<T, FockSpaceError> {
    let hd = space.dyall_hamiltonian(part);
    let v2 = space.residual_two_body(part);
    let idx = space.sector_indices(nelec, sz2);
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |i, j| hd[(idx[i], idx[j])]);
    let vsub = DMatrix::from_fn(k, k, |i, j| v2[(idx[i], idx[j])]);
    let (vals, vecs) = linalg::sym_eigen_sorted(&sub);
    if k > 1 && (vals[1] - vals[0]) < T::cast(1e-8) {
        return Err(FockSpaceError::DegenerateGround(
            (vals[1] - vals[0]).as_f64(),
        ));
    }
    let v0 = vecs.column(0).into_owned();
    let coupled = &vsub * &v0;
    let mut e2 = T::zero();
    for state in 1..k {
        let amp = vecs.column(state).dot(&coupled);
        e2 -= amp * amp / (vals[state] - vals[0]);
    }
    Ok(e2)
}
