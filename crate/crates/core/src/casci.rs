//! Exact diagonalization of the active-space Hamiltonian and one-body
//! transition densities between sector eigenstates.
//!
//! Determinants are stored as alpha/beta bitmasks over the active
//! orbitals. The fermionic convention is fixed once and for all: the
//! creation-operator string of a determinant lists the alpha block
//! first (ascending spatial index), then the beta block. All phases
//! below follow from that ordering; beta operators pick up an extra
//! (-1)^n_alpha when crossing the alpha block.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::integrals::IntegralSet;
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum CasciError {
    #[error("{0}")]
    Usage(String),
    #[error(
        "sector dimension {dim} exceeds the configured cap {cap}; choose a smaller active space"
    )]
    Capacity { dim: usize, cap: usize },
    #[error("zeroth-order ground state is degenerate (gap {gap:e} < {tol:e} Hartree)")]
    DegenerateGround { gap: f64, tol: f64 },
}

/// Default cap on the dense sector dimension.
pub const DEFAULT_SECTOR_CAP: usize = 20_000;

/// One Slater determinant over the active orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Determinant {
    pub alpha: u64,
    pub beta: u64,
}

impl Determinant {
    pub fn n_alpha(&self) -> u32 {
        self.alpha.count_ones()
    }

    pub fn n_beta(&self) -> u32 {
        self.beta.count_ones()
    }
}

/// Local spin-orbital index within the active space: `0..m` are the
/// alpha spatial slots, `m..2m` the beta slots, matching the string
/// ordering of [`Determinant`].
pub type LocalSo = usize;

#[inline]
fn bits_below(mask: u64, pos: usize) -> u32 {
    (mask & ((1u64 << pos) - 1)).count_ones()
}

/// Apply an annihilation operator; returns the new determinant and the
/// fermionic phase, or None when the spin orbital is empty.
pub fn annihilate(det: Determinant, m: usize, so: LocalSo) -> Option<(Determinant, i8)> {
    let (mask, pos, cross_alpha) = if so < m {
        (det.alpha, so, 0)
    } else {
        (det.beta, so - m, det.n_alpha())
    };
    if mask & (1u64 << pos) == 0 {
        return None;
    }
    let parity = bits_below(mask, pos) + cross_alpha;
    let phase = if parity.is_multiple_of(2) { 1 } else { -1 };
    let mut out = det;
    if so < m {
        out.alpha &= !(1u64 << pos);
    } else {
        out.beta &= !(1u64 << pos);
    }
    Some((out, phase))
}

/// Apply a creation operator; returns None when the spin orbital is
/// already occupied.
pub fn create(det: Determinant, m: usize, so: LocalSo) -> Option<(Determinant, i8)> {
    let (mask, pos, cross_alpha) = if so < m {
        (det.alpha, so, 0)
    } else {
        (det.beta, so - m, det.n_alpha())
    };
    if mask & (1u64 << pos) != 0 {
        return None;
    }
    let parity = bits_below(mask, pos) + cross_alpha;
    let phase = if parity.is_multiple_of(2) { 1 } else { -1 };
    let mut out = det;
    if so < m {
        out.alpha |= 1u64 << pos;
    } else {
        out.beta |= 1u64 << pos;
    }
    Some((out, phase))
}

/// Whether a (nelec, sz2) sector exists for `m` active orbitals.
pub fn sector_feasible(m: usize, nelec: usize, sz2: i32) -> bool {
    if nelec > 2 * m {
        return false;
    }
    let n = nelec as i64;
    let s = sz2 as i64;
    if (n + s) % 2 != 0 || s.abs() > n {
        return false;
    }
    let na = (n + s) / 2;
    let nb = (n - s) / 2;
    na >= 0 && nb >= 0 && na as usize <= m && nb as usize <= m
}

fn combinations(m: usize, k: usize) -> Vec<u64> {
    if k > m {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let limit = 1u64 << m;
    let mut out = Vec::new();
    let mut mask = (1u64 << k) - 1;
    while mask < limit {
        out.push(mask);
        // Gosper's hack: next bitmask with the same popcount.
        let u = mask & mask.wrapping_neg();
        let v = mask + u;
        mask = v | (((v ^ mask) / u) >> 2);
    }
    out
}

/// All determinants of the (nelec, sz2) sector in lexicographic
/// (alpha, beta) bitmask order.
pub fn enumerate_sector(m: usize, nelec: usize, sz2: i32) -> Result<Vec<Determinant>, CasciError> {
    if !sector_feasible(m, nelec, sz2) {
        return Err(CasciError::Usage(format!(
            "no ({nelec}, sz2={sz2}) sector for {m} active orbitals"
        )));
    }
    let na = ((nelec as i64 + sz2 as i64) / 2) as usize;
    let nb = ((nelec as i64 - sz2 as i64) / 2) as usize;
    let alphas = combinations(m, na);
    let betas = combinations(m, nb);
    let mut out = Vec::with_capacity(alphas.len() * betas.len());
    for &a in &alphas {
        for &b in &betas {
            out.push(Determinant { alpha: a, beta: b });
        }
    }
    Ok(out)
}

/// Effective one-body matrix and all-active two-electron integrals in
/// active-local spatial indexing (chemist notation, dense m⁴ block).
#[derive(Debug, Clone)]
pub struct ActiveSpaceHamiltonian<T: Scalar> {
    pub m: usize,
    pub f: DMatrix<T>,
    eri: Vec<T>,
}

impl<T: Scalar> ActiveSpaceHamiltonian<T> {
    pub fn new(set: &IntegralSet<T>, active: &[usize], f: DMatrix<T>) -> Self {
        let m = active.len();
        assert_eq!(f.nrows(), m);
        let mut eri = vec![T::zero(); m * m * m * m];
        for (x, &gx) in active.iter().enumerate() {
            for (y, &gy) in active.iter().enumerate() {
                for (z, &gz) in active.iter().enumerate() {
                    for (w, &gw) in active.iter().enumerate() {
                        eri[((x * m + y) * m + z) * m + w] = set.eri(gx, gy, gz, gw);
                    }
                }
            }
        }
        Self { m, f, eri }
    }

    /// Chemist `(xy|zw)` in active-local indices.
    #[inline]
    pub fn eri(&self, x: usize, y: usize, z: usize, w: usize) -> T {
        let m = self.m;
        self.eri[((x * m + y) * m + z) * m + w]
    }
}

fn occupied_list(mask: u64, m: usize) -> Vec<usize> {
    (0..m).filter(|&p| mask & (1u64 << p) != 0).collect()
}

/// Sign of a same-spin single excitation `from -> to` against the
/// occupation mask: parity of the occupied orbitals strictly between.
#[inline]
fn exc_sign(mask: u64, from: usize, to: usize) -> i8 {
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    let between = if hi - lo > 1 {
        (mask & ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1)).count_ones()
    } else {
        0
    };
    if between.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Dense symmetric matrix of the active Hamiltonian in the given
/// determinant basis, by the Slater-Condon rules.
pub fn build_active_hamiltonian<T: Scalar>(
    ham: &ActiveSpaceHamiltonian<T>,
    basis: &[Determinant],
) -> DMatrix<T> {
    let m = ham.m;
    let dim = basis.len();
    let mut h = DMatrix::zeros(dim, dim);

    for (jj, det_j) in basis.iter().enumerate() {
        let occ_a = occupied_list(det_j.alpha, m);
        let occ_b = occupied_list(det_j.beta, m);

        // Diagonal: one-body sum plus pairwise Coulomb minus same-spin exchange.
        let mut diag = T::zero();
        for &p in occ_a.iter().chain(&occ_b) {
            diag += ham.f[(p, p)];
        }
        let mut two = T::zero();
        for list in [&occ_a, &occ_b] {
            for (ai, &p) in list.iter().enumerate() {
                for &q in list.iter().skip(ai + 1) {
                    two += ham.eri(p, p, q, q) - ham.eri(p, q, q, p);
                }
            }
        }
        for &p in &occ_a {
            for &q in &occ_b {
                two += ham.eri(p, p, q, q);
            }
        }
        h[(jj, jj)] = diag + two;

        for (ii, det_i) in basis.iter().enumerate() {
            if ii == jj {
                continue;
            }
            let da = det_i.alpha ^ det_j.alpha;
            let db = det_i.beta ^ det_j.beta;
            let ka = da.count_ones() / 2;
            let kb = db.count_ones() / 2;
            let elem = match (ka, kb) {
                (1, 0) | (0, 1) => {
                    let (mask_j, mask_i, d, occ_same, occ_other) = if ka == 1 {
                        (det_j.alpha, det_i.alpha, da, &occ_a, &occ_b)
                    } else {
                        (det_j.beta, det_i.beta, db, &occ_b, &occ_a)
                    };
                    let hole = (d & mask_j).trailing_zeros() as usize;
                    let part = (d & mask_i).trailing_zeros() as usize;
                    let sign = exc_sign(mask_j, hole, part);
                    let mut v = ham.f[(part, hole)];
                    for &q in occ_same.iter() {
                        v += ham.eri(part, hole, q, q) - ham.eri(part, q, q, hole);
                    }
                    for &q in occ_other.iter() {
                        v += ham.eri(part, hole, q, q);
                    }
                    T::cast(sign as f64) * v
                }
                (2, 0) | (0, 2) => {
                    let (mask_j, mask_i, d) = if ka == 2 {
                        (det_j.alpha, det_i.alpha, da)
                    } else {
                        (det_j.beta, det_i.beta, db)
                    };
                    let holes = d & mask_j;
                    let parts = d & mask_i;
                    let m1 = holes.trailing_zeros() as usize;
                    let m2 = 63 - holes.leading_zeros() as usize;
                    let p1 = parts.trailing_zeros() as usize;
                    let p2 = 63 - parts.leading_zeros() as usize;
                    // Pair lowest hole with lowest particle, then the rest
                    // on the intermediate mask.
                    let s1 = exc_sign(mask_j, m1, p1);
                    let inter = mask_j & !(1u64 << m1) | (1u64 << p1);
                    let s2 = exc_sign(inter, m2, p2);
                    let sign = s1 * s2;
                    let v = ham.eri(p1, m1, p2, m2) - ham.eri(p2, m1, p1, m2);
                    T::cast(sign as f64) * v
                }
                (1, 1) => {
                    let hole_a = (da & det_j.alpha).trailing_zeros() as usize;
                    let part_a = (da & det_i.alpha).trailing_zeros() as usize;
                    let hole_b = (db & det_j.beta).trailing_zeros() as usize;
                    let part_b = (db & det_i.beta).trailing_zeros() as usize;
                    let sign = exc_sign(det_j.alpha, hole_a, part_a)
                        * exc_sign(det_j.beta, hole_b, part_b);
                    T::cast(sign as f64) * ham.eri(part_a, hole_a, part_b, hole_b)
                }
                _ => T::zero(),
            };
            h[(ii, jj)] = elem;
        }
    }
    h
}

/// Full spectrum of one (nelec, sz2) sector.
#[derive(Debug, Clone)]
pub struct SectorSolution<T: Scalar> {
    pub m: usize,
    pub nelec: usize,
    pub sz2: i32,
    pub basis: Vec<Determinant>,
    pub energies: Vec<T>,
    /// Orthonormal eigenvectors, one column per state, ascending energy.
    pub vectors: DMatrix<T>,
    index: HashMap<(u64, u64), usize>,
}

impl<T: Scalar> SectorSolution<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn det_index(&self, det: &Determinant) -> Option<usize> {
        self.index.get(&(det.alpha, det.beta)).copied()
    }

    pub fn state(&self, k: usize) -> DVector<T> {
        self.vectors.column(k).into_owned()
    }

    /// E_1 - E_0, or None for a one-state sector.
    pub fn gap(&self) -> Option<T> {
        (self.energies.len() > 1).then(|| self.energies[1] - self.energies[0])
    }

    /// Spin-summed one-body density matrix of state `k` over the active
    /// spatial orbitals.
    pub fn one_rdm_spin_summed(&self, k: usize) -> DMatrix<T> {
        let d = transition_one_body(self, k, self, k).expect("identical sectors");
        let m = self.m;
        let mut out = DMatrix::zeros(m, m);
        for x in 0..m {
            for y in 0..m {
                out[(x, y)] = d[(x, y)] + d[(m + x, m + y)];
            }
        }
        out
    }
}

/// Diagonalize the active Hamiltonian in one sector, returning the full
/// spectrum.
pub fn solve_sector<T: Scalar>(
    ham: &ActiveSpaceHamiltonian<T>,
    nelec: usize,
    sz2: i32,
    cap: usize,
) -> Result<SectorSolution<T>, CasciError> {
    let basis = enumerate_sector(ham.m, nelec, sz2)?;
    if basis.len() > cap {
        return Err(CasciError::Capacity {
            dim: basis.len(),
            cap,
        });
    }
    let h = build_active_hamiltonian(ham, &basis);
    let (energies, vectors) = linalg::sym_eigen_sorted(&h);
    let index = basis
        .iter()
        .enumerate()
        .map(|(i, d)| ((d.alpha, d.beta), i))
        .collect();
    Ok(SectorSolution {
        m: ham.m,
        nelec,
        sz2,
        basis,
        energies,
        vectors,
        index,
    })
}

fn check_one_body_compat<T: Scalar>(
    bra: &SectorSolution<T>,
    ket: &SectorSolution<T>,
) -> Result<(), CasciError> {
    if bra.m != ket.m || bra.nelec != ket.nelec || bra.sz2 != ket.sz2 {
        return Err(CasciError::Usage(format!(
            "x\u{2020}y needs matching sectors, got ({}, {}) vs ({}, {})",
            bra.nelec, bra.sz2, ket.nelec, ket.sz2
        )));
    }
    Ok(())
}

/// ⟨bra_k | x†y | ket_l⟩ over local active spin orbitals, as a 2m × 2m
/// matrix `D[x][y]`. The sectors must match.
pub fn transition_one_body<T: Scalar>(
    bra: &SectorSolution<T>,
    bra_state: usize,
    ket: &SectorSolution<T>,
    ket_state: usize,
) -> Result<DMatrix<T>, CasciError> {
    check_one_body_compat(bra, ket)?;
    let m = bra.m;
    let n_so = 2 * m;
    let bvec = bra.vectors.column(bra_state);
    let kvec = ket.vectors.column(ket_state);
    let mut d = DMatrix::zeros(n_so, n_so);
    for (jj, det) in ket.basis.iter().enumerate() {
        let cj = kvec[jj];
        if cj == T::zero() {
            continue;
        }
        for y in 0..n_so {
            let Some((d1, s1)) = annihilate(*det, m, y) else {
                continue;
            };
            for x in 0..n_so {
                let Some((d2, s2)) = create(d1, m, x) else {
                    continue;
                };
                if let Some(ii) = bra.det_index(&d2) {
                    d[(x, y)] += bvec[ii] * T::cast((s1 * s2) as f64) * cj;
                }
            }
        }
    }
    Ok(d)
}

/// ⟨bra_k | x† | ket_l⟩: bra must have one more electron and sz2 offset
/// by ±1. Returns a vector over local active spin orbitals.
pub fn transition_create<T: Scalar>(
    bra: &SectorSolution<T>,
    bra_state: usize,
    ket: &SectorSolution<T>,
    ket_state: usize,
) -> Result<DVector<T>, CasciError> {
    if bra.m != ket.m || bra.nelec != ket.nelec + 1 || (bra.sz2 - ket.sz2).abs() != 1 {
        return Err(CasciError::Usage(format!(
            "x\u{2020} needs bra = ket + one electron, got ({}, {}) vs ({}, {})",
            bra.nelec, bra.sz2, ket.nelec, ket.sz2
        )));
    }
    let m = bra.m;
    let bvec = bra.vectors.column(bra_state);
    let kvec = ket.vectors.column(ket_state);
    let mut out = DVector::zeros(2 * m);
    for (jj, det) in ket.basis.iter().enumerate() {
        let cj = kvec[jj];
        if cj == T::zero() {
            continue;
        }
        for x in 0..2 * m {
            let Some((d1, s1)) = create(*det, m, x) else {
                continue;
            };
            if let Some(ii) = bra.det_index(&d1) {
                out[x] += bvec[ii] * T::cast(s1 as f64) * cj;
            }
        }
    }
    Ok(out)
}

/// ⟨bra_k | y | ket_l⟩: bra must have one electron fewer.
pub fn transition_annihilate<T: Scalar>(
    bra: &SectorSolution<T>,
    bra_state: usize,
    ket: &SectorSolution<T>,
    ket_state: usize,
) -> Result<DVector<T>, CasciError> {
    if bra.m != ket.m || bra.nelec + 1 != ket.nelec || (bra.sz2 - ket.sz2).abs() != 1 {
        return Err(CasciError::Usage(format!(
            "y needs bra = ket - one electron, got ({}, {}) vs ({}, {})",
            bra.nelec, bra.sz2, ket.nelec, ket.sz2
        )));
    }
    let m = bra.m;
    let bvec = bra.vectors.column(bra_state);
    let kvec = ket.vectors.column(ket_state);
    let mut out = DVector::zeros(2 * m);
    for (jj, det) in ket.basis.iter().enumerate() {
        let cj = kvec[jj];
        if cj == T::zero() {
            continue;
        }
        for y in 0..2 * m {
            let Some((d1, s1)) = annihilate(*det, m, y) else {
                continue;
            };
            if let Some(ii) = bra.det_index(&d1) {
                out[y] += bvec[ii] * T::cast(s1 as f64) * cj;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::hubbard_model;

    fn dimer_active() -> ActiveSpaceHamiltonian<f64> {
        let set = hubbard_model::<f64>(2, 1.0, 4.0, false).unwrap();
        let f = DMatrix::from_fn(2, 2, |i, j| set.h1(i, j));
        ActiveSpaceHamiltonian::new(&set, &[0, 1], f)
    }

    #[test]
    fn sector_counts() {
        assert_eq!(enumerate_sector(2, 2, 0).unwrap().len(), 4);
        assert_eq!(enumerate_sector(2, 1, 1).unwrap().len(), 2);
        assert_eq!(enumerate_sector(6, 6, 0).unwrap().len(), 400);
        assert!(enumerate_sector(2, 1, 0).is_err());
        assert!(enumerate_sector(2, 5, 1).is_err());
    }

    #[test]
    fn sector_order_is_lexicographic() {
        let dets = enumerate_sector(2, 2, 0).unwrap();
        let masks: Vec<(u64, u64)> = dets.iter().map(|d| (d.alpha, d.beta)).collect();
        assert_eq!(masks, vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn hubbard_dimer_full_spectrum() {
        // 4x4 analytic spectrum for t=1, U=4: {U/2 - sqrt(U^2/4 + 4t^2), 0, U, U/2 + sqrt(...)}
        let ham = dimer_active();
        let sol = solve_sector(&ham, 2, 0, DEFAULT_SECTOR_CAP).unwrap();
        let expected = [2.0 - 8.0_f64.sqrt(), 0.0, 4.0, 2.0 + 8.0_f64.sqrt()];
        for (e, ex) in sol.energies.iter().zip(expected) {
            assert!((e - ex).abs() < 1e-12, "{e} vs {ex}");
        }
        assert!((sol.energies[0] - (-0.8284271247461903)).abs() < 1e-12);
    }

    #[test]
    fn noninteracting_dimer_ground_is_band_energy() {
        // U = 0: two electrons in the bonding orbital, E = -2t.
        let set = hubbard_model::<f64>(2, 1.0, 0.0, false).unwrap();
        let f = DMatrix::from_fn(2, 2, |i, j| set.h1(i, j));
        let ham = ActiveSpaceHamiltonian::new(&set, &[0, 1], f);
        let sol = solve_sector(&ham, 2, 0, DEFAULT_SECTOR_CAP).unwrap();
        assert!((sol.energies[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn hubbard_dimer_one_electron_sector() {
        let ham = dimer_active();
        let sol = solve_sector(&ham, 1, 1, DEFAULT_SECTOR_CAP).unwrap();
        assert_eq!(sol.dim(), 2);
        assert!((sol.energies[0] + 1.0).abs() < 1e-12);
        assert!((sol.energies[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_sector_is_single_vacuum_state() {
        let ham = dimer_active();
        let sol = solve_sector(&ham, 0, 0, DEFAULT_SECTOR_CAP).unwrap();
        assert_eq!(sol.dim(), 1);
        assert!(sol.energies[0].abs() < 1e-14);
    }

    #[test]
    fn capacity_cap_enforced() {
        let ham = dimer_active();
        match solve_sector(&ham, 2, 0, 3) {
            Err(CasciError::Capacity { dim: 4, cap: 3 }) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn one_orbital_double_occupation_diagonal() {
        // <x↑x↓|H|x↑x↓> = 2 f_xx + (xx|xx)
        let set = hubbard_model::<f64>(2, 0.0, 4.0, false).unwrap();
        let f = DMatrix::from_row_slice(1, 1, &[-0.7]);
        let ham = ActiveSpaceHamiltonian::new(&set, &[0], f);
        let basis = enumerate_sector(1, 2, 0).unwrap();
        let h = build_active_hamiltonian(&ham, &basis);
        assert!((h[(0, 0)] - (2.0 * -0.7 + 4.0)).abs() < 1e-14);
    }

    #[test]
    fn eigenvectors_orthonormal_and_resolve_hamiltonian() {
        let ham = dimer_active();
        let sol = solve_sector(&ham, 2, 0, DEFAULT_SECTOR_CAP).unwrap();
        assert!(linalg::orthogonality_defect(&sol.vectors) < 1e-10);
        let h = build_active_hamiltonian(&ham, &sol.basis);
        for k in 0..sol.dim() {
            let v = sol.state(k);
            let res = &h * &v - &v * sol.energies[k];
            assert!(res.norm() < 1e-8);
        }
    }

    #[test]
    fn number_operator_expectation() {
        let ham = dimer_active();
        let sol = solve_sector(&ham, 2, 0, DEFAULT_SECTOR_CAP).unwrap();
        let d = transition_one_body(&sol, 0, &sol, 0).unwrap();
        let total: f64 = (0..4).map(|x| d[(x, x)]).sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn excited_to_ground_number_operator_vanishes() {
        let ham = dimer_active();
        let sol = solve_sector(&ham, 2, 0, DEFAULT_SECTOR_CAP).unwrap();
        for mu in 1..sol.dim() {
            let d = transition_one_body(&sol, mu, &sol, 0).unwrap();
            let total: f64 = (0..4).map(|x| d[(x, x)]).sum();
            assert!(total.abs() < 1e-12);
        }
    }

    #[test]
    fn hermiticity_of_transition_density() {
        let ham = dimer_active();
        let sol = solve_sector(&ham, 2, 0, DEFAULT_SECTOR_CAP).unwrap();
        // <mu|x†y|0> == transpose of <0|y†x|mu>
        let d01 = transition_one_body(&sol, 1, &sol, 0).unwrap();
        let d10 = transition_one_body(&sol, 0, &sol, 1).unwrap();
        assert!(linalg::max_abs(&(d01.clone() - d10.transpose())) < 1e-12);
    }

    #[test]
    fn completeness_within_sector() {
        // Σ_mu <0|y†x|mu><mu|x†y|0> = <0|y†x x†y|0>, brute force on dets.
        let ham = dimer_active();
        let sol = solve_sector(&ham, 2, 0, DEFAULT_SECTOR_CAP).unwrap();
        let m = 2;
        let (x, y) = (0usize, 1usize); // alpha: site1 <- site0
        let mut lhs = 0.0;
        for mu in 0..sol.dim() {
            let d = transition_one_body(&sol, mu, &sol, 0).unwrap();
            lhs += d[(x, y)] * d[(x, y)];
        }
        // rhs: apply x†y to |0>, take the squared norm of the result.
        let kvec = sol.state(0);
        let mut out = vec![0.0; sol.dim()];
        for (jj, det) in sol.basis.iter().enumerate() {
            if let Some((d1, s1)) = annihilate(*det, m, y) {
                if let Some((d2, s2)) = create(d1, m, x) {
                    let ii = sol.det_index(&d2).unwrap();
                    out[ii] += (s1 * s2) as f64 * kvec[jj];
                }
            }
        }
        let rhs: f64 = out.iter().map(|v| v * v).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn transition_sector_compatibility_checked() {
        let ham = dimer_active();
        let s20 = solve_sector(&ham, 2, 0, DEFAULT_SECTOR_CAP).unwrap();
        let s11 = solve_sector(&ham, 1, 1, DEFAULT_SECTOR_CAP).unwrap();
        assert!(transition_create(&s20, 0, &s11, 0).is_ok());
        assert!(transition_create(&s11, 0, &s20, 0).is_err());
        assert!(transition_annihilate(&s11, 0, &s20, 0).is_ok());
        assert!(transition_annihilate(&s20, 0, &s11, 0).is_err());
        assert!(transition_one_body(&s20, 0, &s11, 0).is_err());
    }

    #[test]
    fn spectrum_invariant_under_active_permutation() {
        let set = hubbard_model::<f64>(3, 1.0, 4.0, false).unwrap();
        let f = DMatrix::from_fn(3, 3, |i, j| set.h1(i, j));
        let ham_a = ActiveSpaceHamiltonian::new(&set, &[0, 1, 2], f);
        let perm = [2usize, 0, 1];
        let fp = DMatrix::from_fn(3, 3, |i, j| set.h1(perm[i], perm[j]));
        let ham_b = ActiveSpaceHamiltonian::new(&set, &[2, 0, 1], fp);
        let sa = solve_sector(&ham_a, 3, 1, DEFAULT_SECTOR_CAP).unwrap();
        let sb = solve_sector(&ham_b, 3, 1, DEFAULT_SECTOR_CAP).unwrap();
        for (ea, eb) in sa.energies.iter().zip(&sb.energies) {
            assert!((ea - eb).abs() < 1e-10);
        }
    }
}
