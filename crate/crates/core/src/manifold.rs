//! Zeroth-order excitation manifold: the four classes of product
//! excitations that couple to the reference through one-body operators,
//! each carrying its excitation energy ω_N and a sparse transition
//! density d_N[(p,r)] = ⟨N|p†r|0⟩ over global spin orbitals.
//!
//! Classes: core→virtual (CV), core→active (CA, a core hole next to an
//! (N+1)-electron active state), active→virtual (AV, a virtual particle
//! next to an (N−1)-electron active state), and active-internal (AA,
//! excited states of the active Hamiltonian itself). Fermionic phases
//! from moving operators across the core and active blocks are folded
//! into d once, against the fixed ordering core < active < virtual with
//! alpha before beta inside each block.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::casci::{self, CasciError, SectorSolution};
use crate::partition::DyallPartition;
use crate::scalar::Scalar;
use crate::spin::{Spin, SpinOrbital};

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("sector ({nelec}, sz2={sz2}) required by the manifold is missing")]
    MissingSector { nelec: usize, sz2: i32 },
    #[error(transparent)]
    Casci(#[from] CasciError),
    #[error("excitation energy {omega:e} below threshold {threshold:e} in class {class:?}; the zeroth order does not support a ring resummation here")]
    NonPositiveOmega {
        class: ExcitationClass,
        omega: f64,
        threshold: f64,
    },
}

/// Default floor on zeroth-order excitation energies.
pub const MIN_OMEGA: f64 = 1e-6;
/// Default degeneracy threshold for the reference state.
pub const GROUND_GAP_TOL: f64 = 1e-8;
/// Default drop tolerance on transition-density vectors.
pub const DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExcitationClass {
    /// |Θ_i^a⟩ ⊗ active ground state
    CoreVirtual,
    /// |Θ_i⟩ ⊗ (N+1)-electron active state
    CoreActive,
    /// |Θ^a⟩ ⊗ (N−1)-electron active state
    ActiveVirtual,
    /// core ⊗ excited active state
    ActiveInternal,
}

/// Which core spin orbital, virtual spin orbital, and active eigenstate
/// a manifold state is built from (as applicable to its class).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateLabel {
    pub core: Option<SpinOrbital>,
    pub virt: Option<SpinOrbital>,
    pub mu: Option<usize>,
}

impl StateLabel {
    pub fn core_virtual(i: SpinOrbital, a: SpinOrbital) -> Self {
        Self {
            core: Some(i),
            virt: Some(a),
            mu: None,
        }
    }
    pub fn core_active(i: SpinOrbital, mu: usize) -> Self {
        Self {
            core: Some(i),
            virt: None,
            mu: Some(mu),
        }
    }
    pub fn active_virtual(a: SpinOrbital, mu: usize) -> Self {
        Self {
            core: None,
            virt: Some(a),
            mu: Some(mu),
        }
    }
    pub fn active_state(mu: usize) -> Self {
        Self {
            core: None,
            virt: None,
            mu: Some(mu),
        }
    }
}

/// One zeroth-order excited state.
#[derive(Debug, Clone)]
pub struct ExcitedState<T> {
    pub class: ExcitationClass,
    pub omega: T,
    /// Sparse ⟨N|p†r|0⟩ as (p, r, value) over global spin orbitals.
    pub d: Vec<(SpinOrbital, SpinOrbital, T)>,
    pub label: StateLabel,
}

impl<T: Scalar> ExcitedState<T> {
    pub fn d_max_norm(&self) -> T {
        self.d
            .iter()
            .fold(T::zero(), |acc, &(_, _, v)| acc.max(v.abs()))
    }
}

/// Bijection between the directed spin-orbital pairs in use and dense
/// column indices of the polarizability representation.
#[derive(Debug, Clone, Default)]
pub struct PairIndex {
    index: BTreeMap<(usize, usize), usize>,
    pairs: Vec<(SpinOrbital, SpinOrbital)>,
}

impl PairIndex {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn of(&self, p: SpinOrbital, r: SpinOrbital) -> Option<usize> {
        self.index.get(&(p.code(), r.code())).copied()
    }

    pub fn pair(&self, col: usize) -> (SpinOrbital, SpinOrbital) {
        self.pairs[col]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, (SpinOrbital, SpinOrbital))> + '_ {
        self.pairs.iter().enumerate().map(|(i, &p)| (i, p))
    }
}

/// The assembled manifold.
#[derive(Debug, Clone)]
pub struct ExcitationManifold<T> {
    pub states: Vec<ExcitedState<T>>,
    pub pair_index: PairIndex,
}

impl<T: Scalar> ExcitationManifold<T> {
    /// Build the pair index for an explicit state list (synthetic models
    /// and tests; the production path goes through [`build_manifold`]).
    pub fn from_states(states: Vec<ExcitedState<T>>) -> Self {
        let mut keys: Vec<(usize, usize)> = states
            .iter()
            .flat_map(|st| st.d.iter().map(|&(p, r, _)| (p.code(), r.code())))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let mut index = BTreeMap::new();
        let mut pairs = Vec::with_capacity(keys.len());
        for (col, &(pc, rc)) in keys.iter().enumerate() {
            index.insert((pc, rc), col);
            pairs.push((SpinOrbital::from_code(pc), SpinOrbital::from_code(rc)));
        }
        Self {
            states,
            pair_index: PairIndex { index, pairs },
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn count(&self, class: ExcitationClass) -> usize {
        self.states.iter().filter(|s| s.class == class).count()
    }

    pub fn omegas(&self) -> Vec<T> {
        self.states.iter().map(|s| s.omega).collect()
    }

    /// Median zeroth-order excitation energy (grid auto-scale).
    pub fn median_omega(&self) -> Option<T> {
        if self.states.is_empty() {
            return None;
        }
        let mut om = self.omegas();
        om.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(om[om.len() / 2])
    }
}

/// Sector solutions keyed by (electron count, sz2).
#[derive(Debug, Clone, Default)]
pub struct SectorSet<T: Scalar> {
    map: HashMap<(usize, i32), SectorSolution<T>>,
}

impl<T: Scalar> SectorSet<T> {
    pub fn insert(&mut self, sol: SectorSolution<T>) {
        self.map.insert((sol.nelec, sol.sz2), sol);
    }

    pub fn get(&self, nelec: usize, sz2: i32) -> Option<&SectorSolution<T>> {
        self.map.get(&(nelec, sz2))
    }

    /// Solve the reference sector and every feasible neighbour sector
    /// the manifold needs: (N±1, ms2±1).
    pub fn solve_required(part: &DyallPartition<T>, cap: usize) -> Result<Self, CasciError> {
        let m = part.spaces.active.len();
        let na = part.spaces.n_active_electrons;
        let ms2 = part.set.ms2();
        let mut set = Self::default();
        set.insert(part.solve_sector(na, ms2, cap)?);
        for spin in Spin::BOTH {
            let szp = ms2 + spin.sz2();
            if casci::sector_feasible(m, na + 1, szp) {
                set.insert(part.solve_sector(na + 1, szp, cap)?);
            }
            let szm = ms2 - spin.sz2();
            if na >= 1 && casci::sector_feasible(m, na - 1, szm) {
                set.insert(part.solve_sector(na - 1, szm, cap)?);
            }
        }
        Ok(set)
    }
}

/// Assemble the manifold from the partition and the sector solutions.
///
/// States whose transition density has max-norm below `drop_tol` are
/// omitted; any surviving state with ω below [`MIN_OMEGA`] aborts the
/// build, as does a degenerate reference.
pub fn build_manifold<T: Scalar>(
    part: &DyallPartition<T>,
    sectors: &SectorSet<T>,
    drop_tol: T,
) -> Result<ExcitationManifold<T>, ManifoldError> {
    let spaces = &part.spaces;
    let m = spaces.active.len();
    let n_c = spaces.core.len();
    let na = spaces.n_active_electrons;
    let ms2 = part.set.ms2();
    let min_omega = T::cast(MIN_OMEGA);

    let ground = sectors.get(na, ms2).ok_or(ManifoldError::MissingSector {
        nelec: na,
        sz2: ms2,
    })?;
    if let Some(gap) = ground.gap() {
        if gap < T::cast(GROUND_GAP_TOL) {
            return Err(CasciError::DegenerateGround {
                gap: gap.as_f64(),
                tol: GROUND_GAP_TOL,
            }
            .into());
        }
    }
    let e0 = ground.energies.first().copied().unwrap_or_else(T::zero);

    let mut states: Vec<ExcitedState<T>> = Vec::new();
    let mut push = |st: ExcitedState<T>| -> Result<(), ManifoldError> {
        if st.d_max_norm() < drop_tol {
            return Ok(());
        }
        if st.omega < min_omega {
            return Err(ManifoldError::NonPositiveOmega {
                class: st.class,
                omega: st.omega.as_f64(),
                threshold: MIN_OMEGA,
            });
        }
        states.push(st);
        Ok(())
    };

    // Core -> virtual: one state per same-spin (i, a), unit density.
    for spin in Spin::BOTH {
        for (ci, &i) in spaces.core.iter().enumerate() {
            for (vi, &a) in spaces.virt.iter().enumerate() {
                let i_so = SpinOrbital::new(i, spin);
                let a_so = SpinOrbital::new(a, spin);
                push(ExcitedState {
                    class: ExcitationClass::CoreVirtual,
                    omega: part.eps_virt[vi] - part.eps_core[ci],
                    d: vec![(a_so, i_so, T::one())],
                    label: StateLabel::core_virtual(i_so, a_so),
                })?;
            }
        }
    }

    // Core hole of spin σ next to an (N+1, ms2+σ) active state. The
    // phase collects the crossings of the annihilator inside the core
    // block and of the active creator over the remaining core.
    for spin in Spin::BOTH {
        let szp = ms2 + spin.sz2();
        if n_c == 0 || !casci::sector_feasible(m, na + 1, szp) {
            continue;
        }
        let plus = sectors
            .get(na + 1, szp)
            .ok_or(ManifoldError::MissingSector {
                nelec: na + 1,
                sz2: szp,
            })?;
        let n_core_so = 2 * n_c;
        let offset = if spin == Spin::Beta { m } else { 0 };
        let tvecs: Vec<_> = (0..plus.dim())
            .map(|mu| casci::transition_create(plus, mu, ground, 0))
            .collect::<Result<_, _>>()?;
        for (ci, &i) in spaces.core.iter().enumerate() {
            let pos_i = ci + if spin == Spin::Beta { n_c } else { 0 };
            let sign = if (pos_i + n_core_so - 1).is_multiple_of(2) {
                T::one()
            } else {
                -T::one()
            };
            let i_so = SpinOrbital::new(i, spin);
            for (mu, tvec) in tvecs.iter().enumerate() {
                let d: Vec<_> = (0..m)
                    .filter_map(|x| {
                        let v = tvec[offset + x];
                        (v != T::zero())
                            .then(|| (SpinOrbital::new(spaces.active[x], spin), i_so, sign * v))
                    })
                    .collect();
                push(ExcitedState {
                    class: ExcitationClass::CoreActive,
                    omega: -part.eps_core[ci] + (plus.energies[mu] - e0),
                    d,
                    label: StateLabel::core_active(i_so, mu),
                })?;
            }
        }
    }

    // Virtual particle of spin σ next to an (N−1, ms2−σ) active state.
    // The particle creator crosses the full core and the remaining
    // active electrons: (−1)^(N_A − 1) once the even core is crossed.
    for spin in Spin::BOTH {
        let szm = ms2 - spin.sz2();
        if na == 0 || !casci::sector_feasible(m, na - 1, szm) {
            continue;
        }
        let minus = sectors
            .get(na - 1, szm)
            .ok_or(ManifoldError::MissingSector {
                nelec: na - 1,
                sz2: szm,
            })?;
        let sign = if (na - 1).is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        let offset = if spin == Spin::Beta { m } else { 0 };
        let tvecs: Vec<_> = (0..minus.dim())
            .map(|mu| casci::transition_annihilate(minus, mu, ground, 0))
            .collect::<Result<_, _>>()?;
        for (vi, &a) in spaces.virt.iter().enumerate() {
            let a_so = SpinOrbital::new(a, spin);
            for (mu, tvec) in tvecs.iter().enumerate() {
                let d: Vec<_> = (0..m)
                    .filter_map(|y| {
                        let v = tvec[offset + y];
                        (v != T::zero())
                            .then(|| (a_so, SpinOrbital::new(spaces.active[y], spin), sign * v))
                    })
                    .collect();
                push(ExcitedState {
                    class: ExcitationClass::ActiveVirtual,
                    omega: part.eps_virt[vi] + (minus.energies[mu] - e0),
                    d,
                    label: StateLabel::active_virtual(a_so, mu),
                })?;
            }
        }
    }

    // Excited states of the active Hamiltonian itself.
    for mu in 1..ground.dim() {
        let dm = casci::transition_one_body(ground, mu, ground, 0)?;
        let mut d = Vec::new();
        for spin in Spin::BOTH {
            let offset = if spin == Spin::Beta { m } else { 0 };
            for x in 0..m {
                for y in 0..m {
                    let v = dm[(offset + x, offset + y)];
                    if v != T::zero() {
                        d.push((
                            SpinOrbital::new(spaces.active[x], spin),
                            SpinOrbital::new(spaces.active[y], spin),
                            v,
                        ));
                    }
                }
            }
        }
        push(ExcitedState {
            class: ExcitationClass::ActiveInternal,
            omega: ground.energies[mu] - e0,
            d,
            label: StateLabel::active_state(mu),
        })?;
    }

    Ok(ExcitationManifold::from_states(states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::integrals::OrbitalSpaces;
    use crate::partition::{build_dyall, DyallSettings};

    fn manifold_for(
        set: &crate::integrals::IntegralSet<f64>,
        spaces: &OrbitalSpaces,
    ) -> (DyallPartition<f64>, ExcitationManifold<f64>) {
        let part = build_dyall(set, spaces, &DyallSettings::default()).unwrap();
        let sectors = SectorSet::solve_required(&part, 20_000).unwrap();
        let man = build_manifold(&part, &sectors, 1e-12).unwrap();
        (part, man)
    }

    #[test]
    fn empty_active_space_gives_only_cv_states() {
        // SR limit: n_core_spatial * n_virt_spatial * 2 states.
        let set = fixtures::hubbard_chain_mo::<f64>(4, 2.0);
        let spaces = OrbitalSpaces::with_virtual_complement(4, vec![0, 1], vec![], 0);
        let (_, man) = manifold_for(&set, &spaces);
        assert_eq!(man.len(), 2 * 2 * 2);
        assert!(man
            .states
            .iter()
            .all(|s| s.class == ExcitationClass::CoreVirtual));
        assert!(man.states.iter().all(|s| s.d.len() == 1));
    }

    #[test]
    fn full_cas_gives_only_internal_states() {
        let set = fixtures::hubbard_dimer::<f64>(4.0);
        let spaces = OrbitalSpaces::with_virtual_complement(2, vec![], vec![0, 1], 2);
        let (_, man) = manifold_for(&set, &spaces);
        assert!(man
            .states
            .iter()
            .all(|s| s.class == ExcitationClass::ActiveInternal));
        // dim 4 sector minus the ground state, all with nonzero density
        assert!(man.len() <= 3);
        assert!(!man.is_empty());
    }

    #[test]
    fn four_site_class_counts() {
        let (set, spaces) = fixtures::four_site_cas22::<f64>(2.0);
        let (_, man) = manifold_for(&set, &spaces);
        // CV: 1 core x 1 virt x 2 spins
        assert_eq!(man.count(ExcitationClass::CoreVirtual), 2);
        // CA: per spin, dim of the (3, ±1) sector is C(2,2)·C(2,1) = 2,
        // so at most 2 spins x 1 core x 2 states, minus drop-tol filtering.
        assert!(man.count(ExcitationClass::CoreActive) <= 4);
        assert!(man.count(ExcitationClass::CoreActive) > 0);
        assert!(man.count(ExcitationClass::ActiveVirtual) <= 4);
        assert!(man.count(ExcitationClass::ActiveVirtual) > 0);
        assert!(man.count(ExcitationClass::ActiveInternal) <= 3);
        // every omega positive
        assert!(man.states.iter().all(|s| s.omega > 0.0));
    }

    #[test]
    fn no_duplicate_labels() {
        let (set, spaces) = fixtures::four_site_cas22::<f64>(2.0);
        let (_, man) = manifold_for(&set, &spaces);
        let mut seen = std::collections::HashSet::new();
        for st in &man.states {
            assert!(
                seen.insert((st.class, st.label)),
                "duplicate {:?}",
                st.label
            );
        }
    }

    #[test]
    fn spin_sector_closure() {
        let (set, spaces) = fixtures::four_site_cas22::<f64>(2.0);
        let (_, man) = manifold_for(&set, &spaces);
        for st in &man.states {
            for &(p, r, _) in &st.d {
                assert_eq!(p.spin(), r.spin());
            }
        }
    }

    #[test]
    fn every_pair_registered() {
        let (set, spaces) = fixtures::four_site_cas22::<f64>(2.0);
        let (_, man) = manifold_for(&set, &spaces);
        for st in &man.states {
            for &(p, r, _) in &st.d {
                assert!(man.pair_index.of(p, r).is_some());
            }
        }
    }

    #[test]
    fn missing_sector_reported() {
        let (set, spaces) = fixtures::four_site_cas22::<f64>(2.0);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();
        let mut sectors = SectorSet::default();
        sectors.insert(part.solve_sector(2, 0, 1000).unwrap());
        // neighbours absent -> error
        match build_manifold(&part, &sectors, 1e-12) {
            Err(ManifoldError::MissingSector { .. }) => {}
            other => panic!("expected missing sector, got {other:?}"),
        }
    }

    #[test]
    fn site_basis_core_aborts_on_negative_omega() {
        // A doubly occupied repulsive site has its orbital energy above
        // the empty site: the core→virtual excitation energy is negative
        // and the build must refuse it.
        let set = fixtures::hubbard_chain::<f64>(4, 4.0);
        let spaces = OrbitalSpaces::with_virtual_complement(4, vec![0], vec![1, 2], 2);
        let part = build_dyall(&set, &spaces, &DyallSettings::default()).unwrap();
        let sectors = SectorSet::solve_required(&part, 20_000).unwrap();
        match build_manifold(&part, &sectors, 1e-12) {
            Err(ManifoldError::NonPositiveOmega { .. }) => {}
            other => panic!("expected omega abort, got {:?}", other.map(|m| m.len())),
        }
    }
}
