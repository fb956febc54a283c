//! Molecular integrals: FCIDUMP ingestion, permutationally symmetric
//! storage, synthetic lattice models, and block composition.
//!
//! Two-electron integrals are kept in chemist notation `(pq|rs)` in a
//! sparse map keyed by the canonical representative of the 8-fold
//! permutation group, so `(pq|rs) = (qp|rs) = (pq|sr) = (rs|pq) = ...`
//! holds by construction. The physicist-notation integral `⟨pq|rs⟩`
//! used by the many-body machinery equals chemist `(pr|qs)`.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IntegralsError {
    #[error("fcidump parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
}

fn tri(a: u64, b: u64) -> u64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi * (hi + 1) / 2 + lo
}

/// Canonical key of `(pq|rs)` under the full 8-fold permutation group.
fn eri_key(p: usize, q: usize, r: usize, s: usize) -> u64 {
    tri(tri(p as u64, q as u64), tri(r as u64, s as u64))
}

/// One- and two-electron integrals of a finite orbital basis plus the
/// constant (nuclear/core) energy, all in Hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet<T: Scalar> {
    norb: usize,
    nelec: usize,
    ms2: i32,
    h1: DMatrix<T>,
    eri: HashMap<u64, T>,
    e_core: T,
    /// ORBSYM labels as found in the header; retained, never interpreted.
    pub orbsym: Option<Vec<i32>>,
    /// ISYM label as found in the header; retained, never interpreted.
    pub isym: Option<i32>,
}

impl<T: Scalar> IntegralSet<T> {
    pub fn new(norb: usize, nelec: usize, ms2: i32) -> Result<Self, IntegralsError> {
        if norb == 0 {
            return Err(IntegralsError::Usage("norb must be at least 1".into()));
        }
        if nelec > 2 * norb {
            return Err(IntegralsError::Usage(format!(
                "nelec={nelec} exceeds capacity of {norb} spatial orbitals"
            )));
        }
        if ms2.unsigned_abs() as usize > nelec || (nelec as i64 + ms2 as i64) % 2 != 0 {
            return Err(IntegralsError::Usage(format!(
                "ms2={ms2} incompatible with nelec={nelec}"
            )));
        }
        Ok(Self {
            norb,
            nelec,
            ms2,
            h1: DMatrix::zeros(norb, norb),
            eri: HashMap::new(),
            e_core: T::zero(),
            orbsym: None,
            isym: None,
        })
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn nelec(&self) -> usize {
        self.nelec
    }

    pub fn ms2(&self) -> i32 {
        self.ms2
    }

    pub fn e_core(&self) -> T {
        self.e_core
    }

    pub fn set_e_core(&mut self, v: T) {
        self.e_core = v;
    }

    /// Override electron count and spin projection (synthetic models).
    pub fn with_electrons(mut self, nelec: usize, ms2: i32) -> Result<Self, IntegralsError> {
        if nelec > 2 * self.norb {
            return Err(IntegralsError::Usage(format!(
                "nelec={nelec} exceeds capacity of {} spatial orbitals",
                self.norb
            )));
        }
        if ms2.unsigned_abs() as usize > nelec || (nelec as i64 + ms2 as i64) % 2 != 0 {
            return Err(IntegralsError::Usage(format!(
                "ms2={ms2} incompatible with nelec={nelec}"
            )));
        }
        self.nelec = nelec;
        self.ms2 = ms2;
        Ok(self)
    }

    fn check_index(&self, p: usize) {
        assert!(
            p < self.norb,
            "orbital index {p} out of range for norb={}",
            self.norb
        );
    }

    /// One-electron integral h_pq. Panics on an out-of-range index.
    pub fn h1(&self, p: usize, q: usize) -> T {
        self.check_index(p);
        self.check_index(q);
        self.h1[(p, q)]
    }

    /// Set h_pq = h_qp.
    pub fn set_h1(&mut self, p: usize, q: usize, v: T) {
        self.check_index(p);
        self.check_index(q);
        self.h1[(p, q)] = v;
        self.h1[(q, p)] = v;
    }

    pub fn h1_matrix(&self) -> &DMatrix<T> {
        &self.h1
    }

    /// Chemist-notation `(pq|rs)`; unset entries are zero.
    /// Panics on an out-of-range index.
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> T {
        self.check_index(p);
        self.check_index(q);
        self.check_index(r);
        self.check_index(s);
        self.eri
            .get(&eri_key(p, q, r, s))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Physicist-notation `⟨pq|rs⟩ = (pr|qs)`.
    pub fn eri_phys(&self, p: usize, q: usize, r: usize, s: usize) -> T {
        self.eri(p, r, q, s)
    }

    /// Store `(pq|rs)` for all 8 equivalent index orders. Last write wins.
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, v: T) {
        self.check_index(p);
        self.check_index(q);
        self.check_index(r);
        self.check_index(s);
        self.eri.insert(eri_key(p, q, r, s), v);
    }

    pub fn n_stored_eri(&self) -> usize {
        self.eri.len()
    }

    /// All stored canonical entries as `((p,q,r,s), value)` with
    /// p ≥ q, r ≥ s and tri(p,q) ≥ tri(r,s), sorted for determinism.
    pub fn canonical_eri_entries(&self) -> Vec<((usize, usize, usize, usize), T)> {
        let mut out: Vec<((usize, usize, usize, usize), T)> = Vec::with_capacity(self.eri.len());
        for p in 0..self.norb {
            for q in 0..=p {
                for r in 0..=p {
                    for s in 0..=r {
                        if tri(p as u64, q as u64) < tri(r as u64, s as u64) {
                            continue;
                        }
                        if let Some(&v) = self.eri.get(&eri_key(p, q, r, s)) {
                            out.push(((p, q, r, s), v));
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense chemist-notation tensor, index `((p*norb+q)*norb+r)*norb+s`.
    pub fn dense_eri(&self) -> Vec<T> {
        let n = self.norb;
        let mut out = vec![T::zero(); n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        out[((p * n + q) * n + r) * n + s] = self.eri(p, q, r, s);
                    }
                }
            }
        }
        out
    }

    /// Transform all integrals by an orthogonal orbital rotation
    /// `c[old][new]`: h' = cᵀ h c and the matching 4-index transform.
    pub fn transform(&self, c: &DMatrix<T>) -> IntegralSet<T> {
        let n = self.norb;
        assert_eq!(c.nrows(), n);
        assert_eq!(c.ncols(), n);
        let h1 = c.transpose() * &self.h1 * c;

        // Four quarter transforms on a dense scratch tensor.
        let mut t = self.dense_eri();
        for _ in 0..4 {
            // Contract the leading index, then rotate axes so each index
            // takes its turn in front: (p q r s) -> (q r s p').
            let mut next = vec![T::zero(); n * n * n * n];
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        for pnew in 0..n {
                            let mut acc = T::zero();
                            for p in 0..n {
                                acc += c[(p, pnew)] * t[((p * n + q) * n + r) * n + s];
                            }
                            next[((q * n + r) * n + s) * n + pnew] = acc;
                        }
                    }
                }
            }
            t = next;
        }

        let mut out = IntegralSet {
            norb: n,
            nelec: self.nelec,
            ms2: self.ms2,
            h1: DMatrix::zeros(n, n),
            eri: HashMap::new(),
            e_core: self.e_core,
            orbsym: self.orbsym.clone(),
            isym: self.isym,
        };
        for p in 0..n {
            for q in 0..n {
                out.h1[(p, q)] = h1[(p, q)];
            }
        }
        let drop = T::cast(1e-14);
        for p in 0..n {
            for q in 0..=p {
                for r in 0..=p {
                    for s in 0..=r {
                        if tri(p as u64, q as u64) < tri(r as u64, s as u64) {
                            continue;
                        }
                        let v = t[((p * n + q) * n + r) * n + s];
                        if v.abs() > drop {
                            out.set_eri(p, q, r, s, v);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Nearest-neighbour Hubbard chain: h has -t on bonds (wrapping when
/// periodic), the only two-electron integrals are on-site `(ii|ii) = U`.
/// Electron count defaults to half filling, ms2 to nelec mod 2.
pub fn hubbard_model<T: Scalar>(
    nsite: usize,
    t: T,
    u: T,
    periodic: bool,
) -> Result<IntegralSet<T>, IntegralsError> {
    if nsite < 2 {
        return Err(IntegralsError::Usage(format!(
            "hubbard model needs at least 2 sites, got {nsite}"
        )));
    }
    let nelec = nsite;
    let ms2 = (nelec % 2) as i32;
    let mut set = IntegralSet::new(nsite, nelec, ms2)?;
    for i in 0..nsite - 1 {
        set.set_h1(i, i + 1, -t);
    }
    if periodic && nsite > 2 {
        set.set_h1(0, nsite - 1, -t);
    }
    for i in 0..nsite {
        set.set_eri(i, i, i, i, u);
    }
    Ok(set)
}

/// Join two systems with no interaction between their orbital blocks.
/// Fragment `b` orbitals are shifted by `a.norb()`.
pub fn compose_noninteracting<T: Scalar>(a: &IntegralSet<T>, b: &IntegralSet<T>) -> IntegralSet<T> {
    let norb = a.norb + b.norb;
    let nelec = a.nelec + b.nelec;
    let ms2 = a.ms2 + b.ms2;
    let mut out = IntegralSet::new(norb, nelec, ms2).expect("composition of valid sets is valid");
    for p in 0..a.norb {
        for q in 0..a.norb {
            if a.h1[(p, q)] != T::zero() {
                out.h1[(p, q)] = a.h1[(p, q)];
            }
        }
    }
    for p in 0..b.norb {
        for q in 0..b.norb {
            if b.h1[(p, q)] != T::zero() {
                out.h1[(p + a.norb, q + a.norb)] = b.h1[(p, q)];
            }
        }
    }
    for ((p, q, r, s), v) in a.canonical_eri_entries() {
        out.set_eri(p, q, r, s, v);
    }
    let off = a.norb;
    for ((p, q, r, s), v) in b.canonical_eri_entries() {
        out.set_eri(p + off, q + off, r + off, s + off, v);
    }
    out.e_core = a.e_core + b.e_core;
    out
}

// ---------------------------------------------------------------------------
// FCIDUMP
// ---------------------------------------------------------------------------

fn parse_float<T: Scalar>(tok: &str, line: usize) -> Result<T, IntegralsError> {
    let cleaned = tok.replace(['D', 'd'], "E");
    let value = cleaned.parse::<f64>().map_err(|_| IntegralsError::Parse {
        line,
        msg: format!("expected a numeric value, got `{tok}`"),
    })?;
    if !value.is_finite() {
        return Err(IntegralsError::Parse {
            line,
            msg: format!("non-finite value `{tok}`"),
        });
    }
    Ok(T::cast(value))
}

fn parse_index(tok: &str, line: usize) -> Result<usize, IntegralsError> {
    tok.parse::<usize>().map_err(|_| IntegralsError::Parse {
        line,
        msg: format!("expected an orbital index, got `{tok}`"),
    })
}

/// Parse an FCIDUMP stream.
///
/// The namelist header must open with `&FCI` and provide NORB, NELEC and
/// MS2; it ends at `/` or `&END`. Body lines are `value i j k l` with
/// 1-based indices: four positive indices set `(ij|kl)`, `k = l = 0` sets
/// h(i,j), all-zero indices set the core energy. Later duplicates
/// overwrite earlier ones. Lines carrying two value columns (complex
/// dumps) are rejected.
pub fn parse_fcidump<T: Scalar>(text: &str) -> Result<IntegralSet<T>, IntegralsError> {
    let mut lines = text.lines().enumerate();

    // Collect header tokens until the terminator.
    let mut header_tokens: Vec<String> = Vec::new();
    let mut header_done = false;
    let mut saw_any = false;
    let mut last_line = 0usize;
    for (idx, raw) in lines.by_ref() {
        let line_no = idx + 1;
        last_line = line_no;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !saw_any {
            if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
                return Err(IntegralsError::Parse {
                    line: line_no,
                    msg: "header must start with &FCI".into(),
                });
            }
            saw_any = true;
        }
        let body = if trimmed.to_ascii_uppercase().starts_with("&FCI") {
            &trimmed[4..]
        } else {
            trimmed
        };
        for tok in body.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let upper = tok.to_ascii_uppercase();
            if upper == "/" || upper == "&END" {
                header_done = true;
                break;
            }
            header_tokens.push(tok.to_string());
        }
        if header_done {
            break;
        }
    }
    if !saw_any || !header_done {
        return Err(IntegralsError::Parse {
            line: last_line,
            msg: "header not terminated by `/` or `&END`".into(),
        });
    }

    // KEY=VALUE pairs; bare tokens continue the previous key's list.
    let mut fields: Vec<(String, Vec<String>)> = Vec::new();
    for tok in &header_tokens {
        if let Some(eq) = tok.find('=') {
            let key = tok[..eq].trim().to_ascii_uppercase();
            let val = tok[eq + 1..].trim();
            let mut vals = Vec::new();
            if !val.is_empty() {
                vals.push(val.to_string());
            }
            if key.is_empty() {
                // `KEY =value` splits as bare "KEY" then "=value"; attach.
                if let Some(lastf) = fields.last_mut() {
                    lastf.1.extend(vals);
                    continue;
                }
            }
            fields.push((key, vals));
        } else if let Some(lastf) = fields.last_mut() {
            lastf.1.push(tok.to_string());
        } else {
            return Err(IntegralsError::Parse {
                line: 1,
                msg: format!("stray header token `{tok}`"),
            });
        }
    }

    let lookup = |key: &str| -> Option<&Vec<String>> {
        fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    };
    let required_int = |key: &str| -> Result<i64, IntegralsError> {
        let vals = lookup(key).ok_or_else(|| IntegralsError::Parse {
            line: 1,
            msg: format!("header is missing {key}"),
        })?;
        let first = vals.first().ok_or_else(|| IntegralsError::Parse {
            line: 1,
            msg: format!("header field {key} has no value"),
        })?;
        first.parse::<i64>().map_err(|_| IntegralsError::Parse {
            line: 1,
            msg: format!("header field {key}={first} is not an integer"),
        })
    };

    let norb = required_int("NORB")?;
    let nelec = required_int("NELEC")?;
    let ms2 = required_int("MS2")?;
    if norb < 1 {
        return Err(IntegralsError::Parse {
            line: 1,
            msg: format!("NORB={norb} must be positive"),
        });
    }
    let mut set =
        IntegralSet::<T>::new(norb as usize, nelec as usize, ms2 as i32).map_err(|e| {
            IntegralsError::Parse {
                line: 1,
                msg: e.to_string(),
            }
        })?;
    if let Some(vals) = lookup("ORBSYM") {
        let mut syms = Vec::new();
        for v in vals {
            syms.push(v.parse::<i32>().map_err(|_| IntegralsError::Parse {
                line: 1,
                msg: format!("ORBSYM entry `{v}` is not an integer"),
            })?);
        }
        set.orbsym = Some(syms);
    }
    if let Some(vals) = lookup("ISYM") {
        if let Some(first) = vals.first() {
            set.isym = Some(first.parse::<i32>().map_err(|_| IntegralsError::Parse {
                line: 1,
                msg: format!("ISYM=`{first}` is not an integer"),
            })?);
        }
    }

    // Body.
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(IntegralsError::Parse {
                line: line_no,
                msg: format!(
                    "expected `value i j k l` (5 tokens, real integrals only), got {} tokens",
                    toks.len()
                ),
            });
        }
        let value: T = parse_float(toks[0], line_no)?;
        let mut ix = [0usize; 4];
        for (slot, tok) in ix.iter_mut().zip(&toks[1..]) {
            let v = parse_index(tok, line_no)?;
            if v > set.norb {
                return Err(IntegralsError::Parse {
                    line: line_no,
                    msg: format!("index {v} out of range [0, {}]", set.norb),
                });
            }
            *slot = v;
        }
        match ix {
            [0, 0, 0, 0] => set.e_core = value,
            [i, j, 0, 0] if i > 0 && j > 0 => set.set_h1(i - 1, j - 1, value),
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                set.set_eri(i - 1, j - 1, k - 1, l - 1, value)
            }
            _ => {
                return Err(IntegralsError::Parse {
                    line: line_no,
                    msg: format!("unsupported index pattern {:?}", ix),
                });
            }
        }
    }
    Ok(set)
}

/// Serialize to FCIDUMP text with 16 significant digits. Canonical ERI
/// entries first (sorted), then the lower triangle of h, then the core
/// energy; zero h entries are skipped.
pub fn write_fcidump<T: Scalar>(set: &IntegralSet<T>) -> String {
    let mut out = String::new();
    write!(
        out,
        "&FCI NORB={},NELEC={},MS2={},",
        set.norb, set.nelec, set.ms2
    )
    .unwrap();
    if let Some(syms) = &set.orbsym {
        out.push_str("\n  ORBSYM=");
        for s in syms {
            write!(out, "{s},").unwrap();
        }
    }
    if let Some(isym) = set.isym {
        write!(out, "\n  ISYM={isym},").unwrap();
    }
    out.push_str("\n&END\n");
    for ((p, q, r, s), v) in set.canonical_eri_entries() {
        writeln!(out, "{:.15e} {} {} {} {}", v, p + 1, q + 1, r + 1, s + 1).unwrap();
    }
    for p in 0..set.norb {
        for q in 0..=p {
            let v = set.h1[(p, q)];
            if v != T::zero() {
                writeln!(out, "{:.15e} {} {} 0 0", v, p + 1, q + 1).unwrap();
            }
        }
    }
    writeln!(out, "{:.15e} 0 0 0 0", set.e_core).unwrap();
    out
}

// ---------------------------------------------------------------------------
// Orbital spaces
// ---------------------------------------------------------------------------

/// Partition of the spatial orbitals into core (doubly occupied at zeroth
/// order), active, and virtual lists, plus the active electron count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitalSpaces {
    pub core: Vec<usize>,
    pub active: Vec<usize>,
    pub virt: Vec<usize>,
    pub n_active_electrons: usize,
}

impl OrbitalSpaces {
    pub fn new(
        core: Vec<usize>,
        active: Vec<usize>,
        virt: Vec<usize>,
        n_active_electrons: usize,
    ) -> Self {
        Self {
            core,
            active,
            virt,
            n_active_electrons,
        }
    }

    /// Core and active lists given explicitly, virtual filled with the
    /// ascending complement.
    pub fn with_virtual_complement(
        norb: usize,
        core: Vec<usize>,
        active: Vec<usize>,
        n_active_electrons: usize,
    ) -> Self {
        let virt = (0..norb)
            .filter(|p| !core.contains(p) && !active.contains(p))
            .collect();
        Self::new(core, active, virt, n_active_electrons)
    }

    /// Check the partition against an integral set.
    pub fn validate<T: Scalar>(&self, set: &IntegralSet<T>) -> Result<(), IntegralsError> {
        let norb = set.norb();
        let mut seen = vec![false; norb];
        for &p in self.core.iter().chain(&self.active).chain(&self.virt) {
            if p >= norb {
                return Err(IntegralsError::Usage(format!(
                    "orbital index {p} out of range for norb={norb}"
                )));
            }
            if seen[p] {
                return Err(IntegralsError::Usage(format!(
                    "orbital {p} listed in more than one space"
                )));
            }
            seen[p] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(IntegralsError::Usage(
                "core, active and virtual lists must cover every orbital".into(),
            ));
        }
        if self.n_active_electrons > 2 * self.active.len() {
            return Err(IntegralsError::Usage(format!(
                "{} active electrons exceed capacity of {} active orbitals",
                self.n_active_electrons,
                self.active.len()
            )));
        }
        if 2 * self.core.len() + self.n_active_electrons != set.nelec() {
            return Err(IntegralsError::Usage(format!(
                "2*{} core + {} active electrons != nelec={}",
                self.core.len(),
                self.n_active_electrons,
                set.nelec()
            )));
        }
        if self.active.is_empty() && set.ms2() != 0 {
            return Err(IntegralsError::Usage(
                "empty active space requires ms2 = 0".into(),
            ));
        }
        Ok(())
    }

    pub fn norb(&self) -> usize {
        self.core.len() + self.active.len() + self.virt.len()
    }

    /// Activity mask by spatial orbital index.
    pub fn active_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.norb()];
        for &p in &self.active {
            mask[p] = true;
        }
        mask
    }
}
