//! Spin-orbital labels over the full orbital set.

/// Spin projection of one electron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Alpha,
    Beta,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Alpha, Spin::Beta];

    /// Twice the Sz carried by an electron of this spin.
    pub fn sz2(self) -> i32 {
        match self {
            Spin::Alpha => 1,
            Spin::Beta => -1,
        }
    }
}

/// A spin orbital encoded as `2 * spatial + spin`, where the spatial
/// index refers to the full orbital set of the integral basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinOrbital(u32);

impl SpinOrbital {
    pub fn new(spatial: usize, spin: Spin) -> Self {
        let bit = match spin {
            Spin::Alpha => 0,
            Spin::Beta => 1,
        };
        SpinOrbital((spatial as u32) << 1 | bit)
    }

    pub fn spatial(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn spin(self) -> Spin {
        if self.0 & 1 == 0 {
            Spin::Alpha
        } else {
            Spin::Beta
        }
    }

    /// Raw encoding, usable as a dense index of size `2 * norb`.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn from_code(code: usize) -> Self {
        SpinOrbital(code as u32)
    }
}
