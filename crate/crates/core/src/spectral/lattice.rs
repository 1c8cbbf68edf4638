//! Integer lattice modes and the square boxes `max(|k1|, |k2|) <= N`.
//!
//! All lattice arithmetic is exact in integers; the Euclidean norm is only
//! converted to floating point at the point of use.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// A wavevector `k = (k1, k2)` on the integer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeMode {
    pub k1: i32,
    pub k2: i32,
}

impl LatticeMode {
    pub const ZERO: LatticeMode = LatticeMode { k1: 0, k2: 0 };

    pub const fn new(k1: i32, k2: i32) -> Self {
        Self { k1, k2 }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    /// Squared Euclidean norm, exact.
    #[inline]
    pub fn norm_sq(self) -> i64 {
        let (a, b) = (self.k1 as i64, self.k2 as i64);
        a * a + b * b
    }

    /// Euclidean norm `|k|`, used by every operator symbol.
    #[inline]
    pub fn norm<T: Real>(self) -> T {
        T::of(self.norm_sq() as f64).sqrt()
    }

    /// Box norm `max(|k1|, |k2|)`, used only for the cutoff projection.
    #[inline]
    pub fn max_norm(self) -> u32 {
        self.k1.unsigned_abs().max(self.k2.unsigned_abs())
    }

    /// `k^perp = (-k2, k1)`.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.k2, self.k1)
    }

    #[inline]
    pub fn dot(self, other: Self) -> i64 {
        self.k1 as i64 * other.k1 as i64 + self.k2 as i64 * other.k2 as i64
    }

    /// `h^perp . k`, exact.
    #[inline]
    pub fn perp_dot(self, k: Self) -> i64 {
        self.perp().dot(k)
    }

    /// Lexicographic positivity: exactly one of `k`, `-k` is a representative.
    #[inline]
    pub fn is_representative(self) -> bool {
        self.k1 > 0 || (self.k1 == 0 && self.k2 > 0)
    }

    #[inline]
    pub fn in_box(self, n: u32) -> bool {
        self.max_norm() <= n
    }
}

impl fmt::Display for LatticeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k1, self.k2)
    }
}

impl From<(i32, i32)> for LatticeMode {
    fn from((k1, k2): (i32, i32)) -> Self {
        Self::new(k1, k2)
    }
}

impl Add for LatticeMode {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.k1 + o.k1, self.k2 + o.k2)
    }
}

impl Sub for LatticeMode {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.k1 - o.k1, self.k2 - o.k2)
    }
}

impl Neg for LatticeMode {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.k1, -self.k2)
    }
}

/// Dense row-major layout of the box of radius `extent`: `k1` is the slow
/// index, `k2` the fast one, both running from `-extent` to `extent`. The
/// zero mode has a slot that always holds zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    extent: u32,
}

impl LatticeBox {
    pub const fn new(extent: u32) -> Self {
        Self { extent }
    }

    #[inline]
    pub fn extent(self) -> u32 {
        self.extent
    }

    #[inline]
    pub fn side(self) -> usize {
        2 * self.extent as usize + 1
    }

    /// Number of slots, zero mode included.
    #[inline]
    pub fn len(self) -> usize {
        self.side() * self.side()
    }

    /// Never true: the box always holds the zero slot.
    #[inline]
    pub fn is_empty(self) -> bool {
        false
    }

    /// Number of nonzero modes: `(2N+1)^2 - 1`.
    #[inline]
    pub fn mode_count(self) -> usize {
        self.len() - 1
    }

    #[inline]
    pub fn contains(self, k: LatticeMode) -> bool {
        k.in_box(self.extent)
    }

    #[inline]
    pub fn index(self, k: LatticeMode) -> Option<usize> {
        if self.contains(k) {
            Some(self.index_unchecked(k))
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn index_unchecked(self, k: LatticeMode) -> usize {
        let n = self.extent as i64;
        ((k.k1 as i64 + n) as usize) * self.side() + (k.k2 as i64 + n) as usize
    }

    #[inline]
    pub fn mode(self, index: usize) -> LatticeMode {
        let n = self.extent as i32;
        let side = self.side();
        LatticeMode::new((index / side) as i32 - n, (index % side) as i32 - n)
    }

    #[inline]
    pub fn zero_index(self) -> usize {
        self.len() / 2
    }

    /// Nonzero modes in row-major order.
    pub fn modes(self) -> impl Iterator<Item = LatticeMode> {
        let n = self.extent as i32;
        (-n..=n).flat_map(move |a| (-n..=n).map(move |b| LatticeMode::new(a, b))).filter(|k| !k.is_zero())
    }

    /// Lexicographically positive modes in row-major order.
    pub fn representatives(self) -> impl Iterator<Item = LatticeMode> {
        self.modes().filter(|k| k.is_representative())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts() {
        assert_eq!(LatticeBox::new(1).modes().count(), 8);
        assert_eq!(LatticeBox::new(4).mode_count(), 80);
        assert_eq!(LatticeBox::new(4).representatives().count(), 40);
        assert_eq!(LatticeBox::new(0).modes().count(), 0);
    }

    #[test]
    fn index_round_trip() {
        let b = LatticeBox::new(3);
        for k in b.modes() {
            assert_eq!(b.mode(b.index(k).unwrap()), k);
        }
        assert_eq!(b.mode(b.zero_index()), LatticeMode::ZERO);
        assert_eq!(b.index(LatticeMode::new(4, 0)), None);
    }

    #[test]
    fn representatives_split_pairs() {
        for k in LatticeBox::new(3).modes() {
            assert_ne!(k.is_representative(), (-k).is_representative());
        }
    }

    #[test]
    fn perp_is_orthogonal() {
        let k = LatticeMode::new(3, -7);
        assert_eq!(k.perp().dot(k), 0);
        assert_eq!(k.perp_dot(k), 0);
        assert_eq!(k.max_norm(), 7);
        assert_eq!(k.norm_sq(), 58);
    }
}
