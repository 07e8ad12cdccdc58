use std::ops::BitXor;

use crate::led::Nibble;

/// Two-share Boolean sharing; the value is `s0 ^ s1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Share2 {
    pub s0: Nibble,
    pub s1: Nibble,
}

/// Three-share Boolean sharing; the value is `s0 ^ s1 ^ s2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Share3 {
    pub s0: Nibble,
    pub s1: Nibble,
    pub s2: Nibble,
}

impl Share2 {
    pub fn new(s0: Nibble, s1: Nibble) -> Self {
        Share2 { s0, s1 }
    }

    #[inline]
    pub fn value(self) -> Nibble {
        recombine_2to1(self)
    }

    /// Applies a linear map to each share independently.
    #[inline]
    pub fn map(self, f: impl Fn(Nibble) -> Nibble) -> Self {
        Share2 {
            s0: f(self.s0),
            s1: f(self.s1),
        }
    }

    #[inline]
    pub fn shares(self) -> [Nibble; 2] {
        [self.s0, self.s1]
    }
}

impl BitXor for Share2 {
    type Output = Share2;

    #[inline]
    fn bitxor(self, rhs: Share2) -> Share2 {
        Share2 {
            s0: self.s0 ^ rhs.s0,
            s1: self.s1 ^ rhs.s1,
        }
    }
}

impl Share3 {
    pub fn new(s0: Nibble, s1: Nibble, s2: Nibble) -> Self {
        Share3 { s0, s1, s2 }
    }

    #[inline]
    pub fn from_array(a: [Nibble; 3]) -> Self {
        Share3 {
            s0: a[0],
            s1: a[1],
            s2: a[2],
        }
    }

    #[inline]
    pub fn to_array(self) -> [Nibble; 3] {
        [self.s0, self.s1, self.s2]
    }

    #[inline]
    pub fn value(self) -> Nibble {
        self.s0 ^ self.s1 ^ self.s2
    }
}

/// `1 -> 2`: `(x ^ m0, m0)`.
#[inline]
pub fn split_1to2(x: Nibble, m0: Nibble) -> Share2 {
    Share2 { s0: x ^ m0, s1: m0 }
}

/// `2 -> 1`.
#[inline]
pub fn recombine_2to1(s: Share2) -> Nibble {
    s.s0 ^ s.s1
}

/// `2 -> 3`: `(s0 ^ m1, s1, m1)`.
#[inline]
pub fn expand_2to3(s: Share2, m1: Nibble) -> Share3 {
    Share3 {
        s0: s.s0 ^ m1,
        s1: s.s1,
        s2: m1,
    }
}

/// `3 -> 2`: `(s0 ^ s1, s2)`.
#[inline]
pub fn reduce_3to2(s: Share3) -> Share2 {
    Share2 {
        s0: s.s0 ^ s.s1,
        s1: s.s2,
    }
}
