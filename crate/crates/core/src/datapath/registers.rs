//! Register file layout shared by both designs.
//!
//! Every register is at most six bits wide and is logged individually.
//! Data and key matrices are addressed by serial position `p` in `0..16`
//! (row-major, position 0 is cell 00, position 15 is cell 33).

use std::fmt;

pub const DATA_BASE: u16 = 0;
pub const KEY_BASE: u16 = 32;
pub const SBOX_IN_BASE: u16 = 96;
pub const SBOX_G_BASE: u16 = 99;
pub const SBOX_F_BASE: u16 = 102;
pub const SBOX_OUT: u16 = 105;
pub const RC: u16 = 106;
pub const EN_AC: u16 = 107;
pub const REGISTER_COUNT: usize = 108;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegisterId(pub u16);

impl RegisterId {
    /// Share `share` (0 or 1) of data matrix position `pos`.
    #[inline]
    pub const fn data(share: usize, pos: usize) -> Self {
        RegisterId(DATA_BASE + (share * 16 + pos) as u16)
    }

    /// Share `share` of key half `half` (0 = high/K1, 1 = low/K2) at `pos`.
    #[inline]
    pub const fn key(half: usize, share: usize, pos: usize) -> Self {
        RegisterId(KEY_BASE + ((half * 2 + share) * 16 + pos) as u16)
    }

    #[inline]
    pub const fn sbox_in(share: usize) -> Self {
        RegisterId(SBOX_IN_BASE + share as u16)
    }

    #[inline]
    pub const fn sbox_g(share: usize) -> Self {
        RegisterId(SBOX_G_BASE + share as u16)
    }

    #[inline]
    pub const fn sbox_f(share: usize) -> Self {
        RegisterId(SBOX_F_BASE + share as u16)
    }

    pub const SBOX_OUT: RegisterId = RegisterId(SBOX_OUT);
    pub const RC: RegisterId = RegisterId(RC);
    pub const EN_AC: RegisterId = RegisterId(EN_AC);

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub fn width(self) -> u32 {
        match self.0 {
            RC => 6,
            EN_AC => 1,
            _ => 4,
        }
    }

    pub fn name(self) -> String {
        let pos = |p: u16| format!("r{}c{}", p / 4, p % 4);
        match self.0 {
            id @ DATA_BASE..=31 => format!("data_s{}_{}", id / 16, pos(id % 16)),
            id @ KEY_BASE..=95 => {
                let k = id - KEY_BASE;
                format!("key{}_s{}_{}", k / 32 + 1, (k / 16) % 2, pos(k % 16))
            }
            id @ SBOX_IN_BASE..=98 => format!("sbox_in_s{}", id - SBOX_IN_BASE),
            id @ SBOX_G_BASE..=101 => format!("sbox_g_s{}", id - SBOX_G_BASE),
            id @ SBOX_F_BASE..=104 => format!("sbox_f_s{}", id - SBOX_F_BASE),
            SBOX_OUT => "sbox_out".into(),
            RC => "rc".into(),
            EN_AC => "en_ac".into(),
            id => format!("reg{id}"),
        }
    }

    pub fn all() -> impl Iterator<Item = RegisterId> {
        (0..REGISTER_COUNT as u16).map(RegisterId)
    }
}

impl fmt::Display for RegisterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Total number of register bits, the upper bound on one cycle's
/// Hamming-distance leakage.
pub fn total_register_bits() -> u32 {
    RegisterId::all().map(RegisterId::width).sum()
}
