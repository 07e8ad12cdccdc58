//! Straight-line LED-128 reference.
//!
//! The 64-bit block is loaded into a 4x4 matrix of nibbles in row-major
//! order, most significant nibble first. Encryption adds the first subkey,
//! then runs 12 steps of 4 rounds (AddConstants, SubCells, ShiftRows,
//! MixColumnsSerial), adding a subkey after every step. The two 64-bit
//! halves of the key alternate as subkeys, starting with the high half.
//!
//! This module is the correctness oracle for both serial datapaths in
//! [`crate::datapath`].

use std::fmt;
use std::ops::BitXor;

use thiserror::Error;

use crate::gf16::gf16_mul;

pub const STEPS: usize = 12;
pub const ROUNDS_PER_STEP: usize = 4;
pub const ROUNDS: usize = STEPS * ROUNDS_PER_STEP;
pub const KEY_BITS: u32 = 128;

/// The PRESENT Sbox, as used by LED.
pub const SBOX: [u8; 16] = [
    0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2,
];

/// Row of the serial matrix `A`; one application shifts the column up by
/// one and feeds this row's product into the bottom cell.
pub const SERIAL_ROW: [u8; 4] = [0x4, 0x1, 0x2, 0x2];

/// `A^4`, the full MixColumnsSerial matrix.
pub const MDS: [[u8; 4]; 4] = [
    [0x4, 0x1, 0x2, 0x2],
    [0x8, 0x6, 0x5, 0x6],
    [0xB, 0xE, 0xA, 0x9],
    [0x2, 0x2, 0xF, 0xB],
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedError {
    #[error("nibble value {0:#x} does not fit in 4 bits")]
    NibbleOutOfRange(u8),
    #[error("round index {0} out of range 0..{ROUNDS}")]
    RoundIndexOutOfRange(usize),
}

/// A 4-bit cell.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nibble(u8);

impl Nibble {
    pub const ZERO: Nibble = Nibble(0);

    pub fn new(value: u8) -> Result<Self, LedError> {
        if value < 16 {
            Ok(Nibble(value))
        } else {
            Err(LedError::NibbleOutOfRange(value))
        }
    }

    /// Keeps the low four bits of `value`.
    #[inline]
    pub const fn from_low_bits(value: u8) -> Self {
        Nibble(value & 0xf)
    }

    #[inline]
    pub const fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Nibble> {
        (0..16).map(Nibble)
    }
}

impl BitXor for Nibble {
    type Output = Nibble;

    #[inline]
    fn bitxor(self, rhs: Nibble) -> Nibble {
        Nibble(self.0 ^ rhs.0)
    }
}

impl fmt::Debug for Nibble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:X}", self.0)
    }
}

impl fmt::Display for Nibble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:X}", self.0)
    }
}

/// The 4x4 cipher state. `cells[r][c]` holds nibble `4r + c` of the block,
/// counted from the most significant end.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct State {
    pub cells: [[Nibble; 4]; 4],
}

impl State {
    pub fn from_u64(block: u64) -> Self {
        let mut cells = [[Nibble::ZERO; 4]; 4];
        for (i, cell) in cells.iter_mut().flatten().enumerate() {
            *cell = Nibble::from_low_bits((block >> (60 - 4 * i)) as u8);
        }
        State { cells }
    }

    pub fn to_u64(&self) -> u64 {
        self.cells
            .iter()
            .flatten()
            .fold(0u64, |acc, n| (acc << 4) | u64::from(n.get()))
    }

    /// Cell at row-major index `i` (0 is the top-left, most significant).
    #[inline]
    pub fn get(&self, i: usize) -> Nibble {
        self.cells[i / 4][i % 4]
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State({:016X})", self.to_u64())
    }
}

/// LED-128 subkeys: `k1` is the high half of the key, `k2` the low half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeySchedule {
    pub k1: u64,
    pub k2: u64,
}

impl KeySchedule {
    pub fn new(key: u128) -> Self {
        KeySchedule {
            k1: (key >> 64) as u64,
            k2: key as u64,
        }
    }

    /// Subkey added at step boundary `s` (0 is the initial addition).
    pub fn subkey(&self, s: usize) -> u64 {
        if s.is_multiple_of(2) {
            self.k1
        } else {
            self.k2
        }
    }
}

/// Round constants: the 6-bit LFSR value plus the fixed key-size nibbles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundConstant {
    pub step_bits: u8,
    pub keysize_bits: [u8; 4],
}

/// Column 0 constants derived from the key size (128 = 0x80).
pub const KEYSIZE_NIBBLES: [u8; 4] = [
    (KEY_BITS as u8 >> 4),
    (KEY_BITS as u8 >> 4) ^ 1,
    (KEY_BITS as u8 & 0xf) ^ 2,
    (KEY_BITS as u8 & 0xf) ^ 3,
];

/// LFSR successor: shift left, feed back `rc5 ^ rc4 ^ 1`.
#[inline]
pub const fn next_rc(rc: u8) -> u8 {
    ((rc << 1) & 0x3f) | (((rc >> 5) ^ (rc >> 4) ^ 1) & 1)
}

pub const fn round_constant_sequence() -> [u8; ROUNDS] {
    let mut out = [0u8; ROUNDS];
    let mut rc = 0u8;
    let mut i = 0;
    while i < ROUNDS {
        rc = next_rc(rc);
        out[i] = rc;
        i += 1;
    }
    out
}

pub const RC_SEQUENCE: [u8; ROUNDS] = round_constant_sequence();

impl RoundConstant {
    pub fn for_round(round_index: usize) -> Result<Self, LedError> {
        let step_bits = *RC_SEQUENCE
            .get(round_index)
            .ok_or(LedError::RoundIndexOutOfRange(round_index))?;
        Ok(Self::from_bits(step_bits))
    }

    pub fn from_bits(step_bits: u8) -> Self {
        RoundConstant {
            step_bits: step_bits & 0x3f,
            keysize_bits: KEYSIZE_NIBBLES,
        }
    }

    /// Constant XORed into cell (`row`, `col`). Columns 2 and 3 get zero.
    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> Nibble {
        let v = match col {
            0 => self.keysize_bits[row],
            1 if row.is_multiple_of(2) => (self.step_bits >> 3) & 0x7,
            1 => self.step_bits & 0x7,
            _ => 0,
        };
        Nibble::from_low_bits(v)
    }
}

#[inline]
pub fn sbox_lookup(x: Nibble) -> Nibble {
    Nibble(SBOX[x.get() as usize])
}

pub fn add_constant(s: State, round_index: usize) -> Result<State, LedError> {
    let rc = RoundConstant::for_round(round_index)?;
    Ok(apply_round_constant(s, &rc))
}

pub fn apply_round_constant(mut s: State, rc: &RoundConstant) -> State {
    for (r, row) in s.cells.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = *cell ^ rc.cell(r, c);
        }
    }
    s
}

pub fn sub_cells(mut s: State) -> State {
    for cell in s.cells.iter_mut().flatten() {
        *cell = sbox_lookup(*cell);
    }
    s
}

/// Row `r` rotates left by `r` positions.
pub fn shift_rows(mut s: State) -> State {
    for (r, row) in s.cells.iter_mut().enumerate() {
        row.rotate_left(r);
    }
    s
}

pub fn mix_columns_serial(s: State) -> State {
    let mut out = State::default();
    for c in 0..4 {
        for (r, row) in MDS.iter().enumerate() {
            let v = (0..4).fold(0, |acc, k| acc ^ gf16_mul(row[k], s.cells[k][c].get()));
            out.cells[r][c] = Nibble(v);
        }
    }
    out
}

pub fn add_round_key(s: State, subkey: u64) -> State {
    State::from_u64(s.to_u64() ^ subkey)
}

/// Events reported by [`encrypt_block_observed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundEvent {
    /// Key addition at step boundary `step` (0 = initial).
    KeyAdded { step: usize, state: State },
    /// A full round finished; `round_index` runs 0..48.
    Round { round_index: usize, state: State },
}

pub fn encrypt_block(plaintext: u64, key: u128) -> u64 {
    encrypt_block_observed(plaintext, key, |_| {})
}

pub fn encrypt_block_observed(
    plaintext: u64,
    key: u128,
    mut observe: impl FnMut(RoundEvent),
) -> u64 {
    let ks = KeySchedule::new(key);
    let mut s = add_round_key(State::from_u64(plaintext), ks.subkey(0));
    observe(RoundEvent::KeyAdded { step: 0, state: s });
    for step in 0..STEPS {
        for r in 0..ROUNDS_PER_STEP {
            let round_index = step * ROUNDS_PER_STEP + r;
            let rc = RoundConstant::from_bits(RC_SEQUENCE[round_index]);
            s = mix_columns_serial(shift_rows(sub_cells(apply_round_constant(s, &rc))));
            observe(RoundEvent::Round {
                round_index,
                state: s,
            });
        }
        s = add_round_key(s, ks.subkey(step + 1));
        observe(RoundEvent::KeyAdded {
            step: step + 1,
            state: s,
        });
    }
    s.to_u64()
}
