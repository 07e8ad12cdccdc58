//! Arithmetic in GF(2^4) with reduction polynomial x^4 + x + 1.

const POLY: u8 = 0b1_0011;

/// Multiply two field elements. Inputs are taken modulo 16.
#[inline]
pub fn gf16_mul(a: u8, b: u8) -> u8 {
    let (mut a, mut b) = (a & 0xf, b & 0xf);
    let mut acc = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & 0x10 != 0 {
            a ^= POLY;
        }
    }
    acc
}
