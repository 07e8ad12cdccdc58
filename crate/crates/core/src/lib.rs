//! Threshold implementation of the LED-128 block cipher.

pub mod acceptance;
pub mod datapath;
pub mod gf16;
pub mod led;
pub mod power;
pub mod rng;
pub mod ti;
pub mod tvla;

/// `(plaintext, key, ciphertext)` known-answer triples for LED-128.
pub const TEST_VECTORS: [(u64, u128, u64); 4] = [
    (0x0000_0000_0000_0000, 0, 0x3DEC_B2A0_850C_DBA1),
    (
        0x0123_4567_89AB_CDEF,
        0x0123_4567_89AB_CDEF_0123_4567_89AB_CDEF,
        0xD6B8_2458_7F01_4FC2,
    ),
    (
        0x8588_826a_419d_5831,
        0x1c17_84b5_484e_ecdb_393f_6a0a_ca11_b91d,
        0x3e54_e838_0cf8_ba7f,
    ),
    (
        0xf086_6b50_0b8d_ee50,
        0x1fd7_eb9b_ce09_a17d_7412_4b46_05ad_fc07,
        0xc0de_2ce8_3ac9_4500,
    ),
];

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cipher.md")]
    mod cipher {}
    #[doc = include_str!("../../../book/src/sharing.md")]
    mod sharing {}
    #[doc = include_str!("../../../book/src/datapath.md")]
    mod datapath {}
    #[doc = include_str!("../../../book/src/power.md")]
    mod power {}
    #[doc = include_str!("../../../book/src/tvla.md")]
    mod tvla {}
    #[doc = include_str!("../../../book/src/random.md")]
    mod random {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
