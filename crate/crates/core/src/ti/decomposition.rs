//! The shared Sbox: `S = F o G` with both stages quadratic, each shared into
//! three component functions.
//!
//! Component `i` of a stage produces output share `i` and reads only the
//! input shares `(i + 1) % 3` and `(i + 2) % 3`. Each component is stored as a
//! 256-entry table indexed by `a * 16 + b`, where `a` is the first of those
//! two shares and `b` the second.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

use super::shares::Share3;
use super::verify::{verify_all, TiReport};
use crate::led::Nibble;

/// Tables shipped with the crate.
pub const SHIPPED_TABLES: &str = include_str!("../../data/sbox_ti.tables");

/// Input shares read by each component, in table-argument order.
pub const COMPONENT_INPUTS: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

const BLOCK_LABELS: [&str; 6] = ["G1", "G2", "G3", "F1", "F2", "F3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Stage {
    G,
    F,
}

impl Stage {
    pub const BOTH: [Stage; 2] = [Stage::G, Stage::F];
}

pub type ComponentTable = [u8; 256];

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read tables from {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("expected block label {expected}, found {found:?} on line {line}")]
    MissingBlock {
        expected: &'static str,
        found: Option<String>,
        line: usize,
    },
    #[error("invalid table entry {token:?} on line {line} (expected one hex digit)")]
    BadToken { token: String, line: usize },
    #[error("block {block} has {found} entries, expected 256")]
    WrongCount { block: &'static str, found: usize },
    #[error("decomposition rejected: {0}")]
    Unverified(String),
}

/// Anything that can be evaluated as a three-share stage. The verifiers take
/// this rather than [`SboxDecomposition`] so they can also judge candidate
/// functions whose components read all three shares.
pub trait ShareComponents {
    fn component(&self, stage: Stage, index: usize, input: [Nibble; 3]) -> Nibble;

    fn stage(&self, stage: Stage, input: Share3) -> Share3 {
        let a = input.to_array();
        Share3::new(
            self.component(stage, 0, a),
            self.component(stage, 1, a),
            self.component(stage, 2, a),
        )
    }
}

/// Raw, unverified lookup tables for G1..G3 and F1..F3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SboxDecomposition {
    pub g: [ComponentTable; 3],
    pub f: [ComponentTable; 3],
}

impl ShareComponents for SboxDecomposition {
    #[inline]
    fn component(&self, stage: Stage, index: usize, input: [Nibble; 3]) -> Nibble {
        let [a, b] = COMPONENT_INPUTS[index];
        let table = match stage {
            Stage::G => &self.g[index],
            Stage::F => &self.f[index],
        };
        Nibble::from_low_bits(table[(input[a].get() as usize) << 4 | input[b].get() as usize])
    }
}

/// `G` of the decomposition; bits are `(x, y, z, w)` from MSB to LSB.
pub fn quadratic_g(v: u8) -> u8 {
    let (x, y, z, w) = bits(v);
    let g3 = y ^ z ^ w;
    let g2 = 1 ^ y ^ z;
    let g1 = 1 ^ x ^ z ^ (y & w) ^ (z & w);
    let g0 = 1 ^ w ^ (x & y) ^ (x & z) ^ (y & z);
    g3 << 3 | g2 << 2 | g1 << 1 | g0
}

/// `F` of the decomposition, so that `quadratic_f(quadratic_g(x)) == S[x]`.
pub fn quadratic_f(v: u8) -> u8 {
    let (x, y, z, w) = bits(v);
    let f3 = y ^ z ^ w ^ (x & w);
    let f2 = x ^ (z & w);
    let f1 = y ^ z ^ (x & w);
    let f0 = z ^ (y & w);
    f3 << 3 | f2 << 2 | f1 << 1 | f0
}

fn bits(v: u8) -> (u8, u8, u8, u8) {
    ((v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1)
}

/// Algebraic normal form of each output bit: `anf[bit]` lists the monomials
/// (as variable masks) with coefficient one.
fn anf(f: impl Fn(u8) -> u8) -> [Vec<u8>; 4] {
    let mut out: [Vec<u8>; 4] = Default::default();
    for (bit, monomials) in out.iter_mut().enumerate() {
        let mut coeffs: Vec<u8> = (0..16).map(|v| (f(v) >> bit) & 1).collect();
        for var in 0..4 {
            for v in 0..16usize {
                if v >> var & 1 == 1 {
                    coeffs[v] ^= coeffs[v ^ (1 << var)];
                }
            }
        }
        *monomials = (0..16u8).filter(|&m| coeffs[m as usize] == 1).collect();
    }
    out
}

/// Direct three-share sharing of a function of degree at most two.
///
/// Component `i` sees shares `j = i + 1` and `l = i + 2`. It takes the
/// constant term (component 0 only), each linear term from share `j`, and
/// each product `uv` as `u_j v_j ^ u_j v_l ^ u_l v_j`.
///
/// # Panics
///
/// If `f` has a monomial of degree three or more.
pub fn direct_sharing(f: impl Fn(u8) -> u8) -> [ComponentTable; 3] {
    let anf = anf(f);
    let mut tables = [[0u8; 256]; 3];
    for (i, table) in tables.iter_mut().enumerate() {
        for (idx, entry) in table.iter_mut().enumerate() {
            let (sj, sl) = ((idx >> 4) as u8, (idx & 0xf) as u8);
            let mut out = 0u8;
            for (bit, monomials) in anf.iter().enumerate() {
                let mut acc = 0u8;
                for &m in monomials {
                    let vars: Vec<u8> = (0..4).filter(|v| m >> v & 1 == 1).collect();
                    acc ^= match vars.as_slice() {
                        [] => u8::from(i == 0),
                        [u] => (sj >> u) & 1,
                        [u, v] => {
                            let (uj, vj) = ((sj >> u) & 1, (sj >> v) & 1);
                            let (ul, vl) = ((sl >> u) & 1, (sl >> v) & 1);
                            (uj & vj) ^ (uj & vl) ^ (ul & vj)
                        }
                        _ => panic!("direct_sharing: monomial {m:#06b} has degree > 2"),
                    };
                }
                out |= acc << bit;
            }
            *entry = out;
        }
    }
    tables
}

impl SboxDecomposition {
    /// Direct sharings of [`quadratic_g`] and [`quadratic_f`].
    pub fn reference() -> Self {
        SboxDecomposition {
            g: direct_sharing(quadratic_g),
            f: direct_sharing(quadratic_f),
        }
    }

    pub fn shipped() -> Result<Self, TableError> {
        Self::parse(SHIPPED_TABLES)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut tokens = text.lines().enumerate().flat_map(|(n, line)| {
            let content = line.split('#').next().unwrap_or("");
            content.split_whitespace().map(move |t| (n + 1, t))
        });
        let mut blocks = [[0u8; 256]; 6];
        let mut peeked = tokens.next();
        for (label, block) in BLOCK_LABELS.iter().zip(blocks.iter_mut()) {
            match peeked {
                Some((_, t)) if t == *label => {}
                Some((line, t)) => {
                    return Err(TableError::MissingBlock {
                        expected: label,
                        found: Some(t.to_string()),
                        line,
                    })
                }
                None => {
                    return Err(TableError::MissingBlock {
                        expected: label,
                        found: None,
                        line: text.lines().count(),
                    })
                }
            }
            let mut count = 0;
            peeked = tokens.next();
            while let Some((line, t)) = peeked {
                if BLOCK_LABELS.contains(&t) {
                    break;
                }
                let digit = parse_digit(t).ok_or_else(|| TableError::BadToken {
                    token: t.to_string(),
                    line,
                })?;
                if count < 256 {
                    block[count] = digit;
                }
                count += 1;
                peeked = tokens.next();
            }
            if count != 256 {
                return Err(TableError::WrongCount {
                    block: label,
                    found: count,
                });
            }
        }
        if let Some((line, t)) = peeked {
            return Err(TableError::BadToken {
                token: t.to_string(),
                line,
            });
        }
        let [g1, g2, g3, f1, f2, f3] = blocks;
        Ok(SboxDecomposition {
            g: [g1, g2, g3],
            f: [f1, f2, f3],
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(
            "# Three-share threshold decomposition of the LED (PRESENT) Sbox, S = F o G.\n\
             #\n\
             # Six blocks in the order G1 G2 G3 F1 F2 F3. Component k computes output\n\
             # share k from the two other input shares, taken cyclically:\n\
             #   G1(x2, x3)   G2(x3, x1)   G3(x1, x2)   (same for F)\n\
             # Entry index = a * 16 + b, where a is the first argument and b the second.\n\
             # Each block holds 256 hex digits, 16 per line, whitespace separated.\n",
        );
        let tables = self.g.iter().chain(self.f.iter());
        for (label, table) in BLOCK_LABELS.iter().zip(tables) {
            let _ = writeln!(out, "{label}");
            for row in table.chunks(16) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:X}")).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out
    }

    pub fn table_mut(&mut self, stage: Stage, index: usize) -> &mut ComponentTable {
        match stage {
            Stage::G => &mut self.g[index],
            Stage::F => &mut self.f[index],
        }
    }
}

fn parse_digit(t: &str) -> Option<u8> {
    if t.len() == 1 {
        u8::from_str_radix(t, 16).ok()
    } else {
        None
    }
}

/// A decomposition that passed all three verifiers. The datapath only
/// accepts this type.
#[derive(Debug, Clone)]
pub struct SharedSbox {
    tables: SboxDecomposition,
}

impl SharedSbox {
    pub fn new(tables: SboxDecomposition) -> Result<Self, TableError> {
        let report: TiReport = verify_all(&tables);
        if report.all_passed() {
            Ok(SharedSbox { tables })
        } else {
            Err(TableError::Unverified(report.summary()))
        }
    }

    /// The verified shipped tables.
    ///
    /// # Panics
    ///
    /// If the shipped file is malformed or fails verification; the test
    /// suite guards against both.
    pub fn shipped() -> &'static SharedSbox {
        static SHIPPED: OnceLock<SharedSbox> = OnceLock::new();
        SHIPPED.get_or_init(|| {
            let tables = SboxDecomposition::shipped().expect("shipped tables parse");
            SharedSbox::new(tables).expect("shipped tables verify")
        })
    }

    pub fn tables(&self) -> &SboxDecomposition {
        &self.tables
    }

    #[inline]
    pub fn g_stage(&self, input: Share3) -> Share3 {
        self.tables.stage(Stage::G, input)
    }

    #[inline]
    pub fn f_stage(&self, input: Share3) -> Share3 {
        self.tables.stage(Stage::F, input)
    }

    /// Both stages back to back, without the pipeline register between them.
    pub fn apply(&self, input: Share3) -> Share3 {
        self.f_stage(self.g_stage(input))
    }
}
