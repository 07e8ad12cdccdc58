//! Exhaustive checks of the three threshold-implementation properties.
//!
//! Every domain here is tiny (at most 3 * 16^3 evaluations per stage), so
//! the checks enumerate all cases instead of sampling.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::decomposition::{ShareComponents, Stage};
use super::shares::Share3;
use crate::led::{Nibble, SBOX};

/// Counterexamples kept per report; the failure count is always exact.
pub const MAX_COUNTEREXAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Property {
    Correctness,
    NonCompleteness,
    Uniformity,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Property::Correctness => "correctness",
            Property::NonCompleteness => "non-completeness",
            Property::Uniformity => "uniformity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Counterexample {
    /// The composed stages recombine to `got` instead of `S[x]`.
    Correctness {
        x: u8,
        input: [u8; 3],
        got: u8,
        expected: u8,
    },
    /// Output share `component` changes while only its excluded input share
    /// (`excluded`) moves between the two listed values.
    NonCompleteness {
        stage: Stage,
        component: usize,
        input: [u8; 3],
        excluded: usize,
        alternative: u8,
        outputs: [u8; 2],
    },
    /// Output sharing `output` of input value `x` is hit `count` times
    /// instead of once (or is not a sharing of the stage output at all).
    Uniformity {
        stage: Stage,
        x: u8,
        output: [u8; 3],
        count: u32,
    },
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Counterexample::Correctness { x, input, got, expected } => write!(
                f,
                "x={x:X} shares={:X},{:X},{:X}: recombined {got:X}, expected S[x]={expected:X}",
                input[0], input[1], input[2]
            ),
            Counterexample::NonCompleteness {
                stage,
                component,
                input,
                excluded,
                alternative,
                outputs,
            } => write!(
                f,
                "{stage:?}{} at shares={:X},{:X},{:X}: changing excluded share {excluded} to {alternative:X} moves output {:X} -> {:X}",
                component + 1,
                input[0],
                input[1],
                input[2],
                outputs[0],
                outputs[1]
            ),
            Counterexample::Uniformity { stage, x, output, count } => write!(
                f,
                "{stage:?} stage, x={x:X}: output sharing {:X},{:X},{:X} hit {count} times",
                output[0], output[1], output[2]
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub cases: usize,
    pub failures: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl PropertyReport {
    fn new(property: Property) -> Self {
        PropertyReport {
            property,
            cases: 0,
            failures: 0,
            counterexamples: Vec::new(),
        }
    }

    fn fail(&mut self, c: Counterexample) {
        self.failures += 1;
        if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
            self.counterexamples.push(c);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{:<17} {verdict} ({} cases, {} failures)",
            self.property, self.cases, self.failures
        )?;
        for c in &self.counterexamples {
            write!(f, "\n    counterexample: {c}")?;
        }
        if self.failures > self.counterexamples.len() {
            write!(
                f,
                "\n    ... {} more",
                self.failures - self.counterexamples.len()
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TiReport {
    pub correctness: PropertyReport,
    pub noncompleteness: PropertyReport,
    pub uniformity: PropertyReport,
}

impl TiReport {
    pub fn all_passed(&self) -> bool {
        self.correctness.passed() && self.noncompleteness.passed() && self.uniformity.passed()
    }

    pub fn reports(&self) -> [&PropertyReport; 3] {
        [&self.correctness, &self.noncompleteness, &self.uniformity]
    }

    /// One line per property, without counterexamples.
    pub fn summary(&self) -> String {
        self.reports()
            .iter()
            .map(|r| {
                format!(
                    "{} {}",
                    r.property,
                    if r.passed() {
                        "PASS".to_string()
                    } else {
                        format!("FAIL ({} failures)", r.failures)
                    }
                )
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for TiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.correctness)?;
        writeln!(f, "{}", self.noncompleteness)?;
        write!(f, "{}", self.uniformity)
    }
}

fn nib(v: u8) -> Nibble {
    Nibble::from_low_bits(v)
}

/// The 256 sharings of `x`: `(a, b, x ^ a ^ b)` for all `a`, `b`.
fn sharings_of(x: u8) -> impl Iterator<Item = [Nibble; 3]> {
    (0..=255u8).map(move |r| {
        let (a, b) = (r >> 4, r & 0xf);
        [nib(a), nib(b), nib(x ^ a ^ b)]
    })
}

fn raw(s: [Nibble; 3]) -> [u8; 3] {
    [s[0].get(), s[1].get(), s[2].get()]
}

/// F(G(sharing)) must recombine to `S[x]` for every `x` and every sharing.
pub fn verify_correctness(d: &impl ShareComponents) -> PropertyReport {
    let mut report = PropertyReport::new(Property::Correctness);
    for x in 0..16u8 {
        for input in sharings_of(x) {
            report.cases += 1;
            let g = d.stage(Stage::G, Share3::from_array(input));
            let got = d.stage(Stage::F, g).value().get();
            let expected = SBOX[x as usize];
            if got != expected {
                report.fail(Counterexample::Correctness {
                    x,
                    input: raw(input),
                    got,
                    expected,
                });
            }
        }
    }
    report
}

/// Output share `i` must not depend on input share `i`, in either stage.
pub fn verify_noncompleteness(d: &impl ShareComponents) -> PropertyReport {
    let mut report = PropertyReport::new(Property::NonCompleteness);
    for stage in Stage::BOTH {
        for component in 0..3 {
            let excluded = component;
            for others in 0..=255u8 {
                let mut input = [nib(0); 3];
                input[(excluded + 1) % 3] = nib(others >> 4);
                input[(excluded + 2) % 3] = nib(others & 0xf);
                let base = d.component(stage, component, input);
                report.cases += 1;
                for alt in 1..16u8 {
                    input[excluded] = nib(alt);
                    let out = d.component(stage, component, input);
                    report.cases += 1;
                    if out != base {
                        input[excluded] = nib(0);
                        report.fail(Counterexample::NonCompleteness {
                            stage,
                            component,
                            input: raw(input),
                            excluded,
                            alternative: alt,
                            outputs: [base.get(), out.get()],
                        });
                        break;
                    }
                }
            }
        }
    }
    report
}

/// For each stage and each input value, the 256 input sharings must map onto
/// the 256 sharings of a single output value, each hit exactly once.
pub fn verify_uniformity(d: &impl ShareComponents) -> PropertyReport {
    let mut report = PropertyReport::new(Property::Uniformity);
    for stage in Stage::BOTH {
        for x in 0..16u8 {
            let mut counts: HashMap<[u8; 3], u32> = HashMap::with_capacity(256);
            for input in sharings_of(x) {
                report.cases += 1;
                let out = d.stage(stage, Share3::from_array(input));
                *counts.entry(raw(out.to_array())).or_default() += 1;
            }
            // Reference output value: the most frequent recombination.
            let mut by_value = [0u32; 16];
            for (o, c) in &counts {
                by_value[(o[0] ^ o[1] ^ o[2]) as usize] += c;
            }
            let y = (0..16u8).max_by_key(|&v| by_value[v as usize]).unwrap_or(0);
            let mut bad: Vec<([u8; 3], u32)> = counts
                .into_iter()
                .filter(|(o, c)| *c != 1 || o[0] ^ o[1] ^ o[2] != y)
                .collect();
            bad.sort_unstable();
            for (output, count) in bad {
                report.fail(Counterexample::Uniformity {
                    stage,
                    x,
                    output,
                    count,
                });
            }
        }
    }
    report
}

pub fn verify_all(d: &impl ShareComponents) -> TiReport {
    TiReport {
        correctness: verify_correctness(d),
        noncompleteness: verify_noncompleteness(d),
        uniformity: verify_uniformity(d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::ti::decomposition::SboxDecomposition;

    /// Component `i` outputs share `i + 1` unchanged: a valid but identity
    /// sharing in table form.
    fn identity_tables() -> [[u8; 256]; 3] {
        let mut t = [[0u8; 256]; 3];
        for table in t.iter_mut() {
            for (idx, e) in table.iter_mut().enumerate() {
                *e = (idx >> 4) as u8;
            }
        }
        t
    }

    /// Reads all three shares; breaks non-completeness.
    struct Complete;

    impl ShareComponents for Complete {
        fn component(&self, _stage: Stage, index: usize, input: [Nibble; 3]) -> Nibble {
            if index == 0 {
                input[0] ^ input[1] ^ input[2]
            } else {
                Nibble::ZERO
            }
        }
    }

    #[test]
    fn shipped_passes_everything() {
        let d = SboxDecomposition::shipped().unwrap();
        let r = verify_all(&d);
        assert!(r.all_passed(), "{r}");
        assert_eq!(r.correctness.cases, 16 * 256);
        assert_eq!(r.noncompleteness.cases, 2 * 3 * 16 * 16 * 16);
        assert_eq!(r.uniformity.cases, 2 * 16 * 256);
    }

    #[test]
    fn identity_decomposition_is_incorrect() {
        let d = SboxDecomposition {
            g: identity_tables(),
            f: identity_tables(),
        };
        let r = verify_correctness(&d);
        assert!(!r.passed());
        // S has no fixed point, so every case fails.
        assert_eq!(r.failures, 16 * 256);
        assert!(matches!(
            r.counterexamples[0],
            Counterexample::Correctness {
                x: 0,
                got: 0,
                expected: 0xC,
                ..
            }
        ));
        // Still non-complete and uniform.
        assert!(verify_noncompleteness(&d).passed());
        assert!(verify_uniformity(&d).passed());
    }

    #[test]
    fn mutation_reports_its_counterexample() {
        let mut d = SboxDecomposition::reference();
        // G1 reads (x2, x3); corrupt the entry for x2=3, x3=7.
        d.g[0][0x37] ^= 0x1;
        let r = verify_correctness(&d);
        assert!(!r.passed());
        assert_eq!(r.failures, 16);
        for c in &r.counterexamples {
            match c {
                Counterexample::Correctness { input, .. } => {
                    assert_eq!((input[1], input[2]), (3, 7))
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(!verify_uniformity(&d).passed());
    }

    #[test]
    fn all_share_component_breaks_noncompleteness() {
        let r = verify_noncompleteness(&Complete);
        assert!(!r.passed());
        assert!(r.counterexamples.iter().all(|c| matches!(
            c,
            Counterexample::NonCompleteness {
                component: 0,
                excluded: 0,
                ..
            }
        )));
        assert_eq!(r.failures, 2 * 256);
    }

    #[test]
    fn constant_components_are_noncomplete() {
        let d = SboxDecomposition {
            g: [[0x5; 256]; 3],
            f: [[0xA; 256]; 3],
        };
        assert!(verify_noncompleteness(&d).passed());
        assert!(!verify_correctness(&d).passed());
    }

    #[test]
    fn constant_zero_component_breaks_uniformity() {
        let mut d = SboxDecomposition::reference();
        d.g[0] = [0; 256];
        let r = verify_uniformity(&d);
        assert!(!r.passed());
        assert!(r.counterexamples.iter().any(|c| matches!(
            c,
            Counterexample::Uniformity {
                stage: Stage::G,
                ..
            }
        )));
    }

    #[test]
    fn random_single_entry_mutations_are_caught() {
        let base = SboxDecomposition::reference();
        let mut rng = SplitMix64::new(0x5eed);
        for _ in 0..20 {
            let mut d = base.clone();
            let stage = if rng.next_bool() { Stage::G } else { Stage::F };
            let comp = (rng.next_u64() % 3) as usize;
            let idx = (rng.next_u64() % 256) as usize;
            let flip = 1 + (rng.next_u64() % 15) as u8;
            d.table_mut(stage, comp)[idx] ^= flip;
            assert!(!verify_all(&d).all_passed());
        }
    }

    #[test]
    fn report_display_lists_counterexamples() {
        let mut d = SboxDecomposition::reference();
        d.f[2][0] ^= 0x8;
        let text = verify_all(&d).to_string();
        assert!(text.contains("correctness       FAIL"));
        assert!(text.contains("counterexample: x="));
    }

    #[test]
    fn verification_is_fast() {
        let d = SboxDecomposition::reference();
        let start = std::time::Instant::now();
        let r = verify_all(&d);
        assert!(r.all_passed());
        assert!(start.elapsed().as_secs_f64() < 1.0);
    }
}
