use std::io::{self, Write};

use super::fsm::FsmState;
use super::registers::RegisterId;

/// One register changing value at a clock edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub reg: RegisterId,
    pub old: u8,
    pub new: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CycleRecord {
    state: FsmState,
    start: u32,
}

/// Per-cycle record of every register that changed. Stored flat: the
/// transitions of cycle `i` are `transitions[start_i..start_{i+1}]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionLog {
    cycles: Vec<CycleRecord>,
    transitions: Vec<Transition>,
}

/// A borrowed view of one cycle.
#[derive(Debug, Clone, Copy)]
pub struct CycleEntry<'a> {
    pub cycle: usize,
    pub state: FsmState,
    pub transitions: &'a [Transition],
}

impl TransitionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(cycles: usize, transitions: usize) -> Self {
        TransitionLog {
            cycles: Vec::with_capacity(cycles),
            transitions: Vec::with_capacity(transitions),
        }
    }

    pub fn begin_cycle(&mut self, state: FsmState) {
        self.cycles.push(CycleRecord {
            state,
            start: self.transitions.len() as u32,
        });
    }

    /// Records a transition in the current cycle; no-op when unchanged.
    #[inline]
    pub fn record(&mut self, reg: RegisterId, old: u8, new: u8) {
        debug_assert!(!self.cycles.is_empty(), "record before begin_cycle");
        if old != new {
            self.transitions.push(Transition { reg, old, new });
        }
    }

    /// Number of cycles.
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn cycle(&self, i: usize) -> CycleEntry<'_> {
        let rec = self.cycles[i];
        let end = self
            .cycles
            .get(i + 1)
            .map_or(self.transitions.len(), |r| r.start as usize);
        CycleEntry {
            cycle: i,
            state: rec.state,
            transitions: &self.transitions[rec.start as usize..end],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = CycleEntry<'_>> + '_ {
        (0..self.len()).map(move |i| self.cycle(i))
    }

    /// FSM state label of every cycle.
    pub fn states(&self) -> impl Iterator<Item = FsmState> + '_ {
        self.cycles.iter().map(|c| c.state)
    }

    /// Transitions of the most recent cycle.
    pub fn last_cycle(&self) -> &[Transition] {
        match self.len() {
            0 => &[],
            n => self.cycle(n - 1).transitions,
        }
    }

    pub fn clear(&mut self) {
        self.cycles.clear();
        self.transitions.clear();
    }

    /// CSV export: `cycle,state,reg_id,old_hex,new_hex`, one row per
    /// transition. A cycle without transitions gets one row with empty
    /// register fields, so every cycle appears.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "cycle,state,reg_id,old_hex,new_hex")?;
        for entry in self.iter() {
            if entry.transitions.is_empty() {
                writeln!(w, "{},{},,,", entry.cycle, entry.state)?;
            }
            for t in entry.transitions {
                writeln!(
                    w,
                    "{},{},{},{:X},{:X}",
                    entry.cycle, entry.state, t.reg, t.old, t.new
                )?;
            }
        }
        Ok(())
    }
}
